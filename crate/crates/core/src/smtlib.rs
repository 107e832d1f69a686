//! SMT-LIB 2 benchmark emission and the external-solver harness.
//!
//! Instances are printed in four sort configurations: clocks and selectors
//! as `Real` or as bit-vectors, read values as `Int` or as bit-vectors.
//! Bit-vector configurations carry explicit domain caps so that modular
//! wraparound cannot change a verdict: value variables are capped below
//! `n + 2` (successors then never overflow) and the width must hold `3n + 4`
//! distinct points, enough for every clock, supremum, and selector. Integer
//! values get explicit nonnegativity instead, matching the counter domain.
//!
//! The harness side runs an external solver per file with a wall-clock
//! timeout, scrapes conflict and memory statistics with configurable regex
//! patterns, and renders the collected rows as a sorted CSV table.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;
use std::process::Stdio;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoder::{encode, EncodeError, EncodedInstance, Encoding};
use crate::logic::{Atom, Literal};
use crate::program::{build_fkp, build_fkp_with_bound, ProgramError};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("bit width {requested} cannot represent the instance; need at least {minimum}")]
    InsufficientBitWidth { requested: u32, minimum: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("bad stat pattern {pattern:?}: {detail}")]
    BadPattern { pattern: String, detail: String },
    #[error("pattern file is malformed: {0}")]
    BadPatternFile(String),
    #[error("solver command is empty")]
    EmptyCommand,
}

/// Sort assignment for the emitted file.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SmtConfig {
    RealClocksIntVal,
    RealClocksBvVal,
    BvClocksIntVal,
    BvClocksBvVal,
}

impl SmtConfig {
    pub const ALL: [SmtConfig; 4] = [
        SmtConfig::RealClocksIntVal,
        SmtConfig::RealClocksBvVal,
        SmtConfig::BvClocksIntVal,
        SmtConfig::BvClocksBvVal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SmtConfig::RealClocksIntVal => "real-clocks-int-val",
            SmtConfig::RealClocksBvVal => "real-clocks-bv-val",
            SmtConfig::BvClocksIntVal => "bv-clocks-int-val",
            SmtConfig::BvClocksBvVal => "bv-clocks-bv-val",
        }
    }

    /// Declared logic; mixed configurations leave it to the solver.
    pub fn logic(self) -> Option<&'static str> {
        match self {
            SmtConfig::RealClocksIntVal => Some("QF_LIRA"),
            SmtConfig::BvClocksBvVal => Some("QF_BV"),
            _ => None,
        }
    }

    fn bv_clocks(self) -> bool {
        matches!(self, SmtConfig::BvClocksIntVal | SmtConfig::BvClocksBvVal)
    }

    fn bv_vals(self) -> bool {
        matches!(self, SmtConfig::RealClocksBvVal | SmtConfig::BvClocksBvVal)
    }
}

impl std::str::FromStr for SmtConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<SmtConfig, String> {
        SmtConfig::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown configuration {s:?}"))
    }
}

/// Smallest width whose domain holds the `3n + 4` points an instance can
/// force apart.
pub fn min_bitwidth(n: u32) -> u32 {
    let needed = 3 * n as u64 + 4;
    let mut w = 1;
    while (1u64 << w) < needed {
        w += 1;
    }
    w
}

/// Default emission width: the minimum, but never below 8.
pub fn default_bitwidth(n: u32) -> u32 {
    min_bitwidth(n).max(8)
}

#[derive(Clone, Copy, Debug)]
pub struct EmitOptions {
    pub config: SmtConfig,
    /// Width for bit-vector sorts; `None` picks the default for `n`.
    pub bitwidth: Option<u32>,
    /// Pin write selectors to distinct constants instead of leaving the
    /// pairwise-distinctness clauses to do the work.
    pub pin_write_selectors: bool,
}

impl EmitOptions {
    pub fn for_config(config: SmtConfig) -> EmitOptions {
        EmitOptions { config, bitwidth: None, pin_write_selectors: false }
    }
}

struct Printer {
    bv_clocks: bool,
    bv_vals: bool,
    width: u32,
}

impl Printer {
    fn bv(&self, k: u32) -> String {
        format!("(_ bv{k} {})", self.width)
    }

    fn atom(&self, a: &Atom) -> String {
        match a {
            Atom::Lt(t1, t2) => {
                if self.bv_clocks {
                    format!("(bvult {t1} {t2})")
                } else {
                    format!("(< {t1} {t2})")
                }
            }
            Atom::ClockEq(t1, t2) => format!("(= {t1} {t2})"),
            Atom::SelEq(a, b) => format!("(= {a} {b})"),
            Atom::ValZero(v) => {
                if self.bv_vals {
                    format!("(= {v} {})", self.bv(0))
                } else {
                    format!("(= {v} 0)")
                }
            }
            Atom::ValSucc(u, v) => {
                if self.bv_vals {
                    format!("(= {v} (bvadd {u} {}))", self.bv(1))
                } else {
                    format!("(= {v} (+ {u} 1))")
                }
            }
            Atom::ValGt(v, k) => {
                if self.bv_vals {
                    format!("(bvugt {v} {})", self.bv(*k))
                } else {
                    format!("(> {v} {k})")
                }
            }
        }
    }

    fn literal(&self, l: &Literal) -> String {
        if l.positive {
            self.atom(&l.atom)
        } else {
            format!("(not {})", self.atom(&l.atom))
        }
    }
}

/// Print an instance as a complete SMT-LIB 2 script. Output is a pure
/// function of the instance and options, byte for byte.
pub fn emit_smt(inst: &EncodedInstance, opts: &EmitOptions) -> Result<String, SmtError> {
    let cfg = opts.config;
    let uses_bv = cfg.bv_clocks() || cfg.bv_vals();
    let width = match (uses_bv, opts.bitwidth) {
        (false, _) => 0,
        (true, None) => default_bitwidth(inst.n),
        (true, Some(w)) => {
            let minimum = min_bitwidth(inst.n);
            if w < minimum {
                return Err(SmtError::InsufficientBitWidth { requested: w, minimum });
            }
            w
        }
    };
    let printer = Printer { bv_clocks: cfg.bv_clocks(), bv_vals: cfg.bv_vals(), width };

    let mut clocks = BTreeSet::new();
    let mut sups = BTreeSet::new();
    let mut sels = BTreeSet::new();
    let mut vals = BTreeSet::new();
    let mut note_clock = |t: &crate::logic::ClockTerm| match t {
        crate::logic::ClockTerm::Event(id) => {
            clocks.insert(id.0);
        }
        crate::logic::ClockTerm::Sup(id) => {
            sups.insert(id.0);
        }
    };
    for atom in inst.cnf.abstraction().atoms() {
        match atom {
            Atom::Lt(a, b) | Atom::ClockEq(a, b) => {
                note_clock(a);
                note_clock(b);
            }
            Atom::SelEq(a, b) => {
                sels.insert(a.0 .0);
                sels.insert(b.0 .0);
            }
            Atom::ValZero(v) => {
                vals.insert(v.0 .0);
            }
            Atom::ValSucc(u, v) => {
                vals.insert(u.0 .0);
                vals.insert(v.0 .0);
            }
            Atom::ValGt(v, _) => {
                vals.insert(v.0 .0);
            }
        }
    }

    let clock_sort = if cfg.bv_clocks() {
        format!("(_ BitVec {width})")
    } else {
        "Real".to_string()
    };
    let val_sort = if cfg.bv_vals() {
        format!("(_ BitVec {width})")
    } else {
        "Int".to_string()
    };

    let mut out = String::new();
    out.push_str("; fkp2013 shared-counter benchmark\n");
    out.push_str(&format!(
        "; n={} bound={} encoding={} config={}",
        inst.n,
        inst.bound,
        inst.encoding.tag(),
        cfg.name()
    ));
    if uses_bv {
        out.push_str(&format!(" bitwidth={width}"));
    }
    out.push('\n');
    if let Some(logic) = cfg.logic() {
        out.push_str(&format!("(set-logic {logic})\n"));
    }
    let status = if inst.bound >= inst.n { "unsat" } else { "sat" };
    out.push_str(&format!("(set-info :status {status})\n"));

    for id in &clocks {
        out.push_str(&format!("(declare-const c{id} {clock_sort})\n"));
    }
    for id in &sups {
        out.push_str(&format!("(declare-const s{id} {clock_sort})\n"));
    }
    for id in &sels {
        out.push_str(&format!("(declare-const e{id} {clock_sort})\n"));
    }
    for id in &vals {
        out.push_str(&format!("(declare-const v{id} {val_sort})\n"));
    }

    if cfg.bv_vals() {
        let cap = inst.n + 2;
        for id in &vals {
            out.push_str(&format!("(assert (bvult v{id} {}))\n", printer.bv(cap)));
        }
    } else {
        for id in &vals {
            out.push_str(&format!("(assert (>= v{id} 0))\n"));
        }
    }

    if opts.pin_write_selectors {
        out.push_str("; write selectors pinned to distinct constants\n");
        for i in 0..=inst.n {
            let id = if i == 0 { 0 } else { 2 * i };
            let value = if cfg.bv_clocks() {
                printer.bv(i)
            } else {
                format!("{i}.0")
            };
            out.push_str(&format!("(assert (= e{id} {value}))\n"));
        }
    }

    for clause in inst.cnf.clauses() {
        let lits: Vec<String> = clause.literals().iter().map(|l| printer.literal(l)).collect();
        if lits.len() == 1 {
            out.push_str(&format!("(assert {})\n", lits[0]));
        } else {
            out.push_str(&format!("(assert (or {}))\n", lits.join(" ")));
        }
    }

    out.push_str("(check-sat)\n(exit)\n");
    Ok(out)
}

/// Canonical benchmark file name.
pub fn benchmark_name(config: SmtConfig, encoding: Encoding, n: u32) -> String {
    format!("fkp2013-{}-{}-N{}.smt2", config.name(), encoding.tag(), n)
}

/// Recover `(config, encoding tag, n)` from a benchmark file name.
pub fn parse_benchmark_name(name: &str) -> Option<(String, String, u32)> {
    let stem = name.strip_suffix(".smt2")?;
    let stem = stem.strip_prefix("fkp2013-")?;
    let (rest, n_part) = stem.rsplit_once('-')?;
    let n: u32 = n_part.strip_prefix('N')?.parse().ok()?;
    let (config, tag) = rest.rsplit_once('-')?;
    if tag != "E3" && tag != "E2" {
        return None;
    }
    Some((config.to_string(), tag.to_string(), n))
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub n_min: u32,
    pub n_max: u32,
    pub configs: Vec<SmtConfig>,
    pub encodings: Vec<Encoding>,
    pub mutate_bound: bool,
    pub bitwidth: Option<u32>,
    pub pin_write_selectors: bool,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions {
            n_min: 3,
            n_max: 9,
            configs: SmtConfig::ALL.to_vec(),
            encodings: vec![Encoding::Cubic, Encoding::Quadratic],
            mutate_bound: false,
            bitwidth: None,
            pin_write_selectors: false,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratedFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Write one file per `(n, encoding, config)` plus `MANIFEST.sha256` in
/// `sha256sum` format, sorted by file name. Returns the manifest entries.
pub fn generate_suite(dir: &Path, opts: &SuiteOptions) -> Result<Vec<GeneratedFile>, SmtError> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for n in opts.n_min..=opts.n_max {
        let program = if opts.mutate_bound {
            build_fkp_with_bound(n, n.saturating_sub(1))?
        } else {
            build_fkp(n)?
        };
        for encoding in &opts.encodings {
            let inst = encode(&program, *encoding)?;
            for config in &opts.configs {
                let emit = EmitOptions {
                    config: *config,
                    bitwidth: opts.bitwidth,
                    pin_write_selectors: opts.pin_write_selectors,
                };
                let text = emit_smt(&inst, &emit)?;
                let name = benchmark_name(*config, *encoding, n);
                std::fs::write(dir.join(&name), &text)?;
                entries.push(GeneratedFile {
                    name,
                    sha256: sha256_hex(text.as_bytes()),
                    bytes: text.len(),
                });
            }
        }
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    let mut manifest = String::new();
    for e in &entries {
        manifest.push_str(&format!("{}  {}\n", e.sha256, e.name));
    }
    std::fs::write(dir.join("MANIFEST.sha256"), manifest)?;
    Ok(entries)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Error,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown => "unknown",
            Verdict::Timeout => "timeout",
            Verdict::Error => "error",
        };
        f.write_str(s)
    }
}

/// Regex lists for scraping solver statistics; the first match wins.
pub struct StatPatterns {
    conflicts: Vec<Regex>,
    memory_mb: Vec<Regex>,
}

#[derive(Deserialize)]
struct PatternsFile {
    conflicts: Vec<String>,
    memory_mb: Vec<String>,
}

impl StatPatterns {
    /// Patterns for the usual suspects: z3 statistics blocks, cvc5 stat
    /// dumps, and MiniSat-style summary tables.
    pub fn defaults() -> StatPatterns {
        let conflicts = [
            r":conflicts\s+(\d+)",
            r"sat::conflicts\s*=\s*(\d+)",
            r"(?i)\bconflicts\s*:\s*(\d+)",
        ];
        let memory = [
            r":max-memory\s+([0-9]+(?:\.[0-9]+)?)",
            r"(?i)\bmemory used\s*:\s*([0-9]+(?:\.[0-9]+)?)\s*MB",
            r"(?i)\bmemory\b[^0-9]*([0-9]+(?:\.[0-9]+)?)\s*MB",
        ];
        StatPatterns::from_lists(&conflicts, &memory).expect("default patterns compile")
    }

    pub fn from_lists<S: AsRef<str>>(conflicts: &[S], memory_mb: &[S]) -> Result<StatPatterns, SmtError> {
        let compile = |src: &[S]| -> Result<Vec<Regex>, SmtError> {
            src.iter()
                .map(|p| {
                    Regex::new(p.as_ref()).map_err(|e| SmtError::BadPattern {
                        pattern: p.as_ref().to_string(),
                        detail: e.to_string(),
                    })
                })
                .collect()
        };
        Ok(StatPatterns { conflicts: compile(conflicts)?, memory_mb: compile(memory_mb)? })
    }

    /// Load overrides from a JSON file with `conflicts` and `memory_mb`
    /// string lists.
    pub fn from_json_file(path: &Path) -> Result<StatPatterns, SmtError> {
        let text = std::fs::read_to_string(path)?;
        let file: PatternsFile =
            serde_json::from_str(&text).map_err(|e| SmtError::BadPatternFile(e.to_string()))?;
        StatPatterns::from_lists(&file.conflicts, &file.memory_mb)
    }

    fn conflicts_in(&self, output: &str) -> Option<u64> {
        for re in &self.conflicts {
            if let Some(c) = re.captures(output) {
                if let Ok(v) = c[1].parse() {
                    return Some(v);
                }
            }
        }
        None
    }

    fn memory_in(&self, output: &str) -> Option<f64> {
        for re in &self.memory_mb {
            if let Some(c) = re.captures(output) {
                if let Ok(v) = c[1].parse() {
                    return Some(v);
                }
            }
        }
        None
    }
}

impl Default for StatPatterns {
    fn default() -> StatPatterns {
        StatPatterns::defaults()
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub elapsed: Duration,
    pub conflicts: Option<u64>,
    pub memory_mb: Option<f64>,
    /// Combined stdout and stderr.
    pub output: String,
}

fn parse_verdict(output: &str) -> Verdict {
    for line in output.lines() {
        match line.trim() {
            "sat" => return Verdict::Sat,
            "unsat" => return Verdict::Unsat,
            "unknown" => return Verdict::Unknown,
            _ => {}
        }
    }
    Verdict::Error
}

/// Run `command file` with a wall-clock timeout, killing the process when
/// it expires. The verdict comes from the output, not the exit code, since
/// several solvers signal results through nonzero exits.
pub fn run_solver(
    command: &[String],
    file: &Path,
    timeout: Duration,
    patterns: &StatPatterns,
) -> Result<RunOutcome, SmtError> {
    let (head, tail) = command.split_first().ok_or(SmtError::EmptyCommand)?;
    let mut cmd = std::process::Command::new(head);
    cmd.args(tail)
        .arg(file)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    #[cfg(unix)]
    {
        // Own process group, so a timeout kill reaches solver children too.
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn()?;
    let start = Instant::now();
    let mut out_pipe = child.stdout.take().expect("stdout is piped");
    let mut err_pipe = child.stderr.take().expect("stderr is piped");
    let out_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_thread = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });
    let mut timed_out = false;
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if start.elapsed() >= timeout {
            #[cfg(unix)]
            unsafe {
                libc::killpg(child.id() as i32, libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    let elapsed = start.elapsed();
    let mut output = out_thread.join().unwrap_or_default();
    let err_text = err_thread.join().unwrap_or_default();
    if !err_text.is_empty() {
        output.push('\n');
        output.push_str(&err_text);
    }
    let verdict = if timed_out { Verdict::Timeout } else { parse_verdict(&output) };
    Ok(RunOutcome {
        verdict,
        elapsed,
        conflicts: patterns.conflicts_in(&output),
        memory_mb: patterns.memory_in(&output),
        output,
    })
}

/// One line of the statistics table.
#[derive(Clone, Debug)]
pub struct StatsRow {
    pub solver: String,
    pub config: String,
    pub encoding: String,
    pub n: u32,
    pub conflicts: Option<u64>,
    pub elapsed_s: f64,
    pub mem_mb: Option<f64>,
    pub verdict: String,
}

/// Render rows as CSV, sorted by solver, configuration, encoding, and size.
pub fn write_stats_csv(rows: &[StatsRow]) -> String {
    let mut sorted: Vec<&StatsRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.solver, &a.config, &a.encoding, a.n).cmp(&(&b.solver, &b.config, &b.encoding, b.n))
    });
    let mut out = String::from("solver,config,encoding,N,conflicts,elapsed_s,mem_mb,verdict\n");
    for r in sorted {
        let conflicts = r.conflicts.map(|c| c.to_string()).unwrap_or_default();
        let mem = r.mem_mb.map(|m| format!("{m:.1}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{},{}\n",
            r.solver, r.config, r.encoding, r.n, conflicts, r.elapsed_s, mem, r.verdict
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::build_fkp;

    fn instance(n: u32, encoding: Encoding) -> EncodedInstance {
        encode(&build_fkp(n).unwrap(), encoding).unwrap()
    }

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    #[test]
    fn declarations_cover_the_alphabet() {
        let text = emit_smt(
            &instance(3, Encoding::Cubic),
            &EmitOptions::for_config(SmtConfig::RealClocksIntVal),
        )
        .unwrap();
        assert_eq!(count(&text, "(declare-const c"), 8);
        assert_eq!(count(&text, "(declare-const s"), 0);
        assert_eq!(count(&text, "(declare-const e"), 8);
        assert_eq!(count(&text, "(declare-const v"), 4);
        assert!(text.contains("(set-logic QF_LIRA)"));
        assert!(text.contains("(set-info :status unsat)"));
        assert!(text.ends_with("(check-sat)\n(exit)\n"));

        let text = emit_smt(
            &instance(3, Encoding::Quadratic),
            &EmitOptions::for_config(SmtConfig::RealClocksIntVal),
        )
        .unwrap();
        assert_eq!(count(&text, "(declare-const s"), 4);
    }

    #[test]
    fn assertion_count_matches_clauses_plus_domain() {
        let inst = instance(3, Encoding::Cubic);
        let text = emit_smt(&inst, &EmitOptions::for_config(SmtConfig::BvClocksBvVal)).unwrap();
        // One assert per clause plus one cap per value variable.
        assert_eq!(count(&text, "(assert "), inst.cnf.clauses().len() + 4);
        assert!(text.contains("(set-logic QF_BV)"));
        assert!(text.contains("(bvult"));
        assert!(text.contains("(bvadd"));
        assert!(text.contains("(_ bv5 8)"));
        assert!(!text.contains("(set-logic QF_LIRA)"));
    }

    #[test]
    fn mixed_configs_leave_the_logic_unset() {
        for config in [SmtConfig::RealClocksBvVal, SmtConfig::BvClocksIntVal] {
            let text =
                emit_smt(&instance(3, Encoding::Cubic), &EmitOptions::for_config(config)).unwrap();
            assert!(!text.contains("(set-logic"), "{}", config.name());
        }
    }

    #[test]
    fn integer_values_are_nonnegative() {
        let text = emit_smt(
            &instance(3, Encoding::Cubic),
            &EmitOptions::for_config(SmtConfig::BvClocksIntVal),
        )
        .unwrap();
        assert_eq!(count(&text, "(assert (>= v"), 4);
        assert!(text.contains("(declare-const v1 Int)"));
        assert!(text.contains("(declare-const c0 (_ BitVec 8))"));
    }

    #[test]
    fn emission_is_deterministic() {
        for config in SmtConfig::ALL {
            let a = emit_smt(&instance(4, Encoding::Quadratic), &EmitOptions::for_config(config))
                .unwrap();
            let b = emit_smt(&instance(4, Encoding::Quadratic), &EmitOptions::for_config(config))
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn narrow_widths_are_refused() {
        let inst = instance(3, Encoding::Cubic);
        let opts = EmitOptions {
            config: SmtConfig::BvClocksBvVal,
            bitwidth: Some(3),
            pin_write_selectors: false,
        };
        match emit_smt(&inst, &opts) {
            Err(SmtError::InsufficientBitWidth { requested: 3, minimum: 4 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        let opts = EmitOptions { bitwidth: Some(4), ..opts };
        let text = emit_smt(&inst, &opts).unwrap();
        assert!(text.contains("(_ BitVec 4)"));
    }

    #[test]
    fn default_width_has_a_floor() {
        assert_eq!(min_bitwidth(3), 4);
        assert_eq!(default_bitwidth(3), 8);
        assert_eq!(min_bitwidth(9), 5);
        assert_eq!(default_bitwidth(9), 8);
        assert_eq!(min_bitwidth(100), 9);
        assert_eq!(default_bitwidth(100), 9);
    }

    #[test]
    fn pinned_selectors_emit_distinct_constants() {
        let inst = instance(2, Encoding::Cubic);
        let opts = EmitOptions {
            config: SmtConfig::RealClocksIntVal,
            bitwidth: None,
            pin_write_selectors: true,
        };
        let text = emit_smt(&inst, &opts).unwrap();
        assert!(text.contains("(assert (= e0 0.0))"));
        assert!(text.contains("(assert (= e2 1.0))"));
        assert!(text.contains("(assert (= e4 2.0))"));
    }

    #[test]
    fn mutated_instances_declare_sat_status() {
        let inst = encode(&build_fkp_with_bound(3, 2).unwrap(), Encoding::Cubic).unwrap();
        let text = emit_smt(&inst, &EmitOptions::for_config(SmtConfig::RealClocksIntVal)).unwrap();
        assert!(text.contains("(set-info :status sat)"));
        assert!(text.contains("(> v7 2)"));
    }

    #[test]
    fn benchmark_names_round_trip() {
        let name = benchmark_name(SmtConfig::BvClocksIntVal, Encoding::Quadratic, 7);
        assert_eq!(name, "fkp2013-bv-clocks-int-val-E2-N7.smt2");
        let (config, tag, n) = parse_benchmark_name(&name).unwrap();
        assert_eq!(config, "bv-clocks-int-val");
        assert_eq!(tag, "E2");
        assert_eq!(n, 7);
        assert!(parse_benchmark_name("fkp2013-foo.smt2").is_none());
        assert!(parse_benchmark_name("other-real-clocks-int-val-E3-N3.smt2").is_none());
    }

    #[test]
    fn suite_writes_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SuiteOptions { n_min: 3, n_max: 3, ..SuiteOptions::default() };
        let entries = generate_suite(dir.path(), &opts).unwrap();
        assert_eq!(entries.len(), 8);
        assert!(entries.windows(2).all(|w| w[0].name < w[1].name));
        let manifest = std::fs::read_to_string(dir.path().join("MANIFEST.sha256")).unwrap();
        assert_eq!(manifest.lines().count(), 8);
        for e in &entries {
            let bytes = std::fs::read(dir.path().join(&e.name)).unwrap();
            assert_eq!(sha256_hex(&bytes), e.sha256);
            assert!(manifest.contains(&format!("{}  {}", e.sha256, e.name)));
        }
    }

    #[test]
    fn suite_hashes_are_stable_across_runs() {
        let opts = SuiteOptions { n_min: 3, n_max: 4, ..SuiteOptions::default() };
        let a_dir = tempfile::tempdir().unwrap();
        let b_dir = tempfile::tempdir().unwrap();
        let a = generate_suite(a_dir.path(), &opts).unwrap();
        let b = generate_suite(b_dir.path(), &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_rows_are_sorted_under_a_fixed_header() {
        let rows = vec![
            StatsRow {
                solver: "z3".into(),
                config: "real-clocks-int-val".into(),
                encoding: "E3".into(),
                n: 5,
                conflicts: Some(120),
                elapsed_s: 0.5,
                mem_mb: Some(17.25),
                verdict: "unsat".into(),
            },
            StatsRow {
                solver: "z3".into(),
                config: "real-clocks-int-val".into(),
                encoding: "E3".into(),
                n: 3,
                conflicts: None,
                elapsed_s: 0.125,
                mem_mb: None,
                verdict: "timeout".into(),
            },
        ];
        let csv = write_stats_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "solver,config,encoding,N,conflicts,elapsed_s,mem_mb,verdict");
        assert_eq!(lines[1], "z3,real-clocks-int-val,E3,3,,0.125,,timeout");
        assert_eq!(lines[2], "z3,real-clocks-int-val,E3,5,120,0.500,17.2,unsat");
    }

    #[cfg(unix)]
    fn fake_solver(dir: &Path, body: &str) -> std::path::PathBuf {
        use std::os::unix::fs::PermissionsExt;
        let path = dir.join("solver.sh");
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    #[cfg(unix)]
    #[test]
    fn runner_parses_verdicts_and_stats() {
        let dir = tempfile::tempdir().unwrap();
        let bench = dir.path().join("in.smt2");
        std::fs::write(&bench, "(check-sat)\n").unwrap();
        let solver = fake_solver(
            dir.path(),
            "echo unsat\necho ':conflicts 42'\necho 'Memory used           : 12.50 MB' >&2",
        );
        let cmd = vec![solver.to_string_lossy().into_owned()];
        let out = run_solver(&cmd, &bench, Duration::from_secs(5), &StatPatterns::defaults())
            .unwrap();
        assert_eq!(out.verdict, Verdict::Unsat);
        assert_eq!(out.conflicts, Some(42));
        assert_eq!(out.memory_mb, Some(12.5));
    }

    #[cfg(unix)]
    #[test]
    fn runner_kills_on_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let bench = dir.path().join("in.smt2");
        std::fs::write(&bench, "(check-sat)\n").unwrap();
        let solver = fake_solver(dir.path(), "sleep 5\necho sat");
        let cmd = vec![solver.to_string_lossy().into_owned()];
        let start = Instant::now();
        let out = run_solver(&cmd, &bench, Duration::from_millis(300), &StatPatterns::defaults())
            .unwrap();
        assert_eq!(out.verdict, Verdict::Timeout);
        assert!(start.elapsed() < Duration::from_secs(4));
    }

    #[cfg(unix)]
    #[test]
    fn runner_reports_unrecognized_output_as_error() {
        let dir = tempfile::tempdir().unwrap();
        let bench = dir.path().join("in.smt2");
        std::fs::write(&bench, "(check-sat)\n").unwrap();
        let solver = fake_solver(dir.path(), "echo hello");
        let cmd = vec![solver.to_string_lossy().into_owned()];
        let out = run_solver(&cmd, &bench, Duration::from_secs(5), &StatPatterns::defaults())
            .unwrap();
        assert_eq!(out.verdict, Verdict::Error);
        assert_eq!(out.conflicts, None);
    }

    #[test]
    fn pattern_files_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patterns.json");
        std::fs::write(
            &path,
            r#"{ "conflicts": ["clashes=(\\d+)"], "memory_mb": ["rss=([0-9.]+)"] }"#,
        )
        .unwrap();
        let patterns = StatPatterns::from_json_file(&path).unwrap();
        assert_eq!(patterns.conflicts_in("clashes=7"), Some(7));
        assert_eq!(patterns.memory_in("rss=3.5"), Some(3.5));
        assert_eq!(patterns.conflicts_in(":conflicts 42"), None);

        let bad = StatPatterns::from_lists(&["("], &[]);
        assert!(matches!(bad, Err(SmtError::BadPattern { .. })));
    }
}
