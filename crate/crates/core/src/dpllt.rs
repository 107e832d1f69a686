//! Instrumented DPLL(T) engine over a fixed atom alphabet, with checkable
//! refutation traces.
//!
//! The engine is a small clause-learning SAT solver whose theory interface
//! is deliberately restricted: when the propositional assignment is theory
//! inconsistent it may only learn the propositional form of a tautology
//! over the instance's own atoms (a minimized conflict, negated). Every
//! resolution performed during conflict analysis is recorded, so a
//! refutation is an explicit step list: input clauses, resolvents, and
//! learned tautologies, ending in the empty clause. `check_proof` replays a
//! trace against the instance with no access to the solver's internals and
//! counts the tautology-learning steps, which the lower-bound certificate
//! shows cannot be fewer than n factorial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoder::EncodedInstance;
use crate::logic::{
    resolve, CnfFormula, Literal, LogicError, PLit, PropAssignment, PropClause, Var,
};
use crate::theory::{
    check_conjunction, minimize_conflict, DomainBounds, FiniteModel, TheoryError, TheoryVerdict,
};

/// One step of a refutation trace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProofStep {
    /// Clause at this index in the instance clause list.
    Input(usize),
    /// Resolvent of two earlier steps on the pivot variable, which must
    /// occur positively in the first antecedent and negatively in the
    /// second.
    Res(usize, usize, Var),
    /// A learned alphabet tautology: `clause` is the propositional form of
    /// `lemma`, whose literal-wise negation is theory-unsatisfiable.
    TLearn { clause: PropClause, lemma: Vec<Literal> },
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ProofTrace {
    pub steps: Vec<ProofStep>,
}

#[derive(Debug, Error)]
pub enum DplltError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("trace line {line}: {what}")]
    Trace { line: usize, what: String },
    #[error("internal defect: {0}")]
    Defect(String),
}

fn defect(what: impl Into<String>) -> DplltError {
    DplltError::Defect(what.into())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Seed for the initial variable activities.
    pub seed: u64,
    /// Give up with `Unknown` after this many conflicts.
    pub max_conflicts: Option<u64>,
    /// Also run the theory check at every propagation fixpoint instead of
    /// only at full assignments.
    pub eager_theory_checks: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SolveStats {
    pub decisions: u64,
    pub propositional_conflicts: u64,
    pub t_learn_count: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    /// Refuted; the trace replays to the empty clause.
    Unsat(ProofTrace),
    /// A full assignment whose asserted literals have a theory model.
    Sat { assignment: PropAssignment, model: FiniteModel },
    /// Conflict budget exhausted.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub outcome: SolveOutcome,
    pub stats: SolveStats,
}

struct ClauseRec {
    /// Working literal order; the first two positions are watched.
    lits: Vec<PLit>,
    trace_idx: usize,
}

struct Engine<'a> {
    cnf: &'a CnfFormula,
    bounds: DomainBounds,
    opts: SolveOptions,
    clauses: Vec<ClauseRec>,
    /// Clause indices watching each literal, keyed by `PLit::code`.
    watches: Vec<Vec<usize>>,
    assign: PropAssignment,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail_pos: Vec<usize>,
    trail: Vec<PLit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    pending_units: Vec<(PLit, usize)>,
    trace: Vec<ProofStep>,
    stats: SolveStats,
}

impl<'a> Engine<'a> {
    fn new(cnf: &'a CnfFormula, bounds: DomainBounds, opts: SolveOptions) -> Result<Engine<'a>, DplltError> {
        let nv = cnf.abstraction().num_vars();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let activity: Vec<f64> = (0..nv).map(|_| rng.gen::<f64>()).collect();
        let mut eng = Engine {
            cnf,
            bounds,
            opts,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * nv],
            assign: PropAssignment::new(nv),
            level: vec![0; nv],
            reason: vec![None; nv],
            trail_pos: vec![usize::MAX; nv],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            pending_units: Vec::new(),
            trace: Vec::new(),
            stats: SolveStats::default(),
        };
        for (i, pc) in cnf.prop_clauses().into_iter().enumerate() {
            if pc.is_empty() {
                return Err(defect("input clause is empty"));
            }
            eng.trace.push(ProofStep::Input(i));
            let ci = eng.add_clause(pc.literals().to_vec(), i);
            if pc.len() == 1 {
                eng.pending_units.push((pc.literals()[0], ci));
            }
        }
        Ok(eng)
    }

    fn current_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Add a clause; the two literals that were assigned last (or are still
    /// unassigned) go into the watched positions.
    fn add_clause(&mut self, mut lits: Vec<PLit>, trace_idx: usize) -> usize {
        let ci = self.clauses.len();
        if lits.len() >= 2 {
            lits.sort_by_key(|l| {
                match self.assign.value(l.var) {
                    None => (0u8, 0usize),
                    Some(_) => (1u8, usize::MAX - self.trail_pos[l.var as usize]),
                }
            });
            self.watches[lits[0].code()].push(ci);
            self.watches[lits[1].code()].push(ci);
        }
        self.clauses.push(ClauseRec { lits, trace_idx });
        ci
    }

    fn enqueue(&mut self, lit: PLit, reason: Option<usize>) -> Result<(), DplltError> {
        self.assign.set(lit).map_err(|e| defect(format!("enqueue clash: {e}")))?;
        let v = lit.var as usize;
        self.level[v] = self.current_level();
        self.reason[v] = reason;
        self.trail_pos[v] = self.trail.len();
        self.trail.push(lit);
        Ok(())
    }

    fn backjump(&mut self, to_level: u32) {
        let keep = self.trail_lim[to_level as usize];
        while self.trail.len() > keep {
            let p = self.trail.pop().expect("trail is long enough");
            let v = p.var as usize;
            self.assign.unset(p.var);
            self.reason[v] = None;
            self.trail_pos[v] = usize::MAX;
        }
        self.trail_lim.truncate(to_level as usize);
        self.qhead = self.trail.len();
    }

    /// Unit propagation with two watched literals. Returns a falsified
    /// clause index on conflict.
    fn propagate(&mut self) -> Result<Option<usize>, DplltError> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p.negated();
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            'clauses: while i < ws.len() {
                let ci = ws[i];
                if self.clauses[ci].lits[0] == false_lit {
                    self.clauses[ci].lits.swap(0, 1);
                }
                let first = self.clauses[ci].lits[0];
                if self.assign.lit_value(first) == Some(true) {
                    i += 1;
                    continue;
                }
                for k in 2..self.clauses[ci].lits.len() {
                    let cand = self.clauses[ci].lits[k];
                    if self.assign.lit_value(cand) != Some(false) {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[cand.code()].push(ci);
                        ws.swap_remove(i);
                        continue 'clauses;
                    }
                }
                match self.assign.lit_value(first) {
                    None => {
                        self.enqueue(first, Some(ci))?;
                        i += 1;
                    }
                    Some(true) => {
                        i += 1;
                    }
                    Some(false) => {
                        self.watches[false_lit.code()] = ws;
                        return Ok(Some(ci));
                    }
                }
            }
            self.watches[false_lit.code()] = ws;
        }
        Ok(None)
    }

    fn decide(&mut self) -> Result<(), DplltError> {
        let mut best: Option<Var> = None;
        for v in 0..self.assign.num_vars() as Var {
            if self.assign.value(v).is_some() {
                continue;
            }
            if best.is_none_or(|b| self.activity[v as usize] > self.activity[b as usize]) {
                best = Some(v);
            }
        }
        let var = best.ok_or_else(|| defect("decision requested on a full assignment"))?;
        self.stats.decisions += 1;
        self.trail_lim.push(self.trail.len());
        self.enqueue(PLit { var, positive: false }, None)
    }

    fn canonical(&self, ci: usize) -> PropClause {
        PropClause::new(self.clauses[ci].lits.clone())
    }

    fn bump_clause_vars(&mut self, ci: usize) {
        for k in 0..self.clauses[ci].lits.len() {
            let v = self.clauses[ci].lits[k].var as usize;
            self.activity[v] += self.var_inc;
            if self.activity[v] > 1e100 {
                for a in &mut self.activity {
                    *a *= 1e-100;
                }
                self.var_inc *= 1e-100;
            }
        }
    }

    /// Resolve `c` with the reason of its deepest falsified trail literal,
    /// recording the step. Returns the resolvent and its trace index.
    fn resolve_deepest(
        &mut self,
        c: PropClause,
        c_idx: usize,
    ) -> Result<(PropClause, usize), DplltError> {
        let p = *self
            .trail
            .iter()
            .rev()
            .find(|p| c.contains(p.negated()))
            .ok_or_else(|| defect("conflict clause is not falsified by the trail"))?;
        let ri = self.reason[p.var as usize]
            .ok_or_else(|| defect("resolution reached a literal without a reason"))?;
        self.bump_clause_vars(ri);
        let rc = self.canonical(ri);
        let rt = self.clauses[ri].trace_idx;
        let (resolvent, i1, i2) = if p.positive {
            (resolve(&rc, &c, p.var)?, rt, c_idx)
        } else {
            (resolve(&c, &rc, p.var)?, c_idx, rt)
        };
        self.trace.push(ProofStep::Res(i1, i2, p.var));
        Ok((resolvent, self.trace.len() - 1))
    }

    /// Resolve the level-zero conflict down to the empty clause.
    fn finalize_empty(&mut self, conflict_ci: usize) -> Result<(), DplltError> {
        let mut c = self.canonical(conflict_ci);
        let mut c_idx = self.clauses[conflict_ci].trace_idx;
        while !c.is_empty() {
            (c, c_idx) = self.resolve_deepest(c, c_idx)?;
        }
        Ok(())
    }

    /// First unique implication point analysis. Returns true when the
    /// instance is refuted (empty clause derived).
    fn handle_conflict(&mut self, conflict_ci: usize) -> Result<bool, DplltError> {
        self.bump_clause_vars(conflict_ci);
        let m = self.clauses[conflict_ci]
            .lits
            .iter()
            .map(|l| self.level[l.var as usize])
            .max()
            .ok_or_else(|| defect("empty conflict clause in the database"))?;
        if m == 0 {
            self.finalize_empty(conflict_ci)?;
            return Ok(true);
        }
        if m < self.current_level() {
            // Theory clauses can be falsified below the current level;
            // nothing deeper contributed to the conflict.
            self.backjump(m);
        }
        let mut c = self.canonical(conflict_ci);
        let mut c_idx = self.clauses[conflict_ci].trace_idx;
        let mut changed = false;
        loop {
            let at_m = c
                .literals()
                .iter()
                .filter(|l| self.level[l.var as usize] == m)
                .count();
            if at_m <= 1 {
                break;
            }
            (c, c_idx) = self.resolve_deepest(c, c_idx)?;
            changed = true;
        }
        let uip = *c
            .literals()
            .iter()
            .find(|l| self.level[l.var as usize] == m)
            .ok_or_else(|| defect("analysis lost the asserting literal"))?;
        let back = c
            .literals()
            .iter()
            .filter(|l| **l != uip)
            .map(|l| self.level[l.var as usize])
            .max()
            .unwrap_or(0);
        self.backjump(back);
        let db_idx = if changed {
            self.add_clause(c.literals().to_vec(), c_idx)
        } else {
            conflict_ci
        };
        self.var_inc *= 1.0 / 0.95;
        self.enqueue(uip, Some(db_idx))?;
        Ok(false)
    }

    /// Check the asserted literals against the theory. Consistent trails
    /// give a model; inconsistent ones learn the negated minimized conflict
    /// and return the new falsified clause.
    fn theory_check(&mut self) -> Result<Result<FiniteModel, usize>, DplltError> {
        let abstraction = self.cnf.abstraction();
        let mut asserted = Vec::with_capacity(self.trail.len());
        for plit in &self.trail {
            asserted.push(abstraction.concretize(*plit)?);
        }
        match check_conjunction(&asserted, &self.bounds)? {
            TheoryVerdict::Sat(model) => Ok(Ok(model)),
            TheoryVerdict::Unsat(_) => {
                let core = minimize_conflict(&asserted, &self.bounds)?;
                let lemma: Vec<Literal> = core.iter().map(|l| l.negated()).collect();
                let mut plits = Vec::with_capacity(lemma.len());
                for l in &lemma {
                    plits.push(abstraction.prop_lit(l)?);
                }
                let clause = PropClause::new(plits);
                self.trace.push(ProofStep::TLearn { clause: clause.clone(), lemma });
                self.stats.t_learn_count += 1;
                let ci = self.add_clause(clause.literals().to_vec(), self.trace.len() - 1);
                Ok(Err(ci))
            }
        }
    }

    fn over_conflict_budget(&self) -> bool {
        match self.opts.max_conflicts {
            Some(limit) => self.stats.propositional_conflicts + self.stats.t_learn_count > limit,
            None => false,
        }
    }

    fn result(&mut self, outcome: SolveOutcome) -> SolveResult {
        SolveResult { outcome, stats: self.stats }
    }

    fn run(&mut self) -> Result<SolveResult, DplltError> {
        for (lit, ci) in std::mem::take(&mut self.pending_units) {
            match self.assign.lit_value(lit) {
                Some(true) => {}
                Some(false) => {
                    self.stats.propositional_conflicts += 1;
                    self.finalize_empty(ci)?;
                    let trace = ProofTrace { steps: std::mem::take(&mut self.trace) };
                    return Ok(self.result(SolveOutcome::Unsat(trace)));
                }
                None => self.enqueue(lit, Some(ci))?,
            }
        }
        loop {
            let conflict = if let Some(ci) = self.propagate()? {
                self.stats.propositional_conflicts += 1;
                Some(ci)
            } else if self.assign.is_full() || self.opts.eager_theory_checks {
                match self.theory_check()? {
                    Ok(model) => {
                        if self.assign.is_full() {
                            self.check_all_clauses_satisfied()?;
                            let assignment = self.assign.clone();
                            return Ok(self.result(SolveOutcome::Sat { assignment, model }));
                        }
                        self.decide()?;
                        None
                    }
                    Err(ci) => Some(ci),
                }
            } else {
                self.decide()?;
                None
            };
            if let Some(ci) = conflict {
                if self.over_conflict_budget() {
                    return Ok(self.result(SolveOutcome::Unknown));
                }
                if self.handle_conflict(ci)? {
                    let trace = ProofTrace { steps: std::mem::take(&mut self.trace) };
                    return Ok(self.result(SolveOutcome::Unsat(trace)));
                }
            }
        }
    }

    fn check_all_clauses_satisfied(&self) -> Result<(), DplltError> {
        for rec in &self.clauses {
            if !rec.lits.iter().any(|l| self.assign.lit_value(*l) == Some(true)) {
                return Err(defect("full assignment leaves a clause unsatisfied"));
            }
        }
        Ok(())
    }
}

/// Solve a formula directly; `bounds` scope the theory oracle.
pub fn solve_cnf(
    cnf: &CnfFormula,
    bounds: DomainBounds,
    opts: SolveOptions,
) -> Result<SolveResult, DplltError> {
    Engine::new(cnf, bounds, opts)?.run()
}

/// Solve an encoded instance.
pub fn solve(inst: &EncodedInstance, opts: SolveOptions) -> Result<SolveResult, DplltError> {
    solve_cnf(&inst.cnf, DomainBounds::for_params(inst.n), opts)
}

/// Replay report. `t_learn_count` counts the learned-tautology steps of a
/// valid trace; an invalid trace names its first offending step.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CheckReport {
    pub valid: bool,
    pub steps: usize,
    pub t_learn_count: u64,
    pub first_error: Option<(usize, String)>,
}

/// Replay a trace against a formula: inputs must exist, resolutions are
/// recomputed, learned clauses must abstract their lemmas, lemma negations
/// must be theory-unsatisfiable, and the last clause must be empty.
pub fn check_proof_cnf(
    cnf: &CnfFormula,
    bounds: &DomainBounds,
    trace: &ProofTrace,
) -> Result<CheckReport, DplltError> {
    let inputs = cnf.prop_clauses();
    let abstraction = cnf.abstraction();
    let mut derived: Vec<PropClause> = Vec::with_capacity(trace.steps.len());
    let mut t_learn_count = 0u64;
    let mut first_error: Option<(usize, String)> = None;
    'steps: for (k, step) in trace.steps.iter().enumerate() {
        let mut fail = |what: String| first_error = Some((k, what));
        let clause = match step {
            ProofStep::Input(i) => {
                if *i >= inputs.len() {
                    fail(format!("input index {i} is out of range"));
                    break 'steps;
                }
                inputs[*i].clone()
            }
            ProofStep::Res(i, j, pivot) => {
                if *i >= k || *j >= k {
                    fail("antecedent is not an earlier step".to_string());
                    break 'steps;
                }
                match resolve(&derived[*i], &derived[*j], *pivot) {
                    Ok(c) => c,
                    Err(e) => {
                        fail(format!("resolution rejected: {e}"));
                        break 'steps;
                    }
                }
            }
            ProofStep::TLearn { clause, lemma } => {
                if lemma.is_empty() {
                    fail("lemma is empty".to_string());
                    break 'steps;
                }
                let mut plits = Vec::with_capacity(lemma.len());
                for l in lemma {
                    match abstraction.prop_lit(l) {
                        Ok(p) => plits.push(p),
                        Err(e) => {
                            fail(format!("lemma leaves the instance alphabet: {e}"));
                            break 'steps;
                        }
                    }
                }
                if PropClause::new(plits) != *clause {
                    fail("clause is not the propositional form of the lemma".to_string());
                    break 'steps;
                }
                let negation: Vec<Literal> = lemma.iter().map(|l| l.negated()).collect();
                if check_conjunction(&negation, bounds)?.is_sat() {
                    fail("lemma is not a theory tautology".to_string());
                    break 'steps;
                }
                t_learn_count += 1;
                clause.clone()
            }
        };
        derived.push(clause);
    }
    if first_error.is_none() {
        match derived.last() {
            None => first_error = Some((0, "trace is empty".to_string())),
            Some(last) if !last.is_empty() => {
                first_error = Some((trace.steps.len() - 1, "final clause is not empty".to_string()))
            }
            Some(_) => {}
        }
    }
    Ok(CheckReport {
        valid: first_error.is_none(),
        steps: trace.steps.len(),
        t_learn_count,
        first_error,
    })
}

/// Replay a trace against an encoded instance.
pub fn check_proof(inst: &EncodedInstance, trace: &ProofTrace) -> Result<CheckReport, DplltError> {
    check_proof_cnf(&inst.cnf, &DomainBounds::for_params(inst.n), trace)
}

fn plit_text(p: PLit) -> String {
    if p.positive {
        format!("{}", p.var + 1)
    } else {
        format!("-{}", p.var + 1)
    }
}

/// Serialize a trace. Step references, input indices, and variables are
/// one-based; `t` lines carry the lemma literals, a semicolon, and the
/// clause literals; `#` starts a comment.
pub fn write_trace(trace: &ProofTrace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        match step {
            ProofStep::Input(i) => out.push_str(&format!("i {}\n", i + 1)),
            ProofStep::Res(i, j, pivot) => {
                out.push_str(&format!("r {} {} {}\n", i + 1, j + 1, pivot + 1))
            }
            ProofStep::TLearn { clause, lemma } => {
                out.push('t');
                for l in lemma {
                    out.push_str(&format!(" {l}"));
                }
                out.push_str(" ;");
                for p in clause.literals() {
                    out.push_str(&format!(" {}", plit_text(*p)));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Parse the textual trace format produced by `write_trace`.
pub fn parse_trace(text: &str) -> Result<ProofTrace, DplltError> {
    let mut steps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |what: String| DplltError::Trace { line, what };
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let kind = toks.next().expect("non-empty line has a first token");
        let step = match kind {
            "i" => {
                let i = parse_ref(toks.next(), line, "input index")?;
                ProofStep::Input(i)
            }
            "r" => {
                let i = parse_ref(toks.next(), line, "first antecedent")?;
                let j = parse_ref(toks.next(), line, "second antecedent")?;
                let v = parse_ref(toks.next(), line, "pivot variable")? as Var;
                ProofStep::Res(i, j, v)
            }
            "t" => {
                let rest: Vec<&str> = toks.by_ref().collect();
                let sep = rest
                    .iter()
                    .position(|t| *t == ";")
                    .ok_or_else(|| err("learn line has no ';' separator".to_string()))?;
                let mut lemma = Vec::with_capacity(sep);
                for t in &rest[..sep] {
                    lemma.push(t.parse::<Literal>().map_err(|e| err(e.to_string()))?);
                }
                let mut plits = Vec::with_capacity(rest.len() - sep - 1);
                for t in &rest[sep + 1..] {
                    let n: i64 = t
                        .parse()
                        .map_err(|_| err(format!("bad clause literal {t:?}")))?;
                    if n == 0 || n.unsigned_abs() > Var::MAX as u64 + 1 {
                        return Err(err(format!("clause literal {n} is out of range")));
                    }
                    plits.push(PLit { var: (n.unsigned_abs() - 1) as Var, positive: n > 0 });
                }
                ProofStep::TLearn { clause: PropClause::new(plits), lemma }
            }
            other => return Err(err(format!("unknown step kind {other:?}"))),
        };
        if toks.next().is_some() && kind != "t" {
            return Err(err("trailing tokens".to_string()));
        }
        steps.push(step);
    }
    Ok(ProofTrace { steps })
}

fn parse_ref(tok: Option<&str>, line: usize, what: &str) -> Result<usize, DplltError> {
    let tok = tok.ok_or_else(|| DplltError::Trace {
        line,
        what: format!("missing {what}"),
    })?;
    let n: usize = tok.parse().map_err(|_| DplltError::Trace {
        line,
        what: format!("bad {what} {tok:?}"),
    })?;
    if n == 0 {
        return Err(DplltError::Trace {
            line,
            what: format!("{what} must be positive"),
        });
    }
    Ok(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode, Encoding};
    use crate::logic::{build_abstraction, Atom, Clause, ClockTerm, EventId};
    use crate::program::{build_fkp, build_fkp_with_bound};

    fn lt(a: u32, b: u32) -> Atom {
        Atom::lt(ClockTerm::Event(EventId(a)), ClockTerm::Event(EventId(b)))
    }

    fn cnf_of(clauses: Vec<Vec<Literal>>) -> CnfFormula {
        build_abstraction(
            clauses
                .into_iter()
                .map(|ls| Clause::new(ls).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn wide_bounds() -> DomainBounds {
        DomainBounds { clock_ranks: 16, sel_values: 16, val_max: 16 }
    }

    #[test]
    fn contradictory_units_refute_without_learning() {
        let cnf = cnf_of(vec![
            vec![Literal::pos(lt(0, 1))],
            vec![Literal::neg(lt(0, 1))],
        ]);
        let res = solve_cnf(&cnf, wide_bounds(), SolveOptions::default()).unwrap();
        let SolveOutcome::Unsat(trace) = res.outcome else {
            panic!("expected unsat");
        };
        assert_eq!(trace.steps.len(), 3);
        assert!(matches!(trace.steps[2], ProofStep::Res(_, _, 0)));
        assert_eq!(res.stats.t_learn_count, 0);
        let report = check_proof_cnf(&cnf, &wide_bounds(), &trace).unwrap();
        assert!(report.valid, "{:?}", report.first_error);
        assert_eq!(report.t_learn_count, 0);
    }

    #[test]
    fn propositional_square_needs_decisions() {
        let a = || lt(0, 1);
        let b = || lt(2, 3);
        let cnf = cnf_of(vec![
            vec![Literal::pos(a()), Literal::pos(b())],
            vec![Literal::pos(a()), Literal::neg(b())],
            vec![Literal::neg(a()), Literal::pos(b())],
            vec![Literal::neg(a()), Literal::neg(b())],
        ]);
        let res = solve_cnf(&cnf, wide_bounds(), SolveOptions::default()).unwrap();
        let SolveOutcome::Unsat(trace) = res.outcome else {
            panic!("expected unsat");
        };
        assert!(res.stats.decisions >= 1);
        assert_eq!(res.stats.t_learn_count, 0);
        let report = check_proof_cnf(&cnf, &wide_bounds(), &trace).unwrap();
        assert!(report.valid, "{:?}", report.first_error);
    }

    #[test]
    fn standard_instances_refute_with_theory_learning() {
        for encoding in [Encoding::Cubic, Encoding::Quadratic] {
            let inst = encode(&build_fkp(2).unwrap(), encoding).unwrap();
            let res = solve(&inst, SolveOptions::default()).unwrap();
            let SolveOutcome::Unsat(trace) = res.outcome else {
                panic!("expected unsat for {encoding:?}");
            };
            assert!(
                res.stats.t_learn_count >= 2,
                "learned {} tautologies",
                res.stats.t_learn_count
            );
            let report = check_proof(&inst, &trace).unwrap();
            assert!(report.valid, "{encoding:?}: {:?}", report.first_error);
            assert_eq!(report.t_learn_count, res.stats.t_learn_count);
        }
    }

    #[test]
    fn weakened_bound_admits_a_model() {
        for encoding in [Encoding::Cubic, Encoding::Quadratic] {
            let inst = encode(&build_fkp_with_bound(2, 1).unwrap(), encoding).unwrap();
            let res = solve(&inst, SolveOptions::default()).unwrap();
            let SolveOutcome::Sat { assignment, model } = res.outcome else {
                panic!("expected sat for {encoding:?}");
            };
            assert!(assignment.is_full());
            // The model realizes the asserted read above the weakened bound.
            let asserted = Literal::pos(Atom::val_gt(
                crate::logic::ValVar(EventId(5)),
                1,
            ));
            assert!(crate::theory::eval_literal(&model, &asserted).unwrap());
        }
    }

    #[test]
    fn same_seed_reproduces_the_run() {
        let inst = encode(&build_fkp(2).unwrap(), Encoding::Cubic).unwrap();
        let opts = SolveOptions { seed: 7, ..SolveOptions::default() };
        let a = solve(&inst, opts).unwrap();
        let b = solve(&inst, opts).unwrap();
        let (SolveOutcome::Unsat(ta), SolveOutcome::Unsat(tb)) = (&a.outcome, &b.outcome) else {
            panic!("expected unsat");
        };
        assert_eq!(ta, tb);
        assert_eq!(a.stats, b.stats);
        let c = solve(&inst, SolveOptions { seed: 8, ..opts }).unwrap();
        let SolveOutcome::Unsat(tc) = c.outcome else {
            panic!("expected unsat");
        };
        assert!(check_proof(&inst, &tc).unwrap().valid);
    }

    #[test]
    fn eager_checks_still_refute() {
        let inst = encode(&build_fkp(2).unwrap(), Encoding::Quadratic).unwrap();
        let opts = SolveOptions { eager_theory_checks: true, ..SolveOptions::default() };
        let res = solve(&inst, opts).unwrap();
        let SolveOutcome::Unsat(trace) = res.outcome else {
            panic!("expected unsat");
        };
        assert!(check_proof(&inst, &trace).unwrap().valid);
    }

    #[test]
    fn conflict_budget_yields_unknown() {
        let inst = encode(&build_fkp(2).unwrap(), Encoding::Cubic).unwrap();
        let opts = SolveOptions { max_conflicts: Some(0), ..SolveOptions::default() };
        let res = solve(&inst, opts).unwrap();
        assert!(matches!(res.outcome, SolveOutcome::Unknown));
    }

    #[test]
    fn trace_text_round_trips() {
        let inst = encode(&build_fkp(2).unwrap(), Encoding::Cubic).unwrap();
        let res = solve(&inst, SolveOptions::default()).unwrap();
        let SolveOutcome::Unsat(trace) = res.outcome else {
            panic!("expected unsat");
        };
        let text = write_trace(&trace);
        let back = parse_trace(&text).unwrap();
        assert_eq!(trace, back);
        let commented = format!("# replayed\n\n{text}");
        assert_eq!(parse_trace(&commented).unwrap(), trace);
    }

    #[test]
    fn parser_rejects_malformed_lines() {
        assert!(matches!(
            parse_trace("q 1\n"),
            Err(DplltError::Trace { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("i 0\n"),
            Err(DplltError::Trace { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace("i 1\nr 1 1\n"),
            Err(DplltError::Trace { line: 2, .. })
        ));
        assert!(matches!(
            parse_trace("t vz(v1) -3\n"),
            Err(DplltError::Trace { line: 1, .. })
        ));
    }

    #[test]
    fn checker_localizes_mutations() {
        let inst = encode(&build_fkp(2).unwrap(), Encoding::Cubic).unwrap();
        let res = solve(&inst, SolveOptions::default()).unwrap();
        let SolveOutcome::Unsat(trace) = res.outcome else {
            panic!("expected unsat");
        };

        // Dropping the final step leaves a dangling non-empty clause.
        let mut t = trace.clone();
        t.steps.pop();
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, t.steps.len() - 1);

        // Swapping antecedents breaks the pivot orientation.
        let mut t = trace.clone();
        let k = t
            .steps
            .iter()
            .position(|s| matches!(s, ProofStep::Res(..)))
            .unwrap();
        let ProofStep::Res(i, j, v) = t.steps[k] else { unreachable!() };
        t.steps[k] = ProofStep::Res(j, i, v);
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, k);

        // Flipping a lemma literal without touching the clause is caught.
        let mut t = trace.clone();
        let k = t
            .steps
            .iter()
            .position(|s| matches!(s, ProofStep::TLearn { .. }))
            .unwrap();
        if let ProofStep::TLearn { lemma, .. } = &mut t.steps[k] {
            lemma[0] = lemma[0].negated();
        }
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, k);

        // A lemma whose negation is satisfiable is not a tautology.
        let mut t = trace.clone();
        let lemma = vec![Literal::neg(Atom::val_zero(crate::logic::ValVar(EventId(1))))];
        let clause = PropClause::new(vec![inst
            .cnf
            .abstraction()
            .prop_lit(&lemma[0])
            .unwrap()]);
        t.steps.insert(0, ProofStep::TLearn { clause, lemma });
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, 0);

        // Input indices outside the instance are rejected.
        let mut t = trace.clone();
        t.steps.insert(0, ProofStep::Input(inst.cnf.clauses().len()));
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, 0);

        // Forward references are rejected.
        let t = ProofTrace { steps: vec![ProofStep::Res(0, 1, 0)] };
        let r = check_proof(&inst, &t).unwrap();
        assert!(!r.valid);
        assert_eq!(r.first_error.as_ref().unwrap().0, 0);
    }

    #[test]
    fn empty_trace_is_invalid() {
        let inst = encode(&build_fkp(1).unwrap(), Encoding::Cubic).unwrap();
        let r = check_proof(&inst, &ProofTrace::default()).unwrap();
        assert!(!r.valid);
    }

    #[test]
    fn checker_rejects_pivot_tautology_refutations() {
        // {a, b} and {-a, -b} are satisfiable. Resolving them gives the
        // tautology {b, -b}; resolving that against itself on b must not
        // pass off an empty clause.
        let a = || lt(0, 1);
        let b = || lt(2, 3);
        let cnf = cnf_of(vec![
            vec![Literal::pos(a()), Literal::pos(b())],
            vec![Literal::neg(a()), Literal::neg(b())],
        ]);
        let trace = ProofTrace {
            steps: vec![
                ProofStep::Input(0),
                ProofStep::Input(1),
                ProofStep::Res(0, 1, 0),
                ProofStep::Res(2, 2, 1),
            ],
        };
        let r = check_proof_cnf(&cnf, &wide_bounds(), &trace).unwrap();
        assert!(!r.valid);
        let (at, what) = r.first_error.unwrap();
        assert_eq!(at, 3);
        assert!(what.contains("resolution rejected"), "{what}");
    }

    #[test]
    fn traces_never_leave_the_instance_alphabet() {
        for encoding in [Encoding::Cubic, Encoding::Quadratic] {
            let inst = encode(&build_fkp(2).unwrap(), encoding).unwrap();
            let res = solve(&inst, SolveOptions::default()).unwrap();
            let SolveOutcome::Unsat(trace) = res.outcome else {
                panic!("expected unsat");
            };
            let map = inst.cnf.abstraction();
            for step in &trace.steps {
                match step {
                    ProofStep::Input(i) => assert!(*i < inst.cnf.clauses().len()),
                    ProofStep::Res(_, _, pivot) => {
                        assert!((*pivot as usize) < map.num_vars());
                    }
                    ProofStep::TLearn { lemma, .. } => {
                        for l in lemma {
                            assert!(map.prop_lit(l).is_ok(), "{l} is not an instance atom");
                        }
                    }
                }
            }
        }
    }
}
