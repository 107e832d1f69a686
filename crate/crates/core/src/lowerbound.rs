//! Critical assignments and the factorial lower-bound certificate.
//!
//! For every permutation of the reader threads there is a full truth
//! assignment over the instance alphabet that satisfies all clauses
//! propositionally while hiding exactly one minimal theory conflict: the
//! value chain forced when the reads observe the writes in permutation
//! order. Distinct permutations hide distinct conflicts and no assignment
//! falsifies another permutation's conflict clause, so a refutation that
//! can only learn alphabet tautologies pays one learning step per
//! permutation. The certificate re-verifies all of this mechanically.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{encode, EncodeError, EncodedInstance, Encoding};
use crate::logic::{
    clause_satisfied, Atom, ClockTerm, EventId, Literal, LogicError, PLit, PropAssignment,
    SelVar, Sort, ValVar,
};
use crate::program::{build_fkp, ProgramError, ProgramStructure};
use crate::theory::{check_conjunction, eval_literal, DomainBounds, TheoryError, TheoryVerdict};
use crate::theory::FiniteModel;

/// A permutation of 1..=n, stored as the image sequence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Permutation, LowerBoundError> {
        let n = images.len() as u32;
        let mut seen = vec![false; images.len()];
        for &x in &images {
            if x == 0 || x > n || seen[(x - 1) as usize] {
                return Err(LowerBoundError::BadPermutation(format!("{images:?}")));
            }
            seen[(x - 1) as usize] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: u32) -> Permutation {
        Permutation((1..=n).collect())
    }

    pub fn n(&self) -> u32 {
        self.0.len() as u32
    }

    /// Image of j under the permutation; j is 1-based.
    pub fn image(&self, j: u32) -> u32 {
        self.0[(j - 1) as usize]
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    /// All permutations of 1..=n in lexicographic order.
    pub fn all(n: u32) -> Vec<Permutation> {
        (1..=n)
            .permutations(n as usize)
            .map(Permutation)
            .collect()
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// How thoroughly `verify_critical` establishes conflict minimality.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerifyMode {
    /// Check the per-literal witness models (fast, any n).
    WitnessOnly,
    /// Additionally enumerate every subset of the value fragment and check
    /// that the recorded conflict is the unique minimal unsatisfiable one.
    BruteForce,
}

impl VerifyMode {
    fn tag(&self) -> &'static str {
        match self {
            VerifyMode::WitnessOnly => "witness",
            VerifyMode::BruteForce => "brute-force",
        }
    }
}

/// A critical assignment together with everything needed to re-check it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CriticalAssignmentRecord {
    pub permutation: Permutation,
    /// Full assignment over the instance alphabet.
    pub assignment: PropAssignment,
    /// The hidden minimal theory conflict, n+2 positive value literals.
    pub conflict: Vec<Literal>,
    /// Model of everything the assignment asserts except the conflict.
    pub base: FiniteModel,
    /// Per conflict literal: a model of the asserted set minus that literal.
    pub witnesses: Vec<(Literal, FiniteModel)>,
}

#[derive(Debug, Error)]
pub enum LowerBoundError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("not a permutation: {0}")]
    BadPermutation(String),
    #[error("program shape not supported: {0}")]
    Shape(String),
    #[error("critical assignments need the standard bound n={n}, instance has {bound}")]
    NotStandardBound { bound: u32, n: u32 },
    #[error("verification failed for permutation {permutation}: {detail}")]
    Verify { permutation: String, detail: String },
    #[error("certification at n={n} is over the n<={max} budget")]
    BudgetExceeded { n: u32, max: u32 },
}

/// Largest n `certify_lower_bound` accepts; n! records are built and
/// cross-checked pairwise.
pub const MAX_CERTIFY_N: u32 = 5;

/// Subset enumeration cap for brute-force minimality checking.
const SUBSET_BUDGET_BITS: usize = 21;

struct Layout {
    init: EventId,
    /// Reader-thread reads, indexed by thread 1..=n.
    reads: Vec<EventId>,
    /// Reader-thread writes, indexed by thread 1..=n.
    writes: Vec<EventId>,
    assert_read: EventId,
}

impl Layout {
    /// Read event of thread pi(j); j is 1-based.
    fn read_at(&self, perm: &Permutation, j: u32) -> EventId {
        self.reads[(perm.image(j) - 1) as usize]
    }

    /// Write event of thread pi(j); j is 1-based.
    fn write_at(&self, perm: &Permutation, j: u32) -> EventId {
        self.writes[(perm.image(j) - 1) as usize]
    }
}

fn layout_of(p: &ProgramStructure) -> Result<Layout, LowerBoundError> {
    let init = p
        .init_write()
        .ok_or_else(|| LowerBoundError::Shape("no initializing write".to_string()))?
        .id;
    let mut reads = Vec::with_capacity(p.n as usize);
    let mut writes = Vec::with_capacity(p.n as usize);
    for thread in 1..=p.n {
        let r = p
            .reads()
            .find(|e| e.thread == thread)
            .ok_or_else(|| LowerBoundError::Shape(format!("thread {thread} has no read")))?;
        let w = p
            .writes()
            .find(|e| e.thread == thread)
            .ok_or_else(|| LowerBoundError::Shape(format!("thread {thread} has no write")))?;
        reads.push(r.id);
        writes.push(w.id);
    }
    Ok(Layout { init, reads, writes, assert_read: p.assertion.0 })
}

/// The hidden conflict for a permutation: the first read sees zero, each
/// later read sees the previous read's value plus one, the asserted read
/// continues the chain, and its value exceeds the bound. Unsatisfiable by
/// counting; dropping any literal admits a model.
fn conflict_literals(layout: &Layout, perm: &Permutation, bound: u32) -> Vec<Literal> {
    let n = perm.n();
    let rv = |id: EventId| ValVar(id);
    let mut lits = Vec::with_capacity(n as usize + 2);
    lits.push(Literal::pos(Atom::val_zero(rv(layout.read_at(perm, 1)))));
    for i in 1..n {
        lits.push(Literal::pos(Atom::val_succ(
            rv(layout.read_at(perm, i)),
            rv(layout.read_at(perm, i + 1)),
        )));
    }
    lits.push(Literal::pos(Atom::val_succ(
        rv(layout.read_at(perm, n)),
        rv(layout.assert_read),
    )));
    lits.push(Literal::pos(Atom::val_gt(rv(layout.assert_read), bound)));
    lits
}

/// The schedule model for a permutation: the interleaving that runs the
/// reader threads to completion in permutation order, each read observing
/// the previous thread's write. Reads all carry value 1, which makes every
/// value atom outside the conflict false.
fn base_model(
    layout: &Layout,
    perm: &Permutation,
    encoding: Encoding,
) -> FiniteModel {
    let n = perm.n();
    let mut m = FiniteModel::default();
    m.clock.insert(ClockTerm::Event(layout.init), 1);
    for j in 1..=n {
        m.clock
            .insert(ClockTerm::Event(layout.read_at(perm, j)), 2 * j as i64);
        m.clock
            .insert(ClockTerm::Event(layout.write_at(perm, j)), 2 * j as i64 + 1);
    }
    m.clock
        .insert(ClockTerm::Event(layout.assert_read), 2 * n as i64 + 2);

    m.sel.insert(SelVar(layout.init), 0);
    for j in 1..=n {
        m.sel.insert(SelVar(layout.write_at(perm, j)), j as i64);
        m.sel.insert(SelVar(layout.read_at(perm, j)), j as i64 - 1);
    }
    m.sel.insert(SelVar(layout.assert_read), n as i64);

    if encoding == Encoding::Quadratic {
        // Each read's supremum coincides with the write it observes.
        m.clock.insert(ClockTerm::Sup(layout.read_at(perm, 1)), 1);
        for j in 2..=n {
            m.clock
                .insert(ClockTerm::Sup(layout.read_at(perm, j)), 2 * j as i64 - 1);
        }
        m.clock
            .insert(ClockTerm::Sup(layout.assert_read), 2 * n as i64 + 1);
    }

    for j in 1..=n {
        m.val.insert(ValVar(layout.read_at(perm, j)), 1);
    }
    m.val.insert(ValVar(layout.assert_read), 1);
    m
}

/// Value maps showing that the conflict is minimal: table k satisfies every
/// asserted literal except conflict literal k.
fn witness_values(
    layout: &Layout,
    perm: &Permutation,
    k: usize,
) -> BTreeMap<ValVar, i64> {
    let n = perm.n();
    let mut vals = BTreeMap::new();
    let mut set = |id: EventId, v: i64| {
        vals.insert(ValVar(id), v);
    };
    if k == 0 {
        // Chain shifted up by one; nothing is zero.
        for j in 1..=n {
            set(layout.read_at(perm, j), j as i64);
        }
        set(layout.assert_read, n as i64 + 1);
    } else if k < n as usize {
        // Chain broken between positions k and k+1.
        let i = k as u32;
        for j in 1..=n {
            set(
                layout.read_at(perm, j),
                if j <= i { j as i64 - 1 } else { j as i64 },
            );
        }
        set(layout.assert_read, n as i64 + 1);
    } else if k == n as usize {
        // Chain intact but the asserted read skips ahead.
        for j in 1..=n {
            set(layout.read_at(perm, j), j as i64 - 1);
        }
        set(layout.assert_read, n as i64 + 1);
    } else {
        // Full chain; the asserted read stays at the bound.
        for j in 1..=n {
            set(layout.read_at(perm, j), j as i64 - 1);
        }
        set(layout.assert_read, n as i64);
    }
    vals
}

/// Build the critical assignment record for one permutation.
pub fn build_critical_assignment(
    p: &ProgramStructure,
    inst: &EncodedInstance,
    perm: &Permutation,
) -> Result<CriticalAssignmentRecord, LowerBoundError> {
    if inst.n != p.n || perm.n() != p.n {
        return Err(LowerBoundError::Shape(format!(
            "parameter mismatch: program n={}, instance n={}, permutation n={}",
            p.n,
            inst.n,
            perm.n()
        )));
    }
    if inst.bound != inst.n {
        return Err(LowerBoundError::NotStandardBound { bound: inst.bound, n: inst.n });
    }
    let layout = layout_of(p)?;
    let conflict = conflict_literals(&layout, perm, inst.bound);
    let base = base_model(&layout, perm, inst.encoding);

    let abstraction = inst.cnf.abstraction();
    let conflict_atoms: BTreeSet<Atom> = conflict.iter().map(|l| l.atom).collect();
    for atom in &conflict_atoms {
        if abstraction.var(atom).is_none() {
            return Err(LowerBoundError::Shape(format!(
                "conflict atom {atom} is not in the instance alphabet"
            )));
        }
    }

    let mut assignment = PropAssignment::new(abstraction.num_vars());
    for (var, atom) in abstraction.atoms().iter().enumerate() {
        let positive = match atom.sort() {
            Sort::Clock | Sort::Sel => eval_literal(&base, &Literal::pos(*atom))?,
            Sort::Val => conflict_atoms.contains(atom),
        };
        assignment.set(PLit { var: var as u32, positive })?;
    }

    let witnesses = conflict
        .iter()
        .enumerate()
        .map(|(k, lit)| {
            let mut model = base.clone();
            model.val = witness_values(&layout, perm, k);
            (*lit, model)
        })
        .collect();

    Ok(CriticalAssignmentRecord {
        permutation: perm.clone(),
        assignment,
        conflict,
        base,
        witnesses,
    })
}

/// Re-check a record against its instance: the assignment satisfies every
/// clause, the conflict is entailed, unsatisfiable, and minimal (each
/// witness models the asserted set minus its literal), and the base model
/// covers everything outside the conflict. `BruteForce` additionally
/// enumerates value-fragment subsets to confirm the conflict is the unique
/// minimal unsatisfiable one.
pub fn verify_critical(
    inst: &EncodedInstance,
    record: &CriticalAssignmentRecord,
    mode: VerifyMode,
) -> Result<(), LowerBoundError> {
    let fail = |detail: String| LowerBoundError::Verify {
        permutation: record.permutation.to_string(),
        detail,
    };
    let abstraction = inst.cnf.abstraction();
    let n = inst.n;
    let bounds = DomainBounds::for_params(n);

    if record.assignment.num_vars() != abstraction.num_vars() {
        return Err(fail("assignment size differs from the alphabet".to_string()));
    }
    if !record.assignment.is_full() {
        return Err(fail("assignment does not cover the alphabet".to_string()));
    }
    if record.conflict.len() != n as usize + 2 {
        return Err(fail(format!(
            "conflict has {} literals, expected {}",
            record.conflict.len(),
            n + 2
        )));
    }
    if record.witnesses.len() != record.conflict.len()
        || record
            .witnesses
            .iter()
            .zip(&record.conflict)
            .any(|((l, _), c)| l != c)
    {
        return Err(fail("witness list does not match the conflict".to_string()));
    }

    // Every clause is satisfied propositionally.
    for (i, pc) in inst.cnf.prop_clauses().into_iter().enumerate() {
        if !clause_satisfied(&pc, &record.assignment) {
            return Err(fail(format!("clause {i} is not satisfied")));
        }
    }

    // The conflict is inside the alphabet, asserted by the assignment, and
    // theory-unsatisfiable.
    let mut conflict_plits = Vec::with_capacity(record.conflict.len());
    for lit in &record.conflict {
        conflict_plits.push(abstraction.prop_lit(lit)?);
    }
    if !record.assignment.contains_all(&conflict_plits) {
        return Err(fail("assignment does not assert the conflict".to_string()));
    }
    if check_conjunction(&record.conflict, &bounds)?.is_sat() {
        return Err(fail("conflict is satisfiable".to_string()));
    }

    // The asserted literal set, concretized back from the assignment.
    let mut asserted = Vec::with_capacity(abstraction.num_vars());
    for plit in record.assignment.literals() {
        asserted.push(abstraction.concretize(plit)?);
    }
    let conflict_set: BTreeSet<Literal> = record.conflict.iter().copied().collect();

    // Base model: everything outside the conflict holds.
    for h in &asserted {
        if conflict_set.contains(h) {
            continue;
        }
        if !eval_literal(&record.base, h)? {
            return Err(fail(format!("base model violates asserted literal {h}")));
        }
    }

    // Witness k: everything except conflict literal k holds, and that
    // literal indeed fails.
    for (k, (dropped, model)) in record.witnesses.iter().enumerate() {
        for h in &asserted {
            let value = eval_literal(model, h)?;
            if h == dropped {
                if value {
                    return Err(fail(format!(
                        "witness {k} does not violate its dropped literal {dropped}"
                    )));
                }
            } else if !value {
                return Err(fail(format!("witness {k} violates asserted literal {h}")));
            }
        }
    }

    if mode == VerifyMode::BruteForce {
        brute_force_unique_conflict(&asserted, &conflict_set, &bounds, &fail)?;
    }
    Ok(())
}

/// Exhaustive minimality: the clock and selection parts of the asserted set
/// are satisfiable outright, so every unsatisfiable subset lives in the
/// value fragment; enumerate all of its subsets and demand that each
/// unsatisfiable one contains the conflict.
fn brute_force_unique_conflict(
    asserted: &[Literal],
    conflict_set: &BTreeSet<Literal>,
    bounds: &DomainBounds,
    fail: &impl Fn(String) -> LowerBoundError,
) -> Result<(), LowerBoundError> {
    let order_part: Vec<Literal> = asserted
        .iter()
        .copied()
        .filter(|l| l.atom.sort() != Sort::Val)
        .collect();
    if !check_conjunction(&order_part, bounds)?.is_sat() {
        return Err(fail(
            "clock and selection part of the assignment is unsatisfiable".to_string(),
        ));
    }
    let val_part: Vec<Literal> = asserted
        .iter()
        .copied()
        .filter(|l| l.atom.sort() == Sort::Val)
        .collect();
    if val_part.len() > SUBSET_BUDGET_BITS {
        return Err(LowerBoundError::Theory(TheoryError::BudgetExceeded {
            needed: 1u64 << val_part.len().min(63),
            budget: 1u64 << SUBSET_BUDGET_BITS,
        }));
    }
    for mask in 1u32..(1u32 << val_part.len()) {
        let subset: Vec<Literal> = val_part
            .iter()
            .enumerate()
            .filter(|(i, _)| (mask >> i) & 1 == 1)
            .map(|(_, l)| *l)
            .collect();
        if let TheoryVerdict::Unsat(_) = check_conjunction(&subset, bounds)? {
            let covers = conflict_set
                .iter()
                .all(|c| subset.iter().any(|s| s == c));
            if !covers {
                return Err(fail(format!(
                    "value fragment has an unsatisfiable subset that misses the conflict: {subset:?}"
                )));
            }
        }
    }
    Ok(())
}

/// One permutation's entry in the serialized certificate.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub permutation: Vec<u32>,
    pub conflict: Vec<String>,
}

/// Machine-checked lower-bound certificate: every permutation's record
/// verified, plus pairwise non-interference of the hidden conflicts.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub n: u32,
    pub encoding: String,
    pub bound: u32,
    pub atoms: usize,
    pub clauses: usize,
    pub mode: String,
    pub permutations: u64,
    pub noninterference_pairs: u64,
    pub t_learn_lower_bound: u64,
    pub entries: Vec<CertificateEntry>,
}

impl LowerBoundCertificate {
    pub fn render_report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "lower bound certificate: n={} encoding={} bound={}\n",
            self.n, self.encoding, self.bound
        ));
        out.push_str(&format!(
            "alphabet: {} atoms, {} clauses\n",
            self.atoms, self.clauses
        ));
        out.push_str(&format!(
            "verified {} critical assignments ({} mode), {} non-interference pairs\n",
            self.permutations, self.mode, self.noninterference_pairs
        ));
        out.push_str(&format!(
            "any refutation learning only alphabet tautologies needs >= {} learning steps\n",
            self.t_learn_lower_bound
        ));
        for e in &self.entries {
            let perm = e.permutation.iter().map(u32::to_string).join(" ");
            out.push_str(&format!("  ({perm}): {}\n", e.conflict.join(", ")));
        }
        out
    }
}

/// Build and verify critical assignments for every permutation, check
/// pairwise non-interference, and return the certificate.
pub fn certify_lower_bound(
    n: u32,
    encoding: Encoding,
    mode: VerifyMode,
) -> Result<LowerBoundCertificate, LowerBoundError> {
    if n > MAX_CERTIFY_N {
        return Err(LowerBoundError::BudgetExceeded { n, max: MAX_CERTIFY_N });
    }
    let program = build_fkp(n)?;
    let inst = encode(&program, encoding)?;
    let abstraction = inst.cnf.abstraction();

    let perms = Permutation::all(n);
    let mut records = Vec::with_capacity(perms.len());
    for perm in &perms {
        let record = build_critical_assignment(&program, &inst, perm)?;
        verify_critical(&inst, &record, mode)?;
        records.push(record);
    }

    // Non-interference: no record falsifies another permutation's conflict
    // clause, i.e. no assignment asserts another record's whole conflict.
    let prop_conflicts: Vec<Vec<PLit>> = records
        .iter()
        .map(|r| {
            r.conflict
                .iter()
                .map(|l| abstraction.prop_lit(l))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairs = 0u64;
    for (a, conflict) in prop_conflicts.iter().enumerate() {
        for (b, record) in records.iter().enumerate() {
            if a == b {
                continue;
            }
            pairs += 1;
            if record.assignment.contains_all(conflict) {
                return Err(LowerBoundError::Verify {
                    permutation: record.permutation.to_string(),
                    detail: format!(
                        "assignment asserts the conflict of permutation {}",
                        records[a].permutation
                    ),
                });
            }
        }
    }

    let entries = records
        .iter()
        .map(|r| CertificateEntry {
            permutation: r.permutation.images().to_vec(),
            conflict: r.conflict.iter().map(|l| l.to_string()).collect(),
        })
        .collect();
    Ok(LowerBoundCertificate {
        n,
        encoding: encoding.tag().to_string(),
        bound: inst.bound,
        atoms: abstraction.num_vars(),
        clauses: inst.cnf.clauses().len(),
        mode: mode.tag().to_string(),
        permutations: records.len() as u64,
        noninterference_pairs: pairs,
        t_learn_lower_bound: records.len() as u64,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode_cubic;

    fn instance(n: u32, encoding: Encoding) -> (ProgramStructure, EncodedInstance) {
        let p = build_fkp(n).unwrap();
        let inst = encode(&p, encoding).unwrap();
        (p, inst)
    }

    #[test]
    fn permutation_enumeration_is_complete_and_ordered() {
        let all = Permutation::all(3);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], Permutation::identity(3));
        let distinct: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn permutation_rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
        assert!(Permutation::new(vec![2, 1, 3]).is_ok());
    }

    #[test]
    fn conflict_has_n_plus_two_literals() {
        for n in 1..=5 {
            let p = build_fkp(n).unwrap();
            let layout = layout_of(&p).unwrap();
            for perm in Permutation::all(n) {
                let c = conflict_literals(&layout, &perm, n);
                assert_eq!(c.len(), n as usize + 2);
                assert!(matches!(c[0].atom, Atom::ValZero(_)));
                assert!(matches!(c[c.len() - 1].atom, Atom::ValGt(_, b) if b == n));
                assert!(c.iter().all(|l| l.positive));
            }
        }
    }

    #[test]
    fn conflicts_of_distinct_permutations_differ() {
        let p = build_fkp(3).unwrap();
        let layout = layout_of(&p).unwrap();
        let sets: BTreeSet<Vec<Literal>> = Permutation::all(3)
            .iter()
            .map(|perm| {
                let mut c = conflict_literals(&layout, perm, 3);
                c.sort();
                c
            })
            .collect();
        assert_eq!(sets.len(), 6);
    }

    #[test]
    fn witness_tables_for_identity_at_n2() {
        let (p, inst) = instance(2, Encoding::Cubic);
        let record =
            build_critical_assignment(&p, &inst, &Permutation::identity(2)).unwrap();
        let r1 = ValVar(EventId(1));
        let r2 = ValVar(EventId(3));
        let ra = ValVar(EventId(5));
        let tables: Vec<BTreeMap<ValVar, i64>> =
            record.witnesses.iter().map(|(_, m)| m.val.clone()).collect();
        assert_eq!(tables[0], BTreeMap::from([(r1, 1), (r2, 2), (ra, 3)]));
        assert_eq!(tables[1], BTreeMap::from([(r1, 0), (r2, 2), (ra, 3)]));
        assert_eq!(tables[2], BTreeMap::from([(r1, 0), (r2, 1), (ra, 3)]));
        assert_eq!(tables[3], BTreeMap::from([(r1, 0), (r2, 1), (ra, 2)]));
    }

    #[test]
    fn witness_tables_at_n1() {
        let (p, inst) = instance(1, Encoding::Cubic);
        let record =
            build_critical_assignment(&p, &inst, &Permutation::identity(1)).unwrap();
        assert_eq!(record.conflict.len(), 3);
        let r1 = ValVar(EventId(1));
        let ra = ValVar(EventId(3));
        let last = &record.witnesses[2].1;
        assert_eq!(last.val, BTreeMap::from([(r1, 0), (ra, 1)]));
    }

    #[test]
    fn all_permutations_verify_at_small_n() {
        for n in [2u32, 3] {
            for encoding in [Encoding::Cubic, Encoding::Quadratic] {
                let (p, inst) = instance(n, encoding);
                for perm in Permutation::all(n) {
                    let record = build_critical_assignment(&p, &inst, &perm).unwrap();
                    verify_critical(&inst, &record, VerifyMode::WitnessOnly).unwrap();
                }
            }
        }
    }

    #[test]
    fn brute_force_confirms_unique_minimal_conflict() {
        for encoding in [Encoding::Cubic, Encoding::Quadratic] {
            let (p, inst) = instance(2, encoding);
            for perm in Permutation::all(2) {
                let record = build_critical_assignment(&p, &inst, &perm).unwrap();
                verify_critical(&inst, &record, VerifyMode::BruteForce).unwrap();
            }
        }
    }

    #[test]
    fn corrupted_assignment_is_rejected() {
        let (p, inst) = instance(2, Encoding::Cubic);
        let good = build_critical_assignment(&p, &inst, &Permutation::identity(2)).unwrap();

        // Flipping the asserted-bound literal falsifies the unit clause.
        let mut bad = good.clone();
        let gt_var = inst
            .cnf
            .abstraction()
            .var(&Atom::val_gt(ValVar(EventId(5)), 2))
            .unwrap();
        bad.assignment.unset(gt_var);
        bad.assignment.set(PLit::neg(gt_var)).unwrap();
        assert!(matches!(
            verify_critical(&inst, &bad, VerifyMode::WitnessOnly),
            Err(LowerBoundError::Verify { .. })
        ));

        // Truncating the conflict breaks its shape.
        let mut bad = good.clone();
        bad.conflict.pop();
        bad.witnesses.pop();
        assert!(matches!(
            verify_critical(&inst, &bad, VerifyMode::WitnessOnly),
            Err(LowerBoundError::Verify { .. })
        ));

        // Tampering with a witness model is caught literal by literal.
        let mut bad = good.clone();
        bad.witnesses[0].1.val.insert(ValVar(EventId(5)), 0);
        assert!(matches!(
            verify_critical(&inst, &bad, VerifyMode::WitnessOnly),
            Err(LowerBoundError::Verify { .. })
        ));
    }

    #[test]
    fn mutated_bound_instances_are_refused() {
        let p = crate::program::build_fkp_with_bound(2, 1).unwrap();
        let inst = encode_cubic(&p).unwrap();
        assert!(matches!(
            build_critical_assignment(&p, &inst, &Permutation::identity(2)),
            Err(LowerBoundError::NotStandardBound { bound: 1, n: 2 })
        ));
    }

    #[test]
    fn certificates_count_factorially() {
        let cert = certify_lower_bound(2, Encoding::Cubic, VerifyMode::WitnessOnly).unwrap();
        assert_eq!(cert.permutations, 2);
        assert_eq!(cert.t_learn_lower_bound, 2);
        assert_eq!(cert.noninterference_pairs, 2);
        let cert = certify_lower_bound(3, Encoding::Quadratic, VerifyMode::WitnessOnly).unwrap();
        assert_eq!(cert.permutations, 6);
        assert_eq!(cert.t_learn_lower_bound, 6);
        assert_eq!(cert.noninterference_pairs, 30);
        assert_eq!(cert.entries.len(), 6);
    }

    #[test]
    fn certificate_round_trips_through_json() {
        let cert = certify_lower_bound(2, Encoding::Quadratic, VerifyMode::WitnessOnly).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: LowerBoundCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(cert, back);
        assert!(cert.render_report().contains("lower bound certificate: n=2"));
    }

    #[test]
    fn certification_budget_is_enforced() {
        assert!(matches!(
            certify_lower_bound(6, Encoding::Cubic, VerifyMode::WitnessOnly),
            Err(LowerBoundError::BudgetExceeded { n: 6, max: 5 })
        ));
    }
}
