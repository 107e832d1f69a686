//! Translation of a program structure into partial-order CNF over the input
//! alphabet, in two variants: the cubic encoding (from-read ordering axioms)
//! and the quadratic encoding (per-read supremum variables).
//!
//! Both encodings assume a single address, trivial guards, and a total clock
//! order, so non-strict comparisons are expressed as negated strict ones.
//! Clause emission order is fixed per family and the abstraction map is
//! deterministic, so encoding the same structure twice yields identical
//! instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{
    build_abstraction, Atom, Clause, ClockTerm, CnfFormula, EventId, Literal, LogicError, SelVar,
    ValVar,
};
use crate::program::{
    validate_structure, Event, Guard, ProgramStructure, StructureDefect,
    WriteValueTerm,
};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Encoding {
    Cubic,
    Quadratic,
}

impl Encoding {
    /// Short tag used in benchmark file names.
    pub fn tag(&self) -> &'static str {
        match self {
            Encoding::Cubic => "E3",
            Encoding::Quadratic => "E2",
        }
    }
}

/// Constraint family a clause belongs to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ConstraintFamily {
    /// Program order: unit strict-order clause per generator pair.
    Ppo,
    /// Writes have distinct clocks and distinct selection values.
    Ww,
    /// Reads never share a clock with a write.
    Rw,
    /// Cubic read-from: selection implies ordering and value transfer.
    Rf3,
    /// Cubic from-read: a read is ordered before writes after its source.
    Fr,
    /// Quadratic read-from: selection pins the supremum, ordering, and value.
    Rf2,
    /// Quadratic supremum: writes at or before a read stay at or before its
    /// supremum.
    Sup,
    /// Every read selects some write (totality of read-from).
    RfTo,
    /// Negated assertion on the checker read.
    Assert,
}

impl ConstraintFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintFamily::Ppo => "PPO",
            ConstraintFamily::Ww => "WW",
            ConstraintFamily::Rw => "RW",
            ConstraintFamily::Rf3 => "RF3",
            ConstraintFamily::Fr => "FR",
            ConstraintFamily::Rf2 => "RF2",
            ConstraintFamily::Sup => "SUP",
            ConstraintFamily::RfTo => "RF_TO",
            ConstraintFamily::Assert => "ASSERT",
        }
    }
}

/// A CNF instance with per-clause family tags.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EncodedInstance {
    pub n: u32,
    pub encoding: Encoding,
    /// Assertion bound the instance negates (n for standard instances).
    pub bound: u32,
    pub cnf: CnfFormula,
    /// Family of each clause, parallel to `cnf.clauses()`.
    pub families: Vec<ConstraintFamily>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("structure is invalid: {0:?}")]
    InvalidStructure(Vec<StructureDefect>),
    #[error("event {0} has a non-trivial guard, which the encoder does not support")]
    NonTrivialGuard(EventId),
    #[error("encoding supports a single shared address, found {0} addresses")]
    MultiAddress(usize),
    #[error("family {family:?} does not occur in the {encoding:?} encoding")]
    FamilyNotInEncoding { family: ConstraintFamily, encoding: Encoding },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

fn wsel(w: &Event) -> SelVar {
    SelVar(w.id)
}

fn rsel(r: &Event) -> SelVar {
    SelVar(r.id)
}

fn rval(r: &Event) -> ValVar {
    ValVar(r.id)
}

fn clock(e: &Event) -> ClockTerm {
    ClockTerm::Event(e.id)
}

fn sup(r: &Event) -> ClockTerm {
    ClockTerm::Sup(r.id)
}

fn check_encodable(p: &ProgramStructure) -> Result<(), EncodeError> {
    let defects = validate_structure(p);
    if !defects.is_empty() {
        return Err(EncodeError::InvalidStructure(defects));
    }
    if let Some(e) = p.events.iter().find(|e| e.guard != Guard::Trivial) {
        return Err(EncodeError::NonTrivialGuard(e.id));
    }
    let mut addresses: Vec<u32> = p.events.iter().map(|e| e.address).collect();
    addresses.sort_unstable();
    addresses.dedup();
    if addresses.len() != 1 {
        return Err(EncodeError::MultiAddress(addresses.len()));
    }
    Ok(())
}

/// The value literal a read obtains when it selects the given write.
fn value_transfer(w: &Event, r: &Event) -> Literal {
    match w.value.expect("validated write carries a value") {
        WriteValueTerm::ConstZero => Literal::pos(Atom::val_zero(rval(r))),
        WriteValueTerm::SuccOfRead(src) => {
            Literal::pos(Atom::val_succ(ValVar(src), rval(r)))
        }
    }
}

/// Emit the clauses of one constraint family, in the fixed order.
pub fn encode_family(
    p: &ProgramStructure,
    family: ConstraintFamily,
) -> Result<Vec<Clause>, EncodeError> {
    check_encodable(p)?;
    let writes: Vec<&Event> = p.writes().collect();
    let reads: Vec<&Event> = p.reads().collect();
    let mut out = Vec::new();
    let mut push = |lits: Vec<Literal>| -> Result<(), EncodeError> {
        out.push(Clause::new(lits)?);
        Ok(())
    };
    match family {
        ConstraintFamily::Ppo => {
            for &(a, b) in &p.ppo {
                push(vec![Literal::pos(Atom::lt(
                    ClockTerm::Event(a),
                    ClockTerm::Event(b),
                ))])?;
            }
        }
        ConstraintFamily::Ww => {
            for (i, w) in writes.iter().enumerate() {
                for w2 in &writes[i + 1..] {
                    push(vec![Literal::neg(Atom::clock_eq(clock(w), clock(w2)))])?;
                    push(vec![Literal::neg(Atom::sel_eq(wsel(w), wsel(w2)))])?;
                }
            }
        }
        ConstraintFamily::Rw => {
            for w in &writes {
                for r in &reads {
                    push(vec![Literal::neg(Atom::clock_eq(clock(w), clock(r)))])?;
                }
            }
        }
        ConstraintFamily::Rf3 => {
            for w in &writes {
                for r in &reads {
                    push(vec![
                        Literal::neg(Atom::sel_eq(wsel(w), rsel(r))),
                        Literal::pos(Atom::lt(clock(w), clock(r))),
                    ])?;
                }
            }
            for w in &writes {
                if w.value != Some(WriteValueTerm::ConstZero) {
                    continue;
                }
                for r in &reads {
                    push(vec![
                        Literal::neg(Atom::sel_eq(wsel(w), rsel(r))),
                        value_transfer(w, r),
                    ])?;
                }
            }
            for w in &writes {
                if !matches!(w.value, Some(WriteValueTerm::SuccOfRead(_))) {
                    continue;
                }
                for r in &reads {
                    push(vec![
                        Literal::neg(Atom::sel_eq(wsel(w), rsel(r))),
                        value_transfer(w, r),
                    ])?;
                }
            }
        }
        ConstraintFamily::Fr => {
            for w in &writes {
                for w2 in &writes {
                    if w.id == w2.id {
                        continue;
                    }
                    for r in &reads {
                        push(vec![
                            Literal::neg(Atom::sel_eq(wsel(w), rsel(r))),
                            Literal::neg(Atom::lt(clock(w), clock(w2))),
                            Literal::pos(Atom::lt(clock(r), clock(w2))),
                        ])?;
                    }
                }
            }
        }
        ConstraintFamily::Rf2 => {
            for w in &writes {
                for r in &reads {
                    let sel = Literal::neg(Atom::sel_eq(wsel(w), rsel(r)));
                    push(vec![sel, Literal::pos(Atom::clock_eq(clock(w), sup(r)))])?;
                    push(vec![sel, Literal::pos(Atom::lt(clock(w), clock(r)))])?;
                    push(vec![sel, value_transfer(w, r)])?;
                }
            }
        }
        ConstraintFamily::Sup => {
            for w in &writes {
                for r in &reads {
                    push(vec![
                        Literal::pos(Atom::lt(clock(r), clock(w))),
                        Literal::neg(Atom::lt(sup(r), clock(w))),
                    ])?;
                }
            }
        }
        ConstraintFamily::RfTo => {
            for r in &reads {
                let lits = writes
                    .iter()
                    .map(|w| Literal::pos(Atom::sel_eq(wsel(w), rsel(r))))
                    .collect();
                push(lits)?;
            }
        }
        ConstraintFamily::Assert => {
            let (ar, bound) = p.assertion;
            push(vec![Literal::pos(Atom::val_gt(ValVar(ar), bound))])?;
        }
    }
    Ok(out)
}

const CUBIC_FAMILIES: [ConstraintFamily; 7] = [
    ConstraintFamily::Ppo,
    ConstraintFamily::Ww,
    ConstraintFamily::Rw,
    ConstraintFamily::Rf3,
    ConstraintFamily::Fr,
    ConstraintFamily::RfTo,
    ConstraintFamily::Assert,
];

const QUADRATIC_FAMILIES: [ConstraintFamily; 7] = [
    ConstraintFamily::Ppo,
    ConstraintFamily::Ww,
    ConstraintFamily::Rw,
    ConstraintFamily::Rf2,
    ConstraintFamily::Sup,
    ConstraintFamily::RfTo,
    ConstraintFamily::Assert,
];

/// The families of an encoding, in emission order.
pub fn families_of(encoding: Encoding) -> &'static [ConstraintFamily] {
    match encoding {
        Encoding::Cubic => &CUBIC_FAMILIES,
        Encoding::Quadratic => &QUADRATIC_FAMILIES,
    }
}

/// Encode a structure under the chosen encoding.
pub fn encode(p: &ProgramStructure, encoding: Encoding) -> Result<EncodedInstance, EncodeError> {
    let mut clauses = Vec::new();
    let mut families = Vec::new();
    for &family in families_of(encoding) {
        let emitted = encode_family(p, family)?;
        families.extend(std::iter::repeat_n(family, emitted.len()));
        clauses.extend(emitted);
    }
    let cnf = build_abstraction(clauses)?;
    Ok(EncodedInstance {
        n: p.n,
        encoding,
        bound: p.assertion.1,
        cnf,
        families,
    })
}

/// Cubic encoding of a structure.
pub fn encode_cubic(p: &ProgramStructure) -> Result<EncodedInstance, EncodeError> {
    encode(p, Encoding::Cubic)
}

/// Quadratic encoding of a structure.
pub fn encode_quadratic(p: &ProgramStructure) -> Result<EncodedInstance, EncodeError> {
    encode(p, Encoding::Quadratic)
}

/// Per-family clause counts of an instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ClauseStats {
    pub total: usize,
    pub per_family: BTreeMap<ConstraintFamily, usize>,
}

pub fn clause_stats(inst: &EncodedInstance) -> ClauseStats {
    let mut per_family = BTreeMap::new();
    for f in &inst.families {
        *per_family.entry(*f).or_insert(0usize) += 1;
    }
    ClauseStats { total: inst.families.len(), per_family }
}

/// Closed-form clause count of a family for the standard program at
/// parameter `n`, or None if the family is absent from the encoding.
pub fn expected_family_count(
    encoding: Encoding,
    family: ConstraintFamily,
    n: u64,
) -> Option<u64> {
    if !families_of(encoding).contains(&family) {
        return None;
    }
    let w = n + 1; // writes: init plus one per incrementer
    let r = n + 1; // reads: one per incrementer plus the checker
    Some(match family {
        ConstraintFamily::Ppo => 2 * n + 1,
        ConstraintFamily::Ww => w * (w - 1), // two units per unordered pair
        ConstraintFamily::Rw => w * r,
        ConstraintFamily::Rf3 => w * r + r + n * r,
        ConstraintFamily::Fr => w * (w - 1) * r,
        ConstraintFamily::Rf2 => 3 * w * r,
        ConstraintFamily::Sup => w * r,
        ConstraintFamily::RfTo => r,
        ConstraintFamily::Assert => 1,
    })
}

/// Check an instance's per-family counts against the closed forms.
pub fn stats_match_closed_forms(inst: &EncodedInstance) -> Result<(), String> {
    let stats = clause_stats(inst);
    for &family in families_of(inst.encoding) {
        let want = expected_family_count(inst.encoding, family, inst.n as u64)
            .expect("family is in encoding");
        let got = stats.per_family.get(&family).copied().unwrap_or(0) as u64;
        if want != got {
            return Err(format!(
                "family {} expected {want} clauses, found {got}",
                family.name()
            ));
        }
    }
    Ok(())
}
