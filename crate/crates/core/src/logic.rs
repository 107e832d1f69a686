//! Sorted atoms over clocks, selection variables, and values; clauses; and
//! the propositional abstraction with resolution over abstracted clauses.
//!
//! Atoms are kept in a canonical form so that each semantic atom has exactly
//! one representation: symmetric equalities order their arguments, and
//! non-strict order never appears (a <= b is expressed as the negation of
//! b < a). The abstraction map assigns dense variable indices by canonical
//! atom order, so two structurally equal formulas always abstract the same
//! way.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a program event, dense and assigned in declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A clock-sort term: the clock of an event, or the supremum variable
/// attached to a read in the quadratic encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ClockTerm {
    Event(EventId),
    Sup(EventId),
}

impl fmt::Display for ClockTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockTerm::Event(e) => write!(f, "c{e}"),
            ClockTerm::Sup(e) => write!(f, "s{e}"),
        }
    }
}

/// Selection variable of an event (wsel for writes, rsel for reads).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelVar(pub EventId);

impl fmt::Display for SelVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Value variable of a read event (rval).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValVar(pub EventId);

impl fmt::Display for ValVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// The three disjoint sorts of the combined theory.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sort {
    Clock,
    Sel,
    Val,
}

/// An atom of the input alphabet.
///
/// The derived `Ord` is the canonical atom order used for variable indexing:
/// variant tag first, then arguments in declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Atom {
    /// Strict clock order: first term before second.
    Lt(ClockTerm, ClockTerm),
    /// Clock equality. Canonical form keeps the smaller term first.
    ClockEq(ClockTerm, ClockTerm),
    /// Selection-variable equality. Canonical form keeps the smaller first.
    SelEq(SelVar, SelVar),
    /// Value equals zero.
    ValZero(ValVar),
    /// First value plus one equals the second value.
    ValSucc(ValVar, ValVar),
    /// Value strictly greater than the constant.
    ValGt(ValVar, u32),
}

impl Atom {
    pub fn lt(a: ClockTerm, b: ClockTerm) -> Atom {
        Atom::Lt(a, b)
    }

    /// Clock equality with arguments put in canonical order.
    pub fn clock_eq(a: ClockTerm, b: ClockTerm) -> Atom {
        if a <= b {
            Atom::ClockEq(a, b)
        } else {
            Atom::ClockEq(b, a)
        }
    }

    /// Selection equality with arguments put in canonical order.
    pub fn sel_eq(a: SelVar, b: SelVar) -> Atom {
        if a <= b {
            Atom::SelEq(a, b)
        } else {
            Atom::SelEq(b, a)
        }
    }

    pub fn val_zero(v: ValVar) -> Atom {
        Atom::ValZero(v)
    }

    pub fn val_succ(u: ValVar, v: ValVar) -> Atom {
        Atom::ValSucc(u, v)
    }

    pub fn val_gt(v: ValVar, k: u32) -> Atom {
        Atom::ValGt(v, k)
    }

    /// Whether the atom is in canonical form.
    pub fn is_canonical(&self) -> bool {
        match self {
            Atom::ClockEq(a, b) => a <= b,
            Atom::SelEq(a, b) => a <= b,
            _ => true,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Atom::Lt(_, _) | Atom::ClockEq(_, _) => Sort::Clock,
            Atom::SelEq(_, _) => Sort::Sel,
            Atom::ValZero(_) | Atom::ValSucc(_, _) | Atom::ValGt(_, _) => Sort::Val,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lt(a, b) => write!(f, "lt({a},{b})"),
            Atom::ClockEq(a, b) => write!(f, "ceq({a},{b})"),
            Atom::SelEq(a, b) => write!(f, "seq({a},{b})"),
            Atom::ValZero(v) => write!(f, "vz({v})"),
            Atom::ValSucc(u, v) => write!(f, "vs({u},{v})"),
            Atom::ValGt(v, k) => write!(f, "vgt({v},{k})"),
        }
    }
}

/// A theory literal: an atom with a polarity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal { atom, positive: false }
    }

    pub fn negated(&self) -> Literal {
        Literal { atom: self.atom, positive: !self.positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "-{}", self.atom)
        }
    }
}

/// Errors of the syntactic and propositional layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("atom {0} is not in canonical form")]
    NonCanonicalAtom(String),
    #[error("clause contains atom {0} in both polarities")]
    ComplementaryPair(String),
    #[error("formula has no clauses")]
    EmptyFormula,
    #[error("pivot variable {0} does not occur positively in the first and negatively in the second antecedent")]
    PivotMissing(Var),
    #[error("pivot variable {0} occurs in both polarities in one antecedent")]
    AmbiguousPivot(Var),
    #[error("atom {0} is not in the abstraction alphabet")]
    AtomNotInAlphabet(String),
    #[error("variable {0} assigned both polarities")]
    ConflictingAssignment(Var),
    #[error("variable {0} out of range")]
    VarOutOfRange(Var),
    #[error("malformed {what}: {input}")]
    Parse { what: &'static str, input: String },
}

/// A clause of theory literals. Literals are stored sorted and deduplicated;
/// a clause never contains an atom in both polarities.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Literal>", into = "Vec<Literal>")]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(mut lits: Vec<Literal>) -> Result<Clause, LogicError> {
        lits.sort();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].atom == w[1].atom {
                return Err(LogicError::ComplementaryPair(w[0].atom.to_string()));
            }
        }
        Ok(Clause { lits })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
}

impl TryFrom<Vec<Literal>> for Clause {
    type Error = LogicError;
    fn try_from(lits: Vec<Literal>) -> Result<Clause, LogicError> {
        Clause::new(lits)
    }
}

impl From<Clause> for Vec<Literal> {
    fn from(c: Clause) -> Vec<Literal> {
        c.lits
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.lits {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

/// Propositional variable index, dense from 0.
pub type Var = u32;

/// Propositional literal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct PLit {
    pub var: Var,
    pub positive: bool,
}

impl PLit {
    pub fn pos(var: Var) -> PLit {
        PLit { var, positive: true }
    }

    pub fn neg(var: Var) -> PLit {
        PLit { var, positive: false }
    }

    pub fn negated(&self) -> PLit {
        PLit { var: self.var, positive: !self.positive }
    }

    /// Dense code for watch lists: 2*var for positive, 2*var+1 for negative.
    pub fn code(&self) -> usize {
        (self.var as usize) * 2 + usize::from(!self.positive)
    }
}

impl fmt::Display for PLit {
    /// One-based signed representation, as in DIMACS.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.var + 1)
        } else {
            write!(f, "-{}", self.var + 1)
        }
    }
}

/// A propositional clause. Sorted and deduplicated, but a complementary pair
/// is allowed and reported by `is_tautological` (resolution can produce it).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PropClause {
    lits: Vec<PLit>,
}

impl PropClause {
    pub fn new(mut lits: Vec<PLit>) -> PropClause {
        lits.sort();
        lits.dedup();
        PropClause { lits }
    }

    pub fn literals(&self) -> &[PLit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains(&self, lit: PLit) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    pub fn is_tautological(&self) -> bool {
        self.lits.windows(2).any(|w| w[0].var == w[1].var)
    }
}

impl fmt::Display for PropClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.lits {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

/// Binary resolution on the pivot variable. The pivot must occur positively
/// in `c1`, negatively in `c2`, and with one polarity only in each: an
/// antecedent tautological in the pivot would make the stripped resolvent
/// unsound. The resolvent itself may be tautological in another variable;
/// it is returned as-is and flagged by `PropClause::is_tautological`.
pub fn resolve(c1: &PropClause, c2: &PropClause, pivot: Var) -> Result<PropClause, LogicError> {
    if !c1.contains(PLit::pos(pivot)) || !c2.contains(PLit::neg(pivot)) {
        return Err(LogicError::PivotMissing(pivot));
    }
    if c1.contains(PLit::neg(pivot)) || c2.contains(PLit::pos(pivot)) {
        return Err(LogicError::AmbiguousPivot(pivot));
    }
    let mut lits: Vec<PLit> = Vec::with_capacity(c1.len() + c2.len() - 2);
    lits.extend(c1.literals().iter().filter(|l| l.var != pivot));
    lits.extend(c2.literals().iter().filter(|l| l.var != pivot));
    Ok(PropClause::new(lits))
}

/// Bijection between the atoms of a formula and dense variable indices.
/// Indices follow the canonical atom order, so the map is deterministic for
/// a given atom set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbstractionMap {
    atoms: Vec<Atom>,
    index: BTreeMap<Atom, Var>,
}

impl AbstractionMap {
    fn from_atoms(atoms: Vec<Atom>) -> AbstractionMap {
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, i as Var))
            .collect();
        AbstractionMap { atoms, index }
    }

    pub fn num_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn var(&self, atom: &Atom) -> Option<Var> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, var: Var) -> Option<&Atom> {
        self.atoms.get(var as usize)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Abstract a theory literal into a propositional one.
    pub fn prop_lit(&self, lit: &Literal) -> Result<PLit, LogicError> {
        let var = self
            .var(&lit.atom)
            .ok_or_else(|| LogicError::AtomNotInAlphabet(lit.atom.to_string()))?;
        Ok(PLit { var, positive: lit.positive })
    }

    /// Abstract a theory clause.
    pub fn prop_clause(&self, clause: &Clause) -> Result<PropClause, LogicError> {
        let lits = clause
            .literals()
            .iter()
            .map(|l| self.prop_lit(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PropClause::new(lits))
    }

    /// Concretize a propositional literal back into a theory literal.
    pub fn concretize(&self, lit: PLit) -> Result<Literal, LogicError> {
        let atom = self
            .atom(lit.var)
            .copied()
            .ok_or(LogicError::VarOutOfRange(lit.var))?;
        Ok(Literal { atom, positive: lit.positive })
    }

    /// Build a propositional assignment from a set of theory literals.
    pub fn assignment_from_literals<'a, I>(&self, lits: I) -> Result<PropAssignment, LogicError>
    where
        I: IntoIterator<Item = &'a Literal>,
    {
        let mut asn = PropAssignment::new(self.num_vars());
        for lit in lits {
            asn.set(self.prop_lit(lit)?)?;
        }
        Ok(asn)
    }
}

/// A CNF formula together with its abstraction map.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Clause>", into = "Vec<Clause>")]
pub struct CnfFormula {
    clauses: Vec<Clause>,
    abstraction: AbstractionMap,
}

impl CnfFormula {
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn abstraction(&self) -> &AbstractionMap {
        &self.abstraction
    }

    /// All clauses abstracted into propositional form, in order.
    pub fn prop_clauses(&self) -> Vec<PropClause> {
        self.clauses
            .iter()
            .map(|c| {
                self.abstraction
                    .prop_clause(c)
                    .expect("formula atoms are always in its own alphabet")
            })
            .collect()
    }
}

impl TryFrom<Vec<Clause>> for CnfFormula {
    type Error = LogicError;
    fn try_from(clauses: Vec<Clause>) -> Result<CnfFormula, LogicError> {
        build_abstraction(clauses)
    }
}

impl From<CnfFormula> for Vec<Clause> {
    fn from(f: CnfFormula) -> Vec<Clause> {
        f.clauses
    }
}

/// Build the propositional abstraction of a nonempty clause list. Every atom
/// is checked for canonical form; duplicate clauses are retained so that
/// proof steps can reference clause positions.
pub fn build_abstraction(clauses: Vec<Clause>) -> Result<CnfFormula, LogicError> {
    if clauses.is_empty() {
        return Err(LogicError::EmptyFormula);
    }
    let mut atoms: Vec<Atom> = Vec::new();
    for clause in &clauses {
        for lit in clause.literals() {
            if !lit.atom.is_canonical() {
                return Err(LogicError::NonCanonicalAtom(lit.atom.to_string()));
            }
            atoms.push(lit.atom);
        }
    }
    atoms.sort();
    atoms.dedup();
    Ok(CnfFormula {
        clauses,
        abstraction: AbstractionMap::from_atoms(atoms),
    })
}

/// A partial propositional assignment over a fixed variable range.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PropAssignment {
    values: Vec<Option<bool>>,
}

impl PropAssignment {
    pub fn new(num_vars: usize) -> PropAssignment {
        PropAssignment { values: vec![None; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.values.get(var as usize).copied().flatten()
    }

    /// Truth value of a literal, or None if its variable is unassigned.
    pub fn lit_value(&self, lit: PLit) -> Option<bool> {
        self.value(lit.var).map(|v| v == lit.positive)
    }

    /// Assign a literal. Re-assigning the same polarity is a no-op;
    /// the opposite polarity is an error.
    pub fn set(&mut self, lit: PLit) -> Result<(), LogicError> {
        let slot = self
            .values
            .get_mut(lit.var as usize)
            .ok_or(LogicError::VarOutOfRange(lit.var))?;
        match *slot {
            None => {
                *slot = Some(lit.positive);
                Ok(())
            }
            Some(v) if v == lit.positive => Ok(()),
            Some(_) => Err(LogicError::ConflictingAssignment(lit.var)),
        }
    }

    pub fn unset(&mut self, var: Var) {
        if let Some(slot) = self.values.get_mut(var as usize) {
            *slot = None;
        }
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    pub fn num_assigned(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn contains(&self, lit: PLit) -> bool {
        self.lit_value(lit) == Some(true)
    }

    /// Whether every literal of `lits` is true under this assignment.
    pub fn contains_all(&self, lits: &[PLit]) -> bool {
        lits.iter().all(|l| self.contains(*l))
    }

    /// All assigned literals, in variable order.
    pub fn literals(&self) -> Vec<PLit> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(v, val)| val.map(|p| PLit { var: v as Var, positive: p }))
            .collect()
    }
}

/// Whether a propositional clause is satisfied by an assignment. The empty
/// clause is never satisfied; unassigned variables satisfy nothing.
pub fn clause_satisfied(clause: &PropClause, asn: &PropAssignment) -> bool {
    clause.literals().iter().any(|l| asn.lit_value(*l) == Some(true))
}

fn parse_err(what: &'static str, input: &str) -> LogicError {
    LogicError::Parse { what, input: input.to_string() }
}

fn parse_u32(what: &'static str, s: &str) -> Result<u32, LogicError> {
    s.parse::<u32>().map_err(|_| parse_err(what, s))
}

impl FromStr for ClockTerm {
    type Err = LogicError;
    fn from_str(s: &str) -> Result<ClockTerm, LogicError> {
        match s.split_at_checked(1) {
            Some(("c", rest)) => Ok(ClockTerm::Event(EventId(parse_u32("clock term", rest)?))),
            Some(("s", rest)) => Ok(ClockTerm::Sup(EventId(parse_u32("clock term", rest)?))),
            _ => Err(parse_err("clock term", s)),
        }
    }
}

impl FromStr for SelVar {
    type Err = LogicError;
    fn from_str(s: &str) -> Result<SelVar, LogicError> {
        match s.split_at_checked(1) {
            Some(("e", rest)) => Ok(SelVar(EventId(parse_u32("sel var", rest)?))),
            _ => Err(parse_err("sel var", s)),
        }
    }
}

impl FromStr for ValVar {
    type Err = LogicError;
    fn from_str(s: &str) -> Result<ValVar, LogicError> {
        match s.split_at_checked(1) {
            Some(("v", rest)) => Ok(ValVar(EventId(parse_u32("val var", rest)?))),
            _ => Err(parse_err("val var", s)),
        }
    }
}

impl FromStr for Atom {
    type Err = LogicError;
    fn from_str(s: &str) -> Result<Atom, LogicError> {
        let (name, rest) = s.split_once('(').ok_or_else(|| parse_err("atom", s))?;
        let args = rest.strip_suffix(')').ok_or_else(|| parse_err("atom", s))?;
        let parts: Vec<&str> = args.split(',').collect();
        let atom = match (name, parts.as_slice()) {
            ("lt", [a, b]) => Atom::Lt(a.parse()?, b.parse()?),
            ("ceq", [a, b]) => Atom::ClockEq(a.parse()?, b.parse()?),
            ("seq", [a, b]) => Atom::SelEq(a.parse()?, b.parse()?),
            ("vz", [v]) => Atom::ValZero(v.parse()?),
            ("vs", [u, v]) => Atom::ValSucc(u.parse()?, v.parse()?),
            ("vgt", [v, k]) => Atom::ValGt(v.parse()?, parse_u32("atom constant", k)?),
            _ => return Err(parse_err("atom", s)),
        };
        Ok(atom)
    }
}

impl FromStr for Literal {
    type Err = LogicError;
    fn from_str(s: &str) -> Result<Literal, LogicError> {
        match s.strip_prefix('-') {
            Some(rest) => Ok(Literal::neg(rest.parse()?)),
            None => Ok(Literal::pos(s.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(i: u32) -> EventId {
        EventId(i)
    }

    fn clk(i: u32) -> ClockTerm {
        ClockTerm::Event(ev(i))
    }

    #[test]
    fn symmetric_atoms_canonicalize() {
        assert_eq!(Atom::clock_eq(clk(3), clk(1)), Atom::clock_eq(clk(1), clk(3)));
        assert_eq!(
            Atom::sel_eq(SelVar(ev(2)), SelVar(ev(0))),
            Atom::sel_eq(SelVar(ev(0)), SelVar(ev(2)))
        );
        assert!(Atom::clock_eq(clk(3), clk(1)).is_canonical());
        assert!(!Atom::ClockEq(clk(3), clk(1)).is_canonical());
        // Lt is directional: both orientations are distinct canonical atoms.
        assert_ne!(Atom::lt(clk(0), clk(1)), Atom::lt(clk(1), clk(0)));
        assert!(Atom::lt(clk(1), clk(0)).is_canonical());
    }

    #[test]
    fn single_atom_abstracts_to_var_zero() {
        let a = Atom::lt(clk(0), clk(1));
        let cnf = build_abstraction(vec![Clause::new(vec![Literal::pos(a)]).unwrap()]).unwrap();
        assert_eq!(cnf.abstraction().num_vars(), 1);
        assert_eq!(cnf.abstraction().var(&a), Some(0));
        assert_eq!(cnf.abstraction().atom(0), Some(&a));
    }

    #[test]
    fn shared_atom_gets_one_var() {
        let a = Atom::lt(clk(0), clk(1));
        let b = Atom::clock_eq(clk(0), clk(2));
        let cnf = build_abstraction(vec![
            Clause::new(vec![Literal::pos(a), Literal::pos(b)]).unwrap(),
            Clause::new(vec![Literal::neg(a)]).unwrap(),
        ])
        .unwrap();
        assert_eq!(cnf.abstraction().num_vars(), 2);
        let va = cnf.abstraction().var(&a).unwrap();
        let prop = cnf.prop_clauses();
        assert!(prop[0].contains(PLit::pos(va)));
        assert!(prop[1].contains(PLit::neg(va)));
    }

    #[test]
    fn non_canonical_atom_is_a_defect() {
        let bad = Atom::ClockEq(clk(3), clk(1));
        let err = build_abstraction(vec![Clause::new(vec![Literal::pos(bad)]).unwrap()]);
        assert!(matches!(err, Err(LogicError::NonCanonicalAtom(_))));
    }

    #[test]
    fn empty_formula_rejected() {
        assert_eq!(build_abstraction(vec![]), Err(LogicError::EmptyFormula));
    }

    #[test]
    fn clause_rejects_complementary_pair() {
        let a = Atom::lt(clk(0), clk(1));
        let err = Clause::new(vec![Literal::pos(a), Literal::neg(a)]);
        assert!(matches!(err, Err(LogicError::ComplementaryPair(_))));
    }

    #[test]
    fn clause_dedupes() {
        let a = Atom::lt(clk(0), clk(1));
        let c = Clause::new(vec![Literal::pos(a), Literal::pos(a)]).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn resolve_basic() {
        // (x0 | x1) and (-x0 | x2) resolve on x0 to (x1 | x2).
        let c1 = PropClause::new(vec![PLit::pos(0), PLit::pos(1)]);
        let c2 = PropClause::new(vec![PLit::neg(0), PLit::pos(2)]);
        let r = resolve(&c1, &c2, 0).unwrap();
        assert_eq!(r, PropClause::new(vec![PLit::pos(1), PLit::pos(2)]));
        assert!(!r.is_tautological());
    }

    #[test]
    fn resolve_unit_pair_gives_empty_clause() {
        let c1 = PropClause::new(vec![PLit::pos(0)]);
        let c2 = PropClause::new(vec![PLit::neg(0)]);
        let r = resolve(&c1, &c2, 0).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn resolve_flags_tautology() {
        // (x0 | x1) and (-x0 | -x1) resolve on x0 to (x1 | -x1).
        let c1 = PropClause::new(vec![PLit::pos(0), PLit::pos(1)]);
        let c2 = PropClause::new(vec![PLit::neg(0), PLit::neg(1)]);
        let r = resolve(&c1, &c2, 0).unwrap();
        assert!(r.is_tautological());
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn resolve_rejects_pivot_tautological_antecedents() {
        // {x0} with {x0, -x0}: stripping x0 from both would "derive" the
        // empty clause from a satisfiable pair.
        let c1 = PropClause::new(vec![PLit::pos(0)]);
        let c2 = PropClause::new(vec![PLit::pos(0), PLit::neg(0)]);
        assert!(matches!(resolve(&c1, &c2, 0), Err(LogicError::AmbiguousPivot(0))));
        assert!(matches!(resolve(&c2, &c2, 0), Err(LogicError::AmbiguousPivot(0))));
    }

    #[test]
    fn resolve_requires_oriented_pivot() {
        let c1 = PropClause::new(vec![PLit::neg(0), PLit::pos(1)]);
        let c2 = PropClause::new(vec![PLit::pos(0), PLit::pos(2)]);
        assert_eq!(resolve(&c1, &c2, 0), Err(LogicError::PivotMissing(0)));
        assert_eq!(resolve(&c1, &c2, 7), Err(LogicError::PivotMissing(7)));
    }

    #[test]
    fn clause_satisfaction() {
        let mut asn = PropAssignment::new(3);
        asn.set(PLit::pos(0)).unwrap();
        asn.set(PLit::neg(1)).unwrap();
        assert!(clause_satisfied(&PropClause::new(vec![PLit::pos(0)]), &asn));
        assert!(clause_satisfied(
            &PropClause::new(vec![PLit::pos(1), PLit::neg(1)]),
            &asn
        ));
        // Unassigned variable satisfies nothing.
        assert!(!clause_satisfied(&PropClause::new(vec![PLit::pos(2)]), &asn));
        // The empty clause is never satisfied.
        assert!(!clause_satisfied(&PropClause::default(), &asn));
    }

    #[test]
    fn assignment_set_contradiction() {
        let mut asn = PropAssignment::new(1);
        asn.set(PLit::pos(0)).unwrap();
        asn.set(PLit::pos(0)).unwrap();
        assert_eq!(asn.set(PLit::neg(0)), Err(LogicError::ConflictingAssignment(0)));
    }

    #[test]
    fn literal_text_round_trip() {
        let lits = [
            Literal::pos(Atom::lt(clk(0), ClockTerm::Sup(ev(3)))),
            Literal::neg(Atom::clock_eq(clk(2), clk(5))),
            Literal::pos(Atom::sel_eq(SelVar(ev(1)), SelVar(ev(4)))),
            Literal::neg(Atom::val_zero(ValVar(ev(1)))),
            Literal::pos(Atom::val_succ(ValVar(ev(1)), ValVar(ev(3)))),
            Literal::neg(Atom::val_gt(ValVar(ev(7)), 4)),
        ];
        for lit in lits {
            let s = lit.to_string();
            let back: Literal = s.parse().unwrap();
            assert_eq!(back, lit, "round trip of {s}");
        }
    }

    #[test]
    fn literal_parse_rejects_garbage() {
        assert!("lt(c0)".parse::<Literal>().is_err());
        assert!("xy(c0,c1)".parse::<Literal>().is_err());
        assert!("lt(q0,c1)".parse::<Literal>().is_err());
        assert!("vgt(v1,x)".parse::<Literal>().is_err());
        assert!("".parse::<Literal>().is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_plits() -> impl Strategy<Value = Vec<PLit>> {
            prop::collection::vec(
                (0u32..8, any::<bool>()).prop_map(|(var, positive)| PLit { var, positive }),
                0..5,
            )
        }

        proptest! {
            // Any assignment satisfying both antecedents satisfies the
            // resolvent.
            #[test]
            fn resolution_preserves_models(
                base1 in arb_plits(),
                base2 in arb_plits(),
                pivot in 0u32..8,
                bits in any::<u8>(),
            ) {
                let mut l1 = base1;
                l1.push(PLit::pos(pivot));
                let mut l2 = base2;
                l2.push(PLit::neg(pivot));
                let c1 = PropClause::new(l1);
                let c2 = PropClause::new(l2);
                // Antecedents tautological in the pivot are rejected, not
                // resolved; only accepted resolutions must be entailed.
                if let Ok(r) = resolve(&c1, &c2, pivot) {
                    let mut asn = PropAssignment::new(8);
                    for v in 0..8u32 {
                        asn.set(PLit { var: v, positive: (bits >> v) & 1 == 1 }).unwrap();
                    }
                    if clause_satisfied(&c1, &asn) && clause_satisfied(&c2, &asn) {
                        prop_assert!(clause_satisfied(&r, &asn));
                    }
                }
            }

            // Abstraction and concretization invert each other over the
            // formula's own alphabet.
            #[test]
            fn abstraction_round_trips(
                picks in prop::collection::vec((0u32..6, 1u32..6, any::<bool>()), 1..12),
            ) {
                let clauses: Vec<Clause> = picks
                    .iter()
                    .map(|(a, d, positive)| {
                        let atom = Atom::lt(clk(*a), clk((a + d) % 6));
                        let lit = Literal { atom, positive: *positive };
                        Clause::new(vec![lit]).unwrap()
                    })
                    .collect();
                let cnf = build_abstraction(clauses.clone()).unwrap();
                let map = cnf.abstraction();
                for clause in &clauses {
                    for lit in clause.literals() {
                        let plit = map.prop_lit(lit).unwrap();
                        prop_assert!((plit.var as usize) < map.num_vars());
                        prop_assert_eq!(map.concretize(plit).unwrap(), *lit);
                    }
                    let pc = map.prop_clause(clause).unwrap();
                    let back: Vec<Literal> = pc
                        .literals()
                        .iter()
                        .map(|p| map.concretize(*p).unwrap())
                        .collect();
                    for lit in clause.literals() {
                        prop_assert!(back.contains(lit));
                    }
                }
            }
        }
    }
}
