//! Decision procedures for conjunctions over the three-sorted alphabet:
//! total clock order with equality, uninterpreted selection equality, and
//! nonnegative integer values with zero, successor, and greater-than atoms.
//!
//! The sorts share no symbols, so a conjunction is satisfiable exactly when
//! each sort's fragment is. Every satisfiable answer carries a model that is
//! re-verified literal by literal before being returned. The value fragment
//! settles disequations by complete case-splitting, so verdicts never depend
//! on a value bound; the separate bounded searches are explicitly scoped to
//! their domain bounds and error out rather than truncate silently.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;
use thiserror::Error;

use crate::logic::{Atom, ClockTerm, CnfFormula, Literal, SelVar, Sort, ValVar};

/// A finite first-order model: per-sort value maps.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FiniteModel {
    pub clock: BTreeMap<ClockTerm, i64>,
    pub sel: BTreeMap<SelVar, i64>,
    pub val: BTreeMap<ValVar, i64>,
}

impl FiniteModel {
    fn insert_slot(&mut self, slot: SlotKey, value: i64) {
        match slot {
            SlotKey::Clock(t) => {
                self.clock.insert(t, value);
            }
            SlotKey::Sel(v) => {
                self.sel.insert(v, value);
            }
            SlotKey::Val(v) => {
                self.val.insert(v, value);
            }
        }
    }
}

/// Domain bounds for bounded-model search. The value domain is
/// {0, ..., val_max}; clock and sel domains are counted in distinct values.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DomainBounds {
    pub clock_ranks: usize,
    pub sel_values: usize,
    pub val_max: i64,
}

impl DomainBounds {
    /// Default bounds for the standard program at parameter `n`: one clock
    /// rank per event and per supremum variable, one selection value per
    /// write, and values up to n+1 (the checker read can obtain n+1).
    pub fn for_params(n: u32) -> DomainBounds {
        let events = 2 * n as usize + 2;
        let reads = n as usize + 1;
        DomainBounds {
            clock_ranks: events + reads,
            sel_values: n as usize + 1,
            val_max: n as i64 + 1,
        }
    }
}

/// Why a conjunction is unsatisfiable.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnsatReason {
    /// A strict clock edge lies inside a strongly connected component.
    ClockStrictCycle,
    /// A clock disequality joins terms forced equal.
    ClockForcedMerge,
    /// A selection disequality joins variables forced equal.
    SelForcedMerge,
    /// The value difference constraints contain a negative cycle.
    ValNegativeCycle,
    /// A value disequation is contradicted by forced differences, directly
    /// or after case-splitting the other disequations.
    ValForcedDiseq,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TheoryVerdict {
    Sat(FiniteModel),
    Unsat(UnsatReason),
}

impl TheoryVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, TheoryVerdict::Sat(_))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TheoryError {
    #[error("variable {0} is not assigned by the model")]
    UnassignedVariable(String),
    #[error("model needs {needed} distinct clock ranks but the domain has {available}")]
    BoundExhausted { needed: usize, available: usize },
    #[error("bounded search needs {needed} steps, over the budget of {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("internal defect: {0}")]
    Defect(String),
}

/// Default step budget for bounded searches.
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000_000;

fn eval_atom(model: &FiniteModel, atom: &Atom) -> Result<bool, TheoryError> {
    let clock = |t: &ClockTerm| {
        model
            .clock
            .get(t)
            .copied()
            .ok_or_else(|| TheoryError::UnassignedVariable(t.to_string()))
    };
    let sel = |v: &SelVar| {
        model
            .sel
            .get(v)
            .copied()
            .ok_or_else(|| TheoryError::UnassignedVariable(v.to_string()))
    };
    let val = |v: &ValVar| {
        model
            .val
            .get(v)
            .copied()
            .ok_or_else(|| TheoryError::UnassignedVariable(v.to_string()))
    };
    Ok(match atom {
        Atom::Lt(a, b) => clock(a)? < clock(b)?,
        Atom::ClockEq(a, b) => clock(a)? == clock(b)?,
        Atom::SelEq(a, b) => sel(a)? == sel(b)?,
        Atom::ValZero(v) => val(v)? == 0,
        Atom::ValSucc(u, v) => val(u)? + 1 == val(v)?,
        Atom::ValGt(v, k) => val(v)? > *k as i64,
    })
}

/// Evaluate a literal under a model. Errors name the unassigned variable.
pub fn eval_literal(model: &FiniteModel, lit: &Literal) -> Result<bool, TheoryError> {
    Ok(eval_atom(model, &lit.atom)? == lit.positive)
}

fn verify_model(model: &FiniteModel, lits: &[Literal], context: &str) -> Result<(), TheoryError> {
    for lit in lits {
        if !eval_literal(model, lit)? {
            return Err(TheoryError::Defect(format!(
                "{context}: constructed model does not satisfy {lit}"
            )));
        }
    }
    Ok(())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

fn split_by_sort(lits: &[Literal]) -> [Vec<Literal>; 3] {
    let mut parts: [Vec<Literal>; 3] = Default::default();
    for lit in lits {
        let slot = match lit.atom.sort() {
            Sort::Clock => 0,
            Sort::Sel => 1,
            Sort::Val => 2,
        };
        parts[slot].push(*lit);
    }
    parts
}

/// Clock fragment: positive Lt is a strict edge, negative Lt a mirrored
/// non-strict edge (the order is total), positive equality a two-way
/// non-strict edge, negative equality a forbidden merge. Unsatisfiable
/// exactly when a strict edge lies inside a strongly connected component or
/// a forbidden pair shares one.
fn solve_clock_fragment(
    lits: &[Literal],
    bounds: &DomainBounds,
) -> Result<Result<BTreeMap<ClockTerm, i64>, UnsatReason>, TheoryError> {
    let mut term_set: BTreeSet<ClockTerm> = BTreeSet::new();
    for lit in lits {
        match lit.atom {
            Atom::Lt(a, b) | Atom::ClockEq(a, b) => {
                term_set.insert(a);
                term_set.insert(b);
            }
            _ => {
                return Err(TheoryError::Defect(format!(
                    "non-clock literal {lit} in clock fragment"
                )))
            }
        }
    }
    let terms: Vec<ClockTerm> = term_set.into_iter().collect();
    let index = |t: ClockTerm| terms.binary_search(&t).expect("term was collected");

    let mut graph: DiGraph<(), bool> = DiGraph::new();
    let nodes: Vec<NodeIndex> = terms.iter().map(|_| graph.add_node(())).collect();
    let mut forbidden: Vec<(usize, usize)> = Vec::new();
    for lit in lits {
        match (lit.atom, lit.positive) {
            (Atom::Lt(a, b), true) => {
                graph.add_edge(nodes[index(a)], nodes[index(b)], true);
            }
            (Atom::Lt(a, b), false) => {
                graph.add_edge(nodes[index(b)], nodes[index(a)], false);
            }
            (Atom::ClockEq(a, b), true) => {
                graph.add_edge(nodes[index(a)], nodes[index(b)], false);
                graph.add_edge(nodes[index(b)], nodes[index(a)], false);
            }
            (Atom::ClockEq(a, b), false) => {
                forbidden.push((index(a), index(b)));
            }
            _ => unreachable!("clock fragment filtered above"),
        }
    }

    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; terms.len()];
    for (ci, scc) in sccs.iter().enumerate() {
        for node in scc {
            comp[node.index()] = ci;
        }
    }
    for edge in graph.edge_references() {
        if *edge.weight() && comp[edge.source().index()] == comp[edge.target().index()] {
            return Ok(Err(UnsatReason::ClockStrictCycle));
        }
    }
    for &(a, b) in &forbidden {
        if comp[a] == comp[b] {
            return Ok(Err(UnsatReason::ClockForcedMerge));
        }
    }
    if sccs.len() > bounds.clock_ranks {
        return Err(TheoryError::BoundExhausted {
            needed: sccs.len(),
            available: bounds.clock_ranks,
        });
    }
    // tarjan_scc returns components in reverse topological order, so the
    // rank num-1-ci increases along every edge between distinct components.
    let num = sccs.len();
    let model = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, (num - 1 - comp[i]) as i64))
        .collect();
    Ok(Ok(model))
}

/// Selection fragment: equivalence closure of positive equalities, then a
/// scan for disequalities inside one class.
fn solve_sel_fragment(
    lits: &[Literal],
) -> Result<Result<BTreeMap<SelVar, i64>, UnsatReason>, TheoryError> {
    let mut var_set: BTreeSet<SelVar> = BTreeSet::new();
    for lit in lits {
        match lit.atom {
            Atom::SelEq(a, b) => {
                var_set.insert(a);
                var_set.insert(b);
            }
            _ => {
                return Err(TheoryError::Defect(format!(
                    "non-sel literal {lit} in sel fragment"
                )))
            }
        }
    }
    let vars: Vec<SelVar> = var_set.into_iter().collect();
    let index = |v: SelVar| vars.binary_search(&v).expect("var was collected");
    let mut uf = UnionFind::new(vars.len());
    let mut forbidden = Vec::new();
    for lit in lits {
        if let Atom::SelEq(a, b) = lit.atom {
            if lit.positive {
                uf.union(index(a), index(b));
            } else {
                forbidden.push((index(a), index(b)));
            }
        }
    }
    for &(a, b) in &forbidden {
        if uf.find(a) == uf.find(b) {
            return Ok(Err(UnsatReason::SelForcedMerge));
        }
    }
    let mut class_ids: BTreeMap<usize, i64> = BTreeMap::new();
    let mut model = BTreeMap::new();
    for (i, v) in vars.iter().enumerate() {
        let root = uf.find(i);
        let next = class_ids.len() as i64;
        let id = *class_ids.entry(root).or_insert(next);
        model.insert(*v, id);
    }
    Ok(Ok(model))
}

const DIST_INF: i64 = i64::MAX / 4;

/// Edge budget for the disequation case split; generous, since each split
/// settles one violated disequation and cascades stay shallow in practice.
const SPLIT_BUDGET: u64 = 1 << 20;

/// Value fragment: difference constraints over nonnegative integers with a
/// zero anchor, plus disequations from negated equalities. The difference
/// part has pointwise-minimal solutions; violated disequations are settled
/// by a complete case split (strictly below or strictly above), so the
/// verdict never depends on a value bound.
fn solve_val_fragment(
    lits: &[Literal],
) -> Result<Result<BTreeMap<ValVar, i64>, UnsatReason>, TheoryError> {
    let vars = val_vars(lits)?;
    let index = |v: ValVar| vars.binary_search(&v).expect("var was collected");
    let n = vars.len();
    let z = n; // zero anchor node
    let mut edges = vec![vec![DIST_INF; n + 1]; n + 1];
    for (i, row) in edges.iter_mut().enumerate() {
        row[i] = 0;
    }
    // Constraint x - y <= c is the edge y -> x with weight c.
    fn add(edges: &mut [Vec<i64>], y: usize, x: usize, c: i64) {
        if c < edges[y][x] {
            edges[y][x] = c;
        }
    }
    // Nonnegativity: 0 - v <= 0.
    for v in 0..n {
        add(&mut edges, v, z, 0);
    }
    // Disequation (a, b, off) states a != b + off; b may be the anchor.
    let mut diseqs: Vec<(usize, usize, i64)> = Vec::new();
    for lit in lits {
        match (lit.atom, lit.positive) {
            (Atom::ValZero(v), true) => {
                add(&mut edges, z, index(v), 0);
                add(&mut edges, index(v), z, 0);
            }
            (Atom::ValZero(v), false) => diseqs.push((index(v), z, 0)),
            (Atom::ValSucc(u, v), true) => {
                add(&mut edges, index(u), index(v), 1);
                add(&mut edges, index(v), index(u), -1);
            }
            (Atom::ValSucc(u, v), false) => diseqs.push((index(v), index(u), 1)),
            (Atom::ValGt(v, k), true) => add(&mut edges, index(v), z, -(k as i64 + 1)),
            (Atom::ValGt(v, k), false) => add(&mut edges, z, index(v), k as i64),
            _ => unreachable!("val fragment filtered above"),
        }
    }
    let mut budget = SPLIT_BUDGET;
    let outcome = split_on_diseqs(&edges, &diseqs, z, &mut budget)?;
    Ok(outcome.map(|values| {
        vars.iter()
            .enumerate()
            .map(|(i, v)| (*v, values[i]))
            .collect()
    }))
}

/// Decide a difference-constraint system with disequations. Solve the
/// difference part for its minimal nonnegative solution; a violated
/// disequation a != b + off splits into a - b <= off-1 or b - a <= -off-1.
/// Each branch retires the disequation for good, so recursion depth is
/// bounded by the number of disequations.
fn split_on_diseqs(
    edges: &[Vec<i64>],
    diseqs: &[(usize, usize, i64)],
    z: usize,
    budget: &mut u64,
) -> Result<Result<Vec<i64>, UnsatReason>, TheoryError> {
    if *budget == 0 {
        return Err(TheoryError::BudgetExceeded {
            needed: SPLIT_BUDGET + 1,
            budget: SPLIT_BUDGET,
        });
    }
    *budget -= 1;
    let n = edges.len();
    let mut dist = edges.to_vec();
    for k in 0..n {
        for i in 0..n {
            if dist[i][k] == DIST_INF {
                continue;
            }
            for j in 0..n {
                if dist[k][j] == DIST_INF {
                    continue;
                }
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    for (i, row) in dist.iter().enumerate() {
        if row[i] < 0 {
            return Ok(Err(UnsatReason::ValNegativeCycle));
        }
    }
    for &(a, b, off) in diseqs {
        // a - b = off is forced when both a - b <= off and b - a <= -off.
        if dist[b][a] <= off && dist[a][b] <= -off {
            return Ok(Err(UnsatReason::ValForcedDiseq));
        }
    }
    // Pointwise-minimal nonnegative solution: v = -dist[v][z].
    let values: Vec<i64> = (0..n).map(|i| -dist[i][z]).collect();
    let violated = diseqs
        .iter()
        .copied()
        .find(|&(a, b, off)| values[a] == values[b] + off);
    let Some((a, b, off)) = violated else {
        return Ok(Ok(values));
    };
    // Below: a - b <= off - 1.
    let mut below = edges.to_vec();
    if off - 1 < below[b][a] {
        below[b][a] = off - 1;
    }
    if let Ok(values) = split_on_diseqs(&below, diseqs, z, budget)? {
        return Ok(Ok(values));
    }
    // Above: b - a <= -off - 1.
    let mut above = edges.to_vec();
    if -off - 1 < above[a][b] {
        above[a][b] = -off - 1;
    }
    if let Ok(values) = split_on_diseqs(&above, diseqs, z, budget)? {
        return Ok(Ok(values));
    }
    Ok(Err(UnsatReason::ValForcedDiseq))
}

fn val_vars(lits: &[Literal]) -> Result<Vec<ValVar>, TheoryError> {
    let mut var_set: BTreeSet<ValVar> = BTreeSet::new();
    for lit in lits {
        match lit.atom {
            Atom::ValZero(v) | Atom::ValGt(v, _) => {
                var_set.insert(v);
            }
            Atom::ValSucc(u, v) => {
                var_set.insert(u);
                var_set.insert(v);
            }
            _ => {
                return Err(TheoryError::Defect(format!(
                    "non-val literal {lit} in val fragment"
                )))
            }
        }
    }
    Ok(var_set.into_iter().collect())
}

/// Decide satisfiability of a literal conjunction. Satisfiable verdicts
/// carry a model verified against every input literal.
pub fn check_conjunction(
    lits: &[Literal],
    bounds: &DomainBounds,
) -> Result<TheoryVerdict, TheoryError> {
    let mut input: Vec<Literal> = lits.to_vec();
    input.sort();
    input.dedup();
    let [clock_lits, sel_lits, val_lits] = split_by_sort(&input);

    let clock_model = match solve_clock_fragment(&clock_lits, bounds)? {
        Ok(m) => m,
        Err(reason) => return Ok(TheoryVerdict::Unsat(reason)),
    };
    let sel_model = match solve_sel_fragment(&sel_lits)? {
        Ok(m) => m,
        Err(reason) => return Ok(TheoryVerdict::Unsat(reason)),
    };
    let val_model = match solve_val_fragment(&val_lits)? {
        Ok(m) => m,
        Err(reason) => return Ok(TheoryVerdict::Unsat(reason)),
    };

    let model = FiniteModel {
        clock: clock_model,
        sel: sel_model,
        val: val_model,
    };
    verify_model(&model, &input, "check_conjunction")?;
    Ok(TheoryVerdict::Sat(model))
}

/// A first-order variable of any sort, used by the bounded searches.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum SlotKey {
    Clock(ClockTerm),
    Sel(SelVar),
    Val(ValVar),
}

fn atom_slots(atom: &Atom) -> Vec<SlotKey> {
    match atom {
        Atom::Lt(a, b) | Atom::ClockEq(a, b) => vec![SlotKey::Clock(*a), SlotKey::Clock(*b)],
        Atom::SelEq(a, b) => vec![SlotKey::Sel(*a), SlotKey::Sel(*b)],
        Atom::ValZero(v) | Atom::ValGt(v, _) => vec![SlotKey::Val(*v)],
        Atom::ValSucc(u, v) => vec![SlotKey::Val(*u), SlotKey::Val(*v)],
    }
}

fn eval_atom_slots(atom: &Atom, get: &impl Fn(SlotKey) -> i64) -> bool {
    match atom {
        Atom::Lt(a, b) => get(SlotKey::Clock(*a)) < get(SlotKey::Clock(*b)),
        Atom::ClockEq(a, b) => get(SlotKey::Clock(*a)) == get(SlotKey::Clock(*b)),
        Atom::SelEq(a, b) => get(SlotKey::Sel(*a)) == get(SlotKey::Sel(*b)),
        Atom::ValZero(v) => get(SlotKey::Val(*v)) == 0,
        Atom::ValSucc(u, v) => get(SlotKey::Val(*u)) + 1 == get(SlotKey::Val(*v)),
        Atom::ValGt(v, k) => get(SlotKey::Val(*v)) > *k as i64,
    }
}

impl DomainBounds {
    fn val_domain(&self) -> Vec<i64> {
        (0..=self.val_max.max(-1)).collect()
    }

    fn domain_for(&self, slot: SlotKey) -> Vec<i64> {
        match slot {
            SlotKey::Clock(_) => (0..self.clock_ranks as i64).collect(),
            SlotKey::Sel(_) => (0..self.sel_values as i64).collect(),
            SlotKey::Val(_) => self.val_domain(),
        }
    }
}

/// Backtracking search over one fragment: variables are assigned in slot
/// order and every literal is checked as soon as its last variable is
/// placed. Returns the first model found, or None when the domain is
/// exhausted.
fn dfs_fragment(
    lits: &[Literal],
    slots: &[SlotKey],
    domain: Vec<i64>,
    budget: &mut u64,
) -> Result<Option<Vec<i64>>, TheoryError> {
    let slot_index = |s: SlotKey| slots.binary_search(&s).expect("slot was collected");
    // Literals checked at the depth where their last variable is assigned.
    let mut at_depth: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for (li, lit) in lits.iter().enumerate() {
        let depth = atom_slots(&lit.atom)
            .into_iter()
            .map(slot_index)
            .max()
            .expect("atoms have at least one variable");
        at_depth[depth].push(li);
    }
    let mut values: Vec<i64> = vec![0; slots.len()];
    let mut depth = 0usize;
    let mut cursor: Vec<usize> = vec![0; slots.len() + 1];
    if slots.is_empty() {
        return Ok(Some(values));
    }
    loop {
        if cursor[depth] >= domain.len() {
            // Exhausted this depth; backtrack.
            cursor[depth] = 0;
            if depth == 0 {
                return Ok(None);
            }
            depth -= 1;
            cursor[depth] += 1;
            continue;
        }
        if *budget == 0 {
            return Err(TheoryError::BudgetExceeded {
                needed: 1,
                budget: DEFAULT_SEARCH_BUDGET,
            });
        }
        *budget -= 1;
        values[depth] = domain[cursor[depth]];
        let get = |s: SlotKey| values[slot_index(s)];
        let ok = at_depth[depth]
            .iter()
            .all(|&li| eval_atom_slots(&lits[li].atom, &get) == lits[li].positive);
        if !ok {
            cursor[depth] += 1;
            continue;
        }
        if depth + 1 == slots.len() {
            return Ok(Some(values));
        }
        depth += 1;
        cursor[depth] = 0;
    }
}

/// Exhaustive bounded-model search for a literal conjunction. The fragments
/// are searched independently (the sorts share no symbols). `None` means no
/// model exists within the bounds.
pub fn find_model_bounded(
    lits: &[Literal],
    bounds: &DomainBounds,
) -> Result<Option<FiniteModel>, TheoryError> {
    let mut input: Vec<Literal> = lits.to_vec();
    input.sort();
    input.dedup();
    let mut budget = DEFAULT_SEARCH_BUDGET;
    let mut model = FiniteModel::default();
    for fragment in split_by_sort(&input) {
        if fragment.is_empty() {
            continue;
        }
        let mut slot_set: BTreeSet<SlotKey> = BTreeSet::new();
        for lit in &fragment {
            slot_set.extend(atom_slots(&lit.atom));
        }
        let slots: Vec<SlotKey> = slot_set.into_iter().collect();
        let domain = bounds.domain_for(slots[0]);
        match dfs_fragment(&fragment, &slots, domain, &mut budget)? {
            Some(values) => {
                for (slot, value) in slots.into_iter().zip(values) {
                    model.insert_slot(slot, value);
                }
            }
            None => return Ok(None),
        }
    }
    verify_model(&model, &input, "find_model_bounded")?;
    Ok(Some(model))
}

/// Exhaustive bounded-model search for a full CNF formula. Variables are
/// assigned in a fixed order (selection, event clocks, supremum clocks,
/// values) and a branch is cut as soon as some clause has every literal
/// false. `None` means the formula has no model within the bounds.
pub fn find_cnf_model_bounded(
    cnf: &CnfFormula,
    bounds: &DomainBounds,
    budget: u64,
) -> Result<Option<FiniteModel>, TheoryError> {
    let mut sel_slots: BTreeSet<SlotKey> = BTreeSet::new();
    let mut event_slots: BTreeSet<SlotKey> = BTreeSet::new();
    let mut sup_slots: BTreeSet<SlotKey> = BTreeSet::new();
    let mut val_slots: BTreeSet<SlotKey> = BTreeSet::new();
    for atom in cnf.abstraction().atoms() {
        for slot in atom_slots(atom) {
            match slot {
                SlotKey::Sel(_) => sel_slots.insert(slot),
                SlotKey::Clock(ClockTerm::Event(_)) => event_slots.insert(slot),
                SlotKey::Clock(ClockTerm::Sup(_)) => sup_slots.insert(slot),
                SlotKey::Val(_) => val_slots.insert(slot),
            };
        }
    }
    let slots: Vec<SlotKey> = sel_slots
        .into_iter()
        .chain(event_slots)
        .chain(sup_slots)
        .chain(val_slots)
        .collect();
    let slot_index: BTreeMap<SlotKey, usize> =
        slots.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    // For each clause literal: its slots as indices and the depth (maximum
    // slot index) at which it becomes fully assigned.
    struct LitInfo {
        clause: usize,
        lit: Literal,
        depth: usize,
    }
    let mut by_depth: Vec<Vec<LitInfo>> = (0..slots.len()).map(|_| Vec::new()).collect();
    let mut clause_sizes: Vec<usize> = Vec::with_capacity(cnf.clauses().len());
    for (ci, clause) in cnf.clauses().iter().enumerate() {
        clause_sizes.push(clause.len());
        for lit in clause.literals() {
            let depth = atom_slots(&lit.atom)
                .into_iter()
                .map(|s| slot_index[&s])
                .max()
                .expect("atoms have at least one variable");
            by_depth[depth].push(LitInfo { clause: ci, lit: *lit, depth });
        }
    }
    let domains: Vec<Vec<i64>> = slots.iter().map(|s| bounds.domain_for(*s)).collect();

    let mut false_count: Vec<usize> = vec![0; cnf.clauses().len()];
    let mut values: Vec<i64> = vec![0; slots.len()];
    let mut cursor: Vec<usize> = vec![0; slots.len()];
    let mut spent: u64 = 0;
    let mut depth = 0usize;
    if slots.is_empty() {
        return Ok(None);
    }

    // Apply / undo the literal falsifications caused by assigning `depth`.
    let falsify = |depth: usize,
                   values: &Vec<i64>,
                   false_count: &mut Vec<usize>,
                   undo: bool|
     -> bool {
        let get = |s: SlotKey| values[slot_index[&s]];
        let mut conflict = false;
        for info in &by_depth[depth] {
            debug_assert_eq!(info.depth, depth);
            if eval_atom_slots(&info.lit.atom, &get) != info.lit.positive {
                if undo {
                    false_count[info.clause] -= 1;
                } else {
                    false_count[info.clause] += 1;
                    if false_count[info.clause] == clause_sizes[info.clause] {
                        conflict = true;
                    }
                }
            }
        }
        conflict
    };

    loop {
        if cursor[depth] >= domains[depth].len() {
            cursor[depth] = 0;
            if depth == 0 {
                return Ok(None);
            }
            depth -= 1;
            falsify(depth, &values, &mut false_count, true);
            cursor[depth] += 1;
            continue;
        }
        spent += 1;
        if spent > budget {
            return Err(TheoryError::BudgetExceeded { needed: spent, budget });
        }
        values[depth] = domains[depth][cursor[depth]];
        let conflict = falsify(depth, &values, &mut false_count, false);
        if conflict {
            falsify(depth, &values, &mut false_count, true);
            cursor[depth] += 1;
            continue;
        }
        if depth + 1 == slots.len() {
            let mut model = FiniteModel::default();
            for (slot, value) in slots.iter().zip(&values) {
                model.insert_slot(*slot, *value);
            }
            // Verify: every clause has a true literal.
            for clause in cnf.clauses() {
                let mut sat = false;
                for lit in clause.literals() {
                    if eval_literal(&model, lit)? {
                        sat = true;
                        break;
                    }
                }
                if !sat {
                    return Err(TheoryError::Defect(
                        "cnf search returned a non-model".to_string(),
                    ));
                }
            }
            return Ok(Some(model));
        }
        depth += 1;
    }
}

/// Shrink an unsatisfiable literal set to a minimal theory conflict by
/// deletion. The result and its one-literal-removed subsets are re-checked
/// on every call; a violated contract is an internal defect error.
pub fn minimize_conflict(
    lits: &[Literal],
    bounds: &DomainBounds,
) -> Result<Vec<Literal>, TheoryError> {
    let mut input: Vec<Literal> = lits.to_vec();
    input.sort();
    input.dedup();
    if check_conjunction(&input, bounds)?.is_sat() {
        return Err(TheoryError::ContractViolation(
            "minimize_conflict needs an unsatisfiable input".to_string(),
        ));
    }
    // A minimal conflict lies inside a single sort's fragment: the sorts
    // share no symbols, so unsatisfiability never needs literals of two
    // sorts. Minimize within the first unsatisfiable fragment.
    let mut core: Option<Vec<Literal>> = None;
    for fragment in split_by_sort(&input) {
        if fragment.is_empty() {
            continue;
        }
        if !check_conjunction(&fragment, bounds)?.is_sat() {
            core = Some(fragment);
            break;
        }
    }
    let mut core = core.ok_or_else(|| {
        TheoryError::Defect("unsatisfiable set with only satisfiable fragments".to_string())
    })?;
    let mut i = core.len();
    while i > 0 {
        i -= 1;
        let mut candidate = core.clone();
        candidate.remove(i);
        if candidate.is_empty() {
            continue;
        }
        if !check_conjunction(&candidate, bounds)?.is_sat() {
            core = candidate;
            if i > core.len() {
                i = core.len();
            }
        }
    }
    // Contract: the core is unsatisfiable and every single deletion is not.
    if check_conjunction(&core, bounds)?.is_sat() {
        return Err(TheoryError::Defect(
            "minimized core is satisfiable".to_string(),
        ));
    }
    for i in 0..core.len() {
        let mut candidate = core.clone();
        candidate.remove(i);
        if !check_conjunction(&candidate, bounds)?.is_sat() {
            return Err(TheoryError::Defect(format!(
                "core is not minimal: still unsatisfiable without {}",
                core[i]
            )));
        }
    }
    Ok(core)
}
