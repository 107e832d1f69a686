//! Event-based model of the shared-counter challenge program and an
//! operational safety oracle that enumerates interleavings directly.
//!
//! The program for parameter N has N incrementer threads (read the shared
//! cell, write the read value plus one) and a checker thread that reads the
//! cell and asserts the value is at most N. The cell starts at 0, modeled by
//! a distinguished initializing write. Program order is kept as generator
//! pairs of a partial order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::EventId;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum EventKind {
    Read,
    Write,
}

/// Value written by a write event: the constant 0, or one plus the value
/// obtained by a read event of the same thread.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum WriteValueTerm {
    ConstZero,
    SuccOfRead(EventId),
}

/// Event guard. The challenge program has no conditionals, so every guard is
/// trivially true; `Opaque` marks a condition the toolkit does not model and
/// the encoder refuses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Guard {
    Trivial,
    Opaque,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub kind: EventKind,
    pub thread: u32,
    pub address: u32,
    /// Written value term; writes only.
    pub value: Option<WriteValueTerm>,
    pub guard: Guard,
}

/// A program as a partially ordered set of guarded memory events.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ProgramStructure {
    pub n: u32,
    /// Events in declaration order; ids are dense and match positions.
    pub events: Vec<Event>,
    /// Program-order generator pairs (before, after).
    pub ppo: Vec<(EventId, EventId)>,
    /// Asserted read and the bound it is compared against: the program is
    /// safe when the read value never exceeds the bound.
    pub assertion: (EventId, u32),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("n must be at least 1")]
    NTooSmall,
    #[error("structure is invalid: {0:?}")]
    InvalidStructure(Vec<StructureDefect>),
    #[error("operational oracle supports a single shared address, found {0} addresses")]
    MultiAddress(usize),
    #[error("write {write} evaluates read {read} which is not placed yet")]
    UnboundRead { write: EventId, read: EventId },
    #[error("interleaving enumeration for n={n} exceeds the budget of {budget} interleavings")]
    BudgetExceeded { n: u32, budget: u64 },
}

/// A defect found by structure validation.
#[derive(Debug, PartialEq, Eq, Clone)]
pub enum StructureDefect {
    IdMismatch { position: usize, id: EventId },
    PpoReflexive(EventId),
    PpoUnknownEvent(EventId),
    PpoCyclic,
    WriteWithoutValue(EventId),
    ReadWithValue(EventId),
    ValueFromNonRead { write: EventId, arg: EventId },
    AssertionUnknownEvent(EventId),
    AssertionNotARead(EventId),
}

impl ProgramStructure {
    pub fn event(&self, id: EventId) -> Option<&Event> {
        self.events.get(id.0 as usize)
    }

    pub fn reads(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Read)
    }

    pub fn writes(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Write)
    }

    /// The initializing write (the unique write of constant 0), if any.
    pub fn init_write(&self) -> Option<&Event> {
        self.writes()
            .find(|e| e.value == Some(WriteValueTerm::ConstZero))
    }
}

/// Build the challenge program for parameter `n` with the standard assertion
/// bound `n`.
pub fn build_fkp(n: u32) -> Result<ProgramStructure, ProgramError> {
    build_fkp_with_bound(n, n)
}

/// Build the challenge program with an explicit assertion bound. The standard
/// program uses bound = n (safe); bound = n-1 yields the unsafe mutation.
pub fn build_fkp_with_bound(n: u32, bound: u32) -> Result<ProgramStructure, ProgramError> {
    if n == 0 {
        return Err(ProgramError::NTooSmall);
    }
    let mut events = Vec::with_capacity(2 * n as usize + 2);
    events.push(Event {
        id: EventId(0),
        kind: EventKind::Write,
        thread: 0,
        address: 0,
        value: Some(WriteValueTerm::ConstZero),
        guard: Guard::Trivial,
    });
    for i in 1..=n {
        let r = EventId(2 * i - 1);
        let w = EventId(2 * i);
        events.push(Event {
            id: r,
            kind: EventKind::Read,
            thread: i,
            address: 0,
            value: None,
            guard: Guard::Trivial,
        });
        events.push(Event {
            id: w,
            kind: EventKind::Write,
            thread: i,
            address: 0,
            value: Some(WriteValueTerm::SuccOfRead(r)),
            guard: Guard::Trivial,
        });
    }
    let r_assert = EventId(2 * n + 1);
    events.push(Event {
        id: r_assert,
        kind: EventKind::Read,
        thread: 0,
        address: 0,
        value: None,
        guard: Guard::Trivial,
    });
    let mut ppo = Vec::with_capacity(2 * n as usize + 1);
    for i in 1..=n {
        ppo.push((EventId(0), EventId(2 * i - 1)));
        ppo.push((EventId(2 * i - 1), EventId(2 * i)));
    }
    ppo.push((EventId(0), r_assert));
    Ok(ProgramStructure {
        n,
        events,
        ppo,
        assertion: (r_assert, bound),
    })
}

/// Check well-formedness: dense ids, irreflexive acyclic program order over
/// known events, values exactly on writes and referring to reads, and an
/// assertion naming a read.
pub fn validate_structure(p: &ProgramStructure) -> Vec<StructureDefect> {
    let mut defects = Vec::new();
    for (pos, e) in p.events.iter().enumerate() {
        if e.id.0 as usize != pos {
            defects.push(StructureDefect::IdMismatch { position: pos, id: e.id });
        }
        match (e.kind, e.value) {
            (EventKind::Write, None) => defects.push(StructureDefect::WriteWithoutValue(e.id)),
            (EventKind::Read, Some(_)) => defects.push(StructureDefect::ReadWithValue(e.id)),
            (EventKind::Write, Some(WriteValueTerm::SuccOfRead(r))) => {
                match p.event(r) {
                    Some(src) if src.kind == EventKind::Read => {}
                    _ => defects.push(StructureDefect::ValueFromNonRead { write: e.id, arg: r }),
                }
            }
            _ => {}
        }
    }
    let known = |id: EventId| (id.0 as usize) < p.events.len();
    for &(a, b) in &p.ppo {
        if a == b {
            defects.push(StructureDefect::PpoReflexive(a));
        }
        for id in [a, b] {
            if !known(id) {
                defects.push(StructureDefect::PpoUnknownEvent(id));
            }
        }
    }
    if defects.is_empty() && topological_order(p).is_none() {
        defects.push(StructureDefect::PpoCyclic);
    }
    let (ar, _) = p.assertion;
    match p.event(ar) {
        None => defects.push(StructureDefect::AssertionUnknownEvent(ar)),
        Some(e) if e.kind != EventKind::Read => {
            defects.push(StructureDefect::AssertionNotARead(ar))
        }
        _ => {}
    }
    defects
}

fn topological_order(p: &ProgramStructure) -> Option<Vec<EventId>> {
    let n = p.events.len();
    let mut indeg = vec![0usize; n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &p.ppo {
        succs[a.0 as usize].push(b.0 as usize);
        indeg[b.0 as usize] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(EventId(i as u32));
        for &s in &succs[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Result of exhaustive interleaving enumeration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SafetyReport {
    /// Number of sequentially consistent interleavings (linear extensions of
    /// program order; the initializing write is order-minimal by
    /// construction, so it is first in all of them).
    pub interleavings: u64,
    /// Interleavings in which the asserted read exceeds the bound.
    pub violations: u64,
}

/// Closed form for the interleaving count of the standard program,
/// (2n+1)! / 2^n, with overflow checking.
pub fn expected_interleavings(n: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for k in 2..=(2 * n as u64 + 1) {
        acc = acc.checked_mul(k)?;
    }
    Some(acc >> n)
}

const INTERLEAVING_BUDGET: u64 = 100_000_000;

/// Enumerate every interleaving, simulate it, and count assertion violations.
pub fn check_safety_operational(p: &ProgramStructure) -> Result<SafetyReport, ProgramError> {
    let defects = validate_structure(p);
    if !defects.is_empty() {
        return Err(ProgramError::InvalidStructure(defects));
    }
    let mut addresses: Vec<u32> = p.events.iter().map(|e| e.address).collect();
    addresses.sort_unstable();
    addresses.dedup();
    if addresses.len() != 1 {
        return Err(ProgramError::MultiAddress(addresses.len()));
    }
    if let Some(expected) = expected_interleavings(p.n) {
        if expected > INTERLEAVING_BUDGET {
            return Err(ProgramError::BudgetExceeded { n: p.n, budget: INTERLEAVING_BUDGET });
        }
    } else {
        return Err(ProgramError::BudgetExceeded { n: p.n, budget: INTERLEAVING_BUDGET });
    }

    let n = p.events.len();
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in &p.ppo {
        succs[a.0 as usize].push(b.0 as usize);
        indeg[b.0 as usize] += 1;
    }

    struct Sim<'a> {
        p: &'a ProgramStructure,
        succs: Vec<Vec<usize>>,
        indeg: Vec<usize>,
        placed: Vec<bool>,
        rval: BTreeMap<EventId, u64>,
        cell: u64,
        report: SafetyReport,
    }

    impl Sim<'_> {
        fn run(&mut self, remaining: usize) -> Result<(), ProgramError> {
            if remaining == 0 {
                self.report.interleavings += 1;
                let (ar, bound) = self.p.assertion;
                if self.rval[&ar] > bound as u64 {
                    self.report.violations += 1;
                }
                return Ok(());
            }
            for i in 0..self.indeg.len() {
                if self.placed[i] || self.indeg[i] != 0 {
                    continue;
                }
                let ev = &self.p.events[i];
                let saved_cell = self.cell;
                let mut saved_rval = None;
                match ev.kind {
                    EventKind::Read => {
                        saved_rval = self.rval.insert(ev.id, self.cell);
                    }
                    EventKind::Write => {
                        self.cell = match ev.value.expect("validated write has value") {
                            WriteValueTerm::ConstZero => 0,
                            WriteValueTerm::SuccOfRead(r) => {
                                let v = self.rval.get(&r).copied().ok_or(
                                    ProgramError::UnboundRead { write: ev.id, read: r },
                                )?;
                                v + 1
                            }
                        };
                    }
                }
                self.placed[i] = true;
                for &s in &self.succs[i] {
                    self.indeg[s] -= 1;
                }
                self.run(remaining - 1)?;
                for &s in &self.succs[i] {
                    self.indeg[s] += 1;
                }
                self.placed[i] = false;
                self.cell = saved_cell;
                if ev.kind == EventKind::Read {
                    match saved_rval {
                        Some(v) => {
                            self.rval.insert(ev.id, v);
                        }
                        None => {
                            self.rval.remove(&ev.id);
                        }
                    }
                }
            }
            Ok(())
        }
    }

    let mut sim = Sim {
        p,
        succs,
        indeg,
        placed: vec![false; n],
        rval: BTreeMap::new(),
        cell: 0,
        report: SafetyReport { interleavings: 0, violations: 0 },
    };
    sim.run(n)?;
    Ok(sim.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fkp_shape_for_n2() {
        let p = build_fkp(2).unwrap();
        assert_eq!(p.events.len(), 6);
        assert_eq!(p.reads().count(), 3);
        assert_eq!(p.writes().count(), 3);
        assert_eq!(p.init_write().unwrap().id, EventId(0));
        assert_eq!(p.assertion, (EventId(5), 2));
        assert_eq!(
            p.ppo,
            vec![
                (EventId(0), EventId(1)),
                (EventId(1), EventId(2)),
                (EventId(0), EventId(3)),
                (EventId(3), EventId(4)),
                (EventId(0), EventId(5)),
            ]
        );
        let w1 = p.event(EventId(2)).unwrap();
        assert_eq!(w1.value, Some(WriteValueTerm::SuccOfRead(EventId(1))));
        assert_eq!(w1.thread, 1);
        assert!(validate_structure(&p).is_empty());
    }

    #[test]
    fn fkp_sizes() {
        for n in 1..=9 {
            let p = build_fkp(n).unwrap();
            assert_eq!(p.events.len(), 2 * n as usize + 2);
            assert_eq!(p.ppo.len(), 2 * n as usize + 1);
            assert!(validate_structure(&p).is_empty());
        }
        assert_eq!(build_fkp(0), Err(ProgramError::NTooSmall));
    }

    #[test]
    fn validation_finds_defects() {
        let mut p = build_fkp(1).unwrap();
        p.ppo.push((EventId(1), EventId(1)));
        assert!(validate_structure(&p).contains(&StructureDefect::PpoReflexive(EventId(1))));

        let mut p = build_fkp(1).unwrap();
        p.events[2].value = None;
        assert!(validate_structure(&p)
            .contains(&StructureDefect::WriteWithoutValue(EventId(2))));

        let mut p = build_fkp(1).unwrap();
        p.ppo.push((EventId(2), EventId(0)));
        assert!(validate_structure(&p).contains(&StructureDefect::PpoCyclic));

        let mut p = build_fkp(1).unwrap();
        p.assertion = (EventId(2), 1);
        assert!(validate_structure(&p)
            .contains(&StructureDefect::AssertionNotARead(EventId(2))));
    }

    #[test]
    fn interleaving_counts_match_closed_form() {
        // (2n+1)!/2^n: 3, 30, 630, 22680.
        let expected = [3u64, 30, 630, 22680];
        for (n, want) in (1..=4).zip(expected) {
            let p = build_fkp(n).unwrap();
            let report = check_safety_operational(&p).unwrap();
            assert_eq!(report.interleavings, want, "n={n}");
            assert_eq!(report.interleavings, expected_interleavings(n).unwrap());
            assert_eq!(report.violations, 0, "standard program is safe, n={n}");
        }
    }

    #[test]
    fn tightened_bound_is_violated() {
        for n in 1..=3 {
            let p = build_fkp_with_bound(n, n - 1).unwrap();
            let report = check_safety_operational(&p).unwrap();
            assert!(report.violations > 0, "n={n}");
            assert!(report.violations < report.interleavings, "n={n}");
        }
    }

    #[test]
    fn multi_address_is_refused() {
        let mut p = build_fkp(1).unwrap();
        p.events[1].address = 1;
        assert_eq!(check_safety_operational(&p), Err(ProgramError::MultiAddress(2)));
    }

    #[test]
    fn oversized_enumeration_is_refused() {
        let p = build_fkp(9).unwrap();
        assert!(matches!(
            check_safety_operational(&p),
            Err(ProgramError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn invalid_structure_is_refused_by_oracle() {
        let mut p = build_fkp(1).unwrap();
        p.ppo.push((EventId(2), EventId(0)));
        assert!(matches!(
            check_safety_operational(&p),
            Err(ProgramError::InvalidStructure(_))
        ));
    }
}
