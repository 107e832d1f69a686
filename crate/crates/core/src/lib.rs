//! Toolkit for the fkp2013 shared-counter benchmark family: partial-order
//! SMT encodings (cubic and quadratic), an operational safety oracle, a
//! factorial lower-bound certifier for theory-conflict counts, an
//! instrumented DPLL(T) engine with a proof checker, and an SMT-LIB 2
//! benchmark generator with an external-solver harness.

pub mod dpllt;
pub mod encoder;
pub mod logic;
pub mod lowerbound;
pub mod program;
pub mod smtlib;
pub mod theory;
