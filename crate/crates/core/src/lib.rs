//! Model checking for modal logic under team semantics, with dependence,
//! independence and generalized dependence atoms.
//!
//! Formulas are parsed from text ([`formula::parse`]) and checked against a
//! finite Kripke model and a team ([`checker::check`]). Satisfiability is
//! explored both by bounded model search ([`bounded_sat`]) and by translation
//! into existential second-order logic ([`fo_translate`]).

pub mod atoms;
pub mod bisim;
pub mod bounded_sat;
pub mod checker;
pub mod cli;
pub mod dining;
pub mod fo_translate;
pub mod formula;
pub mod kripke;
