//! School-choice matching library and verification harness.
//!
//! The library models many-to-one school choice with strict priorities and
//! strict student preferences, implements the classical mechanisms
//! (student- and school-proposing deferred acceptance, immediate acceptance,
//! serial dictatorship, the school-median stable rule), and ships the
//! verification machinery used to audit them: stability audits and
//! brute-force stable-set enumeration, improvement-graph construction with
//! edge replacement and cycle extraction, exhaustive incentive-axiom
//! checkers, a variable-population characterization engine with priority
//! recovery, general choice functions, and a colleague-preference
//! (externalities) model.
//!
//! Everything is pure and deterministic: all types are immutable after
//! construction, mechanisms are functions of their inputs, and sampled
//! searches are driven by explicit seeds.

pub mod axioms;
pub mod charax;
pub mod choicefn;
pub mod cycles;
pub mod externalities;
pub mod fixtures;
pub mod instance;
pub mod mechanisms;
pub mod model;
pub mod orders;
pub mod stability;
pub mod sweeps;

pub use model::{
    Alternative, Matching, ModelError, Preference, PreferenceProfile, PriorityOrder,
    SchoolChoiceContext, SchoolId, StudentId,
};
