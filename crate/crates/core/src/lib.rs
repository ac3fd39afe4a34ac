//! Planning-domain inference: learn which predicates and actions a task
//! needs from a handful of demonstrations, then verify the smaller domain by
//! planning.

pub mod estimator;
pub mod induction;
pub mod logic;
pub mod pddl;
pub mod pipeline;
pub mod planner;
pub mod search;
pub mod taskgen;
pub mod verify;

pub use logic::*;
