//! Rate-based congestion control workbench: a dumbbell network simulator,
//! experience collection from expert policies, deep symbolic regression into
//! closed-form policies, and evaluation/analysis of those policies.

pub mod config;
pub mod dsr;
pub mod env;
pub mod eval;
pub mod expr;
pub mod netsim;
pub mod policy;
