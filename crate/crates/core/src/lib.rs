//! Learning numeric planning action models from noisy plan traces.
//!
//! The pipeline groups trace transitions per action, lifts them into
//! labelled datasets, filters logical and numeric noise, synthesises
//! arithmetic features, induces weighted rules, refines them into one
//! pre/post meta-state per action and emits PDDL.

pub mod domain;
pub mod error;
pub mod eval;
pub mod expr;
pub mod model;
pub mod noise;
pub mod pddl;
pub mod refine;
pub mod rules;
pub(crate) mod sexpr;
pub mod synthesis;
pub mod trace;
pub mod transitions;

pub use domain::{ActionModel, Comparator, Condition, Domain, Effect, LiftedKey, NumericKind};
pub use error::{EvalError, LearnError, PddlError, TraceError};
pub use expr::{Expr, Op};
pub use pddl::{parse_reference_domain, serialize_domain};
pub use trace::{parse_plan_trace, write_plan_trace, ActionInstance, Atom, PlanTrace, State};
