//! Executes a recorded plan with a domain and compares the resulting states.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::domain::{ActionModel, Condition, Effect, LiftedKey};
use crate::error::EvalError;
use crate::expr::format_number;
use crate::trace::{ActionInstance, Atom, PlanTrace, State};

/// Relative slack when comparing fluent values.
pub const FLUENT_TOLERANCE: f64 = 1e-6;

/// Closed-world view of a state: absent literals are false.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldState {
    pub literals: BTreeMap<Atom, bool>,
    pub fluents: BTreeMap<Atom, f64>,
}

impl From<&State> for WorldState {
    fn from(s: &State) -> Self {
        WorldState {
            literals: s.literals.clone(),
            fluents: s.fluents.clone(),
        }
    }
}

impl WorldState {
    pub fn holds(&self, atom: &Atom) -> bool {
        self.literals.get(atom).copied().unwrap_or(false)
    }

    pub fn to_state(&self, index: usize) -> State {
        State {
            index,
            literals: self.literals.clone(),
            fluents: self.fluents.clone(),
        }
    }
}

fn ground(key: &LiftedKey, action: &ActionInstance) -> Result<Atom, EvalError> {
    key.ground(&action.args)
        .ok_or_else(|| EvalError::ArityMismatch {
            action: action.name.clone(),
            learned: key.max_param().map_or(0, |p| p + 1),
            reference: action.args.len(),
        })
}

fn eval(
    expr: &crate::expr::Expr,
    state: &WorldState,
    action: &ActionInstance,
) -> Result<f64, EvalError> {
    let mut failure = None;
    let value = expr.eval(&mut |k: &LiftedKey| match ground(k, action) {
        Ok(atom) => match state.fluents.get(&atom) {
            Some(v) => Some(*v),
            None => {
                failure.get_or_insert(EvalError::UnboundFluent(atom.to_string()));
                None
            }
        },
        Err(e) => {
            failure.get_or_insert(e);
            None
        }
    });
    match (value, failure) {
        (_, Some(e)) => Err(e),
        (Some(v), None) => Ok(v),
        (None, None) => Err(EvalError::UnboundFluent(format!(
            "{expr} (division by zero)"
        ))),
    }
}

/// First precondition of `model` that `state` violates under `action`.
pub fn unsatisfied<'m>(
    model: &'m ActionModel,
    state: &WorldState,
    action: &ActionInstance,
) -> Result<Option<&'m Condition>, EvalError> {
    for c in &model.preconditions {
        let ok = match c {
            Condition::Literal { atom, value } => state.holds(&ground(atom, action)?) == *value,
            Condition::Numeric { cmp, lhs, rhs } => {
                cmp.holds(eval(lhs, state, action)?, eval(rhs, state, action)?)
            }
        };
        if !ok {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Applies the effects of `model`. Numeric amounts are evaluated in the
/// state before any effect; deletes precede adds.
pub fn apply(
    model: &ActionModel,
    state: &WorldState,
    action: &ActionInstance,
) -> Result<WorldState, EvalError> {
    let mut next = state.clone();
    let mut updates = Vec::new();
    for e in &model.effects {
        if let Effect::Numeric {
            kind,
            target,
            amount,
        } = e
        {
            let atom = ground(target, action)?;
            let current = match kind {
                crate::domain::NumericKind::Assign => 0.0,
                _ => *state
                    .fluents
                    .get(&atom)
                    .ok_or_else(|| EvalError::UnboundFluent(atom.to_string()))?,
            };
            updates.push((atom, kind.apply(current, eval(amount, state, action)?)));
        }
    }
    for e in &model.effects {
        if let Effect::Delete(k) = e {
            next.literals.insert(ground(k, action)?, false);
        }
    }
    for e in &model.effects {
        if let Effect::Add(k) = e {
            next.literals.insert(ground(k, action)?, true);
        }
    }
    for (atom, v) in updates {
        next.fluents.insert(atom, v);
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ReplayFailure {
    /// `step` is 1-based.
    PreconditionUnsatisfied {
        step: usize,
        action: String,
        condition: String,
    },
    /// The computed state after `step` actions disagrees with the recording.
    Mismatch {
        step: usize,
        atom: String,
        expected: String,
        found: String,
    },
}

impl fmt::Display for ReplayFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayFailure::PreconditionUnsatisfied {
                step,
                action,
                condition,
            } => {
                write!(
                    f,
                    "precondition unsatisfied at action {step} {action}: {condition}"
                )
            }
            ReplayFailure::Mismatch {
                step,
                atom,
                expected,
                found,
            } => {
                write!(
                    f,
                    "state mismatch after step {step}: {atom} expected {expected}, found {found}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub valid: bool,
    pub failure: Option<ReplayFailure>,
}

/// First atom the computed state gets wrong among those `recorded` mentions.
fn first_difference(computed: &WorldState, recorded: &State) -> Option<(String, String, String)> {
    for (atom, &v) in &recorded.literals {
        let got = computed.holds(atom);
        if got != v {
            return Some((atom.to_string(), v.to_string(), got.to_string()));
        }
    }
    for (atom, &v) in &recorded.fluents {
        match computed.fluents.get(atom) {
            Some(&got) if (got - v).abs() <= FLUENT_TOLERANCE * v.abs().max(1.0) => {}
            Some(&got) => return Some((atom.to_string(), format_number(v), format_number(got))),
            None => return Some((atom.to_string(), format_number(v), "undefined".into())),
        }
    }
    None
}

/// Replays the plan of `trace` from its first state. The plan is valid when
/// every precondition holds and the final computed state agrees with the
/// recorded final state on every atom the recording mentions. On a final
/// mismatch the failure names the first step where the states diverge.
pub fn replay_validate(
    d: &crate::domain::Domain,
    trace: &PlanTrace,
) -> Result<ReplayOutcome, EvalError> {
    let Some(first) = trace.states.first() else {
        return Ok(ReplayOutcome {
            valid: true,
            failure: None,
        });
    };
    let mut state = WorldState::from(first);
    let mut divergence = None;
    for (k, action) in trace.actions.iter().enumerate() {
        let model = d
            .get(&action.name)
            .ok_or_else(|| EvalError::UnknownAction(action.name.clone()))?;
        if model.arity() != action.args.len() {
            return Err(EvalError::ArityMismatch {
                action: action.name.clone(),
                learned: model.arity(),
                reference: action.args.len(),
            });
        }
        if let Some(c) = unsatisfied(model, &state, action)? {
            return Ok(ReplayOutcome {
                valid: false,
                failure: Some(ReplayFailure::PreconditionUnsatisfied {
                    step: k + 1,
                    action: action.to_string(),
                    condition: c.to_string(),
                }),
            });
        }
        state = apply(model, &state, action)?;
        if divergence.is_none() {
            if let Some(recorded) = trace.states.get(k + 1) {
                if let Some((atom, expected, found)) = first_difference(&state, recorded) {
                    divergence = Some(ReplayFailure::Mismatch {
                        step: k + 1,
                        atom,
                        expected,
                        found,
                    });
                }
            }
        }
    }
    let last = trace.states.last().expect("non-empty");
    if first_difference(&state, last).is_some() {
        return Ok(ReplayOutcome {
            valid: false,
            failure: divergence,
        });
    }
    Ok(ReplayOutcome {
        valid: true,
        failure: None,
    })
}
