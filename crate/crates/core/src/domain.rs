//! Learned (or reference) PDDL action models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::trace::Atom;

/// Schema-level atom: a predicate or function name applied to action
/// parameter positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiftedKey {
    pub name: String,
    pub params: Vec<usize>,
}

impl LiftedKey {
    pub fn new(name: impl Into<String>, params: Vec<usize>) -> Self {
        LiftedKey {
            name: name.into(),
            params,
        }
    }

    /// Grounds the key against concrete action arguments.
    pub fn ground(&self, args: &[String]) -> Option<Atom> {
        let mut out = Vec::with_capacity(self.params.len());
        for &p in &self.params {
            out.push(args.get(p)?.clone());
        }
        Some(Atom {
            name: self.name.clone(),
            args: out,
        })
    }

    pub fn max_param(&self) -> Option<usize> {
        self.params.iter().copied().max()
    }
}

pub fn param_symbol(index: usize) -> String {
    format!("?arg_{index}")
}

impl fmt::Display for LiftedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for p in &self.params {
            write!(f, " {}", param_symbol(*p))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
}

/// Absolute slack used when comparing fluent values.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Lt => "<",
            Comparator::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            ">=" => Comparator::Ge,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            "<" => Comparator::Lt,
            "=" => Comparator::Eq,
            _ => return None,
        })
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        let tol = NUMERIC_TOLERANCE * a.abs().max(b.abs()).max(1.0);
        match self {
            Comparator::Ge => a >= b - tol,
            Comparator::Le => a <= b + tol,
            Comparator::Gt => a > b + tol,
            Comparator::Lt => a < b - tol,
            Comparator::Eq => (a - b).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    Literal {
        atom: LiftedKey,
        value: bool,
    },
    Numeric {
        cmp: Comparator,
        lhs: Expr,
        rhs: Expr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NumericKind {
    Increase,
    Decrease,
    Assign,
}

impl NumericKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NumericKind::Increase => "increase",
            NumericKind::Decrease => "decrease",
            NumericKind::Assign => "assign",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "increase" => NumericKind::Increase,
            "decrease" => NumericKind::Decrease,
            "assign" => NumericKind::Assign,
            _ => return None,
        })
    }

    pub fn apply(self, current: f64, amount: f64) -> f64 {
        match self {
            NumericKind::Increase => current + amount,
            NumericKind::Decrease => current - amount,
            NumericKind::Assign => amount,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Effect {
    Add(LiftedKey),
    Delete(LiftedKey),
    Numeric {
        kind: NumericKind,
        target: LiftedKey,
        amount: Expr,
    },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Literal { atom, value: true } => write!(f, "{atom}"),
            Condition::Literal { atom, value: false } => write!(f, "(not {atom})"),
            Condition::Numeric { cmp, lhs, rhs } => write!(f, "({} {lhs} {rhs})", cmp.symbol()),
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Add(k) => write!(f, "{k}"),
            Effect::Delete(k) => write!(f, "(not {k})"),
            Effect::Numeric {
                kind,
                target,
                amount,
            } => {
                write!(f, "({} {target} {amount})", kind.keyword())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionModel {
    pub name: String,
    /// Parameter types, one per position.
    pub parameters: Vec<String>,
    pub preconditions: BTreeSet<Condition>,
    pub effects: BTreeSet<Effect>,
}

impl ActionModel {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        ActionModel {
            name: name.into(),
            parameters: vec!["object".to_string(); arity],
            preconditions: BTreeSet::new(),
            effects: BTreeSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.parameters.len()
    }

    /// Every lifted key mentioned anywhere in the model.
    pub fn keys(&self) -> Vec<&LiftedKey> {
        let mut out = Vec::new();
        for c in &self.preconditions {
            match c {
                Condition::Literal { atom, .. } => out.push(atom),
                Condition::Numeric { lhs, rhs, .. } => {
                    out.extend(lhs.variables());
                    out.extend(rhs.variables());
                }
            }
        }
        for e in &self.effects {
            match e {
                Effect::Add(k) | Effect::Delete(k) => out.push(k),
                Effect::Numeric { target, amount, .. } => {
                    out.push(target);
                    out.extend(amount.variables());
                }
            }
        }
        out
    }

    /// Checks declared parameters cover every reference and that no
    /// predicate is both added and deleted.
    pub fn check(&self) -> Result<(), String> {
        for k in self.keys() {
            if let Some(p) = k.max_param() {
                if p >= self.arity() {
                    return Err(format!(
                        "{}: {k} uses undeclared parameter {}",
                        self.name,
                        param_symbol(p)
                    ));
                }
            }
        }
        for e in &self.effects {
            if let Effect::Add(k) = e {
                if self.effects.contains(&Effect::Delete(k.clone())) {
                    return Err(format!("{}: {k} is both added and deleted", self.name));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub actions: BTreeMap<String, ActionModel>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            actions: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, model: ActionModel) {
        self.actions.insert(model.name.clone(), model);
    }

    pub fn get(&self, name: &str) -> Option<&ActionModel> {
        self.actions.get(name)
    }
}
