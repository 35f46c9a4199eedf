//! Precision, recall and F-score over the elements of action models.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::domain::{ActionModel, Comparator, Condition, Domain, Effect, LiftedKey, NumericKind};
use crate::error::EvalError;
use crate::expr::Canonical;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let fscore = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            fscore,
        }
    }
}

/// A precondition or effect in normal form for comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Element {
    Literal {
        atom: LiftedKey,
        value: bool,
    },
    Compare {
        cmp: Comparator,
        lhs: Canonical,
        rhs: Canonical,
    },
    Add(LiftedKey),
    Delete(LiftedKey),
    Update {
        kind: NumericKind,
        target: LiftedKey,
        amount: Canonical,
    },
}

fn condition_element(c: &Condition) -> Element {
    match c {
        Condition::Literal { atom, value } => Element::Literal {
            atom: atom.clone(),
            value: *value,
        },
        Condition::Numeric { cmp, lhs, rhs } => {
            let (l, r) = (lhs.canonical(), rhs.canonical());
            match cmp {
                Comparator::Le => Element::Compare {
                    cmp: Comparator::Ge,
                    lhs: r,
                    rhs: l,
                },
                Comparator::Lt => Element::Compare {
                    cmp: Comparator::Gt,
                    lhs: r,
                    rhs: l,
                },
                Comparator::Eq if r < l => Element::Compare {
                    cmp: Comparator::Eq,
                    lhs: r,
                    rhs: l,
                },
                _ => Element::Compare {
                    cmp: *cmp,
                    lhs: l,
                    rhs: r,
                },
            }
        }
    }
}

fn effect_element(e: &Effect) -> Element {
    match e {
        Effect::Add(k) => Element::Add(k.clone()),
        Effect::Delete(k) => Element::Delete(k.clone()),
        Effect::Numeric {
            kind,
            target,
            amount,
        } => Element::Update {
            kind: *kind,
            target: target.clone(),
            amount: amount.canonical(),
        },
    }
}

pub fn elements(m: &ActionModel) -> BTreeSet<Element> {
    m.preconditions
        .iter()
        .map(condition_element)
        .chain(m.effects.iter().map(effect_element))
        .collect()
}

/// Compares a learned model with a reference model element by element.
pub fn score_model(learned: &ActionModel, reference: &ActionModel) -> Result<Metrics, EvalError> {
    if learned.arity() != reference.arity() {
        return Err(EvalError::ArityMismatch {
            action: reference.name.clone(),
            learned: learned.arity(),
            reference: reference.arity(),
        });
    }
    let l = elements(learned);
    let r = elements(reference);
    let tp = l.intersection(&r).count();
    Ok(Metrics::from_counts(tp, l.len() - tp, r.len() - tp))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainScore {
    pub per_action: BTreeMap<String, Metrics>,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

/// Scores every reference action; an action the learned domain lacks (or
/// learned with another arity) scores F = 0. Domain values are means over
/// the reference actions.
pub fn score_domain(learned: &Domain, reference: &Domain) -> DomainScore {
    let mut per_action = BTreeMap::new();
    for (name, r) in &reference.actions {
        let m = learned
            .get(name)
            .and_then(|l| score_model(l, r).ok())
            .unwrap_or_else(|| Metrics::from_counts(0, 0, elements(r).len()).with_zero_score());
        per_action.insert(name.clone(), m);
    }
    let n = per_action.len().max(1) as f64;
    let mean = |f: fn(&Metrics) -> f64| per_action.values().map(f).sum::<f64>() / n;
    DomainScore {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        fscore: mean(|m| m.fscore),
        per_action,
    }
}

impl Metrics {
    fn with_zero_score(mut self) -> Self {
        self.precision = 0.0;
        self.recall = 0.0;
        self.fscore = 0.0;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Op};

    fn key(n: &str, p: &[usize]) -> LiftedKey {
        LiftedKey::new(n, p.to_vec())
    }

    fn lit(n: &str, p: &[usize]) -> Condition {
        Condition::Literal {
            atom: key(n, p),
            value: true,
        }
    }

    #[test]
    fn formula_examples() {
        let m = Metrics::from_counts(4, 0, 1);
        assert_eq!((m.precision, m.recall), (1.0, 0.8));
        assert!((m.fscore - 8.0 / 9.0).abs() < 1e-12);
        let m = Metrics::from_counts(4, 2, 0);
        assert!((m.precision - 4.0 / 6.0).abs() < 1e-12);
        assert!((m.fscore - 0.8).abs() < 1e-12);
        let m = Metrics::from_counts(0, 0, 0);
        assert_eq!(m.fscore, 1.0);
        assert_eq!(Metrics::from_counts(0, 3, 2).fscore, 0.0);
    }

    #[test]
    fn comparisons_match_when_mirrored() {
        let mut a = ActionModel::new("a", 2);
        let mut b = ActionModel::new("a", 2);
        let x = Expr::var(key("x", &[0]));
        let yz = Expr::bin(
            Op::Mul,
            Expr::var(key("y", &[1])),
            Expr::var(key("z", &[0])),
        );
        let zy = Expr::bin(
            Op::Mul,
            Expr::var(key("z", &[0])),
            Expr::var(key("y", &[1])),
        );
        a.preconditions.insert(Condition::Numeric {
            cmp: Comparator::Ge,
            lhs: x.clone(),
            rhs: yz,
        });
        b.preconditions.insert(Condition::Numeric {
            cmp: Comparator::Le,
            lhs: zy,
            rhs: x,
        });
        a.preconditions.insert(lit("p", &[1]));
        b.preconditions.insert(lit("p", &[1]));
        let m = score_model(&a, &b).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (2, 0, 0));
    }

    #[test]
    fn arity_mismatch() {
        let a = ActionModel::new("a", 1);
        let b = ActionModel::new("a", 2);
        assert!(matches!(
            score_model(&a, &b),
            Err(EvalError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn missing_action_scores_zero() {
        let mut r = Domain::new("d");
        let mut m = ActionModel::new("a", 1);
        m.preconditions.insert(lit("p", &[0]));
        r.insert(m.clone());
        let mut other = m.clone();
        other.name = "b".into();
        r.insert(other);
        let mut l = Domain::new("d");
        l.insert(m);
        let s = score_domain(&l, &r);
        assert_eq!(s.per_action["a"].fscore, 1.0);
        assert_eq!(s.per_action["b"].fscore, 0.0);
        assert_eq!(s.fscore, 0.5);
    }
}
