//! Arithmetic expression trees over lifted fluents.

use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::domain::LiftedKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Some(match s {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            _ => return None,
        })
    }

    /// Applies the operator; `None` on a zero denominator or a non-finite result.
    pub fn apply(self, a: f64, b: f64) -> Option<f64> {
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    return None;
                }
                a / b
            }
        };
        v.is_finite().then_some(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Expr {
    Num(OrderedFloat<f64>),
    Var(LiftedKey),
    Bin(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(OrderedFloat(v))
    }

    pub fn var(key: LiftedKey) -> Self {
        Expr::Var(key)
    }

    pub fn bin(op: Op, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Bin(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn variables(&self) -> Vec<&LiftedKey> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a LiftedKey>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(k) => out.push(k),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Evaluates with `lookup` supplying variable values. `None` when a
    /// variable is unbound, a denominator is zero or the result is not finite.
    pub fn eval<F>(&self, lookup: &mut F) -> Option<f64>
    where
        F: FnMut(&LiftedKey) -> Option<f64>,
    {
        match self {
            Expr::Num(v) => Some(v.0),
            Expr::Var(k) => lookup(k),
            Expr::Bin(op, l, r) => {
                let a = l.eval(lookup)?;
                let b = r.eval(lookup)?;
                op.apply(a, b)
            }
        }
    }

    /// Replaces every constant-only subtree by its value.
    pub fn fold_constants(&self) -> Expr {
        match self {
            Expr::Bin(op, l, r) => {
                let l = l.fold_constants();
                let r = r.fold_constants();
                if let (Expr::Num(a), Expr::Num(b)) = (&l, &r) {
                    if let Some(v) = op.apply(a.0, b.0) {
                        return Expr::num(v);
                    }
                }
                Expr::bin(*op, l, r)
            }
            other => other.clone(),
        }
    }

    /// Normal form modulo commutativity and associativity of `+` and `*`,
    /// with constants folded.
    pub fn canonical(&self) -> Canonical {
        match self {
            Expr::Num(v) => Canonical::Num(*v),
            Expr::Var(k) => Canonical::Var(k.clone()),
            Expr::Bin(Op::Add, l, r) => Canonical::sum(vec![l.canonical(), r.canonical()]),
            Expr::Bin(Op::Mul, l, r) => Canonical::product(vec![l.canonical(), r.canonical()]),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.canonical(), r.canonical());
                if let (Canonical::Num(x), Canonical::Num(y)) = (&a, &b) {
                    if let Some(v) = op.apply(x.0, y.0) {
                        return Canonical::Num(OrderedFloat(v));
                    }
                }
                match op {
                    Op::Sub => Canonical::Sub(Box::new(a), Box::new(b)),
                    _ => Canonical::Div(Box::new(a), Box::new(b)),
                }
            }
        }
    }
}

/// Expression normal form used for equivalence checks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Canonical {
    Num(OrderedFloat<f64>),
    Var(LiftedKey),
    Sum(Vec<Canonical>),
    Product(Vec<Canonical>),
    Sub(Box<Canonical>, Box<Canonical>),
    Div(Box<Canonical>, Box<Canonical>),
}

impl Canonical {
    fn sum(parts: Vec<Canonical>) -> Canonical {
        Self::flatten(parts, true)
    }

    fn product(parts: Vec<Canonical>) -> Canonical {
        Self::flatten(parts, false)
    }

    fn flatten(parts: Vec<Canonical>, is_sum: bool) -> Canonical {
        let identity = if is_sum { 0.0 } else { 1.0 };
        let mut constant = identity;
        let mut terms = Vec::new();
        for p in parts {
            match p {
                Canonical::Num(v) => {
                    if is_sum {
                        constant += v.0
                    } else {
                        constant *= v.0
                    }
                }
                Canonical::Sum(inner) if is_sum => terms.extend(inner),
                Canonical::Product(inner) if !is_sum => {
                    for t in inner {
                        match t {
                            Canonical::Num(v) => constant *= v.0,
                            t => terms.push(t),
                        }
                    }
                }
                other => terms.push(other),
            }
        }
        if is_sum {
            // Nested sums were flattened before their constants were folded.
            let mut rest = Vec::with_capacity(terms.len());
            for t in terms {
                match t {
                    Canonical::Num(v) => constant += v.0,
                    t => rest.push(t),
                }
            }
            terms = rest;
        }
        if terms.is_empty() || (!is_sum && constant == 0.0) {
            return Canonical::Num(OrderedFloat(if terms.is_empty() { constant } else { 0.0 }));
        }
        if constant != identity {
            terms.push(Canonical::Num(OrderedFloat(constant)));
        }
        terms.sort();
        if terms.len() == 1 {
            return terms.pop().unwrap();
        }
        if is_sum {
            Canonical::Sum(terms)
        } else {
            Canonical::Product(terms)
        }
    }
}

/// Formats a real the way traces and PDDL files write numbers.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => f.write_str(&format_number(v.0)),
            Expr::Var(k) => write!(f, "{k}"),
            Expr::Bin(op, l, r) => write!(f, "({} {l} {r})", op.symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str, params: &[usize]) -> Expr {
        Expr::var(LiftedKey::new(name, params.to_vec()))
    }

    #[test]
    fn display_is_prefix_notation() {
        let e = Expr::bin(Op::Mul, v("dist", &[1, 2]), v("bat_usage", &[0]));
        assert_eq!(e.to_string(), "(* (dist ?arg_1 ?arg_2) (bat_usage ?arg_0))");
        assert_eq!(e.size(), 3);
    }

    #[test]
    fn canonical_ignores_operand_order_and_grouping() {
        let a = Expr::bin(
            Op::Mul,
            v("x", &[0]),
            Expr::bin(Op::Mul, v("y", &[1]), v("z", &[2])),
        );
        let b = Expr::bin(
            Op::Mul,
            Expr::bin(Op::Mul, v("z", &[2]), v("x", &[0])),
            v("y", &[1]),
        );
        assert_eq!(a.canonical(), b.canonical());
        let c = Expr::bin(Op::Sub, v("x", &[0]), v("y", &[1]));
        let d = Expr::bin(Op::Sub, v("y", &[1]), v("x", &[0]));
        assert_ne!(c.canonical(), d.canonical());
    }

    #[test]
    fn canonical_folds_constants() {
        let e = Expr::bin(Op::Mul, Expr::num(5.0), Expr::num(10.0));
        assert_eq!(e.canonical(), Expr::num(50.0).canonical());
        let s = Expr::bin(
            Op::Add,
            Expr::bin(Op::Add, v("x", &[0]), Expr::num(2.0)),
            Expr::num(3.0),
        );
        let t = Expr::bin(Op::Add, Expr::num(5.0), v("x", &[0]));
        assert_eq!(s.canonical(), t.canonical());
        assert_eq!(e.fold_constants(), Expr::num(50.0));
    }

    #[test]
    fn eval_rejects_zero_division() {
        let e = Expr::bin(Op::Div, Expr::num(1.0), v("x", &[0]));
        assert_eq!(e.eval(&mut |_| Some(0.0)), None);
        assert_eq!(e.eval(&mut |_| Some(4.0)), Some(0.25));
        assert_eq!(e.eval(&mut |_| None), None);
    }
}
