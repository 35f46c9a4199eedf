//! Per-action state transitions and the lifted pre/post datasets built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::domain::{Comparator, LiftedKey};
use crate::error::LearnError;
use crate::expr::{format_number, Expr};
use crate::trace::{ActionInstance, Atom, PlanTrace, State};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub pre: State,
    pub action: ActionInstance,
    pub post: State,
}

/// Groups every action occurrence by action name, in trace order then position.
pub fn group_transitions(traces: &[PlanTrace]) -> BTreeMap<String, Vec<Transition>> {
    let mut out: BTreeMap<String, Vec<Transition>> = BTreeMap::new();
    for trace in traces {
        for (k, action) in trace.actions.iter().enumerate() {
            let (Some(pre), Some(post)) = (trace.states.get(k), trace.states.get(k + 1)) else {
                continue;
            };
            out.entry(action.name.clone())
                .or_default()
                .push(Transition {
                    pre: pre.clone(),
                    action: action.clone(),
                    post: post.clone(),
                });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttrKind {
    Predicate,
    Fluent,
}

/// A dataset column: a lifted predicate, a lifted fluent or a synthesised
/// numeric comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Lifted {
        key: LiftedKey,
        kind: AttrKind,
    },
    Relation {
        lhs: Expr,
        cmp: Comparator,
        rhs: Expr,
    },
}

impl Attribute {
    pub fn predicate(key: LiftedKey) -> Self {
        Attribute::Lifted {
            key,
            kind: AttrKind::Predicate,
        }
    }

    pub fn fluent(key: LiftedKey) -> Self {
        Attribute::Lifted {
            key,
            kind: AttrKind::Fluent,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Attribute::Lifted {
                kind: AttrKind::Fluent,
                ..
            }
        )
    }

    pub fn fluent_key(&self) -> Option<&LiftedKey> {
        match self {
            Attribute::Lifted {
                key,
                kind: AttrKind::Fluent,
            } => Some(key),
            _ => None,
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attribute::Lifted { key, .. } => write!(f, "{key}"),
            Attribute::Relation { lhs, cmp, rhs } => write!(f, "({} {lhs} {rhs})", cmp.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Bool(bool),
    Num(f64),
    /// Discretised value, carried as the centroid of its cluster.
    Label(f64),
}

impl Cell {
    pub fn number(self) -> Option<f64> {
        match self {
            Cell::Num(v) | Cell::Label(v) => Some(v),
            _ => None,
        }
    }

    pub fn boolean(self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_missing(self) -> bool {
        matches!(self, Cell::Missing)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Missing => f.write_str("MV"),
            Cell::Bool(true) => f.write_str("True"),
            Cell::Bool(false) => f.write_str("False"),
            Cell::Num(v) | Cell::Label(v) => f.write_str(&format_number(*v)),
        }
    }
}

/// Hashable view of a non-missing cell value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Num(OrderedFloat<f64>),
}

impl Value {
    pub fn of(cell: Cell) -> Option<Value> {
        match cell {
            Cell::Missing => None,
            Cell::Bool(b) => Some(Value::Bool(b)),
            Cell::Num(v) | Cell::Label(v) => Some(Value::Num(OrderedFloat(v))),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Num(v) => f.write_str(&format_number(v.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    Pre,
    Post,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Pre, Class::Post];

    pub fn label(self) -> &'static str {
        match self {
            Class::Pre => "pre-state",
            Class::Post => "post-state",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Replaces each object of `atom` by its first position in `args`; `None`
/// when some object is not an argument.
fn lift_atom(atom: &Atom, args: &[String]) -> Option<LiftedKey> {
    let params = atom
        .args
        .iter()
        .map(|o| args.iter().position(|a| a == o))
        .collect::<Option<Vec<_>>>()?;
    Some(LiftedKey {
        name: atom.name.clone(),
        params,
    })
}

/// Lifts the atoms of `s` that mention only arguments of `a`.
pub fn lift_state(s: &State, a: &ActionInstance) -> BTreeMap<Attribute, Cell> {
    let mut out = BTreeMap::new();
    for (atom, &value) in &s.literals {
        if let Some(key) = lift_atom(atom, &a.args) {
            let prev = out.insert(Attribute::predicate(key), Cell::Bool(value));
            debug_assert!(prev.is_none(), "lifting is injective on objects");
        }
    }
    for (atom, &value) in &s.fluents {
        if let Some(key) = lift_atom(atom, &a.args) {
            out.insert(Attribute::fluent(key), Cell::Num(value));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub cells: Vec<Cell>,
    pub class: Class,
    pub transition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub action: String,
    pub arity: usize,
    pub attributes: Vec<Attribute>,
    /// Pre-state row of transition `t` sits at `2t`, its post-state at `2t + 1`.
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn column(&self, attr: &Attribute) -> Option<usize> {
        self.attributes.iter().position(|a| a == attr)
    }

    pub fn transitions(&self) -> usize {
        self.rows.len() / 2
    }

    /// The dataset restricted to the columns `keep` accepts.
    pub fn select_columns(&self, mut keep: impl FnMut(usize, &Attribute) -> bool) -> Dataset {
        let cols: Vec<usize> = (0..self.attributes.len())
            .filter(|&c| keep(c, &self.attributes[c]))
            .collect();
        Dataset {
            action: self.action.clone(),
            arity: self.arity,
            attributes: cols.iter().map(|&c| self.attributes[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    cells: cols.iter().map(|&c| r.cells[c]).collect(),
                    class: r.class,
                    transition: r.transition,
                })
                .collect(),
        }
    }

    pub fn pair(&self, t: usize) -> (&Row, &Row) {
        (&self.rows[2 * t], &self.rows[2 * t + 1])
    }

    pub fn rows_of(&self, class: Class) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.class == class)
    }

    /// Dumps the dataset as CSV: one column per attribute plus `class`,
    /// with `MV` for missing cells.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.attributes.iter().map(|a| a.to_string()).collect();
        header.push("class".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.cells.iter().map(|c| c.to_string()).collect();
            rec.push(row.class.label().into());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Builds the labelled dataset of one action from its transitions.
pub fn build_dataset(
    name: &str,
    arity: usize,
    transitions: &[Transition],
) -> Result<Dataset, LearnError> {
    let mut lifted = Vec::with_capacity(transitions.len() * 2);
    for t in transitions {
        if t.action.args.len() != arity {
            return Err(LearnError::ArityMismatch {
                action: name.to_string(),
                expected: arity,
                found: t.action.args.len(),
            });
        }
        lifted.push(lift_state(&t.pre, &t.action));
        lifted.push(lift_state(&t.post, &t.action));
    }
    let attributes: Vec<Attribute> = lifted
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows = lifted
        .into_iter()
        .enumerate()
        .map(|(i, m)| Row {
            cells: attributes
                .iter()
                .map(|a| m.get(a).copied().unwrap_or(Cell::Missing))
                .collect(),
            class: if i % 2 == 0 { Class::Pre } else { Class::Post },
            transition: i / 2,
        })
        .collect();
    Ok(Dataset {
        action: name.to_string(),
        arity,
        attributes,
        rows,
    })
}
