//! Plan traces: observed world states and the actions executed between them.
//!
//! The on-disk format is line oriented:
//!
//! ```text
//! #Actions
//! [0][1] (goto rov1 wp1 wp2)
//! #States
//! [0] (at rov1 wp1) (not (at rov1 wp2)) (= (energy rov1) 450)
//! [1] (not (at rov1 wp1)) (at rov1 wp2) (= (energy rov1) 300)
//! ```
//!
//! An optional `#Objects` section before `#Actions` types the objects
//! (`rov1 - rover`). Atoms that a state does not mention are unknown, never
//! false.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::TraceError;
use crate::sexpr::{self, Sexpr};

/// A grounded atom: a predicate or fluent name applied to objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Atom {
            name: name.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_char(')')
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub index: usize,
    pub literals: BTreeMap<Atom, bool>,
    pub fluents: BTreeMap<Atom, f64>,
}

impl State {
    pub fn new(index: usize) -> Self {
        State {
            index,
            ..Default::default()
        }
    }

    /// Number of observed elements (literals plus fluent values).
    pub fn len(&self) -> usize {
        self.literals.len() + self.fluents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionInstance {
    pub name: String,
    pub args: Vec<String>,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_char(')')
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanTrace {
    /// Optional object typing from the `#Objects` header.
    pub objects: BTreeMap<String, String>,
    pub actions: Vec<ActionInstance>,
    pub states: Vec<State>,
}

impl PlanTrace {
    /// Checks the structural invariants: contiguous state indices,
    /// `|states| = |actions| + 1` and action `k` spanning states `k..k+1`.
    pub fn validate(&self) -> Result<(), TraceError> {
        for (k, s) in self.states.iter().enumerate() {
            if s.index != k {
                return Err(TraceError::IndexGap(format!(
                    "state {k} carries index {}",
                    s.index
                )));
            }
        }
        if self.states.len() != self.actions.len() + 1 {
            return Err(TraceError::IndexGap(format!(
                "{} states for {} actions",
                self.states.len(),
                self.actions.len()
            )));
        }
        for (k, a) in self.actions.iter().enumerate() {
            if a.start != k || a.end != k + 1 {
                return Err(TraceError::IndexGap(format!(
                    "action {k} spans [{}][{}], expected [{k}][{}]",
                    a.start,
                    a.end,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Total number of literal and fluent occurrences over all states.
    pub fn element_count(&self) -> usize {
        self.states.iter().map(State::len).sum()
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Objects,
    Actions,
    States,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> TraceError {
    TraceError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

impl From<sexpr::SyntaxError> for TraceError {
    fn from(e: sexpr::SyntaxError) -> Self {
        TraceError::Syntax {
            line: e.pos.line,
            column: e.pos.column,
            message: e.message,
        }
    }
}

/// Parses `[INT]` prefixes, returning the integers and the column after them.
fn bracket_ints(
    line: &str,
    lineno: usize,
    count: usize,
) -> Result<(Vec<usize>, usize), TraceError> {
    let bytes = line.as_bytes();
    let mut i = 0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if bytes.get(i) != Some(&b'[') {
            return Err(syntax(lineno, i + 1, "expected '['"));
        }
        let close = line[i..]
            .find(']')
            .map(|c| c + i)
            .ok_or_else(|| syntax(lineno, i + 1, "unterminated '['"))?;
        let n = line[i + 1..close]
            .trim()
            .parse::<usize>()
            .map_err(|_| syntax(lineno, i + 2, "expected a non-negative integer"))?;
        out.push(n);
        i = close + 1;
    }
    Ok((out, i))
}

fn symbols(items: &[Sexpr], what: &str) -> Result<Vec<String>, TraceError> {
    items
        .iter()
        .map(|s| match s {
            Sexpr::Symbol(name, _) => Ok(name.clone()),
            Sexpr::List(_, p) => Err(syntax(
                p.line,
                p.column,
                format!("nested list inside {what}"),
            )),
        })
        .collect()
}

fn atom_of(expr: &Sexpr) -> Result<Atom, TraceError> {
    let p = expr.pos();
    let items = expr
        .as_list()
        .ok_or_else(|| syntax(p.line, p.column, "expected a parenthesised atom"))?;
    let parts = symbols(items, "atom")?;
    let (name, args) = parts
        .split_first()
        .ok_or_else(|| syntax(p.line, p.column, "empty atom"))?;
    Ok(Atom {
        name: name.clone(),
        args: args.to_vec(),
    })
}

fn parse_number(expr: &Sexpr) -> Result<f64, TraceError> {
    let p = expr.pos();
    let text = expr
        .as_symbol()
        .ok_or_else(|| syntax(p.line, p.column, "expected a number"))?;
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(syntax(p.line, p.column, format!("invalid number {text:?}"))),
    }
}

fn parse_state_item(expr: &Sexpr, state: &mut State) -> Result<(), TraceError> {
    let p = expr.pos();
    let items = expr
        .as_list()
        .ok_or_else(|| syntax(p.line, p.column, "expected a parenthesised state item"))?;
    match expr.head().as_deref() {
        Some("not") if items.len() == 2 && items[1].as_list().is_some() => {
            let atom = atom_of(&items[1])?;
            if state.literals.insert(atom.clone(), false).is_some() {
                return Err(TraceError::DuplicateLiteral {
                    line: p.line,
                    atom: atom.to_string(),
                });
            }
        }
        Some("=") if items.len() == 3 && items[1].as_list().is_some() => {
            let atom = atom_of(&items[1])?;
            let value = parse_number(&items[2])?;
            if state.fluents.insert(atom.clone(), value).is_some() {
                return Err(TraceError::DuplicateLiteral {
                    line: p.line,
                    atom: atom.to_string(),
                });
            }
        }
        _ => {
            let atom = atom_of(expr)?;
            if state.literals.insert(atom.clone(), true).is_some() {
                return Err(TraceError::DuplicateLiteral {
                    line: p.line,
                    atom: atom.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Parses one plan trace. Lines starting with `;` and blank lines are ignored.
pub fn parse_plan_trace(text: &str) -> Result<PlanTrace, TraceError> {
    let mut section = Section::None;
    let mut trace = PlanTrace::default();
    let mut states: Vec<(usize, State)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let indent = raw.len() - raw.trim_start().len();
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            section = match header.trim().to_ascii_lowercase().as_str() {
                "objects" if section == Section::None => Section::Objects,
                "actions" if matches!(section, Section::None | Section::Objects) => {
                    Section::Actions
                }
                "states" if section == Section::Actions => Section::States,
                other => {
                    return Err(syntax(
                        lineno,
                        indent + 1,
                        format!("unexpected section #{other}"),
                    ));
                }
            };
            continue;
        }
        match section {
            Section::None => return Err(syntax(lineno, indent + 1, "expected #Actions")),
            Section::Objects => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                let mut pending = Vec::new();
                let mut i = 0;
                while i < tokens.len() {
                    if tokens[i] == "-" {
                        let ty = tokens
                            .get(i + 1)
                            .ok_or_else(|| syntax(lineno, indent + 1, "missing type after '-'"))?;
                        for o in pending.drain(..) {
                            trace.objects.insert(o, ty.to_string());
                        }
                        i += 2;
                    } else {
                        pending.push(tokens[i].to_string());
                        i += 1;
                    }
                }
                for o in pending {
                    trace.objects.insert(o, "object".to_string());
                }
            }
            Section::Actions => {
                let (ints, col) = bracket_ints(line, lineno, 2)?;
                let exprs = sexpr::read_all(&line[col..], lineno, indent + col + 1)?;
                let [expr] = exprs.as_slice() else {
                    return Err(syntax(
                        lineno,
                        indent + col + 1,
                        "expected exactly one action",
                    ));
                };
                let atom = atom_of(expr)?;
                trace.actions.push(ActionInstance {
                    name: atom.name,
                    args: atom.args,
                    start: ints[0],
                    end: ints[1],
                });
            }
            Section::States => {
                let (ints, col) = bracket_ints(line, lineno, 1)?;
                let mut state = State::new(ints[0]);
                for expr in sexpr::read_all(&line[col..], lineno, indent + col + 1)? {
                    parse_state_item(&expr, &mut state)?;
                }
                states.push((lineno, state));
            }
        }
    }

    states.sort_by_key(|(_, s)| s.index);
    for w in states.windows(2) {
        if w[0].1.index == w[1].1.index {
            return Err(TraceError::IndexGap(format!(
                "state index {} repeated on line {}",
                w[1].1.index, w[1].0
            )));
        }
    }
    trace.states = states.into_iter().map(|(_, s)| s).collect();
    trace.actions.sort_by_key(|a| a.start);
    trace.validate()?;
    Ok(trace)
}

/// Renders a trace in the format accepted by [`parse_plan_trace`].
pub fn write_plan_trace(trace: &PlanTrace) -> String {
    let mut out = String::new();
    if !trace.objects.is_empty() {
        out.push_str("#Objects\n");
        let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (o, t) in &trace.objects {
            by_type.entry(t).or_default().push(o);
        }
        for (t, objs) in by_type {
            let _ = writeln!(out, "{} - {t}", objs.join(" "));
        }
    }
    out.push_str("#Actions\n");
    for a in &trace.actions {
        let _ = writeln!(out, "[{}][{}] {a}", a.start, a.end);
    }
    out.push_str("#States\n");
    for s in &trace.states {
        let _ = write!(out, "[{}]", s.index);
        for (atom, &truth) in &s.literals {
            if truth {
                let _ = write!(out, " {atom}");
            } else {
                let _ = write!(out, " (not {atom})");
            }
        }
        for (atom, value) in &s.fluents {
            let _ = write!(out, " (= {atom} {value})");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING: &str = "\
#Actions
[0][1] (goto rov1 wp1 wp2)
[1][2] (goto rov1 wp2 wp3)
#States
[0] (at rov1 wp1) (not (at rov1 wp2)) (not (at rov1 wp3)) (not (scanned wp3)) (= (bat_usage rov1) 3) (= (energy rov1) 450) (= (dist wp1 wp2) 50) (= (dist wp2 wp3) 80)
[1] (not (at rov1 wp1)) (at rov1 wp2) (not (at rov1 wp3)) (not (scanned wp3)) (= (bat_usage rov1) 3) (= (energy rov1) 300) (= (dist wp1 wp2) 50) (= (dist wp2 wp3) 80)
[2] (at rov1 wp3) (not (at rov1 wp1)) (not (at rov1 wp2)) (not (scanned wp3)) (= (bat_usage rov1) 3) (= (energy rov1) 60) (= (dist wp1 wp2) 50) (= (dist wp2 wp3) 80)
";

    #[test]
    fn parses_rover_extract() {
        let t = parse_plan_trace(LISTING).unwrap();
        assert_eq!(t.actions.len(), 2);
        assert_eq!(t.states.len(), 3);
        assert_eq!(t.states[0].literals.len(), 4);
        assert_eq!(t.states[0].fluents.len(), 4);
        assert_eq!(
            t.states[0].fluents[&Atom::new("dist", ["wp2", "wp3"])],
            80.0
        );
        assert_eq!(
            t.states[0].literals[&Atom::new("at", ["rov1", "wp2"])],
            false
        );
    }

    #[test]
    fn missing_states_is_index_gap() {
        let err = parse_plan_trace("#Actions\n[0][1] (noop)\n#States\n").unwrap_err();
        assert!(matches!(err, TraceError::IndexGap(ref m) if m.contains("0 states for 1 actions")));
    }

    #[test]
    fn duplicate_literal_rejected() {
        let err = parse_plan_trace("#Actions\n#States\n[0] (p a) (not (p a))\n").unwrap_err();
        assert!(matches!(err, TraceError::DuplicateLiteral { line: 3, .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_plan_trace("#Actions\n[0][1] (a b\n#States\n").unwrap_err();
        match err {
            TraceError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn handwritten_single_action_round_trips() {
        let text = "#Objects\nr - robot\n#Actions\n[0][1] (move r a b)\n#States\n[0] (at r a) (not (at r b)) (= (fuel r) 2.5)\n[1] (at r b) (= (fuel r) -1)\n";
        let t = parse_plan_trace(text).unwrap();
        assert_eq!(t.objects["r"], "robot");
        let again = parse_plan_trace(&write_plan_trace(&t)).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn absent_atoms_are_not_invented() {
        let t = parse_plan_trace(LISTING).unwrap();
        assert!(!t.states[1]
            .literals
            .contains_key(&Atom::new("scanned", ["wp1"])));
    }
}
