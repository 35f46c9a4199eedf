//! PDDL emitter and a reader for the same subset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::domain::{
    param_symbol, ActionModel, Comparator, Condition, Domain, Effect, LiftedKey, NumericKind,
};
use crate::error::PddlError;
use crate::expr::{Expr, Op};
use crate::sexpr::{self, Sexpr};

const UNSUPPORTED_HEADS: &[&str] = &[
    "when",
    "forall",
    "exists",
    "or",
    "imply",
    "scale-up",
    "scale-down",
];

fn collect_signatures(d: &Domain) -> (BTreeMap<String, usize>, BTreeMap<String, usize>) {
    let mut preds = BTreeMap::new();
    let mut funcs = BTreeMap::new();
    fn expr_funcs(e: &Expr, funcs: &mut BTreeMap<String, usize>) {
        for k in e.variables() {
            funcs.insert(k.name.clone(), k.params.len());
        }
    }
    for a in d.actions.values() {
        for c in &a.preconditions {
            match c {
                Condition::Literal { atom, .. } => {
                    preds.insert(atom.name.clone(), atom.params.len());
                }
                Condition::Numeric { lhs, rhs, .. } => {
                    expr_funcs(lhs, &mut funcs);
                    expr_funcs(rhs, &mut funcs);
                }
            }
        }
        for e in &a.effects {
            match e {
                Effect::Add(k) | Effect::Delete(k) => {
                    preds.insert(k.name.clone(), k.params.len());
                }
                Effect::Numeric { target, amount, .. } => {
                    funcs.insert(target.name.clone(), target.params.len());
                    expr_funcs(amount, &mut funcs);
                }
            }
        }
    }
    (preds, funcs)
}

fn signature(name: &str, arity: usize) -> String {
    let mut s = format!("({name}");
    for i in 0..arity {
        let _ = write!(s, " ?x{i}");
    }
    s.push(')');
    s
}

fn write_block(out: &mut String, keyword: &str, mut items: Vec<String>) {
    items.sort();
    if items.is_empty() {
        let _ = writeln!(out, "    :{keyword} (and)");
        return;
    }
    let _ = writeln!(out, "    :{keyword} (and");
    for item in items {
        let _ = writeln!(out, "      {item}");
    }
    out.push_str("    )\n");
}

/// Renders a domain as PDDL. Output is a pure function of the value.
pub fn serialize_domain(d: &Domain) -> String {
    let (preds, funcs) = collect_signatures(d);
    let negative = d.actions.values().any(|a| {
        a.preconditions
            .iter()
            .any(|c| matches!(c, Condition::Literal { value: false, .. }))
    });
    let types: BTreeSet<&str> = d
        .actions
        .values()
        .flat_map(|a| a.parameters.iter().map(String::as_str))
        .filter(|t| *t != "object")
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    out.push_str("  (:requirements :typing :fluents");
    if negative {
        out.push_str(" :negative-preconditions");
    }
    out.push_str(")\n");
    if !types.is_empty() {
        let list: Vec<&str> = types.into_iter().collect();
        let _ = writeln!(out, "  (:types {} - object)", list.join(" "));
    }
    out.push_str("  (:predicates");
    for (name, arity) in &preds {
        let _ = write!(out, "\n    {}", signature(name, *arity));
    }
    out.push_str(")\n  (:functions");
    for (name, arity) in &funcs {
        let _ = write!(out, "\n    {}", signature(name, *arity));
    }
    out.push_str(")\n");
    for a in d.actions.values() {
        let _ = writeln!(out, "  (:action {}", a.name);
        let params: Vec<String> = a
            .parameters
            .iter()
            .enumerate()
            .map(|(i, t)| format!("{} - {t}", param_symbol(i)))
            .collect();
        let _ = writeln!(out, "    :parameters ({})", params.join(" "));
        write_block(
            &mut out,
            "precondition",
            a.preconditions.iter().map(|c| c.to_string()).collect(),
        );
        write_block(
            &mut out,
            "effect",
            a.effects.iter().map(|e| e.to_string()).collect(),
        );
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

fn malformed(at: &Sexpr, msg: impl Into<String>) -> PddlError {
    let p = at.pos();
    PddlError::Malformed(format!("{}:{}: {}", p.line, p.column, msg.into()))
}

fn symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_symbol()
        .ok_or_else(|| malformed(e, format!("expected {what}")))
}

fn check_supported(e: &Sexpr) -> Result<(), PddlError> {
    if let Some(h) = e.head() {
        if UNSUPPORTED_HEADS.contains(&h.as_str()) {
            return Err(PddlError::Unsupported(h));
        }
    }
    Ok(())
}

struct ActionScope {
    params: BTreeMap<String, usize>,
}

impl ActionScope {
    fn key(&self, e: &Sexpr) -> Result<LiftedKey, PddlError> {
        check_supported(e)?;
        let items = e
            .as_list()
            .ok_or_else(|| malformed(e, "expected an atom"))?;
        let (head, rest) = items
            .split_first()
            .ok_or_else(|| malformed(e, "empty atom"))?;
        let name = symbol(head, "a name")?.to_string();
        let mut params = Vec::with_capacity(rest.len());
        for arg in rest {
            let s = symbol(arg, "a parameter")?;
            let idx = self
                .params
                .get(&s.to_ascii_lowercase())
                .ok_or_else(|| PddlError::Unsupported(format!("constant argument {s}")))?;
            params.push(*idx);
        }
        Ok(LiftedKey { name, params })
    }

    fn expr(&self, e: &Sexpr) -> Result<Expr, PddlError> {
        if let Some(s) = e.as_symbol() {
            return s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Expr::num)
                .ok_or_else(|| malformed(e, format!("expected a number, found {s}")));
        }
        check_supported(e)?;
        let items = e.as_list().unwrap_or_default();
        if let Some(op) = items
            .first()
            .and_then(Sexpr::as_symbol)
            .and_then(Op::from_symbol)
        {
            if items.len() != 3 {
                return Err(PddlError::Unsupported(format!(
                    "{}-ary {}",
                    items.len() - 1,
                    op.symbol()
                )));
            }
            return Ok(Expr::bin(op, self.expr(&items[1])?, self.expr(&items[2])?));
        }
        Ok(Expr::Var(self.key(e)?))
    }

    fn conditions(&self, e: &Sexpr, out: &mut BTreeSet<Condition>) -> Result<(), PddlError> {
        check_supported(e)?;
        let items = e
            .as_list()
            .ok_or_else(|| malformed(e, "expected a condition"))?;
        match e.head().as_deref() {
            None => Ok(()),
            Some("and") => items[1..].iter().try_for_each(|c| self.conditions(c, out)),
            Some("not") => {
                if items.len() != 2 {
                    return Err(malformed(e, "not takes one argument"));
                }
                check_supported(&items[1])?;
                out.insert(Condition::Literal {
                    atom: self.key(&items[1])?,
                    value: false,
                });
                Ok(())
            }
            Some(h) => {
                if let Some(cmp) = Comparator::from_symbol(h) {
                    if items.len() != 3 {
                        return Err(malformed(e, "comparison takes two arguments"));
                    }
                    out.insert(Condition::Numeric {
                        cmp,
                        lhs: self.expr(&items[1])?,
                        rhs: self.expr(&items[2])?,
                    });
                } else {
                    out.insert(Condition::Literal {
                        atom: self.key(e)?,
                        value: true,
                    });
                }
                Ok(())
            }
        }
    }

    fn effects(&self, e: &Sexpr, out: &mut BTreeSet<Effect>) -> Result<(), PddlError> {
        check_supported(e)?;
        let items = e
            .as_list()
            .ok_or_else(|| malformed(e, "expected an effect"))?;
        match e.head().as_deref() {
            None => Ok(()),
            Some("and") => items[1..].iter().try_for_each(|c| self.effects(c, out)),
            Some("not") => {
                if items.len() != 2 {
                    return Err(malformed(e, "not takes one argument"));
                }
                out.insert(Effect::Delete(self.key(&items[1])?));
                Ok(())
            }
            Some(h) => {
                if let Some(kind) = NumericKind::from_keyword(h) {
                    if items.len() != 3 {
                        return Err(malformed(e, format!("{h} takes two arguments")));
                    }
                    out.insert(Effect::Numeric {
                        kind,
                        target: self.key(&items[1])?,
                        amount: self.expr(&items[2])?,
                    });
                } else {
                    out.insert(Effect::Add(self.key(e)?));
                }
                Ok(())
            }
        }
    }
}

/// Parses a typed list such as `(?a ?b - rover ?c)` into (name, type) pairs.
fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = symbol(&items[i], "a parameter")?;
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| malformed(&items[i], "missing type after '-'"))?;
            if ty.head().as_deref() == Some("either") {
                return Err(PddlError::Unsupported("either".into()));
            }
            let ty = symbol(ty, "a type")?.to_ascii_lowercase();
            out.extend(pending.drain(..).map(|n| (n, ty.clone())));
            i += 2;
        } else {
            pending.push(s.to_ascii_lowercase());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

fn parse_action(items: &[Sexpr], whole: &Sexpr) -> Result<ActionModel, PddlError> {
    let name = symbol(
        items
            .get(1)
            .ok_or_else(|| malformed(whole, "action without name"))?,
        "an action name",
    )?;
    let mut fields: BTreeMap<String, &Sexpr> = BTreeMap::new();
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i], "an action field")?.to_ascii_lowercase();
        let value = items
            .get(i + 1)
            .ok_or_else(|| malformed(&items[i], format!("{key} without value")))?;
        if !matches!(key.as_str(), ":parameters" | ":precondition" | ":effect") {
            return Err(PddlError::Unsupported(key));
        }
        fields.insert(key, value);
        i += 2;
    }
    let params = match fields.get(":parameters") {
        Some(p) => typed_list(
            p.as_list()
                .ok_or_else(|| malformed(p, "expected a parameter list"))?,
        )?,
        None => Vec::new(),
    };
    let scope = ActionScope {
        params: params
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect(),
    };
    let mut model = ActionModel::new(name, params.len());
    model.parameters = params.into_iter().map(|(_, t)| t).collect();
    if let Some(p) = fields.get(":precondition") {
        scope.conditions(p, &mut model.preconditions)?;
    }
    if let Some(e) = fields.get(":effect") {
        scope.effects(e, &mut model.effects)?;
    }
    model.check().map_err(PddlError::Malformed)?;
    Ok(model)
}

/// Reads a domain written in the subset `serialize_domain` emits.
/// Parameter names are free; they are mapped to positions.
pub fn parse_reference_domain(text: &str) -> Result<Domain, PddlError> {
    let exprs = sexpr::read_all(text, 1, 1).map_err(|e| PddlError::Syntax {
        line: e.pos.line,
        column: e.pos.column,
        message: e.message,
    })?;
    let root = match exprs.as_slice() {
        [one] => one,
        [] => return Err(PddlError::Malformed("empty input".into())),
        [_, second, ..] => return Err(malformed(second, "trailing content after domain")),
    };
    if root.head().as_deref() != Some("define") {
        return Err(malformed(root, "expected (define ...)"));
    }
    let items = root.as_list().unwrap_or_default();
    let header = items
        .get(1)
        .ok_or_else(|| malformed(root, "missing domain header"))?;
    let name = match header.as_list() {
        Some([kw, name])
            if kw.as_symbol().map(str::to_ascii_lowercase).as_deref() == Some("domain") =>
        {
            symbol(name, "a domain name")?
        }
        _ => return Err(malformed(header, "expected (domain NAME)")),
    };
    let mut domain = Domain::new(name);
    for section in &items[2..] {
        match section.head().as_deref() {
            Some(":requirements" | ":types" | ":predicates" | ":functions") => {}
            Some(":action") => {
                let model = parse_action(section.as_list().unwrap_or_default(), section)?;
                if domain.actions.contains_key(&model.name) {
                    return Err(malformed(
                        section,
                        format!("duplicate action {}", model.name),
                    ));
                }
                domain.insert(model);
            }
            Some(other) => return Err(PddlError::Unsupported(other.to_string())),
            None => return Err(malformed(section, "expected a domain section")),
        }
    }
    Ok(domain)
}
