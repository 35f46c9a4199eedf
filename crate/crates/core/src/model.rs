//! Meta-states to action models, and the end-to-end learning pipeline.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{ActionModel, Comparator, Condition, Domain, Effect, LiftedKey, NumericKind};
use crate::error::LearnError;
use crate::expr::Expr;
use crate::noise::{discretise_fluents, filter_logical_noise, mask_outliers, FilterConfig};
use crate::refine::{refine, ClassReport, RefineConfig};
use crate::rules::{learn_rules, Rule, RuleConfig};
use crate::synthesis::{
    derive_relational_features, detect_variant_fluents, extend_dataset, fit_expression,
    FluentDelta, RegressionConfig,
};
use crate::trace::PlanTrace;
use crate::transitions::{
    build_dataset, group_transitions, AttrKind, Attribute, Class, Transition, Value,
};

fn negate(cmp: Comparator) -> Option<Comparator> {
    match cmp {
        Comparator::Ge => Some(Comparator::Lt),
        Comparator::Le => Some(Comparator::Gt),
        Comparator::Gt => Some(Comparator::Le),
        Comparator::Lt => Some(Comparator::Ge),
        Comparator::Eq => None,
    }
}

/// Turns a refined pre/post rule pair into an action model. A pinned-false
/// precondition on a predicate the action adds is left out, as STRIPS
/// models conventionally do.
pub fn synthesize_action(
    pre: &Rule,
    post: &Rule,
    name: &str,
    arity: usize,
    fitted: &[(FluentDelta, Expr)],
) -> Result<ActionModel, LearnError> {
    for r in [pre, post] {
        if let Some(w) = r
            .antecedent
            .windows(2)
            .find(|w| w[0].attribute == w[1].attribute)
        {
            return Err(LearnError::Contradiction(w[0].attribute.to_string()));
        }
    }
    let mut model = ActionModel::new(name, arity);

    let mut keys: BTreeMap<&LiftedKey, (Option<bool>, Option<bool>)> = BTreeMap::new();
    for (rule, is_pre) in [(pre, true), (post, false)] {
        for f in &rule.antecedent {
            if let (
                Attribute::Lifted {
                    key,
                    kind: AttrKind::Predicate,
                },
                Value::Bool(b),
            ) = (&f.attribute, f.value)
            {
                let slot = keys.entry(key).or_default();
                if is_pre {
                    slot.0 = Some(b);
                } else {
                    slot.1 = Some(b);
                }
            }
        }
    }
    for (key, (before, after)) in &keys {
        match (before, after) {
            (Some(true), Some(false)) => {
                model.effects.insert(Effect::Delete((*key).clone()));
            }
            (b, Some(true)) if *b != Some(true) => {
                model.effects.insert(Effect::Add((*key).clone()));
            }
            _ => {}
        }
    }

    for f in &pre.antecedent {
        match (&f.attribute, f.value) {
            (
                Attribute::Lifted {
                    key,
                    kind: AttrKind::Predicate,
                },
                Value::Bool(value),
            ) => {
                if !value && model.effects.contains(&Effect::Add(key.clone())) {
                    continue;
                }
                model.preconditions.insert(Condition::Literal {
                    atom: key.clone(),
                    value,
                });
            }
            (
                Attribute::Lifted {
                    key,
                    kind: AttrKind::Fluent,
                },
                Value::Num(v),
            ) => {
                model.preconditions.insert(Condition::Numeric {
                    cmp: Comparator::Eq,
                    lhs: Expr::var(key.clone()),
                    rhs: Expr::num(v.0),
                });
            }
            (Attribute::Relation { lhs, cmp, rhs }, Value::Bool(holds)) => {
                let cmp = if holds { Some(*cmp) } else { negate(*cmp) };
                if let Some(cmp) = cmp {
                    model.preconditions.insert(Condition::Numeric {
                        cmp,
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                    });
                }
            }
            _ => {}
        }
    }

    let mut numeric_targets = Vec::new();
    for (delta, expr) in fitted {
        if let Some(kind) = delta.direction.kind() {
            numeric_targets.push(delta.target.clone());
            model.effects.insert(Effect::Numeric {
                kind,
                target: delta.target.clone(),
                amount: expr.clone(),
            });
        }
    }
    for f in &post.antecedent {
        if let (
            Attribute::Lifted {
                key,
                kind: AttrKind::Fluent,
            },
            Value::Num(after),
        ) = (&f.attribute, f.value)
        {
            if numeric_targets.contains(key) {
                continue;
            }
            if pre.value_of(&f.attribute) != Some(Value::Num(after)) {
                model.effects.insert(Effect::Numeric {
                    kind: NumericKind::Assign,
                    target: key.clone(),
                    amount: Expr::num(after.0),
                });
            }
        }
    }
    model.check().map_err(LearnError::Contradiction)?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnConfig {
    pub domain_name: String,
    pub filter: FilterConfig,
    pub regression: RegressionConfig,
    pub rules: RuleConfig,
    pub refine: RefineConfig,
    pub skip_filters: bool,
    pub skip_refinement: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            domain_name: "learned".into(),
            filter: FilterConfig::default(),
            regression: RegressionConfig::default(),
            rules: RuleConfig::default(),
            refine: RefineConfig::default(),
            skip_filters: false,
            skip_refinement: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FitReport {
    pub target: String,
    pub direction: String,
    pub expression: Option<String>,
    pub error: Option<f64>,
    pub expansions: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ActionReport {
    pub transitions: usize,
    pub rows: usize,
    pub attributes: usize,
    pub erased_cells: usize,
    pub outliers: usize,
    pub clusters: usize,
    pub fits: Vec<FitReport>,
    pub relations: Vec<String>,
    pub rules: Vec<String>,
    pub refinement: Vec<ClassReport>,
    pub conflicts: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LearnReport {
    pub actions: BTreeMap<String, ActionReport>,
}

fn learn_action(
    name: &str,
    transitions: &[Transition],
    cfg: &LearnConfig,
    report: &mut ActionReport,
) -> Result<ActionModel, LearnError> {
    let arity = transitions.first().map_or(0, |t| t.action.args.len());
    let data = build_dataset(name, arity, transitions)?;
    report.transitions = transitions.len();
    report.rows = data.rows.len();
    report.attributes = data.attributes.len();

    // Rules read the discretised labels; regression and relations read the
    // exact values with only the outliers erased.
    let (labelled, numeric) = if cfg.skip_filters {
        (data.clone(), data)
    } else {
        let (filtered, erased) = filter_logical_noise(&data, cfg.filter.logical_threshold);
        report.erased_cells = erased;
        let mut filter = cfg.filter;
        filter.seed ^= crate::noise::stable_hash(name);
        let (discrete, disc) = discretise_fluents(&filtered, &filter);
        report.outliers = disc.values().map(|a| a.outliers.len()).sum();
        report.clusters = disc.values().map(|a| a.clusters.len()).sum();
        let numeric = mask_outliers(&filtered, &discrete);
        (discrete, numeric)
    };

    let deltas = detect_variant_fluents(&numeric, &cfg.regression);
    let variant: Vec<LiftedKey> = deltas.iter().map(|d| d.target.clone()).collect();
    let mut fitted = Vec::new();
    for mut delta in deltas {
        let fit = fit_expression(&numeric, &delta, &cfg.regression);
        if let Some(f) = &fit {
            delta.direction = f.direction;
        }
        report.fits.push(FitReport {
            target: delta.target.to_string(),
            direction: format!("{:?}", delta.direction).to_lowercase(),
            expression: fit.as_ref().map(|f| f.expression.to_string()),
            error: fit.as_ref().map(|f| f.error),
            expansions: fit.as_ref().map_or(0, |f| f.expansions),
        });
        if let Some(fit) = fit {
            fitted.push((delta, fit.expression));
        }
    }
    let relations = derive_relational_features(&numeric, &fitted, cfg.filter.logical_threshold);
    report.relations = relations.iter().map(|r| r.to_string()).collect();

    // Changing fluents are described by their effects and relations, not by
    // the labels they pass through.
    let extended = extend_dataset(&numeric, &relations);
    let mut data = labelled;
    let base = data.attributes.len();
    data.attributes
        .extend_from_slice(&extended.attributes[base..]);
    for (row, ext) in data.rows.iter_mut().zip(&extended.rows) {
        row.cells.extend_from_slice(&ext.cells[base..]);
    }
    let data = data.select_columns(|_, a| a.fluent_key().map_or(true, |k| !variant.contains(k)));

    let ruleset = learn_rules(&data, &cfg.rules);
    report.rules = ruleset.rules.iter().map(|r| r.to_string()).collect();

    let (pre, post) = if cfg.skip_refinement {
        let top = |class: Class| -> Result<Rule, LearnError> {
            ruleset
                .of_class(class)
                .fold(None::<&Rule>, |best, r| match best {
                    Some(b) if b.weight >= r.weight => Some(b),
                    _ => Some(r),
                })
                .cloned()
                .ok_or(LearnError::MissingClass(class.label()))
        };
        (top(Class::Pre)?, top(Class::Post)?)
    } else {
        let refined = refine(&ruleset, &cfg.refine)?;
        report.conflicts = refined.reports.iter().map(|r| r.conflicts.len()).sum();
        report.refinement = refined.reports;
        (refined.pre, refined.post)
    };
    synthesize_action(&pre, &post, name, arity, &fitted)
}

/// Learns one action model per action name seen in the traces. Actions whose
/// pipeline fails are reported and left out of the domain.
pub fn learn_domain(
    traces: &[PlanTrace],
    cfg: &LearnConfig,
) -> Result<(Domain, LearnReport), LearnError> {
    if traces.is_empty() {
        return Err(LearnError::NoTraces);
    }
    let groups: Vec<(String, Vec<Transition>)> = group_transitions(traces).into_iter().collect();
    let results: Vec<(String, Result<ActionModel, LearnError>, ActionReport)> = groups
        .par_iter()
        .map(|(name, ts)| {
            let mut report = ActionReport::default();
            let result = learn_action(name, ts, cfg, &mut report);
            if let Err(e) = &result {
                log::warn!("{name}: {e}");
                report.error = Some(e.to_string());
            }
            (name.clone(), result, report)
        })
        .collect();
    let mut domain = Domain::new(cfg.domain_name.clone());
    let mut report = LearnReport::default();
    for (name, result, rep) in results {
        if let Ok(model) = result {
            domain.insert(model);
        }
        report.actions.insert(name, rep);
    }
    Ok((domain, report))
}
