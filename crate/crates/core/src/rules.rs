//! Weighted conjunctive rules describing pre-states and post-states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::noise::stable_hash;
use crate::transitions::{Attribute, Class, Dataset, Value};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Feature {
    pub attribute: Attribute,
    pub value: Value,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    /// Sorted, at most one feature per attribute.
    pub antecedent: Vec<Feature>,
    pub class: Class,
    pub weight: f64,
}

impl Rule {
    pub fn new(mut antecedent: Vec<Feature>, class: Class, weight: f64) -> Self {
        antecedent.sort();
        debug_assert!(
            antecedent
                .windows(2)
                .all(|w| w[0].attribute != w[1].attribute),
            "one feature per attribute"
        );
        Rule {
            antecedent,
            class,
            weight,
        }
    }

    pub fn value_of(&self, attr: &Attribute) -> Option<Value> {
        self.antecedent
            .iter()
            .find(|f| &f.attribute == attr)
            .map(|f| f.value)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("IF ")?;
        if self.antecedent.is_empty() {
            f.write_str("true")?;
        }
        for (i, feat) in self.antecedent.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{feat}")?;
        }
        write!(f, " THEN {} [w={}]", self.class, self.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub fingerprint: u64,
}

impl RuleSet {
    pub fn of_class(&self, class: Class) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.class == class)
    }

    /// One rule per line.
    pub fn dump(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleConfig {
    /// Allowed out-of-class coverage as a fraction of in-class coverage.
    pub purity: f64,
    /// Share of observed rows that must agree on a value, both over the
    /// whole class and over a rule's covered rows, before the value is added
    /// to the rule as a descriptive feature.
    pub completion: f64,
    /// Covering stops once a new rule would cover less than this fraction
    /// of its class.
    pub min_coverage: f64,
    /// A feature joins a growing rule only if it shrinks the rule's ratio of
    /// out-of-class to in-class coverage to at most this factor of the
    /// current ratio. 1 accepts any strict improvement.
    pub separation: f64,
    /// The completion share rises to the best agreement any logical feature
    /// reaches in the class minus this margin, so clean data asks for
    /// near-unanimity while noisy data falls back to `completion`.
    pub completion_margin: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            purity: 0.1,
            completion: 0.8,
            min_coverage: 0.0,
            separation: 0.25,
            completion_margin: 0.1,
        }
    }
}

struct Candidates {
    features: Vec<Feature>,
    /// Logical and relational features; numeric labels only describe.
    discriminative: Vec<bool>,
    /// `sat[f][row]`: row satisfies feature f.
    sat: Vec<Vec<bool>>,
    column: Vec<usize>,
}

fn candidates(d: &Dataset) -> Candidates {
    let mut features = Vec::new();
    let mut discriminative = Vec::new();
    let mut sat = Vec::new();
    let mut column = Vec::new();
    for (col, attr) in d.attributes.iter().enumerate() {
        let values: BTreeSet<Value> = d
            .rows
            .iter()
            .filter_map(|r| Value::of(r.cells[col]))
            .collect();
        for v in values {
            sat.push(
                d.rows
                    .iter()
                    .map(|r| Value::of(r.cells[col]) == Some(v))
                    .collect(),
            );
            features.push(Feature {
                attribute: attr.clone(),
                value: v,
            });
            discriminative.push(matches!(v, Value::Bool(_)));
            column.push(col);
        }
    }
    Candidates {
        features,
        discriminative,
        sat,
        column,
    }
}

fn covered(cands: &Candidates, chosen: &[usize], row: usize) -> bool {
    chosen.iter().all(|&f| cands.sat[f][row])
}

/// Sequential covering per class with descriptive completion. Missing cells
/// satisfy no feature.
pub fn learn_rules(d: &Dataset, cfg: &RuleConfig) -> RuleSet {
    let cands = candidates(d);
    let mut rules = Vec::new();
    for class in Class::BOTH {
        let class_rows: Vec<usize> = (0..d.rows.len())
            .filter(|&i| d.rows[i].class == class)
            .collect();
        let other_rows: Vec<usize> = (0..d.rows.len())
            .filter(|&i| d.rows[i].class != class)
            .collect();
        let all: Vec<usize> = (0..cands.features.len()).collect();
        let top = agreement(&cands, &all, &class_rows)
            .into_iter()
            .filter(|(f, _)| cands.discriminative[*f])
            .map(|(_, rate)| rate)
            .fold(0.0, f64::max);
        let share = cfg.completion.max(top - cfg.completion_margin);
        let descriptive = agreeing(&cands, &all, &class_rows, share);
        let mut uncovered: Vec<usize> = class_rows.clone();
        while !uncovered.is_empty() {
            let mut chosen: Vec<usize> = Vec::new();
            let mut in_rows = uncovered.clone();
            let mut out_rows = other_rows.clone();
            while out_rows.len() as f64 > cfg.purity * in_rows.len() as f64 {
                let mut best: Option<(i64, usize, usize)> = None;
                for f in 0..cands.features.len() {
                    if !cands.discriminative[f]
                        || chosen.iter().any(|&c| cands.column[c] == cands.column[f])
                    {
                        continue;
                    }
                    let inn = in_rows.iter().filter(|&&r| cands.sat[f][r]).count();
                    let out = out_rows.iter().filter(|&&r| cands.sat[f][r]).count();
                    // Must raise purity, not just shrink both sides.
                    if inn == 0 || out * in_rows.len() >= out_rows.len() * inn {
                        continue;
                    }
                    if (out * in_rows.len()) as f64 > cfg.separation * (out_rows.len() * inn) as f64
                    {
                        continue;
                    }
                    let gain = inn as i64 - out as i64;
                    let better = match best {
                        None => true,
                        Some((g, i, _)) => gain > g || (gain == g && inn > i),
                    };
                    if better {
                        best = Some((gain, inn, f));
                    }
                }
                let Some((_, _, f)) = best else { break };
                chosen.push(f);
                in_rows.retain(|&r| cands.sat[f][r]);
                out_rows.retain(|&r| cands.sat[f][r]);
            }
            if chosen.is_empty() {
                // Nothing tells these rows apart from the other class; the
                // rule only describes what they have in common.
                log::debug!(
                    "{}: {} rows of {class} cannot be separated",
                    d.action,
                    uncovered.len()
                );
                chosen = agreeing(&cands, &descriptive, &uncovered, share);
                if chosen.is_empty() {
                    break;
                }
            } else {
                let rows: Vec<usize> = class_rows
                    .iter()
                    .copied()
                    .filter(|&r| covered(&cands, &chosen, r))
                    .collect();
                let used: BTreeSet<usize> = chosen.iter().map(|&c| cands.column[c]).collect();
                let pool: Vec<usize> = descriptive
                    .iter()
                    .copied()
                    .filter(|f| !used.contains(&cands.column[*f]))
                    .collect();
                chosen.extend(agreeing(&cands, &pool, &rows, share));
            }
            let covers: Vec<usize> = class_rows
                .iter()
                .copied()
                .filter(|&r| covered(&cands, &chosen, r))
                .collect();
            let before = uncovered.len();
            uncovered.retain(|r| !covers.contains(r));
            if uncovered.len() == before {
                break;
            }
            let weight = covers.len() as f64 / class_rows.len() as f64;
            if weight < cfg.min_coverage {
                break;
            }
            let rule = Rule::new(
                chosen.iter().map(|&f| cands.features[f].clone()).collect(),
                class,
                weight,
            );
            log::debug!("{}: {rule}", d.action);
            rules.push(rule);
        }
    }
    RuleSet {
        rules,
        fingerprint: stable_hash(&d.to_csv().unwrap_or_default()),
    }
}

/// Agreement rate of each feature from `pool` on `rows`: the share of the
/// rows observing its column that hold its value. Columns observed on fewer
/// than half of the rows are skipped; erased cells are unknown, not evidence
/// against.
fn agreement(cands: &Candidates, pool: &[usize], rows: &[usize]) -> Vec<(usize, f64)> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mut observed: BTreeMap<usize, usize> = BTreeMap::new();
    for (f, sat) in cands.sat.iter().enumerate() {
        *observed.entry(cands.column[f]).or_default() += rows.iter().filter(|&&r| sat[r]).count();
    }
    let mut out = Vec::new();
    for &f in pool {
        let seen = observed[&cands.column[f]];
        if seen == 0 || 2 * seen < rows.len() {
            continue;
        }
        let hits = rows.iter().filter(|&&r| cands.sat[f][r]).count();
        if hits > 0 {
            out.push((f, hits as f64 / seen as f64));
        }
    }
    out
}

/// Features from `pool` agreeing on at least `share` of `rows`, the most
/// agreeing value per column.
fn agreeing(cands: &Candidates, pool: &[usize], rows: &[usize], share: f64) -> Vec<usize> {
    let mut best: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (f, rate) in agreement(cands, pool, rows) {
        if rate >= share {
            let slot = best.entry(cands.column[f]).or_insert((rate, f));
            if slot.0 < rate {
                *slot = (rate, f);
            }
        }
    }
    best.into_values().map(|(_, f)| f).collect()
}

/// Rows of `class` satisfying every feature of `rule`, as a fraction of the class.
pub fn coverage(d: &Dataset, rule: &Rule) -> f64 {
    let cols: Vec<(usize, Value)> = rule
        .antecedent
        .iter()
        .map(|f| {
            (
                d.column(&f.attribute).expect("rule attribute in dataset"),
                f.value,
            )
        })
        .collect();
    let total = d.rows_of(rule.class).count();
    let hit = d
        .rows_of(rule.class)
        .filter(|r| cols.iter().all(|(c, v)| Value::of(r.cells[*c]) == Some(*v)))
        .count();
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LiftedKey;
    use crate::transitions::{Cell, Row};

    fn pred(name: &str) -> Attribute {
        Attribute::predicate(LiftedKey::new(name, vec![0]))
    }

    fn boolean_dataset(names: &[&str], rows: &[(&[Option<bool>], Class)]) -> Dataset {
        Dataset {
            action: "a".into(),
            arity: 1,
            attributes: names.iter().map(|n| pred(n)).collect(),
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, (cells, class))| Row {
                    cells: cells
                        .iter()
                        .map(|c| c.map_or(Cell::Missing, Cell::Bool))
                        .collect(),
                    class: *class,
                    transition: i / 2,
                })
                .collect(),
        }
    }

    #[test]
    fn single_separating_column_gives_one_feature_rules() {
        let t = Some(true);
        let f = Some(false);
        let d = boolean_dataset(
            &["a", "b"],
            &[
                (&[t, t], Class::Pre),
                (&[f, f], Class::Post),
                (&[t, f], Class::Pre),
                (&[f, t], Class::Post),
            ],
        );
        let rs = learn_rules(&d, &RuleConfig::default());
        assert_eq!(rs.rules.len(), 2);
        for r in &rs.rules {
            assert_eq!(r.antecedent.len(), 1);
            assert_eq!(r.weight, 1.0);
        }
        assert_eq!(
            rs.rules[0].to_string(),
            "IF (a ?arg_0)=True THEN pre-state [w=1]"
        );
    }

    #[test]
    fn weights_match_recomputed_coverage() {
        let t = Some(true);
        let f = Some(false);
        let d = boolean_dataset(
            &["a", "b"],
            &[
                (&[t, t], Class::Pre),
                (&[f, f], Class::Post),
                (&[t, None], Class::Pre),
                (&[f, t], Class::Post),
                (&[f, t], Class::Pre),
                (&[t, f], Class::Post),
            ],
        );
        let strict = RuleConfig {
            purity: 0.0,
            completion: 1.0,
            min_coverage: 0.0,
            separation: 1.0,
            completion_margin: 0.0,
        };
        let rs = learn_rules(&d, &strict);
        assert!(rs.rules.len() > 2);
        for r in &rs.rules {
            assert_eq!(r.weight, coverage(&d, r), "{r}");
            assert!(r.weight > 0.0);
        }
    }
}
