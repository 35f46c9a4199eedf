//! Collapses the rules of one class into a single meta-state rule.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::domain::Comparator;
use crate::error::LearnError;
use crate::expr::Expr;
use crate::rules::{Feature, Rule, RuleSet};
use crate::transitions::{Attribute, Class};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefineConfig {
    pub irrelevance_ratio: f64,
    pub interval_coefficient: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            irrelevance_ratio: 0.05,
            interval_coefficient: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportedFeature {
    pub feature: Feature,
    pub support: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    DropWeaker,
    DropBoth,
}

/// Two supports whose gap lies within `coefficient` times their mean are
/// indistinguishable and both features go; otherwise the weaker one goes.
pub fn solve_conflict(s1: f64, s2: f64, coefficient: f64) -> Decision {
    let mean = (s1 + s2) / 2.0;
    if (s1 - s2).abs() <= coefficient * mean {
        Decision::DropBoth
    } else {
        Decision::DropWeaker
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class: Class,
    pub kept: Vec<(String, f64)>,
    pub irrelevant: Vec<(String, f64)>,
    pub conflicts: Vec<ConflictRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictRecord {
    pub kept: Option<(String, f64)>,
    pub dropped: Vec<(String, f64)>,
    pub decision: Decision,
}

/// Sums the weight of every rule containing each feature, drops features
/// below `ratio` times the largest support and sorts the rest by descending
/// support (ties by feature order). Returns the kept and the dropped lists.
pub fn extract_supported_features(
    rules: &[&Rule],
    ratio: f64,
) -> Result<(Vec<SupportedFeature>, Vec<SupportedFeature>), LearnError> {
    if rules.is_empty() {
        return Err(LearnError::EmptyRuleSet);
    }
    let mut sums: BTreeMap<&Feature, f64> = BTreeMap::new();
    for r in rules {
        for f in &r.antecedent {
            *sums.entry(f).or_default() += r.weight;
        }
    }
    let max = sums.values().copied().fold(0.0, f64::max);
    let mut all: Vec<SupportedFeature> = sums
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(f, s)| SupportedFeature {
            feature: f.clone(),
            support: s,
        })
        .collect();
    all.sort_by(|a, b| {
        b.support
            .total_cmp(&a.support)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    let (kept, dropped) = all.into_iter().partition(|f| f.support >= ratio * max);
    Ok((kept, dropped))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ConflictKey {
    Attribute(Attribute),
    Relation(Expr, Comparator),
}

fn conflict_key(f: &Feature) -> ConflictKey {
    match &f.attribute {
        Attribute::Relation { lhs, cmp, .. } => ConflictKey::Relation(lhs.clone(), *cmp),
        other => ConflictKey::Attribute(other.clone()),
    }
}

/// Folds features, strongest first, into one antecedent, resolving
/// features that disagree about the same attribute.
pub fn merge_features(
    ordered: &[SupportedFeature],
    class: Class,
    cfg: &RefineConfig,
) -> (Rule, Vec<ConflictRecord>) {
    let mut chosen: BTreeMap<ConflictKey, &SupportedFeature> = BTreeMap::new();
    let mut blocked: BTreeSet<ConflictKey> = BTreeSet::new();
    let mut conflicts = Vec::new();
    let describe = |s: &SupportedFeature| (s.feature.to_string(), s.support);
    for sf in ordered {
        let key = conflict_key(&sf.feature);
        if blocked.contains(&key) {
            conflicts.push(ConflictRecord {
                kept: None,
                dropped: vec![describe(sf)],
                decision: Decision::DropBoth,
            });
            continue;
        }
        match chosen.get(&key) {
            None => {
                chosen.insert(key, sf);
            }
            Some(existing) => {
                match solve_conflict(existing.support, sf.support, cfg.interval_coefficient) {
                    Decision::DropBoth => {
                        conflicts.push(ConflictRecord {
                            kept: None,
                            dropped: vec![describe(existing), describe(sf)],
                            decision: Decision::DropBoth,
                        });
                        chosen.remove(&key);
                        blocked.insert(key);
                    }
                    Decision::DropWeaker => {
                        let (strong, weak) = if existing.support >= sf.support {
                            (*existing, sf)
                        } else {
                            (sf, *existing)
                        };
                        conflicts.push(ConflictRecord {
                            kept: Some(describe(strong)),
                            dropped: vec![describe(weak)],
                            decision: Decision::DropWeaker,
                        });
                        chosen.insert(key, strong);
                    }
                }
            }
        }
    }
    let antecedent = chosen.into_values().map(|s| s.feature.clone()).collect();
    (Rule::new(antecedent, class, 1.0), conflicts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    pub pre: Rule,
    pub post: Rule,
    pub reports: Vec<ClassReport>,
}

/// One meta-state rule per class.
pub fn refine(rs: &RuleSet, cfg: &RefineConfig) -> Result<Refined, LearnError> {
    let mut out = Vec::with_capacity(2);
    let mut reports = Vec::with_capacity(2);
    for class in Class::BOTH {
        let rules: Vec<&Rule> = rs.of_class(class).collect();
        let (kept, dropped) = extract_supported_features(&rules, cfg.irrelevance_ratio)
            .map_err(|_| LearnError::MissingClass(class.label()))?;
        let (rule, conflicts) = merge_features(&kept, class, cfg);
        reports.push(ClassReport {
            class,
            kept: kept
                .iter()
                .map(|s| (s.feature.to_string(), s.support))
                .collect(),
            irrelevant: dropped
                .iter()
                .map(|s| (s.feature.to_string(), s.support))
                .collect(),
            conflicts,
        });
        out.push(rule);
    }
    let post = out.pop().expect("two classes");
    let pre = out.pop().expect("two classes");
    Ok(Refined { pre, post, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LiftedKey;
    use crate::transitions::Value;

    fn feat(name: &str, v: bool) -> Feature {
        Feature {
            attribute: Attribute::predicate(LiftedKey::new(name, vec![0])),
            value: Value::Bool(v),
        }
    }

    #[test]
    fn conflict_decisions() {
        assert_eq!(solve_conflict(3.0, 3.0, 0.1), Decision::DropBoth);
        assert_eq!(solve_conflict(10.0, 1.0, 0.1), Decision::DropWeaker);
        assert_eq!(solve_conflict(1.0, 0.95, 0.1), Decision::DropBoth);
        assert_eq!(solve_conflict(9.0, 3.0, 0.1), Decision::DropWeaker);
    }

    #[test]
    fn supports_add_up() {
        let r1 = Rule::new(vec![feat("f", true)], Class::Pre, 0.6);
        let r2 = Rule::new(vec![feat("f", true), feat("g", false)], Class::Pre, 0.3);
        let (kept, dropped) = extract_supported_features(&[&r1, &r2], 0.05).unwrap();
        assert!(dropped.is_empty());
        assert_eq!(kept[0].feature, feat("f", true));
        assert!((kept[0].support - 0.9).abs() < 1e-12);
        assert!((kept[1].support - 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_rule_passes_through() {
        let r = Rule::new(vec![feat("f", true)], Class::Pre, 1.0);
        let (kept, _) = extract_supported_features(&[&r], 0.05).unwrap();
        assert_eq!(
            kept,
            vec![SupportedFeature {
                feature: feat("f", true),
                support: 1.0
            }]
        );
        let (merged, conflicts) = merge_features(&kept, Class::Pre, &RefineConfig::default());
        assert_eq!(merged.antecedent, r.antecedent);
        assert!(conflicts.is_empty());
    }

    #[test]
    fn empty_and_one_sided_rulesets_are_errors() {
        assert_eq!(
            extract_supported_features(&[], 0.05).unwrap_err(),
            LearnError::EmptyRuleSet
        );
        let rs = RuleSet {
            rules: vec![Rule::new(vec![feat("f", true)], Class::Pre, 1.0)],
            fingerprint: 0,
        };
        assert_eq!(
            refine(&rs, &RefineConfig::default()).unwrap_err(),
            LearnError::MissingClass("post-state")
        );
    }

    #[test]
    fn weaker_side_of_clear_conflict_is_dropped() {
        let ordered = vec![
            SupportedFeature {
                feature: feat("f", true),
                support: 9.0,
            },
            SupportedFeature {
                feature: feat("f", false),
                support: 3.0,
            },
        ];
        let (merged, conflicts) = merge_features(&ordered, Class::Pre, &RefineConfig::default());
        assert_eq!(merged.antecedent, vec![feat("f", true)]);
        assert_eq!(conflicts[0].decision, Decision::DropWeaker);
    }
}
