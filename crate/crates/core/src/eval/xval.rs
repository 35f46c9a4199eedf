//! k-fold cross-validation with optional noise and ablation arms.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::EvalError;
use crate::model::{learn_domain, LearnConfig, LearnReport};
use crate::noise::stable_hash;
use crate::trace::PlanTrace;

use super::metrics::{score_domain, Metrics};
use super::noise::{inject_noise, NoiseSpec};
use super::replay::replay_validate;

/// Which pipeline stages a second arm switches off for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Filters,
    Refinement,
    /// Filters and refinement together.
    Both,
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "filters" => Ok(Ablation::Filters),
            "refinement" => Ok(Ablation::Refinement),
            "both" => Ok(Ablation::Both),
            _ => Err(format!(
                "unknown ablation {s:?} (filters, refinement, both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XvalConfig {
    pub k: usize,
    pub seed: u64,
    pub learn: LearnConfig,
    /// Applied to the training folds only.
    pub noise: Option<NoiseSpec>,
    pub ablation: Option<Ablation>,
}

impl Default for XvalConfig {
    fn default() -> Self {
        XvalConfig {
            k: 5,
            seed: 0,
            learn: LearnConfig::default(),
            noise: None,
            ablation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

impl MeanMetrics {
    fn mean<'a>(items: impl Iterator<Item = (f64, f64, f64)> + 'a) -> Self {
        let mut n = 0.0;
        let mut acc = MeanMetrics::default();
        for (p, r, f) in items {
            acc.precision += p;
            acc.recall += r;
            acc.fscore += f;
            n += 1.0;
        }
        if n > 0.0 {
            acc.precision /= n;
            acc.recall /= n;
            acc.fscore /= n;
        }
        acc
    }
}

/// Counters from the pipeline stages, summed over the actions of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageStats {
    pub erased_cells: usize,
    pub outliers: usize,
    pub clusters: usize,
    pub fits: usize,
    pub relations: usize,
    pub rules: usize,
    pub conflicts: usize,
    pub failed_actions: usize,
}

impl StageStats {
    fn of(report: &LearnReport) -> Self {
        let mut s = StageStats::default();
        for a in report.actions.values() {
            s.erased_cells += a.erased_cells;
            s.outliers += a.outliers;
            s.clusters += a.clusters;
            s.fits += a.fits.iter().filter(|f| f.expression.is_some()).count();
            s.relations += a.relations.len();
            s.rules += a.rules.len();
            s.conflicts += a.conflicts;
            s.failed_actions += usize::from(a.error.is_some());
        }
        s
    }

    fn add(&mut self, o: &StageStats) {
        self.erased_cells += o.erased_cells;
        self.outliers += o.outliers;
        self.clusters += o.clusters;
        self.fits += o.fits;
        self.relations += o.relations;
        self.rules += o.rules;
        self.conflicts += o.conflicts;
        self.failed_actions += o.failed_actions;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train: usize,
    pub test: usize,
    /// Empty without a reference domain.
    pub per_action: BTreeMap<String, Metrics>,
    pub domain: Option<MeanMetrics>,
    pub validity: bool,
    pub valid_traces: usize,
    /// First failure per invalid test trace.
    pub failures: Vec<String>,
    pub stage_stats: StageStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub name: String,
    pub skip_filters: bool,
    pub skip_refinement: bool,
    /// Means over folds.
    pub per_action: BTreeMap<String, MeanMetrics>,
    pub domain: Option<MeanMetrics>,
    /// True when every fold replays every test trace.
    pub validity: bool,
    pub stage_stats: StageStats,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub config: XvalConfig,
    pub traces: usize,
    pub fold_sizes: Vec<usize>,
    pub per_action: BTreeMap<String, MeanMetrics>,
    pub domain: Option<MeanMetrics>,
    pub validity: bool,
    pub stage_stats: StageStats,
    /// The full configuration first, then the ablated one when requested.
    pub arms: Vec<ArmReport>,
}

/// Seeded shuffle into `k` folds whose sizes differ by at most one.
pub fn split_folds(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..k)
        .map(|i| idx[i * n / k..(i + 1) * n / k].to_vec())
        .collect()
}

fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let text: Vec<String> = std::iter::once(seed)
        .chain(parts.iter().copied())
        .map(|p| p.to_string())
        .collect();
    stable_hash(&text.join(":"))
}

fn run_fold(
    traces: &[PlanTrace],
    folds: &[Vec<usize>],
    fold: usize,
    arm: usize,
    learn: &LearnConfig,
    reference: Option<&Domain>,
    cfg: &XvalConfig,
) -> Result<FoldResult, EvalError> {
    let train: Vec<PlanTrace> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != fold)
        .flat_map(|(_, f)| f.iter().map(|&t| traces[t].clone()))
        .collect();
    let test: Vec<&PlanTrace> = folds[fold].iter().map(|&t| &traces[t]).collect();
    // Arms share the noisy training data so their comparison is paired.
    let train = match &cfg.noise {
        Some(spec) => inject_noise(
            &train,
            &NoiseSpec {
                seed: derive_seed(spec.seed, &[fold as u64]),
                ..*spec
            },
        ),
        None => train,
    };
    let mut learn = learn.clone();
    learn.filter.seed = derive_seed(cfg.seed, &[fold as u64, arm as u64]);
    let (domain, report) = learn_domain(&train, &learn)?;

    let mut failures = Vec::new();
    let mut valid_traces = 0;
    for (i, t) in test.iter().enumerate() {
        match replay_validate(&domain, t) {
            Ok(o) if o.valid => valid_traces += 1,
            Ok(o) => failures.push(format!(
                "trace {}: {}",
                folds[fold][i],
                o.failure
                    .map_or("final state mismatch".into(), |f| f.to_string())
            )),
            Err(e) => failures.push(format!("trace {}: {e}", folds[fold][i])),
        }
    }
    let (per_action, domain_score) = match reference {
        Some(r) => {
            let s = score_domain(&domain, r);
            let m = MeanMetrics {
                precision: s.precision,
                recall: s.recall,
                fscore: s.fscore,
            };
            (s.per_action, Some(m))
        }
        None => (BTreeMap::new(), None),
    };
    Ok(FoldResult {
        fold,
        train: train.len(),
        test: test.len(),
        per_action,
        domain: domain_score,
        validity: valid_traces == test.len(),
        valid_traces,
        failures,
        stage_stats: StageStats::of(&report),
    })
}

fn summarise(name: &str, learn: &LearnConfig, folds: Vec<FoldResult>) -> ArmReport {
    let mut names: Vec<&String> = folds.iter().flat_map(|f| f.per_action.keys()).collect();
    names.sort();
    names.dedup();
    let per_action = names
        .into_iter()
        .map(|a| {
            let m = MeanMetrics::mean(
                folds
                    .iter()
                    .filter_map(|f| f.per_action.get(a))
                    .map(|m| (m.precision, m.recall, m.fscore)),
            );
            (a.clone(), m)
        })
        .collect();
    let domain = folds.iter().all(|f| f.domain.is_some()).then(|| {
        MeanMetrics::mean(
            folds
                .iter()
                .filter_map(|f| f.domain)
                .map(|m| (m.precision, m.recall, m.fscore)),
        )
    });
    let mut stage_stats = StageStats::default();
    folds.iter().for_each(|f| stage_stats.add(&f.stage_stats));
    ArmReport {
        name: name.to_string(),
        skip_filters: learn.skip_filters,
        skip_refinement: learn.skip_refinement,
        per_action,
        domain,
        validity: folds.iter().all(|f| f.validity),
        stage_stats,
        folds,
    }
}

/// Splits the traces into `k` folds; each fold in turn is the clean test
/// set while the others, noised if requested, train the learner. Reports
/// metrics against `reference` when given and replay validity on the test
/// traces, averaged over the folds.
pub fn cross_validate(
    traces: &[PlanTrace],
    reference: Option<&Domain>,
    cfg: &XvalConfig,
) -> Result<FoldReport, EvalError> {
    if cfg.k < 2 || traces.len() < cfg.k {
        return Err(EvalError::TooFewTraces {
            needed: cfg.k.max(2),
            got: traces.len(),
        });
    }
    let folds = split_folds(traces.len(), cfg.k, cfg.seed);
    let mut arms = vec![("full".to_string(), cfg.learn.clone())];
    if let Some(a) = cfg.ablation {
        let mut l = cfg.learn.clone();
        l.skip_filters |= matches!(a, Ablation::Filters | Ablation::Both);
        l.skip_refinement |= matches!(a, Ablation::Refinement | Ablation::Both);
        let name = match a {
            Ablation::Filters => "no-filters",
            Ablation::Refinement => "no-refinement",
            Ablation::Both => "no-filters-no-refinement",
        };
        arms.push((name.to_string(), l));
    }
    let jobs: Vec<(usize, usize)> = (0..arms.len())
        .flat_map(|a| (0..cfg.k).map(move |f| (a, f)))
        .collect();
    let results: Vec<Result<FoldResult, EvalError>> = jobs
        .par_iter()
        .map(|&(a, f)| run_fold(traces, &folds, f, a, &arms[a].1, reference, cfg))
        .collect();
    let mut per_arm: Vec<Vec<FoldResult>> = vec![Vec::new(); arms.len()];
    for (&(a, _), r) in jobs.iter().zip(results) {
        per_arm[a].push(r?);
    }
    let reports: Vec<ArmReport> = arms
        .iter()
        .zip(per_arm)
        .map(|((name, learn), folds)| summarise(name, learn, folds))
        .collect();
    let main = &reports[0];
    Ok(FoldReport {
        config: cfg.clone(),
        traces: traces.len(),
        fold_sizes: folds.iter().map(Vec::len).collect(),
        per_action: main.per_action.clone(),
        domain: main.domain,
        validity: main.validity,
        stage_stats: main.stage_stats,
        arms: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_the_traces() {
        let folds = split_folds(50, 5, 3);
        assert!(folds.iter().all(|f| f.len() == 10));
        let mut all: Vec<usize> = folds.concat();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(
            split_folds(7, 3, 1)
                .iter()
                .map(Vec::len)
                .collect::<Vec<_>>(),
            vec![2, 2, 3]
        );
    }

    #[test]
    fn too_few_traces() {
        let t = vec![PlanTrace::default(); 3];
        assert_eq!(
            cross_validate(&t, None, &XvalConfig::default()).unwrap_err(),
            EvalError::TooFewTraces { needed: 5, got: 3 }
        );
    }
}
