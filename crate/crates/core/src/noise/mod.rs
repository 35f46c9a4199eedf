//! Noise filters applied to a dataset before learning: a frequency filter
//! for logical columns and clustering-based discretisation for numeric ones.

pub mod cluster;

use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::transitions::{Cell, Class, Dataset};
pub use cluster::{
    cluster_silhouette, divisive_cluster, kmeans, nstd, quality, silhouette, Cluster, ClusterSet,
    KMeansConfig, QualityWeights,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterConfig {
    pub logical_threshold: f64,
    pub quality: QualityWeights,
    pub kmeans: KMeansConfig,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            logical_threshold: 0.05,
            quality: QualityWeights::default(),
            kmeans: KMeansConfig::default(),
            seed: 0,
        }
    }
}

/// Erases, per class and logical column, every value whose relative
/// frequency among observed cells is below `threshold`. Returns the filtered
/// dataset and the number of erased cells.
pub fn filter_logical_noise(d: &Dataset, threshold: f64) -> (Dataset, usize) {
    let mut out = d.clone();
    let mut erased = 0;
    for (col, attr) in d.attributes.iter().enumerate() {
        if attr.is_numeric() {
            continue;
        }
        for class in Class::BOTH {
            let (mut t, mut f) = (0usize, 0usize);
            for row in d.rows_of(class) {
                match row.cells[col] {
                    Cell::Bool(true) => t += 1,
                    Cell::Bool(false) => f += 1,
                    _ => {}
                }
            }
            let total = (t + f) as f64;
            if total == 0.0 {
                continue;
            }
            let drop_true = (t as f64 / total) < threshold;
            let drop_false = (f as f64 / total) < threshold;
            for row in out.rows.iter_mut().filter(|r| r.class == class) {
                let cell = &mut row.cells[col];
                if (*cell == Cell::Bool(true) && drop_true)
                    || (*cell == Cell::Bool(false) && drop_false)
                {
                    *cell = Cell::Missing;
                    erased += 1;
                }
            }
        }
    }
    (out, erased)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub centroid: f64,
    pub size: usize,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeReport {
    pub clusters: Vec<ClusterSummary>,
    pub outliers: Vec<f64>,
}

/// Per-attribute outcome of discretisation, keyed by attribute text.
pub type DiscretisationReport = BTreeMap<String, AttributeReport>;

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Generator for one attribute's clustering, independent of column order.
pub fn attribute_rng(seed: u64, attribute: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ stable_hash(attribute))
}

/// Replaces every numeric value by the centroid of its cluster; outliers
/// become missing. Attributes are processed independently.
pub fn discretise_fluents(d: &Dataset, cfg: &FilterConfig) -> (Dataset, DiscretisationReport) {
    let numeric: Vec<usize> = (0..d.attributes.len())
        .filter(|&c| d.attributes[c].is_numeric())
        .collect();
    let results: Vec<(usize, BTreeMap<OrderedFloat<f64>, f64>, AttributeReport)> = numeric
        .par_iter()
        .map(|&col| {
            let name = d.attributes[col].to_string();
            let values: Vec<f64> = d
                .rows
                .iter()
                .filter_map(|r| r.cells[col].number())
                .collect();
            let mut rng = attribute_rng(cfg.seed, &name);
            let set = divisive_cluster(&values, &cfg.quality, &cfg.kmeans, &mut rng);
            let mut mapping = BTreeMap::new();
            let mut summaries = Vec::with_capacity(set.clusters.len());
            for (i, c) in set.clusters.iter().enumerate() {
                for &v in c.members() {
                    mapping.insert(OrderedFloat(v), c.centroid());
                }
                summaries.push(ClusterSummary {
                    centroid: c.centroid(),
                    size: c.len(),
                    quality: quality(i, &set.clusters, &cfg.quality),
                });
            }
            (
                col,
                mapping,
                AttributeReport {
                    clusters: summaries,
                    outliers: set.outliers,
                },
            )
        })
        .collect();

    let mut out = d.clone();
    let mut report = DiscretisationReport::new();
    for (col, mapping, rep) in results {
        for row in &mut out.rows {
            if let Some(v) = row.cells[col].number() {
                row.cells[col] = match mapping.get(&OrderedFloat(v)) {
                    Some(&c) => Cell::Label(c),
                    None => Cell::Missing,
                };
            }
        }
        report.insert(d.attributes[col].to_string(), rep);
    }
    (out, report)
}

/// `original` with every numeric cell that discretisation turned into an
/// outlier erased; the other values keep their exact readings.
pub fn mask_outliers(original: &Dataset, discrete: &Dataset) -> Dataset {
    let mut out = original.clone();
    for (row, disc) in out.rows.iter_mut().zip(&discrete.rows) {
        for (cell, d) in row.cells.iter_mut().zip(&disc.cells) {
            if cell.number().is_some() && d.is_missing() {
                *cell = Cell::Missing;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::LiftedKey;
    use crate::transitions::{Attribute, Row};

    fn dataset(logical: &[(Option<bool>, Class)]) -> Dataset {
        Dataset {
            action: "a".into(),
            arity: 1,
            attributes: vec![Attribute::predicate(LiftedKey::new("p", vec![0]))],
            rows: logical
                .iter()
                .enumerate()
                .map(|(i, (v, c))| Row {
                    cells: vec![v.map_or(Cell::Missing, Cell::Bool)],
                    class: *c,
                    transition: i / 2,
                })
                .collect(),
        }
    }

    #[test]
    fn all_true_column_is_untouched() {
        let d = dataset(&[(Some(true), Class::Pre), (Some(true), Class::Post)]);
        let (f, n) = filter_logical_noise(&d, 1.0);
        assert_eq!((f, n), (d, 0));
    }

    #[test]
    fn balanced_column_survives_default_threshold() {
        let rows: Vec<_> = (0..4).map(|i| (Some(i % 4 < 2), Class::Pre)).collect();
        let d = dataset(&rows);
        assert_eq!(filter_logical_noise(&d, 0.05).1, 0);
    }

    #[test]
    fn rare_value_becomes_missing() {
        let mut rows = vec![(Some(false), Class::Pre); 20];
        rows[3].0 = Some(true);
        rows[5].0 = None;
        let d = dataset(&rows);
        let (f, n) = filter_logical_noise(&d, 0.1);
        assert_eq!(n, 1);
        assert_eq!(f.rows[3].cells[0], Cell::Missing);
        assert_eq!(f.rows[4].cells[0], Cell::Bool(false));
    }

    #[test]
    fn stable_hash_is_fnv1a() {
        assert_eq!(stable_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
