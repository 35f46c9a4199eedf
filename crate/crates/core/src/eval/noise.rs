//! Seeded corruption of trace states.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::trace::{Atom, PlanTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    LogicalOutlier,
    NumericOutlier,
    NumericRandom,
    Mixed,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::LogicalOutlier => "logical-outlier",
            NoiseKind::NumericOutlier => "numeric-outlier",
            NoiseKind::NumericRandom => "numeric-random",
            NoiseKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            NoiseKind::LogicalOutlier,
            NoiseKind::NumericOutlier,
            NoiseKind::NumericRandom,
            NoiseKind::Mixed,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown noise kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// Fraction of eligible state elements to corrupt, in [0, 1].
    pub percentage: f64,
    pub kind: NoiseKind,
    pub seed: u64,
    /// Half-width of the multiplicative perturbation of random noise.
    pub random_magnitude: f64,
}

impl NoiseSpec {
    pub fn new(percentage: f64, kind: NoiseKind, seed: u64) -> Self {
        NoiseSpec {
            percentage: percentage.clamp(0.0, 1.0),
            kind,
            seed,
            random_magnitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Literal(usize, usize, usize),
    Fluent(usize, usize, usize),
}

/// Slots the kind can corrupt: literals for logical noise, fluent values for
/// numeric noise, both for mixed noise. Order is deterministic.
fn eligible(traces: &[PlanTrace], kind: NoiseKind) -> Vec<Slot> {
    let literals = kind != NoiseKind::NumericOutlier && kind != NoiseKind::NumericRandom;
    let fluents = kind != NoiseKind::LogicalOutlier;
    let mut out = Vec::new();
    for (t, trace) in traces.iter().enumerate() {
        for (s, state) in trace.states.iter().enumerate() {
            if literals {
                out.extend((0..state.literals.len()).map(|i| Slot::Literal(t, s, i)));
            }
            if fluents {
                out.extend((0..state.fluents.len()).map(|i| Slot::Fluent(t, s, i)));
            }
        }
    }
    out
}

/// Number of slots `inject_noise` corrupts.
pub fn corrupted_count(traces: &[PlanTrace], spec: &NoiseSpec) -> usize {
    let n = eligible(traces, spec.kind).len();
    ((spec.percentage * n as f64).ceil() as usize).min(n)
}

fn fluent_ranges(traces: &[PlanTrace]) -> BTreeMap<String, (f64, f64)> {
    let mut out: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for state in traces.iter().flat_map(|t| &t.states) {
        for (atom, &v) in &state.fluents {
            let e = out.entry(atom.name.clone()).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
    }
    out
}

/// Corrupts `⌈percentage × eligible slots⌉` distinct slots chosen uniformly.
/// Literals flip. Numeric outliers are drawn from ten ranges either side of
/// the observed values of that fluent name, with a random sign; random noise
/// scales the value by `1 + u` for `u` uniform in ±`random_magnitude`.
pub fn inject_noise(traces: &[PlanTrace], spec: &NoiseSpec) -> Vec<PlanTrace> {
    let mut out = traces.to_vec();
    let slots = eligible(traces, spec.kind);
    let count = corrupted_count(traces, spec);
    if count == 0 {
        return out;
    }
    let ranges = fluent_ranges(traces);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chosen = rand::seq::index::sample(&mut rng, slots.len(), count);
    for i in chosen.into_iter() {
        match slots[i] {
            Slot::Literal(t, s, k) => {
                let v = out[t].states[s]
                    .literals
                    .values_mut()
                    .nth(k)
                    .expect("slot exists");
                *v = !*v;
            }
            Slot::Fluent(t, s, k) => {
                let (atom, v): (&Atom, &mut f64) = out[t].states[s]
                    .fluents
                    .iter_mut()
                    .nth(k)
                    .expect("slot exists");
                let outlier = match spec.kind {
                    NoiseKind::NumericOutlier => true,
                    NoiseKind::NumericRandom => false,
                    _ => rng.gen_bool(0.5),
                };
                *v = if outlier {
                    let (lo, hi) = ranges[&atom.name];
                    let range = if hi > lo { hi - lo } else { 1.0 };
                    let x = rng.gen_range(lo - 10.0 * range..=hi + 10.0 * range);
                    if rng.gen_bool(0.5) {
                        -x
                    } else {
                        x
                    }
                } else {
                    let m = spec.random_magnitude.abs();
                    *v * (1.0 + rng.gen_range(-m..=m))
                };
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::generator::{generate_traces, Builtin, GeneratorSpec};

    fn corpus() -> Vec<PlanTrace> {
        generate_traces(&GeneratorSpec::new(Builtin::Rover), 5, 2).unwrap()
    }

    fn differing(a: &[PlanTrace], b: &[PlanTrace]) -> usize {
        let mut n = 0;
        for (x, y) in a.iter().zip(b) {
            for (s, t) in x.states.iter().zip(&y.states) {
                n += s
                    .literals
                    .values()
                    .zip(t.literals.values())
                    .filter(|(p, q)| p != q)
                    .count();
                n += s
                    .fluents
                    .values()
                    .zip(t.fluents.values())
                    .filter(|(p, q)| p != q)
                    .count();
            }
        }
        n
    }

    #[test]
    fn zero_percent_is_identity() {
        let c = corpus();
        assert_eq!(
            inject_noise(&c, &NoiseSpec::new(0.0, NoiseKind::Mixed, 1)),
            c
        );
    }

    #[test]
    fn full_logical_noise_flips_every_literal() {
        let c = corpus();
        let noisy = inject_noise(&c, &NoiseSpec::new(1.0, NoiseKind::LogicalOutlier, 1));
        for (x, y) in c.iter().zip(&noisy) {
            for (s, t) in x.states.iter().zip(&y.states) {
                assert!(s
                    .literals
                    .iter()
                    .zip(&t.literals)
                    .all(|(p, q)| p.0 == q.0 && *p.1 != *q.1));
                assert_eq!(s.fluents, t.fluents);
            }
        }
    }

    #[test]
    fn corrupts_requested_count() {
        let c = corpus();
        for kind in [
            NoiseKind::LogicalOutlier,
            NoiseKind::NumericOutlier,
            NoiseKind::Mixed,
        ] {
            let spec = NoiseSpec::new(0.1, kind, 4);
            assert_eq!(
                differing(&c, &inject_noise(&c, &spec)),
                corrupted_count(&c, &spec),
                "{kind}"
            );
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            "logical-outlier",
            "numeric-outlier",
            "numeric-random",
            "mixed",
        ] {
            assert_eq!(k.parse::<NoiseKind>().unwrap().name(), k);
        }
        assert!("other".parse::<NoiseKind>().is_err());
    }
}
