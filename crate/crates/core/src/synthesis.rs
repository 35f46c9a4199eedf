//! Changed-fluent detection, best-first symbolic regression of the change,
//! and relational comparison features built from the fitted expressions.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::domain::{Comparator, LiftedKey, NumericKind};
use crate::expr::{Expr, Op};
use crate::transitions::{Attribute, Cell, Class, Dataset, Row};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionConfig {
    pub acceptance_threshold: f64,
    pub timeout_seconds: f64,
    /// Node expansions granted per second of `timeout_seconds`.
    pub expansions_per_second: f64,
    pub constant_pool: Vec<i64>,
    pub max_expression_size: usize,
    /// Fraction of observed pairs that must change for a fluent to count as variant.
    pub change_fraction: f64,
    /// Fraction of changed pairs that must agree on a direction.
    pub direction_agreement: f64,
    /// Fraction of pairs with the largest errors left out of the score.
    pub trim_fraction: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            acceptance_threshold: 0.02,
            timeout_seconds: 300.0,
            expansions_per_second: 20.0,
            constant_pool: (1..=10).collect(),
            max_expression_size: 9,
            change_fraction: 0.5,
            direction_agreement: 0.9,
            trim_fraction: 0.25,
        }
    }
}

impl RegressionConfig {
    pub fn expansion_budget(&self) -> usize {
        (self.timeout_seconds * self.expansions_per_second)
            .max(0.0)
            .round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Increase,
    Decrease,
    Assign,
    Mixed,
}

impl Direction {
    pub fn kind(self) -> Option<NumericKind> {
        match self {
            Direction::Increase => Some(NumericKind::Increase),
            Direction::Decrease => Some(NumericKind::Decrease),
            Direction::Assign => Some(NumericKind::Assign),
            Direction::Mixed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluentDelta {
    pub target: LiftedKey,
    pub column: usize,
    /// (transition, pre value, post value) for pairs observed on both sides.
    pub pairs: Vec<(usize, f64, f64)>,
    pub direction: Direction,
}

fn changed(pre: f64, post: f64) -> bool {
    (post - pre).abs() > 1e-9 * pre.abs().max(post.abs()).max(1.0)
}

/// Fluents whose value changes across a pre/post pair in at least
/// `cfg.change_fraction` of the pairs where both values are observed.
pub fn detect_variant_fluents(d: &Dataset, cfg: &RegressionConfig) -> Vec<FluentDelta> {
    let mut out = Vec::new();
    for (col, attr) in d.attributes.iter().enumerate() {
        let Some(key) = attr.fluent_key() else {
            continue;
        };
        let pairs: Vec<(usize, f64, f64)> = (0..d.transitions())
            .filter_map(|t| {
                let (pre, post) = d.pair(t);
                Some((t, pre.cells[col].number()?, post.cells[col].number()?))
            })
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let moved: Vec<&(usize, f64, f64)> =
            pairs.iter().filter(|(_, a, b)| changed(*a, *b)).collect();
        if (moved.len() as f64) < cfg.change_fraction * pairs.len() as f64 || moved.is_empty() {
            continue;
        }
        let need = cfg.direction_agreement * moved.len() as f64;
        let down = moved.iter().filter(|(_, a, b)| b < a).count() as f64;
        let up = moved.len() as f64 - down;
        let direction = if is_assignment(&moved, need) {
            Direction::Assign
        } else if down >= need {
            Direction::Decrease
        } else if up >= need {
            Direction::Increase
        } else {
            Direction::Mixed
        };
        out.push(FluentDelta {
            target: key.clone(),
            column: col,
            pairs,
            direction,
        });
    }
    out
}

/// True when the post values agree while the changes themselves do not.
fn is_assignment(moved: &[&(usize, f64, f64)], need: f64) -> bool {
    if moved.len() < 2 {
        return false;
    }
    let mode = |vals: Vec<f64>| -> usize {
        let mut vals = vals;
        vals.sort_by(f64::total_cmp);
        let mut best = 0;
        let mut run = 0;
        for i in 0..vals.len() {
            run = if i > 0 && !changed(vals[i - 1], vals[i]) {
                run + 1
            } else {
                1
            };
            best = best.max(run);
        }
        best
    };
    let same_post = mode(moved.iter().map(|p| p.2).collect());
    let same_delta = mode(moved.iter().map(|p| (p.2 - p.1).abs()).collect());
    same_post as f64 >= need && same_post > same_delta
}

/// Result of a regression search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub expression: Expr,
    pub direction: Direction,
    pub error: f64,
    pub expansions: usize,
}

struct Problem {
    /// Target magnitude per pair.
    targets: Vec<f64>,
    seeds: Vec<(Expr, Vec<Option<f64>>)>,
    min_support: usize,
    trim: f64,
}

impl Problem {
    /// Normalised error, `None` when too few pairs can be evaluated.
    fn score(&self, values: &[Option<f64>]) -> Option<f64> {
        let mut errs: Vec<f64> = values
            .iter()
            .zip(&self.targets)
            .filter_map(|(v, y)| v.map(|v| (v - y).abs() / y.abs().max(1.0)))
            .collect();
        if errs.len() < self.min_support {
            return None;
        }
        let keep =
            errs.len() - ((errs.len() as f64 * self.trim).floor() as usize).min(errs.len() - 1);
        if keep < errs.len() {
            errs.sort_by(f64::total_cmp);
            errs.truncate(keep);
        }
        Some(errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

/// Largest size the parsimony pass enumerates exhaustively.
const PARSIMONY_MAX_SIZE: usize = 5;

impl Problem {
    fn combine(&self, a: &[Option<f64>], b: &[Option<f64>], op: Op) -> Option<Vec<Option<f64>>> {
        a.iter()
            .zip(b)
            .map(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => op.apply(*x, *y).map(Some),
                _ => Some(None),
            })
            .collect()
    }

    /// The lowest-scoring acceptable expression of the smallest size up to
    /// `max_size`, searching sizes in increasing order.
    fn smallest_accepted(&self, max_size: usize, threshold: f64) -> Option<(Expr, f64)> {
        let mut seen = HashSet::new();
        let mut level: Vec<(Expr, Vec<Option<f64>>)> = Vec::new();
        for (e, v) in &self.seeds {
            if seen.insert(fingerprint(v)) {
                level.push((e.clone(), v.clone()));
            }
        }
        let mut size = 1;
        while size <= max_size {
            let best = level
                .iter()
                .filter_map(|(e, v)| self.score(v).filter(|s| *s <= threshold).map(|s| (e, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((e, s)) = best {
                return Some((e.clone(), s));
            }
            size += 2;
            if size > max_size {
                break;
            }
            let last = size + 2 > max_size;
            let mut next = Vec::new();
            let mut best: Option<(Expr, f64)> = None;
            for (e, v) in &level {
                for op in Op::ALL {
                    for (seed, sv) in &self.seeds {
                        let Some(vals) = self.combine(v, sv, op) else {
                            continue;
                        };
                        if !seen.insert(fingerprint(&vals)) {
                            continue;
                        }
                        if last {
                            if let Some(sc) = self.score(&vals).filter(|s| *s <= threshold) {
                                if best.as_ref().map_or(true, |b| sc < b.1) {
                                    best = Some((Expr::bin(op, e.clone(), seed.clone()), sc));
                                }
                            }
                        } else {
                            next.push((Expr::bin(op, e.clone(), seed.clone()), vals));
                        }
                    }
                }
            }
            if last {
                return best;
            }
            level = next;
        }
        None
    }
}

struct Node {
    score: f64,
    size: usize,
    order: usize,
    expr: Expr,
    values: Vec<Option<f64>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Reversed so the max-heap pops the lowest score, then smallest size,
    /// then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(other.size.cmp(&self.size))
            .then(other.order.cmp(&self.order))
    }
}

fn fingerprint(values: &[Option<f64>]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in values {
        v.map(f64::to_bits).hash(&mut h);
    }
    h.finish()
}

/// Best-first search over right-linear expressions `seed op seed op ...`.
/// `targets[i]` is the value to reproduce from `inputs[i]`, the pre-state
/// row of pair `i`. Returns the first expression whose normalised error is
/// within the threshold, or `None` when the budget or the space runs out.
pub fn search_expression(
    attributes: &[Attribute],
    inputs: &[&Row],
    targets: &[f64],
    cfg: &RegressionConfig,
) -> Option<Fit> {
    search(
        attributes,
        inputs,
        targets,
        cfg,
        None,
        None,
        cfg.max_expression_size,
    )
}

fn search(
    attributes: &[Attribute],
    inputs: &[&Row],
    targets: &[f64],
    cfg: &RegressionConfig,
    exclude: Option<usize>,
    own: Option<usize>,
    max_size: usize,
) -> Option<Fit> {
    // Ties go to the earliest seed: other fluents, then constants, then the
    // target itself, whose pre value as a change amount is rarely meant.
    let mut seeds: Vec<(Expr, Vec<Option<f64>>)> = Vec::new();
    let mut own_seed = None;
    for (col, attr) in attributes.iter().enumerate() {
        if Some(col) == exclude {
            continue;
        }
        if let Some(key) = attr.fluent_key() {
            let vals: Vec<Option<f64>> = inputs.iter().map(|r| r.cells[col].number()).collect();
            if vals.iter().any(Option::is_some) {
                let seed = (Expr::var(key.clone()), vals);
                if Some(col) == own {
                    own_seed = Some(seed);
                } else {
                    seeds.push(seed);
                }
            }
        }
    }
    seeds.extend(
        cfg.constant_pool
            .iter()
            .map(|&c| (Expr::num(c as f64), vec![Some(c as f64); inputs.len()])),
    );
    seeds.extend(own_seed);
    let problem = Problem {
        targets: targets.to_vec(),
        seeds,
        min_support: 2.max(targets.len().div_ceil(2)),
        trim: cfg.trim_fraction,
    };

    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let mut order = 0;
    for (expr, vals) in &problem.seeds {
        if let Some(score) = problem.score(vals) {
            if seen.insert(fingerprint(vals)) {
                heap.push(Node {
                    score,
                    size: 1,
                    order,
                    expr: expr.clone(),
                    values: vals.clone(),
                });
                order += 1;
            }
        }
    }
    let budget = cfg.expansion_budget();
    let mut expansions = 0;
    while let Some(node) = heap.pop() {
        log::trace!(
            "sr pop {} score={:.6} size={}",
            node.expr,
            node.score,
            node.size
        );
        if node.score <= cfg.acceptance_threshold {
            // Best-first can reach an acceptable value vector through a
            // detour such as ((b + 1) * d) - d; prefer a shorter expression.
            let (expr, score) = problem
                .smallest_accepted(
                    node.size.saturating_sub(2).min(PARSIMONY_MAX_SIZE),
                    cfg.acceptance_threshold,
                )
                .unwrap_or((node.expr, node.score));
            return Some(Fit {
                expression: expr.fold_constants(),
                direction: Direction::Assign,
                error: score,
                expansions,
            });
        }
        if node.size + 2 > max_size {
            continue;
        }
        if expansions >= budget {
            break;
        }
        expansions += 1;
        for op in Op::ALL {
            for (seed, seed_vals) in &problem.seeds {
                let mut ok = true;
                let vals: Vec<Option<f64>> = node
                    .values
                    .iter()
                    .zip(seed_vals)
                    .map(|(a, b)| match (a, b) {
                        (Some(a), Some(b)) => {
                            let v = op.apply(*a, *b);
                            ok &= v.is_some();
                            v
                        }
                        _ => None,
                    })
                    .collect();
                if !ok || !seen.insert(fingerprint(&vals)) {
                    continue;
                }
                if let Some(score) = problem.score(&vals) {
                    heap.push(Node {
                        score,
                        size: node.size + 2,
                        order,
                        expr: Expr::bin(op, node.expr.clone(), seed.clone()),
                        values: vals,
                    });
                    order += 1;
                }
            }
        }
    }
    None
}

/// Fits the magnitude of a fluent's change (or its assigned value) as an
/// expression over the pre-state numeric attributes. A monotone change is
/// re-read as an assignment when the post value alone has a strictly
/// smaller expression that does not mention the fluent itself, as with a
/// tank refilled to its capacity.
pub fn fit_expression(d: &Dataset, delta: &FluentDelta, cfg: &RegressionConfig) -> Option<Fit> {
    if delta.pairs.len() < 2 || delta.direction == Direction::Mixed {
        return None;
    }
    let inputs: Vec<&Row> = delta.pairs.iter().map(|(t, _, _)| d.pair(*t).0).collect();
    let posts: Vec<f64> = delta.pairs.iter().map(|p| p.2).collect();
    let fit = if delta.direction == Direction::Assign {
        search(
            &d.attributes,
            &inputs,
            &posts,
            cfg,
            None,
            Some(delta.column),
            cfg.max_expression_size,
        )
    } else {
        let changes: Vec<f64> = delta
            .pairs
            .iter()
            .map(|(_, pre, post)| (post - pre).abs())
            .collect();
        let change_fit = search(
            &d.attributes,
            &inputs,
            &changes,
            cfg,
            None,
            Some(delta.column),
            cfg.max_expression_size,
        )
        .map(|f| Fit {
            direction: delta.direction,
            ..f
        });
        let limit = change_fit.as_ref().map_or(cfg.max_expression_size, |f| {
            f.expression.size().saturating_sub(1)
        });
        let assign_fit = if limit >= 1 {
            search(
                &d.attributes,
                &inputs,
                &posts,
                cfg,
                Some(delta.column),
                None,
                limit,
            )
        } else {
            None
        };
        assign_fit.or(change_fit)
    };
    log::debug!(
        "{}: fit {} -> {}",
        d.action,
        delta.target,
        fit.as_ref().map_or("none".to_string(), |f| format!(
            "{} (error {:.4})",
            f.expression, f.error
        ))
    );
    fit
}

fn eval_on_row(expr: &Expr, d: &Dataset, row: &Row) -> Option<f64> {
    expr.eval(&mut |k: &LiftedKey| {
        let col = d.column(&Attribute::fluent(k.clone()))?;
        row.cells[col].number()
    })
}

/// Truth value of a relation on one row; missing when any operand is.
pub fn relation_cell(d: &Dataset, row: &Row, lhs: &Expr, cmp: Comparator, rhs: &Expr) -> Cell {
    match (eval_on_row(lhs, d, row), eval_on_row(rhs, d, row)) {
        (Some(a), Some(b)) => Cell::Bool(cmp.holds(a, b)),
        _ => Cell::Missing,
    }
}

fn truth_rate(cells: &[Cell], d: &Dataset, class: Class) -> Option<(f64, usize)> {
    let (mut t, mut n) = (0usize, 0usize);
    for (cell, row) in cells.iter().zip(&d.rows) {
        if row.class != class {
            continue;
        }
        if let Cell::Bool(b) = cell {
            n += 1;
            t += usize::from(*b);
        }
    }
    (n > 0).then(|| (t as f64 / n as f64, n))
}

/// Comparison features that hold on (almost) every pre-state but not on
/// every post-state. Candidates compare a numeric attribute with a fitted
/// change expression or another numeric attribute. Candidates whose truth
/// set strictly contains that of a kept candidate are dropped as implied.
pub fn derive_relational_features(
    d: &Dataset,
    fitted: &[(FluentDelta, Expr)],
    tolerance: f64,
) -> Vec<Attribute> {
    let numeric: Vec<Expr> = d
        .attributes
        .iter()
        .filter_map(|a| a.fluent_key().map(|k| Expr::var(k.clone())))
        .collect();
    let mut candidates: Vec<(Expr, Comparator, Expr, bool)> = Vec::new();
    for lhs in &numeric {
        for (delta, expr) in fitted {
            if delta.direction == Direction::Assign || matches!(expr, Expr::Num(_)) {
                continue;
            }
            if lhs.canonical() == expr.canonical() {
                continue;
            }
            for cmp in [Comparator::Ge, Comparator::Le, Comparator::Eq] {
                candidates.push((lhs.clone(), cmp, expr.clone(), true));
            }
        }
    }
    for (i, lhs) in numeric.iter().enumerate() {
        for rhs in &numeric[i + 1..] {
            for cmp in [Comparator::Ge, Comparator::Le, Comparator::Eq] {
                candidates.push((lhs.clone(), cmp, rhs.clone(), false));
            }
        }
    }

    let mut accepted: Vec<(Attribute, Vec<Cell>, bool)> = Vec::new();
    for (lhs, cmp, rhs, fitted_rhs) in candidates {
        let cells: Vec<Cell> = d
            .rows
            .iter()
            .map(|r| relation_cell(d, r, &lhs, cmp, &rhs))
            .collect();
        let Some((pre_rate, _)) = truth_rate(&cells, d, Class::Pre) else {
            continue;
        };
        if pre_rate < 1.0 - tolerance {
            continue;
        }
        if let Some((post_rate, _)) = truth_rate(&cells, d, Class::Post) {
            if post_rate >= 1.0 - tolerance {
                continue;
            }
        }
        accepted.push((Attribute::Relation { lhs, cmp, rhs }, cells, fitted_rhs));
    }

    // Implication pruning: prefer fitted right-hand sides, then the narrower truth set.
    let truth =
        |cells: &[Cell]| -> Vec<bool> { cells.iter().map(|c| *c == Cell::Bool(true)).collect() };
    let sets: Vec<Vec<bool>> = accepted.iter().map(|(_, c, _)| truth(c)).collect();
    let slack = (tolerance * d.rows.len() as f64).floor() as usize;
    let mut keep = vec![true; accepted.len()];
    for b in 0..accepted.len() {
        for a in 0..accepted.len() {
            if a == b || !keep[a] {
                continue;
            }
            let a_not_b = sets[a]
                .iter()
                .zip(&sets[b])
                .filter(|(x, y)| **x && !**y)
                .count();
            let size_a = sets[a].iter().filter(|x| **x).count();
            let size_b = sets[b].iter().filter(|x| **x).count();
            let narrower = (accepted[a].2 && !accepted[b].2)
                || (accepted[a].2 == accepted[b].2 && size_a < size_b);
            if a_not_b <= slack && narrower {
                keep[b] = false;
                break;
            }
        }
    }
    accepted
        .into_iter()
        .zip(keep)
        .filter_map(|((attr, _, _), k)| k.then_some(attr))
        .collect()
}

/// Appends one logical column per relation, evaluated row by row.
pub fn extend_dataset(d: &Dataset, features: &[Attribute]) -> Dataset {
    let mut out = d.clone();
    for f in features {
        let Attribute::Relation { lhs, cmp, rhs } = f else {
            continue;
        };
        for (row, orig) in out.rows.iter_mut().zip(&d.rows) {
            row.cells.push(relation_cell(d, orig, lhs, *cmp, rhs));
        }
        out.attributes.push(f.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transitions::Row;

    fn key(name: &str, p: &[usize]) -> LiftedKey {
        LiftedKey::new(name, p.to_vec())
    }

    /// Pairs of (pre, post) rows over fluent columns.
    fn numeric_dataset(names: &[LiftedKey], pairs: &[(Vec<f64>, Vec<f64>)]) -> Dataset {
        let mut rows = Vec::new();
        for (t, (pre, post)) in pairs.iter().enumerate() {
            rows.push(Row {
                cells: pre.iter().map(|v| Cell::Num(*v)).collect(),
                class: Class::Pre,
                transition: t,
            });
            rows.push(Row {
                cells: post.iter().map(|v| Cell::Num(*v)).collect(),
                class: Class::Post,
                transition: t,
            });
        }
        Dataset {
            action: "goto".into(),
            arity: 3,
            attributes: names.iter().cloned().map(Attribute::fluent).collect(),
            rows,
        }
    }

    fn listing_goto() -> Dataset {
        // (bat_usage ?0), (dist ?1 ?2), (energy ?0)
        numeric_dataset(
            &[
                key("bat_usage", &[0]),
                key("dist", &[1, 2]),
                key("energy", &[0]),
            ],
            &[
                (vec![3.0, 50.0, 450.0], vec![3.0, 50.0, 300.0]),
                (vec![3.0, 80.0, 300.0], vec![3.0, 80.0, 60.0]),
            ],
        )
    }

    #[test]
    fn energy_is_the_only_variant_fluent() {
        let d = listing_goto();
        let v = detect_variant_fluents(&d, &RegressionConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].target, key("energy", &[0]));
        assert_eq!(v[0].direction, Direction::Decrease);
        assert_eq!(v[0].pairs, vec![(0, 450.0, 300.0), (1, 300.0, 60.0)]);
    }

    #[test]
    fn fluent_missing_in_posts_is_not_variant() {
        let mut d = listing_goto();
        for r in d.rows.iter_mut().filter(|r| r.class == Class::Post) {
            r.cells[2] = Cell::Missing;
        }
        assert!(detect_variant_fluents(&d, &RegressionConfig::default()).is_empty());
    }

    #[test]
    fn product_of_distance_and_usage_is_found() {
        let d = listing_goto();
        let v = detect_variant_fluents(&d, &RegressionConfig::default());
        let fit = fit_expression(&d, &v[0], &RegressionConfig::default()).unwrap();
        assert_eq!(fit.error, 0.0);
        let want = Expr::bin(
            Op::Mul,
            Expr::var(key("dist", &[1, 2])),
            Expr::var(key("bat_usage", &[0])),
        );
        assert_eq!(fit.expression.canonical(), want.canonical());
    }

    #[test]
    fn constant_outside_pool_is_composed() {
        let d = numeric_dataset(
            &[key("x", &[0])],
            &[
                (vec![100.0], vec![125.0]),
                (vec![7.0], vec![32.0]),
                (vec![50.0], vec![75.0]),
            ],
        );
        let v = detect_variant_fluents(&d, &RegressionConfig::default());
        assert_eq!(v[0].direction, Direction::Increase);
        let fit = fit_expression(&d, &v[0], &RegressionConfig::default()).unwrap();
        assert_eq!(fit.expression, Expr::num(25.0));
    }

    #[test]
    fn relational_precondition_on_listing() {
        let d = listing_goto();
        let v = detect_variant_fluents(&d, &RegressionConfig::default());
        let fit = fit_expression(&d, &v[0], &RegressionConfig::default()).unwrap();
        let feats = derive_relational_features(&d, &[(v[0].clone(), fit.expression.clone())], 0.05);
        let want = Attribute::Relation {
            lhs: Expr::var(key("energy", &[0])),
            cmp: Comparator::Ge,
            rhs: fit.expression,
        };
        assert!(feats.contains(&want), "{feats:?}");
        let ext = extend_dataset(&d, &feats);
        let col = ext.column(&want).unwrap();
        assert_eq!(ext.rows.len(), d.rows.len());
        // 450 >= 150, 300 >= 150; 300 >= 240, 60 < 240.
        let cells: Vec<Cell> = ext.rows.iter().map(|r| r.cells[col]).collect();
        assert_eq!(
            cells,
            vec![
                Cell::Bool(true),
                Cell::Bool(true),
                Cell::Bool(true),
                Cell::Bool(false)
            ]
        );
    }

    #[test]
    fn relation_with_missing_operand_is_missing() {
        let mut d = listing_goto();
        d.rows[0].cells[2] = Cell::Missing;
        let c = relation_cell(
            &d,
            &d.rows[0],
            &Expr::var(key("energy", &[0])),
            Comparator::Ge,
            &Expr::num(1.0),
        );
        assert_eq!(c, Cell::Missing);
    }
}
