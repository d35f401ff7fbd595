//! Fourier-Motzkin elimination and projection onto a pair of variables.

use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use super::redundancy::{chebyshev_center, normalize_dedup, prune};
use super::{LinearSystem, FEAS_TOL};
use crate::error::{Error, Result};
use crate::par;

/// Coefficients at or below this (on unit-norm rows) count as zero when rows
/// are split into I/J/K.
const ZERO_TOL: f64 = 1e-11;
/// Hard ceiling on rows produced by a single elimination.
const MAX_GENERATED: usize = 2_000_000;
/// Redundancy tolerance used during projection.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElimMethod {
    Fme,
    /// Removed through an equality pair without combining rows.
    Substitution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub variable: String,
    pub method: ElimMethod,
    pub rows_before: usize,
    /// `|I| + |J|·|K|` for FME, `rows_before − 2` for substitution.
    pub rows_generated: usize,
    pub rows_after: usize,
    pub redundancy_removed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub order: Vec<String>,
    pub initial_rows: usize,
    pub final_rows: usize,
    /// Largest row count held between steps (after pruning).
    pub peak_rows: usize,
    /// Largest transient candidate set, before pruning.
    pub peak_generated: usize,
    pub steps: Vec<EliminationStep>,
}

impl EliminationReport {
    /// Drops wall-clock data so the report is reproducible byte for byte.
    pub fn strip_timings(&mut self) {
        for s in &mut self.steps {
            s.wall_time_ms = None;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum OrderHeuristic {
    /// Greedy: next variable minimises `|J|·|K|`, ties by label order.
    #[default]
    MinProduct,
    /// Label order.
    AsListed,
    /// Explicit order; must name every variable to eliminate.
    Given(Vec<String>),
}

/// Eliminates `var`: rows without it are kept, every lower/upper bound pair
/// is combined after scaling the variable's coefficients to ∓1.
pub fn fme_eliminate(sys: &LinearSystem, var: &str) -> Result<LinearSystem> {
    let v = sys.index_of(var)?;
    let (out, _) = eliminate_index(sys, v, 0.0);
    Ok(out)
}

/// Returns the projected system and `|I| + |J|·|K|`.
fn eliminate_index(sys: &LinearSystem, v: usize, zero_tol: f64) -> (LinearSystem, usize) {
    let (mut rows_i, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for (r, row) in sys.a.iter().enumerate() {
        let c = row[v];
        if c.abs() <= zero_tol {
            rows_i.push(r);
        } else if c < 0.0 {
            lower.push(r);
        } else {
            upper.push(r);
        }
    }
    let strip = |row: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(row.len() - 1);
        out.extend_from_slice(&row[..v]);
        out.extend_from_slice(&row[v + 1..]);
        out
    };
    let mut a = Vec::with_capacity(rows_i.len() + lower.len() * upper.len());
    let mut b = Vec::with_capacity(a.capacity());
    for &r in &rows_i {
        a.push(strip(&sys.a[r]));
        b.push(sys.b[r]);
    }
    let combos = par::map_slice(&lower, |&j| {
        let sj = 1.0 / -sys.a[j][v];
        upper
            .iter()
            .map(|&k| {
                let sk = 1.0 / sys.a[k][v];
                let row: Vec<f64> = sys.a[j].iter().zip(&sys.a[k]).map(|(x, y)| x * sj + y * sk).collect();
                (strip(&row), sys.b[j] * sj + sys.b[k] * sk)
            })
            .collect::<Vec<_>>()
    });
    for (row, bound) in combos.into_iter().flatten() {
        a.push(row);
        b.push(bound);
    }
    let mut labels = sys.labels.clone();
    labels.remove(v);
    let generated = b.len();
    (LinearSystem { a, b, labels }, generated)
}

fn split_counts(sys: &LinearSystem, v: usize) -> (usize, usize, usize) {
    let (mut i, mut j, mut k) = (0, 0, 0);
    for row in &sys.a {
        let c = row[v];
        if c.abs() <= ZERO_TOL {
            i += 1;
        } else if c < 0.0 {
            j += 1;
        } else {
            k += 1;
        }
    }
    (i, j, k)
}

/// An opposite row pair `a·x ≤ b`, `−a·x ≤ −b` on unit-norm rows.
fn find_equality(sys: &LinearSystem, eliminable: &[bool]) -> Result<Option<(usize, usize, usize)>> {
    let key = |row: &[f64], sign: f64| -> Vec<i64> { row.iter().map(|v| (sign * v * 1e9).round() as i64).collect() };
    let mut index = std::collections::HashMap::with_capacity(sys.nrows());
    for (r, row) in sys.a.iter().enumerate() {
        index.entry(key(row, 1.0)).or_insert(r);
    }
    for (r, row) in sys.a.iter().enumerate() {
        if let Some(&s) = index.get(&key(row, -1.0)) {
            let gap = sys.b[r] + sys.b[s];
            if gap < -FEAS_TOL {
                return Err(Error::InfeasibleSystem);
            }
            if gap > 1e-10 {
                continue;
            }
            let pivot = (0..sys.nvars())
                .filter(|&v| eliminable[v] && row[v].abs() > 1e-6)
                .max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()).then(y.cmp(&x)));
            if let Some(v) = pivot {
                return Ok(Some((r, s, v)));
            }
        }
    }
    Ok(None)
}

/// Solves equality row `e` for variable `v` and substitutes it everywhere;
/// the pair `(e, twin)` disappears.
fn substitute(sys: &LinearSystem, e: usize, twin: usize, v: usize) -> LinearSystem {
    let eq = &sys.a[e];
    let be = sys.b[e];
    let mut a = Vec::with_capacity(sys.nrows() - 2);
    let mut b = Vec::with_capacity(sys.nrows() - 2);
    for (r, row) in sys.a.iter().enumerate() {
        if r == e || r == twin {
            continue;
        }
        let f = row[v] / eq[v];
        let mut new: Vec<f64> = row.iter().zip(eq).map(|(x, y)| x - f * y).collect();
        new.remove(v);
        a.push(new);
        b.push(sys.b[r] - f * be);
    }
    let mut labels = sys.labels.clone();
    labels.remove(v);
    LinearSystem { a, b, labels }
}

/// Projects `sys` onto the variables in `keep` (output columns in that
/// order). Equality pairs are used for substitution first; every FME step is
/// followed by redundancy removal.
pub fn project_to_plane(
    sys: &LinearSystem,
    keep: &[&str],
    heuristic: &OrderHeuristic,
) -> Result<(LinearSystem, EliminationReport)> {
    for k in keep {
        sys.index_of(k)?;
    }
    let initial_rows = sys.nrows();
    let (mut cur, _) = normalize_dedup(sys)?;
    let mut steps = Vec::new();
    let mut peak = initial_rows;
    let mut peak_generated = 0;
    let is_kept = |label: &String| keep.iter().any(|k| k == label);

    loop {
        let eliminable: Vec<bool> = cur.labels.iter().map(|l| !is_kept(l)).collect();
        let Some((e, twin, v)) = find_equality(&cur, &eliminable)? else { break };
        let t0 = Instant::now();
        let before = cur.nrows();
        let name = cur.labels[v].clone();
        let (next, dropped) = normalize_dedup(&substitute(&cur, e, twin, v))?;
        debug!("substituted {name}: {before} -> {} rows", next.nrows());
        cur = next;
        steps.push(EliminationStep {
            variable: name,
            method: ElimMethod::Substitution,
            rows_before: before,
            rows_generated: before - 2,
            rows_after: cur.nrows(),
            redundancy_removed: dropped,
            wall_time_ms: Some(t0.elapsed().as_secs_f64() * 1e3),
        });
    }

    let mut interior = chebyshev_center(&cur)?.map(|(x, _)| x);
    debug!("interior point found: {}", interior.is_some());
    let (pruned, stats) = prune(&cur, interior.as_deref(), PRUNE_TOL)?;
    debug!("initial pruning: {} -> {} rows ({} LPs)", cur.nrows(), pruned.nrows(), stats.lp_solves);
    cur = pruned;

    let mut given = match heuristic {
        OrderHeuristic::Given(list) => list.clone(),
        _ => Vec::new(),
    };
    given.retain(|l| !steps.iter().any(|s| &s.variable == l));
    loop {
        let candidates: Vec<usize> = (0..cur.nvars()).filter(|&v| !is_kept(&cur.labels[v])).collect();
        if candidates.is_empty() {
            break;
        }
        let v = match heuristic {
            OrderHeuristic::MinProduct => *candidates
                .iter()
                .min_by_key(|&&v| {
                    let (_, j, k) = split_counts(&cur, v);
                    (j * k, v)
                })
                .expect("nonempty"),
            OrderHeuristic::AsListed => candidates[0],
            OrderHeuristic::Given(_) => {
                let Some(name) = given.first().cloned() else {
                    return Err(Error::BadParameter(format!(
                        "elimination order does not cover `{}`",
                        cur.labels[candidates[0]]
                    )));
                };
                given.remove(0);
                cur.index_of(&name)?
            }
        };
        let t0 = Instant::now();
        let before = cur.nrows();
        let name = cur.labels[v].clone();
        let (next, generated) = eliminate_index(&cur, v, ZERO_TOL);
        if generated > MAX_GENERATED {
            return Err(Error::Numerical(format!("eliminating `{name}` would generate {generated} rows")));
        }
        peak_generated = peak_generated.max(generated);
        if let Some(z) = interior.as_mut() {
            z.remove(v);
        }
        let (next, stats) = prune(&next, interior.as_deref(), PRUNE_TOL)?;
        debug!("eliminated {name}: {before} -> {generated} -> {} rows ({} LPs, {} certified)", next.nrows(), stats.lp_solves, stats.cheap_certificates);
        cur = next;
        peak = peak.max(cur.nrows());
        steps.push(EliminationStep {
            variable: name,
            method: ElimMethod::Fme,
            rows_before: before,
            rows_generated: generated,
            rows_after: cur.nrows(),
            redundancy_removed: generated - cur.nrows(),
            wall_time_ms: Some(t0.elapsed().as_secs_f64() * 1e3),
        });
    }

    // Reorder columns to match `keep`.
    let perm: Vec<usize> = keep.iter().map(|k| cur.index_of(k)).collect::<Result<_>>()?;
    let a = cur.a.iter().map(|row| perm.iter().map(|&p| row[p]).collect()).collect();
    let out = LinearSystem { a, b: cur.b, labels: keep.iter().map(|s| s.to_string()).collect() };
    let report = EliminationReport {
        order: steps.iter().map(|s| s.variable.clone()).collect(),
        initial_rows,
        final_rows: out.nrows(),
        peak_rows: peak,
        peak_generated,
        steps,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn box_projection_keeps_tautology() {
        // 0 ≤ y ≤ 1, 0 ≤ x ≤ 1 over (x, y)
        let s = LinearSystem::new(
            vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![1.0, 0.0, 1.0, 0.0],
            labels(&["x", "y"]),
        )
        .unwrap();
        let p = fme_eliminate(&s, "y").unwrap();
        assert_eq!(p.labels, labels(&["x"]));
        assert_eq!(p.a, vec![vec![1.0], vec![-1.0], vec![0.0]]);
        assert_eq!(p.b, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn single_combination() {
        // x + y ≤ 1, −y ≤ 0, −x ≤ 0
        let s = LinearSystem::new(
            vec![vec![1.0, 1.0], vec![0.0, -1.0], vec![-1.0, 0.0]],
            vec![1.0, 0.0, 0.0],
            labels(&["x", "y"]),
        )
        .unwrap();
        let p = fme_eliminate(&s, "y").unwrap();
        assert_eq!(p.a, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(p.b, vec![0.0, 1.0]);
        assert!(matches!(fme_eliminate(&s, "w"), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn absent_variable_only_changes_labels() {
        let s = LinearSystem::new(
            vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, -1.0, 0.0]],
            vec![1.0, 1.0, 2.0, 2.0],
            labels(&["P", "Q", "p1"]),
        )
        .unwrap();
        let p = fme_eliminate(&s, "p1").unwrap();
        assert_eq!(p.labels, labels(&["P", "Q"]));
        assert_eq!(p.nrows(), 4);
        assert_eq!(p.b, s.b);
    }

    #[test]
    fn substitution_handles_equalities() {
        // P = p + q, 0 ≤ p ≤ 1, 0 ≤ q ≤ 2, Q free but bounded: −1 ≤ Q ≤ 1
        let s = LinearSystem::new(
            vec![
                vec![1.0, 0.0, -1.0, -1.0],
                vec![-1.0, 0.0, 1.0, 1.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, -1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.0, -1.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 1.0],
            labels(&["P", "Q", "p", "q"]),
        )
        .unwrap();
        let (p, report) = project_to_plane(&s, &["P", "Q"], &OrderHeuristic::MinProduct).unwrap();
        assert_eq!(report.steps[0].method, ElimMethod::Substitution);
        assert_eq!(report.order.len(), 2);
        // P ∈ [0, 3], Q ∈ [−1, 1]
        assert_eq!(p.nrows(), 4);
        assert!(p.is_satisfied(&[3.0, 1.0], 1e-9) && p.is_satisfied(&[0.0, -1.0], 1e-9));
        assert!(!p.is_satisfied(&[3.01, 0.0], 1e-9) && !p.is_satisfied(&[-0.01, 0.0], 1e-9));
    }

    #[test]
    fn given_order_must_cover() {
        let s = LinearSystem::new(
            vec![vec![1.0, 1.0, 1.0], vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]],
            vec![1.0, 0.0, 0.0, 0.0],
            labels(&["x", "y", "z"]),
        )
        .unwrap();
        let err = project_to_plane(&s, &["x"], &OrderHeuristic::Given(vec!["y".into()])).unwrap_err();
        assert!(matches!(err, Error::BadParameter(_)));
        let (p, r) = project_to_plane(&s, &["x"], &OrderHeuristic::Given(vec!["z".into(), "y".into()])).unwrap();
        assert_eq!(r.order, labels(&["z", "y"]));
        assert_eq!(p.nrows(), 2);
    }
}
