//! Redundant-row removal.
//!
//! Rows are scaled to unit norm and deduplicated first. If the system has an
//! interior point the remaining rows are classified with Clarkson's method:
//! row `i` is tested by an LP over the rows already known to be irredundant
//! (`S`) plus row `i` relaxed by one; an optimum within `tol` of `b_i`
//! certifies redundancy, otherwise a ray from the interior point towards the
//! optimizer exposes a new irredundant row. Undecided rows are processed in
//! fixed-size batches against a frozen `S`, so the result is independent of the
//! thread count. Without an interior point every row gets an LP against all the
//! others.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use serde::{Deserialize, Serialize};

use super::{dot, norm, LinearSystem, COEF_TOL, FEAS_TOL};
use crate::error::{Error, Result};
use crate::lp::{self, Capped, Dictionary, LpOutcome};
use crate::par;

/// Rows per Clarkson batch. Part of the determinism contract: changing it may
/// change which of several weakly redundant rows survives.
const BATCH: usize = 32;
/// Smallest Chebyshev radius accepted as an interior point.
const INTERIOR_TOL: f64 = 1e-9;
/// Coefficient grid used to recognise duplicate rows.
const DEDUP_GRID: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyStats {
    pub duplicates: usize,
    pub removed: usize,
    pub lp_solves: usize,
    /// Rows shown redundant by a cached dual certificate without an LP.
    pub cheap_certificates: usize,
}

/// Removes every row whose bound is implied (within `tol`) by the others.
pub fn remove_redundant(sys: &LinearSystem, tol: f64) -> Result<LinearSystem> {
    prune(sys, None, tol).map(|(s, _)| s)
}

/// Centre and radius of the largest ball inside the system, radius capped at
/// one. `Ok(None)` when the system is feasible but has no interior.
pub fn chebyshev_center(sys: &LinearSystem) -> Result<Option<(Vec<f64>, f64)>> {
    let n = sys.nvars();
    let (a, b) = sys.scaled();
    let m = sys.nrows();
    let mut ext = Vec::with_capacity((m + 1) * (n + 1));
    let mut rhs = Vec::with_capacity(m + 1);
    for i in 0..m {
        let row = &a[i * n..(i + 1) * n];
        if norm(row) <= COEF_TOL {
            if b[i] < -FEAS_TOL {
                return Err(Error::InfeasibleSystem);
            }
            continue;
        }
        ext.extend_from_slice(row);
        ext.push(1.0);
        rhs.push(b[i]);
    }
    ext.extend(std::iter::repeat_n(0.0, n));
    ext.push(1.0);
    rhs.push(1.0);
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    match lp::maximize(&ext, &rhs, n + 1, &c) {
        LpOutcome::Optimal { mut x, value } => {
            if value < -FEAS_TOL {
                return Err(Error::InfeasibleSystem);
            }
            x.truncate(n);
            if value <= INTERIOR_TOL {
                Ok(None)
            } else {
                Ok(Some((x, value)))
            }
        }
        LpOutcome::Infeasible => Err(Error::InfeasibleSystem),
        LpOutcome::Unbounded => Err(Error::Numerical("Chebyshev LP reported unbounded".into())),
        LpOutcome::Stalled => Err(Error::Numerical("Chebyshev LP stalled".into())),
    }
}

/// Unit-norm rows, tautologies dropped, duplicates merged to the tightest
/// bound. Keeps first-occurrence order.
pub(crate) fn normalize_dedup(sys: &LinearSystem) -> Result<(LinearSystem, usize)> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::with_capacity(sys.nrows());
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(sys.nrows());
    let mut b: Vec<f64> = Vec::with_capacity(sys.nrows());
    let mut dropped = 0;
    for (row, &bi) in sys.a.iter().zip(&sys.b) {
        let nr = norm(row);
        if nr <= COEF_TOL {
            if bi < -FEAS_TOL {
                return Err(Error::InfeasibleSystem);
            }
            dropped += 1;
            continue;
        }
        let r: Vec<f64> = row.iter().map(|v| v / nr).collect();
        let bn = bi / nr;
        let key: Vec<i64> = r.iter().map(|v| (v / DEDUP_GRID).round() as i64).collect();
        match index.get(&key) {
            Some(&k) => {
                b[k] = b[k].min(bn);
                dropped += 1;
            }
            None => {
                index.insert(key, a.len());
                a.push(r);
                b.push(bn);
            }
        }
    }
    Ok((LinearSystem { a, b, labels: sys.labels.clone() }, dropped))
}

/// Full pruning pass. `interior` may carry a point strictly inside the system
/// (e.g. carried over from a previous projection step); it is verified and
/// replaced by a Chebyshev centre when unusable.
pub(crate) fn prune(
    sys: &LinearSystem,
    interior: Option<&[f64]>,
    tol: f64,
) -> Result<(LinearSystem, RedundancyStats)> {
    let (sys, duplicates) = normalize_dedup(sys)?;
    let mut stats = RedundancyStats { duplicates, ..Default::default() };
    if sys.nrows() <= 1 {
        return Ok((sys, stats));
    }
    let z = match interior.filter(|z| min_slack(&sys, z) > INTERIOR_TOL) {
        Some(z) => Some(z.to_vec()),
        None => chebyshev_center(&sys)?.map(|(x, _)| x),
    };
    let keep = match z {
        Some(z) => clarkson(&sys, &z, tol, &mut stats),
        None => one_by_one(&sys, tol, &mut stats)?,
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, k) in keep.iter().enumerate() {
        if *k {
            a.push(sys.a[i].clone());
            b.push(sys.b[i]);
        }
    }
    stats.removed = sys.nrows() - a.len();
    Ok((LinearSystem { a, b, labels: sys.labels }, stats))
}

fn min_slack(sys: &LinearSystem, z: &[f64]) -> f64 {
    if z.len() != sys.nvars() {
        return f64::NEG_INFINITY;
    }
    sys.a.iter().zip(&sys.b).map(|(r, bi)| bi - dot(r, z)).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Undecided,
    Kept,
    Removed,
}

enum Verdict {
    /// Carries the rows of the optimal basis (positions in S), when complete.
    Redundant(Vec<usize>),
    /// Row exposed by the ray shot towards the LP optimizer.
    Hit(usize),
    Unknown,
}

fn clarkson(sys: &LinearSystem, z: &[f64], tol: f64, stats: &mut RedundancyStats) -> Vec<bool> {
    let m = sys.nrows();
    let n = sys.nvars();
    let slack: Vec<f64> = sys.a.iter().zip(&sys.b).map(|(r, bi)| bi - dot(r, z)).collect();
    let mut state = vec![State::Undecided; m];
    let mut kept: Vec<usize> = Vec::new();
    // Rows left undecided by a batch are retried first; the cursor only moves forward.
    let mut carry: Vec<usize> = Vec::new();
    let mut certs = Certificates::default();
    let mut cursor = 0;
    loop {
        let mut batch: Vec<usize> = carry.drain(..).filter(|&i| state[i] == State::Undecided).collect();
        while batch.len() < BATCH && cursor < m {
            let i = cursor;
            if state[i] == State::Undecided {
                if certs.certifies(sys, &slack, &sys.a[i], slack[i] + tol) {
                    state[i] = State::Removed;
                    stats.cheap_certificates += 1;
                } else {
                    batch.push(i);
                }
            }
            cursor += 1;
        }
        if batch.is_empty() {
            break;
        }
        // LP rows in coordinates centred on z: a·y ≤ slack.
        let mut base_a = Vec::with_capacity((kept.len() + 1) * n);
        let mut base_b = Vec::with_capacity(kept.len() + 1);
        for &k in &kept {
            base_a.extend_from_slice(&sys.a[k]);
            base_b.push(slack[k]);
        }
        let dict = Dictionary::new(&base_a, &base_b, n).map(|mut d| {
            // Start every query of the batch from a vertex near the first one.
            d.settle(&sys.a[batch[0]]);
            d
        });
        let cold = |i: usize| {
            let mut a = base_a.clone();
            let mut b = base_b.clone();
            a.extend_from_slice(&sys.a[i]);
            b.push(slack[i] + 1.0);
            match lp::maximize(&a, &b, n, &sys.a[i]) {
                LpOutcome::Optimal { value, .. } if value <= slack[i] + tol => Verdict::Redundant(Vec::new()),
                LpOutcome::Optimal { x, .. } => shoot(sys, &slack, &state, &x).map_or(Verdict::Unknown, Verdict::Hit),
                _ => Verdict::Unknown,
            }
        };
        // Points of S are not crossed by the ray, so only undecided rows can be
        // hit; row i itself always is.
        let verdicts = par::map_slice(&batch, |&i| {
            let cap = slack[i] + tol;
            let Some(d) = &dict else { return cold(i) };
            match d.maximize_capped(&sys.a[i], cap) {
                // The warm tableau has been through many pivots: trust its verdict
                // only when the multipliers certify the bound on the original rows.
                Capped::Below { basis, lambda, .. } if !basis.is_empty() => {
                    let rows: Vec<usize> = basis.iter().map(|&r| kept[r]).collect();
                    match dual_bound(sys, &slack, &rows, &lambda, &sys.a[i]) {
                        Some(bound) if bound <= cap => Verdict::Redundant(rows),
                        _ => cold(i),
                    }
                }
                Capped::Above(y) => shoot(sys, &slack, &state, &y).map_or(Verdict::Unknown, Verdict::Hit),
                _ => cold(i),
            }
        });
        stats.lp_solves += batch.len();
        let mut hits = Vec::new();
        for (&i, v) in batch.iter().zip(&verdicts) {
            match v {
                Verdict::Redundant(basis) => {
                    state[i] = State::Removed;
                    if !basis.is_empty() {
                        certs.insert(sys, basis.clone());
                    }
                }
                Verdict::Hit(h) => hits.push(*h),
                // Could not decide: keeping a row is always safe.
                Verdict::Unknown => hits.push(i),
            }
        }
        hits.sort_unstable();
        hits.dedup();
        for h in hits {
            if state[h] == State::Undecided {
                state[h] = State::Kept;
                kept.push(h);
            }
        }
        carry = batch;
    }
    state.into_iter().map(|s| s == State::Kept).collect()
}

/// Upper bound `Σ λ_r·slack_r` on `a·y` over the rows `rows`, valid when
/// `a = Σ λ_r a_r` with `λ ≥ 0` (weak duality). Checked against the original
/// rows so that drift in the multipliers cannot produce a false certificate.
fn dual_bound(sys: &LinearSystem, slack: &[f64], rows: &[usize], lambda: &[f64], a: &[f64]) -> Option<f64> {
    if lambda.iter().any(|&l| l < -MULTIPLIER_TOL) {
        return None;
    }
    let mut residual = a.to_vec();
    for (&r, &l) in rows.iter().zip(lambda) {
        for (x, v) in residual.iter_mut().zip(&sys.a[r]) {
            *x -= l * v;
        }
    }
    if residual.iter().any(|v| v.abs() > RESIDUAL_TOL) {
        return None;
    }
    let bound: f64 = rows.iter().zip(lambda).map(|(&r, l)| l.max(0.0) * slack[r]).sum();
    // Margin for the residual times the extent of the region.
    Some(bound + 1e-12 * (1.0 + bound.abs()))
}

const MULTIPLIER_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-11;

/// Recently used LP bases. A basis that certified one candidate often
/// certifies its neighbours in the generation order, which then skip the LP.
#[derive(Default)]
struct Certificates {
    /// Most recently useful first: basis rows and the inverse of `A_Bᵀ`.
    bases: Vec<(Vec<usize>, DMatrix<f64>)>,
}

impl Certificates {
    const CAPACITY: usize = 256;

    fn insert(&mut self, sys: &LinearSystem, rows: Vec<usize>) {
        let n = sys.nvars();
        let at = DMatrix::from_fn(n, n, |r, c| sys.a[rows[c]][r]);
        if let Some(inv) = at.try_inverse().filter(|m| m.iter().all(|v| v.is_finite())) {
            self.bases.insert(0, (rows, inv));
            self.bases.truncate(Self::CAPACITY);
        }
    }

    fn certifies(&mut self, sys: &LinearSystem, slack: &[f64], a: &[f64], cap: f64) -> bool {
        let c = DVector::from_column_slice(a);
        let hit = self.bases.iter().position(|(rows, inv)| {
            let lambda = inv * &c;
            dual_bound(sys, slack, rows, lambda.as_slice(), a).is_some_and(|bound| bound <= cap)
        });
        match hit {
            Some(k) => {
                let b = self.bases.remove(k);
                self.bases.insert(0, b);
                true
            }
            None => false,
        }
    }
}

/// First candidate row crossed on the segment from the interior point towards `y`
/// (centred coordinates). Ties go to the lowest index.
fn shoot(sys: &LinearSystem, slack: &[f64], state: &[State], y: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for j in (0..state.len()).filter(|&j| state[j] == State::Undecided) {
        let rate = dot(&sys.a[j], y);
        if rate <= 1e-15 {
            continue;
        }
        let t = slack[j] / rate;
        match best {
            Some((bt, _)) if t >= bt - 1e-14 * bt.abs().max(1.0) => {}
            _ => best = Some((t, j)),
        }
    }
    best.map(|(_, j)| j)
}

/// Quadratic fallback for systems without interior: one LP per row against all
/// rows still present.
fn one_by_one(sys: &LinearSystem, tol: f64, stats: &mut RedundancyStats) -> Result<Vec<bool>> {
    let m = sys.nrows();
    let n = sys.nvars();
    let mut keep = vec![true; m];
    for i in 0..m {
        let mut a = Vec::with_capacity(m * n);
        let mut b = Vec::with_capacity(m);
        for j in (0..m).filter(|&j| j != i && keep[j]) {
            a.extend_from_slice(&sys.a[j]);
            b.push(sys.b[j]);
        }
        if b.is_empty() {
            continue;
        }
        stats.lp_solves += 1;
        match lp::maximize(&a, &b, n, &sys.a[i]) {
            LpOutcome::Optimal { value, .. } if value <= sys.b[i] + tol => keep[i] = false,
            LpOutcome::Infeasible => return Err(Error::InfeasibleSystem),
            _ => {}
        }
    }
    Ok(keep)
}
