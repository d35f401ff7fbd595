//! Dense primal simplex for the small linear programs that show up during
//! redundancy certification and dispatch recovery:
//!
//! ```text
//! maximize c·x  subject to  A x ≤ b,  x free
//! ```
//!
//! The tableau is stored in compact (dictionary) form: one row per inequality
//! and one column per nonbasic variable, so a pivot costs `O(m·n)` rather than
//! `O(m·(n+m))`. Structural variables are free and never leave the basis once
//! they enter; slacks and the phase-one artificial are nonnegative.

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Unbounded,
    Infeasible,
    /// Pivot budget exhausted; callers must treat the question as undecided.
    Stalled,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Free,
    NonNeg,
}

#[derive(Clone)]
struct Tableau {
    m: usize,
    cols: usize,
    /// Row-major `m × cols`: `basic_i + Σ_j tab[i][j]·nonbasic_j = rhs_i`.
    tab: Vec<f64>,
    rhs: Vec<f64>,
    /// Objective rows in the same form: `z + Σ_j obj[j]·nonbasic_j = obj_rhs`.
    obj: [Vec<f64>; 2],
    obj_rhs: [f64; 2],
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    kind: Vec<Kind>,
    /// Nonbasic columns that may not enter (the retired artificial).
    frozen: Vec<bool>,
}

enum Step {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + q];
        let inv = 1.0 / p;
        for j in 0..cols {
            self.tab[r * cols + j] *= inv;
        }
        self.tab[r * cols + q] = inv;
        self.rhs[r] *= inv;
        let prow: Vec<f64> = self.tab[r * cols..(r + 1) * cols].to_vec();
        let prhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            for j in 0..cols {
                row[j] -= f * prow[j];
            }
            row[q] = -f * inv;
            self.rhs[i] -= f * prhs;
        }
        for o in 0..2 {
            let f = self.obj[o][q];
            if f != 0.0 {
                for (x, &pj) in self.obj[o].iter_mut().zip(&prow) {
                    *x -= f * pj;
                }
                self.obj[o][q] = -f * inv;
                self.obj_rhs[o] -= f * prhs;
            }
        }
        std::mem::swap(&mut self.basis[r], &mut self.nonbasic[q]);
    }

    /// Maximizes objective row `o` from the current feasible basis.
    fn optimize(&mut self, o: usize) -> Step {
        match self.optimize_capped(o, f64::INFINITY) {
            Capped::Below { .. } => Step::Optimal,
            Capped::Above(_) => Step::Unbounded,
            Capped::Stalled => Step::Stalled,
        }
    }

    /// As [`Tableau::optimize`], but returns `Above` once the objective exceeds
    /// `cap`. An unbounded edge is reported as `Above([column, step])` with a
    /// step that pushes the objective past a finite cap (empty for an infinite
    /// cap); a pivot that crosses the cap is reported as `Above([])`.
    fn optimize_capped(&mut self, o: usize, cap: f64) -> Capped {
        let max_iter = 50 * (self.m + self.cols) + 100;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            if self.obj_rhs[o] > cap {
                return Capped::Above(Vec::new());
            }
            let bland = degenerate > DEGENERATE_LIMIT;
            // Entering column and direction.
            let mut enter: Option<(usize, f64)> = None;
            let mut best_rate = 0.0;
            for j in 0..self.cols {
                if self.frozen[j] {
                    continue;
                }
                let e = self.obj[o][j];
                let (rate, dir) = match self.kind[self.nonbasic[j]] {
                    Kind::NonNeg => (-e, 1.0),
                    Kind::Free => (e.abs(), if e > 0.0 { -1.0 } else { 1.0 }),
                };
                if rate <= OPT_TOL {
                    continue;
                }
                if bland {
                    let better = match enter {
                        None => true,
                        Some((q, _)) => self.nonbasic[j] < self.nonbasic[q],
                    };
                    if better {
                        enter = Some((j, dir));
                    }
                } else if rate > best_rate {
                    best_rate = rate;
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Capped::Below { value: self.obj_rhs[o], basis: Vec::new(), lambda: Vec::new() };
            };
            // Ratio test over nonnegative basic variables.
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for i in 0..self.m {
                if self.kind[self.basis[i]] == Kind::Free {
                    continue;
                }
                let alpha = self.tab[i * self.cols + q] * dir;
                if alpha <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / alpha;
                let take = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                alpha > best_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    leave = Some(i);
                    best_ratio = ratio;
                    best_alpha = alpha;
                }
            }
            let Some(r) = leave else {
                if cap.is_finite() {
                    let rate = -self.obj[o][q] * dir;
                    let t = (cap - self.obj_rhs[o]).max(0.0) / rate + 1.0;
                    return Capped::Above(vec![q as f64, dir * t]);
                }
                return Capped::Above(Vec::new());
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
        }
        Capped::Stalled
    }

    /// Pivots every nonbasic free variable into the basis along whichever
    /// direction is blocked first, turning the current point into a vertex
    /// when the feasible set has one. The point moves, but stays feasible.
    fn enter_free(&mut self) {
        for q in 0..self.cols {
            if self.frozen[q] || self.kind[self.nonbasic[q]] != Kind::Free {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.m {
                if self.kind[self.basis[i]] == Kind::Free {
                    continue;
                }
                let alpha = self.tab[i * self.cols + q].abs();
                if alpha <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / alpha;
                if best.is_none_or(|(r, _)| ratio < r) {
                    best = Some((ratio, i));
                }
            }
            if let Some((_, r)) = best {
                self.pivot(r, q);
            }
        }
    }

    fn structural_values(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &v) in self.basis.iter().enumerate() {
            if v < n {
                x[v] = self.rhs[i];
            }
        }
        x
    }
}

/// Builds the initial tableau (slacks basic) and drives it to a feasible basis.
/// Returns the tableau, or the minimal uniform violation when infeasible.
fn feasible_tableau(a: &[f64], b: &[f64], n: usize, c: &[f64]) -> Result<Tableau, (f64, Vec<f64>)> {
    let m = b.len();
    debug_assert_eq!(a.len(), m * n);
    let cols = n + 1; // structural + artificial
    let mut tab = vec![0.0; m * cols];
    for i in 0..m {
        tab[i * cols..i * cols + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        tab[i * cols + n] = -1.0;
    }
    let mut kind = vec![Kind::Free; n];
    kind.extend(std::iter::repeat_n(Kind::NonNeg, m + 1));
    let artificial = n + m;
    let mut obj2 = vec![0.0; cols];
    for j in 0..n {
        obj2[j] = -c[j];
    }
    let mut obj1 = vec![0.0; cols];
    obj1[n] = 1.0; // z1 = -t
    let mut t = Tableau {
        m,
        cols,
        tab,
        rhs: b.to_vec(),
        obj: [obj1, obj2],
        obj_rhs: [0.0, 0.0],
        basis: (n..n + m).collect(),
        nonbasic: (0..n).chain(std::iter::once(artificial)).collect(),
        kind,
        frozen: vec![false; cols],
    };

    let worst = (0..m).min_by(|&i, &j| b[i].total_cmp(&b[j]));
    let needs_phase_one = matches!(worst, Some(r) if b[r] < -FEAS_TOL);
    if needs_phase_one {
        let r = worst.unwrap();
        t.pivot(r, n);
        match t.optimize(0) {
            Step::Optimal => {}
            // −t is bounded above by 0, so anything else is numerical trouble.
            _ => return Err((f64::INFINITY, t.structural_values(n))),
        }
        let violation = -t.obj_rhs[0];
        if violation > FEAS_TOL {
            return Err((violation, t.structural_values(n)));
        }
        // Retire the artificial.
        if let Some(row) = t.basis.iter().position(|&v| v == artificial) {
            let q = (0..cols)
                .filter(|&j| t.tab[row * cols + j].abs() > PIVOT_TOL)
                .max_by(|&i, &j| t.tab[row * cols + i].abs().total_cmp(&t.tab[row * cols + j].abs()));
            if let Some(q) = q {
                t.pivot(row, q);
            } else {
                t.rhs[row] = 0.0;
            }
        }
    }
    if let Some(q) = t.nonbasic.iter().position(|&v| v == artificial) {
        t.frozen[q] = true;
    }
    Ok(t)
}

/// Maximizes `c·x` subject to `A x ≤ b` with `A` stored row-major (`b.len()`
/// rows, `n` columns) and every `x_j` free.
pub fn maximize(a: &[f64], b: &[f64], n: usize, c: &[f64]) -> LpOutcome {
    debug_assert_eq!(c.len(), n);
    let mut t = match feasible_tableau(a, b, n, c) {
        Ok(t) => t,
        Err((v, _)) if v.is_finite() => return LpOutcome::Infeasible,
        Err(_) => return LpOutcome::Stalled,
    };
    match t.optimize(1) {
        Step::Optimal => {
            let x = t.structural_values(n);
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            LpOutcome::Optimal { x, value }
        }
        Step::Unbounded => LpOutcome::Unbounded,
        Step::Stalled => LpOutcome::Stalled,
    }
}

/// Result of [`Dictionary::maximize_capped`].
#[derive(Debug, Clone, PartialEq)]
pub enum Capped {
    /// The maximum does not exceed the cap. `basis` lists the `n` rows whose
    /// slacks are nonbasic at the optimum and `lambda` their dual multipliers
    /// (`c = Σ λ_r a_r`); both are empty when some structural variable never
    /// entered.
    Below { value: f64, basis: Vec<usize>, lambda: Vec<f64> },
    /// A feasible point whose objective exceeds the cap.
    Above(Vec<f64>),
    Stalled,
}

/// Simplex dictionary for `A y ≤ b` with `b ≥ 0`, kept at a fixed basis so
/// that many objectives can be tried from the same starting vertex.
#[derive(Clone)]
pub struct Dictionary {
    t: Tableau,
    n: usize,
}

impl Dictionary {
    /// `None` when the origin is infeasible.
    pub fn new(a: &[f64], b: &[f64], n: usize) -> Option<Dictionary> {
        if b.iter().any(|&v| v < 0.0) {
            return None;
        }
        let t = feasible_tableau(a, b, n, &vec![0.0; n]).ok()?;
        Some(Dictionary { t, n })
    }

    fn load_objective(t: &mut Tableau, n: usize, c: &[f64]) {
        let cols = t.cols;
        let mut obj = vec![0.0; cols];
        let mut rhs = 0.0;
        for (j, &v) in t.nonbasic.iter().enumerate() {
            if v < n {
                obj[j] = -c[v];
            }
        }
        for (i, &v) in t.basis.iter().enumerate() {
            if v < n && c[v] != 0.0 {
                rhs += c[v] * t.rhs[i];
                for (x, &tj) in obj.iter_mut().zip(&t.tab[i * cols..(i + 1) * cols]) {
                    *x += c[v] * tj;
                }
            }
        }
        t.obj[1] = obj;
        t.obj_rhs[1] = rhs;
    }

    /// Moves the stored basis to an optimum of `c`; the basis is left where the
    /// search stopped if `c` is unbounded.
    pub fn settle(&mut self, c: &[f64]) {
        Self::load_objective(&mut self.t, self.n, c);
        self.t.optimize_capped(1, f64::INFINITY);
        self.t.enter_free();
    }

    /// Maximizes `c·y` starting from the stored basis, which is not modified.
    /// Stops as soon as a feasible point with `c·y > cap` is reached.
    pub fn maximize_capped(&self, c: &[f64], cap: f64) -> Capped {
        let mut t = self.t.clone();
        Self::load_objective(&mut t, self.n, c);
        match t.optimize_capped(1, cap) {
            Capped::Below { value, .. } => {
                let (n, m) = (self.n, t.m);
                let (basis, lambda): (Vec<usize>, Vec<f64>) = t
                    .nonbasic
                    .iter()
                    .zip(&t.obj[1])
                    .filter(|(&v, _)| v >= n && v < n + m)
                    .map(|(&v, &l)| (v - n, l))
                    .unzip();
                if basis.len() == n {
                    Capped::Below { value, basis, lambda }
                } else {
                    Capped::Below { value, basis: Vec::new(), lambda: Vec::new() }
                }
            }
            Capped::Above(ray) => {
                let mut x = t.structural_values(self.n);
                // `ray` holds (column, signed step) of an improving edge when the
                // stop happened on an unbounded ray; otherwise it is empty.
                if let [q, step] = ray[..] {
                    let q = q as usize;
                    for (i, &v) in t.basis.iter().enumerate() {
                        if v < self.n {
                            x[v] -= t.tab[i * t.cols + q] * step;
                        }
                    }
                    if t.nonbasic[q] < self.n {
                        x[t.nonbasic[q]] += step;
                    }
                }
                Capped::Above(x)
            }
            Capped::Stalled => Capped::Stalled,
        }
    }
}

/// Finds a point of `A x ≤ b` if one exists. On infeasibility returns the point
/// minimizing the largest violation together with that violation.
pub fn feasible_point(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>, (Vec<f64>, f64)> {
    let c = vec![0.0; n];
    match feasible_tableau(a, b, n, &c) {
        Ok(t) => Ok(t.structural_values(n)),
        Err((v, x)) => Err((x, v)),
    }
}
