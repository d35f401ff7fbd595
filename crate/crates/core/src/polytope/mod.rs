//! Labeled inequality systems, Fourier-Motzkin projection with redundancy
//! control, and convex-polygon geometry on the PQ-plane.

mod fme;
mod polygon;
mod redundancy;

pub use fme::{fme_eliminate, project_to_plane, ElimMethod, EliminationReport, EliminationStep, OrderHeuristic};
pub use polygon::{
    approx_error, area, convex_hull, directed_hausdorff, fill_factor, hausdorff, intersect, minkowski_sum,
    polygon_from_system, Polygon2D, DEDUP_TOL,
};
pub use redundancy::{chebyshev_center, remove_redundant, RedundancyStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient magnitude below which a variable is treated as absent.
pub const COEF_TOL: f64 = 1e-12;
/// Feasibility slack for rows with unit-norm coefficients.
pub const FEAS_TOL: f64 = 1e-9;

/// `a · x ≤ b` over named variables. Rows are dense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub labels: Vec<String>,
}

impl LinearSystem {
    /// Rejects ragged or non-finite input and rows `0 ≤ b` with `b < 0`.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!("{} coefficient rows but {} bounds", a.len(), b.len())));
        }
        let n = labels.len();
        for (i, (row, &bi)) in a.iter().zip(&b).enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!("row {i} has {} coefficients, expected {n}", row.len())));
            }
            if !bi.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("row {i} has non-finite entries")));
            }
            if row.iter().all(|v| v.abs() <= COEF_TOL) && bi < -FEAS_TOL {
                return Err(Error::InfeasibleSystem);
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::BadParameter(format!("duplicate variable label `{dup}`")));
        }
        Ok(LinearSystem { a, b, labels })
    }

    pub fn nrows(&self) -> usize {
        self.b.len()
    }

    pub fn nvars(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Largest `a_i·x − b_i` over all rows (−∞ for an empty system).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(&self.b).map(|(row, bi)| dot(row, x) - bi).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Fixes variable `var` to `value`, moving its column into the bounds.
    pub fn fix(&self, var: &str, value: f64) -> Result<LinearSystem> {
        let v = self.index_of(var)?;
        let mut a = Vec::with_capacity(self.nrows());
        let mut b = Vec::with_capacity(self.nrows());
        for (row, bi) in self.a.iter().zip(&self.b) {
            b.push(bi - row[v] * value);
            let mut r = row.clone();
            r.remove(v);
            a.push(r);
        }
        let mut labels = self.labels.clone();
        labels.remove(v);
        Ok(LinearSystem { a, b, labels })
    }

    /// Any point satisfying the system, if one exists.
    pub fn feasible_point(&self) -> Option<Vec<f64>> {
        if self.nrows() == 0 {
            return Some(vec![0.0; self.nvars()]);
        }
        let (a, b) = self.scaled();
        match crate::lp::feasible_point(&a, &b, self.nvars()) {
            Ok(x) => Some(x),
            Err((x, viol)) if viol <= FEAS_TOL => Some(x),
            Err(_) => None,
        }
    }

    /// Row-major copy with every row scaled to unit coefficient norm.
    pub(crate) fn scaled(&self) -> (Vec<f64>, Vec<f64>) {
        let mut a = Vec::with_capacity(self.nrows() * self.nvars());
        let mut b = Vec::with_capacity(self.nrows());
        for (row, bi) in self.a.iter().zip(&self.b) {
            let norm = norm(row);
            let s = if norm > COEF_TOL { 1.0 / norm } else { 1.0 };
            a.extend(row.iter().map(|v| v * s));
            b.push(bi * s);
        }
        (a, b)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        let labels = vec!["x".to_string()];
        assert!(matches!(
            LinearSystem::new(vec![vec![0.0]], vec![-1.0], labels.clone()),
            Err(Error::InfeasibleSystem)
        ));
        assert!(LinearSystem::new(vec![vec![0.0]], vec![1.0], labels.clone()).is_ok());
        assert!(matches!(
            LinearSystem::new(vec![vec![1.0, 2.0]], vec![1.0], labels),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fixing_a_variable() {
        let s = LinearSystem::new(vec![vec![1.0, 2.0]], vec![5.0], vec!["x".into(), "y".into()]).unwrap();
        let f = s.fix("y", 1.0).unwrap();
        assert_eq!(f.labels, vec!["x".to_string()]);
        assert_eq!(f.b, vec![3.0]);
        assert!(matches!(s.fix("z", 0.0), Err(Error::UnknownVariable(_))));
    }
}
