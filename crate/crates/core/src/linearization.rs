//! Superposition sensitivities around an operating point and assembly of the
//! inequality system over `x = (ΔP, ΔQ, Δp₁..Δp_c, Δq₁..Δq_c)`.
//!
//! DER columns are ordered `[Δp_0 .. Δp_{c-1}, Δq_0 .. Δq_{c-1}]` in every map;
//! the assembled system prefixes them with `ΔP, ΔQ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DerKind, DerUnit, OperatingPoint, RadialNetwork, SweepMatrices, VoltageLimits};
use crate::polytope::LinearSystem;

/// Slack used when checking that a base point satisfies its own rows.
pub const BASE_TOL: f64 = 1e-9;

/// Linear maps from DER output deviations to network deviations.
#[derive(Debug, Clone)]
pub struct SensitivityModel {
    /// n × 2c, deviations ↦ ΔI (branch currents)
    pub di_map: DMatrix<Complex64>,
    /// n × 2c, deviations ↦ ΔV
    pub dv_map: DMatrix<Complex64>,
    /// 2c, deviations ↦ ΔI₀ (current drawn from the root)
    pub di0_map: DVector<Complex64>,
    /// 2 × 2c, deviations ↦ (ΔP, ΔQ)
    pub dpq_map: DMatrix<f64>,
    pub base: OperatingPoint,
}

/// Deviations predicted by a [`SensitivityModel`].
#[derive(Debug, Clone)]
pub struct Prediction {
    pub di: DVector<Complex64>,
    pub dv: DVector<Complex64>,
    pub dp: f64,
    pub dq: f64,
}

impl SensitivityModel {
    pub fn n_units(&self) -> usize {
        self.dpq_map.ncols() / 2
    }

    pub fn predict(&self, dp: &[f64], dq: &[f64]) -> Result<Prediction> {
        let c = self.n_units();
        if dp.len() != c || dq.len() != c {
            return Err(Error::DimensionMismatch(format!("expected {c} active and reactive deviations")));
        }
        let x = DVector::from_iterator(2 * c, dp.iter().chain(dq).copied());
        let xc = x.map(|v| Complex64::new(v, 0.0));
        let pq = &self.dpq_map * &x;
        Ok(Prediction { di: &self.di_map * &xc, dv: &self.dv_map * &xc, dp: pq[0], dq: pq[1] })
    }
}

/// `pici · C_g`: injection-current sensitivity of each bus to each DER column.
fn injection_map(m: &SweepMatrices, units: &[DerUnit]) -> Result<DMatrix<Complex64>> {
    let n = m.bibc.nrows();
    let c = units.len();
    let mut out = DMatrix::<Complex64>::zeros(n, 2 * c);
    for (j, u) in units.iter().enumerate() {
        if u.node == 0 || u.node > n {
            return Err(Error::DimensionMismatch(format!("DER `{}` on bus {} has no injection slot", u.id, u.node)));
        }
        let k = u.node - 1;
        out[(k, j)] = m.pici[(k, k)];
        out[(k, c + j)] = m.pici[(k, n + k)];
    }
    Ok(out)
}

pub fn build_sensitivity(m: &SweepMatrices, base: &OperatingPoint, units: &[DerUnit]) -> Result<SensitivityModel> {
    let n = m.bibc.nrows();
    if base.v.len() != n || base.i.len() != n {
        return Err(Error::DimensionMismatch(format!("operating point does not match {n}-bus matrices")));
    }
    let inj = injection_map(m, units)?;
    let bibc = m.bibc.map(|x| Complex64::new(x, 0.0));
    let di_map = &bibc * &inj;
    let dv_map = &m.dlf * &inj;
    // Everything injected anywhere leaves through the root.
    let di0_map = DVector::from_iterator(inj.ncols(), inj.column_iter().map(|col| col.sum()));
    let vs = m.slack_voltage;
    let mut dpq_map = DMatrix::<f64>::zeros(2, inj.ncols());
    for (c, d) in di0_map.iter().enumerate() {
        let s = vs * d.conj();
        dpq_map[(0, c)] = s.re;
        dpq_map[(1, c)] = s.im;
    }
    Ok(SensitivityModel { di_map, dv_map, di0_map, dpq_map, base: base.clone() })
}

/// `normal · x ≤ offset`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.normal[0] * x[0] + self.normal[1] * x[1] - self.offset
    }

    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        self.eval(x) <= tol
    }
}

/// Angular range covered by an inscribed polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arc {
    /// Full circle with one vertex at angle `phase`.
    Full { phase: f64 },
    /// Chords between `from` and `to` (radians, `from < to`).
    Sector { from: f64, to: f64 },
}

/// Chord half-planes of the polygon inscribed in a disc (or sector) of
/// `radius` centred at the origin.
pub fn inscribe_disc(radius: f64, segments: usize, arc: Arc) -> Result<Vec<HalfPlane>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::BadParameter(format!("disc radius must be positive, got {radius}")));
    }
    let (start, step) = match arc {
        Arc::Full { phase } => {
            if segments < 3 {
                return Err(Error::BadSegmentCount(segments));
            }
            (phase, 2.0 * PI / segments as f64)
        }
        Arc::Sector { from, to } => {
            if segments < 1 || !(to >= from) {
                return Err(Error::BadSegmentCount(segments));
            }
            if to - from < 1e-12 {
                return Ok(vec![chord(radius, from, 0.0)]);
            }
            (from, (to - from) / segments as f64)
        }
    };
    Ok((0..segments).map(|i| chord(radius, start + (i as f64 + 0.5) * step, 0.5 * step)).collect())
}

fn chord(radius: f64, mid: f64, half_width: f64) -> HalfPlane {
    HalfPlane { normal: [mid.cos(), mid.sin()], offset: radius * half_width.cos() }
}

/// Polar angle of `(p, q)`, zero at the origin.
fn phase_of(p: f64, q: f64) -> f64 {
    if p == 0.0 && q == 0.0 {
        0.0
    } else {
        q.atan2(p)
    }
}

/// Capability rows of one unit in absolute coordinates `(p, q)`.
pub fn capability_rows_absolute(unit: &DerUnit, k: usize) -> Result<Vec<HalfPlane>> {
    let mut rows = Vec::new();
    let box_rows = |rows: &mut Vec<HalfPlane>| {
        rows.push(HalfPlane { normal: [1.0, 0.0], offset: unit.p_upper });
        rows.push(HalfPlane { normal: [-1.0, 0.0], offset: -unit.p_lower });
    };
    match unit.kind {
        DerKind::Pv => {
            box_rows(&mut rows);
            let phi = unit.pf_min.clamp(0.0, 1.0).acos();
            rows.extend(inscribe_disc(unit.s_max, k, Arc::Sector { from: -phi, to: phi })?);
            // |q| ≤ p·tan φ written without dividing by cos φ
            rows.push(HalfPlane { normal: [-phi.sin(), phi.cos()], offset: 0.0 });
            rows.push(HalfPlane { normal: [-phi.sin(), -phi.cos()], offset: 0.0 });
        }
        DerKind::Bess => {
            box_rows(&mut rows);
            let phase = phase_of(unit.p_init, unit.q_init);
            rows.extend(inscribe_disc(unit.s_max, k, Arc::Full { phase })?);
        }
        DerKind::Dg => {
            rows.push(HalfPlane { normal: [-1.0, 0.0], offset: -unit.p_lower });
            if unit.p_upper < unit.s_max {
                rows.push(HalfPlane { normal: [1.0, 0.0], offset: unit.p_upper });
            }
            let phase = phase_of(unit.p_init, unit.q_init);
            rows.extend(inscribe_disc(unit.s_max, k, Arc::Full { phase })?);
        }
    }
    Ok(rows)
}

/// Capability rows in deviation coordinates `(Δp, Δq)` around the unit's
/// initial setpoint.
pub fn capability_halfplanes(unit: &DerUnit, k: usize) -> Result<Vec<HalfPlane>> {
    let abs = capability_rows_absolute(unit, k)?;
    let x0 = [unit.p_init, unit.q_init];
    let mut out = Vec::with_capacity(abs.len());
    for h in abs {
        let slack = h.offset - (h.normal[0] * x0[0] + h.normal[1] * x0[1]);
        if slack < -BASE_TOL {
            return Err(Error::InfeasibleBase {
                unit: unit.id.clone(),
                detail: format!(
                    "setpoint ({:.6}, {:.6}) violates row [{:.4}, {:.4}]·x ≤ {:.6} by {:.3e}",
                    x0[0], x0[1], h.normal[0], h.normal[1], h.offset, -slack
                ),
            });
        }
        out.push(HalfPlane { normal: h.normal, offset: slack.max(0.0) });
    }
    Ok(out)
}

/// One row of the assembled system: `coef · x_der ≤ rhs` over the `2c` DER
/// columns (ΔP/ΔQ columns are added at assembly).
#[derive(Debug, Clone, PartialEq)]
pub struct DerRow {
    pub coef: Vec<f64>,
    pub rhs: f64,
}

/// Inscribed-polygon rows for `‖i_init + ΔI_branch‖ ≤ i_max`, one vertex on
/// the ray through `i_init`.
pub fn current_constraint_rows(
    s: &SensitivityModel,
    branch: usize,
    i_init: Complex64,
    i_max: f64,
    k: usize,
) -> Result<Vec<DerRow>> {
    if branch >= s.di_map.nrows() {
        return Err(Error::DimensionMismatch(format!("branch {branch} out of range")));
    }
    if i_init.norm() > i_max * (1.0 + BASE_TOL) {
        return Err(Error::BaseViolation(format!(
            "branch {branch}: base current {:.6} exceeds limit {:.6}",
            i_init.norm(),
            i_max
        )));
    }
    let phase = phase_of(i_init.re, i_init.im);
    let sens = s.di_map.row(branch);
    let rows = inscribe_disc(i_max, k, Arc::Full { phase })?
        .into_iter()
        .map(|h| {
            let coef = sens.iter().map(|d| h.normal[0] * d.re + h.normal[1] * d.im).collect();
            let rhs = h.offset - (h.normal[0] * i_init.re + h.normal[1] * i_init.im);
            DerRow { coef, rhs: rhs.max(0.0) }
        })
        .collect();
    Ok(rows)
}

/// `v_min ≤ Re(v_init + ΔV_bus) ≤ v_max` as two rows; `bus` indexes the
/// bus vectors (root excluded).
pub fn voltage_constraint_rows(
    s: &SensitivityModel,
    bus: usize,
    v_init: Complex64,
    v_min: f64,
    v_max: f64,
) -> Result<[DerRow; 2]> {
    if bus >= s.dv_map.nrows() {
        return Err(Error::DimensionMismatch(format!("bus {bus} out of range")));
    }
    if v_init.re < v_min - BASE_TOL || v_init.re > v_max + BASE_TOL {
        return Err(Error::BaseViolation(format!(
            "bus {}: base voltage {:.6} outside [{v_min}, {v_max}]",
            bus + 1,
            v_init.re
        )));
    }
    let re: Vec<f64> = s.dv_map.row(bus).iter().map(|d| d.re).collect();
    let neg = re.iter().map(|v| -v).collect();
    Ok([
        DerRow { coef: re, rhs: (v_max - v_init.re).max(0.0) },
        DerRow { coef: neg, rhs: (v_init.re - v_min).max(0.0) },
    ])
}

pub fn variable_labels(units: &[DerUnit]) -> Vec<String> {
    let mut labels = vec!["dP".to_string(), "dQ".to_string()];
    labels.extend(units.iter().map(|u| format!("dp_{}", u.id)));
    labels.extend(units.iter().map(|u| format!("dq_{}", u.id)));
    labels
}

/// Number of rows per constraint class in an assembled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub coupling: usize,
    pub capability: usize,
    pub current: usize,
    pub voltage: usize,
}

/// Full system over `(ΔP, ΔQ, Δp.., Δq..)`: coupling equalities as paired
/// rows, then capability, current and voltage rows.
pub fn assemble_system(
    net: &RadialNetwork,
    s: &SensitivityModel,
    units: &[DerUnit],
    limits: &VoltageLimits,
    k_cap: usize,
    k_cur: usize,
) -> Result<(LinearSystem, RowCounts)> {
    let c = units.len();
    let n = net.n();
    if s.n_units() != c {
        return Err(Error::DimensionMismatch(format!("sensitivity model has {} units, got {c}", s.n_units())));
    }
    let nx = 2 + 2 * c;
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let push_der = |a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>, row: &DerRow| {
        let mut full = vec![0.0; nx];
        full[2..].copy_from_slice(&row.coef);
        a.push(full);
        b.push(row.rhs);
    };

    for axis in 0..2 {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nx];
            row[axis] = sign;
            for j in 0..2 * c {
                row[2 + j] = -sign * s.dpq_map[(axis, j)];
            }
            a.push(row);
            b.push(0.0);
        }
    }
    let mut counts = RowCounts { coupling: 4, capability: 0, current: 0, voltage: 0 };

    for (j, u) in units.iter().enumerate() {
        for h in capability_halfplanes(u, k_cap)? {
            let mut row = vec![0.0; nx];
            row[2 + j] = h.normal[0];
            row[2 + c + j] = h.normal[1];
            a.push(row);
            b.push(h.offset);
            counts.capability += 1;
        }
    }
    for br in 0..n {
        for row in current_constraint_rows(s, br, s.base.i[br], net.branches[br].i_max, k_cur)? {
            push_der(&mut a, &mut b, &row);
            counts.current += 1;
        }
    }
    for bus in 0..n {
        for row in voltage_constraint_rows(s, bus, s.base.v[bus], limits.v_min[bus], limits.v_max[bus])? {
            push_der(&mut a, &mut b, &row);
            counts.voltage += 1;
        }
    }
    Ok((LinearSystem::new(a, b, variable_labels(units))?, counts))
}
