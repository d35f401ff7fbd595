//! Flexibility-region pipelines (FME, GSK, Minkowski, Monte Carlo) and the
//! metrics table that compares them.
//!
//! Every pipeline returns its polygon in absolute PCC coordinates: the
//! deviation region shifted by the PCC flow at the initial dispatch.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linearization::{assemble_system, build_sensitivity, capability_halfplanes, RowCounts, SensitivityModel};
use crate::network::{
    build_sweep_matrices, check_operating_limits, dispatch_of, solve_dispatch, Case, DerKind, DerUnit,
    OperatingPoint,
};
use crate::par;
use crate::polytope::{
    approx_error, convex_hull, fill_factor, minkowski_sum, polygon_from_system, project_to_plane, EliminationReport,
    LinearSystem, OrderHeuristic, Polygon2D,
};
use crate::uncertainty::{apply_margins, MarginSet};

/// Capability segments used when none are configured.
pub const DEFAULT_K_CAP: usize = 12;
/// Current-limit segments used when none are configured.
pub const DEFAULT_K_CUR: usize = 8;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
/// Rejection-sampling attempts per unit before its set is declared empty.
const MAX_REJECTIONS: usize = 10_000;
/// Tolerance on GSK fractions summing to one.
const GSK_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fme,
    Gsk,
    Minkowski,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fme, Method::Gsk, Method::Minkowski, Method::MonteCarlo];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fme => "fme",
            Method::Gsk => "gsk",
            Method::Minkowski => "minkowski",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fme" => Ok(Method::Fme),
            "gsk" => Ok(Method::Gsk),
            "minkowski" => Ok(Method::Minkowski),
            "monte_carlo" | "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::BadParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Output of one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForResult {
    pub method: Method,
    /// Absolute PCC coordinates [p.u.].
    pub polygon: Polygon2D,
    /// PCC flow at the initial dispatch.
    pub origin: [f64; 2],
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EliminationReport>,
    /// Feasible Monte Carlo PCC points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

/// Order in which DER columns are eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EliminationOrder {
    /// Units on the deepest buses first, `Δq` before `Δp` of each unit.
    #[default]
    Topological,
    /// Greedy smallest `|J|·|K|`.
    MinProduct,
    /// Column order of the assembled system.
    AsListed,
}

impl FromStr for EliminationOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topological" => Ok(EliminationOrder::Topological),
            "min-product" => Ok(EliminationOrder::MinProduct),
            "as-listed" => Ok(EliminationOrder::AsListed),
            other => Err(Error::BadParameter(format!("unknown elimination order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FmeOptions {
    pub k_cap: usize,
    pub k_cur: usize,
    pub order: EliminationOrder,
}

impl Default for FmeOptions {
    fn default() -> Self {
        FmeOptions { k_cap: DEFAULT_K_CAP, k_cur: DEFAULT_K_CUR, order: EliminationOrder::default() }
    }
}

/// Column labels to eliminate, deepest bus first. Ties go to the later bus id
/// and then the later unit, so co-located units leave in reverse listing order.
pub fn topological_order(case: &Case, units: &[DerUnit]) -> Vec<String> {
    let depth = |bus: usize| case.network.path_to(bus).len();
    let mut idx: Vec<usize> = (0..units.len()).collect();
    idx.sort_by_key(|&i| std::cmp::Reverse((depth(units[i].node), units[i].node, i)));
    idx.iter().flat_map(|&i| [format!("dq_{}", units[i].id), format!("dp_{}", units[i].id)]).collect()
}

/// The linearized problem shared by the FME and GSK pipelines.
#[derive(Debug, Clone)]
pub struct Linearized {
    /// Units after margins were applied.
    pub units: Vec<DerUnit>,
    pub base: OperatingPoint,
    pub model: SensitivityModel,
    pub system: LinearSystem,
    pub counts: RowCounts,
}

impl Linearized {
    pub fn origin(&self) -> [f64; 2] {
        [self.base.pcc_p, self.base.pcc_q]
    }
}

/// DER units with margins applied, as every pipeline sees them.
pub fn effective_units(case: &Case, margins: Option<&MarginSet>) -> Result<Vec<DerUnit>> {
    match margins {
        Some(m) => apply_margins(&case.ders, m),
        None => Ok(case.ders.clone()),
    }
}

/// Power flow at the initial dispatch, sensitivities at its solution, and the
/// assembled inequality system.
pub fn linearize(case: &Case, k_cap: usize, k_cur: usize, margins: Option<&MarginSet>) -> Result<Linearized> {
    let units = effective_units(case, margins)?;
    let net = &case.network;
    let (p, q) = dispatch_of(&units);
    let base = solve_dispatch(net, &units, &p, &q)?;
    let m = build_sweep_matrices(net, &base.v_vector())?;
    let model = build_sensitivity(&m, &base, &units)?;
    let (system, counts) = assemble_system(net, &model, &units, &case.limits, k_cap, k_cur)?;
    Ok(Linearized { units, base, model, system, counts })
}

fn elapsed_ms(t: Instant) -> f64 {
    // Never report zero, even on coarse clocks.
    (t.elapsed().as_secs_f64() * 1e3).max(1e-6)
}

pub fn fme_for(case: &Case, opts: &FmeOptions, margins: Option<&MarginSet>) -> Result<ForResult> {
    let t = Instant::now();
    let lin = linearize(case, opts.k_cap, opts.k_cur, margins)?;
    let heuristic = match opts.order {
        EliminationOrder::Topological => OrderHeuristic::Given(topological_order(case, &lin.units)),
        EliminationOrder::MinProduct => OrderHeuristic::MinProduct,
        EliminationOrder::AsListed => OrderHeuristic::AsListed,
    };
    let (plane, report) = project_to_plane(&lin.system, &["dP", "dQ"], &heuristic)?;
    let polygon = polygon_from_system(&plane)?.translate(lin.origin());
    Ok(ForResult {
        method: Method::Fme,
        polygon,
        origin: lin.origin(),
        wall_time_ms: elapsed_ms(t),
        report: Some(report),
        samples: None,
    })
}

/// Generation shift keys: unit `j` takes `g_p[j]` of the total active and
/// `g_q[j]` of the total reactive deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GskScheme {
    pub g_p: Vec<f64>,
    pub g_q: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct GskRecord {
    unit_id: String,
    g_p: f64,
    g_q: f64,
}

impl GskScheme {
    pub fn new(g_p: Vec<f64>, g_q: Vec<f64>) -> Result<Self> {
        if g_p.len() != g_q.len() {
            return Err(Error::DimensionMismatch(format!("{} active but {} reactive keys", g_p.len(), g_q.len())));
        }
        for (name, g) in [("g_p", &g_p), ("g_q", &g_q)] {
            if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::BadParameter(format!("{name} entries must be finite and nonnegative")));
            }
            let sum: f64 = g.iter().sum();
            if !g.is_empty() && (sum - 1.0).abs() > GSK_SUM_TOL {
                return Err(Error::BadParameter(format!("{name} sums to {sum}, expected 1")));
            }
        }
        Ok(GskScheme { g_p, g_q })
    }

    /// Active keys proportional to the active-power range, reactive keys to
    /// the reactive headroom at the initial setpoint (for PV also capped by
    /// the power-factor limit at full output).
    pub fn capacity(units: &[DerUnit]) -> Result<Self> {
        let p_range: Vec<f64> = units.iter().map(|u| (u.p_upper - u.p_lower).max(0.0)).collect();
        let q_room: Vec<f64> = units
            .iter()
            .map(|u| {
                let room = (u.s_max * u.s_max - u.p_init * u.p_init).max(0.0).sqrt();
                if u.kind == DerKind::Pv {
                    let phi = u.pf_min.clamp(0.0, 1.0).acos();
                    room.min(u.p_upper.max(0.0) * phi.tan())
                } else {
                    room
                }
            })
            .collect();
        let normalize = |v: Vec<f64>, what: &str| -> Result<Vec<f64>> {
            let sum: f64 = v.iter().sum();
            if units.is_empty() {
                return Ok(v);
            }
            if sum <= 0.0 {
                return Err(Error::BadParameter(format!("no {what} capacity to distribute")));
            }
            Ok(v.into_iter().map(|x| x / sum).collect())
        };
        GskScheme::new(normalize(p_range, "active")?, normalize(q_room, "reactive")?)
    }

    /// Reads `unit_id,g_p,g_q` rows; every unit needs exactly one row.
    pub fn from_csv<R: std::io::Read>(reader: R, units: &[DerUnit]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = std::collections::HashMap::new();
        for rec in rdr.deserialize::<GskRecord>() {
            let rec = rec.map_err(|e| Error::Parse(format!("GSK file: {e}")))?;
            if rows.insert(rec.unit_id.clone(), (rec.g_p, rec.g_q)).is_some() {
                return Err(Error::Parse(format!("GSK file lists `{}` twice", rec.unit_id)));
            }
        }
        let mut g_p = Vec::with_capacity(units.len());
        let mut g_q = Vec::with_capacity(units.len());
        for u in units {
            let &(p, q) = rows.get(&u.id).ok_or_else(|| Error::Parse(format!("GSK file has no row for `{}`", u.id)))?;
            g_p.push(p);
            g_q.push(q);
        }
        if rows.len() != units.len() {
            return Err(Error::Parse("GSK file lists unknown units".into()));
        }
        GskScheme::new(g_p, g_q)
    }
}

/// Restricts the deviations to `Δp = g_p·t_P`, `Δq = g_q·t_Q`; the system in
/// `(t_P, t_Q)` is already two-dimensional and its polygon is mapped to the
/// PCC through the coupling rows.
pub fn gsk_for(
    case: &Case,
    scheme: &GskScheme,
    k_cap: usize,
    k_cur: usize,
    margins: Option<&MarginSet>,
) -> Result<ForResult> {
    let t = Instant::now();
    let lin = linearize(case, k_cap, k_cur, margins)?;
    let c = lin.units.len();
    if scheme.g_p.len() != c {
        return Err(Error::DimensionMismatch(format!("GSK scheme has {} keys for {c} units", scheme.g_p.len())));
    }
    let reduce = |coef: &[f64]| -> [f64; 2] {
        let tp = (0..c).map(|j| coef[j] * scheme.g_p[j]).sum();
        let tq = (0..c).map(|j| coef[c + j] * scheme.g_q[j]).sum();
        [tp, tq]
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (row, &bi) in lin.system.a.iter().zip(&lin.system.b).skip(lin.counts.coupling) {
        a.push(reduce(&row[2..]).to_vec());
        b.push(bi);
    }
    let sys = LinearSystem::new(a, b, vec!["tP".into(), "tQ".into()])?;
    let dpq = &lin.model.dpq_map;
    let row = |axis: usize| -> [f64; 2] {
        let coef: Vec<f64> = (0..2 * c).map(|j| dpq[(axis, j)]).collect();
        reduce(&coef)
    };
    let map = [row(0), row(1)];
    let polygon = polygon_from_system(&sys)?.map_linear(map).translate(lin.origin());
    Ok(ForResult {
        method: Method::Gsk,
        polygon,
        origin: lin.origin(),
        wall_time_ms: elapsed_ms(t),
        report: None,
        samples: None,
    })
}

/// Capability polygon of one unit in deviation coordinates.
pub fn capability_polygon(unit: &DerUnit, k_cap: usize) -> Result<Polygon2D> {
    let rows = capability_halfplanes(unit, k_cap)?;
    let sys = LinearSystem::new(
        rows.iter().map(|h| h.normal.to_vec()).collect(),
        rows.iter().map(|h| h.offset).collect(),
        vec!["dp".into(), "dq".into()],
    )?;
    polygon_from_system(&sys)
}

/// Network-agnostic aggregate: the Minkowski sum of the linearized capability
/// polygons.
pub fn minkowski_for(case: &Case, k_cap: usize, margins: Option<&MarginSet>) -> Result<ForResult> {
    let t = Instant::now();
    let units = effective_units(case, margins)?;
    let (p, q) = dispatch_of(&units);
    let base = solve_dispatch(&case.network, &units, &p, &q)?;
    let origin = [base.pcc_p, base.pcc_q];
    let polys = units.iter().map(|u| capability_polygon(u, k_cap)).collect::<Result<Vec<_>>>()?;
    let sum = if polys.is_empty() { Polygon2D::point([0.0, 0.0]) } else { minkowski_sum(&polys)? };
    Ok(ForResult {
        method: Method::Minkowski,
        polygon: sum.translate(origin),
        origin,
        wall_time_ms: elapsed_ms(t),
        report: None,
        samples: None,
    })
}

/// Uniform draw from the exact (circular) capability set by rejection from
/// its bounding box.
fn sample_unit(u: &DerUnit, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let s = u.s_max;
    let p_lo = u.p_lower.max(-s);
    let p_hi = u.p_upper.min(s);
    if p_lo > p_hi {
        return Err(Error::Unit(format!("`{}` has an empty capability set", u.id)));
    }
    let (sin, cos) = u.pf_min.clamp(0.0, 1.0).acos().sin_cos();
    let q_hi = if u.kind == DerKind::Pv && cos > 0.0 { s.min(p_hi.max(0.0) * sin / cos) } else { s };
    for _ in 0..MAX_REJECTIONS {
        let p = if p_hi > p_lo { rng.random_range(p_lo..=p_hi) } else { p_lo };
        let q = if q_hi > 0.0 { rng.random_range(-q_hi..=q_hi) } else { 0.0 };
        let in_disc = p * p + q * q <= s * s;
        let in_cone = u.kind != DerKind::Pv || q.abs() * cos <= p * sin;
        if in_disc && in_cone {
            return Ok((p, q));
        }
    }
    Err(Error::Unit(format!("`{}`: rejection sampling found no feasible setpoint", u.id)))
}

/// Random dispatches drawn from the exact capability sets, run through the
/// nonlinear power flow, and kept when no voltage or current limit is
/// violated. Sample `i` uses random stream `i` of `seed`, so the outcome does
/// not depend on scheduling.
pub fn monte_carlo_for(case: &Case, n_samples: usize, seed: u64, margins: Option<&MarginSet>) -> Result<ForResult> {
    let t = Instant::now();
    let units = effective_units(case, margins)?;
    let net = &case.network;
    let (p0, q0) = dispatch_of(&units);
    let base = solve_dispatch(net, &units, &p0, &q0)?;
    let origin = [base.pcc_p, base.pcc_q];
    let outcomes = par::map_range(n_samples, |i| -> Result<Option<[f64; 2]>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut p = Vec::with_capacity(units.len());
        let mut q = Vec::with_capacity(units.len());
        for u in &units {
            let (pu, qu) = sample_unit(u, &mut rng)?;
            p.push(pu);
            q.push(qu);
        }
        // A dispatch the sweep cannot solve is treated as infeasible.
        let Ok(op) = solve_dispatch(net, &units, &p, &q) else { return Ok(None) };
        let report = check_operating_limits(net, &op, &case.limits.v_min, &case.limits.v_max, true);
        Ok(report.is_empty().then_some([op.pcc_p, op.pcc_q]))
    });
    let mut kept = Vec::new();
    for o in outcomes {
        if let Some(pt) = o? {
            kept.push(pt);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoFeasibleSamples(n_samples));
    }
    let polygon = convex_hull(&kept)?;
    Ok(ForResult {
        method: Method::MonteCarlo,
        polygon,
        origin,
        wall_time_ms: elapsed_ms(t),
        report: None,
        samples: Some(kept),
    })
}

/// A DER dispatch (absolute setpoints) whose linearized image is the PCC
/// deviation `delta`, found by the feasibility LP on the full system.
pub fn recover_dispatch(lin: &Linearized, delta: [f64; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let fixed = lin.system.fix("dP", delta[0])?.fix("dQ", delta[1])?;
    let x = fixed.feasible_point().ok_or(Error::InfeasibleSystem)?;
    let c = lin.units.len();
    let p = lin.units.iter().enumerate().map(|(j, u)| u.p_init + x[j]).collect();
    let q = lin.units.iter().enumerate().map(|(j, u)| u.q_init + x[c + j]).collect();
    Ok((p, q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub area_pu2: f64,
    pub fill_factor: f64,
    pub error: f64,
    /// `None` when timings are not recorded.
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub reference: Method,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn strip_timings(&mut self) {
        for r in &mut self.rows {
            r.wall_time_ms = None;
        }
    }

    pub fn row(&self, method: Method) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "reference: {}", self.reference);
        let _ = writeln!(out, "{:<12} {:>12} {:>12} {:>10} {:>14}", "method", "area [pu^2]", "fill factor", "error", "wall time [ms]");
        for r in &self.rows {
            let time = r.wall_time_ms.map_or_else(|| "-".to_string(), |t| format!("{t:.1}"));
            let _ = writeln!(
                out,
                "{:<12} {:>12.6} {:>12.4} {:>10.4} {:>14}",
                r.method.as_str(),
                r.area_pu2,
                r.fill_factor,
                r.error,
                time
            );
        }
        out
    }
}

/// Fill factor and error of every result against `reference`.
pub fn compare(results: &[ForResult], reference: &ForResult) -> Result<MetricsTable> {
    let rows = results
        .iter()
        .map(|r| {
            Ok(MetricsRow {
                method: r.method,
                area_pu2: r.polygon.area(),
                fill_factor: fill_factor(&r.polygon, &reference.polygon)?,
                error: approx_error(&r.polygon, &reference.polygon)?,
                wall_time_ms: Some(r.wall_time_ms),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsTable { reference: reference.method, rows })
}
