//! Radial network model, sweep matrices and the backward/forward sweep power
//! flow.
//!
//! Conventions used throughout the crate:
//!
//! * Bus 0 is the PCC/slack; buses `1..=n` are indexed `0..n` in every vector.
//! * Branch `b` is the branch feeding bus `b + 1`, so branch and bus vectors
//!   share one index space.
//! * Power and current injections are positive *into* the network. A branch
//!   current is the sum of the injections downstream of it (positive towards
//!   the root), and the forward sweep adds the resulting voltage rise:
//!   `V = V_s + DLF · I_inj`.
//! * The PCC flow is the power delivered by the distribution network to the
//!   upstream grid, `S_pcc = V_s · conj(Σ I_inj) − S_load(bus 0)`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PF_TOLERANCE: f64 = 1e-8;
pub const PF_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub load_p: f64,
    pub load_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub impedance: Complex64,
    pub i_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerKind {
    #[serde(alias = "PV")]
    Pv,
    #[serde(alias = "BESS")]
    Bess,
    #[serde(alias = "DG")]
    Dg,
}

impl DerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DerKind::Pv => "pv",
            DerKind::Bess => "bess",
            DerKind::Dg => "dg",
        }
    }
}

/// A controllable unit. All powers in p.u.; `s_max` is the apparent-power
/// radius (not squared).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerUnit {
    pub id: String,
    pub node: usize,
    pub kind: DerKind,
    pub s_max: f64,
    pub p_upper: f64,
    pub p_lower: f64,
    pub pf_min: f64,
    pub p_init: f64,
    pub q_init: f64,
}

impl DerUnit {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parse(format!("DER `{}`: {msg}", self.id)));
        let vals = [self.s_max, self.p_upper, self.p_lower, self.pf_min, self.p_init, self.q_init];
        if vals.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value".into());
        }
        if self.s_max <= 0.0 {
            return bad(format!("s_max must be positive, got {}", self.s_max));
        }
        if self.p_lower > self.p_upper {
            return bad(format!("p_lower {} exceeds p_upper {}", self.p_lower, self.p_upper));
        }
        if self.kind == DerKind::Pv && self.p_lower < 0.0 {
            return bad("PV p_lower must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.pf_min) {
            return bad(format!("pf_min {} outside [0, 1]", self.pf_min));
        }
        Ok(())
    }
}

/// Immutable radial network in per-unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialNetwork {
    /// Buses `0..=n`, indexed by id.
    pub buses: Vec<Bus>,
    /// Branches sorted so that `branches[b].to == b + 1`.
    pub branches: Vec<Branch>,
    pub slack_voltage: Complex64,
    /// kVA
    pub s_base: f64,
    /// kV (line-to-line)
    pub v_base: f64,
}

impl RadialNetwork {
    /// Validates the tree structure and returns the network with branches
    /// reordered by downstream bus.
    pub fn new(
        mut buses: Vec<Bus>,
        branches: Vec<Branch>,
        slack_voltage: Complex64,
        s_base: f64,
        v_base: f64,
    ) -> Result<Self> {
        if !(s_base > 0.0 && s_base.is_finite()) || !(v_base > 0.0 && v_base.is_finite()) {
            return Err(Error::Unit(format!("bases must be positive (s_base={s_base}, v_base={v_base})")));
        }
        if !slack_voltage.norm().is_finite() || slack_voltage.norm() == 0.0 {
            return Err(Error::Unit("slack voltage must be finite and nonzero".into()));
        }
        buses.sort_by_key(|b| b.id);
        for (k, bus) in buses.iter().enumerate() {
            if bus.id != k {
                return Err(Error::Topology(format!(
                    "bus ids must be unique and contiguous from 0; found {} at position {k}",
                    bus.id
                )));
            }
            if !bus.load_p.is_finite() || !bus.load_q.is_finite() {
                return Err(Error::Parse(format!("bus {}: non-finite load", bus.id)));
            }
        }
        if buses.is_empty() {
            return Err(Error::Topology("network has no buses".into()));
        }
        let n = buses.len() - 1;
        if branches.len() != n {
            return Err(Error::Topology(format!(
                "{} buses beyond the root need exactly {n} branches, found {}",
                n,
                branches.len()
            )));
        }
        let mut slot: Vec<Option<Branch>> = vec![None; n];
        for br in &branches {
            if br.from > n || br.to > n {
                return Err(Error::Topology(format!("branch {}->{} references an unknown bus", br.from, br.to)));
            }
            if br.from == br.to {
                return Err(Error::Topology(format!("branch {}->{} is a self loop", br.from, br.to)));
            }
            if br.to == 0 {
                return Err(Error::Topology(format!("branch {}->0 feeds the root", br.from)));
            }
            if !(br.impedance.re >= 0.0) || !(br.impedance.norm() > 0.0) || !br.impedance.norm().is_finite() {
                return Err(Error::Parse(format!(
                    "branch {}->{}: impedance needs r >= 0 and |z| > 0",
                    br.from, br.to
                )));
            }
            if !(br.i_max > 0.0) || !br.i_max.is_finite() {
                return Err(Error::Parse(format!("branch {}->{}: i_max must be positive", br.from, br.to)));
            }
            let s = &mut slot[br.to - 1];
            if s.is_some() {
                return Err(Error::Topology(format!("bus {} is fed by more than one branch", br.to)));
            }
            *s = Some(*br);
        }
        let branches: Vec<Branch> = slot.into_iter().map(|b| b.expect("counted above")).collect();

        // Every bus must hang off the root.
        let mut children = vec![Vec::new(); n + 1];
        for br in &branches {
            children[br.from].push(br.to);
        }
        let mut seen = vec![false; n + 1];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!("bus {k} is not connected to the root (cycle or island)")));
        }
        Ok(RadialNetwork { buses, branches, slack_voltage, s_base, v_base })
    }

    /// Number of buses beyond the root (= number of branches).
    pub fn n(&self) -> usize {
        self.branches.len()
    }

    pub fn parent(&self, bus: usize) -> usize {
        self.branches[bus - 1].from
    }

    /// Branch indices on the path root → `bus`, from `bus` upwards.
    pub fn path_to(&self, bus: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut k = bus;
        while k != 0 {
            out.push(k - 1);
            k = self.parent(k);
        }
        out
    }

    /// Impedance base in ohm.
    pub fn z_base(&self) -> f64 {
        self.v_base * self.v_base * 1000.0 / self.s_base
    }

    /// Current base in ampere (three-phase, line-to-line voltage base).
    pub fn i_base(&self) -> f64 {
        self.s_base / (3f64.sqrt() * self.v_base)
    }

    pub fn flat_start(&self) -> DVector<Complex64> {
        DVector::from_element(self.n(), self.slack_voltage)
    }
}

/// Per-bus voltage magnitude limits (indexed like the bus vectors, root excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageLimits {
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
}

impl VoltageLimits {
    pub fn uniform(n: usize, v_min: f64, v_max: f64) -> Self {
        VoltageLimits { v_min: vec![v_min; n], v_max: vec![v_max; n] }
    }
}

/// A network together with its DER fleet and voltage limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub network: RadialNetwork,
    pub ders: Vec<DerUnit>,
    pub limits: VoltageLimits,
}

impl Case {
    pub fn new(network: RadialNetwork, ders: Vec<DerUnit>, limits: VoltageLimits) -> Result<Self> {
        let n = network.n();
        if limits.v_min.len() != n || limits.v_max.len() != n {
            return Err(Error::DimensionMismatch(format!("voltage limits need {n} entries")));
        }
        let mut ids = std::collections::HashSet::new();
        for d in &ders {
            d.validate()?;
            if d.node > n {
                return Err(Error::Topology(format!("DER `{}` sits on unknown bus {}", d.id, d.node)));
            }
            if !ids.insert(d.id.clone()) {
                return Err(Error::Parse(format!("duplicate DER id `{}`", d.id)));
            }
        }
        Ok(Case { network, ders, limits })
    }

    /// Initial DER dispatch as (p, q) vectors.
    pub fn initial_dispatch(&self) -> (Vec<f64>, Vec<f64>) {
        dispatch_of(&self.ders)
    }
}

pub fn dispatch_of(units: &[DerUnit]) -> (Vec<f64>, Vec<f64>) {
    (units.iter().map(|d| d.p_init).collect(), units.iter().map(|d| d.q_init).collect())
}

/// BIBC / BCBV / DLF / PICI operators for a given linearization voltage.
#[derive(Debug, Clone)]
pub struct SweepMatrices {
    /// branch × bus path incidence
    pub bibc: DMatrix<f64>,
    /// bus × branch: impedance of branch b if it lies on the path to bus k
    pub bcbv: DMatrix<Complex64>,
    /// bus × bus, `bcbv · bibc`
    pub dlf: DMatrix<Complex64>,
    /// bus × 2·bus, `[diag(v̄*)⁻¹, diag(j·v̄*)⁻¹]`
    pub pici: DMatrix<Complex64>,
    pub v_bar: DVector<Complex64>,
    pub slack_voltage: Complex64,
}

pub fn build_sweep_matrices(net: &RadialNetwork, v_bar: &DVector<Complex64>) -> Result<SweepMatrices> {
    let n = net.n();
    if v_bar.len() != n {
        return Err(Error::DimensionMismatch(format!("v_bar has {} entries, network has {n} buses", v_bar.len())));
    }
    if let Some(k) = v_bar.iter().position(|v| v.norm() == 0.0) {
        return Err(Error::SingularVoltage { bus: k + 1 });
    }
    let mut bibc = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        for b in net.path_to(k) {
            bibc[(b, k - 1)] = 1.0;
        }
    }
    let z = DVector::from_iterator(n, net.branches.iter().map(|b| b.impedance));
    let bibc_c = bibc.map(|x| Complex64::new(x, 0.0));
    let bcbv = DMatrix::from_fn(n, n, |k, b| bibc_c[(b, k)] * z[b]);
    let dlf = &bcbv * &bibc_c;
    let j = Complex64::new(0.0, 1.0);
    let mut pici = DMatrix::<Complex64>::zeros(n, 2 * n);
    for k in 0..n {
        let vc = v_bar[k].conj();
        pici[(k, k)] = Complex64::new(1.0, 0.0) / vc;
        pici[(k, n + k)] = Complex64::new(1.0, 0.0) / (j * vc);
    }
    Ok(SweepMatrices { bibc, bcbv, dlf, pici, v_bar: v_bar.clone(), slack_voltage: net.slack_voltage })
}

/// Nodal injections (p.u.) from DER outputs minus loads.
pub fn injections_from_der(net: &RadialNetwork, units: &[DerUnit], p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.len() != units.len() || q.len() != units.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} units but {} active and {} reactive setpoints",
            units.len(),
            p.len(),
            q.len()
        )));
    }
    let n = net.n();
    let mut pi: Vec<f64> = net.buses[1..].iter().map(|b| -b.load_p).collect();
    let mut qi: Vec<f64> = net.buses[1..].iter().map(|b| -b.load_q).collect();
    for (u, (&pu, &qu)) in units.iter().zip(p.iter().zip(q)) {
        if u.node == 0 || u.node > n {
            return Err(Error::DimensionMismatch(format!("DER `{}` on bus {} has no injection slot", u.id, u.node)));
        }
        pi[u.node - 1] += pu;
        qi[u.node - 1] += qu;
    }
    Ok((pi, qi))
}

/// One linear sweep at the matrices' linearization voltage.
pub fn bfs_iteration(m: &SweepMatrices, p_inj: &[f64], q_inj: &[f64]) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
    let n = m.bibc.nrows();
    if p_inj.len() != n || q_inj.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} injections")));
    }
    let pq = DVector::from_iterator(2 * n, p_inj.iter().chain(q_inj).map(|&x| Complex64::new(x, 0.0)));
    let i_inj = &m.pici * pq;
    let bibc_c = m.bibc.map(|x| Complex64::new(x, 0.0));
    let i = bibc_c * &i_inj;
    let v = DVector::from_element(n, m.slack_voltage) + &m.dlf * &i_inj;
    Ok((i, v))
}

/// Converged power-flow state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v: Vec<Complex64>,
    /// Branch currents, positive towards the root.
    pub i: Vec<Complex64>,
    pub der_p: Vec<f64>,
    pub der_q: Vec<f64>,
    pub pcc_p: f64,
    pub pcc_q: f64,
    pub iterations: usize,
}

impl OperatingPoint {
    pub fn v_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.v)
    }
}

/// One nonlinear sweep on the tree: injection currents at `v`, backward
/// accumulation, forward voltage update from the root. From a flat start this
/// is exactly [`bfs_iteration`].
pub fn sweep_step(net: &RadialNetwork, s_inj: &[Complex64], v: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let order = topological_order(net);
    let i_inj: Vec<Complex64> = s_inj.iter().zip(v).map(|(s, v)| (s / v).conj()).collect();
    let mut branch_i = vec![Complex64::new(0.0, 0.0); net.n()];
    backward_sweep(net, &order, &i_inj, &mut branch_i);
    let v_new = forward_sweep(net, &order, &branch_i);
    (branch_i, v_new)
}

/// Fixed-point backward/forward sweep from a flat start. Only `v`, `i` and the
/// PCC flow are filled in; DER setpoints are left empty (see
/// [`solve_dispatch`]).
pub fn solve_power_flow(net: &RadialNetwork, p_inj: &[f64], q_inj: &[f64]) -> Result<OperatingPoint> {
    let n = net.n();
    if p_inj.len() != n || q_inj.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} injections")));
    }
    let vs = net.slack_voltage;
    let s: Vec<Complex64> = p_inj.iter().zip(q_inj).map(|(&p, &q)| Complex64::new(p, q)).collect();
    let order = topological_order(net);
    let mut v = vec![vs; n];
    let mut i_inj = vec![Complex64::new(0.0, 0.0); n];
    let mut branch_i = vec![Complex64::new(0.0, 0.0); n];
    let mut last = f64::INFINITY;
    for it in 1..=PF_MAX_ITER {
        for k in 0..n {
            i_inj[k] = (s[k] / v[k]).conj();
        }
        backward_sweep(net, &order, &i_inj, &mut branch_i);
        let v_new = forward_sweep(net, &order, &branch_i);
        let delta = v_new.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        v = v_new;
        if !delta.is_finite() || v.iter().any(|x| !(x.norm() > 1e-6) || !x.norm().is_finite()) {
            return Err(Error::NonConvergence { iterations: it, last_update: delta });
        }
        last = delta;
        if delta < PF_TOLERANCE {
            for k in 0..n {
                i_inj[k] = (s[k] / v[k]).conj();
            }
            backward_sweep(net, &order, &i_inj, &mut branch_i);
            let total: Complex64 = i_inj.iter().sum();
            let root = &net.buses[0];
            let s_pcc = vs * total.conj() - Complex64::new(root.load_p, root.load_q);
            return Ok(OperatingPoint {
                v,
                i: branch_i,
                der_p: Vec::new(),
                der_q: Vec::new(),
                pcc_p: s_pcc.re,
                pcc_q: s_pcc.im,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence { iterations: PF_MAX_ITER, last_update: last })
}

/// Power flow for a DER dispatch; the returned point records the setpoints.
pub fn solve_dispatch(net: &RadialNetwork, units: &[DerUnit], p: &[f64], q: &[f64]) -> Result<OperatingPoint> {
    let (pi, qi) = injections_from_der(net, units, p, q)?;
    let mut op = solve_power_flow(net, &pi, &qi)?;
    op.der_p = p.to_vec();
    op.der_q = q.to_vec();
    Ok(op)
}

/// Buses in breadth-first order from the root (root excluded).
fn topological_order(net: &RadialNetwork) -> Vec<usize> {
    let n = net.n();
    let mut children = vec![Vec::new(); n + 1];
    for br in &net.branches {
        children[br.from].push(br.to);
    }
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &c in &children[u] {
            order.push(c);
            queue.push_back(c);
        }
    }
    order
}

fn forward_sweep(net: &RadialNetwork, order: &[usize], branch_i: &[Complex64]) -> Vec<Complex64> {
    let mut v = vec![net.slack_voltage; net.n()];
    for &bus in order {
        let parent = net.parent(bus);
        let up = if parent == 0 { net.slack_voltage } else { v[parent - 1] };
        v[bus - 1] = up + net.branches[bus - 1].impedance * branch_i[bus - 1];
    }
    v
}

fn backward_sweep(net: &RadialNetwork, order: &[usize], i_inj: &[Complex64], branch_i: &mut [Complex64]) {
    branch_i.copy_from_slice(i_inj);
    for &bus in order.iter().rev() {
        let parent = net.parent(bus);
        if parent != 0 {
            let c = branch_i[bus - 1];
            branch_i[parent - 1] += c;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageViolation {
    pub bus: usize,
    pub value: f64,
    pub limit: f64,
    /// Distance outside the band in p.u.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentViolation {
    pub branch: usize,
    pub from: usize,
    pub to: usize,
    pub magnitude: f64,
    pub i_max: f64,
    /// Relative overload, `|i| / i_max − 1`.
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub voltage: Vec<VoltageViolation>,
    pub current: Vec<CurrentViolation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.voltage.is_empty() && self.current.is_empty()
    }
}

/// Checks voltages and branch currents. With `use_exact` the voltage test uses
/// magnitudes; otherwise it uses the real part, matching the linear model.
pub fn check_operating_limits(
    net: &RadialNetwork,
    op: &OperatingPoint,
    v_min: &[f64],
    v_max: &[f64],
    use_exact: bool,
) -> ViolationReport {
    let mut report = ViolationReport::default();
    for (k, v) in op.v.iter().enumerate() {
        let val = if use_exact { v.norm() } else { v.re };
        if val < v_min[k] {
            report.voltage.push(VoltageViolation { bus: k + 1, value: val, limit: v_min[k], excess: v_min[k] - val });
        } else if val > v_max[k] {
            report.voltage.push(VoltageViolation { bus: k + 1, value: val, limit: v_max[k], excess: val - v_max[k] });
        }
    }
    for (b, (cur, br)) in op.i.iter().zip(&net.branches).enumerate() {
        let mag = cur.norm();
        if mag > br.i_max {
            report.current.push(CurrentViolation {
                branch: b,
                from: br.from,
                to: br.to,
                magnitude: mag,
                i_max: br.i_max,
                excess: mag / br.i_max - 1.0,
            });
        }
    }
    report
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBase {
    s_kva: f64,
    v_kv: f64,
    slack_v_pu: f64,
    #[serde(default)]
    slack_angle_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLimits {
    #[serde(default = "default_v_min")]
    v_min_pu: f64,
    #[serde(default = "default_v_max")]
    v_max_pu: f64,
}

fn default_v_min() -> f64 {
    0.9
}

fn default_v_max() -> f64 {
    1.1
}

impl Default for FileLimits {
    fn default() -> Self {
        FileLimits { v_min_pu: default_v_min(), v_max_pu: default_v_max() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBus {
    id: usize,
    #[serde(default)]
    p_kw: f64,
    #[serde(default)]
    q_kvar: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBranch {
    from: usize,
    to: usize,
    r_ohm: f64,
    x_ohm: f64,
    i_max_a: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDer {
    id: Option<String>,
    node: usize,
    kind: String,
    s_max_kva: f64,
    p_upper_kw: f64,
    #[serde(default)]
    p_lower_kw: f64,
    #[serde(default = "default_pf")]
    pf_min: f64,
    p_init_kw: Option<f64>,
    q_init_kvar: Option<f64>,
}

fn default_pf() -> f64 {
    0.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    base: FileBase,
    #[serde(default)]
    limits: FileLimits,
    buses: Vec<FileBus>,
    #[serde(default)]
    branches: Vec<FileBranch>,
    #[serde(default)]
    ders: Vec<FileDer>,
}

fn parse_kind(s: &str) -> Result<DerKind> {
    match s.to_ascii_lowercase().as_str() {
        "pv" => Ok(DerKind::Pv),
        "bess" => Ok(DerKind::Bess),
        "dg" => Ok(DerKind::Dg),
        other => Err(Error::Parse(format!("unknown DER kind `{other}` (expected pv, bess or dg)"))),
    }
}

/// Parses a TOML network document (physical units) into a per-unit [`Case`].
pub fn load_case(document: &str) -> Result<Case> {
    let file: NetworkFile = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let FileBase { s_kva, v_kv, slack_v_pu, slack_angle_deg } = file.base;
    if !(s_kva > 0.0) || !(v_kv > 0.0) || !(slack_v_pu > 0.0) {
        return Err(Error::Unit(format!(
            "base quantities must be positive (s_kva={s_kva}, v_kv={v_kv}, slack_v_pu={slack_v_pu})"
        )));
    }
    let z_base = v_kv * v_kv * 1000.0 / s_kva;
    let i_base = s_kva / (3f64.sqrt() * v_kv);
    let buses = file
        .buses
        .iter()
        .map(|b| Bus { id: b.id, load_p: b.p_kw / s_kva, load_q: b.q_kvar / s_kva })
        .collect();
    let branches = file
        .branches
        .iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            impedance: Complex64::new(b.r_ohm / z_base, b.x_ohm / z_base),
            i_max: b.i_max_a / i_base,
        })
        .collect();
    let slack = Complex64::from_polar(slack_v_pu, slack_angle_deg.to_radians());
    let network = RadialNetwork::new(buses, branches, slack, s_kva, v_kv)?;
    let mut ders = Vec::with_capacity(file.ders.len());
    for d in &file.ders {
        let kind = parse_kind(&d.kind)?;
        let p_upper = d.p_upper_kw / s_kva;
        let p_lower = d.p_lower_kw / s_kva;
        let p_init = match d.p_init_kw {
            Some(p) => p / s_kva,
            None => 0f64.clamp(p_lower.min(p_upper), p_upper),
        };
        ders.push(DerUnit {
            id: d.id.clone().unwrap_or_else(|| format!("{}{}", kind.as_str(), d.node)),
            node: d.node,
            kind,
            s_max: d.s_max_kva / s_kva,
            p_upper,
            p_lower,
            pf_min: d.pf_min,
            p_init,
            q_init: d.q_init_kvar.unwrap_or(0.0) / s_kva,
        });
    }
    let n = network.n();
    let lim = file.limits;
    if !(lim.v_min_pu < lim.v_max_pu) {
        return Err(Error::Parse(format!("v_min_pu {} must be below v_max_pu {}", lim.v_min_pu, lim.v_max_pu)));
    }
    Case::new(network, ders, VoltageLimits::uniform(n, lim.v_min_pu, lim.v_max_pu))
}

/// Network part of [`load_case`].
pub fn load_network(document: &str) -> Result<RadialNetwork> {
    load_case(document).map(|c| c.network)
}

pub fn load_case_file(path: impl AsRef<std::path::Path>) -> Result<Case> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read network file {}: {e}", path.display())))?;
    load_case(&text)
}
