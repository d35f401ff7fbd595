//! PV chance-constraint margins: empirical quantiles and the scenario
//! approach. A margin is stored as the effective upper bound `p̂` that replaces
//! a PV unit's `p_upper`.

use std::collections::BTreeMap;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DerKind, DerUnit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    pub unit: String,
    /// p.u. active power, finite and nonnegative
    pub samples: Vec<f64>,
    pub meta: String,
}

impl EmpiricalDistribution {
    pub fn new(unit: impl Into<String>, samples: Vec<f64>, meta: impl Into<String>) -> Result<Self> {
        let unit = unit.into();
        if samples.is_empty() {
            return Err(Error::EmptyDistribution(unit));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::BadParameter(format!("unit `{unit}`: sample {bad} is not a nonnegative number")));
        }
        Ok(EmpiricalDistribution { unit, samples, meta: meta.into() })
    }

    fn sorted(&self) -> Vec<f64> {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginMethod {
    Quantile,
    Scenario,
}

/// Effective PV upper bounds keyed by unit id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSet {
    pub bounds: BTreeMap<String, f64>,
    pub method: MarginMethod,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Lower empirical ε-quantile with linear interpolation at rank `ε·(N−1)`,
/// clamped to `[0, p_upper]`.
pub fn quantile_margin(dist: &EmpiricalDistribution, epsilon: f64, p_upper: f64) -> Result<f64> {
    check_probability("epsilon", epsilon)?;
    if dist.samples.is_empty() {
        return Err(Error::EmptyDistribution(dist.unit.clone()));
    }
    let s = dist.sorted();
    let rank = epsilon * (s.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    let q = if lo + 1 < s.len() { s[lo] + frac * (s[lo + 1] - s[lo]) } else { s[lo] };
    Ok(q.clamp(0.0, p_upper.max(0.0)))
}

/// `⌈ln β / ln(1−ε)⌉`, at least one. Ratios within 1e-9 of an integer are
/// taken as that integer.
pub fn scenario_sample_count(epsilon: f64, beta: f64) -> Result<usize> {
    check_probability("epsilon", epsilon)?;
    check_probability("beta", beta)?;
    let r = beta.ln() / (1.0 - epsilon).ln();
    let n = if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() };
    Ok((n as usize).max(1))
}

/// Stable 64-bit FNV-1a hash; selects the per-unit random stream.
fn stream_id(unit: &str) -> u64 {
    unit.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Minimum of `N_s` draws with replacement, clamped to `[0, p_upper]`. The
/// stream depends only on `seed` and the unit id.
pub fn scenario_margin(dist: &EmpiricalDistribution, epsilon: f64, beta: f64, seed: u64, p_upper: f64) -> Result<f64> {
    let n_s = scenario_sample_count(epsilon, beta)?;
    if dist.samples.is_empty() {
        return Err(Error::EmptyDistribution(dist.unit.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(&dist.unit));
    let len = dist.samples.len();
    let m = (0..n_s).map(|_| dist.samples[rng.random_range(0..len)]).fold(f64::INFINITY, f64::min);
    Ok(m.clamp(0.0, p_upper.max(0.0)))
}

/// Margins for every PV unit in `units`.
pub fn compute_margins(
    units: &[DerUnit],
    dists: &[EmpiricalDistribution],
    method: MarginMethod,
    epsilon: f64,
    beta: f64,
    seed: u64,
) -> Result<MarginSet> {
    let mut bounds = BTreeMap::new();
    for u in units.iter().filter(|u| u.kind == DerKind::Pv) {
        let dist = dists.iter().find(|d| d.unit == u.id).ok_or_else(|| Error::MissingMargin(u.id.clone()))?;
        let p_hat = match method {
            MarginMethod::Quantile => quantile_margin(dist, epsilon, u.p_upper)?,
            MarginMethod::Scenario => scenario_margin(dist, epsilon, beta, seed, u.p_upper)?,
        };
        bounds.insert(u.id.clone(), p_hat);
    }
    let scenario = method == MarginMethod::Scenario;
    Ok(MarginSet {
        bounds,
        method,
        epsilon,
        beta: scenario.then_some(beta),
        seed: scenario.then_some(seed),
    })
}

/// Replaces each PV unit's `p_upper` by its margin. A setpoint above the new
/// bound is lowered onto it.
pub fn apply_margins(units: &[DerUnit], margins: &MarginSet) -> Result<Vec<DerUnit>> {
    units
        .iter()
        .map(|u| {
            if u.kind != DerKind::Pv {
                return Ok(u.clone());
            }
            let &p_hat = margins.bounds.get(&u.id).ok_or_else(|| Error::MissingMargin(u.id.clone()))?;
            let p_hat = p_hat.clamp(u.p_lower, u.p_upper);
            let mut t = u.clone();
            t.p_upper = p_hat;
            t.p_init = t.p_init.min(p_hat);
            Ok(t)
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct PvRecord {
    unit_id: String,
    timestamp: String,
    p_kw: f64,
}

/// Reads `unit_id,timestamp,p_kw` rows into one distribution per unit
/// (ordered by unit id), converting to p.u. on `s_base_kva`.
pub fn read_pv_history<R: Read>(reader: R, s_base_kva: f64) -> Result<Vec<EmpiricalDistribution>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut grouped: BTreeMap<String, (Vec<f64>, String, String)> = BTreeMap::new();
    for (line, rec) in rdr.deserialize::<PvRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("PV history row {}: {e}", line + 2)))?;
        let entry = grouped.entry(rec.unit_id).or_insert_with(|| (Vec::new(), rec.timestamp.clone(), String::new()));
        entry.0.push(rec.p_kw / s_base_kva);
        entry.2 = rec.timestamp;
    }
    grouped
        .into_iter()
        .map(|(unit, (samples, first, last))| EmpiricalDistribution::new(unit, samples, format!("{first}..{last}")))
        .collect()
}

pub fn read_pv_history_file(path: impl AsRef<std::path::Path>, s_base_kva: f64) -> Result<Vec<EmpiricalDistribution>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Parse(format!("cannot read PV history {}: {e}", path.display())))?;
    read_pv_history(file, s_base_kva)
}
