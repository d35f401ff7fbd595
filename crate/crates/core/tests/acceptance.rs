//! Acceptance run: every criterion prints one PASS/FAIL line with the measured
//! figures; the process exits nonzero if any fails.
//!
//! Criteria run one after another on purpose, so timings are not distorted by
//! concurrent work.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqflex::io::{to_json, ForArtifact};
use pqflex::methods::{
    compare, fme_for, gsk_for, linearize, minkowski_for, monte_carlo_for, FmeOptions, ForResult, GskScheme,
};
use pqflex::network::{
    bfs_iteration, build_sweep_matrices, injections_from_der, load_case_file, solve_dispatch, Case, DerKind,
};
use pqflex::polytope::{
    directed_hausdorff, fill_factor, polygon_from_system, project_to_plane, LinearSystem, OrderHeuristic,
};
use pqflex::uncertainty::{
    compute_margins, read_pv_history_file, scenario_sample_count, EmpiricalDistribution, MarginMethod, MarginSet,
};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/ieee33.toml");
const PV_DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/pv_history.csv");
const MC_SAMPLES: usize = 100_000;
const MC_SEED: u64 = 42;
const SWEEP: [f64; 4] = [0.01, 0.05, 0.1, 0.2];
const SCENARIO_EPS: f64 = 0.05;
const SCENARIO_BETA: f64 = 0.05;
const SCENARIO_SEEDS: [u64; 4] = [1, 2, 3, 4];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Results shared by several criteria, computed once.
struct Shared {
    case: Case,
    dists: Vec<EmpiricalDistribution>,
    fme: ForResult,
    gsk: ForResult,
    minkowski: ForResult,
    monte_carlo: ForResult,
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let case = load_case_file(FIXTURE).expect("fixture loads");
        let dists = read_pv_history_file(PV_DATA, case.network.s_base).expect("PV history loads");
        let fme = fme_for(&case, &FmeOptions::default(), None).expect("FME runs");
        let scheme = GskScheme::capacity(&case.ders).expect("capacity keys");
        let gsk = gsk_for(&case, &scheme, 12, 8, None).expect("GSK runs");
        let minkowski = minkowski_for(&case, 12, None).expect("Minkowski runs");
        let monte_carlo = monte_carlo_for(&case, MC_SAMPLES, MC_SEED, None).expect("Monte Carlo runs");
        Shared { case, dists, fme, gsk, minkowski, monte_carlo }
    })
}

fn margins(s: &Shared, method: MarginMethod, eps: f64, seed: u64) -> MarginSet {
    compute_margins(&s.case.ders, &s.dists, method, eps, SCENARIO_BETA, seed).expect("margins")
}

fn fme_with(s: &Shared, m: &MarginSet) -> ForResult {
    fme_for(&s.case, &FmeOptions::default(), Some(m)).expect("FME with margins")
}

fn quantile_sweep() -> &'static Vec<ForResult> {
    static CELL: OnceLock<Vec<ForResult>> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = shared();
        SWEEP.iter().map(|&e| fme_with(s, &margins(s, MarginMethod::Quantile, e, 0))).collect()
    })
}

// 1 ------------------------------------------------------------------------

/// Bounded random system: a box plus random rows around an interior origin;
/// later seeds add an equality through the origin that involves a hidden
/// variable.
fn random_system(seed: u64) -> LinearSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3 + (seed as usize % 4);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; n];
            row[j] = sign;
            a.push(row);
            b.push(rng.random_range(2.0..5.0));
        }
    }
    let with_equality = seed % 5 == 4;
    let budget = 25 - a.len() - if with_equality { 2 } else { 0 };
    let extra = rng.random_range(budget / 2..=budget);
    for _ in 0..extra {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        a.push(row);
        b.push(rng.random_range(0.5..2.0));
    }
    if with_equality {
        let mut row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        row[n - 1] = 1.0;
        a.push(row.clone());
        b.push(0.0);
        a.push(row.iter().map(|v| -v).collect());
        b.push(0.0);
    }
    let labels = (0..n).map(|j| format!("x{j}")).collect();
    LinearSystem::new(a, b, labels).unwrap()
}

/// Smallest uniform relaxation `t` (rows scaled to unit norm) under which the
/// system with `x0, x1` fixed is feasible.
fn oracle_violation(sys: &LinearSystem, xy: [f64; 2]) -> f64 {
    let n = sys.nvars();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let z: Vec<_> = (2..n).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for (row, &bi) in sys.a.iter().zip(&sys.b) {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rhs = (bi - row[0] * xy[0] - row[1] * xy[1]) / norm;
        let mut terms: Vec<_> = z.iter().enumerate().map(|(k, &v)| (v, row[k + 2] / norm)).collect();
        terms.push((t, -1.0));
        lp.add_constraint(terms, ComparisonOp::Le, rhs);
    }
    let sol = lp.solve().expect("oracle LP solves");
    sol.solution().expect("oracle LP optimal").objective()
}

fn plane_violation(plane: &LinearSystem, xy: [f64; 2]) -> f64 {
    plane
        .a
        .iter()
        .zip(&plane.b)
        .map(|(r, &bi)| (r[0] * xy[0] + r[1] * xy[1] - bi) / r[0].hypot(r[1]).max(1e-300))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn fme_correctness() -> Outcome {
    const TOL: f64 = 1e-8;
    let t0 = Instant::now();
    let mut points = 0usize;
    let mut disagreements = 0usize;
    let mut worst = String::new();
    for seed in 0..24u64 {
        let sys = random_system(seed);
        let (plane, _) =
            project_to_plane(&sys, &["x0", "x1"], &OrderHeuristic::MinProduct).map_err(|e| format!("seed {seed}: {e}"))?;
        let poly = polygon_from_system(&plane).map_err(|e| format!("seed {seed}: {e}"))?;
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &poly.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let pad = [0.25 * (hi[0] - lo[0]), 0.25 * (hi[1] - lo[1])];
        let (lo, hi) = ([lo[0] - pad[0], lo[1] - pad[1]], [hi[0] + pad[0], hi[1] + pad[1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut probe: Vec<[f64; 2]> = Vec::with_capacity(3500);
        for i in 0..50 {
            for j in 0..50 {
                let u = [i as f64 / 49.0, j as f64 / 49.0];
                probe.push([lo[0] + u[0] * (hi[0] - lo[0]), lo[1] + u[1] * (hi[1] - lo[1])]);
            }
        }
        for _ in 0..1000 {
            probe.push([rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])]);
        }
        for xy in probe {
            let truth = oracle_violation(&sys, xy);
            let ours = plane_violation(&plane, xy);
            points += 1;
            let wrong = (truth > TOL && ours <= 0.0) || (ours > TOL && truth <= 0.0);
            if wrong {
                disagreements += 1;
                if worst.is_empty() {
                    worst = format!("; first at seed {seed} {xy:?}: oracle {truth:.3e}, projection {ours:.3e}");
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        disagreements == 0 && secs < 30.0,
        format!("24 systems, {points} points, {disagreements} disagreements, {secs:.1} s{worst}"),
    )
}

// 2 ------------------------------------------------------------------------

fn power_flow_fidelity() -> Outcome {
    let case = &shared().case;
    let net = &case.network;
    let (p, q) = case.initial_dispatch();
    let mut worst_v: f64 = 0.0;
    // Loads with the initial DER dispatch, and loads alone.
    for (label, units) in [("dispatch", case.ders.clone()), ("loads only", Vec::new())] {
        let (pu, qu): (Vec<f64>, Vec<f64>) =
            if units.is_empty() { (Vec::new(), Vec::new()) } else { (p.clone(), q.clone()) };
        let exact = solve_dispatch(net, &units, &pu, &qu).map_err(|e| format!("{label}: {e}"))?;
        let flat = build_sweep_matrices(net, &net.flat_start()).map_err(|e| e.to_string())?;
        let (pi, qi) = injections_from_der(net, &units, &pu, &qu).map_err(|e| e.to_string())?;
        let (_, v_lin) = bfs_iteration(&flat, &pi, &qi).map_err(|e| e.to_string())?;
        for (a, b) in v_lin.iter().zip(&exact.v) {
            worst_v = worst_v.max((a.norm() - b.norm()).abs());
        }
    }

    let lin = linearize(case, 12, 8, None).map_err(|e| e.to_string())?;
    let cap: f64 = case.ders.iter().map(|u| u.s_max).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut perturbations: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let c = case.ders.len();
    for j in 0..c {
        let r = 0.1 * case.ders[j].s_max;
        for (dp, dq) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
            let mut vp = vec![0.0; c];
            let mut vq = vec![0.0; c];
            vp[j] = dp;
            vq[j] = dq;
            perturbations.push((vp, vq));
        }
    }
    for _ in 0..200 {
        let mut vp = vec![0.0; c];
        let mut vq = vec![0.0; c];
        for j in 0..c {
            let r = 0.1 * case.ders[j].s_max * rng.random_range(0.0..=1.0f64).sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            vp[j] = r * th.cos();
            vq[j] = r * th.sin();
        }
        perturbations.push((vp, vq));
    }
    let mut worst_pq: f64 = 0.0;
    for (dp, dq) in &perturbations {
        let pred = lin.model.predict(dp, dq).map_err(|e| e.to_string())?;
        let p1: Vec<f64> = p.iter().zip(dp).map(|(a, b)| a + b).collect();
        let q1: Vec<f64> = q.iter().zip(dq).map(|(a, b)| a + b).collect();
        let op = solve_dispatch(&case.network, &case.ders, &p1, &q1).map_err(|e| e.to_string())?;
        let err = (pred.dp - (op.pcc_p - lin.base.pcc_p)).abs().max((pred.dq - (op.pcc_q - lin.base.pcc_q)).abs());
        worst_pq = worst_pq.max(err);
    }
    let rel = worst_pq / cap;
    check(
        worst_v < 5e-3 && rel < 0.01,
        format!(
            "max |V| gap {worst_v:.2e} pu (< 5e-3); max PCC error {:.2e} pu = {:.3}% of capacity over {} perturbations",
            worst_pq,
            100.0 * rel,
            perturbations.len()
        ),
    )
}

// 3 ------------------------------------------------------------------------

fn inner_approximation() -> Outcome {
    const SAMPLES: usize = 100_000;
    const TOL: f64 = 1e-9;
    let case = &shared().case;
    let lin = linearize(case, 12, 8, None).map_err(|e| e.to_string())?;
    let c = lin.units.len();
    let counts = lin.counts;
    let rows = counts.coupling..counts.coupling + counts.capability + counts.current;
    let a: Vec<&[f64]> = lin.system.a[rows.clone()].iter().map(|r| &r[2..]).collect();
    let b: Vec<f64> = lin.system.b[rows].to_vec();
    let dim = 2 * c;

    let exact_violation = |x: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for (j, u) in lin.units.iter().enumerate() {
            let (p, q) = (u.p_init + x[j], u.q_init + x[c + j]);
            worst = worst.max(p.hypot(q) / u.s_max - 1.0);
            worst = worst.max(p - u.p_upper).max(u.p_lower - p);
            if u.kind == DerKind::Pv {
                let phi = u.pf_min.acos();
                worst = worst.max(q.abs() * phi.cos() - p * phi.sin());
            }
        }
        for (br, branch) in case.network.branches.iter().enumerate() {
            let di: Complex64 = (0..dim).map(|k| lin.model.di_map[(br, k)] * x[k]).sum();
            worst = worst.max((lin.base.i[br] + di).norm() / branch.i_max - 1.0);
        }
        worst
    };

    // Hit-and-run from the base point; the chord end on the boundary is
    // checked as well as the interior sample.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = vec![0.0; dim];
    let mut slack: Vec<f64> = b.clone();
    let mut violations = 0usize;
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0usize;
    let mut d = vec![0.0; dim];
    let mut ad = vec![0.0; a.len()];
    while checked < SAMPLES {
        let mut norm = 0.0;
        for v in d.iter_mut() {
            let g: f64 = rng.sample(rand_distr_normal());
            *v = g;
            norm += g * g;
        }
        let norm = norm.sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (i, row) in a.iter().enumerate() {
            ad[i] = row.iter().zip(&d).map(|(r, v)| r * v).sum();
            let s = slack[i].max(0.0);
            if ad[i] > 1e-14 {
                hi = hi.min(s / ad[i]);
            } else if ad[i] < -1e-14 {
                lo = lo.max(s / ad[i]);
            }
        }
        if !(hi.is_finite() && lo.is_finite()) || hi < lo {
            return Err("sampling polytope is unbounded or empty".into());
        }
        let end: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + hi * di).collect();
        let t = rng.random_range(lo..=hi);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        for (s, adi) in slack.iter_mut().zip(&ad) {
            *s -= t * adi;
        }
        for point in [&x, &end] {
            let v = exact_violation(point);
            worst = worst.max(v);
            if v > TOL {
                violations += 1;
            }
        }
        checked += 1;
    }
    check(
        violations == 0,
        format!("{checked} interior samples + {checked} boundary points, {violations} violations, worst relative excess {worst:.2e}"),
    )
}

/// Box-Muller standard normal; keeps the test free of a distribution crate.
fn rand_distr_normal() -> impl rand::distr::Distribution<f64> {
    struct BoxMuller;
    impl rand::distr::Distribution<f64> for BoxMuller {
        fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        }
    }
    BoxMuller
}

// 4 ------------------------------------------------------------------------

fn method_ordering() -> Outcome {
    let s = shared();
    let (ag, af, am) = (s.gsk.polygon.area(), s.fme.polygon.area(), s.minkowski.polygon.area());
    let h = directed_hausdorff(&s.gsk.polygon, &s.fme.polygon);
    let samples = s.monte_carlo.samples.as_ref().ok_or("no samples")?;
    let inside = samples.iter().filter(|&&p| s.fme.polygon.contains(p, 0.0)).count();
    let share = inside as f64 / samples.len() as f64;
    check(
        ag < af && af < am && h <= 1e-6 && share >= 0.9,
        format!(
            "areas gsk {ag:.4} < fme {af:.4} < minkowski {am:.4}; gsk outside fme by {h:.2e}; {:.2}% of {} feasible samples inside fme",
            100.0 * share,
            samples.len()
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn fill_factors() -> Outcome {
    let s = shared();
    let table = compare(&[s.fme.clone(), s.gsk.clone()], &s.monte_carlo).map_err(|e| e.to_string())?;
    let phi_f = table.rows[0].fill_factor;
    let phi_g = table.rows[1].fill_factor;
    check(phi_f >= 0.5 && phi_f > phi_g, format!("phi(fme) {phi_f:.4} >= 0.5 and > phi(gsk) {phi_g:.4}"))
}

// 6 ------------------------------------------------------------------------

fn scenario_counts() -> Outcome {
    let got = [
        scenario_sample_count(0.05, 0.05).map_err(|e| e.to_string())?,
        scenario_sample_count(0.05, 0.01).map_err(|e| e.to_string())?,
        scenario_sample_count(0.5, 0.5).map_err(|e| e.to_string())?,
    ];
    check(got == [59, 90, 1], format!("N(0.05,0.05)={}, N(0.05,0.01)={}, N(0.5,0.5)={}", got[0], got[1], got[2]))
}

// 7 ------------------------------------------------------------------------

fn uncertainty_monotone() -> Outcome {
    let runs = quantile_sweep();
    let areas: Vec<f64> = runs.iter().map(|r| r.polygon.area()).collect();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for w in runs.windows(2) {
        let h = directed_hausdorff(&w[0].polygon, &w[1].polygon);
        worst = worst.max(h);
        ok &= w[0].polygon.area() <= w[1].polygon.area() && h <= 1e-6;
    }
    let list: Vec<String> = SWEEP.iter().zip(&areas).map(|(e, a)| format!("{e}:{a:.4}")).collect();
    check(ok, format!("areas by eps [{}]; worst nesting gap {worst:.2e}", list.join(", ")))
}

// 8 ------------------------------------------------------------------------

/// Judged against the certainty-case FME region. The Monte Carlo hull lies
/// inside every margin-tightened region on this fixture, so fill factors
/// against it do not move with the margins; they are printed for reference.
fn scenario_spread() -> Outcome {
    let s = shared();
    let k = SWEEP.iter().position(|&e| e == SCENARIO_EPS).expect("eps in sweep");
    let quantile = &quantile_sweep()[k].polygon;
    let phi = |a: &pqflex::polytope::Polygon2D, r: &ForResult| fill_factor(a, &r.polygon).map_err(|e| e.to_string());
    let phi_q = phi(quantile, &s.fme)?;
    let phi_q_mc = phi(quantile, &s.monte_carlo)?;
    let mut phis = Vec::new();
    let mut phis_mc = Vec::new();
    for seed in SCENARIO_SEEDS {
        let r = fme_with(s, &margins(s, MarginMethod::Scenario, SCENARIO_EPS, seed));
        phis.push(phi(&r.polygon, &s.fme)?);
        phis_mc.push(phi(&r.polygon, &s.monte_carlo)?);
    }
    let lo = phis.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", ");
    check(
        hi - lo > 1e-9 && hi <= phi_q + 0.02,
        format!(
            "eps {SCENARIO_EPS}, beta {SCENARIO_BETA}: scenario phi over seeds [{}] (spread {:.4}) vs quantile phi {phi_q:.4}; \
             against the Monte Carlo hull: [{}] vs {phi_q_mc:.4}",
            fmt(&phis),
            hi - lo,
            fmt(&phis_mc)
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn performance() -> Outcome {
    let case = &shared().case;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let r = pool.install(|| fme_for(case, &FmeOptions::default(), None)).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let report = r.report.ok_or("no elimination report")?;
    check(
        secs < 10.0 && report.peak_rows <= 10_000,
        format!(
            "{secs:.2} s on one thread; peak rows held {} (<= 1e4), largest transient candidate set {}, {} -> {} rows",
            report.peak_rows, report.peak_generated, report.initial_rows, report.final_rows
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn artifacts(results: &[&ForResult], m: Option<&MarginSet>) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for r in results {
        out.push(to_json(&ForArtifact::new(r, m, false)).map_err(|e| e.to_string())?);
        if let Some(rep) = &r.report {
            let mut rep = rep.clone();
            rep.strip_timings();
            out.push(to_json(&rep).map_err(|e| e.to_string())?);
        }
    }
    let owned: Vec<ForResult> = results.iter().map(|r| (*r).clone()).collect();
    let mut table = compare(&owned, owned.last().expect("reference")).map_err(|e| e.to_string())?;
    table.strip_timings();
    out.push(to_json(&table).map_err(|e| e.to_string())?);
    Ok(out)
}

fn determinism() -> Outcome {
    let s = shared();
    let first = artifacts(&[&s.fme, &s.gsk, &s.minkowski, &s.monte_carlo], None)?;
    let case = load_case_file(FIXTURE).map_err(|e| e.to_string())?;
    let fme = fme_for(&case, &FmeOptions::default(), None).map_err(|e| e.to_string())?;
    let gsk = gsk_for(&case, &GskScheme::capacity(&case.ders).map_err(|e| e.to_string())?, 12, 8, None)
        .map_err(|e| e.to_string())?;
    let mink = minkowski_for(&case, 12, None).map_err(|e| e.to_string())?;
    let mc = monte_carlo_for(&case, MC_SAMPLES, MC_SEED, None).map_err(|e| e.to_string())?;
    let second = artifacts(&[&fme, &gsk, &mink, &mc], None)?;
    let m1 = to_json(&margins(s, MarginMethod::Scenario, SCENARIO_EPS, 3)).map_err(|e| e.to_string())?;
    let m2 = to_json(&margins(s, MarginMethod::Scenario, SCENARIO_EPS, 3)).map_err(|e| e.to_string())?;
    let bytes: usize = first.iter().map(String::len).sum();
    check(
        first == second && m1 == m2,
        format!("{} JSON artifacts ({bytes} bytes) plus scenario margins identical across two runs", first.len() + 1),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("FME correctness against LP oracle", fme_correctness),
        ("linear power-flow fidelity", power_flow_fidelity),
        ("inner-approximation guarantee", inner_approximation),
        ("method ordering", method_ordering),
        ("fill factor vs Monte Carlo reference", fill_factors),
        ("scenario sample count", scenario_counts),
        ("uncertainty monotonicity", uncertainty_monotone),
        ("scenario-approach spread", scenario_spread),
        ("performance and row growth", performance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2} {name} [{secs:.1} s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2} {name} [{secs:.1} s]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
