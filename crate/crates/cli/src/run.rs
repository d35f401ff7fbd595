//! The `compute`, `compare` and `sweep` subcommands.

use std::fs::File;
use std::path::PathBuf;

use log::{info, warn};
use serde::Serialize;

use pqflex::io::{polygon_to_csv, to_json, write_text, ForArtifact};
use pqflex::methods::{
    compare, fme_for, gsk_for, minkowski_for, monte_carlo_for, FmeOptions, ForResult, GskScheme,
    Method,
};
use pqflex::network::{load_case_file, Case};
use pqflex::polytope::Polygon2D;
use pqflex::uncertainty::{compute_margins, read_pv_history_file, MarginMethod, MarginSet};

use crate::config::{Command, Format, GskChoice, RunConfig};
use crate::svg::{self, Layer};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cmd: &Command) -> Result<()> {
    let cfg = RunConfig::resolve(cmd.args())?;
    let case = load_case_file(&cfg.network)?;
    info!("loaded {} with {} buses and {} DER units", cfg.network.display(), case.network.n() + 1, case.ders.len());
    match cmd {
        Command::Compute(_) => compute(&case, &cfg),
        Command::Compare(_) => compare_cmd(&case, &cfg),
        Command::Sweep(_) => sweep(&case, &cfg),
    }
}

fn margins_at(case: &Case, cfg: &RunConfig, epsilon: Option<f64>) -> Result<Option<MarginSet>> {
    let Some(u) = &cfg.uncertainty else { return Ok(None) };
    let dists = read_pv_history_file(&u.data, case.network.s_base)?;
    let m = compute_margins(&case.ders, &dists, u.method, epsilon.unwrap_or(u.epsilon), u.beta, u.seed)?;
    Ok(Some(m))
}

fn run_method(case: &Case, cfg: &RunConfig, method: Method, margins: Option<&MarginSet>) -> Result<ForResult> {
    let r = match method {
        Method::Fme => fme_for(case, &FmeOptions { k_cap: cfg.k_cap, k_cur: cfg.k_cur, order: cfg.order }, margins),
        Method::Gsk => {
            // Keys follow nominal ratings, so the scheme does not move with ε.
            let units = &case.ders;
            let scheme = match &cfg.gsk {
                GskChoice::Capacity => GskScheme::capacity(units)?,
                GskChoice::File(path) => {
                    let f = File::open(path)
                        .map_err(|e| CliError::parse(format!("cannot read GSK file `{}`: {e}", path.display())))?;
                    GskScheme::from_csv(f, units)?
                }
            };
            gsk_for(case, &scheme, cfg.k_cap, cfg.k_cur, margins)
        }
        Method::Minkowski => minkowski_for(case, cfg.k_cap, margins),
        Method::MonteCarlo => monte_carlo_for(case, cfg.mc_samples, cfg.mc_seed, margins),
    }?;
    info!("{}: {} vertices in {:.1} ms", method, r.polygon.len(), r.wall_time_ms);
    Ok(r)
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

/// Polygon files for one result; `stem` is appended to every file name.
fn write_result(cfg: &RunConfig, result: &ForResult, margins: Option<&MarginSet>, stem: &str) -> Result<()> {
    let name = format!("{}{stem}", result.method.as_str());
    if cfg.wants(Format::Json) {
        let art = ForArtifact::new(result, margins, cfg.record_timings);
        write_text(out_path(cfg, &format!("for_{name}.json")), &to_json(&art)?)?;
        if let Some(report) = &result.report {
            let mut report = report.clone();
            if !cfg.record_timings {
                report.strip_timings();
            }
            write_text(out_path(cfg, &format!("elimination_report{stem}.json")), &to_json(&report)?)?;
        }
    }
    if cfg.wants(Format::Csv) {
        write_text(out_path(cfg, &format!("for_{name}.csv")), &polygon_to_csv(&result.polygon))?;
        if let Some(samples) = &result.samples {
            let cloud = Polygon2D { vertices: samples.clone() };
            write_text(out_path(cfg, &format!("samples_{name}.csv")), &polygon_to_csv(&cloud))?;
        }
    }
    Ok(())
}

fn write_svg(cfg: &RunConfig, layers: &[Layer<'_>], origin: [f64; 2]) -> Result<()> {
    if cfg.wants(Format::Svg) {
        write_text(out_path(cfg, "for.svg"), &svg::render(layers, origin))?;
    }
    Ok(())
}

fn method_layers(results: &[ForResult]) -> Vec<Layer<'_>> {
    results.iter().map(|r| Layer { label: r.method.as_str().into(), polygon: &r.polygon }).collect()
}

fn compute(case: &Case, cfg: &RunConfig) -> Result<()> {
    let margins = margins_at(case, cfg, None)?;
    let mut results = Vec::new();
    for &m in &cfg.methods {
        let r = run_method(case, cfg, m, margins.as_ref())?;
        write_result(cfg, &r, margins.as_ref(), "")?;
        println!("{:<12} vertices {:>4}  area {:.6} pu^2", m.as_str(), r.polygon.len(), r.polygon.area());
        results.push(r);
    }
    write_svg(cfg, &method_layers(&results), results[0].origin)
}

fn compare_cmd(case: &Case, cfg: &RunConfig) -> Result<()> {
    let mut methods = cfg.methods.clone();
    if !methods.contains(&cfg.reference) {
        methods.push(cfg.reference);
    }
    if methods.len() < 2 {
        return Err(CliError::config("compare needs at least two methods, one of them the reference"));
    }
    let margins = margins_at(case, cfg, None)?;
    // Reference first, so an unusable reference fails before the other runs.
    let reference = run_method(case, cfg, cfg.reference, margins.as_ref())?;
    let mut results = Vec::new();
    for &m in &methods {
        if m == cfg.reference {
            results.push(reference.clone());
        } else {
            results.push(run_method(case, cfg, m, margins.as_ref())?);
        }
    }
    let mut table = compare(&results, &reference)?;
    print!("{}", table.to_text());
    if !cfg.record_timings {
        table.strip_timings();
    }
    write_text(out_path(cfg, "metrics.json"), &to_json(&table)?)?;
    for r in &results {
        write_result(cfg, r, margins.as_ref(), "")?;
    }
    write_svg(cfg, &method_layers(&results), reference.origin)
}

#[derive(Serialize)]
struct SweepPoint {
    method: Method,
    epsilon: f64,
    area_pu2: f64,
}

#[derive(Serialize)]
struct SweepReport {
    uncertainty: MarginMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    points: Vec<SweepPoint>,
}

fn sweep(case: &Case, cfg: &RunConfig) -> Result<()> {
    let Some(u) = &cfg.uncertainty else {
        return Err(CliError::config("sweep needs --uncertainty quantile|scenario and --pv-data"));
    };
    if cfg.epsilons.is_empty() {
        return Err(CliError::config("sweep needs at least one epsilon"));
    }
    let mut epsilons = cfg.epsilons.clone();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();
    let mut points = Vec::new();
    let mut results: Vec<(f64, ForResult)> = Vec::new();
    for &eps in &epsilons {
        let margins = margins_at(case, cfg, Some(eps))?;
        for &m in &cfg.methods {
            let r = run_method(case, cfg, m, margins.as_ref())?;
            write_result(cfg, &r, margins.as_ref(), &format!("_eps{eps}"))?;
            let area = r.polygon.area();
            if let Some(prev) = points.iter().rev().find(|p: &&SweepPoint| p.method == m) {
                if area < prev.area_pu2 {
                    warn!("{m}: area shrinks from {} at eps {} to {area} at eps {eps}", prev.area_pu2, prev.epsilon);
                }
            }
            println!("{:<12} eps {:<6} area {:.6} pu^2", m.as_str(), eps, area);
            points.push(SweepPoint { method: m, epsilon: eps, area_pu2: area });
            results.push((eps, r));
        }
    }
    let report = SweepReport {
        uncertainty: u.method,
        beta: (u.method == MarginMethod::Scenario).then_some(u.beta),
        points,
    };
    write_text(out_path(cfg, "sweep.json"), &to_json(&report)?)?;
    let layers: Vec<Layer<'_>> = results
        .iter()
        .map(|(eps, r)| Layer { label: format!("{} eps={eps}", r.method), polygon: &r.polygon })
        .collect();
    write_svg(cfg, &layers, results[0].1.origin)
}
