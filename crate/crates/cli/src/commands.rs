use serde_json::{json, Value};

use noisy_spins::bethe::{self, BetheSolution};
use noisy_spins::liouvillian;
use noisy_spins::spectra::{self, OmegaSampler, CROSSING_REL_TOL};
use noisy_spins::validation::{self, Fault, ValidationOptions};
use noisy_spins::{asymptotics, ModelParams};

use crate::config::{RunConfig, Resolver};
use crate::output::{self, Table};
use crate::CliError;

/// Full spectrum and its slow cluster (default n = 6, Ω = 1, g₊ = 800).
pub fn fig1(cfg: &RunConfig) -> Result<(), CliError> {
    let rec = liouvillian::full_spectrum_by_sectors(&cfg.params)?;
    let sectors = rec.sectors.clone().unwrap_or_default();
    let cluster = spectra::slow_cluster(&rec.eigenvalues)?;
    let mut spectrum = Table::new("fig1_spectrum", &["re", "im", "sector"]);
    let mut multiplet = Table::new("fig1_multiplet", &["re", "im", "sector"]);
    for (z, s) in rec.eigenvalues.iter().zip(&sectors) {
        let row = vec![z.re.into(), z.im.into(), (*s).into()];
        if z.norm() < cluster.threshold {
            multiplet.push(row.clone());
        }
        spectrum.push(row);
    }
    let max_re = rec.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let extras = json!({
        "cluster_count": cluster.values.len(),
        "threshold": cluster.threshold,
        "gap_ratio": cluster.gap_ratio,
        "max_re": max_re,
        "dimension": rec.len(),
    });
    spectrum.write(cfg, &extras)?;
    multiplet.write(cfg, &extras)?;
    println!("fig1: {} eigenvalues, slow cluster of {} below |λ| = {:.3e}", rec.len(), cluster.values.len(), cluster.threshold);
    Ok(())
}

fn descending(mut g: Vec<f64>) -> Vec<f64> {
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    g
}

/// Runs a continuation; on failure retries shorter prefixes so the caller can
/// still write what converged.
fn continue_partial<F>(g_path: &[f64], run: F) -> (Vec<BetheSolution>, Option<noisy_spins::Error>)
where
    F: Fn(&[f64]) -> noisy_spins::Result<Vec<BetheSolution>>,
{
    match run(g_path) {
        Ok(s) => (s, None),
        Err(e) => {
            let partial = (1..g_path.len()).rev().find_map(|k| run(&g_path[..k]).ok()).unwrap_or_default();
            (partial, Some(e))
        }
    }
}

/// Root loci of the maximal-spin state along a `g₊` grid, plus the poles.
pub fn fig2(cfg: &RunConfig) -> Result<(), CliError> {
    let g_path = descending(if cfg.g_grid.is_empty() { vec![1e4, 1e3, 500.0, 200.0, 100.0, 50.0] } else { cfg.g_grid.clone() });
    let p = &cfg.params;
    let (sols, err) = continue_partial(&g_path, |path| bethe::continuation_max_spin_state(p, path));
    let mut t = Table::new("fig2_roots", &["re_mu", "im_mu", "g_plus", "kind"]);
    for s in &sols {
        for z in &s.roots {
            t.push(vec![z.re.into(), z.im.into(), s.params.g_plus.into(), "root".into()]);
        }
    }
    for w in &p.omega {
        t.push(vec![0.0.into(), (0.5 * w).into(), f64::NAN.into(), "pole".into()]);
    }
    let extras = json!({
        "branch": "max-spin",
        "g_path": g_path,
        "residuals": sols.iter().map(|s| json!({"g_plus": s.params.g_plus, "residual": s.residual_norm})).collect::<Vec<_>>(),
        "max_residual": sols.iter().map(|s| s.residual_norm).fold(0.0, f64::max),
        "completed": sols.len(),
        "error": err.as_ref().map(|e| e.to_string()),
    });
    t.write(cfg, &extras)?;
    match err {
        Some(e) => Err(CliError::Numerical(format!("continuation stopped after {} of {} values: {e}", sols.len(), g_path.len()))),
        None => {
            println!("fig2: {} root sets of {} roots", sols.len(), p.n());
            Ok(())
        }
    }
}

fn rates_or_reason(n: usize, delta_y: f64, g_path: &[f64]) -> (Vec<f64>, Option<String>) {
    match validation::string_rates_per_spin(n, delta_y, g_path, &Default::default()) {
        Ok(r) => (r, None),
        Err(e) => (vec![f64::NAN; g_path.len()], Some(format!("bethe n={n}: {e}"))),
    }
}

/// Per-spin decay rates of the string state: ED and Bethe at n = 8, Bethe at
/// n = 60 and the large-n limit.
pub fn fig3(cfg: &RunConfig) -> Result<(), CliError> {
    let dy = cfg.delta_y;
    let inv_g: Vec<f64> = if cfg.g_grid.is_empty() {
        validation::default_inv_g_grid()
    } else {
        descending(cfg.g_grid.clone()).iter().map(|g| 1.0 / g).collect()
    };
    let g_path: Vec<f64> = inv_g.iter().map(|x| 1.0 / x).collect();
    let (b8, e8) = rates_or_reason(8, dy, &g_path);
    let (b60, e60) = rates_or_reason(60, dy, &g_path);
    let mut t = Table::new("fig3_rates", &["inv_g_plus", "rate_ed_n8", "rate_bethe_n8", "rate_bethe_n60", "rate_asymptotic", "reason"]);
    let mut failures = 0;
    for (k, &g) in g_path.iter().enumerate() {
        let mut reasons: Vec<String> = e8.iter().chain(&e60).cloned().collect();
        let ed = ModelParams::uniform(8, dy, -11.0, g)
            .and_then(|p| liouvillian::sector_spectrum(&p, 0))
            .and_then(|e| liouvillian::dominant_eigenvalue(&e, 0.0))
            .map(|z| -z.re / 8.0)
            .unwrap_or_else(|e| {
                reasons.push(format!("ed: {e}"));
                f64::NAN
            });
        let asym = asymptotics::solve_delta(dy, g).map(|d| d.rate_per_spin()).unwrap_or_else(|e| {
            reasons.push(format!("asymptotic: {e}"));
            f64::NAN
        });
        if !reasons.is_empty() {
            failures += 1;
        }
        t.push(vec![inv_g[k].into(), ed.into(), b8[k].into(), b60[k].into(), asym.into(), reasons.join("; ").into()]);
    }
    let extras = json!({"delta_y": dy, "omega_big": "-(n + 3)", "rate_units": "per spin", "failed_rows": failures});
    t.write(cfg, &extras)?;
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} of {} rows incomplete (see reason column)", g_path.len())));
    }
    println!("fig3: {} grid points", g_path.len());
    Ok(())
}

/// Singlet eigenvalue flow under a non-uniform detuning shift.
pub fn fig4(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = if cfg.d_omega_grid.is_empty() { (0..41).map(|i| -0.2 + 0.4 * i as f64 / 40.0).collect() } else { cfg.d_omega_grid.clone() };
    let direction = spectra::flow_direction(cfg.params.n(), cfg.seed)?;
    let trace = spectra::flow_sweep(&cfg.params, &grid, 0, &direction)?;
    let crossings = spectra::detect_crossings(&trace, CROSSING_REL_TOL);
    let first: Vec<_> = trace.trajectories.iter().map(|t| t[0]).collect();
    let cluster = spectra::slow_cluster(&first)?;
    let slow: Vec<usize> = (0..first.len()).filter(|&i| first[i].norm() < cluster.threshold).collect();
    let slow_crossings = crossings.iter().filter(|c| slow.contains(&c.a) && slow.contains(&c.b)).count();
    let mut t = Table::new("fig4_flow", &["delta_omega", "trajectory_id", "re", "im"]);
    for (k, d) in trace.grid.iter().enumerate() {
        for (i, traj) in trace.trajectories.iter().enumerate() {
            t.push(vec![(*d).into(), i.into(), traj[k].re.into(), traj[k].im.into()]);
        }
    }
    let extras = json!({
        "sector": 0,
        "direction": direction,
        "trajectories": trace.len(),
        "refinements": trace.refinements,
        "worst_ratio": trace.worst_ratio,
        "crossings": crossings,
        "slow_trajectories": slow,
        "slow_crossings": slow_crossings,
    });
    t.write(cfg, &extras)?;
    println!("fig4: {} trajectories, {} crossings, {} refinements", trace.len(), crossings.len(), trace.refinements);
    Ok(())
}

pub fn ed(cfg: &RunConfig, sector: Option<i32>) -> Result<(), CliError> {
    let p = &cfg.params;
    let rows: Vec<(f64, f64, i32)> = match sector {
        Some(s) => liouvillian::sector_spectrum(p, s)?.iter().map(|z| (z.re, z.im, s)).collect(),
        None => {
            let rec = liouvillian::full_spectrum_by_sectors(p)?;
            rec.eigenvalues.iter().zip(rec.sectors.unwrap_or_default()).map(|(z, s)| (z.re, z.im, s)).collect()
        }
    };
    let mut t = Table::new("ed_spectrum", &["re", "im", "sector"]);
    for (re, im, s) in &rows {
        t.push(vec![(*re).into(), (*im).into(), (*s).into()]);
    }
    t.write(cfg, &json!({"sector": sector, "count": rows.len()}))?;
    println!("ed: {} eigenvalues", rows.len());
    Ok(())
}

pub fn bethe_solve(cfg: &RunConfig, branch: &str) -> Result<(), CliError> {
    let g_path = descending(if cfg.g_grid.is_empty() { vec![cfg.params.g_plus] } else { cfg.g_grid.clone() });
    let p = &cfg.params;
    let (sols, err) = match branch {
        "string" => continue_partial(&g_path, |path| bethe::continuation_string_state(p, path)),
        "max-spin" => continue_partial(&g_path, |path| bethe::continuation_max_spin_state(p, path)),
        other => return Err(CliError::Usage(format!("unknown branch `{other}` (string | max-spin)"))),
    };
    let mut roots = Table::new("bethe_roots", &["g_plus", "root_index", "re_mu", "im_mu"]);
    let mut eigs = Table::new("bethe_eigenvalues", &["g_plus", "re", "im", "residual", "iterations"]);
    for s in &sols {
        for (i, z) in s.roots.iter().enumerate() {
            roots.push(vec![s.params.g_plus.into(), i.into(), z.re.into(), z.im.into()]);
        }
        eigs.push(vec![s.params.g_plus.into(), s.eigenvalue.re.into(), s.eigenvalue.im.into(), s.residual_norm.into(), s.iterations.into()]);
    }
    let extras = json!({"branch": branch, "g_path": g_path, "completed": sols.len(), "error": err.as_ref().map(|e| e.to_string())});
    roots.write(cfg, &extras)?;
    eigs.write(cfg, &extras)?;
    match err {
        Some(e) => Err(CliError::Numerical(format!("continuation stopped after {} of {} values: {e}", sols.len(), g_path.len()))),
        None => {
            println!("bethe-solve: {} solutions on the {branch} branch", sols.len());
            Ok(())
        }
    }
}

pub fn sweep(cfg: &RunConfig, draws: usize, width: f64) -> Result<(), CliError> {
    let sampler = OmegaSampler::Uniform { lo: -width, hi: width };
    let p = &cfg.params;
    let sample = spectra::rate_distribution(p.n(), sampler, p.omega_big, p.g_plus, draws, cfg.seed)?;
    let mut t = Table::new("sweep_rates", &["draw", "rate"]);
    for (k, r) in sample.draws.iter().enumerate() {
        t.push(vec![k.into(), (*r).into()]);
    }
    let fit = match spectra::weibull_fit(&sample.draws) {
        Ok(f) => json!(f),
        Err(e) => json!({"error": e.to_string()}),
    };
    t.write(cfg, &json!({"sampler": sampler, "draws": draws, "weibull": fit}))?;
    println!("sweep: {draws} draws at n = {}", p.n());
    Ok(())
}

/// Runs the acceptance criteria; `Ok(false)` when any hard criterion failed.
pub fn validate(cfg: &RunConfig, fault: Option<Fault>, a4_trajectories: usize) -> Result<bool, CliError> {
    let opts = ValidationOptions { seed: cfg.seed, fault, a4_trajectories };
    let reports = validation::run_all(&opts);
    for r in &reports {
        println!("{}", r.summary_line());
    }
    let passed = reports.iter().all(|r| r.passed);
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join("validation_report.json");
    output::write_json(&path, &json!({"passed": passed, "options": opts, "criteria": reports}))?;
    output::write_sidecar(&path, cfg, &Value::Null)?;
    Ok(passed)
}

pub fn parse_fault(res: &Resolver, flag: Option<String>) -> Result<Option<Fault>, CliError> {
    match res.get::<String>("inject-fault", flag)?.as_deref() {
        None | Some("none") => Ok(None),
        Some("flip-interaction") => Ok(Some(Fault::FlipInteraction)),
        Some(other) => Err(CliError::Usage(format!("unknown fault `{other}` (flip-interaction)"))),
    }
}
