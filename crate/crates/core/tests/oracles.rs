//! Cross-method agreement: each test computes the same quantity by two
//! independent routes.

use noisy_spins::bethe::{self, NewtonOptions};
use noisy_spins::params::stream_rng;
use noisy_spins::qme::{self, CorrelationTensor, DensityMatrix};
use noisy_spins::spinalg::Basis;
use noisy_spins::{asymptotics, liouvillian, linalg, trajectories, validation, ComplexVector, ModelParams, C64};
use rand::Rng;

/// Every converged multi-start solution is an ED eigenvalue, and together
/// they cover the sector.
#[test]
fn multi_start_solutions_are_ed_eigenvalues() {
    for g in [5.0, 50.0] {
        let p = ModelParams::uniform(3, 2.0, -6.0, g).unwrap();
        let sols = bethe::multi_start(&p, 3, 200, 7, &NewtonOptions::default()).unwrap();
        assert!(!sols.is_empty());
        let ed = liouvillian::sector_spectrum(&p, 0).unwrap();
        for s in &sols {
            let d = ed.iter().map(|z| (z - s.eigenvalue).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-8, "spurious Bethe eigenvalue {} (distance {d:.2e})", s.eigenvalue);
        }
        let string = bethe::continuation_string_state(&p, &[g]).unwrap().remove(0);
        assert!(sols.iter().any(|s| (s.eigenvalue - string.eigenvalue).norm() < 1e-8), "g = {g}: string state not found");
        // at n = 3 every sector eigenvalue is reached
        for z in &ed {
            assert!(sols.iter().any(|s| (s.eigenvalue - z).norm() < 1e-8), "g = {g}: ED eigenvalue {z} not reached");
        }
    }
}

/// Fewer roots than sites land in the sector `S^z_tot = m − n`.
#[test]
fn partial_root_sets_live_in_lower_sectors() {
    let p = ModelParams::new(0.4, vec![0.3, 1.1, 2.0], 2.0, 0.3).unwrap();
    let ed = liouvillian::sector_spectrum(&p, -1).unwrap();
    let sols = bethe::multi_start(&p, 2, 100, 3, &NewtonOptions::default()).unwrap();
    assert!(!sols.is_empty());
    for s in &sols {
        let d = ed.iter().map(|z| (z - s.eigenvalue).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-8, "m = 2 eigenvalue {} missing from sector −1 ({d:.2e})", s.eigenvalue);
    }
}

/// Correlators from the density-matrix evolution follow `exp(ℒt)` at finite
/// time, integrated independently in correlator space.
#[test]
fn finite_time_correlators_follow_the_liouvillian() {
    let mut rng = stream_rng(11, 0);
    let p = ModelParams::new(0.6, vec![0.2, -0.5], 0.8, 0.3).unwrap();
    let rho0 = DensityMatrix::random(2, &mut rng);
    let (t, dt) = (0.4, 1e-3);
    let block = |m: &DensityMatrix| {
        qme::rank_n_block(&CorrelationTensor::from_operator(m.mat()).unwrap(), &[0, 1], Basis::Cartesian).unwrap()
    };
    let target = block(&qme::evolve_rk4(&rho0, &p, t, dt).unwrap());
    let l = liouvillian::build(&p, Basis::Cartesian).unwrap().mat;
    let mut c: ComplexVector = block(&rho0);
    let h = faer::Scale(C64::new(dt, 0.0));
    for _ in 0..(t / dt).round() as usize {
        let k1 = &l * &c;
        let k2 = &l * (&c + &k1 * faer::Scale(C64::new(dt / 2.0, 0.0)));
        let k3 = &l * (&c + &k2 * faer::Scale(C64::new(dt / 2.0, 0.0)));
        let k4 = &l * (&c + &k3 * h);
        c = &c + (k1 + k2 * faer::Scale(C64::new(2.0, 0.0)) + k3 * faer::Scale(C64::new(2.0, 0.0)) + k4) * faer::Scale(C64::new(dt / 6.0, 0.0));
    }
    let rel = (&c - &target).norm_l2() / target.norm_l2();
    assert!(rel < 1e-9, "relative mismatch {rel:.2e}");
}

/// The antithetic drift estimate converges to the master-equation
/// right-hand side with an `O(dt)` bias.
#[test]
fn ito_drift_bias_halves_with_dt() {
    let mut rng = stream_rng(5, 0);
    let p = ModelParams::new(0.3, vec![0.7], 1.0, 0.5).unwrap();
    let rho = DensityMatrix::random(1, &mut rng);
    let coarse = trajectories::ito_drift_check(&rho, &p, 0.04, 400_000, 1).unwrap();
    let fine = trajectories::ito_drift_check(&rho, &p, 0.02, 400_000, 2).unwrap();
    assert!(coarse.norm() > 10.0 * coarse.max_stderr, "bias not resolved: {} vs {}", coarse.norm(), coarse.max_stderr);
    let ratio = coarse.norm() / fine.norm();
    assert!((1.6..2.4).contains(&ratio), "bias ratio {ratio}");
}

/// Sector-block and full-matrix routes agree on the string eigenvector.
#[test]
fn bethe_vector_in_full_and_sector_form() {
    let p = ModelParams::uniform(4, 2.0, -7.0, 30.0).unwrap();
    let sol = bethe::continuation_string_state(&p, &[30.0]).unwrap().remove(0);
    let full = liouvillian::build(&p, Basis::Spherical).unwrap();
    let block = liouvillian::build_sector(&p, 0).unwrap();
    assert!(bethe::verify_eigenpair(&full, &sol).unwrap() < 1e-9);
    assert!(bethe::verify_in_sector(&block, &sol).unwrap() < 1e-9);
}

/// Along the reference path the n = 60 string rate sits closer to the
/// large-n prediction than n = 8, which matches ED.
#[test]
fn finite_size_rates_approach_the_asymptote() {
    let inv_g = validation::default_inv_g_grid();
    let g_path: Vec<f64> = inv_g.iter().map(|x| 1.0 / x).collect();
    let newton = NewtonOptions::default();
    let r8 = validation::string_rates_per_spin(8, 2.0, &g_path, &newton).unwrap();
    let r60 = validation::string_rates_per_spin(60, 2.0, &g_path, &newton).unwrap();
    for (k, &g) in g_path.iter().enumerate() {
        let asym = asymptotics::solve_delta(2.0, g).unwrap().rate_per_spin();
        assert!((r60[k] - asym).abs() < (r8[k] - asym).abs(), "1/g = {}", inv_g[k]);
    }
    // ED at two points of the path
    for k in [0, g_path.len() - 1] {
        let p = ModelParams::uniform(8, 2.0, -11.0, g_path[k]).unwrap();
        let eigs = liouvillian::sector_spectrum(&p, 0).unwrap();
        let dom = liouvillian::dominant_eigenvalue(&eigs, 0.0).unwrap();
        assert!((-dom.re / 8.0 - r8[k]).abs() < 1e-6 * r8[k].abs().max(1e-12));
    }
}

/// Small-`1/g₊` linearity of the rate (finite n and the large-n formula).
#[test]
fn rate_is_linear_in_inverse_noise() {
    let inv_g = [0.001, 0.002, 0.003, 0.004, 0.005];
    let g_path: Vec<f64> = inv_g.iter().map(|x| 1.0 / x).collect();
    let rates = validation::string_rates_per_spin(8, 2.0, &g_path, &NewtonOptions::default()).unwrap();
    let asym: Vec<f64> = g_path.iter().map(|&g| asymptotics::solve_delta(2.0, g).unwrap().rate_per_spin()).collect();
    for y in [&rates, &asym] {
        let r2 = r_squared(&inv_g, y);
        assert!(r2 > 0.999, "R² = {r2}");
    }
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// The maximal multiplet eigenvalue grows like n².
#[test]
fn superradiant_rate_scales_quadratically() {
    let g = 3.0;
    for n in [4usize, 6, 8] {
        let top = liouvillian::omega_zero_spectrum(n, 0.0, g).unwrap().into_iter().map(|m| m.eigenvalue.re).fold(0.0, f64::min);
        assert!((top / (g * (n * (n + 1)) as f64) + 1.0).abs() < 1e-14);
    }
    let p = ModelParams::new(0.0, vec![0.0; 4], g, 0.0).unwrap();
    let ed = liouvillian::sector_spectrum(&p, 0).unwrap();
    let slowest_top = ed.iter().map(|z| z.re).fold(0.0, f64::min);
    assert!((slowest_top + 20.0 * g).abs() < 1e-10);
}

/// Conjugation-closed spectra pair up under the Hungarian matching even with
/// random detunings at the largest dense size.
#[test]
fn largest_dense_spectrum_is_conjugation_closed() {
    let mut rng = stream_rng(3, 0);
    let omega = (0..6).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let p = ModelParams::new(0.9, omega, 1.1, 0.4).unwrap();
    let eigs = liouvillian::full_spectrum_by_sectors(&p).unwrap().eigenvalues;
    assert_eq!(eigs.len(), 729);
    assert!(linalg::conjugation_defect(&eigs) < 1e-9);
}
