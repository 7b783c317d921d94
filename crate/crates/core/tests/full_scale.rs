//! Full-size designs against published reference values. Each takes
//! minutes on one core; run with `cargo test --test full_scale -- --ignored`.

use resizeboot_core::evalcov::{BaselineMode, BiasSdConfig};
use resizeboot_core::{
    baseline_bootstraps, estimate_gamma, fit_mle, resize, run_bias_sd_study, run_bootstrap, sloe_estimate, BootOptions,
    CurveOptions, DesignSpec, FitOptions, Sequential,
};

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn nearest_nonnull(beta: &[f64], magnitude: f64) -> usize {
    (0..beta.len())
        .filter(|&j| beta[j] != 0.0)
        .min_by(|&a, &b| (beta[a].abs() - magnitude).abs().total_cmp(&(beta[b].abs() - magnitude).abs()))
        .unwrap()
}

#[test]
#[ignore = "desk-scale: about 3 minutes"]
fn mvt_classical_standard_error_of_a_null() {
    let cfg = BiasSdConfig {
        reps: 100,
        gamma_sources: vec![],
        seed: 1,
        ..BiasSdConfig::new(DesignSpec::preset("mvt-large").unwrap())
    };
    let r = run_bias_sd_study(&cfg, &Sequential).unwrap();
    let nulls: Vec<f64> = r.rows.iter().filter(|c| c.beta == 0.0).map(|c| c.classical_sd).collect();
    let classical = nulls.iter().sum::<f64>() / nulls.len() as f64;
    let slope = r.empirical_slope.unwrap();
    println!("classical sd {classical:.4}, empirical bias {slope:.4}");
    assert!(within(classical, 1.232, 0.05), "classical sd {classical}");
    assert!(within(slope, 1.160, 0.03), "empirical bias {slope}");
}

#[test]
#[ignore = "desk-scale: several minutes"]
fn mvt_signal_strength_curve() {
    let mut spec = DesignSpec::preset("mvt-large").unwrap();
    spec.target_gamma = Some(2.0);
    let (mut etas, mut gammas) = (Vec::new(), Vec::new());
    for seed in 0..3 {
        spec.seed = seed;
        let sim = spec.simulate(0).unwrap();
        let fit = fit_mle(&sim.dataset, &FitOptions::default());
        etas.push(sloe_estimate(&sim.dataset, &fit).unwrap().eta_hat);
        let curve = estimate_gamma(&sim.dataset, &fit, &CurveOptions::default(), seed, &Sequential).unwrap();
        gammas.push(curve.gamma_hat().unwrap());
    }
    let eta = etas.iter().sum::<f64>() / 3.0;
    let gamma = gammas.iter().sum::<f64>() / 3.0;
    println!("eta_tilde {etas:?}, gamma_hat {gammas:?}");
    assert!(within(eta, 3.49, 0.10), "mean eta_tilde {eta}");
    assert!((gamma - 1.96).abs() <= 0.15, "mean gamma_hat {gamma}");
}

/// Resized estimates averaged over a few datasets rather than a full
/// study: at n = 4000 each repetition costs about a hundred fits.
#[test]
#[ignore = "desk-scale: about 8 minutes"]
fn mvt_resized_bias_and_sd() {
    let mut spec = DesignSpec::preset("mvt-large").unwrap();
    let (mut alphas, mut sigmas) = (Vec::new(), Vec::new());
    for seed in 10..15 {
        spec.seed = seed;
        let sim = spec.simulate(0).unwrap();
        let d = &sim.dataset;
        let fit = fit_mle(d, &FitOptions::default());
        let opts = CurveOptions { grid: 8, reps: 2, ..CurveOptions::default() };
        let curve = estimate_gamma(d, &fit, &opts, seed, &Sequential).unwrap();
        let resized = resize(&fit, curve.gamma_hat().unwrap(), d.x(), None).unwrap();
        let boot = run_bootstrap(d, &resized, 100, seed, &BootOptions::default(), &Sequential).unwrap();
        alphas.push(boot.alpha_hat);
        sigmas.push(boot.sigma_hat[nearest_nonnull(&sim.beta, 5.519)]);
    }
    let alpha = alphas.iter().sum::<f64>() / 5.0;
    let sigma = sigmas.iter().sum::<f64>() / 5.0;
    println!("alpha_hat {alphas:?}, sigma_hat {sigmas:?}");
    assert!(within(alpha, 1.159, 0.03), "mean alpha_hat {alpha}");
    assert!(within(sigma, 1.327, 0.03), "mean sigma_hat {sigma}");
}

#[test]
#[ignore = "desk-scale: about 10 minutes"]
fn intro_example_bootstraps() {
    let mut spec = DesignSpec::preset("mvt-large").unwrap();
    spec.seed = 3;
    let sim = spec.simulate(0).unwrap();
    let d = &sim.dataset;
    let j = nearest_nonnull(&sim.beta, 4.78);
    let sign = sim.beta[j].signum();
    let fit = fit_mle(d, &FitOptions::default());
    let curve = estimate_gamma(d, &fit, &CurveOptions::default(), 1, &Sequential).unwrap();
    let resized = resize(&fit, curve.gamma_hat().unwrap(), d.x(), None).unwrap();
    let b = 200;
    let ours = run_bootstrap(d, &resized, b, 2, &BootOptions::default(), &Sequential).unwrap();
    let opts = BootOptions { max_failure_frac: 0.5, ..BootOptions::default() };
    let param = baseline_bootstraps(d, &fit, b, BaselineMode::ParametricAtMle, 3, &opts, &Sequential).unwrap();
    let pairs = baseline_bootstraps(d, &fit, b, BaselineMode::Pairs, 4, &opts, &Sequential).unwrap();
    let m = |s: &resizeboot_core::BootstrapSummary| sign * s.beta_bar[j];
    println!(
        "beta_j {:.3}: resized {:.3} (sd {:.3}), parametric {:.3} (sd {:.3}), pairs {:.3} (sd {:.3})",
        sign * sim.beta[j],
        m(&ours),
        ours.sigma_hat[j],
        m(&param),
        param.sigma_hat[j],
        m(&pairs),
        pairs.sigma_hat[j]
    );
    assert!(within(m(&param), 8.68, 0.10));
    assert!(within(m(&pairs), 8.63, 0.10));
    assert!(within(m(&ours), 5.54, 0.10));
}

#[test]
#[ignore = "desk-scale: about 3 minutes"]
fn poisson_mle_is_nearly_unbiased() {
    let cfg = BiasSdConfig {
        reps: 100,
        gamma_sources: vec![],
        seed: 4,
        ..BiasSdConfig::new(DesignSpec::preset("poisson-large").unwrap())
    };
    let r = run_bias_sd_study(&cfg, &Sequential).unwrap();
    let slope = r.empirical_slope.unwrap();
    let classical = r.rows.iter().map(|c| c.classical_sd).sum::<f64>() / r.rows.len() as f64;
    let empirical = r.rows.iter().map(|c| c.empirical_sd).sum::<f64>() / r.rows.len() as f64;
    let gamma = DesignSpec::preset("poisson-large").unwrap();
    let gamma = gamma.population_gamma(&DesignSpec { seed: 4, ..gamma.clone() }.true_coefficients().unwrap());
    println!("empirical bias {slope:.4}, mean classical sd {classical:.4}, mean empirical sd {empirical:.4}, gamma {gamma:.3}");
    assert!((slope - 0.990).abs() <= 0.02);
    assert!(within(classical, 0.270, 0.05));
}
