//! Acceptance suite. Each criterion prints one `[PASS]`/`[FAIL]` line; run
//! with `--nocapture` to see them all:
//!
//! ```text
//! cargo test -p gpcs --test acceptance -- --nocapture --test-threads 1
//! ```

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use gpcs::benchmark::{run_bo_compare, run_branin, BoOutput};
use gpcs::config::prior_b;
use gpcs::coverage::{run_coverage, run_noise_misspec, CoverageOutput};
use gpcs::output::{emit_bo, emit_coverage};
use gpcs::{ExperimentConfig, ExperimentKind};
use gpcs_core::bo::BoRun;
use gpcs_core::gp::{exact_log_ppr, log_likelihood, posterior_on_grid, prior_on_grid, Dataset, GpPosterior, GpPrior};
use gpcs_core::kernel::{kernel_matrix, NoiseModel, SeKernelParams};
use gpcs_core::linalg::{cholesky_with_jitter, log_mvn_density};
use gpcs_core::ratio_cs::ratio_gaussian;
use gpcs_core::Point;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration) {
    println!(
        "[{}] C{id:02} {name}: {detail} ({:.2} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn random_prior(rng: &mut ChaCha8Rng) -> GpPrior {
    GpPrior::new(
        SeKernelParams::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)).unwrap(),
        NoiseModel::new(rng.random_range(0.05..0.5)).unwrap(),
    )
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n).map(|_| vec![rng.random_range(-5.0..5.0)]).collect()
}

/// Draw `f` at `xs` from `prior`, then noisy observations of it.
fn random_dataset(rng: &mut ChaCha8Rng, prior: &GpPrior, xs: Vec<Point>) -> Dataset {
    let g = prior_on_grid(prior, &xs).unwrap();
    let f = gpcs_core::gp::sample_function(&g, rng).unwrap();
    let sd = prior.noise.std_dev();
    let ys = f.iter().map(|v| v + sd * rng.sample::<f64, _>(StandardNormal)).collect();
    Dataset::new(xs, ys).unwrap()
}

/// Orthonormal Hermite value `p_n(z)` and derivative `p_n'(z)`.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (PI.powf(-0.25), 0.0);
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j - 1) as f64 / j as f64).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss–Hermite nodes and weights for `∫ e^{-u²} h(u) du`: Golub–Welsch
/// starting points, then Newton-polished so the tail weights are accurate.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let mut rule: Vec<(f64, f64)> = jacobi
        .symmetric_eigenvalues()
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..20 {
                let (p, dp) = hermite_orthonormal(n, z);
                z -= p / dp;
            }
            let (_, dp) = hermite_orthonormal(n, z);
            (z, 2.0 / (dp * dp))
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// `E[h(Y)]` for `Y ~ N(mean, var)`.
fn gh_expectation(rule: &[(f64, f64)], mean: f64, var: f64, h: impl Fn(f64) -> f64) -> f64 {
    rule.iter()
        .map(|(u, w)| w * h(mean + (2.0 * var).sqrt() * u))
        .sum::<f64>()
        / PI.sqrt()
}

fn log_normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (y - mean).powi(2) / var)
}

#[test]
fn c01_gaussian_ratio_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut rejected = 0;
    let mut instance = 0;
    while instance < 50 {
        let gamma = if instance % 2 == 0 { 1e-2 } else { 1e-1 };
        let m = 1 + instance % 8;
        let prior = random_prior(&mut rng);
        let t = rng.random_range(1..=5);
        let xs = random_points(&mut rng, t);
        let data = random_dataset(&mut rng, &prior, xs);
        let grid = random_points(&mut rng, m);
        let post = posterior_on_grid(&prior, &data, &grid).unwrap();
        // Near-duplicate grid points make K_t so ill-conditioned that no
        // double-precision evaluation of either side reaches 1e-8.
        let eig = post.cov.clone().symmetric_eigenvalues();
        if eig.max() / eig.min() > 1e6 {
            rejected += 1;
            continue;
        }
        instance += 1;
        let widened = prior_on_grid(&prior.with_kernel(prior.kernel.widen(gamma).unwrap()), &grid).unwrap();
        let r = ratio_gaussian(&post, &widened).unwrap();
        let (fp, fw, fc) = (
            post.factor().unwrap(),
            widened.factor().unwrap(),
            cholesky_with_jitter(&r.sigma_c).unwrap(),
        );
        for _ in 0..20 {
            let f = gpcs_core::gp::sample_function(&post, &mut rng).unwrap();
            let lhs = log_mvn_density(&f, &post.mean, &fp).unwrap() - log_mvn_density(&f, &widened.mean, &fw).unwrap();
            let rhs = r.log_c + log_mvn_density(&f, &r.mu_c, &fc).unwrap();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-8 && elapsed < Duration::from_secs(5);
    report(
        1,
        "gaussian ratio identity",
        pass,
        &format!("max |err| = {worst:.3e} (< 1e-8), {rejected} draws with cond(K_t) > 1e6 redrawn"),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn c02_likelihood_ratio_unit_integral() {
    let start = Instant::now();
    let rule = gauss_hermite(64);
    let noise = NoiseModel::new(0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = rng.random_range(-1.0..1.0);
        let f = rng.random_range(-1.0..1.0);
        // E_{Y ~ N(f, η²)}[L(g)/L(f)]
        let integral = gh_expectation(&rule, f, noise.noise_variance, |y| {
            let d = Dataset::new(vec![vec![0.0]], vec![y]).unwrap();
            (log_likelihood(&[g], &d, &noise).unwrap() - log_likelihood(&[f], &d, &noise).unwrap()).exp()
        });
        worst = worst.max((integral - 1.0).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-6 && elapsed < Duration::from_secs(1);
    report(2, "likelihood ratio unit integral", pass, &format!("max |I - 1| = {worst:.3e} (< 1e-6)"), elapsed);
    assert!(pass);
}

#[test]
fn c03_prior_posterior_ratio_martingale() {
    let start = Instant::now();
    let rule = gauss_hermite(64);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let prior = random_prior(&mut rng);
        let xs = random_points(&mut rng, 8);
        let f_star = gpcs_core::gp::sample_function(&prior_on_grid(&prior, &xs).unwrap(), &mut rng).unwrap();
        let eta2 = prior.noise.noise_variance;
        let ys: Vec<f64> = f_star
            .iter()
            .map(|v| v + eta2.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let full = Dataset::new(xs.clone(), ys).unwrap();
        let f_vals: Vec<f64> = f_star.iter().copied().collect();
        for t in 1..=8 {
            let prev = full.prefix(t - 1);
            let r_prev = exact_log_ppr(&prior, &prev, &f_vals[..t - 1]).unwrap().exp();
            // Change of measure to a Gaussian 1.5x wider than the predictive law
            // of Y_t, which keeps the quadrature integrand smooth.
            let (m, v) = GpPosterior::fit(&prior, &prev).unwrap().marginals(&xs[t - 1..t]).unwrap();
            let (qm, qv) = (m[0], 1.5 * (v[0] + eta2));
            let expected = gh_expectation(&rule, qm, qv, |y| {
                let mut d = prev.clone();
                d.push(xs[t - 1].clone(), y).unwrap();
                let log_r = exact_log_ppr(&prior, &d, &f_vals[..t]).unwrap();
                (log_r + log_normal_pdf(y, f_vals[t - 1], eta2) - log_normal_pdf(y, qm, qv)).exp()
            });
            worst = worst.max((expected - r_prev).abs() / r_prev);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-5 && elapsed < Duration::from_secs(10);
    report(3, "PPR martingale", pass, &format!("max relative err = {worst:.3e} (< 1e-5)"), elapsed);
    assert!(pass);
}

#[test]
fn c04_posterior_schur_complement() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let prior = random_prior(&mut rng);
        let t = rng.random_range(1..=6);
        let m = rng.random_range(1..=8);
        let xs = random_points(&mut rng, t);
        let data = random_dataset(&mut rng, &prior, xs);
        let grid = random_points(&mut rng, m);
        let post = posterior_on_grid(&prior, &data, &grid).unwrap();

        // Schur complement of the Y block in the joint covariance of
        // (f(grid), Y), with the Y block solved by LU.
        let mut joint: Vec<Point> = grid.clone();
        joint.extend(data.xs().iter().cloned());
        let mut cov = kernel_matrix(&joint, &prior.kernel).unwrap();
        for i in m..m + t {
            cov[(i, i)] += prior.noise.noise_variance;
        }
        let s_gg = cov.view((0, 0), (m, m)).into_owned();
        let s_gy = cov.view((0, m), (m, t)).into_owned();
        let lu = cov.view((m, m), (t, t)).into_owned().lu();
        let resid = DVector::from_iterator(t, data.ys().iter().map(|y| y - prior.mean_value));
        let cond_mean = DVector::from_element(m, prior.mean_value) + &s_gy * lu.solve(&resid).unwrap();
        let cond_cov = &s_gg - &s_gy * lu.solve(&s_gy.transpose()).unwrap();

        worst = worst.max((&post.mean - cond_mean).amax()).max((&post.cov - cond_cov).amax());
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-8 && elapsed < Duration::from_secs(2);
    report(4, "posterior vs Schur complement", pass, &format!("max |err| = {worst:.3e} (< 1e-8)"), elapsed);
    assert!(pass);
}

fn figure_one() -> &'static (CoverageOutput, Duration) {
    static RUN: OnceLock<(CoverageOutput, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let out = run_coverage(&ExperimentConfig::defaults(ExperimentKind::Coverage)).unwrap();
        (out, start.elapsed())
    })
}

#[test]
fn c05_time_uniform_cs_coverage() {
    let (out, elapsed) = figure_one();
    let s = &out.summary;
    let pass = s.n_failed == 0 && s.n_replications == 500 && s.miscoverage_cs <= 0.08;
    report(
        5,
        "time-uniform CS coverage",
        pass,
        &format!("CS miscoverage = {:.4} over {} reps (<= 0.08)", s.miscoverage_cs, s.n_replications),
        *elapsed,
    );
    assert!(pass);
}

#[test]
fn c06_gp_band_fails_under_misspecification() {
    let (out, elapsed) = figure_one();
    let s = &out.summary;
    let pass = s.n_failed == 0 && s.miscoverage_gp >= 0.50;
    report(
        6,
        "GP band failure under misspecification",
        pass,
        &format!("GP miscoverage = {:.4} (>= 0.50)", s.miscoverage_gp),
        *elapsed,
    );
    assert!(pass);
}

fn noise_run(scale: f64, beta: f64) -> f64 {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::NoiseMisspec);
    cfg.true_noise_scale = scale;
    cfg.cs.beta_power = beta;
    cfg.replications = 300;
    let out = run_noise_misspec(&cfg).unwrap();
    assert_eq!(out.summary.n_failed, 0);
    out.summary.miscoverage_cs
}

#[test]
fn c07_powered_likelihood_repair() {
    let start = Instant::now();
    let full = noise_run(4.0, 1.0);
    let powered = noise_run(4.0, 0.75);
    let pass = powered < full && powered <= 0.15;
    report(
        7,
        "powered likelihood repair",
        pass,
        &format!("miscoverage beta=0.75: {powered:.4}, beta=1: {full:.4} (0.75 < 1 and 0.75 <= 0.15)"),
        start.elapsed(),
    );
    assert!(pass);
}

#[test]
fn c08_low_noise_robustness() {
    let start = Instant::now();
    let mis = noise_run(0.25, 1.0);
    let pass = mis <= 0.08;
    report(8, "low-noise robustness", pass, &format!("CS miscoverage = {mis:.4} (<= 0.08)"), start.elapsed());
    assert!(pass);
}

fn final_median(out: &BoOutput, method: &str) -> f64 {
    let m = out.summary.methods.iter().find(|m| m.method == method).unwrap();
    *m.best_so_far.median.last().unwrap()
}

#[test]
fn c09_branin_direction() {
    let start = Instant::now();
    let out = run_branin(&ExperimentConfig::defaults(ExperimentKind::Branin)).unwrap();
    assert_eq!(out.summary.n_failed, 0);
    let (gp, cs) = (final_median(&out, "gp_lcb"), final_median(&out, "cs_lcb"));
    let pass = cs <= gp;
    report(
        9,
        "Branin direction",
        pass,
        &format!("median best_so_far at step 50: cs_lcb {cs:.4}, gp_lcb {gp:.4} (cs <= gp)"),
        start.elapsed(),
    );
    assert!(pass);
}

fn first_hit(run: &BoRun, target: f64) -> Option<usize> {
    run.steps.iter().find(|s| s.best_so_far - target <= 0.1).map(|s| s.t)
}

#[test]
fn c10_well_specified_bo() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::BoCompare);
    cfg.true_prior = prior_b();
    cfg.working_prior = prior_b();
    let out = run_bo_compare(&cfg).unwrap();
    assert_eq!(out.summary.n_failed, 0);
    let mut both = 0;
    let mut gp_first = 0;
    for p in &out.pairs {
        let ok = |r: &BoRun| r.final_best().is_some_and(|b| b - p.grid_min <= 0.1);
        if ok(&p.gp_lcb) && ok(&p.cs_lcb) {
            both += 1;
        }
        let never = cfg.budget + 1;
        let gp = first_hit(&p.gp_lcb, p.grid_min).unwrap_or(never);
        let cs = first_hit(&p.cs_lcb, p.grid_min).unwrap_or(never);
        if gp <= cs && gp != never {
            gp_first += 1;
        }
    }
    let pass = both >= 7 && gp_first >= 5;
    report(
        10,
        "well-specified BO",
        pass,
        &format!("both within 0.1: {both}/10 (>= 7), GP-LCB no later: {gp_first}/10 (>= 5)"),
        start.elapsed(),
    );
    assert!(pass);
}

fn summary_without_duration(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("duration_s");
    v
}

#[test]
fn c11_determinism_across_worker_counts() {
    let start = Instant::now();
    let cov_cfg = ExperimentConfig {
        replications: 24,
        ..ExperimentConfig::defaults(ExperimentKind::Coverage)
    };
    let bo_cfg = ExperimentConfig {
        seeds: vec![0, 1, 2],
        budget: 8,
        ..ExperimentConfig::defaults(ExperimentKind::BoCompare)
    };
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1, 4]) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cov = run_coverage(&cov_cfg).unwrap();
            emit_coverage(&dir.path().join("cov"), &cov_cfg, &cov, Duration::ZERO).unwrap();
            let bo = run_bo_compare(&bo_cfg).unwrap();
            emit_bo(&dir.path().join("bo"), &bo_cfg, &bo, 1, Duration::ZERO).unwrap();
        });
    }
    let mut pass = true;
    for file in ["cov/coverage.csv", "bo/bo_runs.csv"] {
        pass &= fs::read(dirs[0].path().join(file)).unwrap() == fs::read(dirs[1].path().join(file)).unwrap();
    }
    for file in ["cov/summary.json", "bo/summary.json"] {
        pass &= summary_without_duration(&dirs[0].path().join(file))
            == summary_without_duration(&dirs[1].path().join(file));
    }
    report(
        11,
        "determinism",
        pass,
        "CSV and summaries identical with 1 and 4 workers",
        start.elapsed(),
    );
    assert!(pass);
}
