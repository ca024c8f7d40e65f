use gpcs::benchmark::{run_branin, BRANIN_MIN};
use gpcs::config::prior_a;
use gpcs::coverage::run_coverage;
use gpcs::{ExperimentConfig, ExperimentKind};

#[test]
fn well_specified_gp_band_pointwise_coverage() {
    let cfg = ExperimentConfig {
        true_prior: prior_a(),
        working_prior: prior_a(),
        replications: 500,
        plot_grid_size: 5,
        times: vec![5, 20],
        seeds: vec![3],
        ..ExperimentConfig::defaults(ExperimentKind::Coverage)
    };
    let out = run_coverage(&cfg).unwrap();
    assert_eq!(out.summary.n_failed, 0);
    for t in &cfg.times {
        for j in 0..cfg.plot_grid_size {
            let cell: Vec<_> = out
                .records
                .iter()
                .filter(|r| r.t == *t)
                .skip(j)
                .step_by(cfg.plot_grid_size)
                .collect();
            assert_eq!(cell.len(), 500);
            let covered = cell.iter().filter(|r| r.gp_covers()).count() as f64 / 500.0;
            assert!(covered >= 0.90, "t {t} x {} coverage {covered}", cell[0].x);
        }
    }
}

#[test]
fn empty_prefix_gives_prior_bands() {
    let cfg = ExperimentConfig {
        replications: 2,
        plot_grid_size: 10,
        times: vec![0, 3],
        ..ExperimentConfig::defaults(ExperimentKind::Coverage)
    };
    let out = run_coverage(&cfg).unwrap();
    for r in out.records.iter().filter(|r| r.t == 0) {
        assert_eq!(r.gp_mean, 0.0);
        assert!((r.cs_lo + r.cs_hi).abs() < 1e-12);
    }
}

#[test]
fn branin_best_so_far_is_plausible() {
    let cfg = ExperimentConfig {
        seeds: vec![0, 1],
        budget: 15,
        plot_grid_size: 20,
        ..ExperimentConfig::defaults(ExperimentKind::Branin)
    };
    let eta_star = cfg.true_noise_sd();
    let out = run_branin(&cfg).unwrap();
    assert_eq!(out.summary.optimum, Some(BRANIN_MIN));
    for pair in &out.pairs {
        for run in [&pair.gp_lcb, &pair.cs_lcb] {
            assert_eq!(run.steps.len(), 15);
            for w in run.steps.windows(2) {
                assert!(w[1].best_so_far <= w[0].best_so_far);
            }
            for s in &run.steps {
                assert!(s.best_so_far >= BRANIN_MIN - 3.0 * eta_star);
            }
        }
    }
}
