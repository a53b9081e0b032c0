//! Closed-form moments against their Monte Carlo estimators on scenarios
//! large enough to make the agreement meaningful. The unit tests cover the
//! algebraic reductions; these runs are the statistical ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_kit::channel::PhaseShifts;
use ris_kit::closed_form::RateModel;
use ris_kit::ga::{self, GaConfig};
use ris_kit::monte_carlo::{approx_rate_mc, ergodic_rates_mc, moment_report};
use ris_kit::scenario::{AngleSet, Dimensions, FadingParams, LinkBudget, Scenario, ScenarioConfig};

fn reference_scenario(seed: u64) -> Scenario {
    ScenarioConfig::from_json_str(
        r#"{
            "M": 49, "N": 49, "K": 4,
            "delta": 1.0, "epsilon": 10.0,
            "p_dbm": 30.0, "sigma2_dbm": -104.0,
            "d_ui": 20.0, "d_ib": 1000.0
        }"#,
    )
    .unwrap()
    .build(Some(seed))
    .unwrap()
}

fn small_scenario(gamma: f64, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Scenario::from_parts(
        Dimensions::new(9, 4, 2).unwrap(),
        FadingParams {
            delta: 0.7,
            epsilon: vec![3.0, 1.5],
            alpha: vec![0.8, 1.2],
            beta: 0.9,
            gamma: vec![gamma, 1.3 * gamma],
        },
        AngleSet::draw(2, &mut rng),
        LinkBudget { p: vec![1.0, 1.5], sigma2: 0.2, spacing_ratio: 0.5 },
        None,
        seed,
    )
    .unwrap()
}

#[test]
fn combined_fourth_moment_matches_mc_on_reference_scenario() {
    // signal moment with phases aligned to user 0, 2e5 trials, 2% band
    let sc = reference_scenario(9);
    let model = RateModel::new(&sc);
    let phases = model.aligned_phases(0).unwrap();
    let report = moment_report(&sc, &phases, 200_000, 17).unwrap();
    for k in 0..sc.users() {
        let row = report
            .rows
            .iter()
            .find(|r| r.name == "combined_norm4" && r.k == k)
            .unwrap();
        let rel = (row.estimate.mean - row.prediction).abs() / row.prediction;
        assert!(rel < 0.02, "user {k}: relative gap {rel:.4}");
    }
}

#[test]
fn interference_moment_matches_mc_on_small_scenario() {
    let sc = small_scenario(0.5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let phases = PhaseShifts::uniform(4, &mut rng);
    let report = moment_report(&sc, &phases, 200_000, 5).unwrap();
    for row in report.rows.iter().filter(|r| r.name == "combined_pair_cross") {
        let rel = (row.estimate.mean - row.prediction).abs() / row.prediction;
        assert!(rel < 0.02, "pair ({},{:?}): relative gap {rel:.4}", row.k, row.i);
        assert!(row.z_score().abs() <= 4.0, "z = {}", row.z_score());
    }
}

#[test]
fn noise_moment_matches_mc_within_one_percent() {
    let sc = small_scenario(0.5, 7);
    let phases = PhaseShifts::zeros(4);
    let report = moment_report(&sc, &phases, 100_000, 13).unwrap();
    for row in report.rows.iter().filter(|r| r.name == "combined_norm2") {
        let rel = (row.estimate.mean - row.prediction).abs() / row.prediction;
        assert!(rel < 0.01, "user {}: relative gap {rel:.4}", row.k);
    }
}

#[test]
fn cascaded_moments_match_mc_with_blocked_direct_links() {
    // gamma = 0 collapses the combined moments onto the cascaded-only ones
    let sc = small_scenario(0.0, 19);
    let model = RateModel::new(&sc);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let phases = PhaseShifts::uniform(4, &mut rng);
    let report = moment_report(&sc, &phases, 200_000, 29).unwrap();
    for k in 0..2 {
        let moments = model.cascaded_moments(k, 1 - k, &phases).unwrap();
        let norm2 = report
            .rows
            .iter()
            .find(|r| r.name == "combined_norm2" && r.k == k)
            .unwrap();
        let norm4 = report
            .rows
            .iter()
            .find(|r| r.name == "combined_norm4" && r.k == k)
            .unwrap();
        let cross = report
            .rows
            .iter()
            .find(|r| r.name == "combined_pair_cross" && r.k == k)
            .unwrap();
        assert_eq!(norm2.prediction, moments.norm2);
        assert_eq!(norm4.prediction, moments.norm4);
        assert_eq!(cross.prediction, moments.cross);
        for (row, label) in [(norm2, "norm2"), (norm4, "norm4"), (cross, "cross")] {
            let rel = (row.estimate.mean - row.prediction).abs() / row.prediction;
            assert!(rel < 0.02, "user {k} {label}: relative gap {rel:.4}");
        }
    }
}

#[test]
fn closed_form_rate_tracks_mc_with_ga_phases() {
    // rate agreement at an optimized operating point, not just random ones
    let sc = reference_scenario(31);
    let ga_cfg = GaConfig { max_generations: Some(120), ..GaConfig::default() };
    let best = ga::run(&sc, &ga_cfg, 37).unwrap().best;
    let model = RateModel::new(&sc);
    let mc = ergodic_rates_mc(&sc, &best.phases, 10_000, 41).unwrap();
    for (k, est) in mc.iter().enumerate() {
        let cf = model.ergodic_rate(k, &best.phases).unwrap();
        let rel = (cf - est.mean).abs() / est.mean;
        assert!(rel < 0.03, "user {k}: closed form {cf:.4} vs mc {:.4} ({rel:.4})", est.mean);
    }
}

#[test]
fn moment_ratio_rate_agrees_with_closed_form_on_reference_scenario() {
    let sc = reference_scenario(43);
    let phases = PhaseShifts::uniform_from_seed(49, 47);
    let model = RateModel::new(&sc);
    let est = approx_rate_mc(&sc, &phases, 1, 10_000, 53).unwrap();
    let cf = model.ergodic_rate(1, &phases).unwrap();
    assert!(
        (est.mean - cf).abs() <= 2.0 * est.std_error,
        "approx {} vs closed form {cf} (se {})",
        est.mean,
        est.std_error
    );
}
