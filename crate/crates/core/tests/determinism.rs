//! Bitwise reproducibility: identical inputs must give identical outputs
//! regardless of execution strategy or rayon pool size. The fixed-block
//! reduction and per-trial substreams make this exact, not approximate.

use ris_kit::channel::PhaseShifts;
use ris_kit::exec::Exec;
use ris_kit::ga::{self, GaConfig};
use ris_kit::monte_carlo::{
    ergodic_rates_mc_with, moment_report_with, random_phase_sum_rate_with,
};
use ris_kit::scenario::ScenarioConfig;
use ris_kit::sweep::{rows_to_csv, run_sweep, SweepMode, SweepOptions, SweepSpec, SweepVariable};

fn config() -> ScenarioConfig {
    ScenarioConfig::from_json_str(
        r#"{
            "M": 16, "N": 16, "K": 3,
            "delta": 0.8, "epsilon": [2.0, 3.0, 4.0],
            "p_dbm": 10.0, "sigma2_dbm": -40.0,
            "d_ui": 15.0, "d_ib": 300.0,
            "seed": 5
        }"#,
    )
    .unwrap()
}

#[cfg(feature = "parallel")]
#[test]
fn moment_report_is_bitwise_identical_across_exec_modes() {
    let sc = config().build(None).unwrap();
    let phases = PhaseShifts::uniform_from_seed(16, 9);
    let seq = moment_report_with(&sc, &phases, 30_000, 7, Exec::Sequential).unwrap();
    let par = moment_report_with(&sc, &phases, 30_000, 7, Exec::Parallel).unwrap();
    assert_eq!(seq.to_csv(), par.to_csv());
    for (a, b) in seq.rows.iter().zip(par.rows.iter()) {
        assert_eq!(a.estimate.mean.to_bits(), b.estimate.mean.to_bits());
        assert_eq!(a.estimate.std_error.to_bits(), b.estimate.std_error.to_bits());
    }
}

#[cfg(feature = "parallel")]
#[test]
fn results_do_not_depend_on_pool_size() {
    let sc = config().build(None).unwrap();
    let phases = PhaseShifts::uniform_from_seed(16, 11);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let rates = ergodic_rates_mc_with(&sc, &phases, 20_000, 13, Exec::Parallel).unwrap();
            let random = random_phase_sum_rate_with(&sc, 64, 17, Exec::Parallel).unwrap();
            let ga = ga::run_with(
                &sc,
                &GaConfig {
                    population: 20,
                    elites: 2,
                    culled: 4,
                    parents: 28,
                    crossover_offspring: 14,
                    mutation_prob: 0.1,
                    max_generations: Some(8),
                    stagnation_window: None,
                },
                19,
                Exec::Parallel,
                0,
            )
            .unwrap();
            (
                rates.iter().map(|e| e.mean.to_bits()).collect::<Vec<_>>(),
                random.mean.to_bits(),
                ga.best.fitness.to_bits(),
            )
        })
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
}

#[cfg(feature = "parallel")]
#[test]
fn sweep_csv_is_identical_across_exec_modes() {
    let spec = SweepSpec {
        variable: SweepVariable::TransmitPowerDbm,
        values: vec![0.0, 10.0],
        modes: vec![SweepMode::OptimalGa, SweepMode::RandomPhase, SweepMode::NoRis, SweepMode::McCheck],
        joint_mn: false,
    };
    let ga = GaConfig {
        population: 12,
        elites: 2,
        culled: 2,
        parents: 16,
        crossover_offspring: 8,
        mutation_prob: 0.1,
        max_generations: Some(4),
        stagnation_window: None,
    };
    let mk_opts = |exec| SweepOptions { trials: 2_000, phase_draws: 16, ga: ga.clone(), exec };
    let seq = run_sweep(&config(), &spec, 23, &mk_opts(Exec::Sequential)).unwrap();
    let par = run_sweep(&config(), &spec, 23, &mk_opts(Exec::Parallel)).unwrap();
    assert_eq!(rows_to_csv(&seq), rows_to_csv(&par));
}

#[test]
fn sequential_reruns_are_bitwise_identical() {
    let sc = config().build(None).unwrap();
    let phases = PhaseShifts::uniform_from_seed(16, 29);
    let a = moment_report_with(&sc, &phases, 5_000, 31, Exec::Sequential).unwrap();
    let b = moment_report_with(&sc, &phases, 5_000, 31, Exec::Sequential).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}
