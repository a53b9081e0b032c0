//! `ris-kit` — batch experiment driver for statistical-CSI RIS-aided
//! massive MIMO studies.
//!
//! Subcommands:
//!
//! * `rate` — closed-form per-user rate breakdown for one phase
//!   configuration
//! * `validate` — Monte Carlo moment suite vs. closed-form predictions
//! * `optimize` — GA phase design; writes the phase vector and a trace CSV
//! * `sweep` — parameter sweep producing plot-ready CSV rows
//! * `random-baseline` — closed-form rate averaged over random phase draws
//!
//! Exit codes: 0 success, 1 validation failure (a moment estimate
//! disagreed with its prediction), 2 config or usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ris_kit::channel::PhaseShifts;
use ris_kit::closed_form::{rate_no_ris, RateModel};
use ris_kit::error::Error;
use ris_kit::exec::mix_seed;
use ris_kit::ga::{self, GaConfig};
use ris_kit::monte_carlo::{moment_report, random_phase_rate, random_phase_sum_rate, DEFAULT_Z_MAX};
use ris_kit::scenario::{Scenario, ScenarioConfig};
use ris_kit::sweep::{run_sweep, rows_to_csv, SweepOptions, SweepSpec};

#[derive(Parser)]
#[command(name = "ris-kit", version, about = "Statistical-CSI RIS-aided massive MIMO toolkit")]
struct Cli {
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's `seed` field.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file path (command-specific payload).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print machine-readable CSV to stdout instead of the table view.
    #[arg(long, global = true)]
    csv: bool,

    /// Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form rate breakdown for one phase configuration.
    Rate {
        /// Phase source: zeros | aligned:<user> | random:<seed> | file:<path>.
        #[arg(long, default_value = "zeros")]
        phases: String,
    },
    /// Estimate every supporting moment by Monte Carlo and compare with the
    /// closed-form predictions (|z| <= 4 must hold for every row).
    Validate {
        /// Test hook: scale the signal-moment predictions to force a
        /// detectable mismatch.
        #[arg(long, default_value_t = 1.0, hide = true)]
        corrupt_signal: f64,
    },
    /// GA phase design; writes the best phase vector (--out) and a trace CSV.
    Optimize(OptimizeArgs),
    /// Parameter sweep over power, element counts, or RIS-BS distance.
    Sweep {
        /// Sweep spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Phase draws for the random_phase mode.
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// GA generations per point (default: 20 per RIS element).
        #[arg(long)]
        generations: Option<usize>,
        /// Use the full GA budget (100 generations per RIS element).
        #[arg(long, conflicts_with = "generations")]
        full_ga: bool,
    },
    /// Average closed-form rate under uniformly random phases.
    RandomBaseline {
        /// Number of phase draws.
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    /// Generation budget (default: 100 per RIS element).
    #[arg(long)]
    generations: Option<usize>,
    /// Population size.
    #[arg(long)]
    population: Option<usize>,
    /// Per-gene mutation probability.
    #[arg(long)]
    mutation_prob: Option<f64>,
    /// Stop after this many generations without improvement.
    #[arg(long)]
    stagnation: Option<usize>,
    /// Trace CSV path.
    #[arg(long, default_value = "optimize.trace.csv")]
    trace: PathBuf,
    /// Snapshot the best chromosome every this many generations in the
    /// trace (0 = never).
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Phase draws for the random-phase baseline printed alongside.
    #[arg(long, default_value_t = 200)]
    draws: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(code) = init_thread_pool() {
        return code;
    }
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

/// Honors `RIS_KIT_THREADS` as a cap on the rayon worker count.
fn init_thread_pool() -> Result<(), ExitCode> {
    if let Ok(raw) = std::env::var("RIS_KIT_THREADS") {
        let n: usize = match raw.trim().parse() {
            Ok(n) if n >= 1 => n,
            _ => {
                eprintln!("error: RIS_KIT_THREADS must be a positive integer, got {raw:?}");
                return Err(ExitCode::from(2));
            }
        };
        #[cfg(feature = "parallel")]
        {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: cannot configure {n} worker threads: {e}");
                return Err(ExitCode::from(2));
            }
        }
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match &cli.cmd {
        Cmd::Rate { phases } => cmd_rate(&cli, phases),
        Cmd::Validate { corrupt_signal } => cmd_validate(&cli, *corrupt_signal),
        Cmd::Optimize(args) => cmd_optimize(&cli, args),
        Cmd::Sweep { spec, draws, generations, full_ga } => {
            cmd_sweep(&cli, spec, *draws, *generations, *full_ga)
        }
        Cmd::RandomBaseline { draws } => cmd_random_baseline(&cli, *draws),
    }
}

fn load_scenario(cli: &Cli) -> anyhow::Result<(Scenario, ScenarioConfig, u64)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let config = ScenarioConfig::from_path(path)?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let scenario = config.build(Some(seed))?;
    Ok((scenario, config, seed))
}

fn parse_phases(source: &str, scenario: &Scenario, model: &RateModel) -> anyhow::Result<PhaseShifts> {
    let n = scenario.dims.n;
    if source == "zeros" {
        return Ok(PhaseShifts::zeros(n));
    }
    if let Some(user) = source.strip_prefix("aligned:") {
        let user: usize = user
            .parse()
            .map_err(|_| Error::Usage(format!("aligned:<user> needs a 1-based user index, got {source:?}")))?;
        if user == 0 || user > scenario.users() {
            return Err(Error::IndexOutOfRange(format!("user {user} not in 1..={}", scenario.users())).into());
        }
        return Ok(model.aligned_phases(user - 1)?);
    }
    if let Some(seed) = source.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Usage(format!("random:<seed> needs an integer seed, got {source:?}")))?;
        return Ok(PhaseShifts::uniform_from_seed(n, seed));
    }
    if let Some(path) = source.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read phases file {path}: {e}")))?;
        let phases = PhaseShifts::from_text(&text)?;
        if phases.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "phases file has {} entries, RIS has {n} elements",
                phases.len()
            ))
            .into());
        }
        return Ok(phases);
    }
    Err(Error::Usage(format!("unknown phase source {source:?} (expected zeros | aligned:<user> | random:<seed> | file:<path>)")).into())
}

fn write_or_print(out: &Option<PathBuf>, csv: bool, payload: &str, human: &str) -> anyhow::Result<()> {
    if let Some(path) = out {
        std::fs::write(path, payload)?;
        println!("wrote {}", path.display());
    }
    if csv {
        print!("{payload}");
    } else {
        print!("{human}");
    }
    Ok(())
}

fn cmd_rate(cli: &Cli, phases_source: &str) -> anyhow::Result<ExitCode> {
    let (scenario, _, _) = load_scenario(cli)?;
    let model = RateModel::new(&scenario);
    let phases = parse_phases(phases_source, &scenario, &model)?;
    let breakdown = model.rate_breakdown(&phases)?;

    let mut csv = String::from("k,signal,weighted_interference,noise,sinr,rate\n");
    let mut human = format!(
        "closed-form rate breakdown (M={}, N={}, K={}, phases={})\n",
        scenario.dims.m, scenario.dims.n, scenario.users(), phases_source
    );
    for k in 0..scenario.users() {
        let interference = breakdown.weighted_interference(k, &scenario.budget.p);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k + 1,
            breakdown.signal[k],
            interference,
            breakdown.noise[k],
            breakdown.sinr[k],
            breakdown.rate[k]
        ));
        human.push_str(&format!(
            "  user {}: signal {:.6e}  interference {:.6e}  noise {:.6e}  sinr {:.4e}  rate {:.4} bits/s/Hz\n",
            k + 1,
            breakdown.signal[k],
            interference,
            breakdown.noise[k],
            breakdown.sinr[k],
            breakdown.rate[k]
        ));
    }
    csv.push_str(&format!("sum,,,,,{}\n", breakdown.sum_rate()));
    human.push_str(&format!("  sum rate: {:.4} bits/s/Hz\n", breakdown.sum_rate()));
    write_or_print(&cli.out, cli.csv, &csv, &human)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(cli: &Cli, corrupt_signal: f64) -> anyhow::Result<ExitCode> {
    let (scenario, _, seed) = load_scenario(cli)?;
    let trials = cli.trials.unwrap_or(200_000);
    let phases = PhaseShifts::zeros(scenario.dims.n);
    let mut report = moment_report(&scenario, &phases, trials, mix_seed(seed, 0x4d43))?;
    if corrupt_signal != 1.0 {
        for row in report.rows.iter_mut().filter(|r| r.name == "combined_norm4") {
            row.prediction *= corrupt_signal;
        }
    }

    let csv = report.to_csv();
    let mut human = format!("moment validation: {} rows, {} trials\n", report.rows.len(), trials);
    for row in &report.rows {
        let i = row.i.map(|i| format!(",{}", i + 1)).unwrap_or_default();
        human.push_str(&format!(
            "  {:<28} k={}{:<3} estimate {:.6e}  predicted {:.6e}  z {:+.2}\n",
            row.name,
            row.k + 1,
            i,
            row.estimate.mean,
            row.prediction,
            row.z_score()
        ));
    }
    let failures = report.failures(DEFAULT_Z_MAX);
    if failures.is_empty() {
        human.push_str(&format!("PASS: all |z| <= {DEFAULT_Z_MAX}\n"));
    } else {
        human.push_str(&format!("FAIL: {} rows with |z| > {DEFAULT_Z_MAX}\n", failures.len()));
    }
    write_or_print(&cli.out, cli.csv, &csv, &human)?;
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_optimize(cli: &Cli, args: &OptimizeArgs) -> anyhow::Result<ExitCode> {
    let (scenario, _, seed) = load_scenario(cli)?;
    let mut ga_cfg = GaConfig {
        max_generations: args.generations,
        stagnation_window: args.stagnation,
        ..GaConfig::default()
    };
    if let Some(pop) = args.population {
        // keep the split proportions of the default config
        ga_cfg.population = pop;
        ga_cfg.elites = (pop / 20).max(1);
        ga_cfg.culled = pop / 5;
        ga_cfg.crossover_offspring = pop - ga_cfg.elites - ga_cfg.culled;
        ga_cfg.parents = 2 * ga_cfg.crossover_offspring;
    }
    if let Some(p) = args.mutation_prob {
        ga_cfg.mutation_prob = p;
    }
    ga_cfg.validate()?;

    let run = ga::run_with(
        &scenario,
        &ga_cfg,
        mix_seed(seed, 0x4741),
        ris_kit::Exec::default(),
        args.snapshot_every,
    )?;

    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("optimize.phases.txt"));
    std::fs::write(&out, run.best.phases.to_text())?;
    std::fs::write(&args.trace, run.trace.to_csv())?;

    let baseline_random = random_phase_sum_rate(&scenario, args.draws, mix_seed(seed, 0x7270))?;
    let baseline_no_ris: f64 = (0..scenario.users())
        .map(|k| rate_no_ris(&scenario, k))
        .sum::<ris_kit::Result<f64>>()?;
    println!(
        "GA sum rate: {:.4} bits/s/Hz over {} generations",
        run.best.fitness,
        run.trace.rows.len() - 1
    );
    println!("random-phase baseline: {:.4} bits/s/Hz ({} draws)", baseline_random.mean, args.draws);
    println!("no-RIS baseline: {baseline_no_ris:.4} bits/s/Hz");
    println!("wrote {} and {}", out.display(), args.trace.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(
    cli: &Cli,
    spec_path: &Path,
    draws: usize,
    generations: Option<usize>,
    full_ga: bool,
) -> anyhow::Result<ExitCode> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let config = ScenarioConfig::from_path(path)?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let spec = SweepSpec::from_path(spec_path)?;

    let mut opts = SweepOptions {
        phase_draws: draws,
        ..Default::default()
    };
    if let Some(t) = cli.trials {
        opts.trials = t;
    }
    // default GA budget inside sweeps is the reduced 20 generations per
    // element; --full-ga restores 100 per element
    if let Some(g) = generations {
        opts.ga.max_generations = Some(g);
    } else if full_ga {
        opts.ga.max_generations = Some(100 * config.n);
    }

    let rows = run_sweep(&config, &spec, seed, &opts)?;
    let csv = rows_to_csv(&rows);
    let mut human = format!("sweep over {} ({} points)\n", spec.variable.as_str(), rows.len());
    for row in &rows {
        human.push_str(&format!("  {} = {}:", spec.variable.as_str(), row.value));
        if let Some(v) = row.optimal_ga {
            human.push_str(&format!("  optimal_ga {v:.4}"));
        }
        if let Some(v) = row.random_phase {
            human.push_str(&format!("  random_phase {v:.4}"));
        }
        if let Some(v) = row.no_ris {
            human.push_str(&format!("  no_ris {v:.4}"));
        }
        if let (Some(m), Some(s)) = (row.mc_mean, row.mc_std_error) {
            human.push_str(&format!("  mc {m:.4}±{s:.4}"));
        }
        human.push_str(&format!("  [{:.2}s]\n", row.wall_secs));
    }
    write_or_print(&cli.out, cli.csv, &csv, &human)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_random_baseline(cli: &Cli, draws: usize) -> anyhow::Result<ExitCode> {
    let (scenario, _, seed) = load_scenario(cli)?;
    let mut csv = String::from("k,mean_rate,std_error,draws\n");
    let mut human = format!("random-phase baseline over {draws} draws\n");
    for k in 0..scenario.users() {
        let est = random_phase_rate(&scenario, k, draws, mix_seed(seed, 0x7270))?;
        csv.push_str(&format!("{},{},{},{}\n", k + 1, est.mean, est.std_error, est.trials));
        human.push_str(&format!(
            "  user {}: {:.4} ± {:.4} bits/s/Hz\n",
            k + 1,
            est.mean,
            est.std_error
        ));
    }
    let sum = random_phase_sum_rate(&scenario, draws, mix_seed(seed, 0x7270))?;
    csv.push_str(&format!("sum,{},{},{}\n", sum.mean, sum.std_error, sum.trials));
    human.push_str(&format!("  sum: {:.4} ± {:.4} bits/s/Hz\n", sum.mean, sum.std_error));
    write_or_print(&cli.out, cli.csv, &csv, &human)?;
    Ok(ExitCode::SUCCESS)
}
