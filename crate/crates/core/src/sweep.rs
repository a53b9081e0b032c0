//! Parameter sweeps: rebuild the scenario along one axis and evaluate the
//! requested operating modes at every point, producing plot-ready rows.
//!
//! Points run concurrently (each builds its own scenario and derives its own
//! sub-seeds), but rows are returned — and written — in spec order, so output
//! files are identical at any worker count.

use serde::{Deserialize, Serialize};

use crate::closed_form::rate_no_ris;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, mix_seed, Exec};
use crate::ga::{self, GaConfig};
use crate::monte_carlo::{ergodic_rates_mc_with, random_phase_sum_rate_with};
use crate::scenario::{build_scenario, Scenario, ScenarioConfig};

/// Which scenario knob the sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "transmit_power_dbm")]
    TransmitPowerDbm,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "d_ib")]
    DIb,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::TransmitPowerDbm => "transmit_power_dbm",
            SweepVariable::M => "M",
            SweepVariable::N => "N",
            SweepVariable::DIb => "d_ib",
        }
    }
}

/// Operating modes evaluated at each sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// GA-optimized phases (reduced generation budget by default).
    #[serde(rename = "optimal_ga")]
    OptimalGa,
    /// Closed-form sum rate averaged over uniform phase draws.
    #[serde(rename = "random_phase")]
    RandomPhase,
    /// Baseline without an RIS.
    #[serde(rename = "no_ris")]
    NoRis,
    /// Monte Carlo sum rate at the point's reference phases (the GA result
    /// when `optimal_ga` is also requested, zero phases otherwise).
    #[serde(rename = "mc_check")]
    McCheck,
}

/// Sweep description (JSON).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub modes: Vec<SweepMode>,
    /// For `M`/`N` sweeps: set both counts to the swept value (the joint
    /// M = N axis).
    #[serde(default)]
    pub joint_mn: bool,
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks values before any point runs: nonempty, strictly increasing,
    /// and (for element sweeps) integral perfect squares.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Validation("sweep needs at least one value".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Validation("sweep needs at least one mode".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("sweep values must be strictly increasing".into()));
        }
        if matches!(self.variable, SweepVariable::M | SweepVariable::N) {
            for &v in &self.values {
                let as_count = count_value(v)?;
                let side = as_count.isqrt();
                if side * side != as_count {
                    return Err(Error::Validation(format!("sweep value {v} is not a perfect square")));
                }
            }
        }
        if matches!(self.variable, SweepVariable::DIb) && self.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::Validation("d_ib sweep values must be positive".into()));
        }
        Ok(())
    }
}

fn count_value(v: f64) -> Result<usize> {
    if !v.is_finite() || v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Validation(format!("sweep value {v} is not a positive integer")));
    }
    Ok(v as usize)
}

/// Knobs for the per-point evaluations.
#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Monte Carlo trials for `mc_check`.
    pub trials: usize,
    /// Phase draws for `random_phase`.
    pub phase_draws: usize,
    /// GA settings for `optimal_ga`; `max_generations: None` here means the
    /// reduced 20·N sweep budget (use [`GaConfig::default`] directly for
    /// the full 100·N run).
    pub ga: GaConfig,
    pub exec: Exec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { trials: 10_000, phase_draws: 100, ga: GaConfig::default(), exec: Exec::default() }
    }
}

/// One sweep point. `wall_secs` is informational only and is excluded from
/// the CSV so output files stay byte-identical across reruns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub optimal_ga: Option<f64>,
    pub random_phase: Option<f64>,
    pub no_ris: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_std_error: Option<f64>,
    pub seed: u64,
    pub wall_secs: f64,
}

/// Applies a sweep value to a copy of the base config.
pub fn apply_variable(base: &ScenarioConfig, spec: &SweepSpec, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match spec.variable {
        SweepVariable::TransmitPowerDbm => {
            cfg.p_dbm = crate::scenario::PerUser::Same(value);
        }
        SweepVariable::M => {
            cfg.m = count_value(value)?;
            if spec.joint_mn {
                cfg.n = cfg.m;
            }
        }
        SweepVariable::N => {
            cfg.n = count_value(value)?;
            if spec.joint_mn {
                cfg.m = cfg.n;
            }
        }
        SweepVariable::DIb => {
            if cfg.d_ui.is_none() || cfg.d_ib.is_none() {
                return Err(Error::Config(
                    "d_ib sweeps need the geometric path-loss route (d_ui and d_ib) in the base config".into(),
                ));
            }
            cfg.d_ib = Some(value);
        }
    }
    Ok(cfg)
}

fn sum_rate_no_ris(sc: &Scenario) -> Result<f64> {
    (0..sc.users()).map(|k| rate_no_ris(sc, k)).sum()
}

/// Runs every sweep point and returns rows in spec order. The scenario at
/// each point is rebuilt with the same master seed (identical angles along
/// the sweep); GA, phase-draw, and Monte Carlo sub-seeds are derived per
/// point.
pub fn run_sweep(
    base: &ScenarioConfig,
    spec: &SweepSpec,
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    opts.ga.validate()?;
    // fail fast on config problems before spending time on any point
    for &value in &spec.values {
        let cfg = apply_variable(base, spec, value)?;
        build_scenario(&cfg, seed)?;
    }

    let rows = map_indexed(opts.exec, spec.values.len(), |idx| -> Result<ResultRow> {
        let start = std::time::Instant::now();
        let value = spec.values[idx];
        let cfg = apply_variable(base, spec, value)?;
        let sc = build_scenario(&cfg, seed)?;

        let mut row = ResultRow {
            variable: spec.variable,
            value,
            optimal_ga: None,
            random_phase: None,
            no_ris: None,
            mc_mean: None,
            mc_std_error: None,
            seed,
            wall_secs: 0.0,
        };

        let mut ga_phases = None;
        if spec.modes.contains(&SweepMode::OptimalGa) {
            let mut ga_cfg = opts.ga.clone();
            if ga_cfg.max_generations.is_none() {
                ga_cfg.max_generations = Some(20 * sc.dims.n);
            }
            let ga_seed = mix_seed(seed, 0x6741_0000 + idx as u64);
            let run = ga::run_with(&sc, &ga_cfg, ga_seed, opts.exec, 0)?;
            row.optimal_ga = Some(run.best.fitness);
            ga_phases = Some(run.best.phases);
        }
        if spec.modes.contains(&SweepMode::RandomPhase) {
            let phase_seed = mix_seed(seed, 0x7270_0000 + idx as u64);
            let est = random_phase_sum_rate_with(&sc, opts.phase_draws, phase_seed, opts.exec)?;
            row.random_phase = Some(est.mean);
        }
        if spec.modes.contains(&SweepMode::NoRis) {
            row.no_ris = Some(sum_rate_no_ris(&sc)?);
        }
        if spec.modes.contains(&SweepMode::McCheck) {
            let phases = ga_phases.unwrap_or_else(|| crate::channel::PhaseShifts::zeros(sc.dims.n));
            let mc_seed = mix_seed(seed, 0x6d63_0000 + idx as u64);
            let per_user = ergodic_rates_mc_with(&sc, &phases, opts.trials, mc_seed, opts.exec)?;
            let mean: f64 = per_user.iter().map(|e| e.mean).sum();
            let var: f64 = per_user.iter().map(|e| e.std_error * e.std_error).sum();
            row.mc_mean = Some(mean);
            row.mc_std_error = Some(var.sqrt());
        }
        row.wall_secs = start.elapsed().as_secs_f64();
        Ok(row)
    });
    rows.into_iter().collect()
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with a stable schema; absent modes leave their column empty.
/// Wall-clock time is intentionally not part of the file.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("variable,value,optimal_ga,random_phase,no_ris,mc_mean,mc_std_error,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.variable.as_str(),
            r.value,
            opt_str(r.optimal_ga),
            opt_str(r.random_phase),
            opt_str(r.no_ris),
            opt_str(r.mc_mean),
            opt_str(r.mc_std_error),
            r.seed
        ));
    }
    out
}
