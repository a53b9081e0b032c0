//! Monte Carlo ground truth: ergodic-rate estimation and every supporting
//! moment identity, with standard errors, for validating the closed forms.
//!
//! Trials draw from substreams keyed by `(seed, trial index)` and are
//! combined by a fixed-tree reduction: trials are summed sequentially
//! inside fixed 1024-trial blocks and block sums are folded in block order.
//! Parallel and sequential runs therefore agree bit-for-bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{cascaded, ChannelRealization, ChannelSampler, PhaseShifts};
use crate::closed_form::RateModel;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::scenario::Scenario;

/// Trials per reduction block; fixed so the reduction tree (and thus the
/// floating-point result) is independent of the worker count.
const BLOCK_TRIALS: usize = 1024;

/// Default |z| threshold for flagging a moment estimate against its
/// closed-form prediction.
pub const DEFAULT_Z_MAX: f64 = 4.0;

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Sum / sum-of-squares accumulator with the fixed-tree reduction.
struct Accum {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    count: u64,
}

impl Accum {
    fn new(len: usize) -> Self {
        Accum { sum: vec![0.0; len], sumsq: vec![0.0; len], count: 0 }
    }

    fn add(&mut self, stats: &[f64]) {
        for (j, &x) in stats.iter().enumerate() {
            self.sum[j] += x;
            self.sumsq[j] += x * x;
        }
        self.count += 1;
    }

    fn merge(&mut self, other: Accum) {
        for j in 0..self.sum.len() {
            self.sum[j] += other.sum[j];
            self.sumsq[j] += other.sumsq[j];
        }
        self.count += other.count;
    }

    fn estimate(&self, j: usize) -> McEstimate {
        let t = self.count as f64;
        let mean = self.sum[j] / t;
        let var = if self.count > 1 {
            ((self.sumsq[j] - t * mean * mean) / (t - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate { mean, std_error: (var / t).sqrt(), trials: self.count }
    }
}

/// Runs `per_trial` for `0..trials`, filling a `stats_len` scratch row per
/// trial, reduced deterministically.
fn accumulate<F>(exec: Exec, trials: usize, stats_len: usize, per_trial: F) -> Accum
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let partials = map_indexed(exec, blocks, |b| {
        let start = b * BLOCK_TRIALS;
        let end = (start + BLOCK_TRIALS).min(trials);
        let mut acc = Accum::new(stats_len);
        let mut scratch = vec![0.0; stats_len];
        for t in start..end {
            scratch.fill(0.0);
            per_trial(t, &mut scratch);
            acc.add(&scratch);
        }
        acc
    });
    let mut total = Accum::new(stats_len);
    for p in partials {
        total.merge(p);
    }
    total
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Instantaneous SINR of user `k` under MRC on the combined channels:
/// `p_k ‖u_k‖⁴ / (Σ_{i≠k} p_i |u_k^H u_i|² + σ² ‖u_k‖²)` with
/// `u_k = g_k + d_k`; an all-zero `u_k` returns 0.
pub fn instantaneous_sinr(
    real: &ChannelRealization,
    phases: &PhaseShifts,
    sc: &Scenario,
    k: usize,
) -> Result<f64> {
    if k >= sc.users() {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={})", sc.users())));
    }
    let g = cascaded(real, phases)?;
    let u: Vec<Vec<Complex64>> = g
        .iter()
        .zip(&real.d)
        .map(|(gk, dk)| gk.iter().zip(dk).map(|(a, b)| a + b).collect())
        .collect();
    Ok(sinr_from_combined(&u, k, &sc.budget.p, sc.budget.sigma2))
}

fn sinr_from_combined(u: &[Vec<Complex64>], k: usize, p: &[f64], sigma2: f64) -> f64 {
    let n2 = norm_sqr(&u[k]);
    let num = p[k] * n2 * n2;
    if num == 0.0 {
        return 0.0;
    }
    let mut den = sigma2 * n2;
    for (i, ui) in u.iter().enumerate() {
        if i != k {
            den += p[i] * inner(&u[k], ui).norm_sqr();
        }
    }
    num / den
}

/// Per-user complex vectors (one entry per user).
type UserVectors = Vec<Vec<Complex64>>;

fn combined(real: &ChannelRealization, phases: &PhaseShifts) -> Result<(UserVectors, UserVectors)> {
    let g = cascaded(real, phases)?;
    let u = g
        .iter()
        .zip(&real.d)
        .map(|(gk, dk)| gk.iter().zip(dk).map(|(a, b)| a + b).collect())
        .collect();
    Ok((g, u))
}

/// Per-user ergodic rates `E{log2(1 + SINR_k)}` estimated over i.i.d.
/// realizations.
pub fn ergodic_rates_mc_with(
    sc: &Scenario,
    phases: &PhaseShifts,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<McEstimate>> {
    if trials == 0 {
        return Err(Error::Usage("ergodic rate estimation needs trials >= 1".into()));
    }
    let users = sc.users();
    // dimension check once up front so per-trial work is infallible
    if phases.len() != sc.dims.n {
        return Err(Error::DimensionMismatch(format!(
            "phase vector has {} entries, RIS has {} elements",
            phases.len(),
            sc.dims.n
        )));
    }
    let sampler = ChannelSampler::new(sc);
    let p = sc.budget.p.clone();
    let sigma2 = sc.budget.sigma2;
    let acc = accumulate(exec, trials, users, |t, out| {
        let real = sampler.sample_trial(seed, t as u64);
        let (_, u) = combined(&real, phases).expect("dimensions checked above");
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = (1.0 + sinr_from_combined(&u, k, &p, sigma2)).log2();
        }
    });
    Ok((0..users).map(|k| acc.estimate(k)).collect())
}

pub fn ergodic_rates_mc(sc: &Scenario, phases: &PhaseShifts, trials: usize, seed: u64) -> Result<Vec<McEstimate>> {
    ergodic_rates_mc_with(sc, phases, trials, seed, Exec::default())
}

/// Single-user convenience wrapper around [`ergodic_rates_mc`].
pub fn ergodic_rate_mc(sc: &Scenario, phases: &PhaseShifts, k: usize, trials: usize, seed: u64) -> Result<McEstimate> {
    if k >= sc.users() {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={})", sc.users())));
    }
    Ok(ergodic_rates_mc(sc, phases, trials, seed)?[k])
}

/// Moment-ratio rate, with the moments estimated by Monte Carlo:
/// `log2(1 + p_k mean(‖u_k‖⁴) / (Σ p_i mean(|u_k^H u_i|²) + σ² mean(‖u_k‖²)))`.
/// This isolates the log-of-ratio approximation from moment-formula errors.
/// The standard error is propagated through the ratio with the delta method
/// using the full covariance of the moment means.
pub fn approx_rate_mc_with(
    sc: &Scenario,
    phases: &PhaseShifts,
    k: usize,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    if k >= sc.users() {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={})", sc.users())));
    }
    if trials < 2 {
        return Err(Error::Usage("approx rate estimation needs trials >= 2".into()));
    }
    if phases.len() != sc.dims.n {
        return Err(Error::DimensionMismatch(format!(
            "phase vector has {} entries, RIS has {} elements",
            phases.len(),
            sc.dims.n
        )));
    }
    let users = sc.users();
    let sampler = ChannelSampler::new(sc);
    // stats: [ ||u_k||^4, |u_k^H u_i|^2 for i != k ..., ||u_k||^2 ]
    let dim = users + 1;

    struct CovAccum {
        sum: Vec<f64>,
        cross: Vec<f64>, // row-major dim x dim
        count: u64,
    }

    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let partials = map_indexed(exec, blocks, |b| {
        let start = b * BLOCK_TRIALS;
        let end = (start + BLOCK_TRIALS).min(trials);
        let mut acc = CovAccum { sum: vec![0.0; dim], cross: vec![0.0; dim * dim], count: 0 };
        let mut x = vec![0.0; dim];
        for t in start..end {
            let real = sampler.sample_trial(seed, t as u64);
            let (_, u) = combined(&real, phases).expect("dimensions checked above");
            let n2 = norm_sqr(&u[k]);
            x[0] = n2 * n2;
            let mut j = 1;
            for i in 0..users {
                if i != k {
                    x[j] = inner(&u[k], &u[i]).norm_sqr();
                    j += 1;
                }
            }
            x[dim - 1] = n2;
            for a in 0..dim {
                acc.sum[a] += x[a];
                for b in 0..dim {
                    acc.cross[a * dim + b] += x[a] * x[b];
                }
            }
            acc.count += 1;
        }
        acc
    });
    let mut total = CovAccum { sum: vec![0.0; dim], cross: vec![0.0; dim * dim], count: 0 };
    for p in partials {
        for a in 0..dim {
            total.sum[a] += p.sum[a];
            for b in 0..dim {
                total.cross[a * dim + b] += p.cross[a * dim + b];
            }
        }
        total.count += p.count;
    }

    let t = total.count as f64;
    let mean: Vec<f64> = total.sum.iter().map(|s| s / t).collect();
    // covariance of the means
    let cov = |a: usize, b: usize| -> f64 {
        (total.cross[a * dim + b] / t - mean[a] * mean[b]) * t / (t - 1.0) / t
    };

    let p = &sc.budget.p;
    let num = p[k] * mean[0];
    let mut den = sc.budget.sigma2 * mean[dim - 1];
    let others: Vec<usize> = (0..users).filter(|i| *i != k).collect();
    for (j, &i) in others.iter().enumerate() {
        den += p[i] * mean[j + 1];
    }
    let sinr = if num == 0.0 {
        0.0
    } else if den == 0.0 {
        return Err(Error::Domain("moment-ratio denominator is zero with nonzero signal".into()));
    } else {
        num / den
    };
    let rate = (1.0 + sinr).log2();

    // delta method: d rate / d mean
    let ln2 = std::f64::consts::LN_2;
    let mut grad = vec![0.0; dim];
    if num > 0.0 && den > 0.0 {
        let common = 1.0 / ((1.0 + sinr) * ln2);
        grad[0] = common * p[k] / den;
        for (j, &i) in others.iter().enumerate() {
            grad[j + 1] = -common * num / (den * den) * p[i];
        }
        grad[dim - 1] = -common * num / (den * den) * sc.budget.sigma2;
    }
    let mut var = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            var += grad[a] * grad[b] * cov(a, b);
        }
    }
    Ok(McEstimate { mean: rate, std_error: var.max(0.0).sqrt(), trials: total.count })
}

pub fn approx_rate_mc(sc: &Scenario, phases: &PhaseShifts, k: usize, trials: usize, seed: u64) -> Result<McEstimate> {
    approx_rate_mc_with(sc, phases, k, trials, seed, Exec::default())
}

/// One estimated expectation with its closed-form prediction.
#[derive(Clone, Debug)]
pub struct MomentRow {
    /// Which expectation this row estimates.
    pub name: &'static str,
    /// 0-based user index.
    pub k: usize,
    /// 0-based second user index for pair moments.
    pub i: Option<usize>,
    pub estimate: McEstimate,
    pub prediction: f64,
}

impl MomentRow {
    /// (estimate − prediction) / std_error; 0 when both the deviation and
    /// the spread are zero.
    pub fn z_score(&self) -> f64 {
        let dev = self.estimate.mean - self.prediction;
        if self.estimate.std_error == 0.0 {
            if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY * dev.signum()
            }
        } else {
            dev / self.estimate.std_error
        }
    }
}

/// Estimates of every supporting expectation, with closed-form predictions.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// Rows whose |z| exceeds `z_max`.
    pub fn failures(&self, z_max: f64) -> Vec<&MomentRow> {
        self.rows.iter().filter(|r| r.z_score().abs() > z_max).collect()
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z_score().abs()).fold(0.0, f64::max)
    }

    /// Flat CSV, one row per expectation. User indices are printed 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,k,i,estimate,std_error,closed_form_prediction,z_score\n");
        for r in &self.rows {
            let i = r.i.map(|i| (i + 1).to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.name,
                r.k + 1,
                i,
                r.estimate.mean,
                r.estimate.std_error,
                r.prediction,
                r.z_score()
            ));
        }
        out
    }
}

/// Moment names, in per-user row order.
const USER_MOMENTS: [&str; 5] = [
    "combined_norm2",
    "combined_norm4",
    "re_direct_cascaded_sq",
    "direct_norm4",
    "cascaded_direct_norm_product",
];

/// Moment names, in per-pair row order.
const PAIR_MOMENTS: [&str; 4] = [
    "combined_pair_cross",
    "direct_cascaded_pair",
    "cascaded_direct_pair",
    "direct_direct_pair",
];

/// Estimates every supporting expectation and pairs each with its
/// closed-form prediction:
///
/// * `combined_norm2` — E{‖g_k+d_k‖²}, predicted by the noise moment
/// * `combined_norm4` — E{‖g_k+d_k‖⁴}, predicted by the signal moment
/// * `re_direct_cascaded_sq` — E{(Re{d_k^H g_k})²} = (γ_k/2)·E{‖g_k‖²}
/// * `direct_norm4` — E{‖d_k‖⁴} = (M²+M)γ_k²
/// * `cascaded_direct_norm_product` — E{‖g_k‖²‖d_k‖²} = Mγ_k·E{‖g_k‖²}
/// * `combined_pair_cross` — E{|(g_k+d_k)^H(g_i+d_i)|²}, predicted by the
///   interference moment
/// * `direct_cascaded_pair` — E{|d_k^H g_i|²} = γ_k·E{‖g_i‖²}
/// * `cascaded_direct_pair` — E{|g_k^H d_i|²} = γ_i·E{‖g_k‖²}
/// * `direct_direct_pair` — E{|d_k^H d_i|²} = γ_iγ_k·M
pub fn moment_report_with(
    sc: &Scenario,
    phases: &PhaseShifts,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<MomentReport> {
    if trials < 2 {
        return Err(Error::Usage("moment estimation needs trials >= 2".into()));
    }
    if phases.len() != sc.dims.n {
        return Err(Error::DimensionMismatch(format!(
            "phase vector has {} entries, RIS has {} elements",
            phases.len(),
            sc.dims.n
        )));
    }
    let users = sc.users();
    let pairs: Vec<(usize, usize)> = (0..users)
        .flat_map(|k| (0..users).filter(move |i| *i != k).map(move |i| (k, i)))
        .collect();
    let stats_len = USER_MOMENTS.len() * users + PAIR_MOMENTS.len() * pairs.len();
    let sampler = ChannelSampler::new(sc);

    let acc = accumulate(exec, trials, stats_len, |t, out| {
        let real = sampler.sample_trial(seed, t as u64);
        let (g, u) = combined(&real, phases).expect("dimensions checked above");
        for k in 0..users {
            let base = USER_MOMENTS.len() * k;
            let u2 = norm_sqr(&u[k]);
            let re_dg = inner(&real.d[k], &g[k]).re;
            let d2 = norm_sqr(&real.d[k]);
            let g2 = norm_sqr(&g[k]);
            out[base] = u2;
            out[base + 1] = u2 * u2;
            out[base + 2] = re_dg * re_dg;
            out[base + 3] = d2 * d2;
            out[base + 4] = g2 * d2;
        }
        for (pi, &(k, i)) in pairs.iter().enumerate() {
            let base = USER_MOMENTS.len() * users + PAIR_MOMENTS.len() * pi;
            out[base] = inner(&u[k], &u[i]).norm_sqr();
            out[base + 1] = inner(&real.d[k], &g[i]).norm_sqr();
            out[base + 2] = inner(&g[k], &real.d[i]).norm_sqr();
            out[base + 3] = inner(&real.d[k], &real.d[i]).norm_sqr();
        }
    });

    let model = RateModel::new(sc);
    let m = sc.dims.m as f64;
    let gamma = &sc.fading.gamma;
    let g_norm2 =
        |k: usize| -> f64 { model.cascaded_moments(k, k, phases).expect("validated").norm2 };

    let mut rows = Vec::with_capacity(stats_len);
    for (k, &gamma_k) in gamma.iter().enumerate() {
        let base = USER_MOMENTS.len() * k;
        let predictions = [
            model.noise_term(k, phases)?,
            model.signal_term(k, phases)?,
            gamma_k / 2.0 * g_norm2(k),
            (m * m + m) * gamma_k * gamma_k,
            m * gamma_k * g_norm2(k),
        ];
        for (j, (&name, prediction)) in USER_MOMENTS.iter().zip(predictions).enumerate() {
            rows.push(MomentRow { name, k, i: None, estimate: acc.estimate(base + j), prediction });
        }
    }
    for (pi, &(k, i)) in pairs.iter().enumerate() {
        let base = USER_MOMENTS.len() * users + PAIR_MOMENTS.len() * pi;
        let predictions = [
            model.interference_term(k, i, phases)?,
            gamma[k] * g_norm2(i),
            gamma[i] * g_norm2(k),
            gamma[i] * gamma[k] * m,
        ];
        for (j, (&name, prediction)) in PAIR_MOMENTS.iter().zip(predictions).enumerate() {
            rows.push(MomentRow { name, k, i: Some(i), estimate: acc.estimate(base + j), prediction });
        }
    }
    Ok(MomentReport { rows })
}

pub fn moment_report(sc: &Scenario, phases: &PhaseShifts, trials: usize, seed: u64) -> Result<MomentReport> {
    moment_report_with(sc, phases, trials, seed, Exec::default())
}

/// Average of the closed-form ergodic rate of user `k` over phase vectors
/// drawn uniformly on [0, 2π)^N — the per-block random-phase operating mode.
pub fn random_phase_rate_with(
    sc: &Scenario,
    k: usize,
    phase_draws: usize,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    if k >= sc.users() {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={})", sc.users())));
    }
    if phase_draws == 0 {
        return Err(Error::Usage("random-phase averaging needs phase_draws >= 1".into()));
    }
    let model = RateModel::new(sc);
    let n = sc.dims.n;
    let acc = accumulate(exec, phase_draws, 1, |d, out| {
        let phases = PhaseShifts::uniform(n, &mut phase_stream(seed, d as u64));
        out[0] = model.ergodic_rate(k, &phases).expect("model matches scenario");
    });
    Ok(acc.estimate(0))
}

fn phase_stream(seed: u64, draw: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    rng
}

pub fn random_phase_rate(sc: &Scenario, k: usize, phase_draws: usize, seed: u64) -> Result<McEstimate> {
    random_phase_rate_with(sc, k, phase_draws, seed, Exec::default())
}

/// Like [`random_phase_rate`] but averaging the sum rate.
pub fn random_phase_sum_rate_with(
    sc: &Scenario,
    phase_draws: usize,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    if phase_draws == 0 {
        return Err(Error::Usage("random-phase averaging needs phase_draws >= 1".into()));
    }
    let model = RateModel::new(sc);
    let n = sc.dims.n;
    let acc = accumulate(exec, phase_draws, 1, |d, out| {
        let phases = PhaseShifts::uniform(n, &mut phase_stream(seed, d as u64));
        out[0] = model.sum_rate(&phases).expect("model matches scenario");
    });
    Ok(acc.estimate(0))
}

pub fn random_phase_sum_rate(sc: &Scenario, phase_draws: usize, seed: u64) -> Result<McEstimate> {
    random_phase_sum_rate_with(sc, phase_draws, seed, Exec::default())
}
