//! Channel construction: USPA steering vectors, deterministic LoS
//! components, seeded Rician/Rayleigh sampling, and the cascaded
//! user→RIS→BS link `g_k = H2 Φ h_k`.
//!
//! NLoS entries are i.i.d. circularly-symmetric complex Gaussians with unit
//! variance (real and imaginary parts each N(0, 1/2)). Trials are sampled
//! from counter-based substreams keyed by `(seed, trial)`, so batches can be
//! drawn concurrently in any order and still reproduce bit-for-bit.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{normalize_angle, Scenario};

/// RIS configuration θ ∈ [0, 2π)^N; element `n` applies `e^{jθ_n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShifts {
    theta: Vec<f64>,
}

impl PhaseShifts {
    /// Wraps a phase vector, normalizing each entry modulo 2π.
    pub fn new(theta: Vec<f64>) -> Self {
        PhaseShifts { theta: theta.into_iter().map(normalize_angle).collect() }
    }

    /// The all-zero configuration (Φ = I).
    pub fn zeros(n: usize) -> Self {
        PhaseShifts { theta: vec![0.0; n] }
    }

    /// Draws each phase uniformly on [0, 2π).
    pub fn uniform<R: Rng>(n: usize, rng: &mut R) -> Self {
        PhaseShifts { theta: (0..n).map(|_| rng.random::<f64>() * TAU).collect() }
    }

    /// [`PhaseShifts::uniform`] from a fresh stream keyed by `seed`.
    pub fn uniform_from_seed(n: usize, seed: u64) -> Self {
        Self::uniform(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// The unit phasors `e^{jθ_n}`.
    pub fn phasors(&self) -> Vec<Complex64> {
        self.theta.iter().map(|&t| Complex64::cis(t)).collect()
    }

    /// Plain-text format: one phase per line, full round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.theta {
            s.push_str(&format!("{t}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut theta = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e| Error::Config(format!("phases file line {}: {e}", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Config(format!("phases file line {}: non-finite phase", lineno + 1)));
            }
            theta.push(v);
        }
        if theta.is_empty() {
            return Err(Error::Config("phases file contains no values".into()));
        }
        Ok(PhaseShifts::new(theta))
    }
}

/// Dense row-major complex matrix; just enough linear algebra for the
/// channel model.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = Complex64::ZERO;
                for (a, b) in self.row(r).iter().zip(v) {
                    acc += a * b;
                }
                acc
            })
            .collect())
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Unit-modulus steering vector of a √X×√X uniform square planar array.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

/// Row width of the planar layout for `x_count` elements: √X for perfect
/// squares (the square array of the model), a single row of X otherwise
/// (reduced line-array studies).
pub(crate) fn grid_side(x_count: usize) -> usize {
    let side = x_count.isqrt();
    if side * side == x_count {
        side
    } else {
        x_count
    }
}

pub(crate) fn steering_vector_any(x_count: usize, theta_a: f64, theta_e: f64, spacing_ratio: f64) -> SteeringVector {
    let side = grid_side(x_count);
    let horiz = theta_e.sin() * theta_a.sin();
    let vert = theta_e.cos();
    let scale = TAU * spacing_ratio;
    let entries = (0..x_count)
        .map(|n| {
            let x = (n / side) as f64;
            let y = (n % side) as f64;
            Complex64::cis(scale * (x * horiz + y * vert))
        })
        .collect();
    SteeringVector(entries)
}

/// Steering vector entry `n` (0-based) has phase
/// `2π (d/λ) (x sinθe sinθa + y cosθe)` with `x = ⌊n/√X⌋`, `y = n mod √X`.
pub fn steering_vector(x_count: usize, theta_a: f64, theta_e: f64, spacing_ratio: f64) -> Result<SteeringVector> {
    let side = x_count.isqrt();
    if side * side != x_count || x_count == 0 {
        return Err(Error::Validation(format!("steering vector size {x_count} is not a positive perfect square")));
    }
    Ok(steering_vector_any(x_count, theta_a, theta_e, spacing_ratio))
}

/// Deterministic LoS parts: per-user `h̄_k` and the rank-1 RIS–BS matrix
/// `H̄2 = a_M a_N^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct LosComponents {
    pub h_bar: Vec<SteeringVector>,
    pub h2_bar: CMat,
}

pub fn los_components(sc: &Scenario) -> LosComponents {
    let s = sc.budget.spacing_ratio;
    let a_m = steering_vector_any(sc.dims.m, sc.angles.phi_r_a, sc.angles.phi_r_e, s);
    let a_n_t = steering_vector_any(sc.dims.n, sc.angles.phi_t_a, sc.angles.phi_t_e, s);
    let h_bar = (0..sc.users())
        .map(|k| steering_vector_any(sc.dims.n, sc.angles.phi_kr_a[k], sc.angles.phi_kr_e[k], s))
        .collect();
    let h2_bar = CMat::from_fn(sc.dims.m, sc.dims.n, |r, c| a_m.0[r] * a_n_t.0[c].conj());
    LosComponents { h_bar, h2_bar }
}

/// One random draw of `H2`, `{h_k}`, `{d_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// RIS–BS channel, M×N.
    pub h2: CMat,
    /// Per-user user–RIS channels, length N.
    pub h: Vec<Vec<Complex64>>,
    /// Per-user direct links, length M.
    pub d: Vec<Vec<Complex64>>,
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws channel realizations for one scenario. LoS parts and scale factors
/// are precomputed once; `sample_trial` gives order-independent substreams.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    m: usize,
    n: usize,
    /// `√β √(δ/(δ+1)) H̄2`
    h2_los: CMat,
    /// `√(β/(δ+1))`
    h2_nlos: f64,
    /// `√α_k √(ε_k/(ε_k+1)) h̄_k`
    h_los: Vec<Vec<Complex64>>,
    /// `√(α_k/(ε_k+1))`
    h_nlos: Vec<f64>,
    /// `√γ_k`
    d_scale: Vec<f64>,
}

impl ChannelSampler {
    pub fn new(sc: &Scenario) -> Self {
        let los = los_components(sc);
        let delta = sc.fading.delta;
        let beta = sc.fading.beta;
        let h2_los_scale = (beta * delta / (delta + 1.0)).sqrt();
        let h2_los = CMat::from_fn(sc.dims.m, sc.dims.n, |r, c| los.h2_bar.get(r, c) * h2_los_scale);
        let mut h_los = Vec::with_capacity(sc.users());
        let mut h_nlos = Vec::with_capacity(sc.users());
        for k in 0..sc.users() {
            let eps = sc.fading.epsilon[k];
            let alpha = sc.fading.alpha[k];
            let s = (alpha * eps / (eps + 1.0)).sqrt();
            h_los.push(los.h_bar[k].0.iter().map(|z| z * s).collect());
            h_nlos.push((alpha / (eps + 1.0)).sqrt());
        }
        ChannelSampler {
            m: sc.dims.m,
            n: sc.dims.n,
            h2_los,
            h2_nlos: (beta / (delta + 1.0)).sqrt(),
            h_los,
            h_nlos,
            d_scale: sc.fading.gamma.iter().map(|g| g.sqrt()).collect(),
        }
    }

    /// Draw order is fixed: `H̃2` row-major, then `h̃_k` per user, then
    /// `d̃_k` per user; each complex entry draws re before im.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> ChannelRealization {
        let h2 = CMat::from_fn(self.m, self.n, |r, c| {
            self.h2_los.get(r, c) + complex_gaussian(rng) * self.h2_nlos
        });
        let h = self
            .h_los
            .iter()
            .zip(&self.h_nlos)
            .map(|(los, s)| los.iter().map(|z| z + complex_gaussian(rng) * *s).collect())
            .collect();
        let d = self
            .d_scale
            .iter()
            .map(|s| (0..self.m).map(|_| complex_gaussian(rng) * *s).collect())
            .collect();
        ChannelRealization { h2, h, d }
    }

    /// Samples trial `trial` of the stream keyed by `seed`; independent of
    /// how many other trials were drawn before or concurrently.
    pub fn sample_trial(&self, seed: u64, trial: u64) -> ChannelRealization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        self.sample(&mut rng)
    }
}

/// Convenience wrapper building a fresh sampler; prefer [`ChannelSampler`]
/// in loops.
pub fn sample_realization<R: Rng>(sc: &Scenario, rng: &mut R) -> ChannelRealization {
    ChannelSampler::new(sc).sample(rng)
}

/// Cascaded channels `g_k = H2 diag(e^{jθ}) h_k` for every user.
pub fn cascaded(real: &ChannelRealization, phases: &PhaseShifts) -> Result<Vec<Vec<Complex64>>> {
    if phases.len() != real.h2.cols() {
        return Err(Error::DimensionMismatch(format!(
            "phase vector has {} entries, RIS has {} elements",
            phases.len(),
            real.h2.cols()
        )));
    }
    let phasors = phases.phasors();
    real.h
        .iter()
        .map(|h_k| {
            if h_k.len() != phases.len() {
                return Err(Error::DimensionMismatch(format!(
                    "user channel has {} entries, RIS has {} elements",
                    h_k.len(),
                    phases.len()
                )));
            }
            let rotated: Vec<Complex64> = h_k.iter().zip(&phasors).map(|(h, p)| h * p).collect();
            real.h2.mul_vec(&rotated)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{AngleSet, Dimensions, FadingParams, LinkBudget};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn test_scenario(m: usize, n: usize, k: usize, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Scenario::from_parts(
            Dimensions::new(m, n, k).unwrap(),
            FadingParams {
                delta: 0.8,
                epsilon: vec![2.0; k],
                alpha: vec![1.3; k],
                beta: 0.9,
                gamma: vec![0.6; k],
            },
            AngleSet::draw(k, &mut rng),
            LinkBudget { p: vec![1.0; k], sigma2: 0.1, spacing_ratio: 0.5 },
            None,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn steering_vector_single_element() {
        let v = steering_vector(1, 1.234, 2.345, 0.5).unwrap();
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v.0[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.0[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_vector_broadside_alternates() {
        // angles zero: phases are pi * y with y in {0,1,0,1}
        let v = steering_vector(4, 0.0, 0.0, 0.5).unwrap();
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in v.0.iter().zip(expect) {
            assert_abs_diff_eq!(z.re, e, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_vector_rejects_non_square() {
        assert!(steering_vector(8, 0.0, 0.0, 0.5).is_err());
        assert!(steering_vector(0, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn los_collapse_to_scalar() {
        let sc = test_scenario(1, 1, 2, 3);
        let los = los_components(&sc);
        assert_abs_diff_eq!((los.h2_bar.get(0, 0) - Complex64::ONE).norm(), 0.0, epsilon = 1e-15);
        for h in &los.h_bar {
            assert_abs_diff_eq!((h.0[0] - Complex64::ONE).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn los_matrix_is_rank_one_with_unit_entries() {
        let sc = test_scenario(9, 16, 2, 5);
        let los = los_components(&sc);
        assert_relative_eq!(los.h2_bar.frobenius_sq(), (9 * 16) as f64, max_relative = 1e-12);
        for r in 0..9 {
            for c in 0..16 {
                assert_relative_eq!(los.h2_bar.get(r, c).norm(), 1.0, max_relative = 1e-12);
            }
        }
        // Cauchy-Schwarz equality against column 0 => rank 1
        let col = |c: usize| (0..9).map(|r| los.h2_bar.get(r, c)).collect::<Vec<_>>();
        let c0 = col(0);
        let n0: f64 = c0.iter().map(|z| z.norm_sqr()).sum();
        for c in 1..16 {
            let cc = col(c);
            let dot: Complex64 = cc.iter().zip(&c0).map(|(a, b)| a.conj() * b).sum();
            let nc: f64 = cc.iter().map(|z| z.norm_sqr()).sum();
            assert_relative_eq!(dot.norm_sqr(), nc * n0, max_relative = 1e-10);
        }
    }

    #[test]
    fn large_rician_factor_pins_user_channel_to_los() {
        let mut sc = test_scenario(4, 9, 1, 11);
        sc.fading.epsilon[0] = 1e12;
        let los = los_components(&sc);
        let real = sample_realization(&sc, &mut ChaCha8Rng::seed_from_u64(1));
        let scale = sc.fading.alpha[0].sqrt();
        for (got, want) in real.h[0].iter().zip(los.h_bar[0].0.iter()) {
            assert_relative_eq!((got / (want * scale)).norm(), 1.0, max_relative = 1e-4);
        }
    }

    #[test]
    fn blocked_direct_link_is_zero() {
        let mut sc = test_scenario(4, 4, 2, 13);
        sc.fading.gamma = vec![0.0, 0.0];
        let real = sample_realization(&sc, &mut ChaCha8Rng::seed_from_u64(2));
        for d_k in &real.d {
            assert!(d_k.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn direct_link_power_matches_m_gamma() {
        let sc = test_scenario(9, 4, 1, 17);
        let sampler = ChannelSampler::new(&sc);
        let trials = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for t in 0..trials {
            let real = sampler.sample_trial(99, t);
            let n2: f64 = real.d[0].iter().map(|z| z.norm_sqr()).sum();
            sum += n2;
            sumsq += n2 * n2;
        }
        let mean = sum / trials as f64;
        let var = (sumsq / trials as f64 - mean * mean).max(0.0);
        let se = (var / trials as f64).sqrt();
        let expect = sc.dims.m as f64 * sc.fading.gamma[0];
        assert!((mean - expect).abs() <= 3.0 * se, "mean {mean} vs {expect} (se {se})");
    }

    #[test]
    fn user_channel_power_matches_alpha_n() {
        let sc = test_scenario(4, 9, 1, 19);
        let sampler = ChannelSampler::new(&sc);
        let trials = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for t in 0..trials {
            let real = sampler.sample_trial(7, t);
            let n2: f64 = real.h[0].iter().map(|z| z.norm_sqr()).sum();
            sum += n2;
            sumsq += n2 * n2;
        }
        let mean = sum / trials as f64;
        let se = ((sumsq / trials as f64 - mean * mean).max(0.0) / trials as f64).sqrt();
        let expect = sc.fading.alpha[0] * sc.dims.n as f64;
        assert!((mean - expect).abs() <= 3.0 * se, "mean {mean} vs {expect} (se {se})");
    }

    #[test]
    fn nlos_entries_have_zero_mean_unit_variance() {
        let mut sc = test_scenario(16, 16, 1, 23);
        // pure NLoS so H2 entries are sqrt(beta) * CN(0,1)
        sc.fading.delta = 0.0;
        sc.fading.beta = 1.0;
        let sampler = ChannelSampler::new(&sc);
        let mut sum = Complex64::ZERO;
        let mut pow = 0.0;
        let mut count = 0usize;
        for t in 0..500u64 {
            let real = sampler.sample_trial(3, t);
            for r in 0..16 {
                for c in 0..16 {
                    let z = real.h2.get(r, c);
                    sum += z;
                    pow += z.norm_sqr();
                    count += 1;
                }
            }
        }
        let mean = sum / count as f64;
        let var = pow / count as f64;
        // se of each mean component is 1/sqrt(2 count)
        let se = (0.5 / count as f64).sqrt();
        assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn cascaded_identity_phase_passthrough() {
        // H2 = I (M = N), theta = 0 => g_k = h_k
        let n = 4;
        let h2 = CMat::from_fn(n, n, |r, c| if r == c { Complex64::ONE } else { Complex64::ZERO });
        let h = vec![vec![
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.1, 0.4),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.5, 0.5),
        ]];
        let real = ChannelRealization { h2, h: h.clone(), d: vec![vec![Complex64::ZERO; n]] };
        let g = cascaded(&real, &PhaseShifts::zeros(n)).unwrap();
        assert_eq!(g[0], h[0]);
    }

    #[test]
    fn cascaded_rejects_wrong_phase_length() {
        let sc = test_scenario(4, 4, 1, 29);
        let real = sample_realization(&sc, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(cascaded(&real, &PhaseShifts::zeros(5)).is_err());
    }

    #[test]
    fn cascaded_los_alignment_gain() {
        // LoS-dominant channels with aligned phases: |f| = N, so
        // ||g||^2 ≈ alpha*beta*M*N^2
        let mut sc = test_scenario(9, 16, 1, 31);
        sc.fading.delta = 1e12;
        sc.fading.epsilon[0] = 1e12;
        let model = crate::closed_form::RateModel::new(&sc);
        let phases = model.aligned_phases(0).unwrap();
        let real = sample_realization(&sc, &mut ChaCha8Rng::seed_from_u64(8));
        let g = cascaded(&real, &phases).unwrap();
        let norm2: f64 = g[0].iter().map(|z| z.norm_sqr()).sum();
        let expect = sc.fading.alpha[0] * sc.fading.beta * 9.0 * 16.0 * 16.0;
        assert_relative_eq!(norm2, expect, max_relative = 1e-3);
    }

    #[test]
    fn phase_wrap_is_bit_identical_on_exact_grid() {
        // grid values are exact multiples of ulp in the [4,8) binade, so
        // adding 2π stays exact and normalization undoes it bit-for-bit
        let theta = vec![0.0, 0.5, 1.25, 2.0, 3.75, 5.0];
        let wrapped: Vec<f64> = theta.iter().map(|t| t + TAU).collect();
        let a = PhaseShifts::new(theta);
        let b = PhaseShifts::new(wrapped);
        assert_eq!(a, b);

        let sc = test_scenario(4, 9, 1, 37);
        let real = sample_realization(&sc, &mut ChaCha8Rng::seed_from_u64(9));
        let base = PhaseShifts::new(vec![0.5, 1.25, 2.0, 3.75, 5.0, 0.0, 1.0, 6.0, 2.5]);
        let wrap = PhaseShifts::new(base.theta().iter().map(|t| t + TAU).collect());
        assert_eq!(cascaded(&real, &base).unwrap(), cascaded(&real, &wrap).unwrap());
    }

    #[test]
    fn phases_text_round_trip() {
        let p = PhaseShifts::new(vec![0.1, 5.9, 3.3333333333333335]);
        let back = PhaseShifts::from_text(&p.to_text()).unwrap();
        assert_eq!(p, back);
        assert!(PhaseShifts::from_text("").is_err());
        assert!(PhaseShifts::from_text("nope").is_err());
    }

    proptest! {
        #[test]
        fn phases_normalize_into_range(raw in proptest::collection::vec(-50.0..50.0f64, 1..20)) {
            let p = PhaseShifts::new(raw);
            prop_assert!(p.theta().iter().all(|t| (0.0..TAU).contains(t)));
        }

        #[test]
        fn cascaded_is_linear_in_h(scale_re in -2.0..2.0f64, scale_im in -2.0..2.0f64, seed in 0u64..1000) {
            let sc = test_scenario(4, 4, 1, 41);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let real = sample_realization(&sc, &mut rng);
            let phases = PhaseShifts::uniform(4, &mut rng);
            let s = Complex64::new(scale_re, scale_im);
            let scaled = ChannelRealization {
                h2: real.h2.clone(),
                h: vec![real.h[0].iter().map(|z| z * s).collect()],
                d: real.d.clone(),
            };
            let g = cascaded(&real, &phases).unwrap();
            let gs = cascaded(&scaled, &phases).unwrap();
            for (a, b) in g[0].iter().zip(gs[0].iter()) {
                prop_assert!((a * s - b).norm() <= 1e-10 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn cascaded_is_permutation_equivariant(seed in 0u64..1000) {
            // permuting RIS elements together with theta, rows of h and
            // columns of H2 leaves g unchanged
            let n = 9;
            let sc = test_scenario(4, n, 1, 43);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let real = sample_realization(&sc, &mut rng);
            let phases = PhaseShifts::uniform(n, &mut rng);
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    p.swap(i, j);
                }
                p
            };
            let permuted = ChannelRealization {
                h2: CMat::from_fn(4, n, |r, c| real.h2.get(r, perm[c])),
                h: vec![perm.iter().map(|&j| real.h[0][j]).collect()],
                d: real.d.clone(),
            };
            let theta_p = PhaseShifts::new(perm.iter().map(|&j| phases.theta()[j]).collect());
            let g = cascaded(&real, &phases).unwrap();
            let gp = cascaded(&permuted, &theta_p).unwrap();
            for (a, b) in g[0].iter().zip(gp[0].iter()) {
                prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
            }
        }
    }
}
