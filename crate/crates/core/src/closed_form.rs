//! Closed-form ergodic-rate evaluation from statistical CSI only.
//!
//! [`RateModel`] precomputes everything the rate expression needs from a
//! scenario — the per-user phase offsets ζ_n^k, the LoS Gram matrix
//! h̄_k^H h̄_i, and the composite losses c_k = βα_k/((δ+1)(ε_k+1)) — and then
//! evaluates the signal, interference, and noise moments for any RIS phase
//! configuration. No channel realizations are involved; the Monte Carlo
//! module provides the matching estimators for cross-validation.
//!
//! The moment expressions are evaluated in their printed algebraic grouping
//! (no refactoring): individual addends span many orders of magnitude at
//! realistic path losses and the tests check addend-level reductions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::PhaseShifts;
use crate::error::{Error, Result};
use crate::scenario::{normalize_angle, Scenario};

/// Per-user signal/interference/noise moments, SINRs, and rates for one
/// phase configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateBreakdown {
    /// E{‖g_k + d_k‖⁴} per user (linear).
    pub signal: Vec<f64>,
    /// E{|(g_k+d_k)^H (g_i+d_i)|²} per ordered pair, diagonal zero.
    pub interference: Vec<Vec<f64>>,
    /// E{‖g_k + d_k‖²} per user (linear).
    pub noise: Vec<f64>,
    /// Effective SINR per user.
    pub sinr: Vec<f64>,
    /// log2(1 + sinr) per user (bits/s/Hz).
    pub rate: Vec<f64>,
}

impl RateBreakdown {
    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    /// Power-weighted interference hitting user `k`:
    /// `Σ_{i≠k} p_i · I_ki`.
    pub fn weighted_interference(&self, k: usize, p: &[f64]) -> f64 {
        self.interference[k]
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(i, v)| p[i] * v)
            .sum()
    }
}

/// Cascaded-only second/fourth moments (direct links removed).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadedMoments {
    /// E{‖g_k‖²}
    pub norm2: f64,
    /// E{‖g_k‖⁴}
    pub norm4: f64,
    /// E{|g_k^H g_i|²}
    pub cross: f64,
}

/// Statistical-CSI rate evaluator for one scenario.
#[derive(Clone, Debug)]
pub struct RateModel {
    m: f64,
    n: f64,
    users: usize,
    delta: f64,
    epsilon: Vec<f64>,
    gamma: Vec<f64>,
    /// Composite losses c_k = β α_k / ((δ+1)(ε_k+1)).
    c: Vec<f64>,
    p: Vec<f64>,
    sigma2: f64,
    /// ζ[k][n], n 0-based.
    zeta: Vec<Vec<f64>>,
    /// gram[k][i] = h̄_k^H h̄_i.
    gram: Vec<Vec<Complex64>>,
}

impl RateModel {
    pub fn new(sc: &Scenario) -> Self {
        let users = sc.users();
        let n = sc.dims.n;
        let side = crate::channel::grid_side(n);
        let scale = std::f64::consts::TAU * sc.budget.spacing_ratio;
        let sin_t = sc.angles.phi_t_e.sin() * sc.angles.phi_t_a.sin();
        let cos_t = sc.angles.phi_t_e.cos();

        let mut zeta = Vec::with_capacity(users);
        for k in 0..users {
            let horiz = sc.angles.phi_kr_e[k].sin() * sc.angles.phi_kr_a[k].sin() - sin_t;
            let vert = sc.angles.phi_kr_e[k].cos() - cos_t;
            zeta.push(
                (0..n)
                    .map(|idx| scale * ((idx / side) as f64 * horiz + (idx % side) as f64 * vert))
                    .collect(),
            );
        }

        let h_bar: Vec<_> = (0..users)
            .map(|k| {
                crate::channel::steering_vector_any(
                    n,
                    sc.angles.phi_kr_a[k],
                    sc.angles.phi_kr_e[k],
                    sc.budget.spacing_ratio,
                )
            })
            .collect();
        let gram = (0..users)
            .map(|k| {
                (0..users)
                    .map(|i| {
                        h_bar[k]
                            .0
                            .iter()
                            .zip(h_bar[i].0.iter())
                            .map(|(a, b)| a.conj() * b)
                            .sum()
                    })
                    .collect()
            })
            .collect();

        let c = (0..users)
            .map(|k| {
                sc.fading.beta * sc.fading.alpha[k]
                    / ((sc.fading.delta + 1.0) * (sc.fading.epsilon[k] + 1.0))
            })
            .collect();

        RateModel {
            m: sc.dims.m as f64,
            n: n as f64,
            users,
            delta: sc.fading.delta,
            epsilon: sc.fading.epsilon.clone(),
            gamma: sc.fading.gamma.clone(),
            c,
            p: sc.budget.p.clone(),
            sigma2: sc.budget.sigma2,
            zeta,
            gram,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn elements(&self) -> usize {
        self.n as usize
    }

    /// Composite loss c_k.
    pub fn composite_loss(&self, k: usize) -> Result<f64> {
        self.check_user(k)?;
        Ok(self.c[k])
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.users {
            return Err(Error::IndexOutOfRange(format!("user {k} (K={})", self.users)));
        }
        Ok(())
    }

    fn check_phases(&self, phases: &PhaseShifts) -> Result<()> {
        if phases.len() != self.n as usize {
            return Err(Error::DimensionMismatch(format!(
                "phase vector has {} entries, RIS has {} elements",
                phases.len(),
                self.n as usize
            )));
        }
        Ok(())
    }

    /// Phase offset ζ_n^k (0-based element and user indices).
    pub fn zeta(&self, element: usize, k: usize) -> Result<f64> {
        self.check_user(k)?;
        if element >= self.n as usize {
            return Err(Error::IndexOutOfRange(format!("element {element} (N={})", self.n as usize)));
        }
        Ok(self.zeta[k][element])
    }

    /// Array response `f_k(Φ) = Σ_n e^{j(ζ_n^k + θ_n)}`.
    pub fn f_of_phi(&self, k: usize, phases: &PhaseShifts) -> Result<Complex64> {
        self.check_user(k)?;
        self.check_phases(phases)?;
        Ok(self.f_inner(k, phases))
    }

    fn f_inner(&self, k: usize, phases: &PhaseShifts) -> Complex64 {
        self.zeta[k]
            .iter()
            .zip(phases.theta())
            .map(|(z, t)| Complex64::cis(z + t))
            .sum()
    }

    fn f_all(&self, phases: &PhaseShifts) -> Vec<Complex64> {
        (0..self.users).map(|k| self.f_inner(k, phases)).collect()
    }

    /// Phases that align every term of `f_k`: θ_n = −ζ_n^k (mod 2π),
    /// giving f_k = N.
    pub fn aligned_phases(&self, k: usize) -> Result<PhaseShifts> {
        self.check_user(k)?;
        Ok(PhaseShifts::new(self.zeta[k].iter().map(|z| normalize_angle(-z)).collect()))
    }

    fn signal_inner(&self, k: usize, fk2: f64, gamma: f64) -> f64 {
        let (m, n) = (self.m, self.n);
        let c = self.c[k];
        let d = self.delta;
        let e = self.epsilon[k];
        m * m * c * c * d * d * e * e * fk2 * fk2
            + 2.0 * c * m * d * e * fk2
                * (c * (2.0 * m * n * d + m * n * e + m * n + 2.0 * m + n * e + n + 2.0) + gamma * (m + 1.0))
            + c * c * m * m * n * n * (2.0 * d * d + e * e + 2.0 * d * e + 2.0 * d + 2.0 * e + 1.0)
            + c * c * m * n * n * (e * e + 2.0 * d * e + 2.0 * d + 2.0 * e + 1.0)
            + c * m * n * (m + 1.0) * (c * (2.0 * d + 2.0 * e + 1.0) + 2.0 * gamma * (d + e + 1.0))
            + gamma * gamma * (m * m + m)
    }

    fn interference_inner(
        &self,
        k: usize,
        i: usize,
        fk: Complex64,
        fi: Complex64,
        gamma_k: f64,
        gamma_i: f64,
    ) -> f64 {
        let (m, n) = (self.m, self.n);
        let d = self.delta;
        let (ck, ci) = (self.c[k], self.c[i]);
        let (ek, ei) = (self.epsilon[k], self.epsilon[i]);
        let fk2 = fk.norm_sqr();
        let fi2 = fi.norm_sqr();
        let gram_ki = self.gram[k][i];
        // Re{f_k^H f_i · h̄_i^H h̄_k}; h̄_i^H h̄_k is the conjugate of gram[k][i]
        let cross = (fk.conj() * fi * gram_ki.conj()).re;
        m * m * ck * ci * d * d * ek * ei * fk2 * fi2
            + m * ck * d * ek * fk2 * (ci * (d * m * n + n * ei + n + 2.0 * m) + gamma_i)
            + m * ci * d * ei * fi2 * (ck * (d * m * n + n * ek + n + 2.0 * m) + gamma_k)
            + m * n * n * ck * ci * (m * d * d + d * (ei + ek + 2.0) + (ek + 1.0) * (ei + 1.0))
            + m * m * n * ck * ci * (2.0 * d + ei + ek + 1.0)
            + m * m * ck * ci * ek * ei * gram_ki.norm_sqr()
            + 2.0 * m * m * ck * ci * d * ek * ei * cross
            + m * (ci * gamma_k * n * (d + ei + 1.0) + ck * gamma_i * n * (d + ek + 1.0) + gamma_i * gamma_k)
    }

    fn noise_inner(&self, k: usize, fk2: f64, gamma: f64) -> f64 {
        self.m * (self.c[k] * self.delta * self.epsilon[k] * fk2 + self.c[k] * (self.delta + self.epsilon[k] + 1.0) * self.n + gamma)
    }

    /// Signal moment E{‖g_k + d_k‖⁴}.
    pub fn signal_term(&self, k: usize, phases: &PhaseShifts) -> Result<f64> {
        self.check_user(k)?;
        self.check_phases(phases)?;
        let fk2 = self.f_inner(k, phases).norm_sqr();
        Ok(self.signal_inner(k, fk2, self.gamma[k]))
    }

    /// Interference moment E{|(g_k+d_k)^H (g_i+d_i)|²}, `i ≠ k`.
    pub fn interference_term(&self, k: usize, i: usize, phases: &PhaseShifts) -> Result<f64> {
        self.check_user(k)?;
        self.check_user(i)?;
        if k == i {
            return Err(Error::Usage("interference term requires i != k".into()));
        }
        self.check_phases(phases)?;
        let fk = self.f_inner(k, phases);
        let fi = self.f_inner(i, phases);
        Ok(self.interference_inner(k, i, fk, fi, self.gamma[k], self.gamma[i]))
    }

    /// Noise moment E{‖g_k + d_k‖²}.
    pub fn noise_term(&self, k: usize, phases: &PhaseShifts) -> Result<f64> {
        self.check_user(k)?;
        self.check_phases(phases)?;
        let fk2 = self.f_inner(k, phases).norm_sqr();
        Ok(self.noise_inner(k, fk2, self.gamma[k]))
    }

    /// Cascaded-only moments: the γ_k = 0 reduction of the combined
    /// moments, i.e. E{‖g_k‖²}, E{‖g_k‖⁴}, E{|g_k^H g_i|²}.
    pub fn cascaded_moments(&self, k: usize, i: usize, phases: &PhaseShifts) -> Result<CascadedMoments> {
        self.check_user(k)?;
        self.check_user(i)?;
        self.check_phases(phases)?;
        let fk = self.f_inner(k, phases);
        let fk2 = fk.norm_sqr();
        let cross = if i == k {
            f64::NAN
        } else {
            let fi = self.f_inner(i, phases);
            self.interference_inner(k, i, fk, fi, 0.0, 0.0)
        };
        Ok(CascadedMoments {
            norm2: self.noise_inner(k, fk2, 0.0),
            norm4: self.signal_inner(k, fk2, 0.0),
            cross,
        })
    }

    fn sinr_parts(&self, k: usize, f: &[Complex64]) -> (f64, f64) {
        let fk2 = f[k].norm_sqr();
        let num = self.p[k] * self.signal_inner(k, fk2, self.gamma[k]);
        let mut den = self.sigma2 * self.noise_inner(k, fk2, self.gamma[k]);
        for i in 0..self.users {
            if i != k {
                den += self.p[i] * self.interference_inner(k, i, f[k], f[i], self.gamma[k], self.gamma[i]);
            }
        }
        (num, den)
    }

    /// Effective SINR of user `k`; numerator and denominator are formed
    /// separately before the division.
    pub fn sinr(&self, k: usize, phases: &PhaseShifts) -> Result<f64> {
        self.check_user(k)?;
        self.check_phases(phases)?;
        let f = self.f_all(phases);
        let (num, den) = self.sinr_parts(k, &f);
        ratio_or_domain_error(num, den)
    }

    /// Ergodic rate of user `k` in bits/s/Hz.
    pub fn ergodic_rate(&self, k: usize, phases: &PhaseShifts) -> Result<f64> {
        Ok((1.0 + self.sinr(k, phases)?).log2())
    }

    /// Sum rate over all users.
    pub fn sum_rate(&self, phases: &PhaseShifts) -> Result<f64> {
        self.check_phases(phases)?;
        let f = self.f_all(phases);
        let mut total = 0.0;
        for k in 0..self.users {
            let (num, den) = self.sinr_parts(k, &f);
            total += (1.0 + ratio_or_domain_error(num, den)?).log2();
        }
        Ok(total)
    }

    /// Full per-user breakdown for one phase configuration.
    pub fn rate_breakdown(&self, phases: &PhaseShifts) -> Result<RateBreakdown> {
        self.check_phases(phases)?;
        let f = self.f_all(phases);
        let mut signal = Vec::with_capacity(self.users);
        let mut noise = Vec::with_capacity(self.users);
        let mut interference = vec![vec![0.0; self.users]; self.users];
        let mut sinr = Vec::with_capacity(self.users);
        let mut rate = Vec::with_capacity(self.users);
        for k in 0..self.users {
            let fk2 = f[k].norm_sqr();
            signal.push(self.signal_inner(k, fk2, self.gamma[k]));
            noise.push(self.noise_inner(k, fk2, self.gamma[k]));
            for i in 0..self.users {
                if i != k {
                    interference[k][i] =
                        self.interference_inner(k, i, f[k], f[i], self.gamma[k], self.gamma[i]);
                }
            }
            let (num, den) = self.sinr_parts(k, &f);
            let s = ratio_or_domain_error(num, den)?;
            sinr.push(s);
            rate.push((1.0 + s).log2());
        }
        Ok(RateBreakdown { signal, interference, noise, sinr, rate })
    }
}

fn ratio_or_domain_error(num: f64, den: f64) -> Result<f64> {
    if num == 0.0 {
        Ok(0.0)
    } else if den == 0.0 {
        Err(Error::Domain("SINR denominator is zero with nonzero signal".into()))
    } else {
        Ok(num / den)
    }
}

/// Rate of user `k` without an RIS (cascaded links removed):
/// `log2(1 + p_k (M+1) γ_k / (Σ_{i≠k} p_i γ_i + σ²))`.
pub fn rate_no_ris(sc: &Scenario, k: usize) -> Result<f64> {
    let users = sc.users();
    if k >= users {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={users})")));
    }
    let m = sc.dims.m as f64;
    let num = sc.budget.p[k] * (m + 1.0) * sc.fading.gamma[k];
    let mut den = sc.budget.sigma2;
    for i in 0..users {
        if i != k {
            den += sc.budget.p[i] * sc.fading.gamma[i];
        }
    }
    Ok((1.0 + ratio_or_domain_error(num, den)?).log2())
}

/// Effective SINR for pure-NLoS cascaded links (the δ = ε_k = 0 reduction,
/// evaluated with the scenario's own c_k and γ_k — the formula is applied
/// by substitution, deliberately without rejecting other parameter sets).
pub fn sinr_nlos(sc: &Scenario, k: usize) -> Result<f64> {
    let users = sc.users();
    if k >= users {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={users})")));
    }
    let m = sc.dims.m as f64;
    let n = sc.dims.n as f64;
    let c = |j: usize| {
        sc.fading.beta * sc.fading.alpha[j] / ((sc.fading.delta + 1.0) * (sc.fading.epsilon[j] + 1.0))
    };
    let ck = c(k);
    let gk = sc.fading.gamma[k];
    let num = sc.budget.p[k]
        * (ck * ck * (m * n * n + n * n + m * n + n) + 2.0 * ck * gk * n * (m + 1.0) + gk * gk * (m + 1.0));
    let mut den = sc.budget.sigma2 * (ck * n + gk);
    for i in 0..users {
        if i != k {
            let ci = c(i);
            let gi = sc.fading.gamma[i];
            den += sc.budget.p[i] * (ck * ci * (n * n + m * n) + ck * gi * n + ci * gk * n + gk * gi);
        }
    }
    ratio_or_domain_error(num, den)
}

/// Effective SINR for uniformly random per-block phases in the large-N
/// limit: `p_k α_k (M(2δ²+2δ+1)+2δ+1) / Σ_{i≠k} p_i α_i (Mδ²+2δ+1)`.
pub fn sinr_random_limit(sc: &Scenario, k: usize) -> Result<f64> {
    let users = sc.users();
    if k >= users {
        return Err(Error::IndexOutOfRange(format!("user {k} (K={users})")));
    }
    if users < 2 {
        return Err(Error::Domain("random-phase limit needs K >= 2 (interference-limited)".into()));
    }
    let m = sc.dims.m as f64;
    let d = sc.fading.delta;
    let num = sc.budget.p[k] * sc.fading.alpha[k] * (m * (2.0 * d * d + 2.0 * d + 1.0) + 2.0 * d + 1.0);
    let mut den = 0.0;
    for i in 0..users {
        if i != k {
            den += sc.budget.p[i] * sc.fading.alpha[i] * (m * d * d + 2.0 * d + 1.0);
        }
    }
    ratio_or_domain_error(num, den)
}

/// Two symmetric users (equal c, γ, p) with pure-NLoS cascaded links.
#[derive(Clone, Copy, Debug)]
pub struct SymmetricNlosCase {
    pub m: usize,
    pub n: usize,
    /// Composite loss c (> 0).
    pub c: f64,
    /// Direct-link loss γ (> 0).
    pub gamma: f64,
    /// Operating SNR p/σ².
    pub snr: f64,
}

/// Crossover thresholds between the RIS-aided pure-NLoS system and the
/// no-RIS baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlosCrossover {
    /// The RIS-aided system wins for `p/σ²` strictly below this.
    pub snr_threshold: f64,
    /// At the case's own SNR, the RIS-aided system wins for `N` strictly
    /// above this (may be negative: any N wins).
    pub n_threshold: f64,
}

pub fn nlos_crossover(case: SymmetricNlosCase) -> Result<NlosCrossover> {
    if case.m < 2 {
        return Err(Error::Domain("crossover thresholds need M >= 2".into()));
    }
    // NaN must fail too, hence the negated comparisons
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(case.c > 0.0) || !(case.gamma > 0.0) {
        return Err(Error::Validation(format!("need c > 0 and gamma > 0, got c={}, gamma={}", case.c, case.gamma)));
    }
    let m1 = (case.m - 1) as f64;
    let snr_threshold = (case.n as f64 + 1.0) / (case.gamma * m1) + 1.0 / (case.c * m1);
    let n_threshold = case.gamma * (case.snr * m1 - 1.0 / case.c) - 1.0;
    Ok(NlosCrossover { snr_threshold, n_threshold })
}

/// Two symmetric users with randomly re-drawn phases each block, large N.
#[derive(Clone, Copy, Debug)]
pub struct RandomPhaseCase {
    pub m: usize,
    pub delta: f64,
}

/// Threshold on `γ · p/σ²` below which the random-phase RIS system beats
/// the no-RIS baseline: `((2δ²+2δ+1)M + 2δ+1) / (δ²(M²−M))`.
pub fn random_crossover(case: RandomPhaseCase) -> Result<f64> {
    if case.m < 2 {
        return Err(Error::Domain("crossover threshold needs M >= 2".into()));
    }
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(case.delta > 0.0) {
        return Err(Error::Domain("crossover threshold needs delta > 0".into()));
    }
    let m = case.m as f64;
    let d = case.delta;
    Ok(((2.0 * d * d + 2.0 * d + 1.0) * m + 2.0 * d + 1.0) / (d * d * (m * m - m)))
}
