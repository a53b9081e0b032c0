//! System parameters: array dimensions, Rician fading statistics, geometry,
//! angles, and the link budget.
//!
//! A [`Scenario`] is built once — from a JSON config or directly from parts —
//! validated, and then shared immutably by everything downstream. Angles of
//! arrival/departure are drawn uniformly on `[0, 2π)` from a stream keyed by
//! the seed, so the same `(config, seed)` pair always produces the same
//! scenario.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a power in dBm to linear watts.
pub fn dbm_to_watt(dbm: f64) -> Result<f64> {
    if !dbm.is_finite() {
        return Err(Error::Validation(format!("non-finite dBm value: {dbm}")));
    }
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

/// Converts linear watts to dBm. Requires a strictly positive input.
pub fn watt_to_dbm(watt: f64) -> Result<f64> {
    if !watt.is_finite() || watt <= 0.0 {
        return Err(Error::Validation(format!("watts must be finite and > 0, got {watt}")));
    }
    Ok(10.0 * watt.log10() + 30.0)
}

/// Reduces an angle to `[0, 2π)`.
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn perfect_sqrt(x: usize) -> Option<usize> {
    let r = x.isqrt();
    (r * r == x).then_some(r)
}

/// Antenna, element, and user counts.
///
/// Arrays are uniform square planar arrays, so configs require `M` and `N`
/// to be perfect squares (see [`build_scenario`]). The library itself also
/// accepts other counts for reduced studies (an N = 2 line array, say);
/// those lay out as a single antenna row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// BS antenna count M.
    pub m: usize,
    /// RIS element count N.
    pub n: usize,
    /// User count K.
    pub k: usize,
}

impl Dimensions {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        let dims = Dimensions { m, n, k };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::Validation(format!(
                "dimensions must all be >= 1, got M={} N={} K={}",
                self.m, self.n, self.k
            )));
        }
        Ok(())
    }

    fn require_square_arrays(&self) -> Result<()> {
        if perfect_sqrt(self.m).is_none() {
            return Err(Error::Validation(format!("M={} is not a perfect square", self.m)));
        }
        if perfect_sqrt(self.n).is_none() {
            return Err(Error::Validation(format!("N={} is not a perfect square", self.n)));
        }
        Ok(())
    }
}

/// Large-scale fading: Rician factors and linear path losses.
///
/// `gamma[k] = 0` models a blocked direct link; `alpha`/`beta` may also be
/// zero to express a removed cascaded link (the no-RIS reduction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// RIS–BS Rician factor δ.
    pub delta: f64,
    /// Per-user user–RIS Rician factors ε_k.
    pub epsilon: Vec<f64>,
    /// Per-user user–RIS path losses α_k (linear).
    pub alpha: Vec<f64>,
    /// RIS–BS path loss β (linear).
    pub beta: f64,
    /// Per-user direct-link path losses γ_k (linear).
    pub gamma: Vec<f64>,
}

impl FadingParams {
    fn validate(&self, users: usize) -> Result<()> {
        for (name, v) in [("epsilon", &self.epsilon), ("alpha", &self.alpha), ("gamma", &self.gamma)] {
            if v.len() != users {
                return Err(Error::Validation(format!(
                    "{name} has length {}, expected K={users}",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::Validation(format!("{name} entries must be finite and >= 0, got {x}")));
            }
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::Validation(format!("delta must be finite and >= 0, got {}", self.delta)));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Validation(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Azimuth/elevation angles (radians, normalized to `[0, 2π)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    /// AoA at the BS from the RIS (azimuth).
    pub phi_r_a: f64,
    /// AoA at the BS from the RIS (elevation).
    pub phi_r_e: f64,
    /// AoD from the RIS towards the BS (azimuth).
    pub phi_t_a: f64,
    /// AoD from the RIS towards the BS (elevation).
    pub phi_t_e: f64,
    /// Per-user AoA at the RIS (azimuth).
    pub phi_kr_a: Vec<f64>,
    /// Per-user AoA at the RIS (elevation).
    pub phi_kr_e: Vec<f64>,
}

impl AngleSet {
    /// Draws all angles uniformly on `[0, 2π)` in a fixed order:
    /// `phi_r_a, phi_r_e, phi_t_a, phi_t_e`, then `(phi_kr_a, phi_kr_e)`
    /// per user.
    pub fn draw<R: Rng>(users: usize, rng: &mut R) -> Self {
        let mut unit = || rng.random::<f64>() * TAU;
        let phi_r_a = unit();
        let phi_r_e = unit();
        let phi_t_a = unit();
        let phi_t_e = unit();
        let mut phi_kr_a = Vec::with_capacity(users);
        let mut phi_kr_e = Vec::with_capacity(users);
        for _ in 0..users {
            phi_kr_a.push(unit());
            phi_kr_e.push(unit());
        }
        AngleSet { phi_r_a, phi_r_e, phi_t_a, phi_t_e, phi_kr_a, phi_kr_e }
    }

    /// All angles zero: every steering vector collapses to the all-ones
    /// vector. Handy for deterministic tests.
    pub fn zeros(users: usize) -> Self {
        AngleSet {
            phi_r_a: 0.0,
            phi_r_e: 0.0,
            phi_t_a: 0.0,
            phi_t_e: 0.0,
            phi_kr_a: vec![0.0; users],
            phi_kr_e: vec![0.0; users],
        }
    }

    fn normalized(mut self) -> Self {
        self.phi_r_a = normalize_angle(self.phi_r_a);
        self.phi_r_e = normalize_angle(self.phi_r_e);
        self.phi_t_a = normalize_angle(self.phi_t_a);
        self.phi_t_e = normalize_angle(self.phi_t_e);
        for a in self.phi_kr_a.iter_mut().chain(self.phi_kr_e.iter_mut()) {
            *a = normalize_angle(*a);
        }
        self
    }

    fn validate(&self, users: usize) -> Result<()> {
        if self.phi_kr_a.len() != users || self.phi_kr_e.len() != users {
            return Err(Error::Validation(format!(
                "user angle arrays have lengths {}/{}, expected K={users}",
                self.phi_kr_a.len(),
                self.phi_kr_e.len()
            )));
        }
        let all = [self.phi_r_a, self.phi_r_e, self.phi_t_a, self.phi_t_e];
        for &a in all.iter().chain(self.phi_kr_a.iter()).chain(self.phi_kr_e.iter()) {
            if !a.is_finite() || !(0.0..TAU).contains(&a) {
                return Err(Error::Validation(format!("angle {a} outside [0, 2π)")));
            }
        }
        Ok(())
    }
}

/// Transmit powers, noise power, and element spacing ratio d/λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Per-user transmit power (linear watts).
    pub p: Vec<f64>,
    /// Noise power σ² (linear watts).
    pub sigma2: f64,
    /// Element spacing over wavelength, d/λ.
    pub spacing_ratio: f64,
}

impl LinkBudget {
    fn validate(&self, users: usize) -> Result<()> {
        if self.p.len() != users {
            return Err(Error::Validation(format!("p has length {}, expected K={users}", self.p.len())));
        }
        if let Some(x) = self.p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::Validation(format!("transmit power must be finite and >= 0, got {x}")));
        }
        if !self.sigma2.is_finite() || self.sigma2 <= 0.0 {
            return Err(Error::Validation(format!("sigma2 must be finite and > 0, got {}", self.sigma2)));
        }
        if !self.spacing_ratio.is_finite() || self.spacing_ratio <= 0.0 {
            return Err(Error::Validation(format!(
                "spacing_ratio must be finite and > 0, got {}",
                self.spacing_ratio
            )));
        }
        Ok(())
    }
}

/// Distances used to derive the path losses, kept for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryMeta {
    /// User–RIS circle radius (m).
    pub d_ui: f64,
    /// RIS–BS distance (m).
    pub d_ib: f64,
    /// Per-user user–BS distances (m).
    pub user_bs_dist: Vec<f64>,
}

/// A frozen system description. Everything downstream (closed forms,
/// samplers, the GA) borrows a `Scenario` immutably.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dims: Dimensions,
    pub fading: FadingParams,
    pub angles: AngleSet,
    pub budget: LinkBudget,
    pub geometry: Option<GeometryMeta>,
    /// Seed the angles were drawn from (0 when angles were given directly).
    pub seed: u64,
}

impl Scenario {
    /// Assembles and validates a scenario from explicit parts. Angles are
    /// normalized to `[0, 2π)` first.
    pub fn from_parts(
        dims: Dimensions,
        fading: FadingParams,
        angles: AngleSet,
        budget: LinkBudget,
        geometry: Option<GeometryMeta>,
        seed: u64,
    ) -> Result<Self> {
        let angles = angles.normalized();
        dims.validate()?;
        fading.validate(dims.k)?;
        angles.validate(dims.k)?;
        budget.validate(dims.k)?;
        Ok(Scenario { dims, fading, angles, budget, geometry, seed })
    }

    /// Number of users K.
    pub fn users(&self) -> usize {
        self.dims.k
    }
}

/// Distance from user `k` (1-based, as it enters the placement formula) to
/// the BS, for users on a circle of radius `d_ui` around the RIS with the
/// RIS `d_ib` away from the BS.
pub fn user_bs_distance(k: usize, users: usize, d_ui: f64, d_ib: f64) -> Result<f64> {
    if k == 0 || k > users {
        return Err(Error::IndexOutOfRange(format!("user index {k} not in 1..={users}")));
    }
    if !(d_ui >= 0.0 && d_ib > 0.0) || !d_ui.is_finite() || !d_ib.is_finite() {
        return Err(Error::Validation(format!("distances must satisfy d_ui >= 0, d_ib > 0, got {d_ui}, {d_ib}")));
    }
    let angle = std::f64::consts::PI / 5.0 * k as f64;
    let dx = d_ib - d_ui * angle.sin();
    let dy = d_ui * angle.cos();
    Ok((dx * dx + dy * dy).sqrt())
}

/// Distance-based path losses: `alpha_k = 1e-3 d_ui^-2`,
/// `beta = 1e-3 d_ib^-2.5`, `gamma_k = 1e-3 (d_k^UB)^-4`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathLossSet {
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub gamma: Vec<f64>,
    pub user_bs_dist: Vec<f64>,
}

pub fn path_loss_set(d_ui: f64, d_ib: f64, users: usize) -> Result<PathLossSet> {
    if d_ui <= 0.0 || d_ib <= 0.0 || !d_ui.is_finite() || !d_ib.is_finite() {
        return Err(Error::Validation(format!("distances must be finite and > 0, got d_ui={d_ui}, d_ib={d_ib}")));
    }
    let alpha = vec![1e-3 * d_ui.powi(-2); users];
    let beta = 1e-3 * d_ib.powf(-2.5);
    let mut gamma = Vec::with_capacity(users);
    let mut dist = Vec::with_capacity(users);
    for k in 1..=users {
        let d = user_bs_distance(k, users, d_ui, d_ib)?;
        dist.push(d);
        gamma.push(1e-3 * d.powi(-4));
    }
    Ok(PathLossSet { alpha, beta, gamma, user_bs_dist: dist })
}

/// A per-user config value: either one number broadcast to all K users or
/// an explicit K-length array.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Same(f64),
    Each(Vec<f64>),
}

impl PerUser {
    pub fn resolve(&self, users: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerUser::Same(x) => Ok(vec![*x; users]),
            PerUser::Each(v) if v.len() == users => Ok(v.clone()),
            PerUser::Each(v) => Err(Error::Config(format!(
                "{field} has {} entries, expected K={users} (or a single scalar)",
                v.len()
            ))),
        }
    }
}

fn default_spacing() -> f64 {
    0.5
}

/// JSON config schema for a scenario.
///
/// Path losses come either from the geometric recipe (`d_ui`, `d_ib`) or
/// from explicit linear overrides (`alpha`, `beta`, `gamma`); the geometric
/// recipe wins when both are present. Powers are quoted in dBm and converted
/// once at build time.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    pub epsilon: PerUser,
    pub p_dbm: PerUser,
    pub sigma2_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_ui: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_ib: Option<f64>,
    #[serde(default = "default_spacing")]
    pub spacing_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<PerUser>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<PerUser>,
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid scenario config: {e}")))
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Builds a scenario using the config's own seed (default 0) unless an
    /// override is given.
    pub fn build(&self, seed_override: Option<u64>) -> Result<Scenario> {
        build_scenario(self, seed_override.or(self.seed).unwrap_or(0))
    }
}

/// Builds a frozen [`Scenario`] from a config and a seed. Deterministic:
/// the same `(config, seed)` pair yields an identical scenario.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    let dims = Dimensions::new(config.m, config.n, config.k)?;
    dims.require_square_arrays()?;
    let users = dims.k;

    let epsilon = config.epsilon.resolve(users, "epsilon")?;
    let p_dbm = config.p_dbm.resolve(users, "p_dbm")?;
    let p = p_dbm.iter().map(|&x| dbm_to_watt(x)).collect::<Result<Vec<_>>>()?;
    let sigma2 = dbm_to_watt(config.sigma2_dbm)?;

    // geometric recipe wins over explicit overrides
    let (alpha, beta, gamma, geometry) = match (config.d_ui, config.d_ib) {
        (Some(d_ui), Some(d_ib)) => {
            let pl = path_loss_set(d_ui, d_ib, users)?;
            let meta = GeometryMeta { d_ui, d_ib, user_bs_dist: pl.user_bs_dist.clone() };
            (pl.alpha, pl.beta, pl.gamma, Some(meta))
        }
        (None, None) => {
            let alpha = config
                .alpha
                .as_ref()
                .ok_or_else(|| Error::Config("need either (d_ui, d_ib) or explicit alpha/beta/gamma".into()))?
                .resolve(users, "alpha")?;
            let beta = config
                .beta
                .ok_or_else(|| Error::Config("beta is required when path losses are explicit".into()))?;
            let gamma = config
                .gamma
                .as_ref()
                .ok_or_else(|| Error::Config("gamma is required when path losses are explicit".into()))?
                .resolve(users, "gamma")?;
            (alpha, beta, gamma, None)
        }
        _ => {
            return Err(Error::Config("d_ui and d_ib must be given together".into()));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = AngleSet::draw(users, &mut rng);

    Scenario::from_parts(
        dims,
        FadingParams { delta: config.delta, epsilon, alpha, beta, gamma },
        angles,
        LinkBudget { p, sigma2, spacing_ratio: config.spacing_ratio },
        geometry,
        seed,
    )
}
