//! Statistical-CSI analysis toolkit for RIS-aided massive MIMO uplinks with
//! direct links.
//!
//! The toolkit covers four pieces that cross-validate each other:
//!
//! * [`scenario`] — system parameters, geometry-derived path losses, and
//!   seeded angle generation behind a JSON config schema;
//! * [`channel`] — USPA steering vectors, Rician/Rayleigh sampling, and the
//!   cascaded user→RIS→BS link;
//! * [`closed_form`] — the ergodic-rate expression evaluated purely from
//!   statistical CSI, with its no-RIS / pure-NLoS / random-phase reductions
//!   and crossover thresholds;
//! * [`monte_carlo`] — seeded estimators for the rate and for every
//!   supporting moment identity, with standard errors, used to validate the
//!   closed forms;
//! * [`ga`] — genetic-algorithm phase design maximizing the closed-form sum
//!   rate;
//! * [`sweep`] — the parameter-sweep driver behind the CLI.
//!
//! All randomness flows through counter-based substreams keyed by explicit
//! seeds; parallel runs (the default, see the `parallel` feature) reduce in
//! a fixed order and reproduce sequential results bit-for-bit.

pub mod channel;
pub mod closed_form;
pub mod error;
pub mod exec;
pub mod ga;
pub mod monte_carlo;
pub mod scenario;
pub mod sweep;

pub use channel::{ChannelRealization, ChannelSampler, PhaseShifts};
pub use closed_form::{RateBreakdown, RateModel};
pub use error::{Error, Result};
pub use exec::Exec;
pub use ga::{GaConfig, GaRun, GaTrace};
pub use monte_carlo::{McEstimate, MomentReport};
pub use scenario::{build_scenario, Scenario, ScenarioConfig};
pub use sweep::{ResultRow, SweepMode, SweepOptions, SweepSpec, SweepVariable};
