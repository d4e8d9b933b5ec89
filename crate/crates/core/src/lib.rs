//! Minimum-error detection of weak magnetic fields with a dephasing
//! nitrogen-vacancy (NV) center qubit.
//!
//! The crate is organised bottom-up:
//!
//! * [`noise`] turns a π-pulse sequence and Ornstein–Uhlenbeck noise
//!   parameters into the dephasing factor ν.
//! * [`field`] turns a field hypothesis into the complex phase factor μ and
//!   builds the pulse sequences (CPMG, node-locked).
//! * [`discrim`] solves the binary discrimination problem for a pair
//!   (ν, μ): Helstrom error, optimal measurement, majority voting and finite
//!   photon detection efficiency.
//! * [`optimize`] picks the interrogation time or pulse count.
//! * [`simulate`] is an end-to-end Monte Carlo used to validate the closed
//!   forms.
//!
//! Units are fixed throughout: time in µs, frequency in MHz, field in µT,
//! κ in µs⁻¹ and γ in MHz/µT.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrim;
pub mod error;
pub mod exec;
pub mod field;
pub mod noise;
pub(crate) mod numeric;
pub mod optimize;
pub mod simulate;

pub use discrim::{
    conditional_errors, discriminate, helstrom_error, helstrom_general, inefficient_error, multicopy_error,
    optimal_chi, projectors_from_chi, CoherencePair, ConditionalErrors, DensityMatrix, DiscriminationOutcome, Priors,
    Regime,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::{FieldHypothesis, Gyromagnetic, MultiTone, Tone};
pub use noise::{NoiseModel, PulseSequence};
pub use optimize::{optimize_pulses, optimize_time, Dephasing, Evaluation, Interrogation, Optimum, Protocol, Scenario};
pub use simulate::{simulate_detection, simulate_multicopy, EmpiricalResult};
