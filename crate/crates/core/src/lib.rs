//! Key distillability of shielded two-qubit states.
//!
//! A shielded state is `Σᵢ |φᵢ⟩⟨φᵢ| ⊗ σᵢ` with Bell states on the key qubits
//! and positive shield operators `σᵢ`. The crate decides entanglement of the
//! twisted key part, distillability by the recurrence protocol and by
//! advantage distillation, simulates both protocols, and evaluates the
//! threshold structure of the projector family.
//!
//! All numerics are generic over [`Scalar`] (`f32`, `f64`); the aliases below
//! fix `f64` for everyday use.

pub mod ccq;
pub mod criteria;
pub mod error;
pub mod operators;
pub mod recurrence;
pub mod sampling;
pub mod scalar;
pub mod shielded;

pub use ccq::{
    ad_block_stats, ad_monte_carlo, ad_security_check, apply_twisting, ccq_from_full_state, ccq_from_spectrum,
    purify, AdBlockStats, AdMonteCarlo, CcqDescriptor, EveStates, TwistingSpec,
};
pub use criteria::{
    ad_condition, ad_condition_lambda, entanglement_condition, full_verdict, full_verdict_with, noise_condition,
    noise_threshold_eps_star, noise_threshold_horodecki, noise_thresholds_horodecki, recurrence_condition,
    thresholds_horodecki, Condition, NoiseCondition, NoiseThresholds, Verdict, VerdictOptions,
};
pub use error::{Error, Result};
pub use operators::{
    bell_basis, is_ppt, partial_trace, partial_transpose, sym_antisym_projectors, tensor, trace_norm, CMatrix,
    HermitianOperator, KetVector, DEFAULT_MAX_DIM,
};
pub use recurrence::{closed_form_sequence, converges_to_private, explicit_round, iterate, RecurrenceTrace};
pub use scalar::Scalar;
pub use shielded::{
    add_white_noise, assemble_density, example_4x4, horodecki_family, key_spectrum, ppt_analytic_check, KeySpectrum,
    PptCheck, ShieldNorms, ShieldedState, StateSpec,
};

pub type Operator64 = HermitianOperator<f64>;
pub type Operator32 = HermitianOperator<f32>;
pub type Ket64 = KetVector<f64>;
pub type State64 = ShieldedState<f64>;
pub type State32 = ShieldedState<f32>;
pub type Spectrum64 = KeySpectrum<f64>;
pub type Verdict64 = Verdict<f64>;
pub type Ccq64 = CcqDescriptor<f64>;
pub type StateSpec64 = StateSpec<f64>;
