//! Harmonic-oscillator algebra and the order-2 quasimode.

mod basis;
mod envelope;
mod expansion;
mod trial;

pub use basis::{moment_table, OscillatorBasis};
pub use envelope::{cutoff_exponent, gaussian_envelope, Envelope, MomentNorm, SmoothCutoff};
pub use expansion::{
    apply_operator, build_order2_quasimode, lambda2_formula, oscillator_resolvent_solve, FrozenOperators,
    ModeExpansion, Monomial, Order2Quasimode, MAX_DERIVATIVE,
};
pub use trial::{assemble_trial_state, QuasimodeBundle, TrialOptions, MASS_LOSS_LIMIT};
