//! Numerical workbench for Carleman-type estimates of the wave equation with
//! potential: convex radial weights, the conjugated operator pair `(S, A)`,
//! the monotonicity ledger, positivity thresholds and waveguide diagnostics.

pub mod error;
pub mod field;
pub mod monotonicity;
pub mod numerics;
pub mod operators;
pub mod positivity;
pub mod potential;
pub mod suite;
pub mod tridiagonal;
pub mod waveguide;
pub mod weights;

pub use error::{Error, Result};
pub use field::{GridSpec, ScalarField, SpaceTimeField, C64};
pub use monotonicity::{
    boundary_sequence_scan, evaluate_ledger, h_trace, identity_report, localized_ledger,
    verify_identity_eq1, CarlemanLedger, CutoffSpec, HTrace, LocalizedLedger,
};
pub use operators::{assemble_bundle, commutator_closed_apply, verify_commutator, OperatorBundle};
pub use positivity::{
    localized_poincare_check, scan_thresholds, term_decomposition, verify_positivity,
    TermDecomposition, ThresholdReport,
};
pub use potential::{PotentialSpec, Profile};
pub use waveguide::{
    build_waveguide, measure_decay, pde_residual, solve_stationary, weighted_norm_scan,
    DecayReport, EigenPair, LogMagnitudeField, Phase, WaveguideSolution,
};
pub use weights::{
    build_power_weight, certify_weight, eval_weight, solve_log_weight_coefficients, Weight,
    WeightCertificate, WeightCoefficients, WeightJet, WeightKind,
};
