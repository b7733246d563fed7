//! Sparse regression of polynomial chaos coefficients: LAR selection,
//! least-squares refits with leave-one-out model selection, and the
//! degree-adaptive sweep.

mod fit;
mod lar;
mod qr;

pub use fit::{
    adaptive_fit, generalization_error, hybrid_fit, AdaptiveOptions, DegreeRecord, FitDiagnostics, FitOptions,
    ResponseScale, SkippedPrefix, SparsePce, ERROR_FLOOR,
};
pub use lar::{lar_path, LarPath, CORRELATION_TOL};
pub use qr::{
    correction_factor, corrected_loo, loo_error, sample_variance, IncrementalQr, Push, DEPENDENCE_TOL,
    LEVERAGE_GUARD, MAX_CONDITION,
};
