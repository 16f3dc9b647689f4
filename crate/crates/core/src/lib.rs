//! Decomposition of `n x n` unitaries into embedded `m x m` unitary blocks and
//! final per-mode phases, plus Monte-Carlo tools for measuring how the
//! reconstructed unitary degrades when the blocks are noisy.
//!
//! ```
//! use mmdecomp::{decompose, haar_random_unitary, reconstruct};
//!
//! let u = haar_random_unitary(6, 1).unwrap();
//! let plan = decompose(&u, 3, None).unwrap();
//! let err = reconstruct(&plan).max_abs_diff(&u).unwrap();
//! assert!(err < 1e-9 * 6.0);
//! ```

pub mod cli;
pub mod decompose;
pub mod error;
pub mod io;
pub mod linalg;
pub mod robustness;
pub mod seed;
pub mod svg;

pub use decompose::{
    cost_compare, decompose, decompose_traced, embed_factor, factor_count_bound, reconstruct, verify,
    CostComparison, Decomposition, DecompositionPlan, Factor, SweepTrace, VerificationReport,
};
pub use error::{Error, Result};
pub use linalg::{haar_random_unitary, rq_decompose, unitarity, Complex, ComplexMatrix, UnitarityReport};
pub use robustness::{
    calibrate_sigma, component_fidelity_estimate, fidelity, perturb_factor, reconstruct_perturbed,
    sweep_noise, sweep_size, Calibration, FidelityStats, NoiseModel, SweepResult, TrialConfig,
};
