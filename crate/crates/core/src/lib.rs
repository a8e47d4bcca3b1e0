//! Unambiguous discrimination of symmetric qudit state families.
//!
//! The crate builds unambiguous-discrimination (USD) measurements for
//! families of nonorthogonal unit vectors, simulates chains of observers
//! that measure the same carrier one after another, computes the capacities
//! of the induced erasure channels, and models a minimum-error
//! intercept-resend attack on the chain.
//!
//! Modules:
//! - [`matrix`]: small dense symmetric linear algebra (Jacobi eigensolver,
//!   PSD checks, inverse square roots, Cholesky, Gram matrices).
//! - [`states`]: equal-overlap and two-set state families plus their
//!   reciprocal (dual) vector sets.
//! - [`usd`]: the equal-overlap USD measurement with a tunable
//!   post-measurement overlap.
//! - [`usd_twoset`]: the two-overlap-class generalization with independent
//!   constants per class.
//! - [`chain`]: planning and Monte Carlo simulation of sequential
//!   measurement chains.
//! - [`capacity`]: erasure-channel capacities, numerical maximization and
//!   figure-data generation.
//! - [`eve`]: square-root (minimum-error) measurement and the
//!   intercept-resend eavesdropping simulation.
//! - [`rng`]: splittable counter-based random streams for reproducible
//!   Monte Carlo.
//!
//! ```
//! use seqdisc_core::{build_equal_overlap, build_measurement, exact_success, plan_equal_split};
//!
//! // three states with pairwise overlap 0.25, measured by two observers
//! // that split the failure probability evenly
//! let family = build_equal_overlap(3, 0.25)?;
//! let bob = build_measurement(&family, 0.5)?;
//! assert!((bob.t() - 0.5).abs() < 1e-12);
//!
//! // an optimal second observer closes the product law q_B * q_C = s
//! let charlie = build_measurement(bob.post_family(), bob.t())?;
//! assert!((bob.q() * charlie.q() - 0.25).abs() < 1e-12);
//!
//! // the same split, as a chain plan
//! let plan = plan_equal_split(3, 0.25, 2)?;
//! assert!((exact_success(&plan) - 0.25).abs() < 1e-12);
//! # Ok::<(), seqdisc_core::Error>(())
//! ```

pub mod capacity;
pub mod chain;
pub mod error;
pub mod eve;
pub mod matrix;
pub mod rng;
pub mod states;
pub mod usd;
pub mod usd_twoset;

pub use capacity::{
    binary_entropy, capacity_equal, capacity_two_rate, combined_capacity, figure_data,
    mutual_info_two_rate, series_gmax, CapacityResult, ErasureChannelSpec, FigureGrid, FigureId,
    FigureRow, FigureTable,
};
pub use chain::{
    build_stage_measurements, exact_success, plan_custom, plan_equal_split, simulate_chain,
    ChainPlan, ChainRunStats,
};
pub use error::{Error, Result};
pub use eve::{
    build_sqrt_measurement, eve_success, intercept_resend_sim, AttackStats, MinErrorMeasurement,
};
pub use matrix::{gram, EigenDecomposition, Matrix, PsdCheck, SymMatrix};
pub use rng::RngStream;
pub use states::{
    build_equal_overlap, build_two_set, equal_overlap_from_mixing, reciprocal_closed_form,
    reciprocal_equal_closed_form, reciprocal_generic, reciprocal_twoset_closed_form, OverlapSpec,
    ReciprocalSet, StateFamily,
};
pub use usd::{
    build_measurement, build_measurement_with_post_overlap, failure_prob_from_c, max_c,
    MeasurementOutcome, UsdMeasurement, UsdValidation,
};
pub use usd_twoset::{
    bob_charlie_product_law, build_twoset_measurement, positivity_check, PositivityReport,
    ProductLaw, TwoSetUsdMeasurement, TwoSetValidation,
};
