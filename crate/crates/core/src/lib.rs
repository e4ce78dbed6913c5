//! Optimal timing of a finite-duration social distancing policy for the SIR
//! epidemic model.
//!
//! Given a maximal lockdown intensity `alpha` and a duration `D`, the final
//! epidemic size is minimized by a single bang-bang lockdown `u = alpha` on
//! `[T*, T* + D]`. This crate locates `T*`, evaluates the resulting final size
//! and runs parameter sweeps.
//!
//! ```
//! use lockdown_core::{optimize_bisection, EpidemicState, ModelParams, OptimProblem};
//!
//! let params = ModelParams::new(0.29, 0.1)?;
//! let x0 = EpidemicState::from_infected(1.49e-5)?;
//! let res = optimize_bisection(&OptimProblem::new(params, 0.231, 30.0, x0)?)?;
//! assert!(res.s_inf > 0.2 && res.s_inf <= params.s_herd());
//! # Ok::<(), lockdown_core::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod final_size;
pub mod optimizer;
pub mod sir;
pub mod sweep;

pub use error::{Error, Result};
pub use final_size::{
    alpha_bar, final_size_constant_control, final_size_from_state, final_size_of_policy,
    FinalSizeQuery,
};
pub use optimizer::{
    herd_crossing_time, j_cost, j_cost_closed_form, optimize_bisection, optimize_trisection, psi,
    BoundaryCase, OptimProblem, OptimResult, SolverSettings,
};
pub use sir::{
    control_value, derivatives, integrate, phi, s_herd, EpidemicState, LockdownPolicy, ModelParams,
    Trajectory,
};
pub use sweep::{
    normalize, run_sweep, table_rows, Normalized, SweepRow, SweepSpec, TableRow, DEFAULT_I0,
    REFERENCE_GAMMA,
};
