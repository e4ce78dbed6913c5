//! Final epidemic size through the conserved quantity `phi`.
//!
//! Once the control is back to a constant `u`, `phi(u R0, ·)` is conserved and
//! `I -> 0`, so the limit `S∞` solves `phi(u R0, (S∞, 0)) = phi(u R0, x)`. On
//! `(0, 1/(u R0)]` the map `s -> phi(r, (s, 0))` is strictly decreasing, which
//! makes bisection unconditionally convergent.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::sir::{self, phi_unchecked, EpidemicState, LockdownPolicy, ModelParams};

/// Default absolute tolerance on `S∞`.
pub const DEFAULT_TOL_S: f64 = 1e-10;

const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSizeQuery {
    pub params: ModelParams,
    /// State at the moment the control returns to 1 for good.
    pub terminal_state: EpidemicState,
}

/// Root of `phi(r, (s, 0)) = level` on `(0, upper]`, assuming
/// `phi(r, (upper, 0)) <= level` and `upper <= 1/r`.
fn invariant_root(r: f64, level: f64, upper: f64, tol: f64) -> Result<f64> {
    let f = |s: f64| phi_unchecked(r, s, 0.0) - level;

    let mut hi = upper;
    if f(hi) >= 0.0 {
        return Ok(hi);
    }
    let mut lo = 0.5 * upper;
    let mut halvings = 0;
    while f(lo) <= 0.0 {
        hi = lo;
        lo *= 0.5;
        halvings += 1;
        if halvings >= MAX_HALVINGS {
            return Err(Error::NoBracket { halvings, level });
        }
    }

    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn validate_tol(tol: f64) -> Result<()> {
    require(tol.is_finite() && tol > 0.0, "tol", tol, "must be positive")
}

/// Limit of `S` for the free (`u ≡ 1`) system started from the terminal state.
pub fn final_size_from_state(q: &FinalSizeQuery, tol: f64) -> Result<f64> {
    validate_tol(tol)?;
    let x = q.terminal_state;
    if !(x.s > 0.0) || x.i < 0.0 || !x.i.is_finite() {
        return Err(Error::InvalidState {
            s: x.s,
            i: x.i,
            reason: "terminal state needs s > 0 and i >= 0",
        });
    }
    let r0 = q.params.r0();
    let level = phi_unchecked(r0, x.s, x.i);
    invariant_root(r0, level, q.params.s_herd().min(1.0), tol)
}

/// Final size under the bang-bang policy: integrate through the lockdown,
/// then solve the invariant equation for the free system.
pub fn final_size_of_policy(
    params: &ModelParams,
    policy: &LockdownPolicy,
    x0: &EpidemicState,
    dt: f64,
    tol: f64,
) -> Result<f64> {
    let t_end = policy.t_end();
    let terminal = if t_end > 0.0 {
        sir::propagate(params, policy, x0, t_end, dt)?
    } else {
        *x0
    };
    final_size_from_state(
        &FinalSizeQuery {
            params: *params,
            terminal_state: terminal,
        },
        tol,
    )
}

/// Critical lockdown intensity: below it, a long enough lockdown brings the
/// final size arbitrarily close to `S_herd`.
pub fn alpha_bar(params: &ModelParams, x0: &EpidemicState) -> Result<f64> {
    let s_herd = params.s_herd();
    if !(x0.s > s_herd) {
        return Err(Error::InvalidState {
            s: x0.s,
            i: x0.i,
            reason: "critical intensity needs s0 > S_herd",
        });
    }
    let value = s_herd / (x0.s + x0.i - s_herd) * (x0.s.ln() - s_herd.ln());
    require(
        value > 0.0 && value < 1.0,
        "alpha_bar",
        value,
        "critical intensity fell outside (0, 1)",
    )?;
    Ok(value)
}

/// Limit of `S` under the constant control `u ≡ alpha`.
pub fn final_size_constant_control(
    params: &ModelParams,
    alpha: f64,
    x0: &EpidemicState,
    tol: f64,
) -> Result<f64> {
    validate_tol(tol)?;
    require(
        alpha.is_finite() && alpha > 0.0 && alpha <= 1.0,
        "alpha",
        alpha,
        "must lie in (0, 1]",
    )?;
    EpidemicState::new(x0.s, x0.i)?;
    let r = alpha * params.r0();
    let level = phi_unchecked(r, x0.s, x0.i);
    invariant_root(r, level, (1.0 / r).min(x0.s), tol)
}
