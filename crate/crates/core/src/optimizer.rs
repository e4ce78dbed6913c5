//! Optimal start time of a lockdown of fixed intensity and duration.
//!
//! For `alpha > 0` the optimal start `T*` is the unique zero of [`psi`] (or 0
//! when `psi(0) >= 0`); equivalently it minimizes [`j_cost`], which decreases
//! before `T*` and increases after. Both searches are bracketed by the time at
//! which the uncontrolled epidemic crosses `S_herd`. For `alpha = 0`, `psi`
//! vanishes identically and `T*` is that crossing time.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::final_size::{self, FinalSizeQuery, DEFAULT_TOL_S};
use crate::sir::{
    self, phi_unchecked, rk4_step, EpidemicState, LockdownPolicy, ModelParams, Point,
};

pub const DEFAULT_TOL_T: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Crossing searches give up after this many days.
const MAX_HORIZON: f64 = 1.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// RK4 step, in days.
    pub dt: f64,
    /// Width of the final bracket on `T*`, in days.
    pub tol_t: f64,
    /// Absolute tolerance of the final-size root solve.
    pub tol_s: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt: sir::DEFAULT_DT,
            tol_t: DEFAULT_TOL_T,
            tol_s: DEFAULT_TOL_S,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        require(
            self.dt.is_finite() && self.dt > 0.0,
            "dt",
            self.dt,
            "must be positive",
        )?;
        require(
            self.tol_t.is_finite() && self.tol_t > 0.0,
            "tol_t",
            self.tol_t,
            "must be positive",
        )?;
        require(
            self.tol_s.is_finite() && self.tol_s > 0.0,
            "tol_s",
            self.tol_s,
            "must be positive",
        )?;
        require(
            self.max_iter > 0,
            "max_iter",
            self.max_iter as f64,
            "must be positive",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimProblem {
    pub params: ModelParams,
    /// Maximal lockdown intensity, in `[0, 1)`.
    pub alpha: f64,
    /// Lockdown duration, in days.
    pub duration: f64,
    pub x0: EpidemicState,
    pub settings: SolverSettings,
}

impl OptimProblem {
    pub fn new(params: ModelParams, alpha: f64, duration: f64, x0: EpidemicState) -> Result<Self> {
        let prob = Self {
            params,
            alpha,
            duration,
            x0,
            settings: SolverSettings::default(),
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        self.settings = settings;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.params.beta, self.params.gamma)?;
        self.params.require_supercritical()?;
        EpidemicState::new(self.x0.s, self.x0.i)?;
        if !(self.x0.i > 0.0) {
            return Err(Error::InvalidState {
                s: self.x0.s,
                i: self.x0.i,
                reason: "optimization needs i0 > 0",
            });
        }
        LockdownPolicy::new(self.alpha, 0.0, self.duration)?;
        self.settings.validate()
    }

    pub fn policy(&self, t_start: f64) -> LockdownPolicy {
        LockdownPolicy {
            alpha: self.alpha,
            t_start,
            duration: self.duration,
        }
    }

    /// Conserved level `phi(R0, x0)` of the free system before any lockdown.
    pub fn c0(&self) -> f64 {
        phi_unchecked(self.params.r0(), self.x0.s, self.x0.i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCase {
    /// `T*` is the interior zero of `psi`.
    InteriorRoot,
    /// `psi(0) >= 0`: start the lockdown immediately.
    AtZero,
    /// `alpha = 0`: start when the free epidemic reaches `S_herd`.
    HerdCrossingAlpha0,
    /// `S0 <= S_herd`: the epidemic never grows.
    EpidemicSubcritical,
}

impl BoundaryCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCase::InteriorRoot => "interior_root",
            BoundaryCase::AtZero => "at_zero",
            BoundaryCase::HerdCrossingAlpha0 => "herd_crossing_alpha0",
            BoundaryCase::EpidemicSubcritical => "epidemic_subcritical",
        }
    }
}

impl std::fmt::Display for BoundaryCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub t_star: f64,
    pub s_inf: f64,
    /// `s_inf / S_herd`.
    pub ratio_herd: f64,
    pub c0: f64,
    pub iterations: usize,
    pub boundary_case: BoundaryCase,
    /// Susceptible proportion when the lockdown starts.
    pub s_at_start: f64,
    /// Upper end of the initial search bracket, when one was needed.
    pub t_upper: Option<f64>,
}

/// State of the free system at time `t`.
fn free_state(params: &ModelParams, x0: &EpidemicState, t: f64, dt: f64) -> Result<EpidemicState> {
    if t <= 0.0 {
        return Ok(*x0);
    }
    sir::propagate(params, &LockdownPolicy::none(), x0, t, dt)
}

/// Optimality function whose unique zero is the optimal start time.
///
/// Integrates under `u_{t, t+D}` with the `1/I` channel co-integrated over
/// the lockdown and returns
/// `-I(t+D)/I(t) + (alpha - 1) gamma I(t+D) ∫_t^{t+D} ds/I(s) + 1`.
pub fn psi(prob: &OptimProblem, t: f64) -> Result<f64> {
    prob.validate()?;
    require(t.is_finite() && t >= 0.0, "t", t, "must be non-negative")?;
    let dt = prob.settings.dt;
    let at_start = free_state(&prob.params, &prob.x0, t, dt)?;
    if !(at_start.i > f64::MIN_POSITIVE) {
        return Err(Error::InfectedUnderflow { t, i: at_start.i });
    }
    let start: Point = [at_start.s, at_start.i, 0.0];
    let end = sir::advance(
        &prob.params,
        prob.alpha,
        true,
        start,
        t,
        t + prob.duration,
        dt,
        |_, _| {},
    )?;
    let (i_end, w) = (end[1], end[2]);
    Ok(-i_end / at_start.i + (prob.alpha - 1.0) * prob.params.gamma * i_end * w + 1.0)
}

/// Cost `phi(R0, X(t + D))` of starting the lockdown at `t`; minimizing it
/// maximizes the final susceptible proportion.
pub fn j_cost(prob: &OptimProblem, t: f64) -> Result<f64> {
    prob.validate()?;
    require(t.is_finite() && t >= 0.0, "t", t, "must be non-negative")?;
    let end = sir::propagate(
        &prob.params,
        &prob.policy(t),
        &prob.x0,
        t + prob.duration,
        prob.settings.dt,
    )?;
    Ok(phi_unchecked(prob.params.r0(), end.s, end.i))
}

/// Closed forms of [`j_cost`] obtained from the invariants on each segment:
/// `c0 + (gamma/beta)(1/alpha - 1) ln(S(t+D)/S(t))` for `alpha > 0`, and
/// `(e^{-gamma D} - 1) I(t) + c0` for `alpha = 0`.
pub fn j_cost_closed_form(prob: &OptimProblem, t: f64) -> Result<f64> {
    prob.validate()?;
    require(t.is_finite() && t >= 0.0, "t", t, "must be non-negative")?;
    let dt = prob.settings.dt;
    let gamma = prob.params.gamma;
    let at_start = free_state(&prob.params, &prob.x0, t, dt)?;
    if prob.alpha == 0.0 {
        return Ok(((-gamma * prob.duration).exp() - 1.0) * at_start.i + prob.c0());
    }
    let end = sir::propagate(
        &prob.params,
        &prob.policy(t),
        &prob.x0,
        t + prob.duration,
        dt,
    )?;
    Ok(prob.c0() + (1.0 / prob.params.r0()) * (1.0 / prob.alpha - 1.0) * (end.s / at_start.s).ln())
}

/// Time at which the uncontrolled epidemic reaches `S(t) = S_herd`.
///
/// The crossing step is located on the RK4 grid and then refined by bisecting
/// the length of a single RK4 step taken from the last node above threshold.
pub fn herd_crossing_time(params: &ModelParams, x0: &EpidemicState, dt: f64) -> Result<f64> {
    ModelParams::new(params.beta, params.gamma)?;
    EpidemicState::new(x0.s, x0.i)?;
    require(dt.is_finite() && dt > 0.0, "dt", dt, "must be positive")?;
    let s_herd = params.s_herd();
    if !(x0.s > s_herd) || !(x0.i > 0.0) {
        return Err(Error::NoHerdCrossing { s0: x0.s, s_herd });
    }

    let mut x: Point = [x0.s, x0.i, 0.0];
    let mut t = 0.0;
    let mut k = 0u64;
    loop {
        let next = rk4_step(params, 1.0, false, &x, dt);
        if next[0] <= s_herd {
            break;
        }
        k += 1;
        t = k as f64 * dt;
        x = next;
        if t > MAX_HORIZON {
            return Err(Error::NoHerdCrossing { s0: x0.s, s_herd });
        }
    }

    let (mut lo, mut hi) = (0.0, dt);
    while hi - lo > dt * 1e-9 {
        let mid = 0.5 * (lo + hi);
        if rk4_step(params, 1.0, false, &x, mid)[0] > s_herd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(t + 0.5 * (lo + hi))
}

enum Bracket {
    Subcritical,
    Upper(f64),
}

fn bracket(prob: &OptimProblem) -> Result<Bracket> {
    prob.validate()?;
    if prob.x0.s <= prob.params.s_herd() {
        return Ok(Bracket::Subcritical);
    }
    herd_crossing_time(&prob.params, &prob.x0, prob.settings.dt).map(Bracket::Upper)
}

fn finish(
    prob: &OptimProblem,
    t_star: f64,
    iterations: usize,
    boundary_case: BoundaryCase,
    t_upper: Option<f64>,
) -> Result<OptimResult> {
    let st = &prob.settings;
    let s_inf = match boundary_case {
        BoundaryCase::EpidemicSubcritical => final_size::final_size_from_state(
            &FinalSizeQuery {
                params: prob.params,
                terminal_state: prob.x0,
            },
            st.tol_s,
        )?,
        _ => final_size::final_size_of_policy(
            &prob.params,
            &prob.policy(t_star),
            &prob.x0,
            st.dt,
            st.tol_s,
        )?,
    };
    let s_at_start = free_state(&prob.params, &prob.x0, t_star, st.dt)?.s;
    Ok(OptimResult {
        t_star,
        s_inf,
        ratio_herd: s_inf / prob.params.s_herd(),
        c0: prob.c0(),
        iterations,
        boundary_case,
        s_at_start,
        t_upper,
    })
}

/// Locates `T*` by bisection on the sign of [`psi`].
pub fn optimize_bisection(prob: &OptimProblem) -> Result<OptimResult> {
    let t_upper = match bracket(prob)? {
        Bracket::Subcritical => {
            return finish(prob, 0.0, 0, BoundaryCase::EpidemicSubcritical, None)
        }
        Bracket::Upper(t) => t,
    };
    if prob.alpha == 0.0 {
        return finish(
            prob,
            t_upper,
            0,
            BoundaryCase::HerdCrossingAlpha0,
            Some(t_upper),
        );
    }
    if psi(prob, 0.0)? >= 0.0 {
        return finish(prob, 0.0, 0, BoundaryCase::AtZero, Some(t_upper));
    }

    let st = &prob.settings;
    let (mut lo, mut hi) = (0.0, t_upper);
    let mut iterations = 0;
    while hi - lo >= st.tol_t {
        if iterations >= st.max_iter {
            return Err(Error::MaxIterations { iterations, lo, hi });
        }
        let mid = 0.5 * (lo + hi);
        if psi(prob, mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    finish(
        prob,
        0.5 * (lo + hi),
        iterations,
        BoundaryCase::InteriorRoot,
        Some(t_upper),
    )
}

/// Locates `T*` by ternary search on the unimodal cost [`j_cost`].
pub fn optimize_trisection(prob: &OptimProblem) -> Result<OptimResult> {
    let t_upper = match bracket(prob)? {
        Bracket::Subcritical => {
            return finish(prob, 0.0, 0, BoundaryCase::EpidemicSubcritical, None)
        }
        Bracket::Upper(t) => t,
    };
    let st = &prob.settings;
    let k = if t_upper > st.tol_t {
        ((t_upper / st.tol_t).ln() / 1.5f64.ln()).ceil() as usize
    } else {
        0
    };
    if k > st.max_iter {
        return Err(Error::MaxIterations {
            iterations: st.max_iter,
            lo: 0.0,
            hi: t_upper,
        });
    }

    let (mut lo, mut hi) = (0.0, t_upper);
    for _ in 0..k {
        let left = lo + (hi - lo) / 3.0;
        let right = lo + 2.0 * (hi - lo) / 3.0;
        if j_cost(prob, right)? >= j_cost(prob, left)? {
            hi = right;
        } else {
            lo = left;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let case = if prob.alpha == 0.0 {
        BoundaryCase::HerdCrossingAlpha0
    } else if lo == 0.0 && psi(prob, 0.0)? >= 0.0 {
        BoundaryCase::AtZero
    } else {
        BoundaryCase::InteriorRoot
    };
    finish(prob, t_star, k, case, Some(t_upper))
}
