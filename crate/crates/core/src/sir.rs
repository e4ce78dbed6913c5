//! Controlled SIR dynamics.
//!
//! The removed compartment is implicit (`r = 1 - s - i`) and never integrated.
//! Time is measured in days throughout.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};

/// Default integration step, in days.
pub const DEFAULT_DT: f64 = 0.01;

/// Slack allowed on the simplex constraints before a state is rejected.
pub(crate) const SIMPLEX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Infection rate, per day.
    pub beta: f64,
    /// Recovery rate, per day.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        require(
            beta.is_finite() && beta > 0.0,
            "beta",
            beta,
            "must be positive",
        )?;
        require(
            gamma.is_finite() && gamma > 0.0,
            "gamma",
            gamma,
            "must be positive",
        )?;
        Ok(Self { beta, gamma })
    }

    /// Basic reproduction number `beta / gamma`.
    pub fn r0(&self) -> f64 {
        self.beta / self.gamma
    }

    /// Herd immunity threshold `gamma / beta`.
    pub fn s_herd(&self) -> f64 {
        self.gamma / self.beta
    }

    pub(crate) fn require_supercritical(&self) -> Result<()> {
        let r0 = self.r0();
        require(
            r0 > 1.0,
            "r0",
            r0,
            "basic reproduction number must exceed 1",
        )
    }
}

/// Herd immunity threshold for `params`.
pub fn s_herd(params: &ModelParams) -> f64 {
    params.s_herd()
}

/// Susceptible and infected proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64) -> Result<Self> {
        let bad = |reason| Err(Error::InvalidState { s, i, reason });
        if !(s.is_finite() && i.is_finite()) {
            return bad("components must be finite");
        }
        if !(s > 0.0 && s <= 1.0) {
            return bad("s must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&i) {
            return bad("i must lie in [0, 1]");
        }
        if s + i > 1.0 + 1e-12 {
            return bad("s + i must not exceed 1");
        }
        Ok(Self { s, i })
    }

    /// Initial condition with no removed individuals: `s = 1 - i0`.
    pub fn from_infected(i0: f64) -> Result<Self> {
        Self::new(1.0 - i0, i0)
    }

    /// Removed proportion `1 - s - i`.
    pub fn r(&self) -> f64 {
        1.0 - self.s - self.i
    }
}

/// Bang-bang social distancing policy: contact factor `alpha` on
/// `[t_start, t_start + duration]` and 1 elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockdownPolicy {
    pub alpha: f64,
    pub t_start: f64,
    pub duration: f64,
}

impl LockdownPolicy {
    pub fn new(alpha: f64, t_start: f64, duration: f64) -> Result<Self> {
        require(
            (0.0..1.0).contains(&alpha),
            "alpha",
            alpha,
            "must lie in [0, 1)",
        )?;
        require(
            t_start.is_finite() && t_start >= 0.0,
            "t_start",
            t_start,
            "must be non-negative",
        )?;
        require(
            duration.is_finite() && duration > 0.0,
            "duration",
            duration,
            "must be positive",
        )?;
        Ok(Self {
            alpha,
            t_start,
            duration,
        })
    }

    /// A policy that never reduces contacts.
    pub fn none() -> Self {
        Self {
            alpha: 1.0,
            t_start: 0.0,
            duration: 0.0,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.duration > 0.0 && self.t_start <= t && t <= self.t_end()
    }
}

/// Value of the control at time `t`; the lockdown interval is closed.
pub fn control_value(policy: &LockdownPolicy, t: f64) -> f64 {
    if policy.is_active(t) {
        policy.alpha
    } else {
        1.0
    }
}

/// Right-hand side of the controlled SIR system, `(ds/dt, di/dt)`.
pub fn derivatives(params: &ModelParams, u: f64, x: &EpidemicState) -> (f64, f64) {
    let incidence = u * params.beta * x.s * x.i;
    (-incidence, incidence - params.gamma * x.i)
}

/// `s + i - ln(s) / r`, conserved along trajectories driven by a constant
/// control `u` when `r = u * beta / gamma`.
pub fn phi(r: f64, x: &EpidemicState) -> Result<f64> {
    require(r.is_finite() && r > 0.0, "r", r, "must be positive")?;
    if !(x.s > 0.0) {
        return Err(Error::InvalidState {
            s: x.s,
            i: x.i,
            reason: "phi requires s > 0",
        });
    }
    Ok(phi_unchecked(r, x.s, x.i))
}

#[inline]
pub(crate) fn phi_unchecked(r: f64, s: f64, i: f64) -> f64 {
    s + i - s.ln() / r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EpidemicState>,
    /// Running value of `∫ ds / I(s)` from `t_start`, frozen outside the
    /// lockdown interval. Present only when requested.
    pub aux_inv_i: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, EpidemicState)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &EpidemicState)> + '_ {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Internal integrator state: `[s, i, w]` where `w` accumulates `∫ 1/I`.
pub(crate) type Point = [f64; 3];

#[inline]
fn rhs(params: &ModelParams, u: f64, aux: bool, x: &Point) -> Point {
    let incidence = u * params.beta * x[0] * x[1];
    let dw = if aux { 1.0 / x[1] } else { 0.0 };
    [-incidence, incidence - params.gamma * x[1], dw]
}

#[inline]
pub(crate) fn rk4_step(params: &ModelParams, u: f64, aux: bool, x: &Point, h: f64) -> Point {
    let add = |a: &Point, k: &Point, c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
    let k1 = rhs(params, u, aux, x);
    let k2 = rhs(params, u, aux, &add(x, &k1, 0.5 * h));
    let k3 = rhs(params, u, aux, &add(x, &k2, 0.5 * h));
    let k4 = rhs(params, u, aux, &add(x, &k3, h));
    let mut out = *x;
    for c in 0..3 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

fn check_simplex(t: f64, x: &Point) -> Result<()> {
    let (s, i) = (x[0], x[1]);
    let ok = s.is_finite()
        && i.is_finite()
        && s > 0.0
        && i >= -SIMPLEX_SLACK
        && s + i <= 1.0 + SIMPLEX_SLACK;
    if ok {
        Ok(())
    } else {
        Err(Error::SimplexDrift { t, s, i })
    }
}

/// Number of RK4 steps covering `len` days with nominal step `dt`; the last
/// step absorbs the remainder so segment ends land exactly on a node.
fn step_count(len: f64, dt: f64) -> usize {
    ((len / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Integrates one constant-control segment `[t0, t1]` from `x`, calling
/// `visit` at every node after the first.
#[allow(clippy::too_many_arguments)]
pub(crate) fn advance(
    params: &ModelParams,
    u: f64,
    aux: bool,
    x: Point,
    t0: f64,
    t1: f64,
    dt: f64,
    mut visit: impl FnMut(f64, &Point),
) -> Result<Point> {
    let len = t1 - t0;
    if len <= 0.0 {
        return Ok(x);
    }
    let n = step_count(len, dt);
    let mut x = x;
    for k in 0..n {
        let (t, h) = if k + 1 == n {
            (t1, t1 - (t0 + k as f64 * dt))
        } else {
            (t0 + (k + 1) as f64 * dt, dt)
        };
        x = rk4_step(params, u, aux, &x, h);
        check_simplex(t, &x)?;
        visit(t, &x);
    }
    Ok(x)
}

/// Constant-control pieces `(t0, t1, u, lockdown)` of `policy` restricted to
/// `[0, t_end]`.
pub(crate) fn segments(policy: &LockdownPolicy, t_end: f64) -> Vec<(f64, f64, f64, bool)> {
    if policy.duration <= 0.0 || policy.t_start >= t_end {
        return vec![(0.0, t_end, 1.0, false)];
    }
    let lock_end = policy.t_end().min(t_end);
    let mut out = Vec::with_capacity(3);
    if policy.t_start > 0.0 {
        out.push((0.0, policy.t_start, 1.0, false));
    }
    out.push((policy.t_start, lock_end, policy.alpha, true));
    if lock_end < t_end {
        out.push((lock_end, t_end, 1.0, false));
    }
    out
}

fn validate_run(x0: &EpidemicState, t_end: f64, dt: f64) -> Result<()> {
    require(dt.is_finite() && dt > 0.0, "dt", dt, "must be positive")?;
    require(
        t_end.is_finite() && t_end > 0.0,
        "t_end",
        t_end,
        "must be positive",
    )?;
    EpidemicState::new(x0.s, x0.i)?;
    Ok(())
}

/// Integrates the controlled system with fixed-step RK4 up to `t_end`.
///
/// Control switches always fall on grid nodes. With `with_aux`, the integral
/// of `1/I` over the lockdown interval is co-integrated alongside `(s, i)`.
pub fn integrate(
    params: &ModelParams,
    policy: &LockdownPolicy,
    x0: &EpidemicState,
    t_end: f64,
    dt: f64,
    with_aux: bool,
) -> Result<Trajectory> {
    validate_run(x0, t_end, dt)?;
    if with_aux && x0.i == 0.0 {
        return Err(Error::InvalidState {
            s: x0.s,
            i: x0.i,
            reason: "auxiliary 1/I channel needs i0 > 0",
        });
    }

    let capacity = (t_end / dt) as usize + 4;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    let mut aux = with_aux.then(|| Vec::with_capacity(capacity));

    times.push(0.0);
    states.push(*x0);
    if let Some(w) = aux.as_mut() {
        w.push(0.0);
    }

    let mut x: Point = [x0.s, x0.i, 0.0];
    for (t0, t1, u, lockdown) in segments(policy, t_end) {
        x = advance(params, u, with_aux && lockdown, x, t0, t1, dt, |t, p| {
            times.push(t);
            states.push(EpidemicState { s: p[0], i: p[1] });
            if let Some(w) = aux.as_mut() {
                w.push(p[2]);
            }
        })?;
    }

    Ok(Trajectory {
        times,
        states,
        aux_inv_i: aux,
    })
}

/// State reached at `t_end`, without storing intermediate nodes.
pub(crate) fn propagate(
    params: &ModelParams,
    policy: &LockdownPolicy,
    x0: &EpidemicState,
    t_end: f64,
    dt: f64,
) -> Result<EpidemicState> {
    validate_run(x0, t_end, dt)?;
    let mut x: Point = [x0.s, x0.i, 0.0];
    for (t0, t1, u, _) in segments(policy, t_end) {
        x = advance(params, u, false, x, t0, t1, dt, |_, _| {})?;
    }
    Ok(EpidemicState { s: x[0], i: x[1] })
}
