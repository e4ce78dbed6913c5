//! Parameter sweeps over `(R0, alpha, D)` and the start-time tables.
//!
//! Every grid point is solved on the system rescaled to `gamma' = 0.1`, which
//! keeps `R0` and the final size unchanged and stretches time by `gamma / 0.1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require, Result};
use crate::final_size::{self, FinalSizeQuery};
use crate::optimizer::{optimize_bisection, BoundaryCase, OptimProblem, SolverSettings};
use crate::sir::{EpidemicState, ModelParams};

/// Recovery rate of the normalized system, per day.
pub const REFERENCE_GAMMA: f64 = 0.1;

/// Initial infected proportion used when a sweep does not specify one.
pub const DEFAULT_I0: f64 = 1.49e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub params: ModelParams,
    pub duration: f64,
    /// Factor mapping normalized times back to real ones: `T* = time_scale * T'*`.
    pub time_scale: f64,
}

/// Rescales `(gamma, beta, d)` to the system with `gamma' = 0.1`.
pub fn normalize(gamma: f64, beta: f64, d: f64) -> Result<Normalized> {
    require(
        gamma.is_finite() && gamma > 0.0,
        "gamma",
        gamma,
        "must be positive",
    )?;
    let params = ModelParams::new(beta / gamma * REFERENCE_GAMMA, REFERENCE_GAMMA)?;
    Ok(Normalized {
        params,
        duration: gamma / REFERENCE_GAMMA * d,
        time_scale: REFERENCE_GAMMA / gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub r0_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    /// Lockdown durations, in days of the real (unnormalized) system.
    pub d_values: Vec<f64>,
    pub base_gamma: f64,
    pub x0: EpidemicState,
    /// Solver settings applied to the normalized system.
    pub settings: SolverSettings,
}

impl SweepSpec {
    pub fn new(r0_values: Vec<f64>, alpha_values: Vec<f64>, d_values: Vec<f64>) -> Self {
        Self {
            r0_values,
            alpha_values,
            d_values,
            base_gamma: REFERENCE_GAMMA,
            x0: EpidemicState {
                s: 1.0 - DEFAULT_I0,
                i: DEFAULT_I0,
            },
            settings: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(
            !self.r0_values.is_empty(),
            "r0_values",
            0.0,
            "grid must not be empty",
        )?;
        require(
            !self.alpha_values.is_empty(),
            "alpha_values",
            0.0,
            "grid must not be empty",
        )?;
        require(
            !self.d_values.is_empty(),
            "d_values",
            0.0,
            "grid must not be empty",
        )?;
        for &r0 in &self.r0_values {
            require(r0.is_finite() && r0 > 1.0, "r0", r0, "must exceed 1")?;
        }
        for &a in &self.alpha_values {
            require((0.0..1.0).contains(&a), "alpha", a, "must lie in [0, 1)")?;
        }
        for &d in &self.d_values {
            require(d.is_finite() && d > 0.0, "d", d, "must be positive")?;
        }
        require(
            self.base_gamma.is_finite() && self.base_gamma > 0.0,
            "base_gamma",
            self.base_gamma,
            "must be positive",
        )?;
        EpidemicState::new(self.x0.s, self.x0.i)?;
        self.settings.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r0: f64,
    pub alpha: f64,
    pub d: f64,
    pub t_star: Option<f64>,
    pub s_inf: Option<f64>,
    pub ratio_herd: Option<f64>,
    /// Whether `alpha` lies strictly below the critical intensity.
    pub alpha_bar_flag: bool,
    pub boundary_case: Option<BoundaryCase>,
    /// Solver failure for this grid point, if any.
    pub error: Option<String>,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn solve_point(spec: &SweepSpec, r0: f64, alpha: f64, d: f64) -> SweepRow {
    let mut row = SweepRow {
        r0,
        alpha,
        d,
        t_star: None,
        s_inf: None,
        ratio_herd: None,
        alpha_bar_flag: false,
        boundary_case: None,
        error: None,
    };
    let outcome = normalize(spec.base_gamma, r0 * spec.base_gamma, d).and_then(|norm| {
        row.alpha_bar_flag = final_size::alpha_bar(&norm.params, &spec.x0)
            .map(|ab| alpha < ab)
            .unwrap_or(false);
        let prob = OptimProblem::new(norm.params, alpha, norm.duration, spec.x0)?
            .with_settings(spec.settings)?;
        optimize_bisection(&prob).map(|res| (res, norm.time_scale))
    });
    match outcome {
        Ok((res, time_scale)) => {
            row.t_star = Some(res.t_star * time_scale);
            row.s_inf = Some(res.s_inf);
            row.ratio_herd = Some(res.ratio_herd);
            row.boundary_case = Some(res.boundary_case);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Solves every grid point, ordered by `(r0, alpha, d)`.
///
/// Grid points run in parallel on the current rayon pool; the output does not
/// depend on scheduling. Solver failures are recorded in their row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let r0s = sorted(&spec.r0_values);
    let alphas = sorted(&spec.alpha_values);
    let ds = sorted(&spec.d_values);
    let mut grid = Vec::with_capacity(r0s.len() * alphas.len() * ds.len());
    for &r0 in &r0s {
        for &alpha in &alphas {
            grid.extend(ds.iter().map(|&d| (r0, alpha, d)));
        }
    }
    Ok(grid
        .par_iter()
        .map(|&(r0, alpha, d)| solve_point(spec, r0, alpha, d))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// Lockdown duration; `None` for the no-lockdown baseline.
    pub d: Option<f64>,
    pub t_star: Option<f64>,
    pub s_inf: f64,
    pub ratio_herd: f64,
}

/// Optimal start and final size for each duration, preceded by the
/// no-lockdown baseline.
pub fn table_rows(
    params: &ModelParams,
    alpha: f64,
    d_values: &[f64],
    x0: &EpidemicState,
    settings: &SolverSettings,
) -> Result<Vec<TableRow>> {
    settings.validate()?;
    let s_herd = params.s_herd();
    let free = final_size::final_size_from_state(
        &FinalSizeQuery {
            params: *params,
            terminal_state: *x0,
        },
        settings.tol_s,
    )?;
    let mut rows = vec![TableRow {
        d: None,
        t_star: None,
        s_inf: free,
        ratio_herd: free / s_herd,
    }];
    let solved: Result<Vec<TableRow>> = d_values
        .par_iter()
        .map(|&d| {
            let prob = OptimProblem::new(*params, alpha, d, *x0)?.with_settings(*settings)?;
            let res = optimize_bisection(&prob)?;
            Ok(TableRow {
                d: Some(d),
                t_star: Some(res.t_star),
                s_inf: res.s_inf,
                ratio_herd: res.ratio_herd,
            })
        })
        .collect();
    rows.extend(solved?);
    Ok(rows)
}
