use lockdown_core::{
    alpha_bar, control_value, integrate, optimize_bisection, optimize_trisection, run_sweep,
    table_rows, LockdownPolicy, ModelParams, OptimProblem, OptimResult, SolverSettings, SweepRow,
    SweepSpec, TableRow, REFERENCE_GAMMA,
};
use serde::Serialize;

use crate::config::{
    layered, required, Algorithm, Command, Format, OptimizeArgs, SweepArgs, TablesArgs,
    TrajectoryArgs, DEFAULT_ALPHA_LOCK,
};
use crate::error::CliError;
use crate::output::{csv_table, emit, json_document, Cell};

const DEFAULT_STRIDE: usize = 10;
const DEFAULT_TAIL: f64 = 200.0;
const DEFAULT_TABLE_DURATIONS: [f64; 3] = [30.0, 60.0, 90.0];

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Optimize(args) => {
            let path = args.out.config.clone();
            optimize(layered(args, path.as_deref())?)
        }
        Command::Trajectory(args) => {
            let path = args.out.config.clone();
            trajectory(layered(args, path.as_deref())?)
        }
        Command::Sweep(args) => {
            let path = args.out.config.clone();
            sweep(layered(args, path.as_deref())?)
        }
        Command::Tables(args) => {
            let path = args.out.config.clone();
            tables(layered(args, path.as_deref())?)
        }
    }
}

fn solve(prob: &OptimProblem, algorithm: Algorithm) -> Result<OptimResult, CliError> {
    Ok(match algorithm {
        Algorithm::Bisection => optimize_bisection(prob)?,
        Algorithm::Trisection => optimize_trisection(prob)?,
    })
}

#[derive(Debug, Serialize)]
struct OptimizeOutput {
    r0: f64,
    s_herd: f64,
    alpha_bar: Option<f64>,
    #[serde(flatten)]
    result: OptimResult,
}

fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let params = args.rates.params()?;
    let x0 = args.seed.state()?;
    let settings = args.solver.settings();
    let alpha = args.alpha.unwrap_or(DEFAULT_ALPHA_LOCK);
    let duration = required(args.duration, "duration")?;
    let algorithm = args.algorithm.unwrap_or_default();
    let precision = args.out.precision()?;
    let prob = OptimProblem::new(params, alpha, duration, x0)?.with_settings(settings)?;
    let result = solve(&prob, algorithm)?;
    let out = OptimizeOutput {
        r0: params.r0(),
        s_herd: params.s_herd(),
        alpha_bar: alpha_bar(&params, &x0).ok(),
        result,
    };

    let bytes = match args.out.format_or(Format::Json) {
        Format::Json => json_document("optimize", &args, &settings, &out)?,
        Format::Csv => {
            let r = &out.result;
            csv_table(
                &[
                    "t_star",
                    "s_inf",
                    "ratio_herd",
                    "boundary_case",
                    "c0",
                    "iterations",
                    "s_at_start",
                    "t_upper",
                    "r0",
                    "s_herd",
                    "alpha_bar",
                ],
                &[vec![
                    r.t_star.into(),
                    r.s_inf.into(),
                    r.ratio_herd.into(),
                    r.boundary_case.as_str().into(),
                    r.c0.into(),
                    r.iterations.into(),
                    r.s_at_start.into(),
                    r.t_upper.into(),
                    out.r0.into(),
                    out.s_herd.into(),
                    out.alpha_bar.into(),
                ]],
                precision,
            )?
        }
    };
    emit(&bytes, args.out.output.as_deref())
}

#[derive(Debug, Serialize)]
struct Sample {
    t: f64,
    s: f64,
    i: f64,
    r: f64,
    u: f64,
}

#[derive(Debug, Serialize)]
struct TrajectoryOutput {
    alpha: f64,
    t_start: f64,
    duration: f64,
    samples: Vec<Sample>,
}

fn trajectory(args: TrajectoryArgs) -> Result<(), CliError> {
    let params = args.rates.params()?;
    let x0 = args.seed.state()?;
    let settings = args.solver.settings();
    settings.validate()?;
    let alpha = args.alpha.unwrap_or(DEFAULT_ALPHA_LOCK);
    let duration = required(args.duration, "duration")?;
    let stride = args.stride.unwrap_or(DEFAULT_STRIDE);
    if stride == 0 {
        return Err(CliError::Validation("stride must be at least 1".into()));
    }
    let precision = args.out.precision()?;
    let t_start = match args.t_start {
        Some(t) => t,
        None => {
            let prob = OptimProblem::new(params, alpha, duration, x0)?.with_settings(settings)?;
            optimize_bisection(&prob)?.t_star
        }
    };
    let policy = LockdownPolicy::new(alpha, t_start, duration)?;
    let t_end = args.t_end.unwrap_or(policy.t_end() + DEFAULT_TAIL);
    let traj = integrate(&params, &policy, &x0, t_end, settings.dt, false)?;

    let last = traj.len() - 1;
    let samples: Vec<Sample> = traj
        .iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k == last)
        .map(|(_, (t, x))| Sample {
            t,
            s: x.s,
            i: x.i,
            r: 1.0 - x.s - x.i,
            u: control_value(&policy, t),
        })
        .collect();

    let bytes = match args.out.format_or(Format::Csv) {
        Format::Json => json_document(
            "trajectory",
            &args,
            &settings,
            &TrajectoryOutput {
                alpha,
                t_start,
                duration,
                samples,
            },
        )?,
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = samples
                .iter()
                .map(|p| vec![p.t.into(), p.s.into(), p.i.into(), p.r.into(), p.u.into()])
                .collect();
            csv_table(&["t", "s", "i", "r", "u"], &rows, precision)?
        }
    };
    emit(&bytes, args.out.output.as_deref())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let list = |v: &Option<Vec<f64>>, flag: &str| {
        v.clone()
            .ok_or_else(|| CliError::Validation(format!("missing --{flag}")))
    };
    let mut spec = SweepSpec::new(
        list(&args.r0_values, "r0")?,
        list(&args.alpha_values, "alphas")?,
        list(&args.d_values, "durations")?,
    );
    spec.base_gamma = args.base_gamma.unwrap_or(REFERENCE_GAMMA);
    spec.x0 = args.seed.state()?;
    spec.settings = args.solver.settings();
    spec.validate()?;
    let precision = args.out.precision()?;

    let rows: Vec<SweepRow> = match args.threads {
        Some(0) => return Err(CliError::Validation("threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Output(e.to_string()))?
            .install(|| run_sweep(&spec))?,
        None => run_sweep(&spec)?,
    };
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: r0={} alpha={} d={}: {}",
            row.r0,
            row.alpha,
            row.d,
            row.error.as_deref().unwrap_or_default()
        );
    }

    let bytes = match args.out.format_or(Format::Csv) {
        Format::Json => json_document("sweep", &args, &spec.settings, &rows)?,
        Format::Csv => {
            let cells: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.r0.into(),
                        r.alpha.into(),
                        r.d.into(),
                        r.t_star.into(),
                        r.s_inf.into(),
                        r.ratio_herd.into(),
                        r.alpha_bar_flag.into(),
                        r.boundary_case.map_or(Cell::Empty, |b| b.as_str().into()),
                        r.error.clone().map_or(Cell::Empty, Cell::Text),
                    ]
                })
                .collect();
            csv_table(
                &[
                    "r0",
                    "alpha",
                    "d",
                    "t_star",
                    "s_inf",
                    "ratio_herd",
                    "alpha_bar_flag",
                    "boundary_case",
                    "error",
                ],
                &cells,
                precision,
            )?
        }
    };
    emit(&bytes, args.out.output.as_deref())
}

/// `(alpha, D, T*, S∞*, S∞*/S_herd)`.
type ReferenceRow = (f64, Option<f64>, Option<f64>, f64, f64);

/// Reference values for `R0 = 2.9` on the `gamma = 0.1` time scale.
/// `D = None` is the no-lockdown row.
const REFERENCE_ROWS: [ReferenceRow; 8] = [
    (0.0, None, None, 0.0668, 0.194),
    (0.0, Some(30.0), Some(74.3), 0.255, 0.739),
    (0.0, Some(60.0), Some(74.3), 0.323, 0.937),
    (0.0, Some(90.0), Some(74.3), 0.340, 0.985),
    (0.231, None, None, 0.0668, 0.194),
    (0.231, Some(30.0), Some(72.1), 0.222, 0.644),
    (0.231, Some(60.0), Some(71.5), 0.302, 0.875),
    (0.231, Some(90.0), Some(71.3), 0.331, 0.959),
];

const REFERENCE_R0: f64 = 2.9;

#[derive(Debug, Clone, Copy, Default, Serialize)]
struct Reference {
    t_star: Option<f64>,
    s_inf: f64,
    ratio_herd: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Deviation {
    t_star: Option<f64>,
    s_inf: f64,
    ratio_herd: f64,
}

#[derive(Debug, Serialize)]
struct TableLine {
    #[serde(flatten)]
    row: TableRow,
    reference: Option<Reference>,
    deviation: Option<Deviation>,
}

#[derive(Debug, Serialize)]
struct Table {
    alpha: f64,
    rows: Vec<TableLine>,
}

#[derive(Debug, Default, Serialize)]
struct MaxDeviation {
    t_star: Option<f64>,
    s_inf: Option<f64>,
    ratio_herd: Option<f64>,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

/// Reference row matching this one, with times mapped to the run's `gamma`.
fn reference_for(params: &ModelParams, alpha: f64, d: Option<f64>) -> Option<Reference> {
    if !near(params.r0(), REFERENCE_R0) {
        return None;
    }
    let scale = REFERENCE_GAMMA / params.gamma;
    REFERENCE_ROWS
        .iter()
        .find(|(a, pd, ..)| {
            near(*a, alpha)
                && match (pd, d) {
                    (None, None) => true,
                    (Some(pd), Some(d)) => near(*pd, d / scale),
                    _ => false,
                }
        })
        .map(|&(_, _, t, s, ratio)| Reference {
            t_star: t.map(|t| t * scale),
            s_inf: s,
            ratio_herd: ratio,
        })
}

fn max_opt(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

fn tables(args: TablesArgs) -> Result<(), CliError> {
    let params = args.rates.params()?;
    let x0 = args.seed.state()?;
    let settings: SolverSettings = args.solver.settings();
    let alpha_lock = args.alpha_lock.unwrap_or(DEFAULT_ALPHA_LOCK);
    let d_values = args
        .d_values
        .clone()
        .unwrap_or_else(|| DEFAULT_TABLE_DURATIONS.to_vec());
    let precision = args.out.precision()?;

    let mut out = Vec::new();
    let mut worst = MaxDeviation::default();
    for alpha in [0.0, alpha_lock] {
        let rows = table_rows(&params, alpha, &d_values, &x0, &settings)?;
        let lines = rows
            .into_iter()
            .map(|row| {
                let reference = reference_for(&params, alpha, row.d);
                let deviation = reference.map(|r| Deviation {
                    t_star: row.t_star.zip(r.t_star).map(|(a, b)| (a - b).abs()),
                    s_inf: (row.s_inf - r.s_inf).abs(),
                    ratio_herd: (row.ratio_herd - r.ratio_herd).abs(),
                });
                if let Some(d) = deviation {
                    worst.t_star = max_opt(worst.t_star, d.t_star);
                    worst.s_inf = max_opt(worst.s_inf, Some(d.s_inf));
                    worst.ratio_herd = max_opt(worst.ratio_herd, Some(d.ratio_herd));
                }
                TableLine {
                    row,
                    reference,
                    deviation,
                }
            })
            .collect();
        out.push(Table { alpha, rows: lines });
    }
    if let Some(t) = worst.t_star {
        eprintln!(
            "max deviation from reference tables: T* {t:.3} days, S_inf {:.4}, ratio {:.4}",
            worst.s_inf.unwrap_or(0.0),
            worst.ratio_herd.unwrap_or(0.0)
        );
    }

    let bytes = match args.out.format_or(Format::Csv) {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                tables: &'a [Table],
                max_deviation: &'a MaxDeviation,
            }
            json_document(
                "tables",
                &args,
                &settings,
                &Doc {
                    tables: &out,
                    max_deviation: &worst,
                },
            )?
        }
        Format::Csv => {
            let mut cells = Vec::new();
            for table in &out {
                for line in &table.rows {
                    let r = line.reference;
                    let d = line.deviation;
                    cells.push(vec![
                        table.alpha.into(),
                        line.row.d.into(),
                        line.row.t_star.into(),
                        line.row.s_inf.into(),
                        line.row.ratio_herd.into(),
                        r.and_then(|r| r.t_star).into(),
                        r.map(|r| r.s_inf).into(),
                        r.map(|r| r.ratio_herd).into(),
                        d.and_then(|d| d.t_star).into(),
                        d.map(|d| d.s_inf).into(),
                        d.map(|d| d.ratio_herd).into(),
                    ]);
                }
            }
            csv_table(
                &[
                    "alpha",
                    "d",
                    "t_star",
                    "s_inf",
                    "ratio_herd",
                    "ref_t_star",
                    "ref_s_inf",
                    "ref_ratio_herd",
                    "dev_t_star",
                    "dev_s_inf",
                    "dev_ratio_herd",
                ],
                &cells,
                precision,
            )?
        }
    };
    emit(&bytes, args.out.output.as_deref())
}
