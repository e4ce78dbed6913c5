//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line and then
//! asserts. Run with `cargo test -p lockdown-core --test acceptance -- --nocapture`.

use std::time::Instant;

use lockdown_core::{
    alpha_bar, final_size_constant_control, final_size_from_state, herd_crossing_time, integrate,
    j_cost, optimize_bisection, optimize_trisection, phi, psi, run_sweep, EpidemicState,
    FinalSizeQuery, LockdownPolicy, ModelParams, OptimProblem, SweepSpec,
};
use rayon::prelude::*;

const BETA: f64 = 0.29;
const GAMMA: f64 = 0.1;
const I0: f64 = 1.49e-5;
const ALPHA_LOCK: f64 = 0.231;
const DURATIONS: [f64; 3] = [30.0, 60.0, 90.0];

const TOL_T_STAR_DAYS: f64 = 0.5;
const TOL_S_INF: f64 = 0.005;
const TOL_RATIO: f64 = 0.01;

struct Row {
    t_star: f64,
    s_inf: f64,
    ratio: f64,
}

fn params() -> ModelParams {
    ModelParams::new(BETA, GAMMA).unwrap()
}

fn x0_with(i0: f64) -> EpidemicState {
    EpidemicState::from_infected(i0).unwrap()
}

fn x0() -> EpidemicState {
    x0_with(I0)
}

fn problem(alpha: f64, duration: f64) -> OptimProblem {
    OptimProblem::new(params(), alpha, duration, x0()).unwrap()
}

fn report(id: &str, pass: bool, detail: String) -> bool {
    println!(
        "[{}] criterion {id}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn solve_table(alpha: f64, i0: f64) -> Vec<Row> {
    DURATIONS
        .iter()
        .map(|&d| {
            let prob = OptimProblem::new(params(), alpha, d, x0_with(i0)).unwrap();
            let res = optimize_bisection(&prob).unwrap();
            Row {
                t_star: res.t_star,
                s_inf: res.s_inf,
                ratio: res.ratio_herd,
            }
        })
        .collect()
}

/// Checks rows against `(T*, S∞*, ratio)` references, returning a summary and the verdict.
fn compare(rows: &[Row], expected: &[(f64, f64, f64)]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (row, &(t, s, r)) in rows.iter().zip(expected) {
        let good = (row.t_star - t).abs() <= TOL_T_STAR_DAYS
            && (row.s_inf - s).abs() <= TOL_S_INF
            && (row.ratio - r).abs() <= TOL_RATIO;
        ok &= good;
        parts.push(format!(
            "T*={:.3} (want {t}) S∞={:.4} (want {s}) ratio={:.4} (want {r})",
            row.t_star, row.s_inf, row.ratio
        ));
    }
    (ok, parts.join("; "))
}

#[test]
fn criterion_01_total_lockdown_table() {
    let started = Instant::now();
    let rows = solve_table(0.0, I0);
    let elapsed = started.elapsed().as_secs_f64();
    let (ok, detail) = compare(
        &rows,
        &[
            (74.3, 0.255, 0.739),
            (74.3, 0.323, 0.937),
            (74.3, 0.340, 0.985),
        ],
    );
    let fast = elapsed < 5.0;
    let pass = report("1", ok && fast, format!("{detail}; runtime {elapsed:.2}s"));
    assert!(pass);
}

#[test]
fn criterion_02_partial_lockdown_table() {
    let rows = solve_table(ALPHA_LOCK, I0);
    let expected = [
        (72.1, 0.222, 0.644),
        (71.5, 0.302, 0.875),
        (71.3, 0.331, 0.959),
    ];
    let (ok, detail) = compare(&rows, &expected);
    assert!(report("2", ok, detail));
}

/// Not a criterion: the same tables solved with a tenfold smaller seed,
/// which is the initial condition the reference start times correspond to.
#[test]
fn supplementary_tables_with_smaller_seed() {
    let t1 = solve_table(0.0, 1.49e-6);
    let t2 = solve_table(ALPHA_LOCK, 1.49e-6);
    let (ok1, d1) = compare(
        &t1,
        &[
            (74.3, 0.255, 0.739),
            (74.3, 0.323, 0.937),
            (74.3, 0.340, 0.985),
        ],
    );
    let (ok2, d2) = compare(
        &t2,
        &[
            (72.1, 0.222, 0.644),
            (71.5, 0.302, 0.875),
            (71.3, 0.331, 0.959),
        ],
    );
    println!(
        "[{}] supplementary (I0 = 1.49e-6): {d1}; {d2}",
        if ok1 && ok2 { "PASS" } else { "FAIL" }
    );
    assert!(ok1 && ok2);
}

#[test]
fn criterion_03_no_lockdown_baseline() {
    let q = FinalSizeQuery {
        params: params(),
        terminal_state: x0(),
    };
    let s_inf = final_size_from_state(&q, 1e-10).unwrap();
    let ratio = s_inf / params().s_herd();
    let pass = (s_inf - 0.0668).abs() <= 0.001 && (ratio - 0.194).abs() <= 0.003;
    assert!(report("3", pass, format!("S∞={s_inf:.5} ratio={ratio:.4}")));
}

#[test]
fn criterion_04_derived_constants() {
    let p = params();
    let ab = alpha_bar(&p, &x0()).unwrap();
    let pass = (p.r0() - 2.9).abs() <= 0.01
        && (p.s_herd() - 0.3448).abs() <= 0.0005
        && (ab - 0.56).abs() <= 0.01;
    assert!(report(
        "4",
        pass,
        format!(
            "R0={:.4} S_herd={:.5} alpha_bar={ab:.4}",
            p.r0(),
            p.s_herd()
        )
    ));
}

#[test]
fn criterion_05_sweep_spot_checks() {
    let run = |alpha: f64, d: f64| {
        let rows = run_sweep(&SweepSpec::new(vec![2.5], vec![alpha], vec![d])).unwrap();
        rows[0].ratio_herd.unwrap()
    };
    let long = run(0.01, 240.0);
    let mild = run(0.99, 30.0);
    let pass = (long - 0.9946).abs() <= 0.005 && (mild - 0.2724).abs() <= 0.005;
    assert!(report(
        "5",
        pass,
        format!(
            "ratio(0.01, 240)={long:.5} (want 0.9946), ratio(0.99, 30)={mild:.5} (want 0.2724)"
        )
    ));
}

#[test]
fn criterion_06_value_monotone_in_duration_and_intensity() {
    let r0s = [1.5, 2.5, 4.5];
    let alphas = [0.0, 0.2, 0.4, 0.6, 0.8];
    let ds = [30.0, 60.0, 120.0, 240.0];
    let rows = run_sweep(&SweepSpec::new(r0s.to_vec(), alphas.to_vec(), ds.to_vec())).unwrap();
    assert_eq!(rows.len(), 60);
    let s = |ri: usize, ai: usize, di: usize| {
        rows[(ri * alphas.len() + ai) * ds.len() + di]
            .s_inf
            .unwrap()
    };

    let slack = 1e-6;
    let mut violations = Vec::new();
    for ri in 0..r0s.len() {
        for ai in 0..alphas.len() {
            for di in 1..ds.len() {
                if s(ri, ai, di) < s(ri, ai, di - 1) - slack {
                    violations.push(format!("R0 {} alpha {} D {}", r0s[ri], alphas[ai], ds[di]));
                }
            }
        }
        for di in 0..ds.len() {
            for ai in 1..alphas.len() {
                if s(ri, ai, di) > s(ri, ai - 1, di) + slack {
                    violations.push(format!("R0 {} D {} alpha {}", r0s[ri], ds[di], alphas[ai]));
                }
            }
        }
    }
    let pass = violations.is_empty() && rows.iter().all(|r| r.error.is_none());
    assert!(report(
        "6",
        pass,
        format!("{} grid points, violations: {violations:?}", rows.len())
    ));
}

#[test]
fn criterion_07_long_lockdown_dichotomy() {
    let s_herd = params().s_herd();
    let strong = optimize_bisection(&problem(0.2, 2000.0)).unwrap();
    let weak = optimize_bisection(&problem(0.8, 2000.0)).unwrap();
    let limit = final_size_constant_control(&params(), 0.8, &x0(), 1e-12).unwrap();
    let pass = strong.ratio_herd >= 0.99 && (weak.s_inf - limit).abs() <= 0.01 * s_herd;
    assert!(report(
        "7",
        pass,
        format!(
            "alpha 0.2: ratio={:.5}; alpha 0.8: S∞*={:.5} vs S∞(0.8)={limit:.5}",
            strong.ratio_herd, weak.s_inf
        )
    ));
}

#[test]
fn criterion_08_total_lockdown_degeneracy() {
    let prob = problem(0.0, 30.0);
    let values: Vec<f64> = [0.0, 20.0, 50.0]
        .iter()
        .map(|&t| psi(&prob, t).unwrap())
        .collect();
    let res = optimize_bisection(&prob).unwrap();
    let gap = (res.s_at_start - params().s_herd()).abs();
    let pass = values.iter().all(|v| v.abs() < 1e-8) && gap <= 1e-3;
    assert!(report(
        "8",
        pass,
        format!("psi = {values:?}; |S(T*) - S_herd| = {gap:.2e}")
    ));
}

#[test]
fn criterion_09_algorithms_agree() {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, ALPHA_LOCK] {
        for d in DURATIONS {
            let prob = problem(alpha, d);
            let bis = optimize_bisection(&prob).unwrap();
            let tri = optimize_trisection(&prob).unwrap();
            let t_upper = bis.t_upper.unwrap();
            let n = (t_upper / 0.05).floor() as usize;
            let grid: Vec<(f64, f64)> = (0..=n)
                .into_par_iter()
                .map(|k| {
                    let t = k as f64 * 0.05;
                    (t, j_cost(&prob, t).unwrap())
                })
                .collect();
            let oracle = grid.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            let good = (bis.t_star - tri.t_star).abs() <= 2.0 * prob.settings.tol_t
                && (bis.t_star - oracle).abs() <= 0.1
                && (tri.t_star - oracle).abs() <= 0.1;
            ok &= good;
            parts.push(format!(
                "(alpha {alpha}, D {d}) bisection {:.4} trisection {:.4} grid {oracle:.2}",
                bis.t_star, tri.t_star
            ));
        }
    }
    assert!(report("9", ok, parts.join("; ")));
}

#[test]
fn criterion_10_invariants() {
    let p = params();

    // Conservation of phi on each constant-control piece, dt = 0.01, 500 days.
    let policy = LockdownPolicy::new(ALPHA_LOCK, 60.0, 30.0).unwrap();
    let traj = integrate(&p, &policy, &x0(), 500.0, 0.01, false).unwrap();
    let mut drift: f64 = 0.0;
    for (t0, t1, u) in [
        (0.0, 60.0, 1.0),
        (60.0, 90.0, ALPHA_LOCK),
        (90.0, 500.0, 1.0),
    ] {
        let r = u * p.r0();
        let levels: Vec<f64> = traj
            .iter()
            .filter(|(t, _)| *t >= t0 && *t <= t1)
            .map(|(_, x)| phi(r, x).unwrap())
            .collect();
        for v in &levels {
            drift = drift.max((v - levels[0]).abs());
        }
    }

    // Observed order of RK4 from a Richardson triple.
    let end_s = |dt: f64| {
        let tr = integrate(&p, &policy, &x0(), 120.0, dt, false).unwrap();
        tr.last().unwrap().1.s
    };
    let (a, b, c) = (end_s(0.4), end_s(0.2), end_s(0.1));
    let order = ((a - b) / (b - c)).abs().log2();

    // Residual of the final-size equation.
    let terminal = traj.states[traj.times.iter().position(|&t| t == 90.0).unwrap()];
    let s_inf = final_size_from_state(
        &FinalSizeQuery {
            params: p,
            terminal_state: terminal,
        },
        1e-10,
    )
    .unwrap();
    let residual = (phi(p.r0(), &EpidemicState { s: s_inf, i: 0.0 }).unwrap()
        - phi(p.r0(), &terminal).unwrap())
    .abs();

    // Time scaling: gamma = 0.2 solved directly vs the normalized system.
    let fast =
        OptimProblem::new(ModelParams::new(0.58, 0.2).unwrap(), ALPHA_LOCK, 30.0, x0()).unwrap();
    let normalized = problem(ALPHA_LOCK, 60.0);
    let direct = optimize_bisection(&fast).unwrap().t_star;
    let scaled = 0.5 * optimize_bisection(&normalized).unwrap().t_star;
    let scale_gap = (direct - scaled).abs();

    let pass =
        drift <= 1e-8 && order >= 3.5 && residual <= 1e-8 && scale_gap <= 2.0 * fast.settings.tol_t;
    assert!(report(
        "10",
        pass,
        format!(
            "phi drift {drift:.2e}, RK4 order {order:.3}, residual {residual:.2e}, scaling gap {scale_gap:.2e} days"
        )
    ));
}

#[test]
fn criterion_11_start_above_threshold() {
    let s_herd = params().s_herd();
    let margins: Vec<f64> = DURATIONS
        .iter()
        .map(|&d| {
            optimize_bisection(&problem(ALPHA_LOCK, d))
                .unwrap()
                .s_at_start
                - s_herd
        })
        .collect();
    let pass = margins.iter().all(|&m| m > 1e-4);
    // Sanity check on the bracket used by both algorithms.
    assert!(herd_crossing_time(&params(), &x0(), 0.01).unwrap() > 0.0);
    assert!(report("11", pass, format!("S(T*) - S_herd = {margins:?}")));
}
