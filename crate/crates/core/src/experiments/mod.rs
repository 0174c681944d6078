//! Monitors and scripted experiment drivers.
//!
//! * [`eigen_monitor`] / [`monitor_record`]: exact extremal eigenvalues and
//!   energies of a state, reduced over every cell.
//! * [`theorem_scenario`] / [`corollary_scenario`]: eigenvalue-range runs
//!   with a refinement-calibrated tolerance `tol_h`.
//! * [`regularization_study`]: convergence of the order parameter under
//!   mollified frozen velocities.

pub mod initial;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bulk::{coercivity_radius, EigenInterval, MaterialParams};
use crate::config::{BoundarySpec, GridSpec, RunConfig, Scenario};
use crate::error::Result;
use crate::fields::{
    leray_project, make_operators, mollify, partials, Boundary, TensorField, VectorField,
};
use crate::io::{fmt_f64, write_csv, write_json, write_snapshot, CsvRecord};
use crate::solver::{energy_parts, BoundaryData, EnergyParts, RunControl, SimState, Solver};
use crate::tensor::{eigenvalues, is_physical, uniaxial};

use initial::{initial_q, initial_u};

/// Slack of the `in_interval` flag written with every record.
pub const MONITOR_TOL: f64 = 1e-10;
/// Additive slack of the `L-infinity` a-priori bound.
pub const LINF_SLACK: f64 = 1e-6;
/// Minimum `tol_h(2h, 2dt) / tol_h(h, dt)` accepted as convergence.
pub const MIN_SHRINK: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub l1_max: f64,
    pub l3_min: f64,
    pub linf_q: f64,
    pub energy_bulk: f64,
    pub energy_elastic: f64,
    pub energy_kinetic: f64,
    pub physical_fraction: f64,
    pub in_interval: bool,
}

impl CsvRecord for MonitorRecord {
    fn header() -> Vec<&'static str> {
        vec![
            "t",
            "l1_max",
            "l3_min",
            "linf_q",
            "energy_bulk",
            "energy_elastic",
            "energy_kinetic",
            "physical_fraction",
            "in_interval",
        ]
    }

    fn cells(&self) -> Vec<String> {
        let mut c: Vec<String> = [
            self.t,
            self.l1_max,
            self.l3_min,
            self.linf_q,
            self.energy_bulk,
            self.energy_elastic,
            self.energy_kinetic,
            self.physical_fraction,
        ]
        .iter()
        .map(|x| fmt_f64(*x))
        .collect();
        c.push(self.in_interval.to_string());
        c
    }
}

/// Eigenvalue part of a [`MonitorRecord`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenMonitor {
    pub l1_max: f64,
    pub l3_min: f64,
    pub linf_q: f64,
    pub physical_fraction: f64,
    /// All eigenvalues in `[lo - tol, hi + tol]`; false without an interval.
    pub in_interval: bool,
}

pub fn eigen_monitor(q: &TensorField, interval: Option<&EigenInterval>, tol: f64) -> EigenMonitor {
    let mut l1_max = f64::NEG_INFINITY;
    let mut l3_min = f64::INFINITY;
    let mut physical = 0usize;
    for t in q.data() {
        let e = eigenvalues(t);
        l1_max = l1_max.max(e.l1);
        l3_min = l3_min.min(e.l3);
        if is_physical(t) {
            physical += 1;
        }
    }
    EigenMonitor {
        l1_max,
        l3_min,
        linf_q: q.linf(),
        physical_fraction: physical as f64 / q.data().len() as f64,
        in_interval: interval.is_some_and(|iv| iv.contains(l1_max, tol) && iv.contains(l3_min, tol)),
    }
}

/// `(kinetic, elastic, bulk)` energies of a state.
pub fn energy_total(ops: &dyn crate::fields::Operators, state: &SimState) -> Result<EnergyParts> {
    energy_parts(ops, &state.u, &state.q, &state.params)
}

pub fn monitor_record(
    ops: &dyn crate::fields::Operators,
    state: &SimState,
    interval: Option<&EigenInterval>,
) -> Result<MonitorRecord> {
    let m = eigen_monitor(&state.q, interval, MONITOR_TOL);
    let e = energy_total(ops, state)?;
    Ok(MonitorRecord {
        t: state.t,
        l1_max: m.l1_max,
        l3_min: m.l3_min,
        linf_q: m.linf_q,
        energy_bulk: e.bulk,
        energy_elastic: e.elastic,
        energy_kinetic: e.kinetic,
        physical_fraction: m.physical_fraction,
        in_interval: m.in_interval,
    })
}

/// Replaces the configured initial velocity.
pub type VelocityOverride<'a> = &'a dyn Fn(&VectorField) -> Result<VectorField>;

/// Solver and initial state for one run of `cfg` on `grid` with step `dt`.
/// `velocity` overrides the configured initial velocity.
pub fn prepare(
    cfg: &RunConfig,
    grid: &GridSpec,
    dt: f64,
    velocity: Option<VelocityOverride>,
) -> Result<(Solver, SimState)> {
    let g = grid.grid()?;
    let ops = make_operators(g, cfg.backend)?;
    let interval = cfg.params.eigen_interval().ok();
    let mut q0 = initial_q(&cfg.initial.q, &g, cfg.seed, interval.as_ref())?;
    if g.boundary == Boundary::Dirichlet {
        if let BoundarySpec::Uniaxial { s, director } = &cfg.boundary {
            let n = *director;
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let wall = uniaxial(*s, [n[0] / norm, n[1] / norm, n[2] / norm])?;
            q0.impose_boundary(&TensorField::filled(g, wall));
        }
    }
    let mut u0 = initial_u(&cfg.initial.u, &g, cfg.seed);
    if g.boundary == Boundary::Dirichlet {
        BoundaryData::impose_u(&mut u0);
        u0 = leray_project(ops.as_ref(), &u0)?;
    }
    if let Some(f) = velocity {
        u0 = f(&u0)?;
    }
    let boundary = BoundaryData::from_initial(&q0);
    let solver = Solver::new(ops, cfg.params, cfg.scheme)
        .with_boundary(boundary)
        .with_safety(cfg.safety);
    let state = SimState::new(u0, q0, cfg.params, dt)?;
    Ok((solver, state))
}

/// One monitored run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<MonitorRecord>,
    pub final_state: SimState,
    /// `max(|Q0|_inf, |Q~|_inf, eta0)`.
    pub linf_bound: f64,
}

impl Trajectory {
    /// Every record satisfies `|Q|_inf <= linf_bound + LINF_SLACK`.
    pub fn linf_bound_holds(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.linf_q <= self.linf_bound + LINF_SLACK)
    }

    pub fn linf_margin(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.linf_q - self.linf_bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn run_prepared(
    cfg: &RunConfig,
    mut solver: Solver,
    state: SimState,
    frozen: bool,
    snapshot_dir: Option<&Path>,
) -> Result<Trajectory> {
    let interval = cfg.params.eigen_interval().ok();
    let eta0 = coercivity_radius(&cfg.params).unwrap_or(0.0);
    let linf_bound = state.q.linf().max(solver.boundary().linf()).max(eta0);
    solver = solver.with_frozen_velocity(frozen);
    let ctl = RunControl {
        t_end: cfg.t_end,
        monitor_interval: cfg.monitor_interval,
        adaptive: cfg.adaptive,
        snapshot_dir: snapshot_dir.map(Path::to_path_buf),
    };
    let mut records = Vec::new();
    let ops_grid = *state.grid();
    let ops = make_operators(ops_grid, cfg.backend)?;
    let final_state = solver.run(state, &ctl, |s| {
        records.push(monitor_record(ops.as_ref(), s, interval.as_ref())?);
        Ok(())
    })?;
    Ok(Trajectory {
        records,
        final_state,
        linf_bound,
    })
}

/// Runs the coupled system for `cfg` on `grid` with step `dt`.
pub fn simulate(
    cfg: &RunConfig,
    grid: &GridSpec,
    dt: f64,
    snapshot_dir: Option<&Path>,
) -> Result<Trajectory> {
    let (solver, state) = prepare(cfg, grid, dt, None)?;
    run_prepared(cfg, solver, state, false, snapshot_dir)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Check { name, pass, detail }
    }
}

/// Refinement calibration of the eigenvalue tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// `2 max |extremum(h, dt) - extremum(h/2, dt/2)|` over matched records.
    pub tol_h: f64,
    /// Same quantity one level coarser, `(2h, 2dt)` against `(h, dt)`.
    pub tol_h_coarse: f64,
    /// `tol_h_coarse / tol_h`.
    pub shrink_ratio: f64,
}

fn extremum_gap(a: &[MonitorRecord], b: &[MonitorRecord]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            debug_assert!((x.t - y.t).abs() < 1e-9);
            (x.l1_max - y.l1_max).abs().max((x.l3_min - y.l3_min).abs())
        })
        .fold(0.0, f64::max)
}

/// Report of a scenario run; serialises to the JSON summary.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub pass: bool,
    /// Largest signed overshoot of the monitored bounds (negative = inside).
    pub max_excursion: f64,
    pub tol_h: f64,
    pub params: MaterialParams,
    pub grid: GridSpec,
    pub seed: u64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub linf_bound: f64,
    pub calibration: Option<Calibration>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub runs: Vec<(&'static str, Trajectory)>,
}

impl ScenarioReport {
    pub fn main_run(&self) -> &Trajectory {
        &self.runs[0].1
    }

    /// Writes `summary.json`, one `monitor*.csv` per run and final snapshots.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("summary.json"), self)?;
        for (name, run) in &self.runs {
            let file = if *name == "main" {
                "monitor.csv".to_string()
            } else {
                format!("monitor_{name}.csv")
            };
            write_csv(&dir.join(file), &run.records)?;
        }
        let s = &self.main_run().final_state;
        write_snapshot(&dir.join("final_q.bin"), &s.q, s.t)?;
        write_snapshot(&dir.join("final_u.bin"), &s.u, s.t)?;
        Ok(())
    }
}

fn three_level_runs(
    cfg: &RunConfig,
    snapshot_dir: Option<&Path>,
) -> Result<(Trajectory, Trajectory, Trajectory)> {
    let coarse_grid = cfg.grid.rescaled(1, 2);
    let fine_grid = cfg.grid.rescaled(2, 1);
    let (main, (coarse, fine)) = rayon::join(
        || simulate(cfg, &cfg.grid, cfg.dt, snapshot_dir),
        || {
            rayon::join(
                || simulate(cfg, &coarse_grid, 2.0 * cfg.dt, None),
                || simulate(cfg, &fine_grid, 0.5 * cfg.dt, None),
            )
        },
    );
    Ok((main?, coarse?, fine?))
}

fn calibrate(main: &Trajectory, coarse: &Trajectory, fine: &Trajectory) -> Calibration {
    let tol_h = 2.0 * extremum_gap(&main.records, &fine.records);
    let tol_h_coarse = 2.0 * extremum_gap(&coarse.records, &main.records);
    Calibration {
        tol_h,
        tol_h_coarse,
        shrink_ratio: tol_h_coarse / tol_h,
    }
}

/// Eigenvalue-range scenario shared by the theorem and corollary drivers.
/// Bounds are `[lower, upper]` widened by `tol_h`.
fn range_scenario(
    cfg: &RunConfig,
    snapshot_dir: Option<&Path>,
    bounds: impl Fn(&Trajectory) -> (f64, f64),
) -> Result<ScenarioReport> {
    cfg.validate()?;
    let (main, coarse, fine) = three_level_runs(cfg, snapshot_dir)?;
    let cal = calibrate(&main, &coarse, &fine);
    let (lower, upper) = bounds(&main);
    let tol = cal.tol_h;
    let max_excursion = main
        .records
        .iter()
        .map(|r| (r.l1_max - upper).max(lower - r.l3_min))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![Check::new(
        "eigenvalue_range",
        max_excursion <= tol,
        format!(
            "every record has l1_max <= {upper} + tol_h and l3_min >= {lower} - tol_h; max excursion {max_excursion:e}, tol_h {tol:e}"
        ),
    )];
    let trivial = cfg.t_end == 0.0;
    checks.push(Check::new(
        "tol_h_shrinks",
        trivial || cal.shrink_ratio >= MIN_SHRINK,
        format!(
            "tol_h(2h, 2dt) / tol_h(h, dt) = {:.4} (>= {MIN_SHRINK} required{})",
            cal.shrink_ratio,
            if trivial { ", skipped for T = 0" } else { "" }
        ),
    ));
    let all_linf = [&main, &coarse, &fine].iter().all(|t| t.linf_bound_holds());
    checks.push(Check::new(
        "linf_bound",
        all_linf,
        format!(
            "|Q|_inf <= {} + {LINF_SLACK:e} on every record of every run; worst margin {:e}",
            main.linf_bound,
            main.linf_margin()
        ),
    ));
    Ok(ScenarioReport {
        scenario: cfg.scenario,
        pass: checks.iter().all(|c| c.pass),
        max_excursion,
        tol_h: tol,
        params: cfg.params,
        grid: cfg.grid,
        seed: cfg.seed,
        dt: cfg.dt,
        t_end: cfg.t_end,
        linf_bound: main.linf_bound,
        calibration: Some(cal),
        checks,
        runs: vec![("main", main), ("coarse", coarse), ("fine", fine)],
    })
}

/// Initial eigenvalues inside the preserved interval stay there, up to the
/// calibrated `tol_h`.
pub fn theorem_scenario(cfg: &RunConfig, snapshot_dir: Option<&Path>) -> Result<ScenarioReport> {
    let iv = cfg.params.eigen_interval()?;
    range_scenario(cfg, snapshot_dir, |_| (iv.lo, iv.hi))
}

/// Initial eigenvalues beyond the interval never exceed their initial
/// extremes (or the interval, whichever is wider), and the largest
/// eigenvalue relaxes.
pub fn corollary_scenario(cfg: &RunConfig, snapshot_dir: Option<&Path>) -> Result<ScenarioReport> {
    let iv = cfg.params.eigen_interval()?;
    let mut report = range_scenario(cfg, snapshot_dir, |t| {
        let r0 = &t.records[0];
        (iv.lo.min(r0.l3_min), iv.hi.max(r0.l1_max))
    })?;
    let recs = &report.main_run().records;
    let (first, last) = (recs[0].l1_max, recs[recs.len() - 1].l1_max);
    report.checks.push(Check::new(
        "l1_relaxes",
        last <= first,
        format!("final l1_max {last} vs initial {first}"),
    ));
    report.pass = report.checks.iter().all(|c| c.pass);
    Ok(report)
}

/// Single monitored run; passes when the `L-infinity` bound holds.
pub fn custom_scenario(cfg: &RunConfig, snapshot_dir: Option<&Path>) -> Result<ScenarioReport> {
    cfg.validate()?;
    let main = simulate(cfg, &cfg.grid, cfg.dt, snapshot_dir)?;
    let max_excursion = match cfg.params.eigen_interval() {
        Ok(iv) => main
            .records
            .iter()
            .map(|r| (r.l1_max - iv.hi).max(iv.lo - r.l3_min))
            .fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::NAN,
    };
    let checks = vec![Check::new(
        "linf_bound",
        main.linf_bound_holds(),
        format!(
            "|Q|_inf <= {} + {LINF_SLACK:e} on every record; worst margin {:e}",
            main.linf_bound,
            main.linf_margin()
        ),
    )];
    Ok(ScenarioReport {
        scenario: cfg.scenario,
        pass: checks.iter().all(|c| c.pass),
        max_excursion,
        tol_h: 0.0,
        params: cfg.params,
        grid: cfg.grid,
        seed: cfg.seed,
        dt: cfg.dt,
        t_end: cfg.t_end,
        linf_bound: main.linf_bound,
        calibration: None,
        checks,
        runs: vec![("main", main)],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularizationRow {
    pub delta: f64,
    /// `|Q_delta(T) - Q(T)|_{L2}` against the unmollified run.
    pub err_l2_final: f64,
    /// `sqrt(C e^{C T} T |u - u_delta|_{H1})` with the fitted `C`.
    pub gronwall_bound: f64,
    pub velocity_error_h1: f64,
}

impl CsvRecord for RegularizationRow {
    fn header() -> Vec<&'static str> {
        vec!["delta", "err_l2_final", "gronwall_bound", "velocity_error_h1"]
    }

    fn cells(&self) -> Vec<String> {
        [
            self.delta,
            self.err_l2_final,
            self.gronwall_bound,
            self.velocity_error_h1,
        ]
        .iter()
        .map(|x| fmt_f64(*x))
        .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularizationReport {
    pub pass: bool,
    pub gronwall_c: f64,
    pub rows: Vec<RegularizationRow>,
    pub params: MaterialParams,
    pub grid: GridSpec,
    pub seed: u64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub reference: Option<Trajectory>,
}

impl RegularizationReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("summary.json"), self)?;
        write_csv(&dir.join("regularization.csv"), &self.rows)?;
        if let Some(r) = &self.reference {
            write_csv(&dir.join("monitor.csv"), &r.records)?;
        }
        Ok(())
    }
}

fn h1_norm(ops: &dyn crate::fields::Operators, v: &VectorField) -> Result<f64> {
    let (vx, vy) = partials(ops, v)?;
    Ok((v.l2().powi(2) + vx.l2().powi(2) + vy.l2().powi(2)).sqrt())
}

/// Smallest `C >= 0` with `C e^{C T} = target` (bisection).
fn fit_gronwall_constant(target: f64, t_end: f64) -> f64 {
    if !(target > 0.0) {
        return 0.0;
    }
    let g = |c: f64| c * (c * t_end).exp();
    let mut hi = 1.0;
    while g(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// For each `delta`, evolves `Q` under the frozen velocity `mollify(u, delta)`
/// and compares with the unmollified run at the final time. The constant
/// of the Gronwall-shaped bound is fitted on the coarsest `delta`.
pub fn regularization_study(cfg: &RunConfig) -> Result<RegularizationReport> {
    cfg.validate()?;
    let deltas = cfg
        .regularization
        .clone()
        .unwrap_or_default()
        .deltas;
    let g = cfg.grid.grid()?;
    let levels: Vec<f64> = std::iter::once(0.0).chain(deltas.iter().copied()).collect();
    let runs: Vec<Result<(Trajectory, f64)>> = levels
        .par_iter()
        .map(|&delta| {
            let ops = make_operators(g, cfg.backend)?;
            let mollified = |u: &VectorField| mollify(ops.as_ref(), u, delta);
            let (solver, state) = prepare(cfg, &cfg.grid, cfg.dt, Some(&mollified))?;
            let u_delta = state.u.clone();
            let traj = run_prepared(cfg, solver, state, true, None)?;
            let u0 = initial_u(&cfg.initial.u, &g, cfg.seed);
            let u0 = if g.boundary == Boundary::Dirichlet {
                let mut z = u0;
                BoundaryData::impose_u(&mut z);
                leray_project(ops.as_ref(), &z)?
            } else {
                u0
            };
            let verr = h1_norm(ops.as_ref(), &u0.difference(&u_delta))?;
            Ok((traj, verr))
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let (reference, _) = runs.remove(0);
    let q_ref = &reference.final_state.q;
    let mut rows: Vec<RegularizationRow> = deltas
        .iter()
        .zip(&runs)
        .map(|(&delta, (traj, verr))| RegularizationRow {
            delta,
            err_l2_final: traj.final_state.q.difference(q_ref).l2(),
            gronwall_bound: 0.0,
            velocity_error_h1: *verr,
        })
        .collect();
    let t = cfg.t_end;
    let c = match rows.first() {
        Some(r0) if t > 0.0 && r0.velocity_error_h1 > 0.0 => {
            fit_gronwall_constant(r0.err_l2_final.powi(2) / (t * r0.velocity_error_h1), t)
        }
        _ => 0.0,
    };
    for r in rows.iter_mut() {
        r.gronwall_bound = (c * (c * t).exp() * t * r.velocity_error_h1).sqrt();
    }
    let decreasing = rows.windows(2).all(|w| {
        w[1].err_l2_final < w[0].err_l2_final || (w[0].err_l2_final == 0.0 && w[1].err_l2_final == 0.0)
    });
    let bounded = rows
        .iter()
        .all(|r| r.err_l2_final <= r.gronwall_bound * (1.0 + 1e-9));
    let linf = reference.linf_bound_holds() && runs.iter().all(|(t, _)| t.linf_bound_holds());
    let checks = vec![
        Check::new(
            "err_decreasing",
            decreasing,
            format!(
                "errors along the ladder: {:?}",
                rows.iter().map(|r| r.err_l2_final).collect::<Vec<_>>()
            ),
        ),
        Check::new(
            "below_gronwall_bound",
            bounded,
            format!("fitted C = {c:e} on delta = {}", deltas.first().copied().unwrap_or(0.0)),
        ),
        Check::new(
            "linf_bound",
            linf,
            format!("|Q|_inf <= {} + {LINF_SLACK:e} on every run", reference.linf_bound),
        ),
    ];
    Ok(RegularizationReport {
        pass: checks.iter().all(|c| c.pass),
        gronwall_c: c,
        rows,
        params: cfg.params,
        grid: cfg.grid,
        seed: cfg.seed,
        dt: cfg.dt,
        t_end: cfg.t_end,
        checks,
        reference: Some(reference),
    })
}

/// Dispatches on `cfg.scenario` (except regularization, which has its own
/// report type).
pub fn run_scenario(cfg: &RunConfig, snapshot_dir: Option<&Path>) -> Result<ScenarioReport> {
    match cfg.scenario {
        Scenario::Theorem => theorem_scenario(cfg, snapshot_dir),
        Scenario::Corollary => corollary_scenario(cfg, snapshot_dir),
        Scenario::Custom | Scenario::Regularization => custom_scenario(cfg, snapshot_dir),
    }
}
