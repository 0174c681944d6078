use nemlab::bulk::{molecular_field, stationary_order, MaterialParams};
use nemlab::config::{RunConfig, Scenario};
use nemlab::experiments::initial::{initial_q, Fit, QInit, UInit};
use nemlab::experiments::{regularization_study, simulate};
use nemlab::fields::{
    div_tensor, make_operators, BackendKind, Grid2D, Operators, TensorField, VectorField,
};
use nemlab::io::csv_string;
use nemlab::solver::{elastic_stress, energy_parts, BoundaryData, Scheme, SimState, Solver};
use nemlab::tensor::{uniaxial, QTensor};

const E3: [f64; 3] = [0.0, 0.0, 1.0];

fn spectral(n: usize) -> Box<dyn Operators> {
    make_operators(Grid2D::periodic_square(n), BackendKind::Spectral).unwrap()
}

fn random_q(g: Grid2D, seed: u64, amplitude: f64) -> TensorField {
    let spec = QInit::RandomFourier {
        max_mode: 2,
        amplitude,
        fit: Fit::None,
    };
    initial_q(&spec, &g, seed, None).unwrap()
}

fn cellular_flow(g: Grid2D, amp: f64) -> VectorField {
    VectorField::from_fn(g, |x, y| {
        [amp * (x.sin() * y.cos() + 0.5 * (2.0 * y).sin()), -amp * x.cos() * y.sin()]
    })
}

fn quad_dot(a: &VectorField, b: &VectorField) -> f64 {
    let g = a.grid();
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x[0] * y[0] + x[1] * y[1])
        .sum::<f64>()
        * g.hx()
        * g.hy()
}

fn run_solver(
    solver: &mut Solver,
    mut state: SimState,
    steps: usize,
    mut each: impl FnMut(&SimState),
) -> SimState {
    for _ in 0..steps {
        state = solver.step_coupled(&state).unwrap();
        each(&state);
    }
    state
}

/// The stress power `int u . div sigma` equals the rate at which the elastic
/// energy is released when `Q` is advected and co-rotated by `u`.
#[test]
fn stress_power_matches_elastic_energy_release() {
    let ops = spectral(32);
    let g = *ops.grid();
    let mut p = MaterialParams::with_bulk(0.0, 1.0, 1.0);
    p.l = 0.7;
    p.lambda = 1.3;
    let q = random_q(g, 11, 0.3);
    let u = cellular_flow(g, 0.8);
    let power = quad_dot(&u, &div_tensor(ops.as_ref(), &elastic_stress(ops.as_ref(), &q, &p).unwrap()).unwrap());

    // direction -u.grad Q + w Q - Q w
    let w = nemlab::fields::vorticity_skew(ops.as_ref(), &u).unwrap();
    let adv = nemlab::fields::advect(ops.as_ref(), &u, &q).unwrap();
    let dir = TensorField::from_vec(
        g,
        (0..g.len())
            .map(|k| {
                let c = nemlab::tensor::corotation(&w.data()[k], &q.data()[k]);
                let a = adv.data()[k];
                QTensor::from_components(std::array::from_fn(|i| c.components()[i] - a.components()[i]))
            })
            .collect(),
    )
    .unwrap();
    let zero_u = VectorField::zeros(g);
    let elastic = |t: f64| {
        let mut qt = q.clone();
        qt.axpy(t, &dir);
        energy_parts(ops.as_ref(), &zero_u, &qt, &p).unwrap().elastic
    };
    let h = 1e-4;
    let release = -p.lambda * (elastic(h) - elastic(-h)) / (2.0 * h);
    assert!(
        (power - release).abs() <= 1e-7 * power.abs().max(1e-3),
        "power {power} release {release}"
    );
}

#[test]
fn spatially_constant_stress_vanishes_and_velocity_stays_at_rest() {
    let ops = spectral(8);
    let g = *ops.grid();
    let p = MaterialParams::with_bulk(-1.0, 1.0, 1.0);
    let q = TensorField::filled(g, uniaxial(0.3, [0.6, 0.0, 0.8]).unwrap());
    assert_eq!(elastic_stress(ops.as_ref(), &q, &p).unwrap().linf(), 0.0);
    let mut solver = Solver::new(ops, p, Scheme::ImexEuler);
    let state = SimState::new(VectorField::zeros(g), q, p, 1e-3).unwrap();
    let end = run_solver(&mut solver, state, 50, |_| {});
    assert_eq!(end.u.linf(), 0.0);
}

fn constant_field_run(scheme: Scheme, dt: f64, t_end: f64) -> f64 {
    let g = Grid2D::periodic_square(8);
    let ops = make_operators(g, BackendKind::Spectral).unwrap();
    let mut p = MaterialParams::with_bulk(-1.0, 1.0, 1.0);
    p.gamma = 1.5;
    let s0 = 0.1;
    let q = TensorField::filled(g, uniaxial(s0, E3).unwrap());
    let mut solver = Solver::new(ops, p, scheme);
    let steps = (t_end / dt).round() as usize;
    let end = run_solver(&mut solver, SimState::new(VectorField::zeros(g), q, p, dt).unwrap(), steps, |_| {});
    // uniaxial along e3: q33 = 2s/3
    1.5 * end.q.data()[0].q33()
}

fn uniaxial_ode_rk4(p: &MaterialParams, s0: f64, t_end: f64, steps: usize) -> f64 {
    let f = |s: f64| p.gamma * (-p.a * s + p.b / 3.0 * s * s - 2.0 * p.c / 3.0 * s * s * s);
    let h = t_end / steps as f64;
    let mut s = s0;
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(s + 0.5 * h * k1);
        let k3 = f(s + 0.5 * h * k2);
        let k4 = f(s + h * k3);
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    s
}

#[test]
fn constant_field_follows_the_uniaxial_ode() {
    let mut p = MaterialParams::with_bulk(-1.0, 1.0, 1.0);
    p.gamma = 1.5;
    let want = uniaxial_ode_rk4(&p, 0.1, 1.0, 20_000);
    let got = constant_field_run(Scheme::ImexBdf2, 1e-4, 1.0);
    assert!((got - want).abs() <= 1e-6, "bdf2 {got} ode {want}");
    // first-order scheme: error halves with dt
    let e1 = (constant_field_run(Scheme::ImexEuler, 2e-3, 1.0) - want).abs();
    let e2 = (constant_field_run(Scheme::ImexEuler, 1e-3, 1.0) - want).abs();
    assert!((e1 / e2 - 2.0).abs() < 0.1, "ratio {}", e1 / e2);
}

#[test]
fn frozen_zero_flow_dissipates_free_energy_every_step() {
    let ops = spectral(32);
    let g = *ops.grid();
    let mut p = MaterialParams::with_bulk(-0.5, 1.0, 1.0);
    p.l = 0.2;
    let q = random_q(g, 3, 0.8);
    let energy_ops = spectral(32);
    let mut solver = Solver::new(ops, p, Scheme::ImexEuler).with_frozen_velocity(true);
    let state = SimState::new(VectorField::zeros(g), q, p, 2e-3).unwrap();
    let mut last = energy_parts(energy_ops.as_ref(), &state.u, &state.q, &p).unwrap().free_energy();
    let first = last;
    run_solver(&mut solver, state, 300, |s| {
        let e = energy_parts(energy_ops.as_ref(), &s.u, &s.q, &p).unwrap().free_energy();
        assert!(e <= last + 1e-10 * last.abs(), "energy rose {last} -> {e} at t = {}", s.t);
        last = e;
    });
    assert!(last < first);
}

fn self_convergence_final(scheme: Scheme, dt: f64, coupled: bool) -> TensorField {
    let ops = spectral(32);
    let g = *ops.grid();
    let mut p = MaterialParams::with_bulk(0.0, 1.0, 1.0);
    p.l = 0.1;
    p.nu = 0.1;
    let q = random_q(g, 5, 0.5);
    let u = if coupled { cellular_flow(g, 0.5) } else { VectorField::zeros(g) };
    let mut solver = Solver::new(ops, p, scheme).with_frozen_velocity(!coupled);
    let steps = (0.2 / dt).round() as usize;
    run_solver(&mut solver, SimState::new(u, q, p, dt).unwrap(), steps, |_| {}).q
}

#[test]
fn imex_euler_self_convergence_is_first_order() {
    let [a, b, c] = [4e-3, 2e-3, 1e-3].map(|dt| self_convergence_final(Scheme::ImexEuler, dt, true));
    let ratio = a.difference(&b).l2() / b.difference(&c).l2();
    assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn bdf2_is_second_order_without_rotation() {
    let [a, b, c] = [4e-3, 2e-3, 1e-3].map(|dt| self_convergence_final(Scheme::ImexBdf2, dt, false));
    let ratio = a.difference(&b).l2() / b.difference(&c).l2();
    assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
}

/// Fast relaxation with `T Gamma` fixed drives `Q` to the bulk critical set.
#[test]
fn large_relaxation_rate_reaches_bulk_critical_point() {
    let ops = spectral(16);
    let g = *ops.grid();
    let mut p = MaterialParams::with_bulk(-1.0, 1.0, 1.0);
    p.gamma = 100.0;
    let q = TensorField::from_fn(g, |x, y| uniaxial(1.2 + 0.2 * x.sin() * y.cos(), E3).unwrap());
    let mut solver = Solver::new(ops, p, Scheme::ImexEuler);
    let dt = 5e-4;
    let steps = (20.0 / p.gamma / dt).round() as usize;
    let end = run_solver(&mut solver, SimState::new(VectorField::zeros(g), q, p, dt).unwrap(), steps, |_| {});
    let residual = end
        .q
        .data()
        .iter()
        .map(|q| molecular_field(q, &p).norm())
        .fold(0.0, f64::max);
    assert!(residual <= 1e-6, "residual {residual}");
    let s_plus = stationary_order(&p).unwrap();
    assert!((1.5 * end.q.data()[0].q33() - s_plus).abs() < 1e-6);
}

#[test]
fn dirichlet_walls_hold_boundary_data_through_coupled_run() {
    let g = Grid2D::new(24, 24, 1.0, 1.0, nemlab::fields::Boundary::Dirichlet).unwrap();
    let ops = make_operators(g, BackendKind::Fd).unwrap();
    let mut p = MaterialParams::with_bulk(0.0, 1.0, 1.0);
    p.l = 0.05;
    let q = TensorField::from_fn(g, |x, y| uniaxial(0.2 + 0.1 * (3.0 * x).sin() * y, [0.6, 0.8, 0.0]).unwrap());
    let wall = BoundaryData::from_initial(&q);
    let mut solver = Solver::new(ops, p, Scheme::ImexEuler).with_boundary(wall);
    let end = run_solver(&mut solver, SimState::new(VectorField::zeros(g), q.clone(), p, 1e-3).unwrap(), 50, |_| {});
    for j in 0..g.ny {
        for i in 0..g.nx {
            if g.is_boundary_node(i, j) {
                assert_eq!(end.q.at(i, j), q.at(i, j));
                assert_eq!(end.u.at(i, j), [0.0, 0.0]);
            }
        }
    }
}

fn small_custom() -> RunConfig {
    let mut cfg = RunConfig::for_scenario(Scenario::Custom);
    cfg.grid.nx = 16;
    cfg.grid.ny = 16;
    cfg.t_end = 0.1;
    cfg.monitor_interval = 0.02;
    cfg.dt = 2e-3;
    cfg.seed = 9;
    cfg.params.l = 0.1;
    cfg.params.nu = 0.1;
    cfg.initial.u = UInit::RandomFourier { max_mode: 2, amplitude: 0.5 };
    cfg
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = small_custom();
    let a = simulate(&cfg, &cfg.grid, cfg.dt, None).unwrap();
    let b = simulate(&cfg, &cfg.grid, cfg.dt, None).unwrap();
    assert_eq!(csv_string(&a.records), csv_string(&b.records));
    assert_eq!(a.records.len(), 6);
}

#[test]
fn simulate_respects_linf_bound() {
    let cfg = small_custom();
    let traj = simulate(&cfg, &cfg.grid, cfg.dt, None).unwrap();
    assert!(traj.linf_bound_holds(), "margin {}", traj.linf_margin());
}

fn small_regularization(u: UInit, deltas: Vec<f64>) -> RunConfig {
    let mut cfg = RunConfig::for_scenario(Scenario::Regularization);
    cfg.grid.nx = 16;
    cfg.grid.ny = 16;
    cfg.t_end = 0.2;
    cfg.dt = 2e-3;
    cfg.monitor_interval = 0.1;
    cfg.params.l = 0.1;
    cfg.initial.u = u;
    cfg.regularization.as_mut().unwrap().deltas = deltas;
    cfg
}

#[test]
fn vanishing_mollification_recovers_reference_run() {
    let cfg = small_regularization(UInit::TaylorGreen { amplitude: 1.0 }, vec![0.4, 1e-4]);
    let report = regularization_study(&cfg).unwrap();
    assert!(report.rows[1].err_l2_final <= 1e-8, "{:?}", report.rows[1]);
    assert!(report.rows[0].err_l2_final > report.rows[1].err_l2_final);
}

#[test]
fn fluid_at_rest_is_unaffected_by_mollification() {
    let cfg = small_regularization(UInit::Zero, vec![0.4, 0.2, 0.1]);
    let report = regularization_study(&cfg).unwrap();
    assert!(report.rows.iter().all(|r| r.err_l2_final == 0.0));
    assert!(report.pass);
}
