//! Quick accuracy/timing probe for the Taylor-Green run (scratch tool).

use paley::diagnostics::energy;
use paley::solver::{presets, Dealias, FlowState, Forcing, SolverConfig};
use paley::PeriodicGrid;

fn tg_error(n: usize, nu: f64, dt: f64, t_end: f64) -> (f64, f64) {
    let grid = PeriodicGrid::standard(2, n).unwrap();
    let state = FlowState::from_physical(
        grid,
        &presets::taylor_green_velocity(grid, 1.0),
        0.0,
        nu,
        grid.n_per_axis() / 3,
    )
    .unwrap();
    let cfg = SolverConfig::new(dt, Dealias::TwoThirds).unwrap();
    let steps = (t_end / dt).round() as usize;
    let mut current = state;
    for _ in 0..steps {
        current = paley::solver::step(&current, &Forcing::None, &cfg).unwrap();
    }
    let amp = (-2.0 * nu * t_end).exp();
    let exact = presets::taylor_green_velocity(grid, amp);
    let mut err2 = 0.0;
    let mut norm2 = 0.0;
    for (got, want) in current.physical_velocity().iter().zip(&exact) {
        let diff = got.add_scaled(want, -1.0).unwrap();
        err2 += diff.l2_norm().powi(2);
        norm2 += want.l2_norm().powi(2);
    }
    ((err2 / norm2).sqrt(), energy(&current))
}

fn main() {
    let t0 = std::time::Instant::now();
    let (err, e_final) = tg_error(64, 0.1, 1e-3, 1.0);
    let elapsed = t0.elapsed().as_secs_f64();
    let e_exact = std::f64::consts::PI.powi(2) * (-0.4f64).exp();
    println!("TG N=64 dt=1e-3 t=1: rel L2 error = {err:.3e}");
    println!("energy rel error = {:.3e}", (e_final - e_exact).abs() / e_exact);
    println!("runtime {elapsed:.2} s ({:.3} ms/step)", elapsed);
    let (err2, _) = tg_error(64, 0.1, 2e-3, 1.0);
    println!("TG dt=2e-3: rel L2 error = {err2:.3e}, ratio = {:.2}", err2 / err);
}
