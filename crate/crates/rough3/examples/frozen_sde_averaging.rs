//! The frozen SDE, its invariant measure, the averaged drift f̄ and the
//! averaged RDE, on the built-in Ornstein–Uhlenbeck example where
//! f̄(x) = e^{−h₀²/4} sin x is known in closed form.
//!
//! Run with: cargo run --release --example frozen_sde_averaging

use std::sync::Arc;

use rough3::drivers::sample_fbm;
use rough3::norms::mean_and_stderr;
use rough3::roughpath::GridRoughPath;
use rough3::slowfast::{averaged_drift, frozen_sde_simulate, solve_averaged, systems, FbarSource, McParams};

fn main() -> rough3::Result<()> {
    let h0 = 1.0;
    let sys = systems::ou(h0);

    // frozen dynamics dY = (x − Y)dt + h₀ dW has stationary law N(x, h₀²/2)
    let x = [0.8];
    let dt = 1e-3;
    let path = frozen_sde_simulate(&sys, &x, &[0.0], 60.0, dt, 7)?;
    let skip = (10.0 / dt) as usize;
    let tail: Vec<f64> = path.iter().skip(skip).map(|y| y[0]).collect();
    let (mean, _) = mean_and_stderr(&tail);
    let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tail.len() as f64;
    println!("frozen SDE at x = {}: long-run mean {mean:.4} (exact {})", x[0], x[0]);
    println!("long-run variance {var:.4} (exact {})", h0 * h0 / 2.0);

    // the ergodic time-average estimator of f̄ against the closed form
    let mc = McParams { burn_in: 5.0, horizon: 80.0, chains: 8, dt: 1e-3, seed: 21, spread_tolerance: 0.5 };
    let est = averaged_drift(&sys, &x, &mc)?;
    let exact = (-h0 * h0 / 4.0).exp() * x[0].sin();
    println!(
        "fbar({}) = {:.5} ± {:.5} (exact {exact:.5})",
        x[0], est.value[0], est.stderr[0]
    );

    // the averaged RDE driven by a fractional Brownian lift
    let n = 1 << 10;
    let b = sample_fbm(0.3, 1, n, 1.0, 5)?;
    let b_lift = Arc::new(GridRoughPath::lift_piecewise_linear(&b.times, &b.values)?);
    let xbar = solve_averaged(&sys, &b_lift, FbarSource::Analytic, 0.29, 0.26)?;
    println!("averaged RDE: X̄_0 = {:.4}, X̄_T = {:.4}", xbar.y(0)[0], xbar.y(n)[0]);
    Ok(())
}
