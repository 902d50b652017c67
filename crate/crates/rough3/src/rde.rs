//! Rough differential equations with drift,
//!
//! ```text
//! Y_t = ξ + ∫₀ᵗ f(Y_s, ψ_s) ds + ∫₀ᵗ σ(Y_s) dX_s,
//! Y†_t = σ(Y_t),   Y††_t = ∇σ·σ(Y_t),
//! ```
//!
//! solved by the explicit one-step scheme whose summand is the level-3 local
//! expansion: with η = ∇σ·σ,
//!
//! ```text
//! Y_{k+1} = Y_k + f(Y_k, ψ_k) Δt + σ(Y_k) X¹_k + η(Y_k) X²_k + σ††(Y_k) X³_k,
//! σ††⟨v₁⊗v₂⊗v₃⟩ = ∇σ⟨η⟨v₁,v₂⟩, v₃⟩ + ∇²σ⟨σv₁, σv₂, v₃⟩.
//! ```
//!
//! The derivative slots Y† = σ(Y), Y†† = η(Y) are assignments, not
//! approximations, so the solution is completely determined by its first
//! level. A grid Picard iteration of the fixed-point map
//! M^ξ = (ξ,0,0) + (∫σ(Y)dX, σ(Y), ∇σ(Y)Y†) + (∫f ds, 0, 0) is available as
//! a cross-validation oracle on short windows.

use std::sync::Arc;

use crate::controlled::{ControlledPath, SmoothMap3};
use crate::error::Error;
use crate::integrate::rough_integral;
use crate::norms::{path_holder_norm, PairStrategy};
use crate::roughpath::{GridRoughPath, HolderNorms};
use crate::Result;

/// Abort threshold for |Y|∞; beyond this the solution is treated as exploded
/// and the offending time is reported (local solutions only).
pub const EXPLOSION_GUARD: f64 = 1e8;

/// Largest Picard window, in grid points.
pub const PICARD_MAX_POINTS: usize = 1024;

/// Hard cap on Picard iterations.
pub const PICARD_MAX_ITER: usize = 200;

/// Drift evaluator f(y, ψ).
pub type DriftFn<'a> = &'a (dyn Fn(&[f64], &[f64]) -> Vec<f64> + Sync);

/// An RDE instance on (a window of) a grid rough path.
pub struct RdeProblem<'a> {
    pub initial: Vec<f64>,
    /// σ: W → L(V, W); value layout `σ[a*d + p]`, gradient `(w·d)×w`.
    pub sigma: &'a SmoothMap3,
    pub drift: DriftFn<'a>,
    /// ψ samples on the full grid (empty slice when the drift ignores ψ).
    pub aux: &'a [Vec<f64>],
    pub rp: &'a Arc<GridRoughPath>,
    pub alpha: f64,
    pub beta: f64,
    /// Grid-index window [start, end] to solve on.
    pub window: (usize, usize),
}

impl<'a> RdeProblem<'a> {
    pub fn new(
        initial: Vec<f64>,
        sigma: &'a SmoothMap3,
        drift: DriftFn<'a>,
        rp: &'a Arc<GridRoughPath>,
        alpha: f64,
        beta: f64,
    ) -> Self {
        let end = rp.n_steps();
        RdeProblem { initial, sigma, drift, aux: &[], rp, alpha, beta, window: (0, end) }
    }

    fn validate(&self) -> Result<()> {
        let w = self.initial.len();
        let d = self.rp.dim();
        if self.sigma.in_dim != w || self.sigma.out_dim != w * d {
            return Err(Error::DimensionMismatch(format!(
                "sigma maps ℝ^{} → ℝ^{}, expected ℝ^{w} → ℝ^{}",
                self.sigma.in_dim,
                self.sigma.out_dim,
                w * d
            )));
        }
        if !self.aux.is_empty() && self.aux.len() != self.rp.n_steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "aux path has {} samples for a grid with {} points",
                self.aux.len(),
                self.rp.n_steps() + 1
            )));
        }
        let (lo, hi) = self.window;
        if lo >= hi || hi > self.rp.n_steps() {
            return Err(Error::IndexOutOfRange(format!("window ({lo}, {hi})")));
        }
        if !(self.beta > 0.25 && self.beta < self.alpha && self.alpha <= 1.0 / 3.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "exponents must satisfy 1/4 < beta < alpha <= 1/3, got beta={}, alpha={}",
                self.beta, self.alpha
            )));
        }
        Ok(())
    }

    fn psi(&self, k: usize) -> &[f64] {
        if self.aux.is_empty() {
            &[]
        } else {
            &self.aux[k]
        }
    }
}

/// σ(y), η(y) = ∇σ·σ(y) and σ††(y), flattened per the controlled-path
/// conventions (derivative slots first).
pub(crate) struct Coefficients {
    pub sigma: Vec<f64>,   // w·d
    pub eta: Vec<f64>,     // w·d²,   [a, (p, q)] at (a·d + p)·d + q
    pub second: Vec<f64>,  // w·d³,   [a, (p, q, r)] at ((a·d + p)·d + q)·d + r
}

pub(crate) fn coefficients(sigma_map: &SmoothMap3, y: &[f64], d: usize) -> Coefficients {
    let w = y.len();
    let sv = sigma_map.value(y);
    let gr = sigma_map.gradient(y); // (w·d) × w
    let he = sigma_map.hessian(y); // (w·d) × w²
    let mut eta = vec![0.0; w * d * d];
    for a in 0..w {
        for p in 0..d {
            for q in 0..d {
                let mut acc = 0.0;
                for b in 0..w {
                    acc += gr[(a * d + q) * w + b] * sv[b * d + p];
                }
                eta[(a * d + p) * d + q] = acc;
            }
        }
    }
    let mut second = vec![0.0; w * d * d * d];
    for a in 0..w {
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    let mut acc = 0.0;
                    for b in 0..w {
                        acc += gr[(a * d + r) * w + b] * eta[(b * d + p) * d + q];
                    }
                    for b in 0..w {
                        for c in 0..w {
                            acc += he[((a * d + r) * w + b) * w + c] * sv[b * d + p] * sv[c * d + q];
                        }
                    }
                    second[((a * d + p) * d + q) * d + r] = acc;
                }
            }
        }
    }
    Coefficients { sigma: sv, eta, second }
}

/// Solves the RDE by the explicit one-step scheme. The returned controlled
/// path has Y† = σ(Y) and Y†† = ∇σ·σ(Y) at every grid point.
pub fn solve_rde(prob: &RdeProblem) -> Result<ControlledPath> {
    prob.validate()?;
    let d = prob.rp.dim();
    let w = prob.initial.len();
    let (lo, hi) = prob.window;
    let times = prob.rp.times();
    let mut y = prob.initial.clone();
    let mut values = Vec::with_capacity(hi - lo + 1);
    let mut ydag = Vec::with_capacity(hi - lo + 1);
    let mut ydagdag = Vec::with_capacity(hi - lo + 1);
    let mut coef = coefficients(prob.sigma, &y, d);
    values.push(y.clone());
    ydag.push(coef.sigma.clone());
    ydagdag.push(coef.eta.clone());
    for k in lo..hi {
        let dt = times[k + 1] - times[k];
        let inc = prob.rp.step(k);
        let f = (prob.drift)(&y, prob.psi(k));
        let mut next = y.clone();
        for a in 0..w {
            let mut acc = f[a] * dt;
            for p in 0..d {
                acc += coef.sigma[a * d + p] * inc.level1[p];
            }
            for p in 0..d {
                for q in 0..d {
                    acc += coef.eta[(a * d + p) * d + q] * inc.l2(p, q);
                }
            }
            for p in 0..d {
                for q in 0..d {
                    for r in 0..d {
                        acc += coef.second[((a * d + p) * d + q) * d + r] * inc.l3(p, q, r);
                    }
                }
            }
            next[a] += acc;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: times[k + 1], step: k + 1 });
        }
        if next.iter().any(|v| v.abs() > EXPLOSION_GUARD) {
            return Err(Error::Explosion { time: times[k + 1], step: k + 1, guard: EXPLOSION_GUARD });
        }
        y = next;
        coef = coefficients(prob.sigma, &y, d);
        values.push(y.clone());
        ydag.push(coef.sigma.clone());
        ydagdag.push(coef.eta.clone());
    }
    ControlledPath::from_samples(prob.rp.clone(), lo, w, values, ydag, ydagdag)
}

/// Convergence record of the Picard iteration: Q-seminorm distances between
/// successive iterates.
#[derive(Debug, Clone)]
pub struct PicardReport {
    pub distances: Vec<f64>,
    pub iterations: usize,
}

/// Grid Picard iteration of the fixed-point map M^ξ on the problem window.
///
/// Stops when the Q^β-seminorm distance between successive iterates drops
/// below `tol`; reports non-contraction when the distance fails to decrease
/// over three consecutive iterations. Windows are limited to
/// [`PICARD_MAX_POINTS`] grid points and [`PICARD_MAX_ITER`] iterations.
pub fn picard_solve(prob: &RdeProblem, max_iter: usize, tol: f64) -> Result<(ControlledPath, PicardReport)> {
    prob.validate()?;
    let (lo, hi) = prob.window;
    if hi - lo + 1 > PICARD_MAX_POINTS {
        return Err(Error::InvalidArgument(format!(
            "Picard window has {} points, limit is {PICARD_MAX_POINTS}",
            hi - lo + 1
        )));
    }
    let max_iter = max_iter.min(PICARD_MAX_ITER);
    let d = prob.rp.dim();
    let times = prob.rp.times();

    // ball centre: the canonical controlled path of (ξ, σ(ξ), η(ξ))
    let coef0 = coefficients(prob.sigma, &prob.initial, d);
    let full = ControlledPath::canonical(prob.rp.clone(), lo, &prob.initial, &coef0.sigma, &coef0.eta)?;
    let mut current = full.restrict(0, hi - lo)?;

    let mut distances = Vec::new();
    for iter in 0..max_iter {
        let next = apply_fixed_point_map(prob, &current)?;
        let diff = next.linear_combination(1.0, -1.0, &current)?;
        let dist = diff.seminorm(prob.beta, PairStrategy::Auto)?.total
            + diff.y(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        distances.push(dist);
        current = next;
        if dist <= tol {
            return Ok((current, PicardReport { distances: distances.clone(), iterations: iter + 1 }));
        }
        let n = distances.len();
        if n >= 4 && (n - 3..n).all(|i| distances[i] >= distances[i - 1]) {
            return Err(Error::NonContraction { iterations: iter + 1, distance: dist });
        }
    }
    let last = *distances.last().unwrap_or(&f64::INFINITY);
    if times[hi] - times[lo] > 0.0 && last > tol {
        return Err(Error::NonContraction { iterations: max_iter, distance: last });
    }
    Ok((current, PicardReport { iterations: distances.len(), distances }))
}

/// One application of M^ξ = (ξ,0,0) + (∫σ(Y)dX, σ(Y), ∇σ(Y)Y†) + (∫f ds,0,0).
fn apply_fixed_point_map(prob: &RdeProblem, cp: &ControlledPath) -> Result<ControlledPath> {
    let w = prob.initial.len();
    let (lo, _) = prob.window;
    let times = prob.rp.times();
    let sigma_cp = cp.compose(prob.sigma)?;
    let integral = rough_integral(&sigma_cp, w)?;
    // left-point quadrature of the drift along the current iterate
    let n = cp.n_steps();
    let mut drift_path = Vec::with_capacity(n + 1);
    let mut acc = vec![0.0; w];
    drift_path.push(acc.clone());
    for k in 0..n {
        let dt = times[lo + k + 1] - times[lo + k];
        let f = (prob.drift)(cp.y(k), prob.psi(lo + k));
        for (a, v) in acc.iter_mut().zip(&f) {
            *a += v * dt;
        }
        drift_path.push(acc.clone());
    }
    let y: Vec<Vec<f64>> = (0..=n)
        .map(|k| {
            (0..w)
                .map(|a| prob.initial[a] + integral.y(k)[a] + drift_path[k][a])
                .collect()
        })
        .collect();
    let ydag: Vec<Vec<f64>> = (0..=n).map(|k| integral.ydag(k).to_vec()).collect();
    let ydagdag: Vec<Vec<f64>> = (0..=n).map(|k| integral.ydagdag(k).to_vec()).collect();
    ControlledPath::from_samples(prob.rp.clone(), lo, w, y, ydag, ydagdag)
}

/// The stability functional of two solutions over the same driver,
/// M_t = (Y_t − Ỹ_t) − ∫₀ᵗ {g(Y) − g(Ỹ)} ds − ∫₀ᵗ {σ(Y) − σ(Ỹ)} dX.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub m_path: Vec<Vec<f64>>,
    pub m_norm_3beta: f64,
    /// The Prop-type bound multiplier shape with the measured rough-path
    /// norm filled in; the constants c, ν are not asserted.
    pub bound_shape: String,
}

pub fn stability_functional(
    y: &ControlledPath,
    y_tilde: &ControlledPath,
    g: &SmoothMap3,
    sigma: &SmoothMap3,
    beta: f64,
) -> Result<StabilityReport> {
    if !Arc::ptr_eq(y.reference(), y_tilde.reference()) || y.start() != y_tilde.start() || y.n_steps() != y_tilde.n_steps()
    {
        return Err(Error::GridMismatch("stability functional needs a shared grid window".into()));
    }
    let w = y.target_dim();
    let times = y.times().to_vec();
    let n = y.n_steps();
    let sigma_diff = y.compose(sigma)?.linear_combination(1.0, -1.0, &y_tilde.compose(sigma)?)?;
    let integral = rough_integral(&sigma_diff, w)?;
    let mut m_path = Vec::with_capacity(n + 1);
    let mut quad = vec![0.0; w];
    for k in 0..=n {
        let mut m = vec![0.0; w];
        for a in 0..w {
            m[a] = y.y(k)[a] - y_tilde.y(k)[a] - quad[a] - integral.y(k)[a];
        }
        m_path.push(m);
        if k < n {
            let dt = times[k + 1] - times[k];
            let gy = g.value(y.y(k));
            let gyt = g.value(y_tilde.y(k));
            for a in 0..w {
                quad[a] += (gy[a] - gyt[a]) * dt;
            }
        }
    }
    let m_norm_3beta = path_holder_norm(&m_path, &times, 3.0 * beta, PairStrategy::Auto);
    let norms: HolderNorms = y.reference().holder_norms(beta, PairStrategy::Auto)?;
    let bound_shape = format!(
        "c * exp[c * (K'+1)^nu * (|||X|||+1)^nu], with measured |||X|||_beta = {:.6e}",
        norms.homogeneous
    );
    Ok(StabilityReport { m_path, m_norm_3beta, bound_shape })
}
