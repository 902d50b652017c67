//! Slow-fast systems of rough differential equations,
//!
//! ```text
//! X^ε_t = x₀ + ∫ f(X^ε, Y^ε) ds + ∫ σ(X^ε) dB,
//! Y^ε_t = y₀ + ε⁻¹ ∫ g(X^ε, Y^ε) ds + ε^{−1/2} ∫ h(X^ε, Y^ε) dW,
//! ```
//!
//! driven by the mixed rough path Ξ over ℝ^{d+e}. The pair is solved as one
//! block RDE with coefficients F_ε = (f, ε⁻¹g) and Σ_ε = diag(σ, ε^{−1/2}h).
//! The fast component satisfies the Itô SDE with corrected drift
//! g̃ = g + ½ Σ_{i,j} (∂h^{kj}/∂y_i) h^{ij}; the frozen SDE
//! dY = g̃(x, Y)dt + h(x, Y)dᴵw defines the invariant measure μˣ; the
//! averaged drift f̄(x) = ∫ f(x, y) μˣ(dy) drives the averaged RDE whose
//! solution X̄ the slow component approaches as ε ↓ 0. The averaging
//! experiment measures E‖X^ε − X̄‖_β^p over an ε sweep with the block
//! schedule δ = ε^{1/(6β)} log ε⁻¹.
//!
//! Monte Carlo runs are keyed by (stream, sample) seeds derived from one
//! root seed and reduce in sample order, so results are identical for any
//! worker count.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::anisotropic::{assemble_arp, ext_shared};
use crate::controlled::{ControlledPath, SmoothMap3};
use crate::drivers::{derive_seed, ito_cross_integrals, rng_from, FbmSampler, SamplePath};
use crate::error::Error;
use crate::norms::{mean_and_stderr, path_holder_norm, PairStrategy};
use crate::rde::{solve_rde, RdeProblem, EXPLOSION_GUARD};
use crate::roughpath::GridRoughPath;
use crate::Result;

/// Default grid/ε coupling: Δt ≤ ε / 20.
pub const DEFAULT_FAST_STEP_FRACTION: f64 = 1.0 / 20.0;

/// Seed stream tags for the experiment's independent noise sources.
const STREAM_FBM: u64 = 0;
const STREAM_BM: u64 = 1;
const STREAM_FROZEN: u64 = 2;

type Coeff2 = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type Coeff1 = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Dimensions, coefficients and analytic derivatives of one slow-fast system.
///
/// Layouts: `sigma` is m×d with gradient (m·d)×m and Hessian (m·d)×m²;
/// `h` is n×e with gradient and Hessian taken in the full variable
/// z = (x, y) ∈ ℝ^{m+n}, i.e. (n·e)×(m+n) and (n·e)×(m+n)².
#[derive(Clone)]
pub struct SlowFastSystem {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub e: usize,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub f: Coeff2,
    pub g: Coeff2,
    pub sigma: Coeff1,
    pub grad_sigma: Coeff1,
    pub hess_sigma: Coeff1,
    pub h: Coeff2,
    pub grad_h: Coeff2,
    pub hess_h: Coeff2,
    /// Replaces the computed g̃ when set (e.g. to disable the
    /// Itô–Stratonovich correction as a negative control).
    pub gtilde_override: Option<Coeff2>,
    /// Analytic averaged drift, when known.
    pub fbar: Option<Coeff1>,
}

impl SlowFastSystem {
    /// g̃ = g + ½ {Σ_{i,j} ∂h^{kj}/∂y_i · h^{ij}}_k, or the override.
    pub fn gtilde(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        if let Some(ov) = &self.gtilde_override {
            return ov(x, y);
        }
        let (m, n, e) = (self.m, self.n, self.e);
        let mut out = (self.g)(x, y);
        let h = (self.h)(x, y);
        let gh = (self.grad_h)(x, y);
        let z_dim = m + n;
        for k in 0..n {
            let mut corr = 0.0;
            for i in 0..n {
                for j in 0..e {
                    corr += gh[(k * e + j) * z_dim + (m + i)] * h[i * e + j];
                }
            }
            out[k] += 0.5 * corr;
        }
        out
    }

    /// The block diffusion Σ_ε = diag(σ, ε^{−1/2} h) as a smooth map
    /// ℝ^{m+n} → L(ℝ^{d+e}, ℝ^{m+n}).
    pub fn block_sigma(&self, epsilon: f64) -> SmoothMap3 {
        let (m, n, d, e) = (self.m, self.n, self.d, self.e);
        let (w, v) = (m + n, d + e);
        let scale = epsilon.powf(-0.5);
        let sigma = self.sigma.clone();
        let grad_sigma = self.grad_sigma.clone();
        let hess_sigma = self.hess_sigma.clone();
        let h = self.h.clone();
        let grad_h = self.grad_h.clone();
        let hess_h = self.hess_h.clone();
        let value = move |z: &[f64]| -> Vec<f64> {
            let (x, y) = z.split_at(m);
            let sv = sigma(x);
            let hv = h(x, y);
            let mut out = vec![0.0; w * v];
            for a in 0..m {
                for p in 0..d {
                    out[a * v + p] = sv[a * d + p];
                }
            }
            for a in 0..n {
                for p in 0..e {
                    out[(m + a) * v + (d + p)] = scale * hv[a * e + p];
                }
            }
            out
        };
        let grad = move |z: &[f64]| -> Vec<f64> {
            let (x, y) = z.split_at(m);
            let gs = grad_sigma(x);
            let gh = grad_h(x, y);
            let mut out = vec![0.0; w * v * w];
            for a in 0..m {
                for p in 0..d {
                    for b in 0..m {
                        out[(a * v + p) * w + b] = gs[(a * d + p) * m + b];
                    }
                }
            }
            for a in 0..n {
                for p in 0..e {
                    for b in 0..w {
                        out[((m + a) * v + (d + p)) * w + b] = scale * gh[(a * e + p) * w + b];
                    }
                }
            }
            out
        };
        let hess = move |z: &[f64]| -> Vec<f64> {
            let (x, y) = z.split_at(m);
            let hs = hess_sigma(x);
            let hh = hess_h(x, y);
            let mut out = vec![0.0; w * v * w * w];
            for a in 0..m {
                for p in 0..d {
                    for b in 0..m {
                        for c in 0..m {
                            out[((a * v + p) * w + b) * w + c] = hs[((a * d + p) * m + b) * m + c];
                        }
                    }
                }
            }
            for a in 0..n {
                for p in 0..e {
                    for b in 0..w {
                        for c in 0..w {
                            out[(((m + a) * v + (d + p)) * w + b) * w + c] =
                                scale * hh[((a * e + p) * w + b) * w + c];
                        }
                    }
                }
            }
            out
        };
        SmoothMap3::new(w, w * v, value, grad, hess)
    }

    /// The block drift F_ε = (f, ε⁻¹ g).
    pub fn block_drift(&self, epsilon: f64) -> impl Fn(&[f64], &[f64]) -> Vec<f64> + Sync + '_ {
        let m = self.m;
        move |z: &[f64], _psi: &[f64]| {
            let (x, y) = z.split_at(m);
            let mut out = (self.f)(x, y);
            let g = (self.g)(x, y);
            out.extend(g.iter().map(|v| v / epsilon));
            out
        }
    }

    /// σ as a smooth map for the standalone slow and averaged equations.
    pub fn sigma_map(&self) -> SmoothMap3 {
        let (m, d) = (self.m, self.d);
        let sigma = self.sigma.clone();
        let grad = self.grad_sigma.clone();
        let hess = self.hess_sigma.clone();
        let _ = (m, d);
        SmoothMap3::new(m, m * d, move |x| sigma(x), move |x| grad(x), move |x| hess(x))
    }
}

/// The coupled solution split into its components.
pub struct SlowFastSolution {
    /// The block controlled path over Ξ.
    pub z: ControlledPath,
    pub m: usize,
    pub n: usize,
}

impl SlowFastSolution {
    pub fn x_path(&self) -> Vec<Vec<f64>> {
        (0..=self.z.n_steps()).map(|k| self.z.y(k)[..self.m].to_vec()).collect()
    }

    pub fn y_path(&self) -> Vec<Vec<f64>> {
        (0..=self.z.n_steps()).map(|k| self.z.y(k)[self.m..].to_vec()).collect()
    }
}

/// Solves the coupled system as a block RDE over the mixed rough path.
/// Requires the grid step to satisfy Δt ≤ `fast_fraction`·ε.
pub fn simulate_slow_fast(
    sys: &SlowFastSystem,
    xi: &Arc<GridRoughPath>,
    epsilon: f64,
    alpha: f64,
    beta: f64,
    fast_fraction: f64,
) -> Result<SlowFastSolution> {
    if xi.dim() != sys.d + sys.e {
        return Err(Error::DimensionMismatch(format!(
            "driver dim {} vs d+e = {}",
            xi.dim(),
            sys.d + sys.e
        )));
    }
    let max_dt = xi.times().windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    if max_dt > fast_fraction * epsilon {
        return Err(Error::InvalidArgument(format!(
            "grid step {max_dt:.3e} exceeds {fast_fraction}·ε = {:.3e}",
            fast_fraction * epsilon
        )));
    }
    let mut z0 = sys.x0.clone();
    z0.extend_from_slice(&sys.y0);
    let sigma = sys.block_sigma(epsilon);
    let drift = sys.block_drift(epsilon);
    let prob = RdeProblem::new(z0, &sigma, &drift, xi, alpha, beta);
    let z = solve_rde(&prob)?;
    Ok(SlowFastSolution { z, m: sys.m, n: sys.n })
}

/// Euler–Maruyama for the fast component's Itô SDE,
/// Y_t = y₀ + ε⁻¹ ∫ g̃(X_s, Y_s) ds + ε^{−1/2} ∫ h(X_s, Y_s) dᴵw,
/// feeding in a recorded slow path. With `use_correction = false` the raw g
/// replaces g̃ (negative control).
pub fn fast_euler_maruyama(
    sys: &SlowFastSystem,
    x_path: &[Vec<f64>],
    w: &SamplePath,
    epsilon: f64,
    use_correction: bool,
) -> Result<Vec<Vec<f64>>> {
    if x_path.len() != w.times.len() {
        return Err(Error::GridMismatch("slow path and Brownian grid differ".into()));
    }
    let n_steps = w.n_steps();
    let mut y = sys.y0.clone();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(y.clone());
    let scale = epsilon.powf(-0.5);
    for k in 0..n_steps {
        let dt = w.times[k + 1] - w.times[k];
        let dw = w.increment(k, k + 1);
        let drift = if use_correction {
            sys.gtilde(&x_path[k], &y)
        } else {
            (sys.g)(&x_path[k], &y)
        };
        let hv = (sys.h)(&x_path[k], &y);
        for a in 0..sys.n {
            let mut acc = drift[a] * dt / epsilon;
            for p in 0..sys.e {
                acc += scale * hv[a * sys.e + p] * dw[p];
            }
            y[a] += acc;
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > EXPLOSION_GUARD) {
            return Err(Error::Explosion { time: w.times[k + 1], step: k + 1, guard: EXPLOSION_GUARD });
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Pathwise sup-deviation between the rough fast component and the
/// Euler–Maruyama path of its Itô identification.
pub fn fast_ito_check(
    sys: &SlowFastSystem,
    solution: &SlowFastSolution,
    w: &SamplePath,
    epsilon: f64,
    use_correction: bool,
) -> Result<f64> {
    let x_path = solution.x_path();
    let y_rough = solution.y_path();
    let y_em = fast_euler_maruyama(sys, &x_path, w, epsilon, use_correction)?;
    let mut dev = 0.0f64;
    for (a, b) in y_rough.iter().zip(&y_em) {
        for (u, v) in a.iter().zip(b) {
            dev = dev.max((u - v).abs());
        }
    }
    Ok(dev)
}

/// Euler–Maruyama path of the frozen SDE dY = g̃(x, Y)dt + h(x, Y)dᴵw with
/// the slow variable held at `x`.
pub fn frozen_sde_simulate(
    sys: &SlowFastSystem,
    x: &[f64],
    y_start: &[f64],
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if dt <= 0.0 {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let steps = (horizon / dt).round() as usize;
    let mut rng = rng_from(seed, &[STREAM_FROZEN]);
    let sd = dt.sqrt();
    let mut y = y_start.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y.clone());
    for k in 0..steps {
        let drift = sys.gtilde(x, &y);
        let hv = (sys.h)(x, &y);
        for a in 0..sys.n {
            let mut acc = drift[a] * dt;
            for p in 0..sys.e {
                let z: f64 = rng.sample(StandardNormal);
                acc += hv[a * sys.e + p] * sd * z;
            }
            y[a] += acc;
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > EXPLOSION_GUARD) {
            return Err(Error::Explosion { time: (k + 1) as f64 * dt, step: k + 1, guard: EXPLOSION_GUARD });
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Monte Carlo settings for the averaged-drift estimator.
#[derive(Debug, Clone, Copy)]
pub struct McParams {
    pub burn_in: f64,
    pub horizon: f64,
    pub chains: usize,
    pub dt: f64,
    pub seed: u64,
    /// Between-chain relative spread above which the estimate is flagged.
    pub spread_tolerance: f64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams { burn_in: 5.0, horizon: 50.0, chains: 8, dt: 1e-3, seed: 0, spread_tolerance: 0.5 }
    }
}

/// f̄(x) estimate with per-component standard errors.
#[derive(Debug, Clone)]
pub struct AveragedDriftEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    pub converged: bool,
}

/// Ergodic time-average estimator of f̄(x) = ∫ f(x, y) μˣ(dy) over
/// independent chains of the frozen SDE; the standard error comes from the
/// between-chain spread.
pub fn averaged_drift(sys: &SlowFastSystem, x: &[f64], mc: &McParams) -> Result<AveragedDriftEstimate> {
    if mc.burn_in < 0.0 || mc.horizon <= 0.0 || mc.chains == 0 || mc.dt <= 0.0 {
        return Err(Error::InvalidArgument("mc parameters must be positive".into()));
    }
    let m = sys.m;
    let mut chain_means = vec![Vec::with_capacity(mc.chains); m];
    for chain in 0..mc.chains {
        let path = frozen_sde_simulate(
            sys,
            x,
            &sys.y0,
            mc.burn_in + mc.horizon,
            mc.dt,
            derive_seed(mc.seed, &[STREAM_FROZEN, chain as u64]),
        )?;
        let skip = (mc.burn_in / mc.dt).round() as usize;
        let mut acc = vec![0.0; m];
        let mut count = 0usize;
        for y in path.iter().skip(skip) {
            let f = (sys.f)(x, y);
            for a in 0..m {
                acc[a] += f[a];
            }
            count += 1;
        }
        for a in 0..m {
            chain_means[a].push(acc[a] / count as f64);
        }
    }
    let mut value = vec![0.0; m];
    let mut stderr = vec![0.0; m];
    let mut converged = true;
    for a in 0..m {
        let (mean, se) = mean_and_stderr(&chain_means[a]);
        value[a] = mean;
        stderr[a] = se;
        if se > mc.spread_tolerance * (mean.abs() + 1.0) {
            converged = false;
        }
    }
    Ok(AveragedDriftEstimate { value, stderr, converged })
}

/// A piecewise-linear table of f̄ over a one-dimensional slow variable,
/// extendable on demand. Multi-dimensional slow components use the analytic
/// drift instead.
pub struct AveragedDriftTable {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub dx: f64,
    mc: McParams,
}

impl AveragedDriftTable {
    /// Tabulates f̄ on [x_min, x_max] with spacing `dx`.
    pub fn build(sys: &SlowFastSystem, x_min: f64, x_max: f64, dx: f64, mc: McParams) -> Result<Self> {
        if sys.m != 1 {
            return Err(Error::InvalidArgument("drift tables require a one-dimensional slow component".into()));
        }
        if !(dx > 0.0 && x_max > x_min) {
            return Err(Error::InvalidArgument("bad table range".into()));
        }
        let count = ((x_max - x_min) / dx).ceil() as usize + 1;
        let mut table = AveragedDriftTable { nodes: Vec::new(), values: Vec::new(), stderr: Vec::new(), dx, mc };
        for k in 0..count {
            let x = x_min + k as f64 * dx;
            let est = averaged_drift(sys, &[x], &table.mc_for(x))?;
            table.nodes.push(x);
            table.values.push(est.value[0]);
            table.stderr.push(est.stderr[0]);
        }
        Ok(table)
    }

    fn mc_for(&self, x: f64) -> McParams {
        // one deterministic stream per node location
        let mut mc = self.mc;
        mc.seed = derive_seed(self.mc.seed, &[STREAM_FROZEN, (x / self.dx).round() as i64 as u64]);
        mc
    }

    pub fn min(&self) -> f64 {
        *self.nodes.first().unwrap()
    }

    pub fn max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().cloned().fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolation; `None` outside the tabulated range.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if x < self.min() || x > self.max() {
            return None;
        }
        let k = ((x - self.min()) / self.dx).floor() as usize;
        let k = k.min(self.nodes.len() - 2);
        let theta = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        Some(self.values[k] + theta * (self.values[k + 1] - self.values[k]))
    }

    /// Extends the table so that `x` lies strictly inside the range.
    pub fn extend_to(&mut self, sys: &SlowFastSystem, x: f64) -> Result<()> {
        while x < self.min() {
            let node = self.min() - self.dx;
            let est = averaged_drift(sys, &[node], &self.mc_for(node))?;
            self.nodes.insert(0, node);
            self.values.insert(0, est.value[0]);
            self.stderr.insert(0, est.stderr[0]);
        }
        while x > self.max() {
            let node = self.max() + self.dx;
            let est = averaged_drift(sys, &[node], &self.mc_for(node))?;
            self.nodes.push(node);
            self.values.push(est.value[0]);
            self.stderr.push(est.stderr[0]);
        }
        Ok(())
    }
}

/// Which averaged drift the averaged RDE uses.
pub enum FbarSource<'a> {
    /// The system's analytic f̄.
    Analytic,
    /// A tabulated estimate, extended on demand when the trajectory leaves
    /// its range.
    Table(&'a mut AveragedDriftTable),
}

/// Solves the averaged RDE X̄ = x₀ + ∫ f̄(X̄)ds + ∫ σ(X̄)dB over the rough
/// block driver. ε never enters: for a fixed driver the output is the same
/// for every ε in an experiment.
pub fn solve_averaged(
    sys: &SlowFastSystem,
    b_lift: &Arc<GridRoughPath>,
    fbar: FbarSource<'_>,
    alpha: f64,
    beta: f64,
) -> Result<ControlledPath> {
    let sigma = sys.sigma_map();
    match fbar {
        FbarSource::Analytic => {
            let fbar = sys
                .fbar
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("system has no analytic averaged drift".into()))?
                .clone();
            let drift = move |x: &[f64], _psi: &[f64]| fbar(x);
            let prob = RdeProblem::new(sys.x0.clone(), &sigma, &drift, b_lift, alpha, beta);
            solve_rde(&prob)
        }
        FbarSource::Table(table) => {
            if sys.m != 1 {
                return Err(Error::InvalidArgument("drift tables require m = 1".into()));
            }
            // retry loop: clamp inside the drift, then extend the table
            // toward the furthest excursion and re-solve
            for _attempt in 0..16 {
                let lo = table.min();
                let hi = table.max();
                let escape = std::sync::Mutex::new(None::<f64>);
                let sol = {
                    let drift = |x: &[f64], _psi: &[f64]| -> Vec<f64> {
                        let mut xq = x[0];
                        if xq < lo || xq > hi {
                            let mut slot = escape.lock().unwrap();
                            let further = match *slot {
                                Some(prev) => (xq - hi).max(lo - xq) > (prev - hi).max(lo - prev),
                                None => true,
                            };
                            if further {
                                *slot = Some(xq);
                            }
                            xq = xq.clamp(lo, hi);
                        }
                        vec![table.eval(xq).unwrap()]
                    };
                    let prob = RdeProblem::new(sys.x0.clone(), &sigma, &drift, b_lift, alpha, beta);
                    solve_rde(&prob)?
                };
                match escape.into_inner().unwrap() {
                    None => return Ok(sol),
                    Some(x) => table.extend_to(sys, x + (x - sys.x0[0]).signum() * table.dx)?,
                }
            }
            Err(Error::TableOutOfRange(table.max()))
        }
    }
}

/// The auxiliary process Ŷ: Euler–Maruyama of the fast equation with the
/// slow component frozen at s(δ) = ⌊s/δ⌋δ, driven by the same Brownian
/// increments.
pub fn hat_process(
    sys: &SlowFastSystem,
    x_path: &[Vec<f64>],
    w: &SamplePath,
    delta: f64,
    epsilon: f64,
) -> Result<Vec<Vec<f64>>> {
    if x_path.len() != w.times.len() {
        return Err(Error::GridMismatch("slow path and Brownian grid differ".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let n_steps = w.n_steps();
    let dt = w.times[1] - w.times[0];
    let mut y = sys.y0.clone();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(y.clone());
    let scale = epsilon.powf(-0.5);
    for k in 0..n_steps {
        let t = w.times[k];
        let frozen_time = (t / delta).floor() * delta;
        let idx = ((frozen_time / dt) + 1e-9).floor() as usize;
        let idx = idx.min(n_steps);
        let x = &x_path[idx];
        let drift = sys.gtilde(x, &y);
        let hv = (sys.h)(x, &y);
        let dw = w.increment(k, k + 1);
        let step_dt = w.times[k + 1] - w.times[k];
        for a in 0..sys.n {
            let mut acc = drift[a] * step_dt / epsilon;
            for p in 0..sys.e {
                acc += scale * hv[a * sys.e + p] * dw[p];
            }
            y[a] += acc;
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > EXPLOSION_GUARD) {
            return Err(Error::Explosion { time: w.times[k + 1], step: k + 1, guard: EXPLOSION_GUARD });
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// The four Lebesgue terms of the decomposition
/// M = ∫{f(X,Y) − f(X_{(δ)},Y)} + ∫{f(X_{(δ)},Y) − f(X_{(δ)},Ŷ)}
///   + ∫{f(X_{(δ)},Ŷ) − f̄(X_{(δ)})} + ∫{f̄(X_{(δ)}) − f̄(X)},
/// with 1-Hölder norms on the three Lipschitz-controlled terms, a γ-Hölder
/// norm on the ergodic-fluctuation term, and ‖M‖_{3β} of the sum.
pub struct MDecomposition {
    pub terms: [Vec<Vec<f64>>; 4],
    /// ‖term₁‖₁, ‖term₂‖₁, ‖term₃‖_γ, ‖term₄‖₁.
    pub term_norms: [f64; 4],
    pub m_norm_3beta: f64,
}

pub fn m_decomposition(
    sys: &SlowFastSystem,
    times: &[f64],
    x_path: &[Vec<f64>],
    y_path: &[Vec<f64>],
    y_hat: &[Vec<f64>],
    delta: f64,
    beta: f64,
    gamma: f64,
) -> Result<MDecomposition> {
    let fbar = sys
        .fbar
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("m-decomposition needs the analytic averaged drift".into()))?;
    let n_steps = times.len() - 1;
    if x_path.len() != times.len() || y_path.len() != times.len() || y_hat.len() != times.len() {
        return Err(Error::GridMismatch("m-decomposition paths must share the grid".into()));
    }
    let dt = times[1] - times[0];
    let m = sys.m;
    let mut terms: [Vec<Vec<f64>>; 4] = [
        vec![vec![0.0; m]],
        vec![vec![0.0; m]],
        vec![vec![0.0; m]],
        vec![vec![0.0; m]],
    ];
    let frozen_index = |t: f64| -> usize {
        let idx = (((t / delta).floor() * delta / dt) + 1e-9).floor() as usize;
        idx.min(n_steps)
    };
    for k in 0..n_steps {
        let step_dt = times[k + 1] - times[k];
        let xk = &x_path[k];
        let xfk = &x_path[frozen_index(times[k])];
        let f_xy = (sys.f)(xk, &y_path[k]);
        let f_fy = (sys.f)(xfk, &y_path[k]);
        let f_fh = (sys.f)(xfk, &y_hat[k]);
        let fbar_f = fbar(xfk);
        let fbar_x = fbar(xk);
        for a in 0..m {
            let prev: Vec<f64> = (0..4).map(|i| terms[i].last().unwrap()[a]).collect();
            let incs = [
                (f_xy[a] - f_fy[a]) * step_dt,
                (f_fy[a] - f_fh[a]) * step_dt,
                (f_fh[a] - fbar_f[a]) * step_dt,
                (fbar_f[a] - fbar_x[a]) * step_dt,
            ];
            for i in 0..4 {
                if a == 0 {
                    let mut next = terms[i].last().unwrap().clone();
                    next[0] = prev[i] + incs[i];
                    terms[i].push(next);
                } else {
                    let len = terms[i].len();
                    terms[i][len - 1][a] = prev[i] + incs[i];
                }
            }
        }
    }
    let term_norms = [
        path_holder_norm(&terms[0], times, 1.0, PairStrategy::Auto),
        path_holder_norm(&terms[1], times, 1.0, PairStrategy::Auto),
        path_holder_norm(&terms[2], times, gamma, PairStrategy::Auto),
        path_holder_norm(&terms[3], times, 1.0, PairStrategy::Auto),
    ];
    let m_path: Vec<Vec<f64>> = (0..=n_steps)
        .map(|k| {
            (0..m)
                .map(|a| terms[0][k][a] + terms[1][k][a] + terms[2][k][a] + terms[3][k][a])
                .collect()
        })
        .collect();
    let m_norm_3beta = path_holder_norm(&m_path, times, 3.0 * beta, PairStrategy::Auto);
    Ok(MDecomposition { terms, term_norms, m_norm_3beta })
}

/// How the block length δ is chosen per ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// δ = ε^{1/(6β)} log ε⁻¹, clipped to (Δt, T].
    Proof,
    /// A fixed δ, clipped the same way.
    Fixed(f64),
}

/// δ for the given ε under the schedule, clipped to (Δt, T].
pub fn delta_schedule(mode: DeltaMode, epsilon: f64, beta: f64, dt: f64, t_final: f64) -> f64 {
    let raw = match mode {
        DeltaMode::Proof => epsilon.powf(1.0 / (6.0 * beta)) * (1.0 / epsilon).ln(),
        DeltaMode::Fixed(v) => v,
    };
    raw.max(dt * (1.0 + 1e-9)).min(t_final)
}

/// Configuration of the averaging experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub e: usize,
    pub hurst: f64,
    pub t_final: f64,
    /// Baseline grid size; the actual grid refines to meet Δt ≤ ε/20 for
    /// the smallest ε and rounds up to a power of two.
    pub n_base: usize,
    pub beta: f64,
    pub p: f64,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub system: String,
    pub delta_mode: DeltaMode,
}

/// One row of the experiment results table.
#[derive(Debug, Clone)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub delta: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples_used: usize,
    pub exploded: usize,
}

/// The grid size used by the experiment: fine enough for the smallest ε,
/// rounded up to a power of two for the circulant fBm sampler.
pub fn experiment_grid_size(cfg: &ExperimentConfig) -> usize {
    let eps_min = cfg.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let needed = (cfg.t_final / (DEFAULT_FAST_STEP_FRACTION * eps_min)).ceil() as usize;
    needed.max(cfg.n_base).next_power_of_two()
}

/// Per-sample work product: ‖X^ε − X̄‖_β^p per ε, or an explosion flag.
fn one_sample(
    sys: &SlowFastSystem,
    cfg: &ExperimentConfig,
    sampler: &FbmSampler,
    n: usize,
    sample: usize,
) -> Result<Vec<Option<f64>>> {
    let mut rng = rng_from(cfg.seed, &[STREAM_FBM, sample as u64]);
    let b = sampler.sample(cfg.d, &mut rng);
    let w = crate::drivers::sample_bm(cfg.e, n, cfg.t_final, derive_seed(cfg.seed, &[STREAM_BM, sample as u64]))?;
    let b_lift = Arc::new(GridRoughPath::lift_piecewise_linear(&b.times, &b.values)?);
    let cross = ito_cross_integrals(&b, &w)?;
    let arp = assemble_arp(&b_lift, &w, &cross, 0.45)?;
    let alpha = (cfg.hurst - 0.01).min(1.0 / 3.0);
    let xi = ext_shared(&arp, alpha, 0.45)?;
    let xbar = solve_averaged(sys, &b_lift, FbarSource::Analytic, alpha, cfg.beta)?;
    let mut out = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        match simulate_slow_fast(sys, &xi, eps, alpha, cfg.beta, DEFAULT_FAST_STEP_FRACTION) {
            Ok(sol) => {
                let diff: Vec<Vec<f64>> = (0..=n)
                    .map(|k| {
                        (0..sys.m)
                            .map(|a| sol.z.y(k)[a] - xbar.y(k)[a])
                            .collect()
                    })
                    .collect();
                let norm = path_holder_norm(&diff, &b.times, cfg.beta, PairStrategy::Auto);
                out.push(Some(norm.powf(cfg.p)));
            }
            Err(Error::Explosion { .. }) | Err(Error::NonFinite { .. }) => out.push(None),
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

/// Runs the averaging experiment: for each ε, the Monte Carlo estimate of
/// E‖X^ε − X̄‖_β^p with its standard error, the δ of the schedule and the
/// explosion count. Samples are independent tasks keyed by the sample index;
/// the reduction order is fixed, so output does not depend on thread count.
pub fn averaging_experiment(sys: &SlowFastSystem, cfg: &ExperimentConfig) -> Result<Vec<EpsilonRow>> {
    if sys.m != cfg.m || sys.n != cfg.n || sys.d != cfg.d || sys.e != cfg.e {
        return Err(Error::DimensionMismatch("config dims differ from the system".into()));
    }
    if cfg.epsilons.is_empty() || cfg.samples == 0 {
        return Err(Error::InvalidArgument("need at least one epsilon and one sample".into()));
    }
    if !(cfg.beta > 0.25 && cfg.beta < cfg.hurst) {
        return Err(Error::InvalidArgument(format!(
            "beta must lie in (1/4, H), got beta = {}, H = {}",
            cfg.beta, cfg.hurst
        )));
    }
    let n = experiment_grid_size(cfg);
    let dt = cfg.t_final / n as f64;
    let sampler = FbmSampler::new(cfg.hurst, n, cfg.t_final)?;
    let per_sample: Vec<Result<Vec<Option<f64>>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| one_sample(sys, cfg, &sampler, n, i))
        .collect();
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for (j, &eps) in cfg.epsilons.iter().enumerate() {
        let mut values = Vec::with_capacity(cfg.samples);
        let mut exploded = 0usize;
        for res in &per_sample {
            match res {
                Ok(cols) => match cols[j] {
                    Some(v) => values.push(v),
                    None => exploded += 1,
                },
                Err(e) => return Err(Error::InvalidArgument(format!("sample failed: {e}"))),
            }
        }
        let (estimate, stderr) = mean_and_stderr(&values);
        rows.push(EpsilonRow {
            epsilon: eps,
            delta: delta_schedule(cfg.delta_mode, eps, cfg.beta, dt, cfg.t_final),
            estimate,
            stderr,
            samples_used: values.len(),
            exploded,
        });
    }
    Ok(rows)
}

/// Built-in example systems. All satisfy the dissipativity and regularity
/// hypotheses needed for averaging (bounded smooth σ; bounded Lipschitz f;
/// g̃ with a strict linear contraction in y; h constant or with bounded
/// smooth y-dependence).
pub mod systems {
    use super::*;

    /// Ornstein–Uhlenbeck fast dynamics with constant noise:
    /// m = n = d = e = 1, f = sin y, g = x − y, σ(x) = 0.45 + 0.1 sin x,
    /// h ≡ h₀. The frozen law is N(x, h₀²/2), so
    /// f̄(x) = e^{−h₀²/4} sin x analytically.
    ///
    /// Dissipativity: 2⟨y, g̃⟩ + h₀² = 2xy − 2y² + h₀² ≤ −y² + x² + h₀²,
    /// and 2⟨y₁−y₂, g̃(x,y₁)−g̃(x,y₂)⟩ = −2|y₁−y₂|².
    pub fn ou(h0: f64) -> SlowFastSystem {
        SlowFastSystem {
            m: 1,
            n: 1,
            d: 1,
            e: 1,
            x0: vec![0.5],
            y0: vec![0.0],
            f: Arc::new(|_x, y| vec![y[0].sin()]),
            g: Arc::new(|x, y| vec![x[0] - y[0]]),
            sigma: Arc::new(|x| vec![0.45 + 0.1 * x[0].sin()]),
            grad_sigma: Arc::new(|x| vec![0.1 * x[0].cos()]),
            hess_sigma: Arc::new(|x| vec![-0.1 * x[0].sin()]),
            h: Arc::new(move |_x, _y| vec![h0]),
            grad_h: Arc::new(|_x, _y| vec![0.0, 0.0]),
            hess_h: Arc::new(|_x, _y| vec![0.0; 4]),
            gtilde_override: None,
            fbar: Some(Arc::new(move |x| vec![(-h0 * h0 / 4.0).exp() * x[0].sin()])),
        }
    }

    /// Same skeleton with state-dependent noise h(x, y) = 1 + ½ sin y, so
    /// the Itô–Stratonovich correction ½ h ∂_y h = ¼ cos y (1 + ½ sin y)
    /// is active. No closed-form averaged drift.
    pub fn ou_ygrad() -> SlowFastSystem {
        let mut sys = ou(1.0);
        sys.h = Arc::new(|_x, y| vec![1.0 + 0.5 * y[0].sin()]);
        sys.grad_h = Arc::new(|_x, y| vec![0.0, 0.5 * y[0].cos()]);
        sys.hess_h = Arc::new(|_x, y| vec![0.0, 0.0, 0.0, -0.5 * y[0].sin()]);
        sys.fbar = None;
        sys
    }

    /// Fully decoupled control case: g ≡ 0, h ≡ 0, f = f(x) only. The fast
    /// component stays at y₀ and the slow component is ε-independent.
    pub fn decoupled() -> SlowFastSystem {
        let mut sys = ou(1.0);
        sys.f = Arc::new(|x, _y| vec![x[0].sin()]);
        sys.g = Arc::new(|_x, _y| vec![0.0]);
        sys.h = Arc::new(|_x, _y| vec![0.0]);
        sys.grad_h = Arc::new(|_x, _y| vec![0.0, 0.0]);
        sys.hess_h = Arc::new(|_x, _y| vec![0.0; 4]);
        sys.fbar = Some(Arc::new(|x| vec![x[0].sin()]));
        sys
    }

    /// Looks up a built-in system by name.
    pub fn by_name(name: &str) -> Result<SlowFastSystem> {
        match name {
            "ou" => Ok(ou(1.0)),
            "ou-ygrad" => Ok(ou_ygrad()),
            "decoupled" => Ok(decoupled()),
            other => Err(Error::InvalidArgument(format!(
                "unknown system '{other}' (available: ou, ou-ygrad, decoupled)"
            ))),
        }
    }
}
