//! Controlled paths of level 3.
//!
//! A W-valued controlled path with respect to a reference rough path X is a
//! triple (Y, Y†, Y††) of grid paths with Y† ∈ L(V, W) and Y†† ∈ L(V⊗V, W)
//! whose remainders
//!
//! ```text
//! Y♯_{s,t}  = Y_t − Y_s − Y†_s X¹_{s,t} − Y††_s X²_{s,t}      (order 3α)
//! Y♯♯_{s,t} = Y†_t − Y†_s − Y††_s⟨X¹_{s,t}, ·⟩                (order 2α)
//! ```
//!
//! vanish on the diagonal. Remainders are never stored; they are determined
//! by (Y, Y†, Y††, X) and are computed on demand.
//!
//! Index conventions: `ydag[a*d + p] = Y†[a, p]` and
//! `ydagdag[(a*d + p)*d + q] = Y††[a, (p, q)]`, where the first tensor slot
//! `p` is the one contracted against X¹ in the Y♯♯ relation. With this
//! choice the Chen cross terms cancel exactly in the compensated-sum defect
//! identity used by the integration module.

use std::sync::Arc;

use crate::error::Error;
use crate::norms::{pair_set, path_holder_norm, PairStrategy};
use crate::roughpath::GridRoughPath;
use crate::tensor::Tensor3;
use crate::Result;

/// Seam tolerance for concatenation (solver output seams are exact).
pub const SEAM_TOL: f64 = 1e-10;

/// A smooth map between Euclidean spaces with evaluators for the value and
/// up to three derivatives. Derivatives are dense row-major:
/// `grad[b*in + a] = ∂g_b/∂x_a`, `hess[(b*in + a)*in + c] = ∂²g_b/∂x_a∂x_c`.
pub struct SmoothMap3 {
    pub in_dim: usize,
    pub out_dim: usize,
    value: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    grad: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    hess: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    third: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
    /// True when derivatives come from the finite-difference fallback.
    pub finite_difference: bool,
}

impl SmoothMap3 {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap3 {
            in_dim,
            out_dim,
            value: Box::new(value),
            grad: Box::new(grad),
            hess: Box::new(hess),
            third: None,
            finite_difference: false,
        }
    }

    pub fn with_third(mut self, third: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.third = Some(Box::new(third));
        self
    }

    /// Central finite-difference fallback (relative step 1e-5). Flagged via
    /// [`SmoothMap3::finite_difference`]; analytic derivatives are expected
    /// for acceptance-grade runs.
    pub fn from_value_fn(
        in_dim: usize,
        out_dim: usize,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + Clone + 'static,
    ) -> Self {
        let step = |x: &[f64], a: usize| 1e-5 * x[a].abs().max(1.0);
        let v1 = value.clone();
        let grad = move |x: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; out_dim * in_dim];
            let mut xp = x.to_vec();
            for a in 0..in_dim {
                let h = step(x, a);
                xp[a] = x[a] + h;
                let fp = v1(&xp);
                xp[a] = x[a] - h;
                let fm = v1(&xp);
                xp[a] = x[a];
                for b in 0..out_dim {
                    out[b * in_dim + a] = (fp[b] - fm[b]) / (2.0 * h);
                }
            }
            out
        };
        let v2 = value.clone();
        let hess = move |x: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; out_dim * in_dim * in_dim];
            let mut xs = x.to_vec();
            for a in 0..in_dim {
                for c in 0..in_dim {
                    let ha = step(x, a);
                    let hc = step(x, c);
                    let mut acc = vec![0.0; out_dim];
                    for (sa, sc, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        xs[a] += sa * ha;
                        xs[c] += sc * hc;
                        let f = v2(&xs);
                        for b in 0..out_dim {
                            acc[b] += w * f[b];
                        }
                        xs[a] = x[a];
                        xs[c] = x[c];
                    }
                    for b in 0..out_dim {
                        out[(b * in_dim + a) * in_dim + c] = acc[b] / (4.0 * ha * hc);
                    }
                }
            }
            out
        };
        SmoothMap3 {
            in_dim,
            out_dim,
            value: Box::new(value),
            grad: Box::new(grad),
            hess: Box::new(hess),
            third: None,
            finite_difference: true,
        }
    }

    /// The identity map on ℝᵈⁱᵐ.
    pub fn identity(dim: usize) -> Self {
        SmoothMap3::linear(dim, dim, {
            let mut a = vec![0.0; dim * dim];
            for i in 0..dim {
                a[i * dim + i] = 1.0;
            }
            a
        })
    }

    /// Constant map.
    pub fn constant(in_dim: usize, c: Vec<f64>) -> Self {
        let out_dim = c.len();
        SmoothMap3::new(
            in_dim,
            out_dim,
            move |_x| c.clone(),
            move |_x| vec![0.0; out_dim * in_dim],
            move |_x| vec![0.0; out_dim * in_dim * in_dim],
        )
    }

    /// Linear map x ↦ A x with `a` of shape out×in (row-major).
    pub fn linear(in_dim: usize, out_dim: usize, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), out_dim * in_dim);
        let a2 = a.clone();
        SmoothMap3::new(
            in_dim,
            out_dim,
            move |x| {
                (0..out_dim)
                    .map(|b| (0..in_dim).map(|i| a[b * in_dim + i] * x[i]).sum())
                    .collect()
            },
            move |_x| a2.clone(),
            move |_x| vec![0.0; out_dim * in_dim * in_dim],
        )
        .with_third(move |_x| vec![0.0; out_dim * in_dim * in_dim * in_dim])
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        (self.hess)(x)
    }

    pub fn has_third(&self) -> bool {
        self.third.is_some()
    }

    pub fn third(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.third.as_ref().map(|t| t(x))
    }
}

/// Grid samples of (Y, Y†, Y††) relative to a reference rough path.
///
/// A controlled path may live on a sub-window of the reference grid; `start`
/// is the index of its first grid point.
#[derive(Clone)]
pub struct ControlledPath {
    rp: Arc<GridRoughPath>,
    start: usize,
    target_dim: usize,
    y: Vec<Vec<f64>>,
    ydag: Vec<Vec<f64>>,
    ydagdag: Vec<Vec<f64>>,
}

/// The controlled-path seminorm ‖Y††‖_α + ‖Y♯‖_{3α} + ‖Y♯♯‖_{2α} together
/// with the measured ‖Y†‖_α, ‖Y‖_α and the fully explicit right-hand sides
/// that bound them (reported for cross-checking, never asserted internally).
#[derive(Debug, Clone, Copy)]
pub struct CpSeminorm {
    pub ydagdag_alpha: f64,
    pub ysharp_3alpha: f64,
    pub ysharpsharp_2alpha: f64,
    pub total: f64,
    pub ydag_alpha: f64,
    pub y_alpha: f64,
    /// {|Y††_a| + L^α ‖Y††‖_α} ‖X¹‖_α + L^α ‖Y♯♯‖_{2α}, L = window length.
    pub ydag_alpha_bound: f64,
    /// {|Y†_a| + L^α ‖Y†‖_α} ‖X¹‖_α + {|Y††_a| + L^α ‖Y††‖_α} L^α ‖X²‖_{2α}
    /// + L^{2α} ‖Y♯‖_{3α}.
    pub y_alpha_bound: f64,
}

impl ControlledPath {
    /// Builds a controlled path from raw grid samples.
    ///
    /// `y[k]` has length `target_dim`, `ydag[k]` length `target_dim*d`,
    /// `ydagdag[k]` length `target_dim*d*d`; all live on the reference grid
    /// points `start .. start + y.len() - 1`.
    pub fn from_samples(
        rp: Arc<GridRoughPath>,
        start: usize,
        target_dim: usize,
        y: Vec<Vec<f64>>,
        ydag: Vec<Vec<f64>>,
        ydagdag: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let d = rp.dim();
        let len = y.len();
        if len == 0 || ydag.len() != len || ydagdag.len() != len {
            return Err(Error::DimensionMismatch("sample arrays must share the grid".into()));
        }
        if start + len - 1 > rp.n_steps() {
            return Err(Error::IndexOutOfRange(format!(
                "window {}..{} exceeds grid with {} steps",
                start,
                start + len - 1,
                rp.n_steps()
            )));
        }
        if y.iter().any(|v| v.len() != target_dim)
            || ydag.iter().any(|v| v.len() != target_dim * d)
            || ydagdag.iter().any(|v| v.len() != target_dim * d * d)
        {
            return Err(Error::DimensionMismatch("component shapes".into()));
        }
        Ok(ControlledPath { rp, start, target_dim, y, ydag, ydagdag })
    }

    /// The canonical controlled path
    /// t ↦ (ξ + σ X¹_{a,t} + η X²_{a,t}, σ + η⟨X¹_{a,t}, ·⟩, η)
    /// started at grid point `start`; both remainders vanish identically.
    pub fn canonical(rp: Arc<GridRoughPath>, start: usize, xi: &[f64], sigma: &[f64], eta: &[f64]) -> Result<Self> {
        let d = rp.dim();
        let w = xi.len();
        if sigma.len() != w * d || eta.len() != w * d * d {
            return Err(Error::DimensionMismatch("canonical shapes".into()));
        }
        let len = rp.n_steps() - start;
        let mut y = Vec::with_capacity(len + 1);
        let mut ydag = Vec::with_capacity(len + 1);
        let mut ydagdag = Vec::with_capacity(len + 1);
        let mut inc = Tensor3::identity(d);
        for k in 0..=len {
            if k > 0 {
                inc = inc.mul(rp.step(start + k - 1))?;
            }
            let mut yk = xi.to_vec();
            let mut dk = sigma.to_vec();
            for a in 0..w {
                for q in 0..d {
                    yk[a] += sigma[a * d + q] * inc.level1[q];
                    for p in 0..d {
                        yk[a] += eta[(a * d + p) * d + q] * inc.l2(p, q);
                        dk[a * d + q] += eta[(a * d + p) * d + q] * inc.level1[p];
                    }
                }
            }
            y.push(yk);
            ydag.push(dk);
            ydagdag.push(eta.to_vec());
        }
        ControlledPath::from_samples(rp, start, w, y, ydag, ydagdag)
    }

    /// Embeds a smooth grid path as (φ, 0, 0).
    pub fn embed_smooth(rp: Arc<GridRoughPath>, start: usize, samples: Vec<Vec<f64>>) -> Result<Self> {
        let w = samples.first().map(|s| s.len()).unwrap_or(0);
        let d = rp.dim();
        let len = samples.len();
        ControlledPath::from_samples(
            rp,
            start,
            w,
            samples,
            vec![vec![0.0; w * d]; len],
            vec![vec![0.0; w * d * d]; len],
        )
    }

    pub fn reference(&self) -> &Arc<GridRoughPath> {
        &self.rp
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Number of grid steps covered by this path.
    pub fn n_steps(&self) -> usize {
        self.y.len() - 1
    }

    /// Times of the covered window.
    pub fn times(&self) -> &[f64] {
        &self.rp.times()[self.start..=self.start + self.n_steps()]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.y[k]
    }

    pub fn ydag(&self, k: usize) -> &[f64] {
        &self.ydag[k]
    }

    pub fn ydagdag(&self, k: usize) -> &[f64] {
        &self.ydagdag[k]
    }

    pub fn y_path(&self) -> &[Vec<f64>] {
        &self.y
    }

    /// Reference-path increment between local indices (i, j).
    pub fn rp_increment(&self, i: usize, j: usize) -> Result<Tensor3> {
        self.rp.increment(self.start + i, self.start + j)
    }

    /// The two remainders (Y♯_{ij}, Y♯♯_{ij}) at local indices i ≤ j.
    pub fn remainders(&self, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if i > j || j > self.n_steps() {
            return Err(Error::IndexOutOfRange(format!("remainders({i}, {j})")));
        }
        let inc = self.rp_increment(i, j)?;
        Ok(self.remainders_with(i, j, &inc))
    }

    fn remainders_with(&self, i: usize, j: usize, inc: &Tensor3) -> (Vec<f64>, Vec<f64>) {
        let d = self.rp.dim();
        let w = self.target_dim;
        let mut sharp = vec![0.0; w];
        let mut sharpsharp = vec![0.0; w * d];
        for a in 0..w {
            let mut v = self.y[j][a] - self.y[i][a];
            for p in 0..d {
                v -= self.ydag[i][a * d + p] * inc.level1[p];
                for q in 0..d {
                    v -= self.ydagdag[i][(a * d + p) * d + q] * inc.l2(p, q);
                }
            }
            sharp[a] = v;
            for q in 0..d {
                let mut u = self.ydag[j][a * d + q] - self.ydag[i][a * d + q];
                for p in 0..d {
                    u -= self.ydagdag[i][(a * d + p) * d + q] * inc.level1[p];
                }
                sharpsharp[a * d + q] = u;
            }
        }
        (sharp, sharpsharp)
    }

    /// Grid seminorm at exponent α, with the measured first-level norms and
    /// the explicit bound right-hand sides reported alongside.
    pub fn seminorm(&self, alpha: f64, strategy: PairStrategy) -> Result<CpSeminorm> {
        let n = self.n_steps();
        let d = self.rp.dim();
        let times = self.times();
        let mut sharp_sup = 0.0f64;
        let mut ss_sup = 0.0f64;
        let mut x1_sup = 0.0f64;
        let mut x2_sup = 0.0f64;
        let mut record = |this: &Self, i: usize, j: usize, inc: &Tensor3| {
            let dt = times[j] - times[i];
            let (sharp, ss) = this.remainders_with(i, j, inc);
            let ms = sharp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mss = ss.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            sharp_sup = sharp_sup.max(ms / dt.powf(3.0 * alpha));
            ss_sup = ss_sup.max(mss / dt.powf(2.0 * alpha));
            x1_sup = x1_sup.max(inc.level_norm(1) / dt.powf(alpha));
            x2_sup = x2_sup.max(inc.level_norm(2) / dt.powf(2.0 * alpha));
        };
        match strategy.resolve(n) {
            PairStrategy::AllPairs => {
                for i in 0..n {
                    let mut acc = Tensor3::identity(d);
                    for j in (i + 1)..=n {
                        acc = acc.mul(self.rp.step(self.start + j - 1))?;
                        record(self, i, j, &acc);
                    }
                }
            }
            PairStrategy::Dyadic => {
                let prefix = self.rp.prefix_products()?;
                for (i, j) in pair_set(n, PairStrategy::Dyadic) {
                    let inc = prefix[self.start + i].antipode().mul(&prefix[self.start + j])?;
                    record(self, i, j, &inc);
                }
            }
            PairStrategy::Auto => unreachable!(),
        }
        let ydagdag_alpha = path_holder_norm(&self.ydagdag, times, alpha, strategy);
        let ydag_alpha = path_holder_norm(&self.ydag, times, alpha, strategy);
        let y_alpha = path_holder_norm(&self.y, times, alpha, strategy);
        let window = times[n] - times[0];
        let la = window.powf(alpha);
        let dagdag0 = self.ydagdag[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dag0 = self.ydag[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ydag_alpha_bound = (dagdag0 + la * ydagdag_alpha) * x1_sup + la * ss_sup;
        let y_alpha_bound =
            (dag0 + la * ydag_alpha) * x1_sup + (dagdag0 + la * ydagdag_alpha) * la * x2_sup + la * la * sharp_sup;
        Ok(CpSeminorm {
            ydagdag_alpha,
            ysharp_3alpha: sharp_sup,
            ysharpsharp_2alpha: ss_sup,
            total: ydagdag_alpha + sharp_sup + ss_sup,
            ydag_alpha,
            y_alpha,
            ydag_alpha_bound,
            y_alpha_bound,
        })
    }

    /// Composition with a C³ map: g(Y)† = ∇g(Y)Y†,
    /// g(Y)†† = ∇g(Y)Y†† + ∇²g(Y)⟨Y†•, Y†⋆⟩.
    pub fn compose(&self, g: &SmoothMap3) -> Result<ControlledPath> {
        if g.in_dim != self.target_dim {
            return Err(Error::DimensionMismatch(format!(
                "map domain {} vs path dim {}",
                g.in_dim, self.target_dim
            )));
        }
        let d = self.rp.dim();
        let w = self.target_dim;
        let wo = g.out_dim;
        let len = self.y.len();
        let mut y = Vec::with_capacity(len);
        let mut ydag = Vec::with_capacity(len);
        let mut ydagdag = Vec::with_capacity(len);
        for k in 0..len {
            let x = &self.y[k];
            let val = g.value(x);
            let gr = g.gradient(x);
            let he = g.hessian(x);
            let mut dk = vec![0.0; wo * d];
            let mut ddk = vec![0.0; wo * d * d];
            for b in 0..wo {
                for p in 0..d {
                    let mut acc = 0.0;
                    for a in 0..w {
                        acc += gr[b * w + a] * self.ydag[k][a * d + p];
                    }
                    dk[b * d + p] = acc;
                }
                for p in 0..d {
                    for q in 0..d {
                        let mut acc = 0.0;
                        for a in 0..w {
                            acc += gr[b * w + a] * self.ydagdag[k][(a * d + p) * d + q];
                        }
                        for a in 0..w {
                            for c in 0..w {
                                acc += he[(b * w + a) * w + c]
                                    * self.ydag[k][a * d + p]
                                    * self.ydag[k][c * d + q];
                            }
                        }
                        ddk[(b * d + p) * d + q] = acc;
                    }
                }
            }
            y.push(val);
            ydag.push(dk);
            ydagdag.push(ddk);
        }
        ControlledPath::from_samples(self.rp.clone(), self.start, wo, y, ydag, ydagdag)
    }

    /// Restriction to local indices [i, j].
    pub fn restrict(&self, i: usize, j: usize) -> Result<ControlledPath> {
        if i > j || j > self.n_steps() {
            return Err(Error::IndexOutOfRange(format!("restrict({i}, {j})")));
        }
        ControlledPath::from_samples(
            self.rp.clone(),
            self.start + i,
            self.target_dim,
            self.y[i..=j].to_vec(),
            self.ydag[i..=j].to_vec(),
            self.ydagdag[i..=j].to_vec(),
        )
    }

    /// Concatenation across a shared seam point. Endpoint data must agree to
    /// [`SEAM_TOL`] and both paths must reference the same grid.
    pub fn concatenate(&self, other: &ControlledPath) -> Result<ControlledPath> {
        if !Arc::ptr_eq(&self.rp, &other.rp) {
            return Err(Error::GridMismatch("different reference rough paths".into()));
        }
        if self.target_dim != other.target_dim {
            return Err(Error::DimensionMismatch("target dims differ".into()));
        }
        if self.start + self.n_steps() != other.start {
            return Err(Error::GridMismatch(format!(
                "seam index {} vs {}",
                self.start + self.n_steps(),
                other.start
            )));
        }
        let i = self.n_steps();
        let mismatch = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let seam = mismatch(&self.y[i], &other.y[0])
            .max(mismatch(&self.ydag[i], &other.ydag[0]))
            .max(mismatch(&self.ydagdag[i], &other.ydagdag[0]));
        if seam > SEAM_TOL {
            return Err(Error::GridMismatch(format!("seam mismatch {seam:e} exceeds {SEAM_TOL:e}")));
        }
        let mut y = self.y.clone();
        let mut ydag = self.ydag.clone();
        let mut ydagdag = self.ydagdag.clone();
        y.extend_from_slice(&other.y[1..]);
        ydag.extend_from_slice(&other.ydag[1..]);
        ydagdag.extend_from_slice(&other.ydagdag[1..]);
        ControlledPath::from_samples(self.rp.clone(), self.start, self.target_dim, y, ydag, ydagdag)
    }

    /// λ·self + μ·other, componentwise (controlled paths over a fixed
    /// reference form a vector space).
    pub fn linear_combination(&self, lambda: f64, mu: f64, other: &ControlledPath) -> Result<ControlledPath> {
        if !Arc::ptr_eq(&self.rp, &other.rp)
            || self.start != other.start
            || self.y.len() != other.y.len()
            || self.target_dim != other.target_dim
        {
            return Err(Error::GridMismatch("linear combination windows differ".into()));
        }
        let comb = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.iter().zip(y).map(|(u, v)| lambda * u + mu * v).collect())
                .collect()
        };
        ControlledPath::from_samples(
            self.rp.clone(),
            self.start,
            self.target_dim,
            comb(&self.y, &other.y),
            comb(&self.ydag, &other.ydag),
            comb(&self.ydagdag, &other.ydagdag),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_lift(seed: u64, dim: usize, n: usize) -> Arc<GridRoughPath> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let mut samples = vec![vec![0.0; dim]];
        for _ in 0..n {
            let prev = samples.last().unwrap().clone();
            samples.push(prev.iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect());
        }
        Arc::new(GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap())
    }

    fn random_canonical(seed: u64, rp: &Arc<GridRoughPath>, w: usize) -> ControlledPath {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let d = rp.dim();
        let xi: Vec<f64> = (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sigma: Vec<f64> = (0..w * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..w * d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ControlledPath::canonical(rp.clone(), 0, &xi, &sigma, &eta).unwrap()
    }

    #[test]
    fn canonical_remainders_vanish() {
        let rp = random_lift(1, 2, 24);
        let cp = random_canonical(2, &rp, 2);
        for i in 0..=24 {
            for j in i..=24 {
                let (s, ss) = cp.remainders(i, j).unwrap();
                assert!(s.iter().all(|v| v.abs() <= 1e-12));
                assert!(ss.iter().all(|v| v.abs() <= 1e-12));
            }
        }
        let sn = cp.seminorm(0.3, PairStrategy::AllPairs).unwrap();
        assert!(sn.ysharp_3alpha <= 1e-10 && sn.ysharpsharp_2alpha <= 1e-10);
    }

    #[test]
    fn smooth_embedding_remainders() {
        let rp = random_lift(3, 2, 16);
        let times = rp.times().to_vec();
        let phi: Vec<Vec<f64>> = times.iter().map(|t| vec![(2.0 * t).sin()]).collect();
        let cp = ControlledPath::embed_smooth(rp, 0, phi.clone()).unwrap();
        let (s, ss) = cp.remainders(3, 11).unwrap();
        assert!((s[0] - (phi[11][0] - phi[3][0])).abs() <= 1e-15);
        assert!(ss.iter().all(|v| *v == 0.0));
        let (s0, ss0) = cp.remainders(5, 5).unwrap();
        assert!(s0.iter().all(|v| *v == 0.0) && ss0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn embedded_holder_path_seminorm_is_path_norm() {
        // (φ, 0, 0) has total seminorm ‖φ‖_{3α}
        let rp = random_lift(5, 1, 32);
        let times = rp.times().to_vec();
        let phi: Vec<Vec<f64>> = times.iter().map(|t| vec![t.powf(0.95)]).collect();
        let cp = ControlledPath::embed_smooth(rp, 0, phi.clone()).unwrap();
        let alpha = 0.3;
        let sn = cp.seminorm(alpha, PairStrategy::AllPairs).unwrap();
        let direct = path_holder_norm(&phi, &times, 3.0 * alpha, PairStrategy::AllPairs);
        assert!((sn.total - direct).abs() <= 1e-12 * (1.0 + direct));
        assert_eq!(sn.ydagdag_alpha, 0.0);
        assert_eq!(sn.ysharpsharp_2alpha, 0.0);
    }

    #[test]
    fn seminorm_bound_rhs_holds_on_unit_interval() {
        // measured ‖Y†‖_α ≤ (1 + ‖X¹‖_α)(|Y††_0| + total) at T = 1
        let rp = random_lift(7, 2, 32);
        let cp = random_canonical(8, &rp, 2);
        let g = SmoothMap3::new(
            2,
            2,
            |x| vec![x[0].sin() + 0.5 * x[1], x[1].cos()],
            |x| vec![x[0].cos(), 0.5, 0.0, -x[1].sin()],
            |x| vec![-x[0].sin(), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -x[1].cos()],
        );
        let cp = cp.compose(&g).unwrap();
        let alpha = 0.3;
        let sn = cp.seminorm(alpha, PairStrategy::AllPairs).unwrap();
        let x1 = rp.holder_norms(alpha, PairStrategy::AllPairs).unwrap().level1;
        let dagdag0 = cp.ydagdag(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sn.ydag_alpha <= sn.ydag_alpha_bound + 1e-12);
        assert!(sn.y_alpha <= sn.y_alpha_bound + 1e-12);
        assert!(sn.ydag_alpha <= (1.0 + x1) * (dagdag0 + sn.total) + 1e-12);
    }

    #[test]
    fn compose_identity_and_constant() {
        let rp = random_lift(9, 2, 16);
        let cp = random_canonical(10, &rp, 3);
        let same = cp.compose(&SmoothMap3::identity(3)).unwrap();
        for k in 0..=16 {
            assert_eq!(cp.y(k), same.y(k));
            assert_eq!(cp.ydag(k), same.ydag(k));
            assert_eq!(cp.ydagdag(k), same.ydagdag(k));
        }
        let c = SmoothMap3::constant(3, vec![4.0, -1.0]);
        let cst = cp.compose(&c).unwrap();
        for k in 0..=16 {
            assert_eq!(cst.y(k), &[4.0, -1.0]);
            assert!(cst.ydag(k).iter().all(|v| *v == 0.0));
            assert!(cst.ydagdag(k).iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn compose_linear_is_exact_and_functorial() {
        let rp = random_lift(11, 2, 16);
        let cp = random_canonical(12, &rp, 2);
        let a = SmoothMap3::linear(2, 3, vec![1.0, 2.0, -0.5, 0.0, 3.0, 1.0]);
        let b = SmoothMap3::linear(3, 2, vec![0.5, 1.0, 0.0, -1.0, 0.0, 2.0]);
        let ab = {
            // matrix product B·A
            let am = [1.0, 2.0, -0.5, 0.0, 3.0, 1.0];
            let bm = [0.5, 1.0, 0.0, -1.0, 0.0, 2.0];
            let mut m = vec![0.0; 4];
            for i in 0..2 {
                for j in 0..2 {
                    m[i * 2 + j] = (0..3).map(|k| bm[i * 3 + k] * am[k * 2 + j]).sum();
                }
            }
            SmoothMap3::linear(2, 2, m)
        };
        let lhs = cp.compose(&a).unwrap().compose(&b).unwrap();
        let rhs = cp.compose(&ab).unwrap();
        for k in 0..=16 {
            for (x, y) in lhs.y(k).iter().zip(rhs.y(k)) {
                assert!((x - y).abs() <= 1e-12);
            }
            for (x, y) in lhs.ydagdag(k).iter().zip(rhs.ydagdag(k)) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        // remainders of A·cp are A applied to cp's remainders
        let composed = cp.compose(&a).unwrap();
        let (s, ss) = cp.remainders(2, 9).unwrap();
        let (cs, css) = composed.remainders(2, 9).unwrap();
        let am = [1.0, 2.0, -0.5, 0.0, 3.0, 1.0];
        for b_i in 0..3 {
            let want: f64 = (0..2).map(|a_i| am[b_i * 2 + a_i] * s[a_i]).sum();
            assert!((cs[b_i] - want).abs() <= 1e-13);
            for q in 0..2 {
                let want: f64 = (0..2).map(|a_i| am[b_i * 2 + a_i] * ss[a_i * 2 + q]).sum();
                assert!((css[b_i * 2 + q] - want).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn finite_difference_fallback_matches_analytic() {
        let g = SmoothMap3::from_value_fn(2, 1, |x: &[f64]| vec![x[0].sin() * x[1]]);
        assert!(g.finite_difference);
        let x = [0.4, -0.8];
        let gr = g.gradient(&x);
        assert!((gr[0] - x[0].cos() * x[1]).abs() <= 1e-8);
        assert!((gr[1] - x[0].sin()).abs() <= 1e-8);
        let he = g.hessian(&x);
        assert!((he[0] - (-x[0].sin() * x[1])).abs() <= 1e-5);
        assert!((he[1] - x[0].cos()).abs() <= 1e-5);
    }

    #[test]
    fn concatenation_identities() {
        let rp = random_lift(13, 2, 32);
        let base = random_canonical(14, &rp, 2);
        let g = SmoothMap3::new(
            2,
            2,
            |x| vec![(x[0] + x[1]).sin(), x[0] * x[1]],
            |x| vec![(x[0] + x[1]).cos(), (x[0] + x[1]).cos(), x[1], x[0]],
            |x| {
                let s = -(x[0] + x[1]).sin();
                vec![s, s, s, s, 0.0, 1.0, 1.0, 0.0]
            },
        );
        let cp = base.compose(&g).unwrap();
        let b = 16usize;
        let left = cp.restrict(0, b).unwrap();
        let right = cp.restrict(b, 32).unwrap();

        // concatenating a path with its own restriction gives back the original
        let glued = left.concatenate(&right).unwrap();
        for k in 0..=32 {
            assert_eq!(glued.y(k), cp.y(k));
        }

        // cross-seam defect identities, exact on the grid
        let d = 2usize;
        for &(s, t) in &[(3usize, 20usize), (0, 32), (10, 17)] {
            let (sharp_st, ss_st) = cp.remainders(s, t).unwrap();
            let (sharp_sb, ss_sb) = cp.remainders(s, b).unwrap();
            let (sharp_bt, ss_bt) = cp.remainders(b, t).unwrap();
            let x_bt = cp.rp_increment(b, t).unwrap();
            // Y††,¹_{s,b}
            let dd_diff: Vec<f64> = cp.ydagdag(b).iter().zip(cp.ydagdag(s)).map(|(u, v)| u - v).collect();
            for a in 0..2 {
                for q in 0..d {
                    // Z♯♯_{s,t} = Y♯♯_{s,b} + Ŷ♯♯_{b,t} + Y††,¹_{s,b}⟨X¹_{b,t}⟩
                    let mut want = ss_sb[a * d + q] + ss_bt[a * d + q];
                    for p in 0..d {
                        want += dd_diff[(a * d + p) * d + q] * x_bt.level1[p];
                    }
                    assert!((ss_st[a * d + q] - want).abs() <= 1e-12);
                }
                // Z♯_{s,t} = Y♯_{s,b} + Ŷ♯_{b,t} + Y††,¹_{s,b}⟨X²_{b,t}⟩ + Y♯♯_{s,b}⟨X¹_{b,t}⟩
                let mut want = sharp_sb[a] + sharp_bt[a];
                for p in 0..d {
                    for q in 0..d {
                        want += dd_diff[(a * d + p) * d + q] * x_bt.l2(p, q);
                    }
                    want += ss_sb[a * d + p] * x_bt.level1[p];
                }
                assert!((sharp_st[a] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn compose_remainder_order_has_bounded_constant() {
        // |g(Y)♯_{s,t}|/(t−s)^{3α} stays under the polynomial shape
        // c₃ (K+1)⁷ (|||X|||+1)⁶ with one measured constant across drivers
        let g = SmoothMap3::new(
            1,
            1,
            |x: &[f64]| vec![x[0].sin()],
            |x: &[f64]| vec![x[0].cos()],
            |x: &[f64]| vec![-x[0].sin()],
        );
        let k_norm = 1.0f64; // sup of g and its derivatives
        let alpha = 0.3;
        let mut ratios = Vec::new();
        for seed in 0..6u64 {
            let rp = random_lift(40 + seed, 1, 64);
            let cp = ControlledPath::canonical(rp.clone(), 0, &[0.1], &[1.0], &[0.4]).unwrap();
            let composed = cp.compose(&g).unwrap();
            let sn = composed.seminorm(alpha, PairStrategy::AllPairs).unwrap();
            let x_norm = rp.holder_norms(alpha, PairStrategy::AllPairs).unwrap().homogeneous;
            ratios.push(sn.ysharp_3alpha / ((k_norm + 1.0).powi(7) * (x_norm + 1.0).powi(6)));
        }
        let c_measured = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(c_measured.is_finite() && c_measured > 0.0);
        for r in &ratios {
            assert!(*r <= c_measured);
        }
        // the measured constant is modest for unit-scale data
        assert!(c_measured <= 10.0, "measured shape constant {c_measured}");
    }

    #[test]
    fn concatenation_rejects_seam_mismatch() {
        let rp = random_lift(15, 2, 16);
        let cp = random_canonical(16, &rp, 1);
        let left = cp.restrict(0, 8).unwrap();
        let mut right = cp.restrict(8, 16).unwrap();
        right.y[0][0] += 1e-6;
        assert!(left.concatenate(&right).is_err());
        let elsewhere = cp.restrict(9, 16).unwrap();
        assert!(left.concatenate(&elsewhere).is_err());
    }
}
