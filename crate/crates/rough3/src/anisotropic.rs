//! Anisotropic rough paths over ℝᵈ ⊕ ℝᵉ and the extension map.
//!
//! An anisotropic rough path (ARP) of roughness (α, γ) carries the seven
//! components (B¹, W¹, B², W², I[B,W], I[W,B], B³) subject to componentwise
//! Chen relations. The extension map **Ext** fills in the seven missing
//! third-level blocks by compensated sums
//!
//! ```text
//! Ξ^{3,[ijk]}_{s,t} = lim Σ_l π_{ijk}⟨ Ξ¹_{s,t_{l−1}} ⊗ Ξ²_{t_{l−1},t_l}
//!                                    + Ξ²_{s,t_{l−1}} ⊗ Ξ¹_{t_{l−1},t_l} ⟩,
//! ```
//!
//! which needs 2α + γ > 1. On a grid the finest partition is the grid
//! itself: per-step mixed blocks are the trivial-partition value (an empty
//! compensated sum, i.e. zero) plus the geometric per-step contributions of
//! the pure blocks (B³ from the lift, W³ = Δw⊗Δw⊗Δw/6 from the
//! piecewise-linear Brownian lift), and every coarser value follows from
//! Chen's relation exactly. Coarser partitions are kept only to observe the
//! compensated-sum convergence.
//!
//! The module also provides the dyadic Kolmogorov majorant
//! M = 2 Σ_n K_n / (T·2^{−n})^γ with K_n the level-n block supremum, which
//! dominates |Q_{s,t}|/(t−s)^γ over all grid pairs for additive two-parameter
//! data, together with its Chen-corrected variant for cross integrals.

use std::sync::Arc;

use crate::drivers::{CrossIntegrals, SamplePath};
use crate::error::Error;
use crate::norms::{pair_set, PairStrategy};
use crate::roughpath::GridRoughPath;
use crate::tensor::Tensor3;
use crate::Result;

/// The seven-component mixed object on a grid. The B block is stored as
/// per-step group elements in T³(ℝᵈ); the Brownian and cross components are
/// per-step arrays.
#[derive(Debug, Clone)]
pub struct AnisotropicRP {
    pub d: usize,
    pub e: usize,
    pub gamma: f64,
    times: Vec<f64>,
    step_b: Vec<Tensor3>,
    step_w1: Vec<Vec<f64>>,
    step_w2: Vec<Vec<f64>>,
    step_ibw: Vec<Vec<f64>>,
    step_iwb: Vec<Vec<f64>>,
}

/// An ARP increment over a grid pair.
#[derive(Debug, Clone)]
pub struct ArpIncrement {
    pub b: Tensor3,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub ibw: Vec<f64>,
    pub iwb: Vec<f64>,
}

/// The seven Hölder norms of an ARP.
#[derive(Debug, Clone, Copy)]
pub struct ArpNorms {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub w1: f64,
    pub w2: f64,
    pub ibw: f64,
    pub iwb: f64,
}

/// Assembles the mixed object from a lifted rough block, a Brownian sample
/// path and cross integrals on a shared grid. W² is the Stratonovich second
/// level realised as the piecewise-linear lift Δw⊗Δw/2 per step.
pub fn assemble_arp(
    b_lift: &GridRoughPath,
    w: &SamplePath,
    cross: &CrossIntegrals,
    gamma: f64,
) -> Result<AnisotropicRP> {
    let d = b_lift.dim();
    let e = w.dim;
    if cross.d != d || cross.e != e {
        return Err(Error::DimensionMismatch(format!(
            "cross integrals are {}×{}, expected {d}×{e}",
            cross.d, cross.e
        )));
    }
    let times = b_lift.times();
    if times.len() != w.times.len()
        || times.iter().zip(&w.times).any(|(a, b)| (a - b).abs() > 0.0)
        || times.len() != cross.times.len()
    {
        return Err(Error::GridMismatch("ARP components must share one grid".into()));
    }
    if !(gamma > 1.0 / 3.0 && gamma <= 0.5) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside (1/3, 1/2]")));
    }
    let n = b_lift.n_steps();
    let mut step_w1 = Vec::with_capacity(n);
    let mut step_w2 = Vec::with_capacity(n);
    for k in 0..n {
        let dw = w.increment(k, k + 1);
        let mut w2 = vec![0.0; e * e];
        for p in 0..e {
            for q in 0..e {
                w2[p * e + q] = 0.5 * dw[p] * dw[q];
            }
        }
        step_w1.push(dw);
        step_w2.push(w2);
    }
    Ok(AnisotropicRP {
        d,
        e,
        gamma,
        times: times.to_vec(),
        step_b: (0..n).map(|k| b_lift.step(k).clone()).collect(),
        step_w1,
        step_w2,
        step_ibw: cross.step_bw.clone(),
        step_iwb: cross.step_wb.clone(),
    })
}

impl AnisotropicRP {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.step_b.len()
    }

    /// Componentwise increment over (i, j) by the component Chen relations.
    pub fn increment(&self, i: usize, j: usize) -> Result<ArpIncrement> {
        if i > j || j > self.n_steps() {
            return Err(Error::IndexOutOfRange(format!("arp increment({i}, {j})")));
        }
        let (d, e) = (self.d, self.e);
        let mut b = Tensor3::identity(d);
        let mut w1 = vec![0.0; e];
        let mut w2 = vec![0.0; e * e];
        let mut ibw = vec![0.0; d * e];
        let mut iwb = vec![0.0; e * d];
        for l in i..j {
            for p in 0..e {
                for q in 0..e {
                    w2[p * e + q] += self.step_w2[l][p * e + q] + w1[p] * self.step_w1[l][q];
                }
            }
            for p in 0..d {
                for q in 0..e {
                    ibw[p * e + q] += self.step_ibw[l][p * e + q] + b.level1[p] * self.step_w1[l][q];
                }
            }
            for q in 0..e {
                for p in 0..d {
                    iwb[q * d + p] += self.step_iwb[l][q * d + p] + w1[q] * self.step_b[l].level1[p];
                }
            }
            for q in 0..e {
                w1[q] += self.step_w1[l][q];
            }
            b = b.mul(&self.step_b[l])?;
        }
        Ok(ArpIncrement { b, w1, w2, ibw, iwb })
    }

    /// Grid Hölder norms of all seven components at exponents
    /// (α, 2α, 3α, γ, 2γ, α+γ, α+γ).
    pub fn holder_norms(&self, alpha: f64, strategy: PairStrategy) -> Result<ArpNorms> {
        let n = self.n_steps();
        let gamma = self.gamma;
        let mut norms = ArpNorms { b1: 0.0, b2: 0.0, b3: 0.0, w1: 0.0, w2: 0.0, ibw: 0.0, iwb: 0.0 };
        let sup = |arr: &[f64]| arr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, j) in pair_set(n, strategy) {
            let inc = self.increment(i, j)?;
            let dt = self.times[j] - self.times[i];
            norms.b1 = norms.b1.max(inc.b.level_norm(1) / dt.powf(alpha));
            norms.b2 = norms.b2.max(inc.b.level_norm(2) / dt.powf(2.0 * alpha));
            norms.b3 = norms.b3.max(inc.b.level_norm(3) / dt.powf(3.0 * alpha));
            norms.w1 = norms.w1.max(sup(&inc.w1) / dt.powf(gamma));
            norms.w2 = norms.w2.max(sup(&inc.w2) / dt.powf(2.0 * gamma));
            norms.ibw = norms.ibw.max(sup(&inc.ibw) / dt.powf(alpha + gamma));
            norms.iwb = norms.iwb.max(sup(&inc.iwb) / dt.powf(alpha + gamma));
        }
        Ok(norms)
    }

    /// The compensated sum of the extension map for one mixed block,
    /// evaluated over the sub-partition of [i, j] with the given stride.
    /// `block` indexes (i, j, k) ∈ {1,2}³; block (1,1,1) is not a
    /// compensated-sum block.
    pub fn compensated_block(&self, i: usize, j: usize, block: (u8, u8, u8), stride: usize) -> Result<Vec<f64>> {
        if block == (1, 1, 1) {
            return Err(Error::InvalidArgument("block (1,1,1) is the lifted B³, not extended".into()));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be positive".into()));
        }
        let (d, e) = (self.d, self.e);
        let dims = |which: u8| if which == 1 { d } else { e };
        let (d1, d2, d3) = (dims(block.0), dims(block.1), dims(block.2));
        let mut acc = vec![0.0; d1 * d2 * d3];
        let mut lo = i;
        // Ξ¹_{i,lo} and Ξ²_{i,lo} accumulated along the partition
        let mut left = self.increment(i, i)?;
        while lo < j {
            let hi = (lo + stride).min(j);
            let step = self.increment(lo, hi)?;
            // π_{block}⟨ Ξ¹_{i,lo} ⊗ Ξ²_{lo,hi} + Ξ²_{i,lo} ⊗ Ξ¹_{lo,hi} ⟩
            let x1_left = |p: usize, which: u8| -> f64 {
                if which == 1 {
                    left.b.level1[p]
                } else {
                    left.w1[p]
                }
            };
            let x1_step = |p: usize, which: u8| -> f64 {
                if which == 1 {
                    step.b.level1[p]
                } else {
                    step.w1[p]
                }
            };
            let x2 = |inc: &ArpIncrement, p: usize, q: usize, wp: u8, wq: u8| -> f64 {
                match (wp, wq) {
                    (1, 1) => inc.b.l2(p, q),
                    (1, 2) => inc.ibw[p * e + q],
                    (2, 1) => inc.iwb[p * d + q],
                    _ => inc.w2[p * e + q],
                }
            };
            for p in 0..d1 {
                for q in 0..d2 {
                    for r in 0..d3 {
                        acc[(p * d2 + q) * d3 + r] += x1_left(p, block.0) * x2(&step, q, r, block.1, block.2)
                            + x2(&left, p, q, block.0, block.1) * x1_step(r, block.2);
                    }
                }
            }
            // extend the left increment across this partition interval
            left = self.increment(i, hi)?;
            lo = hi;
        }
        Ok(acc)
    }
}

/// The extension map at grid resolution: a full level-3 rough path over
/// ℝ^{d+e} whose per-step tensors carry the ARP components in their
/// π-blocks, the lifted B³, the piecewise-linear W³ = Δw⊗Δw⊗Δw/6, and zero
/// mixed third-level blocks (the trivial-partition compensated sums).
/// Requires 2α + γ > 1.
pub fn ext(arp: &AnisotropicRP, alpha: f64, gamma: f64) -> Result<GridRoughPath> {
    if 2.0 * alpha + gamma <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "extension needs 2·alpha + gamma > 1, got {}",
            2.0 * alpha + gamma
        )));
    }
    let (d, e) = (arp.d, arp.e);
    let m = d + e;
    let n = arp.n_steps();
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let b = &arp.step_b[k];
        let w1 = &arp.step_w1[k];
        let mut level1 = vec![0.0; m];
        level1[..d].copy_from_slice(&b.level1);
        level1[d..].copy_from_slice(w1);
        let mut level2 = vec![0.0; m * m];
        for p in 0..d {
            for q in 0..d {
                level2[p * m + q] = b.l2(p, q);
            }
            for q in 0..e {
                level2[p * m + (d + q)] = arp.step_ibw[k][p * e + q];
            }
        }
        for p in 0..e {
            for q in 0..d {
                level2[(d + p) * m + q] = arp.step_iwb[k][p * d + q];
            }
            for q in 0..e {
                level2[(d + p) * m + (d + q)] = arp.step_w2[k][p * e + q];
            }
        }
        let mut level3 = vec![0.0; m * m * m];
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    level3[(p * m + q) * m + r] = b.l3(p, q, r);
                }
            }
        }
        for p in 0..e {
            for q in 0..e {
                for r in 0..e {
                    level3[((d + p) * m + (d + q)) * m + (d + r)] = w1[p] * w1[q] * w1[r] / 6.0;
                }
            }
        }
        steps.push(Tensor3::from_levels(m, level1, level2, level3)?);
    }
    GridRoughPath::from_steps(arp.times.clone(), steps)
}

/// The piecewise-linear joint lift S₃((b, w)): the oracle against which the
/// extension-based construction is compared.
pub fn joint_lift_reference(b: &SamplePath, w: &SamplePath) -> Result<GridRoughPath> {
    if b.times.len() != w.times.len()
        || b.times.iter().zip(&w.times).any(|(x, y)| (x - y).abs() > 0.0)
    {
        return Err(Error::GridMismatch("joint lift needs matching grids".into()));
    }
    let samples: Vec<Vec<f64>> = b
        .values
        .iter()
        .zip(&w.values)
        .map(|(x, y)| {
            let mut v = x.clone();
            v.extend_from_slice(y);
            v
        })
        .collect();
    GridRoughPath::lift_piecewise_linear(&b.times, &samples)
}

/// The truncated dyadic Kolmogorov majorant of two-parameter data.
#[derive(Debug, Clone)]
pub struct DyadicBound {
    /// M = 2 Σ_{n=0}^{L} K_n / (T·2^{−n})^γ, truncated at the grid depth L.
    pub m: f64,
    /// Block suprema K_n, n = 0..=L.
    pub k_levels: Vec<f64>,
    pub exponent: f64,
}

/// Computes the majorant for data on a dyadic grid with 2^L steps over
/// [0, T]. `magnitude(i, j)` must return |Q_{t_i, t_j}|.
pub fn dyadic_holder_bound<F>(n_steps: usize, t_final: f64, exponent: f64, magnitude: F) -> Result<DyadicBound>
where
    F: Fn(usize, usize) -> f64,
{
    if !n_steps.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("grid size {n_steps} is not a power of two")));
    }
    let levels = n_steps.trailing_zeros() as usize;
    let mut k_levels = Vec::with_capacity(levels + 1);
    let mut m = 0.0;
    for level in 0..=levels {
        let blocks = 1usize << level;
        let stride = n_steps / blocks;
        let mut kmax = 0.0f64;
        for i in 0..blocks {
            kmax = kmax.max(magnitude(i * stride, (i + 1) * stride));
        }
        let scale = t_final * 2f64.powi(-(level as i32));
        m += kmax / scale.powf(exponent);
        k_levels.push(kmax);
    }
    Ok(DyadicBound { m: 2.0 * m, k_levels, exponent })
}

impl DyadicBound {
    /// Largest |Q_{i,j}| / (M (t_j − t_i)^γ) over all grid pairs; at most 1
    /// when the majorant bound holds everywhere.
    pub fn verify<F>(&self, n_steps: usize, t_final: f64, magnitude: F) -> f64
    where
        F: Fn(usize, usize) -> f64,
    {
        if self.m == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n_steps {
            for j in (i + 1)..=n_steps {
                let dt = t_final * (j - i) as f64 / n_steps as f64;
                worst = worst.max(magnitude(i, j) / (self.m * dt.powf(self.exponent)));
            }
        }
        worst
    }
}

/// Majorants for a Chen triple (Q, R, I) with
/// I_{s,t} = I_{s,u} + I_{u,t} + Q_{s,u} R_{u,t}: the I-majorant picks up the
/// product term, M_I = M_Q·M_R + 2 Σ K^I_n / (T·2^{−n})^{γ₁+γ₂}.
pub fn dyadic_cross_bound<FQ, FR, FI>(
    n_steps: usize,
    t_final: f64,
    gamma1: f64,
    gamma2: f64,
    q: FQ,
    r: FR,
    i_mag: FI,
) -> Result<(DyadicBound, DyadicBound, DyadicBound)>
where
    FQ: Fn(usize, usize) -> f64,
    FR: Fn(usize, usize) -> f64,
    FI: Fn(usize, usize) -> f64,
{
    let bq = dyadic_holder_bound(n_steps, t_final, gamma1, q)?;
    let br = dyadic_holder_bound(n_steps, t_final, gamma2, r)?;
    let mut bi = dyadic_holder_bound(n_steps, t_final, gamma1 + gamma2, i_mag)?;
    bi.m += bq.m * br.m;
    Ok((bq, br, bi))
}

/// Shares the extension output for controlled-path use.
pub fn ext_shared(arp: &AnisotropicRP, alpha: f64, gamma: f64) -> Result<Arc<GridRoughPath>> {
    Ok(Arc::new(ext(arp, alpha, gamma)?))
}
