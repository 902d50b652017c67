//! Sample-path generation and Itô cross integrals.
//!
//! Fractional Brownian motion is sampled with exact covariance by the
//! Davies–Harte circulant embedding (O(N log N), N a power of two), with a
//! dense Cholesky fallback for small non-power-of-two grids. Brownian motion
//! is sampled directly from its increments. The Itô cross integrals
//!
//! ```text
//! I[B,W]_{s,t} = ∫ₛᵗ B¹_{s,u} ⊗ dᴵw_u,
//! I[W,B]_{s,t} = W¹_{s,t} ⊗ B¹_{s,t} − ∫ₛᵗ (dᴵw_u) ⊗ B¹_{s,u}
//! ```
//!
//! are realised as left-point Riemann sums at the grid's own resolution: the
//! grid is the partition, adjacent-pair values vanish, and multi-step values
//! follow from the cross Chen identities
//! `I[B,W]_{s,t} = I[B,W]_{s,u} + I[B,W]_{u,t} + B¹_{s,u} ⊗ W¹_{u,t}`
//! exactly by telescoping.
//!
//! Seeds are derived by a splitmix64 chain so Monte Carlo sample i of
//! experiment e can use `derive_seed(root, &[e, i])` and stay reproducible
//! regardless of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::Error;
use crate::Result;

/// Largest grid accepted by the dense Cholesky fallback.
const CHOLESKY_LIMIT: usize = 2048;

/// splitmix64 step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-based seed derivation: a fixed function of the root seed and a
/// tag list, so independent streams never share state.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut state = root ^ 0x6a09e667f3bcc908;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0x9e3779b97f4a7c15);
        out = splitmix64(&mut state);
    }
    out
}

/// A ChaCha RNG for the given root seed and stream tags.
pub fn rng_from(root: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(root, tags))
}

/// A grid-sampled path starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub dim: usize,
    pub times: Vec<f64>,
    /// `values[k]` is the path at `times[k]`; `values[0]` is the origin.
    pub values: Vec<Vec<f64>>,
}

impl SamplePath {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Increment values[j] − values[i].
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.values[j]
            .iter()
            .zip(&self.values[i])
            .map(|(b, a)| b - a)
            .collect()
    }

    /// Per-step increment vectors.
    pub fn step_increments(&self) -> Vec<Vec<f64>> {
        (0..self.n_steps()).map(|k| self.increment(k, k + 1)).collect()
    }

    /// Restriction to every `stride`-th grid point (pathwise-consistent
    /// coarsening for refinement studies).
    pub fn subsample(&self, stride: usize) -> SamplePath {
        let n = self.n_steps();
        assert!(stride > 0 && n % stride == 0, "stride must divide the step count");
        let idx: Vec<usize> = (0..=n / stride).map(|k| k * stride).collect();
        SamplePath {
            dim: self.dim,
            times: idx.iter().map(|&k| self.times[k]).collect(),
            values: idx.iter().map(|&k| self.values[k].clone()).collect(),
        }
    }

    /// Piecewise-linear approximation with knots every `stride` grid points,
    /// evaluated back on the full grid.
    pub fn piecewise_linear_coarsening(&self, stride: usize) -> SamplePath {
        let n = self.n_steps();
        let mut values = self.values.clone();
        let mut k = 0;
        while k < n {
            let end = (k + stride).min(n);
            for j in (k + 1)..end {
                let theta = (self.times[j] - self.times[k]) / (self.times[end] - self.times[k]);
                values[j] = self.values[k]
                    .iter()
                    .zip(&self.values[end])
                    .map(|(a, b)| a + theta * (b - a))
                    .collect();
            }
            k = end;
        }
        SamplePath { dim: self.dim, times: self.times.clone(), values }
    }
}

fn uniform_times(n: usize, t_final: f64) -> Vec<f64> {
    (0..=n).map(|k| t_final * k as f64 / n as f64).collect()
}

/// Autocovariance of unit-spacing fractional Gaussian noise,
/// γ(k) = ½(|k−1|^{2H} − 2|k|^{2H} + |k+1|^{2H}).
fn fgn_autocov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let two_h = 2.0 * h;
    0.5 * ((k - 1.0).abs().powf(two_h) - 2.0 * k.powf(two_h) + (k + 1.0).powf(two_h))
}

/// Reusable fractional-Brownian sampler; the circulant eigenvalues are
/// computed once per (H, N) and shared across Monte Carlo draws.
pub struct FbmSampler {
    pub hurst: f64,
    pub n: usize,
    pub t_final: f64,
    /// Eigenvalues of the circulant embedding; `None` when falling back to
    /// Cholesky (non-power-of-two N or an indefinite embedding).
    eigenvalues: Option<Vec<f64>>,
    /// Lower-triangular Cholesky factor of the unit-spacing fGn covariance.
    cholesky: Option<Vec<f64>>,
}

impl FbmSampler {
    pub fn new(hurst: f64, n: usize, t_final: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidArgument(format!("Hurst parameter {hurst} outside (0, 1)")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one step".into()));
        }
        if n.is_power_of_two() {
            let m = 2 * n;
            let mut row: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
            for (j, slot) in row.iter_mut().enumerate() {
                let k = if j <= n { j } else { m - j };
                slot.re = fgn_autocov(hurst, k);
            }
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut row);
            let eigs: Vec<f64> = row.iter().map(|c| c.re).collect();
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min >= -1e-9 * eigs.iter().cloned().fold(0.0, f64::max) {
                return Ok(FbmSampler {
                    hurst,
                    n,
                    t_final,
                    eigenvalues: Some(eigs.iter().map(|e| e.max(0.0)).collect()),
                    cholesky: None,
                });
            }
            // indefinite embedding: fall through to the dense path
        }
        if n > CHOLESKY_LIMIT {
            return Err(Error::EmbeddingFailed(-1.0));
        }
        let chol = fgn_cholesky(hurst, n)?;
        Ok(FbmSampler { hurst, n, t_final, eigenvalues: None, cholesky: Some(chol) })
    }

    /// Whether the fast circulant path is active.
    pub fn uses_fft(&self) -> bool {
        self.eigenvalues.is_some()
    }

    /// One d-dimensional sample; components are independent.
    pub fn sample(&self, d: usize, rng: &mut ChaCha12Rng) -> SamplePath {
        let n = self.n;
        let dt = self.t_final / n as f64;
        let scale = dt.powf(self.hurst);
        let mut values = vec![vec![0.0; d]; n + 1];
        for comp in 0..d {
            let fgn = match &self.eigenvalues {
                Some(eigs) => fgn_davies_harte(eigs, n, rng),
                None => fgn_from_cholesky(self.cholesky.as_ref().unwrap(), n, rng),
            };
            let mut acc = 0.0;
            for k in 0..n {
                acc += fgn[k] * scale;
                values[k + 1][comp] = acc;
            }
        }
        SamplePath { dim: d, times: uniform_times(n, self.t_final), values }
    }
}

fn fgn_davies_harte(eigs: &[f64], n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let m = 2 * n;
    let mut spectrum: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    let g0: f64 = rng.sample(StandardNormal);
    spectrum[0] = Complex::new((eigs[0] / m as f64).sqrt() * g0, 0.0);
    for j in 1..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let r = (eigs[j] / (2.0 * m as f64)).sqrt();
        spectrum[j] = Complex::new(r * a, r * b);
        spectrum[m - j] = spectrum[j].conj();
    }
    let gn: f64 = rng.sample(StandardNormal);
    spectrum[n] = Complex::new((eigs[n] / m as f64).sqrt() * gn, 0.0);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut spectrum);
    spectrum.iter().take(n).map(|c| c.re).collect()
}

/// Dense Cholesky factor of the unit-spacing fGn covariance (row-major
/// lower triangle).
fn fgn_cholesky(h: f64, n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = fgn_autocov(h, i - j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::EmbeddingFailed(sum));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

fn fgn_from_cholesky(l: &[f64], n: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    (0..n)
        .map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum())
        .collect()
}

/// d-dimensional fractional Brownian motion on a uniform grid; exact
/// covariance Cov(b_s, b_t) = ½(s^{2H} + t^{2H} − |t−s|^{2H}) per component,
/// deterministic given the seed.
pub fn sample_fbm(hurst: f64, d: usize, n: usize, t_final: f64, seed: u64) -> Result<SamplePath> {
    let sampler = FbmSampler::new(hurst, n, t_final)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok(sampler.sample(d, &mut rng))
}

/// Standard e-dimensional Brownian motion on a uniform grid.
pub fn sample_bm(e: usize, n: usize, t_final: f64, seed: u64) -> Result<SamplePath> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dt = t_final / n as f64;
    let sd = dt.sqrt();
    let mut values = vec![vec![0.0; e]; n + 1];
    for k in 0..n {
        for c in 0..e {
            let z: f64 = rng.sample(StandardNormal);
            values[k + 1][c] = values[k][c] + sd * z;
        }
    }
    Ok(SamplePath { dim: e, times: uniform_times(n, t_final), values })
}

/// A deterministic path with Hölder exponent exactly `alpha` at every scale:
/// per component, a lacunary cosine sum Σ_k 2^{−αk} cos(2^k ω t + φ).
/// Useful as a fixed, reproducible driver for convergence-rate experiments.
pub fn weierstrass_path(alpha: f64, d: usize, n: usize, t_final: f64, seed: u64) -> SamplePath {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let times = uniform_times(n, t_final);
    let levels = (n as f64).log2().ceil() as usize + 1;
    let phases: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..levels).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect();
    let omega = std::f64::consts::TAU / t_final;
    let eval = |t: f64, c: usize| -> f64 {
        (0..levels)
            .map(|k| {
                let freq = (1u64 << k) as f64;
                2f64.powf(-alpha * k as f64) * (freq * omega * t + phases[c][k]).cos()
            })
            .sum()
    };
    let values: Vec<Vec<f64>> = times
        .iter()
        .map(|t| (0..d).map(|c| eval(*t, c) - eval(0.0, c)).collect())
        .collect();
    SamplePath { dim: d, times, values }
}

/// Grid realisation of the Itô cross integrals of two paths on a shared
/// grid. Per-step values are stored explicitly (zero for the Itô
/// construction); multi-step values follow the cross Chen identities.
#[derive(Debug, Clone)]
pub struct CrossIntegrals {
    pub d: usize,
    pub e: usize,
    pub times: Vec<f64>,
    /// Adjacent-pair values of I[B,W], each d×e row-major.
    pub step_bw: Vec<Vec<f64>>,
    /// Adjacent-pair values of I[W,B], each e×d row-major.
    pub step_wb: Vec<Vec<f64>>,
    db: Vec<Vec<f64>>,
    dw: Vec<Vec<f64>>,
}

impl CrossIntegrals {
    fn build(b: &SamplePath, w: &SamplePath, step_bw: Vec<Vec<f64>>, step_wb: Vec<Vec<f64>>) -> Result<Self> {
        if b.times.len() != w.times.len()
            || b.times.iter().zip(&w.times).any(|(x, y)| (x - y).abs() > 0.0)
        {
            return Err(Error::GridMismatch("cross integrals need matching grids".into()));
        }
        Ok(CrossIntegrals {
            d: b.dim,
            e: w.dim,
            times: b.times.clone(),
            step_bw,
            step_wb,
            db: b.step_increments(),
            dw: w.step_increments(),
        })
    }

    /// Left-point (Itô) cross integrals: adjacent-pair values are zero.
    pub fn ito(b: &SamplePath, w: &SamplePath) -> Result<Self> {
        let n = b.n_steps();
        let step_bw = vec![vec![0.0; b.dim * w.dim]; n];
        let step_wb = vec![vec![0.0; w.dim * b.dim]; n];
        CrossIntegrals::build(b, w, step_bw, step_wb)
    }

    /// Piecewise-linear (Stratonovich) cross areas: adjacent-pair values are
    /// Δb ⊗ Δw / 2 and Δw ⊗ Δb / 2, as in the natural lift of (b, w).
    pub fn stratonovich(b: &SamplePath, w: &SamplePath) -> Result<Self> {
        let n = b.n_steps();
        let (d, e) = (b.dim, w.dim);
        let mut step_bw = Vec::with_capacity(n);
        let mut step_wb = Vec::with_capacity(n);
        for k in 0..n {
            let dbk = b.increment(k, k + 1);
            let dwk = w.increment(k, k + 1);
            let mut bw = vec![0.0; d * e];
            let mut wb = vec![0.0; e * d];
            for p in 0..d {
                for q in 0..e {
                    bw[p * e + q] = 0.5 * dbk[p] * dwk[q];
                    wb[q * d + p] = 0.5 * dwk[q] * dbk[p];
                }
            }
            step_bw.push(bw);
            step_wb.push(wb);
        }
        CrossIntegrals::build(b, w, step_bw, step_wb)
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// I[B,W]_{i,j}: telescoped cross Chen identity, O(j−i).
    pub fn bw(&self, i: usize, j: usize) -> Vec<f64> {
        let (d, e) = (self.d, self.e);
        let mut acc = vec![0.0; d * e];
        let mut boff = vec![0.0; d]; // b_l − b_i
        for l in i..j {
            for p in 0..d {
                for q in 0..e {
                    acc[p * e + q] += self.step_bw[l][p * e + q] + boff[p] * self.dw[l][q];
                }
            }
            for p in 0..d {
                boff[p] += self.db[l][p];
            }
        }
        acc
    }

    /// I[W,B]_{i,j}.
    pub fn wb(&self, i: usize, j: usize) -> Vec<f64> {
        let (d, e) = (self.d, self.e);
        let mut acc = vec![0.0; e * d];
        let mut woff = vec![0.0; e];
        for l in i..j {
            for q in 0..e {
                for p in 0..d {
                    acc[q * d + p] += self.step_wb[l][q * d + p] + woff[q] * self.db[l][p];
                }
            }
            for q in 0..e {
                woff[q] += self.dw[l][q];
            }
        }
        acc
    }

    /// Prefix tables enabling O(1) evaluation of either cross integral at
    /// any grid pair.
    pub fn evaluator(&self) -> CrossEvaluator {
        let (d, e) = (self.d, self.e);
        let n = self.n_steps();
        let mut p_bw = vec![vec![0.0; d * e]; n + 1];
        let mut p_wb = vec![vec![0.0; e * d]; n + 1];
        let mut b = vec![vec![0.0; d]; n + 1];
        let mut w = vec![vec![0.0; e]; n + 1];
        for l in 0..n {
            for p in 0..d {
                b[l + 1][p] = b[l][p] + self.db[l][p];
            }
            for q in 0..e {
                w[l + 1][q] = w[l][q] + self.dw[l][q];
            }
            for p in 0..d {
                for q in 0..e {
                    p_bw[l + 1][p * e + q] =
                        p_bw[l][p * e + q] + self.step_bw[l][p * e + q] + b[l][p] * self.dw[l][q];
                    p_wb[l + 1][q * d + p] =
                        p_wb[l][q * d + p] + self.step_wb[l][q * d + p] + w[l][q] * self.db[l][p];
                }
            }
        }
        CrossEvaluator { d, e, p_bw, p_wb, b, w }
    }
}

/// O(1) pair queries for cross integrals, built by
/// [`CrossIntegrals::evaluator`].
pub struct CrossEvaluator {
    d: usize,
    e: usize,
    p_bw: Vec<Vec<f64>>,
    p_wb: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

impl CrossEvaluator {
    /// I[B,W]_{i,j} = (P_j − P_i) − b_i ⊗ (w_j − w_i).
    pub fn bw(&self, i: usize, j: usize) -> Vec<f64> {
        let (d, e) = (self.d, self.e);
        let mut out = vec![0.0; d * e];
        for p in 0..d {
            for q in 0..e {
                out[p * e + q] = self.p_bw[j][p * e + q] - self.p_bw[i][p * e + q]
                    - self.b[i][p] * (self.w[j][q] - self.w[i][q]);
            }
        }
        out
    }

    pub fn wb(&self, i: usize, j: usize) -> Vec<f64> {
        let (d, e) = (self.d, self.e);
        let mut out = vec![0.0; e * d];
        for q in 0..e {
            for p in 0..d {
                out[q * d + p] = self.p_wb[j][q * d + p] - self.p_wb[i][q * d + p]
                    - self.w[i][q] * (self.b[j][p] - self.b[i][p]);
            }
        }
        out
    }
}

/// Itô cross integrals of `b` against `w` at grid resolution.
pub fn ito_cross_integrals(b: &SamplePath, w: &SamplePath) -> Result<CrossIntegrals> {
    CrossIntegrals::ito(b, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{mean_and_stderr, regression_slope};

    #[test]
    fn half_hurst_covariance_is_brownian() {
        // H = 1/2: γ(0) = 1 and γ(k) = 0 exactly, i.e. increment variance Δt
        assert_eq!(fgn_autocov(0.5, 0), 1.0);
        for k in 1..50 {
            assert!(fgn_autocov(0.5, k).abs() <= 1e-12);
        }
    }

    #[test]
    fn fbm_is_reproducible_and_starts_at_zero() {
        let a = sample_fbm(0.3, 2, 64, 1.0, 42).unwrap();
        let b = sample_fbm(0.3, 2, 64, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.values[0].iter().all(|v| *v == 0.0));
        let c = sample_fbm(0.3, 2, 64, 1.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fbm_terminal_variance() {
        // Var(b_T) = T^{2H} within 4 standard errors over many draws
        let h = 0.3;
        let t_final = 1.0;
        let n = 64;
        let m = 10_000;
        let sampler = FbmSampler::new(h, n, t_final).unwrap();
        assert!(sampler.uses_fft());
        let mut rng = rng_from(7, &[0]);
        let sq: Vec<f64> = (0..m)
            .map(|_| {
                let p = sampler.sample(1, &mut rng);
                let v = p.values[n][0];
                v * v
            })
            .collect();
        let (mean, _) = mean_and_stderr(&sq);
        let want = t_final.powf(2.0 * h);
        let se = want * (2.0 / m as f64).sqrt();
        assert!(
            (mean - want).abs() <= 4.0 * se,
            "terminal variance {mean} vs {want} (se {se})"
        );
    }

    #[test]
    fn fbm_dyadic_block_scaling_matches_hurst() {
        // pooled RMS of dyadic block increments scales like (block length)^H
        let h = 0.3;
        let n = 1 << 12;
        let seeds = 20u64;
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        let paths: Vec<SamplePath> = (0..seeds).map(|s| sample_fbm(h, 1, n, 1.0, 900 + s).unwrap()).collect();
        for level in 4..=10usize {
            let blocks = 1usize << level;
            let stride = n / blocks;
            let mut pool = 0.0f64;
            let mut count = 0usize;
            for p in &paths {
                for i in 0..blocks {
                    let inc = p.values[(i + 1) * stride][0] - p.values[i * stride][0];
                    pool += inc * inc;
                    count += 1;
                }
            }
            lx.push(-(level as f64) * 2f64.ln());
            ly.push(0.5 * (pool / count as f64).ln());
        }
        let slope = regression_slope(&lx, &ly);
        assert!((slope - h).abs() <= 0.06, "block-scaling slope {slope} vs H = {h}");

        // truncated majorant sums Σ 2^{nγ} K_n: stable for γ < H, divergent
        // trend for γ > H as the truncation level grows
        let majorant_ratio = |gamma: f64| -> f64 {
            let mut ratios = Vec::new();
            for p in paths.iter().take(5) {
                let m_at = |l_max: usize| -> f64 {
                    let mut m = 0.0;
                    for level in 0..=l_max {
                        let blocks = 1usize << level;
                        let stride = n / blocks;
                        let mut kmax = 0.0f64;
                        for i in 0..blocks {
                            let inc = (p.values[(i + 1) * stride][0] - p.values[i * stride][0]).abs();
                            kmax = kmax.max(inc);
                        }
                        m += 2f64.powf(level as f64 * gamma) * kmax;
                    }
                    2.0 * m
                };
                ratios.push(m_at(12) / m_at(8));
            }
            mean_and_stderr(&ratios).0
        };
        assert!(majorant_ratio(0.05) <= 1.6);
        assert!(majorant_ratio(0.55) >= 2.0);
    }

    #[test]
    fn cholesky_fallback_matches_covariance() {
        let h = 0.31;
        let n = 24; // not a power of two
        let sampler = FbmSampler::new(h, n, 1.0).unwrap();
        assert!(!sampler.uses_fft());
        // reconstruct LLᵀ and compare against the fGn covariance
        let l = fgn_cholesky(h, n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += l[i * n + k] * l[j * n + k];
                }
                assert!((dot - fgn_autocov(h, i - j)).abs() <= 1e-10);
            }
        }
        let mut rng = rng_from(3, &[1]);
        let p = sampler.sample(1, &mut rng);
        assert_eq!(p.values.len(), n + 1);
    }

    #[test]
    fn bm_statistics() {
        let e = 2;
        let n = 256;
        let t_final = 2.0;
        let m = 400;
        let mut means = Vec::new();
        let mut qvars = Vec::new();
        for seed in 0..m {
            let w = sample_bm(e, n, t_final, derive_seed(11, &[seed])).unwrap();
            let mut qv = 0.0;
            for k in 0..n {
                let dw = w.increment(k, k + 1);
                means.push(dw[0]);
                qv += dw.iter().map(|v| v * v).sum::<f64>();
            }
            qvars.push(qv);
        }
        let dt = t_final / n as f64;
        let (inc_mean, inc_se) = mean_and_stderr(&means);
        assert!(inc_mean.abs() <= 4.0 * inc_se.max(1e-12), "increment mean {inc_mean}");
        let _ = dt;
        let (qv_mean, qv_se) = mean_and_stderr(&qvars);
        let want = e as f64 * t_final;
        assert!((qv_mean - want).abs() <= 4.0 * qv_se, "quadratic variation {qv_mean} vs {want}");
    }

    #[test]
    fn fbm_and_bm_streams_are_uncorrelated() {
        let n = 128;
        let m = 500;
        let mut prods = Vec::new();
        for seed in 0..m {
            let b = sample_fbm(0.3, 1, n, 1.0, derive_seed(5, &[0, seed])).unwrap();
            let w = sample_bm(1, n, 1.0, derive_seed(5, &[1, seed])).unwrap();
            for k in 0..n {
                prods.push(b.increment(k, k + 1)[0] * w.increment(k, k + 1)[0]);
            }
        }
        let (mean, se) = mean_and_stderr(&prods);
        assert!(mean.abs() <= 4.0 * se, "cross-correlation {mean} (se {se})");
    }

    #[test]
    fn cross_integral_definition_unrolled() {
        // deterministic linear b: I[B,W]_{0,T} = Σ (slope·t_{k−1}) Δw_k
        let n = 32;
        let slope = 1.7;
        let times = uniform_times(n, 1.0);
        let b = SamplePath {
            dim: 1,
            times: times.clone(),
            values: times.iter().map(|t| vec![slope * t]).collect(),
        };
        let w = sample_bm(1, n, 1.0, 99).unwrap();
        let cross = ito_cross_integrals(&b, &w).unwrap();
        let mut want = 0.0;
        for k in 0..n {
            want += slope * times[k] * w.increment(k, k + 1)[0];
        }
        let got = cross.bw(0, n)[0];
        assert!((got - want).abs() <= 1e-13);
        // adjacent-pair values vanish for the left-point sum
        for k in 0..n {
            assert!(cross.bw(k, k + 1)[0] == 0.0);
            assert!(cross.wb(k, k + 1)[0] == 0.0);
        }
    }

    #[test]
    fn cross_chen_identities_exact() {
        let n = 64;
        let b = sample_fbm(0.3, 2, n, 1.0, 21).unwrap();
        let w = sample_bm(2, n, 1.0, 22).unwrap();
        let cross = ito_cross_integrals(&b, &w).unwrap();
        let ev = cross.evaluator();
        for &(i, u, j) in &[(0usize, 17usize, 50usize), (3, 4, 5), (10, 32, 64)] {
            let whole = cross.bw(i, j);
            let left = cross.bw(i, u);
            let right = cross.bw(u, j);
            let dbi = b.increment(i, u);
            let dwj = w.increment(u, j);
            for p in 0..2 {
                for q in 0..2 {
                    let composed = left[p * 2 + q] + right[p * 2 + q] + dbi[p] * dwj[q];
                    assert!((whole[p * 2 + q] - composed).abs() <= 1e-12);
                    assert!((ev.bw(i, j)[p * 2 + q] - whole[p * 2 + q]).abs() <= 1e-12);
                }
            }
            let whole = cross.wb(i, j);
            let left = cross.wb(i, u);
            let right = cross.wb(u, j);
            let dwi = w.increment(i, u);
            let dbj = b.increment(u, j);
            for q in 0..2 {
                for p in 0..2 {
                    let composed = left[q * 2 + p] + right[q * 2 + p] + dwi[q] * dbj[p];
                    assert!((whole[q * 2 + p] - composed).abs() <= 1e-12);
                    assert!((ev.wb(i, j)[q * 2 + p] - whole[q * 2 + p]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn integration_by_parts_on_grid() {
        // I[B,W]_{s,t} + I[W,B]_{s,t}ᵀ + Σ ΔB ⊗ ΔW = B¹_{s,t} ⊗ W¹_{s,t}
        let n = 48;
        let b = sample_fbm(0.3, 2, n, 1.0, 31).unwrap();
        let w = sample_bm(1, n, 1.0, 32).unwrap();
        let cross = ito_cross_integrals(&b, &w).unwrap();
        let (i, j) = (5usize, 41usize);
        let bw = cross.bw(i, j);
        let wb = cross.wb(i, j);
        let db = b.increment(i, j);
        let dw = w.increment(i, j);
        for p in 0..2 {
            for q in 0..1 {
                let mut quad = 0.0;
                for l in i..j {
                    quad += b.increment(l, l + 1)[p] * w.increment(l, l + 1)[q];
                }
                let lhs = bw[p * 1 + q] + wb[q * 2 + p] + quad;
                assert!((lhs - db[p] * dw[q]).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn stratonovich_steps_carry_half_areas() {
        let n = 16;
        let b = sample_fbm(0.3, 1, n, 1.0, 77).unwrap();
        let w = sample_bm(1, n, 1.0, 78).unwrap();
        let cross = CrossIntegrals::stratonovich(&b, &w).unwrap();
        for k in 0..n {
            let want = 0.5 * b.increment(k, k + 1)[0] * w.increment(k, k + 1)[0];
            assert!((cross.step_bw[k][0] - want).abs() <= 1e-15);
        }
    }

    #[test]
    fn dyadic_approximation_error_decreases() {
        // ‖I[g, w(m)] − I[g, w]‖_{L²} decreases in the dyadic level m
        let n = 1 << 10;
        let g = weierstrass_path(0.35, 1, n, 1.0, 123);
        let m_samples = 160;
        let mut errs = Vec::new();
        for level in [4usize, 6, 8, 10] {
            let stride = n >> level;
            let mut sq = Vec::new();
            for seed in 0..m_samples {
                let w = sample_bm(1, n, 1.0, derive_seed(1234, &[seed])).unwrap();
                let wm = w.piecewise_linear_coarsening(stride);
                let exact = ito_cross_integrals(&g, &w).unwrap();
                let approx = ito_cross_integrals(&g, &wm).unwrap();
                let diff = exact.bw(0, n)[0] - approx.bw(0, n)[0];
                sq.push(diff * diff);
            }
            let (mean, _) = mean_and_stderr(&sq);
            errs.push(mean.sqrt());
        }
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "dyadic approximation error not decreasing: {errs:?}");
        }
    }

    #[test]
    fn weierstrass_path_is_deterministic_and_rough() {
        let a = weierstrass_path(0.3, 2, 256, 1.0, 5);
        let b = weierstrass_path(0.3, 2, 256, 1.0, 5);
        assert_eq!(a, b);
        assert!(a.values[0].iter().all(|v| *v == 0.0));
        // block scaling consistent with exponent 0.3 within a loose band
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for level in 2..=7usize {
            let blocks = 1usize << level;
            let stride = 256 / blocks;
            let mut kmax = 0.0f64;
            for i in 0..blocks {
                let inc = (a.values[(i + 1) * stride][0] - a.values[i * stride][0]).abs();
                kmax = kmax.max(inc);
            }
            lx.push(-(level as f64) * 2f64.ln());
            ly.push(kmax.ln());
        }
        let slope = regression_slope(&lx, &ly);
        assert!((slope - 0.3).abs() <= 0.15, "weierstrass scaling slope {slope}");
    }

    #[test]
    fn seed_derivation_separates_streams() {
        assert_ne!(derive_seed(1, &[0, 0]), derive_seed(1, &[0, 1]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(9, &[4, 2]), derive_seed(9, &[4, 2]));
    }
}
