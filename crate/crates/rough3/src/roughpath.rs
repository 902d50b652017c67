//! Level-3 rough paths on time grids.
//!
//! Canonical storage is one group element per grid step, so Chen's relation
//! holds exactly by construction: the increment over [t_i, t_j] is the
//! left-to-right product of the step elements. Two-parameter arrays exist
//! only as an import/export format for foreign data ([`TwoParamTensorData`]).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::Error;
use crate::norms::{pair_set, PairStrategy};
use crate::tensor::Tensor3;
use crate::Result;

/// A level-3 rough path sampled on a strictly increasing time grid.
///
/// `steps[k]` is the group element X_{t_k, t_{k+1}}.
#[derive(Debug, Clone)]
pub struct GridRoughPath {
    dim: usize,
    times: Vec<f64>,
    steps: Vec<Tensor3>,
}

/// The four Hölder norms of a grid rough path: (‖X¹‖_α, ‖X²‖_{2α}, ‖X³‖_{3α})
/// and the homogeneous norm Σ ‖Xⁱ‖_{iα}^{1/i}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderNorms {
    pub level1: f64,
    pub level2: f64,
    pub level3: f64,
    pub homogeneous: f64,
}

impl GridRoughPath {
    /// Builds a rough path from per-step group elements.
    pub fn from_steps(times: Vec<f64>, steps: Vec<Tensor3>) -> Result<Self> {
        if times.len() != steps.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} times vs {} steps",
                times.len(),
                steps.len()
            )));
        }
        check_times(&times)?;
        let dim = steps.first().map(|s| s.dim()).unwrap_or(0);
        if steps.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch("step dims differ".into()));
        }
        Ok(GridRoughPath { dim, times, steps })
    }

    /// Natural lift of the piecewise-linear interpolant of `samples`:
    /// every step is the segment exponential of its increment, so the result
    /// is geometric (shuffle relations hold exactly).
    pub fn lift_piecewise_linear(times: &[f64], samples: &[Vec<f64>]) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} times vs {} samples",
                times.len(),
                samples.len()
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("need >= 2 samples".into()));
        }
        check_times(times)?;
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch("sample dims differ".into()));
        }
        let steps = samples
            .windows(2)
            .map(|w| {
                let delta: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
                Tensor3::segment_exp(&delta)
            })
            .collect();
        Ok(GridRoughPath { dim, times: times.to_vec(), steps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, k: usize) -> &Tensor3 {
        &self.steps[k]
    }

    /// X_{t_i, t_j} by left-to-right composition of the step elements.
    pub fn increment(&self, i: usize, j: usize) -> Result<Tensor3> {
        if i > j || j > self.steps.len() {
            return Err(Error::IndexOutOfRange(format!(
                "increment({i}, {j}) on a grid with {} steps",
                self.steps.len()
            )));
        }
        let mut acc = Tensor3::identity(self.dim);
        for k in i..j {
            acc = acc.mul(&self.steps[k])?;
        }
        Ok(acc)
    }

    /// Coarsened path keeping every `stride`-th grid point; steps compose
    /// by Chen's relation, so increments between surviving points are
    /// unchanged.
    pub fn coarsen(&self, stride: usize) -> Result<GridRoughPath> {
        if stride == 0 || self.steps.len() % stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "stride {stride} must divide the step count {}",
                self.steps.len()
            )));
        }
        let mut times = Vec::with_capacity(self.steps.len() / stride + 1);
        let mut steps = Vec::with_capacity(self.steps.len() / stride);
        times.push(self.times[0]);
        for chunk in 0..self.steps.len() / stride {
            steps.push(self.increment(chunk * stride, (chunk + 1) * stride)?);
            times.push(self.times[(chunk + 1) * stride]);
        }
        GridRoughPath::from_steps(times, steps)
    }

    /// Dilation applied to every step.
    pub fn dilate(&self, lambda: f64) -> GridRoughPath {
        GridRoughPath {
            dim: self.dim,
            times: self.times.clone(),
            steps: self.steps.iter().map(|s| s.dilate(lambda)).collect(),
        }
    }

    /// First-level path reconstructed from the step elements (starting at 0).
    pub fn first_level_path(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut acc = vec![0.0; self.dim];
        out.push(acc.clone());
        for s in &self.steps {
            for (a, v) in acc.iter_mut().zip(&s.level1) {
                *a += v;
            }
            out.push(acc.clone());
        }
        out
    }

    /// Grid Hölder norms at exponent α. Pairs per `strategy`; increments are
    /// produced by a left-to-right scan per row (all pairs) or from prefix
    /// products and the antipode (dyadic strategy).
    pub fn holder_norms(&self, alpha: f64, strategy: PairStrategy) -> Result<HolderNorms> {
        if self.steps.is_empty() {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        let n = self.steps.len();
        let mut sup1 = 0.0f64;
        let mut sup2 = 0.0f64;
        let mut sup3 = 0.0f64;
        let mut record = |inc: &Tensor3, dt: f64| {
            sup1 = sup1.max(inc.level_norm(1) / dt.powf(alpha));
            sup2 = sup2.max(inc.level_norm(2) / dt.powf(2.0 * alpha));
            sup3 = sup3.max(inc.level_norm(3) / dt.powf(3.0 * alpha));
        };
        match strategy.resolve(n) {
            PairStrategy::AllPairs => {
                for i in 0..n {
                    let mut acc = Tensor3::identity(self.dim);
                    for j in (i + 1)..=n {
                        acc = acc.mul(&self.steps[j - 1])?;
                        record(&acc, self.times[j] - self.times[i]);
                    }
                }
            }
            PairStrategy::Dyadic => {
                let prefix = self.prefix_products()?;
                for (i, j) in pair_set(n, PairStrategy::Dyadic) {
                    let inc = prefix[i].antipode().mul(&prefix[j])?;
                    record(&inc, self.times[j] - self.times[i]);
                }
            }
            PairStrategy::Auto => unreachable!(),
        }
        Ok(HolderNorms {
            level1: sup1,
            level2: sup2,
            level3: sup3,
            homogeneous: sup1 + sup2.sqrt() + sup3.cbrt(),
        })
    }

    /// X_{0, t_k} for every k.
    pub fn prefix_products(&self) -> Result<Vec<Tensor3>> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut acc = Tensor3::identity(self.dim);
        out.push(acc.clone());
        for s in &self.steps {
            acc = acc.mul(s)?;
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// Max residual of the shuffle relations over the sampled pair set.
    pub fn shuffle_residual(&self, strategy: PairStrategy) -> Result<f64> {
        let n = self.steps.len();
        let mut res = 0.0f64;
        match strategy.resolve(n) {
            PairStrategy::AllPairs => {
                for i in 0..n {
                    let mut acc = Tensor3::identity(self.dim);
                    for j in (i + 1)..=n {
                        acc = acc.mul(&self.steps[j - 1])?;
                        res = res.max(acc.shuffle_residual());
                    }
                }
            }
            PairStrategy::Dyadic => {
                let prefix = self.prefix_products()?;
                for (i, j) in pair_set(n, PairStrategy::Dyadic) {
                    let inc = prefix[i].antipode().mul(&prefix[j])?;
                    res = res.max(inc.shuffle_residual());
                }
            }
            PairStrategy::Auto => unreachable!(),
        }
        Ok(res)
    }

    /// Max Chen residual |X_{i,k} − X_{i,j} ⊗ X_{j,k}| over sampled triples.
    /// Zero up to roundoff by construction; useful as a wiring check.
    pub fn chen_residual(&self, max_triples: usize) -> Result<f64> {
        let data = self.to_two_param(PairStrategy::Auto)?;
        data.chen_residual(max_triples)
    }

    /// Exports increments at the sampled pair set as two-parameter data.
    pub fn to_two_param(&self, strategy: PairStrategy) -> Result<TwoParamTensorData> {
        let n = self.steps.len();
        let mut values = BTreeMap::new();
        match strategy.resolve(n) {
            PairStrategy::AllPairs => {
                for i in 0..n {
                    let mut acc = Tensor3::identity(self.dim);
                    for j in (i + 1)..=n {
                        acc = acc.mul(&self.steps[j - 1])?;
                        values.insert((i, j), acc.clone());
                    }
                }
            }
            PairStrategy::Dyadic => {
                let prefix = self.prefix_products()?;
                for (i, j) in pair_set(n, PairStrategy::Dyadic) {
                    let inc = prefix[i].antipode().mul(&prefix[j])?;
                    values.insert((i, j), inc);
                }
            }
            PairStrategy::Auto => unreachable!(),
        }
        Ok(TwoParamTensorData { dim: self.dim, times: self.times.clone(), values })
    }

    /// Shares the path behind an `Arc` for controlled-path construction.
    pub fn into_shared(self) -> Arc<GridRoughPath> {
        Arc::new(self)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for (k, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneTimes(k + 1));
        }
    }
    Ok(())
}

/// Two-parameter tensor data on a grid, e.g. loaded from a foreign source;
/// values need not satisfy Chen's relation.
#[derive(Debug, Clone)]
pub struct TwoParamTensorData {
    pub dim: usize,
    pub times: Vec<f64>,
    pub values: BTreeMap<(usize, usize), Tensor3>,
}

impl TwoParamTensorData {
    pub fn value(&self, i: usize, j: usize) -> Result<&Tensor3> {
        self.values.get(&(i, j)).ok_or(Error::MissingPair(i, j))
    }

    /// Max shuffle-relation residual over all stored pairs.
    pub fn shuffle_residual(&self) -> f64 {
        self.values.values().fold(0.0f64, |m, t| m.max(t.shuffle_residual()))
    }

    /// Max over available triples i < u < j of the Chen defect
    /// |X_{i,j} − X_{i,u} ⊗ X_{u,j}| (max over tensor entries). Triples are
    /// scanned in order and capped at `max_triples` (0 = unlimited).
    pub fn chen_residual(&self, max_triples: usize) -> Result<f64> {
        let mut res = 0.0f64;
        let mut tested = 0usize;
        let keys: Vec<(usize, usize)> = self.values.keys().copied().collect();
        'outer: for &(i, j) in &keys {
            for u in (i + 1)..j {
                let (left, right) = match (self.values.get(&(i, u)), self.values.get(&(u, j))) {
                    (Some(l), Some(r)) => (l, r),
                    _ => continue,
                };
                let composed = left.mul(right)?;
                res = res.max(self.values[&(i, j)].max_abs_diff(&composed));
                tested += 1;
                if max_triples > 0 && tested >= max_triples {
                    break 'outer;
                }
            }
        }
        Ok(res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    pub(crate) fn random_lift(seed: u64, dim: usize, n: usize) -> GridRoughPath {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let mut samples = vec![vec![0.0; dim]];
        for _ in 0..n {
            let prev = samples.last().unwrap().clone();
            let next: Vec<f64> = prev
                .iter()
                .map(|v| v + rng.gen_range(-1.0..1.0) / (n as f64).sqrt())
                .collect();
            samples.push(next);
        }
        GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap()
    }

    #[test]
    fn constant_path_lifts_to_identities() {
        let times = vec![0.0, 0.5, 1.0];
        let samples = vec![vec![1.0, 2.0]; 3];
        let rp = GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap();
        for k in 0..rp.n_steps() {
            assert!(rp.step(k).max_abs_diff(&Tensor3::identity(2)) == 0.0);
        }
    }

    #[test]
    fn one_dim_two_unit_steps() {
        let times = vec![0.0, 0.5, 1.0];
        let samples = vec![vec![0.0], vec![1.0], vec![2.0]];
        let rp = GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap();
        let inc = rp.increment(0, 2).unwrap();
        let expect = Tensor3::segment_exp(&[2.0]);
        assert!(inc.max_abs_diff(&expect) <= 1e-14);
    }

    #[test]
    fn hook_path_levy_area() {
        // (0,0) -> (1,0) -> (1,1): antisymmetric part of X² is ±1/2
        let times = vec![0.0, 0.5, 1.0];
        let samples = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let rp = GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap();
        let inc = rp.increment(0, 2).unwrap();
        let area = 0.5 * (inc.l2(0, 1) - inc.l2(1, 0));
        assert!((area - 0.5).abs() <= 1e-14);
        assert_eq!(inc.l2(0, 1), 1.0);
        assert_eq!(inc.l2(1, 0), 0.0);
    }

    #[test]
    fn increment_edge_cases() {
        let rp = random_lift(7, 2, 16);
        assert!(rp.increment(3, 3).unwrap().max_abs_diff(&Tensor3::identity(2)) == 0.0);
        assert!(rp.increment(4, 5).unwrap().max_abs_diff(rp.step(4)) == 0.0);
        assert!(rp.increment(3, 17).is_err());
    }

    #[test]
    fn chen_holds_on_random_triples() {
        let rp = random_lift(11, 3, 64);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..50 {
            let i = rng.gen_range(0..60);
            let j = rng.gen_range(i + 1..63);
            let k = rng.gen_range(j + 1..=64);
            let whole = rp.increment(i, k).unwrap();
            let composed = rp.increment(i, j).unwrap().mul(&rp.increment(j, k).unwrap()).unwrap();
            let scale = 1.0 + whole.max_abs();
            assert!(whole.max_abs_diff(&composed) <= 1e-12 * scale);
        }
    }

    #[test]
    fn shuffle_residual_on_lift_and_corrupted_path() {
        let rp = random_lift(3, 2, 32);
        assert!(rp.shuffle_residual(PairStrategy::AllPairs).unwrap() <= 1e-10);

        // hand-corrupt the exported data: zero out X² and X³ while X¹ != 0;
        // the first shuffle identity then fails by exactly max |X¹ᵖ X¹ᑫ|
        let mut data = rp.to_two_param(PairStrategy::AllPairs).unwrap();
        let mut expect = 0.0f64;
        for t in data.values.values_mut() {
            t.level2.iter_mut().for_each(|v| *v = 0.0);
            t.level3.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    expect = expect.max((t.level1[p] * t.level1[q]).abs());
                }
            }
        }
        let res = data.shuffle_residual();
        assert!(res > 0.0);
        assert!((res - expect).abs() <= 1e-12 * (1.0 + expect));
    }

    #[test]
    fn identity_path_residuals_and_norms() {
        let times = vec![0.0, 1.0, 2.0];
        let steps = vec![Tensor3::identity(1), Tensor3::identity(1)];
        let rp = GridRoughPath::from_steps(times, steps).unwrap();
        assert_eq!(rp.shuffle_residual(PairStrategy::AllPairs).unwrap(), 0.0);
        let norms = rp.holder_norms(1.0 / 3.0, PairStrategy::AllPairs).unwrap();
        assert_eq!(norms.homogeneous, 0.0);
    }

    #[test]
    fn linear_path_holder_norm() {
        let n = 64;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let samples: Vec<Vec<f64>> = times.iter().map(|t| vec![*t]).collect();
        let rp = GridRoughPath::lift_piecewise_linear(&times, &samples).unwrap();
        let norms = rp.holder_norms(1.0 / 3.0, PairStrategy::AllPairs).unwrap();
        assert!((norms.level1 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dilation_homogeneity_of_norms() {
        let rp = random_lift(13, 2, 32);
        let alpha = 0.3;
        let base = rp.holder_norms(alpha, PairStrategy::AllPairs).unwrap();
        let scaled = rp.dilate(2.0).holder_norms(alpha, PairStrategy::AllPairs).unwrap();
        assert!((scaled.level1 - 2.0 * base.level1).abs() <= 1e-12 * (1.0 + base.level1));
        assert!((scaled.level2 - 4.0 * base.level2).abs() <= 1e-12 * (1.0 + base.level2));
        assert!((scaled.level3 - 8.0 * base.level3).abs() <= 1e-12 * (1.0 + base.level3));
        assert!((scaled.homogeneous - 2.0 * base.homogeneous).abs() <= 1e-12 * (1.0 + base.homogeneous));
    }

    #[test]
    fn dyadic_norm_below_all_pairs() {
        let rp = random_lift(17, 2, 128);
        let alpha = 0.3;
        let all = rp.holder_norms(alpha, PairStrategy::AllPairs).unwrap();
        let dy = rp.holder_norms(alpha, PairStrategy::Dyadic).unwrap();
        assert!(dy.level1 <= all.level1 + 1e-12);
        assert!(dy.level2 <= all.level2 + 1e-12);
        assert!(dy.level3 <= all.level3 + 1e-12);
    }

    #[test]
    fn two_param_export_and_chen_residual() {
        // all triples of a 64-point grid at unit magnitude
        let rp = random_lift(19, 2, 64);
        let data = rp.to_two_param(PairStrategy::AllPairs).unwrap();
        assert!(data.chen_residual(0).unwrap() <= 1e-11);

        // single-interval data: no interior point, residual 0
        let single = TwoParamTensorData {
            dim: 2,
            times: vec![0.0, 1.0],
            values: [((0, 1), Tensor3::segment_exp(&[1.0, -1.0]))].into_iter().collect(),
        };
        assert_eq!(single.chen_residual(0).unwrap(), 0.0);

        // randomized X² breaks Chen
        let mut corrupted = rp.to_two_param(PairStrategy::AllPairs).unwrap();
        if let Some(t) = corrupted.values.get_mut(&(0, 2)) {
            t.level2[0] += 0.5;
        }
        assert!(corrupted.chen_residual(0).unwrap() > 0.1);
    }

    #[test]
    fn missing_pair_is_reported() {
        let single = TwoParamTensorData {
            dim: 1,
            times: vec![0.0, 1.0],
            values: BTreeMap::new(),
        };
        assert!(matches!(single.value(0, 1), Err(Error::MissingPair(0, 1))));
    }

    #[test]
    fn lift_rejects_bad_input() {
        assert!(GridRoughPath::lift_piecewise_linear(&[0.0], &[vec![0.0]]).is_err());
        assert!(GridRoughPath::lift_piecewise_linear(&[0.0, 0.0], &[vec![0.0], vec![1.0]]).is_err());
        assert!(GridRoughPath::lift_piecewise_linear(&[0.0, 1.0], &[vec![0.0]]).is_err());
    }

    #[test]
    fn all_pairs_limit_is_respected() {
        use crate::norms::ALL_PAIRS_LIMIT;
        assert_eq!(PairStrategy::Auto.resolve(ALL_PAIRS_LIMIT), PairStrategy::AllPairs);
        assert_eq!(PairStrategy::Auto.resolve(ALL_PAIRS_LIMIT + 1), PairStrategy::Dyadic);
    }
}
