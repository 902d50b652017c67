//! Arithmetic in the truncated tensor algebra T³(ℝᵈ).
//!
//! A group-like element is stored as `(1, x¹, x², x³)` with dense row-major
//! arrays: `x²[p*d + q] = x^{2,pq}` and `x³[(p*d + q)*d + r] = x^{3,pqr}`.
//! The product is Chen's relation,
//!
//! ```text
//! c¹ = a¹ + b¹
//! c² = a² + b² + a¹ ⊗ b¹
//! c³ = a³ + b³ + a¹ ⊗ b² + a² ⊗ b¹
//! ```
//!
//! so that increments of a rough path multiply as X_{s,t} = X_{s,u} ⊗ X_{u,t}.
//! Dilation scales level k by λᵏ, and `segment_exp` is the exact signature of
//! a linear segment: (1, Δ, Δ⊗Δ/2, Δ⊗Δ⊗Δ/6).
//!
//! Dimensions stay small (d ≤ 16 in practice), so dense d³ storage is cheap
//! and cache friendly. All values are `f64`; operations are pure and safe to
//! call concurrently.

use crate::error::Error;
use crate::Result;

/// A group-like element (1, x¹, x², x³) of T³(ℝᵈ).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    /// Scalar level; 1 for group elements produced by lifts and products.
    pub level0: f64,
    pub level1: Vec<f64>,
    pub level2: Vec<f64>,
    pub level3: Vec<f64>,
}

impl Tensor3 {
    /// The identity element (1, 0, 0, 0).
    pub fn identity(dim: usize) -> Self {
        Tensor3 {
            dim,
            level0: 1.0,
            level1: vec![0.0; dim],
            level2: vec![0.0; dim * dim],
            level3: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds an element from raw levels. Lengths must be d, d², d³.
    pub fn from_levels(dim: usize, level1: Vec<f64>, level2: Vec<f64>, level3: Vec<f64>) -> Result<Self> {
        if level1.len() != dim || level2.len() != dim * dim || level3.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "levels ({}, {}, {}) do not match dim {}",
                level1.len(),
                level2.len(),
                level3.len(),
                dim
            )));
        }
        Ok(Tensor3 { dim, level0: 1.0, level1, level2, level3 })
    }

    /// Exact signature of the linear segment with increment `delta`:
    /// (1, Δ, Δ⊗Δ/2, Δ⊗Δ⊗Δ/6). Satisfies the shuffle relations exactly.
    pub fn segment_exp(delta: &[f64]) -> Self {
        let d = delta.len();
        let mut out = Tensor3::identity(d);
        out.level1.copy_from_slice(delta);
        for p in 0..d {
            for q in 0..d {
                out.level2[p * d + q] = delta[p] * delta[q] / 2.0;
            }
        }
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    out.level3[(p * d + q) * d + r] = delta[p] * delta[q] * delta[r] / 6.0;
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn l2(&self, p: usize, q: usize) -> f64 {
        self.level2[p * self.dim + q]
    }

    #[inline]
    pub fn l3(&self, p: usize, q: usize, r: usize) -> f64 {
        self.level3[(p * self.dim + q) * self.dim + r]
    }

    /// Chen product of two group elements.
    pub fn mul(&self, rhs: &Tensor3) -> Result<Tensor3> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor dims {} and {}",
                self.dim, rhs.dim
            )));
        }
        let d = self.dim;
        let mut out = Tensor3::identity(d);
        for p in 0..d {
            out.level1[p] = self.level1[p] + rhs.level1[p];
        }
        for p in 0..d {
            for q in 0..d {
                out.level2[p * d + q] =
                    self.level2[p * d + q] + rhs.level2[p * d + q] + self.level1[p] * rhs.level1[q];
            }
        }
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    out.level3[(p * d + q) * d + r] = self.level3[(p * d + q) * d + r]
                        + rhs.level3[(p * d + q) * d + r]
                        + self.level1[p] * rhs.level2[q * d + r]
                        + self.level2[p * d + q] * rhs.level1[r];
                }
            }
        }
        Ok(out)
    }

    /// Dilation: level k scaled by λᵏ.
    pub fn dilate(&self, lambda: f64) -> Tensor3 {
        let mut out = self.clone();
        let l2 = lambda * lambda;
        let l3 = l2 * lambda;
        out.level1.iter_mut().for_each(|v| *v *= lambda);
        out.level2.iter_mut().for_each(|v| *v *= l2);
        out.level3.iter_mut().for_each(|v| *v *= l3);
        out
    }

    /// Group inverse (antipode):
    /// (1, −x¹, −x² + x¹⊗x¹, −x³ + x¹⊗x² + x²⊗x¹ − x¹⊗x¹⊗x¹).
    ///
    /// Two-sided inverse for any group-like element; used to recover
    /// X_{s,t} from two absolute values X_{0,s} and X_{0,t}.
    pub fn antipode(&self) -> Tensor3 {
        let d = self.dim;
        let mut out = Tensor3::identity(d);
        for p in 0..d {
            out.level1[p] = -self.level1[p];
        }
        for p in 0..d {
            for q in 0..d {
                out.level2[p * d + q] = -self.level2[p * d + q] + self.level1[p] * self.level1[q];
            }
        }
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    out.level3[(p * d + q) * d + r] = -self.level3[(p * d + q) * d + r]
                        + self.level1[p] * self.level2[q * d + r]
                        + self.level2[p * d + q] * self.level1[r]
                        - self.level1[p] * self.level1[q] * self.level1[r];
                }
            }
        }
        out
    }

    /// Entry-wise a + λ·b over all three levels (level0 untouched).
    pub fn axpy(&self, lambda: f64, rhs: &Tensor3) -> Result<Tensor3> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch("axpy dims".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.level1.iter_mut().zip(&rhs.level1) {
            *a += lambda * b;
        }
        for (a, b) in out.level2.iter_mut().zip(&rhs.level2) {
            *a += lambda * b;
        }
        for (a, b) in out.level3.iter_mut().zip(&rhs.level3) {
            *a += lambda * b;
        }
        Ok(out)
    }

    /// Largest absolute entry across all three levels.
    pub fn max_abs(&self) -> f64 {
        let m1 = self.level1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m2 = self.level2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m3 = self.level3.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        m1.max(m2).max(m3)
    }

    /// Largest absolute entry of `self − rhs` over all levels.
    pub fn max_abs_diff(&self, rhs: &Tensor3) -> f64 {
        let d1 = self
            .level1
            .iter()
            .zip(&rhs.level1)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let d2 = self
            .level2
            .iter()
            .zip(&rhs.level2)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let d3 = self
            .level3
            .iter()
            .zip(&rhs.level3)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        d1.max(d2).max(d3)
    }

    /// Euclidean norm of the level-k part, k = 1, 2, 3.
    pub fn level_norm(&self, level: usize) -> f64 {
        let slice = match level {
            1 => &self.level1,
            2 => &self.level2,
            3 => &self.level3,
            _ => return 0.0,
        };
        slice.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Max residual of the two shuffle identities for this single element:
    /// x¹ᵖx¹ᑫ = x²ᵖᑫ + x²ᑫᵖ and x¹ᵖx²ᑫʳ = x³ᵖᑫʳ + x³ᑫᵖʳ + x³ᑫʳᵖ.
    pub fn shuffle_residual(&self) -> f64 {
        let d = self.dim;
        let mut res = 0.0f64;
        for p in 0..d {
            for q in 0..d {
                let lhs = self.level1[p] * self.level1[q];
                let rhs = self.l2(p, q) + self.l2(q, p);
                res = res.max((lhs - rhs).abs());
            }
        }
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    let lhs = self.level1[p] * self.l2(q, r);
                    let rhs = self.l3(p, q, r) + self.l3(q, p, r) + self.l3(q, r, p);
                    res = res.max((lhs - rhs).abs());
                }
            }
        }
        res
    }
}
