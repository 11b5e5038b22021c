//! Latent-vector algebra: norms, averages, convex combinations, subset
//! averages, inverse-variance weighting, re-scaling, and non-empty subset
//! enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector in the latent space, optionally carrying the diagonal
/// posterior variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector {
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<Vec<f64>>,
}

impl LatentVector {
    pub fn new(values: Vec<f64>) -> Self {
        LatentVector {
            values,
            variance: None,
        }
    }

    pub fn with_variance(values: Vec<f64>, variance: Vec<f64>) -> Self {
        LatentVector {
            values,
            variance: Some(variance),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn l2_norm(z: &LatentVector) -> f64 {
    z.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nonnegative weights over the input reviews summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexWeights(Vec<f64>);

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl ConvexWeights {
    /// Validates nonnegativity and a weight sum within tolerance of 1.
    /// Out-of-tolerance input is an error, never silently renormalized.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|&&w| w < 0.0) {
            return Err(Error::InvalidWeights(format!("negative weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOLERANCE}"
            )));
        }
        Ok(ConvexWeights(weights))
    }

    /// Divides by the sum first, for callers that explicitly want that.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidWeights(format!(
                "cannot normalize weights with sum {sum}"
            )));
        }
        ConvexWeights::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        ConvexWeights::normalized(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Non-empty subset of review indices, stored as a bitmask (N ≤ 63).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetSelection {
    mask: u64,
}

impl SubsetSelection {
    pub fn from_mask(mask: u64, n: usize) -> Result<Self> {
        if mask == 0 {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        if n >= 64 || mask >> n != 0 {
            return Err(Error::InvalidSubset(format!(
                "mask {mask:#b} out of range for {n} inputs"
            )));
        }
        Ok(SubsetSelection { mask })
    }

    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidSubset(format!("index {i} out of range for {n}")));
            }
            mask |= 1 << i;
        }
        SubsetSelection::from_mask(mask, n)
    }

    pub fn full(n: usize) -> Result<Self> {
        if n == 0 || n >= 64 {
            return Err(Error::InvalidSubset(format!("invalid input count {n}")));
        }
        Ok(SubsetSelection { mask: (1 << n) - 1 })
    }

    pub fn singleton(i: usize) -> Self {
        SubsetSelection { mask: 1 << i }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    pub fn with_index(&self, i: usize) -> SubsetSelection {
        SubsetSelection {
            mask: self.mask | 1 << i,
        }
    }

    /// None when removing `i` would leave the subset empty.
    pub fn without_index(&self, i: usize) -> Option<SubsetSelection> {
        let mask = self.mask & !(1 << i);
        (mask != 0).then_some(SubsetSelection { mask })
    }
}

fn check_uniform_dims(zs: &[LatentVector]) -> Result<usize> {
    let first = zs.first().ok_or(Error::EmptyInput)?;
    let d = first.dim();
    for z in zs {
        if z.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: z.dim(),
                context: None,
            });
        }
    }
    Ok(d)
}

/// Elementwise mean of all vectors.
pub fn simple_average(zs: &[LatentVector]) -> Result<LatentVector> {
    let d = check_uniform_dims(zs)?;
    let inv_n = 1.0 / zs.len() as f64;
    let mut out = vec![0.0; d];
    for z in zs {
        for (o, v) in out.iter_mut().zip(&z.values) {
            *o += inv_n * v;
        }
    }
    Ok(LatentVector::new(out))
}

/// Weighted sum Σ wᵢ zᵢ under validated convex weights.
pub fn convex_combine(zs: &[LatentVector], w: &ConvexWeights) -> Result<LatentVector> {
    let d = check_uniform_dims(zs)?;
    if zs.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: zs.len(),
            right: w.len(),
        });
    }
    let mut out = vec![0.0; d];
    for (z, &wi) in zs.iter().zip(w.as_slice()) {
        for (o, v) in out.iter_mut().zip(&z.values) {
            *o += wi * v;
        }
    }
    Ok(LatentVector::new(out))
}

/// Mean of the selected vectors.
pub fn subset_average(zs: &[LatentVector], s: &SubsetSelection) -> Result<LatentVector> {
    let d = check_uniform_dims(zs)?;
    if s.mask() >> zs.len() != 0 {
        return Err(Error::InvalidSubset(format!(
            "subset references indices beyond {} inputs",
            zs.len()
        )));
    }
    // multiply-then-add with weight 1/k, in index order, so the result is
    // bit-identical to convex_combine with uniform-on-subset weights
    let inv_k = 1.0 / s.len() as f64;
    let mut out = vec![0.0; d];
    for (i, z) in zs.iter().enumerate() {
        if s.contains(i) {
            for (o, v) in out.iter_mut().zip(&z.values) {
                *o += inv_k * v;
            }
        }
    }
    Ok(LatentVector::new(out))
}

pub const DEFAULT_MAX_EXACT_N: usize = 16;

/// All 2^n − 1 non-empty subsets in ascending bitmask order.
pub fn enumerate_subsets(
    n: usize,
    max_exact_n: usize,
) -> Result<impl Iterator<Item = SubsetSelection>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > max_exact_n {
        return Err(Error::TooManyForExact { n, max: max_exact_n });
    }
    Ok((1..1u64 << n).map(|mask| SubsetSelection { mask }))
}

/// z = (Σ σᵢ⁻¹)⁻¹ Σ σᵢ⁻¹ zᵢ with σ the stored per-dimension variance,
/// applied elementwise.
pub fn inverse_variance_weighting(zs: &[LatentVector]) -> Result<LatentVector> {
    let d = check_uniform_dims(zs)?;
    let mut weighted = vec![0.0; d];
    let mut weight_sum = vec![0.0; d];
    for (i, z) in zs.iter().enumerate() {
        let var = z.variance.as_ref().ok_or(Error::BadVariance { index: i })?;
        if var.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: var.len(),
                context: Some(format!("variance of input {i}")),
            });
        }
        if var.iter().any(|&v| v <= 0.0) {
            return Err(Error::BadVariance { index: i });
        }
        for ((wsum, acc), (&v, &s)) in weight_sum
            .iter_mut()
            .zip(weighted.iter_mut())
            .zip(z.values.iter().zip(var))
        {
            let inv = 1.0 / s;
            *wsum += inv;
            *acc += inv * v;
        }
    }
    let out = weighted
        .iter()
        .zip(&weight_sum)
        .map(|(acc, wsum)| acc / wsum)
        .collect();
    Ok(LatentVector::new(out))
}

/// α · z / ‖z‖.
pub fn rescale(z: &LatentVector, alpha: f64) -> Result<LatentVector> {
    assert!(alpha > 0.0, "alpha must be positive");
    let norm = l2_norm(z);
    if norm == 0.0 {
        return Err(Error::ZeroVector("cannot rescale".into()));
    }
    Ok(LatentVector::new(
        z.values.iter().map(|v| alpha * v / norm).collect(),
    ))
}
