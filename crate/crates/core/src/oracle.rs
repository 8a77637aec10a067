//! Exact reference mathematics: ideal Softmax, the collapsed one-dimensional
//! sigmoid, the Softmax Jacobian and the square-law activation.
//!
//! Every analysis in the crate scores circuit behaviour against these.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output of a normalising activation: non-negative shares that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<T>(Vec<T>);

impl<T: Scalar> ProbabilityVector<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest element and its index; ties go to the lowest index.
    pub fn max(&self) -> (usize, T) {
        let mut best = (0, self.0[0]);
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > best.1 {
                best = (i, p);
            }
        }
        best
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }
}

impl<T> Index<usize> for ProbabilityVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> AsRef<[T]> for ProbabilityVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Rejects empty or non-finite input vectors.
pub(crate) fn check_real_vector<T: Scalar>(z: &[T]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::domain("input vector is empty"));
    }
    if let Some(i) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("input element {i} is not finite")));
    }
    Ok(())
}

fn check_scale<T: Scalar>(scale: T) -> Result<()> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::domain(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(())
}

/// `exp(z_j / scale) / sum_k exp(z_k / scale)`, evaluated after subtracting
/// `max(z)` so large scores cannot overflow.
pub fn softmax<T: Scalar>(z: &[T], scale: T) -> Result<ProbabilityVector<T>> {
    check_real_vector(z)?;
    check_scale(scale)?;
    let peak = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut out: Vec<T> = z.iter().map(|&v| ((v - peak) / scale).exp()).collect();
    let total = out.iter().copied().fold(T::zero(), |a, b| a + b);
    for v in &mut out {
        *v = *v / total;
    }
    Ok(ProbabilityVector(out))
}

/// `scale * ln(sum_k exp(z_k / scale))`, stable for large arguments.
pub fn log_sum_exp<T: Scalar>(z: &[T], scale: T) -> Result<T> {
    check_real_vector(z)?;
    check_scale(scale)?;
    let peak = z.iter().copied().fold(T::neg_infinity(), T::max);
    let total = z
        .iter()
        .map(|&v| ((v - peak) / scale).exp())
        .fold(T::zero(), |a, b| a + b);
    Ok(peak + scale * total.ln())
}

/// Softmax collapsed to one dimension: the share of the swept input `x`
/// when the other `n_branches - 1` inputs all sit at `x_others`.
pub fn sigmoid_reference<T: Scalar>(x: T, x_others: T, scale: T, n_branches: usize) -> Result<T> {
    if n_branches < 2 {
        return Err(Error::domain(format!(
            "sigmoid reference needs at least 2 branches, got {n_branches}"
        )));
    }
    let mut z = vec![x_others; n_branches];
    z[0] = x;
    Ok(softmax(&z, scale)?[0])
}

/// Jacobian of [`softmax`]: `J[i][j] = sigma_i (delta_ij - sigma_j) / scale`.
pub fn softmax_gradient<T: Scalar>(z: &[T], scale: T) -> Result<Vec<Vec<T>>> {
    let s = softmax(z, scale)?;
    let n = s.len();
    let jac = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let delta = if i == j { T::one() } else { T::zero() };
                    s[i] * (delta - s[j]) / scale
                })
                .collect()
        })
        .collect();
    Ok(jac)
}

/// Normalised square-law activation `(x_i - g)^2 / sum_k (x_k - g)^2`,
/// the function a saturated MOS differential network computes.
///
/// `g` is the common gate offset (shared source voltage plus threshold).
/// Every branch needs positive overdrive `x_k > g`.
pub fn square_law_activation<T: Scalar>(x: &[T], g: T) -> Result<ProbabilityVector<T>> {
    check_real_vector(x)?;
    if !g.is_finite() {
        return Err(Error::domain("gate offset is not finite"));
    }
    for (index, &v) in x.iter().enumerate() {
        if !(v > g) {
            return Err(Error::NotSaturated {
                index,
                overdrive: (v - g).as_f64(),
            });
        }
    }
    let sq: Vec<T> = x.iter().map(|&v| (v - g) * (v - g)).collect();
    let total = sq.iter().copied().fold(T::zero(), |a, b| a + b);
    Ok(ProbabilityVector(sq.into_iter().map(|v| v / total).collect()))
}
