//! Dense Euclidean vectors.

use std::fmt;
use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

/// A dense point or direction in `R^n`.
///
/// All norms used by this crate are Euclidean.
#[derive(Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The `i`-th standard basis vector of `R^n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = 1.0;
        v
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_squared(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| s * x).collect())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &[f64]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(other).map(|(a, b)| a + s * b).collect())
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &[f64]) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &[f64]) -> Self {
        self.add_scaled(-1.0, other)
    }

    /// Unit vector in the direction of `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let a = Vector::from([3.0, 4.0]);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.dot(&[1.0, 1.0]), 7.0);
        assert_eq!(a.sub(&[3.0, 0.0]), Vector::from([0.0, 4.0]));
        assert!(a.normalized().unwrap().distance(&[0.6, 0.8]) < 1e-15);
        assert!(Vector::zeros(3).normalized().is_none());
        assert_eq!(a.distance(&[0.0, 0.0]), 5.0);
    }
}
