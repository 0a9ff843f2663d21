//! Building blocks for the built-in corpus.
//!
//! Kink conventions: `sign(0) = +1`, the gradient of `|x|` at the origin is
//! `e1`, and max-type functions select the lowest attaining index. Directional
//! oracles resolve kinks by the query direction so `<F(x, v), v>` is the
//! one-sided directional derivative.

use crate::problem::Function;
use crate::vector::{norm, Vector};

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `scale * x_index + offset`.
#[derive(Clone, Debug)]
pub struct Coordinate {
    dim: usize,
    index: usize,
    scale: f64,
    offset: f64,
}

impl Coordinate {
    pub fn new(dim: usize, index: usize, scale: f64) -> Self {
        assert!(index < dim);
        Self { dim, index, scale, offset: 0.0 }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    fn grad(&self) -> Vector {
        Vector::basis(self.dim, self.index).scaled(self.scale)
    }
}

impl Function for Coordinate {
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * x[self.index] + self.offset
    }
    fn gradient(&self, _: &[f64]) -> Vector {
        self.grad()
    }
    fn directional_subgradient(&self, _: &[f64], _: &[f64]) -> Vector {
        self.grad()
    }
}

/// `|x| - radius`.
#[derive(Clone, Debug)]
pub struct NormBall {
    radius: f64,
}

impl NormBall {
    pub fn new(radius: f64) -> Self {
        Self { radius }
    }
}

fn unit_or(v: &[f64], fallback: impl FnOnce() -> Vector) -> Vector {
    let n = norm(v);
    if n > 0.0 {
        Vector::from(v).scaled(1.0 / n)
    } else {
        fallback()
    }
}

/// Gradient of `|x|` with the `e1` convention at the origin.
fn norm_gradient(x: &[f64]) -> Vector {
    unit_or(x, || Vector::basis(x.len(), 0))
}

/// Directional subgradient of `|x|`: at the origin the derivative along `v`
/// is `|v|`, attained by `v / |v|`.
fn norm_directional(x: &[f64], v: &[f64]) -> Vector {
    if norm(x) > 0.0 {
        return norm_gradient(x);
    }
    unit_or(v, || Vector::basis(x.len(), 0))
}

impl Function for NormBall {
    fn value(&self, x: &[f64]) -> f64 {
        norm(x) - self.radius
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        norm_gradient(x)
    }
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
        norm_directional(x, v)
    }
}

/// `|x|^2 - radius^2`.
#[derive(Clone, Debug)]
pub struct SquaredNormBall {
    radius: f64,
}

impl SquaredNormBall {
    pub fn new(radius: f64) -> Self {
        Self { radius }
    }
}

impl Function for SquaredNormBall {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|a| a * a).sum::<f64>() - self.radius * self.radius
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        Vector::from(x).scaled(2.0)
    }
    fn directional_subgradient(&self, x: &[f64], _: &[f64]) -> Vector {
        self.gradient(x)
    }
}

/// `|x|_1`.
#[derive(Clone, Debug, Default)]
pub struct L1Norm;

impl Function for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|a| a.abs()).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        x.iter().map(|&a| sign(a)).collect::<Vec<_>>().into()
    }
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
        x.iter()
            .zip(v)
            .map(|(&a, &d)| if a != 0.0 { sign(a) } else { sign(d) })
            .collect::<Vec<_>>()
            .into()
    }
}

#[derive(Clone, Debug)]
pub struct Constant {
    value: f64,
}

impl Constant {
    pub fn new(value: f64) -> Self {
        Self { value }
    }
}

impl Function for Constant {
    fn value(&self, _: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        Vector::zeros(x.len())
    }
    fn directional_subgradient(&self, x: &[f64], _: &[f64]) -> Vector {
        Vector::zeros(x.len())
    }
}

/// `|x|_inf - mu |x|_2`: a max of affine pieces minus a multiple of the
/// Euclidean norm. Its restrictions to segments deviate from convexity by at
/// most `mu`, with equality on segments through the origin.
#[derive(Clone, Debug)]
pub struct LinfMinusNorm {
    mu: f64,
}

impl LinfMinusNorm {
    pub fn new(mu: f64) -> Self {
        assert!(mu >= 0.0);
        Self { mu }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

fn linf_gradient(x: &[f64]) -> Vector {
    let mut best = 0;
    for (i, a) in x.iter().enumerate() {
        if a.abs() > x[best].abs() {
            best = i;
        }
    }
    Vector::basis(x.len(), best).scaled(sign(x[best]))
}

fn linf_directional(x: &[f64], v: &[f64]) -> Vector {
    let top = x.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, &a) in x.iter().enumerate() {
        let signs: &[f64] = if top == 0.0 {
            &[1.0, -1.0]
        } else if a.abs() == top {
            if a > 0.0 {
                &[1.0]
            } else {
                &[-1.0]
            }
        } else {
            &[]
        };
        for &s in signs {
            let slope = s * v[i];
            if best.is_none_or(|(_, _, b)| slope > b) {
                best = Some((i, s, slope));
            }
        }
    }
    let (i, s, _) = best.expect("some coordinate attains the max");
    Vector::basis(x.len(), i).scaled(s)
}

impl Function for LinfMinusNorm {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0f64, |m, a| m.max(a.abs())) - self.mu * norm(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        linf_gradient(x).add_scaled(-self.mu, &norm_gradient(x))
    }
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
        linf_directional(x, v).add_scaled(-self.mu, &norm_directional(x, v))
    }
}

/// One-dimensional `|x| - 1` on `[-1.5, 1.5]`, constant `0.5` outside.
#[derive(Clone, Debug, Default)]
pub struct ClippedAbs;

impl ClippedAbs {
    const EDGE: f64 = 1.5;
}

impl Function for ClippedAbs {
    fn value(&self, x: &[f64]) -> f64 {
        let a = x[0].abs();
        if a <= Self::EDGE {
            a - 1.0
        } else {
            0.5
        }
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        let t = x[0];
        let g = if t.abs() <= Self::EDGE { sign(t) } else { 0.0 };
        Vector::from(vec![g])
    }
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
        let (t, d) = (x[0], v[0]);
        let g = if t == 0.0 {
            sign(d)
        } else if t.abs() < Self::EDGE {
            sign(t)
        } else if t.abs() == Self::EDGE {
            // Moving inward follows the |x| piece, outward the flat piece.
            if d * t < 0.0 {
                sign(t)
            } else {
                0.0
            }
        } else {
            0.0
        };
        Vector::from(vec![g])
    }
}

/// `scale * inner` for `scale > 0`.
#[derive(Debug)]
pub struct Scaled<F> {
    inner: F,
    scale: f64,
}

impl<F: Function> Scaled<F> {
    pub fn new(inner: F, scale: f64) -> Self {
        assert!(scale > 0.0);
        Self { inner, scale }
    }
}

impl<F: Function> Function for Scaled<F> {
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        self.inner.gradient(x).scaled(self.scale)
    }
    fn directional_subgradient(&self, x: &[f64], v: &[f64]) -> Vector {
        self.inner.directional_subgradient(x, v).scaled(self.scale)
    }
}
