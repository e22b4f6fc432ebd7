//! One-dimensional two-to-one maps of `[0, 1)` and their invertible
//! two-dimensional embedding.

use std::f64::consts::{PI, TAU};

use super::{Interval, MapSystem};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const UNIT: [Interval; 1] = [Interval::new(0.0, 1.0)];
const UNIT2: [Interval; 2] = [Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];

/// Distance from the onion map's fold point inside which derivatives are
/// reported as singular.
pub const ONION_FOLD_TOL: f64 = 1e-12;

/// `x ↦ 2x + s sin(2πx) mod 1`. Both branches are monotone for
/// `|s| < 1/(2π)`; this is documented, not enforced.
#[derive(Debug, Clone)]
pub struct Sawtooth {
    s: f64,
}

impl Sawtooth {
    pub fn new(s: f64) -> Self {
        Self { s }
    }

    /// `(φ'(x), φ''(x))`.
    #[inline]
    pub fn derivatives(&self, x: f64) -> (f64, f64) {
        let (sin, cos) = (TAU * x).sin_cos();
        (2.0 + TAU * self.s * cos, -4.0 * PI * PI * self.s * sin)
    }
}

impl MapSystem for Sawtooth {
    fn name(&self) -> &'static str {
        "sawtooth"
    }

    fn params(&self) -> Vec<f64> {
        vec![self.s]
    }

    fn dim(&self) -> usize {
        1
    }

    fn unstable_dim_hint(&self) -> Option<usize> {
        Some(1)
    }

    fn domain(&self) -> &[Interval] {
        &UNIT
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = UNIT[0].wrap(2.0 * x[0] + self.s * (TAU * x[0]).sin());
    }

    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        out[(0, 0)] = self.derivatives(x[0]).0;
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        out[0] = self.derivatives(x[0]).1 * u[0] * v[0];
        Ok(())
    }
}

/// `x ↦ 0.97 √(1 − |1 − 2x|^γ)` for `0 < γ < 1`.
///
/// The derivative is unbounded at the fold `x = 0.5` and at the endpoints
/// `x ∈ {0, 1}`; evaluating there yields [`Error::DerivativeSingularity`].
#[derive(Debug, Clone)]
pub struct Onion {
    gamma: f64,
}

impl Onion {
    pub const HEIGHT: f64 = 0.97;

    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "onion exponent must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    /// `(φ'(x), φ''(x))`.
    pub fn derivatives(&self, x: f64) -> Result<(f64, f64)> {
        let g = self.gamma;
        let t = 1.0 - 2.0 * x;
        let u = t.abs();
        let ug = u.powf(g);
        let w = 1.0 - ug;
        if (x - 0.5).abs() < ONION_FOLD_TOL || !(w > 0.0) {
            return Err(Error::DerivativeSingularity { x: vec![x] });
        }
        let sigma = t.signum();
        let c = Self::HEIGHT * g;
        let sw = w.sqrt();
        // u^(γ-1) = u^γ / u, u^(γ-2) = u^γ / u²
        let d1 = c * sigma * ug / u / sw;
        let d2 =
            -2.0 * c * ((g - 1.0) * ug / (u * u) / sw + 0.5 * g * ug * ug / (u * u) / (w * sw));
        Ok((d1, d2))
    }
}

impl MapSystem for Onion {
    fn name(&self) -> &'static str {
        "onion"
    }

    fn params(&self) -> Vec<f64> {
        vec![self.gamma]
    }

    fn dim(&self) -> usize {
        1
    }

    fn unstable_dim_hint(&self) -> Option<usize> {
        Some(1)
    }

    fn domain(&self) -> &[Interval] {
        &UNIT
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let u = (1.0 - 2.0 * x[0]).abs();
        out[0] = UNIT[0].wrap(Self::HEIGHT * (1.0 - u.powf(self.gamma)).max(0.0).sqrt());
    }

    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        out[(0, 0)] = self.derivatives(x[0])?.0;
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        out[0] = self.derivatives(x[0])?.1 * u[0] * v[0];
        Ok(())
    }
}

/// Invertible 2D analog `(x¹, x²) ↦ (φ(x¹), x²/2 + ½·[x¹ ≥ split])` of a
/// two-to-one map `φ` of `[0, 1)` whose branches meet at `split`.
///
/// Unstable manifolds are the horizontal lines.
#[derive(Debug, Clone)]
pub struct Embedded1D<M> {
    inner: M,
    split: f64,
}

impl<M: MapSystem> Embedded1D<M> {
    pub fn new(inner: M, split: f64) -> Result<Self> {
        if inner.dim() != 1 || inner.domain()[0] != UNIT[0] {
            return Err(Error::InvalidArgument(
                "embedding needs a one-dimensional map of [0, 1)".into(),
            ));
        }
        if !(split > 0.0 && split < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split must lie in (0, 1), got {split}"
            )));
        }
        Ok(Self { inner, split })
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: MapSystem> MapSystem for Embedded1D<M> {
    fn name(&self) -> &'static str {
        match self.inner.name() {
            "sawtooth" => "sawtooth2d",
            "onion" => "onion2d",
            _ => "embedded1d",
        }
    }

    fn params(&self) -> Vec<f64> {
        self.inner.params()
    }

    fn dim(&self) -> usize {
        2
    }

    fn unstable_dim_hint(&self) -> Option<usize> {
        Some(1)
    }

    fn domain(&self) -> &[Interval] {
        &UNIT2
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut y = [0.0];
        self.inner.apply_into(&x[..1], &mut y);
        out[0] = y[0];
        let offset = if x[0] >= self.split { 0.5 } else { 0.0 };
        out[1] = UNIT2[1].wrap(0.5 * x[1] + offset);
    }

    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        let mut j = Matrix::zeros(1, 1);
        self.inner.jacobian_into(&x[..1], &mut j)?;
        out[(0, 0)] = j[(0, 0)];
        out[(0, 1)] = 0.0;
        out[(1, 0)] = 0.0;
        out[(1, 1)] = 0.5;
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let mut h = [0.0];
        self.inner
            .hessian_bilinear_into(&x[..1], &u[..1], &v[..1], &mut h)?;
        out[0] = h[0];
        out[1] = 0.0;
        Ok(())
    }
}
