use super::{Interval, MapSystem};
use crate::error::Result;
use crate::linalg::Matrix;

const UNIT2: [Interval; 2] = [Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];

/// Arnold's cat map `x ↦ A x mod 1` with `A = [[2, 1], [1, 1]]`.
#[derive(Debug, Clone, Default)]
pub struct ArnoldCat;

impl ArnoldCat {
    pub fn new() -> Self {
        ArnoldCat
    }
}

impl MapSystem for ArnoldCat {
    fn name(&self) -> &'static str {
        "cat"
    }

    fn params(&self) -> Vec<f64> {
        Vec::new()
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
        let y1 = 2.0 * x[0] + x[1];
        let y2 = x[0] + x[1];
        out[0] = UNIT2[0].wrap(y1);
        out[1] = UNIT2[1].wrap(y2);
    }

    fn jacobian_into(&self, _x: &[f64], out: &mut Matrix) -> Result<()> {
        out[(0, 0)] = 2.0;
        out[(0, 1)] = 1.0;
        out[(1, 0)] = 1.0;
        out[(1, 1)] = 1.0;
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        _x: &[f64],
        _u: &[f64],
        _v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        out[0] = 0.0;
        out[1] = 0.0;
        Ok(())
    }
}
