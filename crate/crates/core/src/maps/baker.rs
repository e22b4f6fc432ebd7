use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{Interval, MapSystem};
use crate::error::Result;
use crate::linalg::Matrix;

const TORUS2: [Interval; 2] = [Interval::new(0.0, TAU), Interval::new(0.0, TAU)];
const TORUS3: [Interval; 3] = [
    Interval::new(0.0, TAU),
    Interval::new(0.0, TAU),
    Interval::new(0.0, TAU),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baker2DParams {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

/// Perturbed Baker's map on `[0, 2π)²`:
///
/// ```text
/// φ¹ = 2x¹ + s1/2 sin(x¹/2) + s2/2 sin(2x¹) sin(x²)
/// φ² = x²/2 + π⌊x¹/π⌋ + s3 sin(x²) + s4/2 sin(2x¹) sin(x²)      (mod 2π)
/// ```
///
/// With `s3 = s4 = 0` the unstable manifolds are horizontal lines.
#[derive(Debug, Clone)]
pub struct Baker2D {
    p: Baker2DParams,
}

impl Baker2D {
    pub fn new(p: Baker2DParams) -> Self {
        Self { p }
    }

    pub fn params_struct(&self) -> Baker2DParams {
        self.p
    }
}

impl MapSystem for Baker2D {
    fn name(&self) -> &'static str {
        "baker2d"
    }

    fn params(&self) -> Vec<f64> {
        vec![self.p.s1, self.p.s2, self.p.s3, self.p.s4]
    }

    fn dim(&self) -> usize {
        2
    }

    fn unstable_dim_hint(&self) -> Option<usize> {
        Some(1)
    }

    fn domain(&self) -> &[Interval] {
        &TORUS2
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let Baker2DParams { s1, s2, s3, s4 } = self.p;
        let (x1, x2) = (x[0], x[1]);
        let sin2x1 = (2.0 * x1).sin();
        let sinx2 = x2.sin();
        let y1 = 2.0 * x1 + 0.5 * s1 * (0.5 * x1).sin() + 0.5 * s2 * sin2x1 * sinx2;
        let y2 = 0.5 * x2 + PI * (x1 / PI).floor() + s3 * sinx2 + 0.5 * s4 * sin2x1 * sinx2;
        out[0] = TORUS2[0].wrap(y1);
        out[1] = TORUS2[1].wrap(y2);
    }

    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        let Baker2DParams { s1, s2, s3, s4 } = self.p;
        let (sin2x1, cos2x1) = (2.0 * x[0]).sin_cos();
        let (sinx2, cosx2) = x[1].sin_cos();
        out[(0, 0)] = 2.0 + 0.25 * s1 * (0.5 * x[0]).cos() + s2 * cos2x1 * sinx2;
        out[(0, 1)] = 0.5 * s2 * sin2x1 * cosx2;
        out[(1, 0)] = s4 * cos2x1 * sinx2;
        out[(1, 1)] = 0.5 + s3 * cosx2 + 0.5 * s4 * sin2x1 * cosx2;
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let Baker2DParams { s1, s2, s3, s4 } = self.p;
        let (sin2x1, cos2x1) = (2.0 * x[0]).sin_cos();
        let (sinx2, cosx2) = x[1].sin_cos();
        let ss = sin2x1 * sinx2;
        let cc = cos2x1 * cosx2;
        let uv11 = u[0] * v[0];
        let uv12 = u[0] * v[1] + u[1] * v[0];
        let uv22 = u[1] * v[1];
        let f1_11 = -0.125 * s1 * (0.5 * x[0]).sin() - 2.0 * s2 * ss;
        let f1_12 = s2 * cc;
        let f1_22 = -0.5 * s2 * ss;
        let f2_11 = -2.0 * s4 * ss;
        let f2_12 = s4 * cc;
        let f2_22 = -s3 * sinx2 - 0.5 * s4 * ss;
        out[0] = f1_11 * uv11 + f1_12 * uv12 + f1_22 * uv22;
        out[1] = f2_11 * uv11 + f2_12 * uv12 + f2_22 * uv22;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baker3DParams {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

/// Three-dimensional Baker's map on `[0, 2π)³`, expanding by 2 and 3 along
/// the first two axes and stacking six slabs along the third:
///
/// ```text
/// φ¹ = 2x¹ + s1 sin(2x¹) sin(3/2 x²)
/// φ² = 3x² + s2 sin(x¹) sin(3x²)
/// φ³ = x³/6 + π⌊x¹/π⌋ + π/3 ⌊x²/(2π/3)⌋ + s3 sin(6x³)           (mod 2π)
/// ```
#[derive(Debug, Clone)]
pub struct Baker3D {
    p: Baker3DParams,
}

impl Baker3D {
    pub fn new(p: Baker3DParams) -> Self {
        Self { p }
    }

    pub fn params_struct(&self) -> Baker3DParams {
        self.p
    }
}

impl MapSystem for Baker3D {
    fn name(&self) -> &'static str {
        "baker3d"
    }

    fn params(&self) -> Vec<f64> {
        vec![self.p.s1, self.p.s2, self.p.s3]
    }

    fn dim(&self) -> usize {
        3
    }

    fn unstable_dim_hint(&self) -> Option<usize> {
        Some(2)
    }

    fn domain(&self) -> &[Interval] {
        &TORUS3
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let Baker3DParams { s1, s2, s3 } = self.p;
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let y1 = 2.0 * x1 + s1 * (2.0 * x1).sin() * (1.5 * x2).sin();
        let y2 = 3.0 * x2 + s2 * x1.sin() * (3.0 * x2).sin();
        let y3 = x3 / 6.0
            + PI * (x1 / PI).floor()
            + PI / 3.0 * (x2 / (TAU / 3.0)).floor()
            + s3 * (6.0 * x3).sin();
        out[0] = TORUS3[0].wrap(y1);
        out[1] = TORUS3[1].wrap(y2);
        out[2] = TORUS3[2].wrap(y3);
    }

    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()> {
        let Baker3DParams { s1, s2, s3 } = self.p;
        let (sin2x1, cos2x1) = (2.0 * x[0]).sin_cos();
        let (sinx1, cosx1) = x[0].sin_cos();
        let (sin15, cos15) = (1.5 * x[1]).sin_cos();
        let (sin3x2, cos3x2) = (3.0 * x[1]).sin_cos();
        out.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        out[(0, 0)] = 2.0 + 2.0 * s1 * cos2x1 * sin15;
        out[(0, 1)] = 1.5 * s1 * sin2x1 * cos15;
        out[(1, 0)] = s2 * cosx1 * sin3x2;
        out[(1, 1)] = 3.0 + 3.0 * s2 * sinx1 * cos3x2;
        out[(2, 2)] = 1.0 / 6.0 + 6.0 * s3 * (6.0 * x[2]).cos();
        Ok(())
    }

    fn hessian_bilinear_into(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let Baker3DParams { s1, s2, s3 } = self.p;
        let (sin2x1, cos2x1) = (2.0 * x[0]).sin_cos();
        let (sinx1, cosx1) = x[0].sin_cos();
        let (sin15, cos15) = (1.5 * x[1]).sin_cos();
        let (sin3x2, cos3x2) = (3.0 * x[1]).sin_cos();
        let uv11 = u[0] * v[0];
        let uv12 = u[0] * v[1] + u[1] * v[0];
        let uv22 = u[1] * v[1];
        out[0] = s1
            * (-4.0 * sin2x1 * sin15 * uv11 + 3.0 * cos2x1 * cos15 * uv12
                - 2.25 * sin2x1 * sin15 * uv22);
        out[1] = s2
            * (-sinx1 * sin3x2 * uv11 + 3.0 * cosx1 * cos3x2 * uv12 - 9.0 * sinx1 * sin3x2 * uv22);
        out[2] = -36.0 * s3 * (6.0 * x[2]).sin() * u[2] * v[2];
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::testutil::*;
    use crate::maps::Point;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn baker2d(s: [f64; 4]) -> Baker2D {
        Baker2D::new(Baker2DParams {
            s1: s[0],
            s2: s[1],
            s3: s[2],
            s4: s[3],
        })
    }

    fn baker3d(s: [f64; 3]) -> Baker3D {
        Baker3D::new(Baker3DParams {
            s1: s[0],
            s2: s[1],
            s3: s[2],
        })
    }

    #[test]
    fn classical_baker_linear_branch() {
        let map = baker2d([0.0; 4]);
        let x = Point::reduced(vec![FRAC_PI_2, FRAC_PI_2], map.domain()).unwrap();
        let y = map.apply(&x);
        assert_abs_diff_eq!(y.coords()[0], PI, epsilon = 1e-15);
        assert_abs_diff_eq!(y.coords()[1], PI / 4.0, epsilon = 1e-15);
        let jac = map.jacobian(x.coords()).unwrap();
        assert_eq!(jac, Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.5]]));
    }

    #[test]
    fn second_branch_stacks_upper_half() {
        let map = baker2d([0.0; 4]);
        let y = map.apply(&Point::reduced(vec![1.5 * PI, 1.0], map.domain()).unwrap());
        assert_abs_diff_eq!(y.coords()[0], PI, epsilon = 1e-14);
        assert_abs_diff_eq!(y.coords()[1], 0.5 + PI, epsilon = 1e-14);
    }

    #[test]
    fn perturbed_jacobian_entries() {
        let map = baker2d([0.0, 0.4, 0.0, 0.0]);
        let jac = map.jacobian(&[FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(jac[(0, 0)], 1.6, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn baker2d_derivatives_match_finite_differences() {
        let cuts = vec![vec![PI], vec![]];
        let pts = interior_points(&TORUS2, &cuts, 1e-3, 100, 1);
        for s in [
            [0.0, 0.4, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.4],
            [0.3, 0.2, 0.1, 0.25],
        ] {
            check_derivatives(&baker2d(s), &pts, 1e-5, 1e-6);
        }
    }

    #[test]
    fn baker3d_linear_branch() {
        let map = baker3d([0.0; 3]);
        let y = map.apply(&Point::reduced(vec![FRAC_PI_2, PI / 3.0, PI], map.domain()).unwrap());
        assert_abs_diff_eq!(y.coords()[0], PI, epsilon = 1e-15);
        assert_abs_diff_eq!(y.coords()[1], PI, epsilon = 1e-15);
        assert_abs_diff_eq!(y.coords()[2], PI / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn baker3d_jacobian_diagonal_closed_form() {
        let map = baker3d([0.0, 0.9, 0.1]);
        let x = [FRAC_PI_2; 3];
        let jac = map.jacobian(&x).unwrap();
        // 3 + 2.7 sin(π/2) cos(3π/2), 1/6 + 0.6 cos(3π)
        assert_abs_diff_eq!(jac[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac[(1, 1)], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(jac[(2, 2)], 1.0 / 6.0 - 0.6, epsilon = 1e-14);
        let fd = fd_jacobian(&map, &x, 1e-6);
        assert!(jac.max_abs_diff(&fd) < 1e-6);
    }

    #[test]
    fn baker3d_derivatives_match_finite_differences() {
        let cuts = vec![vec![PI], vec![TAU / 3.0, 2.0 * TAU / 3.0], vec![]];
        let pts = interior_points(&TORUS3, &cuts, 1e-3, 100, 2);
        for s in [[0.0, 0.9, 0.1], [0.2, 0.3, 0.05]] {
            check_derivatives(&baker3d(s), &pts, 1e-5, 1e-5);
        }
    }

    #[test]
    fn bakers_stay_in_domain() {
        check_domain_closure(&baker2d([0.0, 0.4, 0.0, 0.0]), 1_000_000, 3);
        check_domain_closure(&baker2d([0.0, 0.0, 0.0, 0.4]), 1_000_000, 4);
        check_domain_closure(&baker3d([0.0, 0.9, 0.1]), 1_000_000, 5);
    }
}
