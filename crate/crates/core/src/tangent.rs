//! First-order tangent propagation with QR renormalization.
//!
//! A [`TangentFrame`] holds an orthonormal n×m basis that is pushed forward
//! by the Jacobian and re-orthonormalized every step. Its column space
//! converges to the m-dimensional unstable subspace regardless of the
//! starting basis, and the logarithms of the diagonal of the triangular
//! factors average to the leading Lyapunov exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul_into, qr_householder, qr_householder_into, Matrix};
use crate::maps::MapSystem;
use crate::rng;

/// Default number of steps discarded before statistics are recorded.
pub const DEFAULT_BURN_IN: u64 = 200;

/// Default threshold separating positive exponents from zero, in nats/step.
pub const DEFAULT_GAP_TOL: f64 = 0.05;

const INIT_RETRIES: u64 = 8;

#[derive(Debug, Clone)]
pub struct TangentFrame {
    q: Matrix,
    r_last: Matrix,
    step: u64,
    work: Matrix,
}

impl TangentFrame {
    /// Wraps an orthonormal basis as a frame at step 0 with `r_last = I`.
    pub fn from_basis(q: Matrix) -> Self {
        let (n, m) = q.shape();
        Self {
            q,
            r_last: Matrix::identity(m),
            step: 0,
            work: Matrix::zeros(n, m),
        }
    }

    #[inline]
    pub fn q(&self) -> &Matrix {
        &self.q
    }

    #[inline]
    pub fn r_last(&self) -> &Matrix {
        &self.r_last
    }

    #[inline]
    pub fn step(&self) -> u64 {
        self.step
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    #[inline]
    pub fn unstable_dim(&self) -> usize {
        self.q.cols()
    }

    /// In-place version of [`step_frame`].
    pub fn advance(&mut self, jac: &Matrix) -> Result<()> {
        if !jac.is_finite() {
            return Err(Error::NonFiniteState("jacobian"));
        }
        matmul_into(jac, &self.q, &mut self.work);
        qr_householder_into(&mut self.work, &mut self.q, &mut self.r_last)?;
        self.step += 1;
        Ok(())
    }
}

/// Random orthonormal n×m frame: QR of an n×m standard normal matrix drawn
/// from the `(seed, TANGENT_FRAME)` stream. A degenerate draw is retried with
/// the next seed, up to eight times.
pub fn init_frame(n: usize, m: usize, seed: u64) -> Result<TangentFrame> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "frame needs 1 <= m <= n, got n = {n}, m = {m}"
        )));
    }
    let mut last_err = None;
    for attempt in 0..=INIT_RETRIES {
        let draws = rng::standard_normals(
            seed.wrapping_add(attempt),
            rng::stream::TANGENT_FRAME,
            n * m,
        );
        match qr_householder(&Matrix::from_col_major(n, m, draws)) {
            Ok(qr) => return Ok(TangentFrame::from_basis(qr.q)),
            Err(e @ Error::DegenerateBasis { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Pushes the frame forward: `jac · q = Q' R'`.
pub fn step_frame(frame: &TangentFrame, jac: &Matrix) -> Result<TangentFrame> {
    let mut next = frame.clone();
    next.advance(jac)?;
    Ok(next)
}

/// Leading Lyapunov exponents in nats per iteration, sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeSpectrum {
    pub exponents: Vec<f64>,
    pub trajectory_length: u64,
    pub burn_in: u64,
}

/// Benettin's estimator: average of `log r_ii` over `t` steps following
/// `burn_in` unrecorded steps.
pub fn benettin_le(
    map: &dyn MapSystem,
    x0: &[f64],
    count: usize,
    t: u64,
    burn_in: u64,
    seed: u64,
) -> Result<LeSpectrum> {
    let n = map.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} coordinates, map has {n}",
            x0.len()
        )));
    }
    if t == 0 {
        return Err(Error::InvalidArgument(
            "trajectory length must be >= 1".into(),
        ));
    }
    let mut frame = init_frame(n, count, seed)?;
    let mut jac = Matrix::zeros(n, n);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut sums = vec![0.0; count];
    for k in 0..burn_in + t {
        map.jacobian_into(&x, &mut jac)
            .and_then(|_| frame.advance(&jac))
            .map_err(|e| e.at_step(k))?;
        if k >= burn_in {
            for (i, s) in sums.iter_mut().enumerate() {
                *s += frame.r_last[(i, i)].ln();
            }
        }
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    let mut exponents: Vec<f64> = sums.into_iter().map(|s| s / t as f64).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(LeSpectrum {
        exponents,
        trajectory_length: t,
        burn_in,
    })
}

/// Number of exponents above `gap_tol`. Fails if any exponent lies within
/// `gap_tol` of zero, since the split is then not trustworthy.
pub fn detect_unstable_dim(spectrum: &LeSpectrum, gap_tol: f64) -> Result<usize> {
    if let Some(&exponent) = spectrum.exponents.iter().find(|e| e.abs() <= gap_tol) {
        return Err(Error::AmbiguousSpectrum { exponent, gap_tol });
    }
    Ok(spectrum.exponents.iter().filter(|&&e| e > gap_tol).count())
}
