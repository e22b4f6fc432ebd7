//! Hyperbolicity probe: the angle measure `d` between the unstable and
//! stable subspaces along an orbit.
//!
//! The unstable basis comes from the forward QR iteration of `Dφ`. The
//! stable subspace at `x_k` is the limit of `Dφ⁻¹` applied backward from a
//! random frame further along the orbit, so it is computed over windows:
//! the Jacobians of `WINDOW + SETTLE` consecutive points are buffered, the
//! inverse Jacobians are swept backward over them, and the last `WINDOW`
//! frames of the sweep are paired with the stored unstable bases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{principal_angle_measure, qr_householder_into, solve_in_place, Matrix};
use crate::maps::MapSystem;
use crate::rng;
use crate::tangent::{init_frame, LeSpectrum};

/// Points whose stable bases share one backward sweep.
pub const WINDOW: usize = 64;

/// Backward steps before a sweep's frame is used.
pub const SETTLE: usize = 64;

/// Number of equal-width bins of the `d` PDF.
pub const PDF_BINS: usize = 100;

/// Below this `|det Dφ|` the inverse Jacobian is not formed.
pub const SINGULAR_JACOBIAN_TOL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSeries {
    pub samples: Vec<f64>,
    /// Density over `[0, 1]` on [`PDF_BINS`] bins.
    pub pdf: Vec<f64>,
    pub min_d: f64,
    /// Full spectrum from the forward pass over the sampled points.
    pub le_spectrum: LeSpectrum,
}

impl AngleSeries {
    pub fn from_samples(samples: Vec<f64>, le_spectrum: LeSpectrum) -> Self {
        let mut counts = vec![0u64; PDF_BINS];
        for &d in &samples {
            counts[((d * PDF_BINS as f64) as usize).min(PDF_BINS - 1)] += 1;
        }
        let scale = PDF_BINS as f64 / samples.len().max(1) as f64;
        Self {
            pdf: counts.iter().map(|&c| c as f64 * scale).collect(),
            min_d: samples.iter().copied().fold(f64::INFINITY, f64::min),
            samples,
            le_spectrum,
        }
    }

    pub fn bin_center(i: usize) -> f64 {
        (i as f64 + 0.5) / PDF_BINS as f64
    }

    pub fn fraction_below(&self, threshold: f64) -> f64 {
        self.samples.iter().filter(|&&d| d < threshold).count() as f64 / self.samples.len() as f64
    }
}

struct Buffered {
    jac: Matrix,
    unstable: Matrix,
}

/// `d` at `x_k` for `burn_in < k ≤ burn_in + n_steps`, with the full
/// Lyapunov spectrum over the same steps.
pub fn stable_unstable_angles(
    map: &dyn MapSystem,
    x0: &[f64],
    mu: usize,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<AngleSeries> {
    let n = map.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} coordinates, map has {n}",
            x0.len()
        )));
    }
    if mu == 0 || mu >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= mu < {n} unstable directions, got {mu}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let ms = n - mu;
    let total = burn_in + n_steps;
    let mut frame = init_frame(n, n, seed)?;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut jac = Matrix::zeros(n, n);
    let mut log_sums = vec![0.0; n];

    let mut buffer: Vec<Buffered> = Vec::with_capacity(WINDOW + SETTLE);
    // point index of buffer[0]
    let mut first = burn_in + 1;
    let mut samples = Vec::with_capacity(n_steps as usize);
    let mut sweep = SweepState::new(n, ms);

    let mut k = 0u64;
    while (samples.len() as u64) < n_steps {
        map.jacobian_into(&x, &mut jac).map_err(|e| e.at_step(k))?;
        if k >= first {
            let mut unstable = Matrix::zeros(n, mu);
            for j in 0..mu {
                unstable.col_mut(j).copy_from_slice(frame.q().col(j));
            }
            buffer.push(Buffered {
                jac: jac.clone(),
                unstable,
            });
        }
        frame.advance(&jac).map_err(|e| e.at_step(k))?;
        if k >= burn_in && k < total {
            for (i, s) in log_sums.iter_mut().enumerate() {
                *s += frame.r_last()[(i, i)].ln();
            }
        }
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        k += 1;

        let wanted = (total + 1 - first).min(WINDOW as u64) as usize;
        if buffer.len() == wanted + SETTLE {
            let chunk = (first - burn_in - 1) / WINDOW as u64;
            sweep
                .run(&buffer, wanted, seed.wrapping_add(chunk), &mut samples)
                .map_err(|e| e.at_step(first))?;
            buffer.drain(..wanted);
            first += wanted as u64;
        }
    }

    let mut exponents: Vec<f64> = log_sums.into_iter().map(|s| s / n_steps as f64).collect();
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let le = LeSpectrum {
        exponents,
        trajectory_length: n_steps,
        burn_in,
    };
    Ok(AngleSeries::from_samples(samples, le))
}

struct SweepState {
    v: Matrix,
    work: Matrix,
    r: Matrix,
    out: Vec<f64>,
}

impl SweepState {
    fn new(n: usize, ms: usize) -> Self {
        Self {
            v: Matrix::zeros(n, ms),
            work: Matrix::zeros(n, ms),
            r: Matrix::zeros(ms, ms),
            out: Vec::with_capacity(WINDOW),
        }
    }

    /// Backward sweep over `buffer`, appending `d` for its first `keep` points.
    fn run(
        &mut self,
        buffer: &[Buffered],
        keep: usize,
        seed: u64,
        samples: &mut Vec<f64>,
    ) -> Result<()> {
        let (n, ms) = self.v.shape();
        let draws = rng::standard_normals(seed, rng::stream::STABLE_FRAME, n * ms);
        self.work = Matrix::from_col_major(n, ms, draws);
        qr_householder_into(&mut self.work, &mut self.v, &mut self.r)?;
        self.out.clear();
        for (j, entry) in buffer.iter().enumerate().rev() {
            self.work.copy_from(&self.v);
            let det = solve_in_place(&entry.jac, &mut self.work)?;
            if !(det.abs() >= SINGULAR_JACOBIAN_TOL) {
                return Err(Error::SingularJacobian { det });
            }
            qr_householder_into(&mut self.work, &mut self.v, &mut self.r)?;
            if j < keep {
                self.out
                    .push(principal_angle_measure(&entry.unstable, &self.v)?);
            }
        }
        samples.extend(self.out.iter().rev());
        Ok(())
    }
}
