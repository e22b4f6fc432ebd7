//! Second-order tangent propagation and the SRB density gradient.
//!
//! Along a trajectory the unstable manifold is described by a chart whose
//! first derivatives are the orthonormal frame `Q_k` and whose second
//! derivatives are the curvature family `a_k^(i,j)`. Both are pushed forward
//! one step at a time:
//!
//! ```text
//! J_k Q_k          = Q_{k+1} R_{k+1}
//! ã^(i,j)          = D²φ(x_k)(Q_k^(:i), Q_k^(:j)) + J_k a_k^(i,j)
//! a_{k+1}^(i,j)    = Σ_{p,q} ã^(p,q) R⁻¹_{pi} R⁻¹_{qj}
//! g_{k+1}^(i)      = −Σ_j Q_{k+1}^(:j) · a_{k+1}^(i,j)
//! ```
//!
//! `g^(i)` is the derivative of the log conditional SRB density along the
//! i-th column of `Q`. It therefore changes sign with that column. QR with
//! a positive diagonal leaves the column signs to the initial frame, so
//! emitted samples are put in a canonical orientation: each column of `Q`
//! (and the matching entry of `g`) is flipped so that its largest-magnitude
//! entry is positive. The propagated state itself is never touched.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, invert_upper_triangular_into, Matrix};
use crate::maps::MapSystem;
use crate::tangent::{init_frame, TangentFrame};

/// Symmetric family of n-vectors `a^(i,j)`, `0 ≤ j ≤ i < m`, stored packed.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureState {
    n: usize,
    m: usize,
    step: u64,
    data: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if j > i { (j, i) } else { (i, j) };
    i * (i + 1) / 2 + j
}

impl CurvatureState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            step: 0,
            data: vec![0.0; n * m * (m + 1) / 2],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn unstable_dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Number of stored vectors, `m(m+1)/2`.
    #[inline]
    pub fn stored(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    /// `a^(i,j)`; `(i, j)` and `(j, i)` address the same storage.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let k = packed(i, j) * self.n;
        &self.data[k..k + self.n]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let k = packed(i, j) * self.n;
        &mut self.data[k..k + self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.n != n || self.m != m {
            return Err(Error::DimensionMismatch(format!(
                "curvature state is {}x{}, expected {n}x{m}",
                self.n, self.m
            )));
        }
        Ok(())
    }
}

/// Unscaled curvature `ã_{k+1}`. `hess(u, v, out)` writes `D²φ(x_k)(u, v)`.
pub fn step_curvature_raw<H>(
    a: &CurvatureState,
    q: &Matrix,
    jac: &Matrix,
    hess: H,
) -> Result<CurvatureState>
where
    H: FnMut(&[f64], &[f64], &mut [f64]) -> Result<()>,
{
    let mut out = CurvatureState::zeros(a.n, a.m);
    let mut scratch = vec![0.0; a.n];
    step_curvature_raw_into(a, q, jac, hess, &mut scratch, &mut out)?;
    Ok(out)
}

pub fn step_curvature_raw_into<H>(
    a: &CurvatureState,
    q: &Matrix,
    jac: &Matrix,
    mut hess: H,
    scratch: &mut [f64],
    out: &mut CurvatureState,
) -> Result<()>
where
    H: FnMut(&[f64], &[f64], &mut [f64]) -> Result<()>,
{
    let (n, m) = q.shape();
    a.check_shape(n, m)?;
    out.check_shape(n, m)?;
    if jac.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "jacobian is {:?}, expected {n}x{n}",
            jac.shape()
        )));
    }
    for i in 0..m {
        for j in 0..=i {
            hess(q.col(i), q.col(j), scratch)?;
            let dst = out.get_mut(i, j);
            jac.mul_vec_into(a.get(i, j), dst);
            for (d, h) in dst.iter_mut().zip(scratch.iter()) {
                *d += h;
            }
        }
    }
    out.step = a.step + 1;
    if !out.is_finite() {
        return Err(Error::NonFiniteState("curvature"));
    }
    Ok(())
}

/// `a^(i,j) = Σ_{p,q} ã^(p,q) r_inv[p][i] r_inv[q][j]`.
pub fn rescale_curvature(raw: &CurvatureState, r_inv: &Matrix) -> CurvatureState {
    let mut out = CurvatureState::zeros(raw.n, raw.m);
    rescale_curvature_into(raw, r_inv, &mut out);
    out
}

pub fn rescale_curvature_into(raw: &CurvatureState, r_inv: &Matrix, out: &mut CurvatureState) {
    let m = raw.m;
    debug_assert_eq!(r_inv.shape(), (m, m));
    // r_inv is upper triangular, so only p ≤ i and q ≤ j contribute.
    for i in 0..m {
        for j in 0..=i {
            let dst = out.get_mut(i, j);
            dst.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..=i {
                for q in 0..=j {
                    let w = r_inv[(p, i)] * r_inv[(q, j)];
                    for (d, s) in dst.iter_mut().zip(raw.get(p, q)) {
                        *d += w * s;
                    }
                }
            }
        }
    }
    out.step = raw.step;
}

/// `g^(i) = −Σ_j q^(:j) · a^(i,j)`.
pub fn eval_g(q: &Matrix, a: &CurvatureState) -> Vec<f64> {
    let mut g = vec![0.0; q.cols()];
    eval_g_into(q, a, &mut g);
    g
}

pub fn eval_g_into(q: &Matrix, a: &CurvatureState, g: &mut [f64]) {
    let m = q.cols();
    for (i, gi) in g.iter_mut().enumerate().take(m) {
        *gi = -(0..m).map(|j| dot(q.col(j), a.get(i, j))).sum::<f64>();
    }
}

/// Flips columns of `q` and entries of `g` so that every column's
/// largest-magnitude entry is positive (first entry wins ties).
pub fn orient(q: &mut Matrix, g: &mut [f64]) {
    for (j, gj) in g.iter_mut().enumerate() {
        let col = q.col(j);
        let mut lead = col[0];
        for &v in &col[1..] {
            if v.abs() > lead.abs() {
                lead = v;
            }
        }
        if lead < 0.0 {
            q.col_mut(j).iter_mut().for_each(|v| *v = -*v);
            *gj = -*gj;
        }
    }
}

/// One emitted step of the density-gradient recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientSample {
    pub step: u64,
    /// The post-step point `x_{k+1}`.
    pub point: Vec<f64>,
    /// Gradient along the oriented basis columns.
    pub g: Vec<f64>,
    /// Oriented unstable basis at `point` (n×m).
    #[serde(skip)]
    pub basis: Matrix,
}

/// The frame and curvature half of the recursion. The primal trajectory is
/// supplied by the caller so several trackers can share one orbit.
#[derive(Debug, Clone)]
pub struct CurvatureTracker {
    frame: TangentFrame,
    a: CurvatureState,
    raw: CurvatureState,
    r_inv: Matrix,
    g: Vec<f64>,
    oriented_q: Matrix,
    oriented_g: Vec<f64>,
    scratch: Vec<f64>,
}

impl CurvatureTracker {
    /// Random initial frame from `seed`, `a_0 = 0`.
    pub fn new(n: usize, m: usize, seed: u64) -> Result<Self> {
        Ok(Self::from_frame(init_frame(n, m, seed)?))
    }

    pub fn from_frame(frame: TangentFrame) -> Self {
        let (n, m) = frame.q().shape();
        let mut t = Self {
            oriented_q: frame.q().clone(),
            frame,
            a: CurvatureState::zeros(n, m),
            raw: CurvatureState::zeros(n, m),
            r_inv: Matrix::identity(m),
            g: vec![0.0; m],
            oriented_g: vec![0.0; m],
            scratch: vec![0.0; n],
        };
        t.oriented_g.fill(0.0);
        orient(&mut t.oriented_q, &mut t.oriented_g);
        t
    }

    /// Advances from `x_k` using `jac = Dφ(x_k)`.
    pub fn advance(&mut self, map: &dyn MapSystem, x: &[f64], jac: &Matrix) -> Result<()> {
        step_curvature_raw_into(
            &self.a,
            self.frame.q(),
            jac,
            |u, v, out| map.hessian_bilinear_into(x, u, v, out),
            &mut self.scratch,
            &mut self.raw,
        )?;
        self.frame.advance(jac)?;
        invert_upper_triangular_into(self.frame.r_last(), &mut self.r_inv)?;
        rescale_curvature_into(&self.raw, &self.r_inv, &mut self.a);
        eval_g_into(self.frame.q(), &self.a, &mut self.g);
        if !self.a.is_finite() || self.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState("density gradient"));
        }
        self.oriented_q.copy_from(self.frame.q());
        self.oriented_g.copy_from_slice(&self.g);
        orient(&mut self.oriented_q, &mut self.oriented_g);
        Ok(())
    }

    pub fn frame(&self) -> &TangentFrame {
        &self.frame
    }

    pub fn curvature(&self) -> &CurvatureState {
        &self.a
    }

    /// Gradient in the propagated (seed-dependent) orientation.
    pub fn raw_g(&self) -> &[f64] {
        &self.g
    }

    /// Gradient in the canonical orientation.
    #[allow(clippy::misnamed_getters)]
    pub fn g(&self) -> &[f64] {
        &self.oriented_g
    }

    /// Unstable basis in the canonical orientation.
    pub fn basis(&self) -> &Matrix {
        &self.oriented_q
    }
}

/// Full recursion along one trajectory: primal state plus tracker.
pub struct DensityGradient<'a> {
    map: &'a dyn MapSystem,
    x: Vec<f64>,
    next: Vec<f64>,
    jac: Matrix,
    tracker: CurvatureTracker,
}

impl<'a> DensityGradient<'a> {
    pub fn new(map: &'a dyn MapSystem, x0: &[f64], m: usize, seed: u64) -> Result<Self> {
        let n = map.dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial point has {} coordinates, map has {n}",
                x0.len()
            )));
        }
        Ok(Self {
            map,
            x: x0.to_vec(),
            next: vec![0.0; n],
            jac: Matrix::zeros(n, n),
            tracker: CurvatureTracker::new(n, m, seed)?,
        })
    }

    /// Performs one step; errors carry the index of the step attempted.
    pub fn advance(&mut self) -> Result<()> {
        let step = self.step() + 1;
        self.map
            .jacobian_into(&self.x, &mut self.jac)
            .and_then(|_| self.tracker.advance(self.map, &self.x, &self.jac))
            .map_err(|e| e.at_step(step))?;
        self.map.apply_into(&self.x, &mut self.next);
        std::mem::swap(&mut self.x, &mut self.next);
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState("trajectory").at_step(step));
        }
        Ok(())
    }

    /// Current point, i.e. `x_{k+1}` after `k + 1` steps.
    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn g(&self) -> &[f64] {
        self.tracker.g()
    }

    pub fn basis(&self) -> &Matrix {
        self.tracker.basis()
    }

    pub fn step(&self) -> u64 {
        self.tracker.frame().step()
    }

    pub fn tracker(&self) -> &CurvatureTracker {
        &self.tracker
    }

    pub fn sample(&self) -> GradientSample {
        GradientSample {
            step: self.step(),
            point: self.x.clone(),
            g: self.g().to_vec(),
            basis: self.basis().clone(),
        }
    }
}

/// Iterator returned by [`run_algorithm1`]. Stops after the first error.
pub struct GradientStream<'a> {
    runner: Option<DensityGradient<'a>>,
    burn_in: u64,
    remaining: u64,
}

impl Iterator for GradientStream<'_> {
    type Item = Result<GradientSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let runner = self.runner.as_mut()?;
        while runner.step() < self.burn_in {
            if let Err(e) = runner.advance() {
                self.runner = None;
                return Some(Err(e));
            }
        }
        match runner.advance() {
            Ok(()) => {
                self.remaining -= 1;
                Some(Ok(runner.sample()))
            }
            Err(e) => {
                self.runner = None;
                Some(Err(e))
            }
        }
    }
}

/// Runs `burn_in + n_steps` steps and yields the last `n_steps` samples.
pub fn run_algorithm1<'a>(
    map: &'a dyn MapSystem,
    x0: &[f64],
    m: usize,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<GradientStream<'a>> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    Ok(GradientStream {
        runner: Some(DensityGradient::new(map, x0, m, seed)?),
        burn_in,
        remaining: n_steps,
    })
}

/// Below this magnitude the first derivative is treated as zero.
pub const ZERO_DERIVATIVE_TOL: f64 = 1e-300;

/// Density-gradient recursion on a straight (flat) unstable manifold:
/// `g' = g/d1 − d2/d1²`.
#[inline]
pub fn step_g_1d_straight(g: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1.abs() >= ZERO_DERIVATIVE_TOL) {
        return Err(Error::ZeroDerivative(d1));
    }
    Ok(g / d1 - d2 / (d1 * d1))
}

/// Per-bin sums of a one-dimensional density gradient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientSeries1D {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples dropped because the map derivative was singular.
    pub skipped: u64,
}

impl GradientSeries1D {
    pub fn new(k_bins: usize) -> Self {
        Self {
            sums: vec![0.0; k_bins],
            counts: vec![0; k_bins],
            skipped: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Equal-width bins of `[0, 1]`, half-open except the last.
    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        let k = self.bins();
        ((x * k as f64) as usize).min(k - 1)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.bins() as f64
    }

    pub fn average(&self, i: usize) -> Option<f64> {
        (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64)
    }

    pub fn averages(&self) -> Vec<Option<f64>> {
        (0..self.bins()).map(|i| self.average(i)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &GradientSeries1D) {
        assert_eq!(self.bins(), other.bins());
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.skipped += other.skipped;
    }
}

/// Iterates a one-dimensional map together with [`step_g_1d_straight`] and
/// bins `g(x_k)` for `k > burn_in`, `burn_in + n_steps` steps in total.
///
/// Where the derivative is singular the sample is skipped, `g` restarts from
/// zero and binning pauses for another `burn_in` steps.
pub fn binned_g_1d(
    map: &dyn MapSystem,
    x0: f64,
    n_steps: u64,
    k_bins: usize,
    burn_in: u64,
) -> Result<GradientSeries1D> {
    let mut series = GradientSeries1D::new(k_bins);
    binned_g_1d_into(map, x0, n_steps, burn_in, &mut series, |_, _| {})?;
    Ok(series)
}

/// As [`binned_g_1d`], accumulating into `series` and calling
/// `checkpoint(step, &series)` after every binned step.
pub fn binned_g_1d_into<F>(
    map: &dyn MapSystem,
    x0: f64,
    n_steps: u64,
    burn_in: u64,
    series: &mut GradientSeries1D,
    mut checkpoint: F,
) -> Result<()>
where
    F: FnMut(u64, &GradientSeries1D),
{
    if map.dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 1D map, got dimension {}",
            map.dim()
        )));
    }
    if series.bins() < 2 {
        return Err(Error::InvalidArgument("need at least 2 bins".into()));
    }
    let mut jac = Matrix::zeros(1, 1);
    let mut d2 = [0.0];
    let mut x = [x0];
    let mut next = [0.0];
    let mut g = 0.0;
    let mut warm = 0u64;
    for k in 1..=burn_in + n_steps {
        let derivs = map
            .jacobian_into(&x, &mut jac)
            .and_then(|_| map.hessian_bilinear_into(&x, &[1.0], &[1.0], &mut d2));
        map.apply_into(&x, &mut next);
        x = next;
        match derivs {
            Ok(()) => {
                g = step_g_1d_straight(g, jac[(0, 0)], d2[0]).map_err(|e| e.at_step(k))?;
                warm += 1;
                if k > burn_in && warm > burn_in {
                    let b = series.bin_of(x[0]);
                    series.sums[b] += g;
                    series.counts[b] += 1;
                }
            }
            Err(Error::DerivativeSingularity { .. }) => {
                g = 0.0;
                warm = 0;
                if k > burn_in {
                    series.skipped += 1;
                }
            }
            Err(e) => return Err(e.at_step(k)),
        }
        if k > burn_in {
            checkpoint(k - burn_in, series);
        }
    }
    Ok(())
}

/// Two recursions with different initial frames on one shared orbit;
/// returns `(k, ‖g_{k,1} − g_{k,2}‖)` for `k = 1..=n_steps`.
pub fn convergence_diagnostic(
    map: &dyn MapSystem,
    x0: &[f64],
    m: usize,
    n_steps: u64,
    seed1: u64,
    seed2: u64,
) -> Result<Vec<(u64, f64)>> {
    let n = map.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} coordinates, map has {n}",
            x0.len()
        )));
    }
    let mut t1 = CurvatureTracker::new(n, m, seed1)?;
    let mut t2 = CurvatureTracker::new(n, m, seed2)?;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut jac = Matrix::zeros(n, n);
    let mut out = Vec::with_capacity(n_steps as usize);
    for k in 1..=n_steps {
        map.jacobian_into(&x, &mut jac)
            .and_then(|_| t1.advance(map, &x, &jac))
            .and_then(|_| t2.advance(map, &x, &jac))
            .map_err(|e| e.at_step(k))?;
        let d = t1
            .g()
            .iter()
            .zip(t2.g())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        out.push((k, d));
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use crate::maps::{ArnoldCat, Baker2D, Baker2DParams, Baker3D, Baker3DParams, Sawtooth};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn baker2d(s: [f64; 4]) -> Baker2D {
        Baker2D::new(Baker2DParams {
            s1: s[0],
            s2: s[1],
            s3: s[2],
            s4: s[3],
        })
    }

    fn random_state(n: usize, m: usize, rng: &mut ChaCha8Rng) -> CurvatureState {
        let mut a = CurvatureState::zeros(n, m);
        a.data
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-1.0..1.0));
        a
    }

    fn random_upper(m: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut r = Matrix::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                r[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        r
    }

    #[test]
    fn packed_storage_is_shared() {
        let mut a = CurvatureState::zeros(3, 3);
        assert_eq!(a.stored(), 6);
        assert_eq!(a.as_slice().len(), 18);
        a.get_mut(2, 0)[1] = 4.0;
        assert_eq!(a.get(0, 2)[1], 4.0);
        let idx: Vec<usize> = (0..3)
            .flat_map(|i| (0..=i).map(move |j| packed(i, j)))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn raw_step_on_cat_map_stays_zero() {
        let map = ArnoldCat::new();
        let q = init_frame(2, 1, 0).unwrap().q().clone();
        let jac = map.jacobian(&[0.3, 0.4]).unwrap();
        let mut a = CurvatureState::zeros(2, 1);
        for _ in 0..10 {
            a = step_curvature_raw(&a, &q, &jac, |u, v, o| {
                map.hessian_bilinear_into(&[0.3, 0.4], u, v, o)
            })
            .unwrap();
        }
        assert!(a.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(a.step(), 10);
    }

    #[test]
    fn raw_step_matches_hand_expansion() {
        // m = 2 on the 3D map, checked entrywise against explicit sums.
        let map = Baker3D::new(Baker3DParams {
            s1: 0.1,
            s2: 0.9,
            s3: 0.1,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = [1.1, 2.3, 0.7];
        let q = init_frame(3, 2, 9).unwrap().q().clone();
        let a = random_state(3, 2, &mut rng);
        let jac = map.jacobian(&x).unwrap();
        let out = step_curvature_raw(&a, &q, &jac, |u, v, o| {
            map.hessian_bilinear_into(&x, u, v, o)
        })
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let h = map.hessian_bilinear(&x, q.col(i), q.col(j)).unwrap();
                for r in 0..3 {
                    let ja: f64 = (0..3).map(|c| jac[(r, c)] * a.get(i, j)[c]).sum();
                    assert_abs_diff_eq!(out.get(i, j)[r], h[r] + ja, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn rescale_identity_and_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_state(3, 2, &mut rng);
        assert_eq!(rescale_curvature(&a, &Matrix::identity(2)), a);
        let a1 = random_state(2, 1, &mut rng);
        let alpha = 2.5;
        let out = rescale_curvature(&a1, &Matrix::diag(&[1.0 / alpha]));
        for (o, v) in out.as_slice().iter().zip(a1.as_slice()) {
            assert_abs_diff_eq!(*o, v / (alpha * alpha), epsilon = 1e-15);
        }
    }

    #[test]
    fn rescale_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 1..=3 {
            let raw = random_state(3, m, &mut rng);
            let r_inv = random_upper(m, &mut rng);
            let out = rescale_curvature(&raw, &r_inv);
            for i in 0..m {
                for j in 0..m {
                    for c in 0..3 {
                        let mut s = 0.0;
                        for p in 0..m {
                            for q in 0..m {
                                s += raw.get(p, q)[c] * r_inv[(p, i)] * r_inv[(q, j)];
                            }
                        }
                        assert_abs_diff_eq!(out.get(i, j)[c], s, epsilon = 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn eval_g_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = init_frame(3, 2, 5).unwrap().q().clone();
        assert_eq!(eval_g(&q, &CurvatureState::zeros(3, 2)), vec![0.0, 0.0]);
        let a = random_state(3, 2, &mut rng);
        let g = eval_g(&q, &a);
        for i in 0..2 {
            let mut s = 0.0;
            for j in 0..2 {
                for c in 0..3 {
                    s -= q[(c, j)] * a.get(i, j)[c];
                }
            }
            assert_abs_diff_eq!(g[i], s, epsilon = 1e-14);
        }
        let q1 = Matrix::column(&[0.6, 0.8]);
        let mut a1 = CurvatureState::zeros(2, 1);
        a1.get_mut(0, 0).copy_from_slice(&[1.0, -2.0]);
        assert_abs_diff_eq!(eval_g(&q1, &a1)[0], -(0.6 - 1.6), epsilon = 1e-15);
    }

    #[test]
    fn orientation_flips_column_and_gradient() {
        let mut q = Matrix::from_rows(&[&[-0.8, 0.6], &[0.6, 0.8]]);
        let mut g = vec![1.0, 2.0];
        orient(&mut q, &mut g);
        assert_eq!(q.col(0), &[0.8, -0.6]);
        assert_eq!(q.col(1), &[0.6, 0.8]);
        assert_eq!(g, vec![-1.0, 2.0]);
    }

    #[test]
    fn cat_map_gradient_is_zero() {
        let map = ArnoldCat::new();
        for s in run_algorithm1(&map, &[0.1, 0.7], 1, 500, 0, 3).unwrap() {
            assert_eq!(s.unwrap().g, vec![0.0]);
        }
    }

    #[test]
    fn stream_emits_post_burn_in_samples() {
        let map = baker2d([0.0, 0.4, 0.0, 0.0]);
        let samples: Vec<_> = run_algorithm1(&map, &[1.0, 2.0], 1, 5, 10, 0)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(
            samples.iter().map(|s| s.step).collect::<Vec<_>>(),
            vec![11, 12, 13, 14, 15]
        );
        // the point is x_{k+1}
        let mut x = vec![1.0, 2.0];
        let mut next = vec![0.0; 2];
        for _ in 0..11 {
            map.apply_into(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
        assert_eq!(samples[0].point, x);
        assert!(run_algorithm1(&map, &[1.0, 2.0], 1, 0, 10, 0).is_err());
        assert!(run_algorithm1(&map, &[1.0], 1, 1, 0, 0).is_err());
    }

    /// Independent m = 1 chain: q' = Jq/α, a' = (H(q,q) + Ja)/α², g = −q·a.
    fn chain_oracle(
        map: &dyn MapSystem,
        x0: &[f64],
        q0: &[f64],
        steps: usize,
    ) -> Vec<(Vec<f64>, f64)> {
        let n = map.dim();
        let mut x = x0.to_vec();
        let mut q = q0.to_vec();
        let mut a = vec![0.0; n];
        let mut out = Vec::new();
        for _ in 0..steps {
            let jac = map.jacobian(&x).unwrap();
            let h = map.hessian_bilinear(&x, &q, &q).unwrap();
            let jq = jac.mul_vec(&q);
            let ja = jac.mul_vec(&a);
            let alpha = norm(&jq);
            q = jq.iter().map(|v| v / alpha).collect();
            a = h
                .iter()
                .zip(&ja)
                .map(|(h, j)| (h + j) / (alpha * alpha))
                .collect();
            let g = -dot(&q, &a);
            x = map
                .apply(&crate::maps::Point::reduced(x, map.domain()).unwrap())
                .into_inner();
            out.push((q.clone(), g));
        }
        out
    }

    #[test]
    fn general_scheme_matches_scalar_chain() {
        for (map, x0) in [
            (baker2d([0.0, 0.4, 0.0, 0.0]), [1.0, 2.0]),
            (baker2d([0.0, 0.0, 0.0, 0.4]), [0.3, 5.0]),
            (baker2d([0.2, 0.3, 0.1, 0.3]), [4.0, 1.5]),
        ] {
            let q0 = init_frame(2, 1, 17).unwrap().q().col(0).to_vec();
            let oracle = chain_oracle(&map, &x0, &q0, 300);
            let mut runner = DensityGradient::new(&map, &x0, 1, 17).unwrap();
            for (_, g) in &oracle {
                runner.advance().unwrap();
                assert_abs_diff_eq!(runner.tracker().raw_g()[0], *g, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn straight_manifold_matches_scalar_recursion() {
        let map = baker2d([0.0, 0.4, 0.0, 0.0]);
        let mut runner = DensityGradient::new(&map, &[1.0, 2.0], 1, 5).unwrap();
        let mut g = 0.0;
        for k in 0..400 {
            let x = runner.point().to_vec();
            let jac = map.jacobian(&x).unwrap();
            let d2 = map.hessian_bilinear(&x, &[1.0, 0.0], &[1.0, 0.0]).unwrap()[0];
            g = step_g_1d_straight(g, jac[(0, 0)], d2).unwrap();
            runner.advance().unwrap();
            if k >= 100 {
                assert_abs_diff_eq!(runner.g()[0], g, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn scalar_recursion_examples() {
        assert_abs_diff_eq!(
            step_g_1d_straight(0.3, 2.0, 0.0).unwrap(),
            0.15,
            epsilon = 1e-16
        );
        let saw = Sawtooth::new(0.1);
        let (d1, d2) = saw.derivatives(0.0);
        assert_abs_diff_eq!(d1, 2.0 + 0.2 * std::f64::consts::PI, epsilon = 1e-15);
        assert_eq!(d2, 0.0);
        assert_abs_diff_eq!(
            step_g_1d_straight(0.7, d1, d2).unwrap(),
            0.7 / d1,
            epsilon = 1e-16
        );
        let (c, h) = (3.0, 1.5);
        let fixed = -h / (c * (c - 1.0));
        assert_abs_diff_eq!(
            step_g_1d_straight(fixed, c, h).unwrap(),
            fixed,
            epsilon = 1e-15
        );
        assert!(matches!(
            step_g_1d_straight(1.0, 0.0, 1.0),
            Err(Error::ZeroDerivative(_))
        ));
        assert!(matches!(
            step_g_1d_straight(1.0, 1e-301, 1.0),
            Err(Error::ZeroDerivative(_))
        ));
    }

    #[test]
    fn seed_independence_after_burn_in() {
        let configs: [(Box<dyn MapSystem>, usize, Vec<f64>); 3] = [
            (Box::new(baker2d([0.0, 0.4, 0.0, 0.0])), 1, vec![1.0, 2.0]),
            (Box::new(baker2d([0.0, 0.0, 0.0, 0.4])), 1, vec![0.5, 4.0]),
            (
                Box::new(Baker3D::new(Baker3DParams {
                    s1: 0.0,
                    s2: 0.9,
                    s3: 0.1,
                })),
                2,
                vec![1.0, 2.0, 3.0],
            ),
        ];
        for (map, m, x0) in &configs {
            let a: Vec<_> = run_algorithm1(map.as_ref(), x0, *m, 200, 100, 1)
                .unwrap()
                .map(|s| s.unwrap())
                .collect();
            let b: Vec<_> = run_algorithm1(map.as_ref(), x0, *m, 200, 100, 2)
                .unwrap()
                .map(|s| s.unwrap())
                .collect();
            for (sa, sb) in a.iter().zip(&b) {
                assert_eq!(sa.point, sb.point);
                for (ga, gb) in sa.g.iter().zip(&sb.g) {
                    assert!((ga - gb).abs() < 1e-10, "{} {ga} {gb}", map.name());
                }
                assert!(sa.basis.max_abs_diff(&sb.basis) < 1e-10);
            }
        }
    }

    #[test]
    fn convergence_examples() {
        let cat = ArnoldCat::new();
        let d = convergence_diagnostic(&cat, &[0.2, 0.3], 1, 50, 1, 2).unwrap();
        assert!(d.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(d[0].0, 1);
        let map = baker2d([0.0, 0.0, 0.0, 0.4]);
        let same = convergence_diagnostic(&map, &[0.2, 0.3], 1, 50, 4, 4).unwrap();
        assert!(same.iter().all(|&(_, v)| v == 0.0));
        let d = convergence_diagnostic(&map, &[0.2, 0.3], 1, 100, 4, 5).unwrap();
        assert!(d[59].1 < 1e-12, "{:?}", d[59]);
        assert!(d[0].1 > 1e-8);
    }

    #[test]
    fn binned_sawtooth_examples() {
        let flat = binned_g_1d(&Sawtooth::new(0.0), 0.123, 10_000, 16, 10).unwrap();
        assert!(flat.sums.iter().all(|&s| s == 0.0));
        let s = binned_g_1d(&Sawtooth::new(0.1), 0.123, 100_000, 64, 50).unwrap();
        assert_eq!(s.total(), 100_000);
        assert_eq!(s.skipped, 0);
        assert!(s.counts.iter().all(|&c| c > 0));
        assert_eq!(s.bin_of(1.0), 63);
        assert_eq!(s.bin_of(0.0), 0);
        assert_eq!(s.bin_of(1.0 / 64.0), 1);
        assert!(binned_g_1d(&Sawtooth::new(0.1), 0.1, 10, 1, 0).is_err());
    }

    #[test]
    fn binned_gradient_matches_stationary_density() {
        // For the sawtooth map the invariant density solves the transfer-operator
        // fixed point; its log-derivative is the expected bin average.
        let map = Sawtooth::new(0.1);
        let k = 32;
        let s = binned_g_1d(&map, 0.3, 2_000_000, k, 100).unwrap();
        let (grid, rho) = transfer_fixed_point(&map, 4096);
        let h = grid[1] - grid[0];
        for i in 2..k - 2 {
            let x = s.bin_center(i);
            let j = ((x / h) as usize).min(grid.len() - 2);
            let jm = j.saturating_sub(1);
            let d = (rho[j + 1] - rho[jm]) / (grid[j + 1] - grid[jm]) / rho[j];
            assert!(
                (s.average(i).unwrap() - d).abs() < 0.05 * (1.0 + d.abs()),
                "bin {i}: {:?} vs {d}",
                s.average(i)
            );
        }
    }

    /// Power iteration of the transfer operator on a uniform grid.
    fn transfer_fixed_point(map: &Sawtooth, cells: usize) -> (Vec<f64>, Vec<f64>) {
        let grid: Vec<f64> = (0..cells)
            .map(|i| (i as f64 + 0.5) / cells as f64)
            .collect();
        let mut rho = vec![1.0; cells];
        let apply = |x: f64| 2.0 * x + 0.1 * (std::f64::consts::TAU * x).sin();
        for _ in 0..60 {
            let interp = |y: f64| {
                let t = y * cells as f64 - 0.5;
                let i = t.floor().clamp(0.0, cells as f64 - 2.0) as usize;
                let f = (t - i as f64).clamp(-1.0, 2.0);
                rho[i] * (1.0 - f) + rho[i + 1] * f
            };
            let next: Vec<f64> = grid
                .iter()
                .map(|&y| {
                    // two preimages, found by bisection on each monotone branch
                    [0.0, 1.0]
                        .iter()
                        .map(|&shift| {
                            let (mut lo, mut hi) = (0.0f64, 1.0f64);
                            for _ in 0..60 {
                                let mid = 0.5 * (lo + hi);
                                if apply(mid) < y + shift {
                                    lo = mid;
                                } else {
                                    hi = mid;
                                }
                            }
                            let x = 0.5 * (lo + hi);
                            interp(x) / map.derivatives(x).0
                        })
                        .sum()
                })
                .collect();
            let mass: f64 = next.iter().sum::<f64>() / cells as f64;
            rho = next.into_iter().map(|v| v / mass).collect();
        }
        (grid, rho)
    }

    proptest! {
        #[test]
        fn curvature_stays_symmetric(seed in 0u64..1000, m in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random_state(3, m, &mut rng);
            let r_inv = random_upper(m, &mut rng);
            let a = rescale_curvature(&raw, &r_inv);
            for i in 0..m {
                for j in 0..m {
                    prop_assert_eq!(a.get(i, j), a.get(j, i));
                }
            }
        }

        #[test]
        fn rescaling_composes(seed in 0u64..1000) {
            // rescale(rescale(a, A), B) == rescale(a, A·B) for upper-triangular A, B
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random_state(2, 2, &mut rng);
            let a = random_upper(2, &mut rng);
            let b = random_upper(2, &mut rng);
            let lhs = rescale_curvature(&rescale_curvature(&raw, &a), &b);
            let rhs = rescale_curvature(&raw, &a.matmul(&b));
            for (l, r) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }
    }
}
