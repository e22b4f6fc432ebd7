//! Empirical SRB statistics: visit histograms, finite-difference density
//! gradients and ergodic averages, including the two sides of the
//! integration-by-parts identity `∫ ∂_Q v dμ = −∫ g v dμ`.

use serde::Serialize;

use crate::curvature::DensityGradient;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::maps::{Interval, MapSystem};
use crate::tangent::init_frame;

/// Visit counts on an equal-width grid over a box domain.
///
/// Counts are stored with dimension 0 varying fastest, so for a 2D map the
/// bins along `x¹` at a fixed `x²` form one contiguous row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDensity {
    pub bins: Vec<usize>,
    pub domain: Vec<Interval>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EmpiricalDensity {
    pub fn new(domain: &[Interval], bins: &[usize]) -> Result<Self> {
        if bins.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bin counts for a {}-dimensional domain",
                bins.len(),
                domain.len()
            )));
        }
        if bins.iter().any(|&b| b < 2) {
            return Err(Error::InvalidArgument(
                "need at least 2 bins per dimension".into(),
            ));
        }
        Ok(Self {
            bins: bins.to_vec(),
            domain: domain.to_vec(),
            counts: vec![0; bins.iter().product()],
            total: 0,
        })
    }

    pub fn dims(&self) -> usize {
        self.bins.len()
    }

    #[inline]
    fn axis_bin(&self, axis: usize, x: f64) -> usize {
        let iv = self.domain[axis];
        let k = self.bins[axis];
        (((x - iv.lo) / iv.width() * k as f64) as usize).min(k - 1)
    }

    /// Flat index of the bin containing `x`.
    #[inline]
    pub fn bin_index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dims()).rev() {
            idx = idx * self.bins[axis] + self.axis_bin(axis, x[axis]);
        }
        idx
    }

    #[inline]
    pub fn record(&mut self, x: &[f64]) {
        let i = self.bin_index(x);
        self.counts[i] += 1;
        self.total += 1;
    }

    pub fn bin_width(&self, axis: usize) -> f64 {
        self.domain[axis].width() / self.bins[axis] as f64
    }

    pub fn bin_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.bin_width(a)).product()
    }

    /// Center of bin `i` along `axis`.
    pub fn bin_center(&self, axis: usize, i: usize) -> f64 {
        self.domain[axis].lo + (i as f64 + 0.5) * self.bin_width(axis)
    }

    /// `counts / (total · bin volume)`; integrates to one.
    pub fn density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.total as f64 * self.bin_volume());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }

    /// Bins along `x¹` with every other coordinate bin fixed, for a 2D grid.
    pub fn row(&self, row_index: usize) -> &[u64] {
        assert_eq!(self.dims(), 2, "rows are defined for 2D grids");
        let k = self.bins[0];
        &self.counts[row_index * k..(row_index + 1) * k]
    }

    /// Merges each run of `factor` adjacent bins along `x¹`, keeping the
    /// other axes as they are.
    pub fn coarsened(&self, factor: usize) -> Result<EmpiricalDensity> {
        if factor == 0 || !self.bins[0].is_multiple_of(factor) || self.bins[0] / factor < 2 {
            return Err(Error::InvalidArgument(format!(
                "cannot merge {} bins in groups of {factor}",
                self.bins[0]
            )));
        }
        let mut bins = self.bins.clone();
        bins[0] /= factor;
        Ok(EmpiricalDensity {
            counts: coarsen(&self.counts, factor),
            bins,
            domain: self.domain.clone(),
            total: self.total,
        })
    }

    /// Adds another grid's counts. The merge is associative and commutative.
    pub fn merge(&mut self, other: &EmpiricalDensity) -> Result<()> {
        if self.bins != other.bins || self.domain != other.domain {
            return Err(Error::DimensionMismatch("histogram grids differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }
}

/// Visits of `x_k`, `burn_in < k ≤ burn_in + n_steps`.
pub fn histogram_srb(
    map: &dyn MapSystem,
    x0: &[f64],
    n_steps: u64,
    bins: &[usize],
    burn_in: u64,
) -> Result<EmpiricalDensity> {
    let mut hist = EmpiricalDensity::new(map.domain(), bins)?;
    if x0.len() != map.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {} coordinates, map has {}",
            x0.len(),
            map.dim()
        )));
    }
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    for k in 1..=burn_in + n_steps {
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if k > burn_in {
            hist.record(&x);
        }
    }
    Ok(hist)
}

/// Central-difference log-derivative `(c[i+1] − c[i−1]) / (2Δ c[i])` at
/// every interior bin whose stencil has no empty bin. Returns `(i, value)`.
pub fn fd_log_gradient(counts: &[u64], delta: f64) -> Vec<(usize, f64)> {
    (1..counts.len().saturating_sub(1))
        .filter(|&i| counts[i - 1] > 0 && counts[i] > 0 && counts[i + 1] > 0)
        .map(|i| {
            let d = counts[i + 1] as f64 - counts[i - 1] as f64;
            (i, d / (2.0 * delta * counts[i] as f64))
        })
        .collect()
}

/// Finite-difference density gradient along one histogram row, as
/// `(bin_center, g_fd)` pairs.
pub fn conditional_fd_g(density: &EmpiricalDensity, row_index: usize) -> Result<Vec<(f64, f64)>> {
    if density.dims() != 2 {
        return Err(Error::DimensionMismatch(
            "conditional gradient needs a 2D histogram".into(),
        ));
    }
    if row_index >= density.bins[1] {
        return Err(Error::InvalidArgument(format!(
            "row {row_index} out of range for {} rows",
            density.bins[1]
        )));
    }
    let row = density.row(row_index);
    if row.iter().all(|&c| c == 0) {
        return Err(Error::EmptyRow(row_index));
    }
    Ok(fd_log_gradient(row, density.bin_width(0))
        .into_iter()
        .map(|(i, g)| (density.bin_center(0, i), g))
        .collect())
}

/// Sums adjacent groups of `factor` bins.
pub fn coarsen(counts: &[u64], factor: usize) -> Vec<u64> {
    counts.chunks(factor).map(|c| c.iter().sum()).collect()
}

/// Linear interpolation through `(x, y)` points sorted by `x`. `None`
/// outside their range or across a gap wider than `max_gap`.
pub fn interpolate(points: &[(f64, f64)], x: f64, max_gap: f64) -> Option<f64> {
    let j = points.partition_point(|p| p.0 <= x);
    if j == 0 {
        return None;
    }
    let (x0, y0) = points[j - 1];
    if x == x0 {
        return Some(y0);
    }
    let &(x1, y1) = points.get(j)?;
    (x1 - x0 <= max_gap).then(|| y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Pearson correlation coefficient; `None` if either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// A smooth scalar function with an analytic gradient.
pub trait Observable: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }
}

/// `sin(x¹) exp(x²)`.
#[derive(Debug, Clone, Copy)]
pub struct SinExp2D;

impl Observable for SinExp2D {
    fn name(&self) -> &'static str {
        "sin_exp_2d"
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x[0].sin() * x[1].exp()
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let e = x[1].exp();
        out[0] = x[0].cos() * e;
        out[1] = x[0].sin() * e;
    }
}

/// `sin(x¹) sin(1.5 x²) x³`.
#[derive(Debug, Clone, Copy)]
pub struct SinSinLin3D;

impl Observable for SinSinLin3D {
    fn name(&self) -> &'static str {
        "sin_sin_lin_3d"
    }
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, x: &[f64]) -> f64 {
        x[0].sin() * (1.5 * x[1]).sin() * x[2]
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let (s0, c0) = x[0].sin_cos();
        let (s1, c1) = (1.5 * x[1]).sin_cos();
        out[0] = c0 * s1 * x[2];
        out[1] = 1.5 * s0 * c1 * x[2];
        out[2] = s0 * s1;
    }
}

/// The constant 1 in any dimension.
#[derive(Debug, Clone, Copy)]
pub struct ConstOne(pub usize);

impl Observable for ConstOne {
    fn name(&self) -> &'static str {
        "const_one"
    }
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn gradient_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

pub const REGISTERED_OBSERVABLES: &[&str] = &["sin_exp_2d", "sin_sin_lin_3d", "const_one"];

/// Checks the analytic gradient against central differences at random
/// interior points, to `1e-5` relative to `max(1, |∇v|)`.
pub fn validate_observable(v: &dyn Observable, domain: &[Interval], seed: u64) -> Result<()> {
    let n = v.dim();
    if domain.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "observable {} is {n}-dimensional, domain is {}",
            v.name(),
            domain.len()
        )));
    }
    let h = 1e-6;
    for trial in 0..32 {
        let x = crate::rng::uniform_point(seed.wrapping_add(trial), domain);
        let grad = v.gradient(&x);
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (v.eval(&xp) - v.eval(&xm)) / (2.0 * h);
            if !((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0)) {
                return Err(Error::InvalidArgument(format!(
                    "gradient of {} disagrees with finite differences at {x:?}: {} vs {fd}",
                    v.name(),
                    grad[i]
                )));
            }
        }
    }
    Ok(())
}

/// Looks up a registered observable and validates it on `domain`.
pub fn build_observable(name: &str, domain: &[Interval]) -> Result<Box<dyn Observable>> {
    let v: Box<dyn Observable> = match name {
        "sin_exp_2d" => Box::new(SinExp2D),
        "sin_sin_lin_3d" => Box::new(SinSinLin3D),
        "const_one" => Box::new(ConstOne(domain.len())),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown observable {name:?}; registered: {}",
                REGISTERED_OBSERVABLES.join(", ")
            )))
        }
    };
    validate_observable(v.as_ref(), domain, 0)?;
    Ok(v)
}

/// Single-pass mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> MCEstimate {
        let variance = self.variance();
        MCEstimate {
            value: self.mean,
            n_samples: self.n,
            variance,
            std_error: if self.n == 0 {
                0.0
            } else {
                (variance / self.n as f64).sqrt()
            },
        }
    }
}

/// Monte Carlo estimate with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub n_samples: u64,
    pub variance: f64,
    pub std_error: f64,
}

/// What an ergodic-average integrand sees at each sample.
pub struct StepView<'a> {
    pub step: u64,
    pub point: &'a [f64],
    /// Oriented unstable basis, when the gradient recursion co-runs.
    pub basis: Option<&'a Matrix>,
    pub g: Option<&'a [f64]>,
}

/// Time average of `f` over `x_k`, `burn_in < k ≤ burn_in + n_steps`. With
/// `m = Some(_)` the density-gradient recursion runs alongside and its
/// state is passed to `f`.
pub fn ergodic_average<F>(
    map: &dyn MapSystem,
    x0: &[f64],
    m: Option<usize>,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
    mut f: F,
) -> Result<MCEstimate>
where
    F: FnMut(&StepView) -> f64,
{
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let mut stats = RunningStats::new();
    let mut push = |view: &StepView| -> Result<()> {
        let v = f(view);
        if !v.is_finite() {
            return Err(Error::NonFiniteState("integrand").at_step(view.step));
        }
        stats.push(v);
        Ok(())
    };
    match m {
        Some(m) => {
            let mut run = DensityGradient::new(map, x0, m, seed)?;
            for _ in 0..burn_in + n_steps {
                run.advance()?;
                if run.step() > burn_in {
                    push(&StepView {
                        step: run.step(),
                        point: run.point(),
                        basis: Some(run.basis()),
                        g: Some(run.g()),
                    })?;
                }
            }
        }
        None => {
            let mut x = x0.to_vec();
            let mut next = vec![0.0; x.len()];
            for k in 1..=burn_in + n_steps {
                map.apply_into(&x, &mut next);
                std::mem::swap(&mut x, &mut next);
                if k > burn_in {
                    push(&StepView {
                        step: k,
                        point: &x,
                        basis: None,
                        g: None,
                    })?;
                }
            }
        }
    }
    Ok(stats.estimate())
}

/// Product of the domain's interval widths.
pub fn domain_volume(domain: &[Interval]) -> f64 {
    domain.iter().map(|iv| iv.width()).product()
}

/// Both sides of the integration-by-parts identity on one trajectory.
///
/// Per-sample statistics are kept against the probability measure; the
/// [`PairEstimate`] rescales them by the domain volume `ω(M)`, so integrals
/// are reported against `ω(M)·μ` (the measure whose density averages to
/// one over `M`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub volume: f64,
    /// `Σ_j ∇v · Q^(:j)`.
    pub lhs: RunningStats,
    /// `−v Σ_j g^(j)`.
    pub rhs: RunningStats,
    /// `Σ_i (g^(i))²`.
    pub g_sq: RunningStats,
}

impl PairStats {
    pub fn new(volume: f64) -> Self {
        Self {
            volume,
            lhs: RunningStats::new(),
            rhs: RunningStats::new(),
            g_sq: RunningStats::new(),
        }
    }

    pub fn merge(&mut self, other: &PairStats) {
        assert_eq!(
            self.volume, other.volume,
            "merging estimates over different domains"
        );
        self.lhs.merge(&other.lhs);
        self.rhs.merge(&other.rhs);
        self.g_sq.merge(&other.g_sq);
    }

    pub fn result(&self) -> PairEstimate {
        let w = self.volume;
        let scaled = |s: &RunningStats| {
            let e = s.estimate();
            MCEstimate {
                value: w * e.value,
                n_samples: e.n_samples,
                variance: w * w * e.variance,
                std_error: w * e.std_error,
            }
        };
        PairEstimate {
            lhs: scaled(&self.lhs),
            rhs: scaled(&self.rhs),
            g_l2_norm: (w * self.g_sq.mean()).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEstimate {
    pub lhs: MCEstimate,
    pub rhs: MCEstimate,
    /// `(ω(M) · mean over samples of |g|²)^½`.
    pub g_l2_norm: f64,
}

/// Ergodic averages of both sides of `∫ ∂_Q v dμ = −∫ (Σ_j g^(j)) v dμ`.
/// `checkpoint(n, &stats)` is called after every sample.
pub fn mc_integrate_pair_with<F>(
    map: &dyn MapSystem,
    v: &dyn Observable,
    x0: &[f64],
    m: usize,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
    mut checkpoint: F,
) -> Result<PairStats>
where
    F: FnMut(u64, &PairStats),
{
    let n = map.dim();
    if v.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "observable {} is {}-dimensional, map has {n}",
            v.name(),
            v.dim()
        )));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let mut run = DensityGradient::new(map, x0, m, seed)?;
    for _ in 0..burn_in {
        run.advance()?;
    }
    let mut stats = PairStats::new(domain_volume(map.domain()));
    let mut grad = vec![0.0; n];
    for i in 1..=n_steps {
        run.advance()?;
        let x = run.point();
        let q = run.basis();
        let g = run.g();
        v.gradient_into(x, &mut grad);
        let lhs: f64 = (0..m).map(|j| dot(&grad, q.col(j))).sum();
        let rhs = -v.eval(x) * g.iter().sum::<f64>();
        if !lhs.is_finite() || !rhs.is_finite() {
            return Err(Error::NonFiniteState("integrand").at_step(run.step()));
        }
        stats.lhs.push(lhs);
        stats.rhs.push(rhs);
        stats.g_sq.push(g.iter().map(|v| v * v).sum());
        checkpoint(i, &stats);
    }
    Ok(stats)
}

pub fn mc_integrate_pair(
    map: &dyn MapSystem,
    v: &dyn Observable,
    x0: &[f64],
    m: usize,
    n_steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<PairEstimate> {
    mc_integrate_pair_with(map, v, x0, m, n_steps, burn_in, seed, |_, _| {}).map(|s| s.result())
}

/// Largest unstable-direction inclination `arctan|q²/q¹|` over
/// `burn_in < k ≤ burn_in + n_steps`, for 2D maps with one unstable direction.
pub fn q_angle_stat(
    map: &dyn MapSystem,
    x0: &[f64],
    n_steps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<f64> {
    if map.dim() != 2 || x0.len() != 2 {
        return Err(Error::DimensionMismatch(
            "inclination statistic needs a 2D map".into(),
        ));
    }
    let mut frame = init_frame(2, 1, seed)?;
    let mut jac = Matrix::zeros(2, 2);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; 2];
    let mut max = 0.0f64;
    for k in 1..=burn_in + n_steps {
        map.jacobian_into(&x, &mut jac)
            .and_then(|_| frame.advance(&jac))
            .map_err(|e| e.at_step(k))?;
        map.apply_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if k > burn_in {
            let q = frame.q().col(0);
            max = max.max((q[1] / q[0]).abs().atan());
        }
    }
    Ok(max)
}
