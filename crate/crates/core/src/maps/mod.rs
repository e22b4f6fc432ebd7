//! Discrete-time chaotic maps with analytic first and second derivatives.
//!
//! Every map acts on a box of periodic intervals. Derivatives come from the
//! smooth part of the map only: `mod` and `floor` terms are locally constant
//! and contribute nothing. The second derivative is exposed as the bilinear
//! action `D²φ(x)(u, v)` instead of a stored n×n×n tensor.
//!
//! Adding a map means implementing [`MapSystem`] and, if it should be
//! reachable by name, extending [`build_map`].

mod baker;
mod cat;
mod onedim;

use serde::{Deserialize, Serialize};

pub use baker::{Baker2D, Baker2DParams, Baker3D, Baker3DParams};
pub use cat::ArnoldCat;
pub use onedim::{Embedded1D, Onion, Sawtooth};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Half-open periodic interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Reduces `x` into `[lo, hi)` by periodicity.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        if x >= self.lo && x < self.hi {
            return x;
        }
        let y = self.lo + (x - self.lo).rem_euclid(self.width());
        if y >= self.hi {
            self.lo
        } else {
            y
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// A phase-space point whose coordinates lie in a map's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    /// Reduces `coords` into `domain`. Fails on non-finite input or a length
    /// mismatch.
    pub fn reduced(coords: Vec<f64>, domain: &[Interval]) -> Result<Self> {
        if coords.len() != domain.len() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, domain has {}",
                coords.len(),
                domain.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteState("point coordinates"));
        }
        Ok(Point(
            coords
                .into_iter()
                .zip(domain)
                .map(|(c, iv)| iv.wrap(c))
                .collect(),
        ))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An evaluatable map `φ: M → M` with analytic derivatives.
///
/// Implementations are immutable after construction and may be shared by
/// any number of trajectory workers.
pub trait MapSystem: Send + Sync {
    /// Registry name of the map.
    fn name(&self) -> &'static str;

    /// Parameters in the order accepted by [`build_map`].
    fn params(&self) -> Vec<f64>;

    /// Phase-space dimension n.
    fn dim(&self) -> usize;

    /// Number of positive Lyapunov exponents, if known a priori.
    fn unstable_dim_hint(&self) -> Option<usize> {
        None
    }

    /// Per-coordinate periodic intervals.
    fn domain(&self) -> &[Interval];

    /// Writes `φ(x)`, reduced into the domain, to `out`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// Writes `Dφ(x)` to `out` (n×n).
    fn jacobian_into(&self, x: &[f64], out: &mut Matrix) -> Result<()>;

    /// Writes `D²φ(x)(u, v)`, i.e. `∂_i∂_j φ^(k) u^(i) v^(j)`, to `out`.
    fn hessian_bilinear_into(&self, x: &[f64], u: &[f64], v: &[f64], out: &mut [f64])
        -> Result<()>;

    fn apply(&self, x: &Point) -> Point {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x.coords(), &mut out);
        Point(out)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        self.jacobian_into(x, &mut out)?;
        Ok(out)
    }

    fn hessian_bilinear(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.hessian_bilinear_into(x, u, v, &mut out)?;
        Ok(out)
    }
}

/// Names accepted by [`build_map`].
pub const REGISTERED_MAPS: &[&str] = &[
    "baker2d",
    "baker3d",
    "cat",
    "sawtooth",
    "onion",
    "sawtooth2d",
    "onion2d",
];

/// Default parameter list for a registered map, used when none is given.
pub fn default_params(name: &str) -> Option<Vec<f64>> {
    Some(match name {
        "baker2d" => vec![0.0, 0.4, 0.0, 0.0],
        "baker3d" => vec![0.0, 0.9, 0.1],
        "cat" => vec![],
        "sawtooth" | "sawtooth2d" => vec![0.1],
        "onion" | "onion2d" => vec![0.4],
        _ => return None,
    })
}

/// Constructs a registered map from its name and parameter list.
///
/// `sawtooth2d` and `onion2d` are the invertible two-dimensional embeddings
/// of the corresponding one-dimensional maps, split at 0.5.
pub fn build_map(name: &str, params: &[f64]) -> Result<Box<dyn MapSystem>> {
    let arity = |k: usize| -> Result<()> {
        if params.len() == k {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "map '{name}' takes {k} parameter(s), got {}",
                params.len()
            )))
        }
    };
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "map parameters must be finite".into(),
        ));
    }
    Ok(match name {
        "baker2d" => {
            arity(4)?;
            Box::new(Baker2D::new(Baker2DParams {
                s1: params[0],
                s2: params[1],
                s3: params[2],
                s4: params[3],
            }))
        }
        "baker3d" => {
            arity(3)?;
            Box::new(Baker3D::new(Baker3DParams {
                s1: params[0],
                s2: params[1],
                s3: params[2],
            }))
        }
        "cat" => {
            arity(0)?;
            Box::new(ArnoldCat::new())
        }
        "sawtooth" => {
            arity(1)?;
            Box::new(Sawtooth::new(params[0]))
        }
        "onion" => {
            arity(1)?;
            Box::new(Onion::new(params[0])?)
        }
        "sawtooth2d" => {
            arity(1)?;
            Box::new(Embedded1D::new(Sawtooth::new(params[0]), 0.5)?)
        }
        "onion2d" => {
            arity(1)?;
            Box::new(Embedded1D::new(Onion::new(params[0])?, 0.5)?)
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown map '{other}'; registered maps: {}",
                REGISTERED_MAPS.join(", ")
            )))
        }
    })
}
