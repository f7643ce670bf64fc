//! Poincaré ball and hyperboloid models of hyperbolic space (curvature -1).
//!
//! The ball `{x : |x| < 1}` is the input/output model. Projections run in the
//! hyperboloid `{X : B(X, X) = -1, X_0 > 0}` inside Minkowski space `R^{1,d}`,
//! where `B((t, x), (u, y)) = -t u + <x, y>` and the time coordinate is stored
//! first.
//!
//! Ideal points (boundary directions) are stored as unit vectors and turned
//! into light-like vectors `(1, p)` on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, mdot, norm, norm_sq, scale, sub};

/// Points with `1 - |x|^2` below this are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-15;

/// Tolerance on `|p| = 1` for ideal points.
pub const IDEAL_NORM_TOL: f64 = 1e-12;

/// Relative tolerance on `B(X, X) = -1` for hyperboloid points.
pub const HYPERBOLOID_TOL: f64 = 1e-9;

/// A point of the Poincaré ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincarePoint(Vec<f64>);

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidPoint("empty coordinate vector".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "non-finite entry in {coords:?}"
            )));
        }
        let n2 = norm_sq(&coords);
        if n2 >= 1.0 {
            return Err(Error::InvalidPoint(format!(
                "norm {} is not < 1: {:?}",
                n2.sqrt(),
                coords
            )));
        }
        let margin = 1.0 - n2;
        if margin < BOUNDARY_MARGIN {
            return Err(Error::BoundaryProximity {
                what: format!("{coords:?}"),
                margin,
            });
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `1 - |x|^2`
    pub fn margin(&self) -> f64 {
        1.0 - norm_sq(&self.0)
    }
}

/// A boundary point, stored as a unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint(Vec<f64>);

impl IdealPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("bad ideal point {coords:?}")));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > IDEAL_NORM_TOL {
            return Err(Error::InvalidPoint(format!(
                "ideal point must have unit norm, got {n}"
            )));
        }
        Ok(Self(coords))
    }

    /// Normalizes any nonzero finite vector onto the boundary sphere.
    pub fn from_direction(v: &[f64]) -> Result<Self> {
        let n = norm(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateDirection(format!(
                "cannot normalize {v:?}"
            )));
        }
        Ok(Self(scale(v, 1.0 / n)))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A vector of `R^{1,d}`, time coordinate first. No norm constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiVector(Vec<f64>);

impl MinkowskiVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "bad Minkowski vector {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Minkowski squared norm `B(v, v)`.
    pub fn sq_norm(&self) -> f64 {
        mdot(&self.0, &self.0)
    }
}

/// A future-pointing unit time-like vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperboloidPoint(Vec<f64>);

impl HyperboloidPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!(
                "bad hyperboloid point {coords:?}"
            )));
        }
        if coords[0] <= 0.0 {
            return Err(Error::InvalidPoint(
                "hyperboloid point must be future-pointing".into(),
            ));
        }
        let q = mdot(&coords, &coords);
        if (q + 1.0).abs() > HYPERBOLOID_TOL * coords[0] * coords[0] {
            return Err(Error::InvalidPoint(format!("B(x, x) = {q}, expected -1")));
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        let mut c = vec![0.0; dim + 1];
        c[0] = 1.0;
        Self(c)
    }

    /// Rescales a future-pointing time-like vector onto the hyperboloid.
    pub fn from_timelike(z: &[f64]) -> Result<Self> {
        let q = mdot(z, z);
        if !(q < 0.0) || z[0] <= 0.0 {
            return Err(Error::Internal(format!(
                "expected a future-pointing time-like vector, B(z, z) = {q}"
            )));
        }
        Ok(Self(scale(z, 1.0 / (-q).sqrt())))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Dimension of the hyperbolic space (one less than the ambient length).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_minkowski(&self) -> MinkowskiVector {
        MinkowskiVector(self.0.clone())
    }
}

/// A tangent vector `dir` attached at `base`, with `B(base, dir) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: HyperboloidPoint,
    pub dir: MinkowskiVector,
}

impl TangentVector {
    pub fn new(base: HyperboloidPoint, dir: MinkowskiVector) -> Result<Self> {
        if base.coords().len() != dir.coords().len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords().len(),
                got: dir.coords().len(),
            });
        }
        let scale = base.coords()[0] * norm(dir.coords()).max(1.0);
        let b = mdot(base.coords(), dir.coords());
        if b.abs() > HYPERBOLOID_TOL * scale {
            return Err(Error::InvalidPoint(format!(
                "direction is not tangent: B(base, dir) = {b}"
            )));
        }
        Ok(Self { base, dir })
    }
}

/// Log/exp map at the origin: `Standard` uses `2 artanh|x|` so that the tangent
/// norm equals the hyperbolic distance to the origin; `Legacy` drops the factor 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogConvention {
    #[default]
    Standard,
    Legacy,
}

impl LogConvention {
    fn factor(self) -> f64 {
        match self {
            LogConvention::Standard => 2.0,
            LogConvention::Legacy => 1.0,
        }
    }
}

pub fn minkowski_bilinear(u: &MinkowskiVector, v: &MinkowskiVector) -> f64 {
    mdot(&u.0, &v.0)
}

/// Hyperbolic distance in the ball.
///
/// Evaluated as `2 asinh(|x - y| / sqrt((1 - |x|^2)(1 - |y|^2)))`, which equals
/// `arccosh(1 + 2|x - y|^2 / ((1 - |x|^2)(1 - |y|^2)))` but keeps full relative
/// precision for nearby points.
pub fn poincare_distance(x: &PoincarePoint, y: &PoincarePoint) -> f64 {
    ball_distance(&x.0, &y.0)
}

pub(crate) fn ball_distance(x: &[f64], y: &[f64]) -> f64 {
    let diff: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if diff == 0.0 {
        return 0.0;
    }
    let denom = (1.0 - norm_sq(x)) * (1.0 - norm_sq(y));
    2.0 * (diff / denom).sqrt().asinh()
}

/// `arccosh(-B(X, Y))`, with the argument clamped to `[1, inf)`.
pub fn hyperboloid_distance(x: &HyperboloidPoint, y: &HyperboloidPoint) -> f64 {
    lorentz_distance(&x.0, &y.0)
}

pub(crate) fn lorentz_distance(x: &[f64], y: &[f64]) -> f64 {
    let c = -mdot(x, y);
    if c < 2.0 {
        // B(X - Y, X - Y) = 4 sinh^2(d / 2)
        let diff = sub(x, y);
        let q = mdot(&diff, &diff).max(0.0);
        2.0 * (q.sqrt() / 2.0).asinh()
    } else {
        c.max(1.0).acosh()
    }
}

/// Busemann function of the ideal point `p`: `ln(|p - x|^2 / (1 - |x|^2))`.
pub fn busemann(p: &IdealPoint, x: &PoincarePoint) -> f64 {
    ball_busemann(&p.0, &x.0)
}

pub(crate) fn ball_busemann(p: &[f64], x: &[f64]) -> f64 {
    let num: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    (num / (1.0 - norm_sq(x))).ln()
}

/// Busemann function evaluated on the hyperboloid: `ln(-B(X, (1, p)))`.
pub(crate) fn lorentz_busemann(lightlike: &[f64], x: &[f64]) -> f64 {
    (-mdot(lightlike, x)).ln()
}

pub fn to_hyperboloid(x: &PoincarePoint) -> HyperboloidPoint {
    HyperboloidPoint(ball_to_lorentz(&x.0))
}

pub(crate) fn ball_to_lorentz(x: &[f64]) -> Vec<f64> {
    let n2 = norm_sq(x);
    let denom = 1.0 - n2;
    let mut out = Vec::with_capacity(x.len() + 1);
    out.push((1.0 + n2) / denom);
    out.extend(x.iter().map(|c| 2.0 * c / denom));
    out
}

pub fn to_poincare(x: &HyperboloidPoint) -> Result<PoincarePoint> {
    PoincarePoint::new(lorentz_to_ball(&x.0))
}

pub(crate) fn lorentz_to_ball(x: &[f64]) -> Vec<f64> {
    let s = 1.0 / (1.0 + x[0]);
    x[1..].iter().map(|c| c * s).collect()
}

pub fn ideal_to_lightlike(p: &IdealPoint) -> MinkowskiVector {
    MinkowskiVector(lightlike(&p.0))
}

pub(crate) fn lightlike(p: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(p.len() + 1);
    v.push(1.0);
    v.extend_from_slice(p);
    v
}

/// Inverse of [`ideal_to_lightlike`]: divides the spatial part by the time coordinate.
pub fn lightlike_to_ideal(v: &MinkowskiVector) -> Result<IdealPoint> {
    let t = v.0[0];
    if t <= 0.0 {
        return Err(Error::InvalidPoint(
            "light-like vector must be future-pointing".into(),
        ));
    }
    let q = mdot(&v.0, &v.0);
    if q.abs() > 1e-9 * t * t {
        return Err(Error::InvalidPoint(format!(
            "vector is not light-like: B(v, v) = {q}"
        )));
    }
    IdealPoint::from_direction(&scale(&v.0[1..], 1.0 / t))
}

/// Point at distance `t` from `tangent.base` along the geodesic with initial
/// direction `tangent.dir` (normalized to unit Minkowski length).
pub fn exp_map(tangent: &TangentVector, t: f64) -> Result<HyperboloidPoint> {
    let q = tangent.dir.sq_norm();
    if !(q > 1e-24) {
        return Err(Error::DegenerateDirection(format!(
            "tangent direction has B(u, u) = {q}"
        )));
    }
    let u = scale(&tangent.dir.0, 1.0 / q.sqrt());
    Ok(HyperboloidPoint(geodesic_point(&tangent.base.0, &u, t)))
}

/// `cosh(t) w + sinh(t) u` for a unit tangent `u` at `w`.
pub(crate) fn geodesic_point(w: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    let (c, s) = (t.cosh(), t.sinh());
    w.iter().zip(u).map(|(a, b)| c * a + s * b).collect()
}

pub fn log_origin(x: &PoincarePoint, conv: LogConvention) -> Vec<f64> {
    ball_log_origin(&x.0, conv)
}

pub(crate) fn ball_log_origin(x: &[f64], conv: LogConvention) -> Vec<f64> {
    let r = norm(x);
    if r == 0.0 {
        return vec![0.0; x.len()];
    }
    scale(x, conv.factor() * r.atanh() / r)
}

pub fn exp_origin(v: &[f64], conv: LogConvention) -> Result<PoincarePoint> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidPoint(format!(
            "non-finite tangent vector {v:?}"
        )));
    }
    let n = norm(v);
    if n == 0.0 {
        return Ok(PoincarePoint::origin(v.len()));
    }
    PoincarePoint::new(scale(v, (n / conv.factor()).tanh() / n))
}

/// Möbius addition `x ⊕ y`.
pub fn mobius_add(x: &[f64], y: &[f64]) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let denom = 1.0 + 2.0 * xy + x2 * y2;
    let a = (1.0 + 2.0 * xy + y2) / denom;
    let b = (1.0 - x2) / denom;
    x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
}

/// Hyperbolic midpoint of `x` and `y`, computed with Möbius operations.
pub fn geodesic_midpoint(x: &PoincarePoint, y: &PoincarePoint) -> Result<PoincarePoint> {
    let neg_x = scale(&x.0, -1.0);
    let u = mobius_add(&neg_x, &y.0);
    let r = norm(&u);
    if r == 0.0 {
        return Ok(x.clone());
    }
    let half = (r.atanh() / 2.0).tanh();
    PoincarePoint::new(mobius_add(&x.0, &scale(&u, half / r)))
}

/// The hyperbolic reflection exchanging a point `m` with the origin.
///
/// Acts as `x -> H((-m) ⊕ x)` where `H` is the Euclidean mirror through the
/// hyperplane orthogonal to `m`. It is an involution, so it is its own inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    center: Vec<f64>,
}

impl Reflection {
    pub fn new(center: &PoincarePoint) -> Self {
        Self {
            center: center.0.clone(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
        }
    }

    /// The point sent to the origin.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn is_identity(&self) -> bool {
        self.center.iter().all(|c| *c == 0.0)
    }

    pub fn apply(&self, x: &PoincarePoint) -> Result<PoincarePoint> {
        if x.dim() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: x.dim(),
            });
        }
        PoincarePoint::new(self.apply_raw(&x.0))
    }

    pub(crate) fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        let m2 = norm_sq(&self.center);
        if m2 == 0.0 {
            return x.to_vec();
        }
        let neg_m = scale(&self.center, -1.0);
        let mut y = mobius_add(&neg_m, x);
        let k = 2.0 * dot(&y, &self.center) / m2;
        for (yi, mi) in y.iter_mut().zip(&self.center) {
            *yi -= k * mi;
        }
        y
    }
}
