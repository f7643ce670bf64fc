//! Geodesic and horospherical projections.
//!
//! Everything is computed on the hyperboloid. A geodesic submanifold is
//! `H^d ∩ V` for a linear subspace `V` of `R^{1,d}` containing a time-like
//! vector; the Minkowski-orthogonal projection onto `V` is
//! `A (A^T J A)^{-1} A^T J`, where `J = diag(-1, 1, ..., 1)`.
//!
//! The horospherical projection onto `GH(b, p_1, .., p_K)` keeps every
//! Busemann coordinate `B_{p_j}` fixed. For `K >= 2` it rotates `x` around the
//! spine `P = GH(p_1, .., p_K)` into the half of `M` containing `b`:
//!
//! ```text
//! z = proj_V(x)            V = span(l_1, .., l_K), l_j = (1, p_j)
//! w = z / sqrt(-B(z, z))   foot of x on the spine
//! u = (b - w) - proj_V(b - w), normalized
//! y = exp_w(d(x, w) u)
//! ```
//!
//! Evaluated literally, `z` and `u` have entries of order `eps^-2` when two
//! ideal points are `eps` apart and cancel in `y`. The projector boosts `b` to
//! the origin and uses a closed form for `y` instead; see `SpineFrame`.
//!
//! One light-like vector spans a degenerate line, so `K = 1` instead walks from
//! `b` toward `p` by `B_p(b) - B_p(x)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_busemann, ball_distance, ball_to_lorentz, geodesic_midpoint, geodesic_point, lightlike,
    lorentz_busemann, lorentz_to_ball, HyperboloidPoint, IdealPoint, MinkowskiVector,
    PoincarePoint,
};
use crate::linalg::{dot, mdot, norm, norm_sq, scale, sub};

/// Largest accepted condition number of a subspace Gram matrix.
pub const GRAM_CONDITION_LIMIT: f64 = 1e10;

/// Smallest accepted singular value of the stacked component vectors.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-8;

/// Points closer than this to the spine are treated as lying on it.
pub const SPINE_TOLERANCE: f64 = 1e-12;

/// `H^d ∩ span(basis)`, a geodesic submanifold of dimension `basis.len() - 1`.
#[derive(Debug, Clone)]
pub struct GeodesicSubmanifold {
    basis: Vec<Vec<f64>>,
    gram_inv: DMatrix<f64>,
}

impl GeodesicSubmanifold {
    pub fn new(basis: Vec<MinkowskiVector>) -> Result<Self> {
        Self::from_raw(
            basis
                .into_iter()
                .map(MinkowskiVector::into_coords)
                .collect(),
        )
    }

    pub(crate) fn from_raw(basis: Vec<Vec<f64>>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidSubspace("empty basis".into()));
        }
        let len = basis[0].len();
        if basis.iter().any(|b| b.len() != len) {
            return Err(Error::InvalidSubspace(
                "basis vectors differ in length".into(),
            ));
        }
        let k = basis.len();
        let gram = DMatrix::from_fn(k, k, |i, j| mdot(&basis[i], &basis[j]));
        let eig = gram.clone().symmetric_eigen();
        let negatives = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
        let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min_abs = eig
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if !(min_abs > 0.0) || max_abs / min_abs > GRAM_CONDITION_LIMIT {
            return Err(Error::InvalidSubspace(format!(
                "singular or ill-conditioned Gram matrix (eigenvalues {:?})",
                eig.eigenvalues.as_slice()
            )));
        }
        if negatives != 1 {
            return Err(Error::InvalidSubspace(
                "span does not contain a time-like vector".into(),
            ));
        }
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidSubspace("singular Gram matrix".into()))?;
        Ok(Self { basis, gram_inv })
    }

    /// The submanifold through the ball origin spanned by the given ambient
    /// directions: `span(e_0, (0, v_1), .., (0, v_k))`.
    pub fn through_origin(directions: &[Vec<f64>]) -> Result<Self> {
        let d = directions
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidSubspace("no directions".into()))?;
        let mut basis = vec![HyperboloidPoint::origin(d).into_coords()];
        for v in directions {
            let mut b = vec![0.0];
            b.extend_from_slice(v);
            basis.push(b);
        }
        Self::from_raw(basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn ambient_len(&self) -> usize {
        self.basis[0].len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub(crate) fn project_raw(&self, x: &[f64]) -> Vec<f64> {
        let k = self.basis.len();
        let c = DVector::from_fn(k, |i, _| mdot(&self.basis[i], x));
        let coef = &self.gram_inv * c;
        let mut out = vec![0.0; x.len()];
        for (a, b) in coef.iter().zip(&self.basis) {
            for (o, v) in out.iter_mut().zip(b) {
                *o += a * v;
            }
        }
        out
    }

    /// Hyperbolic distance from a hyperboloid point to the submanifold.
    pub fn distance_to(&self, x: &HyperboloidPoint) -> f64 {
        let z = self.project_raw(x.coords());
        let n = sub(x.coords(), &z);
        mdot(&n, &n).max(0.0).sqrt().asinh()
    }
}

/// Minkowski-orthogonal projection of `x` onto the span of `v`.
pub fn minkowski_project(v: &GeodesicSubmanifold, x: &MinkowskiVector) -> Result<MinkowskiVector> {
    if x.coords().len() != v.ambient_len() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient_len(),
            got: x.coords().len(),
        });
    }
    Ok(MinkowskiVector::from_vec(v.project_raw(x.coords())))
}

/// Closest point of `m` to `x`: project onto the span, then rescale onto `H^d`.
pub fn geodesic_project(m: &GeodesicSubmanifold, x: &HyperboloidPoint) -> Result<HyperboloidPoint> {
    if x.coords().len() != m.ambient_len() {
        return Err(Error::DimensionMismatch {
            expected: m.ambient_len(),
            got: x.coords().len(),
        });
    }
    HyperboloidPoint::from_timelike(&m.project_raw(x.coords()))
}

/// Geodesic projection onto a linear subspace through the ball origin, computed
/// in the ball as the hyperbolic midpoint of `x` and its mirror image.
pub fn geodesic_project_poincare_oracle(
    directions: &[Vec<f64>],
    x: &PoincarePoint,
) -> Result<PoincarePoint> {
    let q = orthonormalize(directions)?;
    if q[0].len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: q[0].len(),
            got: x.dim(),
        });
    }
    let mut proj = vec![0.0; x.dim()];
    for v in &q {
        let c = dot(v, x.coords());
        for (p, vi) in proj.iter_mut().zip(v) {
            *p += c * vi;
        }
    }
    let mirrored: Vec<f64> = proj
        .iter()
        .zip(x.coords())
        .map(|(p, xi)| 2.0 * p - xi)
        .collect();
    geodesic_midpoint(x, &PoincarePoint::new(mirrored)?)
}

/// Gram–Schmidt (twice) on a list of Euclidean vectors.
pub(crate) fn orthonormalize(vs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = norm(&w);
        if !(n > 1e-12 * norm(v).max(1e-300)) {
            return Err(Error::InvalidSubspace(
                "linearly dependent directions".into(),
            ));
        }
        out.push(scale(&w, 1.0 / n));
    }
    if out.is_empty() {
        return Err(Error::InvalidSubspace("no directions".into()));
    }
    Ok(out)
}

/// `K` ideal points and a base point: a fitted set of principal directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    directions: Vec<IdealPoint>,
    base: PoincarePoint,
}

impl ComponentSet {
    pub fn new(directions: Vec<IdealPoint>, base: PoincarePoint) -> Result<Self> {
        let d = base.dim();
        let k = directions.len();
        if k == 0 || k > d {
            return Err(Error::InvalidComponents(format!(
                "need 1 <= K <= d, got K = {k}, d = {d}"
            )));
        }
        if let Some(p) = directions.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        let raw: Vec<&[f64]> = directions.iter().map(IdealPoint::coords).collect();
        let s = independence_margin(&raw, base.coords());
        if s < INDEPENDENCE_THRESHOLD {
            return Err(Error::InvalidComponents(format!(
                "components and base are not independent (smallest singular value {s:e})"
            )));
        }
        Ok(Self { directions, base })
    }

    pub fn at_origin(directions: Vec<IdealPoint>) -> Result<Self> {
        let d = directions.first().map(IdealPoint::dim).unwrap_or(0);
        Self::new(directions, PoincarePoint::origin(d.max(1)))
    }

    pub fn directions(&self) -> &[IdealPoint] {
        &self.directions
    }

    pub fn base(&self) -> &PoincarePoint {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Smallest singular value of the unit-normalized columns `(1, p_j)/sqrt 2` and
/// the hyperboloid image of the base.
pub(crate) fn independence_margin(directions: &[&[f64]], base: &[f64]) -> f64 {
    let d = base.len();
    let k = directions.len();
    let mut cols: Vec<Vec<f64>> = directions.iter().map(|p| lightlike(p)).collect();
    cols.push(ball_to_lorentz(base));
    let m = DMatrix::from_fn(d + 1, k + 1, |r, c| cols[c][r] / norm(&cols[c]));
    let sv = m.singular_values();
    sv.iter().fold(f64::INFINITY, |a, b| a.min(*b))
}

/// A horospherical projection prepared for repeated use.
#[derive(Debug, Clone)]
pub struct HoroProjector {
    kind: ProjectorKind,
    dim: usize,
}

#[derive(Debug, Clone)]
enum ProjectorKind {
    /// Geodesic through `base` ending at the ideal point `lightlike`.
    Single {
        lightlike: Vec<f64>,
        base: Vec<f64>,
        /// Unit tangent at `base` pointing to the ideal point.
        toward: Vec<f64>,
        base_busemann: f64,
    },
    Spine {
        frame: SpineFrame,
        /// Spatial part of the base on the hyperboloid; `None` at the origin.
        shift: Option<Vec<f64>>,
    },
}

/// Boost of `R^{1,d}` taking `(sqrt(1 + |s|^2), s)` to the origin; its
/// inverse is `boost(-s, .)`.
fn boost(s: &[f64], x: &[f64]) -> Vec<f64> {
    let ts = (1.0 + norm_sq(s)).sqrt();
    let st = dot(s, &x[1..]);
    let k = st / (1.0 + ts) - x[0];
    let mut out = Vec::with_capacity(x.len());
    out.push(ts * x[0] - st);
    out.extend(x[1..].iter().zip(s).map(|(xi, si)| xi + k * si));
    out
}

/// Spine data for a projection based at the origin.
///
/// `V = span((1, p_1), .., (1, p_K))` splits into the time-like line through
/// `(1, c)` and `{0} x W`, where `W = span(p_j - p_1)` and `c` is the point of
/// the affine hull of the `p_j` nearest the origin. The projection is then
/// solved in closed form from `A = t - c.s`, `Q^T s` and `sigma^2 = 1 - |c|^2`
/// without forming `proj_V(x)`, whose entries grow like `eps^-2` as two ideal
/// points come `eps` apart.
#[derive(Debug, Clone)]
struct SpineFrame {
    /// Orthonormal basis of `W`.
    q: Vec<Vec<f64>>,
    c: Vec<f64>,
    c2: f64,
    /// `1 - |c|^2`, computed as `|Q^T p_1|^2`
    sigma2: f64,
}

impl SpineFrame {
    fn new(dirs: &[Vec<f64>]) -> Result<Self> {
        let p1 = &dirs[0];
        let diffs: Vec<Vec<f64>> = dirs[1..].iter().map(|p| sub(p, p1)).collect();
        let q = orthonormalize(&diffs)
            .map_err(|_| Error::InvalidComponents("ideal points are affinely dependent".into()))?;
        let coef: Vec<f64> = q.iter().map(|e| dot(e, p1)).collect();
        let mut c = p1.clone();
        for (a, e) in coef.iter().zip(&q) {
            for (ci, ei) in c.iter_mut().zip(e) {
                *ci -= a * ei;
            }
        }
        let sigma2 = norm_sq(&coef);
        let c2 = norm_sq(&c);
        // cosh^2 d(o, spine) - 1 = |c|^2 / sigma^2
        if !(sigma2 > 0.0) || !(c2 > 1e-24 * sigma2) {
            return Err(Error::InvalidComponents(
                "base point lies on the spine".into(),
            ));
        }
        Ok(Self { q, c, c2, sigma2 })
    }

    /// `y = proj_V(x) + lambda u` with `u = o - proj_V(o)` and `lambda >= 0`
    /// fixed by `B(y, y) = -1`. Writing `r = 1 + |Q^T s|^2`,
    /// `lambda = sqrt(A^2 - r sigma^2) / |c|` and the coefficient of `(1, c)`
    /// left after the cancellation is `D = (r - A^2) / (|c|^2 (A + lambda))`.
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let (t, s) = (x[0], &x[1..]);
        let a = t - dot(&self.c, s);
        let qs: Vec<f64> = self.q.iter().map(|e| dot(e, s)).collect();
        let r = 1.0 + norm_sq(&qs);
        // sinh d(x, spine) = sqrt(A^2 - r sigma^2) / sigma
        let root = (a * a - r * self.sigma2).max(0.0).sqrt();
        let lambda = if (root / self.sigma2.sqrt()).asinh() < SPINE_TOLERANCE {
            // x is its own foot on the spine
            0.0
        } else {
            root / self.c2.sqrt()
        };
        let dd = (r - a * a) / (self.c2 * (a + lambda));
        let mut y = Vec::with_capacity(x.len());
        y.push(dd + lambda);
        y.extend(self.c.iter().map(|ci| dd * ci));
        for (b, e) in qs.iter().zip(&self.q) {
            for (yi, ei) in y[1..].iter_mut().zip(e) {
                *yi += b * ei;
            }
        }
        y
    }
}

impl HoroProjector {
    pub fn new(components: &ComponentSet) -> Result<Self> {
        let dim = components.dim();
        let base = ball_to_lorentz(components.base().coords());
        let lights: Vec<Vec<f64>> = components
            .directions()
            .iter()
            .map(|p| lightlike(p.coords()))
            .collect();
        let kind = if lights.len() == 1 {
            let l = lights.into_iter().next().unwrap();
            let beta = mdot(&base, &l);
            // l + B(b, l) b is tangent at b with Minkowski length |B(b, l)|.
            let toward: Vec<f64> = l
                .iter()
                .zip(&base)
                .map(|(li, bi)| (li + beta * bi) / beta.abs())
                .collect();
            ProjectorKind::Single {
                base_busemann: (-beta).ln(),
                lightlike: l,
                base,
                toward,
            }
        } else {
            let sb = base[1..].to_vec();
            let shift = (norm_sq(&sb) > 0.0).then_some(sb);
            let dirs: Vec<Vec<f64>> = lights
                .iter()
                .map(|l| {
                    let m = match &shift {
                        Some(sb) => boost(sb, l),
                        None => l.clone(),
                    };
                    let n = norm(&m[1..]);
                    m[1..].iter().map(|v| v / n).collect()
                })
                .collect();
            ProjectorKind::Spine {
                frame: SpineFrame::new(&dirs)?,
                shift,
            }
        };
        Ok(Self { kind, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Projects a hyperboloid point, returning hyperboloid coordinates.
    pub fn project_lorentz(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            ProjectorKind::Single {
                lightlike,
                base,
                toward,
                base_busemann,
            } => {
                let t = base_busemann - lorentz_busemann(lightlike, x);
                geodesic_point(base, toward, t)
            }
            ProjectorKind::Spine { frame, shift } => match shift {
                None => frame.project(x),
                Some(sb) => {
                    let y = frame.project(&boost(sb, x));
                    boost(&scale(sb, -1.0), &y)
                }
            },
        }
    }

    pub(crate) fn project_raw(&self, x: &[f64]) -> Vec<f64> {
        lorentz_to_ball(&self.project_lorentz(&ball_to_lorentz(x)))
    }

    pub fn project(&self, x: &PoincarePoint) -> Result<PoincarePoint> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        PoincarePoint::new(self.project_raw(x.coords()))
    }
}

/// Horospherical projection of `x` onto `GH(base, p_1, .., p_K)`.
pub fn horospherical_project(
    components: &ComponentSet,
    x: &PoincarePoint,
) -> Result<PoincarePoint> {
    HoroProjector::new(components)?.project(x)
}

/// `K = 1` projection solved directly in Minkowski space: the point `y` of
/// `span(b, l)` on the hyperboloid with `B(y, l) = B(x, l)`.
pub fn horospherical_project_k1_span(
    p: &IdealPoint,
    base: &PoincarePoint,
    x: &PoincarePoint,
) -> Result<PoincarePoint> {
    let l = lightlike(p.coords());
    let b = ball_to_lorentz(base.coords());
    let xh = ball_to_lorentz(x.coords());
    let beta = mdot(&b, &l);
    let alpha = mdot(&xh, &l) / beta;
    let gamma = (alpha * alpha - 1.0) / (2.0 * alpha * beta);
    let y: Vec<f64> = b
        .iter()
        .zip(&l)
        .map(|(bi, li)| alpha * bi + gamma * li)
        .collect();
    PoincarePoint::new(lorentz_to_ball(&y))
}

/// A Euclidean circle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    /// The intersection with the diameter through `p`, other than `p` itself.
    pub fn diameter_crossing(&self, p: &IdealPoint) -> [f64; 2] {
        let t = 1.0 - 2.0 * self.radius;
        [t * p.coords()[0], t * p.coords()[1]]
    }

    pub fn point_at(&self, angle: f64) -> [f64; 2] {
        [
            self.center[0] + self.radius * angle.cos(),
            self.center[1] + self.radius * angle.sin(),
        ]
    }
}

/// The horocycle through `x` centered at `p`, as a Euclidean circle internally
/// tangent to the unit circle at `p`.
pub fn horocycle_oracle_2d(p: &IdealPoint, x: &PoincarePoint) -> Result<Circle> {
    if p.dim() != 2 || x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.dim().max(p.dim()),
        });
    }
    let pc = p.coords();
    let xc = x.coords();
    let num = norm_sq(&sub(pc, xc));
    let radius = num / (2.0 * (1.0 - dot(pc, xc)));
    Ok(Circle {
        center: [(1.0 - radius) * pc[0], (1.0 - radius) * pc[1]],
        radius,
    })
}

/// Outcome of the projected-distance bound `sinh(d'/2) <= sinh(d/2) / cosh(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkReport {
    pub distance: f64,
    pub projected_distance: f64,
    pub r: f64,
    pub holds: bool,
}

pub fn shrink_bound_check(
    m: &GeodesicSubmanifold,
    x: &PoincarePoint,
    y: &PoincarePoint,
    r: f64,
) -> Result<ShrinkReport> {
    let xh = HyperboloidPoint::from_vec_unchecked(ball_to_lorentz(x.coords()));
    let yh = HyperboloidPoint::from_vec_unchecked(ball_to_lorentz(y.coords()));
    let px = lorentz_to_ball(geodesic_project(m, &xh)?.coords());
    let py = lorentz_to_ball(geodesic_project(m, &yh)?.coords());
    let distance = ball_distance(x.coords(), y.coords());
    let projected_distance = ball_distance(&px, &py);
    let holds = (projected_distance / 2.0).sinh() <= (distance / 2.0).sinh() / r.cosh() + 1e-9;
    Ok(ShrinkReport {
        distance,
        projected_distance,
        r,
        holds,
    })
}

/// Lengths of the geodesic segment `[x, y]` and of its geodesic projection,
/// measured on a polyline with `samples` pieces, plus the smallest distance
/// from a sample to `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathShrink {
    pub length: f64,
    pub projected_length: f64,
    pub min_distance: f64,
}

pub fn projected_path_length(
    m: &GeodesicSubmanifold,
    x: &PoincarePoint,
    y: &PoincarePoint,
    samples: usize,
) -> Result<PathShrink> {
    let xh = ball_to_lorentz(x.coords());
    let yh = ball_to_lorentz(y.coords());
    let total = crate::geometry::lorentz_distance(&xh, &yh);
    // unit tangent at x toward y: y + B(x, y) x, normalized
    let c = mdot(&xh, &yh);
    let dir: Vec<f64> = yh.iter().zip(&xh).map(|(a, b)| a + c * b).collect();
    let q = mdot(&dir, &dir);
    if !(q > 0.0) {
        return Err(Error::DegenerateDirection("x and y coincide".into()));
    }
    let u = scale(&dir, 1.0 / q.sqrt());
    let mut length = 0.0;
    let mut projected_length = 0.0;
    let mut min_distance = f64::INFINITY;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for i in 0..=samples {
        let t = total * i as f64 / samples as f64;
        let pt = geodesic_point(&xh, &u, t);
        let h = HyperboloidPoint::from_vec_unchecked(pt.clone());
        let proj = geodesic_project(m, &h)?.into_coords();
        min_distance = min_distance.min(m.distance_to(&h));
        if let Some((pp, pq)) = &prev {
            length += crate::geometry::lorentz_distance(pp, &pt);
            projected_length += crate::geometry::lorentz_distance(pq, &proj);
        }
        prev = Some((pt, proj));
    }
    Ok(PathShrink {
        length,
        projected_length,
        min_distance,
    })
}

/// Busemann coordinates of `x` along each direction of `components`.
pub fn busemann_vector(components: &ComponentSet, x: &PoincarePoint) -> Vec<f64> {
    components
        .directions()
        .iter()
        .map(|p| ball_busemann(p.coords(), x.coords()))
        .collect()
}
