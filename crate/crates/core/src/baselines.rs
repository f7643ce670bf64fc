//! Comparison methods: Euclidean PCA, tangent PCA, PGA, BSA and hMDS.
//!
//! PGA and BSA search over linear subspaces through the origin, which are the
//! geodesic submanifolds through the (centered) mean. With orthonormal rows
//! `Q`, a point with hyperboloid coordinates `(t, s)` and `q = |Q s|^2` has
//!
//! ```text
//! cosh d(o, proj) = t / sqrt(t^2 - q)
//! sinh d(x, proj) = sqrt(|s|^2 - q)
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_distance, ball_log_origin, ball_to_lorentz, exp_origin, LogConvention, PoincarePoint,
    Reflection,
};
use crate::horopca::{require_centered, FitConfig};
use crate::io::DistanceMatrix;
use crate::linalg::{asinh_over_x, dot, norm_sq};
use crate::optim::{component_rng, random_unit, sphere_ascent, Ascent, Eval};
use crate::stats::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Pca,
    Tpca,
    Pga,
    Bsa,
    HoroPca,
    Hmds,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Pca,
        Method::Tpca,
        Method::Pga,
        Method::Bsa,
        Method::HoroPca,
        Method::Hmds,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Tpca => "tpca",
            Method::Pga => "pga",
            Method::Bsa => "bsa",
            Method::HoroPca => "horopca",
            Method::Hmds => "hmds",
        }
    }

    pub fn is_subspace(&self) -> bool {
        matches!(self, Method::Pca | Method::Tpca | Method::Pga | Method::Bsa)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// A linear subspace through the origin, optionally moved to another base
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    pub method: Method,
    /// `K` orthonormal ambient vectors.
    pub basis: Vec<Vec<f64>>,
    /// Origin unless perturbed.
    pub base: PoincarePoint,
    pub log_convention: LogConvention,
    /// Applied before projecting; identity unless auto-centered.
    pub centering: Reflection,
    /// `(iteration, objective)` per component for the optimized methods.
    pub trace: Vec<Vec<(usize, f64)>>,
    /// Per component, whether the ascent stopped before `max_iter`.
    pub converged: Vec<bool>,
    /// Solver settings of the optimized methods.
    pub config: Option<FitConfig>,
}

impl SubspaceModel {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    /// The method name, with a `-noise` suffix for a moved base point.
    pub fn label(&self) -> String {
        if self.base.norm() > 0.0 {
            format!("{}-noise", self.method)
        } else {
            self.method.to_string()
        }
    }

    fn prepared(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        let moved = Reflection::new(&self.base);
        Ok(data
            .points()
            .iter()
            .map(|x| moved.apply_raw(&self.centering.apply_raw(x.coords())))
            .collect())
    }

    fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|e| dot(e, x)).collect()
    }

    /// Reduced points in the `K`-dimensional ball.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let rows = self
            .prepared(data)?
            .iter()
            .map(|x| self.reduce(x))
            .collect::<Result<Vec<_>>>()?;
        let out = Dataset::from_rows(rows)?;
        match data.labels() {
            Some(l) => out.with_labels(l.to_vec()),
            None => Ok(out),
        }
    }

    fn reduce(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.method {
            Method::Pca => self.coords(x),
            Method::Tpca => {
                let v = ball_log_origin(x, self.log_convention);
                exp_origin(&self.coords(&v), self.log_convention)?.into_coords()
            }
            Method::Pga | Method::Bsa => {
                let h = ball_to_lorentz(x);
                let qs = self.coords(&h[1..]);
                let t = h[0];
                let denom = (t * t - norm_sq(&qs)).sqrt() + t;
                qs.iter().map(|v| v / denom).collect()
            }
            m => return Err(Error::Config(format!("{m} is not a subspace method"))),
        })
    }

    /// Projections as points of the ambient ball, on the (possibly moved)
    /// subspace.
    pub fn project(&self, data: &Dataset) -> Result<Dataset> {
        let moved = Reflection::new(&self.base);
        let rows = self
            .prepared(data)?
            .iter()
            .map(|x| {
                let c = self.reduce(x)?;
                let mut y = vec![0.0; self.dim()];
                for (a, e) in c.iter().zip(&self.basis) {
                    for (yi, ei) in y.iter_mut().zip(e) {
                        *yi += a * ei;
                    }
                }
                Ok(moved.apply_raw(&y))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::from_rows(rows)
    }
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "number of components must be in 1..={d}, got {k}"
        )));
    }
    Ok(())
}

/// Top `k` eigenvectors of the covariance of `rows` about their mean, with a
/// deterministic sign (largest entry positive).
pub(crate) fn principal_directions(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let c = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = c.transpose() * &c / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(k)
        .map(|j| {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            let big = v
                .iter()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect()
}

fn plain_model(
    method: Method,
    basis: Vec<Vec<f64>>,
    d: usize,
    conv: LogConvention,
) -> SubspaceModel {
    SubspaceModel {
        method,
        basis,
        base: PoincarePoint::origin(d),
        log_convention: conv,
        centering: Reflection::identity(d),
        trace: Vec::new(),
        converged: Vec::new(),
        config: None,
    }
}

/// Euclidean PCA on the ball coordinates. The transform projects onto the
/// span through the origin so outputs stay inside the ball.
pub fn pca_fit(data: &Dataset, k: usize) -> Result<SubspaceModel> {
    check_k(k, data.dim())?;
    let basis = principal_directions(&data.rows(), k);
    Ok(plain_model(
        Method::Pca,
        basis,
        data.dim(),
        LogConvention::Standard,
    ))
}

/// PCA of the log images at the origin.
pub fn tpca_fit(data: &Dataset, k: usize, conv: LogConvention) -> Result<SubspaceModel> {
    check_k(k, data.dim())?;
    let logs: Vec<Vec<f64>> = data
        .points()
        .iter()
        .map(|x| ball_log_origin(x.coords(), conv))
        .collect();
    let basis = principal_directions(&logs, k);
    Ok(plain_model(Method::Tpca, basis, data.dim(), conv))
}

/// Hyperboloid coordinates split as `(t, s)`.
struct Lifted {
    t: Vec<f64>,
    s: Vec<Vec<f64>>,
}

impl Lifted {
    fn new(rows: &[Vec<f64>]) -> Self {
        let mut t = Vec::with_capacity(rows.len());
        let mut s = Vec::with_capacity(rows.len());
        for r in rows {
            let h = ball_to_lorentz(r);
            t.push(h[0]);
            s.push(h[1..].to_vec());
        }
        Self { t, s }
    }

    /// `|Q s_i|^2` over the frozen directions.
    fn frozen_q(&self, frozen: &[Vec<f64>]) -> Vec<f64> {
        self.s
            .iter()
            .map(|s| frozen.iter().map(|e| dot(e, s).powi(2)).sum())
            .collect()
    }
}

/// `sum_i d(o, proj x_i)^2` and its gradient in the candidate direction.
fn pga_objective(l: &Lifted, base_q: &[f64], u: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = vec![0.0; if want_grad { u.len() } else { 0 }];
    for ((t, s), q0) in l.t.iter().zip(&l.s).zip(base_q) {
        let c = dot(u, s);
        let q = q0 + c * c;
        let gap = (t * t - q).max(f64::MIN_POSITIVE);
        let r = (q / gap).sqrt();
        let a = r.asinh();
        total += a * a;
        if want_grad {
            // d(a^2)/dq = (asinh r / r) t / gap^(3/2)
            let w = asinh_over_x(r) * t / gap.powf(1.5) * 2.0 * c;
            for (g, si) in grad.iter_mut().zip(s) {
                *g += w * si;
            }
        }
    }
    (total, grad)
}

/// `sum_i d(x_i, proj x_i)^2` and its gradient in the candidate direction.
fn bsa_objective(l: &Lifted, base_q: &[f64], u: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = vec![0.0; if want_grad { u.len() } else { 0 }];
    for (s, q0) in l.s.iter().zip(base_q) {
        let c = dot(u, s);
        let e = (norm_sq(s) - q0 - c * c).max(0.0).sqrt();
        let rho = e.asinh();
        total += rho * rho;
        if want_grad {
            // d(rho^2)/dq = -(asinh e / e) / sqrt(1 + e^2)
            let w = -asinh_over_x(e) / (1.0 + e * e).sqrt() * 2.0 * c;
            for (g, si) in grad.iter_mut().zip(s) {
                *g += w * si;
            }
        }
    }
    (total, grad)
}

fn geodesic_fit(method: Method, data: &Dataset, cfg: &FitConfig) -> Result<SubspaceModel> {
    let d = data.dim();
    cfg.validate(d)?;
    let (centered, centering) = require_centered(data, cfg.auto_center)?;
    let lifted = Lifted::new(&centered.rows());
    let mut frozen: Vec<Vec<f64>> = Vec::new();
    let mut traces = Vec::new();
    let mut converged = Vec::new();
    for k in 0..cfg.n_components {
        let base_q = lifted.frozen_q(&frozen);
        let mut rng = component_rng(cfg.seed, k);
        let mut best: Option<Ascent> = None;
        for _ in 0..cfg.restarts {
            let p0 = random_unit(&mut rng, d);
            let run = sphere_ascent(&p0, &frozen, cfg.ascent(), |u, g| {
                Some(match method {
                    Method::Pga => {
                        let (v, grad) = pga_objective(&lifted, &base_q, u, g);
                        log_score(v, grad, 1.0)
                    }
                    _ => {
                        let (v, grad) = bsa_objective(&lifted, &base_q, u, g);
                        log_score(v, grad, -1.0)
                    }
                })
            });
            if let Some(run) = run {
                if best.as_ref().is_none_or(|b| run.eval.score > b.eval.score) {
                    best = Some(run);
                }
            }
        }
        let best = best.ok_or_else(|| Error::Internal("no restart produced a direction".into()))?;
        frozen.push(best.p);
        converged.push(best.converged);
        traces.push(best.trace);
    }
    Ok(SubspaceModel {
        method,
        basis: frozen,
        base: PoincarePoint::origin(d),
        log_convention: LogConvention::Standard,
        centering,
        trace: traces,
        converged,
        config: Some(*cfg),
    })
}

/// `sign * ln(value)` with its gradient; zero values saturate.
fn log_score(value: f64, grad: Vec<f64>, sign: f64) -> Eval {
    if value > 0.0 {
        Eval {
            score: sign * value.ln(),
            grad: grad.iter().map(|g| sign * g / value).collect(),
            value,
        }
    } else {
        Eval {
            score: -sign * f64::INFINITY,
            grad: vec![0.0; grad.len()],
            value,
        }
    }
}

/// Greedy PGA: each new direction maximizes `sum d(o, proj x)^2`.
pub fn pga_fit(data: &Dataset, cfg: &FitConfig) -> Result<SubspaceModel> {
    geodesic_fit(Method::Pga, data, cfg)
}

/// Greedy BSA: each new direction minimizes `sum d(x, proj x)^2`.
pub fn bsa_fit(data: &Dataset, cfg: &FitConfig) -> Result<SubspaceModel> {
    geodesic_fit(Method::Bsa, data, cfg)
}

/// Moves the model's subspace to a random base point `exp_o(sigma z)`,
/// `z ~ N(0, I)`.
pub fn perturb_base(model: &SubspaceModel, sigma: f64, seed: u64) -> Result<SubspaceModel> {
    if !(sigma >= 0.0) {
        return Err(Error::Config("noise sigma must be nonnegative".into()));
    }
    let mut out = model.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = component_rng(seed, usize::MAX);
    let v: Vec<f64> = (0..model.dim())
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    out.base = exp_origin(&v, LogConvention::Standard)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmdsResult {
    pub data: Dataset,
    /// Largest relative pairwise error against the input distances.
    pub max_relative_error: f64,
    /// Root mean squared absolute pairwise error.
    pub rms_error: f64,
    /// Eigenvalues dropped or clipped, relative to the largest kept one.
    pub discarded_spectrum: f64,
}

/// Hyperbolic MDS. With `Y = cosh D`, a configuration whose spatial parts sum
/// to zero has time coordinates `x0 = Y 1 / sqrt(1^T Y 1)`, and its spatial
/// Gram matrix is `x0 x0^T - Y`; the top `k` eigenpairs give the points.
pub fn hmds(dm: &DistanceMatrix, k: usize) -> Result<HmdsResult> {
    if k == 0 {
        return Err(Error::Config("hMDS needs at least one dimension".into()));
    }
    let n = dm.len();
    let y = DMatrix::from_fn(n, n, |i, j| dm.get(i, j).cosh());
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("distances too large for cosh".into()));
    }
    let row_sums: Vec<f64> = (0..n).map(|i| y.row(i).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let x0: Vec<f64> = row_sums.iter().map(|r| r / total.sqrt()).collect();
    let g = DMatrix::from_fn(n, n, |i, j| x0[i] * x0[j] - y[(i, j)]);
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let top = eig.eigenvalues[order[0]].max(f64::MIN_POSITIVE);
    let mut discarded = 0.0f64;
    let mut coords = vec![vec![0.0; k]; n];
    for (c, &j) in order.iter().enumerate() {
        let lam = eig.eigenvalues[j];
        if c >= k || lam < 0.0 {
            discarded = discarded.max(lam.abs() / top);
            continue;
        }
        let s = lam.sqrt();
        for (i, row) in coords.iter_mut().enumerate() {
            row[c] = s * eig.eigenvectors[(i, j)];
        }
    }
    let rows: Vec<Vec<f64>> = coords
        .into_iter()
        .map(|s| {
            let r = norm_sq(&s);
            let f = 1.0 / (1.0 + (1.0 + r).sqrt());
            s.into_iter().map(|v| v * f).collect()
        })
        .collect();
    let data = Dataset::from_rows(rows)?;
    let pts = data.points();
    let mut max_rel = 0.0f64;
    let mut sq = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ball_distance(pts[i].coords(), pts[j].coords());
            let t = dm.get(i, j);
            sq += (d - t) * (d - t);
            pairs += 1;
            if t > 0.0 {
                max_rel = max_rel.max((d - t).abs() / t);
            } else if d > 0.0 {
                max_rel = f64::INFINITY;
            }
        }
    }
    Ok(HmdsResult {
        data,
        max_relative_error: max_rel,
        rms_error: if pairs > 0 {
            (sq / pairs as f64).sqrt()
        } else {
            0.0
        },
        discarded_spectrum: discarded,
    })
}
