//! HoroPCA: greedy choice of ideal points maximizing the distance variance of
//! horospherical projections, with the base point at the origin.

use serde::{Deserialize, Serialize};

use crate::baselines::principal_directions;
use crate::error::{Error, Result};
use crate::geometry::{
    ball_busemann, ball_log_origin, ball_to_lorentz, lorentz_distance, lorentz_to_ball, IdealPoint,
    LogConvention, Reflection,
};
use crate::linalg::{dot, norm_sq, x_over_sinh};
use crate::optim::{component_rng, random_unit, sphere_ascent, Ascent, AscentConfig, Eval};
use crate::projections::{
    independence_margin, orthonormalize, ComponentSet, HoroProjector, INDEPENDENCE_THRESHOLD,
};
use crate::stats::{distance_variance, frechet_mean, Dataset, FrechetConfig};

/// Largest Fréchet-mean norm accepted as "centered".
pub const CENTERED_TOL: f64 = 1e-4;

/// Finite-difference step on the candidate direction.
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_components: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub learning_rate: f64,
    pub tol: f64,
    pub seed: u64,
    /// Center the data first instead of rejecting uncentered input.
    pub auto_center: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_components: 2,
            restarts: 5,
            max_iter: 500,
            learning_rate: 0.05,
            tol: 1e-7,
            seed: 0,
            auto_center: false,
        }
    }
}

impl FitConfig {
    pub fn with_components(k: usize) -> Self {
        Self {
            n_components: k,
            ..Self::default()
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_components == 0 || self.n_components > d {
            return Err(Error::Config(format!(
                "number of components must be in 1..={d}, got {}",
                self.n_components
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn ascent(&self) -> AscentConfig {
        AscentConfig {
            lr: self.learning_rate,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Per-direction affine normalization of Busemann coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Whitening {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Whitening {
    /// Column means and population standard deviations of `coords`.
    pub fn fit(coords: &[Vec<f64>]) -> Result<Self> {
        let n = coords.len();
        let k = coords.first().map(Vec::len).unwrap_or(0);
        if n == 0 || k == 0 {
            return Err(Error::InvalidPoint("no coordinates to whiten".into()));
        }
        let mut mean = vec![0.0; k];
        for row in coords {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut scale = vec![0.0; k];
        for row in coords {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in scale.iter_mut().enumerate() {
            *s = (*s / n as f64).sqrt();
            if !(*s > 1e-12) {
                return Err(Error::DegenerateDirection(format!(
                    "direction {j} has zero variance on the training set"
                )));
            }
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, coords: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        coords
            .iter()
            .map(|row| {
                if row.len() != self.mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.mean.len(),
                        got: row.len(),
                    });
                }
                Ok(row
                    .iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub components: ComponentSet,
    /// `(iteration, variance)` pairs of the winning restart, per component.
    pub objective_trace: Vec<Vec<(usize, f64)>>,
    /// Distance variance of the projections onto the first `k + 1` components.
    pub explained: Vec<f64>,
    /// Whether the ascent for each component stopped before `max_iter`.
    pub converged: Vec<bool>,
    /// Applied to every input before projecting; identity unless auto-centered.
    pub centering: Reflection,
    pub config: FitConfig,
    pub whitening: Option<Whitening>,
}

impl FittedModel {
    pub fn dim(&self) -> usize {
        self.components.dim()
    }

    pub fn k(&self) -> usize {
        self.components.k()
    }

    /// False if adding a component ever lowered the explained variance.
    pub fn explained_is_monotone(&self) -> bool {
        self.explained
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs())
    }

    fn check_dim(&self, data: &Dataset) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        Ok(())
    }

    fn prepared(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_dim(data)?;
        Ok(data
            .points()
            .iter()
            .map(|x| self.centering.apply_raw(x.coords()))
            .collect())
    }

    /// Horospherical projections, still in the ambient ball.
    pub fn project(&self, data: &Dataset) -> Result<Dataset> {
        let proj = HoroProjector::new(&self.components)?;
        let rows = self.prepared(data)?;
        let out = rows.iter().map(|x| proj.project_raw(x)).collect();
        relabel(Dataset::from_rows(out)?, data)
    }

    /// Projections expressed in an orthonormal basis of the span of the
    /// components: points of the `K`-dimensional ball.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let proj = HoroProjector::new(&self.components)?;
        let dirs: Vec<Vec<f64>> = self
            .components
            .directions()
            .iter()
            .map(|p| p.coords().to_vec())
            .collect();
        let q = orthonormalize(&dirs)?;
        let out = self
            .prepared(data)?
            .iter()
            .map(|x| {
                let y = proj.project_raw(x);
                q.iter().map(|e| dot(e, &y)).collect()
            })
            .collect();
        relabel(Dataset::from_rows(out)?, data)
    }

    /// `B_{p_j}(x_i)` for every point and component.
    pub fn busemann_coordinates(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .prepared(data)?
            .iter()
            .map(|x| {
                self.components
                    .directions()
                    .iter()
                    .map(|p| ball_busemann(p.coords(), x))
                    .collect()
            })
            .collect())
    }

    /// Whitens the Busemann coordinates of `apply` with statistics of `train`.
    pub fn whiten(&self, train: &Dataset, apply: &Dataset) -> Result<(Vec<Vec<f64>>, Whitening)> {
        let w = Whitening::fit(&self.busemann_coordinates(train)?)?;
        let out = w.apply(&self.busemann_coordinates(apply)?)?;
        Ok((out, w))
    }
}

fn relabel(out: Dataset, like: &Dataset) -> Result<Dataset> {
    match like.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

/// Same as [`FittedModel::whiten`].
pub fn whiten(
    model: &FittedModel,
    train: &Dataset,
    apply: &Dataset,
) -> Result<(Vec<Vec<f64>>, Whitening)> {
    model.whiten(train, apply)
}

/// Rejects data whose Fréchet mean is not at the origin, or centers it when
/// `auto_center` is set.
pub fn require_centered(data: &Dataset, auto_center: bool) -> Result<(Dataset, Reflection)> {
    let fm = frechet_mean(data, &FrechetConfig::default());
    if !fm.converged {
        return Err(Error::NotConverged {
            iterations: fm.iterations,
            grad_norm: fm.grad_norm,
        });
    }
    let m = fm.mean.norm();
    if m <= CENTERED_TOL {
        return Ok((data.clone(), Reflection::identity(data.dim())));
    }
    if !auto_center {
        return Err(Error::NotCentered(m));
    }
    let refl = Reflection::new(&fm.mean);
    Ok((data.try_map(|x| refl.apply(x))?, refl))
}

/// `(1/n^2) sum_{i,j} d(y_i, y_j)^2` for hyperboloid points.
pub(crate) fn lorentz_variance(ys: &[Vec<f64>]) -> f64 {
    let n = ys.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lorentz_distance(&ys[i], &ys[j]);
            acc += d * d;
        }
    }
    2.0 * acc / (n * n) as f64
}

/// Variance together with its gradient in the ambient coordinates of each
/// point: `(4/n^2) sum_i (d_ij / sinh d_ij) (-J y_i)`.
fn lorentz_variance_grad(ys: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
    let n = ys.len();
    let len = ys[0].len();
    let mut grads = vec![vec![0.0; len]; n];
    let mut acc = 0.0;
    let c = 4.0 / (n * n) as f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lorentz_distance(&ys[i], &ys[j]);
            acc += d * d;
            let w = c * x_over_sinh(d);
            // -J y = (y_0, -y_1, ..)
            grads[j][0] += w * ys[i][0];
            grads[i][0] += w * ys[j][0];
            for a in 1..len {
                grads[j][a] -= w * ys[i][a];
                grads[i][a] -= w * ys[j][a];
            }
        }
    }
    (2.0 * acc / (n * n) as f64, grads)
}

fn component_set(dirs: &[Vec<f64>]) -> Option<ComponentSet> {
    let ideal = dirs
        .iter()
        .map(|p| IdealPoint::new(p.clone()))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    ComponentSet::at_origin(ideal).ok()
}

fn project_lorentz(dirs: &[Vec<f64>], data: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let proj = HoroProjector::new(&component_set(dirs)?).ok()?;
    Some(data.iter().map(|x| proj.project_lorentz(x)).collect())
}

/// Distance variance of the projections of `data` (hyperboloid coordinates)
/// onto `GH(o, dirs)`.
pub(crate) fn projected_variance(dirs: &[Vec<f64>], data: &[Vec<f64>]) -> Option<f64> {
    project_lorentz(dirs, data).map(|ys| lorentz_variance(&ys))
}

/// With one direction and the base at the origin, projections are points
/// `-B_p(x)` along a geodesic, so the variance is `2 Var(B_p(x))`.
pub(crate) fn single_direction_variance(p: &[f64], data: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = data.len() as f64;
    let betas: Vec<f64> = data.iter().map(|x| ball_busemann(p, x)).collect();
    let mean = betas.iter().sum::<f64>() / n;
    let var = betas.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n;
    let mut grad = vec![0.0; p.len()];
    for (x, b) in data.iter().zip(&betas) {
        let diff: Vec<f64> = p.iter().zip(x).map(|(a, c)| a - c).collect();
        let w = 8.0 * (b - mean) / (n * norm_sq(&diff));
        for (g, v) in grad.iter_mut().zip(&diff) {
            *g += w * v;
        }
    }
    (2.0 * var, grad)
}

fn log_eval(value: f64, grad: Vec<f64>) -> Eval {
    if value > 0.0 {
        let g = grad.iter().map(|g| g / value).collect();
        Eval {
            score: value.ln(),
            grad: g,
            value,
        }
    } else {
        Eval {
            score: f64::NEG_INFINITY,
            grad: vec![0.0; grad.len()],
            value,
        }
    }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = norm_sq(&v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Objective (and gradient) for a candidate `p` added to `frozen`.
fn candidate_eval(
    frozen: &[Vec<f64>],
    p: &[f64],
    ball: &[Vec<f64>],
    lorentz: &[Vec<f64>],
    want_grad: bool,
) -> Option<Eval> {
    if frozen.is_empty() {
        let (v, g) = single_direction_variance(p, ball);
        return Some(log_eval(v, g));
    }
    let mut dirs = frozen.to_vec();
    dirs.push(p.to_vec());
    let ys = project_lorentz(&dirs, lorentz)?;
    if !want_grad {
        return Some(log_eval(lorentz_variance(&ys), Vec::new()));
    }
    let (value, outer) = lorentz_variance_grad(&ys);
    let d = p.len();
    let mut grad = vec![0.0; d];
    for (a, g) in grad.iter_mut().enumerate() {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[a] += FD_STEP;
        minus[a] -= FD_STEP;
        dirs.pop();
        dirs.push(normalize(plus));
        let yp = project_lorentz(&dirs, lorentz)?;
        dirs.pop();
        dirs.push(normalize(minus));
        let ym = project_lorentz(&dirs, lorentz)?;
        let mut s = 0.0;
        for ((gj, a), b) in outer.iter().zip(&yp).zip(&ym) {
            for ((gv, av), bv) in gj.iter().zip(a).zip(b) {
                s += gv * (av - bv);
            }
        }
        *g = s / (2.0 * FD_STEP);
    }
    Some(log_eval(value, grad))
}

/// `v` with the frozen span removed, if it gives an admissible component set.
fn admissible(
    mut v: Vec<f64>,
    frozen: &[Vec<f64>],
    q: &[Vec<f64>],
    base: &[f64],
) -> Option<Vec<f64>> {
    crate::optim::project_out(&mut v, q);
    if norm_sq(&v).sqrt() < 1e-8 {
        return None;
    }
    let v = normalize(v);
    let mut all: Vec<&[f64]> = frozen.iter().map(Vec::as_slice).collect();
    all.push(&v);
    (independence_margin(&all, base) >= INDEPENDENCE_THRESHOLD).then_some(v)
}

/// Starting directions: both ends of the leading principal axis of the log
/// images (orthogonal to the frozen span), then random directions.
fn initial_directions(
    rng: &mut rand_chacha::ChaCha8Rng,
    frozen: &[Vec<f64>],
    logs: &[Vec<f64>],
    restarts: usize,
) -> Vec<Vec<f64>> {
    let d = logs[0].len();
    let base = vec![0.0; d];
    let q = if frozen.is_empty() {
        Vec::new()
    } else {
        match orthonormalize(frozen) {
            Ok(q) => q,
            Err(_) => return Vec::new(),
        }
    };
    let residual: Vec<Vec<f64>> = logs
        .iter()
        .map(|v| {
            let mut v = v.clone();
            crate::optim::project_out(&mut v, &q);
            v
        })
        .collect();
    let axis = principal_directions(&residual, 1).remove(0);
    let mut out = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let start = match r {
            0 => admissible(axis.clone(), frozen, &q, &base),
            1 => admissible(axis.iter().map(|a| -a).collect(), frozen, &q, &base),
            _ => None,
        };
        let start = start
            .or_else(|| (0..2).find_map(|_| admissible(random_unit(rng, d), frozen, &q, &base)));
        out.extend(start);
    }
    out
}

/// Fits `cfg.n_components` ideal points greedily.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<FittedModel> {
    let d = data.dim();
    cfg.validate(d)?;
    if data.len() < 2 {
        return Err(Error::InvalidPoint(
            "need at least two points to fit".into(),
        ));
    }
    if distance_variance(data) == 0.0 {
        return Err(Error::ZeroVariance("all points coincide".into()));
    }
    let (centered, centering) = require_centered(data, cfg.auto_center)?;
    let ball = centered.rows();
    let lorentz: Vec<Vec<f64>> = ball.iter().map(|x| ball_to_lorentz(x)).collect();
    let logs: Vec<Vec<f64>> = ball
        .iter()
        .map(|x| ball_log_origin(x, LogConvention::Standard))
        .collect();

    let mut frozen: Vec<Vec<f64>> = Vec::new();
    let mut traces = Vec::new();
    let mut explained = Vec::new();
    let mut converged = Vec::new();
    for k in 0..cfg.n_components {
        let mut rng = component_rng(cfg.seed, k);
        let mut best: Option<Ascent> = None;
        for p0 in initial_directions(&mut rng, &frozen, &logs, cfg.restarts) {
            let run = sphere_ascent(&p0, &[], cfg.ascent(), |p, g| {
                candidate_eval(&frozen, p, &ball, &lorentz, g)
            });
            if let Some(run) = run {
                if best.as_ref().is_none_or(|b| run.eval.score > b.eval.score) {
                    best = Some(run);
                }
            }
        }
        let best = best.ok_or_else(|| {
            Error::InvalidComponents(format!("no admissible direction found for component {k}"))
        })?;
        frozen.push(best.p);
        let value = projected_variance(&frozen, &lorentz)
            .ok_or_else(|| Error::Internal("fitted components lost independence".into()))?;
        explained.push(value);
        converged.push(best.converged);
        traces.push(best.trace);
    }

    let directions = frozen
        .into_iter()
        .map(IdealPoint::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedModel {
        components: ComponentSet::at_origin(directions)?,
        objective_trace: traces,
        explained,
        converged,
        centering,
        config: *cfg,
        whitening: None,
    })
}

/// Builds a model around given components without fitting.
pub fn model_from_components(components: ComponentSet, data: &Dataset) -> Result<FittedModel> {
    if components.base().norm() != 0.0 {
        return Err(Error::InvalidComponents(
            "base point must be the origin".into(),
        ));
    }
    let lorentz: Vec<Vec<f64>> = data
        .points()
        .iter()
        .map(|x| ball_to_lorentz(x.coords()))
        .collect();
    let dirs: Vec<Vec<f64>> = components
        .directions()
        .iter()
        .map(|p| p.coords().to_vec())
        .collect();
    let explained = (1..=dirs.len())
        .map(|k| projected_variance(&dirs[..k], &lorentz).unwrap_or(f64::NAN))
        .collect();
    Ok(FittedModel {
        config: FitConfig::with_components(components.k()),
        centering: Reflection::identity(components.dim()),
        components,
        objective_trace: Vec::new(),
        explained,
        converged: Vec::new(),
        whitening: None,
    })
}

/// Maps hyperboloid points back to the ball; exposed for diagnostics.
pub fn project_points(components: &ComponentSet, data: &Dataset) -> Result<Dataset> {
    let proj = HoroProjector::new(components)?;
    let rows = data
        .points()
        .iter()
        .map(|x| lorentz_to_ball(&proj.project_lorentz(&ball_to_lorentz(x.coords()))))
        .collect();
    relabel(Dataset::from_rows(rows)?, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PoincarePoint;
    use crate::io::{generate, GeneratorSpec};
    use crate::linalg::line_angle;
    use crate::stats::{average_distortion, center};
    use approx::assert_abs_diff_eq;

    fn centered(n: usize, cov: Vec<f64>, seed: u64) -> Dataset {
        let ds = generate(&GeneratorSpec::tangent_gaussian(n, cov, seed)).unwrap();
        center(&ds, &FrechetConfig::default()).unwrap().0
    }

    fn tight(k: usize) -> FitConfig {
        FitConfig {
            tol: 1e-11,
            max_iter: 2000,
            ..FitConfig::with_components(k)
        }
    }

    fn rotate(ds: &Dataset, a: f64) -> Dataset {
        let (c, s) = (a.cos(), a.sin());
        ds.try_map(|p| {
            let x = p.coords();
            let mut y = x.to_vec();
            y[0] = c * x[0] - s * x[1];
            y[1] = s * x[0] + c * x[1];
            PoincarePoint::new(y)
        })
        .unwrap()
    }

    #[test]
    fn diameter_data_k1() {
        let ds = Dataset::from_rows(vec![
            vec![-0.6, 0.0],
            vec![-0.1, 0.0],
            vec![0.1, 0.0],
            vec![0.6, 0.0],
        ])
        .unwrap();
        let m = fit(&ds, &tight(1)).unwrap();
        let p = m.components.directions()[0].coords();
        assert!(line_angle(p, &[1.0, 0.0]) < 1e-3, "{p:?}");
        let total = distance_variance(&ds);
        assert!((m.explained[0] - total).abs() < 1e-6 * total);
    }

    #[test]
    fn closed_form_matches_projection_route() {
        let ds = centered(60, vec![0.5, 0.2, 0.1], 1);
        let ball = ds.rows();
        let lorentz: Vec<Vec<f64>> = ball.iter().map(|x| ball_to_lorentz(x)).collect();
        let p = normalize(vec![0.3, -0.8, 0.5]);
        let (v, g) = single_direction_variance(&p, &ball);
        let w = projected_variance(std::slice::from_ref(&p), &lorentz).unwrap();
        assert!((v - w).abs() < 1e-9);
        let h = 1e-6;
        for a in 0..3 {
            let (mut up, mut dn) = (p.clone(), p.clone());
            up[a] += h;
            dn[a] -= h;
            let fd = (single_direction_variance(&up, &ball).0
                - single_direction_variance(&dn, &ball).0)
                / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn two_component_gradient() {
        let ds = centered(40, vec![0.6, 0.3, 0.2], 2);
        let ball = ds.rows();
        let lorentz: Vec<Vec<f64>> = ball.iter().map(|x| ball_to_lorentz(x)).collect();
        let frozen = vec![normalize(vec![1.0, 0.1, 0.0])];
        let p = normalize(vec![0.2, 0.9, 0.4]);
        let e = candidate_eval(&frozen, &p, &ball, &lorentz, true).unwrap();
        // the gradient is tangential; compare directional derivatives along
        // great circles
        for dir in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.3, -0.2, 0.5]] {
            let c = dot(&dir, &p);
            let t: Vec<f64> = dir.iter().zip(&p).map(|(a, b)| a - c * b).collect();
            let h = 1e-5;
            let at = |s: f64| {
                let q = normalize(p.iter().zip(&t).map(|(a, b)| a + s * b).collect());
                candidate_eval(&frozen, &q, &ball, &lorentz, false)
                    .unwrap()
                    .score
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let an = dot(&e.grad, &t);
            assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn anisotropic_cloud_against_sweep() {
        // Centered by Mobius translation, which keeps the generator's axes.
        let raw = generate(&GeneratorSpec::tangent_gaussian(300, vec![4.0, 1.0], 4)).unwrap();
        let mu = crate::stats::frechet_mean(&raw, &FrechetConfig::default()).mean;
        let neg: Vec<f64> = mu.coords().iter().map(|v| -v).collect();
        let ds = raw
            .try_map(|p| PoincarePoint::new(crate::geometry::mobius_add(&neg, p.coords())))
            .unwrap();
        let m = fit(&ds, &FitConfig::with_components(1)).unwrap();
        let p = m.components.directions()[0].coords();
        assert!(line_angle(p, &[1.0, 0.0]).to_degrees() < 5.0, "{p:?}");
        let ball = ds.rows();
        let best = (0..360)
            .map(|deg| {
                let a = (deg as f64).to_radians();
                (single_direction_variance(&[a.cos(), a.sin()], &ball).0, a)
            })
            .fold((f64::MIN, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
        assert!(m.explained[0] >= best.0 - 1e-12);
        let sweep_dir = [best.1.cos(), best.1.sin()];
        assert!(dot(p, &sweep_dir) > 0.0);
        assert!(line_angle(p, &sweep_dir).to_degrees() < 1.0);
    }

    #[test]
    fn rotation_equivariance() {
        let ds = centered(150, vec![2.0, 0.5, 0.1], 4);
        let a = 0.7;
        let cfg = FitConfig {
            tol: 1e-14,
            ..tight(2)
        };
        let m = fit(&ds, &cfg).unwrap();
        let r = fit(&rotate(&ds, a), &cfg).unwrap();
        assert!((m.explained[1] - r.explained[1]).abs() < 1e-9 * m.explained[1]);
        for (p, q) in m
            .components
            .directions()
            .iter()
            .zip(r.components.directions())
        {
            let p = p.coords();
            let rp = [
                a.cos() * p[0] - a.sin() * p[1],
                a.sin() * p[0] + a.cos() * p[1],
                p[2],
            ];
            let ang = dot(&rp, q.coords()).clamp(-1.0, 1.0).acos();
            assert!(ang < 1e-3, "{rp:?} vs {:?}", q.coords());
        }
    }

    #[test]
    fn greedy_nesting_and_determinism() {
        let ds = centered(80, vec![1.0, 0.5, 0.3, 0.1], 5);
        let cfg3 = FitConfig {
            seed: 9,
            ..FitConfig::with_components(3)
        };
        let cfg2 = FitConfig {
            seed: 9,
            ..FitConfig::with_components(2)
        };
        let a = fit(&ds, &cfg3).unwrap();
        let b = fit(&ds, &cfg2).unwrap();
        assert_eq!(&a.components.directions()[..2], b.components.directions());
        assert_eq!(a, fit(&ds, &cfg3).unwrap());
        for tr in &a.objective_trace {
            assert!(tr.windows(2).all(|w| w[1].1 >= w[0].1));
        }
        let total = distance_variance(&ds);
        assert!(a.explained.iter().all(|e| *e <= total + 1e-8));
    }

    #[test]
    fn transform_contracts() {
        let ds = centered(50, vec![0.8, 0.4, 0.2], 6);
        let full = fit(&ds, &FitConfig::with_components(3)).unwrap();
        let out = full.transform(&ds).unwrap();
        assert!(average_distortion(&ds, &out).unwrap() < 1e-8);

        let m = fit(&ds, &FitConfig::with_components(2)).unwrap();
        let out = m.transform(&ds).unwrap();
        assert_eq!(out.dim(), 2);
        let proj = m.project(&ds).unwrap();
        assert!((distance_variance(&out) - m.explained[1]).abs() < 1e-8);
        assert!((distance_variance(&proj) - distance_variance(&out)).abs() < 1e-9);
        let o = Dataset::new(vec![PoincarePoint::origin(3)]).unwrap();
        let t = m.transform(&o).unwrap();
        assert!(t.points()[0].norm() < 1e-12);
        // Busemann coordinates survive the projection
        let (bx, by) = (
            m.busemann_coordinates(&ds).unwrap(),
            m.busemann_coordinates(&proj).unwrap(),
        );
        for (r, s) in bx.iter().zip(&by) {
            for (u, v) in r.iter().zip(s) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn busemann_coordinate_examples() {
        let comps = ComponentSet::at_origin(vec![
            IdealPoint::new(vec![1.0, 0.0]).unwrap(),
            IdealPoint::new(vec![0.0, 1.0]).unwrap(),
        ])
        .unwrap();
        let ds = Dataset::from_rows(vec![vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let m = model_from_components(comps, &ds).unwrap();
        let b = m.busemann_coordinates(&ds).unwrap();
        assert_eq!(b[0], vec![0.0, 0.0]);
        assert_abs_diff_eq!(b[1][0], -(3f64.ln()), epsilon = 1e-15);
    }

    #[test]
    fn whitening_contract() {
        let ds = centered(120, vec![1.0, 0.4, 0.2], 7);
        let m = fit(&ds, &FitConfig::with_components(2)).unwrap();
        let (w, stats) = m.whiten(&ds, &ds).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = w.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / 120.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 120.0;
            assert!(mean.abs() <= 1e-9);
            assert!((var - 1.0).abs() <= 1e-9);
        }
        let twice = stats.apply(&w).unwrap();
        assert!(twice.iter().zip(&w).any(|(a, b)| a != b));
        let at_mean = stats.apply(std::slice::from_ref(&stats.mean)).unwrap();
        assert_eq!(at_mean[0], vec![0.0, 0.0]);
        let flat = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
        assert!(matches!(
            Whitening::fit(&flat),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn input_validation() {
        let ds = generate(&GeneratorSpec::tangent_gaussian(30, vec![0.3, 0.3], 8)).unwrap();
        let moved = ds
            .try_map(|p| PoincarePoint::new(crate::geometry::mobius_add(&[0.4, 0.0], p.coords())))
            .unwrap();
        assert!(matches!(
            fit(&moved, &FitConfig::with_components(1)),
            Err(Error::NotCentered(_))
        ));
        let cfg = FitConfig {
            auto_center: true,
            ..FitConfig::with_components(1)
        };
        let m = fit(&moved, &cfg).unwrap();
        assert!(!m.centering.is_identity());
        let same = Dataset::from_rows(vec![vec![0.0, 0.0]; 3]).unwrap();
        assert!(matches!(fit(&same, &cfg), Err(Error::ZeroVariance(_))));
        assert!(matches!(
            fit(&ds, &FitConfig::with_components(3)),
            Err(Error::Config(_))
        ));
        let zero_restarts = FitConfig {
            restarts: 0,
            ..FitConfig::with_components(1)
        };
        assert!(fit(&ds, &zero_restarts).is_err());
    }
}
