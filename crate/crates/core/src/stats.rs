//! Intrinsic statistics of point sets in the Poincaré ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_distance, ball_log_origin, exp_origin, mobius_add, LogConvention, PoincarePoint,
    Reflection,
};
use crate::linalg::{norm, scale};

/// An ordered set of points of equal dimension, with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<PoincarePoint>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Vec<PoincarePoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidPoint("dataset must contain at least one point".into()))?;
        let d = first.dim();
        if let Some(bad) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        Ok(Self {
            points,
            labels: None,
        })
    }

    /// Builds a dataset from raw rows, validating every row.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let points = rows
            .into_iter()
            .map(PoincarePoint::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn points(&self) -> &[PoincarePoint] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.coords().to_vec()).collect()
    }

    /// Applies `f` to every point, keeping labels.
    pub fn try_map<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(&PoincarePoint) -> Result<PoincarePoint>,
    {
        let points = self.points.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        let mut out = Dataset::new(points)?;
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// Settings of the Riemannian gradient descent behind [`frechet_mean`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetConfig {
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FrechetConfig {
    fn default() -> Self {
        Self {
            step: 0.2,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetResult {
    pub mean: PoincarePoint,
    pub variance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Objective `(1/n) sum d^2` after each accepted step, starting with the initial point.
    /// Non-increasing up to a relative rounding slack of 1e-13.
    pub objective_trace: Vec<f64>,
}

/// Relative objective change treated as rounding noise.
const OBJECTIVE_RESOLUTION: f64 = 1e-13;

fn mean_sq_distance(points: &[PoincarePoint], mu: &[f64]) -> f64 {
    let n = points.len() as f64;
    points
        .iter()
        .map(|x| {
            let d = ball_distance(x.coords(), mu);
            d * d
        })
        .sum::<f64>()
        / n
}

/// Mean of the log images of the points, taken in the frame translated to `mu`.
fn mean_log_at(points: &[PoincarePoint], mu: &[f64]) -> Vec<f64> {
    let neg_mu = scale(mu, -1.0);
    let mut acc = vec![0.0; mu.len()];
    for x in points {
        let y = mobius_add(&neg_mu, x.coords());
        let v = ball_log_origin(&y, LogConvention::Standard);
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += b;
        }
    }
    let n = points.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Fréchet mean by Riemannian gradient descent on `(1/n) sum d(x, mu)^2`.
///
/// Starts from the exp-map of the averaged origin log images. A step that would
/// increase the objective is rejected and the step size halved; accepted steps
/// let it grow back up to `cfg.step`. Failure to reach
/// `tol` returns the best iterate with `converged = false`.
pub fn frechet_mean(data: &Dataset, cfg: &FrechetConfig) -> FrechetResult {
    let points = data.points();
    let d = data.dim();
    let mut init = vec![0.0; d];
    for x in points {
        let v = ball_log_origin(x.coords(), LogConvention::Standard);
        for (a, b) in init.iter_mut().zip(&v) {
            *a += b;
        }
    }
    init.iter_mut().for_each(|a| *a /= points.len() as f64);
    let mut mu = exp_origin(&init, LogConvention::Standard)
        .map(PoincarePoint::into_coords)
        .unwrap_or_else(|_| points[0].coords().to_vec());

    let mut obj = mean_sq_distance(points, &mu);
    let mut trace = vec![obj];
    let mut step = cfg.step;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let v = mean_log_at(points, &mu);
        // Riemannian gradient of the objective is -2 v.
        grad_norm = 2.0 * norm(&v);
        if grad_norm <= cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while step > 1e-12 {
            let delta = scale(&v, 2.0 * step);
            let Ok(e) = exp_origin(&delta, LogConvention::Standard) else {
                step *= 0.5;
                continue;
            };
            let cand = mobius_add(&mu, e.coords());
            if PoincarePoint::new(cand.clone()).is_err() {
                step *= 0.5;
                continue;
            }
            let cand_obj = mean_sq_distance(points, &cand);
            // Once the decrease drops below f64 resolution of the objective,
            // judge the step by the gradient norm instead.
            let unresolved = (cand_obj - obj).abs() <= OBJECTIVE_RESOLUTION * obj
                && 2.0 * norm(&mean_log_at(points, &cand)) < grad_norm;
            if cand_obj <= obj || unresolved {
                mu = cand;
                obj = cand_obj;
                trace.push(obj);
                accepted = true;
                step = (step * 2.0).min(cfg.step);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent step left; the gradient is below what f64 can resolve.
            let v = mean_log_at(points, &mu);
            grad_norm = 2.0 * norm(&v);
            converged = grad_norm <= cfg.tol;
            break;
        }
    }
    FrechetResult {
        mean: PoincarePoint::new(mu).expect("iterates stay inside the ball"),
        variance: obj,
        iterations,
        converged,
        grad_norm,
        objective_trace: trace,
    }
}

/// `(1/n) sum d(x, mu)^2` at the Fréchet mean.
pub fn frechet_variance(data: &Dataset) -> f64 {
    frechet_mean(data, &FrechetConfig::default()).variance
}

/// `(1/n^2) sum_{x, y} d(x, y)^2`, diagonal included.
pub fn distance_variance(data: &Dataset) -> f64 {
    let pts = data.points();
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ball_distance(pts[i].coords(), pts[j].coords());
            acc += d * d;
        }
    }
    2.0 * acc / (n * n) as f64
}

/// Moves the Fréchet mean to the origin with a hyperbolic reflection.
///
/// The reflection is returned so held-out points can be mapped the same way.
pub fn center(data: &Dataset, cfg: &FrechetConfig) -> Result<(Dataset, Reflection)> {
    let fm = frechet_mean(data, cfg);
    if !fm.converged {
        return Err(Error::NotConverged {
            iterations: fm.iterations,
            grad_norm: fm.grad_norm,
        });
    }
    let refl = Reflection::new(&fm.mean);
    let out = data.try_map(|x| refl.apply(x))?;
    Ok((out, refl))
}

/// Mean relative pairwise distance error of `mapped` against `source`, over
/// all unordered pairs. Points are paired by index.
pub fn average_distortion(source: &Dataset, mapped: &Dataset) -> Result<f64> {
    let n = source.len();
    if mapped.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mapped.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidPoint(
            "average distortion needs at least two points".into(),
        ));
    }
    let (s, m) = (source.points(), mapped.points());
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ball_distance(s[i].coords(), s[j].coords());
            if d == 0.0 {
                return Err(Error::DegeneratePair { i, j });
            }
            let dm = ball_distance(m[i].coords(), m[j].coords());
            acc += (dm - d).abs() / d;
        }
    }
    Ok(acc / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::poincare_distance;
    use approx::assert_abs_diff_eq;

    fn ds(rows: &[&[f64]]) -> Dataset {
        Dataset::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::from_rows(vec![vec![0.0, 0.0], vec![0.0]]).is_err());
        assert!(Dataset::from_rows(vec![vec![1.0, 0.0]]).is_err());
        assert!(ds(&[&[0.0]]).with_labels(vec![]).is_err());
    }

    #[test]
    fn singleton_mean_and_variance() {
        let s = ds(&[&[0.3, -0.2]]);
        let r = frechet_mean(&s, &FrechetConfig::default());
        assert!(r.converged);
        assert_abs_diff_eq!(r.mean.coords()[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.mean.coords()[1], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(frechet_variance(&s), 0.0, epsilon = 1e-20);
        assert_eq!(distance_variance(&s), 0.0);
    }

    #[test]
    fn symmetric_pair() {
        let s = ds(&[&[0.3, 0.0], &[-0.3, 0.0]]);
        let r = frechet_mean(&s, &FrechetConfig::default());
        assert!(r.mean.norm() < 1e-12);
        let d0 = 2.0 * 0.3f64.atanh();
        assert_abs_diff_eq!(frechet_variance(&s), d0 * d0, epsilon = 1e-12);
        assert_abs_diff_eq!(frechet_variance(&s), 0.383_210, epsilon = 1e-5);
        assert_abs_diff_eq!(
            distance_variance(&s),
            0.5 * (2.0 * d0).powi(2),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(distance_variance(&s), 0.766_419, epsilon = 1e-5);
    }

    /// Brute-force minimization of the summed squared distance along the segment.
    fn grid_argmin(a: f64, b: f64, pts: &[PoincarePoint]) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let n = 200_000;
        for k in 0..=n {
            let t = a + (b - a) * k as f64 / n as f64;
            let y = PoincarePoint::new(vec![t, 0.0]).unwrap();
            let f: f64 = pts.iter().map(|x| poincare_distance(x, &y).powi(2)).sum();
            if f < best.0 {
                best = (f, t);
            }
        }
        best.1
    }

    #[test]
    fn two_point_mean_is_midpoint() {
        let s = ds(&[&[0.5, 0.0], &[0.0, 0.0]]);
        let r = frechet_mean(&s, &FrechetConfig::default());
        assert!(r.converged);
        let expected = (3f64.ln() / 4.0).tanh();
        assert_abs_diff_eq!(expected, 0.267_949, epsilon = 1e-6);
        assert_abs_diff_eq!(r.mean.coords()[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(r.mean.coords()[1], 0.0, epsilon = 1e-12);
        let grid = grid_argmin(0.0, 0.5, s.points());
        assert_abs_diff_eq!(r.mean.coords()[0], grid, epsilon = 1e-5);
    }

    #[test]
    fn objective_is_monotone() {
        let s = ds(&[&[0.9, 0.0], &[0.0, 0.85], &[-0.2, 0.1], &[0.7, 0.6]]);
        let r = frechet_mean(&s, &FrechetConfig::default());
        assert!(r.converged, "{r:?}");
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-13));
        }
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let s = ds(&[&[0.9, 0.0], &[0.0, 0.85], &[-0.2, 0.1]]);
        let cfg = FrechetConfig {
            max_iter: 2,
            ..Default::default()
        };
        let r = frechet_mean(&s, &cfg);
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(matches!(center(&s, &cfg), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn variance_is_order_invariant() {
        let a = ds(&[&[0.1, 0.2], &[-0.4, 0.3], &[0.5, -0.5]]);
        let b = ds(&[&[0.5, -0.5], &[0.1, 0.2], &[-0.4, 0.3]]);
        assert_abs_diff_eq!(frechet_variance(&a), frechet_variance(&b), epsilon = 1e-12);
        assert_abs_diff_eq!(
            distance_variance(&a),
            distance_variance(&b),
            epsilon = 1e-12
        );
    }

    #[test]
    fn centering_midpoint_pair() {
        let s = ds(&[&[0.5, 0.0], &[0.0, 0.0]]);
        let (c, _) = center(&s, &FrechetConfig::default()).unwrap();
        let m = frechet_mean(&c, &FrechetConfig::default());
        assert!(m.mean.norm() < 1e-9);
        assert_abs_diff_eq!(
            poincare_distance(&c.points()[0], &c.points()[1]),
            2.0 * 0.5f64.atanh(),
            epsilon = 1e-12
        );
        // Symmetric about the origin after centering.
        assert_abs_diff_eq!(c.points()[0].norm(), c.points()[1].norm(), epsilon = 1e-12);
    }

    #[test]
    fn centering_centered_data_is_identity() {
        let s = ds(&[&[0.3, 0.1], &[-0.3, -0.1]]);
        let (c, refl) = center(&s, &FrechetConfig::default()).unwrap();
        assert!(refl.center().iter().all(|v| v.abs() < 1e-12));
        for (a, b) in c.points().iter().zip(s.points()) {
            for (u, v) in a.coords().iter().zip(b.coords()) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn distortion_examples() {
        let s = ds(&[&[0.0, 0.0], &[0.5, 0.0]]);
        assert_eq!(average_distortion(&s, &s).unwrap(), 0.0);
        let half = (3f64.ln() / 4.0).tanh();
        let m = ds(&[&[0.0], &[half]]);
        assert_abs_diff_eq!(average_distortion(&s, &m).unwrap(), 0.5, epsilon = 1e-12);
        let dup = ds(&[&[0.1, 0.0], &[0.2, 0.0], &[0.1, 0.0]]);
        assert_eq!(
            average_distortion(&dup, &dup),
            Err(Error::DegeneratePair { i: 0, j: 2 })
        );
        let refl = Reflection::new(&PoincarePoint::new(vec![0.2, 0.4]).unwrap());
        let r = s.try_map(|x| refl.apply(x)).unwrap();
        assert!(average_distortion(&s, &r).unwrap() < 1e-12);
    }

    #[test]
    fn flat_limit_factor_two() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.7;
                vec![1e-3 * t.sin() * 0.9, 1e-3 * (1.3 * t).cos() * 0.4]
            })
            .collect();
        let s = Dataset::from_rows(rows.clone()).unwrap();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..2)
            .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n)
            .collect();
        let classic: f64 = rows
            .iter()
            .map(|r| (r[0] - mean[0]).powi(2) + (r[1] - mean[1]).powi(2))
            .sum::<f64>()
            / n;
        // Hyperbolic lengths are twice the Euclidean ones near the origin.
        let scaled_classic = 4.0 * classic;
        let rel = (distance_variance(&s) - 2.0 * scaled_classic).abs() / (2.0 * scaled_classic);
        assert!(rel < 1e-2, "relative error {rel}");
    }
}
