//! Projected gradient ascent on the unit sphere.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm, normalized};

/// Value of a candidate direction.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    /// Quantity being maximized.
    pub score: f64,
    /// Euclidean gradient of `score`; empty when not requested.
    pub grad: Vec<f64>,
    /// Quantity recorded in the trace.
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AscentConfig {
    pub lr: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub p: Vec<f64>,
    pub eval: Eval,
    /// `(iteration, value)` at the start and after every accepted step.
    pub trace: Vec<(usize, f64)>,
    pub converged: bool,
}

const MIN_LR: f64 = 1e-12;

/// Accepted steps may grow the learning rate up to this multiple of the initial one.
const MAX_LR_GROWTH: f64 = 20.0;

/// Removes the components along the orthonormal vectors `q`.
pub(crate) fn project_out(v: &mut [f64], q: &[Vec<f64>]) {
    for _ in 0..2 {
        for e in q {
            let c = dot(e, v);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
    }
}

/// Maximizes `f` over unit vectors orthogonal to the orthonormal set `fixed`.
///
/// `f(p, want_grad)` returns `None` for an inadmissible direction, which is
/// handled like a decrease. Rejected steps halve the learning rate; accepted
/// ones double it, up to `MAX_LR_GROWTH * cfg.lr`. Returns `None` if the starting
/// point itself is inadmissible.
pub(crate) fn sphere_ascent<F>(
    p0: &[f64],
    fixed: &[Vec<f64>],
    cfg: AscentConfig,
    mut f: F,
) -> Option<Ascent>
where
    F: FnMut(&[f64], bool) -> Option<Eval>,
{
    let mut p = p0.to_vec();
    project_out(&mut p, fixed);
    let mut p = normalized(&p)?;
    let mut cur = f(&p, true)?;
    let mut trace = vec![(0, cur.value)];
    let mut lr = cfg.lr;
    let mut converged = false;
    'outer: for it in 1..=cfg.max_iter {
        let mut g = cur.grad.clone();
        let c = dot(&g, &p);
        for (gi, pi) in g.iter_mut().zip(&p) {
            *gi -= c * pi;
        }
        project_out(&mut g, fixed);
        if !(norm(&g) > 0.0) {
            converged = true;
            break;
        }
        loop {
            let mut cand: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + lr * b).collect();
            project_out(&mut cand, fixed);
            if let Some(cand) = normalized(&cand) {
                if let Some(e) = f(&cand, false) {
                    if e.score >= cur.score {
                        let gain = e.score - cur.score;
                        p = cand;
                        match f(&p, true) {
                            Some(full) => cur = full,
                            None => break 'outer,
                        }
                        trace.push((it, cur.value));
                        lr = (2.0 * lr).min(MAX_LR_GROWTH * cfg.lr);
                        if !(gain >= cfg.tol) {
                            converged = true;
                            break 'outer;
                        }
                        break;
                    }
                }
            }
            lr /= 2.0;
            if lr < MIN_LR {
                converged = true;
                break 'outer;
            }
        }
    }
    Some(Ascent {
        p,
        eval: cur,
        trace,
        converged,
    })
}

/// Generator for the `k`-th component: one stream per component, so the first
/// components of a fit do not depend on how many follow.
pub(crate) fn component_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

pub(crate) fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_top_eigenvector() {
        // maximize log(p^T A p) for A = diag(1, 5, 2)
        let a = [1.0, 5.0, 2.0];
        let f = |p: &[f64], _: bool| {
            let q: f64 = p.iter().zip(&a).map(|(x, w)| w * x * x).sum();
            let grad = p.iter().zip(&a).map(|(x, w)| 2.0 * w * x / q).collect();
            Some(Eval {
                score: q.ln(),
                grad,
                value: q,
            })
        };
        let cfg = AscentConfig {
            lr: 0.05,
            max_iter: 5000,
            tol: 1e-14,
        };
        let r = sphere_ascent(&[1.0, 0.1, 0.1], &[], cfg, f).unwrap();
        assert!((r.p[1].abs() - 1.0).abs() < 1e-6, "{:?}", r.p);
        assert!(r.trace.windows(2).all(|w| w[1].1 >= w[0].1));
        // constrained away from e1, the best is e2
        let r = sphere_ascent(&[1.0, 0.1, 0.1], &[vec![0.0, 1.0, 0.0]], cfg, f).unwrap();
        assert!((r.p[2].abs() - 1.0).abs() < 1e-6, "{:?}", r.p);
    }

    #[test]
    fn streams_are_independent_of_later_components() {
        let a: Vec<f64> = random_unit(&mut component_rng(7, 1), 4);
        let b: Vec<f64> = random_unit(&mut component_rng(7, 1), 4);
        let c: Vec<f64> = random_unit(&mut component_rng(7, 2), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
