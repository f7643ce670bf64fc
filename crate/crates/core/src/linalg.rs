//! Small dense-vector helpers shared by the geometry code.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Minkowski form `-t u + <x, y>` on vectors with the time coordinate first.
#[inline]
pub fn mdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    -a[0] * b[0] + dot(&a[1..], &b[1..])
}

/// Normalize a nonzero vector to unit Euclidean length.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// `x / sinh(x)`, continuous at zero.
#[inline]
pub fn x_over_sinh(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x / x.sinh()
    }
}

/// `asinh(x) / x`, continuous at zero.
#[inline]
pub fn asinh_over_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.asinh() / x
    }
}

/// Angle in radians between two lines through the origin (sign-insensitive).
#[cfg(test)]
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let c = (dot(a, b).abs() / (norm(a) * norm(b))).min(1.0);
    c.acos()
}
