//! Small fixed-size 2D vector and tensor helpers.

pub type Point = [f64; 2];
pub type Vec2 = [f64; 2];
/// Row-major 2x2 tensor, `t[i][j]` is row `i`, column `j`.
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO2: Vec2 = [0.0, 0.0];
pub const ZERO22: Mat2 = [[0.0, 0.0], [0.0, 0.0]];
pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn outer(a: Vec2, b: Vec2) -> Mat2 {
    [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
}

#[inline]
pub fn trace(t: &Mat2) -> f64 {
    t[0][0] + t[1][1]
}

/// Deviatoric part `t - tr(t)/2 I`.
#[inline]
pub fn dev(t: &Mat2) -> Mat2 {
    let h = 0.5 * trace(t);
    [[t[0][0] - h, t[0][1]], [t[1][0], t[1][1] - h]]
}

#[inline]
pub fn transpose(t: &Mat2) -> Mat2 {
    [[t[0][0], t[1][0]], [t[0][1], t[1][1]]]
}

/// Double contraction `a : b`.
#[inline]
pub fn ddot(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[inline]
pub fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

#[inline]
pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
pub fn mat_scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

#[inline]
pub fn mat_vec(a: &Mat2, v: Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

#[inline]
pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[inline]
pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

/// Squared Frobenius norm.
#[inline]
pub fn frob2(a: &Mat2) -> f64 {
    ddot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviator_is_trace_free() {
        let t = [[3.0, -1.5], [2.25, 7.0]];
        assert_eq!(trace(&dev(&t)), 0.0);
        // τ^d : τ^d = τ^d : τ
        assert!((ddot(&dev(&t), &dev(&t)) - ddot(&dev(&t), &t)).abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = [[2.0, 1.0], [0.5, 3.0]];
        let p = mat_mul(&a, &inverse(&a));
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[i][j] - IDENTITY[i][j]).abs() < 1e-15);
            }
        }
    }
}
