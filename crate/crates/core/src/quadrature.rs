//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and the
//! reference edge `[0, 1]`.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules. All weights are strictly positive and all points are interior.

use crate::error::{CbfError, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 10;
pub const MAX_EDGE_DEGREE: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates (`[x̂, ŷ]` on the triangle, `[t, 0]` on the edge).
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule on the reference triangle exact for total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(CbfError::Unsupported {
            what: "triangle quadrature degree",
            value: degree.to_string(),
        });
    }
    // The collapsed direction carries an extra linear Jacobian factor.
    let n = (degree + 2).div_ceil(2);
    let (xs, ws) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&eta, &weta) in xs.iter().zip(&ws) {
        for (&xi, &wxi) in xs.iter().zip(&ws) {
            points.push([xi * (1.0 - eta), eta]);
            weights.push(wxi * weta * (1.0 - eta));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_EDGE_DEGREE {
        return Err(CbfError::Unsupported {
            what: "edge quadrature degree",
            value: degree.to_string(),
        });
    }
    let n = (degree + 1).div_ceil(2).max(1);
    let (xs, ws) = gauss_legendre(n);
    Ok(QuadratureRule {
        points: xs.iter().map(|&t| [t, 0.0]).collect(),
        weights: ws,
        degree,
    })
}
