//! Raviart-Thomas elements of order 0 and 1 on the reference triangle.
//!
//! Local DOFs: for each edge `i` (opposite vertex `i`, traversed
//! `v_{i+1} -> v_{i+2}`) the normal moments against the shifted Legendre
//! polynomials `1, 2t - 1`, followed for `k = 1` by the two interior
//! moments `∫ φ_c`. The nodal basis is obtained by inverting the
//! generalized Vandermonde matrix of a monomial spanning set.

use nalgebra::DMatrix;

use crate::error::{CbfError, Result};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::tensor::{Mat2, Point, Vec2};

pub(crate) const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Value, divergence and gradient (`grad[i][j] = ∂φ_i/∂x_j`) of a vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtValue {
    pub value: Vec2,
    pub div: f64,
    pub grad: Mat2,
}

#[inline]
pub(crate) fn legendre(j: usize, t: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => 2.0 * t - 1.0,
        _ => unreachable!("edge moments go up to degree 1"),
    }
}

#[derive(Debug, Clone)]
pub struct RtReference {
    pub order: usize,
    /// `coeffs[(m, l)]`: weight of spanning function `m` in nodal basis `l`.
    coeffs: DMatrix<f64>,
}

impl RtReference {
    pub fn new(order: usize) -> Result<Self> {
        if order > 1 {
            return Err(CbfError::Unsupported {
                what: "Raviart-Thomas order",
                value: order.to_string(),
            });
        }
        let n = Self::dim(order);
        let mut vandermonde = DMatrix::zeros(n, n);
        let erule = edge_rule(2 * order + 2)?;
        for i in 0..3 {
            let a = REF_VERTICES[(i + 1) % 3];
            let b = REF_VERTICES[(i + 2) % 3];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let normal = [d[1] / len, -d[0] / len];
            for (p, w) in erule.iter() {
                let t = p[0];
                let x = [a[0] + t * d[0], a[1] + t * d[1]];
                let prime = spanning_set(order, x);
                for j in 0..=order {
                    let row = i * (order + 1) + j;
                    for (m, f) in prime.iter().enumerate() {
                        let flux = f.value[0] * normal[0] + f.value[1] * normal[1];
                        vandermonde[(row, m)] += w * len * flux * legendre(j, t);
                    }
                }
            }
        }
        if order == 1 {
            let trule = triangle_rule(4)?;
            for (p, w) in trule.iter() {
                let prime = spanning_set(order, p);
                for c in 0..2 {
                    for (m, f) in prime.iter().enumerate() {
                        vandermonde[(6 + c, m)] += w * f.value[c];
                    }
                }
            }
        }
        let coeffs = vandermonde
            .try_inverse()
            .ok_or_else(|| CbfError::Mesh("singular RT Vandermonde matrix".into()))?;
        Ok(RtReference { order, coeffs })
    }

    pub fn dim(order: usize) -> usize {
        (order + 1) * (order + 3)
    }

    pub fn n_dofs(&self) -> usize {
        Self::dim(self.order)
    }

    pub fn edge_dofs(&self) -> usize {
        self.order + 1
    }

    /// Nodal basis at a reference point.
    pub fn eval(&self, x: Point) -> Vec<RtValue> {
        let prime = spanning_set(self.order, x);
        let n = prime.len();
        (0..n)
            .map(|l| {
                let mut out = RtValue {
                    value: [0.0; 2],
                    div: 0.0,
                    grad: [[0.0; 2]; 2],
                };
                for (m, f) in prime.iter().enumerate() {
                    let c = self.coeffs[(m, l)];
                    if c == 0.0 {
                        continue;
                    }
                    out.value[0] += c * f.value[0];
                    out.value[1] += c * f.value[1];
                    out.div += c * f.div;
                    for i in 0..2 {
                        for j in 0..2 {
                            out.grad[i][j] += c * f.grad[i][j];
                        }
                    }
                }
                out
            })
            .collect()
    }
}

/// `[P_k]^2 ⊕ P̃_k x` in monomials.
fn spanning_set(order: usize, p: Point) -> Vec<RtValue> {
    let (x, y) = (p[0], p[1]);
    let f = |value: Vec2, div: f64, grad: Mat2| RtValue { value, div, grad };
    match order {
        0 => vec![
            f([1.0, 0.0], 0.0, [[0.0, 0.0], [0.0, 0.0]]),
            f([0.0, 1.0], 0.0, [[0.0, 0.0], [0.0, 0.0]]),
            f([x, y], 2.0, [[1.0, 0.0], [0.0, 1.0]]),
        ],
        1 => vec![
            f([1.0, 0.0], 0.0, [[0.0, 0.0], [0.0, 0.0]]),
            f([x, 0.0], 1.0, [[1.0, 0.0], [0.0, 0.0]]),
            f([y, 0.0], 0.0, [[0.0, 1.0], [0.0, 0.0]]),
            f([0.0, 1.0], 0.0, [[0.0, 0.0], [0.0, 0.0]]),
            f([0.0, x], 0.0, [[0.0, 0.0], [1.0, 0.0]]),
            f([0.0, y], 1.0, [[0.0, 0.0], [0.0, 1.0]]),
            f([x * x, x * y], 3.0 * x, [[2.0 * x, 0.0], [y, x]]),
            f([x * y, y * y], 3.0 * y, [[y, x], [0.0, 2.0 * y]]),
        ],
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rt0_edge_duality() {
        let rt = RtReference::new(0).unwrap();
        let lens = [2f64.sqrt(), 1.0, 1.0];
        let normals = [[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()], [-1.0, 0.0], [0.0, -1.0]];
        for j in 0..3 {
            let a = REF_VERTICES[(j + 1) % 3];
            let b = REF_VERTICES[(j + 2) % 3];
            for t in [0.1, 0.5, 0.8] {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let vals = rt.eval(x);
                for (i, v) in vals.iter().enumerate() {
                    let flux = v.value[0] * normals[j][0] + v.value[1] * normals[j][1];
                    let expected = if i == j { 1.0 / lens[j] } else { 0.0 };
                    assert!((flux - expected).abs() < 1e-13);
                }
            }
        }
        // constant divergence
        let d0: Vec<f64> = rt.eval([0.2, 0.3]).iter().map(|v| v.div).collect();
        let d1: Vec<f64> = rt.eval([0.7, 0.1]).iter().map(|v| v.div).collect();
        for (a, b) in d0.iter().zip(&d1) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rt1_has_eight_dofs_and_unsupported_order_fails() {
        assert_eq!(RtReference::new(1).unwrap().n_dofs(), 8);
        assert!(RtReference::new(2).is_err());
    }

    #[test]
    fn divergence_matches_gradient_trace() {
        for k in 0..2 {
            let rt = RtReference::new(k).unwrap();
            for v in rt.eval([0.3, 0.45]) {
                assert!((v.div - v.grad[0][0] - v.grad[1][1]).abs() < 1e-12);
            }
        }
    }
}
