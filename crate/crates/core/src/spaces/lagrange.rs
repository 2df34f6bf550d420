//! Continuous Lagrange elements of order 1 and 2.
//!
//! Local DOFs: the three vertices, then (order 2) the midpoints of local
//! edges 0, 1, 2.

use crate::error::{CbfError, Result};
use crate::tensor::{Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeValue {
    pub value: f64,
    /// Reference gradient until mapped.
    pub grad: Vec2,
}

const GRAD_BARY: [Vec2; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy)]
pub struct LagrangeReference {
    pub order: usize,
}

impl LagrangeReference {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(CbfError::Unsupported {
                what: "Lagrange order",
                value: order.to_string(),
            });
        }
        Ok(LagrangeReference { order })
    }

    pub fn n_dofs(&self) -> usize {
        if self.order == 1 {
            3
        } else {
            6
        }
    }

    /// Reference coordinates of the nodes.
    pub fn nodes(&self) -> Vec<Point> {
        let mut n = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        if self.order == 2 {
            n.extend([[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]]);
        }
        n
    }

    pub fn eval(&self, x: Point) -> Vec<LagrangeValue> {
        let l = [1.0 - x[0] - x[1], x[0], x[1]];
        let g = GRAD_BARY;
        match self.order {
            1 => (0..3)
                .map(|i| LagrangeValue {
                    value: l[i],
                    grad: g[i],
                })
                .collect(),
            _ => {
                let mut out = Vec::with_capacity(6);
                for i in 0..3 {
                    let s = 4.0 * l[i] - 1.0;
                    out.push(LagrangeValue {
                        value: l[i] * (2.0 * l[i] - 1.0),
                        grad: [s * g[i][0], s * g[i][1]],
                    });
                }
                for i in 0..3 {
                    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                    out.push(LagrangeValue {
                        value: 4.0 * l[a] * l[b],
                        grad: [
                            4.0 * (l[b] * g[a][0] + l[a] * g[b][0]),
                            4.0 * (l[b] * g[a][1] + l[a] * g[b][1]),
                        ],
                    });
                }
                out
            }
        }
    }
}
