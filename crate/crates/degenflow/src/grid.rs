//! Quadrature grids on `[0, 1]`, graded toward the degenerate end.

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, kahan_sum};
use serde::{Deserialize, Serialize};

/// Composite Gauss-Legendre grid on `[0, 1]`.
///
/// Panel endpoints are `(j/n)^grading`, so grading `> 1` concentrates panels
/// near `m = 0`, where all the singular behaviour of the flow lives. Nodes
/// are strictly increasing and lie in `(0, 1]`; weights are positive and sum
/// to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
    order: usize,
    grading: f64,
}

impl MGrid {
    /// Graded grid with `panels` panels and the 2-point rule per panel.
    pub fn graded(panels: usize, grading: f64) -> Result<Self> {
        Self::graded_with_order(panels, grading, 2)
    }

    /// Graded grid with an explicit per-panel rule order.
    pub fn graded_with_order(panels: usize, grading: f64, order: usize) -> Result<Self> {
        if panels < 1 {
            return Err(Error::Parameter("need at least one panel".into()));
        }
        if !(1.0..=16.0).contains(&grading) {
            return Err(Error::Parameter(format!(
                "grading must lie in [1, 16], got {grading}"
            )));
        }
        if !(1..=64).contains(&order) {
            return Err(Error::Parameter(format!(
                "panel order must lie in [1, 64], got {order}"
            )));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        let n = panels as f64;
        for j in 0..panels {
            let lo = (j as f64 / n).powf(grading);
            let hi = ((j + 1) as f64 / n).powf(grading);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (lo + hi);
            for (x, w) in ref_nodes.iter().zip(ref_weights.iter()) {
                nodes.push(mid + half * x);
                weights.push(w * half);
            }
        }
        Ok(MGrid {
            nodes,
            weights,
            panels,
            order,
            grading,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Width of the panel containing node `i`.
    pub fn panel_width(&self, i: usize) -> f64 {
        let j = i / self.order;
        let n = self.panels as f64;
        ((j + 1) as f64 / n).powf(self.grading) - (j as f64 / n).powf(self.grading)
    }

    /// Quadrature of a scalar function sampled at the grid nodes.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        kahan_sum(
            self.nodes
                .iter()
                .zip(self.weights.iter())
                .map(|(&m, &w)| w * f(m)),
        )
    }
}
