//! Gauss-Legendre quadrature on [0, 1].
//!
//! Nodes are roots of the Legendre polynomial P_n found by Newton iteration
//! from the Chebyshev-based initial guess; the rule is exact for polynomials
//! of degree 2n-1, which the ray operators rely on.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RayQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RayQuadrature {
    pub const MIN_NODES: usize = 8;
    pub const DEFAULT_NODES: usize = 32;

    /// Gauss-Legendre rule with `count` nodes mapped to [0, 1].
    pub fn gauss_legendre(count: usize) -> Result<Self> {
        if count < Self::MIN_NODES {
            return Err(Error::TooFewNodes { min: Self::MIN_NODES, got: count });
        }
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let n = count;
        for k in 0..n {
            // Initial guess on [-1, 1]; standard asymptotic estimate.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1,1] -> [0,1].
            nodes.push(0.5 * (1.0 - x));
            weights.push(0.5 * w);
        }
        nodes.reverse();
        weights.reverse();
        Ok(RayQuadrature { nodes, weights })
    }

    pub fn default_rule() -> Self {
        Self::gauss_legendre(Self::DEFAULT_NODES).expect("default node count is valid")
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

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Legendre polynomial P_n and its derivative at x, by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for count in [8, 16, 32, 48] {
            let q = RayQuadrature::gauss_legendre(count).unwrap();
            let s: f64 = q.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "count {count}: sum {s}");
        }
    }

    #[test]
    fn exact_on_high_degree_monomials() {
        let q = RayQuadrature::gauss_legendre(32).unwrap();
        for k in 0..=63u32 {
            let got = q.integrate(|t| t.powi(k as i32));
            let want = 1.0 / (k as f64 + 1.0);
            assert!((got - want).abs() < 1e-13, "degree {k}: {got} vs {want}");
        }
    }

    #[test]
    fn rejects_tiny_rules() {
        assert!(RayQuadrature::gauss_legendre(4).is_err());
    }
}
