//! Periodic trapezoidal quadrature with node doubling.
//!
//! For a `2π`-periodic integrand the trapezoidal rule on `M` equispaced nodes
//! is exact for trigonometric polynomials of degree `< M` and converges
//! geometrically for analytic integrands, so doubling `M` until successive
//! estimates agree is the natural adaptive scheme here.

use crate::error::{Error, Result};

/// A strided run of nodes `θ_i = 2π·i / nodes` for
/// `i = first, first + stride, …` (`count` of them).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSweep {
    pub first: u64,
    pub stride: u64,
    pub count: u64,
    pub nodes: u64,
}

impl NodeSweep {
    pub fn indices(&self) -> impl Iterator<Item = u64> {
        let (first, stride) = (self.first, self.stride);
        (0..self.count).map(move |t| first + t * stride)
    }
}

/// Result of an adaptive periodic quadrature: the mean value
/// `(1/2π)∫₀^{2π} f` for each component.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicEstimate {
    pub values: Vec<f64>,
    pub nodes: u64,
    pub last_change: f64,
}

/// Doubling schedule for [`integrate_periodic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicRule {
    pub start_nodes: u64,
    pub tol: f64,
    pub max_nodes: u64,
}

impl PeriodicRule {
    pub fn new(start_nodes: u64, tol: f64) -> Self {
        Self {
            start_nodes: start_nodes.max(8),
            tol,
            max_nodes: 1 << 30,
        }
    }

    pub fn with_max_nodes(mut self, max_nodes: u64) -> Self {
        self.max_nodes = max_nodes;
        self
    }
}

/// Integrates a `dim`-component periodic integrand. `sum_over` must add the
/// integrand summed over the nodes of a sweep into its accumulator slice.
pub fn integrate_periodic<F>(dim: usize, rule: PeriodicRule, mut sum_over: F) -> Result<PeriodicEstimate>
where
    F: FnMut(&NodeSweep, &mut [f64]),
{
    if !(rule.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance {} must be positive", rule.tol)));
    }
    let mut nodes = rule.start_nodes;
    if nodes > rule.max_nodes {
        return Err(Error::Infeasible(format!(
            "quadrature needs at least {nodes} nodes, cap is {}",
            rule.max_nodes
        )));
    }
    let mut sums = vec![0.0; dim];
    sum_over(
        &NodeSweep {
            first: 0,
            stride: 1,
            count: nodes,
            nodes,
        },
        &mut sums,
    );
    let mut estimate: Vec<f64> = sums.iter().map(|s| s / nodes as f64).collect();
    let mut last_change = f64::INFINITY;
    while 2 * nodes <= rule.max_nodes {
        let sweep = NodeSweep {
            first: 1,
            stride: 2,
            count: nodes,
            nodes: 2 * nodes,
        };
        sum_over(&sweep, &mut sums);
        nodes *= 2;
        let refined: Vec<f64> = sums.iter().map(|s| s / nodes as f64).collect();
        last_change = refined
            .iter()
            .zip(&estimate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        estimate = refined;
        if last_change <= rule.tol {
            return Ok(PeriodicEstimate {
                values: estimate,
                nodes,
                last_change,
            });
        }
    }
    Err(Error::QuadratureNonConvergence { nodes, last_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn scalar<G: Fn(f64) -> f64>(g: G) -> impl FnMut(&NodeSweep, &mut [f64]) {
        move |sweep, acc| {
            for i in sweep.indices() {
                acc[0] += g(TAU * i as f64 / sweep.nodes as f64);
            }
        }
    }

    #[test]
    fn trig_polynomials_are_exact() {
        let est = integrate_periodic(1, PeriodicRule::new(16, 1e-12), scalar(|t| t.cos().powi(4))).unwrap();
        assert!((est.values[0] - 0.375).abs() < 1e-14);
    }

    #[test]
    fn analytic_integrand_converges() {
        // mean of 1/(3 + 2cos t) is 1/sqrt(5)
        let est = integrate_periodic(1, PeriodicRule::new(8, 1e-13), scalar(|t| 1.0 / (3.0 + 2.0 * t.cos()))).unwrap();
        assert!((est.values[0] - 1.0 / 5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn node_cap_reports_non_convergence() {
        // |sin t| has a kink, so the error decays only like M^-2
        let rule = PeriodicRule::new(8, 1e-15).with_max_nodes(1 << 12);
        let err = integrate_periodic(1, rule, scalar(|t| (t - 1.0).sin().abs())).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }
}
