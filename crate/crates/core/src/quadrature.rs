//! Gauss-Legendre rules and the matching spectral integration matrix.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::RMatrix;

/// Legendre values `P_0(x) … P_deg(x)`.
fn legendre_all(x: f64, deg: usize) -> Vec<f64> {
    let mut p = vec![0.0; deg + 1];
    p[0] = 1.0;
    if deg >= 1 {
        p[1] = x;
    }
    for k in 1..deg {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

/// An `m`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_m
            let mut x = Float::cos(core::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5));
            for _ in 0..100 {
                let p = legendre_all(x, m);
                let dp = mf * (x * p[m] - p[m - 1]) / (x * x - 1.0);
                let dx = p[m] / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let p = legendre_all(x, m);
            let dp = mf * (x * p[m] - p[m - 1]) / (x * x - 1.0);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
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

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        (
            self.nodes.iter().map(|x| mid + half * x).collect(),
            self.weights.iter().map(|w| half * w).collect(),
        )
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let (x, w) = self.on_interval(a, b);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum()
    }

    /// Matrix `S` on `[-1, 1]` with `(S v)_i = ∫_{-1}^{x_i} p(s) ds`, where
    /// `p` is the degree `m - 1` interpolant of `v` at the nodes.
    ///
    /// Built from the Legendre expansion of the Lagrange basis, which the
    /// rule itself integrates exactly.
    pub fn integration_matrix(&self) -> RMatrix {
        let m = self.len();
        let at_nodes: Vec<Vec<f64>> = self.nodes.iter().map(|&x| legendre_all(x, m)).collect();
        // antiderivatives of P_k from -1, evaluated at each node
        let anti: Vec<Vec<f64>> = at_nodes
            .iter()
            .zip(&self.nodes)
            .map(|(p, &x)| {
                (0..m)
                    .map(|k| {
                        if k == 0 {
                            x + 1.0
                        } else {
                            (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        RMatrix::from_fn(m, m, |i, j| {
            (0..m)
                .map(|k| 0.5 * (2 * k + 1) as f64 * self.weights[j] * at_nodes[j][k] * anti[i][k])
                .sum()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RVector;

    #[test]
    fn small_rules_match_tables() {
        let g2 = GaussLegendre::new(2);
        assert!((g2.nodes()[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g2.weights()[0] - 1.0).abs() < 1e-15);
        let g3 = GaussLegendre::new(3);
        assert!(g3.nodes()[1].abs() < 1e-15);
        assert!((g3.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((g3.nodes()[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::new(32);
        // degree 63 is the limit
        let v = g.integrate(0.0, 1.0, |x| x.powi(63));
        assert!((v - 1.0 / 64.0).abs() < 1e-15);
        let w: f64 = g.weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_accuracy_for_smooth_functions() {
        let g = GaussLegendre::new(32);
        let v = g.integrate(0.0, 5.0, |x| (3.0 * x).cos() * (-0.5 * x).exp());
        // ∫ e^{-x/2} cos 3x = e^{-x/2}(3 sin 3x - cos 3x / 2) / (9 + 1/4)
        let anti =
            |x: f64| (-0.5 * x).exp() * (3.0 * (3.0 * x).sin() - 0.5 * (3.0 * x).cos()) / 9.25;
        assert!((v - (anti(5.0) - anti(0.0))).abs() < 1e-14);
    }

    #[test]
    fn integration_matrix_gives_antiderivative() {
        let g = GaussLegendre::new(24);
        let s = g.integration_matrix();
        let v = RVector::from_iterator(24, g.nodes().iter().map(|x| x.exp()));
        let got = &s * v;
        for (i, x) in g.nodes().iter().enumerate() {
            assert!(
                (got[i] - (x.exp() - (-1f64).exp())).abs() < 1e-14,
                "node {i}"
            );
        }
        // polynomials of degree m - 1 are exact
        let p = RVector::from_iterator(24, g.nodes().iter().map(|x| 23.0 * x.powi(22)));
        let got = &s * p;
        for (i, x) in g.nodes().iter().enumerate() {
            assert!((got[i] - (x.powi(23) + 1.0)).abs() < 1e-12);
        }
    }
}
