use crate::{Error, Result};

/// Nodes and weights of a quadrature rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// `q`-point Gauss-Legendre rule on `[a, b]`, exact for polynomials of degree `2q - 1`.
pub fn gauss_legendre(q: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one point".into(),
        ));
    }
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!(
            "invalid quadrature interval [{a}, {b}]"
        )));
    }
    let (ref_nodes, ref_weights) = reference_rule(q);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: ref_nodes.iter().map(|t| mid + half * t).collect(),
        weights: ref_weights.iter().map(|w| half * w).collect(),
    })
}

/// Rule on [-1, 1] by Newton iteration on the Legendre polynomial; nodes ascend.
fn reference_rule(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(q, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_points_is_an_error() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn two_point_rule_matches_closed_form() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15);
        assert!((r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_length() {
        for q in 1..=20 {
            let r = gauss_legendre(q, 0.25, 2.0).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.75).abs() < 1e-13, "q={q}");
        }
    }

    #[test]
    fn monomials_integrate_exactly_up_to_degree_2q_minus_1() {
        for q in 1..=12 {
            let r = gauss_legendre(q, 0.0, 1.0).unwrap();
            for deg in 0..2 * q {
                let got = r.integrate(|x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "q={q} deg={deg}");
            }
        }
    }
}
