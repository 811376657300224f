//! Quadrature on the reference triangle and the reference edge.

/// Rule on the reference triangle `{(0,0), (1,0), (0,1)}` in barycentric
/// coordinates. Weights sum to the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Vertex rule (trapezoidal); exact for affine integrands and used for
    /// lumped mass terms.
    pub fn vertex() -> Self {
        QuadratureRule {
            points: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            weights: vec![1.0 / 6.0; 3],
            degree: 1,
        }
    }

    pub fn centroid() -> Self {
        QuadratureRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![0.5],
            degree: 1,
        }
    }

    /// Three interior points, exact up to degree 2.
    pub fn degree2() -> Self {
        let a = 2.0 / 3.0;
        let b = 1.0 / 6.0;
        QuadratureRule {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 6.0; 3],
            degree: 2,
        }
    }

    /// Six-point symmetric rule, exact up to degree 4.
    pub fn degree4() -> Self {
        let a1 = 0.445_948_490_915_964_886_32;
        let w1 = 0.223_381_589_678_011_465_70 / 2.0;
        let a2 = 0.091_576_213_509_770_743_460;
        let w2 = 0.109_951_743_655_321_867_64 / 2.0;
        let b1 = 1.0 - 2.0 * a1;
        let b2 = 1.0 - 2.0 * a2;
        QuadratureRule {
            points: vec![
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![w1, w1, w1, w2, w2, w2],
            degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Rule on the unit interval `[0, 1]`; weights sum to 1. Points are the
/// parameter `s` of the edge `x(s) = (1 - s) a + s b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl EdgeRule {
    pub fn endpoints() -> Self {
        EdgeRule {
            points: vec![0.0, 1.0],
            weights: vec![0.5, 0.5],
            degree: 1,
        }
    }

    pub fn gauss2() -> Self {
        let d = 0.5 / 3f64.sqrt();
        EdgeRule {
            points: vec![0.5 - d, 0.5 + d],
            weights: vec![0.5, 0.5],
            degree: 3,
        }
    }

    pub fn gauss3() -> Self {
        let d = 0.5 * (0.6f64).sqrt();
        EdgeRule {
            points: vec![0.5 - d, 0.5, 0.5 + d],
            weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            degree: 5,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Integral of x^a y^b over the reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check_rule(rule: &QuadratureRule) {
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 0.5).abs() < 1e-15);
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let q: f64 = rule
                    .iter()
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = monomial_integral(a, b);
                assert!(
                    (q - exact).abs() < 1e-14,
                    "degree {} rule fails on x^{a} y^{b}: {q} vs {exact}",
                    rule.degree
                );
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        check_rule(&QuadratureRule::vertex());
        check_rule(&QuadratureRule::centroid());
        check_rule(&QuadratureRule::degree2());
        check_rule(&QuadratureRule::degree4());
    }

    #[test]
    fn degree4_is_not_exact_for_degree6() {
        let rule = QuadratureRule::degree4();
        let q: f64 = rule.iter().map(|(l, w)| w * l[1].powi(6)).sum();
        assert!((q - monomial_integral(6, 0)).abs() > 1e-8);
    }

    #[test]
    fn edge_rules_are_exact_to_their_degree() {
        for rule in [EdgeRule::endpoints(), EdgeRule::gauss2(), EdgeRule::gauss3()] {
            for k in 0..=rule.degree as i32 {
                let q: f64 = rule.iter().map(|(s, w)| w * s.powi(k)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
            }
        }
    }
}
