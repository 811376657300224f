//! Linear (P1) shape functions on triangles.

use crate::fem::FemError;
use crate::Vec2;

/// Values and gradients of the three nodal shape functions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    pub values: [f64; 3],
    pub gradients: [Vec2; 3],
}

/// Geometry of one P1 triangle. Gradients of the shape functions are
/// constant over the element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Element {
    pub coords: [Vec2; 3],
    pub area: f64,
    pub gradients: [Vec2; 3],
}

impl P1Element {
    pub fn new(coords: [Vec2; 3]) -> Result<Self, FemError> {
        let [x0, x1, x2] = coords;
        let twice_area = (x1 - x0).perp(&(x2 - x0));
        let scale = [(x1 - x0).norm_squared(), (x2 - x1).norm_squared(), (x0 - x2).norm_squared()]
            .into_iter()
            .fold(0.0, f64::max);
        if !twice_area.is_finite() || twice_area.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(FemError::SingularElement { area: 0.5 * twice_area });
        }
        let inv = 1.0 / twice_area;
        let gradients = [
            Vec2::new(x1.y - x2.y, x2.x - x1.x) * inv,
            Vec2::new(x2.y - x0.y, x0.x - x2.x) * inv,
            Vec2::new(x0.y - x1.y, x1.x - x0.x) * inv,
        ];
        Ok(P1Element {
            coords,
            area: 0.5 * twice_area.abs(),
            gradients,
        })
    }

    /// Physical point of barycentric coordinates `bary`.
    pub fn point(&self, bary: [f64; 3]) -> Vec2 {
        self.coords[0] * bary[0] + self.coords[1] * bary[1] + self.coords[2] * bary[2]
    }

    /// Gradient of the P1 interpolant of nodal values `v`.
    pub fn gradient(&self, v: [f64; 3]) -> Vec2 {
        self.gradients[0] * v[0] + self.gradients[1] * v[1] + self.gradients[2] * v[2]
    }

    /// Gradient tensor `G[i][j] = d u_i / d x_j` of a P1 vector field.
    pub fn vector_gradient(&self, u: [Vec2; 3]) -> crate::Tensor2 {
        let mut g = crate::Tensor2::zeros();
        for (a, ua) in u.iter().enumerate() {
            g += ua * self.gradients[a].transpose();
        }
        g
    }
}

/// Evaluates the P1 basis of the triangle `coords` at barycentric point `bary`.
pub fn p1_basis(coords: [Vec2; 3], bary: [f64; 3]) -> Result<BasisEval, FemError> {
    let sum: f64 = bary.iter().sum();
    if (sum - 1.0).abs() > 1e-12 || bary.iter().any(|&l| !(l >= -1e-12)) {
        return Err(FemError::InvalidArgument(format!(
            "barycentric point {bary:?} is outside the reference triangle"
        )));
    }
    let el = P1Element::new(coords)?;
    Ok(BasisEval {
        values: bary,
        gradients: el.gradients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> [Vec2; 3] {
        [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn nodal_interpolation_and_centroid() {
        let v = p1_basis(unit(), [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v.values, [1.0, 0.0, 0.0]);
        let c = p1_basis(unit(), [1.0 / 3.0; 3]).unwrap();
        for x in c.values {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_right_triangle_gradients() {
        let b = p1_basis(unit(), [0.2, 0.3, 0.5]).unwrap();
        assert_eq!(b.gradients[0], Vec2::new(-1.0, -1.0));
        assert_eq!(b.gradients[1], Vec2::new(1.0, 0.0));
        assert_eq!(b.gradients[2], Vec2::new(0.0, 1.0));
    }

    #[test]
    fn gradients_sum_to_zero_on_skewed_element() {
        let el = P1Element::new([Vec2::new(0.1, -0.3), Vec2::new(2.5, 0.2), Vec2::new(-0.4, 1.7)]).unwrap();
        let s = el.gradients[0] + el.gradients[1] + el.gradients[2];
        assert!(s.norm() < 1e-14);
        // gradient of an affine function is reproduced exactly
        let f = |p: Vec2| 3.0 - 2.0 * p.x + 0.5 * p.y;
        let g = el.gradient([f(el.coords[0]), f(el.coords[1]), f(el.coords[2])]);
        assert!((g - Vec2::new(-2.0, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let err = P1Element::new([Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)]);
        assert!(matches!(err, Err(FemError::SingularElement { .. })));
    }

    #[test]
    fn point_outside_reference_is_rejected() {
        assert!(p1_basis(unit(), [1.5, -0.5, 0.0]).is_err());
        assert!(p1_basis(unit(), [0.5, 0.5, 0.5]).is_err());
    }
}
