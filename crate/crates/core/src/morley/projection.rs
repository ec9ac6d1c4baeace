use super::quadrature::QuadratureRule;
use crate::mesh::Triangulation;
use crate::scalar::{solve_dense, Scalar};

/// Elementwise L² projection onto `P_0` or `P_1`. Each triangle stores the
/// projection's values at its three vertices (barycentric nodal form); for
/// degree 0 the three values coincide.
#[derive(Debug, Clone)]
pub struct PiecewisePolyProjection<T> {
    degree: usize,
    coeffs: Vec<[T; 3]>,
}

impl<T: Scalar> PiecewisePolyProjection<T> {
    /// Projects `f(t, x)` triangle by triangle. `f` receives the triangle
    /// index so that broken (discontinuous) fields can be projected.
    pub fn new(mesh: &Triangulation<T>, degree: usize, quad: &QuadratureRule<T>, f: impl Fn(usize, [T; 2]) -> T) -> Self {
        assert!(degree <= 1, "only P0 and P1 projections are supported");
        let coeffs = (0..mesh.n_triangles())
            .map(|t| {
                let corners = mesh.corners(t);
                let mut rhs = [T::zero(); 3];
                let mut mean = T::zero();
                for ((b, p), &w) in quad.barycentric().iter().zip(quad.points_on(&corners)).zip(quad.weights()) {
                    let v = f(t, p);
                    mean += w * v;
                    for k in 0..3 {
                        rhs[k] += w * v * b[k];
                    }
                }
                if degree == 0 {
                    return [mean; 3];
                }
                // Normalized barycentric mass matrix: (1 + δ_ij) / 12.
                let mut m = [[T::lit(1.0 / 12.0); 3]; 3];
                for (k, row) in m.iter_mut().enumerate() {
                    row[k] = T::lit(2.0 / 12.0);
                }
                solve_dense(m, rhs).expect("barycentric mass matrix is regular")
            })
            .collect();
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Vertex values on triangle `t`.
    pub fn coefficients(&self, t: usize) -> [T; 3] {
        self.coeffs[t]
    }

    pub fn eval_barycentric(&self, t: usize, b: &[T; 3]) -> T {
        let c = &self.coeffs[t];
        c[0] * b[0] + c[1] * b[1] + c[2] * b[2]
    }

    pub fn eval(&self, mesh: &Triangulation<T>, t: usize, p: [T; 2]) -> T {
        self.eval_barycentric(t, &barycentric(&mesh.corners(t), p))
    }

    /// Per-triangle `‖f − Π f‖²_{L²(T)}`.
    pub fn defect_sq(&self, mesh: &Triangulation<T>, quad: &QuadratureRule<T>, f: impl Fn(usize, [T; 2]) -> T) -> Vec<T> {
        (0..mesh.n_triangles())
            .map(|t| {
                let corners = mesh.corners(t);
                let s: T = quad
                    .barycentric()
                    .iter()
                    .zip(quad.points_on(&corners))
                    .zip(quad.weights())
                    .map(|((b, p), &w)| {
                        let d = f(t, p) - self.eval_barycentric(t, b);
                        w * d * d
                    })
                    .sum();
                s * mesh.area(t)
            })
            .collect()
    }
}

pub fn barycentric<T: Scalar>(c: &[[T; 2]; 3], p: [T; 2]) -> [T; 3] {
    let area = crate::mesh::signed_area(c[0], c[1], c[2]);
    let l1 = crate::mesh::signed_area(c[0], p, c[2]) / area;
    let l2 = crate::mesh::signed_area(c[0], c[1], p) / area;
    [T::one() - l1 - l2, l1, l2]
}
