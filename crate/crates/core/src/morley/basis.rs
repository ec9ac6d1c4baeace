use crate::error::{Error, Result};
use crate::mesh::{dist, signed_area};
use crate::scalar::{solve_dense, Scalar};

/// Symmetric 2×2 matrix stored as `[xx, xy, yy]`.
pub type Sym2<T> = [T; 3];

/// Frobenius inner product of two symmetric matrices.
pub fn frobenius<T: Scalar>(a: &Sym2<T>, b: &Sym2<T>) -> T {
    a[0] * b[0] + T::lit(2.0) * a[1] * b[1] + a[2] * b[2]
}

/// Von Kármán bracket of two functions with Hessians `a`, `b`:
/// `a_xx b_yy + a_yy b_xx − 2 a_xy b_xy`.
pub fn bracket<T: Scalar>(a: &Sym2<T>, b: &Sym2<T>) -> T {
    a[0] * b[2] + a[2] * b[0] - T::lit(2.0) * a[1] * b[1]
}

/// The six Morley shape functions of one triangle, as quadratics in the
/// scaled monomials `1, ξ, η, ξ², ξη, η²` with `ξ = (x − c_x)/s`,
/// `η = (y − c_y)/s`, centred at the centroid and scaled by the diameter.
///
/// Local DOF `k < 3` is the value at vertex `k`; local DOF `3 + k` is the
/// normal derivative at the midpoint of local edge `k` (opposite vertex
/// `k`) in the direction of the supplied edge normal. For quadratics that
/// equals the edge mean of the normal derivative.
#[derive(Debug, Clone)]
pub struct LocalBasis<T> {
    center: [T; 2],
    scale: T,
    coeffs: [[T; 6]; 6],
}

impl<T: Scalar> LocalBasis<T> {
    pub fn new(corners: &[[T; 2]; 3], normals: &[[T; 2]; 3]) -> Result<Self> {
        let area = signed_area(corners[0], corners[1], corners[2]);
        let h = (0..3).map(|k| dist(corners[(k + 1) % 3], corners[(k + 2) % 3])).fold(T::zero(), T::max);
        if !(area.abs() >= T::lit(1e-14) * h * h) || h == T::zero() {
            return Err(Error::DegenerateTriangle { triangle: None, area: area.to_f64().unwrap_or(f64::NAN) });
        }
        let three = T::lit(3.0);
        let center = [
            (corners[0][0] + corners[1][0] + corners[2][0]) / three,
            (corners[0][1] + corners[1][1] + corners[2][1]) / three,
        ];
        let scale = h;
        let mut basis = Self { center, scale, coeffs: [[T::zero(); 6]; 6] };

        // Row j of the Vandermonde holds functional j applied to each monomial.
        let mut v = [[T::zero(); 6]; 6];
        for k in 0..3 {
            v[k] = basis.monomials(corners[k]);
            let half = T::lit(0.5);
            let a = corners[(k + 1) % 3];
            let b = corners[(k + 2) % 3];
            let mid = [(a[0] + b[0]) * half, (a[1] + b[1]) * half];
            let [gx, gy] = basis.monomial_gradients(mid);
            for m in 0..6 {
                v[3 + k][m] = gx[m] * normals[k][0] + gy[m] * normals[k][1];
            }
        }
        for i in 0..6 {
            let mut e = [T::zero(); 6];
            e[i] = T::one();
            basis.coeffs[i] = solve_dense(v, e)
                .ok_or(Error::DegenerateTriangle { triangle: None, area: area.to_f64().unwrap_or(f64::NAN) })?;
        }
        Ok(basis)
    }

    fn local(&self, p: [T; 2]) -> [T; 2] {
        [(p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale]
    }

    fn monomials(&self, p: [T; 2]) -> [T; 6] {
        let [x, y] = self.local(p);
        [T::one(), x, y, x * x, x * y, y * y]
    }

    fn monomial_gradients(&self, p: [T; 2]) -> [[T; 6]; 2] {
        let [x, y] = self.local(p);
        let s = self.scale;
        let (z, one, two) = (T::zero(), T::one(), T::lit(2.0));
        [
            [z, one / s, z, two * x / s, y / s, z],
            [z, z, one / s, z, x / s, two * y / s],
        ]
    }

    /// Monomial coefficients of shape function `i`.
    pub fn coefficients(&self, i: usize) -> &[T; 6] {
        &self.coeffs[i]
    }

    pub fn value(&self, i: usize, p: [T; 2]) -> T {
        let m = self.monomials(p);
        (0..6).map(|k| self.coeffs[i][k] * m[k]).sum()
    }

    pub fn gradient(&self, i: usize, p: [T; 2]) -> [T; 2] {
        let [gx, gy] = self.monomial_gradients(p);
        let c = &self.coeffs[i];
        [(0..6).map(|k| c[k] * gx[k]).sum(), (0..6).map(|k| c[k] * gy[k]).sum()]
    }

    /// Constant Hessian of shape function `i`.
    pub fn hessian(&self, i: usize) -> Sym2<T> {
        let c = &self.coeffs[i];
        let s2 = self.scale * self.scale;
        let two = T::lit(2.0);
        [two * c[3] / s2, c[4] / s2, two * c[5] / s2]
    }

    pub fn values(&self, p: [T; 2]) -> [T; 6] {
        let m = self.monomials(p);
        let mut out = [T::zero(); 6];
        for i in 0..6 {
            out[i] = (0..6).map(|k| self.coeffs[i][k] * m[k]).sum();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outward_normals(c: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
        [0, 1, 2].map(|k| {
            let a = c[(k + 1) % 3];
            let b = c[(k + 2) % 3];
            let l = dist(a, b);
            [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
        })
    }

    fn duality_error(c: &[[f64; 2]; 3]) -> f64 {
        let n = outward_normals(c);
        let basis = LocalBasis::new(c, &n).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..6 {
            for k in 0..3 {
                let want = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((basis.value(i, c[k]) - want).abs());
                let a = c[(k + 1) % 3];
                let b = c[(k + 2) % 3];
                // Edge mean of the normal derivative by 3-point Gauss on the edge.
                let (gx, gw) = crate::morley::quadrature::gauss_legendre_unit(3);
                let mean: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(&s, &w)| {
                        let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                        let g = basis.gradient(i, p);
                        w * (g[0] * n[k][0] + g[1] * n[k][1])
                    })
                    .sum();
                let want = if i == 3 + k { 1.0 } else { 0.0 };
                worst = worst.max((mean - want).abs());
            }
        }
        worst
    }

    #[test]
    fn reference_triangle_duality_and_constant_hessian() {
        let c = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(duality_error(&c) < 1e-12);
        let b = LocalBasis::new(&c, &outward_normals(&c)).unwrap();
        // Sum of vertex basis functions is the constant 1: Hessian zero.
        let h: Vec<f64> = (0..3).map(|k| (0..3).map(|i| b.hessian(i)[k]).sum()).collect();
        assert!(h.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn known_reference_shape_function() {
        // On the reference triangle with outward normals the edge-0 function
        // is s(s − 1)/√2 with s = x + y.
        let c = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let b = LocalBasis::new(&c, &outward_normals(&c)).unwrap();
        let s = std::f64::consts::SQRT_2;
        let p = [0.3, 0.2];
        let want = (p[0] + p[1]) * (p[0] + p[1] - 1.0) / s;
        assert!((b.value(3, p) - want).abs() < 1e-13);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let c = [[0.0, 0.0], [1.0, 0.0], [2.0, 1e-16]];
        assert!(matches!(LocalBasis::new(&c, &outward_normals(&c)), Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn single_precision_basis() {
        let c = [[0.0f32, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let n = [[0.70710677f32, 0.70710677], [-1.0, 0.0], [0.0, -1.0]];
        let b = LocalBasis::new(&c, &n).unwrap();
        assert!((b.value(0, c[0]) - 1.0).abs() < 1e-5);
        assert!(b.value(0, c[1]).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn duality_on_random_triangles(
            ax in -3.0..3.0f64, ay in -3.0..3.0f64,
            bx in -3.0..3.0f64, by in -3.0..3.0f64,
            cx in -3.0..3.0f64, cy in -3.0..3.0f64,
        ) {
            let area = signed_area([ax, ay], [bx, by], [cx, cy]);
            let c = if area > 0.0 { [[ax, ay], [bx, by], [cx, cy]] } else { [[ax, ay], [cx, cy], [bx, by]] };
            let h = (0..3).map(|k| dist(c[k], c[(k + 1) % 3])).fold(0.0, f64::max);
            prop_assume!(area.abs() > 1e-3 * h * h);
            prop_assert!(duality_error(&c) < 1e-10);
        }
    }
}
