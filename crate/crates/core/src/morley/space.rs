use super::basis::{frobenius, LocalBasis, Sym2};
use super::dofmap::MorleyDofMap;
use super::quadrature::{gauss_legendre_unit, QuadratureRule};
use crate::error::{Error, Result};
use crate::Mesh;

/// A smooth function with value, gradient and Hessian available pointwise.
pub trait ExactFn {
    fn value(&self, p: [f64; 2]) -> f64;
    fn gradient(&self, p: [f64; 2]) -> [f64; 2];
    fn hessian(&self, p: [f64; 2]) -> Sym2<f64>;
}

/// Per-triangle data cached once per mesh.
#[derive(Debug, Clone)]
pub struct Element {
    pub basis: LocalBasis<f64>,
    pub area: f64,
    pub slots: [usize; 6],
    /// Free-unknown index of each local DOF, `None` when clamped.
    pub free: [Option<usize>; 6],
    pub hessians: [Sym2<f64>; 6],
    /// `∫_T φ_i`.
    pub integrals: [f64; 6],
}

/// Morley space on one mesh snapshot.
#[derive(Debug, Clone)]
pub struct MorleySpace {
    mesh: Mesh,
    dofs: MorleyDofMap,
    elements: Vec<Element>,
}

/// Coefficients of one scalar Morley function, indexed by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct MorleyField {
    pub coeffs: Vec<f64>,
}

/// `(‖·‖_{L²}, |·|_{1,2,h}, ‖·‖_NC)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BrokenNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl MorleySpace {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let dofs = MorleyDofMap::new(&mesh);
        let q2 = QuadratureRule::<f64>::with_degree(2);
        let mut elements = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let corners = mesh.corners(t);
            let normals = mesh.triangle_edges(t).map(|e| mesh.edges()[e].normal());
            let basis = LocalBasis::new(&corners, &normals).map_err(|e| match e {
                Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { triangle: Some(t), area },
                other => other,
            })?;
            let slots = dofs.element_slots(&mesh, t);
            let hessians = [0, 1, 2, 3, 4, 5].map(|i| basis.hessian(i));
            let mut integrals = [0.0; 6];
            for (p, &w) in q2.points_on(&corners).zip(q2.weights()) {
                let v = basis.values(p);
                for i in 0..6 {
                    integrals[i] += w * v[i];
                }
            }
            let area = mesh.area(t);
            integrals.iter_mut().for_each(|x| *x *= area);
            elements.push(Element { basis, area, slots, free: slots.map(|s| dofs.free_index(s)), hessians, integrals });
        }
        Ok(Self { mesh, dofs, elements })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofs(&self) -> &MorleyDofMap {
        &self.dofs
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, t: usize) -> &Element {
        &self.elements[t]
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn zero_field(&self) -> MorleyField {
        MorleyField { coeffs: vec![0.0; self.dofs.n_slots()] }
    }

    pub fn check(&self, field: &MorleyField) -> Result<()> {
        if field.coeffs.len() != self.dofs.n_slots() {
            return Err(Error::MeshMismatch { left: field.coeffs.len(), right: self.dofs.n_slots() });
        }
        Ok(())
    }

    /// Field with the given free values and zero clamped slots.
    pub fn field_from_free(&self, free: &[f64]) -> MorleyField {
        assert_eq!(free.len(), self.n_free());
        let mut f = self.zero_field();
        for (&s, &v) in self.dofs.free_slots().iter().zip(free) {
            f.coeffs[s] = v;
        }
        f
    }

    pub fn free_values(&self, field: &MorleyField) -> Vec<f64> {
        self.dofs.free_slots().iter().map(|&s| field.coeffs[s]).collect()
    }

    /// Zeroes the clamped slots in place.
    pub fn clamp(&self, field: &mut MorleyField) {
        for (s, c) in field.coeffs.iter_mut().enumerate() {
            if self.dofs.is_constrained(s) {
                *c = 0.0;
            }
        }
    }

    /// Morley interpolant: vertex values and edge means of the normal
    /// derivative. Clamped slots keep their interpolated values.
    pub fn interpolate(&self, f: &dyn ExactFn) -> MorleyField {
        let mut out = self.zero_field();
        for (v, p) in self.mesh.vertices().iter().enumerate() {
            out.coeffs[self.dofs.vertex_slot(v)] = f.value(*p);
        }
        let (gx, gw) = gauss_legendre_unit(5);
        for (e, edge) in self.mesh.edges().iter().enumerate() {
            let a = self.mesh.vertices()[edge.vertices[0]];
            let b = self.mesh.vertices()[edge.vertices[1]];
            let n = edge.normal();
            let mean: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(&s, &w)| {
                    let g = f.gradient([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
                    w * (g[0] * n[0] + g[1] * n[1])
                })
                .sum();
            out.coeffs[self.dofs.edge_slot(e)] = mean;
        }
        out
    }

    pub fn local_coeffs(&self, field: &MorleyField, t: usize) -> [f64; 6] {
        self.elements[t].slots.map(|s| field.coeffs[s])
    }

    pub fn value(&self, field: &MorleyField, t: usize, p: [f64; 2]) -> f64 {
        let c = self.local_coeffs(field, t);
        let v = self.elements[t].basis.values(p);
        (0..6).map(|i| c[i] * v[i]).sum()
    }

    pub fn gradient(&self, field: &MorleyField, t: usize, p: [f64; 2]) -> [f64; 2] {
        let c = self.local_coeffs(field, t);
        let mut g = [0.0; 2];
        for i in 0..6 {
            let gi = self.elements[t].basis.gradient(i, p);
            g[0] += c[i] * gi[0];
            g[1] += c[i] * gi[1];
        }
        g
    }

    /// Constant Hessian of the field on triangle `t`.
    pub fn hessian(&self, field: &MorleyField, t: usize) -> Sym2<f64> {
        let c = self.local_coeffs(field, t);
        let mut h = [0.0; 3];
        for i in 0..6 {
            for k in 0..3 {
                h[k] += c[i] * self.elements[t].hessians[i][k];
            }
        }
        h
    }

    /// Values, gradients and the Hessian of a field at points of triangle `t`.
    pub fn eval(&self, field: &MorleyField, t: usize, points: &[[f64; 2]]) -> Result<(Vec<f64>, Vec<[f64; 2]>, Sym2<f64>)> {
        self.check(field)?;
        if t >= self.elements.len() {
            return Err(Error::OutOfRange { index: t, len: self.elements.len() });
        }
        let values = points.iter().map(|&p| self.value(field, t, p)).collect();
        let grads = points.iter().map(|&p| self.gradient(field, t, p)).collect();
        Ok((values, grads, self.hessian(field, t)))
    }

    /// Broken norms of `field − exact` (or of `field` alone when `exact`
    /// is `None`).
    pub fn broken_norms(&self, field: &MorleyField, exact: Option<&dyn ExactFn>, quad: &QuadratureRule<f64>) -> BrokenNorms {
        let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
        for t in 0..self.elements.len() {
            let corners = self.mesh.corners(t);
            let area = self.elements[t].area;
            let hd = self.hessian(field, t);
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for (p, &w) in quad.points_on(&corners).zip(quad.weights()) {
                let mut v = self.value(field, t, p);
                let mut g = self.gradient(field, t, p);
                let mut h = hd;
                if let Some(ex) = exact {
                    v -= ex.value(p);
                    let ge = ex.gradient(p);
                    g[0] -= ge[0];
                    g[1] -= ge[1];
                    let he = ex.hessian(p);
                    for k in 0..3 {
                        h[k] -= he[k];
                    }
                }
                a += w * v * v;
                b += w * (g[0] * g[0] + g[1] * g[1]);
                c += w * frobenius(&h, &h);
            }
            l2 += area * a;
            h1 += area * b;
            h2 += area * c;
        }
        BrokenNorms { l2: l2.sqrt(), h1: h1.sqrt(), h2: h2.sqrt() }
    }

    /// Norms of a smooth function by quadrature on this mesh.
    pub fn exact_norms(&self, exact: &dyn ExactFn, quad: &QuadratureRule<f64>) -> BrokenNorms {
        self.broken_norms(&self.zero_field(), Some(exact), quad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_lshape_mesh, generate_square_mesh, Diagonal};
    use crate::mesh::generate_square_mesh_with;

    /// `a x² + b xy + c y² + d x + e y + g`.
    struct Quadratic([f64; 6]);

    impl ExactFn for Quadratic {
        fn value(&self, p: [f64; 2]) -> f64 {
            let [a, b, c, d, e, g] = self.0;
            a * p[0] * p[0] + b * p[0] * p[1] + c * p[1] * p[1] + d * p[0] + e * p[1] + g
        }
        fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
            let [a, b, c, d, e, _] = self.0;
            [2.0 * a * p[0] + b * p[1] + d, b * p[0] + 2.0 * c * p[1] + e]
        }
        fn hessian(&self, _: [f64; 2]) -> Sym2<f64> {
            let [a, b, c, ..] = self.0;
            [2.0 * a, b, 2.0 * c]
        }
    }

    #[test]
    fn interpolant_reproduces_quadratics() {
        let space = MorleySpace::new(generate_lshape_mesh::<f64>().red_refine()).unwrap();
        let q = Quadratic([1.3, -0.4, 2.1, 0.5, -1.0, 0.25]);
        let f = space.interpolate(&q);
        for t in 0..space.mesh().n_triangles() {
            let h = space.hessian(&f, t);
            assert!((h[0] - 2.6).abs() < 1e-11 && (h[1] + 0.4).abs() < 1e-11 && (h[2] - 4.2).abs() < 1e-11);
            let c = space.mesh().centroid(t);
            assert!((space.value(&f, t, c) - q.value(c)).abs() < 1e-12);
        }
        let err = space.broken_norms(&f, Some(&q), &QuadratureRule::with_degree(4));
        assert!(err.l2 < 1e-12 && err.h1 < 1e-11 && err.h2 < 1e-10);
    }

    #[test]
    fn nc_norm_of_paraboloid() {
        let space = MorleySpace::new(generate_square_mesh_with(3, Diagonal::Falling)).unwrap();
        let f = space.interpolate(&Quadratic([1.0, 0.0, 1.0, 0.0, 0.0, 0.0]));
        let n = space.broken_norms(&f, None, &QuadratureRule::with_degree(2));
        assert!((n.h2 - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_norms_and_values() {
        let space = MorleySpace::new(generate_square_mesh(2)).unwrap();
        let z = space.zero_field();
        assert_eq!(space.broken_norms(&z, None, &QuadratureRule::with_degree(4)), BrokenNorms::default());
        let (v, g, h) = space.eval(&z, 3, &[[0.1, 0.2]]).unwrap();
        assert_eq!((v[0], g[0], h), (0.0, [0.0, 0.0], [0.0; 3]));
    }

    #[test]
    fn value_is_basis_sum() {
        let space = MorleySpace::new(generate_square_mesh(3)).unwrap();
        let free: Vec<f64> = (0..space.n_free()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let f = space.field_from_free(&free);
        for t in [0, 5, 11] {
            let corners = space.mesh().corners(t);
            let p = [
                0.2 * corners[0][0] + 0.5 * corners[1][0] + 0.3 * corners[2][0],
                0.2 * corners[0][1] + 0.5 * corners[1][1] + 0.3 * corners[2][1],
            ];
            let e = space.element(t);
            let want: f64 = (0..6).map(|i| f.coeffs[e.slots[i]] * e.basis.value(i, p)).sum();
            assert!((space.value(&f, t, p) - want).abs() < 1e-13);
        }
        assert_eq!(space.free_values(&f), free);
        for s in 0..f.coeffs.len() {
            if space.dofs().is_constrained(s) {
                assert_eq!(f.coeffs[s], 0.0);
            }
        }
    }

    #[test]
    fn eval_rejects_bad_index_and_mismatch() {
        let space = MorleySpace::new(generate_square_mesh(1)).unwrap();
        assert!(space.eval(&space.zero_field(), 9, &[]).is_err());
        assert!(space.eval(&MorleyField { coeffs: vec![0.0; 3] }, 0, &[]).is_err());
    }

    #[test]
    fn integrals_sum_to_area_for_vertex_partition() {
        let space = MorleySpace::new(generate_square_mesh(2)).unwrap();
        for e in space.elements() {
            let s: f64 = e.integrals[..3].iter().sum();
            assert!((s - e.area).abs() < 1e-14);
        }
    }
}
