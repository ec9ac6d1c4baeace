//! Discrete forms on the free Morley unknowns.
//!
//! Vectors over a single field have length `dim V_M` (free unknowns in slot
//! order). Pairs are laid out as `[first; second]`, so state and adjoint
//! vectors have length `2 dim V_M`.
//!
//! With `m_i = ∫_T φ_i` and constant per-triangle Hessians, the trilinear
//! form is `b_NC(η, χ, φ_i) = −½ Σ_T [η, χ]_T m_i`.

mod sparse;

use std::sync::Arc;

pub use sparse::{Factorization, SparseOperator};

use crate::error::{Error, Result};
use crate::morley::{bracket, frobenius, MorleyField, MorleySpace, QuadratureRule};

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Data of the control problem.
#[derive(Clone)]
pub struct ProblemData {
    /// Load of the displacement equation.
    pub f: ScalarFn,
    /// Load of the Airy stress equation; zero when absent.
    pub g: Option<ScalarFn>,
    pub psi_d: [ScalarFn; 2],
    pub alpha: f64,
    pub u_a: f64,
    pub u_b: f64,
    /// Quadrature degree for integrals of the data.
    pub load_degree: usize,
    /// Point where the data is singular and the degree used on triangles
    /// touching it.
    pub singular_point: Option<([f64; 2], usize)>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("alpha", &self.alpha)
            .field("u_a", &self.u_a)
            .field("u_b", &self.u_b)
            .field("has_g", &self.g.is_some())
            .field("load_degree", &self.load_degree)
            .field("singular_point", &self.singular_point)
            .finish()
    }
}

impl ProblemData {
    pub fn new(f: ScalarFn, psi_d: [ScalarFn; 2], alpha: f64, u_a: f64, u_b: f64) -> Result<Self> {
        let data = Self { f, g: None, psi_d, alpha, u_a, u_b, load_degree: 6, singular_point: None };
        data.validate()?;
        Ok(data)
    }

    pub fn with_g(mut self, g: ScalarFn) -> Self {
        self.g = Some(g);
        self
    }

    pub fn with_load_degree(mut self, degree: usize) -> Self {
        self.load_degree = degree;
        self
    }

    pub fn with_singular_point(mut self, point: [f64; 2], degree: usize) -> Self {
        self.singular_point = Some((point, degree));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.u_a <= self.u_b) {
            return Err(Error::InvalidArgument(format!("empty control box [{}, {}]", self.u_a, self.u_b)));
        }
        Ok(())
    }

    /// Projection onto the control box.
    pub fn clip(&self, x: f64) -> f64 {
        self.u_b.min(self.u_a.max(x))
    }
}

/// The two data quadrature rules, built once per problem.
#[derive(Debug, Clone)]
pub struct LoadRules {
    pub regular: QuadratureRule<f64>,
    pub singular: Option<QuadratureRule<f64>>,
}

impl LoadRules {
    pub fn new(data: &ProblemData) -> Self {
        Self {
            regular: QuadratureRule::with_degree(data.load_degree),
            singular: data.singular_point.map(|(_, d)| QuadratureRule::with_degree(d)),
        }
    }

    pub fn get(&self, data: &ProblemData, space: &MorleySpace, t: usize) -> &QuadratureRule<f64> {
        match (&self.singular, data.singular_point) {
            (Some(rule), Some((p, _))) if space.mesh().corners(t).iter().any(|c| (c[0] - p[0]).hypot(c[1] - p[1]) < 1e-12) => rule,
            _ => &self.regular,
        }
    }
}

/// Two Morley fields on one space: a state `(ψ₁, ψ₂)` or an adjoint `(θ₁, θ₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub first: MorleyField,
    pub second: MorleyField,
}

pub type StatePair = FieldPair;
pub type AdjointPair = FieldPair;

impl FieldPair {
    pub fn zeros(space: &MorleySpace) -> Self {
        Self { first: space.zero_field(), second: space.zero_field() }
    }

    pub fn from_free(space: &MorleySpace, x: &[f64]) -> Self {
        let n = space.n_free();
        assert_eq!(x.len(), 2 * n);
        Self { first: space.field_from_free(&x[..n]), second: space.field_from_free(&x[n..]) }
    }

    pub fn free_values(&self, space: &MorleySpace) -> Vec<f64> {
        let mut v = space.free_values(&self.first);
        v.extend(space.free_values(&self.second));
        v
    }
}

/// Data integrated against the free basis functions, computed once per mesh.
#[derive(Debug, Clone)]
pub struct DiscreteData {
    /// `(f, φ_i)`.
    pub f: Vec<f64>,
    /// `(g, φ_i)`.
    pub g: Vec<f64>,
    /// `(ψ_{d,k}, φ_i)`.
    pub psi_d: [Vec<f64>; 2],
    /// Biharmonic stiffness on free unknowns.
    pub stiffness: SparseOperator,
    /// L² mass matrix on free unknowns.
    pub mass: SparseOperator,
}

impl DiscreteData {
    pub fn new(space: &MorleySpace, data: &ProblemData) -> Self {
        let rules = LoadRules::new(data);
        let zero: ScalarFn = Arc::new(|_| 0.0);
        let g = data.g.as_ref().unwrap_or(&zero);
        Self {
            f: load_functional(space, data, &rules, &*data.f),
            g: load_functional(space, data, &rules, &**g),
            psi_d: [
                load_functional(space, data, &rules, &*data.psi_d[0]),
                load_functional(space, data, &rules, &*data.psi_d[1]),
            ],
            stiffness: assemble_biharmonic(space),
            mass: assemble_mass(space),
        }
    }
}

/// `∫ f φ_i` for every free unknown.
pub fn load_functional(space: &MorleySpace, data: &ProblemData, rules: &LoadRules, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; space.n_free()];
    for (t, e) in space.elements().iter().enumerate() {
        let quad = rules.get(data, space, t);
        let mut local = [0.0; 6];
        for (p, &w) in quad.points_on(&space.mesh().corners(t)).zip(quad.weights()) {
            let fv = w * f(p);
            let v = e.basis.values(p);
            for i in 0..6 {
                local[i] += fv * v[i];
            }
        }
        for i in 0..6 {
            if let Some(r) = e.free[i] {
                out[r] += e.area * local[i];
            }
        }
    }
    out
}

/// `a_NC` on free unknowns: `K_ij = Σ_T |T| H_i : H_j`.
pub fn assemble_biharmonic(space: &MorleySpace) -> SparseOperator {
    let n = space.n_free();
    let mut trip = Vec::with_capacity(space.elements().len() * 36);
    for e in space.elements() {
        for i in 0..6 {
            let Some(r) = e.free[i] else { continue };
            for j in 0..6 {
                let Some(c) = e.free[j] else { continue };
                trip.push((r, c, e.area * frobenius(&e.hessians[i], &e.hessians[j])));
            }
        }
    }
    SparseOperator::from_triplets(n, n, &trip)
}

/// L² mass matrix on free unknowns (exact for the quartic integrand).
pub fn assemble_mass(space: &MorleySpace) -> SparseOperator {
    let n = space.n_free();
    let quad = QuadratureRule::<f64>::with_degree(4);
    let mut trip = Vec::with_capacity(space.elements().len() * 36);
    for (t, e) in space.elements().iter().enumerate() {
        let mut local = [[0.0; 6]; 6];
        for (p, &w) in quad.points_on(&space.mesh().corners(t)).zip(quad.weights()) {
            let v = e.basis.values(p);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * v[i] * v[j];
                }
            }
        }
        for i in 0..6 {
            let Some(r) = e.free[i] else { continue };
            for j in 0..6 {
                let Some(c) = e.free[j] else { continue };
                trip.push((r, c, e.area * local[i][j]));
            }
        }
    }
    SparseOperator::from_triplets(n, n, &trip)
}

/// `(C u, φ_i)` for a piecewise-constant control given per triangle;
/// triangles outside ω contribute nothing.
pub fn control_load(space: &MorleySpace, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.n_free()];
    for (t, e) in space.elements().iter().enumerate() {
        if !space.mesh().triangles()[t].in_omega {
            continue;
        }
        for i in 0..6 {
            if let Some(r) = e.free[i] {
                out[r] += u[t] * e.integrals[i];
            }
        }
    }
    out
}

/// Per-triangle bracket values `[η, χ]_T`.
pub fn brackets(space: &MorleySpace, eta: &MorleyField, chi: &MorleyField) -> Vec<f64> {
    (0..space.elements().len()).map(|t| bracket(&space.hessian(eta, t), &space.hessian(chi, t))).collect()
}

/// The functional `φ ↦ b_NC(η, χ, φ)` on free unknowns, together with the
/// per-triangle brackets.
pub fn apply_trilinear(space: &MorleySpace, eta: &MorleyField, chi: &MorleyField) -> Result<(Vec<f64>, Vec<f64>)> {
    space.check(eta)?;
    space.check(chi)?;
    let br = brackets(space, eta, chi);
    let mut out = vec![0.0; space.n_free()];
    for (e, &b) in space.elements().iter().zip(&br) {
        for i in 0..6 {
            if let Some(r) = e.free[i] {
                out[r] -= 0.5 * b * e.integrals[i];
            }
        }
    }
    Ok((out, br))
}

/// `b_NC(η, χ, φ)` for three fields.
pub fn trilinear(space: &MorleySpace, eta: &MorleyField, chi: &MorleyField, phi: &MorleyField) -> f64 {
    let br = brackets(space, eta, chi);
    space
        .elements()
        .iter()
        .enumerate()
        .map(|(t, e)| {
            let c = space.local_coeffs(phi, t);
            let integral: f64 = (0..6).map(|i| c[i] * e.integrals[i]).sum();
            -0.5 * br[t] * integral
        })
        .sum()
}

/// `A_NC(Ψ, Φ) + B_NC(Ψ, Ψ, Φ) − (f + C u, φ₁) − (g, φ₂)` for all free test
/// functions.
pub fn state_residual(space: &MorleySpace, disc: &DiscreteData, psi: &StatePair, u: &[f64]) -> Vec<f64> {
    let n = space.n_free();
    let x = psi.free_values(space);
    let k1 = disc.stiffness.matvec(&x[..n]);
    let k2 = disc.stiffness.matvec(&x[n..]);
    let cu = control_load(space, u);
    let mut r = vec![0.0; 2 * n];
    for i in 0..n {
        r[i] = k1[i] - disc.f[i] - cu[i];
        r[n + i] = k2[i] - disc.g[i];
    }
    for (t, e) in space.elements().iter().enumerate() {
        let h1 = space.hessian(&psi.first, t);
        let h2 = space.hessian(&psi.second, t);
        let b12 = bracket(&h1, &h2);
        let b11 = bracket(&h1, &h1);
        for i in 0..6 {
            if let Some(row) = e.free[i] {
                r[row] -= b12 * e.integrals[i];
                r[n + row] += 0.5 * b11 * e.integrals[i];
            }
        }
    }
    r
}

/// Element blocks of the state Jacobian, `J[a][b][i][k]` for test block `a`,
/// trial block `b`, local test `i`, local trial `k`.
pub(crate) fn element_jacobian(space: &MorleySpace, psi: &StatePair, t: usize) -> [[[[f64; 6]; 6]; 2]; 2] {
    let e = space.element(t);
    let h1 = space.hessian(&psi.first, t);
    let h2 = space.hessian(&psi.second, t);
    let mut j = [[[[0.0; 6]; 6]; 2]; 2];
    for k in 0..6 {
        let b1 = bracket(&h1, &e.hessians[k]);
        let b2 = bracket(&h2, &e.hessians[k]);
        for i in 0..6 {
            let kik = e.area * frobenius(&e.hessians[i], &e.hessians[k]);
            let m = e.integrals[i];
            j[0][0][i][k] = kik - b2 * m;
            j[0][1][i][k] = -b1 * m;
            j[1][0][i][k] = b1 * m;
            j[1][1][i][k] = kik;
        }
    }
    j
}

/// Fréchet derivative of [`state_residual`] in Ψ: `A_NC + 2 B_NC(Ψ, ·, ·)`.
pub fn state_jacobian(space: &MorleySpace, psi: &StatePair) -> SparseOperator {
    let n = space.n_free();
    let mut trip = Vec::with_capacity(space.elements().len() * 144);
    for (t, e) in space.elements().iter().enumerate() {
        let j = element_jacobian(space, psi, t);
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..6 {
                    let Some(r) = e.free[i] else { continue };
                    for k in 0..6 {
                        let Some(c) = e.free[k] else { continue };
                        trip.push((a * n + r, b * n + c, j[a][b][i][k]));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(2 * n, 2 * n, &trip)
}

/// Matrix and right-hand side of the adjoint equation
/// `A_NC(Φ, Θ) + 2 B_NC(Ψ, Φ, Θ) = (Ψ − Ψ_d, Φ)`. The matrix is the
/// transpose of the state Jacobian.
pub fn adjoint_system(space: &MorleySpace, disc: &DiscreteData, psi: &StatePair) -> (SparseOperator, Vec<f64>) {
    (state_jacobian(space, psi).transpose(), adjoint_rhs(space, disc, psi))
}

pub fn adjoint_rhs(space: &MorleySpace, disc: &DiscreteData, psi: &StatePair) -> Vec<f64> {
    let n = space.n_free();
    let x = psi.free_values(space);
    let m1 = disc.mass.matvec(&x[..n]);
    let m2 = disc.mass.matvec(&x[n..]);
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        rhs[i] = m1[i] - disc.psi_d[0][i];
        rhs[n + i] = m2[i] - disc.psi_d[1][i];
    }
    rhs
}

/// `½ Σ_k ‖ψ_k − ψ_{d,k}‖² + (α/2) ‖u‖²_{L²(ω)}`.
pub fn cost(space: &MorleySpace, psi: &StatePair, u: &[f64], data: &ProblemData) -> f64 {
    let rules = LoadRules::new(data);
    let mut j = 0.0;
    for t in 0..space.elements().len() {
        let quad = rules.get(data, space, t);
        let corners = space.mesh().corners(t);
        let area = space.element(t).area;
        let mut s = 0.0;
        for (p, &w) in quad.points_on(&corners).zip(quad.weights()) {
            let d1 = space.value(&psi.first, t, p) - (data.psi_d[0])(p);
            let d2 = space.value(&psi.second, t, p) - (data.psi_d[1])(p);
            s += w * (d1 * d1 + d2 * d2);
        }
        j += 0.5 * area * s;
        if space.mesh().triangles()[t].in_omega {
            j += 0.5 * data.alpha * u[t] * u[t] * area;
        }
    }
    j
}
