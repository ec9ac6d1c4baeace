use std::sync::Arc;

use super::*;
use crate::control::SolverDiagnostics;
use crate::forms::{FieldPair, ScalarFn};
use crate::mesh::generate_square_mesh;
use crate::morley::{ExactFn, MorleyField};

struct Quadratic([f64; 6]);

/// `c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²`
impl ExactFn for Quadratic {
    fn value(&self, p: [f64; 2]) -> f64 {
        let c = &self.0;
        c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[0] * p[0] + c[4] * p[0] * p[1] + c[5] * p[1] * p[1]
    }
    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        let c = &self.0;
        [c[1] + 2.0 * c[3] * p[0] + c[4] * p[1], c[2] + c[4] * p[0] + 2.0 * c[5] * p[1]]
    }
    fn hessian(&self, _: [f64; 2]) -> Sym2<f64> {
        [2.0 * self.0[3], self.0[4], 2.0 * self.0[5]]
    }
}

const PARABOLOID: Quadratic = Quadratic([0.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
const X: Quadratic = Quadratic([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);

fn constant(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

fn solution(space: &MorleySpace, psi: [MorleyField; 2], theta: [MorleyField; 2], u: f64, data: &ProblemData) -> OptimalitySolution {
    let [p1, p2] = psi;
    let [t1, t2] = theta;
    OptimalitySolution {
        state: FieldPair { first: p1, second: p2 },
        adjoint: FieldPair { first: t1, second: t2 },
        control: ControlField::constant(space, data, u),
        diagnostics: SolverDiagnostics::default(),
    }
}

#[test]
fn zero_solution_of_zero_data_has_zero_estimator() {
    let space = MorleySpace::new(generate_square_mesh(3)).unwrap();
    let data = ProblemData::new(constant(0.0), [constant(0.0), constant(0.0)], 1.0, -1.0, 1.0).unwrap();
    let z = space.zero_field();
    let sol = solution(&space, [z.clone(), z.clone()], [z.clone(), z], 0.0, &data);
    let est = estimate(&space, &data, &sol, &EstimatorOptions::default()).unwrap();
    assert_eq!(est.eta, 0.0);
}

#[test]
fn volume_terms_match_closed_forms() {
    let n = 4;
    let space = MorleySpace::new(generate_square_mesh(n)).unwrap();
    let data = ProblemData::new(constant(1.0), [constant(0.0), constant(0.0)], 1.0, -0.5, 0.0).unwrap();
    let psi1 = space.interpolate(&PARABOLOID);
    let theta1 = space.interpolate(&X);
    let sol = solution(&space, [psi1, space.zero_field()], [theta1, space.zero_field()], 0.0, &data);
    let est = estimate(&space, &data, &sol, &EstimatorOptions::default()).unwrap();
    let h4 = (2.0f64.sqrt() / n as f64).powi(4);

    // f = 1, [ψ₁, ψ₂] = 0, [ψ₁, ψ₁] = 8 everywhere.
    let state: f64 = est.triangles.iter().map(|t| t.state).sum();
    assert!((state - h4 * 65.0).abs() < 1e-12, "{state}");

    // ψ₁ − ψ_d,1 + [ψ₂, θ₁] − [ψ₁, θ₂] = x² + y²; second residual [ψ₁, θ₁] = 0.
    let res: f64 = est.triangles.iter().map(|t| t.adjoint_res).sum();
    assert!((res - h4 * 28.0 / 45.0).abs() < 1e-12, "{res}");

    // |D²ψ₁|² = 8 times the second central moment of x on every triangle.
    let mesh = space.mesh();
    let moment: f64 = (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.corners(t);
            let xc = (c[0][0] + c[1][0] + c[2][0]) / 3.0;
            mesh.area(t) / 12.0 * c.iter().map(|p| (p[0] - xc).powi(2)).sum::<f64>()
        })
        .sum();
    let p0: f64 = est.triangles.iter().map(|t| t.adjoint_p0).sum();
    assert!((p0 - 8.0 * moment).abs() < 1e-12, "{p0}");

    // ũ = max(−x, −1/2) against u_h = 0 gives ∫ min(x, 1/2)² = 1/6.
    assert!((est.eta_con.powi(2) - 1.0 / 6.0).abs() < 1e-12);

    // A global quadratic has no Hessian jumps.
    let jumps = est.edges.iter().map(|e| e.state + e.adjoint).fold(0.0, f64::max);
    assert!(jumps < 1e-20, "{jumps}");
    assert!((est.eta.powi(2) - (est.eta_st.powi(2) + est.eta_ad.powi(2) + est.eta_con.powi(2))).abs() < 1e-12);
}

#[test]
fn airy_residual_variant_uses_g() {
    let space = MorleySpace::new(generate_square_mesh(2)).unwrap();
    let data = ProblemData::new(constant(0.0), [constant(0.0), constant(0.0)], 1.0, -1.0, 1.0).unwrap().with_g(constant(4.0));
    let z = space.zero_field();
    let sol = solution(&space, [space.interpolate(&PARABOLOID), z.clone()], [z.clone(), z], 0.0, &data);
    let opts = EstimatorOptions { airy_term: AiryTerm::Residual, ..EstimatorOptions::default() };
    let est = estimate(&space, &data, &sol, &opts).unwrap();
    // g − ½[ψ₁, ψ₁] = 4 − 4 = 0, so only ‖f + Cu + [ψ₁, ψ₂]‖ = 0 remains.
    assert!(est.triangles.iter().all(|t| t.state.abs() < 1e-20));
}

#[test]
fn boundary_trace_rule_adds_boundary_edges() {
    let n = 3;
    let space = MorleySpace::new(generate_square_mesh(n)).unwrap();
    let data = ProblemData::new(constant(0.0), [constant(0.0), constant(0.0)], 1.0, -1.0, 1.0).unwrap();
    let z = space.zero_field();
    let sol = solution(&space, [space.interpolate(&PARABOLOID), z.clone()], [z.clone(), z], 0.0, &data);
    let opts = EstimatorOptions { boundary_edges: BoundaryEdges::Trace, ..EstimatorOptions::default() };
    let est = estimate(&space, &data, &sol, &opts).unwrap();
    // D²ψ₁ τ = 2τ on each of the 4n boundary edges of length 1/n.
    let edge_sum: f64 = est.edges.iter().map(|e| e.state).sum();
    let want = 4.0 * n as f64 * 4.0 / (n * n) as f64;
    assert!((edge_sum - want).abs() < 1e-12, "{edge_sum} vs {want}");
}

#[test]
fn hessian_jump_oracle() {
    let space = MorleySpace::new(generate_square_mesh(3)).unwrap();
    let mesh = space.mesh();
    let free: Vec<f64> = (0..space.n_free()).map(|i| (1.3 * i as f64).cos()).collect();
    let field = space.field_from_free(&free);
    let mut total = 0.0;
    for e in 0..mesh.n_edges() {
        let edge = &mesh.edges()[e];
        let got = edge_jump_sq(&space, &field, e, BoundaryEdges::Zero);
        let Some(r) = edge.right else {
            assert_eq!(got, 0.0);
            continue;
        };
        // Tangential derivative of the gradient jump, by differencing along the edge.
        let a = mesh.vertices()[edge.vertices[0]];
        let b = mesh.vertices()[edge.vertices[1]];
        let jump_grad = |s: f64| {
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let gl = space.gradient(&field, edge.left, p);
            let gr = space.gradient(&field, r, p);
            [gl[0] - gr[0], gl[1] - gr[1]]
        };
        let (g0, g1) = (jump_grad(0.0), jump_grad(1.0));
        let d = [(g1[0] - g0[0]) / edge.length, (g1[1] - g0[1]) / edge.length];
        let want = edge.length.powi(2) * (d[0] * d[0] + d[1] * d[1]);
        assert!((got - want).abs() < 1e-9 * (1.0 + want), "{got} vs {want}");
        total += want;
    }
    assert!(total > 0.0);
}

#[test]
fn marking_indicators_conserve_total() {
    let space = MorleySpace::new(generate_square_mesh(3)).unwrap();
    let data = ProblemData::new(constant(1.0), [constant(0.5), constant(0.0)], 1.0, -1.0, 1.0).unwrap();
    let free: Vec<f64> = (0..space.n_free()).map(|i| (i as f64 * 0.7).sin()).collect();
    let f = space.field_from_free(&free);
    let sol = solution(&space, [f.clone(), f.clone()], [f.clone(), f], 0.2, &data);
    let est = estimate(&space, &data, &sol, &EstimatorOptions::default()).unwrap();
    let total: f64 = est.marking_indicators(space.mesh()).iter().sum();
    assert!((total - est.eta.powi(2)).abs() < 1e-12 * total);
}

#[test]
fn oscillation_of_linear_data() {
    let mesh = generate_square_mesh::<f64>(4);
    let quad = QuadratureRule::with_degree(4);
    assert!(data_oscillation(&mesh, 1, &quad, |p| 3.0 * p[0] - p[1]).unwrap() < 1e-14);
    let osc = data_oscillation(&mesh, 0, &quad, |p| p[0]).unwrap();
    let want: f64 = (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.corners(t);
            let xc = (c[0][0] + c[1][0] + c[2][0]) / 3.0;
            mesh.diameter(t).powi(4) * mesh.area(t) / 12.0 * c.iter().map(|p| (p[0] - xc).powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt();
    assert!((osc - want).abs() < 1e-14);
    assert!(data_oscillation(&mesh, 2, &quad, |p| p[0]).is_err());
}

#[test]
fn doerfler_basic_cases() {
    assert_eq!(doerfler_mark(&[1.0, 5.0, 3.0, 1.0], 0.5).unwrap(), vec![1]);
    assert_eq!(doerfler_mark(&[1.0, 5.0, 3.0, 1.0], 0.6).unwrap(), vec![1, 2]);
    assert_eq!(doerfler_mark(&[2.0, 2.0, 2.0], 0.5).unwrap(), vec![0, 1]);
    assert_eq!(doerfler_mark(&[0.0, 1.0, 0.0], 1.0).unwrap(), vec![1]);
    assert!(doerfler_mark(&[0.0; 4], 0.3).unwrap().is_empty());
    assert!(doerfler_mark(&[1.0], 0.0).is_err());
    assert!(doerfler_mark(&[1.0], 1.5).is_err());
    assert!(doerfler_mark(&[1.0, f64::NAN], 0.5).is_err());
    assert!(doerfler_mark(&[1.0, -1.0], 0.5).is_err());
}

#[test]
fn dump_has_one_row_per_entity() {
    let space = MorleySpace::new(generate_square_mesh(2)).unwrap();
    let data = ProblemData::new(constant(1.0), [constant(0.0), constant(0.0)], 1.0, -1.0, 1.0).unwrap();
    let z = space.zero_field();
    let sol = solution(&space, [z.clone(), z.clone()], [z.clone(), z], 0.0, &data);
    let est = estimate(&space, &data, &sol, &EstimatorOptions::default()).unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DUMP_HEADER).unwrap();
    est.write_dump(&mut w, space.mesh(), 0, &[]).unwrap();
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    let mesh = space.mesh();
    assert_eq!(text.lines().count(), 1 + mesh.n_triangles() + mesh.n_edges());
    assert!(text.starts_with("entity_kind,entity_id,level,eta_sq_state"));
}
