//! Property checks shared by the `properties` and `acceptance` targets.
//! Each check returns a description of the first violation.

use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use vk_morley::control::{pdas_solve, SolverConfig};
use vk_morley::estimator::doerfler_mark;
use vk_morley::forms::{
    adjoint_system, assemble_biharmonic, state_jacobian, state_residual, trilinear, DiscreteData, FieldPair, ProblemData,
};
use vk_morley::harness::case_square;
use vk_morley::mesh::{generate_lshape_mesh, generate_square_mesh};
use vk_morley::morley::{LocalBasis, MorleySpace, QuadratureRule};
use vk_morley::Mesh;

pub type Check = Result<(), String>;

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Check {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn angle_ok(c: &[[f64; 2]; 3], min_deg: f64) -> bool {
    (0..3).all(|k| {
        let a = c[k];
        let b = c[(k + 1) % 3];
        let d = c[(k + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [d[0] - a[0], d[1] - a[1]];
        let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
        cos.acos().to_degrees() >= min_deg
    })
}

fn ccw(mut c: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let area = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    if area < 0.0 {
        c.swap(1, 2);
    }
    c
}

/// Counter-clockwise triangles in `[-1,1]²` with all angles above 8°, and
/// a flip pattern for the edge normals.
fn triangle() -> impl Strategy<Value = ([[f64; 2]; 3], [bool; 3])> {
    (prop::array::uniform6(-1.0f64..1.0), prop::array::uniform3(any::<bool>()))
        .prop_map(|(p, flips)| (ccw([[p[0], p[1]], [p[2], p[3]], [p[4], p[5]]]), flips))
        .prop_filter("well shaped", |(c, _)| angle_ok(c, 8.0))
}

/// Unit normal of local edge k (opposite vertex k), flipped where asked.
fn normals(c: &[[f64; 2]; 3], flips: &[bool; 3]) -> [[f64; 2]; 3] {
    std::array::from_fn(|k| {
        let a = c[(k + 1) % 3];
        let b = c[(k + 2) % 3];
        let l = (b[0] - a[0]).hypot(b[1] - a[1]);
        let s = if flips[k] { -1.0 } else { 1.0 };
        [s * (b[1] - a[1]) / l, -s * (b[0] - a[0]) / l]
    })
}

fn midpoint(c: &[[f64; 2]; 3], k: usize) -> [f64; 2] {
    let a = c[(k + 1) % 3];
    let b = c[(k + 2) % 3];
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn diameter(c: &[[f64; 2]; 3]) -> f64 {
    (0..3).map(|k| (c[k][0] - c[(k + 1) % 3][0]).hypot(c[k][1] - c[(k + 1) % 3][1])).fold(0.0, f64::max)
}

pub fn basis_duality() -> Check {
    run(1000, triangle(), |(c, flips)| {
        let n = normals(&c, &flips);
        let basis = LocalBasis::new(&c, &n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let h = diameter(&c);
        for i in 0..6 {
            for k in 0..3 {
                // Vertex values of edge functions scale like h, normal
                // derivatives of vertex functions like 1/h.
                let want = if i == k { 1.0 } else { 0.0 };
                let scale = if i < 3 { 1.0 } else { 1.0 / h };
                prop_assert!((basis.value(i, c[k]) - want).abs() * scale < 1e-10);
                let g = basis.gradient(i, midpoint(&c, k));
                let dn = g[0] * n[k][0] + g[1] * n[k][1];
                let want = if i == 3 + k { 1.0 } else { 0.0 };
                let scale = if i < 3 { h } else { 1.0 };
                prop_assert!((dn - want).abs() * scale < 1e-10);
            }
        }
        Ok(())
    })
}

pub fn quadratic_reproduction() -> Check {
    run(200, (triangle(), prop::array::uniform6(-3.0f64..3.0)), |((c, flips), q)| {
        let n = normals(&c, &flips);
        let basis = LocalBasis::new(&c, &n).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let value = |p: [f64; 2]| q[0] + q[1] * p[0] + q[2] * p[1] + q[3] * p[0] * p[0] + q[4] * p[0] * p[1] + q[5] * p[1] * p[1];
        let grad = |p: [f64; 2]| [q[1] + 2.0 * q[3] * p[0] + q[4] * p[1], q[2] + q[4] * p[0] + 2.0 * q[5] * p[1]];
        let dofs: Vec<f64> = (0..3)
            .map(|k| value(c[k]))
            .chain((0..3).map(|k| {
                let g = grad(midpoint(&c, k));
                g[0] * n[k][0] + g[1] * n[k][1]
            }))
            .collect();
        let mut hess = [0.0; 3];
        for (i, d) in dofs.iter().enumerate() {
            let hi = basis.hessian(i);
            for j in 0..3 {
                hess[j] += d * hi[j];
            }
        }
        let exact = [2.0 * q[3], q[4], 2.0 * q[5]];
        for j in 0..3 {
            prop_assert!((hess[j] - exact[j]).abs() < 1e-9 * (1.0 + exact[j].abs()));
        }
        let p = [(c[0][0] + 2.0 * c[1][0] + c[2][0]) / 4.0, (c[0][1] + 2.0 * c[1][1] + c[2][1]) / 4.0];
        let v: f64 = dofs.iter().enumerate().map(|(i, d)| d * basis.value(i, p)).sum();
        prop_assert!((v - value(p)).abs() < 1e-10 * (1.0 + value(p).abs()));
        Ok(())
    })
}

fn space_on(mesh: Mesh) -> MorleySpace {
    MorleySpace::new(mesh).expect("valid mesh")
}

fn random_pair(space: &MorleySpace, rng: &mut StdRng) -> FieldPair {
    let x: Vec<f64> = (0..2 * space.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FieldPair::from_free(space, &x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn energy_identity() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    for mesh in [generate_square_mesh(5), generate_lshape_mesh().red_refine()] {
        let space = space_on(mesh);
        let k = assemble_biharmonic(&space);
        let quad = QuadratureRule::with_degree(2);
        for _ in 0..20 {
            let x: Vec<f64> = (0..space.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let energy = dot(&x, &k.matvec(&x));
            let nc = space.broken_norms(&space.field_from_free(&x), None, &quad).h2;
            ensure((energy - nc * nc).abs() <= 1e-10 * energy, || format!("vᵀKv = {energy}, ‖v‖² = {}", nc * nc))?;
        }
    }
    Ok(())
}

pub fn trilinear_symmetry() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let space = space_on(generate_lshape_mesh().red_refine());
    for _ in 0..20 {
        let a = random_pair(&space, &mut rng);
        let b = random_pair(&space, &mut rng);
        let (eta, chi, phi) = (&a.first, &a.second, &b.first);
        let lhs = trilinear(&space, eta, chi, phi);
        let rhs = trilinear(&space, chi, eta, phi);
        let scale = trilinear(&space, eta, eta, phi).abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        ensure((lhs - rhs).abs() <= 1e-12 * scale, || format!("b(η,χ,φ) = {lhs}, b(χ,η,φ) = {rhs}"))?;
    }
    Ok(())
}

fn smooth_data() -> ProblemData {
    ProblemData::new(
        Arc::new(|p: [f64; 2]| 100.0 * (p[0] + 0.3 * p[1])),
        [Arc::new(|p: [f64; 2]| p[0] * p[1]), Arc::new(|_| 0.2)],
        1e-2,
        -5.0,
        5.0,
    )
    .expect("valid data")
    .with_g(Arc::new(|p: [f64; 2]| 40.0 * p[1]))
}

pub fn jacobian_second_order() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let space = space_on(generate_square_mesh(4));
    let disc = DiscreteData::new(&space, &smooth_data());
    let u = vec![1.0; space.mesh().n_triangles()];
    let psi = random_pair(&space, &mut rng);
    let dir = random_pair(&space, &mut rng);
    let x = psi.free_values(&space);
    let d = dir.free_values(&space);
    let r0 = state_residual(&space, &disc, &psi, &u);
    let jd = state_jacobian(&space, &psi).matvec(&d);
    let at = |s: f64| {
        let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
        state_residual(&space, &disc, &FieldPair::from_free(&space, &y), &u)
    };

    let remainders: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let eps = 0.1 / 2f64.powi(k);
            let r = at(eps);
            let rem: Vec<f64> = (0..r.len()).map(|i| r[i] - r0[i] - eps * jd[i]).collect();
            (eps, norm(&rem))
        })
        .collect();
    for w in remainders.windows(2) {
        let slope = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        ensure((slope - 2.0).abs() < 0.05, || format!("Taylor remainder slope {slope}"))?;
    }

    // The residual is quadratic, so central differences recover J·d up to roundoff.
    let eps = 1e-3;
    let (rp, rm) = (at(eps), at(-eps));
    let diff: Vec<f64> = (0..rp.len()).map(|i| (rp[i] - rm[i]) / (2.0 * eps) - jd[i]).collect();
    ensure(norm(&diff) <= 1e-8 * norm(&jd), || format!("central difference misses J·d by {}", norm(&diff)))
}

pub fn adjoint_transpose() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let space = space_on(generate_lshape_mesh().red_refine());
    let disc = DiscreteData::new(&space, &smooth_data());
    let k = assemble_biharmonic(&space);
    let n = space.n_free();
    for _ in 0..10 {
        let psi = random_pair(&space, &mut rng);
        let phi = random_pair(&space, &mut rng);
        let theta = random_pair(&space, &mut rng);
        let (adj, _) = adjoint_system(&space, &disc, &psi);
        let (p, t) = (phi.free_values(&space), theta.free_values(&space));
        let lhs = dot(&p, &adj.matvec(&t));

        // Linearisation of the state operator at Ψ in direction Φ, tested with Θ.
        let a = dot(&t[..n], &k.matvec(&p[..n])) + dot(&t[n..], &k.matvec(&p[n..]));
        let b = 2.0 * trilinear(&space, &phi.first, &psi.second, &theta.first)
            + 2.0 * trilinear(&space, &psi.first, &phi.second, &theta.first)
            - 2.0 * trilinear(&space, &psi.first, &phi.first, &theta.second);
        ensure((lhs - a - b).abs() <= 1e-12 * (a.abs() + b.abs()), || format!("Φᵀ A Θ = {lhs}, linearisation {}", a + b))?;
    }
    Ok(())
}

pub fn projection_fixed_point() -> Check {
    let case = case_square();
    let data = case.problem_data(4, 20).map_err(|e| e.to_string())?;
    let space = space_on(generate_square_mesh(4));
    let sol = pdas_solve(&space, &data, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let mut active = 0;
    for (t, e) in space.elements().iter().enumerate() {
        let c = space.local_coeffs(&sol.adjoint.first, t);
        let mean: f64 = (0..6).map(|i| c[i] * e.integrals[i]).sum::<f64>() / e.area;
        let projected = (-mean / data.alpha).clamp(data.u_a, data.u_b);
        if projected == data.u_a || projected == data.u_b {
            active += 1;
        }
        let v = sol.control.values[t];
        ensure((v - projected).abs() <= 1e-12 * v.abs().max(1.0), || format!("triangle {t}: u = {v}, projection {projected}"))?;
    }
    ensure(active > 0, || "no active bounds, the check is vacuous".into())
}

fn best_cardinality(ind: &[f64], theta: f64) -> usize {
    let total: f64 = ind.iter().sum();
    (0u32..1 << ind.len())
        .filter(|m| (0..ind.len()).filter(|i| m >> i & 1 == 1).map(|i| ind[i]).sum::<f64>() >= theta * total)
        .map(|m| m.count_ones() as usize)
        .min()
        .expect("the full set always qualifies")
}

pub fn doerfler_minimality() -> Check {
    let strategy = (prop::collection::vec(0.0f64..10.0, 1..=12), 0.05f64..1.0);
    run(300, strategy, |(ind, theta)| {
        prop_assume!(ind.iter().sum::<f64>() > 0.0);
        let marked = doerfler_mark(&ind, theta).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let total: f64 = ind.iter().sum();
        let sum: f64 = marked.iter().map(|&i| ind[i]).sum();
        prop_assert!(sum >= theta * total);
        prop_assert_eq!(marked.len(), best_cardinality(&ind, theta));
        Ok(())
    })
}

fn audit_conformity(mesh: &Mesh) -> Check {
    ensure(mesh.hanging_vertices().is_empty(), || "hanging vertices".into())?;
    for t in 0..mesh.n_triangles() {
        ensure(mesh.area(t) > 0.0, || format!("triangle {t} is not counter-clockwise"))?;
    }
    let mut count = HashMap::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let mut e = t.edge_vertices(k);
            e.sort();
            *count.entry(e).or_insert(0) += 1;
        }
    }
    for e in mesh.edges() {
        let mut key = e.vertices;
        key.sort();
        let want = if e.is_boundary() { 1 } else { 2 };
        ensure(count.get(&key) == Some(&want), || format!("edge {key:?} has {:?} triangles", count.get(&key)))?;
    }
    ensure(count.len() == mesh.n_edges(), || "edge list out of sync with triangles".into())
}

pub fn nvb_conformity() -> Check {
    run(16, (any::<u64>(), any::<bool>()), |(seed, lshape)| {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut mesh: Mesh = if lshape { generate_lshape_mesh() } else { generate_square_mesh(3) };
        let initial = mesh.min_angle_overall();
        let area = mesh.total_area();
        for _ in 0..10 {
            let marked: Vec<usize> = (0..mesh.n_triangles()).filter(|_| rng.gen_bool(0.15)).collect();
            mesh = mesh.nvb_refine(&marked).map_err(|e| TestCaseError::fail(e.to_string()))?;
            audit_conformity(&mesh).map_err(TestCaseError::fail)?;
            prop_assert!(mesh.min_angle_overall() >= initial / 2.0 - 1e-12);
            prop_assert!((mesh.total_area() - area).abs() < 1e-12 * area);
        }
        Ok(())
    })
}

/// Every property check with its name.
#[allow(dead_code)]
pub fn all() -> Vec<(&'static str, fn() -> Check)> {
    vec![
        ("Morley DOF duality on 1000 random triangles", basis_duality),
        ("quadratic reproduction", quadratic_reproduction),
        ("energy identity vᵀKv = ‖v‖²_NC", energy_identity),
        ("trilinear symmetry", trilinear_symmetry),
        ("Jacobian Taylor slope 2", jacobian_second_order),
        ("adjoint = Jacobian transpose", adjoint_transpose),
        ("projection fixed point", projection_fixed_point),
        ("Dörfler minimality", doerfler_minimality),
        ("NVB conformity and angles", nvb_conformity),
    ]
}
