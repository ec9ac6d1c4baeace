//! Solver for the discrete optimality system: Newton for the state,
//! a linear solve for the adjoint, and a primal-dual active set outer loop
//! for the box-constrained piecewise-constant control.
//!
//! For a fixed guess of the active sets the control is eliminated on the
//! inactive triangles through `u_T = −(1/(α|T|)) ∫_T θ₁`, and the coupled
//! state–adjoint system is solved by Newton's method. This is the
//! semismooth Newton method for the projection formula written as an
//! active set iteration: the outer loop only updates the sets.

use crate::error::{Error, Result};
use crate::forms::{
    adjoint_rhs, control_load, cost, element_jacobian, state_jacobian, state_residual, AdjointPair, DiscreteData,
    FieldPair, ProblemData, SparseOperator, StatePair,
};
use crate::morley::{bracket, MorleySpace};

/// Piecewise-constant control, one value per triangle. Triangles outside ω
/// carry zero and are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub values: Vec<f64>,
    pub u_a: f64,
    pub u_b: f64,
}

impl ControlField {
    pub fn constant(space: &MorleySpace, data: &ProblemData, c: f64) -> Self {
        let values = space.mesh().triangles().iter().map(|t| if t.in_omega { c } else { 0.0 }).collect();
        Self { values, u_a: data.u_a, u_b: data.u_b }
    }

    /// `clip(candidate_T)` on every ω-triangle.
    pub fn projected(space: &MorleySpace, data: &ProblemData, candidates: &[f64]) -> Self {
        let values = space
            .mesh()
            .triangles()
            .iter()
            .zip(candidates)
            .map(|(t, &c)| if t.in_omega { data.clip(c) } else { 0.0 })
            .collect();
        Self { values, u_a: data.u_a, u_b: data.u_b }
    }

    pub fn is_feasible(&self, space: &MorleySpace) -> bool {
        space
            .mesh()
            .triangles()
            .iter()
            .zip(&self.values)
            .all(|(t, &v)| !t.in_omega || (self.u_a <= v && v <= self.u_b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Newton stops when the Euclidean norm of the update drops below this.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub pdas_max_iter: usize,
    /// Newton step length, 1 for plain Newton.
    pub damping: f64,
    /// Start each active set step from the previous iterate rather than from
    /// the biharmonic initial guess.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { newton_tol: 1e-9, newton_max_iter: 50, pdas_max_iter: 20, damping: 1.0, warm_start: true }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 || self.pdas_max_iter == 0 {
            return Err(Error::InvalidArgument("tolerances and iteration caps must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverDiagnostics {
    /// Newton iterations of each active set step.
    pub newton_iterations: Vec<usize>,
    pub pdas_steps: usize,
    /// Euclidean norms of the final state and adjoint residuals.
    pub state_residual: f64,
    pub adjoint_residual: f64,
    pub cost: f64,
    /// `max_T |u_T − clip(candidate_T)|`.
    pub projection_defect: f64,
}

#[derive(Debug, Clone)]
pub struct OptimalitySolution {
    pub state: StatePair,
    pub adjoint: AdjointPair,
    pub control: ControlField,
    pub diagnostics: SolverDiagnostics,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn singular_jacobian(e: Error) -> Error {
    match e {
        Error::SingularSystem(msg) => Error::SingularJacobian(msg),
        other => other,
    }
}

/// Newton's method for the state equation with the control fixed.
/// Returns the state and the number of iterations.
pub fn solve_state(
    space: &MorleySpace,
    disc: &DiscreteData,
    u: &ControlField,
    config: &SolverConfig,
    initial: Option<&StatePair>,
) -> Result<(StatePair, usize)> {
    let mut x = match initial {
        Some(psi) => psi.free_values(space),
        None => vec![0.0; 2 * space.n_free()],
    };
    for it in 1..=config.newton_max_iter {
        let psi = FieldPair::from_free(space, &x);
        let r = state_residual(space, disc, &psi, &u.values);
        let dx = state_jacobian(space, &psi).solve(&r).map_err(singular_jacobian)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= config.damping * di;
        }
        let step = config.damping * norm(&dx);
        if step < config.newton_tol {
            return Ok((FieldPair::from_free(space, &x), it));
        }
        if !step.is_finite() {
            return Err(Error::NoConvergence { iterations: it, last_update: step });
        }
        if it == config.newton_max_iter {
            return Err(Error::NoConvergence { iterations: it, last_update: step });
        }
    }
    unreachable!()
}

/// Solves the linear adjoint equation for a given state.
pub fn solve_adjoint(space: &MorleySpace, disc: &DiscreteData, psi: &StatePair) -> Result<AdjointPair> {
    let rhs = adjoint_rhs(space, disc, psi);
    let theta = state_jacobian(space, psi).factorize()?.solve_transpose(&rhs)?;
    Ok(FieldPair::from_free(space, &theta))
}

/// Unclipped control candidates `−(1/(α|T|)) ∫_T θ₁` on ω-triangles, zero elsewhere.
pub fn control_update_candidate(space: &MorleySpace, theta: &AdjointPair, data: &ProblemData) -> Vec<f64> {
    space
        .elements()
        .iter()
        .enumerate()
        .map(|(t, e)| {
            if !space.mesh().triangles()[t].in_omega {
                return 0.0;
            }
            let c = space.local_coeffs(&theta.first, t);
            let mean = (0..6).map(|i| c[i] * e.integrals[i]).sum::<f64>() / e.area;
            -mean / data.alpha
        })
        .collect()
}

/// Solution of the biharmonic parts of the state and adjoint equations
/// with the control fixed: the initial guess of the active set method.
pub fn biharmonic_guess(space: &MorleySpace, disc: &DiscreteData, u: &ControlField) -> Result<(StatePair, AdjointPair)> {
    let n = space.n_free();
    let k = disc.stiffness.factorize()?;
    let cu = control_load(space, &u.values);
    let f1: Vec<f64> = (0..n).map(|i| disc.f[i] + cu[i]).collect();
    let mut x = k.solve(&f1)?;
    x.extend(k.solve(&disc.g)?);
    let psi = FieldPair::from_free(space, &x);
    let rhs = adjoint_rhs(space, disc, &psi);
    let mut th = k.solve(&rhs[..n])?;
    th.extend(k.solve(&rhs[n..])?);
    Ok((psi, FieldPair::from_free(space, &th)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Inactive,
    Lower,
    Upper,
    Outside,
}

fn classify(space: &MorleySpace, data: &ProblemData, candidates: &[f64]) -> Vec<Status> {
    space
        .mesh()
        .triangles()
        .iter()
        .zip(candidates)
        .map(|(t, &c)| {
            if !t.in_omega {
                Status::Outside
            } else if c > data.u_b {
                Status::Upper
            } else if c < data.u_a {
                Status::Lower
            } else {
                Status::Inactive
            }
        })
        .collect()
}

fn control_for(space: &MorleySpace, data: &ProblemData, sets: &[Status], theta: &AdjointPair) -> Vec<f64> {
    let cand = control_update_candidate(space, theta, data);
    sets.iter()
        .zip(cand)
        .map(|(s, c)| match s {
            Status::Inactive => c,
            Status::Lower => data.u_a,
            Status::Upper => data.u_b,
            Status::Outside => 0.0,
        })
        .collect()
}

/// Residual of the coupled system with fixed active sets, `[state; adjoint]`.
fn coupled_residual(space: &MorleySpace, disc: &DiscreteData, data: &ProblemData, sets: &[Status], x: &[f64]) -> Vec<f64> {
    let n2 = 2 * space.n_free();
    let psi = FieldPair::from_free(space, &x[..n2]);
    let theta = FieldPair::from_free(space, &x[n2..]);
    let u = control_for(space, data, sets, &theta);
    let mut r = state_residual(space, disc, &psi, &u);
    let jt = state_jacobian(space, &psi).transpose().matvec(&x[n2..]);
    let rhs = adjoint_rhs(space, disc, &psi);
    r.extend(jt.iter().zip(&rhs).map(|(a, b)| a - b));
    r
}

/// Jacobian of [`coupled_residual`].
fn coupled_jacobian(space: &MorleySpace, disc: &DiscreteData, data: &ProblemData, sets: &[Status], x: &[f64]) -> SparseOperator {
    let n = space.n_free();
    let n2 = 2 * n;
    let psi = FieldPair::from_free(space, &x[..n2]);
    let theta = FieldPair::from_free(space, &x[n2..]);
    let mut trip = Vec::with_capacity(space.elements().len() * 600);
    for (t, e) in space.elements().iter().enumerate() {
        let j = element_jacobian(space, &psi, t);
        let c1 = space.local_coeffs(&theta.first, t);
        let c2 = space.local_coeffs(&theta.second, t);
        let int1: f64 = (0..6).map(|i| c1[i] * e.integrals[i]).sum();
        let int2: f64 = (0..6).map(|i| c2[i] * e.integrals[i]).sum();
        for i in 0..6 {
            let Some(r) = e.free[i] else { continue };
            for k in 0..6 {
                let Some(c) = e.free[k] else { continue };
                for a in 0..2 {
                    for b in 0..2 {
                        // State rows: J. Adjoint rows against Θ columns: Jᵀ.
                        trip.push((a * n + r, b * n + c, j[a][b][i][k]));
                        trip.push((n2 + a * n + r, n2 + b * n + c, j[b][a][k][i]));
                    }
                }
                // Adjoint rows against Ψ columns: derivative of 2B(Ψ, Φ, Θ).
                let bki = bracket(&e.hessians[k], &e.hessians[i]);
                trip.push((n2 + r, c, bki * int2));
                trip.push((n2 + r, n + c, -bki * int1));
                trip.push((n2 + n + r, c, -bki * int1));
                if sets[t] == Status::Inactive {
                    trip.push((r, n2 + c, e.integrals[i] * e.integrals[k] / (data.alpha * e.area)));
                }
            }
        }
    }
    // Mass terms from −(Ψ, Φ).
    for (r, c, v) in disc.mass.entries() {
        trip.push((n2 + r, c, -v));
        trip.push((n2 + n + r, n + c, -v));
    }
    SparseOperator::from_triplets(2 * n2, 2 * n2, &trip)
}

fn newton_coupled(
    space: &MorleySpace,
    disc: &DiscreteData,
    data: &ProblemData,
    config: &SolverConfig,
    sets: &[Status],
    x: &mut [f64],
) -> Result<usize> {
    for it in 1..=config.newton_max_iter {
        let r = coupled_residual(space, disc, data, sets, x);
        let dx = coupled_jacobian(space, disc, data, sets, x).solve(&r).map_err(singular_jacobian)?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= config.damping * di;
        }
        let step = config.damping * norm(&dx);
        if step < config.newton_tol {
            return Ok(it);
        }
        if !step.is_finite() || it == config.newton_max_iter {
            return Err(Error::NoConvergence { iterations: it, last_update: step });
        }
    }
    unreachable!()
}

/// Newton inside, primal-dual active set outside.
pub fn pdas_solve(space: &MorleySpace, data: &ProblemData, config: &SolverConfig) -> Result<OptimalitySolution> {
    data.validate()?;
    config.validate()?;
    let disc = DiscreteData::new(space, data);
    let n2 = 2 * space.n_free();

    let u0 = ControlField::constant(space, data, data.clip(0.0));
    let (psi0, theta0) = biharmonic_guess(space, &disc, &u0)?;
    let mut start = psi0.free_values(space);
    start.extend(theta0.free_values(space));
    let mut sets = classify(space, data, &control_update_candidate(space, &theta0, data));

    let mut x = start.clone();
    let mut diagnostics = SolverDiagnostics::default();
    loop {
        if diagnostics.pdas_steps == config.pdas_max_iter {
            return Err(Error::ActiveSetNoConvergence { iterations: diagnostics.pdas_steps });
        }
        if !config.warm_start {
            x.copy_from_slice(&start);
        }
        let its = newton_coupled(space, &disc, data, config, &sets, &mut x)?;
        diagnostics.newton_iterations.push(its);
        diagnostics.pdas_steps += 1;
        let theta = FieldPair::from_free(space, &x[n2..]);
        let next = classify(space, data, &control_update_candidate(space, &theta, data));
        if next == sets {
            break;
        }
        sets = next;
    }

    let state = FieldPair::from_free(space, &x[..n2]);
    let adjoint = FieldPair::from_free(space, &x[n2..]);
    let candidates = control_update_candidate(space, &adjoint, data);
    let control = ControlField::projected(space, data, &candidates);

    diagnostics.state_residual = norm(&state_residual(space, &disc, &state, &control.values));
    let jt = state_jacobian(space, &state).transpose().matvec(&x[n2..]);
    let rhs = adjoint_rhs(space, &disc, &state);
    diagnostics.adjoint_residual = norm(&jt.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    diagnostics.cost = cost(space, &state, &control.values, data);
    diagnostics.projection_defect = projection_defect(space, data, &control, &adjoint);

    Ok(OptimalitySolution { state, adjoint, control, diagnostics })
}

/// `max_T |u_T − clip(candidate_T(Θ))|` over ω-triangles.
pub fn projection_defect(space: &MorleySpace, data: &ProblemData, u: &ControlField, theta: &AdjointPair) -> f64 {
    control_update_candidate(space, theta, data)
        .iter()
        .zip(&u.values)
        .zip(space.mesh().triangles())
        .filter(|(_, t)| t.in_omega)
        .map(|((&c, &v), _)| (v - data.clip(c)).abs())
        .fold(0.0, f64::max)
}
