//! Residual a posteriori estimator, post-processed control, data
//! oscillation and Dörfler marking.
//!
//! All indicators are squared quantities. The Morley functions have
//! constant Hessians per triangle, so brackets and Hessian jumps are
//! constants and only the data terms and the clipped control need
//! quadrature.

use std::io::Write;

use crate::control::{ControlField, OptimalitySolution};
use crate::error::{Error, Result};
use crate::forms::{AdjointPair, LoadRules, ProblemData};
use crate::mesh::Triangulation;
use crate::morley::{bracket, frobenius, MorleySpace, PiecewisePolyProjection, QuadratureRule, Sym2};
use crate::scalar::Scalar;

/// Second state volume term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AiryTerm {
    /// `‖[ψ₁, ψ₁]‖²`, the term as stated for a homogeneous second equation.
    #[default]
    Bracket,
    /// `‖g − ½[ψ₁, ψ₁]‖²`, the elementwise residual of the second equation.
    Residual,
}

/// Tangential Hessian jumps on boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryEdges {
    /// Boundary edges contribute nothing.
    #[default]
    Zero,
    /// The one-sided trace `D²v τ_E` is used as the jump.
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorOptions {
    /// Quadrature degree for the clipped post-processed control.
    pub control_degree: usize,
    pub airy_term: AiryTerm,
    pub boundary_edges: BoundaryEdges,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { control_degree: 10, airy_term: AiryTerm::default(), boundary_edges: BoundaryEdges::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TriangleIndicators {
    pub state: f64,
    pub adjoint_res: f64,
    pub adjoint_p0: f64,
    pub control: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdgeIndicators {
    pub state: f64,
    pub adjoint: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorBreakdown {
    pub triangles: Vec<TriangleIndicators>,
    pub edges: Vec<EdgeIndicators>,
    pub eta_st: f64,
    pub eta_ad: f64,
    pub eta_con: f64,
    pub eta: f64,
}

impl EstimatorBreakdown {
    fn from_parts(triangles: Vec<TriangleIndicators>, edges: Vec<EdgeIndicators>) -> Self {
        let st = triangles.iter().map(|t| t.state).sum::<f64>() + edges.iter().map(|e| e.state).sum::<f64>();
        let ad = triangles.iter().map(|t| t.adjoint_res + t.adjoint_p0).sum::<f64>()
            + edges.iter().map(|e| e.adjoint).sum::<f64>();
        let con = triangles.iter().map(|t| t.control).sum::<f64>();
        Self { triangles, edges, eta_st: st.sqrt(), eta_ad: ad.sqrt(), eta_con: con.sqrt(), eta: (st + ad + con).sqrt() }
    }

    /// Per-triangle marking indicator: all volume terms plus half of each
    /// adjacent edge term.
    pub fn marking_indicators<T: Scalar>(&self, mesh: &Triangulation<T>) -> Vec<f64> {
        let mut out: Vec<f64> = self.triangles.iter().map(|t| t.state + t.adjoint_res + t.adjoint_p0 + t.control).collect();
        for (e, ind) in mesh.edges().iter().zip(&self.edges) {
            let v = ind.state + ind.adjoint;
            match e.right {
                Some(r) => {
                    out[e.left] += 0.5 * v;
                    out[r] += 0.5 * v;
                }
                None => out[e.left] += v,
            }
        }
        out
    }

    /// Appends one row per triangle and one per edge. `marked` flags the
    /// triangles selected for refinement at this level.
    pub fn write_dump<W: Write>(&self, w: &mut csv::Writer<W>, mesh: &crate::Mesh, level: usize, marked: &[bool]) -> csv::Result<()> {
        if self.triangles.len() != mesh.n_triangles() || self.edges.len() != mesh.n_edges() {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "estimator does not match mesh").into());
        }
        for (t, ind) in self.triangles.iter().enumerate() {
            let c = mesh.centroid(t);
            write_row(w, DumpRow {
                entity_kind: "triangle",
                entity_id: t,
                level,
                eta_sq_state: ind.state,
                eta_sq_adjoint_res: ind.adjoint_res,
                eta_sq_adjoint_p0: ind.adjoint_p0,
                eta_sq_control: ind.control,
                eta_sq_edge_state: 0.0,
                eta_sq_edge_adjoint: 0.0,
                x: c[0],
                y: c[1],
                measure: mesh.area(t),
                marked: u8::from(marked.get(t).copied().unwrap_or(false)),
            })?;
        }
        for (e, ind) in self.edges.iter().enumerate() {
            let edge = &mesh.edges()[e];
            let a = mesh.vertices()[edge.vertices[0]];
            let b = mesh.vertices()[edge.vertices[1]];
            write_row(w, DumpRow {
                entity_kind: "edge",
                entity_id: e,
                level,
                eta_sq_state: 0.0,
                eta_sq_adjoint_res: 0.0,
                eta_sq_adjoint_p0: 0.0,
                eta_sq_control: 0.0,
                eta_sq_edge_state: ind.state,
                eta_sq_edge_adjoint: ind.adjoint,
                x: 0.5 * (a[0] + b[0]),
                y: 0.5 * (a[1] + b[1]),
                measure: edge.length,
                marked: 0,
            })?;
        }
        Ok(())
    }
}

/// Column names of the estimator dump.
pub const DUMP_HEADER: [&str; 13] = [
    "entity_kind",
    "entity_id",
    "level",
    "eta_sq_state",
    "eta_sq_adjoint_res",
    "eta_sq_adjoint_p0",
    "eta_sq_control",
    "eta_sq_edge_state",
    "eta_sq_edge_adjoint",
    "x",
    "y",
    "measure",
    "marked",
];

struct DumpRow {
    entity_kind: &'static str,
    entity_id: usize,
    level: usize,
    eta_sq_state: f64,
    eta_sq_adjoint_res: f64,
    eta_sq_adjoint_p0: f64,
    eta_sq_control: f64,
    eta_sq_edge_state: f64,
    eta_sq_edge_adjoint: f64,
    x: f64,
    y: f64,
    measure: f64,
    marked: u8,
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, r: DumpRow) -> csv::Result<()> {
    w.write_record([
        r.entity_kind.to_string(),
        r.entity_id.to_string(),
        r.level.to_string(),
        format!("{:e}", r.eta_sq_state),
        format!("{:e}", r.eta_sq_adjoint_res),
        format!("{:e}", r.eta_sq_adjoint_p0),
        format!("{:e}", r.eta_sq_control),
        format!("{:e}", r.eta_sq_edge_state),
        format!("{:e}", r.eta_sq_edge_adjoint),
        r.x.to_string(),
        r.y.to_string(),
        format!("{:e}", r.measure),
        r.marked.to_string(),
    ])
}

/// Pointwise post-processed control `ũ = clip(−θ₁/α)` on ω, zero elsewhere.
pub struct PostProcessedControl<'a> {
    space: &'a MorleySpace,
    theta: &'a AdjointPair,
    data: &'a ProblemData,
}

impl<'a> PostProcessedControl<'a> {
    pub fn new(space: &'a MorleySpace, theta: &'a AdjointPair, data: &'a ProblemData) -> Self {
        Self { space, theta, data }
    }

    pub fn eval(&self, t: usize, p: [f64; 2]) -> f64 {
        if !self.space.mesh().triangles()[t].in_omega {
            return 0.0;
        }
        self.data.clip(-self.space.value(&self.theta.first, t, p) / self.data.alpha)
    }

    /// Per-triangle `‖ũ − u_h‖²_{L²(T)}`.
    pub fn distance_sq(&self, u: &ControlField, quad: &QuadratureRule<f64>) -> Vec<f64> {
        let mesh = self.space.mesh();
        (0..mesh.n_triangles())
            .map(|t| {
                if !mesh.triangles()[t].in_omega {
                    return 0.0;
                }
                let ut = u.values[t];
                quad.integrate(&mesh.corners(t), |p| (self.eval(t, p) - ut).powi(2))
            })
            .collect()
    }
}

fn sym_times(h: Sym2<f64>, v: [f64; 2]) -> [f64; 2] {
    [h[0] * v[0] + h[1] * v[1], h[1] * v[0] + h[2] * v[1]]
}

fn diff(a: Sym2<f64>, b: Sym2<f64>) -> Sym2<f64> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// `h_E ‖[D²v τ_E]‖²_{L²(E)} = h_E² |[D²v] τ_E|²` for a Morley field `v`.
fn edge_jump_sq(space: &MorleySpace, field: &crate::morley::MorleyField, e: usize, rule: BoundaryEdges) -> f64 {
    let edge = &space.mesh().edges()[e];
    let left = space.hessian(field, edge.left);
    let jump = match edge.right {
        Some(r) => diff(left, space.hessian(field, r)),
        None if rule == BoundaryEdges::Trace => left,
        None => return 0.0,
    };
    let j = sym_times(jump, edge.tangent);
    edge.length * edge.length * (j[0] * j[0] + j[1] * j[1])
}

/// Evaluates every local contribution of the estimator for a discrete
/// solution of the optimality system.
pub fn estimate(space: &MorleySpace, data: &ProblemData, sol: &OptimalitySolution, options: &EstimatorOptions) -> Result<EstimatorBreakdown> {
    let mesh = space.mesh();
    let nt = mesh.n_triangles();
    if sol.control.values.len() != nt {
        return Err(Error::MeshMismatch { left: sol.control.values.len(), right: nt });
    }
    for f in [&sol.state.first, &sol.state.second, &sol.adjoint.first, &sol.adjoint.second] {
        space.check(f)?;
    }
    let (psi, theta) = (&sol.state, &sol.adjoint);
    let rules = LoadRules::new(data);
    let control_rule = QuadratureRule::with_degree(options.control_degree);
    let control = PostProcessedControl::new(space, theta, data).distance_sq(&sol.control, &control_rule);
    // Degree 4 integrates (θ − P₀θ)² exactly.
    let exact4 = QuadratureRule::with_degree(4);

    let triangles = (0..nt)
        .map(|t| {
            let corners = mesh.corners(t);
            let quad = rules.get(data, space, t);
            let h4 = mesh.diameter(t).powi(4);
            let hp1 = space.hessian(&psi.first, t);
            let hp2 = space.hessian(&psi.second, t);
            let ht1 = space.hessian(&theta.first, t);
            let ht2 = space.hessian(&theta.second, t);
            let b12 = bracket(&hp1, &hp2);
            let b11 = bracket(&hp1, &hp1);
            let cu = if mesh.triangles()[t].in_omega { sol.control.values[t] } else { 0.0 };

            let g = |p: [f64; 2]| data.g.as_ref().map_or(0.0, |g| g(p));
            let airy = match options.airy_term {
                AiryTerm::Bracket => b11 * b11 * mesh.area(t),
                AiryTerm::Residual => quad.integrate(&corners, |p| (g(p) - 0.5 * b11).powi(2)),
            };
            let first = quad.integrate(&corners, |p| ((data.f)(p) + cu + b12).powi(2));
            let state = h4 * (first + airy);

            let r1 = bracket(&hp2, &ht1) - bracket(&hp1, &ht2);
            let r2 = bracket(&hp1, &ht1);
            let res = quad.integrate(&corners, |p| {
                let a = space.value(&psi.first, t, p) - (data.psi_d[0])(p) + r1;
                let b = space.value(&psi.second, t, p) - (data.psi_d[1])(p) + r2;
                a * a + b * b
            });

            let osc = |v: &crate::morley::MorleyField| {
                let mean = exact4.integrate(&corners, |p| space.value(v, t, p)) / mesh.area(t);
                exact4.integrate(&corners, |p| (space.value(v, t, p) - mean).powi(2))
            };
            let (o1, o2) = (osc(&theta.first), osc(&theta.second));
            let p0 = frobenius(&hp1, &hp1) * (o2 + o1) + frobenius(&hp2, &hp2) * o1;

            TriangleIndicators { state, adjoint_res: h4 * res, adjoint_p0: p0, control: control[t] }
        })
        .collect();

    let edges = (0..mesh.n_edges())
        .map(|e| EdgeIndicators {
            state: edge_jump_sq(space, &psi.first, e, options.boundary_edges) + edge_jump_sq(space, &psi.second, e, options.boundary_edges),
            adjoint: edge_jump_sq(space, &theta.first, e, options.boundary_edges)
                + edge_jump_sq(space, &theta.second, e, options.boundary_edges),
        })
        .collect();

    Ok(EstimatorBreakdown::from_parts(triangles, edges))
}

/// `osc_k(f) = (Σ_T h_T⁴ ‖f − Π_k f‖²_{L²(T)})^{1/2}` for `k ∈ {0, 1}`.
pub fn data_oscillation<T: Scalar>(mesh: &Triangulation<T>, k: usize, quad: &QuadratureRule<T>, f: impl Fn([T; 2]) -> T) -> Result<T> {
    if k > 1 {
        return Err(Error::InvalidArgument(format!("oscillation degree must be 0 or 1, got {k}")));
    }
    let proj = PiecewisePolyProjection::new(mesh, k, quad, |_, p| f(p));
    let defects = proj.defect_sq(mesh, quad, |_, p| f(p));
    Ok(defects.iter().enumerate().map(|(t, &d)| mesh.diameter(t).powi(4) * d).sum::<T>().sqrt())
}

/// Dörfler marking: a set `M` of minimal cardinality with
/// `Σ_{T∈M} η_T² ≥ θ Σ_T η_T²`. Indices come back sorted by decreasing
/// indicator, ties broken by index. `θ` must lie in `(0, 1]`.
pub fn doerfler_mark(indicators: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("bulk parameter must lie in (0, 1], got {theta}")));
    }
    if let Some(bad) = indicators.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("indicator {bad} is {}", indicators[bad])));
    }
    let total: f64 = indicators.iter().sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if acc >= goal {
            break;
        }
        acc += indicators[i];
        marked.push(i);
    }
    Ok(marked)
}

#[cfg(test)]
mod tests;
