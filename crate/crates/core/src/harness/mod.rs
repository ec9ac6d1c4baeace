//! Experiment driver: manufactured examples, uniform and adaptive loops,
//! exact errors, convergence orders and CSV reports.

mod cases;
pub mod jet;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use cases::{case_lshape, case_square, Domain, ManufacturedCase, LSHAPE_GAMMA};

use crate::control::{pdas_solve, OptimalitySolution, SolverConfig};
use crate::error::{Error, Result};
use crate::estimator::{doerfler_mark, estimate, EstimatorBreakdown, EstimatorOptions, DUMP_HEADER};
use crate::mesh::{write_mesh, Diagonal};
use crate::morley::{MorleySpace, QuadratureRule};
use crate::Mesh;
use jet::Exact;

/// How the three relative errors are combined into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TotalError {
    /// `(Σ absolute errors) / (Σ exact norms)`.
    #[default]
    Sum,
    /// `√(Σ absolute errors²) / √(Σ exact norms²)`.
    RootSumSquare,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub estimator: EstimatorOptions,
    /// Quadrature degree of the exact-error integrals.
    pub error_degree: usize,
    /// Quadrature degree of the data integrals.
    pub load_degree: usize,
    /// Quadrature degree on triangles touching a singular point.
    pub singular_degree: usize,
    pub diagonal: Diagonal,
    pub total_error: TotalError,
    /// Keep meshes, estimators and marked sets of every level.
    pub keep_levels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            estimator: EstimatorOptions::default(),
            error_degree: 10,
            load_degree: 10,
            singular_degree: 20,
            diagonal: Diagonal::default(),
            total_error: TotalError::default(),
            keep_levels: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Uniform,
    Adaptive,
}

/// One level of a run. Errors are relative to the exact solution's norms.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub h_leg: f64,
    pub h_max: f64,
    pub n_triangles: usize,
    pub ndof: usize,
    pub err_state: f64,
    pub err_adjoint: f64,
    pub err_control: f64,
    pub total_error: f64,
    /// `‖Ψ̄ − Ψ_M‖_NC + ‖Θ̄ − Θ_M‖_NC + ‖ū − u_h‖` without normalisation.
    pub absolute_error: f64,
    pub eta_st: f64,
    pub eta_ad: f64,
    pub eta_con: f64,
    pub eta: f64,
    pub newton_max: usize,
    pub pdas_steps: usize,
    pub seconds: f64,
}

impl LevelRow {
    /// Efficiency ratio `absolute error / η`.
    pub fn ratio(&self) -> f64 {
        self.absolute_error / self.eta
    }
}

/// Mesh, estimator and marked triangles of one level.
#[derive(Debug, Clone)]
pub struct LevelSnapshot {
    pub mesh: Mesh,
    pub estimator: EstimatorBreakdown,
    pub marked: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub case: &'static str,
    pub refinement: Refinement,
    pub rows: Vec<LevelRow>,
    pub snapshots: Vec<LevelSnapshot>,
}

/// Quantity whose convergence order is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    State,
    Adjoint,
    Control,
    Total,
    EtaState,
    EtaAdjoint,
    EtaControl,
    Eta,
}

impl Column {
    fn of(self, r: &LevelRow) -> f64 {
        match self {
            Column::State => r.err_state,
            Column::Adjoint => r.err_adjoint,
            Column::Control => r.err_control,
            Column::Total => r.total_error,
            Column::EtaState => r.eta_st,
            Column::EtaAdjoint => r.eta_ad,
            Column::EtaControl => r.eta_con,
            Column::Eta => r.eta,
        }
    }
}

impl RunReport {
    /// Orders between consecutive levels: against `h` for uniform runs and
    /// against NDOF (as a positive rate) for adaptive runs. Entry `ℓ`
    /// compares levels `ℓ − 1` and `ℓ`; the first entry is `None`.
    pub fn orders(&self, column: Column) -> Vec<Option<f64>> {
        let mut out = vec![None; self.rows.len().min(1)];
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let scale = match self.refinement {
                Refinement::Uniform => (a.h_max / b.h_max).ln(),
                Refinement::Adaptive => (b.ndof as f64 / a.ndof as f64).ln(),
            };
            out.push(Some((column.of(a) / column.of(b)).ln() / scale));
        }
        out
    }
}

/// Exact-solution norms, computed once per mesh at the error quadrature degree.
struct ExactNorms {
    state: f64,
    adjoint: f64,
    control: f64,
}

fn solve_level(case: &ManufacturedCase, mesh: Mesh, config: &RunConfig, level: usize) -> Result<(LevelRow, MorleySpace, OptimalitySolution, EstimatorBreakdown)> {
    let start = Instant::now();
    let space = MorleySpace::new(mesh)?;
    let data = case.problem_data(config.load_degree, config.singular_degree)?;
    let sol = pdas_solve(&space, &data, &config.solver)?;
    let est = estimate(&space, &data, &sol, &config.estimator)?;

    let quad = QuadratureRule::with_degree(config.error_degree);
    let mesh = space.mesh();
    let pair_error = |fields: [&crate::morley::MorleyField; 2], exact: &[std::sync::Arc<dyn jet::SmoothField>; 2]| {
        let e: f64 = (0..2).map(|k| space.broken_norms(fields[k], Some(&Exact(&*exact[k])), &quad).h2.powi(2)).sum();
        let n: f64 = (0..2).map(|k| space.exact_norms(&Exact(&*exact[k]), &quad).h2.powi(2)).sum();
        (e.sqrt(), n.sqrt())
    };
    let (e_state, n_state) = pair_error([&sol.state.first, &sol.state.second], &case.psi);
    let (e_adj, n_adj) = pair_error([&sol.adjoint.first, &sol.adjoint.second], &case.theta);
    let (mut e_con, mut n_con) = (0.0, 0.0);
    for t in mesh.omega_triangles() {
        let corners = mesh.corners(t);
        let u = sol.control.values[t];
        e_con += quad.integrate(&corners, |p| (case.control(p) - u).powi(2));
        n_con += quad.integrate(&corners, |p| case.control(p).powi(2));
    }
    let norms = ExactNorms { state: n_state, adjoint: n_adj, control: n_con.sqrt() };
    let abs = [e_state, e_adj, e_con.sqrt()];
    let total_error = match config.total_error {
        TotalError::Sum => abs.iter().sum::<f64>() / (norms.state + norms.adjoint + norms.control),
        TotalError::RootSumSquare => {
            abs.iter().map(|e| e * e).sum::<f64>().sqrt()
                / (norms.state.powi(2) + norms.adjoint.powi(2) + norms.control.powi(2)).sqrt()
        }
    };

    let d = &sol.diagnostics;
    let row = LevelRow {
        level,
        h_leg: mesh.leg_size(),
        h_max: mesh.mesh_size(),
        n_triangles: mesh.n_triangles(),
        // V_M is the pair space, so each scalar free DOF counts twice there.
        ndof: 2 * (2 * space.n_free()) + mesh.n_omega_triangles(),
        err_state: abs[0] / norms.state,
        err_adjoint: abs[1] / norms.adjoint,
        err_control: abs[2] / norms.control,
        total_error,
        absolute_error: abs.iter().sum(),
        eta_st: est.eta_st,
        eta_ad: est.eta_ad,
        eta_con: est.eta_con,
        eta: est.eta,
        newton_max: d.newton_iterations.iter().copied().max().unwrap_or(0),
        pdas_steps: d.pdas_steps,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((row, space, sol, est))
}

/// Uniform red refinement from the case's coarsest mesh, `levels` levels.
pub fn run_uniform(case: &ManufacturedCase, levels: usize, config: &RunConfig) -> Result<RunReport> {
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    let mut report = RunReport { case: case.name, refinement: Refinement::Uniform, rows: Vec::new(), snapshots: Vec::new() };
    let mut mesh = case.initial_mesh(config.diagonal);
    for level in 0..levels {
        let next = (level + 1 < levels).then(|| mesh.red_refine());
        let (row, space, _, est) = solve_level(case, mesh, config, level)?;
        report.rows.push(row);
        if config.keep_levels {
            report.snapshots.push(LevelSnapshot { mesh: space.mesh().clone(), estimator: est, marked: Vec::new() });
        }
        match next {
            Some(m) => mesh = m,
            None => break,
        }
    }
    Ok(report)
}

/// Solve, estimate, mark (Dörfler with bulk `theta`), refine (newest vertex
/// bisection), for `max_iterations` solves.
pub fn run_adaptive(case: &ManufacturedCase, max_iterations: usize, theta: f64, config: &RunConfig) -> Result<RunReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("bulk parameter must lie in (0, 1), got {theta}")));
    }
    if max_iterations == 0 {
        return Err(Error::InvalidArgument("at least one iteration is required".into()));
    }
    let mut report = RunReport { case: case.name, refinement: Refinement::Adaptive, rows: Vec::new(), snapshots: Vec::new() };
    let mut mesh = case.initial_mesh(config.diagonal);
    for level in 0..max_iterations {
        let (row, space, _, est) = solve_level(case, mesh, config, level)?;
        report.rows.push(row);
        let last = level + 1 == max_iterations;
        let marked = if last { Vec::new() } else { doerfler_mark(&est.marking_indicators(space.mesh()), theta)? };
        let next = if last { None } else { Some(space.mesh().nvb_refine(&marked)?) };
        if config.keep_levels {
            report.snapshots.push(LevelSnapshot { mesh: space.mesh().clone(), estimator: est, marked });
        }
        match next {
            Some(m) => mesh = m,
            None => break,
        }
    }
    Ok(report)
}

pub const REPORT_HEADER: [&str; 29] = [
    "level",
    "h_leg",
    "h_max",
    "n_triangles",
    "ndof",
    "err_state",
    "order_state",
    "err_adjoint",
    "order_adjoint",
    "err_control",
    "order_control",
    "total_error",
    "order_total",
    "eta_st",
    "order_eta_st",
    "eta_ad",
    "order_eta_ad",
    "eta_con",
    "order_eta_con",
    "eta",
    "order_eta",
    "absolute_error",
    "ratio",
    "newton_max",
    "pdas_steps",
    "seconds",
    "refinement",
    "case",
    "marked",
];

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// Writes the per-level table. Wall time is the only column that varies
/// between identical runs; `with_timing = false` blanks it.
pub fn write_report<W: Write>(report: &RunReport, out: W, with_timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    let cols = [
        Column::State,
        Column::Adjoint,
        Column::Control,
        Column::Total,
        Column::EtaState,
        Column::EtaAdjoint,
        Column::EtaControl,
        Column::Eta,
    ];
    let orders: Vec<Vec<Option<f64>>> = cols.iter().map(|&c| report.orders(c)).collect();
    let refinement = match report.refinement {
        Refinement::Uniform => "uniform",
        Refinement::Adaptive => "adaptive",
    };
    for (i, r) in report.rows.iter().enumerate() {
        let values = [r.err_state, r.err_adjoint, r.err_control, r.total_error, r.eta_st, r.eta_ad, r.eta_con, r.eta];
        let mut rec = vec![r.level.to_string(), format!("{:.6}", r.h_leg), format!("{:.6}", r.h_max), r.n_triangles.to_string(), r.ndof.to_string()];
        for (v, o) in values.iter().zip(&orders) {
            rec.push(format!("{v:.9e}"));
            rec.push(fmt_order(o[i]));
        }
        rec.push(format!("{:.9e}", r.absolute_error));
        rec.push(format!("{:.6}", r.ratio()));
        rec.push(r.newton_max.to_string());
        rec.push(r.pdas_steps.to_string());
        rec.push(if with_timing { format!("{:.3}", r.seconds) } else { String::new() });
        rec.push(refinement.into());
        rec.push(report.case.into());
        rec.push(report.snapshots.get(i).map_or(0, |s| s.marked.len()).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

/// Writes the per-level CSV report to `path`.
pub fn emit_report(report: &RunReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_report(report, file, true).map_err(|e| csv_error(path, e))
}

/// Writes the per-entity estimator dump of every kept level.
pub fn emit_estimator_dump(report: &RunReport, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(DUMP_HEADER).map_err(|e| csv_error(path, e))?;
    for (level, s) in report.snapshots.iter().enumerate() {
        let mut flags = vec![false; s.mesh.n_triangles()];
        for &t in &s.marked {
            flags[t] = true;
        }
        s.estimator.write_dump(&mut w, &s.mesh, level, &flags).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Writes `<prefix>_<level>.mesh` for every kept level and returns the paths.
pub fn emit_meshes(report: &RunReport, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (level, s) in report.snapshots.iter().enumerate() {
        let path = PathBuf::from(format!("{prefix}_{level}.mesh"));
        std::fs::write(&path, write_mesh(&s.mesh)).map_err(|e| io_error(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Ratio of the area density of marked triangles (centroid within `radius`
/// of `centre`) to their density over the whole domain, accumulated over
/// all kept levels.
pub fn marked_density_ratio(report: &RunReport, centre: [f64; 2], radius: f64) -> f64 {
    let (mut near, mut near_area, mut all, mut all_area) = (0.0, 0.0, 0.0, 0.0);
    for s in &report.snapshots {
        let mut flags = vec![false; s.mesh.n_triangles()];
        for &t in &s.marked {
            flags[t] = true;
        }
        for t in 0..s.mesh.n_triangles() {
            let c = s.mesh.centroid(t);
            let a = s.mesh.area(t);
            let inside = (c[0] - centre[0]).hypot(c[1] - centre[1]) < radius;
            let m = if flags[t] { 1.0 } else { 0.0 };
            all += m;
            all_area += a;
            if inside {
                near += m;
                near_area += a;
            }
        }
    }
    if all == 0.0 || near_area == 0.0 {
        return 0.0;
    }
    (near / near_area) / (all / all_area)
}
