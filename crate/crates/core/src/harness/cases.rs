use std::f64::consts::PI;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::jet::{bracket_at, bubble, cutoff, sin_squared, CornerSingularity, Jet, ProductField, SmoothField, TensorField};
use crate::error::Result;
use crate::forms::{ProblemData, ScalarFn};
use crate::mesh::{generate_lshape_mesh_with, generate_square_mesh_with, Diagonal};
use crate::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Square,
    LShape,
}

/// Singular exponent of the 3π/2 corner.
pub const LSHAPE_GAMMA: f64 = 0.5444837367;

/// Optimal control problem with a known solution. The data are derived from
/// the exact state, adjoint and control through the optimality system.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub domain: Domain,
    pub psi: [Arc<dyn SmoothField>; 2],
    pub theta: [Arc<dyn SmoothField>; 2],
    pub alpha: f64,
    pub u_a: f64,
    pub u_b: f64,
    /// Point where the exact solution is singular.
    pub singular_point: Option<[f64; 2]>,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("alpha", &self.alpha)
            .field("u_a", &self.u_a)
            .field("u_b", &self.u_b)
            .finish()
    }
}

/// Smooth solution on the unit square.
pub fn case_square() -> ManufacturedCase {
    let psi: Arc<dyn SmoothField> = Arc::new(TensorField(sin_squared));
    let theta: Arc<dyn SmoothField> = Arc::new(TensorField(bubble));
    ManufacturedCase {
        name: "square",
        domain: Domain::Square,
        psi: [psi.clone(), psi],
        theta: [theta.clone(), theta],
        alpha: 1e-5,
        u_a: -750.0,
        u_b: -50.0,
        singular_point: None,
    }
}

/// Corner singularity on the L-shaped domain `(−1,1)² \ [0,1)×(−1,0]`.
pub fn case_lshape() -> ManufacturedCase {
    let field: Arc<dyn SmoothField> =
        Arc::new(ProductField(TensorField(cutoff), CornerSingularity { gamma: LSHAPE_GAMMA, omega: 1.5 * PI }));
    ManufacturedCase {
        name: "lshape",
        domain: Domain::LShape,
        psi: [field.clone(), field.clone()],
        theta: [field.clone(), field],
        alpha: 1e-3,
        u_a: -600.0,
        u_b: -50.0,
        singular_point: Some([0.0, 0.0]),
    }
}

impl ManufacturedCase {
    fn jets(&self, p: [f64; 2]) -> [Jet; 4] {
        [self.psi[0].jet(p), self.psi[1].jet(p), self.theta[0].jet(p), self.theta[1].jet(p)]
    }

    pub fn clip(&self, x: f64) -> f64 {
        self.u_b.min(self.u_a.max(x))
    }

    /// `ū = Π_{[u_a,u_b]}(−θ̄₁/α)`.
    pub fn control(&self, p: [f64; 2]) -> f64 {
        self.clip(-self.theta[0].jet(p).value() / self.alpha)
    }

    /// `f = Δ²ψ̄₁ − [ψ̄₁, ψ̄₂] − ū`.
    pub fn f(&self, p: [f64; 2]) -> f64 {
        let [p1, p2, ..] = self.jets(p);
        p1.bilaplacian() - bracket_at(&p1, &p2) - self.control(p)
    }

    /// `g = Δ²ψ̄₂ + ½[ψ̄₁, ψ̄₁]`.
    pub fn g(&self, p: [f64; 2]) -> f64 {
        let [p1, p2, ..] = self.jets(p);
        p2.bilaplacian() + 0.5 * bracket_at(&p1, &p1)
    }

    /// Observations from the adjoint equations:
    /// `ψ_{d,1} = ψ̄₁ − Δ²θ̄₁ + [ψ̄₂, θ̄₁] − [ψ̄₁, θ̄₂]` and
    /// `ψ_{d,2} = ψ̄₂ − Δ²θ̄₂ + [ψ̄₁, θ̄₁]`.
    pub fn psi_d(&self, k: usize, p: [f64; 2]) -> f64 {
        let [p1, p2, t1, t2] = self.jets(p);
        match k {
            0 => p1.value() - t1.bilaplacian() + bracket_at(&p2, &t1) - bracket_at(&p1, &t2),
            1 => p2.value() - t2.bilaplacian() + bracket_at(&p1, &t1),
            _ => panic!("observation index {k} out of range"),
        }
    }

    pub fn problem_data(&self, load_degree: usize, singular_degree: usize) -> Result<ProblemData> {
        let me = Arc::new(self.clone());
        let f: ScalarFn = {
            let c = me.clone();
            Arc::new(move |p| c.f(p))
        };
        let g: ScalarFn = {
            let c = me.clone();
            Arc::new(move |p| c.g(p))
        };
        let d0: ScalarFn = {
            let c = me.clone();
            Arc::new(move |p| c.psi_d(0, p))
        };
        let d1: ScalarFn = Arc::new(move |p| me.psi_d(1, p));
        let mut data = ProblemData::new(f, [d0, d1], self.alpha, self.u_a, self.u_b)?.with_g(g).with_load_degree(load_degree);
        if let Some(p) = self.singular_point {
            data = data.with_singular_point(p, singular_degree);
        }
        Ok(data)
    }

    /// Coarsest mesh of both the uniform and the adaptive sequence.
    pub fn initial_mesh(&self, diagonal: Diagonal) -> Mesh {
        match self.domain {
            Domain::Square => generate_square_mesh_with(4, diagonal),
            Domain::LShape => generate_lshape_mesh_with(diagonal),
        }
    }

    /// Whether `p` lies in the open domain at distance at least `margin`
    /// from its boundary.
    pub fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        match self.domain {
            Domain::Square => p.iter().all(|&c| c > margin && c < 1.0 - margin),
            Domain::LShape => {
                let inside_box = p.iter().all(|&c| c > -1.0 + margin && c < 1.0 - margin);
                let outside_notch = p[0] < -margin || p[1] > margin;
                inside_box && outside_notch
            }
        }
    }

    /// Largest relative deviation between the derived load `f` and
    /// `Δ²ψ̄₁ − [ψ̄₁, ψ̄₂] − ū` evaluated by fourth-order finite differences of
    /// the values of `ψ̄₁` and `ψ̄₂`, over `samples` random interior points at
    /// distance greater than `min_radius` from the singular point.
    pub fn load_consistency(&self, samples: usize, seed: u64, step: f64, min_radius: f64) -> f64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let (lo, hi) = match self.domain {
            Domain::Square => (0.0, 1.0),
            Domain::LShape => (-1.0, 1.0),
        };
        let margin = 4.0 * step;
        let centre = self.singular_point.unwrap_or([f64::INFINITY; 2]);
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let p = [rng.gen_range(lo..hi), rng.gen_range(lo..hi)];
            if !self.contains(p, margin) || (p[0] - centre[0]).hypot(p[1] - centre[1]) <= min_radius {
                continue;
            }
            taken += 1;
            let v1 = |q: [f64; 2]| self.psi[0].jet(q).value();
            let v2 = |q: [f64; 2]| self.psi[1].jet(q).value();
            let h1 = fd_hessian(&v1, p, step);
            let h2 = fd_hessian(&v2, p, step);
            let fd = fd_bilaplacian(&v1, p, step) - crate::morley::bracket(&h1, &h2) - self.control(p);
            let f = self.f(p);
            worst = worst.max((f - fd).abs() / f.abs().max(1.0));
        }
        worst
    }
}

/// Fourth-order central stencils for the first and second derivative.
const D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
/// Fourth-order central stencil for the fourth derivative.
const D4: [f64; 7] = [-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0];

fn fd_hessian(v: &dyn Fn([f64; 2]) -> f64, p: [f64; 2], h: f64) -> [f64; 3] {
    let at = |i: isize, j: isize| v([p[0] + i as f64 * h, p[1] + j as f64 * h]);
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for a in 0..5 {
        let i = a as isize - 2;
        xx += D2[a] * at(i, 0);
        yy += D2[a] * at(0, i);
        for b in 0..5 {
            xy += D1[a] * D1[b] * at(i, b as isize - 2);
        }
    }
    [xx / (h * h), xy / (h * h), yy / (h * h)]
}

fn fd_bilaplacian(v: &dyn Fn([f64; 2]) -> f64, p: [f64; 2], h: f64) -> f64 {
    let at = |i: isize, j: isize| v([p[0] + i as f64 * h, p[1] + j as f64 * h]);
    let mut s = 0.0;
    for a in 0..7 {
        let i = a as isize - 3;
        s += D4[a] * (at(i, 0) + at(0, i));
    }
    let mut mixed = 0.0;
    for a in 0..5 {
        for b in 0..5 {
            mixed += D2[a] * D2[b] * at(a as isize - 2, b as isize - 2);
        }
    }
    (s + 2.0 * mixed) / h.powi(4)
}
