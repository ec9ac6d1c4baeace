//! Conforming triangulations with refinement bookkeeping.
//!
//! Triangles are counter-clockwise vertex triples. Local edge `k` of a
//! triangle is the edge opposite local vertex `k`. The newest-vertex-bisection
//! refinement edge is stored as such a local edge index, so the opposite
//! vertex is the peak.

mod generate;
mod io;
mod refine;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use generate::{generate_lshape_mesh, generate_lshape_mesh_with, generate_square_mesh, generate_square_mesh_with, Diagonal};
pub use io::{read_mesh, write_mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    /// Local index of the refinement edge (opposite the peak vertex).
    pub refinement_edge: usize,
    pub generation: u32,
    pub in_omega: bool,
}

impl Triangle {
    pub fn new(vertices: [usize; 3]) -> Self {
        Self { vertices, refinement_edge: 0, generation: 0, in_omega: true }
    }

    /// Endpoints of local edge `k`.
    pub fn edge_vertices(&self, k: usize) -> [usize; 2] {
        [self.vertices[(k + 1) % 3], self.vertices[(k + 2) % 3]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    /// Endpoints, lower global index first.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    pub length: T,
    /// Unit tangent pointing from the lower to the higher endpoint index.
    pub tangent: [T; 2],
}

impl<T: Scalar> Edge<T> {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    /// Global unit normal: the tangent rotated clockwise.
    pub fn normal(&self) -> [T; 2] {
        [self.tangent[1], -self.tangent[0]]
    }

    pub fn triangles(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.left).chain(self.right)
    }
}

/// Immutable conforming triangulation. Refinement returns a new value.
#[derive(Debug, Clone)]
pub struct Triangulation<T> {
    vertices: Vec<[T; 2]>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge<T>>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
}

impl<T: Scalar> Triangulation<T> {
    /// Builds the edge structure and validates indices, orientation and
    /// edge manifoldness. Hanging vertices are not searched for here; see
    /// [`Triangulation::hanging_vertices`].
    pub fn new(vertices: Vec<[T; 2]>, triangles: Vec<Triangle>) -> Result<Self> {
        let nv = vertices.len();
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge<T>> = Vec::with_capacity(triangles.len() * 2);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut vertex_triangles = vec![Vec::new(); nv];

        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a >= nv || b >= nv || c >= nv {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("triangle {t} has repeated vertices")));
            }
            if tri.refinement_edge > 2 {
                return Err(Error::InvalidMesh(format!("triangle {t} has refinement edge {}", tri.refinement_edge)));
            }
            let area = signed_area(vertices[a], vertices[b], vertices[c]);
            if !(area > T::zero()) {
                return Err(Error::InvalidMesh(format!("triangle {t} is not counter-clockwise (signed area {area})")));
            }
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let [p, q] = tri.edge_vertices(k);
                let key = (p.min(q), p.max(q));
                let e = match edge_index.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        edge.right = Some(t);
                        e
                    }
                    None => {
                        let (lo, hi) = key;
                        let d = [vertices[hi][0] - vertices[lo][0], vertices[hi][1] - vertices[lo][1]];
                        let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                        edges.push(Edge {
                            vertices: [lo, hi],
                            left: t,
                            right: None,
                            length,
                            tangent: [d[0] / length, d[1] / length],
                        });
                        edge_index.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                *slot = e;
            }
            triangle_edges.push(local);
            for &v in &tri.vertices {
                vertex_triangles[v].push(t);
            }
        }

        let mut boundary_vertex = vec![false; nv];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }

        Ok(Self { vertices, triangles, edges, triangle_edges, vertex_triangles, boundary_vertex })
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Global edge ids of a triangle, local edge `k` opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|&&b| b).count()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    pub fn corners(&self, t: usize) -> [[T; 2]; 3] {
        self.triangles[t].vertices.map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let [a, b, c] = self.corners(t);
        let three = T::lit(3.0);
        [(a[0] + b[0] + c[0]) / three, (a[1] + b[1] + c[1]) / three]
    }

    /// Lengths of the three local edges.
    pub fn edge_lengths(&self, t: usize) -> [T; 3] {
        let p = self.corners(t);
        [0, 1, 2].map(|k| dist(p[(k + 1) % 3], p[(k + 2) % 3]))
    }

    /// Diameter `h_T`, the longest edge.
    pub fn diameter(&self, t: usize) -> T {
        let l = self.edge_lengths(t);
        l[0].max(l[1]).max(l[2])
    }

    /// Mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> T {
        (0..self.n_triangles()).map(|t| self.diameter(t)).fold(T::zero(), T::max)
    }

    /// Largest shortest-edge length; equals the leg length on structured
    /// right-isosceles meshes.
    pub fn leg_size(&self) -> T {
        (0..self.n_triangles())
            .map(|t| {
                let l = self.edge_lengths(t);
                l[0].min(l[1]).min(l[2])
            })
            .fold(T::zero(), T::max)
    }

    /// Smallest interior angle of triangle `t`, in radians.
    pub fn min_angle(&self, t: usize) -> T {
        let p = self.corners(t);
        (0..3)
            .map(|k| {
                let o = p[k];
                let u = [p[(k + 1) % 3][0] - o[0], p[(k + 1) % 3][1] - o[1]];
                let v = [p[(k + 2) % 3][0] - o[0], p[(k + 2) % 3][1] - o[1]];
                let cross = u[0] * v[1] - u[1] * v[0];
                let dot = u[0] * v[0] + u[1] * v[1];
                cross.abs().atan2(dot)
            })
            .fold(T::infinity(), T::min)
    }

    pub fn min_angle_overall(&self) -> T {
        (0..self.n_triangles()).map(|t| self.min_angle(t)).fold(T::infinity(), T::min)
    }

    /// Neighbour across local edge `k`, if any.
    pub fn neighbor(&self, t: usize, k: usize) -> Option<usize> {
        let e = &self.edges[self.triangle_edges[t][k]];
        if e.left == t {
            e.right
        } else {
            Some(e.left)
        }
    }

    /// All triangles sharing at least one vertex with `t` (including `t`), sorted.
    pub fn patch_of(&self, t: usize) -> Vec<usize> {
        let mut patch: Vec<usize> = self.triangles[t]
            .vertices
            .iter()
            .flat_map(|&v| self.vertex_triangles[v].iter().copied())
            .collect();
        patch.sort_unstable();
        patch.dedup();
        patch
    }

    pub fn omega_triangles(&self) -> impl Iterator<Item = usize> + '_ {
        self.triangles.iter().enumerate().filter(|(_, t)| t.in_omega).map(|(i, _)| i)
    }

    pub fn n_omega_triangles(&self) -> usize {
        self.triangles.iter().filter(|t| t.in_omega).count()
    }

    pub fn total_area(&self) -> T {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Vertices lying strictly inside a boundary edge. A conforming mesh
    /// has none; a hanging vertex always sits on an edge that has only one
    /// neighbour. Brute force, meant for audits and loaders.
    pub fn hanging_vertices(&self) -> Vec<usize> {
        let tol = T::lit(1e-10);
        let mut hanging = Vec::new();
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let a = self.vertices[e.vertices[0]];
            let b = self.vertices[e.vertices[1]];
            let (xmin, xmax) = (a[0].min(b[0]) - tol, a[0].max(b[0]) + tol);
            let (ymin, ymax) = (a[1].min(b[1]) - tol, a[1].max(b[1]) + tol);
            for (v, p) in self.vertices.iter().enumerate() {
                if v == e.vertices[0] || v == e.vertices[1] {
                    continue;
                }
                if p[0] < xmin || p[0] > xmax || p[1] < ymin || p[1] > ymax {
                    continue;
                }
                let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                if cross.abs() <= tol * e.length {
                    hanging.push(v);
                }
            }
        }
        hanging.sort_unstable();
        hanging.dedup();
        hanging
    }

    /// Sets each refinement edge to the longest edge of its triangle, ties
    /// broken by the smallest global edge index.
    pub fn with_longest_edge_refinement(mut self) -> Self {
        for t in 0..self.triangles.len() {
            let lengths = self.edge_lengths(t);
            let ids = self.triangle_edges[t];
            let mut best = 0;
            for k in 1..3 {
                let longer = lengths[k] > lengths[best] * (T::one() + T::lit(1e-12));
                let tie = (lengths[k] - lengths[best]).abs() <= lengths[best] * T::lit(1e-12);
                if longer || (tie && ids[k] < ids[best]) {
                    best = k;
                }
            }
            self.triangles[t].refinement_edge = best;
        }
        self
    }

    /// Returns a copy with the ω flag recomputed from a predicate on centroids.
    pub fn with_omega(mut self, inside: impl Fn([T; 2]) -> bool) -> Self {
        for t in 0..self.triangles.len() {
            let c = self.centroid(t);
            self.triangles[t].in_omega = inside(c);
        }
        self
    }

    /// Uniform red refinement: every triangle is split into four through its
    /// edge midpoints.
    pub fn red_refine(&self) -> Self {
        refine::red(self)
    }

    /// Newest vertex bisection of the marked triangles followed by closure.
    pub fn nvb_refine(&self, marked: &[usize]) -> Result<Self> {
        refine::newest_vertex_bisection(self, marked)
    }
}

pub(crate) fn signed_area<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) * T::lit(0.5)
}

pub(crate) fn dist<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt()
}
