use super::{Triangle, Triangulation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn midpoint<T: Scalar>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    let half = T::lit(0.5);
    [(a[0] + b[0]) * half, (a[1] + b[1]) * half]
}

/// Red refinement. Edge `e` gets the new vertex `n_vertices + e`, so the old
/// vertex set is a prefix of the new one. Every child keeps the parent's
/// local refinement-edge index, which is the child edge parallel to the
/// parent's refinement edge.
pub(super) fn red<T: Scalar>(mesh: &Triangulation<T>) -> Triangulation<T> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    vertices.extend(mesh.edges.iter().map(|e| midpoint(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]])));

    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [v0, v1, v2] = tri.vertices;
        let [m0, m1, m2] = mesh.triangle_edges[t].map(|e| nv + e);
        for vertices in [[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]] {
            triangles.push(Triangle {
                vertices,
                refinement_edge: tri.refinement_edge,
                generation: tri.generation + 1,
                in_omega: tri.in_omega,
            });
        }
    }
    Triangulation::new(vertices, triangles).expect("red refinement preserves validity")
}

/// Edge identity during bisection: an edge of the input mesh, or a newly
/// created edge (which is never marked).
#[derive(Clone, Copy)]
enum EdgeRef {
    Old(usize),
    New,
}

struct Bisector<'a, T> {
    mesh: &'a Triangulation<T>,
    marked: &'a [bool],
    midpoint_of: &'a [usize],
    out: Vec<Triangle>,
}

impl<T: Scalar> Bisector<'_, T> {
    fn is_marked(&self, e: EdgeRef) -> bool {
        matches!(e, EdgeRef::Old(id) if self.marked[id])
    }

    /// `v = [peak, b, c]`, refinement edge `(b, c)`; `edges = [bc, cp, pb]`.
    /// Only the refinement edge and the two legs are ever inspected.
    fn bisect(&mut self, v: [usize; 3], edges: [EdgeRef; 3], generation: u32, in_omega: bool) {
        if !self.is_marked(edges[0]) {
            self.out.push(Triangle { vertices: v, refinement_edge: 0, generation, in_omega });
            return;
        }
        let EdgeRef::Old(id) = edges[0] else { unreachable!() };
        let m = self.midpoint_of[id];
        let [p, b, c] = v;
        // Children (m, p, b) and (m, c, p); the new vertex m is the peak of both.
        // The halves of the bisected edge are never split again in this round.
        self.bisect([m, p, b], [edges[2], EdgeRef::New, EdgeRef::New], generation + 1, in_omega);
        self.bisect([m, c, p], [edges[1], EdgeRef::New, EdgeRef::New], generation + 1, in_omega);
    }
}

pub(super) fn newest_vertex_bisection<T: Scalar>(mesh: &Triangulation<T>, marked: &[usize]) -> Result<Triangulation<T>> {
    let nt = mesh.n_triangles();
    let mut edge_marked = vec![false; mesh.n_edges()];
    for &t in marked {
        if t >= nt {
            return Err(Error::OutOfRange { index: t, len: nt });
        }
        edge_marked[mesh.triangle_edges[t][mesh.triangles[t].refinement_edge]] = true;
    }
    if !edge_marked.iter().any(|&m| m) {
        return Ok(mesh.clone());
    }

    // Closure: a triangle with any marked edge must also bisect its refinement edge.
    loop {
        let mut changed = false;
        for t in 0..nt {
            let ids = mesh.triangle_edges[t];
            let r = ids[mesh.triangles[t].refinement_edge];
            if !edge_marked[r] && ids.iter().any(|&e| edge_marked[e]) {
                edge_marked[r] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint_of = vec![usize::MAX; mesh.n_edges()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge_marked[e] {
            midpoint_of[e] = vertices.len();
            vertices.push(midpoint(mesh.vertices[edge.vertices[0]], mesh.vertices[edge.vertices[1]]));
        }
    }

    let mut bisector = Bisector { mesh, marked: &edge_marked, midpoint_of: &midpoint_of, out: Vec::with_capacity(nt * 2) };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let r = tri.refinement_edge;
        let v = [tri.vertices[r], tri.vertices[(r + 1) % 3], tri.vertices[(r + 2) % 3]];
        let ids = bisector.mesh.triangle_edges[t];
        let edges = [EdgeRef::Old(ids[r]), EdgeRef::Old(ids[(r + 1) % 3]), EdgeRef::Old(ids[(r + 2) % 3])];
        bisector.bisect(v, edges, tri.generation, tri.in_omega);
    }
    let triangles = bisector.out;
    Triangulation::new(vertices, triangles)
}
