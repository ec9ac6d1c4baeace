use crate::mesh::Triangulation;
use crate::scalar::Scalar;

/// Slot layout: vertex `v` owns slot `v`, edge `e` owns slot
/// `n_vertices + e`. Slots on the boundary are clamped to zero; the rest
/// are numbered consecutively as free unknowns in slot order.
#[derive(Debug, Clone)]
pub struct MorleyDofMap {
    n_vertices: usize,
    n_edges: usize,
    free_index: Vec<Option<usize>>,
    free_slots: Vec<usize>,
}

impl MorleyDofMap {
    pub fn new<T: Scalar>(mesh: &Triangulation<T>) -> Self {
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let constrained = (0..nv)
            .map(|v| mesh.is_boundary_vertex(v))
            .chain(mesh.edges().iter().map(|e| e.is_boundary()));
        let mut free_index = Vec::with_capacity(nv + ne);
        let mut free_slots = Vec::new();
        for (slot, c) in constrained.enumerate() {
            if c {
                free_index.push(None);
            } else {
                free_index.push(Some(free_slots.len()));
                free_slots.push(slot);
            }
        }
        Self { n_vertices: nv, n_edges: ne, free_index, free_slots }
    }

    pub fn n_slots(&self) -> usize {
        self.n_vertices + self.n_edges
    }

    /// `dim V_M`.
    pub fn n_free(&self) -> usize {
        self.free_slots.len()
    }

    pub fn vertex_slot(&self, v: usize) -> usize {
        v
    }

    pub fn edge_slot(&self, e: usize) -> usize {
        self.n_vertices + e
    }

    pub fn is_constrained(&self, slot: usize) -> bool {
        self.free_index[slot].is_none()
    }

    pub fn free_index(&self, slot: usize) -> Option<usize> {
        self.free_index[slot]
    }

    /// Slot of each free unknown.
    pub fn free_slots(&self) -> &[usize] {
        &self.free_slots
    }

    /// The six global slots of triangle `t` in local DOF order.
    pub fn element_slots<T: Scalar>(&self, mesh: &Triangulation<T>, t: usize) -> [usize; 6] {
        let [a, b, c] = mesh.triangles()[t].vertices;
        let [e0, e1, e2] = mesh.triangle_edges(t);
        [a, b, c, self.edge_slot(e0), self.edge_slot(e1), self.edge_slot(e2)]
    }
}
