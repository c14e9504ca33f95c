use serde::Serialize;

use crate::mesh::Mesh;
use crate::polyquad::dim_pk;
use crate::scalar::Scalar;

/// Global numbering of the saddle-point unknowns.
///
/// Layout: velocity interior `(t·2 + c)·dim P_k + m`, then velocity traces
/// on interior edges, then pressures `t·dim P_k + m`, then the multiplier
/// enforcing `∫ p_h = 0`. Boundary traces are data, not unknowns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DofMap {
    pub k: usize,
    pub interior_dim: usize,
    pub trace_dim: usize,
    pub velocity_interior: usize,
    pub velocity_edge: usize,
    pub pressure: usize,
    pub total: usize,
    #[serde(skip)]
    edge_slot: Vec<Option<usize>>,
}

/// Where one local velocity DOF lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Free(usize),
    /// Boundary trace; index into the lifting's trace vector.
    Fixed(usize),
}

impl DofMap {
    pub fn new<T: Scalar>(mesh: &Mesh<T>, k: usize) -> Self {
        let d0 = dim_pk(k);
        let td = k + 2;
        let mut next = 0;
        let edge_slot = mesh
            .boundary
            .iter()
            .map(|&b| {
                (!b).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let nt = mesh.num_triangles();
        let velocity_interior = 2 * nt * d0;
        let velocity_edge = 2 * next * td;
        let pressure = nt * d0;
        Self {
            k,
            interior_dim: d0,
            trace_dim: td,
            velocity_interior,
            velocity_edge,
            pressure,
            total: velocity_interior + velocity_edge + pressure + 1,
            edge_slot,
        }
    }

    /// Unknown count for `triangles` elements and `interior_edges` interior
    /// edges, without building anything.
    pub fn count(triangles: usize, interior_edges: usize, k: usize) -> usize {
        let d0 = dim_pk(k);
        2 * triangles * d0 + 2 * interior_edges * (k + 2) + triangles * d0 + 1
    }

    /// Unknown count on the structured `n × n` mesh.
    pub fn structured_count(n: usize, k: usize) -> usize {
        Self::count(2 * n * n, 3 * n * n - 2 * n, k)
    }

    pub fn velocity_unknowns(&self) -> usize {
        self.velocity_interior + self.velocity_edge
    }

    pub fn velocity_interior_index(&self, t: usize, c: usize, m: usize) -> usize {
        (t * 2 + c) * self.interior_dim + m
    }

    /// `None` on boundary edges.
    pub fn velocity_edge_index(&self, e: usize, c: usize, r: usize) -> Option<usize> {
        self.edge_slot[e].map(|s| self.velocity_interior + (s * 2 + c) * self.trace_dim + r)
    }

    pub fn pressure_index(&self, t: usize, m: usize) -> usize {
        self.velocity_unknowns() + t * self.interior_dim + m
    }

    pub fn pressure_range(&self) -> std::ops::Range<usize> {
        self.velocity_unknowns()..self.velocity_unknowns() + self.pressure
    }

    pub fn multiplier_index(&self) -> usize {
        self.total - 1
    }

    /// Slots of the stacked local velocity DOFs of element `t`, in the
    /// order used by [`crate::weakops::ElementOperators`].
    pub fn velocity_slots<T: Scalar>(&self, mesh: &Mesh<T>, t: usize) -> Vec<Slot> {
        let mut out = Vec::with_capacity(2 * (self.interior_dim + 3 * self.trace_dim));
        for c in 0..2 {
            for m in 0..self.interior_dim {
                out.push(Slot::Free(self.velocity_interior_index(t, c, m)));
            }
            for &e in &mesh.triangle_edges[t] {
                for r in 0..self.trace_dim {
                    out.push(match self.velocity_edge_index(e, c, r) {
                        Some(g) => Slot::Free(g),
                        None => Slot::Fixed((e * 2 + c) * self.trace_dim + r),
                    });
                }
            }
        }
        out
    }
}
