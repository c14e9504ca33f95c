//! Conforming triangulations of the unit square.
//!
//! Edges carry a global orientation from the endpoint with the lower vertex
//! index to the higher one. The global edge normal is the tangent rotated
//! clockwise, so for a counterclockwise triangle whose local edge runs
//! `v_j -> v_{j+1}` the outward normal is the global normal times the stored
//! incidence sign.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

/// Geometry of a single triangle, vertices counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle<T> {
    pub vertices: [Point<T>; 3],
}

impl<T: Scalar> Triangle<T> {
    pub fn new(vertices: [Point<T>; 3]) -> Self {
        Self { vertices }
    }

    pub fn signed_area(&self) -> T {
        let [a, b, c] = self.vertices;
        ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::cst(0.5)
    }

    pub fn area(&self) -> T {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point<T> {
        let [a, b, c] = self.vertices;
        let third = T::one() / T::cst(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    /// Longest edge length.
    pub fn diameter(&self) -> T {
        (0..3).map(|j| self.edge(j).length()).fold(T::zero(), T::max)
    }

    /// Local edge `j` runs from vertex `j` to vertex `j + 1 (mod 3)`.
    pub fn edge(&self, j: usize) -> Segment<T> {
        Segment::new(self.vertices[j], self.vertices[(j + 1) % 3])
    }

    /// Outward unit normal on local edge `j` (assumes counterclockwise order).
    pub fn outward_normal(&self, j: usize) -> Point<T> {
        self.edge(j).right_normal()
    }

    /// Maps reference coordinates (ξ, η) on (0,0),(1,0),(0,1) to the element.
    pub fn map(&self, r: Point<T>) -> Point<T> {
        let [a, b, c] = self.vertices;
        [
            a[0] + (b[0] - a[0]) * r[0] + (c[0] - a[0]) * r[1],
            a[1] + (b[1] - a[1]) * r[0] + (c[1] - a[1]) * r[1],
        ]
    }

    /// Barycentric coordinates of `p`.
    pub fn barycentric(&self, p: Point<T>) -> [T; 3] {
        let [a, b, c] = self.vertices;
        let det = T::cst(2.0) * self.signed_area();
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [T::one() - l1 - l2, l1, l2]
    }

    /// Constant gradients of the barycentric coordinates.
    pub fn barycentric_gradients(&self) -> [Point<T>; 3] {
        let [a, b, c] = self.vertices;
        let det = T::cst(2.0) * self.signed_area();
        let g1 = [(c[1] - a[1]) / det, -(c[0] - a[0]) / det];
        let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
        [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
    }
}

/// Straight segment parametrized by normalized arc length `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: Point<T>,
    pub end: Point<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(start: Point<T>, end: Point<T>) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> T {
        let dx = self.end[0] - self.start[0];
        let dy = self.end[1] - self.start[1];
        dx.hypot(dy)
    }

    pub fn point(&self, s: T) -> Point<T> {
        [
            self.start[0] + (self.end[0] - self.start[0]) * s,
            self.start[1] + (self.end[1] - self.start[1]) * s,
        ]
    }

    /// Unit tangent rotated clockwise by a quarter turn.
    pub fn right_normal(&self) -> Point<T> {
        let len = self.length();
        [
            (self.end[1] - self.start[1]) / len,
            -(self.end[0] - self.start[0]) / len,
        ]
    }
}

/// Triangulation with globally oriented edges and refinement lineage.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub vertices: Vec<Point<T>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs, lower index first.
    pub edges: Vec<[usize; 2]>,
    /// `triangle_edges[t][j]` is the global edge of local edge `j`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// +1 when the outward normal of (t, j) equals the global edge normal.
    pub edge_signs: Vec<[i8; 3]>,
    /// Incident triangles per edge; the second slot is empty on the boundary.
    pub edge_triangles: Vec<[Option<usize>; 2]>,
    pub boundary: Vec<bool>,
    /// Parent triangle in the mesh this one was refined from.
    pub parent: Option<Vec<usize>>,
    /// Number of grid cells per side for structured meshes.
    pub grid_cells: Option<usize>,
    /// Integer lattice coordinates (numerators over `grid_cells`), kept so
    /// that refinement reproduces the structured vertex coordinates exactly.
    lattice: Option<Vec<[i64; 2]>>,
    h: T,
}

impl<T: Scalar> Mesh<T> {
    /// Builds edge topology for an arbitrary triangle list. Triangles are
    /// taken as given; use [`Mesh::validate`] to check orientation.
    pub fn from_triangles(vertices: Vec<Point<T>>, triangles: Vec<[usize; 3]>) -> Self {
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut edge_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            let mut ts = [0i8; 3];
            for j in 0..3 {
                let a = tri[j];
                let b = tri[(j + 1) % 3];
                let key = [a.min(b), a.max(b)];
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    slot[1] = Some(t);
                }
                te[j] = e;
                ts[j] = if a < b { 1 } else { -1 };
            }
            triangle_edges.push(te);
            edge_signs.push(ts);
        }
        let boundary = edge_triangles.iter().map(|s| s[1].is_none()).collect();
        let mut mesh = Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_signs,
            edge_triangles,
            boundary,
            parent: None,
            grid_cells: None,
            lattice: None,
            h: T::zero(),
        };
        mesh.h = mesh.compute_h();
        mesh
    }

    /// `n × n` squares on the unit square, each split along its
    /// lower-left to upper-right diagonal.
    pub fn build_structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid cell count must be positive".into()));
        }
        let lattice: Vec<[i64; 2]> = (0..=n)
            .flat_map(|j| (0..=n).map(move |i| [i as i64, j as i64]))
            .collect();
        let vertices = lattice_coordinates(&lattice, n);
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut mesh = Self::from_triangles(vertices, triangles);
        mesh.grid_cells = Some(n);
        mesh.lattice = Some(lattice);
        Ok(mesh)
    }

    /// Regular red refinement: every edge is bisected and every triangle is
    /// replaced by its four midpoint children.
    pub fn refine(&self) -> Self {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for &[a, b] in &self.edges {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let half = T::cst(0.5);
            vertices.push([(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]);
        }
        let lattice = self.lattice.as_ref().map(|lat| {
            let mut out: Vec<[i64; 2]> = lat.iter().map(|p| [2 * p[0], 2 * p[1]]).collect();
            out.extend(self.edges.iter().map(|&[a, b]| [lat[a][0] + lat[b][0], lat[a][1] + lat[b][1]]));
            out
        });
        let grid_cells = self.grid_cells.map(|n| 2 * n);
        if let (Some(lat), Some(n)) = (&lattice, grid_cells) {
            vertices = lattice_coordinates(lat, n);
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut parent = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[v0, v1, v2]) in self.triangles.iter().enumerate() {
            let [e0, e1, e2] = self.triangle_edges[t];
            let (m01, m12, m20) = (nv + e0, nv + e1, nv + e2);
            triangles.extend_from_slice(&[[v0, m01, m20], [m01, v1, m12], [m20, m12, v2], [m01, m12, m20]]);
            parent.extend_from_slice(&[t; 4]);
        }
        let mut mesh = Self::from_triangles(vertices, triangles);
        mesh.parent = Some(parent);
        mesh.grid_cells = grid_cells;
        mesh.lattice = lattice;
        mesh
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> T {
        self.h
    }

    /// Grid pitch `1/n` for structured meshes.
    pub fn grid_pitch(&self) -> Option<T> {
        self.grid_cells.map(|n| T::one() / T::of_usize(n))
    }

    pub fn triangle(&self, t: usize) -> Triangle<T> {
        let [a, b, c] = self.triangles[t];
        Triangle::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    /// Edge segment in its global orientation.
    pub fn segment(&self, e: usize) -> Segment<T> {
        let [a, b] = self.edges[e];
        Segment::new(self.vertices[a], self.vertices[b])
    }

    pub fn edge_normal(&self, e: usize) -> Point<T> {
        self.segment(e).right_normal()
    }

    pub fn outward_normal(&self, t: usize, local_edge: usize) -> Result<Point<T>> {
        if t >= self.triangles.len() {
            return Err(Error::OutOfRange { index: t, len: self.triangles.len() });
        }
        if local_edge >= 3 {
            return Err(Error::OutOfRange { index: local_edge, len: 3 });
        }
        let n = self.edge_normal(self.triangle_edges[t][local_edge]);
        let s = T::cst(self.edge_signs[t][local_edge] as f64);
        Ok([n[0] * s, n[1] * s])
    }

    fn compute_h(&self) -> T {
        (0..self.triangles.len())
            .map(|t| self.triangle(t).diameter())
            .fold(T::zero(), T::max)
    }

    /// Checks the structural invariants. Violations are returned as data.
    pub fn validate(&self) -> MeshReport {
        let mut violations = Vec::new();
        for t in 0..self.triangles.len() {
            let area = self.triangle(t).signed_area();
            if !(area > T::zero()) {
                violations.push(Violation::NegativeArea { triangle: t, area: area.to_f64_lossy() });
            }
        }
        let mut incidence = vec![Vec::new(); self.edges.len()];
        for (t, te) in self.triangle_edges.iter().enumerate() {
            for j in 0..3 {
                if let Some(slot) = incidence.get_mut(te[j]) {
                    slot.push((t, self.edge_signs[t][j]));
                }
            }
        }
        for (e, inc) in incidence.iter().enumerate() {
            let [a, b] = self.edges[e];
            if a >= b {
                violations.push(Violation::EdgeOrientation { edge: e });
            }
            let expected = if self.boundary[e] { 1 } else { 2 };
            if inc.len() != expected {
                violations.push(Violation::IncidenceCount {
                    edge: e,
                    count: inc.len(),
                    boundary: self.boundary[e],
                });
            } else if inc.len() == 2 && inc[0].1 + inc[1].1 != 0 {
                violations.push(Violation::SignMismatch { edge: e });
            }
        }
        let (v, e, t) = (self.vertices.len() as i64, self.edges.len() as i64, self.triangles.len() as i64);
        if v - e + t != 1 {
            violations.push(Violation::Euler { vertices: v, edges: e, triangles: t });
        }
        let h = self.compute_h();
        if h != self.h {
            violations.push(Violation::MeshSize { stored: self.h.to_f64_lossy(), computed: h.to_f64_lossy() });
        }
        MeshReport { violations }
    }

    /// Plain-text dump: header `nv ne nt`, then vertex coordinates, edges with
    /// boundary flag, and triangles.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.edges.len(), self.triangles.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
        }
        for (e, [a, b]) in self.edges.iter().enumerate() {
            let _ = writeln!(s, "{a} {b} {}", u8::from(self.boundary[e]));
        }
        for [a, b, c] in &self.triangles {
            let _ = writeln!(s, "{a} {b} {c}");
        }
        s
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn lattice_coordinates<T: Scalar>(lattice: &[[i64; 2]], n: usize) -> Vec<Point<T>> {
    let denom = T::of_usize(n);
    lattice
        .iter()
        .map(|&[i, j]| [T::cst(i as f64) / denom, T::cst(j as f64) / denom])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NegativeArea { triangle: usize, area: f64 },
    IncidenceCount { edge: usize, count: usize, boundary: bool },
    SignMismatch { edge: usize },
    EdgeOrientation { edge: usize },
    Euler { vertices: i64, edges: i64, triangles: i64 },
    MeshSize { stored: f64, computed: f64 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MeshReport {
    pub violations: Vec<Violation>,
}

impl MeshReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid_counts() {
        let m = Mesh::<f64>::build_structured(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (4, 5, 2));
        let m = Mesh::<f64>::build_structured(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_triangles()), (9, 16, 8));
        assert!(Mesh::<f64>::build_structured(0).is_err());
    }

    #[test]
    fn grid_of_ten_matches_first_table_row() {
        let m = Mesh::<f64>::build_structured(10).unwrap();
        assert_eq!(m.num_triangles(), 200);
        assert_eq!(m.grid_pitch(), Some(0.1));
        assert!((m.h() - 2f64.sqrt() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn reference_triangle_normals() {
        let m = Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]);
        let s = 0.5f64.sqrt();
        let n = m.outward_normal(0, 1).unwrap();
        assert!((n[0] - s).abs() < 1e-15 && (n[1] - s).abs() < 1e-15);
        assert_eq!(m.outward_normal(0, 0).unwrap(), [0.0, -1.0]);
        assert!(matches!(m.outward_normal(1, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.outward_normal(0, 3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn interior_normals_cancel() {
        let m = Mesh::<f64>::build_structured(3).unwrap();
        for e in 0..m.num_edges() {
            if let [Some(t0), Some(t1)] = m.edge_triangles[e] {
                let j0 = m.triangle_edges[t0].iter().position(|&x| x == e).unwrap();
                let j1 = m.triangle_edges[t1].iter().position(|&x| x == e).unwrap();
                let a = m.outward_normal(t0, j0).unwrap();
                let b = m.outward_normal(t1, j1).unwrap();
                assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn validate_flags_constructed_failures() {
        assert!(Mesh::<f64>::build_structured(4).unwrap().validate().is_valid());

        let mut m = Mesh::<f64>::build_structured(2).unwrap();
        m.triangles[3].swap(0, 1);
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeArea { triangle: 3, .. })));

        let mut m = Mesh::<f64>::build_structured(2).unwrap();
        m.edges.push([0, 8]);
        m.boundary.push(false);
        m.edge_triangles.push([None, None]);
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IncidenceCount { count: 0, .. })));
    }

    #[test]
    fn refine_quarters_areas_exactly() {
        let m = Mesh::<f64>::build_structured(1).unwrap();
        let r = m.refine();
        assert_eq!(r.num_triangles(), 8);
        let parent = r.parent.as_ref().unwrap();
        for t in 0..r.num_triangles() {
            assert_eq!(r.triangle(t).area() * 4.0, m.triangle(parent[t]).area());
        }
        assert_eq!(r.grid_cells, Some(2));
    }

    #[test]
    fn dump_header() {
        let m = Mesh::<f64>::build_structured(1).unwrap();
        let text = m.to_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("4 5 2"));
        assert_eq!(text.lines().count(), 1 + 4 + 5 + 2);
    }
}
