use serde::{Deserialize, Serialize};

use crate::dense::Lu;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Segment, Triangle};
use crate::polyquad::{dim_pk, edge_quadrature, tri_mass_matrix, tri_quadrature, EdgeBasis, TriBasis, MAX_EDGE_POINTS};
use crate::scalar::{Point, Scalar};

use super::element::local_dofs;

/// Coefficients of a global weak function `{v⁰, v^b}`.
///
/// Interior coefficients are stored per (element, component) and trace
/// coefficients once per (global edge, component), so `v^b` is single valued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFunctionVector<T> {
    pub k: usize,
    pub components: usize,
    /// Index `(t · components + c) · dim P_k + m`.
    pub interior: Vec<T>,
    /// Index `(e · components + c) · (k + 2) + r`.
    pub traces: Vec<T>,
    /// Set when every boundary trace coefficient is exactly zero.
    pub homogeneous: bool,
}

impl<T: Scalar> WeakFunctionVector<T> {
    pub fn zeros(mesh: &Mesh<T>, k: usize, components: usize) -> Self {
        Self {
            k,
            components,
            interior: vec![T::zero(); mesh.num_triangles() * components * dim_pk(k)],
            traces: vec![T::zero(); mesh.num_edges() * components * (k + 2)],
            homogeneous: true,
        }
    }

    pub fn interior_dim(&self) -> usize {
        dim_pk(self.k)
    }

    pub fn trace_dim(&self) -> usize {
        self.k + 2
    }

    pub fn interior_index(&self, t: usize, c: usize, m: usize) -> usize {
        (t * self.components + c) * self.interior_dim() + m
    }

    pub fn trace_index(&self, e: usize, c: usize, r: usize) -> usize {
        (e * self.components + c) * self.trace_dim() + r
    }

    pub fn interior_coeffs(&self, t: usize, c: usize) -> &[T] {
        let i = self.interior_index(t, c, 0);
        &self.interior[i..i + self.interior_dim()]
    }

    pub fn interior_coeffs_mut(&mut self, t: usize, c: usize) -> &mut [T] {
        let i = self.interior_index(t, c, 0);
        let d = self.interior_dim();
        &mut self.interior[i..i + d]
    }

    pub fn trace_coeffs(&self, e: usize, c: usize) -> &[T] {
        let i = self.trace_index(e, c, 0);
        &self.traces[i..i + self.trace_dim()]
    }

    pub fn trace_coeffs_mut(&mut self, e: usize, c: usize) -> &mut [T] {
        let i = self.trace_index(e, c, 0);
        let d = self.trace_dim();
        &mut self.traces[i..i + d]
    }

    /// Scalar local DOFs of component `c` on element `t`.
    pub fn local(&self, mesh: &Mesh<T>, t: usize, c: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(local_dofs(self.k));
        out.extend_from_slice(self.interior_coeffs(t, c));
        for &e in &mesh.triangle_edges[t] {
            out.extend_from_slice(self.trace_coeffs(e, c));
        }
        out
    }

    /// Both components' local DOFs stacked.
    pub fn local_vector(&self, mesh: &Mesh<T>, t: usize) -> Vec<T> {
        let mut out = self.local(mesh, t, 0);
        out.extend(self.local(mesh, t, 1));
        out
    }

    /// Zeroes every boundary trace, projecting into `S_h⁰`.
    pub fn clear_boundary(&mut self, mesh: &Mesh<T>) {
        for e in (0..mesh.num_edges()).filter(|&e| mesh.boundary[e]) {
            for c in 0..self.components {
                self.trace_coeffs_mut(e, c).fill(T::zero());
            }
        }
        self.homogeneous = true;
    }

    /// Recomputes the homogeneous flag from the data.
    pub fn refresh_homogeneous(&mut self, mesh: &Mesh<T>) {
        self.homogeneous = (0..mesh.num_edges())
            .filter(|&e| mesh.boundary[e])
            .all(|e| (0..self.components).all(|c| self.trace_coeffs(e, c).iter().all(|v| *v == T::zero())));
    }
}

/// Piecewise `P_k` pressure coefficients, index `t · dim P_k + m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureVector<T> {
    pub k: usize,
    pub coeffs: Vec<T>,
    pub mean_zero: bool,
}

impl<T: Scalar> PressureVector<T> {
    pub fn zeros(mesh: &Mesh<T>, k: usize) -> Self {
        Self { k, coeffs: vec![T::zero(); mesh.num_triangles() * dim_pk(k)], mean_zero: true }
    }

    pub fn element(&self, t: usize) -> &[T] {
        let d = dim_pk(self.k);
        &self.coeffs[t * d..(t + 1) * d]
    }

    /// `∫_Ω q_h`.
    pub fn integral(&self, mesh: &Mesh<T>) -> Result<T> {
        let rule = tri_quadrature::<T>((2 * self.k).max(1))?;
        let mut total = T::zero();
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle(t);
            let basis = TriBasis::new(self.k, &tri);
            let c = self.element(t);
            total += crate::polyquad::integrate_triangle(&tri, &rule, |p| basis.evaluate(c, p));
        }
        Ok(total)
    }
}

fn projection_rule_exactness(l: usize) -> usize {
    (2 * l + 8).min(crate::polyquad::MAX_TRI_EXACTNESS)
}

/// Local L2 projection of `u` onto `P_l(K)` in the scaled monomial basis.
pub fn project_interior<T: Scalar>(u: impl Fn(Point<T>) -> T, element: &Triangle<T>, l: usize) -> Result<Vec<T>> {
    let basis = TriBasis::new(l, element);
    let rule = tri_quadrature::<T>(projection_rule_exactness(l))?;
    let mass = tri_mass_matrix(&basis, element, &rule);
    let jac = T::cst(2.0) * element.area();
    let mut rhs = vec![T::zero(); basis.dim()];
    for (r, w) in rule.iter() {
        let p = element.map(*r);
        let fu = u(p) * w * jac;
        for (b, v) in rhs.iter_mut().zip(basis.values(p)) {
            *b += fu * v;
        }
    }
    Ok(Lu::new(mass, "interior projection mass matrix")?.solve(&rhs))
}

/// L2(e) projection of `u` onto `P_m(e)` in the Legendre basis of `edge`.
pub fn project_edge<T: Scalar>(u: impl Fn(Point<T>) -> T, edge: &Segment<T>, m: usize) -> Result<Vec<T>> {
    let rule = edge_quadrature::<T>((m + 6).min(MAX_EDGE_POINTS))?;
    let basis = EdgeBasis::new(m);
    let mut out = vec![T::zero(); m + 1];
    for (&s, w) in rule.iter() {
        let fu = u(edge.point(s)) * w;
        for (o, l) in out.iter_mut().zip(basis.values(s)) {
            *o += fu * l;
        }
    }
    // ∫₀¹ L_r² ds = 1/(2r+1); the edge length cancels
    for (r, o) in out.iter_mut().enumerate() {
        *o *= T::of_usize(2 * r + 1);
    }
    Ok(out)
}

/// `Q_h u = {P_h^k u, P_∂K^{k+1} u}` for a field with any number of
/// components.
pub fn project_qh<T: Scalar>(
    mesh: &Mesh<T>,
    k: usize,
    components: &[&dyn Fn(Point<T>) -> T],
) -> Result<WeakFunctionVector<T>> {
    if components.is_empty() {
        return Err(Error::InvalidArgument("Q_h needs at least one component".into()));
    }
    let mut v = WeakFunctionVector::zeros(mesh, k, components.len());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangle(t);
        for (c, f) in components.iter().enumerate() {
            let coeffs = project_interior(f, &tri, k)?;
            v.interior_coeffs_mut(t, c).copy_from_slice(&coeffs);
        }
    }
    for e in 0..mesh.num_edges() {
        let seg = mesh.segment(e);
        for (c, f) in components.iter().enumerate() {
            let coeffs = project_edge(f, &seg, k + 1)?;
            v.trace_coeffs_mut(e, c).copy_from_slice(&coeffs);
        }
    }
    v.refresh_homogeneous(mesh);
    Ok(v)
}

/// `Q_h` of a vector field.
pub fn project_qh_vector<T: Scalar>(
    mesh: &Mesh<T>,
    k: usize,
    u: impl Fn(Point<T>) -> [T; 2],
) -> Result<WeakFunctionVector<T>> {
    let u0 = |p: Point<T>| u(p)[0];
    let u1 = |p: Point<T>| u(p)[1];
    project_qh(mesh, k, &[&u0, &u1])
}

/// Elementwise `P_h^k` projection of a scalar field as a pressure vector.
pub fn project_pressure<T: Scalar>(mesh: &Mesh<T>, k: usize, p: impl Fn(Point<T>) -> T) -> Result<PressureVector<T>> {
    let mut out = PressureVector::zeros(mesh, k);
    let d = dim_pk(k);
    for t in 0..mesh.num_triangles() {
        let c = project_interior(&p, &mesh.triangle(t), k)?;
        out.coeffs[t * d..(t + 1) * d].copy_from_slice(&c);
    }
    out.mean_zero = false;
    Ok(out)
}
