use rayon::prelude::*;

use crate::dense::{DMat, Lu};
use crate::error::Result;
use crate::mesh::{Mesh, Segment, Triangle};
use crate::polyquad::{
    assembly_edge_points, assembly_exactness, edge_quadrature, tri_mass_matrix, tri_quadrature, EdgeBasis,
    TriBasis,
};
use crate::scalar::{Point, Scalar};

/// Element-local matrices realizing the weak gradient and weak divergence.
///
/// Local scalar DOFs are ordered `[v⁰ (dim P_k) | v^b on local edge 0, 1, 2
/// (k + 2 each)]`, with trace coefficients in the Legendre basis of the
/// global edge orientation. Vector weak functions stack the two components.
#[derive(Debug, Clone)]
pub struct ElementOperators<T> {
    pub k: usize,
    pub triangle: Triangle<T>,
    /// Global edge index of each local edge.
    pub edges: [usize; 3],
    /// Global edge segments (global orientation, not local).
    pub segments: [Segment<T>; 3],
    pub normals: [Point<T>; 3],
    pub interior_basis: TriBasis<T>,
    pub gradient_basis: TriBasis<T>,
    /// Mass matrix of `P_k(K)`.
    pub mass_interior: DMat<T>,
    /// Mass matrix of `P_{k+1}(K)`.
    pub mass_gradient: DMat<T>,
    /// `∫_K ψ_i φ_j`, ψ in `P_k`, φ in `P_{k+1}`.
    pub mass_mixed: DMat<T>,
    /// Scalar DOFs → coefficients of `∇_w v` in `[P_{k+1}]²`, x block first.
    pub grad: DMat<T>,
    /// Vector DOFs → coefficients of `div_w v` in `P_{k+1}`.
    pub div: DMat<T>,
    /// `(∇_w v, ∇_w w)_K` for one scalar component.
    pub stiffness: DMat<T>,
    /// `(ψ_i, div_w v)_K` for ψ in the `P_k` pressure basis.
    pub coupling: DMat<T>,
}

impl<T: Scalar> ElementOperators<T> {
    pub fn new(mesh: &Mesh<T>, t: usize, k: usize) -> Result<Self> {
        let triangle = mesh.triangle(t);
        let edges = mesh.triangle_edges[t];
        let segments = edges.map(|e| mesh.segment(e));
        let mut normals = [[T::zero(); 2]; 3];
        for (j, n) in normals.iter_mut().enumerate() {
            *n = mesh.outward_normal(t, j)?;
        }
        Self::from_geometry(triangle, edges, segments, normals, k)
    }

    /// Builds the operators from explicit geometry. `segments[j]` is the
    /// trace parametrization used for local edge `j`.
    pub fn from_geometry(
        triangle: Triangle<T>,
        edges: [usize; 3],
        segments: [Segment<T>; 3],
        normals: [Point<T>; 3],
        k: usize,
    ) -> Result<Self> {
        let interior_basis = TriBasis::new(k, &triangle);
        let gradient_basis = TriBasis::new(k + 1, &triangle);
        let d0 = interior_basis.dim();
        let d1 = gradient_basis.dim();
        let nl = local_dofs(k);
        let rule = tri_quadrature::<T>(assembly_exactness(k))?;
        let edge_rule = edge_quadrature::<T>(assembly_edge_points(k))?;
        let edge_basis = EdgeBasis::new(k + 1);

        let mass_interior = tri_mass_matrix(&interior_basis, &triangle, &rule);
        let mass_gradient = tri_mass_matrix(&gradient_basis, &triangle, &rule);
        let mut mass_mixed = DMat::zeros(d0, d1);

        // Right sides of the defining relation, one column per local DOF:
        // rx[i][·] = −∫_K v⁰ ∂_x φ_i + ∫_∂K v^b φ_i n_x, likewise for y.
        let mut rx = DMat::zeros(d1, nl);
        let mut ry = DMat::zeros(d1, nl);
        let jac = T::cst(2.0) * triangle.area();
        for (r, w) in rule.iter() {
            let p = triangle.map(*r);
            let psi = interior_basis.values(p);
            let phi = gradient_basis.values(p);
            let dphi = gradient_basis.gradients(p);
            let w = w * jac;
            for i in 0..d1 {
                for m in 0..d0 {
                    rx[(i, m)] -= w * psi[m] * dphi[i][0];
                    ry[(i, m)] -= w * psi[m] * dphi[i][1];
                }
            }
            for m in 0..d0 {
                for i in 0..d1 {
                    mass_mixed[(m, i)] += w * psi[m] * phi[i];
                }
            }
        }
        for j in 0..3 {
            let seg = segments[j];
            let len = seg.length();
            let n = normals[j];
            for (&s, w) in edge_rule.iter() {
                let p = seg.point(s);
                let phi = gradient_basis.values(p);
                let l = edge_basis.values(s);
                let w = w * len;
                for (r, &lr) in l.iter().enumerate() {
                    let col = d0 + j * (k + 2) + r;
                    for i in 0..d1 {
                        rx[(i, col)] += w * lr * phi[i] * n[0];
                        ry[(i, col)] += w * lr * phi[i] * n[1];
                    }
                }
            }
        }

        let lu = Lu::new(mass_gradient.clone(), "P_{k+1} element mass matrix")?;
        let gx = lu.solve_mat(&rx);
        let gy = lu.solve_mat(&ry);
        let mut grad = DMat::zeros(2 * d1, nl);
        grad.set_block(0, 0, &gx);
        grad.set_block(d1, 0, &gy);
        // div_w tested against q ∈ P_{k+1}: the x-moments of the first
        // component plus the y-moments of the second.
        let mut div = DMat::zeros(d1, 2 * nl);
        div.set_block(0, 0, &gx);
        div.set_block(0, nl, &gy);

        let mut stiffness = rx.tr_matmul(&gx);
        let sy = ry.tr_matmul(&gy);
        for i in 0..nl {
            for j in i..nl {
                stiffness[(i, j)] += sy[(i, j)];
            }
        }
        stiffness.symmetrize_from_upper();
        let coupling = mass_mixed.matmul(&div);

        Ok(Self {
            k,
            triangle,
            edges,
            segments,
            normals,
            interior_basis,
            gradient_basis,
            mass_interior,
            mass_gradient,
            mass_mixed,
            grad,
            div,
            stiffness,
            coupling,
        })
    }

    /// Operators for every element of the mesh, in element order.
    pub fn build_all(mesh: &Mesh<T>, k: usize) -> Result<Vec<Self>> {
        (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| Self::new(mesh, t, k))
            .collect()
    }

    pub fn interior_dim(&self) -> usize {
        self.interior_basis.dim()
    }

    pub fn gradient_dim(&self) -> usize {
        self.gradient_basis.dim()
    }

    pub fn local_dofs(&self) -> usize {
        local_dofs(self.k)
    }

    /// Local DOFs of the constant weak function `{c, c}`.
    pub fn constant_dofs(&self, c: T) -> Vec<T> {
        let mut v = vec![T::zero(); self.local_dofs()];
        v[0] = c;
        for j in 0..3 {
            v[self.interior_dim() + j * (self.k + 2)] = c;
        }
        v
    }

    /// Coefficients of `∇_w v` for scalar local DOFs `v`.
    pub fn weak_gradient(&self, v: &[T]) -> Vec<T> {
        self.grad.matvec(v)
    }

    /// Coefficients of `div_w v` for vector local DOFs `v`.
    pub fn weak_divergence(&self, v: &[T]) -> Vec<T> {
        self.div.matvec(v)
    }

    /// `‖∇_w v‖²_{0,K}` for a scalar weak function.
    pub fn weak_gradient_norm_sq(&self, v: &[T]) -> T {
        let g = self.weak_gradient(v);
        let d1 = self.gradient_dim();
        quadratic_form(&self.mass_gradient, &g[..d1]) + quadratic_form(&self.mass_gradient, &g[d1..])
    }

    /// `‖div_w v‖²_{0,K}` for a vector weak function.
    pub fn weak_divergence_norm_sq(&self, v: &[T]) -> T {
        quadratic_form(&self.mass_gradient, &self.weak_divergence(v))
    }
}

/// Scalar local DOF count `dim P_k + 3 (k + 2)`.
pub const fn local_dofs(k: usize) -> usize {
    (k + 1) * (k + 2) / 2 + 3 * (k + 2)
}

pub(crate) fn quadratic_form<T: Scalar>(m: &DMat<T>, x: &[T]) -> T {
    crate::scalar::dot(x, &m.matvec(x))
}

/// Weak gradient matrix of element `t`.
pub fn weak_gradient_op<T: Scalar>(mesh: &Mesh<T>, t: usize, k: usize) -> Result<DMat<T>> {
    Ok(ElementOperators::new(mesh, t, k)?.grad)
}

/// Weak divergence matrix of element `t`.
pub fn weak_divergence_op<T: Scalar>(mesh: &Mesh<T>, t: usize, k: usize) -> Result<DMat<T>> {
    Ok(ElementOperators::new(mesh, t, k)?.div)
}
