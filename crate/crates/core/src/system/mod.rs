//! Global assembly of the weak Galerkin Stokes system and its solution.

mod dofs;
mod solver;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::DMat;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::polyquad::{error_exactness, tri_quadrature, MAX_TRI_EXACTNESS};
use crate::problem::ProblemCase;
use crate::scalar::{Point, Scalar};
use crate::sparse::CsrMatrix;
use crate::weakops::{project_edge, ElementOperators, PressureVector, WeakFunctionVector};

pub use dofs::{DofMap, Slot};
pub use solver::{solve, SaddleSolver};

/// Right-hand side data: body force and Dirichlet velocity.
pub trait StokesData<T>: Sync {
    fn force(&self, p: Point<T>) -> [T; 2];
    fn boundary(&self, p: Point<T>) -> [T; 2];
}

impl<T: Scalar> StokesData<T> for ProblemCase<T> {
    fn force(&self, p: Point<T>) -> [T; 2] {
        (self.force)(p)
    }

    fn boundary(&self, p: Point<T>) -> [T; 2] {
        (self.velocity)(p)
    }
}

/// A body force with homogeneous boundary data.
pub struct Homogeneous<F>(pub F);

impl<T: Scalar, F: Fn(Point<T>) -> [T; 2] + Sync> StokesData<T> for Homogeneous<F> {
    fn force(&self, p: Point<T>) -> [T; 2] {
        (self.0)(p)
    }

    fn boundary(&self, _: Point<T>) -> [T; 2] {
        [T::zero(); 2]
    }
}

/// Mesh, polynomial degree, element operators, and DOF numbering.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub mesh: Mesh<T>,
    pub k: usize,
    pub ops: Vec<ElementOperators<T>>,
    pub dofs: DofMap,
}

/// `[A Bᵀ 0; B 0 cᵀ; 0 c 0] x = b`, stored in full (both triangles).
#[derive(Debug, Clone)]
pub struct SaddleSystem<T> {
    pub dofs: DofMap,
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    /// Velocity with only the boundary traces set (the lifted data).
    pub lifting: WeakFunctionVector<T>,
    /// Per-element `P_k` mass matrices.
    pub pressure_mass: Vec<DMat<T>>,
    /// Relative residual the solve must reach.
    pub tol: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub method: String,
    pub unknowns: usize,
    pub factor_nnz: usize,
    pub krylov_iterations: usize,
    pub refinement_steps: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub velocity: WeakFunctionVector<T>,
    pub pressure: PressureVector<T>,
    pub multiplier: T,
    pub diagnostics: SolveDiagnostics,
}

pub fn build_dof_map<T: Scalar>(mesh: &Mesh<T>, k: usize) -> DofMap {
    DofMap::new(mesh, k)
}

/// Assembles on a fresh discretization; see [`Discretization::assemble`].
pub fn assemble<T: Scalar>(mesh: &Mesh<T>, k: usize, data: &dyn StokesData<T>) -> Result<SaddleSystem<T>> {
    Discretization::new(mesh.clone(), k)?.assemble(data)
}

impl<T: Scalar> Discretization<T> {
    pub fn new(mesh: Mesh<T>, k: usize) -> Result<Self> {
        let ops = ElementOperators::build_all(&mesh, k)?;
        let dofs = DofMap::new(&mesh, k);
        Ok(Self { mesh, k, ops, dofs })
    }

    pub fn lifting(&self, data: &dyn StokesData<T>) -> Result<WeakFunctionVector<T>> {
        let mut lift = WeakFunctionVector::zeros(&self.mesh, self.k, 2);
        for e in (0..self.mesh.num_edges()).filter(|&e| self.mesh.boundary[e]) {
            let seg = self.mesh.segment(e);
            for c in 0..2 {
                let coeffs = project_edge(|p| data.boundary(p)[c], &seg, self.k + 1)?;
                lift.trace_coeffs_mut(e, c).copy_from_slice(&coeffs);
            }
        }
        lift.refresh_homogeneous(&self.mesh);
        Ok(lift)
    }

    /// Builds the symmetric saddle-point system. Boundary traces are fixed
    /// to the edge projection of `g` and eliminated into the right side.
    pub fn assemble(&self, data: &dyn StokesData<T>) -> Result<SaddleSystem<T>> {
        let dofs = &self.dofs;
        let lift = self.lifting(data)?;
        let rule = tri_quadrature::<T>(error_exactness(self.k).min(MAX_TRI_EXACTNESS))?;
        let mult = dofs.multiplier_index();

        let locals: Vec<(Vec<(usize, usize, T)>, Vec<(usize, T)>)> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let ops = &self.ops[t];
                let nl = ops.local_dofs();
                let d0 = ops.interior_dim();
                let slots = dofs.velocity_slots(&self.mesh, t);
                let mut trip = Vec::new();
                let mut rhs = Vec::new();

                for c in 0..2 {
                    for a in 0..nl {
                        let Slot::Free(gi) = slots[c * nl + a] else { continue };
                        for b in 0..nl {
                            let v = ops.stiffness[(a, b)];
                            if v == T::zero() {
                                continue;
                            }
                            match slots[c * nl + b] {
                                Slot::Free(gj) if gi <= gj => trip.push((gi, gj, v)),
                                Slot::Free(_) => {}
                                Slot::Fixed(f) => rhs.push((gi, -v * lift.traces[f])),
                            }
                        }
                    }
                }
                // B = −(q, div_w v); pressure rows sit after every velocity
                // column, so (velocity, pressure) is the upper entry.
                for m in 0..d0 {
                    let gp = dofs.pressure_index(t, m);
                    for (b, slot) in slots.iter().enumerate() {
                        let v = -ops.coupling[(m, b)];
                        if v == T::zero() {
                            continue;
                        }
                        match *slot {
                            Slot::Free(gj) => trip.push((gj, gp, v)),
                            Slot::Fixed(f) => rhs.push((gp, -v * lift.traces[f])),
                        }
                    }
                    trip.push((gp, mult, ops.mass_interior[(m, 0)]));
                }

                let tri = &ops.triangle;
                let jac = T::cst(2.0) * tri.area();
                let mut load = vec![T::zero(); 2 * d0];
                for (r, w) in rule.iter() {
                    let p = tri.map(*r);
                    let f = data.force(p);
                    let psi = ops.interior_basis.values(p);
                    for m in 0..d0 {
                        load[m] += w * jac * f[0] * psi[m];
                        load[d0 + m] += w * jac * f[1] * psi[m];
                    }
                }
                for c in 0..2 {
                    for m in 0..d0 {
                        rhs.push((dofs.velocity_interior_index(t, c, m), load[c * d0 + m]));
                    }
                }
                (trip, rhs)
            })
            .collect();

        let mut upper = Vec::new();
        let mut rhs = vec![T::zero(); dofs.total];
        for (trip, r) in locals {
            upper.extend(trip);
            for (i, v) in r {
                rhs[i] += v;
            }
        }
        let upper = CsrMatrix::from_triplets(dofs.total, dofs.total, upper)?;
        let mut full: Vec<(usize, usize, T)> = Vec::with_capacity(2 * upper.nnz());
        for (i, j, v) in upper.iter() {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        let matrix = CsrMatrix::from_triplets(dofs.total, dofs.total, full)?;
        let pressure_mass = self.ops.iter().map(|o| o.mass_interior.clone()).collect();
        Ok(SaddleSystem { dofs: dofs.clone(), matrix, rhs, lifting: lift, pressure_mass, tol: T::cst(1e-10) })
    }

    /// `max_q |(div_w u_h, q)_h|` over the pressure basis.
    pub fn max_divergence_moment(&self, u: &WeakFunctionVector<T>) -> T {
        (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let local = u.local_vector(&self.mesh, t);
                self.ops[t].coupling.matvec(&local).into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(T::zero(), T::max)
    }
}

impl<T: Scalar> SaddleSystem<T> {
    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    /// Velocity–velocity block `A`.
    pub fn velocity_block(&self) -> CsrMatrix<T> {
        let n = self.dofs.velocity_unknowns();
        self.matrix.submatrix(0..n, 0..n)
    }

    /// Pressure–velocity block `B`.
    pub fn divergence_block(&self) -> CsrMatrix<T> {
        self.matrix.submatrix(self.dofs.pressure_range(), 0..self.dofs.velocity_unknowns())
    }

    /// The constraint row `c`, `c_q = ∫_Ω q`.
    pub fn constraint(&self) -> Vec<T> {
        let r = self.dofs.pressure_range();
        (r.clone()).map(|i| self.matrix.get(self.dofs.multiplier_index(), i)).collect()
    }

    /// Pressure coefficients of the constant function 1.
    pub fn constant_pressure(&self) -> Vec<T> {
        let d0 = self.dofs.interior_dim;
        (0..self.dofs.pressure).map(|i| if i % d0 == 0 { T::one() } else { T::zero() }).collect()
    }

    pub fn relative_residual(&self, x: &[T]) -> T {
        let r = self.matrix.matvec(x);
        let num = crate::sparse::norm(&r.iter().zip(&self.rhs).map(|(a, b)| *a - *b).collect::<Vec<_>>());
        let den = crate::sparse::norm(&self.rhs);
        if den == T::zero() {
            num
        } else {
            num / den
        }
    }

    /// Writes `row col value` lines to `path` and the right side, one value
    /// per line, to `path` with `.rhs` appended.
    pub fn dump(&self, path: &Path) -> Result<()> {
        self.matrix.write_coordinate(path)?;
        let mut s = String::new();
        for v in &self.rhs {
            s.push_str(&format!("{v:e}\n"));
        }
        let mut rhs_path = path.as_os_str().to_owned();
        rhs_path.push(".rhs");
        std::fs::write(rhs_path, s)?;
        Ok(())
    }
}
