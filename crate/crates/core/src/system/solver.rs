use crate::dense::Lu;
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::sparse::{norm, CsrMatrix, SparseLdl};
use crate::weakops::{PressureVector, WeakFunctionVector};

use super::{SaddleSystem, Solution, SolveDiagnostics};

const MAX_REFINEMENTS: usize = 8;

/// Block solver for the saddle-point system.
///
/// `A` is factored once by sparse `LDLᵀ`; the pressure is found by
/// projected conjugate gradients on `S = B A⁻¹ Bᵀ` restricted to
/// `c·p = 0`, preconditioned with the pressure mass matrix. Iterative
/// refinement on the full residual enforces the requested tolerance.
#[derive(Debug, Clone)]
pub struct SaddleSolver<'a, T> {
    pub system: &'a SaddleSystem<T>,
    a: SparseLdl<T>,
    b: CsrMatrix<T>,
    c: Vec<T>,
    ones: Vec<T>,
    c_ones: T,
    mass: Vec<Lu<T>>,
    pub max_iterations: usize,
    pub inner_tol: T,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InnerStats {
    pub iterations: usize,
}

impl<'a, T: Scalar> SaddleSolver<'a, T> {
    pub fn new(system: &'a SaddleSystem<T>) -> Result<Self> {
        let a = SparseLdl::new(&system.velocity_block())?;
        let b = system.divergence_block();
        let c = system.constraint();
        let ones = system.constant_pressure();
        let c_ones = dot(&c, &ones);
        if !(c_ones > T::zero()) {
            return Err(Error::Singular("pressure constraint row is degenerate".into()));
        }
        let mass = system
            .pressure_mass
            .iter()
            .map(|m| Lu::new(m.clone(), "pressure mass block"))
            .collect::<Result<Vec<_>>>()?;
        let np = system.dofs.pressure;
        Ok(Self {
            system,
            a,
            b,
            c,
            ones,
            c_ones,
            mass,
            max_iterations: (10 * np).clamp(200, 5000),
            inner_tol: T::cst(1e-12).max(T::epsilon() * T::cst(100.0)),
        })
    }

    pub fn factor_nnz(&self) -> usize {
        self.a.factor_nnz()
    }

    /// `A⁻¹ r`.
    pub fn velocity_solve(&self, r: &[T]) -> Vec<T> {
        self.a.solve(r)
    }

    pub fn divergence(&self) -> &CsrMatrix<T> {
        &self.b
    }

    /// `S p = B A⁻¹ Bᵀ p`.
    pub fn schur_apply(&self, p: &[T]) -> Vec<T> {
        self.b.matvec(&self.a.solve(&self.b.tr_matvec(p)))
    }

    /// `M⁻¹ r` with the pressure mass matrix.
    pub fn mass_solve(&self, r: &[T]) -> Vec<T> {
        let d0 = self.system.dofs.interior_dim;
        let mut out = Vec::with_capacity(r.len());
        for (t, lu) in self.mass.iter().enumerate() {
            out.extend(lu.solve(&r[t * d0..(t + 1) * d0]));
        }
        out
    }

    pub fn pressure_mass_apply(&self, p: &[T]) -> Vec<T> {
        let d0 = self.system.dofs.interior_dim;
        let mut out = Vec::with_capacity(p.len());
        for (t, m) in self.system.pressure_mass.iter().enumerate() {
            out.extend(m.matvec(&p[t * d0..(t + 1) * d0]));
        }
        out
    }

    /// Removes the constant component so that `c·p = 0`.
    pub fn project_mean_zero(&self, p: &mut [T]) {
        let s = dot(&self.c, p) / self.c_ones;
        for (pi, oi) in p.iter_mut().zip(&self.ones) {
            *pi -= s * *oi;
        }
    }

    pub fn constraint(&self) -> &[T] {
        &self.c
    }

    /// One block solve of `K x = r` (no refinement).
    pub fn solve_once(&self, r: &[T]) -> Result<(Vec<T>, InnerStats)> {
        let dofs = &self.system.dofs;
        let nu = dofs.velocity_unknowns();
        let pr = dofs.pressure_range();
        let (rf, rg, rl) = (&r[..nu], &r[pr.clone()], r[dofs.multiplier_index()]);

        // c·p = rl through a multiple of the constant pressure.
        let shift = rl / self.c_ones;
        let p0: Vec<T> = self.ones.iter().map(|&o| o * shift).collect();
        let bt = self.b.tr_matvec(&p0);
        let rf: Vec<T> = rf.iter().zip(&bt).map(|(a, b)| *a - *b).collect();

        // S p̃ = B A⁻¹ rf − rg + cᵀλ, with λ making the right side
        // orthogonal to ker S = span{1}.
        let af = self.a.solve(&rf);
        let mut h: Vec<T> = self.b.matvec(&af).iter().zip(rg).map(|(a, b)| *a - *b).collect();
        let lambda = -dot(&self.ones, &h) / self.c_ones;
        for (hi, ci) in h.iter_mut().zip(&self.c) {
            *hi += lambda * *ci;
        }
        let (pt, iterations) = self.pcg(&h)?;

        let bt = self.b.tr_matvec(&pt);
        let rhs: Vec<T> = rf.iter().zip(&bt).map(|(a, b)| *a - *b).collect();
        let u = self.a.solve(&rhs);
        let mut x = u;
        x.extend(p0.iter().zip(&pt).map(|(a, b)| *a + *b));
        x.push(lambda);
        Ok((x, InnerStats { iterations }))
    }

    fn pcg(&self, h: &[T]) -> Result<(Vec<T>, usize)> {
        let n = h.len();
        let mut x = vec![T::zero(); n];
        let h_norm = norm(h);
        if h_norm == T::zero() {
            return Ok((x, 0));
        }
        let mut r = h.to_vec();
        let mut z = self.mass_solve(&r);
        self.project_mean_zero(&mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=self.max_iterations {
            let sp = self.schur_apply(&p);
            let psp = dot(&p, &sp);
            if !(psp > T::zero()) {
                return Err(Error::Breakdown { pivot: it, value: psp.to_f64_lossy() });
            }
            let alpha = rz / psp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * sp[i];
            }
            if norm(&r) <= self.inner_tol * h_norm {
                self.project_mean_zero(&mut x);
                return Ok((x, it));
            }
            z = self.mass_solve(&r);
            self.project_mean_zero(&mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NotConverged { iterations: self.max_iterations, residual: (norm(&r) / h_norm).to_f64_lossy() })
    }

    /// Solves `K x = b` to the system tolerance by iterative refinement.
    pub fn solve_rhs(&self, b: &[T]) -> Result<(Vec<T>, SolveDiagnostics)> {
        let sys = self.system;
        let b_norm = norm(b);
        let mut x = vec![T::zero(); b.len()];
        let mut iterations = 0;
        let mut residual = T::zero();
        for step in 0..=MAX_REFINEMENTS {
            let kx = sys.matrix.matvec(&x);
            let r: Vec<T> = b.iter().zip(&kx).map(|(a, c)| *a - *c).collect();
            let rn = norm(&r);
            residual = if b_norm == T::zero() { rn } else { rn / b_norm };
            if residual <= sys.tol {
                return Ok((
                    x,
                    SolveDiagnostics {
                        method: "sparse LDLᵀ(A) + mass-preconditioned projected CG on B A⁻¹ Bᵀ".into(),
                        unknowns: b.len(),
                        factor_nnz: self.factor_nnz(),
                        krylov_iterations: iterations,
                        refinement_steps: step,
                        residual: residual.to_f64_lossy(),
                    },
                ));
            }
            if step == MAX_REFINEMENTS {
                break;
            }
            let (dx, stats) = self.solve_once(&r)?;
            iterations += stats.iterations;
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        Err(Error::NotConverged { iterations, residual: residual.to_f64_lossy() })
    }

    /// Splits a solution vector into velocity (with lifted boundary
    /// traces), pressure, and multiplier.
    pub fn unpack(&self, x: &[T]) -> (WeakFunctionVector<T>, PressureVector<T>, T) {
        let dofs = &self.system.dofs;
        let mut u = self.system.lifting.clone();
        u.interior.copy_from_slice(&x[..dofs.velocity_interior]);
        let ne = u.traces.len() / (2 * dofs.trace_dim);
        for e in 0..ne {
            for c in 0..2 {
                for r in 0..dofs.trace_dim {
                    if let Some(g) = dofs.velocity_edge_index(e, c, r) {
                        let i = u.trace_index(e, c, r);
                        u.traces[i] = x[g];
                    }
                }
            }
        }
        let p = PressureVector { k: dofs.k, coeffs: x[dofs.pressure_range()].to_vec(), mean_zero: true };
        (u, p, x[dofs.multiplier_index()])
    }
}

/// Solves the assembled system.
pub fn solve<T: Scalar>(system: &SaddleSystem<T>) -> Result<Solution<T>> {
    let solver = SaddleSolver::new(system)?;
    let (x, diagnostics) = solver.solve_rhs(&system.rhs)?;
    let (velocity, pressure, multiplier) = solver.unpack(&x);
    Ok(Solution { velocity, pressure, multiplier, diagnostics })
}
