//! Error norms, convergence rates, and the discrete inf-sup constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::DMat;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::polyquad::{edge_quadrature, error_exactness, tri_quadrature, EdgeBasis, MAX_TRI_EXACTNESS};
use crate::scalar::{dot, Point, Scalar};
use crate::system::{Discretization, Homogeneous, SaddleSolver, SaddleSystem, Solution};
use crate::weakops::{project_interior, PressureVector, WeakFunctionVector};

/// Errors of one refinement level. `h` is the grid pitch `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    pub n: usize,
    pub h: T,
    pub energy: T,
    pub pressure: T,
    pub superclose: T,
}

/// Observed orders between consecutive levels; `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates<T> {
    pub energy: Option<T>,
    pub pressure: Option<T>,
    pub superclose: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord<T> {
    pub levels: Vec<ErrorReport<T>>,
    /// `rates[j]` compares level `j` with level `j + 1`.
    pub rates: Vec<Rates<T>>,
}

/// `ln(e_h / e_{h/2}) / ln 2`, absent unless both errors are positive.
pub fn rate<T: Scalar>(e_h: T, e_half: T) -> Option<T> {
    (e_h > T::zero() && e_half > T::zero()).then(|| (e_h / e_half).ln() / T::LN_2())
}

pub fn convergence_rates<T: Scalar>(levels: Vec<ErrorReport<T>>) -> ConvergenceRecord<T> {
    let rates = levels
        .windows(2)
        .map(|w| Rates {
            energy: rate(w[0].energy, w[1].energy),
            pressure: rate(w[0].pressure, w[1].pressure),
            superclose: rate(w[0].superclose, w[1].superclose),
        })
        .collect();
    ConvergenceRecord { levels, rates }
}

fn error_rule<T: Scalar>(k: usize) -> Result<crate::polyquad::TriangleRule<T>> {
    tri_quadrature(error_exactness(k).min(MAX_TRI_EXACTNESS))
}

/// Element contributions reduced in element order.
fn element_sum<T: Scalar>(nt: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<T> {
    let parts = (0..nt).into_par_iter().map(f).collect::<Result<Vec<T>>>()?;
    Ok(parts.into_iter().fold(T::zero(), |a, b| a + b))
}

/// `(Σ_K ∫_K |∇u − ∇_w u_h|²)^{1/2}`.
pub fn energy_error<T: Scalar>(
    disc: &Discretization<T>,
    u_h: &WeakFunctionVector<T>,
    grad_u: impl Fn(Point<T>) -> [[T; 2]; 2] + Sync + Send,
) -> Result<T> {
    let rule = error_rule::<T>(disc.k)?;
    let sum = element_sum(disc.mesh.num_triangles(), |t| {
        let ops = &disc.ops[t];
        let d1 = ops.gradient_dim();
        let g: Vec<Vec<T>> = (0..2).map(|c| ops.weak_gradient(&u_h.local(&disc.mesh, t, c))).collect();
        let jac = T::cst(2.0) * ops.triangle.area();
        let mut acc = T::zero();
        for (r, w) in rule.iter() {
            let p = ops.triangle.map(*r);
            let phi = ops.gradient_basis.values(p);
            let exact = grad_u(p);
            for c in 0..2 {
                let gx = dot(&g[c][..d1], &phi);
                let gy = dot(&g[c][d1..], &phi);
                let (ex, ey) = (exact[c][0] - gx, exact[c][1] - gy);
                acc += w * jac * (ex * ex + ey * ey);
            }
        }
        Ok(acc)
    })?;
    Ok(sum.sqrt())
}

/// `‖p − p_h‖`.
pub fn pressure_error<T: Scalar>(
    disc: &Discretization<T>,
    p_h: &PressureVector<T>,
    p: impl Fn(Point<T>) -> T + Sync + Send,
) -> Result<T> {
    let rule = error_rule::<T>(disc.k)?;
    let sum = element_sum(disc.mesh.num_triangles(), |t| {
        let ops = &disc.ops[t];
        let jac = T::cst(2.0) * ops.triangle.area();
        let c = p_h.element(t);
        Ok(rule.iter().fold(T::zero(), |acc, (r, w)| {
            let x = ops.triangle.map(*r);
            let e = p(x) - ops.interior_basis.evaluate(c, x);
            acc + w * jac * e * e
        }))
    })?;
    Ok(sum.sqrt())
}

/// `‖P_h^k u − u_h⁰‖`.
pub fn superclose_error<T: Scalar>(
    disc: &Discretization<T>,
    u_h: &WeakFunctionVector<T>,
    u: impl Fn(Point<T>) -> [T; 2] + Sync + Send,
) -> Result<T> {
    let sum = element_sum(disc.mesh.num_triangles(), |t| {
        let ops = &disc.ops[t];
        let mut acc = T::zero();
        for c in 0..2 {
            let proj = project_interior(|p| u(p)[c], &ops.triangle, disc.k)?;
            let d: Vec<T> = proj.iter().zip(u_h.interior_coeffs(t, c)).map(|(a, b)| *a - *b).collect();
            acc += dot(&d, &ops.mass_interior.matvec(&d));
        }
        Ok(acc)
    })?;
    Ok(sum.sqrt())
}

/// `‖∇_w v‖_h`, summed over components.
pub fn weak_gradient_norm<T: Scalar>(disc: &Discretization<T>, v: &WeakFunctionVector<T>) -> T {
    let parts: Vec<T> = (0..disc.mesh.num_triangles())
        .into_par_iter()
        .map(|t| (0..v.components).map(|c| disc.ops[t].weak_gradient_norm_sq(&v.local(&disc.mesh, t, c))).sum())
        .collect();
    parts.into_iter().fold(T::zero(), |a, b| a + b).sqrt()
}

/// `‖v⁰‖`, summed over components.
pub fn interior_l2_norm<T: Scalar>(disc: &Discretization<T>, v: &WeakFunctionVector<T>) -> T {
    let mut s = T::zero();
    for t in 0..disc.mesh.num_triangles() {
        for c in 0..v.components {
            let x = v.interior_coeffs(t, c);
            s += dot(x, &disc.ops[t].mass_interior.matvec(x));
        }
    }
    s.sqrt()
}

/// `‖q_h‖`.
pub fn pressure_norm<T: Scalar>(disc: &Discretization<T>, q: &PressureVector<T>) -> T {
    let mut s = T::zero();
    for t in 0..disc.mesh.num_triangles() {
        let x = q.element(t);
        s += dot(x, &disc.ops[t].mass_interior.matvec(x));
    }
    s.sqrt()
}

/// `‖v‖_{1,h} = (Σ_K ‖∇v⁰‖²_K + h_K⁻¹ ‖v⁰ − v^b‖²_∂K)^{1/2}`, the trace
/// difference taken with each element's own interior polynomial.
pub fn discrete_h1_norm<T: Scalar>(disc: &Discretization<T>, v: &WeakFunctionVector<T>) -> Result<T> {
    let k = disc.k;
    let rule = tri_quadrature::<T>((2 * k).max(1))?;
    let edge_rule = edge_quadrature::<T>(k + 3)?;
    let edge_basis = EdgeBasis::new(k + 1);
    let sum = element_sum(disc.mesh.num_triangles(), |t| {
        let ops = &disc.ops[t];
        let tri = &ops.triangle;
        let jac = T::cst(2.0) * tri.area();
        let hk = tri.diameter();
        let mut acc = T::zero();
        for c in 0..v.components {
            let v0 = v.interior_coeffs(t, c);
            if k > 0 {
                for (r, w) in rule.iter() {
                    let g = ops.interior_basis.evaluate_gradient(v0, tri.map(*r));
                    acc += w * jac * (g[0] * g[0] + g[1] * g[1]);
                }
            }
            for (j, &e) in ops.edges.iter().enumerate() {
                let seg = &ops.segments[j];
                let vb = v.trace_coeffs(e, c);
                let len = seg.length();
                for (&s, w) in edge_rule.iter() {
                    let d = ops.interior_basis.evaluate(v0, seg.point(s)) - edge_basis.evaluate(vb, s);
                    acc += w * len * d * d / hk;
                }
            }
        }
        Ok(acc)
    })?;
    Ok(sum.sqrt())
}

/// `‖f‖` of a vector field by the error quadrature.
pub fn vector_l2_norm<T: Scalar>(mesh: &Mesh<T>, k: usize, f: impl Fn(Point<T>) -> [T; 2] + Sync + Send) -> Result<T> {
    let rule = error_rule::<T>(k)?;
    let sum = element_sum(mesh.num_triangles(), |t| {
        let tri = mesh.triangle(t);
        let jac = T::cst(2.0) * tri.area();
        Ok(rule.iter().fold(T::zero(), |acc, (r, w)| {
            let v = f(tri.map(*r));
            acc + w * jac * (v[0] * v[0] + v[1] * v[1])
        }))
    })?;
    Ok(sum.sqrt())
}

/// `(‖∇_w u_h‖_h + ‖p_h‖) / ‖f‖`.
pub fn stability_ratio<T: Scalar>(
    disc: &Discretization<T>,
    solution: &Solution<T>,
    f: impl Fn(Point<T>) -> [T; 2] + Sync + Send,
) -> Result<T> {
    let fnorm = vector_l2_norm(&disc.mesh, disc.k, f)?;
    if !(fnorm > T::zero()) {
        return Err(Error::InvalidArgument("stability ratio needs a nonzero force".into()));
    }
    Ok((weak_gradient_norm(disc, &solution.velocity) + pressure_norm(disc, &solution.pressure)) / fnorm)
}

/// Discrete inf-sup constant and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfSup<T> {
    pub beta: T,
    /// Largest eigenvalue of `M⁻¹ S` seen, for context.
    pub lambda_max: T,
    pub lanczos_steps: usize,
    pub ritz_residual: T,
}

const LANCZOS_SEED: u64 = 0x05ee_d1b5;

/// `β_h` on `mesh`: square root of the smallest eigenvalue of `B A⁻¹ Bᵀ`
/// relative to the pressure mass matrix on mean-zero pressures.
pub fn estimate_infsup<T: Scalar>(mesh: &Mesh<T>, k: usize) -> Result<InfSup<T>> {
    let disc = Discretization::new(mesh.clone(), k)?;
    let sys = disc.assemble(&Homogeneous(|_: Point<T>| [T::zero(); 2]))?;
    infsup_from_system(&sys)
}

/// `β_h` from an assembled system (uses only its `A`, `B`, `c`, and mass).
pub fn infsup_from_system<T: Scalar>(sys: &SaddleSystem<T>) -> Result<InfSup<T>> {
    let solver = SaddleSolver::new(sys)?;
    let n = sys.dofs.pressure;
    if n < 2 {
        return Err(Error::Eigensolve("no mean-zero pressures".into()));
    }
    let max_steps = (n - 1).min(600);
    let m_dot = |a: &[T], b: &[T]| dot(a, &solver.pressure_mass_apply(b));

    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v: Vec<T> = (0..n).map(|_| T::cst(StandardNormal.sample(&mut rng))).collect();
    solver.project_mean_zero(&mut v);
    let nv = m_dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<T>> = vec![v];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let tol = T::cst(1e-8).max(T::epsilon().sqrt());
    let mut last = None;
    for j in 0..max_steps {
        let mut w = solver.mass_solve(&solver.schur_apply(&basis[j]));
        solver.project_mean_zero(&mut w);
        alpha.push(m_dot(&w, &basis[j]));
        for _ in 0..2 {
            for q in &basis {
                let s = m_dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= s * *qi);
            }
            solver.project_mean_zero(&mut w);
        }
        let b = m_dot(&w, &w).sqrt();
        let steps = j + 1;
        let exhausted = steps == max_steps || !(b > T::epsilon() * alpha[0].abs());
        if steps % 10 == 0 || exhausted {
            let (theta, y) = tridiagonal_eigen(&alpha, &beta)?;
            let res = (b * y[(steps - 1, 0)]).abs();
            let lmax = *theta.last().unwrap();
            let est = InfSup { beta: theta[0].max(T::zero()).sqrt(), lambda_max: lmax, lanczos_steps: steps, ritz_residual: res };
            if res <= tol * lmax || exhausted {
                if !(theta[0] > T::zero()) {
                    return Err(Error::Eigensolve(format!("nonpositive Ritz value {:e}", theta[0])));
                }
                return Ok(est);
            }
            last = Some(est);
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    Err(Error::Eigensolve(format!("Lanczos did not converge: {last:?}")))
}

fn tridiagonal_eigen<T: Scalar>(alpha: &[T], beta: &[T]) -> Result<(Vec<T>, DMat<T>)> {
    let m = alpha.len();
    let t = DMat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            T::zero()
        }
    });
    t.sym_eigen()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_and_quartering_rates() {
        assert!((rate(1.0, 0.5).unwrap() - 1.0f64).abs() < 1e-15);
        assert!((rate(1.0, 0.25).unwrap() - 2.0f64).abs() < 1e-15);
        assert_eq!(rate(0.0, 0.5), None);
        assert_eq!(rate(1.0f64, -1.0), None);
    }

    #[test]
    fn single_level_has_no_rates() {
        let r = convergence_rates(vec![ErrorReport { n: 4, h: 0.25, energy: 1.0, pressure: 1.0, superclose: 1.0 }]);
        assert!(r.rates.is_empty());
    }
}
