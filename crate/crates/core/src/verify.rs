//! Executable checks of the operator identities the method rests on.
//!
//! Each check returns the measured worst case next to its threshold, so the
//! command-line `verify` report shows how much headroom remains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analysis::{discrete_h1_norm, estimate_infsup, interior_l2_norm, weak_gradient_norm};
use crate::dense::numerical_rank;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::polyquad::{tri_quadrature, TriBasis, MAX_TRI_EXACTNESS};
use crate::scalar::{dot, Point};
use crate::system::Discretization;
use crate::weakops::{project_interior, project_qh_vector, ElementOperators, PiProjector, WeakFunctionVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Self { name: name.into(), passed: measured <= threshold, measured, threshold, detail }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {}: {:.3e} (limit {:.1e}) {}", self.name, self.measured, self.threshold, self.detail)
    }
}

const SEED: u64 = 20_240_917;

/// Element shapes the local checks sweep: both orientations of the
/// structured mesh plus two irregular triangles.
pub fn sample_elements() -> Vec<(Mesh<f64>, usize)> {
    let grid = Mesh::build_structured(2).expect("n > 0");
    vec![
        (grid.clone(), 0),
        (grid, 1),
        (Mesh::from_triangles(vec![[0.1, 0.2], [0.9, 0.35], [0.3, 0.8]], vec![[0, 1, 2]]), 0),
        (Mesh::from_triangles(vec![[0.0, 0.0], [2.0, 0.3], [0.5, 0.6]], vec![[0, 1, 2]]), 0),
    ]
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// A smooth random field mixing polynomial and trigonometric terms.
#[derive(Debug, Clone, Copy)]
pub struct SmoothField {
    a: [[f64; 6]; 2],
    freq: [[f64; 2]; 2],
}

impl SmoothField {
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut a = [[0.0; 6]; 2];
        a.iter_mut().flatten().for_each(|v| *v = normal(rng));
        let mut freq = [[0.0; 2]; 2];
        freq.iter_mut().flatten().for_each(|v| *v = rng.random_range(-2.0..2.0));
        Self { a, freq }
    }

    pub fn value(&self, [x, y]: Point<f64>) -> [f64; 2] {
        let f = |c: usize| {
            let a = &self.a[c];
            let [fx, fy] = self.freq[c];
            a[0] + a[1] * x + a[2] * y * y + a[3] * x * x * y + a[4] * (fx * x + fy * y).sin() + a[5] * (x * y).cos()
        };
        [f(0), f(1)]
    }

    /// `[[∂x u₁, ∂y u₁], [∂x u₂, ∂y u₂]]`.
    pub fn gradient(&self, [x, y]: Point<f64>) -> [[f64; 2]; 2] {
        let g = |c: usize| {
            let a = &self.a[c];
            let [fx, fy] = self.freq[c];
            let cs = (fx * x + fy * y).cos();
            let sn = (x * y).sin();
            [
                a[1] + 2.0 * a[3] * x * y + a[4] * fx * cs - a[5] * y * sn,
                2.0 * a[2] * y + a[3] * x * x + a[4] * fy * cs - a[5] * x * sn,
            ]
        };
        [g(0), g(1)]
    }
}

/// The weak gradient vanishes on constants and only on constants. The
/// constant's image is measured in `L²(K)`, which does not depend on the
/// conditioning of the monomial coefficients.
pub fn check_kernel() -> Result<Check> {
    let mut worst_const = 0.0f64;
    let mut rank_failures = 0;
    let mut cases = 0;
    for k in 0..=2 {
        for (mesh, t) in sample_elements() {
            let ops = ElementOperators::new(&mesh, t, k)?;
            if k <= 1 {
                worst_const = worst_const.max(ops.weak_gradient_norm_sq(&ops.constant_dofs(1.0)).sqrt());
            }
            if numerical_rank(&ops.grad, 1e-10)? != ops.local_dofs() - 1 {
                rank_failures += 1;
            }
            cases += 1;
        }
    }
    let mut c = Check::at_most(
        "weak gradient kernel is exactly the constants",
        worst_const,
        1e-12,
        format!("{cases} element/degree cases (k ≤ 2 rank, k ≤ 1 constants), {rank_failures} rank mismatches"),
    );
    c.passed &= rank_failures == 0;
    Ok(c)
}

/// `‖div_w v‖_K ≤ √2 ‖∇_w v‖_K` on random local vector weak functions.
pub fn check_divergence_bound(samples: usize) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut total = 0;
    for k in 0..=1 {
        for (mesh, t) in sample_elements() {
            let ops = ElementOperators::new(&mesh, t, k)?;
            let nl = ops.local_dofs();
            for _ in 0..samples {
                let v: Vec<f64> = (0..2 * nl).map(|_| normal(&mut rng)).collect();
                let div = ops.weak_divergence_norm_sq(&v).sqrt();
                let grad = (ops.weak_gradient_norm_sq(&v[..nl]) + ops.weak_gradient_norm_sq(&v[nl..])).sqrt();
                let excess = div - 2f64.sqrt() * grad;
                worst = worst.max(excess);
                if excess > 1e-12 {
                    violations += 1;
                }
                total += 1;
            }
        }
    }
    let mut c = Check::at_most(
        "‖div_w v‖ ≤ √2 ‖∇_w v‖",
        worst,
        1e-12,
        format!("{total} random weak functions, {violations} violations"),
    );
    c.passed &= violations == 0;
    Ok(c)
}

/// `∇_w Q_h u = P^{k+1} ∇u` and `div_w Q_h u = P^{k+1} div u`.
pub fn check_commuting(fields: usize) -> Result<[Check; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst_grad = 0.0f64;
    let mut worst_div = 0.0f64;
    for k in 0..=1 {
        let mesh = Mesh::build_structured(3)?;
        for _ in 0..fields {
            let u = SmoothField::random(&mut rng);
            let qh = project_qh_vector(&mesh, k, |p| u.value(p))?;
            for t in 0..mesh.num_triangles() {
                let ops = ElementOperators::new(&mesh, t, k)?;
                let d1 = ops.gradient_dim();
                let m = &ops.mass_gradient;
                let l2 = |d: &[f64]| dot(d, &m.matvec(d)).sqrt();
                for c in 0..2 {
                    let g = ops.weak_gradient(&qh.local(&mesh, t, c));
                    for dir in 0..2 {
                        let exact = project_interior(|p| u.gradient(p)[c][dir], &ops.triangle, k + 1)?;
                        let d: Vec<f64> = g[dir * d1..(dir + 1) * d1].iter().zip(&exact).map(|(a, b)| a - b).collect();
                        worst_grad = worst_grad.max(l2(&d));
                    }
                }
                let dw = ops.weak_divergence(&qh.local_vector(&mesh, t));
                let exact = project_interior(
                    |p| {
                        let g = u.gradient(p);
                        g[0][0] + g[1][1]
                    },
                    &ops.triangle,
                    k + 1,
                )?;
                let d: Vec<f64> = dw.iter().zip(&exact).map(|(a, b)| a - b).collect();
                worst_div = worst_div.max(l2(&d));
            }
        }
    }
    let detail = format!("{fields} random fields per degree, k = 0, 1, n = 3");
    Ok([
        Check::at_most("∇_w Q_h u = P^{k+1} ∇u", worst_grad, 1e-10, detail.clone()),
        Check::at_most("div_w Q_h u = P^{k+1} div u", worst_div, 1e-10, detail),
    ])
}

/// `π_h` reproduces `[P_{k+1}]²` and preserves divergence moments against `P_k`.
pub fn check_pi(samples: usize) -> Result<[Check; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst_repro = 0.0f64;
    let mut worst_moment = 0.0f64;
    for k in 0..=1 {
        for (mesh, t) in sample_elements() {
            let pi = PiProjector::new(&mesh, t, k)?;
            let tri = mesh.triangle(t);
            let poly = TriBasis::new(k + 1, &tri);
            for _ in 0..samples {
                let c: Vec<f64> = (0..2 * poly.dim()).map(|_| normal(&mut rng)).collect();
                let d1 = poly.dim();
                let u = |p: Point<f64>| [poly.evaluate(&c[..d1], p), poly.evaluate(&c[d1..], p)];
                let coeffs = pi.apply(u)?;
                for _ in 0..5 {
                    let (a, b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                    let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
                    let p = tri.map([a, b]);
                    let (x, e) = (pi.evaluate(&coeffs, p), u(p));
                    worst_repro = worst_repro.max((x[0] - e[0]).abs().max((x[1] - e[1]).abs()));
                }
            }

            let q = TriBasis::new(k, &tri);
            let rule = tri_quadrature::<f64>(MAX_TRI_EXACTNESS)?;
            let jac = 2.0 * tri.area();
            for _ in 0..samples {
                let u = SmoothField::random(&mut rng);
                let coeffs = pi.apply(|p| u.value(p))?;
                let mut moments = vec![0.0; q.dim()];
                for (r, w) in rule.iter() {
                    let p = tri.map(*r);
                    let g = u.gradient(p);
                    let diff = g[0][0] + g[1][1] - pi.divergence(&coeffs, p);
                    for (m, v) in moments.iter_mut().zip(q.values(p)) {
                        *m += w * jac * diff * v;
                    }
                }
                worst_moment = worst_moment.max(moments.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
    }
    let detail = format!("{samples} samples per element shape, k = 0, 1");
    Ok([
        Check::at_most("π_h reproduces [P_{k+1}]²", worst_repro, 1e-11, detail.clone()),
        Check::at_most("(div(u − π_h u), q) = 0 for q ∈ P_k", worst_moment, 1e-11, detail),
    ])
}

/// Random weak functions in `S_h⁰` with two components.
pub fn random_homogeneous(mesh: &Mesh<f64>, k: usize, rng: &mut impl Rng) -> WeakFunctionVector<f64> {
    let mut v = WeakFunctionVector::zeros(mesh, k, 2);
    v.interior.iter_mut().for_each(|x| *x = normal(rng));
    v.traces.iter_mut().for_each(|x| *x = normal(rng));
    v.clear_boundary(mesh);
    v
}

/// Monitored constants of the norm equivalence `‖∇_w v‖ ~ ‖v‖_{1,h}` and the
/// embedding `‖v⁰‖ ≤ C ‖∇_w v‖` over two refinements.
pub fn check_norm_equivalence() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut embed = Vec::new();
    for k in 0..=1 {
        let mut per_level = Vec::new();
        for n in [2, 4, 8] {
            let disc = Discretization::new(Mesh::build_structured(n)?, k)?;
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let v = random_homogeneous(&disc.mesh, k, &mut rng);
                let g = weak_gradient_norm(&disc, &v);
                let h1 = discrete_h1_norm(&disc, &v)?;
                lo = lo.min(g / h1);
                hi = hi.max(g / h1);
                worst = worst.max(interior_l2_norm(&disc, &v) / g);
            }
            per_level.push(worst);
        }
        embed.push(per_level);
    }
    // Random functions are rough, so the embedding ratio falls like h; growth
    // would signal a missing boundary condition.
    let grows = embed.iter().any(|l| l.windows(2).any(|w| w[1] > 1.5 * w[0]));
    let ok = lo > 0.0 && hi.is_finite() && !grows;
    Ok(Check {
        name: "‖∇_w v‖ / ‖v‖_{1,h} bounded above and below".into(),
        passed: ok,
        measured: lo,
        threshold: 0.0,
        detail: format!("ratio in [{lo:.3}, {hi:.3}]; ‖v⁰‖/‖∇_w v‖ per level {embed:.3?}"),
    })
}

/// Inf-sup constant on small meshes.
pub fn check_infsup() -> Result<Check> {
    let mut betas = Vec::new();
    for k in 0..=1 {
        for n in [2, 4] {
            betas.push(estimate_infsup(&Mesh::<f64>::build_structured(n)?, k)?.beta);
        }
    }
    let min = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Check {
        name: "discrete inf-sup constant is positive".into(),
        passed: min > 0.0,
        measured: min,
        threshold: 0.0,
        detail: format!("β_h = {betas:.4?} (k = 0, 1 on n = 2, 4)"),
    })
}

/// The whole suite, in a fixed order.
pub fn run_suite() -> Result<Vec<Check>> {
    let mut out = vec![check_kernel()?, check_divergence_bound(1000)?];
    out.extend(check_commuting(3)?);
    out.extend(check_pi(5)?);
    out.push(check_norm_equivalence()?);
    out.push(check_infsup()?);
    Ok(out)
}
