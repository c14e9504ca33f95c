use crate::dense::{DMat, Lu};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Triangle};
use crate::polyquad::{
    assembly_edge_points, assembly_exactness, edge_quadrature, tri_quadrature, EdgeBasis, TriBasis,
    MAX_EDGE_POINTS, MAX_TRI_EXACTNESS,
};
use crate::scalar::{Point, Scalar};

/// Element-local H(div) projection onto `[P_{k+1}(K)]²`.
///
/// The moments matched are: normal moments against `P_{k+1}(e)` on every
/// edge; for `k ≥ 1` also gradient moments against the non-constant part of
/// `P_k(K)` and curl moments against the bubble space `λ₁λ₂λ₃ P_{k−1}(K)`.
/// For `k = 0` only the six edge moments remain.
#[derive(Debug, Clone)]
pub struct PiProjector<T> {
    pub k: usize,
    moments: Moments<T>,
    lu: Lu<T>,
}

#[derive(Debug, Clone)]
struct Moments<T> {
    k: usize,
    triangle: Triangle<T>,
    normals: [Point<T>; 3],
    basis: TriBasis<T>,
    moments_basis: TriBasis<T>,
    bubble_basis: Option<TriBasis<T>>,
}

impl<T: Scalar> PiProjector<T> {
    pub fn new(mesh: &Mesh<T>, t: usize, k: usize) -> Result<Self> {
        let mut normals = [[T::zero(); 2]; 3];
        for (j, n) in normals.iter_mut().enumerate() {
            *n = mesh.outward_normal(t, j)?;
        }
        Self::from_geometry(mesh.triangle(t), normals, k)
    }

    pub fn from_geometry(triangle: Triangle<T>, normals: [Point<T>; 3], k: usize) -> Result<Self> {
        if k > 1 {
            return Err(Error::Unsupported(format!("π_h projection for k = {k} (supported: 0, 1)")));
        }
        let basis = TriBasis::new(k + 1, &triangle);
        let moments_basis = TriBasis::new(k, &triangle);
        let bubble_basis = (k >= 1).then(|| TriBasis::new(k - 1, &triangle));
        let moments = Moments { k, triangle, normals, basis, moments_basis, bubble_basis };
        let d1 = moments.basis.dim();
        let n = 2 * d1;
        let rule = tri_quadrature::<T>(assembly_exactness(k))?;
        let edge_rule = edge_quadrature::<T>(assembly_edge_points(k))?;
        let mut matrix = DMat::zeros(n, n);
        for col in 0..n {
            let (c, i) = (col / d1, col % d1);
            let field = |p: Point<T>| {
                let mut v = [T::zero(); 2];
                v[c] = moments.basis.values(p)[i];
                v
            };
            let row = moments.evaluate(&field, &rule, &edge_rule);
            if row.len() != n {
                return Err(Error::Singular(format!("π_h moment count {} != {}", row.len(), n)));
            }
            for (r, v) in row.into_iter().enumerate() {
                matrix[(r, col)] = v;
            }
        }
        let lu = Lu::new(matrix, "π_h moment system")?;
        Ok(Self { k, moments, lu })
    }

    /// Coefficients of `π_h u` in `[P_{k+1}]²`, first component first.
    pub fn apply(&self, u: impl Fn(Point<T>) -> [T; 2]) -> Result<Vec<T>> {
        let rule = tri_quadrature::<T>(MAX_TRI_EXACTNESS)?;
        let edge_rule = edge_quadrature::<T>(MAX_EDGE_POINTS)?;
        let rhs = self.moments.evaluate(&u, &rule, &edge_rule);
        Ok(self.lu.solve(&rhs))
    }

    pub fn basis(&self) -> &TriBasis<T> {
        &self.moments.basis
    }

    /// Evaluates a coefficient vector returned by [`PiProjector::apply`].
    pub fn evaluate(&self, coeffs: &[T], p: Point<T>) -> [T; 2] {
        let b = self.basis();
        let d1 = b.dim();
        [b.evaluate(&coeffs[..d1], p), b.evaluate(&coeffs[d1..], p)]
    }

    pub fn divergence(&self, coeffs: &[T], p: Point<T>) -> T {
        let b = self.basis();
        let d1 = b.dim();
        b.evaluate_gradient(&coeffs[..d1], p)[0] + b.evaluate_gradient(&coeffs[d1..], p)[1]
    }
}

impl<T: Scalar> Moments<T> {
    /// Every defining moment of the field `u`.
    fn evaluate(
        &self,
        u: &impl Fn(Point<T>) -> [T; 2],
        rule: &crate::polyquad::TriangleRule<T>,
        edge_rule: &crate::polyquad::EdgeRule<T>,
    ) -> Vec<T> {
        let k = self.k;
        let mut out = Vec::new();
        let jac = T::cst(2.0) * self.triangle.area();
        if k >= 1 {
            // (u, ∇q)_K, q ∈ P_k without the constant
            let nq = self.moments_basis.dim();
            let mut acc = vec![T::zero(); nq - 1];
            for (r, w) in rule.iter() {
                let p = self.triangle.map(*r);
                let uv = u(p);
                let g = self.moments_basis.gradients(p);
                for (a, gm) in acc.iter_mut().zip(&g[1..]) {
                    *a += w * jac * (uv[0] * gm[0] + uv[1] * gm[1]);
                }
            }
            out.extend(acc);
        }
        let edge_basis = EdgeBasis::new(k + 1);
        for j in 0..3 {
            let seg = self.triangle.edge(j);
            let len = seg.length();
            let n = self.normals[j];
            let mut acc = vec![T::zero(); k + 2];
            for (&s, w) in edge_rule.iter() {
                let uv = u(seg.point(s));
                let un = uv[0] * n[0] + uv[1] * n[1];
                for (a, l) in acc.iter_mut().zip(edge_basis.values(s)) {
                    *a += w * len * un * l;
                }
            }
            out.extend(acc);
        }
        if let Some(bb) = &self.bubble_basis {
            // (u, curl(bψ))_K with b = λ₁λ₂λ₃, curl φ = (∂_y φ, −∂_x φ)
            let grads = self.triangle.barycentric_gradients();
            let mut acc = vec![T::zero(); bb.dim()];
            for (r, w) in rule.iter() {
                let p = self.triangle.map(*r);
                let uv = u(p);
                let l = self.triangle.barycentric(p);
                let b = l[0] * l[1] * l[2];
                let db = [
                    l[1] * l[2] * grads[0][0] + l[0] * l[2] * grads[1][0] + l[0] * l[1] * grads[2][0],
                    l[1] * l[2] * grads[0][1] + l[0] * l[2] * grads[1][1] + l[0] * l[1] * grads[2][1],
                ];
                let psi = bb.values(p);
                let dpsi = bb.gradients(p);
                for m in 0..bb.dim() {
                    let gx = db[0] * psi[m] + b * dpsi[m][0];
                    let gy = db[1] * psi[m] + b * dpsi[m][1];
                    acc[m] += w * jac * (uv[0] * gy - uv[1] * gx);
                }
            }
            out.extend(acc);
        }
        out
    }
}

/// `π_h u` on element `t`.
pub fn project_pi<T: Scalar>(u: impl Fn(Point<T>) -> [T; 2], mesh: &Mesh<T>, t: usize, k: usize) -> Result<Vec<T>> {
    PiProjector::new(mesh, t, k)?.apply(u)
}
