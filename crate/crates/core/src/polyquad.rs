//! Polynomial bases on triangles and edges, and the quadrature rules used to
//! integrate against them.
//!
//! Triangle rules are built from a collapsed Gauss–Legendre product rule and
//! then averaged over the six vertex permutations, which keeps positive
//! weights and exactness while making the rule fully symmetric.

use crate::dense::DMat;
use crate::error::{Error, Result};
use crate::mesh::{Segment, Triangle};
use crate::scalar::{Point, Scalar};

/// Highest supported triangle exactness degree.
pub const MAX_TRI_EXACTNESS: usize = 20;
/// Highest supported Gauss point count on edges.
pub const MAX_EDGE_POINTS: usize = 16;

/// Quadrature points and positive weights; `P` is `T` on the unit interval
/// and `[T; 2]` on the reference triangle (0,0),(1,0),(0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<P, T> {
    pub points: Vec<P>,
    pub weights: Vec<T>,
    pub exactness: usize,
}

pub type TriangleRule<T> = QuadratureRule<Point<T>, T>;
pub type EdgeRule<T> = QuadratureRule<T, T>;

impl<P, T: Scalar> QuadratureRule<P, T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, T)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre rule with `points` nodes on [0, 1], exact to degree
/// `2·points − 1`.
pub fn edge_quadrature<T: Scalar>(points: usize) -> Result<EdgeRule<T>> {
    if points == 0 || points > MAX_EDGE_POINTS {
        return Err(Error::Unsupported(format!(
            "edge quadrature with {points} points (supported: 1..={MAX_EDGE_POINTS})"
        )));
    }
    Ok(gauss_legendre_unit(points))
}

fn gauss_legendre_unit<T: Scalar>(n: usize) -> EdgeRule<T> {
    let half = T::cst(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Tricomi estimate.
        let mut x = T::cst((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = T::cst(2.0) / ((T::one() - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1]
        nodes[i] = (T::one() - x) * half;
        nodes[n - 1 - i] = (T::one() + x) * half;
        weights[i] = w * half;
        weights[n - 1 - i] = w * half;
    }
    QuadratureRule { points: nodes, weights, exactness: 2 * n - 1 }
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x);
    if n == 0 {
        return (T::one(), T::zero());
    }
    for j in 2..=n {
        let jf = T::of_usize(j);
        let p2 = ((T::cst(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of_usize(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Fully symmetric rule on the reference triangle, exact for total degree
/// `≤ exactness`.
pub fn tri_quadrature<T: Scalar>(exactness: usize) -> Result<TriangleRule<T>> {
    if exactness == 0 || exactness > MAX_TRI_EXACTNESS {
        return Err(Error::Unsupported(format!(
            "triangle quadrature of exactness {exactness} (supported: 1..={MAX_TRI_EXACTNESS})"
        )));
    }
    // the collapse adds one degree in the radial direction
    let n = (exactness + 2).div_ceil(2);
    let gl = gauss_legendre_unit::<T>(n);
    let sixth = T::one() / T::cst(6.0);
    let mut points = Vec::with_capacity(6 * n * n);
    let mut weights = Vec::with_capacity(6 * n * n);
    for (&u, wu) in gl.iter() {
        for (&v, wv) in gl.iter() {
            let x = u;
            let y = v * (T::one() - u);
            let w = wu * wv * (T::one() - u) * sixth;
            let l = [T::one() - x - y, x, y];
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                points.push([l[perm[1]], l[perm[2]]]);
                weights.push(w);
            }
        }
    }
    Ok(QuadratureRule { points, weights, exactness })
}

/// Exactness degree used for assembly integrals at polynomial order `k`.
pub fn assembly_exactness(k: usize) -> usize {
    (2 * k + 4).min(MAX_TRI_EXACTNESS)
}

/// Exactness degree used for error integrals of smooth functions.
pub fn error_exactness(k: usize) -> usize {
    (2 * k + 8).min(MAX_TRI_EXACTNESS)
}

/// Gauss point count for edge assembly at polynomial order `k`.
pub fn assembly_edge_points(k: usize) -> usize {
    (k + 3).min(MAX_EDGE_POINTS)
}

/// Dimension of `P_k` in two variables.
pub const fn dim_pk(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs `(a, b)` of the monomial basis, ordered by total degree.
pub fn monomial_exponents(k: usize) -> Vec<(usize, usize)> {
    (0..=k).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect()
}

/// Monomials in scaled centered coordinates `((x−x_c)/h_K, (y−y_c)/h_K)`.
#[derive(Debug, Clone)]
pub struct TriBasis<T> {
    pub degree: usize,
    pub centroid: Point<T>,
    pub scale: T,
    exponents: Vec<(usize, usize)>,
}

impl<T: Scalar> TriBasis<T> {
    pub fn new(degree: usize, element: &Triangle<T>) -> Self {
        Self {
            degree,
            centroid: element.centroid(),
            scale: element.diameter(),
            exponents: monomial_exponents(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    fn local(&self, p: Point<T>) -> Point<T> {
        [(p[0] - self.centroid[0]) / self.scale, (p[1] - self.centroid[1]) / self.scale]
    }

    pub fn values(&self, p: Point<T>) -> Vec<T> {
        let [xi, eta] = self.local(p);
        let (px, py) = (powers(xi, self.degree), powers(eta, self.degree));
        self.exponents.iter().map(|&(a, b)| px[a] * py[b]).collect()
    }

    pub fn gradients(&self, p: Point<T>) -> Vec<Point<T>> {
        let [xi, eta] = self.local(p);
        let (px, py) = (powers(xi, self.degree), powers(eta, self.degree));
        let inv = T::one() / self.scale;
        self.exponents
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 { T::of_usize(a) * px[a - 1] * py[b] * inv } else { T::zero() };
                let dy = if b > 0 { T::of_usize(b) * px[a] * py[b - 1] * inv } else { T::zero() };
                [dx, dy]
            })
            .collect()
    }

    /// Value of the expansion with coefficients `c` at `p`.
    pub fn evaluate(&self, c: &[T], p: Point<T>) -> T {
        crate::scalar::dot(&self.values(p), c)
    }

    pub fn evaluate_gradient(&self, c: &[T], p: Point<T>) -> Point<T> {
        self.gradients(p).iter().zip(c).fold([T::zero(), T::zero()], |acc, (g, &ci)| {
            [acc[0] + g[0] * ci, acc[1] + g[1] * ci]
        })
    }
}

fn powers<T: Scalar>(x: T, n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = T::one();
    for _ in 0..=n {
        out.push(acc);
        acc *= x;
    }
    out
}

/// Legendre polynomials `L_j(2s − 1)` in the normalized arc length of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn values<T: Scalar>(&self, s: T) -> Vec<T> {
        let x = T::cst(2.0) * s - T::one();
        let mut out = Vec::with_capacity(self.degree + 1);
        out.push(T::one());
        if self.degree >= 1 {
            out.push(x);
        }
        for j in 2..=self.degree {
            let jf = T::of_usize(j);
            let v = ((T::cst(2.0) * jf - T::one()) * x * out[j - 1] - (jf - T::one()) * out[j - 2]) / jf;
            out.push(v);
        }
        out
    }

    pub fn evaluate<T: Scalar>(&self, c: &[T], s: T) -> T {
        crate::scalar::dot(&self.values(s), c)
    }

    /// `∫_e L_j² ds = |e| / (2j + 1)`.
    pub fn norm_squared<T: Scalar>(&self, j: usize, length: T) -> T {
        length / T::of_usize(2 * j + 1)
    }
}

/// `M_ij = ∫_K φ_i φ_j` with the given rule.
pub fn tri_mass_matrix<T: Scalar>(basis: &TriBasis<T>, element: &Triangle<T>, rule: &TriangleRule<T>) -> DMat<T> {
    let n = basis.dim();
    let area = element.area();
    let mut m = DMat::zeros(n, n);
    for (r, w) in rule.iter() {
        let phi = basis.values(element.map(*r));
        let w = w * T::cst(2.0) * area;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    m.symmetrize_from_upper();
    m
}

/// `M_ij = ∫_e L_i L_j ds` with the given rule.
pub fn edge_mass_matrix<T: Scalar>(basis: &EdgeBasis, edge: &Segment<T>, rule: &EdgeRule<T>) -> DMat<T> {
    let n = basis.dim();
    let len = edge.length();
    let mut m = DMat::zeros(n, n);
    for (&s, w) in rule.iter() {
        let l = basis.values(s);
        for i in 0..n {
            for j in i..n {
                m[(i, j)] += w * len * l[i] * l[j];
            }
        }
    }
    m.symmetrize_from_upper();
    m
}

/// `∫_K f` over a physical triangle.
pub fn integrate_triangle<T: Scalar>(element: &Triangle<T>, rule: &TriangleRule<T>, f: impl Fn(Point<T>) -> T) -> T {
    let jac = T::cst(2.0) * element.area();
    rule.iter().map(|(r, w)| w * f(element.map(*r))).sum::<T>() * jac
}
