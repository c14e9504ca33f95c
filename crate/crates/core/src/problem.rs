//! Manufactured Stokes solutions used by the convergence studies.

use crate::error::{Error, Result};
use crate::scalar::{Point, Scalar};

/// Exact solution of `−Δu + ∇p = f`, `div u = 0` on the unit square with
/// `u = g` on the boundary.
#[derive(Debug, Clone, Copy)]
pub struct ProblemCase<T> {
    pub name: &'static str,
    pub velocity: fn(Point<T>) -> [T; 2],
    /// `[[∂x u₁, ∂y u₁], [∂x u₂, ∂y u₂]]`.
    pub velocity_gradient: fn(Point<T>) -> [[T; 2]; 2],
    pub pressure: fn(Point<T>) -> T,
    pub force: fn(Point<T>) -> [T; 2],
    pub notes: &'static str,
}

/// Names accepted by [`case_by_name`].
pub const CASES: [&str; 2] = ["paper", "shear"];

/// `u = (x cos y, cos x − sin y)`, `p = x³y − y³ + 1/8`.
pub fn paper_case<T: Scalar>() -> ProblemCase<T> {
    ProblemCase {
        name: "paper",
        velocity: |[x, y]| [x * y.cos(), x.cos() - y.sin()],
        velocity_gradient: |[x, y]| [[y.cos(), -x * y.sin()], [-x.sin(), -y.cos()]],
        pressure: |[x, y]| x.powi(3) * y - y.powi(3) + T::cst(0.125),
        force: |[x, y]| {
            let three = T::cst(3.0);
            [x * y.cos() + three * x * x * y, x.cos() - y.sin() + x.powi(3) - three * y * y]
        },
        notes: "smooth (analytic); nonhomogeneous boundary data",
    }
}

/// `u = (y, x)`, `p = 0`, `f = 0`: lies in every discrete space.
pub fn shear_case<T: Scalar>() -> ProblemCase<T> {
    ProblemCase {
        name: "shear",
        velocity: |[x, y]| [y, x],
        velocity_gradient: |_| [[T::zero(), T::one()], [T::one(), T::zero()]],
        pressure: |_| T::zero(),
        force: |_| [T::zero(); 2],
        notes: "linear velocity, zero pressure; reproduced exactly",
    }
}

pub fn case_by_name<T: Scalar>(name: &str) -> Result<ProblemCase<T>> {
    match name {
        "paper" => Ok(paper_case()),
        "shear" => Ok(shear_case()),
        _ => Err(Error::UnknownCase(name.to_string())),
    }
}
