//! Element-local weak gradient and weak divergence, and the projections
//! `P_h^l`, `Q_h`, and `π_h` built on them.

mod element;
mod pi;
mod projection;

pub use element::{local_dofs, weak_divergence_op, weak_gradient_op, ElementOperators};
pub use pi::{project_pi, PiProjector};
pub use projection::{
    project_edge, project_interior, project_pressure, project_qh, project_qh_vector, PressureVector,
    WeakFunctionVector,
};
