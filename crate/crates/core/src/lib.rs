//! Curvature invariants, Q-curvature and rigidity-identity checks for
//! Riemannian metrics given in closed-form coordinate charts.

pub mod expr;
pub mod tensor;
pub mod jet;
pub mod geometry;
pub mod catalog;
pub mod hypersurface;
pub mod identities;
pub mod simplexlab;
pub mod quadrature;
pub mod conformal;
