//! Screw-theoretic kinematics of serial chains and closed loops.
//!
//! Forward kinematics in product-of-exponentials form, arbitrary-order time
//! and partial derivatives of joint screws and twists, Taylor expansion of
//! the kinematic map, Jacobian minors, loop-closure analysis (tangent cones,
//! closure algebras, mobility), higher-order inverse kinematics, loop
//! solving in independent coordinates, dexterity measures and conversions
//! between spatial, body-fixed and hybrid twists.

pub mod chain;
pub mod derivatives;
pub mod dexterity;
pub mod error;
pub mod ik;
pub mod linalg;
pub mod loop_solver;
pub mod minors;
pub mod mobility;
pub mod models;
pub mod multiindex;
pub mod parallel;
pub mod poly;
pub mod representations;
pub mod screw;
pub mod taylor;
pub mod tolerances;

pub use chain::{Chain, DerivativeStack};
pub use error::{Error, Result};
pub use multiindex::MultiIndex;
pub use parallel::Execution;
pub use screw::{Pitch, Pose, ScrewVec, UnitScrew};
pub use tolerances::Tolerances;
