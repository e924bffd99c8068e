//! Single-link flexible manipulator: boundary-homogenized modal model,
//! time integration, tracking controllers and reference trajectories.

pub mod beam;
pub mod closed_loop;
pub mod control;
pub mod dynamics;
pub(crate) mod linalg;
pub mod par;
pub mod quadrature;
pub mod trajectory;

pub use dynamics::{assemble_dynamics, Accelerations, DynamicsError, DynamicsModel, ModelOptions, SimState};

/// Largest number of retained modes.
pub const MAX_MODES: usize = 8;
