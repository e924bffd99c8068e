//! Link/payload parameterization, the boundary-homogenizing offset profile
//! and the clamped–tip-mass modal basis of the homogenized field.

mod modes;
mod nu;
mod params;

pub use modes::{
    boundary_determinant, solve_eigenfrequencies, ModalBasis, Mode, ModeCheck, BASIS_QUADRATURE_NODES,
};
pub use nu::{gamma_coefficients, nu_profile, NuProfile};
pub use params::{derived_params, BeamParams, DerivedParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("beam parameter `{field}` must be strictly positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("homogenization singular: p*L = {pl:e} makes the Gamma_1 denominator vanish ({denominator:e})")]
    Singular { pl: f64, denominator: f64 },
    #[error("eigenfrequency scan found {found} of {wanted} roots on (0, {upper}] 1/m")]
    Bracketing { wanted: usize, found: usize, upper: f64 },
    #[error("mode count must be between 1 and {max} (got {got})")]
    ModeCount { got: usize, max: usize },
    #[error("mode {index}: normalization integral {value:e} is not positive")]
    Normalization { index: usize, value: f64 },
}
