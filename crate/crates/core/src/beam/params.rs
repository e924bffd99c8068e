use serde::{Deserialize, Serialize};

use super::BeamError;

/// Physical constants of the flexible link, its tip payload and the hub.
///
/// Field names follow the symbols of the physical parameter table so that
/// configuration files can use them verbatim (`L`, `rho`, `A`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Link length (m).
    #[serde(rename = "L")]
    pub length: f64,
    /// Link density (kg/m³).
    #[serde(rename = "rho")]
    pub density: f64,
    /// Cross-section area (m²).
    #[serde(rename = "A")]
    pub area: f64,
    /// Young's modulus (Pa).
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    /// Second moment of area (m⁴).
    #[serde(rename = "I")]
    pub area_moment: f64,
    /// Tip payload mass (kg).
    #[serde(rename = "M")]
    pub payload_mass: f64,
    /// Link mass used in the gravity potential (kg).
    #[serde(rename = "m")]
    pub link_mass: f64,
    /// Hub rotary inertia about the joint (kg·m²).
    #[serde(rename = "I_m")]
    pub hub_inertia: f64,
    /// Gravitational acceleration (m/s²).
    #[serde(rename = "g")]
    pub gravity: f64,
}

impl BeamParams {
    pub const GRAVITY: f64 = 9.81;

    /// Builds a parameter set with the link mass defaulted to `rho*A*L` and
    /// the hub inertia defaulted to the slender-link value `rho*A*L^3/3`.
    pub fn new(length: f64, density: f64, area: f64, youngs_modulus: f64, area_moment: f64, payload_mass: f64) -> Self {
        let rho_a = density * area;
        Self {
            length,
            density,
            area,
            youngs_modulus,
            area_moment,
            payload_mass,
            link_mass: rho_a * length,
            hub_inertia: rho_a * length.powi(3) / 3.0,
            gravity: Self::GRAVITY,
        }
    }

    /// The laboratory link: 4.5 m steel tube carrying a 20 kg payload.
    pub fn table_i() -> Self {
        Self::new(4.5, 7850.0, 6.84e-4, 200e9, 3.71e-7, 20.0)
    }

    pub fn with_link_mass(mut self, m: f64) -> Self {
        self.link_mass = m;
        self
    }

    pub fn with_hub_inertia(mut self, i_m: f64) -> Self {
        self.hub_inertia = i_m;
        self
    }

    pub fn with_payload(mut self, mass: f64) -> Self {
        self.payload_mass = mass;
        self
    }

    pub fn rho_a(&self) -> f64 {
        self.density * self.area
    }

    pub fn ei(&self) -> f64 {
        self.youngs_modulus * self.area_moment
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        let fields = [
            ("L", self.length),
            ("rho", self.density),
            ("A", self.area),
            ("E", self.youngs_modulus),
            ("I", self.area_moment),
            ("M", self.payload_mass),
            ("m", self.link_mass),
            ("I_m", self.hub_inertia),
            ("g", self.gravity),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(BeamError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self::table_i()
    }
}

/// Combinations of [`BeamParams`] that appear throughout the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// `rho*A/M` (1/m), the payload coupling coefficient of the tip condition.
    pub p: f64,
    /// Bending stiffness `E*I` (N·m²).
    pub ei: f64,
    /// Mass per unit length `rho*A` (kg/m).
    pub rho_a: f64,
}

pub fn derived_params(bp: &BeamParams) -> Result<DerivedParams, BeamError> {
    bp.validate()?;
    let rho_a = bp.rho_a();
    Ok(DerivedParams { p: rho_a / bp.payload_mass, ei: bp.ei(), rho_a })
}
