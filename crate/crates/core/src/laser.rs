//! Transmitter side: stimulation current to laser power and back.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Constants of the linear laser-diode characteristic above threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserDiodeParams<T = f64> {
    /// Planck constant, J*s.
    pub planck_h_js: T,
    /// Laser frequency, Hz.
    pub frequency_hz: T,
    /// Elementary charge, C.
    pub charge_c: T,
    /// Lasing threshold current of the gain medium, A.
    pub threshold_current_a: T,
}

impl<T: Scalar> Default for LaserDiodeParams<T> {
    fn default() -> Self {
        Self {
            planck_h_js: T::lit(6.626_069_57e-34),
            frequency_hz: T::lit(3.59e14),
            charge_c: T::lit(1.6e-19),
            threshold_current_a: T::lit(0.0396),
        }
    }
}

impl<T: Scalar> LaserDiodeParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("laser.planck_h_js", self.planck_h_js),
            ("laser.frequency_hz", self.frequency_hz),
            ("laser.charge_c", self.charge_c),
            ("laser.threshold_current_a", self.threshold_current_a),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(ModelError::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Slope of the laser characteristic, h*nu/q, in W/A.
    pub fn slope_efficiency(&self) -> T {
        self.planck_h_js * self.frequency_hz / self.charge_c
    }

    /// Optical output for a given stimulation current.
    ///
    /// Zero at or below threshold; affine with slope [`Self::slope_efficiency`] above it.
    pub fn laser_power(&self, stimulation_current_a: T) -> Result<T> {
        if !(stimulation_current_a >= T::zero()) {
            return Err(ModelError::domain(
                "stimulation current",
                stimulation_current_a.as_f64(),
                "must be >= 0",
            ));
        }
        if stimulation_current_a <= self.threshold_current_a {
            return Ok(T::zero());
        }
        Ok(self.slope_efficiency() * (stimulation_current_a - self.threshold_current_a))
    }

    /// Stimulation current needed for `target_power_w`; the threshold current for zero power.
    pub fn stimulation_current_for_power(&self, target_power_w: T) -> Result<T> {
        if !(target_power_w >= T::zero()) {
            return Err(ModelError::domain("target laser power", target_power_w.as_f64(), "must be >= 0"));
        }
        Ok(self.threshold_current_a + target_power_w * self.charge_c / (self.planck_h_js * self.frequency_hz))
    }
}

/// Constant beam cross-section at the receiver aperture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamGeometry<T = f64> {
    pub area_cm2: T,
}

impl<T: Scalar> Default for BeamGeometry<T> {
    fn default() -> Self {
        Self { area_cm2: T::one() }
    }
}

impl<T: Scalar> BeamGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_cm2.is_finite() && self.area_cm2 > T::zero()) {
            return Err(ModelError::invalid("beam.area_cm2", format!("must be finite and > 0, got {}", self.area_cm2)));
        }
        Ok(())
    }

    pub fn power_from_density(&self, density_w_per_cm2: T) -> T {
        density_w_per_cm2 * self.area_cm2
    }

    pub fn density_from_power(&self, power_w: T) -> T {
        power_w / self.area_cm2
    }
}
