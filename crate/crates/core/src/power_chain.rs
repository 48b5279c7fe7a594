//! DC-DC stage plus the power monitor and power controller computations
//! that link battery setpoints, PV output and laser power.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::laser::{BeamGeometry, LaserDiodeParams};
use crate::pv::{MpptSettings, PvPanelParams};
use crate::scalar::Scalar;

/// Desired battery charging voltage and current.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChargeSetpoint<T = f64> {
    pub voltage_v: T,
    pub current_a: T,
}

impl<T: Scalar> ChargeSetpoint<T> {
    pub fn new(voltage_v: T, current_a: T) -> Self {
        Self { voltage_v, current_a }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn power(&self) -> T {
        self.voltage_v * self.current_a
    }

    pub fn is_zero(&self) -> bool {
        self.current_a == T::zero() || self.voltage_v == T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcDcParams<T = f64> {
    /// Output power over input power, in (0, 1].
    pub efficiency: T,
}

impl<T: Scalar> Default for DcDcParams<T> {
    fn default() -> Self {
        Self { efficiency: T::one() }
    }
}

impl<T: Scalar> DcDcParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > T::zero() && self.efficiency <= T::one()) {
            return Err(ModelError::invalid("dcdc.efficiency", format!("must lie in (0, 1], got {}", self.efficiency)));
        }
        Ok(())
    }

    /// Power the converter delivers for a given input power.
    pub fn output_power(&self, input_w: T) -> T {
        input_w * self.efficiency
    }
}

/// Message sent by the power monitor over the feedback channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackMessage<T = f64> {
    pub sequence: u64,
    pub desired_power_density_w_per_cm2: T,
    pub desired_laser_power_w: T,
    pub timestamp_s: T,
}

impl<T: Scalar> FeedbackMessage<T> {
    /// Rebuilds a message from its density, as the transmitter does on receipt.
    pub fn from_density(sequence: u64, density_w_per_cm2: T, timestamp_s: T, beam: &BeamGeometry<T>) -> Self {
        Self {
            sequence,
            desired_power_density_w_per_cm2: density_w_per_cm2,
            desired_laser_power_w: beam.power_from_density(density_w_per_cm2),
            timestamp_s,
        }
    }
}

/// PV output power the converter needs to serve `setpoint`.
pub fn dcdc_required_input_power<T: Scalar>(setpoint: &ChargeSetpoint<T>, params: &DcDcParams<T>) -> T {
    setpoint.voltage_v * setpoint.current_a / params.efficiency
}

/// Power monitor: turns a charge setpoint into the laser power density that
/// puts the panel's MPP at the converter's required input power.
///
/// A zero setpoint commands zero density without searching.
pub fn monitor_compute_feedback<T: Scalar>(
    setpoint: &ChargeSetpoint<T>,
    pv: &PvPanelParams<T>,
    mppt: &MpptSettings<T>,
    dcdc: &DcDcParams<T>,
    beam: &BeamGeometry<T>,
    sequence: u64,
    timestamp_s: T,
) -> Result<FeedbackMessage<T>> {
    let required = dcdc_required_input_power(setpoint, dcdc);
    let density = if required > T::zero() {
        pv.irradiance_for_power_with(required, mppt)?
    } else {
        T::zero()
    };
    Ok(FeedbackMessage::from_density(sequence, density, timestamp_s, beam))
}

/// Power controller: stimulation current that realizes the requested laser power.
pub fn controller_apply<T: Scalar>(msg: &FeedbackMessage<T>, laser: &LaserDiodeParams<T>) -> Result<T> {
    laser.stimulation_current_for_power(msg.desired_laser_power_w)
}
