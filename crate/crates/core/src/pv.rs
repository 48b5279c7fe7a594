//! Receiver side: single-diode PV panel, maximum power point and inverse MPPT.
//!
//! The diode equation is evaluated at panel level: the thermal voltage is
//! scaled by the number of series cells and the reference open-circuit
//! voltage is a panel quantity. Short-circuit current scales linearly with
//! irradiance from the reference point; the saturation current is fixed at
//! its reference value.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;
use crate::search::{bisect_increasing, golden_section_max};

/// How the diode saturation current is pinned to the reference open-circuit voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationForm {
    /// `I_s = I_sc0 / (exp(V_oc/V_t) - 1)`: the diode equation passes exactly
    /// through `(V_oc, 0)` at reference irradiance.
    #[default]
    ExactOpenCircuit,
    /// `I_s = I_sc0 * exp(-V_oc/V_t)`: drops the `-1`, valid when `V_oc >> V_t`.
    LeadingOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvPanelParams<T = f64> {
    /// Short-circuit current at the reference irradiance, A.
    pub short_circuit_current_ref_a: T,
    /// Panel open-circuit voltage at the reference irradiance, V.
    pub open_circuit_voltage_ref_v: T,
    pub quality_factor: T,
    /// Boltzmann constant, J/K.
    pub boltzmann_k_jk: T,
    pub temperature_k: T,
    /// Elementary charge, C.
    pub charge_c: T,
    pub series_cells: u32,
    pub reference_irradiance_w_per_cm2: T,
    pub saturation_form: SaturationForm,
}

impl<T: Scalar> Default for PvPanelParams<T> {
    fn default() -> Self {
        Self {
            short_circuit_current_ref_a: T::lit(0.128),
            open_circuit_voltage_ref_v: T::lit(5.99),
            quality_factor: T::lit(8.5),
            boltzmann_k_jk: T::lit(1.380_648_52e-23),
            temperature_k: T::lit(298.0),
            charge_c: T::lit(1.6e-19),
            series_cells: 30,
            reference_irradiance_w_per_cm2: T::lit(28.9),
            saturation_form: SaturationForm::default(),
        }
    }
}

/// A point on the panel's I-V characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOperatingPoint<T = f64> {
    pub voltage: T,
    pub current: T,
    /// Always `voltage * current`.
    pub power: T,
    pub irradiance: T,
}

impl<T: Scalar> PvOperatingPoint<T> {
    pub fn new(voltage: T, current: T, irradiance: T) -> Self {
        Self {
            voltage,
            current,
            power: voltage * current,
            irradiance,
        }
    }
}

/// Tolerances for the MPP search and its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpptSettings<T = f64> {
    pub voltage_rel_tol: T,
    pub voltage_max_iter: usize,
    pub irradiance_min_w_per_cm2: T,
    pub irradiance_max_w_per_cm2: T,
    pub power_rel_tol: T,
    pub irradiance_max_iter: usize,
}

impl<T: Scalar> Default for MpptSettings<T> {
    fn default() -> Self {
        Self {
            voltage_rel_tol: T::lit(1e-9),
            voltage_max_iter: 200,
            irradiance_min_w_per_cm2: T::lit(1e-6),
            irradiance_max_w_per_cm2: T::lit(1e4),
            power_rel_tol: T::lit(1e-6),
            irradiance_max_iter: 200,
        }
    }
}

impl<T: Scalar> MpptSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mppt.voltage_rel_tol", self.voltage_rel_tol),
            ("mppt.irradiance_min_w_per_cm2", self.irradiance_min_w_per_cm2),
            ("mppt.power_rel_tol", self.power_rel_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(ModelError::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.irradiance_max_w_per_cm2.is_finite() && self.irradiance_max_w_per_cm2 > self.irradiance_min_w_per_cm2) {
            return Err(ModelError::invalid(
                "mppt.irradiance_max_w_per_cm2",
                "must be finite and greater than irradiance_min_w_per_cm2",
            ));
        }
        if self.voltage_max_iter == 0 {
            return Err(ModelError::invalid("mppt.voltage_max_iter", "must be >= 1"));
        }
        if self.irradiance_max_iter == 0 {
            return Err(ModelError::invalid("mppt.irradiance_max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

impl<T: Scalar> PvPanelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pv.short_circuit_current_ref_a", self.short_circuit_current_ref_a),
            ("pv.open_circuit_voltage_ref_v", self.open_circuit_voltage_ref_v),
            ("pv.quality_factor", self.quality_factor),
            ("pv.boltzmann_k_jk", self.boltzmann_k_jk),
            ("pv.temperature_k", self.temperature_k),
            ("pv.charge_c", self.charge_c),
            ("pv.reference_irradiance_w_per_cm2", self.reference_irradiance_w_per_cm2),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(ModelError::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.series_cells == 0 {
            return Err(ModelError::invalid("pv.series_cells", "must be >= 1"));
        }
        Ok(())
    }

    /// Panel thermal voltage `N * n * k * T / q`.
    pub fn thermal_voltage(&self) -> T {
        T::lit(f64::from(self.series_cells)) * self.quality_factor * self.boltzmann_k_jk * self.temperature_k
            / self.charge_c
    }

    /// Diode saturation current, pinned at the reference point.
    pub fn saturation_current(&self) -> T {
        let x = self.open_circuit_voltage_ref_v / self.thermal_voltage();
        match self.saturation_form {
            SaturationForm::ExactOpenCircuit => self.short_circuit_current_ref_a / x.exp_m1(),
            SaturationForm::LeadingOrder => self.short_circuit_current_ref_a * (-x).exp(),
        }
    }

    pub fn short_circuit_current(&self, irradiance: T) -> Result<T> {
        check_irradiance(irradiance, false)?;
        Ok(self.short_circuit_current_ref_a * irradiance / self.reference_irradiance_w_per_cm2)
    }

    /// Diode-equation output current, floored at zero past open circuit.
    pub fn output_current(&self, irradiance: T, voltage: T) -> Result<T> {
        if !(voltage >= T::zero()) {
            return Err(ModelError::domain("PV voltage", voltage.as_f64(), "must be >= 0"));
        }
        let isc = self.short_circuit_current(irradiance)?;
        Ok(self.current_unchecked(isc, self.saturation_current(), self.thermal_voltage(), voltage))
    }

    /// `V_t * ln(1 + I_sc(G) / I_s)`.
    pub fn open_circuit_voltage(&self, irradiance: T) -> Result<T> {
        check_irradiance(irradiance, true)?;
        let isc = self.short_circuit_current(irradiance)?;
        Ok(self.thermal_voltage() * (isc / self.saturation_current()).ln_1p())
    }

    /// Output power at a given voltage.
    pub fn power_at(&self, irradiance: T, voltage: T) -> Result<T> {
        Ok(voltage * self.output_current(irradiance, voltage)?)
    }

    /// Maximum power point at `irradiance`, default search tolerances.
    pub fn find_mpp(&self, irradiance: T) -> Result<PvOperatingPoint<T>> {
        self.find_mpp_with(irradiance, &MpptSettings::default())
    }

    pub fn find_mpp_with(&self, irradiance: T, settings: &MpptSettings<T>) -> Result<PvOperatingPoint<T>> {
        let voc = self.open_circuit_voltage(irradiance)?;
        let isc = self.short_circuit_current(irradiance)?;
        let is = self.saturation_current();
        let vt = self.thermal_voltage();
        let out = golden_section_max(
            |v| v * self.current_unchecked(isc, is, vt, v),
            T::zero(),
            voc,
            settings.voltage_rel_tol,
            settings.voltage_max_iter,
        );
        Ok(PvOperatingPoint::new(out.x, self.current_unchecked(isc, is, vt, out.x), irradiance))
    }

    /// Irradiance whose MPP power equals `desired_power_w`, searched up to `bracket_max`.
    pub fn irradiance_for_power(&self, desired_power_w: T, bracket_max: T) -> Result<T> {
        let settings = MpptSettings {
            irradiance_max_w_per_cm2: bracket_max,
            ..MpptSettings::default()
        };
        self.irradiance_for_power_with(desired_power_w, &settings)
    }

    /// Inverse MPPT by bisection on the increasing map `G -> P_mpp(G)`.
    ///
    /// Powers below the MPP power at the lower bracket edge return that edge.
    pub fn irradiance_for_power_with(&self, desired_power_w: T, settings: &MpptSettings<T>) -> Result<T> {
        if !(desired_power_w > T::zero() && desired_power_w.is_finite()) {
            return Err(ModelError::domain("desired PV power", desired_power_w.as_f64(), "must be finite and > 0"));
        }
        let lo = settings.irradiance_min_w_per_cm2;
        let hi = settings.irradiance_max_w_per_cm2;
        let p_hi = self.find_mpp_with(hi, settings)?.power;
        if p_hi < desired_power_w {
            return Err(ModelError::UnreachablePower {
                desired_w: desired_power_w.as_f64(),
                achievable_w: p_hi.as_f64(),
                bracket_max_w_per_cm2: hi.as_f64(),
            });
        }
        if self.find_mpp_with(lo, settings)?.power >= desired_power_w {
            return Ok(lo);
        }
        let mpp_power = |g: T| {
            self.find_mpp_with(g, settings)
                .map(|p| p.power)
                .unwrap_or_else(|_| T::nan())
        };
        let out = bisect_increasing(mpp_power, desired_power_w, lo, hi, settings.power_rel_tol, settings.irradiance_max_iter);
        Ok(out.x)
    }

    fn current_unchecked(&self, isc: T, is: T, vt: T, voltage: T) -> T {
        // exp overflow past open circuit gives -inf, floored to zero below.
        let i = isc - is * (voltage / vt).exp_m1();
        i.max(T::zero())
    }
}

fn check_irradiance<T: Scalar>(irradiance: T, strictly_positive: bool) -> Result<()> {
    let ok = irradiance.is_finite()
        && if strictly_positive {
            irradiance > T::zero()
        } else {
            irradiance >= T::zero()
        };
    if ok {
        Ok(())
    } else {
        Err(ModelError::domain(
            "irradiance",
            irradiance.as_f64(),
            if strictly_positive { "must be > 0" } else { "must be >= 0" },
        ))
    }
}
