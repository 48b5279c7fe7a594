//! Li-ion charge profile (trickle, constant current, constant voltage,
//! termination) and a phenomenological battery that responds to it.
//!
//! Battery model: open-circuit voltage affine in state of charge, terminal
//! voltage `OCV + I * R`. Under a constant-voltage hold the current is
//! `(V_cv - OCV) / R`, which decays exponentially as the cell fills.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::power_chain::ChargeSetpoint;
use crate::scalar::Scalar;

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Trickle charge.
    #[serde(rename = "TC")]
    Tc,
    /// Constant current.
    #[serde(rename = "CC")]
    Cc,
    /// Constant voltage.
    #[serde(rename = "CV")]
    Cv,
    /// Charge terminated.
    #[serde(rename = "CT")]
    Ct,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Tc => "TC",
            Stage::Cc => "CC",
            Stage::Cv => "CV",
            Stage::Ct => "CT",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationMode {
    /// Stop once the CV current falls below the termination current.
    #[default]
    MinimumCurrent,
    /// Stop once the CV stage has lasted the timer limit.
    TimerCutoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChargeProfileParams<T = f64> {
    pub tc_current_max_a: T,
    pub tc_cc_voltage_threshold_v: T,
    pub cc_current_a: T,
    pub cv_voltage_v: T,
    pub cv_tolerance_frac: T,
    pub termination_current_a: T,
    pub cv_timer_limit_h: T,
    pub termination_mode: TerminationMode,
}

impl<T: Scalar> Default for ChargeProfileParams<T> {
    fn default() -> Self {
        Self {
            tc_current_max_a: T::lit(0.1),
            tc_cc_voltage_threshold_v: T::lit(3.0),
            cc_current_a: T::lit(1.0),
            cv_voltage_v: T::lit(4.2),
            cv_tolerance_frac: T::lit(0.01),
            termination_current_a: T::lit(0.02),
            cv_timer_limit_h: T::lit(2.0),
            termination_mode: TerminationMode::default(),
        }
    }
}

impl<T: Scalar> ChargeProfileParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("profile.tc_current_max_a", self.tc_current_max_a),
            ("profile.tc_cc_voltage_threshold_v", self.tc_cc_voltage_threshold_v),
            ("profile.cc_current_a", self.cc_current_a),
            ("profile.cv_voltage_v", self.cv_voltage_v),
            ("profile.cv_tolerance_frac", self.cv_tolerance_frac),
            ("profile.termination_current_a", self.termination_current_a),
            ("profile.cv_timer_limit_h", self.cv_timer_limit_h),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ModelError::invalid(name, "must be finite"));
            }
        }
        if !(self.termination_current_a > T::zero()) {
            return Err(ModelError::invalid("profile.termination_current_a", "must be > 0"));
        }
        if !(self.termination_current_a < self.tc_current_max_a) {
            return Err(ModelError::invalid("profile.tc_current_max_a", "must exceed termination_current_a"));
        }
        if !(self.tc_current_max_a < self.cc_current_a) {
            return Err(ModelError::invalid("profile.cc_current_a", "must exceed tc_current_max_a"));
        }
        if self.cc_current_a < T::lit(0.2) || self.cc_current_a > T::lit(1.0) {
            return Err(ModelError::invalid("profile.cc_current_a", "must lie in [0.2, 1.0] A"));
        }
        if !(self.tc_cc_voltage_threshold_v > T::zero() && self.tc_cc_voltage_threshold_v < self.cv_voltage_v) {
            return Err(ModelError::invalid(
                "profile.tc_cc_voltage_threshold_v",
                "must be positive and below cv_voltage_v",
            ));
        }
        if self.cv_tolerance_frac < T::zero() {
            return Err(ModelError::invalid("profile.cv_tolerance_frac", "must be >= 0"));
        }
        if !(self.cv_timer_limit_h > T::zero()) {
            return Err(ModelError::invalid("profile.cv_timer_limit_h", "must be > 0"));
        }
        Ok(())
    }

    /// Upper bound on terminal voltage once CV has been entered.
    pub fn voltage_ceiling(&self) -> T {
        self.cv_voltage_v * (T::one() + self.cv_tolerance_frac)
    }
}

/// Phenomenological cell parameters. Not taken from any datasheet; the
/// defaults are a calibration that gives a charge of about 3.6 h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryModelParams<T = f64> {
    pub capacity_ah: T,
    pub internal_resistance_ohm: T,
    pub ocv_empty_v: T,
    pub ocv_full_v: T,
    /// Slope of the trickle-charge current ramp, A/s.
    pub tc_ramp_rate_a_per_s: T,
    /// State of charge at the start of a run.
    pub initial_soc: T,
}

impl<T: Scalar> Default for BatteryModelParams<T> {
    fn default() -> Self {
        Self {
            capacity_ah: T::lit(DEFAULT_CAPACITY_AH),
            internal_resistance_ohm: T::lit(0.1),
            ocv_empty_v: T::lit(2.8),
            ocv_full_v: T::lit(4.2),
            tc_ramp_rate_a_per_s: T::lit(0.1 / 60.0),
            initial_soc: T::lit(DEFAULT_INITIAL_SOC),
        }
    }
}

pub const DEFAULT_CAPACITY_AH: f64 = 1.73;
pub const DEFAULT_INITIAL_SOC: f64 = 0.035;

impl<T: Scalar> BatteryModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_ah.is_finite() && self.capacity_ah > T::zero()) {
            return Err(ModelError::invalid("battery.capacity_ah", "must be finite and > 0"));
        }
        if !(self.internal_resistance_ohm.is_finite() && self.internal_resistance_ohm >= T::zero()) {
            return Err(ModelError::invalid("battery.internal_resistance_ohm", "must be finite and >= 0"));
        }
        if !(self.ocv_empty_v.is_finite() && self.ocv_full_v.is_finite() && self.ocv_empty_v < self.ocv_full_v) {
            return Err(ModelError::invalid("battery.ocv_full_v", "must be finite and exceed ocv_empty_v"));
        }
        if !(self.tc_ramp_rate_a_per_s.is_finite() && self.tc_ramp_rate_a_per_s > T::zero()) {
            return Err(ModelError::invalid("battery.tc_ramp_rate_a_per_s", "must be finite and > 0"));
        }
        if !(self.initial_soc >= T::zero() && self.initial_soc <= T::one()) {
            return Err(ModelError::invalid("battery.initial_soc", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn open_circuit_voltage(&self, soc: T) -> T {
        self.ocv_empty_v + (self.ocv_full_v - self.ocv_empty_v) * soc
    }

    fn capacity_as(&self) -> T {
        self.capacity_ah * T::lit(SECONDS_PER_HOUR)
    }

    /// Current drawn when the terminal is held at `voltage`, capped at `limit`.
    fn draw_at_voltage(&self, soc: T, voltage: T, limit: T) -> T {
        let headroom = voltage - self.open_circuit_voltage(soc);
        if headroom <= T::zero() {
            return T::zero();
        }
        if self.internal_resistance_ohm > T::zero() {
            (headroom / self.internal_resistance_ohm).min(limit)
        } else {
            limit
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState<T = f64> {
    pub state_of_charge: T,
    pub terminal_voltage_v: T,
    /// Current applied during the most recent step.
    pub charge_current_a: T,
    pub stage: Stage,
    pub cv_elapsed_s: T,
    pub time_s: T,
    pub delivered_charge_ah: T,
    pub delivered_energy_wh: T,
}

impl<T: Scalar> BatteryState<T> {
    /// A cell at rest at `soc`, placed in the first stage its rest voltage allows.
    pub fn at_rest(model: &BatteryModelParams<T>, profile: &ChargeProfileParams<T>, soc: T) -> Self {
        let mut state = Self {
            state_of_charge: soc,
            terminal_voltage_v: model.open_circuit_voltage(soc),
            charge_current_a: T::zero(),
            stage: Stage::Tc,
            cv_elapsed_s: T::zero(),
            time_s: T::zero(),
            delivered_charge_ah: T::zero(),
            delivered_energy_wh: T::zero(),
        };
        // A resting cell never satisfies the minimum-current exit, so stop short of CT.
        loop {
            let next = stage_transition(profile, &state);
            if next == state.stage || next == Stage::Ct {
                break;
            }
            state.stage = next;
        }
        state
    }
}

/// The (voltage, current) pair the charge profile asks for in the next step.
pub fn desired_setpoint<T: Scalar>(
    profile: &ChargeProfileParams<T>,
    model: &BatteryModelParams<T>,
    state: &BatteryState<T>,
    dt_s: T,
) -> ChargeSetpoint<T> {
    let soc = state.state_of_charge;
    let ocv = model.open_circuit_voltage(soc);
    let r = model.internal_resistance_ohm;
    match state.stage {
        Stage::Tc => {
            let current = (state.charge_current_a + model.tc_ramp_rate_a_per_s * dt_s).min(profile.tc_current_max_a);
            ChargeSetpoint::new(ocv + current * r, current)
        }
        Stage::Cc => {
            let current = model.draw_at_voltage(soc, profile.cv_voltage_v, profile.cc_current_a);
            ChargeSetpoint::new(ocv + current * r, current)
        }
        Stage::Cv => {
            let current = model.draw_at_voltage(soc, profile.cv_voltage_v, profile.cc_current_a);
            ChargeSetpoint::new(profile.cv_voltage_v, current)
        }
        Stage::Ct => ChargeSetpoint::zero(),
    }
}

/// Applies `applied` for `dt_s`. Stage is left unchanged; see [`stage_transition`].
pub fn step_battery<T: Scalar>(
    model: &BatteryModelParams<T>,
    state: &BatteryState<T>,
    applied: &ChargeSetpoint<T>,
    dt_s: T,
) -> BatteryState<T> {
    let mut next = *state;
    let current = applied.current_a;
    let dt_h = dt_s / T::lit(SECONDS_PER_HOUR);

    next.time_s = state.time_s + dt_s;
    if state.stage == Stage::Cv {
        next.cv_elapsed_s = state.cv_elapsed_s + dt_s;
    }
    next.state_of_charge = (state.state_of_charge + current * dt_s / model.capacity_as()).min(T::one());
    next.charge_current_a = current;
    next.terminal_voltage_v = model.open_circuit_voltage(next.state_of_charge) + current * model.internal_resistance_ohm;
    next.delivered_charge_ah = state.delivered_charge_ah + current * dt_h;
    next.delivered_energy_wh = state.delivered_energy_wh + applied.power() * dt_h;
    next
}

/// Next stage given the state after a step. Thresholds are inclusive.
pub fn stage_transition<T: Scalar>(profile: &ChargeProfileParams<T>, state: &BatteryState<T>) -> Stage {
    match state.stage {
        Stage::Tc if state.terminal_voltage_v >= profile.tc_cc_voltage_threshold_v => Stage::Cc,
        Stage::Cc if state.terminal_voltage_v >= profile.cv_voltage_v => Stage::Cv,
        Stage::Cv => {
            let done = match profile.termination_mode {
                TerminationMode::MinimumCurrent => state.charge_current_a < profile.termination_current_a,
                TerminationMode::TimerCutoff => {
                    state.cv_elapsed_s >= profile.cv_timer_limit_h * T::lit(SECONDS_PER_HOUR)
                }
            };
            if done {
                Stage::Ct
            } else {
                Stage::Cv
            }
        }
        other => other,
    }
}
