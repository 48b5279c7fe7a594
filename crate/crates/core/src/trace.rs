//! Per-step records, energy integration, the fixed-vs-adaptive comparison
//! and CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::battery::Stage;
use crate::error::{ModelError, Result};

/// Snapshot of every power quantity in the chain for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time_s: f64,
    pub stage: Stage,
    pub battery_voltage_v: f64,
    pub battery_current_a: f64,
    pub setpoint_power_w: f64,
    pub stimulation_current_a: f64,
    pub laser_power_w: f64,
    pub pv_mpp_voltage_v: f64,
    pub pv_mpp_current_a: f64,
    pub pv_output_power_w: f64,
    pub delivered_power_w: f64,
}

/// Terminal condition that stopped a run early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimFault {
    UnreachablePower {
        time_s: f64,
        desired_w: f64,
        achievable_w: f64,
    },
    Model {
        time_s: f64,
        message: String,
    },
    /// Transport failure in the networked runner; `code` is a wire FAULT code.
    Link {
        time_s: f64,
        code: u16,
        message: String,
    },
}

impl std::fmt::Display for SimFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimFault::UnreachablePower { time_s, desired_w, achievable_w } => write!(
                f,
                "t={time_s} s: desired PV power {desired_w} W unreachable (max {achievable_w} W)"
            ),
            SimFault::Model { time_s, message } => write!(f, "t={time_s} s: {message}"),
            SimFault::Link { time_s, code, message } => write!(f, "t={time_s} s: link fault {code}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Trace {
    pub dt_s: f64,
    pub records: Vec<StepRecord>,
    /// Set when the run stopped before reaching CT.
    pub truncated: bool,
    pub fault: Option<SimFault>,
}

impl Trace {
    pub fn completed(&self) -> bool {
        !self.truncated && self.records.last().is_some_and(|r| r.stage == Stage::Ct)
    }

    /// Stages in order of first appearance.
    pub fn stage_sequence(&self) -> Vec<Stage> {
        let mut seq: Vec<Stage> = Vec::new();
        for r in &self.records {
            if seq.last() != Some(&r.stage) {
                seq.push(r.stage);
            }
        }
        seq
    }

    /// Time at which CT was reached.
    pub fn charge_duration_s(&self) -> Option<f64> {
        self.records.iter().find(|r| r.stage == Stage::Ct).map(|r| r.time_s)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(std::io::Error::other)?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory CSV write");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "time_s",
    "stage",
    "battery_voltage_v",
    "battery_current_a",
    "setpoint_power_w",
    "stimulation_current_a",
    "laser_power_w",
    "pv_mpp_voltage_v",
    "pv_mpp_current_a",
    "pv_output_power_w",
    "delivered_power_w",
];

/// Writes `trace` as CSV to `path`.
pub fn emit_csv(trace: &Trace, path: impl AsRef<Path>) -> std::io::Result<()> {
    if trace.records.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty trace"));
    }
    let file = std::fs::File::create(path)?;
    trace.write_csv(std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerField {
    Delivered,
    Setpoint,
    PvOutput,
    Laser,
}

impl PowerField {
    fn of(self, r: &StepRecord) -> f64 {
        match self {
            PowerField::Delivered => r.delivered_power_w,
            PowerField::Setpoint => r.setpoint_power_w,
            PowerField::PvOutput => r.pv_output_power_w,
            PowerField::Laser => r.laser_power_w,
        }
    }
}

/// Left-rectangle energy of `field` over `records`, in Wh.
pub fn integrate_energy(records: &[StepRecord], dt_s: f64, field: PowerField) -> Result<f64> {
    if records.is_empty() {
        return Err(ModelError::domain("trace length", 0.0, "energy of an empty trace is undefined"));
    }
    if !(dt_s > 0.0) {
        return Err(ModelError::domain("dt_s", dt_s, "must be > 0"));
    }
    let joules: f64 = records.iter().map(|r| field.of(r) * dt_s).sum();
    Ok(joules / 3600.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fixed_energy_wh: f64,
    pub adaptive_energy_wh: f64,
    pub saved_energy_wh: f64,
    pub saved_fraction: f64,
    pub charge_duration_h: f64,
    pub fixed_power_w: f64,
}

/// Energy drawn by a constant `fixed_power_w` charger over the adaptive
/// charge duration, against the adaptive trace's delivered energy.
pub fn compare_fixed_vs_adaptive(trace: &Trace, fixed_power_w: f64) -> Result<ComparisonReport> {
    if !trace.completed() {
        return Err(ModelError::domain(
            "trace",
            trace.records.len() as f64,
            "comparison needs a trace that reached CT",
        ));
    }
    let duration_s = trace.charge_duration_s().unwrap_or(0.0);
    let adaptive = integrate_energy(&trace.records, trace.dt_s, PowerField::Delivered)?;
    let fixed = fixed_power_w * duration_s / 3600.0;
    let saved = fixed - adaptive;
    Ok(ComparisonReport {
        fixed_energy_wh: fixed,
        adaptive_energy_wh: adaptive,
        saved_energy_wh: saved,
        saved_fraction: if fixed > 0.0 { saved / fixed } else { 0.0 },
        charge_duration_h: duration_s / 3600.0,
        fixed_power_w,
    })
}
