//! Co-simulation of adaptive laser charging.
//!
//! A transmitter drives a laser diode whose beam lands on a PV panel at the
//! receiver. The receiver runs the panel at its maximum power point, feeds a
//! DC-DC converter into a Li-ion cell following a trickle/CC/CV/terminate
//! profile, and reports the laser power density it needs back over a
//! feedback channel. The device models are generic over [`Scalar`]
//! (`f32`/`f64`); the closed-loop engine and its records are `f64`.

// `!(x > 0)` style checks are how parameter validation rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod laser;
pub mod power_chain;
pub mod pv;
pub mod scalar;
pub mod search;
pub mod trace;

pub use battery::{
    desired_setpoint, stage_transition, step_battery, BatteryModelParams, BatteryState, ChargeProfileParams, Stage,
    TerminationMode,
};
pub use channel::{Channel, ChannelModel, Delivery};
pub use config::{parse_config, ConfigError, NetworkSettings, SimConfig};
pub use engine::{run, transmitter_respond, BeamCommand, LocalTransmitter, Simulation, Transmitter};
pub use error::ModelError;
pub use laser::{BeamGeometry, LaserDiodeParams};
pub use power_chain::{
    controller_apply, dcdc_required_input_power, monitor_compute_feedback, ChargeSetpoint, DcDcParams,
    FeedbackMessage,
};
pub use pv::{MpptSettings, PvOperatingPoint, PvPanelParams, SaturationForm};
pub use scalar::Scalar;
pub use trace::{
    compare_fixed_vs_adaptive, emit_csv, integrate_energy, ComparisonReport, PowerField, SimFault, StepRecord, Trace,
};

/// Double-precision aliases.
pub type LaserDiode = LaserDiodeParams<f64>;
pub type Beam = BeamGeometry<f64>;
pub type PvPanel = PvPanelParams<f64>;
pub type OperatingPoint = PvOperatingPoint<f64>;
pub type ChargeProfile = ChargeProfileParams<f64>;
pub type BatteryModel = BatteryModelParams<f64>;
pub type Battery = BatteryState<f64>;
pub type Setpoint = ChargeSetpoint<f64>;
pub type DcDc = DcDcParams<f64>;

/// Single-precision aliases for embedded-style callers of the device models.
pub type LaserDiodeF32 = LaserDiodeParams<f32>;
pub type PvPanelF32 = PvPanelParams<f32>;
pub type ChargeProfileF32 = ChargeProfileParams<f32>;
pub type BatteryModelF32 = BatteryModelParams<f32>;
