//! Discrete-time closed loop: monitor -> channel -> controller -> laser ->
//! PV at MPP -> DC-DC -> battery -> stage transition, once per step.

use crate::battery::{desired_setpoint, stage_transition, step_battery, BatteryState, Stage};
use crate::channel::Channel;
use crate::config::SimConfig;
use crate::error::{ModelError, Result};
use crate::laser::LaserDiodeParams;
use crate::power_chain::{controller_apply, monitor_compute_feedback, ChargeSetpoint, FeedbackMessage};
use crate::pv::PvOperatingPoint;
use crate::trace::{SimFault, StepRecord, Trace};

/// What the transmitter is currently driving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamCommand {
    pub stimulation_current_a: f64,
    pub laser_power_w: f64,
}

impl BeamCommand {
    /// Threshold current, no light: the command held before any feedback arrives.
    pub fn idle(laser: &LaserDiodeParams) -> Self {
        Self {
            stimulation_current_a: laser.threshold_current_a,
            laser_power_w: 0.0,
        }
    }
}

/// Power controller plus gain medium: realizes a feedback message as a beam.
pub fn transmitter_respond(laser: &LaserDiodeParams, msg: &FeedbackMessage) -> Result<BeamCommand> {
    let current = controller_apply(msg, laser)?;
    Ok(BeamCommand {
        stimulation_current_a: current,
        laser_power_w: laser.laser_power(current)?,
    })
}

/// The transmitter end of the feedback loop as seen from the receiver.
pub trait Transmitter {
    /// Hands a delivered feedback message to the transmitter. `Ok(None)` means
    /// no answer this step and the previous beam stays on.
    fn command(&mut self, msg: &FeedbackMessage, time_s: f64) -> std::result::Result<Option<BeamCommand>, SimFault>;

    /// Called once when the run ends, whatever the outcome.
    fn finish(&mut self, _trace: &Trace) {}
}

/// In-process transmitter.
#[derive(Debug, Clone)]
pub struct LocalTransmitter {
    laser: LaserDiodeParams,
}

impl LocalTransmitter {
    pub fn new(laser: LaserDiodeParams) -> Self {
        Self { laser }
    }
}

impl Transmitter for LocalTransmitter {
    fn command(&mut self, msg: &FeedbackMessage, time_s: f64) -> std::result::Result<Option<BeamCommand>, SimFault> {
        transmitter_respond(&self.laser, msg).map(Some).map_err(|e| model_fault(e, time_s))
    }
}

fn model_fault(e: ModelError, time_s: f64) -> SimFault {
    match e {
        ModelError::UnreachablePower { desired_w, achievable_w, .. } => SimFault::UnreachablePower {
            time_s,
            desired_w,
            achievable_w,
        },
        other => SimFault::Model {
            time_s,
            message: other.to_string(),
        },
    }
}

/// A running closed-loop simulation.
pub struct Simulation<X: Transmitter> {
    config: SimConfig,
    state: BatteryState,
    channel: Channel,
    transmitter: X,
    beam: BeamCommand,
    step_index: u64,
    next_sequence: u64,
}

impl<X: Transmitter> Simulation<X> {
    pub fn new(config: SimConfig, transmitter: X) -> Result<Self> {
        config.validate()?;
        let state = BatteryState::at_rest(&config.battery, &config.profile, config.battery.initial_soc);
        Ok(Self::with_state(config, state, transmitter))
    }

    /// Starts from an explicit battery state; `config` must already be valid.
    pub fn with_state(config: SimConfig, state: BatteryState, transmitter: X) -> Self {
        Self {
            channel: Channel::new(config.channel),
            beam: BeamCommand::idle(&config.laser),
            state,
            config,
            transmitter,
            step_index: 0,
            next_sequence: 1,
        }
    }

    pub fn state(&self) -> &BatteryState {
        &self.state
    }

    pub fn beam(&self) -> BeamCommand {
        self.beam
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Executes one step and returns its record.
    pub fn step(&mut self) -> std::result::Result<StepRecord, SimFault> {
        let cfg = &self.config;
        let time_s = self.state.time_s;
        let dt = cfg.dt_s;

        let setpoint = desired_setpoint(&cfg.profile, &cfg.battery, &self.state, dt);

        if self.step_index.is_multiple_of(u64::from(cfg.feedback_interval_steps)) {
            let msg = monitor_compute_feedback(
                &setpoint,
                &cfg.pv,
                &cfg.mppt,
                &cfg.dcdc,
                &cfg.beam,
                self.next_sequence,
                time_s,
            )
            .map_err(|e| model_fault(e, time_s))?;
            self.next_sequence += 1;
            self.channel.apply_channel(msg, self.step_index);
        }
        for msg in self.channel.deliver_due(self.step_index) {
            if let Some(beam) = self.transmitter.command(&msg, time_s)? {
                self.beam = beam;
            }
        }

        let irradiance = cfg.beam.density_from_power(self.beam.laser_power_w);
        let mpp = if irradiance > 0.0 {
            cfg.pv.find_mpp_with(irradiance, &cfg.mppt).map_err(|e| model_fault(e, time_s))?
        } else {
            PvOperatingPoint::new(0.0, 0.0, 0.0)
        };

        let available = cfg.dcdc.output_power(mpp.power);
        let wanted = setpoint.power();
        let applied = if available >= wanted {
            setpoint
        } else if setpoint.voltage_v > 0.0 {
            ChargeSetpoint::new(setpoint.voltage_v, available / setpoint.voltage_v)
        } else {
            ChargeSetpoint::zero()
        };

        let record = StepRecord {
            time_s,
            stage: self.state.stage,
            battery_voltage_v: setpoint.voltage_v,
            battery_current_a: applied.current_a,
            setpoint_power_w: wanted,
            stimulation_current_a: self.beam.stimulation_current_a,
            laser_power_w: self.beam.laser_power_w,
            pv_mpp_voltage_v: mpp.voltage,
            pv_mpp_current_a: mpp.current,
            pv_output_power_w: mpp.power,
            delivered_power_w: applied.power().min(available),
        };

        let mut next = step_battery(&cfg.battery, &self.state, &applied, dt);
        next.stage = stage_transition(&cfg.profile, &next);
        self.state = next;
        self.step_index += 1;
        Ok(record)
    }

    /// Steps until a CT record is produced, `max_steps` is hit, or a fault occurs.
    pub fn run(mut self) -> Trace {
        let mut trace = Trace {
            dt_s: self.config.dt_s,
            records: Vec::new(),
            truncated: true,
            fault: None,
        };
        for _ in 0..self.config.max_steps {
            match self.step() {
                Ok(record) => {
                    let done = record.stage == Stage::Ct;
                    trace.records.push(record);
                    if done {
                        trace.truncated = false;
                        break;
                    }
                }
                Err(fault) => {
                    trace.fault = Some(fault);
                    break;
                }
            }
        }
        self.transmitter.finish(&trace);
        trace
    }
}

/// In-process closed-loop run.
pub fn run(config: &SimConfig) -> Result<Trace> {
    Ok(Simulation::new(*config, LocalTransmitter::new(config.laser))?.run())
}

/// Open-loop charge profile: the setpoint trajectory with perfect delivery,
/// no laser or PV in the loop.
pub fn open_loop_profile(config: &SimConfig) -> Result<Vec<(f64, Stage, ChargeSetpoint)>> {
    config.validate()?;
    let mut state = BatteryState::at_rest(&config.battery, &config.profile, config.battery.initial_soc);
    let mut out = Vec::new();
    for _ in 0..config.max_steps {
        let sp = desired_setpoint(&config.profile, &config.battery, &state, config.dt_s);
        out.push((state.time_s, state.stage, sp));
        if state.stage == Stage::Ct {
            break;
        }
        let mut next = step_battery(&config.battery, &state, &sp, config.dt_s);
        next.stage = stage_transition(&config.profile, &next);
        state = next;
    }
    Ok(out)
}
