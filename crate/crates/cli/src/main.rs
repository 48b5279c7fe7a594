//! `adlc`: run adaptive laser charging scenarios and emit CSV/JSON data.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adlc_core::engine::open_loop_profile;
use adlc_core::{compare_fixed_vs_adaptive, parse_config, ConfigError, ModelError, SimConfig, SimFault, Trace};
use adlc_netlink::{run_receiver, run_transmitter, NetError};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "adlc", version, about = "Adaptive laser charging simulator")]
struct Cli {
    /// Config file (TOML, or JSON with a .json extension). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the channel RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct TraceOutput {
    #[command(flatten)]
    output: Output,
    /// Also write the fixed-vs-adaptive comparison as JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sweep {
    /// I-V and P-V curve at one irradiance.
    Voltage,
    /// MPP against irradiance, log-spaced.
    Irradiance,
}

#[derive(Subcommand)]
enum Command {
    /// In-process closed-loop run; writes the step trace.
    Simulate(TraceOutput),
    /// Serve one receiver session as the laser transmitter.
    Transmitter {
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: String,
    },
    /// Closed-loop run against a remote transmitter; writes the step trace.
    Receiver {
        #[arg(long, default_value = "127.0.0.1:7070")]
        connect: String,
        #[command(flatten)]
        out: TraceOutput,
    },
    /// PV curve or MPP sweeps.
    Mpp {
        #[arg(long, value_enum, default_value_t = Sweep::Voltage)]
        sweep: Sweep,
        /// Irradiance for the voltage sweep (W/cm²); the panel reference by default.
        #[arg(long)]
        irradiance: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        g_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        g_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Open-loop charge profile (setpoints with perfect delivery).
    Profile(Output),
    /// Fixed-power baseline against the adaptive run, as JSON.
    Compare {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective config in canonical form.
    Config {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A run that stopped on a fault; the partial trace has already been written.
#[derive(Debug, thiserror::Error)]
#[error("run stopped: {0}")]
struct RunFault(SimFault);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Error chain joined with ": ", skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<NetError>() {
            return 3;
        }
        if let Some(ModelError::UnreachablePower { .. }) = cause.downcast_ref::<ModelError>() {
            return 4;
        }
        if let Some(RunFault(fault)) = cause.downcast_ref::<RunFault>() {
            return match fault {
                SimFault::UnreachablePower { .. } => 4,
                SimFault::Link { .. } => 3,
                SimFault::Model { .. } => 1,
            };
        }
    }
    1
}

fn load_config(cli: &Cli) -> Result<SimConfig> {
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.channel.rng_seed = seed;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Simulate(out) => {
            let trace = adlc_core::run(&config)?;
            finish_trace(&trace, &config, &out)
        }
        Command::Transmitter { listen } => {
            let summary = run_transmitter(&listen, config)?;
            log::info!("session closed after {} feedback messages", summary.feedbacks_handled);
            Ok(())
        }
        Command::Receiver { connect, out } => {
            let trace = run_receiver(&connect, &config)?;
            finish_trace(&trace, &config, &out)
        }
        Command::Mpp { sweep, irradiance, g_min, g_max, points, output } => {
            anyhow::ensure!(points >= 2, "--points must be at least 2");
            match sweep {
                Sweep::Voltage => {
                    let g = irradiance.unwrap_or(config.pv.reference_irradiance_w_per_cm2);
                    write_rows(&output, &voltage_sweep(&config, g, points)?)
                }
                Sweep::Irradiance => {
                    anyhow::ensure!(0.0 < g_min && g_min < g_max, "need 0 < --g-min < --g-max");
                    write_rows(&output, &irradiance_sweep(&config, g_min, g_max, points)?)
                }
            }
        }
        Command::Profile(output) => {
            let rows: Vec<ProfileRow> = open_loop_profile(&config)?
                .into_iter()
                .map(|(time_s, stage, sp)| ProfileRow {
                    time_s,
                    stage: stage.as_str(),
                    voltage_v: sp.voltage_v,
                    current_a: sp.current_a,
                    power_w: sp.power(),
                })
                .collect();
            write_rows(&output, &rows)
        }
        Command::Compare { out } => {
            let trace = adlc_core::run(&config)?;
            if let Some(fault) = &trace.fault {
                return Err(RunFault(fault.clone()).into());
            }
            let report = compare_fixed_vs_adaptive(&trace, config.fixed_baseline_power_w)?;
            write_text(out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
        }
        Command::Config { json, out } => {
            let text = if json { config.to_json_string() + "\n" } else { config.to_toml_string() };
            write_text(out.as_deref(), &text)
        }
    }
}

fn finish_trace(trace: &Trace, config: &SimConfig, out: &TraceOutput) -> Result<()> {
    let mut sink = open_sink(out.output.out.as_deref())?;
    match out.output.format {
        Format::Csv => trace.write_csv(&mut sink)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, trace)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    if let Some(fault) = &trace.fault {
        return Err(RunFault(fault.clone()).into());
    }
    if let Some(path) = &out.report {
        let report = compare_fixed_vs_adaptive(trace, config.fixed_baseline_power_w)?;
        let text = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    irradiance_w_per_cm2: f64,
    voltage_v: f64,
    current_a: f64,
    power_w: f64,
}

#[derive(Serialize)]
struct MppRow {
    irradiance_w_per_cm2: f64,
    mpp_voltage_v: f64,
    mpp_current_a: f64,
    mpp_power_w: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    time_s: f64,
    stage: &'static str,
    voltage_v: f64,
    current_a: f64,
    power_w: f64,
}

fn voltage_sweep(config: &SimConfig, g: f64, points: usize) -> Result<Vec<CurveRow>> {
    let pv = &config.pv;
    let voc = pv.open_circuit_voltage(g)?;
    (0..points)
        .map(|k| {
            let v = voc * k as f64 / (points - 1) as f64;
            let i = pv.output_current(g, v)?;
            Ok(CurveRow { irradiance_w_per_cm2: g, voltage_v: v, current_a: i, power_w: v * i })
        })
        .collect()
}

fn irradiance_sweep(config: &SimConfig, g_min: f64, g_max: f64, points: usize) -> Result<Vec<MppRow>> {
    let ratio = (g_max / g_min).ln();
    (0..points)
        .map(|k| {
            let g = g_min * (ratio * k as f64 / (points - 1) as f64).exp();
            let mpp = config.pv.find_mpp_with(g, &config.mppt)?;
            Ok(MppRow {
                irradiance_w_per_cm2: g,
                mpp_voltage_v: mpp.voltage,
                mpp_current_a: mpp.current,
                mpp_power_w: mpp.power,
            })
        })
        .collect()
}

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_rows<R: Serialize>(output: &Output, rows: &[R]) -> Result<()> {
    let mut sink = open_sink(output.out.as_deref())?;
    match output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, rows)?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut sink = open_sink(path)?;
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(())
}
