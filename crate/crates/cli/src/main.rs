use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emtransistor::presets::Preset;

mod error;
mod output;
mod run;
mod settings;
mod spec;
mod svg;

use error::CliError;
use settings::Settings;
use spec::{ExperimentSpec, Kind};

/// Sweeps, presets, stability thresholds and time-domain checks for a
/// pumped microwave cavity coupled to a nanomechanical resonator.
#[derive(Parser, Debug)]
#[command(name = "emtransistor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Key = value file with any of the flags below (underscored) and
    /// optionally inline parameter keys. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter file (omega_c, omega_n, kappa, gamma_n or q_n, lambda or
    /// g_pull + mass).
    #[arg(long)]
    params: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// critical | literal | single-sided
    #[arg(long)]
    normalization: Option<String>,
    /// How a bare `Hz` value of lambda is read: angular | hz
    #[arg(long)]
    lambda_units: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// csv | json | both
    #[arg(long)]
    format: Option<String>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Fraction of flagged points tolerated before exiting with status 3.
    #[arg(long)]
    flag_quota: Option<String>,
}

#[derive(Args, Debug, Default)]
struct DriveArgs {
    /// Pump detuning: red | blue | rad/s | rate such as `2pi*6.3 MHz`.
    #[arg(long, allow_hyphen_values = true)]
    delta_p: Option<String>,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Half-width of the signal-detuning grid.
    #[arg(long)]
    span: Option<String>,
    /// Centre of the signal-detuning grid.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
}

#[derive(Args, Debug, Default)]
struct LadderArgs {
    #[arg(long)]
    p_min: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transmission spectra at one or more pump powers.
    Spectrum {
        /// Comma-separated ascending powers, e.g. `0.3pW,0.5pW`.
        #[arg(long)]
        pump_power: Option<String>,
        #[arg(long)]
        signal_power: Option<String>,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Resonant transmission versus pump power.
    Gain {
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Instability threshold and eigenvalue table.
    Threshold {
        #[arg(long)]
        bracket_hi: Option<String>,
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Time-domain integration compared against the linear response.
    Oracle {
        #[arg(long)]
        pump_power: Option<String>,
        #[arg(long)]
        signal_power: Option<String>,
        /// Trace length in beat periods.
        #[arg(long)]
        periods: Option<String>,
        /// Write the trace of the centre grid point.
        #[arg(long)]
        dump_trace: bool,
        /// Keep every N-th trace sample.
        #[arg(long)]
        decimate: Option<String>,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state roots versus pump power.
    Steady {
        #[arg(long)]
        pump_power: Option<String>,
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        drive: DriveArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Standard experiment.
    Preset {
        /// fig2a | fig2b | fig3b | nms
        name: Preset,
        #[command(flatten)]
        common: Common,
    },
}

fn bool_flag(b: bool) -> Option<String> {
    b.then(|| "true".to_string())
}

fn settings(common: Common) -> Result<Settings, CliError> {
    let mut s = match &common.config {
        Some(path) => Settings::from_config_file(path)?,
        None => Settings::default(),
    };
    s.set("params", common.params);
    s.set("out", common.out);
    s.set("normalization", common.normalization);
    s.set("lambda_units", common.lambda_units);
    s.set("points", common.points);
    s.set("format", common.format);
    s.set("svg", bool_flag(common.svg));
    s.set("flag_quota", common.flag_quota);
    Ok(s)
}

fn resolve(command: Command) -> Result<(Kind, Option<Preset>, Settings), CliError> {
    Ok(match command {
        Command::Spectrum {
            pump_power,
            signal_power,
            drive,
            grid,
            common,
        } => {
            let mut s = settings(common)?;
            s.set("pump_power", pump_power);
            s.set("signal_power", signal_power);
            s.set("delta_p", drive.delta_p);
            s.set("span", grid.span);
            s.set("center", grid.center);
            (Kind::Spectrum, None, s)
        }
        Command::Gain {
            ladder,
            drive,
            common,
        } => {
            let mut s = settings(common)?;
            s.set("p_min", ladder.p_min);
            s.set("p_max", ladder.p_max);
            s.set("delta_p", drive.delta_p);
            (Kind::GainCurve, None, s)
        }
        Command::Threshold {
            bracket_hi,
            ladder,
            drive,
            common,
        } => {
            let mut s = settings(common)?;
            s.set("bracket_hi", bracket_hi);
            s.set("p_min", ladder.p_min);
            s.set("p_max", ladder.p_max);
            s.set("delta_p", drive.delta_p);
            (Kind::Threshold, None, s)
        }
        Command::Oracle {
            pump_power,
            signal_power,
            periods,
            dump_trace,
            decimate,
            drive,
            grid,
            common,
        } => {
            let mut s = settings(common)?;
            s.set("pump_power", pump_power);
            s.set("signal_power", signal_power);
            s.set("periods", periods);
            s.set("dump_trace", bool_flag(dump_trace));
            s.set("decimate", decimate);
            s.set("delta_p", drive.delta_p);
            s.set("span", grid.span);
            s.set("center", grid.center);
            (Kind::OracleCompare, None, s)
        }
        Command::Steady {
            pump_power,
            ladder,
            drive,
            common,
        } => {
            let mut s = settings(common)?;
            s.set("pump_power", pump_power);
            s.set("p_min", ladder.p_min);
            s.set("p_max", ladder.p_max);
            s.set("delta_p", drive.delta_p);
            (Kind::SteadyMap, None, s)
        }
        Command::Preset { name, common } => {
            let kind = if name == Preset::Fig3b {
                Kind::GainCurve
            } else {
                Kind::Spectrum
            };
            (kind, Some(name), settings(common)?)
        }
    })
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    let (kind, preset, settings) = resolve(cli.command)?;
    let (spec, params) = ExperimentSpec::build(kind, preset, &settings)?;
    let outcome = run::run(&spec, &params)?;
    output::write_all(&spec.output.dir, &outcome.artifacts)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for a in &outcome.artifacts {
        println!("wrote {}", spec.output.dir.join(&a.name).display());
    }
    if outcome.over_quota(spec.flag_quota) {
        eprintln!(
            "{}",
            serde_json::json!({ "error": {
                "kind": "numerical",
                "message": format!("{} of {} points flagged", outcome.flagged, outcome.total),
            }})
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
