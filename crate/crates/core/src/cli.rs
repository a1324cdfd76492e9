//! The `hwheel` command line.
//!
//! Exit codes: 0 clean, 1 constraint or feasibility failure, 2 usage error,
//! 3 unreadable or unparsable input file. Summaries go to standard output as
//! `key=value` lines.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::executor::{
    build_rotate_wheel_2n, format_sig9, read_trajectory, segment_drive_sign, simulate_permissive,
    validate_trajectory, write_trace_csv, write_trajectory, ExecError, FileError, SimTrace,
    Trajectory, ValidationPolicy, Violation, DEFAULT_SAMPLE_RATE, DEFAULT_SEGMENT_DURATION,
};
use crate::mechanism::{MechanismGeometry, ServoLimits, ServoState};
use crate::planner::{generate_gait, plan_distance, plan_rotation, reconfiguration_count, PlanError};
use crate::scaling::ScalingModel;
use crate::tegument::{check_integrity, IntegrityReport, Segment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hwheel", version, about = "Homeostatic wheel simulator, planner and trajectory checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    Strict,
    Lenient,
}

impl From<Policy> for ValidationPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Strict => ValidationPolicy::Strict,
            Policy::Lenient => ValidationPolicy::Lenient,
        }
    }
}

#[derive(Debug, Args)]
struct MechanismArgs {
    /// TOML file overriding `[geometry]` and `[limits.servoN]`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Wheel radius in meters (overrides the config file).
    #[arg(long)]
    radius_m: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and simulate the 2n-turn rotation routine.
    Simulate {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[command(flatten)]
        mechanism: MechanismArgs,
        #[arg(long, default_value_t = DEFAULT_SEGMENT_DURATION)]
        segment_duration_s: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        sample_rate_hz: f64,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Trace CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectory file output.
        #[arg(long)]
        traj_out: Option<PathBuf>,
    },
    /// Plan a signed wheel rotation or rolled distance from rest.
    Plan {
        #[command(flatten)]
        goal: Goal,
        #[command(flatten)]
        mechanism: MechanismArgs,
        #[arg(long, default_value_t = DEFAULT_SEGMENT_DURATION)]
        segment_duration_s: f64,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Trajectory file output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate, simulate and integrity-check a trajectory file.
    Check {
        traj: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        sample_rate_hz: f64,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Trace CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate and simulate a periodic rectifying gait.
    Gait {
        #[arg(long, default_value_t = 8.0)]
        period_s: f64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        cycles: u32,
        #[command(flatten)]
        mechanism: MechanismArgs,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        sample_rate_hz: f64,
        #[arg(long, value_enum, default_value_t = Policy::Strict)]
        policy: Policy,
        /// Trace CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trajectory file output.
        #[arg(long)]
        traj_out: Option<PathBuf>,
    },
    /// Mass, force and acceleration across wheel sizes.
    Scale {
        /// Comma-separated sizes in meters; defaults to the reference size.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lengths_m: Vec<f64>,
        #[arg(long)]
        l_ref_m: Option<f64>,
        #[arg(long)]
        m_ref_kg: Option<f64>,
        #[arg(long)]
        f_ref_n: Option<f64>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Goal {
    /// Net wheel rotation, degrees (positive rolls forward).
    #[arg(long, allow_negative_numbers = true)]
    target_deg: Option<f64>,
    /// Rolled distance, meters.
    #[arg(long, allow_negative_numbers = true)]
    distance_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    geometry: MechanismGeometry,
    #[serde(default)]
    limits: ServoLimits,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Parse(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Failure(_) => EXIT_VIOLATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::InvalidParameter(_) | PlanError::InvalidStart(_) | PlanError::Mechanism(_) => {
                CliError::Usage(e.to_string())
            }
            PlanError::NoDrivingConfiguration | PlanError::RateInfeasible { .. } => {
                CliError::Failure(e.to_string())
            }
        }
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> Self {
        match e {
            ExecError::InvalidParameter(m) => CliError::Usage(m),
            ExecError::ValidationFailure(_) => CliError::Failure(e.to_string()),
        }
    }
}

type Out<'a> = &'a mut dyn Write;

/// Runs the command line with `args` (including the program name) and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, out: Out) -> Result<i32, CliError> {
    match command {
        Command::Simulate {
            n,
            mechanism,
            segment_duration_s,
            sample_rate_hz,
            policy,
            out: trace_out,
            traj_out,
        } => {
            check_rate(sample_rate_hz)?;
            let (geometry, limits) = load_mechanism(&mechanism)?;
            let mut traj = build_rotate_wheel_2n(n as usize, segment_duration_s)?;
            traj.geometry = geometry;
            traj.limits = limits;
            let report = Report::evaluate(&traj, policy.into(), sample_rate_hz)?;
            write_outputs(&traj, &report, trace_out.as_deref(), traj_out.as_deref())?;
            if let Some(trace) = &report.trace {
                let _ = writeln!(
                    out,
                    "theta_wheel={:.9} deg, x={:.9} m",
                    trace.final_theta(),
                    trace.final_sample().x
                );
            }
            let _ = writeln!(out, "n={n}");
            report.print(out);
            Ok(report.exit_code())
        }
        Command::Plan {
            goal,
            mechanism,
            segment_duration_s,
            policy,
            out: traj_out,
        } => {
            let (geometry, limits) = load_mechanism(&mechanism)?;
            let traj = match (goal.target_deg, goal.distance_m) {
                (Some(target), None) => {
                    let mut t = plan_rotation(target, ServoState::REST, &limits, segment_duration_s)?;
                    t.geometry = geometry;
                    t
                }
                (None, Some(distance)) => {
                    if segment_duration_s != DEFAULT_SEGMENT_DURATION {
                        return Err(CliError::Usage(
                            "--segment-duration-s applies to --target-deg plans only".into(),
                        ));
                    }
                    plan_distance(distance, &geometry, ServoState::REST, &limits)?
                }
                _ => return Err(CliError::Usage("give exactly one of --target-deg and --distance-m".into())),
            };
            let report = Report::evaluate(&traj, policy.into(), DEFAULT_SAMPLE_RATE)?;
            write_outputs(&traj, &report, None, traj_out.as_deref())?;
            let engaged_sweeps = traj
                .waypoints
                .windows(2)
                .filter(|w| w[1].state.s1 != w[0].state.s1 && segment_drive_sign(&w[0].state, &w[1].state) != 0)
                .count();
            let _ = writeln!(out, "segments={}", traj.segment_count());
            let _ = writeln!(out, "engaged_sweeps={engaged_sweeps}");
            let _ = writeln!(out, "reconfigurations={}", reconfiguration_count(&traj));
            if let Some(trace) = &report.trace {
                let _ = writeln!(out, "predicted_theta_wheel_deg={:.9}", trace.final_theta());
                let _ = writeln!(out, "predicted_x_m={:.9}", trace.final_sample().x);
            }
            report.print(out);
            Ok(report.exit_code())
        }
        Command::Check {
            traj,
            sample_rate_hz,
            policy,
            out: trace_out,
        } => {
            check_rate(sample_rate_hz)?;
            let trajectory = read_trajectory(&traj)?;
            let report = Report::evaluate(&trajectory, policy.into(), sample_rate_hz)?;
            write_outputs(&trajectory, &report, trace_out.as_deref(), None)?;
            let _ = writeln!(out, "file={}", traj.display());
            let _ = writeln!(out, "segments={}", trajectory.segment_count());
            report.print(out);
            Ok(report.exit_code())
        }
        Command::Gait {
            period_s,
            cycles,
            mechanism,
            sample_rate_hz,
            policy,
            out: trace_out,
            traj_out,
        } => {
            check_rate(sample_rate_hz)?;
            let (geometry, limits) = load_mechanism(&mechanism)?;
            let mut traj = generate_gait(period_s, cycles as usize, &limits)?;
            traj.geometry = geometry;
            let report = Report::evaluate(&traj, policy.into(), sample_rate_hz)?;
            write_outputs(&traj, &report, trace_out.as_deref(), traj_out.as_deref())?;
            let _ = writeln!(out, "period_s={period_s}");
            let _ = writeln!(out, "cycles={cycles}");
            report.print(out);
            Ok(report.exit_code())
        }
        Command::Scale {
            lengths_m,
            l_ref_m,
            m_ref_kg,
            f_ref_n,
        } => {
            let d = ScalingModel::default();
            let model = ScalingModel::new(
                l_ref_m.unwrap_or(d.length_ref),
                m_ref_kg.unwrap_or(d.mass_ref),
                f_ref_n.unwrap_or(d.force_ref),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let lengths = if lengths_m.is_empty() {
                vec![model.length_ref]
            } else {
                lengths_m
            };
            let rows = lengths
                .iter()
                .map(|&l| model.scale(l))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let _ = writeln!(
                out,
                "l_ref_m={} m_ref_kg={} f_ref_n={}",
                format_sig9(model.length_ref),
                format_sig9(model.mass_ref),
                format_sig9(model.force_ref)
            );
            let first = rows[0].accel;
            for row in &rows {
                let _ = writeln!(
                    out,
                    "L_m={} mass_kg={} force_n={} accel_m_s2={} accel_ratio={}",
                    format_sig9(row.length),
                    format_sig9(row.mass),
                    format_sig9(row.force),
                    format_sig9(row.accel),
                    format_sig9(row.accel / first)
                );
            }
            Ok(EXIT_OK)
        }
    }
}

fn check_rate(rate: f64) -> Result<(), CliError> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("sample rate must be positive, got {rate}")))
    }
}

fn load_mechanism(args: &MechanismArgs) -> Result<(MechanismGeometry, ServoLimits), CliError> {
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            let cfg: ConfigFile = toml::from_str(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            cfg.limits
                .check()
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            cfg
        }
        None => ConfigFile::default(),
    };
    let mut geometry = config.geometry;
    if let Some(r) = args.radius_m {
        geometry.wheel_radius = r;
    }
    geometry.check().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((geometry, config.limits))
}

fn write_outputs(
    traj: &Trajectory,
    report: &Report,
    trace_path: Option<&Path>,
    traj_path: Option<&Path>,
) -> Result<(), CliError> {
    let io = |e: FileError| CliError::Failure(e.to_string());
    if let (Some(path), Some(trace)) = (trace_path, &report.trace) {
        write_trace_csv(path, trace).map_err(io)?;
    }
    if let Some(path) = traj_path {
        write_trajectory(path, traj).map_err(io)?;
    }
    Ok(())
}

/// Validation, simulation and integrity results for one trajectory.
struct Report {
    violations: Vec<Violation>,
    trace: Option<SimTrace>,
    integrity: Option<IntegrityReport>,
}

impl Report {
    fn evaluate(traj: &Trajectory, policy: ValidationPolicy, sample_rate: f64) -> Result<Self, CliError> {
        let violations = validate_trajectory(traj, policy);
        let (trace, integrity) = match simulate_permissive(traj, sample_rate) {
            Ok(trace) => {
                let integrity = check_integrity(&trace.ledger_history(), &traj.limits);
                (Some(trace), Some(integrity))
            }
            Err(ExecError::ValidationFailure(_)) => (None, None),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            violations,
            trace,
            integrity,
        })
    }

    fn clean(&self) -> bool {
        self.violations.is_empty() && self.integrity.as_ref().is_some_and(|r| r.ok)
    }

    fn exit_code(&self) -> i32 {
        if self.clean() {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }

    fn print(&self, out: Out) {
        if let Some(trace) = &self.trace {
            let _ = writeln!(out, "theta_wheel_deg={:.9}", trace.final_theta());
            let _ = writeln!(out, "x_m={:.9}", trace.final_sample().x);
            let s = trace.final_state();
            let _ = writeln!(out, "final_state={},{},{}", s.s1, s.s2, s.s3);
            let _ = writeln!(out, "samples={}", trace.samples.len());
            let _ = writeln!(out, "events={}", trace.events.len());
            for e in &trace.events {
                let _ = writeln!(out, "event: t={} {} {}", e.t, e.kind, e.detail);
            }
        }
        if let Some(r) = &self.integrity {
            for segment in Segment::ALL {
                let _ = writeln!(
                    out,
                    "max_twist_{}_deg={:.9}",
                    segment,
                    r.max_abs_twist.get(segment)
                );
            }
            let _ = writeln!(out, "twist_violations={}", r.violations.len());
            for v in r.violations.iter().take(20) {
                let _ = writeln!(out, "twist_violation: {v}");
            }
            let _ = writeln!(out, "integrity={}", if r.ok { "ok" } else { "violated" });
        }
        let _ = writeln!(out, "violations={}", self.violations.len());
        for v in &self.violations {
            let _ = writeln!(out, "violation: {v}");
        }
        let _ = writeln!(out, "status={}", if self.clean() { "clean" } else { "failed" });
    }
}
