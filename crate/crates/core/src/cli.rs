//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 verification failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::average::{
    coefficients, minimize_avg_deviation, numeric_avg_deviation, DEFAULT_SUBDIVISIONS,
};
use crate::check::{run_battery, Formulas};
use crate::deviation::{deviation_complex, deviation_sum_of_squares, deviation_trig};
use crate::domain::{Epsilon, EpsilonRange, PhaseShifts};
use crate::error::Error;
use crate::simulator::{
    default_target, fixed_point_step, measure_deviation, prescribed_overlap_unitary_at,
    random_unitary, recursion_trace, UnitaryMatrix, DEFAULT_START,
};
use crate::sweep::{
    format_sig17, minimizer_json, sweep_avg_equal, sweep_deviation, sweep_minimizer_map,
    write_avg_csv, write_deviation_csv, write_minimizer_csv, Axis, MinimizerEntry, SweepSpec,
    DEFAULT_SWEEP_EPSILON,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Plain,
}

#[derive(Debug, Parser)]
#[command(name = "fpsearch", version, about = "Fixed-point quantum search with unequal phase shifts")]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Interpret --theta and --phi as degrees.
    #[arg(long, global = true)]
    pub degrees: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-step deviation D(theta, phi; epsilon).
    Dev(DevArgs),
    /// Average deviation over an epsilon range.
    Avg(AvgArgs),
    /// Phase shifts minimizing the average deviation.
    Optimal(RangeArgs),
    /// Grid sweeps written as CSV or JSON.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Statevector simulation of the fixed-point step.
    Simulate(SimulateArgs),
    /// Randomized property battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct DevArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: f64,
    /// Print the complex, trigonometric and sum-of-squares forms.
    #[arg(long)]
    pub all_forms: bool,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long, default_value_t = 0.75, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct AvgArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: f64,
    #[command(flatten)]
    pub range: RangeArgs,
    /// Also report the Simpson estimate with this many subdivisions.
    #[arg(long)]
    pub subdivisions: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// D(theta, phi) over a grid.
    Deviation(SweepDeviationArgs),
    /// Equal-shift average deviation over theta in [0, pi].
    Avg(SweepAvgArgs),
    /// Minimizer reports over a (beta, alpha) grid.
    Minimizer(SweepMinimizerArgs),
}

#[derive(Debug, Args)]
pub struct SweepDeviationArgs {
    #[arg(long, default_value_t = DEFAULT_SWEEP_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 61)]
    pub theta_points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub phi_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub phi_max: f64,
    #[arg(long, default_value_t = 61)]
    pub phi_points: usize,
    /// Sweep epsilon over [--epsilon-min, --epsilon-max] instead of fixing it.
    #[arg(long, default_value_t = 1)]
    pub epsilon_points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_max: f64,
}

#[derive(Debug, Args)]
pub struct SweepAvgArgs {
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value_t = 181)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct SweepMinimizerArgs {
    #[arg(long, default_value_t = 0.0)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 11)]
    pub beta_points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 11)]
    pub alpha_points: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Build U with 1 - |U_ts|^2 equal to this value; otherwise U is Haar random.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Recursion levels to compose (0 applies a single step).
    #[arg(long, default_value_t = 0)]
    pub depth: usize,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub target: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let flag = match &e {
            Error::NonFinite { name, .. } | Error::OutOfRange { name, .. } => Some(*name),
            Error::DegenerateRange { .. } => Some("beta/--alpha"),
            _ => None,
        };
        match flag {
            Some(name) => Failure::usage(format!("invalid value for --{name}: {e}")),
            None => Failure::usage(e.to_string()),
        }
    }
}

fn angle(v: f64, degrees: bool) -> f64 {
    if degrees {
        v.to_radians()
    } else {
        v
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn kv(lines: &[(&str, String)]) -> String {
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    lines
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn run_dev(a: &DevArgs, format: Format, degrees: bool) -> Result<String, Failure> {
    let shifts = PhaseShifts::new(angle(a.theta, degrees), angle(a.phi, degrees))?;
    let eps = Epsilon::new(a.epsilon)?;
    let trig = deviation_trig(&shifts, eps).value();
    let forms = a.all_forms.then(|| {
        let complex = deviation_complex(&shifts, eps).value();
        let sos = deviation_sum_of_squares(&shifts, eps).value();
        let spread = (complex - trig).abs().max((complex - sos).abs()).max((trig - sos).abs());
        (complex, sos, spread)
    });
    Ok(match format {
        Format::Plain => match forms {
            None => format!("{}\n", format_sig17(trig)),
            Some((complex, sos, spread)) => kv(&[
                ("complex", format_sig17(complex)),
                ("trig", format_sig17(trig)),
                ("sum_of_squares", format_sig17(sos)),
                ("max_pairwise_difference", format!("{spread:e}")),
            ]),
        },
        Format::Json => {
            let mut v = json!({
                "theta": shifts.theta(),
                "phi": shifts.phi(),
                "epsilon": eps.value(),
                "deviation": trig,
            });
            if let Some((complex, sos, spread)) = forms {
                v["complex"] = json!(complex);
                v["trig"] = json!(trig);
                v["sum_of_squares"] = json!(sos);
                v["max_pairwise_difference"] = json!(spread);
            }
            json_text(&v)
        }
        Format::Csv => {
            let mut s = String::from("theta,phi,epsilon,deviation");
            if forms.is_some() {
                s.push_str(",complex,sum_of_squares");
            }
            s.push('\n');
            let mut fields = vec![shifts.theta(), shifts.phi(), eps.value(), trig];
            if let Some((complex, sos, _)) = forms {
                fields.extend([complex, sos]);
            }
            let row: Vec<String> = fields.into_iter().map(format_sig17).collect();
            s.push_str(&row.join(","));
            s.push('\n');
            s
        }
    })
}

fn run_avg(a: &AvgArgs, format: Format, degrees: bool) -> Result<String, Failure> {
    let shifts = PhaseShifts::new(angle(a.theta, degrees), angle(a.phi, degrees))?;
    let range = EpsilonRange::new(a.range.beta, a.range.alpha)?;
    let c = coefficients(range);
    let value = c.avg_deviation(&shifts);
    let numeric = match a.subdivisions {
        Some(n) => Some(numeric_avg_deviation(&shifts, range, n)?),
        None => None,
    };
    let (pt, pp) = (c.partial_theta(&shifts), c.partial_phi(&shifts));
    Ok(match format {
        Format::Plain => {
            let mut lines = vec![
                ("avg_deviation", format_sig17(value)),
                ("a", format_sig17(c.a)),
                ("b", format_sig17(c.b)),
                ("partial_theta", format_sig17(pt)),
                ("partial_phi", format_sig17(pp)),
            ];
            if let Some(n) = numeric {
                lines.push(("numeric_avg_deviation", format_sig17(n)));
                lines.push(("numeric_residual", format!("{:e}", (n - value).abs())));
            }
            kv(&lines)
        }
        Format::Json => {
            let mut v = json!({
                "theta": shifts.theta(),
                "phi": shifts.phi(),
                "beta": range.beta(),
                "alpha": range.alpha(),
                "avg_deviation": value,
                "a": c.a,
                "b": c.b,
                "partial_theta": pt,
                "partial_phi": pp,
            });
            if let Some(n) = numeric {
                v["numeric_avg_deviation"] = json!(n);
                v["subdivisions"] = json!(a.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS));
            }
            json_text(&v)
        }
        Format::Csv => {
            let row: Vec<String> = [shifts.theta(), shifts.phi(), range.beta(), range.alpha(), value]
                .into_iter()
                .map(format_sig17)
                .collect();
            format!("theta,phi,beta,alpha,avg_deviation\n{}\n", row.join(","))
        }
    })
}

fn run_optimal(a: &RangeArgs, format: Format) -> Result<String, Failure> {
    let range = EpsilonRange::new(a.beta, a.alpha)?;
    let r = minimize_avg_deviation(range);
    let c = coefficients(range);
    Ok(match format {
        Format::Plain => kv(&[
            ("theta_star", format_sig17(r.theta_star)),
            ("phi_star", format_sig17(r.phi_star)),
            ("min_value", format_sig17(r.min_value)),
            ("case_label", r.case_label.as_str().into()),
            ("a_over_b", format_sig17(c.ratio())),
            ("value_at_pi", format_sig17(r.value_at_pi)),
        ]),
        Format::Json => json_text(&serde_json::to_value(MinimizerEntry::solved(range, &r)).expect("serializes")),
        Format::Csv => format!(
            "beta,alpha,theta_star,min_value,case_label\n{},{},{},{},{}\n",
            format_sig17(range.beta()),
            format_sig17(range.alpha()),
            format_sig17(r.theta_star),
            format_sig17(r.min_value),
            r.case_label.as_str()
        ),
    })
}

fn io_text(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

fn run_sweep(cmd: &SweepCommand, format: Option<Format>) -> Result<String, Failure> {
    match cmd {
        SweepCommand::Deviation(a) => {
            let epsilon = if a.epsilon_points > 1 {
                Axis::new(a.epsilon_min, a.epsilon_max, a.epsilon_points)?
            } else {
                Axis::fixed(a.epsilon)
            };
            let spec = SweepSpec {
                theta: Axis::new(a.theta_min, a.theta_max, a.theta_points)?,
                phi: Axis::new(a.phi_min, a.phi_max, a.phi_points)?,
                epsilon,
            };
            let records = sweep_deviation(&spec)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Json => json_text(&serde_json::to_value(&records).expect("serializes")),
                _ => io_text(|w| write_deviation_csv(&records, w)),
            })
        }
        SweepCommand::Avg(a) => {
            let range = EpsilonRange::new(a.range.beta, a.range.alpha)?;
            let records = sweep_avg_equal(range, a.points)?;
            Ok(match format.unwrap_or(Format::Csv) {
                Format::Json => json_text(&serde_json::to_value(&records).expect("serializes")),
                _ => io_text(|w| write_avg_csv(&records, w)),
            })
        }
        SweepCommand::Minimizer(a) => {
            let beta = Axis::new(a.beta_min, a.beta_max, a.beta_points)?;
            let alpha = Axis::new(a.alpha_min, a.alpha_max, a.alpha_points)?;
            let cells = sweep_minimizer_map(&beta, &alpha)?;
            Ok(match format.unwrap_or(Format::Json) {
                Format::Csv => io_text(|w| write_minimizer_csv(&cells, w)),
                _ => json_text(&minimizer_json(&cells)),
            })
        }
    }
}

fn run_simulate(a: &SimulateArgs, format: Format, degrees: bool) -> Result<String, Failure> {
    let shifts = PhaseShifts::new(angle(a.theta, degrees), angle(a.phi, degrees))?;
    if a.dim < 2 {
        return Err(Error::DimensionTooSmall(a.dim).into());
    }
    let s = a.start.unwrap_or(DEFAULT_START);
    let t = a.target.unwrap_or_else(|| default_target(a.dim));
    let u: UnitaryMatrix = match a.epsilon {
        Some(e) => {
            let eps = Epsilon::new(e)?;
            prescribed_overlap_unitary_at(a.dim, s, t, eps.success_probability().sqrt(), a.seed)?
        }
        None => random_unitary(a.dim, a.seed)?,
    };
    let eps = u.epsilon(s, t);
    let psi = fixed_point_step(&u, s, t, &shifts)?;
    let measured = measure_deviation(&psi, t);
    let closed = deviation_trig(&shifts, Epsilon::new(eps.clamp(0.0, 1.0))?).value();
    let trace = if a.depth > 0 {
        Some(recursion_trace(&u, s, t, &shifts, a.depth)?)
    } else {
        None
    };

    Ok(match format {
        Format::Plain => {
            let mut out = kv(&[
                ("dim", a.dim.to_string()),
                ("epsilon", format_sig17(eps)),
                ("measured_deviation", format_sig17(measured)),
                ("closed_form_deviation", format_sig17(closed)),
                ("residual", format!("{:e}", (measured - closed).abs())),
                ("state_norm_squared", format_sig17(psi.norm_squared())),
            ]);
            if let Some(trace) = &trace {
                out.push_str("level  measured                 iterated                 underflow\n");
                for l in &trace.levels {
                    out.push_str(&format!(
                        "{:<5}  {:<23}  {:<23}  {}\n",
                        l.level,
                        format_sig17(l.measured),
                        format_sig17(l.iterated),
                        l.underflow
                    ));
                }
            }
            out
        }
        Format::Json => {
            let mut v = json!({
                "dim": a.dim,
                "seed": a.seed,
                "theta": shifts.theta(),
                "phi": shifts.phi(),
                "epsilon": eps,
                "measured_deviation": measured,
                "closed_form_deviation": closed,
                "residual": (measured - closed).abs(),
            });
            if let Some(trace) = &trace {
                v["trace"] = serde_json::to_value(&trace.levels).expect("serializes");
            }
            json_text(&v)
        }
        Format::Csv => match &trace {
            Some(trace) => {
                let mut s = String::from("level,measured,iterated,underflow\n");
                for l in &trace.levels {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        l.level,
                        format_sig17(l.measured),
                        format_sig17(l.iterated),
                        l.underflow
                    ));
                }
                s
            }
            None => format!(
                "dim,epsilon,measured_deviation,closed_form_deviation\n{},{},{},{}\n",
                a.dim,
                format_sig17(eps),
                format_sig17(measured),
                format_sig17(closed)
            ),
        },
    })
}

fn run_verify(a: &VerifyArgs, format: Format) -> Result<(String, bool), Failure> {
    if a.samples == 0 {
        return Err(Failure::usage("invalid value for --samples: must be at least 1"));
    }
    let report = run_battery(a.samples, a.seed, &Formulas::default());
    let ok = report.all_passed();
    let text = match format {
        Format::Json => json_text(&serde_json::to_value(&report).expect("serializes")),
        Format::Csv => {
            let mut s = String::from("property,cases,passed,worst_residual,tolerance,ok\n");
            for p in &report.properties {
                s.push_str(&format!(
                    "{},{},{},{:e},{:e},{}\n",
                    p.name,
                    p.cases,
                    p.passed,
                    p.worst_residual,
                    p.tolerance,
                    p.ok()
                ));
            }
            s
        }
        Format::Plain => {
            let mut s: String = report.properties.iter().map(|p| format!("{p}\n")).collect();
            s.push_str(if ok { "all properties passed\n" } else { "verification FAILED\n" });
            s
        }
    };
    Ok((text, ok))
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `stdout` (or `--out`) and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };

    let plain = cli.format.unwrap_or(Format::Plain);
    let result = match &cli.command {
        Command::Dev(a) => run_dev(a, plain, cli.degrees).map(|s| (s, true)),
        Command::Avg(a) => run_avg(a, plain, cli.degrees).map(|s| (s, true)),
        Command::Optimal(a) => run_optimal(a, plain).map(|s| (s, true)),
        Command::Sweep(c) => run_sweep(c, cli.format).map(|s| (s, true)),
        Command::Simulate(a) => run_simulate(a, plain, cli.degrees).map(|s| (s, true)),
        Command::Verify(a) => run_verify(a, plain),
    };

    match result {
        Ok((text, ok)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, text.as_bytes())
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                let _ = writeln!(stderr, "error: {msg}");
                return EXIT_USAGE;
            }
            if ok {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
