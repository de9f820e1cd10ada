//! The `cubicflow` command-line surface.
//!
//! Exit codes are part of the interface:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success; for `integrate`, both directions completed the span |
//! | 1 | an identity failed (`verify`) or the run could not finish |
//! | 2 | malformed input or invalid configuration |
//! | 3 | `integrate` detected a blow-up |
//! | 4 | `integrate` stopped on step-size underflow |
//! | 5 | reading or writing a file failed |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{classify_exact, CubicCoeffs, PhasePoint};
use crate::dynamics::{classify_initial, integrate, DynamicsError, IntegratorConfig, OrbitClass};
use crate::formats::{
    cubic_strings, parse_cubic, parse_floats, parse_grid, parse_point, relative_gap,
    write_trajectory_csv, ClassVerdict, Grid, OrbitSummary, PointInput,
};
use crate::identities::{faulty_gamma, run_random, IdentitySuite, IdentityTally};
use crate::scalar::{Rational, Scalar};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const BLOW_UP: i32 = 3;
    pub const UNDERFLOW: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Parser)]
#[command(
    name = "cubicflow",
    version,
    about = "Homogeneous cubic Hamiltonians on the symplectic plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide completeness and print the class, δ and (if monomial) the weight w.
    Classify {
        #[arg(long, value_parser = parse_cubic, allow_hyphen_values = true)]
        cubic: CubicCoeffs<Rational>,
    },
    /// Integrate the flow through z0, write the trajectory CSV and print a summary.
    Integrate {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Check the exact identity suite on random integer instances.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Replace Γ by a deliberately wrong map (exercises the failure path).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Classify the orbit through z0 and predict its poles without integrating.
    Predict {
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Integrate from every node of a grid of initial points; one JSON line per node.
    Sweep {
        #[arg(long, value_parser = parse_cubic, allow_hyphen_values = true)]
        cubic: CubicCoeffs<Rational>,
        /// `p0,p1,np,q0,q1,nq`
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        integrator: IntegratorArgs,
        #[arg(long, default_value = "sweep.jsonl")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    /// `a,b,c,d`, each `n` or `n/m`.
    #[arg(long, value_parser = parse_cubic, allow_hyphen_values = true)]
    pub cubic: CubicCoeffs<Rational>,
    /// `p,q`, rationals or floats.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub z0: PointInput,
}

#[derive(Debug, Args)]
pub struct IntegratorArgs {
    /// Symmetric span `[-T, T]`.
    #[arg(long = "t", conflicts_with = "t_span")]
    pub t: Option<f64>,
    /// `T0,T1` with `T0 ≤ 0 ≤ T1`.
    #[arg(long, value_parser = parse_span, allow_hyphen_values = true)]
    pub t_span: Option<(f64, f64)>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub blowup_norm: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub max_samples: Option<usize>,
}

fn parse_span(s: &str) -> Result<(f64, f64), crate::formats::FormatError> {
    parse_floats(s, 2).map(|v| (v[0], v[1]))
}

impl IntegratorArgs {
    pub fn config(&self) -> IntegratorConfig {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            max_step: self.max_step.unwrap_or(d.max_step),
            blowup_norm: self.blowup_norm.unwrap_or(d.blowup_norm),
            t_span: match (self.t, self.t_span) {
                (Some(t), _) => (-t, t),
                (None, Some(span)) => span,
                (None, None) => d.t_span,
            },
            max_samples: self.max_samples.unwrap_or(d.max_samples),
        }
    }
}

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

type CliResult = Result<i32, Failure>;

trait WithCode<T> {
    fn code(self, code: i32) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: i32) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let line = serde_json::to_string(value).code(exit::FAILURE)?;
    writeln!(out, "{line}")
        .context("writing to standard output")
        .code(exit::IO)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .code(exit::IO)
}

fn dynamics_code(e: &DynamicsError) -> i32 {
    match e {
        DynamicsError::InvalidConfig(_) => exit::USAGE,
        _ => exit::FAILURE,
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let to_stdout = !e.use_stderr();
            let sink: &mut dyn Write = if to_stdout { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            let _ = writeln!(err, "error: {error:#}");
            code
        }
    }
}

/// Entry point of the `cubicflow` binary.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Classify { cubic } => {
            print_json(out, &ClassVerdict::from(&classify_exact(&cubic)))?;
            Ok(exit::OK)
        }
        Command::Integrate {
            orbit,
            integrator,
            out: path,
        } => cmd_integrate(&orbit, &integrator.config(), &path, out),
        Command::Verify {
            seed,
            count,
            inject_fault,
        } => cmd_verify(seed, count, inject_fault, out),
        Command::Predict { orbit } => {
            print_json(out, &OrbitSummary::new(&orbit.cubic, &orbit.z0))?;
            Ok(exit::OK)
        }
        Command::Sweep {
            cubic,
            grid,
            integrator,
            out: path,
        } => cmd_sweep(&cubic, &grid, &integrator.config(), &path, out),
    }
}

fn cmd_integrate(
    orbit: &OrbitArgs,
    cfg: &IntegratorConfig,
    path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    cfg.validate().code(exit::USAGE)?;
    let traj = integrate(&orbit.cubic, &orbit.z0.to_f64(), cfg).map_err(|e| Failure {
        code: dynamics_code(&e),
        error: e.into(),
    })?;
    let mut file = create(path)?;
    write_trajectory_csv(&traj, &mut file)
        .with_context(|| format!("writing {}", path.display()))
        .code(exit::IO)?;

    let term = traj.termination;
    let summary = OrbitSummary::new(&orbit.cubic, &orbit.z0)
        .with_run(&traj, Some(path.display().to_string()));
    print_json(out, &summary)?;
    Ok(if term.any_blow_up() {
        exit::BLOW_UP
    } else if term.any_underflow() {
        exit::UNDERFLOW
    } else {
        exit::OK
    })
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    count: u64,
    failures: u64,
    identities: IdentityTally,
}

fn cmd_verify(seed: u64, count: u64, inject_fault: bool, out: &mut dyn Write) -> CliResult {
    let suite = if inject_fault {
        IdentitySuite::with_gamma(faulty_gamma)
    } else {
        IdentitySuite::default()
    };
    let tally = run_random(&suite, seed, count);
    let report = VerifyReport {
        seed,
        count,
        failures: tally.total_failures(),
        identities: tally,
    };
    print_json(out, &report)?;
    Ok(if report.failures == 0 {
        exit::OK
    } else {
        exit::FAILURE
    })
}

/// One line of `cubicflow sweep` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    pub z0: [f64; 2],
    pub class: OrbitClass,
    pub critical: bool,
    pub psi0: f64,
    pub f0: f64,
    pub g3: f64,
    pub blow_up: bool,
    pub measured_forward: Option<f64>,
    pub measured_backward: Option<f64>,
    pub predicted_forward: Option<f64>,
    pub predicted_backward: Option<f64>,
    /// Largest relative gap between measured and predicted poles.
    pub rel_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Integrates from one grid node. Pure, so nodes can run in parallel.
pub fn sweep_point<S: Scalar>(
    c: &CubicCoeffs<S>,
    z0: &PhasePoint<f64>,
    cfg: &IntegratorConfig,
) -> SweepLine {
    let report = classify_initial(&c.to_f64(), z0);
    let mut line = SweepLine {
        z0: [z0.p, z0.q],
        class: report.initial_class,
        critical: report.initial_class == OrbitClass::Critical,
        psi0: report.psi0,
        f0: report.f0,
        g3: report.g3,
        blow_up: false,
        measured_forward: None,
        measured_backward: None,
        predicted_forward: report.predicted_pole_forward,
        predicted_backward: report.predicted_pole_backward,
        rel_gap: None,
        error: None,
    };
    match integrate(c, z0, cfg) {
        Ok(traj) => {
            let t = traj.termination;
            line.blow_up = t.any_blow_up();
            line.measured_forward = t.forward.blow_up_time();
            line.measured_backward = t.backward.blow_up_time();
            line.rel_gap = [
                relative_gap(line.measured_forward, line.predicted_forward),
                relative_gap(line.measured_backward, line.predicted_backward),
            ]
            .into_iter()
            .flatten()
            .reduce(f64::max);
        }
        Err(e) => line.error = Some(e.to_string()),
    }
    line
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    cubic: [String; 4],
    class: &'static str,
    points: usize,
    critical: usize,
    blow_ups: usize,
    errors: usize,
    out: &'a str,
}

fn cmd_sweep(
    cubic: &CubicCoeffs<Rational>,
    grid: &Grid,
    cfg: &IntegratorConfig,
    path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    cfg.validate().code(exit::USAGE)?;
    let lines: Vec<SweepLine> = grid
        .points()
        .par_iter()
        .map(|z0| sweep_point(cubic, z0, cfg))
        .collect();

    let mut file = create(path)?;
    for line in &lines {
        let text = serde_json::to_string(line).code(exit::FAILURE)?;
        writeln!(file, "{text}")
            .with_context(|| format!("writing {}", path.display()))
            .code(exit::IO)?;
    }
    file.flush()
        .with_context(|| format!("writing {}", path.display()))
        .code(exit::IO)?;

    let display = path.display().to_string();
    print_json(
        out,
        &SweepSummary {
            cubic: cubic_strings(cubic),
            class: classify_exact(cubic).kind.name(),
            points: lines.len(),
            critical: lines.iter().filter(|l| l.critical).count(),
            blow_ups: lines.iter().filter(|l| l.blow_up).count(),
            errors: lines.iter().filter(|l| l.error.is_some()).count(),
            out: &display,
        },
    )?;
    if let Some(bad) = lines.iter().find_map(|l| l.error.as_ref()) {
        return Err(Failure {
            code: exit::FAILURE,
            error: anyhow!("some grid points failed, first: {bad}"),
        });
    }
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("cubicflow").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn classify_examples() {
        let (code, out, _) = run_capture(&["classify", "--cubic", "1,0,0,0"]);
        assert_eq!(code, 0);
        assert_eq!(
            out.trim(),
            r#"{"class":"MonomialComplete","w":["0","-1"],"delta_disc":"0"}"#
        );
        let (code, out, _) = run_capture(&["classify", "--cubic", "0,1,1,0"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), r#"{"class":"Definite","delta_disc":"-3"}"#);
        let (code, _, err) = run_capture(&["classify", "--cubic", "1,0,0,x"]);
        assert_eq!(code, 2);
        assert!(err.contains("1,0,0,x"), "{err}");
    }

    #[test]
    fn negative_leading_values_parse() {
        let (code, out, _) = run_capture(&["classify", "--cubic", "-1,0,0,0"]);
        assert_eq!(code, 0);
        assert!(out.contains(r#""w":["0","1"]"#), "{out}");
    }

    #[test]
    fn t_and_t_span_conflict() {
        let (code, _, _) = run_capture(&[
            "integrate",
            "--cubic",
            "1,0,0,0",
            "--z0",
            "1,0",
            "--t",
            "1",
            "--t-span",
            "-1,1",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn span_flags() {
        let args = |t: Option<f64>, span: Option<(f64, f64)>| IntegratorArgs {
            t,
            t_span: span,
            rel_tol: None,
            abs_tol: None,
            blowup_norm: Some(1e6),
            max_step: None,
            max_samples: None,
        };
        assert_eq!(args(Some(2.0), None).config().t_span, (-2.0, 2.0));
        assert_eq!(args(None, Some((-1.0, 3.0))).config().t_span, (-1.0, 3.0));
        assert_eq!(
            args(None, None).config().t_span,
            IntegratorConfig::default().t_span
        );
        assert_eq!(args(None, None).config().blowup_norm, 1e6);
    }

    #[test]
    fn verify_tally_and_fault() {
        let (code, out, _) = run_capture(&["verify", "--seed", "1", "--count", "20"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["failures"], 0);
        assert_eq!(v["identities"]["gamma_symmetry"]["pass"], 20);
        let (code, _, _) = run_capture(&["verify", "--count", "20", "--inject-fault"]);
        assert_eq!(code, 1);
        let (code, out, _) = run_capture(&["verify", "--count", "0"]);
        assert_eq!(code, 0);
        assert!(out.contains(r#""failures":0"#));
    }

    #[test]
    fn predict_reports_exact_invariants() {
        let (code, out, _) = run_capture(&["predict", "--cubic", "0,1,1,0", "--z0", "1,1"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["exact"]["g3"], "108");
        assert_eq!(v["initial_class"], "Generic");
        let t = v["predicted_pole_forward"].as_f64().unwrap();
        assert!((t - 0.70109105266).abs() < 1e-9, "{t}");
        assert!(v.get("termination").is_none());
    }

    #[test]
    fn sweep_point_flags_critical() {
        let c = CubicCoeffs::new(0.0, 1.0, 1.0, 0.0);
        let line = sweep_point(
            &c,
            &PhasePoint::new(0.0, 0.0),
            &IntegratorConfig::symmetric(1.0),
        );
        assert!(line.critical && !line.blow_up && line.rel_gap.is_none());
        let line = sweep_point(
            &c,
            &PhasePoint::new(1.0, 1.0),
            &IntegratorConfig::symmetric(2.0),
        );
        assert!(line.blow_up && line.rel_gap.unwrap() <= 1e-5, "{line:?}");
    }
}
