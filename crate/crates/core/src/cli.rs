//! Command-line front end.
//!
//! Exit codes: 0 success, 2 user/config error, 3 solver error, 4 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analytic::{interference_intensity, probe_modified_coherence, resonant_summary};
use crate::error::Error;
use crate::experiments::{figure_with, run_sweep_with, summarize, FigureId, Method, SweepSpec};
use crate::liouvillian::Liouvillian;
use crate::model::Config;
use crate::steady::{solve_steady, steady_convergence_report};
use crate::waveguide::{j_scale, to_na, total_field};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "CYCLIC_EMISSION_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "cyclic-emission",
    version,
    about = "Steady-state microwave emission and probe scattering of a driven cyclic three-level atom"
)]
struct Cli {
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one configuration and print the steady state and line fields.
    Steady {
        #[arg(long)]
        config: PathBuf,
        /// Optional JSON report file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Write the dataset for one figure as <ID>.csv and <ID>.meta.json.
    Figure {
        /// 3a, 3b, 4a, 4b, 5a, 5b or 5b-inset.
        id: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override grid sizes, comma separated (one per axis).
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<usize>>,
    },
    /// Run a sweep spec; writes the CSV to --out and a .meta.json sidecar.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's method.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Check a configuration file against the parameter invariants.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Numeric,
    Analytic,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Numeric => Method::Numeric,
            MethodArg::Analytic => Method::Analytic,
            MethodArg::Both => Method::Both,
        }
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn user(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USER,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_USER;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn threads(cli_threads: Option<usize>) -> usize {
    cli_threads
        .or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok())
        .unwrap_or(0)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let threads = threads(cli.threads);
    match cli.command {
        Command::Steady {
            config,
            out: json_out,
            method,
        } => cmd_steady(&config, json_out.as_deref(), method.into(), out),
        Command::Figure { id, out: dir, points } => {
            cmd_figure(&id, &dir, points.as_deref(), threads, out)
        }
        Command::Sweep {
            config,
            out: path,
            method,
        } => cmd_sweep(&config, &path, method.map(Into::into), threads, out),
        Command::Validate { config } => cmd_validate(&config, out),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = read_text(path)?;
    let config = Config::from_json(&text)
        .map_err(|e| CliError::user(format!("{}: schema violation: {e}", path.display())))?;
    config
        .validate()
        .into_result()
        .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::io(e.to_string())
}

/// Rounds to four significant digits for human-readable output.
pub fn sig4(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-3..5).contains(&mag) {
        format!("{x:.3e}")
    } else {
        let decimals = (3 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

fn cmd_steady(
    path: &Path,
    json_out: Option<&Path>,
    method: Method,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let config = load_config(path)?;
    let (atom, drives) = (&config.atom, &config.drives);
    let l = Liouvillian::new(atom, drives);
    let rho = solve_steady(&l).map_err(|e| CliError::solver(e.to_string()))?;
    let field = total_field(atom, drives, rho.rho21());
    let j = j_scale(atom);
    let [p1, p2, p3] = rho.populations();
    let show_numeric = method != Method::Analytic;
    let show_analytic = method != Method::Numeric;

    let mut report = json!({ "config": config, "j_na": to_na(j) });
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io_err);

    w(out, format!("J = {} nA", sig4(to_na(j))))?;
    if show_numeric {
        w(out, "numeric steady state:".into())?;
        w(
            out,
            format!("  rho11 = {}  rho22 = {}  rho33 = {}", sig4(p1), sig4(p2), sig4(p3)),
        )?;
        let r21 = rho.rho21();
        w(
            out,
            format!("  |rho21| = {}  arg(rho21) = {} rad", sig4(r21.norm()), sig4(r21.arg())),
        )?;
        w(out, format!("  |I_g| = {} nA", sig4(to_na(field.i_generated.norm()))))?;
        report["numeric"] = json!({
            "populations": [p1, p2, p3],
            "rho21": { "re": r21.re, "im": r21.im, "mag": r21.norm(), "phase": r21.arg() },
            "ig_na": to_na(field.i_generated.norm()),
        });
        if let Some(t) = field.t {
            w(
                out,
                format!(
                    "  t = {} {} {}i  |t|^2 = {}  |I_t| = {} nA",
                    sig4(t.re),
                    if t.im < 0.0 { "-" } else { "+" },
                    sig4(t.im.abs()),
                    sig4(t.norm_sqr()),
                    sig4(to_na(field.i_total_right.norm()))
                ),
            )?;
            report["numeric"]["t"] = json!({ "re": t.re, "im": t.im });
            report["numeric"]["t2"] = json!(t.norm_sqr());
            report["numeric"]["it_na"] = json!(to_na(field.i_total_right.norm()));
        }
        let conv = steady_convergence_report(&l);
        w(
            out,
            format!("  spectral gap = {} rad/us", sig4(conv.spectral_gap)),
        )?;
        report["numeric"]["spectral_gap"] = json!(conv.spectral_gap);
        if conv.slow_mixing {
            w(out, "  warning: slow mixing (tiny spectral gap)".into())?;
        }
    }
    if show_analytic {
        w(out, "closed forms:".into())?;
        let mut analytic = json!({});
        match resonant_summary(atom, drives) {
            Ok(s) => {
                w(
                    out,
                    format!(
                        "  A = {} MHz^3  rho11 = {}  rho22 = {}  rho33 = {}  |I_g| = {} nA",
                        sig4(s.a_norm),
                        sig4(s.rho11),
                        sig4(s.rho22),
                        sig4(s.rho33),
                        sig4(to_na(j * s.rho21.norm()))
                    ),
                )?;
                analytic["a_norm"] = json!(s.a_norm);
                analytic["populations"] = json!(s.populations());
                analytic["ig_na"] = json!(to_na(j * s.rho21.norm()));
            }
            Err(e) => w(out, format!("  resonant summary n/a ({e})"))?,
        }
        if drives.probe_on() {
            if let (Ok(i), Ok(r)) = (
                interference_intensity(atom, drives),
                probe_modified_coherence(atom, drives),
            ) {
                let it = to_na(j * drives.rabi_21.mag_mhz / atom.gamma_pop_21 * i.factor);
                w(
                    out,
                    format!(
                        "  alpha = {}  Theta = {} rad  |I_t| = {} nA  |rho'21| = {}",
                        sig4(i.alpha),
                        sig4(i.theta),
                        sig4(it),
                        sig4(r.norm())
                    ),
                )?;
                analytic["alpha"] = json!(i.alpha);
                analytic["theta"] = json!(i.theta);
                analytic["it_na"] = json!(it);
            }
        }
        report["analytic"] = analytic;
    }
    for warning in config.validate().warnings {
        w(out, format!("warning: {warning}"))?;
    }
    if let Some(p) = json_out {
        let text = serde_json::to_string_pretty(&report).map_err(io_err)?;
        fs::write(p, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
    }
    Ok(EXIT_OK)
}

fn cmd_figure(
    id: &str,
    dir: &Path,
    points: Option<&[usize]>,
    threads: usize,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let fig: FigureId = id.parse().map_err(|e: Error| CliError::user(e.to_string()))?;
    let default_points = fig.default_points();
    let points = points.unwrap_or(&default_points);
    let result = figure_with(fig, points, threads).map_err(|e| CliError::user(e.to_string()))?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let (csv, meta) = result
        .write_files(dir, fig.as_str())
        .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    writeln!(out, "figure {fig}: {} points", result.len()).map_err(io_err)?;
    write_summary(&result, out)?;
    writeln!(out, "wrote {} and {}", csv.display(), meta.display()).map_err(io_err)?;
    Ok(EXIT_OK)
}

fn write_summary(
    result: &crate::experiments::SweepResult,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let at = |c: &[f64]| {
        c.iter()
            .zip(&result.axis_names)
            .map(|(v, n)| format!("{n}={}", sig4(*v)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    for s in summarize(result) {
        writeln!(
            out,
            "  {}: max {} at ({}), min {} at ({})",
            s.column,
            sig4(s.max),
            at(&s.max_at),
            sig4(s.min),
            at(&s.min_at)
        )
        .map_err(io_err)?;
    }
    if let Some(d) = result.max_disagreement() {
        writeln!(out, "  max numeric/analytic disagreement: {d:.3e}").map_err(io_err)?;
    }
    if result.failed_points() > 0 {
        writeln!(out, "  failed points: {}", result.failed_points()).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_sweep(
    spec_path: &Path,
    out_path: &Path,
    method: Option<Method>,
    threads: usize,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let text = read_text(spec_path)?;
    let mut spec = SweepSpec::from_json(&text)
        .map_err(|e| CliError::user(format!("{}: schema violation: {e}", spec_path.display())))?;
    if let Some(m) = method {
        spec.method = m;
    }
    spec.validate()
        .map_err(|e| CliError::user(format!("{}: {e}", spec_path.display())))?;
    let result = run_sweep_with(&spec, threads).map_err(|e| CliError::user(e.to_string()))?;

    let io = |e: std::io::Error| CliError::io(format!("{}: {e}", out_path.display()));
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let file = fs::File::create(out_path).map_err(io)?;
    result
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| CliError::io(e.to_string()))?;
    let meta_path = sidecar_path(out_path);
    let meta = serde_json::to_string_pretty(&result.sidecar()).map_err(io_err)?;
    fs::write(&meta_path, meta + "\n").map_err(io)?;

    writeln!(out, "sweep: {} points", result.len()).map_err(io_err)?;
    write_summary(&result, out)?;
    writeln!(out, "wrote {} and {}", out_path.display(), meta_path.display()).map_err(io_err)?;

    if result.failed_points() == result.len() {
        return Err(CliError::solver("every grid point failed"));
    }
    Ok(EXIT_OK)
}

/// `results.csv` → `results.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = read_text(path)?;
    let config = Config::from_json(&text)
        .map_err(|e| CliError::user(format!("{}: schema violation: {e}", path.display())))?;
    let report = config.validate();
    for w in &report.warnings {
        writeln!(out, "warning: {w}").map_err(io_err)?;
    }
    if report.is_ok() {
        writeln!(out, "ok").map_err(io_err)?;
        Ok(EXIT_OK)
    } else {
        let msg = report
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(CliError::user(format!("{}: {msg}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig4_rounding() {
        assert_eq!(sig4(0.518189), "0.5182");
        assert_eq!(sig4(0.16355140), "0.1636");
        assert_eq!(sig4(3.16836), "3.168");
        assert_eq!(sig4(262150.0), "2.622e5");
        assert_eq!(sig4(1234.56), "1235");
        assert_eq!(sig4(5.96e-5), "5.960e-5");
        assert_eq!(sig4(0.0), "0");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.meta.json")
        );
    }

    #[test]
    fn unknown_subcommand_is_user_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["cyclic-emission", "plot"], &mut o, &mut e), EXIT_USER);
    }

    #[test]
    fn unknown_figure_is_user_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(["cyclic-emission", "figure", "9z", "--out", "/tmp"], &mut o, &mut e);
        assert_eq!(code, EXIT_USER);
        assert!(String::from_utf8(e).unwrap().contains("unknown figure"));
    }
}
