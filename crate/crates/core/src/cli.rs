//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 numerical
//! failure.

use crate::dynamics::{build_drift, stability};
use crate::meanfield::{solve_mean_field, MeanFieldError, MeanFieldMode};
use crate::model::{ParamField, SystemParams};
use crate::sweep::{
    emit_csv, evaluate_point, run_sweep, Axis, Observable, PointStatus, SweepError, SweepSpec,
    DEFAULT_COUNT_1D, DEFAULT_COUNT_2D,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mcom", version, about = "Steady-state entanglement simulator")]
pub struct Cli {
    /// JSON file with parameter values (and sweep axes for `sweep`).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Data destination; CSV for sweeps, JSON otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Override one field after the config is loaded. Repeatable.
    #[arg(long = "set", global = true, value_name = "FIELD=VALUE")]
    pub overrides: Vec<String>,
    /// Mean-field mode.
    #[arg(long, global = true, value_name = "paper|exact")]
    pub mode: Option<MeanFieldMode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical steady state and effective couplings.
    SteadyState,
    /// Drift-matrix spectrum and stability verdict.
    Stability,
    /// Bipartite logarithmic negativities at one point.
    Entangle,
    /// Sweep described by the config file.
    Sweep,
    /// Built-in sweep for one figure.
    Reproduce { figure: Figure },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2a,
    Fig2b,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io(_) | SweepError::Csv(_) => Self::config(format!("output: {e}")),
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<MeanFieldError> for CliError {
    fn from(e: MeanFieldError) -> Self {
        match e {
            MeanFieldError::Params(p) => Self::config(p.to_string()),
            e => Self::numerical(format!("mean field: {e}")),
        }
    }
}

fn axis(field: ParamField, min: f64, max: f64, count: usize) -> Axis {
    Axis::linear(field, min, max, count).expect("preset axis")
}

/// Two-run comparison without and with the amplifier.
fn gain_runs() -> Axis {
    axis(ParamField::LambdaOpa, 0.0, 0.2, 2)
}

const BOTH_PAIRS: [Observable; 2] = [Observable::ECB2, Observable::EB1B2];

/// Built-in sweep for `figure` on top of the reference parameter set.
pub fn reproduce(figure: Figure) -> SweepSpec<f64> {
    let mut base = SystemParams::<f64>::default();
    let set = |p: &mut SystemParams<f64>, f: ParamField, x: f64| p.set(f, x).expect("preset value");
    let drive_axis = axis(ParamField::Drive, 0.0, 60.0, DEFAULT_COUNT_2D);
    match figure {
        Figure::Fig2a => SweepSpec::new(base, drive_axis, vec![Observable::Stability])
            .with_axis_2(axis(ParamField::LambdaOpa, 0.0, 0.5, DEFAULT_COUNT_2D)),
        Figure::Fig2b => SweepSpec::new(base, drive_axis, vec![Observable::Stability])
            .with_axis_2(axis(ParamField::NTotal, 50.0, 200.0, DEFAULT_COUNT_2D)),
        Figure::Fig3 => SweepSpec::new(base, drive_axis, BOTH_PAIRS.to_vec())
            .with_axis_2(axis(ParamField::LambdaOpa, 0.0, 0.5, DEFAULT_COUNT_2D)),
        Figure::Fig4 => {
            set(&mut base, ParamField::MSplit, 0.0);
            set(&mut base, ParamField::Drive, 16.0);
            SweepSpec::new(base, axis(ParamField::NTotal, 1.0, 100.0, 100), BOTH_PAIRS.to_vec())
                .with_axis_2(gain_runs())
        }
        Figure::Fig5 => {
            set(&mut base, ParamField::Drive, 50.0);
            SweepSpec::new(base, axis(ParamField::MSplit, 0.0, 100.0, 101), BOTH_PAIRS.to_vec())
        }
        Figure::Fig6 => {
            set(&mut base, ParamField::Drive, 16.0);
            SweepSpec::new(
                base,
                axis(ParamField::DeltaA, 0.0, 2.5, DEFAULT_COUNT_1D),
                BOTH_PAIRS.to_vec(),
            )
            .with_axis_2(gain_runs())
        }
        Figure::Fig7 => {
            set(&mut base, ParamField::Drive, 16.0);
            SweepSpec::new(
                base,
                axis(ParamField::DeltaC, 0.0, 2.5, DEFAULT_COUNT_1D),
                vec![Observable::DeltaCEff, Observable::ECB2, Observable::EB1B2],
            )
            .with_axis_2(gain_runs())
        }
        Figure::Fig8 => {
            set(&mut base, ParamField::Drive, 16.0);
            SweepSpec::new(
                base,
                Axis::log(ParamField::Temperature, 1.0, 2000.0, DEFAULT_COUNT_1D).expect("preset axis"),
                BOTH_PAIRS.to_vec(),
            )
            .with_axis_2(gain_runs())
        }
        Figure::Fig9 => {
            set(&mut base, ParamField::Drive, 16.0);
            SweepSpec::new(
                base,
                axis(ParamField::Theta, 0.0, 4.0 * PI, DEFAULT_COUNT_1D),
                BOTH_PAIRS.to_vec(),
            )
        }
        Figure::Fig10 => {
            set(&mut base, ParamField::Drive, 16.0);
            set(&mut base, ParamField::LambdaOpa, 0.2);
            SweepSpec::new(base, axis(ParamField::J1, 0.0, 1.5, DEFAULT_COUNT_2D), BOTH_PAIRS.to_vec())
                .with_axis_2(axis(ParamField::J2, 0.0, 1.5, DEFAULT_COUNT_2D))
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Value, CliError> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::config(format!(
            "config {}: top level must be an object",
            path.display()
        )));
    }
    Ok(value)
}

/// Applies `field=value` overrides. `drive` replaces both per-cavity drives.
pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::config("config must be an object"))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set `{item}`: expected FIELD=VALUE")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(format!("--set `{item}`: empty field name")));
        }
        let parsed = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_owned()));
        if key == "drive" {
            obj.remove("drive_a");
            obj.remove("drive_c");
        }
        obj.insert(key.to_owned(), parsed);
    }
    Ok(())
}

fn params_from(value: &Value) -> Result<SystemParams<f64>, CliError> {
    let p = SystemParams::from_json_value(value).map_err(|e| CliError::config(e.to_string()))?;
    p.validate().map_err(|e| CliError::config(e.to_string()))
}

fn params_json(p: &SystemParams<f64>) -> Value {
    serde_json::from_str(&p.to_canonical_json()).expect("canonical json")
}

fn open_out(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::config(format!("output {}: {e}", path.display())))
}

fn write_json(path: Option<&PathBuf>, value: &Value) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::config(format!("output {}: {e}", path.display())))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::config(format!("output {}: {e}", path.display())))
}

fn complex_json(z: nalgebra::Complex<f64>) -> Value {
    json!([z.re, z.im])
}

fn steady_state(cli: &Cli, p: &SystemParams<f64>, mode: MeanFieldMode, out: &mut dyn Write) -> Result<(), CliError> {
    let ss = solve_mean_field(p, mode)?;
    let io = |e: std::io::Error| CliError::config(format!("stdout: {e}"));
    writeln!(out, "mode          {mode}").map_err(io)?;
    writeln!(out, "alpha_a       {:.10e} {:+.10e}i", ss.alpha_a.re, ss.alpha_a.im).map_err(io)?;
    writeln!(out, "alpha_c       {:.10e} {:+.10e}i", ss.alpha_c.re, ss.alpha_c.im).map_err(io)?;
    writeln!(out, "beta_1        {:.10e} {:+.10e}i", ss.beta_1.re, ss.beta_1.im).map_err(io)?;
    writeln!(out, "beta_2        {:.10e} {:+.10e}i", ss.beta_2.re, ss.beta_2.im).map_err(io)?;
    writeln!(out, "delta_c_eff   {:.10e}", ss.delta_c_eff).map_err(io)?;
    writeln!(out, "G_1           {:.10e}", ss.g_cap_1).map_err(io)?;
    writeln!(out, "G_2           {:.10e}", ss.g_cap_2).map_err(io)?;
    writeln!(out, "iterations    {}", ss.iterations).map_err(io)?;
    write_json(
        cli.out.as_ref(),
        &json!({
            "params": params_json(p),
            "mode": mode.to_string(),
            "alpha_a": complex_json(ss.alpha_a),
            "alpha_c": complex_json(ss.alpha_c),
            "beta_1": complex_json(ss.beta_1),
            "beta_2": complex_json(ss.beta_2),
            "delta_c_eff": ss.delta_c_eff,
            "g_cap_1": ss.g_cap_1,
            "g_cap_2": ss.g_cap_2,
            "iterations": ss.iterations,
            "residual": ss.residual,
        }),
    )
}

fn stability_cmd(cli: &Cli, p: &SystemParams<f64>, mode: MeanFieldMode, out: &mut dyn Write) -> Result<(), CliError> {
    let ss = solve_mean_field(p, mode)?;
    let report = stability(&build_drift(&ss, p)).map_err(|e| CliError::numerical(e.to_string()))?;
    let io = |e: std::io::Error| CliError::config(format!("stdout: {e}"));
    writeln!(out, "stable          {}", report.stable).map_err(io)?;
    writeln!(out, "max Re(lambda)  {:.10e}", report.max_real_part).map_err(io)?;
    for z in &report.eigenvalues {
        writeln!(out, "  {:+.10e} {:+.10e}i", z.re, z.im).map_err(io)?;
    }
    write_json(
        cli.out.as_ref(),
        &json!({
            "params": params_json(p),
            "mode": mode.to_string(),
            "stable": report.stable,
            "max_real_part": report.max_real_part,
            "eigenvalues": report.eigenvalues.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
        }),
    )
}

fn entangle(cli: &Cli, p: &SystemParams<f64>, mode: MeanFieldMode, out: &mut dyn Write) -> Result<(), CliError> {
    let cols = [Observable::ECB1, Observable::ECB2, Observable::EB1B2];
    let row = evaluate_point(p, mode, &cols);
    match &row.status {
        PointStatus::Ok => {}
        PointStatus::Unstable => {
            return Err(CliError::numerical(format!(
                "system unstable (max Re λ = {:.6e})",
                row.max_real_part.unwrap_or(f64::NAN)
            )))
        }
        PointStatus::NonConvergence => {
            return Err(CliError::numerical("mean field: fixed-point iteration did not converge"))
        }
        PointStatus::InvalidParams(m) => return Err(CliError::config(m.clone())),
        PointStatus::NumericalFailure(m) => return Err(CliError::numerical(m.clone())),
    }
    let io = |e: std::io::Error| CliError::config(format!("stdout: {e}"));
    let mut record = Map::new();
    for (obs, v) in cols.iter().zip(&row.values) {
        let v = v.unwrap_or(f64::NAN);
        writeln!(out, "{:<16}{:.10e}", obs.name(), v).map_err(io)?;
        record.insert(obs.name().to_owned(), json!(v));
    }
    let margin = row.max_real_part.unwrap_or(f64::NAN);
    writeln!(out, "{:<16}{:.10e}", "max Re(lambda)", margin).map_err(io)?;
    record.insert("max_real_part".to_owned(), json!(margin));
    record.insert("params".to_owned(), params_json(p));
    record.insert("mode".to_owned(), json!(mode.to_string()));
    write_json(cli.out.as_ref(), &Value::Object(record))
}

fn write_sweep(spec: &SweepSpec<f64>, dest: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let table = run_sweep(spec)?;
    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "# params: {}", spec.base.to_canonical_json()).expect("in-memory write");
    writeln!(buf, "# mode: {}", spec.mode).expect("in-memory write");
    emit_csv(&table, &mut buf)?;
    let io = |e: std::io::Error| CliError::config(format!("output: {e}"));
    match dest {
        Some(path) => {
            let mut w = open_out(path)?;
            w.write_all(&buf).and_then(|_| w.flush()).map_err(io)?;
            let stable = table.rows.iter().filter(|r| r.stable).count();
            writeln!(
                out,
                "{} points ({} stable) -> {}",
                table.rows.len(),
                stable,
                path.display()
            )
            .map_err(io)
        }
        None => out.write_all(&buf).map_err(io),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = load_config(cli.config.as_ref())?;
    apply_overrides(&mut config, &cli.overrides)?;
    match &cli.command {
        Command::Sweep => {
            let mut spec = SweepSpec::from_json_value(&config)?;
            if let Some(m) = cli.mode {
                spec.mode = m;
            }
            write_sweep(&spec, cli.out.as_ref(), out)
        }
        Command::Reproduce { figure } => {
            let mut spec = reproduce(*figure);
            let mut merged = params_json(&spec.base);
            if let (Some(dst), Some(src)) = (merged.as_object_mut(), config.as_object()) {
                if src.contains_key("drive") {
                    dst.remove("drive_a");
                    dst.remove("drive_c");
                }
                for (k, v) in src {
                    dst.insert(k.clone(), v.clone());
                }
            }
            spec.base = params_from(&merged)?;
            spec.mode = cli.mode.unwrap_or_default();
            write_sweep(&spec, cli.out.as_ref(), out)
        }
        cmd => {
            let mode = match config.as_object_mut().and_then(|o| o.remove("mode")) {
                Some(Value::String(s)) => s.parse().map_err(CliError::config)?,
                Some(other) => return Err(CliError::config(format!("mode: expected a string, got {other}"))),
                None => MeanFieldMode::default(),
            };
            let mode = cli.mode.unwrap_or(mode);
            let p = params_from(&config)?;
            match cmd {
                Command::SteadyState => steady_state(cli, &p, mode, out),
                Command::Stability => stability_cmd(cli, &p, mode, out),
                Command::Entangle => entangle(cli, &p, mode, out),
                Command::Sweep | Command::Reproduce { .. } => unreachable!(),
            }
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
