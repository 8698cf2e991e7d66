//! `dbond`: price defaultable zero-coupon bonds, emit spread curves and run
//! the verification matrix.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad input or
//! configuration, 3 output could not be written.

mod overrides;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dbond_core::figures::{self, format_value, Table};
use dbond_core::pricing::{self, Regime};
use dbond_core::verify::{self, VerifyConfig};
use dbond_core::{load_scenario, validate_scenario, DbondError, Scenario};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "dbond", version, about = "Defaultable zero-coupon bond pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario JSON file (defaults to the built-in base case).
    #[arg(long, global = true, value_name = "FILE")]
    scenario: Option<PathBuf>,

    /// Parameter override, e.g. `R=0.4` or `default.barrier.level=0.9`.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory; reports go to stdout when absent (figures default to `.`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Monte Carlo seed for `verify`.
    #[arg(long, global = true, env = "DBOND_SEED")]
    seed: Option<u64>,

    /// Smaller Monte Carlo and scenario counts for `verify`.
    #[arg(long, global = true)]
    fast: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Price breakdown of one scenario.
    Price,
    /// No-default probabilities of one scenario.
    Survival,
    /// Price, spread and survival over maturities `t + 0.1 ..= t + 3`.
    SpreadCurve,
    /// Write the six base-case spread tables.
    Figures,
    /// Run the verification matrix.
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Checks,
    Input(DbondError),
    Write(PathBuf, io::Error),
}

impl From<DbondError> for Failure {
    fn from(e: DbondError) -> Self {
        Failure::Input(e)
    }
}

/// Column names and one or more rows of mixed text/number cells.
struct Report {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|v| match v {
                            Value::Number(n) => format_value(n.as_f64().unwrap_or(f64::NAN)),
                            Value::String(s) => s.clone(),
                            Value::Null => String::new(),
                            other => other.to_string(),
                        })
                        .collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let objs: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Object(self.header.iter().map(|h| h.to_string()).zip(row.iter().cloned()).collect())
                    })
                    .collect();
                let body = if objs.len() == 1 { objs[0].clone() } else { Value::Array(objs) };
                let mut s = serde_json::to_string_pretty(&body).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

fn scenario(cli: &Cli) -> Result<Scenario, DbondError> {
    let base = match &cli.scenario {
        Some(path) => load_scenario(path)?,
        None => Scenario::base_case(),
    };
    let ovs = cli
        .overrides
        .iter()
        .map(|s| overrides::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    overrides::apply(&base, &ovs)
}

fn price_report(s: Scenario) -> Result<Report, DbondError> {
    let v = validate_scenario(s)?;
    let b = pricing::price(&v)?;
    let tau = v.window.tau();
    let spread = if tau > 0.0 { num(pricing::spread_of(&b, tau)) } else { Value::Null };
    let (cds, parity) = if Regime::is_face_value(b.regime) {
        let cds = pricing::cds_price(&v)?;
        (num(cds), num(b.price + cds - b.discount))
    } else {
        (Value::Null, Value::Null)
    };
    Ok(Report {
        name: "price",
        header: vec![
            "regime", "price", "recovery_leg", "risky_leg", "survival", "g_intensity", "f_barrier",
            "discount", "spread", "cds", "parity_residual",
        ],
        rows: vec![vec![
            json!(b.regime.to_string()),
            num(b.price),
            num(b.recovery_leg),
            num(b.risky_leg),
            num(b.survival.w_total),
            num(b.survival.g_intensity),
            num(b.survival.f_barrier),
            num(b.discount),
            spread,
            cds,
            parity,
        ]],
    })
}

fn survival_report(s: Scenario) -> Result<Report, DbondError> {
    let v = validate_scenario(s)?;
    let b = pricing::price(&v)?;
    Ok(Report {
        name: "survival",
        header: vec!["regime", "w_total", "g_intensity", "f_barrier"],
        rows: vec![vec![
            json!(b.regime.to_string()),
            num(b.survival.w_total),
            num(b.survival.g_intensity),
            num(b.survival.f_barrier),
        ]],
    })
}

fn curve_report(s: Scenario) -> Result<Report, DbondError> {
    let maturities = figures::maturity_grid(s.window.t);
    let mut first = s;
    first.window = first.window.with_maturity(maturities[0]);
    let v = validate_scenario(first)?;
    let rows = pricing::term_structure(&v, &maturities)?
        .into_iter()
        .map(|p| vec![num(p.maturity), num(p.price), num(p.spread), num(p.survival)])
        .collect();
    Ok(Report { name: "spread_curve", header: vec!["T", "price", "spread", "survival"], rows })
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Write(dir.to_path_buf(), e))?;
    }
    fs::write(path, text).map_err(|e| Failure::Write(path.to_path_buf(), e))
}

fn emit(cli: &Cli, report: &Report) -> Result<(), Failure> {
    let text = report.render(cli.format);
    match &cli.out {
        Some(dir) => write_file(&dir.join(format!("{}.{}", report.name, extension(cli.format))), &text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Write(PathBuf::from("<stdout>"), e)),
    }
}

fn table_json(t: &Table) -> String {
    let columns: serde_json::Map<String, Value> = t
        .header
        .iter()
        .enumerate()
        .map(|(j, h)| (h.clone(), Value::Array(t.rows.iter().map(|r| num(r[j])).collect())))
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Object(columns)).expect("table serializes");
    s.push('\n');
    s
}

fn cmd_figures(cli: &Cli) -> Result<(), Failure> {
    let tables = figures::figure_tables(&scenario(cli)?)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for t in &tables {
        let text = match cli.format {
            Format::Csv => t.to_csv(),
            Format::Json => table_json(t),
        };
        let path = dir.join(format!("{}.{}", t.name, extension(cli.format)));
        write_file(&path, &text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_verify(cli: &Cli) -> Result<(), Failure> {
    if cli.scenario.is_some() {
        return Err(Failure::Input(DbondError::UnsupportedCase(
            "verify runs a fixed matrix and takes no scenario".into(),
        )));
    }
    let mut cfg = if cli.fast { VerifyConfig::fast() } else { VerifyConfig::default() };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for raw in &cli.overrides {
        let o = overrides::parse(raw)?;
        let value: f64 = o.value.parse().map_err(|_| DbondError::Schema {
            path: o.key.clone(),
            message: format!("tolerance must be a number, got {:?}", o.value),
        })?;
        cfg.set_override(&o.key, value)?;
    }
    let mut all_passed = true;
    let mut log = String::new();
    for id in verify::check_ids() {
        let res = verify::run(id, &cfg).expect("listed check id");
        all_passed &= res.passed();
        println!("{res}");
        log.push_str(&format!("{res}\n"));
    }
    let verdict = if all_passed { "all checks passed" } else { "some checks failed" };
    println!("{verdict}");
    if let Some(dir) = &cli.out {
        write_file(&dir.join("verify.txt"), &log)?;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Price => emit(cli, &price_report(scenario(cli)?)?),
        Command::Survival => emit(cli, &survival_report(scenario(cli)?)?),
        Command::SpreadCurve => emit(cli, &curve_report(scenario(cli)?)?),
        Command::Figures => cmd_figures(cli),
        Command::Verify => cmd_verify(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Write(path, e)) => {
            eprintln!("error: cannot write {}: {e}", path.display());
            ExitCode::from(3)
        }
    }
}
