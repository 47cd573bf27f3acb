use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shellgamma_core::studies::{
    builtin_scenario, format_float, parse_config, run_study, write_report, StudyConfig, StudyReport, StudyStatus,
    SCENARIOS,
};
use shellgamma_core::Error;

#[derive(Parser)]
#[command(name = "shellgamma", version, about = "Thin-shell energy convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write its CSV report and summary.
    Run {
        /// TOML study file, or `builtin:<name>` for a builtin scenario.
        #[arg(long)]
        config: String,
        /// Report path; overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated thickness schedule; overrides `schedule.h`.
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        /// Surface quadrature points per axis; overrides `quadrature.surface`.
        #[arg(long)]
        quad_order: Option<usize>,
    },
    /// Print the builtin scenarios.
    ListScenarios,
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn load_config(source: &str) -> Result<StudyConfig, Error> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin_scenario(name).ok_or_else(|| Error::Validation {
            key: "config".into(),
            message: format!("unknown builtin scenario `{name}` (see list-scenarios)"),
        });
    }
    parse_config(&std::fs::read_to_string(source)?)
}

fn prepare(
    source: &str,
    out: Option<PathBuf>,
    h_list: Option<Vec<f64>>,
    quad_order: Option<usize>,
) -> Result<(StudyConfig, PathBuf), Error> {
    let mut cfg = load_config(source)?;
    if let Some(h) = h_list {
        cfg.schedule.h = h;
    }
    if let Some(q) = quad_order {
        cfg.quadrature.surface = q;
    }
    cfg.validate()?;
    let path = out.unwrap_or_else(|| PathBuf::from(&cfg.output.path));
    Ok((cfg, path))
}

fn print_report(report: &StudyReport) {
    println!("study {} ({})", report.name, report.kind.as_str());
    if let Some(limit) = report.limit {
        println!("  limit            {}", format_float(limit));
    }
    for row in &report.rows {
        let cell = |v: Option<f64>| v.map(format_float).unwrap_or_else(|| "-".into());
        println!(
            "  h = {:<22} normalized {:<24} gap {:<24} stretch {:<24} bend {}",
            format_float(row.h),
            cell(row.normalized),
            cell(row.rel_gap),
            cell(row.residual_stretch),
            cell(row.residual_bend),
        );
    }
    if let Some(ex) = report.extrapolated {
        println!(
            "  extrapolated     {} (order {}, gap {})",
            format_float(ex.value),
            format_float(ex.order),
            format_float(ex.rel_gap)
        );
    }
    for f in &report.fits {
        println!("  fit {:<12} slope {} r² {}", f.name, format_float(f.fit.slope), format_float(f.fit.r_squared));
    }
    for c in &report.checks {
        let op = if c.upper { "<=" } else { ">=" };
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("  [{mark}] {} = {} {op} {}", c.name, format_float(c.value), format_float(c.threshold));
    }
    if let Some(e) = &report.error {
        println!("  error: {e}");
    }
    println!("status: {}", report.status.as_str());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, about) in SCENARIOS {
                println!("{name:<24} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            h_list,
            quad_order,
        } => {
            let (cfg, path) = match prepare(&config, out, h_list, quad_order) {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_ERROR);
                }
            };
            let report = run_study(&cfg);
            print_report(&report);
            if let Err(e) = write_report(&report, &path) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(EXIT_ERROR);
            }
            match report.status {
                StudyStatus::Pass => ExitCode::SUCCESS,
                StudyStatus::Fail => ExitCode::from(EXIT_FAIL),
                StudyStatus::Error => ExitCode::from(EXIT_ERROR),
            }
        }
    }
}
