//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use eochain_core::engine::{run_with, RunOptions};
use eochain_core::metrics::{compare_architectures, service_report, CompareOptions, ServiceReport};
use eochain_core::{presets, validate_scenario, FireEvent, Scenario};
use rayon::prelude::*;

use crate::dump::write_trace;
use crate::error::CliError;
use crate::report::{comparison_csv, json_string, service_csv, write_file, Format};
use crate::{event_trace, scenario_file};

#[derive(Debug, Parser)]
#[command(name = "eochain", version, about = "Earth-observation service chain simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run(RunArgs),
    /// Simulate hybrid and raw-only architectures on identical streams.
    Compare(CompareArgs),
    /// Run a range of seeds in parallel.
    Sweep(SweepArgs),
    /// Check a scenario without running it.
    Validate(SourceArgs),
    /// List built-in presets.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Master seed; defaults to the scenario's seed (0 for presets).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated horizon in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Report format; both are written when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fixed event trace replacing generated events.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Reference preset run on the same events.
    #[arg(long)]
    pub baseline: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 10)]
    pub count: u64,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    /// Print one preset as a scenario file.
    #[arg(long)]
    pub show: Option<String>,
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Validate(a) => cmd_validate(&a),
        Command::Presets(a) => cmd_presets(&a),
    }
}

fn load_preset(name: &str) -> Result<Scenario, CliError> {
    presets::preset(name).ok_or_else(|| {
        CliError::Usage(format!("unknown preset `{name}` (available: {})", presets::preset_names().join(", ")))
    })
}

pub fn load_source(source: &SourceArgs) -> Result<Scenario, CliError> {
    match (&source.scenario, &source.preset) {
        (Some(path), None) => scenario_file::load(path),
        (None, Some(name)) => load_preset(name),
        _ => Err(CliError::Usage("exactly one of --scenario or --preset is required".into())),
    }
}

struct Prepared {
    scenario: Scenario,
    events: Option<Vec<FireEvent>>,
}

fn prepare(args: &RunArgs) -> Result<Prepared, CliError> {
    let mut scenario = load_source(&args.source)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(d) = args.duration {
        scenario.horizon_s = d;
    }
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let events = args.events.as_deref().map(event_trace::load).transpose()?;
    Ok(Prepared { scenario, events })
}

fn formats(f: Option<Format>) -> Vec<Format> {
    f.map_or_else(|| vec![Format::Json, Format::Csv], |f| vec![f])
}

fn write_service(dir: &Path, report: &ServiceReport, format: Option<Format>) -> Result<(), CliError> {
    for f in formats(format) {
        let text = match f {
            Format::Json => json_string(report),
            Format::Csv => service_csv(report),
        };
        write_file(&dir.join(format!("report.{}", f.extension())), &text)?;
    }
    Ok(())
}

fn simulate(p: &Prepared) -> Result<(ServiceReport, eochain_core::SimulationTrace), CliError> {
    let options = RunOptions { events: p.events.as_deref(), ..Default::default() };
    let trace = run_with(&p.scenario, options).map_err(|e| CliError::Simulation(e.to_string()))?;
    Ok((service_report(&trace), trace))
}

fn summary_line(r: &ServiceReport) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.0} s"));
    format!(
        "{} seed {} [{}]: {} events, {} products, ttfi p50 {} p90 {}, completeness {:.3}, downlinked {} bits",
        r.scenario,
        r.seed,
        r.mode.as_str(),
        r.events.len(),
        r.products.len(),
        fmt(r.time_to_first_info.p50),
        fmt(r.time_to_first_info.p90),
        r.completeness.ratio,
        r.downlinked_bits.total(),
    )
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let p = prepare(args)?;
    let (report, trace) = simulate(&p)?;
    write_service(&args.out, &report, args.format)?;
    write_trace(&args.out, &trace)?;
    println!("{}", summary_line(&report));
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let p = prepare(&args.run)?;
    let baseline = match &args.baseline {
        Some(name) => {
            let mut b = load_preset(name)?;
            b.horizon_s = p.scenario.horizon_s;
            Some(b)
        }
        None => None,
    };
    let options = CompareOptions { events: p.events.as_deref(), baseline: baseline.as_ref() };
    let report = compare_architectures(&p.scenario, p.scenario.seed, options)
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    let out = &args.run.out;
    for f in formats(args.run.format) {
        let text = match f {
            Format::Json => json_string(&report),
            Format::Csv => comparison_csv(&report),
        };
        write_file(&out.join(format!("comparison.{}", f.extension())), &text)?;
    }
    write_service(&out.join("hybrid"), &report.hybrid, args.run.format)?;
    write_service(&out.join("raw-only"), &report.raw_only, args.run.format)?;
    println!("{}", summary_line(&report.hybrid));
    println!("{}", summary_line(&report.raw_only));
    if let Some(b) = &report.baseline {
        write_service(&out.join("baseline"), b, args.run.format)?;
        println!("{}", summary_line(b));
    }
    println!(
        "hybrid faster for {:.1}% of events, downlink ratio {}",
        100.0 * report.hybrid_faster_fraction,
        report.downlink_ratio.map_or_else(|| "n/a".into(), |r| format!("{r:.4}")),
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let p = prepare(&args.run)?;
    let first = p.scenario.seed;
    let seeds: Vec<u64> = (0..args.count).map(|k| first + k).collect();
    let results: Vec<Result<ServiceReport, CliError>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut scenario = p.scenario.clone();
            scenario.seed = seed;
            let run = Prepared { scenario, events: p.events.clone() };
            let (report, trace) = simulate(&run)?;
            let dir = args.run.out.join(format!("seed-{seed}"));
            write_service(&dir, &report, args.run.format)?;
            write_trace(&dir, &trace)?;
            Ok(report)
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["seed", "events", "products", "ttfi_p50_s", "ttfi_p90_s", "ttfi_never", "completeness", "downlinked_bits"])
        .expect("in-memory write");
    for r in results {
        let r = r?;
        let num = |x: Option<f64>| x.map_or_else(String::new, |v| crate::report::round_sig(v).to_string());
        w.write_record([
            r.seed.to_string(),
            r.events.len().to_string(),
            r.products.len().to_string(),
            num(r.time_to_first_info.p50),
            num(r.time_to_first_info.p90),
            r.time_to_first_info.never.to_string(),
            num(Some(r.completeness.ratio)),
            r.downlinked_bits.total().to_string(),
        ])
        .expect("in-memory write");
        println!("{}", summary_line(&r));
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    write_file(&args.run.out.join("sweep.csv"), &text)
}

fn cmd_validate(args: &SourceArgs) -> Result<(), CliError> {
    let scenario = load_source(args)?;
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    println!("{}: ok", scenario.name);
    Ok(())
}

fn cmd_presets(args: &PresetsArgs) -> Result<(), CliError> {
    match &args.show {
        Some(name) => print!("{}", scenario_file::to_toml(&load_preset(name)?)),
        None => {
            for s in presets::builtin_presets() {
                println!(
                    "{}\t{:?}\t{} satellites\tgsd {} m\tmmu {} ha",
                    s.name,
                    s.archetype.processing_location,
                    s.satellites.len(),
                    s.archetype.gsd_m,
                    s.archetype.mmu_ha
                );
            }
        }
    }
    Ok(())
}
