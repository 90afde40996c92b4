use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use jnp_core::lab::{
    run_experiment, ConfigDocument, DomainEntry, ExperimentReport, FunctionEntry, LabError, OneOrMany,
};

/// Run a JN_p experiment pipeline and write its report.
///
/// Exit codes: 0 success, 1 invalid configuration, 2 invariant failure
/// (the report is still written and lists the witnesses).
#[derive(Parser, Debug)]
#[command(name = "jnp-lab", version)]
struct Cli {
    /// whitney | chains | jn | weak | l2g | poincare | fractional | necessity-sweep
    pipeline: Option<String>,
    /// Domain spec such as `square`, `cusp:3` or `rooms:3,0.1`; repeatable.
    #[arg(long = "domain")]
    domains: Vec<String>,
    /// Function spec such as `quadrant`, `logDist` or `haarSum:3,7`; repeatable.
    #[arg(long = "function")]
    functions: Vec<String>,
    /// Resolution; repeatable or comma separated.
    #[arg(long = "J", value_delimiter = ',')]
    resolutions: Vec<i32>,
    /// Exponent p; repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Integrability exponent of the Poincaré pipelines.
    #[arg(long)]
    q: Option<f64>,
    /// Fractional smoothness in (0, 1).
    #[arg(long)]
    delta: Option<f64>,
    /// Dilation of the local star families, greater than 1.
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed for every sampled quantity.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML (or `.json`) configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the flat CSV, next to `--out` with extension `.csv`, or to
    /// stdout in place of the report.
    #[arg(long)]
    csv: bool,
    /// Record wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

fn document(cli: &Cli) -> Result<ConfigDocument, LabError> {
    let mut doc = match &cli.config {
        Some(path) => ConfigDocument::from_path(path)?,
        None => ConfigDocument::default(),
    };
    if let Some(p) = &cli.pipeline {
        doc.pipeline = Some(p.clone());
    }
    if !cli.domains.is_empty() {
        doc.domains = Some(OneOrMany::Many(cli.domains.iter().cloned().map(DomainEntry::Text).collect()));
    }
    if !cli.functions.is_empty() {
        doc.functions = Some(OneOrMany::Many(cli.functions.iter().cloned().map(FunctionEntry::Text).collect()));
    }
    if !cli.resolutions.is_empty() {
        doc.resolutions = Some(OneOrMany::Many(cli.resolutions.clone()));
    }
    if !cli.p.is_empty() {
        doc.p = Some(OneOrMany::Many(cli.p.clone()));
    }
    doc.q = cli.q.or(doc.q);
    doc.delta = cli.delta.or(doc.delta);
    doc.lambda = cli.lambda.or(doc.lambda);
    doc.seed = cli.seed.or(doc.seed);
    Ok(doc)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<(), LabError>) -> Result<(), LabError> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| LabError::io(path, e))
}

fn emit(cli: &Cli, report: &ExperimentReport) -> Result<(), LabError> {
    match &cli.out {
        Some(out) => {
            write_file(out, |w| {
                w.write_all(report.to_json().as_bytes()).map_err(|e| LabError::io(out, e))
            })?;
            if cli.csv {
                let path = out.with_extension("csv");
                write_file(&path, |w| report.write_csv(w))?;
            }
            Ok(())
        }
        None if cli.csv => report.write_csv(io::stdout().lock()),
        None => io::stdout()
            .lock()
            .write_all(report.to_json().as_bytes())
            .map_err(|e| LabError::Output(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cfg = match document(&cli).and_then(ConfigDocument::resolve) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("jnp-lab: invalid config: {e}");
            return ExitCode::from(1);
        }
    };
    let mut report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("jnp-lab: invalid config: {e}");
            return ExitCode::from(1);
        }
    };
    if cli.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    if let Err(e) = emit(&cli, &report) {
        eprintln!("jnp-lab: {e}");
        return ExitCode::from(1);
    }
    if report.passes() {
        ExitCode::SUCCESS
    } else {
        for f in &report.invariant_failures {
            eprintln!("jnp-lab: invariant {} failed on items {:?}", f.check, f.items);
        }
        ExitCode::from(2)
    }
}
