//! Command-line front end. Every subcommand prints one JSON document (or CSV
//! rows) on stdout; the exit code is 0 iff every pass flag is true.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use super::bounds::{evaluate_bounds, BoundKind, DEFAULT_GRID_POINTS};
use super::experiments::{experiment, ExperimentInputs, ExperimentReport, RunOptions, Threshold};
use crate::codebooks::{constructor, AnyCodebook, BuildParams};
use crate::error::{invalid, Error, Result};
use crate::permaction::{sample_uniform, symmetrize};
use crate::qstate::CqChannel;
use crate::schreier::{build_schreier, build_until_gap, edge_list, spectral_report};
use crate::schurweyl::DEFAULT_CAP_DIM;
use crate::typelab::{enumerate_types, TypeComposition, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Parser)]
#[command(name = "qcodelab", version, about = "Universal c-q coding experiments on small blocklengths")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Slack added to every bound before comparing.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Largest Hilbert-space dimension that may be materialized.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP_DIM)]
    pub cap_dim: usize,
    /// Also write the output into this directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock timings (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate the types of length n over k letters.
    Types {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        entropy: bool,
    },
    /// Build a Schreier graph on T_P and report its spectral gap.
    Schreier {
        #[arg(long)]
        n: usize,
        #[arg(long = "P", value_delimiter = ',', required = true)]
        p: Vec<usize>,
        /// Generators sampled before symmetrization.
        #[arg(long)]
        size: usize,
        /// Resample until λ does not exceed this value.
        #[arg(long)]
        gap_target: Option<f64>,
        #[arg(long, default_value_t = 200)]
        max_retries: usize,
        /// Write the edge list to this file.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Construct, certify and serialize a codebook.
    Codebook {
        #[arg(value_parser = ["good", "expander", "setwise"])]
        kind: String,
        #[command(flatten)]
        args: CodebookArgs,
    },
    /// Channel coding with the division decoder.
    Coding(ExperimentArgs),
    /// Resolvability of an expander codebook.
    Resolve(ExperimentArgs),
    /// Private coding with a setwise-good codebook.
    Private {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Threshold constant, or `auto`.
        #[arg(long = "Cn", default_value = "auto")]
        c_n: String,
    },
    /// Bound tables only.
    Bounds {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_parser = ["coding", "resolve"])]
        kind: String,
        #[arg(long = "R")]
        rate: f64,
        #[arg(long = "P", value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        alpha_grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "P", value_delimiter = ',', required = true)]
    pub p: Vec<usize>,
    /// Rate, or the legitimate receiver's rate for setwise codebooks.
    #[arg(long)]
    pub rate: f64,
    /// Eavesdropper rate (setwise only).
    #[arg(long)]
    pub rate_e: Option<f64>,
    /// Target size (good only).
    #[arg(long, default_value_t = 2)]
    pub size: usize,
    /// Draw budget (good only).
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// Generators sampled per expander before symmetrization.
    #[arg(long)]
    pub generators: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub max_retries: usize,
    /// Number of messages (setwise only).
    #[arg(long, default_value_t = 2)]
    pub messages: usize,
    /// β = 1/eps_n (setwise only).
    #[arg(long, default_value_t = 1.0 / 16.0)]
    pub eps_n: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub codebook: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub alpha_grid: usize,
}

/// What a subcommand produced: the document to print, CSV rows, and whether
/// every check passed.
struct Output {
    name: &'static str,
    json: Value,
    csv: Vec<String>,
    pass: bool,
}

fn composition(n: usize, p: &[usize]) -> Result<TypeComposition> {
    let p = TypeComposition::new(p.to_vec())?;
    if p.n() != n {
        return invalid(format!("--P sums to {}, not --n {n}", p.n()));
    }
    Ok(p)
}

fn run_types(n: usize, k: usize, entropy: bool) -> Result<Output> {
    let types = enumerate_types(n, k)?;
    let rows: Vec<Value> = types
        .iter()
        .map(|p| {
            let mut row = json!({"P": p.counts(), "class_size": p.class_size().to_string()});
            if entropy {
                row["entropy"] = json!(p.entropy());
            }
            row
        })
        .collect();
    let csv: Vec<String> = types
        .iter()
        .map(|p| {
            let counts = p.counts().iter().map(usize::to_string).collect::<Vec<_>>().join(";");
            if entropy {
                format!("{counts},{},{}", p.class_size(), p.entropy())
            } else {
                format!("{counts},{}", p.class_size())
            }
        })
        .collect();
    let header = if entropy { "P,class_size,entropy" } else { "P,class_size" };
    Ok(Output {
        name: "types",
        json: json!({"n": n, "k": k, "count": types.len(), "types": rows}),
        csv: std::iter::once(header.to_string()).chain(csv).collect(),
        pass: true,
    })
}

fn run_schreier(global: &GlobalArgs, n: usize, p: &[usize], size: usize, gap_target: Option<f64>, max_retries: usize, edges: Option<&Path>) -> Result<Output> {
    let p = composition(n, p)?;
    let (graph, attempts) = match gap_target {
        Some(t) => {
            let found = build_until_gap(&p, t, global.seed, max_retries, Some(size), DEFAULT_ENUMERATION_CAP)?;
            (found.graph, found.attempts)
        }
        None => {
            let gens = symmetrize(&sample_uniform(n, size, global.seed)?);
            (build_schreier(&p, &gens, DEFAULT_ENUMERATION_CAP)?, 1)
        }
    };
    let report = spectral_report(&graph);
    if let Some(path) = edges {
        std::fs::write(path, edge_list(&graph))?;
    }
    let pass = gap_target.is_none_or(|t| report.lambda <= t);
    Ok(Output {
        name: "schreier",
        csv: vec![
            "n,P,degree,lambda,connected,bipartite,attempts".into(),
            format!(
                "{n},{},{},{:e},{},{},{attempts}",
                p.counts().iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                graph.degree,
                report.lambda,
                report.connected,
                report.bipartite
            ),
        ],
        json: json!({
            "n": n,
            "P": p.counts(),
            "vertices": graph.vertices.len(),
            "degree": graph.degree,
            "seed": global.seed,
            "attempts": attempts,
            "gap_target": gap_target,
            "report": report,
            "pass": pass,
        }),
        pass,
    })
}

fn run_codebook(global: &GlobalArgs, kind: &str, a: &CodebookArgs) -> Result<Output> {
    let p = composition(a.n, &a.p)?;
    let params = BuildParams {
        rate_e: a.rate_e,
        size: a.size,
        budget: a.budget,
        half_size: a.generators,
        max_retries: a.max_retries,
        j: a.messages,
        eps_n: a.eps_n,
        ..BuildParams::new(p, a.rate, global.seed)
    };
    let built = constructor(kind)?.build(&params)?;
    std::fs::write(&a.out, built.codebook.to_json()?)?;
    Ok(Output {
        name: "codebook",
        csv: vec!["kind,certified,seed".into(), format!("{kind},{},{}", built.certified, global.seed)],
        json: json!({
            "kind": kind,
            "seed": global.seed,
            "certified": built.certified,
            "summary": built.summary,
            "out": a.out.display().to_string(),
        }),
        pass: built.certified,
    })
}

fn run_experiment(global: &GlobalArgs, name: &'static str, a: &ExperimentArgs, threshold: Threshold) -> Result<Output> {
    let start = Instant::now();
    let inputs = ExperimentInputs {
        channel: CqChannel::from_file(&a.channel)?,
        codebook: AnyCodebook::from_file(&a.codebook)?,
        threshold,
        options: RunOptions { grid_points: a.alpha_grid, tol: global.tol, cap_dim: global.cap_dim, seed: global.seed },
    };
    let mut reports: Vec<ExperimentReport> = experiment(name)?.run(&inputs)?;
    if global.timings {
        let elapsed = start.elapsed().as_secs_f64();
        for r in &mut reports {
            r.timings = Some(json!({"total_seconds": elapsed}));
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    let csv = std::iter::once(ExperimentReport::CSV_HEADER.to_string()).chain(reports.iter().map(ExperimentReport::csv_row)).collect();
    let json = if reports.len() == 1 { serde_json::to_value(&reports[0])? } else { serde_json::to_value(&reports)? };
    Ok(Output { name, json, csv, pass })
}

fn run_bounds(channel: &Path, kind: &str, rate: f64, p: &[usize], points: usize) -> Result<Output> {
    let w = CqChannel::from_file(channel)?;
    let p = TypeComposition::new(p.to_vec())?;
    let kind = if kind == "coding" { BoundKind::Coding } else { BoundKind::Resolve };
    let table = evaluate_bounds(kind, &w, &p, rate, points)?;
    let csv = std::iter::once("alpha,information,bound".to_string())
        .chain(table.rows.iter().map(|r| format!("{},{:e},{:e}", r.alpha, r.information, r.bound)))
        .collect();
    Ok(Output { name: "bounds", json: serde_json::to_value(&table)?, csv, pass: true })
}

fn parse_threshold(s: &str) -> Result<Threshold> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Threshold::Auto);
    }
    s.parse::<f64>()
        .map(Threshold::Value)
        .map_err(|_| Error::InvalidArgument(format!("--Cn expects a number or 'auto', got '{s}'")))
}

fn dispatch(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Types { n, k, entropy } => run_types(*n, *k, *entropy),
        Command::Schreier { n, p, size, gap_target, max_retries, edges } => {
            run_schreier(g, *n, p, *size, *gap_target, *max_retries, edges.as_deref())
        }
        Command::Codebook { kind, args } => run_codebook(g, kind, args),
        Command::Coding(a) => run_experiment(g, "coding", a, Threshold::Auto),
        Command::Resolve(a) => run_experiment(g, "resolve", a, Threshold::Auto),
        Command::Private { args, c_n } => run_experiment(g, "private", args, parse_threshold(c_n)?),
        Command::Bounds { channel, kind, rate, p, alpha_grid } => run_bounds(channel, kind, *rate, p, *alpha_grid),
    }
}

fn render(out: &Output, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&out.json)? + "\n",
        Format::Csv => out.csv.join("\n") + "\n",
    })
}

/// Runs the CLI and returns the process exit code: 0 when every check
/// passed, 1 when a check failed, 2 on errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = dispatch(&cli).and_then(|out| {
        let text = render(&out, cli.global.format)?;
        print!("{text}");
        if let Some(dir) = &cli.global.out_dir {
            std::fs::create_dir_all(dir)?;
            let ext = if cli.global.format == Format::Json { "json" } else { "csv" };
            std::fs::write(dir.join(format!("{}.{ext}", out.name)), &text)?;
        }
        Ok(out.pass)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
