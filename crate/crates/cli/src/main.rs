use std::collections::BTreeSet;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tlmac_core::anneal::DEFAULT_ALPHA;
use tlmac_core::cluster::DEFAULT_NEIGHBOURS;
use tlmac_core::layer::{ActTensor, DEFAULT_PARALLEL_FACTOR};
use tlmac_core::netlist::{emit_netlist, load_netlist};
use tlmac_core::pipeline::{random_input, DEFAULT_BUDGET_PER_ROUTE};
use tlmac_core::report::{export_reports, file_stem, LayerReport};
use tlmac_core::{compile_layer, load_layer, load_layers, verify, AcceptanceRule, CompileOptions, Error, QuantLayer, VerifyOutcome};

const EXIT_MISMATCH: u8 = 1;
const EXIT_MISSING: u8 = 2;
const EXIT_DIMS: u8 = 3;
const EXIT_CORRUPT: u8 = 4;
const EXIT_INVALID: u8 = 5;
const EXIT_OUTPUT: u8 = 6;
const EXIT_USAGE: u8 = 64;

const NETLIST_SUFFIX: &str = ".netlist.json";

#[derive(Parser)]
#[command(name = "tlmac", version, about = "Compile quantised convolution layers onto LUT-based MAC engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile weight files into netlists and reports.
    Compile(CompileArgs),
    /// Simulate a netlist and compare it against a direct convolution.
    Verify(VerifyArgs),
    /// Regenerate report CSVs from stored netlists.
    Report(ReportArgs),
}

#[derive(Args)]
struct CompileArgs {
    /// Layer files in QWeights JSON format.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(short = 'o', long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
    /// Output channels computed in parallel (P).
    #[arg(long, default_value_t = DEFAULT_PARALLEL_FACTOR as u64, value_parser = clap::value_parser!(u64).range(1..))]
    parallel_factor: u64,
    /// Neighbours per step in the clustering graph.
    #[arg(long, default_value_t = DEFAULT_NEIGHBOURS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    nn_k: u64,
    /// Seed of the initial random placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed annealing iteration count (default: scaled by the route count).
    #[arg(long)]
    anneal_iters: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    anneal_alpha: f64,
    #[arg(long, default_value_t = 0)]
    anneal_seed: u64,
    /// Iterations per initial route when --anneal-iters is not given.
    #[arg(long, default_value_t = DEFAULT_BUDGET_PER_ROUTE)]
    anneal_budget_per_route: u64,
    /// Use the standard Metropolis rule against the current energy.
    #[arg(long)]
    metropolis: bool,
    /// Layers compiled concurrently (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Check each compiled layer on a random input.
    #[arg(long)]
    verify: bool,
    /// Height and width of the --verify input.
    #[arg(long, default_value_t = 8)]
    verify_size: usize,
}

#[derive(Args)]
struct VerifyArgs {
    netlist: PathBuf,
    /// Layer file the netlist was compiled from.
    #[arg(long)]
    weights: PathBuf,
    /// Layer name when the weights file holds several layers.
    #[arg(long)]
    layer: Option<String>,
    /// Activation tensor JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    stride: u64,
    #[arg(long, default_value_t = 0)]
    pad: usize,
    /// Write the simulated output tensor here.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding `*.netlist.json` files.
    dir: PathBuf,
    /// Output directory (default: <dir>/reports).
    #[arg(short = 'o', long = "out-dir")]
    out_dir: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn input_failure(e: Error) -> Failure {
    let code = match &e {
        Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => EXIT_MISSING,
        Error::Config(_) => EXIT_DIMS,
        _ => EXIT_INVALID,
    };
    Failure::new(code, e.to_string())
}

fn require_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_MISSING, format!("no such input: {}", path.display())))
    }
}

struct Job {
    stem: String,
    layer: QuantLayer,
}

fn collect_jobs(inputs: &[PathBuf]) -> CliResult<Vec<Job>> {
    for path in inputs {
        require_exists(path)?;
    }
    let mut jobs = Vec::new();
    let mut seen = BTreeSet::new();
    for path in inputs {
        let layers = load_layers(path).map_err(input_failure)?;
        let file = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let single = layers.len() == 1;
        for layer in layers {
            let stem = if single { file_stem(&file) } else { file_stem(&format!("{file}.{}", layer.name)) };
            if !seen.insert(stem.clone()) {
                return Err(Failure::new(EXIT_USAGE, format!("two layers map to the output name {stem}")));
            }
            jobs.push(Job { stem, layer });
        }
    }
    Ok(jobs)
}

struct LayerOutput {
    report: LayerReport,
    trace: tlmac_core::AnnealTrace,
}

fn compile_one(job: &Job, args: &CompileArgs, opts: &CompileOptions) -> CliResult<LayerOutput> {
    let compiled = compile_layer(&job.layer, opts).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let path = args.out_dir.join(format!("{}{NETLIST_SUFFIX}", job.stem));
    emit_netlist(&compiled.config, Some(&compiled.meta), &path).map_err(|e| Failure::new(EXIT_OUTPUT, e.to_string()))?;
    if args.verify {
        let size = args.verify_size.max(job.layer.kernel);
        let input = random_input(&job.layer, size, size, opts.seed);
        let pad = job.layer.kernel / 2;
        check_outcome(verify(&compiled.config, &job.layer, &input, 1, pad))?;
    }
    let mut report = compiled.report;
    report.name = job.stem.clone();
    Ok(LayerOutput { report, trace: compiled.trace })
}

fn cmd_compile(args: CompileArgs) -> CliResult<()> {
    let jobs = collect_jobs(&args.inputs)?;
    let opts = CompileOptions {
        parallel_factor: args.parallel_factor as usize,
        neighbours: args.nn_k as usize,
        seed: args.seed,
        anneal_iters: args.anneal_iters,
        anneal_alpha: args.anneal_alpha,
        anneal_seed: args.anneal_seed,
        budget_per_route: args.anneal_budget_per_route,
        rule: if args.metropolis { AcceptanceRule::Metropolis } else { AcceptanceRule::BestEnergy },
    };
    if !(opts.anneal_alpha > 0.0 && opts.anneal_alpha.is_finite()) {
        return Err(Failure::new(EXIT_USAGE, "--anneal-alpha must be a positive number"));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::new(EXIT_OUTPUT, format!("{}: {e}", args.out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let results: Vec<CliResult<LayerOutput>> =
        pool.install(|| jobs.par_iter().map(|job| compile_one(job, &args, &opts)).collect());

    let mut first_code = None;
    let mut entries = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(out) => entries.push((out.report, Some(out.trace))),
            Err(f) => {
                eprintln!("error: {}: {}", job.stem, f.message);
                first_code.get_or_insert(f.code);
            }
        }
    }
    export_reports(&entries, args.out_dir.join("reports")).map_err(|e| Failure::new(EXIT_OUTPUT, e.to_string()))?;
    match first_code {
        Some(code) => Err(Failure::new(code, String::new())),
        None => {
            println!("compiled {} layer(s) into {}", entries.len(), args.out_dir.display());
            Ok(())
        }
    }
}

fn check_outcome(result: tlmac_core::Result<(VerifyOutcome, tlmac_core::OutTensor)>) -> CliResult<tlmac_core::OutTensor> {
    match result {
        Ok((VerifyOutcome::Match, out)) => Ok(out),
        Ok((VerifyOutcome::Mismatch { at: (c, y, x), expected, got }, _)) => Err(Failure::new(
            EXIT_MISMATCH,
            format!("mismatch at channel {c}, row {y}, column {x}: expected {expected}, got {got}"),
        )),
        Err(e @ Error::Overflow { .. }) => Err(Failure::new(EXIT_MISMATCH, e.to_string())),
        Err(e) => Err(input_failure(e)),
    }
}

fn cmd_verify(args: VerifyArgs) -> CliResult<()> {
    for path in [&args.netlist, &args.weights, &args.input] {
        require_exists(path)?;
    }
    let (cfg, meta) = load_netlist(&args.netlist).map_err(|e| match e {
        Error::Io { .. } => input_failure(e),
        other => Failure::new(EXIT_CORRUPT, other.to_string()),
    })?;
    let layer = match &args.layer {
        Some(name) => load_layer(&args.weights, name),
        None => load_layers(&args.weights).and_then(|layers| pick_layer(layers, meta.as_ref().map(|m| m.name.as_str()))),
    }
    .map_err(input_failure)?;
    let input = ActTensor::load(&args.input).map_err(input_failure)?;
    let out = check_outcome(verify(&cfg, &layer, &input, args.stride as usize, args.pad))?;
    if let Some(path) = &args.out {
        std::fs::write(path, out.to_json()).map_err(|e| Failure::new(EXIT_OUTPUT, format!("{}: {e}", path.display())))?;
    }
    println!("ok: {} outputs match", out.values.len());
    Ok(())
}

fn pick_layer(mut layers: Vec<QuantLayer>, name: Option<&str>) -> tlmac_core::Result<QuantLayer> {
    if layers.len() == 1 {
        return Ok(layers.remove(0));
    }
    let Some(name) = name else {
        return Err(Error::Validation("weights file holds several layers; pass --layer".into()));
    };
    layers
        .into_iter()
        .find(|l| l.name == name)
        .ok_or_else(|| Error::Validation(format!("no layer named {name:?} in the weights file")))
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    require_exists(&args.dir)?;
    let read = std::fs::read_dir(&args.dir).map_err(|e| Failure::new(EXIT_MISSING, format!("{}: {e}", args.dir.display())))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(NETLIST_SUFFIX)))
        .collect();
    paths.sort();
    let mut entries = Vec::new();
    for path in &paths {
        let (cfg, meta) = load_netlist(path).map_err(|e| Failure::new(EXIT_CORRUPT, e.to_string()))?;
        let meta = meta.ok_or_else(|| Failure::new(EXIT_CORRUPT, format!("{}: no compile metadata", path.display())))?;
        let mut report = LayerReport::from_netlist(&cfg, &meta);
        let name = path.file_name().unwrap().to_string_lossy();
        report.name = name.trim_end_matches(NETLIST_SUFFIX).to_string();
        entries.push((report, None));
    }
    let out_dir = args.out_dir.unwrap_or_else(|| args.dir.join("reports"));
    export_reports(&entries, &out_dir).map_err(|e| Failure::new(EXIT_OUTPUT, e.to_string()))?;
    println!("reported {} layer(s) into {}", entries.len(), out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Compile(args) => cmd_compile(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
