mod config;

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mcim_core::baselines::{run_maxinf, run_nr_greedy};
use mcim_core::cascades::estimate_influence;
use mcim_core::graph::GraphSummary;
use mcim_core::rng::{self, Stream, RNG_ALGORITHM};
use mcim_core::sampling::SamplerFault;
use mcim_core::solver::{run_rs, BoundValues, PhaseTimings};
use mcim_core::validation::{oracle_check, CheckOptions, OracleReport};
use mcim_core::{Algorithm, DirectedGraph, NodeId, SolverParams, SolverReport, TupleCollection};
use serde::Serialize;

use config::{nodes_of, read_labels, Instance, RunConfig};

#[derive(Parser)]
#[command(name = "mcim", version, about = "Seed selection for a new cascade among competing ones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select seeds and write a JSON report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the main tuple collection, one tuple per line.
        #[arg(long)]
        dump_tuples: Option<PathBuf>,
    },
    /// Monte-Carlo influence of a seed set under the configured cascades.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Report destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for each budget and append one CSV row per algorithm and budget.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        k_list: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Algorithms to run; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
    },
    /// Compare the sampler with exact enumeration on a tiny instance.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        tuples: usize,
        #[arg(long, default_value_t = 6)]
        sets: usize,
        /// JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        fault: Option<Fault>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    FixedRoot,
}

#[derive(Serialize)]
struct Influence {
    mean: f64,
    stderr: f64,
    trials: usize,
}

#[derive(Serialize)]
struct Bounds {
    upper_seeds: Vec<String>,
    lower_seeds: Vec<String>,
    at_upper: BoundValues,
    at_lower: BoundValues,
}

#[derive(Serialize)]
struct Report<'a> {
    algorithm: Algorithm,
    seeds: Vec<String>,
    k: usize,
    l: usize,
    f_lo: f64,
    gamma_lower: Option<f64>,
    estimate: f64,
    influence: Option<Influence>,
    not_active_mean: Option<f64>,
    bounds: Option<Bounds>,
    opt_lower_tuples: usize,
    edges_tested: u64,
    params: &'a SolverParams,
    graph: &'a GraphSummary,
    existing_cascades: &'a [(String, Vec<String>)],
    config: &'a RunConfig,
    rng: &'static str,
    timings: PhaseTimings,
}

fn labels(g: &DirectedGraph, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&v| g.label(v).to_string()).collect()
}

fn run(inst: &Instance, algorithm: Algorithm, params: &SolverParams) -> Result<SolverReport> {
    let (g, cfg) = (&inst.graph, &inst.cascades);
    log::info!("{} with k = {} on {} nodes, {} edges", algorithm.name(), params.k, g.node_count(), g.edge_count());
    Ok(match algorithm {
        Algorithm::Rs => run_rs(g, cfg, params)?,
        Algorithm::NrGreedy => run_nr_greedy(g, cfg, params)?,
        Algorithm::MaxInf => run_maxinf(g, cfg, params)?,
    })
}

fn report<'a>(inst: &'a Instance, params: &'a SolverParams, r: &SolverReport) -> Report<'a> {
    let g = &inst.graph;
    Report {
        algorithm: r.algorithm,
        seeds: labels(g, &r.seeds),
        k: params.k,
        l: r.l,
        f_lo: r.f_lo,
        gamma_lower: r.gamma_lower,
        estimate: r.estimate,
        influence: r.influence.map(|i| Influence { mean: i.mean, stderr: i.stderr, trials: i.trials }),
        not_active_mean: r.influence.map(|i| i.not_active_mean),
        bounds: r.bounds.as_ref().map(|b| Bounds {
            upper_seeds: labels(g, &b.upper_seeds),
            lower_seeds: labels(g, &b.lower_seeds),
            at_upper: b.at_upper,
            at_lower: b.at_lower,
        }),
        opt_lower_tuples: r.opt_lower_tuples,
        edges_tested: r.edges_tested,
        params,
        graph: &inst.summary,
        existing_cascades: &inst.existing,
        config: &inst.config,
        rng: RNG_ALGORITHM,
        timings: r.timings,
    }
}

fn load(path: &Path) -> Result<Instance> {
    let (cfg, base) = RunConfig::from_path(path)?;
    Instance::load(cfg, base)
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve(config: &Path, out: &Path, dump: Option<&Path>) -> Result<()> {
    let inst = load(config)?;
    let algorithm = inst.config.algorithm()?;
    let params = inst.params(inst.budget()?)?;
    let r = run(&inst, algorithm, &params)?;
    write_json(Some(out), &report(&inst, &params, &r))?;
    if let Some(path) = dump {
        let blind;
        let cfg = if algorithm == Algorithm::MaxInf {
            blind = inst.cascades.without_existing();
            &blind
        } else {
            &inst.cascades
        };
        let coll = TupleCollection::generate(&inst.graph, cfg, r.l, rng::derive(params.seed, Stream::Collection, 0));
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        coll.write_text(&inst.graph, cfg, BufWriter::new(file))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    seeds: Vec<String>,
    mean: f64,
    stderr: f64,
    not_active_mean: f64,
    trials: usize,
    graph: &'a GraphSummary,
    rng_seed: u64,
    rng: &'static str,
}

fn evaluate(config: &Path, seeds: &Path, trials: Option<usize>, out: Option<&Path>) -> Result<()> {
    let inst = load(config)?;
    let labels = read_labels(seeds)?;
    let nodes = nodes_of(&inst.graph, &labels)?;
    let trials = trials.unwrap_or(inst.config.trials());
    let seed = rng::derive(inst.config.rng_seed, Stream::Evaluation, 0);
    let est = estimate_influence(&inst.graph, &inst.cascades, &nodes, trials, seed)?;
    write_json(
        out,
        &EvaluateReport {
            seeds: labels,
            mean: est.mean,
            stderr: est.stderr,
            not_active_mean: est.not_active_mean,
            trials: est.trials,
            graph: &inst.summary,
            rng_seed: inst.config.rng_seed,
            rng: RNG_ALGORITHM,
        },
    )
}

const SWEEP_HEADER: [&str; 13] = [
    "algorithm",
    "k",
    "rng_seed",
    "l",
    "f_lo",
    "gamma_lower",
    "estimate",
    "influence_mean",
    "influence_stderr",
    "not_active_mean",
    "trials",
    "seeds",
    "seconds",
];

fn sweep(config: &Path, ks: &[usize], out: &Path, algorithms: &[String]) -> Result<()> {
    let inst = load(config)?;
    let algorithms: Vec<Algorithm> = if algorithms.is_empty() {
        vec![inst.config.algorithm()?]
    } else {
        algorithms
            .iter()
            .map(|a| Algorithm::parse(a).with_context(|| format!("unknown algorithm {a:?}")))
            .collect::<Result<_>>()?
    };
    let fresh = match File::open(out) {
        Ok(f) => {
            let mut first = String::new();
            BufReader::new(f).read_line(&mut first)?;
            if !first.trim().is_empty() && first.trim_end() != SWEEP_HEADER.join(",") {
                bail!("{} has a different header; refusing to append", out.display());
            }
            first.trim().is_empty()
        }
        Err(_) => true,
    };
    let file = OpenOptions::new().create(true).append(true).open(out)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        w.write_record(SWEEP_HEADER)?;
    }
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for &k in ks {
        let params = inst.params(k)?;
        for &a in &algorithms {
            let t = Instant::now();
            let r = run(&inst, a, &params)?;
            let secs = t.elapsed().as_secs_f64();
            w.write_record([
                a.name().to_string(),
                k.to_string(),
                params.seed.to_string(),
                r.l.to_string(),
                r.f_lo.to_string(),
                opt(r.gamma_lower),
                r.estimate.to_string(),
                opt(r.influence.map(|i| i.mean)),
                opt(r.influence.map(|i| i.stderr)),
                opt(r.influence.map(|i| i.not_active_mean)),
                r.influence.map(|i| i.trials).unwrap_or(0).to_string(),
                labels(&inst.graph, &r.seeds).join(";"),
                format!("{secs:.3}"),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

fn check(config: &Path, tuples: usize, sets: usize, out: Option<&Path>, fault: Option<Fault>) -> Result<bool> {
    let inst = load(config)?;
    let opts = CheckOptions {
        tuples,
        sets,
        seed: rng::derive(inst.config.rng_seed, Stream::Collection, 1),
        fault: match fault {
            Some(Fault::FixedRoot) => SamplerFault::FixedRoot,
            None => SamplerFault::None,
        },
        ..CheckOptions::default()
    };
    let r: OracleReport = oracle_check(&inst.graph, &inst.cascades, &opts)?;
    let mut stdout = std::io::stdout().lock();
    for c in &r.checks {
        writeln!(stdout, "{}\t{}\t{}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
    }
    writeln!(stdout, "oracle-check\t{}", if r.passed() { "PASS" } else { "FAIL" })?;
    if let Some(p) = out {
        write_json(Some(p), &r)?;
    }
    Ok(r.passed())
}

#[derive(Serialize)]
struct ErrorRecord {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn kind(e: &anyhow::Error) -> &'static str {
    use mcim_core::Error as E;
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::MalformedLine { .. } | E::ProbabilityOutOfRange { .. } | E::EmptyInput => "graph",
                E::MissingProbability { .. } => "probabilities",
                E::InvalidParameter(_) => "invalid_parameter",
                E::InvalidConfig(_) | E::TableMiss { .. } | E::EmptyOffers(_) => "invalid_config",
                E::UnknownLabel(_) => "unknown_label",
                E::SeedNotCandidate(_) => "seed_not_candidate",
                E::EmptyCollection => "empty_collection",
                E::GuardExceeded(_) | E::NondeterministicActivation => "oracle_guard",
                E::ResourceCap { .. } => "resource_cap",
                E::Io(_) => "io",
            };
        }
        if cause.is::<serde_json::Error>() {
            return "config_parse";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "invalid_config"
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MCIM_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("MCIM_THREADS = {v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Solve { config, out, dump_tuples } => solve(config, out, dump_tuples.as_deref()).map(|_| true),
        Command::Evaluate { config, seeds, trials, out } => evaluate(config, seeds, *trials, out.as_deref()).map(|_| true),
        Command::Sweep { config, k_list, out, algorithms } => sweep(config, k_list, out, algorithms).map(|_| true),
        Command::OracleCheck { config, tuples, sets, out, fault } => check(config, *tuples, *sets, out.as_deref(), *fault),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let record = ErrorRecord { error: ErrorBody { kind: kind(&e), message: format!("{e:#}") } };
            eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
            ExitCode::from(2)
        }
    }
}
