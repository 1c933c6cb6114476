mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lgsd_core::decoders::{decode_basis, DecodeOptions, DecoderKind, DEFAULT_J_MAX, DEFAULT_NODE_CAP};
use lgsd_core::io::{format_int_vector, parse_matrix, parse_vector};
use lgsd_core::lattice::{LatticeBasis, DEFAULT_LLL_DELTA};
use lgsd_core::mimo::{ber_csv, nodes_csv, run_sweep, MimoConfig};
use lgsd_core::verify::{run_suite, Suite, SuiteParams};

use crate::config::{load, parse_decoder, sigma_policy, DecoderSettings, FileConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_EMPTY: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_CAP: u8 = 4;

#[derive(Parser)]
#[command(name = "lgsd", version, about = "Lattice-Gaussian sphere decoders: decode, sweep and verify")]
struct Cli {
    /// Worker threads for sweeps (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one target vector against a basis read from text files.
    Decode(DecodeArgs),
    /// Monte-Carlo BER sweep over SNR and decoders; writes CSV.
    Ber(SweepArgs),
    /// Node-count statistics over a grid of initial pruning sizes; writes CSV.
    Nodes(NodesArgs),
    /// Run randomized property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderName {
    Babai,
    Fp,
    Esd,
    Rsd,
    Klein,
    Ml,
}

#[derive(Args)]
struct SigmaArgs {
    /// Fixed Gaussian parameter sigma.
    #[arg(long)]
    sigma: Option<f64>,
    /// Sigma policy; `paper` is min|r_ii| / (2 sqrt(pi)).
    #[arg(long)]
    sigma_policy: Option<String>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Basis matrix: one row per line, columns are basis vectors.
    #[arg(long)]
    matrix: PathBuf,
    /// Target vector.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, value_enum)]
    decoder: DecoderName,
    /// Initial pruning size for esd and rsd.
    #[arg(long, default_value_t = 10.0)]
    k: f64,
    /// Sphere radius for fp.
    #[arg(long)]
    radius: Option<f64>,
    /// Sample count for klein.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed for klein.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate protection (default: on for rsd, off for esd).
    #[arg(long)]
    protection: Option<bool>,
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    j_max: usize,
    /// LLL-reduce the triangular factor before decoding.
    #[arg(long)]
    lll: bool,
    #[arg(long, default_value_t = DEFAULT_LLL_DELTA)]
    lll_delta: f64,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: u64,
    #[command(flatten)]
    sigma: SigmaArgs,
    /// Write saved search nodes as tab-separated lines to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_tx: Option<usize>,
    #[arg(long)]
    qam: Option<usize>,
    /// Comma-separated Eb/N0 values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated decoders: babai, ml, esd:K, rsd:K, klein:N.
    #[arg(long, value_delimiter = ',')]
    decoders: Option<Vec<String>>,
    #[arg(long)]
    lll: bool,
    #[arg(long)]
    mmse: bool,
    #[arg(long)]
    lll_delta: Option<f64>,
    #[arg(long)]
    j_max: Option<usize>,
    #[arg(long)]
    node_cap: Option<u64>,
    #[command(flatten)]
    sigma: SigmaArgs,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock decode times in avg_time_ns (not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct NodesArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Comma-separated initial pruning sizes.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<f64>>,
    /// Pruned decoder to measure: rsd or esd.
    #[arg(long)]
    decoder: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suites to run: theorem1, theorem5, bounds, tail, gain, k1-babai,
    /// theta, theorem4, lemma3, or all.
    #[arg(required = true)]
    suites: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    /// Largest dimension for the bounds suite.
    #[arg(long)]
    n: Option<usize>,
    /// Largest initial pruning size for the bounds suite.
    #[arg(long)]
    k: Option<f64>,
}

/// Errors that select a specific exit code.
#[derive(Debug)]
enum Outcome {
    Empty,
    VerifyFailed,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Empty => write!(f, "empty outcome: no lattice point satisfied the pruning rule"),
            Outcome::VerifyFailed => write!(f, "verification failed"),
        }
    }
}

impl std::error::Error for Outcome {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if code != EXIT_EMPTY {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(o) = err.downcast_ref::<Outcome>() {
        return match o {
            Outcome::Empty => EXIT_EMPTY,
            Outcome::VerifyFailed => EXIT_VERIFY,
        };
    }
    match err.downcast_ref::<lgsd_core::Error>() {
        Some(lgsd_core::Error::NodeCapExceeded { .. }) => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode(args) => cmd_decode(args),
        Command::Ber(args) => {
            let file = args.config.as_deref().map(load).transpose()?.unwrap_or_default();
            let cfg = build_sweep(&args, &file, None)?;
            let cells = with_threads(cli.threads, || run_sweep(&cfg))??;
            write_output(args.out.as_deref().or(file.output.out.as_deref().map(Path::new)), &ber_csv(&cells))
        }
        Command::Nodes(args) => cmd_nodes(args, cli.threads),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        builder = builder.num_threads(t);
    }
    Ok(builder.build().context("building thread pool")?.install(f))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_decode(args: DecodeArgs) -> Result<()> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let matrix = parse_matrix(&read(&args.matrix)?)?;
    let target = parse_vector(&read(&args.target)?)?;
    if matrix.nrows() != target.len() {
        bail!("matrix has {} rows but the target has {} entries", matrix.nrows(), target.len());
    }
    let basis = LatticeBasis::new(matrix)?;
    let sigma = sigma_policy(args.sigma.sigma, args.sigma.sigma_policy.as_deref())?;

    let mut opts = match args.decoder {
        DecoderName::Esd => DecodeOptions::esd(args.k),
        _ => DecodeOptions::rsd(args.k),
    };
    if let Some(p) = args.protection {
        opts.candidate_protection = p;
    }
    opts.sigma_policy = sigma;
    opts.j_max = args.j_max;
    opts.use_lll = args.lll;
    opts.lll_delta = args.lll_delta;
    opts.node_cap = args.node_cap;
    opts.trace = args.trace.is_some();

    let kind = match args.decoder {
        DecoderName::Babai => DecoderKind::Babai,
        DecoderName::Fp => DecoderKind::FinckePohst {
            radius: args.radius.context("--radius is required for the fp decoder")?,
        },
        DecoderName::Esd => DecoderKind::Esd,
        DecoderName::Rsd => DecoderKind::Rsd,
        DecoderName::Klein => DecoderKind::Klein { samples: args.samples, seed: args.seed },
        DecoderName::Ml => DecoderKind::Ml,
    };
    let out = decode_basis(&basis, &target, kind, &opts)?;
    if let Some(path) = &args.trace {
        std::fs::write(path, out.trace_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }

    let name = args.decoder.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut text = format!("decoder: {name}\n");
    match &out.best {
        Some(x) => {
            text += &format!("best: {}\n", format_int_vector(x));
            text += &format!("distance: {}\n", out.best_dist);
        }
        None => text += "best: none\n",
    }
    text += &format!("visited_nodes: {}\n", out.visited_nodes);
    text += &format!("candidates: {}\n", out.candidate_count());
    if matches!(args.decoder, DecoderName::Rsd | DecoderName::Esd) {
        text += &format!("protected: {}\n", out.protected_count);
    }
    print!("{text}");
    if out.is_empty() {
        return Err(Outcome::Empty.into());
    }
    Ok(())
}

/// Merge flags over the config file into a validated sweep configuration.
fn build_sweep(args: &SweepArgs, file: &FileConfig, decoders: Option<Vec<String>>) -> Result<MimoConfig> {
    let exp = &file.experiment;
    let seed = args.seed.or(exp.seed).context("a seed is required (--seed or experiment.seed)")?;
    let dec = &file.decoders;
    let settings = DecoderSettings {
        sigma: match (args.sigma.sigma, args.sigma.sigma_policy.as_deref()) {
            (None, None) => sigma_policy(dec.sigma, dec.sigma_policy.as_deref())?,
            (s, p) => sigma_policy(s, p)?,
        },
        j_max: args.j_max.or(dec.j_max).unwrap_or(DEFAULT_J_MAX),
        esd_protection: dec.esd_protection.unwrap_or(false),
        rsd_protection: dec.rsd_protection.unwrap_or(true),
        node_cap: args.node_cap.or(dec.node_cap).unwrap_or(DEFAULT_NODE_CAP),
    };
    let list = decoders
        .or_else(|| args.decoders.clone())
        .or_else(|| dec.list.clone())
        .unwrap_or_else(|| vec!["babai".into(), "rsd:10".into(), "rsd:100".into()]);
    let decoders = list.iter().map(|d| parse_decoder(d, &settings)).collect::<Result<Vec<_>>>()?;
    let pre = &file.preprocessing;
    let cfg = MimoConfig {
        n_tx: args.n_tx.or(exp.n_tx).unwrap_or(4),
        qam_order: args.qam.or(exp.qam).unwrap_or(16),
        snr_db_grid: args.snr.clone().or_else(|| exp.snr_db.clone()).unwrap_or_else(|| vec![11.0, 13.0, 15.0]),
        trials: args.trials.or(exp.trials).unwrap_or(1000),
        seed,
        lll: args.lll || pre.lll.unwrap_or(false),
        mmse: args.mmse || pre.mmse.unwrap_or(false),
        lll_delta: args.lll_delta.or(pre.lll_delta).unwrap_or(DEFAULT_LLL_DELTA),
        decoders,
        timing: args.timing || file.output.timing.unwrap_or(false),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_nodes(args: NodesArgs, threads: Option<usize>) -> Result<()> {
    let file = args.sweep.config.as_deref().map(load).transpose()?.unwrap_or_default();
    let nodes = &file.nodes;
    let decoder = args.decoder.clone().or_else(|| nodes.decoder.clone()).unwrap_or_else(|| "rsd".into());
    if decoder != "rsd" && decoder != "esd" {
        bail!("nodes measures a pruned decoder: rsd or esd, got {decoder:?}");
    }
    let grid = args
        .k_grid
        .clone()
        .or_else(|| nodes.k_grid.clone())
        .unwrap_or_else(|| vec![1.0, 5.0, 10.0, 50.0, 100.0]);
    let entries: Vec<String> = grid.iter().map(|k| format!("{decoder}:{k}")).collect();
    let mut cfg = build_sweep(&args.sweep, &file, Some(entries))?;
    if args.sweep.snr.is_none() {
        if let Some(snr) = nodes.snr_db {
            cfg.snr_db_grid = vec![snr];
        }
    }
    let cells = with_threads(threads, || run_sweep(&cfg))??;
    let out = args.sweep.out.as_deref().or(file.output.out.as_deref().map(Path::new));
    write_output(out, &nodes_csv(&cells))?;

    let paper_sigma = cfg.decoders.iter().all(|d| d.options.sigma_policy == Default::default());
    let broken: Vec<String> = cells
        .iter()
        .filter(|c| paper_sigma && c.max_s as f64 > c.dim as f64 * c.k.unwrap_or(f64::INFINITY))
        .map(|c| format!("snr {} k {:?}: max |S| = {} > {}", c.snr_db, c.k, c.max_s, c.dim as f64 * c.k.unwrap_or(0.0)))
        .collect();
    if !broken.is_empty() {
        for b in &broken {
            eprintln!("node bound violated: {b}");
        }
        return Err(Outcome::VerifyFailed.into());
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let seed = args.seed.context("--seed is required for verify")?;
    let mut suites = Vec::new();
    for name in &args.suites {
        if name == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(Suite::parse(name).with_context(|| format!("unknown suite {name:?}"))?);
        }
    }
    let params = SuiteParams { seed, instances: args.instances, n_max: args.n, k_max: args.k };
    let mut all_passed = true;
    for suite in suites {
        let report = run_suite(suite, &params)?;
        println!("{report}");
        all_passed &= report.passed();
    }
    if !all_passed {
        return Err(Outcome::VerifyFailed.into());
    }
    Ok(())
}
