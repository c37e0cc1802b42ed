//! `biasprobe` command-line interface.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use biasprobe::complexity::{measure_sample, measure_traversal, spectrum};
use biasprobe::csv::{self, Table};
use biasprobe::experiments::*;
use biasprobe::grid::{render_pgm, sample_grid, sample_traversals};
use biasprobe::net::{ActivationKind, ArchSpec, InitSpec, Network};
use biasprobe::pgm::GrayImage;
use biasprobe::rng;
use biasprobe::transformer::{SweepAxis, TransformerConfig};
use biasprobe::{FunctionSample, GridSpec, Measure};

use config::Config;

const DEFAULT_OUT_DIR: &str = "biasprobe-out";

#[derive(Debug, Parser)]
#[command(name = "biasprobe", version, about = "Probe the simplicity bias of neural architectures")]
struct Cli {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Artifact directory; each command writes to a subdirectory named after it.
    #[arg(long, global = true, env = "BIASPROBE_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = one per core). Output bytes do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score random networks of one architecture.
    Probe(ProbeArgs),
    /// Score a function sample stored as PGM or CSV.
    Complexity(ComplexityArgs),
    /// Depth × weight-scale heatmap sweep.
    Sweep(SweepArgs),
    /// Rank correlation between measures over a random architecture pool.
    Correlate(CorrelateArgs),
    /// Modulo-addition generalization across activations and prefactors.
    Modulo(ModuloArgs),
    /// Colored-MNIST shortcut study.
    Cmnist(CmnistArgs),
    /// Coordinate-MLP fits, trajectories and weight shuffling.
    Inr(InrArgs),
    /// LZ complexity of sequences decoded by random transformers.
    Transformer(TransformerArgs),
    /// Render a network's function map or a stored sample as PGM.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Architecture identifier, e.g. mlp-tanh-i2-d3-w64-a2.0-p1.0-b1.0.
    #[arg(long, default_value = "mlp-relu-i2-d1-w64-a1.0-p1.0-b1.0")]
    arch: ArchSpec,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Grid points per axis (two-input networks).
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Corners and points per segment for higher-dimensional inputs.
    #[arg(long, default_value_t = 64)]
    traversal_points: usize,
    #[arg(long, value_delimiter = ',', default_value = "fourier,chebyshev,lz")]
    measures: Vec<Measure>,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    /// `.pgm` image or CSV with a `value` column in grid order.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "fourier,chebyshev,lz")]
    measures: Vec<Measure>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "relu")]
    activation: ActivationKind,
    #[arg(long)]
    residual: bool,
    #[arg(long)]
    layernorm: bool,
    #[arg(long)]
    gating: bool,
    /// Sweep the unbiased model with this largest frequency instead of an MLP.
    #[arg(long)]
    unbiased: Option<usize>,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    depths: Vec<usize>,
    /// Weight scales; ten log-spaced values in [0.5, 6] by default.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, value_delimiter = ',', default_value = "fourier")]
    measures: Vec<Measure>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[arg(long, default_value_t = 200)]
    pool: usize,
    #[arg(long, value_delimiter = ',', default_value = "fourier,chebyshev,lz")]
    measures: Vec<Measure>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(Debug, Args)]
struct ModuloArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,7,4")]
    moduli: Vec<usize>,
    /// ReLU-like activations run at prefactor 1 only.
    #[arg(long, value_delimiter = ',', default_value = "relu,tanh,gaussian,sine")]
    activations: Vec<ActivationKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4,8,16")]
    prefactors: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 3000)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
}

#[derive(Debug, Args)]
struct CmnistArgs {
    /// Directory holding the four MNIST IDX files (gzipped or not).
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "tanh,gaussian,sine")]
    activations: Vec<ActivationKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4,8")]
    prefactors: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long, default_value_t = 6000)]
    train_size: usize,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.002)]
    learning_rate: f64,
}

#[derive(Debug, Args)]
struct InrArgs {
    /// `shapes`, `waves`, `waves:<frequency>` or a path to a square PGM.
    #[arg(long, value_delimiter = ',', default_value = "shapes,waves")]
    targets: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "relu,tanh,sine")]
    activations: Vec<ActivationKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 3000)]
    iterations: usize,
    #[arg(long, default_value_t = 0.02)]
    learning_rate: f64,
    #[arg(long, default_value_t = 50)]
    log_every: usize,
    #[arg(long, default_value_t = 20)]
    reference_seeds: usize,
    #[arg(long, default_value_t = 10)]
    shuffles: usize,
}

#[derive(Debug, Args)]
struct TransformerArgs {
    #[arg(long, default_value_t = 1000)]
    sequences: usize,
    #[arg(long, default_value_t = 6)]
    layers: usize,
    #[arg(long, default_value_t = 256)]
    d_model: usize,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    #[arg(long, default_value_t = 5000)]
    vocab: usize,
    #[arg(long, default_value_t = 128)]
    context: usize,
    #[arg(long, default_value = "gelu")]
    activation: ActivationKind,
    #[arg(long, default_value_t = 1.0)]
    ln_scaling: f64,
    /// Any of `activation`, `depth`, `ln-scaling`.
    #[arg(long, value_delimiter = ',', default_value = "activation,depth,ln-scaling")]
    axes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,4,6")]
    depth_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    ln_values: Vec<f64>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Architecture to sample (two inputs).
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    arch: Option<ArchSpec>,
    /// Stored sample (`.pgm` or CSV) to render instead.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Seed index of the sampled network.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Also write the log-magnitude spectrum.
    #[arg(long)]
    spectrum: bool,
    #[arg(long, default_value = "render")]
    name: String,
}

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Failure {
    Io = 1,
    Config = 2,
    Numerical = 3,
}

fn classify(err: &anyhow::Error) -> Failure {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<biasprobe::Error>() {
            return match e {
                biasprobe::Error::Io { .. } => Failure::Io,
                biasprobe::Error::Degenerate(_) => Failure::Numerical,
                e if e.is_numerical() => Failure::Numerical,
                _ => Failure::Config,
            };
        }
    }
    Failure::Config
}

/// Appends config-file values for every flag the command line left unset.
fn with_config(raw: Vec<OsString>, first: &clap::ArgMatches) -> Result<Vec<OsString>> {
    let Some(path) = first.get_one::<PathBuf>("config") else {
        return Ok(raw);
    };
    let cfg = Config::load(path)?;
    let root = Cli::command();
    let (sub_name, sub_matches) = first.subcommand().ok_or_else(|| anyhow!("missing command"))?;
    let sub = root.find_subcommand(sub_name).ok_or_else(|| anyhow!("unknown command {sub_name}"))?;
    let mut out = raw;
    for (key, value) in &cfg.entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let by_long = |a: &&clap::Arg| a.get_long() == Some(key.as_str());
        let (arg, matches) = match sub.get_arguments().find(by_long) {
            Some(a) => (a, sub_matches),
            None => match root.get_arguments().find(by_long) {
                Some(a) => (a, first),
                None => bail!("config key {key:?} is not a flag of `{sub_name}`"),
            },
        };
        if matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(format!("--{key}").into());
            out.push(value.into());
        } else {
            let on: bool = value.parse().with_context(|| format!("config key {key:?} expects true or false"))?;
            if on {
                out.push(format!("--{key}").into());
            }
        }
    }
    Ok(out)
}

fn parse_cli(raw: Vec<OsString>) -> std::result::Result<Cli, ExitCode> {
    let clap_fail = |e: clap::Error| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(Failure::Config as u8)
        } else {
            ExitCode::SUCCESS
        }
    };
    let first = Cli::command().try_get_matches_from(&raw).map_err(clap_fail)?;
    let merged = with_config(raw, &first).map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(Failure::Config as u8)
    })?;
    let matches = Cli::command().try_get_matches_from(merged).map_err(clap_fail)?;
    Cli::from_arg_matches(&matches).map_err(clap_fail)
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let jobs = cli.jobs;
    let outcome = with_jobs(jobs, || run(&cli, &out_dir)).map_err(anyhow::Error::from).and_then(|r| r);
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e) as u8)
        }
    }
}

fn run(cli: &Cli, out_dir: &Path) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Probe(a) => probe(a, seed, &Artifacts::new(out_dir.join("probe"))),
        Command::Complexity(a) => complexity(a, &Artifacts::new(out_dir.join("complexity"))),
        Command::Sweep(a) => sweep(a, seed, &Artifacts::new(out_dir.join("sweep"))),
        Command::Correlate(a) => correlate(a, seed, &Artifacts::new(out_dir.join("correlate"))),
        Command::Modulo(a) => modulo(a, seed, &Artifacts::new(out_dir.join("modulo"))),
        Command::Cmnist(a) => cmnist(a, seed, &Artifacts::new(out_dir.join("cmnist"))),
        Command::Inr(a) => inr(a, seed, &Artifacts::new(out_dir.join("inr"))),
        Command::Transformer(a) => transformer(a, seed, &Artifacts::new(out_dir.join("transformer"))),
        Command::Render(a) => render(a, seed, &Artifacts::new(out_dir.join("render"))),
    }
}

fn announce(out: &Artifacts) {
    if let Some(d) = out.dir() {
        println!("wrote {}", d.display());
    }
}

fn probe(a: &ProbeArgs, seed: u64, out: &Artifacts) -> Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be positive");
    }
    let mut t = Table::new(&["arch", "seed", "measure", "raw"]);
    for s in 0..a.seeds {
        let net_seed = rng::derive(seed, &[s as u64]);
        let net = Network::init(&a.arch, &InitSpec::seeded(net_seed))?;
        let scores = if net.input_dim() == 2 {
            let sample = sample_grid(&net, GridSpec::new(2, a.grid)?)?;
            if s == 0 {
                out.csv("sample.csv", &sample.to_csv())?;
                out.pgm("map.pgm", &render_pgm(&sample)?)?;
            }
            a.measures.iter().map(|&m| measure_sample(&sample, m)).collect::<biasprobe::Result<Vec<_>>>()?
        } else {
            vec![measure_traversal(&sample_traversals(&net, a.traversal_points, net_seed)?)?]
        };
        for sc in scores {
            println!("{} seed={net_seed} {}={}", a.arch.describe(), sc.measure, sc.raw);
            t.row(vec![a.arch.describe(), net_seed.to_string(), sc.measure.to_string(), csv::real(sc.raw)]);
        }
    }
    out.csv("scores.csv", &t)?;
    announce(out);
    Ok(())
}

/// Reads a PGM (column = x, row = y) or a CSV whose `value` column (or only
/// column) lists a square grid in grid order.
fn read_sample(path: &Path) -> Result<FunctionSample> {
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let img = GrayImage::read(path)?;
        if img.width != img.height {
            bail!("{}: image must be square", path.display());
        }
        let m = img.width;
        let unit = img.to_unit();
        let values = (0..m * m).map(|i| unit[(i % m) * m + i / m]).collect();
        return Ok(FunctionSample::new(GridSpec::square(m), values, path.display().to_string())?);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = csv::parse(&text);
    let (header, body) = rows.split_first().ok_or_else(|| anyhow!("{}: empty CSV", path.display()))?;
    let col = header.iter().position(|h| h == "value").unwrap_or(header.len() - 1);
    let values = body
        .iter()
        .map(|r| r.get(col).and_then(|v| v.trim().parse::<f64>().ok()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| anyhow!("{}: non-numeric value", path.display()))?;
    let index_cols = header.iter().filter(|h| h.starts_with('i')).count();
    let dim = if index_cols == 1 { 1 } else { 2 };
    let m = if dim == 1 { values.len() } else { (values.len() as f64).sqrt().round() as usize };
    Ok(FunctionSample::new(GridSpec::new(dim, m)?, values, path.display().to_string())?)
}

fn complexity(a: &ComplexityArgs, out: &Artifacts) -> Result<()> {
    let sample = read_sample(&a.input)?;
    let mut t = Table::new(&["input", "measure", "raw"]);
    for &m in &a.measures {
        let sc = measure_sample(&sample, m)?;
        println!("{}={}", m, sc.raw);
        t.row(vec![a.input.display().to_string(), m.to_string(), csv::real(sc.raw)]);
    }
    out.csv("scores.csv", &t)?;
    announce(out);
    Ok(())
}

fn sweep(a: &SweepArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let template = match a.unbiased {
        Some(k) => ArchSpec::unbiased(2, k),
        None => ArchSpec::mlp(a.activation, 1, a.width)
            .with_residual(a.residual)
            .with_layernorm(a.layernorm)
            .with_gating(a.gating),
    };
    let mut spec = SweepSpec::new(template);
    if a.unbiased.is_none() {
        spec.depths = a.depths.clone();
    }
    if let Some(s) = &a.scales {
        spec.scales = s.clone();
    }
    spec.seeds = a.seeds;
    spec.measures = a.measures.clone();
    spec.grid = GridSpec::new(2, a.grid)?;
    spec.base_seed = seed;
    let result = run_heatmap_sweep(&spec)?;
    result.write(out, "")?;
    for &m in &a.measures {
        let means: Vec<f64> = result.raw_cells(m).iter().flatten().map(|c| c.mean).collect();
        let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{} {m}: cell means in [{lo:.4}, {hi:.4}], {} failures", spec.template.describe(), result.failures.len());
    }
    announce(out);
    Ok(())
}

fn correlate(a: &CorrelateArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let study = run_correlation_study(&random_pool(a.pool, seed), &a.measures, GridSpec::new(2, a.grid)?)?;
    study.write(out)?;
    for (x, y, rho) in &study.pairs {
        println!("{x} vs {y}: spearman {rho:.4}");
    }
    announce(out);
    Ok(())
}

fn modulo(a: &ModuloArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let runs = a
        .activations
        .iter()
        .map(|&act| (act, if act.is_relu_like() { vec![1.0] } else { a.prefactors.clone() }))
        .collect();
    let spec = ModuloStudySpec {
        moduli: a.moduli.clone(),
        dim: a.dim,
        runs,
        seeds: a.seeds,
        depth: a.depth,
        width: a.width,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        base_seed: seed,
        ..ModuloStudySpec::default()
    };
    let study = run_modulo_study(&spec)?;
    study.write(out)?;
    for p in &study.peaks {
        println!("M={} {} peak prefactor {:.4}", p.modulus, spec.fit_activation, p.peak_prefactor);
    }
    announce(out);
    Ok(())
}

fn cmnist(a: &CmnistArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let spec = CmnistStudySpec {
        activations: a.activations.clone(),
        prefactors: a.prefactors.clone(),
        seeds: a.seeds,
        train_size: a.train_size,
        test_size: a.test_size,
        depth: a.depth,
        width: a.width,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        mnist_dir: a.mnist_dir.clone(),
        base_seed: seed,
        ..CmnistStudySpec::default()
    };
    let study = run_cmnist_study(&spec)?;
    study.write(out)?;
    announce(out);
    Ok(())
}

fn parse_target(s: &str) -> Result<CoordinateTarget> {
    Ok(match s {
        "shapes" => CoordinateTarget::Shapes,
        "waves" => CoordinateTarget::Waves { frequency: 2.0 },
        _ => match s.strip_prefix("waves:") {
            Some(f) => CoordinateTarget::Waves { frequency: f.parse().with_context(|| format!("bad frequency in {s:?}"))? },
            None => CoordinateTarget::Image { path: PathBuf::from(s) },
        },
    })
}

fn inr(a: &InrArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let spec = CoordinateStudySpec {
        targets: a.targets.iter().map(|t| parse_target(t)).collect::<Result<_>>()?,
        activations: a.activations.clone(),
        scales: a.scales.clone(),
        grid_points: a.grid,
        depth: a.depth,
        width: a.width,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        log_every: a.log_every,
        reference_seeds: a.reference_seeds,
        shuffles: a.shuffles,
        base_seed: seed,
    };
    let study = run_coordinate_study(&spec)?;
    study.write(out)?;
    for r in &study.runs {
        println!(
            "{} {} scale {}: C init {:.3} trained {:.3} shuffled {:.3} (untrained {:.3} ± {:.3})",
            r.target,
            r.activation,
            r.scale,
            r.init_complexity,
            r.trained_complexity,
            r.shuffled_complexity,
            r.reference_mean(),
            r.reference_std()
        );
    }
    announce(out);
    Ok(())
}

fn transformer(a: &TransformerArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let base = TransformerConfig {
        n_layers: a.layers,
        d_model: a.d_model,
        n_heads: a.heads,
        vocab_size: a.vocab,
        context: a.context,
        activation: a.activation,
        ln_scaling: a.ln_scaling,
        seed,
        ..TransformerConfig::default()
    };
    let axes = a
        .axes
        .iter()
        .map(|x| match x.as_str() {
            "activation" => Ok(SweepAxis::Activation(vec![ActivationKind::Relu, ActivationKind::Gelu])),
            "depth" => Ok(SweepAxis::Depth(a.depth_values.clone())),
            "ln-scaling" | "ln_scaling" | "ln" => Ok(SweepAxis::LnScaling(a.ln_values.clone())),
            other => Err(anyhow!("unknown transformer axis {other:?}")),
        })
        .collect::<Result<Vec<_>>>()?;
    let study = run_transformer_study(&TransformerStudySpec { base, axes, sequences: a.sequences })?;
    study.write(out)?;
    for s in &study.sweeps {
        for c in &s.cells {
            println!("{}={}: mean LZ {:.3} ± {:.3}", s.axis, c.label, c.mean(), c.std_err());
        }
    }
    println!("uniform control: mean LZ {:.3} ± {:.3}", study.control_mean(), study.control_std_err());
    announce(out);
    Ok(())
}

fn render(a: &RenderArgs, seed: u64, out: &Artifacts) -> Result<()> {
    let sample = match (&a.arch, &a.input) {
        (Some(arch), _) => {
            let net = Network::init(arch, &InitSpec::seeded(rng::derive(seed, &[a.index as u64])))?;
            sample_grid(&net, GridSpec::new(2, a.grid)?)?
        }
        (None, Some(path)) => read_sample(path)?,
        (None, None) => bail!("render needs --arch or --input"),
    };
    out.pgm(&format!("{}.pgm", a.name), &render_pgm(&sample)?)?;
    if a.spectrum {
        out.pgm(&format!("{}_spectrum.pgm", a.name), &spectrum(&sample)?.render_log()?)?;
    }
    announce(out);
    Ok(())
}
