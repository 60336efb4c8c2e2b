//! Command-line front end for the burst-switching simulator: single runs,
//! full-factorial scheme comparisons, parameter sweeps, and configuration
//! validation. Settings layer as built-in defaults, then the configuration
//! file, then command-line flags; every command echoes its fully resolved
//! configuration into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use obsim_core::analysis::{metrics_csv, sweep_threshold, sweep_weights, threshold_csv, weights_csv};
use obsim_core::engine::run;
use obsim_core::{Scheme, SimConfig, SimMetrics};

#[derive(Parser)]
#[command(
    name = "obsim",
    version,
    about = "Optical burst switching simulator with adaptive hybrid \
             deflection and retransmission",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one simulation and write its metrics row
    Run(RunArgs),
    /// Run every (scheme, load, seed) combination and aggregate per cell
    Compare(CompareArgs),
    /// Re-run the configuration once per pinned decision threshold
    SweepThreshold(SweepThresholdArgs),
    /// Re-run the configuration over a grid of threshold-weight pairs
    SweepWeights(SweepWeightsArgs),
    /// Merge defaults, file, and flags, then validate and echo the result
    ValidateConfig(ValidateArgs),
}

/// Simulation parameters. Each flag overrides the same-named configuration
/// key; unset flags fall back to the configuration file, then to built-in
/// defaults.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML configuration file; flags given here override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Network: nsfnet, cost239, or the path of a topology file
    /// [key: topology, default: nsfnet]
    #[arg(long, value_name = "NAME|FILE")]
    topology: Option<String>,

    /// Contention scheme: ahdr, mlhdr, retransmit_only, deflect_only
    /// (retransmit and deflect are accepted shorthands)
    /// [key: scheme, default: ahdr]
    #[arg(long, value_name = "SCHEME", value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    /// Offered load as a fraction of total network capacity, in (0, 1]
    /// [key: load, default: 0.5]
    #[arg(long, value_name = "FRACTION")]
    load: Option<f64>,

    /// Seed for every random stream in the run [key: seed, default: 1]
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Simulated time horizon in seconds [key: duration_s, default: 60]
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,

    /// Warm-up span excluded from metrics, in seconds
    /// [key: warmup_s, default: 1]
    #[arg(long, value_name = "SECONDS")]
    warmup: Option<f64>,

    /// Mean of the exponential burst-size distribution, in bytes
    /// [key: mean_burst_bytes, default: 400000]
    #[arg(long, value_name = "BYTES")]
    mean_burst_bytes: Option<f64>,

    /// Weight of link loss rate in the per-link drop probability; the two
    /// alpha weights must sum to 1 [key: alpha_blr, default: 0.5]
    #[arg(long, value_name = "WEIGHT")]
    alpha_blr: Option<f64>,

    /// Weight of link utilization in the per-link drop probability
    /// [key: alpha_u, default: 0.5]
    #[arg(long, value_name = "WEIGHT")]
    alpha_u: Option<f64>,

    /// Weight of network loss rate in the adaptive deflection threshold;
    /// the two beta weights may sum to at most 1
    /// [key: beta_blr, default: 0.4]
    #[arg(long, value_name = "WEIGHT")]
    beta_blr: Option<f64>,

    /// Weight of network utilization in the adaptive deflection threshold
    /// [key: beta_u, default: 0.2]
    #[arg(long, value_name = "WEIGHT")]
    beta_u: Option<f64>,

    /// Fix the deflection threshold instead of letting it adapt
    /// [key: pinned_sp_th, default: unset]
    #[arg(long, value_name = "THRESHOLD")]
    pinned_sp_th: Option<f64>,

    /// Retransmission budget per burst [key: n_ret, default: 1]
    #[arg(long, value_name = "N")]
    n_ret: Option<u32>,

    /// Deflection budget per burst under the hop-limited scheme
    /// [key: mlhdr_max_deflections, default: 1]
    #[arg(long, value_name = "N")]
    mlhdr_max_deflections: Option<u32>,

    /// Upper bound of the uniform idle delay before a retransmission, in
    /// seconds [key: max_retransmit_idle_s, default: 0.05]
    #[arg(long, value_name = "SECONDS")]
    max_retransmit_idle: Option<f64>,

    /// Sliding-window length for link statistics, in seconds
    /// [key: stats_window_s, default: 1]
    #[arg(long, value_name = "SECONDS")]
    stats_window: Option<f64>,

    /// Interval between routing-table and threshold refreshes, in seconds
    /// [key: stats_update_period_s, default: 0.1]
    #[arg(long, value_name = "SECONDS")]
    stats_update_period: Option<f64>,

    /// Switching-matrix configuration time per burst, in seconds
    /// [key: t_conf_s, default: 0.00001]
    #[arg(long, value_name = "SECONDS")]
    t_conf: Option<f64>,

    /// Header processing time per hop, in seconds
    /// [key: t_p_s, default: 0.00001]
    #[arg(long, value_name = "SECONDS")]
    t_p: Option<f64>,

    /// Candidate routes may be at most this factor longer than the
    /// shortest [key: route_stretch, default: 4]
    #[arg(long, value_name = "FACTOR")]
    route_stretch: Option<f64>,
}

impl ConfigArgs {
    /// Layers defaults, then the configuration file, then the flags, and
    /// validates the merged result.
    fn resolve(&self) -> anyhow::Result<SimConfig> {
        let mut config: SimConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| {
                    format!("reading configuration file {}", path.display())
                })?;
                toml::from_str(&text).with_context(|| {
                    format!("parsing configuration file {}", path.display())
                })?
            }
            None => SimConfig::default(),
        };
        if let Some(v) = &self.topology {
            config.topology = v.clone();
        }
        if let Some(v) = self.scheme {
            config.scheme = v;
        }
        if let Some(v) = self.load {
            config.load = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.duration {
            config.duration_s = v;
        }
        if let Some(v) = self.warmup {
            config.warmup_s = v;
        }
        if let Some(v) = self.mean_burst_bytes {
            config.mean_burst_bytes = v;
        }
        if let Some(v) = self.alpha_blr {
            config.alpha_blr = v;
        }
        if let Some(v) = self.alpha_u {
            config.alpha_u = v;
        }
        if let Some(v) = self.beta_blr {
            config.beta_blr = v;
        }
        if let Some(v) = self.beta_u {
            config.beta_u = v;
        }
        if let Some(v) = self.pinned_sp_th {
            config.pinned_sp_th = Some(v);
        }
        if let Some(v) = self.n_ret {
            config.n_ret = v;
        }
        if let Some(v) = self.mlhdr_max_deflections {
            config.mlhdr_max_deflections = v;
        }
        if let Some(v) = self.max_retransmit_idle {
            config.max_retransmit_idle_s = v;
        }
        if let Some(v) = self.stats_window {
            config.stats_window_s = v;
        }
        if let Some(v) = self.stats_update_period {
            config.stats_update_period_s = v;
        }
        if let Some(v) = self.t_conf {
            config.t_conf_s = v;
        }
        if let Some(v) = self.t_p {
            config.t_p_s = v;
        }
        if let Some(v) = self.route_stretch {
            config.route_stretch = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory for result CSVs and the resolved-configuration echo
    #[arg(long, value_name = "DIR", env = "OBSIM_OUT_DIR", default_value = "obsim-out")]
    out: PathBuf,
}

impl OutArgs {
    fn prepare(&self) -> anyhow::Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| {
            format!("creating output directory {}", self.out.display())
        })?;
        Ok(&self.out)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Also record the per-burst audit trace to this file
    /// [key: collect_trace, default: false]
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Schemes to compare, comma-separated
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        value_parser = parse_scheme,
        default_values_t = vec![Scheme::Ahdr, Scheme::Mlhdr]
    )]
    schemes: Vec<Scheme>,
    /// Offered loads to compare, comma-separated
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_values_t = vec![0.2, 0.5, 0.8])]
    loads: Vec<f64>,
    /// Seeds to average over, comma-separated
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SweepThresholdArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Pinned decision thresholds to sweep, comma-separated
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        default_values_t = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    )]
    thresholds: Vec<f64>,
    /// Seeds to average over, comma-separated (defaults to the base seed)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SweepWeightsArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Grid steps for both threshold weights, comma-separated; pairs whose
    /// weights sum past 1 are skipped
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        default_values_t = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    )]
    weight_steps: Vec<f64>,
    /// Seeds to average over, comma-separated (defaults to the base seed)
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "retransmit" => Ok(Scheme::RetransmitOnly),
        "deflect" => Ok(Scheme::DeflectOnly),
        other => other.parse(),
    }
}

/// Floating-point CSV format used for derived columns: 17 significant
/// digits, which every f64 round-trips through exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for a single observation.
fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn effective_seeds(requested: &[u64], base: u64) -> Vec<u64> {
    if requested.is_empty() {
        vec![base]
    } else {
        requested.to_vec()
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let mut config = args.config.resolve()?;
    config.collect_trace = args.trace.is_some();
    let out_dir = args.out.prepare()?;
    write_file(out_dir, "config.toml", &config.to_toml_string())?;

    let outcome = run(&config)?;
    if let Some(trace_path) = &args.trace {
        let mut text = String::new();
        for record in &outcome.trace {
            writeln!(text, "{record:?}").expect("writing to a string cannot fail");
        }
        fs::write(trace_path, text)
            .with_context(|| format!("writing trace {}", trace_path.display()))?;
        println!("trace: {} records -> {}", outcome.trace.len(), trace_path.display());
    }
    let path = write_file(out_dir, "run.csv", &metrics_csv(std::slice::from_ref(&outcome.metrics)))?;

    let m = &outcome.metrics;
    println!(
        "run complete: scheme={} topology={} load={} seed={} blr={:.6} delivered={} lost={}",
        m.scheme, m.topology, m.load, m.seed, m.blr, m.delivered, m.lost
    );
    println!("metrics: {}", path.display());
    Ok(())
}

const AGGREGATE_CSV_HEADER: &str =
    "scheme,topology,load,runs,mean_blr,stddev_blr,mean_delay_s,mean_deflection_ratio";

fn cmd_compare(args: &CompareArgs) -> anyhow::Result<()> {
    if args.schemes.is_empty() || args.loads.is_empty() || args.seeds.is_empty() {
        bail!("compare needs at least one scheme, one load, and one seed");
    }
    let base = args.config.resolve()?;
    let out_dir = args.out.prepare()?;
    write_file(out_dir, "config.toml", &base.to_toml_string())?;

    let mut rows: Vec<SimMetrics> = Vec::new();
    for &scheme in &args.schemes {
        for &load in &args.loads {
            for &seed in &args.seeds {
                let mut config = base.clone();
                config.scheme = scheme;
                config.load = load;
                config.seed = seed;
                rows.push(run(&config)?.metrics);
            }
        }
    }
    let runs_path = write_file(out_dir, "runs.csv", &metrics_csv(&rows))?;

    // Rows are laid out scheme-major, then load, then seed, so each chunk
    // of seeds.len() rows is exactly one (scheme, load) cell.
    let mut aggregates = String::from(AGGREGATE_CSV_HEADER);
    aggregates.push('\n');
    for cell in rows.chunks(args.seeds.len()) {
        let blrs: Vec<f64> = cell.iter().map(|m| m.blr).collect();
        let delays: Vec<f64> = cell.iter().map(|m| m.mean_delay_s).collect();
        let ratios: Vec<f64> = cell.iter().map(|m| m.deflection_ratio).collect();
        let first = &cell[0];
        writeln!(
            aggregates,
            "{},{},{},{},{},{},{},{}",
            first.scheme,
            first.topology,
            fmt_f64(first.load),
            cell.len(),
            fmt_f64(mean(&blrs)),
            fmt_f64(stddev(&blrs)),
            fmt_f64(mean(&delays)),
            fmt_f64(mean(&ratios)),
        )
        .expect("writing to a string cannot fail");
    }
    let agg_path = write_file(out_dir, "aggregates.csv", &aggregates)?;

    println!(
        "compare complete: {} runs ({} schemes x {} loads x {} seeds)",
        rows.len(),
        args.schemes.len(),
        args.loads.len(),
        args.seeds.len()
    );
    println!("runs: {}", runs_path.display());
    println!("aggregates: {}", agg_path.display());
    Ok(())
}

fn cmd_sweep_threshold(args: &SweepThresholdArgs) -> anyhow::Result<()> {
    if args.thresholds.is_empty() {
        bail!("sweep-threshold needs at least one threshold");
    }
    let base = args.config.resolve()?;
    let seeds = effective_seeds(&args.seeds, base.seed);
    let out_dir = args.out.prepare()?;
    write_file(out_dir, "config.toml", &base.to_toml_string())?;

    let mut raw = Vec::new();
    for &seed in &seeds {
        let mut config = base.clone();
        config.seed = seed;
        raw.extend(sweep_threshold(&config, &args.thresholds)?);
    }
    let raw_path = write_file(out_dir, "threshold_runs.csv", &threshold_csv(&raw))?;

    let mut summary = String::from("sp_th,runs,mean_blr,stddev_blr\n");
    for (i, &sp_th) in args.thresholds.iter().enumerate() {
        let blrs: Vec<f64> = (0..seeds.len())
            .map(|si| raw[si * args.thresholds.len() + i].1.blr)
            .collect();
        writeln!(
            summary,
            "{},{},{},{}",
            fmt_f64(sp_th),
            blrs.len(),
            fmt_f64(mean(&blrs)),
            fmt_f64(stddev(&blrs)),
        )
        .expect("writing to a string cannot fail");
    }
    let summary_path = write_file(out_dir, "threshold_sweep.csv", &summary)?;

    println!(
        "threshold sweep complete: {} thresholds x {} seeds",
        args.thresholds.len(),
        seeds.len()
    );
    println!("runs: {}", raw_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

fn cmd_sweep_weights(args: &SweepWeightsArgs) -> anyhow::Result<()> {
    if args.weight_steps.is_empty() {
        bail!("sweep-weights needs at least one grid step");
    }
    for &step in &args.weight_steps {
        if !(step.is_finite() && (0.0..=1.0).contains(&step)) {
            bail!(
                "configuration key `beta_blr/beta_u`: weight grid steps must lie in [0, 1], \
                 got {step}"
            );
        }
    }
    let base = args.config.resolve()?;
    let seeds = effective_seeds(&args.seeds, base.seed);
    let out_dir = args.out.prepare()?;
    write_file(out_dir, "config.toml", &base.to_toml_string())?;

    let mut raw = Vec::new();
    for &seed in &seeds {
        let mut config = base.clone();
        config.seed = seed;
        raw.extend(sweep_weights(&config, &args.weight_steps)?);
    }
    let raw_path = write_file(out_dir, "weights_runs.csv", &weights_csv(&raw))?;

    // Every seed visits the same valid weight pairs in the same order.
    let pairs = raw.len() / seeds.len();
    let mut summary = String::from("beta_blr,beta_u,runs,mean_blr,stddev_blr\n");
    for i in 0..pairs {
        let (beta_blr, beta_u, _) = raw[i];
        let blrs: Vec<f64> = (0..seeds.len()).map(|si| raw[si * pairs + i].2.blr).collect();
        writeln!(
            summary,
            "{},{},{},{},{}",
            fmt_f64(beta_blr),
            fmt_f64(beta_u),
            blrs.len(),
            fmt_f64(mean(&blrs)),
            fmt_f64(stddev(&blrs)),
        )
        .expect("writing to a string cannot fail");
    }
    let summary_path = write_file(out_dir, "weights_sweep.csv", &summary)?;

    println!("weight sweep complete: {pairs} weight pairs x {} seeds", seeds.len());
    println!("runs: {}", raw_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<()> {
    let config = args.config.resolve()?;
    println!("configuration valid");
    print!("{}", config.to_toml_string());
    Ok(())
}

fn main() {
    let result = match Cli::parse().command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::SweepThreshold(args) => cmd_sweep_threshold(&args),
        Command::SweepWeights(args) => cmd_sweep_weights(&args),
        Command::ValidateConfig(args) => cmd_validate(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
