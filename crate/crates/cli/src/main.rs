use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use timeblur::attack::{extract_all_pois, AttackConfig};
use timeblur::geo::Location;
use timeblur::geoind::{geoind, parse_epsilon, GeoIndConfig};
use timeblur::io::{read_csv, write_csv, write_csv_to, write_pois};
use timeblur::metrics::{
    compression, dataset_scores, generate_queries, query_distortion, spatial_error, QueryGenConfig,
};
use timeblur::model::Dataset;
use timeblur::preprocess::{preprocess, PreprocessConfig};
use timeblur::promesse::{promesse, PromesseConfig};
use timeblur::synth::{generate_synthetic, SyntheticSpec};

/// Anonymize GPS mobility datasets and measure privacy and utility.
#[derive(Parser)]
#[command(name = "timeblur", version)]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write the JSON run report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drop empty days, align start days, truncate and split on gaps.
    Preprocess {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Longest silence kept inside a trace, in seconds.
        #[arg(long, default_value_t = 4 * 3600)]
        max_gap: i64,
        /// Days kept from the start of each trace.
        #[arg(long, default_value_t = 20)]
        days: i64,
    },
    /// Protect a dataset with PROMESSE or Geo-Indistinguishability.
    Anonymize {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        mechanism: MechanismArgs,
    },
    /// Run an attack on a dataset.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Compare a protected dataset with its original.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Generate synthetic traces with planted POIs.
    Synth(SynthArgs),
    /// Time a mechanism on a synthetic dataset of a given size.
    Bench {
        #[command(flatten)]
        mechanism: MechanismArgs,
        /// Approximate number of input records.
        #[arg(long, default_value_t = 1_000_000)]
        records: usize,
        /// Where to write the protected dataset (default: discarded).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mechanism {
    Promesse,
    Geoind,
}

#[derive(Args)]
struct MechanismArgs {
    #[arg(long, value_enum)]
    mechanism: Mechanism,
    /// PROMESSE: spacing in meters. Geo-I: privacy level per meter, as a
    /// number or `ln(K)/L`.
    #[arg(long)]
    epsilon: String,
    /// Geo-I noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AttackArgs {
    /// Largest POI diameter, in meters.
    #[arg(long, default_value_t = 200.0)]
    diameter: f64,
    /// Shortest stay, in seconds.
    #[arg(long, default_value_t = 900)]
    min_stay: i64,
}

impl AttackArgs {
    fn config(&self) -> Result<AttackConfig> {
        Ok(AttackConfig::new(self.diameter, self.min_stay)?)
    }
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Extract POIs to a CSV file `user,lat,lon,start,end,count`.
    Pois {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        attack: AttackArgs,
    },
}

#[derive(Args)]
struct Pair {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    protected: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// POI retrieval F-score, precision and recall.
    Fscore {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        attack: AttackArgs,
        /// Matching threshold in meters (default: half the diameter).
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Mean distance of protected records to the original traces.
    SpatialError {
        #[command(flatten)]
        pair: Pair,
    },
    /// Mean relative error of random unique-user range queries.
    RangeQueries {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Window length bounds, in seconds.
        #[arg(long, default_value_t = 2 * 3600)]
        min_duration: i64,
        #[arg(long, default_value_t = 8 * 3600)]
        max_duration: i64,
        /// Half-diagonal bounds, in meters.
        #[arg(long, default_value_t = 500.0)]
        min_half_diagonal: f64,
        #[arg(long, default_value_t = 5000.0)]
        max_half_diagonal: f64,
    },
    /// Ratio of protected to original record counts.
    Compression {
        #[command(flatten)]
        pair: Pair,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the planted POIs to this CSV file.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    users: usize,
    #[arg(long, default_value_t = 3)]
    pois: usize,
    /// Planted POI diameter, in meters.
    #[arg(long, default_value_t = 100.0)]
    diameter: f64,
    /// Seconds spent at each POI.
    #[arg(long, default_value_t = 1800)]
    dwell: i64,
    /// Travel speed, in meters per second.
    #[arg(long, default_value_t = 10.0)]
    speed: f64,
    /// Seconds between records.
    #[arg(long, default_value_t = 30)]
    interval: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 45.75, allow_hyphen_values = true)]
    lat: f64,
    #[arg(long, default_value_t = 4.85, allow_hyphen_values = true)]
    lon: f64,
    /// Side of the square where traces start, in meters.
    #[arg(long, default_value_t = 20_000.0)]
    extent: f64,
}

impl SynthArgs {
    fn spec(&self) -> Result<SyntheticSpec> {
        Ok(SyntheticSpec {
            user_count: self.users,
            pois_per_trace: self.pois,
            poi_diameter: self.diameter,
            poi_dwell: self.dwell,
            travel_speed: self.speed,
            sampling_interval: self.interval,
            seed: self.seed,
            origin: Location::new(self.lat, self.lon)?,
            extent: self.extent,
            ..SyntheticSpec::default()
        })
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Report {
    command: String,
    params: Value,
    seed: Option<u64>,
    input_records: usize,
    output_records: Option<usize>,
    duration_ms: f64,
    metrics: Map<String, Value>,
}

impl Report {
    fn new(command: &str, params: Value) -> Self {
        Self {
            command: command.to_string(),
            params,
            seed: None,
            input_records: 0,
            output_records: None,
            duration_ms: 0.0,
            metrics: Map::new(),
        }
    }

    fn metric(&mut self, name: &str, value: impl Serialize) {
        self.metrics
            .insert(name.to_string(), serde_json::to_value(value).expect("serializable"));
    }
}

fn load(path: &Path) -> Result<Dataset> {
    read_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn store(d: &Dataset, path: &Path) -> Result<()> {
    write_csv(d, path).with_context(|| format!("writing {}", path.display()))
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn anonymize(d: &Dataset, m: &MechanismArgs) -> Result<Dataset> {
    Ok(match m.mechanism {
        Mechanism::Promesse => {
            let eps: f64 = m
                .epsilon
                .trim()
                .parse()
                .with_context(|| format!("PROMESSE epsilon must be a number of meters, got `{}`", m.epsilon))?;
            promesse(d, &PromesseConfig::new(eps)?)
        }
        Mechanism::Geoind => {
            let eps = parse_epsilon(&m.epsilon).map_err(anyhow::Error::msg)?;
            geoind(d, &GeoIndConfig::new(eps, m.seed)?)
        }
    })
}

fn mechanism_params(m: &MechanismArgs) -> Value {
    json!({ "mechanism": m.mechanism, "epsilon": m.epsilon })
}

fn mechanism_seed(m: &MechanismArgs) -> Option<u64> {
    matches!(m.mechanism, Mechanism::Geoind).then_some(m.seed)
}

fn run(cli: Cli) -> Result<Report> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }

    let report = match cli.command {
        Command::Preprocess { input, output, max_gap, days } => {
            let cfg = PreprocessConfig { max_gap, days };
            let mut report = Report::new(
                "preprocess",
                json!({ "input": input, "output": output, "maxGap": max_gap, "days": days }),
            );
            let d = load(&input)?;
            report.input_records = d.len();
            let start = Instant::now();
            let out = preprocess(&d, &cfg)?;
            store(&out, &output)?;
            report.duration_ms = millis(start);
            report.output_records = Some(out.len());
            report.metric("inputUsers", d.trace_count());
            report.metric("outputUsers", out.trace_count());
            report
        }
        Command::Anonymize { input, output, mechanism } => {
            let mut params = mechanism_params(&mechanism);
            params["input"] = json!(input);
            params["output"] = json!(output);
            let mut report = Report::new("anonymize", params);
            report.seed = mechanism_seed(&mechanism);
            let d = load(&input)?;
            report.input_records = d.len();
            let start = Instant::now();
            let out = anonymize(&d, &mechanism)?;
            store(&out, &output)?;
            report.duration_ms = millis(start);
            report.output_records = Some(out.len());
            report.metric("compression", compression(&d, &out).ok());
            report
        }
        Command::Attack(AttackCommand::Pois { input, output, attack }) => {
            let cfg = attack.config()?;
            let mut report = Report::new(
                "attack pois",
                json!({ "input": input, "output": output, "diameter": cfg.max_diameter, "minStay": cfg.min_stay }),
            );
            let d = load(&input)?;
            report.input_records = d.len();
            let start = Instant::now();
            let pois = extract_all_pois(&d, &cfg);
            write_pois(&pois, &output).with_context(|| format!("writing {}", output.display()))?;
            report.duration_ms = millis(start);
            let count: usize = pois.values().map(Vec::len).sum();
            report.output_records = Some(count);
            report.metric("pois", count);
            report.metric("usersWithPois", pois.values().filter(|p| !p.is_empty()).count());
            report
        }
        Command::Eval(cmd) => eval(cmd)?,
        Command::Synth(args) => {
            let spec = args.spec()?;
            let mut report = Report::new(
                "synth",
                json!({ "output": args.output, "truth": args.truth, "spec": spec }),
            );
            report.seed = Some(spec.seed);
            let start = Instant::now();
            let (d, truth) = generate_synthetic(&spec)?;
            store(&d, &args.output)?;
            if let Some(path) = &args.truth {
                write_pois(&truth, path).with_context(|| format!("writing {}", path.display()))?;
            }
            report.duration_ms = millis(start);
            report.output_records = Some(d.len());
            report.metric("users", d.trace_count());
            report.metric("plantedPois", truth.values().map(Vec::len).sum::<usize>());
            report
        }
        Command::Bench { mechanism, records, output } => {
            let base = SyntheticSpec { seed: mechanism.seed, ..SyntheticSpec::default() };
            // the estimate is an average; aim a little high to reach `records`
            let users = ((records as f64 * 1.02 / base.expected_records_per_user()).ceil() as usize).max(1);
            let spec = SyntheticSpec { user_count: users, ..base };
            let mut params = mechanism_params(&mechanism);
            params["records"] = json!(records);
            params["output"] = json!(output);
            params["spec"] = json!(spec);
            let mut report = Report::new("bench", params);
            report.seed = Some(mechanism.seed);
            let d = generate_synthetic(&spec)?.0;
            report.input_records = d.len();
            let start = Instant::now();
            let out = anonymize(&d, &mechanism)?;
            match &output {
                Some(path) => store(&out, path)?,
                None => write_csv_to(&out, io::sink())?,
            }
            report.duration_ms = millis(start);
            report.output_records = Some(out.len());
            report.metric("threads", rayon::current_num_threads());
            report.metric("recordsPerSecond", d.len() as f64 / (report.duration_ms / 1e3));
            report
        }
    };

    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &cli.report {
        std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(report)
}

fn eval(cmd: EvalCommand) -> Result<Report> {
    let pair_params = |p: &Pair| json!({ "original": p.original, "protected": p.protected });
    let load_pair = |p: &Pair| -> Result<(Dataset, Dataset)> { Ok((load(&p.original)?, load(&p.protected)?)) };

    let report = match cmd {
        EvalCommand::Fscore { pair, attack, ell } => {
            let cfg = attack.config()?;
            let ell = ell.unwrap_or(cfg.max_diameter / 2.0);
            let mut params = pair_params(&pair);
            params["diameter"] = json!(cfg.max_diameter);
            params["minStay"] = json!(cfg.min_stay);
            params["ell"] = json!(ell);
            let mut report = Report::new("eval fscore", params);
            let (o, p) = load_pair(&pair)?;
            report.input_records = o.len();
            report.output_records = Some(p.len());
            let start = Instant::now();
            let scores = dataset_scores(&o, &p, &cfg, ell)?;
            report.duration_ms = millis(start);
            report.metric("fscore", scores.fscore);
            report.metric("precision", scores.precision);
            report.metric("recall", scores.recall);
            report.metric("scoredTraces", scores.scored_traces);
            report
        }
        EvalCommand::SpatialError { pair } => {
            let mut report = Report::new("eval spatial-error", pair_params(&pair));
            let (o, p) = load_pair(&pair)?;
            report.input_records = o.len();
            report.output_records = Some(p.len());
            let start = Instant::now();
            let e = spatial_error(&o, &p)?;
            report.duration_ms = millis(start);
            report.metric("spatialError", e);
            report
        }
        EvalCommand::RangeQueries {
            pair,
            queries,
            seed,
            min_duration,
            max_duration,
            min_half_diagonal,
            max_half_diagonal,
        } => {
            let cfg = QueryGenConfig {
                count: queries,
                min_duration,
                max_duration,
                min_half_diagonal,
                max_half_diagonal,
                seed,
            };
            let mut params = pair_params(&pair);
            params["queries"] = json!(cfg);
            let mut report = Report::new("eval range-queries", params);
            report.seed = Some(seed);
            let (o, p) = load_pair(&pair)?;
            report.input_records = o.len();
            report.output_records = Some(p.len());
            let start = Instant::now();
            let qs = generate_queries(&o, &cfg)?;
            let distortion = query_distortion(&o, &p, &qs)?;
            report.duration_ms = millis(start);
            report.metric("queryDistortion", distortion);
            report
        }
        EvalCommand::Compression { pair } => {
            let mut report = Report::new("eval compression", pair_params(&pair));
            let (o, p) = load_pair(&pair)?;
            report.input_records = o.len();
            report.output_records = Some(p.len());
            let start = Instant::now();
            let c = compression(&o, &p)?;
            report.duration_ms = millis(start);
            report.metric("compression", c);
            report
        }
    };
    Ok(report)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
