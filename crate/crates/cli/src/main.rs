use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meshca::experiment::{run_experiment, ExperimentConfig, TopologySpec};
use meshca::iem::{score_all, score_all_with_hops, ScoreTriple};
use meshca::io::{read_assignment, read_json, read_topology, to_json_string, write_assignment, write_json};
use meshca::topology::{gen_grid, gen_random, RadioParams};
use meshca::{run_scheme, Connectivity, Error, Execution, Metric, Scheme, SchemeConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

/// Channel assignment for multi-radio multi-channel wireless mesh networks.
#[derive(Parser)]
#[command(name = "meshca", version)]
struct Cli {
    /// Default directory for output files.
    #[arg(long, global = true, env = "MESHCA_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology file.
    #[command(subcommand)]
    Gen(GenKind),
    /// Run a channel assignment scheme on a topology.
    Assign(AssignArgs),
    /// Print TID, CDAL_cost and CXLS_wt for an assignment.
    Score(ScoreArgs),
    /// Run the scheme x metric x rate x seed matrix.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Radio {
    #[arg(long, default_value_t = 250.0)]
    tx_range: f64,
    /// Interference range as a multiple of the transmission range.
    #[arg(long, default_value_t = 2)]
    x: usize,
    #[arg(long, default_value_t = 2)]
    radios: usize,
    #[arg(long, default_value_t = 3)]
    channels: usize,
    /// Output file [default: <out-dir>/topology.json]
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Radio {
    fn params(&self) -> RadioParams {
        RadioParams {
            tx_range: self.tx_range,
            interference_x: self.x,
            radios_per_node: self.radios,
            channel_count: self.channels,
        }
    }
}

#[derive(Subcommand)]
enum GenKind {
    Grid {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        rows: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        cols: u32,
        #[arg(long, default_value_t = 250.0)]
        spacing: f64,
        #[command(flatten)]
        radio: Radio,
    },
    Random {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long, default_value_t = 500.0)]
        width: f64,
        #[arg(long, default_value_t = 500.0)]
        height: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        radio: Radio,
    },
}

#[derive(Args)]
struct AssignArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long, value_parser = parse::<Scheme>)]
    scheme: Scheme,
    #[arg(long, value_parser = parse::<Metric>)]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Assignment file [default: <out-dir>/assignment.json]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace file [default: <out-dir>/trace.json]
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_parser = parse::<Connectivity>, default_value = "global")]
    connectivity: Connectivity,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    #[arg(long, default_value_t = 10_000_000)]
    bio_budget: u64,
    /// Hop count for CXLS paths [default: the topology's X]
    #[arg(long)]
    xls_hops: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    assignment: PathBuf,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    xls_hops: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology file instead of the default 5x5 grid.
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse::<Scheme>)]
    schemes: Vec<Scheme>,
    #[arg(long, value_delimiter = ',', value_parser = parse::<Metric>)]
    metrics: Vec<Metric>,
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    sequential: bool,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out_dir = cli.out_dir;
    let result = match cli.command {
        Command::Gen(kind) => gen(kind, &out_dir),
        Command::Assign(args) => assign(args, &out_dir),
        Command::Score(args) => score(args),
        Command::Experiment(args) => experiment(args, &out_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BudgetExceeded { .. } => ExitCode::from(EXIT_BUDGET),
                _ => ExitCode::from(EXIT_USAGE),
            }
        }
    }
}

fn gen(kind: GenKind, out_dir: &Path) -> meshca::Result<ExitCode> {
    let (topo, radio) = match kind {
        GenKind::Grid {
            rows,
            cols,
            spacing,
            radio,
        } => (gen_grid(rows as usize, cols as usize, spacing, radio.params())?, radio),
        GenKind::Random {
            n,
            width,
            height,
            seed,
            radio,
        } => (gen_random(n as usize, width, height, radio.params(), seed)?, radio),
    };
    let path = radio.out.unwrap_or_else(|| out_dir.join("topology.json"));
    write_json(&path, &topo)?;
    println!(
        "{} nodes, {} adjacent pairs -> {}",
        topo.node_count(),
        topo.adjacent_pairs().len(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_scores(s: &ScoreTriple) {
    println!("TID       {}", s.tid);
    println!("CDAL_cost {}", s.cdal_cost);
    println!("CXLS_wt   {}", s.cxls_wt);
}

fn assign(args: AssignArgs, out_dir: &Path) -> meshca::Result<ExitCode> {
    let topo = read_topology(&args.topology)?;
    let cfg = SchemeConfig {
        max_iterations: args.max_iterations,
        connectivity: args.connectivity,
        bio_budget: args.bio_budget,
        xls_hops: args.xls_hops,
        ..SchemeConfig::new(args.scheme, args.metric, args.seed)
    };
    let outcome = run_scheme(&topo, &cfg)?;
    let out = args.out.unwrap_or_else(|| out_dir.join("assignment.json"));
    let trace = args.trace.unwrap_or_else(|| out_dir.join("trace.json"));
    write_assignment(&out, &topo, &outcome.assignment)?;
    write_json(&trace, &outcome.trace)?;

    if !outcome.trace.feasible {
        eprintln!(
            "warning: no assignment satisfies the {:?} connectivity rule",
            args.connectivity
        );
    }
    println!(
        "{}_{} score {} after {} iterations",
        args.scheme,
        args.metric,
        outcome.score.value,
        outcome.trace.iterations()
    );
    let hops = args.xls_hops.unwrap_or(topo.interference_x());
    print_scores(&score_all_with_hops(&topo, &outcome.assignment, hops)?);
    println!("assignment -> {}", out.display());
    println!("trace -> {}", trace.display());
    Ok(ExitCode::SUCCESS)
}

fn score(args: ScoreArgs) -> meshca::Result<ExitCode> {
    let topo = read_topology(&args.topology)?;
    let ca = read_assignment(&args.assignment, &topo)?;
    let s = match args.xls_hops {
        Some(h) => score_all_with_hops(&topo, &ca, h)?,
        None => score_all(&topo, &ca)?,
    };
    if args.json {
        println!("{}", to_json_string(&s)?);
    } else {
        print_scores(&s);
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs, out_dir: &Path) -> meshca::Result<ExitCode> {
    let mut cfg: ExperimentConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = args.topology {
        cfg.topology = TopologySpec::File { path };
    }
    if !args.schemes.is_empty() {
        cfg.schemes = args.schemes;
    }
    if !args.metrics.is_empty() {
        cfg.metrics = args.metrics;
    }
    if !args.rates.is_empty() {
        cfg.phy_rates = args.rates;
    }
    if !args.seeds.is_empty() {
        cfg.seeds = args.seeds;
    }
    if args.sequential {
        cfg.execution = Execution::Sequential;
    }
    let dir = cfg.output_dir.clone().unwrap_or_else(|| out_dir.to_path_buf());
    let report = run_experiment(&cfg)?;
    for path in report.write(&dir, &cfg.formats)? {
        println!("wrote {}", path.display());
    }
    println!("{} runs, {} mean rows", report.rows.len(), report.means.len());
    let failures = report.failures();
    if failures > 0 {
        eprintln!("{failures} of {} runs failed; see the error column", report.rows.len());
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    Ok(ExitCode::SUCCESS)
}
