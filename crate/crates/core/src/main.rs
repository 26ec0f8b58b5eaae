use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use odadmm::experiment::config::{read_config, write_config, ScenarioFile};
use odadmm::experiment::{
    write_summary_csv, CellOptions, PreparedScenario, RunRecord, ScenarioConfig, PINNED_RANDOM_GRAPH_SEED,
};
use odadmm::graph::{build_topology, doubly_stochastic, TopologyKind, WeightedGraph};
use odadmm::regret::{bound_constants, RegretReport};
use odadmm::solver::{write_trajectory_csv, TrajectoryCsvOptions, Variant};
use odadmm::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_MONITOR: u8 = 4;

#[derive(Parser)]
#[command(
    name = "odadmm",
    version,
    about = "Online distributed ADMM on the formation benchmark"
)]
struct Cli {
    /// Size of the worker pool; defaults to one thread per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one topology and variant and write its per-round CSV.
    Run(RunArgs),
    /// Run every (topology, variant) cell on one shared stream.
    Sweep(SweepArgs),
    /// Print the regret bound constants of a scenario file.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the formation scenario as a config file.
    Template {
        #[arg(long, default_value = "random")]
        topology: TopologyKind,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = PINNED_RANDOM_GRAPH_SEED)]
    graph_seed: u64,
    #[arg(long = "smooth-window", default_value_t = 1000)]
    smoothing_window: usize,
    /// Gradient bound of the online costs.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    l_f: f64,
    /// Lipschitz constant of the local costs.
    #[arg(long, default_value_t = 4.0 / 9.0)]
    l_phi: f64,
    #[arg(long, default_value_t = 2.0)]
    d_lambda: f64,
    #[arg(long, default_value_t = 1e-8)]
    inner_tol: f64,
    #[arg(long, default_value_t = 2000)]
    inner_max_iters: usize,
}

impl ScenarioArgs {
    fn config(&self, variant: Variant) -> ScenarioConfig {
        ScenarioConfig {
            n: self.n,
            k: self.k,
            rho: self.rho,
            horizon: self.horizon,
            seed: self.seed,
            graph_seed: self.graph_seed,
            smoothing_window: self.smoothing_window,
            l_f: self.l_f,
            l_phi: self.l_phi,
            d_lambda: self.d_lambda,
            inner_tol: self.inner_tol,
            inner_max_iters: self.inner_max_iters,
            variant,
            ..ScenarioConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "random", conflicts_with = "graph_file")]
    topology: TopologyKind,
    /// Edge-list file used instead of a generated topology.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long, default_value = "da")]
    variant: Variant,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: PathBuf,
    /// Append per-agent x, y and lambda columns.
    #[arg(long)]
    dump_agents: bool,
    /// Also write the regret report CSV.
    #[arg(long)]
    regret_out: Option<PathBuf>,
    /// Also write the raw trajectory CSV.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
    #[arg(long)]
    strict_monitors: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma separated topology names, or `all`.
    #[arg(long, default_value = "all")]
    topologies: String,
    #[arg(long, value_delimiter = ',', default_value = "da,gd")]
    variants: Vec<Variant>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    strict_monitors: bool,
}

enum Failure {
    Lib(Error),
    Monitors(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Convergence { .. } => EXIT_CONVERGENCE,
        Error::Io(_) => EXIT_FAILURE,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Bounds { config } => bounds(&config),
        Command::Template {
            topology,
            scenario,
            out,
        } => template(topology, &scenario, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Monitors(msg)) => {
            eprintln!("error: monitor violations: {msg}");
            ExitCode::from(EXIT_MONITOR)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn monitor_summary(rec: &RunRecord) -> String {
    let m = &rec.monitors;
    [&m.network, &m.lambda_interior, &m.lambda_boundary]
        .iter()
        .map(|v| format!("{} {}/{}", v.name, v.violations, v.checks))
        .collect::<Vec<_>>()
        .join(", ")
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.scenario.config(args.variant);
    let prepared = PreparedScenario::new(&cfg)?;
    let (graph, label): (WeightedGraph, String) = match &args.graph_file {
        Some(path) => (WeightedGraph::read(path)?, path.display().to_string()),
        None => (prepared.topology(args.topology)?, args.topology.name().to_string()),
    };
    let opts = CellOptions {
        dump_agents: args.dump_agents,
    };
    let (rec, traj) = prepared.run_with_trajectory(&graph, &label, args.variant, opts)?;

    let mut out = create(&args.out)?;
    rec.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.regret_out {
        let p = doubly_stochastic(&graph, odadmm::graph::Epsilon::Auto)?;
        let report = RegretReport::assemble(
            &traj,
            &prepared.comparator,
            &prepared.spec,
            &p,
            &prepared.solver_config(args.variant),
        )?;
        let mut w = create(path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.trajectory_out {
        let mut w = create(path)?;
        let topts = TrajectoryCsvOptions {
            dump_agents: args.dump_agents,
        };
        write_trajectory_csv(&mut w, &traj, &prepared.spec, topts)?;
        w.flush()?;
    }

    eprintln!(
        "{} {}: sigma2 {:.4}, final regret/t {:.6}, monitors {}",
        label,
        args.variant,
        rec.meta.sigma2,
        rec.final_regret_per_t(),
        monitor_summary(&rec)
    );
    if args.strict_monitors && !rec.monitors_pass() {
        return Err(Failure::Monitors(monitor_summary(&rec)));
    }
    Ok(())
}

fn parse_topologies(s: &str) -> Result<Vec<TopologyKind>, Failure> {
    if s.trim() == "all" {
        return Ok(TopologyKind::ALL.to_vec());
    }
    s.split(',')
        .map(|t| {
            t.parse::<TopologyKind>()
                .map_err(|e| Error::Config(e.to_string()).into())
        })
        .collect()
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let topologies = parse_topologies(&args.topologies)?;
    let cfg = args
        .scenario
        .config(args.variants.first().copied().unwrap_or(Variant::DualAveraging));
    let results = odadmm::experiment::run_experiment_matrix(&topologies, &cfg, &args.variants)?;
    fs::create_dir_all(&args.out_dir)?;

    let mut done = Vec::new();
    let mut first_error = None;
    let mut violations = Vec::new();
    for res in results {
        match res {
            Ok(rec) => {
                let path = args
                    .out_dir
                    .join(format!("{}_{}.csv", rec.meta.topology, rec.meta.variant));
                let mut w = create(&path)?;
                rec.write_csv(&mut w)?;
                w.flush()?;
                eprintln!(
                    "{} {}: sigma2 {:.4}, final regret/t {:.6}",
                    rec.meta.topology,
                    rec.meta.variant,
                    rec.meta.sigma2,
                    rec.final_regret_per_t()
                );
                if !rec.monitors_pass() {
                    violations.push(format!(
                        "{}_{}: {}",
                        rec.meta.topology,
                        rec.meta.variant,
                        monitor_summary(&rec)
                    ));
                }
                done.push(rec);
            }
            Err(e) => {
                eprintln!("cell failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    let mut w = create(&args.out_dir.join("summary.csv"))?;
    write_summary_csv(&mut w, &done)?;
    w.flush()?;

    if let Some(e) = first_error {
        return Err(e.into());
    }
    if args.strict_monitors && !violations.is_empty() {
        return Err(Failure::Monitors(violations.join("; ")));
    }
    Ok(())
}

fn bounds(path: &Path) -> Result<(), Failure> {
    let file = read_config(path)?;
    let graph = build_topology(file.topology, file.spec.n, file.graph_seed)?;
    let p = doubly_stochastic(&graph, file.epsilon)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "topology {} (n = {}), sigma2 {:.6}",
        file.topology,
        file.spec.n,
        p.sigma2()
    )?;
    let mut zeta = Vec::new();
    for variant in Variant::ALL {
        let cfg = odadmm::solver::SolverConfig { variant, ..file.solver };
        let b = bound_constants(&file.spec, &p, &cfg)?;
        if zeta.is_empty() {
            zeta = b.zeta.clone();
            let list: Vec<String> = b.zeta.iter().map(|z| format!("{z:.6}")).collect();
            writeln!(stdout, "zeta_i {}", list.join(" "))?;
            writeln!(stdout, "Q {:.6}", b.q)?;
        }
        writeln!(
            stdout,
            "{variant}: J1 {:.6} J2 {:.6} bound(T={}) printed {:.6} proof-complete {:.6}",
            b.j1,
            b.j2,
            cfg.horizon,
            b.printed(cfg.horizon),
            b.proof_complete(cfg.horizon)
        )?;
    }
    if zeta.iter().any(|z| (z - 1.0).abs() > 1e-12) {
        writeln!(
            stdout,
            "note: zeta_i is computed from the constraint data; it is not the unit constant K = 1"
        )?;
    }
    Ok(())
}

fn template(topology: TopologyKind, scenario: &ScenarioArgs, out: Option<&Path>) -> Result<(), Failure> {
    let file = ScenarioFile::formation(&scenario.config(Variant::DualAveraging), topology)?;
    let text = write_config(&file);
    match out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
