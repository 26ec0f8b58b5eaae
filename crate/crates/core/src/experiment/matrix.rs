use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{build_topology, doubly_stochastic, Epsilon, TopologyKind, WeightedGraph};
use crate::problem::{ProblemSpec, TargetStream};
use crate::regret::{solve_hindsight, HindsightComparator, MonitorReport, RegretReport};
use crate::solver::{self, SolverConfig, Trajectory, Variant};

use super::scenario::{build_formation_scenario, interest_stream, ScenarioConfig};

/// Tolerance of the hindsight oracle used by experiment runs.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothMode {
    Max,
    Mean,
}

/// Trailing-window smoothing: `out[t] = op(series[max(0, t−t_w+1) ..= t])`.
pub fn smooth_series(series: &[f64], t_w: usize, mode: SmoothMode) -> Vec<f64> {
    let t_w = t_w.max(1);
    (0..series.len())
        .map(|t| {
            let window = &series[(t + 1).saturating_sub(t_w)..=t];
            match mode {
                SmoothMode::Max => window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                SmoothMode::Mean => {
                    // shifting by the first element keeps constant windows exact
                    let base = window[0];
                    base + window.iter().map(|v| v - base).sum::<f64>() / window.len() as f64
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub topology: String,
    pub variant: Variant,
    pub sigma2: f64,
    pub seed: u64,
    pub stream_digest: String,
    pub horizon: usize,
    pub smoothing_window: usize,
}

/// Per-agent `x`, `y`, `λ` values, one row per round.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDump {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub meta: RunMetadata,
    pub alpha: Vec<f64>,
    pub consensus_stddev: Vec<f64>,
    pub mean_residual_norm: Vec<f64>,
    pub regret_prefix: Vec<f64>,
    pub regret_per_t: Vec<f64>,
    pub bound_printed: Vec<f64>,
    pub bound_proof_complete: Vec<f64>,
    /// Window maximum, the statistic the consensus plots use.
    pub consensus_stddev_smoothed: Vec<f64>,
    pub mean_residual_norm_smoothed: Vec<f64>,
    /// Window mean, the statistic the regret plots use.
    pub regret_per_t_smoothed: Vec<f64>,
    pub monitors: MonitorReport,
    pub max_gradient_norm: f64,
    pub worst_bound_ratio: f64,
    pub agents: Option<AgentDump>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.alpha.len()
    }

    pub fn monitors_pass(&self) -> bool {
        self.monitors.passed()
    }

    pub fn final_regret_per_t(&self) -> f64 {
        *self.regret_per_t_smoothed.last().expect("nonempty run")
    }

    pub fn final_consensus_stddev(&self) -> f64 {
        *self.consensus_stddev_smoothed.last().expect("nonempty run")
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = [
            "t",
            "alpha",
            "consensus_stddev",
            "mean_residual_norm",
            "regret_prefix",
            "regret_per_t",
            "bound_printed",
            "bound_proof_complete",
            "consensus_stddev_smoothed",
            "mean_residual_norm_smoothed",
            "regret_per_t_smoothed",
        ]
        .join(",");
        if let Some(d) = &self.agents {
            header.push(',');
            header.push_str(&d.header.join(","));
        }
        writeln!(out, "{header}")?;
        for k in 0..self.horizon() {
            write!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                k + 1,
                self.alpha[k],
                self.consensus_stddev[k],
                self.mean_residual_norm[k],
                self.regret_prefix[k],
                self.regret_per_t[k],
                self.bound_printed[k],
                self.bound_proof_complete[k],
                self.consensus_stddev_smoothed[k],
                self.mean_residual_norm_smoothed[k],
                self.regret_per_t_smoothed[k],
            )?;
            if let Some(d) = &self.agents {
                write!(out, ",{}", d.rows[k].join(","))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn write_summary_csv<W: Write>(out: &mut W, records: &[RunRecord]) -> Result<()> {
    writeln!(out, "topology,variant,sigma2,final_regret_per_t,monitors_pass")?;
    for r in records {
        writeln!(
            out,
            "{},{},{:?},{:?},{}",
            r.meta.topology,
            r.meta.variant,
            r.meta.sigma2,
            r.final_regret_per_t(),
            r.monitors_pass()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellOptions {
    pub dump_agents: bool,
}

/// A scenario together with its stream and the comparator shared by every cell.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub cfg: ScenarioConfig,
    pub spec: ProblemSpec,
    pub stream: TargetStream,
    pub comparator: HindsightComparator,
}

impl PreparedScenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let spec = build_formation_scenario(cfg)?;
        let stream = interest_stream(cfg)?;
        let comparator = solve_hindsight(&spec, &stream, ORACLE_TOL)?;
        Ok(Self {
            cfg: *cfg,
            spec,
            stream,
            comparator,
        })
    }

    pub fn solver_config(&self, variant: Variant) -> SolverConfig {
        SolverConfig {
            seed: self.cfg.seed,
            inner_tol: self.cfg.inner_tol,
            inner_max_iters: self.cfg.inner_max_iters,
            ..SolverConfig::new(variant, self.cfg.k, self.cfg.rho, self.cfg.horizon)
        }
    }

    pub fn topology(&self, kind: TopologyKind) -> Result<WeightedGraph> {
        build_topology(kind, self.cfg.n, self.cfg.graph_seed)
    }

    /// Run one cell and return its trajectory alongside the record.
    pub fn run_with_trajectory(
        &self,
        graph: &WeightedGraph,
        label: &str,
        variant: Variant,
        opts: CellOptions,
    ) -> Result<(RunRecord, Trajectory)> {
        let p = doubly_stochastic(graph, Epsilon::Auto)?;
        let cfg = self.solver_config(variant);
        let traj = solver::run(&self.spec, &p, &cfg, &self.stream)?;
        let report = RegretReport::assemble(&traj, &self.comparator, &self.spec, &p, &cfg)?;
        let horizon = traj.horizon();
        let t_w = self.cfg.smoothing_window;

        let consensus: Vec<f64> = (1..=horizon).map(|t| traj.consensus_stddev(t)).collect();
        let residual: Vec<f64> = (1..=horizon).map(|t| traj.mean_residual_norm(&self.spec, t)).collect();
        let per_t = report.series.per_round();
        let agents = opts.dump_agents.then(|| AgentDump {
            header: solver::agent_dump_columns(&self.spec),
            rows: traj.rounds.iter().map(solver::agent_dump_values).collect(),
        });
        let record = RunRecord {
            meta: RunMetadata {
                topology: label.to_string(),
                variant,
                sigma2: p.sigma2(),
                seed: self.cfg.seed,
                stream_digest: self.stream.digest(),
                horizon,
                smoothing_window: t_w,
            },
            alpha: traj.rounds.iter().map(|r| r.alpha).collect(),
            consensus_stddev_smoothed: smooth_series(&consensus, t_w, SmoothMode::Max),
            mean_residual_norm_smoothed: smooth_series(&residual, t_w, SmoothMode::Max),
            regret_per_t_smoothed: smooth_series(&per_t, t_w, SmoothMode::Mean),
            consensus_stddev: consensus,
            mean_residual_norm: residual,
            regret_prefix: report.series.social.clone(),
            regret_per_t: per_t,
            max_gradient_norm: traj.max_gradient_norm(),
            worst_bound_ratio: report.worst_bound_ratio(),
            bound_printed: report.bound_printed,
            bound_proof_complete: report.bound_proof_complete,
            monitors: report.monitors,
            agents,
        };
        Ok((record, traj))
    }

    pub fn run_cell(
        &self,
        graph: &WeightedGraph,
        label: &str,
        variant: Variant,
        opts: CellOptions,
    ) -> Result<RunRecord> {
        Ok(self.run_with_trajectory(graph, label, variant, opts)?.0)
    }
}

/// Every `(topology, variant)` cell on one shared stream, ordered topology-major.
/// A failing cell yields its error without stopping the others.
pub fn run_experiment_matrix(
    topologies: &[TopologyKind],
    cfg: &ScenarioConfig,
    variants: &[Variant],
) -> Result<Vec<Result<RunRecord>>> {
    let prepared = PreparedScenario::new(cfg)?;
    let cells: Vec<(TopologyKind, Variant)> = topologies
        .iter()
        .flat_map(|&k| variants.iter().map(move |&v| (k, v)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(kind, variant)| {
            let g = prepared.topology(kind)?;
            prepared.run_cell(&g, kind.name(), variant, CellOptions::default())
        })
        .collect())
}
