//! Social regret against the best fixed decision in hindsight, the
//! theoretical bound it is compared with, and runtime lemma monitors.

mod bounds;
mod gap;
mod hindsight;
mod monitor;

use std::io::Write;

use crate::error::Result;
use crate::graph::ConsensusMatrix;
use crate::problem::ProblemSpec;
use crate::solver::{SolverConfig, Trajectory};

pub use bounds::{bound_constants, zeta, BoundConstants};
pub use gap::{affine_map, duality_gap_terms, monotone_gap_check, social_regret, GapTerms, PrimalDual, RegretSeries};
pub use hindsight::{
    hindsight_objective, objective_at, solve_hindsight, HindsightComparator, ORACLE_MAX_ITERS, ORACLE_RHO,
};
pub use monitor::{monitor_lemmas, network_bounds, MonitorReport, MonitorVerdict, LAMBDA_SLACK};

#[derive(Debug, Clone)]
pub struct RegretReport {
    pub series: RegretSeries,
    pub bounds: BoundConstants,
    pub bound_printed: Vec<f64>,
    pub bound_proof_complete: Vec<f64>,
    pub monitors: MonitorReport,
}

impl RegretReport {
    pub fn assemble(
        traj: &Trajectory,
        comp: &HindsightComparator,
        spec: &ProblemSpec,
        p: &ConsensusMatrix,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        let series = social_regret(traj, comp, spec, cfg.rho)?;
        let mut run_cfg = *cfg;
        run_cfg.variant = traj.variant;
        let bounds = bound_constants(spec, p, &run_cfg)?;
        let horizon = traj.horizon();
        Ok(Self {
            bound_printed: (1..=horizon).map(|t| bounds.printed(t)).collect(),
            bound_proof_complete: (1..=horizon).map(|t| bounds.proof_complete(t)).collect(),
            monitors: monitor_lemmas(traj, spec, p, &run_cfg)?,
            series,
            bounds,
        })
    }

    /// Largest `R_t / bound_printed(t)` over all prefixes.
    pub fn worst_bound_ratio(&self) -> f64 {
        self.series
            .social
            .iter()
            .zip(&self.bound_printed)
            .map(|(r, b)| r / b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let m = &self.monitors;
        writeln!(
            out,
            "t,R_T_prefix,regret_per_t,bound_printed,bound_proof_complete,worst_agent_j,{},{},{}",
            m.network.name, m.lambda_interior.name, m.lambda_boundary.name
        )?;
        for k in 0..self.series.horizon() {
            let t = k + 1;
            let r = self.series.social[k];
            writeln!(
                out,
                "{t},{r:?},{:?},{:?},{:?},{},{},{},{}",
                r / t as f64,
                self.bound_printed[k],
                self.bound_proof_complete[k],
                self.series.worst_agent[k],
                u8::from(m.network.round_ok[k]),
                u8::from(m.lambda_interior.round_ok[k]),
                u8::from(m.lambda_boundary.round_ok[k]),
            )?;
        }
        Ok(())
    }
}
