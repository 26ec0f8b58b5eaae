//! Per-round checks of the network-effect and multiplier-norm inequalities.

use crate::error::Result;
use crate::graph::ConsensusMatrix;
use crate::numerics;
use crate::problem::ProblemSpec;
use crate::solver::{step_size, SolverConfig, Trajectory, Variant, YOrigin};

/// Absolute slack granted to the multiplier-norm check for inexact local solves.
pub const LAMBDA_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorVerdict {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    /// Smallest `bound − observed` seen.
    pub worst_slack: f64,
    /// `(agent, round)` of the smallest slack.
    pub worst_at: Option<(usize, usize)>,
    pub first_violation: Option<(usize, usize)>,
    /// `round_ok[t-1]`: every checked agent passed at round `t`.
    pub round_ok: Vec<bool>,
}

impl MonitorVerdict {
    fn new(name: &'static str, horizon: usize) -> Self {
        Self {
            name,
            checks: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            worst_at: None,
            first_violation: None,
            round_ok: vec![true; horizon],
        }
    }

    fn record(&mut self, i: usize, t: usize, observed: f64, bound: f64) {
        self.checks += 1;
        let slack = bound - observed;
        if slack < self.worst_slack {
            self.worst_slack = slack;
            self.worst_at = Some((i, t));
        }
        if slack < 0.0 {
            self.violations += 1;
            self.first_violation.get_or_insert((i, t));
            self.round_ok[t - 1] = false;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// The network-effect bound of the run's variant.
    pub network: MonitorVerdict,
    /// Multiplier norm on rounds whose `y` came from an interior optimum.
    pub lambda_interior: MonitorVerdict,
    /// The same inequality on boundary rounds, where it is not implied; informational.
    pub lambda_boundary: MonitorVerdict,
}

impl MonitorReport {
    /// Network effect and interior multiplier bound both hold everywhere.
    pub fn passed(&self) -> bool {
        self.network.passed() && self.lambda_interior.passed()
    }
}

/// Right-hand sides of the network-effect bound for rounds `1..=T`.
pub fn network_bounds(spec: &ProblemSpec, p: &ConsensusMatrix, cfg: &SolverConfig, zeta_max: f64) -> Result<Vec<f64>> {
    let n = spec.n as f64;
    let s2 = p.sigma2();
    let scale = n.sqrt() * (spec.l_f + zeta_max);
    let mut out = Vec::with_capacity(cfg.horizon);
    match cfg.variant {
        Variant::DualAveraging => {
            for t in 1..=cfg.horizon {
                let a_prev = step_size(cfg, (t - 1).max(1))?;
                out.push(a_prev * scale / (1.0 - s2));
            }
        }
        Variant::GradientDescent => {
            // S_t = Σ_{k=1}^{t-1} α_{t-k} σ2^{k-1}, S_1 = 0, S_{t+1} = α_t + σ2 S_t
            let mut s = 0.0;
            for t in 1..=cfg.horizon {
                out.push(2.0 * scale * s);
                s = step_size(cfg, t)? + s2 * s;
            }
        }
    }
    Ok(out)
}

pub fn monitor_lemmas(
    traj: &Trajectory,
    spec: &ProblemSpec,
    p: &ConsensusMatrix,
    cfg: &SolverConfig,
) -> Result<MonitorReport> {
    let horizon = traj.horizon();
    let zeta_max = super::zeta(spec).into_iter().fold(0.0, f64::max);
    let mut run_cfg = *cfg;
    run_cfg.horizon = horizon;
    run_cfg.variant = traj.variant;
    let bounds = network_bounds(spec, p, &run_cfg, zeta_max)?;

    let name = match traj.variant {
        Variant::DualAveraging => "da_network_effect",
        Variant::GradientDescent => "gd_network_effect",
    };
    let mut network = MonitorVerdict::new(name, horizon);
    let mut interior = MonitorVerdict::new("lambda_bound_interior", horizon);
    let mut boundary = MonitorVerdict::new("lambda_bound_boundary", horizon);

    for r in &traj.rounds {
        for (i, a) in r.agents.iter().enumerate() {
            network.record(i, r.t, numerics::dist(&r.theta, &a.x), bounds[r.t - 1]);
            let cap = spec.stationary_multiplier_bound(i) + LAMBDA_SLACK;
            let norm = numerics::norm(&a.lambda_next);
            match a.y_origin {
                YOrigin::Interior => interior.record(i, r.t, norm, cap),
                YOrigin::Boundary => boundary.record(i, r.t, norm, cap),
                YOrigin::Initial => {}
            }
        }
    }
    Ok(MonitorReport {
        network,
        lambda_interior: interior,
        lambda_boundary: boundary,
    })
}
