use crate::error::{Error, Result};
use crate::numerics;
use crate::problem::{self, LocalConstraint, ProblemSpec};
use crate::solver::Trajectory;

use super::HindsightComparator;

/// The four parts of agent `j`'s regret summand at one round.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GapTerms {
    /// `f_t(x_{j,t}) − f_t(x*)`
    pub f_delta: f64,
    /// `(1/n) Σ_i [φ_i(y_{i,t}) − φ_i(y_i*)]`
    pub phi_delta: f64,
    /// `(1/n) Σ_i [⟨y_{i,t} − y_i*, B_iᵀλ_{i,t+1}⟩ − ⟨λ_{i,t+1} − λ_i*, r_i(x_{j,t}, y_{i,t})⟩]`
    pub h_delta: f64,
    /// `(ρ/2n) Σ_i ‖r_i(x_{i,t}, y_{i,t})‖²`
    pub penalty: f64,
}

impl GapTerms {
    pub fn total(&self) -> f64 {
        self.f_delta + self.phi_delta + self.h_delta + self.penalty
    }

    fn accumulate(&mut self, other: &GapTerms) {
        self.f_delta += other.f_delta;
        self.phi_delta += other.phi_delta;
        self.h_delta += other.h_delta;
        self.penalty += other.penalty;
    }
}

/// Parts of the round-`t` summand that do not depend on the evaluating agent.
struct RoundShared {
    f_star: f64,
    phi_delta: f64,
    penalty: f64,
    /// `(1/n) Σ_i ⟨y_{i,t} − y_i*, B_iᵀλ_{i,t+1}⟩`
    y_part: f64,
}

fn round_shared(
    traj: &Trajectory,
    comp: &HindsightComparator,
    spec: &ProblemSpec,
    rho: f64,
    t: usize,
) -> Result<RoundShared> {
    let n = spec.n as f64;
    let r = traj.round(t);
    let mut phi_delta = 0.0;
    let mut penalty = 0.0;
    let mut y_part = 0.0;
    for (i, a) in r.agents.iter().enumerate() {
        let con = &spec.constraints[i];
        phi_delta += spec.phi[i].value(&a.y)? - spec.phi[i].value(&comp.y_star[i])?;
        let res = problem::residual(con, &a.x, &a.y)?;
        penalty += numerics::dot(&res, &res);
        let btl = con.b().tr_mul_vec(&a.lambda_next)?;
        y_part += numerics::dot(&numerics::sub(&a.y, &comp.y_star[i]), &btl);
    }
    Ok(RoundShared {
        f_star: spec.network_cost(&comp.x_star, traj.targets.round(t)),
        phi_delta: phi_delta / n,
        penalty: 0.5 * rho * penalty / n,
        y_part: y_part / n,
    })
}

fn terms_for(
    traj: &Trajectory,
    comp: &HindsightComparator,
    spec: &ProblemSpec,
    shared: &RoundShared,
    j: usize,
    t: usize,
) -> Result<GapTerms> {
    let r = traj.round(t);
    let xj = &r.agents[j].x;
    let mut lam_part = 0.0;
    for (i, a) in r.agents.iter().enumerate() {
        let res = problem::residual(&spec.constraints[i], xj, &a.y)?;
        lam_part -= numerics::dot(&numerics::sub(&a.lambda_next, &comp.lambda_star[i]), &res);
    }
    Ok(GapTerms {
        f_delta: spec.network_cost(xj, traj.targets.round(t)) - shared.f_star,
        phi_delta: shared.phi_delta,
        h_delta: shared.y_part + lam_part / spec.n as f64,
        penalty: shared.penalty,
    })
}

fn check_shapes(traj: &Trajectory, comp: &HindsightComparator, spec: &ProblemSpec) -> Result<()> {
    if comp.y_star.len() != spec.n || comp.lambda_star.len() != spec.n {
        return Err(Error::invalid("comparator does not match the agent count"));
    }
    if traj.rounds.first().is_some_and(|r| r.agents.len() != spec.n) {
        return Err(Error::invalid("trajectory does not match the agent count"));
    }
    Ok(())
}

/// Agent `j`'s regret summand at round `t`.
pub fn duality_gap_terms(
    traj: &Trajectory,
    comp: &HindsightComparator,
    spec: &ProblemSpec,
    rho: f64,
    j: usize,
    t: usize,
) -> Result<GapTerms> {
    check_shapes(traj, comp, spec)?;
    if t == 0 || t > traj.horizon() || j >= spec.n {
        return Err(Error::invalid(format!("no round {t} / agent {j} in this trajectory")));
    }
    let shared = round_shared(traj, comp, spec, rho, t)?;
    terms_for(traj, comp, spec, &shared, j, t)
}

/// Cumulative regret of every agent and the social maximum, for every prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    /// `per_agent[j][t-1] = R_{j,t}`
    pub per_agent: Vec<Vec<f64>>,
    /// `social[t-1] = max_j R_{j,t}`
    pub social: Vec<f64>,
    pub worst_agent: Vec<usize>,
    /// Cumulative breakdown of `R_{j,T}` over the full horizon.
    pub final_terms: Vec<GapTerms>,
}

impl RegretSeries {
    pub fn horizon(&self) -> usize {
        self.social.len()
    }

    pub fn per_round(&self) -> Vec<f64> {
        self.social
            .iter()
            .enumerate()
            .map(|(k, r)| r / (k + 1) as f64)
            .collect()
    }
}

pub fn social_regret(
    traj: &Trajectory,
    comp: &HindsightComparator,
    spec: &ProblemSpec,
    rho: f64,
) -> Result<RegretSeries> {
    check_shapes(traj, comp, spec)?;
    let n = spec.n;
    let horizon = traj.horizon();
    let mut per_agent = vec![Vec::with_capacity(horizon); n];
    let mut running = vec![GapTerms::default(); n];
    let mut totals = vec![0.0; n];
    let mut social = Vec::with_capacity(horizon);
    let mut worst_agent = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let shared = round_shared(traj, comp, spec, rho, t)?;
        for j in 0..n {
            let terms = terms_for(traj, comp, spec, &shared, j, t)?;
            running[j].accumulate(&terms);
            totals[j] += terms.total();
            per_agent[j].push(totals[j]);
        }
        // lowest index wins ties
        let (jmax, rmax) =
            totals.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (j, &r)| if r > best.1 { (j, r) } else { best },
            );
        social.push(rmax);
        worst_agent.push(jmax);
    }
    Ok(RegretSeries {
        per_agent,
        social,
        worst_agent,
        final_terms: running,
    })
}

/// One agent's primal-dual point `w_i = (x, y_i, λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDual {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// `H_i(w) = (A_iᵀλ, B_iᵀλ, −r_i(x, y))`, flattened in that order.
pub fn affine_map(con: &LocalConstraint, w: &PrimalDual) -> Result<Vec<f64>> {
    let mut out = con.a().tr_mul_vec(&w.lambda)?;
    out.extend(con.b().tr_mul_vec(&w.lambda)?);
    out.extend(numerics::scale(&problem::residual(con, &w.x, &w.y)?, -1.0));
    Ok(out)
}

/// `⟨w − w', H_i(w) − H_i(w')⟩`, which vanishes for every pair.
pub fn monotone_gap_check(con: &LocalConstraint, w: &PrimalDual, w_prime: &PrimalDual) -> Result<f64> {
    let flat = |p: &PrimalDual| [p.x.as_slice(), &p.y, &p.lambda].concat();
    let dw = numerics::sub(&flat(w), &flat(w_prime));
    let dh = numerics::sub(&affine_map(con, w)?, &affine_map(con, w_prime)?);
    Ok(numerics::dot(&dw, &dh))
}
