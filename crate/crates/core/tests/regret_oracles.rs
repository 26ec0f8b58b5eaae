mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use odadmm::experiment::{PreparedScenario, ScenarioConfig};
use odadmm::graph::{doubly_stochastic, ConsensusMatrix, Epsilon, TopologyKind};
use odadmm::numerics::Matrix;
use odadmm::problem::{self, LocalCost, OnlineCost, TargetStream};
use odadmm::regret::{duality_gap_terms, objective_at, social_regret, solve_hindsight, HindsightComparator};
use odadmm::solver::{self, SolverConfig, Trajectory, Variant};

use common::{dist, offset_problem};

fn clamp2(v: [f64; 2]) -> [f64; 2] {
    [v[0].clamp(-1.0, 1.0), v[1].clamp(-1.0, 1.0)]
}

fn dot(a: [f64; 2], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Straight-line single-agent online ADMM with `x − y = c`, `φ = ½‖y‖²` and
/// tracking costs, returning the cumulative regret after every round.
fn single_agent_regret(
    variant: Variant,
    k: f64,
    rho: f64,
    c: [f64; 2],
    targets: &[[f64; 2]],
    comp: &HindsightComparator,
) -> Vec<f64> {
    let (xs, ys, ls) = (&comp.x_star, &comp.y_star[0], &comp.lambda_star[0]);
    let (mut x, mut y, mut z, mut lam) = ([0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2]);
    let mut total = 0.0;
    let mut out = Vec::new();
    for (step, q) in targets.iter().enumerate() {
        let alpha = k / ((step + 1) as f64).sqrt();
        let r = [x[0] - y[0] - c[0], x[1] - y[1] - c[1]];
        let lam_next = [lam[0] + rho * r[0], lam[1] + rho * r[1]];
        let g = [x[0] - q[0], x[1] - q[1]];

        let f = |v: [f64; 2]| 0.5 * ((v[0] - q[0]).powi(2) + (v[1] - q[1]).powi(2));
        let x_star = [xs[0], xs[1]];
        let phi = |v: &[f64]| 0.5 * (v[0] * v[0] + v[1] * v[1]);
        let dy = [y[0] - ys[0], y[1] - ys[1]];
        let dl = [lam_next[0] - ls[0], lam_next[1] - ls[1]];
        // Bᵀλ = −λ
        total += f(x) - f(x_star) + phi(&y) - phi(ys) - dot(dy, &lam_next) - dot(dl, &r)
            + 0.5 * rho * (r[0] * r[0] + r[1] * r[1]);
        out.push(total);

        x = match variant {
            Variant::DualAveraging => {
                z = [z[0] + g[0] + lam_next[0], z[1] + g[1] + lam_next[1]];
                clamp2([-alpha * z[0] / 2.0, -alpha * z[1] / 2.0])
            }
            Variant::GradientDescent => {
                clamp2([x[0] - alpha * (g[0] + lam_next[0]), x[1] - alpha * (g[1] + lam_next[1])])
            }
        };
        // argmin ½‖y‖² + ⟨λ, x − y − c⟩ + (ρ/2)‖x − y − c‖² on the box
        y = clamp2([
            (lam_next[0] + rho * (x[0] - c[0])) / (1.0 + rho),
            (lam_next[1] + rho * (x[1] - c[1])) / (1.0 + rho),
        ]);
        lam = lam_next;
    }
    out
}

#[test]
fn single_agent_matches_direct_loop() {
    let c = [0.2, -0.1];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let targets: Vec<[f64; 2]> = (0..10)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let spec = offset_problem(&[c], LocalCost::Quadratic { weight: 1.0 }, OnlineCost::Tracking);
    let stream = TargetStream::new(targets.iter().map(|q| vec![q.to_vec()]).collect()).unwrap();
    let comp = solve_hindsight(&spec, &stream, 1e-12).unwrap();

    // x* = (q̄ + c)/2 when it lies inside the box
    let mean = [
        targets.iter().map(|q| q[0]).sum::<f64>() / 10.0,
        targets.iter().map(|q| q[1]).sum::<f64>() / 10.0,
    ];
    let expected = [(mean[0] + c[0]) / 2.0, (mean[1] + c[1]) / 2.0];
    assert!(dist(&comp.x_star, &expected) < 1e-9);

    let p = ConsensusMatrix::from_matrix(Matrix::identity(1), 1.0).unwrap();
    for variant in Variant::ALL {
        let cfg = SolverConfig::new(variant, 2.0, 0.5, 10);
        let traj = solver::run(&spec, &p, &cfg, &stream).unwrap();
        let series = social_regret(&traj, &comp, &spec, cfg.rho).unwrap();
        let direct = single_agent_regret(variant, 2.0, 0.5, c, &targets, &comp);
        for (a, b) in series.social.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10, "{variant}: {a} vs {b}");
        }
    }
}

fn toy_run(variant: Variant, horizon: usize) -> (odadmm::problem::ProblemSpec, Trajectory, HindsightComparator, f64) {
    let spec = offset_problem(
        &[[0.1, 0.0], [-0.1, 0.0]],
        LocalCost::Quadratic { weight: 1.0 },
        OnlineCost::Tracking,
    );
    let stream = TargetStream::constant(2, horizon, vec![0.5, 0.0]);
    let comp = solve_hindsight(&spec, &stream, 1e-12).unwrap();
    let g = odadmm::graph::WeightedGraph::undirected_unit(2, &[(0, 1)]).unwrap();
    let p = doubly_stochastic(&g, Epsilon::Auto).unwrap();
    let cfg = SolverConfig::new(variant, 2.0, 0.5, horizon);
    let traj = solver::run(&spec, &p, &cfg, &stream).unwrap();
    (spec, traj, comp, cfg.rho)
}

#[test]
fn first_round_summand_by_hand() {
    let (spec, traj, comp, rho) = toy_run(Variant::DualAveraging, 3);
    let q = [0.5, 0.0];
    let offsets = [[0.1, 0.0], [-0.1, 0.0]];
    // x = y = 0 at t = 1, and λ_{i,2} = ρ(0 − 0 − c_i)
    let xs = &comp.x_star;
    let f_delta = 0.5 * (q[0] * q[0] + q[1] * q[1]) - 0.5 * ((xs[0] - q[0]).powi(2) + (xs[1] - q[1]).powi(2));
    let mut phi_delta = 0.0;
    let mut h = 0.0;
    let mut penalty = 0.0;
    for (i, c) in offsets.iter().enumerate() {
        let ys = &comp.y_star[i];
        let ls = &comp.lambda_star[i];
        let lam = [-rho * c[0], -rho * c[1]];
        phi_delta -= 0.5 * (ys[0] * ys[0] + ys[1] * ys[1]);
        // ⟨0 − y*, −λ⟩ − ⟨λ − λ*, −c⟩
        h += (ys[0] * lam[0] + ys[1] * lam[1]) + ((lam[0] - ls[0]) * c[0] + (lam[1] - ls[1]) * c[1]);
        penalty += c[0] * c[0] + c[1] * c[1];
    }
    let want = f_delta + phi_delta / 2.0 + h / 2.0 + 0.5 * rho * penalty / 2.0;
    for j in 0..2 {
        let terms = duality_gap_terms(&traj, &comp, &spec, rho, j, 1).unwrap();
        assert!((terms.total() - want).abs() < 1e-12, "{} vs {want}", terms.total());
        assert!((terms.f_delta - f_delta).abs() < 1e-12);
    }
}

#[test]
fn comparator_evaluates_itself_to_zero() {
    // a run that starts at the comparator: zero residuals and matching multipliers
    let spec = offset_problem(&[[0.0, 0.0]], LocalCost::Zero, OnlineCost::Tracking);
    let stream = TargetStream::constant(1, 5, vec![0.0, 0.0]);
    let comp = solve_hindsight(&spec, &stream, 1e-12).unwrap();
    let p = ConsensusMatrix::from_matrix(Matrix::identity(1), 1.0).unwrap();
    let traj = solver::run(
        &spec,
        &p,
        &SolverConfig::new(Variant::DualAveraging, 2.0, 0.5, 5),
        &stream,
    )
    .unwrap();
    let series = social_regret(&traj, &comp, &spec, 0.5).unwrap();
    assert!(series.social.iter().all(|r| r.abs() < 1e-12));
}

/// `(1/n) Σ_i ⟨w_i(x_j) − w_i*(x_j), H_i(w_i(x_j))⟩` with the x-block kept.
fn h_delta_full(
    traj: &Trajectory,
    comp: &HindsightComparator,
    spec: &odadmm::problem::ProblemSpec,
    j: usize,
    t: usize,
) -> f64 {
    let r = traj.round(t);
    let xj = &r.agents[j].x;
    let mut total = 0.0;
    for (i, a) in r.agents.iter().enumerate() {
        let con = &spec.constraints[i];
        let lam = &a.lambda_next;
        let res = problem::residual(con, xj, &a.y).unwrap();
        let h_x = con.a().tr_mul_vec(lam).unwrap();
        let h_y = con.b().tr_mul_vec(lam).unwrap();
        let dx: Vec<f64> = xj.iter().zip(xj).map(|(p, q)| p - q).collect();
        let dy: Vec<f64> = a.y.iter().zip(&comp.y_star[i]).map(|(p, q)| p - q).collect();
        let dl: Vec<f64> = lam.iter().zip(&comp.lambda_star[i]).map(|(p, q)| p - q).collect();
        total += dx.iter().zip(&h_x).map(|(p, q)| p * q).sum::<f64>()
            + dy.iter().zip(&h_y).map(|(p, q)| p * q).sum::<f64>()
            - dl.iter().zip(&res).map(|(p, q)| p * q).sum::<f64>();
    }
    total / spec.n as f64
}

#[test]
fn simplified_h_matches_full_evaluator() {
    let cfg = ScenarioConfig {
        horizon: 60,
        ..ScenarioConfig::default()
    };
    let prepared = PreparedScenario::new(&cfg).unwrap();
    let g = prepared.topology(TopologyKind::Cycle).unwrap();
    let p = doubly_stochastic(&g, Epsilon::Auto).unwrap();
    for variant in Variant::ALL {
        let traj = solver::run(&prepared.spec, &p, &prepared.solver_config(variant), &prepared.stream).unwrap();
        for t in [1, 2, 17, 60] {
            for j in 0..8 {
                let terms = duality_gap_terms(&traj, &prepared.comparator, &prepared.spec, cfg.rho, j, t).unwrap();
                let full = h_delta_full(&traj, &prepared.comparator, &prepared.spec, j, t);
                assert!((terms.h_delta - full).abs() < 1e-12, "{variant} j={j} t={t}");
            }
        }
    }
}

#[test]
fn breakdown_reproduces_social_regret() {
    let cfg = ScenarioConfig {
        horizon: 500,
        ..ScenarioConfig::default()
    };
    let prepared = PreparedScenario::new(&cfg).unwrap();
    let g = prepared.topology(TopologyKind::Random).unwrap();
    let p = doubly_stochastic(&g, Epsilon::Auto).unwrap();
    for variant in Variant::ALL {
        let traj = solver::run(&prepared.spec, &p, &prepared.solver_config(variant), &prepared.stream).unwrap();
        let series = social_regret(&traj, &prepared.comparator, &prepared.spec, cfg.rho).unwrap();
        for k in 0..series.horizon() {
            let max = series.per_agent.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(series.social[k], max);
            assert_eq!(series.per_agent[series.worst_agent[k]][k], max);
        }
        let j = *series.worst_agent.last().unwrap();
        let total = series.final_terms[j].total();
        assert!((total - series.social.last().unwrap()).abs() < 1e-8);
        for (jj, terms) in series.final_terms.iter().enumerate() {
            assert!((terms.total() - series.per_agent[jj].last().unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn hindsight_comparator_is_optimal() {
    let cfg = ScenarioConfig {
        horizon: 2000,
        ..ScenarioConfig::default()
    };
    let prepared = PreparedScenario::new(&cfg).unwrap();
    let comp = &prepared.comparator;
    assert!(comp.kkt_residual <= 1e-6);
    assert!(comp
        .lambda_star
        .iter()
        .all(|l| l.iter().map(|v| v * v).sum::<f64>().sqrt() <= 2.0));
    assert!(comp.lambda_within_bound);
    for (i, con) in prepared.spec.constraints.iter().enumerate() {
        let r = problem::residual(con, &comp.x_star, &comp.y_star[i]).unwrap();
        assert!(r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-6);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for sign in [1.0, -1.0] {
            let x: Vec<f64> = comp
                .x_star
                .iter()
                .zip([a.cos(), a.sin()])
                .map(|(v, d)| (v + sign * 1e-3 * d).clamp(-1.0, 1.0))
                .collect();
            let v = objective_at(&prepared.spec, &prepared.stream, &x, 1e-10).unwrap();
            assert!(v >= comp.objective_value - 1e-6, "{v} < {}", comp.objective_value);
        }
    }
}

#[test]
fn zero_dynamics_have_zero_regret() {
    let spec = offset_problem(&[[0.0, 0.0]; 3], LocalCost::Zero, OnlineCost::Zero);
    let stream = TargetStream::constant(3, 20, vec![0.3, -0.2]);
    let comp = solve_hindsight(&spec, &stream, 1e-12).unwrap();
    let g = odadmm::graph::build_topology(TopologyKind::Path, 3, 0).unwrap();
    let p = doubly_stochastic(&g, Epsilon::Auto).unwrap();
    for variant in Variant::ALL {
        let traj = solver::run(&spec, &p, &SolverConfig::new(variant, 2.0, 0.5, 20), &stream).unwrap();
        let series = social_regret(&traj, &comp, &spec, 0.5).unwrap();
        assert!(series.social.iter().all(|r| r.abs() < 1e-12));
    }
}
