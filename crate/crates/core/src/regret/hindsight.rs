//! Centralized ADMM on the full-horizon problem
//!
//! ```text
//! min_{x∈χ, y_i∈Y}  n·f̄(x) + Σ_i φ_i(y_i)   s.t.  A_i x + B_i y_i = c_i,
//! f̄ = (1/T) Σ_t f_t
//! ```
//!
//! whose multipliers are the saddle-point duals of the per-round Lagrangian
//! `f_t(x) + (1/n) Σ_i [φ_i(y_i) + λ_iᵀ r_i(x, y_i)]` averaged over rounds.

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};
use crate::problem::{self, ProblemSpec, TargetStream};
use crate::solver::{InnerOptions, LocalStep};

/// Penalty of the oracle's own ADMM iterations.
pub const ORACLE_RHO: f64 = 1.0;
pub const ORACLE_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HindsightComparator {
    pub x_star: Vec<f64>,
    pub y_star: Vec<Vec<f64>>,
    pub lambda_star: Vec<Vec<f64>>,
    /// `f̄(x*) + (1/n) Σ_i φ_i(y_i*)`
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Every `‖λ_i*‖ ≤ D_λ`; false means the configured `D_λ` is too small for this stream.
    pub lambda_within_bound: bool,
}

impl HindsightComparator {
    pub fn max_lambda_norm(&self) -> f64 {
        self.lambda_star.iter().map(|l| numerics::norm(l)).fold(0.0, f64::max)
    }
}

/// The aggregate smooth cost `n·f̄(x) = ½ c‖x‖² + ⟨g0, x⟩ + const`.
struct Aggregate {
    curvature: f64,
    grad_at_zero: Vec<f64>,
    value_at_zero: f64,
}

impl Aggregate {
    fn new(spec: &ProblemSpec, stream: &TargetStream) -> Result<Self> {
        let t_len = stream.horizon();
        if t_len == 0 {
            return Err(Error::invalid("hindsight needs at least one round"));
        }
        let zero = vec![0.0; spec.d_x];
        let mut g0 = vec![0.0; spec.d_x];
        let mut v0 = 0.0;
        for t in 1..=t_len {
            for q in stream.round(t) {
                numerics::axpy(&mut g0, 1.0, &spec.online.gradient(&zero, q));
                v0 += spec.online.value(&zero, q);
            }
        }
        let w = 1.0 / t_len as f64;
        Ok(Self {
            curvature: spec.n as f64 * spec.online.curvature(),
            grad_at_zero: numerics::scale(&g0, w),
            value_at_zero: v0 * w,
        })
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = numerics::scale(x, self.curvature);
        numerics::axpy(&mut g, 1.0, &self.grad_at_zero);
        g
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_at_zero + numerics::dot(&self.grad_at_zero, x) + 0.5 * self.curvature * numerics::dot(x, x)
    }
}

/// Hindsight objective `f̄(x) + (1/n) Σ_i φ_i(y_i)`.
pub fn hindsight_objective(spec: &ProblemSpec, stream: &TargetStream, x: &[f64], y: &[Vec<f64>]) -> Result<f64> {
    let agg = Aggregate::new(spec, stream)?;
    let mut phi = 0.0;
    for (p, yi) in spec.phi.iter().zip(y) {
        phi += p.value(yi)?;
    }
    Ok((agg.value(x) + phi) / spec.n as f64)
}

struct Oracle<'a> {
    spec: &'a ProblemSpec,
    agg: Aggregate,
    inner: InnerOptions,
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<Vec<f64>>,
    lambda: Vec<Vec<f64>>,
}

impl Oracle<'_> {
    fn local(&self, i: usize) -> LocalStep<'_> {
        LocalStep {
            con: &self.spec.constraints[i],
            phi: &self.spec.phi[i],
            rho: ORACLE_RHO,
            y_set: &self.spec.y_set,
            l_phi: self.spec.l_phi,
        }
    }

    fn x_hessian(&self) -> Matrix {
        let d = self.spec.d_x;
        let mut h = Matrix::scaled_identity(d, self.agg.curvature);
        for con in &self.spec.constraints {
            let g = con.a().gram();
            for r in 0..d {
                for c in 0..d {
                    h[(r, c)] += ORACLE_RHO * g[(r, c)];
                }
            }
        }
        h
    }

    fn x_step(&self, h: &Matrix, it: &Iterate, tol: f64) -> Result<Vec<f64>> {
        let mut b = numerics::scale(&self.agg.grad_at_zero, -1.0);
        for (i, con) in self.spec.constraints.iter().enumerate() {
            let by = con.b().mul_vec(&it.y[i])?;
            let shifted: Vec<f64> = it.lambda[i]
                .iter()
                .zip(by.iter().zip(con.c()))
                .map(|(l, (bi, ci))| l + ORACLE_RHO * (bi - ci))
                .collect();
            numerics::axpy(&mut b, -1.0, &con.a().tr_mul_vec(&shifted)?);
        }
        let sol = numerics::solve_box_qp(h, &b, self.spec.chi.lo(), self.spec.chi.hi(), &it.x, tol, 10_000)?;
        Ok(sol.x)
    }

    /// Stationarity of the (unaugmented) Lagrangian in `x`, as a unit-step projected gradient.
    fn x_residual(&self, it: &Iterate) -> Result<f64> {
        let mut g = self.agg.grad(&it.x);
        for (con, l) in self.spec.constraints.iter().zip(&it.lambda) {
            numerics::axpy(&mut g, 1.0, &con.a().tr_mul_vec(l)?);
        }
        let step = numerics::sub(&it.x, &g);
        Ok(numerics::dist(&it.x, &self.spec.chi.project(&step)))
    }

    fn primal_residual(&self, it: &Iterate) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, con) in self.spec.constraints.iter().enumerate() {
            worst = worst.max(numerics::norm(&problem::residual(con, &it.x, &it.y[i])?));
        }
        Ok(worst)
    }

    fn solve(&self, fixed_x: Option<&[f64]>, tol: f64) -> Result<(Iterate, f64, usize)> {
        let spec = self.spec;
        let mut it = Iterate {
            x: fixed_x.map_or_else(|| vec![0.0; spec.d_x], <[f64]>::to_vec),
            y: vec![vec![0.0; spec.d_y]; spec.n],
            lambda: spec.constraints.iter().map(|c| vec![0.0; c.rows()]).collect(),
        };
        let h = self.x_hessian();
        let mut residual = f64::INFINITY;
        for k in 1..=ORACLE_MAX_ITERS {
            if fixed_x.is_none() {
                it.x = self.x_step(&h, &it, 1e-3 * tol)?;
            }
            for i in 0..spec.n {
                it.y[i] = self
                    .local(i)
                    .solve(&it.x, &it.lambda[i], &it.y[i], self.inner)
                    .map_err(|e| e.with_context(format!("hindsight oracle, agent {i}")))?
                    .y;
                let r = problem::residual(&spec.constraints[i], &it.x, &it.y[i])?;
                numerics::axpy(&mut it.lambda[i], ORACLE_RHO, &r);
            }
            // after the multiplier step each y_i is stationary for the
            // unaugmented Lagrangian, so only feasibility and x remain
            let primal = self.primal_residual(&it)?;
            let dual = if fixed_x.is_none() { self.x_residual(&it)? } else { 0.0 };
            residual = primal.max(dual);
            if residual <= tol {
                return Ok((it, residual, k));
            }
        }
        Err(Error::Convergence {
            context: "hindsight oracle".into(),
            iterations: ORACLE_MAX_ITERS,
            residual,
        })
    }
}

fn oracle<'a>(spec: &'a ProblemSpec, stream: &TargetStream, tol: f64) -> Result<Oracle<'a>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("oracle tolerance must be positive"));
    }
    Ok(Oracle {
        spec,
        agg: Aggregate::new(spec, stream)?,
        inner: InnerOptions {
            tol: (1e-2 * tol).max(1e-12),
            max_iters: 2000,
        },
    })
}

/// Best fixed decision in hindsight for the whole stream.
pub fn solve_hindsight(spec: &ProblemSpec, stream: &TargetStream, tol: f64) -> Result<HindsightComparator> {
    let o = oracle(spec, stream, tol)?;
    let (it, kkt, iterations) = o.solve(None, tol)?;
    let objective_value = hindsight_objective(spec, stream, &it.x, &it.y)?;
    let lambda_within_bound = it.lambda.iter().all(|l| numerics::norm(l) <= spec.d_lambda);
    Ok(HindsightComparator {
        x_star: it.x,
        y_star: it.y,
        lambda_star: it.lambda,
        objective_value,
        kkt_residual: kkt,
        iterations,
        lambda_within_bound,
    })
}

/// Hindsight objective at a fixed `x`, with every `y_i` re-optimized subject to the constraints.
pub fn objective_at(spec: &ProblemSpec, stream: &TargetStream, x: &[f64], tol: f64) -> Result<f64> {
    if !spec.chi.contains(x) {
        return Err(Error::invalid("x lies outside χ"));
    }
    let o = oracle(spec, stream, tol)?;
    let (it, _, _) = o.solve(Some(x), tol)?;
    hindsight_objective(spec, stream, x, &it.y)
}
