//! The per-agent augmented Lagrangian minimization over `y`:
//!
//! ```text
//! min_{y∈Y} φ(y) + λᵀ r(x, y) + (ρ/2)‖r(x, y)‖²,   r(x, y) = A x + B y − c
//! ```
//!
//! The smooth part is the quadratic `½ yᵀHy − bᵀy` with `H = ρBᵀB`. Smooth
//! local costs fold into `H` and are solved as a box QP. The boundary penalty
//! `h(‖y‖_∞)` is handled through its epigraph: for a level `s` the inner
//! problem is a box QP over `Y ∩ [−s, s]^d`, and the optimal level is found by
//! bisection on the derivative of the (convex) value function in `s`.

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};
use crate::problem::{BoundaryPenaltyCost, BoxSet, LocalConstraint, LocalCost};

/// Distance below which a coordinate counts as touching a face of `Y`.
pub const INTERIOR_MARGIN: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolve {
    pub y: Vec<f64>,
    /// `‖y − Π_Y(y − γ G)‖ / γ` for a subgradient `G` of the objective at `y`.
    pub residual: f64,
    /// `y` stays more than [`INTERIOR_MARGIN`] away from every face of `Y`.
    pub interior: bool,
    pub iterations: usize,
}

/// Everything about agent `i`'s `y`-subproblem that does not change between rounds.
#[derive(Debug, Clone, Copy)]
pub struct LocalStep<'a> {
    pub con: &'a LocalConstraint,
    pub phi: &'a LocalCost,
    pub rho: f64,
    pub y_set: &'a BoxSet,
    pub l_phi: f64,
}

struct Quadratic {
    h: Matrix,
    b: Vec<f64>,
}

impl Quadratic {
    fn grad(&self, y: &[f64]) -> Vec<f64> {
        (0..y.len())
            .map(|k| numerics::dot(self.h.row(k), y) - self.b[k])
            .collect()
    }
}

impl LocalStep<'_> {
    /// Step at which the optimality residual is probed.
    pub fn probe_step(&self) -> f64 {
        1.0 / (self.rho * self.con.sigma1_b().powi(2) + self.l_phi)
    }

    fn quadratic(&self, x: &[f64], lambda: &[f64]) -> Result<Quadratic> {
        let con = self.con;
        let gram = con.b().gram();
        let d = gram.rows();
        let mut h = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] = self.rho * gram[(i, j)];
            }
        }
        if let LocalCost::Quadratic { weight } = self.phi {
            for k in 0..d {
                h[(k, k)] += weight;
            }
        }
        let ax = con.a().mul_vec(x)?;
        let shifted: Vec<f64> = lambda
            .iter()
            .zip(ax.iter().zip(con.c()))
            .map(|(l, (a, c))| l + self.rho * (a - c))
            .collect();
        let b = numerics::scale(&con.b().tr_mul_vec(&shifted)?, -1.0);
        Ok(Quadratic { h, b })
    }

    pub fn objective(&self, x: &[f64], lambda: &[f64], y: &[f64]) -> Result<f64> {
        let r = crate::problem::residual(self.con, x, y)?;
        Ok(self.phi.value(y)? + numerics::dot(lambda, &r) + 0.5 * self.rho * numerics::dot(&r, &r))
    }

    pub fn solve(&self, x: &[f64], lambda: &[f64], warm: &[f64], opts: InnerOptions) -> Result<LocalSolve> {
        if !(self.rho > 0.0) {
            return Err(Error::invalid("rho must be positive"));
        }
        let quad = self.quadratic(x, lambda)?;
        let qp_tol = 1e-3 * opts.tol;
        let (y, iterations) = match self.phi {
            LocalCost::Zero | LocalCost::Quadratic { .. } => {
                let sol = numerics::solve_box_qp(
                    &quad.h,
                    &quad.b,
                    self.y_set.lo(),
                    self.y_set.hi(),
                    warm,
                    qp_tol,
                    opts.max_iters,
                )?;
                (sol.x, sol.sweeps)
            }
            LocalCost::BoundaryPenalty(pen) => self.solve_penalized(pen, &quad, warm, opts)?,
        };
        let residual = self.certificate(&quad, &y)?;
        if !(residual <= opts.tol) {
            return Err(Error::Convergence {
                context: "local y-update".into(),
                iterations,
                residual,
            });
        }
        let interior = self.y_set.is_interior(&y, INTERIOR_MARGIN);
        Ok(LocalSolve {
            y,
            residual,
            interior,
            iterations,
        })
    }

    fn level_box(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let lo = self.y_set.lo().iter().map(|&l| l.max(-s)).collect();
        let hi = self.y_set.hi().iter().map(|&h| h.min(s)).collect();
        (lo, hi)
    }

    fn solve_level(&self, quad: &Quadratic, s: f64, warm: &[f64], opts: InnerOptions) -> Result<(Vec<f64>, usize)> {
        let (lo, hi) = self.level_box(s);
        let sol = numerics::solve_box_qp(&quad.h, &quad.b, &lo, &hi, warm, 1e-3 * opts.tol, opts.max_iters)?;
        Ok((sol.x, sol.sweeps))
    }

    /// `−dQ/ds` (right derivative) of the level value function at the level-`s` solution `y`.
    fn level_pull(&self, quad: &Quadratic, s: f64, y: &[f64]) -> f64 {
        let g = quad.grad(y);
        let (lo, hi) = (self.y_set.lo(), self.y_set.hi());
        (0..y.len())
            .map(|k| {
                let mut pull = 0.0;
                if s < hi[k] && y[k] == s {
                    pull += (-g[k]).max(0.0);
                }
                if -s > lo[k] && y[k] == -s {
                    pull += g[k].max(0.0);
                }
                pull
            })
            .sum()
    }

    fn solve_penalized(
        &self,
        pen: &BoundaryPenaltyCost,
        quad: &Quadratic,
        warm: &[f64],
        opts: InnerOptions,
    ) -> Result<(Vec<f64>, usize)> {
        let (lo, hi) = (self.y_set.lo(), self.y_set.hi());
        let s_min = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                if l > 0.0 {
                    l
                } else if h < 0.0 {
                    -h
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        let s_max = self.y_set.max_abs();
        let mut iters = 0;
        let mut slope = |s: f64, warm: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (y, sweeps) = self.solve_level(quad, s, warm, opts)?;
            iters += sweeps;
            Ok((pen.profile_slope(s)? - self.level_pull(quad, s, &y), y))
        };

        let (mut a, mut b) = (s_min, s_max);
        let mut y = warm.to_vec();
        let mut bisections = 0;
        while b - a > f64::EPSILON * b.max(1.0) && bisections < MAX_BISECTIONS.min(opts.max_iters) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let (g, ym) = slope(mid, &y)?;
            y = ym;
            if g < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            bisections += 1;
        }
        // the right end of the bracket: at s_min when the slope is already
        // nonnegative there, at s_max when it never turns positive
        let s_star = if a == s_min && b > s_min && slope(s_min, &y)?.0 >= 0.0 {
            s_min
        } else {
            b
        };
        let (y, sweeps) = self.solve_level(quad, s_star, &y, opts)?;
        Ok((y, iters + sweeps + bisections))
    }

    /// Projected subgradient residual at the probe step, with the subgradient
    /// of `φ` chosen from the active face of `∂φ(y)`.
    fn certificate(&self, quad: &Quadratic, y: &[f64]) -> Result<f64> {
        let gq = quad.grad(y);
        let gphi = match self.phi {
            LocalCost::Zero | LocalCost::Quadratic { .. } => vec![0.0; y.len()],
            LocalCost::BoundaryPenalty(pen) => penalty_subgradient(pen, y, &gq)?,
        };
        let gamma = self.probe_step();
        let step: Vec<f64> = y
            .iter()
            .zip(gq.iter().zip(&gphi))
            .map(|(yk, (a, b))| yk - gamma * (a + b))
            .collect();
        let proj = self.y_set.project(&step);
        Ok(numerics::dist(y, &proj) / gamma)
    }
}

/// Element of `∂φ(y)` that best cancels the smooth gradient `gq`.
fn penalty_subgradient(pen: &BoundaryPenaltyCost, y: &[f64], gq: &[f64]) -> Result<Vec<f64>> {
    let s = numerics::norm_inf(y);
    let slope = pen.profile_slope(s)?;
    let d = y.len();
    if s == 0.0 {
        // ∂φ(0) = h'(0) · unit ℓ1 ball
        let l1: f64 = gq.iter().map(|g| g.abs()).sum();
        let shrink = if l1 <= slope { 1.0 } else { slope / l1 };
        return Ok(gq.iter().map(|g| -g * shrink).collect());
    }
    let active: Vec<usize> = (0..d).filter(|&k| y[k].abs() == s).collect();
    let pulls: Vec<f64> = active.iter().map(|&k| (-gq[k] * y[k].signum()).max(0.0)).collect();
    let total: f64 = pulls.iter().sum();
    let mut g = vec![0.0; d];
    if total > 0.0 {
        for (&k, p) in active.iter().zip(&pulls) {
            g[k] = slope * (p / total) * y[k].signum();
        }
    } else {
        g[active[0]] = slope * y[active[0]].signum();
    }
    Ok(g)
}

/// Solve agent `i`'s `y`-step at `(x, λ)` starting from `warm`.
#[allow(clippy::too_many_arguments)]
pub fn y_update(
    x: &[f64],
    lambda: &[f64],
    warm: &[f64],
    con: &LocalConstraint,
    phi: &LocalCost,
    rho: f64,
    y_set: &BoxSet,
    l_phi: f64,
    opts: InnerOptions,
) -> Result<LocalSolve> {
    LocalStep {
        con,
        phi,
        rho,
        y_set,
        l_phi,
    }
    .solve(x, lambda, warm, opts)
}
