use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::problem::{BoundaryPenaltyCost, BoxSet, LocalConstraint, LocalCost, OnlineCost, ProblemSpec, TargetStream};
use crate::solver::Variant;

/// Seed of the Erdős–Rényi instance used for the `random` topology at `n = 8`;
/// its `σ2` is 0.781.
pub const PINNED_RANDOM_GRAPH_SEED: u64 = 13;

const MAX_REDRAWS: usize = 100;

/// What to do with an interest point drawn outside `χ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutOfBox {
    /// Redraw, clamping after the redraw budget runs out.
    Reject,
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamParams {
    pub uniform_center: [f64; 2],
    pub uniform_side: f64,
    pub gauss_mean: [f64; 2],
    /// Per-axis standard deviation.
    pub gauss_std: f64,
    /// Odd rounds draw from the uniform square when set, even rounds otherwise.
    pub uniform_first: bool,
    pub out_of_box: OutOfBox,
}

impl Default for StreamParams {
    fn default() -> Self {
        Self {
            uniform_center: [-0.75, 0.0],
            uniform_side: 0.5,
            gauss_mean: [0.0, -0.75],
            gauss_std: 0.01,
            uniform_first: true,
            out_of_box: OutOfBox::Reject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub radius: f64,
    pub box_half_width: f64,
    pub boundary_half_width: f64,
    pub stream: StreamParams,
    pub k: f64,
    pub rho: f64,
    pub horizon: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Seed for the random topology; ignored by the deterministic families.
    pub graph_seed: u64,
    pub smoothing_window: usize,
    pub l_f: f64,
    pub l_phi: f64,
    pub d_lambda: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 8,
            radius: 0.4,
            box_half_width: 1.0,
            boundary_half_width: 1.5,
            stream: StreamParams::default(),
            k: 2.0,
            rho: 0.5,
            horizon: 10_000,
            variant: Variant::DualAveraging,
            seed: 42,
            graph_seed: PINNED_RANDOM_GRAPH_SEED,
            smoothing_window: 1000,
            l_f: std::f64::consts::SQRT_2,
            l_phi: 4.0 / 9.0,
            d_lambda: 2.0,
            inner_tol: 1e-8,
            inner_max_iters: 2000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.n < 2 {
            return bad(format!("need at least 2 agents, got {}", self.n));
        }
        if !(self.box_half_width > 0.0) {
            return bad("box half-width must be positive".into());
        }
        if !(self.radius >= 0.0 && self.radius < self.box_half_width) {
            return bad(format!(
                "formation radius {} must lie in [0, {})",
                self.radius, self.box_half_width
            ));
        }
        if !(self.boundary_half_width >= self.box_half_width) {
            return bad(format!(
                "boundary half-width {} must be at least the box half-width {}",
                self.boundary_half_width, self.box_half_width
            ));
        }
        if self.horizon == 0 || self.smoothing_window == 0 {
            return bad("horizon and smoothing window must be positive".into());
        }
        if !(self.k > 0.0 && self.rho > 0.0) {
            return bad("k and rho must be positive".into());
        }
        let s = &self.stream;
        if !(s.uniform_side >= 0.0 && s.gauss_std >= 0.0) {
            return bad("stream spreads must be nonnegative".into());
        }
        Ok(())
    }

    pub fn chi(&self) -> Result<BoxSet> {
        BoxSet::symmetric(2, self.box_half_width)
    }

    /// Formation offset `c_i` of agent `i`.
    pub fn offset(&self, i: usize) -> Vec<f64> {
        let a = 2.0 * std::f64::consts::PI * i as f64 / self.n as f64;
        vec![self.radius * a.cos(), self.radius * a.sin()]
    }
}

/// Agents on a circle around the shared target: `x − y_i = c_i` with a
/// penalty keeping `y_i` away from the boundary of `[−s, s]²`.
pub fn build_formation_scenario(cfg: &ScenarioConfig) -> Result<ProblemSpec> {
    cfg.validate()?;
    let chi = cfg.chi()?;
    let cons = (0..cfg.n)
        .map(|i| LocalConstraint::new(Matrix::identity(2), Matrix::scaled_identity(2, -1.0), cfg.offset(i)))
        .collect::<Result<Vec<_>>>()?;
    let phi = LocalCost::BoundaryPenalty(BoundaryPenaltyCost {
        half_width: cfg.boundary_half_width,
    });
    ProblemSpec::new(
        chi.clone(),
        chi,
        cons,
        vec![phi; cfg.n],
        OnlineCost::Tracking,
        cfg.l_f,
        cfg.l_phi,
        cfg.d_lambda,
    )
    .map_err(|e| Error::config(e.to_string()))
}

fn sample_rng(seed: u64, t: usize, agent: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(agent as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(t as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Interest point `q_{i,t}`; a pure function of `(seed, t, agent)`.
pub fn sample_interest_point(cfg: &ScenarioConfig, t: usize, agent: usize) -> Vec<f64> {
    let s = &cfg.stream;
    let mut rng = sample_rng(cfg.seed, t, agent);
    let h = cfg.box_half_width;
    let inside = |p: &[f64; 2]| p.iter().all(|v| v.abs() <= h);
    let uniform_round = (t % 2 == 1) == s.uniform_first;
    let half = 0.5 * s.uniform_side;
    let normal = Normal::new(0.0, s.gauss_std).expect("validated std");
    let draw = |rng: &mut ChaCha8Rng| -> [f64; 2] {
        if uniform_round {
            let mut p = [0.0; 2];
            for (k, c) in s.uniform_center.iter().enumerate() {
                p[k] = if half > 0.0 {
                    rng.random_range(c - half..=c + half)
                } else {
                    *c
                };
            }
            p
        } else {
            [
                s.gauss_mean[0] + normal.sample(rng),
                s.gauss_mean[1] + normal.sample(rng),
            ]
        }
    };
    let mut p = draw(&mut rng);
    if s.out_of_box == OutOfBox::Reject {
        for _ in 0..MAX_REDRAWS {
            if inside(&p) {
                break;
            }
            p = draw(&mut rng);
        }
    }
    p.iter().map(|v| v.clamp(-h, h)).collect()
}

/// The full target tensor for rounds `1..=horizon`.
pub fn interest_stream(cfg: &ScenarioConfig) -> Result<TargetStream> {
    let rounds = (1..=cfg.horizon)
        .into_par_iter()
        .map(|t| (0..cfg.n).map(|i| sample_interest_point(cfg, t, i)).collect())
        .collect();
    TargetStream::new(rounds)
}
