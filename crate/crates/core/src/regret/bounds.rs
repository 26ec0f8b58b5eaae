use crate::error::{Error, Result};
use crate::graph::ConsensusMatrix;
use crate::problem::ProblemSpec;
use crate::solver::{SolverConfig, Variant};

/// Constants of the regret bound `J1 + J2·k·√T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    pub variant: Variant,
    /// `ζ_i = √m_i · L_φ · σ1(A_i) / σ_min(B_iᵀ)`
    pub zeta: Vec<f64>,
    pub zeta_bar: f64,
    pub zeta_max: f64,
    /// `√n / (1 − σ2(P))`
    pub q: f64,
    pub j1: f64,
    pub j2: f64,
    pub sigma2: f64,
    pub k: f64,
    /// `sup_χ ψ = Ψ²`
    pub psi_cap: f64,
    pub l_f: f64,
}

impl BoundConstants {
    pub fn printed(&self, t: usize) -> f64 {
        self.j1 + self.j2 * self.k * (t as f64).sqrt()
    }

    /// The printed trace plus the terms the dual-averaging argument also
    /// accumulates: `(L_f + ζ̄)²` from the multiplier-augmented gradient norm
    /// and `Ψ²/k²` from `ψ(x*)/α_T`. The gradient-descent constants already
    /// carry both, so there the two traces coincide.
    pub fn proof_complete(&self, t: usize) -> f64 {
        match self.variant {
            Variant::DualAveraging => {
                let extra = (self.l_f + self.zeta_bar).powi(2) + self.psi_cap / (self.k * self.k);
                self.j1 + (self.j2 + extra) * self.k * (t as f64).sqrt()
            }
            Variant::GradientDescent => self.printed(t),
        }
    }
}

/// `ζ_i` for every agent.
pub fn zeta(spec: &ProblemSpec) -> Vec<f64> {
    spec.constraints
        .iter()
        .map(|c| (c.rows() as f64).sqrt() * spec.l_phi * c.sigma1_a() / c.sigma_min_bt())
        .collect()
}

pub fn bound_constants(spec: &ProblemSpec, p: &ConsensusMatrix, cfg: &SolverConfig) -> Result<BoundConstants> {
    let sigma2 = p.sigma2();
    if sigma2 >= 1.0 - 1e-9 {
        return Err(Error::DegenerateGraph { sigma2 });
    }
    let n = spec.n as f64;
    let zeta = zeta(spec);
    let zeta_bar = zeta.iter().sum::<f64>() / n;
    let zeta_max = zeta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = n.sqrt() / (1.0 - sigma2);
    let (l_f, d_l) = (spec.l_f, spec.d_lambda);

    let j1_common = d_l / (cfg.rho * n)
        * spec
            .constraints
            .iter()
            .zip(&zeta)
            .map(|(c, z)| z / c.sigma1_a())
            .sum::<f64>();
    let mean_dl_sigma = spec.constraints.iter().map(|c| d_l * c.sigma1_a()).sum::<f64>() / n;

    let (j1, j2) = match cfg.variant {
        Variant::DualAveraging => {
            let inner = spec
                .constraints
                .iter()
                .zip(&zeta)
                .map(|(c, z)| d_l * c.sigma1_a() + 2.0 * z)
                .sum::<f64>();
            (j1_common, 2.0 * q * (l_f + zeta_max) * (2.0 / n) * inner)
        }
        Variant::GradientDescent => {
            let d_chi = spec.chi.diameter();
            (
                j1_common + d_chi * d_chi / (2.0 * cfg.k),
                4.0 * q * (l_f + zeta_max) * (mean_dl_sigma + 2.0 * zeta_bar)
                    + 2.0 * (l_f + zeta_bar).powi(2)
                    + 8.0 * l_f * q * (l_f + zeta_bar),
            )
        }
    };
    Ok(BoundConstants {
        variant: cfg.variant,
        zeta,
        zeta_bar,
        zeta_max,
        q,
        j1,
        j2,
        sigma2,
        k: cfg.k,
        psi_cap: spec.proximal().psi_cap,
        l_f,
    })
}
