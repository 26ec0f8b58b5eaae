//! The online constrained problem: box feasible sets, per-agent linear
//! coupling `A_i x + B_i y_i = c_i`, local costs on `y_i`, and online
//! tracking costs on the shared variable `x`.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box bounds must be nonempty and of equal length"));
        }
        numerics::ensure_finite(&lo, "box lower bound")?;
        numerics::ensure_finite(&hi, "box upper bound")?;
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::invalid("box lower bound exceeds upper bound"));
        }
        Ok(Self { lo, hi })
    }

    /// `[-half, half]^dim`
    pub fn symmetric(dim: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn diameter(&self) -> f64 {
        numerics::dist(&self.hi, &self.lo)
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Strictly inside every face by more than `margin`.
    pub fn is_interior(&self, v: &[f64], margin: f64) -> bool {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| x - l > margin && h - x > margin)
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        numerics::clamp_into(v, &self.lo, &self.hi)
    }

    /// Largest `‖v‖_∞` over the box.
    pub fn max_abs(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// The proximal function `ψ(x) = ‖x‖²` over a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticProximal {
    /// `Ψ² = sup_{x∈χ} ψ(x)`
    pub psi_cap: f64,
}

impl QuadraticProximal {
    pub fn over(chi: &BoxSet) -> Self {
        let psi_cap = chi.lo().iter().zip(chi.hi()).map(|(l, h)| (l * l).max(h * h)).sum();
        Self { psi_cap }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        numerics::dot(x, x)
    }
}

/// `argmin_{x∈χ} ⟨z, x⟩ + ψ(x)/α`, which for `ψ = ‖·‖²` is the clamp of `−αz/2`.
pub fn proximal_project(_psi: &QuadraticProximal, chi: &BoxSet, z: &[f64], alpha: f64) -> Vec<f64> {
    debug_assert!(alpha > 0.0);
    let v: Vec<f64> = z.iter().map(|zi| -0.5 * alpha * zi).collect();
    chi.project(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalConstraint {
    a: Matrix,
    b: Matrix,
    c: Vec<f64>,
    sigma1_a: f64,
    sigma_min_bt: f64,
    sigma1_b: f64,
}

impl LocalConstraint {
    pub fn new(a: Matrix, b: Matrix, c: Vec<f64>) -> Result<Self> {
        let m = c.len();
        if m == 0 || a.rows() != m || b.rows() != m {
            return Err(Error::invalid(format!(
                "constraint rows disagree: A has {}, B has {}, c has {m}",
                a.rows(),
                b.rows()
            )));
        }
        numerics::ensure_finite(&c, "c")?;
        if m > b.cols() {
            return Err(Error::invalid(format!(
                "B is {m}x{}; its transpose cannot be left invertible",
                b.cols()
            )));
        }
        let sa = numerics::spectral_extremes(&a)?;
        let sb = numerics::spectral_extremes(&b)?;
        if sb.sigma_min <= 1e-12 {
            return Err(Error::invalid("B has dependent rows (B^T not left invertible)"));
        }
        Ok(Self {
            a,
            b,
            c,
            sigma1_a: sa.sigma_max,
            sigma_min_bt: sb.sigma_min,
            sigma1_b: sb.sigma_max,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `m_i`
    pub fn rows(&self) -> usize {
        self.c.len()
    }

    pub fn sigma1_a(&self) -> f64 {
        self.sigma1_a
    }

    pub fn sigma_min_bt(&self) -> f64 {
        self.sigma_min_bt
    }

    pub fn sigma1_b(&self) -> f64 {
        self.sigma1_b
    }
}

/// `A x + B y − c`
pub fn residual(con: &LocalConstraint, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let ax = con.a.mul_vec(x)?;
    let by = con.b.mul_vec(y)?;
    Ok(ax.iter().zip(&by).zip(&con.c).map(|((p, q), c)| p + q - c).collect())
}

/// `f(x) = ½‖x − q‖²` for one revealed target `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTrackingCost {
    pub q: Vec<f64>,
}

impl QuadraticTrackingCost {
    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * numerics::dist(x, &self.q).powi(2)
    }
}

pub fn grad_tracking(cost: &QuadraticTrackingCost, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != cost.q.len() {
        return Err(Error::invalid("tracking gradient dimensions disagree"));
    }
    Ok(numerics::sub(x, &cost.q))
}

/// `φ(y) = (1 + s − ‖y‖_∞)^{-1}`: the inverse of one plus the distance from
/// `y` to the square boundary of half-width `s` that encloses the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPenaltyCost {
    pub half_width: f64,
}

impl BoundaryPenaltyCost {
    /// The scalar profile `h(u) = 1/(1 + s − u)` with `φ(y) = h(‖y‖_∞)`.
    pub fn profile(&self, u: f64) -> Result<f64> {
        let den = 1.0 + self.half_width - u;
        if den <= 0.0 {
            return Err(Error::Domain(format!(
                "boundary penalty undefined at ‖y‖∞ = {u} (half-width {})",
                self.half_width
            )));
        }
        Ok(1.0 / den)
    }

    /// `h'(u) = h(u)²`
    pub fn profile_slope(&self, u: f64) -> Result<f64> {
        Ok(self.profile(u)?.powi(2))
    }

    pub fn value(&self, y: &[f64]) -> Result<f64> {
        self.profile(numerics::norm_inf(y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEval {
    pub value: f64,
    pub subgrad: Vec<f64>,
}

/// Value and a subgradient of the boundary penalty. Ties in `argmax |y_k|`
/// go to the lowest index; at `y = 0` the zero subgradient is returned.
pub fn phi_eval_subgrad(cost: &BoundaryPenaltyCost, y: &[f64]) -> Result<PenaltyEval> {
    let (k, yk) = y.iter().enumerate().fold(
        (0, 0.0f64),
        |(bk, bv), (k, &v)| {
            if v.abs() > bv.abs() {
                (k, v)
            } else {
                (bk, bv)
            }
        },
    );
    let value = cost.profile(yk.abs())?;
    let mut subgrad = vec![0.0; y.len()];
    if yk != 0.0 {
        subgrad[k] = value * value * yk.signum();
    }
    Ok(PenaltyEval { value, subgrad })
}

/// Local cost `φ_i` on an agent's private variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalCost {
    Zero,
    /// `(w/2)‖y‖²`
    Quadratic {
        weight: f64,
    },
    BoundaryPenalty(BoundaryPenaltyCost),
}

impl LocalCost {
    pub fn value(&self, y: &[f64]) -> Result<f64> {
        match self {
            LocalCost::Zero => Ok(0.0),
            LocalCost::Quadratic { weight } => Ok(0.5 * weight * numerics::dot(y, y)),
            LocalCost::BoundaryPenalty(p) => p.value(y),
        }
    }

    pub fn subgradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            LocalCost::Zero => Ok(vec![0.0; y.len()]),
            LocalCost::Quadratic { weight } => Ok(numerics::scale(y, *weight)),
            LocalCost::BoundaryPenalty(p) => Ok(phi_eval_subgrad(p, y)?.subgrad),
        }
    }
}

/// Family of the online costs `f_{i,t}` parameterized by the revealed target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineCost {
    /// `½‖x − q_{i,t}‖²`
    Tracking,
    /// `f ≡ 0`; targets are ignored.
    Zero,
}

impl OnlineCost {
    pub fn value(&self, x: &[f64], q: &[f64]) -> f64 {
        match self {
            OnlineCost::Tracking => 0.5 * numerics::dist(x, q).powi(2),
            OnlineCost::Zero => 0.0,
        }
    }

    pub fn gradient(&self, x: &[f64], q: &[f64]) -> Vec<f64> {
        match self {
            OnlineCost::Tracking => numerics::sub(x, q),
            OnlineCost::Zero => vec![0.0; x.len()],
        }
    }

    /// Curvature of `f_{i,t}` (the Hessian is this multiple of the identity).
    pub fn curvature(&self) -> f64 {
        match self {
            OnlineCost::Tracking => 1.0,
            OnlineCost::Zero => 0.0,
        }
    }
}

/// Targets `q_{i,t}` for rounds `t = 1..=T`, stored as `rounds[t-1][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStream {
    rounds: Vec<Vec<Vec<f64>>>,
}

impl TargetStream {
    pub fn new(rounds: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = rounds.first().map_or(0, Vec::len);
        let d = rounds.first().and_then(|r| r.first()).map_or(0, Vec::len);
        for r in &rounds {
            if r.len() != n || r.iter().any(|q| q.len() != d) {
                return Err(Error::invalid("ragged target stream"));
            }
            for q in r {
                numerics::ensure_finite(q, "target")?;
            }
        }
        Ok(Self { rounds })
    }

    /// The same target for every agent and round.
    pub fn constant(n: usize, horizon: usize, q: Vec<f64>) -> Self {
        Self {
            rounds: vec![vec![q; n]; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    /// Targets of round `t` (1-based).
    pub fn round(&self, t: usize) -> &[Vec<f64>] {
        &self.rounds[t - 1]
    }

    pub fn prefix(&self, horizon: usize) -> Self {
        Self {
            rounds: self.rounds[..horizon.min(self.rounds.len())].to_vec(),
        }
    }

    /// SHA-256 over the little-endian bits of every target, in round-major order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.rounds {
            for q in r {
                for v in q {
                    h.update(v.to_le_bytes());
                }
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub chi: BoxSet,
    pub y_set: BoxSet,
    pub constraints: Vec<LocalConstraint>,
    pub phi: Vec<LocalCost>,
    pub online: OnlineCost,
    pub l_f: f64,
    pub l_phi: f64,
    pub d_lambda: f64,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        chi: BoxSet,
        y_set: BoxSet,
        constraints: Vec<LocalConstraint>,
        phi: Vec<LocalCost>,
        online: OnlineCost,
        l_f: f64,
        l_phi: f64,
        d_lambda: f64,
    ) -> Result<Self> {
        let n = constraints.len();
        if n == 0 || phi.len() != n {
            return Err(Error::invalid(format!(
                "need one constraint and one local cost per agent ({} vs {})",
                n,
                phi.len()
            )));
        }
        let (d_x, d_y) = (chi.dim(), y_set.dim());
        for (i, con) in constraints.iter().enumerate() {
            if con.a().cols() != d_x || con.b().cols() != d_y {
                return Err(Error::invalid(format!(
                    "agent {i}: A is {}x{}, B is {}x{}, expected d_x = {d_x}, d_y = {d_y}",
                    con.a().rows(),
                    con.a().cols(),
                    con.b().rows(),
                    con.b().cols()
                )));
            }
        }
        for (i, p) in phi.iter().enumerate() {
            match p {
                LocalCost::BoundaryPenalty(bp) if bp.half_width < y_set.max_abs() => {
                    return Err(Error::invalid(format!(
                        "agent {i}: boundary half-width {} lies inside Y",
                        bp.half_width
                    )))
                }
                LocalCost::Quadratic { weight } if !(*weight >= 0.0) => {
                    return Err(Error::invalid(format!("agent {i}: negative quadratic weight")))
                }
                _ => {}
            }
        }
        for (name, v) in [("L_f", l_f), ("L_phi", l_phi), ("D_lambda", d_lambda)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            n,
            d_x,
            d_y,
            chi,
            y_set,
            constraints,
            phi,
            online,
            l_f,
            l_phi,
            d_lambda,
        })
    }

    pub fn proximal(&self) -> QuadraticProximal {
        QuadraticProximal::over(&self.chi)
    }

    /// `f_t(x) = (1/n) Σ_i f_{i,t}(x)`
    pub fn network_cost(&self, x: &[f64], targets: &[Vec<f64>]) -> f64 {
        targets.iter().map(|q| self.online.value(x, q)).sum::<f64>() / self.n as f64
    }

    pub fn stationary_multiplier_bound(&self, i: usize) -> f64 {
        let con = &self.constraints[i];
        (con.rows() as f64).sqrt() * self.l_phi / con.sigma_min_bt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn formation_constraint(c: Vec<f64>) -> LocalConstraint {
        LocalConstraint::new(Matrix::identity(2), Matrix::scaled_identity(2, -1.0), c).unwrap()
    }

    #[test]
    fn residual_examples() {
        let con = formation_constraint(vec![0.4, 0.0]);
        let r = residual(&con, &[0.5, 0.5], &[0.1, 0.5]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(residual(&con, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), vec![-0.4, 0.0]);

        let con = LocalConstraint::new(
            Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[vec![2.0]]).unwrap(),
            vec![1.0],
        )
        .unwrap();
        assert_eq!(residual(&con, &[3.0, 7.0], &[-1.0]).unwrap(), vec![0.0]);
        assert!(residual(&con, &[3.0], &[-1.0]).is_err());
    }

    #[test]
    fn constraint_requires_left_invertible_bt() {
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(LocalConstraint::new(Matrix::identity(2), singular, vec![0.0, 0.0]).is_err());
        let wide_m = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(LocalConstraint::new(Matrix::identity(2), wide_m, vec![0.0, 0.0]).is_err());
        let con = formation_constraint(vec![0.0, 0.0]);
        assert!((con.sigma1_a() - 1.0).abs() < 1e-12);
        assert!((con.sigma_min_bt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proximal_projection_examples() {
        let chi = BoxSet::symmetric(2, 1.0).unwrap();
        let psi = QuadraticProximal::over(&chi);
        assert_eq!(psi.psi_cap, 2.0);
        assert_eq!(proximal_project(&psi, &chi, &[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(proximal_project(&psi, &chi, &[4.0, 0.0], 1.0), vec![-1.0, 0.0]);
        assert_eq!(proximal_project(&psi, &chi, &[1.0, -1.0], 1.0), vec![-0.5, 0.5]);
    }

    #[test]
    fn tracking_gradient_examples() {
        let g = |x: &[f64], q: &[f64]| grad_tracking(&QuadraticTrackingCost { q: q.to_vec() }, x).unwrap();
        assert_eq!(g(&[0.3, -0.2], &[0.3, -0.2]), vec![0.0, 0.0]);
        assert_eq!(g(&[1.0, 0.0], &[0.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(g(&[-1.0, -1.0], &[0.25, 0.0]), vec![-1.25, -1.0]);
    }

    #[test]
    fn penalty_examples() {
        let p = BoundaryPenaltyCost { half_width: 1.5 };
        let e = phi_eval_subgrad(&p, &[0.0, 0.0]).unwrap();
        assert!((e.value - 0.4).abs() < 1e-15);
        assert_eq!(e.subgrad, vec![0.0, 0.0]);

        let e = phi_eval_subgrad(&p, &[1.0, 0.0]).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.subgrad[0] - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(e.subgrad[1], 0.0);

        let e = phi_eval_subgrad(&p, &[-1.0, -1.0]).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.subgrad[0] + 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(e.subgrad[1], 0.0);

        assert!(matches!(phi_eval_subgrad(&p, &[3.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_validation() {
        let chi = BoxSet::symmetric(2, 1.0).unwrap();
        let con = formation_constraint(vec![0.4, 0.0]);
        let inside = LocalCost::BoundaryPenalty(BoundaryPenaltyCost { half_width: 0.5 });
        assert!(ProblemSpec::new(
            chi.clone(),
            chi.clone(),
            vec![con.clone()],
            vec![inside],
            OnlineCost::Tracking,
            1.0,
            1.0,
            1.0
        )
        .is_err());
        assert!(ProblemSpec::new(
            chi.clone(),
            chi.clone(),
            vec![con],
            vec![LocalCost::Zero],
            OnlineCost::Tracking,
            -1.0,
            1.0,
            1.0
        )
        .is_err());
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn stream_digest_is_content_addressed() {
        let a = TargetStream::constant(2, 3, vec![0.1, 0.2]);
        let b = TargetStream::constant(2, 3, vec![0.1, 0.2]);
        let c = TargetStream::constant(2, 3, vec![0.1, 0.3]);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    fn y_in_box() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..=1.0, 2)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn penalty_subgradient_inequality(u in y_in_box(), v in y_in_box()) {
            let p = BoundaryPenaltyCost { half_width: 1.5 };
            let ev = phi_eval_subgrad(&p, &v).unwrap();
            let fu = p.value(&u).unwrap();
            let lin = ev.value + numerics::dot(&ev.subgrad, &numerics::sub(&u, &v));
            prop_assert!(fu >= lin - 1e-12);
            prop_assert!(numerics::norm(&ev.subgrad) <= 4.0 / 9.0 + 1e-15);
        }

        #[test]
        fn proximal_matches_box_projection(
            z in proptest::collection::vec(-6.0f64..6.0, 2),
            alpha in 0.01f64..4.0,
        ) {
            let chi = BoxSet::symmetric(2, 1.0).unwrap();
            let psi = QuadraticProximal::over(&chi);
            let via_box = numerics::project_box(
                &numerics::scale(&z, -alpha / 2.0), chi.lo(), chi.hi()).unwrap();
            prop_assert_eq!(proximal_project(&psi, &chi, &z, alpha), via_box);
        }

        #[test]
        fn residual_is_affine(
            x in proptest::collection::vec(-2.0f64..2.0, 2),
            dx in proptest::collection::vec(-2.0f64..2.0, 2),
            y in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let con = LocalConstraint::new(
                Matrix::from_rows(&[vec![1.0, 2.0], vec![-0.5, 3.0]]).unwrap(),
                Matrix::from_rows(&[vec![1.0, 0.0], vec![0.25, -1.0]]).unwrap(),
                vec![0.3, -0.7],
            ).unwrap();
            let r0 = residual(&con, &x, &y).unwrap();
            let r1 = residual(&con, &numerics::add(&x, &dx), &y).unwrap();
            let adx = con.a().mul_vec(&dx).unwrap();
            for k in 0..2 {
                prop_assert!(((r1[k] - r0[k]) - adx[k]).abs() < 1e-12);
            }
        }
    }
}
