#![allow(dead_code)]

use odadmm::numerics::Matrix;
use odadmm::problem::{BoxSet, LocalConstraint, LocalCost, OnlineCost, ProblemSpec};

/// `x − y_i = c_i` on `[−1, 1]²` for every offset.
pub fn offset_problem(offsets: &[[f64; 2]], phi: LocalCost, online: OnlineCost) -> ProblemSpec {
    let cons = offsets
        .iter()
        .map(|c| LocalConstraint::new(Matrix::identity(2), Matrix::scaled_identity(2, -1.0), c.to_vec()).unwrap())
        .collect::<Vec<_>>();
    let n = cons.len();
    ProblemSpec::new(
        BoxSet::symmetric(2, 1.0).unwrap(),
        BoxSet::symmetric(2, 1.0).unwrap(),
        cons,
        vec![phi; n],
        online,
        2f64.sqrt(),
        4.0 / 9.0,
        2.0,
    )
    .unwrap()
}

/// Least-squares slope of `ys[k]` against `xs[k]`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope of `R_t / t` over rounds `T/2 ..= T`.
pub fn final_half_slope(per_t: &[f64]) -> f64 {
    let horizon = per_t.len();
    let start = horizon / 2;
    let ts: Vec<f64> = (start..horizon).map(|k| (k + 1) as f64).collect();
    regression_slope(&ts, &per_t[start..])
}

/// Grid `lo, lo + h, …, hi` with `(hi − lo)/h` steps.
pub fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let steps = ((hi - lo) / h).round() as usize;
    (0..=steps).map(|k| lo + k as f64 * h).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
