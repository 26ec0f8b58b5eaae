//! Small dense linear algebra: row-major matrices, a cyclic Jacobi
//! eigensolver for symmetric matrices, singular values through the Gram
//! matrix, box projection and a box-constrained quadratic solver.
//!
//! Everything here is sized for matrices of at most a few hundred rows.

use crate::error::{Error, Result};

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        ensure_finite(&data, "matrix")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Scaled identity `s * I_n`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `M v`
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `Mᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::invalid(format!(
                "matrix has {} rows, vector has {} entries",
                self.rows,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += m * vi;
            }
        }
        Ok(out)
    }

    /// `MᵀM`, symmetric by construction.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..self.rows).map(|k| self[(k, i)] * self[(k, j)]).sum();
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `y += a * x`
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean of equal-length vectors, reduced in index order.
pub fn mean_of(vs: &[Vec<f64>]) -> Vec<f64> {
    let d = vs.first().map_or(0, Vec::len);
    let mut m = vec![0.0; d];
    for v in vs {
        axpy(&mut m, 1.0, v);
    }
    let n = vs.len().max(1) as f64;
    m.iter_mut().for_each(|x| *x /= n);
    m
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` of this matrix is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    ensure_finite(s.as_slice(), "matrix")?;
    let tol = SYMMETRY_TOL * s.max_abs().max(1.0);
    let n = s.rows();
    for i in 0..n {
        for j in i + 1..n {
            if (s[(i, j)] - s[(j, i)]).abs() > tol {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    s[(i, j)],
                    s[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

pub fn sym_eigen(s: &Matrix) -> Result<SymEigen> {
    check_symmetric(s)?;
    let n = s.rows();
    let mut a = s.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let scale_ref = a.max_abs().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * scale_ref.max(1.0) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    Ok(sym_eigen(s)?.values)
}

/// Singular values, descending; there are `min(rows, cols)` of them.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    ensure_finite(m.as_slice(), "matrix")?;
    if m.is_square() && (0..m.rows()).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)])) {
        // |eigenvalues| keep their accuracy near zero, square roots of Gram eigenvalues do not
        let mut sv: Vec<f64> = sym_eigenvalues(m)?.into_iter().map(f64::abs).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        return Ok(sv);
    }
    let gram = if m.cols() <= m.rows() {
        m.gram()
    } else {
        m.transpose().gram()
    };
    let mut sv: Vec<f64> = sym_eigenvalues(&gram)?.into_iter().map(|e| e.max(0.0).sqrt()).collect();
    sv.reverse();
    Ok(sv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralExtremes {
    pub sigma_max: f64,
    pub sigma_min: f64,
}

pub fn spectral_extremes(m: &Matrix) -> Result<SpectralExtremes> {
    let sv = singular_values(m)?;
    Ok(SpectralExtremes {
        sigma_max: sv[0],
        sigma_min: *sv.last().expect("nonempty"),
    })
}

/// Coordinatewise clamp of `v` into `[lo, hi]`.
pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    if v.len() != lo.len() || v.len() != hi.len() {
        return Err(Error::invalid(format!(
            "box projection dimensions disagree: v={}, lo={}, hi={}",
            v.len(),
            lo.len(),
            hi.len()
        )));
    }
    Ok(clamp_into(v, lo, hi))
}

/// Unchecked variant of [`project_box`] for hot loops.
pub(crate) fn clamp_into(v: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.max(l).min(h))
        .collect()
}

/// Result of [`solve_box_qp`].
#[derive(Debug, Clone)]
pub struct BoxQpSolution {
    pub x: Vec<f64>,
    /// Infinity norm of `x - proj(x - (Hx - b))`.
    pub residual: f64,
    pub sweeps: usize,
}

/// Minimizes `½ xᵀHx − bᵀx` over `[lo, hi]` with projected Gauss–Seidel.
///
/// `H` must be symmetric with a positive diagonal. A diagonal `H` is solved
/// exactly in one sweep.
pub fn solve_box_qp(
    h: &Matrix,
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
    x0: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<BoxQpSolution> {
    let n = b.len();
    if h.rows() != n || h.cols() != n || lo.len() != n || hi.len() != n || x0.len() != n {
        return Err(Error::invalid("box QP dimensions disagree"));
    }
    if (0..n).any(|k| h[(k, k)] <= 0.0) {
        return Err(Error::invalid("box QP Hessian needs a positive diagonal"));
    }
    let mut x = clamp_into(x0, lo, hi);
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for k in 0..n {
            let row = h.row(k);
            let off: f64 = row
                .iter()
                .zip(&x)
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, (hkj, xj))| hkj * xj)
                .sum();
            x[k] = ((b[k] - off) / row[k]).max(lo[k]).min(hi[k]);
        }
        residual = box_qp_residual(h, b, lo, hi, &x);
        if residual <= tol {
            return Ok(BoxQpSolution {
                x,
                residual,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Convergence {
        context: "box QP".into(),
        iterations: max_sweeps,
        residual,
    })
}

pub(crate) fn box_qp_residual(h: &Matrix, b: &[f64], lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    (0..x.len())
        .map(|k| {
            let g = dot(h.row(k), x) - b[k];
            (x[k] - (x[k] - g).max(lo[k]).min(hi[k])).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_singular_values() {
        let se = spectral_extremes(&Matrix::identity(2)).unwrap();
        assert!((se.sigma_max - 1.0).abs() < 1e-12);
        assert!((se.sigma_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tall_matrix_singular_values() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0], vec![0.0, 0.0]]).unwrap();
        let se = spectral_extremes(&m).unwrap();
        assert!((se.sigma_max - 4.0).abs() < 4e-10);
        assert!((se.sigma_min - 3.0).abs() < 3e-10);
        // wide orientation gives the same two values
        let se_t = spectral_extremes(&m.transpose()).unwrap();
        assert!((se_t.sigma_max - 4.0).abs() < 4e-10);
        assert!((se_t.sigma_min - 3.0).abs() < 3e-10);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let m = Matrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(sym_eigenvalues(&m).unwrap(), vec![1.0, 2.0, 5.0]);
    }

    #[test]
    fn complete_graph_laplacian_spectrum() {
        let l = Matrix::from_rows(&[vec![2.0, -1.0, -1.0], vec![-1.0, 2.0, -1.0], vec![-1.0, -1.0, 2.0]]).unwrap();
        let ev = sym_eigenvalues(&l).unwrap();
        for (got, want) in ev.iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn zero_matrix_eigenvalues() {
        assert_eq!(sym_eigenvalues(&Matrix::zeros(4, 4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigenvalues(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let m = Matrix::from_rows(&[vec![4.0, 1.0, -2.0], vec![1.0, 3.0, 0.5], vec![-2.0, 0.5, 1.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        for k in 0..3 {
            let v: Vec<f64> = (0..3).map(|i| e.vectors[(i, k)]).collect();
            let mv = m.mul_vec(&v).unwrap();
            for i in 0..3 {
                assert!((mv[i] - e.values[k] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn box_projection_examples() {
        let lo = [-1.0, -1.0];
        let hi = [1.0, 1.0];
        assert_eq!(project_box(&[0.2, -0.3], &lo, &hi).unwrap(), vec![0.2, -0.3]);
        assert_eq!(project_box(&[1.7, -2.0], &lo, &hi).unwrap(), vec![1.0, -1.0]);
        assert_eq!(project_box(&[-1.0, 5.0], &lo, &hi).unwrap(), vec![-1.0, 1.0]);
        assert!(project_box(&[0.0], &lo, &hi).is_err());
    }

    #[test]
    fn box_qp_diagonal_is_one_sweep() {
        let h = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let sol = solve_box_qp(&h, &[4.0, -1.0], &[-1.0, -1.0], &[1.0, 1.0], &[0.0, 0.0], 1e-14, 10).unwrap();
        assert_eq!(sol.sweeps, 1);
        assert_eq!(sol.x, vec![1.0, -0.25]);
    }

    #[test]
    fn box_qp_coupled() {
        // unconstrained minimizer of [[2,1],[1,2]] x = (1,1) is (1/3, 1/3)
        let h = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let sol = solve_box_qp(&h, &[1.0, 1.0], &[-1.0, -1.0], &[1.0, 1.0], &[0.0, 0.0], 1e-13, 500).unwrap();
        assert!((sol.x[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3.0f64..3.0, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sigma_ordering(m in matrix_strategy()) {
            let se = spectral_extremes(&m).unwrap();
            prop_assert!(se.sigma_max >= se.sigma_min);
            prop_assert!(se.sigma_min >= 0.0);
        }

        #[test]
        fn operator_norm_bound(
            (m, x) in matrix_strategy().prop_flat_map(|m| {
                let c = m.cols();
                (Just(m), proptest::collection::vec(-5.0f64..5.0, c))
            })
        ) {
            let se = spectral_extremes(&m).unwrap();
            let mx = m.mul_vec(&x).unwrap();
            prop_assert!(norm(&mx) <= se.sigma_max * norm(&x) * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn eigen_trace(m in matrix_strategy()) {
            let g = m.gram();
            let ev = sym_eigenvalues(&g).unwrap();
            prop_assert!((ev.iter().sum::<f64>() - g.trace()).abs() < 1e-8);
        }

        #[test]
        fn projection_nonexpansive_and_idempotent(
            u in proptest::collection::vec(-4.0f64..4.0, 3),
            v in proptest::collection::vec(-4.0f64..4.0, 3),
        ) {
            let lo = [-1.0, -0.5, 0.0];
            let hi = [1.0, 2.0, 0.5];
            let pu = project_box(&u, &lo, &hi).unwrap();
            let pv = project_box(&v, &lo, &hi).unwrap();
            prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-15);
            prop_assert_eq!(project_box(&pu, &lo, &hi).unwrap(), pu);
        }
    }
}
