//! Dense complex matrix algebra used by every other module.
//!
//! Thin wrappers over `nalgebra` for the decompositions, plus the Kronecker
//! and vectorization calculus, the positive-part operator, Hermitian square
//! roots, the Moore-Penrose pseudoinverse and chi-square quantiles.
//!
//! Tolerances are absolute-relative hybrids: `tol * max(1, scale)` where the
//! scale is a norm of the input.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[allow(non_camel_case_types)]
pub type c64 = Complex64;

/// Dense complex matrix. Column-major, as `vec` expects.
pub type CMatrix = DMatrix<c64>;

/// Dense complex column vector.
pub type CVector = DVector<c64>;

/// Relative asymmetry above which a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-6;

/// Relative threshold below which eigenvalues are treated as zero.
pub const CLAMP_TOL: f64 = 1e-9;

pub const ZERO: c64 = c64::new(0.0, 0.0);
pub const ONE: c64 = c64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Eigenvalue ordering for [`herm_eig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Ascending,
    Descending,
}

/// Eigendecomposition `M = U diag(d) U^H` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Unitary matrix whose columns are the eigenvectors.
    pub u: CMatrix,
    pub d: Vec<f64>,
    pub order: Order,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        let d = DVector::from_iterator(self.d.len(), self.d.iter().map(|&x| re(x)));
        &self.u * CMatrix::from_diagonal(&d) * self.u.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Thin singular value decomposition `M = U diag(s) V^H`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let d = DVector::from_iterator(self.s.len(), self.s.iter().map(|&x| re(x)));
        &self.u * CMatrix::from_diagonal(&d) * self.v.adjoint()
    }
}

pub fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frob_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn trace(m: &CMatrix) -> c64 {
    m.diagonal().iter().sum()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag_real(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| re(x))))
}

/// Builds a complex matrix from real row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| re(x)))
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Returns `(M + M^H)/2` after checking that `M` is Hermitian to
/// [`HERMITIAN_TOL`] relative to its Frobenius norm.
pub fn hermitian_part(m: &CMatrix) -> Result<CMatrix> {
    require_square(m, "Hermitian input")?;
    let asym = frob(&(m - m.adjoint()));
    let scale = frob(m).max(1.0);
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(asym / scale));
    }
    Ok((m + m.adjoint()).scale(0.5))
}

fn first_significant(col: &[c64]) -> Option<usize> {
    let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    col.iter().position(|z| z.norm() > 1e-8 * peak.max(f64::MIN_POSITIVE))
}

/// Rotates each column so that its first significant entry is real positive.
pub fn normalize_column_phases(u: &mut CMatrix) {
    for mut col in u.column_iter_mut() {
        let entries: Vec<c64> = col.iter().copied().collect();
        if let Some(k) = first_significant(&entries) {
            let ph = entries[k] / entries[k].norm();
            for z in col.iter_mut() {
                *z /= ph;
            }
        }
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted per `order`.
///
/// Ties (eigenvalues within `1e-12` relative) are broken by descending
/// magnitude of the first significant eigenvector component, and every
/// eigenvector is phase-normalized, so outputs are reproducible.
pub fn herm_eig(m: &CMatrix, order: Order) -> Result<HermEig> {
    let h = hermitian_part(m)?;
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut u = eig.eigenvectors;
    normalize_column_phases(&mut u);
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let scale = vals.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let lead = |j: usize| -> f64 {
        let col: Vec<c64> = u.column(j).iter().copied().collect();
        first_significant(&col).map(|k| col[k].norm()).unwrap_or(0.0)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (vals[a], vals[b]);
        if (va - vb).abs() <= 1e-12 * scale {
            lead(b).total_cmp(&lead(a)).then(a.cmp(&b))
        } else {
            match order {
                Order::Ascending => va.total_cmp(&vb),
                Order::Descending => vb.total_cmp(&va),
            }
        }
    });
    let d = idx.iter().map(|&i| vals[i]).collect();
    let u = CMatrix::from_columns(&idx.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    Ok(HermEig { u, d, order })
}

/// Thin SVD with singular values in descending order.
pub fn svd(m: &CMatrix) -> Svd {
    let k = m.nrows().min(m.ncols());
    let dec = SVD::new(m.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v = dec.v_t.expect("right singular vectors requested").adjoint();
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    Svd {
        u: CMatrix::from_columns(&idx.iter().map(|&i| u.column(i)).collect::<Vec<_>>()),
        s: idx.iter().map(|&i| s[i]).collect(),
        v: CMatrix::from_columns(&idx.iter().map(|&i| v.column(i)).collect::<Vec<_>>()),
    }
}

/// Kronecker product: `(A⊗B)[i*p + k, j*q + l] = A[i,j] B[k,l]` with `B` of size `p×q`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (p, q) = b.shape();
    let mut out = CMatrix::zeros(a.nrows() * p, a.ncols() * q);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            out.view_mut((i * p, j * q), (p, q)).copy_from(&b.map(|z| z * aij));
        }
    }
    out
}

/// Stacks the columns of `m`.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.len(), m.iter().copied())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if rows * cols != v.len() {
        return Err(Error::Dimension(format!(
            "cannot reshape a length-{} vector into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMatrix::from_iterator(rows, cols, v.iter().copied()))
}

/// Permutation matrix `Π` with `vec(M^T) = Π vec(M)` for every `m×n` matrix `M`.
pub fn commutation_matrix(m: usize, n: usize) -> CMatrix {
    let mut pi = CMatrix::zeros(m * n, m * n);
    // M[i,j] sits at j*m + i in vec(M) and at i*n + j in vec(M^T).
    for i in 0..m {
        for j in 0..n {
            pi[(i * n + j, j * m + i)] = ONE;
        }
    }
    pi
}

/// `U diag(d) U^H`, symmetrized.
pub fn herm_from_eig(u: &CMatrix, d: &[f64]) -> CMatrix {
    let scaled = CMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * d[j]);
    let out = scaled * u.adjoint();
    (&out + out.adjoint()).scale(0.5)
}

/// `[M]_+`: negative eigenvalues replaced by zero. Eigenvalues below
/// `CLAMP_TOL * max|λ|` are clamped as well.
pub fn positive_part(m: &CMatrix) -> Result<CMatrix> {
    let e = herm_eig(m, Order::Descending)?;
    let scale = e.d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let d: Vec<f64> = e
        .d
        .iter()
        .map(|&x| if x < CLAMP_TOL * scale { 0.0 } else { x })
        .collect();
    Ok(herm_from_eig(&e.u, &d))
}

/// Number of eigenvalues above the clamping threshold.
pub fn psd_rank(m: &CMatrix) -> Result<usize> {
    let e = herm_eig(m, Order::Descending)?;
    let scale = e.d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(e.d.iter().filter(|&&x| x > CLAMP_TOL * scale && x > 0.0).count())
}

/// Hermitian square root of a PSD matrix (same eigenvectors, square-rooted eigenvalues).
pub fn herm_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let e = herm_eig(m, Order::Descending)?;
    let scale = e.d.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let min = e.min();
    if min < -CLAMP_TOL * scale {
        return Err(Error::NotPsd {
            what: "square-root argument",
            min_eig: min,
        });
    }
    let d: Vec<f64> = e.d.iter().map(|&x| x.max(0.0).sqrt()).collect();
    Ok(herm_from_eig(&e.u, &d))
}

/// Inverse Hermitian square root of a PD matrix.
pub fn herm_inv_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let e = herm_eig(m, Order::Descending)?;
    let scale = e.max().abs().max(f64::MIN_POSITIVE);
    if e.min() <= CLAMP_TOL * scale {
        return Err(Error::NotPsd {
            what: "inverse square-root argument (needs PD)",
            min_eig: e.min(),
        });
    }
    let d: Vec<f64> = e.d.iter().map(|&x| 1.0 / x.sqrt()).collect();
    Ok(herm_from_eig(&e.u, &d))
}

/// Moore-Penrose pseudoinverse; singular values below `1e-9 σ_max` are dropped.
pub fn pinv(m: &CMatrix) -> CMatrix {
    let dec = svd(m);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = dec
        .s
        .iter()
        .map(|&s| if s > CLAMP_TOL * smax && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    let v_scaled = CMatrix::from_fn(dec.v.nrows(), dec.v.ncols(), |i, j| dec.v[(i, j)] * inv[j]);
    v_scaled * dec.u.adjoint()
}

/// Inverse of a Hermitian positive definite matrix via Cholesky, with an
/// eigendecomposition fallback for numerically borderline inputs.
pub fn inv_hpd(m: &CMatrix) -> Result<CMatrix> {
    let h = hermitian_part(m)?;
    if let Some(ch) = Cholesky::new(h.clone()) {
        let inv = ch.inverse();
        return Ok((&inv + inv.adjoint()).scale(0.5));
    }
    let e = herm_eig(&h, Order::Descending)?;
    let scale = e.max().abs().max(f64::MIN_POSITIVE);
    if e.min() <= 1e-14 * scale {
        return Err(Error::RankDeficient(format!(
            "{}x{} matrix is not positive definite (min eigenvalue {:.3e})",
            h.nrows(),
            h.ncols(),
            e.min()
        )));
    }
    let d: Vec<f64> = e.d.iter().map(|&x| 1.0 / x).collect();
    Ok(herm_from_eig(&e.u, &d))
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let h = hermitian_part(a)?;
    match Cholesky::new(h.clone()) {
        Some(ch) => Ok(ch.solve(b)),
        None => Ok(inv_hpd(&h)? * b),
    }
}

/// Inverse of a general square matrix (LU).
pub fn inv_general(m: &CMatrix) -> Result<CMatrix> {
    require_square(m, "matrix to invert")?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient(format!("{}x{} matrix is singular", m.nrows(), m.ncols())))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_herm(m: &CMatrix) -> Result<f64> {
    Ok(herm_eig(m, Order::Ascending)?.d[0])
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig_herm(m: &CMatrix) -> Result<f64> {
    Ok(herm_eig(m, Order::Descending)?.d[0])
}

/// `min_eig(M) >= -tol`.
pub fn is_psd(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(min_eig_herm(m)? >= -tol)
}

/// Largest eigenvalue of `A·B` for Hermitian PD `A` and Hermitian PSD `B`,
/// computed as `λ_max(A^{1/2} B A^{1/2})`.
pub fn lambda_max_product(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let ah = herm_sqrt(a)?;
    max_eig_herm(&(&ah * b * &ah))
}

// ---------------------------------------------------------------------------
// Chi-square quantiles

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}

/// CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_cdf(x: f64, dof: u32) -> f64 {
    gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// `alpha` quantile of `χ²(dof)`: Newton iteration on the CDF with a
/// bisection fallback.
pub fn chi2_quantile(alpha: f64, dof: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "chi-square percentile must lie in (0,1), got {alpha}"
        )));
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("chi-square needs dof >= 1".into()));
    }
    let k = dof as f64;
    let half = k / 2.0;
    let log_norm = -half * 2f64.ln() - ln_gamma(half);
    let pdf = |x: f64| ((half - 1.0) * x.ln() - x / 2.0 + log_norm).exp();

    // Wilson-Hilferty starting point.
    let z = normal_quantile(alpha);
    let wh = 2.0 / (9.0 * k);
    let mut x = (k * (1.0 - wh + z * wh.sqrt()).powi(3)).max(1e-8);

    let (mut lo, mut hi) = (0.0, k.max(1.0));
    while chi2_cdf(hi, dof) < alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let f = chi2_cdf(x, dof) - alpha;
        if f.abs() < 1e-12 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let step = f / pdf(x);
        let next = x - step;
        x = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}
