//! Kronecker-structured channel and noise statistics, sampling, training
//! observations and block-to-block channel evolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matalg::{self, c64, CMatrix};

/// Covariance `kron(left^T, right)` kept in factored form.
///
/// For the channel, `left = R_T` (transmit) and `right = R_R` (receive); for
/// the training noise, `left = S_Q` (temporal) and `right = S_R` (spatial).
#[derive(Debug, Clone)]
pub struct KroneckerCov {
    left: CMatrix,
    right: CMatrix,
    left_root: CMatrix,
    right_root: CMatrix,
}

/// Any `G` with `G G^H = m`: Cholesky when it succeeds, else the Hermitian root.
fn square_root_factor(m: &CMatrix) -> Result<CMatrix> {
    match nalgebra::Cholesky::new(m.clone()) {
        Some(ch) => Ok(ch.l()),
        None => matalg::herm_sqrt(m),
    }
}

impl KroneckerCov {
    pub fn new(left: CMatrix, right: CMatrix) -> Result<Self> {
        let left = matalg::hermitian_part(&left)?;
        let right = matalg::hermitian_part(&right)?;
        for (m, what) in [(&left, "left Kronecker factor"), (&right, "right Kronecker factor")] {
            let min = matalg::min_eig_herm(m)?;
            if min <= 0.0 {
                return Err(Error::NotPsd { what, min_eig: min });
            }
        }
        let left_root = square_root_factor(&left)?;
        let right_root = square_root_factor(&right)?;
        Ok(Self {
            left,
            right,
            left_root,
            right_root,
        })
    }

    pub fn left(&self) -> &CMatrix {
        &self.left
    }

    pub fn right(&self) -> &CMatrix {
        &self.right
    }

    /// Dimension of the left factor.
    pub fn left_dim(&self) -> usize {
        self.left.nrows()
    }

    /// Dimension of the right factor.
    pub fn right_dim(&self) -> usize {
        self.right.nrows()
    }

    /// `kron(left^T, right)`.
    pub fn full(&self) -> CMatrix {
        matalg::kron(&self.left.transpose(), &self.right)
    }

    /// Same statistics with both factors scaled so the full covariance is scaled by `c2`.
    pub fn scaled(&self, c2: f64) -> Result<Self> {
        Self::new(self.left.scale(c2), self.right.clone())
    }

    /// Colors an i.i.d. `right_dim × left_dim` matrix `Z`: returns
    /// `L_right Z L_left^H`, whose vectorization has covariance `full()`.
    pub fn color(&self, z: &CMatrix) -> CMatrix {
        &self.right_root * z * self.left_root.adjoint()
    }

    /// `tr(full()) = tr(left) tr(right)`.
    pub fn trace(&self) -> f64 {
        matalg::trace(&self.left).re * matalg::trace(&self.right).re
    }
}

/// Exponential correlation model: entry `(i,j)` is `r^(j-i)` for `j >= i`,
/// Hermitian completion below the diagonal.
pub fn exponential_corr(n: usize, r: c64) -> Result<CMatrix> {
    if r.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "correlation coefficient must satisfy |r| < 1, got |r| = {}",
            r.norm()
        )));
    }
    if n == 0 {
        return Err(Error::Dimension("correlation matrix needs n >= 1".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if j >= i {
            r.powu((j - i) as u32)
        } else {
            r.conj().powu((i - j) as u32)
        }
    }))
}

/// A sampled channel matrix (`n_R × n_T`).
#[derive(Debug, Clone)]
pub struct ChannelDraw {
    pub h: CMatrix,
    pub block_index: usize,
}

/// Matrix of i.i.d. `CN(0,1)` entries (real and imaginary parts `N(0, 1/2)`).
pub fn standard_complex_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c64::new(s * a, s * b)
    })
}

/// Draws `H` with `vec(H) ~ CN(0, R)`.
pub fn sample_channel<R: Rng + ?Sized>(cov: &KroneckerCov, rng: &mut R) -> ChannelDraw {
    let z = standard_complex_normal(cov.right_dim(), cov.left_dim(), rng);
    ChannelDraw {
        h: cov.color(&z),
        block_index: 0,
    }
}

/// `H_prev + mu E` with `E` an independent draw from the same statistics.
pub fn evolve_channel<R: Rng + ?Sized>(
    h_prev: &CMatrix,
    mu: f64,
    cov: &KroneckerCov,
    rng: &mut R,
) -> Result<CMatrix> {
    if mu < 0.0 {
        return Err(Error::InvalidArgument(format!("evolution step must be >= 0, got {mu}")));
    }
    if h_prev.shape() != (cov.right_dim(), cov.left_dim()) {
        return Err(Error::Dimension(format!(
            "channel is {}x{} but statistics are {}x{}",
            h_prev.nrows(),
            h_prev.ncols(),
            cov.right_dim(),
            cov.left_dim()
        )));
    }
    if mu == 0.0 {
        return Ok(h_prev.clone());
    }
    let e = sample_channel(cov, rng).h;
    Ok(h_prev + e.scale(mu))
}

/// `Y = H P + N` with `vec(N) ~ CN(0, S)`.
pub fn simulate_training<R: Rng + ?Sized>(
    h: &CMatrix,
    p: &CMatrix,
    noise: &KroneckerCov,
    rng: &mut R,
) -> Result<CMatrix> {
    let z = standard_complex_normal(noise.right_dim(), noise.left_dim(), rng);
    training_observation(h, p, noise, &z)
}

/// `Y = H P + L_S Z L_Q^H` for a caller-supplied white noise matrix `Z`
/// (`n_R × B`). Lets several training schemes share one noise realization.
pub fn training_observation(h: &CMatrix, p: &CMatrix, noise: &KroneckerCov, z: &CMatrix) -> Result<CMatrix> {
    if h.ncols() != p.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} transmit antennas but training has {} rows",
            h.ncols(),
            p.nrows()
        )));
    }
    if noise.left_dim() != p.ncols() || noise.right_dim() != h.nrows() {
        return Err(Error::Dimension(format!(
            "noise statistics are {}x{} (temporal x spatial) but training needs {}x{}",
            noise.left_dim(),
            noise.right_dim(),
            p.ncols(),
            h.nrows()
        )));
    }
    if z.shape() != (h.nrows(), p.ncols()) {
        return Err(Error::Dimension("white noise matrix has the wrong shape".into()));
    }
    Ok(h * p + noise.color(z))
}

/// Haar-distributed unitary matrix (QR of a complex Gaussian matrix with the
/// phases of `diag(R)` moved into `Q`).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let z = standard_complex_normal(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Random Hermitian positive definite matrix `G G^H / n + eps I`.
pub fn random_hpd<R: Rng + ?Sized>(n: usize, eps: f64, rng: &mut R) -> CMatrix {
    let g = standard_complex_normal(n, n, rng);
    let m = (&g * g.adjoint()).unscale(n as f64) + matalg::identity(n).scale(eps);
    (&m + m.adjoint()).scale(0.5)
}

/// Stream tags used to derive independent random streams per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Channel = 0,
    TrainingNoise = 1,
    BootstrapNoise = 2,
    Evolution = 3,
    Bits = 4,
    DataNoise = 5,
    Weights = 6,
    Perturbation = 7,
}

/// Counter-based stream: `(seed, point, trial, tag)` maps to an independent
/// ChaCha stream, so results do not depend on execution order.
pub fn stream_rng(seed: u64, point: usize, trial: usize, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = ((point as u64) << 40) ^ ((trial as u64) << 8) ^ tag as u64;
    rng.set_stream(stream);
    rng
}
