//! MVU and MMSE channel estimators and estimate-quality metrics.
//!
//! With `Ptilde = P^T ⊗ I` and `S = S_Q^T ⊗ S_R`, the Fisher information
//! factors as `Ptilde^H S^{-1} Ptilde = F^T ⊗ S_R^{-1}` where
//! `F = P S_Q^{-1} P^H`. The MVU estimate therefore never needs the full
//! `n_T n_R` square matrices; the MMSE estimate assembles them (they are small).

use crate::channel_model::KroneckerCov;
use crate::error::{Error, Result};
use crate::matalg::{self, CMatrix};

/// A channel estimate together with its information matrix (inverse error covariance).
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub h_hat: CMatrix,
    pub info: CMatrix,
}

#[derive(Debug, Clone)]
enum Gain {
    /// `Ĥ = Y · right`.
    Right(CMatrix),
    /// `vec(Ĥ) = full · vec(Y)`.
    Full(CMatrix),
}

/// Linear estimator for a fixed training matrix, reusable across observations.
#[derive(Debug, Clone)]
pub struct LinearEstimator {
    gain: Gain,
    info: CMatrix,
    n_t: usize,
    n_r: usize,
    b: usize,
}

fn check_training(p: &CMatrix, s: &KroneckerCov) -> Result<()> {
    if s.left_dim() != p.ncols() {
        return Err(Error::Dimension(format!(
            "training has length {} but the temporal noise factor is {}x{}",
            p.ncols(),
            s.left_dim(),
            s.left_dim()
        )));
    }
    Ok(())
}

/// `F = P S_Q^{-1} P^H` (`n_T × n_T`).
pub fn temporal_information(p: &CMatrix, s: &KroneckerCov) -> Result<CMatrix> {
    check_training(p, s)?;
    let f = p * matalg::solve_hpd(s.left(), &p.adjoint())?;
    Ok((&f + f.adjoint()).scale(0.5))
}

/// Full Fisher information `Ptilde^H S^{-1} Ptilde = F^T ⊗ S_R^{-1}`.
pub fn fisher_information(p: &CMatrix, s: &KroneckerCov) -> Result<CMatrix> {
    let f = temporal_information(p, s)?;
    Ok(matalg::kron(&f.transpose(), &matalg::inv_hpd(s.right())?))
}

impl LinearEstimator {
    /// Minimum variance unbiased estimator. Needs `P` of full row rank.
    pub fn mvu(p: &CMatrix, s: &KroneckerCov) -> Result<Self> {
        let (n_t, b) = p.shape();
        if b < n_t {
            return Err(Error::RankDeficient(format!(
                "unbiased estimation needs training length B >= n_T, got B = {b} < n_T = {n_t}"
            )));
        }
        let f = temporal_information(p, s)?;
        let f_inv = match matalg::inv_hpd(&f) {
            Ok(m) => m,
            Err(_) => {
                let rank = matalg::psd_rank(&f)?;
                return Err(Error::RankDeficient(format!(
                    "information matrix is singular: training excites {rank} of {n_t} transmit dimensions"
                )));
            }
        };
        let right = matalg::solve_hpd(s.left(), &p.adjoint())? * &f_inv;
        let info = matalg::kron(&f.transpose(), &matalg::inv_hpd(s.right())?);
        Ok(Self {
            gain: Gain::Right(right),
            info,
            n_t,
            n_r: s.right_dim(),
            b,
        })
    }

    /// Posterior-mean estimator under the prior `vec(H) ~ CN(0, R)`.
    pub fn mmse(p: &CMatrix, s: &KroneckerCov, r: &KroneckerCov) -> Result<Self> {
        let (n_t, b) = p.shape();
        check_training(p, s)?;
        if r.left_dim() != n_t || r.right_dim() != s.right_dim() {
            return Err(Error::Dimension(format!(
                "channel statistics are {}x{} (transmit x receive) but training implies {}x{}",
                r.left_dim(),
                r.right_dim(),
                n_t,
                s.right_dim()
            )));
        }
        let n_r = s.right_dim();
        let r_inv = matalg::kron(&matalg::inv_hpd(r.left())?.transpose(), &matalg::inv_hpd(r.right())?);
        let f = temporal_information(p, s)?;
        let sr_inv = matalg::inv_hpd(s.right())?;
        let info = r_inv + matalg::kron(&f.transpose(), &sr_inv);
        let info = (&info + info.adjoint()).scale(0.5);
        // Ptilde^H S^{-1} = (S_Q^{-1} P^H)^T ⊗ S_R^{-1}
        let sq_p = matalg::solve_hpd(s.left(), &p.adjoint())?;
        let matched = matalg::kron(&sq_p.transpose(), &sr_inv);
        let full = matalg::solve_hpd(&info, &matched)?;
        Ok(Self {
            gain: Gain::Full(full),
            info,
            n_t,
            n_r,
            b,
        })
    }

    pub fn info(&self) -> &CMatrix {
        &self.info
    }

    /// Error covariance `info^{-1}`.
    pub fn error_covariance(&self) -> Result<CMatrix> {
        matalg::inv_hpd(&self.info)
    }

    pub fn apply(&self, y: &CMatrix) -> Result<CMatrix> {
        if y.shape() != (self.n_r, self.b) {
            return Err(Error::Dimension(format!(
                "observation is {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                self.n_r,
                self.b
            )));
        }
        match &self.gain {
            Gain::Right(m) => Ok(y * m),
            Gain::Full(g) => matalg::unvec(&(g * matalg::vec(y)), self.n_r, self.n_t),
        }
    }
}

pub fn mvu_estimate(y: &CMatrix, p: &CMatrix, s: &KroneckerCov) -> Result<EstimateResult> {
    let est = LinearEstimator::mvu(p, s)?;
    Ok(EstimateResult {
        h_hat: est.apply(y)?,
        info: est.info,
    })
}

pub fn mmse_estimate(y: &CMatrix, p: &CMatrix, s: &KroneckerCov, r: &KroneckerCov) -> Result<EstimateResult> {
    let est = LinearEstimator::mmse(p, s, r)?;
    Ok(EstimateResult {
        h_hat: est.apply(y)?,
        info: est.info,
    })
}

/// `‖H − Ĥ‖²_F / ‖H‖²_F`.
pub fn nmse(h: &CMatrix, h_hat: &CMatrix) -> Result<f64> {
    if h.shape() != h_hat.shape() {
        return Err(Error::Dimension("channel and estimate differ in shape".into()));
    }
    let den = matalg::frob_sq(h);
    if den == 0.0 {
        return Err(Error::InvalidArgument("normalized error undefined for a zero channel".into()));
    }
    Ok(matalg::frob_sq(&(h - h_hat)) / den)
}

/// Level of the confidence ellipsoid: `chi2_quantile(alpha, 2 n_T n_R) / 2`.
pub fn uncertainty_radius(alpha: f64, n_t: usize, n_r: usize) -> Result<f64> {
    Ok(0.5 * matalg::chi2_quantile(alpha, (2 * n_t * n_r) as u32)?)
}

/// `vec(X)^H M vec(X)` (real part).
pub fn quadratic_form(m: &CMatrix, x: &CMatrix) -> f64 {
    let v = matalg::vec(x);
    (v.adjoint() * m * &v)[(0, 0)].re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{exponential_corr, random_hpd, sample_channel, simulate_training, standard_complex_normal};
    use crate::matalg::{c64, frob, identity, re};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, re(x))
    }

    #[test]
    fn scalar_closed_forms() {
        let s = KroneckerCov::new(scalar(0.5), scalar(1.0)).unwrap();
        let y = CMatrix::from_element(1, 1, c64::new(3.0, -1.0));
        let p = scalar(2.0);
        let e = mvu_estimate(&y, &p, &s).unwrap();
        assert!((e.h_hat[(0, 0)] - y[(0, 0)] / 2.0).norm() < 1e-14);
        assert!((e.info[(0, 0)].re - 8.0).abs() < 1e-12);

        let r = KroneckerCov::new(scalar(3.0), scalar(1.0)).unwrap();
        let m = mmse_estimate(&y, &p, &s, &r).unwrap();
        let want = y[(0, 0)] * (2.0 / 0.5) / (1.0 / 3.0 + 4.0 / 0.5);
        assert!((m.h_hat[(0, 0)] - want).norm() < 1e-13);
    }

    #[test]
    fn zero_training_gives_prior_mean() {
        let s = KroneckerCov::new(identity(3), identity(2)).unwrap();
        let r = KroneckerCov::new(identity(2), identity(2)).unwrap();
        let p = CMatrix::zeros(2, 3);
        let y = CMatrix::from_element(2, 3, re(1.0));
        let m = mmse_estimate(&y, &p, &s, &r).unwrap();
        assert!(frob(&m.h_hat) == 0.0);
        let err = mvu_estimate(&y, &p, &s).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
        assert!(err.to_string().contains("0 of 2"));
        assert!(mvu_estimate(&CMatrix::zeros(2, 1), &CMatrix::zeros(2, 1), &KroneckerCov::new(identity(1), identity(2)).unwrap()).is_err());
    }

    #[test]
    fn noiseless_and_diffuse_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chan = KroneckerCov::new(exponential_corr(4, re(0.9)).unwrap(), exponential_corr(2, re(0.9)).unwrap()).unwrap();
        let h = sample_channel(&chan, &mut rng).h;
        let p = standard_complex_normal(4, 6, &mut rng);
        let noise = KroneckerCov::new(exponential_corr(6, re(0.5)).unwrap(), exponential_corr(2, re(0.3)).unwrap()).unwrap();
        let quiet = KroneckerCov::new(noise.left().scale(1e-14), noise.right().clone()).unwrap();
        let y = simulate_training(&h, &p, &quiet, &mut rng).unwrap();
        let e = mvu_estimate(&y, &p, &quiet).unwrap();
        assert!(frob(&(&e.h_hat - &h)) < 1e-6);

        let y = simulate_training(&h, &p, &noise, &mut rng).unwrap();
        let mvu = mvu_estimate(&y, &p, &noise).unwrap();
        let wide = chan.scaled(1e6).unwrap();
        let mmse = mmse_estimate(&y, &p, &noise, &wide).unwrap();
        assert!(frob(&(&mmse.h_hat - &mvu.h_hat)) / frob(&mvu.h_hat) < 1e-4);
        // factor form agrees with the dense expression
        let dense = fisher_information(&p, &noise).unwrap();
        assert!(frob(&(&dense - &mvu.info)) < 1e-9 * frob(&dense));
        let pt = matalg::kron(&p.transpose(), &identity(2));
        let direct = pt.adjoint() * matalg::inv_hpd(&noise.full()).unwrap() * &pt;
        assert!(frob(&(&direct - &dense)) < 1e-9 * frob(&dense));
    }

    #[test]
    fn mvu_error_covariance_matches_inverse_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let noise = KroneckerCov::new(random_hpd(2, 0.2, &mut rng), random_hpd(1, 0.2, &mut rng)).unwrap();
        let p = standard_complex_normal(2, 2, &mut rng);
        let h = standard_complex_normal(1, 2, &mut rng);
        let est = LinearEstimator::mvu(&p, &noise).unwrap();
        let cov = est.error_covariance().unwrap();
        let n = 100_000;
        let mut acc = CMatrix::zeros(2, 2);
        let mut mean = CMatrix::zeros(1, 2);
        for _ in 0..n {
            let y = simulate_training(&h, &p, &noise, &mut rng).unwrap();
            let e = est.apply(&y).unwrap() - &h;
            mean += &e;
            let v = matalg::vec(&e);
            acc += &v * v.adjoint();
        }
        let emp = acc.unscale(n as f64);
        for i in 0..2 {
            for j in 0..2 {
                let scale = (cov[(i, i)].re * cov[(j, j)].re).sqrt();
                assert!((emp[(i, j)] - cov[(i, j)]).norm() < 0.05 * scale.max(cov[(i, j)].norm()));
            }
        }
        // unbiased
        assert!(frob(&mean.unscale(n as f64)) < 4.0 * (matalg::trace(&cov).re / n as f64).sqrt());
    }

    #[test]
    fn nmse_examples() {
        let h = CMatrix::from_element(2, 2, c64::new(1.0, 2.0));
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert_eq!(nmse(&h, &CMatrix::zeros(2, 2)).unwrap(), 1.0);
        assert!((nmse(&h, &h.scale(2.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&CMatrix::zeros(2, 2), &h).is_err());
    }

    #[test]
    fn radius_examples() {
        assert!((uncertainty_radius(0.95, 1, 1).unwrap() - (-(0.05f64).ln())).abs() < 1e-9);
        assert!(uncertainty_radius(0.99, 1, 1).unwrap() > uncertainty_radius(0.95, 1, 1).unwrap());
        let r = uncertainty_radius(0.99, 4, 2).unwrap();
        assert!((r - 0.5 * matalg::chi2_quantile(0.99, 16).unwrap()).abs() < 1e-15);
        assert!(uncertainty_radius(1.0, 1, 1).is_err());
    }

    fn coverage(mmse: bool, alpha: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_t, n_r, b) = (2, 2, 3);
        let chan = KroneckerCov::new(exponential_corr(n_t, re(0.9)).unwrap(), exponential_corr(n_r, re(0.9)).unwrap()).unwrap();
        let noise = KroneckerCov::new(exponential_corr(b, re(0.5)).unwrap(), exponential_corr(n_r, re(0.5)).unwrap()).unwrap();
        let p = standard_complex_normal(n_t, b, &mut rng);
        let est = if mmse {
            LinearEstimator::mmse(&p, &noise, &chan).unwrap()
        } else {
            LinearEstimator::mvu(&p, &noise).unwrap()
        };
        let radius = uncertainty_radius(alpha, n_t, n_r).unwrap();
        let fixed = sample_channel(&chan, &mut rng).h;
        let n = 10_000;
        let mut inside = 0;
        for _ in 0..n {
            let h = if mmse { sample_channel(&chan, &mut rng).h } else { fixed.clone() };
            let y = simulate_training(&h, &p, &noise, &mut rng).unwrap();
            let err = &h - est.apply(&y).unwrap();
            if quadratic_form(est.info(), &err) <= radius {
                inside += 1;
            }
        }
        inside as f64 / n as f64
    }

    #[test]
    fn confidence_set_coverage() {
        for (k, alpha) in [0.9, 0.99].into_iter().enumerate() {
            for mmse in [false, true] {
                let c = coverage(mmse, alpha, 20 + k as u64);
                assert!((c - alpha).abs() < 0.02, "mmse={mmse} alpha={alpha} coverage={c}");
            }
        }
    }

    #[test]
    fn mmse_beats_mvu_and_info_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let chan = KroneckerCov::new(exponential_corr(2, re(0.9)).unwrap(), exponential_corr(2, re(0.9)).unwrap()).unwrap();
        let noise = KroneckerCov::new(identity(3), identity(2)).unwrap();
        let p = standard_complex_normal(2, 3, &mut rng).unscale(2.0);
        let mvu = LinearEstimator::mvu(&p, &noise).unwrap();
        let mmse = LinearEstimator::mmse(&p, &noise, &chan).unwrap();
        let r_inv = matalg::inv_hpd(&chan.full()).unwrap();
        assert!(frob(&(mmse.info() - mvu.info() - r_inv)) < 1e-9 * frob(mmse.info()));
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..10_000 {
            let h = sample_channel(&chan, &mut rng).h;
            let y = simulate_training(&h, &p, &noise, &mut rng).unwrap();
            a += nmse(&h, &mvu.apply(&y).unwrap()).unwrap();
            b += nmse(&h, &mmse.apply(&y).unwrap()).unwrap();
        }
        assert!(b < a);
    }
}
