//! Application-dependent weightings `I_T^T ⊗ I_R` of the channel error, and
//! the exact end-performance metrics they approximate.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matalg::{self, c64, CMatrix};

pub const DEFAULT_GRID_SIZE: usize = 512;

/// Which application an [`Admissibility`] was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Application {
    ChannelMse,
    LOptimality,
    EqualizationHigh,
    EqualizationLow,
    ZeroForcing,
    Custom,
}

/// Weighting `I_adm = I_T^T ⊗ I_R`; the application cost is approximately
/// `vec(H̃)^H I_adm vec(H̃) = tr(H̃^H I_R H̃ I_T)`.
#[derive(Debug, Clone)]
pub struct Admissibility {
    pub i_t: CMatrix,
    pub i_r: CMatrix,
    pub label: Application,
}

impl Admissibility {
    pub fn new(i_t: CMatrix, i_r: CMatrix, label: Application) -> Result<Self> {
        let i_t = matalg::hermitian_part(&i_t)?;
        let i_r = matalg::hermitian_part(&i_r)?;
        for (m, what) in [(&i_t, "transmit weighting"), (&i_r, "receive weighting")] {
            let min = matalg::min_eig_herm(m)?;
            let scale = matalg::max_eig_herm(m)?.abs().max(1.0);
            if min < -1e-9 * scale {
                return Err(Error::NotPsd { what, min_eig: min });
            }
        }
        Ok(Self { i_t, i_r, label })
    }

    pub fn n_t(&self) -> usize {
        self.i_t.nrows()
    }

    pub fn n_r(&self) -> usize {
        self.i_r.nrows()
    }

    /// `I_T^T ⊗ I_R`.
    pub fn full(&self) -> CMatrix {
        matalg::kron(&self.i_t.transpose(), &self.i_r)
    }

    /// `tr(H̃^H I_R H̃ I_T)`.
    pub fn quadratic_form(&self, h_tilde: &CMatrix) -> f64 {
        matalg::trace(&(h_tilde.adjoint() * &self.i_r * h_tilde * &self.i_t)).re
    }
}

type SpectrumFn = dyn Fn(f64) -> CMatrix + Send + Sync;

/// Data-phase noise power spectral density `ω ↦ Φ_n(ω)` plus the size of the
/// uniform midpoint grid used for frequency averages.
#[derive(Clone)]
pub struct NoiseSpectrum {
    eval: Arc<SpectrumFn>,
    dim: usize,
    grid_size: usize,
}

impl fmt::Debug for NoiseSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseSpectrum")
            .field("dim", &self.dim)
            .field("grid_size", &self.grid_size)
            .finish()
    }
}

impl NoiseSpectrum {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            dim,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }

    /// Frequency-independent spectrum.
    pub fn flat(phi: CMatrix) -> Result<Self> {
        let phi = matalg::hermitian_part(&phi)?;
        let dim = phi.nrows();
        Ok(Self::from_fn(dim, move |_| phi.clone()))
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size.max(1);
        self
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, omega: f64) -> CMatrix {
        (self.eval)(omega)
    }

    /// Midpoints of a uniform partition of `[-π, π)`.
    pub fn grid(&self) -> impl Iterator<Item = f64> {
        let n = self.grid_size;
        let step = 2.0 * PI / n as f64;
        (0..n).map(move |k| -PI + (k as f64 + 0.5) * step)
    }

    /// Grid approximation of `(1/2π) ∫ f(ω) dω`.
    pub fn average<F>(&self, f: F) -> Result<CMatrix>
    where
        F: Fn(f64, &CMatrix) -> Result<CMatrix>,
    {
        let mut acc: Option<CMatrix> = None;
        for w in self.grid() {
            let v = f(w, &self.eval(w))?;
            acc = Some(match acc {
                None => v,
                Some(a) => a + v,
            });
        }
        Ok(acc.expect("grid is non-empty").unscale(self.grid_size as f64))
    }
}

/// `Φ_n(ω) = σ² (1 − |r|²) / |1 − r e^{−jω}|² · S_R`, the spectrum of a
/// spatially colored noise with AR(1) temporal correlation `r^k`.
pub fn ar1_noise_spectrum(s_r: &CMatrix, r: c64, sigma2: f64) -> Result<NoiseSpectrum> {
    if r.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "temporal correlation must satisfy |r| < 1, got |r| = {}",
            r.norm()
        )));
    }
    if sigma2 <= 0.0 {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {sigma2}")));
    }
    let s_r = matalg::hermitian_part(s_r)?;
    let dim = s_r.nrows();
    let num = sigma2 * (1.0 - r.norm_sqr());
    Ok(NoiseSpectrum::from_fn(dim, move |w| {
        let den = (c64::new(1.0, 0.0) - r * c64::from_polar(1.0, -w)).norm_sqr();
        s_r.scale(num / den)
    }))
}

/// `F(ω) = H^H (H H^H + Φ_n(ω)/λ_x)^{-1}`.
pub fn wiener_filter(h: &CMatrix, lambda_x: f64, phi_n: &NoiseSpectrum, omega: f64) -> Result<CMatrix> {
    wiener_at(h, lambda_x, &phi_n.eval(omega))
}

fn wiener_at(h: &CMatrix, lambda_x: f64, phi: &CMatrix) -> Result<CMatrix> {
    if lambda_x <= 0.0 {
        return Err(Error::InvalidArgument(format!("symbol power must be positive, got {lambda_x}")));
    }
    if phi.nrows() != h.nrows() {
        return Err(Error::Dimension(format!(
            "noise spectrum is {}x{} but the channel has {} receive antennas",
            phi.nrows(),
            phi.ncols(),
            h.nrows()
        )));
    }
    let m = h * h.adjoint() + phi.unscale(lambda_x);
    // F = (M^{-1} H)^H since M is Hermitian
    Ok(matalg::solve_hpd(&m, h)?.adjoint())
}

/// Excess MSE of the Wiener equalizer built from `H + H̃` instead of `H`:
/// `(1/2π) ∫ tr(Δ Φ_y Δ^H) dω` with `Φ_y = λ_x H H^H + Φ_n`.
pub fn jce_exact(h: &CMatrix, h_tilde: &CMatrix, lambda_x: f64, phi_n: &NoiseSpectrum) -> Result<f64> {
    if h.shape() != h_tilde.shape() {
        return Err(Error::Dimension("channel and error differ in shape".into()));
    }
    let h_hat = h + h_tilde;
    let hh = h * h.adjoint();
    let mut acc = 0.0;
    for w in phi_n.grid() {
        let phi = phi_n.eval(w);
        let delta = wiener_at(&h_hat, lambda_x, &phi)? - wiener_at(h, lambda_x, &phi)?;
        let phi_y = hh.scale(lambda_x) + phi;
        acc += matalg::trace(&(&delta * phi_y * delta.adjoint())).re;
    }
    Ok((acc / phi_n.grid_size() as f64).max(0.0))
}

/// Operating regime for the equalization weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrRegime {
    High,
    Low,
}

fn check_full_rank(h: &CMatrix, what: &str) -> Result<()> {
    let s = matalg::svd(h).s;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-6 * smax {
        return Err(Error::RankDeficient(format!(
            "{what} ({}x{}) is rank deficient (σ_min/σ_max = {:.3e})",
            h.nrows(),
            h.ncols(),
            if smax > 0.0 { smin / smax } else { 0.0 }
        )));
    }
    Ok(())
}

pub fn iadm_channel_mse(n_t: usize, n_r: usize) -> Admissibility {
    Admissibility {
        i_t: matalg::identity(n_t),
        i_r: matalg::identity(n_r),
        label: Application::ChannelMse,
    }
}

/// Weighted error `vec(H̃)^H (W1 ⊗ W2) vec(H̃)`.
pub fn iadm_l_optimality(w1: &CMatrix, w2: &CMatrix) -> Result<Admissibility> {
    Admissibility::new(w1.transpose(), w2.clone(), Application::LOptimality)
}

/// Quadratic approximation of [`jce_exact`] around `H`.
pub fn iadm_equalization(h: &CMatrix, lambda_x: f64, phi_n: &NoiseSpectrum, regime: SnrRegime) -> Result<Admissibility> {
    let (n_r, n_t) = h.shape();
    if phi_n.dim() != n_r {
        return Err(Error::Dimension(format!(
            "noise spectrum has dimension {} but the channel has {n_r} receive antennas",
            phi_n.dim()
        )));
    }
    if lambda_x <= 0.0 {
        return Err(Error::InvalidArgument(format!("symbol power must be positive, got {lambda_x}")));
    }
    check_full_rank(h, "channel")?;
    match regime {
        SnrRegime::High => {
            let i_t = matalg::identity(n_t).scale(lambda_x);
            let hh = h * h.adjoint();
            let i_r = if n_r <= n_t {
                matalg::inv_hpd(&hh)?
            } else {
                phi_n.average(|_, phi| {
                    let w = matalg::herm_inv_sqrt(phi)?;
                    let inner = &w * &hh * &w;
                    Ok(&w * matalg::pinv(&(&inner + inner.adjoint()).scale(0.5)) * &w)
                })?
            };
            Admissibility::new(i_t, i_r, Application::EqualizationHigh)
        }
        SnrRegime::Low => {
            let mean_inv = phi_n.average(|_, phi| matalg::inv_hpd(phi))?;
            Admissibility::new(matalg::identity(n_t), mean_inv.scale(lambda_x * lambda_x), Application::EqualizationLow)
        }
    }
}

/// Quadratic approximation of [`jzf_exact`]: `I_T = λ_x H^† H^{†H}`, `I_R = I`.
pub fn iadm_zf(h: &CMatrix, lambda_x: f64) -> Result<Admissibility> {
    let (n_r, n_t) = h.shape();
    if n_t < n_r {
        return Err(Error::Assumption(format!(
            "zero-forcing precoding needs n_T >= n_R, got n_T = {n_t}, n_R = {n_r}"
        )));
    }
    check_full_rank(h, "channel")?;
    let hp = matalg::pinv(h);
    Admissibility::new((&hp * hp.adjoint()).scale(lambda_x), matalg::identity(n_r), Application::ZeroForcing)
}

/// Exact excess output power of zero-forcing precoding with `Ĥ = H + H̃`:
/// `λ_x ‖H Ĥ^† − I‖²_F`.
pub fn jzf_exact(h: &CMatrix, h_tilde: &CMatrix, lambda_x: f64) -> Result<f64> {
    if h.shape() != h_tilde.shape() {
        return Err(Error::Dimension("channel and error differ in shape".into()));
    }
    let h_hat = h + h_tilde;
    check_full_rank(&h_hat, "channel estimate")?;
    let n_r = h.nrows();
    let e = h * matalg::pinv(&h_hat) - matalg::identity(n_r);
    Ok(lambda_x * matalg::frob_sq(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::{random_hpd, standard_complex_normal};
    use crate::matalg::{frob, identity, re};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(m: CMatrix) -> CMatrix {
        let n = frob(&m);
        m.unscale(n)
    }

    #[test]
    fn channel_mse_weighting() {
        let a = iadm_channel_mse(4, 2);
        assert_eq!(a.i_t, identity(4));
        assert_eq!(a.i_r, identity(2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ht = standard_complex_normal(2, 4, &mut rng);
        assert!((a.quadratic_form(&ht) - matalg::frob_sq(&ht)).abs() < 1e-12);
        let v = matalg::vec(&ht);
        assert!(((v.adjoint() * a.full() * &v)[(0, 0)].re - matalg::frob_sq(&ht)).abs() < 1e-12);
    }

    #[test]
    fn l_optimality_weighting() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w1 = random_hpd(3, 0.0, &mut rng);
        let w2 = random_hpd(2, 0.0, &mut rng);
        let a = iadm_l_optimality(&w1, &w2).unwrap();
        let ht = standard_complex_normal(2, 3, &mut rng);
        let v = matalg::vec(&ht);
        let direct = (v.adjoint() * matalg::kron(&w1, &w2) * &v)[(0, 0)].re;
        assert!((a.quadratic_form(&ht) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        let same = iadm_l_optimality(&identity(3), &identity(2)).unwrap();
        assert!((same.quadratic_form(&ht) - matalg::frob_sq(&ht)).abs() < 1e-12);
        let deficient = iadm_l_optimality(&matalg::diag_real(&[1.0, 0.5, 0.0]), &identity(2)).unwrap();
        assert!(deficient.quadratic_form(&ht) <= matalg::frob_sq(&ht));
        assert!(iadm_l_optimality(&matalg::diag_real(&[1.0, -1.0]), &identity(2)).is_err());
    }

    #[test]
    fn wiener_examples() {
        let flat = NoiseSpectrum::flat(CMatrix::from_element(1, 1, re(0.5))).unwrap();
        let h = CMatrix::from_element(1, 1, re(1.0));
        let f = wiener_filter(&h, 2.0, &flat, 0.3).unwrap();
        assert!((f[(0, 0)].re - 1.0 / (1.0 + 0.5 / 2.0)).abs() < 1e-14);
        let loud = NoiseSpectrum::flat(CMatrix::from_element(1, 1, re(1e14))).unwrap();
        assert!(wiener_filter(&h, 1.0, &loud, 0.0).unwrap()[(0, 0)].norm() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = standard_complex_normal(2, 3, &mut rng);
        let phi = random_hpd(2, 0.1, &mut rng);
        let spec = NoiseSpectrum::flat(phi.clone()).unwrap();
        let lx = 3.0;
        let f = wiener_filter(&h, lx, &spec, 0.0).unwrap();
        let want = h.adjoint().scale(lx) * matalg::inv_hpd(&((&h * h.adjoint()).scale(lx) + phi)).unwrap();
        assert!(frob(&(f - &want)) < 1e-12 * frob(&want));
    }

    #[test]
    fn ar1_spectrum_examples() {
        let s_r = matalg::from_real_rows(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let flat = ar1_noise_spectrum(&s_r, re(0.0), 2.0).unwrap();
        assert!(frob(&(flat.eval(1.1) - s_r.scale(2.0))) < 1e-15);
        let sp = ar1_noise_spectrum(&s_r, re(0.9), 2.0).unwrap();
        let mean = sp.average(|_, phi| Ok(phi.clone())).unwrap();
        assert!(frob(&(mean - s_r.scale(2.0))) < 1e-6);
        let peak = sp.eval(0.0);
        assert!(frob(&(peak - s_r.scale(2.0 * 1.9 / 0.1))) < 1e-9);
        assert!(frob(&(sp.eval(0.7) - sp.eval(-0.7).transpose())) < 1e-12);
        // autocovariance at lag k decays like r^k
        for k in 1..4 {
            let lag = sp
                .average(|w, phi| Ok(phi.map(|z| z * c64::from_polar(1.0, w * k as f64))))
                .unwrap();
            assert!((lag[(0, 0)].re - 2.0 * 0.9f64.powi(k)).abs() < 1e-6);
        }
        assert!(ar1_noise_spectrum(&s_r, re(1.0), 1.0).is_err());
    }

    #[test]
    fn jce_scalar_closed_form() {
        let sigma2 = 0.2;
        let lx = 1.5;
        let spec = NoiseSpectrum::flat(CMatrix::from_element(1, 1, re(sigma2))).unwrap();
        let h = CMatrix::from_element(1, 1, c64::new(0.8, 0.3));
        let ht = CMatrix::from_element(1, 1, c64::new(0.1, -0.05));
        let f = |x: c64| x.conj() / (x.norm_sqr() + sigma2 / lx);
        let d = f(h[(0, 0)] + ht[(0, 0)]) - f(h[(0, 0)]);
        let want = d.norm_sqr() * (lx * h[(0, 0)].norm_sqr() + sigma2);
        assert!((jce_exact(&h, &ht, lx, &spec).unwrap() - want).abs() < 1e-8 * want);
        assert_eq!(jce_exact(&h, &CMatrix::zeros(1, 1), lx, &spec).unwrap(), 0.0);
    }

    #[test]
    fn jce_is_locally_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = standard_complex_normal(2, 3, &mut rng);
        let spec = ar1_noise_spectrum(&identity(2), re(0.5), 1.0).unwrap();
        let g = unit(standard_complex_normal(2, 3, &mut rng)).scale(1e-3 * frob(&h));
        let a = jce_exact(&h, &g, 10.0, &spec).unwrap();
        let b = jce_exact(&h, &g.scale(0.5), 10.0, &spec).unwrap();
        assert!((b / a - 0.25).abs() < 0.025);
    }

    #[test]
    fn equalization_weighting_examples() {
        let spec = NoiseSpectrum::flat(identity(2).scale(0.1)).unwrap();
        let h = identity(2).scale(2.0);
        let a = iadm_equalization(&h, 1.0, &spec, SnrRegime::High).unwrap();
        assert!(frob(&(&a.i_r - identity(2).scale(0.25))) < 1e-14);
        assert!(frob(&(&a.i_t - identity(2))) < 1e-14);

        let low = iadm_equalization(&h, 3.0, &spec, SnrRegime::Low).unwrap();
        assert!(frob(&(&low.i_r - identity(2).scale(9.0 / 0.1))) < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tall = standard_complex_normal(3, 2, &mut rng);
        let ar = ar1_noise_spectrum(&random_hpd(3, 0.2, &mut rng), re(0.7), 1.0).unwrap();
        let coarse = iadm_equalization(&tall, 5.0, &ar, SnrRegime::High).unwrap();
        let fine = iadm_equalization(&tall, 5.0, &ar.clone().with_grid_size(4096), SnrRegime::High).unwrap();
        assert!(frob(&(&coarse.i_r - &fine.i_r)) < 1e-6 * frob(&fine.i_r));
        assert!(matalg::min_eig_herm(&coarse.i_r).unwrap() >= -1e-9);

        let singular = matalg::from_real_rows(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            iadm_equalization(&singular, 1.0, &spec, SnrRegime::High),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn zf_weighting_examples() {
        let a = iadm_zf(&identity(3), 1.0).unwrap();
        assert!(frob(&(&a.i_t - identity(3))) < 1e-14);
        let b = iadm_zf(&identity(2).scale(2.0), 1.0).unwrap();
        assert!(frob(&(&b.i_t - identity(2).scale(0.25))) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = standard_complex_normal(2, 4, &mut rng);
        let lx = 2.5;
        let z = iadm_zf(&h, lx).unwrap();
        let formula = {
            let hh = matalg::inv_hpd(&(&h * h.adjoint())).unwrap();
            h.adjoint() * &hh * &hh * &h
        };
        assert!(frob(&(&z.i_t - formula.scale(lx))) < 1e-10 * frob(&z.i_t));
        let e = matalg::herm_eig(&z.i_t, matalg::Order::Descending).unwrap();
        let s = matalg::svd(&h).s;
        for i in 0..2 {
            assert!((e.d[i] - lx / (s[1 - i] * s[1 - i])).abs() < 1e-10 * e.d[0]);
        }
        assert!(e.d[2].abs() < 1e-10 * e.d[0] && e.d[3].abs() < 1e-10 * e.d[0]);
        assert!(iadm_zf(&standard_complex_normal(3, 2, &mut rng), 1.0).is_err());
    }

    #[test]
    fn jzf_examples_and_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = standard_complex_normal(3, 3, &mut rng);
        assert!(jzf_exact(&h, &CMatrix::zeros(3, 3), 2.0).unwrap() < 1e-20);
        let ht = standard_complex_normal(3, 3, &mut rng).scale(0.1);
        let inv = matalg::inv_general(&(&h + &ht)).unwrap();
        let want = 2.0 * matalg::frob_sq(&(&h * inv - identity(3)));
        assert!((jzf_exact(&h, &ht, 2.0).unwrap() - want).abs() < 1e-9 * want);

        let adm = iadm_zf(&h, 2.0).unwrap();
        let small = unit(standard_complex_normal(3, 3, &mut rng)).scale(1e-3 * frob(&h));
        let ratio = jzf_exact(&h, &small, 2.0).unwrap() / adm.quadratic_form(&small);
        assert!((ratio - 1.0).abs() < 0.05);
        assert!(jzf_exact(&h, &(-&h), 1.0).is_err());
    }

    #[test]
    fn weightings_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let h = standard_complex_normal(2, 4, &mut rng);
            let spec = ar1_noise_spectrum(&random_hpd(2, 0.1, &mut rng), re(0.6), 0.5).unwrap().with_grid_size(64);
            for a in [
                iadm_equalization(&h, 10.0, &spec, SnrRegime::High).unwrap(),
                iadm_equalization(&h, 10.0, &spec, SnrRegime::Low).unwrap(),
                iadm_zf(&h, 10.0).unwrap(),
            ] {
                assert!(matalg::min_eig_herm(&a.i_t).unwrap() >= -1e-9);
                assert!(matalg::min_eig_herm(&a.i_r).unwrap() >= -1e-9);
            }
        }
    }
}
