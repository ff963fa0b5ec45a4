use rand::Rng;

use crate::channel_model::standard_complex_normal;
use crate::error::{Error, Result};
use crate::matalg::{self, c64, CMatrix};

/// Gray-mapped unit-energy QPSK: bit pair `(b0, b1)` maps to
/// `((1 − 2 b0) + j (1 − 2 b1)) / sqrt(2)`.
pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<c64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "QPSK needs an even number of bits, got {}",
            bits.len()
        )));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let level = |b: bool| if b { -a } else { a };
    Ok(bits.chunks(2).map(|p| c64::new(level(p[0]), level(p[1]))).collect())
}

/// Nearest constellation point, as a bit pair.
pub fn qpsk_detect(s: c64) -> (bool, bool) {
    (s.re < 0.0, s.im < 0.0)
}

/// Sends `bits` through `y = sqrt(snr) H Ĥ^† s + n`, `n ~ CN(0, noise_cov)`,
/// detects `y / sqrt(snr)` entrywise and returns the number of bit errors.
///
/// Symbols are grouped into vectors of `n_R` streams; a short final vector
/// is padded with uncounted symbols.
pub fn qpsk_roundtrip<R: Rng + ?Sized>(
    bits: &[bool],
    h: &CMatrix,
    h_hat: &CMatrix,
    snr: f64,
    noise_cov: &CMatrix,
    rng: &mut R,
) -> Result<usize> {
    if h.shape() != h_hat.shape() {
        return Err(Error::Dimension("channel and estimate differ in shape".into()));
    }
    let n_r = h.nrows();
    if noise_cov.shape() != (n_r, n_r) {
        return Err(Error::Dimension(format!(
            "noise covariance is {}x{} but the channel has {n_r} receive antennas",
            noise_cov.nrows(),
            noise_cov.ncols()
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be positive, got {snr}")));
    }
    let symbols = qpsk_modulate(bits)?;
    let effective = h * matalg::pinv(h_hat);
    let root = matalg::herm_sqrt(noise_cov)?;
    let gain = snr.sqrt();
    let mut errors = 0;
    for (v, chunk) in symbols.chunks(n_r).enumerate() {
        let mut s = CMatrix::from_element(n_r, 1, c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        for (i, &x) in chunk.iter().enumerate() {
            s[(i, 0)] = x;
        }
        let n = &root * standard_complex_normal(n_r, 1, rng);
        let y = (&effective * s).scale(gain) + n;
        for i in 0..chunk.len() {
            let (b0, b1) = qpsk_detect(y[(i, 0)] / gain);
            let k = 2 * (v * n_r + i);
            errors += (b0 != bits[k]) as usize + (b1 != bits[k + 1]) as usize;
        }
    }
    Ok(errors)
}
