use super::{solve_theorem1, TrainingMatrix};
use crate::admissibility::Admissibility;
use crate::channel_model::KroneckerCov;
use crate::error::{Error, Result};
use crate::estimators::fisher_information;
use crate::matalg::{self, CMatrix};

/// Accuracy `gamma`, confidence `alpha` and the derived constant
/// `c = gamma · chi2_quantile(alpha, 2 n_T n_R) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteedSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub c: f64,
}

impl GuaranteedSpec {
    pub fn new(gamma: f64, alpha: f64, n_t: usize, n_r: usize) -> Result<Self> {
        Ok(Self {
            gamma,
            alpha,
            c: guaranteed_constant(gamma, alpha, n_t, n_r)?,
        })
    }
}

pub fn guaranteed_constant(gamma: f64, alpha: f64, n_t: usize, n_r: usize) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("accuracy must be positive, got {gamma}")));
    }
    Ok(gamma * matalg::chi2_quantile(alpha, (2 * n_t * n_r) as u32)? / 2.0)
}

/// Which prior/noise relation the stochastic design exploits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsgppCase {
    /// `R_R = S_R`.
    RReqSR,
    /// `R_R^{-1} = I_R`.
    RRinvEqIR,
    /// `R_T^{-1} = I_T`.
    RTinvEqIT,
}

fn check_shapes(s: &KroneckerCov, adm: &Admissibility) -> Result<()> {
    if s.right_dim() != adm.n_r() {
        return Err(Error::Dimension(format!(
            "spatial noise factor is {0}x{0} but the receive weighting is {1}x{1}",
            s.right_dim(),
            adm.n_r()
        )));
    }
    Ok(())
}

/// Target `B = c λ_max(S_R I_R) I_T` of the deterministic design.
pub fn adgpp_target(s_r: &CMatrix, adm: &Admissibility, c: f64) -> Result<CMatrix> {
    let lam = matalg::lambda_max_product(s_r, &adm.i_r)?;
    Ok(adm.i_t.scale(c * lam))
}

/// Least-energy training with `Ptilde^H S^{-1} Ptilde ⪰ c I_T^T ⊗ I_R`.
pub fn solve_adgpp(s: &KroneckerCov, adm: &Admissibility, c: f64) -> Result<TrainingMatrix> {
    check_shapes(s, adm)?;
    let target = adgpp_target(s.right(), adm, c)?;
    solve_theorem1(s.left(), &target)
}

fn close(a: &CMatrix, b: &CMatrix) -> bool {
    matalg::frob(&(a - b)) <= 1e-9 * matalg::frob(a).max(matalg::frob(b)).max(1.0)
}

/// Target `B` of the stochastic design for the selected case.
pub fn asgpp_target(
    s: &KroneckerCov,
    r: &KroneckerCov,
    adm: &Admissibility,
    c: f64,
    case: AsgppCase,
) -> Result<CMatrix> {
    check_shapes(s, adm)?;
    if r.left_dim() != adm.n_t() || r.right_dim() != adm.n_r() {
        return Err(Error::Dimension("channel statistics do not match the weighting".into()));
    }
    let (r_t, r_r) = (r.left(), r.right());
    match case {
        AsgppCase::RReqSR => {
            if !close(r_r, s.right()) {
                return Err(Error::Assumption(
                    "receive channel correlation must equal the spatial noise correlation".into(),
                ));
            }
            let lam = matalg::lambda_max_product(s.right(), &adm.i_r)?;
            matalg::positive_part(&(adm.i_t.scale(c * lam) - matalg::inv_hpd(r_t)?))
        }
        AsgppCase::RRinvEqIR => {
            let r_r_inv = matalg::inv_hpd(r_r)?;
            if !close(&r_r_inv, &adm.i_r) {
                return Err(Error::Assumption(
                    "inverse receive channel correlation must equal the receive weighting".into(),
                ));
            }
            let lam = matalg::lambda_max_product(s.right(), &adm.i_r)?;
            let inner = matalg::positive_part(&(adm.i_t.scale(c) - matalg::inv_hpd(r_t)?))?;
            Ok(inner.scale(lam))
        }
        AsgppCase::RTinvEqIT => {
            if !close(&matalg::inv_hpd(r_t)?, &adm.i_t) {
                return Err(Error::Assumption(
                    "inverse transmit channel correlation must equal the transmit weighting".into(),
                ));
            }
            let inner = matalg::positive_part(&(adm.i_r.scale(c) - matalg::inv_hpd(r_r)?))?;
            let lam = matalg::lambda_max_product(s.right(), &inner)?;
            Ok(adm.i_t.scale(lam))
        }
    }
}

/// Least-energy training with `R^{-1} + Ptilde^H S^{-1} Ptilde ⪰ c I_T^T ⊗ I_R`.
/// A zero target yields `P = 0` flagged as prior-sufficient.
pub fn solve_asgpp(
    s: &KroneckerCov,
    r: &KroneckerCov,
    adm: &Admissibility,
    c: f64,
    case: AsgppCase,
) -> Result<TrainingMatrix> {
    let target = asgpp_target(s, r, adm, c, case)?;
    solve_theorem1(s.left(), &target)
}

/// `min_eig(sum of terms) / Σ ‖term‖_F`. Normalizing by the terms keeps the
/// margin meaningful when the design makes the sum vanish.
fn relative_margin(terms: &[CMatrix]) -> Result<f64> {
    let scale: f64 = terms.iter().map(matalg::frob).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut sum = terms[0].clone();
    for t in &terms[1..] {
        sum += t;
    }
    Ok(matalg::min_eig_herm(&sum)? / scale)
}

/// `min_eig(Ptilde^H S^{-1} Ptilde − c I_adm)` in full Kronecker form, relative
/// to the norms of the two terms.
pub fn adgpp_lmi_margin(p: &CMatrix, s: &KroneckerCov, adm: &Admissibility, c: f64) -> Result<f64> {
    relative_margin(&[fisher_information(p, s)?, -adm.full().scale(c)])
}

/// `min_eig(R^{-1} + Ptilde^H S^{-1} Ptilde − c I_adm)` in full Kronecker form,
/// relative to the norms of the three terms.
pub fn asgpp_lmi_margin(p: &CMatrix, s: &KroneckerCov, r: &KroneckerCov, adm: &Admissibility, c: f64) -> Result<f64> {
    relative_margin(&[matalg::inv_hpd(&r.full())?, fisher_information(p, s)?, -adm.full().scale(c)])
}
