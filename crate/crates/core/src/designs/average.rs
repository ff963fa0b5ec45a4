use super::ordering::optimal_ordering;
use super::TrainingMatrix;
use crate::admissibility::Admissibility;
use crate::channel_model::KroneckerCov;
use crate::error::{Error, Result};
use crate::estimators::{fisher_information, temporal_information};
use crate::matalg::{self, CMatrix, Order};

fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::InvalidArgument(format!("budget must be positive and finite, got {budget}")));
    }
    Ok(())
}

fn check_length(n_t: usize, b: usize) -> Result<()> {
    if b < n_t {
        return Err(Error::InvalidArgument(format!(
            "average designs need B >= n_T, got B = {b} < n_T = {n_t}"
        )));
    }
    Ok(())
}

/// `Σ_i sqrt(κ_i) u_i v_i^H` over the listed column pairs.
fn assemble(u: &CMatrix, cols_u: &[usize], v: &CMatrix, cols_v: &[usize], powers: &[f64]) -> CMatrix {
    let mut p = CMatrix::zeros(u.nrows(), v.nrows());
    for ((&i, &j), &k) in cols_u.iter().zip(cols_v).zip(powers) {
        if k > 0.0 {
            p += (u.column(i) * v.column(j).adjoint()).scale(k.sqrt());
        }
    }
    p
}

/// Budget-constrained minimizer of the expected weighted MVU error
/// `tr(I_T F^{-1}) tr(I_R S_R)`, `F = P S_Q^{-1} P^H`.
///
/// `I_T` eigenvalues (descending) pair with the `n_T` smallest `S_Q`
/// eigenvalues (ascending); power on direction `i` is
/// `budget sqrt(α_i) / Σ_j sqrt(α_j)` with `α_i = t_i q_i`.
pub fn solve_avg_mvu(i_t: &CMatrix, s_q: &CMatrix, budget: f64) -> Result<TrainingMatrix> {
    check_budget(budget)?;
    let (n_t, b) = (i_t.nrows(), s_q.nrows());
    check_length(n_t, b)?;
    let et = matalg::herm_eig(i_t, Order::Descending)?;
    let eq = matalg::herm_eig(s_q, Order::Ascending)?;
    let scale = et.max().abs().max(f64::MIN_POSITIVE);
    if et.min() <= matalg::CLAMP_TOL * scale {
        return Err(Error::RankDeficient(format!(
            "transmit weighting has min eigenvalue {:.3e}; the unbiased design needs it positive definite",
            et.min()
        )));
    }
    if eq.min() <= 0.0 {
        return Err(Error::NotPsd {
            what: "temporal noise correlation",
            min_eig: eq.min(),
        });
    }
    let roots: Vec<f64> = (0..n_t).map(|i| (et.d[i] * eq.d[i]).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    let powers: Vec<f64> = roots.iter().map(|r| budget * r / total).collect();
    let idx: Vec<usize> = (0..n_t).collect();
    let mut tm = TrainingMatrix::new(assemble(&et.u, &idx, &eq.u, &idx, &powers));
    tm.energy = budget;
    Ok(tm)
}

/// `tr(I_R S_R) (Σ_i sqrt(α_i))² / budget`, the optimum of [`solve_avg_mvu`].
pub fn avg_mvu_closed_form_objective(adm: &Admissibility, s: &KroneckerCov, budget: f64) -> Result<f64> {
    check_budget(budget)?;
    let et = matalg::herm_eig(&adm.i_t, Order::Descending)?;
    let eq = matalg::herm_eig(s.left(), Order::Ascending)?;
    let n_t = adm.n_t();
    check_length(n_t, eq.d.len())?;
    let total: f64 = (0..n_t).map(|i| (et.d[i] * eq.d[i]).max(0.0).sqrt()).sum();
    let spatial = matalg::trace(&(&adm.i_r * s.right())).re;
    Ok(spatial * total * total / budget)
}

/// Expected weighted MVU error `tr(I_adm I_F^{-1}) = tr(I_T F^{-1}) tr(I_R S_R)`.
pub fn mvu_objective(p: &CMatrix, s: &KroneckerCov, adm: &Admissibility) -> Result<f64> {
    let f = temporal_information(p, s)?;
    let t = matalg::trace(&(&adm.i_t * matalg::inv_hpd(&f)?)).re;
    Ok(t * matalg::trace(&(&adm.i_r * s.right())).re)
}

/// Expected weighted MMSE error `tr(I_adm (R^{-1} + I_F)^{-1})`.
pub fn mmse_objective(p: &CMatrix, s: &KroneckerCov, r: &KroneckerCov, adm: &Admissibility) -> Result<f64> {
    let info = matalg::inv_hpd(&r.full())? + fisher_information(p, s)?;
    Ok(matalg::trace(&(adm.full() * matalg::inv_hpd(&info)?)).re)
}

fn activation_margin(gammas: &[f64], m: usize, k: usize) -> f64 {
    let s: f64 = gammas[..m].iter().map(|g| g.powf(-0.5)).sum();
    let t: f64 = gammas[..m].iter().map(|g| 1.0 / g).sum();
    gammas[k].powf(-0.5) * s - t
}

fn check_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("gain list is empty".into()));
    }
    if gammas.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidArgument("gains must be positive".into()));
    }
    Ok(())
}

/// Number of active directions: the largest `m` such that for every `k <= m`
/// `γ_k^{-1/2} Σ_{i<=m} γ_i^{-1/2} − Σ_{i<=m} γ_i^{-1} < budget`; 0 if none.
pub fn mstar(gammas: &[f64], budget: f64) -> Result<usize> {
    check_gammas(gammas)?;
    Ok((1..=gammas.len())
        .rev()
        .find(|&m| (0..m).all(|k| activation_margin(gammas, m, k) < budget))
        .unwrap_or(0))
}

/// Like [`mstar`] but only checks `k = m`; exact when the gains are sorted
/// in decreasing order.
pub fn mstar_single_condition(gammas: &[f64], budget: f64) -> Result<usize> {
    check_gammas(gammas)?;
    Ok((1..=gammas.len())
        .rev()
        .find(|&m| activation_margin(gammas, m, m - 1) < budget)
        .unwrap_or(0))
}

/// Powers minimizing `Σ_i 1/(1 + γ_i κ_i)` with the first `m` directions
/// active: `κ_j = ν γ_j^{-1/2} − γ_j^{-1}`, `ν` fixed by `Σ κ = budget`.
/// Directions past `m` get zero. Entries can come out negative when `m`
/// exceeds the admissible active set.
pub fn water_filling_powers(gammas: &[f64], m: usize, budget: f64) -> Vec<f64> {
    let mut out = vec![0.0; gammas.len()];
    if m == 0 {
        return out;
    }
    let s: f64 = gammas[..m].iter().map(|g| g.powf(-0.5)).sum();
    let t: f64 = gammas[..m].iter().map(|g| 1.0 / g).sum();
    let nu = (budget + t) / s;
    for j in 0..m {
        out[j] = nu * gammas[j].powf(-0.5) - 1.0 / gammas[j];
    }
    out
}

/// Powers `κ >= 0`, `Σ κ = budget`, minimizing `Σ_i λ_i / (1 + λ_i κ_i / q_i)`.
///
/// Stationarity gives `κ_i = μ sqrt(q_i) − q_i/λ_i` on the active set, which
/// consists of the directions with the smallest thresholds `sqrt(q_i)/λ_i`.
pub fn weighted_water_filling(lambda: &[f64], q: &[f64], budget: f64) -> Result<Vec<f64>> {
    if lambda.len() != q.len() || lambda.is_empty() {
        return Err(Error::Dimension("water-filling needs equally long, non-empty inputs".into()));
    }
    if lambda.iter().chain(q).any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidArgument("water-filling eigenvalues must be positive".into()));
    }
    check_budget(budget)?;
    let n = lambda.len();
    let thr: Vec<f64> = (0..n).map(|i| q[i].sqrt() / lambda[i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thr[a].total_cmp(&thr[b]).then(a.cmp(&b)));
    let level = |m: usize| -> f64 {
        let num: f64 = budget + order[..m].iter().map(|&i| q[i] / lambda[i]).sum::<f64>();
        let den: f64 = order[..m].iter().map(|&i| q[i].sqrt()).sum();
        num / den
    };
    let m = (1..=n).rev().find(|&m| level(m) > thr[order[m - 1]]).unwrap_or(1);
    let mu = level(m);
    let mut out = vec![0.0; n];
    for &i in &order[..m] {
        out[i] = (mu * q[i].sqrt() - q[i] / lambda[i]).max(0.0);
    }
    Ok(out)
}

/// Structural assumption on the transmit weighting for [`solve_avg_mmse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgMmseMode {
    /// `I_T` proportional to the identity.
    ItIdentity,
    /// `I_T` proportional to `R_T^{-1}`.
    ItEqRtInv,
}

/// True when `a = k b` for some `k > 0` (to 1e-9 relative).
fn proportional(a: &CMatrix, b: &CMatrix) -> bool {
    let bb = matalg::frob_sq(b);
    if bb == 0.0 {
        return false;
    }
    let k = matalg::trace(&(b.adjoint() * a)).re / bb;
    k > 0.0 && matalg::frob(&(a - b.scale(k))) <= 1e-9 * matalg::frob(a).max(1.0)
}

/// Budget-constrained minimizer of the expected weighted MMSE error
/// `tr(I_adm (R^{-1} + I_F)^{-1})` when `R_R = S_R`.
pub fn solve_avg_mmse(
    s: &KroneckerCov,
    r: &KroneckerCov,
    adm: &Admissibility,
    budget: f64,
    mode: AvgMmseMode,
) -> Result<TrainingMatrix> {
    check_budget(budget)?;
    let (n_t, b) = (r.left_dim(), s.left_dim());
    check_length(n_t, b)?;
    if adm.n_t() != n_t || adm.n_r() != s.right_dim() || r.right_dim() != s.right_dim() {
        return Err(Error::Dimension("weighting, channel and noise dimensions disagree".into()));
    }
    let diff = matalg::frob(&(r.right() - s.right()));
    if diff > 1e-9 * matalg::frob(s.right()).max(1.0) {
        return Err(Error::Assumption(
            "the average MMSE design needs the receive channel correlation to equal the spatial noise correlation"
                .into(),
        ));
    }
    let et = matalg::herm_eig(r.left(), Order::Descending)?;
    let eq = matalg::herm_eig(s.left(), Order::Ascending)?;
    let p = match mode {
        AvgMmseMode::ItIdentity => {
            if !proportional(&adm.i_t, &matalg::identity(n_t)) {
                return Err(Error::Assumption("transmit weighting must be a multiple of the identity".into()));
            }
            let powers = weighted_water_filling(&et.d, &eq.d[..n_t], budget)?;
            let idx: Vec<usize> = (0..n_t).collect();
            assemble(&et.u, &idx, &eq.u, &idx, &powers)
        }
        AvgMmseMode::ItEqRtInv => {
            if !proportional(&adm.i_t, &matalg::inv_hpd(r.left())?) {
                return Err(Error::Assumption(
                    "transmit weighting must be a multiple of the inverse transmit correlation".into(),
                ));
            }
            let ord = optimal_ordering(&et.d, &eq.d, budget)?;
            let powers = water_filling_powers(&ord.gammas, ord.m_star, budget);
            assemble(&et.u, &ord.perm_t, &eq.u, &ord.perm_q[..n_t], &powers)
        }
    };
    let mut tm = TrainingMatrix::new(p);
    tm.energy = budget;
    Ok(tm)
}
