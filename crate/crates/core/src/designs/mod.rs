//! Training-matrix solvers.
//!
//! * [`solve_theorem1`]: minimum-energy `P` subject to `P A^{-1} P^H ⪰ B`.
//! * Guaranteed-performance designs ([`solve_adgpp`], [`solve_asgpp`]): least
//!   energy such that the estimation-error confidence ellipsoid lies inside
//!   the application's admissible set.
//! * Average-performance designs ([`solve_avg_mvu`], [`solve_avg_mmse`]):
//!   least expected application cost for a given energy budget.
//! * Baselines: [`white_training`], [`equalize_energy`].

mod average;
mod guaranteed;
mod ordering;
mod theorem1;

pub use average::{
    avg_mvu_closed_form_objective, mmse_objective, mstar, mvu_objective, solve_avg_mmse, solve_avg_mvu,
    weighted_water_filling, water_filling_powers, AvgMmseMode,
};
pub use guaranteed::{
    asgpp_lmi_margin, asgpp_target, adgpp_lmi_margin, adgpp_target, guaranteed_constant, solve_adgpp, solve_asgpp,
    AsgppCase, GuaranteedSpec,
};
pub use ordering::{
    heuristic_ordering, optimal_ordering, optimal_ordering_exhaustive, ordering_objective, OrderingResult,
    EXHAUSTIVE_LIMIT,
};
pub use theorem1::solve_theorem1;

use crate::error::{Error, Result};
use crate::matalg::{self, CMatrix};

/// Whether a design had to spend energy at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignStatus {
    Active,
    /// The constraint already holds without training; `P = 0`.
    PriorSufficient,
}

/// An `n_T × B` training matrix and its energy `tr(P P^H)`.
#[derive(Debug, Clone)]
pub struct TrainingMatrix {
    pub p: CMatrix,
    pub energy: f64,
    pub status: DesignStatus,
}

impl TrainingMatrix {
    pub fn new(p: CMatrix) -> Self {
        let energy = matalg::frob_sq(&p);
        let status = if energy == 0.0 {
            DesignStatus::PriorSufficient
        } else {
            DesignStatus::Active
        };
        Self { p, energy, status }
    }

    pub fn zeros(n_t: usize, b: usize) -> Self {
        Self::new(CMatrix::zeros(n_t, b))
    }

    pub fn n_t(&self) -> usize {
        self.p.nrows()
    }

    pub fn length(&self) -> usize {
        self.p.ncols()
    }

    /// Same directions, rescaled to `energy`.
    pub fn scaled_to(&self, energy: f64) -> Result<Self> {
        if energy < 0.0 {
            return Err(Error::InvalidArgument(format!("energy must be >= 0, got {energy}")));
        }
        if energy == 0.0 {
            return Ok(Self::zeros(self.n_t(), self.length()));
        }
        if self.energy == 0.0 {
            return Err(Error::InvalidArgument("cannot rescale an all-zero training matrix".into()));
        }
        let mut out = Self::new(self.p.scale((energy / self.energy).sqrt()));
        // keep the target exactly; the rescaled Frobenius norm can be off by an ulp
        out.energy = energy;
        Ok(out)
    }
}

/// Training with `n_T` equal singular values `sqrt(energy / n_T)`:
/// `P = sqrt(energy / n_T) [I 0]`.
pub fn white_training(n_t: usize, b: usize, energy: f64) -> Result<TrainingMatrix> {
    if b < n_t {
        return Err(Error::InvalidArgument(format!(
            "white training needs B >= n_T, got B = {b} < n_T = {n_t}"
        )));
    }
    if energy < 0.0 {
        return Err(Error::InvalidArgument(format!("energy must be >= 0, got {energy}")));
    }
    let s = (energy / n_t as f64).sqrt();
    let p = CMatrix::from_fn(n_t, b, |i, j| if i == j { matalg::re(s) } else { matalg::ZERO });
    Ok(TrainingMatrix::new(p))
}

/// Rescales `p` to carry the energy of `reference`.
pub fn equalize_energy(reference: &TrainingMatrix, p: &TrainingMatrix) -> Result<TrainingMatrix> {
    if p.energy == 0.0 {
        return Err(Error::InvalidArgument("cannot equalize an all-zero training matrix".into()));
    }
    p.scaled_to(reference.energy)
}
