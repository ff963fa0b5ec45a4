use super::TrainingMatrix;
use crate::error::{Error, Result};
use crate::matalg::{self, CMatrix, Order};

/// Minimizes `tr(P P^H)` subject to `P A^{-1} P^H ⪰ B` for Hermitian PD `A`
/// (`N × N`) and Hermitian PSD `B` (`n × n`); `P` is `n × N`.
///
/// With `A = U_A D_A U_A^H` (ascending) and `B = U_B D_B U_B^H` (descending),
/// the minimizer is `P = U_B D_P U_A^H`, `(D_P)_ii = sqrt((D_A)_ii (D_B)_ii)`,
/// and the minimum is `Σ (D_A)_ii (D_B)_ii`.
pub fn solve_theorem1(a: &CMatrix, b: &CMatrix) -> Result<TrainingMatrix> {
    let ea = matalg::herm_eig(a, Order::Ascending)?;
    let eb = matalg::herm_eig(b, Order::Descending)?;
    let (big_n, n) = (a.nrows(), b.nrows());
    let a_scale = ea.max().abs().max(f64::MIN_POSITIVE);
    if ea.min() <= matalg::CLAMP_TOL * a_scale {
        return Err(Error::NotPsd {
            what: "temporal weighting A (needs PD)",
            min_eig: ea.min(),
        });
    }
    let b_scale = eb.d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if eb.min() < -matalg::CLAMP_TOL * b_scale.max(1.0) {
        return Err(Error::NotPsd {
            what: "target B",
            min_eig: eb.min(),
        });
    }
    let db: Vec<f64> = eb
        .d
        .iter()
        .map(|&x| if x > matalg::CLAMP_TOL * b_scale { x } else { 0.0 })
        .collect();
    let rank = db.iter().filter(|&&x| x > 0.0).count();
    if rank > big_n {
        return Err(Error::Infeasible(format!(
            "training length {big_n} is shorter than rank(B) = {rank}"
        )));
    }
    if rank == 0 {
        return Ok(TrainingMatrix::zeros(n, big_n));
    }
    let mut p = CMatrix::zeros(n, big_n);
    for i in 0..rank {
        let d = (ea.d[i] * db[i]).sqrt();
        // column i of U_B times row i of U_A^H
        let outer = eb.u.column(i) * ea.u.column(i).adjoint();
        p += outer.scale(d);
    }
    Ok(TrainingMatrix::new(p))
}
