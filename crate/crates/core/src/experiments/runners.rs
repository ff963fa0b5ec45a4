use rand::Rng;
use rayon::prelude::*;

use super::config::{db_to_linear, EstimatorKind, ExperimentConfig, ExperimentKind, WeightKind};
use super::curves::{CurvePoint, SchemeStat};
use super::qpsk::qpsk_roundtrip;
use crate::admissibility::{
    ar1_noise_spectrum, iadm_channel_mse, iadm_equalization, iadm_l_optimality, iadm_zf, jce_exact, jzf_exact,
    Admissibility, NoiseSpectrum, SnrRegime,
};
use crate::channel_model::{
    evolve_channel, exponential_corr, random_hpd, sample_channel, standard_complex_normal, stream_rng,
    training_observation, KroneckerCov, StreamTag,
};
use crate::designs::{
    guaranteed_constant, solve_adgpp, solve_asgpp, solve_avg_mmse, solve_avg_mvu, white_training, AsgppCase,
    AvgMmseMode, TrainingMatrix,
};
use crate::error::{Error, Result};
use crate::estimators::{nmse, LinearEstimator};
use crate::matalg::{self, c64, CMatrix};

/// Channel prior and training-noise statistics of a study.
#[derive(Debug, Clone)]
pub struct Statistics {
    /// `R_T` (left) and `R_R` (right).
    pub channel: KroneckerCov,
    /// `σ² S_Q` (left) and `S_R` (right).
    pub noise: KroneckerCov,
}

fn corr(n: usize, rho: f64, phase_deg: f64) -> Result<CMatrix> {
    exponential_corr(n, c64::from_polar(rho, phase_deg.to_radians()))
}

impl Statistics {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let r_t = corr(cfg.n_t, cfg.rho, cfg.phase_t_deg)?;
        let r_r = corr(cfg.n_r, cfg.rho, cfg.phase_r_deg)?;
        let s_q = corr(cfg.b, cfg.rho, cfg.phase_q_deg)?;
        let s_r = corr(cfg.n_r, cfg.rho, cfg.phase_s_deg)?;
        Ok(Self {
            channel: KroneckerCov::new(r_t, r_r)?,
            noise: KroneckerCov::new(s_q.scale(cfg.sigma2), s_r)?,
        })
    }
}

/// A training design compared in the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Guaranteed-performance design without a prior (sets the energy).
    Adgpp,
    /// Guaranteed-performance design with the channel prior (sets the energy).
    Asgpp,
    /// Average-cost MVU design for the application weighting.
    AvgMvuAppl,
    /// Average-cost MVU design for plain channel MSE.
    AvgMvuChmse,
    /// Average-cost MMSE design for plain channel MSE.
    AvgMmseChmse,
    White,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Adgpp => "adgpp",
            Scheme::Asgpp => "asgpp",
            Scheme::AvgMvuAppl => "avg_mvu_appl",
            Scheme::AvgMvuChmse => "avg_mvu_chmse",
            Scheme::AvgMmseChmse => "avg_mmse_chmse",
            Scheme::White => "white",
        }
    }
}

/// Label of the perfect-CSI baseline in the BER series.
pub const CLAIRVOYANT: &str = "clairvoyant";

/// Schemes of a study; the first one sets the common training energy.
pub fn schemes_for(cfg: &ExperimentConfig) -> Vec<Scheme> {
    use Scheme::*;
    let mvu = vec![Adgpp, AvgMvuAppl, AvgMvuChmse, White];
    match (cfg.experiment, cfg.estimator) {
        // no stochastic case applies when R_R != S_R
        (ExperimentKind::Equalization, _) | (ExperimentKind::Outage, _) => mvu,
        (_, EstimatorKind::Mvu) => mvu,
        (_, EstimatorKind::Mmse) => vec![Asgpp, AvgMmseChmse, White],
    }
}

/// Training matrices of all schemes at one operating point.
#[derive(Debug, Clone)]
pub struct SchemeDesigns {
    pub energy: f64,
    pub designs: Vec<(Scheme, TrainingMatrix)>,
}

/// Designs every scheme at the energy of the first one, or at `power` when given
/// (the first scheme's shape is then rescaled).
pub fn design_schemes(
    schemes: &[Scheme],
    stats: &Statistics,
    adm: &Admissibility,
    c: f64,
    power: Option<f64>,
) -> Result<SchemeDesigns> {
    let (s, r) = (&stats.noise, &stats.channel);
    let (n_t, b) = (r.left_dim(), s.left_dim());
    let reference = match schemes.first() {
        Some(Scheme::Adgpp) => solve_adgpp(s, adm, c)?,
        Some(Scheme::Asgpp) => solve_asgpp(s, r, adm, c, AsgppCase::RReqSR)?,
        _ => return Err(Error::InvalidArgument("the first scheme must be a guaranteed-performance design".into())),
    };
    let reference = match power {
        Some(e) => reference.scaled_to(e)?,
        None => reference,
    };
    let energy = reference.energy;
    let mut designs = vec![(schemes[0], reference)];
    for &sch in &schemes[1..] {
        let tm = if energy == 0.0 {
            TrainingMatrix::zeros(n_t, b)
        } else {
            match sch {
                Scheme::AvgMvuAppl => solve_avg_mvu(&adm.i_t, s.left(), energy)?,
                Scheme::AvgMvuChmse => solve_avg_mvu(&matalg::identity(n_t), s.left(), energy)?,
                Scheme::AvgMmseChmse => {
                    let plain = iadm_channel_mse(n_t, adm.n_r());
                    solve_avg_mmse(s, r, &plain, energy, AvgMmseMode::ItIdentity)?
                }
                Scheme::White => white_training(n_t, b, energy)?,
                Scheme::Adgpp | Scheme::Asgpp => {
                    return Err(Error::InvalidArgument("only the first scheme may set the energy".into()))
                }
            }
        };
        designs.push((sch, tm));
    }
    Ok(SchemeDesigns { energy, designs })
}

fn estimator_for(kind: EstimatorKind, p: &CMatrix, stats: &Statistics) -> Result<LinearEstimator> {
    match kind {
        EstimatorKind::Mvu => LinearEstimator::mvu(p, &stats.noise),
        EstimatorKind::Mmse => LinearEstimator::mmse(p, &stats.noise, &stats.channel),
    }
}

/// Output of one study: the main curves and, for zero-forcing, the BER series.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub curves: Vec<CurvePoint>,
    pub ber: Option<Vec<CurvePoint>>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (curves, ber) = match cfg.experiment {
        ExperimentKind::Nmse => (run_nmse_vs_gamma(cfg)?, None),
        ExperimentKind::LOptimality => (run_l_optimality(cfg)?, None),
        ExperimentKind::Equalization => (run_equalization(cfg)?, None),
        ExperimentKind::ZeroForcing => {
            let (c, b) = run_zf(cfg)?;
            (c, Some(b))
        }
        ExperimentKind::Outage => (run_outage(cfg)?, None),
    };
    Ok(ExperimentOutput { curves, ber })
}

fn with_threads<T: Send>(cfg: &ExperimentConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match cfg.threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

/// Runs `trial` for every trial index in parallel and reduces in trial order.
/// Each trial returns one metric per scheme plus its reference energy.
fn run_trials<F>(cfg: &ExperimentConfig, trial: F) -> Result<(Vec<Vec<f64>>, f64)>
where
    F: Fn(usize) -> Result<(Vec<f64>, f64)> + Sync,
{
    let rows: Vec<(Vec<f64>, f64)> = (0..cfg.trials).into_par_iter().map(&trial).collect::<Result<_>>()?;
    let n = rows[0].0.len();
    let per_scheme = (0..n).map(|j| rows.iter().map(|r| r.0[j]).collect()).collect();
    let energy = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    Ok((per_scheme, energy))
}

fn point(cfg: &ExperimentConfig, x: f64, names: &[&str], samples: &[Vec<f64>], energy: f64) -> CurvePoint {
    CurvePoint {
        x,
        schemes: names
            .iter()
            .zip(samples)
            .map(|(n, s)| SchemeStat::from_samples(n, s))
            .collect(),
        energy,
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

fn names(schemes: &[Scheme]) -> Vec<&'static str> {
    schemes.iter().map(|s| s.name()).collect()
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "configuration is for '{}' but the '{}' runner was called",
            cfg.experiment, kind
        )));
    }
    cfg.validate()
}

/// Fixed designs, one channel and one noise draw per trial shared by all
/// schemes, metric computed from `(H, Ĥ)`.
fn run_static<M>(cfg: &ExperimentConfig, stats: &Statistics, adm: &Admissibility, metric: M) -> Result<Vec<CurvePoint>>
where
    M: Fn(&CMatrix, &CMatrix) -> Result<f64> + Sync,
{
    let schemes = schemes_for(cfg);
    let labels = names(&schemes);
    let mut out = Vec::new();
    for (ip, &x) in cfg.x_grid().iter().enumerate() {
        let (gamma_db, power) = match cfg.experiment {
            ExperimentKind::Outage => (cfg.gamma_db, Some(db_to_linear(x))),
            _ => (x, None),
        };
        let c = guaranteed_constant(db_to_linear(gamma_db), cfg.alpha, cfg.n_t, cfg.n_r)?;
        let designs = design_schemes(&schemes, stats, adm, c, power)?;
        let estimators: Vec<LinearEstimator> = designs
            .designs
            .iter()
            .map(|(_, tm)| estimator_for(cfg.estimator, &tm.p, stats))
            .collect::<Result<_>>()?;
        let (samples, energy) = with_threads(cfg, || {
            run_trials(cfg, |t| {
                let h = sample_channel(&stats.channel, &mut stream_rng(cfg.seed, ip, t, StreamTag::Channel)).h;
                let z = standard_complex_normal(cfg.n_r, cfg.b, &mut stream_rng(cfg.seed, ip, t, StreamTag::TrainingNoise));
                let mut row = Vec::with_capacity(estimators.len());
                for ((_, tm), est) in designs.designs.iter().zip(&estimators) {
                    let y = training_observation(&h, &tm.p, &stats.noise, &z)?;
                    row.push(metric(&h, &est.apply(&y)?)?);
                }
                Ok((row, designs.energy))
            })
        })?;
        out.push(point(cfg, x, &labels, &samples, energy));
    }
    Ok(out)
}

/// NMSE of the MMSE estimate against the accuracy `γ` (dB).
pub fn run_nmse_vs_gamma(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    require(cfg, ExperimentKind::Nmse)?;
    let stats = Statistics::from_config(cfg)?;
    let adm = iadm_channel_mse(cfg.n_t, cfg.n_r);
    run_static(cfg, &stats, &adm, nmse)
}

/// `W1`, `W2` of the weighted-error studies.
pub fn l_weights(cfg: &ExperimentConfig) -> (CMatrix, CMatrix) {
    match cfg.weights {
        WeightKind::Identity => (matalg::identity(cfg.n_t), matalg::identity(cfg.n_r)),
        WeightKind::Random => {
            let mut rng = stream_rng(cfg.seed, 0, 0, StreamTag::Weights);
            let w1 = random_hpd(cfg.n_t, 0.1, &mut rng);
            let w2 = random_hpd(cfg.n_r, 0.1, &mut rng);
            (w1, w2)
        }
    }
}

/// Mean `vec(H̃)^H (W1 ⊗ W2) vec(H̃)` against `γ` (dB).
pub fn run_l_optimality(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    require(cfg, ExperimentKind::LOptimality)?;
    let stats = Statistics::from_config(cfg)?;
    let (w1, w2) = l_weights(cfg);
    let adm = iadm_l_optimality(&w1, &w2)?;
    let weight = adm.clone();
    run_static(cfg, &stats, &adm, move |h, h_hat| Ok(weight.quadratic_form(&(h_hat - h))))
}

/// Empirical `Pr{J_W > 1/γ}` against training energy (dB) at fixed `γ`.
pub fn run_outage(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    require(cfg, ExperimentKind::Outage)?;
    let stats = Statistics::from_config(cfg)?;
    let (w1, w2) = l_weights(cfg);
    let adm = iadm_l_optimality(&w1, &w2)?;
    let weight = adm.clone();
    let threshold = 1.0 / db_to_linear(cfg.gamma_db);
    run_static(cfg, &stats, &adm, move |h, h_hat| {
        Ok(if weight.quadratic_form(&(h_hat - h)) > threshold { 1.0 } else { 0.0 })
    })
}

/// Current channel and every scheme's estimate of it at the last block of a chain.
struct ChainEnd {
    h: CMatrix,
    estimates: Vec<CMatrix>,
    energy: f64,
}

/// Simulates `cfg.blocks` evolving blocks after a white-training bootstrap.
/// The weighting of block `k` is built from the reference scheme's estimate
/// of block `k − 1` (or from the true previous channel with `oracle_adm`);
/// a zero-energy reference block leaves the previous estimate in place.
/// All schemes share each block's channel and training noise.
#[allow(clippy::too_many_arguments)]
fn run_chain<A>(
    cfg: &ExperimentConfig,
    stats: &Statistics,
    schemes: &[Scheme],
    boot: &(CMatrix, LinearEstimator),
    c: f64,
    ip: usize,
    t: usize,
    weighting: A,
) -> Result<ChainEnd>
where
    A: Fn(&CMatrix) -> Result<Admissibility>,
{
    let mut h = sample_channel(&stats.channel, &mut stream_rng(cfg.seed, ip, t, StreamTag::Channel)).h;
    let z0 = standard_complex_normal(cfg.n_r, cfg.b, &mut stream_rng(cfg.seed, ip, t, StreamTag::BootstrapNoise));
    let mut h_hat = boot.1.apply(&training_observation(&h, &boot.0, &stats.noise, &z0)?)?;
    let mut evolution = stream_rng(cfg.seed, ip, t, StreamTag::Evolution);
    let mut noise = stream_rng(cfg.seed, ip, t, StreamTag::TrainingNoise);
    for k in 1..=cfg.blocks {
        let adm = weighting(if cfg.oracle_adm { &h } else { &h_hat })?;
        h = evolve_channel(&h, cfg.mu, &stats.channel, &mut evolution)?;
        let designs = design_schemes(schemes, stats, &adm, c, None)?;
        let z = standard_complex_normal(cfg.n_r, cfg.b, &mut noise);
        let last = k == cfg.blocks;
        let used = if last { designs.designs.len() } else { 1 };
        let mut estimates = Vec::with_capacity(used);
        for (_, tm) in &designs.designs[..used] {
            let y = training_observation(&h, &tm.p, &stats.noise, &z)?;
            estimates.push(if tm.energy == 0.0 {
                // nothing learned beyond the prior mean
                CMatrix::zeros(h.nrows(), h.ncols())
            } else {
                estimator_for(cfg.estimator, &tm.p, stats)?.apply(&y)?
            });
        }
        if last {
            return Ok(ChainEnd {
                h,
                estimates,
                energy: designs.energy,
            });
        }
        // a prior-sufficient reference learns nothing; keep the last informative estimate
        if designs.energy > 0.0 {
            h_hat = estimates.swap_remove(0);
        }
    }
    unreachable!("validated configurations have at least one block")
}

fn bootstrap(cfg: &ExperimentConfig, stats: &Statistics) -> Result<(CMatrix, LinearEstimator)> {
    let p0 = white_training(cfg.n_t, cfg.b, cfg.bootstrap_energy)?.p;
    let est = estimator_for(cfg.estimator, &p0, stats)?;
    Ok((p0, est))
}

/// Data-phase noise spectrum: AR(1) in time with the temporal training
/// correlation, spatially `S_R`, power `σ²`.
pub fn data_noise_spectrum(cfg: &ExperimentConfig, stats: &Statistics) -> Result<NoiseSpectrum> {
    let r = c64::from_polar(cfg.rho, cfg.phase_q_deg.to_radians());
    Ok(ar1_noise_spectrum(stats.noise.right(), r, cfg.sigma2)?.with_grid_size(cfg.grid_size))
}

/// Wiener-equalizer excess MSE against `γ` (dB) with the high-SNR weighting
/// built from the previous block.
pub fn run_equalization(cfg: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    require(cfg, ExperimentKind::Equalization)?;
    let stats = Statistics::from_config(cfg)?;
    let schemes = schemes_for(cfg);
    let labels = names(&schemes);
    let lambda_x = cfg.lambda_x();
    let phi = data_noise_spectrum(cfg, &stats)?;
    let boot = bootstrap(cfg, &stats)?;
    let weighting = |h: &CMatrix| iadm_equalization(h, lambda_x, &phi, SnrRegime::High);
    let mut out = Vec::new();
    for (ip, &g) in cfg.gamma_grid.iter().enumerate() {
        let c = guaranteed_constant(db_to_linear(g), cfg.alpha, cfg.n_t, cfg.n_r)?;
        let (samples, energy) = with_threads(cfg, || {
            run_trials(cfg, |t| {
                let end = run_chain(cfg, &stats, &schemes, &boot, c, ip, t, weighting)?;
                let row = end
                    .estimates
                    .iter()
                    .map(|h_hat| jce_exact(&end.h, &(h_hat - &end.h), lambda_x, &phi))
                    .collect::<Result<_>>()?;
                Ok((row, end.energy))
            })
        })?;
        out.push(point(cfg, g, &labels, &samples, energy));
    }
    Ok(out)
}

/// `λ_x ‖H Ĥ^† − I‖²_F`, also for a rank-deficient estimate.
fn zf_excess(h: &CMatrix, h_hat: &CMatrix, lambda_x: f64) -> Result<f64> {
    match jzf_exact(h, &(h_hat - h), lambda_x) {
        Err(Error::RankDeficient(_)) => {
            let e = h * matalg::pinv(h_hat) - matalg::identity(h.nrows());
            Ok(lambda_x * matalg::frob_sq(&e))
        }
        other => other,
    }
}

/// Zero-forcing precoding with estimates designed at the data SNR `snr_db`.
///
/// Returns the excess MSE against `γ` (dB), and the QPSK bit error rate
/// against the data SNR (dB, `ber_snr_grid`) for the estimates designed at
/// the fixed accuracy `gamma_db`, with the perfect-CSI baseline last.
pub fn run_zf(cfg: &ExperimentConfig) -> Result<(Vec<CurvePoint>, Vec<CurvePoint>)> {
    require(cfg, ExperimentKind::ZeroForcing)?;
    let stats = Statistics::from_config(cfg)?;
    let schemes = schemes_for(cfg);
    let lambda_x = cfg.lambda_x();
    let boot = bootstrap(cfg, &stats)?;
    let weighting = |h: &CMatrix| iadm_zf(h, lambda_x);

    let labels = names(&schemes);
    let mut mse_out = Vec::new();
    for (ip, &g) in cfg.gamma_grid.iter().enumerate() {
        let c = guaranteed_constant(db_to_linear(g), cfg.alpha, cfg.n_t, cfg.n_r)?;
        let (samples, energy) = with_threads(cfg, || {
            run_trials(cfg, |t| {
                let end = run_chain(cfg, &stats, &schemes, &boot, c, ip, t, weighting)?;
                let row = end
                    .estimates
                    .iter()
                    .map(|h_hat| zf_excess(&end.h, h_hat, lambda_x))
                    .collect::<Result<_>>()?;
                Ok((row, end.energy))
            })
        })?;
        mse_out.push(point(cfg, g, &labels, &samples, energy));
    }

    // BER: one chain per trial at the fixed accuracy, evaluated at every data SNR
    let ip = cfg.gamma_grid.len();
    let c = guaranteed_constant(db_to_linear(cfg.gamma_db), cfg.alpha, cfg.n_t, cfg.n_r)?;
    let data_noise = stats.noise.right().scale(cfg.sigma2);
    let per_vector = 2 * cfg.n_r;
    let bits_per_trial = cfg.ber_bits.div_ceil(cfg.trials).div_ceil(per_vector) * per_vector;
    let n_snr = cfg.ber_snr_grid.len();
    let (samples, energy) = with_threads(cfg, || {
        run_trials(cfg, |t| {
            let end = run_chain(cfg, &stats, &schemes, &boot, c, ip, t, weighting)?;
            let mut row = Vec::with_capacity(n_snr * (schemes.len() + 1));
            for (is, &snr_db) in cfg.ber_snr_grid.iter().enumerate() {
                let snr = db_to_linear(snr_db);
                let mut bit_rng = stream_rng(cfg.seed, ip + is, t, StreamTag::Bits);
                let bits: Vec<bool> = (0..bits_per_trial).map(|_| bit_rng.random::<bool>()).collect();
                for h_hat in end.estimates.iter().chain(std::iter::once(&end.h)) {
                    // same data noise for every scheme
                    let mut rng = stream_rng(cfg.seed, ip + is, t, StreamTag::DataNoise);
                    let errors = qpsk_roundtrip(&bits, &end.h, h_hat, snr * cfg.sigma2, &data_noise, &mut rng)?;
                    row.push(errors as f64 / bits_per_trial as f64);
                }
            }
            Ok((row, end.energy))
        })
    })?;
    let mut ber_labels = labels;
    ber_labels.push(CLAIRVOYANT);
    let k = ber_labels.len();
    let ber_out = cfg
        .ber_snr_grid
        .iter()
        .enumerate()
        .map(|(is, &snr_db)| point(cfg, snr_db, &ber_labels, &samples[is * k..(is + 1) * k], energy))
        .collect();
    Ok((mse_out, ber_out))
}
