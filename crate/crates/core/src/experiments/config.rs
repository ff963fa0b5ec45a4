use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Channel-estimation NMSE against the accuracy parameter.
    Nmse,
    /// Weighted (L-optimality) error against the accuracy parameter.
    LOptimality,
    /// Wiener-equalizer excess MSE over evolving blocks.
    Equalization,
    /// Zero-forcing precoding excess MSE plus QPSK bit errors.
    ZeroForcing,
    /// Probability that the weighted error exceeds `1/γ`, against training power.
    Outage,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Nmse => "nmse",
            ExperimentKind::LOptimality => "lopt",
            ExperimentKind::Equalization => "eq",
            ExperimentKind::ZeroForcing => "zf",
            ExperimentKind::Outage => "outage",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmse" => Ok(ExperimentKind::Nmse),
            "lopt" => Ok(ExperimentKind::LOptimality),
            "eq" => Ok(ExperimentKind::Equalization),
            "zf" => Ok(ExperimentKind::ZeroForcing),
            "outage" => Ok(ExperimentKind::Outage),
            other => Err(Error::Config(format!(
                "unknown experiment '{other}' (expected nmse, lopt, eq, zf or outage)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Mvu,
    Mmse,
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mvu" => Ok(EstimatorKind::Mvu),
            "mmse" => Ok(EstimatorKind::Mmse),
            other => Err(Error::Config(format!("unknown estimator '{other}' (expected mvu or mmse)"))),
        }
    }
}

/// How the L-optimality weights `W1`, `W2` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Seeded random positive definite matrices.
    Random,
    Identity,
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(WeightKind::Random),
            "identity" => Ok(WeightKind::Identity),
            other => Err(Error::Config(format!("unknown weights '{other}' (expected random or identity)"))),
        }
    }
}

/// Settings for one Monte Carlo study.
///
/// All covariance factors follow the exponential model with magnitude `rho`
/// and a per-factor phase. Noise factors have unit diagonal and are scaled by
/// `sigma2`; the data-phase SNR is `λ_x / σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_t: usize,
    pub n_r: usize,
    pub b: usize,
    pub rho: f64,
    pub phase_t_deg: f64,
    pub phase_r_deg: f64,
    pub phase_q_deg: f64,
    pub phase_s_deg: f64,
    pub snr_db: f64,
    pub sigma2: f64,
    pub mu: f64,
    pub alpha: f64,
    /// Fixed accuracy for the outage study (dB).
    pub gamma_db: f64,
    /// Accuracy values (dB) for the γ-swept studies.
    pub gamma_grid: Vec<f64>,
    /// Training energies (dB) for the outage study.
    pub power_grid: Vec<f64>,
    /// Data SNRs (dB) of the zero-forcing BER series.
    pub ber_snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub estimator: EstimatorKind,
    pub grid_size: usize,
    /// Energy of the white training that produces the first-block estimate.
    pub bootstrap_energy: f64,
    /// Design-driven blocks simulated after the bootstrap block.
    pub blocks: usize,
    /// Bits per scheme and grid point in the BER series.
    pub ber_bits: usize,
    pub weights: WeightKind,
    /// Build the application weighting from the true previous channel instead of its estimate.
    pub oracle_adm: bool,
}

const KEYS: &[&str] = &[
    "experiment",
    "n_t",
    "n_r",
    "b",
    "rho",
    "phase_t_deg",
    "phase_r_deg",
    "phase_q_deg",
    "phase_s_deg",
    "snr_db",
    "sigma2",
    "mu",
    "alpha",
    "gamma_db",
    "gamma_grid",
    "power_grid",
    "ber_snr_grid",
    "trials",
    "seed",
    "threads",
    "estimator",
    "grid_size",
    "bootstrap_energy",
    "blocks",
    "ber_bits",
    "weights",
    "oracle_adm",
];

/// Parses a comma- or whitespace-separated list of numbers.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("'{t}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    Ok(vals)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value '{v}' for '{key}' (expected true or false)"))),
    }
}

impl ExperimentConfig {
    /// Defaults for `experiment` with the given estimator: dimensions of the
    /// matching figure, `ρ = 0.9`, 15 dB data SNR, `μ = 0.01`, `α = 0.99`.
    pub fn defaults(experiment: ExperimentKind, estimator: Option<EstimatorKind>) -> Self {
        use EstimatorKind::*;
        use ExperimentKind::*;
        let estimator = estimator.unwrap_or(match experiment {
            LOptimality | Outage => Mvu,
            Nmse | Equalization | ZeroForcing => Mmse,
        });
        let (n_t, n_r, b) = match (experiment, estimator) {
            (Nmse, _) | (Equalization, _) => (4, 2, 6),
            (LOptimality, Mvu) | (Outage, _) => (6, 6, 8),
            (LOptimality, Mmse) => (3, 3, 4),
            (ZeroForcing, Mvu) => (5, 5, 7),
            (ZeroForcing, Mmse) => (4, 4, 6),
        };
        let gamma_grid = match experiment {
            ZeroForcing => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            LOptimality => vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            _ => vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        };
        Self {
            experiment,
            n_t,
            n_r,
            b,
            rho: 0.9,
            phase_t_deg: 0.0,
            phase_r_deg: 0.0,
            phase_q_deg: 0.0,
            // the equalization study needs R_R != S_R at equal magnitude
            phase_s_deg: if experiment == Equalization { 45.0 } else { 0.0 },
            snr_db: 15.0,
            sigma2: 1.0,
            mu: 0.01,
            alpha: 0.99,
            // the BER figure at low accuracy
            gamma_db: if experiment == ZeroForcing { -10.0 } else { 0.0 },
            gamma_grid,
            power_grid: (6..=16).map(f64::from).collect(),
            ber_snr_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: if experiment == Outage { 10_000 } else { 2000 },
            seed: 1,
            threads: None,
            estimator,
            grid_size: crate::admissibility::DEFAULT_GRID_SIZE,
            bootstrap_energy: 100.0,
            blocks: 3,
            ber_bits: 100_000,
            weights: WeightKind::Random,
            oracle_adm: false,
        }
    }

    /// Parses `key = value` lines (`#` starts a comment). `experiment`
    /// overrides the file's `experiment` key; one of the two must be present.
    pub fn parse(text: &str, experiment: Option<ExperimentKind>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        let kind = match (experiment, map.get("experiment")) {
            (Some(k), _) => k,
            (None, Some(v)) => v.parse()?,
            (None, None) => return Err(Error::Config("no experiment given".into())),
        };
        let estimator = map.get("estimator").map(|v| v.parse()).transpose()?;
        let mut cfg = Self::defaults(kind, estimator);
        for (k, v) in &map {
            let v = v.as_str();
            match k.as_str() {
                "experiment" | "estimator" => {}
                "n_t" => cfg.n_t = parse_value(k, v)?,
                "n_r" => cfg.n_r = parse_value(k, v)?,
                "b" => cfg.b = parse_value(k, v)?,
                "rho" => cfg.rho = parse_value(k, v)?,
                "phase_t_deg" => cfg.phase_t_deg = parse_value(k, v)?,
                "phase_r_deg" => cfg.phase_r_deg = parse_value(k, v)?,
                "phase_q_deg" => cfg.phase_q_deg = parse_value(k, v)?,
                "phase_s_deg" => cfg.phase_s_deg = parse_value(k, v)?,
                "snr_db" => cfg.snr_db = parse_value(k, v)?,
                "sigma2" => cfg.sigma2 = parse_value(k, v)?,
                "mu" => cfg.mu = parse_value(k, v)?,
                "alpha" => cfg.alpha = parse_value(k, v)?,
                "gamma_db" => cfg.gamma_db = parse_value(k, v)?,
                "gamma_grid" => cfg.gamma_grid = parse_grid(v)?,
                "power_grid" => cfg.power_grid = parse_grid(v)?,
                "ber_snr_grid" => cfg.ber_snr_grid = parse_grid(v)?,
                "trials" => cfg.trials = parse_value(k, v)?,
                "seed" => cfg.seed = parse_value(k, v)?,
                "threads" => cfg.threads = Some(parse_value(k, v)?),
                "grid_size" => cfg.grid_size = parse_value(k, v)?,
                "bootstrap_energy" => cfg.bootstrap_energy = parse_value(k, v)?,
                "blocks" => cfg.blocks = parse_value(k, v)?,
                "ber_bits" => cfg.ber_bits = parse_value(k, v)?,
                "weights" => cfg.weights = v.parse()?,
                "oracle_adm" => cfg.oracle_adm = parse_bool(k, v)?,
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, experiment: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, experiment)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_t == 0 || self.n_r == 0 {
            return bad("n_t and n_r must be at least 1".into());
        }
        if self.b < self.n_t {
            return bad(format!("b = {} must be at least n_t = {}", self.b, self.n_t));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.mu >= 0.0) {
            return bad(format!("mu must be non-negative, got {}", self.mu));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.grid_size == 0 {
            return bad("grid_size must be at least 1".into());
        }
        if !(self.bootstrap_energy > 0.0) {
            return bad(format!("bootstrap_energy must be positive, got {}", self.bootstrap_energy));
        }
        if self.blocks == 0 {
            return bad("blocks must be at least 1".into());
        }
        if self.ber_bits == 0 || self.ber_bits % 2 != 0 {
            return bad(format!("ber_bits must be a positive even number, got {}", self.ber_bits));
        }
        let finite = |g: &[f64]| !g.is_empty() && g.iter().all(|x| x.is_finite());
        match self.experiment {
            ExperimentKind::Outage => {
                if !finite(&self.power_grid) {
                    return bad("power_grid must be a non-empty list of finite values".into());
                }
            }
            _ => {
                if !finite(&self.gamma_grid) {
                    return bad("gamma_grid must be a non-empty list of finite values".into());
                }
            }
        }
        if self.experiment == ExperimentKind::ZeroForcing && !finite(&self.ber_snr_grid) {
            return bad("ber_snr_grid must be a non-empty list of finite values".into());
        }
        if self.experiment == ExperimentKind::ZeroForcing && self.n_t != self.n_r {
            return bad(format!(
                "zero-forcing study needs n_t = n_r, got n_t = {}, n_r = {}",
                self.n_t, self.n_r
            ));
        }
        if self.experiment == ExperimentKind::Outage && self.estimator != EstimatorKind::Mvu {
            return bad("the outage study uses the MVU estimator".into());
        }
        if self.experiment == ExperimentKind::Nmse && self.estimator != EstimatorKind::Mmse {
            return bad("the NMSE study uses the MMSE estimator".into());
        }
        Ok(())
    }

    pub fn lambda_x(&self) -> f64 {
        self.sigma2 * 10f64.powf(self.snr_db / 10.0)
    }

    /// The x-axis values of the study.
    pub fn x_grid(&self) -> &[f64] {
        match self.experiment {
            ExperimentKind::Outage => &self.power_grid,
            _ => &self.gamma_grid,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
