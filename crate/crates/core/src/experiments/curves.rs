use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["x", "scheme", "metric_mean", "metric_stderr", "energy", "trials", "seed"];

/// Sample mean and standard error of one scheme's metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeStat {
    pub scheme: String,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
}

impl SchemeStat {
    /// Mean and standard error of `samples` (0 error for a single sample).
    pub fn from_samples(scheme: &str, samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if samples.len() > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self {
            scheme: scheme.to_string(),
            mean,
            stderr,
        }
    }
}

/// All schemes evaluated at one x-axis value with a common training energy.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub schemes: Vec<SchemeStat>,
    pub energy: f64,
    pub trials: usize,
    pub seed: u64,
}

impl CurvePoint {
    pub fn get(&self, scheme: &str) -> Option<&SchemeStat> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

fn float(x: f64) -> String {
    // 17 significant digits round-trip every finite double
    format!("{x:.16e}")
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Serializes curves, one row per (x, scheme) in emission order.
pub fn to_csv_string(curves: &[CurvePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |rec: &[String]| w.write_record(rec).expect("writing to memory cannot fail");
    write(&CSV_HEADER.map(String::from));
    for p in curves {
        for s in &p.schemes {
            write(&[
                float(p.x),
                s.scheme.clone(),
                float(s.mean),
                float(s.stderr),
                float(p.energy),
                p.trials.to_string(),
                p.seed.to_string(),
            ]);
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

pub fn emit_csv(curves: &[CurvePoint], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(curves)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inverse of [`to_csv_string`]. Consecutive rows sharing x, energy,
/// trials and seed (and not repeating a scheme) form one point.
pub fn parse_csv_str(text: &str, path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(csv_err(path, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out: Vec<CurvePoint> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let f = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| csv_err(path, format!("row {row}: '{}' is not a number", &rec[j])))
        };
        let (x, mean, stderr, energy) = (f(0)?, f(2)?, f(3)?, f(4)?);
        let trials: usize = rec[5]
            .parse()
            .map_err(|_| csv_err(path, format!("row {row}: bad trial count '{}'", &rec[5])))?;
        let seed: u64 = rec[6]
            .parse()
            .map_err(|_| csv_err(path, format!("row {row}: bad seed '{}'", &rec[6])))?;
        let stat = SchemeStat {
            scheme: rec[1].to_string(),
            mean,
            stderr,
        };
        match out.last_mut() {
            Some(p)
                if p.x.to_bits() == x.to_bits()
                    && p.energy.to_bits() == energy.to_bits()
                    && p.trials == trials
                    && p.seed == seed
                    && p.get(&stat.scheme).is_none() =>
            {
                p.schemes.push(stat)
            }
            _ => out.push(CurvePoint {
                x,
                schemes: vec![stat],
                energy,
                trials,
                seed,
            }),
        }
    }
    Ok(out)
}

pub fn parse_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point(x: f64, names: &[&str]) -> CurvePoint {
        CurvePoint {
            x,
            schemes: names
                .iter()
                .enumerate()
                .map(|(i, n)| SchemeStat {
                    scheme: n.to_string(),
                    mean: 0.1 * (i as f64 + 1.0) / 3.0,
                    stderr: 1e-3 / 7.0,
                })
                .collect(),
            energy: 12.5,
            trials: 10,
            seed: 3,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x,scheme,metric_mean,metric_stderr,energy,trials,seed\n");
        assert!(parse_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn one_row_per_point_and_scheme() {
        let curves = vec![point(-10.0, &["a", "b", "c"]), point(0.0, &["a", "b", "c"])];
        let text = to_csv_string(&curves);
        assert_eq!(text.lines().count(), 1 + 6);
        let second = text.lines().nth(1).unwrap();
        assert!(second.starts_with("-1.0000000000000000e1,a,"));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_csv(&[], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
        let err = parse_csv_str("a,b\n1,2\n", Path::new("bad.csv")).unwrap_err();
        assert!(matches!(err, Error::Csv { .. }));
    }

    #[test]
    fn stats_from_samples() {
        let s = SchemeStat::from_samples("w", &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(SchemeStat::from_samples("w", &[7.0]).stderr, 0.0);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            -1e3..1e3f64,
            Just(0.0),
            Just(-0.0),
        ]
    }

    fn curve() -> impl Strategy<Value = CurvePoint> {
        (
            finite(),
            prop::collection::vec(("[a-z_]{1,12}", finite(), finite()), 1..5),
            finite(),
            any::<usize>(),
            any::<u64>(),
        )
            .prop_map(|(x, rows, energy, trials, seed)| {
                let mut schemes: Vec<SchemeStat> = Vec::new();
                for (name, mean, stderr) in rows {
                    if schemes.iter().all(|s| s.scheme != name) {
                        schemes.push(SchemeStat { scheme: name, mean, stderr });
                    }
                }
                CurvePoint {
                    x,
                    schemes,
                    energy,
                    trials,
                    seed,
                }
            })
    }

    proptest! {
        #[test]
        fn parse_inverts_emit(curves in prop::collection::vec(curve(), 0..6)) {
            // points that would merge on parse are not distinguishable in the format
            let mut distinct: Vec<CurvePoint> = Vec::new();
            for c in curves {
                if distinct.last().is_none_or(|p| p.x.to_bits() != c.x.to_bits()) {
                    distinct.push(c);
                }
            }
            let text = to_csv_string(&distinct);
            let back = parse_csv_str(&text, Path::new("mem")).unwrap();
            prop_assert_eq!(back.len(), distinct.len());
            for (a, b) in back.iter().zip(&distinct) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.energy.to_bits(), b.energy.to_bits());
                prop_assert_eq!((a.trials, a.seed), (b.trials, b.seed));
                prop_assert_eq!(a.schemes.len(), b.schemes.len());
                for (s, t) in a.schemes.iter().zip(&b.schemes) {
                    prop_assert_eq!(&s.scheme, &t.scheme);
                    prop_assert_eq!(s.mean.to_bits(), t.mean.to_bits());
                    prop_assert_eq!(s.stderr.to_bits(), t.stderr.to_bits());
                }
            }
        }
    }
}
