//! Linear least-squares informativeness model: fitting, prediction and the
//! versioned text file format.
//!
//! File layout (`audiosum-model v1`), one labelled line per field, numbers
//! written with 17 significant digits:
//!
//! ```text
//! audiosum-model v1
//! n_features 277
//! weights <n_features numbers>
//! intercept <number>
//! means <n_features numbers>
//! scales <n_features numbers>
//! config sample_rate=22050 n_fft=2048 hop=512 n_mfcc=25 segment_length=10
//! ridge_lambda <number, 0 when the design had full rank>
//! train_rmse <number>
//! train_rows <count>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::linalg::{lstsq, ColMatrix};

pub const MODEL_HEADER: &str = "audiosum-model";
pub const SCHEMA_VERSION: u32 = 1;

/// Ridge strength relative to `trace(A^T A) / n_features` on rank deficiency.
pub const RIDGE_FACTOR: f64 = 1e-8;

/// Pipeline settings the model was trained under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigEcho {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mfcc: usize,
    pub segment_length: f64,
}

impl From<&PipelineConfig> for ConfigEcho {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            sample_rate: c.sample_rate,
            n_fft: c.n_fft,
            hop: c.hop,
            n_mfcc: c.n_mfcc,
            segment_length: c.segment_length_train,
        }
    }
}

impl ConfigEcho {
    fn render(&self) -> String {
        format!(
            "sample_rate={} n_fft={} hop={} n_mfcc={} segment_length={}",
            self.sample_rate, self.n_fft, self.hop, self.n_mfcc, self.segment_length
        )
    }

    fn parse(text: &str) -> Result<Self> {
        let mut echo = ConfigEcho {
            sample_rate: 0,
            n_fft: 0,
            hop: 0,
            n_mfcc: 0,
            segment_length: 0.0,
        };
        let mut seen = 0;
        for kv in text.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::ModelFormat(format!("bad config entry {kv:?}")))?;
            let bad = || Error::ModelFormat(format!("bad value for {k}: {v:?}"));
            match k {
                "sample_rate" => echo.sample_rate = v.parse().map_err(|_| bad())?,
                "n_fft" => echo.n_fft = v.parse().map_err(|_| bad())?,
                "hop" => echo.hop = v.parse().map_err(|_| bad())?,
                "n_mfcc" => echo.n_mfcc = v.parse().map_err(|_| bad())?,
                "segment_length" => echo.segment_length = v.parse().map_err(|_| bad())?,
                _ => return Err(Error::ModelFormat(format!("unknown config key {k:?}"))),
            }
            seen += 1;
        }
        if seen != 5 {
            return Err(Error::ModelFormat("incomplete config line".into()));
        }
        Ok(echo)
    }

    /// Differences against `cfg`, each described in one line.
    pub fn differences(&self, cfg: &PipelineConfig) -> Vec<String> {
        let cur = ConfigEcho::from(cfg);
        let mut out = Vec::new();
        if self.sample_rate != cur.sample_rate {
            out.push(format!("sample_rate {} vs {}", self.sample_rate, cur.sample_rate));
        }
        if self.n_fft != cur.n_fft {
            out.push(format!("n_fft {} vs {}", self.n_fft, cur.n_fft));
        }
        if self.hop != cur.hop {
            out.push(format!("hop {} vs {}", self.hop, cur.hop));
        }
        if self.n_mfcc != cur.n_mfcc {
            out.push(format!("n_mfcc {} vs {}", self.n_mfcc, cur.n_mfcc));
        }
        if self.segment_length != cur.segment_length {
            out.push(format!("segment_length {} vs {}", self.segment_length, cur.segment_length));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub schema_version: u32,
    pub config: ConfigEcho,
    /// Ridge strength used when the design was rank deficient, else 0.
    pub ridge_lambda: f64,
    pub train_rmse: f64,
    pub train_rows: usize,
}

fn is_constant(std: f64, mean: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

impl RegressionModel {
    /// Least-squares fit on z-scored columns.
    ///
    /// Constant columns get scale 1 and weight 0. If the standardized design
    /// is rank deficient, the fit is repeated with a small ridge penalty
    /// whose strength is stored in `ridge_lambda`.
    pub fn fit(rows: &[FeatureVector], targets: &[f64], config: ConfigEcho) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 rows, got {n}")));
        }
        if targets.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} targets"),
                got: format!("{} targets", targets.len()),
            });
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("empty feature vectors".into()));
        }
        for r in rows {
            if r.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: format!("{d} features"),
                    got: format!("{} features", r.len()),
                });
            }
            if r.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("training features"));
            }
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training targets"));
        }

        let nf = n as f64;
        let means: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r.values[j]).sum::<f64>() / nf)
            .collect();
        let stds: Vec<f64> = (0..d)
            .map(|j| {
                let m = means[j];
                (rows.iter().map(|r| (r.values[j] - m).powi(2)).sum::<f64>() / nf).sqrt()
            })
            .collect();
        let active: Vec<usize> = (0..d).filter(|&j| !is_constant(stds[j], means[j])).collect();
        let scales: Vec<f64> = (0..d)
            .map(|j| if is_constant(stds[j], means[j]) { 1.0 } else { stds[j] })
            .collect();

        let y_mean = targets.iter().sum::<f64>() / nf;
        let y: Vec<f64> = targets.iter().map(|t| t - y_mean).collect();

        let mut weights = vec![0.0; d];
        let mut ridge_lambda = 0.0;
        if !active.is_empty() {
            let mut a = ColMatrix::zeros(n, active.len());
            for (c, &j) in active.iter().enumerate() {
                for (i, r) in rows.iter().enumerate() {
                    a.set(i, c, (r.values[j] - means[j]) / scales[j]);
                }
            }
            let mut sol = lstsq(&a, &y);
            if sol.rank < active.len() {
                let trace: f64 = a.data.iter().map(|v| v * v).sum();
                ridge_lambda = RIDGE_FACTOR * trace / d as f64;
                let sqrt_l = ridge_lambda.sqrt();
                let k = active.len();
                let mut aug = ColMatrix::zeros(n + k, k);
                for c in 0..k {
                    aug.col_mut(c)[..n].copy_from_slice(a.col(c));
                    aug.set(n + c, c, sqrt_l);
                }
                let mut rhs = y.clone();
                rhs.resize(n + k, 0.0);
                sol = lstsq(&aug, &rhs);
            }
            for (c, &j) in active.iter().enumerate() {
                weights[j] = sol.x[c];
            }
        }

        let mut model = RegressionModel {
            weights,
            intercept: y_mean,
            feature_means: means,
            feature_scales: scales,
            schema_version: SCHEMA_VERSION,
            config,
            ridge_lambda,
            train_rmse: 0.0,
            train_rows: n,
        };
        let sse: f64 = rows
            .iter()
            .zip(targets)
            .map(|(r, t)| (model.evaluate(&r.values) - t).powi(2))
            .sum();
        model.train_rmse = (sse / nf).sqrt();
        Ok(model)
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        self.intercept
            + x.iter()
                .zip(&self.weights)
                .zip(self.feature_means.iter().zip(&self.feature_scales))
                .map(|((xi, w), (m, s))| w * ((xi - m) / s))
                .sum::<f64>()
    }

    /// `weights . ((x - means) / scales) + intercept`.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features()),
                got: format!("{} features", x.len()),
            });
        }
        if x.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(self.evaluate(&x.values))
    }

    /// Fails if the model cannot consume features produced under `cfg`;
    /// other differences are only logged.
    pub fn check_config(&self, cfg: &PipelineConfig) -> Result<()> {
        if self.config.n_mfcc != cfg.n_mfcc || self.n_features() != cfg.feature_len() {
            return Err(Error::ConfigMismatch(format!(
                "model trained with n_mfcc={} ({} features), pipeline uses n_mfcc={}",
                self.config.n_mfcc,
                self.n_features(),
                cfg.n_mfcc
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        fn nums(xs: &[f64]) -> String {
            xs.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
        }
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER} v{}", self.schema_version);
        let _ = writeln!(s, "n_features {}", self.n_features());
        let _ = writeln!(s, "weights {}", nums(&self.weights));
        let _ = writeln!(s, "intercept {:.16e}", self.intercept);
        let _ = writeln!(s, "means {}", nums(&self.feature_means));
        let _ = writeln!(s, "scales {}", nums(&self.feature_scales));
        let _ = writeln!(s, "config {}", self.config.render());
        let _ = writeln!(s, "ridge_lambda {:.16e}", self.ridge_lambda);
        let _ = writeln!(s, "train_rmse {:.16e}", self.train_rmse);
        let _ = writeln!(s, "train_rows {}", self.train_rows);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::ModelFormat("empty file".into()))?;
        let version = header
            .strip_prefix(MODEL_HEADER)
            .and_then(|r| r.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| Error::ModelFormat(format!("bad header {header:?}")))?;
        if version != SCHEMA_VERSION {
            return Err(Error::UnknownSchema {
                found: version,
                supported: SCHEMA_VERSION,
            });
        }

        let mut fields = std::collections::HashMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            if fields.insert(k, v).is_some() {
                return Err(Error::ModelFormat(format!("duplicate field {k}")));
            }
        }
        let field = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::ModelFormat(format!("missing field {k}")))
        };
        let num = |k: &str, v: &str| -> Result<f64> {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad number in {k}: {v:?}")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::ModelFormat(format!("non-finite value in {k}")))
            }
        };
        let n: usize = field("n_features")?
            .trim()
            .parse()
            .map_err(|_| Error::ModelFormat("bad n_features".into()))?;
        let vector = |k: &str| -> Result<Vec<f64>> {
            let v = field(k)?
                .split_whitespace()
                .map(|t| num(k, t))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != n {
                return Err(Error::ModelFormat(format!("{k}: expected {n} values, found {}", v.len())));
            }
            Ok(v)
        };
        let weights = vector("weights")?;
        let feature_means = vector("means")?;
        let feature_scales = vector("scales")?;
        if feature_scales.iter().any(|s| *s <= 0.0) {
            return Err(Error::ModelFormat("scales must be positive".into()));
        }
        Ok(RegressionModel {
            weights,
            intercept: num("intercept", field("intercept")?)?,
            feature_means,
            feature_scales,
            schema_version: version,
            config: ConfigEcho::parse(field("config")?)?,
            ridge_lambda: num("ridge_lambda", field("ridge_lambda")?)?,
            train_rmse: num("train_rmse", field("train_rmse")?)?,
            train_rows: field("train_rows")?
                .trim()
                .parse()
                .map_err(|_| Error::ModelFormat("bad train_rows".into()))?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Loads a model and logs a warning for each setting that differs from `cfg`.
    pub fn load_for(path: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<Self> {
        let m = Self::load(path)?;
        for d in m.config.differences(cfg) {
            warn!("model config differs from pipeline: {d}");
        }
        Ok(m)
    }
}
