use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureSpec;

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Rate,
    Lowerbound,
    Verify,
    Constants,
    Gmu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

/// Named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Carlson,
    Mz,
    BoundLemma,
    TransportMetric,
    Neighborhood,
    Truncation,
    GmuProperties,
    SharpChain,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Carlson,
        Suite::Mz,
        Suite::BoundLemma,
        Suite::TransportMetric,
        Suite::Neighborhood,
        Suite::Truncation,
        Suite::GmuProperties,
        Suite::SharpChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Carlson => "carlson",
            Suite::Mz => "mz",
            Suite::BoundLemma => "bound_lemma",
            Suite::TransportMetric => "transport_metric",
            Suite::Neighborhood => "neighborhood",
            Suite::Truncation => "truncation",
            Suite::GmuProperties => "gmu_properties",
            Suite::SharpChain => "sharp_chain",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::Config(format!(
                    "unknown suite `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// `[32, 64]` or `"32,64"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum GridValue {
    List(Vec<u64>),
    Text(String),
}

/// Parses `32,64,128`.
pub fn parse_grid(text: &str) -> Result<Vec<u64>> {
    text.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>().map_err(|_| {
                Error::Config(format!("`{t}` in the N grid is not a positive integer"))
            })
        })
        .collect()
}

fn de_grid<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Vec<u64>>, D::Error> {
    match Option::<GridValue>::deserialize(d)? {
        None => Ok(None),
        Some(GridValue::List(v)) => Ok(Some(v)),
        Some(GridValue::Text(s)) => parse_grid(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

/// A partial configuration, as read from a file or from command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub experiment: Option<ExperimentKind>,
    pub measure: Option<String>,
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub eps: Option<f64>,
    #[serde(default, deserialize_with = "de_grid")]
    pub n_grid: Option<Vec<u64>>,
    pub reps: Option<usize>,
    pub m_plugin: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub threads: Option<usize>,
    pub c_fg: Option<f64>,
    pub weighted_fit: Option<bool>,
    pub suite: Option<Suite>,
    pub t_max: Option<f64>,
}

impl ConfigPatch {
    /// Reads a TOML key-value file with the same field names as the flags.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A fully resolved run description; every output row is derived from it alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub measure: String,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    /// `None` selects [`crate::bounds::best_beta`].
    pub beta: Option<f64>,
    pub eps: f64,
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub m_plugin: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub c_fg: f64,
    pub weighted_fit: bool,
    pub suite: Option<Suite>,
    pub t_max: f64,
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = Self {
            experiment: kind,
            measure: "exponential".into(),
            d: 1,
            p: 1.0,
            q: 4.0,
            sigma: 1.0,
            beta: None,
            eps: 1.0,
            n_grid: (5..=10).map(|k| 1u64 << k).collect(),
            reps: 100,
            m_plugin: 2048,
            seed: 42,
            out: None,
            format: OutputFormat::Csv,
            threads: None,
            c_fg: 1.0,
            weighted_fit: false,
            suite: None,
            t_max: 1e8,
        };
        match kind {
            ExperimentKind::Lowerbound => {
                c.measure = "sharp_rate".into();
                c.sigma = 0.25;
                c.n_grid = vec![1 << 20];
                c.reps = 10_000;
                c.eps = 0.5;
            }
            ExperimentKind::Gmu => {
                c.measure = "zygmund:p=1,alpha=1".into();
            }
            _ => {}
        }
        c
    }

    /// Defaults for `kind`, then each patch in order; later patches win.
    pub fn resolve(kind: ExperimentKind, patches: &[&ConfigPatch]) -> Result<Self> {
        let mut c = Self::defaults(kind);
        for patch in patches {
            if let Some(k) = patch.experiment {
                if k != kind {
                    return Err(Error::Config(format!(
                        "config file describes a `{k:?}` experiment but `{kind:?}` was requested"
                    )));
                }
            }
            c.apply(patch);
        }
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, patch: &ConfigPatch) {
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &patch.$f { self.$f = v.clone(); } )* };
        }
        take!(
            measure,
            d,
            p,
            q,
            sigma,
            eps,
            n_grid,
            reps,
            m_plugin,
            seed,
            format,
            c_fg,
            weighted_fit,
            t_max
        );
        if patch.beta.is_some() {
            self.beta = patch.beta;
        }
        if patch.out.is_some() {
            self.out.clone_from(&patch.out);
        }
        if patch.threads.is_some() {
            self.threads = patch.threads;
        }
        if patch.suite.is_some() {
            self.suite = patch.suite;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return bad(format!("p must be >= 1 (got {})", self.p));
        }
        if !(self.q > self.p) || !self.q.is_finite() {
            return bad(format!(
                "q must exceed p (got q = {}, p = {})",
                self.q, self.p
            ));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be positive (got {})", self.sigma));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive (got {})", self.eps));
        }
        if let Some(b) = self.beta {
            let hi = (self.q + self.d as f64) / (self.p + self.d as f64);
            if !(b > 1.0 && b < hi) {
                return bad(format!("beta must lie in (1, {hi}) (got {b})"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if !(self.c_fg > 0.0) || !(self.t_max > 0.0) {
            return bad("c_fg and t_max must be positive".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("N grid must be non-empty with positive entries".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("N grid must be strictly increasing".into());
        }
        match self.experiment {
            ExperimentKind::Rate => {
                if self.n_grid.len() < 2 {
                    return bad("a rate fit needs at least two N values".into());
                }
                if self.reps < 10 {
                    return bad(format!(
                        "reps must be >= 10 for a rate estimate (got {})",
                        self.reps
                    ));
                }
                if self.m_plugin < 2 {
                    return bad("m_plugin must be >= 2".into());
                }
            }
            ExperimentKind::Lowerbound => {
                if self.reps < 10 {
                    return bad(format!(
                        "reps must be >= 10 for a lower-bound estimate (got {})",
                        self.reps
                    ));
                }
                if self.n_grid[0] < 16 {
                    return bad("lower-bound experiments need N >= 16".into());
                }
                if self.d != 1 {
                    return bad("lower-bound experiments run on the line (d = 1)".into());
                }
            }
            ExperimentKind::Verify if self.suite.is_none() => {
                return bad("verify needs a suite".into());
            }
            _ => {}
        }
        Ok(())
    }

    pub fn measure_spec(&self) -> Result<MeasureSpec> {
        MeasureSpec::parse(&self.measure, self.d).map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = ConfigPatch::from_toml(
            "sigma = 0.5\nreps = 20\nn_grid = [32, 64, 128]\nmeasure = \"gaussian\"",
        )
        .unwrap();
        let flags = ConfigPatch {
            reps: Some(30),
            n_grid: Some(parse_grid("16,32").unwrap()),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(ExperimentKind::Rate, &[&file, &flags]).unwrap();
        assert_eq!((c.sigma, c.reps, c.measure.as_str()), (0.5, 30, "gaussian"));
        assert_eq!(c.n_grid, vec![16, 32]);
    }

    #[test]
    fn grid_as_text() {
        let file = ConfigPatch::from_toml("n_grid = \"32, 64\"").unwrap();
        assert_eq!(file.n_grid, Some(vec![32, 64]));
        assert!(ConfigPatch::from_toml("n_grid = \"32,x\"").is_err());
        assert!(ConfigPatch::from_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn invalid_configs() {
        let p = |s: &str| ConfigPatch::from_toml(s).unwrap();
        for bad in [
            "n_grid = [64, 32]",
            "reps = 5",
            "n_grid = [32]",
            "sigma = -1.0",
            "q = 0.5",
            "beta = 3.0",
        ] {
            let r = ExperimentConfig::resolve(ExperimentKind::Rate, &[&p(bad)]);
            assert!(matches!(r, Err(Error::Config(_))), "{bad}");
        }
        assert!(ExperimentConfig::resolve(ExperimentKind::Verify, &[]).is_err());
        assert!("carlson".parse::<Suite>().is_ok() && "nope".parse::<Suite>().is_err());
    }
}
