use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engine::{LearningRate, TruncationBounds};
use crate::error::{Error, Result};
use crate::pipeline::InitScheme;

/// Where the observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Fit one Gaussian per class of a labeled CSV, then draw `n` fresh observations per repetition.
    TemplateCsv { path: PathBuf, n: usize },
    /// Draw `n` fresh observations per repetition from a parameter file.
    Theta { path: PathBuf, n: usize },
    /// MNIST IDX files in `dir`: constant pixels dropped, then projected on `d_pc` principal components.
    Idx {
        dir: PathBuf,
        d_pc: usize,
        /// Keep only the first `limit` images.
        #[serde(default)]
        limit: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    BatchEm,
    Minibatch,
    MinibatchPolyak,
    MinibatchTruncated,
    MinibatchTruncatedPolyak,
    Kmeans,
}

impl VariantKind {
    pub const ALL_EM: [VariantKind; 5] = [
        VariantKind::BatchEm,
        VariantKind::Minibatch,
        VariantKind::MinibatchPolyak,
        VariantKind::MinibatchTruncated,
        VariantKind::MinibatchTruncatedPolyak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::BatchEm => "batch-em",
            VariantKind::Minibatch => "minibatch",
            VariantKind::MinibatchPolyak => "minibatch-polyak",
            VariantKind::MinibatchTruncated => "minibatch-truncated",
            VariantKind::MinibatchTruncatedPolyak => "minibatch-truncated-polyak",
            VariantKind::Kmeans => "kmeans",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Self::ALL_EM.as_slice(), &[VariantKind::Kmeans]]
            .concat()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown variant {s:?}")))
    }

    pub fn is_minibatch(self) -> bool {
        !matches!(self, VariantKind::BatchEm | VariantKind::Kmeans)
    }

    pub fn polyak(self) -> bool {
        matches!(self, VariantKind::MinibatchPolyak | VariantKind::MinibatchTruncatedPolyak)
    }

    pub fn truncated(self) -> bool {
        matches!(self, VariantKind::MinibatchTruncated | VariantKind::MinibatchTruncatedPolyak)
    }
}

/// One column of the grid: a kind and, for mini-batch kinds, the batch fraction `N/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub kind: VariantKind,
    pub batch_fraction: Option<f64>,
}

impl Variant {
    /// `N = max(1, ⌊n · fraction⌋)`; `None` for non-mini-batch kinds.
    pub fn batch_size(&self, n: usize) -> Option<usize> {
        self.batch_fraction.map(|f| ((n as f64 * f).floor() as usize).clamp(1, n))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.batch_fraction {
            Some(frac) => write!(f, "{}@{frac}", self.kind.name()),
            None => f.write_str(self.kind.name()),
        }
    }
}

fn default_fractions() -> Vec<f64> {
    vec![0.1, 0.2]
}
fn default_truncation() -> TruncationBounds {
    TruncationBounds::uniform(1000.0).expect("valid")
}
fn default_epochs() -> usize {
    10
}
fn default_one() -> usize {
    1
}
fn default_variants() -> Vec<VariantKind> {
    VariantKind::ALL_EM.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub source: DataSource,
    /// Number of components; defaults to the template's class count.
    #[serde(default)]
    pub g: Option<usize>,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantKind>,
    #[serde(default = "default_fractions")]
    pub batch_fractions: Vec<f64>,
    #[serde(default)]
    pub learning_rate: LearningRate,
    #[serde(default = "default_truncation")]
    pub truncation: TruncationBounds,
    #[serde(default)]
    pub init: InitScheme,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Repetitions evaluated concurrently.
    #[serde(default = "default_one")]
    pub workers: usize,
    /// Report the Euclidean distance instead of its square.
    #[serde(default)]
    pub se_root: bool,
    /// Report the mean log-likelihood per observation instead of the total.
    #[serde(default)]
    pub per_observation: bool,
}

impl ExperimentSpec {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            g: None,
            variants: default_variants(),
            batch_fractions: default_fractions(),
            learning_rate: LearningRate::default(),
            truncation: default_truncation(),
            init: InitScheme::default(),
            epochs: default_epochs(),
            repetitions: 1,
            seed: 0,
            workers: 1,
            se_root: false,
            per_observation: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        LearningRate::new(self.learning_rate.gamma0(), self.learning_rate.alpha())?;
        let t = self.truncation;
        TruncationBounds::new(t.c1, t.c2, t.c3)?;
        if self.epochs == 0 || self.repetitions == 0 || self.workers == 0 {
            return Err(Error::invalid("epochs, repetitions and workers must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::invalid("no variants selected"));
        }
        if self.g == Some(0) {
            return Err(Error::invalid("g must be at least 1"));
        }
        if self.variants.iter().any(|k| k.is_minibatch()) {
            if self.batch_fractions.is_empty() {
                return Err(Error::invalid("mini-batch variants need at least one batch fraction"));
            }
            if let Some(f) = self.batch_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                return Err(Error::invalid(format!("batch fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// The grid columns in output order: kinds in listed order, each mini-batch kind
    /// expanded over the batch fractions. Duplicates are removed.
    pub fn expand_variants(&self) -> Vec<Variant> {
        let mut out: Vec<Variant> = Vec::new();
        for &kind in &self.variants {
            let fractions: Vec<Option<f64>> = if kind.is_minibatch() {
                self.batch_fractions.iter().map(|&f| Some(f)).collect()
            } else {
                vec![None]
            };
            for batch_fraction in fractions {
                let v = Variant { kind, batch_fraction };
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}
