// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finite families of moment functions identifying the tracked feature.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::SeriesSample;

/// Which stochastic feature is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Mean,
    Variance,
    /// Autocovariances up to `lag` of a univariate series.
    Autocovariance { lag: usize },
    /// All covariances `x_i x_j, i <= j` of a multivariate series.
    CrossCovariance,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Mean => f.write_str("mean"),
            FeatureKind::Variance => f.write_str("variance"),
            FeatureKind::Autocovariance { lag } => write!(f, "acf:{lag}"),
            FeatureKind::CrossCovariance => f.write_str("cov"),
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FeatureKind::Mean),
            "variance" => Ok(FeatureKind::Variance),
            "cov" => Ok(FeatureKind::CrossCovariance),
            _ => match s.strip_prefix("acf:").map(str::parse::<usize>) {
                Some(Ok(lag)) => Ok(FeatureKind::Autocovariance { lag }),
                _ => Err(Error::UnknownIdentifier(s.to_owned())),
            },
        }
    }
}

impl Serialize for FeatureKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A moment function `f: R^d -> R`.
#[derive(Clone)]
pub enum MomentFn {
    /// `x_i`
    Coordinate(usize),
    /// `x_i * x_j`
    Product(usize, usize),
    Custom {
        label: String,
        eval: MomentEval,
    },
}

pub type MomentEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

impl MomentFn {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MomentFn::Coordinate(i) => x[*i],
            MomentFn::Product(i, j) => x[*i] * x[*j],
            MomentFn::Custom { eval, .. } => eval(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            MomentFn::Coordinate(i) => format!("x{}", i + 1),
            MomentFn::Product(i, j) => format!("x{}*x{}", i + 1, j + 1),
            MomentFn::Custom { label, .. } => label.clone(),
        }
    }
}

impl fmt::Debug for MomentFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// An ordered, non-empty set of moment functions plus the input dimension
/// they expect.
#[derive(Debug, Clone)]
pub struct FeatureFamily {
    kind: Option<FeatureKind>,
    functions: Vec<MomentFn>,
    required_dim: usize,
    embedding_lag: usize,
}

impl FeatureFamily {
    /// Builds the family for `kind`. `dim` is the dimension of the observed
    /// series and only matters for [`FeatureKind::CrossCovariance`].
    pub fn new(kind: FeatureKind, dim: usize) -> Result<Self> {
        let (functions, required_dim, embedding_lag) = match kind {
            FeatureKind::Mean => (vec![MomentFn::Coordinate(0)], 1, 0),
            FeatureKind::Variance => (vec![MomentFn::Product(0, 0)], 1, 0),
            FeatureKind::Autocovariance { lag } => (
                (0..=lag).map(|l| MomentFn::Product(0, l)).collect(),
                lag + 1,
                lag,
            ),
            FeatureKind::CrossCovariance => {
                if dim == 0 {
                    return Err(Error::InvalidParameter("dimension must be >= 1".into()));
                }
                let mut fs = Vec::with_capacity(dim * (dim + 1) / 2);
                for i in 0..dim {
                    for j in i..dim {
                        fs.push(MomentFn::Product(i, j));
                    }
                }
                (fs, dim, 0)
            }
        };
        Ok(Self {
            kind: Some(kind),
            functions,
            required_dim,
            embedding_lag,
        })
    }

    /// A family of caller-supplied moment functions on `R^dim`.
    pub fn custom(functions: Vec<MomentFn>, dim: usize) -> Result<Self> {
        if functions.is_empty() || dim == 0 {
            return Err(Error::InvalidParameter(
                "custom family needs at least one function and dim >= 1".into(),
            ));
        }
        let fam = Self {
            kind: None,
            functions,
            required_dim: dim,
            embedding_lag: 0,
        };
        let labels = fam.labels();
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate label `{l}`")));
            }
        }
        Ok(fam)
    }

    pub fn kind(&self) -> Option<FeatureKind> {
        self.kind
    }

    pub fn functions(&self) -> &[MomentFn] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn required_dim(&self) -> usize {
        self.required_dim
    }

    pub fn embedding_lag(&self) -> usize {
        self.embedding_lag
    }

    pub fn labels(&self) -> Vec<String> {
        self.functions.iter().map(MomentFn::label).collect()
    }

    pub fn check_dimension(&self, dim: usize) -> Result<()> {
        if dim == self.required_dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.required_dim,
                found: dim,
            })
        }
    }

    /// Evaluates every function on every row: `T x k`, row-major.
    pub fn evaluate(&self, sample: &SeriesSample) -> Result<Vec<Vec<f64>>> {
        self.check_dimension(sample.dim())?;
        Ok(self
            .functions
            .iter()
            .map(|f| sample.rows().map(|r| f.eval(r)).collect())
            .collect())
    }
}

/// Stacks `p` lags of a univariate series: row `t` becomes
/// `(Y_{t+p}, Y_{t+p-1}, ..., Y_t)`, leaving `T - p` rows.
///
/// Row `t'` of the result (1-based) corresponds to original time `(t' + p)/T`.
pub fn embed_lags(sample: &SeriesSample, p: usize) -> Result<SeriesSample> {
    if sample.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sample.dim(),
        });
    }
    let t = sample.len();
    if t <= p {
        return Err(Error::LagTooLarge { p, t });
    }
    let y = sample.values();
    let mut out = Vec::with_capacity((t - p) * (p + 1));
    for s in 0..t - p {
        out.extend((0..=p).map(|l| y[s + p - l]));
    }
    let mut embedded = SeriesSample::from_rows(out, p + 1)?;
    if let Some(o) = sample.origin() {
        embedded = embedded.with_origin(o.clone());
    }
    Ok(embedded)
}
