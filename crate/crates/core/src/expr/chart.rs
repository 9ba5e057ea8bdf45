use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Func;

/// How the coordinates of a chart are to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Plain,
    /// `(q¹..qⁿ, v¹..vⁿ)`: base positions then velocities.
    Tangent,
    /// `(q¹..qⁿ, p₁..pₙ)`: base positions then momenta.
    Cotangent,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("chart dimension must be positive")]
    Empty,
    #[error("{0:?} chart needs an even dimension, got {1}")]
    OddBundle(Flavor, usize),
    #[error("coordinate name `{0}` is used twice")]
    DuplicateName(String),
    #[error("`{0}` is not a valid coordinate name")]
    InvalidName(String),
}

/// A single global coordinate chart: names plus a flavor tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Chart {
    names: Arc<[String]>,
    flavor: Flavor,
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S], flavor: Flavor) -> Result<Chart, ChartError> {
        if names.is_empty() {
            return Err(ChartError::Empty);
        }
        if flavor != Flavor::Plain && !names.len().is_multiple_of(2) {
            return Err(ChartError::OddBundle(flavor, names.len()));
        }
        let mut out: Vec<String> = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let valid = n
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || Func::from_name(n).is_some() {
                return Err(ChartError::InvalidName(n.to_string()));
            }
            if out.iter().any(|m| m == n) {
                return Err(ChartError::DuplicateName(n.to_string()));
            }
            out.push(n.to_string());
        }
        Ok(Chart {
            names: out.into(),
            flavor,
        })
    }

    /// Plain chart with the given names.
    pub fn plain<S: AsRef<str>>(names: &[S]) -> Chart {
        Chart::new(names, Flavor::Plain).expect("valid plain chart")
    }

    /// `(q1..qn, p1..pn)`.
    pub fn cotangent(n: usize) -> Chart {
        let names: Vec<String> = (1..=n)
            .map(|i| format!("q{i}"))
            .chain((1..=n).map(|i| format!("p{i}")))
            .collect();
        Chart::new(&names, Flavor::Cotangent).expect("valid cotangent chart")
    }

    /// `(q1..qn, v1..vn)`.
    pub fn tangent(n: usize) -> Chart {
        let names: Vec<String> = (1..=n)
            .map(|i| format!("q{i}"))
            .chain((1..=n).map(|i| format!("v{i}")))
            .collect();
        Chart::new(&names, Flavor::Tangent).expect("valid tangent chart")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Dimension of the base for bundle charts, the full dimension otherwise.
    pub fn base_dim(&self) -> usize {
        match self.flavor {
            Flavor::Plain => self.dim(),
            _ => self.dim() / 2,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Chart made of the first `base_dim` coordinates of a bundle chart.
    pub fn base(&self) -> Chart {
        Chart {
            names: self.names[..self.base_dim()].to_vec().into(),
            flavor: Flavor::Plain,
        }
    }
}
