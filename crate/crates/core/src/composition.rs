//! Aitchison geometry on strictly positive vectors.
//!
//! A [`Composition`] carries relative information only: two compositions that
//! differ by a positive factor are the same point of the simplex. Operations
//! return closed representatives (sum 1) unless noted otherwise.

use crate::error::{CodaError, Result};

/// Relative tolerance used by [`Composition::approx_eq`].
pub const COMPARE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Composition {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(CodaError::TooFewParts(values.len()));
        }
        check_positive(&values)?;
        Ok(Self {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(CodaError::LengthMismatch {
                left: values.len(),
                right: labels.len(),
            });
        }
        let mut c = Self::new(values)?;
        c.labels = Some(labels);
        Ok(c)
    }

    /// The neutral element (1, ..., 1) closed to sum 1.
    pub fn uniform(parts: usize) -> Result<Self> {
        Self::new(vec![1.0; parts]).map(|c| c.closed())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Rescales to sum `kappa`.
    pub fn closure(&self, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(CodaError::InvalidClosure(kappa));
        }
        Ok(Self {
            values: close(&self.values, kappa),
            labels: self.labels.clone(),
        })
    }

    /// Closure to sum 1.
    pub fn closed(&self) -> Self {
        Self {
            values: close(&self.values, 1.0),
            labels: self.labels.clone(),
        }
    }

    pub fn perturb(&self, other: &Self) -> Result<Self> {
        self.same_len(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect::<Vec<_>>();
        Ok(Self {
            values: close(&values, 1.0),
            labels: self.labels.clone(),
        })
    }

    /// Perturbation by the inverse of `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.perturb(&other.power(-1.0))
    }

    pub fn power(&self, alpha: f64) -> Self {
        // Work in log space so extreme exponents do not overflow before closure.
        let logs = self
            .values
            .iter()
            .map(|v| alpha * v.ln())
            .collect::<Vec<_>>();
        Self {
            values: exp_closed(&logs),
            labels: self.labels.clone(),
        }
    }

    /// Centred log-ratio coefficients: ln x_i - mean(ln x).
    pub fn clr(&self) -> Vec<f64> {
        clr(&self.values)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_len(other)?;
        Ok(aitchison_inner_unchecked(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        aitchison_inner_unchecked(&self.values, &self.values)
            .max(0.0)
            .sqrt()
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.difference(other)?.norm())
    }

    /// Equality of the closed representatives, componentwise with relative
    /// tolerance [`COMPARE_RTOL`].
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let a = close(&self.values, 1.0);
        let b = close(&other.values, 1.0);
        a.iter()
            .zip(&b)
            .all(|(x, y)| (x - y).abs() <= COMPARE_RTOL * x.abs().max(y.abs()))
    }

    fn same_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(CodaError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }
}

pub fn closure(x: &Composition, kappa: f64) -> Result<Composition> {
    x.closure(kappa)
}

pub fn perturb(x: &Composition, y: &Composition) -> Result<Composition> {
    x.perturb(y)
}

pub fn power(x: &Composition, alpha: f64) -> Composition {
    x.power(alpha)
}

pub fn aitchison_inner(x: &Composition, y: &Composition) -> Result<f64> {
    x.inner(y)
}

pub fn aitchison_norm(x: &Composition) -> f64 {
    x.norm()
}

pub fn aitchison_dist(x: &Composition, y: &Composition) -> Result<f64> {
    x.distance(y)
}

/// exp of the mean of logs.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(CodaError::Empty);
    }
    check_positive(values)?;
    Ok(mean_log(values).exp())
}

pub(crate) fn check_positive(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        // also rejects NaN
        if !value.is_finite() || value <= 0.0 {
            return Err(CodaError::NonPositive { index, value });
        }
    }
    Ok(())
}

pub(crate) fn mean_log(values: &[f64]) -> f64 {
    values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64
}

pub(crate) fn close(values: &[f64], kappa: f64) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    values.iter().map(|v| kappa * v / total).collect()
}

/// exp of log values shifted by their maximum, closed to sum 1.
pub(crate) fn exp_closed(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = logs.iter().map(|l| (l - max).exp()).collect::<Vec<_>>();
    close(&raw, 1.0)
}

pub(crate) fn clr(values: &[f64]) -> Vec<f64> {
    let m = mean_log(values);
    values.iter().map(|v| v.ln() - m).collect()
}

/// Inner product through clr coefficients; equal to the pairwise
/// double sum of log-ratio products divided by 2D.
pub(crate) fn aitchison_inner_unchecked(x: &[f64], y: &[f64]) -> f64 {
    clr(x).iter().zip(clr(y)).map(|(a, b)| a * b).sum()
}
