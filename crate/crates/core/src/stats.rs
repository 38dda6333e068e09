//! Sample-level statistics on coordinates of aligned cubes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contrast::{ContrastMatrix, CoordinateKey, FactorSubset};
use crate::coordinates::coords;
use crate::cube::KCube;
use crate::error::{CodaError, Result};

/// Cubes sharing one factor design.
#[derive(Debug, Clone)]
pub struct CubeSample {
    cubes: Vec<KCube>,
    ids: Vec<String>,
}

impl CubeSample {
    /// Observation ids come from the cubes, falling back to 1-based positions.
    pub fn new(cubes: Vec<KCube>) -> Result<Self> {
        let Some(first) = cubes.first() else {
            return Err(CodaError::EmptySample);
        };
        for c in &cubes[1..] {
            if c.design() != first.design() {
                return Err(CodaError::DimensionMismatch {
                    expected: first.dims().to_vec(),
                    found: c.dims().to_vec(),
                });
            }
        }
        let ids = cubes
            .iter()
            .enumerate()
            .map(|(i, c)| c.id().map_or_else(|| (i + 1).to_string(), str::to_string))
            .collect();
        Ok(Self { cubes, ids })
    }

    pub fn cubes(&self) -> &[KCube] {
        &self.cubes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Cellwise geometric mean of the sample.
    pub fn center(&self) -> KCube {
        let n = self.cubes.len() as f64;
        let mut logs = vec![0.0; self.cubes[0].values().len()];
        for c in &self.cubes {
            for (acc, v) in logs.iter_mut().zip(c.values()) {
                *acc += v.ln() / n;
            }
        }
        KCube::from_log_values(self.cubes[0].design().clone(), &logs)
            .expect("geometric means of positive cells are positive")
    }
}

/// Observations (rows) by coordinates (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMatrix {
    pub keys: Vec<CoordinateKey>,
    pub ids: Vec<String>,
    pub values: DMatrix<f64>,
}

impl CoordinateMatrix {
    /// Keeps the columns whose subset is in `groups`.
    pub fn select(&self, groups: &[FactorSubset]) -> Self {
        let cols: Vec<usize> = self
            .keys
            .iter()
            .enumerate()
            .filter(|(_, k)| groups.contains(&k.subset))
            .map(|(i, _)| i)
            .collect();
        Self {
            keys: cols.iter().map(|&i| self.keys[i].clone()).collect(),
            ids: self.ids.clone(),
            values: self.values.select_columns(&cols),
        }
    }
}

pub fn coordinate_matrix(
    sample: &CubeSample,
    v: &ContrastMatrix,
    normalized: bool,
) -> Result<CoordinateMatrix> {
    let rows = sample
        .cubes()
        .par_iter()
        .map(|c| coords(c, v, normalized))
        .collect::<Result<Vec<_>>>()?;
    let values = DMatrix::from_fn(rows.len(), v.nrows(), |i, j| rows[i].values()[j]);
    Ok(CoordinateMatrix {
        keys: v.keys().to_vec(),
        ids: sample.ids().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
}

pub fn mean_sd(matrix: &DMatrix<f64>) -> Result<Vec<ColumnSummary>> {
    let n = matrix.nrows();
    if n < 2 {
        return Err(CodaError::TooFewObservations {
            needed: 2,
            found: n,
        });
    }
    Ok(matrix
        .column_iter()
        .map(|col| {
            // shifted by the first value so constant columns are exact
            let shift = col[0];
            let d_mean = col.iter().map(|x| x - shift).sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - shift - d_mean).powi(2)).sum();
            ColumnSummary {
                mean: shift + d_mean,
                sd: (ss / (n - 1) as f64).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 1000,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < 100 {
            return Err(CodaError::InvalidBootstrap(format!(
                "need at least 100 resamples, got {}",
                self.resamples
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CodaError::InvalidBootstrap(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiEntry {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapCi {
    pub entries: Vec<CiEntry>,
    pub config: BootstrapConfig,
}

/// Nearest-rank quantile of sorted data: the value at rank `ceil(p n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // the small offset keeps exact products like 0.975 * 1000 from rounding up a rank
    let rank = (p * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Column means of `matrix` over rows drawn with replacement, one
/// independent ChaCha stream per resample.
pub fn bootstrap_means(matrix: &DMatrix<f64>, resamples: usize, seed: u64) -> Vec<Vec<f64>> {
    let (n, m) = matrix.shape();
    let shift: Vec<f64> = (0..m).map(|j| matrix[(0, j)]).collect();
    (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut sums = vec![0.0; m];
            for _ in 0..n {
                let row = rng.random_range(0..n);
                for (j, s) in sums.iter_mut().enumerate() {
                    *s += matrix[(row, j)] - shift[j];
                }
            }
            sums.iter()
                .zip(&shift)
                .map(|(s, c)| c + s / n as f64)
                .collect()
        })
        .collect()
}

/// Percentile bootstrap intervals for the column means.
pub fn bootstrap_ci(matrix: &DMatrix<f64>, config: BootstrapConfig) -> Result<BootstrapCi> {
    config.validate()?;
    let summary = mean_sd(matrix)?;
    let means = bootstrap_means(matrix, config.resamples, config.seed);
    let entries = summary
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let mut dist: Vec<f64> = means.iter().map(|row| row[j]).collect();
            dist.sort_by(f64::total_cmp);
            CiEntry {
                mean: s.mean,
                sd: s.sd,
                lower: nearest_rank(&dist, config.alpha / 2.0),
                upper: nearest_rank(&dist, 1.0 - config.alpha / 2.0),
            }
        })
        .collect();
    Ok(BootstrapCi { entries, config })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub keys: Vec<CoordinateKey>,
    pub ids: Vec<String>,
    /// Coordinates by components; columns are unit eigenvectors.
    pub loadings: DMatrix<f64>,
    /// Observations by components.
    pub scores: DMatrix<f64>,
    /// Eigenvalues of the sample covariance, decreasing, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub explained: Vec<f64>,
    pub center: Vec<f64>,
    /// Set when the total variance is zero; `explained` is then all zeros.
    pub degenerate: bool,
    /// Selected columns with zero variance.
    pub zero_variance: Vec<usize>,
}

/// Classical PCA on the columns selected by `groups` (all when `None`).
pub fn pca(matrix: &CoordinateMatrix, groups: Option<&[FactorSubset]>) -> Result<PcaResult> {
    let selected = match groups {
        Some(g) => matrix.select(g),
        None => matrix.clone(),
    };
    let mut out = pca_matrix(&selected.values)?;
    out.keys = selected.keys;
    out.ids = selected.ids;
    Ok(out)
}

/// Sample covariance (n - 1 denominator) of the columns.
pub fn covariance(matrix: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    let center = matrix.row_mean().transpose();
    let mut centered = matrix.clone();
    for mut row in centered.row_iter_mut() {
        row -= center.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (center, cov)
}

pub fn pca_matrix(matrix: &DMatrix<f64>) -> Result<PcaResult> {
    let (n, m) = matrix.shape();
    if n < 2 {
        return Err(CodaError::TooFewObservations {
            needed: 2,
            found: n,
        });
    }
    if m == 0 {
        return Err(CodaError::NoColumns);
    }
    let (center, cov) = covariance(matrix);
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut loadings = DMatrix::zeros(m, m);
    let mut eigenvalues = Vec::with_capacity(m);
    for (c, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        let lead = v.iamax();
        if v[lead] < 0.0 {
            v = -v;
        }
        loadings.set_column(c, &v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }

    let mut centered = matrix.clone();
    for mut row in centered.row_iter_mut() {
        row -= center.transpose();
    }
    let scores = centered * &loadings;

    let total: f64 = eigenvalues.iter().sum();
    let degenerate = total.is_nan() || total <= 0.0;
    let explained = if degenerate {
        vec![0.0; m]
    } else {
        eigenvalues.iter().map(|e| e / total).collect()
    };
    let zero_variance = (0..m).filter(|&j| cov[(j, j)] <= 0.0).collect();
    Ok(PcaResult {
        keys: Vec::new(),
        ids: Vec::new(),
        loadings,
        scores,
        eigenvalues,
        explained,
        center: center.iter().copied().collect(),
        degenerate,
        zero_variance,
    })
}
