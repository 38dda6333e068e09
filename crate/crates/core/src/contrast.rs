use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

/// A non-empty set of factor indices, kept sorted.
///
/// Ordered by size first, then lexicographically, which is the row order of
/// every contrast matrix built by this crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactorSubset(Vec<usize>);

impl FactorSubset {
    pub fn new(mut factors: Vec<usize>) -> Self {
        factors.sort_unstable();
        factors.dedup();
        Self(factors)
    }

    pub fn single(factor: usize) -> Self {
        Self(vec![factor])
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, factor: usize) -> bool {
        self.0.binary_search(&factor).is_ok()
    }

    /// All non-empty subsets of `0..k` in canonical order.
    pub fn all_nonempty(k: usize) -> Vec<FactorSubset> {
        let mut out: Vec<FactorSubset> = (1u64..(1u64 << k))
            .map(|mask| Self((0..k).filter(|f| mask & (1 << f) != 0).collect()))
            .collect();
        out.sort();
        out
    }

    /// Every subset (including the empty one and `self`), in no particular order.
    pub fn power_set(&self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        (0u64..(1u64 << n))
            .map(|mask| {
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.0[i])
                    .collect()
            })
            .collect()
    }
}

impl Ord for FactorSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for FactorSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Identifies one coordinate: a factor subset plus one 1-based SBP step per
/// factor in the subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordinateKey {
    pub subset: FactorSubset,
    pub steps: Vec<usize>,
}

impl CoordinateKey {
    pub fn new(subset: FactorSubset, steps: Vec<usize>) -> Self {
        debug_assert_eq!(subset.len(), steps.len());
        Self { subset, steps }
    }
}

/// Orthonormal log-contrast matrix: one row per coordinate, one column per
/// cell of the vectorized cube.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastMatrix {
    dims: Vec<usize>,
    matrix: DMatrix<f64>,
    keys: Vec<CoordinateKey>,
    scales: Vec<f64>,
}

impl ContrastMatrix {
    pub(crate) fn from_rows(
        dims: Vec<usize>,
        rows: Vec<Vec<f64>>,
        keys: Vec<CoordinateKey>,
        scales: Vec<f64>,
    ) -> Self {
        let ncols = dims.iter().product::<usize>();
        let nrows = rows.len();
        assert_eq!(keys.len(), nrows);
        assert_eq!(scales.len(), nrows);
        let matrix = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
        Self {
            dims,
            matrix,
            keys,
            scales,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn keys(&self) -> &[CoordinateKey] {
        &self.keys
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// Normalizing constant of each row: the factor turning a plain mean
    /// log-ratio (or mean log-odds ratio) into an orthonormal coordinate.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// max |V V' - I|.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = &self.matrix * self.matrix.transpose();
        let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
        (gram - eye).amax()
    }

    /// max |row sum|.
    pub fn max_row_sum(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }

    /// V ln(x) for a vectorized positive array.
    pub(crate) fn apply_log(&self, values: &[f64]) -> DVector<f64> {
        let logs = DVector::from_iterator(values.len(), values.iter().map(|v| v.ln()));
        &self.matrix * logs
    }
}
