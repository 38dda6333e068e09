//! Orthonormal coordinates of k-factorial arrays.
//!
//! Each factor's SBP step is lifted to a coefficient vector over all cells;
//! the rows for a subset of two or more factors are the entrywise products
//! of the lifted vectors of its members, rescaled to unit norm. Rows are
//! ordered by subset (size, then factor order) and then by step tuple.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::composition::exp_closed;
use crate::contrast::{ContrastMatrix, CoordinateKey, FactorSubset};
use crate::cube::KCube;
use crate::design::FactorDesign;
use crate::error::{CodaError, Result};
use crate::sbp::{balance_coefficients, balance_scale, mean_pattern};

/// Lifted balance vector of one step of `factor`.
///
/// Cells whose level is in the plus group get `sqrt(q/(p(p+q)M))`, cells in
/// the minus group `-sqrt(p/(q(p+q)M))`, where `M` is the number of cells
/// sharing one level of the factor.
pub fn lift_factor_vector(design: &FactorDesign, factor: usize, step: usize) -> Vec<f64> {
    let spec = &design.factors()[factor];
    let coeffs = balance_coefficients(&spec.steps()[step - 1], spec.levels());
    let others = (design.cell_count() / spec.level_count()) as f64;
    let scale = others.sqrt().recip();
    (0..design.cell_count())
        .map(|flat| coeffs[design.cell_levels(flat)[factor]] * scale)
        .collect()
}

/// Entrywise product of `vectors`, rescaled to unit Euclidean norm.
pub fn hadamard_normalized(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = vectors.first() else {
        return Err(CodaError::Empty);
    };
    let mut out = first.clone();
    for v in &vectors[1..] {
        if v.len() != out.len() {
            return Err(CodaError::LengthMismatch {
                left: out.len(),
                right: v.len(),
            });
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o *= x;
        }
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CodaError::ZeroProduct);
    }
    out.iter_mut().for_each(|x| *x /= norm);
    Ok(out)
}

/// All coordinate keys of a design, in row order.
pub fn coordinate_keys(design: &FactorDesign) -> Vec<CoordinateKey> {
    let mut keys = Vec::new();
    for subset in FactorSubset::all_nonempty(design.k()) {
        let ranges: Vec<usize> = subset
            .factors()
            .iter()
            .map(|&f| design.dims()[f] - 1)
            .collect();
        for steps in step_tuples(&ranges) {
            keys.push(CoordinateKey::new(subset.clone(), steps));
        }
    }
    keys
}

/// Every tuple with entries `1..=range`, lexicographic.
fn step_tuples(ranges: &[usize]) -> Vec<Vec<usize>> {
    ranges.iter().fold(vec![Vec::new()], |acc, &range| {
        acc.into_iter()
            .flat_map(|prefix| {
                (1..=range).map(move |s| {
                    let mut t = prefix.clone();
                    t.push(s);
                    t
                })
            })
            .collect()
    })
}

/// Normalizing constant of a key: `sqrt(prod over S of pq/(p+q) * prod over
/// the other factors of L)`. Dividing a coordinate by it gives the plain mean
/// log-ratio (or mean log-odds ratio) of the groups it compares.
pub fn key_scale(design: &FactorDesign, key: &CoordinateKey) -> f64 {
    let mut sq = 1.0;
    for f in 0..design.k() {
        match key.subset.factors().iter().position(|&g| g == f) {
            Some(i) => {
                let s = balance_scale(&design.factors()[f].steps()[key.steps[i] - 1]);
                sq *= s * s;
            }
            None => sq *= design.dims()[f] as f64,
        }
    }
    sq.sqrt()
}

/// Coefficients of the plain (unnormalized) log-contrast of a key: the
/// product of per-factor mean patterns, averaged over the remaining factors.
pub fn key_pattern(design: &FactorDesign, key: &CoordinateKey) -> Vec<f64> {
    let patterns: Vec<(usize, Vec<f64>)> = key
        .subset
        .factors()
        .iter()
        .zip(&key.steps)
        .map(|(&f, &s)| {
            let spec = &design.factors()[f];
            (f, mean_pattern(&spec.steps()[s - 1], spec.levels()))
        })
        .collect();
    let outside: usize = (0..design.k())
        .filter(|f| !key.subset.contains(*f))
        .map(|f| design.dims()[f])
        .product();
    (0..design.cell_count())
        .map(|flat| {
            let levels = design.cell_levels(flat);
            patterns.iter().map(|(f, p)| p[levels[*f]]).product::<f64>() / outside as f64
        })
        .collect()
}

pub fn build_contrast_matrix(design: &FactorDesign) -> ContrastMatrix {
    let keys = coordinate_keys(design);
    let rows = keys
        .iter()
        .map(|key| {
            let lifted: Vec<Vec<f64>> = key
                .subset
                .factors()
                .iter()
                .zip(&key.steps)
                .map(|(&f, &s)| lift_factor_vector(design, f, s))
                .collect();
            if lifted.len() == 1 {
                lifted.into_iter().next().unwrap()
            } else {
                hadamard_normalized(&lifted).expect("lifted vectors of distinct factors overlap")
            }
        })
        .collect();
    let scales = keys.iter().map(|k| key_scale(design, k)).collect();
    ContrastMatrix::from_rows(design.dims().to_vec(), rows, keys, scales)
}

/// Coordinate values keyed like the rows of a contrast matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSet {
    keys: Vec<CoordinateKey>,
    values: Vec<f64>,
    normalized: bool,
}

impl CoordinateSet {
    pub fn new(keys: Vec<CoordinateKey>, values: Vec<f64>, normalized: bool) -> Result<Self> {
        if keys.len() != values.len() {
            return Err(CodaError::LengthMismatch {
                left: keys.len(),
                right: values.len(),
            });
        }
        Ok(Self {
            keys,
            values,
            normalized,
        })
    }

    pub fn keys(&self) -> &[CoordinateKey] {
        &self.keys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn get(&self, key: &CoordinateKey) -> Option<f64> {
        self.keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps only the keys whose subset is in `groups`.
    pub fn select(&self, groups: &[FactorSubset]) -> Self {
        let (keys, values) = self
            .keys
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| groups.contains(&k.subset))
            .map(|(k, v)| (k.clone(), *v))
            .unzip();
        Self {
            keys,
            values,
            normalized: self.normalized,
        }
    }
}

/// `V ln(vec x)`, divided row-wise by the normalizing constants when
/// `normalized` is false.
pub fn coords(cube: &KCube, v: &ContrastMatrix, normalized: bool) -> Result<CoordinateSet> {
    if cube.dims() != v.dims() {
        return Err(CodaError::DimensionMismatch {
            expected: v.dims().to_vec(),
            found: cube.dims().to_vec(),
        });
    }
    let z = v.apply_log(cube.values());
    let values = if normalized {
        z.iter().copied().collect()
    } else {
        z.iter().zip(v.scales()).map(|(z, s)| z / s).collect()
    };
    CoordinateSet::new(v.keys().to_vec(), values, normalized)
}

/// `closure(exp(V' z))` as a cube over `design`.
pub fn inverse(z: &CoordinateSet, v: &ContrastMatrix, design: Arc<FactorDesign>) -> Result<KCube> {
    if !z.is_normalized() {
        return Err(CodaError::Unnormalized);
    }
    if z.keys() != v.keys() {
        return Err(CodaError::IncompleteCoordinates {
            expected: v.nrows(),
            found: z.keys().iter().filter(|k| v.keys().contains(k)).count(),
        });
    }
    if design.dims() != v.dims() {
        return Err(CodaError::DimensionMismatch {
            expected: v.dims().to_vec(),
            found: design.dims().to_vec(),
        });
    }
    let zv = DVector::from_column_slice(z.values());
    let logs = v.matrix().transpose() * zv;
    KCube::new(design, exp_closed(logs.as_slice()))
}

/// The block of `z` belonging to `subset`, other entries zeroed.
pub fn group_coordinates(z: &CoordinateSet, subset: &FactorSubset) -> Result<CoordinateSet> {
    if !z.keys().iter().any(|k| &k.subset == subset) {
        return Err(CodaError::UnknownGroup(format!("{:?}", subset.factors())));
    }
    let values = z
        .keys()
        .iter()
        .zip(z.values())
        .map(|(k, &v)| if &k.subset == subset { v } else { 0.0 })
        .collect();
    CoordinateSet::new(z.keys().to_vec(), values, z.is_normalized())
}

/// Log-contrasts `T V' z`; every row of `t` must sum to zero.
pub fn transform_logcontrasts(
    t: &DMatrix<f64>,
    v: &ContrastMatrix,
    z: &CoordinateSet,
) -> Result<DVector<f64>> {
    if t.ncols() != v.ncols() {
        return Err(CodaError::LengthMismatch {
            left: v.ncols(),
            right: t.ncols(),
        });
    }
    if !z.is_normalized() {
        return Err(CodaError::Unnormalized);
    }
    if z.len() != v.nrows() {
        return Err(CodaError::IncompleteCoordinates {
            expected: v.nrows(),
            found: z.len(),
        });
    }
    for (row, r) in t.row_iter().enumerate() {
        let sum = r.sum();
        let scale = r.amax().max(1.0);
        if sum.abs() > 1e-10 * scale {
            return Err(CodaError::NotLogContrast { row, sum });
        }
    }
    let zv = DVector::from_column_slice(z.values());
    Ok(t * (v.matrix().transpose() * zv))
}
