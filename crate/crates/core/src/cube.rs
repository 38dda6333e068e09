//! k-factorial positive arrays and their orthogonal decomposition into an
//! independent part and one interaction part per factor subset of size >= 2.
//!
//! Parts are kept unclosed. The independent part is the product of the
//! single-factor geometric marginals, and the interaction part of a subset
//! `S` is, on the log scale,
//!
//! ```text
//! ln int_S = sum over non-empty T ⊆ S of (-1)^(|S|-|T|) ln g_T
//! ```
//!
//! where `g_T` is the geometric marginal keeping the factors in `T`. For
//! three factors this is exactly `g_ij / (g_i g_j)` for pairs and
//! `x g_i g_j g_k / (g_ij g_ik g_jk)` for the triple, and for any k the
//! parts multiply back to the original array cell by cell. Including the
//! `T = ∅` term would give the plain Möbius inversion, which differs only by
//! a constant factor per part and is therefore the same composition.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::composition::{close, Composition};
use crate::contrast::FactorSubset;
use crate::design::FactorDesign;
use crate::error::{CodaError, Result};

/// One long-format record: a level name per factor and the cell value.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub levels: Vec<String>,
    pub value: f64,
    /// Source line for diagnostics.
    pub line: Option<u64>,
}

impl CellRecord {
    pub fn new<S: AsRef<str>>(levels: &[S], value: f64) -> Self {
        Self {
            levels: levels.iter().map(|l| l.as_ref().to_string()).collect(),
            value,
            line: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCube {
    design: Arc<FactorDesign>,
    data: Vec<f64>,
    id: Option<String>,
}

impl KCube {
    /// `data` must be in canonical order (last factor fastest).
    pub fn new(design: Arc<FactorDesign>, data: Vec<f64>) -> Result<Self> {
        if data.len() != design.cell_count() {
            return Err(CodaError::LengthMismatch {
                left: design.cell_count(),
                right: data.len(),
            });
        }
        for (i, &value) in data.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(CodaError::NonPositiveCell {
                    cell: design.cell_names(i),
                    value,
                    line: None,
                });
            }
        }
        Ok(Self {
            design,
            data,
            id: None,
        })
    }

    pub fn from_log_values(design: Arc<FactorDesign>, logs: &[f64]) -> Result<Self> {
        Self::new(design, logs.iter().map(|l| l.exp()).collect())
    }

    pub fn from_long_records(design: Arc<FactorDesign>, records: &[CellRecord]) -> Result<Self> {
        let mut data = vec![f64::NAN; design.cell_count()];
        let mut filled = vec![false; data.len()];
        for rec in records {
            if rec.levels.len() != design.k() {
                return Err(CodaError::RecordArity {
                    expected: design.k(),
                    found: rec.levels.len(),
                    line: rec.line,
                });
            }
            let mut idx = Vec::with_capacity(design.k());
            for (f, level) in design.factors().iter().zip(&rec.levels) {
                let l = f
                    .level_index(level)
                    .ok_or_else(|| CodaError::UnknownCellLevel {
                        factor: f.name().to_string(),
                        level: level.clone(),
                        line: rec.line,
                    })?;
                idx.push(l);
            }
            if !rec.value.is_finite() || rec.value <= 0.0 {
                return Err(CodaError::NonPositiveCell {
                    cell: rec.levels.clone(),
                    value: rec.value,
                    line: rec.line,
                });
            }
            let flat = design.flat_index(&idx);
            if filled[flat] {
                return Err(CodaError::DuplicateCell {
                    cell: rec.levels.clone(),
                    line: rec.line,
                });
            }
            filled[flat] = true;
            data[flat] = rec.value;
        }
        if let Some(missing) = filled.iter().position(|f| !f) {
            return Err(CodaError::MissingCell {
                cell: design.cell_names(missing),
                line: None,
            });
        }
        Self::new(design, data)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    pub fn design(&self) -> &Arc<FactorDesign> {
        &self.design
    }

    pub fn dims(&self) -> &[usize] {
        self.design.dims()
    }

    /// Vectorized cells, last factor fastest.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.ln()).collect()
    }

    pub fn get(&self, levels: &[usize]) -> f64 {
        self.data[self.design.flat_index(levels)]
    }

    pub fn to_composition(&self) -> Composition {
        Composition::new(self.data.clone()).expect("cube cells are positive")
    }

    pub fn closed(&self, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(CodaError::InvalidClosure(kappa));
        }
        Ok(self.with_data(close(&self.data, kappa)))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.design.clone(),
            self.data.iter().map(|v| v * factor).collect(),
        )
        .map(|c| self.keep_id(c))
    }

    /// Cellwise product (perturbation without closure).
    pub fn perturb(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        ))
    }

    /// Cellwise quotient (perturbation by the inverse, without closure).
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a / b)
                .collect(),
        ))
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.to_composition().approx_eq(&other.to_composition())
    }

    fn with_data(&self, data: Vec<f64>) -> Self {
        Self {
            design: self.design.clone(),
            data,
            id: self.id.clone(),
        }
    }

    fn keep_id(&self, mut cube: Self) -> Self {
        cube.id = self.id.clone();
        cube
    }

    pub(crate) fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(CodaError::DimensionMismatch {
                expected: self.dims().to_vec(),
                found: other.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Geometric marginal over the named factors (all others aggregated).
    pub fn geo_marginal<S: AsRef<str>>(&self, keep: &[S]) -> Result<Marginal> {
        let idx = keep
            .iter()
            .map(|n| self.design.factor_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.geo_marginal_by_index(&idx))
    }

    pub fn geo_marginal_by_index(&self, keep: &[usize]) -> Marginal {
        let mut factors = keep.to_vec();
        factors.sort_unstable();
        factors.dedup();
        let logs = self.log_marginal(&factors);
        let dims = factors.iter().map(|&f| self.dims()[f]).collect();
        Marginal {
            factors,
            dims,
            values: logs.into_iter().map(f64::exp).collect(),
        }
    }

    /// Mean log over cells sharing the kept levels, as an array over the
    /// kept dimensions (last kept factor fastest).
    fn log_marginal(&self, keep: &[usize]) -> Vec<f64> {
        let (size, positions) = self.marginal_positions(keep);
        let mut sums = vec![0.0; size];
        for (v, &p) in self.data.iter().zip(&positions) {
            sums[p] += v.ln();
        }
        let count = (self.data.len() / size) as f64;
        sums.into_iter().map(|s| s / count).collect()
    }

    /// For every cell, its position in the marginal array over `keep`.
    fn marginal_positions(&self, keep: &[usize]) -> (usize, Vec<usize>) {
        let dims = self.dims();
        let size: usize = keep.iter().map(|&f| dims[f]).product();
        let positions = (0..self.data.len())
            .map(|flat| {
                let levels = self.design.cell_levels(flat);
                keep.iter().fold(0, |acc, &f| acc * dims[f] + levels[f])
            })
            .collect();
        (size, positions)
    }

    /// Log marginal over `keep` broadcast back to every cell.
    fn broadcast_log_marginal(&self, keep: &[usize]) -> Vec<f64> {
        let marginal = self.log_marginal(keep);
        let (_, positions) = self.marginal_positions(keep);
        positions.into_iter().map(|p| marginal[p]).collect()
    }

    /// Product of the single-factor geometric marginals.
    pub fn independence_part(&self) -> Self {
        let mut logs = vec![0.0; self.data.len()];
        for f in 0..self.design.k() {
            for (acc, m) in logs.iter_mut().zip(self.broadcast_log_marginal(&[f])) {
                *acc += m;
            }
        }
        self.with_data(logs.into_iter().map(f64::exp).collect())
    }

    /// The cube divided by its independence part.
    pub fn full_interactive(&self) -> Self {
        let ind = self.independence_part();
        self.with_data(
            self.data
                .iter()
                .zip(&ind.data)
                .map(|(x, i)| x / i)
                .collect(),
        )
    }

    pub fn interaction_part<S: AsRef<str>>(&self, factors: &[S]) -> Result<Self> {
        let idx = factors
            .iter()
            .map(|n| self.design.factor_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.interaction_part_of(&FactorSubset::new(idx))
    }

    pub fn interaction_part_of(&self, subset: &FactorSubset) -> Result<Self> {
        if subset.len() < 2 {
            return Err(CodaError::SubsetTooSmall(subset.len()));
        }
        if let Some(&f) = subset.factors().iter().find(|&&f| f >= self.design.k()) {
            return Err(CodaError::UnknownFactor(format!("#{f}")));
        }
        let mut logs = vec![0.0; self.data.len()];
        for t in subset.power_set() {
            if t.is_empty() {
                continue;
            }
            let sign = if (subset.len() - t.len()).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            for (acc, m) in logs.iter_mut().zip(self.broadcast_log_marginal(&t)) {
                *acc += sign * m;
            }
        }
        Ok(self.with_data(logs.into_iter().map(f64::exp).collect()))
    }

    pub fn decompose(&self) -> DecompositionResult {
        let subsets: Vec<FactorSubset> = FactorSubset::all_nonempty(self.design.k())
            .into_iter()
            .filter(|s| s.len() >= 2)
            .collect();
        let interactions: Vec<(Part, KCube)> = subsets
            .into_par_iter()
            .map(|s| {
                let cube = self.interaction_part_of(&s).expect("subset is valid");
                (Part::Interaction(s), cube)
            })
            .collect();
        let mut parts = Vec::with_capacity(interactions.len() + 1);
        parts.push((Part::Independent, self.independence_part()));
        parts.extend(interactions);
        DecompositionResult { parts }
    }
}

/// A geometric marginal array over the kept factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    /// Kept factor indices, ascending.
    pub factors: Vec<usize>,
    pub dims: Vec<usize>,
    /// Geometric means, last kept factor fastest. A single value when no
    /// factor is kept.
    pub values: Vec<f64>,
}

impl Marginal {
    pub fn get(&self, levels: &[usize]) -> f64 {
        let flat = levels
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (l, d)| acc * d + l);
        self.values[flat]
    }

    /// Largest relative spread of the entries; zero for a uniform array.
    pub fn relative_spread(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::MIN, f64::max);
        let min = self.values.iter().copied().fold(f64::MAX, f64::min);
        (max - min) / max
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Part {
    Independent,
    Interaction(FactorSubset),
}

impl Part {
    /// `ind`, or the group label of the interaction subset.
    pub fn label(&self, design: &FactorDesign) -> String {
        match self {
            Part::Independent => "ind".to_string(),
            Part::Interaction(s) => design.subset_label(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    parts: Vec<(Part, KCube)>,
}

impl DecompositionResult {
    /// Independent part first, then interactions in canonical subset order.
    pub fn parts(&self) -> &[(Part, KCube)] {
        &self.parts
    }

    pub fn get(&self, part: &Part) -> Option<&KCube> {
        self.parts.iter().find(|(p, _)| p == part).map(|(_, c)| c)
    }

    pub fn independent(&self) -> &KCube {
        &self.parts[0].1
    }

    pub fn labels(&self) -> Vec<String> {
        let design = self.parts[0].1.design();
        self.parts.iter().map(|(p, _)| p.label(design)).collect()
    }

    pub fn by_label(&self) -> HashMap<String, &KCube> {
        let design = self.parts[0].1.design();
        self.parts
            .iter()
            .map(|(p, c)| (p.label(design), c))
            .collect()
    }

    /// Cellwise product of all parts.
    pub fn reconstruct(&self) -> KCube {
        let mut out = self.parts[0].1.clone();
        for (_, c) in &self.parts[1..] {
            out = out.perturb(c).expect("parts share dimensions");
        }
        out
    }
}
