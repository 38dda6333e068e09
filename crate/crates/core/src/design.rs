use std::collections::HashSet;

use crate::contrast::{CoordinateKey, FactorSubset};
use crate::error::{CodaError, Result};
use crate::sbp::FactorSpec;

/// Group selectors with a fixed meaning: every single-factor group, every
/// interaction group.
pub const RESERVED_GROUPS: [&str; 2] = ["ind", "int"];

const DEFAULT_CODES: [&str; 3] = ["r", "c", "s"];

/// The ordered factors of a k-factorial array together with its canonical
/// vectorization: lexicographic over level indices, last factor fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDesign {
    factors: Vec<FactorSpec>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    codes: Vec<String>,
}

impl FactorDesign {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(CodaError::InvalidFactor {
                factor: factors
                    .first()
                    .map_or(String::new(), |f| f.name().to_string()),
                reason: format!("a design needs at least 2 factors, got {}", factors.len()),
            });
        }
        if factors.len() > 16 {
            return Err(CodaError::InvalidFactor {
                factor: factors[16].name().to_string(),
                reason: "at most 16 factors are supported".to_string(),
            });
        }
        let mut names = HashSet::new();
        for f in &factors {
            if !names.insert(f.name()) {
                return Err(CodaError::InvalidFactor {
                    factor: f.name().to_string(),
                    reason: "duplicate factor name".to_string(),
                });
            }
        }
        let dims: Vec<usize> = factors.iter().map(FactorSpec::level_count).collect();
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let codes = factors
            .iter()
            .enumerate()
            .map(|(i, f)| match f.code() {
                Some(c) => c.to_string(),
                None if factors.len() <= DEFAULT_CODES.len() => DEFAULT_CODES[i].to_string(),
                None => f.name().to_string(),
            })
            .collect();
        let design = Self {
            factors,
            dims,
            strides,
            codes,
        };
        design.check_labels()?;
        Ok(design)
    }

    fn check_labels(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for subset in FactorSubset::all_nonempty(self.k()) {
            let label = self.subset_label(&subset);
            let clash = RESERVED_GROUPS.contains(&label.as_str())
                || label.is_empty()
                || label.contains([':', ',', '|'])
                || !seen.insert(label.clone());
            if clash {
                return Err(CodaError::InvalidFactor {
                    factor: self.factors[subset.factors()[0]].name().to_string(),
                    reason: format!("group label `{label}` is reserved, malformed or ambiguous"),
                });
            }
        }
        Ok(())
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn code(&self, factor: usize) -> &str {
        &self.codes[factor]
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.name() == name)
            .ok_or_else(|| CodaError::UnknownFactor(name.to_string()))
    }

    /// Flat position of a cell given one level index per factor.
    pub fn flat_index(&self, levels: &[usize]) -> usize {
        levels.iter().zip(&self.strides).map(|(l, s)| l * s).sum()
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn cell_levels(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let l = flat / s;
                flat %= s;
                l
            })
            .collect()
    }

    pub fn cell_names(&self, flat: usize) -> Vec<String> {
        self.cell_levels(flat)
            .into_iter()
            .zip(&self.factors)
            .map(|(l, f)| f.levels()[l].clone())
            .collect()
    }

    /// Header label of a cell, level names joined by `|`.
    pub fn cell_label(&self, flat: usize) -> String {
        self.cell_names(flat).join("|")
    }

    /// Factor codes concatenated, or joined by `*` when any code is longer
    /// than one character.
    pub fn subset_label(&self, subset: &FactorSubset) -> String {
        let codes: Vec<&str> = subset.factors().iter().map(|&f| self.code(f)).collect();
        if codes.iter().all(|c| c.chars().count() == 1) {
            codes.concat()
        } else {
            codes.join("*")
        }
    }

    /// `rc:1,2` style label.
    pub fn key_label(&self, key: &CoordinateKey) -> String {
        let steps: Vec<String> = key.steps.iter().map(usize::to_string).collect();
        format!("{}:{}", self.subset_label(&key.subset), steps.join(","))
    }

    /// Resolves a group label (`r`, `rc`, `gender*age`, ...) to its subset.
    pub fn parse_group(&self, label: &str) -> Result<FactorSubset> {
        FactorSubset::all_nonempty(self.k())
            .into_iter()
            .find(|s| self.subset_label(s) == label)
            .ok_or_else(|| CodaError::UnknownGroup(label.to_string()))
    }

    /// Resolves group selectors, expanding `ind` (single factors) and `int`
    /// (all interactions). The result is in canonical order.
    pub fn parse_groups<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<FactorSubset>> {
        let mut out = Vec::new();
        for label in labels {
            let label = label.as_ref().trim();
            let subsets = match label {
                "ind" => FactorSubset::all_nonempty(self.k())
                    .into_iter()
                    .filter(|s| s.len() == 1)
                    .collect(),
                "int" => FactorSubset::all_nonempty(self.k())
                    .into_iter()
                    .filter(|s| s.len() >= 2)
                    .collect(),
                _ => vec![self.parse_group(label)?],
            };
            for s in subsets {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out.sort();
        Ok(out)
    }
}
