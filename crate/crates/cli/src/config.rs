use std::path::Path;
use std::sync::Arc;

use coda_cube::{BootstrapConfig, FactorDesign, FactorSpec};
use serde::Deserialize;

use crate::failure::{Failure, Outcome};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub name: String,
    pub code: Option<String>,
    pub levels: Vec<String>,
    pub sbp: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub closure: f64,
    pub normalized: bool,
    pub bootstrap: BootstrapOptions,
    pub pca: PcaOptions,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            closure: 1.0,
            normalized: true,
            bootstrap: BootstrapOptions::default(),
            pca: PcaOptions::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapOptions {
    #[serde(rename = "B")]
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        let d = BootstrapConfig::default();
        Self {
            resamples: d.resamples,
            alpha: d.alpha,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcaOptions {
    /// Group selectors; empty means all coordinates.
    pub groups: Vec<String>,
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Outcome<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        if !(config.options.closure.is_finite() && config.options.closure > 0.0) {
            return Err(Failure::input(format!(
                "{}: closure constant must be positive, got {}",
                path.display(),
                config.options.closure
            )));
        }
        Ok(config)
    }

    pub fn design(&self) -> Outcome<Arc<FactorDesign>> {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let spec = FactorSpec::new(&f.name, &f.levels, &f.sbp)
                    .map_err(|e| Failure::input(format!("factor `{}`: {e}", f.name)))?;
                Ok(match &f.code {
                    Some(c) => spec.with_code(c.clone()),
                    None => spec,
                })
            })
            .collect::<Outcome<Vec<_>>>()?;
        Ok(Arc::new(
            FactorDesign::new(factors).map_err(Failure::input)?,
        ))
    }
}
