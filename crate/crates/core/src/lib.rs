//! Log-ratio analysis of k-factorial compositional data.
//!
//! A k-factorial composition is a positive k-way array whose information is
//! carried by ratios between cells. This crate
//!
//! - implements Aitchison geometry on positive vectors ([`composition`]),
//! - parses sequential binary partitions of each factor's levels ([`sbp`]),
//! - decomposes arrays into an independent part and one interaction part per
//!   subset of factors ([`cube`]),
//! - builds the matching orthonormal coordinate system from the per-factor
//!   partitions ([`coordinates`]),
//! - and summarizes samples of arrays in those coordinates ([`stats`]).
//!
//! ```
//! use std::sync::Arc;
//! use coda_cube::{coords, build_contrast_matrix, FactorDesign, FactorSpec, KCube};
//!
//! let design = Arc::new(FactorDesign::new(vec![
//!     FactorSpec::new("gender", &["F", "M"], "(F,M)")?,
//!     FactorSpec::new("contract", &["FT", "PT"], "(FT,PT)")?,
//! ])?);
//! let cube = KCube::new(design.clone(), vec![40.0, 10.0, 45.0, 5.0])?;
//! let v = build_contrast_matrix(&design);
//! let z = coords(&cube, &v, true)?;
//! assert_eq!(z.len(), 3);
//! # Ok::<(), coda_cube::CodaError>(())
//! ```

pub mod composition;
pub mod contrast;
pub mod coordinates;
pub mod cube;
pub mod design;
pub mod error;
pub mod sbp;
pub mod stats;

pub use composition::{geometric_mean, Composition};
pub use contrast::{ContrastMatrix, CoordinateKey, FactorSubset};
pub use coordinates::{
    build_contrast_matrix, coords, group_coordinates, hadamard_normalized, inverse,
    lift_factor_vector, transform_logcontrasts, CoordinateSet,
};
pub use cube::{CellRecord, DecompositionResult, KCube, Marginal, Part};
pub use design::FactorDesign;
pub use error::{CodaError, Result};
pub use sbp::{
    parse_sbp, parse_tree, sbp_steps, vector_contrast_matrix, FactorSpec, SbpStep, SbpTree,
};
pub use stats::{
    bootstrap_ci, coordinate_matrix, mean_sd, pca, BootstrapCi, BootstrapConfig, CoordinateMatrix,
    CubeSample, PcaResult,
};
