//! JSON file schemas, all tagged `"schema": "kaplansky/v1"`.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major flat
//! arrays, one per atom. Self-adjoint kernels may ship only the upper
//! triangle (`m·(m+1)/2` entries per atom, row-major); the loader mirrors
//! and conjugates it. Full matrices flagged self-adjoint are checked and
//! then symmetrized exactly.

use serde::{Deserialize, Serialize};

use kaplansky_core::pie::KernelBundle;
use kaplansky_core::vna::MatrixField;
use kaplansky_core::{Complex64, MeasureSpace, SGrid, StepFunction};

use crate::error::CliError;

pub const SCHEMA_TAG: &str = "kaplansky/v1";

pub type ComplexPair = [f64; 2];

pub fn to_complex(pair: &ComplexPair) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

pub fn from_complex(value: Complex64) -> ComplexPair {
    [value.re, value.im]
}

fn check_tag(schema: &str) -> Result<(), CliError> {
    if schema == SCHEMA_TAG {
        Ok(())
    } else {
        Err(CliError::parse(format!(
            "unsupported schema tag {schema:?}, expected {SCHEMA_TAG:?}"
        )))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDef {
    pub atoms: Vec<String>,
    pub weights: Vec<f64>,
}

impl SpaceDef {
    pub fn to_core(&self) -> Result<MeasureSpace, CliError> {
        MeasureSpace::new(self.atoms.clone(), self.weights.clone()).map_err(CliError::domain)
    }

    pub fn from_core(space: &MeasureSpace) -> Self {
        Self {
            atoms: space.atoms().to_vec(),
            weights: space.weights().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridDef {
    pub points: Vec<String>,
    pub quad_weights: Vec<f64>,
}

impl GridDef {
    pub fn to_core(&self) -> Result<SGrid, CliError> {
        SGrid::new(self.points.clone(), self.quad_weights.clone()).map_err(CliError::domain)
    }
}

/// Kernel samples `k(t_i, s_j, ω)` with their space and grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub schema: String,
    pub space: SpaceDef,
    pub grid: GridDef,
    pub selfadjoint: bool,
    pub samples: Vec<Vec<ComplexPair>>,
}

impl KernelFile {
    /// Per-atom full sample matrices, unpacking upper-triangle storage.
    pub fn sample_matrices(&self) -> Result<Vec<Vec<Complex64>>, CliError> {
        let dim = self.grid.points.len();
        let full = dim * dim;
        let packed = dim * (dim + 1) / 2;
        self.samples
            .iter()
            .enumerate()
            .map(|(atom, raw)| {
                if raw.len() == full {
                    Ok(raw.iter().map(to_complex).collect())
                } else if self.selfadjoint && raw.len() == packed {
                    let mut matrix = vec![Complex64::ZERO; full];
                    let mut index = 0;
                    for i in 0..dim {
                        for j in i..dim {
                            let value = to_complex(&raw[index]);
                            matrix[i * dim + j] = value;
                            matrix[j * dim + i] = value.conj();
                            index += 1;
                        }
                    }
                    Ok(matrix)
                } else {
                    Err(CliError::parse(format!(
                        "atom {atom}: expected {full} sample entries (or {packed} packed upper-triangle entries for a self-adjoint kernel), got {}",
                        raw.len()
                    )))
                }
            })
            .collect()
    }

    pub fn to_core(&self) -> Result<KernelBundle, CliError> {
        check_tag(&self.schema)?;
        let space = self.space.to_core()?;
        let grid = self.grid.to_core()?;
        let samples = self.sample_matrices()?;
        KernelBundle::new(space, grid, self.selfadjoint, &samples).map_err(CliError::domain)
    }
}

/// One `dim × dim` matrix per atom over a measure space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFieldFile {
    pub schema: String,
    pub space: SpaceDef,
    pub dim: usize,
    pub fields: Vec<Vec<ComplexPair>>,
}

impl MatrixFieldFile {
    pub fn to_core(&self) -> Result<MatrixField, CliError> {
        check_tag(&self.schema)?;
        let space = self.space.to_core()?;
        let fibers: Vec<Vec<Complex64>> = self
            .fields
            .iter()
            .map(|matrix| matrix.iter().map(to_complex).collect())
            .collect();
        MatrixField::new(space, self.dim, &fibers).map_err(CliError::domain)
    }
}

/// One complex value per atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepFunctionFile {
    pub schema: String,
    pub values: Vec<ComplexPair>,
}

impl StepFunctionFile {
    pub fn to_core(&self) -> Result<StepFunction, CliError> {
        check_tag(&self.schema)?;
        Ok(StepFunction::new(
            self.values.iter().map(to_complex).collect(),
        ))
    }
}

/// One fiber vector per atom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleElementFile {
    pub schema: String,
    pub fibers: Vec<Vec<ComplexPair>>,
}

/// One fiber matrix per atom, quadrature weights absorbed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleOperatorFile {
    pub schema: String,
    pub fiber_maps: Vec<Vec<ComplexPair>>,
}

/// Which kind of input a decomposable file holds.
pub enum DecomposeInput {
    Kernel(Box<KernelFile>),
    MatrixField(Box<MatrixFieldFile>),
}

/// Reads a kernel or matrix-field file, deciding by its fields.
pub fn read_decompose_input(text: &str) -> Result<DecomposeInput, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(CliError::parse)?;
    let object = value
        .as_object()
        .ok_or_else(|| CliError::parse("input is not a JSON object"))?;
    if object.contains_key("samples") {
        let file: KernelFile = serde_json::from_value(value).map_err(CliError::parse)?;
        Ok(DecomposeInput::Kernel(Box::new(file)))
    } else if object.contains_key("fields") {
        let file: MatrixFieldFile = serde_json::from_value(value).map_err(CliError::parse)?;
        Ok(DecomposeInput::MatrixField(Box::new(file)))
    } else {
        Err(CliError::parse(
            "input has neither kernel samples nor matrix fields",
        ))
    }
}

pub fn read_kernel(text: &str) -> Result<KernelFile, CliError> {
    serde_json::from_str(text).map_err(CliError::parse)
}

pub fn read_step_function(text: &str) -> Result<StepFunctionFile, CliError> {
    serde_json::from_str(text).map_err(CliError::parse)
}

pub fn read_matrix_field(text: &str) -> Result<MatrixFieldFile, CliError> {
    serde_json::from_str(text).map_err(CliError::parse)
}
