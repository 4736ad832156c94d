//! Report schemas written by the commands. Serialization is deterministic:
//! field order is fixed by the struct definitions, sequences keep
//! computation order, and floats print in shortest round-trip form, so
//! identical inputs and configuration produce byte-identical reports.

use serde::{Deserialize, Serialize};

use kaplansky_core::spectral::SpectralDecomposition;
use kaplansky_core::vna::CentralDiagonalForm;
use kaplansky_core::{Idempotent, ModuleElement, StepFunction};

use crate::run::RunConfig;
use crate::schema::{from_complex, ComplexPair, SCHEMA_TAG};

pub fn mask_to_vec(mask: &Idempotent) -> Vec<bool> {
    mask.mask().to_vec()
}

pub fn step_to_pairs(step: &StepFunction) -> Vec<ComplexPair> {
    step.values().iter().map(|v| from_complex(*v)).collect()
}

pub fn element_to_pairs(element: &ModuleElement) -> Vec<Vec<ComplexPair>> {
    (0..element.atoms())
        .map(|atom| {
            element
                .fiber(atom)
                .iter()
                .map(|v| from_complex(*v))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymmetryLocation {
    pub atom: usize,
    pub row: usize,
    pub col: usize,
}

/// Output of `validate`: schema, self-adjointness, admissibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateReport {
    pub schema: String,
    pub config: RunConfig,
    pub ok: bool,
    pub selfadjoint: bool,
    pub max_asymmetry: f64,
    pub asymmetry_location: Option<AsymmetryLocation>,
    /// Per-atom Hilbert–Schmidt weights Σ w_t w_s |k(t,s,ω)|².
    pub hs_values: Vec<f64>,
    /// Their maximum over atoms.
    pub hs_sup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralClassOut {
    pub k: usize,
    pub atom_count: usize,
    pub eigenvalues: Vec<Vec<ComplexPair>>,
    pub vectors: Vec<Vec<Vec<ComplexPair>>>,
}

/// Export of a spectral decomposition: the rank partition indexed by
/// `k = 0..=dim` and the nonempty classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralFile {
    pub schema: String,
    pub config: RunConfig,
    pub kind: String,
    pub rank_partition: Vec<Vec<bool>>,
    pub classes: Vec<SpectralClassOut>,
    pub residual: f64,
}

impl SpectralFile {
    pub fn new(decomposition: &SpectralDecomposition, config: &RunConfig, residual: f64) -> Self {
        let rank_partition = decomposition
            .rank_partition()
            .parts()
            .iter()
            .map(mask_to_vec)
            .collect();
        let classes = decomposition
            .classes
            .iter()
            .map(|class| SpectralClassOut {
                k: class.rank,
                atom_count: class.mask.count(),
                eigenvalues: class.values.iter().map(step_to_pairs).collect(),
                vectors: class.vectors.iter().map(element_to_pairs).collect(),
            })
            .collect();
        Self {
            schema: SCHEMA_TAG.to_string(),
            config: config.clone(),
            kind: "spectral".to_string(),
            rank_partition,
            classes,
            residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralClassOut {
    pub k: usize,
    pub atom_count: usize,
    pub values: Vec<Vec<ComplexPair>>,
    /// Rank-one projection fields, one matrix per atom each.
    pub projections: Vec<Vec<Vec<ComplexPair>>>,
}

/// Export of a central diagonal form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralFile {
    pub schema: String,
    pub config: RunConfig,
    pub kind: String,
    pub central_partition: Vec<Vec<bool>>,
    pub classes: Vec<CentralClassOut>,
    pub residual: f64,
}

fn central_classes(form: &CentralDiagonalForm) -> Vec<CentralClassOut> {
    form.classes
        .iter()
        .map(|class| CentralClassOut {
            k: class.rank,
            atom_count: class.mask.count(),
            values: class.values.iter().map(step_to_pairs).collect(),
            projections: class
                .projections
                .iter()
                .map(|p| {
                    (0..p.atoms())
                        .map(|atom| {
                            p.field()
                                .fiber(atom)
                                .iter()
                                .map(|v| from_complex(*v))
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        })
        .collect()
}

impl CentralFile {
    pub fn new(form: &CentralDiagonalForm, config: &RunConfig, residual: f64) -> Self {
        Self {
            schema: SCHEMA_TAG.to_string(),
            config: config.clone(),
            kind: "central-diagonal".to_string(),
            central_partition: form
                .central_partition()
                .parts()
                .iter()
                .map(mask_to_vec)
                .collect(),
            classes: central_classes(form),
            residual,
        }
    }
}

/// Output of `diagonalize`: the central form plus the unitary and the
/// diagonal it conjugates the field to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalizeReport {
    pub schema: String,
    pub config: RunConfig,
    pub kind: String,
    pub central_partition: Vec<Vec<bool>>,
    pub classes: Vec<CentralClassOut>,
    pub unitary: Vec<Vec<ComplexPair>>,
    pub diagonal: Vec<Vec<ComplexPair>>,
    pub residual: f64,
}

impl DiagonalizeReport {
    pub fn new(
        form: &CentralDiagonalForm,
        unitary: &kaplansky_core::vna::MatrixField,
        diagonal: &kaplansky_core::vna::MatrixField,
        config: &RunConfig,
        residual: f64,
    ) -> Self {
        let to_matrices = |field: &kaplansky_core::vna::MatrixField| {
            (0..field.atoms())
                .map(|atom| field.fiber(atom).iter().map(|v| from_complex(*v)).collect())
                .collect()
        };
        Self {
            schema: SCHEMA_TAG.to_string(),
            config: config.clone(),
            kind: "diagonalization".to_string(),
            central_partition: form
                .central_partition()
                .parts()
                .iter()
                .map(mask_to_vec)
                .collect(),
            classes: central_classes(form),
            unitary: to_matrices(unitary),
            diagonal: to_matrices(diagonal),
            residual,
        }
    }
}

/// Output of `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema: String,
    pub config: RunConfig,
    pub solvable: bool,
    pub pi: Vec<bool>,
    /// `[k, n]`; `n = 0` is the null branch of rank class `k`.
    pub branch: Option<[usize; 2]>,
    /// Solvable: largest branch gap on the witness mask. Not solvable:
    /// smallest gap found anywhere.
    pub max_gap: f64,
    pub residual: Option<f64>,
    pub eigenfunction: Option<Vec<Vec<ComplexPair>>>,
}
