//! Matrix fields over a scalar center.
//!
//! A `MatrixField` assigns one `n × n` complex matrix to each atom; step
//! functions act as central scalars, boolean masks as central projections.
//! This is the matrix-algebra face of the bundle model: the fiber inner
//! product is Euclidean (unit weights), so adjoints are plain conjugate
//! transposes and projections are the usual `p = p* = p²`.
//!
//! The operations here classify projections by fiber rank, build the
//! smallest projection fixing a field's columns, truncate a field below a
//! singular-value threshold, and diagonalize self-adjoint fields into
//! central values times rank-one (abelian) projections.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fp;
use crate::linalg;
use crate::measure::{MeasureSpace, SGrid};
use crate::module::HkModule;
use crate::operator::BundleOperator;
use crate::spectral::eigendecompose;
use crate::step::{Idempotent, PartitionOfUnity, StepFunction};
use crate::try_map_fibers;

/// Absolute fiber tolerance for accepting `p = p* = p²`.
pub const PROJECTION_TOL: f64 = 1e-12;

/// One `dim × dim` complex matrix per atom, row-major, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    space: MeasureSpace,
    dim: usize,
    data: Vec<Complex64>,
}

impl MatrixField {
    pub fn new(space: MeasureSpace, dim: usize, fibers: &[Vec<Complex64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix fields need positive dimension"));
        }
        if fibers.len() != space.len() {
            return Err(Error::DimensionMismatch {
                what: "matrix field fibers",
                expected: space.len(),
                got: fibers.len(),
            });
        }
        let mut data = Vec::with_capacity(space.len() * dim * dim);
        for fiber in fibers {
            if fiber.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    what: "matrix field fiber",
                    expected: dim * dim,
                    got: fiber.len(),
                });
            }
            data.extend_from_slice(fiber);
        }
        if !data.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix field",
            });
        }
        Ok(Self { space, dim, data })
    }

    pub fn zero(space: MeasureSpace, dim: usize) -> Self {
        assert!(dim > 0, "matrix fields need positive dimension");
        let data = vec![Complex64::ZERO; space.len() * dim * dim];
        Self { space, dim, data }
    }

    pub fn identity(space: MeasureSpace, dim: usize) -> Self {
        let mut field = Self::zero(space, dim);
        for atom in 0..field.atoms() {
            for i in 0..dim {
                field.fiber_mut(atom)[i * dim + i] = Complex64::ONE;
            }
        }
        field
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self, atom: usize) -> &[Complex64] {
        let len = self.dim * self.dim;
        &self.data[atom * len..(atom + 1) * len]
    }

    pub fn fiber_mut(&mut self, atom: usize) -> &mut [Complex64] {
        let len = self.dim * self.dim;
        &mut self.data[atom * len..(atom + 1) * len]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix field dimensions differ");
        assert_eq!(
            self.atoms(),
            other.atoms(),
            "matrix field atom counts differ"
        );
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix field dimensions differ");
        assert_eq!(
            self.atoms(),
            other.atoms(),
            "matrix field atom counts differ"
        );
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= factor;
        }
        out
    }

    /// Central action: multiplies each fiber by the atom's scalar.
    pub fn scale_step(&self, scalar: &StepFunction) -> Self {
        assert_eq!(self.atoms(), scalar.len(), "scalar atom count differs");
        let mut out = self.clone();
        let len = self.dim * self.dim;
        for atom in 0..self.atoms() {
            let s = scalar.value(atom);
            for v in &mut out.data[atom * len..(atom + 1) * len] {
                *v *= s;
            }
        }
        out
    }

    /// Central projection action `z·x`.
    pub fn restrict(&self, mask: &Idempotent) -> Self {
        assert_eq!(self.atoms(), mask.len(), "mask atom count differs");
        let mut out = self.clone();
        for atom in 0..self.atoms() {
            if !mask.get(atom) {
                out.fiber_mut(atom).fill(Complex64::ZERO);
            }
        }
        out
    }

    /// Fiberwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix field dimensions differ");
        assert_eq!(
            self.atoms(),
            other.atoms(),
            "matrix field atom counts differ"
        );
        let dim = self.dim;
        let mut out = Self::zero(self.space.clone(), dim);
        for atom in 0..self.atoms() {
            let a = self.fiber(atom);
            let b = other.fiber(atom);
            let c = out.fiber_mut(atom);
            for i in 0..dim {
                for k in 0..dim {
                    let aik = a[i * dim + k];
                    if aik == Complex64::ZERO {
                        continue;
                    }
                    for j in 0..dim {
                        c[i * dim + j] += aik * b[k * dim + j];
                    }
                }
            }
        }
        out
    }

    /// Fiberwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let dim = self.dim;
        let mut out = Self::zero(self.space.clone(), dim);
        for atom in 0..self.atoms() {
            let a = self.fiber(atom);
            let s = out.fiber_mut(atom);
            for i in 0..dim {
                for j in 0..dim {
                    s[i * dim + j] = a[j * dim + i].conj();
                }
            }
        }
        out
    }

    /// The field as an operator bundle over the unit-weight grid.
    pub fn to_operator(&self) -> BundleOperator {
        BundleOperator::from_fibers(
            &(0..self.atoms())
                .map(|atom| self.fiber(atom).to_vec())
                .collect::<Vec<_>>(),
        )
        .expect("matrix field fibers are square")
    }

    /// The Euclidean module the field acts on.
    pub fn unit_module(&self) -> HkModule {
        HkModule::new(
            self.space.clone(),
            SGrid::unit(self.dim).expect("positive dimension"),
        )
    }

    /// Largest fiber spectral norm.
    pub fn operator_norm(&self) -> Result<f64> {
        let mut norm: f64 = 0.0;
        for atom in 0..self.atoms() {
            norm = norm.max(linalg::spectral_norm(self.fiber(atom), self.dim)?);
        }
        Ok(norm)
    }
}

/// A matrix field with `p = p* = p²` per fiber, within [`PROJECTION_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionField {
    field: MatrixField,
}

impl ProjectionField {
    pub fn new(field: MatrixField) -> Result<Self> {
        let dim = field.dim();
        for atom in 0..field.atoms() {
            let p = field.fiber(atom);
            let mut residual: f64 = linalg::hermitian_residual(p, dim);
            // idempotency: p² - p
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = Complex64::ZERO;
                    for k in 0..dim {
                        acc += p[i * dim + k] * p[k * dim + j];
                    }
                    residual = residual.max((acc - p[i * dim + j]).norm());
                }
            }
            if residual > PROJECTION_TOL * field.max_abs().max(1.0) {
                return Err(Error::NotProjection { atom, residual });
            }
        }
        Ok(Self { field })
    }

    pub fn field(&self) -> &MatrixField {
        &self.field
    }

    pub fn into_field(self) -> MatrixField {
        self.field
    }

    pub fn atoms(&self) -> usize {
        self.field.atoms()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// Fiber rank, read off the trace.
    pub fn fiber_rank(&self, atom: usize) -> usize {
        let dim = self.field.dim();
        let trace: f64 = (0..dim)
            .map(|i| self.field.fiber(atom)[i * dim + i].re)
            .sum();
        fp::round(trace) as usize
    }
}

/// Projection onto the span of the given orthonormal columns, one fiber.
fn span_projection(columns: &[&[Complex64]], dim: usize) -> Vec<Complex64> {
    let mut p = vec![Complex64::ZERO; dim * dim];
    for column in columns {
        for i in 0..dim {
            for j in 0..dim {
                p[i * dim + j] += column[i] * column[j].conj();
            }
        }
    }
    p
}

/// The left support `l(y)`: the smallest projection `p` with `p·y = y`,
/// computed per fiber as the orthogonal projection onto the column space
/// at numerical rank `rank_tol`.
pub fn left_support(y: &MatrixField, rank_tol: f64) -> Result<ProjectionField> {
    if rank_tol <= 0.0 || !rank_tol.is_finite() {
        return Err(Error::InvalidInput("rank tolerance must be positive"));
    }
    let dim = y.dim();
    let fibers = try_map_fibers(y.atoms(), |atom| {
        let svd = linalg::svd(y.fiber(atom), dim)?;
        let rank = svd
            .singular
            .iter()
            .filter(|&&s| s > rank_tol * svd.singular[0])
            .count();
        let columns: Vec<&[Complex64]> = svd.u[..rank].iter().map(Vec::as_slice).collect();
        Ok(span_projection(&columns, dim))
    })?;
    ProjectionField::new(MatrixField::new(y.space().clone(), dim, &fibers)?)
}

/// Rank classes of a projection field: the masks `q_r` of atoms where the
/// fiber rank is `r`, with their ranks. Exhibiting this partition is the
/// constructive finiteness certificate for the projection.
#[derive(Debug, Clone)]
pub struct HomogeneousDecomposition {
    pub ranks: Vec<usize>,
    pub masks: Vec<Idempotent>,
}

impl HomogeneousDecomposition {
    pub fn partition(&self) -> PartitionOfUnity {
        PartitionOfUnity::new(self.masks.clone()).expect("rank masks partition the atoms")
    }
}

/// Partitions the atoms by the fiber rank of the projection.
pub fn homogeneous_decomposition(p: &ProjectionField) -> HomogeneousDecomposition {
    let atoms = p.atoms();
    let fiber_ranks: Vec<usize> = (0..atoms).map(|atom| p.fiber_rank(atom)).collect();
    let mut ranks = Vec::new();
    let mut masks = Vec::new();
    for rank in 0..=p.dim() {
        let mask = Idempotent::new(fiber_ranks.iter().map(|&r| r == rank).collect());
        if mask.any() {
            ranks.push(rank);
            masks.push(mask);
        }
    }
    HomogeneousDecomposition { ranks, masks }
}

/// The ε-truncation projection: per fiber, the projection onto the span of
/// right singular vectors with singular value strictly below `eps`.
///
/// Guarantees `‖x·p‖ < eps` while `1 - p` has the smallest fiber rank doing
/// so: exactly the number of singular values `≥ eps`.
pub fn truncation_projection(x: &MatrixField, eps: f64) -> Result<ProjectionField> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidInput("truncation threshold must be positive"));
    }
    let dim = x.dim();
    let fibers = try_map_fibers(x.atoms(), |atom| {
        let svd = linalg::svd(x.fiber(atom), dim)?;
        let columns: Vec<&[Complex64]> = svd
            .singular
            .iter()
            .zip(&svd.v)
            .filter(|(s, _)| **s < eps)
            .map(|(_, v)| v.as_slice())
            .collect();
        Ok(span_projection(&columns, dim))
    })?;
    ProjectionField::new(MatrixField::new(x.space().clone(), dim, &fibers)?)
}

/// Central diagonal form of a self-adjoint matrix field: central masks
/// `z_k`, per class the step-function coefficients `f_{k,1}, …, f_{k,k}`
/// with `|f_{k,1}| ≥ … ≥ |f_{k,k}|`, and mutually orthogonal rank-one
/// (abelian) projection fields `p_{k,n}` reconstructing
/// `x = Σ_k z_k Σ_n f_{k,n} · p_{k,n}`.
#[derive(Debug, Clone)]
pub struct CentralClass {
    pub rank: usize,
    pub mask: Idempotent,
    pub values: Vec<StepFunction>,
    pub projections: Vec<ProjectionField>,
}

#[derive(Debug, Clone)]
pub struct CentralDiagonalForm {
    space: MeasureSpace,
    dim: usize,
    pub zero_mask: Idempotent,
    pub classes: Vec<CentralClass>,
}

impl CentralDiagonalForm {
    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The central partition `{z_0, z_1, …, z_n}` with `parts()[k] = z_k`.
    pub fn central_partition(&self) -> PartitionOfUnity {
        let mut parts = vec![Idempotent::empty(self.atoms()); self.dim + 1];
        parts[0] = self.zero_mask.clone();
        for class in &self.classes {
            parts[class.rank] = class.mask.clone();
        }
        PartitionOfUnity::new(parts).expect("central masks partition the atoms")
    }

    /// Reassembles `Σ_k z_k Σ_n f_{k,n} · p_{k,n}`.
    pub fn reconstruct(&self) -> MatrixField {
        let mut out = MatrixField::zero(self.space.clone(), self.dim);
        for class in &self.classes {
            for n in 0..class.rank {
                out = out.add(&class.projections[n].field().scale_step(&class.values[n]));
            }
        }
        out
    }
}

/// Diagonalizes a self-adjoint matrix field: the spectral form of the field
/// viewed as an operator bundle over the unit-weight grid, with each
/// eigenvector turned into a rank-one abelian projection field.
pub fn diagonalize(x: &MatrixField, rank_tol: f64) -> Result<CentralDiagonalForm> {
    let module = x.unit_module();
    let spectral = eigendecompose(&module, &x.to_operator(), rank_tol)?;
    let dim = x.dim();
    let mut classes = Vec::with_capacity(spectral.classes.len());
    for class in &spectral.classes {
        let mut projections = Vec::with_capacity(class.rank);
        for vector in &class.vectors {
            let mut field = MatrixField::zero(x.space().clone(), dim);
            for atom in 0..x.atoms() {
                if class.mask.get(atom) {
                    field
                        .fiber_mut(atom)
                        .copy_from_slice(&span_projection(&[vector.fiber(atom)], dim));
                }
            }
            projections.push(ProjectionField::new(field)?);
        }
        classes.push(CentralClass {
            rank: class.rank,
            mask: class.mask.clone(),
            values: class.values.clone(),
            projections,
        });
    }
    Ok(CentralDiagonalForm {
        space: x.space().clone(),
        dim,
        zero_mask: spectral.zero_mask.clone(),
        classes,
    })
}

/// A unitary field and the diagonal it conjugates the original field to.
#[derive(Debug, Clone)]
pub struct DiagonalForm {
    pub diagonal: MatrixField,
    pub unitary: MatrixField,
}

/// Extracts the unit vector generating a rank-one projection fiber.
fn rank_one_generator(p: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut best_col = 0;
    let mut best_norm = 0.0f64;
    for j in 0..dim {
        let norm_sq: f64 = (0..dim).map(|i| p[i * dim + j].norm_sqr()).sum();
        if norm_sq > best_norm {
            best_norm = norm_sq;
            best_col = j;
        }
    }
    let norm = fp::sqrt(best_norm);
    let mut vector: Vec<Complex64> = (0..dim).map(|i| p[i * dim + best_col] / norm).collect();
    linalg::phase_fix(&mut vector);
    vector
}

/// Builds the diagonal representation from a central diagonal form: per
/// atom, `U` holds the class eigenvectors (recovered from the abelian
/// projections, phases pinned) completed to a full orthonormal basis, and
/// `D` carries the class values followed by zeros, so `U* x U = D`.
pub fn to_diagonal_matrix(form: &CentralDiagonalForm) -> Result<DiagonalForm> {
    let dim = form.dim();
    let atoms = form.atoms();
    let mut unitary = MatrixField::zero(form.space.clone(), dim);
    let mut diagonal = MatrixField::zero(form.space.clone(), dim);
    for atom in 0..atoms {
        let mut vectors: Vec<Vec<Complex64>> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for class in &form.classes {
            if class.mask.get(atom) {
                for n in 0..class.rank {
                    vectors.push(rank_one_generator(
                        class.projections[n].field().fiber(atom),
                        dim,
                    ));
                    values.push(class.values[n].value(atom).re);
                }
            }
        }
        let basis = linalg::complete_orthonormal(&vectors, dim);
        let u = unitary.fiber_mut(atom);
        for (j, column) in basis.iter().enumerate() {
            for i in 0..dim {
                u[i * dim + j] = column[i];
            }
        }
        let d = diagonal.fiber_mut(atom);
        for (i, value) in values.iter().enumerate() {
            d[i * dim + i] = Complex64::new(*value, 0.0);
        }
    }
    Ok(DiagonalForm { diagonal, unitary })
}
