//! The discretized Hilbert–Kaplansky module and its scalar-valued geometry.
//!
//! `HkModule` pairs a measure space with a quadrature grid and carries the
//! operations whose contracts involve both: the scalar-valued inner product,
//! the two norms, operator application, rank-one operators, and the adjoint.
//!
//! Per fiber the inner product is the quadrature-weighted dot product
//! `⟨x, y⟩ = Σ_s w_s · x_s · conj(y_s)`; operators store weight-absorbed
//! matrices so application is a plain matrix–vector product, and the adjoint
//! of a fiber matrix `A` is `W⁻¹ Aᴴ W` with `W = diag(w)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::element::ModuleElement;
use crate::error::{Error, Result};
use crate::fp;
use crate::linalg;
use crate::measure::{MeasureSpace, SGrid};
use crate::operator::BundleOperator;
use crate::step::{PartitionOfUnity, StepFunction};

/// Relative tolerance for accepting a fiber matrix as self-adjoint.
pub const SELF_ADJOINT_RTOL: f64 = 1e-9;

/// Measure space plus quadrature grid: the context every weighted
/// operation reads its dimensions and weights from.
#[derive(Debug, Clone, PartialEq)]
pub struct HkModule {
    space: MeasureSpace,
    grid: SGrid,
}

impl HkModule {
    pub fn new(space: MeasureSpace, grid: SGrid) -> Self {
        Self { space, grid }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn zero_element(&self) -> ModuleElement {
        ModuleElement::zero(self.atoms(), self.dim())
    }

    /// Weighted basis element `e_i = δ_i / √w_i`, constant across atoms.
    /// These satisfy `⟨e_i, e_j⟩ = δ_ij · 1`.
    pub fn basis_element(&self, point: usize) -> ModuleElement {
        assert!(point < self.dim(), "grid point index out of range");
        let mut out = self.zero_element();
        let value = Complex64::new(1.0 / fp::sqrt(self.grid.quad_weights()[point]), 0.0);
        for atom in 0..self.atoms() {
            out.fiber_mut(atom)[point] = value;
        }
        out
    }

    fn check_element(&self, xi: &ModuleElement, what: &'static str) -> Result<()> {
        if xi.atoms() != self.atoms() || xi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.atoms() * self.dim(),
                got: xi.atoms() * xi.dim(),
            });
        }
        Ok(())
    }

    fn check_operator(&self, op: &BundleOperator, what: &'static str) -> Result<()> {
        if op.atoms() != self.atoms() || op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.atoms() * self.dim() * self.dim(),
                got: op.atoms() * op.dim() * op.dim(),
            });
        }
        Ok(())
    }

    /// Scalar-valued inner product: per atom, `Σ_s w_s · ξ_s · conj(η_s)`.
    pub fn inner_product(&self, xi: &ModuleElement, eta: &ModuleElement) -> Result<StepFunction> {
        self.check_element(xi, "inner product left element")?;
        self.check_element(eta, "inner product right element")?;
        let weights = self.grid.quad_weights();
        let values = (0..self.atoms())
            .map(|atom| {
                let x = xi.fiber(atom);
                let y = eta.fiber(atom);
                let mut acc = Complex64::ZERO;
                for s in 0..self.dim() {
                    acc += weights[s] * x[s] * y[s].conj();
                }
                acc
            })
            .collect();
        Ok(StepFunction::new(values))
    }

    /// Vector norm `√⟨ξ,ξ⟩`, a nonnegative real step function.
    pub fn vector_norm(&self, xi: &ModuleElement) -> Result<StepFunction> {
        let ip = self.inner_product(xi, xi)?;
        let values = ip
            .values()
            .iter()
            .map(|v| Complex64::new(fp::sqrt(v.re.max(0.0)), 0.0))
            .collect();
        Ok(StepFunction::new(values))
    }

    /// Module norm: the largest per-atom vector norm.
    pub fn module_norm(&self, xi: &ModuleElement) -> Result<f64> {
        Ok(self.vector_norm(xi)?.max_abs())
    }

    /// Splices a family along a partition of unity; see [`ModuleElement::mix`].
    pub fn mix(
        &self,
        partition: &PartitionOfUnity,
        elements: &[ModuleElement],
    ) -> Result<ModuleElement> {
        for element in elements {
            self.check_element(element, "mix element")?;
        }
        if partition.atoms() != self.atoms() {
            return Err(Error::DimensionMismatch {
                what: "mix partition",
                expected: self.atoms(),
                got: partition.atoms(),
            });
        }
        ModuleElement::mix(partition, elements)
    }

    /// Applies the operator fiberwise: matrix–vector product per atom.
    pub fn apply(&self, op: &BundleOperator, xi: &ModuleElement) -> Result<ModuleElement> {
        self.check_operator(op, "applied operator")?;
        self.check_element(xi, "applied element")?;
        let dim = self.dim();
        let mut out = self.zero_element();
        for atom in 0..self.atoms() {
            let a = op.fiber(atom);
            let x = xi.fiber(atom);
            let y = out.fiber_mut(atom);
            for i in 0..dim {
                let mut acc = Complex64::ZERO;
                for j in 0..dim {
                    acc += a[i * dim + j] * x[j];
                }
                y[i] = acc;
            }
        }
        Ok(out)
    }

    /// Rank-one operator `ξ⊗η` with `(ξ⊗η)(ζ) = ⟨ζ, η⟩ ξ`.
    /// Fiber matrix: `ξ_i · conj(η_j) · w_j`.
    pub fn rank_one(&self, xi: &ModuleElement, eta: &ModuleElement) -> Result<BundleOperator> {
        self.check_element(xi, "rank-one left element")?;
        self.check_element(eta, "rank-one right element")?;
        let dim = self.dim();
        let weights = self.grid.quad_weights();
        let mut out = BundleOperator::zero(self.atoms(), dim);
        for atom in 0..self.atoms() {
            let x = xi.fiber(atom);
            let y = eta.fiber(atom);
            let a = out.fiber_mut(atom);
            for i in 0..dim {
                for j in 0..dim {
                    a[i * dim + j] = x[i] * y[j].conj() * weights[j];
                }
            }
        }
        Ok(out)
    }

    /// The unique operator `S` with `⟨Tξ, η⟩ = ⟨ξ, Sη⟩`: per fiber
    /// `W⁻¹ Aᴴ W`.
    pub fn adjoint(&self, op: &BundleOperator) -> Result<BundleOperator> {
        self.check_operator(op, "adjoint operand")?;
        let dim = self.dim();
        let weights = self.grid.quad_weights();
        let mut out = BundleOperator::zero(self.atoms(), dim);
        for atom in 0..self.atoms() {
            let a = op.fiber(atom);
            let s = out.fiber_mut(atom);
            for i in 0..dim {
                for j in 0..dim {
                    s[i * dim + j] = a[j * dim + i].conj() * (weights[j] / weights[i]);
                }
            }
        }
        Ok(out)
    }

    /// Module operator norm: the largest fiber spectral norm in the
    /// weighted geometry.
    pub fn operator_norm(&self, op: &BundleOperator) -> Result<f64> {
        self.check_operator(op, "operator norm operand")?;
        let mut norm: f64 = 0.0;
        for atom in 0..self.atoms() {
            let b = self.euclidean_fiber(op, atom);
            norm = norm.max(linalg::spectral_norm(&b, self.dim())?);
        }
        Ok(norm)
    }

    /// The fiber matrix conjugated into Euclidean coordinates,
    /// `B = W^{1/2} A W^{-1/2}`. Weighted-orthonormal data in module
    /// coordinates corresponds to Euclidean-orthonormal data for `B`.
    pub(crate) fn euclidean_fiber(&self, op: &BundleOperator, atom: usize) -> Vec<Complex64> {
        let dim = self.dim();
        let weights = self.grid.quad_weights();
        let a = op.fiber(atom);
        let mut b = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            let wi = fp::sqrt(weights[i]);
            for j in 0..dim {
                b[i * dim + j] = a[i * dim + j] * (wi / fp::sqrt(weights[j]));
            }
        }
        b
    }

    /// Converts a Euclidean fiber vector back to module coordinates,
    /// `ξ = W^{-1/2} u`.
    pub(crate) fn vector_from_euclidean(&self, u: &[Complex64]) -> Vec<Complex64> {
        let weights = self.grid.quad_weights();
        u.iter()
            .zip(weights)
            .map(|(v, w)| v / fp::sqrt(*w))
            .collect()
    }

    /// Largest Hermitian defect of the Euclidean fibers together with the
    /// largest fiber magnitude, and the offending atom.
    pub fn self_adjointness(&self, op: &BundleOperator) -> Result<(f64, f64, usize)> {
        self.check_operator(op, "self-adjointness operand")?;
        let mut worst = 0.0;
        let mut scale: f64 = 0.0;
        let mut worst_atom = 0;
        for atom in 0..self.atoms() {
            let b = self.euclidean_fiber(op, atom);
            let res = linalg::hermitian_residual(&b, self.dim());
            scale = scale.max(linalg::max_abs(&b));
            if res > worst {
                worst = res;
                worst_atom = atom;
            }
        }
        Ok((worst, scale, worst_atom))
    }

    /// Errors unless every fiber is self-adjoint to [`SELF_ADJOINT_RTOL`]
    /// relative to the largest fiber magnitude.
    pub fn ensure_self_adjoint(&self, op: &BundleOperator) -> Result<()> {
        let (residual, scale, atom) = self.self_adjointness(op)?;
        if residual > SELF_ADJOINT_RTOL * scale.max(1e-300) {
            return Err(Error::NotSelfAdjoint { atom, residual });
        }
        Ok(())
    }
}
