//! Module-linear operators on the bundle: one square matrix per atom.
//!
//! The stored fiber matrices absorb the quadrature weights, so application
//! is a plain matrix–vector product per fiber. The weight correction
//! reappears only in the adjoint, which the module context computes.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fp;
use crate::step::{Idempotent, StepFunction};

/// One `dim × dim` complex matrix per atom, row-major, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleOperator {
    atoms: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl BundleOperator {
    pub fn zero(atoms: usize, dim: usize) -> Self {
        Self {
            atoms,
            dim,
            data: vec![Complex64::ZERO; atoms * dim * dim],
        }
    }

    pub fn identity(atoms: usize, dim: usize) -> Self {
        let mut op = Self::zero(atoms, dim);
        for atom in 0..atoms {
            for i in 0..dim {
                op.fiber_mut(atom)[i * dim + i] = Complex64::ONE;
            }
        }
        op
    }

    /// Assembles an operator from per-atom row-major fiber matrices.
    pub fn from_fibers(fibers: &[Vec<Complex64>]) -> Result<Self> {
        let atoms = fibers.len();
        if atoms == 0 {
            return Err(Error::InvalidInput("operator needs at least one fiber"));
        }
        let len = fibers[0].len();
        let dim = fp::sqrt(len as f64) as usize;
        if dim * dim != len || dim == 0 {
            return Err(Error::InvalidInput(
                "fiber matrices must be square and nonempty",
            ));
        }
        let mut data = Vec::with_capacity(atoms * len);
        for fiber in fibers {
            if fiber.len() != len {
                return Err(Error::DimensionMismatch {
                    what: "operator fiber",
                    expected: len,
                    got: fiber.len(),
                });
            }
            data.extend_from_slice(fiber);
        }
        Ok(Self { atoms, dim, data })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `dim × dim` matrix of one fiber.
    pub fn fiber(&self, atom: usize) -> &[Complex64] {
        let len = self.dim * self.dim;
        &self.data[atom * len..(atom + 1) * len]
    }

    pub fn fiber_mut(&mut self, atom: usize) -> &mut [Complex64] {
        let len = self.dim * self.dim;
        &mut self.data[atom * len..(atom + 1) * len]
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "operator shapes differ");
        Self {
            atoms: self.atoms,
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "operator shapes differ");
        Self {
            atoms: self.atoms,
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            atoms: self.atoms,
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    /// Scalar action `a·T`: multiplies each fiber by the atom's value.
    pub fn scale_step(&self, scalar: &StepFunction) -> Self {
        assert_eq!(self.atoms, scalar.len(), "scalar atom count differs");
        let mut out = self.clone();
        let len = self.dim * self.dim;
        for atom in 0..self.atoms {
            let s = scalar.value(atom);
            for v in &mut out.data[atom * len..(atom + 1) * len] {
                *v *= s;
            }
        }
        out
    }

    /// Zeroes the fibers outside the mask, i.e. `π·T`.
    pub fn restrict(&self, mask: &Idempotent) -> Self {
        assert_eq!(self.atoms, mask.len(), "mask atom count differs");
        let mut out = self.clone();
        for atom in 0..self.atoms {
            if !mask.get(atom) {
                out.fiber_mut(atom).fill(Complex64::ZERO);
            }
        }
        out
    }

    /// Fiberwise composition `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "operator shapes differ");
        let dim = self.dim;
        let mut out = Self::zero(self.atoms, dim);
        for atom in 0..self.atoms {
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

    fn shape(&self) -> (usize, usize) {
        (self.atoms, self.dim)
    }
}
