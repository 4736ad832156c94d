//! Elements of the discretized mixed-norm space: one complex vector per atom.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::step::{Idempotent, PartitionOfUnity, StepFunction};

/// One fiber vector (indexed by grid points) per atom, stored flat atom-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleElement {
    atoms: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl ModuleElement {
    pub fn zero(atoms: usize, dim: usize) -> Self {
        Self {
            atoms,
            dim,
            data: vec![Complex64::ZERO; atoms * dim],
        }
    }

    /// Assembles an element from per-atom fiber vectors.
    pub fn from_fibers(fibers: &[Vec<Complex64>]) -> Result<Self> {
        let atoms = fibers.len();
        if atoms == 0 {
            return Err(Error::InvalidInput("element needs at least one fiber"));
        }
        let dim = fibers[0].len();
        let mut data = Vec::with_capacity(atoms * dim);
        for fiber in fibers {
            if fiber.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "element fiber",
                    expected: dim,
                    got: fiber.len(),
                });
            }
            data.extend_from_slice(fiber);
        }
        Ok(Self { atoms, dim, data })
    }

    pub fn from_flat(atoms: usize, dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != atoms * dim {
            return Err(Error::DimensionMismatch {
                what: "element data",
                expected: atoms * dim,
                got: data.len(),
            });
        }
        Ok(Self { atoms, dim, data })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber(&self, atom: usize) -> &[Complex64] {
        &self.data[atom * self.dim..(atom + 1) * self.dim]
    }

    pub fn fiber_mut(&mut self, atom: usize) -> &mut [Complex64] {
        &mut self.data[atom * self.dim..(atom + 1) * self.dim]
    }

    pub fn set_fiber(&mut self, atom: usize, fiber: &[Complex64]) {
        assert_eq!(fiber.len(), self.dim, "fiber dimension differs");
        self.fiber_mut(atom).copy_from_slice(fiber);
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
        assert_eq!(self.shape(), other.shape(), "element shapes differ");
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
        assert_eq!(self.shape(), other.shape(), "element shapes differ");
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

    /// Module action of the scalar algebra: multiplies each fiber by the
    /// atom's scalar value.
    pub fn scale_step(&self, scalar: &StepFunction) -> Self {
        assert_eq!(self.atoms, scalar.len(), "scalar atom count differs");
        let mut out = self.clone();
        for atom in 0..self.atoms {
            let s = scalar.value(atom);
            for v in out.fiber_mut(atom) {
                *v *= s;
            }
        }
        out
    }

    /// Zeroes the fibers outside the mask.
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

    /// Splices a family along a partition of unity: the returned element
    /// agrees with `elements[i]` on the atoms of `partition.parts()[i]`.
    /// The splice is an exact copy, no arithmetic.
    pub fn mix(partition: &PartitionOfUnity, elements: &[Self]) -> Result<Self> {
        if partition.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                what: "mix elements",
                expected: partition.len(),
                got: elements.len(),
            });
        }
        let atoms = partition.atoms();
        let dim = elements[0].dim;
        for element in elements {
            if element.atoms != atoms || element.dim != dim {
                return Err(Error::DimensionMismatch {
                    what: "mix element shape",
                    expected: atoms * dim,
                    got: element.atoms * element.dim,
                });
            }
        }
        let mut out = Self::zero(atoms, dim);
        for (part, element) in partition.parts().iter().zip(elements) {
            for atom in 0..atoms {
                if part.get(atom) {
                    out.set_fiber(atom, element.fiber(atom));
                }
            }
        }
        Ok(out)
    }

    fn shape(&self) -> (usize, usize) {
        (self.atoms, self.dim)
    }
}
