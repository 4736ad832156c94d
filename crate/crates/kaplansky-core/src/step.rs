//! Scalars of the bundle: step functions and their idempotent lattice.
//!
//! A `StepFunction` is an element of the scalar algebra — one complex value
//! per atom. Idempotents are the 0/1-valued step functions, represented as
//! boolean masks; they form the projection lattice the spectral merge
//! splices along. Binary operations assert matching atom counts: mixing
//! scalars from different spaces is a programming error, not an input error.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fp;

/// One complex value per atom of a measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    values: Vec<Complex64>,
}

impl StepFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zero(atoms: usize) -> Self {
        Self {
            values: vec![Complex64::ZERO; atoms],
        }
    }

    pub fn constant(atoms: usize, value: Complex64) -> Self {
        Self {
            values: vec![value; atoms],
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> Complex64 {
        self.values[atom]
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest imaginary magnitude over atoms; zero for real functions.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(fp::abs(v.im)))
    }

    /// Errors unless every imaginary part is within `tol`.
    pub fn ensure_real(&self, tol: f64) -> Result<()> {
        for (atom, v) in self.values.iter().enumerate() {
            if fp::abs(v.im) > tol {
                return Err(Error::NotReal { atom, imag: v.im });
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "step function atom counts differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "step function atom counts differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            values: self.values.iter().map(|a| -a).collect(),
        }
    }

    /// Pointwise product, the algebra multiplication.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "step function atom counts differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|a| a.conj()).collect(),
        }
    }

    /// Pointwise modulus, a real step function.
    pub fn abs(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|a| Complex64::new(a.norm(), 0.0))
                .collect(),
        }
    }

    /// Positive part of a real step function: real parts clamped at zero.
    pub fn positive_part(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|a| Complex64::new(if a.re > 0.0 { a.re } else { 0.0 }, 0.0))
                .collect(),
        }
    }

    /// Support idempotent: the mask of atoms where the value is nonzero.
    pub fn support(&self) -> Idempotent {
        Idempotent {
            mask: self
                .values
                .iter()
                .map(|v| v.re != 0.0 || v.im != 0.0)
                .collect(),
        }
    }

    /// Zeroes the function outside the mask.
    pub fn restrict(&self, mask: &Idempotent) -> Self {
        assert_eq!(self.len(), mask.len(), "step function atom counts differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&mask.mask)
                .map(|(v, &m)| if m { *v } else { Complex64::ZERO })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// A 0/1-valued step function, stored as a boolean mask per atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Idempotent {
    mask: Vec<bool>,
}

impl Idempotent {
    pub fn new(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn full(atoms: usize) -> Self {
        Self {
            mask: vec![true; atoms],
        }
    }

    pub fn empty(atoms: usize) -> Self {
        Self {
            mask: vec![false; atoms],
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, atom: usize) -> bool {
        self.mask[atom]
    }

    /// Meet: componentwise AND.
    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "idempotent atom counts differ");
        Self {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    /// Join: componentwise OR.
    pub fn or(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "idempotent atom counts differ");
        Self {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    /// Complement π^⊥.
    pub fn complement(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|a| !a).collect(),
        }
    }

    /// Set difference `self ∧ other^⊥`.
    pub fn difference(&self, other: &Self) -> Self {
        self.and(&other.complement())
    }

    /// Lattice order: true when `self ≤ other` as projections.
    pub fn le(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn any(&self) -> bool {
        self.mask.iter().any(|b| *b)
    }

    pub fn all(&self) -> bool {
        self.mask.iter().all(|b| *b)
    }

    /// The idempotent as a 0/1 step function.
    pub fn to_step(&self) -> StepFunction {
        StepFunction {
            values: self
                .mask
                .iter()
                .map(|&m| if m { Complex64::ONE } else { Complex64::ZERO })
                .collect(),
        }
    }
}

/// Pairwise disjoint idempotents covering every atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionOfUnity {
    parts: Vec<Idempotent>,
}

impl PartitionOfUnity {
    /// Validates disjointness and coverage.
    pub fn new(parts: Vec<Idempotent>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidPartition(
                "partition must have at least one part",
            ));
        };
        let atoms = first.len();
        let mut seen = vec![false; atoms];
        for part in &parts {
            if part.len() != atoms {
                return Err(Error::InvalidPartition("parts have differing atom counts"));
            }
            for (covered, &m) in seen.iter_mut().zip(part.mask()) {
                if m {
                    if *covered {
                        return Err(Error::InvalidPartition("parts are not pairwise disjoint"));
                    }
                    *covered = true;
                }
            }
        }
        if !seen.iter().all(|c| *c) {
            return Err(Error::InvalidPartition("parts do not cover every atom"));
        }
        Ok(Self { parts })
    }

    /// The one-part partition {1}.
    pub fn trivial(atoms: usize) -> Self {
        Self {
            parts: vec![Idempotent::full(atoms)],
        }
    }

    pub fn parts(&self) -> &[Idempotent] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn atoms(&self) -> usize {
        self.parts[0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_is_exact() {
        let f = StepFunction::from_real(&[0.0, 1.0, -2.0, 1e-300]);
        assert_eq!(f.support().mask(), &[false, true, true, true]);
    }

    #[test]
    fn positive_part_clamps() {
        let f = StepFunction::from_real(&[-1.0, 0.0, 2.5]);
        let p = f.positive_part();
        assert_eq!(p.value(0), Complex64::ZERO);
        assert_eq!(p.value(1), Complex64::ZERO);
        assert_eq!(p.value(2), Complex64::new(2.5, 0.0));
    }

    #[test]
    fn idempotent_lattice() {
        let a = Idempotent::new(vec![true, true, false]);
        let b = Idempotent::new(vec![false, true, true]);
        assert_eq!(a.and(&b).mask(), &[false, true, false]);
        assert_eq!(a.or(&b).mask(), &[true, true, true]);
        assert_eq!(a.complement().mask(), &[false, false, true]);
        assert!(a.and(&b).le(&a));
        assert_eq!(a.difference(&b).mask(), &[true, false, false]);
    }

    #[test]
    fn partition_validation() {
        let a = Idempotent::new(vec![true, false]);
        let b = Idempotent::new(vec![false, true]);
        assert!(PartitionOfUnity::new(vec![a.clone(), b.clone()]).is_ok());
        assert!(PartitionOfUnity::new(vec![a.clone(), a.clone()]).is_err());
        assert!(PartitionOfUnity::new(vec![a]).is_err());
    }

    #[test]
    fn partition_allows_empty_parts() {
        let a = Idempotent::new(vec![true, true]);
        let e = Idempotent::empty(2);
        assert!(PartitionOfUnity::new(vec![e, a]).is_ok());
    }
}
