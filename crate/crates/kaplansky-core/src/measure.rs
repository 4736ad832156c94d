//! Atomic measure space and quadrature grid.
//!
//! `MeasureSpace` is the base space of the bundle: finitely many named atoms,
//! each carrying strictly positive mass. `SGrid` discretizes the auxiliary
//! integration variable: sample points with strictly positive quadrature
//! weights. All fiberwise computations index atoms and grid points by
//! position; the names exist for file interchange and reporting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Finite atomic measure space: named atoms with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace {
    atoms: Vec<String>,
    weights: Vec<f64>,
}

impl MeasureSpace {
    /// Builds a measure space, validating positivity and uniqueness.
    pub fn new(atoms: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasureSpace("at least one atom is required"));
        }
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "measure space weights",
                expected: atoms.len(),
                got: weights.len(),
            });
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidMeasureSpace(
                "atom weights must be finite and strictly positive",
            ));
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i] == atoms[j] {
                    return Err(Error::InvalidMeasureSpace(
                        "atom identifiers must be unique",
                    ));
                }
            }
        }
        Ok(Self { atoms, weights })
    }

    /// Space with `count` unit-mass atoms named `a0`, `a1`, ...
    pub fn indexed(count: usize) -> Result<Self> {
        let atoms = (0..count).map(|i| format!("a{i}")).collect();
        let weights = vec![1.0; count];
        Self::new(atoms, weights)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Quadrature grid for the auxiliary space: sample points with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SGrid {
    points: Vec<String>,
    quad_weights: Vec<f64>,
}

impl SGrid {
    /// Builds a grid, validating weight positivity.
    pub fn new(points: Vec<String>, quad_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("at least one grid point is required"));
        }
        if points.len() != quad_weights.len() {
            return Err(Error::DimensionMismatch {
                what: "grid quadrature weights",
                expected: points.len(),
                got: quad_weights.len(),
            });
        }
        if !quad_weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidGrid(
                "quadrature weights must be finite and strictly positive",
            ));
        }
        Ok(Self {
            points,
            quad_weights,
        })
    }

    /// Grid with `count` points named `s0`, `s1`, ... and unit weights.
    pub fn unit(count: usize) -> Result<Self> {
        let points = (0..count).map(|i| format!("s{i}")).collect();
        let quad_weights = vec![1.0; count];
        Self::new(points, quad_weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
}
