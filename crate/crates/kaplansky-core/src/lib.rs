//! Spectral decomposition of self-adjoint operator bundles over atomic
//! measure spaces.
//!
//! The crate discretizes the mixed-norm space `L^{2,∞}(S×Ω)` — functions
//! square-integrable in `s` with essentially bounded fiber norms in `ω` —
//! as a bundle of weighted finite-dimensional Hilbert spaces, one fiber per
//! atom of `Ω`. Scalars are step functions (one complex value per atom),
//! idempotent scalars form a boolean mask lattice, and module-linear
//! operators act fiberwise as matrices with quadrature weights absorbed.
//!
//! On top of that model sit three layers:
//!
//! * [`spectral`] — the Schmidt decomposition of an operator bundle by
//!   fiberwise rank classes, and the spectral form of self-adjoint bundles
//!   obtained by splicing positive and negative eigenvalue sequences along
//!   support idempotents, so that every eigenvalue is a step function and
//!   the sequence of absolute values is atomwise nonincreasing.
//! * [`pie`] — kernel-defined partial integral operators: Hilbert–Schmidt
//!   admissibility, operator assembly, the induced eigenvalue branches, and
//!   the solvability test for `∫ k(t,s,ω) f(s,ω) dμ(s) = λ(ω) f(t,ω)`,
//!   which holds exactly when `λ` agrees with a branch on a nonzero mask.
//! * [`vna`] — matrix fields over the scalar center: left supports,
//!   homogeneous decompositions of projection fields, ε-truncation
//!   projections, and the central diagonalization of self-adjoint fields
//!   into rank-one abelian projections with step-function coefficients.
//!
//! All computations are fiberwise and deterministic; eigenvector phases are
//! pinned so repeated runs produce identical output. With the `std` feature
//! disabled the crate is `no_std` (and fully functional on `alloc`); with it
//! enabled, per-fiber work is distributed across threads.
//!
//! ```
//! use kaplansky_core::{BundleOperator, Complex64, HkModule, MeasureSpace, SGrid};
//! use kaplansky_core::spectral::eigendecompose;
//!
//! // two atoms, one-dimensional fibers: the operator is diag(5) on the
//! // first atom and diag(-5) on the second
//! let module = HkModule::new(MeasureSpace::indexed(2)?, SGrid::unit(1)?);
//! let mut op = BundleOperator::zero(2, 1);
//! op.fiber_mut(0)[0] = Complex64::new(5.0, 0.0);
//! op.fiber_mut(1)[0] = Complex64::new(-5.0, 0.0);
//!
//! let spectral = eigendecompose(&module, &op, 1e-10)?;
//! // one rank-1 class covering both atoms, whose eigenvalue is a step
//! // function carrying both signs
//! let class = &spectral.classes[0];
//! assert!(class.mask.all());
//! assert_eq!(class.values[0].value(0).re, 5.0);
//! assert_eq!(class.values[0].value(1).re, -5.0);
//!
//! let back = spectral.reconstruct(&module)?;
//! assert!(module.operator_norm(&back.sub(&op))? < 1e-12);
//! # Ok::<(), kaplansky_core::Error>(())
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod element;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod module;
pub mod operator;
pub mod pie;
pub mod spectral;
pub mod step;
pub mod vna;

#[cfg(test)]
pub(crate) mod testutil;

/// Float helpers routed through `num_traits`, so `no_std` builds fall back
/// to `libm` while `std` builds use the intrinsics.
pub(crate) mod fp {
    #[inline]
    pub(crate) fn sqrt(x: f64) -> f64 {
        num_traits::Float::sqrt(x)
    }

    #[inline]
    pub(crate) fn abs(x: f64) -> f64 {
        num_traits::Float::abs(x)
    }

    #[inline]
    pub(crate) fn round(x: f64) -> f64 {
        num_traits::Float::round(x)
    }
}

pub use element::ModuleElement;
pub use error::{Error, Result};
pub use measure::{MeasureSpace, SGrid};
pub use module::{HkModule, SELF_ADJOINT_RTOL};
pub use operator::BundleOperator;
pub use step::{Idempotent, PartitionOfUnity, StepFunction};

pub use num_complex::Complex64;

/// Default relative tolerance deciding numerical rank per fiber.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default absolute tolerance for matching eigenvalue branches.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-8;
/// Default absolute tolerance standing in for almost-everywhere equality.
pub const DEFAULT_EQUALITY_TOL: f64 = 1e-12;

/// Configures the global thread pool used for per-fiber work.
/// `threads == 0` keeps the library default (one thread per core).
/// Must be called before the first parallel computation; later calls fail.
#[cfg(feature = "std")]
pub fn configure_parallelism(threads: usize) -> core::result::Result<(), alloc::string::String> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| alloc::format!("{e}"))
}

/// Maps a fallible computation over fiber indices, in parallel when the
/// `std` feature is enabled. Results keep fiber order.
pub(crate) fn try_map_fibers<T, F>(count: usize, f: F) -> Result<alloc::vec::Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..count).map(f).collect()
    }
}
