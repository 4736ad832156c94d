//! Partial integral operators with step-function eigenvalues.
//!
//! A kernel sample bundle holds, per atom `ω`, a matrix of kernel values
//! `k(t_i, s_j, ω)` on the grid. The induced operator integrates over the
//! grid variable only,
//!
//! ```text
//! (T f)(t, ω) = Σ_j w_j · k(t, s_j, ω) · f(s_j, ω),
//! ```
//!
//! so it acts fiberwise and inherits a spectral form with eigenvalue
//! branches that are step functions of `ω`. The eigenvalue problem
//! `T f = λ f` with a step-function `λ` is solvable exactly when `λ`
//! agrees with some branch on a nonzero mask of atoms; `check_solvable`
//! decides that and returns a canonical witness.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::element::ModuleElement;
use crate::error::{Error, Result};
use crate::fp;
use crate::measure::{MeasureSpace, SGrid};
use crate::module::{HkModule, SELF_ADJOINT_RTOL};
use crate::operator::BundleOperator;
use crate::spectral::{eigendecompose, fiber_spectrum, SpectralDecomposition};
use crate::step::{Idempotent, StepFunction};

/// Kernel samples `k(t_i, s_j, ω)` per atom, row-major over `(t, s)`.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    space: MeasureSpace,
    grid: SGrid,
    selfadjoint: bool,
    samples: Vec<Complex64>,
}

/// Largest Hermitian defect of raw kernel samples and its location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelAsymmetry {
    pub value: f64,
    pub atom: usize,
    pub row: usize,
    pub col: usize,
}

/// Scans per-atom sample matrices for the worst `|k(t,s) - conj(k(s,t))|`.
pub fn kernel_asymmetry(samples: &[Vec<Complex64>], dim: usize) -> Option<KernelAsymmetry> {
    let mut worst: Option<KernelAsymmetry> = None;
    for (atom, matrix) in samples.iter().enumerate() {
        for i in 0..dim {
            for j in i..dim {
                let defect = (matrix[i * dim + j] - matrix[j * dim + i].conj()).norm();
                if worst.as_ref().is_none_or(|w| defect > w.value) {
                    worst = Some(KernelAsymmetry {
                        value: defect,
                        atom,
                        row: i,
                        col: j,
                    });
                }
            }
        }
    }
    worst
}

impl KernelBundle {
    /// Builds a kernel bundle from per-atom sample matrices.
    ///
    /// When `selfadjoint` is set the samples must satisfy
    /// `k(t,s,ω) = conj(k(s,t,ω))` within [`SELF_ADJOINT_RTOL`] relative to
    /// the largest sample magnitude; they are then symmetrized exactly so
    /// the built operator is Hermitian to the last bit.
    pub fn new(
        space: MeasureSpace,
        grid: SGrid,
        selfadjoint: bool,
        samples: &[Vec<Complex64>],
    ) -> Result<Self> {
        let atoms = space.len();
        let dim = grid.len();
        if samples.len() != atoms {
            return Err(Error::DimensionMismatch {
                what: "kernel sample matrices",
                expected: atoms,
                got: samples.len(),
            });
        }
        let mut flat = Vec::with_capacity(atoms * dim * dim);
        for matrix in samples {
            if matrix.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    what: "kernel sample matrix",
                    expected: dim * dim,
                    got: matrix.len(),
                });
            }
            flat.extend_from_slice(matrix);
        }
        if !flat.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "kernel samples",
            });
        }
        let mut bundle = Self {
            space,
            grid,
            selfadjoint,
            samples: flat,
        };
        if selfadjoint {
            let scale = samples
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.norm()));
            if let Some(asym) = kernel_asymmetry(samples, dim) {
                if asym.value > SELF_ADJOINT_RTOL * scale.max(1e-300) {
                    return Err(Error::NotSelfAdjoint {
                        atom: asym.atom,
                        residual: asym.value,
                    });
                }
            }
            for atom in 0..atoms {
                let fiber = bundle.fiber_mut(atom);
                for i in 0..dim {
                    for j in i..dim {
                        let avg = 0.5 * (fiber[i * dim + j] + fiber[j * dim + i].conj());
                        fiber[i * dim + j] = avg;
                        fiber[j * dim + i] = avg.conj();
                    }
                }
            }
        }
        Ok(bundle)
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    pub fn selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn fiber(&self, atom: usize) -> &[Complex64] {
        let len = self.dim() * self.dim();
        &self.samples[atom * len..(atom + 1) * len]
    }

    fn fiber_mut(&mut self, atom: usize) -> &mut [Complex64] {
        let len = self.dim() * self.dim();
        &mut self.samples[atom * len..(atom + 1) * len]
    }

    /// The module the kernel's operator acts on.
    pub fn module(&self) -> HkModule {
        HkModule::new(self.space.clone(), self.grid.clone())
    }
}

/// Hilbert–Schmidt weight of each fiber kernel: the quadrature double sum
/// `Σ_{t,s} w_t w_s |k(t,s,ω)|²`, a nonnegative real step function. Its
/// maximum over atoms is the admissibility bound.
pub fn hs_check(kernel: &KernelBundle) -> Result<StepFunction> {
    let dim = kernel.dim();
    let weights = kernel.grid().quad_weights();
    let values: Vec<f64> = (0..kernel.atoms())
        .map(|atom| {
            let matrix = kernel.fiber(atom);
            let mut acc = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    acc += weights[i] * weights[j] * matrix[i * dim + j].norm_sqr();
                }
            }
            acc
        })
        .collect();
    Ok(StepFunction::from_real(&values))
}

/// Assembles the partial integral operator: fiber matrices
/// `A[i][j] = k(t_i, s_j, ω) · w_j`, so application realizes the
/// quadrature integral.
pub fn build_operator(kernel: &KernelBundle) -> Result<BundleOperator> {
    let dim = kernel.dim();
    let weights = kernel.grid().quad_weights();
    let mut op = BundleOperator::zero(kernel.atoms(), dim);
    for atom in 0..kernel.atoms() {
        let matrix = kernel.fiber(atom);
        let fiber = op.fiber_mut(atom);
        for i in 0..dim {
            for j in 0..dim {
                fiber[i * dim + j] = matrix[i * dim + j] * weights[j];
            }
        }
    }
    Ok(op)
}

/// Spectral form of a self-adjoint kernel's operator. The rank classes
/// partition the atoms; eigenvalue branches are step functions supported
/// on their class.
pub fn kernel_spectrum(kernel: &KernelBundle, rank_tol: f64) -> Result<SpectralDecomposition> {
    if !kernel.selfadjoint() {
        return Err(Error::InvalidInput("kernel is not flagged self-adjoint"));
    }
    hs_check(kernel)?;
    let module = kernel.module();
    eigendecompose(&module, &build_operator(kernel)?, rank_tol)
}

/// A nonzero mask on which `λ` agrees with one eigenvalue branch, plus the
/// matching eigenfunction restricted to that mask.
///
/// `branch = (k, n)` with `n ≥ 1` names the `n`-th branch of rank class
/// `k`; `n = 0` names the null branch of a rank-deficient class (the
/// eigenvalue-0 directions).
#[derive(Debug, Clone)]
pub struct SolvabilityWitness {
    pub pi: Idempotent,
    pub branch: (usize, usize),
    pub eigenvalue: StepFunction,
    pub eigenfunction: ModuleElement,
    pub max_gap: f64,
}

/// Outcome of [`check_solvable`].
#[derive(Debug, Clone)]
pub enum Solvability {
    Solvable(SolvabilityWitness),
    NotSolvable { min_gap: f64 },
}

impl Solvability {
    pub fn is_solvable(&self) -> bool {
        matches!(self, Solvability::Solvable(_))
    }
}

/// Decides solvability of `T f = λ f` by scanning every eigenvalue branch
/// (including the null branches of rank-deficient fibers) for atoms where
/// `|λ(ω) - λ_{k,n}(ω)| ≤ solve_tol`. Among the nonempty match masks the
/// largest wins, ties broken by the lexicographically smallest `(k, n)`.
pub fn check_solvable(
    kernel: &KernelBundle,
    lambda: &StepFunction,
    solve_tol: f64,
    rank_tol: f64,
) -> Result<Solvability> {
    if solve_tol <= 0.0 || !solve_tol.is_finite() {
        return Err(Error::InvalidInput("solve tolerance must be positive"));
    }
    if lambda.len() != kernel.atoms() {
        return Err(Error::DimensionMismatch {
            what: "lambda step function",
            expected: kernel.atoms(),
            got: lambda.len(),
        });
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite {
            what: "lambda step function",
        });
    }
    lambda.ensure_real(solve_tol)?;

    let spectrum = kernel_spectrum(kernel, rank_tol)?;
    let atoms = kernel.atoms();
    let dim = kernel.dim();

    // Branches in lexicographic (k, n) order: each class contributes its
    // null branch (n = 0) when rank-deficient, then the signed branches.
    struct Candidate {
        branch: (usize, usize),
        class_mask: Idempotent,
        values: StepFunction,
        vector: Option<ModuleElement>,
    }
    let mut candidates = Vec::new();
    if spectrum.zero_mask.any() {
        candidates.push(Candidate {
            branch: (0, 0),
            class_mask: spectrum.zero_mask.clone(),
            values: StepFunction::zero(atoms),
            vector: None,
        });
    }
    for class in &spectrum.classes {
        if class.rank < dim {
            candidates.push(Candidate {
                branch: (class.rank, 0),
                class_mask: class.mask.clone(),
                values: StepFunction::zero(atoms),
                vector: None,
            });
        }
        for n in 0..class.rank {
            candidates.push(Candidate {
                branch: (class.rank, n + 1),
                class_mask: class.mask.clone(),
                values: class.values[n].clone(),
                vector: Some(class.vectors[n].clone()),
            });
        }
    }

    let mut best: Option<(usize, &Candidate, Idempotent)> = None;
    let mut min_gap = f64::INFINITY;
    for candidate in &candidates {
        let mut mask = vec![false; atoms];
        for (atom, matched) in mask.iter_mut().enumerate() {
            if !candidate.class_mask.get(atom) {
                continue;
            }
            let gap = (lambda.value(atom) - candidate.values.value(atom)).norm();
            min_gap = min_gap.min(gap);
            if gap <= solve_tol {
                *matched = true;
            }
        }
        let mask = Idempotent::new(mask);
        let count = mask.count();
        if count > 0 && best.as_ref().is_none_or(|(c, _, _)| count > *c) {
            best = Some((count, candidate, mask));
        }
    }

    let Some((_, candidate, pi)) = best else {
        return Ok(Solvability::NotSolvable { min_gap });
    };

    let eigenfunction = match &candidate.vector {
        Some(vector) => vector.restrict(&pi),
        None => {
            // Null branch: per matching atom, the fiber eigenvector with the
            // smallest |eigenvalue|.
            let module = kernel.module();
            let op = build_operator(kernel)?;
            let mut out = ModuleElement::zero(atoms, dim);
            for atom in 0..atoms {
                if !pi.get(atom) {
                    continue;
                }
                let fiber = fiber_spectrum(&module, &op, atom, rank_tol)?;
                let mut pick = 0;
                for (i, value) in fiber.values.iter().enumerate() {
                    if fp::abs(*value) < fp::abs(fiber.values[pick]) {
                        pick = i;
                    }
                }
                out.set_fiber(atom, &fiber.vectors[pick]);
            }
            out
        }
    };

    let mut max_gap: f64 = 0.0;
    for atom in 0..atoms {
        if pi.get(atom) {
            max_gap = max_gap.max((lambda.value(atom) - candidate.values.value(atom)).norm());
        }
    }

    let eigenvalue = candidate.values.restrict(&pi);
    Ok(Solvability::Solvable(SolvabilityWitness {
        pi,
        branch: candidate.branch,
        eigenvalue,
        eigenfunction,
        max_gap,
    }))
}

/// A solution of `T f = λ f` with its verified residual.
#[derive(Debug, Clone)]
pub struct PieSolution {
    pub witness: SolvabilityWitness,
    pub residual: f64,
    pub residual_bound: f64,
}

/// Solves the eigenvalue equation when a witness exists, verifying the
/// residual bound `‖T f - λ f‖ ≤ 10 · solve_tol · ‖T‖`. A violated bound
/// signals inconsistent tolerances and is reported as an error rather than
/// returned as a solution.
pub fn solve_pie(
    kernel: &KernelBundle,
    lambda: &StepFunction,
    solve_tol: f64,
    rank_tol: f64,
) -> Result<PieSolution> {
    let witness = match check_solvable(kernel, lambda, solve_tol, rank_tol)? {
        Solvability::Solvable(witness) => witness,
        Solvability::NotSolvable { min_gap } => return Err(Error::NotSolvable { min_gap }),
    };
    let module = kernel.module();
    let op = build_operator(kernel)?;
    let f = &witness.eigenfunction;
    let image = module.apply(&op, f)?;
    let residual = module.module_norm(&image.sub(&f.scale_step(lambda)))?;
    let residual_bound = 10.0 * solve_tol * module.operator_norm(&op)?;
    if residual > residual_bound {
        return Err(Error::ResidualBound {
            residual,
            bound: residual_bound,
        });
    }
    Ok(PieSolution {
        witness,
        residual,
        residual_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn space(atoms: usize) -> MeasureSpace {
        MeasureSpace::indexed(atoms).unwrap()
    }

    /// Two-point grid with total mass 1.
    fn half_grid() -> SGrid {
        SGrid::new(vec!["s0".into(), "s1".into()], vec![0.5, 0.5]).unwrap()
    }

    /// Separable kernel k(t,s,ω) = Σ_r coeff[r](ω) · φ_r(t) conj(φ_r(s)).
    fn separable_kernel(
        grid: &SGrid,
        phis: &[Vec<Complex64>],
        coeffs: &[Vec<f64>],
    ) -> Vec<Vec<Complex64>> {
        let dim = grid.len();
        let atoms = coeffs[0].len();
        (0..atoms)
            .map(|atom| {
                let mut matrix = vec![Complex64::ZERO; dim * dim];
                for (phi, coeff) in phis.iter().zip(coeffs) {
                    for i in 0..dim {
                        for j in 0..dim {
                            matrix[i * dim + j] += coeff[atom] * phi[i] * phi[j].conj();
                        }
                    }
                }
                matrix
            })
            .collect()
    }

    /// A unit vector in the weighted geometry of `grid`.
    fn unit_phi(grid: &SGrid, raw: &[Complex64]) -> Vec<Complex64> {
        let norm_sq: f64 = raw
            .iter()
            .zip(grid.quad_weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum();
        let norm = norm_sq.sqrt();
        raw.iter().map(|v| v / norm).collect()
    }

    #[test]
    fn hs_check_of_zero_kernel() {
        let kernel = KernelBundle::new(
            space(2),
            half_grid(),
            true,
            &[vec![Complex64::ZERO; 4], vec![Complex64::ZERO; 4]],
        )
        .unwrap();
        assert_eq!(hs_check(&kernel).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn hs_check_of_constant_kernel_on_unit_mass_grid() {
        // k ≡ 1 on a grid of total mass 1: (Σ w)² = 1.
        let kernel = KernelBundle::new(space(1), half_grid(), true, &[vec![c(1.0); 4]]).unwrap();
        let hs = hs_check(&kernel).unwrap();
        assert!((hs.value(0).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hs_check_of_rank_one_kernel_is_norm_fourth() {
        let grid = half_grid();
        let phi = vec![c(1.0), c(2.0)];
        let samples = separable_kernel(&grid, std::slice::from_ref(&phi), &[vec![1.0]]);
        let kernel = KernelBundle::new(space(1), grid.clone(), true, &samples).unwrap();
        let norm_sq: f64 = phi
            .iter()
            .zip(grid.quad_weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum();
        let hs = hs_check(&kernel).unwrap();
        assert!((hs.value(0).re - norm_sq * norm_sq).abs() < 1e-13);
    }

    #[test]
    fn hs_check_scales_quadratically() {
        let grid = half_grid();
        let samples = vec![vec![c(1.0), c(0.5), c(0.5), c(-2.0)]];
        let kernel = KernelBundle::new(space(1), grid.clone(), true, &samples).unwrap();
        let scaled: Vec<Vec<Complex64>> = samples
            .iter()
            .map(|m| m.iter().map(|v| 3.0 * v).collect())
            .collect();
        let kernel3 = KernelBundle::new(space(1), grid, true, &scaled).unwrap();
        let a = hs_check(&kernel).unwrap().value(0).re;
        let b = hs_check(&kernel3).unwrap().value(0).re;
        assert!((b - 9.0 * a).abs() < 1e-12 * b.max(1.0));
    }

    #[test]
    fn build_operator_of_zero_kernel_is_zero() {
        let kernel = KernelBundle::new(
            space(2),
            half_grid(),
            true,
            &[vec![Complex64::ZERO; 4], vec![Complex64::ZERO; 4]],
        )
        .unwrap();
        assert_eq!(build_operator(&kernel).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn build_operator_matches_rank_one() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), Complex64::new(0.5, 1.5)]);
        let samples = separable_kernel(&grid, std::slice::from_ref(&phi), &[vec![1.0, 1.0]]);
        let kernel = KernelBundle::new(space(2), grid.clone(), true, &samples).unwrap();
        let op = build_operator(&kernel).unwrap();
        let module = kernel.module();
        let phi_element = ModuleElement::from_fibers(&[phi.clone(), phi.clone()]).unwrap();
        let expected = module.rank_one(&phi_element, &phi_element).unwrap();
        assert!(op.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn spectrum_series_reconstructs_random_kernels() {
        let mut rng = crate::testutil::Splitmix::new(771);
        for _ in 0..5 {
            let grid = half_grid();
            let samples: Vec<Vec<Complex64>> = (0..3)
                .map(|_| {
                    let g: Vec<Complex64> = (0..4).map(|_| rng.complex()).collect();
                    // entrywise Hermitian sample matrix
                    vec![
                        Complex64::new(g[0].re, 0.0),
                        g[1],
                        g[1].conj(),
                        Complex64::new(g[3].re, 0.0),
                    ]
                })
                .collect();
            let kernel = KernelBundle::new(space(3), grid, true, &samples).unwrap();
            let spectrum = kernel_spectrum(&kernel, 1e-10).unwrap();
            let module = kernel.module();
            let op = build_operator(&kernel).unwrap();
            let norm = module.operator_norm(&op).unwrap();
            let residual = module
                .operator_norm(&spectrum.reconstruct(&module).unwrap().sub(&op))
                .unwrap();
            assert!(residual <= 1e-10 * norm);
        }
    }

    #[test]
    fn symmetric_kernel_builds_selfadjoint_operator() {
        let grid = half_grid();
        let samples = vec![vec![c(1.0), c(0.7), c(0.7), c(-2.0)]];
        let kernel = KernelBundle::new(space(1), grid, true, &samples).unwrap();
        let module = kernel.module();
        let op = build_operator(&kernel).unwrap();
        let (residual, _, _) = module.self_adjointness(&op).unwrap();
        assert!(residual < 1e-13);
    }

    #[test]
    fn asymmetric_kernel_flagged_selfadjoint_is_rejected() {
        let grid = half_grid();
        let samples = vec![vec![c(1.0), c(0.7), c(0.2), c(-2.0)]];
        let err = KernelBundle::new(space(1), grid, true, &samples);
        assert!(matches!(err, Err(Error::NotSelfAdjoint { .. })));
        let asym = kernel_asymmetry(&samples, 2).unwrap();
        assert!((asym.value - 0.5).abs() < 1e-15);
        assert_eq!((asym.atom, asym.row, asym.col), (0, 0, 1));
    }

    #[test]
    fn spectrum_of_zero_kernel_is_all_zero_class() {
        let kernel = KernelBundle::new(
            space(2),
            half_grid(),
            true,
            &[vec![Complex64::ZERO; 4], vec![Complex64::ZERO; 4]],
        )
        .unwrap();
        let spectrum = kernel_spectrum(&kernel, 1e-10).unwrap();
        assert!(spectrum.zero_mask.all());
        assert!(spectrum.classes.is_empty());
    }

    #[test]
    fn spectrum_of_unit_rank_one_kernel() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), Complex64::new(-0.3, 0.8)]);
        let samples = separable_kernel(&grid, std::slice::from_ref(&phi), &[vec![1.0, 1.0]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let spectrum = kernel_spectrum(&kernel, 1e-10).unwrap();
        assert_eq!(spectrum.classes.len(), 1);
        let class = &spectrum.classes[0];
        assert_eq!(class.rank, 1);
        for atom in 0..2 {
            assert!((class.values[0].value(atom).re - 1.0).abs() < 1e-12);
        }
        // eigenfunction matches φ up to phase
        let module = kernel.module();
        let phi_element = ModuleElement::from_fibers(&[phi.clone(), phi]).unwrap();
        let overlap = module
            .inner_product(&class.vectors[0], &phi_element)
            .unwrap();
        for atom in 0..2 {
            assert!((overlap.value(atom).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_orders_separable_kernel_branches_by_magnitude() {
        let grid = half_grid();
        let phi1 = unit_phi(&grid, &[c(1.0), c(1.0)]);
        let phi2 = unit_phi(&grid, &[c(1.0), c(-1.0)]);
        // orthogonal by construction on the symmetric grid
        let samples = separable_kernel(
            &grid,
            &[phi1.clone(), phi2.clone()],
            &[vec![2.0], vec![-3.0]],
        );
        let kernel = KernelBundle::new(space(1), grid, true, &samples).unwrap();
        let spectrum = kernel_spectrum(&kernel, 1e-10).unwrap();
        assert_eq!(spectrum.classes.len(), 1);
        let class = &spectrum.classes[0];
        assert_eq!(class.rank, 2);
        assert!((class.values[0].value(0).re + 3.0).abs() < 1e-12);
        assert!((class.values[1].value(0).re - 2.0).abs() < 1e-12);
        let module = kernel.module();
        let phi2_el = ModuleElement::from_fibers(&[phi2]).unwrap();
        let phi1_el = ModuleElement::from_fibers(&[phi1]).unwrap();
        let o1 = module.inner_product(&class.vectors[0], &phi2_el).unwrap();
        let o2 = module.inner_product(&class.vectors[1], &phi1_el).unwrap();
        assert!((o1.value(0).norm() - 1.0).abs() < 1e-11);
        assert!((o2.value(0).norm() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn zero_lambda_matches_rank_deficient_atoms() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), c(1.0)]);
        // atom 0: rank-one (null direction exists); atom 1: full rank
        let mut samples = separable_kernel(&grid, std::slice::from_ref(&phi), &[vec![1.0, 1.0]]);
        let phi_perp = unit_phi(&grid, &[c(1.0), c(-1.0)]);
        let second = separable_kernel(&grid, &[phi_perp], &[vec![0.0, 2.0]]);
        for (dst, src) in samples.iter_mut().zip(second) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let lambda = StepFunction::zero(2);
        let result = check_solvable(&kernel, &lambda, 1e-8, 1e-10).unwrap();
        let Solvability::Solvable(witness) = result else {
            panic!("expected solvable");
        };
        assert_eq!(witness.pi.mask(), &[true, false]);
        assert_eq!(witness.branch, (1, 0));
        // the eigenfunction is a genuine null vector
        let module = kernel.module();
        let op = build_operator(&kernel).unwrap();
        let image = module.apply(&op, &witness.eigenfunction).unwrap();
        assert!(module.module_norm(&image).unwrap() < 1e-12);
        assert!((module.module_norm(&witness.eigenfunction).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_copied_from_branch_matches_fully() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), Complex64::new(0.2, -0.5)]);
        let samples = separable_kernel(&grid, &[phi], &[vec![1.5, -0.75]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let spectrum = kernel_spectrum(&kernel, 1e-10).unwrap();
        let lambda = spectrum.classes[0].values[0].clone();
        let result = check_solvable(&kernel, &lambda, 1e-8, 1e-10).unwrap();
        let Solvability::Solvable(witness) = result else {
            panic!("expected solvable");
        };
        assert!(witness.pi.all());
        assert_eq!(witness.branch, (1, 1));
        assert_eq!(witness.max_gap, 0.0);
    }

    #[test]
    fn lambda_offset_beyond_tolerance_is_not_solvable() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), c(0.4)]);
        let samples = separable_kernel(&grid, &[phi], &[vec![1.0, 1.0]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let solve_tol = 1e-8;
        let lambda = StepFunction::constant(2, c(1.0 + 10.0 * solve_tol));
        let result = check_solvable(&kernel, &lambda, solve_tol, 1e-10).unwrap();
        assert!(!result.is_solvable());
        let Solvability::NotSolvable { min_gap } = result else {
            unreachable!();
        };
        assert!((min_gap - 10.0 * solve_tol).abs() < 1e-12);
    }

    #[test]
    fn solve_zero_kernel_with_zero_lambda() {
        let kernel = KernelBundle::new(
            space(2),
            half_grid(),
            true,
            &[vec![Complex64::ZERO; 4], vec![Complex64::ZERO; 4]],
        )
        .unwrap();
        let solution = solve_pie(&kernel, &StepFunction::zero(2), 1e-8, 1e-10).unwrap();
        assert_eq!(solution.residual, 0.0);
        assert_eq!(solution.witness.branch, (0, 0));
        assert!(solution.witness.pi.all());
    }

    #[test]
    fn solve_rank_one_kernel_returns_phi() {
        let grid = half_grid();
        let raw = [c(1.0), Complex64::new(0.5, 0.25)];
        let phi = unit_phi(&grid, &raw);
        let norm_sq: f64 = raw
            .iter()
            .zip(grid.quad_weights())
            .map(|(v, w)| w * v.norm_sqr())
            .sum();
        // unnormalized kernel: k = ψ ψ* with ψ = raw has eigenvalue ‖ψ‖²
        let samples = separable_kernel(&grid, &[raw.to_vec()], &[vec![1.0, 1.0]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let lambda = StepFunction::constant(2, c(norm_sq));
        let solution = solve_pie(&kernel, &lambda, 1e-8, 1e-10).unwrap();
        assert!(solution.residual < 1e-12);
        let module = kernel.module();
        let phi_element = ModuleElement::from_fibers(&[phi.clone(), phi]).unwrap();
        let overlap = module
            .inner_product(&solution.witness.eigenfunction, &phi_element)
            .unwrap();
        for atom in 0..2 {
            assert!((overlap.value(atom).norm() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn inconsistent_tolerances_fail_the_residual_bound() {
        // ‖T‖ ≈ 1e-12 but solve_tol = 1e-3: λ = 5e-4 matches the tiny branch
        // within tolerance, yet the residual 5e-4 dwarfs 10·solve_tol·‖T‖.
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), c(1.0)]);
        let samples = separable_kernel(&grid, &[phi], &[vec![1e-12, 1e-12]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let lambda = StepFunction::constant(2, c(5e-4));
        let err = solve_pie(&kernel, &lambda, 1e-3, 1e-10);
        assert!(matches!(err, Err(Error::ResidualBound { .. })));
    }

    #[test]
    fn nonreal_lambda_is_rejected() {
        let kernel = KernelBundle::new(
            space(1),
            half_grid(),
            true,
            &[vec![c(1.0), c(0.0), c(0.0), c(1.0)]],
        )
        .unwrap();
        let lambda = StepFunction::constant(1, Complex64::new(1.0, 0.5));
        let err = check_solvable(&kernel, &lambda, 1e-8, 1e-10);
        assert!(matches!(err, Err(Error::NotReal { .. })));
    }

    #[test]
    fn partial_match_restricts_support() {
        let grid = half_grid();
        let phi = unit_phi(&grid, &[c(1.0), c(0.9)]);
        let samples = separable_kernel(&grid, &[phi], &[vec![1.0, 2.0]]);
        let kernel = KernelBundle::new(space(2), grid, true, &samples).unwrap();
        let lambda = StepFunction::constant(2, c(1.0));
        let solution = solve_pie(&kernel, &lambda, 1e-8, 1e-10).unwrap();
        assert_eq!(solution.witness.pi.mask(), &[true, false]);
        let f = &solution.witness.eigenfunction;
        assert!(f.fiber(1).iter().all(|v| v.norm() == 0.0));
        assert!(f.fiber(0).iter().any(|v| v.norm() > 0.1));
    }
}
