//! Shared generators for the acceptance and CLI tests.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::StandardNormal;

use kaplansky_cli::schema::{GridDef, KernelFile, SpaceDef, SCHEMA_TAG};
use kaplansky_core::{BundleOperator, Complex64, HkModule, MeasureSpace, ModuleElement, SGrid};

/// Standard complex Gaussian CN(0,1): each part N(0, 1/2).
pub fn complex_gaussian(rng: &mut StdRng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im).scale(core::f64::consts::FRAC_1_SQRT_2)
}

/// Hermitized Gaussian matrix (G + Gᴴ)/2, row-major.
pub fn hermitian_fiber(rng: &mut StdRng, dim: usize) -> Vec<Complex64> {
    let g: Vec<Complex64> = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    let mut h = vec![Complex64::ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            h[i * dim + j] = 0.5 * (g[i * dim + j] + g[j * dim + i].conj());
        }
    }
    h
}

/// Unit-weight module: Hermitized fibers are self-adjoint bundles there.
pub fn unit_module(atoms: usize, dim: usize) -> HkModule {
    HkModule::new(
        MeasureSpace::indexed(atoms).unwrap(),
        SGrid::unit(dim).unwrap(),
    )
}

pub fn hermitian_bundle(rng: &mut StdRng, atoms: usize, dim: usize) -> BundleOperator {
    let fibers: Vec<Vec<Complex64>> = (0..atoms).map(|_| hermitian_fiber(rng, dim)).collect();
    BundleOperator::from_fibers(&fibers).unwrap()
}

pub fn rand_element(rng: &mut StdRng, atoms: usize, dim: usize) -> ModuleElement {
    let fibers: Vec<Vec<Complex64>> = (0..atoms)
        .map(|_| (0..dim).map(|_| complex_gaussian(rng)).collect())
        .collect();
    ModuleElement::from_fibers(&fibers).unwrap()
}

/// Random grid with positive weights.
pub fn random_grid(rng: &mut StdRng, dim: usize) -> SGrid {
    let points = (0..dim).map(|i| format!("s{i}")).collect();
    let weights = (0..dim).map(|_| rng.random_range(0.2..1.8)).collect();
    SGrid::new(points, weights).unwrap()
}

/// Per-atom signed merge oracle: two-pointer, positives first on ties.
pub fn signed_merge_oracle(pos: &[f64], neg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pos.len() + neg.len());
    let (mut i, mut j) = (0, 0);
    loop {
        match (pos.get(i), neg.get(j)) {
            (Some(&p), Some(&n)) => {
                if p >= n {
                    out.push(p);
                    i += 1;
                } else {
                    out.push(-n);
                    j += 1;
                }
            }
            (Some(&p), None) => {
                out.push(p);
                i += 1;
            }
            (None, Some(&n)) => {
                out.push(-n);
                j += 1;
            }
            (None, None) => return out,
        }
    }
}

/// Nonzero prefix of a padded value column at one atom.
pub fn atom_column(values: &[kaplansky_core::StepFunction], atom: usize) -> Vec<f64> {
    values
        .iter()
        .map(|f| f.value(atom).re)
        .take_while(|v| *v != 0.0)
        .collect()
}

/// Serializes per-atom sample matrices into a kernel file structure.
pub fn kernel_file(
    space: &MeasureSpace,
    grid: &SGrid,
    selfadjoint: bool,
    samples: &[Vec<Complex64>],
) -> KernelFile {
    KernelFile {
        schema: SCHEMA_TAG.to_string(),
        space: SpaceDef::from_core(space),
        grid: GridDef {
            points: grid.points().to_vec(),
            quad_weights: grid.quad_weights().to_vec(),
        },
        selfadjoint,
        samples: samples
            .iter()
            .map(|matrix| matrix.iter().map(|v| [v.re, v.im]).collect())
            .collect(),
    }
}
