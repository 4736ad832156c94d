//! Shared helpers for integration tests: deterministic random data.

use kaplansky_core::{BundleOperator, Complex64, HkModule, MeasureSpace, ModuleElement, SGrid};

pub struct Splitmix {
    state: u64,
}

impl Splitmix {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.uniform(), self.uniform())
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

pub fn weighted_module(rng: &mut Splitmix, atoms: usize, dim: usize) -> HkModule {
    let space = MeasureSpace::indexed(atoms).unwrap();
    let points = (0..dim).map(|i| format!("s{i}")).collect();
    let weights = (0..dim).map(|_| 0.2 + rng.uniform().abs() * 1.5).collect();
    HkModule::new(space, SGrid::new(points, weights).unwrap())
}

/// A bundle self-adjoint in the weighted geometry of `module`.
pub fn hermitian_bundle(rng: &mut Splitmix, module: &HkModule) -> BundleOperator {
    let atoms = module.atoms();
    let dim = module.dim();
    let fibers: Vec<Vec<Complex64>> = (0..atoms)
        .map(|_| (0..dim * dim).map(|_| rng.complex()).collect())
        .collect();
    let raw = BundleOperator::from_fibers(&fibers).unwrap();
    raw.add(&module.adjoint(&raw).unwrap())
        .scale(Complex64::new(0.5, 0.0))
}

pub fn rand_element(rng: &mut Splitmix, atoms: usize, dim: usize) -> ModuleElement {
    let fibers: Vec<Vec<Complex64>> = (0..atoms)
        .map(|_| (0..dim).map(|_| rng.complex()).collect())
        .collect();
    ModuleElement::from_fibers(&fibers).unwrap()
}
