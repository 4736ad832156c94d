//! Deterministic random data for unit tests.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::element::ModuleElement;
use crate::step::StepFunction;

/// splitmix64: tiny, seedable, good enough for test data.
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

    /// Uniform in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.uniform(), self.uniform())
    }
}

pub fn rand_matrix(rng: &mut Splitmix, n: usize) -> Vec<Complex64> {
    (0..n * n).map(|_| rng.complex()).collect()
}

pub fn rand_hermitian(rng: &mut Splitmix, n: usize) -> Vec<Complex64> {
    let g = rand_matrix(rng, n);
    let mut h = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = 0.5 * (g[i * n + j] + g[j * n + i].conj());
        }
    }
    h
}

pub fn rand_element(rng: &mut Splitmix, atoms: usize, dim: usize) -> ModuleElement {
    let fibers: Vec<Vec<Complex64>> = (0..atoms)
        .map(|_| (0..dim).map(|_| rng.complex()).collect())
        .collect();
    ModuleElement::from_fibers(&fibers).expect("valid shape")
}

pub fn rand_step(rng: &mut Splitmix, atoms: usize) -> StepFunction {
    StepFunction::new((0..atoms).map(|_| rng.complex()).collect())
}
