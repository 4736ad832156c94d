//! Dense complex linear algebra for a single fiber.
//!
//! Everything here is Euclidean; weighted geometry is handled by conjugating
//! fiber matrices before calling in (see `HkModule::euclidean_fiber`).
//! Fibers are small (a handful of grid points), so Jacobi-type methods are
//! the right tool: simple, unconditionally stable, and accurate to a few ulps
//! in the orthonormality of the returned bases.
//!
//! Matrices are row-major `n × n` slices of `Complex64`; vector families are
//! returned as column-major sets (each column its own `Vec`).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fp;

const MAX_SWEEPS: usize = 64;
const CONVERGENCE_EPS: f64 = 1e-15;

#[inline]
fn at(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.norm()))
}

pub fn is_finite(a: &[Complex64]) -> bool {
    a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Largest entrywise defect `|A - Aᴴ|`.
pub fn hermitian_residual(a: &[Complex64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[at(n, i, j)] - a[at(n, j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm.
pub fn frobenius(a: &[Complex64]) -> f64 {
    fp::sqrt(a.iter().map(|v| v.norm_sqr()).sum::<f64>())
}

/// Unitary 2×2 factor diagonalizing the Hermitian block [[α, β], [β̄, γ]].
///
/// Returns `(g11, g12, g21, g22)` with `Gᴴ H G = diag(α - t·r, γ + t·r)`
/// where `r = |β|`. The rotation is the classical Jacobi choice (smaller
/// angle root) composed with the phase that makes the pivot real.
fn jacobi_rotation(
    alpha: f64,
    gamma: f64,
    beta: Complex64,
) -> (Complex64, Complex64, Complex64, Complex64, f64) {
    let r = beta.norm();
    let phase = beta / r;
    let tau = (gamma - alpha) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + fp::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + fp::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / fp::sqrt(1.0 + t * t);
    let s = t * c;
    (
        phase * c,
        phase * s,
        Complex64::new(-s, 0.0),
        Complex64::new(c, 0.0),
        t * r,
    )
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.
///
/// `values` come back in ascending order with `vectors[k]` the matching
/// orthonormal eigenvector. The input is symmetrized internally, so small
/// Hermitian defects are averaged away rather than amplified.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

pub fn hermitian_eigen(a: &[Complex64], n: usize) -> Result<HermitianEigen> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    if !is_finite(a) {
        return Err(Error::NonFinite {
            what: "hermitian eigenproblem",
        });
    }
    // Work on the Hermitian average (A + Aᴴ)/2.
    let mut m = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            m[at(n, i, j)] = 0.5 * (a[at(n, i, j)] + a[at(n, j, i)].conj());
        }
    }
    let mut v = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        v[at(n, i, i)] = Complex64::ONE;
    }

    let scale = max_abs(&m);
    if scale > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut off: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += m[at(n, i, j)].norm_sqr();
                }
            }
            if fp::sqrt(off) <= CONVERGENCE_EPS * scale {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let beta = m[at(n, p, q)];
                    if beta.norm() <= 1e-3 * CONVERGENCE_EPS * scale {
                        continue;
                    }
                    let alpha = m[at(n, p, p)].re;
                    let gamma = m[at(n, q, q)].re;
                    let (g11, g12, g21, g22, shift) = jacobi_rotation(alpha, gamma, beta);
                    // Columns p,q of M and V (right factor G).
                    for i in 0..n {
                        let mip = m[at(n, i, p)];
                        let miq = m[at(n, i, q)];
                        m[at(n, i, p)] = mip * g11 + miq * g21;
                        m[at(n, i, q)] = mip * g12 + miq * g22;
                        let vip = v[at(n, i, p)];
                        let viq = v[at(n, i, q)];
                        v[at(n, i, p)] = vip * g11 + viq * g21;
                        v[at(n, i, q)] = vip * g12 + viq * g22;
                    }
                    // Rows p,q of M (left factor Gᴴ).
                    for j in 0..n {
                        let mpj = m[at(n, p, j)];
                        let mqj = m[at(n, q, j)];
                        m[at(n, p, j)] = g11.conj() * mpj + g21.conj() * mqj;
                        m[at(n, q, j)] = g12.conj() * mpj + g22.conj() * mqj;
                    }
                    m[at(n, p, q)] = Complex64::ZERO;
                    m[at(n, q, p)] = Complex64::ZERO;
                    m[at(n, p, p)] = Complex64::new(alpha - shift, 0.0);
                    m[at(n, q, q)] = Complex64::new(gamma + shift, 0.0);
                }
            }
        }
        if !converged {
            // sweep budget exhausted; accept only if the off-diagonal mass
            // already collapsed
            let mut off: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += m[at(n, i, j)].norm_sqr();
                }
            }
            if fp::sqrt(off) > 1e-12 * scale {
                return Err(Error::NoConvergence {
                    what: "hermitian Jacobi iteration",
                });
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[at(n, i, i)]
            .re
            .partial_cmp(&m[at(n, j, j)].re)
            .expect("eigenvalues are finite")
    });
    let values = order.iter().map(|&k| m[at(n, k, k)].re).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[at(n, i, k)]).collect())
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Singular value decomposition of a square complex matrix by one-sided
/// Jacobi: columns of the working copy are rotated pairwise until mutually
/// orthogonal, accumulating the right factor.
///
/// Singular values come back descending. Columns of `u` matching zero
/// singular values are zero vectors; callers that need a full left basis
/// complete it themselves.
pub struct Svd {
    pub singular: Vec<f64>,
    pub u: Vec<Vec<Complex64>>,
    pub v: Vec<Vec<Complex64>>,
}

pub fn svd(a: &[Complex64], n: usize) -> Result<Svd> {
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    if !is_finite(a) {
        return Err(Error::NonFinite {
            what: "singular value decomposition",
        });
    }
    let mut w = a.to_vec();
    let mut v = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        v[at(n, i, i)] = Complex64::ONE;
    }

    if max_abs(&w) > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let mut alpha = 0.0;
                    let mut gamma = 0.0;
                    let mut beta = Complex64::ZERO;
                    for i in 0..n {
                        let wip = w[at(n, i, p)];
                        let wiq = w[at(n, i, q)];
                        alpha += wip.norm_sqr();
                        gamma += wiq.norm_sqr();
                        beta += wip.conj() * wiq;
                    }
                    if beta.norm() <= CONVERGENCE_EPS * fp::sqrt(alpha * gamma)
                        || beta.norm() == 0.0
                    {
                        continue;
                    }
                    rotated = true;
                    let (g11, g12, g21, g22, _) = jacobi_rotation(alpha, gamma, beta);
                    for i in 0..n {
                        let wip = w[at(n, i, p)];
                        let wiq = w[at(n, i, q)];
                        w[at(n, i, p)] = wip * g11 + wiq * g21;
                        w[at(n, i, q)] = wip * g12 + wiq * g22;
                        let vip = v[at(n, i, p)];
                        let viq = v[at(n, i, q)];
                        v[at(n, i, p)] = vip * g11 + viq * g21;
                        v[at(n, i, q)] = vip * g12 + viq * g22;
                    }
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "one-sided Jacobi iteration",
            });
        }
    }

    let mut singular: Vec<f64> = (0..n)
        .map(|j| fp::sqrt((0..n).map(|i| w[at(n, i, j)].norm_sqr()).sum::<f64>()))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending; stable for ties.
    order.sort_by(|&i, &j| singular[j].partial_cmp(&singular[i]).expect("finite norms"));
    singular = order.iter().map(|&k| singular[k]).collect();
    let u = order
        .iter()
        .enumerate()
        .map(|(rank, &k)| {
            let sigma = singular[rank];
            (0..n)
                .map(|i| {
                    if sigma > 0.0 {
                        w[at(n, i, k)] / sigma
                    } else {
                        Complex64::ZERO
                    }
                })
                .collect()
        })
        .collect();
    let v = order
        .iter()
        .map(|&k| (0..n).map(|i| v[at(n, i, k)]).collect())
        .collect();
    Ok(Svd { singular, u, v })
}

/// Largest singular value.
pub fn spectral_norm(a: &[Complex64], n: usize) -> Result<f64> {
    Ok(svd(a, n)?.singular.first().copied().unwrap_or(0.0))
}

/// In-place phase normalization: rotates the vector so its
/// largest-magnitude component (smallest index on ties) is real positive.
/// Returns the applied phase factor.
pub fn phase_fix(vector: &mut [Complex64]) -> Complex64 {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, value) in vector.iter().enumerate() {
        let n = value.norm_sqr();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm == 0.0 {
        return Complex64::ONE;
    }
    let pivot = vector[best];
    let modulus = pivot.norm();
    let phase = pivot.conj() / modulus;
    for value in vector.iter_mut() {
        *value *= phase;
    }
    vector[best] = Complex64::new(modulus, 0.0);
    phase
}

/// Modified Gram–Schmidt pass over the given vectors, in place.
/// Used to tighten orthonormality inside near-degenerate eigenvalue
/// clusters; on already-orthonormal input it is a numerical no-op.
pub fn reorthonormalize(vectors: &mut [Vec<Complex64>]) {
    let count = vectors.len();
    for j in 0..count {
        for i in 0..j {
            let mut proj = Complex64::ZERO;
            for (a, b) in vectors[j].iter().zip(vectors[i].iter()) {
                proj += a * b.conj();
            }
            let (head, tail) = vectors.split_at_mut(j);
            for (a, b) in tail[0].iter_mut().zip(head[i].iter()) {
                *a -= proj * b;
            }
        }
        let norm = fp::sqrt(vectors[j].iter().map(|v| v.norm_sqr()).sum::<f64>());
        if norm > 0.0 {
            for value in vectors[j].iter_mut() {
                *value /= norm;
            }
        }
    }
}

/// Extends an orthonormal set to a full orthonormal basis of `C^n`.
///
/// Candidates are the standard basis vectors; at each step the candidate
/// with the largest residual against the current span is normalized and
/// appended (smallest index on ties), which makes the completion
/// deterministic.
pub fn complete_orthonormal(vectors: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = vectors.to_vec();
    while basis.len() < n {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for k in 0..n {
            let mut candidate = vec![Complex64::ZERO; n];
            candidate[k] = Complex64::ONE;
            for existing in &basis {
                let mut proj = Complex64::ZERO;
                for (a, b) in candidate.iter().zip(existing.iter()) {
                    proj += a * b.conj();
                }
                for (a, b) in candidate.iter_mut().zip(existing.iter()) {
                    *a -= proj * b;
                }
            }
            let norm = fp::sqrt(candidate.iter().map(|v| v.norm_sqr()).sum::<f64>());
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                for value in candidate.iter_mut() {
                    *value /= norm;
                }
                best = Some((norm, candidate));
            }
        }
        let (_, mut vector) = best.expect("dimension is positive");
        phase_fix(&mut vector);
        basis.push(vector);
    }
    basis
}
