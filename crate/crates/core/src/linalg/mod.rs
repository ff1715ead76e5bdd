//! Dense eigensolvers and a matrix-free spectral-radius estimator.

pub mod eigen;

pub use eigen::{eig_complex, eigenvalues_real, ComplexEigen};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest modulus in a spectrum.
pub fn spectral_radius(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct ArnoldiOptions {
    /// Krylov dimension grows in chunks of this size.
    pub block: usize,
    pub max_dim: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            block: 40,
            max_dim: 600,
            rel_tol: 1e-9,
            seed: 1,
        }
    }
}

/// Spectral radius of a real linear operator from Arnoldi Ritz values.
///
/// Plain power iteration stalls when the dominant eigenvalues form a complex
/// conjugate pair, which is the generic case for DG operators. The Krylov
/// space is grown until the outermost Ritz modulus settles.
pub fn arnoldi_spectral_radius<F>(n: usize, mut op: F, opts: ArnoldiOptions) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if n == 0 {
        return Ok(0.0);
    }
    let max_dim = opts.max_dim.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nrm);
    let mut basis = vec![v0];
    let mut h = DMatrix::<f64>::zeros(max_dim + 1, max_dim);
    let mut w = vec![0.0; n];
    let mut last = f64::NAN;
    let mut m = 0;
    while m < max_dim {
        let target = (m + opts.block).min(max_dim);
        while m < target {
            op(&basis[m], &mut w)?;
            // Two passes of classical Gram-Schmidt.
            for _ in 0..2 {
                for (j, b) in basis.iter().enumerate() {
                    let c = dot(b, &w);
                    h[(j, m)] += c;
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let beta = norm(&w);
            h[(m + 1, m)] = beta;
            m += 1;
            if beta <= 1e-14 * h.column(m - 1).norm() {
                // Invariant subspace: Ritz values are exact.
                let ev = eigenvalues_real(&h.view((0, 0), (m, m)).into_owned())?;
                return Ok(spectral_radius(&ev));
            }
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let ev = eigenvalues_real(&h.view((0, 0), (m, m)).into_owned())?;
        let rho = spectral_radius(&ev);
        if (rho - last).abs() <= opts.rel_tol * rho {
            return Ok(rho);
        }
        last = rho;
    }
    if m == n {
        return Ok(last);
    }
    Err(Error::Convergence {
        what: "Arnoldi spectral radius".into(),
        iterations: m,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
