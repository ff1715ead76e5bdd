//! Dense assembly of the semi-discrete operator and its spectrum.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{arnoldi_spectral_radius, eigenvalues_real, spectral_radius, ArnoldiOptions};
use crate::solver::{RhsOptions, Solver};

/// Largest operator assembled densely.
pub const MAX_DENSE_DOFS: usize = 5000;

/// The homogeneous operator: no sources and zero exterior data on
/// exact-solution faces, so the RHS is linear in the state.
fn linear_options() -> RhsOptions {
    RhsOptions {
        dissipation: true,
        sources: false,
        boundary_data: false,
    }
}

/// Applies the homogeneous semi-discrete operator.
pub fn apply_operator(solver: &Solver, x: &[f64], y: &mut [f64]) -> Result<()> {
    solver.rhs_with(x, 0.0, linear_options(), y)
}

/// Column j is rhs(e_j). Checks rhs(x) = A x on 10 random states.
pub fn assemble_global_operator(solver: &Solver) -> Result<DMatrix<f64>> {
    let n = solver.num_dofs();
    if n > MAX_DENSE_DOFS {
        return Err(Error::SizeGuard { n, max: MAX_DENSE_DOFS });
    }
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        apply_operator(solver, &e, &mut col)?;
        a.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut y = vec![0.0; n];
    for _ in 0..10 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        apply_operator(solver, &x, &mut y)?;
        let ax = &a * nalgebra::DVector::from_column_slice(&x);
        let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let err = y.iter().zip(ax.iter()).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        if err > 1e-12 * scale {
            return Err(Error::Setup(format!(
                "operator is not linear in the state: assembled and applied differ by {err:e}"
            )));
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub alpha_tau: f64,
    pub alpha_v: f64,
    pub spectral_radius: f64,
    pub max_real: f64,
    /// Arnoldi estimate of the radius, matrix-free.
    pub arnoldi_radius: f64,
    #[serde(skip)]
    pub eigenvalues: Vec<Complex64>,
}

/// All eigenvalues of the assembled operator plus an independent
/// matrix-free radius estimate.
pub fn spectrum(solver: &Solver) -> Result<SpectrumReport> {
    let a = assemble_global_operator(solver)?;
    let eigenvalues = eigenvalues_real(&a)?;
    let max_real = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        n: a.nrows(),
        alpha_tau: solver.config.alpha_tau,
        alpha_v: solver.config.alpha_v,
        spectral_radius: spectral_radius(&eigenvalues),
        max_real,
        arnoldi_radius: operator_radius(solver)?,
        eigenvalues,
    })
}

/// Matrix-free spectral radius of the homogeneous operator.
pub fn operator_radius(solver: &Solver) -> Result<f64> {
    arnoldi_spectral_radius(
        solver.num_dofs(),
        |x, y| apply_operator(solver, x, y),
        ArnoldiOptions::default(),
    )
}

impl SpectrumReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "re,im").map_err(io)?;
        for z in &self.eigenvalues {
            writeln!(f, "{:e},{:e}", z.re, z.im).map_err(io)?;
        }
        f.flush().map_err(io)
    }
}
