//! Plane-wave convergence studies.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::material::{CoefficientField, PoroelasticMaterial, Sampling, Units};
use crate::mesh::{build_uniform, BoundaryTag, UniformGridSpec};
use crate::planewave::PlaneWaveSolution;
use crate::solver::{RunMode, Scheme, Solver, SolverConfig, State, NFIELDS};

/// sqrt(Σ‖U − U_h‖²) / sqrt(Σ‖U‖²) over the active fields, by quadrature.
pub fn l2_relative_error(solver: &Solver, state: &State, reference: &dyn Fn(&[f64; 3]) -> [f64; NFIELDS]) -> Result<f64> {
    let re = &solver.re;
    let (np, nf, nq) = (re.np, solver.layout.nfields(), re.nq());
    let mut uq = vec![0.0; nq * nf];
    let (mut num, mut den) = (0.0, 0.0);
    for (k, g) in solver.mesh.geom.iter().enumerate() {
        crate::wadg::gemm_into(&mut uq, &re.vq, &state.data[k * np * nf..(k + 1) * np * nf], nf, 0.0);
        for q in 0..nq {
            let w = g.j * re.quad.weights[q];
            let u = reference(&g.to_physical(re.quad.point(q)));
            for a in 0..nf {
                let ua = u[solver.layout.global_of(a)];
                num += w * (ua - uq[a * nq + q]).powi(2);
                den += w * ua * ua;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Setup("reference solution has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// One convergence run on the unit square.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCase {
    pub material: PoroelasticMaterial,
    pub n: usize,
    pub k1d: usize,
    pub viscous: bool,
    pub alpha: f64,
    pub scheme: Scheme,
    pub mode: RunMode,
    pub final_time: f64,
    pub cfl: f64,
    pub wavevector: [f64; 3],
    /// Overrides the estimated time step (upper bound) when set.
    pub dt: Option<f64>,
}

impl ConvergenceCase {
    /// Isotropic sandstone in scaled units, k = 2π(1, 1), T = 1.
    pub fn standard(n: usize, k1d: usize) -> Result<Self> {
        Ok(Self {
            material: crate::material::preset("sandstone_isotropic")?.in_units(Units::Scaled),
            n,
            k1d,
            viscous: false,
            alpha: 1.0,
            scheme: Scheme::Unified,
            mode: RunMode::Full13,
            final_time: 1.0,
            cfl: 1.0,
            wavevector: [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 0.0],
            dt: None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub n: usize,
    pub h: f64,
    pub error: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Solver, projected initial state and the analytic solution of a case.
pub fn setup_case(case: &ConvergenceCase) -> Result<(Solver, State, Arc<PlaneWaveSolution>)> {
    let mat = if case.viscous {
        case.material.clone()
    } else {
        case.material.with_viscosity(0.0)
    };
    let pw = Arc::new(PlaneWaveSolution::three_modes(&mat, case.wavevector, case.viscous)?);
    let mesh = build_uniform(&UniformGridSpec::unit(2, case.k1d, BoundaryTag::ExactSolution))?;
    let exact = pw.clone();
    let config = SolverConfig {
        alpha_tau: case.alpha,
        alpha_v: case.alpha,
        cfl: case.cfl,
        scheme: case.scheme,
        final_time: case.final_time,
        mode: case.mode,
        sources: Vec::new(),
        exact: Some(Arc::new(move |x, t| exact.evaluate(x, t))),
    };
    let solver = Solver::build(mesh, case.n, &CoefficientField::Uniform(mat), Sampling::Pointwise, config)?;
    let state = State::project(&solver, |x| pw.evaluate(x, 0.0));
    Ok((solver, state, pw))
}

/// Advance to the final time with uniform steps no larger than `dt_max`.
pub fn evolve(solver: &Solver, state: &mut State, final_time: f64, dt_max: f64) -> Result<(usize, f64)> {
    let (steps, dt) = Solver::uniform_steps(final_time - state.t, dt_max);
    for _ in 0..steps {
        solver.step(state, dt)?;
    }
    Ok((steps, dt))
}

/// The discrete solution at the final time and its relative L² error.
pub fn run_case(case: &ConvergenceCase) -> Result<CaseResult> {
    let (solver, mut state, pw) = setup_case(case)?;
    let dt_max = case.dt.unwrap_or_else(|| solver.estimate_dt());
    let (steps, dt) = evolve(&solver, &mut state, case.final_time, dt_max)?;
    let t = state.t;
    let error = l2_relative_error(&solver, &state, &|x| pw.evaluate(x, t))?;
    Ok(CaseResult {
        n: case.n,
        h: solver.mesh.h,
        error,
        steps,
        dt,
    })
}

/// Observed temporal order at fixed resolution: the case is run with
/// `dt_0 / 2^j` for `levels` values of j and compared, in the energy norm,
/// against a run with `dt_0 / 2^reference_level`. Returns (dt, error) pairs.
pub fn temporal_study(case: &ConvergenceCase, levels: usize, reference_level: u32) -> Result<Vec<(f64, f64)>> {
    let (solver, init, _) = setup_case(case)?;
    let dt0 = case.dt.unwrap_or_else(|| solver.estimate_dt());
    let mut reference = init.clone();
    evolve(&solver, &mut reference, case.final_time, dt0 / 2f64.powi(reference_level as i32))?;
    let norm = solver.energy(&reference).sqrt();
    let mut out = Vec::with_capacity(levels);
    for j in 0..levels {
        let mut s = init.clone();
        let (_, dt) = evolve(&solver, &mut s, case.final_time, dt0 / 2f64.powi(j as i32))?;
        for (a, b) in s.data.iter_mut().zip(&reference.data) {
            *a -= b;
        }
        out.push((dt, solver.energy(&s).sqrt() / norm));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub viscous: bool,
    pub alpha: f64,
    pub scheme: Scheme,
    pub results: Vec<CaseResult>,
}

impl ConvergenceReport {
    /// log₂(e_{2h}/e_h) between consecutive levels of degree `n`.
    pub fn rates(&self, n: usize) -> Vec<f64> {
        let r: Vec<&CaseResult> = self.results.iter().filter(|r| r.n == n).collect();
        r.windows(2).map(|w| (w[0].error / w[1].error).ln() / (w[0].h / w[1].h).ln()).collect()
    }

    /// Least-squares slope of log e against log h over the finest `levels`.
    pub fn fitted_rate(&self, n: usize, levels: usize) -> f64 {
        let r: Vec<&CaseResult> = self.results.iter().filter(|r| r.n == n).collect();
        let tail = &r[r.len().saturating_sub(levels)..];
        let xs: Vec<f64> = tail.iter().map(|c| c.h.ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|c| c.error.ln()).collect();
        let m = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "# viscous = {}, alpha = {}, scheme = {:?}", self.viscous, self.alpha, self.scheme).map_err(io)?;
        writeln!(f, "N,h,error,rate,steps,dt").map_err(io)?;
        let mut prev: Option<&CaseResult> = None;
        for r in &self.results {
            let rate = match prev {
                Some(p) if p.n == r.n => format!("{:.4}", (p.error / r.error).ln() / (p.h / r.h).ln()),
                _ => String::new(),
            };
            writeln!(f, "{},{},{:e},{},{},{:e}", r.n, r.h, r.error, rate, r.steps, r.dt).map_err(io)?;
            prev = Some(r);
        }
        f.flush().map_err(io)
    }
}

/// Runs every (N, K1D) pair; levels of one degree may run concurrently.
pub fn run_convergence(base: &ConvergenceCase, degrees: &[usize], k1d_levels: &[usize]) -> Result<ConvergenceReport> {
    use rayon::prelude::*;
    if k1d_levels.len() < 3 {
        return Err(Error::Config("a convergence study needs at least three mesh levels".into()));
    }
    let cases: Vec<ConvergenceCase> = degrees
        .iter()
        .flat_map(|&n| {
            k1d_levels.iter().map(move |&k1d| ConvergenceCase {
                n,
                k1d,
                ..base.clone()
            })
        })
        .collect();
    let results = cases.par_iter().map(run_case).collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        viscous: base.viscous,
        alpha: base.alpha,
        scheme: base.scheme,
        results,
    })
}
