//! Semi-discrete DG operator, energy, time-step estimate and time stepping.

mod receivers;
mod rhs;
mod time;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::{Coefficients, CoefficientField, Sampling};
use crate::mesh::Mesh;
use crate::refelem::ReferenceElement;

pub use crate::material::normal_matrix;
pub use receivers::{Receivers, FIELD_NAMES};
pub use rhs::RhsOptions;
pub use time::{lsrk45_step, RK4A, RK4B, RK4C};

/// Number of components of the full state vector.
pub const NFIELDS: usize = 13;

/// Exterior data for exact-solution boundaries: 13 components at (x, t).
pub type ExactFn = Arc<dyn Fn(&[f64; 3], f64) -> [f64; NFIELDS] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunMode {
    /// All 13 fields.
    Full13,
    /// In-plane fields only (2D): τ₁₁, τ₂₂, τ₃₃, τ₁₂, p, v₁, v₂, q₁, q₂.
    Compact2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// LSRK4(5) on the full operator including the dissipative term.
    Unified,
    /// Half diffusive step, conservative LSRK4(5) step, half diffusive step.
    Strang,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unified" => Some(Self::Unified),
            "strang" => Some(Self::Strang),
            _ => None,
        }
    }
}

/// Active fields: stress indices into 0..7 and velocity indices into 0..6.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub stress: Vec<usize>,
    pub vel: Vec<usize>,
}

impl Layout {
    pub fn for_mode(mode: RunMode) -> Self {
        match mode {
            RunMode::Full13 => Self {
                stress: (0..7).collect(),
                vel: (0..6).collect(),
            },
            RunMode::Compact2d => Self {
                stress: vec![0, 1, 2, 5, 6],
                vel: vec![0, 1, 3, 4],
            },
        }
    }

    pub fn ns(&self) -> usize {
        self.stress.len()
    }

    pub fn nv(&self) -> usize {
        self.vel.len()
    }

    pub fn nfields(&self) -> usize {
        self.stress.len() + self.vel.len()
    }

    /// Index into the 13-vector of local field `a`.
    pub fn global_of(&self, a: usize) -> usize {
        if a < self.ns() {
            self.stress[a]
        } else {
            7 + self.vel[a - self.ns()]
        }
    }

    pub fn local_of(&self, g: usize) -> Option<usize> {
        (0..self.nfields()).find(|&a| self.global_of(a) == g)
    }
}

/// Time signature of a point source.
#[derive(Clone)]
pub enum Signature {
    Ricker { f0: f64, t0: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Signature {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Ricker { f0, t0 } => crate::planewave::ricker(t, *f0, *t0),
            Self::Custom(f) => f(t),
        }
    }
}

impl std::fmt::Debug for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ricker { f0, t0 } => write!(f, "Ricker(f0 = {f0}, t0 = {t0})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// β δ(x − x₀) g(t), added to the right-hand side of the symmetric form.
#[derive(Debug, Clone)]
pub struct PointSource {
    pub x0: [f64; 3],
    /// Weights on the 13 components.
    pub beta: [f64; NFIELDS],
    pub signature: Signature,
}

#[derive(Clone)]
pub struct SolverConfig {
    pub alpha_tau: f64,
    pub alpha_v: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub final_time: f64,
    pub mode: RunMode,
    pub sources: Vec<PointSource>,
    /// Required when the mesh has exact-solution boundary faces.
    pub exact: Option<ExactFn>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_tau: 1.0,
            alpha_v: 1.0,
            cfl: 1.0,
            scheme: Scheme::Unified,
            final_time: 1.0,
            mode: RunMode::Full13,
            sources: Vec::new(),
            exact: None,
        }
    }
}

impl std::fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverConfig")
            .field("alpha_tau", &self.alpha_tau)
            .field("alpha_v", &self.alpha_v)
            .field("cfl", &self.cfl)
            .field("scheme", &self.scheme)
            .field("final_time", &self.final_time)
            .field("mode", &self.mode)
            .field("sources", &self.sources)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_tau >= 0.0 && self.alpha_v >= 0.0) {
            return Err(Error::Config(format!(
                "penalty parameters must be nonnegative (alpha_tau = {}, alpha_v = {})",
                self.alpha_tau, self.alpha_v
            )));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::Config(format!("CFL constant must be positive, got {}", self.cfl)));
        }
        if !(self.final_time >= 0.0) {
            return Err(Error::Config(format!("final time must be nonnegative, got {}", self.final_time)));
        }
        Ok(())
    }
}

/// Nodal coefficients laid out `[element][field][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub data: Vec<f64>,
    pub t: f64,
    pub np: usize,
    pub nfields: usize,
}

impl State {
    pub fn zeros(solver: &Solver) -> Self {
        let (np, nf) = (solver.re.np, solver.layout.nfields());
        Self {
            data: vec![0.0; solver.mesh.num_elements() * np * nf],
            t: 0.0,
            np,
            nfields: nf,
        }
    }

    /// Nodal interpolant of a 13-component function.
    pub fn interpolate(solver: &Solver, f: impl Fn(&[f64; 3]) -> [f64; NFIELDS]) -> Self {
        let mut s = Self::zeros(solver);
        let dim = solver.mesh.dim;
        let (np, nf) = (s.np, s.nfields);
        for (k, g) in solver.mesh.geom.iter().enumerate() {
            for j in 0..np {
                let v = f(&g.to_physical(&solver.re.nodes[j * dim..(j + 1) * dim]));
                for a in 0..nf {
                    s.data[(k * nf + a) * np + j] = v[solver.layout.global_of(a)];
                }
            }
        }
        s
    }

    /// Quadrature L² projection of a 13-component function.
    pub fn project(solver: &Solver, f: impl Fn(&[f64; 3]) -> [f64; NFIELDS]) -> Self {
        let mut s = Self::zeros(solver);
        let re = &solver.re;
        let (np, nf, nq) = (s.np, s.nfields, re.nq());
        let mut vals = vec![0.0; nq * nf];
        for (k, g) in solver.mesh.geom.iter().enumerate() {
            for q in 0..nq {
                let v = f(&g.to_physical(re.quad.point(q)));
                for a in 0..nf {
                    vals[a * nq + q] = v[solver.layout.global_of(a)];
                }
            }
            crate::wadg::gemm_into(&mut s.data[k * nf * np..(k + 1) * nf * np], &re.pq, &vals, nf, 0.0);
        }
        s
    }

    pub fn block(&self, k: usize) -> &[f64] {
        let n = self.np * self.nfields;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn field(&self, k: usize, a: usize) -> &[f64] {
        let o = (k * self.nfields + a) * self.np;
        &self.data[o..o + self.np]
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }
}

/// Sharp polynomial trace-inequality constant on simplices.
pub fn trace_constant(dim: usize, n: usize) -> f64 {
    let n = n as f64;
    if dim == 2 {
        (n + 1.0) * (n + 2.0) / 2.0
    } else {
        (n + 1.0) * (n + 3.0) / 3.0
    }
}

/// Per-element speed used by the step estimate: the larger of the
/// characteristic speed and the penalty rates ½α_τ λmax(Q_s⁻¹)‖A_n‖² and
/// ½α_v λmax(Q_v⁻¹)‖A_n‖², which carry material units and can dominate.
pub fn step_speeds(coeffs: &Coefficients, layout: &Layout, dim: usize, alpha_tau: f64, alpha_v: f64) -> Vec<f64> {
    let mut an2 = 0.0_f64;
    for n in crate::material::sample_directions(dim) {
        let full = normal_matrix(&n);
        let a = nalgebra::DMatrix::from_fn(layout.ns(), layout.nv(), |i, j| full[(layout.stress[i], layout.vel[j])]);
        an2 = an2.max((&a * a.transpose()).symmetric_eigenvalues().max());
    }
    let lmax = |tab: &crate::wadg::WeightTable, k: usize| -> f64 {
        let m = tab.size();
        let nq = if tab.is_constant(k) { 1 } else { tab.storage_len(k) / (m * m) };
        (0..nq)
            .map(|q| nalgebra::DMatrix::from_row_slice(m, m, tab.at(k, q)).symmetric_eigenvalues().max())
            .fold(0.0, f64::max)
    };
    (0..coeffs.max_speed.len())
        .map(|k| {
            let ps = 0.5 * alpha_tau * lmax(&coeffs.qs_inv, k) * an2;
            let pv = 0.5 * alpha_v * lmax(&coeffs.qv_inv, k) * an2;
            coeffs.max_speed[k].max(ps).max(pv)
        })
        .collect()
}

/// dt = min_k C_CFL / (c_k · C_N · max_f J^f / J).
pub fn estimate_dt(mesh: &Mesh, max_speed: &[f64], n: usize, cfl: f64) -> f64 {
    let cn = trace_constant(mesh.dim, n);
    let mut dt = f64::INFINITY;
    for (k, g) in mesh.geom.iter().enumerate() {
        let fmax = mesh.faces[k].iter().map(|f| f.sj).fold(0.0, f64::max);
        let c = max_speed[k];
        if c > 0.0 {
            dt = dt.min(cfl / (c * cn * fmax / g.j));
        }
    }
    dt
}

/// Semi-discrete operator with all precomputed connectivity and sources.
pub struct Solver {
    pub mesh: Mesh,
    pub re: ReferenceElement,
    pub coeffs: Coefficients,
    pub config: SolverConfig,
    pub layout: Layout,
    /// Speeds entering the step estimate, see [`step_speeds`].
    pub step_speed: Vec<f64>,
    disc: rhs::Discretization,
}

impl Solver {
    /// Evaluate the coefficient field and assemble the operator.
    pub fn build(mesh: Mesh, n: usize, field: &CoefficientField, sampling: Sampling, config: SolverConfig) -> Result<Self> {
        let re = ReferenceElement::build(mesh.dim, n)?;
        let layout = Layout::for_mode(config.mode);
        let coeffs = Coefficients::build(field, sampling, &mesh, &re, &layout.stress, &layout.vel)?;
        Self::new(mesh, re, coeffs, config)
    }

    pub fn new(mesh: Mesh, re: ReferenceElement, coeffs: Coefficients, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::for_mode(config.mode);
        if config.mode == RunMode::Compact2d && mesh.dim != 2 {
            return Err(Error::Config("compact2d run mode needs a 2D mesh".into()));
        }
        if coeffs.stress != layout.stress || coeffs.vel != layout.vel {
            return Err(Error::Config("coefficient tables were built for a different run mode".into()));
        }
        if re.dim != mesh.dim {
            return Err(Error::Config("reference element and mesh dimensions differ".into()));
        }
        let disc = rhs::Discretization::new(&mesh, &re, &layout, &config)?;
        let step_speed = step_speeds(&coeffs, &layout, mesh.dim, config.alpha_tau, config.alpha_v);
        Ok(Self {
            mesh,
            re,
            coeffs,
            config,
            layout,
            step_speed,
            disc,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_elements() * self.re.np * self.layout.nfields()
    }

    pub fn estimate_dt(&self) -> f64 {
        estimate_dt(&self.mesh, &self.step_speed, self.re.n, self.config.cfl)
    }

    /// Full right-hand side, dQ/dt = rhs(Q, t).
    pub fn rhs(&self, u: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        self.rhs_with(u, t, RhsOptions::default(), out)
    }

    /// ½ Σ_k ∫ τᵀQ_sτ + vᵀQ_v v with the exact Hessians.
    pub fn energy(&self, state: &State) -> f64 {
        rhs::energy(self, state)
    }

    /// Values of the 13 components at physical point `x` (zero for inactive
    /// fields); `None` outside the mesh.
    pub fn sample(&self, state: &State, x: &[f64; 3]) -> Option<[f64; NFIELDS]> {
        let (k, r) = self.mesh.locate(x)?;
        let phi = self.re.interp_matrix(&r[..self.mesh.dim]);
        let mut out = [0.0; NFIELDS];
        for a in 0..self.layout.nfields() {
            let u = state.field(k, a);
            out[self.layout.global_of(a)] = (0..self.re.np).map(|j| phi[(0, j)] * u[j]).sum();
        }
        Some(out)
    }

    /// First element holding a non-finite value.
    pub fn check_finite(&self, state: &State) -> Result<()> {
        let n = state.np * state.nfields;
        if let Some(pos) = state.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                element: pos / n,
                time: state.t,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        let l = Layout::for_mode(RunMode::Compact2d);
        assert_eq!(l.nfields(), 9);
        assert_eq!(l.global_of(4), 6);
        assert_eq!(l.global_of(5), 7);
        assert_eq!(l.global_of(8), 11);
        assert_eq!(l.local_of(12), None);
        let f = Layout::for_mode(RunMode::Full13);
        assert!((0..13).all(|g| f.local_of(g) == Some(g)));
    }

    #[test]
    fn normal_matrix_patterns() {
        let a = normal_matrix(&[1.0, 0.0, 0.0]);
        assert_eq!(a, crate::material::a_matrix(0));
        assert_eq!(normal_matrix(&[0.0, 0.0, 1.0]), crate::material::a_matrix(2));
        let s = 1.0 / 3f64.sqrt();
        let a = normal_matrix(&[s, s, s]);
        let pattern = [
            [1, 0, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0],
            [0, 0, 1, 0, 0, 0],
            [0, 1, 1, 0, 0, 0],
            [1, 0, 1, 0, 0, 0],
            [1, 1, 0, 0, 0, 0],
            [0, 0, 0, -1, -1, -1],
        ];
        for i in 0..7 {
            for j in 0..6 {
                assert!((a[(i, j)] - pattern[i][j] as f64 * s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn trace_constants() {
        assert_eq!(trace_constant(2, 1), 3.0);
        assert_eq!(trace_constant(2, 2), 6.0);
        assert_eq!(trace_constant(3, 1), 8.0 / 3.0);
    }

    #[test]
    fn config_rejects_negative_penalty() {
        let c = SolverConfig {
            alpha_tau: -1.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
