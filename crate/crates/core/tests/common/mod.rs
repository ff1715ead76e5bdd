#![allow(dead_code)]

use porowave::material::{preset, CoefficientField, PoroelasticMaterial, Sampling, Units};
use porowave::mesh::{build_uniform, BoundaryTag, UniformGridSpec};
use porowave::solver::{Solver, SolverConfig};

pub fn sandstone() -> PoroelasticMaterial {
    preset("sandstone_isotropic").unwrap().in_units(Units::Scaled)
}

pub fn inviscid() -> PoroelasticMaterial {
    sandstone().with_viscosity(0.0)
}

pub fn solver_on(spec: UniformGridSpec, n: usize, mat: &PoroelasticMaterial, config: SolverConfig) -> Solver {
    let mesh = build_uniform(&spec).unwrap();
    Solver::build(mesh, n, &CoefficientField::Uniform(mat.clone()), Sampling::Pointwise, config).unwrap()
}

/// Unit square with free-surface x sides and absorbing y sides.
pub fn mixed_boundaries(k1d: usize) -> UniformGridSpec {
    let mut s = UniformGridSpec::unit(2, k1d, BoundaryTag::Absorbing);
    s.tags[0] = [BoundaryTag::FreeSurface; 2];
    s
}

pub fn with_alpha(alpha: f64) -> SolverConfig {
    SolverConfig {
        alpha_tau: alpha,
        alpha_v: alpha,
        ..Default::default()
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
