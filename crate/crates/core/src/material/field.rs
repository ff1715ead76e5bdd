//! Spatially varying coefficients sampled at quadrature points.

use std::sync::Arc;

use nalgebra::{DMatrix, SMatrix};

use super::system::M6;
use super::{PoroelasticMaterial, SystemMatrices};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelem::ReferenceElement;
use crate::wadg::{ElementWeight, WeightTable};

pub type MaterialFn = dyn Fn(&[f64; 3]) -> std::result::Result<PoroelasticMaterial, String> + Send + Sync;

/// Rule assigning a material to every point of the domain.
#[derive(Clone)]
pub enum CoefficientField {
    Uniform(PoroelasticMaterial),
    /// One material per mesh element.
    PerElement(Vec<PoroelasticMaterial>),
    /// Layers along `axis`; `interfaces` are ascending and one shorter than
    /// `materials`.
    Layered {
        axis: usize,
        interfaces: Vec<f64>,
        materials: Vec<PoroelasticMaterial>,
    },
    /// Densities multiplied by s(x) = 1 + a·sin(2πf x₁)·sin(2πf x₂).
    DensityModulated {
        base: PoroelasticMaterial,
        amplitude: f64,
        frequency: f64,
    },
    Custom(Arc<MaterialFn>),
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform(m) => write!(f, "Uniform({})", m.name),
            Self::PerElement(v) => write!(f, "PerElement({} materials)", v.len()),
            Self::Layered { axis, interfaces, .. } => write!(f, "Layered(axis {axis}, {interfaces:?})"),
            Self::DensityModulated { base, amplitude, frequency } => {
                write!(f, "DensityModulated({}, a = {amplitude}, f = {frequency})", base.name)
            }
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// How coefficient tables are formed from the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sampling {
    /// Exact values at each quadrature point (weight-adjusted treatment).
    Pointwise,
    /// Quadrature average of the inverse Hessians over each element.
    ElementAverage,
}

impl CoefficientField {
    pub fn density_scale(amplitude: f64, frequency: f64, x: &[f64; 3]) -> f64 {
        let w = 2.0 * std::f64::consts::PI * frequency;
        1.0 + amplitude * (w * x[0]).sin() * (w * x[1]).sin()
    }

    /// Material at physical point `x` of element `k`.
    pub fn material_at(&self, k: usize, x: &[f64; 3]) -> Result<PoroelasticMaterial> {
        match self {
            Self::Uniform(m) => Ok(m.clone()),
            Self::PerElement(v) => v.get(k).cloned().ok_or_else(|| Error::Field {
                x: *x,
                msg: format!("no material for element {k}"),
            }),
            Self::Layered { axis, interfaces, materials } => {
                let layer = interfaces.iter().filter(|&&z| x[*axis] >= z).count();
                materials.get(layer).cloned().ok_or_else(|| Error::Field {
                    x: *x,
                    msg: format!("layer {layer} has no material"),
                })
            }
            Self::DensityModulated { base, amplitude, frequency } => {
                let s = Self::density_scale(*amplitude, *frequency, x);
                if !(s > 0.0) {
                    return Err(Error::Field {
                        x: *x,
                        msg: format!("density scale {s} is not positive"),
                    });
                }
                Ok(base.with_density_scale(s))
            }
            Self::Custom(f) => f(x).map_err(|msg| Error::Field { x: *x, msg }),
        }
    }

    /// All elements share one material.
    pub fn as_uniform(&self) -> Option<&PoroelasticMaterial> {
        match self {
            Self::Uniform(m) => Some(m),
            _ => None,
        }
    }
}

/// Per-point matrices restricted to the active fields of a layout.
#[derive(Debug, Clone, PartialEq)]
struct PointValues {
    qs_inv: Vec<f64>,
    qv_inv: Vec<f64>,
    qv_inv_d: Vec<f64>,
    qs: Vec<f64>,
    qv: Vec<f64>,
}

fn restrict<const R: usize>(m: &SMatrix<f64, R, R>, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        for &j in idx {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn invert(vals: &[f64], m: usize) -> Result<Vec<f64>> {
    let mat = DMatrix::from_row_slice(m, m, vals);
    let inv = mat
        .cholesky()
        .ok_or_else(|| Error::IndefiniteHessian("averaged Hessian".into()))?
        .inverse();
    Ok((0..m * m).map(|i| inv[(i / m, i % m)]).collect())
}

/// Small memo of system matrices keyed by material.
struct Memo {
    entries: Vec<(PoroelasticMaterial, SystemMatrices)>,
}

impl Memo {
    fn get(&mut self, mat: &PoroelasticMaterial) -> Result<SystemMatrices> {
        if let Some((_, s)) = self.entries.iter().find(|(m, _)| m == mat) {
            return Ok(s.clone());
        }
        let s = mat.system()?;
        if self.entries.len() >= 16 {
            self.entries.remove(0);
        }
        self.entries.push((mat.clone(), s.clone()));
        Ok(s)
    }
}

/// Cached coefficient tables consumed by the solver.
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// Active stress indices (into 0..7) and velocity indices (into 0..6).
    pub stress: Vec<usize>,
    pub vel: Vec<usize>,
    pub sampling: Sampling,
    /// Q_s⁻¹ and Q_v⁻¹, the weights used by the weight-adjusted inverse.
    pub qs_inv: WeightTable,
    pub qv_inv: WeightTable,
    /// Q_v⁻¹D; absent when the fluid is inviscid everywhere.
    pub qv_inv_d: Option<WeightTable>,
    /// Exact Hessians, used for the energy.
    pub qs: WeightTable,
    pub qv: WeightTable,
    /// Per element, one or `np` entries of (λ_1, λ_2, λ_3, r_1, r_2, r_3):
    /// decay rates of the relative fluid velocity and the coupling ratio
    /// r_i = ρ_f/ρ of the diffusive substep.
    pub decay: Vec<Vec<[f64; 6]>>,
    /// Largest characteristic speed on each element.
    pub max_speed: Vec<f64>,
}

impl Coefficients {
    pub fn build(
        field: &CoefficientField,
        sampling: Sampling,
        mesh: &Mesh,
        re: &ReferenceElement,
        stress: &[usize],
        vel: &[usize],
    ) -> Result<Self> {
        let (ns, nv, nq, np) = (stress.len(), vel.len(), re.nq(), re.np);
        let dim = mesh.dim;
        let mut memo = Memo { entries: Vec::new() };
        let point = |sys: &SystemMatrices| -> PointValues {
            let qvd: M6 = sys.qv_inv_d();
            PointValues {
                qs_inv: restrict::<7>(&sys.qs_inv, stress),
                qv_inv: restrict::<6>(&sys.qv_inv, vel),
                qv_inv_d: restrict::<6>(&qvd, vel),
                qs: restrict::<7>(&sys.qs, stress),
                qv: restrict::<6>(&sys.qv, vel),
            }
        };
        let decay_of = |qvd: &M6| -> [f64; 6] {
            let mut out = [0.0; 6];
            for i in 0..3 {
                let lam = qvd[(i + 3, i + 3)];
                out[i] = lam;
                out[i + 3] = if lam != 0.0 { -qvd[(i, i + 3)] / lam } else { 0.0 };
            }
            out
        };
        let full_qvd = |vals: &[f64]| -> M6 {
            let mut g = M6::zeros();
            for (a, &i) in vel.iter().enumerate() {
                for (b, &j) in vel.iter().enumerate() {
                    g[(i, j)] = vals[a * nv + b];
                }
            }
            g
        };

        let mut qs_inv = Vec::with_capacity(mesh.num_elements());
        let mut qv_inv = Vec::with_capacity(mesh.num_elements());
        let mut qvd = Vec::with_capacity(mesh.num_elements());
        let mut qs = Vec::with_capacity(mesh.num_elements());
        let mut qv = Vec::with_capacity(mesh.num_elements());
        let mut decay = Vec::with_capacity(mesh.num_elements());
        let mut viscous = false;

        let uniform_sys = match field {
            CoefficientField::Uniform(m) => Some(m.system()?),
            _ => None,
        };
        for k in 0..mesh.num_elements() {
            let g = &mesh.geom[k];
            // Values at quadrature points; one entry when constant.
            let pts: Vec<PointValues> = if let Some(sys) = &uniform_sys {
                vec![point(sys)]
            } else if let CoefficientField::PerElement(_) = field {
                let c = mesh.centroid(k);
                vec![point(&memo.get(&field.material_at(k, &c)?)?)]
            } else {
                let mut v = Vec::with_capacity(nq);
                for q in 0..nq {
                    let x = g.to_physical(re.quad.point(q));
                    v.push(point(&memo.get(&field.material_at(k, &x)?)?));
                }
                if v.iter().all(|p| *p == v[0]) {
                    v.truncate(1);
                }
                v
            };
            let constant = pts.len() == 1;
            let (e_qs_inv, e_qv_inv, e_qvd, e_qs, e_qv, e_decay);
            if constant || sampling == Sampling::ElementAverage {
                let avg = |f: &dyn Fn(&PointValues) -> &Vec<f64>, len: usize| -> Vec<f64> {
                    if constant {
                        return f(&pts[0]).clone();
                    }
                    let mut out = vec![0.0; len];
                    let wsum: f64 = re.quad.weights.iter().sum();
                    for (q, p) in pts.iter().enumerate() {
                        let w = re.quad.weights[q] / wsum;
                        for (o, x) in out.iter_mut().zip(f(p)) {
                            *o += w * x;
                        }
                    }
                    out
                };
                let a_qs_inv = avg(&|p| &p.qs_inv, ns * ns);
                let a_qv_inv = avg(&|p| &p.qv_inv, nv * nv);
                let a_qvd = avg(&|p| &p.qv_inv_d, nv * nv);
                e_qs = if constant { pts[0].qs.clone() } else { invert(&a_qs_inv, ns)? };
                e_qv = if constant { pts[0].qv.clone() } else { invert(&a_qv_inv, nv)? };
                e_decay = vec![decay_of(&full_qvd(&a_qvd))];
                e_qs_inv = ElementWeight::Constant(a_qs_inv);
                e_qv_inv = ElementWeight::Constant(a_qv_inv);
                e_qvd = ElementWeight::Constant(a_qvd);
            } else {
                let cat = |f: &dyn Fn(&PointValues) -> &Vec<f64>| -> Vec<f64> { pts.iter().flat_map(|p| f(p).iter().copied()).collect() };
                e_qs_inv = ElementWeight::Varying(cat(&|p| &p.qs_inv));
                e_qv_inv = ElementWeight::Varying(cat(&|p| &p.qv_inv));
                e_qvd = ElementWeight::Varying(cat(&|p| &p.qv_inv_d));
                e_qs = cat(&|p| &p.qs);
                e_qv = cat(&|p| &p.qv);
                let mut d = Vec::with_capacity(np);
                for j in 0..np {
                    let x = g.to_physical(&re.nodes[j * dim..(j + 1) * dim]);
                    let sys = memo.get(&field.material_at(k, &x)?)?;
                    d.push(decay_of(&sys.qv_inv_d()));
                }
                e_decay = d;
            }
            viscous |= e_decay.iter().any(|d| d[..3].iter().any(|&l| l != 0.0));
            qs_inv.push(e_qs_inv);
            qv_inv.push(e_qv_inv);
            qvd.push(e_qvd);
            if constant || sampling == Sampling::ElementAverage {
                qs.push(ElementWeight::Constant(e_qs));
                qv.push(ElementWeight::Constant(e_qv));
            } else {
                qs.push(ElementWeight::Varying(e_qs));
                qv.push(ElementWeight::Varying(e_qv));
            }
            decay.push(e_decay);
        }
        let max_speed = element_speeds(field, mesh, re)?;
        Ok(Self {
            stress: stress.to_vec(),
            vel: vel.to_vec(),
            sampling,
            qs_inv: WeightTable::new(ns, nq, qs_inv)?,
            qv_inv: WeightTable::new(nv, nq, qv_inv)?,
            qv_inv_d: if viscous { Some(WeightTable::general(nv, nq, qvd)?) } else { None },
            qs: WeightTable::new(ns, nq, qs)?,
            qv: WeightTable::new(nv, nq, qv)?,
            decay,
            max_speed,
        })
    }

    /// Bounds (s_min, s_max, v_min, v_max) of the pointwise spectra of Q_s and Q_v.
    pub fn hessian_bounds(&self) -> [f64; 4] {
        let (a, b) = self.qs.eigen_bounds();
        let (c, d) = self.qv.eigen_bounds();
        [a, b, c, d]
    }

    pub fn is_viscous(&self) -> bool {
        self.qv_inv_d.is_some()
    }
}

/// Largest characteristic speed per element.
///
/// Speeds are memoized per material. Density modulation rescales the base
/// speed by 1/√s analytically; custom fields are sampled at vertices and the
/// centroid only, since each point may be a distinct material.
fn element_speeds(field: &CoefficientField, mesh: &Mesh, re: &ReferenceElement) -> Result<Vec<f64>> {
    let dim = mesh.dim;
    let mut cache: Vec<(PoroelasticMaterial, f64)> = Vec::new();
    let mut speed_of = |m: &PoroelasticMaterial| -> Result<f64> {
        if let Some((_, s)) = cache.iter().find(|(c, _)| c == m) {
            return Ok(*s);
        }
        let s = m.system()?.first_order_from_symmetric().max_wave_speed(dim)?;
        cache.push((m.clone(), s));
        Ok(s)
    };
    let mut out = Vec::with_capacity(mesh.num_elements());
    match field {
        CoefficientField::Uniform(m) => {
            let s = speed_of(m)?;
            out.resize(mesh.num_elements(), s);
        }
        CoefficientField::DensityModulated { base, amplitude, frequency } => {
            let s0 = speed_of(base)?;
            for k in 0..mesh.num_elements() {
                let g = &mesh.geom[k];
                let mut smin = f64::INFINITY;
                for q in 0..re.nq() {
                    let x = g.to_physical(re.quad.point(q));
                    smin = smin.min(CoefficientField::density_scale(*amplitude, *frequency, &x));
                }
                for &v in &mesh.elements[k] {
                    smin = smin.min(CoefficientField::density_scale(*amplitude, *frequency, &mesh.vertices[v]));
                }
                out.push(s0 / smin.sqrt());
            }
        }
        _ => {
            for k in 0..mesh.num_elements() {
                let g = &mesh.geom[k];
                let mut pts: Vec<[f64; 3]> = mesh.elements[k].iter().map(|&v| mesh.vertices[v]).collect();
                pts.push(mesh.centroid(k));
                if !matches!(field, CoefficientField::Custom(_)) {
                    pts.extend((0..re.nq()).map(|q| g.to_physical(re.quad.point(q))));
                }
                let mut s = 0.0_f64;
                for x in &pts {
                    s = s.max(speed_of(&field.material_at(k, x)?)?);
                }
                out.push(s);
            }
        }
    }
    Ok(out)
}
