//! Analytic plane-wave solutions of the first-order Biot system.
//!
//! A mode Q = R exp(i(ωt − k·x)) solves ∂Q/∂t + A∂₁Q + B∂₂Q + C∂₃Q = DQ
//! exactly when ωR = (A k₁ + B k₂ + C k₃ − iD) R.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_complex, ComplexEigen};
use crate::material::{FirstOrderBlocks, PoroelasticMaterial};

pub const NFIELDS: usize = 13;
/// Offset of the velocity components in the 13-vector.
pub const VEL: usize = 7;

const TAU11: usize = 0;
const TAU22: usize = 1;
const TAU12: usize = 5;
const PRESSURE: usize = 6;
const AMPLITUDE: f64 = 100.0;

/// Complex symbol A k₁ + B k₂ + C k₃ − iD (the dissipative part only when
/// `viscous`).
pub fn build_symbol(blocks: &FirstOrderBlocks, k: &[f64; 3], viscous: bool) -> DMatrix<Complex64> {
    let re = blocks.directional(k);
    DMatrix::from_fn(NFIELDS, NFIELDS, |i, j| {
        let im = if viscous { -blocks.d[(i, j)] } else { 0.0 };
        Complex64::new(re[(i, j)], im)
    })
}

/// Full eigendecomposition with the residual postcondition enforced.
pub fn eigensolve(symbol: &DMatrix<Complex64>) -> Result<ComplexEigen> {
    let eig = eig_complex(symbol)?;
    let scale = symbol.norm().max(f64::MIN_POSITIVE);
    let res = eig.max_residual(symbol);
    if res > 1e-10 * scale {
        return Err(Error::Convergence {
            what: format!("symbol eigenpairs (residual {res:e}, ‖A‖ = {scale:e})"),
            iterations: 0,
        });
    }
    Ok(eig)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModeKind {
    FastP,
    Shear,
    SlowP,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::FastP => "fast_p",
            Self::Shear => "s",
            Self::SlowP => "slow_p",
        }
    }

    /// Component scaled to the reference amplitude.
    fn designated(self) -> usize {
        match self {
            Self::FastP => TAU11,
            Self::Shear => TAU22,
            Self::SlowP => PRESSURE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub kind: ModeKind,
    pub omega: Complex64,
    pub k: [f64; 3],
    /// Eigenvector times amplitude.
    pub r: [Complex64; NFIELDS],
}

impl Mode {
    pub fn phase_velocity(&self) -> f64 {
        self.omega.re / norm3(&self.k)
    }
}

fn norm3(k: &[f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Orthonormal basis of the numerical null space of `a`, `dim` vectors.
fn null_vectors(a: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let n = a.ncols();
    DMatrix::from_fn(n, dim, |i, c| vt[(order[c], i)].conj())
}

/// Eigenvalue with positive real part and its eigenspace.
struct Branch {
    omega: Complex64,
    space: DMatrix<Complex64>,
}

fn propagating_branches(symbol: &DMatrix<Complex64>) -> Result<Vec<Branch>> {
    let eig = eigensolve(symbol)?;
    let rho = eig.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho == 0.0 {
        return Ok(Vec::new());
    }
    let mut pos: Vec<Complex64> = eig.values.iter().copied().filter(|z| z.re > 1e-8 * rho).collect();
    pos.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in pos {
        match clusters.last_mut() {
            Some(c) if (c[0] - z).norm() <= 1e-6 * rho => c.push(z),
            _ => clusters.push(vec![z]),
        }
    }
    let n = symbol.nrows();
    Ok(clusters
        .into_iter()
        .map(|c| {
            let omega = c.iter().sum::<Complex64>() / c.len() as f64;
            let shifted = symbol - DMatrix::<Complex64>::identity(n, n) * omega;
            Branch {
                omega,
                space: null_vectors(&shifted, c.len()),
            }
        })
        .collect())
}

/// |⟨v_solid, k̂⟩| / ‖v_solid‖ for a vector of the eigenspace.
fn longitudinality(v: &[Complex64], khat: &[f64; 3]) -> f64 {
    let dot: Complex64 = (0..3).map(|i| v[VEL + i] * khat[i]).sum();
    let nrm: f64 = (0..3).map(|i| v[VEL + i].norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        0.0
    } else {
        dot.norm() / nrm
    }
}

/// Combination of the columns of `space` maximizing |wᴴ v| for ‖c‖ = 1.
fn best_combination(space: &DMatrix<Complex64>, w: &[f64; NFIELDS]) -> (Vec<Complex64>, f64) {
    let m = space.ncols();
    let proj: Vec<Complex64> = (0..m)
        .map(|c| (0..NFIELDS).map(|i| space[(i, c)] * w[i]).sum())
        .collect();
    let pn = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let coef: Vec<Complex64> = if pn > 0.0 {
        proj.iter().map(|z| z.conj() / pn).collect()
    } else {
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        c[0] = Complex64::new(1.0, 0.0);
        c
    };
    let v: Vec<Complex64> = (0..NFIELDS)
        .map(|i| (0..m).map(|c| space[(i, c)] * coef[c]).sum())
        .collect();
    (v, pn)
}

fn normalize(kind: ModeKind, v: &[Complex64]) -> [Complex64; NFIELDS] {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut idx = kind.designated();
    if v[idx].norm() < 1e-8 * vmax {
        idx = (0..NFIELDS).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    }
    let s = Complex64::new(AMPLITUDE, 0.0) / v[idx];
    std::array::from_fn(|i| v[i] * s)
}

/// Fast P, S and slow P modes travelling along `k`.
///
/// Branches are classified by polarization: P-type when the solid velocity
/// lies within 45° of k̂. Among S-type branches the polarization with the
/// largest τ₂₂ (then τ₁₂) content is chosen, which picks the in-plane shear
/// wave for wavevectors in the x₁–x₂ plane.
pub fn select_modes(blocks: &FirstOrderBlocks, k: &[f64; 3], viscous: bool) -> Result<[Mode; 3]> {
    let kn = norm3(k);
    if kn == 0.0 {
        return Err(Error::Setup("plane wave needs a nonzero wavevector".into()));
    }
    let khat = [k[0] / kn, k[1] / kn, k[2] / kn];
    let branches = propagating_branches(&build_symbol(blocks, k, viscous))?;
    let mut p_type: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    let mut s_best: Option<(Complex64, Vec<Complex64>, f64)> = None;
    let mut w = [0.0; NFIELDS];
    w[TAU22] = 1.0;
    w[TAU12] = 1e-3;
    let cos45 = std::f64::consts::FRAC_1_SQRT_2;
    for b in &branches {
        let (v0, _) = best_combination(&b.space, &{
            let mut e = [0.0; NFIELDS];
            for i in 0..3 {
                e[VEL + i] = khat[i];
            }
            e
        });
        if b.space.ncols() == 1 && longitudinality(&v0, &khat) > cos45 {
            p_type.push((b.omega, v0));
            continue;
        }
        let (v, score) = best_combination(&b.space, &w);
        let score = score / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        if s_best.as_ref().is_none_or(|s| score > s.2) {
            s_best = Some((b.omega, v, score));
        }
    }
    if p_type.len() < 2 {
        return Err(Error::Setup(format!(
            "expected two compressional branches along {k:?}, found {}",
            p_type.len()
        )));
    }
    let (s_omega, s_vec, _) = s_best.ok_or_else(|| Error::Setup(format!("no shear branch along {k:?}")))?;
    let fast = p_type.iter().max_by(|a, b| a.0.re.total_cmp(&b.0.re)).cloned().unwrap();
    let slow = p_type.iter().min_by(|a, b| a.0.re.total_cmp(&b.0.re)).cloned().unwrap();
    // A stiff fluid and soft frame can put the slow wave above the shear
    // wave; only the fast wave is required to lead.
    if !(fast.0.re > s_omega.re && fast.0.re > slow.0.re) {
        return Err(Error::Setup(format!(
            "ambiguous mode ordering along {k:?}: fast {}, shear {}, slow {}",
            fast.0, s_omega, slow.0
        )));
    }
    let mk = |kind, omega, v: &[Complex64]| Mode {
        kind,
        omega,
        k: *k,
        r: normalize(kind, v),
    };
    Ok([
        mk(ModeKind::FastP, fast.0, &fast.1),
        mk(ModeKind::Shear, s_omega, &s_vec),
        mk(ModeKind::SlowP, slow.0, &slow.1),
    ])
}

/// Superposition of plane-wave modes.
#[derive(Debug, Clone)]
pub struct PlaneWaveSolution {
    pub modes: Vec<Mode>,
}

impl PlaneWaveSolution {
    /// Fast P, S and slow P waves sharing one wavevector.
    pub fn three_modes(material: &PoroelasticMaterial, k: [f64; 3], viscous: bool) -> Result<Self> {
        let blocks = material.system()?.first_order_from_symmetric();
        Ok(Self {
            modes: select_modes(&blocks, &k, viscous && material.eta > 0.0)?.to_vec(),
        })
    }

    fn phasors<'a>(&'a self, x: &'a [f64; 3], t: f64) -> impl Iterator<Item = (&'a Mode, Complex64)> + 'a {
        self.modes.iter().map(move |m| {
            let kx = m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2];
            let arg = Complex64::i() * (m.omega * t - kx);
            (m, arg.exp())
        })
    }

    pub fn evaluate(&self, x: &[f64; 3], t: f64) -> [f64; NFIELDS] {
        let mut out = [0.0; NFIELDS];
        for (m, e) in self.phasors(x, t) {
            for (o, r) in out.iter_mut().zip(&m.r) {
                *o += (r * e).re;
            }
        }
        out
    }

    pub fn time_derivative(&self, x: &[f64; 3], t: f64) -> [f64; NFIELDS] {
        let mut out = [0.0; NFIELDS];
        for (m, e) in self.phasors(x, t) {
            let f = Complex64::i() * m.omega * e;
            for (o, r) in out.iter_mut().zip(&m.r) {
                *o += (r * f).re;
            }
        }
        out
    }

    /// Spatial gradient, `out[d][i]` = ∂Q_i/∂x_d.
    pub fn gradient(&self, x: &[f64; 3], t: f64) -> [[f64; NFIELDS]; 3] {
        let mut out = [[0.0; NFIELDS]; 3];
        for (m, e) in self.phasors(x, t) {
            for d in 0..3 {
                let f = -Complex64::i() * m.k[d] * e;
                for (o, r) in out[d].iter_mut().zip(&m.r) {
                    *o += (r * f).re;
                }
            }
        }
        out
    }
}

/// Ricker wavelet (1 − 2a²) e^{−a²}, a = πf₀(t − t₀).
pub fn ricker(t: f64, f0: f64, t0: f64) -> f64 {
    let a = std::f64::consts::PI * f0 * (t - t0);
    let a2 = a * a;
    (1.0 - 2.0 * a2) * (-a2).exp()
}

/// Center-of-mass particle velocity b = v + (ρ_f/ρ) q.
pub fn center_of_mass_velocity(v: &[f64; 3], q: &[f64; 3], rho: f64, rho_f: f64) -> [f64; 3] {
    std::array::from_fn(|i| v[i] + rho_f / rho * q[i])
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionRow {
    pub angle_deg: f64,
    pub mode: ModeKind,
    pub phase_velocity: f64,
    /// Temporal decay rate Im ω of e^{iωt}.
    pub attenuation: f64,
}

/// Phase velocities and attenuation of the three modes for wavevectors
/// |k|(cos θ, sin θ, 0).
pub fn dispersion(material: &PoroelasticMaterial, wavenumber: f64, angles_deg: &[f64]) -> Result<Vec<DispersionRow>> {
    let blocks = material.system()?.first_order_from_symmetric();
    let viscous = material.eta > 0.0;
    let mut rows = Vec::with_capacity(3 * angles_deg.len());
    for &a in angles_deg {
        let th = a.to_radians();
        let k = [wavenumber * th.cos(), wavenumber * th.sin(), 0.0];
        for m in select_modes(&blocks, &k, viscous)? {
            rows.push(DispersionRow {
                angle_deg: a,
                mode: m.kind,
                phase_velocity: m.phase_velocity(),
                attenuation: m.omega.im,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{preset, Units};

    fn sandstone() -> PoroelasticMaterial {
        preset("sandstone_isotropic").unwrap().in_units(Units::Scaled)
    }

    fn blocks(m: &PoroelasticMaterial) -> FirstOrderBlocks {
        m.system().unwrap().first_order_from_symmetric()
    }

    /// Roots of det(ρ_s-weighted 2×2) dispersion relations for the isotropic
    /// medium, written from the Biot moduli directly.
    fn isotropic_speeds(m: &PoroelasticMaterial) -> (f64, f64, f64) {
        let d = m.derive().unwrap();
        let mu = m.c.c55;
        let kfr = m.c.c11 - 4.0 / 3.0 * mu;
        let al = d.alpha[0];
        let bm = d.biot_m;
        let h = kfr + 4.0 / 3.0 * mu + al * al * bm;
        let c = al * bm;
        let (rho, rf, mm) = (d.rho, d.rho_f, d.m[0]);
        // Inviscid: (ρ c² − H)(m c² − M) − (ρ_f c² − C)² = 0 with c² = x.
        let qa = rho * mm - rf * rf;
        let qb = -(rho * bm + mm * h - 2.0 * rf * c);
        let qc = h * bm - c * c;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let fast = ((-qb + disc) / (2.0 * qa)).sqrt();
        let slow = ((-qb - disc) / (2.0 * qa)).sqrt();
        let shear = (mu / (rho - rf * rf / mm)).sqrt();
        (fast, shear, slow)
    }

    #[test]
    fn zero_wavevector_gives_zero_symbol() {
        let s = build_symbol(&blocks(&sandstone()), &[0.0; 3], false);
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn symbol_odd_in_k() {
        let b = blocks(&sandstone());
        let k = [0.3, -1.2, 0.7];
        let s1 = build_symbol(&b, &k, false);
        let s2 = build_symbol(&b, &[-0.3, 1.2, -0.7], false);
        assert!((s1 + s2).norm() == 0.0);
    }

    #[test]
    fn isotropic_eigenvalues_match_characteristic_roots() {
        let m = sandstone();
        let (cf, cs, cp) = isotropic_speeds(&m);
        let s = build_symbol(&blocks(&m), &[1.0, 0.0, 0.0], false);
        let eig = eigensolve(&s).unwrap();
        let mut vals: Vec<f64> = eig.values.iter().map(|z| z.re).collect();
        for z in &eig.values {
            assert!(z.im.abs() < 1e-10 * s.norm());
        }
        vals.sort_by(f64::total_cmp);
        let want = [-cf, -cs, -cs, -cp, 0.0, 0.0, 0.0, 0.0, 0.0, cp, cs, cs, cf];
        for (a, b) in vals.iter().zip(want) {
            assert!((a - b).abs() < 1e-9 * cf, "{vals:?} vs {want:?}");
        }
        assert!(cf > cs && cs > cp && cp > 0.0);
    }

    #[test]
    fn three_ordered_modes_with_small_residuals() {
        let m = sandstone();
        let b = blocks(&m);
        let k = [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 0.0];
        let modes = select_modes(&b, &k, false).unwrap();
        assert!(modes[0].phase_velocity() > modes[1].phase_velocity());
        assert!(modes[1].phase_velocity() > modes[2].phase_velocity());
        let s = build_symbol(&b, &k, false);
        for md in &modes {
            let r = nalgebra::DVector::from_column_slice(&md.r);
            let res = (&s * &r - &r * md.omega).norm() / r.norm();
            assert!(res < 1e-10 * s.norm());
        }
        assert!((modes[0].r[0] - Complex64::new(100.0, 0.0)).norm() < 1e-12);
        assert!((modes[1].r[1] - Complex64::new(100.0, 0.0)).norm() < 1e-12);
        assert!((modes[2].r[6] - Complex64::new(100.0, 0.0)).norm() < 1e-12);
        // In-plane wave: no out-of-plane components.
        for md in &modes {
            for i in [3, 4, 9, 12] {
                assert!(md.r[i].norm() < 1e-8);
            }
        }
    }

    #[test]
    fn inviscid_speeds_independent_of_wavenumber() {
        let b = blocks(&sandstone());
        let m1 = select_modes(&b, &[1.0, 0.5, 0.0], false).unwrap();
        let m2 = select_modes(&b, &[2.0, 1.0, 0.0], false).unwrap();
        for (a, c) in m1.iter().zip(&m2) {
            assert!((a.phase_velocity() - c.phase_velocity()).abs() < 1e-10);
            assert!((c.omega - a.omega * 2.0).norm() < 1e-9);
        }
    }

    #[test]
    fn viscous_modes_decay() {
        let m = sandstone();
        let k = [2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 0.0];
        let pw = PlaneWaveSolution::three_modes(&m, k, true).unwrap();
        for md in &pw.modes {
            assert!(md.omega.im > 0.0, "{:?}", md.omega);
            // |exp(iωt)| shrinks over time.
            let e = |t: f64| (Complex64::i() * md.omega * t).exp().norm();
            assert!(e(1.0) < e(0.0));
        }
    }

    #[test]
    fn evaluate_at_origin_and_period() {
        let m = sandstone();
        let pw = PlaneWaveSolution::three_modes(&m, [1.0, 2.0, 0.0], false).unwrap();
        let q0 = pw.evaluate(&[0.0; 3], 0.0);
        for i in 0..NFIELDS {
            let want: f64 = pw.modes.iter().map(|md| md.r[i].re).sum();
            assert!((q0[i] - want).abs() < 1e-12 * 100.0);
        }
        let single = PlaneWaveSolution { modes: vec![pw.modes[1].clone()] };
        let period = 2.0 * std::f64::consts::PI / single.modes[0].omega.re;
        let x = [0.3, 0.1, 0.0];
        let a = single.evaluate(&x, 0.2);
        let b = single.evaluate(&x, 0.2 + period);
        for i in 0..NFIELDS {
            assert!((a[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluate_satisfies_the_pde() {
        for viscous in [false, true] {
            let m = sandstone();
            let b = blocks(&m);
            let pw = PlaneWaveSolution::three_modes(&m, [2.0, -1.0, 0.0], viscous).unwrap();
            let (x, t, h) = ([0.2, 0.7, 0.0], 0.3, 1e-6);
            let qp = pw.evaluate(&x, t + h);
            let qm = pw.evaluate(&x, t - h);
            let dt = pw.time_derivative(&x, t);
            let g = pw.gradient(&x, t);
            let q = pw.evaluate(&x, t);
            for i in 0..NFIELDS {
                let fd = (qp[i] - qm[i]) / (2.0 * h);
                assert!((fd - dt[i]).abs() < 1e-6 * 100.0 * 10.0, "{i}: {fd} {}", dt[i]);
                // ∂Q/∂t = −A∂₁Q − B∂₂Q + DQ.
                let mut rhs = 0.0;
                for j in 0..NFIELDS {
                    rhs -= b.a[(i, j)] * g[0][j] + b.b[(i, j)] * g[1][j];
                    if viscous {
                        rhs += b.d[(i, j)] * q[j];
                    }
                }
                assert!((rhs - dt[i]).abs() < 1e-9 * 1e3, "{i}: {rhs} {}", dt[i]);
            }
        }
    }

    #[test]
    fn ricker_values() {
        assert_eq!(ricker(0.4, 10.0, 0.4), 1.0);
        let z = 1.0 / (2f64.sqrt() * std::f64::consts::PI * 10.0);
        assert!(ricker(0.4 + z, 10.0, 0.4).abs() < 1e-15);
        assert!(ricker(0.4 - z, 10.0, 0.4).abs() < 1e-15);
        assert!(ricker(0.4 + 3.0 / 10.0, 10.0, 0.4).abs() < 1e-30);
    }

    #[test]
    fn center_of_mass() {
        assert_eq!(center_of_mass_velocity(&[1.0, 2.0, 3.0], &[0.0; 3], 2.0, 1.0), [1.0, 2.0, 3.0]);
        assert_eq!(center_of_mass_velocity(&[1.0, 2.0, 3.0], &[5.0; 3], 2.0, 0.0), [1.0, 2.0, 3.0]);
        let b = center_of_mass_velocity(&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0], 2208.0, 1040.0);
        assert!((b[0] - (1.0 + 2.0 * 1040.0 / 2208.0)).abs() < 1e-15);
    }

    #[test]
    fn orthotropic_dispersion_sweep() {
        let m = preset("sandstone_orthotropic").unwrap().swap_axes_23().in_units(Units::Scaled);
        let rows = dispersion(&m, 10.0, &[0.0, 30.0, 60.0, 90.0]).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            assert!(r.phase_velocity > 0.0 && r.attenuation >= -1e-12);
        }
        // Anisotropy: fast P speed differs between the axes.
        assert!((rows[0].phase_velocity - rows[9].phase_velocity).abs() > 1e-3);
    }
}
