//! Biot system matrices in symmetric form and in the first-order matrix form.

use nalgebra::{SMatrix, SVector};

use super::{DerivedCoefficients, PoroelasticMaterial};
use crate::error::{Error, Result};

pub type M6 = SMatrix<f64, 6, 6>;
pub type M7 = SMatrix<f64, 7, 7>;
pub type M76 = SMatrix<f64, 7, 6>;
pub type M13 = SMatrix<f64, 13, 13>;

/// Nonzero entries (row, col, value) of the constant coupling matrices A_i.
pub const A_ENTRIES: [[(usize, usize, f64); 4]; 3] = [
    [(0, 0, 1.0), (4, 2, 1.0), (5, 1, 1.0), (6, 3, -1.0)],
    [(1, 1, 1.0), (3, 2, 1.0), (5, 0, 1.0), (6, 4, -1.0)],
    [(2, 2, 1.0), (3, 1, 1.0), (4, 0, 1.0), (6, 5, -1.0)],
];

pub fn a_matrix(i: usize) -> M76 {
    let mut a = M76::zeros();
    for &(r, c, v) in &A_ENTRIES[i] {
        a[(r, c)] = v;
    }
    a
}

/// A_n = Σ n_i A_i.
pub fn normal_matrix(n: &[f64]) -> M76 {
    let mut a = M76::zeros();
    for (i, ni) in n.iter().enumerate().take(3) {
        for &(r, c, v) in &A_ENTRIES[i] {
            a[(r, c)] += ni * v;
        }
    }
    a
}

/// First-order form ∂Q/∂t + A ∂Q/∂x1 + B ∂Q/∂x2 + C ∂Q/∂x3 = D Q.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderBlocks {
    pub a: M13,
    pub b: M13,
    pub c: M13,
    pub d: M13,
}

impl FirstOrderBlocks {
    /// Flux Jacobian in direction k: A k1 + B k2 + C k3.
    pub fn directional(&self, k: &[f64; 3]) -> M13 {
        self.a * k[0] + self.b * k[1] + self.c * k[2]
    }
}

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    /// Drained compliance S = C⁻¹.
    pub s: M6,
    pub alpha: SVector<f64, 6>,
    pub biot_m: f64,
    pub qs: M7,
    pub qs_inv: M7,
    pub qv: M6,
    pub qv_inv: M6,
    /// Dissipation in the symmetric form (negative semi-definite).
    pub d: M6,
    /// Undrained stiffness c^u = c + M α αᵀ.
    pub cu: M6,
}

impl SystemMatrices {
    pub fn assemble(mat: &PoroelasticMaterial, der: &DerivedCoefficients) -> Result<Self> {
        let c = mat.c.matrix();
        let chol = c.cholesky().ok_or_else(|| {
            Error::IndefiniteHessian(format!("{}: drained stiffness is not positive definite", mat.name))
        })?;
        let s = chol.inverse();
        let mut alpha = SVector::<f64, 6>::zeros();
        for i in 0..3 {
            alpha[i] = der.alpha[i];
        }
        let m = der.biot_m;
        let sa = s * alpha;
        let mut qs = M7::zeros();
        qs.fixed_view_mut::<6, 6>(0, 0).copy_from(&s);
        qs.fixed_view_mut::<6, 1>(0, 6).copy_from(&sa);
        qs.fixed_view_mut::<1, 6>(6, 0).copy_from(&sa.transpose());
        qs[(6, 6)] = 1.0 / m + alpha.dot(&sa);

        // Closed-form inverse [[C + M α αᵀ, −M α], [−M αᵀ, M]].
        let cu = c + alpha * alpha.transpose() * m;
        let mut qs_inv = M7::zeros();
        qs_inv.fixed_view_mut::<6, 6>(0, 0).copy_from(&cu);
        qs_inv.fixed_view_mut::<6, 1>(0, 6).copy_from(&(-alpha * m));
        qs_inv.fixed_view_mut::<1, 6>(6, 0).copy_from(&(-alpha.transpose() * m));
        qs_inv[(6, 6)] = m;

        let mut qv = M6::zeros();
        let mut qv_inv = M6::zeros();
        let mut d = M6::zeros();
        for i in 0..3 {
            qv[(i, i)] = der.rho;
            qv[(i, i + 3)] = der.rho_f;
            qv[(i + 3, i)] = der.rho_f;
            qv[(i + 3, i + 3)] = der.m[i];
            let b = der.beta[i];
            qv_inv[(i, i)] = der.m[i] / b;
            qv_inv[(i, i + 3)] = -der.rho_f / b;
            qv_inv[(i + 3, i)] = -der.rho_f / b;
            qv_inv[(i + 3, i + 3)] = der.rho / b;
            d[(i + 3, i + 3)] = -der.resistivity[i];
        }
        if qs.cholesky().is_none() {
            return Err(Error::IndefiniteHessian(format!("{}: Q_s", mat.name)));
        }
        if qv.cholesky().is_none() {
            return Err(Error::IndefiniteHessian(format!("{}: Q_v", mat.name)));
        }
        Ok(Self {
            s,
            alpha,
            biot_m: m,
            qs,
            qs_inv,
            qv,
            qv_inv,
            d,
            cu,
        })
    }

    /// Q_v⁻¹ D, the dissipative block of the first-order form.
    pub fn qv_inv_d(&self) -> M6 {
        self.qv_inv * self.d
    }

    /// First-order matrices reconstructed from the symmetric form:
    /// A = −blockdiag(Q_s, Q_v)⁻¹ [[0, A_1], [A_1ᵀ, 0]] and likewise for B, C.
    pub fn first_order_from_symmetric(&self) -> FirstOrderBlocks {
        let block = |i: usize| {
            let ai = a_matrix(i);
            let mut m = M13::zeros();
            m.fixed_view_mut::<7, 6>(0, 7).copy_from(&(-self.qs_inv * ai));
            m.fixed_view_mut::<6, 7>(7, 0).copy_from(&(-self.qv_inv * ai.transpose()));
            m
        };
        let mut d = M13::zeros();
        d.fixed_view_mut::<6, 6>(7, 7).copy_from(&self.qv_inv_d());
        FirstOrderBlocks {
            a: block(0),
            b: block(1),
            c: block(2),
            d,
        }
    }
}

impl FirstOrderBlocks {
    /// Largest characteristic speed max_n ρ(A n_1 + B n_2 + C n_3) over a
    /// sampled set of unit directions in the first `dim` coordinates.
    pub fn max_wave_speed(&self, dim: usize) -> Result<f64> {
        let mut best = 0.0_f64;
        for n in sample_directions(dim) {
            let m = self.directional(&n);
            let dm = nalgebra::DMatrix::from_fn(13, 13, |i, j| m[(i, j)]);
            let ev = crate::linalg::eigenvalues_real(&dm)?;
            best = best.max(crate::linalg::spectral_radius(&ev));
        }
        Ok(best)
    }
}

/// Unit directions covering a half circle (2D) or a hemisphere (3D); the
/// symbol is odd in n, so the other half adds nothing.
pub fn sample_directions(dim: usize) -> Vec<[f64; 3]> {
    if dim == 2 {
        let n = 36;
        (0..n)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / n as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect()
    } else {
        let n = 128;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut out: Vec<[f64; 3]> = (0..n)
            .map(|j| {
                let z = (j as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * j as f64;
                [r * t.cos(), r * t.sin(), z]
            })
            .collect();
        out.extend_from_slice(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        out
    }
}

/// First-order matrices written out entry by entry.
///
/// Three printed entries are corrected here: the τ33 row of the B coupling
/// uses c^u_23, the q2 row of the B_21 block carries −ρ/β_2 in the pressure
/// column, and the τ23 row of the C coupling places c_44 in the v2 column.
pub fn first_order_explicit(mat: &PoroelasticMaterial, der: &DerivedCoefficients) -> FirstOrderBlocks {
    let c = &mat.c;
    let m = der.biot_m;
    let al = der.alpha;
    let cu = |i: usize, j: usize, cij: f64| cij + m * al[i] * al[j];
    let (rho, rf) = (der.rho, der.rho_f);
    let mb: [f64; 3] = std::array::from_fn(|i| der.m[i] / der.beta[i]);
    let fb: [f64; 3] = std::array::from_fn(|i| rf / der.beta[i]);
    let rb: [f64; 3] = std::array::from_fn(|i| rho / der.beta[i]);

    // Stress rows 0..7, velocity columns 7..13; entries listed with the
    // overall minus sign applied.
    let mut a = M13::zeros();
    let mut b = M13::zeros();
    let mut cc = M13::zeros();
    let v = 7;

    a[(0, v)] = -cu(0, 0, c.c11);
    a[(1, v)] = -cu(0, 1, c.c12);
    a[(2, v)] = -cu(0, 2, c.c13);
    a[(0, v + 3)] = -al[0] * m;
    a[(1, v + 3)] = -al[1] * m;
    a[(2, v + 3)] = -al[2] * m;
    a[(4, v + 2)] = -c.c55;
    a[(5, v + 1)] = -c.c66;
    a[(6, v)] = m * al[0];
    a[(6, v + 3)] = m;
    a[(v, 0)] = -mb[0];
    a[(v, 6)] = -fb[0];
    a[(v + 1, 5)] = -mb[1];
    a[(v + 2, 4)] = -mb[2];
    a[(v + 3, 0)] = fb[0];
    a[(v + 3, 6)] = rb[0];
    a[(v + 4, 5)] = fb[1];
    a[(v + 5, 4)] = fb[2];

    b[(0, v + 1)] = -cu(0, 1, c.c12);
    b[(1, v + 1)] = -cu(1, 1, c.c22);
    b[(2, v + 1)] = -cu(1, 2, c.c23);
    b[(0, v + 4)] = -al[0] * m;
    b[(1, v + 4)] = -al[1] * m;
    b[(2, v + 4)] = -al[2] * m;
    b[(3, v + 2)] = -c.c44;
    b[(5, v)] = -c.c66;
    b[(6, v + 1)] = m * al[1];
    b[(6, v + 4)] = m;
    b[(v, 5)] = -mb[0];
    b[(v + 1, 1)] = -mb[1];
    b[(v + 1, 6)] = -fb[1];
    b[(v + 2, 3)] = -mb[2];
    b[(v + 3, 5)] = fb[0];
    b[(v + 4, 1)] = fb[1];
    b[(v + 4, 6)] = rb[1];
    b[(v + 5, 3)] = fb[2];

    cc[(0, v + 2)] = -cu(0, 2, c.c13);
    cc[(1, v + 2)] = -cu(1, 2, c.c23);
    cc[(2, v + 2)] = -cu(2, 2, c.c33);
    cc[(0, v + 5)] = -al[0] * m;
    cc[(1, v + 5)] = -al[1] * m;
    cc[(2, v + 5)] = -al[2] * m;
    cc[(3, v + 1)] = -c.c44;
    cc[(4, v)] = -c.c55;
    cc[(6, v + 2)] = m * al[2];
    cc[(6, v + 5)] = m;
    cc[(v, 4)] = -mb[0];
    cc[(v + 1, 3)] = -mb[1];
    cc[(v + 2, 2)] = -mb[2];
    cc[(v + 2, 6)] = -fb[2];
    cc[(v + 3, 4)] = fb[0];
    cc[(v + 4, 3)] = fb[1];
    cc[(v + 5, 2)] = fb[2];
    cc[(v + 5, 6)] = rb[2];

    let mut d = M13::zeros();
    for i in 0..3 {
        let e = der.resistivity[i] / der.beta[i];
        d[(v + i, v + 3 + i)] = rf * e;
        d[(v + 3 + i, v + 3 + i)] = -rho * e;
    }
    FirstOrderBlocks { a, b, c: cc, d }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::presets::all_presets;
    use proptest::prelude::*;

    fn rel(a: &M13, b: &M13) -> f64 {
        (a - b).amax() / a.amax().max(b.amax())
    }

    #[test]
    fn normal_matrix_pattern() {
        assert_eq!(normal_matrix(&[1.0, 0.0, 0.0]), a_matrix(0));
        assert_eq!(normal_matrix(&[0.0, 0.0, 1.0]), a_matrix(2));
        let s = 1.0 / 3f64.sqrt();
        let an = normal_matrix(&[s, s, s]);
        for x in an.iter() {
            assert!(*x == 0.0 || (x.abs() - s).abs() < 1e-15);
        }
        assert_eq!(an[(6, 3)], -s);
        assert_eq!(an[(3, 1)], s);
    }

    #[test]
    fn first_order_blocks_agree_for_all_presets() {
        for m in all_presets() {
            let d = m.derive().unwrap();
            let sys = SystemMatrices::assemble(&m, &d).unwrap();
            let sym = sys.first_order_from_symmetric();
            let exp = first_order_explicit(&m, &d);
            assert!(rel(&sym.a, &exp.a) < 1e-12, "{}", m.name);
            assert!(rel(&sym.b, &exp.b) < 1e-12, "{}", m.name);
            assert!(rel(&sym.c, &exp.c) < 1e-12, "{}", m.name);
            if m.eta > 0.0 {
                assert!(rel(&sym.d, &exp.d) < 1e-12, "{}", m.name);
            } else {
                assert_eq!(sym.d, M13::zeros());
            }
        }
    }

    #[test]
    fn closed_form_inverses() {
        for m in all_presets() {
            let sys = m.system().unwrap();
            let i7 = (sys.qs * sys.qs_inv - M7::identity()).amax();
            let i6 = (sys.qv * sys.qv_inv - M6::identity()).amax();
            assert!(i7 < 1e-12 && i6 < 1e-12, "{} {i7} {i6}", m.name);
            let num = sys.qs.try_inverse().unwrap();
            assert!((num - sys.qs_inv).amax() / sys.qs_inv.amax() < 1e-12);
            let num = sys.qv.try_inverse().unwrap();
            assert!((num - sys.qv_inv).amax() / sys.qv_inv.amax() < 1e-12);
        }
    }

    #[test]
    fn printed_transversely_isotropic_compliance() {
        let m = super::super::preset("sandstone_orthotropic").unwrap();
        let c = m.c;
        let sys = m.system().unwrap();
        let c1 = (c.c11 + c.c12) * c.c33 - 2.0 * c.c13 * c.c13;
        let c0 = (c.c11 - c.c12) * c1;
        let s11 = (c.c11 * c.c33 - c.c13 * c.c13) / c0;
        let s12 = (c.c13 * c.c13 - c.c12 * c.c33) / c0;
        let s13 = -c.c13 / c1;
        let s33 = (c.c11 + c.c12) / c1;
        for (got, want) in [
            (sys.s[(0, 0)], s11),
            (sys.s[(1, 1)], s11),
            (sys.s[(0, 1)], s12),
            (sys.s[(0, 2)], s13),
            (sys.s[(2, 2)], s33),
            (sys.s[(3, 3)], 1.0 / c.c55),
            (sys.s[(5, 5)], 2.0 / (c.c11 - c.c12)),
        ] {
            assert!((got - want).abs() < 1e-12 * want.abs());
        }
    }

    #[test]
    fn inviscid_dissipation_is_zero() {
        let m = super::super::preset("medium_III").unwrap();
        assert_eq!(m.system().unwrap().d, M6::zeros());
    }

    #[test]
    fn two_dimensional_restriction_stays_spd() {
        for m in all_presets() {
            let sys = m.system().unwrap();
            let keep_s = [0, 1, 2, 5, 6];
            let keep_v = [0, 1, 3, 4];
            let qs = SMatrix::<f64, 5, 5>::from_fn(|i, j| sys.qs[(keep_s[i], keep_s[j])]);
            let qv = SMatrix::<f64, 4, 4>::from_fn(|i, j| sys.qv[(keep_v[i], keep_v[j])]);
            assert!(qs.cholesky().is_some() && qv.cholesky().is_some());
        }
    }

    proptest! {
        #[test]
        fn energy_hessians_positive(u in proptest::collection::vec(-1.0f64..1.0, 13), idx in 0usize..7) {
            let m = all_presets().swap_remove(idx).in_units(super::super::Units::Scaled);
            let sys = m.system().unwrap();
            let us = SVector::<f64, 7>::from_column_slice(&u[..7]);
            let uv = SVector::<f64, 6>::from_column_slice(&u[7..]);
            prop_assume!(us.norm() > 1e-6 && uv.norm() > 1e-6);
            prop_assert!(us.dot(&(sys.qs * us)) > 0.0);
            prop_assert!(uv.dot(&(sys.qv * uv)) > 0.0);
            prop_assert!(uv.dot(&(sys.d * uv)) <= 0.0);
        }
    }
}
