//! Weight-adjusted mass operators.
//!
//! Nodal blocks are laid out field-major: `u[a * np + j]` is the coefficient
//! of nodal basis function `j` in field `a`. Weight values are stored per
//! quadrature point as row-major `m × m` matrices.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::error::{Error, Result};
use crate::refelem::ReferenceElement;

#[derive(Debug, Clone)]
pub enum ElementWeight {
    /// One `m × m` value for the whole element.
    Constant(Vec<f64>),
    /// `nq` values, one per volume quadrature point.
    Varying(Vec<f64>),
}

/// Pointwise symmetric positive definite weight W(x) sampled at the volume
/// quadrature points of every element.
#[derive(Debug, Clone)]
pub struct WeightTable {
    m: usize,
    nq: usize,
    elems: Vec<ElementWeight>,
    lambda_min: f64,
    lambda_max: f64,
}

impl WeightTable {
    pub fn new(m: usize, nq: usize, elems: Vec<ElementWeight>) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for (k, e) in elems.iter().enumerate() {
            let (vals, count) = match e {
                ElementWeight::Constant(v) => (v, 1),
                ElementWeight::Varying(v) => (v, nq),
            };
            if vals.len() != count * m * m {
                return Err(Error::Shape {
                    what: "weight table element",
                    expected: count * m * m,
                    got: vals.len(),
                });
            }
            for w in vals.chunks_exact(m * m) {
                let mat = DMatrix::from_row_slice(m, m, w);
                let asym = (&mat - mat.transpose()).amax();
                if asym > 1e-12 * mat.amax() {
                    return Err(Error::IndefiniteHessian(format!("weight on element {k} is not symmetric")));
                }
                let ev = mat.symmetric_eigenvalues();
                if !(ev.min() > 0.0) || !ev.max().is_finite() {
                    return Err(Error::IndefiniteHessian(format!(
                        "weight on element {k} is not positive definite (min eigenvalue {})",
                        ev.min()
                    )));
                }
                lo = lo.min(ev.min());
                hi = hi.max(ev.max());
            }
        }
        Ok(Self {
            m,
            nq,
            elems,
            lambda_min: lo,
            lambda_max: hi,
        })
    }

    /// Table of arbitrary (possibly nonsymmetric) matrices; bounds are not
    /// recorded.
    pub fn general(m: usize, nq: usize, elems: Vec<ElementWeight>) -> Result<Self> {
        for e in &elems {
            let (vals, count) = match e {
                ElementWeight::Constant(v) => (v, 1),
                ElementWeight::Varying(v) => (v, nq),
            };
            if vals.len() != count * m * m {
                return Err(Error::Shape {
                    what: "weight table element",
                    expected: count * m * m,
                    got: vals.len(),
                });
            }
        }
        Ok(Self {
            m,
            nq,
            elems,
            lambda_min: f64::NAN,
            lambda_max: f64::NAN,
        })
    }

    /// The same value on `k` elements.
    pub fn uniform(m: usize, nq: usize, k: usize, w: &[f64]) -> Result<Self> {
        Self::new(m, nq, vec![ElementWeight::Constant(w.to_vec()); k])
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn num_elements(&self) -> usize {
        self.elems.len()
    }

    pub fn is_constant(&self, k: usize) -> bool {
        matches!(self.elems[k], ElementWeight::Constant(_))
    }

    pub fn element(&self, k: usize) -> &ElementWeight {
        &self.elems[k]
    }

    /// Weight at quadrature point `q` of element `k`.
    pub fn at(&self, k: usize, q: usize) -> &[f64] {
        let mm = self.m * self.m;
        match &self.elems[k] {
            ElementWeight::Constant(v) => v,
            ElementWeight::Varying(v) => &v[q * mm..(q + 1) * mm],
        }
    }

    /// Smallest and largest pointwise eigenvalue of W.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    /// Pointwise bounds (w̃_min, w̃_max) on the spectrum of W⁻¹.
    pub fn inverse_bounds(&self) -> (f64, f64) {
        (1.0 / self.lambda_max, 1.0 / self.lambda_min)
    }

    /// Number of stored floats for element `k`.
    pub fn storage_len(&self, k: usize) -> usize {
        match &self.elems[k] {
            ElementWeight::Constant(v) | ElementWeight::Varying(v) => v.len(),
        }
    }

    fn check(&self, re: &ReferenceElement, k: usize, len: usize) -> Result<()> {
        if k >= self.elems.len() {
            return Err(Error::Config(format!("no weight cache for element {k}")));
        }
        if self.nq != re.nq() {
            return Err(Error::Config("weight table built for a different quadrature".into()));
        }
        if len != self.m * re.np {
            return Err(Error::Shape {
                what: "nodal block",
                expected: self.m * re.np,
                got: len,
            });
        }
        Ok(())
    }
}

/// `out (rows × cols) = a · b + beta · out` with `b` and `out` column-major.
pub(crate) fn gemm_into(out: &mut [f64], a: &DMatrix<f64>, b: &[f64], cols: usize, beta: f64) {
    let bv = DMatrixView::from_slice(b, a.ncols(), cols);
    let mut ov = DMatrixViewMut::from_slice(out, a.nrows(), cols);
    ov.gemm(1.0, a, &bv, beta);
}

/// Scratch buffers for allocation-free applications.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Pointwise product W(x_q)·u(x_q) for `nq` rows of a column-major `nq × m`
/// block, written to `out`.
fn pointwise(table: &WeightTable, k: usize, uq: &[f64], out: &mut [f64], nq: usize) {
    let m = table.m;
    for q in 0..nq {
        let w = table.at(k, q);
        for a in 0..m {
            let mut s = 0.0;
            for b in 0..m {
                s += w[a * m + b] * uq[b * nq + q];
            }
            out[a * nq + q] = s;
        }
    }
}

/// T_W u = P_q[W V_q u], accumulated into `out` as `out = beta·out + T_W u`.
///
/// Constant weights skip the quadrature round trip since P_q V_q = I.
pub fn apply_t_w_into(
    re: &ReferenceElement,
    table: &WeightTable,
    k: usize,
    u: &[f64],
    out: &mut [f64],
    beta: f64,
    ws: &mut Workspace,
) {
    let (m, np, nq) = (table.m, re.np, re.nq());
    match &table.elems[k] {
        ElementWeight::Constant(w) => {
            for a in 0..m {
                let o = &mut out[a * np..(a + 1) * np];
                if beta == 0.0 {
                    o.iter_mut().for_each(|x| *x = 0.0);
                } else if beta != 1.0 {
                    o.iter_mut().for_each(|x| *x *= beta);
                }
                for b in 0..m {
                    let wab = w[a * m + b];
                    if wab != 0.0 {
                        for (oj, uj) in o.iter_mut().zip(&u[b * np..(b + 1) * np]) {
                            *oj += wab * uj;
                        }
                    }
                }
            }
        }
        ElementWeight::Varying(_) => {
            ws.a.resize(nq * m, 0.0);
            ws.b.resize(nq * m, 0.0);
            gemm_into(&mut ws.a, &re.vq, u, m, 0.0);
            pointwise(table, k, &ws.a, &mut ws.b, nq);
            gemm_into(out, &re.pq, &ws.b, m, beta);
        }
    }
}

/// Weighted mass action V_qᵀ diag(J ŵ) [W(x_q) V_q u].
pub fn apply_weighted_mass(re: &ReferenceElement, table: &WeightTable, k: usize, j: f64, u: &[f64]) -> Result<Vec<f64>> {
    table.check(re, k, u.len())?;
    let (m, np, nq) = (table.m, re.np, re.nq());
    let mut uq = vec![0.0; nq * m];
    let mut wq = vec![0.0; nq * m];
    gemm_into(&mut uq, &re.vq, u, m, 0.0);
    pointwise(table, k, &uq, &mut wq, nq);
    for a in 0..m {
        for q in 0..nq {
            wq[a * nq + q] *= j * re.quad.weights[q];
        }
    }
    let mut out = vec![0.0; np * m];
    let vqt = re.vq.transpose();
    gemm_into(&mut out, &vqt, &wq, m, 0.0);
    Ok(out)
}

/// Weight-adjusted inverse applied to a weak-form residual:
/// P_q[W(x_q) · V_q (1/J) M̂⁻¹ r], where the table holds the weight W that
/// replaces the inverse of the Hessian.
pub fn apply_wadg_inverse(re: &ReferenceElement, table: &WeightTable, k: usize, j: f64, r: &[f64]) -> Result<Vec<f64>> {
    table.check(re, k, r.len())?;
    let m = table.m;
    let mut u = vec![0.0; r.len()];
    gemm_into(&mut u, &re.mass_inv, r, m, 0.0);
    u.iter_mut().for_each(|x| *x /= j);
    let mut out = vec![0.0; r.len()];
    apply_t_w_into(re, table, k, &u, &mut out, 0.0, &mut Workspace::default());
    Ok(out)
}

/// T_W u = Π_N(W u) on the reference element.
pub fn apply_t_w(re: &ReferenceElement, table: &WeightTable, k: usize, u: &[f64]) -> Result<Vec<f64>> {
    table.check(re, k, u.len())?;
    let mut out = vec![0.0; u.len()];
    apply_t_w_into(re, table, k, u, &mut out, 0.0, &mut Workspace::default());
    Ok(out)
}

/// T_W⁻¹ u, defined by (W T_W⁻¹ u, δu) = (u, δu), via a dense solve.
pub fn apply_t_w_inverse(re: &ReferenceElement, table: &WeightTable, k: usize, u: &[f64]) -> Result<Vec<f64>> {
    table.check(re, k, u.len())?;
    let mw = verification::weighted_mass_matrix(re, table, k, 1.0)?;
    let rhs = verification::block_mass(re, table.m, 1.0) * DVector::from_column_slice(u);
    let chol = mw
        .cholesky()
        .ok_or_else(|| Error::IndefiniteHessian("weighted mass matrix".into()))?;
    Ok(chol.solve(&rhs).as_slice().to_vec())
}

/// Dense assemblies used as oracles.
pub mod verification {
    use super::*;

    /// M_W with blocks (M_W)_{ab} = V_qᵀ diag(J ŵ W_ab(x_q)) V_q.
    pub fn weighted_mass_matrix(re: &ReferenceElement, table: &WeightTable, k: usize, j: f64) -> Result<DMatrix<f64>> {
        table.check(re, k, table.m * re.np)?;
        let (m, np, nq) = (table.m, re.np, re.nq());
        let mut out = DMatrix::zeros(m * np, m * np);
        for a in 0..m {
            for b in 0..m {
                let mut scaled = re.vq.clone();
                for q in 0..nq {
                    let s = j * re.quad.weights[q] * table.at(k, q)[a * m + b];
                    scaled.row_mut(q).scale_mut(s);
                }
                let blk = re.vq.transpose() * scaled;
                out.view_mut((a * np, b * np), (np, np)).copy_from(&blk);
            }
        }
        Ok(out)
    }

    /// I ⊗ (J M̂).
    pub fn block_mass(re: &ReferenceElement, m: usize, j: f64) -> DMatrix<f64> {
        let np = re.np;
        let mut out = DMatrix::zeros(m * np, m * np);
        for a in 0..m {
            out.view_mut((a * np, a * np), (np, np)).copy_from(&(&re.mass * j));
        }
        out
    }

    /// Exact M_W⁻¹ r, for comparison against the weight-adjusted inverse of
    /// the table holding W⁻¹.
    pub fn dense_inverse_apply(
        re: &ReferenceElement,
        weight: &WeightTable,
        k: usize,
        j: f64,
        r: &[f64],
    ) -> Result<Vec<f64>> {
        let mw = weighted_mass_matrix(re, weight, k, j)?;
        let chol = mw
            .cholesky()
            .ok_or_else(|| Error::IndefiniteHessian("weighted mass matrix".into()))?;
        Ok(chol.solve(&DVector::from_column_slice(r)).as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        let b = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let w = &b * b.transpose() + DMatrix::identity(m, m) * 0.5;
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for jj in 0..m {
                out.push(w[(i, jj)]);
            }
        }
        out
    }

    fn random_field(re: &ReferenceElement, rng: &mut ChaCha8Rng, m: usize) -> WeightTable {
        let vals: Vec<f64> = (0..re.nq()).flat_map(|_| random_spd(rng, m)).collect();
        WeightTable::new(m, re.nq(), vec![ElementWeight::Varying(vals)]).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        d / n
    }

    fn identity(m: usize) -> Vec<f64> {
        let mut w = vec![0.0; m * m];
        for a in 0..m {
            w[a * m + a] = 1.0;
        }
        w
    }

    #[test]
    fn identity_weight_is_block_mass() {
        let re = ReferenceElement::build(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = WeightTable::uniform(3, re.nq(), 1, &identity(3)).unwrap();
        let u = random_vec(&mut rng, 3 * re.np);
        let got = apply_weighted_mass(&re, &t, 0, 0.7, &u).unwrap();
        let want = verification::block_mass(&re, 3, 0.7) * DVector::from_column_slice(&u);
        assert!(rel(&got, want.as_slice()) < 1e-13);
    }

    #[test]
    fn scalar_weight_scales_mass() {
        let re = ReferenceElement::build(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = WeightTable::uniform(1, re.nq(), 1, &[2.5]).unwrap();
        let u = random_vec(&mut rng, re.np);
        let got = apply_weighted_mass(&re, &t, 0, 0.3, &u).unwrap();
        let want = &re.mass * DVector::from_column_slice(&u) * (2.5 * 0.3);
        assert!(rel(&got, want.as_slice()) < 1e-13);
    }

    #[test]
    fn weighted_mass_matches_dense_assembly() {
        for (dim, n) in [(2, 4), (3, 2)] {
            let re = ReferenceElement::build(dim, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let t = random_field(&re, &mut rng, 4);
            let u = random_vec(&mut rng, 4 * re.np);
            let got = apply_weighted_mass(&re, &t, 0, 1.3, &u).unwrap();
            let dense = verification::weighted_mass_matrix(&re, &t, 0, 1.3).unwrap() * DVector::from_column_slice(&u);
            assert!(rel(&got, dense.as_slice()) < 1e-12);
        }
    }

    #[test]
    fn constant_weight_collapses_to_kronecker_inverse() {
        let re = ReferenceElement::build(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_spd(&mut rng, 5);
        let t = WeightTable::uniform(5, re.nq(), 1, &w).unwrap();
        let r = random_vec(&mut rng, 5 * re.np);
        let j = 0.04;
        let got = apply_wadg_inverse(&re, &t, 0, j, &r).unwrap();
        let wm = DMatrix::from_row_slice(5, 5, &w);
        let kron = wm.kronecker(&(&re.mass_inv / j));
        let want = kron * DVector::from_column_slice(&r);
        assert!(rel(&got, want.as_slice()) < 1e-12);
    }

    #[test]
    fn unit_scalar_weight_is_mass_inverse() {
        let re = ReferenceElement::build(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = WeightTable::uniform(1, re.nq(), 1, &[1.0]).unwrap();
        let r = random_vec(&mut rng, re.np);
        let got = apply_wadg_inverse(&re, &t, 0, 2.0, &r).unwrap();
        let want = &re.mass_inv * DVector::from_column_slice(&r) / 2.0;
        assert!(rel(&got, want.as_slice()) < 1e-12);
    }

    #[test]
    fn t_w_inverse_undoes_t_w() {
        let re = ReferenceElement::build(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_field(&re, &mut rng, 3);
        for _ in 0..20 {
            let u = random_vec(&mut rng, 3 * re.np);
            let back = apply_t_w_inverse(&re, &t, 0, &apply_t_w(&re, &t, 0, &u).unwrap()).unwrap();
            assert!(rel(&back, &u) < 1e-11);
        }
        let id = WeightTable::uniform(3, re.nq(), 1, &identity(3)).unwrap();
        let u = random_vec(&mut rng, 3 * re.np);
        assert!(rel(&apply_t_w(&re, &id, 0, &u).unwrap(), &u) < 1e-13);
    }

    #[test]
    fn t_w_inverse_norm_bounded() {
        let re = ReferenceElement::build(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_field(&re, &mut rng, 2);
        let (_, wmax) = t.inverse_bounds();
        // Power iteration in the L² (mass) inner product.
        let mb = verification::block_mass(&re, 2, 1.0);
        let nrm = |x: &[f64]| {
            let v = DVector::from_column_slice(x);
            (v.dot(&(&mb * &v))).sqrt()
        };
        let mut u = random_vec(&mut rng, 2 * re.np);
        let mut est = 0.0;
        for _ in 0..300 {
            let w = apply_t_w_inverse(&re, &t, 0, &u).unwrap();
            est = nrm(&w) / nrm(&u);
            let s = nrm(&w);
            u = w.iter().map(|x| x / s).collect();
        }
        assert!(est <= wmax + 1e-8, "{est} > {wmax}");
    }

    #[test]
    fn storage_is_quadrature_sized() {
        let re = ReferenceElement::build(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = random_field(&re, &mut rng, 7);
        assert_eq!(t.storage_len(0), re.nq() * 49);
        assert!(t.storage_len(0) < (7 * re.np) * (7 * re.np));
    }

    #[test]
    fn missing_element_is_config_error() {
        let re = ReferenceElement::build(2, 1).unwrap();
        let t = WeightTable::uniform(1, re.nq(), 1, &[1.0]).unwrap();
        assert!(matches!(apply_wadg_inverse(&re, &t, 3, 1.0, &[0.0; 3]), Err(Error::Config(_))));
        assert!(matches!(apply_t_w(&re, &t, 0, &[0.0; 4]), Err(Error::Shape { .. })));
        assert!(WeightTable::uniform(1, re.nq(), 1, &[-1.0]).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn t_w_inverse_form_is_inner_product(seed in 0u64..10_000) {
            let re = ReferenceElement::build(2, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_field(&re, &mut rng, 3);
            let mb = verification::block_mass(&re, 3, 1.0);
            let u = random_vec(&mut rng, 3 * re.np);
            let v = random_vec(&mut rng, 3 * re.np);
            let form = |a: &[f64], b: &[f64]| {
                let ta = DVector::from_column_slice(&apply_t_w_inverse(&re, &t, 0, a).unwrap());
                ta.dot(&(&mb * DVector::from_column_slice(b)))
            };
            let (uv, vu) = (form(&u, &v), form(&v, &u));
            proptest::prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(vu.abs()).max(1.0));
            let uu = form(&u, &u);
            let l2 = DVector::from_column_slice(&u).dot(&(&mb * DVector::from_column_slice(&u)));
            let (lo, hi) = t.inverse_bounds();
            proptest::prop_assert!(uu > 0.0);
            proptest::prop_assert!(uu / l2 >= lo * (1.0 - 1e-12) && uu / l2 <= hi * (1.0 + 1e-12));
        }
    }
}
