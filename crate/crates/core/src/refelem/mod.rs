//! Reference-simplex operators for a degree-N nodal DG discretization.

pub mod basis;
pub mod nodes;
pub mod quadrature;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
pub use quadrature::Quadrature;

pub const MAX_DEGREE: usize = 8;

/// Reference vertices of the bi-unit triangle and tetrahedron.
pub const TRI_VERTICES: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];
pub const TET_VERTICES: [[f64; 3]; 4] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Local vertex indices of each face.
pub const TRI_FACES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];
pub const TET_FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]];

pub fn face_vertices(dim: usize, face: usize) -> &'static [usize] {
    if dim == 2 {
        &TRI_FACES[face]
    } else {
        &TET_FACES[face]
    }
}

pub fn num_basis(dim: usize, n: usize) -> usize {
    if dim == 2 {
        (n + 1) * (n + 2) / 2
    } else {
        (n + 1) * (n + 2) * (n + 3) / 6
    }
}

/// Measure of the bi-unit reference simplex.
pub fn reference_measure(dim: usize) -> f64 {
    if dim == 2 {
        2.0
    } else {
        4.0 / 3.0
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub dim: usize,
    pub n: usize,
    pub np: usize,
    pub nfaces: usize,
    /// Interpolation nodes, row-major `np × dim`.
    pub nodes: Vec<f64>,
    /// Orthonormal modal basis at the nodes.
    pub v: DMatrix<f64>,
    pub v_inv: DMatrix<f64>,
    modal_scale: Vec<f64>,
    pub quad: Quadrature,
    /// Nodal basis at volume quadrature points (`nq × np`).
    pub vq: DMatrix<f64>,
    /// Quadrature L² projection onto nodal coefficients (`np × nq`).
    pub pq: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub mass_inv: DMatrix<f64>,
    /// Nodal differentiation matrices D_k.
    pub diff: Vec<DMatrix<f64>>,
    /// Weak derivative matrices Ŝ_k = M̂ D_k.
    pub stiff: Vec<DMatrix<f64>>,
    /// Face rule on the face parameter domain (measure 2 in both dimensions).
    pub face_quad: Quadrature,
    /// Barycentric weights of face quadrature points relative to the face
    /// vertices (`nfq × dim`), identical for every face.
    pub face_mu: Vec<f64>,
    /// Face quadrature points in volume reference coordinates, per face.
    pub face_points: Vec<Vec<f64>>,
    /// Nodal basis at face quadrature points (`nfq × np`), per face.
    pub vf: Vec<DMatrix<f64>>,
    /// Face mass matrices M̂_f (`np × np`).
    pub mass_face: Vec<DMatrix<f64>>,
    /// Lift from face quadrature values, M̂⁻¹ V_fᵀ diag(ŵ_f) (`np × nfq`).
    pub lift_q: Vec<DMatrix<f64>>,
}

impl ReferenceElement {
    pub fn build(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!("unsupported dimension {dim}")));
        }
        if !(1..=MAX_DEGREE).contains(&n) {
            return Err(Error::Config(format!(
                "unsupported degree {n} (supported 1..={MAX_DEGREE})"
            )));
        }
        let np = num_basis(dim, n);
        let nodes = nodes::simplex_nodes(dim, n);
        let exact_degree = 2 * n + 1;
        let quad = quadrature::simplex_rule(dim, exact_degree);
        quadrature::validate(&quad, exact_degree, "volume")?;
        let face_quad = quadrature::face_rule(dim, exact_degree);
        if dim == 3 {
            quadrature::validate(&face_quad, exact_degree, "face")?;
        }

        let nq = quad.len();
        let mut raw = DMatrix::<f64>::zeros(nq, np);
        for q in 0..nq {
            for (j, b) in basis::simplex_basis(dim, n, quad.point(q)).iter().enumerate() {
                raw[(q, j)] = b.v;
            }
        }
        let modal_scale: Vec<f64> = (0..np)
            .map(|j| {
                let nrm: f64 = (0..nq).map(|q| quad.weights[q] * raw[(q, j)].powi(2)).sum();
                1.0 / nrm.sqrt()
            })
            .collect();

        let mut el = ReferenceElement {
            dim,
            n,
            np,
            nfaces: dim + 1,
            nodes,
            v: DMatrix::zeros(0, 0),
            v_inv: DMatrix::zeros(0, 0),
            modal_scale,
            quad,
            vq: DMatrix::zeros(0, 0),
            pq: DMatrix::zeros(0, 0),
            mass: DMatrix::zeros(0, 0),
            mass_inv: DMatrix::zeros(0, 0),
            diff: Vec::new(),
            stiff: Vec::new(),
            face_quad,
            face_mu: Vec::new(),
            face_points: Vec::new(),
            vf: Vec::new(),
            mass_face: Vec::new(),
            lift_q: Vec::new(),
        };

        let (v, grads) = el.modal_at(&el.nodes.clone());
        let v_inv = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("singular nodal Vandermonde".into()))?;
        el.diff = grads.iter().map(|g| g * &v_inv).collect();
        el.v = v;
        el.v_inv = v_inv;
        el.vq = el.interp_matrix(&el.quad.points.clone());
        let wq = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&el.quad.weights));
        el.mass = el.vq.transpose() * &wq * &el.vq;
        el.mass_inv = &el.v * el.v.transpose();
        el.pq = &el.mass_inv * el.vq.transpose() * &wq;
        el.stiff = el.diff.iter().map(|d| &el.mass * d).collect();

        // Faces.
        let nfq = el.face_quad.len();
        let mut mu = Vec::with_capacity(nfq * dim);
        for q in 0..nfq {
            let p = el.face_quad.point(q);
            if dim == 2 {
                mu.extend_from_slice(&[(1.0 - p[0]) / 2.0, (1.0 + p[0]) / 2.0]);
            } else {
                mu.extend_from_slice(&[-(p[0] + p[1]) / 2.0, (1.0 + p[0]) / 2.0, (1.0 + p[1]) / 2.0]);
            }
        }
        let wf = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&el.face_quad.weights));
        for f in 0..el.nfaces {
            let fv = face_vertices(dim, f);
            let mut pts = Vec::with_capacity(nfq * dim);
            for q in 0..nfq {
                for d in 0..dim {
                    let mut x = 0.0;
                    for (a, &vi) in fv.iter().enumerate() {
                        let vx = if dim == 2 { TRI_VERTICES[vi][d] } else { TET_VERTICES[vi][d] };
                        x += mu[q * dim + a] * vx;
                    }
                    pts.push(x);
                }
            }
            let vf = el.interp_matrix(&pts);
            el.mass_face.push(vf.transpose() * &wf * &vf);
            el.lift_q.push(&el.mass_inv * vf.transpose() * &wf);
            el.vf.push(vf);
            el.face_points.push(pts);
        }
        el.face_mu = mu;
        Ok(el)
    }

    pub fn nq(&self) -> usize {
        self.quad.len()
    }

    pub fn nfq(&self) -> usize {
        self.face_quad.len()
    }

    /// Orthonormal modal basis and reference gradients at the given points.
    pub fn modal_at(&self, pts: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let m = pts.len() / self.dim;
        let mut v = DMatrix::<f64>::zeros(m, self.np);
        let mut g = vec![DMatrix::<f64>::zeros(m, self.np); self.dim];
        for i in 0..m {
            let x = &pts[i * self.dim..(i + 1) * self.dim];
            for (j, b) in basis::simplex_basis(self.dim, self.n, x).iter().enumerate() {
                let s = self.modal_scale[j];
                v[(i, j)] = s * b.v;
                for (k, gk) in g.iter_mut().enumerate() {
                    gk[(i, j)] = s * b.g[k];
                }
            }
        }
        (v, g)
    }

    /// Nodal interpolation matrix to arbitrary reference points.
    pub fn interp_matrix(&self, pts: &[f64]) -> DMatrix<f64> {
        self.modal_at(pts).0 * &self.v_inv
    }

    /// Lift matrix L̂_f = M̂⁻¹ M̂_f.
    pub fn lift(&self, face: usize) -> DMatrix<f64> {
        &self.mass_inv * &self.mass_face[face]
    }

    /// P_q applied to samples at the volume quadrature points.
    pub fn quadrature_project(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.nq() {
            return Err(Error::Shape {
                what: "quadrature_project",
                expected: self.nq(),
                got: values.len(),
            });
        }
        let u = &self.pq * nalgebra::DVector::from_column_slice(values);
        Ok(u.as_slice().to_vec())
    }

    /// 2-norm condition number of the mass matrix.
    pub fn mass_condition(&self) -> f64 {
        let ev = self.mass.clone().symmetric_eigenvalues();
        ev.max() / ev.min()
    }

    /// 2-norm condition number of the nodal Vandermonde matrix.
    pub fn vandermonde_condition(&self) -> f64 {
        let sv = self.v.clone().singular_values();
        sv.max() / sv.min()
    }

    /// Write the main reference matrices as CSV files for inspection.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut mats: Vec<(String, &DMatrix<f64>)> = vec![
            ("mass".into(), &self.mass),
            ("vq".into(), &self.vq),
            ("pq".into(), &self.pq),
        ];
        for (k, d) in self.diff.iter().enumerate() {
            mats.push((format!("diff{k}"), d));
        }
        for (f, l) in self.lift_q.iter().enumerate() {
            mats.push((format!("lift{f}"), l));
        }
        let nodes = DMatrix::from_row_slice(self.np, self.dim, &self.nodes);
        mats.push(("nodes".into(), &nodes));
        for (name, m) in mats {
            let mut s = String::new();
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
            let path = dir.join(format!("{name}.csv"));
            std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial(p: &[f64], e: &[usize]) -> f64 {
        p.iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product()
    }

    fn d_monomial(p: &[f64], e: &[usize], k: usize) -> f64 {
        if e[k] == 0 {
            return 0.0;
        }
        let mut e2 = e.to_vec();
        e2[k] -= 1;
        e[k] as f64 * monomial(p, &e2)
    }

    fn exps(dim: usize, n: usize) -> Vec<Vec<usize>> {
        if dim == 2 {
            basis::triangle_indices(n).into_iter().map(|a| a.to_vec()).collect()
        } else {
            basis::tet_indices(n).into_iter().map(|a| a.to_vec()).collect()
        }
    }

    #[test]
    fn basis_counts() {
        assert_eq!(ReferenceElement::build(2, 1).unwrap().np, 3);
        assert_eq!(ReferenceElement::build(2, 3).unwrap().np, 10);
        assert_eq!(ReferenceElement::build(3, 2).unwrap().np, 10);
        assert!(ReferenceElement::build(2, 0).is_err());
        assert!(ReferenceElement::build(2, 9).is_err());
        assert!(ReferenceElement::build(4, 2).is_err());
    }

    #[test]
    fn mass_and_weights() {
        for (dim, n) in [(2, 1), (2, 4), (2, 8), (3, 1), (3, 3)] {
            let el = ReferenceElement::build(dim, n).unwrap();
            let w: f64 = el.quad.weights.iter().sum();
            assert!((w - reference_measure(dim)).abs() < 1e-13);
            let diff = (&el.mass - el.mass.transpose()).amax();
            assert!(diff < 1e-14);
            let inv = (&el.mass * &el.mass_inv - DMatrix::identity(el.np, el.np)).amax();
            assert!(inv < 1e-11, "{dim} {n} {inv}");
            assert!(el.mass_condition().is_finite());
            assert!(el.vandermonde_condition() < 1e3, "{dim} {n} {}", el.vandermonde_condition());
        }
    }

    #[test]
    fn derivative_exactness() {
        for (dim, n) in [(2, 1), (2, 3), (2, 6), (3, 2), (3, 4)] {
            let el = ReferenceElement::build(dim, n).unwrap();
            for e in exps(dim, n) {
                let u: Vec<f64> = el.nodes.chunks(dim).map(|p| monomial(p, &e)).collect();
                let u = nalgebra::DVector::from_vec(u);
                for k in 0..dim {
                    let du = &el.diff[k] * &u;
                    for (i, p) in el.nodes.chunks(dim).enumerate() {
                        assert!((du[i] - d_monomial(p, &e, k)).abs() < 1e-11);
                    }
                }
            }
            // D_r of r is one.
            let r = nalgebra::DVector::from_iterator(el.np, el.nodes.chunks(dim).map(|p| p[0]));
            let d = &el.diff[0] * r;
            assert!(d.iter().all(|x| (x - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn lift_consistency() {
        for (dim, n) in [(2, 3), (3, 2)] {
            let el = ReferenceElement::build(dim, n).unwrap();
            for f in 0..el.nfaces {
                let err = (&el.mass * el.lift(f) - &el.mass_face[f]).amax();
                assert!(err < 1e-13 * el.mass_face[f].amax().max(1.0));
            }
        }
    }

    #[test]
    fn mass_matches_quadrature_form() {
        let el = ReferenceElement::build(2, 5).unwrap();
        let inv = el.mass_inv.clone().try_inverse().unwrap();
        assert!((inv - &el.mass).amax() < 1e-12);
    }

    #[test]
    fn projection_reproduces_polynomials() {
        for (dim, n) in [(2, 3), (3, 2)] {
            let el = ReferenceElement::build(dim, n).unwrap();
            let ones = el.quadrature_project(&vec![1.0; el.nq()]).unwrap();
            assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-12));
            for e in exps(dim, n) {
                let vals: Vec<f64> = (0..el.nq()).map(|q| monomial(el.quad.point(q), &e)).collect();
                let c = el.quadrature_project(&vals).unwrap();
                for (i, p) in el.nodes.chunks(dim).enumerate() {
                    assert!((c[i] - monomial(p, &e)).abs() < 1e-12);
                }
            }
            assert!(el.quadrature_project(&[1.0]).is_err());
        }
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let el = ReferenceElement::build(2, 4).unwrap();
        let vals: Vec<f64> = (0..el.nq()).map(|q| el.quad.point(q)[0].cos()).collect();
        let c = el.quadrature_project(&vals).unwrap();
        let fit = &el.vq * nalgebra::DVector::from_vec(c);
        for j in 0..el.np {
            let ip: f64 = (0..el.nq())
                .map(|q| el.quad.weights[q] * (vals[q] - fit[q]) * el.vq[(q, j)])
                .sum();
            assert!(ip.abs() < 1e-14);
        }
    }

    #[test]
    fn face_points_lie_on_faces() {
        let el = ReferenceElement::build(3, 2).unwrap();
        let checks: [fn(&[f64]) -> f64; 4] = [
            |p| p[2] + 1.0,
            |p| p[1] + 1.0,
            |p| p[0] + p[1] + p[2] + 1.0,
            |p| p[0] + 1.0,
        ];
        for f in 0..4 {
            for p in el.face_points[f].chunks(3) {
                assert!(checks[f](p).abs() < 1e-14);
            }
        }
        let w: f64 = el.face_quad.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }
}
