//! Right-hand side: volume couplings, penalty fluxes, lift, sources and the
//! weight-adjusted inverse.

use rayon::prelude::*;

use super::{ExactFn, Layout, Signature, Solver, SolverConfig, State, NFIELDS};
use crate::error::{Error, Result};
use crate::material::system::A_ENTRIES;
use crate::mesh::{BoundaryTag, Mesh, Neighbor};
use crate::refelem::ReferenceElement;
use crate::wadg::{apply_t_w_into, gemm_into, Workspace};

#[derive(Debug, Clone, Copy)]
pub struct RhsOptions {
    /// Include the Q_v⁻¹D term.
    pub dissipation: bool,
    pub sources: bool,
    /// Use the exact solution as exterior data; when off, exact-solution
    /// faces see a zero exterior state.
    pub boundary_data: bool,
}

impl Default for RhsOptions {
    fn default() -> Self {
        Self {
            dissipation: true,
            sources: true,
            boundary_data: true,
        }
    }
}

/// Coupling A_i entry between local stress field `s` and local velocity
/// field `v` (offset by the stress count).
#[derive(Debug, Clone, Copy)]
struct Term {
    dir: usize,
    s: usize,
    v: usize,
    val: f64,
}

struct LocatedSource {
    elem: usize,
    /// (1/J) M̂⁻¹ φ(x₀).
    phi: Vec<f64>,
    beta: Vec<(usize, f64)>,
    signature: Signature,
}

pub(super) struct Discretization {
    nfaces: usize,
    nfq: usize,
    terms: Vec<Term>,
    /// Physical face quadrature points, `[elem][face][q]`.
    face_x: Vec<[f64; 3]>,
    /// Matching quadrature point on the neighbor face.
    perm: Vec<usize>,
    sources: Vec<LocatedSource>,
    exact: Option<ExactFn>,
}

impl Discretization {
    pub(super) fn new(mesh: &Mesh, re: &ReferenceElement, layout: &Layout, config: &SolverConfig) -> Result<Self> {
        let (dim, nfaces, nfq) = (mesh.dim, re.nfaces, re.nfq());
        let ns = layout.ns();
        let mut terms = Vec::new();
        for (dir, entries) in A_ENTRIES.iter().enumerate().take(dim) {
            for &(r, c, val) in entries {
                let s = layout.stress.iter().position(|&x| x == r);
                let v = layout.vel.iter().position(|&x| x == c);
                match (s, v) {
                    (Some(s), Some(v)) => terms.push(Term { dir, s, v: ns + v, val }),
                    (None, None) => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "run mode drops one side of the coupling (stress {r}, velocity {c})"
                        )))
                    }
                }
            }
        }

        let mut face_x = Vec::with_capacity(mesh.num_elements() * nfaces * nfq);
        for k in 0..mesh.num_elements() {
            for f in 0..nfaces {
                let verts = mesh.face_vertex_coords(k, f);
                for q in 0..nfq {
                    let mut x = [0.0; 3];
                    for (a, p) in verts.iter().enumerate() {
                        let mu = re.face_mu[q * dim + a];
                        for d in 0..3 {
                            x[d] += mu * p[d];
                        }
                    }
                    face_x.push(x);
                }
            }
        }

        let tol = 1e-8 * mesh.h;
        let mut perm = vec![usize::MAX; face_x.len()];
        let mut has_exact = false;
        for k in 0..mesh.num_elements() {
            for f in 0..nfaces {
                match &mesh.faces[k][f].neighbor {
                    Neighbor::Interior { elem, face, shift } => {
                        let base = (k * nfaces + f) * nfq;
                        let nb = (elem * nfaces + face) * nfq;
                        for q in 0..nfq {
                            let x = face_x[base + q];
                            let y = [x[0] + shift[0], x[1] + shift[1], x[2] + shift[2]];
                            let hit = (0..nfq).find(|&p| {
                                let z = face_x[nb + p];
                                (0..3).all(|d| (z[d] - y[d]).abs() <= tol)
                            });
                            perm[base + q] = hit.ok_or_else(|| Error::Topology {
                                msg: format!("face quadrature points of face {f} do not match the neighbor"),
                                elements: vec![k, *elem],
                            })?;
                        }
                    }
                    Neighbor::Boundary(BoundaryTag::ExactSolution) => has_exact = true,
                    Neighbor::Boundary(_) => {}
                }
            }
        }
        if has_exact && config.exact.is_none() {
            return Err(Error::Setup("exact-solution boundary faces need exterior data".into()));
        }

        let mut sources = Vec::with_capacity(config.sources.len());
        for src in &config.sources {
            let (elem, r) = mesh
                .locate(&src.x0)
                .ok_or_else(|| Error::Setup(format!("point source at {:?} lies outside the mesh", src.x0)))?;
            let phi_row = re.interp_matrix(&r[..dim]);
            let j = mesh.geom[elem].j;
            let phi: Vec<f64> = (&re.mass_inv * phi_row.transpose() / j).as_slice().to_vec();
            let mut beta = Vec::new();
            for (g, &b) in src.beta.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let a = layout
                    .local_of(g)
                    .ok_or_else(|| Error::Setup(format!("source drives inactive component {g}")))?;
                beta.push((a, b));
            }
            sources.push(LocatedSource {
                elem,
                phi,
                beta,
                signature: src.signature.clone(),
            });
        }
        Ok(Self {
            nfaces,
            nfq,
            terms,
            face_x,
            perm,
            sources,
            exact: config.exact.clone(),
        })
    }
}

impl Solver {
    /// Reference derivatives, face traces and lifting run as single products
    /// over all elements: with the `[elem][field][node]` layout the state is
    /// one column-major `np × (nf·K)` matrix. Element-local work in between
    /// runs in parallel.
    pub fn rhs_with(&self, u: &[f64], t: f64, opts: RhsOptions, out: &mut [f64]) -> Result<()> {
        let re = &self.re;
        let mesh = &self.mesh;
        let d = &self.disc;
        let (np, nf, ns) = (re.np, self.layout.nfields(), self.layout.ns());
        let (nfaces, nfq, dim) = (d.nfaces, d.nfq, mesh.dim);
        let blk = np * nf;
        let nk = mesh.num_elements();
        let cols = nf * nk;
        if u.len() != nk * blk || out.len() != nk * blk {
            return Err(Error::Shape {
                what: "state vector",
                expected: nk * blk,
                got: u.len().min(out.len()),
            });
        }

        let mut dr = vec![0.0; dim * u.len()];
        for (r, chunk) in dr.chunks_exact_mut(u.len()).enumerate() {
            gemm_into(chunk, &re.diff[r], u, cols, 0.0);
        }
        // Traces at face quadrature points, one `nfq × (nf·K)` block per face.
        let tlen = nfq * cols;
        let tblk = nfq * nf;
        let mut traces = vec![0.0; nfaces * tlen];
        for (f, chunk) in traces.chunks_exact_mut(tlen).enumerate() {
            gemm_into(chunk, &re.vf[f], u, cols, 0.0);
        }

        let (at, av) = (self.config.alpha_tau, self.config.alpha_v);
        let exact = if opts.boundary_data { d.exact.as_ref() } else { None };

        // Volume terms into `out`, scaled face fluxes into `flux`.
        let mut flux = vec![0.0; nfaces * tlen];
        {
            let mut fl: Vec<Vec<&mut [f64]>> = (0..nk).map(|_| Vec::with_capacity(nfaces)).collect();
            for chunk in flux.chunks_exact_mut(tlen) {
                for (k, c) in chunk.chunks_exact_mut(tblk).enumerate() {
                    fl[k].push(c);
                }
            }
            out.par_chunks_mut(blk).zip(fl.into_par_iter()).enumerate().for_each_init(
                || (vec![0.0; tblk], vec![0.0; blk]),
                |(ext, dx), (k, (ok, mut fk))| {
                    let g = &mesh.geom[k];
                    ok.iter_mut().for_each(|x| *x = 0.0);
                    // Volume: Q_s τ_t ⊃ A_i ∂_i v and Q_v v_t ⊃ A_iᵀ ∂_i τ.
                    for i in 0..dim {
                        dx.iter_mut().for_each(|x| *x = 0.0);
                        for r in 0..dim {
                            let c = g.rx[r][i];
                            if c != 0.0 {
                                let src = &dr[r * u.len() + k * blk..r * u.len() + (k + 1) * blk];
                                for (o, s) in dx.iter_mut().zip(src) {
                                    *o += c * s;
                                }
                            }
                        }
                        for tm in d.terms.iter().filter(|tm| tm.dir == i) {
                            let (sv, ss) = (tm.v * np, tm.s * np);
                            for j in 0..np {
                                ok[ss + j] += tm.val * dx[sv + j];
                                ok[sv + j] += tm.val * dx[ss + j];
                            }
                        }
                    }

                    // Surface penalty fluxes.
                    for (f, fq) in fk.iter_mut().enumerate() {
                        let fg = &mesh.faces[k][f];
                        let n = fg.normal;
                        let base = (k * nfaces + f) * nfq;
                        let inner = &traces[f * tlen + k * tblk..f * tlen + (k + 1) * tblk];
                        match &fg.neighbor {
                            Neighbor::Interior { elem, face, .. } => {
                                let nb = &traces[face * tlen + elem * tblk..face * tlen + (elem + 1) * tblk];
                                for q in 0..nfq {
                                    let p = d.perm[base + q];
                                    for a in 0..nf {
                                        ext[a * nfq + q] = nb[a * nfq + p];
                                    }
                                }
                            }
                            Neighbor::Boundary(BoundaryTag::FreeSurface) => {
                                for a in 0..nf {
                                    let s = if a < ns { -1.0 } else { 1.0 };
                                    for q in 0..nfq {
                                        ext[a * nfq + q] = s * inner[a * nfq + q];
                                    }
                                }
                            }
                            Neighbor::Boundary(BoundaryTag::Absorbing) => ext.iter_mut().for_each(|x| *x = 0.0),
                            Neighbor::Boundary(BoundaryTag::ExactSolution) => match exact {
                                Some(ex) => {
                                    for q in 0..nfq {
                                        let v: [f64; NFIELDS] = ex(&d.face_x[base + q], t);
                                        for a in 0..nf {
                                            ext[a * nfq + q] = v[self.layout.global_of(a)];
                                        }
                                    }
                                }
                                None => ext.iter_mut().for_each(|x| *x = 0.0),
                            },
                        }
                        let scale = fg.sj / g.j;
                        for q in 0..nfq {
                            let mut vn = [0.0; 7];
                            let mut tn = [0.0; 13];
                            for tm in &d.terms {
                                let c = tm.val * n[tm.dir];
                                let jv = ext[tm.v * nfq + q] - inner[tm.v * nfq + q];
                                let js = ext[tm.s * nfq + q] - inner[tm.s * nfq + q];
                                vn[tm.s] += c * jv;
                                tn[tm.v] += c * js;
                            }
                            for a in 0..nf {
                                fq[a * nfq + q] = 0.0;
                            }
                            for tm in &d.terms {
                                let c = tm.val * n[tm.dir];
                                fq[tm.s * nfq + q] += 0.5 * at * c * tn[tm.v];
                                fq[tm.v * nfq + q] += 0.5 * av * c * vn[tm.s];
                            }
                            for a in 0..ns {
                                fq[a * nfq + q] = scale * (fq[a * nfq + q] + 0.5 * vn[a]);
                            }
                            for a in ns..nf {
                                fq[a * nfq + q] = scale * (fq[a * nfq + q] + 0.5 * tn[a]);
                            }
                        }
                    }
                },
            );
        }
        for (f, chunk) in flux.chunks_exact(tlen).enumerate() {
            gemm_into(out, &re.lift_q[f], chunk, cols, 1.0);
        }

        let qvd = if opts.dissipation { self.coeffs.qv_inv_d.as_ref() } else { None };
        out.par_chunks_mut(blk).enumerate().for_each_init(
            || (vec![0.0; blk], Workspace::default()),
            |(r, ws), (k, ok)| {
                r.copy_from_slice(ok);
                if opts.sources {
                    for src in d.sources.iter().filter(|s| s.elem == k) {
                        let amp = src.signature.eval(t);
                        for &(a, b) in &src.beta {
                            for (x, p) in r[a * np..(a + 1) * np].iter_mut().zip(&src.phi) {
                                *x += b * amp * p;
                            }
                        }
                    }
                }
                let uk = &u[k * blk..(k + 1) * blk];
                let (os, ov) = ok.split_at_mut(ns * np);
                apply_t_w_into(re, &self.coeffs.qs_inv, k, &r[..ns * np], os, 0.0, ws);
                apply_t_w_into(re, &self.coeffs.qv_inv, k, &r[ns * np..], ov, 0.0, ws);
                if let Some(tab) = qvd {
                    apply_t_w_into(re, tab, k, &uk[ns * np..], ov, 1.0, ws);
                }
            },
        );
        Ok(())
    }
}

pub(super) fn energy(solver: &Solver, state: &State) -> f64 {
    let re = &solver.re;
    let (np, nf, ns, nq) = (re.np, solver.layout.nfields(), solver.layout.ns(), re.nq());
    let nv = nf - ns;
    let blk = np * nf;
    // Collected before summing so the result does not depend on scheduling.
    let per: Vec<f64> = (0..solver.mesh.num_elements())
        .into_par_iter()
        .map(|k| {
            let mut uq = vec![0.0; nq * nf];
            gemm_into(&mut uq, &re.vq, &state.data[k * blk..(k + 1) * blk], nf, 0.0);
            let mut e = 0.0;
            for q in 0..nq {
                let qs = solver.coeffs.qs.at(k, q);
                let qv = solver.coeffs.qv.at(k, q);
                let mut s = 0.0;
                for a in 0..ns {
                    for b in 0..ns {
                        s += uq[a * nq + q] * qs[a * ns + b] * uq[b * nq + q];
                    }
                }
                for a in 0..nv {
                    for b in 0..nv {
                        s += uq[(ns + a) * nq + q] * qv[a * nv + b] * uq[(ns + b) * nq + q];
                    }
                }
                e += re.quad.weights[q] * s;
            }
            0.5 * solver.mesh.geom[k].j * e
        })
        .collect();
    per.iter().sum()
}
