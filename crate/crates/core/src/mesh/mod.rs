//! Affine simplicial meshes with geometric factors and face connectivity.

pub mod generate;
pub mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refelem::face_vertices;
pub use generate::{build_uniform, UniformGridSpec};
pub use io::{load_mesh, parse_mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    FreeSurface,
    Absorbing,
    ExactSolution,
}

impl BoundaryTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "free" => Some(Self::FreeSurface),
            "abc" => Some(Self::Absorbing),
            "exact" => Some(Self::ExactSolution),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Neighbor {
    /// Matching face of another element; `shift` maps points of this face to
    /// the neighbor's copy (nonzero only for periodic pairs).
    Interior { elem: usize, face: usize, shift: [f64; 3] },
    Boundary(BoundaryTag),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGeom {
    /// Unit outward normal.
    pub normal: [f64; 3],
    /// Ratio of physical face measure to the reference face parameter measure.
    pub sj: f64,
    pub neighbor: Neighbor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeom {
    /// Jacobian determinant of the affine reference-to-physical map.
    pub j: f64,
    /// jac[i][k] = ∂x_i/∂r_k.
    pub jac: [[f64; 3]; 3],
    /// rx[k][i] = ∂r_k/∂x_i.
    pub rx: [[f64; 3]; 3],
    pub origin: [f64; 3],
}

impl ElementGeom {
    pub fn to_physical(&self, r: &[f64]) -> [f64; 3] {
        let mut x = self.origin;
        for (i, xi) in x.iter_mut().enumerate() {
            for (k, rk) in r.iter().enumerate() {
                *xi += self.jac[i][k] * (rk + 1.0);
            }
        }
        x
    }

    pub fn to_reference(&self, x: &[f64; 3], dim: usize) -> [f64; 3] {
        let mut r = [0.0; 3];
        for k in 0..dim {
            r[k] = -1.0;
            for i in 0..dim {
                r[k] += self.rx[k][i] * (x[i] - self.origin[i]);
            }
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    /// Vertex coordinates; unused trailing components are zero.
    pub vertices: Vec<[f64; 3]>,
    pub elements: Vec<Vec<usize>>,
    pub geom: Vec<ElementGeom>,
    pub faces: Vec<Vec<FaceGeom>>,
    /// Characteristic element size.
    pub h: f64,
}

/// Axis-aligned periodic pairing: boundary faces on `lower[a]` are matched to
/// faces on `upper[a]` for every axis with `axes[a]` set.
#[derive(Debug, Clone, Copy)]
pub struct Periodicity {
    pub axes: [bool; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl Mesh {
    /// Build geometry and connectivity. Boundary faces get their tag from
    /// `tagger(face centroid, outward normal)`.
    pub fn new<F>(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        elements: Vec<Vec<usize>>,
        periodic: Option<Periodicity>,
        tagger: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64; 3], &[f64; 3]) -> BoundaryTag,
    {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!("mesh dimension {dim}")));
        }
        let mut geom = Vec::with_capacity(elements.len());
        for (k, ev) in elements.iter().enumerate() {
            if ev.len() != dim + 1 || ev.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Topology {
                    msg: "element has wrong vertex count or out-of-range vertex".into(),
                    elements: vec![k],
                });
            }
            geom.push(element_geometry(dim, &vertices, ev, k)?);
        }
        let mut mesh = Mesh {
            dim,
            vertices,
            elements,
            geom,
            faces: Vec::new(),
            h: 0.0,
        };
        mesh.h = mesh.max_edge();
        mesh.connect_faces(periodic, tagger)?;
        Ok(mesh)
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nfaces(&self) -> usize {
        self.dim + 1
    }

    pub fn face_vertex_coords(&self, k: usize, f: usize) -> Vec<[f64; 3]> {
        face_vertices(self.dim, f)
            .iter()
            .map(|&a| self.vertices[self.elements[k][a]])
            .collect()
    }

    pub fn face_centroid(&self, k: usize, f: usize) -> [f64; 3] {
        let pts = self.face_vertex_coords(k, f);
        let mut c = [0.0; 3];
        for p in &pts {
            for d in 0..3 {
                c[d] += p[d] / pts.len() as f64;
            }
        }
        c
    }

    pub fn centroid(&self, k: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        for &v in &self.elements[k] {
            for d in 0..3 {
                c[d] += self.vertices[v][d] / (self.dim + 1) as f64;
            }
        }
        c
    }

    fn max_edge(&self) -> f64 {
        let mut h = 0.0_f64;
        for ev in &self.elements {
            for a in 0..ev.len() {
                for b in a + 1..ev.len() {
                    h = h.max(norm(&sub(&self.vertices[ev[a]], &self.vertices[ev[b]])));
                }
            }
        }
        h
    }

    /// Total measure Σ_k J_k |D̂|.
    pub fn volume(&self) -> f64 {
        self.geom.iter().map(|g| g.j).sum::<f64>() * crate::refelem::reference_measure(self.dim)
    }

    /// Pair faces by shared vertices (and by periodic translation), tag the rest.
    pub fn connect_faces<F>(&mut self, periodic: Option<Periodicity>, tagger: F) -> Result<()>
    where
        F: Fn(&[f64; 3], &[f64; 3]) -> BoundaryTag,
    {
        let nf = self.nfaces();
        let mut map: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (k, ev) in self.elements.iter().enumerate() {
            for f in 0..nf {
                let mut key: Vec<usize> = face_vertices(self.dim, f).iter().map(|&a| ev[a]).collect();
                key.sort_unstable();
                map.entry(key).or_default().push((k, f));
            }
        }
        let mut neighbor: Vec<Vec<Option<Neighbor>>> = vec![vec![None; nf]; self.elements.len()];
        let mut boundary = Vec::new();
        for (_, owners) in map {
            match owners.as_slice() {
                [(k, f)] => boundary.push((*k, *f)),
                [(k1, f1), (k2, f2)] => {
                    neighbor[*k1][*f1] = Some(Neighbor::Interior { elem: *k2, face: *f2, shift: [0.0; 3] });
                    neighbor[*k2][*f2] = Some(Neighbor::Interior { elem: *k1, face: *f1, shift: [0.0; 3] });
                }
                _ => {
                    return Err(Error::Topology {
                        msg: "face shared by more than two elements".into(),
                        elements: owners.iter().map(|o| o.0).collect(),
                    })
                }
            }
        }
        boundary.sort_unstable();

        if let Some(per) = periodic {
            let ext: [f64; 3] = std::array::from_fn(|a| per.upper[a] - per.lower[a]);
            let scale = ext.iter().cloned().fold(0.0, f64::max).max(1e-300);
            let tol = 1e-9 * scale;
            let cents: Vec<[f64; 3]> = boundary.iter().map(|&(k, f)| self.face_centroid(k, f)).collect();
            for a in 0..self.dim {
                if !per.axes[a] {
                    continue;
                }
                let mut uppers: HashMap<Vec<i64>, usize> = HashMap::new();
                let step = 1e-7 * scale;
                let key = |c: &[f64; 3]| -> Vec<i64> {
                    (0..self.dim)
                        .filter(|&d| d != a)
                        .map(|d| ((c[d] - per.lower[d]) / step).round() as i64)
                        .collect()
                };
                for (i, c) in cents.iter().enumerate() {
                    if (c[a] - per.upper[a]).abs() < tol {
                        uppers.insert(key(c), i);
                    }
                }
                for (i, c) in cents.iter().enumerate() {
                    if (c[a] - per.lower[a]).abs() >= tol {
                        continue;
                    }
                    let j = *uppers.get(&key(c)).ok_or_else(|| Error::Topology {
                        msg: format!("no periodic partner along axis {a}"),
                        elements: vec![boundary[i].0],
                    })?;
                    let (k1, f1) = boundary[i];
                    let (k2, f2) = boundary[j];
                    let mut shift = [0.0; 3];
                    shift[a] = ext[a];
                    neighbor[k1][f1] = Some(Neighbor::Interior { elem: k2, face: f2, shift });
                    shift[a] = -ext[a];
                    neighbor[k2][f2] = Some(Neighbor::Interior { elem: k1, face: f1, shift });
                }
            }
        }

        let mut faces = Vec::with_capacity(self.elements.len());
        for k in 0..self.elements.len() {
            let mut row = Vec::with_capacity(nf);
            for f in 0..nf {
                let (normal, sj) = self.face_normal(k, f);
                let nb = match neighbor[k][f].take() {
                    Some(n) => n,
                    None => Neighbor::Boundary(tagger(&self.face_centroid(k, f), &normal)),
                };
                row.push(FaceGeom { normal, sj, neighbor: nb });
            }
            faces.push(row);
        }
        self.faces = faces;
        Ok(())
    }

    fn face_normal(&self, k: usize, f: usize) -> ([f64; 3], f64) {
        let p = self.face_vertex_coords(k, f);
        let (mut n, sj) = if self.dim == 2 {
            let t = sub(&p[1], &p[0]);
            let l = norm(&t);
            ([t[1] / l, -t[0] / l, 0.0], 0.5 * l)
        } else {
            let c = cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0]));
            let l = norm(&c);
            // Area is l/2; the face parameter triangle has area 2.
            ([c[0] / l, c[1] / l, c[2] / l], 0.25 * l)
        };
        let out = sub(&self.face_centroid(k, f), &self.centroid(k));
        if n[0] * out[0] + n[1] * out[1] + n[2] * out[2] < 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        (n, sj)
    }

    /// Element containing `x`, if any, with reference coordinates.
    pub fn locate(&self, x: &[f64; 3]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-10;
        for (k, g) in self.geom.iter().enumerate() {
            let r = g.to_reference(x, self.dim);
            let s: f64 = r[..self.dim].iter().sum();
            if r[..self.dim].iter().all(|&v| v >= -1.0 - tol) && s <= 2.0 - self.dim as f64 + tol {
                return Some((k, r));
            }
        }
        None
    }

    pub fn count_boundary(&self, tag: BoundaryTag) -> usize {
        self.faces
            .iter()
            .flatten()
            .filter(|f| f.neighbor == Neighbor::Boundary(tag))
            .count()
    }

    pub fn count_interior(&self) -> usize {
        self.faces
            .iter()
            .flatten()
            .filter(|f| matches!(f.neighbor, Neighbor::Interior { .. }))
            .count()
    }
}

fn element_geometry(dim: usize, verts: &[[f64; 3]], ev: &[usize], k: usize) -> Result<ElementGeom> {
    let o = verts[ev[0]];
    let mut jac = [[0.0; 3]; 3];
    for kk in 0..dim {
        let d = sub(&verts[ev[kk + 1]], &o);
        for i in 0..dim {
            jac[i][kk] = 0.5 * d[i];
        }
    }
    if dim == 2 {
        jac[2][2] = 1.0;
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| jac[i][j]);
    let j = m.determinant();
    if !(j > 0.0) {
        return Err(Error::InvertedElement { element: k, jacobian: j });
    }
    let inv = m.try_inverse().ok_or(Error::InvertedElement { element: k, jacobian: j })?;
    let mut rx = [[0.0; 3]; 3];
    for kk in 0..dim {
        for i in 0..dim {
            rx[kk][i] = inv[(kk, i)];
        }
    }
    Ok(ElementGeom { j, jac, rx, origin: o })
}
