//! Structured simplicial meshes of boxes.

use serde::{Deserialize, Serialize};

use super::{BoundaryTag, Mesh, Periodicity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformGridSpec {
    pub dim: usize,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    /// Elements per direction.
    pub k1d: usize,
    pub periodic: [bool; 3],
    /// Boundary tag per axis for the (lower, upper) sides.
    pub tags: [[BoundaryTag; 2]; 3],
}

impl UniformGridSpec {
    pub fn unit(dim: usize, k1d: usize, tag: BoundaryTag) -> Self {
        Self {
            dim,
            lower: [0.0; 3],
            upper: [1.0, 1.0, if dim == 3 { 1.0 } else { 0.0 }],
            k1d,
            periodic: [false; 3],
            tags: [[tag; 2]; 3],
        }
    }

    pub fn periodic_unit(dim: usize, k1d: usize) -> Self {
        let mut s = Self::unit(dim, k1d, BoundaryTag::Absorbing);
        s.periodic = [true, true, dim == 3];
        s
    }
}

/// Uniform grid of squares bisected along one diagonal (2D), or of cubes cut
/// into six Kuhn tetrahedra (3D).
pub fn build_uniform(spec: &UniformGridSpec) -> Result<Mesh> {
    let dim = spec.dim;
    if !(dim == 2 || dim == 3) {
        return Err(Error::Config(format!("grid dimension {dim}")));
    }
    if spec.k1d == 0 {
        return Err(Error::Config("K1D must be at least 1".into()));
    }
    for a in 0..dim {
        if !(spec.upper[a] > spec.lower[a]) {
            return Err(Error::Config(format!("box extent along axis {a} is not positive")));
        }
    }
    let n = spec.k1d;
    let np1 = n + 1;
    let coord = |a: usize, i: usize| spec.lower[a] + (spec.upper[a] - spec.lower[a]) * i as f64 / n as f64;
    let mut vertices = Vec::new();
    let mut elements = Vec::new();
    if dim == 2 {
        for j in 0..np1 {
            for i in 0..np1 {
                vertices.push([coord(0, i), coord(1, j), 0.0]);
            }
        }
        let id = |i: usize, j: usize| j * np1 + i;
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                elements.push(vec![v00, v10, v11]);
                elements.push(vec![v00, v11, v01]);
            }
        }
    } else {
        for k in 0..np1 {
            for j in 0..np1 {
                for i in 0..np1 {
                    vertices.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| (k * np1 + j) * np1 + i;
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for p in &perms {
                        let mut c = [i, j, k];
                        let mut tet = vec![id(c[0], c[1], c[2])];
                        for &ax in p {
                            c[ax] += 1;
                            tet.push(id(c[0], c[1], c[2]));
                        }
                        // Odd permutations give negative orientation.
                        let odd = matches!(p, [0, 2, 1] | [1, 0, 2] | [2, 1, 0]);
                        if odd {
                            tet.swap(2, 3);
                        }
                        elements.push(tet);
                    }
                }
            }
        }
    }
    let any_periodic = spec.periodic[..dim].iter().any(|&p| p);
    let per = any_periodic.then_some(Periodicity {
        axes: spec.periodic,
        lower: spec.lower,
        upper: spec.upper,
    });
    let ext: Vec<f64> = (0..dim).map(|a| spec.upper[a] - spec.lower[a]).collect();
    let h = ext[0] / n as f64;
    let tags = spec.tags;
    let lower = spec.lower;
    let upper = spec.upper;
    let mut mesh = Mesh::new(dim, vertices, elements, per, move |c, _| {
        for a in 0..dim {
            let tol = 1e-9 * ext[a];
            if (c[a] - lower[a]).abs() < tol {
                return tags[a][0];
            }
            if (c[a] - upper[a]).abs() < tol {
                return tags[a][1];
            }
        }
        BoundaryTag::Absorbing
    })?;
    mesh.h = h;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Neighbor;

    #[test]
    fn unit_square_two_per_quad() {
        let m = build_uniform(&UniformGridSpec::unit(2, 2, BoundaryTag::ExactSolution)).unwrap();
        assert_eq!(m.num_elements(), 8);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        assert_eq!(m.h, 0.5);
        assert_eq!(m.count_boundary(BoundaryTag::ExactSolution), 8);
    }

    #[test]
    fn unit_cube_kuhn_split() {
        let m = build_uniform(&UniformGridSpec::unit(3, 1, BoundaryTag::Absorbing)).unwrap();
        assert_eq!(m.num_elements(), 6);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        assert_eq!(m.count_boundary(BoundaryTag::Absorbing), 12);
        let m = build_uniform(&UniformGridSpec::unit(3, 2, BoundaryTag::Absorbing)).unwrap();
        assert!((m.volume() - 1.0).abs() < 1e-14);
        assert_eq!(m.count_boundary(BoundaryTag::Absorbing), 6 * 4 * 2);
    }

    #[test]
    fn periodic_pairing_closes_all_faces() {
        for dim in [2, 3] {
            let m = build_uniform(&UniformGridSpec::periodic_unit(dim, 2)).unwrap();
            assert_eq!(m.count_interior(), m.num_elements() * (dim + 1));
            for k in 0..m.num_elements() {
                for (f, fg) in m.faces[k].iter().enumerate() {
                    if let Neighbor::Interior { elem, face, shift } = fg.neighbor {
                        let a = m.face_centroid(k, f);
                        let b = m.face_centroid(elem, face);
                        for d in 0..3 {
                            assert!((a[d] + shift[d] - b[d]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn side_tags() {
        let mut s = UniformGridSpec::unit(2, 3, BoundaryTag::Absorbing);
        s.tags[1][1] = BoundaryTag::FreeSurface;
        let m = build_uniform(&s).unwrap();
        assert_eq!(m.count_boundary(BoundaryTag::FreeSurface), 3);
        assert_eq!(m.count_boundary(BoundaryTag::Absorbing), 9);
    }

    #[test]
    fn geometric_factors_match_finite_differences() {
        let m = build_uniform(&UniformGridSpec::unit(3, 2, BoundaryTag::Absorbing)).unwrap();
        let step = 1e-6 * m.h;
        for (k, g) in m.geom.iter().enumerate().step_by(5) {
            // Barycentric affine map built directly from the vertices.
            let x = |r: [f64; 3]| {
                let lam = [-(1.0 + r[0] + r[1] + r[2]) / 2.0, (1.0 + r[0]) / 2.0, (1.0 + r[1]) / 2.0, (1.0 + r[2]) / 2.0];
                let mut p = [0.0; 3];
                for (a, &v) in m.elements[k].iter().enumerate() {
                    for d in 0..3 {
                        p[d] += lam[a] * m.vertices[v][d];
                    }
                }
                p
            };
            let r0 = [-0.3, -0.2, -0.4];
            let mut jac = nalgebra::Matrix3::zeros();
            for c in 0..3 {
                let mut rp = r0;
                let mut rm = r0;
                rp[c] += step;
                rm[c] -= step;
                let (xp, xm) = (x(rp), x(rm));
                for d in 0..3 {
                    jac[(d, c)] = (xp[d] - xm[d]) / (2.0 * step);
                }
            }
            let inv = jac.try_inverse().unwrap();
            for c in 0..3 {
                for d in 0..3 {
                    let want = g.rx[c][d];
                    assert!((inv[(c, d)] - want).abs() <= 1e-6 * want.abs().max(1.0 / m.h));
                }
            }
        }
    }
}
