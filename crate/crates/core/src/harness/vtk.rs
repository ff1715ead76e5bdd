//! Legacy ASCII VTK snapshots on a linear sub-simplex lattice.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::material::CoefficientField;
use crate::solver::{Solver, State, FIELD_NAMES};

/// Equispaced lattice of order `n` on the reference simplex and its
/// splitting into linear sub-simplices (local point indices).
pub fn reference_lattice(dim: usize, n: usize) -> (Vec<[f64; 3]>, Vec<Vec<usize>>) {
    let n = n.max(1);
    let r = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
    let mut pts = Vec::new();
    let mut cells = Vec::new();
    if dim == 2 {
        let mut id = vec![vec![usize::MAX; n + 1]; n + 1];
        for j in 0..=n {
            for i in 0..=n - j {
                id[i][j] = pts.len();
                pts.push([r(i), r(j), 0.0]);
            }
        }
        for j in 0..n {
            for i in 0..n - j {
                cells.push(vec![id[i][j], id[i + 1][j], id[i][j + 1]]);
                if i + j + 2 <= n {
                    cells.push(vec![id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]]);
                }
            }
        }
    } else {
        let mut id = std::collections::HashMap::new();
        for k in 0..=n {
            for j in 0..=n - k {
                for i in 0..=n - j - k {
                    id.insert((i, j, k), pts.len());
                    pts.push([r(i), r(j), r(k)]);
                }
            }
        }
        let p = |i: usize, j: usize, k: usize| id[&(i, j, k)];
        for k in 0..n {
            for j in 0..n - k {
                for i in 0..n - j - k {
                    let s = i + j + k;
                    cells.push(vec![p(i, j, k), p(i + 1, j, k), p(i, j + 1, k), p(i, j, k + 1)]);
                    if s + 2 <= n {
                        // Octahedron between the two corner tets, split along
                        // the (i+1,j,k)–(i,j+1,k+1) diagonal.
                        let (a, b) = (p(i + 1, j, k), p(i, j + 1, k + 1));
                        let ring = [p(i + 1, j + 1, k), p(i, j + 1, k), p(i, j, k + 1), p(i + 1, j, k + 1)];
                        for q in 0..4 {
                            cells.push(vec![a, b, ring[q], ring[(q + 1) % 4]]);
                        }
                    }
                    if s + 3 <= n {
                        cells.push(vec![p(i + 1, j + 1, k), p(i, j + 1, k + 1), p(i + 1, j, k + 1), p(i + 1, j + 1, k + 1)]);
                    }
                }
            }
        }
    }
    (pts, cells)
}

/// Writes the selected global field indices plus the center-of-mass
/// velocity b = v + (ρ_f/ρ) q on an order-N lattice per element.
pub fn write_snapshot(path: &Path, solver: &Solver, state: &State, field: &CoefficientField, fields: &[usize]) -> Result<()> {
    let mesh = &solver.mesh;
    let dim = mesh.dim;
    let (lat, cells) = reference_lattice(dim, solver.re.n);
    let flat: Vec<f64> = lat.iter().flat_map(|p| p[..dim].to_vec()).collect();
    let interp = solver.re.interp_matrix(&flat);
    let nl = lat.len();
    let nk = mesh.num_elements();
    let np = solver.re.np;

    let mut points = Vec::with_capacity(nk * nl);
    let mut values = vec![vec![0.0; nk * nl]; crate::solver::NFIELDS];
    let mut ratio = vec![0.0; nk * nl];
    for k in 0..nk {
        let g = &mesh.geom[k];
        for (l, p) in lat.iter().enumerate() {
            let x = g.to_physical(&p[..dim]);
            let d = field.material_at(k, &x)?.derive()?;
            ratio[k * nl + l] = d.rho_f / d.rho;
            points.push(x);
        }
        for a in 0..state.nfields {
            let u = state.field(k, a);
            let ga = solver.layout.global_of(a);
            for l in 0..nl {
                values[ga][k * nl + l] = (0..np).map(|j| interp[(l, j)] * u[j]).sum();
            }
        }
    }

    let io = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "# vtk DataFile Version 3.0\nporowave snapshot t = {:e}\nASCII\nDATASET UNSTRUCTURED_GRID", state.t).map_err(io)?;
    writeln!(f, "POINTS {} double", points.len()).map_err(io)?;
    for x in &points {
        writeln!(f, "{:e} {:e} {:e}", x[0], x[1], x[2]).map_err(io)?;
    }
    let nv = dim + 1;
    writeln!(f, "CELLS {} {}", nk * cells.len(), nk * cells.len() * (nv + 1)).map_err(io)?;
    for k in 0..nk {
        for c in &cells {
            let ids: Vec<String> = c.iter().map(|i| (k * nl + i).to_string()).collect();
            writeln!(f, "{nv} {}", ids.join(" ")).map_err(io)?;
        }
    }
    writeln!(f, "CELL_TYPES {}", nk * cells.len()).map_err(io)?;
    let ctype = if dim == 2 { 5 } else { 10 };
    for _ in 0..nk * cells.len() {
        writeln!(f, "{ctype}").map_err(io)?;
    }
    writeln!(f, "POINT_DATA {}", points.len()).map_err(io)?;
    for &g in fields {
        if solver.layout.local_of(g).is_none() {
            return Err(Error::Config(format!("field {} is not active in this run mode", FIELD_NAMES[g])));
        }
        writeln!(f, "SCALARS {} double 1\nLOOKUP_TABLE default", FIELD_NAMES[g]).map_err(io)?;
        for v in &values[g] {
            writeln!(f, "{v:e}").map_err(io)?;
        }
    }
    writeln!(f, "VECTORS b double").map_err(io)?;
    for i in 0..points.len() {
        let b: Vec<String> = (0..3).map(|d| format!("{:e}", values[7 + d][i] + ratio[i] * values[10 + d][i])).collect();
        writeln!(f, "{}", b.join(" ")).map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn volume(dim: usize, pts: &[[f64; 3]], c: &[usize]) -> f64 {
        let e = |a: usize| -> [f64; 3] {
            let (p, q) = (pts[c[a]], pts[c[0]]);
            [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
        };
        if dim == 2 {
            let (a, b) = (e(1), e(2));
            0.5 * (a[0] * b[1] - a[1] * b[0])
        } else {
            let (a, b, d) = (e(1), e(2), e(3));
            (a[0] * (b[1] * d[2] - b[2] * d[1]) - a[1] * (b[0] * d[2] - b[2] * d[0]) + a[2] * (b[0] * d[1] - b[1] * d[0])) / 6.0
        }
    }

    #[test]
    fn lattice_tiles_reference_simplex() {
        for dim in [2, 3] {
            for n in 1..=5 {
                let (pts, cells) = reference_lattice(dim, n);
                let expect = if dim == 2 { n * n } else { n * n * n };
                assert_eq!(cells.len(), expect);
                let total: f64 = cells.iter().map(|c| volume(dim, &pts, c).abs()).sum();
                let reference = if dim == 2 { 2.0 } else { 8.0 / 6.0 };
                assert!((total - reference).abs() < 1e-12, "dim {dim} n {n}: {total}");
                assert!(cells.iter().all(|c| volume(dim, &pts, c).abs() > 1e-14));
            }
        }
    }
}
