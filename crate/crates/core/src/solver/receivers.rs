//! Point receivers recording all fields and the center-of-mass velocity.

use std::io::Write;
use std::path::Path;

use super::{Solver, State, NFIELDS};
use crate::error::{Error, Result};
use crate::material::CoefficientField;

pub const FIELD_NAMES: [&str; NFIELDS] = [
    "tau11", "tau22", "tau33", "tau23", "tau13", "tau12", "p", "v1", "v2", "v3", "q1", "q2", "q3",
];

struct Receiver {
    x: [f64; 3],
    elem: usize,
    phi: Vec<f64>,
    /// ρ_f/ρ at the receiver.
    ratio: f64,
    rows: Vec<(f64, [f64; NFIELDS])>,
}

pub struct Receivers {
    list: Vec<Receiver>,
}

impl Receivers {
    pub fn new(solver: &Solver, field: &CoefficientField, points: &[[f64; 3]]) -> Result<Self> {
        let mut list = Vec::with_capacity(points.len());
        for x in points {
            let (elem, r) = solver
                .mesh
                .locate(x)
                .ok_or_else(|| Error::Setup(format!("receiver at {x:?} lies outside the mesh")))?;
            let phi = solver.re.interp_matrix(&r[..solver.mesh.dim]).as_slice().to_vec();
            let d = field.material_at(elem, x)?.derive()?;
            list.push(Receiver {
                x: *x,
                elem,
                phi,
                ratio: d.rho_f / d.rho,
                rows: Vec::new(),
            });
        }
        Ok(Self { list })
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn record(&mut self, solver: &Solver, state: &State) {
        for r in &mut self.list {
            let mut v = [0.0; NFIELDS];
            for a in 0..state.nfields {
                let u = state.field(r.elem, a);
                v[solver.layout.global_of(a)] = r.phi.iter().zip(u).map(|(p, x)| p * x).sum();
            }
            r.rows.push((state.t, v));
        }
    }

    /// Recorded samples of receiver `i`.
    pub fn samples(&self, i: usize) -> &[(f64, [f64; NFIELDS])] {
        &self.list[i].rows
    }

    /// One CSV per receiver, `receiver_<i>.csv`.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut out = Vec::new();
        for (i, r) in self.list.iter().enumerate() {
            let path = dir.join(format!("receiver_{i}.csv"));
            let io = |e| Error::io(&path, e);
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
            writeln!(f, "# x = {} {} {}", r.x[0], r.x[1], r.x[2]).map_err(io)?;
            writeln!(f, "t,{},b1,b2,b3", FIELD_NAMES.join(",")).map_err(io)?;
            for (t, v) in &r.rows {
                let mut line = format!("{t:e}");
                for x in v {
                    line.push_str(&format!(",{x:e}"));
                }
                for d in 0..3 {
                    line.push_str(&format!(",{:e}", v[7 + d] + r.ratio * v[10 + d]));
                }
                writeln!(f, "{line}").map_err(io)?;
            }
            f.flush().map_err(io)?;
            out.push(path);
        }
        Ok(out)
    }
}
