//! Run configuration: a sectioned key-value text format.
//!
//! ```text
//! # comment
//! [mesh]
//! k1d = 16
//! lower = -1 -1
//! upper = 1 1
//! boundary = abc
//! ```
//!
//! Every key is validated against its section's schema; unknown sections or
//! keys are errors.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::material::{preset, PoroelasticMaterial, Sampling, Units};
use crate::mesh::BoundaryTag;
use crate::solver::{RunMode, Scheme, FIELD_NAMES, NFIELDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Simulate,
    Converge,
    Spectra,
    Dispersion,
    Materials,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Self::Simulate,
            "converge" => Self::Converge,
            "spectra" => Self::Spectra,
            "dispersion" => Self::Dispersion,
            "materials" => Self::Materials,
            _ => return None,
        })
    }
}

/// Boundary condition of one box side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideCondition {
    Tag(BoundaryTag),
    Periodic,
}

impl SideCondition {
    fn parse(s: &str) -> Option<Self> {
        if s == "periodic" {
            Some(Self::Periodic)
        } else {
            BoundaryTag::parse(s).map(Self::Tag)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum MeshSpec {
    Box {
        dim: usize,
        lower: [f64; 3],
        upper: [f64; 3],
        k1d: usize,
        /// `[axis][lower, upper]`.
        sides: [[SideCondition; 2]; 3],
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize)]
pub enum MaterialSource {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize)]
pub struct MaterialSpec {
    pub source: MaterialSource,
    pub units: Units,
    /// When false the fluid viscosity is set to zero.
    pub viscous: bool,
    /// The 2D plane is the physical x–z plane (axes 2 and 3 relabelled).
    pub plane_xz: bool,
    /// (amplitude, frequency) of the density modulation.
    pub modulation: Option<(f64, f64)>,
    pub sampling: Sampling,
}

impl MaterialSpec {
    /// The base material in the requested units and orientation.
    pub fn material(&self) -> Result<PoroelasticMaterial> {
        let m = match &self.source {
            MaterialSource::Preset(name) => preset(name)?,
            MaterialSource::File(path) => PoroelasticMaterial::load(path)?,
        };
        let mut m = m.in_units(self.units);
        if !self.viscous {
            m = m.with_viscosity(0.0);
        }
        if self.plane_xz {
            m = m.swap_axes_23();
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverParams {
    pub alpha_tau: f64,
    pub alpha_v: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub final_time: f64,
    pub mode: RunMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceSpec {
    pub x: [f64; 3],
    pub f0: f64,
    pub t0: f64,
    pub beta: [f64; NFIELDS],
}

#[derive(Debug, Clone, Serialize)]
pub enum InitialSpec {
    Zero,
    /// Superposed fast P, S and slow P plane waves, also used as exterior
    /// data on exact-solution faces.
    PlaneWave { wavevector: [f64; 3] },
    /// Projected random nodal data.
    Random,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub receivers: Vec<[f64; 3]>,
    /// Number of VTK snapshots, evenly spaced in time (the final state is
    /// always included when positive).
    pub snapshots: usize,
    /// Global field indices written to snapshots.
    pub fields: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeSpec {
    pub degrees: Vec<usize>,
    pub levels: Vec<usize>,
    pub final_time: f64,
    pub wavevector: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectraSpec {
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionSpec {
    pub wavenumber: f64,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    pub n: usize,
    pub solver: SolverParams,
    pub sources: Vec<SourceSpec>,
    pub initial: InitialSpec,
    pub seed: u64,
    pub output: OutputSpec,
    pub converge: ConvergeSpec,
    pub spectra: SpectraSpec,
    pub dispersion: DispersionSpec,
}

impl RunConfig {
    /// Built-in defaults of each experiment.
    pub fn default_for(experiment: Experiment) -> Self {
        let tag = |t| [[SideCondition::Tag(t); 2]; 3];
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut c = Self {
            experiment,
            mesh: MeshSpec::Box {
                dim: 2,
                lower: [0.0; 3],
                upper: [1.0, 1.0, 0.0],
                k1d: 8,
                sides: tag(BoundaryTag::Absorbing),
            },
            material: MaterialSpec {
                source: MaterialSource::Preset("sandstone_isotropic".into()),
                units: Units::Scaled,
                viscous: true,
                plane_xz: false,
                modulation: None,
                sampling: Sampling::Pointwise,
            },
            n: 3,
            solver: SolverParams {
                alpha_tau: 1.0,
                alpha_v: 1.0,
                cfl: 1.0,
                scheme: Scheme::Unified,
                final_time: 1.0,
                mode: RunMode::Full13,
            },
            sources: Vec::new(),
            initial: InitialSpec::Zero,
            seed: 1,
            output: OutputSpec {
                dir: PathBuf::from("out"),
                receivers: Vec::new(),
                snapshots: 0,
                fields: vec![6, 7, 8],
            },
            converge: ConvergeSpec {
                degrees: vec![1, 2, 3, 4],
                levels: vec![2, 4, 8, 16],
                final_time: 1.0,
                wavevector: [two_pi, two_pi, 0.0],
            },
            spectra: SpectraSpec { alphas: vec![0.0, 0.5, 1.0] },
            dispersion: DispersionSpec {
                wavenumber: two_pi,
                angles: (0..=18).map(|i| 5.0 * i as f64).collect(),
            },
        };
        match experiment {
            Experiment::Simulate => {
                // Orthotropic sandstone in the x–z plane, Ricker source on
                // τ_zz and p at the center: a coarse version of the
                // anisotropy demonstration.
                c.material.source = MaterialSource::Preset("sandstone_orthotropic".into());
                c.material.plane_xz = true;
                c.mesh = MeshSpec::Box {
                    dim: 2,
                    lower: [0.0; 3],
                    upper: [18250.0, 18250.0, 0.0],
                    k1d: 32,
                    sides: tag(BoundaryTag::Absorbing),
                };
                c.n = 4;
                c.solver.final_time = 1560.0;
                let mut beta = [0.0; NFIELDS];
                beta[1] = 1.0;
                beta[6] = 1.0;
                c.sources.push(SourceSpec {
                    x: [9125.0, 9125.0, 0.0],
                    f0: 3.73e-3,
                    t0: 1.2 / 3.73e-3,
                    beta,
                });
                c.output.receivers = vec![[9125.0, 13000.0, 0.0], [13000.0, 9125.0, 0.0]];
                c.output.snapshots = 4;
            }
            Experiment::Spectra => {
                c.mesh = MeshSpec::Box {
                    dim: 2,
                    lower: [0.0; 3],
                    upper: [1.0, 1.0, 0.0],
                    k1d: 2,
                    sides: [[SideCondition::Periodic; 2]; 3],
                };
                c.material.viscous = false;
            }
            Experiment::Converge => {
                c.material.viscous = false;
            }
            Experiment::Dispersion => {
                c.material.source = MaterialSource::Preset("sandstone_orthotropic".into());
            }
            Experiment::Materials => {}
        }
        c
    }

    pub fn load(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, experiment)
    }

    /// Defaults of `experiment` overridden by the document.
    pub fn parse(text: &str, experiment: Experiment) -> Result<Self> {
        let doc = Document::parse(text)?;
        let mut c = Self::default_for(experiment);
        let mut box_k1d = None;
        let mut box_dim = None;
        let mut box_lower = None;
        let mut box_upper = None;
        let mut box_sides: Option<[[SideCondition; 2]; 3]> = None;
        let mut mesh_file = None;
        let mut sources = Vec::new();
        for sec in &doc.sections {
            match sec.name.as_str() {
                "mesh" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "file" => mesh_file = Some(PathBuf::from(&e.value)),
                            "dim" => box_dim = Some(e.usize()?),
                            "k1d" => box_k1d = Some(e.usize()?),
                            "lower" => box_lower = Some(e.point()?),
                            "upper" => box_upper = Some(e.point()?),
                            "boundary" => box_sides = Some([[e.side()?; 2]; 3]),
                            key => {
                                let axes = ["x", "y", "z"];
                                let side = key.split_once('_').and_then(|(a, s)| {
                                    let ax = axes.iter().position(|&n| n == a)?;
                                    let sd = ["lower", "upper"].iter().position(|&n| n == s)?;
                                    Some((ax, sd))
                                });
                                let (ax, sd) = side.ok_or_else(|| e.unknown(&sec.name))?;
                                let sides = box_sides.get_or_insert(match &c.mesh {
                                    MeshSpec::Box { sides, .. } => *sides,
                                    MeshSpec::File(_) => [[SideCondition::Tag(BoundaryTag::Absorbing); 2]; 3],
                                });
                                sides[ax][sd] = e.side()?;
                            }
                        }
                    }
                }
                "material" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "preset" => c.material.source = MaterialSource::Preset(e.value.clone()),
                            "file" => c.material.source = MaterialSource::File(PathBuf::from(&e.value)),
                            "units" => {
                                c.material.units = match e.value.as_str() {
                                    "si" => Units::Si,
                                    "scaled" => Units::Scaled,
                                    _ => return Err(e.invalid("si or scaled")),
                                }
                            }
                            "viscous" => c.material.viscous = e.bool()?,
                            "plane" => {
                                c.material.plane_xz = match e.value.as_str() {
                                    "xy" => false,
                                    "xz" => true,
                                    _ => return Err(e.invalid("xy or xz")),
                                }
                            }
                            "modulation" => {
                                let v = e.floats()?;
                                if v.len() != 2 {
                                    return Err(e.invalid("amplitude and frequency"));
                                }
                                c.material.modulation = Some((v[0], v[1]));
                            }
                            "sampling" => {
                                c.material.sampling = match e.value.as_str() {
                                    "pointwise" | "wadg" => Sampling::Pointwise,
                                    "average" => Sampling::ElementAverage,
                                    _ => return Err(e.invalid("pointwise or average")),
                                }
                            }
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "solver" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "n" => c.n = e.usize()?,
                            "alpha" => {
                                let a = e.float()?;
                                c.solver.alpha_tau = a;
                                c.solver.alpha_v = a;
                            }
                            "alpha_tau" => c.solver.alpha_tau = e.float()?,
                            "alpha_v" => c.solver.alpha_v = e.float()?,
                            "cfl" => c.solver.cfl = e.float()?,
                            "scheme" => c.solver.scheme = Scheme::parse(&e.value).ok_or_else(|| e.invalid("unified or strang"))?,
                            "final_time" => c.solver.final_time = e.float()?,
                            "mode" => {
                                c.solver.mode = match e.value.as_str() {
                                    "full13" => RunMode::Full13,
                                    "compact2d" => RunMode::Compact2d,
                                    _ => return Err(e.invalid("full13 or compact2d")),
                                }
                            }
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "source" => {
                    let mut s = SourceSpec {
                        x: [0.0; 3],
                        f0: 1.0,
                        t0: f64::NAN,
                        beta: [0.0; NFIELDS],
                    };
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "x" => s.x = e.point()?,
                            "f0" => s.f0 = e.float()?,
                            "t0" => s.t0 = e.float()?,
                            "beta" => s.beta = e.weights()?,
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                    if s.t0.is_nan() {
                        s.t0 = 1.2 / s.f0;
                    }
                    if !(s.f0 > 0.0) {
                        return Err(Error::Config(format!("[source] at line {}: f0 must be positive", sec.line)));
                    }
                    sources.push(s);
                }
                "initial" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "type" => {
                                c.initial = match e.value.as_str() {
                                    "zero" => InitialSpec::Zero,
                                    "random" => InitialSpec::Random,
                                    "planewave" => InitialSpec::PlaneWave {
                                        wavevector: c.converge.wavevector,
                                    },
                                    _ => return Err(e.invalid("zero, random or planewave")),
                                }
                            }
                            "wavevector" => {
                                let k = e.point()?;
                                c.converge.wavevector = k;
                                if let InitialSpec::PlaneWave { wavevector } = &mut c.initial {
                                    *wavevector = k;
                                }
                            }
                            "seed" => c.seed = e.usize()? as u64,
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "output" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "dir" => c.output.dir = PathBuf::from(&e.value),
                            "receivers" => {
                                c.output.receivers = e
                                    .value
                                    .split(';')
                                    .filter(|s| !s.trim().is_empty())
                                    .map(|s| parse_point(s).map_err(|m| e.invalid(&m)))
                                    .collect::<Result<_>>()?
                            }
                            "snapshots" => c.output.snapshots = e.usize()?,
                            "fields" => {
                                c.output.fields = e
                                    .value
                                    .split_whitespace()
                                    .map(|f| field_index(f).ok_or_else(|| e.invalid("field names such as tau11 p v1")))
                                    .collect::<Result<_>>()?
                            }
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "converge" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "degrees" => c.converge.degrees = e.usizes()?,
                            "levels" => c.converge.levels = e.usizes()?,
                            "final_time" => c.converge.final_time = e.float()?,
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "spectra" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "alphas" => c.spectra.alphas = e.floats()?,
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                "dispersion" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "wavenumber" => c.dispersion.wavenumber = e.float()?,
                            "angles" => c.dispersion.angles = e.floats()?,
                            _ => return Err(e.unknown(&sec.name)),
                        }
                    }
                }
                other => {
                    return Err(Error::Parse {
                        line: sec.line,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            }
        }
        if !sources.is_empty() {
            c.sources = sources;
        }
        if let Some(p) = mesh_file {
            if box_k1d.is_some() || box_lower.is_some() || box_upper.is_some() || box_dim.is_some() {
                return Err(Error::Config("[mesh] file excludes the box keys dim, k1d, lower and upper".into()));
            }
            c.mesh = MeshSpec::File(p);
        } else if let MeshSpec::Box { dim, lower, upper, k1d, sides } = &mut c.mesh {
            if let Some(d) = box_dim {
                *dim = d;
                if d == 3 && upper[2] == 0.0 {
                    upper[2] = 1.0;
                }
            }
            if let Some(k) = box_k1d {
                *k1d = k;
            }
            if let Some(l) = box_lower {
                *lower = l;
            }
            if let Some(u) = box_upper {
                *upper = u;
            }
            if let Some(s) = box_sides {
                *sides = s;
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Schema checks that do not need the mesh or material.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.n > crate::refelem::MAX_DEGREE {
            return bad(format!("N must be in 1..={}, got {}", crate::refelem::MAX_DEGREE, self.n));
        }
        if let MeshSpec::Box { dim, lower, upper, k1d, sides } = &self.mesh {
            if !(*dim == 2 || *dim == 3) {
                return bad(format!("mesh dimension must be 2 or 3, got {dim}"));
            }
            if *k1d == 0 {
                return bad("k1d must be positive".into());
            }
            for a in 0..*dim {
                if !(upper[a] > lower[a]) {
                    return bad(format!("mesh box is empty along axis {a}"));
                }
                let per = sides[a].map(|s| s == SideCondition::Periodic);
                if per[0] != per[1] {
                    return bad(format!("periodicity along axis {a} must be set on both sides"));
                }
            }
            if self.solver.mode == RunMode::Compact2d && *dim != 2 {
                return bad("compact2d run mode needs a 2D mesh".into());
            }
        }
        for s in &self.sources {
            if s.beta.iter().all(|&b| b == 0.0) {
                return bad("a source needs at least one nonzero beta weight".into());
            }
        }
        if self.converge.levels.len() < 3 && self.experiment == Experiment::Converge {
            return bad("a convergence study needs at least three levels".into());
        }
        if self.converge.degrees.iter().any(|&n| n == 0 || n > crate::refelem::MAX_DEGREE) {
            return bad("convergence degrees must be in the supported range".into());
        }
        if !(self.dispersion.wavenumber > 0.0) {
            return bad("dispersion wavenumber must be positive".into());
        }
        crate::solver::SolverConfig {
            alpha_tau: self.solver.alpha_tau,
            alpha_v: self.solver.alpha_v,
            cfl: self.solver.cfl,
            final_time: self.solver.final_time,
            ..Default::default()
        }
        .validate()
    }
}

/// Index of a field name in the 13-component state.
pub fn field_index(name: &str) -> Option<usize> {
    FIELD_NAMES.iter().position(|&f| f == name)
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("a point, got '{t}'")))
        .collect::<std::result::Result<_, _>>()?;
    if v.is_empty() || v.len() > 3 {
        return Err("a point of 1 to 3 coordinates".into());
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(&v);
    Ok(p)
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn invalid(&self, expected: &str) -> Error {
        Error::Parse {
            line: self.line,
            msg: format!("'{}' expects {expected}, got '{}'", self.key, self.value),
        }
    }

    fn unknown(&self, section: &str) -> Error {
        Error::Parse {
            line: self.line,
            msg: format!("unknown key '{}' in [{section}]", self.key),
        }
    }

    fn float(&self) -> Result<f64> {
        self.value.parse().map_err(|_| self.invalid("a number"))
    }

    fn usize(&self) -> Result<usize> {
        self.value.parse().map_err(|_| self.invalid("a nonnegative integer"))
    }

    fn bool(&self) -> Result<bool> {
        match self.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.invalid("true or false")),
        }
    }

    fn floats(&self) -> Result<Vec<f64>> {
        self.value.split_whitespace().map(|t| t.parse().map_err(|_| self.invalid("numbers"))).collect()
    }

    fn usizes(&self) -> Result<Vec<usize>> {
        self.value.split_whitespace().map(|t| t.parse().map_err(|_| self.invalid("integers"))).collect()
    }

    fn point(&self) -> Result<[f64; 3]> {
        parse_point(&self.value).map_err(|m| self.invalid(&m))
    }

    fn side(&self) -> Result<SideCondition> {
        SideCondition::parse(&self.value).ok_or_else(|| self.invalid("free, abc, exact or periodic"))
    }

    /// `name:weight` pairs, e.g. `tau22:1 p:1`.
    fn weights(&self) -> Result<[f64; NFIELDS]> {
        let mut beta = [0.0; NFIELDS];
        for tok in self.value.split_whitespace() {
            let (name, w) = tok.split_once(':').unwrap_or((tok, "1"));
            let i = field_index(name).ok_or_else(|| self.invalid("field:weight pairs such as tau22:1 p:1"))?;
            beta[i] = w.parse().map_err(|_| self.invalid("numeric weights"))?;
        }
        Ok(beta)
    }
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

#[derive(Debug, Clone)]
struct Document {
    sections: Vec<Section>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line, msg: "unterminated section header".into() })?
                    .trim()
                    .to_ascii_lowercase();
                let repeatable = name == "source";
                if !repeatable && sections.iter().any(|s| s.name == name) {
                    return Err(Error::Parse { line, msg: format!("duplicate section [{name}]") });
                }
                sections.push(Section { name, line, entries: Vec::new() });
                continue;
            }
            let (k, v) = l.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key = value, got '{l}'"),
            })?;
            let sec = sections.last_mut().ok_or_else(|| Error::Parse {
                line,
                msg: "key outside of any section".into(),
            })?;
            let key = k.trim().to_ascii_lowercase();
            if sec.entries.iter().any(|e| e.key == key) {
                return Err(Error::Parse { line, msg: format!("duplicate key '{key}'") });
            }
            sec.entries.push(Entry {
                key,
                value: v.trim().to_string(),
                line,
            });
        }
        Ok(Self { sections })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let text = "
[mesh]
k1d = 4
lower = -1 -1
upper = 1 1
boundary = abc
y_upper = free
[material]
preset = shale
viscous = false
modulation = 0.5 1
sampling = average
[solver]
N = 2
alpha = 0.5
scheme = strang
final_time = 0.2
[source]
x = 0 0
f0 = 10
beta = tau22:1 p:0.5
[source]
x = 0.5 0
f0 = 5
beta = v1
[output]
receivers = 0.1 0.1; 0.2 0.2
fields = p v1
";
        let c = RunConfig::parse(text, Experiment::Simulate).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.solver.alpha_tau, 0.5);
        assert_eq!(c.solver.scheme, Scheme::Strang);
        assert_eq!(c.sources.len(), 2);
        assert_eq!(c.sources[0].beta[6], 0.5);
        assert!((c.sources[0].t0 - 0.12).abs() < 1e-15);
        assert_eq!(c.sources[1].beta[7], 1.0);
        assert_eq!(c.output.receivers.len(), 2);
        assert_eq!(c.output.fields, vec![6, 7]);
        assert_eq!(c.material.sampling, Sampling::ElementAverage);
        match &c.mesh {
            MeshSpec::Box { k1d, sides, lower, .. } => {
                assert_eq!(*k1d, 4);
                assert_eq!(lower[0], -1.0);
                assert_eq!(sides[1][1], SideCondition::Tag(BoundaryTag::FreeSurface));
                assert_eq!(sides[0][0], SideCondition::Tag(BoundaryTag::Absorbing));
            }
            _ => panic!("expected a box mesh"),
        }
        assert!(!c.material.material().unwrap().eta.is_nan());
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        for text in ["[solver]\nfoo = 1\n", "[bogus]\n", "k = 1\n", "[mesh]\nk1d = 2\nk1d = 3\n", "[mesh]\nx_middle = abc\n"] {
            assert!(RunConfig::parse(text, Experiment::Simulate).is_err(), "{text}");
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[solver]\nN = 0\n",
            "[solver]\nalpha = -1\n",
            "[solver]\ncfl = 0\n",
            "[mesh]\nlower = 1 1\nupper = 0 0\n",
            "[mesh]\nx_lower = periodic\n",
            "[material]\nunits = furlongs\n",
            "[output]\nfields = tau99\n",
            "[converge]\nlevels = 2 4\n",
        ] {
            assert!(RunConfig::parse(text, Experiment::Converge).is_err(), "{text}");
        }
    }

    #[test]
    fn defaults_validate() {
        for e in [Experiment::Simulate, Experiment::Converge, Experiment::Spectra, Experiment::Dispersion, Experiment::Materials] {
            RunConfig::default_for(e).validate().unwrap();
        }
    }
}
