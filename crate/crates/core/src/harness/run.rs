//! Experiment drivers built from a [`RunConfig`].

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::{Experiment, InitialSpec, MeshSpec, RunConfig, SideCondition};
use super::convergence::{run_convergence, ConvergenceCase, ConvergenceReport};
use super::spectra::{operator_radius, spectrum, MAX_DENSE_DOFS};
use super::vtk::write_snapshot;
use crate::error::{Error, Result};
use crate::material::{all_presets, CoefficientField, Units};
use crate::mesh::{build_uniform, load_mesh, BoundaryTag, Mesh, UniformGridSpec};
use crate::planewave::{dispersion, select_modes, PlaneWaveSolution};
use crate::solver::{ExactFn, PointSource, Receivers, Signature, Solver, SolverConfig, State, NFIELDS};

pub fn build_mesh(spec: &MeshSpec) -> Result<Mesh> {
    match spec {
        MeshSpec::File(p) => load_mesh(p),
        MeshSpec::Box { dim, lower, upper, k1d, sides } => {
            let mut periodic = [false; 3];
            let mut tags = [[BoundaryTag::Absorbing; 2]; 3];
            for a in 0..3 {
                for s in 0..2 {
                    match sides[a][s] {
                        SideCondition::Periodic => periodic[a] = a < *dim,
                        SideCondition::Tag(t) => tags[a][s] = t,
                    }
                }
            }
            let mut upper = *upper;
            if *dim == 2 {
                upper[2] = 0.0;
            }
            build_uniform(&UniformGridSpec {
                dim: *dim,
                lower: *lower,
                upper,
                k1d: *k1d,
                periodic,
                tags,
            })
        }
    }
}

pub fn build_field(config: &RunConfig) -> Result<CoefficientField> {
    let m = config.material.material()?;
    Ok(match config.material.modulation {
        Some((amplitude, frequency)) => CoefficientField::DensityModulated {
            base: m,
            amplitude,
            frequency,
        },
        None => CoefficientField::Uniform(m),
    })
}

/// Solver, coefficient field and initial state of a `simulate` run.
pub struct Setup {
    pub solver: Solver,
    pub field: CoefficientField,
    pub state: State,
}

pub fn setup_simulation(config: &RunConfig) -> Result<Setup> {
    let mesh = build_mesh(&config.mesh)?;
    let field = build_field(config)?;
    let mut plane_wave = None;
    if let InitialSpec::PlaneWave { wavevector } = &config.initial {
        let m = field
            .as_uniform()
            .ok_or_else(|| Error::Setup("plane-wave initial data needs a uniform material".into()))?;
        plane_wave = Some(Arc::new(PlaneWaveSolution::three_modes(m, *wavevector, m.eta > 0.0)?));
    }
    let exact: Option<ExactFn> = plane_wave.clone().map(|pw| {
        let f: ExactFn = Arc::new(move |x: &[f64; 3], t: f64| pw.evaluate(x, t));
        f
    });
    let sources = config
        .sources
        .iter()
        .map(|s| PointSource {
            x0: s.x,
            beta: s.beta,
            signature: Signature::Ricker { f0: s.f0, t0: s.t0 },
        })
        .collect();
    let sc = SolverConfig {
        alpha_tau: config.solver.alpha_tau,
        alpha_v: config.solver.alpha_v,
        cfl: config.solver.cfl,
        scheme: config.solver.scheme,
        final_time: config.solver.final_time,
        mode: config.solver.mode,
        sources,
        exact,
    };
    let solver = Solver::build(mesh, config.n, &field, config.material.sampling, sc)?;
    let state = match &config.initial {
        InitialSpec::Zero => State::zeros(&solver),
        InitialSpec::PlaneWave { .. } => {
            let pw = plane_wave.expect("plane wave built above");
            State::project(&solver, |x| pw.evaluate(x, 0.0))
        }
        InitialSpec::Random => random_state(&solver, config.seed),
    };
    Ok(Setup { solver, field, state })
}

/// Uniform random nodal values in [-1, 1].
pub fn random_state(solver: &Solver, seed: u64) -> State {
    let mut s = State::zeros(solver);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.data.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    s
}

/// Appends JSON records, one per line.
pub struct Manifest {
    path: PathBuf,
    file: std::io::BufWriter<std::fs::File>,
}

impl Manifest {
    pub fn create(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.jsonl");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            file: std::io::BufWriter::new(file),
        })
    }

    pub fn record(&mut self, value: serde_json::Value) -> Result<()> {
        writeln!(self.file, "{value}").map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }

    /// Config echo and version information.
    pub fn start(dir: &Path, config: &RunConfig) -> Result<Self> {
        let mut m = Self::create(dir)?;
        m.record(json!({"event": "config", "config": config}))?;
        m.record(json!({
            "event": "versions",
            "porowave": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
        }))?;
        Ok(m)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub steps: usize,
    pub dt: f64,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub outputs: Vec<PathBuf>,
}

/// Time loop with energy trace, receivers and snapshots. On a non-finite
/// state the last finite state is written as `abort.vtk` with a diagnostic
/// record before the error is returned.
pub fn run_simulation(config: &RunConfig) -> Result<SimulationSummary> {
    let t0 = Instant::now();
    let dir = &config.output.dir;
    create_dir(dir)?;
    let mut manifest = Manifest::start(dir, config)?;
    let Setup { solver, field, mut state } = setup_simulation(config)?;
    let setup_time = t0.elapsed().as_secs_f64();

    let mut receivers = Receivers::new(&solver, &field, &config.output.receivers)?;
    let (steps, dt) = Solver::uniform_steps(config.solver.final_time - state.t, solver.estimate_dt());
    log::info!(
        "{} elements, N = {}, {} unknowns, {steps} steps of dt = {dt:e}",
        solver.mesh.num_elements(),
        solver.re.n,
        solver.num_dofs()
    );
    let snap_at: Vec<usize> = (1..=config.output.snapshots).map(|i| (i * steps).div_ceil(config.output.snapshots)).collect();

    let energy_path = dir.join("energy.csv");
    let eio = |e| Error::io(&energy_path, e);
    let mut energy_file = std::io::BufWriter::new(std::fs::File::create(&energy_path).map_err(eio)?);
    writeln!(energy_file, "step,t,energy").map_err(eio)?;
    let initial_energy = solver.energy(&state);
    writeln!(energy_file, "0,{:e},{:e}", state.t, initial_energy).map_err(eio)?;
    receivers.record(&solver, &state);

    let mut outputs = vec![energy_path.clone()];
    let mut last_good = state.clone();
    let mut energy = initial_energy;
    for step in 1..=steps {
        last_good.data.copy_from_slice(&state.data);
        last_good.t = state.t;
        if let Err(err) = solver.step(&mut state, dt) {
            let path = dir.join("abort.vtk");
            write_snapshot(&path, &solver, &last_good, &field, &config.output.fields)?;
            manifest.record(json!({
                "event": "abort",
                "step": step,
                "t": last_good.t,
                "energy": energy,
                "error": err.to_string(),
                "snapshot": path,
            }))?;
            return Err(err);
        }
        energy = solver.energy(&state);
        writeln!(energy_file, "{step},{:e},{:e}", state.t, energy).map_err(eio)?;
        receivers.record(&solver, &state);
        if snap_at.contains(&step) {
            let path = dir.join(format!("snapshot_{step:06}.vtk"));
            write_snapshot(&path, &solver, &state, &field, &config.output.fields)?;
            outputs.push(path);
        }
        if steps >= 10 && step % (steps / 10) == 0 {
            log::info!("step {step}/{steps}, t = {:e}, energy = {energy:e}", state.t);
        }
    }
    energy_file.flush().map_err(eio)?;
    outputs.extend(receivers.write_csv(dir)?);
    let summary = SimulationSummary {
        steps,
        dt,
        final_time: state.t,
        initial_energy,
        final_energy: energy,
        outputs,
    };
    manifest.record(json!({
        "event": "timing",
        "setup_seconds": setup_time,
        "total_seconds": t0.elapsed().as_secs_f64(),
    }))?;
    manifest.record(json!({"event": "summary", "summary": &summary}))?;
    Ok(summary)
}

/// Reads an energy trace and returns the largest relative per-step increase.
pub fn audit_energy_trace(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut prev: Option<f64> = None;
    let mut worst = 0.0_f64;
    for (i, line) in text.lines().enumerate().skip(1) {
        let e: f64 = line
            .rsplit(',')
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "bad energy record".into(),
            })?;
        if let Some(p) = prev {
            if p > 0.0 {
                worst = worst.max((e - p) / p);
            }
        }
        prev = Some(e);
    }
    Ok(worst)
}

/// Plane-wave convergence study on the unit square.
pub fn run_converge(config: &RunConfig) -> Result<ConvergenceReport> {
    let dir = &config.output.dir;
    create_dir(dir)?;
    let t0 = Instant::now();
    let mut manifest = Manifest::start(dir, config)?;
    let base = ConvergenceCase {
        material: config.material.material()?,
        n: config.converge.degrees[0],
        k1d: config.converge.levels[0],
        viscous: config.material.viscous,
        alpha: config.solver.alpha_tau,
        scheme: config.solver.scheme,
        mode: config.solver.mode,
        final_time: config.converge.final_time,
        cfl: config.solver.cfl,
        wavevector: config.converge.wavevector,
        dt: None,
    };
    if config.solver.alpha_tau != config.solver.alpha_v {
        return Err(Error::Config("convergence studies use a single penalty parameter for both fields".into()));
    }
    let report = run_convergence(&base, &config.converge.degrees, &config.converge.levels)?;
    let path = dir.join("convergence.csv");
    report.write_csv(&path)?;
    for &n in &config.converge.degrees {
        log::info!("N = {n}: rates {:?}", report.rates(n));
    }
    manifest.record(json!({"event": "report", "report": &report, "csv": path}))?;
    manifest.record(json!({"event": "timing", "total_seconds": t0.elapsed().as_secs_f64()}))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectraRow {
    pub alpha: f64,
    pub n: usize,
    pub spectral_radius: f64,
    pub arnoldi_radius: f64,
    pub max_real: Option<f64>,
}

/// Spectrum of the homogeneous operator for each configured α. Cases above
/// the dense-assembly guard get the matrix-free radius only.
pub fn run_spectra(config: &RunConfig) -> Result<Vec<SpectraRow>> {
    let dir = &config.output.dir;
    create_dir(dir)?;
    let mut manifest = Manifest::start(dir, config)?;
    let mesh = build_mesh(&config.mesh)?;
    let field = build_field(config)?;
    let mut rows = Vec::new();
    for &alpha in &config.spectra.alphas {
        let sc = SolverConfig {
            alpha_tau: alpha,
            alpha_v: alpha,
            mode: config.solver.mode,
            ..Default::default()
        };
        let solver = Solver::build(mesh.clone(), config.n, &field, config.material.sampling, sc)?;
        let row = if solver.num_dofs() <= MAX_DENSE_DOFS {
            let rep = spectrum(&solver)?;
            let path = dir.join(format!("eigenvalues_alpha_{alpha}.csv"));
            rep.write_csv(&path)?;
            SpectraRow {
                alpha,
                n: rep.n,
                spectral_radius: rep.spectral_radius,
                arnoldi_radius: rep.arnoldi_radius,
                max_real: Some(rep.max_real),
            }
        } else {
            let r = operator_radius(&solver)?;
            SpectraRow {
                alpha,
                n: solver.num_dofs(),
                spectral_radius: r,
                arnoldi_radius: r,
                max_real: None,
            }
        };
        log::info!("alpha = {alpha}: radius {:e}", row.spectral_radius);
        rows.push(row);
    }
    let path = dir.join("spectra.csv");
    let io = |e| Error::io(&path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
    writeln!(f, "alpha,n,spectral_radius,arnoldi_radius,max_real").map_err(io)?;
    for r in &rows {
        let mr = r.max_real.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(f, "{},{},{:e},{:e},{mr}", r.alpha, r.n, r.spectral_radius, r.arnoldi_radius).map_err(io)?;
    }
    f.flush().map_err(io)?;
    manifest.record(json!({"event": "spectra", "rows": &rows}))?;
    Ok(rows)
}

/// Phase velocity and attenuation over propagation angles.
pub fn run_dispersion(config: &RunConfig) -> Result<PathBuf> {
    let dir = &config.output.dir;
    create_dir(dir)?;
    let mut manifest = Manifest::start(dir, config)?;
    let m = config.material.material()?;
    let rows = dispersion(&m, config.dispersion.wavenumber, &config.dispersion.angles)?;
    let path = dir.join("dispersion.csv");
    let io = |e| Error::io(&path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
    writeln!(f, "angle,mode,phase_velocity,attenuation").map_err(io)?;
    for r in &rows {
        writeln!(f, "{},{},{:e},{:e}", r.angle_deg, r.mode.name(), r.phase_velocity, r.attenuation).map_err(io)?;
    }
    f.flush().map_err(io)?;
    manifest.record(json!({"event": "output", "csv": &path}))?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct MaterialRow {
    pub name: String,
    pub rho: f64,
    /// Fast P, S and slow P speeds along x1 and x3 (scaled units).
    pub speeds_x1: [f64; 3],
    pub speeds_x3: [f64; 3],
    pub omega_c: f64,
    pub decay_rates: [f64; 3],
}

/// Derived properties of every preset, in scaled units.
pub fn material_table() -> Result<Vec<MaterialRow>> {
    let mut rows = Vec::new();
    for m in all_presets() {
        let s = m.in_units(Units::Scaled);
        let d = s.derive()?;
        let blocks = s.system()?.first_order_from_symmetric();
        let speeds = |k: [f64; 3]| -> Result<[f64; 3]> {
            let modes = select_modes(&blocks, &k, false)?;
            Ok(modes.map(|md| md.phase_velocity()))
        };
        rows.push(MaterialRow {
            name: s.name.clone(),
            rho: d.rho,
            speeds_x1: speeds([1.0, 0.0, 0.0])?,
            speeds_x3: speeds([0.0, 0.0, 1.0])?,
            omega_c: d.omega_c,
            decay_rates: d.decay_rates(),
        });
    }
    Ok(rows)
}

pub fn run_materials(config: &RunConfig) -> Result<(PathBuf, Vec<MaterialRow>)> {
    let dir = &config.output.dir;
    create_dir(dir)?;
    let rows = material_table()?;
    let path = dir.join("materials.csv");
    let io = |e| Error::io(&path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
    writeln!(f, "name,rho,fast_p_x1,s_x1,slow_p_x1,fast_p_x3,s_x3,slow_p_x3,omega_c,decay1,decay2,decay3").map_err(io)?;
    for r in &rows {
        let mut line = format!("{},{:e}", r.name, r.rho);
        for v in r.speeds_x1.iter().chain(&r.speeds_x3) {
            line.push_str(&format!(",{v:.6}"));
        }
        line.push_str(&format!(",{:e}", r.omega_c));
        for v in &r.decay_rates {
            line.push_str(&format!(",{v:e}"));
        }
        writeln!(f, "{line}").map_err(io)?;
    }
    f.flush().map_err(io)?;
    Ok((path, rows))
}

/// Relative L² distance ‖a − b‖/‖b‖ of two states on the same solver.
pub fn relative_difference(solver: &Solver, a: &State, b: &State) -> Result<f64> {
    let re = &solver.re;
    let (np, nf, nq) = (re.np, solver.layout.nfields(), re.nq());
    let blk = np * nf;
    let mut da = vec![0.0; nq * nf];
    let mut db = vec![0.0; nq * nf];
    let (mut num, mut den) = (0.0, 0.0);
    for (k, g) in solver.mesh.geom.iter().enumerate() {
        let (ua, ub) = (&a.data[k * blk..(k + 1) * blk], &b.data[k * blk..(k + 1) * blk]);
        crate::wadg::gemm_into(&mut da, &re.vq, ua, nf, 0.0);
        crate::wadg::gemm_into(&mut db, &re.vq, ub, nf, 0.0);
        for a in 0..nf {
            for q in 0..nq {
                let w = g.j * re.quad.weights[q];
                let (x, y) = (da[a * nq + q], db[a * nq + q]);
                num += w * (x - y) * (x - y);
                den += w * y * y;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Setup("reference state has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// Density-modulated medium run twice, with pointwise (weight-adjusted) and
/// element-averaged coefficients; returns the relative L² difference of the
/// final states.
pub fn micro_heterogeneity_difference(config: &RunConfig) -> Result<f64> {
    use crate::material::Sampling;
    if config.material.modulation.is_none() {
        return Err(Error::Config("the comparison needs a [material] modulation".into()));
    }
    let mut runs = Vec::with_capacity(2);
    for sampling in [Sampling::Pointwise, Sampling::ElementAverage] {
        let mut c = config.clone();
        c.material.sampling = sampling;
        let Setup { solver, mut state, .. } = setup_simulation(&c)?;
        solver.advance(&mut state, c.solver.final_time, |_| Ok(()))?;
        runs.push((solver, state));
    }
    let (wadg, avg) = (&runs[0], &runs[1]);
    relative_difference(&wadg.0, &avg.1, &wadg.1)
}

/// Configuration of the micro-heterogeneity comparison: isotropic sandstone
/// with ρ scaled by 1 + 0.5 sin(2πx) sin(2πy) on the unit square, a Ricker
/// source on τ22 and p at the center, absorbing boundaries.
pub fn micro_heterogeneity_config(n: usize, k1d: usize) -> RunConfig {
    let mut c = RunConfig::default_for(Experiment::Simulate);
    c.material.source = super::config::MaterialSource::Preset("sandstone_isotropic".into());
    c.material.plane_xz = false;
    c.material.modulation = Some((0.5, 1.0));
    c.mesh = MeshSpec::Box {
        dim: 2,
        lower: [0.0; 3],
        upper: [1.0, 1.0, 0.0],
        k1d,
        sides: [[SideCondition::Tag(BoundaryTag::Absorbing); 2]; 3],
    };
    c.n = n;
    c.solver.final_time = 0.12;
    let mut beta = [0.0; NFIELDS];
    beta[1] = 1.0;
    beta[6] = 1.0;
    c.sources = vec![super::config::SourceSpec {
        x: [0.5, 0.5, 0.0],
        f0: 12.0,
        t0: 0.1,
        beta,
    }];
    c.output.receivers.clear();
    c.output.snapshots = 0;
    c
}
