use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use porowave::error::{Error, Result};
use porowave::harness::config::{MaterialSource, MeshSpec};
use porowave::harness::{self, Experiment, RunConfig};
use porowave::refelem::ReferenceElement;
use porowave::solver::Scheme;

#[derive(Parser, Debug)]
#[command(name = "porowave", version, about = "Weight-adjusted DG solver for Biot poroelastic waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Time-domain simulation with point sources or initial data.
    Simulate,
    /// Plane-wave h-convergence study.
    Converge,
    /// Eigenvalues of the semi-discrete operator.
    Spectra,
    /// Phase velocity and attenuation sweeps.
    Dispersion,
    /// Derived properties of the material presets.
    Materials,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SchemeArg {
    Unified,
    Strang,
}

#[derive(clap::Args, Debug)]
struct Options {
    /// Configuration file; built-in defaults of the experiment otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Material preset name.
    #[arg(long, global = true, conflicts_with = "material_file")]
    material: Option<String>,
    /// Material parameter file.
    #[arg(long, global = true)]
    material_file: Option<PathBuf>,
    /// Polynomial degree (the single degree of a convergence study).
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Elements per direction (the coarsest level of a convergence study).
    #[arg(long = "K1D", global = true)]
    k1d: Option<usize>,
    #[arg(long, global = true)]
    alpha_tau: Option<f64>,
    #[arg(long, global = true)]
    alpha_v: Option<f64>,
    #[arg(long, global = true)]
    cfl: Option<f64>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the reference-element operators as CSV into the output
    /// directory before running.
    #[arg(long, global = true)]
    dump_refelem: bool,
}

fn experiment(c: Command) -> Experiment {
    match c {
        Command::Simulate => Experiment::Simulate,
        Command::Converge => Experiment::Converge,
        Command::Spectra => Experiment::Spectra,
        Command::Dispersion => Experiment::Dispersion,
        Command::Materials => Experiment::Materials,
    }
}

fn configure(exp: Experiment, o: &Options) -> Result<RunConfig> {
    let mut c = match &o.config {
        Some(path) => RunConfig::load(path, exp)?,
        None => RunConfig::default_for(exp),
    };
    if let Some(name) = &o.material {
        c.material.source = MaterialSource::Preset(name.clone());
    }
    if let Some(path) = &o.material_file {
        c.material.source = MaterialSource::File(path.clone());
    }
    if let Some(n) = o.n {
        c.n = n;
        c.converge.degrees = vec![n];
    }
    if let Some(k) = o.k1d {
        match &mut c.mesh {
            MeshSpec::Box { k1d, .. } => *k1d = k,
            MeshSpec::File(_) => return Err(Error::Config("--K1D needs a generated box mesh".into())),
        }
        let levels = c.converge.levels.len().max(3);
        c.converge.levels = (0..levels).map(|j| k << j).collect();
    }
    if let Some(a) = o.alpha_tau {
        c.solver.alpha_tau = a;
    }
    if let Some(a) = o.alpha_v {
        c.solver.alpha_v = a;
    }
    if let Some(cfl) = o.cfl {
        c.solver.cfl = cfl;
    }
    if let Some(s) = o.scheme {
        c.solver.scheme = match s {
            SchemeArg::Unified => Scheme::Unified,
            SchemeArg::Strang => Scheme::Strang,
        };
    }
    if let Some(dir) = &o.out {
        c.output.dir = dir.clone();
    }
    c.validate()?;
    Ok(c)
}

fn dump_refelem(c: &RunConfig) -> Result<()> {
    let dim = match &c.mesh {
        MeshSpec::Box { dim, .. } => *dim,
        MeshSpec::File(_) => harness::run::build_mesh(&c.mesh)?.dim,
    };
    let dir = c.output.dir.join("refelem");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    ReferenceElement::build(dim, c.n)?.dump_csv(&dir)?;
    log::info!("reference element written to {}", dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let exp = experiment(cli.command);
    let config = configure(exp, &cli.opts)?;
    if cli.opts.dump_refelem {
        dump_refelem(&config)?;
    }
    match exp {
        Experiment::Simulate => {
            let s = harness::run_simulation(&config)?;
            println!(
                "{} steps of dt = {:e} to t = {:e}; energy {:e} -> {:e}",
                s.steps, s.dt, s.final_time, s.initial_energy, s.final_energy
            );
        }
        Experiment::Converge => {
            let r = harness::run_converge(&config)?;
            println!("N,h,error");
            for c in &r.results {
                println!("{},{},{:e}", c.n, c.h, c.error);
            }
            for &n in &config.converge.degrees {
                let rates: Vec<String> = r.rates(n).iter().map(|v| format!("{v:.3}")).collect();
                println!("N = {n}: rates {}", rates.join(" "));
            }
        }
        Experiment::Spectra => {
            for row in harness::run_spectra(&config)? {
                let mr = row.max_real.map(|v| format!("{v:e}")).unwrap_or_else(|| "n/a".into());
                println!(
                    "alpha = {}: {} dofs, radius {:e} (Arnoldi {:e}), max Re {mr}",
                    row.alpha, row.n, row.spectral_radius, row.arnoldi_radius
                );
            }
        }
        Experiment::Dispersion => {
            let path = harness::run_dispersion(&config)?;
            println!("wrote {}", path.display());
        }
        Experiment::Materials => {
            let (path, rows) = harness::run_materials(&config)?;
            println!("{:<24} {:>10} {:>10} {:>10} {:>12}", "material", "fast P", "S", "slow P", "omega_c");
            for r in rows {
                println!(
                    "{:<24} {:>10.4} {:>10.4} {:>10.4} {:>12.4e}",
                    r.name, r.speeds_x1[0], r.speeds_x1[1], r.speeds_x1[2], r.omega_c
                );
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
