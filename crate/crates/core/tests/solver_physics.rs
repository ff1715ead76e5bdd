mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use porowave::harness::l2_relative_error;
use porowave::harness::run::random_state;
use porowave::mesh::{BoundaryTag, UniformGridSpec};
use porowave::planewave::PlaneWaveSolution;
use porowave::solver::{PointSource, RhsOptions, RunMode, Scheme, Signature, Solver, SolverConfig, State, NFIELDS};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const K: [f64; 3] = [2.0 * PI, 2.0 * PI, 0.0];

fn homogeneous(solver: &Solver, u: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; u.len()];
    let opts = RhsOptions {
        dissipation: true,
        sources: false,
        boundary_data: false,
    };
    solver.rhs_with(u, 0.0, opts, &mut r).unwrap();
    r
}

/// Bilinear energy form B(u, r) = (E(u + r) − E(u − r)) / 4, i.e. dE/dt
/// when r is the time derivative of u.
fn energy_rate(solver: &Solver, u: &State, r: &[f64]) -> (f64, f64) {
    let mut plus = u.clone();
    let mut minus = u.clone();
    for ((p, m), x) in plus.data.iter_mut().zip(minus.data.iter_mut()).zip(r) {
        *p += x;
        *m -= x;
    }
    let (ep, em) = (solver.energy(&plus), solver.energy(&minus));
    ((ep - em) / 4.0, ep + em)
}

#[test]
fn zero_state_has_zero_rhs() {
    let s = solver_on(mixed_boundaries(2), 3, &sandstone(), with_alpha(1.0));
    let u = State::zeros(&s);
    let mut r = vec![1.0; u.data.len()];
    s.rhs(&u.data, 0.3, &mut r).unwrap();
    assert_eq!(max_abs(&r), 0.0);
}

#[test]
fn plane_wave_rhs_is_consistent() {
    let mat = sandstone();
    let pw = Arc::new(PlaneWaveSolution::three_modes(&mat, K, true).unwrap());
    for n in [2, 3] {
        let mut errs = Vec::new();
        for k1d in [4, 8, 16] {
            let exact = pw.clone();
            let cfg = SolverConfig {
                exact: Some(Arc::new(move |x, t| exact.evaluate(x, t))),
                ..Default::default()
            };
            let s = solver_on(UniformGridSpec::unit(2, k1d, BoundaryTag::ExactSolution), n, &mat, cfg);
            let u = State::project(&s, |x| pw.evaluate(x, 0.0));
            let mut r = State::zeros(&s);
            s.rhs(&u.data, 0.0, &mut r.data).unwrap();
            errs.push(l2_relative_error(&s, &r, &|x| pw.time_derivative(x, 0.0)).unwrap());
        }
        // Penalty terms amplify projection jumps, so only the finest pair
        // is asymptotic.
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "N = {n}: errors {errs:?}");
        let rate = (errs[1] / errs[2]).log2();
        assert!(rate > n as f64 - 0.5, "N = {n}: errors {errs:?}");
    }
}

#[test]
fn energy_of_constant_state_matches_hessian_form() {
    let mat = sandstone();
    let sys = mat.system().unwrap();
    let s = solver_on(UniformGridSpec::unit(2, 3, BoundaryTag::Absorbing), 2, &mat, with_alpha(1.0));
    let c: [f64; NFIELDS] = std::array::from_fn(|i| 0.3 + 0.1 * i as f64 - 0.02 * (i * i) as f64);
    let u = State::project(&s, |_| c);
    let mut e = 0.0;
    for a in 0..7 {
        for b in 0..7 {
            e += c[a] * sys.qs[(a, b)] * c[b];
        }
    }
    for a in 0..6 {
        for b in 0..6 {
            e += c[7 + a] * sys.qv[(a, b)] * c[7 + b];
        }
    }
    let expect = 0.5 * e;
    assert!((s.energy(&u) - expect).abs() < 1e-12 * expect, "{} vs {expect}", s.energy(&u));
}

#[test]
fn compact_mode_matches_full_system_in_plane() {
    let mat = inviscid();
    let pw = PlaneWaveSolution::three_modes(&mat, K, false).unwrap();
    let build = |mode| {
        let cfg = SolverConfig {
            mode,
            ..Default::default()
        };
        solver_on(UniformGridSpec::periodic_unit(2, 3), 3, &mat, cfg)
    };
    let (full, compact) = (build(RunMode::Full13), build(RunMode::Compact2d));
    let mut uf = State::project(&full, |x| pw.evaluate(x, 0.0));
    let mut uc = State::project(&compact, |x| pw.evaluate(x, 0.0));
    let dt = full.estimate_dt();
    for _ in 0..5 {
        full.step(&mut uf, dt).unwrap();
        compact.step(&mut uc, dt).unwrap();
    }
    let scale = max_abs(&uf.data);
    for k in 0..full.mesh.num_elements() {
        for a in 0..compact.layout.nfields() {
            let g = compact.layout.global_of(a);
            let b = full.layout.local_of(g).unwrap();
            let d = uc.field(k, a).iter().zip(uf.field(k, b)).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(d < 1e-12 * scale, "element {k} field {g}: {d:e}");
        }
    }
}

#[test]
fn point_source_load_integrates_to_its_weights() {
    let mat = sandstone();
    let sys = mat.system().unwrap();
    let mut beta = [0.0; NFIELDS];
    beta[1] = 1.0;
    beta[6] = 0.5;
    beta[8] = -0.25;
    let cfg = SolverConfig {
        sources: vec![PointSource {
            x0: [0.37, 0.61, 0.0],
            beta,
            signature: Signature::Custom(Arc::new(|t| 0.7 + t)),
        }],
        ..Default::default()
    };
    let s = solver_on(UniformGridSpec::unit(2, 3, BoundaryTag::Absorbing), 3, &mat, cfg);
    let u = State::zeros(&s);
    let mut r = State::zeros(&s);
    s.rhs(&u.data, 0.1, &mut r.data).unwrap();
    // ∫ Q r dx over the domain; Q r is the weak-form load β g(t) φ.
    let re = &s.re;
    let mut total = [0.0; NFIELDS];
    for (k, g) in s.mesh.geom.iter().enumerate() {
        for q in 0..re.nq() {
            let val: [f64; NFIELDS] =
                std::array::from_fn(|a| (0..re.np).map(|j| re.vq[(q, j)] * r.field(k, a)[j]).sum());
            let w = g.j * re.quad.weights[q];
            for a in 0..7 {
                total[a] += w * (0..7).map(|b| sys.qs[(a, b)] * val[b]).sum::<f64>();
            }
            for a in 0..6 {
                total[7 + a] += w * (0..6).map(|b| sys.qv[(a, b)] * val[7 + b]).sum::<f64>();
            }
        }
    }
    for a in 0..NFIELDS {
        assert!((total[a] - 0.8 * beta[a]).abs() < 1e-10, "field {a}: {} vs {}", total[a], 0.8 * beta[a]);
    }
}

#[test]
fn strang_equals_unified_without_dissipation() {
    let mat = inviscid();
    let mk = |scheme| {
        let cfg = SolverConfig {
            scheme,
            ..Default::default()
        };
        solver_on(mixed_boundaries(2), 2, &mat, cfg)
    };
    let (a, b) = (mk(Scheme::Unified), mk(Scheme::Strang));
    let mut ua = random_state(&a, 11);
    let mut ub = ua.clone();
    let dt = a.estimate_dt();
    for _ in 0..3 {
        a.step(&mut ua, dt).unwrap();
        b.step(&mut ub, dt).unwrap();
    }
    let d = ua.data.iter().zip(&ub.data).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(d <= 1e-14 * max_abs(&ua.data), "{d:e}");
}

#[test]
fn strang_converges_to_unified_as_dt_shrinks() {
    let mat = sandstone();
    let mk = |scheme| {
        let cfg = SolverConfig {
            scheme,
            ..Default::default()
        };
        solver_on(mixed_boundaries(2), 2, &mat, cfg)
    };
    let (a, b) = (mk(Scheme::Unified), mk(Scheme::Strang));
    let init = random_state(&a, 5);
    let mut diffs = Vec::new();
    for div in [1.0, 2.0, 4.0] {
        let (steps, dt) = Solver::uniform_steps(0.05, a.estimate_dt() / div);
        let (mut ua, mut ub) = (init.clone(), init.clone());
        for _ in 0..steps {
            a.step(&mut ua, dt).unwrap();
            b.step(&mut ub, dt).unwrap();
        }
        let d: f64 = ua.data.iter().zip(&ub.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        diffs.push(d);
    }
    assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
}

#[test]
fn step_estimate_keeps_operator_radius_in_stability_region() {
    // LSRK4(5) is stable on the imaginary axis up to about 3.3 and on the
    // negative real axis up to about 4.4.
    for alpha in [0.0, 1.0, 4.0] {
        let s = solver_on(UniformGridSpec::periodic_unit(2, 2), 2, &inviscid(), with_alpha(alpha));
        let rho = porowave::harness::spectra::operator_radius(&s).unwrap();
        let z = rho * s.estimate_dt();
        assert!(z < 3.3, "alpha = {alpha}: radius·dt = {z}");
    }
}

#[test]
fn semi_discrete_energy_rate_is_nonpositive() {
    let cases = [
        (mixed_boundaries(2), sandstone()),
        (mixed_boundaries(2), inviscid()),
        (UniformGridSpec::periodic_unit(2, 2), sandstone()),
    ];
    let solvers: Vec<Vec<Solver>> = cases
        .iter()
        .map(|(spec, mat)| [0.0, 0.5, 2.0].iter().map(|&a| solver_on(spec.clone(), 2, mat, with_alpha(a))).collect())
        .collect();
    let mut runner = TestRunner::new(Config {
        cases: 24,
        ..Config::default()
    });
    runner
        .run(&(0..cases.len(), 0usize..3, any::<u64>()), |(c, a, seed)| {
            let s = &solvers[c][a];
            let u = random_state(s, seed);
            let r = homogeneous(s, &u.data);
            let (rate, scale) = energy_rate(s, &u, &r);
            prop_assert!(rate <= 1e-12 * scale, "case {c} alpha index {a}: rate {rate:e}");
            Ok(())
        })
        .unwrap();
}

#[test]
fn central_flux_conserves_energy_on_periodic_mesh() {
    let s = solver_on(UniformGridSpec::periodic_unit(2, 2), 3, &inviscid(), with_alpha(0.0));
    for seed in 0..4 {
        let u = random_state(&s, seed);
        let r = homogeneous(&s, &u.data);
        let (rate, scale) = energy_rate(&s, &u, &r);
        assert!(rate.abs() <= 1e-12 * scale, "rate {rate:e}");
    }
}

#[test]
fn homogeneous_operator_is_linear() {
    let s = solver_on(mixed_boundaries(2), 2, &sandstone(), with_alpha(1.0));
    let mut runner = TestRunner::new(Config {
        cases: 24,
        ..Config::default()
    });
    runner
        .run(&(any::<u64>(), -3.0..3.0f64, -3.0..3.0f64), |(seed, a, b)| {
            let u = random_state(&s, seed);
            let w = random_state(&s, seed.wrapping_add(1));
            let mix: Vec<f64> = u.data.iter().zip(&w.data).map(|(x, y)| a * x + b * y).collect();
            let (ru, rw, rm) = (homogeneous(&s, &u.data), homogeneous(&s, &w.data), homogeneous(&s, &mix));
            let scale = max_abs(&ru).max(max_abs(&rw)) * (a.abs() + b.abs() + 1.0);
            for i in 0..rm.len() {
                prop_assert!((rm[i] - a * ru[i] - b * rw[i]).abs() <= 1e-12 * scale);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn energy_is_quadratic() {
    let s = solver_on(mixed_boundaries(2), 2, &sandstone(), with_alpha(1.0));
    let mut runner = TestRunner::new(Config {
        cases: 32,
        ..Config::default()
    });
    runner
        .run(&(any::<u64>(), -10.0..10.0f64), |(seed, c)| {
            let mut u = random_state(&s, seed);
            let e = s.energy(&u);
            prop_assert!(e > 0.0);
            u.scale(c);
            prop_assert!((s.energy(&u) - c * c * e).abs() <= 1e-13 * c * c * e);
            Ok(())
        })
        .unwrap();
}
