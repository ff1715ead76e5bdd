//! Low-storage Runge–Kutta stepping, the analytic diffusive substep and
//! Strang splitting.

use super::{RhsOptions, Scheme, Solver, State};
use crate::error::Result;

/// Carpenter–Kennedy five-stage fourth-order low-storage coefficients.
pub const RK4A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const RK4B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const RK4C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// One LSRK4(5) step of u' = f(u, t); `res` and `k` are scratch buffers of
/// the same length as `u`.
pub fn lsrk45_step<F>(u: &mut [f64], t: f64, dt: f64, res: &mut [f64], k: &mut [f64], mut f: F) -> Result<()>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
{
    res.iter_mut().for_each(|x| *x = 0.0);
    for s in 0..5 {
        f(u, t + RK4C[s] * dt, k)?;
        for ((r, ki), ui) in res.iter_mut().zip(k.iter()).zip(u.iter_mut()) {
            *r = RK4A[s] * *r + dt * ki;
            *ui += RK4B[s] * *r;
        }
    }
    Ok(())
}

impl Solver {
    fn lsrk(&self, state: &mut State, dt: f64, opts: RhsOptions) -> Result<()> {
        let n = state.data.len();
        let mut res = vec![0.0; n];
        let mut k = vec![0.0; n];
        lsrk45_step(&mut state.data, state.t, dt, &mut res, &mut k, |u, t, out| {
            self.rhs_with(u, t, opts, out)
        })?;
        state.t += dt;
        self.check_finite(state)
    }

    /// LSRK4(5) step of the full operator, dissipation included.
    pub fn step_unified(&self, state: &mut State, dt: f64) -> Result<()> {
        self.lsrk(state, dt, RhsOptions::default())
    }

    /// LSRK4(5) step of the conservative part only.
    pub fn step_conservative(&self, state: &mut State, dt: f64) -> Result<()> {
        self.lsrk(
            state,
            dt,
            RhsOptions {
                dissipation: false,
                ..Default::default()
            },
        )
    }

    /// Exact solution of v' = G_vq q, q' = λ q per node and direction:
    /// q ← e^{λdt} q, v ← v − r(e^{λdt} − 1) q with r = ρ_f/ρ. Leaves time
    /// unchanged.
    pub fn diffusive_update(&self, state: &mut State, dt: f64) {
        let (np, nf, ns) = (state.np, state.nfields, self.layout.ns());
        let pairs: Vec<(usize, usize, usize)> = (0..3)
            .filter_map(|i| {
                let v = self.layout.vel.iter().position(|&x| x == i)?;
                let q = self.layout.vel.iter().position(|&x| x == i + 3)?;
                Some((i, ns + v, ns + q))
            })
            .collect();
        for (k, dk) in self.coeffs.decay.iter().enumerate() {
            let blk = &mut state.data[k * np * nf..(k + 1) * np * nf];
            for j in 0..np {
                let e = if dk.len() == 1 { &dk[0] } else { &dk[j] };
                for &(i, v, q) in &pairs {
                    let lam = e[i];
                    if lam == 0.0 {
                        continue;
                    }
                    let g = (lam * dt).exp();
                    let q0 = blk[q * np + j];
                    blk[q * np + j] = g * q0;
                    blk[v * np + j] -= e[i + 3] * (g - 1.0) * q0;
                }
            }
        }
    }

    /// Half diffusive step, conservative step, half diffusive step.
    pub fn step_strang(&self, state: &mut State, dt: f64) -> Result<()> {
        self.diffusive_update(state, 0.5 * dt);
        self.step_conservative(state, dt)?;
        self.diffusive_update(state, 0.5 * dt);
        self.check_finite(state)
    }

    pub fn step(&self, state: &mut State, dt: f64) -> Result<()> {
        match self.config.scheme {
            Scheme::Unified => self.step_unified(state, dt),
            Scheme::Strang => self.step_strang(state, dt),
        }
    }

    /// Step size at most `dt_max` that lands exactly on `t_end`.
    pub fn uniform_steps(t_span: f64, dt_max: f64) -> (usize, f64) {
        if t_span <= 0.0 {
            return (0, 0.0);
        }
        let n = (t_span / dt_max).ceil().max(1.0) as usize;
        (n, t_span / n as f64)
    }

    /// Advance to `t_end` with uniform steps no larger than the estimate,
    /// calling `observe` after every step. Returns the number of steps.
    pub fn advance<F>(&self, state: &mut State, t_end: f64, mut observe: F) -> Result<usize>
    where
        F: FnMut(&State) -> Result<()>,
    {
        let (n, dt) = Self::uniform_steps(t_end - state.t, self.estimate_dt());
        for _ in 0..n {
            self.step(state, dt)?;
            observe(state)?;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_consistent() {
        // u' = 1 must advance by exactly dt.
        let mut w = 0.0;
        let mut p = 0.0;
        for s in 0..5 {
            p = RK4A[s] * p + 1.0;
            w += RK4B[s] * p;
        }
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_order() {
        for &z in &[0.1_f64, 0.2, 0.5, 1.0] {
            for lam in [-1.0, 0.5] {
                let mut u = [1.0];
                let (mut r, mut k) = ([0.0], [0.0]);
                let dt = z;
                lsrk45_step(&mut u, 0.0, dt, &mut r, &mut k, |u, _, o| {
                    o[0] = lam * u[0];
                    Ok(())
                })
                .unwrap();
                let err = (u[0] - (lam * dt).exp()).abs();
                assert!(err <= 0.02 * (lam * dt).abs().powi(5), "z = {z}, err = {err:e}");
            }
        }
    }

    #[test]
    fn zero_rhs_leaves_state() {
        let mut u = vec![1.0, -2.0, 3.0];
        let (mut r, mut k) = (vec![0.0; 3], vec![0.0; 3]);
        lsrk45_step(&mut u, 0.0, 0.1, &mut r, &mut k, |_, _, o| {
            o.iter_mut().for_each(|x| *x = 0.0);
            Ok(())
        })
        .unwrap();
        assert_eq!(u, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn time_dependent_forcing_fourth_order() {
        // u' = cos t, u(0) = 0.
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let mut u = [0.0];
            let (mut r, mut k) = ([0.0], [0.0]);
            for i in 0..n {
                lsrk45_step(&mut u, i as f64 * dt, dt, &mut r, &mut k, |_, t, o| {
                    o[0] = t.cos();
                    Ok(())
                })
                .unwrap();
            }
            (u[0] - 1f64.sin()).abs()
        };
        let rate = (err(0.1) / err(0.05)).log2();
        assert!(rate > 3.7, "rate {rate}");
    }

    #[test]
    fn uniform_steps_land_on_end() {
        let (n, dt) = Solver::uniform_steps(1.0, 0.3);
        assert_eq!(n, 4);
        assert!((n as f64 * dt - 1.0).abs() < 1e-15);
        assert_eq!(Solver::uniform_steps(0.0, 0.3).0, 0);
    }
}
