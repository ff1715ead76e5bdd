//! Orthogonal (Koornwinder–Dubiner) polynomial bases on the bi-unit simplex.
//!
//! Collapsed-coordinate Jacobi products are evaluated through homogenized
//! recurrences, which avoids the coordinate singularity at the collapsed
//! vertex. Gradients come from forward-mode dual numbers.

use std::ops::{Add, Mul, Sub};

/// Value plus gradient with respect to up to three reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: [f64; 3],
}

impl Dual {
    pub const fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 3] }
    }
    pub fn variable(v: f64, k: usize) -> Self {
        let mut g = [0.0; 3];
        g[k] = 1.0;
        Self { v, g }
    }
    fn scale(self, c: f64) -> Self {
        Self {
            v: self.v * c,
            g: [self.g[0] * c, self.g[1] * c, self.g[2] * c],
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1], self.g[2] + o.g[2]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            g: [self.g[0] - o.g[0], self.g[1] - o.g[1], self.g[2] - o.g[2]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            g: [
                self.g[0] * o.v + self.v * o.g[0],
                self.g[1] * o.v + self.v * o.g[1],
                self.g[2] * o.v + self.v * o.g[2],
            ],
        }
    }
}

impl Mul<Dual> for f64 {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        o.scale(self)
    }
}

/// Homogenized Jacobi polynomials `y^n P_n^{(alpha,0)}(x/y)` for n = 0..=nmax.
pub fn jacobi_homogeneous(nmax: usize, alpha: f64, x: Dual, y: Dual) -> Vec<Dual> {
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(Dual::constant(1.0));
    if nmax == 0 {
        return p;
    }
    p.push(0.5 * ((alpha + 2.0) * x + alpha * y));
    let y2 = y * y;
    for n in 1..nmax {
        let nf = n as f64;
        let a = 2.0 * nf + alpha;
        let c0 = 2.0 * (nf + 1.0) * (nf + alpha + 1.0) * a;
        let c1 = (a + 1.0) * (a + 2.0) * a;
        let c2 = (a + 1.0) * alpha * alpha;
        let c3 = 2.0 * (nf + alpha) * nf * (a + 2.0);
        let next = (1.0 / c0) * ((c1 * x + c2 * y) * p[n] - c3 * (y2 * p[n - 1]));
        p.push(next);
    }
    p
}

/// Ordered multi-indices (i, j) with i + j <= n.
pub fn triangle_indices(n: usize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            out.push([i, j]);
        }
    }
    out
}

/// Ordered multi-indices (i, j, k) with i + j + k <= n.
pub fn tet_indices(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            for k in 0..=n - i - j {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Unnormalized orthogonal basis and gradients at one point of the reference
/// triangle.
pub fn triangle_basis(n: usize, r: f64, s: f64) -> Vec<Dual> {
    let rd = Dual::variable(r, 0);
    let sd = Dual::variable(s, 1);
    let one = Dual::constant(1.0);
    let x = rd + 0.5 * (one + sd);
    let y = 0.5 * (one - sd);
    let pa = jacobi_homogeneous(n, 0.0, x, y);
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        let pb = jacobi_homogeneous(n - i, (2 * i + 1) as f64, sd, one);
        for pbj in pb.iter().take(n - i + 1) {
            out.push(pa[i] * *pbj);
        }
    }
    out
}

/// Unnormalized orthogonal basis and gradients at one point of the reference
/// tetrahedron.
pub fn tet_basis(n: usize, r: f64, s: f64, t: f64) -> Vec<Dual> {
    let rd = Dual::variable(r, 0);
    let sd = Dual::variable(s, 1);
    let td = Dual::variable(t, 2);
    let one = Dual::constant(1.0);
    let x1 = rd + one + 0.5 * (sd + td);
    let y1 = -0.5 * (sd + td);
    let x2 = sd + 0.5 * (one + td);
    let y2 = 0.5 * (one - td);
    let pa = jacobi_homogeneous(n, 0.0, x1, y1);
    let mut out = Vec::with_capacity((n + 1) * (n + 2) * (n + 3) / 6);
    for i in 0..=n {
        let pb = jacobi_homogeneous(n - i, (2 * i + 1) as f64, x2, y2);
        for j in 0..=n - i {
            let pc = jacobi_homogeneous(n - i - j, (2 * i + 2 * j + 2) as f64, td, one);
            let pij = pa[i] * pb[j];
            for pck in pc.iter().take(n - i - j + 1) {
                out.push(pij * *pck);
            }
        }
    }
    out
}

/// Basis values and gradients for either simplex dimension.
pub fn simplex_basis(dim: usize, n: usize, x: &[f64]) -> Vec<Dual> {
    match dim {
        2 => triangle_basis(n, x[0], x[1]),
        _ => tet_basis(n, x[0], x[1], x[2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre(n: usize, x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return p0;
        }
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn homogeneous_recurrence_reduces_to_legendre() {
        for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let p = jacobi_homogeneous(6, 0.0, Dual::constant(x), Dual::constant(1.0));
            for (n, pn) in p.iter().enumerate() {
                assert!((pn.v - legendre(n, x)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn homogeneous_scaling() {
        // y^n P_n(x/y) for y != 0 compared with direct evaluation.
        let (x, y) = (0.3, 0.7);
        let p = jacobi_homogeneous(5, 3.0, Dual::constant(x), Dual::constant(y));
        let q = jacobi_homogeneous(5, 3.0, Dual::constant(x / y), Dual::constant(1.0));
        for n in 0..=5 {
            assert!((p[n].v - q[n].v * y.powi(n as i32)).abs() < 1e-13);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        let (r, s, t) = (-0.3, -0.2, -0.4);
        let b = tet_basis(3, r, s, t);
        let br = tet_basis(3, r + h, s, t);
        let bl = tet_basis(3, r - h, s, t);
        let bt = tet_basis(3, r, s, t + h);
        let btl = tet_basis(3, r, s, t - h);
        for k in 0..b.len() {
            assert!((b[k].g[0] - (br[k].v - bl[k].v) / (2.0 * h)).abs() < 1e-6);
            assert!((b[k].g[2] - (bt[k].v - btl[k].v) / (2.0 * h)).abs() < 1e-6);
        }
        let b = triangle_basis(4, r, s);
        let bs = triangle_basis(4, r, s + h);
        let bsl = triangle_basis(4, r, s - h);
        for k in 0..b.len() {
            assert!((b[k].g[1] - (bs[k].v - bsl[k].v) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn finite_at_collapsed_vertex() {
        let b = triangle_basis(5, -1.0, 1.0);
        assert!(b.iter().all(|d| d.v.is_finite() && d.g.iter().all(|g| g.is_finite())));
        let b = tet_basis(5, -1.0, -1.0, 1.0);
        assert!(b.iter().all(|d| d.v.is_finite() && d.g.iter().all(|g| g.is_finite())));
    }
}
