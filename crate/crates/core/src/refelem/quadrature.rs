//! Gauss–Jacobi rules and collapsed (Stroud) simplex quadrature.
//!
//! Rules are generated rather than tabulated: the Golub–Welsch eigenvalue
//! problem yields nodes and weights, and every simplex rule is checked
//! against closed-form monomial integrals before use.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Points (row-major, `dim` coordinates each) and weights.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q * self.dim..(q + 1) * self.dim]
    }
}

/// n-point Gauss–Jacobi rule for the weight (1−x)^alpha on [−1, 1].
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let d = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        t[(k, k)] = if d == 0.0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / d
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let s = 2.0 * m + ab;
            let den = s * s * (s + 1.0) * (s - 1.0);
            let b = (num / den).sqrt();
            t[(k, k + 1)] = b;
            t[(k + 1, k)] = b;
        }
    }
    // Total mass 2^{alpha+1}/(alpha+1) for beta = 0.
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Lobatto–Legendre nodes on [−1, 1], ascending.
pub fn gauss_lobatto(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![-1.0, 1.0];
    }
    // Interior nodes are the Gauss–Jacobi(1,1) points; use the symmetric
    // Jacobi matrix for alpha = beta = 1 directly.
    let m = n - 1;
    let mut t = DMatrix::<f64>::zeros(m, m);
    for k in 0..m.saturating_sub(1) {
        let kf = k as f64 + 1.0;
        let s = 2.0 * kf + 2.0;
        let b = (4.0 * kf * (kf + 1.0) * (kf + 1.0) * (kf + 2.0) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
        t[(k, k + 1)] = b;
        t[(k + 1, k)] = b;
    }
    let mut x: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n + 1);
    out.push(-1.0);
    // Symmetrize against rounding.
    for k in 0..m {
        out.push(0.5 * (x[k] - x[m - 1 - k]));
    }
    out.push(1.0);
    out
}

/// Collapsed rule on the bi-unit triangle with `n` points per direction,
/// exact for total degree 2n − 1.
pub fn triangle_rule(n: usize) -> Quadrature {
    let (xa, wa) = gauss_jacobi(n, 0.0);
    let (xb, wb) = gauss_jacobi(n, 1.0);
    let mut points = Vec::with_capacity(2 * n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (a, wa) in xa.iter().zip(&wa) {
        for (b, wb) in xb.iter().zip(&wb) {
            points.push(0.5 * (1.0 + a) * (1.0 - b) - 1.0);
            points.push(*b);
            weights.push(0.5 * wa * wb);
        }
    }
    Quadrature { dim: 2, points, weights }
}

/// Collapsed rule on the bi-unit tetrahedron, exact for degree 2n − 1.
pub fn tet_rule(n: usize) -> Quadrature {
    let (xa, wa) = gauss_jacobi(n, 0.0);
    let (xb, wb) = gauss_jacobi(n, 1.0);
    let (xc, wc) = gauss_jacobi(n, 2.0);
    let mut points = Vec::with_capacity(3 * n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (a, wa) in xa.iter().zip(&wa) {
        for (b, wb) in xb.iter().zip(&wb) {
            for (c, wc) in xc.iter().zip(&wc) {
                points.push(0.25 * (1.0 + a) * (1.0 - b) * (1.0 - c) - 1.0);
                points.push(0.5 * (1.0 + b) * (1.0 - c) - 1.0);
                points.push(*c);
                weights.push(0.125 * wa * wb * wc);
            }
        }
    }
    Quadrature { dim: 3, points, weights }
}

/// Triangle rule closed under all six vertex permutations, so that the point
/// set seen from either side of a shared face is the same.
pub fn symmetric_triangle_rule(n: usize) -> Quadrature {
    let base = triangle_rule(n);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for q in 0..base.len() {
        let p = base.point(q);
        let lam = [-(p[0] + p[1]) / 2.0, (1.0 + p[0]) / 2.0, (1.0 + p[1]) / 2.0];
        for perm in &perms {
            let l = [lam[perm[0]], lam[perm[1]], lam[perm[2]]];
            points.push(2.0 * l[1] - 1.0);
            points.push(2.0 * l[2] - 1.0);
            weights.push(base.weights[q] / 6.0);
        }
    }
    Quadrature { dim: 2, points, weights }
}

/// Volume rule exact for degree `degree` on the bi-unit simplex.
pub fn simplex_rule(dim: usize, degree: usize) -> Quadrature {
    let n = degree / 2 + 1;
    match dim {
        2 => triangle_rule(n),
        _ => tet_rule(n),
    }
}

/// Face rule exact for degree `degree` on a face (parameter domain [−1,1] in
/// 2D, the bi-unit triangle in 3D).
pub fn face_rule(dim: usize, degree: usize) -> Quadrature {
    let n = degree / 2 + 1;
    match dim {
        2 => {
            let (x, w) = gauss_jacobi(n, 0.0);
            Quadrature { dim: 1, points: x, weights: w }
        }
        _ => symmetric_triangle_rule(n),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Closed-form integral over the bi-unit simplex of the monomial in unit
/// coordinates ξ_k = (1 + x_k)/2.
pub fn monomial_integral(exps: &[usize]) -> f64 {
    let d = exps.len();
    let total: usize = exps.iter().sum();
    let num: f64 = exps.iter().map(|&p| factorial(p)).product();
    num / factorial(total + d) * 2f64.powi(d as i32)
}

/// Maximum relative error of `rule` over all monomials of total degree <= `degree`.
pub fn exactness_error(rule: &Quadrature, degree: usize) -> f64 {
    let d = rule.dim;
    let mut worst = 0.0_f64;
    let mut exps = vec![0usize; d];
    loop {
        let total: usize = exps.iter().sum();
        if total <= degree {
            let exact = monomial_integral(&exps);
            let approx: f64 = (0..rule.len())
                .map(|q| {
                    let p = rule.point(q);
                    let mut v = rule.weights[q];
                    for k in 0..d {
                        v *= ((1.0 + p[k]) / 2.0).powi(exps[k] as i32);
                    }
                    v
                })
                .sum();
            worst = worst.max((approx - exact).abs() / exact);
        }
        // Odometer over exponent tuples bounded by degree.
        let mut k = 0;
        loop {
            if k == d {
                return worst;
            }
            exps[k] += 1;
            if exps[k] <= degree {
                break;
            }
            exps[k] = 0;
            k += 1;
        }
    }
}

/// Check a generated rule before use.
pub fn validate(rule: &Quadrature, degree: usize, what: &str) -> Result<()> {
    let err = exactness_error(rule, degree);
    if err > 1e-12 {
        return Err(Error::Config(format!(
            "{what} quadrature fails degree-{degree} exactness (relative error {err:e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_three_points() {
        let (x, w) = gauss_jacobi(3, 0.0);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - r).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14 && (w[0] - 5.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weights_sum_to_mass() {
        for alpha in [0.0, 1.0, 2.0, 7.0] {
            let (_, w) = gauss_jacobi(5, alpha);
            let mass: f64 = w.iter().sum();
            assert!((mass - 2f64.powf(alpha + 1.0) / (alpha + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn lobatto_nodes_degree_four() {
        let x = gauss_lobatto(4);
        let r = (3.0f64 / 7.0).sqrt();
        assert_eq!(x.len(), 5);
        assert!((x[1] + r).abs() < 1e-14 && x[2].abs() < 1e-15 && (x[3] - r).abs() < 1e-14);
    }

    #[test]
    fn simplex_rules_exact_up_to_degree_17() {
        for n in 1..=8 {
            let deg = 2 * n + 1;
            let tri = simplex_rule(2, deg);
            assert!(exactness_error(&tri, deg) < 1e-12, "tri N={n}");
            let sym = face_rule(3, deg);
            assert!(exactness_error(&sym, deg) < 1e-12, "sym N={n}");
        }
        for n in 1..=8 {
            let deg = 2 * n + 1;
            let tet = simplex_rule(3, deg);
            assert!(exactness_error(&tet, deg) < 1e-12, "tet N={n}");
        }
    }

    #[test]
    fn measures() {
        let w2: f64 = triangle_rule(4).weights.iter().sum();
        let w3: f64 = tet_rule(4).weights.iter().sum();
        assert!((w2 - 2.0).abs() < 1e-14);
        assert!((w3 - 4.0 / 3.0).abs() < 1e-14);
    }
}
