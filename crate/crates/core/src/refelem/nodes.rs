//! Warp-and-blend interpolation nodes on the bi-unit triangle and tetrahedron.

use super::quadrature::gauss_lobatto;

const ALPHA_OPT_2D: [f64; 15] = [
    0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959, 1.5743,
    1.5770, 1.6223, 1.6258,
];

const ALPHA_OPT_3D: [f64; 15] = [
    0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577, 1.1603, 1.10153, 0.6080, 0.4523, 0.8856,
    0.8717, 0.9655,
];

/// Edge warp divided by the edge bubble 1 − x²: interpolates the displacement
/// from equispaced to Lobatto points on [−1, 1].
fn warp_factor(n: usize, x: f64) -> f64 {
    let gl = gauss_lobatto(n);
    let eq: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let mut warp = 0.0;
    for i in 0..=n {
        let mut l = 1.0;
        for j in 0..=n {
            if j != i {
                l *= (x - eq[j]) / (eq[i] - eq[j]);
            }
        }
        warp += (gl[i] - eq[i]) * l;
    }
    if x.abs() < 1.0 - 1e-10 {
        warp / (1.0 - x * x)
    } else {
        warp
    }
}

/// Warp displacement of a point inside an equilateral triangle with
/// barycentrics (l1, l2, l3), in the triangle's own (x, y) frame.
fn eval_shift(n: usize, alpha: f64, l1: f64, l2: f64, l3: f64) -> (f64, f64) {
    let w1 = 4.0 * l2 * l3 * warp_factor(n, l3 - l2) * (1.0 + (alpha * l1).powi(2));
    let w2 = 4.0 * l1 * l3 * warp_factor(n, l1 - l3) * (1.0 + (alpha * l2).powi(2));
    let w3 = 4.0 * l1 * l2 * warp_factor(n, l2 - l1) * (1.0 + (alpha * l3).powi(2));
    let (c2, s2) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (c4, s4) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());
    (w1 + c2 * w2 + c4 * w3, s2 * w2 + s4 * w3)
}

/// Degree-n nodes on the bi-unit triangle, row-major (r, s).
pub fn triangle_nodes(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![-1.0 / 3.0, -1.0 / 3.0];
    }
    let alpha = ALPHA_OPT_2D.get(n - 1).copied().unwrap_or(5.0 / 3.0);
    let sq3 = 3f64.sqrt();
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let l1 = i as f64 / n as f64;
            let l3 = j as f64 / n as f64;
            let l2 = 1.0 - l1 - l3;
            let mut x = -l2 + l3;
            let mut y = (-l2 - l3 + 2.0 * l1) / sq3;
            let (dx, dy) = eval_shift(n, alpha, l1, l2, l3);
            x += dx;
            y += dy;
            // Equilateral to bi-unit coordinates.
            let m1 = (sq3 * y + 1.0) / 3.0;
            let m2 = (-3.0 * x - sq3 * y + 2.0) / 6.0;
            let m3 = (3.0 * x - sq3 * y + 2.0) / 6.0;
            out.push(-m2 + m3 - m1);
            out.push(-m2 - m3 + m1);
        }
    }
    out
}

/// Degree-n nodes on the bi-unit tetrahedron, row-major (r, s, t).
pub fn tet_nodes(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![-0.5, -0.5, -0.5];
    }
    let alpha = ALPHA_OPT_3D.get(n - 1).copied().unwrap_or(1.0);
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let v1 = [-1.0, -1.0 / s3, -1.0 / s6];
    let v2 = [1.0, -1.0 / s3, -1.0 / s6];
    let v3 = [0.0, 2.0 / s3, -1.0 / s6];
    let v4 = [0.0, 0.0, 3.0 / s6];
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let mid = |a: [f64; 3], b: [f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
    let unit = |a: [f64; 3]| {
        let l = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        [a[0] / l, a[1] / l, a[2] / l]
    };
    let t1 = [sub(v2, v1), sub(v2, v1), sub(v3, v2), sub(v3, v1)].map(unit);
    let t2 = [
        sub(v3, mid(v1, v2)),
        sub(v4, mid(v1, v2)),
        sub(v4, mid(v2, v3)),
        sub(v4, mid(v1, v3)),
    ]
    .map(unit);
    let tol = 1e-10;
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                let r = -1.0 + 2.0 * c as f64 / n as f64;
                let s = -1.0 + 2.0 * b as f64 / n as f64;
                let t = -1.0 + 2.0 * a as f64 / n as f64;
                let l = [(1.0 + t) / 2.0, (1.0 + s) / 2.0, -(1.0 + r + s + t) / 2.0, (1.0 + r) / 2.0];
                let mut xyz = [0.0; 3];
                for d in 0..3 {
                    xyz[d] = l[2] * v1[d] + l[3] * v2[d] + l[1] * v3[d] + l[0] * v4[d];
                }
                let mut shift = [0.0; 3];
                for face in 0..4 {
                    let (la, lb, lc, ld) = match face {
                        0 => (l[0], l[1], l[2], l[3]),
                        1 => (l[1], l[0], l[2], l[3]),
                        2 => (l[2], l[0], l[3], l[1]),
                        _ => (l[3], l[0], l[2], l[1]),
                    };
                    let (w1, w2) = eval_shift(n, alpha, lb, lc, ld);
                    let mut blend = lb * lc * ld;
                    let denom = (lb + 0.5 * la) * (lc + 0.5 * la) * (ld + 0.5 * la);
                    if denom > tol {
                        blend = (1.0 + (alpha * la).powi(2)) * blend / denom;
                    }
                    let on_face = la < tol && ((lb > tol) as u8 + (lc > tol) as u8 + (ld > tol) as u8) < 3;
                    for d in 0..3 {
                        let contrib = w1 * t1[face][d] + w2 * t2[face][d];
                        if on_face {
                            shift[d] = contrib;
                        } else {
                            shift[d] += blend * contrib;
                        }
                    }
                }
                for d in 0..3 {
                    xyz[d] += shift[d];
                }
                // Equilateral to bi-unit: solve A rst = xyz − (v2+v3+v4−v1)/2.
                let rhs = [
                    xyz[0] - 0.5 * (v2[0] + v3[0] + v4[0] - v1[0]),
                    xyz[1] - 0.5 * (v2[1] + v3[1] + v4[1] - v1[1]),
                    xyz[2] - 0.5 * (v2[2] + v3[2] + v4[2] - v1[2]),
                ];
                let m = nalgebra::Matrix3::from_columns(&[
                    nalgebra::Vector3::from(sub(v2, v1)) * 0.5,
                    nalgebra::Vector3::from(sub(v3, v1)) * 0.5,
                    nalgebra::Vector3::from(sub(v4, v1)) * 0.5,
                ]);
                let rst = m.lu().solve(&nalgebra::Vector3::from(rhs)).expect("regular map");
                out.extend_from_slice(rst.as_slice());
            }
        }
    }
    out
}

pub fn simplex_nodes(dim: usize, n: usize) -> Vec<f64> {
    match dim {
        2 => triangle_nodes(n),
        _ => tet_nodes(n),
    }
}
