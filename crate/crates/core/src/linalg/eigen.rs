//! Dense nonsymmetric eigensolvers.
//!
//! Real matrices: balancing, Householder reduction to Hessenberg form and the
//! Francis double-shift QR iteration (eigenvalues only). Complex matrices:
//! Hessenberg reduction with accumulated unitary factor, Wilkinson-shifted QR
//! to Schur form, and eigenvectors by back substitution.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITS_PER_EIGENVALUE: usize = 120;

/// Row-major dense square matrix used by the in-place kernels.
struct Dense<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Copy> Dense<T> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }
    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.a[i * self.n + j]
    }
}

/// Diagonal similarity scaling with powers of two so that row and column norms
/// are comparable. Eigenvalues are unchanged and rounding is exact.
fn balance(m: &mut Dense<f64>) {
    let n = m.n;
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m.get(j, i).abs();
                    r += m.get(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        *m.at(i, j) *= g;
                    }
                    for j in 0..n {
                        *m.at(j, i) *= f;
                    }
                }
            }
        }
    }
}

/// Householder reduction of a real matrix to upper Hessenberg form.
fn hessenberg_real(m: &mut Dense<f64>) {
    let n = m.n;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        let mut norm = 0.0;
        for i in k + 1..n {
            norm += m.get(i, k) * m.get(i, k);
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = m.get(k + 1, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = m.get(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v[k + 1..n].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // Left: rows k+1.., columns k..
        for x in w[k..n].iter_mut() {
            *x = 0.0;
        }
        for i in k + 1..n {
            let vi = v[i];
            let row = &m.a[i * n..(i + 1) * n];
            for j in k..n {
                w[j] += vi * row[j];
            }
        }
        for i in k + 1..n {
            let f = beta * v[i];
            let row = &mut m.a[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= f * w[j];
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let row = &mut m.a[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            let f = beta * s;
            for j in k + 1..n {
                row[j] -= f * v[j];
            }
        }
        *m.at(k + 1, k) = alpha;
        for i in k + 2..n {
            *m.at(i, k) = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hqr(m: &mut Dense<f64>) -> Result<Vec<Complex64>> {
    let n = m.n as isize;
    let mut wr = vec![Complex64::new(0.0, 0.0); m.n];
    if n == 0 {
        return Ok(wr);
    }
    let eps = f64::EPSILON;
    let idx = |i: isize, j: isize| (i * n + j) as usize;
    let a = &mut m.a;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let mut nn = n - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);
    p = 0.0;
    q = 0.0;
    r = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        let mut l;
        loop {
            l = nn;
            while l > 0 {
                s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() <= eps * s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[idx(nn, nn)];
            if l == nn {
                wr[nn as usize] = Complex64::new(x + t, 0.0);
                nn -= 1;
            } else {
                y = a[idx(nn - 1, nn - 1)];
                w = a[idx(nn, nn - 1)] * a[idx(nn - 1, nn)];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[(nn - 1) as usize] = Complex64::new(x + z, 0.0);
                        wr[nn as usize] = Complex64::new(x + z, 0.0);
                        if z != 0.0 {
                            wr[nn as usize] = Complex64::new(x - w / z, 0.0);
                        }
                    } else {
                        wr[nn as usize] = Complex64::new(x + p, -z);
                        wr[(nn - 1) as usize] = Complex64::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its >= MAX_ITS_PER_EIGENVALUE {
                        return Err(Error::Convergence {
                            what: format!("real Hessenberg QR (n = {n})"),
                            iterations: its,
                        });
                    }
                    if its > 0 && its % 10 == 0 {
                        // Exceptional shift.
                        t += x;
                        for i in 0..=nn {
                            a[idx(i, i)] -= x;
                        }
                        s = a[idx(nn, nn - 1)].abs() + a[idx(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut mm = nn - 2;
                    while mm >= l {
                        z = a[idx(mm, mm)];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[idx(mm + 1, mm)] + a[idx(mm, mm + 1)];
                        q = a[idx(mm + 1, mm + 1)] - z - r - s;
                        r = a[idx(mm + 2, mm + 1)];
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if mm == l {
                            break;
                        }
                        let u = a[idx(mm, mm - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (a[idx(mm - 1, mm - 1)].abs() + z.abs() + a[idx(mm + 1, mm + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        mm -= 1;
                    }
                    for i in mm..nn - 1 {
                        a[idx(i + 2, i)] = 0.0;
                        if i != mm {
                            a[idx(i + 2, i - 1)] = 0.0;
                        }
                    }
                    let mut k = mm;
                    while k < nn {
                        if k != mm {
                            p = a[idx(k, k - 1)];
                            q = a[idx(k + 1, k - 1)];
                            r = 0.0;
                            if k + 1 != nn {
                                r = a[idx(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == mm {
                                if l != mm {
                                    a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                                }
                            } else {
                                a[idx(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[idx(k, j)] + q * a[idx(k + 1, j)];
                                if k + 1 != nn {
                                    p += r * a[idx(k + 2, j)];
                                    a[idx(k + 2, j)] -= p * z;
                                }
                                a[idx(k + 1, j)] -= p * y;
                                a[idx(k, j)] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                                if k + 1 != nn {
                                    p += z * a[idx(i, k + 2)];
                                    a[idx(i, k + 2)] -= p * r;
                                }
                                a[idx(i, k + 1)] -= p * q;
                                a[idx(i, k)] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(wr)
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues_real(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape {
            what: "eigenvalues_real",
            expected: n,
            got: a.ncols(),
        });
    }
    let mut m = Dense {
        n,
        a: (0..n * n).map(|k| a[(k / n, k % n)]).collect(),
    };
    if m.a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Setup("non-finite matrix entry".into()));
    }
    balance(&mut m);
    hessenberg_real(&mut m);
    hqr(&mut m)
}

/// Complex eigendecomposition: `vectors` holds unit-norm eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct ComplexEigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
}

impl ComplexEigen {
    /// Largest ‖A v − λ v‖ over all pairs.
    pub fn max_residual(&self, a: &DMatrix<Complex64>) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let v = self.vectors.column(k);
                (a * v - v * self.values[k]).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let rho = na.hypot(nb);
    (na / rho, (a / na) * b.conj() / rho)
}

/// Full complex eigendecomposition via Schur form.
pub fn eig_complex(a: &DMatrix<Complex64>) -> Result<ComplexEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape {
            what: "eig_complex",
            expected: n,
            got: a.ncols(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut h = Dense {
        n,
        a: (0..n * n).map(|k| a[(k / n, k % n)]).collect(),
    };
    let mut z = Dense {
        n,
        a: (0..n * n)
            .map(|k| if k / n == k % n { one } else { zero })
            .collect(),
    };

    // Hessenberg reduction, accumulating Z.
    if n >= 3 {
        let mut v = vec![zero; n];
        for k in 0..n - 2 {
            let norm: f64 = (k + 1..n).map(|i| h.get(i, k).norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let x0 = h.get(k + 1, k);
            let phase = if x0.norm() == 0.0 { one } else { x0 / x0.norm() };
            let alpha = -phase * norm;
            for i in k + 1..n {
                v[i] = h.get(i, k);
            }
            v[k + 1] -= alpha;
            let vn: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
            if vn == 0.0 {
                continue;
            }
            for x in v[k + 1..n].iter_mut() {
                *x /= vn;
            }
            for j in k..n {
                let mut s = zero;
                for i in k + 1..n {
                    s += v[i].conj() * h.get(i, j);
                }
                for i in k + 1..n {
                    *h.at(i, j) -= v[i] * s * 2.0;
                }
            }
            for mtx in [&mut h, &mut z] {
                for i in 0..n {
                    let mut s = zero;
                    for j in k + 1..n {
                        s += mtx.get(i, j) * v[j];
                    }
                    for j in k + 1..n {
                        *mtx.at(i, j) -= s * v[j].conj() * 2.0;
                    }
                }
            }
            *h.at(k + 1, k) = alpha;
            for i in k + 2..n {
                *h.at(i, k) = zero;
            }
        }
    }

    // Shifted QR to upper triangular Schur form.
    let anorm: f64 = h.a.iter().map(|x| x.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n as isize - 1;
    let mut its = 0usize;
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    while hi > 0 {
        let hiu = hi as usize;
        let mut l = hiu;
        while l > 0 {
            let s = h.get(l - 1, l - 1).norm() + h.get(l, l).norm();
            let s = if s == 0.0 { anorm } else { s };
            if h.get(l, l - 1).norm() <= eps * s {
                *h.at(l, l - 1) = zero;
                break;
            }
            l -= 1;
        }
        if l == hiu {
            hi -= 1;
            its = 0;
            continue;
        }
        if its >= MAX_ITS_PER_EIGENVALUE {
            return Err(Error::Convergence {
                what: format!("complex Schur QR (n = {n})"),
                iterations: its,
            });
        }
        its += 1;
        let mu = if its % 11 == 0 {
            h.get(hiu, hiu) + Complex64::new(h.get(hiu, hiu - 1).norm(), 0.0) * 0.75
        } else {
            // Wilkinson shift from the trailing 2x2 block.
            let a11 = h.get(hiu - 1, hiu - 1);
            let a12 = h.get(hiu - 1, hiu);
            let a21 = h.get(hiu, hiu - 1);
            let a22 = h.get(hiu, hiu);
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr * 0.25 - det).sqrt();
            let l1 = tr * 0.5 + disc;
            let l2 = tr * 0.5 - disc;
            if (l1 - a22).norm() < (l2 - a22).norm() {
                l1
            } else {
                l2
            }
        };
        for i in l..=hiu {
            *h.at(i, i) -= mu;
        }
        rots.clear();
        for k in l..hiu {
            let (c, s) = givens(h.get(k, k), h.get(k + 1, k));
            for j in k..n {
                let x = h.get(k, j);
                let y = h.get(k + 1, j);
                *h.at(k, j) = x * c + s * y;
                *h.at(k + 1, j) = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (r, &(c, s)) in rots.iter().enumerate() {
            let k = l + r;
            let top = (k + 2).min(hiu);
            for i in 0..=top {
                let x = h.get(i, k);
                let y = h.get(i, k + 1);
                *h.at(i, k) = x * c + y * s.conj();
                *h.at(i, k + 1) = -x * s + y * c;
            }
            for i in 0..n {
                let x = z.get(i, k);
                let y = z.get(i, k + 1);
                *z.at(i, k) = x * c + y * s.conj();
                *z.at(i, k + 1) = -x * s + y * c;
            }
        }
        for i in l..=hiu {
            *h.at(i, i) += mu;
        }
    }

    // Eigenvectors of the triangular factor by back substitution.
    let values: Vec<Complex64> = (0..n).map(|i| h.get(i, i)).collect();
    let tnorm: f64 = h.a.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = eps * tnorm;
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut y = vec![zero; n];
    for k in 0..n {
        for x in y.iter_mut() {
            *x = zero;
        }
        y[k] = one;
        for j in (0..k).rev() {
            let mut s = zero;
            for i in j + 1..=k {
                s += h.get(j, i) * y[i];
            }
            let mut d = h.get(j, j) - values[k];
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[j] = -s / d;
        }
        let mut col = vec![zero; n];
        for (i, c) in col.iter_mut().enumerate() {
            let mut s = zero;
            for j in 0..=k {
                s += z.get(i, j) * y[j];
            }
            *c = s;
        }
        let nrm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (i, c) in col.into_iter().enumerate() {
            vectors[(i, k)] = c / nrm;
        }
    }
    Ok(ComplexEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: Aberth–Ehrlich simultaneous root finding on
    /// det(zI − A), with Newton corrections 1/tr((zI − A)⁻¹) from LU solves.
    fn aberth_oracle(a: &DMatrix<Complex64>) -> Vec<Complex64> {
        let n = a.nrows();
        let radius = 1.0 + a.iter().map(|x| x.norm()).fold(0.0, f64::max) * n as f64;
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0_f64;
            for k in 0..n {
                let m = DMatrix::<Complex64>::identity(n, n) * z[k] - a;
                let Some(inv) = m.try_inverse() else { continue };
                let ratio = Complex64::new(1.0, 0.0) / inv.trace();
                let mut rep = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != k {
                        rep += Complex64::new(1.0, 0.0) / (z[k] - z[j]);
                    }
                }
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * rep);
                z[k] -= step;
                moved = moved.max(step.norm());
            }
            if moved < 1e-15 * radius {
                break;
            }
        }
        z
    }

    fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
        let d = |x: &[Complex64], y: &[Complex64]| {
            x.iter()
                .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        d(a, b).max(d(b, a))
    }

    fn random_real(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn diagonal_matrix_returns_diagonal() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.5, 0.0]));
        let mut ev: Vec<f64> = eigenvalues_real(&d).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![-1.0, 0.0, 2.5, 3.0]);
        let e = eig_complex(&d.map(|x| Complex64::new(x, 0.0))).unwrap();
        let mut ev: Vec<f64> = e.values.iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, vec![-1.0, 0.0, 2.5, 3.0]);
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let ev = eigenvalues_real(&r).unwrap();
        assert!(ev.iter().all(|z| z.re.abs() < 1e-14 && (z.im.abs() - 2.0).abs() < 1e-14));
    }

    #[test]
    fn real_qr_matches_aberth_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 8, 13, 20] {
            let a = random_real(&mut rng, n);
            let ours = eigenvalues_real(&a).unwrap();
            let oracle = aberth_oracle(&a.map(|x| Complex64::new(x, 0.0)));
            assert!(hausdorff(&ours, &oracle) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn complex_qr_matches_oracle_on_100_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = DMatrix::from_fn(13, 13, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let e = eig_complex(&a).unwrap();
            assert!(e.max_residual(&a) < 1e-10 * a.norm());
            let oracle = aberth_oracle(&a);
            assert!(hausdorff(&e.values, &oracle) < 1e-8);
        }
    }

    #[test]
    fn larger_real_matrix_trace_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_real(&mut rng, 120);
        let ev = eigenvalues_real(&a).unwrap();
        let tr: Complex64 = ev.iter().sum();
        assert!((tr.re - a.trace()).abs() < 1e-9 && tr.im.abs() < 1e-9);
        // Each eigenvalue makes A − λI singular.
        for z in ev.iter().step_by(17) {
            let m = a.map(|x| Complex64::new(x, 0.0)) - DMatrix::identity(120, 120) * *z;
            let sv = m.singular_values();
            assert!(sv.min() < 1e-9 * sv.max());
        }
    }

    #[test]
    fn defective_jordan_block_converges() {
        let j = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, 0.0, 2.0]);
        let ev = eigenvalues_real(&j).unwrap();
        assert!(ev.iter().all(|z| (z - 2.0).norm() < 1e-4));
        let e = eig_complex(&j.map(|x| Complex64::new(x, 0.0))).unwrap();
        assert!(e.values.iter().all(|z| (z - 2.0).norm() < 1e-4));
    }
}
