//! Small dense linear-algebra kernels: symmetric eigendecomposition by
//! cyclic Jacobi, dominant singular vectors through the Gram matrix of the
//! smaller side, a closed-form 2x2 SVD, and eigenvalues of an upper
//! Hessenberg matrix by the double-shift QR iteration (the workhorse for
//! companion-matrix root finding).

use crate::error::{Error, Result};
use crate::tensor::{norm, Matrix};

/// Flips the sign of `v` so its largest-magnitude entry is positive.
/// Ties go to the lowest index. Returns the applied sign.
pub fn sign_fix_largest(v: &mut [f64]) -> f64 {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
        -1.0
    } else {
        1.0
    }
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns eigenvalues in descending order with matching eigenvector
/// columns. Deterministic: fixed sweep order, fixed tie-breaking.
pub fn jacobi_eigen_sym(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if a.rows() != a.cols() {
        return Err(Error::ShapeMismatch("symmetric eigen needs square".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let tol = 1e-14;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for q in 1..n {
            for p in 0..q {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        let scale: f64 = (0..n).map(|i| m.get(i, i).abs()).fold(0.0, f64::max);
        if off.sqrt() <= tol * scale.max(1e-300) {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = 0.5 * (2.0 * apq).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp + s * mkq);
                    m.set(k, q, -s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk + s * mqk);
                    m.set(q, k, -s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp + s * vkq);
                    v.set(k, q, -s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .partial_cmp(&m.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, j, v.get(i, src));
        }
    }
    Ok((eigenvalues, vectors))
}

/// Dominant left singular vector and singular value of `a`, computed from
/// the Gram matrix of the smaller side. A zero matrix falls back to the
/// first canonical vector. The returned vector has its largest-magnitude
/// entry positive.
pub fn dominant_left_singular(a: &Matrix) -> Result<(f64, Vec<f64>)> {
    let (rows, cols) = (a.rows(), a.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    let mut u;
    let sigma;
    if rows <= cols {
        let mut g = Matrix::zeros(rows, rows);
        for j in 0..cols {
            let col = a.column(j);
            for r in 0..rows {
                for c in 0..rows {
                    let v = g.get(r, c) + col[r] * col[c];
                    g.set(r, c, v);
                }
            }
        }
        let (vals, vecs) = jacobi_eigen_sym(&g)?;
        sigma = vals[0].max(0.0).sqrt();
        u = vecs.column(0).to_vec();
    } else {
        let g = a.matmul_tn(a);
        let (vals, vecs) = jacobi_eigen_sym(&g)?;
        let v0 = vecs.column(0);
        let av = a.matvec(v0);
        let n = norm(&av);
        if n > 0.0 && vals[0] > 0.0 {
            sigma = n;
            u = av.iter().map(|x| x / n).collect();
        } else {
            sigma = 0.0;
            u = vec![0.0; rows];
            u[0] = 1.0;
        }
    }
    if norm(&u) == 0.0 {
        u = vec![0.0; rows];
        u[0] = 1.0;
    }
    sign_fix_largest(&mut u);
    Ok((sigma, u))
}

/// Closed-form SVD data of a 2x2 matrix: both singular values plus the
/// dominant left/right singular vectors.
#[derive(Debug, Clone)]
pub struct Svd2x2 {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub u: [f64; 2],
    pub v: [f64; 2],
}

/// Eigen-pair (largest eigenvalue, unit eigenvector) of a symmetric 2x2
/// matrix `[[a, b], [b, c]]`.
pub fn sym_eig2x2_max(a: f64, b: f64, c: f64) -> (f64, [f64; 2]) {
    let h = (a - c).hypot(2.0 * b);
    let lam = 0.5 * (a + c) + 0.5 * h;
    if h == 0.0 {
        return (lam, [1.0, 0.0]);
    }
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    (lam, [theta.cos(), theta.sin()])
}

/// Largest singular value of a 2x2 matrix:
/// `sigma_max^2 = (a + sqrt(a^2 - b^2)) / 2` with `a = ||W||_F^2` and
/// `b = 2 det(W)`. Small negative discriminants from rounding are clamped.
pub fn sigma_max_2x2(w: &Matrix) -> f64 {
    debug_assert!(w.rows() == 2 && w.cols() == 2);
    let a = w.frobenius_norm_sq();
    let b = 2.0 * (w.get(0, 0) * w.get(1, 1) - w.get(0, 1) * w.get(1, 0));
    let mut disc = a * a - b * b;
    if disc < 0.0 {
        debug_assert!(disc > -1e-12 * a.max(1.0) * a.max(1.0), "disc {}", disc);
        disc = 0.0;
    }
    (0.5 * (a + disc.sqrt())).max(0.0).sqrt()
}

/// Full closed-form 2x2 SVD (dominant pair plus sigma_min), via the
/// symmetric eigenproblem of `W^T W`.
pub fn svd2x2(w: &Matrix) -> Svd2x2 {
    debug_assert!(w.rows() == 2 && w.cols() == 2);
    let (m11, m21, m12, m22) = (w.get(0, 0), w.get(1, 0), w.get(0, 1), w.get(1, 1));
    let g11 = m11 * m11 + m21 * m21;
    let g22 = m12 * m12 + m22 * m22;
    let g12 = m11 * m12 + m21 * m22;
    let (lam, v) = sym_eig2x2_max(g11, g12, g22);
    let sigma_max = lam.max(0.0).sqrt();
    let fro = g11 + g22;
    let sigma_min = (fro - lam).max(0.0).sqrt().min(sigma_max);
    let mut u = [m11 * v[0] + m12 * v[1], m21 * v[0] + m22 * v[1]];
    let un = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if un > 1e-300 {
        u[0] /= un;
        u[1] /= un;
    } else {
        u = [1.0, 0.0];
    }
    Svd2x2 {
        sigma_max,
        sigma_min,
        u,
        v,
    }
}

/// Eigenvalues of an upper Hessenberg matrix as `(re, im)` pairs, by the
/// double-shift QR iteration (Martin-Wilkinson, as in EISPACK `hqr`).
/// Eigenvector accumulation is omitted; only values are needed here.
pub fn hessenberg_eigenvalues(h_in: &Matrix) -> Result<Vec<(f64, f64)>> {
    if h_in.rows() != h_in.cols() {
        return Err(Error::ShapeMismatch("square matrix required".into()));
    }
    let nn = h_in.rows() as isize;
    if nn == 0 {
        return Ok(Vec::new());
    }
    let mut h = h_in.clone();
    let hg = |h: &Matrix, i: isize, j: isize| h.get(i as usize, j as usize);
    let hs = |h: &mut Matrix, i: isize, j: isize, v: f64| h.set(i as usize, j as usize, v);
    let eps = f64::EPSILON;
    let mut re = vec![0.0f64; nn as usize];
    let mut im = vec![0.0f64; nn as usize];

    let mut anorm = 0.0f64;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            anorm += hg(&h, i, j).abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![(0.0, 0.0); nn as usize]);
    }

    let mut n = nn - 1;
    let mut exshift = 0.0f64;
    let mut iter = 0usize;
    let (mut p, mut q, mut r): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut s, mut z): (f64, f64);
    let (mut x, mut y, mut w): (f64, f64, f64);

    while n >= 0 {
        // find a negligible subdiagonal element
        let mut l = n;
        while l > 0 {
            s = hg(&h, l - 1, l - 1).abs() + hg(&h, l, l).abs();
            if s == 0.0 {
                s = anorm;
            }
            if hg(&h, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one real root
            re[n as usize] = hg(&h, n, n) + exshift;
            im[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // a 2x2 block: real or complex pair
            w = hg(&h, n, n - 1) * hg(&h, n - 1, n);
            p = (hg(&h, n - 1, n - 1) - hg(&h, n, n)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = hg(&h, n, n) + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                re[(n - 1) as usize] = x + z;
                re[n as usize] = if z != 0.0 {
                    x - w / z
                } else {
                    re[(n - 1) as usize]
                };
                im[(n - 1) as usize] = 0.0;
                im[n as usize] = 0.0;
            } else {
                re[(n - 1) as usize] = x + p;
                re[n as usize] = x + p;
                im[(n - 1) as usize] = z;
                im[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // QR step
            x = hg(&h, n, n);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = hg(&h, n - 1, n - 1);
                w = hg(&h, n, n - 1) * hg(&h, n - 1, n);
            }
            if iter == 10 || iter == 20 {
                // exceptional shift
                exshift += x;
                for i in 0..=n {
                    let v = hg(&h, i, i) - x;
                    hs(&mut h, i, i, v);
                }
                s = hg(&h, n, n - 1).abs() + hg(&h, n - 1, n - 2).abs();
                y = 0.75 * s;
                x = y;
                w = -0.4375 * s * s;
            }
            if iter >= 60 {
                return Err(Error::Degenerate("QR iteration failed to converge".into()));
            }
            iter += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            while m >= l {
                z = hg(&h, m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / hg(&h, m + 1, m) + hg(&h, m, m + 1);
                q = hg(&h, m + 1, m + 1) - z - r - s;
                r = hg(&h, m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = hg(&h, m, m - 1).abs() * (q.abs() + r.abs());
                let rhs = eps
                    * p.abs()
                    * (hg(&h, m - 1, m - 1).abs() + z.abs() + hg(&h, m + 1, m + 1).abs());
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                hs(&mut h, i, i - 2, 0.0);
                if i > m + 2 {
                    hs(&mut h, i, i - 3, 0.0);
                }
            }

            // double QR step over rows l..=n, columns m..=n
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = hg(&h, k, k - 1);
                    q = hg(&h, k + 1, k - 1);
                    r = if notlast { hg(&h, k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        hs(&mut h, k, k - 1, -s * x);
                    } else if l != m {
                        let v = -hg(&h, k, k - 1);
                        hs(&mut h, k, k - 1, v);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    // row modification
                    for j in k..=n {
                        let mut pj = hg(&h, k, j) + q * hg(&h, k + 1, j);
                        if notlast {
                            pj += r * hg(&h, k + 2, j);
                            let v = hg(&h, k + 2, j) - pj * z;
                            hs(&mut h, k + 2, j, v);
                        }
                        let v1 = hg(&h, k, j) - pj * x;
                        hs(&mut h, k, j, v1);
                        let v2 = hg(&h, k + 1, j) - pj * y;
                        hs(&mut h, k + 1, j, v2);
                    }

                    // column modification
                    for i in l..=n.min(k + 3) {
                        let mut pi = x * hg(&h, i, k) + y * hg(&h, i, k + 1);
                        if notlast {
                            pi += z * hg(&h, i, k + 2);
                            let v = hg(&h, i, k + 2) - pi * r;
                            hs(&mut h, i, k + 2, v);
                        }
                        let v1 = hg(&h, i, k) - pi;
                        hs(&mut h, i, k, v1);
                        let v2 = hg(&h, i, k + 1) - pi * q;
                        hs(&mut h, i, k + 1, v2);
                    }
                }
            }
        }
    }
    Ok(re.into_iter().zip(im).collect())
}

/// Solves the symmetric positive definite system `A x = b` by Cholesky.
/// Returns `None` when a pivot is not positive.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j + k * n] * l[j + k * n];
        }
        if d <= 0.0 {
            return None;
        }
        let dj = d.sqrt();
        l[j + j * n] = dj;
        for i in j + 1..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= l[i + k * n] * l[j + k * n];
            }
            l[i + j * n] = v / dj;
        }
    }
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i + k * n] * y[k];
        }
        y[i] = v / l[i + i * n];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in i + 1..n {
            v -= l[k + i * n] * x[k];
        }
        x[i] = v / l[i + i * n];
    }
    Some(x)
}
