//! Closed-form and semi-closed-form best rank-1 approximation for tensors
//! whose extents are all 2.
//!
//! For a 2x2x2 tensor the problem reduces, after a mode-3 rotation that
//! orthogonalizes the frontal slices, to maximizing
//! `f(alpha) = a(alpha) + sqrt(a(alpha)^2 - b(alpha)^2)` over the circle,
//! where `a = ||W x̄_3 eta||_F^2` and `b = 2 det(W x̄_3 eta)` are degree-2
//! trigonometric polynomials. The substitution `x = tan(alpha)` turns the
//! stationarity condition into a degree-6 polynomial. For 2x2x2x2 tensors
//! the same quantities become bilinear forms `c_a^T A c_b`, `c_a^T B c_b`
//! in the half-angle bases of two angles, and the stationarity conditions
//! become a pair of bi-variate degree-6 polynomials with coefficient
//! matrices C1, C2; these are solved either by alternating the order-3
//! closed form over three components at a time (ALS3) or by alternating
//! univariate root solves.
//!
//! Sign convention: `b` here is literally `2 det` of the projected matrix
//! (the oracle tests pin this), and the degree-6 coefficients below are
//! odd under a global sign flip of `b`, so the root set is unaffected by
//! the choice.

use crate::error::{Error, Result};
use crate::linalg::{
    dominant_left_singular, sigma_max_2x2 as sigma_max_2x2_impl, svd2x2, sym_eig2x2_max,
};
use crate::poly::Polynomial;
use crate::tensor::{DenseTensor, Matrix};

/// Largest singular value of a 2x2 matrix (closed form).
pub fn sigma_max_2x2(w: &Matrix) -> f64 {
    sigma_max_2x2_impl(w)
}

/// The half-angle reduction matrix: `eta ⊗ eta = Q^T [cos 2a, sin 2a, 1]^T / 2`
/// for `eta = [cos a, sin a]^T`.
pub fn q_matrix() -> Matrix {
    Matrix::from_rows(&[
        &[1.0, 0.0, 0.0, -1.0],
        &[0.0, 1.0, 1.0, 0.0],
        &[1.0, 0.0, 0.0, 1.0],
    ])
}

/// The determinant-form matrix: `vec(M)^T R vec(M) = 2 det(M)` for 2x2 `M`.
pub fn r_matrix() -> Matrix {
    Matrix::from_rows(&[
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, -1.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0],
    ])
}

/// Half-angle derivative generator: `d/da [cos 2a, sin 2a, 1] = 2 c_a F^T`.
pub fn f_matrix() -> Matrix {
    Matrix::from_rows(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
}

/// The 7x27 reduction matrix mapping `[x^6, ..., x, 1]` to the triple
/// Kronecker power of `[1-x^2, 2x, 1+x^2]`: row d holds the coefficient
/// of `x^(6-d)` in each of the 27 triple products.
#[rustfmt::skip]
pub fn k_matrix() -> Matrix {
    Matrix::from_rows(&[
        &[-1., 0., 1., 0., 0., 0., 1., 0., -1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., -1., 0., 0., 0., -1., 0., 1.],
        &[0., 2., 0., 2., 0., -2., 0., -2., 0., 2., 0., -2., 0., 0., 0., -2., 0., 2., 0., -2., 0., -2., 0., 2., 0., 2., 0.],
        &[3., 0., -1., 0., -4., 0., -1., 0., -1., 0., -4., 0., -4., 0., 4., 0., 4., 0., -1., 0., -1., 0., 4., 0., -1., 0., 3.],
        &[0., -4., 0., -4., 0., 0., 0., 0., 0., -4., 0., 0., 0., 8., 0., 0., 0., 4., 0., 0., 0., 0., 0., 4., 0., 4., 0.],
        &[-3., 0., -1., 0., 4., 0., -1., 0., 1., 0., 4., 0., 4., 0., 4., 0., 4., 0., -1., 0., 1., 0., 4., 0., 1., 0., 3.],
        &[0., 2., 0., 2., 0., 2., 0., 2., 0., 2., 0., 2., 0., 0., 0., 2., 0., 2., 0., 2., 0., 2., 0., 2., 0., 2., 0.],
        &[1., 0., 1., 0., 0., 0., 1., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., 0., 1., 0., 0., 0., 1., 0., 1.],
    ])
}

/// Commutation matrix `P` with `P vec(T) = vec(T')` where `T'` swaps
/// modes 1 and 2 of a 2x2x2x2 tensor (the mode-(0,2,1,3) permutation).
pub fn commutation_p1324() -> Matrix {
    let mut p = Matrix::zeros(16, 16);
    for lin in 0..16usize {
        let i0 = lin & 1;
        let i1 = (lin >> 1) & 1;
        let i2 = (lin >> 2) & 1;
        let i3 = (lin >> 3) & 1;
        let dst = i0 | (i2 << 1) | (i1 << 2) | (i3 << 3);
        p.set(dst, lin, 1.0);
    }
    p
}

/// Trigonometric-polynomial coefficients of `a(alpha)` and `b(alpha)` for
/// a 2x2x2 tensor:
/// `a(alpha) = a1 cos 2a + a2 sin 2a + a3 = ||W x̄_3 eta||_F^2` and
/// `b(alpha) = b1 cos 2a + b2 sin 2a + b3 = 2 det(W x̄_3 eta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ABCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl ABCoeffs {
    pub fn a_at(&self, trig: [f64; 3]) -> f64 {
        self.a1 * trig[0] + self.a2 * trig[1] + self.a3 * trig[2]
    }

    pub fn b_at(&self, trig: [f64; 3]) -> f64 {
        self.b1 * trig[0] + self.b2 * trig[1] + self.b3 * trig[2]
    }

    /// `f = a + sqrt(a^2 - b^2) = 2 sigma_max^2` of the projected matrix.
    pub fn f_at(&self, trig: [f64; 3]) -> f64 {
        let a = self.a_at(trig);
        let b = self.b_at(trig);
        a + (a * a - b * b).max(0.0).sqrt()
    }

    pub fn f_at_angle(&self, alpha: f64) -> f64 {
        self.f_at([(2.0 * alpha).cos(), (2.0 * alpha).sin(), 1.0])
    }
}

/// Half-angle basis vector `[cos 2a, sin 2a, 1]` for `alpha = arctan(x)`;
/// `x = +inf` encodes the boundary direction `eta = [0, 1]`.
pub fn trig_from_tan(x: f64) -> [f64; 3] {
    if x.is_infinite() {
        [-1.0, 0.0, 1.0]
    } else {
        let d = 1.0 + x * x;
        [(1.0 - x * x) / d, 2.0 * x / d, 1.0]
    }
}

/// Unit vector `eta = [cos a, sin a]` for `alpha = arctan(x)`.
pub fn eta_from_tan(x: f64) -> [f64; 2] {
    if x.is_infinite() {
        [0.0, if x > 0.0 { 1.0 } else { -1.0 }]
    } else {
        let d = (1.0 + x * x).sqrt();
        [1.0 / d, x / d]
    }
}

fn check_222(w: &DenseTensor) -> Result<()> {
    if w.shape() != [2, 2, 2] {
        return Err(Error::ShapeMismatch(format!(
            "expected 2x2x2, got {:?}",
            w.shape()
        )));
    }
    Ok(())
}

/// a/b coefficients of a 2x2x2 tensor, entries `w_1..w_8` column-major.
pub fn ab_coeffs(w: &DenseTensor) -> Result<ABCoeffs> {
    check_222(w)?;
    let d = w.data();
    let (w1, w2, w3, w4, w5, w6, w7, w8) = (d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]);
    let n1 = w1 * w1 + w2 * w2 + w3 * w3 + w4 * w4;
    let n2 = w5 * w5 + w6 * w6 + w7 * w7 + w8 * w8;
    Ok(ABCoeffs {
        a1: 0.5 * (n1 - n2),
        a2: w1 * w5 + w2 * w6 + w3 * w7 + w4 * w8,
        a3: 0.5 * (n1 + n2),
        // det(W1) -/+ det(W2); the b's are exactly 2 det of the projection
        b1: (w1 * w4 - w2 * w3) - (w5 * w8 - w6 * w7),
        b2: w1 * w8 - w2 * w7 - w3 * w6 + w4 * w5,
        b3: (w1 * w4 - w2 * w3) + (w5 * w8 - w6 * w7),
    })
}

/// Rotates mode 3 so the two frontal slices become orthogonal
/// (`a2 = 0`). Returns the rotated tensor and the rotation `Z`; the
/// optimal mode-3 direction of the input is `Z` times that of the output.
pub fn orthogonalize_slices(w: &DenseTensor) -> Result<(DenseTensor, Matrix)> {
    check_222(w)?;
    let d = w.data();
    let g11: f64 = d[..4].iter().map(|x| x * x).sum();
    let g22: f64 = d[4..].iter().map(|x| x * x).sum();
    let g12: f64 = d[..4].iter().zip(&d[4..]).map(|(x, y)| x * y).sum();
    if g12.abs() <= 1e-14 * (g11 + g22).max(1e-300) {
        return Ok((w.clone(), Matrix::identity(2)));
    }
    let (_, v) = sym_eig2x2_max(g11, g12, g22);
    let z = Matrix::from_data(2, 2, vec![v[0], v[1], -v[1], v[0]])?;
    let rotated = w.mode_mat_product(2, &z)?;
    Ok((rotated, z))
}

/// Degree-6 polynomial whose real roots are the interior stationary
/// points of `f(arctan x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Degree6Poly {
    /// c[k] multiplies x^k
    pub c: [f64; 7],
}

impl Degree6Poly {
    pub fn as_polynomial(&self) -> Polynomial {
        Polynomial::new(self.c.to_vec())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Stationarity polynomial coefficients, assuming orthogonalized slices
/// (`a2 = 0`).
pub fn degree6_coeffs(ab: &ABCoeffs) -> Result<Degree6Poly> {
    if ab.a2.abs() > 1e-10 * ab.a3.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "a2 = {} not negligible; orthogonalize the slices first",
            ab.a2
        )));
    }
    let (a1, a3, b1, b2, b3) = (ab.a1, ab.a3, ab.b1, ab.b2, ab.b3);
    let c6 = b2 * b2 * (b3 - b1);
    let c5 = 2.0 * b2 * (2.0 * a1 * a1 - 2.0 * a3 * a1 - 2.0 * b1 * b1 + 2.0 * b3 * b1 + b2 * b2);
    let c4 = 4.0 * a1 * a1 * (b1 + b3) - 8.0 * a1 * a3 * b1 - 4.0 * b1 * b1 * (b1 - b3)
        + 11.0 * b1 * b2 * b2
        - b3 * b2 * b2;
    let c3 = 16.0 * b1 * b1 * b2 - 4.0 * b2 * b2 * b2;
    let c2 = -4.0 * a1 * a1 * (b1 - b3) - 8.0 * a1 * a3 * b1 + 4.0 * b1 * b1 * (b1 + b3)
        - 11.0 * b1 * b2 * b2
        - b3 * b2 * b2;
    let c1 = 2.0 * b2 * (2.0 * a1 * a1 + 2.0 * a1 * a3 - 2.0 * b1 * b1 - 2.0 * b1 * b3 + b2 * b2);
    let c0 = b2 * b2 * (b3 + b1);
    Ok(Degree6Poly {
        c: [c0, c1, c2, c3, c4, c5, c6],
    })
}

/// Result of a closed-form or alternating quantized solve: the scale and
/// one unit loading vector per mode, oriented so
/// `<W, u_0 ∘ ... ∘ u_{N-1}> = sigma >= 0`.
#[derive(Debug, Clone)]
pub struct QuantizedRank1 {
    pub sigma: f64,
    pub factors: Vec<Vec<f64>>,
    /// The selected root of the stationarity polynomial, if an interior
    /// root won (None when the boundary direction was chosen).
    pub root: Option<f64>,
    /// Residual diagnostics: |p(root)| and max |c_k| of the degree-6
    /// polynomial, when applicable.
    pub root_residual: Option<(f64, f64)>,
}

/// Closed-form best rank-1 approximation of a 2x2x2 tensor.
pub fn best_rank1_222(w: &DenseTensor) -> Result<QuantizedRank1> {
    check_222(w)?;
    if w.frobenius_norm_sq() == 0.0 {
        return Ok(QuantizedRank1 {
            sigma: 0.0,
            factors: vec![vec![1.0, 0.0]; 3],
            root: None,
            root_residual: None,
        });
    }
    let (rotated, z) = orthogonalize_slices(w)?;
    let ab = ab_coeffs(&rotated)?;
    let p6 = degree6_coeffs(&ab)?;
    let roots = p6.as_polynomial().real_roots()?;

    // candidates: interior roots plus the boundary direction eta = [0, 1]
    // that the arctan substitution cannot reach
    let mut best_x = f64::INFINITY;
    let mut best_f = ab.f_at(trig_from_tan(f64::INFINITY));
    let mut sorted = roots;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &x in &sorted {
        let f = ab.f_at(trig_from_tan(x));
        if f > best_f {
            best_f = f;
            best_x = x;
        }
    }

    let eta_rot = eta_from_tan(best_x);
    let eta3 = vec![
        z.get(0, 0) * eta_rot[0] + z.get(0, 1) * eta_rot[1],
        z.get(1, 0) * eta_rot[0] + z.get(1, 1) * eta_rot[1],
    ];
    let projected = w.mode_vec_contract(2, &eta3)?;
    let pm = Matrix::from_data(2, 2, projected.data().to_vec())?;
    let svd = svd2x2(&pm);
    let (root, root_residual) = if best_x.is_finite() {
        (
            Some(best_x),
            Some((p6.eval(best_x).abs(), p6.max_abs_coeff())),
        )
    } else {
        (None, None)
    };
    Ok(QuantizedRank1 {
        sigma: svd.sigma_max,
        factors: vec![svd.u.to_vec(), svd.v.to_vec(), eta3],
        root,
        root_residual,
    })
}

fn check_2222(w: &DenseTensor) -> Result<()> {
    if w.shape() != [2, 2, 2, 2] {
        return Err(Error::ShapeMismatch(format!(
            "expected 2x2x2x2, got {:?}",
            w.shape()
        )));
    }
    Ok(())
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ja in 0..a.cols() {
        for ia in 0..a.rows() {
            let av = a.get(ia, ja);
            if av == 0.0 {
                continue;
            }
            for jb in 0..b.cols() {
                for ib in 0..b.rows() {
                    out.set(ia * b.rows() + ib, ja * b.cols() + jb, av * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// The 3x3 matrices A, B with
/// `a(alpha, beta) = c_a^T A c_b = ||W x̄_3 eta_3 x̄_4 eta_4||_F^2` and
/// `b(alpha, beta) = c_a^T B c_b = 2 det(W x̄_3 eta_3 x̄_4 eta_4)`,
/// in the half-angle bases `c_a = [cos 2a, sin 2a, 1]`.
pub fn ab_matrices_2222(w: &DenseTensor) -> Result<(Matrix, Matrix)> {
    check_2222(w)?;
    // Gram-type order-4 tensors over (i2, i3, j2, j3):
    //   G_A = sum_{i0,i1} W[i0,i1,:,:] ∘ W[i0,i1,:,:]
    //   G_B uses the determinant pairing of the leading indices
    let mut ga = DenseTensor::zeros(&[2, 2, 2, 2]);
    let mut gb = DenseTensor::zeros(&[2, 2, 2, 2]);
    for j3 in 0..2 {
        for j2 in 0..2 {
            for i3 in 0..2 {
                for i2 in 0..2 {
                    let mut sa = 0.0;
                    for i0 in 0..2 {
                        for i1 in 0..2 {
                            sa += w.get(&[i0, i1, i2, i3]) * w.get(&[i0, i1, j2, j3]);
                        }
                    }
                    let sb = w.get(&[0, 0, i2, i3]) * w.get(&[1, 1, j2, j3])
                        - w.get(&[1, 0, i2, i3]) * w.get(&[0, 1, j2, j3])
                        - w.get(&[0, 1, i2, i3]) * w.get(&[1, 0, j2, j3])
                        + w.get(&[1, 1, i2, i3]) * w.get(&[0, 0, j2, j3]);
                    ga.set(&[i2, i3, j2, j3], sa);
                    gb.set(&[i2, i3, j2, j3], sb);
                }
            }
        }
    }
    // regroup (i2,i3,j2,j3) -> (i2,j2,i3,j3) through the commutation
    // matrix, reshape to 4x4, then reduce with Q on both sides
    let p = commutation_p1324();
    let q = q_matrix();
    let reduce = |g: &DenseTensor| -> Result<Matrix> {
        let permuted = p.matvec(g.data());
        let v = Matrix::from_data(4, 4, permuted)?;
        let mut m = q.matmul(&v).matmul(&q.transpose());
        m.scale(0.25);
        Ok(m)
    };
    Ok((reduce(&ga)?, reduce(&gb)?))
}

/// The 7x7 coefficient matrices of the bi-variate stationarity
/// polynomials:
/// `C1 = K (B ⊗ (F^T A ⊗ F^T A + F^T B ⊗ F^T B) - 2 A ⊗ F^T A ⊗ F^T B) K^T`
/// `C2 = K (B ⊗ (A F ⊗ A F + B F ⊗ B F) - 2 A ⊗ A F ⊗ B F) K^T`
pub fn bivariate_coeff_matrices(a: &Matrix, b: &Matrix) -> (Matrix, Matrix) {
    let f = f_matrix();
    let ft = f.transpose();
    let k = k_matrix();
    let kt = k.transpose();

    let fta = ft.matmul(a);
    let ftb = ft.matmul(b);
    let af = a.matmul(&f);
    let bf = b.matmul(&f);

    let add_scaled = |dst: &mut Matrix, src: &Matrix, s: f64| {
        for (x, y) in dst.data_mut().iter_mut().zip(src.data()) {
            *x += s * *y;
        }
    };

    let mut inner1 = kron(&fta, &fta);
    add_scaled(&mut inner1, &kron(&ftb, &ftb), 1.0);
    let mut m1 = kron(b, &inner1);
    add_scaled(&mut m1, &kron(a, &kron(&fta, &ftb)), -2.0);

    let mut inner2 = kron(&af, &af);
    add_scaled(&mut inner2, &kron(&bf, &bf), 1.0);
    let mut m2 = kron(b, &inner2);
    add_scaled(&mut m2, &kron(a, &kron(&af, &bf)), -2.0);

    (k.matmul(&m1).matmul(&kt), k.matmul(&m2).matmul(&kt))
}

/// `f(alpha, beta) = a + sqrt(a^2 - b^2) = 2 sigma_max^2` of the doubly
/// projected matrix, evaluated from the A/B matrices.
pub fn f_bivariate(a: &Matrix, b: &Matrix, ca: [f64; 3], cb: [f64; 3]) -> f64 {
    let av = bilinear(a, ca, cb);
    let bv = bilinear(b, ca, cb);
    av + (av * av - bv * bv).max(0.0).sqrt()
}

fn bilinear(m: &Matrix, x: [f64; 3], y: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for (j, &yj) in y.iter().enumerate() {
        for (i, &xi) in x.iter().enumerate() {
            s += xi * m.get(i, j) * yj;
        }
    }
    s
}

/// Descending powers `[x^6, ..., x, 1]` normalized to unit max-abs;
/// `x = inf` yields the leading direction `[1, 0, ..., 0]`.
fn tan_powers(x: f64) -> [f64; 7] {
    if x.is_infinite() {
        let mut p = [0.0; 7];
        p[0] = 1.0;
        return p;
    }
    let mut p = [0.0; 7];
    p[6] = 1.0;
    for k in (0..6).rev() {
        p[k] = p[k + 1] * x;
    }
    let m = p.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m > 0.0 {
        for v in &mut p {
            *v /= m;
        }
    }
    p
}

/// Method choice for the 2x2x2x2 solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method2222 {
    /// alternate the order-3 closed form, updating three components at a
    /// time
    Als3,
    /// alternate univariate degree-6 root solves of the bi-variate system
    Bivariate,
}

/// ALS3 from a given mode-0 start. Each inner solve is the global
/// closed-form optimum of the compressed order-3 problem, so sigma never
/// decreases across sweeps.
pub fn als3_from(w: &DenseTensor, eta0: [f64; 2]) -> Result<QuantizedRank1> {
    Ok(als3_with_history(w, eta0)?.0)
}

/// [`als3_from`] plus the per-sweep sigma history.
pub fn als3_with_history(w: &DenseTensor, eta0: [f64; 2]) -> Result<(QuantizedRank1, Vec<f64>)> {
    check_2222(w)?;
    let mut etas: Vec<Vec<f64>> = vec![
        eta0.to_vec(),
        vec![1.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 0.0],
    ];
    let mut sigma = w.contract_all(&etas)?;
    let mut history = Vec::new();
    for _sweep in 0..100 {
        for n in 0..4 {
            let projected = w.mode_vec_contract(n, &etas[n])?;
            let sol = best_rank1_222(&projected)?;
            let mut k = 0;
            for (mode, eta) in etas.iter_mut().enumerate() {
                if mode != n {
                    *eta = sol.factors[k].clone();
                    k += 1;
                }
            }
        }
        let new_sigma = w.contract_all(&etas)?;
        history.push(new_sigma);
        if (new_sigma - sigma).abs() < 1e-12 {
            sigma = new_sigma;
            break;
        }
        sigma = new_sigma;
    }
    // each sweep ends on an oriented closed-form solve, so sigma is
    // already nonnegative; the flip only guards a zero-sweep edge
    if sigma < 0.0 {
        for x in etas[0].iter_mut() {
            *x = -*x;
        }
        sigma = -sigma;
    }
    Ok((
        QuantizedRank1 {
            sigma,
            factors: etas,
            root: None,
            root_residual: None,
        },
        history,
    ))
}

/// Best rank-1 approximation of a 2x2x2x2 tensor.
pub fn best_rank1_2222(w: &DenseTensor, method: Method2222) -> Result<QuantizedRank1> {
    check_2222(w)?;
    if w.frobenius_norm_sq() == 0.0 {
        return Ok(QuantizedRank1 {
            sigma: 0.0,
            factors: vec![vec![1.0, 0.0]; 4],
            root: None,
            root_residual: None,
        });
    }
    match method {
        Method2222::Als3 => {
            let unf = w.unfold(0)?;
            let (_, svd_u) = dominant_left_singular(&unf)?;
            let inits: Vec<[f64; 2]> = vec![
                [svd_u[0], svd_u[1]],
                [1.0, 0.0],
                [0.0, 1.0],
                [
                    std::f64::consts::FRAC_1_SQRT_2,
                    std::f64::consts::FRAC_1_SQRT_2,
                ],
                [
                    std::f64::consts::FRAC_1_SQRT_2,
                    -std::f64::consts::FRAC_1_SQRT_2,
                ],
            ];
            let mut best: Option<QuantizedRank1> = None;
            for init in inits {
                let sol = als3_from(w, init)?;
                if best.as_ref().map_or(true, |b| sol.sigma > b.sigma) {
                    best = Some(sol);
                }
            }
            Ok(best.expect("nonempty init set"))
        }
        Method2222::Bivariate => bivariate_solve(w),
    }
}

fn bivariate_solve(w: &DenseTensor) -> Result<QuantizedRank1> {
    let (a, b) = ab_matrices_2222(w)?;
    let (c1, c2) = bivariate_coeff_matrices(&a, &b);

    // coarse angular grid; the alternation runs from every grid-local
    // maximum because near-degenerate twin maxima are common here
    let grid = 33usize;
    let angle = |i: usize| -> f64 {
        -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / grid as f64
    };
    let mut cells = vec![0.0f64; grid * grid];
    for i in 0..grid {
        let ca = [(2.0 * angle(i)).cos(), (2.0 * angle(i)).sin(), 1.0];
        for j in 0..grid {
            let cb = [(2.0 * angle(j)).cos(), (2.0 * angle(j)).sin(), 1.0];
            cells[i * grid + j] = f_bivariate(&a, &b, ca, cb);
        }
    }
    let mut starts: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            let v = cells[i * grid + j];
            let mut is_peak = true;
            'nb: for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = (i as i64 + di).rem_euclid(grid as i64) as usize;
                    let nj = (j as i64 + dj).rem_euclid(grid as i64) as usize;
                    if cells[ni * grid + nj] > v {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                starts.push((v, i, j));
            }
        }
    }
    starts.sort_by(|p, q| {
        q.0.partial_cmp(&p.0)
            .unwrap()
            .then(p.1.cmp(&q.1))
            .then(p.2.cmp(&q.2))
    });
    starts.truncate(8);

    let alternate = |x0: f64, z0: f64| -> Result<(f64, f64, f64)> {
        let mut x = x0;
        let mut z = z0;
        let mut f_cur = f_bivariate(&a, &b, trig_from_tan(x), trig_from_tan(z));
        for _ in 0..200 {
            // x-update: descending coefficients C1 * [z^6 .. 1]^T
            let zp = tan_powers(z);
            let cx = c1.matvec(&zp);
            x = best_univariate(&cx, |cand| {
                f_bivariate(&a, &b, trig_from_tan(cand), trig_from_tan(z))
            })?;
            // z-update: [x^6 .. 1] * C2
            let xp = tan_powers(x);
            let cz = c2.matvec_t(&xp);
            z = best_univariate(&cz, |cand| {
                f_bivariate(&a, &b, trig_from_tan(x), trig_from_tan(cand))
            })?;
            let f_new = f_bivariate(&a, &b, trig_from_tan(x), trig_from_tan(z));
            let stalled = (f_new - f_cur).abs() <= 1e-14 * f_cur.abs().max(1.0);
            f_cur = f_new;
            if stalled {
                break;
            }
        }
        Ok((f_cur, x, z))
    };

    let mut best: Option<(f64, f64, f64)> = None;
    for &(_, i, j) in &starts {
        let run = alternate(angle(i).tan(), angle(j).tan())?;
        if best.as_ref().map_or(true, |b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (_, x, z) = best.expect("grid always yields at least one peak");

    let eta3 = eta_from_tan(x).to_vec();
    let eta4 = eta_from_tan(z).to_vec();
    let projected = w.mode_vec_contract(3, &eta4)?.mode_vec_contract(2, &eta3)?;
    let pm = Matrix::from_data(2, 2, projected.data().to_vec())?;
    let svd = svd2x2(&pm);
    Ok(QuantizedRank1 {
        sigma: svd.sigma_max,
        factors: vec![svd.u.to_vec(), svd.v.to_vec(), eta3, eta4],
        root: if x.is_finite() { Some(x) } else { None },
        root_residual: None,
    })
}

/// Picks the candidate (real roots of the descending-coefficient
/// polynomial, plus the boundary) maximizing `score`.
fn best_univariate<F: Fn(f64) -> f64>(desc_coeffs: &[f64], score: F) -> Result<f64> {
    let ascending: Vec<f64> = desc_coeffs.iter().rev().copied().collect();
    let mut roots = Polynomial::new(ascending).real_roots()?;
    roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut best = f64::INFINITY;
    let mut best_score = score(f64::INFINITY);
    for &r in &roots {
        let s = score(r);
        if s > best_score {
            best_score = s;
            best = r;
        }
    }
    Ok(best)
}

/// Best rank-1 of a 2x...x2 tensor of any order: closed form for orders
/// 2 and 3, ALS3 for order 4, and alternating order-3 closed-form window
/// sweeps for order 5 and up. With `from_incumbent` the iteration starts
/// at `eta_n = [1, 0]` for every mode, which makes the result no worse
/// than the incumbent value `W[0, ..., 0]`.
pub fn best_rank1_pow2(w: &DenseTensor, from_incumbent: bool) -> Result<QuantizedRank1> {
    let n = w.order();
    if w.shape().iter().any(|&e| e != 2) {
        return Err(Error::ShapeMismatch(format!(
            "expected all extents 2, got {:?}",
            w.shape()
        )));
    }
    match n {
        0 | 1 => Err(Error::InvalidArgument("order must be >= 2".into())),
        2 => {
            let m = Matrix::from_data(2, 2, w.data().to_vec())?;
            let svd = svd2x2(&m);
            Ok(QuantizedRank1 {
                sigma: svd.sigma_max,
                factors: vec![svd.u.to_vec(), svd.v.to_vec()],
                root: None,
                root_residual: None,
            })
        }
        3 => best_rank1_222(w),
        4 => {
            if from_incumbent {
                als3_from(w, [1.0, 0.0])
            } else {
                best_rank1_2222(w, Method2222::Als3)
            }
        }
        _ => window_sweeps(w),
    }
}

fn window_sweeps(w: &DenseTensor) -> Result<QuantizedRank1> {
    let n = w.order();
    let mut etas: Vec<Vec<f64>> = vec![vec![1.0, 0.0]; n];
    let mut sigma = w.contract_all(&etas)?;
    for _sweep in 0..100 {
        for start in 0..=n - 3 {
            // compress every mode outside the window, highest first
            let mut cur = w.clone();
            for m in (0..n).rev() {
                if m < start || m >= start + 3 {
                    cur = cur.mode_vec_contract(m, &etas[m])?;
                }
            }
            let sol = best_rank1_222(&cur)?;
            for k in 0..3 {
                etas[start + k] = sol.factors[k].clone();
            }
        }
        let new_sigma = w.contract_all(&etas)?;
        if (new_sigma - sigma).abs() < 1e-12 * new_sigma.abs().max(1.0) {
            sigma = new_sigma;
            break;
        }
        sigma = new_sigma;
    }
    if sigma < 0.0 {
        for x in etas[0].iter_mut() {
            *x = -*x;
        }
        sigma = -sigma;
    }
    Ok(QuantizedRank1 {
        sigma,
        factors: etas,
        root: None,
        root_residual: None,
    })
}
