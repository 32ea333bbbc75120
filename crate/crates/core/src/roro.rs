//! The rotational best rank-1 algorithm.
//!
//! On the unit spheres the Lagrangian gradient at `u_n` is
//! `g~_n = xi t_n - xi^2 u_n`, orthogonal to `u_n`. Each step rotates all
//! loading vectors inside their 2-column orthonormal bases `[u_n, g-_n]`
//! at once: projecting the data onto those bases yields a 2x...x2 tensor
//! `W` whose best rank-1 unit vectors `eta_n` give the updates
//! `u_n <- [u_n, g-_n] eta_n`. Since `eta_n = [1, 0]` reproduces the
//! incumbent, an exact subproblem solve never decreases `xi`.

use crate::error::{Error, Result};
use crate::quant::best_rank1_pow2;
use crate::rank1::{Rank1Model, Rank1Target};
use crate::tensor::{dot, norm, normalize, Matrix};

/// Orthonormal completion for a mode whose rotational gradient vanished:
/// the first canonical vector Gram-Schmidt'd against `u`, falling over to
/// the second when `u` is (numerically) the first axis. Returns `None`
/// when the mode has extent 1 and no orthogonal complement exists.
pub fn degenerate_mode_basis(u: &[f64]) -> Option<Vec<f64>> {
    let n = u.len();
    if n < 2 {
        return None;
    }
    for axis in 0..n {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        let proj = dot(&v, u);
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= proj * ui;
        }
        if normalize(&mut v) > 1e-8 {
            return Some(v);
        }
    }
    None
}

/// One RORO step on a unit-factor model.
///
/// Modes whose gradient vanishes get an arbitrary orthogonal-complement
/// second basis column, so the quantized subproblem stays well posed even
/// at stationary points; the update is only taken when it strictly
/// improves `xi`, which both preserves monotonicity and lets the step
/// escape a non-global stationary point (where the subproblem still finds
/// a better direction inside the spanned planes). A model the subproblem
/// cannot improve is returned unchanged.
pub fn roro_step<T: Rank1Target + ?Sized>(t: &T, m: &Rank1Model) -> Result<Rank1Model> {
    let n = m.order();
    debug_assert!(
        m.gammas().iter().all(|&g| (g - 1.0).abs() < 1e-8),
        "roro_step expects unit factors"
    );

    let mut t_vecs = Vec::with_capacity(n);
    for mode in 0..n {
        t_vecs.push(t.contract_all_but(m.factors(), mode)?);
    }
    let xi = dot(&t_vecs[0], m.factor(0));
    let threshold = 1e-12 * (xi * xi).max(1.0);

    // second basis columns; None marks a frozen extent-1 mode
    let mut second: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for mode in 0..n {
        let u = m.factor(mode);
        let mut g: Vec<f64> = t_vecs[mode]
            .iter()
            .zip(u)
            .map(|(&ti, &ui)| xi * ti - xi * xi * ui)
            .collect();
        if norm(&g) <= threshold {
            second.push(degenerate_mode_basis(u));
        } else {
            // re-orthogonalize against u before normalizing; exact in
            // theory, this keeps the basis orthonormal to rounding
            let proj = dot(&g, u);
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi -= proj * ui;
            }
            if normalize(&mut g) == 0.0 {
                second.push(degenerate_mode_basis(u));
            } else {
                second.push(Some(g));
            }
        }
    }
    if second.iter().all(|g| g.is_none()) {
        // every mode has extent 1: nothing can rotate
        return Ok(m.clone());
    }

    let bases: Vec<Matrix> = m
        .factors()
        .iter()
        .zip(&second)
        .map(|(u, g)| {
            let len = u.len();
            let mut cols = Vec::with_capacity(2 * len);
            cols.extend_from_slice(u);
            match g {
                Some(gv) => cols.extend_from_slice(gv),
                None => cols.extend(std::iter::repeat(0.0).take(len)),
            }
            Matrix::from_data(len, 2, cols).expect("basis matrix")
        })
        .collect();

    let w = t.project(&bases)?;
    let sol = best_rank1_pow2(&w, true)?;
    if sol.sigma <= xi {
        // no strict improvement available in the spanned planes
        return Ok(m.clone());
    }
    let mut etas = sol.factors;

    // frozen modes keep their component: force eta = [1, 0], moving any
    // stray sign onto the first rotatable mode
    let rotatable = second.iter().position(|g| g.is_some());
    for (mode, g) in second.iter().enumerate() {
        if g.is_none() && etas[mode][0] < 0.0 {
            etas[mode][0] = -etas[mode][0];
            etas[mode][1] = 0.0;
            if let Some(r) = rotatable {
                for x in etas[r].iter_mut() {
                    *x = -*x;
                }
            }
        } else if g.is_none() {
            etas[mode][1] = 0.0;
        }
    }

    let mut factors = Vec::with_capacity(n);
    for mode in 0..n {
        let u = m.factor(mode);
        let eta = &etas[mode];
        let mut new_u: Vec<f64> = match &second[mode] {
            Some(g) => u
                .iter()
                .zip(g)
                .map(|(&ui, &gi)| eta[0] * ui + eta[1] * gi)
                .collect(),
            None => u.iter().map(|&ui| eta[0] * ui).collect(),
        };
        if normalize(&mut new_u) == 0.0 {
            return Err(Error::Degenerate("zero rotation result".into()));
        }
        factors.push(new_u);
    }
    Rank1Model::new(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank1::{als_step, svd_init};
    use crate::rng::{normal_vec, stream};
    use crate::tensor::DenseTensor;

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = stream(seed, &[]);
        DenseTensor::from_data(shape, normal_vec(&mut rng, shape.iter().product())).unwrap()
    }

    #[test]
    fn degenerate_basis_examples() {
        // u = e1 in R^3 -> second column e2
        let b = degenerate_mode_basis(&[1.0, 0.0, 0.0]).unwrap();
        assert!((b[0]).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12 && b[2].abs() < 1e-12);
        // u = [1,1]/sqrt(2) -> second column [1,-1]/sqrt(2)
        let s = 1.0 / 2.0_f64.sqrt();
        let b = degenerate_mode_basis(&[s, s]).unwrap();
        assert!((b[0] - s).abs() < 1e-12 && (b[1] + s).abs() < 1e-12);
        // extent-1 mode has no complement
        assert!(degenerate_mode_basis(&[1.0]).is_none());
    }

    #[test]
    fn stationary_exact_rank1_unchanged() {
        let m = Rank1Model::new(vec![vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut t = m.reconstruct();
        for x in t.data_mut() {
            *x *= 2.0;
        }
        let stepped = roro_step(&t, &m).unwrap();
        for (f, g) in stepped.factors().iter().zip(m.factors()) {
            for (a, b) in f.iter().zip(g) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frozen_extent1_mode_unchanged() {
        // shape [1, 3, 3]: mode 0 has no orthogonal complement and must
        // stay put while the other modes rotate
        let t = random_tensor(&[1, 3, 3], 970);
        let mut m = svd_init(&t).unwrap();
        let u0 = m.factor(0).to_vec();
        for _ in 0..10 {
            m = roro_step(&t, &m).unwrap();
            assert_eq!(m.factor(0), &u0[..]);
        }
    }

    #[test]
    fn xi_non_decreasing_per_step() {
        for seed in 0..20 {
            let t = random_tensor(&[5, 5, 5], 900 + seed);
            let mut m = svd_init(&t).unwrap();
            let mut xi_prev = m.xi(&t).unwrap().abs();
            for _ in 0..50 {
                m = roro_step(&t, &m).unwrap();
                let xi = m.xi(&t).unwrap();
                assert!(
                    xi >= xi_prev - 1e-10,
                    "xi decreased: {} -> {} (seed {})",
                    xi_prev,
                    xi,
                    seed
                );
                xi_prev = xi;
            }
        }
    }

    #[test]
    fn unit_length_preserved() {
        let t = random_tensor(&[4, 3, 5], 950);
        let mut m = svd_init(&t).unwrap();
        for _ in 0..30 {
            m = roro_step(&t, &m).unwrap();
            for g in m.gammas() {
                assert!((g - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn w_consistency_identity_rotation() {
        // W contracted with eta = [1,0] in every mode equals xi
        let t = random_tensor(&[4, 4, 4], 960);
        let m = svd_init(&t).unwrap();
        let mut t_vecs = Vec::new();
        for mode in 0..3 {
            t_vecs.push(t.contract_all_but(m.factors(), mode).unwrap());
        }
        let xi = dot(&t_vecs[0], m.factor(0));
        let bases: Vec<Matrix> = (0..3)
            .map(|mode| {
                let u = m.factor(mode);
                let mut g: Vec<f64> = t_vecs[mode]
                    .iter()
                    .zip(u)
                    .map(|(&ti, &ui)| xi * ti - xi * xi * ui)
                    .collect();
                let proj = dot(&g, u);
                for (gi, ui) in g.iter_mut().zip(u) {
                    *gi -= proj * ui;
                }
                normalize(&mut g);
                let mut cols = u.to_vec();
                cols.extend_from_slice(&g);
                Matrix::from_data(u.len(), 2, cols).unwrap()
            })
            .collect();
        let w = t.multi_mode_product(&bases).unwrap();
        let e1 = vec![vec![1.0, 0.0]; 3];
        let back = w.contract_all(&e1).unwrap();
        assert!((back - xi).abs() <= 1e-10 * xi.abs().max(1.0));
        // basis orthonormality
        for b in &bases {
            let u = b.column(0);
            let g = b.column(1);
            assert!((dot(u, u) - 1.0).abs() < 1e-10);
            assert!((dot(g, g) - 1.0).abs() < 1e-10);
            assert!(dot(u, g).abs() < 1e-8);
        }
    }

    #[test]
    fn roro_matches_als_on_easy_instance() {
        // both should drive relative error to the same local optimum on an
        // exactly rank-1 tensor
        let truth = Rank1Model::new(vec![
            vec![1.0, 2.0, 3.0],
            vec![-1.0, 0.5, 2.0],
            vec![0.3, 0.7, 1.1],
        ])
        .unwrap();
        let t = truth.reconstruct();
        let mut m = svd_init(&t).unwrap();
        for _ in 0..20 {
            m = roro_step(&t, &m).unwrap();
        }
        let scaled = m.optimal_scale(&t).unwrap();
        assert!(scaled.relative_error(&t).unwrap() < 1e-10);
        let mut a = svd_init(&t).unwrap();
        for _ in 0..20 {
            a = als_step(&t, &a).unwrap().0;
        }
        let scaled_a = a.optimal_scale(&t).unwrap();
        assert!(scaled_a.relative_error(&t).unwrap() < 1e-10);
    }
}
