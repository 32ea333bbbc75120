//! Benchmark tensor construction: matrix-multiplication tensors, random
//! Kruskal tensors with optional collinear blocks, and SNR-controlled
//! noise injection. Everything is a pure function of its arguments
//! including the seed.

use crate::error::{Error, Result};
use crate::kruskal::{reconstruct_kruskal, KruskalModel};
use crate::rng::{normal_vec, stream};
use crate::tensor::{dot, normalize, DenseTensor, Matrix};

/// The product `(m x n) * (n x p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultTensorSpec {
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

impl MultTensorSpec {
    pub fn new(m: usize, n: usize, p: usize) -> Result<Self> {
        if m == 0 || n == 0 || p == 0 {
            return Err(Error::InvalidArgument("dimensions must be >= 1".into()));
        }
        Ok(MultTensorSpec { m, n, p })
    }

    /// `(mn) x (np) x (mp)`.
    pub fn shape(&self) -> [usize; 3] {
        [self.m * self.n, self.n * self.p, self.m * self.p]
    }
}

/// The 0/1 tensor encoding matrix multiplication:
/// `vec(A B) = Y x_1 vec(A^T)^T x_2 vec(B^T)^T` for all `A` (m x n) and
/// `B` (n x p). There is exactly one nonzero per `(q, r, c)` triple, at
/// `(q + n r, c + p q, r + m c)`.
pub fn mult_tensor(spec: MultTensorSpec) -> DenseTensor {
    let (m, n, p) = (spec.m, spec.n, spec.p);
    let mut t = DenseTensor::zeros(&spec.shape());
    for c in 0..p {
        for r in 0..m {
            for q in 0..n {
                t.set(&[q + n * r, c + p * q, r + m * c], 1.0);
            }
        }
    }
    t
}

/// Known CP ranks of the multiplication tensors studied here; `None`
/// otherwise.
pub fn known_rank(spec: MultTensorSpec) -> Option<usize> {
    match (spec.m, spec.n, spec.p) {
        (2, 2, 2) => Some(7),
        (2, 3, 2) => Some(11),
        (3, 3, 3) => Some(23),
        _ => None,
    }
}

/// Collinearity constraint for [`random_kruskal`]: every pairwise cosine
/// between columns of the same block lies in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Collinearity {
    pub lo: f64,
    pub hi: f64,
    /// Block sizes; must sum to the rank.
    pub blocks: Vec<usize>,
}

/// Seeded random Kruskal model plus its dense reconstruction. Without a
/// collinearity constraint the factor columns are unit-normalized
/// standard normal draws. With one, each block shares a random direction
/// perturbed orthogonally and rejection-checked into the cosine range.
pub fn random_kruskal(
    dims: &[usize],
    rank: usize,
    seed: u64,
    collinearity: Option<&Collinearity>,
) -> Result<(KruskalModel, DenseTensor)> {
    if rank == 0 || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument("dims and rank must be >= 1".into()));
    }
    if let Some(c) = collinearity {
        if !(0.0 < c.lo && c.lo <= c.hi && c.hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "infeasible collinearity range [{}, {}]",
                c.lo, c.hi
            )));
        }
        if c.blocks.iter().sum::<usize>() != rank {
            return Err(Error::InvalidArgument(format!(
                "blocks {:?} do not sum to rank {}",
                c.blocks, rank
            )));
        }
        if c.blocks.iter().any(|&b| b == 0) {
            return Err(Error::InvalidArgument("empty block".into()));
        }
    }

    let mut factors = Vec::with_capacity(dims.len());
    for (mode, &d) in dims.iter().enumerate() {
        let mut mat = Matrix::zeros(d, rank);
        match collinearity {
            None => {
                let mut rng = stream(seed, &[mode as u64]);
                for j in 0..rank {
                    let mut col = normal_vec(&mut rng, d);
                    if normalize(&mut col) == 0.0 {
                        col[0] = 1.0;
                    }
                    mat.column_mut(j).copy_from_slice(&col);
                }
            }
            Some(c) => {
                let mut col_base = 0usize;
                for (b, &bsize) in c.blocks.iter().enumerate() {
                    let cols = collinear_block(d, bsize, c.lo, c.hi, seed, mode as u64, b as u64)?;
                    for (j, col) in cols.into_iter().enumerate() {
                        mat.column_mut(col_base + j).copy_from_slice(&col);
                    }
                    col_base += bsize;
                }
            }
        }
        factors.push(mat);
    }
    let model = KruskalModel::new(factors)?;
    let tensor = reconstruct_kruskal(&model);
    Ok((model, tensor))
}

/// One block of unit columns with pairwise cosines in `[lo, hi]`:
/// a shared direction plus a scaled orthogonal perturbation, redrawn
/// until the rejection check passes.
fn collinear_block(
    d: usize,
    bsize: usize,
    lo: f64,
    hi: f64,
    seed: u64,
    mode: u64,
    block: u64,
) -> Result<Vec<Vec<f64>>> {
    if bsize > 1 && d < 2 {
        return Err(Error::InvalidArgument(
            "collinear block needs extent >= 2".into(),
        ));
    }
    let mid = 0.5 * (lo + hi);
    // typical cosine of d + eps*w against d + eps*w' with orthonormal-ish
    // perturbations is 1/(1+eps^2)
    let eps0 = (1.0 / mid - 1.0).max(1e-12).sqrt();
    for attempt in 0..10_000u64 {
        let mut rng = stream(seed, &[mode, block, attempt]);
        // mild annealing around eps0 on retries
        let eps = eps0 * (1.0 + 0.1 * (attempt as f64 / 100.0).sin());
        let mut shared = normal_vec(&mut rng, d);
        if normalize(&mut shared) == 0.0 {
            continue;
        }
        let mut cols = Vec::with_capacity(bsize);
        for _ in 0..bsize {
            let mut w = normal_vec(&mut rng, d);
            let proj = dot(&w, &shared);
            for (wi, si) in w.iter_mut().zip(&shared) {
                *wi -= proj * si;
            }
            if normalize(&mut w) == 0.0 && bsize > 1 {
                break;
            }
            let mut col: Vec<f64> = shared
                .iter()
                .zip(&w)
                .map(|(&s, &wi)| s + eps * wi)
                .collect();
            normalize(&mut col);
            cols.push(col);
        }
        if cols.len() != bsize {
            continue;
        }
        let mut ok = true;
        'outer: for i in 0..bsize {
            for j in i + 1..bsize {
                let c = dot(&cols[i], &cols[j]);
                if c < lo || c > hi {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok || bsize == 1 {
            return Ok(cols);
        }
    }
    Err(Error::Degenerate(format!(
        "could not satisfy collinearity [{}, {}] for block of {} in dimension {}",
        lo, hi, bsize, d
    )))
}

/// Adds seeded Gaussian noise scaled so that
/// `10 log10(||t||^2 / ||noise||^2) = snr_db`. Infinite SNR returns the
/// input unchanged.
pub fn add_noise(t: &DenseTensor, snr_db: f64, seed: u64) -> Result<DenseTensor> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(t.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument("snr must be finite or +inf".into()));
    }
    let signal = t.frobenius_norm();
    if signal == 0.0 {
        return Err(Error::Degenerate(
            "cannot fix SNR against a zero tensor".into(),
        ));
    }
    let mut rng = stream(seed, &[0x4015e]);
    let mut g = normal_vec(&mut rng, t.len());
    let gn = crate::tensor::norm(&g);
    if gn == 0.0 {
        return Err(Error::Degenerate("degenerate noise draw".into()));
    }
    let scale = signal / (gn * 10f64.powf(snr_db / 20.0));
    for x in &mut g {
        *x *= scale;
    }
    let data: Vec<f64> = t.data().iter().zip(&g).map(|(&a, &b)| a + b).collect();
    DenseTensor::from_data(t.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mult_222_matches_printed_slices() {
        let t = mult_tensor(MultTensorSpec::new(2, 2, 2).unwrap());
        assert_eq!(t.shape(), &[4, 4, 4]);
        // frontal slices with ones at (1-based):
        // Y1: (1,1),(2,3); Y2: (3,1),(4,3); Y3: (1,2),(2,4); Y4: (3,2),(4,4)
        let expect = [
            vec![(0, 0), (1, 2)],
            vec![(2, 0), (3, 2)],
            vec![(0, 1), (1, 3)],
            vec![(2, 1), (3, 3)],
        ];
        for (k, ones) in expect.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    let want = if ones.contains(&(i, j)) { 1.0 } else { 0.0 };
                    assert_eq!(t.get(&[i, j, k]), want, "slice {} at ({},{})", k, i, j);
                }
            }
        }
    }

    #[test]
    fn mult_scalar_case() {
        let t = mult_tensor(MultTensorSpec::new(1, 1, 1).unwrap());
        assert_eq!(t.shape(), &[1, 1, 1]);
        assert_eq!(t.data(), &[1.0]);
    }

    #[test]
    fn mult_identity_holds_for_random_pairs() {
        for (m, n, p) in [(2usize, 2usize, 2usize), (2, 3, 2), (3, 3, 3)] {
            let spec = MultTensorSpec::new(m, n, p).unwrap();
            let t = mult_tensor(spec);
            // exactly m*n*p ones
            let ones = t.data().iter().filter(|&&v| v == 1.0).count();
            let zeros = t.data().iter().filter(|&&v| v == 0.0).count();
            assert_eq!(ones, m * n * p);
            assert_eq!(ones + zeros, t.len());
            let mut rng = stream(7, &[m as u64, n as u64, p as u64]);
            for _ in 0..100 {
                let a = normal_vec(&mut rng, m * n);
                let b = normal_vec(&mut rng, n * p);
                // a = vec(A^T): A[i,j] = a[j + n*i]; b = vec(B^T)
                let contracted = t
                    .mode_vec_contract(0, &a)
                    .unwrap()
                    .mode_vec_contract(0, &b)
                    .unwrap();
                // expected vec(AB)[r + m*c] = sum_q A[r,q] B[q,c]
                for c in 0..p {
                    for r in 0..m {
                        let mut s = 0.0;
                        for q in 0..n {
                            s += a[q + n * r] * b[c + p * q];
                        }
                        let got = contracted.data()[r + m * c];
                        assert!(
                            (got - s).abs() <= 1e-12 * s.abs().max(1.0),
                            "({},{},{}): {} vs {}",
                            m,
                            n,
                            p,
                            got,
                            s
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn known_ranks() {
        assert_eq!(known_rank(MultTensorSpec::new(2, 2, 2).unwrap()), Some(7));
        assert_eq!(known_rank(MultTensorSpec::new(2, 3, 2).unwrap()), Some(11));
        assert_eq!(known_rank(MultTensorSpec::new(3, 3, 3).unwrap()), Some(23));
        assert_eq!(known_rank(MultTensorSpec::new(2, 2, 3).unwrap()), None);
    }

    #[test]
    fn random_kruskal_rank1_is_exact_outer_product() {
        let (model, tensor) = random_kruskal(&[3, 4, 2], 1, 5, None).unwrap();
        let direct = model.component(0).reconstruct();
        assert_eq!(tensor.data(), direct.data());
    }

    #[test]
    fn random_kruskal_deterministic() {
        let (_, a) = random_kruskal(&[4, 4, 4], 3, 17, None).unwrap();
        let (_, b) = random_kruskal(&[4, 4, 4], 3, 17, None).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn collinear_block_cosines_in_range() {
        let coll = Collinearity {
            lo: 0.95,
            hi: 0.999,
            blocks: vec![4],
        };
        let (model, _) = random_kruskal(&[5, 5, 5], 4, 23, Some(&coll)).unwrap();
        for f in model.factors() {
            for i in 0..4 {
                for j in i + 1..4 {
                    let c = dot(f.column(i), f.column(j));
                    assert!((0.95..=0.999).contains(&c), "cosine {}", c);
                }
            }
        }
    }

    #[test]
    fn two_block_collinear_tensor() {
        let coll = Collinearity {
            lo: 0.95,
            hi: 0.999,
            blocks: vec![4, 4],
        };
        let (model, tensor) = random_kruskal(&[5, 5, 5], 8, 31, Some(&coll)).unwrap();
        assert_eq!(model.rank(), 8);
        assert_eq!(tensor.shape(), &[5, 5, 5]);
        // within-block collinear, across blocks unconstrained
        for f in model.factors() {
            for base in [0usize, 4] {
                for i in base..base + 4 {
                    for j in i + 1..base + 4 {
                        let c = dot(f.column(i), f.column(j));
                        assert!((0.95..=0.999).contains(&c));
                    }
                }
            }
        }
    }

    #[test]
    fn infeasible_collinearity_rejected() {
        let coll = Collinearity {
            lo: 0.999,
            hi: 0.95,
            blocks: vec![2],
        };
        assert!(random_kruskal(&[5, 5, 5], 2, 1, Some(&coll)).is_err());
    }

    #[test]
    fn noise_sentinel_and_level() {
        let (_, t) = random_kruskal(&[4, 4, 4], 2, 3, None).unwrap();
        let same = add_noise(&t, f64::INFINITY, 9).unwrap();
        assert_eq!(same.data(), t.data());

        let noisy = add_noise(&t, 0.0, 9).unwrap();
        let mut diff = 0.0;
        for (a, b) in noisy.data().iter().zip(t.data()) {
            diff += (a - b) * (a - b);
        }
        let ratio = 10.0 * (t.frobenius_norm_sq() / diff).log10();
        assert!(ratio.abs() < 0.01, "snr {}", ratio);

        let again = add_noise(&t, 0.0, 9).unwrap();
        assert_eq!(noisy.data(), again.data());

        let zero = DenseTensor::zeros(&[2, 2]);
        assert!(add_noise(&zero, 10.0, 1).is_err());
    }

    #[test]
    fn mult_tensor_rank1_fit_is_poor() {
        // sanity: the multiplication tensor is far from rank 1
        let t = mult_tensor(MultTensorSpec::new(2, 2, 2).unwrap());
        let mut best: f64 = 1.0;
        let mut rng = stream(2, &[]);
        for _ in 0..3 {
            let start = crate::rank1::Rank1Model::new(vec![
                normal_vec(&mut rng, 4),
                normal_vec(&mut rng, 4),
                normal_vec(&mut rng, 4),
            ])
            .unwrap()
            .unit_normalized()
            .unwrap()
            .0;
            let mut m = start;
            for _ in 0..200 {
                m = crate::rank1::als_step(&t, &m).unwrap().0;
            }
            let e = m.optimal_scale(&t).unwrap().relative_error(&t).unwrap();
            best = best.min(e);
        }
        assert!(best > 0.5, "rank-1 fit unexpectedly good: {}", best);
    }
}
