//! Rank-R Kruskal models: N factor matrices of width R and the dense
//! reconstruction kernels shared by the CP solvers.

use crate::error::{Error, Result};
use crate::rank1::Rank1Model;
use crate::tensor::{khatri_rao, DenseTensor, Matrix};

/// CP estimate as factor matrices `U_0 .. U_{N-1}`, each `I_n x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel {
    factors: Vec<Matrix>,
}

impl KruskalModel {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("no factor matrices".into()));
        }
        let r = factors[0].cols();
        for f in &factors {
            if f.cols() != r {
                return Err(Error::ShapeMismatch(format!(
                    "inconsistent rank: {} vs {}",
                    f.cols(),
                    r
                )));
            }
            if f.data().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("factor entry".into()));
            }
        }
        Ok(KruskalModel { factors })
    }

    pub fn from_components(components: &[Rank1Model]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("no components".into()));
        }
        let n = components[0].order();
        let r = components.len();
        let mut factors = Vec::with_capacity(n);
        for mode in 0..n {
            let len = components[0].factor(mode).len();
            let mut m = Matrix::zeros(len, r);
            for (j, comp) in components.iter().enumerate() {
                if comp.order() != n || comp.factor(mode).len() != len {
                    return Err(Error::ShapeMismatch("component shape mismatch".into()));
                }
                m.column_mut(j).copy_from_slice(comp.factor(mode));
            }
            factors.push(m);
        }
        Ok(KruskalModel { factors })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.rows()).collect()
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [Matrix] {
        &mut self.factors
    }

    pub fn component(&self, r: usize) -> Rank1Model {
        let factors = self.factors.iter().map(|f| f.column(r).to_vec()).collect();
        Rank1Model::new(factors).expect("component factors are finite")
    }

    pub fn components(&self) -> Vec<Rank1Model> {
        (0..self.rank()).map(|r| self.component(r)).collect()
    }

    /// Multiplies every factor entry by `s^(1/N)`, with the sign of `s`
    /// attached to mode 0.
    pub fn scale(&mut self, s: f64) {
        let n = self.order();
        let mag = s.abs().powf(1.0 / n as f64);
        for f in &mut self.factors {
            f.scale(mag);
        }
        if s < 0.0 {
            self.factors[0].scale(-1.0);
        }
    }
}

/// Dense reconstruction `X = sum_r u_{0,r} ∘ ... ∘ u_{N-1,r}`.
///
/// Entries accumulate in fixed component order r = 0..R-1 and each rank-1
/// entry multiplies factors from the last mode down, the same grouping the
/// Khatri-Rao kernel uses, so `reconstruct_kruskal` of a rank-1 model is
/// bit-identical to its Khatri-Rao column.
pub fn reconstruct_kruskal(m: &KruskalModel) -> DenseTensor {
    let shape = m.shape();
    let mut out = DenseTensor::zeros(&shape);
    accumulate_kruskal_into(out.data_mut(), m, 1.0);
    out
}

/// Adds `scale * reconstruct(m)` into `buf` without allocating.
pub fn accumulate_kruskal_into(buf: &mut [f64], m: &KruskalModel, scale: f64) {
    let shape = m.shape();
    for r in 0..m.rank() {
        let cols: Vec<&[f64]> = m.factors.iter().map(|f| f.column(r)).collect();
        accumulate_rank1_into(buf, &shape, &cols, scale);
    }
}

/// Adds `scale * (u_0 ∘ ... ∘ u_{N-1})` into `buf`. The per-entry product
/// is grouped from the last mode down: `((u_{N-1} * u_{N-2}) * ...) * u_0`.
pub fn accumulate_rank1_into(buf: &mut [f64], shape: &[usize], cols: &[&[f64]], scale: f64) {
    let n = shape.len();
    debug_assert_eq!(cols.len(), n);
    debug_assert_eq!(buf.len(), shape.iter().product::<usize>());
    let mut idx = vec![0usize; n];
    // prefix[k] = product of cols[k..] at the current index, seeded by 1.0
    let mut prefix = vec![1.0f64; n + 1];
    for k in (0..n).rev() {
        prefix[k] = prefix[k + 1] * cols[k][0];
    }
    let len = buf.len();
    for (lin, slot) in buf.iter_mut().enumerate().take(len) {
        *slot += scale * prefix[0];
        if lin + 1 == len {
            break;
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        for m in (0..=k).rev() {
            prefix[m] = prefix[m + 1] * cols[m][idx[m]];
        }
    }
}

/// Relative reconstruction error `||t - X|| / ||t||`, computed from the
/// explicit residual.
pub fn relative_error(t: &DenseTensor, m: &KruskalModel) -> Result<f64> {
    if m.shape() != t.shape() {
        return Err(Error::ShapeMismatch("model vs tensor shape".into()));
    }
    let mut buf = vec![0.0f64; t.len()];
    accumulate_kruskal_into(&mut buf, m, 1.0);
    let mut err_sq = 0.0;
    for (a, b) in t.data().iter().zip(&buf) {
        let d = a - b;
        err_sq += d * d;
    }
    let denom = t.frobenius_norm();
    if denom == 0.0 {
        return Ok(err_sq.sqrt());
    }
    Ok(err_sq.sqrt() / denom)
}

/// Checks `reconstruct_kruskal` against the Khatri-Rao identity
/// `vec(X) = (U_{N-1} ⊙ ... ⊙ U_0) 1_R`; used by tests and callers that
/// want an independent reconstruction route.
pub fn reconstruct_via_khatri_rao(m: &KruskalModel) -> Result<DenseTensor> {
    let kr = khatri_rao(m.factors())?;
    let ones = vec![1.0; m.rank()];
    let data = kr.matvec(&ones);
    DenseTensor::from_data(&m.shape(), data)
}
