//! Dense tensor storage, matricization, multilinear contractions and
//! Khatri-Rao products.
//!
//! Layout convention: column-major everywhere. The linear index of the
//! entry `(i_0, i_1, ..., i_{N-1})` is `i_0 + I_0*(i_1 + I_1*(i_2 + ...))`,
//! so `vec` of a rank-1 tensor `u_0 ∘ u_1 ∘ ... ∘ u_{N-1}` equals the
//! Kronecker product `u_{N-1} ⊗ ... ⊗ u_1 ⊗ u_0`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense, column-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from column-major data.
    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a row-major slice of slices, as printed on paper.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let c = cols.len();
        let r = if c == 0 { 0 } else { cols[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for col in cols {
            if col.len() != r {
                return Err(Error::ShapeMismatch("ragged columns".into()));
            }
            data.extend_from_slice(col);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self * other`, plain triple loop; fine for the small systems here.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other.get(k, j);
                if b == 0.0 {
                    continue;
                }
                for i in 0..self.rows {
                    out.data[i + j * self.rows] += self.data[i + k * self.rows] * b;
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn matmul_tn(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "matmul_tn dimension mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            for i in 0..self.cols {
                let mut s = 0.0;
                for k in 0..self.rows {
                    s += self.get(k, i) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for j in 0..self.cols {
            let x = v[j];
            if x == 0.0 {
                continue;
            }
            let col = self.column(j);
            for i in 0..self.rows {
                out[i] += col[i] * x;
            }
        }
        out
    }

    /// `self^T * v`.
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "matvec_t dimension mismatch");
        (0..self.cols).map(|j| dot(self.column(j), v)).collect()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Dense real tensor of order N with explicit shape, column-major data.
///
/// Constructors reject NaN/Inf entries and shape/data length mismatches.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.iter().all(|&e| e > 0), "extents must be positive");
        let len = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_data(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::ShapeMismatch("zero extent".into()));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} needs {} entries, got {}",
                shape,
                len,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {}", bad)));
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Order-3 tensor from frontal slices (each slice row-major, as printed).
    pub fn from_frontal_slices(slices: &[Matrix]) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::ShapeMismatch("no slices".into()));
        }
        let r = slices[0].rows();
        let c = slices[0].cols();
        let mut data = Vec::with_capacity(r * c * slices.len());
        for s in slices {
            if s.rows() != r || s.cols() != c {
                return Err(Error::ShapeMismatch("slice shape mismatch".into()));
            }
            data.extend_from_slice(s.data());
        }
        DenseTensor::from_data(&[r, c, slices.len()], data)
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut lin = 0;
        for k in (0..idx.len()).rev() {
            debug_assert!(idx[k] < self.shape[k]);
            lin = lin * self.shape[k] + idx[k];
        }
        lin
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], v: f64) {
        let lin = self.linear_index(idx);
        self.data[lin] = v;
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Mode-n matricization. Row index is `i_mode`; the column index runs
    /// over the remaining modes in increasing order, first index fastest,
    /// so `unfold(t, 0)` is the plain column-major reshape and
    /// `unfold(u ∘ v ∘ w, 0) = u (w ⊗ v)^T`.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        let n = self.order();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        let inner: usize = self.shape[..mode].iter().product();
        let outer: usize = self.shape[mode + 1..].iter().product();
        let mut out = Matrix::zeros(rows, cols);
        for o in 0..outer {
            for j in 0..rows {
                let src = (o * rows + j) * inner;
                for i in 0..inner {
                    // column index: lower modes fastest, then upper modes
                    out.set(j, o * inner + i, self.data[src + i]);
                }
            }
        }
        Ok(out)
    }

    /// Inverse of `unfold` for the same column ordering.
    pub fn fold(mat: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
        let n = shape.len();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        let rows = shape[mode];
        let total: usize = shape.iter().product();
        if mat.rows() != rows || mat.rows() * mat.cols() != total {
            return Err(Error::ShapeMismatch("fold shape mismatch".into()));
        }
        let inner: usize = shape[..mode].iter().product();
        let outer: usize = shape[mode + 1..].iter().product();
        let mut t = DenseTensor::zeros(shape);
        for o in 0..outer {
            for j in 0..rows {
                let dst = (o * rows + j) * inner;
                for i in 0..inner {
                    t.data[dst + i] = mat.get(j, o * inner + i);
                }
            }
        }
        Ok(t)
    }

    /// Contracts mode `mode` with the vector `v`, producing an order-(N-1)
    /// tensor.
    pub fn mode_vec_contract(&self, mode: usize, v: &[f64]) -> Result<DenseTensor> {
        let n = self.order();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        if v.len() != self.shape[mode] {
            return Err(Error::ShapeMismatch(format!(
                "mode {} has extent {}, vector has length {}",
                mode,
                self.shape[mode],
                v.len()
            )));
        }
        let m = self.shape[mode];
        let inner: usize = self.shape[..mode].iter().product();
        let outer: usize = self.shape[mode + 1..].iter().product();
        let mut new_shape: Vec<usize> = Vec::with_capacity(n.saturating_sub(1).max(1));
        new_shape.extend_from_slice(&self.shape[..mode]);
        new_shape.extend_from_slice(&self.shape[mode + 1..]);
        if new_shape.is_empty() {
            new_shape.push(1);
        }
        let mut out = DenseTensor::zeros(&new_shape);
        for o in 0..outer {
            let dst = o * inner;
            for (j, &vj) in v.iter().enumerate().take(m) {
                if vj == 0.0 {
                    continue;
                }
                let src = (o * m + j) * inner;
                for i in 0..inner {
                    out.data[dst + i] += vj * self.data[src + i];
                }
            }
        }
        Ok(out)
    }

    /// Multilinear contraction over all modes except `skip`:
    /// `t ×̄_{k≠skip} vectors[k]`, a vector of length `I_skip`.
    /// `vectors[skip]` is ignored.
    pub fn contract_all_but(&self, vectors: &[Vec<f64>], skip: usize) -> Result<Vec<f64>> {
        let n = self.order();
        if skip >= n {
            return Err(Error::ModeOutOfRange {
                mode: skip,
                order: n,
            });
        }
        if vectors.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} vectors, got {}",
                n,
                vectors.len()
            )));
        }
        for (k, v) in vectors.iter().enumerate() {
            if k != skip && v.len() != self.shape[k] {
                return Err(Error::ShapeMismatch(format!(
                    "vector {} has length {}, mode extent is {}",
                    k,
                    v.len(),
                    self.shape[k]
                )));
            }
        }
        // Contract highest modes first so remaining mode indices are stable.
        let mut cur = None::<DenseTensor>;
        for m in (0..n).rev() {
            if m == skip {
                continue;
            }
            let next = match &cur {
                None => self.mode_vec_contract(m, &vectors[m])?,
                Some(t) => t.mode_vec_contract(m, &vectors[m])?,
            };
            cur = Some(next);
        }
        let reduced = cur.expect("order >= 2 expected for contract_all_but");
        Ok(reduced.data)
    }

    /// Full contraction `t ×̄_0 v_0 ... ×̄_{N-1} v_{N-1}` to a scalar.
    pub fn contract_all(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        let partial = self.contract_all_but(vectors, 0)?;
        if vectors[0].len() != partial.len() {
            return Err(Error::ShapeMismatch("vector 0 length".into()));
        }
        Ok(dot(&partial, &vectors[0]))
    }

    /// Mode-m product with `mat` applied as its transpose from the left of
    /// the mode fibers: the new extent of mode m is `mat.cols()`.
    pub fn mode_mat_product(&self, mode: usize, mat: &Matrix) -> Result<DenseTensor> {
        let n = self.order();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, order: n });
        }
        if mat.rows() != self.shape[mode] {
            return Err(Error::ShapeMismatch(format!(
                "mode {} extent {} vs matrix rows {}",
                mode,
                self.shape[mode],
                mat.rows()
            )));
        }
        let m = self.shape[mode];
        let c = mat.cols();
        let inner: usize = self.shape[..mode].iter().product();
        let outer: usize = self.shape[mode + 1..].iter().product();
        let mut new_shape = self.shape.clone();
        new_shape[mode] = c;
        let mut out = DenseTensor::zeros(&new_shape);
        for o in 0..outer {
            for k in 0..c {
                let dst = (o * c + k) * inner;
                for j in 0..m {
                    let w = mat.get(j, k);
                    if w == 0.0 {
                        continue;
                    }
                    let src = (o * m + j) * inner;
                    for i in 0..inner {
                        out.data[dst + i] += w * self.data[src + i];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Applies one matrix per mode: `t ×̄_0 V_0 ... ×̄_{N-1} V_{N-1}`.
    /// Modes are processed in order of decreasing extent to keep
    /// intermediates small.
    pub fn multi_mode_product(&self, mats: &[Matrix]) -> Result<DenseTensor> {
        let n = self.order();
        if mats.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} matrices, got {}",
                n,
                mats.len()
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.shape[b].cmp(&self.shape[a]).then(a.cmp(&b)));
        let mut cur = self.clone();
        for &m in &order {
            cur = cur.mode_mat_product(m, &mats[m])?;
        }
        Ok(cur)
    }

    /// Relocates data so that the new mode k holds the old mode `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<DenseTensor> {
        let n = self.order();
        if perm.len() != n {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "invalid permutation {:?}",
                    perm
                )));
            }
            seen[p] = true;
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut out = DenseTensor::zeros(&new_shape);
        let mut old_idx = vec![0usize; n];
        let mut new_idx = vec![0usize; n];
        for lin in 0..self.len() {
            let mut rem = lin;
            for k in 0..n {
                old_idx[k] = rem % self.shape[k];
                rem /= self.shape[k];
            }
            for k in 0..n {
                new_idx[k] = old_idx[perm[k]];
            }
            let dst = out.linear_index(&new_idx);
            out.data[dst] = self.data[lin];
        }
        Ok(out)
    }

    /// Scalar product with a tensor of identical shape.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(dot(&self.data, &other.data))
    }

    /// Writes the tensor text format: order, extents, then entries in
    /// column-major order with 17 significant digits.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", self.order())?;
        let extents: Vec<String> = self.shape.iter().map(|e| e.to_string()).collect();
        writeln!(w, "{}", extents.join(" "))?;
        for v in &self.data {
            writeln!(w, "{:.16e}", v)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<DenseTensor> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing order".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("order: {}", e)))?;
        let mut shape = Vec::with_capacity(n);
        for k in 0..n {
            let e: usize = tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing extent {}", k)))?
                .parse()
                .map_err(|e| Error::Parse(format!("extent {}: {}", k, e)))?;
            shape.push(e);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for k in 0..len {
            let v: f64 = tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing value {}", k)))?
                .parse()
                .map_err(|e| Error::Parse(format!("value {}: {}", k, e)))?;
            data.push(v);
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing data".into()));
        }
        DenseTensor::from_data(&shape, data)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_text(&mut f)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<DenseTensor> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        DenseTensor::read_text(&mut f)
    }
}

/// Khatri-Rao product of factor matrices given in mode order
/// `[U_0, U_1, ..., U_{N-1}]`; column r is the Kronecker product
/// `u_{N-1,r} ⊗ ... ⊗ u_{1,r} ⊗ u_{0,r}`, matching the column-major `vec`
/// of the rank-1 tensor.
pub fn khatri_rao(mats: &[Matrix]) -> Result<Matrix> {
    if mats.is_empty() {
        return Err(Error::InvalidArgument("no matrices".into()));
    }
    let r = mats[0].cols();
    for m in mats {
        if m.cols() != r {
            return Err(Error::ShapeMismatch(format!(
                "column counts differ: {} vs {}",
                m.cols(),
                r
            )));
        }
    }
    let total: usize = mats.iter().map(|m| m.rows()).product();
    let mut out = Matrix::zeros(total, r);
    let mut acc: Vec<f64> = Vec::new();
    for j in 0..r {
        acc.clear();
        acc.extend_from_slice(mats[mats.len() - 1].column(j));
        for m in mats[..mats.len() - 1].iter().rev() {
            let col = m.column(j);
            let mut next = Vec::with_capacity(acc.len() * col.len());
            for &a in &acc {
                for &b in col {
                    next.push(a * b);
                }
            }
            acc = next;
        }
        out.column_mut(j).copy_from_slice(&acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = stream(seed, &[]);
        let data = (0..shape.iter().product())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        DenseTensor::from_data(shape, data).unwrap()
    }

    #[test]
    fn unfold_mode0_of_matrix_is_identity() {
        let t = DenseTensor::from_data(&[2, 2], vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    fn unfold_rank1_matches_kron() {
        let u = vec![1.0, 2.0];
        let v = vec![3.0, -1.0, 0.5];
        let w = vec![2.0, 0.0, 1.0, -2.0];
        let mut t = DenseTensor::zeros(&[2, 3, 4]);
        for k in 0..4 {
            for j in 0..3 {
                for i in 0..2 {
                    t.set(&[i, j, k], u[i] * v[j] * w[k]);
                }
            }
        }
        let m = t.unfold(0).unwrap();
        // column (j,k) should be u * (w[k] * v[j])
        for k in 0..4 {
            for j in 0..3 {
                for i in 0..2 {
                    let expect = u[i] * (w[k] * v[j]);
                    assert!((m.get(i, k * 3 + j) - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn unfold_fold_roundtrip_bitexact() {
        let t = random_tensor(&[3, 4, 5], 7);
        for mode in 0..3 {
            let m = t.unfold(mode).unwrap();
            let back = DenseTensor::fold(&m, mode, t.shape()).unwrap();
            assert_eq!(t.data(), back.data());
        }
    }

    #[test]
    fn contract_all_but_rank1_recovers_factor() {
        let u = vec![0.6, 0.8];
        let v = vec![1.0 / 3.0_f64.sqrt(); 3];
        let w = vec![0.5; 4];
        let wn = norm(&w);
        let w: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let mut t = DenseTensor::zeros(&[2, 3, 4]);
        for k in 0..4 {
            for j in 0..3 {
                for i in 0..2 {
                    t.set(&[i, j, k], u[i] * v[j] * w[k]);
                }
            }
        }
        let got = t
            .contract_all_but(&[vec![], v.clone(), w.clone()], 0)
            .unwrap();
        for i in 0..2 {
            assert!((got[i] - u[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn contract_all_but_all_ones() {
        let t = DenseTensor::from_data(&[2, 2, 2], vec![1.0; 8]).unwrap();
        let got = t
            .contract_all_but(&[vec![], vec![1.0, 1.0], vec![1.0, 1.0]], 0)
            .unwrap();
        assert_eq!(got, vec![4.0, 4.0]);
    }

    #[test]
    fn contract_all_but_matches_naive_loop() {
        let t = random_tensor(&[3, 3, 3], 11);
        let mut rng = stream(12, &[]);
        let vs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for skip in 0..3 {
            let got = t.contract_all_but(&vs, skip).unwrap();
            let mut want = vec![0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let idx = [i, j, k];
                        let mut p = t.get(&idx);
                        for (m, v) in vs.iter().enumerate() {
                            if m != skip {
                                p *= v[idx[m]];
                            }
                        }
                        want[idx[skip]] += p;
                    }
                }
            }
            for i in 0..3 {
                let denom = want[i].abs().max(1.0);
                assert!((got[i] - want[i]).abs() / denom < 1e-13);
            }
        }
    }

    #[test]
    fn multi_mode_product_identity() {
        let t = random_tensor(&[2, 3, 4], 3);
        let mats = vec![
            Matrix::identity(2),
            Matrix::identity(3),
            Matrix::identity(4),
        ];
        let got = t.multi_mode_product(&mats).unwrap();
        assert_eq!(got.data(), t.data());
    }

    #[test]
    fn multi_mode_product_single_columns_matches_full_contraction() {
        let t = random_tensor(&[3, 4, 2], 21);
        let mut rng = stream(22, &[]);
        let vs: Vec<Vec<f64>> = t
            .shape()
            .iter()
            .map(|&e| (0..e).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mats: Vec<Matrix> = vs
            .iter()
            .map(|v| Matrix::from_data(v.len(), 1, v.clone()).unwrap())
            .collect();
        let got = t.multi_mode_product(&mats).unwrap();
        assert_eq!(got.len(), 1);
        let want = t.contract_all(&vs).unwrap();
        assert!((got.data()[0] - want).abs() < 1e-13);
    }

    #[test]
    fn multi_mode_product_matches_sequential() {
        let t = random_tensor(&[4, 4, 4], 5);
        let mut rng = stream(6, &[]);
        let mats: Vec<Matrix> = (0..3)
            .map(|_| {
                Matrix::from_data(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
            })
            .collect();
        let got = t.multi_mode_product(&mats).unwrap();
        // plain fixed-order sequence, no reordering
        let seq = t
            .mode_mat_product(0, &mats[0])
            .unwrap()
            .mode_mat_product(1, &mats[1])
            .unwrap()
            .mode_mat_product(2, &mats[2])
            .unwrap();
        for (a, b) in got.data().iter().zip(seq.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn khatri_rao_hand_kron() {
        let u1 = Matrix::from_data(2, 1, vec![1.0, 2.0]).unwrap();
        let u2 = Matrix::from_data(2, 1, vec![3.0, 4.0]).unwrap();
        let kr = khatri_rao(&[u1, u2]).unwrap();
        assert_eq!(kr.data(), &[3.0, 6.0, 4.0, 8.0]);
    }

    #[test]
    fn khatri_rao_identity_columns() {
        let e = Matrix::identity(2);
        let kr = khatri_rao(&[e.clone(), e]).unwrap();
        // column 0 = e_0 ⊗ e_0 -> position 0; column 1 = e_1 ⊗ e_1 -> position 3
        assert_eq!(kr.column(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(kr.column(1), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn khatri_rao_column_count_mismatch() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(khatri_rao(&[a, b]).is_err());
    }

    #[test]
    fn inner_equals_norm_sq() {
        let t = random_tensor(&[3, 3, 3], 17);
        let ip = t.inner(&t).unwrap();
        assert!((ip - t.frobenius_norm_sq()).abs() < 1e-12 * ip.abs().max(1.0));
    }

    #[test]
    fn permute_identity_and_inverse() {
        let t = random_tensor(&[2, 3, 4], 19);
        let id = t.permute(&[0, 1, 2]).unwrap();
        assert_eq!(id.data(), t.data());
        let p = [2, 0, 1];
        let permuted = t.permute(&p).unwrap();
        // inverse permutation: q[p[k]] = k
        let mut q = [0usize; 3];
        for (k, &pk) in p.iter().enumerate() {
            q[pk] = k;
        }
        let back = permuted.permute(&q).unwrap();
        assert_eq!(back.shape(), t.shape());
        assert_eq!(back.data(), t.data());
    }

    #[test]
    fn permute_consistent_with_unfold() {
        let t = random_tensor(&[2, 3, 4], 23);
        let p = [1, 2, 0];
        let permuted = t.permute(&p).unwrap();
        for k in 0..3 {
            let a = permuted.unfold(0).unwrap();
            let b = t.unfold(p[0]).unwrap();
            // rows of the mode-p[0] unfolding agree up to column order; check norms
            assert!((a.frobenius_norm_sq() - b.frobenius_norm_sq()).abs() < 1e-12);
            let _ = k;
        }
        let mut idx = [0usize; 3];
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    idx = [j, k, i];
                    assert_eq!(permuted.get(&idx), t.get(&[i, j, k]));
                }
            }
        }
        let _ = idx;
    }

    #[test]
    fn rejects_nonfinite() {
        assert!(DenseTensor::from_data(&[2], vec![1.0, f64::NAN]).is_err());
        assert!(DenseTensor::from_data(&[2], vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn text_roundtrip_bitexact() {
        let t = random_tensor(&[3, 2, 4], 31);
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let back = DenseTensor::read_text(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.shape(), t.shape());
        assert_eq!(back.data(), t.data());
    }

    #[test]
    fn mode_out_of_range_errors() {
        let t = DenseTensor::zeros(&[2, 2]);
        assert!(matches!(
            t.unfold(2),
            Err(Error::ModeOutOfRange { mode: 2, order: 2 })
        ));
    }
}
