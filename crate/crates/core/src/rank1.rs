//! Best rank-1 tensor approximation: ALS/HOOI sweeps, SVD and sequential
//! projection-truncation initialization, and a simplified
//! Levenberg-Marquardt step (R1LM).
//!
//! R1LM exploits two normalizations. Energy balancing rescales the loading
//! vectors so every squared norm equals `alpha = (gamma_0 ... gamma_{N-1})^(1/N)`;
//! optimal scaling multiplies the model by `lambda = xi / gamma`, after
//! which `xi = gamma = alpha^N` and the damped-Newton update collapses to
//! a gradient step `u_n <- u_n - eta g_n` whose squared error is an explicit
//! degree-2N polynomial in the step size:
//!
//! `f(eta) = ||Y||^2 + prod_n (alpha + c_n eta^2) - 2 sum_k q_k eta^k`
//!
//! with `c_n = g_n^T g_n` and `q_k` read off the projected 2x...x2 tensor
//! `W = Y x_0 [u_0,-g_0] ... x_{N-1} [u_{N-1},-g_{N-1}]`. The optimal step
//! is the minimizer of `f` over `[0, 1/alpha^(N-1)]`.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::kruskal::accumulate_rank1_into;
use crate::linalg::dominant_left_singular;
use crate::poly::Polynomial;
use crate::tensor::{dot, norm, normalize, DenseTensor, Matrix};

/// Minimum factor norm before a model counts as degenerate.
const DEGENERATE_NORM: f64 = 1e-150;

/// Anything a rank-1 solver step can run against: a dense tensor, or the
/// implicit sum of a shared dense residue and one rank-1 component.
pub trait Rank1Target: Sync {
    fn shape(&self) -> &[usize];

    fn order(&self) -> usize {
        self.shape().len()
    }

    /// `t x̄_{k != skip} vectors[k]`; `vectors[skip]` is ignored.
    fn contract_all_but(&self, vectors: &[Vec<f64>], skip: usize) -> Result<Vec<f64>>;

    /// `t x̄_0 V_0 ... x̄_{N-1} V_{N-1}`.
    fn project(&self, mats: &[Matrix]) -> Result<DenseTensor>;

    /// `<t, v_0 ∘ ... ∘ v_{N-1}>`.
    fn inner_rank1(&self, vectors: &[Vec<f64>]) -> Result<f64>;

    fn norm_sq(&self) -> f64;
}

impl Rank1Target for DenseTensor {
    fn shape(&self) -> &[usize] {
        DenseTensor::shape(self)
    }

    fn contract_all_but(&self, vectors: &[Vec<f64>], skip: usize) -> Result<Vec<f64>> {
        DenseTensor::contract_all_but(self, vectors, skip)
    }

    fn project(&self, mats: &[Matrix]) -> Result<DenseTensor> {
        self.multi_mode_product(mats)
    }

    fn inner_rank1(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        self.contract_all(vectors)
    }

    fn norm_sq(&self) -> f64 {
        self.frobenius_norm_sq()
    }
}

/// Rank-1 model: one loading vector per mode. Norms are unconstrained;
/// the solvers keep them unit (ALS, RORO) or energy-balanced with optimal
/// scale (R1LM).
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Model {
    factors: Vec<Vec<f64>>,
}

impl Rank1Model {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("no factors".into()));
        }
        for f in &factors {
            if f.is_empty() {
                return Err(Error::ShapeMismatch("empty factor".into()));
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("factor entry".into()));
            }
        }
        Ok(Rank1Model { factors })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.len()).collect()
    }

    pub fn factor(&self, n: usize) -> &[f64] {
        &self.factors[n]
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.factors
    }

    /// Squared norms `gamma_n = u_n^T u_n` per mode.
    pub fn gammas(&self) -> Vec<f64> {
        self.factors.iter().map(|f| dot(f, f)).collect()
    }

    /// `gamma = prod_n gamma_n`.
    pub fn gamma(&self) -> f64 {
        self.gammas().iter().product()
    }

    /// `alpha = gamma^(1/N)`, the balanced squared norm.
    pub fn alpha(&self) -> f64 {
        self.gamma().powf(1.0 / self.order() as f64)
    }

    /// `xi = <t, u_0 ∘ ... ∘ u_{N-1}>`.
    pub fn xi<T: Rank1Target + ?Sized>(&self, t: &T) -> Result<f64> {
        t.inner_rank1(&self.factors)
    }

    /// `xi` of the unit-normalized copy: the scaling factor of the rank-1
    /// direction this model points at.
    pub fn scaling_factor<T: Rank1Target + ?Sized>(&self, t: &T) -> Result<f64> {
        let (unit, _) = self.unit_normalized()?;
        unit.xi(t)
    }

    pub fn unit_normalized(&self) -> Result<(Rank1Model, f64)> {
        let mut factors = self.factors.clone();
        let mut scale = 1.0;
        for f in &mut factors {
            let n = normalize(f);
            if n < DEGENERATE_NORM {
                return Err(Error::Degenerate("zero factor".into()));
            }
            scale *= n;
        }
        Ok((Rank1Model { factors }, scale))
    }

    /// Energy-balanced normalization: `u_n <- sqrt(alpha/gamma_n) u_n`, so
    /// every mode ends with squared norm `alpha`. The represented tensor is
    /// unchanged.
    pub fn balance_normalize(&self) -> Result<Rank1Model> {
        let gammas = self.gammas();
        if gammas
            .iter()
            .any(|&g| g < DEGENERATE_NORM * DEGENERATE_NORM)
        {
            return Err(Error::Degenerate("zero factor in balance".into()));
        }
        let alpha = self.alpha();
        let mut factors = self.factors.clone();
        for (f, g) in factors.iter_mut().zip(&gammas) {
            let s = (alpha / g).sqrt();
            for x in f.iter_mut() {
                *x *= s;
            }
        }
        Ok(Rank1Model { factors })
    }

    /// Rescales the model by the error-minimizing factor
    /// `lambda = xi / gamma`, spread as `|lambda|^(1/N)` per mode with the
    /// sign attached to mode 0. Afterwards `xi = gamma`.
    pub fn optimal_scale<T: Rank1Target + ?Sized>(&self, t: &T) -> Result<Rank1Model> {
        let gamma = self.gamma();
        if gamma < DEGENERATE_NORM {
            return Err(Error::Degenerate("gamma = 0 in optimal_scale".into()));
        }
        let xi = self.xi(t)?;
        let lambda = xi / gamma;
        let n = self.order();
        let mag = lambda.abs().powf(1.0 / n as f64);
        let mut factors = self.factors.clone();
        for f in factors.iter_mut() {
            for x in f.iter_mut() {
                *x *= mag;
            }
        }
        if lambda < 0.0 {
            for x in factors[0].iter_mut() {
                *x = -*x;
            }
        }
        Ok(Rank1Model { factors })
    }

    pub fn reconstruct(&self) -> DenseTensor {
        let shape = self.shape();
        let mut out = DenseTensor::zeros(&shape);
        let cols: Vec<&[f64]> = self.factors.iter().map(|f| f.as_slice()).collect();
        accumulate_rank1_into(out.data_mut(), &shape, &cols, 1.0);
        out
    }

    /// Relative error `||t - X|| / ||t||` from the explicit residual.
    pub fn relative_error(&self, t: &DenseTensor) -> Result<f64> {
        if self.shape() != t.shape() {
            return Err(Error::ShapeMismatch("model vs tensor shape".into()));
        }
        let mut buf = t.data().to_vec();
        let cols: Vec<&[f64]> = self.factors.iter().map(|f| f.as_slice()).collect();
        accumulate_rank1_into(&mut buf, t.shape(), &cols, -1.0);
        let err = norm(&buf);
        let denom = t.frobenius_norm();
        Ok(if denom == 0.0 { err } else { err / denom })
    }

    /// Squared error `||t - X||^2 = ||t||^2 - 2 xi + gamma` against any
    /// target, without materializing the residual.
    pub fn error_sq_virtual<T: Rank1Target + ?Sized>(&self, t: &T) -> Result<f64> {
        let xi = self.xi(t)?;
        Ok((t.norm_sq() - 2.0 * xi + self.gamma()).max(0.0))
    }
}

/// One ALS/HOOI sweep: for each mode in order, `u_n <- t_n` renormalized
/// to unit length, using the freshest components. Returns the updated
/// model (unit factors) and the scalar `xi`.
pub fn als_step<T: Rank1Target + ?Sized>(t: &T, m: &Rank1Model) -> Result<(Rank1Model, f64)> {
    let n = m.order();
    let mut factors = m.factors().to_vec();
    let mut xi = 0.0;
    for mode in 0..n {
        let tn = t.contract_all_but(&factors, mode)?;
        let nrm = norm(&tn);
        if nrm < DEGENERATE_NORM {
            return Err(Error::Degenerate(format!(
                "zero projection in mode {} of ALS sweep",
                mode
            )));
        }
        factors[mode] = tn.iter().map(|x| x / nrm).collect();
        xi = nrm;
    }
    Ok((Rank1Model { factors }, xi))
}

/// Per-mode dominant left singular vectors of the mode-n matricizations,
/// with the largest-magnitude entry of each vector made positive.
pub fn svd_init(t: &DenseTensor) -> Result<Rank1Model> {
    let mut factors = Vec::with_capacity(t.order());
    for mode in 0..t.order() {
        let unf = t.unfold(mode)?;
        let (_, u) = dominant_left_singular(&unf)?;
        factors.push(u);
    }
    Rank1Model::new(factors)
}

/// Sequential projection and truncation: permute, take the dominant left
/// singular vector of the first reshaping, project, reshape the projected
/// right factor, and repeat. Factors are unit length, mapped back through
/// the permutation, with the same sign convention as [`svd_init`].
pub fn ttsvd_init(t: &DenseTensor, perm: &[usize]) -> Result<Rank1Model> {
    let n = t.order();
    if n < 2 {
        return Err(Error::InvalidArgument("need order >= 2".into()));
    }
    let tp = t.permute(perm)?;
    let shape = tp.shape().to_vec();
    let mut factors_p: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut cur = tp.unfold(0)?;
    for k in 0..n - 1 {
        let (_, u) = dominant_left_singular(&cur)?;
        let projected = cur.matvec_t(&u);
        factors_p.push(u);
        if k + 1 < n - 1 {
            let rows = shape[k + 1];
            cur = Matrix::from_data(rows, projected.len() / rows, projected)?;
        } else {
            // the last projected vector is sigma * u_{N-1}
            let mut last = projected;
            if normalize(&mut last) < DEGENERATE_NORM {
                last = vec![0.0; shape[n - 1]];
                last[0] = 1.0;
            }
            crate::linalg::sign_fix_largest(&mut last);
            factors_p.push(last);
        }
    }
    let mut factors = vec![Vec::new(); n];
    for (k, f) in factors_p.into_iter().enumerate() {
        factors[perm[k]] = f;
    }
    Rank1Model::new(factors)
}

/// Polynomial coefficients `q_0..q_N` of `<W, [1,eta] ∘ ... ∘ [1,eta]>`
/// for a 2x...x2 tensor: `q_k` sums the entries whose multi-index has
/// exactly k coordinates equal to the second position.
pub fn poly_q_coeffs(w: &DenseTensor) -> Result<Vec<f64>> {
    let n = w.order();
    if w.shape().iter().any(|&e| e != 2) {
        return Err(Error::ShapeMismatch(format!(
            "expected all extents 2, got {:?}",
            w.shape()
        )));
    }
    let mut q = vec![0.0f64; n + 1];
    for (lin, &v) in w.data().iter().enumerate() {
        q[lin.count_ones() as usize] += v;
    }
    // The k-twos summation rule is cross-checked against the direct
    // contraction in debug builds.
    #[cfg(debug_assertions)]
    {
        let eta = 0.37;
        let vecs: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, eta]).collect();
        let direct = w.contract_all(&vecs)?;
        let poly: f64 = q.iter().rev().fold(0.0, |acc, &c| acc * eta + c);
        let scale: f64 = w.data().iter().map(|x| x.abs()).sum::<f64>();
        debug_assert!(
            (direct - poly).abs() <= 1e-12 * scale.max(1.0),
            "q coefficients disagree with direct contraction: {} vs {}",
            poly,
            direct
        );
    }
    Ok(q)
}

/// The squared-error polynomial of the R1LM step.
#[derive(Debug, Clone)]
pub struct StepPolynomial {
    pub norm_y_sq: f64,
    pub alpha: f64,
    /// `c_n = g_n^T g_n` per mode.
    pub gradient_norms_sq: Vec<f64>,
    /// `q_0..q_N` from [`poly_q_coeffs`].
    pub q: Vec<f64>,
}

impl StepPolynomial {
    /// Assembled coefficients of `f(eta)`, ascending, degree 2N.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.gradient_norms_sq.len();
        // elementary symmetric polynomials of the c_n
        let mut e = vec![0.0f64; n + 1];
        e[0] = 1.0;
        for &c in &self.gradient_norms_sq {
            for j in (1..=n).rev() {
                e[j] += c * e[j - 1];
            }
        }
        let mut coeffs = vec![0.0f64; 2 * n + 1];
        coeffs[0] = self.norm_y_sq;
        for (j, &ej) in e.iter().enumerate() {
            coeffs[2 * j] += ej * self.alpha.powi((n - j) as i32);
        }
        for (k, &qk) in self.q.iter().enumerate() {
            coeffs[k] -= 2.0 * qk;
        }
        coeffs
    }

    pub fn eval(&self, eta: f64) -> f64 {
        self.coefficients()
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * eta + c)
    }
}

/// One R1LM step. Expects a balanced, optimally scaled model
/// (`xi = gamma = alpha^N`); returns the stepped model in the same state.
/// A stationary model (all gradients zero) is returned unchanged.
pub fn r1lm_step<T: Rank1Target + ?Sized>(t: &T, m: &Rank1Model) -> Result<Rank1Model> {
    let n = m.order();
    let alpha = m.alpha();
    if alpha < DEGENERATE_NORM {
        return Err(Error::Degenerate("zero model in r1lm_step".into()));
    }
    let gamma_rest = alpha.powi(n as i32 - 1);

    let mut gradients = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    let mut stationary = true;
    for mode in 0..n {
        let tn = t.contract_all_but(m.factors(), mode)?;
        let u = m.factor(mode);
        let g: Vec<f64> = u
            .iter()
            .zip(&tn)
            .map(|(&ui, &ti)| gamma_rest * ui - ti)
            .collect();
        let gn = norm(&g);
        if gn > 1e-13 * (gamma_rest * alpha.sqrt() + norm(&tn)) {
            stationary = false;
        }
        c.push(dot(&g, &g));
        gradients.push(g);
    }
    if stationary {
        return Ok(m.clone());
    }

    let mats: Vec<Matrix> = m
        .factors()
        .iter()
        .zip(&gradients)
        .map(|(u, g)| {
            let mut cols = Vec::with_capacity(2 * u.len());
            cols.extend_from_slice(u);
            cols.extend(g.iter().map(|x| -x));
            Matrix::from_data(u.len(), 2, cols).expect("basis matrix")
        })
        .collect();
    let w = t.project(&mats)?;
    let q = poly_q_coeffs(&w)?;
    let step_poly = StepPolynomial {
        norm_y_sq: t.norm_sq(),
        alpha,
        gradient_norms_sq: c,
        q,
    };
    let f = Polynomial::new(step_poly.coefficients());
    let eta_max = 1.0 / gamma_rest;

    // candidates: interior roots of f' plus both endpoints, smallest eta
    // wins ties
    let mut candidates = vec![0.0, eta_max];
    for r in f.derivative().real_roots()? {
        if r > 0.0 && r < eta_max {
            candidates.push(r);
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut eta_star = candidates[0];
    let mut f_star = f.eval(eta_star);
    for &cand in &candidates[1..] {
        let fc = f.eval(cand);
        if fc < f_star {
            f_star = fc;
            eta_star = cand;
        }
    }
    if eta_star == 0.0 {
        return Ok(m.clone());
    }

    let factors: Vec<Vec<f64>> = m
        .factors()
        .iter()
        .zip(&gradients)
        .map(|(u, g)| {
            u.iter()
                .zip(g)
                .map(|(&ui, &gi)| ui - eta_star * gi)
                .collect()
        })
        .collect();
    let stepped = Rank1Model { factors };
    stepped.balance_normalize()?.optimal_scale(t)
}

/// Rank-1 solver choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank1Algo {
    Als,
    R1Lm,
    Roro,
}

/// Initialization choice for [`solve_rank1`].
#[derive(Debug, Clone)]
pub enum Rank1Init {
    Svd,
    Ttsvd(Vec<usize>),
    /// All N! permutations, keeping the run with the lowest final error.
    TtsvdBest,
    Given(Rank1Model),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when consecutive relative errors change by less than this.
    pub tol: f64,
    pub max_iters: usize,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iters: 1000,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rank1Trace {
    /// Relative errors, starting with the initialization.
    pub errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `xi` of the unit-normalized final model.
    pub scaling_factor: f64,
}

impl Rank1Trace {
    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("trace never empty")
    }
}

fn lexicographic_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut perms = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        depth: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == n {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur[depth] = v;
                rec(n, cur, used, depth + 1, out);
                used[v] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, 0, &mut perms);
    perms
}

/// Driver: initialize, iterate the chosen algorithm until the change in
/// relative error drops below `tol` or `max_iters` is hit. The returned
/// model carries its optimal scale.
pub fn solve_rank1(
    t: &DenseTensor,
    algo: Rank1Algo,
    init: Rank1Init,
    opts: &SolveOptions,
) -> Result<(Rank1Model, Rank1Trace)> {
    if opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if t.frobenius_norm() == 0.0 {
        let mut model = svd_init(t)?;
        for f in model.factors_mut() {
            for x in f.iter_mut() {
                *x = 0.0;
            }
            f[0] = 0.0;
        }
        let trace = Rank1Trace {
            errors: vec![0.0],
            converged: true,
            iterations: 0,
            scaling_factor: 0.0,
        };
        return Ok((model, trace));
    }

    if let Rank1Init::TtsvdBest = init {
        let n = t.order();
        if n > 6 {
            return Err(Error::InvalidArgument(
                "ttsvd-best is capped at order 6".into(),
            ));
        }
        let perms = lexicographic_permutations(n);
        let runs = map_indexed(opts.exec, perms.len(), |i| {
            solve_rank1(
                t,
                algo,
                Rank1Init::Ttsvd(perms[i].clone()),
                &SolveOptions {
                    exec: Execution::Sequential,
                    ..opts.clone()
                },
            )
        });
        let mut best: Option<(Rank1Model, Rank1Trace)> = None;
        for run in runs {
            let (model, trace) = run?;
            let better = match &best {
                None => true,
                Some((_, bt)) => trace.final_error() < bt.final_error(),
            };
            if better {
                best = Some((model, trace));
            }
        }
        return Ok(best.expect("at least one permutation"));
    }

    let init_model = match init {
        Rank1Init::Svd => svd_init(t)?,
        Rank1Init::Ttsvd(perm) => ttsvd_init(t, &perm)?,
        Rank1Init::Given(m) => m,
        Rank1Init::TtsvdBest => unreachable!(),
    };

    // per-algorithm state convention: unit factors for ALS and RORO,
    // balanced + optimally scaled for R1LM
    let (unit, _) = init_model.unit_normalized()?;
    let mut state = match algo {
        Rank1Algo::Als | Rank1Algo::Roro => unit,
        Rank1Algo::R1Lm => unit.optimal_scale(t)?.balance_normalize()?,
    };
    if algo == Rank1Algo::R1Lm {
        // a zero-xi start has zero optimal scale; nudge by keeping the
        // unit model balanced instead
        if state.gamma() < DEGENERATE_NORM {
            state = init_model.unit_normalized()?.0;
        }
    }

    let eval_err = |m: &Rank1Model| -> Result<f64> {
        let scaled = m.optimal_scale(t)?;
        scaled.relative_error(t)
    };

    let mut errors = vec![eval_err(&state)?];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        state = match algo {
            Rank1Algo::Als => als_step(t, &state)?.0,
            Rank1Algo::R1Lm => r1lm_step(t, &state)?,
            Rank1Algo::Roro => crate::roro::roro_step(t, &state)?,
        };
        iterations += 1;
        let err = eval_err(&state)?;
        let prev = *errors.last().unwrap();
        errors.push(err);
        if (err - prev).abs() < opts.tol {
            converged = true;
            break;
        }
    }

    let scaling_factor = state.scaling_factor(t)?;
    let model = state.optimal_scale(t)?;
    let trace = Rank1Trace {
        errors,
        converged,
        iterations,
        scaling_factor,
    };
    Ok((model, trace))
}
