//! Parallel rank-one updates for rank-R CPD.
//!
//! Splitting the CP objective with an indicator of the Khatri-Rao set and
//! applying ADMM gives three updates: a closed-form proximal step for the
//! free matrix Z, independent best rank-1 projections for the columns of
//! X, and a dual ascent for T. Eliminating Z and T algebraically leaves a
//! driver that keeps only dense means and a residue:
//!
//! `e(k) = mu (ybar - 2 xbar(k) + xbar(k-1) + e(k-1))`, `e(0) = ybar - xbar(0)`
//!
//! with `mu = gamma R / (1 + gamma R)`, and refits all R components
//! against the shared `e(k) + x_r(k)` in parallel. The targets are never
//! materialized: every contraction the rank-1 solvers need splits into a
//! dense part plus a closed-form rank-1 correction. Peak dense storage is
//! five full-size buffers: `ybar`, both means, the residue and a scratch.
//!
//! [`admm_reference`] keeps the explicit `(Z, X, T)` matrices instead and
//! exists to validate the memory-efficient recursion against the plain
//! ADMM iteration on small instances.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::kruskal::{accumulate_rank1_into, KruskalModel};
use crate::linalg::cholesky_solve;
use crate::rank1::{als_step, r1lm_step, Rank1Algo, Rank1Model, Rank1Target};
use crate::rng::{normal_vec, stream};
use crate::roro::roro_step;
use crate::tensor::{dot, khatri_rao, norm, DenseTensor, Matrix};

/// Dense residue plus one rank-1 component, behaving like their sum
/// without materializing it.
pub struct ImplicitResidue<'a> {
    dense: &'a DenseTensor,
    component: &'a Rank1Model,
    norm_sq: f64,
}

impl<'a> ImplicitResidue<'a> {
    /// `dense_norm_sq` is `||e||^2`, computed once per outer iteration and
    /// shared across components.
    pub fn new(
        dense: &'a DenseTensor,
        component: &'a Rank1Model,
        dense_norm_sq: f64,
    ) -> Result<Self> {
        if component.shape() != dense.shape() {
            return Err(Error::ShapeMismatch("component vs residue shape".into()));
        }
        let cross = dense.contract_all(component.factors())?;
        let norm_sq = dense_norm_sq + 2.0 * cross + component.gamma();
        Ok(ImplicitResidue {
            dense,
            component,
            norm_sq,
        })
    }
}

impl Rank1Target for ImplicitResidue<'_> {
    fn shape(&self) -> &[usize] {
        self.dense.shape()
    }

    fn contract_all_but(&self, vectors: &[Vec<f64>], skip: usize) -> Result<Vec<f64>> {
        let mut out = self.dense.contract_all_but(vectors, skip)?;
        // rank-1 correction: (prod_{k != skip} u_k^T v_k) * u_skip
        let mut w = 1.0;
        for (k, v) in vectors.iter().enumerate() {
            if k != skip {
                w *= dot(self.component.factor(k), v);
            }
        }
        for (o, &u) in out.iter_mut().zip(self.component.factor(skip)) {
            *o += w * u;
        }
        Ok(out)
    }

    fn project(&self, mats: &[Matrix]) -> Result<DenseTensor> {
        let mut out = self.dense.multi_mode_product(mats)?;
        // plus (V_0^T u_0) ∘ ... ∘ (V_{N-1}^T u_{N-1})
        let small: Vec<Vec<f64>> = mats
            .iter()
            .enumerate()
            .map(|(k, m)| m.matvec_t(self.component.factor(k)))
            .collect();
        let cols: Vec<&[f64]> = small.iter().map(|v| v.as_slice()).collect();
        let shape = out.shape().to_vec();
        accumulate_rank1_into(out.data_mut(), &shape, &cols, 1.0);
        Ok(out)
    }

    fn inner_rank1(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        let dense_part = self.dense.contract_all(vectors)?;
        let mut w = 1.0;
        for (k, v) in vectors.iter().enumerate() {
            w *= dot(self.component.factor(k), v);
        }
        Ok(dense_part + w)
    }

    fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

/// Schedule for the regularization parameter, expressed through
/// `gamma R` (so `mu = gamma R / (1 + gamma R)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSchedule {
    /// Constant `gamma R`; `gamma R = 1` is the natural `mu = 1/2`.
    Fixed { gamma_r: f64 },
    /// Multiply `gamma` by `eta` every `period` iterations.
    Regular { period: usize, eta: f64 },
    /// Multiply by `eta` every `period` iterations while the error is
    /// non-increasing over the window, divide by `eta` otherwise.
    Adaptive {
        period: usize,
        eta: f64,
        initial_gamma_r: f64,
    },
}

impl MuSchedule {
    /// Default from the convergence studies: adaptive adjustment every 20
    /// iterations by sqrt(2), starting from `gamma R = 5`.
    pub fn default_adaptive() -> Self {
        MuSchedule::Adaptive {
            period: 20,
            eta: std::f64::consts::SQRT_2,
            initial_gamma_r: 5.0,
        }
    }

    pub fn initial_gamma_r(&self) -> f64 {
        match *self {
            MuSchedule::Fixed { gamma_r } => gamma_r,
            MuSchedule::Regular { .. } => 1.0,
            MuSchedule::Adaptive {
                initial_gamma_r, ..
            } => initial_gamma_r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MuSchedule::Fixed { gamma_r } => gamma_r > 0.0,
            MuSchedule::Regular { period, eta } => period >= 1 && eta > 1.0,
            MuSchedule::Adaptive {
                period,
                eta,
                initial_gamma_r,
            } => period >= 1 && eta > 1.0 && initial_gamma_r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad schedule {:?}", self)))
        }
    }
}

pub const GAMMA_R_MIN: f64 = 1e-3;
pub const GAMMA_R_MAX: f64 = 1e3;

pub fn mu_from_gamma_r(gamma_r: f64) -> f64 {
    gamma_r / (1.0 + gamma_r)
}

/// Live schedule values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub gamma_r: f64,
    pub mu: f64,
}

impl ScheduleState {
    pub fn new(gamma_r: f64) -> Self {
        let gamma_r = gamma_r.clamp(GAMMA_R_MIN, GAMMA_R_MAX);
        ScheduleState {
            gamma_r,
            mu: mu_from_gamma_r(gamma_r),
        }
    }
}

/// Applies the schedule after iteration `iter` (0-based), given the
/// relative-error history up to and including that iteration.
pub fn apply_schedule(state: &mut ScheduleState, sched: &MuSchedule, iter: usize, errors: &[f64]) {
    match *sched {
        MuSchedule::Fixed { .. } => {}
        MuSchedule::Regular { period, eta } => {
            if (iter + 1) % period == 0 {
                *state = ScheduleState::new(state.gamma_r * eta);
            }
        }
        MuSchedule::Adaptive { period, eta, .. } => {
            if (iter + 1) % period == 0 {
                let last = errors[errors.len() - 1];
                let non_increasing = if errors.len() > period {
                    last <= errors[errors.len() - 1 - period]
                } else {
                    errors.first().map_or(true, |&e0| last <= e0)
                };
                let next = if non_increasing {
                    state.gamma_r * eta
                } else {
                    state.gamma_r / eta
                };
                *state = ScheduleState::new(next);
            }
        }
    }
}

/// Initialization for the CP drivers.
#[derive(Debug, Clone)]
pub enum CpdInit {
    Model(KruskalModel),
    /// Seeded standard-normal factor matrices.
    Seed(u64),
}

/// Seeded standard-normal Kruskal model; the reproducible default start.
pub fn random_init(shape: &[usize], rank: usize, seed: u64) -> KruskalModel {
    let factors = shape
        .iter()
        .enumerate()
        .map(|(mode, &d)| {
            let mut rng = stream(seed, &[0x1217, mode as u64]);
            Matrix::from_data(d, rank, normal_vec(&mut rng, d * rank)).expect("sized data")
        })
        .collect();
    KruskalModel::new(factors).expect("finite random factors")
}

/// Error preservation norm correction: rescales the whole model by the
/// scalar `c = <Y, X> / ||X||^2` minimizing `||Y - c X||`, spread as
/// `|c|^(1/N)` per mode with the sign on mode 0.
pub fn epc_init(t: &DenseTensor, m: &KruskalModel) -> Result<KruskalModel> {
    if m.shape() != t.shape() {
        return Err(Error::ShapeMismatch("model vs tensor shape".into()));
    }
    let mut buf = vec![0.0f64; t.len()];
    crate::kruskal::accumulate_kruskal_into(&mut buf, m, 1.0);
    let norm_sq = dot(&buf, &buf);
    if norm_sq == 0.0 {
        return Err(Error::Degenerate("zero reconstruction in EPC".into()));
    }
    let c = dot(t.data(), &buf) / norm_sq;
    let mut out = m.clone();
    out.scale(c);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ParoOptions {
    pub schedule: MuSchedule,
    pub inner: Rank1Algo,
    /// Inner rank-1 solver steps per outer iteration.
    pub inner_steps: usize,
    /// Stop when the relative error reaches this.
    pub tol: f64,
    /// Stop when consecutive relative errors differ by less than this.
    pub delta_tol: f64,
    pub max_iters: usize,
    pub exec: Execution,
    /// Seeds component re-initialization on inner-solver degeneracy.
    pub seed: u64,
    /// Record the dense `(xbar, e)` pair per iteration (oracle tests).
    pub record_state: bool,
}

impl Default for ParoOptions {
    fn default() -> Self {
        ParoOptions {
            schedule: MuSchedule::default_adaptive(),
            inner: Rank1Algo::Roro,
            inner_steps: 1,
            tol: 1e-12,
            delta_tol: 1e-12,
            max_iters: 1000,
            exec: Execution::default(),
            seed: 0,
            record_state: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParoIterStat {
    pub relative_error: f64,
    pub mu: f64,
    pub gamma_r: f64,
    /// Wall-clock milliseconds since the start of the decomposition.
    /// Excluded from the determinism contract.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ParoTrace {
    pub iters: Vec<ParoIterStat>,
    pub converged: bool,
    /// Full-size dense buffers allocated by the driver.
    pub aux_dense_allocs: usize,
    /// (iteration, component) pairs that were randomly re-initialized.
    pub reinits: Vec<(usize, usize)>,
    /// `(xbar(k), e(k))` per iteration when `record_state` is set.
    pub states: Vec<(DenseTensor, DenseTensor)>,
}

impl ParoTrace {
    pub fn final_error(&self) -> f64 {
        self.iters.last().map_or(f64::NAN, |s| s.relative_error)
    }
}

/// One inner best rank-1 update of `component` against `target`,
/// preserving the per-algorithm state convention and returning the
/// component with its optimal scale folded in.
fn inner_update<T: Rank1Target + ?Sized>(
    target: &T,
    component: &Rank1Model,
    algo: Rank1Algo,
    steps: usize,
) -> Result<Rank1Model> {
    match algo {
        Rank1Algo::Als => {
            let (mut unit, _) = component.unit_normalized()?;
            for _ in 0..steps {
                unit = als_step(target, &unit)?.0;
            }
            unit.optimal_scale(target)
        }
        Rank1Algo::Roro => {
            let (mut unit, _) = component.unit_normalized()?;
            for _ in 0..steps {
                unit = roro_step(target, &unit)?;
            }
            unit.optimal_scale(target)
        }
        Rank1Algo::R1Lm => {
            let mut state = component
                .optimal_scale(target)?
                .balance_normalize()
                .or_else(|_| component.unit_normalized().map(|(u, _)| u))?;
            for _ in 0..steps {
                state = r1lm_step(target, &state)?;
            }
            Ok(state)
        }
    }
}

/// Rank-R CPD by parallel rank-one updates.
pub fn paro_decompose(
    t: &DenseTensor,
    rank: usize,
    init: CpdInit,
    opts: &ParoOptions,
) -> Result<(KruskalModel, ParoTrace)> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    if opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    opts.schedule.validate()?;
    let shape = t.shape().to_vec();
    let model = match init {
        CpdInit::Model(m) => {
            if m.shape() != shape || m.rank() != rank {
                return Err(Error::ShapeMismatch("init model shape/rank".into()));
            }
            m
        }
        CpdInit::Seed(seed) => random_init(&shape, rank, seed),
    };
    let mut components = model.components();

    let norm_y = t.frobenius_norm();
    if norm_y == 0.0 {
        return Err(Error::Degenerate("zero tensor".into()));
    }
    let r_f = rank as f64;

    // exactly five full-size dense buffers
    let mut aux_dense_allocs = 0usize;
    let mut ybar = t.clone();
    aux_dense_allocs += 1;
    for x in ybar.data_mut() {
        *x /= r_f;
    }
    let mut xbar_prev = DenseTensor::zeros(&shape);
    aux_dense_allocs += 1;
    let mut xbar_curr = DenseTensor::zeros(&shape);
    aux_dense_allocs += 1;
    let mut residue = DenseTensor::zeros(&shape);
    aux_dense_allocs += 1;
    let mut scratch = DenseTensor::zeros(&shape);
    aux_dense_allocs += 1;

    let mut sched_state = ScheduleState::new(opts.schedule.initial_gamma_r());
    let mut trace = ParoTrace {
        aux_dense_allocs,
        ..Default::default()
    };
    let mut errors: Vec<f64> = Vec::new();
    let clock = std::time::Instant::now();

    for iter in 0..opts.max_iters {
        // xbar(k), accumulated in fixed component order
        xbar_curr.data_mut().fill(0.0);
        for comp in &components {
            let cols: Vec<&[f64]> = comp.factors().iter().map(|f| f.as_slice()).collect();
            accumulate_rank1_into(xbar_curr.data_mut(), &shape, &cols, 1.0 / r_f);
        }
        // scratch = ybar - xbar(k); relative error of the full model
        for ((s, &y), &x) in scratch
            .data_mut()
            .iter_mut()
            .zip(ybar.data())
            .zip(xbar_curr.data())
        {
            *s = y - x;
        }
        let rel_err = r_f * norm(scratch.data()) / norm_y;

        // e(k): second-order difference recursion
        if iter == 0 {
            residue.data_mut().copy_from_slice(scratch.data());
        } else {
            let mu = sched_state.mu;
            for (((e, &s), &xp), &xc) in residue
                .data_mut()
                .iter_mut()
                .zip(scratch.data())
                .zip(xbar_prev.data())
                .zip(xbar_curr.data())
            {
                *e = mu * (s + (xp - xc) + *e);
            }
        }

        errors.push(rel_err);
        trace.iters.push(ParoIterStat {
            relative_error: rel_err,
            mu: sched_state.mu,
            gamma_r: sched_state.gamma_r,
            elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        if opts.record_state {
            trace.states.push((xbar_curr.clone(), residue.clone()));
        }

        if rel_err <= opts.tol {
            trace.converged = true;
            break;
        }
        if iter > 0 {
            let prev = errors[errors.len() - 2];
            if (prev - rel_err).abs() < opts.delta_tol {
                break;
            }
        }

        // R independent rank-1 refits against the shared residue
        let dense_norm_sq = residue.frobenius_norm_sq();
        let residue_ref = &residue;
        let components_ref = &components;
        let results = map_indexed(opts.exec, rank, |r| -> Result<Rank1Model> {
            let target = ImplicitResidue::new(residue_ref, &components_ref[r], dense_norm_sq)?;
            inner_update(&target, &components_ref[r], opts.inner, opts.inner_steps)
        });
        let mut new_components = Vec::with_capacity(rank);
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(c) => new_components.push(c),
                Err(Error::Degenerate(_)) => {
                    // re-seed this component and refit once against the
                    // same target
                    let mut rng = stream(opts.seed, &[r as u64, iter as u64]);
                    let fresh =
                        Rank1Model::new(shape.iter().map(|&d| normal_vec(&mut rng, d)).collect())?
                            .unit_normalized()?
                            .0;
                    let target =
                        ImplicitResidue::new(residue_ref, &components_ref[r], dense_norm_sq)?;
                    let refit = inner_update(&target, &fresh, opts.inner, opts.inner_steps)
                        .unwrap_or(fresh);
                    trace.reinits.push((iter, r));
                    new_components.push(refit);
                }
                Err(e) => return Err(e),
            }
        }
        components = new_components;

        apply_schedule(&mut sched_state, &opts.schedule, iter, &errors);
        std::mem::swap(&mut xbar_prev, &mut xbar_curr);
    }

    let model = KruskalModel::from_components(&components)?;
    Ok((model, trace))
}

/// Closed-form Z update of the explicit ADMM iteration, with the
/// Sherman-Morrison inverse `(I + gamma 1 1^T)^{-1} = I - gamma/(1+gamma R) 1 1^T`:
/// `Z = (X + T + gamma y 1^T)(I - gamma/(1+gamma R) 1 1^T)`.
pub fn admm_z_update(y: &[f64], x: &Matrix, t_dual: &Matrix, gamma: f64) -> Matrix {
    let rank = x.cols();
    let rows = x.rows();
    let c = gamma / (1.0 + gamma * rank as f64);
    let mut xt = Matrix::zeros(rows, rank);
    for j in 0..rank {
        let xc = x.column(j);
        let tc = t_dual.column(j);
        let dst = xt.column_mut(j);
        for i in 0..rows {
            dst[i] = xc[i] + tc[i] + gamma * y[i];
        }
    }
    // right-multiply by (I - c 1 1^T)
    let mut rowsum = vec![0.0f64; rows];
    for j in 0..rank {
        for (s, &v) in rowsum.iter_mut().zip(xt.column(j)) {
            *s += v;
        }
    }
    let mut z = Matrix::zeros(rows, rank);
    for j in 0..rank {
        let src = xt.column(j);
        let dst = z.column_mut(j);
        for i in 0..rows {
            dst[i] = src[i] - c * rowsum[i];
        }
    }
    z
}

/// Dual initialization for [`admm_reference`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualInit {
    Zero,
    /// `t_r = (1 - 1/mu)(ybar - xbar(0))` for every column, the state
    /// implied by the recursion's `e(0) = ybar - xbar(0)`.
    ParoCompatible,
}

#[derive(Debug, Default)]
pub struct AdmmTrace {
    /// `(xbar(k), e(k))` per iteration, aligned with the PARO trace.
    pub states: Vec<(DenseTensor, DenseTensor)>,
    /// Residual of the dual-mean identity
    /// `tbar(k) = xbar(k) - xbar(k-1) - e(k-1)` per iteration (from k = 1).
    pub tbar_identity_residuals: Vec<f64>,
    pub relative_errors: Vec<f64>,
}

/// Explicit-matrix ADMM reference for small problems. Maintains the full
/// `(Z, X, T)` matrices and the same inner rank-1 solves as
/// [`paro_decompose`]; used to validate the memory-efficient recursion.
#[allow(clippy::too_many_arguments)]
pub fn admm_reference(
    t: &DenseTensor,
    rank: usize,
    gamma: f64,
    init: &KruskalModel,
    iters: usize,
    inner: Rank1Algo,
    inner_steps: usize,
    dual: DualInit,
) -> Result<(KruskalModel, AdmmTrace)> {
    let total = t.len() * rank;
    if total > 100_000 {
        return Err(Error::SizeCap(format!(
            "admm_reference is for small instances; got {} cells",
            total
        )));
    }
    if init.shape() != t.shape() || init.rank() != rank {
        return Err(Error::ShapeMismatch("init model shape/rank".into()));
    }
    let shape = t.shape().to_vec();
    let len = t.len();
    let r_f = rank as f64;
    let mu = mu_from_gamma_r(gamma * r_f);
    let norm_y = t.frobenius_norm();

    let mut components = init.components();
    let ybar: Vec<f64> = t.data().iter().map(|&v| v / r_f).collect();

    // X from components, T per the chosen dual init
    let build_x = |components: &[Rank1Model]| -> Matrix {
        let mut x = Matrix::zeros(len, rank);
        for (j, comp) in components.iter().enumerate() {
            let cols: Vec<&[f64]> = comp.factors().iter().map(|f| f.as_slice()).collect();
            accumulate_rank1_into(x.column_mut(j), &shape, &cols, 1.0);
        }
        x
    };
    let mut x_mat = build_x(&components);
    let mut t_mat = Matrix::zeros(len, rank);
    if dual == DualInit::ParoCompatible {
        let coeff = 1.0 - 1.0 / mu;
        for j in 0..rank {
            let col = t_mat.column_mut(j);
            for i in 0..len {
                let xbar0: f64 = (0..rank).map(|s| x_mat.get(i, s)).sum::<f64>() / r_f;
                col[i] = coeff * (ybar[i] - xbar0);
            }
        }
    }

    let mut trace = AdmmTrace::default();
    let mut prev_state: Option<(Vec<f64>, Vec<f64>)> = None;

    for _iter in 0..iters {
        // derived means entering this iteration
        let mut xbar = vec![0.0f64; len];
        let mut tbar = vec![0.0f64; len];
        for j in 0..rank {
            for (i, (&xv, &tv)) in x_mat.column(j).iter().zip(t_mat.column(j)).enumerate() {
                xbar[i] += xv / r_f;
                tbar[i] += tv / r_f;
            }
        }
        let e: Vec<f64> = ybar
            .iter()
            .zip(&xbar)
            .zip(&tbar)
            .map(|((&y, &x), &tb)| mu * (y - x - tb))
            .collect();
        if let Some((xbar_prev, e_prev)) = &prev_state {
            // tbar(k) = xbar(k) - xbar(k-1) - e(k-1)
            let mut res = 0.0f64;
            for i in 0..len {
                let d = tbar[i] - (xbar[i] - xbar_prev[i] - e_prev[i]);
                res += d * d;
            }
            trace.tbar_identity_residuals.push(res.sqrt());
        }
        let rel_err = {
            let mut s = 0.0f64;
            for (i, &y) in ybar.iter().enumerate() {
                let d = y - xbar[i];
                s += d * d;
            }
            r_f * s.sqrt() / norm_y
        };
        trace.relative_errors.push(rel_err);
        trace.states.push((
            DenseTensor::from_data(&shape, xbar.clone())?,
            DenseTensor::from_data(&shape, e.clone())?,
        ));
        prev_state = Some((xbar, e));

        // Z, then column-wise best rank-1 of Z - T, then dual ascent
        let z = admm_z_update(t.data(), &x_mat, &t_mat, gamma);
        let mut new_components = Vec::with_capacity(rank);
        for (j, comp) in components.iter().enumerate() {
            let target_data: Vec<f64> = z
                .column(j)
                .iter()
                .zip(t_mat.column(j))
                .map(|(&zv, &tv)| zv - tv)
                .collect();
            let target = DenseTensor::from_data(&shape, target_data)?;
            new_components.push(inner_update(&target, comp, inner, inner_steps)?);
        }
        components = new_components;
        let x_new = build_x(&components);
        for j in 0..rank {
            let tc = t_mat.column_mut(j);
            for i in 0..len {
                tc[i] += x_new.get(i, j) - z.get(i, j);
            }
        }
        x_mat = x_new;
    }

    let model = KruskalModel::from_components(&components)?;
    Ok((model, trace))
}

#[derive(Debug, Clone)]
pub struct AlsOptions {
    pub tol: f64,
    pub delta_tol: f64,
    pub max_iters: usize,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            tol: 1e-12,
            delta_tol: 1e-12,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AlsTrace {
    pub relative_errors: Vec<f64>,
    /// Wall-clock milliseconds per recorded error, from the start of the
    /// run. Excluded from the determinism contract.
    pub elapsed_ms: Vec<f64>,
    pub converged: bool,
    /// Sweeps where the normal equations needed a ridge.
    pub ridge_events: Vec<usize>,
}

impl AlsTrace {
    pub fn final_error(&self) -> f64 {
        *self.relative_errors.last().unwrap_or(&f64::NAN)
    }
}

/// Baseline rank-R ALS: per-mode least-squares updates
/// `U_n <- Y_(n) KR_n (Gram_n)^{-1}` with column normalization absorbed
/// into the last mode. Singular normal equations fall back to a 1e-12
/// ridge (recorded in the trace).
pub fn cpd_als(
    t: &DenseTensor,
    rank: usize,
    init: CpdInit,
    opts: &AlsOptions,
) -> Result<(KruskalModel, AlsTrace)> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    let shape = t.shape().to_vec();
    let n = shape.len();
    let mut model = match init {
        CpdInit::Model(m) => {
            if m.shape() != shape || m.rank() != rank {
                return Err(Error::ShapeMismatch("init model shape/rank".into()));
            }
            m
        }
        CpdInit::Seed(seed) => random_init(&shape, rank, seed),
    };
    let norm_y = t.frobenius_norm();
    if norm_y == 0.0 {
        return Err(Error::Degenerate("zero tensor".into()));
    }

    let mut trace = AlsTrace::default();
    let clock = std::time::Instant::now();
    let mut buf = vec![0.0f64; t.len()];
    let eval_err = |m: &KruskalModel, buf: &mut Vec<f64>| {
        buf.copy_from_slice(t.data());
        crate::kruskal::accumulate_kruskal_into(buf, m, -1.0);
        norm(buf) / norm_y
    };
    trace.relative_errors.push(eval_err(&model, &mut buf));
    trace.elapsed_ms.push(clock.elapsed().as_secs_f64() * 1e3);

    for sweep in 0..opts.max_iters {
        for mode in 0..n {
            // MTTKRP: Y_(mode) * (KR of the other factors)
            let others: Vec<Matrix> = (0..n)
                .filter(|&k| k != mode)
                .map(|k| model.factors()[k].clone())
                .collect();
            let kr = khatri_rao(&others)?;
            let unfolded = t.unfold(mode)?;
            let mttkrp = unfolded.matmul(&kr);
            // Gram: Hadamard product of the other factor Grams
            let mut gram = Matrix::zeros(rank, rank);
            for i in 0..rank {
                for j in 0..rank {
                    gram.set(i, j, 1.0);
                }
            }
            for f in &others {
                for i in 0..rank {
                    for j in 0..rank {
                        let g = dot(f.column(i), f.column(j));
                        gram.set(i, j, gram.get(i, j) * g);
                    }
                }
            }
            // solve row-wise: U_n gram = mttkrp
            let mut solved = Matrix::zeros(shape[mode], rank);
            let mut use_ridge = false;
            let mut gram_r = gram.clone();
            loop {
                let mut ok = true;
                for row in 0..shape[mode] {
                    let rhs: Vec<f64> = (0..rank).map(|j| mttkrp.get(row, j)).collect();
                    match cholesky_solve(&gram_r, &rhs) {
                        Some(sol) => {
                            for (j, v) in sol.into_iter().enumerate() {
                                solved.set(row, j, v);
                            }
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    break;
                }
                if use_ridge {
                    return Err(Error::Degenerate(
                        "normal equations singular even with ridge".into(),
                    ));
                }
                use_ridge = true;
                trace.ridge_events.push(sweep);
                for i in 0..rank {
                    gram_r.set(i, i, gram_r.get(i, i) + 1e-12);
                }
            }
            model.factors_mut()[mode] = solved;
        }
        // normalize columns, absorbing the norms into the last mode
        for mode in 0..n - 1 {
            for j in 0..rank {
                let nrm = norm(model.factors()[mode].column(j));
                if nrm > 0.0 {
                    for v in model.factors_mut()[mode].column_mut(j) {
                        *v /= nrm;
                    }
                    for v in model.factors_mut()[n - 1].column_mut(j) {
                        *v *= nrm;
                    }
                }
            }
        }

        let err = eval_err(&model, &mut buf);
        let prev = *trace.relative_errors.last().unwrap();
        trace.relative_errors.push(err);
        trace.elapsed_ms.push(clock.elapsed().as_secs_f64() * 1e3);
        if err <= opts.tol {
            trace.converged = true;
            break;
        }
        if (prev - err).abs() < opts.delta_tol {
            break;
        }
    }
    Ok((model, trace))
}
