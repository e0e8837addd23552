//! Exact bootstrap samplers: every posterior draw is one convex subgradient
//! optimization of a randomly re-weighted objective.
//!
//! `wlb_sample` implements the weighted likelihood bootstrap (full
//! `n x Dir(1,...,1)` weights, log-prior penalty); `npl_sample` implements
//! the nonparametric posterior bootstrap, where each draw re-draws `n'`
//! pseudo observations from the prior centering measure and weights the
//! augmented sample by `Dir(1,...,1, alpha/n',...,alpha/n')`.
//!
//! The solver is subgradient descent with diminishing steps `lr/sqrt(t)`,
//! best-iterate tracking, early stopping on a relative-improvement plateau,
//! and an initial-learning-rate grid; the run with the lowest final
//! objective wins.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::dbs::{Method, SampleBatch};
use crate::error::{Error, Result};
use crate::losses::{weighted_objective_and_grad, LossModel, Parameter};
use crate::weights::{draw_dirichlet, npl_weights, DirichletSpec, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    Full,
    Stochastic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_epochs: usize,
    /// Initial learning rates to try; the best final objective wins.
    pub lr_grid: Vec<f64>,
    pub early_stop_patience: usize,
    /// Relative improvement below which an epoch counts as stalled.
    pub early_stop_tol: f64,
    pub batch_mode: BatchMode,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_epochs: 20_000,
            lr_grid: vec![0.0001, 0.001, 0.01, 0.1],
            early_stop_patience: 200,
            early_stop_tol: 1e-6,
            batch_mode: BatchMode::Full,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.lr_grid.is_empty() || self.lr_grid.iter().any(|&lr| lr <= 0.0) {
            return Err(Error::invalid("lr_grid must be nonempty and positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SolveOutcome {
    pub param: Parameter,
    pub objective: f64,
    pub converged: bool,
}

/// Minimizes the weighted objective over the learning-rate grid and keeps
/// the run with the lowest best objective. A run whose iterate turns
/// non-finite keeps its best finite iterate and is simply outscored; the
/// call errors only if no run produced a finite objective at all.
pub(crate) fn minimize(
    data: &Dataset,
    model: &LossModel,
    weights: &[f64],
    solver: &SolverConfig,
) -> Result<SolveOutcome> {
    solver.validate()?;
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            context: "solve_weighted weights",
            expected: data.n(),
            got: weights.len(),
        });
    }
    let mut best: Option<SolveOutcome> = None;
    for &lr in &solver.lr_grid {
        let outcome = descend(data, model, weights, solver, lr);
        if best
            .as_ref()
            .map(|b| outcome.objective < b.objective)
            .unwrap_or(true)
        {
            best = Some(outcome);
        }
    }
    let best = best.expect("lr grid validated nonempty");
    if !best.objective.is_finite() || !best.param.is_finite() {
        return Err(Error::NonFinite {
            context: "solve_weighted",
            epoch: 0,
            draw: 0,
        });
    }
    Ok(best)
}

fn descend(
    data: &Dataset,
    model: &LossModel,
    weights: &[f64],
    solver: &SolverConfig,
    lr: f64,
) -> SolveOutcome {
    let p = data.p();
    let mut param = Parameter::zeros(p);
    let mut grad_beta = 0.0;
    let mut grad_coefs = vec![0.0; p];

    let mut best_param = param.clone();
    let mut best_obj = f64::INFINITY;
    let mut stalled = 0usize;
    let mut converged = false;
    let batch = 256usize;

    for t in 1..=solver.max_epochs {
        let obj = weighted_objective_and_grad(
            model,
            &param,
            data,
            weights,
            1.0,
            &mut grad_beta,
            &mut grad_coefs,
        );
        if !obj.is_finite() {
            // Divergence under this learning rate; keep the best iterate.
            break;
        }
        if obj < best_obj - solver.early_stop_tol * best_obj.abs().max(1.0) {
            best_obj = obj;
            best_param.intercept = param.intercept;
            best_param.coefs.copy_from_slice(&param.coefs);
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= solver.early_stop_patience {
                converged = true;
                break;
            }
        }
        let step = lr / (t as f64).sqrt();
        match solver.batch_mode {
            BatchMode::Full => apply_step(model, &mut param, step, grad_beta, &grad_coefs),
            BatchMode::Stochastic => {
                // One sweep of sequential minibatch steps per epoch.
                let n = data.n();
                let mut start = 0;
                let mut gb = 0.0;
                let mut gc = vec![0.0; p];
                while start < n {
                    let end = (start + batch).min(n);
                    batch_grad(model, &param, data, weights, start, end, &mut gb, &mut gc);
                    apply_step(model, &mut param, step, gb, &gc);
                    start = end;
                }
            }
        }
        if !param.is_finite() {
            break;
        }
    }
    SolveOutcome {
        param: best_param,
        objective: best_obj,
        converged,
    }
}

fn batch_grad(
    model: &LossModel,
    param: &Parameter,
    data: &Dataset,
    weights: &[f64],
    start: usize,
    end: usize,
    gb: &mut f64,
    gc: &mut [f64],
) {
    *gb = 0.0;
    gc.iter_mut().for_each(|g| *g = 0.0);
    for i in start..end {
        if weights[i] == 0.0 {
            continue;
        }
        let (db, dc) =
            crate::losses::loss_subgrad(model, param, data.row(i), data.response(i)).unwrap();
        *gb += weights[i] * db;
        crate::linalg::axpy(weights[i], &dc, gc);
    }
    // Spread the prior penalty proportionally over the sweep.
    if let Some(pr) = &model.prior {
        let frac = (end - start) as f64 / data.n() as f64;
        let (pb, pc) = crate::losses::log_prior_subgrad(pr, param);
        *gb -= frac * pb;
        crate::linalg::axpy(-frac, &pc, gc);
    }
}

#[inline]
fn apply_step(model: &LossModel, param: &mut Parameter, step: f64, gb: f64, gc: &[f64]) {
    if model.includes_intercept {
        param.intercept -= step * gb;
    }
    for (c, g) in param.coefs.iter_mut().zip(gc) {
        *c -= step * g;
    }
}

/// Approximate minimizer of the weighted objective for one weight vector.
pub fn solve_weighted(
    data: &Dataset,
    model: &LossModel,
    weights: &WeightVector,
    solver: &SolverConfig,
) -> Result<Parameter> {
    model.validate_responses(data)?;
    Ok(minimize(data, model, &weights.expanded, solver)?.param)
}

/// Independent RNG stream for draw `i`, so results never depend on the
/// thread schedule.
fn draw_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64 + 1);
    rng
}

/// Weighted likelihood bootstrap: `n_draws` independent optimizations, each
/// under a fresh full `n x Dir(1,...,1)` weight vector, with the model's
/// log-prior as a fixed penalty.
pub fn wlb_sample(
    data: &Dataset,
    model: &LossModel,
    n_draws: usize,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SampleBatch> {
    if n_draws == 0 {
        return Err(Error::invalid("n_draws must be positive"));
    }
    model.validate_responses(data)?;
    let start = std::time::Instant::now();
    let n = data.n();
    let rows: Vec<Result<Vec<f64>>> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i);
            let w = draw_dirichlet(&DirichletSpec::symmetric(n), &mut rng)?;
            let outcome = minimize(data, model, &w, solver).map_err(|e| tag_draw(e, i))?;
            Ok(outcome.param.to_flat())
        })
        .collect();
    let draws = collect_rows(rows, data.p() + 1)?;
    Ok(SampleBatch {
        method: Method::Wlb,
        draws,
        train_seconds: 0.0,
        sample_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Source of pseudo prior observations for nonparametric learning.
pub trait PriorSampler: Sync {
    fn feature_dim(&self) -> usize;
    /// One pseudo observation `(x, y)`.
    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64);

    fn draw_dataset(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let p = self.feature_dim();
        let mut raw = Vec::with_capacity(count * p);
        let mut ys = Vec::with_capacity(count);
        for _ in 0..count {
            let (x, y) = self.draw(rng);
            debug_assert_eq!(x.len(), p);
            raw.extend_from_slice(&x);
            ys.push(y);
        }
        Dataset::new(Array2::from_shape_vec((count, p), raw).unwrap(), ys)
    }
}

/// Classification prior centering measure: features resampled from the
/// observed empirical distribution, labels uniform on {-1, +1}. Treating y
/// and x as independent encodes "no signal" a priori.
pub struct SvmNplPrior {
    features: Array2<f64>,
}

impl SvmNplPrior {
    pub fn new(data: &Dataset) -> Self {
        Self {
            features: data.features().clone(),
        }
    }
}

impl PriorSampler for SvmNplPrior {
    fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let i = rng.random_range(0..self.features.nrows());
        let x = self.features.row(i).to_vec();
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        (x, y)
    }
}

/// Nonparametric posterior bootstrap: per draw, re-draw `n_prime` pseudo
/// observations from the prior, weight the augmented sample with a full
/// `(n + n') x Dir(1,...,1, alpha/n',...,alpha/n')` vector (scaled to
/// `n + n'`) and minimize the augmented objective. The model prior is
/// ignored; pseudo observations carry the prior instead.
pub fn npl_sample(
    data: &Dataset,
    model: &LossModel,
    pseudo_source: &dyn PriorSampler,
    alpha: f64,
    n_prime: usize,
    n_draws: usize,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SampleBatch> {
    if n_draws == 0 {
        return Err(Error::invalid("n_draws must be positive"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha must be nonnegative"));
    }
    if pseudo_source.feature_dim() != data.p() {
        return Err(Error::DimensionMismatch {
            context: "npl prior feature dim",
            expected: data.p(),
            got: pseudo_source.feature_dim(),
        });
    }
    model.validate_responses(data)?;
    let flat = LossModel {
        prior: None,
        ..*model
    };
    let start = std::time::Instant::now();
    let n = data.n();
    let rows: Vec<Result<Vec<f64>>> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = draw_rng(seed, i);
            let pseudo = pseudo_source.draw_dataset(n_prime, &mut rng)?;
            let augmented = data.concat(&pseudo)?;
            // Identity subgrouping reproduces the full Dirichlet law.
            let w = npl_weights(n, n_prime, n, n_prime, alpha, &mut rng)?;
            let outcome =
                minimize(&augmented, &flat, &w.expanded, solver).map_err(|e| tag_draw(e, i))?;
            Ok(outcome.param.to_flat())
        })
        .collect();
    let draws = collect_rows(rows, data.p() + 1)?;
    Ok(SampleBatch {
        method: Method::Wlb,
        draws,
        train_seconds: 0.0,
        sample_seconds: start.elapsed().as_secs_f64(),
    })
}

fn tag_draw(e: Error, draw: usize) -> Error {
    match e {
        Error::NonFinite { context, epoch, .. } => Error::NonFinite {
            context,
            epoch,
            draw,
        },
        other => other,
    }
}

fn collect_rows(rows: Vec<Result<Vec<f64>>>, width: usize) -> Result<Array2<f64>> {
    let mut raw = Vec::with_capacity(rows.len() * width);
    for r in rows {
        let r = r?;
        debug_assert_eq!(r.len(), width);
        raw.extend_from_slice(&r);
    }
    Ok(Array2::from_shape_vec((raw.len() / width, width), raw).unwrap())
}
