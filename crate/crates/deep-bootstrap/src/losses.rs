//! Loss models, log-priors and the Gibbs-posterior log-density.
//!
//! Every model is a per-observation loss `l(beta, theta; x, y)` together
//! with a subgradient in the parameters. The hinge and least-absolute-
//! deviation losses carry an intercept; the squared loss (used for the
//! centered lasso design) does not. An optional Laplace prior on the
//! coefficients supplies the penalty term of the weighted objectives and
//! the prior factor of the Gibbs density.

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

/// Regression/classification parameter: intercept plus coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl Parameter {
    pub fn zeros(p: usize) -> Self {
        Self {
            intercept: 0.0,
            coefs: vec![0.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.coefs.len()
    }

    /// Flat `(beta, theta_1, ..., theta_p)` layout used by sample matrices.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.coefs.len());
        v.push(self.intercept);
        v.extend_from_slice(&self.coefs);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() {
            return Err(Error::invalid("empty flat parameter"));
        }
        Ok(Self {
            intercept: flat[0],
            coefs: flat[1..].to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.coefs.iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// SVM hinge loss `max(0, 1 - y(beta + x.theta))`, labels in {-1, +1}.
    Hinge,
    /// Least absolute deviation `|y - beta - x.theta|`.
    Lad,
    /// Squared loss `(y - x.theta)^2` with no intercept (centered design).
    Squared,
}

/// Independent Laplace prior on the coefficients,
/// `pi(theta) = prod_j (lambda/2) exp(-lambda |theta_j|)`.
/// The intercept is never penalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacePrior {
    pub lambda: f64,
    pub penalize_intercept: bool,
}

impl LaplacePrior {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            penalize_intercept: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub kind: LossKind,
    pub includes_intercept: bool,
    pub prior: Option<LaplacePrior>,
}

impl LossModel {
    pub fn hinge(prior: Option<LaplacePrior>) -> Self {
        Self {
            kind: LossKind::Hinge,
            includes_intercept: true,
            prior,
        }
    }

    pub fn lad(prior: Option<LaplacePrior>) -> Self {
        Self {
            kind: LossKind::Lad,
            includes_intercept: true,
            prior,
        }
    }

    pub fn squared(prior: Option<LaplacePrior>) -> Self {
        Self {
            kind: LossKind::Squared,
            includes_intercept: false,
            prior,
        }
    }

    /// Number of free parameters (p + 1 with an intercept, p without).
    pub fn param_dim(&self, p: usize) -> usize {
        if self.includes_intercept {
            p + 1
        } else {
            p
        }
    }

    /// Checks response preconditions once per dataset (hinge labels).
    pub fn validate_responses(&self, data: &Dataset) -> Result<()> {
        if self.kind == LossKind::Hinge {
            for i in 0..data.n() {
                let y = data.response(i);
                if y != 1.0 && y != -1.0 {
                    return Err(Error::invalid(format!(
                        "hinge loss needs labels in {{-1,+1}}, got {y} at row {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn linear(&self, param: &Parameter, x: &[f64]) -> f64 {
        let base = if self.includes_intercept {
            param.intercept
        } else {
            0.0
        };
        base + dot(&param.coefs, x)
    }
}

/// Per-observation loss value.
pub fn loss(model: &LossModel, param: &Parameter, x: &[f64], y: f64) -> Result<f64> {
    if x.len() != param.coefs.len() {
        return Err(Error::DimensionMismatch {
            context: "loss features",
            expected: param.coefs.len(),
            got: x.len(),
        });
    }
    match model.kind {
        LossKind::Hinge => {
            if y != 1.0 && y != -1.0 {
                return Err(Error::invalid(format!(
                    "hinge loss needs labels in {{-1,+1}}, got {y}"
                )));
            }
            Ok((1.0 - y * model.linear(param, x)).max(0.0))
        }
        LossKind::Lad => Ok((y - model.linear(param, x)).abs()),
        LossKind::Squared => {
            let r = y - model.linear(param, x);
            Ok(r * r)
        }
    }
}

/// Subgradient of the per-observation loss in `(beta, theta)`.
///
/// Kink conventions: hinge at margin exactly 1 and LAD at residual exactly 0
/// both return the zero subgradient.
pub fn loss_subgrad(
    model: &LossModel,
    param: &Parameter,
    x: &[f64],
    y: f64,
) -> Result<(f64, Vec<f64>)> {
    if x.len() != param.coefs.len() {
        return Err(Error::DimensionMismatch {
            context: "loss_subgrad features",
            expected: param.coefs.len(),
            got: x.len(),
        });
    }
    let mut d_beta = 0.0;
    let mut d_coefs = vec![0.0; x.len()];
    match model.kind {
        LossKind::Hinge => {
            let margin = y * model.linear(param, x);
            if margin < 1.0 {
                d_beta = -y;
                axpy(-y, x, &mut d_coefs);
            }
        }
        LossKind::Lad => {
            let r = y - model.linear(param, x);
            let s = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            d_beta = -s;
            axpy(-s, x, &mut d_coefs);
        }
        LossKind::Squared => {
            let r = y - model.linear(param, x);
            axpy(-2.0 * r, x, &mut d_coefs);
        }
    }
    if !model.includes_intercept {
        d_beta = 0.0;
    }
    Ok((d_beta, d_coefs))
}

/// `log pi(theta)` under the Laplace prior, keeping the normalizing
/// constant so criteria compared across lambda remain consistent.
/// `lambda = 0` means a flat prior and returns 0.
pub fn log_prior(prior: &LaplacePrior, param: &Parameter) -> f64 {
    if prior.lambda == 0.0 {
        return 0.0;
    }
    let half = (prior.lambda / 2.0).ln();
    let mut total = 0.0;
    for c in &param.coefs {
        total += half - prior.lambda * c.abs();
    }
    if prior.penalize_intercept {
        total += half - prior.lambda * param.intercept.abs();
    }
    total
}

/// Subgradient of `log pi` in `(beta, theta)`: `-lambda sign(theta_j)` per
/// coefficient and 0 for the intercept (sign(0) = 0).
pub fn log_prior_subgrad(prior: &LaplacePrior, param: &Parameter) -> (f64, Vec<f64>) {
    let mut d_coefs = vec![0.0; param.coefs.len()];
    if prior.lambda == 0.0 {
        return (0.0, d_coefs);
    }
    for (d, c) in d_coefs.iter_mut().zip(&param.coefs) {
        *d = -prior.lambda * c.signum_zero();
    }
    let d_beta = if prior.penalize_intercept {
        -prior.lambda * param.intercept.signum_zero()
    } else {
        0.0
    };
    (d_beta, d_coefs)
}

trait SignumZero {
    fn signum_zero(self) -> f64;
}

impl SignumZero for f64 {
    #[inline]
    fn signum_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// Unnormalized Gibbs-posterior log-density
/// `log pi(theta) - alpha * sum_i l(theta; x_i)`.
pub fn gibbs_log_density(
    model: &LossModel,
    param: &Parameter,
    data: &Dataset,
    alpha: f64,
) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let mut total_loss = 0.0;
    for i in 0..data.n() {
        total_loss += loss(model, param, data.row(i), data.response(i))?;
    }
    let lp = model
        .prior
        .as_ref()
        .map(|pr| log_prior(pr, param))
        .unwrap_or(0.0);
    Ok(lp - alpha * total_loss)
}

/// Randomly re-weighted objective
/// `sum_i w_i l(param; x_i) - prior_weight * log pi(param)`.
///
/// Gibbs-posterior training and the weighted likelihood bootstrap use
/// `prior_weight = 1`; nonparametric learning uses `prior_weight = 0`
/// because pseudo observations carry the prior instead.
pub fn weighted_objective(
    model: &LossModel,
    param: &Parameter,
    data: &Dataset,
    weights: &[f64],
    prior_weight: f64,
) -> Result<f64> {
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch {
            context: "weighted_objective weights",
            expected: data.n(),
            got: weights.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..data.n() {
        total += weights[i] * loss(model, param, data.row(i), data.response(i))?;
    }
    if prior_weight != 0.0 {
        if let Some(pr) = &model.prior {
            total -= prior_weight * log_prior(pr, param);
        }
    }
    Ok(total)
}

/// Fused objective + subgradient pass used by the optimization loops.
///
/// Accumulates the subgradient of the weighted objective into
/// `(grad_beta, grad_coefs)` (overwriting them) and returns the objective.
/// Responses are assumed pre-validated.
pub(crate) fn weighted_objective_and_grad(
    model: &LossModel,
    param: &Parameter,
    data: &Dataset,
    weights: &[f64],
    prior_weight: f64,
    grad_beta: &mut f64,
    grad_coefs: &mut [f64],
) -> f64 {
    debug_assert_eq!(weights.len(), data.n());
    debug_assert_eq!(grad_coefs.len(), param.coefs.len());
    *grad_beta = 0.0;
    grad_coefs.iter_mut().for_each(|g| *g = 0.0);
    let mut obj = 0.0;
    match model.kind {
        LossKind::Hinge => {
            for i in 0..data.n() {
                let w = weights[i];
                if w == 0.0 {
                    continue;
                }
                let x = data.row(i);
                let y = data.response(i);
                let margin = y * (param.intercept + dot(&param.coefs, x));
                if margin < 1.0 {
                    obj += w * (1.0 - margin);
                    *grad_beta -= w * y;
                    axpy(-w * y, x, grad_coefs);
                }
            }
        }
        LossKind::Lad => {
            for i in 0..data.n() {
                let w = weights[i];
                if w == 0.0 {
                    continue;
                }
                let x = data.row(i);
                let r = data.response(i) - param.intercept - dot(&param.coefs, x);
                obj += w * r.abs();
                let s = r.signum_zero();
                *grad_beta -= w * s;
                if s != 0.0 {
                    axpy(-w * s, x, grad_coefs);
                }
            }
        }
        LossKind::Squared => {
            for i in 0..data.n() {
                let w = weights[i];
                if w == 0.0 {
                    continue;
                }
                let x = data.row(i);
                let r = data.response(i) - dot(&param.coefs, x);
                obj += w * r * r;
                axpy(-2.0 * w * r, x, grad_coefs);
            }
        }
    }
    if prior_weight != 0.0 {
        if let Some(pr) = &model.prior {
            obj -= prior_weight * log_prior(pr, param);
            let (pb, pc) = log_prior_subgrad(pr, param);
            *grad_beta -= prior_weight * pb;
            axpy(-prior_weight, &pc, grad_coefs);
        }
    }
    if !model.includes_intercept {
        *grad_beta = 0.0;
    }
    obj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::Dataset;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_data(xs: Vec<f64>, p: usize, ys: Vec<f64>) -> Dataset {
        let n = ys.len();
        Dataset::new(Array2::from_shape_vec((n, p), xs).unwrap(), ys).unwrap()
    }

    #[test]
    fn hinge_at_origin_is_one() {
        let model = LossModel::hinge(None);
        let param = Parameter::zeros(3);
        for &y in &[1.0, -1.0] {
            assert_eq!(loss(&model, &param, &[0.4, -2.0, 7.0], y).unwrap(), 1.0);
        }
    }

    #[test]
    fn hinge_beyond_margin_is_zero() {
        let model = LossModel::hinge(None);
        let param = Parameter {
            intercept: 0.5,
            coefs: vec![1.5],
        };
        // beta + x theta = 0.5 + 1.5 = 2, y = 1.
        assert_eq!(loss(&model, &param, &[1.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hinge_rejects_bad_labels() {
        let model = LossModel::hinge(None);
        let param = Parameter::zeros(1);
        assert!(loss(&model, &param, &[1.0], 0.5).is_err());
    }

    #[test]
    fn lad_zero_residual() {
        let model = LossModel::lad(None);
        let param = Parameter {
            intercept: 1.0,
            coefs: vec![2.0, -1.0],
        };
        let x = [0.5, 0.25];
        let y = 1.0 + 1.0 - 0.25;
        assert_eq!(loss(&model, &param, &x, y).unwrap(), 0.0);
    }

    #[test]
    fn hinge_subgradient_at_kink_is_zero() {
        let model = LossModel::hinge(None);
        let param = Parameter {
            intercept: 0.0,
            coefs: vec![1.0],
        };
        // margin = y (x theta) = 1 exactly.
        let (db, dc) = loss_subgrad(&model, &param, &[1.0], 1.0).unwrap();
        assert_eq!(db, 0.0);
        assert_eq!(dc, vec![0.0]);
    }

    #[test]
    fn lad_positive_residual_beta_grad() {
        let model = LossModel::lad(None);
        let param = Parameter::zeros(2);
        let (db, _) = loss_subgrad(&model, &param, &[0.3, 0.4], 2.0).unwrap();
        assert_eq!(db, -1.0);
    }

    #[test]
    fn subgradient_matches_finite_differences_at_smooth_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for kind in [LossKind::Hinge, LossKind::Lad, LossKind::Squared] {
            let model = LossModel {
                kind,
                includes_intercept: kind != LossKind::Squared,
                prior: None,
            };
            for _ in 0..50 {
                let p = 3;
                let mut param = Parameter {
                    intercept: rng.random_range(-2.0..2.0),
                    coefs: (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
                };
                let x: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = if kind == LossKind::Hinge {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    rng.random_range(-2.0..2.0)
                };
                // Stay away from the kinks.
                let lin = param.intercept + crate::linalg::dot(&param.coefs, &x);
                if kind == LossKind::Hinge && (y * lin - 1.0).abs() < 1e-3 {
                    continue;
                }
                if kind == LossKind::Lad && (y - lin).abs() < 1e-3 {
                    continue;
                }
                let (db, dc) = loss_subgrad(&model, &param, &x, y).unwrap();
                let base_b = param.intercept;
                param.intercept = base_b + h;
                let up = loss(&model, &param, &x, y).unwrap();
                param.intercept = base_b - h;
                let dn = loss(&model, &param, &x, y).unwrap();
                param.intercept = base_b;
                if model.includes_intercept {
                    assert!((db - (up - dn) / (2.0 * h)).abs() < 1e-6);
                }
                for j in 0..p {
                    let base = param.coefs[j];
                    param.coefs[j] = base + h;
                    let up = loss(&model, &param, &x, y).unwrap();
                    param.coefs[j] = base - h;
                    let dn = loss(&model, &param, &x, y).unwrap();
                    param.coefs[j] = base;
                    assert!((dc[j] - (up - dn) / (2.0 * h)).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn log_prior_examples() {
        let param = Parameter {
            intercept: 3.0,
            coefs: vec![0.0, 0.0, 0.0],
        };
        assert_eq!(log_prior(&LaplacePrior::new(0.0).unwrap(), &param), 0.0);
        // lambda = 2: log(lambda/2) = 0 and theta = 0, so the prior is 0.
        assert_eq!(log_prior(&LaplacePrior::new(2.0).unwrap(), &param), 0.0);
        let param = Parameter {
            intercept: 0.0,
            coefs: vec![1.0, -1.0],
        };
        let expect = 2.0 * (0.5f64).ln() - 2.0;
        assert!((log_prior(&LaplacePrior::new(1.0).unwrap(), &param) - expect).abs() < 1e-15);
    }

    #[test]
    fn gibbs_log_density_examples() {
        let model = LossModel::lad(None);
        let data = tiny_data(vec![2.0], 1, vec![1.0 + 2.0 * 0.5]);
        let param = Parameter {
            intercept: 1.0,
            coefs: vec![0.5],
        };
        assert_eq!(gibbs_log_density(&model, &param, &data, 1.0).unwrap(), 0.0);

        // Doubling alpha doubles the loss term.
        let off = Parameter {
            intercept: 0.0,
            coefs: vec![0.0],
        };
        let d1 = gibbs_log_density(&model, &off, &data, 1.0).unwrap();
        let d2 = gibbs_log_density(&model, &off, &data, 2.0).unwrap();
        assert!((d2 - 2.0 * d1).abs() < 1e-12);
        assert!(gibbs_log_density(&model, &off, &data, 0.0).is_err());
    }

    #[test]
    fn gibbs_log_density_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 7;
        let xs: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = tiny_data(xs.clone(), 2, ys.clone());
        // Reverse the rows.
        let mut xs_rev = Vec::new();
        for i in (0..n).rev() {
            xs_rev.extend_from_slice(&xs[i * 2..(i + 1) * 2]);
        }
        let ys_rev: Vec<f64> = ys.iter().rev().copied().collect();
        let data_rev = tiny_data(xs_rev, 2, ys_rev);
        let model = LossModel::lad(Some(LaplacePrior::new(0.7).unwrap()));
        let param = Parameter {
            intercept: 0.3,
            coefs: vec![-0.2, 1.4],
        };
        let a = gibbs_log_density(&model, &param, &data, 1.0).unwrap();
        let b = gibbs_log_density(&model, &param, &data_rev, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn unit_weights_flat_prior_equal_empirical_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 6;
        let xs: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = tiny_data(xs, 2, ys);
        let model = LossModel::lad(None);
        let param = Parameter {
            intercept: 0.1,
            coefs: vec![0.4, -0.6],
        };
        let risk: f64 = (0..n)
            .map(|i| loss(&model, &param, data.row(i), data.response(i)).unwrap())
            .sum();
        let obj = weighted_objective(&model, &param, &data, &vec![1.0; n], 0.0).unwrap();
        assert!((obj - risk).abs() < 1e-12);

        // Doubling all weights doubles the data term only.
        let obj2 = weighted_objective(&model, &param, &data, &vec![2.0; n], 0.0).unwrap();
        assert!((obj2 - 2.0 * obj).abs() < 1e-12);
    }

    #[test]
    fn lad_with_laplace_prior_is_the_penalized_objective() {
        // lambda = 2 makes the prior's normalizing constant vanish, so the
        // weighted objective equals sum |r_i| + lambda sum |theta_j| exactly.
        let lambda = 2.0;
        let model = LossModel::lad(Some(LaplacePrior::new(lambda).unwrap()));
        let data = tiny_data(vec![1.0, -1.0, 0.5, 2.0], 2, vec![0.3, -0.7]);
        let param = Parameter {
            intercept: 0.2,
            coefs: vec![1.0, -0.5],
        };
        let mut expect = 0.0;
        for i in 0..2 {
            expect += (data.response(i)
                - param.intercept
                - crate::linalg::dot(&param.coefs, data.row(i)))
            .abs();
        }
        expect += lambda * (1.0 + 0.5);
        let obj = weighted_objective(&model, &param, &data, &[1.0, 1.0], 1.0).unwrap();
        assert!((obj - expect).abs() < 1e-12);
    }

    #[test]
    fn losses_are_convex_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for kind in [LossKind::Hinge, LossKind::Lad, LossKind::Squared] {
            let model = LossModel {
                kind,
                includes_intercept: kind != LossKind::Squared,
                prior: None,
            };
            for _ in 0..200 {
                let p = 4;
                let draw = |rng: &mut ChaCha8Rng| Parameter {
                    intercept: rng.random_range(-3.0..3.0),
                    coefs: (0..p).map(|_| rng.random_range(-3.0..3.0)).collect(),
                };
                let a = draw(&mut rng);
                let b = draw(&mut rng);
                let t: f64 = rng.random_range(0.0..1.0);
                let mid = Parameter {
                    intercept: t * a.intercept + (1.0 - t) * b.intercept,
                    coefs: a
                        .coefs
                        .iter()
                        .zip(&b.coefs)
                        .map(|(x, y)| t * x + (1.0 - t) * y)
                        .collect(),
                };
                let x: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = if kind == LossKind::Hinge { 1.0 } else { 0.7 };
                let la = loss(&model, &a, &x, y).unwrap();
                let lb = loss(&model, &b, &x, y).unwrap();
                let lm = loss(&model, &mid, &x, y).unwrap();
                assert!(lm <= t * la + (1.0 - t) * lb + 1e-9);
            }
        }
    }

    #[test]
    fn subgradient_inequality_holds() {
        // loss(param + h d) >= loss(param) + h <subgrad, d> - 1e-6.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-4;
        for kind in [LossKind::Hinge, LossKind::Lad, LossKind::Squared] {
            let model = LossModel {
                kind,
                includes_intercept: kind != LossKind::Squared,
                prior: None,
            };
            for _ in 0..200 {
                let p = 3;
                let param = Parameter {
                    intercept: rng.random_range(-2.0..2.0),
                    coefs: (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
                };
                let x: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = if kind == LossKind::Hinge { -1.0 } else { 0.3 };
                let d_beta: f64 = rng.random_range(-1.0..1.0);
                let d: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (gb, gc) = loss_subgrad(&model, &param, &x, y).unwrap();
                let moved = Parameter {
                    intercept: param.intercept + if model.includes_intercept { h * d_beta } else { 0.0 },
                    coefs: param.coefs.iter().zip(&d).map(|(c, di)| c + h * di).collect(),
                };
                let inner = if model.includes_intercept { gb * d_beta } else { 0.0 }
                    + crate::linalg::dot(&gc, &d);
                let lhs = loss(&model, &moved, &x, y).unwrap();
                let rhs = loss(&model, &param, &x, y).unwrap() + h * inner - 1e-6;
                assert!(lhs >= rhs);
            }
        }
    }

    #[test]
    fn fused_grad_matches_public_api() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 5;
        let p = 3;
        let xs: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = tiny_data(xs, p, ys);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let model = LossModel::lad(Some(LaplacePrior::new(0.9).unwrap()));
        let param = Parameter {
            intercept: 0.25,
            coefs: vec![0.5, -1.0, 0.75],
        };
        let mut gb = 0.0;
        let mut gc = vec![0.0; p];
        let obj = weighted_objective_and_grad(&model, &param, &data, &w, 1.0, &mut gb, &mut gc);
        let expect = weighted_objective(&model, &param, &data, &w, 1.0).unwrap();
        assert!((obj - expect).abs() < 1e-12);

        let mut eb = 0.0;
        let mut ec = vec![0.0; p];
        for i in 0..n {
            let (db, dc) = loss_subgrad(&model, &param, data.row(i), data.response(i)).unwrap();
            eb += w[i] * db;
            axpy(w[i], &dc, &mut ec);
        }
        let pr = model.prior.unwrap();
        let (pb, pc) = log_prior_subgrad(&pr, &param);
        eb -= pb;
        axpy(-1.0, &pc, &mut ec);
        assert!((gb - eb).abs() < 1e-12);
        for (a, b) in gc.iter().zip(&ec) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
