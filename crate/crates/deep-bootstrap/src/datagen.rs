//! Reproducible generators for the simulation designs, plus the numerical
//! oracle for the population target (the minimizer of the expected loss).
//!
//! Three designs are covered: binary classification with equi-correlated
//! Gaussian covariates (SVM), least-absolute-deviation regression with
//! heavy-tailed noise (two outlier models over a Toeplitz design), and a
//! centered lasso design with four active coefficients.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{minimize, SolverConfig};
use crate::linalg::cholesky;
use crate::losses::{LossModel, Parameter};

/// Feature matrix plus response vector. Rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    responses: Vec<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, responses: Vec<f64>) -> Result<Self> {
        if features.nrows() != responses.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset rows",
                expected: features.nrows(),
                got: responses.len(),
            });
        }
        if !features.is_standard_layout() {
            return Err(Error::invalid("features must be row-major"));
        }
        Ok(Self { features, responses })
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.features.ncols();
        &self.features.as_slice().unwrap()[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Stacks `self` on top of `other` (same width).
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.p() != other.p() {
            return Err(Error::DimensionMismatch {
                context: "dataset concat",
                expected: self.p(),
                got: other.p(),
            });
        }
        let mut raw = self.features.as_slice().unwrap().to_vec();
        raw.extend_from_slice(other.features.as_slice().unwrap());
        let mut ys = self.responses.clone();
        ys.extend_from_slice(&other.responses);
        Dataset::new(
            Array2::from_shape_vec((self.n() + other.n(), self.p()), raw).unwrap(),
            ys,
        )
    }

    /// Row permutation under the given RNG (used once before subgroup
    /// assignment so group structure cannot align with data order).
    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Dataset {
        let n = self.n();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        self.select_rows(&idx)
    }

    fn select_rows(&self, idx: &[usize]) -> Dataset {
        let p = self.p();
        let mut raw = Vec::with_capacity(idx.len() * p);
        let mut ys = Vec::with_capacity(idx.len());
        for &i in idx {
            raw.extend_from_slice(self.row(i));
            ys.push(self.responses[i]);
        }
        Dataset::new(Array2::from_shape_vec((idx.len(), p), raw).unwrap(), ys).unwrap()
    }

    /// Writes `y,x1,...,xp` rows preceded by a one-line JSON provenance
    /// header.
    pub fn save_csv(&self, path: &Path, header: &serde_json::Value) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "{header}").unwrap();
        write!(out, "y").unwrap();
        for j in 0..self.p() {
            write!(out, ",x{}", j + 1).unwrap();
        }
        out.push('\n');
        for i in 0..self.n() {
            write!(out, "{}", self.responses[i]).unwrap();
            for v in self.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load_csv(path: &Path) -> Result<(Dataset, serde_json::Value)> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut lines = text.lines();
        let header_line = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            message: "empty file".into(),
        })?;
        let header: serde_json::Value =
            serde_json::from_str(header_line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                message: format!("bad JSON header: {e}"),
            })?;
        let columns = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            message: "missing column header".into(),
        })?;
        let p = columns.split(',').count() - 1;
        let mut raw = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    message: format!("short row at line {}", lineno + 3),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    message: format!("line {}: {e}", lineno + 3),
                })
            };
            ys.push(parse(fields.next())?);
            for _ in 0..p {
                raw.push(parse(fields.next())?);
            }
        }
        let n = ys.len();
        Ok((
            Dataset::new(Array2::from_shape_vec((n, p), raw).unwrap(), ys)?,
            header,
        ))
    }
}

/// Lower-triangular sampler for `N(0, Sigma)` with a fixed column-order
/// convention so seeds reproduce across platforms.
struct MvnSampler {
    chol: Vec<f64>,
    p: usize,
}

impl MvnSampler {
    fn new(sigma: &[f64], p: usize) -> Result<Self> {
        Ok(Self {
            chol: cholesky(sigma, p)?,
            p,
        })
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let z: Vec<f64> = (0..self.p).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..self.p {
            let row = &self.chol[i * self.p..i * self.p + i + 1];
            out[i] = row.iter().zip(&z).map(|(l, zj)| l * zj).sum();
        }
    }
}

fn equicorrelated(p: usize, rho: f64) -> Vec<f64> {
    let mut sigma = vec![rho; p * p];
    for i in 0..p {
        sigma[i * p + i] = 1.0;
    }
    sigma
}

fn toeplitz_half_decay(p: usize) -> Vec<f64> {
    let mut sigma = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            sigma[i * p + j] = 0.5f64.powi((i as i32 - j as i32).abs());
        }
    }
    sigma
}

/// Standard Laplace variate (scale 1, variance 2).
fn laplace<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let v = u - 0.5;
        return -v.signum() * (1.0 - 2.0 * v.abs()).ln();
    }
}

pub const SVM_TEST_SIZE: usize = 100;

/// Binary classification design: balanced labels, `x | y ~ N(y 1_p, Sigma)`
/// with unit diagonal and `rho` off-diagonal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SvmDesign {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub seed: u64,
}

impl SvmDesign {
    fn sampler(&self) -> Result<MvnSampler> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must be in [0,1), got {}", self.rho)));
        }
        MvnSampler::new(&equicorrelated(self.p, self.rho), self.p)
    }

    fn draw_into<R: Rng + ?Sized>(&self, sampler: &MvnSampler, rng: &mut R, x: &mut [f64]) -> f64 {
        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
        sampler.sample_into(rng, x);
        for v in x.iter_mut() {
            *v += y;
        }
        y
    }
}

/// Training set of size `n` plus an independent test set of size 100 drawn
/// from the same law.
pub fn gen_svm(design: &SvmDesign) -> Result<(Dataset, Dataset)> {
    let sampler = design.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut make = |count: usize, rng: &mut ChaCha8Rng| {
        let mut raw = vec![0.0; count * design.p];
        let mut ys = Vec::with_capacity(count);
        for i in 0..count {
            let y = design.draw_into(&sampler, rng, &mut raw[i * design.p..(i + 1) * design.p]);
            ys.push(y);
        }
        Dataset::new(
            Array2::from_shape_vec((count, design.p), raw).unwrap(),
            ys,
        )
    };
    let train = make(design.n, &mut rng)?;
    let test = make(SVM_TEST_SIZE, &mut rng)?;
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadModel {
    /// Noise from the normalized mixture `0.9 N(0,1) + 0.1 N(0,225)`.
    M1LargeOutliers,
    /// Noise from normalized `Laplace(1)`.
    M2Laplace,
}

pub const LAD_SIGMA: f64 = 9.67;
/// Variance of the model-1 mixture `0.9 N(0,1) + 0.1 N(0,225)`.
pub const LAD_M1_VARIANCE: f64 = 23.4;

/// Regression design `y = beta* + x'theta* + sigma eps` with
/// `theta* = (1.5, 2, 3, 0, ..., 0)` over a Toeplitz(0.5) Gaussian design
/// and unit-variance heavy-tailed noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LadDesign {
    pub n: usize,
    pub p: usize,
    pub model: LadModel,
    pub seed: u64,
}

impl LadDesign {
    pub fn truth(&self) -> Parameter {
        let mut coefs = vec![0.0; self.p];
        coefs[0] = 1.5;
        coefs[1] = 2.0;
        coefs[2] = 3.0;
        Parameter {
            intercept: 1.0,
            coefs,
        }
    }

    /// Coefficient-level activity mask (first three coordinates active).
    pub fn active_mask(&self) -> Vec<bool> {
        (0..self.p).map(|j| j < 3).collect()
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.model {
            LadModel::M1LargeOutliers => {
                let u: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                let v = if u < 0.9 { z } else { 15.0 * z };
                v / LAD_M1_VARIANCE.sqrt()
            }
            LadModel::M2Laplace => laplace(rng) / 2.0f64.sqrt(),
        }
    }
}

pub fn gen_lad(design: &LadDesign) -> Result<Dataset> {
    if design.p < 3 {
        return Err(Error::invalid("LAD design needs p >= 3 for the active block"));
    }
    let sampler = MvnSampler::new(&toeplitz_half_decay(design.p), design.p)?;
    let truth = design.truth();
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut raw = vec![0.0; design.n * design.p];
    let mut ys = Vec::with_capacity(design.n);
    for i in 0..design.n {
        let row = &mut raw[i * design.p..(i + 1) * design.p];
        sampler.sample_into(&mut rng, row);
        let eps = design.noise(&mut rng);
        ys.push(truth.intercept + crate::linalg::dot(&truth.coefs, row) + LAD_SIGMA * eps);
    }
    Dataset::new(
        Array2::from_shape_vec((design.n, design.p), raw).unwrap(),
        ys,
    )
}

/// Centered lasso design: `y = x'theta* + eps`, `eps ~ N(0,1)`,
/// equi-correlated covariates, active coefficients `(1, 2, -2, 3)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LassoDesign {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub seed: u64,
}

impl Default for LassoDesign {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 50,
            rho: 0.6,
            seed: 0,
        }
    }
}

impl LassoDesign {
    pub fn truth(&self) -> Parameter {
        let mut coefs = vec![0.0; self.p];
        coefs[0] = 1.0;
        coefs[1] = 2.0;
        coefs[2] = -2.0;
        coefs[3] = 3.0;
        Parameter {
            intercept: 0.0,
            coefs,
        }
    }

    pub fn active_mask(&self) -> Vec<bool> {
        (0..self.p).map(|j| j < 4).collect()
    }
}

pub fn gen_lasso(design: &LassoDesign) -> Result<Dataset> {
    if design.p < 4 {
        return Err(Error::invalid("lasso design needs p >= 4 for the active block"));
    }
    let sampler = MvnSampler::new(&equicorrelated(design.p, design.rho), design.p)?;
    let truth = design.truth();
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let mut raw = vec![0.0; design.n * design.p];
    let mut ys = Vec::with_capacity(design.n);
    for i in 0..design.n {
        let row = &mut raw[i * design.p..(i + 1) * design.p];
        sampler.sample_into(&mut rng, row);
        let eps: f64 = rng.sample(StandardNormal);
        ys.push(crate::linalg::dot(&truth.coefs, row) + eps);
    }
    Dataset::new(
        Array2::from_shape_vec((design.n, design.p), raw).unwrap(),
        ys,
    )
}

/// A simulation design viewed as a sampling law (for the population-target
/// oracle, which needs cheap iid draws of any size).
#[derive(Debug, Clone, Copy)]
pub enum Design {
    Svm(SvmDesign),
    Lad(LadDesign),
    Lasso(LassoDesign),
}

impl Design {
    /// Fresh sample of `count` observations under a derived seed.
    pub fn generate(&self, count: usize, seed: u64) -> Result<Dataset> {
        match *self {
            Design::Svm(mut d) => {
                d.n = count;
                d.seed = seed;
                Ok(gen_svm(&d)?.0)
            }
            Design::Lad(mut d) => {
                d.n = count;
                d.seed = seed;
                gen_lad(&d)
            }
            Design::Lasso(mut d) => {
                d.n = count;
                d.seed = seed;
                gen_lasso(&d)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PopulationTargetOpts {
    /// Monte Carlo sample size approximating the population risk.
    pub mc_samples: usize,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for PopulationTargetOpts {
    fn default() -> Self {
        Self {
            mc_samples: 1_000_000,
            solver: SolverConfig {
                max_epochs: 1500,
                lr_grid: vec![0.003, 0.01, 0.03, 0.1],
                early_stop_patience: 150,
                early_stop_tol: 1e-7,
                ..SolverConfig::default()
            },
            seed: 0x9e3779b9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PopulationTarget {
    pub param: Parameter,
    /// False when the descent exhausted its epoch budget without the
    /// early-stopping plateau being reached.
    pub converged: bool,
}

/// Numerical oracle for the population target: minimizes the Monte Carlo
/// average loss over `mc_samples` fresh observations by subgradient descent.
/// The prior plays no role here; a flat-prior copy of the model is used.
pub fn population_target(
    model: &LossModel,
    design: &Design,
    opts: &PopulationTargetOpts,
) -> Result<PopulationTarget> {
    let data = design.generate(opts.mc_samples, opts.seed)?;
    let flat = LossModel {
        prior: None,
        ..*model
    };
    flat.validate_responses(&data)?;
    let weights = vec![1.0 / opts.mc_samples as f64; opts.mc_samples];
    let outcome = minimize(&data, &flat, &weights, &opts.solver)?;
    Ok(PopulationTarget {
        param: outcome.param,
        converged: outcome.converged,
    })
}
