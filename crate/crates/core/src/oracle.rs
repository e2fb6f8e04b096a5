//! Brute-force checks that do not go through the reduced equations: the
//! Kolmogorov consistency of finite-volume weights by explicit enumeration,
//! and finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PeriodTwoField, WeightEvaluator};
use crate::tree::FiniteTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Largest admissible relative error between summed and coarse weights.
    pub tol: f64,
    /// Random interior configurations compared against the all-ones one.
    pub pairs: usize,
    pub seed: u64,
    /// Upper bound on `q^{|W_n|}`.
    pub max_enum: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tol: 1e-6, pairs: 20, seed: 0, max_enum: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_relative_error: f64,
    /// Number of configurations compared with the reference one.
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Streaming `ln Σ exp(x_i)` with a running maximum and Neumaier-compensated
/// summation of the rescaled terms.
#[derive(Debug, Clone, Copy)]
struct LogSumExp {
    max: f64,
    sum: f64,
    comp: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0, comp: 0.0 }
    }

    fn add_scaled(&mut self, t: f64) {
        let s = self.sum + t;
        if self.sum.abs() >= t.abs() {
            self.comp += (self.sum - s) + t;
        } else {
            self.comp += (t - s) + self.sum;
        }
        self.sum = s;
    }

    fn push(&mut self, x: f64) {
        if x > self.max {
            let scale = (self.max - x).exp();
            self.sum *= scale;
            self.comp *= scale;
            self.max = x;
        }
        self.add_scaled((x - self.max).exp());
    }

    fn merge(mut self, other: Self) -> Self {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max > self.max {
            return other.merge(self);
        }
        let scale = (other.max - self.max).exp();
        self.add_scaled(other.sum * scale);
        self.add_scaled(other.comp * scale);
        self
    }

    fn value(&self) -> f64 {
        self.max + (self.sum + self.comp).ln()
    }
}

/// Number of configurations on `sites` spins, if within `budget`.
fn enumeration_size(q: usize, sites: usize, budget: u64) -> Result<u64> {
    u32::try_from(sites)
        .ok()
        .and_then(|s| (q as u64).checked_pow(s))
        .filter(|&n| n <= budget)
        .ok_or(Error::BudgetExceeded { states: q, sites, budget })
}

/// `ln Σ_ω w_n(σ ∨ ω)` over all boundary configurations `ω` on `W_n`.
///
/// The leading boundary spins split the sum into independent chunks that
/// run in parallel and merge in a fixed order.
fn log_marginal(eval: &WeightEvaluator<'_>, interior: &[usize], q: usize) -> f64 {
    let tree = eval.tree();
    let boundary = tree.boundary();
    let sites = boundary.len();
    let lead = sites.min(2);
    let chunks = q.pow(lead as u32);

    let partial: Vec<LogSumExp> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut config = vec![1usize; tree.num_vertices()];
            config[..interior.len()].copy_from_slice(interior);
            let mut c = chunk;
            for i in 0..lead {
                config[boundary.start + i] = c % q + 1;
                c /= q;
            }
            let free = boundary.start + lead..boundary.end;
            let mut acc = LogSumExp::new();
            loop {
                acc.push(eval.log_weight_unchecked(&config));
                // Odometer over the free boundary spins.
                let mut carried = true;
                for v in free.clone() {
                    if config[v] < q {
                        config[v] += 1;
                        carried = false;
                        break;
                    }
                    config[v] = 1;
                }
                if carried {
                    break;
                }
            }
            acc
        })
        .collect();
    partial.into_iter().fold(LogSumExp::new(), LogSumExp::merge).value()
}

fn max_ratio_error(
    fine: &FiniteTree,
    coarse: &FiniteTree,
    params: &ModelParams,
    field: &PeriodTwoField,
    interiors: &[Vec<usize>],
) -> Result<f64> {
    let fine_eval = WeightEvaluator::new(fine, params, field)?;
    let coarse_eval = WeightEvaluator::new(coarse, params, field)?;
    let gaps: Vec<f64> = interiors
        .iter()
        .map(|sigma| log_marginal(&fine_eval, sigma, params.q()) - coarse_eval.log_weight_unchecked(sigma))
        .collect();
    let err = gaps[1..].iter().map(|g| (g - gaps[0]).exp_m1().abs()).fold(0.0, f64::max);
    Ok(if err.is_nan() { f64::INFINITY } else { err })
}

/// Checks `Σ_ω μ_n(σ ∨ ω) ∝ μ_{n-1}(σ)` on `tree` (depth `n >= 1`) for the
/// all-ones interior configuration and `config.pairs` random ones.
///
/// The ratio of the two sides must not depend on `σ`; the reported error is
/// the largest `|ratio(σ)/ratio(1) - 1|`. A single depth `n >= 2` only tests
/// the relation between the fields on generations `n-1` and `n`, so the
/// field with even and odd exchanged is checked as well. At `n = 1` only the
/// root recursion is exercised.
pub fn check_consistency(
    tree: &FiniteTree,
    params: &ModelParams,
    field: &PeriodTwoField,
    config: &OracleConfig,
) -> Result<ConsistencyReport> {
    if tree.depth() == 0 {
        return Err(Error::InvalidParams("consistency needs a tree of depth at least 1".into()));
    }
    if tree.k() != params.k() {
        return Err(Error::InvalidParams(format!("tree order {} differs from k = {}", tree.k(), params.k())));
    }
    let q = params.q();
    enumeration_size(q, tree.boundary().len(), config.max_enum)?;
    let coarse = FiniteTree::build(tree.k(), tree.depth() - 1)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = coarse.num_vertices();
    let interiors = std::iter::once(vec![1; n])
        .chain((0..config.pairs).map(|_| (0..n).map(|_| rng.gen_range(1..=q)).collect()))
        .collect::<Vec<Vec<usize>>>();

    let mut max_relative_error = max_ratio_error(tree, &coarse, params, field, &interiors)?;
    if tree.depth() >= 2 {
        let swapped = max_ratio_error(tree, &coarse, params, &field.swapped(), &interiors)?;
        max_relative_error = max_relative_error.max(swapped);
    }
    Ok(ConsistencyReport {
        max_relative_error,
        pairs_checked: config.pairs,
        passed: max_relative_error <= config.tol,
    })
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn finite_difference(f: impl Fn(f64) -> f64, x: f64, step: f64) -> Result<f64> {
    let (hi, lo) = (f(x + step), f(x - step));
    let d = (hi - lo) / (2.0 * step);
    if !d.is_finite() {
        let value = if hi.is_finite() { lo } else { hi };
        return Err(Error::NonFinite { x, value });
    }
    Ok(d)
}
