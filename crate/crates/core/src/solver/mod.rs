//! Seed selection: lazy greedy maximum coverage, the sandwich strategy over
//! the upper and lower coverage bounds, the sample-size plan and the full
//! Reverse Sandwich pipeline.

mod greedy;
mod opt_lower;
mod plan;
pub(crate) mod rs;
mod sandwich;

pub use greedy::{greedy_max_coverage, naive_greedy_max_coverage};
pub use opt_lower::{estimate_opt_lower, OptLower};
pub use plan::{ln_binomial, plan_sample_size, sample_bounds, SamplePlan};
pub use rs::{run_rs, select_rs, RsSelection};
pub use sandwich::{sandwich, BoundValues, SandwichResult};

use std::time::Duration;

use serde::Serialize;

use crate::cascades::{CascadeConfig, InfluenceEstimate};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// `1 - 1/e`, the greedy coverage guarantee.
pub const GREEDY_RATIO: f64 = 1.0 - 1.0 / std::f64::consts::E;

pub const DEFAULT_K_MULT: f64 = 100.0;
pub const DEFAULT_MAX_TUPLES: usize = 50_000_000;
const EPS0_CAP: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverParams {
    /// Seed budget.
    pub k: usize,
    /// Accuracy of the optimum lower-bound estimate.
    pub eps0: f64,
    /// Accuracy of the coverage estimates at the greedy solutions.
    pub eps1: f64,
    /// Accuracy of the estimate at the optimum.
    pub eps2: f64,
    /// Failure odds: guarantees hold with probability at least `1 - 1/N`.
    pub n_fail: f64,
    /// Multiplier tying `eps0` to `eps1`.
    pub k_mult: f64,
    pub seed: u64,
    /// Largest collection any phase may build.
    pub max_tuples: usize,
    /// Monte-Carlo trials for the final influence estimate; 0 skips it.
    pub eval_trials: usize,
}

impl SolverParams {
    /// `eps1 = eps2 = eps` and `eps0 = min(0.999, K * eps)` with `K = 100`.
    pub fn unified(k: usize, eps: f64, n_fail: f64) -> Self {
        Self::unified_with_mult(k, eps, n_fail, DEFAULT_K_MULT)
    }

    pub fn unified_with_mult(k: usize, eps: f64, n_fail: f64, k_mult: f64) -> Self {
        let mut eps0 = k_mult * eps;
        if eps0 >= EPS0_CAP {
            log::warn!("eps0 = {k_mult} * {eps} = {eps0} capped at {EPS0_CAP}");
            eps0 = EPS0_CAP;
        }
        Self::explicit(k, eps0, eps, eps, n_fail).with_k_mult(k_mult)
    }

    pub fn explicit(k: usize, eps0: f64, eps1: f64, eps2: f64, n_fail: f64) -> Self {
        SolverParams {
            k,
            eps0,
            eps1,
            eps2,
            n_fail,
            k_mult: DEFAULT_K_MULT,
            seed: 0,
            max_tuples: DEFAULT_MAX_TUPLES,
            eval_trials: 0,
        }
    }

    fn with_k_mult(mut self, k_mult: f64) -> Self {
        self.k_mult = k_mult;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eval_trials(mut self, trials: usize) -> Self {
        self.eval_trials = trials;
        self
    }

    pub fn with_max_tuples(mut self, cap: usize) -> Self {
        self.max_tuples = cap;
        self
    }

    pub fn validate(&self, cfg: &CascadeConfig) -> Result<()> {
        for (name, e) in [("eps0", self.eps0), ("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} = {e} is outside (0, 1)")));
            }
        }
        if self.n_fail <= 1.0 || !self.n_fail.is_finite() {
            return Err(Error::InvalidParameter(format!("N = {} must be a finite number above 1", self.n_fail)));
        }
        if self.k > cfg.candidates().len() {
            return Err(Error::InvalidParameter(format!(
                "k = {} exceeds the {} candidates",
                self.k,
                cfg.candidates().len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rs,
    NrGreedy,
    #[serde(rename = "maxinf")]
    MaxInf,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rs => "rs",
            Algorithm::NrGreedy => "nr_greedy",
            Algorithm::MaxInf => "maxinf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rs" => Some(Algorithm::Rs),
            "nr_greedy" => Some(Algorithm::NrGreedy),
            "maxinf" => Some(Algorithm::MaxInf),
            _ => None,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub opt_lower: f64,
    pub sampling: f64,
    pub selection: f64,
    pub evaluation: f64,
}

pub(crate) fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub seeds: Vec<NodeId>,
    /// Size of the main tuple collection.
    pub l: usize,
    pub f_lo: f64,
    /// `(1 - 1/e) * G(S_upper) / G_upper(S_upper)`; absent for NR-Greedy.
    pub gamma_lower: Option<f64>,
    pub bounds: Option<SandwichResult>,
    /// Objective value of the chosen seeds on the main collection.
    pub estimate: f64,
    pub influence: Option<InfluenceEstimate>,
    /// Tuples spent on the optimum lower bound.
    pub opt_lower_tuples: usize,
    pub edges_tested: u64,
    pub timings: PhaseTimings,
}
