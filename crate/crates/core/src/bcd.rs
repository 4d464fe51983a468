//! Block coordinate descent on the β-form dual.
//!
//! Each inner iteration picks one instance `i`, forms
//!
//! ```text
//! v = (1 − π T_{yᵢ} W'xᵢ) / ‖xᵢ‖² + (I + O) βᵢ
//! ```
//!
//! replaces `βᵢ` by the exact subproblem minimizer for `(v, C)`, and patches
//! `W += xᵢ (T_{yᵢ} π'Δβᵢ)'` on the rows where `xᵢ` is nonzero. An outer
//! iteration visits every instance once. After each outer iteration the
//! timer is paused while the primal objective, the dual objective `−g(β)`
//! and their gap are measured; training stops at the first outer iteration
//! whose gap is at most `delta` times the gap after the first one.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{SparseDataset, SparseInstance};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::reparam::{
    apply_pi_transpose_into, dual_objective_with_weights, primal_objective, weights_from_beta, DualState,
    WeightMatrix,
};
use crate::subproblem::SubproblemSolver;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    /// Stop once `gap ≤ delta · gap₁`. Must lie in `(0, 1]`.
    pub delta: f64,
    pub max_outer: usize,
    /// Visit instances in a fresh seeded random order every outer iteration.
    pub shuffle: bool,
    pub seed: u64,
    /// Outer iterations between report rows. The first and last rows are
    /// always kept.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            delta: 1e-3,
            max_outer: 1000,
            shuffle: false,
            seed: 0,
            log_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objectives measured after one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub outer_iter: usize,
    /// Training time so far, excluding objective measurements.
    pub elapsed_s: f64,
    pub primal: f64,
    /// `−g(β)`.
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HaltReason {
    GapThreshold,
    MaxOuter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub rows: Vec<LogRow>,
    pub halted_reason: HaltReason,
    pub outer_iterations: usize,
    /// Gap after the first outer iteration.
    pub initial_gap: f64,
    /// Subproblem solves that fell back to the least-violating candidate.
    pub degenerate_solves: usize,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: Model,
    pub dual: DualState,
    pub report: TrainReport,
}

/// Result of one inner iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerStep {
    /// `‖β̃ᵢ − βᵢ‖²`.
    pub step_sq: f64,
    pub degenerate: bool,
}

/// Writes the subproblem vector `v` for block `beta_i` into `out`.
///
/// `scores` is scratch space of length `k`.
pub fn compute_v_into(
    w: &WeightMatrix,
    x: &SparseInstance,
    y: usize,
    beta_i: &[f64],
    scores: &mut [f64],
    out: &mut [f64],
) {
    w.scores_into(x, scores);
    scores.swap(0, y);
    let inv_norm = 1.0 / x.norm_sq();
    let beta_sum: f64 = beta_i.iter().sum();
    let head = scores[0];
    for ((o, &s), &b) in out.iter_mut().zip(&scores[1..]).zip(beta_i) {
        *o = (1.0 - (head - s)) * inv_norm + b + beta_sum;
    }
}

/// `v = (1 − π T_y W'x)/‖x‖² + (I + O)βᵢ`.
pub fn compute_v(w: &WeightMatrix, x: &SparseInstance, y: usize, beta_i: &[f64]) -> Result<Vec<f64>> {
    if !(x.norm_sq() > 0.0) {
        return Err(Error::ZeroNormInstance(0));
    }
    let mut scores = vec![0.0; w.k()];
    let mut out = vec![0.0; beta_i.len()];
    compute_v_into(w, x, y, beta_i, &mut scores, &mut out);
    Ok(out)
}

/// Scratch buffers for inner iterations.
#[derive(Clone, Debug, Default)]
struct Workspace {
    solver: SubproblemSolver,
    scores: Vec<f64>,
    v: Vec<f64>,
    block: Vec<f64>,
    lifted: Vec<f64>,
}

impl Workspace {
    fn new(k: usize) -> Self {
        Workspace {
            solver: SubproblemSolver::new(),
            scores: vec![0.0; k],
            v: vec![0.0; k - 1],
            block: vec![0.0; k - 1],
            lifted: vec![0.0; k],
        }
    }

    fn step_into(&mut self, w: &mut WeightMatrix, beta: &mut DualState, dataset: &SparseDataset, i: usize) -> InnerStep {
        let x = dataset.instance(i);
        let y = dataset.label(i);
        let c = beta.c();
        compute_v_into(w, x, y, beta.block(i), &mut self.scores, &mut self.v);
        let summary = self.solver.solve_into(&self.v, c, &mut self.block);

        // v is no longer needed: hold Δβ in it
        let old = beta.block_mut(i);
        let mut step_sq = 0.0;
        for ((delta, o), &n) in self.v.iter_mut().zip(old.iter_mut()).zip(&self.block) {
            *delta = n - *o;
            step_sq += *delta * *delta;
            *o = n;
        }
        if step_sq > 0.0 {
            apply_pi_transpose_into(&self.v, &mut self.lifted);
            self.lifted.swap(0, y);
            w.add_outer(x, &self.lifted);
        }
        InnerStep { step_sq, degenerate: summary.degenerate }
    }
}

/// Runs one inner iteration on block `i`, updating `w` and `beta` in place.
pub fn inner_iteration(
    w: &mut WeightMatrix,
    beta: &mut DualState,
    dataset: &SparseDataset,
    i: usize,
) -> Result<InnerStep> {
    if i >= dataset.len() {
        return Err(Error::InvalidInput(format!("instance {i} out of range")));
    }
    if !(dataset.instance(i).norm_sq() > 0.0) {
        return Err(Error::ZeroNormInstance(i));
    }
    let step = Workspace::new(dataset.k()).step_into(w, beta, dataset, i);
    Ok(step)
}

/// `primal(W) − (−g(β))`, with `g` evaluated through `W`.
pub fn duality_gap(w: &WeightMatrix, beta: &DualState, dataset: &SparseDataset, c: f64) -> f64 {
    primal_objective(w, dataset, c) + dual_objective_with_weights(w, beta)
}

/// Live training state: `β` and the matching `W`.
#[derive(Clone, Debug)]
pub struct Trainer<'a> {
    dataset: &'a SparseDataset,
    w: WeightMatrix,
    beta: DualState,
    ws: Workspace,
}

impl<'a> Trainer<'a> {
    /// Starts from `β = 0`, `W = 0`.
    pub fn new(dataset: &'a SparseDataset, c: f64) -> Result<Self> {
        dataset.validate_for_training()?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {c}")));
        }
        let k = dataset.k();
        Ok(Trainer {
            dataset,
            w: WeightMatrix::zeros(dataset.d(), k),
            beta: DualState::zeros(dataset.len(), k, c),
            ws: Workspace::new(k),
        })
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.w
    }

    pub fn dual_state(&self) -> &DualState {
        &self.beta
    }

    pub fn c(&self) -> f64 {
        self.beta.c()
    }

    pub fn inner_iteration(&mut self, i: usize) -> InnerStep {
        self.ws.step_into(&mut self.w, &mut self.beta, self.dataset, i)
    }

    /// Visits every instance once in the given order.
    pub fn outer_iteration(&mut self, order: &[usize]) -> usize {
        order.iter().filter(|&&i| self.inner_iteration(i).degenerate).count()
    }

    pub fn primal(&self) -> f64 {
        primal_objective(&self.w, self.dataset, self.c())
    }

    /// `g(β)`.
    pub fn g(&self) -> f64 {
        dual_objective_with_weights(&self.w, &self.beta)
    }

    /// The reported dual objective `−g(β)`.
    pub fn dual(&self) -> f64 {
        -self.g()
    }

    pub fn gap(&self) -> f64 {
        duality_gap(&self.w, &self.beta, self.dataset, self.c())
    }

    /// `W` rebuilt from `β`, for checking the incremental updates.
    pub fn rebuilt_weights(&self) -> WeightMatrix {
        weights_from_beta(&self.beta, self.dataset)
    }

    pub fn into_parts(self) -> (WeightMatrix, DualState) {
        (self.w, self.beta)
    }
}

/// Everything an observer sees after a logged outer iteration. The training
/// timer is paused while the observer runs.
pub struct Observation<'o> {
    pub row: &'o LogRow,
    pub weights: &'o WeightMatrix,
    pub dual_state: &'o DualState,
}

/// Trains from `β = 0` until the gap criterion or `max_outer` is met.
pub fn train(dataset: &SparseDataset, config: &TrainConfig) -> Result<TrainOutput> {
    train_with_observer(dataset, config, |_| {})
}

/// [`train`] with a callback invoked for every logged row.
pub fn train_with_observer<F>(dataset: &SparseDataset, config: &TrainConfig, mut observer: F) -> Result<TrainOutput>
where
    F: FnMut(&Observation<'_>),
{
    config.validate()?;
    dataset.validate_for_training()?;

    let mut clock = Duration::ZERO;
    let mut started = Instant::now();

    let mut trainer = Trainer::new(dataset, config.c)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    let mut initial_gap = f64::NAN;
    let mut degenerate_solves = 0;
    let mut halted_reason = HaltReason::MaxOuter;
    let mut outer = 0;

    while outer < config.max_outer {
        outer += 1;
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        degenerate_solves += trainer.outer_iteration(&order);

        clock += started.elapsed();
        let primal = trainer.primal();
        let dual = trainer.dual();
        let gap = primal - dual;
        if outer == 1 {
            initial_gap = gap;
        }
        let done = gap <= config.delta * initial_gap;
        let last = done || outer == config.max_outer;
        if outer == 1 || last || outer % config.log_every == 0 {
            let row = LogRow { outer_iter: outer, elapsed_s: clock.as_secs_f64(), primal, dual, gap };
            observer(&Observation { row: &row, weights: trainer.weights(), dual_state: trainer.dual_state() });
            rows.push(row);
        }
        if done {
            halted_reason = HaltReason::GapThreshold;
            break;
        }
        started = Instant::now();
    }

    if degenerate_solves > 0 {
        log::warn!("{degenerate_solves} subproblem solve(s) hit the rounding fallback");
    }
    let (w, beta) = trainer.into_parts();
    Ok(TrainOutput {
        model: Model::new(w, dataset.label_map().clone())?,
        dual: beta,
        report: TrainReport { rows, halted_reason, outer_iterations: outer, initial_gap, degenerate_solves },
    })
}
