//! BPALM and adaptive BPALM drivers, the penalty-continuation loop, and
//! per-iteration tracing.
//!
//! One iteration cycles through the blocks in order, replacing block `i` of
//! the running point by a block update taken at the current step size. The
//! fixed-step driver requires declared constants and steps
//! `gamma_i < 1/L_i`; the adaptive drivers grow per-block estimates by a
//! factor `nu` until the local upper estimate
//!
//! ```text
//! f(x') <= f(x) + <grad_i f(x), x'_i - x_i> + Lbar_i * D(x', x)
//! ```
//!
//! accepts the trial. The warm variant carries accepted estimates into the
//! next cycle; the restart variant backtracks from the initial estimates
//! every time.
//!
//! Runs stop once the summed block Bregman gaps of a cycle fall below
//! `epsilon`, or when the iteration or wall-clock budget is exhausted.

use std::io::{self, Write};
use std::time::Instant;

use crate::block::BlockPoint;
use crate::error::{Error, Result};
use crate::kernel::block_bregman_distance;
use crate::problem::CompositeProblem;
use crate::vecops::{abs, fmax, fmin, lit, powi, sqrt};
use crate::Real;

/// Absolute slack for objective monotonicity and sufficient decrease.
pub const PHI_SLACK: f64 = 1e-9;

/// Block Bregman gaps may undershoot zero by at most this much.
pub const GAP_SLACK: f64 = 1e-12;

/// Hard cap on backtracking trials per block before the line search is
/// declared divergent.
pub const DEFAULT_LINESEARCH_CAP: usize = 64;

/// Step-size regime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Fixed steps `gamma_i` in `(0, 1/L_i)`.
    Fixed,
    /// Backtracking that scales from the previously accepted estimate.
    AdaptiveWarm,
    /// Backtracking that restarts from the initial estimates every cycle.
    AdaptiveRestart,
}

/// Run parameters for the drivers.
#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    /// `gamma_i` (fixed mode) or `gamma_i^0` (adaptive modes).
    pub steps: Vec<T>,
    pub mode: StepMode,
    /// Backtracking growth factor, `> 1`. Unused in fixed mode.
    pub nu: T,
    /// `Lbar_i^0`, the initial estimates for the adaptive modes.
    pub initial_estimates: Vec<T>,
    /// Stopping tolerance on the summed block Bregman gaps of one cycle.
    pub epsilon: T,
    pub max_iterations: usize,
    pub max_seconds: Option<f64>,
    pub linesearch_cap: usize,
}

impl<T: Real> SolverConfig<T> {
    fn default_epsilon(num_blocks: usize) -> T {
        lit::<T>(1e-9) * lit::<T>(num_blocks as f64)
    }

    /// Fixed mode with explicit steps.
    pub fn fixed(steps: Vec<T>) -> Self {
        let n = steps.len();
        Self {
            steps,
            mode: StepMode::Fixed,
            nu: lit(2.0),
            initial_estimates: Vec::new(),
            epsilon: Self::default_epsilon(n),
            max_iterations: 10_000,
            max_seconds: None,
            linesearch_cap: DEFAULT_LINESEARCH_CAP,
        }
    }

    /// Fixed mode with `gamma_i` one relative epsilon below `1/L_i`.
    pub fn fixed_from_constants(constants: &[T]) -> Result<Self> {
        let steps = constants
            .iter()
            .map(|&l| {
                if !(l > T::zero()) || !l.is_finite() {
                    return Err(Error::Config(
                        "fixed steps require positive finite constants".into(),
                    ));
                }
                Ok((T::one() - T::epsilon()) / l)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::fixed(steps))
    }

    /// Adaptive mode with `gamma_i^0` one relative epsilon below
    /// `1/Lbar_i^0`.
    pub fn adaptive(mode: StepMode, initial_estimates: Vec<T>) -> Result<Self> {
        if mode == StepMode::Fixed {
            return Err(Error::Config(
                "adaptive config requires an adaptive mode".into(),
            ));
        }
        if initial_estimates
            .iter()
            .any(|l| !(*l > T::zero()) || !l.is_finite())
        {
            return Err(Error::Config(
                "initial estimates must be positive and finite".into(),
            ));
        }
        let steps = initial_estimates
            .iter()
            .map(|&l| (T::one() - T::epsilon()) / l)
            .collect::<Vec<_>>();
        let n = steps.len();
        Ok(Self {
            steps,
            mode,
            nu: lit(2.0),
            initial_estimates,
            epsilon: Self::default_epsilon(n),
            max_iterations: 10_000,
            max_seconds: None,
            linesearch_cap: DEFAULT_LINESEARCH_CAP,
        })
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_max_seconds(mut self, max_seconds: Option<f64>) -> Self {
        self.max_seconds = max_seconds;
        self
    }

    pub fn with_nu(mut self, nu: T) -> Self {
        self.nu = nu;
        self
    }

    fn validate_common(&self, num_blocks: usize) -> Result<()> {
        if self.steps.len() != num_blocks {
            return Err(Error::Config(format!(
                "expected {num_blocks} step sizes, got {}",
                self.steps.len()
            )));
        }
        if self
            .steps
            .iter()
            .any(|s| !(*s > T::zero()) || !s.is_finite())
        {
            return Err(Error::Config(
                "step sizes must be positive and finite".into(),
            ));
        }
        if !(self.epsilon > T::zero()) {
            return Err(Error::Config("stopping tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One completed cycle: objective value, per-block Bregman gaps, the step
/// sizes and estimates in force, and cumulative accounting.
#[derive(Debug, Clone)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub phi: T,
    /// `D(x^{k,i}, x^{k,i-1})` per block.
    pub block_gaps: Vec<T>,
    pub gap_sum: T,
    pub step_sizes: Vec<T>,
    /// Current estimates (the declared constants in fixed mode).
    pub estimates: Vec<T>,
    /// Line-search trials per block this cycle; all ones in fixed mode.
    pub linesearch_trials: Vec<usize>,
    /// Cumulative oracle calls: two per trial per block.
    pub oracle_calls: u64,
    /// Seconds since the run started.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIterations,
    TimeBudget,
}

/// Marks where a continuation stage begins inside a concatenated trace,
/// together with the point the stage ended on.
#[derive(Debug, Clone)]
pub struct StageMark<T> {
    pub stage: usize,
    pub lambda: T,
    pub first_record: usize,
    pub final_point: BlockPoint<T>,
}

#[derive(Debug)]
pub struct SolveResult<T> {
    pub final_point: BlockPoint<T>,
    /// `phi(x^0)`, for decrease accounting over the trace.
    pub initial_phi: T,
    pub trace: Vec<IterationRecord<T>>,
    pub termination: Termination,
    /// Norm of the subgradient element assembled from the final cycle.
    pub subgradient_residual_norm: Option<T>,
    /// Continuation stage boundaries; empty for plain runs.
    pub stages: Vec<StageMark<T>>,
}

impl<T: Real> SolveResult<T> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_phi(&self) -> T {
        self.trace.last().map(|r| r.phi).unwrap_or(self.initial_phi)
    }

    pub fn oracle_calls(&self) -> u64 {
        self.trace.last().map(|r| r.oracle_calls).unwrap_or(0)
    }
}

fn check_start<T: Real>(p: &CompositeProblem<T>, x0: &BlockPoint<T>) -> Result<T> {
    if x0.structure() != p.structure() {
        return Err(Error::Config(
            "initial point does not match the problem structure".into(),
        ));
    }
    let phi0 = p.phi_value(x0)?;
    if !phi0.is_finite() {
        return Err(Error::Domain("initial point lies outside dom phi".into()));
    }
    Ok(phi0)
}

/// Fixed-step BPALM. Requires declared constants and `gamma_i` strictly
/// inside `(0, 1/L_i)`.
pub fn bpalm_run<T: Real>(
    p: &CompositeProblem<T>,
    x0: &BlockPoint<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    if cfg.mode != StepMode::Fixed {
        return Err(Error::Config("bpalm_run requires fixed mode".into()));
    }
    let n = p.num_blocks();
    cfg.validate_common(n)?;
    let constants = p.constants().ok_or_else(|| {
        Error::Config("fixed-step BPALM needs declared smoothness constants".into())
    })?;
    for (i, (&gamma, &l)) in cfg.steps.iter().zip(&constants).enumerate() {
        if l > T::zero() && gamma * l >= T::one() {
            return Err(Error::Config(format!(
                "step for block {i} must lie strictly below 1/L_{i}"
            )));
        }
    }
    // rho = min_i (1 - gamma_i L_i) / gamma_i
    let rho = cfg
        .steps
        .iter()
        .zip(&constants)
        .map(|(&g, &l)| (T::one() - g * l) / g)
        .fold(T::infinity(), fmin);

    let phi0 = check_start(p, x0)?;
    let start = Instant::now();
    let mut x = x0.clone();
    let mut prev_phi = phi0;
    let mut oracle_calls = 0u64;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut cycle_pre: Vec<BlockPoint<T>> = Vec::new();
    let slack = lit::<T>(PHI_SLACK);

    for k in 1..=cfg.max_iterations {
        cycle_pre.clear();
        let mut gaps = Vec::with_capacity(n);
        for i in 0..n {
            cycle_pre.push(x.clone());
            let z = p.block_update_raw(&x, i, cfg.steps[i])?;
            let d = block_bregman_distance(p.kernel(), &x, i, &z)?;
            if d < -lit::<T>(GAP_SLACK) {
                return Err(Error::Inconsistency(format!(
                    "negative Bregman gap {d:?} on block {i} at iteration {k}"
                )));
            }
            gaps.push(d);
            x.set_block(i, z);
            oracle_calls += 2;
        }
        let phi = p.phi_value(&x)?;
        if !phi.is_finite() {
            return Err(Error::Domain(format!(
                "iterate left dom phi at iteration {k}"
            )));
        }
        if phi > prev_phi + slack {
            return Err(Error::Inconsistency(format!(
                "objective increased at iteration {k}: {prev_phi:?} -> {phi:?}"
            )));
        }
        let gap_sum = gaps.iter().fold(T::zero(), |a, &b| a + b);
        if rho * gap_sum > prev_phi - phi + slack {
            return Err(Error::Inconsistency(format!(
                "sufficient decrease failed at iteration {k}; a smoothness constant is likely too small"
            )));
        }
        trace.push(IterationRecord {
            k,
            phi,
            block_gaps: gaps,
            gap_sum,
            step_sizes: cfg.steps.clone(),
            estimates: constants.clone(),
            linesearch_trials: vec![1; n],
            oracle_calls,
            wall_time: start.elapsed().as_secs_f64(),
        });
        prev_phi = phi;
        if gap_sum <= cfg.epsilon {
            termination = Termination::Tolerance;
            break;
        }
        if let Some(budget) = cfg.max_seconds {
            if start.elapsed().as_secs_f64() >= budget {
                termination = Termination::TimeBudget;
                break;
            }
        }
    }
    let residual = subgradient_residual(p, &cycle_pre, &x, &cfg.steps).ok();
    Ok(SolveResult {
        final_point: x,
        initial_phi: phi0,
        trace,
        termination,
        subgradient_residual_norm: residual,
        stages: Vec::new(),
    })
}

/// Adaptive BPALM: backtracks per block until the local upper estimate
/// accepts the trial, then moves on. Two per-trial oracle calls are charged.
pub fn abpalm_run<T: Real>(
    p: &CompositeProblem<T>,
    x0: &BlockPoint<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    if cfg.mode == StepMode::Fixed {
        return Err(Error::Config("abpalm_run requires an adaptive mode".into()));
    }
    let n = p.num_blocks();
    cfg.validate_common(n)?;
    if cfg.initial_estimates.len() != n {
        return Err(Error::Config(format!(
            "expected {n} initial estimates, got {}",
            cfg.initial_estimates.len()
        )));
    }
    if cfg
        .initial_estimates
        .iter()
        .any(|l| !(*l > T::zero()) || !l.is_finite())
    {
        return Err(Error::Config(
            "initial estimates must be positive and finite".into(),
        ));
    }
    if !(cfg.nu > T::one()) {
        return Err(Error::Config("backtracking factor nu must exceed 1".into()));
    }
    if cfg.linesearch_cap == 0 {
        return Err(Error::Config("linesearch cap must be at least 1".into()));
    }
    for (i, (&gamma, &l)) in cfg.steps.iter().zip(&cfg.initial_estimates).enumerate() {
        if gamma * l >= T::one() {
            return Err(Error::Config(format!(
                "initial step for block {i} must lie strictly below 1/Lbar_{i}^0"
            )));
        }
    }
    // rho_bar = min_i (1 - gamma_i^0 Lbar_i^0) / gamma_i^0
    let rho_bar = cfg
        .steps
        .iter()
        .zip(&cfg.initial_estimates)
        .map(|(&g, &l)| (T::one() - g * l) / g)
        .fold(T::infinity(), fmin);

    let phi0 = check_start(p, x0)?;
    let start = Instant::now();
    let mut x = x0.clone();
    let mut f_curr = p.smooth().value(&x);
    if !f_curr.is_finite() {
        return Err(Error::Domain(
            "smooth term not finite at the initial point".into(),
        ));
    }
    let mut estimates = cfg.initial_estimates.clone();
    let mut steps = cfg.steps.clone();
    let mut prev_phi = phi0;
    let mut oracle_calls = 0u64;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut cycle_pre: Vec<BlockPoint<T>> = Vec::new();
    let slack = lit::<T>(PHI_SLACK);

    for k in 1..=cfg.max_iterations {
        cycle_pre.clear();
        let mut gaps = Vec::with_capacity(n);
        let mut trials_per_block = Vec::with_capacity(n);
        for i in 0..n {
            cycle_pre.push(x.clone());
            let grad = p.smooth().block_gradient(&x, i);
            let (base_estimate, base_step) = match cfg.mode {
                StepMode::AdaptiveWarm => (estimates[i], steps[i]),
                StepMode::AdaptiveRestart => (cfg.initial_estimates[i], cfg.steps[i]),
                StepMode::Fixed => unreachable!(),
            };
            let accept_slack = lit::<T>(1e-12) * (T::one() + abs(f_curr));
            let mut accepted = false;
            for trial in 0..cfg.linesearch_cap {
                let factor = powi(cfg.nu, trial as i32);
                let l_trial = factor * base_estimate;
                let g_trial = base_step / factor;
                let z = p.block_update_from_gradient(&x, i, &grad, g_trial)?;
                let shifted = x.with_block(i, z.clone());
                let f_new = p.smooth().value(&shifted);
                oracle_calls += 2;
                let d = block_bregman_distance(p.kernel(), &x, i, &z)?;
                if d < -lit::<T>(GAP_SLACK) {
                    return Err(Error::Inconsistency(format!(
                        "negative Bregman gap {d:?} on block {i} at iteration {k}"
                    )));
                }
                let inner = grad
                    .iter()
                    .zip(z.iter().zip(x.block(i)))
                    .fold(T::zero(), |acc, (&g, (&zj, &xj))| acc + g * (zj - xj));
                if f_new.is_finite() && f_new <= f_curr + inner + l_trial * d + accept_slack {
                    estimates[i] = l_trial;
                    steps[i] = g_trial;
                    x = shifted;
                    f_curr = f_new;
                    gaps.push(fmax(d, T::zero()));
                    trials_per_block.push(trial + 1);
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                return Err(Error::LinesearchDiverged {
                    block: i,
                    trials: cfg.linesearch_cap,
                });
            }
        }
        let phi = f_curr + p.nonsmooth_sum(&x)?;
        if !phi.is_finite() {
            return Err(Error::Domain(format!(
                "iterate left dom phi at iteration {k}"
            )));
        }
        if phi > prev_phi + slack {
            return Err(Error::Inconsistency(format!(
                "objective increased at iteration {k}: {prev_phi:?} -> {phi:?}"
            )));
        }
        let gap_sum = gaps.iter().fold(T::zero(), |a, &b| a + b);
        if rho_bar * gap_sum > prev_phi - phi + slack {
            return Err(Error::Inconsistency(format!(
                "sufficient decrease failed at iteration {k} despite accepted line searches"
            )));
        }
        trace.push(IterationRecord {
            k,
            phi,
            block_gaps: gaps,
            gap_sum,
            step_sizes: steps.clone(),
            estimates: estimates.clone(),
            linesearch_trials: trials_per_block,
            oracle_calls,
            wall_time: start.elapsed().as_secs_f64(),
        });
        prev_phi = phi;
        if gap_sum <= cfg.epsilon {
            termination = Termination::Tolerance;
            break;
        }
        if let Some(budget) = cfg.max_seconds {
            if start.elapsed().as_secs_f64() >= budget {
                termination = Termination::TimeBudget;
                break;
            }
        }
    }
    let residual = subgradient_residual(p, &cycle_pre, &x, &steps).ok();
    Ok(SolveResult {
        final_point: x,
        initial_phi: phi0,
        trace,
        termination,
        subgradient_residual_norm: residual,
        stages: Vec::new(),
    })
}

/// Dispatches on the configured mode.
pub fn solve<T: Real>(
    p: &CompositeProblem<T>,
    x0: &BlockPoint<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    match cfg.mode {
        StepMode::Fixed => bpalm_run(p, x0, cfg),
        StepMode::AdaptiveWarm | StepMode::AdaptiveRestart => abpalm_run(p, x0, cfg),
    }
}

/// Norm of the subgradient element assembled from one completed cycle:
/// `G_i = (grad_i h(x^{k,i-1}) - grad_i h(x^{k,i})) / gamma_i
///        + grad_i f(x^{k,i}) - grad_i f(x^{k,i-1})`.
///
/// `cycle_pre[i]` is the point before block `i` was updated; `x_new` is the
/// point after the full cycle. Diagnostic only.
pub fn subgradient_residual<T: Real>(
    p: &CompositeProblem<T>,
    cycle_pre: &[BlockPoint<T>],
    x_new: &BlockPoint<T>,
    steps: &[T],
) -> Result<T> {
    let n = p.num_blocks();
    if cycle_pre.len() != n || steps.len() != n {
        return Err(Error::Config(
            "subgradient residual needs one pre-update point and step per block".into(),
        ));
    }
    let mut acc = T::zero();
    for i in 0..n {
        let before = &cycle_pre[i];
        let after = if i + 1 < n { &cycle_pre[i + 1] } else { x_new };
        let gh_before = p.kernel().block_gradient(before, i);
        let gh_after = p.kernel().block_gradient(after, i);
        let gf_after = p.smooth().block_gradient(after, i);
        let gf_before = p.smooth().block_gradient(before, i);
        for j in 0..gh_before.len() {
            let g = (gh_before[j] - gh_after[j]) / steps[i] + gf_after[j] - gf_before[j];
            acc += g * g;
        }
    }
    Ok(sqrt(acc))
}

/// Budget for one continuation stage or for the whole procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageBudget {
    Iterations(usize),
    Seconds(f64),
}

fn with_stage(e: Error, stage: usize) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("stage {stage}: {m}")),
        Error::Capability(m) => Error::Capability(format!("stage {stage}: {m}")),
        Error::Domain(m) => Error::Domain(format!("stage {stage}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("stage {stage}: {m}")),
        Error::Inconsistency(m) => Error::Inconsistency(format!("stage {stage}: {m}")),
        other => other,
    }
}

/// Penalty continuation: repeatedly solves the problem built for the current
/// penalty, warm-starting from the previous stage's final point, then scales
/// the penalty by `factor`. The combined trace keeps per-stage iteration
/// numbering, with stage boundaries recorded in `stages`.
///
/// The smoothness constants usually depend on the penalty, so `cfg` is
/// treated as the first stage's configuration: when the stage problems
/// declare constants, step sizes and initial estimates are rescaled per
/// stage by the constants' drift (`gamma_i` shrinks as `L_i` grows,
/// `Lbar_i^0` grows with it), keeping `gamma_i * L_i` and
/// `Lbar_i^0 / L_i` at their configured values.
pub fn continuation_run<T: Real, B>(
    build: B,
    x0: &BlockPoint<T>,
    cfg: &SolverConfig<T>,
    lambda0: T,
    factor: T,
    stage_budget: StageBudget,
    total_budget: StageBudget,
) -> Result<SolveResult<T>>
where
    B: Fn(T) -> Result<CompositeProblem<T>>,
{
    if !(lambda0 > T::zero()) || !lambda0.is_finite() {
        return Err(Error::Config(
            "continuation needs a positive initial penalty".into(),
        ));
    }
    if !(factor > T::one()) || !factor.is_finite() {
        return Err(Error::Config("continuation factor must exceed 1".into()));
    }
    match (stage_budget, total_budget) {
        (StageBudget::Iterations(s), StageBudget::Iterations(t)) => {
            if s == 0 || t == 0 {
                return Err(Error::Config("iteration budgets must be positive".into()));
            }
        }
        (StageBudget::Seconds(s), StageBudget::Seconds(t)) => {
            if !(s > 0.0) || !(t > 0.0) {
                return Err(Error::Config("time budgets must be positive".into()));
            }
        }
        _ => {
            return Err(Error::Config(
                "stage and total budgets must use the same unit".into(),
            ))
        }
    }

    let start = Instant::now();
    let mut lambda = lambda0;
    let mut x = x0.clone();
    let mut trace = Vec::new();
    let mut stages = Vec::new();
    let mut consumed_iterations = 0usize;
    let mut initial_phi = None;
    let mut termination = Termination::MaxIterations;
    let mut residual = None;
    let mut oracle_offset = 0u64;
    let mut first_constants: Option<Vec<T>> = None;

    for stage in 1.. {
        let mut stage_cfg = cfg.clone();
        match (stage_budget, total_budget) {
            (StageBudget::Iterations(s), StageBudget::Iterations(t)) => {
                let remaining = t.saturating_sub(consumed_iterations);
                if remaining == 0 {
                    break;
                }
                stage_cfg.max_iterations = s.min(remaining);
            }
            (StageBudget::Seconds(s), StageBudget::Seconds(t)) => {
                let remaining = t - start.elapsed().as_secs_f64();
                if remaining <= 0.0 {
                    break;
                }
                let global_left = cfg.max_iterations.saturating_sub(consumed_iterations);
                if global_left == 0 {
                    break;
                }
                stage_cfg.max_seconds = Some(s.min(remaining));
                stage_cfg.max_iterations = global_left;
            }
            _ => unreachable!(),
        }
        let problem = build(lambda).map_err(|e| with_stage(e, stage))?;
        if let Some(current) = problem.constants() {
            match &first_constants {
                None => first_constants = Some(current),
                Some(first) => {
                    for i in 0..stage_cfg.steps.len().min(current.len()) {
                        if first[i] > T::zero() && current[i] > T::zero() {
                            let drift = current[i] / first[i];
                            stage_cfg.steps[i] = cfg.steps[i] / drift;
                            if i < stage_cfg.initial_estimates.len() {
                                stage_cfg.initial_estimates[i] = cfg.initial_estimates[i] * drift;
                            }
                        }
                    }
                }
            }
        }
        let res = solve(&problem, &x, &stage_cfg).map_err(|e| with_stage(e, stage))?;
        if initial_phi.is_none() {
            initial_phi = Some(res.initial_phi);
        }
        let first_record = trace.len();
        consumed_iterations += res.trace.len();
        for mut rec in res.trace {
            rec.oracle_calls += oracle_offset;
            trace.push(rec);
        }
        oracle_offset = trace
            .last()
            .map(|r| r.oracle_calls)
            .unwrap_or(oracle_offset);
        x = res.final_point;
        stages.push(StageMark {
            stage,
            lambda,
            first_record,
            final_point: x.clone(),
        });
        termination = res.termination;
        residual = res.subgradient_residual_norm;
        lambda *= factor;
    }

    let initial_phi = initial_phi
        .ok_or_else(|| Error::Config("continuation budgets admitted no stage at all".into()))?;
    Ok(SolveResult {
        final_point: x,
        initial_phi,
        trace,
        termination,
        subgradient_residual_norm: residual,
        stages,
    })
}

fn fmt_float<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64().unwrap_or(f64::NAN))
}

/// Writes the trace as CSV with header
/// `k,phi,gap_sum,gap_1..gap_N,step_1..step_N,est_1..est_N,oracle_calls,wall_time_s`,
/// one row per iteration, floats at 17 significant digits. Continuation
/// stage boundaries appear as `# stage=<s> lambda=<v>` comment lines.
pub fn write_trace_csv<T: Real, W: Write>(result: &SolveResult<T>, out: &mut W) -> io::Result<()> {
    let n = result.final_point.num_blocks();
    let mut header = String::from("k,phi,gap_sum");
    for tag in ["gap", "step", "est"] {
        for i in 1..=n {
            header.push_str(&format!(",{tag}_{i}"));
        }
    }
    header.push_str(",oracle_calls,wall_time_s");
    writeln!(out, "{header}")?;

    let mut marks = result.stages.iter().peekable();
    for (idx, rec) in result.trace.iter().enumerate() {
        while let Some(m) = marks.peek() {
            if m.first_record == idx {
                writeln!(out, "# stage={} lambda={}", m.stage, fmt_float(m.lambda))?;
                marks.next();
            } else {
                break;
            }
        }
        let mut row = format!(
            "{},{},{}",
            rec.k,
            fmt_float(rec.phi),
            fmt_float(rec.gap_sum)
        );
        for v in rec
            .block_gaps
            .iter()
            .chain(&rec.step_sizes)
            .chain(&rec.estimates)
        {
            row.push_str(&format!(",{}", fmt_float(*v)));
        }
        row.push_str(&format!(",{},{:.16e}", rec.oracle_calls, rec.wall_time));
        writeln!(out, "{row}")?;
    }
    Ok(())
}
