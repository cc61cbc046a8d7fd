//! Differential evolution, strategy 6 (`best/1/bin`), with an extra uniform
//! reset mutation and the two strategy hook points.
//!
//! One generation is synchronous: all trials are built from the population
//! as it stood when the generation began, then each trial competes with its
//! target.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::problem::{CaseSpec, DesignVector, Evaluation};
use crate::strategies::{hook_r1, hook_r2, objective_for, Objective, StrategySpec};

/// Identifier of the pseudo-random generator every run is seeded with.
pub const RNG_ID: &str = "chacha8-rand0.8";
pub const BEST1_BIN: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub np: usize,
    pub itermax: usize,
    /// Differential weight.
    pub f: f64,
    /// Binomial crossover rate.
    pub cr: f64,
    /// Per-gene probability of an extra uniform reset after crossover.
    pub mp: f64,
    #[serde(rename = "strategy")]
    pub strategy_id: u32,
    #[serde(default, skip_serializing)]
    pub seed: u64,
    /// Stop once the best penalized value is at or below this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_error: Option<f64>,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            np: 50,
            itermax: 100,
            f: 0.3,
            cr: 1.0,
            mp: 0.1,
            strategy_id: BEST1_BIN,
            seed: 0,
            stop_error: None,
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.np < 4 {
            return Err(ConfigError::PopulationTooSmall(self.np));
        }
        if self.itermax < 1 {
            return Err(ConfigError::NoGenerations);
        }
        if !(self.f >= 0.0 && self.f.is_finite()) {
            return Err(ConfigError::BadWeight(self.f));
        }
        for (name, value) in [("cr", self.cr), ("mp", self.mp)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::RateOutOfRange { name, value });
            }
        }
        if self.strategy_id != BEST1_BIN {
            return Err(ConfigError::UnsupportedStrategy(self.strategy_id));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<DesignVector>,
    pub evals: Vec<Evaluation>,
    pub best_index: usize,
}

impl Population {
    fn from_members(members: Vec<DesignVector>, evals: Vec<Evaluation>) -> Self {
        let mut pop = Self {
            members,
            evals,
            best_index: 0,
        };
        pop.update_best();
        pop
    }

    fn update_best(&mut self) {
        self.best_index = self
            .evals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.penalized.total_cmp(&b.1.penalized))
            .map(|(i, _)| i)
            .unwrap_or(0);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Objective values of the members.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.evals.iter().map(|e| e.penalized)
    }

    pub fn best(&self) -> (&DesignVector, &Evaluation) {
        (&self.members[self.best_index], &self.evals[self.best_index])
    }
}

fn eval(objective: &Objective, v: &[f64], spec: &CaseSpec) -> Evaluation {
    objective
        .evaluate(v, spec)
        .expect("hooks keep the case's gene layout")
}

/// Initial population through the `R1` hook.
pub fn initialize<R: Rng + ?Sized>(
    spec: &CaseSpec,
    strategy: &StrategySpec,
    cfg: &DEConfig,
    rng: &mut R,
) -> Population {
    let objective = objective_for(strategy);
    let members: Vec<DesignVector> = (0..cfg.np).map(|_| hook_r1(strategy, spec, rng)).collect();
    let evals = members.iter().map(|m| eval(&objective, m, spec)).collect();
    Population::from_members(members, evals)
}

/// `best + f·(a − b)`.
pub fn mutate_best1(best: &[f64], a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    best.iter()
        .zip(a)
        .zip(b)
        .map(|((x, y), z)| x + f * (y - z))
        .collect()
}

/// Binomial crossover: gene `j` comes from the mutant when `U < cr` or when
/// `j` is the forced index, otherwise from the target.
pub fn binomial_crossover<R: Rng + ?Sized>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    let forced = rng.gen_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (t, m))| {
            if j == forced || rng.gen::<f64>() < cr {
                *m
            } else {
                *t
            }
        })
        .collect()
}

/// Extra mutation followed by bounds enforcement, both by uniform redraw.
pub fn reset_and_confine<R: Rng + ?Sized>(genes: &mut [f64], spec: &CaseSpec, mp: f64, rng: &mut R) {
    for (g, &[lo, hi]) in genes.iter_mut().zip(&spec.bounds) {
        if mp > 0.0 && rng.gen::<f64>() < mp {
            *g = rng.gen_range(lo..hi);
        }
        if !(lo <= *g && *g <= hi) {
            *g = rng.gen_range(lo..hi);
        }
    }
}

/// Builds the trial for `target_index` using `best/1/bin`.
pub fn make_trial<R: Rng + ?Sized>(
    pop: &Population,
    target_index: usize,
    cfg: &DEConfig,
    spec: &CaseSpec,
    rng: &mut R,
) -> DesignVector {
    let n = pop.len();
    debug_assert!(n >= 4);
    let a = pick_other(n, &[target_index], rng);
    let b = pick_other(n, &[target_index, a], rng);
    let mutant = mutate_best1(
        &pop.members[pop.best_index],
        &pop.members[a],
        &pop.members[b],
        cfg.f,
    );
    let mut trial = binomial_crossover(&pop.members[target_index], &mutant, cfg.cr, rng);
    reset_and_confine(&mut trial, spec, cfg.mp, rng);
    DesignVector(trial)
}

fn pick_other<R: Rng + ?Sized>(n: usize, exclude: &[usize], rng: &mut R) -> usize {
    loop {
        let i = rng.gen_range(0..n);
        if !exclude.contains(&i) {
            return i;
        }
    }
}

/// Per-generation counters for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub accepted: usize,
    pub hook_attempts: u64,
    pub infeasible_trials: usize,
}

/// One synchronous generation: trial, `R2` hook, evaluation, greedy selection.
pub fn step_generation<R: Rng + ?Sized>(
    pop: &mut Population,
    spec: &CaseSpec,
    strategy: &StrategySpec,
    cfg: &DEConfig,
    rng: &mut R,
) -> GenerationStats {
    let objective = objective_for(strategy);
    let mut stats = GenerationStats::default();
    let trials: Vec<(DesignVector, Evaluation)> = (0..pop.len())
        .map(|i| {
            let trial = make_trial(pop, i, cfg, spec, rng);
            let outcome = hook_r2(strategy, trial, spec, rng);
            stats.hook_attempts += u64::from(outcome.attempts);
            if !outcome.feasible {
                stats.infeasible_trials += 1;
            }
            let e = eval(&objective, &outcome.vector, spec);
            (outcome.vector, e)
        })
        .collect();
    for (i, (v, e)) in trials.into_iter().enumerate() {
        if e.penalized <= pop.evals[i].penalized {
            pop.members[i] = v;
            pop.evals[i] = e;
            stats.accepted += 1;
        }
    }
    pop.update_best();
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case: String,
    pub strategy: String,
    pub seed: u64,
    pub best_vector: DesignVector,
    /// Raw tracking error of the final best member.
    pub best_error: f64,
    pub best_penalized: f64,
    /// Best penalized value after each generation.
    pub history: Vec<f64>,
    /// Raw tracking error of that generation's best member.
    pub raw_history: Vec<f64>,
    /// Best penalized value of the initial population.
    pub initial_best: f64,
    pub stop_generation: usize,
    pub history_len: usize,
    pub wall_time: f64,
    pub rng_id: String,
}

impl RunRecord {
    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other
            && a.best_vector
                .iter()
                .zip(other.best_vector.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits())
            && a.history
                .iter()
                .zip(&other.history)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs DE to `itermax` or until the stop threshold is met.
pub fn run(spec: &CaseSpec, strategy: &StrategySpec, cfg: &DEConfig) -> Result<RunRecord, ConfigError> {
    run_observed(spec, strategy, cfg, |_, _| {})
}

/// Like [`run`], calling `observe(generation, population)` after
/// initialization (generation 0) and after every generation.
pub fn run_observed<F>(
    spec: &CaseSpec,
    strategy: &StrategySpec,
    cfg: &DEConfig,
    mut observe: F,
) -> Result<RunRecord, ConfigError>
where
    F: FnMut(usize, &Population),
{
    cfg.validate()?;
    if strategy.max_retries < 1 {
        return Err(ConfigError::NoRetries);
    }
    let started = Instant::now();
    let mut rng = seeded_rng(cfg.seed);
    let mut pop = initialize(spec, strategy, cfg, &mut rng);
    observe(0, &pop);
    let initial_best = pop.best().1.penalized;

    let mut history = Vec::with_capacity(cfg.itermax);
    let mut raw_history = Vec::with_capacity(cfg.itermax);
    let mut generation = 0;
    while generation < cfg.itermax {
        step_generation(&mut pop, spec, strategy, cfg, &mut rng);
        generation += 1;
        observe(generation, &pop);
        let (_, best) = pop.best();
        history.push(best.penalized);
        raw_history.push(best.raw);
        if cfg.stop_error.is_some_and(|t| best.penalized <= t) {
            break;
        }
    }

    let (best_vector, best) = pop.best();
    Ok(RunRecord {
        case: spec.name.clone(),
        strategy: strategy.kind.as_str().to_string(),
        seed: cfg.seed,
        best_vector: best_vector.clone(),
        best_error: best.raw,
        best_penalized: best.penalized,
        history_len: history.len(),
        history,
        raw_history,
        initial_best,
        stop_generation: generation,
        wall_time: started.elapsed().as_secs_f64(),
        rng_id: RNG_ID.to_string(),
    })
}

/// Relative decrease of the best value from the first entry to `generation`
/// (1-based), in percent. `None` when undefined.
pub fn convergence_percent(history: &[f64], generation: usize) -> Option<f64> {
    if generation == 0 || generation > history.len() {
        return None;
    }
    let first = history[0];
    if !(first > 0.0) {
        return None;
    }
    Some(100.0 * (first - history[generation - 1]) / first)
}
