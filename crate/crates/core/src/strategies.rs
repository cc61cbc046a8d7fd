//! Constraint-handling strategies.
//!
//! Each strategy plugs into two points of the DE loop: `R1`, where the
//! initial population is sampled, and `R2`, right after a trial vector has
//! been produced and before it is evaluated.
//!
//! * **NSI** leaves both hooks empty and relies on the static penalty.
//! * **ASI-IG** resamples infeasible chromosomes at `R1` only.
//! * **ASI-AG** also resamples infeasible trials at `R2`, at most
//!   `max_retries` times, falling back to the penalty.
//! * **LSI** draws bar lengths from a generator that only emits Grashof
//!   linkages.
//! * **SSI** repairs infeasible bar sets in place with rule G4.
//!
//! Every strategy is scored with the same penalized objective, so the
//! comparison scale is uniform; for the feasibility-enforcing strategies the
//! penalty terms simply never fire.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CaseError, RepairFailure};
use crate::feasibility::{grashof_satisfied, grashof_violation, sequence_satisfied};
use crate::kinematics::BarLengths;
use crate::problem::{evaluate, CaseSpec, DesignVector, Evaluation, PenaltyWeights, BAR_GENES};

/// Passes of G4 before a repair is declared failed.
pub const SSI_MAX_PASSES: usize = 3;
/// Extra length added to the second middle link by G4.
pub const SSI_MARGIN: f64 = 0.01;
pub const DEFAULT_MAX_RETRIES: u32 = 6;

/// Redraw budget for LSI when a custom case has positive lower bar bounds.
const LSI_MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "nsi")]
    Nsi,
    #[serde(rename = "asi-ig")]
    AsiIg,
    #[serde(rename = "asi-ag")]
    AsiAg,
    #[serde(rename = "lsi")]
    Lsi,
    #[serde(rename = "ssi")]
    Ssi,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Nsi,
        StrategyKind::AsiIg,
        StrategyKind::AsiAg,
        StrategyKind::Lsi,
        StrategyKind::Ssi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Nsi => "nsi",
            StrategyKind::AsiIg => "asi-ig",
            StrategyKind::AsiAg => "asi-ag",
            StrategyKind::Lsi => "lsi",
            StrategyKind::Ssi => "ssi",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy `{s}` (expected nsi, asi-ig, asi-ag, lsi or ssi)"))
    }
}

/// How G4 computes its correction `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairForm {
    /// `S` is the Grashof violation `s + l − p − q`.
    #[default]
    Violation,
    /// `S = r1 − r4 − r2 + r3` with `r1 ≥ r2 ≥ r3 ≥ r4`, as literally printed.
    LiteralS,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub weights: PenaltyWeights,
    /// Resample cap for ASI-AG at `R2`.
    pub max_retries: u32,
    pub repair_form: RepairForm,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            weights: PenaltyWeights::default(),
            max_retries: DEFAULT_MAX_RETRIES,
            repair_form: RepairForm::Violation,
        }
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    pub fn with_repair_form(mut self, form: RepairForm) -> Self {
        self.repair_form = form;
        self
    }

    /// Whether hooks guarantee that every evaluated chromosome is feasible.
    pub fn enforces_feasibility(&self) -> bool {
        matches!(self.kind, StrategyKind::Lsi | StrategyKind::Ssi)
    }
}

/// The objective a strategy optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub weights: PenaltyWeights,
}

impl Objective {
    pub fn evaluate(&self, v: &[f64], spec: &CaseSpec) -> Result<Evaluation, CaseError> {
        evaluate(v, spec, &self.weights)
    }
}

/// All strategies score chromosomes with the penalized tracking error.
pub fn objective_for(strategy: &StrategySpec) -> Objective {
    Objective {
        weights: strategy.weights,
    }
}

/// Result of an `R2` hook.
#[derive(Debug, Clone, PartialEq)]
pub struct HookOutcome {
    pub vector: DesignVector,
    pub feasible: bool,
    /// Resamples (ASI-AG) or substitutions/repairs (LSI, SSI) performed.
    pub attempts: u32,
}

/// Uniform draw inside the case's box.
pub fn uniform_vector<R: Rng + ?Sized>(spec: &CaseSpec, rng: &mut R) -> DesignVector {
    DesignVector(
        spec.bounds
            .iter()
            .map(|&[lo, hi]| rng.gen_range(lo..hi))
            .collect(),
    )
}

fn constraints_hold(v: &[f64], spec: &CaseSpec) -> (bool, bool) {
    let bars = crate::problem::bars_from_genes([v[0], v[1], v[2], v[3]]);
    let grashof = grashof_satisfied(&bars);
    let sequence = !spec.angle_mode.constrains_sequence() || sequence_satisfied(&v[spec.angle_gene_range()]);
    (grashof, sequence)
}

pub fn is_feasible(v: &[f64], spec: &CaseSpec) -> bool {
    let (g, s) = constraints_hold(v, spec);
    g && s
}

/// Grashof bar set with every value in `(0, 1)`.
///
/// `r_max = u1; r_b = u2·r_max; r_c = r_max + (u3 − 1)·r_b;
/// r_min = u4·(r_b + r_c − r_max)`, then shuffled. In exact arithmetic the
/// result always satisfies the strict Grashof inequality; the rare draw that
/// loses strictness to rounding is discarded.
pub fn lsi_generate_bars<R: Rng + ?Sized>(rng: &mut R) -> BarLengths {
    loop {
        let u: [f64; 4] = [
            rng.sample(Open01),
            rng.sample(Open01),
            rng.sample(Open01),
            rng.sample(Open01),
        ];
        let mut bars = lsi_bars_from_stream(u);
        bars.shuffle(rng);
        let bars = BarLengths::from_array(bars);
        if grashof_satisfied(&bars) {
            return bars;
        }
    }
}

/// The generator recurrence before shuffling: `[r_max, r_b, r_c, r_min]`.
pub fn lsi_bars_from_stream(u: [f64; 4]) -> [f64; 4] {
    let r_max = u[0];
    let r_b = u[1] * r_max;
    let r_c = r_max + (u[2] - 1.0) * r_b;
    let r_min = u[3] * (r_b + r_c - r_max);
    [r_max, r_b, r_c, r_min]
}

/// LSI bar genes scaled into the case's bar bounds.
fn lsi_bar_genes<R: Rng + ?Sized>(spec: &CaseSpec, rng: &mut R) -> [f64; 4] {
    let bounds = &spec.bounds[..BAR_GENES];
    let scale = bounds.iter().map(|b| b[1]).fold(f64::INFINITY, f64::min);
    let mut last = [0.0; 4];
    for _ in 0..LSI_MAX_DRAWS {
        let unit = lsi_generate_bars(rng).to_array();
        let g = unit.map(|x| x * scale);
        last = g;
        let in_box = g.iter().zip(bounds).all(|(x, [lo, hi])| lo <= x && x <= hi);
        if in_box && grashof_satisfied(&BarLengths::from_array(g)) {
            return g;
        }
    }
    last
}

/// Rule G4: grow the two middle links so that `s + l < p + q`.
///
/// The longer middle link gets `S/2` and the shorter one `S/2 + 0.01`.
/// Feasible input is returned unchanged. Links are identified by length, so
/// the input order is irrelevant and preserved in the output.
pub fn ssi_repair_g4(bars: &BarLengths) -> Result<BarLengths, RepairFailure> {
    repair_g4(bars, RepairForm::Violation)
}

pub fn repair_g4(bars: &BarLengths, form: RepairForm) -> Result<BarLengths, RepairFailure> {
    let mut a = bars.to_array();
    if a.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(RepairFailure { passes: 0 });
    }
    for _ in 0..SSI_MAX_PASSES {
        let current = BarLengths::from_array(a);
        if grashof_satisfied(&current) {
            return Ok(current);
        }
        // stable descending order: [longest, larger middle, smaller middle, shortest]
        let mut idx = [0usize, 1, 2, 3];
        idx.sort_by(|&i, &j| a[j].total_cmp(&a[i]));
        let s = match form {
            RepairForm::Violation => grashof_violation(&current),
            RepairForm::LiteralS => a[idx[0]] - a[idx[3]] - a[idx[1]] + a[idx[2]],
        };
        a[idx[1]] += s / 2.0;
        a[idx[2]] += s / 2.0 + SSI_MARGIN;
    }
    let out = BarLengths::from_array(a);
    if grashof_satisfied(&out) {
        Ok(out)
    } else {
        Err(RepairFailure {
            passes: SSI_MAX_PASSES,
        })
    }
}

/// SSI on the bar genes, rescaled into bounds; `None` if it cannot be done.
fn ssi_bar_genes(genes: [f64; 4], spec: &CaseSpec, form: RepairForm) -> Option<[f64; 4]> {
    let repaired = repair_g4(&BarLengths::from_array(genes), form).ok()?.to_array();
    let bounds = &spec.bounds[..BAR_GENES];
    let factor = repaired
        .iter()
        .zip(bounds)
        .map(|(x, [_, hi])| if *x > *hi { hi / x } else { 1.0 })
        .fold(1.0, f64::min);
    let out = if factor < 1.0 {
        repaired.map(|x| x * factor)
    } else {
        repaired
    };
    let in_box = out.iter().zip(bounds).all(|(x, [lo, hi])| lo <= x && x <= hi);
    (in_box && grashof_satisfied(&BarLengths::from_array(out))).then_some(out)
}

/// Sorts the free angle genes ascending so the targets are visited in order.
pub fn sort_angle_genes(v: &mut [f64], spec: &CaseSpec) {
    if !spec.angle_mode.constrains_sequence() {
        return;
    }
    let range = spec.angle_gene_range();
    let angles = &mut v[range];
    angles.sort_by(f64::total_cmp);
    if !sequence_satisfied(angles) {
        // only reachable when the genes hit both ends of a full-turn range;
        // fold the top values back by one turn when the result stays in bounds
        let n = angles.len();
        let last = angles[n - 1];
        if last - TAU >= spec.bounds[spec.angle_gene_start()][0] {
            angles[n - 1] = last - TAU;
            angles.rotate_right(1);
        }
    }
}

fn bars_ok(v: &[f64]) -> bool {
    grashof_satisfied(&crate::problem::bars_from_genes([v[0], v[1], v[2], v[3]]))
}

/// Replaces the bar genes with a generator draw.
fn lsi_fill<R: Rng + ?Sized>(v: &mut DesignVector, spec: &CaseSpec, rng: &mut R) {
    let g = lsi_bar_genes(spec, rng);
    v.set_bar_genes(g);
}

/// Chromosome sampling at `R1`.
pub fn hook_r1<R: Rng + ?Sized>(strategy: &StrategySpec, spec: &CaseSpec, rng: &mut R) -> DesignVector {
    match strategy.kind {
        StrategyKind::Nsi => uniform_vector(spec, rng),
        StrategyKind::AsiIg | StrategyKind::AsiAg => loop {
            let v = uniform_vector(spec, rng);
            if is_feasible(&v, spec) {
                break v;
            }
        },
        StrategyKind::Lsi => {
            let mut v = uniform_vector(spec, rng);
            lsi_fill(&mut v, spec, rng);
            sort_angle_genes(&mut v, spec);
            v
        }
        StrategyKind::Ssi => {
            let mut v = uniform_vector(spec, rng);
            ssi_fix(&mut v, spec, strategy.repair_form, rng);
            v
        }
    }
}

/// G4 on the bars and a sort on the angles; falls back to a generator draw
/// when G4 fails.
fn ssi_fix<R: Rng + ?Sized>(v: &mut DesignVector, spec: &CaseSpec, form: RepairForm, rng: &mut R) {
    if !bars_ok(v) {
        match ssi_bar_genes(v.bar_genes(), spec, form) {
            Some(g) => v.set_bar_genes(g),
            None => lsi_fill(v, spec, rng),
        }
    }
    if !constraints_hold(v, spec).1 {
        sort_angle_genes(v, spec);
    }
}

/// Trial manipulation at `R2`.
pub fn hook_r2<R: Rng + ?Sized>(
    strategy: &StrategySpec,
    trial: DesignVector,
    spec: &CaseSpec,
    rng: &mut R,
) -> HookOutcome {
    match strategy.kind {
        StrategyKind::Nsi | StrategyKind::AsiIg => {
            let feasible = is_feasible(&trial, spec);
            HookOutcome {
                vector: trial,
                feasible,
                attempts: 0,
            }
        }
        StrategyKind::AsiAg => {
            if is_feasible(&trial, spec) {
                return HookOutcome {
                    vector: trial,
                    feasible: true,
                    attempts: 0,
                };
            }
            let mut last = trial;
            for attempt in 1..=strategy.max_retries {
                last = uniform_vector(spec, rng);
                if is_feasible(&last, spec) {
                    return HookOutcome {
                        vector: last,
                        feasible: true,
                        attempts: attempt,
                    };
                }
            }
            HookOutcome {
                vector: last,
                feasible: false,
                attempts: strategy.max_retries,
            }
        }
        StrategyKind::Lsi => {
            let mut v = trial;
            let (grashof, sequence) = constraints_hold(&v, spec);
            if grashof && sequence {
                return HookOutcome {
                    vector: v,
                    feasible: true,
                    attempts: 0,
                };
            }
            if !grashof {
                lsi_fill(&mut v, spec, rng);
            }
            if !sequence {
                sort_angle_genes(&mut v, spec);
            }
            let feasible = is_feasible(&v, spec);
            HookOutcome {
                vector: v,
                feasible,
                attempts: 1,
            }
        }
        StrategyKind::Ssi => {
            let mut v = trial;
            if is_feasible(&v, spec) {
                return HookOutcome {
                    vector: v,
                    feasible: true,
                    attempts: 0,
                };
            }
            ssi_fix(&mut v, spec, strategy.repair_form, rng);
            let feasible = is_feasible(&v, spec);
            HookOutcome {
                vector: v,
                feasible,
                attempts: 1,
            }
        }
    }
}
