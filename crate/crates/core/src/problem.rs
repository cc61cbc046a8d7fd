//! Benchmark cases, chromosome layout and the path-tracking objectives.
//!
//! Chromosome layout, in order:
//!
//! | genes | meaning |
//! |-------|---------|
//! | 0..4  | ground, crank, coupler, rocker lengths |
//! | 4..6  | coupler-point offset `r_ex`, `r_ey` |
//! | 6..9  | frame pose `θ0`, `x0`, `y0` (only when the case has a frame) |
//! | rest  | crank-angle genes, per [`InputAngleMode`] |
//!
//! The bar genes are stored ground-first, matching the reference
//! solutions of the benchmark cases.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::ops::{Deref, DerefMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::de_engine::DEConfig;
use crate::error::CaseError;
use crate::feasibility::{grashof_satisfied, grashof_violation, sequence_satisfied, ConstraintReport};
use crate::kinematics::{coupler_point, BarLengths, Branch, FramePose, MechanismParams, Point2};

/// Objective value assigned to a branch that cannot be assembled at one of
/// the target angles.
pub const ASSEMBLY_FAILURE_ERROR: f64 = 1e6;

pub const BAR_GENES: usize = 4;
pub const OFFSET_GENES: usize = 2;
pub const FRAME_GENES: usize = 3;

/// A real-valued chromosome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignVector(pub Vec<f64>);

impl DesignVector {
    pub fn new(genes: Vec<f64>) -> Self {
        Self(genes)
    }

    pub fn genes(&self) -> &[f64] {
        &self.0
    }

    /// Bar genes in chromosome order (ground, crank, coupler, rocker).
    pub fn bar_genes(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn set_bar_genes(&mut self, genes: [f64; 4]) {
        self.0[..BAR_GENES].copy_from_slice(&genes);
    }
}

impl Deref for DesignVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DesignVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DesignVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Kinematic bar roles from the chromosome's ground-first bar genes.
pub fn bars_from_genes(g: [f64; 4]) -> BarLengths {
    BarLengths {
        r1: g[1],
        r2: g[2],
        r3: g[3],
        r4: g[0],
    }
}

pub fn genes_from_bars(b: &BarLengths) -> [f64; 4] {
    [b.r4, b.r1, b.r2, b.r3]
}

/// How the crank angle at each target is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputAngleMode {
    /// One free gene per target.
    GeneAngles { count: usize },
    /// Fixed angles, no genes.
    Prescribed { values: Vec<f64> },
    /// One base-angle gene; target `i` sits at `base + i·increment`.
    BaseWithIncrements { increment: f64, count: usize },
}

impl InputAngleMode {
    pub fn gene_count(&self) -> usize {
        match self {
            InputAngleMode::GeneAngles { count } => *count,
            InputAngleMode::Prescribed { .. } => 0,
            InputAngleMode::BaseWithIncrements { .. } => 1,
        }
    }

    pub fn angle_count(&self) -> usize {
        match self {
            InputAngleMode::GeneAngles { count } => *count,
            InputAngleMode::Prescribed { values } => values.len(),
            InputAngleMode::BaseWithIncrements { count, .. } => *count,
        }
    }

    /// Only free angle genes can break the ordering constraint.
    pub fn constrains_sequence(&self) -> bool {
        matches!(self, InputAngleMode::GeneAngles { .. })
    }
}

/// Bounds as `[low, high]` pairs for JSON friendliness.
pub type Bounds = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub name: String,
    #[serde(with = "point_pairs")]
    pub targets: Vec<Point2>,
    pub angle_mode: InputAngleMode,
    pub bounds: Vec<Bounds>,
    pub has_frame: bool,
    #[serde(rename = "de")]
    pub default_de: DEConfig,
}

mod point_pairs {
    use super::Point2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pts: &[Point2], s: S) -> Result<S::Ok, S::Error> {
        pts.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point2>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            w1: 1000.0,
            w2: 1000.0,
        }
    }
}

impl CaseSpec {
    pub fn gene_count(&self) -> usize {
        BAR_GENES + OFFSET_GENES + self.frame_genes() + self.angle_mode.gene_count()
    }

    fn frame_genes(&self) -> usize {
        if self.has_frame {
            FRAME_GENES
        } else {
            0
        }
    }

    /// Index of the first crank-angle gene.
    pub fn angle_gene_start(&self) -> usize {
        BAR_GENES + OFFSET_GENES + self.frame_genes()
    }

    pub fn angle_gene_range(&self) -> std::ops::Range<usize> {
        let start = self.angle_gene_start();
        start..start + self.angle_mode.gene_count()
    }

    pub fn in_bounds(&self, v: &[f64]) -> bool {
        v.len() == self.bounds.len()
            && v.iter()
                .zip(&self.bounds)
                .all(|(x, [lo, hi])| *lo <= *x && *x <= *hi)
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        let invalid = |m: String| Err(CaseError::Invalid(m));
        if self.targets.len() < 2 {
            return invalid(format!("need at least 2 targets, got {}", self.targets.len()));
        }
        if self.angle_mode.angle_count() != self.targets.len() {
            return invalid(format!(
                "angle mode yields {} angles for {} targets",
                self.angle_mode.angle_count(),
                self.targets.len()
            ));
        }
        if let InputAngleMode::Prescribed { values } = &self.angle_mode {
            if !sequence_satisfied(values) {
                return invalid("prescribed angles are not in rotational order".into());
            }
        }
        if let InputAngleMode::BaseWithIncrements { increment, count } = &self.angle_mode {
            let span = increment.abs() * count.saturating_sub(1) as f64;
            if !(span < TAU) {
                return invalid("angle increments span a full revolution or more".into());
            }
        }
        if self.bounds.len() != self.gene_count() {
            return invalid(format!(
                "{} bounds for a {}-gene layout",
                self.bounds.len(),
                self.gene_count()
            ));
        }
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return invalid(format!("gene {i}: bounds [{lo}, {hi}] are not a finite interval"));
            }
        }
        if self.bounds[..BAR_GENES].iter().any(|[_, hi]| *hi <= 0.0) {
            return invalid("bar upper bounds must be positive".into());
        }
        if self.targets.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return invalid("non-finite target".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        let spec: CaseSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case specs always serialize")
    }

    /// Loads `1`, `2`, `2r`, `3` or a JSON case file.
    pub fn load(id_or_path: &str) -> Result<Self, CaseError> {
        match builtin_case(id_or_path) {
            Ok(spec) => Ok(spec),
            Err(CaseError::UnknownCase(_)) if Path::new(id_or_path).exists() => {
                let text = std::fs::read_to_string(id_or_path)
                    .map_err(|e| CaseError::Invalid(format!("{id_or_path}: {e}")))?;
                Self::from_json(&text)
            }
            Err(e) => Err(e),
        }
    }
}

fn pts(raw: &[(f64, f64)]) -> Vec<Point2> {
    raw.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}

fn layout_bounds(bar: Bounds, offset: Bounds, frame: Option<[Bounds; 3]>, angles: usize) -> Vec<Bounds> {
    let mut b = vec![bar; BAR_GENES];
    b.extend([offset; OFFSET_GENES]);
    if let Some(f) = frame {
        b.extend(f);
    }
    b.extend(std::iter::repeat_n([0.0, TAU], angles));
    b
}

/// The built-in benchmark problems.
pub fn builtin_case(id: &str) -> Result<CaseSpec, CaseError> {
    let spec = match id {
        "1" => CaseSpec {
            name: "1".into(),
            targets: pts(&[
                (20.0, 20.0),
                (20.0, 25.0),
                (20.0, 30.0),
                (20.0, 35.0),
                (20.0, 40.0),
                (20.0, 45.0),
            ]),
            angle_mode: InputAngleMode::GeneAngles { count: 6 },
            bounds: layout_bounds(
                [0.0, 60.0],
                [-60.0, 60.0],
                Some([[0.0, TAU], [-60.0, 60.0], [-60.0, 60.0]]),
                6,
            ),
            has_frame: true,
            default_de: DEConfig {
                np: 100,
                itermax: 1000,
                f: 0.3,
                cr: 0.8,
                mp: 0.1,
                ..DEConfig::default()
            },
        },
        "2" | "2r" => {
            let restricted = id == "2r";
            let (bar, offset) = if restricted {
                ([0.0, 5.0], [0.0, 5.0])
            } else {
                ([0.0, 50.0], [-50.0, 50.0])
            };
            CaseSpec {
                name: id.into(),
                targets: pts(&[
                    (3.000, 3.000),
                    (2.759, 3.363),
                    (2.372, 3.663),
                    (1.890, 3.862),
                    (1.355, 3.943),
                ]),
                angle_mode: InputAngleMode::Prescribed {
                    values: vec![FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 5.0 * PI / 12.0, FRAC_PI_2],
                },
                bounds: layout_bounds(bar, offset, None, 0),
                has_frame: false,
                default_de: DEConfig {
                    np: 50,
                    itermax: 100,
                    f: 0.3,
                    cr: 1.0,
                    mp: 0.1,
                    ..DEConfig::default()
                },
            }
        }
        "3" => CaseSpec {
            name: "3".into(),
            targets: pts(&[
                (0.5, 1.1),
                (0.4, 1.1),
                (0.3, 1.1),
                (0.2, 1.0),
                (0.1, 0.9),
                (0.005, 0.75),
                (0.02, 0.6),
                (0.0, 0.5),
                (0.0, 0.4),
                (0.03, 0.3),
                (0.1, 0.25),
                (0.15, 0.2),
                (0.2, 0.3),
                (0.3, 0.4),
                (0.4, 0.5),
                (0.5, 0.7),
                (0.6, 0.9),
                (0.6, 1.0),
            ]),
            angle_mode: InputAngleMode::BaseWithIncrements {
                increment: PI / 9.0,
                count: 18,
            },
            bounds: layout_bounds(
                [0.0, 50.0],
                [-50.0, 50.0],
                Some([[0.0, TAU], [-50.0, 50.0], [-50.0, 50.0]]),
                1,
            ),
            has_frame: true,
            default_de: DEConfig {
                np: 100,
                itermax: 50,
                f: 0.05,
                cr: 1.0,
                mp: 0.1,
                ..DEConfig::default()
            },
        },
        other => return Err(CaseError::UnknownCase(other.to_string())),
    };
    debug_assert!(spec.validate().is_ok());
    Ok(spec)
}

/// Splits a chromosome into mechanism geometry and one crank angle per target.
pub fn decode(v: &[f64], spec: &CaseSpec) -> Result<(MechanismParams, Vec<f64>), CaseError> {
    let expected = spec.gene_count();
    if v.len() != expected {
        return Err(CaseError::LengthMismatch {
            case: spec.name.clone(),
            expected,
            got: v.len(),
        });
    }
    let bars = bars_from_genes([v[0], v[1], v[2], v[3]]);
    let pose = if spec.has_frame {
        FramePose {
            theta0: v[6],
            x0: v[7],
            y0: v[8],
        }
    } else {
        FramePose::IDENTITY
    };
    let params = MechanismParams {
        bars,
        r_ex: v[4],
        r_ey: v[5],
        pose,
    };
    let genes = &v[spec.angle_gene_range()];
    let angles = match &spec.angle_mode {
        InputAngleMode::GeneAngles { .. } => genes.to_vec(),
        InputAngleMode::Prescribed { values } => values.clone(),
        InputAngleMode::BaseWithIncrements { increment, count } => {
            (0..*count).map(|i| genes[0] + increment * i as f64).collect()
        }
    };
    Ok((params, angles))
}

/// Inverse of [`decode`]. For `BaseWithIncrements` only the first angle is
/// stored, and `Prescribed` angles are not stored at all.
pub fn encode(params: &MechanismParams, angles: &[f64], spec: &CaseSpec) -> DesignVector {
    let mut g = genes_from_bars(&params.bars).to_vec();
    g.extend([params.r_ex, params.r_ey]);
    if spec.has_frame {
        g.extend([params.pose.theta0, params.pose.x0, params.pose.y0]);
    }
    match &spec.angle_mode {
        InputAngleMode::GeneAngles { .. } => g.extend_from_slice(angles),
        InputAngleMode::Prescribed { .. } => {}
        InputAngleMode::BaseWithIncrements { .. } => g.push(angles[0]),
    }
    DesignVector(g)
}

/// Sum of squared distances on one fixed branch, or the failure sentinel.
pub fn branch_error(params: &MechanismParams, angles: &[f64], targets: &[Point2], branch: Branch) -> f64 {
    let mut sum = 0.0;
    for (target, &theta1) in targets.iter().zip(angles) {
        match coupler_point(params, theta1, branch) {
            Ok(p) => sum += p.dist_sq(*target),
            Err(_) => return ASSEMBLY_FAILURE_ERROR,
        }
    }
    if sum.is_finite() {
        sum.min(ASSEMBLY_FAILURE_ERROR)
    } else {
        ASSEMBLY_FAILURE_ERROR
    }
}

/// Everything known about one chromosome under one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Branch-min tracking error.
    pub raw: f64,
    pub penalized: f64,
    /// Penalty terms alone, `penalized = raw + penalty`.
    pub penalty: f64,
    /// Tracking error on the Open and Crossed branch respectively.
    pub branch_errors: [f64; 2],
    pub best_branch: Branch,
    pub report: ConstraintReport,
}

impl Evaluation {
    pub fn assemblable(&self) -> bool {
        self.branch_errors.iter().any(|&e| e < ASSEMBLY_FAILURE_ERROR)
    }
}

pub fn evaluate(v: &[f64], spec: &CaseSpec, w: &PenaltyWeights) -> Result<Evaluation, CaseError> {
    let (params, angles) = decode(v, spec)?;
    let open = branch_error(&params, &angles, &spec.targets, Branch::Open);
    let crossed = branch_error(&params, &angles, &spec.targets, Branch::Crossed);
    let (raw, best_branch) = if crossed < open {
        (crossed, Branch::Crossed)
    } else {
        (open, Branch::Open)
    };
    let report = report_for(&params.bars, &angles, spec);
    let penalty = penalty_terms(&report, w);
    Ok(Evaluation {
        raw,
        penalized: raw + penalty,
        penalty,
        branch_errors: [open, crossed],
        best_branch,
        report,
    })
}

fn penalty_terms(report: &ConstraintReport, w: &PenaltyWeights) -> f64 {
    let mut p = 0.0;
    if !report.grashof_ok {
        p += w.w1;
    }
    if !report.sequence_ok {
        p += w.w2;
    }
    p
}

/// Branch-min path tracking error.
pub fn tracking_error(v: &[f64], spec: &CaseSpec) -> Result<f64, CaseError> {
    Ok(evaluate(v, spec, &PenaltyWeights::default())?.raw)
}

/// Tracking error plus binary Grashof and ordering penalties.
pub fn penalized_error(v: &[f64], spec: &CaseSpec, w: &PenaltyWeights) -> Result<f64, CaseError> {
    Ok(evaluate(v, spec, w)?.penalized)
}

fn report_for(bars: &BarLengths, angles: &[f64], spec: &CaseSpec) -> ConstraintReport {
    ConstraintReport {
        grashof_ok: grashof_satisfied(bars),
        sequence_ok: !spec.angle_mode.constrains_sequence() || sequence_satisfied(angles),
        grashof_violation: grashof_violation(bars),
    }
}

/// Constraint report for a chromosome without running the kinematics;
/// ordering is trivially met unless the case has free angle genes.
pub fn constraint_report(v: &[f64], spec: &CaseSpec) -> Result<ConstraintReport, CaseError> {
    let (params, angles) = decode(v, spec)?;
    Ok(report_for(&params.bars, &angles, spec))
}
