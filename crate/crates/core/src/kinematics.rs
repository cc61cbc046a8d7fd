//! Closed-form position analysis of the planar four-bar linkage.
//!
//! Link labels follow the closed-loop equation
//!
//! ```text
//! r1 cos θ1 + r2 cos θ2 − r3 cos θ4 − r4 = 0
//! r1 sin θ1 + r2 sin θ2 − r3 sin θ4      = 0
//! ```
//!
//! with `r1` the input crank pivoted at the origin, `r2` the coupler, `r3`
//! the output rocker pivoted at `(r4, 0)` and `r4` the fixed ground link.
//! The coupler point is attached to the coupler frame at `(r_ex, r_ey)` and
//! the whole mechanism is placed in the world by a [`FramePose`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::AssemblyError;

/// Relative tolerance used for the degenerate-geometry guards.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Link lengths of a four-bar loop.
///
/// Values are not validated on construction; strategies manipulate raw gene
/// values and the solver rejects non-positive lengths when asked to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarLengths {
    /// Input crank.
    pub r1: f64,
    /// Coupler.
    pub r2: f64,
    /// Output rocker.
    pub r3: f64,
    /// Fixed ground link.
    pub r4: f64,
}

impl BarLengths {
    pub const fn new(r1: f64, r2: f64, r3: f64, r4: f64) -> Self {
        Self { r1, r2, r3, r4 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }

    pub fn max(self) -> f64 {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::new(
            self.r1 * factor,
            self.r2 * factor,
            self.r3 * factor,
            self.r4 * factor,
        )
    }
}

/// Placement of the mechanism's local frame in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FramePose {
    pub theta0: f64,
    pub x0: f64,
    pub y0: f64,
}

impl FramePose {
    pub const IDENTITY: Self = Self {
        theta0: 0.0,
        x0: 0.0,
        y0: 0.0,
    };
}

/// Full geometric description of a four-bar with a coupler point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    pub bars: BarLengths,
    pub r_ex: f64,
    pub r_ey: f64,
    pub pose: FramePose,
}

/// Solved joint angles, each normalized into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta4: f64,
}

impl JointAngles {
    /// Residual vector of the loop-closure equation.
    pub fn residual(&self, bars: &BarLengths) -> [f64; 2] {
        loop_residual(bars, self.theta1, self.theta2, self.theta4)
    }
}

/// Assembly configuration: which root of the closure equation is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Positive arccosine offset.
    Open,
    /// Negative arccosine offset.
    Crossed,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Open, Branch::Crossed];

    fn sign(self) -> f64 {
        match self {
            Branch::Open => 1.0,
            Branch::Crossed => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Open => "open",
            Branch::Crossed => "crossed",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Left-hand side of the loop-closure equation.
pub fn loop_residual(bars: &BarLengths, theta1: f64, theta2: f64, theta4: f64) -> [f64; 2] {
    [
        bars.r1 * theta1.cos() + bars.r2 * theta2.cos() - bars.r3 * theta4.cos() - bars.r4,
        bars.r1 * theta1.sin() + bars.r2 * theta2.sin() - bars.r3 * theta4.sin(),
    ]
}

/// Solves the closure equation for the coupler and rocker angles.
///
/// With `k = r1·(cos θ1, sin θ1) − (r4, 0)` the coupler angle satisfies
/// `k · (cos θ2, sin θ2) = (r3² − r2² − |k|²) / (2 r2)`; the rocker angle then
/// follows from the closed vector loop, so the residual is consistent by
/// construction.
pub fn solve_loop_closure(
    bars: &BarLengths,
    theta1: f64,
    branch: Branch,
) -> Result<JointAngles, AssemblyError> {
    let BarLengths { r1, r2, r3, r4 } = *bars;
    if !(r1 > 0.0 && r2 > 0.0 && r3 > 0.0 && r4 > 0.0) {
        return Err(AssemblyError::NonPositiveLength);
    }
    let eps = DEGENERACY_EPS * bars.max();
    if r2 <= eps {
        return Err(AssemblyError::Degenerate);
    }

    let (s1, c1) = theta1.sin_cos();
    let kx = r1 * c1 - r4;
    let ky = r1 * s1;
    let k_len = kx.hypot(ky);
    if k_len < eps {
        return Err(AssemblyError::Degenerate);
    }

    let rhs = (r3 * r3 - r2 * r2 - k_len * k_len) / (2.0 * r2);
    let ratio = rhs / k_len;
    if !(ratio.abs() <= 1.0) {
        return Err(AssemblyError::NoSolution { theta1 });
    }

    let phi = ky.atan2(kx);
    let theta2 = phi + branch.sign() * ratio.acos();

    let (s2, c2) = theta2.sin_cos();
    let theta4 = (ky + r2 * s2).atan2(kx + r2 * c2);

    Ok(JointAngles {
        theta1: normalize_angle(theta1),
        theta2: normalize_angle(theta2),
        theta4: normalize_angle(theta4),
    })
}

/// Coupler-point position for a given crank angle.
pub fn coupler_point(params: &MechanismParams, theta1: f64, branch: Branch) -> Result<Point2, AssemblyError> {
    let joints = solve_loop_closure(&params.bars, theta1, branch)?;
    Ok(coupler_point_from(params, theta1, joints.theta2))
}

pub(crate) fn coupler_point_from(params: &MechanismParams, theta1: f64, theta2: f64) -> Point2 {
    let MechanismParams {
        bars,
        r_ex,
        r_ey,
        pose,
    } = *params;
    let (s01, c01) = (pose.theta0 + theta1).sin_cos();
    let (s02, c02) = (pose.theta0 + theta2).sin_cos();
    Point2 {
        x: bars.r1 * c01 + r_ex * c02 - r_ey * s02 + pose.x0,
        y: bars.r1 * s01 + r_ex * s02 + r_ey * c02 + pose.y0,
    }
}

/// Traces the coupler point over a list of crank angles on one fixed branch.
///
/// Unassemblable samples are reported per element; the trace never aborts.
pub fn trace_path(
    params: &MechanismParams,
    theta1_list: &[f64],
    branch: Branch,
) -> Vec<Result<Point2, AssemblyError>> {
    theta1_list
        .iter()
        .map(|&t| coupler_point(params, t, branch))
        .collect()
}

/// World-frame positions of the four joints and the coupler point, for sketches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPositions {
    pub crank_pivot: Point2,
    pub crank_tip: Point2,
    pub rocker_tip: Point2,
    pub rocker_pivot: Point2,
    pub coupler_point: Point2,
}

pub fn joint_positions(
    params: &MechanismParams,
    theta1: f64,
    branch: Branch,
) -> Result<JointPositions, AssemblyError> {
    let joints = solve_loop_closure(&params.bars, theta1, branch)?;
    let pose = params.pose;
    let (s0, c0) = pose.theta0.sin_cos();
    let place = |x: f64, y: f64| Point2::new(c0 * x - s0 * y + pose.x0, s0 * x + c0 * y + pose.y0);
    let b = params.bars;
    let ax = b.r1 * theta1.cos();
    let ay = b.r1 * theta1.sin();
    Ok(JointPositions {
        crank_pivot: place(0.0, 0.0),
        crank_tip: place(ax, ay),
        rocker_tip: place(ax + b.r2 * joints.theta2.cos(), ay + b.r2 * joints.theta2.sin()),
        rocker_pivot: place(b.r4, 0.0),
        coupler_point: coupler_point_from(params, theta1, joints.theta2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn residual_norm(bars: &BarLengths, j: &JointAngles) -> f64 {
        let r = j.residual(bars);
        r[0].hypot(r[1])
    }

    #[test]
    fn parallelogram_crossed_branch() {
        let bars = BarLengths::new(1.0, 2.0, 1.0, 2.0);
        let j = solve_loop_closure(&bars, FRAC_PI_2, Branch::Crossed).unwrap();
        assert!(j.theta2.abs() < 1e-12 || (j.theta2 - TAU).abs() < 1e-12);
        assert!((j.theta4 - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn both_roots_match_bisection_values() {
        // grid-scan + bisection of |k + r2 u(θ2)|² − r3²
        let bars = BarLengths::new(2.0, 3.0, 4.0, 3.0);
        let crossed = solve_loop_closure(&bars, FRAC_PI_3, Branch::Crossed).unwrap();
        let open = solve_loop_closure(&bars, FRAC_PI_3, Branch::Open).unwrap();
        assert!((crossed.theta2 - 0.857_071_947_850_131).abs() < 1e-9);
        assert!((crossed.theta4 - 1.579_806_195_663_546_5).abs() < 1e-9);
        assert!((open.theta2 - 3.998_664_601_439_924).abs() < 1e-9);
        assert!((open.theta4 - 3.275_930_353_626_508).abs() < 1e-9);
        assert!(residual_norm(&bars, &crossed) < 1e-12);
        assert!(residual_norm(&bars, &open) < 1e-12);
    }

    #[test]
    fn unreachable_gap_is_an_assembly_error() {
        let bars = BarLengths::new(10.0, 1.0, 1.0, 10.0);
        assert!(matches!(
            solve_loop_closure(&bars, PI, Branch::Open),
            Err(AssemblyError::NoSolution { .. })
        ));
    }

    #[test]
    fn non_positive_and_degenerate_inputs() {
        let bad = BarLengths::new(1.0, 0.0, 1.0, 1.0);
        assert_eq!(
            solve_loop_closure(&bad, 0.3, Branch::Open),
            Err(AssemblyError::NonPositiveLength)
        );
        // crank tip on the output pivot
        let tip_on_pivot = BarLengths::new(1.0, 1.0, 1.0, 1.0);
        assert_eq!(
            solve_loop_closure(&tip_on_pivot, 0.0, Branch::Open),
            Err(AssemblyError::Degenerate)
        );
    }

    #[test]
    fn offset_free_coupler_point_is_the_crank_tip() {
        let params = MechanismParams {
            bars: BarLengths::new(2.0, 3.0, 4.0, 3.0),
            r_ex: 0.0,
            r_ey: 0.0,
            pose: FramePose {
                theta0: 0.0,
                x0: 1.5,
                y0: -2.0,
            },
        };
        let p = coupler_point(&params, 1.1, Branch::Open).unwrap();
        assert!((p.x - (2.0 * 1.1f64.cos() + 1.5)).abs() < 1e-12);
        assert!((p.y - (2.0 * 1.1f64.sin() - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn unit_offset_on_parallelogram() {
        let params = MechanismParams {
            bars: BarLengths::new(1.0, 2.0, 1.0, 2.0),
            r_ex: 1.0,
            r_ey: 0.0,
            pose: FramePose::IDENTITY,
        };
        let p = coupler_point(&params, FRAC_PI_2, Branch::Crossed).unwrap();
        assert!((p.x - 1.0).abs() < 1e-12 && (p.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_keeps_going_past_failures() {
        let params = MechanismParams {
            bars: BarLengths::new(10.0, 1.0, 1.0, 10.0),
            r_ex: 0.0,
            r_ey: 0.0,
            pose: FramePose::IDENTITY,
        };
        let out = trace_path(&params, &[0.05, PI, 0.1], Branch::Open);
        assert_eq!(out.len(), 3);
        assert!(out[0].is_ok());
        assert!(out[1].is_err());
    }

    #[test]
    fn parallelogram_trace_is_crank_tip_plus_offset() {
        let params = MechanismParams {
            bars: BarLengths::new(1.0, 2.0, 1.0, 2.0),
            r_ex: 1.0,
            r_ey: 0.0,
            pose: FramePose::IDENTITY,
        };
        // the Crossed root keeps the coupler parallel to ground
        let pts = trace_path(&params, &[0.1, FRAC_PI_2, PI - 0.1], Branch::Crossed);
        for (p, t) in pts.iter().zip([0.1, FRAC_PI_2, PI - 0.1]) {
            let p = p.unwrap();
            assert!((p.x - (t.cos() + 1.0)).abs() < 1e-9, "{t}");
            assert!((p.y - t.sin()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn joint_positions_close_the_loop() {
        let params = MechanismParams {
            bars: BarLengths::new(2.0, 3.0, 4.0, 3.0),
            r_ex: 0.7,
            r_ey: -0.4,
            pose: FramePose {
                theta0: 0.9,
                x0: 3.0,
                y0: 1.0,
            },
        };
        let j = joint_positions(&params, 0.4, Branch::Open).unwrap();
        let rocker = j.rocker_tip.dist_sq(j.rocker_pivot).sqrt();
        assert!((rocker - 4.0).abs() < 1e-9);
        let p = coupler_point(&params, 0.4, Branch::Open).unwrap();
        assert_eq!(p, j.coupler_point);
    }

    #[test]
    fn normalize_angle_range() {
        for a in [-1e-18, -PI, 0.0, TAU, 7.0 * PI, -13.0] {
            let n = normalize_angle(a);
            assert!((0.0..TAU).contains(&n), "{a} -> {n}");
        }
    }
}
