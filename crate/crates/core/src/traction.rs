//! Force and energy relations of the interlock drive.
//!
//! Angles cross the public interface in degrees and are converted to radians
//! internally. All quantities are SI.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::soil::{Environment, SoilProfile, SOFT_Q};

/// Kinematics and strength parameters of one (effective) spike.
///
/// The horizontal hinge-to-tip reach is affine in penetration depth,
/// `reach(d) = tip_reach + reach_slope * d`, and the thrust angle follows as
/// `atan((hinge_height + d) / reach(d))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeGeometry {
    /// Hinge height above the ground plane, m.
    pub hinge_height: f64,
    /// Hinge-to-tip distance with the tip at the surface, m.
    pub lever_length: f64,
    /// Horizontal hinge-to-tip distance at zero depth, m.
    pub tip_reach: f64,
    /// d(reach)/d(depth); negative when the spike steepens as it enters.
    pub reach_slope: f64,
    /// Rake angle while sliding on the surface, degrees.
    pub rake_alpha_surface: f64,
    /// Rake angle at `max_depth`, degrees.
    pub rake_alpha_full: f64,
    pub max_depth: f64,
    /// Tip contact area used for crust-breaking stress, m².
    pub tip_area: f64,
    /// Weight force resting on the spike tip, N (Earth).
    pub spike_weight_force: f64,
    /// Effective frontal width of the embedded spike, m. Holding capacity is
    /// `bearing_width * ∫q dz` over the embedded depth.
    pub bearing_width: f64,
}

/// Hinge height of the reference machine, m.
pub const REFERENCE_HINGE_HEIGHT: f64 = 0.10;
/// Penetration depth at which the reference spike reaches its full rake, m.
pub const REFERENCE_MAX_DEPTH: f64 = 0.20;
/// Draft the reference spike holds at full depth in the soft soil, N.
pub const REFERENCE_ANCHOR_DRAFT: f64 = 300.0;

impl SpikeGeometry {
    /// Solve the affine reach from a pair of thrust-angle endpoints.
    pub fn calibrated(
        hinge_height: f64,
        beta_surface: f64,
        beta_full: f64,
        max_depth: f64,
    ) -> Result<Self> {
        if !(hinge_height > 0.0 && max_depth > 0.0) {
            return domain("hinge height and max depth must be > 0");
        }
        if !(0.0 < beta_surface && beta_surface < beta_full && beta_full < 90.0) {
            return domain("thrust angle endpoints must satisfy 0 < surface < full < 90");
        }
        let reach0 = hinge_height / beta_surface.to_radians().tan();
        let reach1 = (hinge_height + max_depth) / beta_full.to_radians().tan();
        Ok(Self {
            hinge_height,
            lever_length: hinge_height.hypot(reach0),
            tip_reach: reach0,
            reach_slope: (reach1 - reach0) / max_depth,
            rake_alpha_surface: 45.0,
            rake_alpha_full: 65.0,
            max_depth,
            tip_area: 1e-5,
            spike_weight_force: 7.0,
            bearing_width: REFERENCE_ANCHOR_DRAFT / (SOFT_Q * max_depth),
        })
    }

    /// The trial machine's large rear spike: 10° out of the ground, 30° at
    /// 0.20 m.
    pub fn reference() -> Self {
        Self::calibrated(REFERENCE_HINGE_HEIGHT, 10.0, 30.0, REFERENCE_MAX_DEPTH)
            .expect("reference endpoints are valid")
    }

    /// Stretch the lever arm horizontally by `factor`, keeping the hinge
    /// height. A factor of two roughly halves the thrust angle.
    pub fn with_lever_scale(mut self, factor: f64) -> Self {
        self.tip_reach *= factor;
        self.reach_slope *= factor;
        self.lever_length = self.hinge_height.hypot(self.tip_reach);
        self
    }

    pub fn horizontal_reach(&self, depth: f64) -> f64 {
        self.tip_reach + self.reach_slope * depth
    }

    fn check_depth(&self, depth: f64) -> Result<()> {
        if !(depth >= 0.0 && depth <= self.max_depth + 1e-12) {
            return domain(format!("depth {depth} outside [0, {}]", self.max_depth));
        }
        Ok(())
    }

    /// Thrust angle β in degrees.
    pub fn thrust_angle(&self, depth: f64) -> Result<f64> {
        self.check_depth(depth)?;
        Ok(((self.hinge_height + depth) / self.horizontal_reach(depth))
            .atan()
            .to_degrees())
    }

    /// Rake angle α in degrees, linear between the surface and full values.
    pub fn rake_angle(&self, depth: f64) -> Result<f64> {
        self.check_depth(depth)?;
        let t = depth / self.max_depth;
        Ok(self.rake_alpha_surface + t * (self.rake_alpha_full - self.rake_alpha_surface))
    }

    /// Horizontal draft the spike withstands embedded to `depth`.
    pub fn holding_capacity(&self, depth: f64, profile: &SoilProfile) -> Result<f64> {
        self.check_depth(depth)?;
        Ok(self.bearing_width * profile.integrated_resistance(depth.min(self.max_depth))?)
    }

    /// Shallowest depth whose holding capacity reaches `draft`, or `None`
    /// when even `max_depth` is insufficient.
    pub fn anchoring_depth(&self, draft: f64, profile: &SoilProfile) -> Option<f64> {
        if draft <= 0.0 {
            return Some(0.0);
        }
        let target = draft / self.bearing_width;
        let mut acc = 0.0;
        let mut top = 0.0;
        for (i, l) in profile.layers.iter().enumerate() {
            let last = i + 1 == profile.layers.len();
            let bottom = if last {
                f64::INFINITY
            } else {
                top + l.thickness
            };
            let layer_total = (bottom - top) * l.cone_resistance;
            if acc + layer_total >= target {
                let depth = top + (target - acc) / l.cone_resistance;
                return (depth <= self.max_depth + 1e-12).then_some(depth.min(self.max_depth));
            }
            acc += layer_total;
            top = bottom;
        }
        None
    }
}

/// Force balance at the hinge of an anchored frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceBalance {
    pub draft: f64,
    pub blade_draft: f64,
    pub ripper_draft: f64,
    /// Reaction the vehicle mass must supply, `draft * tan β`.
    pub lift: f64,
    /// Thrust along the hinge-to-tip line, `draft / cos β`.
    pub thrust: f64,
    pub thrust_angle: f64,
    pub draft_angle: f64,
}

impl ForceBalance {
    pub fn new(blade_draft: f64, ripper_draft: f64, thrust_angle: f64, draft_angle: f64) -> Self {
        let draft = blade_draft + ripper_draft;
        let beta = thrust_angle.to_radians();
        Self {
            draft,
            blade_draft,
            ripper_draft,
            lift: draft * beta.tan(),
            thrust: draft / beta.cos(),
            thrust_angle,
            draft_angle,
        }
    }
}

/// Per-half-cycle energy ledger.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub half_cycle: u64,
    /// Backward slip of the anchoring frame, m.
    pub slip: f64,
    pub anchoring_work: f64,
    pub extraction_work: f64,
    /// Drawbar work delivered to the moving frame (tools, rolling, external).
    pub useful_work: f64,
    /// Share of `useful_work` spent breaking bank material with either tool.
    pub cutting_work: f64,
    /// Share of `useful_work` spent pushing the blade prism and loose material.
    pub pushing_work: f64,
    /// Forward travel of the moving frame, m.
    pub stroke_advance: f64,
    /// Design draft the anchors were set for, N.
    pub draft: f64,
    /// (slip, draft) samples during anchoring.
    pub draft_trace: Vec<(f64, f64)>,
    pub stuck: bool,
    pub spilled: f64,
}

impl CycleRecord {
    /// Motor work including a drivetrain efficiency factor in (0, 1].
    pub fn motor_work(&self, motor_efficiency: f64) -> f64 {
        (self.useful_work + self.anchoring_work + self.extraction_work) / motor_efficiency
    }
}

/// Pull/weight ratio `1 / tan β` of an interlocking spike.
pub fn pull_weight_ratio(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 90.0) {
        return domain(format!("thrust angle {beta}° outside (0, 90)"));
    }
    Ok(1.0 / beta.to_radians().tan())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipMargin {
    /// Weight minus lift, N.
    pub margin: f64,
    pub stable: bool,
}

/// Remaining weight after the draft-induced lift; unstable at or below zero.
pub fn flip_margin(draft: f64, beta: f64, vehicle_weight: f64) -> FlipMargin {
    debug_assert!(draft >= 0.0 && vehicle_weight > 0.0);
    let margin = vehicle_weight - draft * beta.to_radians().tan();
    FlipMargin {
        margin,
        stable: margin > 0.0,
    }
}

/// Weight transferred onto the machine by a ripper whose draft line is
/// inclined by `gamma`.
pub fn ripper_downforce(ripper_draft: f64, gamma: f64) -> f64 {
    debug_assert!(ripper_draft >= 0.0 && (0.0..90.0).contains(&gamma));
    ripper_draft * gamma.to_radians().tan()
}

/// Work to anchor a spike against `draft`: linear in draft with a
/// soil-dependent slope.
pub fn anchoring_work(draft: f64, profile: &SoilProfile) -> f64 {
    profile.anchoring_slope * draft
}

/// Backward slip while anchoring. The draft ramps linearly from zero over
/// the slip distance, so `W = F s / 2`.
pub fn anchoring_slip(draft: f64, profile: &SoilProfile) -> f64 {
    if draft > 0.0 {
        2.0 * anchoring_work(draft, profile) / draft
    } else {
        0.0
    }
}

/// Useful work over total (useful + anchoring + extraction).
pub fn tractive_efficiency(rec: &CycleRecord) -> Result<f64> {
    let total = rec.useful_work + rec.anchoring_work + rec.extraction_work;
    if !(total > 0.0) {
        return domain("tractive efficiency undefined for an all-zero record");
    }
    Ok(rec.useful_work / total)
}

/// Drawbar pull of a friction-traction vehicle with the given pull/weight
/// coefficient.
pub fn friction_baseline(mass: f64, env: &Environment, pull_weight_coeff: f64) -> f64 {
    pull_weight_coeff * mass * env.gravity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soil::Environment;

    #[test]
    fn reference_endpoints() {
        let g = SpikeGeometry::reference();
        assert!((g.thrust_angle(0.0).unwrap() - 10.0).abs() < 1e-9);
        assert!((g.thrust_angle(0.20).unwrap() - 30.0).abs() < 1e-9);
        let mid = g.thrust_angle(0.10).unwrap();
        assert!(mid > 10.0 && mid < 30.0);
        // atan(0.2 / (r0 + 0.1 r1)) evaluated at 30 digits
        assert!((mid - 20.207_256_444_092_59).abs() < 1e-9);
    }

    #[test]
    fn thrust_angle_out_of_range() {
        let g = SpikeGeometry::reference();
        assert!(g.thrust_angle(-0.01).is_err());
        assert!(g.thrust_angle(0.21).is_err());
    }

    #[test]
    fn pull_weight_values() {
        assert!((pull_weight_ratio(30.0).unwrap() - 1.732_050_807_568_877).abs() < 1e-12);
        assert!((pull_weight_ratio(45.0).unwrap() - 1.0).abs() < 1e-12);
        // cot 10° from a 30-digit oracle
        assert!((pull_weight_ratio(10.0).unwrap() - 5.671_281_819_617_709).abs() < 1e-12);
        assert!(pull_weight_ratio(0.0).is_err());
        assert!(pull_weight_ratio(90.0).is_err());
    }

    #[test]
    fn flip_margin_cases() {
        let m = flip_margin(100.0, 30.0, 200.0);
        assert!((m.margin - 142.264_973_081_037_4).abs() < 1e-9);
        assert!(m.stable);
        let beta = 30.0_f64;
        let at_boundary = flip_margin(200.0 / beta.to_radians().tan(), beta, 200.0);
        assert!(at_boundary.margin.abs() < 1e-9);
        let exact = flip_margin(0.0, 30.0, 200.0);
        assert_eq!(exact.margin, 200.0);
        assert!(exact.stable);
        let zero = FlipMargin {
            margin: 0.0,
            stable: 0.0 > 0.0,
        };
        assert!(!zero.stable);
    }

    #[test]
    fn ripper_downforce_cases() {
        assert_eq!(ripper_downforce(500.0, 0.0), 0.0);
        assert!((ripper_downforce(500.0, 20.0) - 181.985_117_133_101_2).abs() < 1e-9);
        assert_eq!(ripper_downforce(0.0, 35.0), 0.0);
    }

    #[test]
    fn anchoring_work_and_slip() {
        let soft = SoilProfile::soft();
        assert!((anchoring_work(300.0, &soft) - 30.0).abs() < 1e-12);
        assert_eq!(anchoring_work(0.0, &soft), 0.0);
        assert!((anchoring_work(600.0, &soft) - 60.0).abs() < 1e-12);
        assert!((anchoring_slip(300.0, &soft) - 0.20).abs() < 1e-12);
        assert_eq!(anchoring_slip(0.0, &soft), 0.0);
        let slips: Vec<f64> = [
            SoilProfile::soft(),
            SoilProfile::medium(),
            SoilProfile::hard(),
        ]
        .iter()
        .map(|p| anchoring_slip(300.0, p))
        .collect();
        assert!(slips[0] >= slips[1] && slips[1] >= slips[2]);
    }

    #[test]
    fn ramp_trapezoid_matches_closed_form() {
        // Trapezoid integration of the linear draft ramp over the slip.
        let soft = SoilProfile::soft();
        let f = 300.0;
        let s = anchoring_slip(f, &soft);
        let n = 37;
        let mut w = 0.0;
        for i in 0..n {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            w += 0.5 * (a * f + b * f) * (b - a) * s;
        }
        assert!((w - anchoring_work(f, &soft)).abs() < 1e-9);
    }

    #[test]
    fn holding_capacity_calibration() {
        let g = SpikeGeometry::reference();
        for p in [
            SoilProfile::soft(),
            SoilProfile::medium(),
            SoilProfile::hard(),
        ] {
            assert_eq!(g.holding_capacity(0.0, &p).unwrap(), 0.0);
            assert!(g.holding_capacity(0.1, &p).unwrap() < g.holding_capacity(0.2, &p).unwrap());
        }
        let cap = g.holding_capacity(0.2, &SoilProfile::soft()).unwrap();
        assert!(cap >= 300.0 - 1e-9);
        let d = g.anchoring_depth(300.0, &SoilProfile::soft()).unwrap();
        assert!((d - 0.2).abs() < 1e-9);
        assert!(g.anchoring_depth(301.0, &SoilProfile::soft()).is_none());
        assert_eq!(g.anchoring_depth(0.0, &SoilProfile::soft()), Some(0.0));
    }

    #[test]
    fn efficiency_cases() {
        let mut rec = CycleRecord {
            useful_work: 600.0,
            anchoring_work: 30.0,
            ..Default::default()
        };
        assert!((tractive_efficiency(&rec).unwrap() - 0.952_380_952).abs() < 1e-6);
        rec.extraction_work = 30.0;
        assert!((tractive_efficiency(&rec).unwrap() - 0.909_090_909).abs() < 1e-6);
        rec.anchoring_work = 0.0;
        rec.extraction_work = 0.0;
        assert_eq!(tractive_efficiency(&rec).unwrap(), 1.0);
        assert!(tractive_efficiency(&CycleRecord::default()).is_err());
    }

    #[test]
    fn friction_baselines() {
        assert!((friction_baseline(1.0, &Environment::earth(), 0.4) - 3.924).abs() < 1e-12);
        assert!((friction_baseline(1.0, &Environment::moon(), 0.21) - 0.343_35).abs() < 1e-12);
        assert_eq!(friction_baseline(0.0, &Environment::mars(), 0.4), 0.0);
    }

    #[test]
    fn force_balance_identities() {
        let fb = ForceBalance::new(100.0, 50.0, 30.0, 15.0);
        assert_eq!(fb.draft, 150.0);
        assert!((fb.lift - 150.0 * 30f64.to_radians().tan()).abs() < 1e-12);
        assert!(fb.thrust >= fb.draft);
    }

    #[test]
    fn lever_scale_halves_small_angles() {
        let g = SpikeGeometry::reference().with_lever_scale(2.0);
        assert!((g.thrust_angle(0.0).unwrap() - 5.038_368_773_297_49).abs() < 1e-9);
        assert!((g.thrust_angle(0.2).unwrap() - 16.102_113_751_986_02).abs() < 1e-9);
    }
}
