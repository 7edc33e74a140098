//! Landing-pad construction: pass plans, their validation and energy
//! budget, and execution against the simulator.
//!
//! Plans are built greedily per radial sector and layer: rip the sector,
//! then doze it outward to the berm until the blade brings nothing back.
//! Each pass is dry-run on a private copy of the site as it is planned, so
//! later passes see the terrain the earlier ones leave behind and every pass
//! carries its predicted per-half-cycle forces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::earthworks::{Disc, TerrainGrid};
use crate::error::{Error, Result};
use crate::locomotion::{
    rolling_draft, traverse_check, unit, wrap_degrees, Pose, SimParams, Site, StrokePhase,
    VehicleSpec, VehicleState,
};
use crate::mission::{Mission, TrajectoryRow};
use crate::raster::GridSpec;
use crate::sensing::{EventRecord, Sensor};
use crate::soil::{SoilMap, EARTH_GRAVITY};
use crate::traction::{flip_margin, CycleRecord};

/// Strip depth band for pad construction, m.
pub const DOCTRINE_DEPTH: (f64, f64) = (0.30, 0.50);
/// Longest push a bulldozer is used for, m.
pub const MAX_PUSH_DISTANCE: f64 = 60.0;

/// Rise above the reference surface that marks the berm toe, m.
const TOE_HEIGHT: f64 = 0.05;
/// Headings closer than this are not worth a turn, degrees.
const TURN_THRESHOLD: f64 = 3.0;
/// Shorter repositioning moves are skipped, m.
const MIN_TRAVEL: f64 = 0.3;
/// Position error a repositioning move accepts, m.
const GOTO_TOLERANCE: f64 = 0.2;
const GOTO_ATTEMPTS: usize = 3;
/// Bearing error, degrees, beyond which `goto` turns in place before travelling.
const STEER_LIMIT: f64 = 45.0;
/// Rounds of aiming off a `goto` target by the predicted landing miss.
const AIM_ITERATIONS: usize = 4;
const MAX_PUSHES_PER_STRIP: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BermSpec {
    /// Defaults to one metre outside the pad edge.
    pub inner_radius: Option<f64>,
    pub max_height: f64,
}

impl Default for BermSpec {
    fn default() -> Self {
        Self {
            inner_radius: None,
            max_height: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadSpec {
    pub center: (f64, f64),
    pub radius: f64,
    pub target_depth: f64,
    #[serde(default)]
    pub berm: BermSpec,
    #[serde(default = "default_loaded_slope")]
    pub max_loaded_slope: f64,
    #[serde(default = "default_push")]
    pub max_push_distance: f64,
}

fn default_loaded_slope() -> f64 {
    crate::locomotion::LOADED_SLOPE_LIMIT
}

fn default_push() -> f64 {
    MAX_PUSH_DISTANCE
}

impl PadSpec {
    pub fn new(center: (f64, f64), radius: f64, target_depth: f64) -> Self {
        Self {
            center,
            radius,
            target_depth,
            berm: BermSpec::default(),
            max_loaded_slope: default_loaded_slope(),
            max_push_distance: default_push(),
        }
    }

    pub fn inner_radius(&self) -> f64 {
        self.berm.inner_radius.unwrap_or(self.radius + 1.0)
    }

    pub fn disc(&self) -> Disc {
        Disc {
            center: self.center,
            radius: self.radius,
        }
    }

    /// Depth outside the doctrine band needs `force_depth_override`.
    pub fn validate(&self, force_depth_override: bool) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("pad: {m}")));
        if !(self.radius >= 0.0) {
            return bad(format!("radius must be >= 0, got {}", self.radius));
        }
        if !(self.target_depth >= 0.0) {
            return bad(format!(
                "target depth must be >= 0, got {}",
                self.target_depth
            ));
        }
        let (lo, hi) = DOCTRINE_DEPTH;
        if !force_depth_override && !(lo..=hi).contains(&self.target_depth) {
            return bad(format!(
                "target depth {} m outside the {lo}-{hi} m band (use --force-depth-override)",
                self.target_depth
            ));
        }
        if self.inner_radius() < self.radius {
            return bad(format!(
                "berm inner radius {} m inside the pad radius {} m",
                self.inner_radius(),
                self.radius
            ));
        }
        if !(self.berm.max_height > 0.0) {
            return bad("berm max height must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassKind {
    Rip,
    Doze,
    Deposit,
    Turn,
    /// Repositioning without tools.
    Travel,
}

/// Point on the vehicle that a path pass steers to its end point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefPoint {
    Pose,
    BladeEdge,
    RipperTine,
}

/// Predicted loads of one half-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCycleForces {
    pub phase: StrokePhase,
    /// Centre of the anchoring frame when the half-cycle starts.
    pub anchor: (f64, f64),
    /// Traction came from surface friction.
    pub friction: bool,
    /// Draft the anchors are set for, N.
    pub design_draft: f64,
    pub rolling_draft: f64,
    pub external_draft: f64,
    pub slip: f64,
    pub advance: f64,
    pub cutting_work: f64,
    pub pushing_work: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pass {
    pub kind: PassKind,
    /// Start and end of a path pass; the target heading of a turn.
    pub path: Vec<Pose>,
    pub reference: RefPoint,
    /// Tool depth below the current surface, m.
    #[serde(default)]
    pub depth: f64,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub region: Option<Disc>,
    #[serde(default)]
    pub load_limit: Option<f64>,
    #[serde(default)]
    pub external_draft: f64,
    /// Distance the blade carries its load, m.
    #[serde(default)]
    pub push_distance: f64,
    #[serde(default)]
    pub predicted: Vec<HalfCycleForces>,
}

impl Pass {
    pub fn travel(from: (f64, f64), to: (f64, f64)) -> Self {
        let h = (to.1 - from.1).atan2(to.0 - from.0).to_degrees();
        Self {
            kind: PassKind::Travel,
            path: vec![
                Pose {
                    x: from.0,
                    y: from.1,
                    heading: h,
                },
                Pose {
                    x: to.0,
                    y: to.1,
                    heading: h,
                },
            ],
            reference: RefPoint::Pose,
            depth: 0.0,
            floor: None,
            region: None,
            load_limit: None,
            external_draft: 0.0,
            push_distance: 0.0,
            predicted: Vec::new(),
        }
    }

    pub fn turn(at: Pose, heading: f64) -> Self {
        Self {
            kind: PassKind::Turn,
            path: vec![Pose { heading, ..at }],
            ..Self::travel((at.x, at.y), (at.x, at.y))
        }
    }

    pub fn length(&self) -> f64 {
        match (self.path.first(), self.path.last()) {
            (Some(a), Some(b)) => (b.x - a.x).hypot(b.y - a.y),
            _ => 0.0,
        }
    }

    /// Largest predicted design draft, N.
    pub fn peak_draft(&self) -> f64 {
        self.predicted
            .iter()
            .map(|f| f.design_draft)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub anchoring: f64,
    pub extraction: f64,
    /// Ripper work.
    pub cutting: f64,
    /// Blade work, cutting and carrying.
    pub pushing: f64,
    /// Rolling and external drawbar work.
    pub travel: f64,
    pub useful: f64,
    pub total: f64,
    pub efficiency: Option<f64>,
    pub half_cycles: u64,
}

impl EnergyBreakdown {
    fn finish(mut self) -> Self {
        self.useful = self.cutting + self.pushing + self.travel;
        self.total = self.useful + self.anchoring + self.extraction;
        self.efficiency = (self.total > 0.0).then(|| self.useful / self.total);
        self
    }

    /// Totals of executed half-cycle records.
    pub fn from_records(records: &[CycleRecord]) -> Self {
        let mut e = Self::default();
        for r in records {
            e.anchoring += r.anchoring_work;
            e.extraction += r.extraction_work;
            e.cutting += r.cutting_work;
            e.pushing += r.pushing_work;
            e.travel += r.useful_work - r.cutting_work - r.pushing_work;
            e.half_cycles += 1;
        }
        e.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassPlan {
    pub start: Pose,
    pub pad: Option<PadSpec>,
    /// Floor elevation of each layer, top first.
    pub layer_floors: Vec<f64>,
    /// Mean initial surface over the pad.
    pub reference_elevation: f64,
    pub load_limit: Option<f64>,
    pub passes: Vec<Pass>,
    pub predicted_energy: EnergyBreakdown,
}

impl PassPlan {
    pub fn empty(start: Pose) -> Self {
        Self {
            start,
            pad: None,
            layer_floors: Vec::new(),
            reference_elevation: 0.0,
            load_limit: None,
            passes: Vec::new(),
            predicted_energy: EnergyBreakdown::default(),
        }
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string(self)? + "\n")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Largest blade load whose design draft the rear anchors hold with a 5%
/// margin against both pull-out and flip, for a blade working within
/// `reach` of `at`.
pub fn blade_load_limit(
    vehicle: &VehicleSpec,
    site: &Site,
    params: &SimParams,
    at: (f64, f64),
    reach: f64,
) -> f64 {
    let soil = site.profile_at(at);
    let f_allow = anchor_draft_limit(vehicle, site, soil, crate::locomotion::Frame::Rear);
    let b = &vehicle.blade;
    let rolling = rolling_draft(vehicle, &site.env, params, StrokePhase::Expanding);
    // layers are ripped before they are dozed, so the blade meets loosened material
    let q = site.soils.max_resistance_within(at, reach);
    let cut = b.cut_coefficient * b.width * b.max_cut_depth * q * b.loose_strength_ratio;
    let rho = site.terrain.loose_bulk_density(&site.soils);
    let v = (f_allow - cut - rolling) / (b.push_friction * rho * site.env.gravity);
    v.min(b.capacity)
}

fn anchor_draft_limit(
    vehicle: &VehicleSpec,
    site: &Site,
    soil: &crate::soil::SoilProfile,
    frame: crate::locomotion::Frame,
) -> f64 {
    let mounts = match frame {
        crate::locomotion::Frame::Front => &vehicle.front_spikes,
        crate::locomotion::Frame::Rear => &vehicle.rear_spikes,
    };
    let hold: f64 = mounts
        .iter()
        .map(|m| {
            m.geometry
                .holding_capacity(m.geometry.max_depth, soil)
                .unwrap_or(0.0)
        })
        .sum();
    let beta = max_thrust_angle(vehicle);
    let weight = site.env.weight(vehicle.mass);
    (0.95 * hold).min(0.95 * weight / beta.to_radians().tan())
}

fn max_thrust_angle(vehicle: &VehicleSpec) -> f64 {
    vehicle
        .front_spikes
        .iter()
        .chain(&vehicle.rear_spikes)
        .map(|m| {
            m.geometry
                .thrust_angle(m.geometry.max_depth)
                .unwrap_or(90.0)
        })
        .fold(0.0, f64::max)
}

/// Berm cross-section whose inner toe sits on the inner berm radius:
/// (innermost crest radius, outermost crest radius, outer toe radius).
/// A berm that would top out above the height limit becomes a trapezoid.
fn berm_reach(pad: &PadSpec, swell: f64, repose: f64) -> (f64, f64, f64) {
    let inner = pad.inner_radius();
    let loose = PI * pad.radius * pad.radius * pad.target_depth * swell;
    let t = repose.to_radians().tan();
    let hm = pad.berm.max_height;
    let mut reach = (inner, inner, inner);
    let mut b = 1.0;
    for _ in 0..20 {
        // cross-section area at the berm's mid radius
        let area = loose / (2.0 * PI * (inner + b));
        let half = (area / t).sqrt();
        reach = if half * t <= hm {
            b = half;
            (inner + half, inner + half, inner + 2.0 * half)
        } else {
            let top = area / hm - hm / t;
            b = hm / t + 0.5 * top;
            (
                inner + hm / t,
                inner + hm / t + top,
                inner + 2.0 * hm / t + top,
            )
        };
    }
    reach
}

/// Material above `floor` in the strip the blade sweeps along direction
/// `u`, as (loose, bank) in bank-equivalent m³.
fn strip_material(site: &Site, pad: &PadSpec, u: (f64, f64), width: f64, floor: f64) -> (f64, f64) {
    let t = &site.terrain;
    let g = &t.spec;
    let a = g.cell_area();
    let (c, r) = (pad.center, pad.radius);
    let half = 0.45 * width;
    let ends = [
        (c.0 - 0.5 * u.0, c.1 - 0.5 * u.1),
        (c.0 + r * u.0, c.1 + r * u.1),
    ];
    let (xmin, xmax) = (
        ends[0].0.min(ends[1].0) - half,
        ends[0].0.max(ends[1].0) + half,
    );
    let (ymin, ymax) = (
        ends[0].1.min(ends[1].1) - half,
        ends[0].1.max(ends[1].1) + half,
    );
    let col = |x: f64| {
        ((x - g.origin.0) / g.cell_size)
            .floor()
            .clamp(0.0, g.cols as f64 - 1.0) as usize
    };
    let row = |y: f64| {
        ((y - g.origin.1) / g.cell_size)
            .floor()
            .clamp(0.0, g.rows as f64 - 1.0) as usize
    };
    let (mut loose_sum, mut bank_sum) = (0.0, 0.0);
    for rr in row(ymin)..=row(ymax) {
        for cc in col(xmin)..=col(xmax) {
            let i = g.index(cc, rr);
            let p = g.center(i);
            let (dx, dy) = (p.0 - c.0, p.1 - c.1);
            if dx.hypot(dy) > r {
                continue;
            }
            let along = dx * u.0 + dy * u.1;
            let across = (dx * u.1 - dy * u.0).abs();
            if along < -0.5 || across > half {
                continue;
            }
            let loose = t.loose_depth(i).min((t.surface(i) - floor).max(0.0));
            loose_sum += loose / t.swell_factor * a;
            bank_sum += (t.bank_floor(i) - floor).max(0.0) * a;
        }
    }
    (loose_sum, bank_sum)
}

/// First radius along the ray where the berm rises, capped to the first
/// deposit radius and kept outside the inner berm radius.
fn deposit_radius(site: &Site, pad: &PadSpec, u: (f64, f64), z_ref: f64, first: f64) -> f64 {
    let cs = site.terrain.spec.cell_size;
    let inner = pad.inner_radius();
    let mut r = pad.radius;
    while r <= first {
        let p = (pad.center.0 + r * u.0, pad.center.1 + r * u.1);
        if let Some(z) = site.terrain.surface_at(p.0, p.1) {
            if r > pad.radius + cs && z - z_ref > TOE_HEIGHT {
                return (r - cs).clamp(inner, first);
            }
        }
        r += 0.5 * cs;
    }
    first
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanOptions {
    pub force_depth_override: bool,
    /// Vehicle start; the pad centre facing +x by default.
    pub start: Option<Pose>,
}

struct Planner {
    mission: Mission,
    passes: Vec<Pass>,
}

/// Fixed geometry of a pad plan.
struct Layout {
    pad: PadSpec,
    z_ref: f64,
    /// Blade stop radius for the first load of a strip.
    first: f64,
    /// Closest blade stop that keeps a dropped load off the pad.
    nearest_drop: f64,
    load_limit: f64,
    rip_depth: f64,
}

/// Distance the strip paths start behind the pad centre, m.
const START_OFFSET: f64 = 0.3;

impl Planner {
    fn emit(&mut self, mut pass: Pass) -> Result<()> {
        let idx = self.passes.len();
        pass.predicted = self.mission.run_pass(&pass, idx).map_err(|e| {
            Error::Planning(format!(
                "dry run failed at pass {idx} ({:?}): {e}",
                pass.kind
            ))
        })?;
        self.passes.push(pass);
        Ok(())
    }

    fn turn_to(&mut self, heading: f64) -> Result<()> {
        let p = self.mission.pose();
        if wrap_degrees(heading - p.heading).abs() > TURN_THRESHOLD {
            self.emit(Pass::turn(p, heading))?;
        }
        Ok(())
    }

    /// Rip the strip along `phi` down to `floor` if bank remains above it.
    fn rip_strip(&mut self, l: &Layout, phi: f64, floor: f64, min_bank: f64) -> Result<bool> {
        let v = self.mission.spec.clone();
        let u = unit(phi);
        let c = l.pad.center;
        let pose = |d: f64| Pose {
            x: c.0 + d * u.0,
            y: c.1 + d * u.1,
            heading: phi,
        };
        let (_, bank) = strip_material(&self.mission.site, &l.pad, u, v.blade.width, floor);
        if bank <= min_bank {
            return Ok(false);
        }
        // rip outward from just behind the centre
        let d = 0.5 * v.min_separation + v.ripper.offset - START_OFFSET;
        self.goto((c.0 + d * u.0, c.1 + d * u.1), phi)?;
        self.emit(Pass {
            kind: PassKind::Rip,
            path: vec![pose(-START_OFFSET), pose(l.pad.radius + START_OFFSET)],
            reference: RefPoint::RipperTine,
            depth: l.rip_depth,
            floor: Some(floor),
            region: Some(l.pad.disc()),
            ..Pass::travel(c, c)
        })?;
        Ok(true)
    }

    /// Doze the strip along `phi` to the berm while a push would collect at
    /// least `min_share` of the load limit.
    fn doze_strip(&mut self, l: &Layout, phi: f64, floor: f64, min_share: f64) -> Result<()> {
        let v = self.mission.spec.clone();
        let u = unit(phi);
        let c = l.pad.center;
        let at = |d: f64| (c.0 + d * u.0, c.1 + d * u.1);
        let pose = |d: f64| {
            let q = at(d);
            Pose {
                x: q.0,
                y: q.1,
                heading: phi,
            }
        };
        let half_sep = 0.5 * v.min_separation;
        let min_load = min_share * l.load_limit;
        for _ in 0..MAX_PUSHES_PER_STRIP {
            let (loose, bank) = strip_material(&self.mission.site, &l.pad, u, v.blade.width, floor);
            if (loose + bank) * self.mission.site.terrain.swell_factor < min_load {
                break;
            }
            self.goto(at(-(START_OFFSET + v.blade.offset + half_sep)), phi)?;
            let stop =
                deposit_radius(&self.mission.site, &l.pad, u, l.z_ref, l.first).max(l.nearest_drop);
            self.emit(Pass {
                kind: PassKind::Doze,
                path: vec![pose(-START_OFFSET), pose(stop)],
                reference: RefPoint::BladeEdge,
                depth: v.blade.max_cut_depth,
                floor: Some(floor),
                region: Some(l.pad.disc()),
                load_limit: Some(l.load_limit),
                push_distance: stop + START_OFFSET,
                ..Pass::travel(c, c)
            })?;
            let load = self.mission.state.prism.prism_volume;
            let here = self.mission.pose();
            self.emit(Pass {
                kind: PassKind::Deposit,
                path: vec![here],
                ..Pass::travel(c, c)
            })?;
            if load < min_load {
                break;
            }
        }
        Ok(())
    }

    /// Move the pose to `to`, then face `heading`.
    fn goto(&mut self, to: (f64, f64), heading: f64) -> Result<()> {
        for _ in 0..GOTO_ATTEMPTS {
            let p = self.mission.pose();
            if (to.0 - p.x).hypot(to.1 - p.y) <= GOTO_TOLERANCE {
                break;
            }
            // turns in place drift the vehicle: aim off by the predicted miss
            let mut aim = to;
            for _ in 0..AIM_ITERATIONS {
                let Ok(land) = self.predict_approach(aim, heading) else {
                    break;
                };
                let miss = (to.0 - land.x, to.1 - land.y);
                if miss.0.hypot(miss.1) <= 0.5 * GOTO_TOLERANCE {
                    break;
                }
                aim = (aim.0 + miss.0, aim.1 + miss.1);
            }
            self.approach(aim, heading)?;
        }
        self.turn_to(heading)
    }

    /// Turn toward `aim` if it is far off the bearing, travel there and turn
    /// to `heading`. Smaller bearing errors are steered out while travelling.
    fn approach(&mut self, aim: (f64, f64), heading: f64) -> Result<()> {
        for _ in 0..GOTO_ATTEMPTS {
            let p = self.mission.pose();
            let bearing = (aim.1 - p.y).atan2(aim.0 - p.x).to_degrees();
            if (aim.0 - p.x).hypot(aim.1 - p.y) <= MIN_TRAVEL
                || wrap_degrees(bearing - p.heading).abs() <= STEER_LIMIT
            {
                break;
            }
            self.turn_to(bearing)?;
        }
        let p = self.mission.pose();
        let bearing = (aim.1 - p.y).atan2(aim.0 - p.x).to_degrees();
        if (aim.0 - p.x).hypot(aim.1 - p.y) > MIN_TRAVEL
            && wrap_degrees(bearing - p.heading).abs() <= STEER_LIMIT
        {
            self.emit(Pass::travel((p.x, p.y), aim))?;
        }
        self.turn_to(heading)
    }

    /// Pose after [`Self::approach`] from the current state, on level ground
    /// of the local soil.
    fn predict_approach(&self, aim: (f64, f64), heading: f64) -> Result<Pose> {
        let m = &self.mission;
        let p = m.pose();
        let span =
            2.0 * ((aim.0 - p.x).hypot(aim.1 - p.y) + m.spec.body_length() + m.spec.stroke_length);
        let site = Site {
            terrain: TerrainGrid::flat(
                GridSpec::centered(((p.x + aim.0) / 2.0, (p.y + aim.1) / 2.0), span, 0.5)?,
                0.0,
                1.0,
            )?,
            soils: SoilMap::uniform(m.site.profile_at((p.x, p.y)).clone()),
            env: m.site.env.clone(),
        };
        let mut state = m.state.clone();
        state.prism = Default::default();
        let mut scratch = Planner {
            mission: Mission::new(m.spec.clone(), state, site, m.params),
            passes: Vec::new(),
        };
        scratch.approach(aim, heading)?;
        Ok(scratch.mission.pose())
    }
}

/// Plan a pad: strip the disc to `target_depth` in layers and push the
/// spoil to a berm ring outside it.
pub fn plan_pad(
    pad: &PadSpec,
    vehicle: &VehicleSpec,
    site: &Site,
    params: &SimParams,
    opts: &PlanOptions,
) -> Result<PassPlan> {
    pad.validate(opts.force_depth_override)?;
    vehicle.validate()?;
    let start = opts.start.unwrap_or(Pose {
        x: pad.center.0,
        y: pad.center.1,
        heading: 0.0,
    });
    let mut plan = PassPlan::empty(start);
    plan.pad = Some(*pad);
    if pad.radius == 0.0 || pad.target_depth == 0.0 {
        return Ok(plan);
    }
    let t = &site.terrain;
    let g = &t.spec;
    let disc = pad.disc();
    let pad_cells: Vec<usize> = (0..t.len())
        .filter(|&i| disc.contains(g.center(i)))
        .collect();
    if pad_cells.is_empty() {
        return Err(Error::Planning("pad covers no terrain cells".into()));
    }
    let z_ref = pad_cells.iter().map(|&i| t.surface(i)).sum::<f64>() / pad_cells.len() as f64;
    let soil = site.profile_at(pad.center);
    let (crest_in, first, outer) = berm_reach(pad, t.swell_factor, soil.repose_angle);
    if first + START_OFFSET > pad.max_push_distance {
        return Err(Error::Planning(format!(
            "push distance {:.1} m from the pad centre to the berm exceeds the {} m cap \
             (pad radius {} m, berm inner radius {} m)",
            first + START_OFFSET,
            pad.max_push_distance,
            pad.radius,
            pad.inner_radius()
        )));
    }
    let margin = outer + vehicle.body_length();
    let (x0, y0) = g.origin;
    let (x1, y1) = (
        x0 + g.cols as f64 * g.cell_size,
        y0 + g.rows as f64 * g.cell_size,
    );
    let (cx, cy) = pad.center;
    if cx - margin < x0 || cx + margin > x1 || cy - margin < y0 || cy + margin > y1 {
        return Err(Error::Planning(format!(
            "pad with berm and working room ({margin:.1} m radius) does not fit in the terrain"
        )));
    }
    let slope = t.slope_at(cx, cy)?;
    if !traverse_check(slope, false, soil, vehicle, &site.env).pass {
        return Err(Error::Planning(format!(
            "vehicle cannot work on the initial {slope:.1}° slope at the pad centre"
        )));
    }

    let load_limit = blade_load_limit(vehicle, site, params, pad.center, margin);
    if load_limit < 0.05 * vehicle.blade.capacity {
        return Err(Error::Planning(format!(
            "blade load limited to {load_limit:.3} m³ by anchor holding and flip margin"
        )));
    }
    let r = &vehicle.ripper;
    let q_max = site
        .soils
        .max_resistance_within(pad.center, pad.radius + vehicle.body_length());
    let f_front = anchor_draft_limit(vehicle, site, soil, crate::locomotion::Frame::Front)
        - rolling_draft(vehicle, &site.env, params, StrokePhase::Contracting);
    let rip_limit = (f_front / (r.cut_coefficient * r.width * q_max)).min(r.max_depth);
    let layer_max = (0.8 * r.max_depth).min(rip_limit - 0.05);
    if layer_max <= 0.01 {
        return Err(Error::Planning(
            "ripper draft exceeds the front anchors' limit".into(),
        ));
    }
    let layers = (pad.target_depth / layer_max).ceil() as usize;
    let thickness = pad.target_depth / layers as f64;
    let rip_depth = (thickness + 0.1).min(r.max_depth).min(rip_limit);
    plan.reference_elevation = z_ref;
    plan.load_limit = Some(load_limit);
    plan.layer_floors = (1..=layers).map(|l| z_ref - thickness * l as f64).collect();

    let sectors = ((2.0 * PI * pad.radius / (0.75 * vehicle.blade.width)).ceil() as usize).max(4);
    let state = VehicleState::new(vehicle, (start.x, start.y), start.heading);
    let layout = Layout {
        pad: *pad,
        z_ref,
        first,
        nearest_drop: crest_in,
        load_limit,
        rip_depth,
    };
    let mut p = Planner {
        mission: Mission::new(vehicle.clone(), state, site.clone(), *params),
        passes: Vec::new(),
    };
    for &floor in &plan.layer_floors {
        let phi = |k: usize| 360.0 * k as f64 / sectors as f64;
        // later rounds catch strips the first round missed
        for min_bank in [1e-3, 1e-2, 1e-2] {
            let mut ripped = false;
            for k in 0..sectors {
                ripped |= p.rip_strip(&layout, phi(k), floor, min_bank)?;
            }
            if !ripped {
                break;
            }
        }
        // full loads first, then what slumped back or was left between strips
        for share in [0.25, 0.05] {
            for k in 0..sectors {
                p.doze_strip(&layout, phi(k), floor, share)?;
            }
        }
    }
    plan.passes = p.passes;
    plan.predicted_energy = energy_budget(&plan, vehicle, site, params);
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Flip,
    Slope,
    PushDistance,
    BladeCapacity,
    Duricrust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub pass: usize,
    pub kind: ViolationKind,
    pub message: String,
}

/// Check every pass for flip, slope, push distance, blade capacity and
/// duricrust problems. An empty list means the plan is feasible.
pub fn validate_plan(plan: &PassPlan, vehicle: &VehicleSpec, site: &Site) -> Vec<Violation> {
    let mut out = Vec::new();
    let cap = plan.pad.map_or(MAX_PUSH_DISTANCE, |p| p.max_push_distance);
    let loaded_limit = plan.pad.map_or(crate::locomotion::LOADED_SLOPE_LIMIT, |p| {
        p.max_loaded_slope
    });
    let beta = max_thrust_angle(vehicle);
    let weight = site.env.weight(vehicle.mass);
    let body = vehicle.body_length();
    for (i, pass) in plan.passes.iter().enumerate() {
        let mut push = |kind, message: String| {
            out.push(Violation {
                pass: i,
                kind,
                message,
            })
        };
        if pass.kind == PassKind::Doze && pass.push_distance > cap {
            push(
                ViolationKind::PushDistance,
                format!(
                    "push distance {:.1} m exceeds the {cap} m cap",
                    pass.push_distance
                ),
            );
        }
        if let Some(l) = pass.load_limit {
            if l > vehicle.blade.capacity + 1e-12 {
                push(
                    ViolationKind::BladeCapacity,
                    format!(
                        "load {l:.3} m³ exceeds blade capacity {:.3} m³",
                        vehicle.blade.capacity
                    ),
                );
            }
        }
        let peak = pass.peak_draft();
        let m = flip_margin(peak, beta, weight);
        if peak > 0.0 && !m.stable {
            push(
                ViolationKind::Flip,
                format!(
                    "draft {peak:.1} N at β = {beta:.2}° leaves flip margin {:.1} N",
                    m.margin
                ),
            );
        }
        if matches!(pass.kind, PassKind::Turn | PassKind::Deposit) {
            continue;
        }
        let loaded = pass.kind == PassKind::Doze;
        for q in sample_path(pass, 1.0) {
            let profile = site.profile_at((q.x, q.y));
            if let Some(pitch) = site.terrain.pitch_along(q.x, q.y, q.heading, body) {
                let chk = traverse_check(pitch.abs(), loaded, profile, vehicle, &site.env);
                let over_loaded = loaded && pitch.abs() > loaded_limit;
                if !chk.pass || over_loaded {
                    push(
                        ViolationKind::Slope,
                        format!(
                            "pitch {:.1}° at ({:.2}, {:.2}): {}",
                            pitch.abs(),
                            q.x,
                            q.y,
                            chk.reason
                                .unwrap_or_else(|| format!("over {loaded_limit}° loaded"))
                        ),
                    );
                    break;
                }
            }
            if profile.duricrust.is_some() {
                let cell = site.terrain.spec.cell_of(q.x, q.y);
                let broken = cell.is_some_and(|c| site.terrain.crust_broken(c));
                let g = &vehicle.rear_spikes[0].geometry;
                let mut normal = g.spike_weight_force * site.env.gravity / EARTH_GRAVITY;
                if vehicle.weight_transfer_actuator {
                    normal += 0.5 * weight / vehicle.rear_spikes.len() as f64;
                }
                if !broken && !profile.duricrust_break_check(normal, g.tip_area) {
                    push(
                        ViolationKind::Duricrust,
                        format!(
                            "spikes cannot penetrate the duricrust at ({:.2}, {:.2}) with {normal:.1} N",
                            q.x, q.y
                        ),
                    );
                    break;
                }
            }
        }
    }
    out
}

fn sample_path(pass: &Pass, step: f64) -> Vec<Pose> {
    let mut out = Vec::new();
    for w in pass.path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b.x - a.x).hypot(b.y - a.y);
        let n = ((len / step).ceil() as usize).max(1);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            out.push(Pose {
                x: a.x + t * (b.x - a.x),
                y: a.y + t * (b.y - a.y),
                heading: a.heading,
            });
        }
    }
    if pass.path.len() == 1 {
        out.push(pass.path[0]);
    }
    out
}

/// Half-cycle segmentation of a straight pass from the force models alone,
/// starting from a closed vehicle; used for passes without a dry run.
pub fn analytic_segments(
    pass: &Pass,
    vehicle: &VehicleSpec,
    site: &Site,
    params: &SimParams,
) -> Vec<HalfCycleForces> {
    let mut out = Vec::new();
    if !matches!(pass.kind, PassKind::Travel | PassKind::Doze | PassKind::Rip) {
        return out;
    }
    let (Some(a), Some(_)) = (pass.path.first(), pass.path.last()) else {
        return out;
    };
    let anchor = (a.x, a.y);
    let k = site.profile_at(anchor).anchoring_slope;
    let mut remaining = pass.length();
    let mut sep = vehicle.min_separation;
    let mut phase = StrokePhase::Expanding;
    for _ in 0..10_000 {
        if remaining <= 1e-9 {
            break;
        }
        let moves_ref = match (pass.reference, phase) {
            (RefPoint::Pose, _) => true,
            (RefPoint::BladeEdge, p) => p == StrokePhase::Expanding,
            (RefPoint::RipperTine, p) => p == StrokePhase::Contracting,
        };
        let room = match phase {
            StrokePhase::Expanding => vehicle.max_separation() - sep,
            StrokePhase::Contracting => sep - vehicle.min_separation,
        };
        let rolling = rolling_draft(vehicle, &site.env, params, phase);
        let external = if moves_ref { pass.external_draft } else { 0.0 };
        let draft = rolling + external;
        let nominal_slip = if draft > 0.0 { 2.0 * k } else { 0.0 };
        let travel = if moves_ref {
            match pass.reference {
                RefPoint::Pose => 2.0 * (remaining + nominal_slip),
                _ => remaining + nominal_slip,
            }
            .min(room)
        } else {
            room
        };
        let slip = nominal_slip.min(travel);
        let advance = travel - slip;
        if moves_ref {
            remaining -= match pass.reference {
                RefPoint::Pose => 0.5 * (advance - slip),
                _ => advance,
            };
        }
        sep += match phase {
            StrokePhase::Expanding => travel,
            StrokePhase::Contracting => -travel,
        };
        out.push(HalfCycleForces {
            phase,
            anchor,
            friction: false,
            design_draft: draft,
            rolling_draft: rolling,
            external_draft: external,
            slip,
            advance,
            cutting_work: 0.0,
            pushing_work: 0.0,
        });
        phase = phase.flipped();
    }
    out
}

/// Energy of a plan from its per-half-cycle force predictions: anchoring
/// work from the design draft and the soil at the anchors, extraction as a
/// fixed share of it, tool work from the predicted tool forces over their
/// travel.
pub fn energy_budget(
    plan: &PassPlan,
    vehicle: &VehicleSpec,
    site: &Site,
    params: &SimParams,
) -> EnergyBreakdown {
    let mut e = EnergyBreakdown::default();
    for pass in &plan.passes {
        let fallback;
        let segs = if pass.predicted.is_empty() {
            fallback = analytic_segments(pass, vehicle, site, params);
            &fallback
        } else {
            &pass.predicted
        };
        for s in segs {
            e.half_cycles += 1;
            let k = site
                .soils
                .profile_at(s.anchor.0, s.anchor.1)
                .anchoring_slope;
            if !s.friction && s.design_draft > 0.0 && k > 0.0 {
                let r = (s.slip / (2.0 * k)).min(1.0);
                let w = k * s.design_draft * r * r;
                e.anchoring += w;
                e.extraction += params.extraction_ratio * w;
            }
            e.cutting += s.cutting_work;
            e.pushing += s.pushing_work;
            e.travel += (s.rolling_draft + s.external_draft) * s.advance;
        }
    }
    e.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BermBin {
    pub inner: f64,
    pub outer: f64,
    pub mean_height: f64,
    pub max_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VolumeAudit {
    pub initial_bank_equivalent: f64,
    pub final_bank_equivalent: f64,
    /// |final − initial| / initial.
    pub relative_error: f64,
    /// Bank removed from the whole grid, m³.
    pub excavated: f64,
    /// Bank removed inside the pad, m³.
    pub excavated_in_pad: f64,
    /// Loose spoil outside the pad (berm) plus exported, bank-equivalent m³.
    pub berm: f64,
    /// Loose material left on the pad, bank-equivalent m³.
    pub pad_residual: f64,
    /// Material still on the blade, bank-equivalent m³.
    pub on_blade: f64,
    /// |excavated − (berm + residual + blade)| / excavated.
    pub closure_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub pass: usize,
    pub half_cycle: u64,
    pub reason: String,
    pub state: VehicleState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub grid: GridSpec,
    /// Lowering of the surface on pad cells, m; `None` off the pad.
    pub achieved_depth: Vec<Option<f64>>,
    pub target_depth: f64,
    /// Share of pad cells whose achieved depth is within one cell size of the
    /// target.
    pub depth_within_tolerance: f64,
    pub berm_profile: Vec<BermBin>,
    pub max_loose_slope: f64,
    pub energy: EnergyBreakdown,
    pub half_cycles: u64,
    pub cycles: u64,
    pub violations: Vec<Violation>,
    pub audit: VolumeAudit,
    pub failure: Option<Failure>,
    pub passes_completed: usize,
}

/// Everything an executed plan leaves behind.
#[derive(Debug, Clone)]
pub struct Execution {
    pub report: MissionReport,
    pub site: Site,
    pub state: VehicleState,
    pub records: Vec<CycleRecord>,
    pub trajectory: Vec<TrajectoryRow>,
    pub events: Vec<EventRecord>,
}

/// Drive the plan's passes on `site` and report what was built.
pub fn execute_plan(
    plan: &PassPlan,
    vehicle: &VehicleSpec,
    site: &Site,
    params: &SimParams,
    sensor: Option<Sensor>,
) -> Execution {
    let violations = validate_plan(plan, vehicle, site);
    let state = VehicleState::new(vehicle, (plan.start.x, plan.start.y), plan.start.heading);
    let mut m = Mission::new(vehicle.clone(), state, site.clone(), *params);
    if let Some(s) = sensor {
        m = m.with_sensor(s);
    }
    let mut failure = None;
    let mut done = 0;
    for (i, pass) in plan.passes.iter().enumerate() {
        if let Err(e) = m.run_pass(pass, i) {
            let half_cycle = match &e {
                Error::Flip { half_cycle, .. } | Error::Stuck { half_cycle, .. } => *half_cycle,
                _ => m.state.half_cycles,
            };
            failure = Some(Failure {
                pass: i,
                half_cycle,
                reason: e.to_string(),
                state: m.state.clone(),
            });
            break;
        }
        done = i + 1;
    }
    let report = build_report(plan, site, &m, violations, failure, done);
    Execution {
        report,
        site: m.site,
        state: m.state,
        records: m.records,
        trajectory: m.trajectory,
        events: m.events,
    }
}

fn build_report(
    plan: &PassPlan,
    initial: &Site,
    m: &Mission,
    violations: Vec<Violation>,
    failure: Option<Failure>,
    passes_completed: usize,
) -> MissionReport {
    let t0 = &initial.terrain;
    let t1 = &m.site.terrain;
    let g = t1.spec;
    let a = g.cell_area();
    let swell = t1.swell_factor;
    let disc = plan.pad.map(|p| p.disc());
    let in_pad = |i: usize| disc.is_some_and(|d| d.contains(g.center(i)));
    let target = plan.pad.map_or(0.0, |p| p.target_depth);

    let mut achieved = vec![None; g.len()];
    let (mut ok, mut n_pad) = (0usize, 0usize);
    let mut audit = VolumeAudit::default();
    for (i, slot) in achieved.iter_mut().enumerate() {
        let removed = (t0.bank_floor(i) - t1.bank_floor(i)) * a;
        audit.excavated += removed;
        let loose_eq = t1.loose_depth(i) * a / swell - t0.loose_depth(i) * a / swell;
        if in_pad(i) {
            let d = t0.surface(i) - t1.surface(i);
            *slot = Some(d);
            n_pad += 1;
            if (d - target).abs() <= g.cell_size {
                ok += 1;
            }
            audit.excavated_in_pad += removed;
            audit.pad_residual += loose_eq;
        } else {
            audit.berm += loose_eq;
        }
    }
    audit.berm += t1.exported_volume() - t0.exported_volume();
    audit.on_blade = m.state.prism.prism_volume / swell;
    audit.initial_bank_equivalent = t0.bank_equivalent_volume();
    audit.final_bank_equivalent = t1.bank_equivalent_volume() + audit.on_blade;
    audit.relative_error = (audit.final_bank_equivalent - audit.initial_bank_equivalent).abs()
        / audit.initial_bank_equivalent.abs().max(f64::MIN_POSITIVE);
    let accounted = audit.berm + audit.pad_residual + audit.on_blade;
    audit.closure_error = if audit.excavated > 0.0 {
        (audit.excavated - accounted).abs() / audit.excavated
    } else {
        accounted.abs()
    };

    let mut berm_profile = Vec::new();
    if let Some(pad) = plan.pad {
        let z_ref = plan.reference_elevation;
        let cs = g.cell_size;
        let (_, _, outer) = berm_reach(&pad, swell, initial.profile_at(pad.center).repose_angle);
        let bins = (((outer + 2.0) - pad.radius) / cs).ceil().max(0.0) as usize;
        let mut acc = vec![(0.0, 0usize, f64::NEG_INFINITY); bins];
        for i in 0..g.len() {
            let c = g.center(i);
            let r = (c.0 - pad.center.0).hypot(c.1 - pad.center.1);
            if r < pad.radius {
                continue;
            }
            let b = ((r - pad.radius) / cs) as usize;
            if b < bins {
                let h = t1.surface(i) - z_ref;
                acc[b].0 += h;
                acc[b].1 += 1;
                acc[b].2 = f64::max(acc[b].2, h);
            }
        }
        for (b, (sum, n, max)) in acc.into_iter().enumerate() {
            if n > 0 {
                berm_profile.push(BermBin {
                    inner: pad.radius + b as f64 * cs,
                    outer: pad.radius + (b + 1) as f64 * cs,
                    mean_height: sum / n as f64,
                    max_height: max,
                });
            }
        }
    }

    let energy = EnergyBreakdown::from_records(&m.records);
    MissionReport {
        grid: g,
        achieved_depth: achieved,
        target_depth: target,
        depth_within_tolerance: if n_pad > 0 {
            ok as f64 / n_pad as f64
        } else {
            1.0
        },
        berm_profile,
        max_loose_slope: t1.max_loose_slope(),
        half_cycles: energy.half_cycles,
        cycles: energy.half_cycles.div_ceil(2),
        energy,
        violations,
        audit,
        failure,
        passes_completed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::earthworks::TerrainGrid;
    use crate::raster::GridSpec;
    use crate::soil::{Environment, SoilLayer, SoilMap, SoilProfile, SOFT_Q};

    fn site(env: Environment, extent: f64) -> Site {
        Site {
            terrain: TerrainGrid::flat(
                GridSpec::centered((0.0, 0.0), extent, 0.25).unwrap(),
                0.0,
                1.3,
            )
            .unwrap(),
            soils: SoilMap::uniform(SoilProfile::soft()),
            env,
        }
    }

    fn forced() -> PlanOptions {
        PlanOptions {
            force_depth_override: true,
            ..Default::default()
        }
    }

    #[test]
    fn zero_radius_gives_empty_plan() {
        let s = site(Environment::moon(), 20.0);
        let pad = PadSpec::new((0.0, 0.0), 0.0, 0.4);
        let plan = plan_pad(
            &pad,
            &VehicleSpec::field(),
            &s,
            &SimParams::default(),
            &PlanOptions::default(),
        )
        .unwrap();
        assert!(plan.passes.is_empty());
        assert_eq!(plan.predicted_energy, EnergyBreakdown::default());
        assert!(validate_plan(&plan, &VehicleSpec::field(), &s).is_empty());
    }

    #[test]
    fn empty_plan_is_feasible_and_free() {
        let s = site(Environment::earth(), 10.0);
        let plan = PassPlan::empty(Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        });
        let v = VehicleSpec::reference();
        assert!(validate_plan(&plan, &v, &s).is_empty());
        let e = energy_budget(&plan, &v, &s, &SimParams::default());
        assert_eq!(e, EnergyBreakdown::default());
        let run = execute_plan(&plan, &v, &s, &SimParams::default(), None);
        assert_eq!(run.report.cycles, 0);
        assert_eq!(run.site.terrain.surfaces(), s.terrain.surfaces());
    }

    #[test]
    fn doctrine_band_needs_override() {
        let s = site(Environment::moon(), 40.0);
        let pad = PadSpec::new((0.0, 0.0), 3.0, 0.2);
        let v = VehicleSpec::field();
        assert!(matches!(
            plan_pad(&pad, &v, &s, &SimParams::default(), &PlanOptions::default()),
            Err(Error::Config(_))
        ));
        assert!(plan_pad(&pad, &v, &s, &SimParams::default(), &forced()).is_ok());
    }

    #[test]
    fn unavoidable_long_push_is_a_planning_error() {
        let s = site(Environment::moon(), 40.0);
        let pad = PadSpec::new((0.0, 0.0), 65.0, 0.4);
        match plan_pad(
            &pad,
            &VehicleSpec::field(),
            &s,
            &SimParams::default(),
            &PlanOptions::default(),
        ) {
            Err(Error::Planning(msg)) => assert!(msg.contains("60 m cap"), "{msg}"),
            other => panic!("expected planning error, got {other:?}"),
        }
    }

    #[test]
    fn long_push_is_one_violation() {
        let s = site(Environment::earth(), 20.0);
        let mut plan = PassPlan::empty(Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        });
        plan.passes.push(Pass {
            kind: PassKind::Doze,
            push_distance: 61.0,
            ..Pass::travel((-2.0, 0.0), (2.0, 0.0))
        });
        let v = validate_plan(&plan, &VehicleSpec::reference(), &s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::PushDistance);
        assert!(v[0].message.contains("60 m cap"));
    }

    #[test]
    fn flip_violation_at_offending_pass() {
        let s = site(Environment::earth(), 20.0);
        let v = VehicleSpec::reference();
        assert!((max_thrust_angle(&v) - 30.0).abs() < 1e-9);
        // lift equals weight at W / tan 30° = 1019.5 N
        let limit = s.env.weight(v.mass) / 30f64.to_radians().tan();
        let with_draft = |draft: f64| {
            let mut p = Pass::travel((0.0, 0.0), (1.0, 0.0));
            p.predicted.push(HalfCycleForces {
                phase: StrokePhase::Expanding,
                anchor: (0.0, 0.0),
                friction: false,
                design_draft: draft,
                rolling_draft: 0.0,
                external_draft: draft,
                slip: 0.2,
                advance: 0.8,
                cutting_work: 0.0,
                pushing_work: 0.0,
            });
            p
        };
        let mut plan = PassPlan::empty(Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        });
        plan.passes = vec![
            with_draft(300.0),
            with_draft(limit - 1.0),
            with_draft(limit + 1.0),
        ];
        let found = validate_plan(&plan, &v, &s);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ViolationKind::Flip);
        assert_eq!(found[0].pass, 2);
    }

    #[test]
    fn single_push_budget() {
        let s = site(Environment::earth(), 20.0);
        let v = VehicleSpec::field();
        let params = SimParams {
            rolling_resistance: 0.0,
            extraction_ratio: 0.0,
            ..Default::default()
        };
        let mut plan = PassPlan::empty(Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        });
        plan.passes.push(Pass {
            reference: RefPoint::BladeEdge,
            external_draft: 300.0,
            ..Pass::travel((0.0, 0.0), (2.0, 0.0))
        });
        let e = energy_budget(&plan, &v, &s, &params);
        assert!((e.useful - 600.0).abs() < 1e-9, "{e:?}");
        assert!((e.anchoring - 30.0).abs() < 1e-9);
        assert_eq!(e.extraction, 0.0);
        assert!((e.efficiency.unwrap() - 600.0 / 630.0).abs() < 1e-12);

        let lossy = SimParams {
            extraction_ratio: 0.5,
            ..params
        };
        assert!(energy_budget(&plan, &v, &s, &lossy).efficiency.unwrap() < e.efficiency.unwrap());
    }

    #[test]
    fn deeper_pad_costs_at_least_double_cutting() {
        // firmer below the first layer, so the second layer is not free
        let layer = |thickness, q| SoilLayer {
            thickness,
            cone_resistance: q,
            density_scale: 1.0,
            friction_mu: 0.5,
        };
        let soil = SoilProfile::new(
            "firming",
            vec![layer(0.2, SOFT_Q), layer(0.8, 1.2 * SOFT_Q)],
            None,
            35.0,
            0.1,
        )
        .unwrap();
        let mut s = site(Environment::moon(), 34.0);
        s.soils = SoilMap::uniform(soil);
        let v = VehicleSpec::field();
        let p = SimParams::default();
        let shallow = plan_pad(&PadSpec::new((0.0, 0.0), 4.0, 0.2), &v, &s, &p, &forced()).unwrap();
        let deep = plan_pad(&PadSpec::new((0.0, 0.0), 4.0, 0.4), &v, &s, &p, &forced()).unwrap();
        let (a, b) = (
            shallow.predicted_energy.cutting,
            deep.predicted_energy.cutting,
        );
        assert!(a > 0.0 && b >= 2.0 * a, "{a} -> {b}");
    }

    #[test]
    fn small_pad_executes_as_planned() {
        let s = site(Environment::moon(), 34.0);
        let v = VehicleSpec::field();
        let p = SimParams::default();
        let pad = PadSpec::new((0.0, 0.0), 4.0, 0.3);
        let plan = plan_pad(&pad, &v, &s, &p, &PlanOptions::default()).unwrap();
        assert!(validate_plan(&plan, &v, &s).is_empty());
        assert!(plan
            .passes
            .iter()
            .all(|x| x.kind != PassKind::Doze || x.push_distance <= MAX_PUSH_DISTANCE));
        let run = execute_plan(&plan, &v, &s, &p, None);
        let r = &run.report;
        assert!(r.failure.is_none());
        assert!(r.audit.relative_error < 1e-9 && r.audit.closure_error < 1e-9);
        assert!(r.depth_within_tolerance >= 0.95);
        let soil = SoilProfile::soft();
        assert!(r.max_loose_slope <= soil.repose_angle + 0.5);
        let (planned, done) = (plan.predicted_energy.total, r.energy.total);
        assert!((planned - done).abs() <= 0.1 * done, "{planned} vs {done}");
    }

    #[test]
    fn plans_are_deterministic_and_round_trip() {
        let s = site(Environment::moon(), 34.0);
        let v = VehicleSpec::field();
        let pad = PadSpec::new((0.0, 0.0), 3.0, 0.3);
        let a = plan_pad(&pad, &v, &s, &SimParams::default(), &PlanOptions::default()).unwrap();
        let b = plan_pad(&pad, &v, &s, &SimParams::default(), &PlanOptions::default()).unwrap();
        let text = a.to_text().unwrap();
        assert_eq!(text, b.to_text().unwrap());
        assert_eq!(PassPlan::from_text(&text).unwrap(), a);
    }
}
