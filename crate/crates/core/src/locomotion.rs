//! The push-pull motion cycle.
//!
//! The vehicle is two frames sliding along a common axis. Each half-cycle
//! anchors the spikes of one frame and drives the other frame:
//!
//! * `Expanding`: the rear frame anchors, the front frame (blade) advances.
//! * `Contracting`: the front frame anchors, the rear frame (ripper) follows.
//!
//! A half-cycle is resolved quasi-statically: the anchoring frame first
//! slips backward while its spikes penetrate to holding depth, then the
//! moving frame covers the rest of the stroke in fixed increments with the
//! tool forces recomputed at each increment.

use serde::{Deserialize, Serialize};

use crate::earthworks::{BladeCut, BladeSpec, RipperSpec, Sweep, TerrainGrid};
use crate::error::{domain, Error, Result};
use crate::soil::{Environment, SoilMap, SoilProfile, EARTH_GRAVITY};
use crate::traction::{anchoring_work, flip_margin, ripper_downforce, CycleRecord, SpikeGeometry};

/// Loaded vehicles must stay on slopes at or below this angle, degrees.
pub const LOADED_SLOPE_LIMIT: f64 = 20.0;
/// Demonstrated unloaded climbing capability on granular material, degrees.
pub const UNLOADED_CLIMB_LIMIT: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Front,
    Rear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrokePhase {
    Expanding,
    Contracting,
}

impl StrokePhase {
    pub fn anchoring_frame(self) -> Frame {
        match self {
            Self::Expanding => Frame::Rear,
            Self::Contracting => Frame::Front,
        }
    }

    pub fn moving_frame(self) -> Frame {
        match self {
            Self::Expanding => Frame::Front,
            Self::Contracting => Frame::Rear,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Expanding => Self::Contracting,
            Self::Contracting => Self::Expanding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeMount {
    pub geometry: SpikeGeometry,
    /// Lateral offset from the central axis, m (positive to the left).
    pub lateral_offset: f64,
    /// Longitudinal offset from the frame's centre of friction, m.
    pub longitudinal_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub name: String,
    pub mass: f64,
    /// Relative frame travel per half-cycle, m.
    pub stroke_length: f64,
    /// Distance between the frames' centres of friction when closed, m.
    pub min_separation: f64,
    pub front_spikes: Vec<SpikeMount>,
    pub rear_spikes: Vec<SpikeMount>,
    pub blade: BladeSpec,
    pub ripper: RipperSpec,
    /// Share of the vehicle mass carried by the front frame.
    pub front_mass_fraction: f64,
    pub frame_width: f64,
    /// Transfers vehicle weight onto a spike that cannot enter the crust.
    pub weight_transfer_actuator: bool,
    /// Path curvature per metre of ballast offset from the balance point, 1/m².
    pub curvature_gain: f64,
    /// Ballast offset at which the path runs straight, m.
    pub balance_offset: f64,
}

impl VehicleSpec {
    /// The small trial machine: about 1 m stroke, large double spikes on the
    /// rear frame, small spikes on the front frame.
    pub fn reference() -> Self {
        let g = SpikeGeometry::reference();
        let mount = |lat: f64| SpikeMount {
            geometry: g,
            lateral_offset: lat,
            longitudinal_offset: -0.1,
        };
        Self {
            name: "reference".into(),
            mass: 60.0,
            stroke_length: 1.0,
            min_separation: 0.2,
            front_spikes: vec![mount(0.7), mount(-0.7)],
            rear_spikes: vec![mount(0.7), mount(-0.7)],
            blade: BladeSpec {
                width: 1.0,
                max_cut_depth: 0.10,
                capacity: 0.15,
                offset: 0.6,
                cut_coefficient: 1.5e-3,
                push_friction: 0.4,
                loose_strength_ratio: 0.1,
            },
            ripper: RipperSpec {
                width: 0.3,
                max_depth: 0.2,
                gamma: 20.0,
                offset: 0.4,
                cut_coefficient: 2e-3,
            },
            front_mass_fraction: 0.5,
            frame_width: 1.6,
            weight_transfer_actuator: false,
            curvature_gain: 0.5,
            balance_offset: 0.0,
        }
    }

    /// The solar field machine: frames travel 4 m per half-cycle and the
    /// lever arms are twice as long, halving the thrust angle.
    pub fn field() -> Self {
        let g = SpikeGeometry::reference().with_lever_scale(2.0);
        let mount = |lat: f64| SpikeMount {
            geometry: g,
            lateral_offset: lat,
            longitudinal_offset: -0.1,
        };
        Self {
            name: "field".into(),
            mass: 250.0,
            stroke_length: 4.0,
            min_separation: 0.5,
            front_spikes: vec![mount(1.0), mount(0.4), mount(-0.4), mount(-1.0)],
            rear_spikes: vec![mount(1.0), mount(0.4), mount(-0.4), mount(-1.0)],
            blade: BladeSpec {
                width: 1.5,
                max_cut_depth: 0.15,
                capacity: 1.0,
                offset: 0.8,
                cut_coefficient: 1.5e-3,
                push_friction: 0.4,
                loose_strength_ratio: 0.1,
            },
            ripper: RipperSpec {
                width: 1.5,
                max_depth: 0.30,
                gamma: 20.0,
                offset: 0.5,
                cut_coefficient: 2e-3,
            },
            front_mass_fraction: 0.5,
            frame_width: 2.4,
            weight_transfer_actuator: false,
            curvature_gain: 0.3,
            balance_offset: 0.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "reference" => Some(Self::reference()),
            "field" => Some(Self::field()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("vehicle '{}': {m}", self.name)));
        if !(self.mass > 0.0) {
            return bad("mass must be > 0");
        }
        if !(self.stroke_length > 0.0) {
            return bad("stroke length must be > 0");
        }
        if !(self.min_separation > 0.0) {
            return bad("minimum separation must be > 0");
        }
        if self.front_spikes.is_empty() || self.rear_spikes.is_empty() {
            return bad("each frame needs at least one spike");
        }
        if !(0.0..=1.0).contains(&self.front_mass_fraction) {
            return bad("front mass fraction must lie in [0, 1]");
        }
        for m in self.front_spikes.iter().chain(&self.rear_spikes) {
            let g = &m.geometry;
            if !(g.rake_alpha_surface < g.rake_alpha_full) {
                return bad("spike rake must steepen with depth");
            }
            if !(g.max_depth > 0.0 && g.tip_area > 0.0 && g.bearing_width > 0.0) {
                return bad("spike depth, tip area and bearing width must be > 0");
            }
        }
        if !(self.blade.capacity > 0.0 && self.blade.width > 0.0) {
            return bad("blade width and capacity must be > 0");
        }
        if !(self.ripper.max_depth > 0.0 && (0.0..90.0).contains(&self.ripper.gamma)) {
            return bad("ripper depth must be > 0 and gamma in [0, 90)");
        }
        Ok(())
    }

    pub fn max_separation(&self) -> f64 {
        self.min_separation + self.stroke_length
    }

    pub fn spike_count(&self) -> usize {
        self.front_spikes.len() + self.rear_spikes.len()
    }

    /// Frame and mount of the spike with global index `i` (front spikes
    /// first).
    pub fn spike(&self, i: usize) -> (Frame, &SpikeMount) {
        let nf = self.front_spikes.len();
        if i < nf {
            (Frame::Front, &self.front_spikes[i])
        } else {
            (Frame::Rear, &self.rear_spikes[i - nf])
        }
    }

    pub fn frame_spikes(&self, frame: Frame) -> std::ops::Range<usize> {
        let nf = self.front_spikes.len();
        match frame {
            Frame::Front => 0..nf,
            Frame::Rear => nf..nf + self.rear_spikes.len(),
        }
    }

    pub fn frame_mass(&self, frame: Frame) -> f64 {
        match frame {
            Frame::Front => self.mass * self.front_mass_fraction,
            Frame::Rear => self.mass * (1.0 - self.front_mass_fraction),
        }
    }

    /// Overall body length used for pitch estimates, m.
    pub fn body_length(&self) -> f64 {
        self.max_separation() + self.blade.offset + self.ripper.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpikeState {
    Raised,
    Sliding,
    Penetrating { depth: f64 },
    Anchored { depth: f64, world_point: (f64, f64) },
    Extracting { depth: f64 },
}

impl SpikeState {
    pub fn is_anchored(&self) -> bool {
        matches!(self, Self::Anchored { .. })
    }

    pub fn depth(&self) -> Option<f64> {
        match *self {
            Self::Penetrating { depth } | Self::Extracting { depth } => Some(depth),
            Self::Anchored { depth, .. } => Some(depth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Degrees counter-clockwise from +x.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Rear frame centre of friction.
    pub rear: (f64, f64),
    pub heading: f64,
    /// Distance between the frames' centres of friction.
    pub separation: f64,
    pub phase: StrokePhase,
    pub spikes: Vec<SpikeState>,
    pub prism: crate::earthworks::BladeLoad,
    pub stuck: bool,
    pub half_cycles: u64,
}

pub(crate) fn unit(heading: f64) -> (f64, f64) {
    let h = heading.to_radians();
    (h.cos(), h.sin())
}

fn rotate(v: (f64, f64), heading: f64) -> (f64, f64) {
    let (c, s) = unit(heading);
    (c * v.0 - s * v.1, s * v.0 + c * v.1)
}

/// Wrap an angle to (-180, 180].
pub fn wrap_degrees(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

impl VehicleState {
    /// Closed vehicle whose frame midpoint sits at `at`.
    pub fn new(spec: &VehicleSpec, at: (f64, f64), heading: f64) -> Self {
        let s = spec.min_separation;
        let (ux, uy) = unit(heading);
        Self {
            rear: (at.0 - 0.5 * s * ux, at.1 - 0.5 * s * uy),
            heading,
            separation: s,
            phase: StrokePhase::Expanding,
            spikes: vec![SpikeState::Raised; spec.spike_count()],
            prism: Default::default(),
            stuck: false,
            half_cycles: 0,
        }
    }

    pub fn front(&self) -> (f64, f64) {
        let (ux, uy) = unit(self.heading);
        (
            self.rear.0 + self.separation * ux,
            self.rear.1 + self.separation * uy,
        )
    }

    pub fn frame_center(&self, frame: Frame) -> (f64, f64) {
        match frame {
            Frame::Front => self.front(),
            Frame::Rear => self.rear,
        }
    }

    /// Midpoint between the two centres of friction, with the heading.
    pub fn pose(&self) -> Pose {
        let f = self.front();
        Pose {
            x: 0.5 * (f.0 + self.rear.0),
            y: 0.5 * (f.1 + self.rear.1),
            heading: self.heading,
        }
    }

    pub fn stroke_position(&self, spec: &VehicleSpec) -> f64 {
        self.separation - spec.min_separation
    }

    /// World position of a spike's mount given the current frame poses.
    pub fn mount_point(&self, spec: &VehicleSpec, i: usize) -> (f64, f64) {
        let (frame, m) = spec.spike(i);
        let c = self.frame_center(frame);
        let o = rotate((m.longitudinal_offset, m.lateral_offset), self.heading);
        (c.0 + o.0, c.1 + o.1)
    }

    pub fn blade_edge(&self, spec: &VehicleSpec) -> (f64, f64) {
        let f = self.front();
        let (ux, uy) = unit(self.heading);
        (f.0 + spec.blade.offset * ux, f.1 + spec.blade.offset * uy)
    }

    pub fn ripper_tine(&self, spec: &VehicleSpec) -> (f64, f64) {
        let (ux, uy) = unit(self.heading);
        (
            self.rear.0 - spec.ripper.offset * ux,
            self.rear.1 - spec.ripper.offset * uy,
        )
    }

    pub fn anchored_spikes(&self) -> Vec<usize> {
        (0..self.spikes.len())
            .filter(|&i| self.spikes[i].is_anchored())
            .collect()
    }
}

/// Which spikes of the anchoring frame engage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeSelection {
    #[default]
    All,
    /// Index within the anchoring frame's spike list.
    Single(usize),
    Subset(Vec<usize>),
}

impl SpikeSelection {
    fn resolve(&self, spec: &VehicleSpec, frame: Frame) -> Result<Vec<usize>> {
        let range = spec.frame_spikes(frame);
        let n = range.len();
        let pick = |k: usize| {
            if k < n {
                Ok(range.start + k)
            } else {
                domain(format!("spike {k} not on {frame:?} frame ({n} spikes)"))
            }
        };
        match self {
            Self::All => Ok(range.collect()),
            Self::Single(k) => Ok(vec![pick(*k)?]),
            Self::Subset(ks) => ks.iter().map(|&k| pick(k)).collect(),
        }
    }
}

/// Numerical and accounting parameters of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Quasi-static stroke increment, m.
    pub stroke_increment: f64,
    /// Extraction work as a fraction of anchoring work.
    pub extraction_ratio: f64,
    /// Drivetrain efficiency applied to motor work.
    pub motor_efficiency: f64,
    /// Rolling/drag resistance of the moving frame as a fraction of its weight.
    pub rolling_resistance: f64,
    /// Turn-in-place stops once the heading error is below this, degrees.
    pub heading_tolerance: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            stroke_increment: 0.01,
            extraction_ratio: 0.5,
            motor_efficiency: 1.0,
            rolling_resistance: 0.05,
            heading_tolerance: 2.0,
        }
    }
}

/// Ground the vehicle operates on.
#[derive(Debug, Clone)]
pub struct Site {
    pub terrain: TerrainGrid,
    pub soils: SoilMap,
    pub env: Environment,
}

impl Site {
    pub fn profile_at(&self, p: (f64, f64)) -> &SoilProfile {
        self.soils.profile_at(p.0, p.1)
    }
}

/// Ripper engagement for a pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipCut {
    pub depth: f64,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub region: Option<crate::earthworks::Disc>,
}

/// Tool engagement that persists over the half-cycles of one pass.
#[derive(Debug, Clone)]
pub struct ToolSession {
    pub blade: Option<BladeCut>,
    pub ripper: Option<RipCut>,
    /// Reduce the blade cut so the prism never overflows.
    pub fit_to_capacity: bool,
    /// Prism volume to stop loading at, if below the blade capacity.
    pub load_limit: Option<f64>,
    /// Footprint cells the tools passed over, in visiting order.
    pub touched: Vec<usize>,
    blade_sweep: Sweep,
    rip_sweep: Sweep,
}

impl ToolSession {
    pub fn new(terrain: &TerrainGrid, blade: Option<BladeCut>, ripper: Option<RipCut>) -> Self {
        Self {
            blade,
            ripper,
            fit_to_capacity: true,
            load_limit: None,
            touched: Vec::new(),
            blade_sweep: Sweep::new(terrain.len()),
            rip_sweep: Sweep::new(terrain.len()),
        }
    }

    /// Start a new pass with different tool settings, reusing the buffers.
    /// Effective loading limit for a blade of `capacity`.
    pub fn loading_limit(&self, capacity: f64) -> f64 {
        self.load_limit.map_or(capacity, |l| l.min(capacity))
    }

    pub fn restart(&mut self, blade: Option<BladeCut>, ripper: Option<RipCut>) {
        self.blade = blade;
        self.ripper = ripper;
        self.load_limit = None;
        self.touched.clear();
        self.blade_sweep.begin();
        self.rip_sweep.begin();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeCommand {
    pub selection: SpikeSelection,
    /// Relative frame travel; `None` runs to the end of the stroke.
    pub travel: Option<f64>,
    /// Constant drawbar load on the moving frame, N.
    pub external_draft: f64,
    /// Path curvature from draft balancing, 1/m.
    pub curvature: f64,
}

impl Default for StrokeCommand {
    fn default() -> Self {
        Self {
            selection: SpikeSelection::All,
            travel: None,
            external_draft: 0.0,
            curvature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfCycleOutcome {
    pub record: CycleRecord,
    pub phase: StrokePhase,
    /// Spikes that penetrated and anchored during this half-cycle.
    pub anchored: Vec<usize>,
    /// Traction came from surface friction instead of anchors.
    pub friction_traction: bool,
    /// Largest distance an anchored spike mount moved from its anchor
    /// point over the half-cycle, m.
    pub anchor_drift: f64,
}

/// Upper bound of the tool draft the moving frame meets over `travel`.
pub fn tool_draft_bound(
    spec: &VehicleSpec,
    state: &VehicleState,
    site: &Site,
    phase: StrokePhase,
    tools: Option<&ToolSession>,
    travel: f64,
) -> (f64, f64) {
    let Some(tools) = tools else {
        return (0.0, 0.0);
    };
    let prism = state.prism.prism_volume;
    let t = &site.terrain;
    let cs = t.spec.cell_size;
    match phase {
        StrokePhase::Expanding => match tools.blade {
            Some(cut) if cut.depth > 0.0 || prism > 0.0 => {
                let b = &spec.blade;
                let cut = BladeCut {
                    depth: cut.depth.min(b.max_cut_depth),
                    ..cut
                };
                // the blade's design draft is set by the worst column it meets this stroke
                let (edge, (ux, uy)) = (state.blade_edge(spec), unit(state.heading));
                let n = ((travel + cs) / (0.5 * cs)).ceil() as usize;
                let mut cells: Vec<usize> = (0..=n)
                    .flat_map(|k| {
                        let s = 0.5 * cs * k as f64;
                        t.footprint((edge.0 + s * ux, edge.1 + s * uy), state.heading, b.width)
                    })
                    .collect();
                cells.sort_unstable();
                cells.dedup();
                let resistance = t.blade_resistance(&cells, &cut, b, &site.soils);
                let fill = (prism + b.width * cut.depth * t.swell_factor * travel)
                    .min(tools.loading_limit(b.capacity))
                    .max(prism);
                let rho = t.loose_bulk_density(&site.soils);
                (
                    b.cut_coefficient * b.width * resistance
                        + b.push_friction * fill * rho * site.env.gravity,
                    0.0,
                )
            }
            _ => (0.0, 0.0),
        },
        StrokePhase::Contracting => match tools.ripper {
            Some(rip) if rip.depth > 0.0 => {
                let r = &spec.ripper;
                // strongest soil the tine can reach during this stroke
                let q = site
                    .soils
                    .max_resistance_within(state.ripper_tine(spec), travel + r.width + cs);
                let f = r.cut_coefficient * r.width * rip.depth.min(r.max_depth) * q;
                (0.0, f)
            }
            _ => (0.0, 0.0),
        },
    }
}

/// Rolling draft of the frame that moves in `phase`.
pub fn rolling_draft(
    spec: &VehicleSpec,
    env: &Environment,
    params: &SimParams,
    phase: StrokePhase,
) -> f64 {
    params.rolling_resistance * env.weight(spec.frame_mass(phase.moving_frame()))
}

struct AnchorPlan {
    spikes: Vec<(usize, f64)>,
    work: f64,
    slip: f64,
    max_beta: f64,
}

/// Decide which spikes anchor and how deep, or `None` when they cannot hold
/// `draft`. Breaks crust where the tip stress allows it.
fn plan_anchors(
    state: &VehicleState,
    spec: &VehicleSpec,
    site: &mut Site,
    selected: &[usize],
    draft: f64,
) -> Result<Option<AnchorPlan>> {
    let frame_weight = site.env.weight(spec.frame_mass(spec.spike(selected[0]).0));
    let share = frame_weight / selected.len() as f64;
    let mut usable = Vec::new();
    for &i in selected {
        let p = state.mount_point(spec, i);
        let profile = site.profile_at(p);
        let Some(cell) = site.terrain.spec.cell_of(p.0, p.1) else {
            continue;
        };
        if profile.duricrust.is_some() && !site.terrain.crust_broken(cell) {
            let m = spec.spike(i).1;
            let mut normal = m.geometry.spike_weight_force * site.env.gravity / EARTH_GRAVITY;
            if spec.weight_transfer_actuator {
                normal += share;
            }
            if !profile.duricrust_break_check(normal, m.geometry.tip_area) {
                continue;
            }
            site.terrain.break_crust(cell);
        }
        usable.push(i);
    }
    if usable.is_empty() {
        return Ok(None);
    }
    let per = draft / usable.len() as f64;
    let mut plan = AnchorPlan {
        spikes: Vec::new(),
        work: 0.0,
        slip: 0.0,
        max_beta: 0.0,
    };
    for &i in &usable {
        let p = state.mount_point(spec, i);
        let profile = site.profile_at(p);
        let g = &spec.spike(i).1.geometry;
        let Some(depth) = g.anchoring_depth(per, profile) else {
            return Ok(None);
        };
        plan.work += anchoring_work(per, profile);
        plan.max_beta = plan.max_beta.max(g.thrust_angle(depth)?);
        plan.spikes.push((i, depth));
    }
    plan.slip = if draft > 0.0 {
        2.0 * plan.work / draft
    } else {
        0.0
    };
    Ok(Some(plan))
}

/// Resolve one half-stroke.
///
/// Returns an outcome with `record.stuck` set (and the pose unchanged) when
/// neither anchors nor surface friction can react the draft; a flip
/// instability aborts with [`Error::Flip`].
pub fn half_cycle(
    state: &mut VehicleState,
    spec: &VehicleSpec,
    site: &mut Site,
    cmd: &StrokeCommand,
    mut tools: Option<&mut ToolSession>,
    params: &SimParams,
) -> Result<HalfCycleOutcome> {
    if state.stuck {
        return Err(Error::Stuck {
            half_cycle: state.half_cycles,
            reason: "vehicle already stuck".into(),
        });
    }
    let index = state.half_cycles;
    let phase = state.phase;
    let anchor_frame = phase.anchoring_frame();
    let moving_frame = phase.moving_frame();
    let remaining = match phase {
        StrokePhase::Expanding => spec.max_separation() - state.separation,
        StrokePhase::Contracting => state.separation - spec.min_separation,
    }
    .max(0.0);
    let travel = cmd.travel.map_or(remaining, |t| t.clamp(0.0, remaining));

    let mut rec = CycleRecord {
        half_cycle: index,
        ..Default::default()
    };

    for i in spec.frame_spikes(moving_frame) {
        if let Some(depth) = state.spikes[i].depth() {
            state.spikes[i] = SpikeState::Extracting { depth };
        }
        state.spikes[i] = SpikeState::Raised;
    }
    let selected = cmd.selection.resolve(spec, anchor_frame)?;
    if selected.is_empty() {
        return domain("spike selection is empty");
    }
    for i in spec.frame_spikes(anchor_frame) {
        state.spikes[i] = if selected.contains(&i) {
            SpikeState::Sliding
        } else {
            SpikeState::Raised
        };
    }

    let rolling = rolling_draft(spec, &site.env, params, phase);
    let (blade_bound, ripper_bound) =
        tool_draft_bound(spec, state, site, phase, tools.as_deref(), travel);
    let draft = cmd.external_draft + rolling + blade_bound + ripper_bound;
    rec.draft = draft;

    let weight = site.env.weight(spec.mass);
    let mut anchored = Vec::new();
    let mut friction_traction = false;
    let mut pivot: Option<usize> = None;

    if draft > 0.0 {
        match plan_anchors(state, spec, site, &selected, draft)? {
            Some(plan) => {
                let effective_weight = weight + ripper_downforce(ripper_bound, spec.ripper.gamma);
                let flip = flip_margin(draft, plan.max_beta, effective_weight);
                if !flip.stable {
                    return Err(Error::Flip {
                        half_cycle: index,
                        lift: draft * plan.max_beta.to_radians().tan(),
                        weight: effective_weight,
                    });
                }
                let (slip, work, scale) = if plan.slip <= travel || plan.slip == 0.0 {
                    (plan.slip, plan.work, 1.0)
                } else {
                    let r = travel / plan.slip;
                    (travel, plan.work * r * r, r)
                };
                let n = ((slip / params.stroke_increment).ceil() as usize).max(1);
                rec.draft_trace = (0..=n)
                    .map(|j| {
                        let t = j as f64 / n as f64;
                        (t * slip, t * scale * draft)
                    })
                    .collect();
                rec.slip = slip;
                rec.anchoring_work = work;
                rec.extraction_work = params.extraction_ratio * work;

                // anchoring frame slides back while its spikes bite
                let (ux, uy) = unit(state.heading);
                match anchor_frame {
                    Frame::Rear => {
                        state.rear = (state.rear.0 - slip * ux, state.rear.1 - slip * uy);
                        state.separation += slip;
                    }
                    Frame::Front => state.separation -= slip,
                }
                for &(i, depth) in &plan.spikes {
                    let d = depth * scale;
                    state.spikes[i] = SpikeState::Penetrating { depth: d };
                    state.spikes[i] = SpikeState::Anchored {
                        depth: d,
                        world_point: state.mount_point(spec, i),
                    };
                    if d > 0.0 {
                        anchored.push(i);
                    }
                }
                if plan.spikes.len() == 1 && spec.spike(plan.spikes[0].0).1.lateral_offset != 0.0 {
                    pivot = Some(plan.spikes[0].0);
                }
            }
            None => {
                let center = state.frame_center(anchor_frame);
                let mu = site.profile_at(center).surface_friction();
                let friction = mu * site.env.weight(spec.frame_mass(anchor_frame));
                if friction >= draft {
                    friction_traction = true;
                } else {
                    state.stuck = true;
                    rec.stuck = true;
                    state.half_cycles += 1;
                    return Ok(HalfCycleOutcome {
                        record: rec,
                        phase,
                        anchored,
                        friction_traction,
                        anchor_drift: 0.0,
                    });
                }
            }
        }
    } else {
        // nothing to react: the spikes rest on the surface
        for &i in &selected {
            state.spikes[i] = SpikeState::Anchored {
                depth: 0.0,
                world_point: state.mount_point(spec, i),
            };
        }
        if selected.len() == 1 && spec.spike(selected[0]).1.lateral_offset != 0.0 {
            pivot = Some(selected[0]);
        }
    }

    let advance = (travel - rec.slip).max(0.0);
    rec.stroke_advance = advance;
    if advance > 0.0 {
        let n = ((advance / params.stroke_increment).ceil() as usize).max(1);
        let ds = advance / n as f64;
        let sign = match phase {
            StrokePhase::Expanding => 1.0,
            StrokePhase::Contracting => -1.0,
        };
        for _ in 0..n {
            match pivot {
                Some(p) => rotate_about_anchor(state, p, sign * ds, spec)?,
                None => step_straight(state, phase, ds, cmd.curvature),
            }
            rec.useful_work += (rolling + cmd.external_draft) * ds;
            if let Some(t) = tools.as_deref_mut() {
                let (cut, push) = tool_increment(state, spec, site, t, phase, ds);
                rec.cutting_work += cut;
                rec.pushing_work += push.0;
                rec.spilled += push.1;
            }
        }
        rec.useful_work += rec.cutting_work + rec.pushing_work;
    }

    let anchor_drift = state
        .anchored_spikes()
        .into_iter()
        .filter_map(|i| match state.spikes[i] {
            SpikeState::Anchored { world_point, .. } => {
                let m = state.mount_point(spec, i);
                Some((m.0 - world_point.0).hypot(m.1 - world_point.1))
            }
            _ => None,
        })
        .fold(0.0, f64::max);
    state.phase = phase.flipped();
    state.half_cycles += 1;
    Ok(HalfCycleOutcome {
        anchor_drift,
        record: rec,
        phase,
        anchored,
        friction_traction,
    })
}

fn step_straight(state: &mut VehicleState, phase: StrokePhase, ds: f64, curvature: f64) {
    match phase {
        StrokePhase::Expanding => {
            state.heading += (curvature * ds).to_degrees();
            state.separation += ds;
        }
        StrokePhase::Contracting => {
            let front = state.front();
            state.heading += (curvature * ds).to_degrees();
            state.separation -= ds;
            let (ux, uy) = unit(state.heading);
            state.rear = (
                front.0 - state.separation * ux,
                front.1 - state.separation * uy,
            );
        }
    }
}

/// Apply the tools carried by the moving frame over one increment.
/// Returns (cutting work, (prism pushing work, spilled volume)).
fn tool_increment(
    state: &mut VehicleState,
    spec: &VehicleSpec,
    site: &mut Site,
    tools: &mut ToolSession,
    phase: StrokePhase,
    ds: f64,
) -> (f64, (f64, f64)) {
    match phase {
        StrokePhase::Expanding => {
            let Some(cut) = tools.blade else {
                return (0.0, (0.0, 0.0));
            };
            let edge = state.blade_edge(spec);
            let cells = site
                .terrain
                .footprint(edge, state.heading, spec.blade.width);
            let mut cut = BladeCut {
                depth: cut.depth.min(spec.blade.max_cut_depth),
                ..cut
            };
            if tools.fit_to_capacity {
                cut.depth = fit_cut_depth(
                    &site.terrain,
                    &cells,
                    cut,
                    &tools.blade_sweep,
                    tools.loading_limit(spec.blade.capacity) - state.prism.prism_volume,
                );
            }
            tools.touched.extend_from_slice(&cells);
            let step = site.terrain.blade_cut_and_push(
                &mut state.prism,
                &spec.blade,
                &cells,
                &cut,
                &site.soils,
                &mut tools.blade_sweep,
                (edge, state.heading),
                site.env.gravity,
                ds,
            );
            (
                step.cut_work,
                (step.draft * ds - step.cut_work, step.spilled),
            )
        }
        StrokePhase::Contracting => {
            let Some(rip) = tools.ripper else {
                return (0.0, (0.0, 0.0));
            };
            let tine = state.ripper_tine(spec);
            let cells = site
                .terrain
                .footprint(tine, state.heading, spec.ripper.width);
            tools.touched.extend_from_slice(&cells);
            let step = site.terrain.rip_step(
                &spec.ripper,
                &cells,
                rip.depth.min(spec.ripper.max_depth),
                rip.floor,
                rip.region,
                &site.soils,
                &mut tools.rip_sweep,
                ds,
            );
            (step.cut_work, (0.0, 0.0))
        }
    }
}

/// Largest cut depth (≤ the commanded one) whose intake fits in `room`.
pub fn fit_cut_depth(
    terrain: &TerrainGrid,
    cells: &[usize],
    cut: BladeCut,
    sweep: &Sweep,
    room: f64,
) -> f64 {
    if room <= 1e-12 {
        return 0.0;
    }
    if terrain.blade_intake(cells, &cut, sweep) <= room {
        return cut.depth;
    }
    let (mut lo, mut hi) = (0.0, cut.depth);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let probe = BladeCut { depth: mid, ..cut };
        if terrain.blade_intake(cells, &probe, sweep) <= room {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Body-frame vector from an anchored spike's mount to the free frame's
/// centre of friction at separation `s`.
fn anchor_to_free(spec: &VehicleSpec, spike: usize, s: f64) -> (f64, f64) {
    let (frame, m) = spec.spike(spike);
    let sign = match frame {
        Frame::Rear => 1.0,
        Frame::Front => -1.0,
    };
    (sign * s - m.longitudinal_offset, -m.lateral_offset)
}

/// Heading change (degrees) produced by changing the separation from
/// `s_from` to `s_to` while pivoting on `spike`.
pub fn rotation_for(spec: &VehicleSpec, spike: usize, s_from: f64, s_to: f64) -> f64 {
    let a = anchor_to_free(spec, spike, s_from);
    let b = anchor_to_free(spec, spike, s_to);
    wrap_degrees(a.1.atan2(a.0).to_degrees() - b.1.atan2(b.0).to_degrees())
}

/// Change the frame separation by `stroke_delta` while the anchored spike
/// `spike` stays fixed. The free frame's centre of friction moves on the
/// line through itself and the anchor; the axis, and with it the heading,
/// rotates about the anchor.
pub fn rotate_about_anchor(
    state: &mut VehicleState,
    spike: usize,
    stroke_delta: f64,
    spec: &VehicleSpec,
) -> Result<()> {
    let SpikeState::Anchored {
        world_point: anchor,
        ..
    } = state.spikes[spike]
    else {
        return domain(format!("spike {spike} is not anchored"));
    };
    let (frame, m) = spec.spike(spike);
    let v_old = anchor_to_free(spec, spike, state.separation);
    if v_old.0.hypot(v_old.1) < 1e-9 {
        return Err(Error::Degenerate(
            "anchor coincides with the free frame's centre of friction".into(),
        ));
    }
    let s_new = state.separation + stroke_delta;
    let v_new = anchor_to_free(spec, spike, s_new);
    if v_new.0.hypot(v_new.1) < 1e-9 {
        return Err(Error::Degenerate(
            "stroke would bring the free frame onto the anchor".into(),
        ));
    }
    let world_dir = state.heading + v_old.1.atan2(v_old.0).to_degrees();
    let heading = world_dir - v_new.1.atan2(v_new.0).to_degrees();
    let o = rotate((m.longitudinal_offset, m.lateral_offset), heading);
    let anchored_center = (anchor.0 - o.0, anchor.1 - o.1);
    state.heading = heading;
    state.separation = s_new;
    state.rear = match frame {
        Frame::Rear => anchored_center,
        Frame::Front => {
            let (ux, uy) = unit(heading);
            (
                anchored_center.0 - s_new * ux,
                anchored_center.1 - s_new * uy,
            )
        }
    };
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    /// Push-pull cycles used (half-cycles rounded up to pairs).
    pub cycles: usize,
    pub half_cycles: Vec<HalfCycleOutcome>,
}

/// Turn on the spot by anchoring a single off-axis spike per half-cycle,
/// picking the side that rotates toward the target.
pub fn turn_in_place(
    state: &mut VehicleState,
    target_heading: f64,
    spec: &VehicleSpec,
    site: &mut Site,
    params: &SimParams,
) -> Result<TurnOutcome> {
    let mut out = TurnOutcome {
        cycles: 0,
        half_cycles: Vec::new(),
    };
    if wrap_degrees(target_heading - state.heading).abs() < params.heading_tolerance {
        return Ok(out);
    }
    let off_axis = |f: Frame| {
        spec.frame_spikes(f)
            .any(|i| spec.spike(i).1.lateral_offset != 0.0)
    };
    if !off_axis(Frame::Front) || !off_axis(Frame::Rear) {
        return domain("turning in place needs an off-axis spike on each frame");
    }
    for _ in 0..200 {
        let err = wrap_degrees(target_heading - state.heading);
        if err.abs() < params.heading_tolerance {
            break;
        }
        let phase = state.phase;
        let frame = phase.anchoring_frame();
        let rolling = rolling_draft(spec, &site.env, params, phase);
        let (s0, s_end) = match phase {
            StrokePhase::Expanding => (state.separation, spec.max_separation()),
            StrokePhase::Contracting => (state.separation, spec.min_separation),
        };
        let dir = if s_end >= s0 { 1.0 } else { -1.0 };
        let mut best: Option<(usize, f64, f64)> = None;
        for (k, i) in spec.frame_spikes(frame).enumerate() {
            if spec.spike(i).1.lateral_offset == 0.0 {
                continue;
            }
            let profile = site.profile_at(state.mount_point(spec, i));
            let slip = crate::traction::anchoring_slip(rolling, profile);
            let s_start = s0 + dir * slip;
            if (s_end - s_start) * dir <= 0.0 {
                continue;
            }
            let rot = rotation_for(spec, i, s_start, s_end);
            let gain = rot * err.signum();
            if best.is_none_or(|b| gain > b.1) {
                best = Some((k, gain, slip));
            }
        }
        let cmd = match best {
            Some((k, gain, slip)) if gain > 0.0 => {
                let i = spec.frame_spikes(frame).start + k;
                let s_start = s0 + dir * slip;
                let travel = if gain > err.abs() {
                    // solve for the stroke that lands on the target
                    let (mut lo, mut hi) = (0.0, (s_end - s_start).abs());
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        let r = rotation_for(spec, i, s_start, s_start + dir * mid).abs();
                        if r < err.abs() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    Some(slip + hi)
                } else {
                    None
                };
                StrokeCommand {
                    selection: SpikeSelection::Single(k),
                    travel,
                    ..Default::default()
                }
            }
            _ => StrokeCommand::default(),
        };
        let o = half_cycle(state, spec, site, &cmd, None, params)?;
        let stuck = o.record.stuck;
        out.half_cycles.push(o);
        if stuck {
            return Err(Error::Stuck {
                half_cycle: state.half_cycles,
                reason: "no traction while turning".into(),
            });
        }
    }
    out.cycles = out.half_cycles.len().div_ceil(2);
    Ok(out)
}

/// Signed path curvature from shifting ballast laterally on the frame.
/// Zero at the balance offset; sign flips across it.
pub fn draft_balance_curvature(lateral_weight_offset: f64, spec: &VehicleSpec) -> f64 {
    debug_assert!(lateral_weight_offset.abs() <= 0.5 * spec.frame_width + 1e-12);
    spec.curvature_gain * (lateral_weight_offset - spec.balance_offset)
}

/// Ballast offset that produces `curvature`, clamped to the frame.
pub fn ballast_for_curvature(curvature: f64, spec: &VehicleSpec) -> f64 {
    let half = 0.5 * spec.frame_width;
    (spec.balance_offset + curvature / spec.curvature_gain).clamp(-half, half)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraverseCheck {
    pub pass: bool,
    pub flip_margin: f64,
    pub reason: Option<String>,
}

/// Whether the vehicle can climb `slope` degrees, loaded or empty.
///
/// Loaded work is limited to 20°. Unloaded climbing is allowed up to the
/// larger of the demonstrated 40° and the soil's angle of repose. On top of
/// that the lift from the downslope weight component plus any pushing load
/// must stay below the slope-normal weight.
pub fn traverse_check(
    slope: f64,
    loaded: bool,
    soil: &SoilProfile,
    spec: &VehicleSpec,
    env: &Environment,
) -> TraverseCheck {
    debug_assert!((0.0..90.0).contains(&slope));
    let limit = if loaded {
        LOADED_SLOPE_LIMIT
    } else {
        UNLOADED_CLIMB_LIMIT.max(soil.repose_angle)
    };
    let fail = |m: f64, r: String| TraverseCheck {
        pass: false,
        flip_margin: m,
        reason: Some(r),
    };
    let theta = slope.to_radians();
    let weight = env.weight(spec.mass);
    let mut draft = weight * theta.sin();
    if loaded {
        let rho = soil.bank_density / 1.3;
        draft += spec.blade.push_friction * spec.blade.capacity * rho * env.gravity;
    }
    let n = spec.rear_spikes.len() as f64;
    let g = &spec.rear_spikes[0].geometry;
    // anchors that cannot hold the load bite to full depth, the steepest lever
    let depth = g.anchoring_depth(draft / n, soil).unwrap_or(g.max_depth);
    let beta = g.thrust_angle(depth).unwrap_or(90.0);
    let margin = flip_margin(draft, beta, weight * theta.cos()).margin;
    if slope > limit {
        return fail(margin, format!("slope {slope}° exceeds the {limit}° limit"));
    }
    if margin <= 0.0 {
        return fail(
            margin,
            format!("flip margin {margin:.1} N on a {slope}° slope"),
        );
    }
    TraverseCheck {
        pass: true,
        flip_margin: margin,
        reason: None,
    }
}
