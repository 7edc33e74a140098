//! Runs passes against the simulator: path following, turns, tool use and
//! deposits, with per-half-cycle logs.

use serde::{Deserialize, Serialize};

use crate::earthworks::BladeCut;
use crate::error::{Error, Result};
use crate::locomotion::{
    draft_balance_curvature, half_cycle, rolling_draft, turn_in_place, unit, wrap_degrees,
    HalfCycleOutcome, Pose, RipCut, SimParams, Site, StrokeCommand, StrokePhase, ToolSession,
    VehicleSpec, VehicleState,
};
use crate::planner::{HalfCycleForces, Pass, PassKind, RefPoint};
use crate::sensing::{EventRecord, Sensor};
use crate::traction::CycleRecord;

/// Along-track distance at which a segment counts as reached, m.
const ARRIVAL_TOLERANCE: f64 = 0.01;
/// Half-cycles without progress before a segment is abandoned as stuck.
const STALL_LIMIT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub half_cycle: u64,
    pub pass: usize,
    pub phase: StrokePhase,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub separation: f64,
    pub slip: f64,
    pub advance: f64,
}

/// Mutable simulation context: one vehicle on one site.
#[derive(Debug, Clone)]
pub struct Mission {
    pub spec: VehicleSpec,
    pub state: VehicleState,
    pub site: Site,
    pub params: SimParams,
    pub sensor: Option<Sensor>,
    pub events: Vec<EventRecord>,
    pub records: Vec<CycleRecord>,
    pub trajectory: Vec<TrajectoryRow>,
    session: ToolSession,
    pass_index: usize,
}

impl Mission {
    pub fn new(spec: VehicleSpec, state: VehicleState, site: Site, params: SimParams) -> Self {
        let session = ToolSession::new(&site.terrain, None, None);
        Self {
            spec,
            state,
            site,
            params,
            sensor: None,
            events: Vec::new(),
            records: Vec::new(),
            trajectory: Vec::new(),
            session,
            pass_index: 0,
        }
    }

    pub fn with_sensor(mut self, sensor: Sensor) -> Self {
        self.sensor = Some(sensor);
        self
    }

    pub fn pose(&self) -> Pose {
        self.state.pose()
    }

    /// Point a pass reference tracks.
    pub fn reference_point(&self, r: RefPoint) -> (f64, f64) {
        match r {
            RefPoint::Pose => {
                let p = self.state.pose();
                (p.x, p.y)
            }
            RefPoint::BladeEdge => self.state.blade_edge(&self.spec),
            RefPoint::RipperTine => self.state.ripper_tine(&self.spec),
        }
    }

    /// One logged half-cycle with the current tool session.
    pub fn stroke(&mut self, cmd: &StrokeCommand, use_tools: bool) -> Result<HalfCycleOutcome> {
        let tools = if use_tools {
            Some(&mut self.session)
        } else {
            None
        };
        let o = half_cycle(
            &mut self.state,
            &self.spec,
            &mut self.site,
            cmd,
            tools,
            &self.params,
        )?;
        self.log(&o);
        if o.record.stuck {
            return Err(Error::Stuck {
                half_cycle: o.record.half_cycle,
                reason: "anchors and surface friction cannot react the draft".into(),
            });
        }
        Ok(o)
    }

    fn log(&mut self, o: &HalfCycleOutcome) {
        let p = self.state.pose();
        self.trajectory.push(TrajectoryRow {
            half_cycle: o.record.half_cycle,
            pass: self.pass_index,
            phase: o.phase,
            x: p.x,
            y: p.y,
            heading: p.heading,
            separation: self.state.separation,
            slip: o.record.slip,
            advance: o.record.stroke_advance,
        });
        if let Some(sensor) = self.sensor.as_mut() {
            for &i in &o.anchored {
                // anchors outside the grid carry no terrain to sample
                if let Ok(e) =
                    sensor.record_event(&self.state, &self.spec, &self.site, i, o.record.half_cycle)
                {
                    self.events.push(e.summary());
                }
            }
        }
        self.records.push(o.record.clone());
    }

    fn forces(&self, o: &HalfCycleOutcome, anchor: (f64, f64), external: f64) -> HalfCycleForces {
        HalfCycleForces {
            phase: o.phase,
            anchor,
            friction: o.friction_traction,
            design_draft: o.record.draft,
            rolling_draft: rolling_draft(&self.spec, &self.site.env, &self.params, o.phase),
            external_draft: external,
            slip: o.record.slip,
            advance: o.record.stroke_advance,
            cutting_work: o.record.cutting_work,
            pushing_work: o.record.pushing_work,
        }
    }

    /// Execute one pass; returns the per-half-cycle force segments.
    pub fn run_pass(&mut self, pass: &Pass, index: usize) -> Result<Vec<HalfCycleForces>> {
        self.pass_index = index;
        match pass.kind {
            PassKind::Turn => {
                let target = pass.path.last().map_or(self.state.heading, |p| p.heading);
                let p = self.state.pose();
                let t = turn_in_place(
                    &mut self.state,
                    target,
                    &self.spec,
                    &mut self.site,
                    &self.params,
                )?;
                // the vehicle stays near the pivot; soil is looked up there
                let mut segs = Vec::with_capacity(t.half_cycles.len());
                for o in &t.half_cycles {
                    self.log(o);
                    segs.push(self.forces(o, (p.x, p.y), 0.0));
                }
                Ok(segs)
            }
            PassKind::Deposit => {
                let (ux, uy) = unit(self.state.heading);
                let cs = self.site.terrain.spec.cell_size;
                let edge = self.state.blade_edge(&self.spec);
                let at = (edge.0 + cs * ux, edge.1 + cs * uy);
                let cells =
                    self.site
                        .terrain
                        .footprint(at, self.state.heading, self.spec.blade.width);
                let repose = self.site.soils.profile_at(at.0, at.1).repose_angle;
                self.site
                    .terrain
                    .deposit(&mut self.state.prism, &cells, repose);
                Ok(Vec::new())
            }
            PassKind::Rip | PassKind::Doze | PassKind::Travel => {
                let region = pass.region;
                let (blade, ripper) = match pass.kind {
                    PassKind::Doze => (
                        Some(BladeCut {
                            depth: pass.depth.min(self.spec.blade.max_cut_depth),
                            floor: pass.floor,
                            region,
                        }),
                        None,
                    ),
                    PassKind::Rip => (
                        None,
                        Some(RipCut {
                            depth: pass.depth.min(self.spec.ripper.max_depth),
                            floor: pass.floor,
                            region,
                        }),
                    ),
                    _ => (None, None),
                };
                self.session.restart(blade, ripper);
                self.session.load_limit = pass.load_limit;
                let use_tools = blade.is_some() || ripper.is_some() || !self.state.prism.is_empty();
                if blade.is_none() && !self.state.prism.is_empty() {
                    // carry the prism without cutting
                    self.session.blade = Some(BladeCut {
                        depth: 0.0,
                        floor: None,
                        region: None,
                    });
                }
                let (Some(start), Some(end)) = (pass.path.first(), pass.path.last()) else {
                    return Ok(Vec::new());
                };
                let segs = self.follow(
                    (start.x, start.y),
                    (end.x, end.y),
                    pass.reference,
                    pass.external_draft,
                    use_tools,
                );
                self.settle_worked_cells();
                segs
            }
        }
    }

    /// Let faces the tools cut in loose material slump to the angle of
    /// repose.
    fn settle_worked_cells(&mut self) {
        let mut cells = std::mem::take(&mut self.session.touched);
        if cells.is_empty() {
            return;
        }
        cells.sort_unstable();
        cells.dedup();
        let repose = self.site.soils.base.repose_angle;
        self.site.terrain.repose_relax(&cells, repose);
    }

    /// Drive along the line from `start` to `end` until the reference point
    /// reaches `end`, steering by pure pursuit within the draft-balance
    /// curvature range.
    pub fn follow(
        &mut self,
        start: (f64, f64),
        end: (f64, f64),
        reference: RefPoint,
        external_draft: f64,
        use_tools: bool,
    ) -> Result<Vec<HalfCycleForces>> {
        let (dx, dy) = (end.0 - start.0, end.1 - start.1);
        let len = dx.hypot(dy);
        let mut segs = Vec::new();
        if len < 1e-9 {
            return Ok(segs);
        }
        let u = (dx / len, dy / len);
        let half_width = 0.5 * self.spec.frame_width;
        let k_max = draft_balance_curvature(half_width, &self.spec)
            .abs()
            .min(draft_balance_curvature(-half_width, &self.spec).abs());
        let lookahead = self.spec.stroke_length.max(2.0);
        let mut stalled = 0;
        let budget = 20 + 8 * (len / self.spec.stroke_length).ceil() as usize;
        for _ in 0..budget {
            let r = self.reference_point(reference);
            let remaining = (end.0 - r.0) * u.0 + (end.1 - r.1) * u.1;
            if remaining <= ARRIVAL_TOLERANCE {
                return Ok(segs);
            }
            let phase = self.state.phase;
            let moves_ref = match (reference, phase) {
                (RefPoint::Pose, _) => true,
                (RefPoint::BladeEdge, p) => p == StrokePhase::Expanding,
                (RefPoint::RipperTine, p) => p == StrokePhase::Contracting,
            };
            let anchor = self.state.frame_center(phase.anchoring_frame());
            let travel = if moves_ref {
                // the pose is the frame midpoint and also loses the anchoring slip
                let k = self
                    .site
                    .soils
                    .profile_at(anchor.0, anchor.1)
                    .anchoring_slope;
                let slip = 2.0 * k;
                Some(match reference {
                    RefPoint::Pose => 2.0 * (remaining + slip),
                    _ => remaining + slip,
                })
            } else {
                None
            };
            // pure pursuit on the pose toward a point ahead on the line
            let p = self.state.pose();
            let along = (p.x - start.0) * u.0 + (p.y - start.1) * u.1;
            let target = (
                start.0 + (along + lookahead) * u.0,
                start.1 + (along + lookahead) * u.1,
            );
            let bearing = (target.1 - p.y).atan2(target.0 - p.x).to_degrees();
            let alpha = wrap_degrees(bearing - p.heading).to_radians();
            let curvature = (2.0 * alpha.sin() / lookahead).clamp(-k_max, k_max);
            let room = match phase {
                StrokePhase::Expanding => self.spec.max_separation() - self.state.separation,
                StrokePhase::Contracting => self.state.separation - self.spec.min_separation,
            };
            // a stroke that covers the rest of the segment ends it
            let finishing = travel.is_some_and(|t| t <= room);
            let cmd = StrokeCommand {
                travel,
                external_draft: if moves_ref { external_draft } else { 0.0 },
                curvature,
                ..Default::default()
            };
            let before = r;
            let o = self.stroke(&cmd, use_tools)?;
            segs.push(self.forces(&o, anchor, cmd.external_draft));
            if finishing {
                return Ok(segs);
            }
            let after = self.reference_point(reference);
            let progress = (after.0 - before.0) * u.0 + (after.1 - before.1) * u.1;
            if moves_ref && progress <= 1e-6 {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    return Err(Error::Stuck {
                        half_cycle: self.state.half_cycles,
                        reason: "no progress along the path".into(),
                    });
                }
            } else if moves_ref {
                stalled = 0;
            }
        }
        Err(Error::Stuck {
            half_cycle: self.state.half_cycles,
            reason: format!("path of {len:.2} m not completed"),
        })
    }
}
