//! Mutable heightfield with bank/loose accounting.
//!
//! Every cell stores the elevation of undisturbed (bank) material and the
//! thickness of loosened material resting on it. Loosening bank material
//! multiplies its volume by the swell factor; the bank-equivalent volume
//! `bank + loose / swell` is conserved by every operation except explicit
//! export across the grid boundary.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::raster::GridSpec;
use crate::soil::{SoilMap, SoilProfile};

/// Circular region in which tools are allowed to cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let (dx, dy) = (p.0 - self.center.0, p.1 - self.center.1);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BladeSpec {
    pub width: f64,
    pub max_cut_depth: f64,
    /// Loose volume the blade can push, m³.
    pub capacity: f64,
    /// Distance of the cutting edge ahead of the front friction centre, m.
    pub offset: f64,
    /// Cutting coefficient: cut draft is `k · width · depth · q`.
    pub cut_coefficient: f64,
    /// Friction coefficient of the pushed prism on the ground.
    pub push_friction: f64,
    /// Strength of loose material relative to bank when cut.
    pub loose_strength_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipperSpec {
    pub width: f64,
    pub max_depth: f64,
    /// Draft angle γ of the line from the ripper tip to the hinge, degrees.
    pub gamma: f64,
    /// Distance of the tine behind the rear friction centre, m.
    pub offset: f64,
    /// Ripping coefficient: draft is `k · width · depth · q`.
    pub cut_coefficient: f64,
}

/// Material pushed ahead of the blade.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BladeLoad {
    /// Loose volume in the prism, m³.
    pub prism_volume: f64,
    /// Bank-equivalent volume picked up per source cell.
    pub source_ledger: BTreeMap<usize, f64>,
}

impl BladeLoad {
    pub fn ledger_total(&self) -> f64 {
        self.source_ledger.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.prism_volume <= 0.0
    }
}

/// Which tool cut parameters apply to a blade step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BladeCut {
    /// Cut depth below the current surface, m.
    pub depth: f64,
    /// Elevation the blade never cuts below.
    #[serde(default)]
    pub floor: Option<f64>,
    /// Only cells whose centres lie inside are cut.
    #[serde(default)]
    pub region: Option<Disc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ToolStep {
    /// Average draft over the step, N.
    pub draft: f64,
    /// Work spent breaking bank material in this step, J.
    pub cut_work: f64,
    /// Loose volume taken into the prism.
    pub intake: f64,
    /// Bank-equivalent volume taken into the prism.
    pub bank_equivalent: f64,
    pub spilled: f64,
}

/// ∫ q dz over a bank slice `thickness` thick starting `top` below the
/// original surface, Pa·m.
fn bank_resistance(profile: &SoilProfile, top: f64, thickness: f64) -> f64 {
    let at = |d: f64| profile.integrated_resistance(d).unwrap_or(0.0);
    at(top + thickness) - at(top)
}

/// Tracks which cells a tool already worked during the current pass, so a
/// cell is cut at most once per pass.
#[derive(Debug, Clone)]
pub struct Sweep {
    stamp: Vec<u32>,
    generation: u32,
}

impl Sweep {
    pub fn new(cells: usize) -> Self {
        Self {
            stamp: vec![0; cells],
            generation: 1,
        }
    }

    pub fn begin(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
    }

    pub fn seen(&self, idx: usize) -> bool {
        self.stamp[idx] == self.generation
    }

    pub fn claim(&mut self, idx: usize) -> bool {
        if self.seen(idx) {
            false
        } else {
            self.stamp[idx] = self.generation;
            true
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainGrid {
    pub spec: GridSpec,
    bank_floor: Vec<f64>,
    loose: Vec<f64>,
    /// Original bank surface; soil depth is measured from here.
    datum: Vec<f64>,
    crust_broken: Vec<bool>,
    pub swell_factor: f64,
    /// Lowest elevation that can be excavated.
    pub base_elevation: f64,
    exported: f64,
}

impl TerrainGrid {
    pub fn flat(spec: GridSpec, elevation: f64, swell_factor: f64) -> Result<Self> {
        Self::from_heights(spec, vec![elevation; spec.len()], swell_factor)
    }

    /// Undisturbed terrain with the given surface elevations.
    pub fn from_heights(spec: GridSpec, heights: Vec<f64>, swell_factor: f64) -> Result<Self> {
        if heights.len() != spec.len() {
            return Err(Error::Config("height count does not match grid".into()));
        }
        if !(swell_factor >= 1.0) {
            return Err(Error::Config(format!(
                "swell factor must be >= 1, got {swell_factor}"
            )));
        }
        let min = heights.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            spec,
            loose: vec![0.0; spec.len()],
            datum: heights.clone(),
            bank_floor: heights,
            crust_broken: vec![false; spec.len()],
            swell_factor,
            base_elevation: min - 5.0,
            exported: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn surface(&self, idx: usize) -> f64 {
        self.bank_floor[idx] + self.loose[idx]
    }

    pub fn bank_floor(&self, idx: usize) -> f64 {
        self.bank_floor[idx]
    }

    pub fn loose_depth(&self, idx: usize) -> f64 {
        self.loose[idx]
    }

    pub fn datum(&self, idx: usize) -> f64 {
        self.datum[idx]
    }

    pub fn crust_broken(&self, idx: usize) -> bool {
        self.crust_broken[idx]
    }

    pub fn break_crust(&mut self, idx: usize) {
        self.crust_broken[idx] = true;
    }

    /// Soil depth of the bank surface below the original ground.
    pub fn soil_depth(&self, idx: usize) -> f64 {
        (self.datum[idx] - self.bank_floor[idx]).max(0.0)
    }

    pub fn surfaces(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.surface(i)).collect()
    }

    pub fn bank_floors(&self) -> &[f64] {
        &self.bank_floor
    }

    pub fn loose_depths(&self) -> &[f64] {
        &self.loose
    }

    pub fn surface_at(&self, x: f64, y: f64) -> Option<f64> {
        self.spec.cell_of(x, y).map(|i| self.surface(i))
    }

    /// Add loose material at a cell (m of thickness).
    pub fn add_loose(&mut self, idx: usize, thickness: f64) {
        debug_assert!(thickness >= 0.0);
        self.loose[idx] += thickness;
    }

    /// Bank-equivalent volume exported across the boundary so far.
    pub fn exported_volume(&self) -> f64 {
        self.exported
    }

    pub fn bank_volume(&self) -> f64 {
        let a = self.spec.cell_area();
        self.bank_floor
            .iter()
            .map(|b| (b - self.base_elevation) * a)
            .sum()
    }

    pub fn loose_volume(&self) -> f64 {
        self.loose.iter().sum::<f64>() * self.spec.cell_area()
    }

    /// Bank + loose/swell + exported; constant under every operation.
    pub fn bank_equivalent_volume(&self) -> f64 {
        self.bank_volume() + self.loose_volume() / self.swell_factor + self.exported
    }

    fn export(&mut self, loose_volume: f64) {
        self.exported += loose_volume / self.swell_factor;
    }

    /// Place loose volume on a cell, or export it when the cell is off-grid.
    fn place(&mut self, idx: Option<usize>, loose_volume: f64) {
        match idx {
            Some(i) => self.loose[i] += loose_volume / self.spec.cell_area(),
            None => self.export(loose_volume),
        }
    }

    /// Cells under a tool edge of `width` centred at `center`, perpendicular
    /// to `heading` (degrees). Order is deterministic, duplicates removed.
    pub fn footprint(&self, center: (f64, f64), heading: f64, width: f64) -> Vec<usize> {
        let h = heading.to_radians();
        let (px, py) = (-h.sin(), h.cos());
        let n = ((width / (0.5 * self.spec.cell_size)).ceil() as usize).max(1);
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = -0.5 * width + width * k as f64 / n as f64;
            if let Some(i) = self.spec.cell_of(center.0 + t * px, center.1 + t * py) {
                if !out.contains(&i) {
                    out.push(i);
                }
            }
        }
        out
    }

    fn flank_cells(&self, center: (f64, f64), heading: f64, width: f64) -> [Option<usize>; 2] {
        let h = heading.to_radians();
        let (px, py) = (-h.sin(), h.cos());
        let d = 0.5 * width + 0.5 * self.spec.cell_size;
        [
            self.spec.cell_of(center.0 - d * px, center.1 - d * py),
            self.spec.cell_of(center.0 + d * px, center.1 + d * py),
        ]
    }

    /// (loose thickness, bank thickness) the blade would remove from a cell.
    fn blade_take(&self, idx: usize, cut: &BladeCut) -> (f64, f64) {
        if let Some(region) = cut.region {
            if !region.contains(self.spec.center(idx)) {
                return (0.0, 0.0);
            }
        }
        let surface = self.surface(idx);
        let mut bottom = surface - cut.depth;
        if let Some(f) = cut.floor {
            bottom = bottom.max(f);
        }
        bottom = bottom.max(self.base_elevation);
        if bottom >= surface {
            return (0.0, 0.0);
        }
        let loose_top = surface;
        let bank_top = self.bank_floor[idx];
        let loose_take = loose_top - bottom.max(bank_top);
        let bank_take = (bank_top - bottom).max(0.0);
        (loose_take.max(0.0), bank_take)
    }

    /// Resistance of the (loose, bank) thicknesses a blade takes from cell
    /// `i`, integrated over depth, as (bank, loose), N/m.
    fn cut_resistance(
        &self,
        i: usize,
        (l, b): (f64, f64),
        blade: &BladeSpec,
        soils: &SoilMap,
    ) -> (f64, f64) {
        let (cx, cy) = self.spec.center(i);
        let profile = soils.profile_at(cx, cy);
        let top = self.soil_depth(i);
        let q = profile.resistance_at(top + b).unwrap_or(0.0);
        (
            bank_resistance(profile, top, b),
            q * l * blade.loose_strength_ratio,
        )
    }

    /// Largest depth-integrated resistance a blade cut meets in any of
    /// `cells`, N/m. Times the cut coefficient and blade width this is the
    /// design cutting draft.
    pub fn blade_resistance(
        &self,
        cells: &[usize],
        cut: &BladeCut,
        blade: &BladeSpec,
        soils: &SoilMap,
    ) -> f64 {
        cells
            .iter()
            .map(|&i| match self.blade_take(i, cut) {
                (l, b) if l > 0.0 || b > 0.0 => {
                    let (bank, loose) = self.cut_resistance(i, (l, b), blade, soils);
                    bank + loose
                }
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Loose volume a blade cut would take from unclaimed cells.
    pub fn blade_intake(&self, cells: &[usize], cut: &BladeCut, sweep: &Sweep) -> f64 {
        let a = self.spec.cell_area();
        cells
            .iter()
            .filter(|&&i| !sweep.seen(i))
            .map(|&i| {
                let (l, b) = self.blade_take(i, cut);
                (l + b * self.swell_factor) * a
            })
            .sum()
    }

    /// One blade increment: cut the unclaimed footprint cells into the prism,
    /// spill any excess over capacity to the flanking cells, and return the
    /// step draft (cutting plus prism pushing) for an advance of `ds`.
    #[allow(clippy::too_many_arguments)]
    pub fn blade_cut_and_push(
        &mut self,
        load: &mut BladeLoad,
        blade: &BladeSpec,
        cells: &[usize],
        cut: &BladeCut,
        soils: &SoilMap,
        sweep: &mut Sweep,
        flank: ((f64, f64), f64),
        gravity: f64,
        ds: f64,
    ) -> ToolStep {
        let a = self.spec.cell_area();
        let mut step = ToolStep::default();
        let mut loose_work = 0.0;
        if cut.depth > 0.0 {
            for &i in cells {
                let (l, b) = self.blade_take(i, cut);
                if l <= 0.0 && b <= 0.0 {
                    continue;
                }
                if !sweep.claim(i) {
                    continue;
                }
                let (bank, loose) = self.cut_resistance(i, (l, b), blade, soils);
                // loose material is re-handled, not cut: book it with pushing
                step.cut_work += blade.cut_coefficient * bank * a;
                loose_work += blade.cut_coefficient * loose * a;
                self.loose[i] -= l;
                if self.loose[i] < 0.0 {
                    self.loose[i] = 0.0;
                }
                self.bank_floor[i] -= b;
                let intake = (l + b * self.swell_factor) * a;
                let bank_eq = intake / self.swell_factor;
                step.intake += intake;
                step.bank_equivalent += bank_eq;
                *load.source_ledger.entry(i).or_insert(0.0) += bank_eq;
            }
            load.prism_volume += step.intake;
        }
        if load.prism_volume > blade.capacity {
            let excess = load.prism_volume - blade.capacity;
            let keep = blade.capacity / load.prism_volume;
            load.prism_volume = blade.capacity;
            load.source_ledger.values_mut().for_each(|v| *v *= keep);
            let [left, right] = self.flank_cells(flank.0, flank.1, blade.width);
            self.place(left, excess / 2.0);
            self.place(right, excess / 2.0);
            step.spilled = excess;
        }
        let prism_weight = load.prism_volume * self.loose_density(soils) * gravity;
        let push = blade.push_friction * prism_weight;
        step.draft = push
            + if ds > 0.0 {
                (step.cut_work + loose_work) / ds
            } else {
                0.0
            };
        step
    }

    fn loose_density(&self, soils: &SoilMap) -> f64 {
        soils.base.bank_density / self.swell_factor
    }

    /// Loose bulk density of the base soil, kg/m³.
    pub fn loose_bulk_density(&self, soils: &SoilMap) -> f64 {
        self.loose_density(soils)
    }

    /// One ripper increment over unclaimed footprint cells. Bank above
    /// `surface - depth` (and above `floor`) is converted to loose material.
    #[allow(clippy::too_many_arguments)]
    pub fn rip_step(
        &mut self,
        ripper: &RipperSpec,
        cells: &[usize],
        depth: f64,
        floor: Option<f64>,
        region: Option<Disc>,
        soils: &SoilMap,
        sweep: &mut Sweep,
        ds: f64,
    ) -> ToolStep {
        let a = self.spec.cell_area();
        let mut step = ToolStep::default();
        if depth <= 0.0 {
            return step;
        }
        for &i in cells {
            if let Some(r) = region {
                if !r.contains(self.spec.center(i)) {
                    continue;
                }
            }
            let mut target = self.surface(i) - depth;
            if let Some(f) = floor {
                target = target.max(f);
            }
            target = target.max(self.base_elevation);
            let t = self.bank_floor[i] - target;
            if t <= 0.0 || !sweep.claim(i) {
                continue;
            }
            let (cx, cy) = self.spec.center(i);
            let q_dz = bank_resistance(soils.profile_at(cx, cy), self.soil_depth(i), t);
            step.cut_work += ripper.cut_coefficient * q_dz * a;
            self.bank_floor[i] = target;
            self.loose[i] += t * self.swell_factor;
        }
        step.draft = if ds > 0.0 { step.cut_work / ds } else { 0.0 };
        step
    }

    /// Drop the whole prism as loose material over `cells` (equal shares),
    /// then relax the neighbourhood to the angle of repose.
    pub fn deposit(&mut self, load: &mut BladeLoad, cells: &[usize], repose_angle: f64) -> f64 {
        if load.prism_volume <= 0.0 {
            load.source_ledger.clear();
            load.prism_volume = 0.0;
            return 0.0;
        }
        if cells.is_empty() {
            self.export(load.prism_volume);
        } else {
            let share = load.prism_volume / cells.len() as f64 / self.spec.cell_area();
            for &i in cells {
                self.loose[i] += share;
            }
        }
        load.prism_volume = 0.0;
        load.source_ledger.clear();
        self.repose_relax(cells, repose_angle)
    }

    /// Move loose material downhill until no loose-topped slope exceeds the
    /// angle of repose by more than a quarter degree. Starts from `seeds`
    /// (all cells when empty) and spreads to any cell it disturbs. Returns
    /// the loose volume moved.
    pub fn repose_relax(&mut self, seeds: &[usize], repose_angle: f64) -> f64 {
        let tan_r = repose_angle.to_radians().tan();
        let tan_stop = (repose_angle + 0.25).to_radians().tan();
        let a = self.spec.cell_area();
        let n = self.len();
        let mut queued = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        let push = |i: usize, queue: &mut VecDeque<usize>, queued: &mut Vec<bool>| {
            if !queued[i] {
                queued[i] = true;
                queue.push_back(i);
            }
        };
        if seeds.is_empty() {
            for i in 0..n {
                push(i, &mut queue, &mut queued);
            }
        } else {
            for &i in seeds {
                push(i, &mut queue, &mut queued);
                for (j, _) in self.spec.neighbors(i) {
                    push(j, &mut queue, &mut queued);
                }
            }
        }
        let mut moved = 0.0;
        let mut excess: Vec<(usize, f64)> = Vec::with_capacity(8);
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            if self.loose[i] <= 0.0 {
                continue;
            }
            let hi = self.surface(i);
            excess.clear();
            let mut trigger = false;
            for (j, d) in self.spec.neighbors(i) {
                let drop = hi - self.surface(j);
                if drop > tan_r * d {
                    excess.push((j, drop - tan_r * d));
                    if drop > tan_stop * d {
                        trigger = true;
                    }
                }
            }
            if !trigger {
                continue;
            }
            let total: f64 = excess.iter().map(|e| e.1).sum();
            let max = excess.iter().map(|e| e.1).fold(0.0, f64::max);
            let delta = self.loose[i].min(0.5 * max);
            if delta <= 0.0 {
                continue;
            }
            self.loose[i] -= delta;
            for &(j, e) in &excess {
                self.loose[j] += delta * e / total;
            }
            moved += delta * a;
            push(i, &mut queue, &mut queued);
            for &(j, _) in &excess {
                push(j, &mut queue, &mut queued);
            }
            let neigh: Vec<usize> = self.spec.neighbors(i).map(|(j, _)| j).collect();
            for j in neigh {
                push(j, &mut queue, &mut queued);
            }
        }
        moved
    }

    /// Steepest slope (degrees) from any loose-topped cell to a lower
    /// neighbour.
    pub fn max_loose_slope(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            if self.loose[i] <= 0.0 {
                continue;
            }
            let hi = self.surface(i);
            for (j, d) in self.spec.neighbors(i) {
                let drop = hi - self.surface(j);
                if drop > 0.0 {
                    worst = worst.max((drop / d).atan().to_degrees());
                }
            }
        }
        worst
    }

    /// Surface slope at a point, degrees, from central differences
    /// (one-sided at the grid edge).
    pub fn slope_at(&self, x: f64, y: f64) -> Result<f64> {
        let Some(idx) = self.spec.cell_of(x, y) else {
            return domain(format!("point ({x}, {y}) outside terrain"));
        };
        let (c, r) = self.spec.col_row(idx);
        let cs = self.spec.cell_size;
        let diff = |lo: usize, hi: usize, steps: usize, horizontal: bool| {
            let (a, b) = if horizontal {
                (self.spec.index(lo, r), self.spec.index(hi, r))
            } else {
                (self.spec.index(c, lo), self.spec.index(c, hi))
            };
            if steps == 0 {
                0.0
            } else {
                (self.surface(b) - self.surface(a)) / (steps as f64 * cs)
            }
        };
        let (c0, c1) = (c.saturating_sub(1), (c + 1).min(self.spec.cols - 1));
        let (r0, r1) = (r.saturating_sub(1), (r + 1).min(self.spec.rows - 1));
        let gx = diff(c0, c1, c1 - c0, true);
        let gy = diff(r0, r1, r1 - r0, false);
        Ok(gx.hypot(gy).atan().to_degrees())
    }

    /// Pitch of a body of `length` centred at `(x, y)` facing `heading`:
    /// the angle of the line between the surface under its two ends.
    pub fn pitch_along(&self, x: f64, y: f64, heading: f64, length: f64) -> Option<f64> {
        let h = heading.to_radians();
        let (ux, uy) = (h.cos(), h.sin());
        let half = 0.5 * length;
        let front = self.surface_at(x + half * ux, y + half * uy)?;
        let rear = self.surface_at(x - half * ux, y - half * uy)?;
        Some(((front - rear) / length).atan().to_degrees())
    }

    /// Walk a polyline in steps of at most half a cell and rip along it.
    /// Returns the per-step ripper draft.
    pub fn ripper_pass(
        &mut self,
        path: &[(f64, f64)],
        depth: f64,
        ripper: &RipperSpec,
        soils: &SoilMap,
    ) -> Result<Vec<f64>> {
        if depth < 0.0 || depth > ripper.max_depth + 1e-12 {
            return domain(format!(
                "ripper depth {depth} outside [0, {}]",
                ripper.max_depth
            ));
        }
        let mut sweep = Sweep::new(self.len());
        let mut trace = Vec::new();
        for w in path.windows(2) {
            let (p, q) = (w[0], w[1]);
            let len = (q.0 - p.0).hypot(q.1 - p.1);
            if len <= 0.0 {
                continue;
            }
            let heading = (q.1 - p.1).atan2(q.0 - p.0).to_degrees();
            let n = ((len / (0.5 * self.spec.cell_size)).ceil() as usize).max(1);
            let ds = len / n as f64;
            for k in 0..=n {
                let t = k as f64 / n as f64;
                let at = (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1));
                let cells = self.footprint(at, heading, ripper.width);
                let step = self.rip_step(ripper, &cells, depth, None, None, soils, &mut sweep, ds);
                trace.push(step.draft);
            }
        }
        Ok(trace)
    }
}
