//! In-soil measurements taken whenever a spike anchors, and rasters built
//! from the resulting event log.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::locomotion::{Site, SpikeState, VehicleSpec, VehicleState};
use crate::raster::GridSpec;

/// Ground-truth temperature in kelvin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureField {
    Uniform {
        kelvin: f64,
    },
    /// `base + gx·x + gy·y + gz·depth`
    Linear {
        base: f64,
        gx: f64,
        gy: f64,
        gz: f64,
    },
}

impl Default for TemperatureField {
    fn default() -> Self {
        Self::Uniform { kelvin: 250.0 }
    }
}

impl TemperatureField {
    pub fn at(&self, x: f64, y: f64, depth: f64) -> f64 {
        match *self {
            Self::Uniform { kelvin } => kelvin,
            Self::Linear { base, gx, gy, gz } => base + gx * x + gy * y + gz * depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Half-width of the uniform temperature noise, K.
    pub noise_half_width: f64,
    /// Lateral search radius, in cells, for the weakest path.
    pub neighborhood: usize,
    /// Depth between resistance samples, m.
    pub sample_increment: f64,
    pub temperature: TemperatureField,
    /// Pass-through readings such as pH or conductivity.
    pub aux: BTreeMap<String, f64>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            noise_half_width: 0.0,
            neighborhood: 1,
            sample_increment: 0.01,
            temperature: TemperatureField::default(),
            aux: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenetrationEvent {
    pub position: (f64, f64),
    pub depth_reached: f64,
    /// (depth, q) pairs, depths strictly increasing.
    pub resistance_series: Vec<(f64, f64)>,
    pub temperature: f64,
    pub aux: BTreeMap<String, f64>,
    pub cycle_index: u64,
}

impl PenetrationEvent {
    pub fn min_q(&self) -> Option<f64> {
        self.resistance_series.iter().map(|s| s.1).reduce(f64::min)
    }

    pub fn mean_q(&self) -> Option<f64> {
        let n = self.resistance_series.len();
        (n > 0).then(|| self.resistance_series.iter().map(|s| s.1).sum::<f64>() / n as f64)
    }

    pub fn summary(&self) -> EventRecord {
        EventRecord {
            cycle_index: self.cycle_index,
            x: self.position.0,
            y: self.position.1,
            depth_reached: self.depth_reached,
            min_q: self.min_q(),
            mean_q: self.mean_q(),
            temperature: self.temperature,
        }
    }
}

/// One row of the event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub cycle_index: u64,
    pub x: f64,
    pub y: f64,
    pub depth_reached: f64,
    pub min_q: Option<f64>,
    pub mean_q: Option<f64>,
    pub temperature: f64,
}

/// Records events with a reproducible noise stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    pub config: SensorConfig,
    rng: ChaCha8Rng,
}

impl Sensor {
    pub fn new(config: SensorConfig, seed: u64) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sample the soil traversed by an anchored spike. The recorded
    /// resistance at each depth is the weakest value in the lateral
    /// neighbourhood of the track.
    pub fn record_event(
        &mut self,
        state: &VehicleState,
        spec: &VehicleSpec,
        site: &Site,
        spike: usize,
        cycle_index: u64,
    ) -> Result<PenetrationEvent> {
        let Some(&SpikeState::Anchored { depth, world_point }) = state.spikes.get(spike) else {
            return domain(format!("spike {spike} is not anchored"));
        };
        if spike >= spec.spike_count() {
            return domain(format!("spike {spike} out of range"));
        }
        let inc = self.config.sample_increment;
        if !(inc > 0.0) {
            return Err(Error::Config("sample increment must be > 0".into()));
        }
        let grid = &site.terrain.spec;
        let Some(cell) = grid.cell_of(world_point.0, world_point.1) else {
            return domain("anchor point lies outside the terrain grid");
        };
        let track = neighborhood(grid, cell, self.config.neighborhood);
        let n = (depth / inc).ceil() as usize;
        let mut series = Vec::with_capacity(n);
        for i in 1..=n {
            let z = (i as f64 * inc).min(depth);
            let q = track
                .iter()
                .map(|&c| {
                    let (cx, cy) = grid.center(c);
                    site.soils
                        .profile_at(cx, cy)
                        .resistance_at(site.terrain.soil_depth(c) + z)
                        .unwrap_or(f64::INFINITY)
                })
                .fold(f64::INFINITY, f64::min);
            series.push((z, q));
        }
        let mut temperature = self
            .config
            .temperature
            .at(world_point.0, world_point.1, depth);
        let h = self.config.noise_half_width;
        if h > 0.0 {
            temperature += self.rng.gen_range(-h..=h);
        }
        Ok(PenetrationEvent {
            position: world_point,
            depth_reached: depth,
            resistance_series: series,
            temperature,
            aux: self.config.aux.clone(),
            cycle_index,
        })
    }
}

fn neighborhood(grid: &GridSpec, cell: usize, radius: usize) -> Vec<usize> {
    let (c, r) = grid.col_row(cell);
    let k = radius as isize;
    let mut out = Vec::new();
    for dr in -k..=k {
        for dc in -k..=k {
            let (nc, nr) = (c as isize + dc, r as isize + dr);
            if nc >= 0 && nr >= 0 && (nc as usize) < grid.cols && (nr as usize) < grid.rows {
                out.push(grid.index(nc as usize, nr as usize));
            }
        }
    }
    out
}

/// Smallest resistance recorded by any event within `radius` of `point`.
pub fn lower_bound_strength(events: &[EventRecord], point: (f64, f64), radius: f64) -> Option<f64> {
    events
        .iter()
        .filter(|e| (e.x - point.0).hypot(e.y - point.1) <= radius)
        .filter_map(|e| e.min_q)
        .reduce(f64::min)
}

/// Mean of the event means within `radius` of `point`.
pub fn mean_strength(events: &[EventRecord], point: (f64, f64), radius: f64) -> Option<f64> {
    let v: Vec<f64> = events
        .iter()
        .filter(|e| (e.x - point.0).hypot(e.y - point.1) <= radius)
        .filter_map(|e| e.mean_q)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    StrengthLowerBound,
    StrengthMean,
    Temperature,
    /// Affine map of temperature; not a measured strength.
    BearingProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Min,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRaster {
    pub grid: GridSpec,
    pub property: Property,
    pub aggregation: Aggregation,
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl PropertyRaster {
    pub fn to_ascii(&self) -> String {
        crate::raster::write_ascii(&self.grid, &self.values)
    }
}

/// Fold event values into grid cells. Strength properties use each event's
/// minimum (lower bound) or mean series value; min and mean are
/// independent of event order.
pub fn build_raster(
    events: &[EventRecord],
    grid: &GridSpec,
    property: Property,
    aggregation: Aggregation,
) -> PropertyRaster {
    let mut values: Vec<Option<f64>> = vec![None; grid.len()];
    let mut sums = vec![0.0; grid.len()];
    let mut counts = vec![0usize; grid.len()];
    for e in events {
        let v = match property {
            Property::StrengthLowerBound => e.min_q,
            Property::StrengthMean => e.mean_q,
            Property::Temperature | Property::BearingProxy => Some(e.temperature),
        };
        let (Some(v), Some(cell)) = (v, grid.cell_of(e.x, e.y)) else {
            continue;
        };
        counts[cell] += 1;
        match aggregation {
            Aggregation::Min => {
                values[cell] = Some(values[cell].map_or(v, |m: f64| m.min(v)));
            }
            Aggregation::Mean => sums[cell] += v,
        }
    }
    if aggregation == Aggregation::Mean {
        for i in 0..grid.len() {
            if counts[i] > 0 {
                values[i] = Some(sums[i] / counts[i] as f64);
            }
        }
    }
    PropertyRaster {
        grid: *grid,
        property,
        aggregation,
        values,
        counts,
    }
}

/// Affine bearing-strength proxy from a temperature raster.
pub fn bearing_proxy(temperature: &PropertyRaster, calibration: (f64, f64)) -> PropertyRaster {
    let (slope, intercept) = calibration;
    PropertyRaster {
        property: Property::BearingProxy,
        values: temperature
            .values
            .iter()
            .map(|v| v.map(|t| slope * t + intercept))
            .collect(),
        ..temperature.clone()
    }
}

const NODATA_FIELD: &str = "";

#[derive(Serialize, Deserialize)]
struct CsvRow {
    cycle_index: u64,
    x: String,
    y: String,
    depth_reached: String,
    min_q: String,
    mean_q: String,
    temperature: String,
}

fn num(s: &str, line: u64, field: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("events line {line}: bad {field} '{s}'")))
}

/// Write the event log as CSV. Numbers use 9 significant digits; events
/// without samples leave the strength columns empty.
pub fn write_events_csv<W: Write>(events: &[EventRecord], out: W) -> Result<()> {
    use crate::raster::fmt9;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cycle_index",
        "x",
        "y",
        "depth_reached",
        "min_q",
        "mean_q",
        "temperature",
    ])
    .map_err(csv_err)?;
    for e in events {
        let opt = |v: Option<f64>| v.map_or(NODATA_FIELD.to_string(), fmt9);
        w.write_record([
            e.cycle_index.to_string(),
            fmt9(e.x),
            fmt9(e.y),
            fmt9(e.depth_reached),
            opt(e.min_q),
            opt(e.mean_q),
            fmt9(e.temperature),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(csv_err)?;
        let line = out.len() as u64 + 2;
        let opt = |s: &str, f: &str| -> Result<Option<f64>> {
            if s.trim().is_empty() {
                Ok(None)
            } else {
                num(s, line, f).map(Some)
            }
        };
        out.push(EventRecord {
            cycle_index: row.cycle_index,
            x: num(&row.x, line, "x")?,
            y: num(&row.y, line, "y")?,
            depth_reached: num(&row.depth_reached, line, "depth_reached")?,
            min_q: opt(&row.min_q, "min_q")?,
            mean_q: opt(&row.mean_q, "mean_q")?,
            temperature: num(&row.temperature, line, "temperature")?,
        });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    let at = e
        .position()
        .map(|p| format!("line {}: ", p.line()))
        .unwrap_or_default();
    Error::Config(format!("events csv {at}{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::earthworks::TerrainGrid;
    use crate::soil::{Environment, SoilMap, SoilPatch, SoilProfile};

    fn anchored_state(depth: f64) -> (VehicleSpec, VehicleState, Site) {
        let spec = VehicleSpec::reference();
        let grid = GridSpec::new(40, 40, 0.25, (-5.0, -5.0)).unwrap();
        let site = Site {
            terrain: TerrainGrid::flat(grid, 0.0, 1.3).unwrap(),
            soils: SoilMap::uniform(SoilProfile::soft()),
            env: Environment::earth(),
        };
        let mut st = VehicleState::new(&spec, (0.0, 0.0), 0.0);
        st.spikes[2] = SpikeState::Anchored {
            depth,
            world_point: st.mount_point(&spec, 2),
        };
        (spec, st, site)
    }

    #[test]
    fn soft_series_uniform() {
        let (spec, st, site) = anchored_state(0.2);
        let mut s = Sensor::new(SensorConfig::default(), 1);
        let e = s.record_event(&st, &spec, &site, 2, 0).unwrap();
        assert_eq!(e.resistance_series.len(), 20);
        assert!(e.resistance_series.iter().all(|&(_, q)| q == 960e3));
        assert!(e.resistance_series.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(e.resistance_series.last().unwrap().0 <= e.depth_reached);
        assert_eq!(e.temperature, 250.0);
    }

    #[test]
    fn series_length_rounds_up() {
        let (spec, st, site) = anchored_state(0.123);
        let mut s = Sensor::new(SensorConfig::default(), 1);
        let e = s.record_event(&st, &spec, &site, 2, 0).unwrap();
        assert_eq!(e.resistance_series.len(), 13);
        assert_eq!(e.resistance_series.last().unwrap().0, 0.123);
    }

    #[test]
    fn not_anchored_is_error() {
        let (spec, st, site) = anchored_state(0.1);
        let mut s = Sensor::new(SensorConfig::default(), 1);
        assert!(s.record_event(&st, &spec, &site, 0, 0).is_err());
    }

    #[test]
    fn weakest_neighbour_wins() {
        let (spec, st, mut site) = anchored_state(0.1);
        let p = st.mount_point(&spec, 2);
        let g = site.terrain.spec;
        let (c, r) = g.col_row(g.cell_of(p.0, p.1).unwrap());
        // a soft patch one cell over
        site.soils = SoilMap {
            base: SoilProfile::hard(),
            patches: vec![SoilPatch {
                center: g.center(g.index(c + 1, r)),
                radius: 0.1,
                profile: SoilProfile::soft(),
            }],
        };
        let mut s = Sensor::new(SensorConfig::default(), 1);
        let e = s.record_event(&st, &spec, &site, 2, 0).unwrap();
        assert_eq!(e.min_q(), Some(960e3));
        let narrow = SensorConfig {
            neighborhood: 0,
            ..Default::default()
        };
        let e = Sensor::new(narrow, 1)
            .record_event(&st, &spec, &site, 2, 0)
            .unwrap();
        assert_eq!(e.min_q(), Some(6e6));
    }

    #[test]
    fn noise_reproducible_and_bounded() {
        let (spec, st, site) = anchored_state(0.1);
        let cfg = SensorConfig {
            noise_half_width: 0.5,
            ..Default::default()
        };
        let a = Sensor::new(cfg.clone(), 7)
            .record_event(&st, &spec, &site, 2, 0)
            .unwrap();
        let b = Sensor::new(cfg, 7)
            .record_event(&st, &spec, &site, 2, 0)
            .unwrap();
        assert_eq!(a.temperature, b.temperature);
        assert!((a.temperature - 250.0).abs() <= 0.5);
    }

    fn rec(x: f64, y: f64, min_q: f64, mean_q: f64, t: f64) -> EventRecord {
        EventRecord {
            cycle_index: 0,
            x,
            y,
            depth_reached: 0.1,
            min_q: Some(min_q),
            mean_q: Some(mean_q),
            temperature: t,
        }
    }

    #[test]
    fn lower_bound_cases() {
        let one = [rec(0.0, 0.0, 960e3, 960e3, 250.0)];
        assert_eq!(lower_bound_strength(&one, (0.0, 0.0), 1.0), Some(960e3));
        let two = [one[0], rec(0.5, 0.0, 3.9e6, 3.9e6, 250.0)];
        assert_eq!(lower_bound_strength(&two, (0.0, 0.0), 1.0), Some(960e3));
        assert_eq!(lower_bound_strength(&two, (10.0, 0.0), 1.0), None);
    }

    #[test]
    fn raster_cases() {
        let grid = GridSpec::new(4, 4, 1.0, (0.0, 0.0)).unwrap();
        let empty = build_raster(&[], &grid, Property::StrengthLowerBound, Aggregation::Min);
        assert!(empty.values.iter().all(Option::is_none));
        let ev = [
            rec(0.5, 0.5, 1.0e6, 2.0e6, 250.0),
            rec(0.6, 0.4, 3.0e6, 4.0e6, 260.0),
            rec(2.5, 2.5, 5.0e6, 5.5e6, 270.0),
        ];
        let mn = build_raster(&ev, &grid, Property::StrengthLowerBound, Aggregation::Min);
        let me = build_raster(&ev, &grid, Property::StrengthMean, Aggregation::Mean);
        assert_eq!(mn.values[0], Some(1.0e6));
        assert_eq!(me.values[0], Some(3.0e6));
        assert_eq!(me.values[grid.index(2, 2)], Some(5.5e6));
        assert_eq!(mn.counts[0], 2);
        for (a, b) in mn.values.iter().zip(&me.values) {
            if let (Some(a), Some(b)) = (a, b) {
                assert!(a <= b);
            }
        }
        let mut rev = ev;
        rev.reverse();
        assert_eq!(
            build_raster(&rev, &grid, Property::StrengthMean, Aggregation::Mean).values[0],
            me.values[0]
        );
    }

    #[test]
    fn proxy_cases() {
        let grid = GridSpec::new(2, 1, 1.0, (0.0, 0.0)).unwrap();
        let t = build_raster(
            &[rec(0.5, 0.5, 1.0, 1.0, 250.0)],
            &grid,
            Property::Temperature,
            Aggregation::Mean,
        );
        let id = bearing_proxy(&t, (1.0, 0.0));
        assert_eq!(id.values, t.values);
        assert_eq!(id.property, Property::BearingProxy);
        let flat = bearing_proxy(&t, (0.0, 7.0));
        assert_eq!(flat.values, vec![Some(7.0), None]);
    }

    #[test]
    fn csv_round_trip() {
        let ev = vec![
            rec(0.5, -1.25, 960e3, 960e3, 250.5),
            EventRecord {
                min_q: None,
                mean_q: None,
                ..rec(1.0, 1.0, 0.0, 0.0, 1.0)
            },
        ];
        let mut buf = Vec::new();
        write_events_csv(&ev, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cycle_index,x,y,depth_reached,min_q,mean_q,temperature\n"));
        assert_eq!(read_events_csv(&buf[..]).unwrap(), ev);
        assert!(read_events_csv(
            "cycle_index,x,y,depth_reached,min_q,mean_q,temperature\n0,a,0,0,,,0\n".as_bytes()
        )
        .is_err());
    }
}
