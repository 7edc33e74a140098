//! Scenario documents: one JSON file describing the environment, soil,
//! terrain, vehicle and mission of a run.
//!
//! Presets are resolved while parsing, so an unknown name is reported with
//! the line and column where it appears.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::earthworks::TerrainGrid;
use crate::error::{Error, Result};
use crate::locomotion::{Pose, SimParams, Site, SpikeSelection, VehicleSpec};
use crate::planner::{PadSpec, RefPoint};
use crate::raster::{read_ascii, GridSpec};
use crate::sensing::SensorConfig;
use crate::soil::{Environment, SoilMap, SoilPatch, SoilProfile};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub environment: EnvironmentChoice,
    #[serde(default)]
    pub soil: SoilChoice,
    /// Circular regions with their own profile, later entries on top.
    #[serde(default)]
    pub soil_patches: Vec<PatchChoice>,
    #[serde(default)]
    pub terrain: TerrainSpec,
    #[serde(default)]
    pub vehicle: VehicleChoice,
    #[serde(default)]
    pub params: SimParams,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub mission: MissionSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum EnvironmentRaw {
    Preset(String),
    Custom {
        #[serde(default = "custom_name")]
        name: String,
        gravity: f64,
    },
}

fn custom_name() -> String {
    "custom".into()
}

/// A named gravity preset (`earth`, `moon`, `mars`) or `{"gravity": g}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "EnvironmentRaw")]
pub struct EnvironmentChoice(pub Environment);

impl Default for EnvironmentChoice {
    fn default() -> Self {
        Self(Environment::moon())
    }
}

impl TryFrom<EnvironmentRaw> for EnvironmentChoice {
    type Error = String;

    fn try_from(raw: EnvironmentRaw) -> std::result::Result<Self, String> {
        match raw {
            EnvironmentRaw::Preset(name) => Environment::preset(&name).map(Self).ok_or_else(|| {
                format!("unknown environment preset '{name}' (expected earth, moon or mars)")
            }),
            EnvironmentRaw::Custom { name, gravity } => Environment::new(name, gravity)
                .map(Self)
                .map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum SoilRaw {
    Preset(String),
    Explicit(SoilProfile),
}

/// A soil preset name (`soft`, `medium`, `hard`) or an explicit profile.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "SoilRaw")]
pub struct SoilChoice(pub SoilProfile);

impl Default for SoilChoice {
    fn default() -> Self {
        Self(SoilProfile::soft())
    }
}

impl TryFrom<SoilRaw> for SoilChoice {
    type Error = String;

    fn try_from(raw: SoilRaw) -> std::result::Result<Self, String> {
        let profile = match raw {
            SoilRaw::Preset(name) => SoilProfile::preset(&name).ok_or_else(|| {
                format!("unknown soil preset '{name}' (expected soft, medium or hard)")
            })?,
            SoilRaw::Explicit(p) => p,
        };
        profile.validate().map_err(|e| e.to_string())?;
        Ok(Self(profile))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchChoice {
    pub center: (f64, f64),
    pub radius: f64,
    pub soil: SoilChoice,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum VehicleRaw {
    Preset(String),
    Tuned {
        preset: String,
        #[serde(default)]
        weight_transfer_actuator: Option<bool>,
        #[serde(default)]
        mass: Option<f64>,
    },
    Explicit(Box<VehicleSpec>),
}

/// A vehicle preset (`reference`, `field`), a preset with overrides, or a
/// full explicit spec.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "VehicleRaw")]
pub struct VehicleChoice(pub VehicleSpec);

impl Default for VehicleChoice {
    fn default() -> Self {
        Self(VehicleSpec::reference())
    }
}

impl TryFrom<VehicleRaw> for VehicleChoice {
    type Error = String;

    fn try_from(raw: VehicleRaw) -> std::result::Result<Self, String> {
        let lookup = |name: &str| {
            VehicleSpec::preset(name).ok_or_else(|| {
                format!("unknown vehicle preset '{name}' (expected reference or field)")
            })
        };
        let spec = match raw {
            VehicleRaw::Preset(name) => lookup(&name)?,
            VehicleRaw::Tuned {
                preset,
                weight_transfer_actuator,
                mass,
            } => {
                let mut v = lookup(&preset)?;
                if let Some(a) = weight_transfer_actuator {
                    v.weight_transfer_actuator = a;
                }
                if let Some(m) = mass {
                    v.mass = m;
                }
                v
            }
            VehicleRaw::Explicit(v) => *v,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(Self(spec))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TerrainSpec {
    /// Elevations from an ESRI ASCII grid, relative to the scenario file.
    Raster {
        raster: PathBuf,
        #[serde(default = "default_swell")]
        swell_factor: f64,
    },
    /// Level ground of side `extent` m.
    Flat {
        #[serde(default = "default_extent")]
        extent: f64,
        #[serde(default = "default_cell")]
        cell_size: f64,
        #[serde(default)]
        center: (f64, f64),
        #[serde(default)]
        elevation: f64,
        #[serde(default = "default_swell")]
        swell_factor: f64,
    },
}

fn default_extent() -> f64 {
    20.0
}

fn default_cell() -> f64 {
    0.25
}

fn default_swell() -> f64 {
    1.3
}

impl Default for TerrainSpec {
    fn default() -> Self {
        Self::Flat {
            extent: default_extent(),
            cell_size: default_cell(),
            center: (0.0, 0.0),
            elevation: 0.0,
            swell_factor: default_swell(),
        }
    }
}

/// One instruction of a drive script.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveStep {
    /// Half-cycles at full or commanded travel.
    Stroke {
        #[serde(default = "one")]
        count: usize,
        #[serde(default)]
        travel: Option<f64>,
        #[serde(default)]
        curvature: f64,
        #[serde(default)]
        external_draft: f64,
        #[serde(default)]
        selection: SpikeSelection,
    },
    /// Turn in place to an absolute heading, degrees.
    Turn { heading: f64 },
    /// Drive until the reference point reaches (x, y).
    Goto {
        x: f64,
        y: f64,
        #[serde(default = "pose_ref")]
        reference: RefPoint,
        #[serde(default)]
        external_draft: f64,
    },
    /// Rip toward (x, y) at `depth` below the surface.
    Rip { x: f64, y: f64, depth: f64 },
    /// Doze toward (x, y) cutting at most `depth`.
    Doze { x: f64, y: f64, depth: f64 },
    /// Drop the blade load in front of the vehicle.
    Deposit,
}

fn one() -> usize {
    1
}

fn pose_ref() -> RefPoint {
    RefPoint::Pose
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveScript {
    #[serde(default)]
    pub start: Option<Pose>,
    #[serde(default)]
    pub steps: Vec<DriveStep>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PadMission {
    #[serde(flatten)]
    pub pad: PadSpec,
    /// Vehicle start; the pad centre facing +x by default.
    #[serde(default)]
    pub start: Option<Pose>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MissionSpec {
    Drive(DriveScript),
    Pad(PadMission),
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self::Drive(DriveScript::default())
    }
}

/// Position of the first JSON string equal to the 'quoted' token in a
/// validation message. serde reports such errors at the end of the
/// enclosing value, which points at the wrong line.
fn quoted_position(text: &str, msg: &str) -> Option<(usize, usize)> {
    let token = msg.split('\'').nth(1)?;
    let at = text.find(&format!("\"{token}\""))?;
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, col))
}

impl Scenario {
    /// Parse scenario text; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = full.strip_suffix(&suffix).unwrap_or(&full);
            let (line, col) = quoted_position(text, msg).unwrap_or((e.line(), e.column()));
            Error::Config(format!("{origin}:{line}:{col}: {msg}"))
        })
    }

    /// Read and parse a scenario file. Relative raster paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text, &path.display().to_string())?;
        if let TerrainSpec::Raster { raster, .. } = &mut s.terrain {
            if raster.is_relative() {
                if let Some(dir) = path.parent() {
                    *raster = dir.join(&*raster);
                }
            }
        }
        Ok(s)
    }

    pub fn vehicle(&self) -> &VehicleSpec {
        &self.vehicle.0
    }

    pub fn soils(&self) -> SoilMap {
        SoilMap {
            base: self.soil.0.clone(),
            patches: self
                .soil_patches
                .iter()
                .map(|p| SoilPatch {
                    center: p.center,
                    radius: p.radius,
                    profile: p.soil.0.clone(),
                })
                .collect(),
        }
    }

    pub fn terrain(&self) -> Result<TerrainGrid> {
        match &self.terrain {
            TerrainSpec::Flat {
                extent,
                cell_size,
                center,
                elevation,
                swell_factor,
            } => TerrainGrid::flat(
                GridSpec::centered(*center, *extent, *cell_size)?,
                *elevation,
                *swell_factor,
            ),
            TerrainSpec::Raster {
                raster,
                swell_factor,
            } => {
                let text = std::fs::read_to_string(raster)
                    .map_err(|e| Error::Config(format!("{}: {e}", raster.display())))?;
                let (spec, values) = read_ascii(&text)?;
                let heights = values
                    .into_iter()
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "{}: terrain raster has nodata cells",
                            raster.display()
                        ))
                    })?;
                TerrainGrid::from_heights(spec, heights, *swell_factor)
            }
        }
    }

    pub fn site(&self) -> Result<Site> {
        let soils = self.soils();
        soils.validate()?;
        Ok(Site {
            terrain: self.terrain()?,
            soils,
            env: self.environment.0.clone(),
        })
    }

    /// Where the vehicle starts: the script's or pad's start, else the
    /// terrain centre (or pad centre) facing +x.
    pub fn start(&self, grid: &GridSpec) -> Pose {
        let centre = (
            grid.origin.0 + 0.5 * grid.cols as f64 * grid.cell_size,
            grid.origin.1 + 0.5 * grid.rows as f64 * grid.cell_size,
        );
        let (start, at) = match &self.mission {
            MissionSpec::Drive(d) => (d.start, centre),
            MissionSpec::Pad(p) => (p.start, p.pad.center),
        };
        start.unwrap_or(Pose {
            x: at.0,
            y: at.1,
            heading: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let s = Scenario::parse("{}", "t.json").unwrap();
        assert_eq!(s.environment.0, Environment::moon());
        assert_eq!(s.soil.0, SoilProfile::soft());
        assert_eq!(s.vehicle().name, VehicleSpec::reference().name);
        assert_eq!(s.mission, MissionSpec::Drive(DriveScript::default()));
        let site = s.site().unwrap();
        assert_eq!(site.terrain.spec.cols, 80);
    }

    #[test]
    fn syntax_error_is_line_anchored() {
        let e = Scenario::parse("{\n  \"seed\": 1,\n  \"soil\": \n}", "bad.json").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("bad.json:4:1: "), "{msg}");
    }

    #[test]
    fn unknown_preset_is_line_anchored() {
        let e = Scenario::parse("{\n  \"soil\": \"mud\"\n}", "s.json").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("s.json:2:"), "{msg}");
        assert!(msg.contains("unknown soil preset 'mud'"), "{msg}");
    }

    #[test]
    fn drive_and_pad_missions_parse() {
        let s = Scenario::parse(
            r#"{"environment": {"gravity": 3.7}, "vehicle": {"preset": "field", "weight_transfer_actuator": true},
                "mission": {"drive": {"steps": [{"action": "stroke", "count": 3}, {"action": "turn", "heading": 90}]}}}"#,
            "d.json",
        )
        .unwrap();
        assert_eq!(s.environment.0.gravity, 3.7);
        assert!(s.vehicle().weight_transfer_actuator);
        let MissionSpec::Drive(d) = &s.mission else {
            panic!()
        };
        assert_eq!(d.steps.len(), 2);

        let s = Scenario::parse(
            r#"{"mission": {"pad": {"center": [0, 0], "radius": 3, "target_depth": 0.3}}}"#,
            "p.json",
        )
        .unwrap();
        let MissionSpec::Pad(p) = &s.mission else {
            panic!()
        };
        assert_eq!(p.pad.radius, 3.0);
        assert_eq!(p.pad.max_push_distance, 60.0);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(Scenario::parse(r#"{"sead": 3}"#, "u.json").is_err());
    }
}
