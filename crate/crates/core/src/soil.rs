//! Gravity environments and layered soil models.
//!
//! A [`SoilProfile`] is a stack of layers with piecewise-constant cone
//! penetration resistance `q`. Depth is measured downward from the original
//! (undisturbed) ground surface. A depth that falls exactly on a layer
//! boundary belongs to the deeper layer.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Standard Earth surface gravity, m/s².
pub const EARTH_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub name: String,
    /// Surface gravity, m/s².
    pub gravity: f64,
}

impl Environment {
    pub fn new(name: impl Into<String>, gravity: f64) -> Result<Self> {
        if !(gravity > 0.0) || !gravity.is_finite() {
            return Err(Error::Config(format!("gravity must be > 0, got {gravity}")));
        }
        Ok(Self {
            name: name.into(),
            gravity,
        })
    }

    pub fn earth() -> Self {
        Self {
            name: "earth".into(),
            gravity: EARTH_GRAVITY,
        }
    }

    /// One sixth of Earth gravity.
    pub fn moon() -> Self {
        Self {
            name: "moon".into(),
            gravity: EARTH_GRAVITY / 6.0,
        }
    }

    /// 38 % of Earth gravity.
    pub fn mars() -> Self {
        Self {
            name: "mars".into(),
            gravity: 0.38 * EARTH_GRAVITY,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "earth" => Some(Self::earth()),
            "moon" => Some(Self::moon()),
            "mars" => Some(Self::mars()),
            _ => None,
        }
    }

    /// Weight force of `mass` kg in this environment.
    pub fn weight(&self, mass: f64) -> f64 {
        mass * self.gravity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilLayer {
    /// Layer thickness, m.
    pub thickness: f64,
    /// Cone penetration resistance, Pa.
    pub cone_resistance: f64,
    /// Multiplier on the profile's bank density.
    #[serde(default = "one")]
    pub density_scale: f64,
    /// Soil/steel friction coefficient.
    #[serde(default = "default_mu")]
    pub friction_mu: f64,
}

fn one() -> f64 {
    1.0
}

fn default_mu() -> f64 {
    0.5
}

/// Hardened surface layer that a spike can only enter by exceeding its
/// strength with tip stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Duricrust {
    /// Compressive strength of the crust, Pa.
    pub strength: f64,
    /// Crust thickness, m.
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilProfile {
    pub name: String,
    pub layers: Vec<SoilLayer>,
    #[serde(default)]
    pub duricrust: Option<Duricrust>,
    /// Angle of repose of the loosened material, degrees.
    pub repose_angle: f64,
    /// Slope of the anchoring-work line, J per N of draft.
    pub anchoring_slope: f64,
    /// Bulk density of undisturbed material, kg/m³.
    #[serde(default = "default_density")]
    pub bank_density: f64,
    /// Accept layers whose resistance decreases with depth.
    #[serde(default)]
    pub allow_softening: bool,
}

fn default_density() -> f64 {
    1600.0
}

/// Cone resistance of the "soft" calibration soil, Pa.
pub const SOFT_Q: f64 = 960e3;
/// Cone resistance of the "medium" calibration soil, Pa.
pub const MEDIUM_Q: f64 = 3.9e6;
/// Cone resistance of the "hard" calibration soil, Pa.
pub const HARD_Q: f64 = 6.0e6;

impl SoilProfile {
    pub fn new(
        name: impl Into<String>,
        layers: Vec<SoilLayer>,
        duricrust: Option<Duricrust>,
        repose_angle: f64,
        anchoring_slope: f64,
    ) -> Result<Self> {
        let p = Self {
            name: name.into(),
            layers,
            duricrust,
            repose_angle,
            anchoring_slope,
            bank_density: default_density(),
            allow_softening: false,
        };
        p.validate()?;
        Ok(p)
    }

    fn uniform(name: &str, q: f64, slope: f64, repose: f64) -> Self {
        Self {
            name: name.into(),
            layers: vec![SoilLayer {
                thickness: 1.0,
                cone_resistance: q,
                density_scale: 1.0,
                friction_mu: 0.5,
            }],
            duricrust: None,
            repose_angle: repose,
            anchoring_slope: slope,
            bank_density: default_density(),
            allow_softening: false,
        }
    }

    /// 960 kPa soil; anchoring 300 N costs 30 J.
    pub fn soft() -> Self {
        Self::uniform("soft", SOFT_Q, 0.1, 35.0)
    }

    /// 3.9 MPa soil. The anchoring slope is a placeholder default.
    pub fn medium() -> Self {
        Self::uniform("medium", MEDIUM_Q, 0.05, 38.0)
    }

    /// 6 MPa soil. The anchoring slope is a placeholder default.
    pub fn hard() -> Self {
        Self::uniform("hard", HARD_Q, 0.033, 40.0)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "soft" => Some(Self::soft()),
            "medium" => Some(Self::medium()),
            "hard" => Some(Self::hard()),
            _ => None,
        }
    }

    pub fn with_duricrust(mut self, crust: Duricrust) -> Self {
        self.duricrust = Some(crust);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("soil '{}': {m}", self.name)));
        if self.layers.is_empty() {
            return bad("at least one layer required".into());
        }
        let mut prev_q = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.thickness > 0.0) {
                return bad(format!("layer {i} thickness must be > 0"));
            }
            if !(l.cone_resistance > 0.0) {
                return bad(format!("layer {i} cone resistance must be > 0"));
            }
            if !(l.friction_mu > 0.0 && l.friction_mu < 2.0) {
                return bad(format!("layer {i} friction must lie in (0, 2)"));
            }
            if !(l.density_scale > 0.0) {
                return bad(format!("layer {i} density scale must be > 0"));
            }
            if !self.allow_softening && l.cone_resistance < prev_q {
                return bad(format!(
                    "layer {i} resistance decreases with depth (set allow_softening to override)"
                ));
            }
            prev_q = l.cone_resistance;
        }
        if !(self.repose_angle > 0.0 && self.repose_angle <= 60.0) {
            return bad(format!(
                "repose angle {} outside (0, 60]",
                self.repose_angle
            ));
        }
        if !(self.anchoring_slope >= 0.0) {
            return bad("anchoring slope must be >= 0".into());
        }
        if !(self.bank_density > 0.0) {
            return bad("bank density must be > 0".into());
        }
        if let Some(c) = self.duricrust {
            if !(c.strength > 0.0 && c.thickness > 0.0) {
                return bad("duricrust strength and thickness must be > 0".into());
            }
        }
        Ok(())
    }

    fn layer_index(&self, depth: f64) -> usize {
        let mut top = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            let bottom = top + l.thickness;
            if depth < bottom {
                return i;
            }
            top = bottom;
        }
        self.layers.len() - 1
    }

    /// Cone resistance at `depth` below the original surface.
    pub fn resistance_at(&self, depth: f64) -> Result<f64> {
        if !(depth >= 0.0) {
            return domain(format!("depth must be >= 0, got {depth}"));
        }
        Ok(self.layers[self.layer_index(depth)].cone_resistance)
    }

    /// ∫₀^depth q(z) dz, Pa·m.
    pub fn integrated_resistance(&self, depth: f64) -> Result<f64> {
        if !(depth >= 0.0) {
            return domain(format!("depth must be >= 0, got {depth}"));
        }
        let mut acc = 0.0;
        let mut top = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            let last = i + 1 == self.layers.len();
            let bottom = if last {
                f64::INFINITY
            } else {
                top + l.thickness
            };
            if depth <= bottom {
                return Ok(acc + (depth - top) * l.cone_resistance);
            }
            acc += l.thickness * l.cone_resistance;
            top = bottom;
        }
        unreachable!("last layer extends to infinity")
    }

    /// Largest resistance anywhere in the profile.
    pub fn max_resistance(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.cone_resistance)
            .fold(0.0, f64::max)
    }

    pub fn surface_friction(&self) -> f64 {
        self.layers[0].friction_mu
    }

    pub fn density_at(&self, depth: f64) -> f64 {
        self.bank_density * self.layers[self.layer_index(depth.max(0.0))].density_scale
    }

    /// Whether a tip pressing with `normal_force` on `tip_area` breaks the
    /// crust. Always true when the profile has no duricrust.
    pub fn duricrust_break_check(&self, normal_force: f64, tip_area: f64) -> bool {
        debug_assert!(normal_force >= 0.0 && tip_area > 0.0);
        match self.duricrust {
            None => true,
            Some(c) => normal_force / tip_area >= c.strength,
        }
    }
}

/// Circular region of the site with its own soil profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilPatch {
    pub center: (f64, f64),
    pub radius: f64,
    pub profile: SoilProfile,
}

/// Laterally varying soil: a base profile overridden inside patches.
/// Later patches take precedence over earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilMap {
    pub base: SoilProfile,
    #[serde(default)]
    pub patches: Vec<SoilPatch>,
}

impl SoilMap {
    pub fn uniform(profile: SoilProfile) -> Self {
        Self {
            base: profile,
            patches: Vec::new(),
        }
    }

    pub fn profile_at(&self, x: f64, y: f64) -> &SoilProfile {
        self.patches
            .iter()
            .rev()
            .find(|p| {
                let (dx, dy) = (x - p.center.0, y - p.center.1);
                dx * dx + dy * dy <= p.radius * p.radius
            })
            .map(|p| &p.profile)
            .unwrap_or(&self.base)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for p in &self.patches {
            if !(p.radius > 0.0) {
                return Err(Error::Config("soil patch radius must be > 0".into()));
            }
            p.profile.validate()?;
        }
        Ok(())
    }

    /// Largest resistance of any profile that reaches into the disc.
    pub fn max_resistance_within(&self, center: (f64, f64), radius: f64) -> f64 {
        self.patches
            .iter()
            .filter(|p| (p.center.0 - center.0).hypot(p.center.1 - center.1) <= p.radius + radius)
            .map(|p| p.profile.max_resistance())
            .fold(self.base.max_resistance(), f64::max)
    }

    pub fn max_resistance(&self) -> f64 {
        self.patches
            .iter()
            .map(|p| p.profile.max_resistance())
            .fold(self.base.max_resistance(), f64::max)
    }
}
