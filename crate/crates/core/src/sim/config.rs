//! World description files.
//!
//! Worlds are TOML documents. Geometry is given in metres, rectangles as
//! `[x0, y0, x1, y1]`, segments as `[ax, ay, bx, by]`, discs as `[x, y, r]` and
//! poses as `[x, y, heading]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sim::geometry::{Disc, Rect, Segment, Vec2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldKind {
    /// Building with rooms, doors and markers; used to evolve behaviours.
    Ltl,
    /// Pen with a target block; used for in-task learning trials.
    Stl,
}

/// Physical constants of the simulated robot (e-puck-like).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    pub wheel_radius: f64,
    pub axle_length: f64,
    pub body_radius: f64,
    /// Wheel rotation per speed unit, rad/s.
    pub speed_unit: f64,
    pub max_wheel_speed: f64,
    pub substeps: u32,
    pub camera_fov: f64,
    pub camera_range: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            wheel_radius: 0.0205,
            axle_length: 0.053,
            body_radius: 0.037,
            speed_unit: 0.00683,
            max_wheel_speed: 1000.0,
            substeps: 8,
            camera_fov: 0.3,
            camera_range: 2.0,
        }
    }
}

impl RobotParams {
    /// Linear rim speed in m/s for a wheel command in speed units.
    pub fn rim_speed(&self, speed_units: f64) -> f64 {
        speed_units * self.speed_unit * self.wheel_radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoorConfig {
    pub segment: [f64; 4],
    pub from_room: usize,
    pub to_room: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerConfig {
    pub rect: [f64; 4],
    /// Marker is only painted while this door is open.
    #[serde(default)]
    pub door: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    /// Width and depth of the blue block.
    pub size: [f64; 2],
    /// Region in which the block centre is placed.
    pub region: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnConfig {
    pub robot: [f64; 4],
    #[serde(default)]
    pub wanderer: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub name: String,
    pub kind: WorldKind,
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    #[serde(default)]
    pub pillars: Vec<[f64; 3]>,
    /// Solid, non-blue clutter boxes.
    #[serde(default)]
    pub blocks: Vec<[f64; 4]>,
    #[serde(default)]
    pub markers: Vec<MarkerConfig>,
    #[serde(default)]
    pub rooms: Vec<[f64; 4]>,
    #[serde(default)]
    pub doors: Vec<DoorConfig>,
    #[serde(default)]
    pub start: Option<[f64; 3]>,
    #[serde(default)]
    pub finish: Option<[f64; 4]>,
    #[serde(default)]
    pub wanderer: bool,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub spawn: Option<SpawnConfig>,
    #[serde(default)]
    pub robot: RobotParams,
}

pub(crate) fn rect(r: [f64; 4]) -> Rect {
    Rect::new(
        r[0].min(r[2]),
        r[1].min(r[3]),
        r[0].max(r[2]),
        r[1].max(r[3]),
    )
}

pub(crate) fn segment(s: [f64; 4]) -> Segment {
    Segment::new(s[0], s[1], s[2], s[3])
}

pub(crate) fn disc(d: [f64; 3]) -> Disc {
    Disc {
        center: Vec2::new(d[0], d[1]),
        radius: d[2],
    }
}

const BUILTINS: &[(&str, &str)] = &[
    ("world-a1", include_str!("../../worlds/world-a1.toml")),
    ("world-a2", include_str!("../../worlds/world-a2.toml")),
    ("world-b3", include_str!("../../worlds/world-b3.toml")),
    ("world-b4", include_str!("../../worlds/world-b4.toml")),
];

impl WorldConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: WorldConfig =
            toml::from_str(text).map_err(|e| Error::WorldConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a file, falling back to the bundled worlds by name.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() {
            return Self::parse(&std::fs::read_to_string(path)?);
        }
        let name = path.to_string_lossy();
        Self::builtin(&name)
            .ok_or_else(|| Error::WorldConfig(format!("no such file or bundled world: {name}")))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("bundled world parses"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::WorldConfig(format!("{}: {m}", self.name)));
        match self.kind {
            WorldKind::Ltl => {
                if self.start.is_none() {
                    return bad("building worlds need a start pose");
                }
                if self.finish.is_none() {
                    return bad("building worlds need a finish line");
                }
                for d in &self.doors {
                    if d.from_room >= self.rooms.len() || d.to_room >= self.rooms.len() {
                        return bad("door references an unknown room");
                    }
                }
            }
            WorldKind::Stl => {
                if self.target.is_none() {
                    return bad("pen worlds need a target");
                }
                if self.spawn.is_none() {
                    return bad("pen worlds need spawn regions");
                }
            }
        }
        for m in &self.markers {
            if matches!(m.door, Some(d) if d >= self.doors.len()) {
                return bad("marker references an unknown door");
            }
        }
        if self.robot.substeps == 0 {
            return bad("substeps must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_worlds_parse() {
        for name in WorldConfig::builtin_names() {
            let w = WorldConfig::builtin(name).unwrap();
            assert_eq!(w.name, name);
        }
    }

    #[test]
    fn rejects_pen_without_target() {
        let err = WorldConfig::parse("name = \"x\"\nkind = \"stl\"\n").unwrap_err();
        assert!(err.to_string().contains("target"));
    }
}
