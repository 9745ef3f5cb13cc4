//! Sensor state to antigen code.

use std::fmt;

use rand::Rng;

use crate::sim::{BlobReport, IrReadings, WorldState};

/// Obstacle threshold: readings at or above this are "near".
pub const NEAR_THRESHOLD: u16 = 250;
/// Readings at or above this are "collision".
pub const COLLISION_THRESHOLD: u16 = 2400;
/// Lower bound of the flanking window for the "near left and right" antigen.
pub const FLANK_THRESHOLD: u16 = 140;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AntigenMode {
    Eight,
    Nine,
}

impl AntigenMode {
    pub fn count(self) -> usize {
        match self {
            AntigenMode::Eight => 8,
            AntigenMode::Nine => 9,
        }
    }

    pub fn from_count(n: usize) -> Option<Self> {
        match n {
            8 => Some(AntigenMode::Eight),
            9 => Some(AntigenMode::Nine),
            _ => None,
        }
    }

    pub fn is_obstacle(self, code: u8) -> bool {
        code >= 2 && (code as usize) < self.count()
    }

    pub fn is_collision(self, code: u8) -> bool {
        match self {
            AntigenMode::Eight => (5..=7).contains(&code),
            AntigenMode::Nine => (6..=8).contains(&code),
        }
    }
}

impl fmt::Display for AntigenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AntigenCode {
    pub code: u8,
    pub mode: AntigenMode,
}

impl AntigenCode {
    pub fn new(code: u8, mode: AntigenMode) -> Option<Self> {
        ((code as usize) < mode.count()).then_some(Self { code, mode })
    }

    pub fn index(self) -> usize {
        self.code as usize
    }

    pub fn is_obstacle(self) -> bool {
        self.mode.is_obstacle(self.code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Right,
    Rear,
    Left,
}

impl Orientation {
    pub fn of_sensor(i: usize) -> Self {
        match i {
            0..=2 => Orientation::Right,
            3 | 4 => Orientation::Rear,
            _ => Orientation::Left,
        }
    }

    fn offset(self) -> u8 {
        match self {
            Orientation::Right => 0,
            Orientation::Rear => 1,
            Orientation::Left => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SensorSummary {
    pub i_max: usize,
    pub v_max: u16,
    pub blob: BlobReport,
}

/// Strongest IR sensor (ties go to the lowest index) plus the blob report.
pub fn summarize(ir: &IrReadings, blob: BlobReport) -> SensorSummary {
    let (i_max, v_max) =
        ir.values
            .iter()
            .enumerate()
            .fold(
                (0, ir.values[0]),
                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
            );
    SensorSummary { i_max, v_max, blob }
}

fn classify_common(s: &SensorSummary, near_base: u8, collision_base: u8) -> u8 {
    let side = Orientation::of_sensor(s.i_max).offset();
    if s.v_max >= COLLISION_THRESHOLD {
        collision_base + side
    } else if s.v_max >= NEAR_THRESHOLD {
        near_base + side
    } else if s.blob.seen {
        1
    } else {
        0
    }
}

/// Eight-antigen encoding: 0 target unseen, 1 target seen, 2-4 near
/// right/rear/left, 5-7 collision right/rear/left. Obstacles take priority.
pub fn classify8(s: &SensorSummary) -> AntigenCode {
    AntigenCode {
        code: classify_common(s, 2, 5),
        mode: AntigenMode::Eight,
    }
}

/// Nine-antigen encoding: adds code 5 "near left and right" (sensors 2 and 5
/// both in `[140, 2400)`), shifting collisions to 6-8.
pub fn classify9(s: &SensorSummary, raw: &IrReadings) -> AntigenCode {
    let flank = |v: u16| (FLANK_THRESHOLD..COLLISION_THRESHOLD).contains(&v);
    let code = if s.v_max < COLLISION_THRESHOLD && flank(raw.values[2]) && flank(raw.values[5]) {
        5
    } else {
        classify_common(s, 2, 6)
    };
    AntigenCode {
        code,
        mode: AntigenMode::Nine,
    }
}

/// Classifies raw readings in the given mode.
pub fn classify(
    mode: AntigenMode,
    ir: &IrReadings,
    blob: BlobReport,
) -> (AntigenCode, SensorSummary) {
    let s = summarize(ir, blob);
    let code = match mode {
        AntigenMode::Eight => classify8(&s),
        AntigenMode::Nine => classify9(&s, ir),
    };
    (code, s)
}

/// Reads the IR ring, then the camera only when no obstacle is near, and
/// classifies the result.
pub fn sense<R: Rng + ?Sized>(
    world: &WorldState,
    mode: AntigenMode,
    rng: &mut R,
) -> (AntigenCode, SensorSummary, IrReadings) {
    let ir = world.read_ir(rng);
    let v_max = ir.values.iter().copied().max().unwrap_or(0);
    let blob = if v_max < NEAR_THRESHOLD {
        world.read_blob()
    } else {
        BlobReport::UNSEEN
    };
    let (code, summary) = classify(mode, &ir, blob);
    (code, summary, ir)
}
