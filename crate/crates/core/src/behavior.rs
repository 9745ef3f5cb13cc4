//! Antibodies: parameterized behaviours and their wheel commands.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::sim::{BlobReport, WheelCommand};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BehaviourType {
    WanderSingle = 0,
    WanderBoth = 1,
    ForwardTurn = 2,
    StaticTurn = 3,
    ReverseTurn = 4,
    TrackMarkers = 5,
}

impl BehaviourType {
    pub const ALL: [BehaviourType; 6] = [
        BehaviourType::WanderSingle,
        BehaviourType::WanderBoth,
        BehaviourType::ForwardTurn,
        BehaviourType::StaticTurn,
        BehaviourType::ReverseTurn,
        BehaviourType::TrackMarkers,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Antibody attributes in encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attr {
    Speed,
    Freq,
    Angle,
    Dir,
    RightFreq,
    RightAngle,
}

impl Attr {
    pub const ALL: [Attr; 6] = [
        Attr::Speed,
        Attr::Freq,
        Attr::Angle,
        Attr::Dir,
        Attr::RightFreq,
        Attr::RightAngle,
    ];
}

type Bound = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeLimits {
    pub speed: Bound,
    pub freq: Option<Bound>,
    pub angle: Option<Bound>,
    pub dir: bool,
    pub right_freq: Option<Bound>,
    pub right_angle: Option<Bound>,
}

impl TypeLimits {
    fn bound(&self, attr: Attr) -> Option<Bound> {
        match attr {
            Attr::Speed => Some(self.speed),
            Attr::Freq => self.freq,
            Attr::Angle => self.angle,
            Attr::Dir => None,
            Attr::RightFreq => self.right_freq,
            Attr::RightAngle => self.right_angle,
        }
    }
}

/// Attribute bounds per behaviour type.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitProfile {
    pub name: &'static str,
    pub types: [TypeLimits; 6],
}

const fn limits(
    speed: Bound,
    freq: Option<Bound>,
    angle: Option<Bound>,
    dir: bool,
    right: Option<(Bound, Bound)>,
) -> TypeLimits {
    let (right_freq, right_angle) = match right {
        Some((f, a)) => (Some(f), Some(a)),
        None => (None, None),
    };
    TypeLimits {
        speed,
        freq,
        angle,
        dir,
        right_freq,
        right_angle,
    }
}

impl LimitProfile {
    /// Full-speed attribute limits.
    pub fn table2() -> Self {
        Self {
            name: "table2",
            types: [
                limits((50., 800.), Some((10., 90.)), Some((10., 110.)), true, None),
                limits(
                    (50., 800.),
                    Some((10., 90.)),
                    Some((10., 110.)),
                    false,
                    Some(((10., 90.), (10., 110.))),
                ),
                limits((50., 800.), None, Some((20., 200.)), true, None),
                limits((50., 800.), None, Some((100., 100.)), true, None),
                limits((500., 800.), None, Some((20., 200.)), true, None),
                limits((50., 800.), None, Some((0., 30.)), false, None),
            ],
        }
    }

    /// Reduced speeds: static turn at most 100, reverse turn 300-400, all
    /// other types at most 400.
    pub fn slow() -> Self {
        let mut p = Self::table2();
        p.name = "slow";
        for (t, l) in BehaviourType::ALL.iter().zip(p.types.iter_mut()) {
            l.speed = match t {
                BehaviourType::StaticTurn => (50., 100.),
                BehaviourType::ReverseTurn => (300., 400.),
                _ => (50., 400.),
            };
        }
        p
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "table2" => Some(Self::table2()),
            "slow" => Some(Self::slow()),
            _ => None,
        }
    }

    pub fn of(&self, t: BehaviourType) -> &TypeLimits {
        &self.types[t.index()]
    }

    /// Largest wheel magnitude any antibody under this profile can command.
    pub fn max_wheel_magnitude(&self) -> f64 {
        self.types
            .iter()
            .map(|l| {
                let worst_reduction = [l.angle, l.right_angle]
                    .iter()
                    .flatten()
                    .map(|b| (1.0 - b.1 / 100.0).abs())
                    .fold(1.0_f64, f64::max);
                l.speed.1 * worst_reduction
            })
            .fold(0.0, f64::max)
    }
}

/// One behaviour. Attributes a type does not use are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antibody {
    pub kind: BehaviourType,
    pub speed: f64,
    pub freq: Option<f64>,
    pub angle: Option<f64>,
    pub dir: Option<Side>,
    pub right_freq: Option<f64>,
    pub right_angle: Option<f64>,
}

impl Antibody {
    pub fn get(&self, attr: Attr) -> Option<f64> {
        match attr {
            Attr::Speed => Some(self.speed),
            Attr::Freq => self.freq,
            Attr::Angle => self.angle,
            Attr::Dir => self.dir.map(|d| if d == Side::Left { 0.0 } else { 1.0 }),
            Attr::RightFreq => self.right_freq,
            Attr::RightAngle => self.right_angle,
        }
    }

    /// Sets a numeric attribute the type uses; ignores unused ones.
    pub fn set(&mut self, attr: Attr, v: f64) {
        let slot = match attr {
            Attr::Speed => {
                self.speed = v;
                return;
            }
            Attr::Freq => &mut self.freq,
            Attr::Angle => &mut self.angle,
            Attr::Dir => {
                if self.dir.is_some() {
                    self.dir = Some(if v < 0.5 { Side::Left } else { Side::Right });
                }
                return;
            }
            Attr::RightFreq => &mut self.right_freq,
            Attr::RightAngle => &mut self.right_angle,
        };
        if slot.is_some() {
            *slot = Some(v);
        }
    }

    /// True when every used attribute is inside `limits` and unused ones are null.
    pub fn within(&self, limits: &LimitProfile) -> bool {
        let l = limits.of(self.kind);
        if l.dir != self.dir.is_some() {
            return false;
        }
        Attr::ALL
            .iter()
            .filter(|a| **a != Attr::Dir)
            .all(|&a| match (l.bound(a), self.get(a)) {
                (Some((lo, hi)), Some(v)) => v >= lo && v <= hi,
                (None, None) => true,
                _ => false,
            })
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, b: Bound) -> f64 {
    // Integer-valued draws across the inclusive bound.
    rng.gen_range(b.0 as i64..=b.1 as i64) as f64
}

/// Random behaviour: uniform type, then each used attribute uniform over its
/// integer bound.
pub fn random_antibody<R: Rng + ?Sized>(limits: &LimitProfile, rng: &mut R) -> Antibody {
    let kind = BehaviourType::ALL[rng.gen_range(0..6)];
    random_of_type(kind, limits, rng)
}

pub fn random_of_type<R: Rng + ?Sized>(
    kind: BehaviourType,
    limits: &LimitProfile,
    rng: &mut R,
) -> Antibody {
    let l = limits.of(kind);
    let speed = draw(rng, l.speed);
    let freq = l.freq.map(|b| draw(rng, b));
    let angle = l.angle.map(|b| draw(rng, b));
    let dir = l.dir.then(|| {
        if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        }
    });
    let right_freq = l.right_freq.map(|b| draw(rng, b));
    let right_angle = l.right_angle.map(|b| draw(rng, b));
    Antibody {
        kind,
        speed,
        freq,
        angle,
        dir,
        right_freq,
        right_angle,
    }
}

/// Clamps every used attribute into its bound.
pub fn clamp_to_limits(ab: &Antibody, limits: &LimitProfile) -> Antibody {
    let l = limits.of(ab.kind);
    let mut out = *ab;
    for attr in Attr::ALL {
        if let (Some((lo, hi)), Some(v)) = (l.bound(attr), ab.get(attr)) {
            out.set(attr, v.clamp(lo, hi));
        }
    }
    out
}

fn reduced(speed: f64, percent: f64) -> f64 {
    speed * (1.0 - percent / 100.0)
}

/// Steers with wheel `side` reduced by `percent`.
fn turn(side: Side, speed: f64, percent: f64) -> WheelCommand {
    match side {
        Side::Left => WheelCommand::new(reduced(speed, percent), speed),
        Side::Right => WheelCommand::new(speed, reduced(speed, percent)),
    }
}

/// Wheel command for one control tick.
///
/// Wander types redraw their turn decisions every tick; track-markers steers
/// proportionally to the blob centroid's offset from the image centre.
pub fn act<R: Rng + ?Sized>(ab: &Antibody, blob: &BlobReport, rng: &mut R) -> WheelCommand {
    let s = ab.speed;
    let a = ab.angle.unwrap_or(0.0);
    let d = ab.dir.unwrap_or(Side::Left);
    match ab.kind {
        BehaviourType::WanderSingle => {
            let f = ab.freq.unwrap_or(0.0) / 100.0;
            if rng.gen::<f64>() < f {
                turn(d, s, a)
            } else {
                WheelCommand::new(s, s)
            }
        }
        BehaviourType::WanderBoth => {
            let left = rng.gen::<f64>() < ab.freq.unwrap_or(0.0) / 100.0;
            let right = rng.gen::<f64>() < ab.right_freq.unwrap_or(0.0) / 100.0;
            match (left, right) {
                (true, false) => turn(Side::Left, s, a),
                (false, true) => turn(Side::Right, s, ab.right_angle.unwrap_or(0.0)),
                _ => WheelCommand::new(s, s),
            }
        }
        BehaviourType::ForwardTurn => turn(d, s, a),
        BehaviourType::StaticTurn => turn(d, s, 100.0),
        BehaviourType::ReverseTurn => {
            let c = turn(d, s, a);
            WheelCommand::new(-c.left, -c.right)
        }
        BehaviourType::TrackMarkers => {
            if !blob.seen {
                return WheelCommand::new(s, s);
            }
            let half = (crate::sim::CAMERA_COLUMNS as f64 - 1.0) / 2.0;
            let offset = (f64::from(blob.centroid_col) - half) / half;
            let side = if offset < 0.0 {
                Side::Left
            } else {
                Side::Right
            };
            turn(side, s, offset.abs().min(1.0) * a)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl fmt::Display for Antibody {
    /// `U;S;F;A;D;RF;RA`, `-` for null.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.dir {
            None => "-",
            Some(Side::Left) => "L",
            Some(Side::Right) => "R",
        };
        write!(
            f,
            "{};{};{};{};{};{};{}",
            self.kind.index(),
            self.speed,
            fmt_opt(self.freq),
            fmt_opt(self.angle),
            d,
            fmt_opt(self.right_freq),
            fmt_opt(self.right_angle)
        )
    }
}

impl FromStr for Antibody {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = |msg: &str| Error::AntibodyParse {
            text: text.to_string(),
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = text.trim().split(';').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(err("expected 7 `;`-separated fields"));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s == "-" {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| err(&format!("bad number `{s}`")))
        };
        let kind = fields[0]
            .parse::<usize>()
            .ok()
            .and_then(BehaviourType::from_index)
            .ok_or_else(|| err("type must be 0-5"))?;
        let speed = num(fields[1])?.ok_or_else(|| err("speed is required"))?;
        let dir = match fields[4] {
            "-" => None,
            "L" => Some(Side::Left),
            "R" => Some(Side::Right),
            other => return Err(err(&format!("direction `{other}` is not L, R or -"))),
        };
        let ab = Antibody {
            kind,
            speed,
            freq: num(fields[2])?,
            angle: num(fields[3])?,
            dir,
            right_freq: num(fields[5])?,
            right_angle: num(fields[6])?,
        };
        // Null pattern must match the type.
        let l = LimitProfile::table2();
        let l = l.of(kind);
        let pattern_ok = l.freq.is_some() == ab.freq.is_some()
            && l.angle.is_some() == ab.angle.is_some()
            && l.dir == ab.dir.is_some()
            && l.right_freq.is_some() == ab.right_freq.is_some()
            && l.right_angle.is_some() == ab.right_angle.is_some();
        if !pattern_ok {
            return Err(err("null attributes do not match the behaviour type"));
        }
        Ok(ab)
    }
}
