//! Deterministic desk-scale 2D world.
//!
//! One mission robot with differential-drive kinematics, an eight-sensor IR ring
//! and a 15x3 blob camera, plus static walls, pillars, boxes, doors, painted
//! markers, a target block and an optional wandering dummy robot.

pub mod config;
pub mod geometry;
mod sensors;

use std::sync::Arc;

use rand::Rng;

pub use config::{RobotParams, WorldConfig, WorldKind};
pub use geometry::{normalize_angle, Disc, Rect, Segment, Vec2};
pub use sensors::{ir_curve, BlobReport, IrReadings, CAMERA_COLUMNS, IR_SENSOR_ANGLES};

/// Gap under which two bodies are considered touching.
const CONTACT_EPS: f64 = 1e-4;

/// Wanderer forward speed in speed units.
const WANDERER_SPEED: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `[-π, π)`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Exact arc integration for constant linear speed `v` and turn rate `w`.
    fn advanced(&self, v: f64, w: f64, dt: f64) -> Pose {
        let (dx, dy) = if w.abs() < 1e-12 {
            (v * dt * self.heading.cos(), v * dt * self.heading.sin())
        } else {
            let r = v / w;
            let h1 = self.heading + w * dt;
            (
                r * (h1.sin() - self.heading.sin()),
                -r * (h1.cos() - self.heading.cos()),
            )
        };
        Pose::new(self.x + dx, self.y + dy, self.heading + w * dt)
    }
}

/// Wheel speeds in speed units per second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
}

impl WheelCommand {
    pub const STOP: WheelCommand = WheelCommand {
        left: 0.0,
        right: 0.0,
    };

    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }

    pub fn clamped(self, max: f64) -> Self {
        let c = |v: f64| {
            if v.is_finite() {
                v.clamp(-max, max)
            } else {
                0.0
            }
        };
        Self::new(c(self.left), c(self.right))
    }
}

/// Compiled static geometry shared by every run in a world.
#[derive(Debug)]
pub struct WorldGeometry {
    pub config: WorldConfig,
    pub walls: Vec<Segment>,
    pub pillars: Vec<Disc>,
    pub blocks: Vec<Rect>,
    pub markers: Vec<(Rect, Option<usize>)>,
    pub rooms: Vec<Rect>,
    pub doors: Vec<Segment>,
    pub finish: Option<Segment>,
}

impl WorldGeometry {
    pub fn new(config: WorldConfig) -> Self {
        Self {
            walls: config.walls.iter().copied().map(config::segment).collect(),
            pillars: config.pillars.iter().copied().map(config::disc).collect(),
            blocks: config.blocks.iter().copied().map(config::rect).collect(),
            markers: config
                .markers
                .iter()
                .map(|m| (config::rect(m.rect), m.door))
                .collect(),
            rooms: config.rooms.iter().copied().map(config::rect).collect(),
            doors: config
                .doors
                .iter()
                .map(|d| config::segment(d.segment))
                .collect(),
            finish: config.finish.map(config::segment),
            config,
        }
    }

    pub fn params(&self) -> &RobotParams {
        &self.config.robot
    }

    pub fn room_of(&self, p: Vec2) -> Option<usize> {
        self.rooms.iter().position(|r| r.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Wanderer {
    pose: Pose,
    turn_rate: f64,
}

/// Solid obstacle shapes as seen by contact and IR queries.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Solid {
    Seg(Segment),
    Disc(Disc),
    Rect(Rect),
}

impl Solid {
    fn separation(&self, p: Vec2, r: f64) -> (Vec2, f64) {
        match self {
            Solid::Seg(s) => {
                let cp = s.closest_point(p);
                let d = p - cp;
                let n = d.norm();
                if n > 1e-12 {
                    (d * (1.0 / n), n - r)
                } else {
                    let e = s.b - s.a;
                    let len = e.norm().max(1e-12);
                    (Vec2::new(-e.y / len, e.x / len), -r)
                }
            }
            Solid::Disc(d) => d.separation(p, r),
            Solid::Rect(rc) => rc.separation(p, r),
        }
    }

    pub(crate) fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        match self {
            Solid::Seg(s) => s.ray_hit(origin, dir),
            Solid::Disc(d) => d.ray_hit(origin, dir),
            Solid::Rect(r) => r.ray_hit(origin, dir),
        }
    }
}

/// Full mutable state of one run.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub geometry: Arc<WorldGeometry>,
    pub robot: Pose,
    wanderer: Option<Wanderer>,
    pub doors_open: Vec<bool>,
    pub doors_passed: usize,
    pub target: Option<Rect>,
    /// Simulated seconds since the run started.
    pub clock: f64,
    pub collisions: u32,
    pub in_contact: bool,
    pub room: Option<usize>,
    pub finished: bool,
    /// Multiplicative IR noise switch.
    pub noise: bool,
    last_center: Vec2,
}

impl WorldState {
    /// Fresh state. Building worlds start at their configured pose; pen worlds
    /// place the robot at the centre of its spawn region until
    /// [`WorldState::randomize_layout`] is called.
    pub fn new(geometry: Arc<WorldGeometry>) -> Self {
        let cfg = &geometry.config;
        let robot = match (cfg.start, &cfg.spawn) {
            (Some(s), _) => Pose::new(s[0], s[1], s[2]),
            (None, Some(sp)) => {
                let c = config::rect(sp.robot).center();
                Pose::new(c.x, c.y, std::f64::consts::FRAC_PI_2)
            }
            (None, None) => Pose::default(),
        };
        let target = cfg.target.as_ref().map(|t| {
            let c = config::rect(t.region).center();
            Rect::from_center(c, t.size[0], t.size[1])
        });
        let room = geometry.room_of(robot.position());
        let n_doors = geometry.doors.len();
        let mut state = Self {
            robot,
            wanderer: None,
            doors_open: vec![true; n_doors],
            doors_passed: 0,
            target,
            clock: 0.0,
            collisions: 0,
            in_contact: false,
            room,
            finished: false,
            noise: true,
            last_center: robot.position(),
            geometry,
        };
        if state.geometry.config.wanderer {
            // Deterministic initial spot; callers re-place it with their RNG.
            let spot = state
                .room
                .map(|r| state.geometry.rooms[r].center())
                .or_else(|| {
                    state
                        .geometry
                        .config
                        .spawn
                        .as_ref()
                        .and_then(|s| s.wanderer)
                        .map(|w| config::rect(w).center())
                });
            if let Some(p) = spot {
                state.wanderer = Some(Wanderer {
                    pose: Pose::new(p.x, p.y, 0.0),
                    turn_rate: 0.0,
                });
            }
        }
        state
    }

    pub fn from_config(config: WorldConfig) -> Self {
        Self::new(Arc::new(WorldGeometry::new(config)))
    }

    pub fn params(&self) -> &RobotParams {
        self.geometry.params()
    }

    pub fn wanderer_pose(&self) -> Option<Pose> {
        self.wanderer.map(|w| w.pose)
    }

    pub fn set_wanderer_pose(&mut self, pose: Option<Pose>) {
        self.wanderer = pose.map(|pose| Wanderer {
            pose,
            turn_rate: 0.0,
        });
    }

    /// Solids excluding the mission robot. `skip_wanderer` excludes the
    /// wanderer as well (used when moving the wanderer itself).
    pub(crate) fn solids(&self, skip_wanderer: bool) -> impl Iterator<Item = Solid> + '_ {
        let g = &*self.geometry;
        let r = self.params().body_radius;
        g.walls
            .iter()
            .map(|s| Solid::Seg(*s))
            .chain(
                g.doors
                    .iter()
                    .zip(&self.doors_open)
                    .filter(|(_, open)| !**open)
                    .map(|(s, _)| Solid::Seg(*s)),
            )
            .chain(g.pillars.iter().map(|d| Solid::Disc(*d)))
            .chain(g.blocks.iter().map(|b| Solid::Rect(*b)))
            .chain(self.target.iter().map(|t| Solid::Rect(*t)))
            .chain(
                self.wanderer
                    .iter()
                    .filter(move |_| !skip_wanderer)
                    .map(move |w| {
                        Solid::Disc(Disc {
                            center: w.pose.position(),
                            radius: r,
                        })
                    }),
            )
    }

    /// Pushes the robot out of every penetrated solid; true if touching any.
    fn resolve_contacts(&mut self) -> bool {
        let r = self.params().body_radius;
        let mut touching = false;
        for _ in 0..4 {
            let mut p = self.robot.position();
            let mut moved = false;
            let solids: Vec<Solid> = self.solids(false).collect();
            for s in &solids {
                let (n, gap) = s.separation(p, r);
                if gap < CONTACT_EPS {
                    touching = true;
                }
                if gap < 0.0 {
                    p = p + n * (-gap);
                    moved = true;
                }
            }
            self.robot.x = p.x;
            self.robot.y = p.y;
            if !moved {
                break;
            }
        }
        touching
    }

    /// Advances the mission robot by one control period.
    ///
    /// Contact onset (no contact during the previous call, contact during
    /// this one) counts as exactly one collision.
    pub fn step(&mut self, cmd: WheelCommand, dt: f64) {
        assert!(dt > 0.0, "step needs a positive dt");
        let p = *self.params();
        let cmd = cmd.clamped(p.max_wheel_speed);
        let vl = p.rim_speed(cmd.left);
        let vr = p.rim_speed(cmd.right);
        let v = 0.5 * (vl + vr);
        let w = (vr - vl) / p.axle_length;
        let h = dt / f64::from(p.substeps);
        let mut touched = false;
        for _ in 0..p.substeps {
            if v != 0.0 || w != 0.0 {
                self.robot = self.robot.advanced(v, w, h);
            }
            touched |= self.resolve_contacts();
        }
        if touched && !self.in_contact {
            self.collisions += 1;
        }
        self.in_contact = touched;
        self.clock += dt;
    }

    /// Door, finish-line and wanderer bookkeeping after a control period.
    pub fn supervisor_tick<R: Rng + ?Sized>(&mut self, rng: &mut R, dt: f64) {
        self.move_wanderer(rng, dt);

        let center = self.robot.position();
        let r = self.params().body_radius;
        let room = self.geometry.room_of(center);
        if room.is_some() && room != self.room {
            self.room = room;
            if let Some(room) = room {
                self.place_wanderer_in(self.geometry.rooms[room], rng);
            }
        }

        let geometry = Arc::clone(&self.geometry);
        for (i, door) in geometry.config.doors.iter().enumerate() {
            if self.doors_open[i]
                && self.room == Some(door.to_room)
                && geometry.doors[i].distance(center) > r + 0.01
            {
                self.doors_open[i] = false;
                self.doors_passed += 1;
            }
        }

        if let Some(finish) = geometry.finish {
            if finish.crossed_by(self.last_center, center) {
                self.finished = true;
            }
        }
        self.last_center = center;
    }

    /// True if a disc of the robot's radius at `p` is clear of every solid
    /// (optionally ignoring the wanderer) and of the mission robot.
    fn is_free(&self, p: Vec2, clearance: f64, skip_wanderer: bool, check_robot: bool) -> bool {
        let r = self.params().body_radius;
        if check_robot && p.dist(self.robot.position()) < 2.0 * r + clearance {
            return false;
        }
        self.solids(skip_wanderer)
            .all(|s| s.separation(p, r).1 >= clearance)
    }

    fn random_free_point<R: Rng + ?Sized>(
        &self,
        region: Rect,
        rng: &mut R,
        clearance: f64,
        skip_wanderer: bool,
        check_robot: bool,
    ) -> Option<Vec2> {
        let r = self.params().body_radius;
        let inner = region.shrink(r);
        if inner.width() <= 0.0 || inner.height() <= 0.0 {
            return None;
        }
        (0..500).find_map(|_| {
            let p = Vec2::new(
                rng.gen_range(inner.min.x..=inner.max.x),
                rng.gen_range(inner.min.y..=inner.max.y),
            );
            self.is_free(p, clearance, skip_wanderer, check_robot)
                .then_some(p)
        })
    }

    fn place_wanderer_in<R: Rng + ?Sized>(&mut self, region: Rect, rng: &mut R) {
        if self.wanderer.is_none() {
            return;
        }
        if let Some(p) = self.random_free_point(region, rng, 0.05, true, true) {
            let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            self.wanderer = Some(Wanderer {
                pose: Pose::new(p.x, p.y, heading),
                turn_rate: 0.0,
            });
        }
    }

    /// New random placement of robot, target and wanderer for pen worlds.
    pub fn randomize_layout<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let cfg = self.geometry.config.clone();
        let (Some(target_cfg), Some(spawn)) = (cfg.target.as_ref(), cfg.spawn.as_ref()) else {
            return;
        };
        let wanderer_present = self.wanderer.is_some();
        self.wanderer = None;

        let region = config::rect(target_cfg.region);
        let (w, h) = (target_cfg.size[0], target_cfg.size[1]);
        let tx = rng.gen_range(region.min.x..=region.max.x);
        let ty = rng.gen_range(region.min.y..=region.max.y);
        self.target = Some(Rect::from_center(Vec2::new(tx, ty), w, h));

        self.place_robot_in(config::rect(spawn.robot), rng);
        if wanderer_present {
            let region = spawn
                .wanderer
                .map(config::rect)
                .unwrap_or(config::rect(spawn.robot));
            self.wanderer = Some(Wanderer::default());
            self.place_wanderer_in(region, rng);
        }
        self.clock = 0.0;
        self.collisions = 0;
        self.in_contact = false;
        self.finished = false;
        self.last_center = self.robot.position();
    }

    fn place_robot_in<R: Rng + ?Sized>(&mut self, region: Rect, rng: &mut R) {
        if let Some(p) = self.random_free_point(region, rng, 0.02, true, false) {
            let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            self.robot = Pose::new(p.x, p.y, heading);
        }
        self.room = self.geometry.room_of(self.robot.position());
    }

    /// Fixed random-walk policy: cruise at constant speed, occasionally pick a
    /// new turn rate, and spin away from anything in the way.
    fn move_wanderer<R: Rng + ?Sized>(&mut self, rng: &mut R, dt: f64) {
        let Some(mut w) = self.wanderer else {
            return;
        };
        if rng.gen_bool(0.1) {
            w.turn_rate = rng.gen_range(-1.5..=1.5);
        }
        let v = self.params().rim_speed(WANDERER_SPEED);
        let next = w.pose.advanced(v, w.turn_rate, dt);
        if self.is_free(next.position(), 0.002, true, true) {
            w.pose = next;
        } else {
            let turn = rng.gen_range(std::f64::consts::FRAC_PI_2..=std::f64::consts::PI);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            w.pose = Pose::new(w.pose.x, w.pose.y, w.pose.heading + sign * turn);
            w.turn_rate = 0.0;
        }
        self.wanderer = Some(w);
    }

    /// Blue surfaces currently visible to the camera.
    pub(crate) fn blue_rects(&self) -> impl Iterator<Item = Rect> + '_ {
        self.geometry
            .markers
            .iter()
            .filter(|(_, door)| door.is_none_or(|d| self.doors_open[d]))
            .map(|(r, _)| *r)
            .chain(self.target)
    }
}
