//! Reinforcement scores for antigen transitions.
//!
//! Long-term learning works in whole points; short-term learning uses the same
//! table scaled by one hundredth, except that it also rewards obstacle-free
//! wandering and penalizes running into obstacles.

use crate::perception::{AntigenMode, SensorSummary};
use crate::sim::BlobReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Ltl,
    Stl,
}

impl Phase {
    pub fn weight(self) -> f64 {
        match self {
            Phase::Ltl => 1.0,
            Phase::Stl => 0.01,
        }
    }
}

/// Cumulative-score threshold below which a behaviour is replaced during
/// long-term learning.
pub const LTL_REPLACE_THRESHOLD: f64 = -14.0;
/// Seconds without an antigen change before the active behaviour is replaced.
pub const LTL_STALL_SECONDS: f64 = 60.0;
/// Consecutive target-unseen iterations tolerated in short-term learning.
pub const STL_WANDER_LIMIT: u32 = 250;
/// Consecutive obstacle iterations tolerated in short-term learning.
pub const STL_OBSTACLE_LIMIT: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct RlScore(pub f64);

/// Shape of a table cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Fixed (LTL points, STL score).
    Fixed(f64, f64),
    /// 1 -> 1: depends on where the target sits in the image.
    Track,
    /// Obstacle -> obstacle: additive rubric.
    Obstacle,
    /// Nine-antigen mode, previous antigen "near left and right".
    BoostedObstacle,
}

/// Looks up the cell for a code pair.
pub fn table_cell(prev: u8, cur: u8, mode: AntigenMode) -> Result<Cell> {
    let n = mode.count() as u8;
    if prev >= n || cur >= n {
        return Err(Error::InvalidTransition { prev, cur, mode: n });
    }
    let obs = |c: u8| c >= 2;
    Ok(match (prev, cur) {
        (0, 0) => Cell::Fixed(0.0, 0.05),
        (1, 0) => Cell::Fixed(-10.0, -0.10),
        (p, 0) if obs(p) => Cell::Fixed(10.0, 0.10),
        (0, 1) => Cell::Fixed(10.0, 0.10),
        (1, 1) => Cell::Track,
        (p, 1) if obs(p) => Cell::Fixed(20.0, 0.20),
        (0 | 1, _) => Cell::Fixed(0.0, -0.05),
        (5, _) if mode == AntigenMode::Nine => Cell::BoostedObstacle,
        _ => Cell::Obstacle,
    })
}

/// Counters the obstacle rubric and stagnation rules depend on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Counters {
    /// Consecutive readings of the same near antigen.
    pub consecutive_near: u32,
    /// True when this reading started a new near streak from a different near antigen.
    pub near_reset: bool,
    /// Consecutive collision readings.
    pub consecutive_collision: u32,
    /// Seconds since the antigen last changed.
    pub same_antigen_clock: f64,
    /// Consecutive target-unseen readings.
    pub wander_run: u32,
    /// Consecutive obstacle readings.
    pub obstacle_run: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlContext {
    pub mode: AntigenMode,
    pub prev_code: u8,
    pub cur_code: u8,
    pub prev: SensorSummary,
    pub cur: SensorSummary,
    pub counters: Counters,
}

/// Builds contexts tick by tick and maintains the counters.
#[derive(Debug, Clone)]
pub struct RlTracker {
    mode: AntigenMode,
    prev: Option<(u8, SensorSummary)>,
    pub counters: Counters,
}

impl RlTracker {
    pub fn new(mode: AntigenMode) -> Self {
        Self {
            mode,
            prev: None,
            counters: Counters::default(),
        }
    }

    /// Records a reading; returns the transition context when there was a
    /// previous reading.
    pub fn observe(&mut self, code: u8, summary: SensorSummary, dt: f64) -> Option<RlContext> {
        let mode = self.mode;
        let c = &mut self.counters;
        let prev_code = self.prev.map(|p| p.0);
        let is_near = mode.is_obstacle(code) && !mode.is_collision(code);

        c.near_reset = false;
        if is_near {
            let prev_near = prev_code.filter(|&p| mode.is_obstacle(p) && !mode.is_collision(p));
            match prev_near {
                Some(p) if p == code => c.consecutive_near += 1,
                Some(_) => {
                    c.near_reset = true;
                    c.consecutive_near = 1;
                }
                None => c.consecutive_near = 1,
            }
        } else {
            c.consecutive_near = 0;
        }
        c.consecutive_collision = if mode.is_collision(code) {
            c.consecutive_collision + 1
        } else {
            0
        };
        c.wander_run = if code == 0 { c.wander_run + 1 } else { 0 };
        c.obstacle_run = if mode.is_obstacle(code) {
            c.obstacle_run + 1
        } else {
            0
        };
        if prev_code == Some(code) {
            c.same_antigen_clock += dt;
        } else {
            c.same_antigen_clock = 0.0;
        }

        let ctx = self.prev.map(|(pc, ps)| RlContext {
            mode,
            prev_code: pc,
            cur_code: code,
            prev: ps,
            cur: summary,
            counters: *c,
        });
        self.prev = Some((code, summary));
        ctx
    }
}

/// Score for a transition, in the phase's units.
pub fn transition_score(ctx: &RlContext, phase: Phase) -> Result<RlScore> {
    Ok(match table_cell(ctx.prev_code, ctx.cur_code, ctx.mode)? {
        Cell::Fixed(ltl, stl) => RlScore(match phase {
            Phase::Ltl => ltl,
            Phase::Stl => stl,
        }),
        Cell::Track => track_subscore(&ctx.prev.blob, &ctx.cur.blob, phase),
        Cell::Obstacle | Cell::BoostedObstacle => obstacle_subscore(ctx, phase),
    })
}

/// 0-5 points, full when the target is centred, zero at the image edge.
pub fn track_subscore(_prev: &BlobReport, cur: &BlobReport, phase: Phase) -> RlScore {
    let half = (crate::sim::CAMERA_COLUMNS as f64 - 1.0) / 2.0;
    let off = (f64::from(cur.centroid_col) - half).abs() / half;
    let points = (5.0 * (1.0 - off)).round().clamp(0.0, 5.0);
    RlScore(points * phase.weight())
}

/// Rank of a sensor's bearing away from straight ahead: 0 front .. 3 rear.
pub fn frontal_rank(sensor: usize) -> i32 {
    [0, 1, 2, 3, 3, 2, 1, 0][sensor]
}

/// Points per step of bearing change in the boosted rubric, before tripling.
const BOOSTED_STEP: f64 = 6.0;

/// Obstacle-to-obstacle rubric.
///
/// Standard rows: +2/-2 for a falling/rising strongest reading, +1/-1 for
/// distance class collision->near / near->collision, +1/-1 for the strongest
/// sensor moving away from / toward the front, -1 per five consecutive
/// collisions (at most -2), +1 when a near streak restarts on a different
/// side; clamped to [-4, 5] points. Short-term learning scales these by 0.1.
///
/// Nine-antigen rows leaving "near left and right": only bearing changes
/// count, always positive and tripled, clamped to [0, 54] points and scaled
/// like the fixed cells.
pub fn obstacle_subscore(ctx: &RlContext, phase: Phase) -> RlScore {
    let rank_change = frontal_rank(ctx.cur.i_max) - frontal_rank(ctx.prev.i_max);
    if ctx.mode == AntigenMode::Nine && ctx.prev_code == 5 {
        let points = (3.0 * BOOSTED_STEP * f64::from(rank_change.abs())).clamp(0.0, 54.0);
        return RlScore(points * phase.weight());
    }
    // The rubric's STL range is [-0.4, 0.5], a tenth of its point range.
    let w = match phase {
        Phase::Ltl => 1.0,
        Phase::Stl => 0.1,
    };

    let mut points = 0.0;
    points += match ctx.cur.v_max.cmp(&ctx.prev.v_max) {
        std::cmp::Ordering::Less => 2.0,
        std::cmp::Ordering::Greater => -2.0,
        std::cmp::Ordering::Equal => 0.0,
    };
    let was_collision = ctx.mode.is_collision(ctx.prev_code);
    let is_collision = ctx.mode.is_collision(ctx.cur_code);
    points += match (was_collision, is_collision) {
        (true, false) => 1.0,
        (false, true) => -1.0,
        _ => 0.0,
    };
    points += f64::from(rank_change.signum());
    points -= f64::from((ctx.counters.consecutive_collision / 5).min(2));
    if ctx.counters.near_reset {
        points += 1.0;
    }
    RlScore(points.clamp(-4.0, 5.0) * w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adjustment {
    /// Replace the active behaviour with a fresh random one.
    Replace,
    /// Add this (negative) amount to the active paratope entry.
    Deduct(f64),
}

/// Stagnation rules. Fired counters are reset.
///
/// Long-term learning: a cumulative score below -14 or an antigen unchanged
/// for 60 s triggers replacement. Short-term learning: more than 250
/// target-unseen iterations or more than 15 consecutive obstacle iterations
/// deduct 1.0 (0.5 with idiotypic selection).
pub fn stagnation_adjust(
    counters: &mut Counters,
    phase: Phase,
    idiotypic: bool,
    cumulative: f64,
) -> Option<Adjustment> {
    match phase {
        Phase::Ltl => {
            if cumulative < LTL_REPLACE_THRESHOLD {
                return Some(Adjustment::Replace);
            }
            if counters.same_antigen_clock >= LTL_STALL_SECONDS {
                counters.same_antigen_clock = 0.0;
                return Some(Adjustment::Replace);
            }
            None
        }
        Phase::Stl => {
            let deduction = if idiotypic { -0.5 } else { -1.0 };
            if counters.wander_run > STL_WANDER_LIMIT {
                counters.wander_run = 0;
                return Some(Adjustment::Deduct(deduction));
            }
            if counters.obstacle_run > STL_OBSTACLE_LIMIT {
                counters.obstacle_run = 0;
                return Some(Adjustment::Deduct(deduction));
            }
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(i_max: usize, v_max: u16, col: Option<u8>) -> SensorSummary {
        SensorSummary {
            i_max,
            v_max,
            blob: match col {
                Some(c) => BlobReport {
                    seen: true,
                    pixel_count: 3,
                    centroid_col: c,
                },
                None => BlobReport::UNSEEN,
            },
        }
    }

    fn ctx(mode: AntigenMode, prev: u8, cur: u8) -> RlContext {
        RlContext {
            mode,
            prev_code: prev,
            cur_code: cur,
            prev: summary(0, 0, Some(7)),
            cur: summary(0, 0, Some(7)),
            counters: Counters::default(),
        }
    }

    #[test]
    fn table_examples() {
        let m = AntigenMode::Eight;
        let s = |p, c, ph| transition_score(&ctx(m, p, c), ph).unwrap().0;
        assert_eq!(s(3, 0, Phase::Stl), 0.10);
        assert_eq!(s(1, 0, Phase::Ltl), -10.0);
        assert_eq!(s(4, 1, Phase::Stl), 0.20);
        assert_eq!(s(0, 6, Phase::Stl), -0.05);
        assert_eq!(s(0, 0, Phase::Ltl), 0.0);
        assert_eq!(s(0, 0, Phase::Stl), 0.05);
    }

    #[test]
    fn invalid_pairs_are_rejected() {
        assert!(table_cell(8, 0, AntigenMode::Eight).is_err());
        assert!(table_cell(0, 9, AntigenMode::Nine).is_err());
        assert!(table_cell(8, 0, AntigenMode::Nine).is_ok());
    }

    #[test]
    fn track_examples() {
        let b = |c| BlobReport {
            seen: true,
            pixel_count: 3,
            centroid_col: c,
        };
        assert_eq!(track_subscore(&b(7), &b(7), Phase::Ltl).0, 5.0);
        assert_eq!(track_subscore(&b(7), &b(7), Phase::Stl).0, 0.05);
        assert_eq!(track_subscore(&b(7), &b(0), Phase::Ltl).0, 0.0);
        assert_eq!(track_subscore(&b(7), &b(10), Phase::Ltl).0, 3.0);
        assert_eq!(track_subscore(&b(7), &b(14), Phase::Ltl).0, 0.0);
    }

    #[test]
    fn obstacle_rubric_examples() {
        // Collision rear (6) -> near rear (3), reading 2600 -> 300.
        let mut c = ctx(AntigenMode::Eight, 6, 3);
        c.prev = summary(3, 2600, None);
        c.cur = summary(3, 300, None);
        assert_eq!(obstacle_subscore(&c, Phase::Ltl).0, 3.0);
        assert!((obstacle_subscore(&c, Phase::Stl).0 - 0.30).abs() < 1e-12);

        let mut n = ctx(AntigenMode::Eight, 2, 2);
        n.prev = summary(1, 500, None);
        n.cur = summary(1, 500, None);
        assert_eq!(obstacle_subscore(&n, Phase::Ltl).0, 0.0);

        let mut b = ctx(AntigenMode::Nine, 5, 2);
        b.prev = summary(1, 300, None);
        b.cur = summary(2, 900, None);
        assert!((obstacle_subscore(&b, Phase::Stl).0 - 0.18).abs() < 1e-12);
        // Moving toward the front is still non-negative.
        b.prev = summary(2, 300, None);
        b.cur = summary(1, 100, None);
        assert!((obstacle_subscore(&b, Phase::Stl).0 - 0.18).abs() < 1e-12);
    }

    #[test]
    fn obstacle_rubric_floor() {
        let mut c = ctx(AntigenMode::Eight, 2, 7);
        c.prev = summary(2, 300, None);
        c.cur = summary(7, 3000, None);
        c.counters.consecutive_collision = 12;
        // -2 rising, -1 worse class, -1 toward front, -2 tally = -6 -> -4.
        assert_eq!(obstacle_subscore(&c, Phase::Ltl).0, -4.0);
    }

    #[test]
    fn tracker_counters() {
        let mut t = RlTracker::new(AntigenMode::Eight);
        let s = summary(0, 300, None);
        assert!(t.observe(2, s, 0.192).is_none());
        let c = t.observe(2, s, 0.192).unwrap();
        assert_eq!(c.counters.consecutive_near, 2);
        assert!(!c.counters.near_reset);
        let c = t.observe(4, s, 0.192).unwrap();
        assert!(c.counters.near_reset);
        assert_eq!(c.counters.obstacle_run, 3);
        let c = t.observe(7, s, 0.192).unwrap();
        assert_eq!(c.counters.consecutive_near, 0);
        assert_eq!(c.counters.consecutive_collision, 1);
        let c = t.observe(0, s, 0.192).unwrap();
        assert_eq!(c.counters.obstacle_run, 0);
        assert_eq!(c.counters.wander_run, 1);
    }

    #[test]
    fn stagnation_examples() {
        let mut c = Counters::default();
        assert_eq!(
            stagnation_adjust(&mut c, Phase::Ltl, false, -15.0),
            Some(Adjustment::Replace)
        );
        assert_eq!(stagnation_adjust(&mut c, Phase::Ltl, false, -14.0), None);
        c.same_antigen_clock = 60.0;
        assert_eq!(
            stagnation_adjust(&mut c, Phase::Ltl, false, 0.0),
            Some(Adjustment::Replace)
        );
        assert_eq!(c.same_antigen_clock, 0.0);

        c.wander_run = 251;
        assert_eq!(
            stagnation_adjust(&mut c, Phase::Stl, false, 0.0),
            Some(Adjustment::Deduct(-1.0))
        );
        assert_eq!(c.wander_run, 0);
        c.wander_run = 250;
        assert_eq!(stagnation_adjust(&mut c, Phase::Stl, false, 0.0), None);
        c.obstacle_run = 16;
        assert_eq!(
            stagnation_adjust(&mut c, Phase::Stl, true, 0.0),
            Some(Adjustment::Deduct(-0.5))
        );
        assert_eq!(c.obstacle_run, 0);
    }
}
