//! Hand-designed controller: random wander, steer away from nearby
//! obstacles, back away from collisions.

use rand::Rng;

use crate::behavior::{act, Antibody, BehaviourType, Side};
use crate::perception::{AntigenCode, Orientation, SensorSummary};
use crate::sim::WheelCommand;

const CRUISE: f64 = 300.0;
const WANDER_FREQ: f64 = 40.0;
const WANDER_ANGLE: f64 = 60.0;
const AVOID_ANGLE: f64 = 100.0;
const ESCAPE_ANGLE: f64 = 60.0;
const TRACK_ANGLE: f64 = 30.0;

fn behaviour(
    kind: BehaviourType,
    speed: f64,
    freq: Option<f64>,
    angle: Option<f64>,
    dir: Option<Side>,
) -> Antibody {
    Antibody {
        kind,
        speed,
        freq,
        angle,
        dir,
        right_freq: None,
        right_angle: None,
    }
}

/// Fixed policy for one tick. With `track` set, a visible target is steered
/// towards; otherwise the target plays no part.
pub fn hdc_policy<R: Rng + ?Sized>(
    code: AntigenCode,
    summary: &SensorSummary,
    track: bool,
    rng: &mut R,
) -> WheelCommand {
    let side = Orientation::of_sensor(summary.i_max);
    let obstacle_side = match side {
        Orientation::Right => Some(Side::Right),
        Orientation::Left => Some(Side::Left),
        Orientation::Rear => None,
    };
    let collision = code.mode.is_collision(code.code);
    let ab = if collision && obstacle_side.is_some() {
        // Reversing with the obstacle-side wheel slowed swings the nose away.
        behaviour(
            BehaviourType::ReverseTurn,
            CRUISE,
            None,
            Some(ESCAPE_ANGLE),
            obstacle_side,
        )
    } else if code.is_obstacle() && obstacle_side.is_some() {
        let away = match obstacle_side {
            Some(Side::Right) => Side::Left,
            _ => Side::Right,
        };
        behaviour(
            BehaviourType::ForwardTurn,
            CRUISE,
            None,
            Some(AVOID_ANGLE),
            Some(away),
        )
    } else if track && summary.blob.seen {
        behaviour(
            BehaviourType::TrackMarkers,
            CRUISE,
            None,
            Some(TRACK_ANGLE),
            None,
        )
    } else {
        let d = if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        behaviour(
            BehaviourType::WanderSingle,
            CRUISE,
            Some(WANDER_FREQ),
            Some(WANDER_ANGLE),
            Some(d),
        )
    };
    act(&ab, &summary.blob, rng)
}
