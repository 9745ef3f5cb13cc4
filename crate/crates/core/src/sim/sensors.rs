use rand::Rng;

use super::geometry::Vec2;
use super::WorldState;

/// Sensor bearings relative to the heading (CCW positive). Indices 0-2 face
/// right, 3-4 rear, 5-7 left.
pub const IR_SENSOR_ANGLES: [f64; 8] = [-0.30, -0.80, -1.57, -2.64, 2.64, 1.57, 0.80, 0.30];

pub const CAMERA_COLUMNS: usize = 15;
const CAMERA_ROWS: u8 = 3;

const IR_MAX_RANGE: f64 = 0.10;
const IR_MAX_VALUE: f64 = 4095.0;

/// Calibration anchors, nearest first: (gap in metres, reading).
const IR_ANCHORS: [(f64, f64); 4] = [(0.002, 3500.0), (0.01, 2400.0), (0.03, 250.0), (0.10, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IrReadings {
    pub values: [u16; 8],
}

impl IrReadings {
    pub fn new(values: [u16; 8]) -> Self {
        Self { values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlobReport {
    pub seen: bool,
    pub pixel_count: u8,
    /// Mean blue column, 0 = leftmost. Meaningful only when `seen`.
    pub centroid_col: u8,
}

impl BlobReport {
    pub const UNSEEN: BlobReport = BlobReport {
        seen: false,
        pixel_count: 0,
        centroid_col: 0,
    };

    /// Report for a set of blue columns.
    pub fn from_columns(cols: &[usize]) -> Self {
        if cols.is_empty() {
            return Self::UNSEEN;
        }
        let mean = cols.iter().sum::<usize>() as f64 / cols.len() as f64;
        Self {
            seen: true,
            pixel_count: CAMERA_ROWS * cols.len() as u8,
            centroid_col: mean.round() as u8,
        }
    }
}

/// Noise-free reading for an obstacle `gap` metres beyond the robot body.
///
/// Log-linear between anchors; zero at and beyond 0.10 m, saturated at the
/// contact anchor.
pub fn ir_curve(gap: f64) -> f64 {
    if gap >= IR_MAX_RANGE {
        return 0.0;
    }
    let (d0, v0) = IR_ANCHORS[0];
    if gap <= d0 {
        return v0;
    }
    for w in IR_ANCHORS.windows(2) {
        let ((da, va), (db, vb)) = (w[0], w[1]);
        if gap <= db {
            let t = (gap - da) / (db - da);
            return (va.ln() + t * (vb.ln() - va.ln())).exp();
        }
    }
    0.0
}

impl WorldState {
    /// Distance from the robot centre to the nearest solid along `bearing`.
    fn ray_distance(&self, bearing: f64) -> f64 {
        let origin = self.robot.position();
        let dir = Vec2::from_angle(self.robot.heading + bearing);
        self.solids(false)
            .filter_map(|s| s.ray_hit(origin, dir))
            .fold(f64::INFINITY, f64::min)
    }

    /// Samples the IR ring. One noise factor is drawn per sensor whether or
    /// not noise is enabled, so toggling noise keeps RNG streams aligned.
    pub fn read_ir<R: Rng + ?Sized>(&self, rng: &mut R) -> IrReadings {
        let r = self.params().body_radius;
        let mut values = [0u16; 8];
        for (v, bearing) in values.iter_mut().zip(IR_SENSOR_ANGLES) {
            let gap = (self.ray_distance(bearing) - r).max(0.0);
            let factor: f64 = rng.gen_range(0.9..=1.1);
            let raw = ir_curve(gap) * if self.noise { factor } else { 1.0 };
            *v = raw.round().clamp(0.0, IR_MAX_VALUE) as u16;
        }
        IrReadings { values }
    }

    /// Bearing of camera column `c` relative to the heading.
    pub fn column_bearing(&self, c: usize) -> f64 {
        let fov = self.params().camera_fov;
        fov / 2.0 - (c as f64 + 0.5) * fov / CAMERA_COLUMNS as f64
    }

    /// Synthesized blob finder: a column is blue when its central ray meets a
    /// blue surface no farther than any occluder.
    pub fn read_blob(&self) -> BlobReport {
        let origin = self.robot.position();
        let range = self.params().camera_range;
        let cols: Vec<usize> = (0..CAMERA_COLUMNS)
            .filter(|&c| {
                let dir = Vec2::from_angle(self.robot.heading + self.column_bearing(c));
                let blue = self
                    .blue_rects()
                    .filter_map(|b| b.ray_hit(origin, dir))
                    .fold(f64::INFINITY, f64::min);
                if blue > range {
                    return false;
                }
                let occluder = self
                    .solids(false)
                    .filter_map(|s| s.ray_hit(origin, dir))
                    .fold(f64::INFINITY, f64::min);
                blue <= occluder + 1e-9
            })
            .collect();
        BlobReport::from_columns(&cols)
    }
}
