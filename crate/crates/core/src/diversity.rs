//! Pairwise diversity of the final antibody sets.
//!
//! Each antigen column of five values earns one point per unequal pair (ten
//! pairs). Column points are summed and normalized by the expected score of
//! random columns, so random sets score about 1.

use rand::Rng;

use crate::ga::SeedFile;

/// Expected points for random behaviour types (six values).
pub const SIGMA_TYPE: f64 = 8.333;
/// Expected points for random speeds.
pub const SIGMA_SPEED: f64 = 10.0;

/// Points for one antigen column: the number of unequal pairs.
pub fn group_points<T: PartialEq>(values: &[T; 5]) -> u32 {
    let mut points = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            if values[i] != values[j] {
                points += 1;
            }
        }
    }
    points
}

/// Normalized diversity of a set of columns.
pub fn diversity_z(column_points: &[u32], sigma: f64) -> f64 {
    let total: u32 = column_points.iter().sum();
    f64::from(total) / (sigma * column_points.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub samples: usize,
}

/// Monte-Carlo mean of [`group_points`] over uniform draws from `0..domain`.
pub fn expected_sigma<R: Rng + ?Sized>(domain: u32, samples: usize, rng: &mut R) -> SigmaEstimate {
    assert!(domain > 0, "domain must be non-empty");
    let total: u64 = (0..samples)
        .map(|_| {
            let v: [u32; 5] = std::array::from_fn(|_| rng.gen_range(0..domain));
            u64::from(group_points(&v))
        })
        .sum();
    SigmaEstimate {
        sigma: total as f64 / samples as f64,
        samples,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub z_u: f64,
    pub z_s: f64,
    pub points_u: Vec<u32>,
    pub points_s: Vec<u32>,
}

/// Type and speed diversity of a five-set seed file.
pub fn seed_diversity(seed: &SeedFile) -> Option<DiversityReport> {
    if seed.sets.len() != 5 {
        return None;
    }
    let y = seed.antigens;
    let mut points_u = Vec::with_capacity(y);
    let mut points_s = Vec::with_capacity(y);
    for j in 0..y {
        let col: [_; 5] = std::array::from_fn(|i| seed.sets[i].antibodies[j].0);
        points_u.push(group_points(&col.map(|a| a.kind)));
        points_s.push(group_points(&col.map(|a| a.speed)));
    }
    Some(DiversityReport {
        z_u: diversity_z(&points_u, SIGMA_TYPE),
        z_s: diversity_z(&points_s, SIGMA_SPEED),
        points_u,
        points_s,
    })
}
