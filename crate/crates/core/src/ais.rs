//! Short-term learning: an idiotypic immune network choosing between five
//! antibody sets.
//!
//! The paratope `P` scores how well each antibody suits its antigen. The
//! idiotope `I` marks at most one below-average antibody per set. Selection
//! picks the best paratope for the presenting antigen, lets that antibody
//! stimulate and suppress the others through their clone concentrations, and
//! then picks the antibody with the highest activation.

use std::fmt::Write as _;

use rand::Rng;

use crate::behavior::{random_antibody, Antibody, LimitProfile};
use crate::ga::relative_fitness;
use crate::ga::SeedFile;
use crate::{Error, Result};

/// Number of antibody sets.
pub const SETS: usize = 5;
/// Sensor readings between idiotope rebuilds.
pub const IDIOTOPE_PERIOD: u32 = 120;
/// Paratope values under this are replaced in unseeded systems.
pub const WEAK_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AisParams {
    /// Clone growth scale.
    pub b: f64,
    /// Stimulation constant.
    pub k1: f64,
    /// Suppression constant.
    pub k2: f64,
    /// Death rate.
    pub k3: f64,
    /// Total concentration.
    pub phi_total: f64,
    /// Paratope scaling divisor for seeded scores.
    pub phi_scale: f64,
    /// Collision weight in set fitness.
    pub rho: f64,
    /// Initial clones per antibody.
    pub n0: f64,
}

impl Default for AisParams {
    fn default() -> Self {
        Self {
            b: 100.0,
            k1: 0.85,
            k2: 1.10,
            k3: 0.0,
            phi_total: 25.0,
            phi_scale: 20.0,
            rho: 8.0,
            n0: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    /// (set, antigen) of the first-stage winner.
    pub alpha: (usize, usize),
    /// (set, antigen) of the antibody that acts.
    pub beta: (usize, usize),
    pub differed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AisState {
    pub antibodies: Vec<Vec<Antibody>>,
    pub p: Vec<Vec<f64>>,
    pub idiotope: Vec<Vec<bool>>,
    pub n: Vec<Vec<f64>>,
    pub set_fitness: Vec<f64>,
    /// Column means at initialization.
    pub sigma0: Vec<f64>,
    pub readings_since_idiotope: u32,
    pub idio_diff_count: u64,
    pub selection_count: u64,
    pub params: AisParams,
    pub seeded: bool,
    pub idiotypic: bool,
    /// Stage-two strengths of the latest idiotypic selection.
    s2: Vec<f64>,
}

fn column_mean(p: &[Vec<f64>], j: usize) -> f64 {
    p.iter().map(|row| row[j]).sum::<f64>() / p.len() as f64
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Marks entries strictly below their column mean, then keeps one mark per
/// row at random.
pub fn build_idiotope<R: Rng + ?Sized>(p: &[Vec<f64>], rng: &mut R) -> Vec<Vec<bool>> {
    let y = p.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..y).map(|j| column_mean(p, j)).collect();
    p.iter()
        .map(|row| {
            let candidates: Vec<usize> = (0..y).filter(|&j| row[j] < means[j]).collect();
            let mut out = vec![false; y];
            if !candidates.is_empty() {
                out[candidates[rng.gen_range(0..candidates.len())]] = true;
            }
            out
        })
        .collect()
}

/// Scales `col` so its mean becomes `target`, capping at 1 and sharing the
/// excess among uncapped entries. Leaves an all-zero column alone.
fn restore_mean(col: &mut [f64], target: f64) {
    let v = col.len() as f64;
    let sum: f64 = col.iter().sum();
    if sum <= 0.0 {
        return;
    }
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[b].total_cmp(&col[a]));
    let goal = target * v;
    // Cap the largest `c` entries at 1 and scale the rest by k.
    let mut rest = sum;
    for c in 0..=col.len() {
        if rest <= 0.0 {
            break;
        }
        let k = (goal - c as f64) / rest;
        let next_fits = order.get(c).is_none_or(|&i| k * col[i] <= 1.0);
        if next_fits {
            for (rank, &i) in order.iter().enumerate() {
                col[i] = if rank < c { 1.0 } else { (k * col[i]).min(1.0) };
            }
            return;
        }
        rest -= col[order[c]];
    }
    // Not reachable without zeroed entries: saturate every nonzero entry.
    for x in col.iter_mut() {
        if *x > 0.0 {
            *x = 1.0;
        }
    }
}

impl AisState {
    fn with_parts<R: Rng + ?Sized>(
        antibodies: Vec<Vec<Antibody>>,
        p: Vec<Vec<f64>>,
        set_fitness: Vec<f64>,
        params: AisParams,
        seeded: bool,
        rng: &mut R,
    ) -> Self {
        let v = p.len();
        let y = p.first().map_or(0, Vec::len);
        let sigma0 = (0..y).map(|j| column_mean(&p, j)).collect();
        let idiotope = build_idiotope(&p, rng);
        Self {
            antibodies,
            idiotope,
            n: vec![vec![params.n0; y]; v],
            set_fitness,
            sigma0,
            readings_since_idiotope: 0,
            idio_diff_count: 0,
            selection_count: 0,
            params,
            seeded,
            idiotypic: true,
            s2: vec![0.0; v],
            p,
        }
    }

    /// Builds the network from evolved repertoires.
    pub fn init_seeded<R: Rng + ?Sized>(
        seed: &SeedFile,
        params: AisParams,
        rng: &mut R,
    ) -> Result<Self> {
        if seed.sets.len() != SETS {
            return Err(Error::InvalidArgument(format!(
                "seed file holds {} sets, {SETS} are required",
                seed.sets.len()
            )));
        }
        let lfs: Vec<f64> = seed
            .sets
            .iter()
            .map(|s| s.lt + params.rho * f64::from(s.lc))
            .collect();
        let mu = relative_fitness(&lfs)?;
        let p = seed
            .sets
            .iter()
            .zip(&mu)
            .map(|(set, m)| {
                set.antibodies
                    .iter()
                    .map(|(_, e)| (e * m / params.phi_scale).clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        let antibodies = seed
            .sets
            .iter()
            .map(|s| s.antibodies.iter().map(|(a, _)| *a).collect())
            .collect();
        Ok(Self::with_parts(antibodies, p, mu, params, true, rng))
    }

    /// Random repertoires with paratope values in [0.25, 0.75].
    pub fn init_unseeded<R: Rng + ?Sized>(
        antigens: usize,
        limits: &LimitProfile,
        params: AisParams,
        rng: &mut R,
    ) -> Self {
        let mut antibodies = Vec::with_capacity(SETS);
        let mut p = Vec::with_capacity(SETS);
        for _ in 0..SETS {
            antibodies.push(
                (0..antigens)
                    .map(|_| random_antibody(limits, rng))
                    .collect(),
            );
            p.push((0..antigens).map(|_| rng.gen_range(0.25..=0.75)).collect());
        }
        Self::with_parts(
            antibodies,
            p,
            vec![1.0 / SETS as f64; SETS],
            params,
            false,
            rng,
        )
    }

    /// Raw state for tests and tools.
    pub fn from_matrices<R: Rng + ?Sized>(
        antibodies: Vec<Vec<Antibody>>,
        p: Vec<Vec<f64>>,
        params: AisParams,
        rng: &mut R,
    ) -> Self {
        let v = p.len();
        Self::with_parts(antibodies, p, vec![1.0 / v as f64; v], params, true, rng)
    }

    pub fn sets(&self) -> usize {
        self.p.len()
    }

    pub fn antigens(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    pub fn antibody(&self, (i, j): (usize, usize)) -> &Antibody {
        &self.antibodies[i][j]
    }

    /// Concentrations from clone counts.
    pub fn concentrations(&self) -> Vec<Vec<f64>> {
        let total: f64 = self.n.iter().flatten().sum();
        let scale = self.params.phi_total / total;
        self.n
            .iter()
            .map(|row| row.iter().map(|x| x * scale).collect())
            .collect()
    }

    /// First-stage winner for antigen `m`.
    pub fn stage1(&self, m: usize) -> (usize, usize) {
        (argmax(self.p.iter().map(|row| row[m])), m)
    }

    /// Stimulation and suppression by the first-stage winner from set `n`;
    /// updates clone counts for column `m`.
    pub fn idiotypic_adjust(&mut self, n: usize, m: usize) {
        let c = self.concentrations();
        let y = self.antigens();
        let AisParams { b, k1, k2, k3, .. } = self.params;
        for i in 0..self.sets() {
            let mut eps = 0.0;
            let mut delta = 0.0;
            for j in 0..y {
                let cc = c[i][j] * c[n][j];
                if self.idiotope[n][j] {
                    eps += (1.0 - self.p[i][j]) * cc;
                }
                if self.idiotope[i][j] {
                    delta += self.p[n][j] * cc;
                }
            }
            self.s2[i] = self.p[i][m] + k1 * eps - k2 * delta;
        }
        for i in 0..self.sets() {
            // Clone counts stay positive so concentrations remain defined.
            self.n[i][m] = (b * self.s2[i] + self.n[i][m] * (1.0 - k3)).max(1.0);
        }
    }

    /// Third-stage winner: highest concentration times adjusted strength.
    pub fn stage3(&self, m: usize) -> (usize, usize) {
        let c = self.concentrations();
        (argmax((0..self.sets()).map(|i| c[i][m] * self.s2[i])), m)
    }

    /// Full selection for antigen `m`.
    pub fn select(&mut self, m: usize) -> SelectionOutcome {
        let alpha = self.stage1(m);
        let beta = if self.idiotypic {
            self.idiotypic_adjust(alpha.0, m);
            self.stage3(m)
        } else {
            alpha
        };
        let differed = alpha != beta;
        self.selection_count += 1;
        if differed {
            self.idio_diff_count += 1;
        }
        SelectionOutcome {
            alpha,
            beta,
            differed,
        }
    }

    /// Adds `delta` to the winner's paratope, clamps, and restores the
    /// column's initial mean. Every call counts as one sensor reading; the
    /// idiotope is rebuilt every [`IDIOTOPE_PERIOD`] readings.
    pub fn reinforce<R: Rng + ?Sized>(&mut self, winner: (usize, usize), delta: f64, rng: &mut R) {
        let (i, m) = winner;
        self.p[i][m] = (self.p[i][m] + delta).clamp(0.0, 1.0);
        let mut col: Vec<f64> = self.p.iter().map(|row| row[m]).collect();
        restore_mean(&mut col, self.sigma0[m]);
        for (row, v) in self.p.iter_mut().zip(col) {
            row[m] = v;
        }
        self.readings_since_idiotope += 1;
        if self.readings_since_idiotope >= IDIOTOPE_PERIOD {
            self.idiotope = build_idiotope(&self.p, rng);
            self.readings_since_idiotope = 0;
        }
    }

    /// Replaces every antibody with a paratope below the threshold.
    /// Returns the replaced positions.
    pub fn replace_weak<R: Rng + ?Sized>(
        &mut self,
        limits: &LimitProfile,
        rng: &mut R,
    ) -> Result<Vec<(usize, usize)>> {
        if self.seeded {
            return Err(Error::ReplacementInSeededMode);
        }
        let mut replaced = Vec::new();
        for i in 0..self.sets() {
            for j in 0..self.antigens() {
                if self.p[i][j] < WEAK_THRESHOLD {
                    self.antibodies[i][j] = random_antibody(limits, rng);
                    self.p[i][j] = rng.gen_range(0.25..=0.75);
                    self.n[i][j] = self.params.n0;
                    replaced.push((i, j));
                }
            }
        }
        Ok(replaced)
    }

    /// Fraction of selections where the acting antibody differed from the
    /// first-stage winner.
    pub fn difference_rate(&self) -> Result<f64> {
        if self.selection_count == 0 {
            return Err(Error::NoSelections);
        }
        Ok(self.idio_diff_count as f64 / self.selection_count as f64)
    }

    /// P, I, N and C matrices with six decimals.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let c = self.concentrations();
        let matrix = |out: &mut String, name: &str, rows: &mut dyn Iterator<Item = Vec<f64>>| {
            let _ = writeln!(out, "{name}:");
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
                let _ = writeln!(out, "  {}", cells.join(" "));
            }
        };
        matrix(&mut out, "P", &mut self.p.iter().cloned());
        matrix(
            &mut out,
            "I",
            &mut self
                .idiotope
                .iter()
                .map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()),
        );
        matrix(&mut out, "N", &mut self.n.iter().cloned());
        matrix(&mut out, "C", &mut c.into_iter());
        out
    }
}
