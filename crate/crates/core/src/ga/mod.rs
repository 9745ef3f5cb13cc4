//! Long-term learning: a generational GA over per-antigen behaviour repertoires.
//!
//! Each genome holds one antibody per antigen. Genomes are scored by driving
//! the robot through a building world, then bred by roulette selection,
//! crossover and mutation. Several autonomous populations can evolve side by
//! side without ever exchanging genes.

mod seedfile;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

pub use seedfile::{SeedFile, SeedSet};

use crate::behavior::{act, clamp_to_limits, random_antibody, Antibody, Attr, LimitProfile};
use crate::perception::{sense, AntigenMode};
use crate::reinforcement::{stagnation_adjust, transition_score, Adjustment, Phase, RlTracker};
use crate::rng::stream;
use crate::sim::{WorldGeometry, WorldState};
use crate::{Error, Result, TICK_SECONDS};

/// Seconds a robot is given to reach the finish line.
pub const TIME_LIMIT: f64 = 1250.0;
/// Collision weight in absolute fitness.
pub const LTL_RHO: f64 = 1.0;
/// Default mutation and replacement rate.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Penalty added to the time limit for robots that do not finish.
pub fn timeout_penalty(doors_passed: usize) -> f64 {
    match doors_passed {
        0 => 1000.0,
        1 => 750.0,
        _ => 500.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub antibodies: Vec<Antibody>,
    /// Cumulative reinforcement score per antigen for the latest evaluation.
    pub e: Vec<f64>,
    /// Bitmask of the populations each gene's material came from.
    pub lineage: Vec<u32>,
    pub population: usize,
}

impl Genome {
    pub fn random<R: Rng + ?Sized>(
        mode: AntigenMode,
        limits: &LimitProfile,
        population: usize,
        rng: &mut R,
    ) -> Self {
        let y = mode.count();
        Self {
            antibodies: (0..y).map(|_| random_antibody(limits, rng)).collect(),
            e: vec![0.0; y],
            lineage: vec![tag(population); y],
            population,
        }
    }

    /// Genes carrying material from any population other than this genome's.
    pub fn foreign_genes(&self) -> usize {
        let own = tag(self.population);
        self.lineage.iter().filter(|&&m| m != own).count()
    }
}

fn tag(population: usize) -> u32 {
    1u32 << (population % 32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessRecord {
    pub lt: f64,
    pub lc: u32,
    pub lf: f64,
    /// Filled in once the whole population has been evaluated.
    pub lmu: f64,
    pub doors_passed: usize,
    pub finished: bool,
}

impl FitnessRecord {
    pub fn new(lt: f64, lc: u32, doors_passed: usize, finished: bool) -> Self {
        Self {
            lt,
            lc,
            lf: lt + LTL_RHO * f64::from(lc),
            lmu: 0.0,
            doors_passed,
            finished,
        }
    }
}

/// Runs one genome through a building world. The genome's scores are reset
/// first; behaviours that stagnate are replaced in place.
pub fn evaluate<R: Rng + ?Sized>(
    genome: &mut Genome,
    geometry: &Arc<WorldGeometry>,
    mode: AntigenMode,
    limits: &LimitProfile,
    rng: &mut R,
) -> Result<FitnessRecord> {
    let mut world = WorldState::new(Arc::clone(geometry));
    let mut tracker = RlTracker::new(mode);
    genome.e.iter_mut().for_each(|e| *e = 0.0);
    let mut active: Option<usize> = None;

    while world.clock < TIME_LIMIT {
        let (code, summary, _) = sense(&world, mode, rng);
        if let Some(ctx) = tracker.observe(code.code, summary, TICK_SECONDS) {
            if let Some(k) = active {
                genome.e[k] += transition_score(&ctx, Phase::Ltl)?.0;
                if let Some(Adjustment::Replace) =
                    stagnation_adjust(&mut tracker.counters, Phase::Ltl, false, genome.e[k])
                {
                    genome.antibodies[k] = random_antibody(limits, rng);
                    genome.e[k] = 0.0;
                    genome.lineage[k] = tag(genome.population);
                }
            }
        }
        let m = code.index();
        let cmd = act(&genome.antibodies[m], &summary.blob, rng);
        active = Some(m);
        world.step(cmd, TICK_SECONDS);
        world.supervisor_tick(rng, TICK_SECONDS);
        if world.finished {
            return Ok(FitnessRecord::new(
                world.clock,
                world.collisions,
                world.doors_passed,
                true,
            ));
        }
    }
    let lt = TIME_LIMIT + timeout_penalty(world.doors_passed);
    Ok(FitnessRecord::new(
        lt,
        world.collisions,
        world.doors_passed,
        false,
    ))
}

/// Inverse-fitness shares: smaller absolute fitness gets a larger share, and
/// the shares sum to one.
pub fn relative_fitness(lfs: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = lfs.iter().find(|&&f| !(f > 0.0) || !f.is_finite()) {
        return Err(Error::NonPositiveFitness(bad));
    }
    let inv_sum: f64 = lfs.iter().map(|f| 1.0 / f).sum();
    Ok(lfs.iter().map(|f| 1.0 / (f * inv_sum)).collect())
}

/// Roulette-wheel draw.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.gen_range(0..weights.len());
    }
    let mut r = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if r < w {
            return i;
        }
        r -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Two different parents by roulette, the second drawn with the first removed.
pub fn parent_pair<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> (usize, usize) {
    assert!(weights.len() >= 2, "need at least two candidates");
    let a = roulette(weights, rng);
    let rest: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == a { 0.0 } else { w })
        .collect();
    let b = if rest.iter().sum::<f64>() > 0.0 {
        roulette(&rest, rng)
    } else {
        let k = rng.gen_range(0..weights.len() - 1);
        if k >= a {
            k + 1
        } else {
            k
        }
    };
    (a, b)
}

/// Crossover styles for same-type parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossover {
    Average,
    RandomPick,
    Alternating { mirrored: bool },
}

const NUMERIC_ATTRS: [Attr; 5] = [
    Attr::Speed,
    Attr::Freq,
    Attr::Angle,
    Attr::RightFreq,
    Attr::RightAngle,
];

/// Same-type crossover of two antibodies.
pub fn crossover<R: Rng + ?Sized>(
    pa: &Antibody,
    pb: &Antibody,
    style: Crossover,
    rng: &mut R,
) -> Antibody {
    debug_assert_eq!(pa.kind, pb.kind);
    let mut child = *pa;
    match style {
        Crossover::Average => {
            for attr in NUMERIC_ATTRS {
                if let (Some(a), Some(b)) = (pa.get(attr), pb.get(attr)) {
                    child.set(attr, 0.5 * (a + b));
                }
            }
            child.dir = if rng.gen_bool(0.5) { pa.dir } else { pb.dir };
        }
        Crossover::RandomPick => {
            for attr in Attr::ALL {
                let src = if rng.gen_bool(0.5) { pa } else { pb };
                if let Some(v) = src.get(attr) {
                    child.set(attr, v);
                }
            }
        }
        Crossover::Alternating { mirrored } => {
            // S, A, Rf from one parent; F, D, Ra from the other.
            for (i, attr) in Attr::ALL.into_iter().enumerate() {
                let first = (i % 2 == 0) != mirrored;
                let src = if first { pa } else { pb };
                if let Some(v) = src.get(attr) {
                    child.set(attr, v);
                }
            }
        }
    }
    child
}

/// Scales each numeric attribute (never the direction) by ±20-50% with
/// probability `epsilon`, before clamping.
pub fn mutate<R: Rng + ?Sized>(ab: &Antibody, epsilon: f64, rng: &mut R) -> Antibody {
    let mut out = *ab;
    for attr in NUMERIC_ATTRS {
        if let Some(v) = ab.get(attr) {
            if rng.gen_bool(epsilon) {
                let f = rng.gen_range(0.2..=0.5);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                out.set(attr, v * (1.0 + sign * f));
            }
        }
    }
    out
}

/// Produces one child. The child belongs to `pa`'s population.
pub fn breed<R: Rng + ?Sized>(
    pa: &Genome,
    pb: &Genome,
    epsilon: f64,
    limits: &LimitProfile,
    rng: &mut R,
) -> Genome {
    let population = pa.population;
    let y = pa.antibodies.len();
    let mut child = Genome {
        antibodies: Vec::with_capacity(y),
        e: vec![0.0; y],
        lineage: Vec::with_capacity(y),
        population,
    };
    for j in 0..y {
        let (a, b) = (&pa.antibodies[j], &pb.antibodies[j]);
        if rng.gen_bool(epsilon) {
            child.antibodies.push(random_antibody(limits, rng));
            child.lineage.push(tag(population));
            continue;
        }
        let (ab, lineage) = if a.kind != b.kind {
            if rng.gen_bool(0.5) {
                (*a, pa.lineage[j])
            } else {
                (*b, pb.lineage[j])
            }
        } else {
            let style = match rng.gen_range(0..3) {
                0 => Crossover::Average,
                1 => Crossover::RandomPick,
                _ => Crossover::Alternating {
                    mirrored: rng.gen_bool(0.5),
                },
            };
            (crossover(a, b, style, rng), pa.lineage[j] | pb.lineage[j])
        };
        child
            .antibodies
            .push(clamp_to_limits(&mutate(&ab, epsilon, rng), limits));
        child.lineage.push(lineage);
    }
    child
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriteriaSet {
    World1,
    World2,
    SeedRerun,
}

impl CriteriaSet {
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "world1" => Some(Self::World1),
            "world2" => Some(Self::World2),
            "seed-rerun" => Some(Self::SeedRerun),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceReason {
    /// Good enough and no longer improving.
    Quality,
    /// Generation cap.
    GenerationCap,
    /// Very good time and collisions.
    Excellent,
    /// Stable for a long time.
    Plateau,
}

impl std::fmt::Display for ConvergenceReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Quality => "quality",
            Self::GenerationCap => "generation-cap",
            Self::Excellent => "excellent",
            Self::Plateau => "plateau",
        })
    }
}

/// Per-generation statistics of the five fittest (or best-of-each) robots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub g: usize,
    pub lt: f64,
    pub lc: f64,
    pub lf: f64,
    /// Wall clock since the run started.
    pub elapsed: Duration,
}

/// Checks the stopping rows against the latest generation.
pub fn convergence(history: &[GenerationStats], set: CriteriaSet) -> Option<ConvergenceReason> {
    let cur = history.last()?;
    let g = cur.g;
    let df = history
        .len()
        .checked_sub(2)
        .map(|i| (cur.lf - history[i].lf).abs());
    let flat = |tol: f64| df.is_some_and(|d| d < tol);
    if g > 30 {
        return Some(ConvergenceReason::GenerationCap);
    }
    match set {
        CriteriaSet::World1 | CriteriaSet::World2 => {
            let (lt_q, lc_q, tol, lt_x, lc_x) = if set == CriteriaSet::World1 {
                (400.0, 60.0, 0.1, 225.0, 35.0)
            } else {
                (600.0, 90.0, 0.2, 400.0, 45.0)
            };
            if g > 0 && cur.lt < lt_q && cur.lc < lc_q && flat(tol) {
                Some(ConvergenceReason::Quality)
            } else if cur.lt < lt_x && cur.lc < lc_x {
                Some(ConvergenceReason::Excellent)
            } else if g > 15 && flat(tol) {
                Some(ConvergenceReason::Plateau)
            } else {
                None
            }
        }
        CriteriaSet::SeedRerun => {
            (g > 0 && cur.lt < 500.0 && cur.lc < 25.0).then_some(ConvergenceReason::Quality)
        }
    }
}

pub fn converged(history: &[GenerationStats], set: CriteriaSet) -> bool {
    convergence(history, set).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PopulationModel {
    Single(usize),
    Multi { populations: usize, size: usize },
}

impl PopulationModel {
    pub fn populations(&self) -> usize {
        match self {
            Self::Single(_) => 1,
            Self::Multi { populations, .. } => *populations,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Single(x) => *x,
            Self::Multi { size, .. } => *size,
        }
    }
}

impl std::str::FromStr for PopulationModel {
    type Err = Error;

    /// `single:25` or `multi:5x10`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "population `{s}` is not single:<x> or multi:<p>x<n>"
            ))
        };
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "single" => Ok(Self::Single(rest.parse().map_err(|_| bad())?)),
            "multi" => {
                let (p, n) = rest.split_once('x').ok_or_else(bad)?;
                Ok(Self::Multi {
                    populations: p.parse().map_err(|_| bad())?,
                    size: n.parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LtlConfig {
    pub geometry: Arc<WorldGeometry>,
    pub mode: AntigenMode,
    pub limits: LimitProfile,
    pub model: PopulationModel,
    pub epsilon: f64,
    pub criteria: CriteriaSet,
    pub seed: u64,
}

impl LtlConfig {
    pub fn new(geometry: Arc<WorldGeometry>, model: PopulationModel, seed: u64) -> Self {
        Self {
            geometry,
            mode: AntigenMode::Eight,
            limits: LimitProfile::table2(),
            model,
            epsilon: DEFAULT_EPSILON,
            criteria: CriteriaSet::World1,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaRunStats {
    pub history: Vec<GenerationStats>,
    pub reason: ConvergenceReason,
    pub wall_clock: Duration,
    /// Genes in the final populations that carry foreign material.
    pub foreign_genes: usize,
    pub evaluations: usize,
}

impl GaRunStats {
    pub fn generations(&self) -> usize {
        self.history.last().map_or(0, |s| s.g)
    }
}

const EVAL_STREAM: u64 = 1;
const INIT_STREAM: u64 = 2;
const BREED_STREAM: u64 = 3;

/// Indices of `records` sorted fittest first; ties keep index order.
fn ranked(records: &[FitnessRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&a, &b| records[a].lf.total_cmp(&records[b].lf));
    idx
}

/// Runs the GA to convergence and returns the chosen five repertoires.
pub fn run_ltl(cfg: &LtlConfig) -> Result<(SeedFile, GaRunStats)> {
    let start = Instant::now();
    let n_pops = cfg.model.populations();
    let size = cfg.model.size();
    match cfg.model {
        PopulationModel::Single(x) if x < 5 => return Err(Error::PopulationTooSmall(x)),
        PopulationModel::Multi { populations, size } if populations < 1 || size < 2 => {
            return Err(Error::InvalidArgument(format!(
                "multi population needs at least one population of two, got {populations}x{size}"
            )))
        }
        _ => {}
    }
    if n_pops > 32 {
        return Err(Error::InvalidArgument(
            "at most 32 populations are supported".into(),
        ));
    }

    let mut pops: Vec<Vec<Genome>> = (0..n_pops)
        .map(|p| {
            let mut rng = stream(cfg.seed, &[INIT_STREAM, p as u64]);
            (0..size)
                .map(|_| Genome::random(cfg.mode, &cfg.limits, p, &mut rng))
                .collect()
        })
        .collect();

    let mut history = Vec::new();
    let mut evaluations = 0;
    for g in 0.. {
        let mut records: Vec<Vec<FitnessRecord>> = pops
            .par_iter_mut()
            .enumerate()
            .map(|(p, pop)| {
                pop.par_iter_mut()
                    .enumerate()
                    .map(|(i, genome)| {
                        let mut rng =
                            stream(cfg.seed, &[EVAL_STREAM, g as u64, p as u64, i as u64]);
                        evaluate(genome, &cfg.geometry, cfg.mode, &cfg.limits, &mut rng)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        evaluations += n_pops * size;
        let mus = records
            .iter()
            .map(|recs| relative_fitness(&recs.iter().map(|r| r.lf).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        for (recs, mu) in records.iter_mut().zip(&mus) {
            for (r, m) in recs.iter_mut().zip(mu) {
                r.lmu = *m;
            }
        }

        let chosen = chosen_five(&pops, &records, cfg.model);
        let k = chosen.len() as f64;
        let lt = chosen.iter().map(|&(p, i)| records[p][i].lt).sum::<f64>() / k;
        let lc = chosen
            .iter()
            .map(|&(p, i)| f64::from(records[p][i].lc))
            .sum::<f64>()
            / k;
        history.push(GenerationStats {
            g,
            lt,
            lc,
            lf: lt + LTL_RHO * lc,
            elapsed: start.elapsed(),
        });

        if let Some(reason) = convergence(&history, cfg.criteria) {
            let seed = SeedFile {
                antigens: cfg.mode.count(),
                profile: cfg.limits.name.to_string(),
                sets: chosen
                    .iter()
                    .map(|&(p, i)| {
                        let genome = &pops[p][i];
                        SeedSet {
                            lt: records[p][i].lt,
                            lc: records[p][i].lc,
                            antibodies: genome
                                .antibodies
                                .iter()
                                .copied()
                                .zip(genome.e.iter().copied())
                                .collect(),
                        }
                    })
                    .collect(),
            };
            let foreign_genes = pops.iter().flatten().map(Genome::foreign_genes).sum();
            let stats = GaRunStats {
                history,
                reason,
                wall_clock: start.elapsed(),
                foreign_genes,
                evaluations,
            };
            return Ok((seed, stats));
        }

        for (p, (pop, mu)) in pops.iter_mut().zip(&mus).enumerate() {
            let mut rng = stream(cfg.seed, &[BREED_STREAM, g as u64, p as u64]);
            let children: Vec<Genome> = (0..size)
                .map(|_| {
                    let (a, b) = parent_pair(mu, &mut rng);
                    breed(&pop[a], &pop[b], cfg.epsilon, &cfg.limits, &mut rng)
                })
                .collect();
            *pop = children;
        }
    }
    unreachable!("the generation cap always stops the loop")
}

/// The five fittest of a single population, or the fittest of each
/// autonomous population.
fn chosen_five(
    pops: &[Vec<Genome>],
    records: &[Vec<FitnessRecord>],
    model: PopulationModel,
) -> Vec<(usize, usize)> {
    match model {
        PopulationModel::Single(_) => ranked(&records[0])
            .into_iter()
            .take(5)
            .map(|i| (0, i))
            .collect(),
        PopulationModel::Multi { .. } => (0..pops.len())
            .map(|p| (p, ranked(&records[p])[0]))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{random_of_type, BehaviourType};
    use crate::sim::WorldConfig;

    #[test]
    fn fitness_examples() {
        let r = FitnessRecord::new(400.0, 60, 2, true);
        assert_eq!(r.lf, 460.0);
        assert_eq!(TIME_LIMIT + timeout_penalty(0), 2250.0);
        assert_eq!(TIME_LIMIT + timeout_penalty(1), 2000.0);
        assert_eq!(TIME_LIMIT + timeout_penalty(2), 1750.0);
    }

    #[test]
    fn relative_fitness_examples() {
        let mu = relative_fitness(&[100.0, 300.0]).unwrap();
        assert!((mu[0] - 0.75).abs() < 1e-15 && (mu[1] - 0.25).abs() < 1e-15);
        let mu = relative_fitness(&[7.0; 4]).unwrap();
        assert!(mu.iter().all(|m| (m - 0.25).abs() < 1e-15));
        assert!(matches!(
            relative_fitness(&[1.0, 0.0]),
            Err(Error::NonPositiveFitness(_))
        ));
        assert!(relative_fitness(&[1.0, -3.0]).is_err());
    }

    #[test]
    fn roulette_frequencies() {
        let mut rng = stream(5, &[]);
        assert!((0..1000).all(|_| roulette(&[1.0, 0.0, 0.0], &mut rng) == 0));
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| roulette(&[0.75, 0.25], &mut rng) == 0)
            .count();
        assert!((hits as f64 / n as f64 - 0.75).abs() < 0.01);
        for _ in 0..1000 {
            let (a, b) = parent_pair(&[0.5, 0.3, 0.2], &mut rng);
            assert_ne!(a, b);
        }
        for _ in 0..100 {
            let (a, b) = parent_pair(&[1.0, 0.0, 0.0], &mut rng);
            assert_eq!(a, 0);
            assert_ne!(b, 0);
        }
    }

    fn wander(speed: f64) -> Antibody {
        let mut ab = random_of_type(
            BehaviourType::WanderSingle,
            &LimitProfile::table2(),
            &mut stream(1, &[]),
        );
        ab.speed = speed;
        ab
    }

    #[test]
    fn average_crossover() {
        let c = crossover(
            &wander(400.0),
            &wander(600.0),
            Crossover::Average,
            &mut stream(2, &[]),
        );
        assert_eq!(c.speed, 500.0);
    }

    #[test]
    fn alternating_masks_split_attributes() {
        let mut pa = random_of_type(
            BehaviourType::WanderBoth,
            &LimitProfile::table2(),
            &mut stream(3, &[]),
        );
        let mut pb = pa;
        for (i, attr) in [
            Attr::Speed,
            Attr::Freq,
            Attr::Angle,
            Attr::RightFreq,
            Attr::RightAngle,
        ]
        .into_iter()
        .enumerate()
        {
            pa.set(attr, 50.0 + i as f64);
            pb.set(attr, 70.0 + i as f64);
        }
        let c = crossover(
            &pa,
            &pb,
            Crossover::Alternating { mirrored: false },
            &mut stream(0, &[]),
        );
        assert_eq!((c.speed, c.freq, c.angle), (50.0, Some(71.0), Some(52.0)));
        assert_eq!((c.right_freq, c.right_angle), (Some(53.0), Some(74.0)));
        let m = crossover(
            &pa,
            &pb,
            Crossover::Alternating { mirrored: true },
            &mut stream(0, &[]),
        );
        assert_eq!((m.speed, m.freq, m.angle), (70.0, Some(51.0), Some(72.0)));
    }

    #[test]
    fn mutation_interval() {
        let mut rng = stream(4, &[]);
        for _ in 0..10_000 {
            let m = mutate(&wander(400.0), 1.0, &mut rng);
            let s = m.speed;
            assert!(
                (200.0..=320.0).contains(&s) || (480.0..=600.0).contains(&s),
                "{s}"
            );
        }
        assert_eq!(mutate(&wander(400.0), 0.0, &mut rng).speed, 400.0);
    }

    #[test]
    fn different_types_copy_one_parent() {
        let limits = LimitProfile::table2();
        let mut rng = stream(6, &[]);
        let mut pa = Genome::random(AntigenMode::Eight, &limits, 0, &mut rng);
        let mut pb = Genome::random(AntigenMode::Eight, &limits, 0, &mut rng);
        pa.antibodies[0] = random_of_type(BehaviourType::WanderSingle, &limits, &mut rng);
        pb.antibodies[0] = random_of_type(BehaviourType::StaticTurn, &limits, &mut rng);
        for _ in 0..200 {
            let c = breed(&pa, &pb, 0.0, &limits, &mut rng);
            assert!(c.antibodies[0] == pa.antibodies[0] || c.antibodies[0] == pb.antibodies[0]);
        }
    }

    #[test]
    fn children_stay_within_limits() {
        for limits in [LimitProfile::table2(), LimitProfile::slow()] {
            let mut rng = stream(8, &[]);
            let pa = Genome::random(AntigenMode::Nine, &limits, 1, &mut rng);
            let pb = Genome::random(AntigenMode::Nine, &limits, 1, &mut rng);
            for _ in 0..2000 {
                let c = breed(&pa, &pb, 0.5, &limits, &mut rng);
                assert_eq!(c.antibodies.len(), 9);
                assert!(c.antibodies.iter().all(|a| a.within(&limits)));
                assert_eq!(c.foreign_genes(), 0);
            }
        }
    }

    #[test]
    fn lineage_marks_cross_population_material() {
        let limits = LimitProfile::table2();
        let mut rng = stream(9, &[]);
        let pa = Genome::random(AntigenMode::Eight, &limits, 0, &mut rng);
        let pb = Genome::random(AntigenMode::Eight, &limits, 3, &mut rng);
        let foreign: usize = (0..50)
            .map(|_| breed(&pa, &pb, 0.0, &limits, &mut rng).foreign_genes())
            .sum();
        assert!(foreign > 0);
    }

    fn gs(g: usize, lt: f64, lc: f64) -> GenerationStats {
        GenerationStats {
            g,
            lt,
            lc,
            lf: lt + lc,
            elapsed: Duration::ZERO,
        }
    }

    #[test]
    fn stopping_examples() {
        // lf moves by 0.05 between generations.
        let h = [gs(1, 350.0, 49.95), gs(2, 350.0, 50.0)];
        assert_eq!(
            convergence(&h, CriteriaSet::World1),
            Some(ConvergenceReason::Quality)
        );
        assert!(converged(&[gs(31, 2000.0, 500.0)], CriteriaSet::World1));
        assert!(converged(&[gs(31, 2000.0, 500.0)], CriteriaSet::World2));
        assert!(converged(&[gs(31, 2000.0, 500.0)], CriteriaSet::SeedRerun));
        let h = [gs(9, 800.0, 99.5), gs(10, 800.0, 100.0)];
        assert!(!converged(&h, CriteriaSet::World1));
        assert!(!converged(&[gs(30, 2000.0, 500.0)], CriteriaSet::World1));
        assert_eq!(
            convergence(&[gs(0, 200.0, 30.0)], CriteriaSet::World1),
            Some(ConvergenceReason::Excellent)
        );
        assert!(!converged(&[gs(0, 450.0, 20.0)], CriteriaSet::SeedRerun));
        assert!(converged(
            &[gs(0, 450.0, 20.0), gs(1, 450.0, 20.0)],
            CriteriaSet::SeedRerun
        ));
        let h = [gs(16, 900.0, 100.0), gs(17, 900.0, 100.1)];
        assert!(!converged(&h, CriteriaSet::World1));
        assert_eq!(
            convergence(&h, CriteriaSet::World2),
            Some(ConvergenceReason::Plateau)
        );
    }

    #[test]
    fn population_model_parsing() {
        assert_eq!(
            "single:25".parse::<PopulationModel>().unwrap(),
            PopulationModel::Single(25)
        );
        assert_eq!(
            "multi:5x10".parse::<PopulationModel>().unwrap(),
            PopulationModel::Multi {
                populations: 5,
                size: 10
            }
        );
        assert!("multi:5".parse::<PopulationModel>().is_err());
        assert!("pair:2".parse::<PopulationModel>().is_err());
    }

    #[test]
    fn small_single_population_is_rejected() {
        let geom = Arc::new(WorldGeometry::new(
            WorldConfig::builtin("world-a1").unwrap(),
        ));
        let cfg = LtlConfig::new(geom, PopulationModel::Single(4), 1);
        assert!(matches!(run_ltl(&cfg), Err(Error::PopulationTooSmall(4))));
    }

    #[test]
    fn evaluation_is_reproducible_and_reports_penalties() {
        let geom = Arc::new(WorldGeometry::new(
            WorldConfig::builtin("world-a1").unwrap(),
        ));
        let limits = LimitProfile::table2();
        let mut g0 = Genome::random(AntigenMode::Eight, &limits, 0, &mut stream(11, &[]));
        let mut g1 = g0.clone();
        let a = evaluate(
            &mut g0,
            &geom,
            AntigenMode::Eight,
            &limits,
            &mut stream(12, &[]),
        )
        .unwrap();
        let b = evaluate(
            &mut g1,
            &geom,
            AntigenMode::Eight,
            &limits,
            &mut stream(12, &[]),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(g0, g1);
        if a.finished {
            assert!(a.lt < TIME_LIMIT);
        } else {
            assert_eq!(a.lt, TIME_LIMIT + timeout_penalty(a.doors_passed));
        }
        assert_eq!(a.lf, a.lt + f64::from(a.lc));
    }
}
