//! Target-finding trials, batches and their statistics.

pub mod batch;
pub mod hdc;
pub mod stats;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ais::{AisParams, AisState};
use crate::behavior::{act, LimitProfile};
use crate::ga::SeedFile;
use crate::perception::{sense, AntigenMode};
use crate::reinforcement::{stagnation_adjust, transition_score, Adjustment, Phase, RlTracker};
use crate::rng::stream;
use crate::sim::{WorldGeometry, WorldState};
use crate::{Error, Result, TICK_SECONDS};

pub use batch::{parse_plan, read_csv, run_batch, run_plan_file, write_csv, PlanLine};
pub use hdc::hdc_policy;
pub use stats::{
    mann_whitney_less, summarize, welch_t, wilcoxon_signed_rank, GroupSummary, WelchResult,
};

/// Trial time cap in seconds.
pub const TIME_CAP: f64 = 4000.0;
/// Trial collision cap.
pub const COLLISION_CAP: u32 = 100;
/// Collision weight in solution quality.
pub const STL_RHO: f64 = 8.0;
/// Blue pixels needed for a reading to count towards success.
pub const SUCCESS_PIXELS: u8 = 40;
/// Consecutive qualifying readings that end a trial successfully.
pub const SUCCESS_READINGS: u32 = 3;

/// Solution quality: half of time plus weighted collisions. Lower is better.
pub fn solution_quality(st: f64, sc: u32) -> f64 {
    (st + STL_RHO * f64::from(sc)) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    /// Seeded, idiotypic.
    Sie,
    /// Seeded, reinforcement only.
    Srl,
    /// Unseeded, idiotypic.
    Uie,
    /// Unseeded, reinforcement only.
    Url,
    /// Hand-designed controller.
    Hdc,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Sie,
        Scheme::Srl,
        Scheme::Uie,
        Scheme::Url,
        Scheme::Hdc,
    ];

    pub fn seeded(self) -> bool {
        matches!(self, Scheme::Sie | Scheme::Srl)
    }

    pub fn idiotypic(self) -> bool {
        matches!(self, Scheme::Sie | Scheme::Uie)
    }

    pub fn hdc(self) -> bool {
        self == Scheme::Hdc
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Sie => "SIE",
            Scheme::Srl => "SRL",
            Scheme::Uie => "UIE",
            Scheme::Url => "URL",
            Scheme::Hdc => "HDC",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailReason {
    None,
    Time,
    Collisions,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailReason::None => "none",
            FailReason::Time => "time",
            FailReason::Collisions => "collisions",
        })
    }
}

/// Failure check at the end of a tick; time takes precedence.
pub fn classify_failure(st: f64, sc: u32) -> FailReason {
    if st > TIME_CAP {
        FailReason::Time
    } else if sc > COLLISION_CAP {
        FailReason::Collisions
    } else {
        FailReason::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub world: String,
    pub rng_seed: u64,
    pub st: f64,
    pub sc: u32,
    pub sq: f64,
    pub success: bool,
    pub fail_reason: FailReason,
    pub idio_rate: f64,
}

impl TrialRecord {
    /// Record with capped values on failure and quality derived from them.
    pub fn new(
        scheme: Scheme,
        world: &str,
        rng_seed: u64,
        st: f64,
        sc: u32,
        idio_rate: f64,
    ) -> Self {
        let fail_reason = classify_failure(st, sc);
        let (st, sc) = (st.min(TIME_CAP), sc.min(COLLISION_CAP));
        Self {
            scheme,
            world: world.to_string(),
            rng_seed,
            st,
            sc,
            sq: solution_quality(st, sc),
            success: fail_reason == FailReason::None,
            fail_reason,
            idio_rate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub mode: AntigenMode,
    /// Required by seeded schemes.
    pub seed: Option<Arc<SeedFile>>,
    /// Limits for random antibodies in unseeded schemes.
    pub limits: LimitProfile,
    pub params: AisParams,
    /// Seed of a named random behaviour set; unseeded schemes draw their
    /// initial repertoire from it instead of the trial seed.
    pub set_seed: Option<u64>,
    pub noise: bool,
    pub hdc_track: bool,
    /// Dump the network every k ticks.
    pub dump_every: Option<u64>,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, mode: AntigenMode) -> Self {
        Self {
            scheme,
            mode,
            seed: None,
            limits: LimitProfile::slow(),
            params: AisParams::default(),
            set_seed: None,
            noise: true,
            hdc_track: false,
            dump_every: None,
        }
    }

    pub fn with_seed(mut self, seed: Arc<SeedFile>) -> Self {
        self.seed = Some(seed);
        self
    }
}

const LAYOUT_STREAM: u64 = 10;
const DYNAMICS_STREAM: u64 = 11;
const REPERTOIRE_STREAM: u64 = 12;

/// Builds the starting world for a trial. Layouts depend only on the trial
/// seed, so every scheme faces the same arrangement.
pub fn trial_world(geometry: &Arc<WorldGeometry>, rng_seed: u64) -> WorldState {
    let mut world = WorldState::new(Arc::clone(geometry));
    world.randomize_layout(&mut stream(rng_seed, &[LAYOUT_STREAM]));
    world
}

/// Initial network for a scheme; `None` for the hand-designed controller.
pub fn initial_network(cfg: &SchemeConfig, rng_seed: u64) -> Result<Option<AisState>> {
    if cfg.scheme.hdc() {
        return Ok(None);
    }
    let mut rng = stream(cfg.set_seed.unwrap_or(rng_seed), &[REPERTOIRE_STREAM]);
    let mut ais = if cfg.scheme.seeded() {
        let seed = cfg.seed.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("scheme {} needs a seed file", cfg.scheme))
        })?;
        if seed.antigens != cfg.mode.count() {
            return Err(Error::InvalidArgument(format!(
                "seed file has {} antigens, trial uses {}",
                seed.antigens,
                cfg.mode.count()
            )));
        }
        AisState::init_seeded(seed, cfg.params, &mut rng)?
    } else {
        AisState::init_unseeded(cfg.mode.count(), &cfg.limits, cfg.params, &mut rng)
    };
    ais.idiotypic = cfg.scheme.idiotypic();
    Ok(Some(ais))
}

/// Runs one trial. `on_dump` receives network snapshots when
/// [`SchemeConfig::dump_every`] is set.
pub fn run_stl_trial_with(
    cfg: &SchemeConfig,
    geometry: &Arc<WorldGeometry>,
    rng_seed: u64,
    on_dump: &mut dyn FnMut(u64, &AisState),
) -> Result<TrialRecord> {
    let mut world = trial_world(geometry, rng_seed);
    world.noise = cfg.noise;
    let mut ais = initial_network(cfg, rng_seed)?;
    let mut rng = stream(rng_seed, &[DYNAMICS_STREAM]);
    let mut tracker = RlTracker::new(cfg.mode);
    let mut winner: Option<(usize, usize)> = None;
    let mut sightings = 0;
    let mut tick: u64 = 0;
    let world_name = geometry.config.name.clone();

    let record = |world: &WorldState, ais: &Option<AisState>| {
        let rate = ais
            .as_ref()
            .and_then(|a| a.difference_rate().ok())
            .unwrap_or(0.0);
        TrialRecord::new(
            cfg.scheme,
            &world_name,
            rng_seed,
            world.clock,
            world.collisions,
            rate,
        )
    };

    loop {
        let (code, summary, _) = sense(&world, cfg.mode, &mut rng);
        if summary.blob.pixel_count > SUCCESS_PIXELS {
            sightings += 1;
        } else {
            sightings = 0;
        }
        if sightings >= SUCCESS_READINGS {
            return Ok(record(&world, &ais));
        }

        let ctx = tracker.observe(code.code, summary, TICK_SECONDS);
        let cmd = match ais.as_mut() {
            None => hdc_policy(code, &summary, cfg.hdc_track, &mut rng),
            Some(ais) => {
                if let (Some(ctx), Some(w)) = (ctx, winner) {
                    let mut delta = transition_score(&ctx, Phase::Stl)?.0;
                    let p = ais.p[w.0][w.1];
                    if let Some(Adjustment::Deduct(d)) =
                        stagnation_adjust(&mut tracker.counters, Phase::Stl, ais.idiotypic, p)
                    {
                        delta += d;
                    }
                    ais.reinforce(w, delta, &mut rng);
                }
                if !ais.seeded {
                    ais.replace_weak(&cfg.limits, &mut rng)?;
                }
                let outcome = ais.select(code.index());
                winner = Some(outcome.beta);
                act(ais.antibody(outcome.beta), &summary.blob, &mut rng)
            }
        };

        world.step(cmd, TICK_SECONDS);
        world.supervisor_tick(&mut rng, TICK_SECONDS);
        tick += 1;
        if let (Some(k), Some(ais)) = (cfg.dump_every, ais.as_ref()) {
            if k > 0 && tick.is_multiple_of(k) {
                on_dump(tick, ais);
            }
        }
        if classify_failure(world.clock, world.collisions) != FailReason::None {
            return Ok(record(&world, &ais));
        }
    }
}

pub fn run_stl_trial(
    cfg: &SchemeConfig,
    geometry: &Arc<WorldGeometry>,
    rng_seed: u64,
) -> Result<TrialRecord> {
    run_stl_trial_with(cfg, geometry, rng_seed, &mut |_, _| {})
}
