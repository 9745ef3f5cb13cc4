//! Experiment plans and CSV results.
//!
//! A plan has one line per (scheme, world) block:
//!
//! ```text
//! # scheme world reps base_seed [key=value ...]
//! sie world-b3 30 1000 seeds=seeds.txt
//! uie world-b3 30 1000 set=R1:11
//! hdc world-b4 30 1000 antigens=8 noise=off
//! ```
//!
//! Keys: `seeds`, `antigens`, `set` (named random behaviour set `<name>:<seed>`),
//! `noise`, `hdc-track`, `profile`, `k1`, `k2`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::{run_stl_trial, Scheme, SchemeConfig, TrialRecord};
use crate::behavior::LimitProfile;
use crate::ga::SeedFile;
use crate::perception::AntigenMode;
use crate::sim::{WorldConfig, WorldGeometry};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanLine {
    pub line: usize,
    pub scheme: Scheme,
    pub world: String,
    pub reps: u64,
    pub base_seed: u64,
    pub seeds: Option<PathBuf>,
    pub mode: AntigenMode,
    /// Named random behaviour set for unseeded schemes.
    pub set: Option<(String, u64)>,
    pub noise: bool,
    pub hdc_track: bool,
    pub profile: Option<String>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
}

fn on_off(v: &str) -> Option<bool> {
    match v {
        "on" | "true" | "1" => Some(true),
        "off" | "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_plan(text: &str) -> Result<Vec<PlanLine>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::PlanParse { line, msg };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(err(
                "expected `scheme world reps base_seed [key=value ...]`".into(),
            ));
        }
        let scheme: Scheme = fields[0].parse().map_err(|e: Error| err(e.to_string()))?;
        let reps = fields[2]
            .parse()
            .map_err(|_| err(format!("bad replicate count `{}`", fields[2])))?;
        let base_seed = fields[3]
            .parse()
            .map_err(|_| err(format!("bad base seed `{}`", fields[3])))?;
        let mut pl = PlanLine {
            line,
            scheme,
            world: fields[1].to_string(),
            reps,
            base_seed,
            seeds: None,
            mode: AntigenMode::Eight,
            set: None,
            noise: true,
            hdc_track: false,
            profile: None,
            k1: None,
            k2: None,
        };
        for kv in &fields[4..] {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found `{kv}`")))?;
            let bad = || err(format!("bad value for `{k}`: `{v}`"));
            match k {
                "seeds" => pl.seeds = Some(PathBuf::from(v)),
                "antigens" => {
                    pl.mode = v
                        .parse()
                        .ok()
                        .and_then(AntigenMode::from_count)
                        .ok_or_else(bad)?;
                }
                "set" => {
                    let (name, seed) = v.split_once(':').ok_or_else(bad)?;
                    pl.set = Some((name.to_string(), seed.parse().map_err(|_| bad())?));
                }
                "noise" => pl.noise = on_off(v).ok_or_else(bad)?,
                "hdc-track" => pl.hdc_track = on_off(v).ok_or_else(bad)?,
                "profile" => {
                    LimitProfile::by_name(v).ok_or_else(bad)?;
                    pl.profile = Some(v.to_string());
                }
                "k1" => pl.k1 = Some(v.parse().map_err(|_| bad())?),
                "k2" => pl.k2 = Some(v.parse().map_err(|_| bad())?),
                _ => return Err(err(format!("unknown key `{k}`"))),
            }
        }
        if pl.scheme.seeded() && pl.seeds.is_none() {
            return Err(err(format!("scheme {} needs seeds=<file>", pl.scheme)));
        }
        out.push(pl);
    }
    Ok(out)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    let joined = base.join(p);
    if joined.exists() {
        joined
    } else {
        p.to_path_buf()
    }
}

impl PlanLine {
    /// Scheme configuration for this line; relative paths resolve against
    /// `base`, worlds fall back to the bundled names.
    pub fn config(&self, base: &Path) -> Result<(SchemeConfig, Arc<WorldGeometry>)> {
        let world = WorldConfig::load(resolve(base, Path::new(&self.world)))?;
        let mut cfg = SchemeConfig::new(self.scheme, self.mode);
        if let Some(path) = &self.seeds {
            let seed = SeedFile::load(resolve(base, path))?;
            if let Some(l) = seed.limits() {
                cfg.limits = l;
            }
            cfg.seed = Some(Arc::new(seed));
        }
        if let Some(p) = &self.profile {
            cfg.limits = LimitProfile::by_name(p).expect("validated while parsing");
        }
        cfg.set_seed = self.set.as_ref().map(|s| s.1);
        cfg.noise = self.noise;
        cfg.hdc_track = self.hdc_track;
        if let Some(k1) = self.k1 {
            cfg.params.k1 = k1;
        }
        if let Some(k2) = self.k2 {
            cfg.params.k2 = k2;
        }
        Ok((cfg, Arc::new(WorldGeometry::new(world))))
    }
}

/// Runs every replicate of every line; replicate `k` uses seed
/// `base_seed + k`. Rows come back in plan order.
pub fn run_batch(lines: &[PlanLine], base: &Path) -> Result<Vec<TrialRecord>> {
    let configs: Vec<_> = lines
        .iter()
        .map(|l| l.config(base))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = lines
        .iter()
        .enumerate()
        .flat_map(|(i, l)| (0..l.reps).map(move |k| (i, l.base_seed.wrapping_add(k))))
        .collect();
    jobs.par_iter()
        .map(|&(i, seed)| {
            let (cfg, geometry) = &configs[i];
            run_stl_trial(cfg, geometry, seed)
        })
        .collect()
}

pub fn run_plan_file(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let lines = parse_plan(&std::fs::read_to_string(path)?)?;
    run_batch(&lines, path.parent().unwrap_or(Path::new(".")))
}

pub fn write_csv<W: Write>(rows: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Rows keyed by (scheme, world), each group sorted by seed.
pub fn group_rows(rows: &[TrialRecord]) -> HashMap<(Scheme, String), Vec<&TrialRecord>> {
    let mut groups: HashMap<(Scheme, String), Vec<&TrialRecord>> = HashMap::new();
    for r in rows {
        groups
            .entry((r.scheme, r.world.clone()))
            .or_default()
            .push(r);
    }
    for v in groups.values_mut() {
        v.sort_by_key(|r| r.rng_seed);
    }
    groups
}
