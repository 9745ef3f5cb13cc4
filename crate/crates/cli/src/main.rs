use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use idionav::behavior::LimitProfile;
use idionav::diversity::seed_diversity;
use idionav::ga::{run_ltl, CriteriaSet, LtlConfig, PopulationModel, SeedFile};
use idionav::harness::stats::median;
use idionav::harness::{
    mann_whitney_less, read_csv, run_plan_file, run_stl_trial_with, summarize, welch_t, write_csv,
    Scheme, SchemeConfig, TrialRecord,
};
use idionav::perception::AntigenMode;
use idionav::sim::{WorldConfig, WorldGeometry};

#[derive(Parser)]
#[command(
    name = "idionav",
    version,
    about = "Evolve behaviour repertoires and run idiotypic target-finding trials"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve five antibody sets in a building world and write a seed file.
    Ltl(LtlArgs),
    /// Run one target-finding trial and print its CSV row.
    Stl(StlArgs),
    /// Run every line of an experiment plan and write the results as CSV.
    Batch(BatchArgs),
    /// Summarize a results CSV, or audit a seed file's diversity.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

fn antigen_mode(n: usize) -> Result<AntigenMode> {
    AntigenMode::from_count(n).with_context(|| format!("--antigens must be 8 or 9, got {n}"))
}

fn profile(name: &str) -> Result<LimitProfile> {
    LimitProfile::by_name(name)
        .with_context(|| format!("unknown limit profile `{name}` (table2 or slow)"))
}

fn geometry(world: &Path) -> Result<Arc<WorldGeometry>> {
    let cfg =
        WorldConfig::load(world).with_context(|| format!("loading world {}", world.display()))?;
    Ok(Arc::new(WorldGeometry::new(cfg)))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Args)]
struct LtlArgs {
    /// World file or bundled world name (world-a1, world-a2).
    #[arg(long)]
    world: PathBuf,
    /// single:<x> or multi:<populations>x<size>.
    #[arg(long, default_value = "multi:5x10")]
    pop: PopulationModel,
    #[arg(long, default_value_t = 8)]
    antigens: usize,
    /// Attribute limits: table2 or slow.
    #[arg(long, default_value = "table2")]
    profile: String,
    /// Stopping rules: world1, world2 or seed-rerun.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Seed file to write.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_ltl(a: LtlArgs) -> Result<()> {
    let mut cfg = LtlConfig::new(geometry(&a.world)?, a.pop, a.seed);
    cfg.mode = antigen_mode(a.antigens)?;
    cfg.limits = profile(&a.profile)?;
    cfg.criteria = match a.criteria.as_deref() {
        Some(name) => CriteriaSet::by_name(name)
            .with_context(|| format!("unknown criteria `{name}` (world1, world2, seed-rerun)"))?,
        None if a.profile == "slow" => CriteriaSet::SeedRerun,
        None => CriteriaSet::World1,
    };
    let (seed, stats) = run_ltl(&cfg)?;
    seed.save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    for g in &stats.history {
        eprintln!(
            "g={:<3} LT={:8.2} LC={:6.2} Lf={:8.2}",
            g.g, g.lt, g.lc, g.lf
        );
    }
    eprintln!("wall clock {:.2?}", stats.wall_clock);
    println!("generations {}", stats.generations());
    println!("stopped by {}", stats.reason);
    println!("evaluations {}", stats.evaluations);
    println!("foreign genes {}", stats.foreign_genes);
    if let Some(d) = seed_diversity(&seed) {
        println!("Z_U {:.1}%  Z_S {:.1}%", 100.0 * d.z_u, 100.0 * d.z_s);
    }
    Ok(())
}

#[derive(Args)]
struct StlArgs {
    #[arg(long)]
    scheme: Scheme,
    /// World file or bundled world name (world-b3, world-b4).
    #[arg(long)]
    world: PathBuf,
    /// Seed file, required by sie and srl.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    antigens: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    noise: OnOff,
    /// Print the network every k ticks to stderr.
    #[arg(long, value_name = "K")]
    dump_state: Option<u64>,
    /// Let the hand-designed controller steer towards a visible target.
    #[arg(long)]
    hdc_track: bool,
    /// Draw unseeded repertoires from this seed instead of the trial seed.
    #[arg(long)]
    set_seed: Option<u64>,
    /// Limits for random antibodies (defaults to the seed file's, else slow).
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
}

fn cmd_stl(a: StlArgs) -> Result<()> {
    let geometry = geometry(&a.world)?;
    let mut cfg = SchemeConfig::new(a.scheme, antigen_mode(a.antigens)?);
    if let Some(path) = &a.seeds {
        let seed = SeedFile::load(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some(l) = seed.limits() {
            cfg.limits = l;
        }
        cfg.seed = Some(Arc::new(seed));
    } else if a.scheme.seeded() {
        bail!("scheme {} needs --seeds <file>", a.scheme);
    }
    if let Some(p) = &a.profile {
        cfg.limits = profile(p)?;
    }
    cfg.noise = matches!(a.noise, OnOff::On);
    cfg.hdc_track = a.hdc_track;
    cfg.set_seed = a.set_seed;
    cfg.dump_every = a.dump_state;
    if let Some(k1) = a.k1 {
        cfg.params.k1 = k1;
    }
    if let Some(k2) = a.k2 {
        cfg.params.k2 = k2;
    }
    let mut dump = |tick: u64, ais: &idionav::ais::AisState| {
        eprint!("tick {tick}\n{}", ais.dump());
    };
    let row = run_stl_trial_with(&cfg, &geometry, a.seed, &mut dump)?;
    write_csv(&[row], io::stdout().lock())?;
    Ok(())
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// CSV to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_batch(a: BatchArgs) -> Result<()> {
    let rows = run_plan_file(&a.plan).with_context(|| format!("running {}", a.plan.display()))?;
    let mut out = output(a.out.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    if let Some(p) = &a.out {
        eprintln!("{} rows written to {}", rows.len(), p.display());
    }
    Ok(())
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct StatsArgs {
    #[command(subcommand)]
    sub: Option<StatsCmd>,
    /// Results CSV.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Two schemes to compare, e.g. SIE,SRL.
    #[arg(long, value_delimiter = ',')]
    compare: Option<Vec<Scheme>>,
    #[arg(long, value_enum, default_value = "sq")]
    metric: Metric,
}

#[derive(Subcommand)]
enum StatsCmd {
    /// Type and speed diversity of a seed file.
    Diversity {
        #[arg(long)]
        seeds: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Sq,
    St,
    Sc,
}

impl Metric {
    fn of(self, r: &TrialRecord) -> f64 {
        match self {
            Metric::Sq => r.sq,
            Metric::St => r.st,
            Metric::Sc => f64::from(r.sc),
        }
    }
}

/// Significance level reported alongside each comparison.
const ALPHA: f64 = 0.01;

fn cmd_stats(a: StatsArgs) -> Result<()> {
    if let Some(StatsCmd::Diversity { seeds }) = a.sub {
        let seed =
            SeedFile::load(&seeds).with_context(|| format!("reading {}", seeds.display()))?;
        let d = seed_diversity(&seed).context("diversity needs exactly five antibody sets")?;
        println!("Z_U {:.1}%", 100.0 * d.z_u);
        println!("Z_S {:.1}%", 100.0 * d.z_s);
        return Ok(());
    }
    let input = a
        .input
        .context("stats needs --in <results.csv> or the diversity subcommand")?;
    let rows =
        read_csv(File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<6} {:<12} {:>4} {:>8} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7} {:>6}",
        "scheme",
        "world",
        "n",
        "mean_SC",
        "mean_ST",
        "mean_Sq",
        "med_Sq",
        "fail_C%",
        "fail_T%",
        "fail%",
        "idio"
    )?;
    for g in summarize(&rows) {
        writeln!(
            out,
            "{:<6} {:<12} {:>4} {:>8.1} {:>9.1} {:>9.1} {:>9.1} {:>7.1} {:>7.1} {:>7.1} {:>6.3}",
            g.scheme.to_string(),
            g.world,
            g.n,
            g.mean_sc,
            g.mean_st,
            g.mean_sq,
            g.median_sq,
            g.fail_collision_pct,
            g.fail_time_pct,
            g.fail_total_pct,
            g.mean_idio_rate
        )?;
    }
    let Some(pair) = a.compare else {
        return Ok(());
    };
    let [sa, sb] = pair[..] else {
        bail!("--compare takes exactly two schemes, e.g. SIE,SRL");
    };
    let mut worlds: Vec<&str> = rows.iter().map(|r| r.world.as_str()).collect();
    worlds.sort_unstable();
    worlds.dedup();
    writeln!(out)?;
    writeln!(
        out,
        "{:<12} {:<9} {:>9} {:>9} {:>8} {:>7} {:>9} {:>9} {:>6}",
        "world", "pair", "median_a", "median_b", "t", "df", "p_welch", "p_rank<", "sig99"
    )?;
    for w in worlds {
        let sample = |s: Scheme| -> Vec<f64> {
            rows.iter()
                .filter(|r| r.scheme == s && r.world == w)
                .map(|r| a.metric.of(r))
                .collect()
        };
        let (xa, xb) = (sample(sa), sample(sb));
        if xa.is_empty() || xb.is_empty() {
            eprintln!(
                "warning: {w} has no rows for {}, skipped",
                if xa.is_empty() { sa } else { sb }
            );
            continue;
        }
        let rank = mann_whitney_less(&xa, &xb)?;
        match welch_t(&xa, &xb) {
            Ok(t) => writeln!(
                out,
                "{:<12} {:<9} {:>9.1} {:>9.1} {:>8.3} {:>7.1} {:>9.4} {:>9.4} {:>6}",
                w,
                format!("{sa}-{sb}"),
                median(&xa),
                median(&xb),
                t.t,
                t.df,
                t.p,
                rank,
                if t.p < ALPHA { "yes" } else { "no" }
            )?,
            Err(e) => eprintln!("warning: {w}: {e}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Ltl(a) => cmd_ltl(a),
        Cmd::Stl(a) => cmd_stl(a),
        Cmd::Batch(a) => cmd_batch(a),
        Cmd::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
