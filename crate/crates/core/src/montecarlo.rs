//! Seeded Monte Carlo estimates of the first-occurrence law.
//!
//! Trials are grouped in fixed blocks of [`BLOCK_TRIALS`]; block `i` draws
//! from ChaCha8 seeded with the run seed on stream `i`. Tallies therefore
//! depend only on the seed and the trial count, never on the thread count.
//!
//! The infinite case uses i.i.d. uniform values in place of the bijection.
//! With `v1 = f(1)`, the first triple is `{1, s, r}` where `s` is the first
//! position whose value exceeds `v1` and `r` the first after `s` exceeding
//! `f(s)`. [`SequentialDetector`] reveals values one position at a time;
//! the default sampler draws the same quantities by skipping ahead: the run
//! of values below a threshold `t` has a geometric length with success
//! probability `1 - t`, and the value that ends it is uniform on `(t, 1)`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, SizeSpec};
use crate::pattern::{first_increasing_triple_with, FirstOccurrence, Triple};

pub const BLOCK_TRIALS: u64 = 1 << 16;
/// Positions per infinite trial before the run is aborted. Values are `f64`,
/// so thresholds closer to 1 than `2^-53` cannot be resolved anyway.
pub const DEFAULT_HARD_CAP: u64 = 1 << 53;
pub const ALGORITHM_LABEL: &str = "chacha8-seed_from_u64-stream-per-65536-trial-block";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub seed: u64,
    pub algorithm: String,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec {
            seed,
            algorithm: ALGORITHM_LABEL.to_string(),
        }
    }

    pub fn block_rng(&self, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        rng
    }
}

/// How infinite-case values are revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevealMethod {
    #[default]
    SkipAhead,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub threads: Option<usize>,
    pub hard_cap: u64,
    pub method: RevealMethod,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            threads: None,
            hard_cap: DEFAULT_HARD_CAP,
            method: RevealMethod::default(),
        }
    }
}

/// Frequency estimate of one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub event: FirstOccurrence,
    pub hits: u64,
    pub trials: u64,
    pub point: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn new(event: FirstOccurrence, hits: u64, trials: u64) -> Self {
        let point = hits as f64 / trials as f64;
        McEstimate {
            event,
            hits,
            trials,
            point,
            stderr: (point * (1.0 - point) / trials as f64).sqrt(),
        }
    }
}

/// Outcome of a simulation run: every observed event with its estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub size: SizeSpec,
    pub rng: RngSpec,
    pub trials: u64,
    pub estimates: BTreeMap<FirstOccurrence, McEstimate>,
    /// Largest position revealed in any infinite-case trial.
    pub max_position: Option<u64>,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetadata {
    pub size: String,
    pub seed: u64,
    pub algorithm: String,
    pub trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_position: Option<u64>,
    pub wall_time_ms: u128,
}

impl SampleRun {
    pub fn hits(&self, event: &FirstOccurrence) -> u64 {
        self.estimates.get(event).map_or(0, |e| e.hits)
    }

    pub fn estimate(&self, event: &FirstOccurrence) -> McEstimate {
        self.estimates
            .get(event)
            .cloned()
            .unwrap_or_else(|| McEstimate::new(*event, 0, self.trials))
    }

    pub fn metadata(&self) -> RunMetadata {
        RunMetadata {
            size: self.size.to_string(),
            seed: self.rng.seed,
            algorithm: self.rng.algorithm.clone(),
            trials: self.trials,
            max_position: self.max_position,
            wall_time_ms: self.wall_time_ms,
        }
    }

    /// `event,hits,trials,point,stderr`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_delimited(w, b',')
    }

    pub fn write_delimited<W: Write>(&self, w: W, delimiter: u8) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(w);
        for e in self.estimates.values() {
            out.serialize(e)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Default)]
struct BlockTally {
    counts: HashMap<FirstOccurrence, u64>,
    max_position: u64,
}

fn blocks(trials: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let count = trials.div_ceil(BLOCK_TRIALS) as usize;
    (0..count).into_par_iter().map(move |b| {
        let b = b as u64;
        let start = b * BLOCK_TRIALS;
        (b, (trials - start).min(BLOCK_TRIALS))
    })
}

fn in_pool<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(job()),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}"))),
    }
}

fn merge(
    size: SizeSpec,
    rng: &RngSpec,
    trials: u64,
    parts: Vec<BlockTally>,
    started: Instant,
) -> SampleRun {
    let mut counts: BTreeMap<FirstOccurrence, u64> = BTreeMap::new();
    let mut max_position = 0;
    for part in parts {
        for (event, c) in part.counts {
            *counts.entry(event).or_default() += c;
        }
        max_position = max_position.max(part.max_position);
    }
    SampleRun {
        size,
        rng: rng.clone(),
        trials,
        estimates: counts
            .into_iter()
            .map(|(e, hits)| (e, McEstimate::new(e, hits, trials)))
            .collect(),
        max_position: matches!(size, SizeSpec::Infinite).then_some(max_position),
        wall_time_ms: started.elapsed().as_millis(),
    }
}

pub fn sample_finite(n: usize, rng: &RngSpec, trials: u64) -> Result<SampleRun> {
    sample_finite_with(n, rng, trials, &SimConfig::default())
}

/// Uniform permutations of `[n]` by Fisher–Yates shuffle.
pub fn sample_finite_with(
    n: usize,
    rng: &RngSpec,
    trials: u64,
    cfg: &SimConfig,
) -> Result<SampleRun> {
    let size = SizeSpec::finite(n)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let started = Instant::now();
    let parts = in_pool(cfg.threads, || {
        blocks(trials)
            .map(|(block, len)| {
                let mut gen = rng.block_rng(block);
                let mut perm: Vec<u32> = (1..=n as u32).collect();
                let mut scratch = Vec::with_capacity(n);
                let mut tally = BlockTally::default();
                for _ in 0..len {
                    perm.shuffle(&mut gen);
                    let event = match first_increasing_triple_with(&perm, &mut scratch) {
                        Some((a, b, c)) => {
                            FirstOccurrence::Found(Triple::new_unchecked(a + 1, b + 1, c + 1))
                        }
                        None => FirstOccurrence::Never,
                    };
                    *tally.counts.entry(event).or_default() += 1;
                }
                tally
            })
            .collect::<Vec<_>>()
    })?;
    Ok(merge(size, rng, trials, parts, started))
}

/// Incremental detector over a revealed sequence of values: tracks the head
/// value, then the first value above it, then stops at the first value above
/// that. Returns the 1-indexed triple once it is decided.
#[derive(Debug, Clone, Default)]
pub struct SequentialDetector {
    revealed: u64,
    head: Option<f64>,
    middle: Option<(u64, f64)>,
}

impl SequentialDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revealed(&self) -> u64 {
        self.revealed
    }

    pub fn push(&mut self, value: f64) -> Option<(u64, u64, u64)> {
        self.revealed += 1;
        let pos = self.revealed;
        match (self.head, self.middle) {
            (None, _) => self.head = Some(value),
            (Some(h), None) => {
                if value > h {
                    self.middle = Some((pos, value));
                }
            }
            (Some(_), Some((s, m))) => {
                if value > m {
                    return Some((1, s, pos));
                }
            }
        }
        None
    }
}

/// Number of failures before the first success, by inversion.
fn geometric_failures<R: Rng>(rng: &mut R, p: f64) -> u64 {
    let v = 1.0 - rng.random::<f64>();
    let x = (v.ln() / (-p).ln_1p()).floor();
    // saturating float-to-int cast
    x as u64
}

/// Gap `1 - value` of a uniform value, in `(0, 1]`.
fn uniform_gap<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn infinite_trial_skip<R: Rng>(rng: &mut R, hard_cap: u64) -> std::result::Result<(u64, u64), u64> {
    let head_gap = uniform_gap(rng);
    let s = 2u64.saturating_add(geometric_failures(rng, head_gap));
    if s >= hard_cap {
        return Err(s);
    }
    let mid_gap = head_gap * uniform_gap(rng);
    let r = s
        .saturating_add(1)
        .saturating_add(geometric_failures(rng, mid_gap));
    if r > hard_cap {
        return Err(r);
    }
    Ok((s, r))
}

fn infinite_trial_sequential<R: Rng>(
    rng: &mut R,
    hard_cap: u64,
) -> std::result::Result<(u64, u64), u64> {
    let mut det = SequentialDetector::new();
    loop {
        if det.revealed() >= hard_cap {
            return Err(det.revealed() + 1);
        }
        if let Some((_, s, r)) = det.push(rng.random::<f64>()) {
            return Ok((s, r));
        }
    }
}

pub fn sample_infinite(rng: &RngSpec, trials: u64) -> Result<SampleRun> {
    sample_infinite_with(rng, trials, &SimConfig::default())
}

/// Infinite-case sampler. A trial that passes `hard_cap` positions aborts the
/// run with [`Error::HardCapExceeded`].
pub fn sample_infinite_with(rng: &RngSpec, trials: u64, cfg: &SimConfig) -> Result<SampleRun> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if cfg.hard_cap < 3 {
        return Err(Error::InvalidArgument("hard cap must be >= 3".into()));
    }
    let started = Instant::now();
    let parts = in_pool(cfg.threads, || {
        blocks(trials)
            .map(|(block, len)| {
                let mut gen = rng.block_rng(block);
                let mut tally = BlockTally::default();
                for i in 0..len {
                    let outcome = match cfg.method {
                        RevealMethod::SkipAhead => infinite_trial_skip(&mut gen, cfg.hard_cap),
                        RevealMethod::Sequential => {
                            infinite_trial_sequential(&mut gen, cfg.hard_cap)
                        }
                    };
                    let (s, r) = outcome.map_err(|_| Error::HardCapExceeded {
                        trial: block * BLOCK_TRIALS + i,
                        hard_cap: cfg.hard_cap,
                    })?;
                    let t = Triple::new_unchecked(1, s as usize, r as usize);
                    *tally.counts.entry(FirstOccurrence::Found(t)).or_default() += 1;
                    tally.max_position = tally.max_position.max(r);
                }
                Ok(tally)
            })
            .collect::<Vec<Result<BlockTally>>>()
    })?;
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(merge(SizeSpec::Infinite, rng, trials, parts, started))
}

/// One row of a comparison between a simulation and an exact table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub event: String,
    pub exact: f64,
    pub hits: u64,
    pub trials: u64,
    pub point: f64,
    pub stderr: f64,
    /// `None` when `stderr` is zero (no hits, or every trial hit).
    pub z: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub max_abs_z: f64,
    pub excluded: Vec<String>,
}

impl ComparisonReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.flagged)
    }
}

pub const Z_FLAG: f64 = 4.0;

/// Per-event z-scores `(point - exact)/stderr`. Observed triples the table
/// does not itemise are pooled into its residual row, if it has one.
pub fn compare_report(table: &DistributionTable, run: &SampleRun) -> Result<ComparisonReport> {
    if run.estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    if table.size != run.size {
        return Err(Error::SupportMismatch(format!(
            "table is for size {}, estimates for size {}",
            table.size, run.size
        )));
    }
    let mut residual_hits = 0u64;
    for (event, est) in &run.estimates {
        if table.probability(event).is_some() {
            continue;
        }
        match (event, &table.residual) {
            (FirstOccurrence::Found(_), Some(_)) => residual_hits += est.hits,
            _ => {
                return Err(Error::SupportMismatch(format!(
                    "event {event} is outside the table's support"
                )))
            }
        }
    }

    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let mut push = |label: String, exact: &crate::ExactRational, hits: u64| {
        let est = McEstimate::new(FirstOccurrence::Never, hits, run.trials);
        let exact = exact.to_f64().unwrap_or(f64::NAN);
        let z = (est.stderr > 0.0).then(|| (est.point - exact) / est.stderr);
        if z.is_none() {
            excluded.push(format!("{label}: stderr 0 with {hits}/{} hits", run.trials));
        }
        rows.push(ComparisonRow {
            event: label,
            exact,
            hits,
            trials: run.trials,
            point: est.point,
            stderr: est.stderr,
            z,
            flagged: z.is_some_and(|z| z.abs() > Z_FLAG),
        });
    };
    for e in &table.entries {
        push(
            e.triple.to_string(),
            &e.probability,
            run.hits(&FirstOccurrence::Found(e.triple)),
        );
    }
    if let Some(r) = &table.residual {
        push(r.label.clone(), &r.mass, residual_hits);
    }
    push(
        "never".into(),
        &table.never_mass,
        run.hits(&FirstOccurrence::Never),
    );
    let max_abs_z = rows
        .iter()
        .filter_map(|r| r.z.map(f64::abs))
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        rows,
        max_abs_z,
        excluded,
    })
}
