//! Exhaustive enumeration of `S_n`: exact first-occurrence counts.
//!
//! One sweep tallies, for every permutation, its lex-first triple and, keyed
//! by the length `k` of the shortest pattern-containing prefix, the lex-first
//! triple of that prefix (which always ends at position `k`). Work is split
//! into `n` blocks by the value of `π(1)`; block tallies are integer sums, so
//! the merged result does not depend on the thread count.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pattern::{
    first_increasing_triple_with, lex_rank, lex_unrank, min_pattern_end, triple_count, triples,
    Triple,
};
use crate::scalar::big_factorial;

pub const DEFAULT_CAP: usize = 11;
/// Hard ceiling even with `force`: `20!` is the largest factorial in `u64`.
pub const MAX_ENUMERABLE: usize = 20;
const NANOS_PER_PERMUTATION_PER_POSITION: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationConfig {
    pub cap: usize,
    pub force: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            cap: DEFAULT_CAP,
            force: false,
            threads: None,
        }
    }
}

impl EnumerationConfig {
    pub fn with_threads(threads: usize) -> Self {
        EnumerationConfig {
            threads: Some(threads),
            ..Default::default()
        }
    }
}

/// Human-readable cost of enumerating `S_n` on one core.
pub fn cost_estimate(n: usize) -> (BigUint, String) {
    let perms = big_factorial(n as u64);
    let perms_f: f64 = num_traits::ToPrimitive::to_f64(&perms).unwrap_or(f64::INFINITY);
    let secs = perms_f * n as f64 * NANOS_PER_PERMUTATION_PER_POSITION * 1e-9;
    let human = if secs < 120.0 {
        format!("{secs:.1} CPU-seconds")
    } else if secs < 2.0 * 86_400.0 {
        format!("{:.1} CPU-hours", secs / 3600.0)
    } else {
        format!("{:.2e} CPU-years", secs / (365.25 * 86_400.0))
    };
    (perms, human)
}

pub fn check_enumerable(n: usize, cfg: &EnumerationConfig) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "enumeration needs n >= 3, got {n}"
        )));
    }
    if n > MAX_ENUMERABLE || (n > cfg.cap && !cfg.force) {
        let (perms, estimate) = cost_estimate(n);
        return Err(Error::CapExceeded {
            n,
            cap: if cfg.force { MAX_ENUMERABLE } else { cfg.cap },
            permutations: perms.to_string(),
            estimate,
        });
    }
    Ok(())
}

/// Dense tallies from one sweep over `S_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTally {
    n: usize,
    width: usize,
    /// By rank of the lex-first triple; the last slot counts `never`.
    first: Vec<u64>,
    /// Row `k`: by rank of the lex-first triple of the shortest
    /// pattern-containing prefix, when that prefix has length `k`.
    prefix: Vec<u64>,
}

impl JointTally {
    fn new(n: usize) -> Self {
        let width = triple_count(n) as usize + 1;
        JointTally {
            n,
            width,
            first: vec![0; width],
            prefix: vec![0; (n + 1) * width],
        }
    }

    fn never_slot(&self) -> usize {
        self.width - 1
    }

    fn merge(mut self, other: &JointTally) -> Self {
        for (x, y) in self.first.iter_mut().zip(&other.first) {
            *x += y;
        }
        for (x, y) in self.prefix.iter_mut().zip(&other.prefix) {
            *x += y;
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Permutations whose lex-first triple is `t`.
    pub fn first(&self, t: &Triple) -> u64 {
        lex_rank(t, self.n).map_or(0, |rank| self.first[rank as usize])
    }

    pub fn never(&self) -> u64 {
        self.first[self.never_slot()]
    }

    /// Permutations whose shortest pattern-containing prefix has length `k`
    /// and whose lex-first triple within that prefix is `t`.
    pub fn prefix_first(&self, k: usize, t: &Triple) -> u64 {
        match lex_rank(t, self.n) {
            Ok(rank) if k <= self.n => self.prefix[k * self.width + rank as usize],
            _ => 0,
        }
    }

    fn row(&self, k: usize) -> &[u64] {
        &self.prefix[k * self.width..(k + 1) * self.width]
    }
}

fn rank_lookup(n: usize) -> Vec<u32> {
    let mut table = vec![u32::MAX; n * n * n];
    for (rank, t) in triples(n).enumerate() {
        table[((t.a() - 1) * n + t.b() - 1) * n + t.c() - 1] = rank as u32;
    }
    table
}

/// Lexicographic successor; `false` once the slice is in descending order.
fn next_permutation(v: &mut [u8]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v
        .iter()
        .rposition(|&x| x > v[i])
        .expect("pivot has a larger successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

fn sweep_block(n: usize, first: u8, ranks: &[u32]) -> JointTally {
    let mut tally = JointTally::new(n);
    let never = tally.never_slot();
    let mut perm: Vec<u8> = std::iter::once(first)
        .chain((1..=n as u8).filter(|&x| x != first))
        .collect();
    let mut scratch = Vec::with_capacity(n);
    loop {
        match first_increasing_triple_with(&perm, &mut scratch) {
            Some((a, b, c)) => {
                tally.first[ranks[(a * n + b) * n + c] as usize] += 1;
                let k = min_pattern_end(&perm).expect("pattern present") + 1;
                let (a, b, c) = first_increasing_triple_with(&perm[..k], &mut scratch)
                    .expect("prefix contains the pattern");
                tally.prefix[k * tally.width + ranks[(a * n + b) * n + c] as usize] += 1;
            }
            None => tally.first[never] += 1,
        }
        if !next_permutation(&mut perm[1..]) {
            break;
        }
    }
    tally
}

fn run_in_pool<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs the full sweep over `S_n`.
pub fn joint_tally(n: usize, cfg: &EnumerationConfig) -> Result<JointTally> {
    check_enumerable(n, cfg)?;
    let ranks = rank_lookup(n);
    let blocks = run_in_pool(cfg.threads, || {
        (1..=n as u8)
            .into_par_iter()
            .map(|first| sweep_block(n, first, &ranks))
            .collect::<Vec<_>>()
    })?;
    Ok(blocks
        .iter()
        .fold(JointTally::new(n), |acc, block| acc.merge(block)))
}

/// Exact tally of first occurrences over all of `S_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusResult {
    pub n: usize,
    /// Every triple of `[n]`, in lex order, including zero counts.
    pub counts: BTreeMap<Triple, BigUint>,
    pub never_count: BigUint,
    pub total: BigUint,
    /// Permutations whose shortest 123-containing prefix has length `k`.
    pub prefix_counts: BTreeMap<usize, BigUint>,
}

impl CensusResult {
    pub fn from_tally(tally: &JointTally) -> Self {
        let n = tally.n;
        let prefix_counts = (3..=n)
            .map(|k| (k, BigUint::from(tally.row(k).iter().sum::<u64>())))
            .collect();
        let counts = triples(n)
            .zip(&tally.first)
            .map(|(t, &c)| (t, BigUint::from(c)))
            .collect();
        CensusResult {
            n,
            counts,
            never_count: BigUint::from(tally.never()),
            total: big_factorial(n as u64),
            prefix_counts,
        }
    }

    pub fn count(&self, t: &Triple) -> BigUint {
        self.counts.get(t).cloned().unwrap_or_default()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["triple", "count", "total"])?;
        let total = self.total.to_string();
        for (t, c) in &self.counts {
            out.write_record([t.to_string(), c.to_string(), total.clone()])?;
        }
        out.write_record(["never".to_string(), self.never_count.to_string(), total])?;
        out.flush()?;
        Ok(())
    }

    pub fn rows(&self) -> Vec<CountRow> {
        self.counts
            .iter()
            .map(|(t, c)| CountRow {
                event: t.to_string(),
                count: c.to_string(),
                total: self.total.to_string(),
            })
            .chain(std::iter::once(CountRow {
                event: "never".into(),
                count: self.never_count.to_string(),
                total: self.total.to_string(),
            }))
            .collect()
    }
}

/// One `triple,count,total` row, with big integers rendered in decimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRow {
    #[serde(rename = "triple")]
    pub event: String,
    pub count: String,
    pub total: String,
}

pub fn census(n: usize) -> Result<CensusResult> {
    census_with(n, &EnumerationConfig::default())
}

pub fn census_with(n: usize, cfg: &EnumerationConfig) -> Result<CensusResult> {
    Ok(CensusResult::from_tally(&joint_tally(n, cfg)?))
}

/// Among permutations whose shortest 123-containing prefix has length
/// exactly `k`, the distribution of the lex-first increasing triple within
/// that prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalCensus {
    pub n: usize,
    pub k: usize,
    /// Every triple with `c = k`; no other triple can be first here.
    pub counts: BTreeMap<Triple, BigUint>,
    pub total_matching: BigUint,
    pub total: BigUint,
}

impl ConditionalCensus {
    pub fn from_tally(tally: &JointTally, k: usize) -> Result<Self> {
        let n = tally.n;
        if k < 3 || k > n {
            return Err(Error::InvalidArgument(format!(
                "prefix length k = {k} must satisfy 3 <= k <= n = {n}"
            )));
        }
        let row = tally.row(k);
        let mut counts = BTreeMap::new();
        let mut matching = 0u64;
        for (rank, &c) in row[..tally.width - 1].iter().enumerate() {
            let t = lex_unrank(rank as u64, n)?;
            // Minimality of k: every increasing triple of the prefix ends at k.
            assert!(
                c == 0 || t.c() == k,
                "first triple {t} recorded under prefix length {k}"
            );
            if t.c() == k {
                counts.insert(t, BigUint::from(c));
            }
            matching += c;
        }
        Ok(ConditionalCensus {
            n,
            k,
            counts,
            total_matching: BigUint::from(matching),
            total: big_factorial(n as u64),
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["triple", "count", "total"])?;
        let total = self.total_matching.to_string();
        for (t, c) in &self.counts {
            out.write_record([t.to_string(), c.to_string(), total.clone()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn rows(&self) -> Vec<CountRow> {
        self.counts
            .iter()
            .map(|(t, c)| CountRow {
                event: t.to_string(),
                count: c.to_string(),
                total: self.total_matching.to_string(),
            })
            .collect()
    }
}

pub fn conditional_first_triple(n: usize, k: usize) -> Result<ConditionalCensus> {
    conditional_first_triple_with(n, k, &EnumerationConfig::default())
}

pub fn conditional_first_triple_with(
    n: usize,
    k: usize,
    cfg: &EnumerationConfig,
) -> Result<ConditionalCensus> {
    if k < 3 || k > n {
        return Err(Error::InvalidArgument(format!(
            "prefix length k = {k} must satisfy 3 <= k <= n = {n}"
        )));
    }
    ConditionalCensus::from_tally(&joint_tally(n, cfg)?, k)
}

/// Shape of one run of the census sharing the leading pair `(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentShape {
    pub a: usize,
    pub b: usize,
    pub len: usize,
    /// Counts strictly decrease along the segment.
    pub decreasing: bool,
    /// First count is at least the previous segment's last count (vacuous
    /// for the first segment).
    pub boundary_jump: bool,
}

pub fn segment_shape_report(census: &CensusResult) -> Vec<SegmentShape> {
    let mut segments: Vec<(usize, usize, Vec<&BigUint>)> = Vec::new();
    for (t, c) in &census.counts {
        match segments.last_mut() {
            Some((a, b, seq)) if *a == t.a() && *b == t.b() => seq.push(c),
            _ => segments.push((t.a(), t.b(), vec![c])),
        }
    }
    let mut prev_last: Option<&BigUint> = None;
    segments
        .iter()
        .map(|(a, b, seq)| {
            let shape = SegmentShape {
                a: *a,
                b: *b,
                len: seq.len(),
                decreasing: seq.windows(2).all(|w| w[0] > w[1]),
                boundary_jump: prev_last.is_none_or(|last| seq[0] >= last),
            };
            prev_last = seq.last().copied();
            shape
        })
        .collect()
}

/// Census restricted to triples starting at position 1: `Σ counts`.
pub fn leading_one_count(census: &CensusResult) -> BigUint {
    census
        .counts
        .iter()
        .filter(|(t, _)| t.a() == 1)
        .fold(BigUint::zero(), |acc, (_, c)| acc + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{first_increasing_triple_scan, min_pattern_end_scan};

    fn t(a: usize, b: usize, c: usize) -> Triple {
        Triple::new(a, b, c).unwrap()
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    type Brute = (
        BTreeMap<Option<Triple>, u64>,
        BTreeMap<(usize, Triple), u64>,
        u64,
    );

    /// Independent oracle: recursive enumeration with the O(n^3)
    /// reference scans.
    fn brute_counts(n: usize) -> Brute {
        fn to_triple((a, b, c): (usize, usize, usize)) -> Triple {
            Triple::new(a + 1, b + 1, c + 1).unwrap()
        }
        fn rec(prefix: &mut Vec<u8>, used: &mut [bool], out: &mut Brute) {
            if prefix.len() == used.len() {
                let first = first_increasing_triple_scan(prefix).map(to_triple);
                *out.0.entry(first).or_default() += 1;
                if let Some(c) = min_pattern_end_scan(prefix) {
                    let within = to_triple(first_increasing_triple_scan(&prefix[..=c]).unwrap());
                    *out.1.entry((c + 1, within)).or_default() += 1;
                }
                out.2 += 1;
                return;
            }
            for v in 0..used.len() {
                if !used[v] {
                    used[v] = true;
                    prefix.push(v as u8 + 1);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[v] = false;
                }
            }
        }
        let mut out = (BTreeMap::new(), BTreeMap::new(), 0);
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    #[test]
    fn joint_tally_matches_brute_force() {
        for n in 3..=7 {
            let tally = joint_tally(n, &EnumerationConfig::default()).unwrap();
            let (brute_first, brute_prefix, total) = brute_counts(n);
            assert_eq!(total, (1..=n as u64).product::<u64>());
            for (first, count) in brute_first {
                match first {
                    Some(tr) => assert_eq!(tally.first(&tr), count, "n={n} {tr}"),
                    None => assert_eq!(tally.never(), count),
                }
            }
            for ((k, tr), count) in brute_prefix {
                assert_eq!(tr.c(), k);
                assert_eq!(tally.prefix_first(k, &tr), count, "n={n} k={k} {tr}");
            }
            assert_eq!(tally.first.iter().sum::<u64>(), total);
        }
    }

    #[test]
    fn census_table_one_rows() {
        let c = census(6).unwrap();
        assert_eq!(c.count(&t(1, 2, 3)), big(120));
        assert_eq!(c.count(&t(1, 3, 4)), big(50));
        assert_eq!(c.count(&t(2, 3, 4)), big(48));
        assert_eq!(c.count(&t(3, 4, 6)), big(10));
        assert_eq!(c.never_count, big(132));
        assert_eq!(c.total, big(720));
        assert_eq!(c.counts.len(), 20);
    }

    #[test]
    fn census_small() {
        let c3 = census(3).unwrap();
        assert_eq!(c3.count(&t(1, 2, 3)), big(1));
        assert_eq!(c3.never_count, big(5));
        assert_eq!(c3.total, big(6));
        let c4 = census(4).unwrap();
        assert_eq!(c4.never_count, big(14));
        assert_eq!(c4.total, big(24));
        let sum: BigUint = c4.counts.values().sum::<BigUint>() + &c4.never_count;
        assert_eq!(sum, c4.total);
    }

    #[test]
    fn census_errors() {
        assert!(matches!(census(2), Err(Error::InvalidArgument(_))));
        assert!(matches!(census(20), Err(Error::CapExceeded { n: 20, .. })));
        let forced = EnumerationConfig {
            force: true,
            ..Default::default()
        };
        assert!(matches!(
            census_with(21, &forced),
            Err(Error::CapExceeded { .. })
        ));
        let tight = EnumerationConfig {
            cap: 5,
            ..Default::default()
        };
        assert!(census_with(6, &tight).is_err());
        assert!(census_with(5, &tight).is_ok());
    }

    #[test]
    fn thread_count_does_not_change_tally() {
        let base = joint_tally(8, &EnumerationConfig::with_threads(1)).unwrap();
        for threads in [2, 3, 8] {
            assert_eq!(
                joint_tally(8, &EnumerationConfig::with_threads(threads)).unwrap(),
                base
            );
        }
    }

    #[test]
    fn conditional_examples() {
        let c = conditional_first_triple(3, 3).unwrap();
        assert_eq!(c.counts.get(&t(1, 2, 3)), Some(&big(1)));
        assert_eq!(c.total_matching, big(1));

        let c = conditional_first_triple(6, 5).unwrap();
        let keys: Vec<Triple> = c.counts.keys().copied().collect();
        assert_eq!(
            keys,
            vec![
                t(1, 2, 5),
                t(1, 3, 5),
                t(1, 4, 5),
                t(2, 3, 5),
                t(2, 4, 5),
                t(3, 4, 5)
            ]
        );
        assert_eq!(c.counts.values().sum::<BigUint>(), c.total_matching);

        assert!(conditional_first_triple(6, 2).is_err());
        assert!(conditional_first_triple(6, 7).is_err());
    }

    #[test]
    fn conditional_partitions_non_avoiders() {
        for n in 3..=8 {
            let tally = joint_tally(n, &EnumerationConfig::default()).unwrap();
            let census = CensusResult::from_tally(&tally);
            let matched: BigUint = (3..=n)
                .map(|k| {
                    ConditionalCensus::from_tally(&tally, k)
                        .unwrap()
                        .total_matching
                })
                .sum();
            assert_eq!(matched + &census.never_count, census.total);
        }
    }

    #[test]
    fn segment_report_table_one() {
        let report = segment_shape_report(&census(6).unwrap());
        assert_eq!(report.len(), 10);
        assert!(report.iter().all(|s| s.decreasing && s.boundary_jump));
        assert_eq!((report[0].a, report[0].b, report[0].len), (1, 2, 4));
        for n in [4, 7] {
            let r = segment_shape_report(&census(n).unwrap());
            let expected: usize = (1..n).map(|a| n - a - 1).sum();
            assert_eq!(r.len(), expected);
        }
    }

    #[test]
    fn next_permutation_visits_all() {
        let mut v = vec![1u8, 2, 3, 4];
        let mut seen = 1;
        while next_permutation(&mut v) {
            seen += 1;
        }
        assert_eq!(seen, 24);
        assert_eq!(v, vec![4, 3, 2, 1]);
    }

    #[test]
    fn census_csv_format() {
        let mut buf = Vec::new();
        census(3).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "triple,count,total\n\"1,2,3\",1,6\nnever,5,6\n"
        );
    }
}
