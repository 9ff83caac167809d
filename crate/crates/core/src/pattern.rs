//! Permutations, 3-subsets of positions in lexicographic order, and the
//! first-occurrence scan for the increasing pattern 123.
//!
//! Positions and values are 1-indexed in every public interface. The slice
//! scanners at the bottom work on 0-indexed slices of any partially ordered
//! value type, since only relative order matters.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A bijection on `{1, ..., n}`; entry `i` (1-indexed) is `π(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    values: Vec<u32>,
}

impl Permutation {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        for &v in &values {
            let idx = v as usize;
            if idx == 0 || idx > n {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[idx - 1], true) {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n as u32).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `π(pos)` for a 1-indexed position.
    pub fn get(&self, pos: usize) -> u32 {
        self.values[pos - 1]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Lex-least increasing triple of positions, or `Never` for a
    /// 123-avoiding permutation.
    pub fn first_123_occurrence(&self) -> FirstOccurrence {
        first_123_occurrence(self)
    }

    pub fn first_prefix_k(&self) -> Option<usize> {
        first_prefix_k(self)
    }
}

/// A 3-subset `{a < b < c}` of positions.
///
/// The derived ordering compares `(a, b, c)` left to right, which is exactly
/// the lexicographic order on sorted 3-subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    a: usize,
    b: usize,
    c: usize,
}

impl Triple {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == 0 || !(a < b && b < c) {
            return Err(Error::InvalidTriple(format!(
                "need 1 <= a < b < c, got {a},{b},{c}"
            )));
        }
        Ok(Triple { a, b, c })
    }

    pub(crate) const fn new_unchecked(a: usize, b: usize, c: usize) -> Self {
        Triple { a, b, c }
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn fits(&self, n: usize) -> bool {
        self.c <= n
    }

    /// The concatenated label `abc`, only defined when every position is a
    /// single digit.
    pub fn compact(&self) -> Option<String> {
        (self.c <= 9).then(|| format!("{}{}{}", self.a, self.b, self.c))
    }

    /// Parses `"a,b,c"`, or the compact `"abc"` form when `n` is known to be
    /// at most 9.
    pub fn parse_for(s: &str, n: Option<usize>) -> Result<Self> {
        let s = s.trim();
        if s.contains(',') {
            return s.parse();
        }
        match n {
            Some(n) if n <= 9 => {}
            _ => {
                return Err(Error::InvalidTriple(format!(
                    "compact form {s:?} is only accepted for n <= 9; use a,b,c"
                )))
            }
        }
        let digits: Vec<usize> = s
            .chars()
            .map(|ch| ch.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidTriple(format!("cannot parse {s:?}")))?;
        match digits[..] {
            [a, b, c] => Triple::new(a, b, c),
            _ => Err(Error::InvalidTriple(format!(
                "compact form needs exactly three digits, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, self.c)
    }
}

impl FromStr for Triple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidTriple(format!("expected a,b,c, got {s:?}")));
        }
        let mut pos = [0usize; 3];
        for (slot, part) in pos.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| Error::InvalidTriple(format!("bad position {part:?} in {s:?}")))?;
        }
        Triple::new(pos[0], pos[1], pos[2])
    }
}

impl Serialize for Triple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// The value of the first-occurrence variable: a triple, or `Never` when the
/// permutation avoids 123. `Never` sorts above every triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FirstOccurrence {
    Found(Triple),
    Never,
}

impl FirstOccurrence {
    pub fn triple(&self) -> Option<Triple> {
        match self {
            FirstOccurrence::Found(t) => Some(*t),
            FirstOccurrence::Never => None,
        }
    }

    pub fn is_never(&self) -> bool {
        matches!(self, FirstOccurrence::Never)
    }
}

impl fmt::Display for FirstOccurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstOccurrence::Found(t) => t.fmt(f),
            FirstOccurrence::Never => f.write_str("never"),
        }
    }
}

impl FromStr for FirstOccurrence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("never") {
            Ok(FirstOccurrence::Never)
        } else {
            s.parse().map(FirstOccurrence::Found)
        }
    }
}

impl Serialize for FirstOccurrence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub fn lex_compare(t1: &Triple, t2: &Triple) -> Ordering {
    t1.cmp(t2)
}

/// `C(n, 3)` in `u64`.
pub fn triple_count(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

fn pairs(m: usize) -> u64 {
    let m = m as u64;
    m * m.saturating_sub(1) / 2
}

/// Position of `t` in the lexicographic listing of all 3-subsets of `[n]`.
pub fn lex_rank(t: &Triple, n: usize) -> Result<u64> {
    if !t.fits(n) {
        return Err(Error::TripleOutOfRange {
            triple: t.to_string(),
            n,
        });
    }
    // Triples with a smaller first element, then a smaller second element.
    let before_a: u64 = (1..t.a).map(|i| pairs(n - i)).sum();
    let before_b: u64 = (t.a + 1..t.b).map(|j| (n - j) as u64).sum();
    Ok(before_a + before_b + (t.c - t.b - 1) as u64)
}

pub fn lex_unrank(rank: u64, n: usize) -> Result<Triple> {
    let count = triple_count(n);
    if rank >= count {
        return Err(Error::RankOutOfRange { rank, n, count });
    }
    let mut r = rank;
    let mut a = 1;
    while r >= pairs(n - a) {
        r -= pairs(n - a);
        a += 1;
    }
    let mut b = a + 1;
    while r >= (n - b) as u64 {
        r -= (n - b) as u64;
        b += 1;
    }
    Ok(Triple::new_unchecked(a, b, b + 1 + r as usize))
}

/// Every 3-subset of `[n]`, in lexicographic order.
pub fn triples(n: usize) -> impl Iterator<Item = Triple> {
    (1..=n).flat_map(move |a| {
        (a + 1..=n).flat_map(move |b| (b + 1..=n).map(move |c| Triple::new_unchecked(a, b, c)))
    })
}

pub fn first_123_occurrence(p: &Permutation) -> FirstOccurrence {
    match first_increasing_triple(p.values()) {
        Some((a, b, c)) => FirstOccurrence::Found(Triple::new_unchecked(a + 1, b + 1, c + 1)),
        None => FirstOccurrence::Never,
    }
}

pub fn first_prefix_k(p: &Permutation) -> Option<usize> {
    min_pattern_end(p.values()).map(|c| c + 1)
}

/// Reference semantics: walk every triple in lex order and return the first
/// increasing one. `O(n^3)`; 0-indexed.
pub fn first_increasing_triple_scan<T: PartialOrd>(v: &[T]) -> Option<(usize, usize, usize)> {
    let n = v.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if v[a] < v[b] && v[b] < v[c] {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

/// Lex-least increasing triple in `O(n^2)`; 0-indexed.
///
/// For each `a` the least usable `b` is the first later position that is
/// larger than `v[a]` and itself has a larger value somewhere after it; `c`
/// is then the first position after `b` exceeding `v[b]`.
pub fn first_increasing_triple<T: PartialOrd>(v: &[T]) -> Option<(usize, usize, usize)> {
    let mut scratch = Vec::with_capacity(v.len());
    first_increasing_triple_with(v, &mut scratch)
}

/// As [`first_increasing_triple`], reusing `extendable` as scratch space.
pub fn first_increasing_triple_with<T: PartialOrd>(
    v: &[T],
    extendable: &mut Vec<bool>,
) -> Option<(usize, usize, usize)> {
    let n = v.len();
    if n < 3 {
        return None;
    }
    // extendable[j]: some position after j carries a larger value.
    extendable.clear();
    extendable.resize(n, false);
    let mut max_after = n - 1;
    for j in (0..n - 1).rev() {
        extendable[j] = v[max_after] > v[j];
        if v[j] > v[max_after] {
            max_after = j;
        }
    }
    for a in 0..n - 2 {
        let b = (a + 1..n - 1).find(|&b| extendable[b] && v[b] > v[a]);
        if let Some(b) = b {
            let c = (b + 1..n)
                .find(|&c| v[c] > v[b])
                .expect("extendable position has a larger successor");
            return Some((a, b, c));
        }
    }
    None
}

/// Smallest third position over all increasing triples, i.e. the length
/// (minus one) of the shortest prefix containing the pattern. `O(n)`;
/// 0-indexed.
pub fn min_pattern_end<T: PartialOrd + Copy>(v: &[T]) -> Option<usize> {
    let mut iter = v.iter().copied().enumerate();
    let (_, mut low) = iter.next()?;
    // Smallest value seen so far that has a smaller value before it.
    let mut mid: Option<T> = None;
    for (j, x) in iter {
        if mid.is_some_and(|m| x > m) {
            return Some(j);
        }
        if x > low {
            if mid.is_none_or(|m| x < m) {
                mid = Some(x);
            }
        } else {
            low = x;
        }
    }
    None
}

/// Reference for [`min_pattern_end`]: minimum `c` over the full triple scan.
pub fn min_pattern_end_scan<T: PartialOrd>(v: &[T]) -> Option<usize> {
    let n = v.len();
    (0..n).find(|&c| (0..c).any(|b| v[b] < v[c] && (0..b).any(|a| v[a] < v[b])))
}
