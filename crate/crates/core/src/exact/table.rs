use std::io::Write;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{
    avoid_probability, infinite_tail_mass, p_1sr_finite, p_1sr_infinite, p_x_ge_234, SizeSpec,
};
use crate::error::{Error, Result};
use crate::oracle::{census_with, EnumerationConfig};
use crate::pattern::{FirstOccurrence, Triple};
use crate::scalar::ratio;
use crate::ExactRational;

/// Where a table probability came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Formula,
    Oracle,
    AnalyticTail,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Formula => "formula",
            Provenance::Oracle => "oracle",
            Provenance::AnalyticTail => "analytic-tail",
        }
    }
}

/// Box `2 <= s <= s_max`, `s < r <= r_max` of listed infinite-case triples
/// `{1, s, r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncationBox {
    pub s_max: usize,
    pub r_max: usize,
}

impl TruncationBox {
    pub fn new(s_max: usize, r_max: usize) -> Result<Self> {
        if s_max < 2 || r_max <= s_max {
            return Err(Error::InvalidArgument(format!(
                "truncation box needs 2 <= s_max < r_max, got ({s_max}, {r_max})"
            )));
        }
        Ok(TruncationBox { s_max, r_max })
    }

    pub fn contains(&self, t: &Triple) -> bool {
        t.a() == 1 && t.b() <= self.s_max && t.c() <= self.r_max
    }
}

impl Default for TruncationBox {
    fn default() -> Self {
        TruncationBox {
            s_max: 50,
            r_max: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub triple: Triple,
    pub probability: ExactRational,
    pub provenance: Provenance,
}

/// Mass that is accounted for but not itemised: the infinite tail beyond a
/// truncation box, or the `a >= 2` block of a leading-one table.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub mass: ExactRational,
    pub provenance: Provenance,
}

/// The law of the first occurrence: itemised triples in lex order, an
/// optional residual, and the mass of `never`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub size: SizeSpec,
    pub entries: Vec<TableEntry>,
    pub residual: Option<Residual>,
    pub never_mass: ExactRational,
    pub truncation: Option<TruncationBox>,
}

/// Serialized form of one table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub triple: String,
    pub probability_num: String,
    pub probability_den: String,
    pub decimal: String,
    pub provenance: String,
}

impl DistributionTable {
    pub fn total_mass(&self) -> ExactRational {
        let listed: ExactRational = self.entries.iter().map(|e| &e.probability).sum();
        let residual = self
            .residual
            .as_ref()
            .map_or_else(ExactRational::zero, |r| r.mass.clone());
        listed + residual + &self.never_mass
    }

    pub fn probability(&self, event: &FirstOccurrence) -> Option<&ExactRational> {
        match event {
            FirstOccurrence::Never => Some(&self.never_mass),
            FirstOccurrence::Found(t) => self
                .entries
                .binary_search_by(|e| e.triple.cmp(t))
                .ok()
                .map(|i| &self.entries[i].probability),
        }
    }

    /// True when every triple of the support is itemised.
    pub fn is_complete(&self) -> bool {
        self.residual.is_none()
    }

    pub fn rows(&self, places: usize) -> Vec<TableRow> {
        let row = |label: String, p: &ExactRational, prov: Provenance| TableRow {
            triple: label,
            probability_num: p.numer().to_string(),
            probability_den: p.denom().to_string(),
            decimal: decimal(p, places),
            provenance: prov.label().to_string(),
        };
        let mut rows: Vec<TableRow> = self
            .entries
            .iter()
            .map(|e| row(e.triple.to_string(), &e.probability, e.provenance))
            .collect();
        if let Some(r) = &self.residual {
            rows.push(row(r.label.clone(), &r.mass, r.provenance));
        }
        rows.push(row("never".into(), &self.never_mass, Provenance::Formula));
        rows
    }

    /// Writes `triple,probability_num,probability_den,decimal,provenance`
    /// rows ending with `never`.
    pub fn write_csv<W: Write>(&self, w: W, places: usize) -> Result<()> {
        self.write_delimited(w, places, b',')
    }

    pub fn write_delimited<W: Write>(&self, w: W, places: usize, delimiter: u8) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(w);
        for row in self.rows(places) {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self, places: usize) -> serde_json::Value {
        serde_json::json!({
            "size": self.size.to_string(),
            "truncation": self.truncation,
            "rows": self.rows(places),
        })
    }
}

/// Rounds `p` to `places` decimals, ties to even.
pub fn decimal(p: &ExactRational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = p.abs() * ExactRational::from_integer(scale);
    let (mut q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2u32;
    match twice.cmp(scaled.denom()) {
        std::cmp::Ordering::Greater => q += 1u32,
        std::cmp::Ordering::Equal if q.is_odd() => q += 1u32,
        _ => {}
    }
    let digits = q.to_string();
    let sign = if p.is_negative() && !q.is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int, frac) = padded.split_at(padded.len() - places);
    format!("{sign}{int}.{frac}")
}

pub fn distribution_table(
    size: SizeSpec,
    truncation: Option<TruncationBox>,
) -> Result<DistributionTable> {
    distribution_table_with(size, truncation, &EnumerationConfig::default())
}

/// Full law of `X`.
///
/// Finite `n`: `a = 1` entries from the closed form, `a >= 2` entries from the
/// enumeration oracle (so `n` must be within its cap), `never` from the
/// avoidance probability. Infinite: the box entries plus the exact tail.
pub fn distribution_table_with(
    size: SizeSpec,
    truncation: Option<TruncationBox>,
    cfg: &EnumerationConfig,
) -> Result<DistributionTable> {
    match size {
        SizeSpec::Finite(n) => {
            if truncation.is_some() {
                return Err(Error::InvalidArgument(
                    "truncation only applies to infinite tables".into(),
                ));
            }
            SizeSpec::finite(n)?;
            let census = census_with(n, cfg)?;
            let mut entries = Vec::with_capacity(census.counts.len());
            for (t, count) in &census.counts {
                let entry = if t.a() == 1 {
                    TableEntry {
                        triple: *t,
                        probability: p_1sr_finite(n as u64, t.b() as u64, t.c() as u64)?,
                        provenance: Provenance::Formula,
                    }
                } else {
                    TableEntry {
                        triple: *t,
                        probability: ratio(count, &census.total),
                        provenance: Provenance::Oracle,
                    }
                };
                entries.push(entry);
            }
            Ok(DistributionTable {
                size,
                entries,
                residual: None,
                never_mass: avoid_probability(n as u64)?,
                truncation: None,
            })
        }
        SizeSpec::Infinite => {
            let bx = truncation.ok_or_else(|| {
                Error::InvalidArgument("infinite table needs a truncation box".into())
            })?;
            let bx = TruncationBox::new(bx.s_max, bx.r_max)?;
            let mut entries = Vec::new();
            for s in 2..=bx.s_max {
                for r in s + 1..=bx.r_max {
                    entries.push(TableEntry {
                        triple: Triple::new(1, s, r)?,
                        probability: p_1sr_infinite(s as u64, r as u64)?,
                        provenance: Provenance::Formula,
                    });
                }
            }
            let tail = infinite_tail_mass(bx.s_max as u64, bx.r_max as u64)?;
            Ok(DistributionTable {
                size,
                entries,
                residual: Some(Residual {
                    label: "tail".into(),
                    mass: tail,
                    provenance: Provenance::AnalyticTail,
                }),
                never_mass: ExactRational::zero(),
                truncation: Some(bx),
            })
        }
    }
}

/// Finite-`n` table of the `a = 1` triples only, with the `a >= 2` block as a
/// residual; needs no enumeration, so any `n >= 3` works.
pub fn leading_one_table(n: usize) -> Result<DistributionTable> {
    SizeSpec::finite(n)?;
    let mut entries = Vec::new();
    for s in 2..n {
        for r in s + 1..=n {
            entries.push(TableEntry {
                triple: Triple::new(1, s, r)?,
                probability: p_1sr_finite(n as u64, s as u64, r as u64)?,
                provenance: Provenance::Formula,
            });
        }
    }
    let never: ExactRational = avoid_probability(n as u64)?;
    let rest = p_x_ge_234::<ExactRational>(n as u64)? - &never;
    Ok(DistributionTable {
        size: SizeSpec::Finite(n),
        entries,
        residual: Some(Residual {
            label: "a>=2".into(),
            mass: rest,
            provenance: Provenance::Formula,
        }),
        never_mass: never,
        truncation: None,
    })
}

/// Median of `X`, with `never` ordered above every triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Median {
    Triple(Triple),
    /// `never` carries more than half the mass, so no triple qualifies.
    Never,
}

impl std::fmt::Display for Median {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Median::Triple(t) => t.fmt(f),
            Median::Never => f.write_str("never"),
        }
    }
}

pub fn median(size: SizeSpec) -> Result<Median> {
    median_with(size, &EnumerationConfig::default())
}

/// Lex-least `m` with `P(X <= m) >= 1/2` and `P(X >= m) >= 1/2`.
pub fn median_with(size: SizeSpec, cfg: &EnumerationConfig) -> Result<Median> {
    let half = ExactRational::new(BigInt::one(), BigInt::from(2));
    match size {
        SizeSpec::Finite(_) => {
            let table = distribution_table_with(size, None, cfg)?;
            let mut below = ExactRational::zero();
            for e in &table.entries {
                let at_or_above = ExactRational::one() - &below;
                below += &e.probability;
                if below >= half && at_or_above >= half {
                    return Ok(Median::Triple(e.triple));
                }
            }
            Ok(Median::Never)
        }
        SizeSpec::Infinite => infinite_median(&half),
    }
}

/// Walks rows `s = 2, 3, ...` of the infinite law. Before row `s` the mass is
/// `1 - 1/(s-1)`; within the row `P(X <= {1,s,r})` grows like
/// `(1/(s-1))(1/s - 1/r)`, so the least qualifying `r` solves a linear
/// inequality in `1/r`.
fn infinite_median(half: &ExactRational) -> Result<Median> {
    let recip = |k: usize| ExactRational::new(BigInt::one(), BigInt::from(k));
    for s in 2usize.. {
        let before = ExactRational::one() - recip(s - 1);
        if &(ExactRational::one() - &before) < half {
            break;
        }
        // need before + (1/s - 1/r)/(s-1) >= 1/2, i.e. 1/r <= slack
        let slack = recip(s) - (half - &before) * ExactRational::from_integer(BigInt::from(s - 1));
        if slack.numer().sign() != Sign::Plus {
            continue;
        }
        let r_min = (slack.recip().ceil().to_integer()).max(BigInt::from(s + 1));
        let r: usize = r_min
            .try_into()
            .map_err(|_| Error::InvalidArgument("median position overflow".into()))?;
        // P(X >= {1,s,r}) = 1 - before - (1/s - 1/(r-1))/(s-1)
        let above = ExactRational::one()
            - &before
            - (recip(s) - recip(r - 1)) / ExactRational::from_integer(BigInt::from(s - 1));
        if &above >= half {
            return Ok(Median::Triple(Triple::new(1, s, r)?));
        }
        break;
    }
    Err(Error::InvalidArgument("infinite law has no median".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> ExactRational {
        ExactRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(decimal(&q(120, 720), 4), "0.1667");
        assert_eq!(decimal(&q(1, 4), 4), "0.2500");
        assert_eq!(decimal(&q(1, 8), 2), "0.12");
        assert_eq!(decimal(&q(3, 8), 2), "0.38");
        assert_eq!(decimal(&q(5, 8), 2), "0.62");
        assert_eq!(decimal(&q(1, 1), 4), "1.0000");
        assert_eq!(decimal(&q(0, 1), 3), "0.000");
        assert_eq!(decimal(&q(-1, 8), 2), "-0.12");
        assert_eq!(decimal(&q(2, 3), 0), "1");
        assert_eq!(decimal(&q(1, 2000), 4), "0.0005");
    }

    #[test]
    fn finite_six_table() {
        let table = distribution_table(SizeSpec::Finite(6), None).unwrap();
        let counts: Vec<ExactRational> = table
            .entries
            .iter()
            .map(|e| &e.probability * q(720, 1))
            .collect();
        let expected = [
            120, 60, 36, 24, 50, 28, 18, 26, 16, 16, 48, 22, 12, 24, 12, 14, 24, 10, 14, 14,
        ];
        assert_eq!(counts, expected.map(|c| q(c, 1)).to_vec());
        assert_eq!(table.never_mass, q(132, 720));
        assert!(table.total_mass().is_one());
        assert!(table.entries[..10]
            .iter()
            .all(|e| e.provenance == Provenance::Formula));
        assert!(table.entries[10..]
            .iter()
            .all(|e| e.provenance == Provenance::Oracle));
    }

    #[test]
    fn finite_four_table_via_oracle() {
        let table = distribution_table(SizeSpec::Finite(4), None).unwrap();
        assert_eq!(table.entries.len(), 4);
        assert!(table.total_mass().is_one());
        assert_eq!(table.never_mass, q(14, 24));
    }

    #[test]
    fn table_errors() {
        assert!(distribution_table(SizeSpec::Infinite, None).is_err());
        assert!(distribution_table(SizeSpec::Finite(12), None).is_err());
        assert!(distribution_table(SizeSpec::Finite(6), Some(TruncationBox::default())).is_err());
        assert!(distribution_table(SizeSpec::Finite(2), None).is_err());
        assert!(TruncationBox::new(4, 4).is_err());
    }

    #[test]
    fn infinite_tables_are_lossless() {
        for bx in [
            TruncationBox::new(2, 3).unwrap(),
            TruncationBox::new(5, 10).unwrap(),
            TruncationBox::default(),
        ] {
            let table = distribution_table(SizeSpec::Infinite, Some(bx)).unwrap();
            assert!(table.total_mass().is_one());
            assert!(table.never_mass.is_zero());
        }
        let s2 = distribution_table(SizeSpec::Infinite, Some(TruncationBox::new(2, 3).unwrap()))
            .unwrap();
        assert_eq!(s2.entries.len(), 1);
        assert_eq!(s2.residual.unwrap().mass, q(5, 6));
    }

    #[test]
    fn leading_one_table_balances() {
        for n in [3, 6, 12, 40] {
            let t = leading_one_table(n).unwrap();
            assert!(t.total_mass().is_one(), "n = {n}");
        }
        let t6 = leading_one_table(6).unwrap();
        assert_eq!(t6.residual.unwrap().mass, q(326 - 132, 720));
    }

    #[test]
    fn medians() {
        assert_eq!(
            median(SizeSpec::Infinite).unwrap(),
            Median::Triple(Triple::new(1, 3, 4).unwrap())
        );
        assert_eq!(
            median(SizeSpec::Finite(6)).unwrap(),
            Median::Triple(Triple::new(1, 4, 5).unwrap())
        );
        assert_eq!(median(SizeSpec::Finite(3)).unwrap(), Median::Never);
        assert!(median(SizeSpec::Finite(12)).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        distribution_table(SizeSpec::Finite(3), None)
            .unwrap()
            .write_csv(&mut buf, 4)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "triple,probability_num,probability_den,decimal,provenance\n\
             \"1,2,3\",1,6,0.1667,formula\n\
             never,5,6,0.8333,formula\n"
        );
    }
}
