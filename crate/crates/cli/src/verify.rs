use std::ops::RangeInclusive;

use num_traits::{One, Zero};
use serde_json::json;

use firstpat::exact::{
    self, distribution_table_with, median_with, Median, SizeSpec, TruncationBox,
};
use firstpat::montecarlo::{compare_report, RevealMethod, DEFAULT_HARD_CAP, Z_FLAG};
use firstpat::oracle::{census_with, CensusResult, EnumerationConfig};
use firstpat::pattern::triples;
use firstpat::scalar::ratio;
use firstpat::{ExactRational, Triple};

use crate::commands::{run_simulation, SimOpts};
use crate::render::{Report, Table};
use crate::CliError;

/// Reference counts for n = 6 in lexicographic order, then `never`.
const N6_COUNTS: [u64; 20] = [
    120, 60, 36, 24, 50, 28, 18, 26, 16, 16, 48, 22, 12, 24, 12, 14, 24, 10, 14, 14,
];
const N6_NEVER: u64 = 132;

/// Accepts `6`, `3..8` or `3..=8`; both range forms include the upper end.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, CliError> {
    let bad = || CliError::Usage(format!("expected N or LO..HI, got {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if lo < 3 || lo > hi {
        return Err(CliError::Usage(format!(
            "range {s:?} must satisfy 3 <= LO <= HI"
        )));
    }
    Ok(lo..=hi)
}

struct Checks {
    table: Table,
    failures: usize,
}

impl Checks {
    fn push(&mut self, check: &str, n: Option<usize>, ok: Option<bool>, detail: String) {
        let status = match ok {
            Some(true) => "pass",
            Some(false) => {
                self.failures += 1;
                "fail"
            }
            None => "skip",
        };
        let n = n.map_or_else(|| "infinite".to_string(), |n| n.to_string());
        self.table
            .push(vec![json!(check), json!(n), json!(status), json!(detail)]);
    }
}

fn q(num: i64, den: i64) -> ExactRational {
    ExactRational::new(num.into(), den.into())
}

fn first_mismatch<I>(items: I) -> Option<String>
where
    I: IntoIterator<Item = (String, ExactRational, ExactRational)>,
{
    items
        .into_iter()
        .find(|(_, a, b)| a != b)
        .map(|(what, a, b)| format!("{what}: {a} != {b}"))
}

fn closed_form_checks(c: &mut Checks, n: usize) -> Result<(), CliError> {
    let nu = n as u64;

    let mut sum = ExactRational::zero();
    let mut bad = None;
    for r in 3..=nu {
        let p: ExactRational = exact::p_12r(r)?;
        let via_general: ExactRational = exact::p_1sr_finite(nu, 2, r)?;
        if p != via_general && bad.is_none() {
            bad = Some(format!("r={r}: {p} != {via_general}"));
        }
        sum += p;
    }
    let expect = q(1, 2) - q(1, n as i64);
    let ok = bad.is_none() && sum == expect;
    let detail = bad.unwrap_or_else(|| format!("sum over r<=n is {sum}, expected {expect}"));
    c.push("p12r-telescoping", Some(n), Some(ok), detail);

    let mismatch = first_mismatch((4..=nu).map(|r| {
        let a: ExactRational = exact::p_13r_finite(nu, r).unwrap();
        let b: ExactRational = exact::p_1sr_finite(nu, 3, r).unwrap();
        (format!("r={r}"), a, b)
    }));
    c.push(
        "p13r-identity",
        Some(n),
        Some(mismatch.is_none()),
        mismatch.unwrap_or_else(|| "special case agrees with the general formula".into()),
    );

    let mut sum = ExactRational::zero();
    for r in 4..=nu {
        sum += exact::p_13r_finite::<ExactRational>(nu, r)?;
    }
    let ni = n as i64;
    let expect = q(1, 2) * (q(1, 3) - q(1, ni)) + q(1, ni) * (q(1, 2) - q(1, ni - 1));
    c.push(
        "p13r-sum",
        Some(n),
        Some(sum == expect),
        format!("sum is {sum}, expected {expect}"),
    );

    let ge: ExactRational = exact::p_x_ge_234(nu)?;
    let a1: ExactRational = exact::leading_one_mass(nu)?;
    c.push(
        "ge234-vs-a1-mass",
        Some(n),
        Some(&ge + &a1 == ExactRational::one()),
        format!("P(X>=234) = {ge}, P(a=1) = {a1}"),
    );
    Ok(())
}

fn oracle_checks(c: &mut Checks, census: &CensusResult) -> Result<(), CliError> {
    let n = census.n;
    let nu = n as u64;
    let total = &census.total;

    let mismatch = first_mismatch(triples(n).filter(|t| t.a() == 1).map(|t| {
        let f: ExactRational = exact::p_1sr_finite(nu, t.b() as u64, t.c() as u64).unwrap();
        (t.to_string(), f, ratio(&census.count(&t), total))
    }));
    c.push(
        "leading-one-vs-oracle",
        Some(n),
        Some(mismatch.is_none()),
        mismatch.unwrap_or_else(|| format!("{} triples with a=1 agree", a1_count(n))),
    );

    let avoid: ExactRational = exact::avoid_probability(nu)?;
    let seen = ratio(&census.never_count, total);
    c.push(
        "avoid-vs-oracle",
        Some(n),
        Some(avoid == seen),
        format!("formula {avoid}, oracle {seen}"),
    );

    let mismatch = first_mismatch((3..=n).map(|k| {
        let f: ExactRational = exact::prefix_first_k_probability(k as u64).unwrap();
        let count = census.prefix_counts.get(&k).cloned().unwrap_or_default();
        (format!("k={k}"), f, ratio(&count, total))
    }));
    c.push(
        "prefix-law-vs-oracle",
        Some(n),
        Some(mismatch.is_none()),
        mismatch.unwrap_or_else(|| format!("k = 3..{n} agree")),
    );

    let mut tail = census.never_count.clone();
    for (t, count) in &census.counts {
        if t.a() >= 2 {
            tail += count;
        }
    }
    let ge: ExactRational = exact::p_x_ge_234(nu)?;
    let seen = ratio(&tail, total);
    c.push(
        "ge234-vs-oracle",
        Some(n),
        Some(ge == seen),
        format!("formula {ge}, oracle {seen}"),
    );

    if n == 6 {
        let got: Vec<u64> = census
            .counts
            .values()
            .map(|v| v.try_into().unwrap_or(u64::MAX))
            .collect();
        let never: u64 = (&census.never_count).try_into().unwrap_or(u64::MAX);
        let ok = got == N6_COUNTS && never == N6_NEVER;
        c.push(
            "n6-fixture",
            Some(6),
            Some(ok),
            format!("counts {got:?}, never {never}"),
        );
    }
    Ok(())
}

fn a1_count(n: usize) -> usize {
    (n - 1) * (n - 2) / 2
}

fn median_check(
    c: &mut Checks,
    size: SizeSpec,
    expect: Median,
    ecfg: &EnumerationConfig,
) -> Result<(), CliError> {
    let m = median_with(size, ecfg)?;
    c.push(
        &format!(
            "median-{}",
            if size.n().is_some() { "n" } else { "infinite" }
        ),
        size.n(),
        Some(m == expect),
        format!("median {m}, expected {expect}"),
    );
    Ok(())
}

fn mc_check(
    c: &mut Checks,
    size: SizeSpec,
    seed: u64,
    trials: u64,
    threads: Option<usize>,
    ecfg: &EnumerationConfig,
) -> Result<(), CliError> {
    let (name, bx) = match size {
        SizeSpec::Finite(_) => ("mc-zscore", None),
        SizeSpec::Infinite => ("mc-infinite-zscore", Some(TruncationBox::new(5, 10)?)),
    };
    let opts = SimOpts {
        seed,
        trials,
        hard_cap: DEFAULT_HARD_CAP,
        method: RevealMethod::SkipAhead,
        compare: true,
        truncate: bx.unwrap_or_default(),
        threads,
    };
    let run = run_simulation(size, &opts)?;
    let table = distribution_table_with(size, bx, ecfg)?;
    let report = compare_report(&table, &run)?;
    let flagged = report.flagged().count();
    c.push(
        name,
        size.n(),
        Some(flagged == 0),
        format!(
            "seed {seed}, {trials} trials, max |z| {:.3}, {flagged} row(s) above {Z_FLAG}",
            report.max_abs_z
        ),
    );
    Ok(())
}

/// Runs every check over `range`, returning the report and the failure count.
pub fn verify(
    range: RangeInclusive<usize>,
    mc: Option<(u64, u64)>,
    ecfg: &EnumerationConfig,
    threads: Option<usize>,
) -> Result<(Report, usize), CliError> {
    let mut c = Checks {
        table: Table::new(&["check", "n", "status", "detail"]),
        failures: 0,
    };
    for n in range {
        closed_form_checks(&mut c, n)?;
        let within = n <= ecfg.cap || ecfg.force;
        if within {
            let census = census_with(n, ecfg)?;
            oracle_checks(&mut c, &census)?;
            if n == 6 {
                median_check(
                    &mut c,
                    SizeSpec::Finite(6),
                    Median::Triple(t(1, 4, 5)),
                    ecfg,
                )?;
            }
            if let Some((seed, trials)) = mc {
                mc_check(&mut c, SizeSpec::Finite(n), seed, trials, threads, ecfg)?;
            }
        } else {
            for name in [
                "leading-one-vs-oracle",
                "avoid-vs-oracle",
                "prefix-law-vs-oracle",
                "ge234-vs-oracle",
            ] {
                c.push(
                    name,
                    Some(n),
                    None,
                    format!("n above the enumeration cap {}", ecfg.cap),
                );
            }
        }
    }

    for (s_max, r_max) in [(5, 10), (50, 200)] {
        let bx = TruncationBox::new(s_max, r_max)?;
        let table = distribution_table_with(SizeSpec::Infinite, Some(bx), ecfg)?;
        let total = table.total_mass();
        c.push(
            "infinite-total-mass",
            None,
            Some(total == ExactRational::one()),
            format!("box {s_max},{r_max}: entries plus tail sum to {total}"),
        );
    }
    median_check(&mut c, SizeSpec::Infinite, Median::Triple(t(1, 3, 4)), ecfg)?;
    if let Some((seed, trials)) = mc {
        mc_check(
            &mut c,
            SizeSpec::Infinite,
            seed,
            trials.saturating_mul(10),
            threads,
            ecfg,
        )?;
    }

    let failures = c.failures;
    let mut report = Report::new(c.table);
    report.extra.insert("failures".into(), json!(failures));
    Ok((report, failures))
}

fn t(a: usize, b: usize, c: usize) -> Triple {
    Triple::new(a, b, c).expect("valid triple")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..8").unwrap(), 3..=8);
        assert_eq!(parse_range("3..=8").unwrap(), 3..=8);
        assert_eq!(parse_range("6").unwrap(), 6..=6);
        assert!(parse_range("2..5").is_err());
        assert!(parse_range("7..5").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn small_range_passes() {
        let (report, failures) = verify(3..=7, None, &EnumerationConfig::default(), None).unwrap();
        assert_eq!(failures, 0, "{:?}", report.table.rows);
        let names: Vec<String> = report.table.rows.iter().map(|r| r[0].to_string()).collect();
        assert!(names.iter().any(|s| s.contains("n6-fixture")));
        assert!(names.iter().any(|s| s.contains("median-infinite")));
    }

    #[test]
    fn above_cap_is_skipped() {
        let cfg = EnumerationConfig {
            cap: 4,
            ..Default::default()
        };
        let (report, failures) = verify(5..=5, None, &cfg, None).unwrap();
        assert_eq!(failures, 0);
        assert!(report.table.rows.iter().any(|r| r[2] == "skip"));
    }
}
