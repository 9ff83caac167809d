use num_bigint::BigUint;
use num_traits::{One, Zero};

use firstpat::exact::{distribution_table, median, Median, SizeSpec, TruncationBox};
use firstpat::montecarlo::{sample_finite, RngSpec};
use firstpat::oracle::census;
use firstpat::pattern::{lex_rank, lex_unrank, triple_count, triples};
use firstpat::scalar::ratio;
use firstpat::{ExactRational, FirstOccurrence, Permutation};

#[test]
fn finite_tables_agree_with_census() {
    for n in 3..=8 {
        let size = SizeSpec::finite(n).unwrap();
        let table = distribution_table(size, None).unwrap();
        let c = census(n).unwrap();
        assert!(table.is_complete());
        assert_eq!(table.total_mass(), ExactRational::one());
        assert_eq!(table.entries.len() as u64, triple_count(n));
        for e in &table.entries {
            assert_eq!(
                e.probability,
                ratio(&c.count(&e.triple), &c.total),
                "n={n} {}",
                e.triple
            );
        }
        assert_eq!(table.never_mass, ratio(&c.never_count, &c.total));
    }
}

#[test]
fn census_total_is_factorial() {
    for n in 3..=8usize {
        let c = census(n).unwrap();
        let f: BigUint = (1..=n as u64).product::<u64>().into();
        let sum: BigUint = c.counts.values().sum::<BigUint>() + &c.never_count;
        assert_eq!(c.total, f);
        assert_eq!(sum, f);
    }
}

#[test]
fn median_is_first_half_crossing() {
    for n in 3..=8 {
        let size = SizeSpec::finite(n).unwrap();
        let table = distribution_table(size, None).unwrap();
        let half = ExactRational::new(1.into(), 2.into());
        let mut acc = ExactRational::zero();
        let expect = table
            .entries
            .iter()
            .find(|e| {
                acc += &e.probability;
                acc >= half
            })
            .map_or(Median::Never, |e| Median::Triple(e.triple));
        assert_eq!(median(size).unwrap(), expect, "n={n}");
    }
}

#[test]
fn infinite_table_inside_box() {
    let bx = TruncationBox::new(4, 7).unwrap();
    let table = distribution_table(SizeSpec::Infinite, Some(bx)).unwrap();
    assert_eq!(table.entries.len(), 5 + 4 + 3);
    assert!(table
        .entries
        .iter()
        .all(|e| e.triple.a() == 1 && bx.contains(&e.triple)));
    assert_eq!(table.total_mass(), ExactRational::one());
}

#[test]
fn ranks_cover_all_triples() {
    let n = 9;
    for (i, t) in triples(n).enumerate() {
        assert_eq!(lex_rank(&t, n).unwrap(), i as u64);
        assert_eq!(lex_unrank(i as u64, n).unwrap(), t);
    }
}

#[test]
fn samples_have_valid_events() {
    let run = sample_finite(7, &RngSpec::new(3), 5000).unwrap();
    let total: u64 = run.estimates.values().map(|e| e.hits).sum();
    assert_eq!(total, 5000);
    for event in run.estimates.keys() {
        if let FirstOccurrence::Found(t) = event {
            assert!(t.fits(7));
        }
    }
    let p = Permutation::new(vec![4, 5, 1, 2, 3, 6]).unwrap();
    assert_eq!(p.first_123_occurrence().to_string(), "1,2,6");
}
