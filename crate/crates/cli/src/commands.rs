use num_bigint::BigUint;
use num_traits::Zero;
use serde_json::{json, Value};

use firstpat::exact::{
    self, decimal, distribution_table_with, leading_one_table, median_with, DistributionTable,
    Provenance, SizeSpec,
};
use firstpat::montecarlo::{
    compare_report, sample_finite_with, sample_infinite_with, RevealMethod, RngSpec, SampleRun,
    SimConfig,
};
use firstpat::oracle::{
    census_with, conditional_first_triple_with, segment_shape_report, EnumerationConfig,
};
use firstpat::scalar::{big_factorial, ratio};
use firstpat::{Error, ExactRational, Triple};

use crate::render::{Report, Table};
use crate::{parse_box, CliError, ExactSelector};

const PROBABILITY_HEADERS: [&str; 5] = [
    "triple",
    "probability_num",
    "probability_den",
    "decimal",
    "provenance",
];

fn label(t: &Triple, size: SizeSpec) -> String {
    match size {
        SizeSpec::Finite(n) if n <= 9 => t.compact().unwrap_or_else(|| t.to_string()),
        _ => t.to_string(),
    }
}

fn probability_row(
    label: String,
    p: &ExactRational,
    prov: Provenance,
    places: usize,
) -> Vec<Value> {
    vec![
        json!(label),
        json!(p.numer().to_string()),
        json!(p.denom().to_string()),
        json!(decimal(p, places)),
        json!(prov.label()),
    ]
}

fn single(
    label: &str,
    p: ExactRational,
    prov: Provenance,
    places: usize,
    size: SizeSpec,
) -> Report {
    let mut table = Table::new(&PROBABILITY_HEADERS);
    table.push(probability_row(label.to_string(), &p, prov, places));
    let mut report = Report::new(table);
    report.extra.insert("size".into(), json!(size.to_string()));
    report
}

/// `p` as `count/n!`, the way Table-1 style listings print it.
fn over_factorial(p: &ExactRational, n: usize) -> String {
    let total = ExactRational::from_integer(big_factorial(n as u64).into());
    let count = p * &total;
    if count.is_integer() {
        format!("{}/{}", count.numer(), total.numer())
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn table_report(table: &DistributionTable, places: usize) -> Report {
    let mut machine = Table::new(&PROBABILITY_HEADERS);
    for row in table.rows(places) {
        machine.push(vec![
            json!(row.triple),
            json!(row.probability_num),
            json!(row.probability_den),
            json!(row.decimal),
            json!(row.provenance),
        ]);
    }

    let mut pretty = Table::new(&[
        "triple",
        "probability",
        "decimal",
        "cumulative",
        "provenance",
    ]);
    let show = |p: &ExactRational| match table.size {
        SizeSpec::Finite(n) if n <= 20 => over_factorial(p, n),
        _ => format!("{}/{}", p.numer(), p.denom()),
    };
    let mut cumulative = ExactRational::zero();
    let mut push = |name: String, p: &ExactRational, prov: Provenance| {
        cumulative += p;
        pretty.push(vec![
            json!(name),
            json!(show(p)),
            json!(decimal(p, places)),
            json!(decimal(&cumulative, places)),
            json!(prov.label()),
        ]);
    };
    for e in &table.entries {
        push(label(&e.triple, table.size), &e.probability, e.provenance);
    }
    if let Some(r) = &table.residual {
        push(r.label.clone(), &r.mass, r.provenance);
    }
    push("never".into(), &table.never_mass, Provenance::Formula);

    let mut report = Report::new(machine);
    report.pretty = Some(pretty);
    report
        .extra
        .insert("size".into(), json!(table.size.to_string()));
    if let Some(bx) = table.truncation {
        report.extra.insert(
            "truncation".into(),
            json!({"s_max": bx.s_max, "r_max": bx.r_max}),
        );
    }
    report
}

pub fn exact(
    size: SizeSpec,
    select: &ExactSelector,
    truncate: &str,
    ecfg: &EnumerationConfig,
    places: usize,
) -> Result<Report, CliError> {
    let zero = ExactRational::zero;
    if select.full || select.leading_one {
        let table = match size {
            SizeSpec::Infinite => distribution_table_with(size, Some(parse_box(truncate)?), ecfg)?,
            SizeSpec::Finite(n) if select.leading_one => leading_one_table(n)?,
            SizeSpec::Finite(_) => distribution_table_with(size, None, ecfg)?,
        };
        return Ok(table_report(&table, places));
    }
    if let Some(raw) = &select.triple {
        let t = Triple::parse_for(raw, size.n())?;
        let (p, prov) = match size {
            SizeSpec::Infinite if t.a() == 1 => (
                exact::p_1sr_infinite(t.b() as u64, t.c() as u64)?,
                Provenance::Formula,
            ),
            // Every infinite-case first triple starts at position 1.
            SizeSpec::Infinite => (zero(), Provenance::Formula),
            SizeSpec::Finite(n) => {
                if !t.fits(n) {
                    return Err(Error::TripleOutOfRange {
                        triple: t.to_string(),
                        n,
                    }
                    .into());
                }
                if t.a() == 1 {
                    (
                        exact::p_1sr_finite(n as u64, t.b() as u64, t.c() as u64)?,
                        Provenance::Formula,
                    )
                } else {
                    let census = census_with(n, ecfg)?;
                    (ratio(&census.count(&t), &census.total), Provenance::Oracle)
                }
            }
        };
        return Ok(single(&t.to_string(), p, prov, places, size));
    }
    if select.ge_234 {
        let p = match size {
            SizeSpec::Finite(n) => exact::p_x_ge_234(n as u64)?,
            SizeSpec::Infinite => zero(),
        };
        return Ok(single("ge-234", p, Provenance::Formula, places, size));
    }
    if select.avoid {
        let p = match size {
            SizeSpec::Finite(n) => exact::avoid_probability(n as u64)?,
            SizeSpec::Infinite => zero(),
        };
        return Ok(single("never", p, Provenance::Formula, places, size));
    }
    if let Some(k) = select.prefix_k {
        if let SizeSpec::Finite(n) = size {
            if k > n {
                return Err(CliError::Usage(format!(
                    "prefix length {k} exceeds n = {n}"
                )));
            }
        }
        let p = exact::prefix_first_k_probability(k as u64)?;
        return Ok(single(
            &format!("prefix-k={k}"),
            p,
            Provenance::Formula,
            places,
            size,
        ));
    }
    if select.median {
        let m = median_with(size, ecfg)?;
        let mut table = Table::new(&["statistic", "value"]);
        table.push(vec![json!("median"), json!(m.to_string())]);
        let mut report = Report::new(table);
        report.extra.insert("size".into(), json!(size.to_string()));
        return Ok(report);
    }
    Err(CliError::Usage("no selector given".into()))
}

#[derive(Debug, Clone, Copy)]
pub enum EnumMode {
    Census,
    Conditional(usize),
    Segments,
    PrefixLaw,
}

fn count_table(rows: impl IntoIterator<Item = (String, BigUint, BigUint)>) -> Table {
    let mut table = Table::new(&["triple", "count", "total"]);
    for (label, count, total) in rows {
        table.push(vec![
            json!(label),
            json!(count.to_string()),
            json!(total.to_string()),
        ]);
    }
    table
}

fn pretty_counts(rows: &[(String, BigUint, BigUint)], places: usize) -> Table {
    let mut table = Table::new(&["triple", "count", "total", "probability", "cumulative"]);
    let mut running = BigUint::zero();
    for (label, count, total) in rows {
        running += count;
        table.push(vec![
            json!(label),
            json!(count.to_string()),
            json!(total.to_string()),
            json!(decimal(&ratio(count, total), places)),
            json!(decimal(&ratio(&running, total), places)),
        ]);
    }
    table
}

pub fn enumerate(n: usize, mode: EnumMode, ecfg: &EnumerationConfig) -> Result<Report, CliError> {
    let size = SizeSpec::finite(n)?;
    let mut report = match mode {
        EnumMode::Census => {
            let census = census_with(n, ecfg)?;
            let rows: Vec<(String, BigUint, BigUint)> = census
                .counts
                .iter()
                .map(|(t, c)| (label(t, size), c.clone(), census.total.clone()))
                .chain(std::iter::once((
                    "never".to_string(),
                    census.never_count.clone(),
                    census.total.clone(),
                )))
                .collect();
            let mut machine = Table::new(&["triple", "count", "total"]);
            for r in census.rows() {
                machine.push(vec![json!(r.event), json!(r.count), json!(r.total)]);
            }
            let mut report = Report::new(machine);
            report.pretty = Some(pretty_counts(&rows, 4));
            report
        }
        EnumMode::Conditional(k) => {
            let cond = conditional_first_triple_with(n, k, ecfg)?;
            let rows: Vec<(String, BigUint, BigUint)> = cond
                .counts
                .iter()
                .map(|(t, c)| (t.to_string(), c.clone(), cond.total_matching.clone()))
                .collect();
            let pretty_rows: Vec<_> = cond
                .counts
                .iter()
                .map(|(t, c)| (label(t, size), c.clone(), cond.total_matching.clone()))
                .collect();
            let mut report = Report::new(count_table(rows));
            report.pretty = Some(pretty_counts(&pretty_rows, 4));
            report.extra.insert("k".into(), json!(k));
            report
                .extra
                .insert("permutations".into(), json!(cond.total.to_string()));
            report
        }
        EnumMode::Segments => {
            let census = census_with(n, ecfg)?;
            let mut table = Table::new(&["a", "b", "len", "decreasing", "boundary_jump"]);
            for s in segment_shape_report(&census) {
                table.push(vec![
                    json!(s.a),
                    json!(s.b),
                    json!(s.len),
                    json!(s.decreasing),
                    json!(s.boundary_jump),
                ]);
            }
            Report::new(table)
        }
        EnumMode::PrefixLaw => {
            let census = census_with(n, ecfg)?;
            let mut table = Table::new(&["k", "count", "total"]);
            for (k, c) in &census.prefix_counts {
                table.push(vec![
                    json!(k.to_string()),
                    json!(c.to_string()),
                    json!(census.total.to_string()),
                ]);
            }
            table.push(vec![
                json!("never"),
                json!(census.never_count.to_string()),
                json!(census.total.to_string()),
            ]);
            Report::new(table)
        }
    };
    report.extra.insert("n".into(), json!(n));
    Ok(report)
}

pub struct SimOpts {
    pub seed: u64,
    pub trials: u64,
    pub hard_cap: u64,
    pub method: RevealMethod,
    pub compare: bool,
    pub truncate: exact::TruncationBox,
    pub threads: Option<usize>,
}

pub fn run_simulation(size: SizeSpec, opts: &SimOpts) -> Result<SampleRun, CliError> {
    if opts.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let rng = RngSpec::new(opts.seed);
    let cfg = SimConfig {
        threads: opts.threads,
        hard_cap: opts.hard_cap,
        method: opts.method,
    };
    Ok(match size {
        SizeSpec::Finite(n) => sample_finite_with(n, &rng, opts.trials, &cfg)?,
        SizeSpec::Infinite => sample_infinite_with(&rng, opts.trials, &cfg)?,
    })
}

pub fn simulate(
    size: SizeSpec,
    opts: &SimOpts,
    ecfg: &EnumerationConfig,
) -> Result<Report, CliError> {
    let run = run_simulation(size, opts)?;
    let mut metadata = serde_json::to_value(run.metadata()).expect("metadata serializes");
    let mut report = if opts.compare {
        let table = match size {
            SizeSpec::Finite(_) => distribution_table_with(size, None, ecfg)?,
            SizeSpec::Infinite => distribution_table_with(size, Some(opts.truncate), ecfg)?,
        };
        let cmp = compare_report(&table, &run)?;
        let mut t = Table::new(&[
            "event", "exact", "hits", "trials", "point", "stderr", "z", "flagged",
        ]);
        for r in &cmp.rows {
            t.push(vec![
                json!(r.event),
                json!(r.exact),
                json!(r.hits),
                json!(r.trials),
                json!(r.point),
                json!(r.stderr),
                r.z.map_or(Value::Null, |z| json!(z)),
                json!(r.flagged),
            ]);
        }
        let mut report = Report::new(t);
        report
            .extra
            .insert("max_abs_z".into(), json!(cmp.max_abs_z));
        report.extra.insert("excluded".into(), json!(cmp.excluded));
        metadata["max_abs_z"] = json!(cmp.max_abs_z);
        report
    } else {
        let mut t = Table::new(&["event", "hits", "trials", "point", "stderr"]);
        for e in run.estimates.values() {
            t.push(vec![
                json!(e.event.to_string()),
                json!(e.hits),
                json!(e.trials),
                json!(e.point),
                json!(e.stderr),
            ]);
        }
        Report::new(t)
    };
    report.extra.insert("size".into(), json!(size.to_string()));
    report.metadata = Some(metadata);
    Ok(report)
}
