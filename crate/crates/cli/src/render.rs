use std::io::Write;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Tsv,
    Pretty,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn json_rows(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .headers
                    .iter()
                    .cloned()
                    .zip(row.iter().cloned())
                    .collect();
                Value::Object(obj)
            })
            .collect()
    }
}

/// What a subcommand produces: a machine table, an optional human variant
/// for `pretty`, top-level JSON fields, and run metadata.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub table: Table,
    pub pretty: Option<Table>,
    pub extra: Map<String, Value>,
    pub metadata: Option<Value>,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report {
            table,
            ..Default::default()
        }
    }
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn write_delimited<W: Write>(table: &Table, out: &mut W, delimiter: u8) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(out);
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell))?;
    }
    w.flush()
}

fn write_pretty<W: Write>(table: &Table, out: &mut W) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| r.iter().map(cell).collect())
        .collect();
    let mut widths: Vec<usize> = table.headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(&table.headers))?;
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    writeln!(out, "{}", line(&rule))?;
    for row in &rows {
        writeln!(out, "{}", line(row))?;
    }
    Ok(())
}

/// Writes the report; metadata goes into the JSON document, or to `meta_out`
/// as one JSON line for the other formats.
pub fn render<W: Write, M: Write>(
    report: &Report,
    format: Format,
    out: &mut W,
    meta_out: &mut M,
    with_metadata: bool,
) -> std::io::Result<()> {
    let metadata = report.metadata.as_ref().filter(|_| with_metadata);
    match format {
        Format::Csv => write_delimited(&report.table, out, b',')?,
        Format::Tsv => write_delimited(&report.table, out, b'\t')?,
        Format::Pretty => write_pretty(report.pretty.as_ref().unwrap_or(&report.table), out)?,
        Format::Json => {
            let mut doc = report.extra.clone();
            doc.insert("rows".into(), Value::Array(report.table.json_rows()));
            if let Some(m) = metadata {
                doc.insert("metadata".into(), m.clone());
            }
            serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
            writeln!(out)?;
            return Ok(());
        }
    }
    if let Some(m) = metadata {
        writeln!(meta_out, "{m}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        let mut t = Table::new(&["triple", "count"]);
        t.push(vec![json!("1,2,3"), json!(1)]);
        t.push(vec![json!("never"), json!(5)]);
        Report::new(t)
    }

    fn run(format: Format, report: &Report) -> (String, String) {
        let (mut out, mut meta) = (Vec::new(), Vec::new());
        render(report, format, &mut out, &mut meta, true).unwrap();
        (
            String::from_utf8(out).unwrap(),
            String::from_utf8(meta).unwrap(),
        )
    }

    #[test]
    fn csv_quotes_triples() {
        let (out, meta) = run(Format::Csv, &sample());
        assert_eq!(out, "triple,count\n\"1,2,3\",1\nnever,5\n");
        assert!(meta.is_empty());
    }

    #[test]
    fn tsv_and_pretty() {
        let (out, _) = run(Format::Tsv, &sample());
        assert_eq!(out, "triple\tcount\n1,2,3\t1\nnever\t5\n");
        let (out, _) = run(Format::Pretty, &sample());
        assert_eq!(out.lines().count(), 4);
        assert!(out.lines().nth(2).unwrap().ends_with("1,2,3      1"));
    }

    #[test]
    fn json_embeds_metadata() {
        let mut r = sample();
        r.metadata = Some(json!({"seed": 1}));
        let (out, meta) = run(Format::Json, &r);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["rows"][0]["triple"], "1,2,3");
        assert_eq!(v["metadata"]["seed"], 1);
        assert!(meta.is_empty());
        let (_, meta) = run(Format::Csv, &r);
        assert_eq!(meta.trim(), "{\"seed\":1}");
    }
}
