use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::TableFormat;
use crate::error::CliResult;

/// Report header shared by every JSON document.
pub fn envelope(command: &str, config: &impl Serialize) -> CliResult<Map<String, Value>> {
    let mut m = Map::new();
    m.insert("version".into(), json!(isoflow::VERSION));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), serde_json::to_value(config)?);
    Ok(m)
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_json(path: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// A table of rows. Numbers are written with 17 significant digits; a cell
/// may also be text (for flags).
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(&'static str),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Text(s) => (*s).to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Writes `table` in `format`. CSV goes with a `<out>.meta.json` sidecar
/// holding `meta` (or, on standard output, `meta` goes to standard error);
/// JSON embeds `meta` in the same document.
pub fn write_table(
    out: Option<&Path>,
    format: TableFormat,
    table: &Table,
    mut meta: Map<String, Value>,
) -> CliResult<()> {
    match format {
        TableFormat::Csv => {
            {
                let mut w = csv::Writer::from_writer(sink(out)?);
                w.write_record(&table.columns)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            meta.insert("columns".into(), json!(table.columns));
            let meta = Value::Object(meta);
            match out {
                Some(p) => write_json(Some(&sidecar_path(p)), &meta)?,
                None => eprintln!("{}", serde_json::to_string(&meta)?),
            }
        }
        TableFormat::Json => {
            meta.insert("columns".into(), json!(table.columns));
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect();
            meta.insert("rows".into(), Value::Array(rows));
            write_json(out, &Value::Object(meta))?;
        }
    }
    Ok(())
}
