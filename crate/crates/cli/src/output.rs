//! Tables rendered as CSV (header row) or JSON ({"meta", "rows"}).

use std::io::Write;

use nfc_core::rational::{decimal_string, fraction_string};
use num::BigRational;
use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => match i64::try_from(*v) {
                Ok(small) => Value::from(small),
                Err(_) => Value::String(v.to_string()),
            },
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i128)
            }
        }
    )*};
}
int_cell!(u8, u32, u64, usize, i64, i128);

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        match i128::try_from(v) {
            Ok(v) => Cell::Int(v),
            Err(_) => Cell::Text(v.to_string()),
        }
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Adds `name` and `name_decimal` columns at once.
    pub fn with_rationals(plain: &[&str], rationals: &[&str]) -> Self {
        let mut t = Table::new(plain);
        for r in rationals {
            t.columns.push(r.to_string());
            t.columns.push(format!("{r}_decimal"));
        }
        t
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Exact and decimal renderings of a rational.
pub fn rational(r: &BigRational) -> [Cell; 2] {
    [Cell::Text(fraction_string(r)), Cell::Text(decimal_string(r))]
}

pub fn emit(out: &mut impl Write, format: Format, meta: Value, table: &Table) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns).map_err(CliError::io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(CliError::io)?;
            }
            w.flush().map_err(CliError::io)?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (c, v) in table.columns.iter().zip(row) {
                        m.insert(c.clone(), v.json());
                    }
                    Value::Object(m)
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("meta".into(), meta);
            doc.insert("rows".into(), Value::Array(rows));
            serde_json::to_writer_pretty(&mut *out, &Value::Object(doc)).map_err(CliError::io)?;
            writeln!(out).map_err(CliError::io)?;
        }
    }
    Ok(())
}
