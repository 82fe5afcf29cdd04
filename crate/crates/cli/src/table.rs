use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Twelve significant digits, `%g` style.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exp) {
        trim(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        let s = format!("{:.11e}", x);
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{}", trim(mantissa.to_string()), e)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => g12(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn gnuplot(&self) -> String {
        match self {
            Cell::Bool(b) => u8::from(*b).to_string(),
            Cell::Empty => "NaN".into(),
            Cell::Text(s) => format!("\"{s}\""),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Rows with fixed columns plus free-form notes, emitted after the rows.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Notes become trailing `#` rows.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        Ok(())
    }

    /// Whitespace-separated columns, `#` header, booleans as 0/1, missing as NaN.
    pub fn write_gnuplot(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {}", self.columns.join(" "))?;
        for row in &self.rows {
            writeln!(out, "{}", row.iter().map(Cell::gnuplot).collect::<Vec<_>>().join(" "))?;
        }
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows, "notes": self.notes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(0.32), "0.32");
        assert_eq!(g12(2.0), "2");
        assert_eq!(g12(-1234.5), "-1234.5");
        assert_eq!(g12(1e-7 / 3.0), "3.33333333333e-8");
        assert_eq!(g12(6.02e23), "6.02e23");
        assert_eq!(g12(0.0), "0");
    }

    #[test]
    fn csv_with_notes() {
        let mut t = Table::new(vec!["x", "ok", "note"]);
        t.push(vec![0.5.into(), true.into(), Cell::Empty]);
        t.notes.push("truncated".into());
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,ok,note\n0.5,true,\n# truncated\n");
        let mut buf = Vec::new();
        t.write_gnuplot(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# x ok note\n0.5 1 NaN\n# truncated\n");
        assert_eq!(t.to_json()["rows"][0]["note"], Value::Null);
    }
}
