use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "values")]
pub enum ColumnData {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Real(v) => v.len(),
            ColumnData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// |value| for complex columns, the value itself for real ones.
    pub fn magnitudes(&self) -> Vec<f64> {
        match self {
            ColumnData::Real(v) => v.clone(),
            ColumnData::Complex(v) => v.iter().map(|c| c.norm()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(C64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Observables sampled on an increasing axis (time, or frequency for
/// spectra), plus free-form run metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub axis: String,
    pub t: Vec<f64>,
    pub columns: Vec<Column>,
    pub metadata: BTreeMap<String, String>,
}

impl Default for TimeSeries {
    fn default() -> Self {
        Self::new("t")
    }
}

impl TimeSeries {
    pub fn new(axis: &str) -> Self {
        TimeSeries { axis: axis.to_owned(), t: Vec::new(), columns: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends one row. The first row fixes the column set and kinds.
    pub fn push(&mut self, t: f64, row: &[(&str, Value)]) -> Result<()> {
        if let Some(&last) = self.t.last() {
            if !(t > last) {
                return Err(Error::Series(format!("time {t} does not follow {last}")));
            }
        }
        if self.t.is_empty() && self.columns.is_empty() {
            for (name, v) in row {
                let data = match v {
                    Value::Real(_) => ColumnData::Real(Vec::new()),
                    Value::Complex(_) => ColumnData::Complex(Vec::new()),
                };
                self.columns.push(Column { name: (*name).to_owned(), data });
            }
        }
        if row.len() != self.columns.len() {
            return Err(Error::Series(format!("row has {} values for {} columns", row.len(), self.columns.len())));
        }
        for ((name, v), col) in row.iter().zip(&mut self.columns) {
            if *name != col.name {
                return Err(Error::Series(format!("column {name} out of order (expected {})", col.name)));
            }
            match (&mut col.data, v) {
                (ColumnData::Real(d), Value::Real(x)) => d.push(*x),
                (ColumnData::Complex(d), Value::Complex(x)) => d.push(*x),
                _ => return Err(Error::Series(format!("column {name} changed kind"))),
            }
        }
        self.t.push(t);
        Ok(())
    }

    pub fn add_column(&mut self, name: &str, data: ColumnData) -> Result<()> {
        if data.len() != self.t.len() {
            return Err(Error::Series(format!("column {name} has {} rows, axis has {}", data.len(), self.t.len())));
        }
        if self.column(name).is_some() {
            return Err(Error::Series(format!("duplicate column {name}")));
        }
        self.columns.push(Column { name: name.to_owned(), data });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.data)
    }

    pub fn real(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(ColumnData::Real(v)) => Ok(v),
            Some(_) => Err(Error::Series(format!("column {name} is complex"))),
            None => Err(Error::Series(format!("missing column {name}"))),
        }
    }

    pub fn complex(&self, name: &str) -> Result<&[C64]> {
        match self.column(name) {
            Some(ColumnData::Complex(v)) => Ok(v),
            Some(_) => Err(Error::Series(format!("column {name} is real"))),
            None => Err(Error::Series(format!("missing column {name}"))),
        }
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Whether consecutive spacings agree to 1e−9 relative.
    pub fn is_uniform(&self) -> bool {
        if self.t.len() < 3 {
            return true;
        }
        let h = self.t[1] - self.t[0];
        self.t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
    }

    /// Rows whose axis value lies in [lo, hi].
    pub fn window(&self, lo: f64, hi: f64) -> TimeSeries {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.t[i] >= lo && self.t[i] <= hi).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                data: match &c.data {
                    ColumnData::Real(v) => ColumnData::Real(keep.iter().map(|&i| v[i]).collect()),
                    ColumnData::Complex(v) => ColumnData::Complex(keep.iter().map(|&i| v[i]).collect()),
                },
            })
            .collect();
        TimeSeries {
            axis: self.axis.clone(),
            t: keep.iter().map(|&i| self.t[i]).collect(),
            columns,
            metadata: self.metadata.clone(),
        }
    }

    /// CSV with `#` metadata lines, a header row with the axis first and
    /// complex columns split into `name_re`, `name_im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.axis.clone()];
        for c in &self.columns {
            match c.data {
                ColumnData::Real(_) => header.push(c.name.clone()),
                ColumnData::Complex(_) => {
                    header.push(format!("{}_re", c.name));
                    header.push(format!("{}_im", c.name));
                }
            }
        }
        w.write_record(&header).map_err(csv_error)?;
        for i in 0..self.len() {
            let mut rec = vec![self.t[i].to_string()];
            for c in &self.columns {
                match &c.data {
                    ColumnData::Real(v) => rec.push(v[i].to_string()),
                    ColumnData::Complex(v) => {
                        rec.push(v[i].re.to_string());
                        rec.push(v[i].im.to_string());
                    }
                }
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the layout written by [`TimeSeries::write_csv`]; any pair of
    /// columns `x_re`, `x_im` becomes the complex column `x`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        std::io::BufReader::new(input).read_to_string(&mut text)?;
        let mut metadata = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line[1..].trim().split_once(": ") {
                metadata.insert(k.to_owned(), v.to_owned());
            }
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
        if header.is_empty() {
            return Err(Error::Series("empty CSV header".into()));
        }
        let mut raw: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for rec in r.records() {
            let rec = rec.map_err(csv_error)?;
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Series(format!("bad number {field:?} in column {}", header[i])))?;
                raw[i].push(v);
            }
        }
        let mut series = TimeSeries::new(&header[0]);
        series.t = raw[0].clone();
        series.metadata = metadata;
        let mut i = 1;
        while i < header.len() {
            let name = &header[i];
            if let Some(base) = name.strip_suffix("_re") {
                if header.get(i + 1).map(String::as_str) == Some(&format!("{base}_im")) {
                    let v = raw[i].iter().zip(&raw[i + 1]).map(|(&re, &im)| C64::new(re, im)).collect();
                    series.columns.push(Column { name: base.to_owned(), data: ColumnData::Complex(v) });
                    i += 2;
                    continue;
                }
            }
            series.columns.push(Column { name: name.clone(), data: ColumnData::Real(raw[i].clone()) });
            i += 1;
        }
        Ok(series)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Series(e.to_string())
}
