//! Column-by-column comparison of two runs.

use std::path::{Path, PathBuf};

use ccsb_core::observables::{chi_error, max_abs_error, TimeSeries, Value};

use crate::run::OBSERVABLES_FILE;
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    /// ∫ | |a| − |b| | dt.
    Chi,
    /// max | |a| − |b| |.
    MaxAbs,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Chi => "chi",
            Metric::MaxAbs => "max-abs",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub metric: Metric,
    /// (column, value) for every column present in both runs.
    pub values: Vec<(String, f64)>,
}

impl Comparison {
    pub fn get(&self, column: &str) -> Option<f64> {
        self.values.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }

    pub fn to_series(&self) -> CliResult<TimeSeries> {
        let mut s = TimeSeries::new("index");
        s.metadata.insert("metric".into(), self.metric.name().into());
        s.metadata.insert("columns".into(), self.values.iter().map(|(c, _)| c.as_str()).collect::<Vec<_>>().join(" "));
        for (i, (_, v)) in self.values.iter().enumerate() {
            s.push(i as f64, &[("value", Value::Real(*v))])?;
        }
        Ok(s)
    }
}

/// A run directory resolves to its observables file.
pub fn observables_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(OBSERVABLES_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn load(path: &Path) -> CliResult<TimeSeries> {
    let file = observables_path(path);
    if !file.exists() {
        return Err(CliError::Compare(format!("{} does not exist", file.display())));
    }
    Ok(TimeSeries::read_csv_file(&file)?)
}

/// Compares every column shared by `a` and `b`, or only `columns` if given.
pub fn compare(a: &TimeSeries, b: &TimeSeries, metric: Metric, columns: Option<&[String]>) -> CliResult<Comparison> {
    let names: Vec<String> = match columns {
        Some(cols) => {
            for c in cols {
                if a.column(c).is_none() || b.column(c).is_none() {
                    return Err(CliError::Compare(format!("column {c:?} is missing from one of the runs")));
                }
            }
            cols.to_vec()
        }
        None => a.column_names().into_iter().filter(|c| b.column(c).is_some()).map(str::to_owned).collect(),
    };
    if names.is_empty() {
        return Err(CliError::Compare("the runs share no observable columns".into()));
    }
    let mut values = Vec::with_capacity(names.len());
    for name in names {
        let ya = a.column(&name).expect("checked").magnitudes();
        let yb = b.column(&name).expect("checked").magnitudes();
        let v = match metric {
            Metric::Chi => chi_error(&a.t, &ya, &b.t, &yb),
            Metric::MaxAbs => max_abs_error(&a.t, &ya, &b.t, &yb),
        }
        .map_err(|e| CliError::Compare(format!("{name}: {e}")))?;
        values.push((name, v));
    }
    Ok(Comparison { metric, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn series(offset: f64, t0: f64) -> TimeSeries {
        let mut s = TimeSeries::new("t");
        for i in 0..11 {
            let t = t0 + 0.1 * i as f64;
            s.push(t, &[("norm", Value::Real(1.0 + offset)), ("ccf", Value::Complex(C64::new(0.0, t)))]).unwrap();
        }
        s
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = series(0.0, 0.0);
        for metric in [Metric::Chi, Metric::MaxAbs] {
            let c = compare(&s, &s, metric, None).unwrap();
            assert_eq!(c.values.len(), 2);
            assert!(c.values.iter().all(|(_, v)| *v == 0.0));
        }
    }

    #[test]
    fn constant_offset() {
        let c = compare(&series(0.0, 0.0), &series(0.5, 0.0), Metric::Chi, None).unwrap();
        assert!((c.get("norm").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(c.get("ccf"), Some(0.0));
        let m = compare(&series(0.0, 0.0), &series(0.5, 0.0), Metric::MaxAbs, None).unwrap();
        assert!((m.get("norm").unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn disjoint_ranges_and_missing_columns_fail() {
        assert!(compare(&series(0.0, 0.0), &series(0.0, 5.0), Metric::Chi, None).is_err());
        let cols = vec!["energy".to_string()];
        assert!(compare(&series(0.0, 0.0), &series(0.0, 0.0), Metric::Chi, Some(&cols)).is_err());
    }
}
