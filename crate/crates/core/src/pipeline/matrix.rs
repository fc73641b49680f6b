//! The clustering input: dated rows of named real-valued features.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::series::DatedValues;
use crate::error::{Error, Result};
use crate::numfmt::format_significant;

/// Per-column moments removed by [`FeatureMatrix::standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// `n` observations of `p` named features stored row-major.
///
/// `dates` is either empty (undated data) or holds one date per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    values: Vec<f64>,
    n_rows: usize,
    scaling: Option<ColumnScaling>,
}

impl FeatureMatrix {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = names.len();
        if p == 0 {
            return Err(Error::invalid("a feature matrix needs at least one column"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate feature name `{dup}`")));
        }
        if !dates.is_empty() && dates.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: dates.len(),
            });
        }
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("feature values must be finite"));
            }
            values.extend(row);
        }
        Ok(Self {
            dates,
            names,
            values,
            n_rows,
            scaling: None,
        })
    }

    /// Undated matrix with generated column names `x0, x1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let names = (0..p).map(|j| format!("x{j}")).collect();
        Self::new(Vec::new(), names, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn is_standardized(&self) -> bool {
        self.scaling.is_some()
    }

    pub fn scaling(&self) -> Option<&ColumnScaling> {
        self.scaling.as_ref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.names.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.names.len() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New matrix holding the named columns in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::invalid(format!("no feature named `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = self
            .rows()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect();
        let mut out = Self::new(
            self.dates.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            rows,
        )?;
        out.scaling = self.scaling.as_ref().map(|s| ColumnScaling {
            means: idx.iter().map(|&j| s.means[j]).collect(),
            stds: idx.iter().map(|&j| s.stds[j]).collect(),
        });
        Ok(out)
    }

    /// Every entry multiplied by `factor`; any scaling metadata is dropped.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.scaling = None;
        out
    }

    /// Per-column z-scores using the sample standard deviation (divisor `n - 1`).
    ///
    /// Fails on a constant column, naming it.
    pub fn standardize(&self) -> Result<Self> {
        let n = self.n_rows;
        let p = self.n_features();
        if n < 2 {
            return Err(Error::invalid("standardizing needs at least two rows"));
        }
        let mut means = Vec::with_capacity(p);
        let mut stds = Vec::with_capacity(p);
        for j in 0..p {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let std = var.sqrt();
            if !(std > 0.0) || std <= mean.abs() * 1e-14 {
                return Err(Error::ConstantColumn {
                    name: self.names[j].clone(),
                });
            }
            means.push(mean);
            stds.push(std);
        }
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(p) {
            for j in 0..p {
                row[j] = (row[j] - means[j]) / stds[j];
            }
        }
        out.scaling = Some(ColumnScaling { means, stds });
        Ok(out)
    }

    /// Write `date,<feature1>,...` with one row per observation and 10 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "date")?;
        for name in &self.names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for (i, row) in self.rows().enumerate() {
            match self.dates.get(i) {
                Some(d) => write!(out, "{}", d.format("%Y-%m-%d"))?,
                None => write!(out, "{i}")?,
            }
            for v in row {
                write!(out, ",{}", format_significant(*v, 10))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Inverse of [`FeatureMatrix::write_csv`] for dated matrices.
    pub fn read_csv<R: Read>(raw: R, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(raw);
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.get(0) != Some("date") || headers.len() < 2 {
            return Err(parse_err(
                1,
                "expected header `date,<feature>,...`".to_string(),
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                parse_err(line, format!("malformed row: {e}"))
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
                .map_err(|_| parse_err(line, format!("bad date `{}`", &record[0])))?;
            let row = record
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(line, format!("bad value `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            dates.push(date);
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(parse_err(2, "no data rows".to_string()));
        }
        Self::new(dates, names, rows)
    }
}

/// Inner-join series on their common dates. Column order follows `series`.
pub fn align(series: &[&dyn DatedValues]) -> Result<FeatureMatrix> {
    let Some(first) = series.first() else {
        return Err(Error::invalid("align needs at least one series"));
    };
    let others: Vec<HashSet<NaiveDate>> = series[1..]
        .iter()
        .map(|s| s.dates().iter().copied().collect())
        .collect();
    let common: Vec<NaiveDate> = first
        .dates()
        .iter()
        .copied()
        .filter(|d| others.iter().all(|set| set.contains(d)))
        .collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection {
            count: series.len(),
        });
    }

    let mut columns = Vec::with_capacity(series.len());
    for s in series {
        let dates = s.dates();
        let values = s.values();
        let col: Vec<f64> = common
            .iter()
            .map(|d| values[dates.binary_search(d).expect("date present in every series")])
            .collect();
        columns.push(col);
    }
    let rows = (0..common.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let names = series.iter().map(|s| s.name().to_string()).collect();
    FeatureMatrix::new(common, names, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::series::PriceSeries;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, 1, day).unwrap()
    }

    fn series(name: &str, days: &[u32]) -> PriceSeries {
        PriceSeries::new(
            name,
            days.iter().map(|&x| d(x)).collect(),
            days.iter().map(|&x| x as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn align_identical_dates() {
        let a = series("A", &[1, 2, 3]);
        let b = series("B", &[1, 2, 3]);
        let m = align(&[&a, &b]).unwrap();
        assert_eq!((m.n_rows(), m.n_features()), (3, 2));
        assert!(!m.is_standardized());
    }

    #[test]
    fn align_intersects() {
        let a = series("A", &[1, 2, 3]);
        let b = series("B", &[2, 3, 4]);
        let m = align(&[&a, &b]).unwrap();
        assert_eq!(m.dates(), &[d(2), d(3)]);
        assert_eq!(m.row(0), &[2.0, 2.0]);
    }

    #[test]
    fn align_disjoint_fails() {
        let a = series("A", &[1, 2]);
        let b = series("B", &[3, 4]);
        assert!(matches!(
            align(&[&a, &b]),
            Err(Error::EmptyIntersection { count: 2 })
        ));
        assert!(align(&[]).is_err());
    }

    #[test]
    fn standardize_symmetric_column() {
        let m = FeatureMatrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let z = m.standardize().unwrap();
        assert_eq!(z.column(0), vec![-1.0, 0.0, 1.0]);
        assert!(z.is_standardized());
        assert_eq!(z.scaling().unwrap().means, vec![2.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let rows = (0..20)
            .map(|i| vec![(i as f64).sin() * 3.0 + 7.0, (i as f64 * 0.3).cos()])
            .collect();
        let z = FeatureMatrix::from_rows(rows).unwrap().standardize().unwrap();
        let zz = z.standardize().unwrap();
        for (a, b) in z.values.iter().zip(&zz.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_named() {
        let m = FeatureMatrix::new(
            vec![],
            vec!["a".into(), "flat".into()],
            vec![vec![1.0, 5.0], vec![2.0, 5.0]],
        )
        .unwrap();
        match m.standardize() {
            Err(Error::ConstantColumn { name }) => assert_eq!(name, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn select_reorders_columns() {
        let m = FeatureMatrix::new(
            vec![],
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 2.0, 3.0]],
        )
        .unwrap();
        let s = m.select(&["c", "a"]).unwrap();
        assert_eq!(s.row(0), &[3.0, 1.0]);
        assert!(m.select(&["zz"]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix::new(
            vec![d(1), d(2)],
            vec!["VIX".into(), "SDR".into()],
            vec![vec![14.25, 0.012_345_678_912_3], vec![-3.0, 1e-7]],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "date,VIX,SDR\n2013-01-01,14.25,0.01234567891\n2013-01-02,-3,1e-07\n"
        );
        let back = FeatureMatrix::read_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.names(), m.names());
        assert_eq!(back.dates(), m.dates());
        assert!((back.get(0, 1) - 0.012_345_678_91).abs() < 1e-15);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(FeatureMatrix::new(vec![], vec!["a".into(), "a".into()], vec![]).is_err());
    }
}
