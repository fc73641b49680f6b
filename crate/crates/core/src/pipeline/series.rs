//! Dated price, return and volatility series.

use std::io::Read;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Anything that is an ordered list of dated real values.
pub trait DatedValues {
    fn name(&self) -> &str;
    fn dates(&self) -> &[NaiveDate];
    fn values(&self) -> &[f64];

    fn len(&self) -> usize {
        self.dates().len()
    }

    fn is_empty(&self) -> bool {
        self.dates().is_empty()
    }
}

fn check_increasing(name: &str, dates: &[NaiveDate]) -> Result<()> {
    for pair in dates.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid(format!(
                "series `{name}`: dates must be strictly increasing ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Daily closing levels of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    name: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    pub fn new(name: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dates.len() != closes.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                got: closes.len(),
            });
        }
        check_increasing(&name, &dates)?;
        if let Some((i, v)) = closes
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::invalid(format!(
                "series `{name}`: close on {} is {v}, must be finite and positive",
                dates[i]
            )));
        }
        Ok(Self { name, dates, closes })
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    /// Multiply every close by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.dates.clone(),
            self.closes.iter().map(|c| c * factor).collect(),
        )
    }
}

impl DatedValues for PriceSeries {
    fn name(&self) -> &str {
        &self.name
    }
    fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    fn values(&self) -> &[f64] {
        &self.closes
    }
}

/// Log returns, each dated at the later of its two closes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    name: String,
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(name: impl Into<String>, dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dates.len() != returns.len() {
            return Err(Error::DimensionMismatch {
                expected: dates.len(),
                got: returns.len(),
            });
        }
        check_increasing(&name, &dates)?;
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid(format!("series `{name}`: non-finite return")));
        }
        Ok(Self {
            name,
            dates,
            returns,
        })
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }
}

impl DatedValues for ReturnSeries {
    fn name(&self) -> &str {
        &self.name
    }
    fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    fn values(&self) -> &[f64] {
        &self.returns
    }
}

/// Rolling sample standard deviation of returns (per-day units, not annualized).
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySeries {
    name: String,
    window: usize,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl VolatilitySeries {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl DatedValues for VolatilitySeries {
    fn name(&self) -> &str {
        &self.name
    }
    fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Read a `date,close` CSV (header required, ISO-8601 dates) into a [`PriceSeries`].
///
/// Extra columns are ignored. Rows may arrive in any order and are sorted by date;
/// a repeated date is rejected with the line of its second occurrence.
pub fn parse_price_csv<R: Read>(raw: R, name: &str) -> Result<PriceSeries> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: name.to_string(),
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
    let column = |wanted: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(wanted))
            .ok_or_else(|| parse_err(1, format!("header has no `{wanted}` column")))
    };
    let date_col = column("date")?;
    let close_col = column("close")?;

    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let date_text = record.get(date_col).unwrap_or_default();
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("bad date `{date_text}`")))?;
        let close_text = record.get(close_col).unwrap_or_default();
        let close: f64 = close_text
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric close `{close_text}`")))?;
        if !close.is_finite() || close <= 0.0 {
            return Err(parse_err(
                line,
                format!("close must be finite and positive, got `{close_text}`"),
            ));
        }
        rows.push((date, close, line));
    }

    rows.sort_by_key(|r| r.0);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DuplicateDate {
                source_name: name.to_string(),
                line: pair[0].2.max(pair[1].2),
                date: pair[1].0,
            });
        }
    }

    let (dates, closes) = rows.into_iter().map(|(d, c, _)| (d, c)).unzip();
    PriceSeries::new(name, dates, closes)
}

/// `r_t = ln(P_t / P_{t-1})`, dated at `t`.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::SeriesTooShort {
            name: prices.name.clone(),
            len: prices.len(),
            needed: 2,
        });
    }
    let returns = prices
        .closes
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    ReturnSeries::new(prices.name.clone(), prices.dates[1..].to_vec(), returns)
}

/// Sample standard deviation (divisor `window - 1`) over each trailing window of returns,
/// dated at the window's last return.
pub fn rolling_volatility(returns: &ReturnSeries, window: usize) -> Result<VolatilitySeries> {
    if window < 2 {
        return Err(Error::invalid(format!(
            "volatility window must be at least 2, got {window}"
        )));
    }
    if returns.len() < window {
        return Err(Error::SeriesTooShort {
            name: returns.name.clone(),
            len: returns.len(),
            needed: window,
        });
    }
    let values = returns
        .returns
        .windows(window)
        .map(|w| {
            let mean = w.iter().sum::<f64>() / window as f64;
            let ss: f64 = w.iter().map(|r| (r - mean).powi(2)).sum();
            (ss / (window - 1) as f64).sqrt()
        })
        .collect();
    Ok(VolatilitySeries {
        name: returns.name.clone(),
        window,
        dates: returns.dates[window - 1..].to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn prices(values: &[f64]) -> PriceSeries {
        let start = d("2013-01-01");
        let dates = (0..values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        PriceSeries::new("P", dates, values.to_vec()).unwrap()
    }

    fn returns(values: &[f64]) -> ReturnSeries {
        let start = d("2013-01-01");
        let dates = (0..values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        ReturnSeries::new("R", dates, values.to_vec()).unwrap()
    }

    #[test]
    fn parses_minimal_csv() {
        let raw = "date,close\n2013-01-01,100\n2013-01-02,101\n";
        let s = parse_price_csv(raw.as_bytes(), "NIFTY").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.closes(), &[100.0, 101.0]);
        assert_eq!(s.dates()[1], d("2013-01-02"));
    }

    #[test]
    fn negative_close_reports_line() {
        let raw = "date,close\n2013-01-01,100\n2013-01-02,-5\n";
        match parse_price_csv(raw.as_bytes(), "X") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_close_rejected() {
        let raw = "date,close\n2013-01-01,abc\n";
        assert!(matches!(
            parse_price_csv(raw.as_bytes(), "X"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn duplicate_date_rejected() {
        let raw = "date,close\n2013-01-02,100\n2013-01-01,100\n2013-01-02,101\n";
        match parse_price_csv(raw.as_bytes(), "X") {
            Err(Error::DuplicateDate { line, date, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(date, d("2013-01-02"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let raw = "close,date\n101,2013-01-02\n100,2013-01-01\n";
        let s = parse_price_csv(raw.as_bytes(), "X").unwrap();
        assert_eq!(s.closes(), &[100.0, 101.0]);
    }

    #[test]
    fn missing_close_column() {
        let raw = "date,price\n2013-01-01,100\n";
        assert!(matches!(
            parse_price_csv(raw.as_bytes(), "X"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ragged_row_is_malformed() {
        let raw = "date,close\n2013-01-01,100\n2013-01-02\n";
        assert!(matches!(
            parse_price_csv(raw.as_bytes(), "X"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn log_return_examples() {
        let r = log_returns(&prices(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.returns(), &[0.0, 0.0]);

        let r = log_returns(&prices(&[100.0, 200.0])).unwrap();
        assert!((r.returns()[0] - std::f64::consts::LN_2).abs() < 1e-15);

        let r = log_returns(&prices(&[100.0, 110.0, 99.0])).unwrap();
        assert!((r.returns()[0] - 0.095_310_179_804_324_87).abs() < 1e-12);
        assert!((r.returns()[1] - -0.105_360_515_657_826_3).abs() < 1e-12);
        assert_eq!(r.dates()[0], d("2013-01-02"));
    }

    #[test]
    fn log_returns_need_two_prices() {
        assert!(matches!(
            log_returns(&prices(&[100.0])),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn rolling_volatility_examples() {
        let v = rolling_volatility(&returns(&[0.01; 12]), 5).unwrap();
        assert!(v.values().iter().all(|x| *x == 0.0));
        assert_eq!(v.len(), 8);

        let v = rolling_volatility(&returns(&[0.01, -0.01]), 2).unwrap();
        assert!((v.values()[0] - 0.014_142_135_623_730_95).abs() < 1e-12);

        let ten: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() * 0.01).collect();
        let v = rolling_volatility(&returns(&ten), 10).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.dates()[0], returns(&ten).dates()[9]);
    }

    #[test]
    fn window_longer_than_series() {
        assert!(matches!(
            rolling_volatility(&returns(&[0.1, 0.2]), 3),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(rolling_volatility(&returns(&[0.1, 0.2]), 1).is_err());
    }

    #[test]
    fn volatility_length_for_504_returns() {
        let r: Vec<f64> = (0..504).map(|i| ((i * 7 % 13) as f64 - 6.0) * 1e-3).collect();
        let v = rolling_volatility(&returns(&r), 10).unwrap();
        assert_eq!(v.len(), 495);
    }

    #[test]
    fn shuffling_inside_window_keeps_value() {
        let a = [0.01, -0.02, 0.03, 0.005, -0.01, 0.02];
        let b = [0.01, -0.02, 0.005, 0.03, -0.01, 0.02];
        let va = rolling_volatility(&returns(&a), 3).unwrap();
        let vb = rolling_volatility(&returns(&b), 3).unwrap();
        // positions 2 and 3 swapped: windows holding both are unchanged, the rest move
        assert!((va.values()[1] - vb.values()[1]).abs() < 1e-15);
        assert!((va.values()[2] - vb.values()[2]).abs() < 1e-15);
        assert!((va.values()[0] - vb.values()[0]).abs() > 1e-6);
        assert!((va.values()[3] - vb.values()[3]).abs() > 1e-6);
    }
}
