//! Seeded synthetic inputs: a nine-series market with regime-switching volatility on
//! region-specific trading calendars, and planted Gaussian blobs.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::numfmt::format_significant;
use crate::pipeline::{DatedValues, FeatureKind, FeatureMatrix, PriceSeries};
use crate::seed::rng_for;

/// Trading calendars; each drops its own holidays from the weekday calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    India,
    Us,
    Europe,
    HongKong,
    Japan,
}

impl Region {
    /// Holidays per year shared with India and unique to the region.
    fn holidays(self) -> (usize, usize) {
        match self {
            Region::India => (14, 0),
            Region::Us => (6, 1),
            Region::Europe => (5, 1),
            Region::HongKong => (8, 1),
            Region::Japan => (9, 1),
        }
    }
}

struct Spec {
    name: &'static str,
    file: &'static str,
    kind: FeatureKind,
    region: Region,
    start: f64,
    /// Daily return scale in the calm regime; for levels, the calm level.
    scale: f64,
    /// Exponent on the regime multiplier.
    loading: f64,
}

const SPECS: [Spec; 9] = [
    Spec { name: "INDIAVIX", file: "indiavix.csv", kind: FeatureKind::Level, region: Region::India, start: 14.0, scale: 14.0, loading: 0.9 },
    Spec { name: "NIFTYSDR", file: "nifty.csv", kind: FeatureKind::Volatility, region: Region::India, start: 5900.0, scale: 0.009, loading: 1.0 },
    Spec { name: "CBOEVIX", file: "cboevix.csv", kind: FeatureKind::Level, region: Region::Us, start: 16.0, scale: 13.0, loading: 0.7 },
    Spec { name: "CRUDESDR", file: "crude.csv", kind: FeatureKind::Volatility, region: Region::Us, start: 92.0, scale: 0.013, loading: 0.6 },
    Spec { name: "DJIASDR", file: "djia.csv", kind: FeatureKind::Volatility, region: Region::Us, start: 13100.0, scale: 0.006, loading: 0.8 },
    Spec { name: "DAXSDR", file: "dax.csv", kind: FeatureKind::Volatility, region: Region::Europe, start: 7700.0, scale: 0.009, loading: 0.8 },
    Spec { name: "HANGSDR", file: "hangseng.csv", kind: FeatureKind::Volatility, region: Region::HongKong, start: 22600.0, scale: 0.009, loading: 0.7 },
    Spec { name: "NIKKEISDR", file: "nikkei.csv", kind: FeatureKind::Volatility, region: Region::Japan, start: 10600.0, scale: 0.011, loading: 0.6 },
    Spec { name: "GOLDSDR", file: "gold.csv", kind: FeatureKind::Volatility, region: Region::Us, start: 1670.0, scale: 0.009, loading: 0.3 },
];

/// Calm, nervous and stressed regimes.
const REGIME_MULTIPLIER: [f64; 3] = [1.0, 1.7, 2.8];
const REGIME_STAY: f64 = 0.97;

/// One generated input series.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    /// Feature name the series feeds.
    pub name: String,
    pub file: String,
    pub kind: FeatureKind,
    pub prices: PriceSeries,
}

/// Weekdays from `start` to `end` inclusive.
pub fn weekdays(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

fn regime_path(rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    let mut state = 0;
    (0..len)
        .map(|_| {
            if rng.random::<f64>() > REGIME_STAY {
                // move one step up or down
                state = match state {
                    0 => 1,
                    2 => 1,
                    _ if rng.random::<bool>() => 2,
                    _ => 0,
                };
            }
            state
        })
        .collect()
}

fn holiday_sets(rng: &mut ChaCha8Rng, days: &[NaiveDate], first_year: i32) -> Vec<(Region, HashSet<NaiveDate>)> {
    let by_year: Vec<Vec<NaiveDate>> = (first_year..=first_year + 1)
        .map(|y| days.iter().copied().filter(|d| d.year() == y).collect())
        .collect();
    let (india_count, _) = Region::India.holidays();
    let india: Vec<Vec<NaiveDate>> = by_year
        .iter()
        .map(|year| {
            let mut picks: Vec<NaiveDate> = sample(rng, year.len(), india_count)
                .into_iter()
                .map(|i| year[i])
                .collect();
            picks.sort();
            picks
        })
        .collect();

    [Region::India, Region::Us, Region::Europe, Region::HongKong, Region::Japan]
        .into_iter()
        .map(|region| {
            let (shared, unique) = region.holidays();
            let mut set = HashSet::new();
            for (year, india_year) in by_year.iter().zip(&india) {
                for i in sample(rng, india_year.len(), shared.min(india_year.len())) {
                    set.insert(india_year[i]);
                }
                let open: Vec<NaiveDate> = year
                    .iter()
                    .copied()
                    .filter(|d| !india_year.contains(d))
                    .collect();
                for i in sample(rng, open.len(), unique) {
                    set.insert(open[i]);
                }
            }
            (region, set)
        })
        .collect()
}

/// Generate the nine input series for 2013-2014. Volatility inputs start early enough that
/// their first full window ends on the first trading day of 2013.
pub fn synthetic_market(seed: u64) -> Result<Vec<SyntheticSeries>> {
    let first = NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date");
    let last = NaiveDate::from_ymd_opt(2014, 12, 31).expect("valid date");
    let warmup_start = first - Duration::days(21);
    let calendar = weekdays(warmup_start, last);
    let study: Vec<NaiveDate> = calendar.iter().copied().filter(|d| *d >= first).collect();

    let mut rng = rng_for(seed, &[0]);
    let regimes = regime_path(&mut rng, calendar.len());
    let holidays = holiday_sets(&mut rng, &study, first.year());

    let noise = Normal::new(0.0, 0.08).expect("valid normal");
    let mut out = Vec::with_capacity(SPECS.len());
    for (s, spec) in SPECS.iter().enumerate() {
        let mut rng = rng_for(seed, &[1, s as u64]);
        let closed = &holidays
            .iter()
            .find(|(r, _)| *r == spec.region)
            .expect("every region has a holiday set")
            .1;
        // slow idiosyncratic log-volatility drift
        let mut drift = 0.0;
        let mut level = spec.start;
        let mut dates = Vec::new();
        let mut closes = Vec::new();
        for (t, &day) in calendar.iter().enumerate() {
            drift = 0.96 * drift + noise.sample(&mut rng);
            let mult = REGIME_MULTIPLIER[regimes[t]].powf(spec.loading) * f64::exp(drift);
            match spec.kind {
                FeatureKind::Volatility => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    level *= f64::exp(spec.scale * mult * z);
                }
                FeatureKind::Level => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    level = spec.scale * mult * f64::exp(0.03 * z);
                }
            }
            let trading = !closed.contains(&day)
                && (spec.kind == FeatureKind::Volatility || day >= first);
            if trading {
                dates.push(day);
                closes.push(round_price(level));
            }
        }
        out.push(SyntheticSeries {
            name: spec.name.to_string(),
            file: spec.file.to_string(),
            kind: spec.kind,
            prices: PriceSeries::new(spec.name, dates, closes)?,
        });
    }
    Ok(out)
}

fn round_price(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Write the market's CSV files and a run configuration into `dir`; returns the config path.
pub fn write_market_fixture(dir: &Path, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let market = synthetic_market(seed)?;
    let mut config = String::from("seed = 42\nwindow = 10\nstandardize = true\nout = \"out\"\n");
    for series in &market {
        let path = dir.join(&series.file);
        let mut text = String::from("Date,Close\n");
        for (d, c) in series.prices.dates().iter().zip(series.prices.closes()) {
            text.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), format_significant(*c, 10)));
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let kind = match series.kind {
            FeatureKind::Level => "level",
            FeatureKind::Volatility => "volatility",
        };
        config.push_str(&format!(
            "\n[[series]]\nname = \"{}\"\npath = \"{}\"\nkind = \"{kind}\"\n",
            series.name, series.file
        ));
    }
    let path = dir.join("volclust.toml");
    fs::write(&path, config).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// `per_blob` points around each center with isotropic standard deviation `std`, in blob
/// order, dated on consecutive weekdays from 2013-01-01. Returns the data and true labels.
pub fn planted_blobs(centers: &[Vec<f64>], per_blob: usize, std: f64, seed: u64) -> Result<(FeatureMatrix, Vec<usize>)> {
    let Some(dim) = centers.first().map(Vec::len) else {
        return Err(Error::invalid("at least one center is required"));
    };
    if centers.iter().any(|c| c.len() != dim) {
        return Err(Error::invalid("centers differ in dimension"));
    }
    let noise = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_for(seed, &[2]);
    let mut rows = Vec::with_capacity(centers.len() * per_blob);
    let mut labels = Vec::with_capacity(rows.capacity());
    for (b, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            rows.push(center.iter().map(|c| c + noise.sample(&mut rng)).collect());
            labels.push(b);
        }
    }
    let start = NaiveDate::from_ymd_opt(2013, 1, 1).expect("valid date");
    let dates: Vec<NaiveDate> = weekdays(start, start + Duration::days(7 * rows.len() as i64))
        .into_iter()
        .take(rows.len())
        .collect();
    let names = (0..dim).map(|j| format!("x{j}")).collect();
    Ok((FeatureMatrix::new(dates, names, rows)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{build_features, DEFAULT_FEATURE_ORDER, DEFAULT_WINDOW};

    #[test]
    fn market_shape() {
        let market = synthetic_market(7).unwrap();
        let names: Vec<&str> = market.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, DEFAULT_FEATURE_ORDER);
        // 522 weekdays in 2013-2014 less 28 Indian holidays
        assert_eq!(market[0].prices.len(), 494);
        let m = build_features(
            market.iter().map(|s| (s.name.as_str(), s.kind, &s.prices)),
            DEFAULT_WINDOW,
        )
        .unwrap();
        assert_eq!(m.n_features(), 9);
        assert!((470..=494).contains(&m.n_rows()), "{}", m.n_rows());
    }

    #[test]
    fn market_is_seeded() {
        let a = synthetic_market(3).unwrap();
        let b = synthetic_market(3).unwrap();
        let c = synthetic_market(4).unwrap();
        assert_eq!(a[4].prices.closes(), b[4].prices.closes());
        assert_ne!(a[4].prices.closes(), c[4].prices.closes());
    }

    #[test]
    fn blobs_are_labelled_in_order() {
        let (m, labels) = planted_blobs(&[vec![0.0, 0.0], vec![10.0, 0.0]], 5, 0.1, 1).unwrap();
        assert_eq!(m.n_rows(), 10);
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert!(m.row(7)[0] > 9.0);
        assert_eq!(m.dates().len(), 10);
    }
}
