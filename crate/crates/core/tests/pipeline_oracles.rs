mod common;

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use rand::Rng;
use volclust::pipeline::{align, log_returns, rolling_volatility, DatedValues, PriceSeries};
use volclust::FeatureMatrix;

fn day(i: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 1, 1).unwrap() + Days::new(i)
}

fn random_walk(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut p = rng.random_range(10.0..5000.0);
    (0..n)
        .map(|_| {
            p *= (rng.random_range(-0.05..0.05f64)).exp();
            p
        })
        .collect()
}

/// Sum with Neumaier compensation.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}

fn oracle_std(w: &[f64]) -> f64 {
    let mean = compensated_sum(w.iter().copied()) / w.len() as f64;
    (compensated_sum(w.iter().map(|r| (r - mean) * (r - mean))) / (w.len() - 1) as f64).sqrt()
}

#[test]
fn returns_and_volatility_match_compensated_oracle() {
    let mut rng = common::rng(1000);
    for _ in 0..1000 {
        let n = rng.random_range(12..=80);
        let window = rng.random_range(2..=10);
        let closes = random_walk(&mut rng, n);
        let prices = PriceSeries::new("P", (0..n as u64).map(day).collect(), closes.clone()).unwrap();

        let returns = log_returns(&prices).unwrap();
        let expected: Vec<f64> = closes.windows(2).map(|w| ((w[1] - w[0]) / w[0]).ln_1p()).collect();
        for (a, b) in returns.returns().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(returns.dates(), &prices.dates()[1..]);

        let vol = rolling_volatility(&returns, window).unwrap();
        assert_eq!(vol.len(), expected.len() + 1 - window);
        for (t, v) in vol.values().iter().enumerate() {
            let o = oracle_std(&expected[t..t + window]);
            assert!((v - o).abs() <= 1e-10 * o.max(1e-3), "{v} vs {o}");
        }
        assert_eq!(vol.dates()[0], returns.dates()[window - 1]);
    }
}

#[test]
fn volatility_ignores_price_units() {
    let mut rng = common::rng(4);
    for _ in 0..200 {
        let n = rng.random_range(12..=60);
        let prices = PriceSeries::new("P", (0..n as u64).map(day).collect(), random_walk(&mut rng, n)).unwrap();
        let factor = rng.random_range(1e-3..1e3);
        let a = rolling_volatility(&log_returns(&prices).unwrap(), 5).unwrap();
        let b = rolling_volatility(&log_returns(&prices.scaled(factor).unwrap()).unwrap(), 5).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-3));
        }
    }
}

#[test]
fn align_keeps_exactly_the_common_dates() {
    let mut rng = common::rng(21);
    for _ in 0..200 {
        let count = rng.random_range(1..=4);
        let series: Vec<PriceSeries> = (0..count)
            .map(|s| {
                let days: BTreeSet<u64> = (0..60).filter(|_| rng.random_bool(0.8)).collect();
                let days: Vec<u64> = if days.is_empty() { vec![0] } else { days.into_iter().collect() };
                let values = days.iter().map(|&d| d as f64 + 1.0 + 100.0 * s as f64).collect();
                PriceSeries::new(format!("S{s}"), days.iter().map(|&d| day(d)).collect(), values).unwrap()
            })
            .collect();
        let mut common: BTreeSet<NaiveDate> = series[0].dates().iter().copied().collect();
        for s in &series[1..] {
            let other: BTreeSet<NaiveDate> = s.dates().iter().copied().collect();
            common = common.intersection(&other).copied().collect();
        }
        let refs: Vec<&dyn DatedValues> = series.iter().map(|s| s as &dyn DatedValues).collect();
        match align(&refs) {
            Ok(m) => {
                assert_eq!(m.dates(), common.iter().copied().collect::<Vec<_>>().as_slice());
                for (i, d) in m.dates().iter().enumerate() {
                    let offset = (*d - day(0)).num_days() as f64;
                    for s in 0..count {
                        assert_eq!(m.get(i, s), offset + 1.0 + 100.0 * s as f64);
                    }
                }
            }
            Err(_) => assert!(common.is_empty()),
        }
    }
}

proptest! {
    #[test]
    fn standardizing_twice_changes_nothing(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 3..40),
    ) {
        let data = FeatureMatrix::from_rows(rows).unwrap();
        if let Ok(once) = data.standardize() {
            let twice = once.standardize().unwrap();
            for j in 0..3 {
                let col = once.column(j);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
                prop_assert!(mean.abs() < 1e-12);
                prop_assert!((var - 1.0).abs() < 1e-12);
                for (a, b) in col.iter().zip(twice.column(j)) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn returns_sum_to_the_total_log_change(closes in prop::collection::vec(0.5f64..500.0, 3..50)) {
        let n = closes.len();
        let prices = PriceSeries::new("P", (0..n as u64).map(day).collect(), closes.clone()).unwrap();
        let total: f64 = log_returns(&prices).unwrap().returns().iter().sum();
        prop_assert!((total - (closes[n - 1] / closes[0]).ln()).abs() < 1e-9);
    }
}
