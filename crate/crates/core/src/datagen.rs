//! Seeded synthetic conversion-rate data.
//!
//! Each day is drawn independently from a four-part mixture: an exact zero,
//! a low band `(0, 2]`, a flat body and rare bursts. Site records add
//! Poisson clicks and binomial sales on top of the drawn rate.
//!
//! Randomness is ChaCha8 seeded from `GenConfig::seed`: stream 0 drives the
//! rates, stream 1 the counts and the language/country codes.

use alloc::string::ToString;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::series::{conversion_rate, SiteRecord, TimeSeries};
use crate::{Error, Result};

pub const LANGUAGES: [&str; 5] = ["en", "uk", "ru", "de", "pl"];
pub const COUNTRIES: [&str; 5] = ["US", "UA", "DE", "PL", "GB"];

/// Mixture and count parameters. The defaults only shape a plausible
/// histogram (tall near zero, flat body, rare bursts); they are not
/// measurements of any store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_days: usize,
    pub p_zero: f64,
    pub low_mode_weight: f64,
    pub burst_prob: f64,
    pub burst_range: [f64; 2],
    pub body_range: [f64; 2],
    /// Mean clicks per day.
    pub clicks_rate: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_days: 100,
            p_zero: 0.35,
            low_mode_weight: 0.30,
            burst_prob: 0.05,
            burst_range: [20.0, 60.0],
            body_range: [2.0, 15.0],
            clicks_rate: 50.0,
            seed: 0,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date"),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_days == 0 {
            return bad("n_days must be at least 1");
        }
        let probs = [self.p_zero, self.low_mode_weight, self.burst_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]");
        }
        if probs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return bad("p_zero + low_mode_weight + burst_prob must not exceed 1");
        }
        for (name, [lo, hi]) in [
            ("burst_range", self.burst_range),
            ("body_range", self.body_range),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 100.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} must be an ordered pair within [0, 100]"
                )));
            }
        }
        if !(self.clicks_rate > 0.0 && self.clicks_rate.is_finite()) {
            return bad("clicks_rate must be positive");
        }
        Ok(())
    }

    /// Expected conversion rate of the mixture.
    pub fn mixture_mean(&self) -> f64 {
        let mid = |[lo, hi]: [f64; 2]| 0.5 * (lo + hi);
        let body = 1.0 - self.p_zero - self.low_mode_weight - self.burst_prob;
        self.low_mode_weight * 1.0
            + self.burst_prob * mid(self.burst_range)
            + body.max(0.0) * mid(self.body_range)
    }

    fn date(&self, day: usize) -> NaiveDate {
        self.start_date
            .checked_add_days(Days::new(day as u64))
            .unwrap_or(NaiveDate::MAX)
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn draw_rate(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let low = cfg.p_zero + cfg.low_mode_weight;
    let burst = low + cfg.burst_prob;
    if u < cfg.p_zero {
        0.0
    } else if u < low {
        2.0 * (1.0 - rng.random::<f64>())
    } else if u < burst {
        uniform(rng, cfg.burst_range)
    } else {
        uniform(rng, cfg.body_range)
    }
}

fn draw_rates(cfg: &GenConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_days).map(|_| draw_rate(cfg, &mut rng)).collect()
}

/// I.i.d. draws from the rate mixture.
pub fn gen_conversion_series(cfg: &GenConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    TimeSeries::new(draw_rates(cfg), cfg.start_date)
}

/// Site records whose counts follow the same daily rates as
/// [`gen_conversion_series`] with the same config. The stored conversion is
/// recomputed from the counts.
pub fn gen_site_records(cfg: &GenConfig) -> Result<Vec<SiteRecord>> {
    cfg.validate()?;
    let rates = draw_rates(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let poisson = Poisson::new(cfg.clicks_rate)
        .map_err(|_| Error::InvalidConfig("clicks_rate must be positive".into()))?;
    rates
        .iter()
        .enumerate()
        .map(|(day, &rate)| {
            let clicks = poisson.sample(&mut rng) as u64;
            let sales = Binomial::new(clicks, (rate / 100.0).clamp(0.0, 1.0))
                .map_err(|_| Error::InvalidConfig("rate outside [0, 100]".into()))?
                .sample(&mut rng);
            let language = LANGUAGES[rng.random_range(0..LANGUAGES.len())].to_string();
            let country = COUNTRIES[rng.random_range(0..COUNTRIES.len())].to_string();
            Ok(SiteRecord {
                date: cfg.date(day),
                clicks,
                sales,
                conversion: conversion_rate(clicks, sales),
                language,
                country,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, seed: u64) -> GenConfig {
        GenConfig {
            n_days: n,
            seed,
            ..GenConfig::default()
        }
    }

    #[test]
    fn all_zero_mixture() {
        let c = GenConfig {
            p_zero: 1.0,
            low_mode_weight: 0.0,
            burst_prob: 0.0,
            ..cfg(50, 1)
        };
        assert!(gen_conversion_series(&c)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        for r in gen_site_records(&c).unwrap() {
            assert_eq!((r.sales, r.conversion), (0, 0.0));
        }
    }

    #[test]
    fn zero_fraction_matches_config() {
        let s = gen_conversion_series(&cfg(10_000, 42)).unwrap();
        let zeros = s.values().iter().filter(|&&v| v == 0.0).count() as f64 / 10_000.0;
        assert!((zeros - 0.35).abs() < 0.02, "zero fraction {zeros}");
        assert!(s.values().iter().all(|&v| (0.0..=60.0).contains(&v)));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            gen_site_records(&cfg(30, 5)).unwrap(),
            gen_site_records(&cfg(30, 5)).unwrap()
        );
        assert_ne!(
            gen_conversion_series(&cfg(30, 5)).unwrap(),
            gen_conversion_series(&cfg(30, 6)).unwrap()
        );
    }

    #[test]
    fn records_are_consistent() {
        let records = gen_site_records(&cfg(1000, 9)).unwrap();
        assert_eq!(
            records[1].date,
            NaiveDate::from_ymd_opt(2023, 1, 2).unwrap()
        );
        for r in &records {
            r.validate().unwrap();
        }
        let rates: Vec<f64> = records
            .iter()
            .filter(|r| r.clicks > 0)
            .map(|r| r.conversion)
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let expected = cfg(1, 0).mixture_mean();
        assert!((mean - expected).abs() < 1.5, "{mean} vs {expected}");
    }

    #[test]
    fn config_validation() {
        let c = GenConfig {
            p_zero: 0.8,
            low_mode_weight: 0.3,
            ..GenConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = GenConfig {
            body_range: [15.0, 2.0],
            ..GenConfig::default()
        };
        assert!(c.validate().is_err());
        let c = GenConfig {
            clicks_rate: 0.0,
            ..GenConfig::default()
        };
        assert!(gen_site_records(&c).is_err());
    }
}
