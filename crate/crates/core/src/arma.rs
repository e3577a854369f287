//! AIC screening of low-order linear models.
//!
//! Four candidates are fitted to a mean-corrected series `d_t = x_t - mean`:
//! white noise, MA(1), AR(1) and ARMA(1,1). Residuals follow
//! `e_t = d_t - phi d_{t-1} - theta e_{t-1}` with `d_{-1} = e_{-1} = 0`, so every
//! candidate is scored on the same `n` terms and `sigma2 = RSS / n`.
//! AR(1) takes `phi` from the lag-1 autocorrelation; MA(1) and ARMA(1,1)
//! minimize the conditional sum of squares over a 0.01 grid in `(-1, 1)`.
//!
//! `AIC = n ln(sigma2) + n (1 + ln 2π) + 2k`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{self, ln};
use crate::series::acf;
use crate::{Error, Result};

/// Shortest series accepted by the screen.
pub const MIN_LEN: usize = 10;

/// AIC improvement over white noise needed before an ARMA candidate counts.
pub const DELTA_AIC_THRESHOLD: f64 = 2.0;

/// Candidate model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArmaKind {
    WhiteNoise,
    Ma1,
    Ar1,
    Arma11,
}

impl ArmaKind {
    pub const ALL: [ArmaKind; 4] = [
        ArmaKind::WhiteNoise,
        ArmaKind::Ma1,
        ArmaKind::Ar1,
        ArmaKind::Arma11,
    ];

    /// Mean and variance count as parameters.
    pub fn k_params(self) -> usize {
        match self {
            ArmaKind::WhiteNoise => 2,
            ArmaKind::Ma1 | ArmaKind::Ar1 => 3,
            ArmaKind::Arma11 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ArmaKind::WhiteNoise => "MAProcess[0]",
            ArmaKind::Ma1 => "MAProcess[1]",
            ArmaKind::Ar1 => "ARProcess[1]",
            ArmaKind::Arma11 => "ARMAProcess[1,1]",
        }
    }
}

impl fmt::Display for ArmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One fitted candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaFit {
    pub kind: ArmaKind,
    pub mu: f64,
    pub phi: f64,
    pub theta: f64,
    pub sigma2: f64,
    pub k_params: usize,
    pub n: usize,
    pub aic: f64,
}

/// `n ln(sigma2) + n (1 + ln 2π) + 2k`.
pub fn gaussian_aic(n: usize, sigma2: f64, k_params: usize) -> f64 {
    let n = n as f64;
    n * ln(sigma2) + n * (1.0 + ln(2.0 * core::f64::consts::PI)) + 2.0 * k_params as f64
}

/// Conditional sum of squares of `e_t = d_t - phi d_{t-1} - theta e_{t-1}`.
pub fn css(dev: &[f64], phi: f64, theta: f64) -> f64 {
    let (mut prev_d, mut prev_e, mut sum) = (0.0, 0.0, 0.0);
    for &d in dev {
        let e = d - phi * prev_d - theta * prev_e;
        sum += e * e;
        prev_d = d;
        prev_e = e;
    }
    sum
}

/// `{-0.99, -0.98, ..., 0.99}`.
pub fn coefficient_grid() -> impl Iterator<Item = f64> + Clone {
    (-99i32..=99).map(|i| f64::from(i) / 100.0)
}

fn prepare(values: &[f64]) -> Result<(f64, Vec<f64>)> {
    if values.len() < MIN_LEN {
        return Err(Error::SeriesTooShort {
            needed: MIN_LEN,
            found: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance);
    }
    let mu = math::mean(values);
    Ok((mu, values.iter().map(|x| x - mu).collect()))
}

/// Fits one candidate.
pub fn fit_candidate(values: &[f64], kind: ArmaKind) -> Result<ArmaFit> {
    let (mu, dev) = prepare(values)?;
    fit_prepared(mu, &dev, kind)
}

fn fit_prepared(mu: f64, dev: &[f64], kind: ArmaKind) -> Result<ArmaFit> {
    let n = dev.len();
    let (phi, theta, rss) = match kind {
        ArmaKind::WhiteNoise => (0.0, 0.0, dev.iter().map(|d| d * d).sum()),
        ArmaKind::Ar1 => {
            let phi = acf(dev, 1)?[1];
            (phi, 0.0, css(dev, phi, 0.0))
        }
        ArmaKind::Ma1 => {
            let mut best = (0.0, f64::INFINITY);
            for theta in coefficient_grid() {
                let s = css(dev, 0.0, theta);
                if s < best.1 {
                    best = (theta, s);
                }
            }
            (0.0, best.0, best.1)
        }
        ArmaKind::Arma11 => {
            let mut best = (0.0, 0.0, f64::INFINITY);
            for phi in coefficient_grid() {
                for theta in coefficient_grid() {
                    let s = css(dev, phi, theta);
                    if s < best.2 {
                        best = (phi, theta, s);
                    }
                }
            }
            best
        }
    };
    if !(rss > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sigma2 = rss / n as f64;
    let k_params = kind.k_params();
    Ok(ArmaFit {
        kind,
        mu,
        phi,
        theta,
        sigma2,
        k_params,
        n,
        aic: gaussian_aic(n, sigma2, k_params),
    })
}

/// Candidates ranked by AIC and the verdict on whether an ARMA model earns
/// its extra parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicScreenResult {
    /// Ascending by AIC.
    pub fits: Vec<ArmaFit>,
    pub arma_appropriate: bool,
    /// White-noise AIC minus the best non-white-noise AIC (positive when an
    /// ARMA candidate beats white noise).
    pub delta_aic_vs_white_noise: f64,
}

impl AicScreenResult {
    /// Sorts `fits` and derives the verdict. `fits` must contain a white-noise
    /// fit and at least one other candidate.
    pub fn from_fits(mut fits: Vec<ArmaFit>) -> Result<Self> {
        let white = fits
            .iter()
            .find(|f| f.kind == ArmaKind::WhiteNoise)
            .map(|f| f.aic)
            .ok_or_else(|| Error::InvalidConfig("white-noise fit missing".into()))?;
        let best_other = fits
            .iter()
            .filter(|f| f.kind != ArmaKind::WhiteNoise)
            .map(|f| f.aic)
            .fold(f64::INFINITY, f64::min);
        if best_other.is_infinite() {
            return Err(Error::InvalidConfig("no ARMA candidate".into()));
        }
        fits.sort_by(|a, b| a.aic.total_cmp(&b.aic));
        let delta = white - best_other;
        Ok(Self {
            fits,
            arma_appropriate: delta >= DELTA_AIC_THRESHOLD,
            delta_aic_vs_white_noise: delta,
        })
    }

    pub fn best(&self) -> &ArmaFit {
        &self.fits[0]
    }
}

/// Fits all four candidates and ranks them.
pub fn screen(values: &[f64]) -> Result<AicScreenResult> {
    let (mu, dev) = prepare(values)?;
    let fits = ArmaKind::ALL
        .iter()
        .map(|&kind| fit_prepared(mu, &dev, kind))
        .collect::<Result<Vec<_>>>()?;
    AicScreenResult::from_fits(fits)
}
