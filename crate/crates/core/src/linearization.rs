//! Piecewise-linear surrogate `K(t)` for the outage integrand `Q(g(t))`.
//!
//! `K` is 1 below `rho_lo`, 0 above `rho_hi`, and linear in between with
//! value 1/2 at the threshold `theta`:
//!
//! ```text
//! K(t) = 1/2 - zeta / sqrt(2 pi) * (t - theta),   rho_lo < t < rho_hi
//! rho_hi - theta = theta - rho_lo = sqrt(pi / 2) / zeta
//! ```
//!
//! `t` lives in the domain of the integration variable. For a single link it
//! is the unit-mean fading gain, `power` is the link's average SNR and
//! `theta = (2^R - 1) / power`. For SNR-domain use (the MRC combined link)
//! `power = 1`, so `theta = 2^R - 1` and the slope in SNR units is `mu`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb_core::SnrValue;

/// Which base the slope parameter `mu` is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinConvention {
    /// `mu = sqrt(n / 2pi) * (e^(2R) - 1)^(-1/2)`.
    #[default]
    PaperVerbatim,
    /// `mu = sqrt(n / 2pi) * (2^(2R) - 1)^(-1/2)`: the exact slope of
    /// `Q(g(snr))` at `snr = 2^R - 1` when `R` is in bits.
    BitsConsistent,
}

impl LinConvention {
    pub const ALL: [LinConvention; 2] = [LinConvention::PaperVerbatim, LinConvention::BitsConsistent];

    pub fn as_str(self) -> &'static str {
        match self {
            LinConvention::PaperVerbatim => "paper",
            LinConvention::BitsConsistent => "bits",
        }
    }

    /// Slope parameter `mu` for blocklength `n` and rate `rate` (bits).
    pub fn mu(self, n: f64, rate: f64) -> f64 {
        let growth = match self {
            LinConvention::PaperVerbatim => (2.0 * rate).exp_m1(),
            LinConvention::BitsConsistent => (2.0 * rate * std::f64::consts::LN_2).exp_m1(),
        };
        (n / (2.0 * PI)).sqrt() / growth.sqrt()
    }
}

impl std::fmt::Display for LinConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LinConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" | "paper_verbatim" | "paper-verbatim" => Ok(LinConvention::PaperVerbatim),
            "bits" | "bits_consistent" | "bits-consistent" => Ok(LinConvention::BitsConsistent),
            other => Err(Error::domain("convention", format!("unknown convention '{other}' (expected paper|bits)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationParams {
    /// Threshold where `K = 1/2`, in the domain of the integration variable.
    pub theta: f64,
    /// Convention-dependent slope parameter (SNR units).
    pub mu: f64,
    /// Lower breakpoint; may be negative for very low rates.
    pub rho_lo: f64,
    /// Upper breakpoint.
    pub rho_hi: f64,
    /// `power * sqrt(2 pi) * mu`, the slope parameter in the integration domain.
    pub zeta: f64,
    pub convention: LinConvention,
    pub n: f64,
    pub rate: f64,
    /// Power entering `theta` and `zeta`; 1 for SNR-domain use.
    pub power: f64,
}

impl LinearizationParams {
    /// Magnitude of the slope of the linear segment, `zeta / sqrt(2 pi)`.
    #[inline]
    pub fn slope(&self) -> f64 {
        self.zeta / (2.0 * PI).sqrt()
    }

    /// Distance from `theta` to either breakpoint.
    #[inline]
    pub fn half_width(&self) -> f64 {
        (PI / 2.0).sqrt() / self.zeta
    }
}

pub fn linearize(n: f64, rate: f64, power: SnrValue, convention: LinConvention) -> Result<LinearizationParams> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::domain("n", format!("expected n >= 1, got {n}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::domain("rate", format!("expected finite rate > 0, got {rate}")));
    }
    let p = power.value();
    if p <= 0.0 {
        return Err(Error::domain("power", "expected power > 0"));
    }
    let mu = convention.mu(n, rate);
    let theta = (rate * std::f64::consts::LN_2).exp_m1() / p;
    let zeta = p * (2.0 * PI).sqrt() * mu;
    let half = (PI / 2.0).sqrt() / zeta;
    Ok(LinearizationParams {
        theta,
        mu,
        rho_lo: theta - half,
        rho_hi: theta + half,
        zeta,
        convention,
        n,
        rate,
        power: p,
    })
}

/// Linearization over the SNR axis itself (`power = 1`).
pub fn linearize_snr_domain(n: f64, rate: f64, convention: LinConvention) -> Result<LinearizationParams> {
    linearize(n, rate, SnrValue::new(1.0)?, convention)
}

/// Evaluates `K(t)`.
pub fn k_eval(t: f64, params: &LinearizationParams) -> f64 {
    if t <= params.rho_lo {
        1.0
    } else if t >= params.rho_hi {
        0.0
    } else {
        (0.5 - params.slope() * (t - params.theta)).clamp(0.0, 1.0)
    }
}
