//! Scalar finite-blocklength primitives for the AWGN channel.
//!
//! Rates are in bits per channel use throughout. The normal approximation
//! ties blocklength `n`, error probability `eps` and SNR `rho` together as
//!
//! ```text
//! R*(n, eps) = C(rho) - sqrt(V(rho) / n) * Qinv(eps) * log2(e)
//! eps        = Q( sqrt(n) * (C(rho) - R) / (sqrt(V(rho)) * log2(e)) )
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, LOG2_E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest blocklength for which the normal approximation is trusted.
pub const MIN_TRUSTED_BLOCKLENGTH: u32 = 100;

/// A linear power ratio (never dB).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SnrValue(f64);

impl SnrValue {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::domain(
                "snr",
                format!("expected a finite non-negative linear SNR, got {value}"),
            ));
        }
        Ok(SnrValue(value))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::domain("snr_db", format!("non-finite value {db}")));
        }
        SnrValue::new(10f64.powf(db / 10.0))
    }

    pub fn to_db(self) -> f64 {
        10.0 * self.0.log10()
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SnrValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        SnrValue::new(value)
    }
}

impl From<SnrValue> for f64 {
    fn from(s: SnrValue) -> f64 {
        s.0
    }
}

/// Payload size `k` over blocklength `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    k: u32,
    n: u32,
    rate: f64,
}

impl RateSpec {
    /// Builds `k / n`, rejecting `n < 100` where the normal approximation is
    /// not trusted. Use [`RateSpec::with_short_blocklength`] to override.
    pub fn new(k: u32, n: u32) -> Result<Self> {
        if n < MIN_TRUSTED_BLOCKLENGTH {
            return Err(Error::domain(
                "n",
                format!("blocklength {n} is below {MIN_TRUSTED_BLOCKLENGTH}; the normal approximation is not trusted there"),
            ));
        }
        Self::build(k, n)
    }

    /// Accepts any `n >= 1`, logging a warning when `n < 100`.
    pub fn with_short_blocklength(k: u32, n: u32) -> Result<Self> {
        if n < MIN_TRUSTED_BLOCKLENGTH {
            log::warn!("blocklength {n} < {MIN_TRUSTED_BLOCKLENGTH}: normal approximation may be inaccurate");
        }
        Self::build(k, n)
    }

    fn build(k: u32, n: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k", "payload must contain at least one bit"));
        }
        if n == 0 {
            return Err(Error::domain("n", "blocklength must be positive"));
        }
        Ok(RateSpec {
            k,
            n,
            rate: f64::from(k) / f64::from(n),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Bits per channel use.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

fn check_snr(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::domain("rho", format!("expected finite rho >= 0, got {rho}")));
    }
    Ok(())
}

/// `log2(1 + rho)` in bits per channel use.
pub fn shannon_capacity(rho: f64) -> Result<f64> {
    check_snr(rho)?;
    Ok(capacity_unchecked(rho))
}

/// `rho (2 + rho) / (1 + rho)^2`.
pub fn channel_dispersion(rho: f64) -> Result<f64> {
    check_snr(rho)?;
    Ok(dispersion_unchecked(rho))
}

#[inline]
pub(crate) fn capacity_unchecked(rho: f64) -> f64 {
    rho.ln_1p() * LOG2_E
}

#[inline]
pub(crate) fn dispersion_unchecked(rho: f64) -> f64 {
    // 1 - 1/(1+rho)^2, written to keep precision for small rho.
    let u = 1.0 + rho;
    rho * (2.0 + rho) / (u * u)
}

/// Gaussian tail probability `Q(w) = P(N(0,1) > w)`.
pub fn q_func(w: f64) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::domain("w", format!("non-finite argument {w}")));
    }
    Ok(q_unchecked(w))
}

#[inline]
pub(crate) fn q_unchecked(w: f64) -> f64 {
    0.5 * libm::erfc(w * FRAC_1_SQRT_2)
}

#[inline]
fn std_normal_pdf(w: f64) -> f64 {
    (-0.5 * w * w).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_func`] on `(0, 1)`.
///
/// Starts from the Abramowitz–Stegun rational guess and refines with Newton
/// steps on `ln Q(w) - ln p`, falling back to bisection whenever a step leaves
/// the current bracket.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("p", format!("expected 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-upper_tail_inv(1.0 - p));
    }
    Ok(upper_tail_inv(p))
}

/// Solves `Q(w) = p` for `0 < p < 0.5`, so `w > 0`.
fn upper_tail_inv(p: f64) -> f64 {
    let target = p.ln();
    let t = (-2.0 * target).sqrt();
    let mut w = t - (2.515517 + 0.802853 * t + 0.010328 * t * t)
        / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    w = w.clamp(lo, hi);

    for _ in 0..200 {
        let q = q_unchecked(w);
        if q <= 0.0 {
            // Underflow: we are far past the root.
            hi = w;
            w = 0.5 * (lo + hi);
            continue;
        }
        let f = q.ln() - target;
        if f > 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        // d/dw ln Q(w) = -phi(w) / Q(w)
        let slope = -std_normal_pdf(w) / q;
        let mut next = w - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - w).abs() <= 1e-15 * w.abs().max(1.0) {
            return next;
        }
        w = next;
    }
    w
}

fn check_blocklength(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::domain("n", format!("expected n >= 1, got {n}")));
    }
    Ok(())
}

fn check_positive_snr(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::domain("rho", format!("expected finite rho > 0, got {rho}")));
    }
    Ok(())
}

/// Normal-approximation maximum coding rate in bits per channel use.
///
/// The result may be negative for very small `eps` and short blocks; it is
/// returned as-is.
pub fn max_coding_rate(n: f64, eps: f64, rho: f64) -> Result<f64> {
    check_blocklength(n)?;
    check_positive_snr(rho)?;
    let qinv = q_inv(eps).map_err(|_| Error::domain("eps", format!("expected 0 < eps < 1, got {eps}")))?;
    Ok(capacity_unchecked(rho) - (dispersion_unchecked(rho) / n).sqrt() * qinv * LOG2_E)
}

/// Block error probability of an AWGN channel at SNR `rho` when coding at
/// `rate` bits per channel use over `n` channel uses.
pub fn awgn_outage(n: f64, rate: f64, rho: f64) -> Result<f64> {
    check_blocklength(n)?;
    check_positive_snr(rho)?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::domain("rate", format!("expected finite rate > 0, got {rate}")));
    }
    Ok(outage_at_snr(n, rate, rho))
}

/// Total version of [`awgn_outage`] used inside integrands and Monte Carlo
/// loops: accepts `rho >= 0` and returns 1 at `rho = 0`.
#[inline]
pub(crate) fn outage_at_snr(n: f64, rate: f64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 1.0;
    }
    let v = dispersion_unchecked(rho);
    let arg = n.sqrt() * (capacity_unchecked(rho) - rate) / (v.sqrt() * LOG2_E);
    if arg.is_nan() {
        return 1.0;
    }
    // erfc saturates cleanly at +-inf
    0.5 * libm::erfc(arg * FRAC_1_SQRT_2)
}

/// The SNR at which the Q-argument changes sign, i.e. `C(rho) = rate`.
#[inline]
pub(crate) fn snr_threshold(rate: f64) -> f64 {
    (rate * std::f64::consts::LN_2).exp_m1()
}
