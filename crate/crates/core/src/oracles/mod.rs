//! Independent evaluation backends used to check the closed forms:
//! quadrature of the exact outage expectation, quadrature of the linearized
//! `K(t)`, and seeded Monte Carlo.

pub mod monte_carlo;
pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb_core::{outage_at_snr, snr_threshold, SnrValue};
use crate::linearization::{k_eval, LinConvention, LinearizationParams};
use crate::outage_closed::{hypoexp_cdf, hypoexp_pdf_unchecked, HypoexpParams};

pub use monte_carlo::{fading_outage_mc, McLink, McMode, MonteCarlo};
use quadrature::{integrate_finite, integrate_to_infinity, NODE_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ClosedForm,
    QuadTrueQ,
    QuadLinearized,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub value: f64,
    pub method: Method,
    /// Present iff `method` is Monte Carlo.
    pub std_error: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl OutageEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        OutageEstimate {
            value,
            method,
            std_error: None,
            trials: None,
            seed: None,
        }
    }
}

/// Distribution of the variable `K` (or the true `Q` expression) is
/// integrated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Exponential { mean: f64 },
    Hypoexponential(HypoexpParams),
}

impl Density {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::domain("mean", format!("expected a finite positive mean, got {mean}")));
        }
        Ok(Density::Exponential { mean })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Density::Exponential { mean } => (-x / mean).exp() / mean,
            Density::Hypoexponential(h) => hypoexp_pdf_unchecked(x, h),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Density::Exponential { mean } => -(-x / mean).exp_m1(),
            Density::Hypoexponential(h) => hypoexp_cdf(x, h),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Density::Exponential { mean } => *mean,
            Density::Hypoexponential(h) => h.omega_z + h.omega_y,
        }
    }
}

fn check_tol(abs_tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&abs_tol) {
        return Err(Error::domain("abs_tol", format!("expected abs_tol in [1e-13, 1e-6], got {abs_tol}")));
    }
    Ok(())
}

/// Clamps a quadrature result into [0, 1] when it overshoots by no more than
/// the requested tolerance.
fn to_probability(v: f64, abs_tol: f64) -> Result<f64> {
    if v.is_finite() && v >= -abs_tol && v <= 1.0 + abs_tol {
        return Ok(v.clamp(0.0, 1.0));
    }
    crate::outage_closed::finalize("quadrature", v)
}

/// Exact-`Q` outage of a single Rayleigh link by quadrature.
pub fn fading_outage_quadrature(n: f64, rate: f64, avg_snr: SnrValue, abs_tol: f64) -> Result<OutageEstimate> {
    let density = Density::exponential(avg_snr.value())?;
    true_q_outage_quadrature(n, rate, &density, abs_tol)
}

/// `integral_0^inf Q(sqrt(n) (C(s) - R) / (sqrt(V(s)) log2 e)) f(s) ds` over
/// the SNR `s`, split at the sign change of the Q argument.
pub fn true_q_outage_quadrature(n: f64, rate: f64, density: &Density, abs_tol: f64) -> Result<OutageEstimate> {
    check_tol(abs_tol)?;
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::domain("n", format!("expected n >= 1, got {n}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::domain("rate", format!("expected finite rate > 0, got {rate}")));
    }
    let s0 = snr_threshold(rate);
    // transition width of Q(g(s)) around s0
    let width = 1.0 / LinConvention::BitsConsistent.mu(n, rate);
    let mean = density.mean();
    let mut breaks: Vec<f64> = [-8.0, -2.0, 0.0, 2.0, 8.0]
        .iter()
        .map(|k| s0 + k * width)
        .chain([0.25, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0].iter().map(|m| m * mean))
        .filter(|b| *b > 0.0)
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |s: f64| outage_at_snr(n, rate, s) * density.pdf(s);
    let r = integrate_to_infinity(f, &breaks, abs_tol, NODE_BUDGET)?;
    Ok(OutageEstimate::exact(to_probability(r.value, abs_tol)?, Method::QuadTrueQ))
}

/// Integrates `K(t)` against `density` on `[rho_lo, rho_hi]` by quadrature
/// and adds the closed tail `F(rho_lo)` where `K = 1`.
pub fn linearized_outage_quadrature(params: &LinearizationParams, density: &Density, abs_tol: f64) -> Result<OutageEstimate> {
    check_tol(abs_tol)?;
    let lo = params.rho_lo.max(0.0);
    let hi = params.rho_hi;
    let head = density.cdf(lo);
    let body = if hi > lo {
        let mut breaks = vec![lo];
        if params.theta > lo && params.theta < hi {
            breaks.push(params.theta);
        }
        // resolve the density's own scale inside a wide window
        let mean = density.mean();
        for m in [0.25, 1.0, 4.0] {
            let b = m * mean;
            if b > *breaks.last().unwrap() && b < hi {
                breaks.push(b);
            }
        }
        breaks.push(hi);
        integrate_finite(|t| k_eval(t, params) * density.pdf(t), &breaks, abs_tol, NODE_BUDGET)?.value
    } else {
        0.0
    };
    Ok(OutageEstimate::exact(to_probability(head + body, abs_tol)?, Method::QuadLinearized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::linearize;
    use crate::outage_closed::{mrc_pair_outage, rayleigh_outage};

    fn snr(x: f64) -> SnrValue {
        SnrValue::new(x).unwrap()
    }

    // 40-digit reference from an independent arbitrary-precision quadrature
    const TRUE_Q_500_05_10: f64 = 0.040_768_730_966_325_336_002_5;

    #[test]
    fn true_q_frozen_value() {
        let v = fading_outage_quadrature(500.0, 0.5, snr(10.0), 1e-13).unwrap();
        assert!((v.value - TRUE_Q_500_05_10).abs() < 1e-11, "{}", v.value);
        assert_eq!(v.method, Method::QuadTrueQ);
        assert!(v.std_error.is_none());
    }

    #[test]
    fn true_q_limits() {
        let v = fading_outage_quadrature(500.0, 50.0, snr(1.0), 1e-12).unwrap().value;
        assert!(v >= 1.0 - 1e-9, "{v}");
        assert!(fading_outage_quadrature(500.0, 0.5, snr(1e9), 1e-12).unwrap().value <= 1e-6);
        assert!(fading_outage_quadrature(500.0, 0.5, snr(10.0), 1e-3).is_err());
    }

    #[test]
    fn linearized_limits() {
        let p = linearize(500.0, 0.5, snr(1.0), LinConvention::PaperVerbatim).unwrap();
        let above = Density::exponential(1e9 * p.rho_hi).unwrap();
        assert!(linearized_outage_quadrature(&p, &above, 1e-12).unwrap().value <= 1e-6);
        assert!(p.rho_lo > 0.0);
        let below = Density::exponential(1e-9 * p.rho_lo).unwrap();
        assert!(linearized_outage_quadrature(&p, &below, 1e-12).unwrap().value >= 1.0 - 1e-6);
    }

    #[test]
    fn linearized_matches_rayleigh_closed_form() {
        let p = linearize(500.0, 0.5, snr(10.0), LinConvention::PaperVerbatim).unwrap();
        let q = linearized_outage_quadrature(&p, &Density::exponential(1.0).unwrap(), 1e-13).unwrap();
        let c = rayleigh_outage(500.0, 0.5, snr(10.0), LinConvention::PaperVerbatim).unwrap();
        assert!((q.value - c).abs() < 1e-8);
        assert_eq!(q.method, Method::QuadLinearized);
    }

    #[test]
    fn linearized_matches_mrc_closed_form() {
        for (a, b) in [(7.0, 3.0), (5.0, 5.0)] {
            let h = HypoexpParams::new(a, b).unwrap();
            let p = crate::linearization::linearize_snr_domain(500.0, 0.5, LinConvention::PaperVerbatim).unwrap();
            let q = linearized_outage_quadrature(&p, &Density::Hypoexponential(h), 1e-13).unwrap();
            let c = mrc_pair_outage(500.0, 0.5, &h, LinConvention::PaperVerbatim).unwrap();
            assert!((q.value - c).abs() < 1e-8);
        }
    }

    #[test]
    fn hypoexp_density_moments() {
        for (a, b) in [(5.0, 5.0), (7.0, 3.0)] {
            let d = Density::Hypoexponential(HypoexpParams::new(a, b).unwrap());
            let mass = integrate_to_infinity(|w| d.pdf(w), &[0.0, a + b], 1e-13, NODE_BUDGET).unwrap();
            assert!((mass.value - 1.0).abs() < 1e-9);
            let mean = integrate_to_infinity(|w| w * d.pdf(w), &[0.0, a + b], 1e-12, NODE_BUDGET).unwrap();
            assert!((mean.value - (a + b)).abs() < 1e-8);
        }
    }
}
