//! Closed-form outage probabilities obtained by integrating `K(t)` exactly
//! against the fading density: a single Rayleigh link and the two-branch
//! MRC link whose combined SNR is hypoexponential.
//!
//! Both forms write `eps = c * integral_{max(rho_lo, 0)}^{rho_hi} F(t) dt`
//! with `c` the slope of `K` and `F` the CDF of the integration variable.
//! When `rho_lo >= 0` that integral is evaluated in the classic
//! exponential/`tau`/`xi`/`lambda` arrangement; when the lower breakpoint
//! falls below zero (very low rates) the clipped integral is used instead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb_core::SnrValue;
use crate::linearization::{linearize, linearize_snr_domain, LinConvention, LinearizationParams};

/// Relative gap below which two means are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Relative gap below which the unequal-means branch would lose too much
/// precision to the `1 / (omega_z - omega_y)` factor; such inputs are routed
/// to the equal-means branch at the midpoint mean.
pub const CANCELLATION_GUARD: f64 = 1e-6;

/// Slack allowed outside [0, 1] before a result is treated as a bug.
pub const ROUND_OFF_SLACK: f64 = 1e-12;

/// Means of the two exponential SNRs summed by MRC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypoexpParams {
    pub omega_z: f64,
    pub omega_y: f64,
    pub equal_means: bool,
}

impl HypoexpParams {
    pub fn new(omega_z: f64, omega_y: f64) -> Result<Self> {
        for (name, v) in [("omega_z", omega_z), ("omega_y", omega_y)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(name, format!("expected a finite positive mean, got {v}")));
            }
        }
        Ok(HypoexpParams {
            omega_z,
            omega_y,
            equal_means: relative_gap(omega_z, omega_y) <= TIE_TOLERANCE,
        })
    }

    fn use_equal_branch(&self) -> bool {
        self.equal_means || relative_gap(self.omega_z, self.omega_y) <= CANCELLATION_GUARD
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.omega_z + self.omega_y)
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.max(b)
}

/// Density of `W = Z + Y` for independent exponentials with the given means.
pub fn hypoexp_pdf(w: f64, params: &HypoexpParams) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::domain("w", format!("expected w >= 0, got {w}")));
    }
    Ok(hypoexp_pdf_unchecked(w, params))
}

pub(crate) fn hypoexp_pdf_unchecked(w: f64, p: &HypoexpParams) -> f64 {
    if p.equal_means {
        let o = p.omega_z;
        return w / (o * o) * (-w / o).exp();
    }
    let (oz, oy) = (p.omega_z, p.omega_y);
    // [e^{-w/oz} - e^{-w/oy}] / (oz - oy), factored to avoid cancellation
    let d = 1.0 / oy - 1.0 / oz;
    let v = -(-w / oz).exp() * (-w * d).exp_m1() / (oz - oy);
    v.max(0.0)
}

/// CDF of `W = Z + Y`.
pub fn hypoexp_cdf(w: f64, p: &HypoexpParams) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if p.equal_means {
        let x = w / p.omega_z;
        return (-(-x).exp_m1() - x * (-x).exp()).clamp(0.0, 1.0);
    }
    let (oz, oy) = (p.omega_z, p.omega_y);
    let tail = (oz * (-w / oz).exp() - oy * (-w / oy).exp()) / (oz - oy);
    (1.0 - tail).clamp(0.0, 1.0)
}

pub(crate) fn finalize(op: &'static str, v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::numeric(op, "result is NaN"));
    }
    if v < -ROUND_OFF_SLACK || v > 1.0 + ROUND_OFF_SLACK {
        return Err(Error::numeric(op, format!("probability {v:e} outside [0, 1] beyond round-off")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Outage of one link whose SNR is exponential with mean `avg_snr`.
///
/// With `c = zeta / sqrt(2 pi)` and half-width `h = sqrt(pi / 2) / zeta`,
/// this is `1 - c exp(-theta) 2 sinh(h)`, evaluated as
/// `1 - c exp(-rho_lo) (1 - exp(-2h))` so neither large nor tiny `zeta`
/// overflows.
pub fn rayleigh_outage(n: f64, rate: f64, avg_snr: SnrValue, convention: LinConvention) -> Result<f64> {
    let p = linearize(n, rate, avg_snr, convention)?;
    finalize("rayleigh_outage", rayleigh_from_params(&p))
}

pub(crate) fn rayleigh_from_params(p: &LinearizationParams) -> f64 {
    let c = p.slope();
    let h = p.half_width();
    if p.rho_lo >= 0.0 {
        1.0 - c * (-p.rho_lo).exp() * (-(-2.0 * h).exp_m1())
    } else {
        // K(0) < 1: eps = c * integral_0^rho_hi (1 - e^{-t}) dt
        c * (p.rho_hi + (-p.rho_hi).exp_m1())
    }
}

/// Which algebraic form of the MRC closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MrcFormula {
    /// Exact integral of the same `K` used by [`rayleigh_outage`]: the slope
    /// parameter in every `tau`/`xi`/`lambda` term is `zeta = sqrt(2 pi) mu`,
    /// and the lower limit is clipped at zero.
    #[default]
    Rederived,
    /// The published arrangement taken literally: `mu` in the slope terms,
    /// breakpoints `theta -/+ sqrt(pi/2) / mu`, no clipping. It integrates a
    /// `K` whose slope is `sqrt(2 pi)` times shallower than the one behind
    /// the single-link form; kept for comparison only.
    Printed,
    /// Rederived with the sign of `lambda_2` flipped. Exists so the
    /// validation suite can prove it detects a corrupted term.
    #[doc(hidden)]
    FaultLambda2Sign,
}

/// Outage of the MRC-combined S-D plus R-D signal.
pub fn mrc_pair_outage(n: f64, rate: f64, params: &HypoexpParams, convention: LinConvention) -> Result<f64> {
    mrc_pair_outage_with(n, rate, params, convention, MrcFormula::Rederived)
}

pub fn mrc_pair_outage_with(
    n: f64,
    rate: f64,
    params: &HypoexpParams,
    convention: LinConvention,
    formula: MrcFormula,
) -> Result<f64> {
    let lin = linearize_snr_domain(n, rate, convention)?;
    let v = match formula {
        MrcFormula::Printed => {
            let slot = lin.mu;
            let half = (PI / 2.0).sqrt() / slot;
            let b = Breaks {
                theta: lin.theta,
                lo: lin.theta - half,
                hi: lin.theta + half,
                slot,
            };
            mrc_tabulated(&b, params, false)
        }
        MrcFormula::Rederived | MrcFormula::FaultLambda2Sign => {
            let b = Breaks {
                theta: lin.theta,
                lo: lin.rho_lo,
                hi: lin.rho_hi,
                slot: lin.zeta,
            };
            if b.lo >= 0.0 {
                mrc_tabulated(&b, params, formula == MrcFormula::FaultLambda2Sign)
            } else {
                mrc_clipped(&b, params)
            }
        }
    };
    finalize("mrc_pair_outage", v)
}

/// Threshold, breakpoints and the slope parameter that fills the `mu` slot of
/// the tabulated form (the linear piece is `1/2 - slot/sqrt(2pi) (t - theta)`).
struct Breaks {
    theta: f64,
    lo: f64,
    hi: f64,
    slot: f64,
}

fn mrc_tabulated(b: &Breaks, p: &HypoexpParams, flip_lambda2: bool) -> f64 {
    let s2pi = (2.0 * PI).sqrt();
    let (th, lo, hi, m) = (b.theta, b.lo, b.hi, b.slot);
    if p.use_equal_branch() {
        let o = p.midpoint();
        let el = (-lo / o).exp();
        let eh = (-hi / o).exp();
        let tau = hi * hi * eh - lo * lo * el - th * hi * eh + th * lo * el;
        let xi = hi * eh - lo * el + o * eh - o * el;
        1.0 - 0.5 * (el + eh) - lo * el / o + (lo * el - hi * eh) / (2.0 * o)
            + m * th * (el - eh) / s2pi
            + 2.0 * m * xi / s2pi
            + m * tau / (o * s2pi)
    } else {
        let (oz, oy) = (p.omega_z, p.omega_y);
        let l1 = (m * hi + m * oz - m * th) / s2pi - 0.5;
        let mut l2 = (m * th - m * lo - m * oz) / s2pi - 0.5;
        if flip_lambda2 {
            l2 = -l2;
        }
        let l3 = 0.5 - (m * hi + m * oy - m * th) / s2pi;
        let l4 = 0.5 + (m * lo + m * oy - m * th) / s2pi;
        let bracket = oz - oy
            + oz * (-hi / oz).exp() * l1
            + oz * (-lo / oz).exp() * l2
            + oy * (-hi / oy).exp() * l3
            + oy * (-lo / oy).exp() * l4;
        bracket / (oz - oy)
    }
}

/// `c * integral_0^hi F(t) dt` for a lower breakpoint below zero.
fn mrc_clipped(b: &Breaks, p: &HypoexpParams) -> f64 {
    let c = b.slot / (2.0 * PI).sqrt();
    let hi = b.hi;
    // integral_0^hi (1 - F(t)) dt
    let survival = if p.use_equal_branch() {
        let o = p.midpoint();
        -2.0 * o * (-hi / o).exp_m1() - hi * (-hi / o).exp()
    } else {
        let (oz, oy) = (p.omega_z, p.omega_y);
        (-oz * oz * (-hi / oz).exp_m1() + oy * oy * (-hi / oy).exp_m1()) / (oz - oy)
    };
    c * (hi - survival)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr(x: f64) -> SnrValue {
        SnrValue::new(x).unwrap()
    }

    // 40-digit values of the integral of K against the fading density,
    // computed with an arbitrary-precision quadrature independent of this code.
    const RAY_500_05_10_VERBATIM: f64 = 0.040_566_582_975_615_732_057;
    const MRC_500_05_7_3_VERBATIM: f64 = 0.003_861_670_989_520_564_081;
    const MRC_500_05_7_3_BITS: f64 = 0.003_847_030_771_634_297_974;

    #[test]
    fn rayleigh_frozen_value() {
        let v = rayleigh_outage(500.0, 0.5, snr(10.0), LinConvention::PaperVerbatim).unwrap();
        assert!((v - RAY_500_05_10_VERBATIM).abs() < 1e-13);
    }

    #[test]
    fn rayleigh_limits() {
        assert!(rayleigh_outage(500.0, 0.5, snr(1e9), LinConvention::PaperVerbatim).unwrap() <= 1e-6);
        assert!(rayleigh_outage(500.0, 0.5, snr(1e-9), LinConvention::PaperVerbatim).unwrap() >= 1.0 - 1e-6);
        assert!(rayleigh_outage(500.0, 0.0, snr(1.0), LinConvention::PaperVerbatim).is_err());
    }

    #[test]
    fn rayleigh_matches_sinh_form() {
        for conv in LinConvention::ALL {
            let p = linearize(500.0, 0.5, snr(10.0), conv).unwrap();
            let z = p.zeta;
            let x = (PI / (2.0 * z * z)).sqrt();
            let printed = 1.0 - z / (2.0 * PI).sqrt() * (-p.theta).exp() * (x.exp() - (-x).exp());
            let v = rayleigh_outage(500.0, 0.5, snr(10.0), conv).unwrap();
            assert!((v - printed).abs() < 1e-14);
        }
    }

    #[test]
    fn mrc_frozen_values() {
        let h = HypoexpParams::new(7.0, 3.0).unwrap();
        let v = mrc_pair_outage(500.0, 0.5, &h, LinConvention::PaperVerbatim).unwrap();
        assert!((v - MRC_500_05_7_3_VERBATIM).abs() < 1e-13);
        let v = mrc_pair_outage(500.0, 0.5, &h, LinConvention::BitsConsistent).unwrap();
        assert!((v - MRC_500_05_7_3_BITS).abs() < 1e-13);
    }

    #[test]
    fn mrc_branch_continuity() {
        for conv in LinConvention::ALL {
            let eq = mrc_pair_outage(500.0, 0.5, &HypoexpParams::new(7.0, 7.0).unwrap(), conv).unwrap();
            let h = HypoexpParams::new(7.000001, 7.0).unwrap();
            assert!(!h.equal_means);
            let un = mrc_pair_outage(500.0, 0.5, &h, conv).unwrap();
            assert!(((un - eq) / eq).abs() < 1e-4);
            // just outside the cancellation guard, the unequal formula runs
            let h = HypoexpParams::new(7.0 * (1.0 + 3e-6), 7.0).unwrap();
            let un = mrc_pair_outage(500.0, 0.5, &h, conv).unwrap();
            assert!(((un - eq) / eq).abs() < 1e-4);
        }
    }

    #[test]
    fn mrc_vanishes_at_high_snr() {
        let h = HypoexpParams::new(1e9, 1e9).unwrap();
        assert!(mrc_pair_outage(500.0, 0.5, &h, LinConvention::PaperVerbatim).unwrap() <= 1e-6);
    }

    #[test]
    fn mrc_symmetric_in_means() {
        let a = mrc_pair_outage(200.0, 1.0, &HypoexpParams::new(4.0, 9.0).unwrap(), LinConvention::BitsConsistent).unwrap();
        let b = mrc_pair_outage(200.0, 1.0, &HypoexpParams::new(9.0, 4.0).unwrap(), LinConvention::BitsConsistent).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn printed_form_disagrees_with_rederived() {
        let h = HypoexpParams::new(7.0, 3.0).unwrap();
        let a = mrc_pair_outage_with(500.0, 0.5, &h, LinConvention::PaperVerbatim, MrcFormula::Printed).unwrap();
        let b = mrc_pair_outage(500.0, 0.5, &h, LinConvention::PaperVerbatim).unwrap();
        assert!((a - b).abs() > 1e-5);
    }

    #[test]
    fn tiny_rate_is_finite() {
        // rho_lo < 0 here
        let p = linearize(10000.0, 1e-4, snr(1.0), LinConvention::PaperVerbatim).unwrap();
        assert!(p.rho_lo < 0.0);
        let v = rayleigh_outage(10000.0, 1e-4, snr(1.0), LinConvention::PaperVerbatim).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        for (a, b) in [(1.0, 1.0), (2.0, 0.5)] {
            let h = HypoexpParams::new(a, b).unwrap();
            let v = mrc_pair_outage(10000.0, 1e-4, &h, LinConvention::PaperVerbatim).unwrap();
            assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn pdf_and_cdf() {
        for (a, b) in [(5.0, 5.0), (7.0, 3.0)] {
            let h = HypoexpParams::new(a, b).unwrap();
            assert_eq!(hypoexp_pdf(0.0, &h).unwrap(), 0.0);
            assert_eq!(hypoexp_cdf(0.0, &h), 0.0);
            assert!(hypoexp_pdf(-1.0, &h).is_err());
            // CDF derivative matches the density
            for w in [0.3, 2.0, 11.0] {
                let d = 1e-5;
                let fd = (hypoexp_cdf(w + d, &h) - hypoexp_cdf(w - d, &h)) / (2.0 * d);
                assert!((fd - hypoexp_pdf(w, &h).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn finalize_policy() {
        assert_eq!(finalize("t", -1e-13).unwrap(), 0.0);
        assert_eq!(finalize("t", 1.0 + 1e-13).unwrap(), 1.0);
        assert!(matches!(finalize("t", 1.0 + 1e-9), Err(Error::Numeric { .. })));
        assert!(finalize("t", f64::NAN).is_err());
    }
}
