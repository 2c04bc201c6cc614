//! Experiment drivers: power-split optimization, reliability regions over
//! `(k, n)` and one-dimensional parameter sweeps.
//!
//! Grid cells are evaluated on the rayon pool and collected in input order,
//! so every table is deterministic for deterministic backends. Monte Carlo
//! cells all reuse the backend's seed (common random numbers), which keeps
//! neighbouring cells comparable and the output reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb_core::SnrValue;
use crate::linearization::LinConvention;
use crate::oracles::OutageEstimate;
use crate::protocols::{protocol_outage, Backend, ProtocolKind, TopologyConfig};

pub const MAX_COARSE_STEP: f64 = 0.05;
pub const MAX_REFINE_TOL: f64 = 1e-3;
/// Rates above this many bits per channel use are rejected as nonsense.
pub const MAX_RATE_BOUND: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaOptimum {
    pub eta_star: f64,
    pub eps_star: f64,
    pub protocol: ProtocolKind,
    /// Coarse-grid samples `(eta, outage)`, ascending in `eta`.
    pub profile: Vec<(f64, f64)>,
    /// The coarse profile has more than one local minimum.
    pub multimodal: bool,
}

fn eval_at_eta(
    protocol: ProtocolKind,
    template: &TopologyConfig,
    backend: &Backend,
    conv: LinConvention,
    eta: f64,
) -> Result<f64> {
    let cfg = TopologyConfig { eta, ..*template };
    Ok(protocol_outage(protocol, &cfg, backend, conv)?.value)
}

/// Coarse grid `step, 2 step, ..., 1`.
fn coarse_grid(step: f64) -> Vec<f64> {
    let count = (1.0 / step).floor() as usize;
    let mut grid: Vec<f64> = (1..=count).map(|i| i as f64 * step).filter(|e| *e < 1.0 - 1e-12).collect();
    grid.push(1.0);
    grid
}

/// Strict local minima of a sampled profile, endpoints included.
fn local_minima(values: &[f64]) -> usize {
    let n = values.len();
    let tol = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs());
    // collapse runs of equal values first so plateaus count once
    let mut runs: Vec<f64> = Vec::with_capacity(n);
    for &v in values {
        match runs.last() {
            Some(&last) if (v - last).abs() <= tol(v, last) => {}
            _ => runs.push(v),
        }
    }
    (0..runs.len())
        .filter(|&i| {
            let left = i == 0 || runs[i - 1] > runs[i];
            let right = i + 1 == runs.len() || runs[i + 1] > runs[i];
            left && right
        })
        .count()
}

/// Minimizes outage over the source power share `eta`.
///
/// Scans `eta` on a coarse grid over `[coarse_step, 1]`, then runs a golden
/// section search on the bracket around the best grid point until the
/// bracket is narrower than `refine_tol`. Only deterministic backends are
/// accepted.
pub fn optimize_eta(
    protocol: ProtocolKind,
    template: &TopologyConfig,
    backend: &Backend,
    conv: LinConvention,
    coarse_step: f64,
    refine_tol: f64,
) -> Result<EtaOptimum> {
    if !(coarse_step > 0.0 && coarse_step <= MAX_COARSE_STEP) {
        return Err(Error::domain(
            "coarse_step",
            format!("expected 0 < coarse_step <= {MAX_COARSE_STEP}, got {coarse_step}"),
        ));
    }
    if !(refine_tol > 0.0 && refine_tol <= MAX_REFINE_TOL) {
        return Err(Error::domain(
            "refine_tol",
            format!("expected 0 < refine_tol <= {MAX_REFINE_TOL}, got {refine_tol}"),
        ));
    }
    if !backend.is_deterministic() {
        return Err(Error::domain("backend", "optimization needs a deterministic backend (closed or quad)"));
    }
    template.validate()?;

    let etas = coarse_grid(coarse_step);
    let values = etas
        .par_iter()
        .map(|&eta| eval_at_eta(protocol, template, backend, conv, eta))
        .collect::<Result<Vec<f64>>>()?;
    let profile: Vec<(f64, f64)> = etas.iter().copied().zip(values.iter().copied()).collect();
    let multimodal = local_minima(&values) > 1;

    // ties go to the larger eta, so a flat profile (DT) reports eta* = 1
    let best = (0..values.len())
        .reduce(|b, i| if values[i] <= values[b] { i } else { b })
        .expect("grid is non-empty");
    let (mut eta_star, mut eps_star) = profile[best];

    let lo = if best == 0 { etas[0] } else { etas[best - 1] };
    let hi = etas[(best + 1).min(etas.len() - 1)];
    if hi > lo {
        let f = |eta: f64| eval_at_eta(protocol, template, backend, conv, eta);
        let (eta, eps) = golden_section(f, lo, hi, refine_tol)?;
        if eps < eps_star {
            eta_star = eta;
            eps_star = eps;
        }
    }

    Ok(EtaOptimum {
        eta_star,
        eps_star,
        protocol,
        profile,
        multimodal,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization on `[a, b]`; returns the best point seen.
fn golden_section<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// How `eta` is chosen per region cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EtaMode {
    /// One value for every cell.
    Fixed(f64),
    /// Optimize `eta` independently in every cell.
    Optimize { coarse_step: f64, refine_tol: f64 },
}

impl Default for EtaMode {
    fn default() -> Self {
        EtaMode::Fixed(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub protocol: ProtocolKind,
    pub snr: SnrValue,
    pub convention: LinConvention,
    pub k_values: Vec<u32>,
    pub n_values: Vec<u32>,
    /// `1 - outage`, one row per `n`, one column per `k`; NaN where the cell
    /// failed.
    pub success: Vec<Vec<f64>>,
    /// Outage per cell, kept separately so small values keep full precision.
    pub outage: Vec<Vec<f64>>,
    /// `eta` used in each cell.
    pub eta: Vec<Vec<f64>>,
    /// Failure message per cell, `None` on success.
    pub errors: Vec<Vec<Option<String>>>,
}

impl RegionGrid {
    pub fn failed_cells(&self) -> usize {
        self.errors.iter().flatten().filter(|e| e.is_some()).count()
    }
}

fn check_ascending(field: &'static str, values: &[u32]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::domain(field, "grid must not be empty"));
    }
    if values[0] == 0 {
        return Err(Error::domain(field, "grid values must be positive"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain(field, "grid must be strictly ascending"));
    }
    Ok(())
}

/// Success probability over a `(k, n)` grid at `eta = 0.5`, with both hops
/// using blocklength `n`.
pub fn reliability_region(
    protocol: ProtocolKind,
    snr: SnrValue,
    n_values: &[u32],
    k_values: &[u32],
    backend: &Backend,
    conv: LinConvention,
) -> Result<RegionGrid> {
    let template = TopologyConfig {
        total_snr: snr,
        ..TopologyConfig::default()
    };
    reliability_region_with(protocol, &template, n_values, k_values, backend, conv, EtaMode::default())
}

/// Like [`reliability_region`], taking `beta`, `alpha` and the short-block
/// policy from `template` and `eta` from `mode`.
pub fn reliability_region_with(
    protocol: ProtocolKind,
    template: &TopologyConfig,
    n_values: &[u32],
    k_values: &[u32],
    backend: &Backend,
    conv: LinConvention,
    mode: EtaMode,
) -> Result<RegionGrid> {
    check_ascending("n_values", n_values)?;
    check_ascending("k_values", k_values)?;
    let (k_max, n_min) = (k_values[k_values.len() - 1], n_values[0]);
    if u64::from(k_max) >= u64::from(MAX_RATE_BOUND) * u64::from(n_min) {
        return Err(Error::domain(
            "k_values",
            format!("k = {k_max} against n = {n_min} exceeds {MAX_RATE_BOUND} bits per channel use"),
        ));
    }
    match mode {
        EtaMode::Fixed(eta) if !(eta > 0.0 && eta <= 1.0) => {
            return Err(Error::domain("eta", format!("expected 0 < eta <= 1, got {eta}")));
        }
        EtaMode::Optimize { .. } if !backend.is_deterministic() => {
            return Err(Error::domain("backend", "per-cell optimization needs a deterministic backend"));
        }
        _ => {}
    }

    let cells: Vec<(u32, u32)> = n_values
        .iter()
        .flat_map(|&n| k_values.iter().map(move |&k| (n, k)))
        .collect();
    let results: Vec<(f64, f64, Option<String>)> = cells
        .par_iter()
        .map(|&(n, k)| {
            let cfg = TopologyConfig {
                n_s: n,
                n_r: n,
                k,
                ..*template
            };
            let outcome = match mode {
                EtaMode::Fixed(eta) => {
                    let cfg = TopologyConfig { eta, ..cfg };
                    protocol_outage(protocol, &cfg, backend, conv).map(|e| (eta, e.value))
                }
                EtaMode::Optimize {
                    coarse_step,
                    refine_tol,
                } => optimize_eta(protocol, &cfg, backend, conv, coarse_step, refine_tol)
                    .map(|o| (o.eta_star, o.eps_star)),
            };
            match outcome {
                Ok((eta, eps)) => (eps, eta, None),
                Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
            }
        })
        .collect();

    let cols = k_values.len();
    let mut success = Vec::with_capacity(n_values.len());
    let mut outage = Vec::with_capacity(n_values.len());
    let mut eta = Vec::with_capacity(n_values.len());
    let mut errors = Vec::with_capacity(n_values.len());
    for row in results.chunks(cols) {
        success.push(row.iter().map(|c| 1.0 - c.0).collect());
        outage.push(row.iter().map(|c| c.0).collect());
        eta.push(row.iter().map(|c| c.1).collect());
        errors.push(row.iter().map(|c| c.2.clone()).collect());
    }
    Ok(RegionGrid {
        protocol,
        snr: template.total_snr,
        convention: conv,
        k_values: k_values.to_vec(),
        n_values: n_values.to_vec(),
        success,
        outage,
        eta,
        errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Total SNR in dB.
    TotalSnrDb,
    /// Blocklength of both hops.
    Blocklength,
    Eta,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::TotalSnrDb => "snr_db",
            SweepAxis::Blocklength => "n",
            SweepAxis::Eta => "eta",
        }
    }

    /// `fixed` with this axis set to `value`.
    pub fn apply(self, fixed: &TopologyConfig, value: f64) -> Result<TopologyConfig> {
        let mut cfg = *fixed;
        match self {
            SweepAxis::TotalSnrDb => cfg.total_snr = SnrValue::from_db(value)?,
            SweepAxis::Blocklength => {
                if !(value.fract() == 0.0 && value >= 1.0 && value <= f64::from(u32::MAX)) {
                    return Err(Error::domain("n", format!("blocklength must be a positive integer, got {value}")));
                }
                cfg.n_s = value as u32;
                cfg.n_r = value as u32;
            }
            SweepAxis::Eta => cfg.eta = value,
        }
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr" | "snr_db" | "snr-db" | "total_snr" => Ok(SweepAxis::TotalSnrDb),
            "n" | "blocklength" => Ok(SweepAxis::Blocklength),
            "eta" => Ok(SweepAxis::Eta),
            other => Err(Error::domain("axis", format!("unknown axis '{other}' (expected snr|n|eta)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub protocol: ProtocolKind,
    pub backend: Backend,
    /// Effective configuration of the cell.
    pub config: TopologyConfig,
    /// NaN when the cell failed.
    pub outage: f64,
    pub std_error: Option<f64>,
    pub error: Option<String>,
}

/// Evaluates every `(value, protocol, backend)` cell; rows come out in that
/// nesting order. Failed cells carry their error instead of aborting.
pub fn sweep(
    protocols: &[ProtocolKind],
    axis: SweepAxis,
    values: &[f64],
    fixed: &TopologyConfig,
    backends: &[Backend],
    conv: LinConvention,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::domain("range", "sweep range must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("range", "sweep range must be finite"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("range", "sweep range must be sorted ascending"));
    }
    if protocols.is_empty() {
        return Err(Error::domain("protocol", "need at least one protocol"));
    }
    if backends.is_empty() {
        return Err(Error::domain("backend", "need at least one backend"));
    }

    let cells: Vec<(f64, ProtocolKind, Backend)> = values
        .iter()
        .flat_map(|&v| {
            protocols
                .iter()
                .flat_map(move |&p| backends.iter().map(move |&b| (v, p, b)))
        })
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(v, protocol, backend)| {
            let mut config = *fixed;
            let result = axis.apply(fixed, v).and_then(|cfg| {
                config = cfg;
                protocol_outage(protocol, &cfg, &backend, conv)
            });
            row(v, protocol, backend, config, result)
        })
        .collect();
    Ok(rows)
}

fn row(
    axis_value: f64,
    protocol: ProtocolKind,
    backend: Backend,
    config: TopologyConfig,
    result: Result<OutageEstimate>,
) -> SweepRow {
    match result {
        Ok(e) => SweepRow {
            axis_value,
            protocol,
            backend,
            config,
            outage: e.value,
            std_error: e.std_error,
            error: None,
        },
        Err(e) => SweepRow {
            axis_value,
            protocol,
            backend,
            config,
            outage: f64::NAN,
            std_error: None,
            error: Some(e.to_string()),
        },
    }
}
