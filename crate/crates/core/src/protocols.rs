//! Three-node topology (source S, relay R, destination D) and the outage of
//! each transmission protocol built from the per-link outages.
//!
//! | protocol | outage |
//! |----------|--------|
//! | DT  | `eps_sd` at full power |
//! | DF  | `eps_sr + (1 - eps_sr) eps_rd` |
//! | SC  | `eps_sd eps_sr + (1 - eps_sr) eps_sd eps_rd` |
//! | MRC | `eps_sd eps_sr + (1 - eps_sr) eps_srd` |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb_core::{outage_at_snr, RateSpec, SnrValue};
use crate::linearization::LinConvention;
use crate::oracles::monte_carlo::{draw_gain, McMode, MonteCarlo};
use crate::oracles::{true_q_outage_quadrature, Density, Method, OutageEstimate};
use crate::outage_closed::{mrc_pair_outage, rayleigh_outage, HypoexpParams};

/// Absolute tolerance used when a protocol is evaluated by quadrature.
pub const QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    /// Total transmit SNR budget `P / N0` (linear).
    pub total_snr: SnrValue,
    /// Share of the budget given to the source, in (0, 1].
    pub eta: f64,
    /// S-R distance relative to d_SD = 1; d_RD = 1 - beta.
    pub beta: f64,
    /// Path-loss exponent; 0 disables distance attenuation.
    pub path_loss_exp: f64,
    pub n_s: u32,
    pub n_r: u32,
    pub k: u32,
    /// Accept blocklengths below 100.
    #[serde(default)]
    pub allow_short_blocklength: bool,
}

impl Default for TopologyConfig {
    /// 10 dB total SNR, n = 500 on both hops, k = 250, relay midway, equal split.
    fn default() -> Self {
        TopologyConfig {
            total_snr: SnrValue::new(10.0).expect("positive"),
            eta: 0.5,
            beta: 0.5,
            path_loss_exp: 0.0,
            n_s: 500,
            n_r: 500,
            k: 250,
            allow_short_blocklength: false,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", format!("expected 0 < eta <= 1, got {}", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::domain("beta", format!("expected 0 < beta < 1, got {}", self.beta)));
        }
        if !(self.path_loss_exp.is_finite() && self.path_loss_exp >= 0.0) {
            return Err(Error::domain("alpha", format!("expected alpha >= 0, got {}", self.path_loss_exp)));
        }
        if self.total_snr.value() <= 0.0 {
            return Err(Error::domain("snr", "total SNR must be positive"));
        }
        self.source_spec()?;
        self.relay_spec()?;
        Ok(())
    }

    fn spec(&self, n: u32, field: &'static str) -> Result<RateSpec> {
        let r = if self.allow_short_blocklength {
            RateSpec::with_short_blocklength(self.k, n)
        } else {
            RateSpec::new(self.k, n)
        };
        r.map_err(|e| match e {
            Error::Domain { reason, .. } => Error::Domain { field, reason },
            other => other,
        })
    }

    pub fn source_spec(&self) -> Result<RateSpec> {
        self.spec(self.n_s, "n_s")
    }

    pub fn relay_spec(&self) -> Result<RateSpec> {
        self.spec(self.n_r, "n_r")
    }

    fn gain(&self, distance: f64) -> f64 {
        if self.path_loss_exp == 0.0 {
            1.0
        } else {
            distance.powf(-self.path_loss_exp)
        }
    }

    /// Average SNR of S-D while relaying.
    pub fn omega_z(&self) -> f64 {
        self.eta * self.total_snr.value() * self.gain(1.0)
    }

    /// Average SNR of S-R.
    pub fn omega_x(&self) -> f64 {
        self.eta * self.total_snr.value() * self.gain(self.beta)
    }

    /// Average SNR of R-D; zero when `eta = 1`.
    pub fn omega_y(&self) -> f64 {
        (1.0 - self.eta) * self.total_snr.value() * self.gain(1.0 - self.beta)
    }

    /// Average SNR of S-D for direct transmission at full power.
    pub fn omega_direct(&self) -> f64 {
        self.total_snr.value() * self.gain(1.0)
    }

    pub fn source_rate(&self) -> f64 {
        f64::from(self.k) / f64::from(self.n_s)
    }

    pub fn relay_rate(&self) -> f64 {
        f64::from(self.k) / f64::from(self.n_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Dt,
    Df,
    Sc,
    Mrc,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [ProtocolKind::Dt, ProtocolKind::Df, ProtocolKind::Sc, ProtocolKind::Mrc];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Dt => "dt",
            ProtocolKind::Df => "df",
            ProtocolKind::Sc => "sc",
            ProtocolKind::Mrc => "mrc",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(ProtocolKind::Dt),
            "df" => Ok(ProtocolKind::Df),
            "sc" => Ok(ProtocolKind::Sc),
            "mrc" => Ok(ProtocolKind::Mrc),
            other => Err(Error::domain("protocol", format!("unknown protocol '{other}' (expected dt|df|sc|mrc)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    ClosedForm,
    QuadTrueQ,
    MonteCarlo {
        trials: u64,
        seed: u64,
        #[serde(skip)]
        mode: McMode,
    },
}

impl Backend {
    pub fn monte_carlo(trials: u64, seed: u64) -> Self {
        Backend::MonteCarlo {
            trials,
            seed,
            mode: McMode::Soft,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed",
            Backend::QuadTrueQ => "quad",
            Backend::MonteCarlo { .. } => "mc",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Backend::MonteCarlo { .. })
    }

    fn method(&self) -> Method {
        match self {
            Backend::ClosedForm => Method::ClosedForm,
            Backend::QuadTrueQ => Method::QuadTrueQ,
            Backend::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }

    fn monte_carlo_engine(&self, salt: u64) -> Result<Option<MonteCarlo>> {
        match *self {
            Backend::MonteCarlo { trials, seed, mode } => {
                Ok(Some(MonteCarlo::new(trials, mix_seed(seed, salt))?.with_mode(mode)))
            }
            _ => Ok(None),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Seed for an independent sub-experiment (splitmix64 finalizer).
fn mix_seed(seed: u64, salt: u64) -> u64 {
    if salt == 0 {
        return seed;
    }
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-link outages of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOutages {
    pub eps_sd: f64,
    pub eps_sr: f64,
    pub eps_rd: f64,
    /// MRC-combined S-D plus R-D outage.
    pub eps_srd: f64,
}

pub fn compose_df(eps_sr: f64, eps_rd: f64) -> f64 {
    eps_sr + (1.0 - eps_sr) * eps_rd
}

pub fn compose_sc(eps_sd: f64, eps_sr: f64, eps_rd: f64) -> f64 {
    eps_sd * eps_sr + (1.0 - eps_sr) * eps_sd * eps_rd
}

pub fn compose_mrc(eps_sd: f64, eps_sr: f64, eps_srd: f64) -> f64 {
    eps_sd * eps_sr + (1.0 - eps_sr) * eps_srd
}

fn single_link(n: u32, rate: f64, mean: f64, backend: &Backend, conv: LinConvention, salt: u64) -> Result<f64> {
    if mean <= 0.0 {
        return Ok(1.0);
    }
    let n = f64::from(n);
    match backend {
        Backend::ClosedForm => rayleigh_outage(n, rate, SnrValue::new(mean)?, conv),
        Backend::QuadTrueQ => Ok(true_q_outage_quadrature(n, rate, &Density::exponential(mean)?, QUAD_TOL)?.value),
        Backend::MonteCarlo { .. } => {
            let mc = backend.monte_carlo_engine(salt)?.expect("monte carlo backend");
            Ok(mc.run(|rng| outage_at_snr(n, rate, mean * draw_gain(rng))).value)
        }
    }
}

fn combined_link(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention, eps_sd: f64) -> Result<f64> {
    let (oz, oy) = (cfg.omega_z(), cfg.omega_y());
    if oy <= 0.0 {
        // silent relay: nothing to combine
        return Ok(eps_sd);
    }
    let n = f64::from(cfg.n_s);
    let rate = cfg.source_rate();
    match backend {
        Backend::ClosedForm => {
            if cfg.n_s != cfg.n_r {
                return Err(Error::Unsupported(format!(
                    "closed-form MRC needs equal hop blocklengths (n_s = {}, n_r = {}); use the quad or mc backend",
                    cfg.n_s, cfg.n_r
                )));
            }
            mrc_pair_outage(n, rate, &HypoexpParams::new(oz, oy)?, conv)
        }
        Backend::QuadTrueQ => {
            let d = Density::Hypoexponential(HypoexpParams::new(oz, oy)?);
            Ok(true_q_outage_quadrature(n, rate, &d, QUAD_TOL)?.value)
        }
        Backend::MonteCarlo { .. } => {
            let mc = backend.monte_carlo_engine(4)?.expect("monte carlo backend");
            Ok(mc.run(|rng| outage_at_snr(n, rate, oz * draw_gain(rng) + oy * draw_gain(rng))).value)
        }
    }
}

/// Outage of each link under `backend`. A silent relay (`eta = 1`) yields
/// `eps_rd = 1` and `eps_srd = eps_sd`.
pub fn link_outages(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<LinkOutages> {
    links(cfg, backend, conv, true)
}

/// Skips the combined link when `with_srd` is false (it is then reported
/// as NaN); DF and SC never need it.
fn links(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention, with_srd: bool) -> Result<LinkOutages> {
    cfg.validate()?;
    let (rs, rr) = (cfg.source_rate(), cfg.relay_rate());
    let eps_sd = single_link(cfg.n_s, rs, cfg.omega_z(), backend, conv, 1)?;
    let eps_sr = single_link(cfg.n_s, rs, cfg.omega_x(), backend, conv, 2)?;
    let eps_rd = single_link(cfg.n_r, rr, cfg.omega_y(), backend, conv, 3)?;
    let eps_srd = if with_srd {
        combined_link(cfg, backend, conv, eps_sd)?
    } else {
        f64::NAN
    };
    Ok(LinkOutages {
        eps_sd,
        eps_sr,
        eps_rd,
        eps_srd,
    })
}

/// Outage of `protocol` for `cfg`.
///
/// Deterministic backends compose the per-link outages. The Monte Carlo
/// backend draws the three fading gains jointly and averages the composed
/// per-draw error probability, so its standard error refers to the protocol
/// outage itself. Because the links fade independently both routes have the
/// same expectation.
pub fn protocol_outage(protocol: ProtocolKind, cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<OutageEstimate> {
    cfg.validate()?;
    if let Some(mc) = backend.monte_carlo_engine(0)? {
        if protocol == ProtocolKind::Mrc && cfg.n_s != cfg.n_r {
            log::debug!("mixed hop blocklengths: MRC combination decoded at the source-hop rate");
        }
        return Ok(simulate(protocol, cfg, &mc));
    }
    let value = match protocol {
        ProtocolKind::Dt => single_link(cfg.n_s, cfg.source_rate(), cfg.omega_direct(), backend, conv, 0)?,
        ProtocolKind::Df => {
            let l = links(cfg, backend, conv, false)?;
            compose_df(l.eps_sr, l.eps_rd)
        }
        ProtocolKind::Sc => {
            let l = links(cfg, backend, conv, false)?;
            compose_sc(l.eps_sd, l.eps_sr, l.eps_rd)
        }
        ProtocolKind::Mrc => {
            let l = link_outages(cfg, backend, conv)?;
            compose_mrc(l.eps_sd, l.eps_sr, l.eps_srd)
        }
    };
    Ok(OutageEstimate::exact(value.clamp(0.0, 1.0), backend.method()))
}

fn simulate(protocol: ProtocolKind, cfg: &TopologyConfig, mc: &MonteCarlo) -> OutageEstimate {
    let (ns, nr) = (f64::from(cfg.n_s), f64::from(cfg.n_r));
    let (rs, rr) = (cfg.source_rate(), cfg.relay_rate());
    let (oz, ox, oy, od) = (cfg.omega_z(), cfg.omega_x(), cfg.omega_y(), cfg.omega_direct());
    mc.run(move |rng| {
        let g_sd = draw_gain(rng);
        let g_sr = draw_gain(rng);
        let g_rd = draw_gain(rng);
        match protocol {
            ProtocolKind::Dt => outage_at_snr(ns, rs, od * g_sd),
            ProtocolKind::Df => compose_df(outage_at_snr(ns, rs, ox * g_sr), outage_at_snr(nr, rr, oy * g_rd)),
            ProtocolKind::Sc => compose_sc(
                outage_at_snr(ns, rs, oz * g_sd),
                outage_at_snr(ns, rs, ox * g_sr),
                outage_at_snr(nr, rr, oy * g_rd),
            ),
            ProtocolKind::Mrc => {
                let z = oz * g_sd;
                compose_mrc(
                    outage_at_snr(ns, rs, z),
                    outage_at_snr(ns, rs, ox * g_sr),
                    outage_at_snr(ns, rs, z + oy * g_rd),
                )
            }
        }
    })
}

pub fn dt_outage(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<OutageEstimate> {
    protocol_outage(ProtocolKind::Dt, cfg, backend, conv)
}

pub fn df_outage(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<OutageEstimate> {
    protocol_outage(ProtocolKind::Df, cfg, backend, conv)
}

pub fn sc_outage(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<OutageEstimate> {
    protocol_outage(ProtocolKind::Sc, cfg, backend, conv)
}

pub fn mrc_outage(cfg: &TopologyConfig, backend: &Backend, conv: LinConvention) -> Result<OutageEstimate> {
    protocol_outage(ProtocolKind::Mrc, cfg, backend, conv)
}
