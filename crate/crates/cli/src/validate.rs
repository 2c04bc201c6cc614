//! Oracle-equivalence suites behind `fbrelay validate`.

use clap::Args;
use fbrelay::linearization::{linearize, linearize_snr_domain};
use fbrelay::oracles::{linearized_outage_quadrature, true_q_outage_quadrature, Density, McLink};
use fbrelay::oracles::monte_carlo::{fading_outage_mc_with, MonteCarlo};
use fbrelay::outage_closed::{mrc_pair_outage_with, rayleigh_outage, MrcFormula};
use fbrelay::protocols::protocol_outage;
use fbrelay::{Backend, HypoexpParams, LinConvention, ProtocolKind, SnrValue, TopologyConfig};
use rayon::prelude::*;

use crate::config::{parse_f64_list, parse_u32_grid, CommonArgs, RunConfig};
use crate::error::{CliError, CliResult};

pub const CLOSED_TOL: f64 = 1e-8;
pub const MC_SIGMAS: f64 = 4.0;
/// Share of Monte Carlo cells that must fall within `MC_SIGMAS`.
pub const MC_PASS_SHARE: f64 = 0.95;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Blocklengths of the grid.
    #[arg(long, default_value = "100,200,500,1000")]
    pub n_values: String,
    /// Rates (bits per channel use) of the grid.
    #[arg(long, default_value = "0.1,0.5,1,2")]
    pub rates: String,
    /// Mean link SNRs in dB.
    #[arg(long, default_value = "0,5,10,15,20,25,30", allow_hyphen_values = true)]
    pub snr_db_values: String,
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

struct Grid {
    n: Vec<f64>,
    rates: Vec<f64>,
    means: Vec<f64>,
}

struct Suite {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let formula = match args.inject_fault.as_deref() {
        None => MrcFormula::Rederived,
        Some("lambda2-sign") => MrcFormula::FaultLambda2Sign,
        Some(other) => return Err(CliError::Input(format!("inject_fault: unknown fault '{other}'"))),
    };
    let n = parse_u32_grid("n_values", &args.n_values)?;
    let rates = parse_f64_list("rates", &args.rates)?;
    let dbs = parse_f64_list("snr_db_values", &args.snr_db_values)?;
    if n.is_empty() || rates.is_empty() || dbs.is_empty() {
        return Err(CliError::Input("grid: n_values, rates and snr_db_values must all be non-empty".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(CliError::Input(format!("rates: expected positive rates, got {r}")));
    }
    let means = dbs
        .iter()
        .map(|&d| SnrValue::from_db(d).map(SnrValue::value))
        .collect::<fbrelay::Result<Vec<f64>>>()?;
    let grid = Grid {
        n: n.iter().map(|&v| f64::from(v)).collect(),
        rates,
        means,
    };
    let mc = MonteCarlo::new(cfg.trials, cfg.seed)?;

    let suites = vec![
        rayleigh_suite(&grid)?,
        mrc_suite(&grid, formula)?,
        quad_vs_mc_suite(&grid, &mc)?,
        protocol_mc_suite(&cfg)?,
    ];
    let mut failed = Vec::new();
    for s in &suites {
        println!("{} {}: {}", if s.pass { "PASS" } else { "FAIL" }, s.name, s.detail);
        if !s.pass {
            failed.push(s.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("failed suites: {}", failed.join(", "))))
    }
}

/// Keeps the largest deviation seen and where it happened.
#[derive(Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn note(&mut self, v: f64, at: impl FnOnce() -> String) {
        if v > self.value {
            self.value = v;
            self.at = at();
        }
    }
}

fn rayleigh_suite(g: &Grid) -> CliResult<Suite> {
    let mut worst = Worst::default();
    let exp1 = Density::exponential(1.0)?;
    for conv in LinConvention::ALL {
        for &n in &g.n {
            for &r in &g.rates {
                for &m in &g.means {
                    let snr = SnrValue::new(m)?;
                    let closed = rayleigh_outage(n, r, snr, conv)?;
                    let quad = linearized_outage_quadrature(&linearize(n, r, snr, conv)?, &exp1, 1e-13)?.value;
                    worst.note((closed - quad).abs(), || format!("{conv} n={n} R={r} mean={m}"));
                }
            }
        }
    }
    Ok(Suite {
        name: "rayleigh_outage vs linearized quadrature",
        pass: worst.value <= CLOSED_TOL,
        detail: format!("max |diff| = {:e} at {}", worst.value, worst.at),
    })
}

fn mrc_suite(g: &Grid, formula: MrcFormula) -> CliResult<Suite> {
    let mut worst = Worst::default();
    for conv in LinConvention::ALL {
        for &n in &g.n {
            for &r in &g.rates {
                let lin = linearize_snr_domain(n, r, conv)?;
                for &m in &g.means {
                    for (a, b) in [(0.7 * m, 0.3 * m), (0.5 * m, 0.5 * m)] {
                        let h = HypoexpParams::new(a, b)?;
                        let quad = linearized_outage_quadrature(&lin, &Density::Hypoexponential(h), 1e-13)?.value;
                        let at = || format!("{conv} n={n} R={r} means=({a}, {b})");
                        // a corrupted form may leave [0, 1]; that counts as a deviation
                        match mrc_pair_outage_with(n, r, &h, conv, formula) {
                            Ok(closed) => worst.note((closed - quad).abs(), at),
                            Err(e) => worst.note(f64::INFINITY, || format!("{} ({e})", at())),
                        }
                    }
                }
            }
        }
    }
    let pass = worst.value <= CLOSED_TOL;
    Ok(Suite {
        name: "mrc_pair_outage vs linearized quadrature",
        pass,
        detail: format!("max |diff| = {:e} at {}", worst.value, worst.at),
    })
}

fn quad_vs_mc_suite(g: &Grid, mc: &MonteCarlo) -> CliResult<Suite> {
    let mut cells = Vec::new();
    for &n in &g.n {
        for &r in &g.rates {
            for &m in &g.means {
                cells.push((n, r, m));
            }
        }
    }
    let results = cells
        .par_iter()
        .map(|&(n, r, m)| {
            let quad = true_q_outage_quadrature(n, r, &Density::exponential(m)?, 1e-12)?.value;
            let est = fading_outage_mc_with(n, r, McLink::SingleRayleigh { mean: m }, mc)?;
            Ok((n, r, m, quad, est.value, est.std_error.unwrap_or(0.0)))
        })
        .collect::<fbrelay::Result<Vec<_>>>()?;
    Ok(share_suite(
        "exact-Q quadrature vs Monte Carlo",
        results
            .iter()
            .map(|&(n, r, m, q, v, se)| (within(q, v, se), format!("n={n} R={r} mean={m} quad={q} mc={v} se={se}"), z(q, v, se))),
    ))
}

fn protocol_mc_suite(cfg: &RunConfig) -> CliResult<Suite> {
    let backend = Backend::monte_carlo(cfg.trials, cfg.seed);
    let mut cells = Vec::new();
    for (protocol, eta) in [
        (ProtocolKind::Dt, 0.5),
        (ProtocolKind::Df, 0.5),
        (ProtocolKind::Sc, 0.6),
        (ProtocolKind::Mrc, 0.7),
    ] {
        for i in 0..20 {
            let db = 20.0 * f64::from(i) / 19.0;
            let topo = TopologyConfig {
                total_snr: SnrValue::from_db(db)?,
                eta,
                ..TopologyConfig::default()
            };
            let c = protocol_outage(protocol, &topo, &Backend::ClosedForm, cfg.convention)?.value;
            let m = protocol_outage(protocol, &topo, &backend, cfg.convention)?;
            let se = m.std_error.unwrap_or(0.0);
            cells.push((within(c, m.value, se), format!("{protocol} {db:.2} dB closed={c} mc={} se={se}", m.value), z(c, m.value, se)));
        }
    }
    Ok(share_suite("protocol closed form vs Monte Carlo", cells.into_iter()))
}

fn within(a: f64, b: f64, se: f64) -> bool {
    (a - b).abs() <= MC_SIGMAS * se
}

fn z(a: f64, b: f64, se: f64) -> f64 {
    if se > 0.0 {
        (a - b).abs() / se
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

fn share_suite(name: &'static str, cells: impl Iterator<Item = (bool, String, f64)>) -> Suite {
    let (mut hits, mut total) = (0usize, 0usize);
    let mut worst = Worst::default();
    for (ok, label, zv) in cells {
        total += 1;
        hits += usize::from(ok);
        worst.note(zv, || label);
    }
    let pass = hits as f64 >= MC_PASS_SHARE * total as f64;
    Suite {
        name,
        pass,
        detail: format!("{hits}/{total} within {MC_SIGMAS} sigma; worst z = {:.2} at {}", worst.value, worst.at),
    }
}
