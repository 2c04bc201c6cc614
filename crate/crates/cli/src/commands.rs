use clap::Args;
use fbrelay::analysis::{optimize_eta, reliability_region_with, sweep, EtaMode, SweepAxis};
use fbrelay::protocols::protocol_outage;
use fbrelay::TopologyConfig;

use crate::config::{parse_f64_list, parse_u32_grid, CommonArgs, RunConfig};
use crate::error::CliResult;
use crate::output::{Record, Table};

#[derive(Debug, Args)]
pub struct OutageArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn outage(args: &OutageArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let topo = cfg.topology()?;
    topo.validate()?;
    let mut records = Vec::new();
    for &protocol in &cfg.protocols {
        for backend in cfg.backends() {
            let e = protocol_outage(protocol, &topo, &backend, cfg.convention)?;
            records.push(Record::new(
                protocol,
                &backend,
                cfg.convention,
                cfg.snr_db,
                &topo,
                Ok((e.value, e.std_error)),
            ));
        }
    }
    Table::new(records).emit(&cfg)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Swept parameter: snr (dB), n (both hops) or eta.
    #[arg(long, default_value = "snr")]
    pub axis: String,
    /// Explicit comma-separated axis values (overrides --from/--to/--points).
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

fn default_range(axis: SweepAxis) -> (f64, f64, usize) {
    match axis {
        SweepAxis::TotalSnrDb => (0.0, 20.0, 21),
        SweepAxis::Blocklength => (100.0, 1000.0, 10),
        SweepAxis::Eta => (0.05, 1.0, 20),
    }
}

fn axis_values(args: &SweepArgs, axis: SweepAxis) -> CliResult<Vec<f64>> {
    if let Some(v) = &args.values {
        return parse_f64_list("values", v);
    }
    let (from, to, points) = default_range(axis);
    let (from, to, points) = (args.from.unwrap_or(from), args.to.unwrap_or(to), args.points.unwrap_or(points));
    if points == 0 {
        return Ok(Vec::new());
    }
    let mut v: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                from
            } else {
                from + (to - from) * i as f64 / (points - 1) as f64
            }
        })
        .collect();
    if axis == SweepAxis::Blocklength {
        v.iter_mut().for_each(|x| *x = x.round());
    }
    Ok(v)
}

pub fn sweep_cmd(args: &SweepArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let axis: SweepAxis = args.axis.parse()?;
    let values = axis_values(args, axis)?;
    let fixed = cfg.topology()?;
    // everything except the swept field must already be valid
    let probe = match axis {
        SweepAxis::TotalSnrDb => fixed,
        SweepAxis::Blocklength => TopologyConfig { n_s: 500, n_r: 500, ..fixed },
        SweepAxis::Eta => TopologyConfig { eta: 0.5, ..fixed },
    };
    probe.validate()?;

    let rows = sweep(&cfg.protocols, axis, &values, &fixed, &cfg.backends(), cfg.convention)?;
    let records = rows
        .iter()
        .map(|r| {
            let snr_db = if axis == SweepAxis::TotalSnrDb { r.axis_value } else { cfg.snr_db };
            let result = match &r.error {
                None => Ok((r.outage, r.std_error)),
                Some(e) => Err(e.clone()),
            };
            Record::new(r.protocol, &r.backend, cfg.convention, snr_db, &r.config, result)
        })
        .collect();
    let mut table = Table::new(records);
    table.notes.push(format!("axis = {}", axis.as_str()));
    report_failures(&table);
    table.emit(&cfg)
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Coarse grid spacing in eta (at most 0.05).
    #[arg(long, default_value_t = 0.01)]
    pub coarse_step: f64,
    /// Final bracket width in eta (at most 1e-3).
    #[arg(long, default_value_t = 1e-4)]
    pub refine_tol: f64,
}

pub fn optimize(args: &OptimizeArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let topo = cfg.topology()?;
    TopologyConfig { eta: 0.5, ..topo }.validate()?;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    let mut notes = Vec::new();
    for &protocol in &cfg.protocols {
        for backend in cfg.backends() {
            let o = optimize_eta(protocol, &topo, &backend, cfg.convention, args.coarse_step, args.refine_tol)?;
            for &(eta, eps) in &o.profile {
                let c = TopologyConfig { eta, ..topo };
                records.push(Record::new(protocol, &backend, cfg.convention, cfg.snr_db, &c, Ok((eps, None))));
            }
            let c = TopologyConfig { eta: o.eta_star, ..topo };
            summary.push(Record::new(protocol, &backend, cfg.convention, cfg.snr_db, &c, Ok((o.eps_star, None))));
            if o.multimodal {
                notes.push(format!("multimodal profile: {protocol} {backend}"));
            }
        }
    }
    let mut table = Table::new(records);
    table.summary = Some(summary);
    table.notes = notes;
    table.emit(&cfg)
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Blocklengths: comma list or start:stop:step.
    #[arg(long, default_value = "100:2000:100")]
    pub n_values: String,
    /// Payload sizes: comma list or start:stop:step.
    #[arg(long, default_value = "10:400:10")]
    pub k_values: String,
    /// Optimize eta per cell instead of using --eta.
    #[arg(long)]
    pub optimize_eta: bool,
    #[arg(long, default_value_t = 0.05)]
    pub coarse_step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub refine_tol: f64,
}

pub fn region(args: &RegionArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.common)?;
    let ns = parse_u32_grid("n_values", &args.n_values)?;
    let ks = parse_u32_grid("k_values", &args.k_values)?;
    let template = cfg.topology()?;
    let mode = if args.optimize_eta {
        EtaMode::Optimize {
            coarse_step: args.coarse_step,
            refine_tol: args.refine_tol,
        }
    } else {
        EtaMode::Fixed(cfg.eta)
    };
    let mut records = Vec::new();
    for &protocol in &cfg.protocols {
        for backend in cfg.backends() {
            let g = reliability_region_with(protocol, &template, &ns, &ks, &backend, cfg.convention, mode)?;
            for (i, &n) in g.n_values.iter().enumerate() {
                for (j, &k) in g.k_values.iter().enumerate() {
                    let eta = if g.eta[i][j].is_nan() { cfg.eta } else { g.eta[i][j] };
                    let c = TopologyConfig {
                        n_s: n,
                        n_r: n,
                        k,
                        eta,
                        ..template
                    };
                    let result = match &g.errors[i][j] {
                        None => Ok((g.outage[i][j], None)),
                        Some(e) => Err(e.clone()),
                    };
                    records.push(Record::new(protocol, &backend, cfg.convention, cfg.snr_db, &c, result));
                }
            }
        }
    }
    let mut table = Table::new(records);
    table.notes.push("success = 1 - outage".into());
    report_failures(&table);
    table.emit(&cfg)
}

fn report_failures(table: &Table) {
    let failed = table.failed();
    if failed > 0 {
        eprintln!("warning: {failed} cell(s) failed; see the error column");
    }
}

