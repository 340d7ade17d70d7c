//! Semi-grand-canonical Monte Carlo over a grid of chemical potentials and temperatures.

use std::path::PathBuf;
use std::process::ExitCode;

use cepd_cli::{boltzmann, init_logging, normalize_args, seed_or_clock, RowSink};
use cepd_core::atat_io::{format_row, write_snapshot};
use cepd_core::drivers::{scan, ScanPlan, SeedSource, System};
use cepd_core::mc::{RunControls, DEFAULT_MAX_SWEEPS};
use clap::Parser;

/// Scan (T, mu) with a Metropolis walker started from a ground state or from random spins.
///
/// Output columns: T, mu, E - mu x (E with --g2c), x, phi (F with --g2c), stderr of x,
/// equilibration sweeps, averaging sweeps.
#[derive(Parser, Debug)]
#[command(name = "cepd-scan", version, allow_negative_numbers = true)]
struct Args {
    /// Starting ground state from gs_str.out; -1 starts from random spins.
    #[arg(long, default_value_t = 0)]
    gs: i64,
    /// First chemical potential (normalized input units).
    #[arg(long)]
    mu0: f64,
    #[arg(long)]
    mu1: Option<f64>,
    #[arg(long)]
    dmu: Option<f64>,
    #[arg(long = "T0")]
    t0: f64,
    #[arg(long = "T1")]
    t1: Option<f64>,
    #[arg(long = "dT")]
    dt: Option<f64>,
    /// Run the temperature loop downwards.
    #[arg(long)]
    dn: bool,
    /// Radius of the sphere the supercell must contain.
    #[arg(long, default_value_t = 20.0)]
    er: f64,
    /// Target standard error of x.
    #[arg(long, default_value_t = 1e-3)]
    dx: f64,
    /// Fixed number of averaging sweeps.
    #[arg(short = 'n', long = "n")]
    n: Option<u64>,
    /// Fixed number of equilibration sweeps.
    #[arg(long)]
    eq: Option<u64>,
    /// Threshold on |x - x_LTE| that stops a temperature run; 0 disables the check.
    #[arg(long)]
    tstat: Option<f64>,
    /// Validity threshold of the low-temperature expansion.
    #[arg(long, default_value_t = 1e-3)]
    ltep: f64,
    /// Boltzmann constant.
    #[arg(short = 'k', long = "k")]
    k: Option<f64>,
    /// Use k_B = 8.617e-5 eV/K.
    #[arg(long = "kev", alias = "keV")]
    kev: bool,
    /// Report canonical quantities.
    #[arg(long)]
    g2c: bool,
    /// Grand potential at the first point.
    #[arg(long)]
    phi0: Option<f64>,
    /// Mean spin of the random start.
    #[arg(short = 'x', long = "x")]
    x: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on sweeps per point.
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: u64,
    /// Output table; standard output when absent.
    #[arg(short = 'o', long = "o")]
    output: Option<PathBuf>,
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let sys = System::load(".".as_ref())?;
    let seed = seed_or_clock(args.seed);
    log::info!("seed {seed}");
    let gs = match args.gs {
        -1 => None,
        g if g >= 0 => Some(g as usize),
        g => return Err(format!("invalid ground state {g}").into()),
    };
    let k_b = boltzmann(args.k, args.kev);
    let plan = ScanPlan {
        gs,
        mu0: args.mu0,
        mu1: args.mu1,
        dmu: args.dmu,
        t0: args.t0,
        t1: args.t1,
        dt: args.dt,
        down: args.dn,
        er: args.er,
        controls: RunControls {
            dx: args.dx,
            de: None,
            n: args.n,
            eq: args.eq,
            tstat: args.tstat,
            ltep: args.ltep,
            k_b,
            seed,
            g2c: args.g2c,
            phi0: args.phi0,
            init_x: args.x,
            max_sweeps: args.max_sweeps,
        },
    };
    let cell = match gs {
        Some(g) => sys.supercell(args.er, &[g])?,
        None => sys.supercell(args.er, &[])?,
    };
    let [n1, n2, n3] = cell.repeats();
    println!("Supercell size: {n1} {n2} {n3}");

    let mut sink = RowSink::open(args.output.as_deref())?;
    let mut write_err = None;
    let outcome = scan(&sys, &plan, |row| {
        if let Err(e) = sink.line(&format_row(row)) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }

    if let Some(seed) = &outcome.seed {
        let source = match seed.source {
            SeedSource::LowTemperature => "lte",
            SeedSource::HighTemperature => "hte",
            SeedSource::Given => "phi0",
        };
        let p = &seed.point;
        std::fs::write(
            "ltedat.out",
            format!("{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t# {source}\n", p.t, p.mu, p.phi, p.x, p.e),
        )?;
    }
    std::fs::write(
        "mcsnapshot.out",
        write_snapshot(&outcome.last_config, &outcome.supercell, sys.ce.lattice()),
    )?;
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    let args = Args::parse_from(normalize_args(std::env::args()));
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
