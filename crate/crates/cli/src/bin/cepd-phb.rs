//! Tracks the two-phase boundary between two ground states in temperature.

use std::path::PathBuf;
use std::process::ExitCode;

use cepd_cli::{boltzmann, init_logging, normalize_args, seed_or_clock, RowSink};
use cepd_core::atat_io::format_row;
use cepd_core::drivers::{track_boundary, BoundaryPlan, System};
use cepd_core::mc::{RunControls, DEFAULT_MAX_SWEEPS};
use clap::Parser;

/// Follow the coexistence line of two phases by integrating dmu/dbeta.
///
/// Output columns: T, mu, x1, x2, E1 - mu x1, E2 - mu x2.
#[derive(Parser, Debug)]
#[command(name = "cepd-phb", version, allow_negative_numbers = true)]
struct Args {
    #[arg(long)]
    gs1: usize,
    #[arg(long)]
    gs2: usize,
    /// Starting temperature; found from the low-temperature expansion when absent.
    #[arg(short = 'T', long = "T", requires = "mu")]
    t: Option<f64>,
    /// Starting chemical potential (physical units).
    #[arg(long, requires = "t")]
    mu: Option<f64>,
    /// Track downwards in temperature.
    #[arg(long)]
    dn: bool,
    /// Temperature step; its sign is ignored.
    #[arg(long = "dT")]
    dt: f64,
    /// Stop once this temperature is passed.
    #[arg(long = "Tend")]
    t_end: Option<f64>,
    /// Target standard error of x.
    #[arg(long, default_value_t = 1e-3)]
    dx: f64,
    /// Target standard error of the energy per site.
    #[arg(long)]
    de: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    er: f64,
    #[arg(long, default_value_t = 1e-3)]
    ltep: f64,
    #[arg(short = 'k', long = "k")]
    k: Option<f64>,
    /// Use k_B = 8.617e-5 eV/K.
    #[arg(long = "kev", alias = "keV")]
    kev: bool,
    #[arg(long)]
    seed: Option<u64>,
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
    let plan = BoundaryPlan {
        gs1: args.gs1,
        gs2: args.gs2,
        start: args.t.zip(args.mu),
        dt: args.dt,
        down: args.dn,
        t_end: args.t_end,
        er: args.er,
        controls: RunControls {
            dx: args.dx,
            de: args.de,
            ltep: args.ltep,
            k_b: boltzmann(args.k, args.kev),
            seed,
            max_sweeps: args.max_sweeps,
            ..RunControls::default()
        },
    };
    let cell = sys.supercell(args.er, &[args.gs1, args.gs2])?;
    let [n1, n2, n3] = cell.repeats();
    println!("Supercell size: {n1} {n2} {n3}");

    let mut sink = RowSink::open(args.output.as_deref())?;
    let mut write_err = None;
    track_boundary(&sys, &plan, |row| {
        if let Err(e) = sink.line(&format_row(row)) {
            write_err.get_or_insert(e);
        }
    })?;
    match write_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
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
