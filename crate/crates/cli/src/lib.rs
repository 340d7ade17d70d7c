//! Shared plumbing of the `cepd-scan` and `cepd-phb` executables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use cepd_core::KB_EV;

/// Rewrites single-dash multi-letter options (`-gs1=0`, `-keV`) to their
/// double-dash form so the original single-dash command lines parse unchanged.
/// Single-letter options (`-o=out`, `-T=52000`) and negative numbers are kept.
pub fn normalize_args<I, S>(args: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    args.into_iter()
        .map(Into::into)
        .enumerate()
        .map(|(i, a)| if i > 0 && is_long_single_dash(&a) { format!("-{a}") } else { a })
        .collect()
}

fn is_long_single_dash(arg: &str) -> bool {
    let Some(rest) = arg.strip_prefix('-') else {
        return false;
    };
    let name = rest.split_once('=').map_or(rest, |(n, _)| n);
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && name.len() >= 2
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Boltzmann constant from `-k` / `-keV`; temperatures are in energy units otherwise.
pub fn boltzmann(k: Option<f64>, kev: bool) -> f64 {
    match (k, kev) {
        (Some(k), _) => k,
        (None, true) => KB_EV,
        (None, false) => 1.0,
    }
}

/// The given seed, or one drawn from the clock.
pub fn seed_or_clock(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64)
    })
}

/// Line-flushed output: a file when a path is given, standard output otherwise.
pub struct RowSink {
    out: Box<dyn Write>,
}

impl RowSink {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout()),
        };
        Ok(RowSink { out })
    }

    pub fn line(&mut self, text: &str) -> io::Result<()> {
        self.out.write_all(text.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
}
