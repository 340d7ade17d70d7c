//! Semi-grand-canonical Metropolis walker, equilibration and blocking statistics,
//! and thermodynamic integration of the grand potential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ce::SupercellModel;
use crate::error::{Error, Result};
use crate::lattice::SpinConfig;
use crate::thermo::PhiPoint;
use crate::KB_EV;

/// Flips between full recomputations of the cached energy.
pub const RESYNC_INTERVAL: u64 = 1 << 16;

/// Default cap on equilibration plus averaging sweeps for one point.
pub const DEFAULT_MAX_SWEEPS: u64 = 1 << 24;

/// Settings shared by the scanner and the boundary tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct RunControls {
    /// Target standard error of x when `n` is not given.
    pub dx: f64,
    /// Optional target standard error of `e - mu x`, applied together with `dx`.
    pub de: Option<f64>,
    /// Fixed number of averaging sweeps.
    pub n: Option<u64>,
    /// Fixed number of equilibration sweeps.
    pub eq: Option<u64>,
    /// Phase-transition check threshold; `Some(0.0)` disables it and `None` uses the default.
    pub tstat: Option<f64>,
    pub ltep: f64,
    pub k_b: f64,
    pub seed: u64,
    /// Report the energy E instead of E - mu x.
    pub g2c: bool,
    pub phi0: Option<f64>,
    pub init_x: Option<f64>,
    pub max_sweeps: u64,
}

impl Default for RunControls {
    fn default() -> Self {
        RunControls {
            dx: 1e-3,
            de: None,
            n: None,
            eq: None,
            tstat: None,
            ltep: 1e-3,
            k_b: KB_EV,
            seed: 0,
            g2c: false,
            phi0: None,
            init_x: None,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Single-site Metropolis walker at fixed (T, mu).
#[derive(Debug, Clone)]
pub struct Walker {
    config: SpinConfig,
    model: SupercellModel,
    rng: ChaCha8Rng,
    beta: f64,
    mu: f64,
    e_total: f64,
    since_sync: u64,
}

impl Walker {
    pub fn new(model: SupercellModel, config: SpinConfig, seed: u64) -> Result<Self> {
        if config.len() != model.n_sites() {
            return Err(Error::MonteCarlo(format!(
                "configuration has {} sites, supercell has {}",
                config.len(),
                model.n_sites()
            )));
        }
        let e_total = model.total_energy(config.spins());
        Ok(Walker {
            config,
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            beta: 0.0,
            mu: 0.0,
            e_total,
            since_sync: 0,
        })
    }

    /// Walker started from independent random spins with mean `x`.
    pub fn random(model: SupercellModel, x: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p_up = ((x + 1.0) / 2.0).clamp(0.0, 1.0);
        let spins = (0..model.n_sites())
            .map(|_| if rng.gen::<f64>() < p_up { 1 } else { -1 })
            .collect();
        let mut w = Walker::new(model, SpinConfig::new(spins)?, seed)?;
        w.rng = rng;
        Ok(w)
    }

    pub fn set_temperature(&mut self, t: f64, k_b: f64) {
        self.beta = 1.0 / (k_b * t);
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    pub fn set_mu(&mut self, mu: f64) {
        self.mu = mu;
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn model(&self) -> &SupercellModel {
        &self.model
    }

    /// Replaces the Hamiltonian, for example with temperature-dependent coefficients.
    pub fn set_model(&mut self, model: SupercellModel) -> Result<()> {
        if model.n_sites() != self.config.len() {
            return Err(Error::MonteCarlo("model does not match the walker's supercell".into()));
        }
        self.model = model;
        self.resync();
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.config.len()
    }

    pub fn x(&self) -> f64 {
        self.config.x()
    }

    pub fn energy_per_site(&self) -> f64 {
        self.e_total / self.config.len() as f64
    }

    /// `e - mu x` per site.
    pub fn grand_per_site(&self) -> f64 {
        self.energy_per_site() - self.mu * self.x()
    }

    pub fn resync(&mut self) {
        self.e_total = self.model.total_energy(self.config.spins());
        self.since_sync = 0;
    }

    /// One attempted flip of a uniformly chosen site. Returns whether it was accepted.
    pub fn step(&mut self) -> bool {
        let n = self.config.len();
        let site = self.rng.gen_range(0..n);
        let spins = self.config.spins();
        let de = self.model.delta_energy(spins, site);
        let dphi = de + 2.0 * self.mu * spins[site] as f64;
        let accept = dphi <= 0.0 || self.rng.gen::<f64>() < (-self.beta * dphi).exp();
        if accept {
            self.config.flip(site);
            self.e_total += de;
            self.since_sync += 1;
            if self.since_sync >= RESYNC_INTERVAL {
                self.resync();
            }
        }
        accept
    }

    /// One sweep of N flip attempts. Returns the number accepted.
    pub fn sweep(&mut self) -> usize {
        (0..self.config.len()).filter(|_| self.step()).count()
    }
}

pub fn metropolis_sweep(walker: &mut Walker) -> usize {
    walker.sweep()
}

/// Streaming mean and blocked standard error: level `k` holds averages of
/// `2^k` consecutive samples.
#[derive(Debug, Clone, Default)]
pub struct BlockingAccumulator {
    levels: Vec<Level>,
}

#[derive(Debug, Clone, Default)]
struct Level {
    count: u64,
    mean: f64,
    m2: f64,
    pending: Option<f64>,
}

impl Level {
    fn add(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Blocks needed at a level for its error estimate to count.
const MIN_BLOCKS: u64 = 32;

impl BlockingAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, mut v: f64) {
        let mut k = 0;
        loop {
            if self.levels.len() == k {
                self.levels.push(Level::default());
            }
            let level = &mut self.levels[k];
            level.add(v);
            match level.pending.take() {
                None => {
                    level.pending = Some(v);
                    return;
                }
                Some(prev) => {
                    v = 0.5 * (prev + v);
                    k += 1;
                }
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.levels.first().map_or(0, |l| l.count)
    }

    pub fn mean(&self) -> f64 {
        self.levels.first().map_or(0.0, |l| l.mean)
    }

    /// Sample variance of the raw values.
    pub fn variance(&self) -> f64 {
        self.levels.first().map_or(0.0, Level::variance)
    }

    /// Largest standard error of the mean over the blocking levels with enough blocks;
    /// the naive estimate when there are too few samples for blocking.
    pub fn stderr(&self) -> f64 {
        let naive = self
            .levels
            .first()
            .map_or(0.0, |l| if l.count > 1 { (l.variance() / l.count as f64).sqrt() } else { 0.0 });
        self.levels
            .iter()
            .filter(|l| l.count >= MIN_BLOCKS)
            .map(|l| (l.variance() / l.count as f64).sqrt())
            .fold(naive, f64::max)
    }
}

/// One equilibrated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub t: f64,
    pub beta: f64,
    pub mu: f64,
    /// Energy per site.
    pub e: f64,
    pub x: f64,
    /// `e - mu x` per site.
    pub e_bar: f64,
    pub stderr_x: f64,
    pub stderr_e_bar: f64,
    pub var_x: f64,
    pub var_e_bar: f64,
    pub n_sites: usize,
    pub n_eq: u64,
    pub n_avg: u64,
    pub converged: bool,
}

impl PointStats {
    /// d(e - mu x)/d(beta) from the fluctuation of e - mu x.
    pub fn de_bar_dbeta(&self) -> f64 {
        -(self.n_sites as f64) * self.var_e_bar
    }

    /// dx/d(mu) from the fluctuation of x.
    pub fn dx_dmu(&self) -> f64 {
        self.beta * self.n_sites as f64 * self.var_x
    }

    pub fn to_phi_point(&self, phi: f64, stderr_phi: f64) -> PhiPoint {
        PhiPoint {
            t: self.t,
            beta: self.beta,
            mu: self.mu,
            phi,
            x: self.x,
            e: self.e,
            de_bar_dbeta: self.de_bar_dbeta(),
            dx_dmu: self.dx_dmu(),
            stderr_phi,
        }
    }
}

struct Samples {
    x: BlockingAccumulator,
    e_bar: BlockingAccumulator,
}

impl Samples {
    fn new() -> Self {
        Samples {
            x: BlockingAccumulator::new(),
            e_bar: BlockingAccumulator::new(),
        }
    }

    fn record(&mut self, w: &Walker) {
        self.x.push(w.x());
        self.e_bar.push(w.grand_per_site());
    }
}

/// Smallest nonzero change of x and of e - mu x per site that one flip away from the
/// walker's current state can make.
fn flip_quanta(w: &Walker) -> (f64, f64) {
    let spins = w.config().spins();
    let n = spins.len() as f64;
    let d = (0..spins.len())
        .map(|s| w.model().delta_grand(spins, s, w.mu()).abs())
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min);
    (2.0 / n, if d.is_finite() { d / n } else { 0.0 })
}

/// Blocked standard error, floored at what `count` samples can resolve: an excitation
/// of size `q` that never showed up may still occur with probability up to 3/count.
fn resolved_stderr(acc: &BlockingAccumulator, q: f64) -> f64 {
    acc.stderr().max(q * 3f64.sqrt() / acc.count().max(1) as f64)
}

fn halves_agree(a: &Samples, b: &Samples) -> bool {
    let agree = |p: &BlockingAccumulator, q: &BlockingAccumulator| {
        let tol = 2.0 * (p.stderr().powi(2) + q.stderr().powi(2)).sqrt();
        (p.mean() - q.mean()).abs() <= tol.max(1e-12 * p.mean().abs().max(1.0))
    };
    agree(&a.x, &b.x) && agree(&a.e_bar, &b.e_bar)
}

/// Equilibrates the walker at its current (T, mu) and averages x and e - mu x.
///
/// Equilibration runs blocks of doubling length until the two halves of the latest
/// block agree within twice their pooled standard error. Averaging then doubles the
/// sample count until the blocked standard error of x drops below `dx` (and that of
/// `e - mu x` below `de`, when given). Standard errors never drop below the
/// resolution of the sample count, so a frozen walker does not report zero. Fixed `eq`
/// and `n` replace the respective adaptive stage. Exceeding `max_sweeps` ends the
/// point early with `converged = false`.
pub fn run_point(walker: &mut Walker, t: f64, controls: &RunControls) -> PointStats {
    let cap = controls.max_sweeps;
    let mut used: u64 = 0;
    let mut converged = true;

    let mut last_block = 0u64;
    match controls.eq {
        Some(eq) => {
            for _ in 0..eq {
                walker.sweep();
            }
            used += eq;
        }
        None => {
            let mut block = 32u64;
            loop {
                if used + block > cap {
                    converged = false;
                    break;
                }
                let (mut first, mut second) = (Samples::new(), Samples::new());
                for i in 0..block {
                    walker.sweep();
                    if i < block / 2 {
                        first.record(walker);
                    } else {
                        second.record(walker);
                    }
                }
                used += block;
                last_block = block;
                if halves_agree(&first, &second) {
                    break;
                }
                block *= 2;
            }
        }
    }
    let n_eq = used;
    let (qx, qe) = flip_quanta(walker);

    let mut samples = Samples::new();
    match controls.n {
        Some(0) => samples.record(walker),
        Some(n) => {
            for _ in 0..n {
                walker.sweep();
                samples.record(walker);
            }
        }
        None if converged => {
            let mut chunk = last_block.max(64);
            loop {
                if used + chunk > cap {
                    converged = false;
                    break;
                }
                for _ in 0..chunk {
                    walker.sweep();
                    samples.record(walker);
                }
                used += chunk;
                let e_ok = controls.de.is_none_or(|de| resolved_stderr(&samples.e_bar, qe) < de);
                if resolved_stderr(&samples.x, qx) < controls.dx && e_ok {
                    break;
                }
                chunk = samples.x.count();
            }
            if samples.x.count() == 0 {
                samples.record(walker);
            }
        }
        None => samples.record(walker),
    }

    let x = samples.x.mean();
    let e_bar = samples.e_bar.mean();
    PointStats {
        t,
        beta: walker.beta(),
        mu: walker.mu(),
        e: e_bar + walker.mu() * x,
        x,
        e_bar,
        stderr_x: resolved_stderr(&samples.x, qx),
        stderr_e_bar: resolved_stderr(&samples.e_bar, qe),
        var_x: samples.x.variance(),
        var_e_bar: samples.e_bar.variance(),
        n_sites: walker.n_sites(),
        n_eq,
        n_avg: samples.x.count(),
        converged,
    }
}

/// Advances the grand potential from `prev` to the measured point along a path of
/// constant mu or constant T. Uses the trapezoid rule with its endpoint-derivative
/// correction, so the error is fourth order in the step.
pub fn integrate_phi(prev: &PhiPoint, current: &PointStats) -> Result<PhiPoint> {
    let same_beta = (current.beta - prev.beta).abs() <= 1e-14 * prev.beta.abs();
    let same_mu = (current.mu - prev.mu).abs() <= 1e-14 * prev.mu.abs().max(1.0);
    if !same_beta && !same_mu {
        return Err(Error::MonteCarlo(
            "integration step changes both temperature and chemical potential".into(),
        ));
    }
    let (phi, err) = if same_beta && same_mu {
        (prev.phi, prev.stderr_phi)
    } else if same_mu {
        let h = current.beta - prev.beta;
        let bphi = prev.beta * prev.phi
            + 0.5 * h * (prev.e_bar() + current.e_bar)
            + h * h / 12.0 * (prev.de_bar_dbeta - current.de_bar_dbeta());
        let err = ((prev.beta * prev.stderr_phi).powi(2) + (0.5 * h * current.stderr_e_bar).powi(2)).sqrt() / current.beta;
        (bphi / current.beta, err)
    } else {
        let h = current.mu - prev.mu;
        let phi = prev.phi - (0.5 * h * (prev.x + current.x) + h * h / 12.0 * (prev.dx_dmu - current.dx_dmu()));
        let err = (prev.stderr_phi.powi(2) + (0.5 * h * current.stderr_x).powi(2)).sqrt();
        (phi, err)
    };
    Ok(current.to_phi_point(phi, err))
}
