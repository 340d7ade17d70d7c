//! The (T, mu) scanner, the two-phase boundary tracker and ground-state annealing.

use std::path::Path;

use crate::atat_io::{
    parse_clusters, parse_eci, parse_lattice, parse_structures, parse_teci, TableRow,
};
use crate::ce::{ClusterExpansion, SupercellModel};
use crate::error::{Error, Result};
use crate::lattice::{build_supercell, Lattice, SpinConfig, Supercell};
use crate::mc::{integrate_phi, run_point, PointStats, RunControls, Walker};
use crate::models::ModelFiles;
use crate::thermo::{hte_phi, lte_phi, GroundStateSet, LteResult, MuMap, PhiPoint};

// ----------------------------------------------------------------------------
// inputs

/// A cluster expansion with its declared ground states.
#[derive(Debug, Clone)]
pub struct System {
    pub ce: ClusterExpansion,
    pub gs: GroundStateSet,
}

impl System {
    /// Builds a system from file contents. Either `eci` or `teci` must be given; with
    /// only a temperature table its first row serves as the static coefficients.
    pub fn from_texts(
        lattice: &str,
        clusters: &str,
        eci: Option<&str>,
        ground_states: &str,
        teci: Option<&str>,
    ) -> Result<Self> {
        let lattice = Lattice::new(parse_lattice(lattice)?)?;
        let clusters = parse_clusters(clusters)?;
        let teci = teci.map(|t| parse_teci(t, Some(clusters.len()))).transpose()?;
        let eci = match (eci, &teci) {
            (Some(text), _) => parse_eci(text)?,
            (None, Some(t)) => t.rows[0].clone(),
            (None, None) => return Err(Error::Model("no ECI values given".into())),
        };
        let ce = ClusterExpansion::new(lattice, &clusters, eci, teci)?;
        let gs = GroundStateSet::new(&ce, &parse_structures(ground_states)?)?;
        Ok(System { ce, gs })
    }

    pub fn from_model(files: &ModelFiles) -> Result<Self> {
        System::from_texts(files.lattice, files.clusters, Some(files.eci), files.ground_states, None)
    }

    /// Reads `lat.in`, `clusters.out`, `eci.out`, `gs_str.out` and, when present, `teci.out`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<String> {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{name}: {e}"))))
        };
        let optional = |name: &str| -> Result<Option<String>> {
            let path = dir.join(name);
            if path.exists() {
                read(name).map(Some)
            } else {
                Ok(None)
            }
        };
        let teci = optional("teci.out")?;
        if teci.is_some() {
            log::info!("using temperature-dependent ECIs from teci.out");
        }
        let eci = optional("eci.out")?;
        System::from_texts(
            &read("lat.in")?,
            &read("clusters.out")?,
            eci.as_deref(),
            &read("gs_str.out")?,
            teci.as_deref(),
        )
    }

    /// Map from normalized input chemical potential to the physical one. A single
    /// ground state gets the identity.
    pub fn mu_map(&self) -> Result<MuMap> {
        if self.gs.len() < 2 {
            MuMap::from_knots(vec![0.0])
        } else {
            MuMap::new(&self.gs)
        }
    }

    /// Diagonal supercell inscribing a sphere of radius `er`, enlarged to fit the
    /// periodicity of the listed ground states.
    pub fn supercell(&self, er: f64, ground_states: &[usize]) -> Result<Supercell> {
        let mut period = [1usize; 3];
        for &g in ground_states {
            let p = self.gs.get(g)?.period;
            for k in 0..3 {
                period[k] = lcm(period[k], p[k]);
            }
        }
        Ok(build_supercell(self.ce.lattice(), er).commensurate_with(period))
    }

    /// Supercell model with the coefficients valid at temperature `t`.
    pub fn model_at(&self, base: &SupercellModel, t: f64) -> Result<SupercellModel> {
        if self.ce.teci().is_some() {
            base.with_eci(&self.ce.eci_at_temperature(t))
        } else {
            Ok(base.clone())
        }
    }

    fn lte(&self, gs: usize, t: f64, mu: f64, c: &RunControls) -> Result<LteResult> {
        lte_phi(&self.gs, gs, &self.ce, t, c.k_b, mu, c.ltep)
    }

    /// Declared hull energy at composition `x`, if `x` lies within the declared range.
    pub fn hull_energy(&self, x: f64) -> Option<f64> {
        let s = self.gs.states();
        if s.len() == 1 {
            return ((x - s[0].x).abs() < 1e-9).then_some(s[0].e);
        }
        s.windows(2).find_map(|w| {
            (x >= w[0].x - 1e-12 && x <= w[1].x + 1e-12)
                .then(|| w[0].e + (x - w[0].x) * (w[1].e - w[0].e) / (w[1].x - w[0].x))
        })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Independent RNG stream `k` derived from a user seed.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evenly spaced values from `a` to `b` with spacing `|step|`, inclusive of `a`.
fn grid(a: f64, b: Option<f64>, step: Option<f64>, what: &str) -> Result<Vec<f64>> {
    let Some(b) = b.filter(|b| (b - a).abs() > 1e-12) else {
        return Ok(vec![a]);
    };
    let step = step
        .map(f64::abs)
        .filter(|s| *s > 0.0)
        .ok_or_else(|| Error::Model(format!("a {what} range needs a nonzero step")))?;
    let count = ((b - a).abs() / step + 1e-9).floor() as usize;
    let sign = (b - a).signum();
    Ok((0..=count).map(|k| a + sign * step * k as f64).collect())
}

// ----------------------------------------------------------------------------
// boundary step

/// One row of a tracked phase boundary. `e1` and `e2` are `E - mu x` per site.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub t: f64,
    pub mu: f64,
    pub x1: f64,
    pub x2: f64,
    pub e1: f64,
    pub e2: f64,
    pub stderr_x1: f64,
    pub stderr_x2: f64,
    pub note: Option<String>,
}

impl BoundaryPoint {
    pub fn new(t: f64, mu: f64, x1: f64, x2: f64, e1: f64, e2: f64) -> Self {
        BoundaryPoint {
            t,
            mu,
            x1,
            x2,
            e1,
            e2,
            stderr_x1: 0.0,
            stderr_x2: 0.0,
            note: None,
        }
    }
}

impl TableRow for BoundaryPoint {
    fn columns(&self) -> Vec<f64> {
        vec![self.t, self.mu, self.x1, self.x2, self.e1, self.e2]
    }

    fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }
}

/// Predicted chemical potential for the next temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuStep {
    pub mu_next: f64,
    pub dmu: f64,
    pub dmu_dbeta: f64,
}

/// Slope of the coexistence line, `dmu/dbeta = (E2 - E1) / (beta (x2 - x1)) - mu / beta`.
/// `None` when the two compositions coincide.
pub fn dmu_dbeta(p: &BoundaryPoint, k_b: f64) -> Option<f64> {
    let dx = p.x2 - p.x1;
    if dx.abs() < 1e-12 {
        return None;
    }
    let beta = 1.0 / (k_b * p.t);
    let e1 = p.e1 + p.mu * p.x1;
    let e2 = p.e2 + p.mu * p.x2;
    Some((e2 - e1) / (beta * dx) - p.mu / beta)
}

/// Finite-difference `dmu/dbeta` between two boundary rows.
pub fn finite_difference_dmu_dbeta(a: &BoundaryPoint, b: &BoundaryPoint, k_b: f64) -> f64 {
    let beta = |p: &BoundaryPoint| 1.0 / (k_b * p.t);
    (b.mu - a.mu) / (beta(b) - beta(a))
}

/// Second-order Adams-Bashforth step of the coexistence chemical potential to
/// `t_next`. The first step passes `prev_dmu = None`. `None` signals that the two
/// phases have the same composition.
pub fn predict_mu_step(prev: &BoundaryPoint, prev_dmu: Option<f64>, t_next: f64, k_b: f64) -> Option<MuStep> {
    let slope = dmu_dbeta(prev, k_b)?;
    let dbeta = 1.0 / (k_b * t_next) - 1.0 / (k_b * prev.t);
    let dmu = slope * dbeta;
    let old = prev_dmu.unwrap_or(dmu);
    Some(MuStep {
        mu_next: prev.mu + 1.5 * dmu - 0.5 * old,
        dmu,
        dmu_dbeta: slope,
    })
}

/// Chemical potential where the low-temperature expansions of two ground states give
/// equal grand potentials, by Newton iteration from the zero-temperature tangent.
pub fn solve_boundary_mu_lte(sys: &System, gs1: usize, gs2: usize, t: f64, controls: &RunControls) -> Result<f64> {
    let (a, b) = (sys.gs.get(gs1)?, sys.gs.get(gs2)?);
    let mut mu = (b.e - a.e) / (b.x - a.x);
    for _ in 0..100 {
        let l1 = sys.lte(gs1, t, mu, controls)?;
        let l2 = sys.lte(gs2, t, mu, controls)?;
        if !l1.valid || !l2.valid {
            return Err(Error::Tracking(format!(
                "low-temperature expansion not valid at T = {t} (corrections {:.3e}, {:.3e}); raise ltep or lower T",
                l1.correction, l2.correction
            )));
        }
        let f = l1.point.phi - l2.point.phi;
        if f.abs() < 1e-10 {
            return Ok(mu);
        }
        mu -= f / (l2.point.x - l1.point.x);
    }
    Err(Error::Tracking(format!("boundary chemical potential did not converge at T = {t}")))
}

/// Highest temperature on a doubling grid, starting at `k_B T = |V|max / 100`, at
/// which both expansions are valid; returns it with its boundary chemical potential.
pub fn auto_start(sys: &System, gs1: usize, gs2: usize, controls: &RunControls) -> Result<(f64, f64)> {
    let vmax = sys
        .ce
        .orbits()
        .iter()
        .filter(|o| o.size() > 0)
        .map(|o| sys.ce.eci().values[o.id].abs())
        .fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(Error::Tracking("all interactions vanish".into()));
    }
    let mut t = vmax / 100.0 / controls.k_b;
    let mut best = None;
    for _ in 0..60 {
        match solve_boundary_mu_lte(sys, gs1, gs2, t, controls) {
            Ok(mu) => best = Some((t, mu)),
            Err(_) => break,
        }
        t *= 2.0;
    }
    best.ok_or_else(|| {
        Error::Tracking(format!(
            "low-temperature expansions never valid for ground states {gs1} and {gs2}; raise ltep"
        ))
    })
}

/// Settings of a boundary tracking run.
#[derive(Debug, Clone)]
pub struct BoundaryPlan {
    pub gs1: usize,
    pub gs2: usize,
    /// Starting (T, physical mu); found from the low-temperature expansion when absent.
    pub start: Option<(f64, f64)>,
    /// Temperature step. Only its magnitude is used; `down` sets the direction.
    pub dt: f64,
    pub down: bool,
    pub t_end: Option<f64>,
    pub er: f64,
    pub controls: RunControls,
}

pub const NOTE_CLOSURE: &str = "gap closure";
pub const NOTE_UNCONVERGED: &str = "not converged";
pub const NOTE_MERGED: &str = "phases merged";

/// Whether either walker has left its phase: its composition sits on the far side of
/// the midpoint between the compositions of the previous row.
fn phases_merged(prev: &BoundaryPoint, row: &BoundaryPoint) -> bool {
    let mid = 0.5 * (prev.x1 + prev.x2);
    (row.x1 - mid) * (prev.x1 - mid) <= 0.0 || (row.x2 - mid) * (prev.x2 - mid) <= 0.0
}

/// Follows the two-phase boundary between `gs1` and `gs2` in temperature. Each phase
/// keeps its own walker, warm-started from its previous configuration. Every row is
/// passed to `emit` as soon as it is measured. The run stops at the first row showing
/// gap closure, a walker that left its phase, or a point that did not converge.
pub fn track_boundary(
    sys: &System,
    plan: &BoundaryPlan,
    mut emit: impl FnMut(&BoundaryPoint),
) -> Result<Vec<BoundaryPoint>> {
    let c = &plan.controls;
    if plan.gs1 == plan.gs2 {
        return Err(Error::Tracking("gs1 and gs2 must differ".into()));
    }
    if plan.gs1.abs_diff(plan.gs2) != 1 {
        log::warn!(
            "ground states {} and {} are not neighbours in composition",
            plan.gs1,
            plan.gs2
        );
    }
    let dt = plan.dt.abs();
    if dt == 0.0 {
        return Err(Error::Tracking("temperature step must be nonzero".into()));
    }
    let (mut t, mut mu) = match plan.start {
        Some(s) => s,
        None => auto_start(sys, plan.gs1, plan.gs2, c)?,
    };
    let cell = sys.supercell(plan.er, &[plan.gs1, plan.gs2])?;
    let base = sys.ce.on_supercell(&cell);
    let tile = |g: usize| sys.gs.get(g)?.tile(&sys.ce, &cell);
    let mut walkers = [
        Walker::new(base.clone(), tile(plan.gs1)?, derive_seed(c.seed, 0))?,
        Walker::new(base.clone(), tile(plan.gs2)?, derive_seed(c.seed, 1))?,
    ];

    let mut rows = Vec::new();
    let mut prev_dmu = None;
    loop {
        let model = sys.model_at(&base, t)?;
        for w in walkers.iter_mut() {
            w.set_model(model.clone())?;
            w.set_temperature(t, c.k_b);
            w.set_mu(mu);
        }
        let [w1, w2] = &mut walkers;
        let (s1, s2) = std::thread::scope(|scope| {
            let h = scope.spawn(|| run_point(w1, t, c));
            let s2 = run_point(w2, t, c);
            (h.join().expect("walker thread panicked"), s2)
        });
        let mut row = BoundaryPoint {
            stderr_x1: s1.stderr_x,
            stderr_x2: s2.stderr_x,
            ..BoundaryPoint::new(t, mu, s1.x, s2.x, s1.e_bar, s2.e_bar)
        };
        let closed = (row.x2 - row.x1).abs() < 2.0 * c.dx;
        if closed && rows.is_empty() {
            return Err(Error::Tracking(format!(
                "chemical potential {mu} does not stabilize this ground state at T = {t}: both phases relaxed to x = {:.4}, {:.4}",
                row.x1, row.x2
            )));
        }
        let stop = if closed {
            row.note = Some(NOTE_CLOSURE.into());
            true
        } else if rows.last().is_some_and(|prev| phases_merged(prev, &row)) {
            row.note = Some(NOTE_MERGED.into());
            true
        } else if !(s1.converged && s2.converged) {
            row.note = Some(NOTE_UNCONVERGED.into());
            true
        } else {
            false
        };
        log::info!(
            "T = {t:.3} mu = {mu:.6e}: x = {:.5}, {:.5}; sweeps {}+{}, {}+{}",
            row.x1,
            row.x2,
            s1.n_eq,
            s1.n_avg,
            s2.n_eq,
            s2.n_avg
        );
        emit(&row);
        rows.push(row);
        if stop {
            break;
        }
        let t_next = if plan.down { t - dt } else { t + dt };
        let past_end = plan.t_end.is_some_and(|end| if plan.down { t_next < end } else { t_next > end });
        if t_next <= 0.0 || past_end {
            break;
        }
        let Some(step) = predict_mu_step(rows.last().unwrap(), prev_dmu, t_next, c.k_b) else {
            break;
        };
        prev_dmu = Some(step.dmu);
        mu = step.mu_next;
        t = t_next;
    }
    Ok(rows)
}

// ----------------------------------------------------------------------------
// scanning

/// Settings of a (T, mu) scan. Chemical potentials are in normalized input units.
#[derive(Debug, Clone)]
pub struct ScanPlan {
    /// Starting ground state; `None` starts from random spins.
    pub gs: Option<usize>,
    pub mu0: f64,
    pub mu1: Option<f64>,
    pub dmu: Option<f64>,
    pub t0: f64,
    pub t1: Option<f64>,
    pub dt: Option<f64>,
    pub down: bool,
    pub er: f64,
    pub controls: RunControls,
}

/// One scanned point. The third column is `E - mu x`, or `E` in canonical mode, and
/// the fifth the grand potential, or `phi + mu x` in canonical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub mu_input: f64,
    pub stats: PointStats,
    pub phi: f64,
    pub stderr_phi: f64,
    pub canonical: bool,
    pub note: Option<String>,
}

impl TableRow for ScanRow {
    fn columns(&self) -> Vec<f64> {
        let s = &self.stats;
        let (energy, potential) = if self.canonical {
            (s.e, self.phi + s.mu * s.x)
        } else {
            (s.e_bar, self.phi)
        };
        vec![s.t, s.mu, energy, s.x, potential, s.stderr_x, s.n_eq as f64, s.n_avg as f64]
    }

    fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    LowTemperature,
    HighTemperature,
    Given,
}

/// Absolute grand potential at the first point of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSeed {
    pub point: PhiPoint,
    pub source: SeedSource,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub seed: Option<PhiSeed>,
    pub supercell: Supercell,
    /// Configuration after the last measured point.
    pub last_config: SpinConfig,
}

impl RunControls {
    /// Threshold on `|x - x_LTE|` that flags a phase transition, or `None` when off.
    pub fn tstat_threshold(&self) -> Option<f64> {
        match self.tstat {
            Some(v) if v == 0.0 => None,
            Some(v) => Some(v.abs()),
            None => Some(3.0 * self.dx.max(0.05)),
        }
    }
}

/// Runs the walker over a grid of chemical potentials (outer loop) and temperatures
/// (inner loop), carrying the grand potential by thermodynamic integration.
pub fn scan(sys: &System, plan: &ScanPlan, mut emit: impl FnMut(&ScanRow)) -> Result<ScanOutcome> {
    let c = &plan.controls;
    let map = sys.mu_map()?;
    let us = grid(plan.mu0, plan.mu1, plan.dmu, "chemical potential")?;
    let mut ts = grid(plan.t0, plan.t1, plan.dt, "temperature")?;
    ts.sort_by(f64::total_cmp);
    if plan.down {
        ts.reverse();
    }
    if ts[0] <= 0.0 {
        return Err(Error::Model("temperatures must be positive".into()));
    }
    let cell = match plan.gs {
        Some(g) => sys.supercell(plan.er, &[g])?,
        None => sys.supercell(plan.er, &[])?,
    };
    let base = sys.ce.on_supercell(&cell);
    let initial = match plan.gs {
        Some(g) => sys.gs.get(g)?.tile(&sys.ce, &cell)?,
        None => Walker::random(base.clone(), c.init_x.unwrap_or(0.0), derive_seed(c.seed, u64::MAX))?
            .config()
            .clone(),
    };

    let mut rows = Vec::new();
    let mut seed_info = None;
    let mut column_start: Option<(SpinConfig, PhiPoint)> = None;
    let mut last_config = initial.clone();
    for (ci, &u) in us.iter().enumerate() {
        let mu = map.to_physical(u);
        let start_config = column_start.as_ref().map_or_else(|| initial.clone(), |(cfg, _)| cfg.clone());
        let mut walker = Walker::new(base.clone(), start_config, derive_seed(c.seed, ci as u64))?;
        let mut prev: Option<PhiPoint> = None;
        for &t in &ts {
            walker.set_model(sys.model_at(&base, t)?)?;
            walker.set_temperature(t, c.k_b);
            walker.set_mu(mu);
            let stats = run_point(&mut walker, t, c);
            let lte = plan.gs.map(|g| sys.lte(g, t, mu, c)).transpose()?;
            let point = match (&prev, &column_start) {
                (Some(p), _) => integrate_phi(p, &stats)?,
                (None, Some((_, p))) => integrate_phi(p, &stats)?,
                (None, None) => {
                    let seed = first_seed(sys, c, lte.as_ref(), t, mu);
                    let point = stats.to_phi_point(seed.point.phi, 0.0);
                    seed_info = Some(seed);
                    point
                }
            };
            if prev.is_none() {
                column_start = Some((walker.config().clone(), point));
            }
            prev = Some(point);

            let mut note = (!stats.converged).then(|| NOTE_UNCONVERGED.to_string());
            let mut abort = false;
            if let (Some(l), Some(thr)) = (&lte, c.tstat_threshold()) {
                let dev = (stats.x - l.point.x).abs();
                if l.valid && dev > thr {
                    note = Some(format!("phase transition: |x - x_lte| = {dev:.4}"));
                    abort = true;
                }
            }
            let row = ScanRow {
                mu_input: u,
                stats,
                phi: point.phi,
                stderr_phi: point.stderr_phi,
                canonical: c.g2c,
                note,
            };
            emit(&row);
            rows.push(row);
            if abort {
                break;
            }
        }
        last_config = walker.config().clone();
    }
    Ok(ScanOutcome {
        rows,
        seed: seed_info,
        supercell: cell,
        last_config,
    })
}

fn first_seed(sys: &System, c: &RunControls, lte: Option<&LteResult>, t: f64, mu: f64) -> PhiSeed {
    if let Some(phi) = c.phi0 {
        let mut point = hte_phi(&sys.ce, t, c.k_b, mu);
        point.phi = phi;
        return PhiSeed {
            point,
            source: SeedSource::Given,
        };
    }
    match lte {
        Some(l) if l.valid => PhiSeed {
            point: l.point,
            source: SeedSource::LowTemperature,
        },
        other => {
            if other.is_some() {
                log::warn!("low-temperature expansion not valid at T = {t}, mu = {mu}; seeding phi from the high-temperature expansion");
            }
            PhiSeed {
                point: hte_phi(&sys.ce, t, c.k_b, mu),
                source: SeedSource::HighTemperature,
            }
        }
    }
}

// ----------------------------------------------------------------------------
// annealing

/// Position of a configuration relative to the declared ground-state hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HullReport {
    pub x: f64,
    pub e: f64,
    /// `e - mu x` of the configuration.
    pub grand: f64,
    /// Lowest `e - mu x` over the declared ground states.
    pub hull_grand: f64,
    /// Declared hull energy at `x`, when `x` is inside the declared range.
    pub hull_e: Option<f64>,
    /// Index of a declared ground state with composition `x`.
    pub declared: Option<usize>,
    /// The configuration reaches the declared hull (within tolerance) at a
    /// composition no declared ground state has: the ground-state list is incomplete.
    pub violation: bool,
}

/// Energy tolerance per site for hull comparisons.
pub const HULL_TOL: f64 = 1e-6;

impl System {
    pub fn hull_report(&self, config: &SpinConfig, model: &SupercellModel, mu: f64) -> HullReport {
        let x = config.x();
        let e = model.energy_per_site(config.spins());
        let hull_e = self.hull_energy(x);
        let declared = self.gs.states().iter().position(|g| (g.x - x).abs() < 1e-9);
        let hull_grand = self.gs.hull_grand(mu);
        let grand = e - mu * x;
        let on_or_below = hull_e.map_or(grand < hull_grand - HULL_TOL, |h| e <= h + HULL_TOL);
        HullReport {
            x,
            e,
            grand,
            hull_grand,
            hull_e,
            declared,
            violation: declared.is_none() && on_or_below,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub config: SpinConfig,
    pub supercell: Supercell,
    pub report: HullReport,
}

/// Anneals random spins through a decreasing schedule of (T, sweeps) at fixed
/// physical `mu` and compares the final state with the declared hull.
pub fn anneal_ground_state(
    sys: &System,
    mu: f64,
    schedule: &[(f64, u64)],
    er: f64,
    seed: u64,
    k_b: f64,
) -> Result<AnnealOutcome> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1].0 > w[0].0) {
        return Err(Error::Model("annealing schedule must be nonempty and non-increasing in T".into()));
    }
    let cell = sys.supercell(er, &[])?;
    let base = sys.ce.on_supercell(&cell);
    let mut walker = Walker::random(base.clone(), 0.0, seed)?;
    walker.set_mu(mu);
    for &(t, sweeps) in schedule {
        walker.set_model(sys.model_at(&base, t)?)?;
        walker.set_temperature(t, k_b);
        for _ in 0..sweeps {
            walker.sweep();
        }
    }
    let report = sys.hull_report(walker.config(), &base, mu);
    Ok(AnnealOutcome {
        config: walker.config().clone(),
        supercell: cell,
        report,
    })
}
