//! Reference thermodynamics: the ground-state hull and its chemical-potential
//! conventions, low- and high-temperature expansions, exact enumeration on small
//! cells, and the mean-field miscibility estimate.

use crate::atat_io::{EciTable, StructureSpec};
use crate::ce::{ClusterExpansion, SupercellModel};
use crate::error::{Error, Result};
use crate::lattice::{spin_config_from_structure, structure_periodicity, SpinConfig, Supercell};

/// A declared ground state, tiled on the smallest cell in which a single flip
/// does not interact with its own periodic images.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub structure: StructureSpec,
    pub period: [usize; 3],
    pub x: f64,
    pub e: f64,
    model: SupercellModel,
    config: SpinConfig,
}

impl GroundState {
    pub fn model(&self) -> &SupercellModel {
        &self.model
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    /// Tiles this ground state on a supercell whose repeats are multiples of its period.
    pub fn tile(&self, ce: &ClusterExpansion, supercell: &Supercell) -> Result<SpinConfig> {
        spin_config_from_structure(&self.structure, ce.lattice(), supercell)
    }
}

/// Declared ground states ordered by composition.
#[derive(Debug, Clone)]
pub struct GroundStateSet {
    states: Vec<GroundState>,
}

impl GroundStateSet {
    pub fn new(ce: &ClusterExpansion, structures: &[StructureSpec]) -> Result<Self> {
        if structures.is_empty() {
            return Err(Error::Thermo("no ground states given".into()));
        }
        let spacing = ce.lattice().plane_spacings();
        let reach = ce.max_diameter();
        let mut states: Vec<GroundState> = Vec::with_capacity(structures.len());
        for (i, s) in structures.iter().enumerate() {
            let period = structure_periodicity(s, ce.lattice())?;
            let mut repeats = period;
            for k in 0..3 {
                while repeats[k] as f64 * spacing[k] <= reach + 1e-8 {
                    repeats[k] += period[k];
                }
            }
            let cell = Supercell::new(repeats, ce.n_basis())?;
            let model = ce.on_supercell(&cell);
            let config = spin_config_from_structure(s, ce.lattice(), &cell)?;
            let state = GroundState {
                structure: s.clone(),
                period,
                x: config.x(),
                e: model.energy_per_site(config.spins()),
                model,
                config,
            };
            if let Some(prev) = states.last() {
                if state.x <= prev.x {
                    return Err(Error::Thermo(format!(
                        "ground state {i} has x = {} but the previous one has x = {}; compositions must increase",
                        state.x, prev.x
                    )));
                }
            }
            states.push(state);
        }
        Ok(GroundStateSet { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<&GroundState> {
        self.states
            .get(i)
            .ok_or_else(|| Error::Thermo(format!("no ground state {i}; {} declared", self.states.len())))
    }

    pub fn states(&self) -> &[GroundState] {
        &self.states
    }

    /// Lowest `e - mu x` over the declared ground states.
    pub fn hull_grand(&self, mu: f64) -> f64 {
        self.states.iter().map(|g| g.e - mu * g.x).fold(f64::INFINITY, f64::min)
    }
}

/// Zero-temperature two-phase chemical potentials between neighbouring ground states.
pub fn boundary_mus(gs: &GroundStateSet) -> Result<Vec<f64>> {
    if gs.len() < 2 {
        return Err(Error::Thermo("at least two ground states are needed".into()));
    }
    gs.states()
        .windows(2)
        .map(|w| {
            let dx = w[1].x - w[0].x;
            if dx.abs() < 1e-12 {
                return Err(Error::Thermo("adjacent ground states have the same composition".into()));
            }
            Ok((w[1].e - w[0].e) / dx)
        })
        .collect()
}

/// Map between the normalized input chemical potential and the physical one.
///
/// With two ground states the input is a shift from the two-phase value. With more,
/// input `k` sits on the boundary between ground states `k - 1` and `k`, linear in
/// between, and the outer segments continue with the slope of the nearest interior one.
#[derive(Debug, Clone)]
pub struct MuMap {
    knots: Vec<f64>,
}

impl MuMap {
    pub fn new(gs: &GroundStateSet) -> Result<Self> {
        let knots = boundary_mus(gs)?;
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Thermo(format!(
                "boundary chemical potentials {knots:?} do not increase; the declared ground states do not form a convex hull"
            )));
        }
        Ok(MuMap { knots })
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Thermo("knots must be nonempty and increasing".into()));
        }
        Ok(MuMap { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Segment index and its (u_start, mu_start, slope).
    fn segment_for(&self, i: usize) -> (f64, f64, f64) {
        let k = &self.knots;
        let i = i.min(k.len() - 2);
        ((i + 1) as f64, k[i], k[i + 1] - k[i])
    }

    pub fn to_physical(&self, u: f64) -> f64 {
        if self.knots.len() == 1 {
            return self.knots[0] + u;
        }
        let seg = if u <= 1.0 { 0 } else { (u.floor() as usize - 1).min(self.knots.len() - 2) };
        let (u0, m0, slope) = self.segment_for(seg);
        m0 + (u - u0) * slope
    }

    pub fn to_input(&self, mu: f64) -> f64 {
        if self.knots.len() == 1 {
            return mu - self.knots[0];
        }
        let seg = self.knots[1..self.knots.len() - 1].iter().take_while(|&&k| mu > k).count();
        let (u0, m0, slope) = self.segment_for(seg);
        u0 + (mu - m0) / slope
    }
}

pub fn input_mu_to_physical(u: f64, gs: &GroundStateSet) -> Result<f64> {
    Ok(MuMap::new(gs)?.to_physical(u))
}

/// Thermodynamic state at one (T, mu): grand potential per site, composition,
/// energy, and the derivatives used by the corrected integration rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPoint {
    pub t: f64,
    pub beta: f64,
    pub mu: f64,
    pub phi: f64,
    pub x: f64,
    pub e: f64,
    /// d(e - mu x)/d(beta) at fixed mu.
    pub de_bar_dbeta: f64,
    /// dx/d(mu) at fixed beta.
    pub dx_dmu: f64,
    pub stderr_phi: f64,
}

impl PhiPoint {
    pub fn e_bar(&self) -> f64 {
        self.e - self.mu * self.x
    }
}

/// First-order low-temperature expansion about a ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LteResult {
    pub point: PhiPoint,
    /// Magnitude of the expansion term per site.
    pub correction: f64,
    /// Every single flip raises `e - mu x` and the correction is below the threshold.
    pub valid: bool,
    /// Some flip lowers `e - mu x`: mu does not stabilize this ground state.
    pub unstable: bool,
}

/// Single-flip low-temperature expansion of ground state `index`, evaluated with
/// the coefficients valid at temperature `t`.
pub fn lte_phi(
    gs: &GroundStateSet,
    index: usize,
    ce: &ClusterExpansion,
    t: f64,
    k_b: f64,
    mu: f64,
    ltep: f64,
) -> Result<LteResult> {
    let g = gs.get(index)?;
    let model = g.model().with_eci(&ce.eci_at_temperature(t))?;
    Ok(lte_from_model(&model, g.config(), t, k_b, mu, ltep))
}

pub(crate) fn lte_from_model(model: &SupercellModel, config: &SpinConfig, t: f64, k_b: f64, mu: f64, ltep: f64) -> LteResult {
    let beta = 1.0 / (k_b * t);
    let spins = config.spins();
    let n = spins.len() as f64;
    let e0 = model.energy_per_site(spins);
    let x0 = config.x();
    let phi0 = e0 - mu * x0;
    let (mut z, mut zx, mut ze, mut ze2) = (0.0, 0.0, 0.0, 0.0);
    let mut unstable = false;
    for s in 0..spins.len() {
        let d = model.delta_grand(spins, s, mu);
        if d <= 0.0 {
            unstable = true;
        }
        let w = (-beta * d).exp();
        z += w;
        zx += spins[s] as f64 * w;
        ze += d * w;
        ze2 += d * d * w;
    }
    let correction = z / (beta * n);
    let x = x0 - 2.0 * zx / n;
    let e_bar = phi0 + ze / n;
    let point = PhiPoint {
        t,
        beta,
        mu,
        phi: phi0 - correction,
        x,
        e: e_bar + mu * x,
        de_bar_dbeta: -ze2 / n,
        dx_dmu: 4.0 * beta * z / n,
        stderr_phi: 0.0,
    };
    LteResult {
        point,
        correction,
        valid: !unstable && correction.is_finite() && correction < ltep,
        unstable,
    }
}

/// Point-term high-temperature expansion: independent sites in the field of the
/// point clusters.
pub fn hte_phi(ce: &ClusterExpansion, t: f64, k_b: f64, mu: f64) -> PhiPoint {
    let beta = 1.0 / (k_b * t);
    let eci = ce.eci_at_temperature(t);
    let nb = ce.n_basis() as f64;
    let (e_empty, fields) = site_fields(ce, &eci);
    let mut phi = e_empty / nb;
    let (mut x, mut e, mut dx, mut de) = (0.0, e_empty / nb, 0.0, 0.0);
    for h in fields {
        let y = beta * (mu - h);
        let ln2cosh = y.abs() + (-2.0 * y.abs()).exp().ln_1p();
        let th = y.tanh();
        phi -= ln2cosh / (beta * nb);
        x += th / nb;
        e += h * th / nb;
        let sech2 = 1.0 - th * th;
        dx += beta * sech2 / nb;
        de -= (mu - h) * (mu - h) * sech2 / nb;
    }
    PhiPoint {
        t,
        beta,
        mu,
        phi,
        x,
        e,
        de_bar_dbeta: de,
        dx_dmu: dx,
        stderr_phi: 0.0,
    }
}

/// Energy of the empty cluster per cell and the point-cluster field on each basis site.
fn site_fields(ce: &ClusterExpansion, eci: &EciTable) -> (f64, Vec<f64>) {
    let mut e_empty = 0.0;
    let mut fields = vec![0.0; ce.n_basis()];
    for o in ce.orbits() {
        match o.size() {
            0 => e_empty += eci.values[o.id],
            1 => {
                for m in &o.members {
                    fields[m[0].basis] += eci.values[o.id];
                }
            }
            _ => {}
        }
    }
    (e_empty, fields)
}

/// Largest cell handled by exact enumeration.
pub const MAX_EXACT_SITES: usize = 24;

fn check_enumerable(model: &SupercellModel) -> Result<usize> {
    let n = model.n_sites();
    if n > MAX_EXACT_SITES {
        return Err(Error::Thermo(format!(
            "exact enumeration is limited to {MAX_EXACT_SITES} sites, cell has {n}"
        )));
    }
    Ok(n)
}

/// Visits every configuration of the cell in Gray-code order, passing the spin
/// state (bit `i` set means site `i` is +1) together with the total energy and spin sum.
fn for_each_config(model: &SupercellModel, mut f: impl FnMut(u32, f64, i64)) {
    let n = model.n_sites();
    let mut spins = vec![-1i8; n];
    let mut e = model.total_energy(&spins);
    let mut m = -(n as i64);
    let mut bits: u32 = 0;
    f(bits, e, m);
    for step in 1u64..(1u64 << n) {
        let site = step.trailing_zeros() as usize;
        e += model.delta_energy(&spins, site);
        spins[site] = -spins[site];
        m += 2 * spins[site] as i64;
        bits ^= 1 << site;
        f(bits, e, m);
    }
}

/// Exact grand potential and averages by full enumeration of the cell.
pub fn exact_thermo(model: &SupercellModel, t: f64, k_b: f64, mu: f64) -> Result<PhiPoint> {
    let n = check_enumerable(model)? as f64;
    let beta = 1.0 / (k_b * t);
    // Running log-sum-exp of -beta * Phi with weighted moments.
    let mut shift = f64::NEG_INFINITY;
    let (mut z, mut sx, mut se, mut sxx, mut see) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for_each_config(model, |_, e, m| {
        let phi_tot = e - mu * m as f64;
        let w_log = -beta * phi_tot;
        if w_log > shift {
            let r = (shift - w_log).exp();
            z *= r;
            sx *= r;
            se *= r;
            sxx *= r;
            see *= r;
            shift = w_log;
        }
        let w = (w_log - shift).exp();
        let x = m as f64 / n;
        let eb = phi_tot / n;
        z += w;
        sx += w * x;
        se += w * eb;
        sxx += w * x * x;
        see += w * eb * eb;
    });
    let x = sx / z;
    let e_bar = se / z;
    let var_x = (sxx / z - x * x).max(0.0);
    let var_e = (see / z - e_bar * e_bar).max(0.0);
    Ok(PhiPoint {
        t,
        beta,
        mu,
        phi: -(shift + z.ln()) / (beta * n),
        x,
        e: e_bar + mu * x,
        de_bar_dbeta: -n * var_e,
        dx_dmu: beta * n * var_x,
        stderr_phi: 0.0,
    })
}

/// Normalized Boltzmann weight of every configuration, indexed by the spin bitmask.
pub fn boltzmann_weights(model: &SupercellModel, t: f64, k_b: f64, mu: f64) -> Result<Vec<f64>> {
    let n = check_enumerable(model)?;
    let beta = 1.0 / (k_b * t);
    let mut logw = vec![0.0; 1 << n];
    for_each_config(model, |bits, e, m| logw[bits as usize] = -beta * (e - mu * m as f64));
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    Ok(w)
}

/// Ordering energy `-2 z V` of the nearest-neighbour pair interaction.
pub fn omega(ce: &ClusterExpansion, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Thermo("coordination number must be positive".into()));
    }
    let nn = ce
        .orbits()
        .iter()
        .filter(|o| o.size() == 2)
        .min_by(|a, b| a.diameter.total_cmp(&b.diameter))
        .ok_or_else(|| Error::Thermo("model has no pair cluster".into()))?;
    Ok(-2.0 * z * ce.eci().values[nn.id])
}

/// Mean-field estimate of the miscibility-gap top, `0.8 Omega / (2 k_B)`.
pub fn mean_field_tmisc(ce: &ClusterExpansion, z: f64, k_b: f64) -> Result<f64> {
    Ok(0.8 * omega(ce, z)? / (2.0 * k_b))
}
