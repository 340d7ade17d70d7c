//! Cluster-expansion Hamiltonian on a periodic supercell.

use std::sync::Arc;

use crate::atat_io::{ClusterOrbitSpec, EciTable, TEciTable};
use crate::error::{Error, Result};
use crate::lattice::{expand_orbit, point_symmetries, ExpandedOrbit, Lattice, SpinConfig, Supercell};

/// Expanded orbits together with their interaction coefficients.
#[derive(Debug, Clone)]
pub struct ClusterExpansion {
    lattice: Lattice,
    orbits: Vec<ExpandedOrbit>,
    eci: EciTable,
    teci: Option<TEciTable>,
}

impl ClusterExpansion {
    pub fn new(lattice: Lattice, clusters: &[ClusterOrbitSpec], eci: EciTable, teci: Option<TEciTable>) -> Result<Self> {
        eci.check_len(clusters.len())?;
        if let Some(t) = &teci {
            if t.n_clusters() != clusters.len() {
                return Err(Error::Model(format!(
                    "temperature-dependent table has {} coefficients per row for {} clusters",
                    t.n_clusters(),
                    clusters.len()
                )));
            }
        }
        let syms = point_symmetries(&lattice);
        let orbits = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| expand_orbit(i, c, &lattice, &syms))
            .collect::<Result<Vec<_>>>()?;
        for o in &orbits {
            for member in &o.members {
                for p in member {
                    if lattice.species(p.basis).len() != 2 {
                        return Err(Error::Model(format!(
                            "cluster {} touches lattice site {} which is not binary",
                            o.id, p.basis
                        )));
                    }
                }
            }
        }
        Ok(ClusterExpansion {
            lattice,
            orbits,
            eci,
            teci,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn orbits(&self) -> &[ExpandedOrbit] {
        &self.orbits
    }

    pub fn eci(&self) -> &EciTable {
        &self.eci
    }

    pub fn teci(&self) -> Option<&TEciTable> {
        self.teci.as_ref()
    }

    pub fn n_basis(&self) -> usize {
        self.lattice.n_basis()
    }

    pub fn max_diameter(&self) -> f64 {
        self.orbits.iter().map(|o| o.diameter).fold(0.0, f64::max)
    }

    /// Coefficients at temperature `t`, interpolated linearly on the temperature grid
    /// and clamped at its ends. Without a temperature table the static values are returned.
    pub fn eci_at_temperature(&self, t: f64) -> EciTable {
        let Some(table) = &self.teci else {
            return self.eci.clone();
        };
        let last = table.count() - 1;
        let pos = (t - table.t_start) / table.t_step;
        if pos < 0.0 || pos > last as f64 {
            log::warn!(
                "T = {t} lies outside the ECI temperature grid [{}, {}]; clamping",
                table.t_start,
                table.temperature(last)
            );
        }
        let pos = pos.clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last.saturating_sub(1));
        let w = pos - k as f64;
        let lo = &table.rows[k].values;
        let hi = &table.rows[(k + 1).min(last)].values;
        EciTable::new(lo.iter().zip(hi).map(|(a, b)| a + w * (b - a)).collect())
    }

    /// Builds the site-cluster adjacency on a supercell, using the static coefficients.
    pub fn on_supercell(&self, supercell: &Supercell) -> SupercellModel {
        SupercellModel {
            index: Arc::new(SiteClusterIndex::new(self, supercell)),
            eci: self.eci.values.clone(),
        }
    }
}

/// Every cluster instance of a supercell, and for each site the instances it belongs to.
#[derive(Debug)]
pub struct SiteClusterIndex {
    supercell: Supercell,
    /// Number of instances per orbit in the whole supercell.
    counts: Vec<usize>,
    instance_orbit: Vec<u32>,
    instance_start: Vec<u32>,
    instance_sites: Vec<u32>,
    /// Per site, a run of (orbit, range into `others`) entries.
    site_start: Vec<u32>,
    entry_orbit: Vec<u32>,
    entry_start: Vec<u32>,
    others: Vec<u32>,
}

impl SiteClusterIndex {
    pub fn new(ce: &ClusterExpansion, supercell: &Supercell) -> Self {
        let n = supercell.n_sites();
        let mut counts = vec![0; ce.orbits().len()];
        let mut instance_orbit = Vec::new();
        let mut instance_start = vec![0u32];
        let mut instance_sites: Vec<u32> = Vec::new();
        let mut per_site: Vec<Vec<(u32, Vec<u32>)>> = vec![Vec::new(); n];

        let [n1, n2, n3] = supercell.repeats();
        for orbit in ce.orbits() {
            for member in &orbit.members {
                for i in 0..n1 as i64 {
                    for j in 0..n2 as i64 {
                        for k in 0..n3 as i64 {
                            let sites: Vec<u32> = member
                                .iter()
                                .map(|p| {
                                    let o = [p.offset[0] + i, p.offset[1] + j, p.offset[2] + k];
                                    supercell.index(crate::lattice::SiteRef::new(o, p.basis)) as u32
                                })
                                .collect();
                            counts[orbit.id] += 1;
                            instance_orbit.push(orbit.id as u32);
                            instance_sites.extend_from_slice(&sites);
                            instance_start.push(instance_sites.len() as u32);

                            let mut distinct = sites.clone();
                            distinct.sort_unstable();
                            distinct.dedup();
                            for &s in &distinct {
                                // A site that wraps onto itself an even number of times
                                // contributes sigma^2 = 1 and does not change on a flip.
                                if sites.iter().filter(|&&t| t == s).count() % 2 == 1 {
                                    let mut rest = sites.clone();
                                    let at = rest.iter().position(|&t| t == s).unwrap();
                                    rest.remove(at);
                                    per_site[s as usize].push((orbit.id as u32, rest));
                                }
                            }
                        }
                    }
                }
            }
        }

        let mut site_start = vec![0u32];
        let mut entry_orbit = Vec::new();
        let mut entry_start = vec![0u32];
        let mut others = Vec::new();
        for entries in per_site {
            for (o, rest) in entries {
                entry_orbit.push(o);
                others.extend(rest);
                entry_start.push(others.len() as u32);
            }
            site_start.push(entry_orbit.len() as u32);
        }
        SiteClusterIndex {
            supercell: supercell.clone(),
            counts,
            instance_orbit,
            instance_start,
            instance_sites,
            site_start,
            entry_orbit,
            entry_start,
            others,
        }
    }

    pub fn supercell(&self) -> &Supercell {
        &self.supercell
    }

    pub fn n_sites(&self) -> usize {
        self.supercell.n_sites()
    }

    /// Instances of orbit `o` in the supercell.
    pub fn instance_count(&self, o: usize) -> usize {
        self.counts[o]
    }

    /// Orbit id and member sites of every cluster instance.
    pub fn instances(&self) -> impl Iterator<Item = (usize, &[u32])> + '_ {
        (0..self.instance_orbit.len()).map(move |i| {
            let r = self.instance_start[i] as usize..self.instance_start[i + 1] as usize;
            (self.instance_orbit[i] as usize, &self.instance_sites[r])
        })
    }

    /// Orbit id and the remaining member sites of every instance containing `site`.
    pub fn site_entries(&self, site: usize) -> impl Iterator<Item = (usize, &[u32])> + '_ {
        let r = self.site_start[site] as usize..self.site_start[site + 1] as usize;
        r.map(move |e| {
            let o = self.entry_start[e] as usize..self.entry_start[e + 1] as usize;
            (self.entry_orbit[e] as usize, &self.others[o])
        })
    }
}

/// A cluster expansion bound to one supercell. The adjacency is shared, so
/// swapping in other coefficients is cheap.
#[derive(Debug, Clone)]
pub struct SupercellModel {
    index: Arc<SiteClusterIndex>,
    eci: Vec<f64>,
}

impl SupercellModel {
    pub fn index(&self) -> &SiteClusterIndex {
        &self.index
    }

    pub fn supercell(&self) -> &Supercell {
        self.index.supercell()
    }

    pub fn n_sites(&self) -> usize {
        self.index.n_sites()
    }

    pub fn eci(&self) -> &[f64] {
        &self.eci
    }

    pub fn with_eci(&self, eci: &EciTable) -> Result<SupercellModel> {
        eci.check_len(self.eci.len())?;
        Ok(SupercellModel {
            index: Arc::clone(&self.index),
            eci: eci.values.clone(),
        })
    }

    /// Average of the spin product over the instances of each orbit.
    pub fn correlations(&self, spins: &[i8]) -> Vec<f64> {
        let mut sums = vec![0i64; self.eci.len()];
        for (o, sites) in self.index.instances() {
            sums[o] += product(spins, sites) as i64;
        }
        sums.iter()
            .enumerate()
            .map(|(o, &s)| s as f64 / self.index.instance_count(o) as f64)
            .collect()
    }

    pub fn total_energy(&self, spins: &[i8]) -> f64 {
        self.index
            .instances()
            .map(|(o, sites)| self.eci[o] * product(spins, sites) as f64)
            .sum()
    }

    pub fn energy_per_site(&self, spins: &[i8]) -> f64 {
        self.total_energy(spins) / spins.len() as f64
    }

    /// Change of the total energy when `site` flips.
    pub fn delta_energy(&self, spins: &[i8], site: usize) -> f64 {
        let mut field = 0.0;
        for (o, others) in self.index.site_entries(site) {
            field += self.eci[o] * product(spins, others) as f64;
        }
        -2.0 * spins[site] as f64 * field
    }

    /// Change of `E_total - mu * sum(sigma)` when `site` flips.
    pub fn delta_grand(&self, spins: &[i8], site: usize, mu: f64) -> f64 {
        self.delta_energy(spins, site) + 2.0 * mu * spins[site] as f64
    }
}

#[inline]
fn product(spins: &[i8], sites: &[u32]) -> i8 {
    sites.iter().fold(1, |p, &s| p * spins[s as usize])
}

pub fn correlations(config: &SpinConfig, model: &SupercellModel) -> Vec<f64> {
    model.correlations(config.spins())
}

pub fn energy_per_site(config: &SpinConfig, model: &SupercellModel) -> f64 {
    model.energy_per_site(config.spins())
}

pub fn delta_grand(config: &SpinConfig, site: usize, mu: f64, model: &SupercellModel) -> f64 {
    model.delta_grand(config.spins(), site, mu)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::atat_io::{parse_clusters, parse_eci, parse_lattice, parse_structures, parse_teci};
    use crate::lattice::spin_config_from_structure;
    use crate::models::{ModelFiles, CHECKERBOARD, SEPARATION};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn expansion(files: &ModelFiles) -> ClusterExpansion {
        let lat = Lattice::new(parse_lattice(files.lattice).unwrap()).unwrap();
        ClusterExpansion::new(
            lat,
            &parse_clusters(files.clusters).unwrap(),
            parse_eci(files.eci).unwrap(),
            None,
        )
        .unwrap()
    }

    fn tiled(files: &ModelFiles, gs: usize, repeats: [usize; 3]) -> (SupercellModel, SpinConfig) {
        let ce = expansion(files);
        let cell = Supercell::new(repeats, 1).unwrap();
        let s = &parse_structures(files.ground_states).unwrap()[gs];
        let config = spin_config_from_structure(s, ce.lattice(), &cell).unwrap();
        (ce.on_supercell(&cell), config)
    }

    /// Oracle: energy from explicit bond counting on a cubic periodic box.
    fn bond_energy(spins: &[i8], n: usize, v1: f64, v2: f64) -> f64 {
        let idx = |i: usize, j: usize, k: usize| ((i % n) * n + j % n) * n + k % n;
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = spins[idx(i, j, k)] as f64;
                    e += v1 * s * spins[idx(i + 1, j, k)] as f64;
                    e += v1 * s * spins[idx(i, j + 1, k)] as f64;
                    e += v1 * s * spins[idx(i, j, k + 1)] as f64;
                    e += v2 * s * spins[idx(i + 2, j, k)] as f64;
                    e += v2 * s * spins[idx(i, j + 2, k)] as f64;
                    e += v2 * s * spins[idx(i, j, k + 2)] as f64;
                }
            }
        }
        e
    }

    #[test]
    fn pure_phase_energies() {
        let (m, c) = tiled(&SEPARATION, 0, [2, 2, 2]);
        assert_eq!(energy_per_site(&c, &m), -3.0);
        assert_eq!(correlations(&c, &m), vec![1.0, -1.0, 1.0]);
        let (m, c) = tiled(&CHECKERBOARD, 0, [4, 4, 4]);
        assert!((energy_per_site(&c, &m) - 2.4).abs() < 1e-12);
        let (m, c) = tiled(&CHECKERBOARD, 2, [4, 4, 4]);
        assert!((energy_per_site(&c, &m) - 2.4).abs() < 1e-12);
    }

    #[test]
    fn nacl_energy_and_correlations() {
        let (m, c) = tiled(&CHECKERBOARD, 1, [4, 4, 4]);
        assert!((energy_per_site(&c, &m) + 3.6).abs() < 1e-12);
        assert_eq!(correlations(&c, &m), vec![1.0, 0.0, -1.0, 1.0]);
        let expected = bond_energy(c.spins(), 4, 1.0, -0.2) / 64.0;
        assert!((energy_per_site(&c, &m) - expected).abs() < 1e-12);
    }

    #[test]
    fn flip_energies() {
        let (m, c) = tiled(&SEPARATION, 0, [3, 3, 3]);
        for s in 0..c.len() {
            assert_eq!(delta_grand(&c, s, 0.0, &m), 12.0);
        }
        let (m, c) = tiled(&CHECKERBOARD, 0, [5, 5, 5]);
        assert!((delta_grand(&c, 0, 0.0, &m) + 9.6).abs() < 1e-12);
        let (m, c) = tiled(&CHECKERBOARD, 2, [5, 5, 5]);
        assert!((delta_grand(&c, 0, 0.0, &m) + 9.6).abs() < 1e-12);
        let (m, c) = tiled(&CHECKERBOARD, 1, [4, 4, 4]);
        for s in 0..c.len() {
            assert!((delta_grand(&c, s, 0.0, &m) - 14.4).abs() < 1e-12);
        }
    }

    #[test]
    fn flip_twice_is_identity() {
        let (m, mut c) = tiled(&CHECKERBOARD, 1, [4, 4, 4]);
        let d1 = delta_grand(&c, 5, 0.7, &m);
        c.flip(5);
        let d2 = delta_grand(&c, 5, 0.7, &m);
        assert!((d1 + d2).abs() < 1e-12);
    }

    #[test]
    fn random_configs_match_bond_counting() {
        let ce = expansion(&CHECKERBOARD);
        let cell = Supercell::new([5, 5, 5], 1).unwrap();
        let m = ce.on_supercell(&cell);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let spins: Vec<i8> = (0..125).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let expected = bond_energy(&spins, 5, 1.0, -0.2);
            assert!((m.total_energy(&spins) - expected).abs() < 1e-9);
            let c = m.correlations(&spins);
            let x = spins.iter().map(|&s| s as f64).sum::<f64>() / 125.0;
            assert!((c[1] - x).abs() < 1e-12);
            assert_eq!(c[0], 1.0);
            assert!(c.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn self_wrapping_clusters_flip_correctly() {
        // On a 2x2x2 cell the 2a pair joins a site to its own image.
        let ce = expansion(&CHECKERBOARD);
        let cell = Supercell::new([2, 2, 2], 1).unwrap();
        let m = ce.on_supercell(&cell);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut spins: Vec<i8> = (0..8).map(|_| if rng.gen() { 1 } else { -1 }).collect();
        for _ in 0..200 {
            let s = rng.gen_range(0..8);
            let before = m.total_energy(&spins);
            let d = m.delta_energy(&spins, s);
            spins[s] = -spins[s];
            assert!((m.total_energy(&spins) - before - d).abs() < 1e-12);
        }
    }

    #[test]
    fn temperature_dependent_eci() {
        let lat = Lattice::new(parse_lattice(SEPARATION.lattice).unwrap()).unwrap();
        let cl = parse_clusters(SEPARATION.clusters).unwrap();
        let teci = parse_teci("1000 3 500\n0 0 -1\n0 0 -0.9\n0.2 0 -0.5\n", Some(3)).unwrap();
        let ce = ClusterExpansion::new(lat.clone(), &cl, parse_eci(SEPARATION.eci).unwrap(), Some(teci)).unwrap();
        assert_eq!(ce.eci_at_temperature(1500.0).values, vec![0.0, 0.0, -0.9]);
        let mid = ce.eci_at_temperature(1750.0).values;
        assert!((mid[0] - 0.1).abs() < 1e-15 && (mid[2] + 0.7).abs() < 1e-15);
        assert_eq!(ce.eci_at_temperature(100.0).values, vec![0.0, 0.0, -1.0]);
        assert_eq!(ce.eci_at_temperature(9000.0).values, vec![0.2, 0.0, -0.5]);
        let static_ce = expansion(&SEPARATION);
        assert_eq!(static_ce.eci_at_temperature(1234.0).values, vec![0.0, 0.0, -1.0]);

        let bad = parse_teci("1000 2 500\n0 0\n0 0\n", None).unwrap();
        assert!(ClusterExpansion::new(lat, &cl, parse_eci(SEPARATION.eci).unwrap(), Some(bad)).is_err());
    }

    #[test]
    fn eci_count_must_match() {
        let lat = Lattice::new(parse_lattice(SEPARATION.lattice).unwrap()).unwrap();
        let cl = parse_clusters(SEPARATION.clusters).unwrap();
        assert!(ClusterExpansion::new(lat, &cl, parse_eci("0\n0\n").unwrap(), None).is_err());
    }
}
