//! Lattice geometry: site lookup, the crystal's symmetry operations, cluster orbits,
//! diagonal supercells and spin configurations tiled from structures.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, Vector3};

use crate::atat_io::{ClusterOrbitSpec, LatticeSpec, StructureSpec};
use crate::error::{Error, Result};

/// Site matching tolerance, in fractional cell coordinates.
pub const SITE_TOL: f64 = 1e-5;

/// A lattice site: integer cell offset plus basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteRef {
    pub offset: [i64; 3],
    pub basis: usize,
}

impl SiteRef {
    pub fn new(offset: [i64; 3], basis: usize) -> Self {
        SiteRef { offset, basis }
    }

    fn shifted(self, by: [i64; 3]) -> Self {
        SiteRef {
            offset: [self.offset[0] + by[0], self.offset[1] + by[1], self.offset[2] + by[2]],
            basis: self.basis,
        }
    }
}

/// Parsed lattice with derived Cartesian geometry.
#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    /// Cell vectors as Cartesian rows.
    cell: Matrix3<f64>,
    /// Maps Cartesian positions to fractional cell coordinates.
    to_frac: Matrix3<f64>,
    /// Basis positions, fractional and reduced into [0, 1).
    basis: Vec<Vector3<f64>>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        let cell = spec.cell * spec.frame.matrix();
        if cell.determinant().abs() < 1e-12 {
            return Err(Error::Geometry("lattice cell is singular".into()));
        }
        let to_frac = cell
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Geometry("lattice cell is singular".into()))?;
        let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(spec.sites.len());
        for site in &spec.sites {
            if site.species.is_empty() {
                return Err(Error::Geometry("lattice site without species".into()));
            }
            let f = reduce(to_frac * spec.frame.to_cartesian(&site.position));
            if basis.iter().any(|b| frac_close(&(b - f))) {
                return Err(Error::Geometry("two lattice sites coincide".into()));
            }
            basis.push(f);
        }
        Ok(Lattice {
            spec,
            cell,
            to_frac,
            basis,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn species(&self, basis: usize) -> &[String] {
        &self.spec.sites[basis].species
    }

    /// Cartesian cell vectors as rows.
    pub fn cell(&self) -> &Matrix3<f64> {
        &self.cell
    }

    pub fn fractional(&self, cart: &Vector3<f64>) -> Vector3<f64> {
        self.to_frac * cart
    }

    pub fn cartesian(&self, frac: &Vector3<f64>) -> Vector3<f64> {
        self.cell.transpose() * frac
    }

    pub fn site_cartesian(&self, site: SiteRef) -> Vector3<f64> {
        let o = &site.offset;
        let f = self.basis[site.basis] + Vector3::new(o[0] as f64, o[1] as f64, o[2] as f64);
        self.cartesian(&f)
    }

    /// Lattice site at a Cartesian position, if any.
    pub fn locate(&self, cart: &Vector3<f64>) -> Option<SiteRef> {
        let f = self.fractional(cart);
        self.basis.iter().enumerate().find_map(|(b, bf)| {
            let d = f - bf;
            let n = d.map(f64::round);
            frac_close(&(d - n)).then(|| SiteRef::new([n.x as i64, n.y as i64, n.z as i64], b))
        })
    }

    /// Distance between lattice planes spanned by the other two cell vectors, per axis.
    pub fn plane_spacings(&self) -> [f64; 3] {
        let vol = self.cell.determinant().abs();
        let r = |i: usize| -> Vector3<f64> { self.cell.row(i).transpose() };
        [
            vol / r(1).cross(&r(2)).norm(),
            vol / r(2).cross(&r(0)).norm(),
            vol / r(0).cross(&r(1)).norm(),
        ]
    }

    fn length_scale(&self) -> f64 {
        self.cell.determinant().abs().cbrt()
    }
}

fn reduce(f: Vector3<f64>) -> Vector3<f64> {
    f.map(|v| {
        let r = v - v.floor();
        if r > 1.0 - SITE_TOL {
            0.0
        } else {
            r
        }
    })
}

fn frac_close(d: &Vector3<f64>) -> bool {
    d.iter().all(|v| v.abs() < SITE_TOL)
}

// ----------------------------------------------------------------------------
// symmetry

/// Space-group operation acting on Cartesian positions: `r -> rotation * r + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOp {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SymOp {
    pub fn apply(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * r + self.translation
    }

    pub fn compose(&self, other: &SymOp) -> SymOp {
        SymOp {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Same operation modulo a lattice translation.
    pub fn equivalent(&self, other: &SymOp, lattice: &Lattice) -> bool {
        if (self.rotation - other.rotation).abs().max() > 1e-8 {
            return false;
        }
        let d = lattice.fractional(&(self.translation - other.translation));
        frac_close(&(d - d.map(f64::round)))
    }

    fn map_site(&self, lattice: &Lattice, site: SiteRef) -> Option<SiteRef> {
        lattice.locate(&self.apply(&lattice.site_cartesian(site)))
    }
}

/// The crystal's factor group: every rotation that maps the lattice onto itself,
/// combined with each translation that maps the decorated basis onto itself.
///
/// Rotations are found by sending the cell vectors onto lattice vectors of equal
/// length with the same mutual dot products.
pub fn point_symmetries(lattice: &Lattice) -> Vec<SymOp> {
    let cell = lattice.cell();
    let a: Vec<Vector3<f64>> = (0..3).map(|i| cell.row(i).transpose()).collect();
    let scale2 = lattice.length_scale().powi(2);
    let tol = 1e-6 * scale2;

    const RANGE: i64 = 3;
    let mut shell: Vec<Vector3<f64>> = Vec::new();
    for i in -RANGE..=RANGE {
        for j in -RANGE..=RANGE {
            for k in -RANGE..=RANGE {
                if (i, j, k) != (0, 0, 0) {
                    shell.push(lattice.cartesian(&Vector3::new(i as f64, j as f64, k as f64)));
                }
            }
        }
    }
    let candidates: Vec<Vec<&Vector3<f64>>> = a
        .iter()
        .map(|ai| shell.iter().filter(|v| (v.norm_squared() - ai.norm_squared()).abs() < tol).collect())
        .collect();

    let a_cols = Matrix3::from_columns(&[a[0], a[1], a[2]]);
    let a_inv = a_cols.try_inverse().expect("lattice cell is nonsingular");
    let mut rotations: Vec<Matrix3<f64>> = Vec::new();
    for v0 in &candidates[0] {
        for v1 in &candidates[1] {
            if (v0.dot(v1) - a[0].dot(&a[1])).abs() > tol {
                continue;
            }
            for v2 in &candidates[2] {
                if (v0.dot(v2) - a[0].dot(&a[2])).abs() > tol || (v1.dot(v2) - a[1].dot(&a[2])).abs() > tol {
                    continue;
                }
                let r = Matrix3::from_columns(&[**v0, **v1, **v2]) * a_inv;
                if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-8 {
                    continue;
                }
                if !rotations.iter().any(|q| (q - r).abs().max() < 1e-8) {
                    rotations.push(r);
                }
            }
        }
    }

    let nb = lattice.n_basis();
    let origin = lattice.site_cartesian(SiteRef::new([0, 0, 0], 0));
    let mut ops: Vec<SymOp> = Vec::new();
    for r in rotations {
        for target in 0..nb {
            if lattice.species(target) != lattice.species(0) {
                continue;
            }
            let t = lattice.site_cartesian(SiteRef::new([0, 0, 0], target)) - r * origin;
            let t = lattice.cartesian(&reduce(lattice.fractional(&t)));
            let op = SymOp {
                rotation: r,
                translation: t,
            };
            let maps_basis = (0..nb).all(|b| {
                op.map_site(lattice, SiteRef::new([0, 0, 0], b))
                    .is_some_and(|s| lattice.species(s.basis) == lattice.species(b))
            });
            if maps_basis && !ops.iter().any(|o| o.equivalent(&op, lattice)) {
                ops.push(op);
            }
        }
    }
    ops
}

// ----------------------------------------------------------------------------
// orbits

/// All clusters of one orbit, each listed once per primitive cell.
#[derive(Debug, Clone)]
pub struct ExpandedOrbit {
    pub id: usize,
    pub diameter: f64,
    /// Canonical members: one per translation class.
    pub members: Vec<Vec<SiteRef>>,
}

impl ExpandedOrbit {
    pub fn size(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    /// Number of distinct clusters per primitive cell.
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Translation-invariant key of a cluster: the smallest sorted point list over all
/// translations that bring one of its points into the home cell.
pub fn canonical_cluster(points: &[SiteRef]) -> Vec<SiteRef> {
    let mut best: Option<Vec<SiteRef>> = None;
    for anchor in points {
        let by = [-anchor.offset[0], -anchor.offset[1], -anchor.offset[2]];
        let mut c: Vec<SiteRef> = points.iter().map(|p| p.shifted(by)).collect();
        c.sort();
        if best.as_ref().is_none_or(|b| c < *b) {
            best = Some(c);
        }
    }
    best.unwrap_or_default()
}

fn cluster_diameter(lattice: &Lattice, points: &[SiteRef]) -> f64 {
    let carts: Vec<Vector3<f64>> = points.iter().map(|&p| lattice.site_cartesian(p)).collect();
    let mut d: f64 = 0.0;
    for i in 0..carts.len() {
        for j in i + 1..carts.len() {
            d = d.max((carts[i] - carts[j]).norm());
        }
    }
    d
}

fn orbit_members(lattice: &Lattice, syms: &[SymOp], points: &[SiteRef]) -> Result<BTreeSet<Vec<SiteRef>>> {
    let mut set = BTreeSet::new();
    for op in syms {
        let image = points
            .iter()
            .map(|&p| op.map_site(lattice, p))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Geometry("symmetry operation maps a site off the lattice".into()))?;
        set.insert(canonical_cluster(&image));
    }
    Ok(set)
}

/// Expands an orbit representative into every symmetry-equivalent cluster of one cell.
pub fn expand_orbit(id: usize, orbit: &ClusterOrbitSpec, lattice: &Lattice, syms: &[SymOp]) -> Result<ExpandedOrbit> {
    let frame = &lattice.spec().frame;
    let points = orbit
        .points
        .iter()
        .map(|p| {
            lattice.locate(&frame.to_cartesian(p)).ok_or_else(|| {
                Error::Geometry(format!(
                    "cluster {id}: point ({}, {}, {}) is not on a lattice site",
                    p.x, p.y, p.z
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distinct: BTreeSet<_> = points.iter().collect();
    if distinct.len() != points.len() {
        return Err(Error::Geometry(format!("cluster {id} repeats a point")));
    }
    let diameter = cluster_diameter(lattice, &points);
    if (diameter - orbit.diameter).abs() > 1e-3 * diameter.max(1.0) {
        log::warn!(
            "cluster {id}: stated diameter {} differs from point spread {diameter:.6}",
            orbit.diameter
        );
    }
    let members: Vec<Vec<SiteRef>> = if points.is_empty() {
        vec![Vec::new()]
    } else {
        orbit_members(lattice, syms, &points)?.into_iter().collect()
    };
    if members.len() != orbit.stated_multiplicity {
        log::warn!(
            "cluster {id}: stated multiplicity {} but {} distinct clusters per cell",
            orbit.stated_multiplicity,
            members.len()
        );
    }
    Ok(ExpandedOrbit { id, diameter, members })
}

/// Every cluster orbit up to the given size-dependent diameter cutoffs, one
/// representative each, sorted by (size, diameter). Empty and point clusters are
/// always included.
pub fn generate_clusters(lattice: &Lattice, max_diameter: &BTreeMap<usize, f64>) -> Result<Vec<ClusterOrbitSpec>> {
    let syms = point_symmetries(lattice);
    let frame_inv = lattice
        .spec()
        .frame
        .matrix()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Geometry("singular frame".into()))?;
    let mut found: BTreeMap<Vec<SiteRef>, (usize, f64, Vec<SiteRef>, usize)> = BTreeMap::new();
    let mut record = |points: Vec<SiteRef>| -> Result<()> {
        let members = orbit_members(lattice, &syms, &points)?;
        let key = members.iter().next().cloned().unwrap_or_default();
        found
            .entry(key)
            .or_insert_with(|| (points.len(), cluster_diameter(lattice, &points), points, members.len()));
        Ok(())
    };

    for b in 0..lattice.n_basis() {
        record(vec![SiteRef::new([0, 0, 0], b)])?;
    }
    let spacing = lattice.plane_spacings();
    for (&size, &cutoff) in max_diameter.range(2..) {
        let reach = [0, 1, 2].map(|i| (cutoff / spacing[i]).ceil() as i64 + 1);
        let mut neighbors: Vec<SiteRef> = Vec::new();
        for i in -reach[0]..=reach[0] {
            for j in -reach[1]..=reach[1] {
                for k in -reach[2]..=reach[2] {
                    for b in 0..lattice.n_basis() {
                        neighbors.push(SiteRef::new([i, j, k], b));
                    }
                }
            }
        }
        for anchor_b in 0..lattice.n_basis() {
            let anchor = SiteRef::new([0, 0, 0], anchor_b);
            let ra = lattice.site_cartesian(anchor);
            let near: Vec<SiteRef> = neighbors
                .iter()
                .copied()
                .filter(|&s| s > anchor && (lattice.site_cartesian(s) - ra).norm() <= cutoff + 1e-8)
                .collect();
            let mut chosen = vec![anchor];
            extend_clusters(lattice, &near, 0, size, cutoff, &mut chosen, &mut record)?;
        }
    }

    let mut orbits: Vec<(usize, f64, Vec<SiteRef>, usize)> = found.into_values().collect();
    orbits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let to_frame = |s: SiteRef| frame_inv * lattice.site_cartesian(s);
    let mut out = vec![ClusterOrbitSpec {
        stated_multiplicity: 1,
        diameter: 0.0,
        points: Vec::new(),
    }];
    out.extend(orbits.into_iter().map(|(_, diameter, points, mult)| ClusterOrbitSpec {
        stated_multiplicity: mult,
        diameter,
        points: points.into_iter().map(to_frame).collect(),
    }));
    Ok(out)
}

fn extend_clusters(
    lattice: &Lattice,
    near: &[SiteRef],
    start: usize,
    size: usize,
    cutoff: f64,
    chosen: &mut Vec<SiteRef>,
    record: &mut impl FnMut(Vec<SiteRef>) -> Result<()>,
) -> Result<()> {
    if chosen.len() == size {
        return record(chosen.clone());
    }
    for idx in start..near.len() {
        let cand = near[idx];
        let rc = lattice.site_cartesian(cand);
        if chosen
            .iter()
            .all(|&p| (lattice.site_cartesian(p) - rc).norm() <= cutoff + 1e-8)
        {
            chosen.push(cand);
            extend_clusters(lattice, near, idx + 1, size, cutoff, chosen, record)?;
            chosen.pop();
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------------
// supercells

/// Diagonal supercell `n1 x n2 x n3` of the primitive cell with periodic boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Supercell {
    repeats: [usize; 3],
    n_basis: usize,
}

impl Supercell {
    pub fn new(repeats: [usize; 3], n_basis: usize) -> Result<Self> {
        if repeats.contains(&0) || n_basis == 0 {
            return Err(Error::Geometry(format!("invalid supercell {repeats:?} x {n_basis}")));
        }
        Ok(Supercell { repeats, n_basis })
    }

    pub fn repeats(&self) -> [usize; 3] {
        self.repeats
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_cells(&self) -> usize {
        self.repeats.iter().product()
    }

    pub fn n_sites(&self) -> usize {
        self.n_cells() * self.n_basis
    }

    /// Index of a site, wrapping the offset periodically.
    pub fn index(&self, site: SiteRef) -> usize {
        let w = |k: usize| site.offset[k].rem_euclid(self.repeats[k] as i64) as usize;
        ((w(0) * self.repeats[1] + w(1)) * self.repeats[2] + w(2)) * self.n_basis + site.basis
    }

    /// Cell offset (inside the supercell) and basis index of a site index.
    pub fn site(&self, index: usize) -> ([i64; 3], usize) {
        let b = index % self.n_basis;
        let c = index / self.n_basis;
        let k = c % self.repeats[2];
        let j = (c / self.repeats[2]) % self.repeats[1];
        let i = c / (self.repeats[2] * self.repeats[1]);
        ([i as i64, j as i64, k as i64], b)
    }

    /// Radius of the largest sphere that fits inside the supercell.
    pub fn inscribed_radius(&self, lattice: &Lattice) -> f64 {
        let d = lattice.plane_spacings();
        (0..3).map(|i| self.repeats[i] as f64 * d[i]).fold(f64::INFINITY, f64::min) / 2.0
    }

    /// Smallest multiples of the repeats that are divisible by `period` along each axis.
    pub fn commensurate_with(&self, period: [usize; 3]) -> Supercell {
        let mut repeats = self.repeats;
        for i in 0..3 {
            let p = period[i].max(1);
            repeats[i] = repeats[i].div_ceil(p) * p;
        }
        Supercell {
            repeats,
            n_basis: self.n_basis,
        }
    }
}

/// Smallest diagonal supercell that contains a sphere of radius `er`.
pub fn build_supercell(lattice: &Lattice, er: f64) -> Supercell {
    let d = lattice.plane_spacings();
    let repeats = d.map(|di| ((2.0 * er / di - 1e-9).ceil()).max(1.0) as usize);
    Supercell {
        repeats,
        n_basis: lattice.n_basis(),
    }
}

// ----------------------------------------------------------------------------
// configurations

/// Occupation of every supercell site, `-1` for the first-listed species and `+1`
/// for the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig {
    spins: Vec<i8>,
    sum: i64,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Model("spins must be +1 or -1".into()));
        }
        let sum = spins.iter().map(|&s| s as i64).sum();
        Ok(SpinConfig { spins, sum })
    }

    pub fn uniform(n: usize, spin: i8) -> Self {
        SpinConfig {
            spins: vec![spin; n],
            sum: spin as i64 * n as i64,
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.sum
    }

    /// Mean spin.
    pub fn x(&self) -> f64 {
        self.sum as f64 / self.spins.len() as f64
    }

    pub fn flip(&mut self, site: usize) {
        let s = &mut self.spins[site];
        *s = -*s;
        self.sum += 2 * *s as i64;
    }
}

fn structure_frac(structure: &StructureSpec) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let cell = structure.cell * structure.frame.matrix();
    let to_frac = cell
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Geometry("structure cell is singular".into()))?;
    Ok((cell, to_frac))
}

/// Smallest diagonal repeats `(p1, p2, p3)` of the lattice cell that are lattice
/// translations of the structure.
pub fn structure_periodicity(structure: &StructureSpec, lattice: &Lattice) -> Result<[usize; 3]> {
    let (_, to_frac) = structure_frac(structure)?;
    let mut out = [0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let a = lattice.cell().row(i).transpose();
        *o = (1..=64)
            .find(|&p| {
                let f = to_frac * (a * p as f64);
                frac_close(&(f - f.map(f64::round)))
            })
            .ok_or_else(|| {
                Error::Geometry(format!("structure is not periodic along lattice vector {i}"))
            })?;
    }
    Ok(out)
}

/// Tiles a structure over the supercell. Sites take spin -1 when occupied by the
/// first species listed for that lattice site and +1 for the second.
pub fn spin_config_from_structure(
    structure: &StructureSpec,
    lattice: &Lattice,
    supercell: &Supercell,
) -> Result<SpinConfig> {
    if supercell.n_basis() != lattice.n_basis() {
        return Err(Error::Geometry("supercell does not match the lattice basis".into()));
    }
    let period = structure_periodicity(structure, lattice)?;
    for i in 0..3 {
        if supercell.repeats()[i] % period[i] != 0 {
            return Err(Error::Geometry(format!(
                "supercell {:?} is incommensurate with structure period {:?}",
                supercell.repeats(),
                period
            )));
        }
    }
    let (_, to_frac) = structure_frac(structure)?;
    let mut atoms: Vec<(Vector3<f64>, i8)> = Vec::with_capacity(structure.atoms.len());
    for atom in &structure.atoms {
        let cart = structure.frame.to_cartesian(&atom.position);
        let site = lattice.locate(&cart).ok_or_else(|| {
            Error::Geometry(format!("atom {} at {:?} is not on a lattice site", atom.species, atom.position))
        })?;
        let species = lattice.species(site.basis);
        if species.len() != 2 {
            return Err(Error::Model(format!(
                "lattice site {} has {} species; only binary sites are supported",
                site.basis,
                species.len()
            )));
        }
        let spin = match species.iter().position(|s| *s == atom.species) {
            Some(0) => -1,
            Some(_) => 1,
            None => {
                return Err(Error::Geometry(format!(
                    "species '{}' is not allowed on lattice site {}",
                    atom.species, site.basis
                )))
            }
        };
        atoms.push((reduce(to_frac * cart), spin));
    }
    let spins = (0..supercell.n_sites())
        .map(|s| {
            let (offset, b) = supercell.site(s);
            let f = reduce(to_frac * lattice.site_cartesian(SiteRef::new(offset, b)));
            atoms
                .iter()
                .find(|(af, _)| {
                    let d = f - af;
                    frac_close(&(d - d.map(f64::round)))
                })
                .map(|&(_, spin)| spin)
                .ok_or_else(|| Error::Geometry(format!("no atom of the structure covers supercell site {s}")))
        })
        .collect::<Result<Vec<i8>>>()?;
    SpinConfig::new(spins)
}
