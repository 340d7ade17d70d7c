//! Readers and writers for the ATAT-style text inputs (`lat.in`, `gs_str.out`,
//! `clusters.out`, `eci.out`, `teci.out`) and for the tab-separated result tables.
//!
//! Every coordinate in these files is expressed in units of the coordinate frame:
//! a Cartesian position is `p[0]*f0 + p[1]*f1 + p[2]*f2` where `f0..f2` are the rows
//! of the frame matrix.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, SpinConfig, Supercell};

/// The coordinate system every other coordinate in a file is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub enum CoordFrame {
    /// `a b c alpha beta gamma`, angles in degrees.
    Parameters {
        a: f64,
        b: f64,
        c: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    /// Explicit frame vectors, one per row.
    Matrix(Matrix3<f64>),
}

impl CoordFrame {
    pub fn parameters(a: f64, b: f64, c: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, len) in [("a", a), ("b", b), ("c", c)] {
            if !(len > 0.0) {
                return Err(Error::Geometry(format!("frame length {name} = {len} must be positive")));
            }
        }
        for (name, ang) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !(ang > 0.0 && ang < 180.0) {
                return Err(Error::Geometry(format!("frame angle {name} = {ang} outside (0, 180)")));
            }
        }
        let frame = CoordFrame::Parameters { a, b, c, alpha, beta, gamma };
        if frame.matrix().determinant().abs() < 1e-12 || frame.matrix().iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("frame angles do not describe a cell".into()));
        }
        Ok(frame)
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.determinant().abs() < 1e-12 {
            return Err(Error::Geometry("frame matrix is singular".into()));
        }
        Ok(CoordFrame::Matrix(m))
    }

    /// Frame vectors as matrix rows (Cartesian).
    pub fn matrix(&self) -> Matrix3<f64> {
        match *self {
            CoordFrame::Matrix(m) => m,
            CoordFrame::Parameters { a, b, c, alpha, beta, gamma } => {
                let (ca, cb, cg) = (
                    alpha.to_radians().cos(),
                    beta.to_radians().cos(),
                    gamma.to_radians().cos(),
                );
                let sg = gamma.to_radians().sin();
                let cx = cb;
                let cy = (ca - cb * cg) / sg;
                let cz = (1.0 - cx * cx - cy * cy).sqrt();
                // Exact zeros for right angles keep the common cubic frames exactly diagonal.
                let clean = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
                Matrix3::new(
                    a,
                    0.0,
                    0.0,
                    clean(b * cg),
                    clean(b * sg),
                    0.0,
                    clean(c * cx),
                    clean(c * cy),
                    clean(c * cz),
                )
            }
        }
    }

    /// Cartesian position of a point given in frame units.
    pub fn to_cartesian(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.matrix().transpose() * p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSite {
    /// Position in frame units.
    pub position: Vector3<f64>,
    /// Species in the order written; the first maps to spin -1.
    pub species: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub frame: CoordFrame,
    /// Cell vectors as rows, in frame units.
    pub cell: Matrix3<f64>,
    pub sites: Vec<LatticeSite>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: Vector3<f64>,
    pub species: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSpec {
    pub frame: CoordFrame,
    pub cell: Matrix3<f64>,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOrbitSpec {
    /// As written in the file; never used for energies.
    pub stated_multiplicity: usize,
    pub diameter: f64,
    /// Points in frame units.
    pub points: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EciTable {
    pub values: Vec<f64>,
}

impl EciTable {
    pub fn new(values: Vec<f64>) -> Self {
        EciTable { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, n_clusters: usize) -> Result<()> {
        if self.values.len() != n_clusters {
            return Err(Error::Model(format!(
                "{} ECIs for {} clusters",
                self.values.len(),
                n_clusters
            )));
        }
        Ok(())
    }
}

/// Temperature-dependent ECIs on a uniform grid `t_start + k * t_step`, `k < count`.
#[derive(Debug, Clone, PartialEq)]
pub struct TEciTable {
    pub t_start: f64,
    pub t_step: f64,
    pub rows: Vec<EciTable>,
}

impl TEciTable {
    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.rows.first().map_or(0, EciTable::len)
    }

    pub fn temperature(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.t_step
    }
}

// ----------------------------------------------------------------------------
// tokenizing

struct Line<'a> {
    number: usize,
    tokens: Vec<&'a str>,
}

fn lines_of(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().map(|(i, l)| Line {
        number: i + 1,
        tokens: l.split_whitespace().collect(),
    })
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("'{tok}' is not a number")))
}

fn numbers<const N: usize>(line: &Line<'_>) -> Result<[f64; N]> {
    if line.tokens.len() != N {
        return Err(Error::parse(
            line.number,
            format!("expected {N} numbers, found {} tokens", line.tokens.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(&line.tokens) {
        *o = number(t, line.number)?;
    }
    Ok(out)
}

fn vector(line: &Line<'_>) -> Result<Vector3<f64>> {
    if line.tokens.len() < 3 {
        return Err(Error::parse(line.number, "expected 3 coordinates"));
    }
    Ok(Vector3::new(
        number(line.tokens[0], line.number)?,
        number(line.tokens[1], line.number)?,
        number(line.tokens[2], line.number)?,
    ))
}

fn row_matrix(rows: [[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

/// Reads a frame plus the three cell rows starting at `lines[0]`; returns how many lines were used.
fn frame_and_cell(lines: &[Line<'_>]) -> Result<(CoordFrame, Matrix3<f64>, usize)> {
    let first = lines
        .first()
        .ok_or_else(|| Error::parse(0, "missing coordinate frame"))?;
    let (frame, used) = match first.tokens.len() {
        6 => {
            let [a, b, c, al, be, ga] = numbers::<6>(first)?;
            let f = CoordFrame::parameters(a, b, c, al, be, ga)
                .map_err(|e| Error::parse(first.number, e.to_string()))?;
            (f, 1)
        }
        3 => {
            if lines.len() < 3 {
                return Err(Error::parse(first.number, "truncated frame matrix"));
            }
            let m = row_matrix([numbers::<3>(&lines[0])?, numbers::<3>(&lines[1])?, numbers::<3>(&lines[2])?]);
            let f = CoordFrame::from_matrix(m).map_err(|e| Error::parse(first.number, e.to_string()))?;
            (f, 3)
        }
        n => {
            return Err(Error::parse(
                first.number,
                format!("frame line needs 6 (a b c alpha beta gamma) or 3 numbers, found {n}"),
            ))
        }
    };
    if lines.len() < used + 3 {
        let at = lines.last().map_or(0, |l| l.number);
        return Err(Error::parse(at, "missing cell vectors"));
    }
    let cell = row_matrix([
        numbers::<3>(&lines[used])?,
        numbers::<3>(&lines[used + 1])?,
        numbers::<3>(&lines[used + 2])?,
    ]);
    if cell.determinant().abs() < 1e-12 {
        return Err(Error::parse(lines[used].number, "cell vectors are linearly dependent"));
    }
    Ok((frame, cell, used + 3))
}

// ----------------------------------------------------------------------------
// parsers

pub fn parse_lattice(text: &str) -> Result<LatticeSpec> {
    let lines: Vec<Line<'_>> = lines_of(text).filter(|l| !l.tokens.is_empty()).collect();
    let (frame, cell, used) = frame_and_cell(&lines)?;
    let mut sites = Vec::new();
    for line in &lines[used..] {
        if line.tokens.len() < 4 {
            return Err(Error::parse(
                line.number,
                format!("site line needs 3 coordinates and species, found {} tokens", line.tokens.len()),
            ));
        }
        let position = vector(line)?;
        let species: Vec<String> = line.tokens[3..]
            .join(" ")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if species.is_empty() {
            return Err(Error::parse(line.number, "empty species list"));
        }
        sites.push(LatticeSite { position, species });
    }
    if sites.is_empty() {
        let at = lines.last().map_or(0, |l| l.number);
        return Err(Error::parse(at, "lattice has no sites"));
    }
    Ok(LatticeSpec { frame, cell, sites })
}

pub fn parse_structures(text: &str) -> Result<Vec<StructureSpec>> {
    let mut out = Vec::new();
    let mut block: Vec<Line<'_>> = Vec::new();
    for line in lines_of(text).filter(|l| !l.tokens.is_empty()) {
        if line.tokens.len() == 1 && line.tokens[0].eq_ignore_ascii_case("end") {
            out.push(structure_block(&block, line.number)?);
            block.clear();
        } else {
            block.push(line);
        }
    }
    if let Some(first) = block.first() {
        return Err(Error::parse(first.number, "structure not terminated by 'end'"));
    }
    if out.is_empty() {
        return Err(Error::parse(0, "no structures found"));
    }
    Ok(out)
}

fn structure_block(lines: &[Line<'_>], end_line: usize) -> Result<StructureSpec> {
    if lines.is_empty() {
        return Err(Error::parse(end_line, "empty structure block"));
    }
    let (frame, cell, used) = frame_and_cell(lines)?;
    let mut atoms = Vec::new();
    for line in &lines[used..] {
        if line.tokens.len() != 4 {
            return Err(Error::parse(
                line.number,
                format!("atom line needs 4 tokens (x y z species), found {}", line.tokens.len()),
            ));
        }
        atoms.push(Atom {
            position: vector(line)?,
            species: line.tokens[3].to_string(),
        });
    }
    if atoms.is_empty() {
        return Err(Error::parse(end_line, "structure has no atoms"));
    }
    Ok(StructureSpec { frame, cell, atoms })
}

pub fn parse_clusters(text: &str) -> Result<Vec<ClusterOrbitSpec>> {
    let mut blocks: Vec<Vec<Line<'_>>> = vec![Vec::new()];
    for line in lines_of(text) {
        if line.tokens.is_empty() {
            if !blocks.last().unwrap().is_empty() {
                blocks.push(Vec::new());
            }
        } else {
            blocks.last_mut().unwrap().push(line);
        }
    }
    blocks.retain(|b| !b.is_empty());
    if blocks.is_empty() {
        return Err(Error::parse(0, "no clusters found"));
    }
    blocks.iter().map(|b| cluster_block(b)).collect()
}

fn single<'a>(l: &Line<'a>) -> Result<&'a str> {
    match l.tokens.as_slice() {
        [t] => Ok(t),
        _ => Err(Error::parse(l.number, "expected a single value")),
    }
}

fn cluster_block(lines: &[Line<'_>]) -> Result<ClusterOrbitSpec> {
    let head = &lines[0];
    if lines.len() < 3 {
        return Err(Error::parse(
            head.number,
            "cluster block needs multiplicity, diameter and point count",
        ));
    }
    let mult_tok = single(&lines[0])?;
    let stated_multiplicity = mult_tok
        .parse::<usize>()
        .map_err(|_| Error::parse(lines[0].number, format!("bad multiplicity '{mult_tok}'")))?;
    let diameter = number(single(&lines[1])?, lines[1].number)?;
    let npts_tok = single(&lines[2])?;
    let npoints = npts_tok
        .parse::<usize>()
        .map_err(|_| Error::parse(lines[2].number, format!("bad point count '{npts_tok}'")))?;
    let coords = &lines[3..];
    if coords.len() != npoints {
        return Err(Error::parse(
            lines[2].number,
            format!("cluster declares {npoints} points but lists {}", coords.len()),
        ));
    }
    let points = coords.iter().map(vector).collect::<Result<Vec<_>>>()?;
    Ok(ClusterOrbitSpec {
        stated_multiplicity,
        diameter,
        points,
    })
}

fn all_numbers(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in lines_of(text) {
        for t in &line.tokens {
            out.push(number(t, line.number)?);
        }
    }
    Ok(out)
}

pub fn parse_eci(text: &str) -> Result<EciTable> {
    let values = all_numbers(text)?;
    if values.is_empty() {
        return Err(Error::parse(0, "no ECI values"));
    }
    Ok(EciTable { values })
}

/// Reads `teci.out`: a header `T_start count T_step` followed by `count` rows of ECIs.
/// With `n_clusters` given, the row length is checked against it; otherwise it is inferred.
pub fn parse_teci(text: &str, n_clusters: Option<usize>) -> Result<TEciTable> {
    let mut lines = lines_of(text).filter(|l| !l.tokens.is_empty());
    let header = lines.next().ok_or_else(|| Error::parse(0, "empty teci file"))?;
    let [t_start, count, t_step] = numbers::<3>(&header)?;
    if count.fract() != 0.0 || count < 2.0 {
        return Err(Error::parse(header.number, "temperature count must be an integer >= 2"));
    }
    if !(t_step > 0.0) {
        return Err(Error::parse(header.number, "temperature step must be positive"));
    }
    let count = count as usize;
    let mut values = Vec::new();
    let mut last_line = header.number;
    for line in lines {
        for t in &line.tokens {
            values.push(number(t, line.number)?);
        }
        last_line = line.number;
    }
    let per_row = match n_clusters {
        Some(n) => n,
        None => values.len() / count,
    };
    if per_row == 0 || values.len() != per_row * count {
        return Err(Error::parse(
            last_line,
            format!("{} values do not form {count} rows of {per_row}", values.len()),
        ));
    }
    let rows = values
        .chunks(per_row)
        .map(|c| EciTable::new(c.to_vec()))
        .collect();
    Ok(TEciTable { t_start, t_step, rows })
}

// ----------------------------------------------------------------------------
// writers

fn write_frame(out: &mut String, frame: &CoordFrame) {
    match frame {
        CoordFrame::Parameters { a, b, c, alpha, beta, gamma } => {
            let _ = writeln!(out, "{a} {b} {c} {alpha} {beta} {gamma}");
        }
        CoordFrame::Matrix(m) => write_rows(out, m),
    }
}

fn write_rows(out: &mut String, m: &Matrix3<f64>) {
    for i in 0..3 {
        let _ = writeln!(out, "{:.6} {:.6} {:.6}", m[(i, 0)], m[(i, 1)], m[(i, 2)]);
    }
}

pub fn write_structure(s: &StructureSpec) -> String {
    let mut out = String::new();
    write_frame(&mut out, &s.frame);
    write_rows(&mut out, &s.cell);
    for a in &s.atoms {
        let p = a.position;
        let _ = writeln!(out, "{:.6} {:.6} {:.6} {}", p.x, p.y, p.z, a.species);
    }
    out.push_str("end\n");
    out
}

pub fn write_structures(structures: &[StructureSpec]) -> String {
    structures
        .iter()
        .map(write_structure)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn write_clusters(clusters: &[ClusterOrbitSpec]) -> String {
    let mut out = String::new();
    for c in clusters {
        let _ = writeln!(out, "{}\n{:.6}\n{}", c.stated_multiplicity, c.diameter, c.points.len());
        for p in &c.points {
            let _ = writeln!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
        }
        out.push('\n');
    }
    out
}

/// Supercell configuration as a structure block that `parse_structures` reads back.
pub fn write_snapshot(config: &SpinConfig, supercell: &Supercell, lattice: &Lattice) -> String {
    let spec = lattice.spec();
    let mut cell = spec.cell;
    for i in 0..3 {
        let n = supercell.repeats()[i] as f64;
        for j in 0..3 {
            cell[(i, j)] *= n;
        }
    }
    let atoms = (0..supercell.n_sites())
        .map(|s| {
            let (offset, b) = supercell.site(s);
            let off = Vector3::new(offset[0] as f64, offset[1] as f64, offset[2] as f64);
            let site = &spec.sites[b];
            let position = site.position + spec.cell.transpose() * off;
            let which = if config.spins()[s] < 0 { 0 } else { 1 };
            Atom {
                position,
                species: site.species[which.min(site.species.len() - 1)].clone(),
            }
        })
        .collect();
    write_structure(&StructureSpec {
        frame: spec.frame.clone(),
        cell,
        atoms,
    })
}

/// A row of an output table: fixed columns plus an optional annotation that is
/// written as a trailing `# ...` comment.
pub trait TableRow {
    fn columns(&self) -> Vec<f64>;

    fn note(&self) -> Option<&str> {
        None
    }
}

pub fn format_row<R: TableRow + ?Sized>(row: &R) -> String {
    let mut line = row
        .columns()
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join("\t");
    if let Some(note) = row.note() {
        line.push_str("\t# ");
        line.push_str(note);
    }
    line
}

pub fn format_table<R: TableRow>(rows: &[R]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format_row(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CHECKERBOARD, FCC_LAT, SEPARATION};

    const SC_LAT: &str = SEPARATION.lattice;
    const GS5: &str = SEPARATION.ground_states;
    const GS6: &str = CHECKERBOARD.ground_states;
    const CL5: &str = SEPARATION.clusters;
    const CL6: &str = CHECKERBOARD.clusters;

    #[test]
    fn simple_cubic_lattice() {
        let lat = parse_lattice(SC_LAT).unwrap();
        assert_eq!(lat.frame.matrix(), Matrix3::identity() * 3.5);
        assert_eq!(lat.cell, Matrix3::identity());
        assert_eq!(lat.sites.len(), 1);
        assert_eq!(lat.sites[0].species, vec!["Ni", "Al"]);
    }

    #[test]
    fn fcc_lattice() {
        let lat = parse_lattice(FCC_LAT).unwrap();
        assert_eq!(lat.frame.matrix(), Matrix3::identity() * 3.52);
        assert_eq!(lat.cell[(0, 1)], 0.5);
        assert_eq!(lat.sites.len(), 1);
    }

    #[test]
    fn unit_cube() {
        let lat = parse_lattice("1 1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A,B\n").unwrap();
        assert_eq!(lat.frame.matrix(), Matrix3::identity());
        assert_eq!(lat.sites[0].species, vec!["A", "B"]);
    }

    #[test]
    fn frame_syntaxes_agree() {
        let a = parse_lattice(SC_LAT).unwrap();
        let b = parse_lattice("3.5 0 0\n0 3.5 0\n0 0 3.5\n1 0 0\n0 1 0\n0 0 1\n0 0 0 Ni, Al\n").unwrap();
        assert_eq!(a.frame.matrix(), b.frame.matrix());
    }

    #[test]
    fn hexagonal_frame() {
        let f = CoordFrame::parameters(2.0, 2.0, 3.0, 90.0, 90.0, 120.0).unwrap();
        let m = f.matrix();
        assert!((m.row(1).norm() - 2.0).abs() < 1e-12);
        assert!((m.row(0).dot(&m.row(1)) - 4.0 * (-0.5)).abs() < 1e-12);
        assert!((m.row(2).norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_errors_name_the_line() {
        let err = parse_lattice("3.5 3.5 3.5 90 90 90\n1 0 0\n0 1\n0 0 1\n0 0 0 A,B\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_lattice("1 1 1 90 90 90\n1 0 0\n2 0 0\n0 0 1\n0 0 0 A,B\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_lattice("1 1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 ,\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        assert!(parse_lattice("1 1 1 90 90 200\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A\n").is_err());
        assert!(parse_lattice("1 -1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A\n").is_err());
    }

    #[test]
    fn two_pure_structures() {
        let s = parse_structures(GS5).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].atoms[0].species, "Ni");
        assert_eq!(s[1].atoms[0].species, "Al");
        assert_eq!(s[0].atoms[0].position, Vector3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn checkerboard_structures() {
        let s = parse_structures(GS6).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].atoms.len(), 2);
        assert_eq!(s[1].atoms[1].position, Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(s[1].atoms[1].species, "Ni");
    }

    #[test]
    fn single_structure() {
        let s = parse_structures("1 1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A\nend\n").unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn structure_errors() {
        let err = parse_structures("1 1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A\n").unwrap_err();
        assert!(err.to_string().contains("end"), "{err}");
        let err = parse_structures("1 1 1 90 90 90\n1 0 0\n0 1 0\n0 0 1\n0 0 0 A B\nend\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn cluster_files() {
        let c = parse_clusters(CL5).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c[0].points.is_empty());
        assert_eq!(c[1].points.len(), 1);
        assert_eq!(c[2].stated_multiplicity, 6);
        assert_eq!(c[2].diameter, 3.5);
        let c = parse_clusters(CL6).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[3].diameter, 7.0);
        assert_eq!(c[3].stated_multiplicity, 3);
        let c = parse_clusters("1\n0.000000\n0\n").unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].points.is_empty());
    }

    #[test]
    fn cluster_point_count_mismatch() {
        let err = parse_clusters("2\n3.5\n2\n0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn eci_files() {
        assert_eq!(parse_eci("0.\n0.\n-1").unwrap().values, vec![0.0, 0.0, -1.0]);
        assert_eq!(parse_eci("0.\n0.\n1\n-0.2\n").unwrap().values, vec![0.0, 0.0, 1.0, -0.2]);
        assert!(parse_eci("").is_err());
        assert!(parse_eci("0.\nabc\n").is_err());
        assert!(parse_eci("1\n2\n").unwrap().check_len(3).is_err());
    }

    #[test]
    fn teci_files() {
        let t = parse_teci("1000 3 500\n0 0 -1\n0 0 -0.9\n0 0 -0.8\n", Some(3)).unwrap();
        assert_eq!(t.count(), 3);
        assert_eq!(t.temperature(2), 2000.0);
        assert_eq!(t.rows[1].values, vec![0.0, 0.0, -0.9]);
        let inferred = parse_teci("1000 2 500\n1 2\n3 4\n", None).unwrap();
        assert_eq!(inferred.n_clusters(), 2);
        assert!(parse_teci("1000 3 500\n0 0 -1\n", Some(3)).is_err());
        assert!(parse_teci("1000 1 500\n0 0 -1\n", Some(3)).is_err());
        assert!(parse_teci("", None).is_err());
    }

    struct Row(Vec<f64>, Option<String>);

    impl TableRow for Row {
        fn columns(&self) -> Vec<f64> {
            self.0.clone()
        }
        fn note(&self) -> Option<&str> {
            self.1.as_deref()
        }
    }

    #[test]
    fn table_formatting() {
        let rows = [Row(vec![10.0, -12.0, 2.4, -1.0], None)];
        assert_eq!(format_table(&rows), "10.000000\t-12.000000\t2.400000\t-1.000000\n");
        let flagged = [Row(vec![1.0], Some("gap closure".into()))];
        assert_eq!(format_table(&flagged), "1.000000\t# gap closure\n");
        assert_eq!(format_table::<Row>(&[]), "");
        assert_eq!(format_row(&Row(vec![-0.0], None)), "-0.000000");
    }
}
