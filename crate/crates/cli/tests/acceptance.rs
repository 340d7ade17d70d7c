//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset, for example
//! `cargo test -p cepd-cli --test acceptance -- 1 2 8`. A FAIL line does not fail the
//! target unless `CEPD_ACCEPTANCE_STRICT` is set.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cepd_core::atat_io::{format_row, parse_lattice};
use cepd_core::ce::SupercellModel;
use cepd_core::drivers::{
    anneal_ground_state, dmu_dbeta, finite_difference_dmu_dbeta, scan, track_boundary, BoundaryPlan, BoundaryPoint,
    ScanPlan, System, NOTE_CLOSURE, NOTE_MERGED, NOTE_UNCONVERGED,
};
use cepd_core::lattice::{build_supercell, Lattice, SpinConfig, Supercell};
use cepd_core::mc::{run_point, RunControls, Walker};
use cepd_core::models::{ModelFiles, CHECKERBOARD, FCC_LAT, SEPARATION};
use cepd_core::thermo::{boltzmann_weights, exact_thermo, lte_phi, mean_field_tmisc, MuMap};
use cepd_core::KB_EV;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Criterion = fn() -> Verdict;

const CRITERIA: [(u32, &str, Criterion); 8] = [
    (1, "boundary slope arithmetic", c1_slope_arithmetic),
    (2, "energy anchors", c2_energy_anchors),
    (3, "oracle equivalence", c3_oracle),
    (4, "detailed balance", c4_detailed_balance),
    (5, "miscibility gap", c5_miscibility_gap),
    (6, "low-temperature expansion validity", c6_lte_validity),
    (7, "hidden ground state", c7_hidden_ground_state),
    (8, "command-line fidelity", c8_cli),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} ({name}): {tag} [{secs:.1} s] {}", v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 && std::env::var_os("CEPD_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn separation() -> System {
    System::from_model(&SEPARATION).unwrap()
}

fn checkerboard() -> System {
    System::from_model(&CHECKERBOARD).unwrap()
}

/// The 2x2x2 cell of the nearest-neighbour separating model.
fn enumerable() -> SupercellModel {
    separation().ce.on_supercell(&Supercell::new([2, 2, 2], 1).unwrap())
}

fn unit_controls(dx: f64, seed: u64) -> RunControls {
    RunControls {
        dx,
        k_b: 1.0,
        seed,
        ..RunControls::default()
    }
}

// ----------------------------------------------------------------------------

fn c1_slope_arithmetic() -> Verdict {
    let r240 = BoundaryPoint::new(240.0, -0.0775028, -0.986175, -0.502882, -0.0495888, -0.0501994);
    let r250 = BoundaryPoint::new(250.0, -0.0774447, -0.982053, -0.503663, -0.0493333, -0.0501169);
    let slope = dmu_dbeta(&r240, KB_EV).unwrap();
    let fd = finite_difference_dmu_dbeta(&r240, &r250, KB_EV);
    let pass = (slope + 2.6128e-5).abs() < 1e-9 && (fd + 3.0039e-5).abs() < 1e-9;
    verdict(pass, format!("dmu/dbeta = {slope:.5e}, finite difference = {fd:.5e}"))
}

fn c2_energy_anchors() -> Verdict {
    let mut bad = Vec::new();
    fn check(bad: &mut Vec<String>, what: &str, got: f64, want: f64) {
        if (got - want).abs() > 1e-9 {
            bad.push(format!("{what}: {got} != {want}"));
        }
    }
    let sep = separation();
    let chk = checkerboard();
    let cell = Supercell::new([4, 4, 4], 1).unwrap();
    let (m_sep, m_chk) = (sep.ce.on_supercell(&cell), chk.ce.on_supercell(&cell));
    let pure = SpinConfig::uniform(64, -1);
    check(&mut bad, "separating pure phase", m_sep.energy_per_site(pure.spins()), -3.0);
    check(&mut bad, "ordering pure phase", m_chk.energy_per_site(pure.spins()), 2.4);
    let nacl = chk.gs.get(1).unwrap().tile(&chk.ce, &cell).unwrap();
    check(&mut bad, "ordered NaCl phase", m_chk.energy_per_site(nacl.spins()), -3.6);
    check(&mut bad, "separating flip", m_sep.delta_energy(pure.spins(), 0).abs(), 12.0);
    check(&mut bad, "ordering flip", m_chk.delta_energy(pure.spins(), 0).abs(), 9.6);

    let mus_sep = MuMap::new(&sep.gs).unwrap().knots().to_vec();
    let mus_chk = MuMap::new(&chk.gs).unwrap().knots().to_vec();
    if mus_sep != [0.0] {
        bad.push(format!("separating hull slopes {mus_sep:?}"));
    }
    if mus_chk.len() != 2 {
        bad.push(format!("ordering hull slopes {mus_chk:?}"));
    } else {
        check(&mut bad, "ordering hull slope 0-1", mus_chk[0], -6.0);
        check(&mut bad, "ordering hull slope 1-2", mus_chk[1], 6.0);
    }
    check(&mut bad, "input mu 0.5", chk.mu_map().unwrap().to_physical(0.5), -12.0);

    let sc = sep.supercell(20.0, &[0, 1]).unwrap().repeats();
    let fcc = build_supercell(&Lattice::new(parse_lattice(FCC_LAT).unwrap()).unwrap(), 30.0).repeats();
    if sc != [12; 3] {
        bad.push(format!("sc er=20 supercell {sc:?}"));
    }
    if fcc != [30; 3] {
        bad.push(format!("fcc er=30 supercell {fcc:?}"));
    }
    let pass = bad.is_empty();
    let detail = if pass {
        format!("E = -3, 2.4, -3.6; |dE| = 12, 9.6; hull mu {:.6} and {:.6}, {:.6}; u=0.5 -> -12; cells {sc:?} {fcc:?}",
            mus_sep[0], mus_chk[0], mus_chk[1])
    } else {
        bad.join("; ")
    };
    verdict(pass, detail)
}

fn c3_oracle() -> Verdict {
    let model = enumerable();
    let mut hits = 0;
    let mut misses = Vec::new();
    let mut seed = 0;
    for t in [2.0, 4.0, 6.0, 8.0, 10.0] {
        for mu in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let exact = exact_thermo(&model, t, 1.0, mu).unwrap();
            let mut w = Walker::random(model.clone(), 0.0, seed).unwrap();
            w.set_temperature(t, 1.0);
            w.set_mu(mu);
            let s = run_point(&mut w, t, &unit_controls(0.01, seed));
            seed += 1;
            let zx = (s.x - exact.x).abs() / s.stderr_x.max(1e-300);
            let ze = (s.e_bar - exact.e_bar()).abs() / s.stderr_e_bar.max(1e-300);
            if zx <= 3.0 && ze <= 3.0 {
                hits += 1;
            } else {
                misses.push(format!("(T={t}, mu={mu}: {zx:.1}, {ze:.1} sigma)"));
            }
        }
    }

    // Grand potential carried along T at mu = 1 from the expansion about the +1 phase.
    let sys = separation();
    let plan = ScanPlan {
        gs: Some(1),
        mu0: 1.0,
        mu1: None,
        dmu: None,
        t0: 0.5,
        t1: Some(6.0),
        dt: Some(5.5 / 24.0),
        down: false,
        er: 3.5,
        controls: RunControls {
            tstat: Some(0.0),
            ..unit_controls(0.01, 99)
        },
    };
    let out = scan(&sys, &plan, |_| {}).unwrap();
    let mut worst: f64 = 0.0;
    let mut phi_ok = out.supercell.n_sites() == 8 && out.rows.len() == 25;
    for r in &out.rows {
        let exact = exact_thermo(&model, r.stats.t, 1.0, r.stats.mu).unwrap();
        let err = (r.phi - exact.phi).abs();
        worst = worst.max(err / (1e-3 + 3.0 * r.stderr_phi));
        phi_ok &= err <= 1e-3 + 3.0 * r.stderr_phi;
    }
    let pass = hits >= 24 && phi_ok;
    verdict(
        pass,
        format!(
            "{hits}/25 cells within 3 stderr {}; integrated phi over {} rows, worst |dphi|/(1e-3 + 3 stderr) = {worst:.3}",
            misses.join(" "),
            out.rows.len()
        ),
    )
}

fn c4_detailed_balance() -> Verdict {
    let model = enumerable();
    let mut worst_p: f64 = 1.0;
    let mut parts = Vec::new();
    for (i, &(t, mu)) in [(3.0, 0.0), (5.0, 0.7), (8.0, -1.5)].iter().enumerate() {
        let weights = boltzmann_weights(&model, t, 1.0, mu).unwrap();
        let mut w = Walker::random(model.clone(), 0.0, 1000 + i as u64).unwrap();
        w.set_temperature(t, 1.0);
        w.set_mu(mu);
        for _ in 0..1000 {
            w.sweep();
        }
        let samples = 200_000;
        let mut counts = vec![0u64; weights.len()];
        for _ in 0..samples {
            for _ in 0..4 {
                w.sweep();
            }
            let mask: usize = w
                .config()
                .spins()
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > 0)
                .map(|(k, _)| 1 << k)
                .sum();
            counts[mask] += 1;
        }
        let (chi2, dof) = pooled_chi_square(&counts, &weights, samples as f64);
        let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi2);
        worst_p = worst_p.min(p);
        parts.push(format!("(T={t}, mu={mu}: chi2 {chi2:.1}/{dof}, p {p:.3})"));
    }
    verdict(worst_p > 0.01, parts.join(" "))
}

/// Pearson statistic with bins whose expectation is below 5 merged into one.
fn pooled_chi_square(counts: &[u64], weights: &[f64], n: f64) -> (f64, usize) {
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut rest_obs, mut rest_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(weights) {
        let e = p * n;
        if e < 5.0 {
            rest_obs += c as f64;
            rest_exp += e;
        } else {
            chi2 += (c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if rest_exp >= 5.0 {
        chi2 += (rest_obs - rest_exp).powi(2) / rest_exp;
        bins += 1;
    }
    (chi2, bins - 1)
}

fn c5_miscibility_gap() -> Verdict {
    let sys = separation();
    let tmf = mean_field_tmisc(&sys.ce, 6.0, KB_EV).unwrap();
    let controls = RunControls {
        dx: 1e-2,
        de: Some(1e-3),
        ltep: 5e-3,
        k_b: KB_EV,
        seed: 20,
        max_sweeps: 1 << 20,
        ..RunControls::default()
    };
    let coarse = BoundaryPlan {
        gs1: 0,
        gs2: 1,
        start: None,
        dt: 2000.0,
        down: false,
        t_end: None,
        er: 30.0,
        controls,
    };
    let first = match track_boundary(&sys, &coarse, |_| {}) {
        Ok(rows) => rows,
        Err(e) => return verdict(false, format!("coarse run failed: {e}")),
    };
    // Resume two rows below the end of the coarse run with the finer step.
    let k = first.len().saturating_sub(3);
    let fine = BoundaryPlan {
        start: Some((first[k].t, first[k].mu)),
        dt: 500.0,
        controls: RunControls {
            de: Some(2e-3),
            seed: 21,
            ..coarse.controls.clone()
        },
        ..coarse.clone()
    };
    let second = match track_boundary(&sys, &fine, |_| {}) {
        Ok(rows) => rows,
        Err(e) => return verdict(false, format!("fine run failed: {e}")),
    };

    let two_phase = |rows: &[BoundaryPoint]| rows[..rows.len() - 1].to_vec();
    let resolved: Vec<BoundaryPoint> = two_phase(&first[..=k]).into_iter().chain(two_phase(&second)).collect();
    let max_sum = resolved.iter().map(|r| (r.x1 + r.x2).abs()).fold(0.0, f64::max);
    let max_mu = first.iter().chain(&second).map(|r| r.mu.abs()).fold(0.0, f64::max);
    let last = second.last().unwrap();
    // Critical slowing down exhausting the sweep cap also marks the top of the gap.
    let closed = matches!(
        last.note.as_deref(),
        Some(NOTE_CLOSURE) | Some(NOTE_MERGED) | Some(NOTE_UNCONVERGED)
    );
    let pass = max_sum < 0.05 && max_mu < 1e-3 && closed && (49_500.0..=55_500.0).contains(&last.t);
    verdict(
        pass,
        format!(
            "{} + {} rows; max |x1+x2| = {max_sum:.4}, max |mu| = {max_mu:.2e}; last row T = {:.0} ({}); mean field {tmf:.0}",
            first.len(),
            second.len(),
            last.t,
            last.note.as_deref().unwrap_or("open")
        ),
    )
}

fn c6_lte_validity() -> Verdict {
    let sys = separation();
    let model = enumerable();
    let (mut valid, mut bad) = (0, 0);
    let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut tie_worst: f64 = 0.0;
    for it in 1..=16 {
        let t = 0.25 * it as f64;
        for im in -12..=12 {
            let mu = 0.25 * im as f64;
            let exact = exact_thermo(&model, t, 1.0, mu).unwrap();
            // Expand about the phase that is stable at T = 0; the other one is metastable.
            let grand: Vec<f64> = sys.gs.states().iter().map(|g| g.e - mu * g.x).collect();
            let best = (0..grand.len()).min_by(|&a, &b| grand[a].total_cmp(&grand[b])).unwrap();
            let tie = grand.iter().enumerate().any(|(g, &v)| g != best && (v - grand[best]).abs() < 1e-12);
            let r = lte_phi(&sys.gs, best, &sys.ce, t, 1.0, mu, 1e-3).unwrap();
            if !r.valid {
                continue;
            }
            let d = (r.point.phi - exact.phi).abs();
            if tie {
                tie_worst = tie_worst.max(d);
                continue;
            }
            valid += 1;
            if d >= 1e-3 {
                bad += 1;
            }
            if d > worst.0 {
                worst = (d, t, mu);
            }
        }
    }
    // Free energy the other pure phase adds to the 8-site partition function.
    let other = worst.1 / 8.0 * (-8.0 * 2.0 * worst.2.abs() / worst.1).exp().ln_1p();
    verdict(
        bad == 0,
        format!(
            "{valid} valid (T, mu) points, {bad} off by >= 1e-3; worst {:.2e} at T={}, mu={}, where the \
             competing phase contributes {other:.2e}; at the two-phase mu itself {tie_worst:.2e}",
            worst.0, worst.1, worst.2
        ),
    )
}

fn c7_hidden_ground_state() -> Verdict {
    let sys = checkerboard();
    let mu = sys.mu_map().unwrap().to_physical(1.96);
    let schedule = [(1000.0, 500_000)];
    let mut found = Vec::new();
    let mut outcomes = Vec::new();
    for seed in 1..=8 {
        let out = anneal_ground_state(&sys, mu, &schedule, 10.0, seed, KB_EV).unwrap();
        let r = &out.report;
        outcomes.push(format!("{:.3}{}", r.x, if r.violation { "*" } else { "" }));
        if (r.x - 0.5).abs() < 1e-12 && r.violation {
            found.push(seed);
        }
    }
    verdict(
        !found.is_empty(),
        format!(
            "mu = {mu:.2}, kT = {:.4}; final x per seed [{}] (* = hull violation); x = 0.5 hidden structure from seeds {found:?}",
            KB_EV * 1000.0,
            outcomes.join(" ")
        ),
    )
}

fn write_model(dir: &Path, files: &ModelFiles) {
    std::fs::write(dir.join("lat.in"), files.lattice).unwrap();
    std::fs::write(dir.join("clusters.out"), files.clusters).unwrap();
    std::fs::write(dir.join("eci.out"), files.eci).unwrap();
    std::fs::write(dir.join("gs_str.out"), files.ground_states).unwrap();
}

fn c8_cli() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;

    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), &SEPARATION);
    let args = "-gs1=0 -gs2=1 -dT=2000 -dx=1e-2 -er=20 -k=8.617e-5 -ltep=5e-3 -o=ph01.out";
    let out = Command::new(env!("CARGO_BIN_EXE_cepd-phb"))
        .args(args.split(' '))
        .current_dir(dir.path())
        .output()
        .unwrap();
    let table = std::fs::read_to_string(dir.path().join("ph01.out")).unwrap_or_default();
    let first: Vec<f64> = table
        .lines()
        .next()
        .unwrap_or("")
        .split('\t')
        .filter_map(|c| c.parse().ok())
        .collect();
    let phb_ok = out.status.success()
        && String::from_utf8_lossy(&out.stdout).contains("Supercell size: 12 12 12")
        && first.len() == 6
        && first[1] == 0.0
        && first[2] < -0.99
        && first[3] > 0.99;
    pass &= phb_ok;
    notes.push(format!(
        "phb {}: first row [{}]",
        if phb_ok { "ok" } else { "bad" },
        table.lines().next().unwrap_or("")
    ));

    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path(), &CHECKERBOARD);
    let args = "-gs=0 -mu0=0.5 -T0=10 -keV -er=20 -n=0 -eq=0 -g2c";
    let out = Command::new(env!("CARGO_BIN_EXE_cepd-scan"))
        .args(args.split(' '))
        .current_dir(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut lines = stdout.lines();
    let header = lines.next().unwrap_or("");
    let row = lines.next().unwrap_or("");
    let scan_ok = out.status.success()
        && header == "Supercell size: 12 12 12"
        && row.starts_with("10.000000\t-12.000000\t2.400000\t-1.000000\t")
        && dir.path().join("mcsnapshot.out").exists()
        && dir.path().join("ltedat.out").exists();
    pass &= scan_ok;
    notes.push(format!("emc2-style scan {}: [{header}] [{row}]", if scan_ok { "ok" } else { "bad" }));

    // The row formatter is what both programs print.
    let r = BoundaryPoint::new(240.0, -0.0775028, -0.986175, -0.502882, -0.0495888, -0.0501994);
    pass &= format_row(&r) == "240.000000\t-0.077503\t-0.986175\t-0.502882\t-0.049589\t-0.050199";
    verdict(pass, notes.join("; "))
}
