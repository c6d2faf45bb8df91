//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Desk-scale setting throughout: grid(12, 1024), hbar = 1, [0, 1], unit-width
//! Gaussian packet, potentials cosine(1, 1) and the low-regularity series
//! with 64 terms. Runs without the libtest harness so the lines always print.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use pathslice::action::{transport_residual, ActionExpansion};
use pathslice::grid::{fit_order, gaussian_packet, l2_distance, random_band_limited, Grid, WaveFunction};
use pathslice::oio::{free_propagate, PropagatorStep, DEFAULT_WINDOW};
use pathslice::parametrix::{parametrix_norm_scan, residual_field};
use pathslice::potential::{make_low_regularity_potential, PotentialModel};
use pathslice::reference::{reference_propagate, ReferenceConfig};
use pathslice::slicing::{
    apply_time_sliced_with, convergence_study, make_subdivision, single_step_study, Scheme, StudyConfig,
};
use pathslice::timefreq::{
    dilation_constant, frozen_amplitude_norm, modulation_norm, stft, wigner_ambiguity_check, PhaseSpaceLattice,
    FROZEN_NORM_CAP,
};

type Check = Result<(bool, String), String>;

const SLICES: [usize; 4] = [4, 8, 16, 32];
const DTS: [f64; 4] = [0.25, 0.125, 0.0625, 0.03125];

fn grid() -> Grid {
    Grid::new(12.0, 1024).unwrap()
}

fn packet() -> WaveFunction {
    gaussian_packet(&grid(), 0.0, 0.0, 1.0, 1.0).unwrap()
}

/// The two acceptance potentials for order `n`.
fn potentials(n: usize) -> Vec<(String, PotentialModel)> {
    vec![
        ("cosine(1,1)".into(), PotentialModel::cosine(1.0, 1.0)),
        (format!("low_regularity({n},64)"), make_low_regularity_potential(n, 64).unwrap()),
    ]
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn composed_convergence() -> Check {
    let cfg = StudyConfig::new(1.0).map_err(err)?;
    let f = packet();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=2 {
        for (name, v) in potentials(n) {
            let r = convergence_study(&v, n, &f, 0.0, 1.0, &SLICES, 1.0, &cfg).map_err(err)?;
            ok &= r.fitted_order >= n as f64 - 0.3;
            notes.push(format!("N={n} {name}: {:.3}", r.fitted_order));
        }
    }
    Ok((ok, notes.join(", ")))
}

fn single_step_order() -> Check {
    let cfg = StudyConfig::new(1.0).map_err(err)?;
    let f = packet();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=2 {
        for (name, v) in potentials(n) {
            let r = single_step_study(&v, n, &f, 0.0, &DTS, 1.0, &cfg).map_err(err)?;
            ok &= r.fitted_order >= n as f64 + 0.7;
            notes.push(format!("N={n} {name}: {:.3}", r.fitted_order));
        }
    }
    Ok((ok, notes.join(", ")))
}

fn parametrix_scaling() -> Check {
    let g = grid();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=2 {
        for (name, v) in potentials(n) {
            let scan = parametrix_norm_scan(&v, n, 0.0, &DTS, 1.0, &g, 0.3).map_err(err)?;
            ok &= scan.fitted_order >= n as f64 - 0.3;
            notes.push(format!("N={n} {name}: {:.3}", scan.fitted_order));
        }
    }
    let exp = ActionExpansion::new(PotentialModel::linear(1.0), 3, 0.0, 1.0, g).map_err(err)?;
    let mut worst: f64 = 0.0;
    for dt in [1.0, 0.5, 0.25, 0.125, 0.03125] {
        worst = worst.max(residual_field(&exp, dt, 0.0).map_err(err)?.sup_norm());
    }
    ok &= worst <= 1e-12;
    notes.push(format!("linear N=3 |g_3| <= {worst:.1e}"));
    Ok((ok, notes.join(", ")))
}

fn closed_form_coefficients() -> Check {
    let g = grid();
    let lin = ActionExpansion::new(PotentialModel::linear(1.0), 3, 0.0, 1.0, g).map_err(err)?;
    let mut worst: f64 = 0.0;
    let nodes: Vec<f64> = (0..g.len()).step_by(37).map(|i| g.x(i)).collect();
    for &x in &nodes {
        for &y in &nodes {
            let w = |k| lin.eval_w_derivative(k, 0, x, y).unwrap();
            worst = worst.max((w(1) + (x + y) / 2.0).norm());
            worst = worst.max(w(2).norm());
            worst = worst.max((w(3) + 1.0 / 24.0).norm());
        }
    }
    let mut worst_h: f64 = 0.0;
    for hbar in [1.0, 0.25] {
        let har = ActionExpansion::new(PotentialModel::harmonic(1.0), 2, 0.0, hbar, g).map_err(err)?;
        for &x in &nodes {
            for &y in &nodes {
                let w1 = har.eval_w_derivative(1, 0, x, y).unwrap();
                let w2 = har.eval_w_derivative(2, 0, x, y).unwrap();
                worst_h = worst_h.max((w1 + (x * x + x * y + y * y) / 6.0).norm());
                worst_h = worst_h.max((w2 - Complex64::new(0.0, -hbar / 12.0)).norm());
            }
        }
    }
    Ok((
        worst <= 1e-10 && worst_h <= 1e-10,
        format!("linear max dev {worst:.1e}, harmonic max dev {worst_h:.1e}"),
    ))
}

fn transport_identity() -> Check {
    let coarse = Grid::new(12.0, 128).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        for (_, v) in potentials(n) {
            let exp = ActionExpansion::new(v, n, 0.0, 1.0, grid()).map_err(err)?;
            for k in 1..=n {
                worst = worst.max(transport_residual(&exp, k, &coarse).map_err(err)?);
            }
        }
    }
    Ok((worst <= 1e-6, format!("max residual {worst:.2e}")))
}

fn free_exactness() -> Check {
    let g = grid();
    let f = gaussian_packet(&g, 0.5, 1.0, 1.0, 1.0).map_err(err)?;
    let exact = free_propagate(&f, 1.0, 1.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let exp = ActionExpansion::new(PotentialModel::zero(), n, 0.0, 1.0, g).map_err(err)?;
        let mut schemes: Vec<(usize, Scheme)> = [1, 3, 7, 16].iter().map(|&l| (l, Scheme::Uniform)).collect();
        schemes.push((5, Scheme::Random { seed: 11, jitter: 0.3 }));
        schemes.push((9, Scheme::Random { seed: 12, jitter: 0.2 }));
        for (l, scheme) in schemes {
            let omega = make_subdivision(0.0, 1.0, l, scheme).map_err(err)?;
            let u = apply_time_sliced_with(&exp, &f, &omega, DEFAULT_WINDOW).map_err(err)?;
            worst = worst.max(l2_distance(&u, &exact).map_err(err)?);
        }
    }
    Ok((worst <= 1e-8, format!("max L2 error {worst:.2e}")))
}

fn reference_solver() -> Check {
    let f = packet();
    let cos = PotentialModel::cosine(1.0, 1.0);
    let cfg = ReferenceConfig::default();
    let dt = 1.0 / cfg.substeps as f64;
    let mut u = f.clone();
    let mut drift: f64 = 0.0;
    for j in 0..64 {
        let s = j as f64 * dt;
        let next = reference_propagate(&cos, &u, s, s + dt, &cfg).map_err(err)?;
        drift = drift.max((next.norm() - u.norm()).abs());
        u = next;
    }
    let period = 2.0 * std::f64::consts::PI;
    let revived = reference_propagate(&PotentialModel::harmonic(1.0), &f, 0.0, period, &cfg).map_err(err)?;
    let revival = l2_distance(&revived, &f.scaled(Complex64::new(-1.0, 0.0))).map_err(err)?;
    let runs = [256usize, 512, 1024, 2048]
        .iter()
        .map(|&n| reference_propagate(&cos, &f, 0.0, 1.0, &ReferenceConfig::new(n, 1.0).unwrap()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let diffs: Vec<f64> = runs.windows(2).map(|w| l2_distance(&w[0], &w[1]).unwrap()).collect();
    let ratio = diffs.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    Ok((
        drift <= 1e-12 && revival <= 1e-6 && ratio >= 3.5,
        format!("step drift {drift:.1e}, revival {revival:.2e}, refinement ratio {ratio:.3}"),
    ))
}

fn identity_limit() -> Check {
    let f = packet();
    let mut ok = true;
    let mut notes = Vec::new();
    for n in 1..=2 {
        for (name, v) in potentials(n) {
            let exp = ActionExpansion::new(v, n, 0.0, 1.0, grid()).map_err(err)?;
            let mut errs = Vec::new();
            for eps in [1e-2, 1e-3, 1e-4] {
                let step = PropagatorStep::new(&exp, eps, 0.0, DEFAULT_WINDOW).map_err(err)?;
                errs.push(l2_distance(&step.apply(&f).map_err(err)?, &f).map_err(err)?);
            }
            ok &= errs[1] <= 0.01 && errs[0] > errs[1] && errs[1] > errs[2];
            notes.push(format!("N={n} {name}: {:.2e}/{:.2e}/{:.2e}", errs[0], errs[1], errs[2]));
        }
    }
    Ok((ok, notes.join(", ")))
}

fn boundedness() -> Check {
    let g = grid();
    let states = (0..32)
        .map(|seed| random_band_limited(&g, seed, 2.0, 1.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let lattice = PhaseSpaceLattice::new(g).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut frozen: f64 = 0.0;
    for n in 1..=2 {
        for (_, v) in potentials(n) {
            let exp = ActionExpansion::new(v, n, 0.0, 1.0, g).map_err(err)?;
            for dt in [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125] {
                let step = PropagatorStep::new(&exp, dt, 0.0, DEFAULT_WINDOW).map_err(err)?;
                for f in &states {
                    worst = worst.max(step.apply(f).map_err(err)?.norm() / f.norm());
                }
            }
            for dt in [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 1e-3] {
                for y0 in [-2.0, 0.0, 2.0] {
                    frozen = frozen.max(frozen_amplitude_norm(&exp, dt, y0, &lattice).map_err(err)?);
                }
            }
        }
    }
    Ok((
        worst <= 2.0 && frozen <= FROZEN_NORM_CAP,
        format!("max gain {worst:.4}, max frozen norm {frozen:.4} (cap {FROZEN_NORM_CAP})"),
    ))
}

fn time_frequency() -> Check {
    let g = grid();
    let lattice = PhaseSpaceLattice::new(g).map_err(err)?;
    let mut moyal: f64 = 0.0;
    let mut wa: f64 = 0.0;
    for seed in 0..4 {
        let f = random_band_limited(&g, 100 + seed, 2.0, 1.0).map_err(err)?;
        moyal = moyal.max((modulation_norm(&stft(&f, &lattice).map_err(err)?, 2.0, 2.0).map_err(err)? - 1.0).abs());
        let r = wigner_ambiguity_check(&f, lattice.window(), &lattice).map_err(err)?;
        wa = wa.max(r.ambiguity_residual).max(r.wigner_residual);
    }
    // |V_g g(x, w)| = exp(-pi (x^2 + w^2) / 2) for the unit Gaussian window.
    let data = stft(lattice.window(), &lattice).map_err(err)?;
    let mut gauss: f64 = 0.0;
    for m in (256..768).step_by(16) {
        for k in (256..768).step_by(16) {
            let (x, w) = (g.x(m), lattice.omega(k));
            let want = (-std::f64::consts::PI * (x * x + w * w) / 2.0).exp();
            gauss = gauss.max((data.get(m, k).norm() - want).abs());
        }
    }
    let c1 = dilation_constant(&[1.0], 1, 2.0, 2.0).map_err(err)?;
    let c2 = dilation_constant(&[2.0], 1, f64::INFINITY, 1.0).map_err(err)?;
    let exact = c1 == 2f64.sqrt() && c2 == 5f64.sqrt();
    Ok((
        moyal <= 1e-6 && wa <= 1e-6 && gauss <= 1e-8 && exact,
        format!("Moyal {moyal:.1e}, Wigner/ambiguity {wa:.1e}, Gaussian STFT {gauss:.1e}, constants {c1} and {c2}"),
    ))
}

/// Random subdivisions and a random initial state.
const CONVERGE_CONFIG: &str = r#"
[grid]
points = 512

[potential]
kind = "cosine"

[experiment]
order = 2
scheme = "random"
jitter = 0.3
seed = 42
state = "random"
band = 1.5
"#;

const VERIFY_CONFIG: &str = r#"
[potential]
kind = "low_regularity"
order = 2

[experiment]
order = 2
seed = 7
"#;

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut outputs = Vec::new();
    for (command, text) in [("converge", CONVERGE_CONFIG), ("verify", VERIFY_CONFIG)] {
        let config = tmp.path().join(format!("{command}.toml"));
        std::fs::write(&config, text).map_err(err)?;
        for rep in 0..2 {
            let out = tmp.path().join(format!("{command}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_pathslice"))
                .args([command, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(err)?;
            if !status.status.success() {
                return Err(format!("{command} exited with {:?}", status.status.code()));
            }
            outputs.push((command, read_all(&out)));
        }
    }
    let same = outputs[0].1 == outputs[1].1 && outputs[2].1 == outputs[3].1;
    let files: usize = outputs.iter().map(|o| o.1.len()).sum::<usize>() / 2;
    // Library-level draws repeat exactly as well.
    let a = make_subdivision(0.0, 1.0, 16, Scheme::Random { seed: 5, jitter: 0.3 }).map_err(err)?;
    let b = make_subdivision(0.0, 1.0, 16, Scheme::Random { seed: 5, jitter: 0.3 }).map_err(err)?;
    let f1 = random_band_limited(&grid(), 5, 1.0, 1.0).map_err(err)?;
    let f2 = random_band_limited(&grid(), 5, 1.0, 1.0).map_err(err)?;
    let same_draws = a.times() == b.times() && f1.values() == f2.values();
    Ok((same && same_draws, format!("{files} output files compared byte for byte across repeated runs")))
}

fn main() {
    // Sanity check on the fitter used by criteria 1 to 3.
    assert!((fit_order(&[1.0, 0.5, 0.25], &[1.0, 0.25, 0.0625]).unwrap() - 2.0).abs() < 1e-12);

    let criteria: [(&str, fn() -> Check); 11] = [
        ("composed convergence", composed_convergence),
        ("single-step order", single_step_order),
        ("parametrix scaling", parametrix_scaling),
        ("closed-form action coefficients", closed_form_coefficients),
        ("transport identity", transport_identity),
        ("free-particle exactness", free_exactness),
        ("reference solver", reference_solver),
        ("identity limit", identity_limit),
        ("boundedness witnesses", boundedness),
        ("time-frequency identities", time_frequency),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let ok = ok && secs <= 60.0;
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {}: {name} ({secs:.1}s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
