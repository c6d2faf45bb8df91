use num_complex::Complex64;
use proptest::prelude::*;

use pathslice::action::ActionExpansion;
use pathslice::grid::{gaussian_packet, l2_distance, random_band_limited, Grid, WaveFunction};
use pathslice::oio::{PropagatorStep, DEFAULT_WINDOW};
use pathslice::parametrix::parametrix_norm_scan;
use pathslice::potential::{make_low_regularity_potential, PotentialModel};
use pathslice::reference::{reference_propagate, ReferenceConfig};
use pathslice::slicing::{convergence_study, convergence_study_with_scheme, single_step_study, Scheme, StudyConfig};

const SLICES: [usize; 4] = [4, 8, 16, 32];
const DTS: [f64; 4] = [0.25, 0.125, 0.0625, 0.03125];

fn grid() -> Grid {
    Grid::new(12.0, 1024).unwrap()
}

fn packet() -> WaveFunction {
    gaussian_packet(&grid(), 0.0, 0.0, 1.0, 1.0).unwrap()
}

fn models(n: usize) -> Vec<PotentialModel> {
    vec![PotentialModel::cosine(1.0, 1.0), make_low_regularity_potential(n, 64).unwrap()]
}

fn combine(a: Complex64, f: &WaveFunction, b: Complex64, g: &WaveFunction) -> WaveFunction {
    let v = f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect();
    WaveFunction::new(*f.grid(), v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn short_time_step_is_linear(
        seed in 0u64..1000,
        ar in -2.0..2.0f64, ai in -2.0..2.0f64,
        br in -2.0..2.0f64, bi in -2.0..2.0f64,
        dt in 0.01..0.5f64,
        order in 1usize..=2,
    ) {
        let g = Grid::new(12.0, 128).unwrap();
        let exp = ActionExpansion::new(PotentialModel::cosine(0.7, 1.3), order, 0.0, 1.0, g).unwrap();
        let step = PropagatorStep::new(&exp, dt, 0.0, DEFAULT_WINDOW).unwrap();
        let f = random_band_limited(&g, seed, 1.0, 1.0).unwrap();
        let h = random_band_limited(&g, seed + 1000, 1.0, 1.0).unwrap();
        let (a, b) = (Complex64::new(ar, ai), Complex64::new(br, bi));
        let lhs = step.apply(&combine(a, &f, b, &h)).unwrap();
        let ef = step.apply(&f).unwrap();
        let eh = step.apply(&h).unwrap();
        let rhs = combine(a, &ef, b, &eh);
        let scale = a.norm() * ef.norm() + b.norm() * eh.norm();
        prop_assert!(l2_distance(&lhs, &rhs).unwrap() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn halving_the_mesh_never_grows_the_error() {
    let cfg = StudyConfig::new(1.0).unwrap();
    let f = packet();
    for n in 1..=2 {
        for v in models(n) {
            let r = convergence_study(&v, n, &f, 0.0, 1.0, &SLICES, 1.0, &cfg).unwrap();
            for w in r.errors.windows(2) {
                assert!(w[1] <= 1.05 * w[0], "N={n}: {:?}", r.errors);
            }
        }
    }
}

#[test]
fn random_subdivisions_track_uniform_errors() {
    let cfg = StudyConfig::new(1.0).unwrap();
    let f = packet();
    for n in 1..=2 {
        for v in models(n) {
            let uniform = convergence_study(&v, n, &f, 0.0, 1.0, &SLICES, 1.0, &cfg).unwrap();
            for seed in 0..3 {
                let scheme = Scheme::Random { seed, jitter: 0.3 };
                let random = convergence_study_with_scheme(&v, n, &f, 0.0, 1.0, &SLICES, scheme, 1.0, &cfg).unwrap();
                for (u, r) in uniform.errors.iter().zip(&random.errors) {
                    assert!(r / u <= 3.0 && u / r <= 3.0, "N={n} seed {seed}: {u:.3e} vs {r:.3e}");
                }
            }
        }
    }
}

#[test]
fn single_step_gains_one_order_over_the_residual() {
    let cfg = StudyConfig::new(1.0).unwrap();
    let f = packet();
    let g = grid();
    for n in 1..=2 {
        for v in models(n) {
            let step = single_step_study(&v, n, &f, 0.0, &DTS, 1.0, &cfg).unwrap();
            let scan = parametrix_norm_scan(&v, n, 0.0, &DTS, 1.0, &g, 0.3).unwrap();
            let gap = step.fitted_order - scan.fitted_order;
            assert!((0.7..=1.3).contains(&gap), "N={n}: {:.3} - {:.3}", step.fitted_order, scan.fitted_order);
        }
    }
}

#[test]
fn reference_is_second_order_in_substeps() {
    let f = packet();
    let v = PotentialModel::cosine(1.0, 1.0);
    let run = |m: usize| reference_propagate(&v, &f, 0.0, 1.0, &ReferenceConfig::new(m, 1.0).unwrap()).unwrap();
    let (a, b, c) = (run(256), run(512), run(1024));
    let ratio = l2_distance(&a, &b).unwrap() / l2_distance(&b, &c).unwrap();
    assert!(ratio >= 3.5, "ratio {ratio:.3}");
}
