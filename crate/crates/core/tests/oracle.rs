use coupled_instantons::fluct::{k_factor, KConfig};
use coupled_instantons::gas::Parity;
use coupled_instantons::model::{ActionParams, Flavor};
use coupled_instantons::molecule::{rigid_results, MoleculeParams};
use coupled_instantons::oracle::*;
use coupled_instantons::Error;
use std::f64::consts::PI;

fn small() -> GridSpec {
    GridSpec::new(2.5, 129).unwrap()
}

/// Anharmonic levels about q = 1 to second order in the cubic and first in
/// the quartic term: V = b2 x² + b2 x³ + (b2/4) x⁴, mass b1.
fn anharmonic_level(b1: f64, b2: f64, n: f64) -> f64 {
    let w = (2.0 * b2 / b1).sqrt();
    let (g3, g4) = (b2, 0.25 * b2);
    w * (n + 0.5) + 3.0 * g4 / (4.0 * b1 * b1 * w * w) * (2.0 * n * n + 2.0 * n + 1.0)
        - g3 * g3 / (8.0 * b1.powi(3) * w.powi(4)) * (30.0 * n * n + 30.0 * n + 11.0)
}

#[test]
fn particle_in_a_box() {
    for (b1, w) in [(1.0, 2.5), (0.5, 4.0)] {
        let r = solve_1d(b1, 0.0, &GridSpec::new(w, 257).unwrap(), 3).unwrap();
        for (k, e) in r.levels.iter().enumerate() {
            let want = ((k + 1) as f64).powi(2) * PI * PI / (8.0 * b1 * w * w);
            assert!((e / want - 1.0).abs() < 1e-8, "{k}: {e} vs {want}");
        }
        assert!(r.parities.is_none());
    }
}

#[test]
fn harmonic_limit_of_deep_wells() {
    let (b1, b2) = (400.0, 200.0);
    let r = solve_1d(b1, b2, &GridSpec::default(), 4).unwrap();
    for (pair, n) in [(0, 0.0), (2, 1.0)] {
        let want = anharmonic_level(b1, b2, n);
        for e in &r.levels[pair..pair + 2] {
            assert!((e / want - 1.0).abs() <= 1e-4, "n={n}: {e} vs {want}");
        }
    }
    // the bare oscillator value is approached as the wells deepen
    let eps = |b1: f64, b2: f64| (2.0 * b2 / b1).sqrt();
    let errs: Vec<f64> = [(10.0, 5.0), (40.0, 20.0), (160.0, 80.0)]
        .iter()
        .map(|&(b1, b2)| {
            let e0 = solve_1d(b1, b2, &GridSpec::default(), 1).unwrap().levels[0];
            (e0 / (0.5 * eps(b1, b2)) - 1.0).abs()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn one_dimensional_refinement_converges() {
    let r = solve_1d(6.0, 3.0, &GridSpec::default(), 4).unwrap();
    assert!(r.change <= REFINEMENT_TOL);
    assert!(r.points > 257);
    assert!(r.levels.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn deep_well_splitting_tracks_the_instanton() {
    // S0 = 6 and 8 in the rigid limit (f = 1): b1 = 1.5·S0, b2 = b1/2
    let mut errs = Vec::new();
    for s0 in [6.0, 8.0] {
        let b1 = 1.5 * s0;
        let r = solve_1d(b1, 0.5 * b1, &GridSpec::default(), 2).unwrap();
        let mol = MoleculeParams::new(b1, 1.0, 1.0, 1.0, 0.0).unwrap();
        let pred = rigid_results(&mol).unwrap().splitting();
        errs.push((pred - (r.levels[1] - r.levels[0])).abs() / (r.levels[1] - r.levels[0]));
    }
    assert!(errs[0] < 0.25 && errs[1] < errs[0], "{errs:?}");
    assert!((errs[0] / 0.2389 - 1.0).abs() < 0.01 && (errs[1] / 0.1582 - 1.0).abs() < 0.01, "{errs:?}");
}

#[test]
fn rejects_bad_input() {
    assert!(matches!(solve_1d(1.0, 1.0, &GridSpec::default(), 9), Err(Error::InvalidParameters(_))));
    assert!(solve_1d(-1.0, 1.0, &GridSpec::default(), 1).is_err());
    let bad = GridSpec { half_width: 2.5, points_per_axis: 100 };
    assert!(solve_1d(1.0, 1.0, &bad, 1).is_err());
    let no_wells = ActionParams::new(1.0, 0.5, 1.0, 0.08, 0.3).unwrap();
    assert!(matches!(solve_2d(&no_wells, &small(), 4), Err(Error::NoFourWellStructure(_))));
}

#[test]
fn decoupled_levels_are_tensor_sums() {
    let p = ActionParams::new(4.0, 2.0, 8.0, 2.0, 0.0).unwrap();
    let g = small();
    let two = solve_2d(&p, &g, 6).unwrap();
    let lp = solve_1d(p.a1, p.a2, &g, 4).unwrap().levels;
    let lq = solve_1d(p.b1, p.b2, &g, 4).unwrap().levels;
    let mut sums: Vec<f64> = lp.iter().flat_map(|a| lq.iter().map(move |b| a + b)).collect();
    sums.sort_by(f64::total_cmp);
    for (a, b) in two.levels.iter().zip(&sums) {
        assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }
    let pars = two.parities.unwrap();
    let mut first4 = pars[..4].to_vec();
    first4.sort_by_key(|p| (p.p, p.q));
    first4.dedup();
    assert_eq!(first4.len(), 4);
    assert_eq!(pars[0], Parity::new(1, 1));
}

#[test]
fn swapping_coordinates_swaps_parities() {
    let p = ActionParams::new(4.0, 2.0, 6.0, 1.5, 0.3).unwrap();
    let g = small();
    let a = sector_levels_fixed(&p, &g, 3).unwrap();
    let b = sector_levels_fixed(&p.swapped(), &g, 3).unwrap();
    // sectors ordered S, P, Q, R
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        for (x, y) in a[i].iter().zip(&b[j]) {
            assert!((x - y).abs() <= 1e-9 * x.abs(), "{i}/{j}: {x} vs {y}");
        }
    }
}

#[test]
fn parity_reflections_commute_with_hamiltonian() {
    let g = small();
    let n = g.nodes().len();
    for c in [0.0, 0.2, -0.35] {
        let p = ActionParams::new(2.0, 1.0, 3.0, 0.4, c).unwrap();
        let psi: Vec<f64> = (0..n * n).map(|k| ((k * 104729) % 2003) as f64 / 2003.0 - 0.5).collect();
        for (fp, fq) in [(true, false), (false, true), (true, true)] {
            let a = apply_hamiltonian(&p, &g, &reflect(&psi, n, fp, fq));
            let b = reflect(&apply_hamiltonian(&p, &g, &psi), n, fp, fq);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn shallow_wells_are_flagged() {
    let p = ActionParams::new(2.0, 1.0, 2.0, 1.0, 0.05).unwrap();
    let results: Vec<_> = Flavor::ALL.iter().map(|&f| k_factor(f, &p, &KConfig::default()).unwrap()).collect();
    let rep = compare(&p, &results, &small(), 0.25).unwrap();
    assert!(rep.min_action < MIN_RELIABLE_ACTION);
    assert_eq!(rep.verdict, Verdict::SemiclassicsUnreliable);
    let v = serde_json::to_value(&rep).unwrap();
    for key in ["levels", "parities", "instanton_levels", "rel_errors", "verdict"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["verdict"], "semiclassics-unreliable");
}
