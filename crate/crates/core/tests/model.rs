mod common;

use common::{geomspace, loglog_slope};
use coupled_instantons::model::*;
use coupled_instantons::Error;
use proptest::prelude::*;

#[test]
fn rate_examples() {
    let r = derive_rates(&ActionParams::new(1.0, 0.5, 1.0, 0.5, 0.0).unwrap()).unwrap();
    assert_eq!((r.kappa, r.epsilon, r.mu2, r.nu2), (1.0, 1.0, 0.0, 0.0));
    let r = derive_rates(&ActionParams::new(1.0, 0.5, 1.0, 0.08, -0.16).unwrap()).unwrap();
    assert!((r.epsilon - 0.4).abs() < 1e-15);
    assert_eq!((r.mu2, r.nu2), (-0.16, -0.16));
    assert!((r.mu_nu() + 0.16).abs() < 1e-15);
}

#[test]
fn invalid_params_rejected() {
    for bad in [(0.0, 1.0, 1.0, 1.0), (1.0, -1.0, 1.0, 1.0), (1.0, 1.0, f64::NAN, 1.0)] {
        let e = ActionParams::new(bad.0, bad.1, bad.2, bad.3, 0.0).unwrap_err();
        assert!(matches!(e, Error::InvalidParameters(_)));
    }
}

#[test]
fn hierarchy_examples() {
    let g = |k, e, m, n| hierarchy_check(&Rates { kappa: k, epsilon: e, mu2: m, nu2: n }).grade;
    assert_eq!(g(1.0, 0.05, 0.0025, 0.0025), Grade::Strong);
    assert_eq!(g(1.0, 0.4, 0.16, 0.16), Grade::Marginal);
    assert_eq!(g(1.0, 1.0, 1.0, 1.0), Grade::Invalid);
}

#[test]
fn potential_examples() {
    let p = ActionParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
    assert_eq!(potential(&p, 0.0, 0.0), 0.5);
    assert_eq!(potential(&p.with_c(2.0), 0.0, 0.0), 1.5);
    assert_eq!(potential(&p.with_c(0.7), 1.0, -1.0), 0.0);
}

#[test]
fn baseline_examples() {
    let p = Rates { kappa: 1.0, epsilon: 0.4, mu2: 0.0, nu2: 0.0 }.to_params(1.0, 1.0).unwrap();
    assert!((harmonic_baseline(&p, BaselineMode::Perturbative).unwrap() - 0.7).abs() < 1e-15);
    assert!((harmonic_baseline(&p, BaselineMode::Exact).unwrap() - 0.7).abs() < 1e-15);
    let p = Rates { kappa: 1.0, epsilon: 0.4, mu2: 0.01, nu2: 0.01 }.to_params(1.0, 1.0).unwrap();
    let want = 0.7 - 1e-4 / (0.4 * 1.4);
    assert!((harmonic_baseline(&p, BaselineMode::Perturbative).unwrap() - want).abs() < 1e-15);
    let strong = ActionParams::new(1.0, 0.5, 1.0, 0.08, 0.3).unwrap();
    assert!(matches!(harmonic_baseline(&strong, BaselineMode::Exact), Err(Error::UnstableQuadraticForm { .. })));
}

/// Independent normal-mode oracle: characteristic polynomial of the
/// Hessian at the vacuum, with the kinetic metric.
fn normal_mode_ground(p: &ActionParams) -> f64 {
    let (vpp, vpq, vqq) = (2.0 * p.a2, 2.0 * p.c, 2.0 * p.b2);
    // det(V'' − ω² diag(a1,b1)) = 0
    let qa = p.a1 * p.b1;
    let qb = -(vpp * p.b1 + vqq * p.a1);
    let qc = vpp * vqq - vpq * vpq;
    let disc = (qb * qb - 4.0 * qa * qc).sqrt();
    let w1 = ((-qb + disc) / (2.0 * qa)).sqrt();
    let w2 = (2.0 * qc / (-qb + disc)).sqrt();
    0.5 * (w1 + w2)
}

#[test]
fn exact_baseline_matches_normal_modes() {
    for c in [0.0, 0.01, 0.05, -0.05] {
        let p = ActionParams::new(1.3, 0.7, 2.1, 0.2, c).unwrap();
        let got = harmonic_baseline(&p, BaselineMode::Exact).unwrap();
        assert!((got - normal_mode_ground(&p)).abs() < 1e-13, "c={c}");
    }
}

#[test]
fn baseline_residual_is_quartic() {
    let cs = geomspace(1e-2, 1e-1, 8);
    let base = ActionParams::new(1.0, 0.5, 1.0, 0.08, 0.0).unwrap();
    let res: Vec<f64> = cs
        .iter()
        .map(|&c| {
            let p = base.with_c(c);
            normal_mode_ground(&p) - harmonic_baseline(&p, BaselineMode::Perturbative).unwrap()
        })
        .collect();
    let slope = loglog_slope(&cs, &res);
    assert!((3.8..=4.2).contains(&slope), "slope {slope}");
}

fn params() -> impl Strategy<Value = ActionParams> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, -1.0f64..1.0)
        .prop_map(|(a1, a2, b1, b2, s)| ActionParams::new(a1, a2, b1, b2, s * (a2 * b2).sqrt()).unwrap())
}

proptest! {
    #[test]
    fn rates_round_trip(p in params()) {
        let r = derive_rates(&p).unwrap();
        prop_assert!((r.mu2 * p.a1 - p.c).abs() <= 1e-12 * p.c.abs());
        prop_assert!((r.nu2 * p.b1 - p.c).abs() <= 1e-12 * p.c.abs());
        let back = r.to_params(p.a1, p.b1).unwrap();
        for (x, y) in [(back.a2, p.a2), (back.b2, p.b2), (back.c, p.c)] {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn potential_symmetric_and_nonnegative(p in params(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let v = potential(&p, x, y);
        prop_assert_eq!(v, potential(&p, -x, y));
        prop_assert_eq!(v, potential(&p, x, -y));
        prop_assert!(v >= -1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn gradient_matches_finite_difference(p in params(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let h = 1e-6;
        let (gx, gy) = potential_gradient(&p, x, y);
        let fx = (potential(&p, x + h, y) - potential(&p, x - h, y)) / (2.0 * h);
        let fy = (potential(&p, x, y + h) - potential(&p, x, y - h)) / (2.0 * h);
        let scale = 1.0 + gx.abs() + gy.abs();
        prop_assert!((gx - fx).abs() < 1e-6 * scale && (gy - fy).abs() < 1e-6 * scale);
    }
}
