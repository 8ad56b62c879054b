//! Golden values for the two-state reference model (Erlang(2,2)/Erlang(2,1)
//! upward jumps, Exp(1/3)/Exp(1/2) downward jumps, symmetric switching).

mod common;

use common::reference_model;
use mmrisk::factorization::{factorize, integer_denominator};
use mmrisk::linalg::Mat;
use mmrisk::model::{drift_m1, dual_spec};
use mmrisk::overshoot::{self, OvershootKind};
use mmrisk::spectral::{lundberg_bounds, lundberg_certificate, perron_root};
use mmrisk::transforms::{cumulant_matrix, p0_limit};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn stationary_law_and_drifts() {
    let m = reference_model();
    assert!(close(m.pi()[0], 0.5, 1e-15) && close(m.pi()[1], 0.5, 1e-15));
    assert!(close(drift_m1(&m), -1.0, 1e-14));
    let dual = dual_spec(&m).unwrap();
    assert!(close(dual.drift(m.pi()), 1.0, 1e-14));
}

#[test]
fn denominator_is_exact() {
    let f = factorize(&reference_model()).unwrap();
    assert_eq!(integer_denominator(&f.g).unwrap(), vec![-8, -51, 114, 387, 263, 48]);
    assert_eq!(
        f.g.denominator().to_string(),
        "48 r^5 + 263 r^4 + 387 r^3 + 114 r^2 - 51 r - 8"
    );
}

#[test]
fn denominator_roots() {
    let f = factorize(&reference_model()).unwrap();
    let expect = [-3.25672, -1.59682, -0.794382, -0.133485, 0.30224];
    assert_eq!(f.poles.len(), 5);
    for (p, e) in f.poles.iter().zip(expect) {
        assert!(close(p.re, e, 1e-4) && p.im == 0.0, "{p} vs {e}");
    }
}

#[test]
fn ladder_exit_matrix() {
    let f = factorize(&reference_model()).unwrap();
    let expect = Mat::from_row_slice(2, 2, &[0.22, 0.22, 0.17, 0.17]);
    assert!((&f.r_plus - expect).amax() < 0.005);
    // frozen to the exact pipeline
    assert!(close(f.r_plus[(0, 0)], 0.222176492281794, 1e-10));
    assert!(close(f.r_plus[(1, 1)], 0.166735261577308, 1e-10));
}

#[test]
fn ruin_mixtures() {
    let f = factorize(&reference_model()).unwrap();
    let reference = [
        [-0.04, 0.001, 0.079, 0.75],
        [-0.01, -0.016, 0.004, 0.85],
    ];
    let rates = [3.26, 1.6, 0.79, 0.13];
    for i in 0..2 {
        let terms = f.infimum.tails[i].real_terms();
        assert_eq!(terms.len(), 4);
        for (k, (coef, rate)) in terms.iter().enumerate() {
            assert!(close(*rate, rates[k], 0.01));
            assert!(close(*coef, reference[i][k], 0.01), "psi_{} term {k}: {coef}", i + 1);
        }
    }
    let psi2 = f.infimum.tails[1].real_terms();
    assert!(close(psi2[2].0, -0.003763171536298, 1e-10));
}

#[test]
fn ruin_at_zero_values() {
    let f = factorize(&reference_model()).unwrap();
    assert!(close(f.psi(0, 0.0), 0.791683815394, 1e-10));
    assert!(close(f.psi(1, 0.0), 0.819404430747, 1e-10));
    assert!(close(f.psi(0, 0.0), 0.79, 0.005) && close(f.psi(1, 0.0), 0.82, 0.005));
    assert!(f.psi(0, 1.0) < f.psi(0, 0.5));
}

#[test]
fn lundberg_certificate_values() {
    let m = reference_model();
    let cert = lundberg_certificate(&m).unwrap();
    assert!(close(cert.gamma, 0.133485, 1e-4));
    let f = factorize(&m).unwrap();
    assert!(close(cert.gamma, -f.poles[3].re, 1e-10));
    let c = [
        cert.c_minus * cert.h[0],
        cert.c_plus * cert.h[0],
        cert.c_minus * cert.h[1],
        cert.c_plus * cert.h[1],
    ];
    for (x, e) in c.iter().zip([0.665, 0.935, 0.757, 1.064]) {
        assert!(close(*x, e, 0.01), "{x} vs {e}");
    }
    for u in 0..=20 {
        for i in 0..2 {
            let (lb, ub) = lundberg_bounds(&cert, i, u as f64);
            let psi = f.psi(i, u as f64);
            assert!(lb <= psi + 1e-12 && psi <= ub + 1e-12, "u = {u}, state {i}");
        }
    }
}

#[test]
fn perron_root_slope_is_drift() {
    let m = reference_model();
    assert!(perron_root(&m, 0.0).unwrap().abs() < 1e-14);
    let h = 1e-5;
    let slope = (perron_root(&m, h).unwrap() - perron_root(&m, -h).unwrap()) / (2.0 * h);
    assert!(close(slope, -1.0, 1e-8));
}

// Independent oracle: E[e^{rJ}] by quadrature of the Erlang densities.
#[test]
fn cumulant_against_quadrature() {
    let m = reference_model();
    let r = 0.1;
    let mgf = |shape: i32, delta: f64| {
        let n = 200_000;
        let top = 200.0 / delta;
        let h = top / n as f64;
        let f = |x: f64| delta.powi(shape) * x.powi(shape - 1) * (-delta * x).exp() / 1.0 * (r * x).exp();
        let mut s = f(0.0) + f(top);
        for k in 1..n {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let neg = |c: f64| c / (c + r);
    let expect = Mat::from_row_slice(
        2,
        2,
        &[
            -1.0 + (mgf(2, 2.0) - 1.0) + (neg(1.0 / 3.0) - 1.0),
            1.0,
            1.0,
            -1.0 + (mgf(2, 1.0) - 1.0) + (neg(0.5) - 1.0),
        ],
    );
    assert!((cumulant_matrix(&m, r).unwrap() - expect).amax() < 1e-9);
}

#[test]
fn occupation_before_first_jump() {
    let p = p0_limit(&reference_model()).unwrap();
    assert!((p - Mat::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]) / 8.0).amax() < 1e-15);
}

#[test]
fn depth_exponent_spectrum() {
    let xi = overshoot::xi_bar_limit(&reference_model()).unwrap();
    assert_eq!(xi.spectrum[0].norm(), 0.0);
    assert!(close(xi.spectrum[1].re, 0.30224, 1e-5));
    for i in 0..2 {
        assert!(close(xi.h.row(i).sum(), 1.0, 1e-14));
    }
}

// Two-decimal reference closed forms of the tail matrices.
fn reference(kind: OvershootKind, z: f64) -> Mat {
    let e = |r: f64| (-r * z).exp();
    let v = match kind {
        OvershootKind::GammaPlus => [
            e(2.0) * (0.48 + 0.86 * z),
            e(1.0) * (0.31 + 0.22 * z),
            e(2.0) * (0.21 + 0.34 * z),
            e(1.0) * (0.61 + 0.49 * z),
        ],
        OvershootKind::GammaUnder => [
            0.1 * e(2.0) * (1.0 + z) + e(2.3) * (0.0016 + 0.002 * z),
            e(1.0) * (0.2 + 0.1 * z) - e(1.3) * (0.02 + 0.013 * z),
            0.09 * e(2.0) * (1.0 + z) - e(2.3) * (0.004 + 0.004 * z),
            e(1.0) * (0.18 + 0.09 * z) + e(1.3) * (0.05 + 0.03 * z),
        ],
        OvershootKind::GammaTotal => [
            e(2.0) * (0.49 + 0.97 * z + 0.2 * z * z) - e(2.3) * (0.005 + 0.01 * z),
            e(1.0) * (0.3 * (1.0 + z) + 0.1 * z * z) + e(1.3) * (0.03 + 0.04 * z),
            e(2.0) * (0.2 + 0.4 * z + 0.18 * z * z) + e(2.3) * (0.01 + 0.03 * z),
            e(1.0) * (0.7 * (1.0 + z) + 0.09 * z * z) - e(1.3) * (0.075 + 0.1 * z),
        ],
    };
    Mat::from_row_slice(2, 2, &v)
}

#[test]
fn overshoot_and_undershoot_match_reference_forms() {
    let tails = overshoot::overshoot_tails(&reference_model()).unwrap();
    for kind in [OvershootKind::GammaPlus, OvershootKind::GammaUnder] {
        for z in [0.0, 0.5, 1.0, 2.0] {
            let got = tails.get(kind).value(z);
            let want = reference(kind, z);
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() <= f64::max(0.01, 0.05 * w.abs()), "{kind:?} z={z}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn total_overjump_frozen_values() {
    let t = overshoot::overshoot_tails(&reference_model()).unwrap();
    let g0 = t.total.value(0.0);
    let g5 = t.total.value(0.5);
    // Must equal the overshoot matrix at zero: every passage has a positive jump.
    assert!((&g0 - t.plus.value(0.0)).amax() < 1e-12);
    assert!(close(g0[(0, 1)], 0.310947658230, 1e-10));
    assert!(close(g5[(0, 1)], 0.297123928063, 1e-10));
    assert!(close(g5[(1, 1)], 0.570316375587, 1e-10));
    // Entry (1,2) of the reference total-overjump form disagrees with the
    // overshoot form at z = 0 and is covered by the frozen values above.
    for z in [0.0, 0.5, 1.0, 2.0] {
        let got = t.total.value(z);
        let want = reference(OvershootKind::GammaTotal, z);
        for (idx, (g, w)) in got.iter().zip(want.iter()).enumerate() {
            if idx != 2 {
                // column-major index 2 is entry (1,2)
                assert!((g - w).abs() <= f64::max(0.01, 0.05 * w.abs()), "z={z}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn overshoot_decay_rates() {
    let t = overshoot::overshoot_tails(&reference_model()).unwrap();
    let rates = t.under.real_rates();
    for want in [1.0, 1.30224, 2.0, 2.30224] {
        assert!(rates.iter().any(|r| close(*r, want, 1e-5)), "{rates:?}");
    }
}

#[test]
fn ladder_mass_is_passage_probability() {
    let m = reference_model();
    let g = overshoot::ladder_measure(&m).unwrap();
    let f = factorize(&m).unwrap();
    for i in 0..2 {
        assert!(close(g.norm.row(i).sum(), f.psi(i, 0.0), 1e-9));
    }
    assert!(close(g.norm.row(0).sum(), 0.48 + 0.31, 0.005));
    assert!(close(g.norm.row(1).sum(), 0.21 + 0.61, 0.005));
    // the density integrates to the mass
    let n = 40_000;
    let h = 40.0 / n as f64;
    let mut s = g.density.value(0.0) + g.density.value(40.0);
    for k in 1..n {
        s += g.density.value(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    assert!((s * h / 3.0 - &g.norm).amax() < 1e-8);
}

#[test]
fn renewal_series_matches_closed_form() {
    let m = reference_model();
    let f = factorize(&m).unwrap();
    let g = overshoot::ladder_measure(&m).unwrap();
    for u in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let pk = overshoot::pk_series_from(&g, u, 1e-6).unwrap();
        for i in 0..2 {
            assert!(close(pk[i], f.psi(i, u), 1e-4), "u={u}: {} vs {}", pk[i], f.psi(i, u));
        }
    }
}
