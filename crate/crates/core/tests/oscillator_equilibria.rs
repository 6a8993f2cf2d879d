//! Reduced stationary points of the perturbed oscillator at beta = 1 on the
//! (H2, Xi, L1) = (1, 0, 0) level, validated against a dense tangency oracle
//! over the quartic surface (1 - K^2)^2 = 4 N^2 + 4 S^2 in (N, K, S).
//!
//! At beta = 1 the level Hamiltonian is 11/4 + (3/4) K^2 + (3/2) N, and the
//! critical set is degenerate: the global maximum is attained along the whole
//! curve {S = 0, 2N = 1 - K^2} (value 7/2, the cone points K = ±1 included)
//! while the global minimum is the isolated point (N, K, S) = (-1/2, 0, 0)
//! (value 2).

use num_rational::BigRational;
use symred_core::catalog::{catalog_model, oscillator_hamiltonian, Params};
use symred_core::poly::Polynomial;
use symred_core::releq::{self, SolverOptions};
use symred_core::semialg;

fn q(n: i64, d: i64) -> BigRational {
    Polynomial::rational(n, d)
}

#[test]
fn oscillator_reduced_stationary_points() {
    let m = catalog_model("oscillator_r8", &Params::new()).unwrap();
    let h = oscillator_hamiltonian(&q(1, 1));
    let rs = semialg::reduced_space(&m, &[q(1, 1), q(0, 1), q(0, 1)], 3).unwrap();
    let opts = SolverOptions {
        seeds: 96,
        tol: 1e-9,
        seed: 3,
        ..Default::default()
    };
    let outcome = releq::find_reduced_stationary(&m, &h, &rs, &opts).unwrap();
    assert!(!outcome.results.is_empty(), "notes: {:?}", outcome.notes);

    // Invariant order: (H2, Xi, L1, N, K, S).
    let on_level = |v: &[f64]| {
        (v[0] - 1.0).abs() <= 1e-7 && v[1].abs() <= 1e-7 && v[2].abs() <= 1e-7
    };
    let on_surface = |v: &[f64]| {
        let lhs = (1.0 - v[4] * v[4]).powi(2);
        let rhs = 4.0 * v[3] * v[3] + 4.0 * v[5] * v[5];
        (lhs - rhs).abs() <= 1e-6
    };
    let on_max_curve = |v: &[f64]| {
        v[5].abs() <= 1e-6 && (2.0 * v[3] - (1.0 - v[4] * v[4])).abs() <= 1e-6
    };
    let is_min_point = |v: &[f64]| {
        (v[3] + 0.5).abs() <= 1e-6 && v[4].abs() <= 1e-6 && v[5].abs() <= 1e-6
    };
    let mut found_min = false;
    let mut found_curve = false;
    for res in &outcome.results {
        let v = &res.point;
        assert!(on_level(v), "off the momentum level: {v:?}");
        assert!(on_surface(v), "off the quartic surface: {v:?}");
        assert!(
            on_max_curve(v) || is_min_point(v),
            "stationary point off the critical set: {v:?}"
        );
        found_min |= is_min_point(v);
        found_curve |= on_max_curve(v);
    }
    assert!(found_min, "isolated minimum (N,K,S) = (-1/2, 0, 0) not found");
    assert!(found_curve, "degenerate maximum curve not sampled");

    // Dense grid oracle over the surface: parametrise by (K, phi) with
    // N = r cos(phi), S = r sin(phi), r = (1 - K^2)/2, and extremise the
    // level Hamiltonian 11/4 + (3/4) K^2 + (3/2) N.
    let h_at = |k: f64, n: f64| 11.0 / 4.0 + 0.75 * k * k + 1.5 * n;
    let mut grid_min = (f64::INFINITY, 0.0, 0.0);
    let mut grid_max = (f64::NEG_INFINITY, 0.0, 0.0);
    let steps = 400;
    for ki in 0..=steps {
        let k = -1.0 + 2.0 * ki as f64 / steps as f64;
        let r = (1.0 - k * k) / 2.0;
        for pi in 0..steps {
            let phi = std::f64::consts::TAU * pi as f64 / steps as f64;
            let n = r * phi.cos();
            let val = h_at(k, n);
            if val < grid_min.0 {
                grid_min = (val, k, n);
            }
            if val > grid_max.0 {
                grid_max = (val, k, n);
            }
        }
    }
    // Minimum 2 at (K, N) = (0, -1/2); maximum 7/2 along the curve N = r.
    assert!((grid_min.0 - 2.0).abs() <= 1e-4, "{grid_min:?}");
    assert!(grid_min.1.abs() <= 1e-6 && (grid_min.2 + 0.5).abs() <= 1e-4);
    assert!((grid_max.0 - 3.5).abs() <= 1e-4, "{grid_max:?}");

    // Every solver value sits at one of the two oracle extremes.
    let h_c = h.compile();
    for res in &outcome.results {
        let val = h_c.eval(&res.point);
        assert!(
            (val - 2.0).abs() <= 1e-6 || (val - 3.5).abs() <= 1e-6,
            "stationary value {val} is not an oracle extreme"
        );
    }
}

#[test]
fn oscillator_field_casimir_rows_vanish() {
    // The momentum coordinates are Casimirs of the induced structure, so the
    // corresponding field components vanish identically for any Hamiltonian.
    let m = catalog_model("oscillator_r8", &Params::new()).unwrap();
    let h = oscillator_hamiltonian(&q(1, 2));
    let field = releq::reduced_field(&m, &h, 3).unwrap();
    for idx in 0..3 {
        assert!(field.components[idx].is_zero(), "component {idx} nonzero");
    }
    assert!(!field.is_identically_zero());
}
