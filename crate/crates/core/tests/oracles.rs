mod common;

use common::*;
use sensornet::connectivity::{det_m, grad_det_m, grad_det_m_by_trace, sigmoid};
use sensornet::constraints::{constraint_jacobian, eval_constraints};
use sensornet::coverage::{coverage_gradient, coverage_value};
use sensornet::solver::{grad_x_ppal, ppal_value, ppal_value_regularized};
use sensornet::{
    ConstraintSpec, GaussianComponent, GaussianMixtureDensity, Regularizer, SensorConfiguration,
    SolverParams, SolverState, UncertaintyFunction,
};

use rand::Rng;

#[test]
fn det_gradient_matches_central_differences() {
    let grid = grid_with(&single_gaussian(), 100);
    let p = edges();
    for x in oracle_configs(&grid) {
        let an = grad_det_m(&x, &p).unwrap();
        let fd = central_diff(&x, FD_STEP, |y| det_m(y, &p));
        let e = rel_err(&an, &fd);
        assert!(
            e <= 1e-5,
            "n={} rel err {e:e} det {:e}",
            x.n(),
            det_m(&x, &p)
        );
    }
}

#[test]
fn det_gradient_routes_agree() {
    let p = edges();
    let mut r = rng(7);
    for n in 2..8 {
        for side in [0.1, 0.25, 0.5] {
            let x = clustered_config(&mut r, n, side);
            let adj = grad_det_m(&x, &p).unwrap();
            let tr = grad_det_m_by_trace(&x, &p).unwrap();
            assert!(rel_err(&adj, &tr) < 1e-9, "n={n} side={side}");
        }
    }
}

#[test]
fn coverage_gradient_matches_central_differences() {
    let grid = grid_with(&single_gaussian(), 100);
    let f = UncertaintyFunction::Quadratic;
    for x in oracle_configs(&grid) {
        let an = coverage_gradient(&x, &grid, &f).unwrap();
        let fd = central_diff(&x, FD_STEP, |y| coverage_value(y, &grid, &f).unwrap());
        assert!(rel_err(&an, &fd) <= 1e-4);
    }
}

#[test]
fn coverage_gradient_with_cubic_uncertainty() {
    let density = GaussianMixtureDensity::new(vec![
        GaussianComponent {
            mean: vec![0.2, 0.2],
            sigma: 0.2,
            weight: 1.0,
        },
        GaussianComponent {
            mean: vec![0.8, 0.8],
            sigma: 0.2,
            weight: 1.0,
        },
    ])
    .unwrap();
    let grid = grid_with(&density, 60);
    let f = UncertaintyFunction::custom(|r| r.powi(3) / 3.0, |r| r * r, 0.0);
    let mut r = rng(3);
    let mut checked = 0;
    while checked < 5 {
        let x = random_config(&mut r, 4, 0.05);
        if !ownership_stable(&x, &grid, FD_STEP) {
            continue;
        }
        let an = coverage_gradient(&x, &grid, &f).unwrap();
        let fd = central_diff(&x, FD_STEP, |y| coverage_value(y, &grid, &f).unwrap());
        assert!(rel_err(&an, &fd) <= 1e-6);
        checked += 1;
    }
}

#[test]
fn jacobian_rows_match_central_differences() {
    let p = edges();
    let spec = ConstraintSpec::with_min_distance(0.1, 0.05);
    let mut r = rng(11);
    for n in [3, 5] {
        for _ in 0..5 {
            let x = clustered_config(&mut r, n, 0.3);
            let jac = constraint_jacobian(&x, &p, &spec).unwrap();
            for row in 0..spec.count(n) {
                let fd = central_diff(&x, FD_STEP, |y| eval_constraints(y, &p, &spec).values[row]);
                let an: Vec<f64> = jac.row(row).iter().copied().collect();
                let tol = if row == 0 { 1e-5 } else { 1e-4 };
                assert!(rel_err(&an, &fd) <= tol, "row {row}");
            }
        }
    }
}

fn random_state(x: SensorConfiguration, m: usize, seed: u64) -> SolverState {
    let mut r = rng(seed);
    let mut draw = |lo: f64, hi: f64| -> Vec<f64> {
        (0..m).map(|_| lo + (hi - lo) * r.random::<f64>()).collect()
    };
    SolverState {
        u: draw(0.0, 1.0),
        z: draw(-0.5, 0.5),
        lambda: draw(0.0, 5.0),
        mu: draw(0.0, 5.0),
        x,
        t: 0,
    }
}

#[test]
fn ppal_gradient_matches_central_differences() {
    let params = SolverParams::default();
    for spec in [
        ConstraintSpec::connectivity_only(0.1),
        ConstraintSpec::with_min_distance(0.1, 0.05),
    ] {
        let prob = problem(spec, 100);
        for (k, x) in oracle_configs(&prob.grid).into_iter().enumerate() {
            let m = prob.num_constraints(x.n());
            let state = random_state(x.clone(), m, k as u64);
            let an = grad_x_ppal(&state, &prob, &params).unwrap();
            let fd = central_diff(&x, FD_STEP, |y| {
                let s = SolverState {
                    x: y.clone(),
                    ..state.clone()
                };
                ppal_value(&s, &prob, &params).unwrap()
            });
            assert!(rel_err(&an, &fd) <= 1e-4, "config {k}");
        }
    }
}

#[test]
fn regularized_value_adds_regularizer() {
    let mut prob = problem(ConstraintSpec::connectivity_only(0.1), 40);
    prob.regularizer = Regularizer::centroid_quadratic(0.02, prob.domain()).unwrap();
    let x = SensorConfiguration::new(2, 2, vec![0.0, 0.0, 0.5, 0.5]).unwrap();
    let state = random_state(x, 1, 5);
    let params = SolverParams::default();
    let plain = ppal_value(&state, &prob, &params).unwrap();
    let full = ppal_value_regularized(&state, &prob, &params).unwrap();
    assert!((full - plain - 0.01 / 2.0).abs() < 1e-15);
}

#[test]
fn two_sensor_determinant_closed_form() {
    let p = edges();
    for k in 0..100 {
        let d = 0.005 + 0.3 * k as f64 / 99.0;
        let x = SensorConfiguration::new(2, 2, vec![0.3, 0.4, 0.3 + d, 0.4]).unwrap();
        let expected = 2.0 * sigmoid(p.w * (p.epsilon - d));
        assert!((det_m(&x, &p) - expected).abs() <= 1e-12);
    }
}

#[test]
fn single_sensor_coverage_at_centroid() {
    let grid = grid_with(&GaussianMixtureDensity::uniform(2), 100);
    let x = SensorConfiguration::new(1, 2, vec![0.5, 0.5]).unwrap();
    let h = coverage_value(&x, &grid, &UncertaintyFunction::Quadratic).unwrap();
    assert!((h - 1.0 / 12.0).abs() <= 2e-4);
    let g = coverage_gradient(&x, &grid, &UncertaintyFunction::Quadratic).unwrap();
    assert!(norm(&g) < 1e-12);
}

#[test]
fn threshold_distance_matches_weight() {
    let p = edges();
    for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let d = p.threshold_distance(t).unwrap();
        assert!((p.weight(d) - t).abs() < 1e-12);
    }
    assert_eq!(p.threshold_distance(0.5).unwrap(), p.epsilon);
}
