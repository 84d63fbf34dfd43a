#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sensornet::coverage::assign_voronoi;
use sensornet::geometry::{attach_density, build_grid};
use sensornet::{
    ConstraintSpec, Domain, EdgeWeightParams, GaussianMixtureDensity, Problem, QuadratureGrid,
    Regularizer, SensorConfiguration, UncertaintyFunction,
};

pub const FD_STEP: f64 = 1e-5;

pub fn edges() -> EdgeWeightParams {
    EdgeWeightParams::new(20.0, 0.1).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform positions in `[margin, 1 - margin]^2`.
pub fn random_config(rng: &mut ChaCha8Rng, n: usize, margin: f64) -> SensorConfiguration {
    let coords = (0..2 * n)
        .map(|_| margin + (1.0 - 2.0 * margin) * rng.random::<f64>())
        .collect();
    SensorConfiguration::new(n, 2, coords).unwrap()
}

/// Positions in a box of side `side` placed uniformly inside the unit square.
pub fn clustered_config(rng: &mut ChaCha8Rng, n: usize, side: f64) -> SensorConfiguration {
    let ox = (1.0 - side) * rng.random::<f64>();
    let oy = (1.0 - side) * rng.random::<f64>();
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        coords.push(ox + side * rng.random::<f64>());
        coords.push(oy + side * rng.random::<f64>());
    }
    SensorConfiguration::new(n, 2, coords).unwrap()
}

pub fn single_gaussian() -> GaussianMixtureDensity {
    GaussianMixtureDensity::unimodal(vec![0.5, 0.5], 0.2).unwrap()
}

pub fn grid_with(density: &GaussianMixtureDensity, resolution: usize) -> QuadratureGrid {
    let grid = build_grid(&Domain::unit_square(), resolution).unwrap();
    attach_density(&grid, density).unwrap()
}

pub fn problem(spec: ConstraintSpec, resolution: usize) -> Problem {
    Problem::new(
        grid_with(&single_gaussian(), resolution),
        UncertaintyFunction::Quadratic,
        edges(),
        spec,
        Regularizer::none(2),
    )
    .unwrap()
}

/// Central differences of `f` at `x` along every coordinate.
pub fn central_diff<F>(x: &SensorConfiguration, h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&SensorConfiguration) -> f64,
{
    let base = x.as_slice().to_vec();
    (0..base.len())
        .map(|c| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[c] += h;
            minus[c] -= h;
            let fp = f(&x.with_coords(plus).unwrap());
            let fm = f(&x.with_coords(minus).unwrap());
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `|a - b|_2 / |b|_2`, with `b` the reference.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    let scale = norm(b);
    if scale == 0.0 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

/// Whether every coordinate perturbation by `h` keeps the nearest-sensor assignment.
pub fn ownership_stable(x: &SensorConfiguration, grid: &QuadratureGrid, h: f64) -> bool {
    let base = assign_voronoi(grid, x);
    let coords = x.as_slice().to_vec();
    (0..coords.len()).all(|c| {
        [h, -h].iter().all(|s| {
            let mut moved = coords.clone();
            moved[c] += s;
            assign_voronoi(grid, &x.with_coords(moved).unwrap()) == base
        })
    })
}

/// The 20 seeded oracle configurations, alternating `n = 3` and `n = 5`, skipping
/// seeds whose Voronoi assignment is not stable under the finite-difference step.
pub fn oracle_configs(grid: &QuadratureGrid) -> Vec<SensorConfiguration> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 20 {
        let n = if out.len() % 2 == 0 { 3 } else { 5 };
        let mut r = rng(1000 + seed);
        seed += 1;
        // Spread between connected clusters and scattered layouts.
        let side = [0.15, 0.3, 0.6, 1.0][(seed % 4) as usize];
        let x = clustered_config(&mut r, n, side);
        if ownership_stable(&x, grid, FD_STEP) {
            out.push(x);
        }
    }
    out
}
