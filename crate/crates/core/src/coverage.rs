//! Expected-value multicenter objective `H(x) = int_Q min_i f(|q - x_i|) phi(q) dq`
//! and its gradient, both evaluated on the quadrature grid with the same
//! nearest-sensor assignment.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{QuadratureGrid, SensorConfiguration};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Below this radius `f'(r)/r` is replaced by its limit.
const H_SERIES_RADIUS: f64 = 1e-12;

/// Measurement uncertainty as a function of distance to the sensor.
#[derive(Clone, Default)]
pub enum UncertaintyFunction {
    /// `f(r) = r^2 / 2`.
    #[default]
    Quadratic,
    /// User supplied `f`, `f'` and `f''(0)`; `f` must be increasing with `f'(0) = 0`
    /// so that `f'(r)/r` has a finite limit.
    Custom {
        f: ScalarFn,
        f_prime: ScalarFn,
        f_second_at_zero: f64,
    },
}

impl fmt::Debug for UncertaintyFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(fm, "Quadratic"),
            Self::Custom {
                f_second_at_zero, ..
            } => {
                write!(fm, "Custom {{ f_second_at_zero: {f_second_at_zero} }}")
            }
        }
    }
}

impl UncertaintyFunction {
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_second_at_zero: f64,
    ) -> Self {
        Self::Custom {
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            f_second_at_zero,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            Self::Quadratic => 0.5 * r * r,
            Self::Custom { f, .. } => f(r),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Self::Quadratic => r,
            Self::Custom { f_prime, .. } => f_prime(r),
        }
    }

    /// `h(r) = f'(r) / r`, continuous at zero.
    pub fn h(&self, r: f64) -> f64 {
        match self {
            Self::Quadratic => 1.0,
            Self::Custom {
                f_prime,
                f_second_at_zero,
                ..
            } => {
                if r < H_SERIES_RADIUS {
                    *f_second_at_zero
                } else {
                    f_prime(r) / r
                }
            }
        }
    }
}

/// Value, gradient and Voronoi labels from one pass over the grid.
#[derive(Debug, Clone)]
pub struct CoverageEvaluation {
    pub value: f64,
    /// Stacked `[dH/dx_1; ...; dH/dx_n]`.
    pub gradient: Vec<f64>,
    pub ownership: Vec<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn nearest(q: &[f64], x: &SensorConfiguration) -> usize {
    let mut best = 0;
    let mut best_d = sq_dist(q, x.position(0));
    for i in 1..x.n() {
        let d = sq_dist(q, x.position(i));
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Nearest sensor for every grid point; ties go to the lowest index.
pub fn assign_voronoi(grid: &QuadratureGrid, x: &SensorConfiguration) -> Vec<usize> {
    grid.points().map(|q| nearest(q, x)).collect()
}

fn require_density(grid: &QuadratureGrid) -> Result<()> {
    if grid.has_density() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "quadrature grid has no density attached".into(),
        ))
    }
}

fn check_dims(grid: &QuadratureGrid, x: &SensorConfiguration) -> Result<()> {
    if grid.dim() != x.d() {
        return Err(Error::InvalidArgument(format!(
            "sensor dimension {} does not match domain dimension {}",
            x.d(),
            grid.dim()
        )));
    }
    Ok(())
}

pub fn coverage_value(
    x: &SensorConfiguration,
    grid: &QuadratureGrid,
    f: &UncertaintyFunction,
) -> Result<f64> {
    require_density(grid)?;
    check_dims(grid, x)?;
    let sum: f64 = grid
        .points()
        .zip(grid.density_values())
        .map(|(q, phi)| {
            let i = nearest(q, x);
            f.value(sq_dist(q, x.position(i)).sqrt()) * phi
        })
        .sum();
    Ok(sum * grid.cell_weight())
}

pub fn coverage_gradient(
    x: &SensorConfiguration,
    grid: &QuadratureGrid,
    f: &UncertaintyFunction,
) -> Result<Vec<f64>> {
    evaluate_coverage(x, grid, f).map(|e| e.gradient)
}

/// Value and gradient of `H` sharing one Voronoi assignment, so the gradient is
/// exact for the discretized objective wherever no grid point changes owner.
pub fn evaluate_coverage(
    x: &SensorConfiguration,
    grid: &QuadratureGrid,
    f: &UncertaintyFunction,
) -> Result<CoverageEvaluation> {
    require_density(grid)?;
    check_dims(grid, x)?;
    if let Some((i, j)) = x.coincident_pair() {
        return Err(Error::SingularConfiguration(i, j));
    }
    let d = x.d();
    let mut value = 0.0;
    let mut gradient = vec![0.0; x.n() * d];
    let mut ownership = Vec::with_capacity(grid.len());
    for (q, phi) in grid.points().zip(grid.density_values()) {
        let i = nearest(q, x);
        ownership.push(i);
        let xi = x.position(i);
        let r = sq_dist(q, xi).sqrt();
        value += f.value(r) * phi;
        let scale = f.h(r) * phi;
        for k in 0..d {
            gradient[i * d + k] += scale * (xi[k] - q[k]);
        }
    }
    let w = grid.cell_weight();
    value *= w;
    gradient.iter_mut().for_each(|g| *g *= w);
    Ok(CoverageEvaluation {
        value,
        gradient,
        ownership,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{attach_density, build_grid, Domain, GaussianMixtureDensity};
    use approx::assert_abs_diff_eq;

    fn uniform_grid(res: usize) -> QuadratureGrid {
        let g = build_grid(&Domain::unit_square(), res).unwrap();
        attach_density(&g, &GaussianMixtureDensity::uniform(2)).unwrap()
    }

    fn single(p: [f64; 2]) -> SensorConfiguration {
        SensorConfiguration::new(1, 2, p.to_vec()).unwrap()
    }

    #[test]
    fn one_sensor_owns_everything() {
        let g = uniform_grid(10);
        assert!(assign_voronoi(&g, &single([0.3, 0.9]))
            .iter()
            .all(|&o| o == 0));
    }

    #[test]
    fn bisector_split_with_low_index_ties() {
        // even resolution puts no grid point on x = 0.5; odd resolution does
        for res in [10, 11] {
            let g = uniform_grid(res);
            let x = SensorConfiguration::new(2, 2, vec![0.25, 0.5, 0.75, 0.5]).unwrap();
            let own = assign_voronoi(&g, &x);
            for (q, o) in g.points().zip(&own) {
                let expected = usize::from(q[0] > 0.5);
                assert_eq!(*o, expected, "q={q:?}");
            }
        }
    }

    #[test]
    fn centred_sensor_value() {
        let g = uniform_grid(100);
        let h = coverage_value(&single([0.5, 0.5]), &g, &UncertaintyFunction::Quadratic).unwrap();
        assert_abs_diff_eq!(h, 1.0 / 12.0, epsilon = 2e-4);
    }

    #[test]
    fn corner_sensor_value() {
        let g = uniform_grid(100);
        let h = coverage_value(&single([0.0, 0.0]), &g, &UncertaintyFunction::Quadratic).unwrap();
        assert_abs_diff_eq!(h, 1.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn centred_sensor_gradient_vanishes() {
        let g = uniform_grid(100);
        let grad =
            coverage_gradient(&single([0.5, 0.5]), &g, &UncertaintyFunction::Quadratic).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-10), "{grad:?}");
    }

    #[test]
    fn single_sensor_gradient_points_from_centroid() {
        let g = uniform_grid(100);
        let grad =
            coverage_gradient(&single([0.2, 0.7]), &g, &UncertaintyFunction::Quadratic).unwrap();
        assert_abs_diff_eq!(grad[0], 0.2 - 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(grad[1], 0.7 - 0.5, epsilon = 1e-3);
    }

    #[test]
    fn custom_quadratic_matches_builtin() {
        let g = uniform_grid(40);
        let f = UncertaintyFunction::custom(|r| 0.5 * r * r, |r| r, 1.0);
        let x = SensorConfiguration::new(2, 2, vec![0.2, 0.3, 0.7, 0.6]).unwrap();
        let a = evaluate_coverage(&x, &g, &f).unwrap();
        let b = evaluate_coverage(&x, &g, &UncertaintyFunction::Quadratic).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-15);
        for (u, v) in a.gradient.iter().zip(&b.gradient) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn missing_density_and_coincidence_are_errors() {
        let bare = build_grid(&Domain::unit_square(), 4).unwrap();
        assert!(
            coverage_value(&single([0.5, 0.5]), &bare, &UncertaintyFunction::Quadratic).is_err()
        );
        let g = uniform_grid(4);
        let x = SensorConfiguration::new(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(coverage_value(&x, &g, &UncertaintyFunction::Quadratic).is_ok());
        assert!(matches!(
            coverage_gradient(&x, &g, &UncertaintyFunction::Quadratic),
            Err(Error::SingularConfiguration(0, 1))
        ));
    }
}
