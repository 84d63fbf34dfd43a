//! Deployment domain, event-likelihood densities and the quadrature grid
//! used for every coverage integral.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Axis-aligned box `[lo, hi]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidArgument(format!(
                "domain corners must be nonempty and of equal length (got {} and {})",
                lo.len(),
                hi.len()
            )));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidArgument(format!(
                    "domain axis {k} must satisfy lo < hi (got [{a}, {b}])"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn unit_square() -> Self {
        Self {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Closest point of the box to `p`.
    pub fn clip(&self, p: &mut [f64]) {
        for (v, (a, b)) in p.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*a, *b);
        }
    }
}

/// `n` stacked `d`-dimensional sensor positions, stored row-major so that the
/// flat coordinate vector is the decision vector `x = [x_1; ...; x_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfiguration {
    n: usize,
    d: usize,
    coords: Vec<f64>,
}

impl SensorConfiguration {
    pub fn new(n: usize, d: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "configuration needs n >= 1 and d >= 1 (got n={n}, d={d})"
            )));
        }
        if coords.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates for n={n}, d={d}, got {}",
                n * d,
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {bad} is not finite"
            )));
        }
        Ok(Self { n, d, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidArgument(
                "all positions must share one dimension".into(),
            ));
        }
        Self::new(points.len(), d, points.concat())
    }

    /// Draws `n` positions uniformly over `domain`.
    pub fn random<R: Rng + ?Sized>(domain: &Domain, n: usize, rng: &mut R) -> Result<Self> {
        let d = domain.dim();
        let mut coords = Vec::with_capacity(n * d);
        for _ in 0..n {
            for k in 0..d {
                let u: f64 = rng.random();
                coords.push(domain.lo[k] + u * (domain.hi[k] - domain.lo[k]));
            }
        }
        Self::new(n, d, coords)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.coords.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    /// Same shape, new coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.d, coords)
    }

    /// First pair `(i, j)`, `i < j`, of exactly coincident sensors.
    pub fn coincident_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.position(i) == self.position(j) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.position(i), self.position(j))
    }
}

impl Serialize for SensorConfiguration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_points().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SensorConfiguration {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<Vec<f64>>::deserialize(de)?;
        Self::from_points(&points).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Componentwise clip of every sensor into the domain (Euclidean projection onto `Q^n`).
pub fn project_to_domain(x: &SensorConfiguration, domain: &Domain) -> SensorConfiguration {
    let mut out = x.clone();
    for p in out.coords.chunks_mut(x.d) {
        domain.clip(p);
    }
    out
}

/// One isotropic Gaussian bump of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub sigma: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

/// `phi(q) = gamma * sum_c weight_c / (sigma_c sqrt(2 pi)) * exp(-|q - mean_c|^2 / (2 sigma_c^2))`.
///
/// `gamma` is fixed by [`attach_density`] so the density integrates to one on
/// the grid; a freshly built mixture carries `gamma = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureDensity {
    pub components: Vec<GaussianComponent>,
    #[serde(default = "one")]
    pub gamma: f64,
}

impl GaussianMixtureDensity {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "mixture needs at least one component".into(),
            ));
        }
        for (c, comp) in components.iter().enumerate() {
            if !(comp.sigma > 0.0 && comp.sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "component {c}: sigma must be positive"
                )));
            }
            if !(comp.weight > 0.0 && comp.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "component {c}: weight must be positive"
                )));
            }
            if comp.mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "component {c}: mean must be finite"
                )));
            }
        }
        Ok(Self {
            components,
            gamma: 1.0,
        })
    }

    /// Single bump, as used for the unimodal deployment scenario.
    pub fn unimodal(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::new(vec![GaussianComponent {
            mean,
            sigma,
            weight: 1.0,
        }])
    }

    /// Effectively constant density: one component with a huge spread.
    pub fn uniform(d: usize) -> Self {
        Self {
            components: vec![GaussianComponent {
                mean: vec![0.0; d],
                sigma: 1e9,
                weight: 1.0,
            }],
            gamma: 1.0,
        }
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let sum: f64 = self
            .components
            .iter()
            .map(|c| {
                let r2: f64 = q.iter().zip(&c.mean).map(|(a, b)| (a - b) * (a - b)).sum();
                c.weight / (c.sigma * norm) * (-r2 / (2.0 * c.sigma * c.sigma)).exp()
            })
            .sum();
        self.gamma * sum
    }
}

/// Midpoint-rule grid over a [`Domain`].
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    domain: Domain,
    resolution: usize,
    points: Vec<f64>,
    cell_weight: f64,
    density_values: Vec<f64>,
    density: Option<GaussianMixtureDensity>,
}

impl QuadratureGrid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, p: usize) -> &[f64] {
        let d = self.dim();
        &self.points[p * d..(p + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim())
    }

    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    /// Cached normalized density at each point; empty until a density is attached.
    pub fn density_values(&self) -> &[f64] {
        &self.density_values
    }

    pub fn has_density(&self) -> bool {
        !self.density_values.is_empty()
    }

    /// The attached density with its normalizing constant filled in.
    pub fn density(&self) -> Option<&GaussianMixtureDensity> {
        self.density.as_ref()
    }

    /// Quadrature of `f(q) * phi(q)` over the domain.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points()
            .zip(&self.density_values)
            .map(|(q, phi)| f(q) * phi)
            .sum::<f64>()
            * self.cell_weight
    }
}

/// Midpoint grid with `resolution` cells per axis, first axis slowest.
pub fn build_grid(domain: &Domain, resolution: usize) -> Result<QuadratureGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 2 (got {resolution})"
        )));
    }
    let d = domain.dim();
    let count = resolution
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
    let steps: Vec<f64> = (0..d)
        .map(|k| (domain.hi[k] - domain.lo[k]) / resolution as f64)
        .collect();
    let mut points = Vec::with_capacity(count * d);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        for k in 0..d {
            points.push(domain.lo[k] + (idx[k] as f64 + 0.5) * steps[k]);
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(QuadratureGrid {
        domain: domain.clone(),
        resolution,
        points,
        cell_weight: steps.iter().product(),
        density_values: Vec::new(),
        density: None,
    })
}

/// Evaluates `density` on the grid and rescales it so that its quadrature sum is one.
pub fn attach_density(
    grid: &QuadratureGrid,
    density: &GaussianMixtureDensity,
) -> Result<QuadratureGrid> {
    if density.components.is_empty() {
        return Err(Error::InvalidArgument(
            "mixture needs at least one component".into(),
        ));
    }
    if density
        .components
        .iter()
        .any(|c| c.mean.len() != grid.dim())
    {
        return Err(Error::InvalidArgument(format!(
            "component means must have dimension {}",
            grid.dim()
        )));
    }
    let raw = GaussianMixtureDensity {
        components: density.components.clone(),
        gamma: 1.0,
    };
    let values: Vec<f64> = grid.points().map(|q| raw.eval(q)).collect();
    let mass: f64 = values.iter().sum::<f64>() * grid.cell_weight;
    if !(mass > 0.0 && mass.is_finite()) || values.iter().any(|v| *v <= 0.0) {
        return Err(Error::DegenerateDensity(format!(
            "mixture mass on the domain is {mass:e}"
        )));
    }
    let gamma = 1.0 / mass;
    let mut out = grid.clone();
    out.density_values = values.into_iter().map(|v| v * gamma).collect();
    out.density = Some(GaussianMixtureDensity {
        components: density.components.clone(),
        gamma,
    });
    Ok(out)
}
