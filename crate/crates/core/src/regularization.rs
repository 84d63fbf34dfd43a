//! Separable regularizers and the exact x-update of the proximal gradient scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, SensorConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    #[default]
    None,
    /// `(alpha / n) sum_i |x_i - c|^2`.
    CentroidQuadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub alpha: f64,
    pub centroid: Vec<f64>,
}

/// Extension point for other coordinate-separable regularizers.
///
/// Implementors must return the exact minimizer over the box of
/// `|x - x_t|^2 / (2 eta) + r(x) + <grad, x - x_t>`.
pub trait SeparableProx {
    fn value(&self, x: &SensorConfiguration) -> f64;
    fn gradient(&self, x: &SensorConfiguration) -> Vec<f64>;
    fn prox_step(
        &self,
        x_t: &SensorConfiguration,
        grad: &[f64],
        eta: f64,
        domain: &Domain,
    ) -> SensorConfiguration;
}

impl Regularizer {
    pub fn none(d: usize) -> Self {
        Self {
            kind: RegularizerKind::None,
            alpha: 0.0,
            centroid: vec![0.0; d],
        }
    }

    /// Pull towards the centroid of `domain` with strength `alpha`.
    pub fn centroid_quadratic(alpha: f64, domain: &Domain) -> Result<Self> {
        let r = Self {
            kind: RegularizerKind::CentroidQuadratic,
            alpha,
            centroid: domain.centroid(),
        };
        r.validate(domain)?;
        Ok(r)
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be a non-negative number"));
        }
        if !domain.contains(&self.centroid) {
            return Err(Error::config("centroid", "must lie inside the domain"));
        }
        Ok(())
    }

    /// Per-coordinate curvature `2 alpha / n` of the quadratic pull (0 when disabled).
    fn pull(&self, n: usize) -> f64 {
        match self.kind {
            RegularizerKind::None => 0.0,
            RegularizerKind::CentroidQuadratic => 2.0 * self.alpha / n as f64,
        }
    }
}

impl SeparableProx for Regularizer {
    fn value(&self, x: &SensorConfiguration) -> f64 {
        reg_value(x, self)
    }

    fn gradient(&self, x: &SensorConfiguration) -> Vec<f64> {
        let pull = self.pull(x.n());
        let d = x.d();
        x.as_slice()
            .iter()
            .enumerate()
            .map(|(c, v)| pull * (v - self.centroid[c % d]))
            .collect()
    }

    fn prox_step(
        &self,
        x_t: &SensorConfiguration,
        grad: &[f64],
        eta: f64,
        domain: &Domain,
    ) -> SensorConfiguration {
        let pull = self.pull(x_t.n());
        let d = x_t.d();
        let inv_eta = 1.0 / eta;
        let denom = inv_eta + pull;
        let coords = x_t
            .as_slice()
            .iter()
            .zip(grad)
            .enumerate()
            .map(|(c, (v, g))| {
                let k = c % d;
                let free = (v * inv_eta - g + pull * self.centroid[k]) / denom;
                free.clamp(domain.lo()[k], domain.hi()[k])
            })
            .collect();
        x_t.with_coords(coords).expect("shape preserved")
    }
}

pub fn reg_value(x: &SensorConfiguration, reg: &Regularizer) -> f64 {
    match reg.kind {
        RegularizerKind::None => 0.0,
        RegularizerKind::CentroidQuadratic => {
            let s: f64 = (0..x.n())
                .map(|i| {
                    x.position(i)
                        .iter()
                        .zip(&reg.centroid)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .sum();
            reg.alpha / x.n() as f64 * s
        }
    }
}

/// Exact minimizer over `Q^n` of `|x - x_t|^2 / (2 eta) + r(x) + <grad, x - x_t>`.
///
/// The model is separable and convex per coordinate, so clipping the unconstrained
/// minimizer to the box is exact.
pub fn model_minimize(
    x_t: &SensorConfiguration,
    grad: &[f64],
    eta: f64,
    reg: &Regularizer,
    domain: &Domain,
) -> Result<SensorConfiguration> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size eta must be positive (got {eta})"
        )));
    }
    if grad.len() != x_t.as_slice().len() {
        return Err(Error::InvalidArgument(
            "gradient has the wrong length".into(),
        ));
    }
    Ok(reg.prox_step(x_t, grad, eta, domain))
}

/// Value of the per-iteration model minimized by [`model_minimize`].
pub fn model_value(
    x: &SensorConfiguration,
    x_t: &SensorConfiguration,
    grad: &[f64],
    eta: f64,
    reg: &Regularizer,
) -> f64 {
    let mut quad = 0.0;
    let mut lin = 0.0;
    for ((a, b), g) in x.as_slice().iter().zip(x_t.as_slice()).zip(grad) {
        quad += (a - b) * (a - b);
        lin += g * (a - b);
    }
    quad / (2.0 * eta) + reg_value(x, reg) + lin
}
