//! Stacked inequality constraints `g_bar(x) <= 0`: the connectivity constraint
//! `tau - det(P^T L(x) P)` in slot 0, followed by the optional pairwise
//! minimum-distance constraints `delta - |x_i - x_j|` in lexicographic order.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem as LinearProgram};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::connectivity::{self, EdgeWeightParams};
use crate::error::{Error, Result};
use crate::geometry::SensorConfiguration;

pub const DEFAULT_MIN_DISTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    /// Connectivity threshold; negative values leave the constraint slack wherever `det M >= 0`.
    pub tau: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub min_distance_enabled: bool,
}

fn default_delta() -> f64 {
    DEFAULT_MIN_DISTANCE
}

impl ConstraintSpec {
    pub fn connectivity_only(tau: f64) -> Self {
        Self {
            tau,
            delta: DEFAULT_MIN_DISTANCE,
            min_distance_enabled: false,
        }
    }

    pub fn with_min_distance(tau: f64, delta: f64) -> Self {
        Self {
            tau,
            delta,
            min_distance_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() {
            return Err(Error::config("tau", "must be finite"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", "must be a non-negative number"));
        }
        if self.min_distance_enabled && self.delta <= 0.0 {
            return Err(Error::config(
                "delta",
                "must be positive when min_distance_enabled = true",
            ));
        }
        Ok(())
    }

    /// `m = 1 + n(n-1)/2` with pair constraints, otherwise 1.
    pub fn count(&self, n: usize) -> usize {
        if self.min_distance_enabled {
            1 + n * (n - 1) / 2
        } else {
            1
        }
    }

    /// Default MFCQ activation tolerance, `1e-6 * max(1, |tau|)`.
    pub fn activation_tol(&self) -> f64 {
        1e-6 * self.tau.abs().max(1.0)
    }
}

/// Sensor pairs in constraint order, i.e. row `r + 1` of the stacked constraints.
pub fn pair_indices(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[derive(Debug, Clone)]
pub struct ConstraintEvaluation {
    pub values: Vec<f64>,
    /// `m x (n d)`; present only when requested.
    pub jacobian: Option<DMatrix<f64>>,
    pub active_set: Vec<usize>,
    pub det_m: f64,
}

impl ConstraintEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.values.iter().all(|v| *v <= 0.0)
    }

    /// `|max(g_bar, 0)|_inf`.
    pub fn max_violation(&self) -> f64 {
        max_violation(&self.values)
    }
}

pub(crate) fn max_violation(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, v| acc.max(*v))
}

fn active_indices(values: &[f64], tol: f64) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

pub fn eval_constraints(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    spec: &ConstraintSpec,
) -> ConstraintEvaluation {
    let det_m = connectivity::det_m(x, params);
    let mut values = Vec::with_capacity(spec.count(x.n()));
    values.push(spec.tau - det_m);
    if spec.min_distance_enabled {
        values.extend(pair_indices(x.n()).map(|(i, j)| spec.delta - x.distance(i, j)));
    }
    let active_set = active_indices(&values, spec.activation_tol());
    ConstraintEvaluation {
        values,
        jacobian: None,
        active_set,
        det_m,
    }
}

pub fn constraint_jacobian(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    spec: &ConstraintSpec,
) -> Result<DMatrix<f64>> {
    let (n, d) = (x.n(), x.d());
    let grad_det = connectivity::grad_det_m(x, params)?;
    let mut jac = DMatrix::zeros(spec.count(n), n * d);
    for (c, g) in grad_det.iter().enumerate() {
        jac[(0, c)] = -g;
    }
    if spec.min_distance_enabled {
        for (r, (i, j)) in pair_indices(n).enumerate() {
            let dist = x.distance(i, j);
            let (pi, pj) = (x.position(i), x.position(j));
            for k in 0..d {
                let u = (pi[k] - pj[k]) / dist;
                jac[(r + 1, i * d + k)] = -u;
                jac[(r + 1, j * d + k)] = u;
            }
        }
    }
    Ok(jac)
}

/// Values and Jacobian together.
pub fn eval_constraints_with_jacobian(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    spec: &ConstraintSpec,
) -> Result<ConstraintEvaluation> {
    let mut ev = eval_constraints(x, params, spec);
    ev.jacobian = Some(constraint_jacobian(x, params, spec)?);
    Ok(ev)
}

/// How a certificate direction was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    /// Extremal-sensor direction blended with the scaling direction.
    ExtremalSensor,
    /// Margin-maximizing linear program over `|d|_inf <= 1`.
    LinearProgram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MfcqOutcome {
    /// No active constraints.
    VacuouslySatisfied,
    Certified {
        direction: Vec<f64>,
        /// `min_i -grad g_i^T d` over active `i`, with `|d|_inf <= 1`.
        margin: f64,
        source: CertificateSource,
    },
    NotCertified {
        best_margin: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfcqReport {
    pub active: Vec<usize>,
    /// Sensor and axis of the coordinate-extremal sensor used for the warm start.
    pub extremal: Option<(usize, usize)>,
    /// Whether that sensor avoids every active minimum-distance constraint.
    pub extremal_isolated: bool,
    pub outcome: MfcqOutcome,
}

impl MfcqReport {
    pub fn is_satisfied(&self) -> bool {
        !matches!(self.outcome, MfcqOutcome::NotCertified { .. })
    }

    pub fn margin(&self) -> Option<f64> {
        match &self.outcome {
            MfcqOutcome::Certified { margin, .. } => Some(*margin),
            _ => None,
        }
    }
}

fn margin_of(jac: &DMatrix<f64>, active: &[usize], d: &[f64]) -> f64 {
    active
        .iter()
        .map(|&i| -jac.row(i).iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn normalize_inf(d: &mut [f64]) -> bool {
    let m = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m > 0.0 && m.is_finite() {
        d.iter_mut().for_each(|v| *v /= m);
        true
    } else {
        false
    }
}

/// Candidate `(sensor, axis)` pairs whose coordinate is minimal or maximal along that
/// axis and strictly beaten by some other sensor, lowest index first.
fn extremal_candidates(x: &SensorConfiguration) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..x.d() {
        let coords: Vec<f64> = (0..x.n()).map(|i| x.position(i)[k]).collect();
        let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            continue;
        }
        for (i, c) in coords.iter().enumerate() {
            if *c == lo || *c == hi {
                out.push((i, k));
            }
        }
    }
    out
}

/// Extremal-sensor direction blended with the scaling direction `Delta d`
/// (every other sensor's position, zero on the extremal sensor).
fn warm_start(
    x: &SensorConfiguration,
    spec: &ConstraintSpec,
    jac: &DMatrix<f64>,
    active: &[usize],
    l: usize,
) -> Vec<f64> {
    let (n, d) = (x.n(), x.d());
    let g_active = active.contains(&0);
    let pairs_active = active.iter().any(|&i| i > 0);
    let mut dir = vec![0.0; n * d];
    if g_active {
        for k in 0..d {
            dir[l * d + k] = -jac[(0, l * d + k)];
        }
        normalize_inf(&mut dir);
    }
    if pairs_active && spec.min_distance_enabled {
        let mut scale = vec![0.0; n * d];
        for j in (0..n).filter(|&j| j != l) {
            scale[j * d..(j + 1) * d].copy_from_slice(x.position(j));
        }
        let t = if g_active {
            let a: f64 = jac.row(0).iter().zip(&dir).map(|(u, v)| u * v).sum();
            let b: f64 = jac.row(0).iter().zip(&scale).map(|(u, v)| u * v).sum();
            if b > 0.0 {
                0.5 * -a / b
            } else {
                1.0
            }
        } else {
            1.0
        };
        for (v, s) in dir.iter_mut().zip(&scale) {
            *v += t * s;
        }
    }
    normalize_inf(&mut dir);
    dir
}

/// Maximizes `s` subject to `grad g_i^T d + s <= 0` for active `i` and `|d|_inf <= 1`.
/// Rows are scaled to unit length; the returned margin is measured on the raw rows.
fn lp_direction(jac: &DMatrix<f64>, active: &[usize]) -> Option<Vec<f64>> {
    let cols = jac.ncols();
    let mut lp = LinearProgram::new(OptimizationDirection::Maximize);
    let dvars: Vec<_> = (0..cols).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for &i in active {
        let norm = jac.row(i).norm();
        if norm == 0.0 {
            continue;
        }
        let mut expr = LinearExpr::empty();
        for (c, var) in dvars.iter().enumerate() {
            let a = jac[(i, c)] / norm;
            if a != 0.0 {
                expr.add(*var, a);
            }
        }
        expr.add(s, 1.0);
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    let sol = lp.solve().ok()?;
    Some(dvars.iter().map(|v| *sol.var_value(*v)).collect())
}

/// Searches for a direction `d` that strictly decreases every active constraint.
pub fn mfcq_diagnostic(
    x: &SensorConfiguration,
    params: &EdgeWeightParams,
    spec: &ConstraintSpec,
    activation_tol: f64,
) -> Result<MfcqReport> {
    let values = eval_constraints(x, params, spec).values;
    let active = active_indices(&values, activation_tol);
    let jac = constraint_jacobian(x, params, spec)?;
    let n = x.n();

    let busy: Vec<bool> = {
        let mut busy = vec![false; n];
        if spec.min_distance_enabled {
            for (r, (i, j)) in pair_indices(n).enumerate() {
                if active.contains(&(r + 1)) {
                    busy[i] = true;
                    busy[j] = true;
                }
            }
        }
        busy
    };
    let candidates = extremal_candidates(x);
    let extremal = candidates
        .iter()
        .copied()
        .find(|(l, _)| !busy[*l])
        .or_else(|| candidates.first().copied());
    let extremal_isolated = extremal.is_some_and(|(l, _)| !busy[l]);

    if active.is_empty() {
        return Ok(MfcqReport {
            active,
            extremal,
            extremal_isolated,
            outcome: MfcqOutcome::VacuouslySatisfied,
        });
    }

    let mut best: Option<(Vec<f64>, f64, CertificateSource)> = None;
    if let Some((l, _)) = extremal {
        let dir = warm_start(x, spec, &jac, &active, l);
        let m = margin_of(&jac, &active, &dir);
        best = Some((dir, m, CertificateSource::ExtremalSensor));
    }
    if let Some(dir) = lp_direction(&jac, &active) {
        let m = margin_of(&jac, &active, &dir);
        if best.as_ref().is_none_or(|(_, bm, _)| m > *bm) {
            best = Some((dir, m, CertificateSource::LinearProgram));
        }
    }

    let outcome = match best {
        Some((direction, margin, source)) if margin > 0.0 => MfcqOutcome::Certified {
            direction,
            margin,
            source,
        },
        Some((_, margin, _)) => MfcqOutcome::NotCertified {
            best_margin: margin,
        },
        None => MfcqOutcome::NotCertified {
            best_margin: f64::NEG_INFINITY,
        },
    };
    Ok(MfcqReport {
        active,
        extremal,
        extremal_isolated,
        outcome,
    })
}
