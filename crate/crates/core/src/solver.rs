//! Proximal-perturbed augmented Lagrangian iteration for
//! `min_{x in Q^n} H(x) + r(x)  s.t.  g_bar(x) <= 0`.
//!
//! Each iteration performs, in order: a proximal gradient x-update, a projected
//! slack update using the constraint values at the pre-update `x`, the auxiliary
//! multiplier update, the multiplier update and the perturbation update.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::EdgeWeightParams;
use crate::constraints::{
    eval_constraints, eval_constraints_with_jacobian, max_violation, ConstraintEvaluation,
    ConstraintSpec,
};
use crate::coverage::{coverage_value, evaluate_coverage, CoverageEvaluation, UncertaintyFunction};
use crate::error::{Error, Result};
use crate::geometry::{Domain, QuadratureGrid, SensorConfiguration};
use crate::regularization::{model_minimize, reg_value, Regularizer, SeparableProx};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Perturbation penalty, `omega > 1`.
    pub omega: f64,
    /// Dual proximal parameter in `(0, 1)`.
    pub beta: f64,
    /// x step size.
    pub eta: f64,
    /// Slack step size.
    pub kappa: f64,
    /// Auxiliary multiplier schedule `sigma(t) = min(sigma_cap, sigma0 / (t + 1))`.
    pub sigma0: f64,
    pub sigma_cap: Option<f64>,
    pub max_iters: usize,
    /// Upper bound `U` of the slack box; derived from the problem when absent.
    pub slack_bound: Option<f64>,
    pub kkt_tol: f64,
    pub seed: u64,
    /// Maximum number of halvings of `eta` within one x-update while the smooth part
    /// of the augmented Lagrangian exceeds its quadratic upper model; 0 keeps `eta` fixed.
    pub max_backtracks: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            omega: 2.0,
            beta: 0.5,
            eta: 1e-2,
            kappa: 1e-2,
            sigma0: 0.5,
            sigma_cap: None,
            max_iters: 5000,
            slack_bound: None,
            kkt_tol: 1e-5,
            seed: 0,
            max_backtracks: 0,
        }
    }
}

impl SolverParams {
    /// Penalty `rho = omega / (1 + omega beta)`; always recomputed.
    pub fn rho(&self) -> f64 {
        self.omega / (1.0 + self.omega * self.beta)
    }

    pub fn sigma(&self, t: usize) -> f64 {
        let s = self.sigma0 / (t as f64 + 1.0);
        self.sigma_cap.map_or(s, |c| s.min(c))
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive (got {v})")))
            }
        }
        if !(self.omega > 1.0 && self.omega.is_finite()) {
            return Err(Error::config(
                "omega",
                format!("must be greater than 1 (got {})", self.omega),
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(
                "beta",
                format!("must lie in the open interval (0, 1) (got {})", self.beta),
            ));
        }
        positive("eta", self.eta)?;
        positive("kappa", self.kappa)?;
        positive("sigma0", self.sigma0)?;
        if let Some(c) = self.sigma_cap {
            positive("sigma_cap", c)?;
        }
        if let Some(u) = self.slack_bound {
            positive("slack_bound", u)?;
        }
        if !(self.kkt_tol >= 0.0 && self.kkt_tol.is_finite()) {
            return Err(Error::config("kkt_tol", "must be a non-negative number"));
        }
        Ok(())
    }
}

/// Objective, constraints and regularizer of one placement problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: QuadratureGrid,
    pub uncertainty: UncertaintyFunction,
    pub edges: EdgeWeightParams,
    pub constraints: ConstraintSpec,
    pub regularizer: Regularizer,
}

/// Everything the iteration needs at one point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub coverage: CoverageEvaluation,
    pub constraints: ConstraintEvaluation,
    pub regularization: f64,
}

impl PointEvaluation {
    fn jacobian(&self) -> &DMatrix<f64> {
        self.constraints
            .jacobian
            .as_ref()
            .expect("evaluated with jacobian")
    }
}

impl Problem {
    pub fn new(
        grid: QuadratureGrid,
        uncertainty: UncertaintyFunction,
        edges: EdgeWeightParams,
        constraints: ConstraintSpec,
        regularizer: Regularizer,
    ) -> Result<Self> {
        if !grid.has_density() {
            return Err(Error::InvalidArgument(
                "problem grid needs an attached density".into(),
            ));
        }
        edges.validate()?;
        constraints.validate()?;
        regularizer.validate(grid.domain())?;
        Ok(Self {
            grid,
            uncertainty,
            edges,
            constraints,
            regularizer,
        })
    }

    pub fn domain(&self) -> &Domain {
        self.grid.domain()
    }

    pub fn num_constraints(&self, n: usize) -> usize {
        self.constraints.count(n)
    }

    /// Slack bound covering every attainable `|g_bar|`.
    ///
    /// Eigenvalues of `L` are at most `2 (n - 1)` because edge weights are below one,
    /// so `0 <= det M <= (2 (n - 1))^(n - 1)`; pair constraints are at most `delta`.
    pub fn default_slack_bound(&self, n: usize) -> f64 {
        let k = n.saturating_sub(1);
        let det_bound = (2.0 * k as f64).powi(k as i32);
        let pairs = if self.constraints.min_distance_enabled {
            self.constraints.delta * ((self.num_constraints(n)) as f64).sqrt()
        } else {
            0.0
        };
        det_bound + self.constraints.tau.abs() + pairs
    }

    pub fn evaluate(&self, x: &SensorConfiguration) -> Result<PointEvaluation> {
        let coverage = evaluate_coverage(x, &self.grid, &self.uncertainty)?;
        let constraints = eval_constraints_with_jacobian(x, &self.edges, &self.constraints)?;
        Ok(PointEvaluation {
            coverage,
            constraints,
            regularization: reg_value(x, &self.regularizer),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub x: SensorConfiguration,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub t: usize,
}

impl SolverState {
    /// `u = clip(max(-g_bar(x0), 0), 0, U)`, zero multipliers and perturbation.
    pub fn initial(x: SensorConfiguration, values: &[f64], slack_bound: f64) -> Self {
        let m = values.len();
        Self {
            x,
            u: values
                .iter()
                .map(|g| (-g).max(0.0).min(slack_bound))
                .collect(),
            z: vec![0.0; m],
            lambda: vec![0.0; m],
            mu: vec![0.0; m],
            t: 0,
        }
    }

    fn is_finite(&self) -> bool {
        [&self.u, &self.z, &self.lambda, &self.mu]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// First-order optimality residuals at `(x, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `|x - Pi_Q(x - grad(H + r + lambda^T g_bar))|_2`.
    pub stationarity: f64,
    /// `|max(g_bar, 0)|_inf`.
    pub feasibility: f64,
    /// `max_i |lambda_i g_bar_i|`.
    pub complementarity: f64,
    /// `|min(lambda, 0)|_inf`.
    pub dual_negativity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
            .max(self.dual_negativity)
    }
}

fn kkt_from_eval(
    x: &SensorConfiguration,
    lambda: &[f64],
    problem: &Problem,
    eval: &PointEvaluation,
) -> KktResidual {
    let jac = eval.jacobian();
    let reg_grad = problem.regularizer.gradient(x);
    let domain = problem.domain();
    let d = x.d();
    let mut stat = 0.0;
    for (c, v) in x.as_slice().iter().enumerate() {
        let mut g = eval.coverage.gradient[c] + reg_grad[c];
        for (i, l) in lambda.iter().enumerate() {
            g += jac[(i, c)] * l;
        }
        let k = c % d;
        let moved = (v - g).clamp(domain.lo()[k], domain.hi()[k]);
        stat += (v - moved) * (v - moved);
    }
    let values = &eval.constraints.values;
    KktResidual {
        stationarity: stat.sqrt(),
        feasibility: max_violation(values),
        complementarity: lambda
            .iter()
            .zip(values)
            .fold(0.0f64, |acc, (l, g)| acc.max((l * g).abs())),
        dual_negativity: lambda.iter().fold(0.0f64, |acc, l| acc.max(-l)),
    }
}

pub fn kkt_residual(
    x: &SensorConfiguration,
    lambda: &[f64],
    problem: &Problem,
) -> Result<KktResidual> {
    let eval = problem.evaluate(x)?;
    check_len(lambda, eval.constraints.values.len(), "lambda")?;
    Ok(kkt_from_eval(x, lambda, problem, &eval))
}

fn check_len(v: &[f64], m: usize, name: &str) -> Result<()> {
    if v.len() == m {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} has length {}, expected {m}",
            v.len()
        )))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `l_rho(x, u, z, lambda, mu)`, without the regularizer.
pub fn ppal_value(state: &SolverState, problem: &Problem, params: &SolverParams) -> Result<f64> {
    let h = coverage_value(&state.x, &problem.grid, &problem.uncertainty)?;
    let g = eval_constraints(&state.x, &problem.edges, &problem.constraints).values;
    let m = g.len();
    for (v, name) in [
        (&state.u, "u"),
        (&state.z, "z"),
        (&state.lambda, "lambda"),
        (&state.mu, "mu"),
    ] {
        check_len(v, m, name)?;
    }
    let rho = params.rho();
    let mut val = h;
    let mut res2 = 0.0;
    for i in 0..m {
        let r = g[i] + state.u[i];
        val += state.lambda[i] * (r - state.z[i])
            + state.mu[i] * state.z[i]
            + 0.5 * params.omega * state.z[i] * state.z[i]
            - 0.5 * params.beta * (state.lambda[i] - state.mu[i]).powi(2);
        res2 += r * r;
    }
    Ok(val + 0.5 * rho * res2)
}

/// `L_rho = l_rho + r(x)`.
pub fn ppal_value_regularized(
    state: &SolverState,
    problem: &Problem,
    params: &SolverParams,
) -> Result<f64> {
    Ok(ppal_value(state, problem, params)? + reg_value(&state.x, &problem.regularizer))
}

fn grad_from_eval(state: &SolverState, eval: &PointEvaluation, rho: f64) -> Vec<f64> {
    let jac = eval.jacobian();
    let weights: Vec<f64> = eval
        .constraints
        .values
        .iter()
        .zip(&state.u)
        .zip(&state.lambda)
        .map(|((g, u), l)| l + rho * (g + u))
        .collect();
    let mut grad = eval.coverage.gradient.clone();
    for (c, gr) in grad.iter_mut().enumerate() {
        for (i, w) in weights.iter().enumerate() {
            *gr += jac[(i, c)] * w;
        }
    }
    grad
}

/// `grad H(x) + J(x)^T (lambda + rho (g_bar(x) + u))`; the regularizer is left to the prox step.
pub fn grad_x_ppal(
    state: &SolverState,
    problem: &Problem,
    params: &SolverParams,
) -> Result<Vec<f64>> {
    let eval = problem.evaluate(&state.x)?;
    check_len(&state.u, eval.constraints.values.len(), "u")?;
    check_len(&state.lambda, eval.constraints.values.len(), "lambda")?;
    Ok(grad_from_eval(state, &eval, params.rho()))
}

/// Diagnostics recorded after each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub t: usize,
    pub x: SensorConfiguration,
    pub coverage: f64,
    pub regularization: f64,
    pub det_m: f64,
    /// `|max(g_bar, 0)|_inf`.
    pub max_violation: f64,
    /// `|g_bar + u|_2`.
    pub residual_norm: f64,
    pub kkt: KktResidual,
    pub lambda_norm: f64,
    pub mu_norm: f64,
}

impl IterateRecord {
    fn new(state: &SolverState, problem: &Problem, eval: &PointEvaluation) -> Self {
        let res: Vec<f64> = eval
            .constraints
            .values
            .iter()
            .zip(&state.u)
            .map(|(g, u)| g + u)
            .collect();
        Self {
            t: state.t,
            x: state.x.clone(),
            coverage: eval.coverage.value,
            regularization: eval.regularization,
            det_m: eval.constraints.det_m,
            max_violation: eval.constraints.max_violation(),
            residual_norm: norm(&res),
            kkt: kkt_from_eval(&state.x, &state.lambda, problem, eval),
            lambda_norm: norm(&state.lambda),
            mu_norm: norm(&state.mu),
        }
    }

    fn is_finite(&self) -> bool {
        [
            self.coverage,
            self.regularization,
            self.det_m,
            self.max_violation,
            self.residual_norm,
            self.kkt.stationarity,
            self.kkt.complementarity,
            self.lambda_norm,
            self.mu_norm,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    MaxIters,
    KktTolReached,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: SolverParams,
    /// Resolved slack bound `U`.
    pub slack_bound: f64,
    pub records: Vec<IterateRecord>,
    pub final_state: SolverState,
    pub termination: TerminationReason,
    /// Iteration at which the step sizes were halved after a non-finite update.
    #[serde(default)]
    pub step_halved_at: Option<usize>,
}

impl Trajectory {
    pub fn last(&self) -> &IterateRecord {
        self.records
            .last()
            .expect("trajectory has at least the initial record")
    }

    pub fn iterations(&self) -> usize {
        self.final_state.t
    }
}

/// Where the iteration starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPositions {
    Explicit(SensorConfiguration),
    /// `n` positions drawn uniformly over the domain from `SolverParams::seed`.
    Random {
        n: usize,
    },
}

impl InitialPositions {
    pub fn resolve(&self, domain: &Domain, seed: u64) -> Result<SensorConfiguration> {
        match self {
            Self::Explicit(x) => {
                if x.d() != domain.dim() {
                    return Err(Error::InvalidArgument(format!(
                        "initial positions have dimension {}, domain has {}",
                        x.d(),
                        domain.dim()
                    )));
                }
                if (0..x.n()).any(|i| !domain.contains(x.position(i))) {
                    return Err(Error::InvalidArgument(
                        "initial positions must lie inside the domain".into(),
                    ));
                }
                Ok(x.clone())
            }
            Self::Random { n } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                SensorConfiguration::random(domain, *n, &mut rng)
            }
        }
    }
}

/// `l_rho` as a function of `x` alone, dropping terms constant in `x`.
fn smooth_merit(h: f64, g: &[f64], state: &SolverState, rho: f64) -> f64 {
    let mut val = h;
    for i in 0..g.len() {
        let r = g[i] + state.u[i];
        val += state.lambda[i] * r + 0.5 * rho * r * r;
    }
    val
}

/// Proximal x-update, halving the step while the quadratic upper model is violated.
fn x_update(
    state: &SolverState,
    eval: &PointEvaluation,
    grad: &[f64],
    problem: &Problem,
    params: &SolverParams,
    eta: f64,
) -> Result<SensorConfiguration> {
    let reg = &problem.regularizer;
    let domain = problem.domain();
    let mut eta_t = eta;
    let mut x = model_minimize(&state.x, grad, eta_t, reg, domain)?;
    if params.max_backtracks == 0 {
        return Ok(x);
    }
    let rho = params.rho();
    let base = smooth_merit(eval.coverage.value, &eval.constraints.values, state, rho);
    for _ in 0..params.max_backtracks {
        let h = coverage_value(&x, &problem.grid, &problem.uncertainty)?;
        let g = eval_constraints(&x, &problem.edges, &problem.constraints).values;
        let mut lin = 0.0;
        let mut quad = 0.0;
        for ((a, b), gr) in x.as_slice().iter().zip(state.x.as_slice()).zip(grad) {
            lin += gr * (a - b);
            quad += (a - b) * (a - b);
        }
        let bound = base + lin + quad / (2.0 * eta_t);
        if smooth_merit(h, &g, state, rho) <= bound + 1e-12 * bound.abs().max(1.0) {
            break;
        }
        eta_t *= 0.5;
        x = model_minimize(&state.x, grad, eta_t, reg, domain)?;
    }
    Ok(x)
}

/// Steps 3-7 from `state`, given the evaluation at `state.x`.
fn advance(
    state: &SolverState,
    eval: &PointEvaluation,
    problem: &Problem,
    params: &SolverParams,
    eta: f64,
    kappa: f64,
    slack_bound: f64,
) -> Result<(SolverState, PointEvaluation)> {
    let rho = params.rho();
    let grad = grad_from_eval(state, eval, rho);
    let x = x_update(state, eval, &grad, problem, params, eta)?;

    let g = &eval.constraints.values;
    let u: Vec<f64> = (0..g.len())
        .map(|i| {
            let step = state.u[i] - kappa * (state.lambda[i] + rho * (g[i] + state.u[i]));
            step.clamp(0.0, slack_bound)
        })
        .collect();

    let sigma = params.sigma(state.t);
    let mu: Vec<f64> = state
        .mu
        .iter()
        .zip(&state.lambda)
        .map(|(m, l)| m + sigma * (l - m))
        .collect();

    let next_eval = problem.evaluate(&x)?;
    let g1 = &next_eval.constraints.values;
    let lambda: Vec<f64> = (0..g1.len())
        .map(|i| mu[i] + rho * (g1[i] + u[i]))
        .collect();
    let z: Vec<f64> = lambda
        .iter()
        .zip(&mu)
        .map(|(l, m)| (l - m) / params.omega)
        .collect();

    let next = SolverState {
        x,
        u,
        z,
        lambda,
        mu,
        t: state.t + 1,
    };
    Ok((next, next_eval))
}

/// One full iteration from `state` with the configured step sizes.
pub fn step(
    state: &SolverState,
    problem: &Problem,
    params: &SolverParams,
) -> Result<(SolverState, IterateRecord)> {
    let eval = problem.evaluate(&state.x)?;
    check_len(&state.u, eval.constraints.values.len(), "u")?;
    let slack_bound = params
        .slack_bound
        .unwrap_or_else(|| problem.default_slack_bound(state.x.n()));
    let (next, next_eval) = advance(
        state,
        &eval,
        problem,
        params,
        params.eta,
        params.kappa,
        slack_bound,
    )?;
    let record = IterateRecord::new(&next, problem, &next_eval);
    if !next.is_finite() || !record.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite iterate at t = {}",
            next.t
        )));
    }
    Ok((next, record))
}

/// Iteration driver holding the current state and its evaluation.
pub struct Solver<'a> {
    problem: &'a Problem,
    params: SolverParams,
    eta: f64,
    kappa: f64,
    slack_bound: f64,
    state: SolverState,
    eval: PointEvaluation,
    halved_at: Option<usize>,
}

impl<'a> Solver<'a> {
    pub fn new(
        problem: &'a Problem,
        params: SolverParams,
        init: &InitialPositions,
    ) -> Result<Self> {
        params.validate()?;
        let x0 = init.resolve(problem.domain(), params.seed)?;
        let eval = problem.evaluate(&x0)?;
        let slack_bound = params
            .slack_bound
            .unwrap_or_else(|| problem.default_slack_bound(x0.n()));
        let state = SolverState::initial(x0, &eval.constraints.values, slack_bound);
        Ok(Self {
            problem,
            params,
            eta: params.eta,
            kappa: params.kappa,
            slack_bound,
            state,
            eval,
            halved_at: None,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn slack_bound(&self) -> f64 {
        self.slack_bound
    }

    pub fn evaluation(&self) -> &PointEvaluation {
        &self.eval
    }

    pub fn record(&self) -> IterateRecord {
        IterateRecord::new(&self.state, self.problem, &self.eval)
    }

    fn try_advance(&self) -> Result<(SolverState, PointEvaluation, IterateRecord)> {
        let (next, eval) = advance(
            &self.state,
            &self.eval,
            self.problem,
            &self.params,
            self.eta,
            self.kappa,
            self.slack_bound,
        )?;
        let record = IterateRecord::new(&next, self.problem, &eval);
        if !next.is_finite() || !record.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite iterate at t = {}",
                next.t
            )));
        }
        Ok((next, eval, record))
    }

    /// Advances one iteration. On a failed update the step sizes are halved once and
    /// the iteration retried; a later failure is returned as an error.
    pub fn step(&mut self) -> Result<IterateRecord> {
        let out = match self.try_advance() {
            Ok(out) => out,
            Err(e) if self.halved_at.is_some() => return Err(e),
            Err(_) => {
                self.eta *= 0.5;
                self.kappa *= 0.5;
                self.halved_at = Some(self.state.t);
                self.try_advance()?
            }
        };
        let (next, eval, record) = out;
        self.state = next;
        self.eval = eval;
        Ok(record)
    }

    /// Runs to termination, keeping every `thin`-th record plus the first and last.
    pub fn run(mut self, thin: usize) -> Trajectory {
        let thin = thin.max(1);
        let mut records = vec![self.record()];
        let mut termination = TerminationReason::MaxIters;
        if records[0].kkt.max() <= self.params.kkt_tol {
            termination = TerminationReason::KktTolReached;
        } else {
            for _ in 0..self.params.max_iters {
                match self.step() {
                    Ok(rec) => {
                        let done = rec.kkt.max() <= self.params.kkt_tol;
                        let last = done || self.state.t == self.params.max_iters;
                        if last || rec.t % thin == 0 {
                            records.push(rec);
                        }
                        if done {
                            termination = TerminationReason::KktTolReached;
                            break;
                        }
                    }
                    Err(_) => {
                        termination = TerminationReason::NumericalFailure;
                        if records.last().map(|r| r.t) != Some(self.state.t) {
                            records.push(self.record());
                        }
                        break;
                    }
                }
            }
        }
        Trajectory {
            params: self.params,
            slack_bound: self.slack_bound,
            records,
            final_state: self.state,
            termination,
            step_halved_at: self.halved_at,
        }
    }
}

/// Runs the iteration from `init`, recording every iterate.
pub fn run(
    problem: &Problem,
    params: &SolverParams,
    init: &InitialPositions,
) -> Result<Trajectory> {
    run_thinned(problem, params, init, 1)
}

pub fn run_thinned(
    problem: &Problem,
    params: &SolverParams,
    init: &InitialPositions,
    thin: usize,
) -> Result<Trajectory> {
    Ok(Solver::new(problem, *params, init)?.run(thin))
}
