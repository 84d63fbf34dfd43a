//! Scenario files: TOML configs and built-in presets, running a scenario to
//! trajectory and summary files, sweeps over one parameter, and run comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::connectivity::{algebraic_connectivity, EdgeWeightParams};
use crate::constraints::ConstraintSpec;
use crate::coverage::UncertaintyFunction;
use crate::error::{Error, Result};
use crate::geometry::{
    attach_density, build_grid, Domain, GaussianComponent, GaussianMixtureDensity,
    SensorConfiguration,
};
use crate::regularization::{Regularizer, RegularizerKind};
use crate::solver::{
    run_thinned, InitialPositions, KktResidual, Problem, SolverParams, TerminationReason,
    Trajectory,
};

const PRESETS: &[(&str, &str)] = &[
    ("fig1-tau-1", include_str!("../presets/fig1-tau-1.toml")),
    ("fig1-tau0.1", include_str!("../presets/fig1-tau0.1.toml")),
    ("fig1-tau1", include_str!("../presets/fig1-tau1.toml")),
    ("fig2-tau-1", include_str!("../presets/fig2-tau-1.toml")),
    ("fig2-tau0.1", include_str!("../presets/fig2-tau0.1.toml")),
    ("fig2-tau1", include_str!("../presets/fig2-tau1.toml")),
    ("fig3-alpha0", include_str!("../presets/fig3-alpha0.toml")),
    (
        "fig3-alpha0.01",
        include_str!("../presets/fig3-alpha0.01.toml"),
    ),
    (
        "fig3-alpha0.02",
        include_str!("../presets/fig3-alpha0.02.toml"),
    ),
    (
        "fig3-alpha0.03",
        include_str!("../presets/fig3-alpha0.03.toml"),
    ),
];

/// Keys accepted by [`ScenarioConfig::with_param`].
pub const SWEEP_KEYS: &[&str] = &[
    "tau",
    "delta",
    "alpha",
    "w",
    "epsilon",
    "n",
    "resolution",
    "seed",
    "omega",
    "beta",
    "eta",
    "kappa",
    "sigma0",
    "sigma_cap",
    "max_iters",
    "slack_bound",
    "kkt_tol",
    "max_backtracks",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Uniform,
    Mixture { components: Vec<GaussianComponent> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub alpha: f64,
}

/// Explicit starting positions; absent means uniform random draws seeded by `solver.seed`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub positions: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Prefix of the run id and output file names.
    pub name: String,
    pub n: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Keep every `thin`-th iterate in the trajectory file.
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "Domain::unit_square")]
    pub domain: Domain,
    pub density: DensitySpec,
    pub edges: EdgeWeightParams,
    pub constraints: ConstraintSpec,
    #[serde(default)]
    pub regularizer: RegularizerSpec,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_resolution() -> usize {
    100
}

fn default_thin() -> usize {
    1
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { field, message } => Error::config(format!("{prefix}.{field}"), message),
        Error::InvalidArgument(m) | Error::DegenerateDensity(m) => Error::config(prefix, m),
        other => other,
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let name_ok = !self.name.is_empty()
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'));
        if !name_ok {
            return Err(Error::config(
                "name",
                "must be non-empty and use only letters, digits, '.', '-' or '_'",
            ));
        }
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.resolution < 2 {
            return Err(Error::config("resolution", "must be at least 2"));
        }
        if self.thin == 0 {
            return Err(Error::config("thin", "must be at least 1"));
        }
        Domain::new(self.domain.lo().to_vec(), self.domain.hi().to_vec())
            .map_err(|e| prefixed("domain", e))?;
        let d = self.domain.dim();
        if let DensitySpec::Mixture { components } = &self.density {
            if components.iter().any(|c| c.mean.len() != d) {
                return Err(Error::config(
                    "density.components",
                    format!("every mean must have {d} coordinates"),
                ));
            }
            GaussianMixtureDensity::new(components.clone()).map_err(|e| prefixed("density", e))?;
        }
        if !(self.edges.w > 0.0 && self.edges.w.is_finite()) {
            return Err(Error::config("edges.w", "must be positive"));
        }
        if !(self.edges.epsilon > 0.0 && self.edges.epsilon.is_finite()) {
            return Err(Error::config("edges.epsilon", "must be positive"));
        }
        self.constraints
            .validate()
            .map_err(|e| prefixed("constraints", e))?;
        if !(self.regularizer.alpha >= 0.0 && self.regularizer.alpha.is_finite()) {
            return Err(Error::config(
                "regularizer.alpha",
                "must be a non-negative number",
            ));
        }
        self.solver.validate().map_err(|e| prefixed("solver", e))?;
        if let Some(p) = &self.init.positions {
            if p.len() != self.n {
                return Err(Error::config(
                    "init.positions",
                    format!("expected {} positions, got {}", self.n, p.len()),
                ));
            }
            if p.iter().any(|q| q.len() != d || !self.domain.contains(q)) {
                return Err(Error::config(
                    "init.positions",
                    format!("every position must have {d} coordinates inside the domain"),
                ));
            }
        }
        Ok(())
    }

    pub fn run_id(&self) -> String {
        format!("{}-seed{}", self.name, self.solver.seed)
    }

    pub fn density(&self) -> Result<GaussianMixtureDensity> {
        match &self.density {
            DensitySpec::Uniform => Ok(GaussianMixtureDensity::uniform(self.domain.dim())),
            DensitySpec::Mixture { components } => GaussianMixtureDensity::new(components.clone()),
        }
    }

    pub fn regularizer(&self) -> Result<Regularizer> {
        match self.regularizer.kind {
            RegularizerKind::None => Ok(Regularizer::none(self.domain.dim())),
            RegularizerKind::CentroidQuadratic => {
                Regularizer::centroid_quadratic(self.regularizer.alpha, &self.domain)
            }
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let grid = build_grid(&self.domain, self.resolution)?;
        let grid = attach_density(&grid, &self.density()?)?;
        Problem::new(
            grid,
            UncertaintyFunction::Quadratic,
            self.edges,
            self.constraints,
            self.regularizer()?,
        )
    }

    pub fn initial_positions(&self) -> Result<InitialPositions> {
        Ok(match &self.init.positions {
            Some(p) => InitialPositions::Explicit(SensorConfiguration::from_points(p)?),
            None => InitialPositions::Random { n: self.n },
        })
    }

    /// Copy with one scalar parameter replaced and re-validated.
    pub fn with_param(&self, key: &str, value: &str) -> Result<Self> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse {v:?}")))
        }
        let mut c = self.clone();
        match key {
            "tau" => c.constraints.tau = num(key, value)?,
            "delta" => c.constraints.delta = num(key, value)?,
            "alpha" => {
                c.regularizer.alpha = num(key, value)?;
                if c.regularizer.alpha > 0.0 {
                    c.regularizer.kind = RegularizerKind::CentroidQuadratic;
                }
            }
            "w" => c.edges.w = num(key, value)?,
            "epsilon" => c.edges.epsilon = num(key, value)?,
            "n" => {
                c.n = num(key, value)?;
                c.init.positions = None;
            }
            "resolution" => c.resolution = num(key, value)?,
            "seed" => c.solver.seed = num(key, value)?,
            "omega" => c.solver.omega = num(key, value)?,
            "beta" => c.solver.beta = num(key, value)?,
            "eta" => c.solver.eta = num(key, value)?,
            "kappa" => c.solver.kappa = num(key, value)?,
            "sigma0" => c.solver.sigma0 = num(key, value)?,
            "sigma_cap" => c.solver.sigma_cap = Some(num(key, value)?),
            "max_iters" => c.solver.max_iters = num(key, value)?,
            "slack_bound" => c.solver.slack_bound = Some(num(key, value)?),
            "kkt_tol" => c.solver.kkt_tol = num(key, value)?,
            "max_backtracks" => c.solver.max_backtracks = num(key, value)?,
            _ => {
                return Err(Error::config(
                    key,
                    format!(
                        "not a sweepable parameter (expected one of {})",
                        SWEEP_KEYS.join(", ")
                    ),
                ))
            }
        }
        if key != "seed" {
            c.name = format!("{}-{key}{}", self.name, value.trim());
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    ScenarioConfig::parse(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<_> = preset_names().collect();
        Error::InvalidArgument(format!(
            "unknown preset {name:?} (known: {})",
            names.join(", ")
        ))
    })?;
    ScenarioConfig::parse(text)
}

/// Everything a trajectory file holds: the run id, the config echo and the iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub run_id: String,
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub coverage: f64,
    pub det_m: f64,
    pub lambda2: f64,
    /// `|max(g_bar, 0)|_inf` at the final iterate.
    pub feasibility: f64,
    pub kkt: KktResidual,
    pub mean_centroid_distance: f64,
    pub iterations: usize,
    pub termination: TerminationReason,
    /// Not reproducible across runs, unlike every other field.
    pub wall_time_s: f64,
}

/// Mean Euclidean distance of the sensors to the centroid of `domain`.
pub fn mean_centroid_distance(x: &SensorConfiguration, domain: &Domain) -> f64 {
    let c = domain.centroid();
    let total: f64 = (0..x.n())
        .map(|i| {
            x.position(i)
                .iter()
                .zip(&c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    total / x.n() as f64
}

impl RunSummary {
    pub fn from_trajectory(
        run_id: &str,
        config: &ScenarioConfig,
        trajectory: &Trajectory,
        wall_time_s: f64,
    ) -> Self {
        let last = trajectory.last();
        Self {
            run_id: run_id.to_string(),
            coverage: last.coverage,
            det_m: last.det_m,
            lambda2: algebraic_connectivity(&last.x, &config.edges),
            feasibility: last.max_violation,
            kkt: last.kkt,
            mean_centroid_distance: mean_centroid_distance(&last.x, &config.domain),
            iterations: last.t,
            termination: trajectory.termination,
            wall_time_s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub run_id: String,
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub trajectory_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn trajectory_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("trajectory.{run_id}"))
}

pub fn summary_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(format!("summary.{run_id}"))
}

/// Runs the scenario and writes `trajectory.<run-id>` and `summary.<run-id>` into
/// `out_dir`, or into the config's output directory when `None`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioRun> {
    config.validate()?;
    let problem = config.problem()?;
    let init = config.initial_positions()?;
    let start = Instant::now();
    let trajectory = run_thinned(&problem, &config.solver, &init, config.thin)?;
    let wall = start.elapsed().as_secs_f64();

    let run_id = config.run_id();
    let summary = RunSummary::from_trajectory(&run_id, config, &trajectory, wall);
    let dir = out_dir.unwrap_or(&config.output.dir);
    fs::create_dir_all(dir)?;
    let file = TrajectoryFile {
        run_id: run_id.clone(),
        config: config.clone(),
        trajectory,
    };
    let trajectory_path = trajectory_path(dir, &run_id);
    let summary_path = summary_path(dir, &run_id);
    fs::write(&trajectory_path, serde_json::to_string_pretty(&file)?)?;
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(ScenarioRun {
        run_id,
        trajectory: file.trajectory,
        summary,
        trajectory_path,
        summary_path,
    })
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn load_summary(path: impl AsRef<Path>) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// All `summary.*` files in `dir`, ordered by file name.
pub fn load_run_dir(dir: impl AsRef<Path>) -> Result<Vec<RunSummary>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary."))
        })
        .collect();
    paths.sort();
    paths.iter().map(load_summary).collect()
}

/// Splits `key=v1,v2,...` into the key and its values.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected key=v1,v2,... (got {spec:?})")))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(Error::Parse(format!(
            "expected key=v1,v2,... (got {spec:?})"
        )));
    }
    Ok((key.trim().to_string(), values))
}

/// Runs `base` once per value, sequentially and in the given order.
pub fn sweep(
    base: &ScenarioConfig,
    key: &str,
    values: &[String],
    out_dir: Option<&Path>,
) -> Result<Vec<ScenarioRun>> {
    let configs = values
        .iter()
        .map(|v| base.with_param(key, v))
        .collect::<Result<Vec<_>>>()?;
    configs.iter().map(|c| run_scenario(c, out_dir)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<RunSummary>,
}

const COLUMNS: [&str; 8] = [
    "run_id",
    "H",
    "det_M",
    "lambda2",
    "feasibility",
    "kkt_max",
    "mean_centroid_dist",
    "termination",
];

fn termination_name(t: TerminationReason) -> &'static str {
    match t {
        TerminationReason::MaxIters => "max_iters",
        TerminationReason::KktTolReached => "kkt_tol_reached",
        TerminationReason::NumericalFailure => "numerical_failure",
    }
}

impl Comparison {
    fn cells(r: &RunSummary) -> [String; 8] {
        [
            r.run_id.clone(),
            format!("{:.6e}", r.coverage),
            format!("{:.6e}", r.det_m),
            format!("{:.6e}", r.lambda2),
            format!("{:.3e}", r.feasibility),
            format!("{:.3e}", r.kkt.max()),
            format!("{:.6}", r.mean_centroid_distance),
            termination_name(r.termination).to_string(),
        ]
    }

    pub fn to_text(&self) -> String {
        let body: Vec<[String; 8]> = self.rows.iter().map(Self::cells).collect();
        let mut widths = COLUMNS.map(str::len);
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&COLUMNS.map(String::from), &mut out);
        for row in &body {
            line(row, &mut out);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&Self::cells(r).join(","));
            out.push('\n');
        }
        out
    }
}

pub fn compare_runs(summaries: &[RunSummary]) -> Comparison {
    Comparison {
        rows: summaries.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"
n = 3
resolution = 20

[density]
kind = "uniform"

[edges]
w = 20.0
epsilon = 0.1

[constraints]
tau = -1.0
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.domain, Domain::unit_square());
        assert_eq!(c.thin, 1);
        assert_eq!(c.solver, SolverParams::default());
        assert_eq!(c.regularizer.kind, RegularizerKind::None);
        assert!(!c.constraints.min_distance_enabled);
        assert_eq!(c.run_id(), "tiny-seed0");
    }

    #[test]
    fn every_preset_parses() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            assert_eq!(c.name, name);
        }
        let c = preset("fig1-tau0.1").unwrap();
        assert_eq!(
            (c.n, c.constraints.tau, c.edges.w, c.edges.epsilon),
            (5, 0.1, 20.0, 0.1)
        );
        let c = preset("fig2-tau1").unwrap();
        assert_eq!((c.n, c.constraints.tau), (10, 1.0));
        assert!(matches!(&c.density, DensitySpec::Mixture { components } if components.len() == 2));
        let c = preset("fig3-alpha0.02").unwrap();
        assert_eq!(c.regularizer.kind, RegularizerKind::CentroidQuadratic);
        assert_eq!((c.regularizer.alpha, c.constraints.tau), (0.02, 0.1));
        assert!(preset("nope").is_err());
    }

    #[test]
    fn bad_beta_names_the_field() {
        let text = format!("{MINIMAL}\n[solver]\nbeta = 1.5\n");
        match ScenarioConfig::parse(&text) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "solver.beta");
                assert!(message.contains("(0, 1)"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_report_location() {
        let err = ScenarioConfig::parse("name = \"x\"\nn = = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MINIMAL}\n[solver]\ngamma = 2.0\n");
        assert!(ScenarioConfig::parse(&text).is_err());
        let text = MINIMAL.replace("n = 3", "n = 3\nsensors = 4");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn semantic_errors_name_fields() {
        let field = |text: &str| match ScenarioConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(&MINIMAL.replace("n = 3", "n = 0")), "n");
        assert_eq!(field(&MINIMAL.replace("w = 20.0", "w = -1.0")), "edges.w");
        assert_eq!(
            field(&MINIMAL.replace("resolution = 20", "resolution = 1")),
            "resolution"
        );
        let pos = format!("{MINIMAL}\n[init]\npositions = [[0.1, 0.2], [2.0, 0.5], [0.3, 0.3]]\n");
        assert_eq!(field(&pos), "init.positions");
        let dens = MINIMAL.replace(
            "kind = \"uniform\"",
            "kind = \"mixture\"\ncomponents = [{ mean = [0.5, 0.5], sigma = -0.2 }]",
        );
        assert_eq!(field(&dens), "density");
    }

    #[test]
    fn with_param_updates_and_renames() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        let t = c.with_param("tau", "0.1").unwrap();
        assert_eq!(t.constraints.tau, 0.1);
        assert_eq!(t.name, "tiny-tau0.1");
        let a = c.with_param("alpha", "0.02").unwrap();
        assert_eq!(a.regularizer.kind, RegularizerKind::CentroidQuadratic);
        let s = c.with_param("seed", "9").unwrap();
        assert_eq!((s.solver.seed, s.name.as_str()), (9, "tiny"));
        assert!(c.with_param("beta", "2").is_err());
        assert!(c.with_param("colour", "1").is_err());
        assert!(c.with_param("n", "two").is_err());
    }

    #[test]
    fn sweep_spec_parsing() {
        let (k, v) = parse_sweep("tau=-1,0.1,1").unwrap();
        assert_eq!(k, "tau");
        assert_eq!(v, vec!["-1", "0.1", "1"]);
        assert!(parse_sweep("tau").is_err());
        assert!(parse_sweep("tau=").is_err());
    }

    #[test]
    fn comparison_tables() {
        let row = |id: &str, h: f64| RunSummary {
            run_id: id.into(),
            coverage: h,
            det_m: 0.1,
            lambda2: 0.4,
            feasibility: 0.0,
            kkt: KktResidual {
                stationarity: 1e-6,
                feasibility: 0.0,
                complementarity: 0.0,
                dual_negativity: 0.0,
            },
            mean_centroid_distance: 0.12,
            iterations: 10,
            termination: TerminationReason::MaxIters,
            wall_time_s: 0.5,
        };
        let table = compare_runs(&[row("a", 0.01), row("a", 0.01)]);
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], lines[2]);
        assert!(lines[0].starts_with("run_id,H,det_M,lambda2,feasibility"));
        let text = table.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("max_iters"));
    }
}
