//! Python bindings: edge weights, connectivity measures, MFCQ checks and scenario runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sensornet::connectivity;
use sensornet::constraints::mfcq_diagnostic;
use sensornet::scenario::{self, ScenarioConfig};
use sensornet::{ConstraintSpec, EdgeWeightParams, Error, SensorConfiguration};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Numerical(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn config(points: Vec<Vec<f64>>) -> PyResult<SensorConfiguration> {
    SensorConfiguration::from_points(&points).map_err(to_py)
}

/// Sigmoid edge weights `a(d) = 1 / (1 + exp(-w (epsilon - d)))`.
#[pyclass(name = "EdgeWeights", frozen)]
struct PyEdgeWeights {
    inner: EdgeWeightParams,
}

#[pymethods]
impl PyEdgeWeights {
    #[new]
    #[pyo3(signature = (w = 20.0, epsilon = 0.1))]
    fn new(w: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self {
            inner: EdgeWeightParams::new(w, epsilon).map_err(to_py)?,
        })
    }

    #[getter]
    fn w(&self) -> f64 {
        self.inner.w
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn weight(&self, distance: f64) -> f64 {
        self.inner.weight(distance)
    }

    /// Distance at which the weight equals `threshold`.
    fn threshold_distance(&self, threshold: f64) -> PyResult<f64> {
        self.inner.threshold_distance(threshold).map_err(to_py)
    }

    fn det_m(&self, positions: Vec<Vec<f64>>) -> PyResult<f64> {
        Ok(connectivity::det_m(&config(positions)?, &self.inner))
    }

    /// Gradient of `det M`, stacked per sensor.
    fn grad_det_m(&self, positions: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        connectivity::grad_det_m(&config(positions)?, &self.inner).map_err(to_py)
    }

    fn algebraic_connectivity(&self, positions: Vec<Vec<f64>>) -> PyResult<f64> {
        Ok(connectivity::algebraic_connectivity(
            &config(positions)?,
            &self.inner,
        ))
    }

    #[pyo3(signature = (positions, threshold = 0.5))]
    fn threshold_edges(
        &self,
        positions: Vec<Vec<f64>>,
        threshold: f64,
    ) -> PyResult<Vec<(usize, usize)>> {
        Ok(connectivity::threshold_edges(
            &config(positions)?,
            &self.inner,
            threshold,
        ))
    }

    /// `(certified, margin)` for the connectivity constraint `tau - det M <= 0`.
    #[pyo3(signature = (positions, tau, activation_tol = 1e-6))]
    fn mfcq(
        &self,
        positions: Vec<Vec<f64>>,
        tau: f64,
        activation_tol: f64,
    ) -> PyResult<(bool, Option<f64>)> {
        let x = config(positions)?;
        let spec = ConstraintSpec::connectivity_only(tau);
        let report = mfcq_diagnostic(&x, &self.inner, &spec, activation_tol).map_err(to_py)?;
        Ok((report.is_satisfied(), report.margin()))
    }

    fn __repr__(&self) -> String {
        format!(
            "EdgeWeights(w={}, epsilon={})",
            self.inner.w, self.inner.epsilon
        )
    }
}

#[pyclass(name = "RunSummary", frozen, get_all)]
struct PyRunSummary {
    run_id: String,
    coverage: f64,
    det_m: f64,
    lambda2: f64,
    feasibility: f64,
    kkt: f64,
    mean_centroid_distance: f64,
    iterations: usize,
    termination: String,
    trajectory_path: String,
    summary_path: String,
    final_positions: Vec<Vec<f64>>,
}

#[pymethods]
impl PyRunSummary {
    fn __repr__(&self) -> String {
        format!(
            "RunSummary(run_id={:?}, coverage={:.6e}, det_m={:.6e}, termination={})",
            self.run_id, self.coverage, self.det_m, self.termination
        )
    }
}

/// A scenario config, parsed from TOML or taken from a built-in preset.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: ScenarioConfig::parse(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::load_config(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scenario::preset(name).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn run_id(&self) -> String {
        self.inner.run_id()
    }

    /// Copy with one parameter replaced, as in a sweep.
    fn with_param(&self, key: &str, value: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_param(key, value).map_err(to_py)?,
        })
    }

    /// Runs the solver, writes the trajectory and summary files and returns the summary.
    #[pyo3(signature = (out_dir = None))]
    fn run(&self, py: Python<'_>, out_dir: Option<PathBuf>) -> PyResult<PyRunSummary> {
        let cfg = self.inner.clone();
        let run = py
            .detach(move || scenario::run_scenario(&cfg, out_dir.as_deref()))
            .map_err(to_py)?;
        let s = &run.summary;
        let termination = serde_json::to_value(s.termination)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_else(|| format!("{:?}", s.termination));
        Ok(PyRunSummary {
            run_id: run.run_id.clone(),
            coverage: s.coverage,
            det_m: s.det_m,
            lambda2: s.lambda2,
            feasibility: s.feasibility,
            kkt: s.kkt.max(),
            mean_centroid_distance: s.mean_centroid_distance,
            iterations: s.iterations,
            termination,
            trajectory_path: run.trajectory_path.display().to_string(),
            summary_path: run.summary_path.display().to_string(),
            final_positions: run.trajectory.final_state.x.to_points(),
        })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, n={})", self.inner.name, self.inner.n)
    }
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    scenario::preset_names().collect()
}

/// Parsed contents of a trajectory file as plain Python objects.
#[pyfunction]
fn load_trajectory(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    let text = std::fs::read_to_string(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
    let file: scenario::TrajectoryFile =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let canonical =
        serde_json::to_string(&file).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py
        .import("json")?
        .call_method1("loads", (canonical,))?
        .unbind())
}

#[pymodule]
fn sensornet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEdgeWeights>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(load_trajectory, m)?)?;
    Ok(())
}
