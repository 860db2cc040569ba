#![allow(clippy::useless_conversion)]

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rase_core::config::RunConfig;
use rase_core::experiments::ExperimentResult;
use rase_core::{oracles, runner, Error, Experiments, Orientation, SolverSettings, TailoredCoupling};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidGrid(_) | Error::InvalidArgument { .. } | Error::Config { .. } | Error::GridMismatch => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Position/detuning lattice.
#[pyclass(name = "Grid", frozen)]
#[derive(Clone)]
struct PyGrid(Arc<rase_core::Grid>);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n_z, n_delta, delta_halfspan = 5.0))]
    fn new(n_z: usize, n_delta: usize, delta_halfspan: f64) -> PyResult<Self> {
        Ok(Self(Arc::new(rase_core::make_grid(n_z, n_delta, delta_halfspan).map_err(to_py)?)))
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.0.z().to_vec()
    }

    #[getter]
    fn delta(&self) -> Vec<f64> {
        self.0.delta().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_z(), self.0.n_delta())
    }

    fn __repr__(&self) -> String {
        format!("Grid(n_z={}, n_delta={}, delta_halfspan={})", self.0.n_z(), self.0.n_delta(), self.0.delta_halfspan())
    }
}

/// Atomic density ρ(z, Δ) normalized to N atoms.
#[pyclass(name = "Density", frozen)]
struct PyDensity(rase_core::Density);

#[pymethods]
impl PyDensity {
    #[staticmethod]
    #[pyo3(signature = (grid, n_atoms = 1e6))]
    fn gaussian(grid: &PyGrid, n_atoms: f64) -> PyResult<Self> {
        Ok(Self(rase_core::gaussian_density(grid.0.clone(), n_atoms).map_err(to_py)?))
    }

    /// Row-major (z, Δ) values.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn total(&self) -> f64 {
        self.0.total()
    }

    fn z_marginal(&self) -> Vec<f64> {
        self.0.z_marginal()
    }

    fn spectral_profile(&self) -> Vec<f64> {
        self.0.spectral_profile()
    }

    /// Coupling `g` giving peak optical depth `alpha_l`.
    fn coupling_for_depth(&self, alpha_l: f64) -> PyResult<f64> {
        Ok(rase_core::coupling_for_depth(alpha_l, &self.0).map_err(to_py)?.g)
    }

    fn peak_optical_depth(&self, g: f64) -> PyResult<f64> {
        let c = rase_core::CouplingParams::new(g, rase_core::ensemble::SPEED_OF_LIGHT).map_err(to_py)?;
        Ok(rase_core::peak_optical_depth(&self.0, &c))
    }
}

/// Outcome of one rephasing run.
#[pyclass(name = "RaseResult", frozen)]
struct PyRaseResult(rase_core::RaseResult);

#[pymethods]
impl PyRaseResult {
    #[getter]
    fn emission_probability(&self) -> f64 {
        self.0.emission_probability
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.0.residual_norm
    }

    #[getter]
    fn flux_deviation(&self) -> f64 {
        self.0.flux_deviation()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.light.times.clone()
    }

    /// Exit-face intensity `c|φ(L, t)|²`.
    #[getter]
    fn intensity(&self) -> Vec<f64> {
        self.0.light.intensity()
    }

    /// Exit-face field as `(re, im)` pairs.
    #[getter]
    fn field(&self) -> Vec<(f64, f64)> {
        self.0.light.phi_exit.iter().map(|p| (p.re, p.im)).collect()
    }

    #[getter]
    fn peak_time(&self) -> f64 {
        self.0.light.peak_time()
    }

    fn __repr__(&self) -> String {
        format!(
            "RaseResult(emission_probability={:.6}, residual_norm={:.6})",
            self.0.emission_probability, self.0.residual_norm
        )
    }
}

fn columns(r: &ExperimentResult) -> BTreeMap<String, Vec<Option<f64>>> {
    r.table
        .columns()
        .iter()
        .map(|c| (c.clone(), r.table.column(c).unwrap_or_default()))
        .collect()
}

/// Solver settings plus the experiment pipelines.
#[pyclass(name = "Simulator", frozen)]
struct PySimulator(Experiments);

#[pymethods]
impl PySimulator {
    #[new]
    #[pyo3(signature = (
        n_z = 201, n_delta = 201, delta_halfspan = 5.0, dt = 1e-3, sample_interval = 1e-2,
        t_s = 4.0, t_end = 12.0, n_atoms = 1e6, mode_match = "same", tailored_coupling = "peak_depth"
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_z: usize,
        n_delta: usize,
        delta_halfspan: f64,
        dt: f64,
        sample_interval: f64,
        t_s: f64,
        t_end: f64,
        n_atoms: f64,
        mode_match: &str,
        tailored_coupling: &str,
    ) -> PyResult<Self> {
        let mode_match = match mode_match {
            "same" => Orientation::Same,
            "reversed" => Orientation::Reversed,
            other => return Err(PyValueError::new_err(format!("mode_match must be 'same' or 'reversed', got {other:?}"))),
        };
        let tailored_coupling = match tailored_coupling {
            "peak_depth" => TailoredCoupling::PeakDepth,
            "match_g" => TailoredCoupling::MatchG,
            other => {
                return Err(PyValueError::new_err(format!(
                    "tailored_coupling must be 'peak_depth' or 'match_g', got {other:?}"
                )))
            }
        };
        let settings = SolverSettings {
            n_z,
            n_delta,
            delta_halfspan,
            dt,
            sample_interval,
            t_s,
            t_end,
            n_atoms,
            mode_match,
            tailored_coupling,
        };
        Ok(Self(Experiments::new(settings).map_err(to_py)?))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    fn density(&self) -> PyResult<PyDensity> {
        Ok(PyDensity(self.0.gaussian().map_err(to_py)?))
    }

    /// Probability of no further emission within `t_s` of a detection.
    fn separation_probability(&self, py: Python<'_>, alpha_l: f64) -> PyResult<f64> {
        py.allow_threads(|| self.0.separation_probability(alpha_l)).map_err(to_py)
    }

    fn flat(&self, py: Python<'_>, alpha_l: f64) -> PyResult<PyRaseResult> {
        py.allow_threads(|| self.0.flat(alpha_l)).map(PyRaseResult).map_err(to_py)
    }

    /// `(p_separated, RaseResult)` for ASE and RASE at the same depth.
    fn mode_matched(&self, py: Python<'_>, alpha_l: f64) -> PyResult<(f64, PyRaseResult)> {
        let r = py.allow_threads(|| self.0.mode_matched(alpha_l)).map_err(to_py)?;
        Ok((r.p_separated, PyRaseResult(r.rase)))
    }

    fn tailored(&self, py: Python<'_>, alpha_l: f64) -> PyResult<PyRaseResult> {
        let r = py.allow_threads(|| self.0.tailored(alpha_l)).map_err(to_py)?;
        Ok(PyRaseResult(r.rase))
    }

    /// Run a named experiment; returns `{column: values}` with `None` for
    /// failed cells.
    #[pyo3(signature = (experiment, alpha_l, t_max = 8.0))]
    fn run(
        &self,
        py: Python<'_>,
        experiment: &str,
        alpha_l: Vec<f64>,
        t_max: f64,
    ) -> PyResult<BTreeMap<String, Vec<Option<f64>>>> {
        let ex = &self.0;
        let r = py
            .allow_threads(|| match experiment {
                "fig3" => Some(ex.run_shape_snapshots(&alpha_l)),
                "fig4" => Some(ex.run_separation_surface(&alpha_l, t_max)),
                "fig5" => Some(ex.run_mode_matched_rase(&alpha_l)),
                "fig6" => Some(ex.run_tradeoff_curve(&alpha_l)),
                "fig7" => Some(ex.run_flat_rase_scan(&alpha_l)),
                "fig8" => alpha_l.first().map(|a| ex.run_highdepth_heatmap(*a)),
                "fig9" => Some(ex.run_tailored_pipeline(&alpha_l)),
                _ => None,
            })
            .ok_or_else(|| PyValueError::new_err(format!("unknown experiment {experiment:?} or empty alpha_l")))?
            .map_err(to_py)?;
        Ok(columns(&r))
    }
}

/// Run a TOML configuration, writing CSVs and sidecars; returns the paths.
#[pyfunction]
fn run_config(py: Python<'_>, text: &str) -> PyResult<Vec<String>> {
    let cfg = RunConfig::parse(text).map_err(to_py)?;
    let report = py.allow_threads(|| runner::run(&cfg, |_, _| {})).map_err(to_py)?;
    if let Some(f) = report.failures.first() {
        return Err(PyRuntimeError::new_err(format!("scan point alpha_l = {} failed: {}", f.alpha_l, f.message)));
    }
    Ok(report.files.iter().map(|p| p.display().to_string()).collect())
}

#[pyfunction]
fn weak_coupling_survival(alpha_l: f64, t: f64) -> PyResult<f64> {
    oracles::weak_coupling_survival(alpha_l, t).map_err(to_py)
}

#[pyfunction]
fn photon_overlap(spacing: f64, tau: f64) -> PyResult<f64> {
    oracles::photon_overlap(spacing, tau).map_err(to_py)
}

/// `|φ|` of the weak-coupling echo at each time.
#[pyfunction]
#[pyo3(signature = (density, times, t_s = 4.0))]
fn analytic_echo(density: &PyDensity, times: Vec<f64>, t_s: f64) -> Vec<f64> {
    oracles::analytic_echo_profile(&density.0, t_s, &times).magnitudes()
}

#[pymodule]
fn rase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyRaseResult>()?;
    m.add_class::<PySimulator>()?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(weak_coupling_survival, m)?)?;
    m.add_function(wrap_pyfunction!(photon_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_echo, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
