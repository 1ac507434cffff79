//! Python bindings for `oam_spdc`.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use oam_spdc::analysis::{self, RateSummary, TwoSpotFit};
use oam_spdc::biphoton::{self, BeamSize};
use oam_spdc::cli::{self, Experiment};
use oam_spdc::counting::{self, MeasuredRates, ScanSetup, TripleModel};
use oam_spdc::{GateConfig, GridMap, LaguerreGaussianMode, Point, ScanGrid, SceneParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Down-conversion geometry for a pump of charge `l`.
#[pyclass(name = "Scene", frozen)]
struct PyScene {
    inner: oam_spdc::Scene,
}

#[pymethods]
impl PyScene {
    #[new]
    #[pyo3(signature = (l = 0, p = 0, z_r = 0.5))]
    fn new(l: i32, p: u32, z_r: f64) -> PyResult<Self> {
        let params = SceneParams { l, p, beam: BeamSize::RayleighRange(z_r), ..SceneParams::default() };
        Ok(Self { inner: oam_spdc::Scene::new(params).map_err(value_err)? })
    }

    #[getter]
    fn l(&self) -> i32 {
        self.inner.pump().l()
    }

    #[getter]
    fn cone_angle(&self) -> f64 {
        self.inner.cone_angle()
    }

    #[getter]
    fn ring_radius(&self) -> f64 {
        self.inner.ring_radius()
    }

    #[getter]
    fn detector_distance(&self) -> f64 {
        self.inner.detector_distance()
    }

    #[getter]
    fn pump_waist(&self) -> f64 {
        self.inner.pump().waist()
    }

    /// Azimuthal angle between signal and idler; π when unsplit.
    fn split_aperture(&self) -> PyResult<f64> {
        self.inner.split_aperture().map_err(value_err)
    }

    fn predicted_delta_y0(&self) -> PyResult<f64> {
        analysis::predicted_delta_y0(&self.inner).map_err(value_err)
    }

    fn infer_l(&self, delta_y0: f64) -> PyResult<f64> {
        analysis::infer_l_for_scene(&self.inner, delta_y0).map_err(value_err)
    }

    /// |F|² for a signal at (sx, sy) and an idler at (ix, iy) [cm].
    fn pair_density(&self, sx: f64, sy: f64, ix: f64, iy: f64) -> PyResult<f64> {
        biphoton::pair_density(&self.inner, Point::new(sx, sy), Point::new(ix, iy)).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Scene(l={}, ring_radius={:.4})", self.inner.pump().l(), self.inner.ring_radius())
    }
}

#[pyclass(name = "LGMode", frozen)]
struct PyLgMode {
    inner: LaguerreGaussianMode,
}

#[pymethods]
impl PyLgMode {
    #[new]
    fn new(l: i32, p: u32, waist: f64, wavelength: f64) -> PyResult<Self> {
        Ok(Self { inner: LaguerreGaussianMode::from_waist(l, p, waist, wavelength).map_err(value_err)? })
    }

    fn field(&self, x: f64, y: f64) -> Complex64 {
        self.inner.field(x, y)
    }

    fn intensity(&self, x: f64, y: f64) -> f64 {
        self.inner.intensity(x, y)
    }

    fn fourier(&self, qx: f64, qy: f64) -> Complex64 {
        self.inner.fourier(qx, qy)
    }

    #[getter]
    fn rayleigh_range(&self) -> f64 {
        self.inner.rayleigh_range()
    }
}

/// A scanned map: `values` is row-major with y outer.
#[pyclass(name = "Map", frozen)]
struct PyMap {
    inner: GridMap,
}

#[pymethods]
impl PyMap {
    #[new]
    fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: GridMap::new(xs, ys, values).map_err(value_err)? })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self { inner: GridMap::from_csv(text).map_err(value_err)? })
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.xs().to_vec()
    }

    #[getter]
    fn ys(&self) -> Vec<f64> {
        self.inner.ys().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn total(&self) -> f64 {
        self.inner.total()
    }

    /// Number of half-maximum regions of the smoothed map.
    fn count_regions(&self) -> usize {
        analysis::half_max_regions(&analysis::smooth_map(&self.inner)).len()
    }

    fn fit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let fit = analysis::fit_two_spots(&self.inner).map_err(runtime_err)?;
        fit_dict(py, &fit)
    }
}

fn fit_dict<'py>(py: Python<'py>, fit: &TwoSpotFit) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let spots: Vec<(f64, f64, f64, f64, f64)> =
        fit.spots.iter().map(|s| (s.amplitude, s.x, s.y, s.sigma_x, s.sigma_y)).collect();
    d.set_item("spots", spots)?;
    d.set_item("offset", fit.offset)?;
    d.set_item("rss", fit.rss)?;
    d.set_item("delta_y0", fit.delta_y0)?;
    d.set_item("iterations", fit.iterations)?;
    Ok(d)
}

fn summary_dict<'py>(py: Python<'py>, s: &RateSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("R_trig", s.r_trig)?;
    d.set_item("R_ctop", s.r_ctop)?;
    d.set_item("R_cbot", s.r_cbot)?;
    d.set_item("R_top", s.r_top)?;
    d.set_item("R_bot", s.r_bot)?;
    d.set_item("R_triple_measured", s.r_triple_measured)?;
    d.set_item("R_acc", s.r_acc)?;
    d.set_item("R_triple_true", s.r_triple_true)?;
    d.set_item("R_triple_sigma", s.r_triple_sigma)?;
    d.set_item("R_triple_true_flag", s.true_rate_flag.to_string())?;
    d.set_item("R_triple_semiclassical", s.r_triple_semiclassical)?;
    d.set_item("ratio_semiclassical_to_true", s.ratio_semiclassical_to_true)?;
    Ok(d)
}

/// Coincidence map from rastering one detector against a fixed one at (−R, 0).
#[pyfunction]
#[pyo3(signature = (scene, seed = 1, x_min = 3.2, x_max = 4.2, y_min = -1.0, y_max = 1.0, step = 0.025, dwell = 20.0, pair_rate = 2.5e8))]
#[allow(clippy::too_many_arguments)]
fn simulate_scan(
    py: Python<'_>,
    scene: &PyScene,
    seed: u64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    step: f64,
    dwell: f64,
    pair_rate: f64,
) -> PyResult<PyMap> {
    let grid = ScanGrid::new(x_min, x_max, y_min, y_max, step, dwell).map_err(value_err)?;
    let mut setup = ScanSetup::standard();
    setup.fixed = setup.fixed.moved_to(Point::new(-scene.inner.ring_radius(), 0.0));
    let scene = &scene.inner;
    let result = py
        .detach(|| counting::simulate_scan(scene, &setup, &grid, pair_rate, &GateConfig::default(), seed))
        .map_err(value_err)?;
    Ok(PyMap { inner: result.coincidence_map() })
}

/// Triple-coincidence run calibrated to the GRIN-lens rates.
#[pyfunction]
#[pyo3(signature = (model = "quantum", duration = 1e4, seed = 1, l = 4))]
fn simulate_triple<'py>(
    py: Python<'py>,
    model: &str,
    duration: f64,
    seed: u64,
    l: i32,
) -> PyResult<Bound<'py, PyDict>> {
    let model: TripleModel = model.parse().map_err(value_err)?;
    let scene = oam_spdc::Scene::new(SceneParams::with_charge(l)).map_err(value_err)?;
    let gates = GateConfig::default();
    let detectors =
        counting::TripleDetectors::on_split_spots(&scene, counting::DEFAULT_GRIN_APERTURE).map_err(value_err)?;
    let rates = counting::calibrate_triple(&MeasuredRates::grin_experiment(), &detectors, &gates).map_err(value_err)?;
    let record = py
        .detach(|| counting::simulate_triple(model, &rates, &detectors, &gates, duration, seed))
        .map_err(value_err)?;
    summary_dict(py, &analysis::summarize_rates(&record, gates.effective_window))
}

#[pyfunction]
fn accidental_rate(r_ctop: f64, r_bot: f64, r_cbot: f64, r_top: f64, tau: f64) -> f64 {
    analysis::accidental_rate(r_ctop, r_bot, r_cbot, r_top, tau)
}

#[pyfunction]
fn semiclassical_triple_rate(r_ctop: f64, r_cbot: f64, r_trig: f64) -> PyResult<f64> {
    analysis::semiclassical_triple_rate(r_ctop, r_cbot, r_trig).map_err(value_err)
}

/// Binomial OAM weights C(l, m) for m = 0..=l.
#[pyfunction]
fn oam_weights(l: u32) -> Vec<f64> {
    biphoton::oam_amplitudes(l).weights()
}

/// Runs an experiment from a config file; returns the files written.
#[pyfunction]
#[pyo3(signature = (config, experiment, seed = None, out = None))]
fn run_config(
    py: Python<'_>,
    config: PathBuf,
    experiment: &str,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> PyResult<Vec<PathBuf>> {
    let experiment: Experiment = experiment.parse().map_err(value_err)?;
    let mut cfg = cli::parse_config(&config).map_err(value_err)?;
    cfg.experiment = Some(experiment);
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    py.detach(|| cli::run(&cfg)).map_err(runtime_err)
}

#[pymodule(name = "oam_spdc")]
fn extension(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScene>()?;
    m.add_class::<PyLgMode>()?;
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(simulate_scan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_triple, m)?)?;
    m.add_function(wrap_pyfunction!(accidental_rate, m)?)?;
    m.add_function(wrap_pyfunction!(semiclassical_triple_rate, m)?)?;
    m.add_function(wrap_pyfunction!(oam_weights, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
