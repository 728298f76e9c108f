//! Python bindings: geometry, metrics, gradient bundles and the three
//! cropping methods. Scorers are plain Python callables.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use vcrop::gradcrop::Connectivity;
use vcrop::harness::CropConfig;
use vcrop::imagecore::load_image;
use vcrop::simcrop::clip_r_trace;
use vcrop::{Error, Scorer};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::Format(_) | Error::NoRegion => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) | Error::Image { .. } => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Half-open pixel box `[x0, x1) x [y0, y1)`.
#[pyclass(name = "BBox", frozen, eq, hash, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyBBox(vcrop::BBox);

#[pymethods]
impl PyBBox {
    #[new]
    fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> PyResult<Self> {
        vcrop::BBox::new(x0, y0, x1, y1).map(PyBBox).map_err(py_err)
    }

    #[getter]
    fn x0(&self) -> u32 {
        self.0.x0
    }

    #[getter]
    fn y0(&self) -> u32 {
        self.0.y0
    }

    #[getter]
    fn x1(&self) -> u32 {
        self.0.x1
    }

    #[getter]
    fn y1(&self) -> u32 {
        self.0.y1
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    #[getter]
    fn area(&self) -> u64 {
        self.0.area()
    }

    fn contains(&self, other: &PyBBox) -> bool {
        self.0.contains(&other.0)
    }

    fn intersection(&self, other: &PyBBox) -> Option<PyBBox> {
        self.0.intersection(&other.0).map(PyBBox)
    }

    fn as_tuple(&self) -> (u32, u32, u32, u32) {
        (self.0.x0, self.0.y0, self.0.x1, self.0.y1)
    }

    fn __repr__(&self) -> String {
        format!("BBox({}, {}, {}, {})", self.0.x0, self.0.y0, self.0.x1, self.0.y1)
    }
}

fn boxes_out(boxes: impl IntoIterator<Item = vcrop::BBox>) -> Vec<PyBBox> {
    boxes.into_iter().map(PyBBox).collect()
}

#[pyclass(name = "GradConfig", from_py_object)]
#[derive(Clone)]
struct PyGradConfig {
    #[pyo3(get, set)]
    k_discard: f64,
    #[pyo3(get, set)]
    kernel_size: usize,
    #[pyo3(get, set)]
    sigma: f64,
    #[pyo3(get, set)]
    patch_size: u32,
    #[pyo3(get, set)]
    n_pool: f64,
    #[pyo3(get, set)]
    expansion: f64,
    /// 4 or 8.
    #[pyo3(get, set)]
    connectivity: u8,
    #[pyo3(get, set)]
    enable_highlighting: bool,
    #[pyo3(get, set)]
    enable_highpass: bool,
    #[pyo3(get, set)]
    max_highlight_iters: usize,
}

impl From<vcrop::GradConfig> for PyGradConfig {
    fn from(c: vcrop::GradConfig) -> Self {
        Self {
            k_discard: c.k_discard,
            kernel_size: c.kernel_size,
            sigma: c.sigma,
            patch_size: c.patch_size,
            n_pool: c.n_pool,
            expansion: c.expansion,
            connectivity: match c.connectivity {
                Connectivity::Four => 4,
                Connectivity::Eight => 8,
            },
            enable_highlighting: c.enable_highlighting,
            enable_highpass: c.enable_highpass,
            max_highlight_iters: c.max_highlight_iters,
        }
    }
}

impl PyGradConfig {
    fn to_rust(&self) -> PyResult<vcrop::GradConfig> {
        let connectivity = match self.connectivity {
            4 => Connectivity::Four,
            8 => Connectivity::Eight,
            n => return Err(PyValueError::new_err(format!("connectivity must be 4 or 8, got {n}"))),
        };
        let cfg = vcrop::GradConfig {
            k_discard: self.k_discard,
            kernel_size: self.kernel_size,
            sigma: self.sigma,
            patch_size: self.patch_size,
            n_pool: self.n_pool,
            expansion: self.expansion,
            connectivity,
            enable_highlighting: self.enable_highlighting,
            enable_highpass: self.enable_highpass,
            max_highlight_iters: self.max_highlight_iters,
        };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyGradConfig {
    #[new]
    fn new() -> Self {
        vcrop::GradConfig::default().into()
    }
}

#[pyclass(name = "WindowConfig", from_py_object)]
#[derive(Clone)]
struct PyWindowConfig {
    #[pyo3(get, set)]
    patch_size: u32,
    #[pyo3(get, set)]
    window_patches: usize,
    #[pyo3(get, set)]
    stride: usize,
    #[pyo3(get, set)]
    threshold: f64,
}

impl From<vcrop::WindowConfig> for PyWindowConfig {
    fn from(c: vcrop::WindowConfig) -> Self {
        Self { patch_size: c.patch_size, window_patches: c.window_patches, stride: c.stride, threshold: c.threshold }
    }
}

impl PyWindowConfig {
    fn to_rust(&self) -> PyResult<vcrop::WindowConfig> {
        let cfg = vcrop::WindowConfig {
            patch_size: self.patch_size,
            window_patches: self.window_patches,
            stride: self.stride,
            threshold: self.threshold,
        };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyWindowConfig {
    #[new]
    fn new() -> Self {
        vcrop::WindowConfig::default().into()
    }
}

#[pyclass(name = "RecursiveConfig", from_py_object)]
#[derive(Clone)]
struct PyRecursiveConfig {
    #[pyo3(get, set)]
    ratio: f64,
    #[pyo3(get, set)]
    iterations: usize,
    #[pyo3(get, set)]
    min_side: u32,
}

impl From<vcrop::RecursiveConfig> for PyRecursiveConfig {
    fn from(c: vcrop::RecursiveConfig) -> Self {
        Self { ratio: c.ratio, iterations: c.iterations, min_side: c.min_side }
    }
}

impl PyRecursiveConfig {
    fn to_rust(&self) -> PyResult<vcrop::RecursiveConfig> {
        let cfg = vcrop::RecursiveConfig { ratio: self.ratio, iterations: self.iterations, min_side: self.min_side };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PyRecursiveConfig {
    #[new]
    fn new() -> Self {
        vcrop::RecursiveConfig::default().into()
    }
}

/// Parses a TOML config with optional `[grad]`, `[window]` and `[recursive]`
/// tables into the three config objects.
#[pyfunction]
fn parse_config(text: &str) -> PyResult<(PyGradConfig, PyWindowConfig, PyRecursiveConfig)> {
    let c = CropConfig::parse(text).map_err(py_err)?;
    Ok((c.grad.into(), c.window.into(), c.recursive.into()))
}

#[pyclass(name = "GradientBundle", from_py_object)]
#[derive(Clone)]
struct PyGradientBundle(vcrop::GradientBundle);

#[pymethods]
impl PyGradientBundle {
    #[new]
    #[pyo3(signature = (width, height, planes, question, answer, loss))]
    fn new(
        width: u32,
        height: u32,
        planes: [Vec<f32>; 3],
        question: String,
        answer: String,
        loss: f64,
    ) -> PyResult<Self> {
        vcrop::GradientBundle::new(width, height, planes, question, answer, loss).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        vcrop::GradientBundle::load(&path).map(Self).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(py_err)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        vcrop::GradientBundle::from_bytes(data).map(Self).map_err(py_err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = self.0.to_bytes().map_err(py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    #[getter]
    fn planes(&self) -> [Vec<f32>; 3] {
        self.0.planes().clone()
    }

    #[getter]
    fn question(&self) -> String {
        self.0.meta.question.clone()
    }

    #[getter]
    fn answer(&self) -> String {
        self.0.meta.answer.clone()
    }

    #[getter]
    fn loss(&self) -> f64 {
        self.0.meta.loss
    }
}

/// Adapts `scorer(image_path, prompt, boxes) -> list[float]`.
struct CallableScorer<'a, 'py>(&'a Bound<'py, PyAny>);

impl Scorer for CallableScorer<'_, '_> {
    fn score_regions(&mut self, image: &Path, prompt: &str, boxes: &[vcrop::BBox]) -> vcrop::Result<Vec<f64>> {
        let args = (image.to_path_buf(), prompt, boxes_out(boxes.iter().copied()));
        let scores = self
            .0
            .call1(args)
            .and_then(|r| r.extract::<Vec<f64>>())
            .map_err(|e| Error::Transport(format!("python scorer failed: {e}")))?;
        if scores.len() != boxes.len() {
            return Err(Error::Protocol(format!("scorer returned {} scores for {} boxes", scores.len(), boxes.len())));
        }
        Ok(scores)
    }
}

#[pyfunction]
#[pyo3(signature = (image_path, bundle, config=None))]
fn grad_crop(image_path: PathBuf, bundle: &PyGradientBundle, config: Option<PyGradConfig>) -> PyResult<PyBBox> {
    let cfg = config.map_or_else(|| Ok(vcrop::GradConfig::default()), |c| c.to_rust())?;
    let img = load_image(&image_path).map_err(py_err)?;
    vcrop::grad_crop(&img, &bundle.0, &cfg).map(PyBBox).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (image_path, prompt, scorer, config=None))]
fn clip_w_crop(
    image_path: PathBuf,
    prompt: &str,
    scorer: &Bound<'_, PyAny>,
    config: Option<PyWindowConfig>,
) -> PyResult<PyBBox> {
    let cfg = config.map_or_else(|| Ok(vcrop::WindowConfig::default()), |c| c.to_rust())?;
    vcrop::clip_w_crop(&image_path, prompt, &mut CallableScorer(scorer), &cfg).map(PyBBox).map_err(py_err)
}

/// Returns every box visited, starting with the full image.
#[pyfunction]
#[pyo3(signature = (image_path, prompt, scorer, config=None))]
fn clip_r_crop(
    image_path: PathBuf,
    prompt: &str,
    scorer: &Bound<'_, PyAny>,
    config: Option<PyRecursiveConfig>,
) -> PyResult<Vec<PyBBox>> {
    let cfg = config.map_or_else(|| Ok(vcrop::RecursiveConfig::default()), |c| c.to_rust())?;
    let (w, h) = vcrop::imagecore::image_dimensions(&image_path).map_err(py_err)?;
    clip_r_trace(&image_path, w, h, prompt, &mut CallableScorer(scorer), &cfg).map(boxes_out).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (width, height, config=None))]
fn enumerate_windows(width: u32, height: u32, config: Option<PyWindowConfig>) -> PyResult<Vec<PyBBox>> {
    let cfg = config.map_or_else(|| Ok(vcrop::WindowConfig::default()), |c| c.to_rust())?;
    vcrop::simcrop::enumerate_windows(width, height, &cfg).map(boxes_out).map_err(py_err)
}

/// Top, bottom, left and right crops keeping `ratio` of one side.
#[pyfunction]
fn directional_crops(bbox: &PyBBox, ratio: f64) -> PyResult<Vec<PyBBox>> {
    vcrop::simcrop::directional_crops(bbox.0, ratio).map(boxes_out).map_err(py_err)
}

#[pyfunction]
fn iou(a: &PyBBox, b: &PyBBox) -> f64 {
    vcrop::metrics::iou(&a.0, &b.0)
}

#[pyfunction]
fn vqa_accuracy(model_answer: &str, human_answers: Vec<String>) -> PyResult<f64> {
    vcrop::metrics::vqa_accuracy(model_answer, &human_answers).map_err(py_err)
}

#[pyfunction]
fn lcs_similarity(a: &str, b: &str) -> f64 {
    vcrop::metrics::lcs_similarity(a, b)
}

#[pyfunction]
fn normalize_answer(text: &str) -> String {
    vcrop::metrics::normalize_answer(text)
}

/// Nearest-rank percentile.
#[pyfunction]
fn percentile(values: Vec<f64>, p: f64) -> PyResult<f64> {
    vcrop::imagecore::percentile_value(&values, p).map_err(py_err)
}

#[pyfunction]
fn default_sigma(kernel_size: usize) -> f64 {
    vcrop::imagecore::default_sigma(kernel_size)
}

/// Indices of a reproducible `n`-of-`len` sample.
#[pyfunction]
fn sample_indices(len: usize, n: usize, seed: u64) -> PyResult<Vec<usize>> {
    vcrop::harness::sample_indices(len, n, seed).map_err(py_err)
}

#[pymodule]
fn pyvcrop(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBBox>()?;
    m.add_class::<PyGradConfig>()?;
    m.add_class::<PyWindowConfig>()?;
    m.add_class::<PyRecursiveConfig>()?;
    m.add_class::<PyGradientBundle>()?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(grad_crop, m)?)?;
    m.add_function(wrap_pyfunction!(clip_w_crop, m)?)?;
    m.add_function(wrap_pyfunction!(clip_r_crop, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_windows, m)?)?;
    m.add_function(wrap_pyfunction!(directional_crops, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(vqa_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(lcs_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_answer, m)?)?;
    m.add_function(wrap_pyfunction!(percentile, m)?)?;
    m.add_function(wrap_pyfunction!(default_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(sample_indices, m)?)?;
    Ok(())
}
