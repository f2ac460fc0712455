//! Python bindings: architectures, weights, contraction, cuts and sweeps.

use num_bigint::BigUint;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tnarch::convac::{self, ConvACSpec, RepresentationInput, WeightSet};
use tnarch::graph::{self, to_analysis_graph, AnalysisGraph, ClosedFormKind, CutMethod, Weighting};
use tnarch::partition::InputPartition;
use tnarch::simulation::{run_simulation, SimulationConfig};
use tnarch::spectrum::{entanglement_measures, numerical_rank, svd_spectrum, RankRule, SingularSpectrum};

fn err(e: tnarch::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Architecture of a convolutional arithmetic circuit.
#[pyclass(name = "Spec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpec(ConvACSpec);

#[pymethods]
impl PySpec {
    #[staticmethod]
    #[pyo3(signature = (n, m, channels, classes = 1, pool = 2))]
    fn deep(n: usize, m: usize, channels: Vec<usize>, classes: usize, pool: usize) -> PyResult<Self> {
        ConvACSpec::deep(n, m, channels, classes, pool).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, width, classes = 1))]
    fn shallow(n: usize, m: usize, width: usize, classes: usize) -> PyResult<Self> {
        ConvACSpec::shallow(n, m, width, classes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: ConvACSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("spec serializes")
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m
    }

    #[getter]
    fn channels(&self) -> Vec<usize> {
        self.0.channels.clone()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.0.classes
    }

    #[getter]
    fn pool(&self) -> usize {
        self.0.pool
    }

    fn __repr__(&self) -> String {
        format!("Spec({})", self.0)
    }
}

/// Conv matrices and output matrix of a circuit.
#[pyclass(name = "Weights", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeights(WeightSet);

#[pymethods]
impl PyWeights {
    /// Standard normal weights, reproducible from `seed`.
    #[staticmethod]
    fn random(spec: &PySpec, seed: u64) -> PyResult<Self> {
        convac::random_weights(&spec.0, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(spec: &PySpec, text: &str) -> PyResult<Self> {
        let w: WeightSet = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        w.check(&spec.0).map_err(err)?;
        Ok(Self(w))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("weights serialize")
    }
}

fn partition(a: Vec<usize>, n: usize) -> PyResult<InputPartition> {
    InputPartition::new(a, n).map_err(err)
}

fn graph_of(spec: &PySpec, w: &PyWeights) -> PyResult<AnalysisGraph> {
    to_analysis_graph(&convac::build_tn(&spec.0, &w.0).map_err(err)?).map_err(err)
}

/// Class scores for representation vectors `x[j][d]`.
#[pyfunction]
fn forward(spec: &PySpec, weights: &PyWeights, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    convac::forward(&spec.0, &weights.0, &RepresentationInput { x }).map_err(err)
}

/// Class scores by contracting the circuit's tensor network.
#[pyfunction]
fn contract_scores(spec: &PySpec, weights: &PyWeights, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let tn = convac::build_tn_with_inputs(&spec.0, &weights.0, &RepresentationInput { x }).map_err(err)?;
    Ok(tn.contract().map_err(err)?.into_data())
}

/// Weights tensor of a zero-based class as `(shape, row-major data)`.
#[pyfunction]
#[pyo3(signature = (spec, weights, class_index = 0))]
fn weights_tensor(spec: &PySpec, weights: &PyWeights, class_index: usize) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let t = convac::weights_tensor(&spec.0, &weights.0, class_index).map_err(err)?;
    Ok((t.shape().to_vec(), t.into_data()))
}

/// Rank, entanglement measures and cut bounds for the zero-based inputs in `a`.
#[pyfunction]
#[pyo3(signature = (spec, weights, a, class_index = 0, tol = None))]
fn analyze<'py>(
    py: Python<'py>,
    spec: &PySpec,
    weights: &PyWeights,
    a: Vec<usize>,
    class_index: usize,
    tol: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = partition(a, spec.0.n)?;
    let rule: RankRule = match tol {
        Some(t) => t.parse().map_err(err)?,
        None => RankRule::default(),
    };
    rule.validate().map_err(err)?;
    let t = convac::weights_tensor(&spec.0, &weights.0, class_index).map_err(err)?;
    let mat = t.matricize(&p.to_index_partition()).map_err(err)?;
    let tol = rule.tolerance(mat.shape()[0], mat.shape()[1]);
    let s = svd_spectrum(&mat).map_err(err)?;
    let rep = entanglement_measures(&s, tol).map_err(err)?;
    let g = graph_of(spec, weights)?;
    let (lb, base) = g.rank_lower_bound(&p).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rank", numerical_rank(&s, tol))?;
    d.set_item("entropy", rep.entropy)?;
    d.set_item("geometric", rep.geometric)?;
    d.set_item("schmidt", rep.schmidt)?;
    d.set_item("tolerance_used", tol)?;
    d.set_item("singular_values", s.values().to_vec())?;
    d.set_item("mincut", g.min_cut(&p).map_err(err)?.weight)?;
    d.set_item("modified_mincut", g.modified_min_cut(&p).map_err(err)?.weight)?;
    d.set_item("lower_bound", lb)?;
    d.set_item("lower_bound_base", base)?;
    Ok(d)
}

/// Minimum cut separating the zero-based inputs in `a` from the rest.
#[pyfunction]
#[pyo3(signature = (spec, weights, a, modified = false, exhaustive = false))]
fn min_cut<'py>(
    py: Python<'py>,
    spec: &PySpec,
    weights: &PyWeights,
    a: Vec<usize>,
    modified: bool,
    exhaustive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let p = partition(a, spec.0.n)?;
    let weighting = if modified { Weighting::Modified } else { Weighting::Plain };
    let method = if exhaustive { CutMethod::Exhaustive } else { CutMethod::Flow };
    let report = graph_of(spec, weights)?.min_cut_with(&p, weighting, method).map_err(err)?;
    let out = to_py(py, &report)?;
    out.set_item("weight", report.weight)?;
    Ok(out)
}

/// Power-rounding lower bound on the rank, with the base that attains it.
#[pyfunction]
fn lower_bound(spec: &PySpec, weights: &PyWeights, a: Vec<usize>) -> PyResult<(BigUint, usize)> {
    let p = partition(a, spec.0.n)?;
    graph_of(spec, weights)?.rank_lower_bound(&p).map_err(err)
}

/// Closed-form min-cut: `kind` is "left_right", "interleaved" or "shallow" (with `a_size`).
#[pyfunction]
#[pyo3(signature = (spec, kind, a_size = None))]
fn closed_form(spec: &PySpec, kind: &str, a_size: Option<usize>) -> PyResult<BigUint> {
    let kind = match (kind, a_size) {
        ("left_right", _) => ClosedFormKind::LeftRight,
        ("interleaved", _) => ClosedFormKind::Interleaved,
        ("shallow", Some(a_size)) => ClosedFormKind::Shallow { a_size },
        ("shallow", None) => return Err(PyValueError::new_err("the shallow form needs a_size")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown closed form {other:?}"))),
    };
    graph::closed_form(&spec.0, kind).map_err(err)
}

/// Entanglement measures of a singular spectrum.
#[pyfunction]
#[pyo3(signature = (values, tol = 1e-7))]
fn entanglement<'py>(py: Python<'py>, values: Vec<f64>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let s = SingularSpectrum::new(values).map_err(err)?;
    to_py(py, &entanglement_measures(&s, tol).map_err(err)?)
}

/// Layer advice for segment length `feature_size`.
#[pyfunction]
fn advise<'py>(py: Python<'py>, spec: &PySpec, feature_size: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &tnarch::advise::advise(&spec.0, feature_size).map_err(err)?)
}

/// Rank versus min-cut sweep. Returns `(summary, records)`.
#[pyfunction]
#[pyo3(signature = (
    n = 16, m = 2, dims = vec![2, 3, 5, 7, 11, 13], arrangements = "all", partitions = "all",
    seed = 0, tol = "machine", threads = None, weight_seeds = 1, pool = 2
))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    n: usize,
    m: usize,
    dims: Vec<usize>,
    arrangements: &str,
    partitions: &str,
    seed: u64,
    tol: &str,
    threads: Option<usize>,
    weight_seeds: usize,
    pool: usize,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let cfg = SimulationConfig {
        n,
        m,
        dim_pool: dims,
        pool,
        arrangements: arrangements.parse().map_err(err)?,
        partitions: partitions.parse().map_err(err)?,
        master_seed: seed,
        weight_seeds_per_config: weight_seeds,
        rank_tol: tol.parse().map_err(err)?,
        threads,
    };
    let report = py.detach(|| run_simulation(&cfg)).map_err(err)?;
    Ok((to_py(py, &report.summary)?, to_py(py, &report.records)?))
}

#[pymodule]
fn pytnarch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyWeights>()?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(contract_scores, m)?)?;
    m.add_function(wrap_pyfunction!(weights_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(min_cut, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(advise, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
