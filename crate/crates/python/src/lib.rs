//! Python bindings for the heralded-CNOT simulator.
//!
//! Build with `cargo build -p opticnot-python --release` and rename the
//! resulting `libopticnot_py.so` to `opticnot_py.so` somewhere on the Python
//! path (see `python/smoke_test.py`).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use opticnot::design;
use opticnot::experiment;
use opticnot::protocol;
use opticnot::qubit::{BellState, TwoQubitDensity};
use opticnot::source;
use opticnot::tomography;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Nested = Vec<Vec<[f64; 2]>>;

fn density_from_nested(nested: Nested) -> PyResult<TwoQubitDensity> {
    TwoQubitDensity::from_nested(&nested)
        .ok_or_else(|| PyValueError::new_err("density matrix must be 4x4 [re, im] pairs"))
}

fn bell_by_name(name: &str) -> PyResult<BellState> {
    BellState::ALL
        .iter()
        .copied()
        .find(|b| b.name() == name)
        .ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown Bell state {name:?}; expected phi_plus, phi_minus, psi_plus or psi_minus"
            ))
        })
}

/// Gate noise parameters.
#[pyclass(name = "NoiseConfig", from_py_object)]
#[derive(Clone)]
struct PyNoiseConfig {
    inner: protocol::NoiseConfig,
}

#[pymethods]
impl PyNoiseConfig {
    #[new]
    #[pyo3(signature = (cross_overlap=1.0, ancilla_fidelity=1.0, pbs_leakage=0.0))]
    fn new(cross_overlap: f64, ancilla_fidelity: f64, pbs_leakage: f64) -> PyResult<Self> {
        let inner = protocol::NoiseConfig {
            cross_overlap,
            ancilla_fidelity,
            pbs_leakage,
        };
        inner.validate().map_err(err)?;
        Ok(PyNoiseConfig { inner })
    }

    /// Measured source and chip quality: overlap 0.88, fidelity 0.945,
    /// splitter extinction 50:1.
    #[staticmethod]
    fn calibrated() -> Self {
        PyNoiseConfig {
            inner: protocol::NoiseConfig::CALIBRATED,
        }
    }

    #[getter]
    fn cross_overlap(&self) -> f64 {
        self.inner.cross_overlap
    }

    #[getter]
    fn ancilla_fidelity(&self) -> f64 {
        self.inner.ancilla_fidelity
    }

    #[getter]
    fn pbs_leakage(&self) -> f64 {
        self.inner.pbs_leakage
    }

    fn __repr__(&self) -> String {
        format!(
            "NoiseConfig(cross_overlap={}, ancilla_fidelity={}, pbs_leakage={})",
            self.inner.cross_overlap, self.inner.ancilla_fidelity, self.inner.pbs_leakage
        )
    }
}

/// Elliptical Gaussian mode, radii in µm.
#[pyclass(name = "GaussianMode", from_py_object)]
#[derive(Clone)]
struct PyGaussianMode {
    inner: design::GaussianMode,
}

#[pymethods]
impl PyGaussianMode {
    #[new]
    fn new(wx: f64, wy: f64) -> PyResult<Self> {
        Ok(PyGaussianMode {
            inner: design::GaussianMode::new(wx, wy).map_err(err)?,
        })
    }

    /// From mode-field diameters.
    #[staticmethod]
    fn from_mfd(dx: f64, dy: f64) -> PyResult<Self> {
        Ok(PyGaussianMode {
            inner: design::GaussianMode::from_mfd(dx, dy).map_err(err)?,
        })
    }

    #[getter]
    fn wx(&self) -> f64 {
        self.inner.wx
    }

    #[getter]
    fn wy(&self) -> f64 {
        self.inner.wy
    }

    fn __repr__(&self) -> String {
        format!("GaussianMode(wx={}, wy={})", self.inner.wx, self.inner.wy)
    }
}

/// Power overlap of two aligned elliptical Gaussian modes.
#[pyfunction]
fn overlap_efficiency(m1: &PyGaussianMode, m2: &PyGaussianMode) -> f64 {
    design::overlap_efficiency(&m1.inner, &m2.inner)
}

/// Relative improvement `eta_new/eta_old - 1`.
#[pyfunction]
fn improvement_ratio(eta_new: f64, eta_old: f64) -> f64 {
    design::improvement_ratio(eta_new, eta_old)
}

/// Find the splitter length for polarization-dependent coupling rates.
/// Returns a dict with length_mm, leakage, leakage_h, leakage_v.
#[pyfunction]
fn design_pbs(
    py: Python<'_>,
    kappa_h: f64,
    kappa_v: f64,
    max_length_mm: f64,
) -> PyResult<Bound<'_, pyo3::types::PyDict>> {
    let d = design::design_pbs(kappa_h, kappa_v, max_length_mm).map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("length_mm", d.spec.length_mm)?;
    dict.set_item("leakage", d.leakage())?;
    dict.set_item("leakage_h", d.leakage_h)?;
    dict.set_item("leakage_v", d.leakage_v)?;
    Ok(dict)
}

/// Right-to-wrong port power ratio of a splitter averaged over a top-hat
/// spectrum.
#[pyfunction]
#[pyo3(signature = (kappa_h, kappa_v, length_mm, bandwidth_nm, dkappa=0.0, design_wavelength_nm=789.0))]
fn extinction_over_bandwidth(
    kappa_h: f64,
    kappa_v: f64,
    length_mm: f64,
    bandwidth_nm: f64,
    dkappa: f64,
    design_wavelength_nm: f64,
) -> PyResult<f64> {
    let spec = design::CouplerSpec {
        kappa_h,
        kappa_v,
        length_mm,
        dkappa_h: dkappa,
        dkappa_v: dkappa,
        design_wavelength_nm,
    };
    design::extinction_over_bandwidth(&spec, bandwidth_nm).map_err(err)
}

/// Two-photon interference visibility for a squared wavepacket overlap.
#[pyfunction]
fn hom_visibility(cross_overlap: f64) -> PyResult<f64> {
    source::hom_visibility(&source::DistinguishabilityModel { cross_overlap }).map_err(err)
}

/// Total herald probability for a product input
/// `(alpha|H> + beta|V>) ⊗ (gamma|H> + delta|V>)`.
#[pyfunction]
#[pyo3(signature = (control, target, noise=None))]
fn herald_probability(
    control: (Complex64, Complex64),
    target: (Complex64, Complex64),
    noise: Option<PyNoiseConfig>,
) -> PyResult<f64> {
    let pair = protocol::QubitPair::new(control, target).map_err(err)?;
    let noise = noise.map(|n| n.inner).unwrap_or(protocol::NoiseConfig::IDEAL);
    protocol::herald_probability(&pair, &noise).map_err(err)
}

/// Run the heralded gate; returns one dict per herald branch with the
/// branch label, probability, conditional density matrix (before
/// feed-forward) and the feed-forward-corrected matrix.
#[pyfunction]
#[pyo3(signature = (control, target, noise=None))]
fn run_gate<'py>(
    py: Python<'py>,
    control: (Complex64, Complex64),
    target: (Complex64, Complex64),
    noise: Option<PyNoiseConfig>,
) -> PyResult<Bound<'py, pyo3::types::PyList>> {
    let pair = protocol::QubitPair::new(control, target).map_err(err)?;
    let noise = noise.map(|n| n.inner).unwrap_or(protocol::NoiseConfig::IDEAL);
    let outcomes = protocol::run_gate(&pair, &noise).map_err(err)?;
    let list = pyo3::types::PyList::empty(py);
    for o in &outcomes {
        let corrected = protocol::apply_feedforward(o, &protocol::STANDARD_FEED_FORWARD);
        let dict = pyo3::types::PyDict::new(py);
        dict.set_item("branch", experiment::branch_label(o.ancilla1, o.ancilla2))?;
        dict.set_item("probability", o.probability)?;
        dict.set_item("density_matrix", o.conditional.to_nested())?;
        dict.set_item("density_matrix_corrected", corrected.to_nested())?;
        list.append(dict)?;
    }
    Ok(list)
}

/// Herald-conditioned computational truth table with feed-forward, rows and
/// columns ordered HH, HV, VH, VV.
#[pyfunction]
#[pyo3(signature = (noise=None))]
fn truth_table(noise: Option<PyNoiseConfig>) -> PyResult<[[f64; 4]; 4]> {
    let noise = noise.map(|n| n.inner).unwrap_or(protocol::NoiseConfig::IDEAL);
    protocol::truth_table(&noise).map_err(err)
}

/// Mean probability of the ideal CNOT output over the four inputs.
#[pyfunction]
fn truth_table_overlap(table: [[f64; 4]; 4]) -> f64 {
    protocol::truth_table_overlap(&table, &protocol::cnot_ideal_table())
}

/// Maximum-likelihood reconstruction from 9x4 counts (settings ordered
/// HH, HD, HL, DH, ..., LL; outcomes 00, 01, 10, 11). Returns the density
/// matrix as nested [re, im] pairs.
#[pyfunction]
fn mle_reconstruct(counts: [[f64; 4]; 9]) -> PyResult<Nested> {
    let result = tomography::mle_reconstruct(&counts).map_err(err)?;
    Ok(result.rho.to_nested())
}

/// `<psi| rho |psi>` against a named Bell state.
#[pyfunction]
fn fidelity_to_bell(rho: Nested, bell: &str) -> PyResult<f64> {
    let rho = density_from_nested(rho)?;
    Ok(tomography::fidelity(&rho, &bell_by_name(bell)?.ket()))
}

/// Compensate per-qubit H/V phases toward a named Bell state; returns
/// `(rho, (phi1, phi2), fidelity)`.
#[pyfunction]
fn compensate_local_unitaries(
    rho: Nested,
    bell: &str,
) -> PyResult<(Nested, (f64, f64), f64)> {
    let rho = density_from_nested(rho)?;
    let target = bell_by_name(bell)?.ket();
    let (compensated, phases) = tomography::compensate_local_unitaries(&rho, &target);
    let f = tomography::fidelity(&compensated, &target);
    Ok((compensated.to_nested(), phases, f))
}

/// Simulated truth-table experiment with double-pair noise, Poissonian
/// counts, subtraction and Monte-Carlo errors. Returns a summary dict.
#[pyfunction]
#[pyo3(signature = (noise=None, integration_time_s=3600.0, mc_samples=200, seed=1))]
fn truth_table_experiment<'py>(
    py: Python<'py>,
    noise: Option<PyNoiseConfig>,
    integration_time_s: f64,
    mc_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let noise = noise.map(|n| n.inner).unwrap_or(protocol::NoiseConfig::CALIBRATED);
    let exp = experiment::truth_table_experiment(
        &noise,
        &experiment::RateModel::default(),
        integration_time_s,
        mc_samples,
        seed,
    )
    .map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("analytic_table", exp.analytic_table)?;
    dict.set_item("analytic_overlap", exp.analytic_overlap)?;
    dict.set_item("estimated_table", exp.estimated_table)?;
    dict.set_item("estimated_overlap", exp.estimated_overlap)?;
    dict.set_item("overlap_std", exp.overlap_std)?;
    Ok(dict)
}

#[pymodule]
fn opticnot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseConfig>()?;
    m.add_class::<PyGaussianMode>()?;
    m.add_function(wrap_pyfunction!(overlap_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(improvement_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(design_pbs, m)?)?;
    m.add_function(wrap_pyfunction!(extinction_over_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(hom_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(herald_probability, m)?)?;
    m.add_function(wrap_pyfunction!(run_gate, m)?)?;
    m.add_function(wrap_pyfunction!(truth_table, m)?)?;
    m.add_function(wrap_pyfunction!(truth_table_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(mle_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_to_bell, m)?)?;
    m.add_function(wrap_pyfunction!(compensate_local_unitaries, m)?)?;
    m.add_function(wrap_pyfunction!(truth_table_experiment, m)?)?;
    Ok(())
}
