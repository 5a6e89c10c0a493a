//! Python bindings: Paulis, trap codes, security estimates and the experiment driver.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qotp_lab::cotp::{exact_forgery_odds, Gf2k};
use qotp_lab::css::code_by_name;
use qotp_lab::harness::{run_experiment as run_harness, to_canonical_json, Command, ExperimentConfig};
use qotp_lab::pauli::{PauliKind, PauliOperator};
use qotp_lab::qotp::parse_gate;
use qotp_lab::rng::child_rng;
use qotp_lab::trap::{estimate_attack_security, TrapCode, TrapFamily, Verdict};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn letter(s: &str) -> PyResult<PauliKind> {
    match s {
        "I" => Ok(PauliKind::I),
        "X" => Ok(PauliKind::X),
        "Y" => Ok(PauliKind::Y),
        "Z" => Ok(PauliKind::Z),
        _ => Err(err(format!("not a Pauli letter: {s:?}"))),
    }
}

/// An n-qubit Pauli operator with phase, written like `"+XIZ"` or `"-iYY"`.
#[pyclass(name = "Pauli", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyPauli(PauliOperator);

#[pymethods]
impl PyPauli {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(PyPauli).map_err(err)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        PyPauli(PauliOperator::identity(n))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn support(&self) -> Vec<usize> {
        self.0.support()
    }

    fn commutes_with(&self, other: &PyPauli) -> bool {
        self.0.commutes_with(&other.0)
    }

    /// `P` after the gate `name` on `wires`, i.e. `G P G*`.
    fn conjugated(&self, name: &str, wires: Vec<usize>) -> PyResult<Self> {
        let g = parse_gate(name, &wires).map_err(err)?;
        let mut p = self.0.clone();
        p.conjugate_forward_gate(&g);
        Ok(PyPauli(p))
    }

    fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.to_dense();
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
    }

    fn __mul__(&self, other: &PyPauli) -> PyResult<Self> {
        self.0.try_mul(&other.0).map(PyPauli).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Pauli('{}')", self.0.to_text())
    }
}

/// One member of a trap-code family, fixed by its permutation.
#[pyclass(name = "TrapCode", frozen)]
struct PyTrapCode(TrapCode);

#[pymethods]
impl PyTrapCode {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn data_qubit(&self) -> usize {
        self.0.data_phys()
    }

    fn stabilizers(&self) -> Vec<PyPauli> {
        self.0.stabilizers().into_iter().map(PyPauli).collect()
    }

    /// `"reject"`, `"trivial_accept"` or `"nontrivial_accept"`.
    fn classify(&self, attack: &PyPauli) -> PyResult<&'static str> {
        Ok(match self.0.classify(&attack.0).map_err(err)?.verdict {
            Verdict::Reject => "reject",
            Verdict::TrivialAccept => "trivial_accept",
            Verdict::NontrivialAccept => "nontrivial_accept",
        })
    }
}

/// Trap codes over a base CSS code: `"steane"` or `"toy"`, concatenated `levels` times.
#[pyclass(name = "TrapFamily", frozen)]
struct PyTrapFamily(TrapFamily);

#[pymethods]
impl PyTrapFamily {
    #[new]
    #[pyo3(signature = (base = "steane", levels = 1))]
    fn new(base: &str, levels: usize) -> PyResult<Self> {
        let code = code_by_name(base, levels).map_err(err)?;
        TrapFamily::new(code).map(PyTrapFamily).map_err(err)
    }

    #[getter]
    fn block_len(&self) -> usize {
        self.0.block_len()
    }

    #[getter]
    fn distance(&self) -> usize {
        self.0.base().distance()
    }

    fn sample(&self, seed: u64) -> PyTrapCode {
        PyTrapCode(self.0.sample(&mut child_rng(seed)))
    }

    /// `(nontrivial, accepted, total)` over all placements of `letter` on `weight` positions.
    fn exact_letter_counts(&self, letter_name: &str, weight: usize) -> PyResult<(u64, u64, u64)> {
        self.0.exact_uniform_letter_counts(letter(letter_name)?, weight).map_err(err)
    }

    /// Monte-Carlo nontrivial-accept rate of `attack` over `samples` permutations.
    #[pyo3(signature = (attack, samples, seed = 0))]
    fn estimate_security<'py>(&self, py: Python<'py>, attack: &PyPauli, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let e = estimate_attack_security(&self.0, &attack.0, samples, &mut child_rng(seed)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("samples", e.samples)?;
        d.set_item("nontrivial", e.nontrivial)?;
        d.set_item("accepted", e.accepted)?;
        d.set_item("eps_hat", e.eps_hat)?;
        d.set_item("ci_lo", e.ci_lo)?;
        d.set_item("ci_hi", e.ci_hi)?;
        d.set_item("bound", e.bound)?;
        Ok(d)
    }
}

/// `(best, worst)` forgery odds of the one-time MAC over GF(2^kappa), by enumeration.
#[pyfunction]
fn forgery_odds(kappa: u32, m: u64, m2: u64) -> PyResult<(f64, f64)> {
    let odds = exact_forgery_odds(Gf2k::new(kappa).map_err(err)?, m, m2).map_err(err)?;
    Ok((odds.best, odds.worst))
}

/// Names accepted as `command` by [`run_experiment`].
#[pyfunction]
fn commands() -> Vec<&'static str> {
    Command::ALL.iter().map(|c| c.name()).collect()
}

/// Runs an experiment from its JSON configuration and returns the canonical JSON report.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let config = ExperimentConfig::from_json(config_json).map_err(err)?;
    let report = py.detach(|| run_harness(&config)).map_err(err)?;
    to_canonical_json(&report).map_err(err)
}

#[pymodule]
pub fn qotp_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauli>()?;
    m.add_class::<PyTrapCode>()?;
    m.add_class::<PyTrapFamily>()?;
    m.add_function(wrap_pyfunction!(forgery_odds, m)?)?;
    m.add_function(wrap_pyfunction!(commands, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
