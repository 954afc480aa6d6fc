//! Python bindings. Structured results are returned as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qitrs::bc;
use qitrs::blind;
use qitrs::eppo;
use qitrs::ordering::{check_program, program_precedence, Mode};
use qitrs::qi::{self, QiAssignment};
use qitrs::report::{self, ReportConfig};
use qitrs::semantics::{self, Budget};

fn err(e: qitrs::Error) -> PyErr {
    match e {
        qitrs::Error::BudgetExceeded(_) | qitrs::Error::CycleDetected(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(format!("{}: {e}", e.kind())),
    }
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn mode(name: &str) -> PyResult<Mode> {
    match name {
        "ppo" => Ok(Mode::Ppo),
        "eppo" => Ok(Mode::Eppo),
        _ => Err(PyValueError::new_err("mode must be 'ppo' or 'eppo'")),
    }
}

/// A parsed constructor program.
#[pyclass(name = "Program", frozen)]
struct PyProgram {
    inner: qitrs::Program,
}

impl PyProgram {
    fn assignment(&self, qi_text: Option<&str>) -> PyResult<Option<QiAssignment>> {
        match qi_text {
            Some(t) => Ok(Some(QiAssignment::parse(&self.inner.signature, t).map_err(err)?)),
            None => QiAssignment::from_program(&self.inner).map_err(err),
        }
    }
}

#[pymethods]
impl PyProgram {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyProgram {
            inner: qitrs::parse_program(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn digest(&self) -> String {
        report::digest(&self.inner)
    }

    fn is_word_program(&self) -> bool {
        self.inner.is_word_program()
    }

    fn is_orthogonal(&self) -> bool {
        self.inner.is_orthogonal()
    }

    /// First-match call-by-value evaluation; returns the derivation.
    fn eval<'py>(&self, py: Python<'py>, term: &str) -> PyResult<Bound<'py, PyAny>> {
        let t = qitrs::parse_term(&self.inner.signature, term).map_err(err)?;
        let proof = semantics::eval_first(&self.inner, &t, Budget::default()).map_err(err)?;
        to_py(py, &semantics::proof_json(&self.inner, &proof))
    }

    #[pyo3(signature = (term, allow_nonconfluent = false))]
    fn memo<'py>(&self, py: Python<'py>, term: &str, allow_nonconfluent: bool) -> PyResult<Bound<'py, PyAny>> {
        let t = qitrs::parse_term(&self.inner.signature, term).map_err(err)?;
        let proof = semantics::eval_memo(&self.inner, &t, Budget::default(), allow_nonconfluent).map_err(err)?;
        to_py(py, &semantics::proof_json(&self.inner, &proof))
    }

    #[pyo3(signature = (mode = "ppo"))]
    fn check_order<'py>(&self, py: Python<'py>, mode: &str) -> PyResult<Bound<'py, PyAny>> {
        let m = self::mode(mode)?;
        let prec = program_precedence(&self.inner, m).map_err(err)?;
        let v = check_program(&self.inner, &prec, m).map_err(err)?;
        to_py(py, &serde_json::to_value(v).expect("serializable"))
    }

    #[pyo3(signature = (qi_text = None, seed = qi::DEFAULT_SEED))]
    fn check_qi<'py>(&self, py: Python<'py>, qi_text: Option<&str>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let a = self
            .assignment(qi_text)?
            .ok_or_else(|| PyValueError::new_err("no quasi-interpretation given"))?;
        to_py(py, &qi::check_qi(&self.inner, &a, seed).to_json())
    }

    fn blind(&self) -> PyResult<PyProgram> {
        Ok(PyProgram {
            inner: blind::blind_program(&self.inner).map_err(err)?.program,
        })
    }

    fn normalize(&self) -> PyResult<PyProgram> {
        let prec = program_precedence(&self.inner, Mode::Eppo).map_err(err)?;
        Ok(PyProgram {
            inner: eppo::normalize(&self.inner, &prec).map_err(err)?.program,
        })
    }

    /// Growth table of the main function over input sizes lo..=hi.
    fn measure<'py>(&self, py: Python<'py>, lo: usize, hi: usize) -> PyResult<Bound<'py, PyAny>> {
        let t = blind::measure_strong_poly(
            &self.inner,
            self.inner.main,
            lo..=hi,
            Budget::default(),
            blind::MeasureConfig::default(),
        )
        .map_err(err)?;
        to_py(py, &t.to_json())
    }

    #[pyo3(signature = (qi_text = None, lo = 1, hi = 8, seed = qi::DEFAULT_SEED))]
    fn certify<'py>(
        &self,
        py: Python<'py>,
        qi_text: Option<&str>,
        lo: usize,
        hi: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let a = self.assignment(qi_text)?;
        let config = ReportConfig {
            seed,
            sizes: lo..=hi,
            ..ReportConfig::default()
        };
        let r = report::certify(&self.inner, a.as_ref(), None, &config).map_err(err)?;
        to_py(py, r.to_json())
    }
}

/// Compiles a BC s-expression; returns the program text with its assignment.
#[pyfunction]
fn bc_compile(sexpr: &str) -> PyResult<String> {
    let t = bc::parse_bc(sexpr).map_err(err)?;
    Ok(bc::compile(&t).map_err(err)?.to_text())
}

#[pyfunction]
fn random_bc(seed: u64, depth_cap: usize) -> String {
    bc::random_bc(seed, depth_cap).to_sexpr()
}

#[pymodule]
fn pyqitrs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_function(wrap_pyfunction!(bc_compile, m)?)?;
    m.add_function(wrap_pyfunction!(random_bc, m)?)?;
    m.add("__version__", report::TOOL_VERSION)?;
    Ok(())
}
