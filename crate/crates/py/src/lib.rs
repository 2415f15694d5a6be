//! Python bindings: parse, analyze, recognize and oracle checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use janus_core::analyzer::{analyze as run_analyzer, AnalyzerConfig};
use janus_core::financial::{
    build_vpg, classify_financial_with, RecognitionConfig, RecognitionMode,
};
use janus_core::frontend::{parse as parse_source, ContractAST};
use janus_core::graphs::build_facts;
use janus_core::oracle::check_theorems;
use janus_core::report::{run_pipeline, PipelineOptions, RiskReport};

fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

/// A parsed and validated MiniSol contract.
#[pyclass(frozen)]
pub struct Contract {
    ast: ContractAST,
}

#[pymethods]
impl Contract {
    #[getter]
    fn name(&self) -> String {
        self.ast.name.clone()
    }

    #[getter]
    fn state_vars(&self) -> Vec<String> {
        self.ast.state_vars.iter().map(|v| v.name.clone()).collect()
    }

    #[getter]
    fn functions(&self) -> Vec<String> {
        self.ast.entry_functions().map(|f| f.name.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Contract({:?}, {} state vars)",
            self.ast.name,
            self.ast.state_vars.len()
        )
    }
}

/// The risk report for one contract.
#[pyclass(frozen)]
pub struct Report {
    inner: RiskReport,
}

#[pymethods]
impl Report {
    #[getter]
    fn contract(&self) -> String {
        self.inner.contract.clone()
    }

    #[getter]
    fn is_risky(&self) -> bool {
        self.inner.is_risky()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.exit_code()
    }

    #[getter]
    fn categories(&self) -> Vec<String> {
        self.inner
            .categories()
            .iter()
            .map(|c| c.to_string())
            .collect()
    }

    #[getter]
    fn financial_variables(&self) -> Vec<String> {
        self.inner.financial_variables.clone()
    }

    #[getter]
    fn risks(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.risks)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("serializable")
    }

    fn __repr__(&self) -> String {
        format!(
            "Report({:?}, risks={:?})",
            self.inner.contract,
            self.categories()
        )
    }
}

fn contract_of(src: &Bound<'_, PyAny>) -> PyResult<ContractAST> {
    if let Ok(c) = src.cast::<Contract>() {
        return Ok(c.get().ast.clone());
    }
    let text: String = src.extract()?;
    parse_source(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Parse MiniSol source; raises ValueError with `line:col: message`.
#[pyfunction]
fn parse(source: &str) -> PyResult<Contract> {
    parse_source(source)
        .map(|ast| Contract { ast })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run the full pipeline on a Contract or source string.
#[pyfunction]
#[pyo3(signature = (contract, depth_budget=None, financial_vars=None, name_only=false))]
fn analyze(
    contract: &Bound<'_, PyAny>,
    depth_budget: Option<usize>,
    financial_vars: Option<Vec<String>>,
    name_only: bool,
) -> PyResult<Report> {
    let ast = contract_of(contract)?;
    let mut opts = PipelineOptions::default();
    if let Some(d) = depth_budget {
        opts.analyzer.max_rounds = d.max(1);
    }
    opts.recognition.overrides = financial_vars.map(|v| v.into_iter().collect());
    if name_only {
        opts.recognition.mode = RecognitionMode::NameOnly;
    }
    let out =
        run_pipeline(&ast, None, &opts).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(Report { inner: out.report })
}

/// Raw difference set (summaries, provenance, round log) as a dict.
#[pyfunction]
#[pyo3(signature = (contract, depth_budget=None))]
fn differences(
    py: Python<'_>,
    contract: &Bound<'_, PyAny>,
    depth_budget: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let ast = contract_of(contract)?;
    let mut cfg = AnalyzerConfig::default();
    if let Some(d) = depth_budget {
        cfg.max_rounds = d.max(1);
    }
    let dset = run_analyzer(&ast, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &dset)
}

/// Financial-variable verdicts: list of dicts with variable, is_financial, score, evidence.
#[pyfunction]
#[pyo3(signature = (contract, name_only=false))]
fn recognize(py: Python<'_>, contract: &Bound<'_, PyAny>, name_only: bool) -> PyResult<Py<PyAny>> {
    let ast = contract_of(contract)?;
    let cfg = RecognitionConfig {
        mode: if name_only {
            RecognitionMode::NameOnly
        } else {
            RecognitionMode::Rules
        },
        ..Default::default()
    };
    let g = build_vpg(&ast, &build_facts(&ast));
    to_py(py, &classify_financial_with(&g, &ast, &cfg))
}

/// Compare the analyzer with exhaustive enumeration up to `depth` calls.
#[pyfunction]
#[pyo3(signature = (contract, depth=2))]
fn oracle(py: Python<'_>, contract: &Bound<'_, PyAny>, depth: usize) -> PyResult<Py<PyAny>> {
    let ast = contract_of(contract)?;
    let r = check_theorems(&ast, depth).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &r)
}

#[pymodule]
fn janus_lite(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Contract>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(differences, m)?)?;
    m.add_function(wrap_pyfunction!(recognize, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add("SCHEMA_VERSION", janus_core::report::SCHEMA_VERSION)?;
    Ok(())
}
