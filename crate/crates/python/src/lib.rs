//! Python bindings.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use secassess::assessor::{deployment_formula, enumerate_deployments};
use secassess::explain::{export_dot, proofs_json};
use secassess::{
    build_kb, lint_vocabulary, parse_program, print_program, rank, AssessOptions, GroundFormula, KnowledgeBase,
    PartialDeployment, Program, RankBy, SemiringId, SemiringValue, TrustMode, TrustOptions,
};

create_exception!(secassess, SecAssessError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    SecAssessError::new_err(e.to_string())
}

fn level(py: Python<'_>, v: SemiringValue) -> PyResult<Py<PyAny>> {
    Ok(match v.confidence() {
        None => v.value().into_pyobject(py)?.into_any().unbind(),
        Some(c) => (v.value(), c).into_pyobject(py)?.into_any().unbind(),
    })
}

fn partial_of(partial: Option<BTreeMap<String, String>>) -> Option<PartialDeployment> {
    partial.map(|assignments| PartialDeployment { assignments })
}

/// Parses a program and returns it in canonical form.
#[pyfunction]
fn parse(text: &str) -> PyResult<String> {
    parse_program(text).map(|p| print_program(&p)).map_err(err)
}

/// A validated knowledge base built from one or more program texts.
#[pyclass(name = "KnowledgeBase", module = "secassess", frozen)]
struct PyKnowledgeBase {
    kb: KnowledgeBase,
}

impl PyKnowledgeBase {
    fn build(programs: Vec<Program>, semiring: &str) -> PyResult<Self> {
        let semiring: SemiringId = semiring.parse().map_err(err)?;
        Ok(Self {
            kb: build_kb(&programs, semiring).map_err(err)?,
        })
    }

    fn options(&self, trust_mode: &str, rank_by: &str) -> PyResult<AssessOptions> {
        Ok(AssessOptions {
            semiring: self.kb.semiring(),
            trust_mode: trust_mode.parse::<TrustMode>().map_err(err)?,
            rank_by: rank_by.parse::<RankBy>().map_err(err)?,
            trust: TrustOptions::default(),
        })
    }

    fn single_deployment(
        &self,
        app: &str,
        operator: &str,
        partial: Option<BTreeMap<String, String>>,
        opts: &AssessOptions,
    ) -> PyResult<(String, GroundFormula)> {
        let partial = partial_of(partial);
        let mut found = enumerate_deployments(&self.kb, app, operator, partial.as_ref(), opts).map_err(err)?;
        if found.len() != 1 {
            return Err(err(format!(
                "{} deployments match; pin services to select one",
                found.len()
            )));
        }
        let d = found.pop().unwrap();
        let f = deployment_formula(&self.kb, &d, opts).map_err(err)?;
        Ok((format!("{app}@[{}]", d.nodes().join(",")), f))
    }

    fn render(&self, query: &str, f: &GroundFormula, format: &str) -> PyResult<String> {
        match format {
            "dot" => Ok(export_dot(f, Some(query))),
            "json" => proofs_json(f, query, self.kb.semiring()).map_err(err),
            other => Err(err(format!("unknown format `{other}` (expected json or dot)"))),
        }
    }
}

#[pymethods]
impl PyKnowledgeBase {
    #[new]
    #[pyo3(signature = (*sources, semiring = "prob"))]
    fn new(sources: Vec<String>, semiring: &str) -> PyResult<Self> {
        let programs = sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                parse_program(s)
                    .map(|p| p.with_source_name(format!("<source {}>", i + 1)))
                    .map_err(|e| err(e.with_source_name(format!("<source {}>", i + 1))))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Self::build(programs, semiring)
    }

    /// Loads and merges `.sf` files in order.
    #[staticmethod]
    #[pyo3(signature = (paths, semiring = "prob"))]
    fn from_files(paths: Vec<PathBuf>, semiring: &str) -> PyResult<Self> {
        let mut programs = Vec::with_capacity(paths.len());
        for path in &paths {
            let name = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {name}: {e}")))?;
            let program = parse_program(&text).map_err(|e| err(e.with_source_name(name.clone())))?;
            programs.push(program.with_source_name(name));
        }
        Self::build(programs, semiring)
    }

    #[getter]
    fn semiring(&self) -> &'static str {
        self.kb.semiring().name()
    }

    #[getter]
    fn nodes(&self) -> BTreeMap<String, String> {
        self.kb.nodes().clone()
    }

    #[getter]
    fn apps(&self) -> BTreeMap<String, Vec<String>> {
        self.kb.apps().clone()
    }

    fn candidate_nodes(&self, service: &str) -> PyResult<Vec<String>> {
        Ok(secassess::candidate_nodes(&self.kb, service)
            .map_err(err)?
            .into_iter()
            .collect())
    }

    /// Trust of `source` towards `target`: a float for the probability
    /// semiring, a `(trust, confidence)` tuple otherwise.
    #[pyo3(signature = (source, target, mode = "transitive"))]
    fn trust(&self, py: Python<'_>, source: &str, target: &str, mode: &str) -> PyResult<Py<PyAny>> {
        let mode: TrustMode = mode.parse().map_err(err)?;
        level(py, secassess::trust_value(&self.kb, source, target, mode).map_err(err)?)
    }

    /// Eligible deployments, best first. Each row is a dict with `id`,
    /// `assignments` (service, node, operator) and `level`.
    #[pyo3(signature = (app, operator, partial = None, trust_mode = "transitive", rank_by = "confidence"))]
    fn rank<'py>(
        &self,
        py: Python<'py>,
        app: &str,
        operator: &str,
        partial: Option<BTreeMap<String, String>>,
        trust_mode: &str,
        rank_by: &str,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let opts = self.options(trust_mode, rank_by)?;
        let partial = partial_of(partial);
        let ranked = py
            .detach(|| rank(&self.kb, app, operator, partial.as_ref(), &opts))
            .map_err(err)?;
        ranked
            .into_iter()
            .map(|r| {
                let row = PyDict::new(py);
                row.set_item("id", format!("Δ{}", r.id))?;
                let assignments: Vec<(String, String, String)> = r
                    .assessment
                    .deployment
                    .assignments
                    .into_iter()
                    .map(|a| (a.service, a.node, a.operator))
                    .collect();
                row.set_item("assignments", assignments)?;
                row.set_item("level", level(py, r.assessment.level)?)?;
                Ok(row)
            })
            .collect()
    }

    /// Ground graph (`format="dot"`) or proof listing (`format="json"`) of
    /// the single deployment selected by `partial`.
    #[pyo3(signature = (app, operator, partial = None, format = "json", trust_mode = "transitive"))]
    fn explain_deployment(
        &self,
        app: &str,
        operator: &str,
        partial: Option<BTreeMap<String, String>>,
        format: &str,
        trust_mode: &str,
    ) -> PyResult<String> {
        let opts = self.options(trust_mode, "confidence")?;
        let (query, f) = self.single_deployment(app, operator, partial, &opts)?;
        self.render(&query, &f, format)
    }

    #[pyo3(signature = (source, target, format = "json", mode = "transitive"))]
    fn explain_trust(&self, source: &str, target: &str, format: &str, mode: &str) -> PyResult<String> {
        let mode: TrustMode = mode.parse().map_err(err)?;
        let f = secassess::trust_formula(&self.kb, source, target, mode).map_err(err)?;
        self.render(&format!("trusts2({source},{target})"), &f, format)
    }

    /// Capability names outside the known vocabulary.
    fn lint(&self) -> Vec<String> {
        lint_vocabulary(&self.kb).into_iter().map(|w| w.message).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "KnowledgeBase(semiring={}, nodes={}, apps={}, trust_edges={})",
            self.kb.semiring(),
            self.kb.nodes().len(),
            self.kb.apps().len(),
            self.kb.trust().edge_count()
        )
    }
}

#[pymodule]
#[pyo3(name = "secassess")]
fn secassess_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKnowledgeBase>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add("SecAssessError", m.py().get_type::<SecAssessError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
