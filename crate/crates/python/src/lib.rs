//! Python bindings: the transducer type and its analyses, with trees and
//! reports exchanged as strings (the term syntax and JSON respectively).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dtla::normalize::{self, Stage};
use dtla::removal::{self, BoundMode, RemovalOutcome, DEFAULT_TUPLE_CAP};
use dtla::{syntax, Dtla};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A deterministic top-down tree transducer with regular look-ahead.
#[pyclass(frozen)]
struct Transducer {
    inner: Dtla,
}

#[pymethods]
impl Transducer {
    /// Parse the transducer file format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = syntax::parse(text).map_err(value_err)?;
        Ok(Transducer { inner })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(value_err)?;
        Self::parse(&text)
    }

    fn unparse(&self) -> String {
        syntax::unparse(&self.inner)
    }

    /// Structural findings; empty means valid.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate()
            .findings
            .into_iter()
            .map(|f| f.message)
            .collect()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states.iter().map(|q| q.to_string()).collect()
    }

    #[getter]
    fn lookahead_states(&self) -> Vec<String> {
        self.inner.la.states.iter().map(|p| p.to_string()).collect()
    }

    #[getter]
    fn num_rules(&self) -> usize {
        self.inner.rules.len()
    }

    fn is_total(&self) -> bool {
        self.inner.trim().is_total()
    }

    /// Look-ahead state of an input tree written in the term syntax.
    #[pyo3(signature = (tree, extended = false))]
    fn delta_star(&self, tree: &str, extended: bool) -> PyResult<String> {
        let s = syntax::parse_input_tree(&self.inner, tree, extended).map_err(value_err)?;
        self.inner
            .delta_star(&s)
            .map(|p| p.to_string())
            .ok_or_else(|| runtime_err("malformed input tree"))
    }

    /// The translation of an input tree, or None when undefined. With
    /// `state`, the translation of that single state; with `extended`,
    /// look-ahead states may appear as leaves.
    #[pyo3(signature = (tree, state = None, extended = false))]
    fn run(&self, tree: &str, state: Option<&str>, extended: bool) -> PyResult<Option<String>> {
        let s = syntax::parse_input_tree(&self.inner, tree, extended).map_err(value_err)?;
        let out = match state {
            None => self.inner.eval(&s),
            Some(q) => {
                if !self.inner.has_state(q) {
                    return Err(value_err(format!("unknown state {q}")));
                }
                self.inner.eval_state(&dtla::trees::name(q), &s)
            }
        };
        Ok(out.map(|t| t.to_string()))
    }

    /// Class report as a JSON string.
    fn classify_json(&self) -> String {
        serde_json::to_string(&dtla::classify::classify(&self.inner.trim())).unwrap()
    }

    /// Bound report as a JSON string.
    fn bounds_json(&self) -> PyResult<String> {
        let report = dtla::bounds::bounds_report(&self.inner).map_err(runtime_err)?;
        Ok(serde_json::to_string(&report).unwrap())
    }

    /// The closed-form class difference bound, or None when out of class.
    fn class_difference_bound(&self) -> PyResult<Option<usize>> {
        Ok(dtla::bounds::class_difference_bound(&self.inner.trim())
            .map_err(runtime_err)?
            .ok())
    }

    /// Difference exploration up to the context budget; JSON string.
    fn diff_json(&self, max_context_nodes: usize) -> PyResult<String> {
        let base = self.inner.trim();
        let obs = dtla::diffs::enumerate_diffs(&base, max_context_nodes).map_err(runtime_err)?;
        Ok(serde_json::to_string(&obs.report()).unwrap())
    }

    /// One of "initialized", "uniform", "earliest", "canonical".
    fn normalize(&self, to: &str) -> PyResult<Transducer> {
        let stage = match to {
            "initialized" => Stage::Initialized,
            "uniform" => Stage::Uniform,
            "earliest" => Stage::Earliest,
            "canonical" => Stage::Canonical,
            other => return Err(value_err(format!("unknown stage {other}"))),
        };
        let trace = normalize::normalization_trace(&self.inner, stage).map_err(runtime_err)?;
        let (_, last) = trace.stages.last().expect("at least one stage");
        Ok(Transducer {
            inner: last.clone(),
        })
    }

    /// Decide equivalence to a transducer without look-ahead. Returns a
    /// result whose `answer` is "yes", "no" or "unknown".
    #[pyo3(signature = (bound = None, auto_bound = false, unbounded = false, cap = DEFAULT_TUPLE_CAP))]
    fn remove_lookahead(
        &self,
        bound: Option<usize>,
        auto_bound: bool,
        unbounded: bool,
        cap: usize,
    ) -> PyResult<RemovalResult> {
        let mode = match (bound, auto_bound, unbounded) {
            (Some(h), _, _) => BoundMode::Given(h),
            (None, _, true) => BoundMode::Unbounded,
            _ => BoundMode::Auto,
        };
        let report = removal::remove_lookahead(&self.inner, mode, cap).map_err(runtime_err)?;
        Ok(match report.outcome {
            RemovalOutcome::Dtop { dtop, bypassed, .. } => RemovalResult {
                answer: "yes".into(),
                detail: serde_json::json!({
                    "bypassed": bypassed,
                    "transportedBound": report.transported_bound,
                    "tupleTable": dtop.tuple_table.iter().map(|(n, t)| {
                        (n.to_string(), t.iter().map(|x| x.to_string()).collect::<Vec<_>>())
                    }).collect::<std::collections::BTreeMap<_, _>>(),
                })
                .to_string(),
                dtop: Some(Transducer { inner: dtop.dtla }),
            },
            RemovalOutcome::No(refusal) => RemovalResult {
                answer: "no".into(),
                detail: serde_json::to_string(&refusal).unwrap(),
                dtop: None,
            },
            RemovalOutcome::CapExceeded {
                tuples_constructed,
                cap,
            } => RemovalResult {
                answer: "unknown".into(),
                detail: serde_json::json!({
                    "reason": "cap-exceeded",
                    "tuplesConstructed": tuples_constructed,
                    "cap": cap,
                })
                .to_string(),
                dtop: None,
            },
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Transducer(states={}, lookahead={}, rules={})",
            self.inner.states.len(),
            self.inner.la.states.len(),
            self.inner.rules.len()
        )
    }
}

/// Outcome of look-ahead removal.
#[pyclass(frozen)]
struct RemovalResult {
    #[pyo3(get)]
    answer: String,
    /// JSON detail: refusal witness, tuple table, or cap report.
    #[pyo3(get)]
    detail: String,
    dtop: Option<Transducer>,
}

#[pymethods]
impl RemovalResult {
    /// The constructed transducer when the answer is "yes".
    #[getter]
    fn dtop(&self) -> Option<Transducer> {
        self.dtop.as_ref().map(|t| Transducer {
            inner: t.inner.clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!("RemovalResult(answer={:?})", self.answer)
    }
}

#[pymodule]
fn dtla_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Transducer>()?;
    m.add_class::<RemovalResult>()?;
    Ok(())
}
