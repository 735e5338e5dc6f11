//! Python bindings. Results of analyses are returned as plain dicts and
//! lists built from the same JSON shapes the `mbxc --json` CLI emits.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

use mbx_core::checker::CheckOptions;
use mbx_core::encodings;
use mbx_core::patterns::{Pattern, Undecided};
use mbx_core::runtime::{self, Limits};
use mbx_core::syntax::{parse_pattern, parse_type};
use mbx_core::types::{TypeCtx, TypeTable};

create_exception!(mbx, MbxSyntaxError, PyValueError, "Malformed program, pattern or type.");
create_exception!(mbx, UndecidedError, PyException, "Pattern inclusion ran out of work budget.");
create_exception!(mbx, RuntimeFailure, PyException, "The interpreter could not start.");

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(xs) => {
            let l = PyList::empty(py);
            for x in xs {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn undecided(e: Undecided) -> PyErr {
    UndecidedError::new_err(e.to_string())
}

fn ctx(table: TypeTable, budget: Option<usize>) -> TypeCtx {
    match budget {
        Some(b) => TypeCtx::with_budget(table, b),
        None => TypeCtx::new(table),
    }
}

/// A parsed program.
#[pyclass(module = "mbx", frozen)]
struct Program {
    inner: mbx_core::Program,
}

#[pymethods]
impl Program {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        mbx_core::parse(source).map(|inner| Program { inner }).map_err(|e| MbxSyntaxError::new_err(e.to_string()))
    }

    #[getter]
    fn definitions(&self) -> Vec<String> {
        self.inner.defs.iter().map(|d| d.name.to_string()).collect()
    }

    /// Type check; returns the report as a dict with an `accepted` key.
    #[pyo3(signature = (mixed_guards = false, budget = None))]
    fn check<'py>(&self, py: Python<'py>, mixed_guards: bool, budget: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        let report = mbx_core::check_program(&self.inner, CheckOptions { mixed_guards, budget });
        let mut v = serde_json::to_value(&report).expect("report serializes");
        v["accepted"] = Value::Bool(report.accepted());
        to_py(py, &v)
    }

    #[pyo3(signature = (max_states = 50_000, max_depth = 10_000, bounds = Vec::new()))]
    fn explore<'py>(
        &self,
        py: Python<'py>,
        max_states: usize,
        max_depth: usize,
        bounds: Vec<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let g = runtime::explore(&self.inner, Limits { max_states, max_depth })
            .map_err(|e| RuntimeFailure::new_err(e.to_string()))?;
        let mut v = serde_json::to_value(g.summary()).expect("summary serializes");
        let table = &self.inner.types;
        v["deadlocks"] = g.deadlocks().iter().map(|&s| Value::String(g.states[s].display(table).to_string())).collect();
        if let Some(w) = &g.fail_witness {
            v["fail_mailbox"] = Value::String(w.mailbox.to_string());
        }
        if let Some(outs) = runtime::print_outcomes(&g) {
            v["print_outcomes"] = serde_json::to_value(outs).expect("prints serialize");
        }
        let mut b = serde_json::Map::new();
        for m in bounds {
            let bb = runtime::mailbox_bounds(&g, &m);
            b.insert(m, serde_json::to_value(bb).expect("bounds serialize"));
        }
        v["bounds"] = Value::Object(b);
        to_py(py, &v)
    }

    #[pyo3(signature = (seed = 0, max_steps = 10_000))]
    fn run<'py>(&self, py: Python<'py>, seed: u64, max_steps: usize) -> PyResult<Bound<'py, PyAny>> {
        let t = runtime::run(&self.inner, seed, max_steps).map_err(|e| RuntimeFailure::new_err(e.to_string()))?;
        let table = &self.inner.types;
        let steps: Vec<Value> = t
            .steps
            .iter()
            .map(|s| {
                serde_json::json!({
                    "rule": s.rule.name(),
                    "redex": s.redex,
                    "state": s.state.display(table).to_string(),
                })
            })
            .collect();
        let v = serde_json::json!({
            "steps": steps,
            "truncated": t.truncated,
            "done": *t.last_state() == mbx_core::Process::Done,
            "prints": t.prints(),
        });
        to_py(py, &v)
    }

    fn __str__(&self) -> String {
        self.inner.display().to_string()
    }

    fn __repr__(&self) -> String {
        format!("<mbx.Program with {} definitions>", self.inner.defs.len())
    }
}

fn table_of(types: Option<&Program>) -> TypeTable {
    types.map(|p| p.inner.types.clone()).unwrap_or_else(TypeTable::new)
}

fn pat(src: &str, table: &mut TypeTable) -> PyResult<Pattern> {
    parse_pattern(src, table).map_err(|e| MbxSyntaxError::new_err(format!("{src:?}: {e}")))
}

/// `(holds, witness)` for pattern inclusion E ⊑ F.
#[pyfunction]
#[pyo3(signature = (e, f, types = None, budget = None))]
fn includes(e: &str, f: &str, types: Option<&Program>, budget: Option<usize>) -> PyResult<(bool, Option<String>)> {
    let mut table = table_of(types);
    let (pe, pf) = (pat(e, &mut table)?, pat(f, &mut table)?);
    let tc = ctx(table, budget);
    let inc = tc.subpattern(&pe, &pf).map_err(undecided)?;
    Ok((inc.holds(), inc.witness().map(|w| w.display(&tc.table).to_string())))
}

#[pyfunction]
#[pyo3(signature = (e, f, types = None))]
fn equivalent(e: &str, f: &str, types: Option<&Program>) -> PyResult<bool> {
    let mut table = table_of(types);
    let (pe, pf) = (pat(e, &mut table)?, pat(f, &mut table)?);
    TypeCtx::new(table).pattern_equiv(&pe, &pf).map_err(undecided)
}

/// Residual E / atom, or None when undefined.
#[pyfunction]
#[pyo3(signature = (e, atom, types = None))]
fn residual(e: &str, atom: &str, types: Option<&Program>) -> PyResult<Option<String>> {
    let mut table = table_of(types);
    let pe = pat(e, &mut table)?;
    let Pattern::Atom(a) = pat(atom, &mut table)? else {
        return Err(MbxSyntaxError::new_err(format!("{atom:?} is not an atom")));
    };
    let tc = TypeCtx::new(table);
    Ok(tc.residual(&pe, &a).map_err(undecided)?.map(|r| r.display(&tc.table).to_string()))
}

#[pyfunction]
#[pyo3(signature = (e, types = None))]
fn is_normal_form(e: &str, types: Option<&Program>) -> PyResult<bool> {
    let mut table = table_of(types);
    let pe = pat(e, &mut table)?;
    TypeCtx::new(table).is_normal_form(&pe).map_err(undecided)
}

#[pyfunction]
#[pyo3(signature = (t, s, types = None))]
fn subtype(t: &str, s: &str, types: Option<&Program>) -> PyResult<bool> {
    let mut table = table_of(types);
    let err = |x: &str, e: String| MbxSyntaxError::new_err(format!("{x:?}: {e}"));
    let tt = parse_type(t, &mut table).map_err(|e| err(t, e.to_string()))?;
    let ts = parse_type(s, &mut table).map_err(|e| err(s, e.to_string()))?;
    TypeCtx::new(table).subtype(tt, ts).map_err(undecided)
}

/// `(relevant, reliable, usable)` flags of a type.
#[pyfunction]
#[pyo3(signature = (t, types = None))]
fn classify(t: &str, types: Option<&Program>) -> PyResult<(bool, bool, bool)> {
    let mut table = table_of(types);
    let tt = parse_type(t, &mut table).map_err(|e| MbxSyntaxError::new_err(e.to_string()))?;
    let c = TypeCtx::new(table).classify(tt).map_err(undecided)?;
    Ok((c.relevant, c.reliable, c.usable))
}

/// Source of the mailbox process implementing a session from a `.st` file.
#[pyfunction]
#[pyo3(signature = (source, session = None))]
fn encode_session(source: &str, session: Option<&str>) -> PyResult<String> {
    let sf = encodings::parse_sessions(source).map_err(|e| MbxSyntaxError::new_err(e.to_string()))?;
    let name = match session {
        Some(n) => n.to_string(),
        None => sf.order.first().cloned().ok_or_else(|| PyValueError::new_err("no session declared"))?,
    };
    encodings::encode_named(&sf, &name).map(|e| e.source).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn mbx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    m.add_function(wrap_pyfunction!(includes, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(residual, m)?)?;
    m.add_function(wrap_pyfunction!(is_normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(subtype, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(encode_session, m)?)?;
    let py = m.py();
    m.add("MbxSyntaxError", py.get_type::<MbxSyntaxError>())?;
    m.add("UndecidedError", py.get_type::<UndecidedError>())?;
    m.add("RuntimeFailure", py.get_type::<RuntimeFailure>())?;
    Ok(())
}
