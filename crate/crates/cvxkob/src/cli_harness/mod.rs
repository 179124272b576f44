//! Experiment specs, the registered suites and their reports.
//!
//! A spec is a JSON document naming a suite, the domain and automorphisms it acts on, parameter
//! overrides and a seed. Running a suite produces a [`Report`] of named assertions, each tied to the
//! library operation it checks, plus measured constants and CSV tables.

mod report;
mod spec;
mod suites;

pub use report::{emit_plot_data, Assertion, PlotKind, Report, Table};
pub use spec::{
    build_automorphism, build_automorphisms, build_domain, parse_spec, parse_spec_str, to_canonical_string, validate, AutomorphismSpec,
    ComplexSpec, DomainKindSpec, DomainSpec, ExperimentSpec, MatrixSpec,
};
pub use suites::{default_spec, find_suite, suite_names, Suite, SUITES};

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use thiserror::Error;

use crate::automorphism_dynamics::Automorphism;
use crate::domain_geometry::ConvexDomain;
use crate::linalg::CVec;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HarnessError {
    #[error("parse error: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// 2 for spec problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Validation { .. } => 2,
            HarnessError::Io(_) | HarnessError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Replaces the spec seed.
    pub seed: Option<u64>,
    /// Multiplies every default tolerance of the domain.
    pub tol_scale: f64,
    /// First frame point for suites that build boundary frames.
    pub preferred_first: Option<CVec>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: None, tol_scale: 1.0, preferred_first: None }
    }
}

/// Validates the spec and runs its suite. Assertion failures and panics are recorded in the
/// report; only spec problems are errors.
pub fn run_suite(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Report, HarnessError> {
    validate(spec)?;
    if !(opts.tol_scale > 0.0 && opts.tol_scale.is_finite()) {
        return Err(HarnessError::Validation { field: "tol-scale".into(), message: "must be positive and finite".into() });
    }
    let suite = find_suite(&spec.name).expect("validated suite name");
    let dom = build_domain(&spec.domain, "domain")?;
    let dom = if opts.tol_scale == 1.0 {
        dom
    } else {
        let t = dom.tolerances().scaled(opts.tol_scale);
        dom.with_tolerances(t)
    };
    if let Some(p) = &opts.preferred_first {
        if p.len() != dom.dim() {
            return Err(HarnessError::Validation {
                field: "preferred-first".into(),
                message: format!("expected {} complex coordinates, got {}", dom.dim(), p.len()),
            });
        }
    }
    let autos = if spec.automorphisms.is_empty() {
        build_automorphisms(&dom, &(suite.default_automorphisms)())?
    } else {
        build_automorphisms(&dom, &spec.automorphisms)?
    };
    let mut params: BTreeMap<String, f64> = suite.parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    params.extend(spec.parameters.iter().map(|(k, v)| (k.clone(), *v)));
    let seed = opts.seed.unwrap_or(spec.seed);
    let mut ctx = Ctx {
        dom,
        autos,
        params,
        seed,
        preferred_first: opts.preferred_first.clone(),
        report: Report {
            suite: suite.name.into(),
            header: suite.header.into(),
            seed,
            assertions: Vec::new(),
            constants: Vec::new(),
            runtimes: Vec::new(),
            tables: Vec::new(),
        },
    };
    let t0 = Instant::now();
    (suite.run)(&mut ctx);
    ctx.report.runtimes.push(("total".into(), t0.elapsed().as_secs_f64()));
    Ok(ctx.report)
}

/// State handed to a suite body.
pub(crate) struct Ctx {
    pub dom: ConvexDomain,
    pub autos: Vec<Automorphism>,
    params: BTreeMap<String, f64>,
    pub seed: u64,
    pub preferred_first: Option<CVec>,
    report: Report,
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into())
}

impl Ctx {
    pub fn param(&self, k: &str) -> f64 {
        self.params[k]
    }

    pub fn count(&self, k: &str) -> usize {
        self.params[k].max(0.0).round() as usize
    }

    /// Runs a computation whose result several assertions share. A failure becomes a failed
    /// assertion so nothing downstream is skipped silently.
    pub fn stage<T>(&mut self, name: &str, op: &str, f: impl FnOnce() -> crate::Result<T>) -> Option<T> {
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f));
        self.report.runtimes.push((name.into(), t0.elapsed().as_secs_f64()));
        let detail = match r {
            Ok(Ok(v)) => return Some(v),
            Ok(Err(e)) => format!("{name} failed: {e}"),
            Err(p) => format!("{name} panicked: {}", panic_message(p)),
        };
        self.push(name, op, false, detail);
        None
    }

    pub fn check(&mut self, name: &str, op: &str, f: impl FnOnce() -> (bool, String)) {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(p) => (false, format!("panicked: {}", panic_message(p))),
        };
        self.push(name, op, ok, detail);
    }

    /// `check` on the output of an earlier stage; fails when the stage did.
    pub fn check_on<T>(&mut self, data: &Option<T>, name: &str, op: &str, f: impl FnOnce(&T) -> (bool, String)) {
        match data {
            Some(d) => self.check(name, op, || f(d)),
            None => self.push(name, op, false, "not evaluated: prerequisite stage failed".into()),
        }
    }

    fn push(&mut self, name: &str, op: &str, passed: bool, detail: String) {
        self.report.assertions.push(Assertion { name: name.into(), op: op.into(), passed, detail });
    }

    pub fn constant(&mut self, name: &str, v: f64) {
        self.report.constants.push((name.into(), v));
    }

    pub fn table(&mut self, t: Table) {
        self.report.tables.push(t);
    }
}
