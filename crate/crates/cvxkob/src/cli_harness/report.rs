use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::HarnessError;

/// Table families; each has a fixed leading column layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlotKind {
    /// n, re_1, im_1, ..., re_d, im_d, boundary_distance
    Orbit,
    /// t, re_1, im_1, ..., re_d, im_d
    Curve,
    /// n, R, hausdorff
    Residuals,
    /// id, lower, upper, width, then suite-specific reference columns
    Brackets,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::Orbit, PlotKind::Curve, PlotKind::Residuals, PlotKind::Brackets];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Orbit => "orbit",
            PlotKind::Curve => "curve",
            PlotKind::Residuals => "residuals",
            PlotKind::Brackets => "brackets",
        }
    }
}

impl FromStr for PlotKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        PlotKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| HarnessError::Validation {
            field: "kind".into(),
            message: format!("unknown plot kind `{s}`; expected one of orbit, curve, residuals, brackets"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: PlotKind,
    /// File stem suffix, unique within a report.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(kind: PlotKind, name: &str, columns: &[&str]) -> Self {
        Table { kind, name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Columns for a point-valued table: `lead`, then re/im per coordinate, then `trail`.
    pub fn with_coords(kind: PlotKind, name: &str, lead: &str, dim: usize, trail: &[&str]) -> Self {
        let mut columns = vec![lead.to_string()];
        for i in 1..=dim {
            columns.push(format!("re_{i}"));
            columns.push(format!("im_{i}"));
        }
        columns.extend(trail.iter().map(|s| s.to_string()));
        Table { kind, name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// 17 significant digits, LF line endings, header row.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| format!("{x:.16e}"))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    /// Library operation that produced the checked quantity.
    pub op: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub suite: String,
    /// The result the suite exercises, in words.
    pub header: String,
    pub seed: u64,
    pub assertions: Vec<Assertion>,
    pub constants: Vec<(String, f64)>,
    /// Wall-clock seconds per stage; excluded from the CSV outputs.
    pub runtimes: Vec<(String, f64)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.assertions.is_empty() && self.assertions.iter().all(|a| a.passed)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.0 == name).map(|c| c.1)
    }

    pub fn failures(&self) -> usize {
        self.assertions.iter().filter(|a| !a.passed).count()
    }

    /// `key: value` lines followed by an aligned table of the assertions.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite: {}", self.suite);
        let _ = writeln!(s, "exercises: {}", self.header);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "status: {}", if self.passed() { "pass" } else { "fail" });
        for a in &self.assertions {
            let _ = writeln!(s, "assertion: {} | {} | {} | {}", a.name, a.op, if a.passed { "pass" } else { "fail" }, a.detail);
        }
        for (k, v) in &self.constants {
            let _ = writeln!(s, "constant: {k} = {v:.16e}");
        }
        for (k, v) in &self.runtimes {
            let _ = writeln!(s, "runtime: {k} = {v:.3} s");
        }
        for t in &self.tables {
            let _ = writeln!(s, "table: {} ({}, {} rows)", file_name(&self.suite, t), t.kind.as_str(), t.rows.len());
        }
        s.push('\n');
        let w_name = self.assertions.iter().map(|a| a.name.len()).max().unwrap_or(4).max(9);
        let w_op = self.assertions.iter().map(|a| a.op.len()).max().unwrap_or(2).max(9);
        let _ = writeln!(s, "{:<w_name$}  {:<w_op$}  {:<6}  detail", "assertion", "operation", "result");
        for a in &self.assertions {
            let _ = writeln!(s, "{:<w_name$}  {:<w_op$}  {:<6}  {}", a.name, a.op, if a.passed { "PASS" } else { "FAIL" }, a.detail);
        }
        s
    }

    /// Writes every table and `<suite>-report.txt` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        let mut out = write_tables(self, dir, |_| true)?;
        let p = dir.join(format!("{}-report.txt", self.suite));
        std::fs::write(&p, self.to_text()).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
        out.push(p);
        Ok(out)
    }
}

fn file_name(suite: &str, t: &Table) -> String {
    format!("{suite}-{}.csv", t.name)
}

fn write_tables(report: &Report, dir: &Path, keep: impl Fn(&Table) -> bool) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for t in report.tables.iter().filter(|t| keep(t)) {
        let p = dir.join(file_name(&report.suite, t));
        std::fs::write(&p, t.to_csv()?).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
        out.push(p);
    }
    Ok(out)
}

/// Writes the tables of one kind. A kind the suite does not produce yields no files.
pub fn emit_plot_data(report: &Report, kind: &str, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let kind: PlotKind = kind.parse()?;
    write_tables(report, dir, |t| t.kind == kind)
}
