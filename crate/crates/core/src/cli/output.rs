//! Self-describing output files.
//!
//! CSV files start with `# key: value` header lines (tool, schema, seed and
//! the resolved scenario as one JSON line) followed by the column row and the
//! data rows. JSON files are one object with the same header keys and a
//! `data` member. Either header is enough to rebuild the [`Scenario`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::scenario::{Format, Scenario};
use crate::error::{Error, Result};

pub const TOOL: &str = "fbs";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column sets, versioned. Changing columns or their order needs a new version.
pub mod schema {
    pub const TRACE: (&str, &[&str]) = ("trace/v1", &["step", "tau_s", "delta_f_hz", "outcome", "mu_hz", "sigma_hz"]);
    pub const CAMPAIGN: (&str, &[&str]) = ("campaign/v1", &["run", "eps_true_hz", "eps_hat_hz", "final_sigma_hz"]);
    pub const VALIDITY: (&str, &[&str]) = (
        "validate-gaussian/v1",
        &["multiplier", "tau_s", "outcome", "posterior_sigma_hz", "closed_form_sigma_hz", "kl_bits", "local_maxima"],
    );
    pub const TRACK: (&str, &[&str]) = ("track/v1", &["tau_s", "flip_fraction_feedback", "flip_fraction_open_loop"]);
    pub const COMPARE: (&str, &[&str]) = (
        "compare-frequentist/v1",
        &[
            "multiplier",
            "tau_s",
            "range_half_width_hz",
            "fbs_median_abs_error_hz",
            "frequentist_median_abs_error_hz",
            "outside_count",
            "fbs_inside_median_abs_error_hz",
            "frequentist_inside_median_abs_error_hz",
            "fbs_outside_median_abs_error_hz",
            "frequentist_outside_median_abs_error_hz",
        ],
    );
    pub const SUMMARY_CAMPAIGN: &str = "campaign-summary/v1";
    pub const SUMMARY_TRACK: &str = "track-summary/v1";
}

/// One table cell. Floats use the shortest round-trip representation.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    fn to_json(self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v:?}"),
        }
    }
}

pub struct Table {
    pub schema: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: (&'static str, &'static [&'static str])) -> Self {
        Self { schema: schema.0, columns: schema.1, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn header_value(scenario: &Scenario, schema: &str) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "schema": schema,
        "seed": scenario.seed,
        "scenario": scenario,
    })
}

pub fn render(table: &Table, scenario: &Scenario, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            let scenario_json = serde_json::to_string(scenario).expect("scenario serializes");
            let _ = writeln!(out, "# tool: {TOOL} {VERSION}");
            let _ = writeln!(out, "# schema: {}", table.schema);
            let _ = writeln!(out, "# seed: {}", scenario.seed);
            let _ = writeln!(out, "# scenario: {scenario_json}");
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> =
                        table.columns.iter().zip(row).map(|(k, c)| (k.to_string(), c.to_json())).collect();
                    Value::Object(obj)
                })
                .collect();
            let mut doc = header_value(scenario, table.schema);
            doc["data"] = Value::Array(rows);
            let mut s = serde_json::to_string_pretty(&doc).expect("json");
            s.push('\n');
            s
        }
    }
}

pub fn render_summary<T: Serialize>(scenario: &Scenario, schema: &str, data: &T) -> Result<String> {
    let mut doc = header_value(scenario, schema);
    doc["data"] = serde_json::to_value(data).map_err(|e| Error::numerical(format!("summary not serializable: {e}")))?;
    let mut s = serde_json::to_string_pretty(&doc).expect("json");
    s.push('\n');
    Ok(s)
}

/// `<stem>.summary.json` next to `output`.
pub fn summary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.summary.json"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Rebuilds the scenario recorded in an output file's header.
pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    scenario_from_text(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn scenario_from_text(text: &str) -> Result<Scenario> {
    let parse =
        |s: &str| serde_json::from_str::<Scenario>(s).map_err(|e| Error::invalid(format!("bad scenario header: {e}")));
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::invalid(format!("not JSON: {e}")))?;
        let sc = doc.get("scenario").ok_or_else(|| Error::invalid("no scenario member"))?;
        return parse(&sc.to_string());
    }
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# scenario: "))
        .ok_or_else(|| Error::invalid("no '# scenario:' header line"))
        .and_then(parse)
}

/// Everything after the header: column row and data rows for CSV, the
/// `data` member for JSON.
pub fn data_section(text: &str) -> Result<String> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::invalid(format!("not JSON: {e}")))?;
        return Ok(doc.get("data").map(|d| d.to_string()).unwrap_or_default());
    }
    Ok(text.lines().skip_while(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n"))
}
