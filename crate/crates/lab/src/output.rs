use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::{Command, Format};
use crate::commands::{ModeEstimate, VerifyReport};
use crate::config::Settings;
use crate::error::LabResult;

/// First line of every CSV file.
pub const CSV_SCHEMA_LINE: &str = "# wva-lab schema v1";
/// `schema` field of every JSON document.
pub const JSON_SCHEMA_ID: &str = "wva-lab/v1";

fn sink(settings: &Settings) -> LabResult<Box<dyn Write>> {
    Ok(match &settings.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_csv<T: Serialize>(mut w: impl Write, rows: &[T]) -> LabResult<()> {
    writeln!(w, "{CSV_SCHEMA_LINE}")?;
    let mut csv = csv::Writer::from_writer(&mut w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(())
}

pub fn document(command: Command, settings: &Settings, key: &str, body: Value) -> Value {
    let mut doc = json!({
        "schema": JSON_SCHEMA_ID,
        "command": command.name(),
        "settings": settings,
    });
    doc[key] = body;
    doc
}

fn write_json(mut w: impl Write, doc: &Value) -> LabResult<()> {
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Sweep and scaling tables.
pub fn emit_rows<T: Serialize>(settings: &Settings, command: Command, rows: &[T]) -> LabResult<()> {
    let w = sink(settings)?;
    match settings.format {
        Format::Csv => write_csv(w, rows),
        Format::Json => write_json(
            w,
            &document(command, settings, "rows", serde_json::to_value(rows)?),
        ),
    }
}

pub fn emit_estimate(settings: &Settings, results: &[ModeEstimate]) -> LabResult<()> {
    let w = sink(settings)?;
    match settings.format {
        Format::Csv => {
            let rows: Vec<_> = results.iter().flat_map(|r| r.rows.iter()).collect();
            write_csv(w, &rows)
        }
        Format::Json => write_json(
            w,
            &document(
                Command::Estimate,
                settings,
                "results",
                serde_json::to_value(results)?,
            ),
        ),
    }
}

#[derive(Serialize)]
struct MetricRow {
    check: &'static str,
    metric: &'static str,
    value: f64,
}

/// Prints a summary to standard output and writes the full report when
/// `--out` is given.
pub fn emit_verify(settings: &Settings, report: &VerifyReport) -> LabResult<()> {
    let e = &report.equivalence;
    let a = &report.apparatus;
    let verdict = |ok: bool| if ok { "ok" } else { "FAILED" };
    println!(
        "equivalence: {} cases, max infidelity {:e}, max |dP| {:e} [{}]",
        e.cases,
        e.max_infidelity,
        e.max_delta_p,
        verdict(e.passed)
    );
    println!(
        "apparatus: {} points, max |dP| {:e}, max |d sigma_z| {:e}, closed form {:e}, infidelity {:e} [{}]",
        a.points,
        a.max_probability_deviation,
        a.max_sigma_z_deviation,
        a.max_closed_form_deviation,
        a.max_infidelity,
        verdict(a.passed)
    );
    if settings.out.is_none() {
        return Ok(());
    }
    let w = sink(settings)?;
    match settings.format {
        Format::Csv => {
            let rows = [
                MetricRow {
                    check: "equivalence",
                    metric: "max_infidelity",
                    value: e.max_infidelity,
                },
                MetricRow {
                    check: "equivalence",
                    metric: "max_delta_p",
                    value: e.max_delta_p,
                },
                MetricRow {
                    check: "apparatus",
                    metric: "max_probability_deviation",
                    value: a.max_probability_deviation,
                },
                MetricRow {
                    check: "apparatus",
                    metric: "max_sigma_z_deviation",
                    value: a.max_sigma_z_deviation,
                },
                MetricRow {
                    check: "apparatus",
                    metric: "max_closed_form_deviation",
                    value: a.max_closed_form_deviation,
                },
                MetricRow {
                    check: "apparatus",
                    metric: "max_infidelity",
                    value: a.max_infidelity,
                },
            ];
            write_csv(w, &rows)
        }
        Format::Json => write_json(
            w,
            &document(
                Command::Verify,
                settings,
                "report",
                serde_json::to_value(report)?,
            ),
        ),
    }
}

/// The failing instances of a verification run, for reproduction.
pub fn worst_instance_json(report: &VerifyReport) -> String {
    let mut v = json!({});
    if !report.equivalence.passed {
        v["equivalence"] = json!(report.equivalence.worst);
    }
    if !report.apparatus.passed {
        v["apparatus"] = json!(report.apparatus.worst);
    }
    v.to_string()
}
