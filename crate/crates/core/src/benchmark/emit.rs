use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::checks::Table;
use super::BenchReport;

pub const PROCESSING_CSV: &str = "table4_processing_time.csv";
pub const DELAY_CSV: &str = "table5_average_delay.csv";
pub const REPORT_JSON: &str = "report.json";

/// `n_transactions,device_1,...` with one row per batch size and seconds
/// printed to one decimal place.
pub fn table_csv(table: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n_transactions".to_string()];
    header.extend(table.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (n, row) in table.batch_sizes.iter().zip(&table.values) {
        let mut rec = vec![n.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:.1}")));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Writes both tables and `report.json` into `out_dir`, creating it if
/// needed, and returns the three paths.
pub fn emit_tables(report: &BenchReport, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty bench report"));
    }
    fs::create_dir_all(out_dir)?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)? + "\n";
    let files = [
        (PROCESSING_CSV, table_csv(&report.processing_table())),
        (DELAY_CSV, table_csv(&report.delay_table())),
        (REPORT_JSON, json),
    ];
    let mut paths = Vec::new();
    for (name, body) in files {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}
