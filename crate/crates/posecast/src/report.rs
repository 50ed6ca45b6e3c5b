//! Report files and comparison tables.
//!
//! The text table has the columns Method | Size | MPJPE | FPS | FCE | FADE.
//! With several horizons the MPJPE and FADE cells list one value per horizon
//! separated by " / ". Cells that need a throughput figure read "-" when the
//! report has none.

use std::fs;
use std::path::{Path, PathBuf};

use posecast_core::metrics::{display_integer, display_value, MetricReport};
use posecast_core::motion_conformer::TrainHistory;
use posecast_core::noise_lab::DualReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: malformed report: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("reports use different horizons: {0:?} vs {1:?}")]
    Horizons(Vec<u32>, Vec<u32>),
    #[error("no reports to compare")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(path, bytes).map_err(io(path))
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

pub fn report_json(report: &MetricReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

pub fn write_report(report: &MetricReport, path: &Path) -> Result<(), ReportError> {
    write_file(path, report_json(report).as_bytes())
}

pub fn read_report(path: &Path) -> Result<MetricReport, ReportError> {
    let bytes = fs::read(path).map_err(io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| ReportError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Both halves of a dual evaluation, labeled `measurable` and `real`.
pub fn write_dual_report(report: &DualReport, path: &Path) -> Result<(), ReportError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    write_file(path, json.as_bytes())
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// Parameter counts as `37.2K`, `202K`, `9.23M`; zero reads "-".
pub fn format_size(count: usize) -> String {
    let three_sig = |v: f64| {
        if v >= 100.0 {
            format!("{v:.0}")
        } else if v >= 10.0 {
            format!("{v:.1}")
        } else {
            format!("{v:.2}")
        }
    };
    match count {
        0 => "-".into(),
        c if c < 1_000 => c.to_string(),
        c if c < 999_500 => format!("{}K", three_sig(c as f64 / 1e3)),
        c => format!("{}M", three_sig(c as f64 / 1e6)),
    }
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|&v| display_value(v)).collect::<Vec<_>>().join(" / ")
}

fn horizon_label(name: &str, horizons: &[u32]) -> String {
    if horizons.len() == 1 {
        name.to_string()
    } else {
        format!("{name} {}", horizons.iter().map(u32::to_string).collect::<Vec<_>>().join("/"))
    }
}

/// One row of cells for `report`, labeled `method`.
pub fn table_cells(method: &str, report: &MetricReport) -> [String; 6] {
    [
        method.to_string(),
        format_size(report.param_count),
        joined(&report.mpjpe_mm),
        report.fps.map_or("-".into(), display_integer),
        report.fce_mm.map_or("-".into(), display_integer),
        report.fade_mm.as_deref().map_or("-".into(), joined),
    ]
}

/// Aligned text table; the method column is left-aligned and the rest are
/// right-aligned.
pub fn format_table(rows: &[(String, &MetricReport)]) -> String {
    let horizons = rows.first().map(|(_, r)| r.horizons_ms.clone()).unwrap_or_default();
    let header = [
        "Method".to_string(),
        "Size".to_string(),
        horizon_label("MPJPE", &horizons),
        "FPS".to_string(),
        "FCE".to_string(),
        horizon_label("FADE", &horizons),
    ];
    let body: Vec<[String; 6]> = rows.iter().map(|(name, r)| table_cells(name, r)).collect();
    let mut widths = header.each_ref().map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: &[String; 6]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        format!("| {} |", parts.join(" | "))
    };
    let rule = format!("|{}|", widths.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|"));
    let mut out = render(&header) + "\n" + &rule + "\n";
    for row in &body {
        out += &render(row);
        out.push('\n');
    }
    out
}

/// Sort key for the comparison table: FADE at the longest horizon, or MPJPE
/// there when no throughput was measured (a zero-latency FADE).
fn ranking_error(r: &MetricReport) -> f64 {
    let last = r.horizons_ms.len().saturating_sub(1);
    r.fade_mm.as_ref().and_then(|f| f.get(last).copied()).or_else(|| r.mpjpe_mm.get(last).copied()).unwrap_or(0.0)
}

/// Unique display names: later duplicates get ` (2)`, ` (3)`, ...
pub fn disambiguate(names: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(names.len());
    for name in names {
        let mut candidate = name.clone();
        let mut k = 1;
        while out.contains(&candidate) {
            k += 1;
            candidate = format!("{name} ({k})");
        }
        out.push(candidate);
    }
    out
}

/// Orders reports worst to best by FADE and gives every row a unique name.
pub fn compare(reports: &[MetricReport]) -> Result<Vec<(String, &MetricReport)>, ReportError> {
    let first = reports.first().ok_or(ReportError::Empty)?;
    if let Some(r) = reports.iter().find(|r| r.horizons_ms != first.horizons_ms) {
        return Err(ReportError::Horizons(first.horizons_ms.clone(), r.horizons_ms.clone()));
    }
    let names = disambiguate(&reports.iter().map(|r| r.model_name.clone()).collect::<Vec<_>>());
    let mut rows: Vec<(String, &MetricReport)> = names.into_iter().zip(reports).collect();
    rows.sort_by(|a, b| ranking_error(b.1).total_cmp(&ranking_error(a.1)));
    Ok(rows)
}

/// CSV with unrounded values; missing values are empty cells.
pub fn comparison_csv(rows: &[(String, &MetricReport)]) -> Result<String, ReportError> {
    let horizons = rows.first().map(|(_, r)| r.horizons_ms.clone()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method".to_string(), "params".to_string()];
    header.extend(horizons.iter().map(|h| format!("mpjpe_{h}")));
    header.extend(["fps".to_string(), "fce".to_string()]);
    header.extend(horizons.iter().map(|h| format!("fade_{h}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for (name, r) in rows {
        let mut rec = vec![name.clone(), r.param_count.to_string()];
        rec.extend(r.mpjpe_mm.iter().map(f64::to_string));
        rec.push(opt(r.fps));
        rec.push(opt(r.fce_mm));
        match &r.fade_mm {
            Some(f) => rec.extend(f.iter().map(f64::to_string)),
            None => rec.extend(horizons.iter().map(|_| String::new())),
        }
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
}

// ---------------------------------------------------------------------------
// Training history
// ---------------------------------------------------------------------------

/// `epoch,train_loss,val_loss,val_mpjpe_1000`; the pre-training evaluation
/// is the first row.
pub fn history_csv(history: &TrainHistory) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "train_loss", "val_loss", "val_mpjpe_1000"])?;
    for r in history.initial.iter().chain(&history.epochs) {
        w.write_record([
            r.epoch.to_string(),
            r.train_loss.to_string(),
            r.val_loss.to_string(),
            r.val_mpjpe_1000.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"))
}

/// Appends to an existing history file (a resumed run) or creates it.
pub fn write_history(history: &TrainHistory, path: &Path, append: bool) -> Result<(), ReportError> {
    let text = history_csv(history)?;
    if append && path.exists() {
        let mut existing = fs::read_to_string(path).map_err(io(path))?;
        // the resumed run's pre-training row repeats the last finished epoch
        let rows: String = text.lines().skip(2).map(|l| format!("{l}\n")).collect();
        existing += &rows;
        write_file(path, existing.as_bytes())
    } else {
        write_file(path, text.as_bytes())
    }
}
