//! Result serialization: one row per pooled metric sample plus percentile
//! summary rows, as CSV or JSON lines. Output is byte-deterministic given
//! (config, seed, format), so external plotters can diff runs.

use std::io::Write;
use std::path::Path;

use mumimo_core::montecarlo::{EmpiricalCdf, SweepPoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("refusing to emit empty results")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

/// Summary percentiles appended after the per-sample rows.
pub const SUMMARY_PERCENTILES: [(f64, &str); 5] = [
    (0.05, "p05"),
    (0.25, "p25"),
    (0.50, "p50"),
    (0.75, "p75"),
    (0.95, "p95"),
];

/// Format with 6 significant digits, plain notation for moderate magnitudes
/// and scientific otherwise.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

fn rows(points: &[SweepPoint]) -> Vec<(String, String, String, f64, bool)> {
    let mut out = Vec::new();
    for point in points {
        let metrics: [(&str, &EmpiricalCdf); 2] = [
            ("mf_sinr", &point.result.mf_cdf),
            ("zf_snr", &point.result.zf_cdf),
        ];
        for (name, cdf) in metrics {
            for &sample in cdf.samples() {
                out.push((
                    point.label.clone(),
                    point.axis_value.clone(),
                    name.to_string(),
                    sample,
                    false,
                ));
            }
        }
        for (name, cdf) in metrics {
            // All ZF draws may be censored under extreme correlation; no
            // samples means no summary rows.
            if cdf.is_empty() {
                continue;
            }
            for (p, tag) in SUMMARY_PERCENTILES {
                let value = cdf.percentile(p).expect("non-empty CDF");
                out.push((
                    point.label.clone(),
                    point.axis_value.clone(),
                    format!("{name}_{tag}"),
                    value,
                    true,
                ));
            }
        }
    }
    out
}

/// Serialize results to a string in the requested format.
pub fn render_results(points: &[SweepPoint], format: OutputFormat) -> Result<String, OutputError> {
    if points.is_empty() || points.iter().any(|p| p.result.mf_cdf.is_empty()) {
        return Err(OutputError::Empty);
    }
    let rows = rows(points);
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str("scenario,axis_value,metric,sample_db,summary\n");
            for (scenario, axis_value, metric, sample, summary) in rows {
                out.push_str(&format!(
                    "{scenario},{axis_value},{metric},{},{summary}\n",
                    format_sig6(sample)
                ));
            }
        }
        OutputFormat::Jsonl => {
            for (scenario, axis_value, metric, sample, summary) in rows {
                let obj = serde_json::json!({
                    "scenario": scenario,
                    "axis_value": axis_value,
                    "metric": metric,
                    "sample_db": format_sig6(sample),
                    "summary": summary,
                });
                out.push_str(&obj.to_string());
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Write results to `path`, UTF-8, newline terminated.
pub fn emit_results(
    points: &[SweepPoint],
    path: &Path,
    format: OutputFormat,
) -> Result<(), OutputError> {
    let text = render_results(points, format)?;
    let io_err = |source| OutputError::Io { path: path.display().to_string(), source };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(text.as_bytes())
        .map_err(|source| OutputError::Io { path: path.display().to_string(), source })
}
