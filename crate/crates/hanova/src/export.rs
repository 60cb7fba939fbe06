//! Machine-readable exports and the combined text report.

use hanova_core::summary::IntervalEstimate;
use serde::Serialize;

use crate::render::{render_classical_table, render_vc_svg, render_vc_text};
use crate::run::{OutputFormat, RunResults};

/// Round to 10 significant digits; non-finite values become `None`.
pub fn round10(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    format!("{x:.9e}").parse().ok()
}

#[derive(Serialize)]
struct JsonInterval {
    est: Option<f64>,
    q025: Option<f64>,
    q25: Option<f64>,
    q75: Option<f64>,
    q975: Option<f64>,
}

impl From<&IntervalEstimate> for JsonInterval {
    fn from(iv: &IntervalEstimate) -> Self {
        Self {
            est: round10(iv.est),
            q025: round10(iv.q025),
            q25: round10(iv.q25),
            q75: round10(iv.q75),
            q975: round10(iv.q975),
        }
    }
}

#[derive(Serialize)]
struct JsonMomentsPair {
    sigma: JsonInterval,
    s: JsonInterval,
}

#[derive(Serialize)]
struct JsonBatch {
    label: String,
    #[serde(rename = "J")]
    j: usize,
    df: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<JsonInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<JsonInterval>,
    /// Moments estimates when a posterior is also reported.
    #[serde(skip_serializing_if = "Option::is_none")]
    moments: Option<JsonMomentsPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rhat_sigma: Option<f64>,
}

#[derive(Serialize)]
struct JsonDrawsMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warmup: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    saved_draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parameter_expansion: Option<bool>,
}

#[derive(Serialize)]
struct JsonResults {
    model: String,
    method: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate_source: Option<&'static str>,
    batches: Vec<JsonBatch>,
    draws_meta: JsonDrawsMeta,
    warnings: Vec<String>,
}

fn json_model(results: &RunResults) -> JsonResults {
    let summary = results.summary();
    let batches = results
        .batches
        .iter()
        .enumerate()
        .map(|(m, b)| {
            let row = results.table.as_ref().map(|t| &t.rows[m]);
            let vc = summary.map(|s| &s.rows[m]);
            let moments = match (&results.bayes, &results.moments) {
                (Some(_), Some(mo)) => {
                    let r = &mo.summary.rows[m];
                    Some(JsonMomentsPair {
                        sigma: r.sigma.as_ref().map_or_else(|| (&r.s).into(), Into::into),
                        s: (&r.s).into(),
                    })
                }
                _ => None,
            };
            JsonBatch {
                label: b.label.clone(),
                j: b.j,
                df: b.df,
                ss: row.and_then(|r| round10(r.ss)),
                ms: row.and_then(|r| r.ms).and_then(round10),
                f: row.and_then(|r| r.f).and_then(round10),
                p: row.and_then(|r| r.p).and_then(round10),
                sigma: vc.and_then(|v| v.sigma.as_ref()).map(Into::into),
                s: vc.map(|v| (&v.s).into()),
                moments,
                rhat_sigma: results
                    .bayes
                    .as_ref()
                    .and_then(|bo| bo.diagnostics.rhat_sigma[m])
                    .and_then(round10),
            }
        })
        .collect();
    let draws_meta = JsonDrawsMeta {
        n_draws: results.moments.as_ref().map(|m| m.n_draws),
        chains: results.bayes.as_ref().map(|b| b.config.chains),
        iters: results.bayes.as_ref().map(|b| b.config.iters),
        warmup: results.bayes.as_ref().map(|b| b.config.warmup),
        thin: results.bayes.as_ref().map(|b| b.config.thin),
        saved_draws: results.bayes.as_ref().map(|b| b.draws.len()),
        parameter_expansion: results.bayes.as_ref().map(|b| b.config.px),
    };
    JsonResults {
        model: results.model.clone(),
        method: results.method.as_str(),
        seed: results.seed,
        estimate_source: summary.map(|s| s.source.as_str()),
        batches,
        draws_meta,
        warnings: results.warnings.iter().map(ToString::to_string).collect(),
    }
}

/// JSON document; numbers carry 10 significant digits and keys keep a fixed order.
pub fn write_json(results: &RunResults) -> Result<Vec<u8>, serde_json::Error> {
    let mut out = serde_json::to_vec_pretty(&json_model(results))?;
    out.push(b'\n');
    Ok(out)
}

fn cell(x: Option<f64>) -> String {
    x.and_then(round10).map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV row per batch.
pub fn write_csv(results: &RunResults) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["label", "J", "df", "ss", "ms", "f", "p"].map(String::from).to_vec();
    for q in ["sigma", "s"] {
        for k in ["est", "q025", "q25", "q75", "q975"] {
            header.push(format!("{q}_{k}"));
        }
    }
    w.write_record(&header)?;
    let summary = results.summary();
    for (m, b) in results.batches.iter().enumerate() {
        let row = results.table.as_ref().map(|t| &t.rows[m]);
        let mut rec = vec![
            b.label.clone(),
            b.j.to_string(),
            b.df.to_string(),
            cell(row.map(|r| r.ss)),
            cell(row.and_then(|r| r.ms)),
            cell(row.and_then(|r| r.f)),
            cell(row.and_then(|r| r.p)),
        ];
        let vc = summary.map(|s| &s.rows[m]);
        for iv in [vc.and_then(|v| v.sigma), vc.map(|v| v.s)] {
            match iv {
                Some(iv) => rec.extend([iv.est, iv.q025, iv.q25, iv.q75, iv.q975].map(|x| cell(Some(x)))),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Classical table, display and warnings as plain text.
pub fn render_text(results: &RunResults) -> String {
    let mut out = format!("model: {}\nmethod: {}\n\n", results.model, results.method);
    if let Some(t) = &results.table {
        out.push_str(&render_classical_table(t));
        out.push('\n');
    }
    if let Some(s) = results.summary() {
        out.push_str(&render_vc_text(s));
    }
    if !results.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &results.warnings {
            out.push_str(&format!("  {w}\n"));
        }
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV serialization failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("the display needs variance-component estimates (method moments, bayes or all)")]
    NoDisplay,
}

/// Bytes for the requested format.
pub fn render(results: &RunResults, format: OutputFormat) -> Result<Vec<u8>, ExportError> {
    Ok(match format {
        OutputFormat::Text => render_text(results).into_bytes(),
        OutputFormat::Json => write_json(results)?,
        OutputFormat::Csv => write_csv(results)?,
        OutputFormat::Svg => render_vc_svg(results.summary().ok_or(ExportError::NoDisplay)?).into_bytes(),
    })
}
