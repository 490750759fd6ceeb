use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Correlation, CorrelationResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricNormalization {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub result: CorrelationResult,
}

/// Metric-versus-human correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub dataset: String,
    pub n_pairs: usize,
    pub rows: Vec<ReportRow>,
    pub normalization: Vec<MetricNormalization>,
    /// Disclosures such as excluded annotators or rows dropped for NaN.
    pub notes: Vec<String>,
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}

fn cell(c: Option<Correlation>) -> String {
    match c {
        None => "undefined".to_owned(),
        Some(c) => {
            let p = if c.p_value < 1e-4 {
                "<0.0001".to_owned()
            } else {
                format!("{:.4}", c.p_value)
            };
            format!("{:.4} ({p})", c.coefficient)
        }
    }
}

impl CorrelationReport {
    pub fn row(&self, name: &str) -> Option<&CorrelationResult> {
        self.rows.iter().find(|r| r.name == name).map(|r| &r.result)
    }

    pub fn to_json_value(&self) -> Value {
        let mut metrics = Map::new();
        for row in &self.rows {
            let r = &row.result;
            let mut m = Map::new();
            m.insert("pearson_r".into(), opt(r.pearson.map(|c| c.coefficient)));
            m.insert("pearson_p".into(), opt(r.pearson.map(|c| c.p_value)));
            m.insert("spearman_rho".into(), opt(r.spearman.map(|c| c.coefficient)));
            m.insert("spearman_p".into(), opt(r.spearman.map(|c| c.p_value)));
            m.insert("n_used".into(), Value::from(r.n_used));
            metrics.insert(row.name.clone(), Value::Object(m));
        }
        let mut norm = Map::new();
        for n in &self.normalization {
            let mut m = Map::new();
            m.insert("min".into(), Value::from(n.min));
            m.insert("max".into(), Value::from(n.max));
            norm.insert(n.name.clone(), Value::Object(m));
        }
        let mut root = Map::new();
        root.insert("dataset".into(), Value::from(self.dataset.clone()));
        root.insert("n_pairs".into(), Value::from(self.n_pairs));
        root.insert("normalization".into(), Value::Object(norm));
        root.insert("metrics".into(), Value::Object(metrics));
        root.insert("notes".into(), Value::from(self.notes.clone()));
        Value::Object(root)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let header = ["Metric", "Pearson (p)", "Spearman (p)", "n"];
        let body: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    cell(r.result.pearson),
                    cell(r.result.spearman),
                    r.result.n_used.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {} ({} pairs)", self.dataset, self.n_pairs);
        let line = |out: &mut String, cells: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        };
        line(&mut out, header);
        let rule = widths.iter().sum::<usize>() + 6;
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for row in &body {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3]]);
        }
        for n in &self.normalization {
            let _ = writeln!(out, "normalization {}: min={:.6} max={:.6}", n.name, n.min, n.max);
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}
