//! Metric records and tables.
//!
//! Records are single lines of space-separated `name=value` fields, e.g.
//! `epoch=3 loss=41.250000 split=valid mrr=0.512000 hits1=0.400000 hits3=0.600000 hits10=0.800000 queries=20`.

use std::fmt::Write as _;

use wge_core::dataset::Split;
use wge_core::eval::{Metrics, RankingReport};
use wge_core::train::EpochRecord;

fn metric_fields(split: Split, m: &Metrics) -> String {
    format!(
        "split={} mrr={:.6} hits1={:.6} hits3={:.6} hits10={:.6} queries={}",
        split.name(),
        m.mrr,
        m.hits1,
        m.hits3,
        m.hits10,
        m.queries
    )
}

pub fn epoch_line(record: &EpochRecord, split: Split) -> String {
    let mut line = format!("epoch={} loss={:.6}", record.epoch, record.loss);
    if let Some(m) = &record.eval {
        line.push(' ');
        line.push_str(&metric_fields(split, m));
    }
    line
}

/// Record for the metrics of a finished model; `epoch` is the epoch it was selected at.
pub fn final_line(epoch: usize, split: Split, m: &Metrics) -> String {
    format!("final epoch={epoch} {}", metric_fields(split, m))
}

/// Parses the `name=value` fields of a record.
pub fn parse_fields(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace().filter_map(|f| f.split_once('=')).collect()
}

/// Human-readable table with one row per labeled result.
pub fn table(rows: &[(String, Metrics)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
    let mut out =
        format!("{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n", "model", "MRR", "H@1", "H@3", "H@10", "queries");
    for (label, m) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8}",
            label, m.mrr, m.hits1, m.hits3, m.hits10, m.queries
        );
    }
    out
}

/// Per-query ranks as `head<TAB>relation<TAB>tail<TAB>side<TAB>rank` lines of labels.
pub fn ranks_tsv(report: &RankingReport, vocab: &wge_core::dataset::Vocab) -> String {
    let mut out = String::from("head\trelation\ttail\tside\trank\n");
    for q in &report.ranks {
        let [h, r, t] = vocab.triple_labels(q.triple);
        let _ = writeln!(out, "{h}\t{r}\t{t}\t{}\t{}", q.side.name(), q.rank);
    }
    out
}
