//! The `prepare`, `train`, `evaluate` and `ablate` workflows.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use wge_core::dataset::Split;
use wge_core::encoder::{ModelGraphs, Variant};
use wge_core::eval::{Metrics, RankingReport};
use wge_core::graph::{
    build_entity_focused, build_levi, build_relation_focused, extract_rf_constraints, filter_constraints,
};
use wge_core::train::{train as run_training, Model, TrainError};

use crate::checkpoint::{Checkpoint, Selection};
use crate::config::RunConfig;
use crate::data::Dataset;
use crate::export;
use crate::report;

pub const CHECKPOINT_FILE: &str = "checkpoint.wge";
pub const METRICS_FILE: &str = "metrics.log";
pub const CONFIG_FILE: &str = "config.txt";
pub const SUMMARY_FILE: &str = "summary.txt";

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub entities: usize,
    pub relations: usize,
    pub triples: [usize; 3],
    pub ef_edges: usize,
    pub rf_constraints: usize,
    pub rf_pairs: usize,
    pub rf_pairs_kept: usize,
    pub rf_constraints_kept: usize,
    pub rf_nodes: usize,
    pub rf_edges: usize,
    pub levi_edges: usize,
}

impl fmt::Display for PrepareSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entities={}", self.entities)?;
        writeln!(f, "relations={}", self.relations)?;
        for (s, n) in Split::ALL.iter().zip(self.triples) {
            writeln!(f, "{}_triples={n}", s.name())?;
        }
        writeln!(f, "ef_edges={}", self.ef_edges)?;
        writeln!(f, "rf_constraints={}", self.rf_constraints)?;
        writeln!(f, "rf_pairs={}", self.rf_pairs)?;
        writeln!(f, "rf_pairs_kept={}", self.rf_pairs_kept)?;
        writeln!(f, "rf_constraints_kept={}", self.rf_constraints_kept)?;
        writeln!(f, "rf_nodes={}", self.rf_nodes)?;
        writeln!(f, "rf_edges={}", self.rf_edges)?;
        writeln!(f, "levi_edges={}", self.levi_edges)
    }
}

/// Loads the dataset, builds both views and the Levi graph, and writes them with the vocabulary.
pub fn prepare(cfg: &RunConfig) -> Result<PrepareSummary> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.dataset_dir)?;
    let train = data.store.train();
    let ef = build_entity_focused(data.num_entities(), train);
    let all = extract_rf_constraints(train);
    let kept = filter_constraints(&all, cfg.train.beta)?;
    let rf = build_relation_focused(&kept.constraints, true);
    let levi = build_levi(data.num_entities(), train);

    let out = &cfg.out_dir;
    create_dir(out)?;
    write_file(&out.join("entities.tsv"), &export::labels_tsv(data.vocab.entities()))?;
    write_file(&out.join("relations.tsv"), &export::labels_tsv(data.vocab.relations()))?;
    write_file(&out.join("ef_edges.tsv"), &export::edges_tsv(&ef))?;
    write_file(&out.join("rf_edges.tsv"), &export::edges_tsv(&rf))?;
    write_file(&out.join("levi_edges.tsv"), &export::edges_tsv(&levi))?;
    write_file(&out.join("rf_pairs.tsv"), &export::rf_pairs_tsv(&all, &kept, &data.vocab))?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_text())?;

    let summary = PrepareSummary {
        entities: data.num_entities(),
        relations: data.num_relations(),
        triples: Split::ALL.map(|s| data.store.split(s).len()),
        ef_edges: ef.edges().len(),
        rf_constraints: all.constraints.len(),
        rf_pairs: all.num_pairs(),
        rf_pairs_kept: kept.num_pairs(),
        rf_constraints_kept: kept.constraints.len(),
        rf_nodes: rf.num_nodes(),
        rf_edges: rf.edges().len(),
        levi_edges: levi.edges().len(),
    };
    write_file(&out.join(SUMMARY_FILE), &summary.to_string())?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub out_dir: PathBuf,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub best_epoch: usize,
    /// Selection-split metrics of the kept parameters.
    pub selection: Option<Metrics>,
    /// Metrics of the kept parameters on every non-empty split except train.
    pub finals: Vec<(Split, Metrics)>,
}

/// Trains one model, writing its resolved config, metric log, checkpoint and summary to `out_dir`.
pub fn train(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<TrainReport> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.dataset_dir)?;
    let t = &cfg.train;
    let graphs = ModelGraphs::build(t.variant, data.num_entities(), data.num_relations(), data.store.train(), t.beta)?;
    let filter = data.filter();

    let out = &cfg.out_dir;
    create_dir(out)?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_text())?;
    let log_path = out.join(METRICS_FILE);
    let mut log =
        BufWriter::new(File::create(&log_path).with_context(|| format!("cannot create {}", log_path.display()))?);
    let mut io_error = None;
    let result = run_training(t, &data.store, data.num_entities(), data.num_relations(), &graphs, &filter, |rec| {
        let line = report::epoch_line(rec, t.selection_split);
        if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            io_error.get_or_insert(e);
        }
        progress(&line);
    });
    if let Some(e) = io_error {
        return Err(e).with_context(|| format!("cannot write {}", log_path.display()));
    }
    let ckpt_path = out.join(CHECKPOINT_FILE);
    let outcome = match result {
        Ok(o) => o,
        Err(TrainError::Diverged { epoch, cause, last_good }) => {
            Checkpoint::from_model(&last_good, data.vocab_hash(), cfg.to_text(), None).save(&ckpt_path)?;
            bail!(
                "training diverged at epoch {epoch} ({cause}); last good parameters saved to {}",
                ckpt_path.display()
            );
        }
        Err(TrainError::Model(e)) => return Err(e.into()),
    };

    let selection = outcome.best_metrics.map(|metrics| Selection {
        split: t.selection_split,
        epoch: outcome.best_epoch as u64,
        metrics,
    });
    Checkpoint::from_model(&outcome.best, data.vocab_hash(), cfg.to_text(), selection).save(&ckpt_path)?;

    let mut finals = Vec::new();
    for split in [Split::Valid, Split::Test] {
        let triples = data.store.split(split);
        if triples.is_empty() {
            continue;
        }
        let m = outcome.best.evaluate(&graphs, triples, &filter)?.metrics;
        let line = report::final_line(outcome.best_epoch, split, &m);
        writeln!(log, "{line}")
            .and_then(|_| log.flush())
            .with_context(|| format!("cannot write {}", log_path.display()))?;
        progress(&line);
        finals.push((split, m));
    }
    let rows: Vec<(String, Metrics)> =
        finals.iter().map(|(s, m)| (format!("{} {}", t.variant.name(), s.name()), *m)).collect();
    write_file(&out.join(SUMMARY_FILE), &report::table(&rows))?;

    Ok(TrainReport {
        out_dir: out.clone(),
        epochs_run: outcome.log.len(),
        stopped_early: outcome.stopped_early,
        best_epoch: outcome.best_epoch,
        selection: outcome.best_metrics,
        finals,
    })
}

/// A checkpoint restored against its dataset.
pub struct Restored {
    pub config: RunConfig,
    pub checkpoint: Checkpoint,
    pub data: Dataset,
    pub graphs: ModelGraphs,
    pub model: Model,
}

/// Loads `checkpoint`, reading the dataset from `dataset_dir` or from the stored config.
pub fn restore(checkpoint: &Path, dataset_dir: Option<&Path>) -> Result<Restored> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let mut config = RunConfig::parse(&ckpt.config, "checkpoint config")?;
    if let Some(dir) = dataset_dir {
        config.dataset_dir = dir.to_path_buf();
    }
    let data = Dataset::load(&config.dataset_dir)?;
    ckpt.check_vocab(data.vocab_hash())?;
    let t = &config.train;
    let graphs = ModelGraphs::build(t.variant, data.num_entities(), data.num_relations(), data.store.train(), t.beta)?;
    let mut model = Model::init(t, &graphs, data.num_entities(), data.num_relations())?;
    model.load_params(&ckpt.tensors).context("checkpoint parameters do not fit the configured model")?;
    Ok(Restored { config, checkpoint: ckpt, data, graphs, model })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub report: RankingReport,
    pub table: String,
    pub report_path: PathBuf,
}

/// Filtered ranking of `split` with a saved checkpoint. Writes `eval_<split>.txt`
/// and `ranks_<split>.tsv` to `out_dir`, or next to the checkpoint.
pub fn evaluate(
    checkpoint: &Path,
    dataset_dir: Option<&Path>,
    split: Split,
    out_dir: Option<&Path>,
) -> Result<EvalOutput> {
    let r = restore(checkpoint, dataset_dir)?;
    let report = r.model.evaluate(&r.graphs, r.data.store.split(split), &r.data.filter())?;
    let label = format!("{} {}", r.config.train.variant.name(), split.name());
    let table = report::table(&[(label, report.metrics)]);
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    create_dir(&dir)?;
    let epoch = r.checkpoint.selection.map_or(0, |s| s.epoch as usize);
    let report_path = dir.join(format!("eval_{}.txt", split.name()));
    write_file(&report_path, &format!("{}\n\n{table}", report::final_line(epoch, split, &report.metrics)))?;
    write_file(&dir.join(format!("ranks_{}.tsv", split.name())), &report::ranks_tsv(&report, &r.data.vocab))?;
    Ok(EvalOutput { report, table, report_path })
}

/// Trains each variant under an otherwise identical config, in `out_dir/<variant>`,
/// and writes a comparison table to `out_dir/ablation.txt`.
pub fn ablate(
    cfg: &RunConfig,
    variants: &[Variant],
    progress: &mut dyn FnMut(&str),
) -> Result<Vec<(Variant, TrainReport)>> {
    cfg.validate()?;
    let mut results = Vec::with_capacity(variants.len());
    for &v in variants {
        let mut run = cfg.clone();
        run.train.variant = v;
        run.out_dir = cfg.out_dir.join(v.name());
        let mut tagged = |line: &str| progress(&format!("[{}] {line}", v.name()));
        let report = train(&run, &mut tagged)?;
        results.push((v, report));
    }
    let rows: Vec<(String, Metrics)> =
        results.iter().filter_map(|(v, r)| r.selection.map(|m| (v.name().to_string(), m))).collect();
    let header = format!("split={}\n", cfg.train.selection_split.name());
    write_file(&cfg.out_dir.join("ablation.txt"), &(header + &report::table(&rows)))?;
    Ok(results)
}
