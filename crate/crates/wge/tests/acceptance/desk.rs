use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use wge::commands;
use wge::config::RunConfig;
use wge_core::dataset::Split;
use wge_core::encoder::Variant;
use wge_core::eval::Metrics;

use crate::{check, within, Status};

pub const DATA_VAR: &str = "CODEX_S_DIR";
pub const EPOCHS_VAR: &str = "CODEX_S_EPOCHS";
const MIN_MRR: f64 = 0.30;
const MIN_HITS10: f64 = 0.50;
const REFERENCE_TEST_MRR: f64 = 0.450;
const REFERENCE_TEST_HITS10: f64 = 0.663;
const TREND_SLACK: f64 = 0.01;

/// Two-view validation metrics from the desk run, reused by the ablation trend.
static TWO_VIEW: Mutex<Option<Metrics>> = Mutex::new(None);

fn dataset_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_VAR).map(PathBuf::from)
}

fn desk_config(dataset_dir: PathBuf, out_dir: PathBuf, variant: Variant) -> RunConfig {
    let mut cfg = RunConfig { dataset_dir, out_dir, ..RunConfig::default() };
    let t = &mut cfg.train;
    t.variant = variant;
    t.dim = 64;
    t.layers = 2;
    t.beta = 0.2;
    t.epochs = std::env::var(EPOCHS_VAR).ok().and_then(|v| v.parse().ok()).unwrap_or(300).min(300);
    t.batch_size = 4096;
    t.lr = 0.01;
    t.alpha0 = 0.6;
    t.eval_every = 10;
    t.selection_split = Split::Valid;
    t.seed = 0;
    cfg
}

fn run_variant(dir: &Path, out: &tempfile::TempDir, variant: Variant) -> commands::TrainReport {
    let cfg = desk_config(dir.to_path_buf(), out.path().join(variant.name()), variant);
    commands::train(&cfg, &mut |line| eprintln!("[{}] {line}", variant.name())).expect("training")
}

pub fn desk_run() -> Status {
    let Some(dir) = dataset_dir() else {
        return Status::NotRun(format!("set {DATA_VAR} to a CoDEx-S directory with train.txt, valid.txt and test.txt"));
    };
    let started = Instant::now();
    let out = tempfile::tempdir().expect("temp dir");
    let report = run_variant(&dir, &out, Variant::TwoView);
    let valid = report.selection.expect("validation metrics");
    *TWO_VIEW.lock().unwrap() = Some(valid);
    let test = report.finals.iter().find(|(s, _)| *s == Split::Test).map(|(_, m)| *m);
    let gap = test.map_or("no test split".into(), |m| {
        format!(
            "test MRR {:.4} (reference {REFERENCE_TEST_MRR}, gap {:+.4}), test Hits@10 {:.4} (reference {REFERENCE_TEST_HITS10}, gap {:+.4})",
            m.mrr,
            m.mrr - REFERENCE_TEST_MRR,
            m.hits10,
            m.hits10 - REFERENCE_TEST_HITS10
        )
    });
    let detail = format!(
        "{} epochs, best epoch {}: valid MRR {:.4} (>= {MIN_MRR}), valid Hits@10 {:.4} (>= {MIN_HITS10}); {gap}",
        report.epochs_run, report.best_epoch, valid.mrr, valid.hits10
    );
    let ok = valid.mrr >= MIN_MRR && valid.hits10 >= MIN_HITS10;
    within(check(ok, detail), started.elapsed(), Duration::from_secs(4 * 3600))
}

pub fn ablation_trend() -> Status {
    let Some(dir) = dataset_dir() else {
        return Status::NotRun(format!("set {DATA_VAR} to run the five ablation variants"));
    };
    let Some(two_view) = *TWO_VIEW.lock().unwrap() else {
        return Status::NotRun("the two-view desk run did not finish".into());
    };
    let out = tempfile::tempdir().expect("temp dir");
    let mut rows = vec![format!("two-view {:.4}", two_view.mrr)];
    let mut behind = Vec::new();
    for v in Variant::ABLATIONS {
        let m = run_variant(&dir, &out, v).selection.expect("validation metrics");
        rows.push(format!("{} {:.4}", v.name(), m.mrr));
        if two_view.mrr < m.mrr - TREND_SLACK {
            behind.push(v.name());
        }
    }
    let detail = format!("valid MRR: {}", rows.join(", "));
    if behind.is_empty() {
        Status::Pass(format!("{detail}; two-view within {TREND_SLACK} of or ahead of every ablation"))
    } else {
        Status::Deviation(format!("{detail}; two-view trails {} by more than {TREND_SLACK}", behind.join(", ")))
    }
}
