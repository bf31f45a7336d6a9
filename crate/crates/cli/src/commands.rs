use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use segfree::corpus::{read_documents, write_boundaries, write_document, Document};
use segfree::evaluation::{bootstrap_significance, emit_curve, CurvePoint};
use segfree::pipeline::{
    generate_splits, score_document, simulate_document, stage_seed, summarize_system,
    train_models, DocumentScore, Splits, Stage, SystemReport, TrainedModels,
};
use segfree::policy::SessionMode;
use segfree::trace::SessionTrace;
use segfree::translator::ToyLexicon;

use crate::config::ExperimentConfig;
use crate::layout::Layout;
use crate::DataError;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| DataError(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)
        .map_err(|e| DataError(format!("invalid {}: {e}", path.display())))?)
}

fn snapshot(layout: &Layout, stage: &str, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(layout.root())?;
    fs::write(layout.stage_config(stage), config.to_toml()?)?;
    Ok(())
}

fn load_split(layout: &Layout, split: &str) -> Result<Vec<Document>> {
    let dir = layout.split(split);
    if !dir.is_dir() {
        anyhow::bail!(DataError(format!(
            "split directory {} is missing; run gen-data first",
            dir.display()
        )));
    }
    let docs = read_documents(&dir).with_context(|| format!("reading {}", dir.display()))?;
    if docs.is_empty() {
        anyhow::bail!(DataError(format!("no documents in {}", dir.display())));
    }
    Ok(docs)
}

fn load_lexicon(layout: &Layout) -> Result<ToyLexicon> {
    let path = layout.lexicon();
    let file = File::open(&path)
        .map_err(|e| DataError(format!("cannot open {}: {e}", path.display())))?;
    ToyLexicon::read(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn gen_data(config: &ExperimentConfig, layout: &Layout) -> Result<Value> {
    let data_seed = stage_seed(config.seed, Stage::Data);
    let splits = generate_splits(data_seed, &config.corpus)?;
    let data = layout.data();
    if data.exists() {
        // stale documents from a larger earlier run would otherwise be read back
        fs::remove_dir_all(&data).with_context(|| format!("clearing {}", data.display()))?;
    }
    fs::create_dir_all(&data)?;
    splits.lexicon.write(BufWriter::new(File::create(layout.lexicon())?))?;
    let mut counts = BTreeMap::new();
    for name in Splits::NAMES {
        let docs = splits.by_name(name).expect("known split");
        let dir = layout.split(name);
        fs::create_dir_all(&dir)?;
        for doc in docs {
            let mut out = BufWriter::new(File::create(dir.join(format!("{}.tsv", doc.id)))?);
            write_document(doc, &mut out)?;
            out.flush()?;
        }
        let entries: Vec<(String, Vec<usize>)> =
            docs.iter().map(|d| (d.id.clone(), d.sentence_ends())).collect();
        write_boundaries(&entries, BufWriter::new(File::create(layout.boundaries(name))?))?;
        counts.insert(name, docs.len());
    }
    snapshot(layout, "gen-data", config)?;
    Ok(json!({
        "command": "gen-data",
        "status": "ok",
        "data_seed": data_seed,
        "documents": counts,
        "lexicon_entries": splits.lexicon.len(),
    }))
}

pub fn train(config: &ExperimentConfig, layout: &Layout) -> Result<Value> {
    let train = load_split(layout, "train")?;
    let dev = load_split(layout, "dev")?;
    let (models, summary) =
        train_models(&train, &dev, &config.train).context("training the boundary models")?;
    models.save(&layout.models())?;
    write_json(
        &layout.training_log(),
        &json!({ "config": config.train, "summary": summary }),
    )?;
    snapshot(layout, "train", config)?;
    Ok(json!({
        "command": "train",
        "status": "ok",
        "weights": summary.weights,
        "dev_boundary_accuracy": summary.dev_boundary_accuracy,
        "length_ratio": summary.length_ratio,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Failure {
    system: String,
    k: usize,
    video: String,
    error: String,
    events_before_abort: usize,
}

pub fn simulate(config: &ExperimentConfig, layout: &Layout) -> Result<Value> {
    let docs = load_split(layout, &config.sweep.split)?;
    let lexicon = load_lexicon(layout)?;
    let needs_models = config.sweep.modes.iter().any(|m| !m.is_segmented());
    let models = if needs_models {
        let dir = layout.models();
        Some(TrainedModels::load(&dir).map_err(|e| {
            DataError(format!("cannot load models from {}: {e}; run train first", dir.display()))
        })?)
    } else {
        None
    };

    let cells = config.sweep.cells();
    let jobs: Vec<(SessionMode, usize, &Document)> = cells
        .iter()
        .flat_map(|&(m, k)| docs.iter().map(move |d| (m, k, d)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(mode, k, doc)| {
            simulate_document(doc, &lexicon, models.as_ref(), &config.sweep.spec(mode, k))
        })
        .collect();

    for &(mode, k) in &cells {
        let dir = layout.trace_cell(mode, k);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
    }
    let mut failures = Vec::new();
    let mut written = 0usize;
    for (&(mode, k, doc), result) in jobs.iter().zip(results) {
        match result {
            Ok(trace) => {
                let mut out = BufWriter::new(File::create(layout.trace(mode, k, &doc.id))?);
                trace.write_jsonl(&mut out)?;
                out.flush()?;
                written += 1;
            }
            Err(abort) => failures.push(Failure {
                system: mode.name().to_string(),
                k,
                video: doc.id.clone(),
                error: abort.error.to_string(),
                events_before_abort: abort.trace.events.len(),
            }),
        }
    }
    write_json(&layout.failures(), &failures)?;
    snapshot(layout, "simulate", config)?;
    Ok(json!({
        "command": "simulate",
        "status": if failures.is_empty() { "ok" } else { "warning" },
        "traces": written,
        "aborted": failures.len(),
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Significance {
    system_a: String,
    system_b: String,
    k: usize,
    videos: usize,
    bleu_a: f64,
    bleu_b: f64,
    p_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Report {
    status: String,
    warnings: Vec<String>,
    split: String,
    seed: u64,
    resamples: usize,
    systems: Vec<SystemReport>,
    significance: Vec<Significance>,
}

fn load_trace(path: &Path) -> std::result::Result<SessionTrace, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    SessionTrace::read_jsonl(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))
}

/// Per-video scores of one cell; `Err` carries the reason a video is missing.
type CellScores = Vec<std::result::Result<DocumentScore, String>>;

pub fn evaluate(config: &ExperimentConfig, layout: &Layout) -> Result<Value> {
    let docs = load_split(layout, &config.sweep.split)?;
    let cells = config.sweep.cells();
    let scored: Vec<CellScores> = cells
        .par_iter()
        .map(|&(mode, k)| {
            docs.par_iter()
                .map(|doc| {
                    let trace = load_trace(&layout.trace(mode, k, &doc.id))?;
                    score_document(doc, &trace).map_err(|e| format!("{}: {e}", doc.id))
                })
                .collect()
        })
        .collect();

    let mut warnings = Vec::new();
    let mut systems = Vec::new();
    let mut by_cell: BTreeMap<(SessionMode, usize), &CellScores> = BTreeMap::new();
    for (&(mode, k), scores) in cells.iter().zip(&scored) {
        let mut present = Vec::new();
        let mut missing = Vec::new();
        for (doc, s) in docs.iter().zip(scores) {
            match s {
                Ok(s) => present.push((doc, s)),
                Err(reason) => {
                    warnings.push(format!("{} k={k}: {reason}", mode.name()));
                    missing.push(doc.id.clone());
                }
            }
        }
        if present.is_empty() {
            warnings.push(format!("{} k={k}: no usable traces, cell skipped", mode.name()));
            continue;
        }
        systems.push(summarize_system(mode.name(), k, &present, missing)?);
        by_cell.insert((mode, k), scores);
    }
    if systems.is_empty() {
        anyhow::bail!(DataError(format!(
            "no traces under {}; run simulate first",
            layout.traces().display()
        )));
    }

    let eval_seed = stage_seed(config.seed, Stage::Evaluate);
    let mut significance = Vec::new();
    for &(a, b) in &config.evaluate.pairs {
        for k in config.sweep.ks() {
            let (Some(sa), Some(sb)) = (by_cell.get(&(a, k)), by_cell.get(&(b, k))) else {
                continue;
            };
            let (mut ha, mut hb, mut refs) = (Vec::new(), Vec::new(), Vec::new());
            let mut videos = 0;
            for ((doc, x), y) in docs.iter().zip(sa.iter()).zip(sb.iter()) {
                if let (Ok(x), Ok(y)) = (x, y) {
                    ha.extend(x.aligned.segments.iter().cloned());
                    hb.extend(y.aligned.segments.iter().cloned());
                    refs.extend(doc.references());
                    videos += 1;
                }
            }
            let p_value =
                match bootstrap_significance(&ha, &hb, &refs, config.evaluate.resamples, eval_seed) {
                    Ok(p) => p,
                    Err(e) => {
                        warnings.push(format!("{} vs {} k={k}: {e}", a.name(), b.name()));
                        continue;
                    }
                };
            significance.push(Significance {
                system_a: a.name().to_string(),
                system_b: b.name().to_string(),
                k,
                videos,
                bleu_a: segfree::evaluation::bleu(&ha, &refs)?.bleu,
                bleu_b: segfree::evaluation::bleu(&hb, &refs)?.bleu,
                p_value,
            });
        }
    }

    let report = Report {
        status: if warnings.is_empty() { "ok" } else { "warning" }.to_string(),
        warnings,
        split: config.sweep.split.clone(),
        seed: eval_seed,
        resamples: config.evaluate.resamples,
        systems,
        significance,
    };
    fs::create_dir_all(layout.eval())?;
    write_json(&layout.report(), &report)?;
    let points: Vec<CurvePoint> = report.systems.iter().map(SystemReport::curve_point).collect();
    emit_curve(&points, &layout.curve())?;
    snapshot(layout, "evaluate", config)?;
    Ok(json!({
        "command": "evaluate",
        "status": report.status,
        "systems": report.systems.len(),
        "warnings": report.warnings.len(),
        "report": layout.report(),
    }))
}

/// Re-emits the curve from an existing report, optionally for a subset of systems.
pub fn curve(layout: &Layout, systems: &[SessionMode], out: Option<&Path>) -> Result<Value> {
    let report: Report = read_json(&layout.report())?;
    let points: Vec<CurvePoint> = report
        .systems
        .iter()
        .filter(|s| systems.is_empty() || systems.iter().any(|m| m.name() == s.system))
        .map(SystemReport::curve_point)
        .collect();
    if points.is_empty() {
        anyhow::bail!(DataError("no report rows match the requested systems".into()));
    }
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| layout.curve());
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    emit_curve(&points, &path)?;
    Ok(json!({ "command": "curve", "status": "ok", "points": points.len(), "curve": path }))
}
