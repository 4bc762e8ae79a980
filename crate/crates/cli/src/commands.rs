//! One function per subcommand. Each reads its inputs from disk, writes its
//! artifacts into an output directory (recording them in the run manifest)
//! and returns a short JSON summary for stdout.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use weednet_core::dataset::{self, class_stats, Dataset, Taxonomy};
use weednet_core::ensemble::{ensemble_run, CropBudget, EnsembleDecision};
use weednet_core::imaging::{segment_field_image, to_unit_tensor, SegmentationParams};
use weednet_core::nn::{realize, train, Family, Genotype, ImageSet, TrainedModel};
use weednet_core::objectives::{evaluate, EvalReport, ObjectiveKind};
use weednet_core::search::{select_optimal_with, ProbeScorer, Scorer, SearchDataset, Selection};
use weednet_core::{mix_seed, Error as CoreError};

use crate::config::{read_budget, PipelineConfig};
use crate::error::{CliError, Result};
use crate::imageio::{read_rgb, write_png};
use crate::manifest::{read_manifest, write_manifest};
use crate::reports::{self, ErrorPercentages, EvaluateReport, ModelReport};
use crate::run_manifest::RunManifest;
use crate::synth::{gen_field, gen_plants, FieldSpec};
use crate::weights::{self, SavedModel};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::json(path))?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(CliError::json(path))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let err = |e: csv::Error| CliError::Csv { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Decodes every image of `ds` and resizes it to the network input side.
pub fn load_image_set(ds: &Dataset, side: usize) -> Result<ImageSet> {
    let mut data = Vec::with_capacity(ds.len() * side * side * 3);
    for s in &ds.samples {
        let img = read_rgb(Path::new(&s.image_path))?;
        data.extend(to_unit_tensor(&img, side));
    }
    Ok(ImageSet::new(side, data, ds.labels())?)
}

pub fn cmd_gen_plants(out: &Path, n_per: usize, ambiguity: f64, seed: u64) -> Result<Value> {
    create_dir(out)?;
    let samples = gen_plants(n_per, ambiguity, seed);
    let mut rows = Vec::with_capacity(samples.len());
    let mut files = Vec::with_capacity(samples.len() + 2);
    for (i, s) in samples.iter().enumerate() {
        let rel = format!("images/{}_{i:05}.png", s.shape.name());
        write_png(&out.join(&rel), &s.image)?;
        rows.push((rel.clone(), s.shape.name().to_string(), s.shape.group().as_str().to_string()));
        files.push(rel);
    }
    let ds = Dataset::from_rows(rows.iter().map(|(p, c, g)| (out.join(p).to_string_lossy().into_owned(), c, g)))?;
    write_manifest(&out.join("manifest.csv"), &ds)?;
    let ambiguous: Vec<usize> = samples.iter().enumerate().filter(|(_, s)| s.ambiguous).map(|(i, _)| i).collect();
    let report = json!({
        "images": samples.len(),
        "per_category": n_per,
        "ambiguity": ambiguity,
        "ambiguous_indices": ambiguous,
        "seed": seed,
        "stats": class_stats(&ds),
    });
    write_json(&out.join("plants_report.json"), &report)?;
    files.extend(["manifest.csv".to_string(), "plants_report.json".to_string()]);
    RunManifest::record(out, "gen-plants", &files)?;
    Ok(json!({ "images": samples.len(), "manifest": out.join("manifest.csv") }))
}

pub fn cmd_gen_field(out: &Path, count: usize, spec: FieldSpec, seed: u64) -> Result<Value> {
    create_dir(out)?;
    let mut truth = Vec::with_capacity(count);
    let mut files = Vec::with_capacity(count + 1);
    for i in 0..count {
        let (img, t) = gen_field(spec, mix_seed(seed, i as u64));
        let name = format!("field_{i:03}.png");
        write_png(&out.join(&name), &img)?;
        truth.push(json!({ "image": name, "truth": t }));
        files.push(name);
    }
    write_json(&out.join("truth.json"), &json!({ "spec": spec, "seed": seed, "fields": truth }))?;
    files.push("truth.json".into());
    RunManifest::record(out, "gen-field", &files)?;
    Ok(json!({ "fields": count }))
}

#[derive(Serialize)]
struct SegmentedImage {
    source: String,
    segments: usize,
    error: Option<String>,
}

pub fn cmd_segment(input: &Path, out: &Path, params: &SegmentationParams) -> Result<Value> {
    params.validate()?;
    create_dir(out)?;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(CliError::io(input))?
        .map(|e| e.map(|e| e.path()).map_err(CliError::io(input)))
        .collect::<Result<_>>()?;
    entries.retain(|p| p.is_file());
    entries.sort();

    let mut images = Vec::new();
    let mut index = Vec::new();
    let mut files = Vec::new();
    for path in entries {
        let source = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let img = match read_rgb(&path) {
            Ok(img) => img,
            Err(e) => {
                let error = match e {
                    CliError::Image { message, .. } => message,
                    CliError::Io { source, .. } => source.to_string(),
                    other => return Err(other),
                };
                images.push(SegmentedImage { source, segments: 0, error: Some(error) });
                continue;
            }
        };
        let segs = segment_field_image(&img, params);
        for (k, s) in segs.iter().enumerate() {
            let name = format!("{stem}_seg{}.png", k + 1);
            write_png(&out.join(&name), &s.image)?;
            index.push(vec![
                source.clone(),
                name.clone(),
                s.bbox.x.to_string(),
                s.bbox.y.to_string(),
                s.bbox.w.to_string(),
                s.bbox.h.to_string(),
                format!("{:.6}", s.area_fraction),
                format!("{:.6}", s.shape_ratio),
            ]);
            files.push(name);
        }
        images.push(SegmentedImage { source, segments: segs.len(), error: None });
    }
    write_csv(
        &out.join("index.csv"),
        &["source", "segment", "x", "y", "w", "h", "area_fraction", "shape_ratio"],
        &index,
    )?;
    let total = index.len();
    let failed = images.iter().filter(|i| i.error.is_some()).count();
    write_json(
        &out.join("segment_report.json"),
        &json!({ "params": params, "images": images, "total_segments": total }),
    )?;
    files.extend(["index.csv".to_string(), "segment_report.json".to_string()]);
    RunManifest::record(out, "segment", &files)?;
    Ok(json!({ "images": images.len(), "segments": total, "failed": failed }))
}

pub fn cmd_sample(manifest: &Path, out: &Path, alpha: f64, beta: f64, seed: u64) -> Result<Value> {
    let ds = read_manifest(manifest)?;
    let plan = dataset::compute_sample_rates(&ds, alpha, beta)?;
    let sampled = dataset::build_sampled_dataset(&ds, &plan, seed)?;
    create_dir(out)?;
    write_manifest(&out.join("sampled.csv"), &sampled)?;
    let rates: Vec<Value> = plan
        .rates
        .iter()
        .map(|&(c, k)| json!({ "category": ds.taxonomy.name(c), "rate": k }))
        .collect();
    let after = class_stats(&sampled);
    write_json(
        &out.join("sample_report.json"),
        &json!({
            "alpha": alpha,
            "beta": beta,
            "seed": seed,
            "rates": rates,
            "complete": class_stats(&ds),
            "sampled": after,
        }),
    )?;
    RunManifest::record(out, "sample", &["sampled.csv".into(), "sample_report.json".into()])?;
    Ok(json!({ "samples": sampled.len(), "weed_crop_ratio": reports::ratio_value(after.weed_crop_ratio) }))
}

pub fn cmd_split(manifest: &Path, out: &Path, fractions: (f64, f64, f64), seed: u64) -> Result<Value> {
    let ds = read_manifest(manifest)?;
    let parts = dataset::split(&ds, fractions, seed)?;
    create_dir(out)?;
    for (name, part) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        write_manifest(&out.join(format!("{name}.csv")), part)?;
    }
    let report = json!({
        "fractions": [fractions.0, fractions.1, fractions.2],
        "seed": seed,
        "train": class_stats(&parts.train),
        "val": class_stats(&parts.val),
        "test": class_stats(&parts.test),
        "warnings": parts.warnings,
    });
    write_json(&out.join("split_report.json"), &report)?;
    RunManifest::record(
        out,
        "split",
        &["train.csv".into(), "val.csv".into(), "test.csv".into(), "split_report.json".into()],
    )?;
    Ok(json!({
        "train": parts.train.len(),
        "val": parts.val.len(),
        "test": parts.test.len(),
        "warnings": parts.warnings.len(),
    }))
}

/// One scored (genotype, dataset) pair as persisted in the trial log.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TrialRow {
    pub family: Family,
    pub genotype: Genotype,
    pub dataset: String,
    pub score: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TrialLog {
    /// Top trials per family and dataset, best first.
    pub trials: Vec<TrialRow>,
    /// Every probe training run, in execution order.
    pub evaluations: Vec<TrialRow>,
}

struct CachingScorer<'a> {
    inner: ProbeScorer<'a>,
    names: &'a [String],
    cache: HashMap<(String, String, u64), f64>,
    log: Vec<TrialRow>,
    fresh: usize,
}

impl Scorer for CachingScorer<'_> {
    fn score(&mut self, g: &Genotype, dataset: usize, seed: u64) -> weednet_core::Result<f64> {
        let name = self.names.get(dataset).ok_or_else(|| CoreError::InvalidParam(format!("dataset {dataset}")))?;
        let key = (g.key(), name.clone(), seed);
        let score = match self.cache.get(&key) {
            Some(&s) => s,
            None => {
                self.fresh += 1;
                let s = self.inner.score(g, dataset, seed)?;
                self.cache.insert(key, s);
                s
            }
        };
        self.log.push(TrialRow { family: g.family(), genotype: g.clone(), dataset: name.clone(), score, seed });
        Ok(score)
    }
}

/// Dataset identifier used in logs: the final component of the split directory.
fn dataset_name(dir: &Path) -> String {
    dir.file_name().map_or_else(|| dir.to_string_lossy().into_owned(), |n| n.to_string_lossy().into_owned())
}

pub fn cmd_search(
    split_dirs: &[PathBuf],
    out: &Path,
    families: &[Family],
    cfg: &PipelineConfig,
    resume: bool,
) -> Result<Value> {
    if split_dirs.is_empty() {
        return Err(CoreError::Empty("dataset list").into());
    }
    let train_cfg = cfg.train_config();
    let search_cfg = cfg.search_config();
    let mut loaded = Vec::new();
    let mut names = Vec::new();
    for dir in split_dirs {
        let train_ds = read_manifest(&dir.join("train.csv"))?;
        let val_ds = read_manifest(&dir.join("val.csv"))?.reindexed(&train_ds.taxonomy)?;
        let train_set = load_image_set(&train_ds, train_cfg.input_side)?;
        let val_set = load_image_set(&val_ds, train_cfg.input_side)?;
        loaded.push((train_ds.taxonomy, train_set, val_set));
        names.push(dataset_name(dir));
    }
    let datasets: Vec<SearchDataset<'_>> = loaded
        .iter()
        .map(|(taxonomy, train, val)| SearchDataset { taxonomy, train, val })
        .collect();
    let heads: Vec<usize> = loaded.iter().map(|(t, _, _)| t.len() + 1).collect();

    let log_path = out.join("trials.json");
    let mut cache = HashMap::new();
    if resume && log_path.exists() {
        let prev: TrialLog = read_json(&log_path)?;
        for r in prev.evaluations {
            cache.insert((r.genotype.key(), r.dataset, r.seed), r.score);
        }
    }
    let reused_available = cache.len();
    let mut scorer = CachingScorer {
        inner: ProbeScorer {
            datasets: &datasets,
            train: weednet_core::nn::TrainConfig { epochs: search_cfg.probe_epochs, ..train_cfg.clone() },
        },
        names: &names,
        cache,
        log: Vec::new(),
        fresh: 0,
    };
    let selections = select_optimal_with(families, &heads, train_cfg.input_side, &search_cfg, &mut scorer)?;

    let trials: Vec<TrialRow> = selections
        .iter()
        .flat_map(|s| s.trials.iter().flatten())
        .map(|t| TrialRow {
            family: t.family,
            genotype: t.genotype.clone(),
            dataset: names[t.dataset].clone(),
            score: t.score,
            seed: t.seed,
        })
        .collect();
    create_dir(out)?;
    write_json(&log_path, &TrialLog { trials, evaluations: scorer.log })?;
    let chosen: Vec<Value> = selections.iter().map(|s| selection_json(s, &names)).collect();
    write_json(
        &out.join("selection.json"),
        &json!({ "datasets": names, "search": search_cfg, "selections": chosen }),
    )?;
    RunManifest::record(out, "search", &["trials.json".into(), "selection.json".into()])?;
    Ok(json!({
        "selected": selections.iter().map(|s| s.genotype.key()).collect::<Vec<_>>(),
        "probe_runs": scorer.fresh,
        "cached_scores": reused_available,
    }))
}

fn selection_json(s: &Selection, names: &[String]) -> Value {
    let table: Vec<Value> = s
        .score_table
        .iter()
        .map(|r| json!({ "genotype": r.genotype, "dataset": names[r.dataset], "score": r.score }))
        .collect();
    json!({
        "family": s.family,
        "genotype": s.genotype,
        "mean_score": s.mean_score,
        "branch": s.branch,
        "score_table": table,
        "warnings": s.warnings,
    })
}

/// Reads the genotype chosen for `family` from a `selection.json`.
pub fn genotype_from_selection(path: &Path, family: Family) -> Result<Genotype> {
    let v: Value = read_json(path)?;
    v["selections"]
        .as_array()
        .into_iter()
        .flatten()
        .find(|s| s["family"] == json!(family))
        .and_then(|s| s["genotype"].as_str())
        .ok_or_else(|| CliError::Config(format!("{}: no selection for {family}", path.display())))?
        .parse()
        .map_err(CliError::from)
}

pub struct TrainArgs<'a> {
    pub train_manifest: &'a Path,
    pub val_manifest: &'a Path,
    pub genotype: Genotype,
    pub objective: ObjectiveKind,
    /// Start from these weights instead of a fresh initialization.
    pub init: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn cmd_train(args: TrainArgs<'_>, cfg: &PipelineConfig) -> Result<Value> {
    let tcfg = cfg.train_config();
    let train_ds = read_manifest(args.train_manifest)?;
    let tax = train_ds.taxonomy.clone();
    tax.require_both_groups()?;
    let val_ds = read_manifest(args.val_manifest)?.reindexed(&tax)?;
    let model: TrainedModel = match args.init {
        Some(p) => {
            let saved = weights::load(p)?;
            if saved.taxonomy != tax {
                return Err(CliError::Config(format!("{}: taxonomy differs from training manifest", p.display())));
            }
            saved.model
        }
        None => realize(&args.genotype, args.objective.head_classes(&tax), tcfg.input_side, tcfg.seed)?,
    };
    model.check_objective(args.objective, &tax)?;
    if model.input_side() != tcfg.input_side {
        return Err(CliError::Config(format!(
            "input_side {} does not match initial weights ({})",
            tcfg.input_side,
            model.input_side()
        )));
    }
    let train_set = load_image_set(&train_ds, tcfg.input_side)?;
    let val_set = load_image_set(&val_ds, tcfg.input_side)?;
    let (model, history) = train(model, &train_set, &val_set, &tax, args.objective, &tcfg)?;

    create_dir(args.out)?;
    let saved = SavedModel { model, taxonomy: tax };
    weights::save(&args.out.join("model.cwnn"), &saved)?;
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|h| vec![h.epoch.to_string(), format!("{:.6}", h.accuracy), format!("{:.6}", h.nmw)])
        .collect();
    write_csv(&args.out.join("history.csv"), &["epoch", "accuracy", "nmw"], &rows)?;
    let last = history.last().copied();
    write_json(
        &args.out.join("train_report.json"),
        &json!({
            "genotype": saved.model.genotype(),
            "objective": args.objective.to_string(),
            "param_count": saved.model.param_count(),
            "train": tcfg,
            "taxonomy": saved.taxonomy,
            "history": history,
        }),
    )?;
    RunManifest::record(
        args.out,
        "train",
        &["model.cwnn".into(), "history.csv".into(), "train_report.json".into()],
    )?;
    Ok(json!({
        "genotype": saved.model.genotype().key(),
        "objective": args.objective.to_string(),
        "final": last,
    }))
}

pub struct EvaluateArgs<'a> {
    pub weights: &'a [PathBuf],
    pub test_manifest: &'a Path,
    pub budget: Option<&'a Path>,
    pub out: &'a Path,
}

/// Per-crop totals: explicit file, then config entries, else the test set's
/// own crop counts.
fn budget_totals(args: &EvaluateArgs<'_>, cfg: &PipelineConfig, test: &Dataset) -> Result<Vec<(String, usize)>> {
    if let Some(p) = args.budget {
        return read_budget(p);
    }
    if !cfg.budget.is_empty() {
        return Ok(cfg.budget.clone());
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &test.samples {
        if test.taxonomy.is_crop(s.category) {
            *counts.entry(s.category).or_default() += 1;
        }
    }
    Ok(counts.into_iter().map(|(c, n)| (test.taxonomy.name(c).to_string(), n)).collect())
}

pub fn cmd_evaluate(args: EvaluateArgs<'_>, cfg: &PipelineConfig) -> Result<Value> {
    if args.weights.is_empty() {
        return Err(CoreError::Empty("weight file list").into());
    }
    let models: Vec<SavedModel> = args.weights.iter().map(|p| weights::load(p)).collect::<Result<_>>()?;
    let tax: Taxonomy = models[0].taxonomy.clone();
    if let Some((i, _)) = models.iter().enumerate().find(|(_, m)| m.taxonomy != tax) {
        return Err(CliError::Config(format!("{}: taxonomy differs from {}", args.weights[i].display(), args.weights[0].display())));
    }
    let test = read_manifest(args.test_manifest)?.reindexed(&tax)?;
    let truth = test.labels();

    let mut sets: BTreeMap<usize, ImageSet> = BTreeMap::new();
    let mut per_model = Vec::with_capacity(models.len());
    let mut model_reports = Vec::with_capacity(models.len());
    for (path, saved) in args.weights.iter().zip(&models) {
        let side = saved.model.input_side();
        if !sets.contains_key(&side) {
            sets.insert(side, load_image_set(&test, side)?);
        }
        let preds = saved.model.predict(sets[&side].data())?;
        let report = evaluate(&truth, &preds, &tax)?;
        model_reports.push(ModelReport {
            weights: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            weights_dir: path.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()),
            genotype: saved.model.genotype().key(),
            objective: saved.model.meta.objective.map(|o| o.to_string()),
            report,
        });
        per_model.push(preds);
    }

    let totals = budget_totals(&args, cfg, &test)?;
    let mut budget = CropBudget::new(&tax, &totals)?;
    let decisions: Vec<EnsembleDecision> = ensemble_run(&per_model, &tax, &mut budget, cfg.ensemble_policy())?;
    let ens_preds: Vec<usize> = decisions.iter().map(|d| d.category).collect();
    let ensemble: EvalReport = evaluate(&truth, &ens_preds, &tax)?;

    let best = reports::argmax_accuracy(&model_reports);
    let worst = reports::argmin_accuracy(&model_reports);
    let report = EvaluateReport {
        taxonomy: tax.clone(),
        budget: totals,
        policy: cfg.ensemble_policy(),
        best_model: best,
        best_accuracy: model_reports[best].report.accuracy,
        error_percentages: ErrorPercentages {
            best: reports::percent(&model_reports[best].report),
            worst: reports::percent(&model_reports[worst].report),
            ensemble: reports::percent(&ensemble),
        },
        models: model_reports,
        ensemble,
    };
    create_dir(args.out)?;
    write_json(&args.out.join("evaluate_report.json"), &report)?;
    let rows: Vec<Value> = decisions
        .iter()
        .zip(&test.samples)
        .enumerate()
        .map(|(i, (d, s))| {
            let image = Path::new(&s.image_path).file_name().map(|n| n.to_string_lossy().into_owned());
            json!({
                "object_id": i,
                "image": image,
                "truth": tax.name(s.category),
                "cate": d.cate,
                "type": d.kind,
                "act": d.act,
                "rule_fired": d.rule_fired,
            })
        })
        .collect();
    write_json(&args.out.join("decisions.json"), &rows)?;
    RunManifest::record(args.out, "evaluate", &["evaluate_report.json".into(), "decisions.json".into()])?;
    Ok(json!({
        "models": report.models.len(),
        "best_accuracy": report.best_accuracy,
        "ensemble_accuracy": report.ensemble.accuracy,
        "ensemble_dangerous": report.ensemble.error_counts.dangerous,
    }))
}
