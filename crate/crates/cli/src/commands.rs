use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ccc_core::annosim::{build_pool, generate, generate_with_dense, PatternSpec, Preset};
use ccc_core::crowddata::{
    confusion_distance, dataset_stats, evaluate_accuracy, load_dataset, make_blobs, predict,
    read_labeled_csv, save_dataset, FeaturesFormat, LabeledSplit,
};
use ccc_core::models::read_classifier;
use ccc_core::trainers::{eval_split, train, RunResult};
use ccc_core::{CrowdDataset, Matrix, RngStream, TrainConfig};
use serde_json::json;

use crate::settings::ConfigFile;
use crate::{Cli, CliError, Command, EvalArgs, InspectArgs, SimulateArgs, TrainArgs};

type Res<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Inspect(a) => inspect(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
    }
}

fn required<T>(value: Option<T>, name: &str) -> Res<T> {
    value.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

fn write_file(path: &Path, body: &str) -> Res<()> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Res<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value");
    s.push('\n');
    s
}

/// Where simulated instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeaturesSource {
    Blobs {
        n: usize,
        c: usize,
        d: usize,
        spread: f64,
        test: usize,
    },
    Csv(PathBuf),
}

/// Parses `blobs:N=..,C=..,D=..[,spread=..][,test=..]` or `csv:PATH`.
pub fn parse_features_source(text: &str) -> Res<FeaturesSource> {
    let bad = |m: &str| CliError::Config(format!("--features `{text}`: {m}"));
    if let Some(path) = text.strip_prefix("csv:") {
        return Ok(FeaturesSource::Csv(PathBuf::from(path)));
    }
    let Some(body) = text.strip_prefix("blobs:") else {
        return Err(bad("expected `blobs:...` or `csv:PATH`"));
    };
    let (mut n, mut c, mut d, mut spread, mut test) = (None, None, None, 0.28, 0);
    for part in body.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let int = || v.trim().parse::<usize>().map_err(|_| bad(&format!("bad value for {k}")));
        match k.trim() {
            "N" | "n" => n = Some(int()?),
            "C" | "c" => c = Some(int()?),
            "D" | "d" => d = Some(int()?),
            "test" => test = int()?,
            "spread" => {
                spread = v.trim().parse().map_err(|_| bad("bad spread"))?;
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    Ok(FeaturesSource::Blobs {
        n: n.ok_or_else(|| bad("missing N"))?,
        c: c.ok_or_else(|| bad("missing C"))?,
        d: d.ok_or_else(|| bad("missing D"))?,
        spread,
        test,
    })
}

fn read_patterns(path: &Path) -> Res<(Vec<PatternSpec>, Option<Vec<usize>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Validation(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    if value.is_array() {
        return Ok((serde_json::from_value(value).map_err(bad)?, None));
    }
    let specs = serde_json::from_value(value.get("patterns").cloned().unwrap_or_default()).map_err(bad)?;
    let groups = match value.get("groups") {
        Some(g) => Some(serde_json::from_value(g.clone()).map_err(bad)?),
        None => None,
    };
    Ok((specs, groups))
}

fn simulate(a: SimulateArgs) -> Res<()> {
    let file = ConfigFile::load(a.shared.config.as_deref())?;
    let seed = file.resolve("seed", a.shared.seed, 0)?;
    let out: PathBuf = required(file.resolve_opt("out", a.shared.out)?, "out")?;
    let features_text = file.resolve("features", a.features, "blobs:N=2000,C=10,D=16".to_string())?;
    let preset_name: Option<String> = file.resolve_opt("preset", a.preset)?;
    let patterns_path: Option<PathBuf> = file.resolve_opt("patterns", a.patterns)?;
    let per_group = file.resolve("per_group", a.per_group, 10)?;
    let k = file.resolve("k", a.k, 3)?;
    let alpha = file.resolve("alpha", a.alpha, 1.5)?;
    let beta = file.resolve("beta", a.beta, 3.0)?;
    let classes: Option<usize> = file.resolve_opt("classes", a.classes)?;
    let format: FeaturesFormat = file
        .resolve("format", a.format, "csv".to_string())?
        .parse()
        .map_err(CliError::Config)?;
    let dump_dense = file.flag_or_file("dump_dense", a.dump_dense)?;
    file.finish()?;
    if preset_name.is_some() && patterns_path.is_some() {
        return Err(CliError::Config("give either --preset or --patterns, not both".into()));
    }

    let source = parse_features_source(&features_text)?;
    let root = RngStream::new(seed);
    let (features, truth, c, test) = match &source {
        FeaturesSource::Blobs { n, c, d, spread, test } => {
            let (x, y) = make_blobs(*n, *c, *d, *spread, &mut root.split("blobs"))?;
            let test = if *test > 0 {
                let (tx, ty) = make_blobs(*test, *c, *d, *spread, &mut root.split("test-blobs"))?;
                Some(LabeledSplit {
                    features: tx,
                    labels: ty,
                })
            } else {
                None
            };
            (x, y, *c, test)
        }
        FeaturesSource::Csv(path) => {
            let (x, y) = read_labeled_csv(path)?;
            let c = classes.unwrap_or_else(|| y.iter().max().map_or(1, |m| m + 1));
            if let Some(bad) = y.iter().find(|&&l| l >= c) {
                return Err(CliError::Validation(format!("label {bad} >= class count {c}")));
            }
            (x, y, c, None)
        }
    };

    let (specs, groups, preset_label) = match &patterns_path {
        Some(p) => {
            let (s, g) = read_patterns(p)?;
            (s, g, None)
        }
        None => {
            let name = preset_name.clone().unwrap_or_else(|| "IND-I".into());
            let preset = Preset::by_name(&name).map_err(|e| CliError::Config(e.to_string()))?;
            let (s, g) = preset.expand(per_group);
            (s, Some(g), Some(preset.name.to_string()))
        }
    };
    let pool = build_pool(specs, groups, c, k, alpha, beta, &root.split("pool"))?;
    let (mut ds, dense) = if dump_dense {
        let (ds, dense) = generate_with_dense(&truth, features, &pool, &root.split("labels"))?;
        (ds, Some(dense))
    } else {
        (generate(&truth, features, &pool, &root.split("labels"))?, None)
    };
    ds.preset = preset_label.clone();
    if let Some(t) = test {
        ds = ds.with_test(t)?;
    }
    save_dataset(&ds, &out, format)?;
    if let Some(dense) = dense {
        dense.write_csv(&out.join("dense.csv"))?;
    }
    let echo = json!({
        "seed": seed,
        "features": features_text,
        "preset": preset_label,
        "patterns": patterns_path,
        "per_group": per_group,
        "k": k,
        "alpha": alpha,
        "beta": beta,
        "format": format!("{format:?}").to_lowercase(),
        "dump_dense": dump_dense,
        "pool": {
            "patterns": pool.specs.iter().map(PatternSpec::label).collect::<Vec<_>>(),
            "groups": pool.groups,
            "targets": pool.targets,
            "propensities": pool.propensities,
        },
    });
    write_file(&out.join("simulate.json"), &pretty(&echo))?;

    let stats = dataset_stats(&ds)?;
    print_summary(&ds, &stats.annotator_counts, stats.nr1, stats.nr2);
    Ok(())
}

fn print_summary(ds: &CrowdDataset, counts: &[usize], nr1: Option<f64>, nr2: Option<f64>) {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    println!(
        "instances {}  classes {}  annotators {}  labels {}",
        ds.len(),
        ds.class_count(),
        ds.annotator_count(),
        ds.annotations().len()
    );
    if let (Some(a), Some(b)) = (nr1, nr2) {
        println!("NR1 {:.2}%  NR2 {:.2}%", 100.0 * a, 100.0 * b);
    }
    println!(
        "labels per annotator: min {}  median {}  max {}  (zero: {})",
        sorted[0],
        sorted[sorted.len() / 2],
        sorted[sorted.len() - 1],
        sorted.iter().filter(|&&v| v == 0).count()
    );
}

fn inspect(a: InspectArgs) -> Res<()> {
    let file = ConfigFile::load(a.shared.config.as_deref())?;
    let _seed: u64 = file.resolve("seed", a.shared.seed, 0)?;
    let data: PathBuf = required(file.resolve_opt("data", a.data)?, "data")?;
    let out: PathBuf = required(file.resolve_opt("out", a.shared.out)?, "out")?;
    file.finish()?;

    let ds = load_dataset(&data)?;
    let stats = dataset_stats(&ds)?;
    create_dir(&out)?;
    let report = json!({
        "data": data,
        "n": stats.n,
        "c": stats.c,
        "r": stats.r,
        "total_annotations": stats.total_annotations,
        "nr1": stats.nr1,
        "nr2": stats.nr2,
        "annotator_counts": stats.annotator_counts,
    });
    write_file(&out.join("stats.json"), &pretty(&report))?;
    match &stats.true_confusions {
        Some(cms) => {
            let mut body = String::from("annotator_a,annotator_b,mse\n");
            for (i, a) in cms.iter().enumerate() {
                for (j, b) in cms.iter().enumerate() {
                    body.push_str(&format!("{i},{j},{}\n", confusion_distance(a, b)?));
                }
            }
            write_file(&out.join("cm_distances.csv"), &body)?;
        }
        None => println!("no truth labels: cm_distances.csv omitted"),
    }
    print_summary(&ds, &stats.annotator_counts, stats.nr1, stats.nr2);
    Ok(())
}

fn parse_seeds(text: &str) -> Res<Vec<u64>> {
    let seeds: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("--seeds `{text}`: expected comma-separated integers")))?;
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds is empty".into()));
    }
    Ok(seeds)
}

fn enum_value<T: std::str::FromStr<Err = String>>(text: String) -> Res<T> {
    text.parse().map_err(CliError::Config)
}

fn train_config(a: &TrainArgs, file: &ConfigFile, seed: u64) -> Res<TrainConfig> {
    let d = TrainConfig::default();
    let decay = match file.resolve_opt::<String>("lr_decay_epoch", a.lr_decay_epoch.clone())? {
        None => d.lr_decay_epoch,
        Some(s) if s == "none" => None,
        Some(s) => Some(
            s.parse()
                .map_err(|_| CliError::Config(format!("lr_decay_epoch `{s}`: expected an epoch or `none`")))?,
        ),
    };
    let cfg = TrainConfig {
        algo: enum_value(file.resolve("algo", a.algo.clone(), "ccc".into())?)?,
        model: enum_value(file.resolve("model", a.model.clone(), "linear".into())?)?,
        hidden_dim: file.resolve("hidden_dim", a.hidden_dim, d.hidden_dim)?,
        epochs: file.resolve("epochs", a.epochs, d.epochs)?,
        warmup: file.resolve("warmup", a.warmup, d.warmup)?,
        batch_size: file.resolve("batch_size", a.batch_size, d.batch_size)?,
        meta_batch: file.resolve("meta_batch", a.meta_batch, d.meta_batch)?,
        lr: file.resolve("lr", a.lr, d.lr)?,
        lr_decay_epoch: decay,
        momentum: file.resolve("momentum", a.momentum, d.momentum)?,
        weight_decay: file.resolve("weight_decay", a.weight_decay, d.weight_decay)?,
        gamma: file.resolve("gamma", a.gamma, d.gamma)?,
        meta_size: file.resolve("meta_size", a.meta_size, d.meta_size)?,
        groups: file.resolve("groups", a.groups, d.groups)?,
        seed,
        confusion_init: enum_value(file.resolve("confusion_init", a.confusion_init.clone(), "identity".into())?)?,
        zero_reset: enum_value(file.resolve("zero_reset", a.zero_reset.clone(), "per-iteration".into())?)?,
        grouping: enum_value(file.resolve("grouping", a.grouping.clone(), "joint".into())?)?,
        kmeans_max_iter: file.resolve("kmeans_max_iter", a.kmeans_max_iter, d.kmeans_max_iter)?,
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn thread_count() -> Res<usize> {
    match std::env::var("CCC_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("CCC_THREADS `{v}`: expected a positive integer"))),
        },
    }
}

/// Trains one config per seed on up to `threads` workers; results come back
/// in seed order.
fn run_replicates(ds: &CrowdDataset, configs: &[TrainConfig], threads: usize) -> Res<Vec<RunResult>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Res<RunResult>>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.min(configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let r = train(ds, &configs[i]).map_err(CliError::from);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every replicate ran"))
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn train_cmd(a: TrainArgs) -> Res<()> {
    let file = ConfigFile::load(a.shared.config.as_deref())?;
    let seed = file.resolve("seed", a.shared.seed, 0)?;
    let seeds: Option<Vec<u64>> = match file.resolve_opt::<String>("seeds", a.seeds.clone())? {
        Some(s) => Some(parse_seeds(&s)?),
        None => None,
    };
    let data: PathBuf = required(file.resolve_opt("data", a.data.clone())?, "data")?;
    let out: PathBuf = required(file.resolve_opt("out", a.shared.out.clone())?, "out")?;
    let classes: Option<usize> = file.resolve_opt("classes", a.classes)?;
    let annotators: Option<usize> = file.resolve_opt("annotators", a.annotators)?;
    let base = train_config(&a, &file, seed)?;
    file.finish()?;
    let threads = thread_count()?;

    let ds = load_dataset(&data)?;
    if let Some(c) = classes.filter(|&c| c != ds.class_count()) {
        return Err(CliError::Validation(format!("config expects {c} classes, dataset has {}", ds.class_count())));
    }
    if let Some(r) = annotators.filter(|&r| r != ds.annotator_count()) {
        return Err(CliError::Validation(format!(
            "config expects {r} annotators, dataset has {}",
            ds.annotator_count()
        )));
    }
    if base.groups > ds.annotator_count() {
        return Err(CliError::Validation(format!(
            "{} groups for {} annotators",
            base.groups,
            ds.annotator_count()
        )));
    }

    match seeds {
        None => {
            let result = train(&ds, &base)?;
            result.write_dir(&out)?;
            report(&result);
        }
        Some(seeds) => {
            let configs: Vec<TrainConfig> = seeds
                .iter()
                .map(|&s| TrainConfig { seed: s, ..base.clone() })
                .collect();
            let results = run_replicates(&ds, &configs, threads)?;
            create_dir(&out)?;
            for r in &results {
                r.write_dir(&out.join(format!("seed-{}", r.config.seed)))?;
                report(r);
            }
            let best: Vec<f64> = results.iter().map(RunResult::mean_best).collect();
            let last: Vec<f64> = results.iter().map(RunResult::mean_last).collect();
            let (mean_best, std_best) = mean_std(&best);
            let (mean_last, std_last) = mean_std(&last);
            let agg = json!({
                "algo": base.algo,
                "seeds": seeds,
                "best": best,
                "last": last,
                "mean_best": mean_best,
                "std_best": std_best,
                "mean_last": mean_last,
                "std_last": std_last,
                "config": base,
            });
            write_file(&out.join("aggregate.json"), &pretty(&agg))?;
            println!("mean best {mean_best:.4} (std {std_best:.4})  mean last {mean_last:.4} (std {std_last:.4})");
        }
    }
    Ok(())
}

fn report(r: &RunResult) {
    let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    println!(
        "{:?} seed {}: best {}  last {}",
        r.algo,
        r.config.seed,
        fmt(r.best()),
        fmt(r.last())
    );
    for w in &r.warnings {
        log::warn!("{w}");
    }
}

fn eval(a: EvalArgs) -> Res<()> {
    let file = ConfigFile::load(a.shared.config.as_deref())?;
    let _seed: u64 = file.resolve("seed", a.shared.seed, 0)?;
    let model_path: PathBuf = required(file.resolve_opt("model", a.model)?, "model")?;
    let data: PathBuf = required(file.resolve_opt("data", a.data)?, "data")?;
    let out: Option<PathBuf> = file.resolve_opt("out", a.shared.out)?;
    file.finish()?;

    let bytes = fs::read(&model_path).map_err(|e| CliError::Io(format!("{}: {e}", model_path.display())))?;
    let clf = read_classifier(bytes.as_slice())
        .map_err(|e| CliError::Validation(format!("{}: {e}", model_path.display())))?;
    let (features, labels): (Matrix, Vec<usize>) = if data.is_dir() {
        let ds = load_dataset(&data)?;
        let (x, y) = eval_split(&ds)?;
        (x.clone(), y.to_vec())
    } else {
        read_labeled_csv(&data)?
    };
    if features.cols() != clf.input_dim() {
        return Err(CliError::Validation(format!(
            "model takes {} features, data has {}",
            clf.input_dim(),
            features.cols()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= clf.class_count()) {
        return Err(CliError::Validation(format!(
            "label {bad} outside the model's {} classes",
            clf.class_count()
        )));
    }
    let accuracy = evaluate_accuracy(&clf, &features, &labels)?;
    let correct = predict(&clf, &features)?
        .iter()
        .zip(&labels)
        .filter(|(p, y)| p == y)
        .count();
    println!("accuracy {accuracy} ({correct}/{})", labels.len());
    if let Some(out) = out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        let body = json!({
            "model": model_path,
            "data": data,
            "n": labels.len(),
            "correct": correct,
            "accuracy": accuracy,
        });
        write_file(&out, &pretty(&body))?;
    }
    Ok(())
}
