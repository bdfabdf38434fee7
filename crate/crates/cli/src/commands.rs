use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fact_core::analysis::{
    bundled_edge_images, edge_similarity_study, phase_only_protocol, shrinkage_experiment, ShrinkageConfig,
};
use fact_core::augment::{AugmentConfig, AugmentRecord, Augmenter, Strategy};
use fact_core::corpus::{write_corpus, MultiDomainCorpus, Split, SynthConfig};
use fact_core::coteacher::{accuracy_from_predictions, fit, predict, write_metrics_csv, write_predictions, FactConfig};
use fact_core::nn::{load_checkpoint, save_checkpoint};
use fact_core::rng::{self, purpose};
use fact_core::tensor::{load_image, save_image};
use fact_core::{FactError, ImageTensor, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{echo, load, prepare_out, write_text, write_toml, DataSpec};
use crate::{AugmentArgs, EdgesArgs, EvalArgs, PhaseArgs, ShrinkageArgs, SynthArgs, TrainArgs, TrainFlags};

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn data_from_flag(data: &mut DataSpec, flag: Option<PathBuf>) {
    if let Some(root) = flag {
        *data = DataSpec {
            root: Some(root),
            synth: None,
        };
    }
}

fn apply_train_flags(data: &mut DataSpec, fact: &mut FactConfig, f: TrainFlags) {
    data_from_flag(data, f.data);
    set(&mut fact.epochs, f.epochs);
    set(&mut fact.batch_size, f.batch_size);
    set(&mut fact.lr, f.lr);
    set(&mut fact.model.hidden, f.hidden);
    set(&mut fact.model.conv_channels, f.conv);
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |e| FactError::Io {
        path: dir.to_path_buf(),
        source: e,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(FactError::Config(format!("no images found in {}", dir.display())));
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentRun {
    /// Image file or directory.
    pub input: Option<PathBuf>,
    /// Explicit pair; empty when `input` is used.
    pub pair: Vec<PathBuf>,
    pub augment: AugmentConfig,
}

#[derive(Serialize)]
struct Provenance {
    seed: u64,
    strategy: Strategy,
    outputs: Vec<ProvenanceEntry>,
}

#[derive(Serialize)]
struct ProvenanceEntry {
    output: String,
    source: PathBuf,
    partner: Option<PathBuf>,
    record: AugmentRecord,
}

pub fn augment(a: AugmentArgs) -> Result<()> {
    let loaded = load::<AugmentRun>(a.common.config.as_deref())?;
    let mut run = loaded.value.clone();
    loaded.resolve_seed(a.common.seed, &["augment", "seed"], &mut run.augment.seed)?;
    if let Some(input) = a.input {
        run.input = Some(input);
        run.pair.clear();
    }
    if let Some(pair) = a.pair {
        run.pair = pair;
        run.input = None;
    }
    let c = &mut run.augment;
    set(&mut c.strategy, a.strategy);
    set(&mut c.eta, a.eta);
    set(&mut c.r, a.r);
    set(&mut c.bernoulli_p, a.bernoulli_p);
    set(&mut c.sigma, a.sigma);
    set(&mut c.const_amplitude, a.const_amplitude);
    c.shared_lambda |= a.shared_lambda;
    let augmenter = Augmenter::new(run.augment.clone())?;
    let seed = run.augment.seed;
    let strategy = run.augment.strategy;

    let mut outputs: Vec<(String, ImageTensor, ProvenanceEntry)> = Vec::new();
    match (&run.input, run.pair.as_slice()) {
        (None, [first, second]) => {
            let (x1, x2) = (load_image(first)?, load_image(second)?);
            let (pair, record) = augmenter.augment_pair(&x1, &x2, &mut rng::stream(seed, purpose::AUGMENT, 0))?;
            for (k, (src, partner, img)) in [(first, second, pair.first), (second, first, pair.second)]
                .into_iter()
                .enumerate()
            {
                let name = format!("{k:04}_{}.png", stem(src));
                let entry = ProvenanceEntry {
                    output: name.clone(),
                    source: src.clone(),
                    partner: Some(partner.clone()),
                    record: record.clone(),
                };
                outputs.push((name, img, entry));
            }
        }
        (Some(input), []) => {
            let files = if input.is_dir() {
                image_files(input)?
            } else {
                vec![input.clone()]
            };
            if strategy.needs_partner() && files.len() < 2 {
                return Err(FactError::Config(format!(
                    "strategy {strategy} needs a partner: pass --pair or a directory with at least two images"
                )));
            }
            let images = files.iter().map(|f| load_image(f)).collect::<Result<Vec<_>>>()?;
            for (i, x) in images.iter().enumerate() {
                let mut arng = rng::stream(seed, purpose::AUGMENT, i as u64);
                let (img, record, partner) = if strategy.needs_partner() {
                    let mut prng = rng::stream(seed, purpose::PAIRING, i as u64);
                    let mut j = rand_index(&mut prng, images.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    let (pair, record) = augmenter.augment_pair(x, &images[j], &mut arng)?;
                    (pair.first, record, Some(files[j].clone()))
                } else {
                    let (img, record) = augmenter.augment_single(x, &mut arng)?;
                    (img, record, None)
                };
                let name = format!("{i:04}_{}.png", stem(&files[i]));
                let entry = ProvenanceEntry {
                    output: name.clone(),
                    source: files[i].clone(),
                    partner,
                    record,
                };
                outputs.push((name, img, entry));
            }
        }
        _ => {
            return Err(FactError::Config(
                "augment: give exactly one of --input <file|dir> or --pair <first> <second>".into(),
            ))
        }
    }

    prepare_out(&a.common.out)?;
    let mut entries = Vec::with_capacity(outputs.len());
    for (name, img, entry) in outputs {
        save_image(&img, &a.common.out.join(&name))?;
        entries.push(entry);
    }
    write_toml(
        &a.common.out.join("provenance.toml"),
        &Provenance {
            seed,
            strategy,
            outputs: entries,
        },
    )?;
    echo(&a.common.out, &run)
}

fn rand_index(rng: &mut rng::FactRng, n: usize) -> usize {
    rng.random_range(0..n)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthRun {
    pub synth: SynthConfig,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let loaded = load::<SynthRun>(a.common.config.as_deref())?;
    let mut run = loaded.value.clone();
    loaded.resolve_seed(a.common.seed, &["synth", "seed"], &mut run.synth.seed)?;
    let s = &mut run.synth;
    set(&mut s.num_domains, a.domains);
    set(&mut s.num_classes, a.classes);
    set(&mut s.n_per_cell, a.n_per_cell);
    set(&mut s.height, a.size);
    set(&mut s.width, a.size);
    set(&mut s.channels, a.channels);
    set(&mut s.amplitude_noise, a.amplitude_noise);
    set(&mut s.train_fraction, a.train_fraction);
    let corpus = fact_core::corpus::synth_generate(&run.synth)?;
    prepare_out(&a.common.out)?;
    write_corpus(&corpus, &a.common.out, run.synth.train_fraction, run.synth.seed)?;
    eprintln!(
        "wrote {} images ({} domains x {} classes) to {}",
        corpus.len(),
        corpus.num_domains(),
        corpus.num_classes(),
        a.common.out.display()
    );
    echo(&a.common.out, &run)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    pub data: DataSpec,
    /// Domain excluded from training and reported separately.
    pub held_out: Option<usize>,
    pub fact: FactConfig,
}

#[derive(Serialize)]
struct DomainScore {
    domain: String,
    accuracy: Option<f64>,
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: usize,
    mean_val_accuracy: Option<f64>,
    val: Vec<DomainScore>,
    held_out: Option<DomainScore>,
}

fn split_domains(
    corpus: MultiDomainCorpus,
    held_out: Option<usize>,
) -> Result<(MultiDomainCorpus, Option<MultiDomainCorpus>)> {
    let Some(h) = held_out else {
        return Ok((corpus, None));
    };
    let n = corpus.num_domains();
    if h >= n || n < 2 {
        return Err(FactError::Config(format!(
            "held_out = {h} but the corpus has {n} domains (need at least two)"
        )));
    }
    let sources: Vec<usize> = (0..n).filter(|&d| d != h).collect();
    Ok((corpus.subset_domains(&sources)?, Some(corpus.subset_domains(&[h])?)))
}

pub fn train(a: TrainArgs) -> Result<()> {
    let loaded = load::<TrainRun>(a.common.config.as_deref())?;
    let mut run = loaded.value.clone();
    loaded.resolve_seed(a.common.seed, &["fact", "seed"], &mut run.fact.seed)?;
    apply_train_flags(&mut run.data, &mut run.fact, a.flags);
    let f = &mut run.fact;
    set(&mut f.augment.strategy, a.strategy);
    set(&mut f.augment.eta, a.eta);
    set(&mut f.beta, a.beta);
    set(&mut f.temperature, a.temperature);
    set(&mut f.ema_momentum, a.ema_momentum);
    set(&mut f.ramp_up_epochs, a.ramp_up_epochs);
    set(&mut f.pairing, a.pairing);
    f.hflip |= a.hflip;
    if a.held_out.is_some() {
        run.held_out = a.held_out;
    }
    if let Some(ablation) = a.ablation {
        ablation.apply(&mut run.fact);
    }
    run.fact.validate()?;

    let (sources, target) = split_domains(run.data.load()?, run.held_out)?;
    let outcome = fit(&sources, &run.fact)?;
    for m in &outcome.history {
        eprintln!(
            "epoch {:>3}  loss {:.4}  lr {:.2e}  train {:.3}  val {}",
            m.epoch,
            m.losses.total,
            m.lr,
            m.train_accuracy,
            m.mean_val_accuracy.map_or("-".into(), |v| format!("{v:.3}"))
        );
    }
    let out = &a.common.out;
    prepare_out(out)?;
    write_metrics_csv(&out.join("metrics.csv"), &outcome.history, sources.domain_names())?;
    save_checkpoint(&outcome.student, &out.join("student.ckpt"))?;
    save_checkpoint(&outcome.teacher, &out.join("teacher.ckpt"))?;
    let selected = outcome.selected();
    let held_out = match &target {
        Some(t) => {
            let preds = predict(&outcome.student, t, &(0..t.len()).collect::<Vec<_>>())?;
            Some(DomainScore {
                domain: t.domain_names()[0].clone(),
                accuracy: accuracy_from_predictions(&preds, 1)?.overall(),
            })
        }
        None => None,
    };
    let summary = TrainSummary {
        best_epoch: outcome.best_epoch,
        mean_val_accuracy: selected.mean_val_accuracy,
        val: sources
            .domain_names()
            .iter()
            .zip(&selected.val_accuracy)
            .map(|(d, acc)| DomainScore {
                domain: d.clone(),
                accuracy: *acc,
            })
            .collect(),
        held_out,
    };
    write_toml(&out.join("summary.toml"), &summary)?;
    println!(
        "selected epoch {}  mean val {}{}",
        summary.best_epoch,
        summary.mean_val_accuracy.map_or("-".into(), |v| format!("{v:.4}")),
        summary
            .held_out
            .as_ref()
            .and_then(|h| h.accuracy.map(|v| format!("  held-out {} {v:.4}", h.domain)))
            .unwrap_or_default()
    );
    echo(out, &run)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    #[default]
    All,
    Train,
    Val,
}

impl FromStr for EvalSplit {
    type Err = FactError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "train" => Ok(Self::Train),
            "val" => Ok(Self::Val),
            other => Err(FactError::Config(format!(
                "unknown split '{other}' (expected all, train or val)"
            ))),
        }
    }
}

impl fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Train => "train",
            Self::Val => "val",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalRun {
    pub checkpoint: Option<PathBuf>,
    pub data: DataSpec,
    pub split: EvalSplit,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let mut run = load::<EvalRun>(a.config.as_deref())?.value;
    if a.checkpoint.is_some() {
        run.checkpoint = a.checkpoint;
    }
    data_from_flag(&mut run.data, a.data);
    set(&mut run.split, a.split);
    let ckpt = run
        .checkpoint
        .clone()
        .ok_or_else(|| FactError::Config("eval: --checkpoint is required".into()))?;
    let model = load_checkpoint(&ckpt)?;
    let corpus = run.data.load()?;
    if corpus.image_shape() != Some(model.input_shape()) || corpus.num_classes() != model.num_classes() {
        return Err(FactError::Config(format!(
            "checkpoint expects {:?} inputs and {} classes; corpus has {:?} and {}",
            model.input_shape(),
            model.num_classes(),
            corpus.image_shape(),
            corpus.num_classes()
        )));
    }
    let indices: Vec<usize> = match run.split {
        EvalSplit::All => (0..corpus.len()).collect(),
        EvalSplit::Train => corpus.indices(Split::Train),
        EvalSplit::Val => corpus.indices(Split::Val),
    };
    let preds = predict(&model, &corpus, &indices)?;
    let acc = accuracy_from_predictions(&preds, corpus.num_domains())?;
    let out = &a.out;
    prepare_out(out)?;
    write_predictions(&out.join("predictions.csv"), &preds)?;
    let mut table = String::from("domain,correct,total,accuracy\n");
    for (d, name) in corpus.domain_names().iter().enumerate() {
        let cell = acc.accuracy(d).map(|v| v.to_string()).unwrap_or_default();
        table.push_str(&format!("{name},{},{},{cell}\n", acc.correct[d], acc.total[d]));
    }
    let overall = acc.overall().map(|v| v.to_string()).unwrap_or_default();
    table.push_str(&format!(
        "overall,{},{},{overall}\n",
        acc.correct.iter().sum::<usize>(),
        acc.total.iter().sum::<usize>()
    ));
    write_text(&out.join("accuracy.csv"), &table)?;
    print!("{table}");
    echo(out, &run)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgesRun {
    /// Directory of images; `None` uses the bundled set.
    pub images: Option<PathBuf>,
}

pub fn analyze_edges(a: EdgesArgs) -> Result<()> {
    let mut run = load::<EdgesRun>(a.config.as_deref())?.value;
    if a.images.is_some() {
        run.images = a.images;
    }
    let images = match &run.images {
        Some(dir) => image_files(dir)?
            .iter()
            .map(|f| Ok((stem(f), load_image(f)?)))
            .collect::<Result<Vec<_>>>()?,
        None => bundled_edge_images()?,
    };
    let study = edge_similarity_study(&images)?;
    prepare_out(&a.out)?;
    study.write_csv(&a.out.join("edges.csv"))?;
    let summary = study.summary();
    write_text(&a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    echo(&a.out, &run)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseRun {
    pub data: DataSpec,
    pub fact: FactConfig,
}

pub fn analyze_phase(a: PhaseArgs) -> Result<()> {
    let loaded = load::<PhaseRun>(a.common.config.as_deref())?;
    let mut run = loaded.value.clone();
    loaded.resolve_seed(a.common.seed, &["fact", "seed"], &mut run.fact.seed)?;
    apply_train_flags(&mut run.data, &mut run.fact, a.flags);
    run.fact.validate()?;
    let report = phase_only_protocol(&run.data.load()?, &run.fact)?;
    prepare_out(&a.common.out)?;
    report.write_csv(&a.common.out.join("protocol.csv"))?;
    let summary = report.summary();
    write_text(&a.common.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    echo(&a.common.out, &run)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShrinkageRun {
    pub data: DataSpec,
    pub shrinkage: ShrinkageConfig,
}

pub fn analyze_shrinkage(a: ShrinkageArgs) -> Result<()> {
    let loaded = load::<ShrinkageRun>(a.common.config.as_deref())?;
    let mut run = loaded.value.clone();
    loaded.resolve_seed(
        a.common.seed,
        &["shrinkage", "probe", "seed"],
        &mut run.shrinkage.probe.seed,
    )?;
    data_from_flag(&mut run.data, a.data);
    let s = &mut run.shrinkage;
    set(&mut s.eta, a.eta);
    set(&mut s.pool, a.pool);
    set(&mut s.bins, a.bins);
    set(&mut s.probe.epochs, a.epochs);
    set(&mut s.probe.lr, a.lr);
    s.probe.validate()?;
    let report = shrinkage_experiment(&run.data.load()?, &run.shrinkage)?;
    prepare_out(&a.common.out)?;
    report.write_toml(&a.common.out.join("shrinkage.toml"))?;
    let summary = report.summary();
    write_text(&a.common.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    echo(&a.common.out, &run)
}
