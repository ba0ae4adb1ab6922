//! `evgraph author`: binary authorship attribution over WANs.
//!
//! Loads the corpus tree, assembles the target-vs-others dataset, trains one
//! architecture on the signature graph, and writes `accuracy.csv`,
//! `trace.csv`, `signature.edges`, `signals.csv`, and `model.json`.

use std::path::Path;

use evgraph_core::experiments::default_architectures;
use evgraph_core::nn::{evaluate, train, AdamConfig, GraphContext, Model, Split};
use evgraph_core::rng;
use evgraph_core::wan::{
    assemble_author_dataset, default_function_words, load_corpus, parse_function_words,
    write_signals_csv, WanConfig,
};

use crate::config::{print_resolved, ConfigFile};
use crate::{CliError, RunArgs};

struct AuthorConfig {
    master_seed: u64,
    target_author: String,
    splits: (usize, usize, usize),
    wan: WanConfig,
    function_words: Vec<String>,
    architecture: String,
    filter_order: usize,
    num_knots: usize,
    num_privileged: usize,
    out_features: usize,
    adam: AdamConfig,
}

pub fn run(corpus_dir: &Path, args: &RunArgs) -> Result<(), CliError> {
    let file = ConfigFile::load(&args.config)?;
    let (cfg, resolved) = parse_config(&file)?;
    if !corpus_dir.is_dir() {
        return Err(CliError::Config(format!(
            "corpus directory {} does not exist",
            corpus_dir.display()
        )));
    }
    if args.dry_run {
        print_resolved("author", &resolved);
        return Ok(());
    }
    super::ensure_out_dir(&args.out)?;

    let corpus = load_corpus(corpus_dir, cfg.function_words.clone())
        .map_err(|e| CliError::Config(format!("{}: {e}", corpus_dir.display())))?;
    if !corpus.authors().iter().any(|a| a == &cfg.target_author) {
        return Err(CliError::Config(format!(
            "target author `{}` not present; corpus has {:?}",
            cfg.target_author,
            corpus.authors()
        )));
    }

    let (data, signature) = assemble_author_dataset(
        &corpus,
        &cfg.target_author,
        cfg.splits,
        &cfg.wan,
        rng::derive_seed(cfg.master_seed, "author-split", &[]),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let arch = default_architectures(
        cfg.filter_order,
        cfg.num_knots,
        cfg.num_privileged,
        cfg.out_features,
        2,
    )
    .into_iter()
    .find(|a| a.name == cfg.architecture)
    .ok_or_else(|| CliError::Config(format!("unknown architecture `{}`", cfg.architecture)))?;

    let ctx = GraphContext::for_model_spec(signature.clone(), &arch.model)
        .map_err(CliError::runtime)?;
    let mut model = Model::init(
        &arch.model,
        &ctx,
        rng::derive_seed(cfg.master_seed, "model-init", &[]),
    )
    .map_err(CliError::runtime)?;
    let adam = AdamConfig {
        seed: rng::derive_seed(cfg.master_seed, "train-shuffle", &[]),
        ..cfg.adam
    };
    let trace = train(&mut model, &ctx, &data, &adam).map_err(CliError::runtime)?;

    // per-split accuracy CSV
    let mut accuracy = String::from("split,accuracy\n");
    for split in [Split::Train, Split::Val, Split::Test] {
        if data.split_len(split) == 0 {
            continue;
        }
        let acc = evaluate(&model, &ctx, &data, split).map_err(CliError::runtime)?;
        accuracy.push_str(&format!("{},{}\n", split.name(), acc));
    }
    super::write_file(&args.out.join("accuracy.csv"), accuracy.as_bytes())?;

    let mut trace_csv = Vec::new();
    evgraph_core::nn::write_trace_csv(&trace, &mut trace_csv).map_err(CliError::runtime)?;
    super::write_file(&args.out.join("trace.csv"), &trace_csv)?;

    let mut edges = Vec::new();
    signature
        .write_edge_list(&mut edges)
        .map_err(CliError::runtime)?;
    super::write_file(&args.out.join("signature.edges"), &edges)?;

    let mut signals = Vec::new();
    write_signals_csv(&data, &corpus.function_words, &mut signals).map_err(CliError::runtime)?;
    super::write_file(&args.out.join("signals.csv"), &signals)?;

    model
        .to_archive()
        .save(&args.out.join("model.json"))
        .map_err(CliError::runtime)?;

    print!("{accuracy}");
    Ok(())
}

fn parse_config(file: &ConfigFile) -> Result<(AuthorConfig, Vec<(String, String)>), CliError> {
    let mut b = file.binder();
    let master_seed = b.u64_or("master_seed", 0)?;
    let target_author = b.required_string("target_author")?;
    let splits = (
        b.usize_or("train_split", 608)?,
        b.usize_or("val_split", 68)?,
        b.usize_or("test_split", 170)?,
    );
    let wan = WanConfig {
        window: b.usize_or("window_length", 10)?,
        decay: b.f64_or("decay", 0.8)?,
        normalize: b.bool_or("row_normalize", true)?,
    };
    wan.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let function_words = match b.optional_string("function_words_file") {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
            let words = parse_function_words(&text);
            if words.is_empty() {
                return Err(CliError::Config(format!(
                    "{path}: function-word list is empty"
                )));
            }
            words
        }
        None => default_function_words(),
    };
    let architecture = b.string_or("architecture", "hev-degree")?;
    let filter_order = b.usize_or("filter_order", 1)?;
    let num_knots = b.usize_or("num_knots", 2)?;
    let num_privileged = b.usize_or("num_privileged", 2)?;
    let out_features = b.usize_or("out_features", 2)?;
    let adam = AdamConfig {
        learning_rate: b.f64_or("learning_rate", 0.001)?,
        beta1: b.f64_or("beta1", 0.9)?,
        beta2: b.f64_or("beta2", 0.999)?,
        epsilon: b.f64_or("epsilon", 1e-8)?,
        epochs: b.usize_or("epochs", 80)?,
        batch_size: b.usize_or("batch_size", 100)?,
        seed: 0,
    };
    adam.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let resolved = b.finish()?;
    Ok((
        AuthorConfig {
            master_seed,
            target_author,
            splits,
            wan,
            function_words,
            architecture,
            filter_order,
            num_knots,
            num_privileged,
            out_features,
            adam,
        },
        resolved,
    ))
}
