use std::fs;
use std::path::{Path, PathBuf};

use kgalign_core::embedding::{EmbeddingSpace, Side};
use kgalign_core::evaluation::{
    cross_validate, geometry_report, metrics_csv, rank_metrics, set_metrics, test_ranking, CandidateScope,
    MetricsReport, DEFAULT_HITS,
};
use kgalign_core::inference::{align, InferenceConfig, PredictedAlignment};
use kgalign_core::kg::{
    degree_distribution, graph_stats, load_dataset, make_folds, read_attr_triples, read_links, read_rel_triples,
    write_dataset, GraphStats,
};
use kgalign_core::sampler::{densify_v2, filter_by_reference, ids_sample, prs_sample, ras_sample, SamplerConfig};
use kgalign_core::synthetic::{power_law_pair, SyntheticConfig};
use kgalign_core::training::{train, RunConfig};
use kgalign_core::{DatasetBundle, Error, KnowledgeGraph, Result};

use crate::manifest::ManifestBuilder;
use crate::{
    AlignArgs, Cli, Command, CvArgs, DiagnoseArgs, EvalArgs, Global, InferenceArgs, Method, SampleArgs, StatsArgs,
    SynthArgs, TrainArgs, OUT_DIR_ENV,
};

pub const RUN_CONFIG_FILE: &str = "config.toml";

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let g = &cli.global;
    match &cli.command {
        Command::Sample(a) => sample(g, a),
        Command::Stats(a) => stats(g, a),
        Command::Train(a) => train_cmd(g, a),
        Command::Align(a) => align_cmd(g, a),
        Command::Eval(a) => eval(g, a),
        Command::Diagnose(a) => diagnose(g, a),
        Command::Cv(a) => cv(g, a),
        Command::Synth(a) => synth(g, a),
    }
}

/// Seed for this run: `--seed`, else 0 in deterministic mode, else fresh.
fn master_seed(g: &Global) -> u64 {
    g.seed.unwrap_or_else(|| if g.deterministic { 0 } else { rand::random() })
}

fn out_dir(arg: &Option<PathBuf>, command: &str) -> Result<PathBuf> {
    if let Some(p) = arg {
        return Ok(p.clone());
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) => Ok(PathBuf::from(root).join(command)),
        None => Err(Error::Validation(format!("--out is required unless {OUT_DIR_ENV} is set"))),
    }
}

fn manifest(g: &Global, command: &str) -> ManifestBuilder {
    ManifestBuilder::new(command, g.deterministic, g.threads)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn write(path: &Path, body: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body)?;
    Ok(path.to_path_buf())
}

/// Loads a dataset; when it has no folds they are generated from `seed`.
fn load_bundle(dir: &Path, seed: u64) -> Result<DatasetBundle> {
    let mut bundle = load_dataset(dir)?;
    if bundle.folds.is_none() {
        log::info!("{} has no folds; generating them with seed {seed}", dir.display());
        bundle.folds = Some(make_folds(&bundle.links, seed)?);
    }
    Ok(bundle)
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_toml(&read_file(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn read_kg(rel: &Path, attr: Option<&PathBuf>) -> Result<KnowledgeGraph> {
    let attrs = match attr {
        Some(p) => read_attr_triples(p)?,
        None => Vec::new(),
    };
    Ok(KnowledgeGraph::from_parts(Vec::new(), read_rel_triples(rel)?, attrs))
}

fn stats_csv(rows: &[(&str, GraphStats)]) -> String {
    let mut out = format!("{}\n", GraphStats::CSV_HEADER);
    for (label, st) in rows {
        out.push_str(&st.csv_row(label));
        out.push('\n');
    }
    out
}

fn sample(g: &Global, a: &SampleArgs) -> Result<()> {
    let seed = master_seed(g);
    let out = out_dir(&a.out, "sample")?;
    let mut kg1 = read_kg(&a.kg1, a.attr1.as_ref())?;
    let mut kg2 = read_kg(&a.kg2, a.attr2.as_ref())?;
    let mut links = read_links(&a.links)?;
    if a.densify_v2 {
        let d = densify_v2(&kg1, &kg2, &links, seed)?;
        (kg1, kg2, links) = (d.kg1, d.kg2, d.links);
    }
    let cfg = SamplerConfig {
        target_size: a.size,
        mu: a.mu,
        epsilon: a.epsilon,
        max_restarts: a.max_restarts,
        rng_seed: seed,
        ..SamplerConfig::default()
    };
    let s = match a.method {
        Method::Ids => ids_sample(&kg1, &kg2, &links, &cfg)?,
        Method::Ras => ras_sample(&kg1, &kg2, &links, a.size, seed)?,
        Method::Prs => prs_sample(&kg1, &kg2, &links, a.size, seed)?,
    };
    let (src1, src2, _) = filter_by_reference(&kg1, &kg2, &links);
    let st1 = graph_stats(&s.kg1, Some(&degree_distribution(&src1)?))?;
    let st2 = graph_stats(&s.kg2, Some(&degree_distribution(&src2)?))?;
    let folds = make_folds(&s.links, seed)?;
    let bundle = DatasetBundle {
        kg1: s.kg1,
        kg2: s.kg2,
        links: s.links,
        folds: Some(folds),
    };
    let mut outputs = write_dataset(&bundle, &out)?;
    outputs.push(write(&out.join("stats.csv"), &stats_csv(&[("KG1", st1.clone()), ("KG2", st2.clone())]))?);
    println!(
        "sampled {} pairs in {} round(s), {} attempt(s); JS {:.4} / {:.4}; isolated {:.2}% / {:.2}%",
        bundle.links.len(),
        s.rounds,
        s.attempts,
        st1.js_vs_source.unwrap_or(0.0),
        st2.js_vs_source.unwrap_or(0.0),
        st1.isolated_pct,
        st2.isolated_pct
    );
    let mut inputs = vec![a.kg1.clone(), a.kg2.clone(), a.links.clone()];
    inputs.extend(a.attr1.iter().chain(&a.attr2).cloned());
    let mut m = manifest(g, "sample");
    m.config(&serde_json::json!({ "args": a, "sampler": cfg }))?.seed("master", seed).inputs(&inputs)?;
    m.finish(&out, &outputs)?;
    Ok(())
}

fn stats(g: &Global, a: &StatsArgs) -> Result<()> {
    let bundle = load_dataset(&a.data)?;
    let (src1, src2) = match &a.source {
        Some(dir) => {
            let s = load_dataset(dir)?;
            (Some(degree_distribution(&s.kg1)?), Some(degree_distribution(&s.kg2)?))
        }
        None => (None, None),
    };
    let csv = stats_csv(&[
        ("KG1", graph_stats(&bundle.kg1, src1.as_ref())?),
        ("KG2", graph_stats(&bundle.kg2, src2.as_ref())?),
    ]);
    match &a.out {
        Some(path) => {
            let written = write(path, &csv)?;
            let mut inputs = vec![a.data.clone()];
            inputs.extend(a.source.iter().cloned());
            let mut m = manifest(g, "stats");
            m.config(a)?.inputs(&inputs)?;
            m.finish(path.parent().unwrap_or(Path::new(".")), &[written])?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn train_cmd(g: &Global, a: &TrainArgs) -> Result<()> {
    let out = out_dir(&a.out, "train")?;
    let mut cfg = load_run_config(a.config.as_deref())?;
    if g.seed.is_some() || !g.deterministic {
        cfg.training.rng_seed = master_seed(g);
    }
    if let Some(e) = a.epochs {
        cfg.training.max_epochs = e;
    }
    cfg.validate()?;
    let bundle = load_bundle(&a.data, cfg.training.rng_seed)?;
    let fold = bundle.fold(a.fold)?;
    let result = train(&bundle, fold, &cfg.training, cfg.self_training.as_ref())?;

    result.space.save(&out)?;
    let mut outputs = vec![out.clone()];
    write(&out.join("training_log.csv"), &result.log.to_csv())?;
    write(&out.join(RUN_CONFIG_FILE), &cfg.to_toml())?;
    if !result.augmented.is_empty() {
        let body: String = result
            .augmented
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.source, p.target, p.similarity))
            .collect();
        write(&out.join("augmented_links.tsv"), &body)?;
    }
    if result.negative_fallbacks > 0 {
        log::warn!("{} negative samples fell back to unfiltered draws", result.negative_fallbacks);
    }
    if result.empty_literals > 0 {
        log::warn!("{} empty literals encoded as the unknown character", result.empty_literals);
    }
    println!(
        "trained fold {} for {} epoch(s); best epoch {}{}",
        a.fold,
        result.stopped_at,
        result.best_epoch,
        result
            .best_val_hits1
            .map_or_else(String::new, |h| format!(", validation Hits@1 {h:.4}"))
    );
    let mut m = manifest(g, "train");
    m.config(&cfg)?.seed("training", cfg.training.rng_seed);
    if let Some(c) = &a.config {
        m.inputs(std::slice::from_ref(c))?;
    }
    m.inputs(std::slice::from_ref(&a.data))?;
    outputs.retain(|p| p.exists());
    m.finish(&out, &outputs)?;
    Ok(())
}

/// Inference settings: those saved by `train` next to the embeddings,
/// overridden by command-line flags.
fn inference_config(emb: Option<&Path>, a: &InferenceArgs) -> Result<(RunConfig, CandidateScope)> {
    let mut cfg = match emb.map(|d| d.join(RUN_CONFIG_FILE)) {
        Some(p) if p.exists() => RunConfig::from_toml(&read_file(&p)?)?,
        _ => RunConfig::default(),
    };
    let inf: &mut InferenceConfig = &mut cfg.inference;
    if let Some(m) = &a.metric {
        inf.similarity.metric = m.parse()?;
    }
    if a.csls.is_some() {
        inf.similarity.csls = a.csls;
    }
    if let Some(s) = &a.strategy {
        inf.strategy = s.parse()?;
    }
    if let Some(b) = a.exact_bound {
        inf.exact_bound = b;
    }
    inf.similarity.validate()?;
    Ok((cfg, a.candidates.parse()?))
}

fn align_cmd(g: &Global, a: &AlignArgs) -> Result<()> {
    let out = out_dir(&a.out, "align")?;
    let (cfg, scope) = inference_config(Some(&a.embeddings), &a.inference)?;
    let bundle = load_bundle(&a.data, master_seed(g))?;
    let fold = bundle.fold(a.fold)?;
    let space = EmbeddingSpace::load(&a.embeddings)?;
    let rt = test_ranking(&space, &bundle, &fold.test, scope, &cfg)?;
    let predicted = align(&rt, &cfg.inference)?;
    fs::create_dir_all(&out)?;
    let pred_path = out.join("predictions.tsv");
    predicted.write_tsv(&pred_path)?;
    let truth_path = write(&out.join("test_links.tsv"), &tsv_links(&fold.test))?;
    println!("{} predictions written to {}", predicted.len(), pred_path.display());
    let mut m = manifest(g, "align");
    m.config(&serde_json::json!({ "inference": cfg.inference, "candidates": scope }))?;
    m.inputs(&[a.embeddings.clone(), a.data.clone()])?;
    m.finish(&out, &[pred_path, truth_path])?;
    Ok(())
}

fn tsv_links(links: &kgalign_core::AlignmentSet) -> String {
    links.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect()
}

fn eval(g: &Global, a: &EvalArgs) -> Result<()> {
    let pred = PredictedAlignment::read_tsv(&a.pred)?;
    let truth = read_links(&a.truth)?;
    let set = set_metrics(&pred.to_alignment(), &truth);
    let mut report = MetricsReport {
        fold: None,
        rank: Default::default(),
        set: Some(set),
    };
    let mut inputs = vec![a.pred.clone(), a.truth.clone()];
    if let (Some(emb), Some(data)) = (&a.embeddings, &a.data) {
        let (cfg, scope) = inference_config(Some(emb), &a.inference)?;
        let bundle = load_dataset(data)?;
        let space = EmbeddingSpace::load(emb)?;
        let rt = test_ranking(&space, &bundle, &truth, scope, &cfg)?;
        report.rank = rank_metrics(&rt, &truth, &DEFAULT_HITS)?;
        for (m, h) in &report.rank.hits {
            println!("hits@{m} = {h:.4}");
        }
        println!("mr = {:.4}", report.rank.mr);
        println!("mrr = {:.4}", report.rank.mrr);
        inputs.extend([emb.clone(), data.clone()]);
    }
    println!("precision = {:.4}", set.precision);
    println!("recall = {:.4}", set.recall);
    println!("f1 = {:.4}", set.f1);
    if a.out.is_some() || std::env::var_os(OUT_DIR_ENV).is_some() {
        let out = out_dir(&a.out, "eval")?;
        let csv = metrics_csv(&[(String::new(), &report)]);
        let written = write(&out.join("metrics.csv"), &csv)?;
        let mut m = manifest(g, "eval");
        m.config(a)?.inputs(&inputs)?;
        m.finish(&out, &[written])?;
    }
    Ok(())
}

fn diagnose(g: &Global, a: &DiagnoseArgs) -> Result<()> {
    let out = out_dir(&a.out, "diagnose")?;
    let bundle = load_bundle(&a.data, master_seed(g))?;
    let fold = bundle.fold(a.fold)?;
    let space = EmbeddingSpace::load(&a.embeddings)?;
    let sources: Vec<String> = fold.test.sources().map(String::from).collect();
    let targets: Vec<String> = fold.test.targets().map(String::from).collect();
    let src = space.aligned_matrix(Side::Kg1, &sources)?;
    let tgt = space.aligned_matrix(Side::Kg2, &targets)?;
    let report = geometry_report(&src, &tgt, a.k)?;
    let written = write(&out.join("geometry.csv"), &report.to_csv())?;
    println!(
        "targets that are nobody's nearest neighbour: {:.2}%, hubs (2+): {:.2}%",
        100.0 * report.hub_histogram[0],
        100.0 * report.hub_histogram[2]
    );
    let mut m = manifest(g, "diagnose");
    m.config(a)?.inputs(&[a.embeddings.clone(), a.data.clone()])?;
    m.finish(&out, &[written])?;
    Ok(())
}

fn cv(g: &Global, a: &CvArgs) -> Result<()> {
    let out = out_dir(&a.out, "cv")?;
    let mut cfg = load_run_config(a.config.as_deref())?;
    if g.seed.is_some() || !g.deterministic {
        cfg.training.rng_seed = master_seed(g);
    }
    if let Some(e) = a.epochs {
        cfg.training.max_epochs = e;
    }
    let scope: CandidateScope = a.candidates.parse()?;
    let bundle = load_bundle(&a.data, cfg.training.rng_seed)?;
    let result = cross_validate(&bundle, &cfg, scope)?;
    let csv = result.to_csv();
    print!("{csv}");
    let written = write(&out.join("results.csv"), &csv)?;
    let mut m = manifest(g, "cv");
    m.config(&serde_json::json!({ "run": cfg, "candidates": scope }))?.seed("training", cfg.training.rng_seed);
    if let Some(c) = &a.config {
        m.inputs(std::slice::from_ref(c))?;
    }
    m.inputs(std::slice::from_ref(&a.data))?;
    m.finish(&out, &[written])?;
    Ok(())
}

fn synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let out = out_dir(&a.out, "synth")?;
    let seed = master_seed(g);
    let cfg = SyntheticConfig {
        entities: a.entities,
        avg_degree: a.avg_degree,
        relations: a.relations,
        noise: a.noise,
        attributes_per_entity: a.attributes,
        seed,
        ..SyntheticConfig::default()
    };
    let p = power_law_pair(&cfg);
    let folds = make_folds(&p.links, seed)?;
    let bundle = DatasetBundle {
        kg1: p.kg1,
        kg2: p.kg2,
        links: p.links,
        folds: Some(folds),
    };
    let outputs = write_dataset(&bundle, &out)?;
    println!("wrote {} aligned pairs to {}", bundle.links.len(), out.display());
    let mut m = manifest(g, "synth");
    m.config(&cfg)?.seed("master", seed);
    m.finish(&out, &outputs)?;
    Ok(())
}
