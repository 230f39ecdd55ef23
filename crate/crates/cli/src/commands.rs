use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use guigan_core::compose::render_sequence;
use guigan_core::corpus::{build_repository, load_input_dir, write_screen, SegmentParams, SubtreeRepository};
use guigan_core::eval::{checkpoint_digest, evaluate, EvalSet};
use guigan_core::gan::{self, load_run, GanConfig, Policy};
use guigan_core::style::{train_siamese, Siamese, SiameseConfig};
use guigan_core::synth::{generate_corpus, SynthSpec};
use guigan_core::{EmbeddingTable, TokenSequence};
use guigan_ndnet::checkpoint::Checkpoint;

use crate::args::*;
use crate::error::{CliError, Result};

/// Records where a run's repository lives so `generate` can find crops.
const RUN_SOURCE: &str = "source.json";

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Echo of the effective settings. Directory outputs get
/// `config_resolved.json` inside; file outputs get
/// `<stem>.config_resolved.json` beside them.
fn echo_config(output: &Path, is_dir: bool, command: &str, seed: u64, config: Value) -> Result<()> {
    let path = if is_dir {
        output.join("config_resolved.json")
    } else {
        let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
        output.with_file_name(format!("{stem}.config_resolved.json"))
    };
    write_json(&path, &json!({ "command": command, "seed": seed, "config": config }))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(p)?;
    }
    Ok(())
}

fn load_repo(dir: &Path) -> Result<SubtreeRepository> {
    Ok(SubtreeRepository::load(dir)?)
}

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Corpus(CorpusCmd::Synth(a)) => corpus_synth(seed, a),
        Command::Corpus(CorpusCmd::Build(a)) => corpus_build(seed, a),
        Command::Style(StyleCmd::Train(a)) => style_train(seed, a),
        Command::Style(StyleCmd::Embed(a)) => style_embed(seed, a),
        Command::Gan(GanCmd::Train(a)) => gan_train(seed, a),
        Command::Generate(a) => generate(seed, a),
        Command::Evaluate(a) => evaluate_cmd(seed, a),
    }
}

fn corpus_synth(seed: u64, a: SynthArgs) -> Result<()> {
    let spec = SynthSpec::new(seed, a.apps, a.screens);
    let screens = generate_corpus(&spec)?;
    fs::create_dir_all(&a.output)?;
    for s in &screens {
        write_screen(&a.output, &s.screen)?;
    }
    echo_config(&a.output, true, "corpus synth", seed, json!({ "apps": a.apps, "screens": a.screens }))?;
    println!("wrote {} screens to {}", screens.len(), a.output.display());
    Ok(())
}

fn corpus_build(seed: u64, a: BuildArgs) -> Result<()> {
    let params = SegmentParams { width_frac: a.width_frac, aspect_min: a.aspect_min, aspect_max: a.aspect_max };
    if !(params.width_frac > 0.0 && params.width_frac <= 1.0) || !(params.aspect_min < params.aspect_max) {
        return Err(CliError::Usage(format!("invalid segmentation parameters {params:?}")));
    }
    let (screens, failures) = load_input_dir(&a.input)?;
    let (repo, seqs) = build_repository(&screens, &params)?;
    repo.save(&a.output)?;
    echo_config(&a.output, true, "corpus build", seed, serde_json::to_value(params)?)?;
    println!(
        "{} subtrees from {} screens ({} skipped, {} apps) -> {}",
        repo.len(),
        seqs.len(),
        failures.len(),
        repo.app_index.len(),
        a.output.display()
    );
    Ok(())
}

fn style_train(seed: u64, a: StyleTrainArgs) -> Result<()> {
    let mut cfg: SiameseConfig = read_config(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = a.lr {
        cfg.lr = lr;
    }
    let repo = load_repo(&a.repo)?;
    let trained = train_siamese(&cfg, &repo, &mut rng(seed))?;
    ensure_parent(&a.output)?;
    trained.model.to_checkpoint(&trained.params).save(&a.output)?;
    let stem = a.output.file_stem().and_then(|s| s.to_str()).unwrap_or("siamese");
    write_json(&a.output.with_file_name(format!("{stem}.log.json")), &trained.log)?;
    echo_config(&a.output, false, "style train", seed, serde_json::to_value(&cfg)?)?;
    if let Some(last) = trained.log.last() {
        println!("epoch {}: loss {:.4}, held-out accuracy {:.3}", last.epoch, last.loss, last.heldout_accuracy);
    }
    Ok(())
}

fn load_siamese(path: &Path) -> Result<(Siamese, guigan_ndnet::ParamSet, String)> {
    let ck = Checkpoint::load(path)?;
    let digest = checkpoint_digest(&ck);
    let (model, ps) = Siamese::from_checkpoint(ck)?;
    Ok((model, ps, digest))
}

fn style_embed(seed: u64, a: StyleEmbedArgs) -> Result<()> {
    let repo = load_repo(&a.repo)?;
    let (model, ps, digest) = load_siamese(&a.ckpt)?;
    let table = model.embed_repository(&ps, &repo)?;
    ensure_parent(&a.output)?;
    table.save(&a.output)?;
    echo_config(&a.output, false, "style embed", seed, json!({ "embedder_digest": digest }))?;
    println!("{} embeddings of dimension {} -> {}", table.len(), table.dim(), a.output.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RunSource {
    repo: PathBuf,
}

fn gan_train(seed: u64, a: GanTrainArgs) -> Result<()> {
    let mut cfg: GanConfig = read_config(a.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = m.into();
    }
    if let Some(r) = a.rounds {
        cfg.rounds = r;
    }
    if let Some(p) = a.pretrain_epochs {
        cfg.pretrain_epochs = p;
    }
    cfg.validate()?;
    let repo = load_repo(&a.repo)?;
    let embeddings = EmbeddingTable::load(&a.embeddings)?;
    let out = gan::train(&cfg, &repo, &embeddings, &mut rng(seed), Some(&a.output))?;
    let repo_path = fs::canonicalize(&a.repo).unwrap_or(a.repo.clone());
    write_json(&a.output.join(RUN_SOURCE), &RunSource { repo: repo_path })?;
    echo_config(&a.output, true, "gan train", seed, serde_json::to_value(&cfg)?)?;
    println!("trained {} rounds in mode {}; lambda {:?}", cfg.rounds, cfg.mode.name(), out.fusion.lambda());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    image: Option<String>,
    sequence: TokenSequence,
}

const SEQUENCES_FILE: &str = "sequences.json";

fn generate(seed: u64, a: GenerateArgs) -> Result<()> {
    let run = load_run(&a.run)?;
    let policy = match a.policy {
        PolicyArg::Sample => Policy::Sample,
        PolicyArg::Greedy => Policy::Greedy,
        PolicyArg::Uniform => Policy::Uniform,
    };
    let seqs = gan::generate(&run.generator, &run.params, &run.context, a.count, policy, &mut rng(seed))?;
    fs::create_dir_all(&a.output)?;
    write_json(&a.output.join(SEQUENCES_FILE), &seqs)?;
    if a.render {
        let repo_dir = match &a.repo {
            Some(r) => r.clone(),
            None => {
                let src: RunSource = serde_json::from_slice(&fs::read(a.run.join(RUN_SOURCE))?)?;
                src.repo
            }
        };
        let repo = load_repo(&repo_dir)?;
        let (w, h) = repo.canonical_screen_size();
        let mut manifest = Vec::with_capacity(seqs.len());
        for (k, s) in seqs.iter().enumerate() {
            let name = format!("gen_{k}.png");
            render_sequence(&s.tokens, &repo, w, h, a.separators)?.save(a.output.join(&name))?;
            manifest.push(ManifestEntry { image: Some(name), sequence: s.clone() });
        }
        write_json(&a.output.join("manifest.json"), &manifest)?;
    }
    let policy_name = format!("{:?}", a.policy).to_lowercase();
    echo_config(
        &a.output,
        true,
        "generate",
        seed,
        json!({ "count": a.count, "render": a.render, "separators": a.separators, "policy": policy_name }),
    )?;
    let mean_len = seqs.iter().map(TokenSequence::len).sum::<usize>() as f64 / seqs.len().max(1) as f64;
    println!("generated {} sequences (mean length {mean_len:.2}) -> {}", seqs.len(), a.output.display());
    Ok(())
}

fn render_all(repo: &SubtreeRepository, seqs: Vec<Vec<usize>>) -> Result<EvalSet> {
    let (w, h) = repo.canonical_screen_size();
    let images = seqs
        .iter()
        .map(|s| render_sequence(s, repo, w, h, false))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EvalSet { images, sequences: seqs })
}

fn evaluate_cmd(seed: u64, a: EvaluateArgs) -> Result<()> {
    let repo = load_repo(&a.real)?;
    let (model, ps, digest) = load_siamese(&a.ckpt)?;
    let real = render_all(&repo, repo.real_sequences().into_iter().map(|s| s.tokens).collect())?;
    let generated: Vec<TokenSequence> = serde_json::from_slice(&fs::read(a.generated.join(SEQUENCES_FILE))?)?;
    let generated = render_all(&repo, generated.into_iter().map(|s| s.tokens).collect())?;
    let report = evaluate(&real, &generated, &model, &ps, &repo, seed, digest)?;
    ensure_parent(&a.output)?;
    write_json(&a.output, &report)?;
    echo_config(&a.output, false, "evaluate", seed, json!({ "embedder_digest": report.embedder_digest }))?;
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    println!("samples         {} real / {} generated", report.real_count, report.generated_count);
    println!("FID             {:.6}", report.fid);
    println!("1-NNA           {:.4}", report.one_nna);
    println!("homogeneity     {}", opt(report.mean_homogeneity));
    println!("style loss      {}", opt(report.mean_style_loss));
    println!("structure loss  {}", opt(report.mean_structure_loss));
    Ok(())
}
