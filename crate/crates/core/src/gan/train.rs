use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use guigan_ndnet::checkpoint::Checkpoint;
use guigan_ndnet::{AdamConfig, AdamState, ParamSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::steps::{d_step, g_step, pretrain_generator, FusionState, Shaping};
use super::{
    init_generator, sample_sequence, DiscScorer, Discriminator, GanConfig, GanError, Generator, Policy, Result,
    SamplingContext, DISCRIMINATOR_KIND, GENERATOR_KIND,
};
use crate::corpus::SubtreeRepository;
use crate::losses::FusionWeights;
use crate::{EmbeddingTable, TokenSequence};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum LogEntry {
    Pretrain {
        epoch: usize,
        perplexity: f64,
    },
    DStep {
        round: usize,
        step: usize,
        loss: f64,
        accuracy: f64,
    },
    GStep {
        round: usize,
        step: usize,
        loss_g: f64,
        loss_c: f64,
        loss_s: f64,
        lambda: [f64; 3],
        fused: f64,
        mean_reward: f64,
        mean_len: f64,
        disc_accuracy: f64,
        skipped: bool,
    },
}

pub struct TrainOutput {
    pub generator: Generator,
    pub gen_params: ParamSet,
    /// Generator params right after maximum-likelihood pretraining.
    pub pretrained_params: ParamSet,
    pub discriminator: Discriminator,
    pub disc_params: ParamSet,
    pub fusion: FusionWeights,
    pub context: SamplingContext,
    pub log: Vec<LogEntry>,
}

struct RunWriter {
    dir: PathBuf,
    log: BufWriter<File>,
}

impl RunWriter {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("checkpoints"))?;
        let log = BufWriter::new(File::create(dir.join("log.jsonl"))?);
        Ok(Self { dir: dir.to_path_buf(), log })
    }

    fn entry(&mut self, e: &LogEntry) -> Result<()> {
        serde_json::to_writer(&mut self.log, e)?;
        self.log.write_all(b"\n")?;
        Ok(())
    }

    fn checkpoints(&mut self, round: usize, cks: &[(&str, Checkpoint)]) -> Result<()> {
        self.log.flush()?;
        let round_dir = self.dir.join("checkpoints").join(format!("round_{round:03}"));
        fs::create_dir_all(&round_dir)?;
        for (name, ck) in cks {
            ck.save(&round_dir.join(format!("{name}.json")))?;
            ck.save(&self.dir.join(format!("{name}.json")))?;
        }
        Ok(())
    }
}

fn generator_checkpoint(gen: &Generator, ps: &ParamSet, config: &GanConfig, ctx: &SamplingContext) -> Checkpoint {
    Checkpoint::new(
        GENERATOR_KIND,
        ps.clone(),
        serde_json::json!({ "config": config, "generator": gen, "context": ctx }),
    )
}

/// Pretrains the generator, then alternates `d_steps` discriminator updates
/// and `g_steps` generator updates for `rounds` rounds. With a run directory,
/// the log is streamed to `log.jsonl` and checkpoints are written after
/// pretraining (round 0) and after every round.
pub fn train<R: Rng + ?Sized>(
    config: &GanConfig,
    repo: &SubtreeRepository,
    embeddings: &EmbeddingTable,
    rng: &mut R,
    run_dir: Option<&Path>,
) -> Result<TrainOutput> {
    config.validate()?;
    let real: Vec<TokenSequence> = repo
        .real_sequences()
        .into_iter()
        .map(|mut s| {
            s.tokens.truncate(config.max_len);
            s
        })
        .collect();
    if real.is_empty() {
        return Err(GanError::NoRealSequences);
    }
    let ctx = SamplingContext::from_repo(repo, config)?;
    let (generator, mut gen_ps) = init_generator(repo.len(), embeddings, config, rng)?;
    let discriminator = Discriminator::new(
        repo.len(),
        config.embed_dim,
        config.max_len,
        config.disc_filters,
        config.disc_kernels.clone(),
    );
    let table = gen_ps.get(generator.embedding().table_name())?.clone();
    let mut disc_ps = discriminator.init(guigan_ndnet::Tensor::from_vec(table.shape(), table.data().to_vec())?, rng);
    let mut gen_adam = AdamState::new(AdamConfig::with_lr(config.lr));
    let mut disc_adam = AdamState::new(AdamConfig::with_lr(config.lr));
    let mut fusion = FusionState::new(config.fusion_weights(), config.lr);
    let mut writer = run_dir.map(RunWriter::create).transpose()?;
    let mut log = Vec::new();
    let mut record = |e: LogEntry, w: &mut Option<RunWriter>| -> Result<()> {
        if let Some(w) = w {
            w.entry(&e)?;
        }
        log.push(e);
        Ok(())
    };

    for p in pretrain_generator(&generator, &mut gen_ps, &mut gen_adam, &real, config.pretrain_epochs, config.batch, rng)? {
        record(LogEntry::Pretrain { epoch: p.epoch, perplexity: p.perplexity }, &mut writer)?;
    }
    let pretrained_params = gen_ps.clone();
    let snapshot = |gen_ps: &ParamSet, disc_ps: &ParamSet, fusion: &FusionState| {
        [
            ("generator", generator_checkpoint(&generator, gen_ps, config, &ctx)),
            (
                "discriminator",
                Checkpoint::new(DISCRIMINATOR_KIND, disc_ps.clone(), serde_json::json!({ "discriminator": discriminator })),
            ),
            ("fusion", fusion.to_checkpoint()),
        ]
    };
    if let Some(w) = &mut writer {
        w.checkpoints(0, &snapshot(&gen_ps, &disc_ps, &fusion))?;
    }

    let shaping = Shaping { repo, embeddings, real: &real };
    let mut disc_accuracy = f64::NAN;
    for round in 1..=config.rounds {
        for step in 1..=config.d_steps {
            let s = d_step(&discriminator, &mut disc_ps, &mut disc_adam, &real, &generator, &gen_ps, &ctx, config.batch, rng)?;
            disc_accuracy = s.accuracy;
            record(LogEntry::DStep { round, step, loss: s.loss, accuracy: s.accuracy }, &mut writer)?;
        }
        for step in 1..=config.g_steps {
            let scorer = DiscScorer { disc: &discriminator, params: &disc_ps };
            let s = g_step(&generator, &mut gen_ps, &mut gen_adam, &scorer, &ctx, Some(&shaping), &mut fusion, config, rng)?;
            record(
                LogEntry::GStep {
                    round,
                    step,
                    loss_g: s.loss_g,
                    loss_c: s.loss_c,
                    loss_s: s.loss_s,
                    lambda: s.lambda,
                    fused: s.fused,
                    mean_reward: s.mean_reward,
                    mean_len: s.mean_len,
                    disc_accuracy,
                    skipped: s.skipped,
                },
                &mut writer,
            )?;
        }
        log::info!("round {round}/{}: discriminator accuracy {disc_accuracy:.3}", config.rounds);
        if let Some(w) = &mut writer {
            w.checkpoints(round, &snapshot(&gen_ps, &disc_ps, &fusion))?;
        }
    }
    if let Some(w) = &mut writer {
        w.log.flush()?;
    }
    Ok(TrainOutput {
        generator,
        gen_params: gen_ps,
        pretrained_params,
        discriminator,
        disc_params: disc_ps,
        fusion: fusion.weights,
        context: ctx,
        log,
    })
}

/// The latest generator of a run directory.
pub struct RunArtifacts {
    pub config: GanConfig,
    pub generator: Generator,
    pub params: ParamSet,
    pub context: SamplingContext,
}

pub fn load_run(run_dir: &Path) -> Result<RunArtifacts> {
    let ck = Checkpoint::load_kind(&run_dir.join("generator.json"), GENERATOR_KIND)?;
    let field = |name: &str| {
        ck.hyperparameters
            .get(name)
            .cloned()
            .ok_or_else(|| GanError::InvalidConfig(format!("generator checkpoint lacks {name:?}")))
    };
    Ok(RunArtifacts {
        config: serde_json::from_value(field("config")?)?,
        generator: serde_json::from_value(field("generator")?)?,
        context: serde_json::from_value(field("context")?)?,
        params: ck.params,
    })
}

/// `count` sequences under `policy`.
pub fn generate<R: Rng + ?Sized>(
    gen: &Generator,
    ps: &ParamSet,
    ctx: &SamplingContext,
    count: usize,
    policy: Policy,
    rng: &mut R,
) -> Result<Vec<TokenSequence>> {
    (0..count).map(|_| sample_sequence(gen, ps, ctx, rng, policy, &[])).collect()
}
