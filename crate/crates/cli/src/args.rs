//! Command-line surface. Every run flag is optional here; defaults are filled
//! in when the [`RunConfig`] is resolved so an echoed config is complete.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tg_align_core::synth::{Planted, SyntheticSpec};
use tg_align_core::{Error, Estimator, Method, Result, Similarity};

use crate::config::{CommandKind, HeadSource, InputPaths, RunConfig, StrategyName};

pub const DEFAULT_SYNTH_VISUAL: usize = 8;
pub const DEFAULT_SYNTH_QUESTION: usize = 6;
pub const DEFAULT_SYNTH_DIM: usize = 16;
pub const DEFAULT_SYNTH_NOISE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "tg-align", version, about = "Game-theoretic token alignment for video question answering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the teacher interaction matrix for visual/question tokens.
    Interact {
        #[command(flatten)]
        shared: SharedArgs,
        #[command(flatten)]
        inputs: InputArgs,
    },
    /// Merge one token set down to a target count.
    Merge {
        #[command(flatten)]
        shared: SharedArgs,
        #[command(flatten)]
        inputs: InputArgs,
    },
    /// Teacher, student and the combined training loss.
    Losses {
        #[command(flatten)]
        shared: SharedArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        head: HeadArgs,
    },
    /// End-to-end run on synthetic data or input files.
    Pipeline {
        #[command(flatten)]
        shared: SharedArgs,
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        head: HeadArgs,
    },
    /// Write synthetic tokens with a planted alignment into a directory.
    Synth {
        #[command(flatten)]
        shared: SharedArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "banzhaf" => Ok(Method::Banzhaf),
        "shapley" => Ok(Method::Shapley),
        _ => Err(format!("unknown method '{s}' (banzhaf, shapley)")),
    }
}

fn parse_similarity(s: &str) -> std::result::Result<Similarity, String> {
    match s {
        "cosine" => Ok(Similarity::Cosine),
        "dot" => Ok(Similarity::Dot),
        _ => Err(format!("unknown similarity '{s}' (cosine, dot)")),
    }
}

fn parse_planted(s: &str) -> std::result::Result<Planted, String> {
    match s {
        "diagonal" => Ok(Planted::Diagonal),
        "random" => Ok(Planted::Random),
        "none" => Ok(Planted::None),
        _ => Err(format!("unknown planting '{s}' (diagonal, random, none)")),
    }
}

#[derive(Debug, Args)]
#[group(skip)]
pub struct SharedArgs {
    /// Replay the run configuration stored in a config or artifact file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Softmax temperature for teacher and student.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of the distillation loss in the total.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = parse_method, value_name = "banzhaf|shapley")]
    pub method: Option<Method>,
    /// Exact enumeration (the default).
    #[arg(long, conflicts_with = "samples")]
    pub exact: bool,
    /// Monte-Carlo estimation with N samples per pair.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Neighbours used for the density estimate.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub target_v: Option<usize>,
    #[arg(long)]
    pub target_q: Option<usize>,
    #[arg(long, value_parser = parse_similarity, value_name = "cosine|dot")]
    pub similarity: Option<Similarity>,
    /// Output file (a directory for `synth`).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
#[group(skip)]
pub struct InputArgs {
    #[arg(long, value_name = "PATH")]
    pub video: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub question: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub answer: Option<PathBuf>,
    /// Projection of concatenated (visual, question) pairs into answer space.
    #[arg(long, value_name = "PATH")]
    pub g: Option<PathBuf>,
    /// Temporal convolution kernel for visual tokens.
    #[arg(long, value_name = "PATH")]
    pub kernel: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
#[group(skip)]
pub struct HeadArgs {
    /// Seed a fresh answer head with K classes.
    #[arg(long, value_name = "K", conflicts_with = "head")]
    pub answers: Option<usize>,
    /// Load an answer head from JSON.
    #[arg(long, value_name = "PATH")]
    pub head: Option<PathBuf>,
    /// Ground-truth answer class.
    #[arg(long)]
    pub label: Option<usize>,
    /// Compare the analytic gradient against central finite differences.
    #[arg(long)]
    pub check_grad: bool,
}

#[derive(Debug, Args, Default)]
#[group(skip)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_visual: Option<usize>,
    #[arg(long)]
    pub n_question: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Defaults to diagonal when the counts match and random otherwise.
    #[arg(long, value_parser = parse_planted, value_name = "diagonal|random|none")]
    pub planted: Option<Planted>,
}

impl SynthArgs {
    fn is_empty(&self) -> bool {
        self.n_visual.is_none() && self.n_question.is_none() && self.dim.is_none() && self.noise.is_none() && self.planted.is_none()
    }

    fn resolve(&self, seed: u64) -> SyntheticSpec {
        let n_visual = self.n_visual.unwrap_or(DEFAULT_SYNTH_VISUAL);
        let n_question = self.n_question.unwrap_or(DEFAULT_SYNTH_QUESTION);
        let planted = self.planted.unwrap_or(if n_visual == n_question { Planted::Diagonal } else { Planted::Random });
        SyntheticSpec {
            n_visual,
            n_question,
            dim: self.dim.unwrap_or(DEFAULT_SYNTH_DIM),
            noise_std: self.noise.unwrap_or(DEFAULT_SYNTH_NOISE),
            planted,
            seed,
        }
    }
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Interact { .. } => CommandKind::Interact,
            Command::Merge { .. } => CommandKind::Merge,
            Command::Losses { .. } => CommandKind::Losses,
            Command::Pipeline { .. } => CommandKind::Pipeline,
            Command::Synth { .. } => CommandKind::Synth,
        }
    }

    fn shared(&self) -> &SharedArgs {
        match self {
            Command::Interact { shared, .. }
            | Command::Merge { shared, .. }
            | Command::Losses { shared, .. }
            | Command::Pipeline { shared, .. }
            | Command::Synth { shared, .. } => shared,
        }
    }

    /// Build the run configuration, either from the flags or by replaying
    /// `--config`. A replay accepts `--out` and nothing else.
    pub fn resolve(&self, explicit_flags: &[String]) -> Result<RunConfig> {
        let shared = self.shared();
        if let Some(path) = &shared.config {
            let extra: Vec<&String> = explicit_flags.iter().filter(|f| *f != "config" && *f != "out").collect();
            if !extra.is_empty() {
                return Err(Error::Config(format!(
                    "--config replays a stored run and only accepts --out; also got --{}",
                    extra.iter().map(|s| s.replace('_', "-")).collect::<Vec<_>>().join(", --")
                )));
            }
            let mut cfg = load_run_config(path)?;
            if cfg.command != self.kind() {
                return Err(Error::Config(format!(
                    "{} stores a '{}' run, not '{}'",
                    path.display(),
                    cfg.command.as_str(),
                    self.kind().as_str()
                )));
            }
            if let Some(out) = &shared.out {
                cfg.out = out.clone();
            }
            return Ok(cfg);
        }

        let seed = shared.seed.unwrap_or(0);
        let estimator = match shared.samples {
            Some(num_samples) => Estimator::Sampled { num_samples, seed },
            None => Estimator::Exact,
        };
        let out = shared
            .out
            .clone()
            .ok_or_else(|| Error::Config(format!("{} needs --out", self.kind().as_str())))?;
        let mut cfg = RunConfig {
            command: self.kind(),
            method: shared.method.unwrap_or(Method::Banzhaf),
            estimator,
            seed,
            tau: shared.tau.unwrap_or(tg_align_core::alignment::DEFAULT_TEMPERATURE),
            alpha: shared.alpha.unwrap_or(tg_align_core::alignment::DEFAULT_ALPHA),
            similarity: shared.similarity.unwrap_or(Similarity::Cosine),
            strategy: shared.strategy.unwrap_or_default(),
            k_neighbors: shared.k.unwrap_or(tg_align_core::merge::MergeConfig::DEFAULT_K),
            target_v: shared.target_v,
            target_q: shared.target_q,
            inputs: InputPaths::default(),
            synth: None,
            head: None,
            label: None,
            check_grad: false,
            out,
        };
        let set_inputs = |cfg: &mut RunConfig, i: &InputArgs| {
            cfg.inputs = InputPaths {
                video: i.video.clone(),
                question: i.question.clone(),
                answer: i.answer.clone(),
                g: i.g.clone(),
                kernel: i.kernel.clone(),
            };
        };
        let set_head = |cfg: &mut RunConfig, h: &HeadArgs| {
            cfg.head = match (&h.answers, &h.head) {
                (Some(k), _) => Some(HeadSource::Seeded { num_answers: *k }),
                (None, Some(p)) => Some(HeadSource::File { path: p.clone() }),
                (None, None) => None,
            };
            cfg.label = h.label;
            cfg.check_grad = h.check_grad;
        };
        match self {
            Command::Interact { inputs, .. } | Command::Merge { inputs, .. } => set_inputs(&mut cfg, inputs),
            Command::Losses { inputs, head, .. } => {
                set_inputs(&mut cfg, inputs);
                set_head(&mut cfg, head);
            }
            Command::Pipeline { inputs, synth, head, .. } => {
                set_inputs(&mut cfg, inputs);
                set_head(&mut cfg, head);
                if cfg.inputs == InputPaths::default() || !synth.is_empty() {
                    cfg.synth = Some(synth.resolve(seed));
                }
            }
            Command::Synth { synth, .. } => cfg.synth = Some(synth.resolve(seed)),
        }
        Ok(cfg)
    }
}

/// Reads a bare [`RunConfig`] or any artifact carrying one under `"config"`.
pub fn load_run_config(path: &std::path::Path) -> Result<RunConfig> {
    let value: serde_json::Value = tg_align_core::io::load_json(path)?;
    let inner = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    serde_json::from_value(inner).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: format!("not a run configuration: {e}"),
    })
}
