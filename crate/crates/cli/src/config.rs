//! The fully resolved run configuration echoed into every artifact.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tg_align_core::game::MAX_EXACT_PLAYERS;
use tg_align_core::merge::Strategy;
use tg_align_core::synth::SyntheticSpec;
use tg_align_core::{Error, Estimator, Method, Result, Similarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Interact,
    Merge,
    Losses,
    Pipeline,
    Synth,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Interact => "interact",
            CommandKind::Merge => "merge",
            CommandKind::Losses => "losses",
            CommandKind::Pipeline => "pipeline",
            CommandKind::Synth => "synth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    #[default]
    Dpcknn,
    Random,
    Temporal,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub video: Option<PathBuf>,
    pub question: Option<PathBuf>,
    pub answer: Option<PathBuf>,
    pub g: Option<PathBuf>,
    pub kernel: Option<PathBuf>,
}

impl InputPaths {
    fn is_empty(&self) -> bool {
        *self == InputPaths::default()
    }
}

/// Where the answer head comes from: freshly seeded with the run seed, or a
/// JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HeadSource {
    Seeded { num_answers: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub method: Method,
    pub estimator: Estimator,
    pub seed: u64,
    pub tau: f64,
    pub alpha: f64,
    pub similarity: Similarity,
    pub strategy: StrategyName,
    pub k_neighbors: usize,
    pub target_v: Option<usize>,
    pub target_q: Option<usize>,
    pub inputs: InputPaths,
    pub synth: Option<SyntheticSpec>,
    pub head: Option<HeadSource>,
    pub label: Option<usize>,
    pub check_grad: bool,
    pub out: PathBuf,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn merge_strategy(&self) -> Strategy {
        match self.strategy {
            StrategyName::Dpcknn => Strategy::DpcKnn,
            StrategyName::Random => Strategy::Random { seed: self.seed },
            StrategyName::Temporal => Strategy::Temporal,
        }
    }

    /// Checks everything that does not need the input data. Player counts
    /// are checked separately by [`RunConfig::check_players`] once known.
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(config_err(format!("--tau must be positive and finite, got {}", self.tau)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config_err(format!("--alpha must be non-negative and finite, got {}", self.alpha)));
        }
        if self.k_neighbors == 0 {
            return Err(config_err("--k must be at least 1"));
        }
        if let Estimator::Sampled { num_samples: 0, .. } = self.estimator {
            return Err(config_err("--samples must be at least 1"));
        }
        if self.target_v == Some(0) || self.target_q == Some(0) {
            return Err(config_err("merge targets must be at least 1"));
        }
        if let Some(HeadSource::Seeded { num_answers: 0 }) = self.head {
            return Err(config_err("--answers must be at least 1"));
        }
        if self.head.is_some() != self.label.is_some() {
            return Err(config_err("--label and an answer head (--answers or --head) go together"));
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }

        let inp = &self.inputs;
        let require = |name: &str, p: &Option<PathBuf>| match p {
            Some(_) => Ok(()),
            None => Err(config_err(format!("{} needs --{name}", self.command.as_str()))),
        };
        match self.command {
            CommandKind::Interact | CommandKind::Losses => {
                require("video", &inp.video)?;
                require("question", &inp.question)?;
                require("answer", &inp.answer)?;
                require("g", &inp.g)?;
            }
            CommandKind::Pipeline => match (&self.synth, inp.is_empty()) {
                (Some(_), true) => {}
                (None, false) => {
                    require("video", &inp.video)?;
                    require("question", &inp.question)?;
                    require("answer", &inp.answer)?;
                    require("g", &inp.g)?;
                }
                _ => return Err(config_err("pipeline takes either synthetic settings or input files, not both")),
            },
            CommandKind::Merge => match (&inp.video, &inp.question) {
                (Some(_), None) if self.target_v.is_some() => {}
                (None, Some(_)) if self.target_q.is_some() => {}
                (Some(_), None) => return Err(config_err("merging --video needs --target-v")),
                (None, Some(_)) => return Err(config_err("merging --question needs --target-q")),
                _ => return Err(config_err("merge takes exactly one of --video or --question")),
            },
            CommandKind::Synth => {
                if self.synth.is_none() {
                    return Err(config_err("synth needs synthetic settings"));
                }
            }
        }
        if let Some(spec) = &self.synth {
            self.check_players(spec.n_visual, spec.n_question)?;
        }
        Ok(())
    }

    /// Player counts after merging must fit the estimator, and merge targets
    /// cannot exceed the token counts they reduce.
    pub fn check_players(&self, n_visual: usize, n_question: usize) -> Result<(usize, usize)> {
        for (target, n, flag) in [(self.target_v, n_visual, "--target-v"), (self.target_q, n_question, "--target-q")] {
            if let Some(t) = target {
                if t > n {
                    return Err(config_err(format!("{flag} {t} exceeds the {n} available tokens")));
                }
            }
        }
        let nv = self.target_v.unwrap_or(n_visual);
        let nq = self.target_q.unwrap_or(n_question);
        let players = nv + nq;
        let uses_game = matches!(self.command, CommandKind::Interact | CommandKind::Losses | CommandKind::Pipeline);
        if uses_game && self.estimator == Estimator::Exact && players > MAX_EXACT_PLAYERS {
            return Err(Error::Capacity {
                what: "exact interaction",
                limit: MAX_EXACT_PLAYERS,
                got: players,
            });
        }
        Ok((nv, nq))
    }
}
