//! The five subcommands. Each computes its whole artifact in memory and only
//! then writes it, so a failed run leaves no output behind.

use std::path::Path;

use serde::Serialize;
use tg_align_core::alignment::{
    answer_forward, cross_entropy, kl_divergence, student_matrix, teacher_matrix, tg_loss_with_grad, total_loss,
    AnswerHead, GuidanceMatrix, LossReport, MatrixArtifact, StudentPrediction,
};
use tg_align_core::io::{load_answer, load_embeddings, load_json, load_kernel, load_projection, save_answer, save_embeddings, write_json_atomic};
use tg_align_core::merge::{merge_pipeline, temporal_conv1d, ConvKernel, MergeConfig};
use tg_align_core::synth::synth_generate;
use tg_align_core::{AnswerEmbedding, Error, Matrix, ProjectionG, Result, TernaryRevenueConfig, TokenSet};

use crate::config::{CommandKind, HeadSource, RunConfig};

/// Step used by `--check-grad`.
pub const GRAD_CHECK_STEP: f64 = 1e-4;

#[derive(Debug, Serialize)]
pub struct MergeSummary {
    pub strategy: &'static str,
    pub k_neighbors: usize,
    pub source_count: usize,
    pub target_count: usize,
    pub centers: Vec<usize>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Default, Serialize)]
pub struct Shapes {
    pub visual: [usize; 2],
    pub question: [usize; 2],
    pub visual_merged: [usize; 2],
    pub question_merged: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[usize; 2]>,
}

#[derive(Debug, Serialize)]
pub struct MatrixPair {
    pub raw: MatrixArtifact,
    pub normalized: MatrixArtifact,
}

#[derive(Debug, Serialize)]
pub struct GradCheck {
    pub step: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Serialize)]
pub struct MergeInfo {
    pub visual: Option<MergeSummary>,
    pub question: Option<MergeSummary>,
}

/// Artifact written by `interact`, `losses` and `pipeline`.
#[derive(Debug, Serialize)]
pub struct RunArtifact {
    pub config: RunConfig,
    pub shapes: Shapes,
    pub merge: MergeInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_alignment: Option<Vec<usize>>,
    pub teacher: MatrixPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub student: Option<MatrixPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer_logits: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_check: Option<GradCheck>,
}

/// Output of `merge`: readable as an embedding file.
#[derive(Debug, Serialize)]
pub struct MergeArtifact {
    pub dim: usize,
    pub tokens: Vec<Vec<f64>>,
    pub config: RunConfig,
    pub modality: &'static str,
    pub merge: MergeSummary,
}

#[derive(Debug, Serialize)]
pub struct SynthManifest {
    pub config: RunConfig,
    pub files: [&'static str; 4],
    pub alignment: Option<Vec<usize>>,
}

/// What a command reports back to the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<std::path::PathBuf>,
    pub messages: Vec<String>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.command {
        CommandKind::Interact | CommandKind::Losses | CommandKind::Pipeline => run_alignment(cfg),
        CommandKind::Merge => run_merge(cfg),
        CommandKind::Synth => run_synth(cfg),
    }
}

struct Inputs {
    visual: TokenSet,
    question: TokenSet,
    answer: AnswerEmbedding,
    g: ProjectionG,
    kernel: Option<ConvKernel>,
    planted: Option<Vec<usize>>,
}

fn path_of<'a>(p: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("missing --{flag}")))
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    if let Some(spec) = &cfg.synth {
        let d = synth_generate(spec)?;
        return Ok(Inputs {
            visual: d.visual,
            question: d.question,
            answer: d.answer,
            g: d.g,
            kernel: None,
            planted: d.alignment,
        });
    }
    let inp = &cfg.inputs;
    Ok(Inputs {
        visual: load_embeddings(path_of(&inp.video, "video")?)?,
        question: load_embeddings(path_of(&inp.question, "question")?)?,
        answer: load_answer(path_of(&inp.answer, "answer")?)?,
        g: load_projection(path_of(&inp.g, "g")?)?,
        kernel: inp.kernel.as_deref().map(load_kernel).transpose()?,
        planted: None,
    })
}

fn merge_one(
    tokens: &TokenSet,
    kernel: Option<&ConvKernel>,
    target: Option<usize>,
    cfg: &RunConfig,
) -> Result<(TokenSet, Option<MergeSummary>)> {
    let Some(target_count) = target else {
        return Ok((
            match kernel {
                Some(k) => temporal_conv1d(tokens, k)?,
                None => tokens.clone(),
            },
            None,
        ));
    };
    let mcfg = MergeConfig {
        k_neighbors: cfg.k_neighbors,
        target_count,
        strategy: cfg.merge_strategy(),
    };
    let out = merge_pipeline(tokens, kernel, &mcfg)?;
    let summary = MergeSummary {
        strategy: mcfg.strategy.as_str(),
        k_neighbors: mcfg.k_neighbors,
        source_count: tokens.len(),
        target_count,
        centers: out.assignment.centers,
        labels: out.assignment.labels,
    };
    Ok((out.fused, Some(summary)))
}

fn shape(t: &TokenSet) -> [usize; 2] {
    [t.len(), t.dim()]
}

/// Largest gap between the analytic distillation gradient and central
/// differences of the loss itself.
pub fn finite_difference_gap(teacher: &GuidanceMatrix, student: &StudentPrediction, grad: &Matrix, h: f64) -> Result<f64> {
    let loss_at = |logits: Matrix| -> Result<f64> {
        let s = StudentPrediction::from_logits(logits, student.temperature)?;
        kl_divergence(&teacher.normalized, &s.normalized)
    };
    let mut worst: f64 = 0.0;
    for i in 0..grad.rows() {
        for j in 0..grad.cols() {
            let mut plus = student.logits.clone();
            plus.set(i, j, plus.get(i, j) + h);
            let mut minus = student.logits.clone();
            minus.set(i, j, minus.get(i, j) - h);
            let fd = (loss_at(plus)? - loss_at(minus)?) / (2.0 * h);
            worst = worst.max((fd - grad.get(i, j)).abs());
        }
    }
    Ok(worst)
}

fn run_alignment(cfg: &RunConfig) -> Result<Outcome> {
    let inputs = load_inputs(cfg)?;
    cfg.check_players(inputs.visual.len(), inputs.question.len())?;

    let (visual, visual_merge) = merge_one(&inputs.visual, inputs.kernel.as_ref(), cfg.target_v, cfg)?;
    let (question, question_merge) = merge_one(&inputs.question, None, cfg.target_q, cfg)?;

    let revenue = TernaryRevenueConfig {
        similarity: cfg.similarity,
        ..TernaryRevenueConfig::default()
    };
    let teacher = teacher_matrix(&visual, &question, &inputs.answer, &inputs.g, &revenue, cfg.method, cfg.estimator, cfg.tau)?;
    let (raw, normalized) = teacher.to_artifacts(cfg.similarity);

    let mut artifact = RunArtifact {
        config: cfg.clone(),
        shapes: Shapes {
            visual: shape(&inputs.visual),
            question: shape(&inputs.question),
            visual_merged: shape(&visual),
            question_merged: shape(&question),
            matrix: Some([teacher.normalized.rows(), teacher.normalized.cols()]),
        },
        merge: MergeInfo {
            visual: visual_merge,
            question: question_merge,
        },
        planted_alignment: inputs.planted,
        teacher: MatrixPair { raw, normalized },
        student: None,
        losses: None,
        answer_logits: None,
        grad_check: None,
    };
    let mut outcome = Outcome::default();

    if cfg.command != CommandKind::Interact {
        let student = student_matrix(&visual, &question, cfg.tau)?;
        let tg = tg_loss_with_grad(&teacher, &student)?;
        if cfg.check_grad {
            let gap = finite_difference_gap(&teacher, &student, &tg.grad, GRAD_CHECK_STEP)?;
            outcome
                .messages
                .push(format!("grad-check: max |analytic - finite difference| = {gap:.3e} (h = {GRAD_CHECK_STEP:e})"));
            artifact.grad_check = Some(GradCheck {
                step: GRAD_CHECK_STEP,
                max_abs_diff: gap,
            });
        }
        let l_vqa = match (&cfg.head, cfg.label) {
            (Some(source), Some(label)) => {
                let head = match source {
                    HeadSource::Seeded { num_answers } => AnswerHead::seeded(visual.dim(), question.dim(), *num_answers, cfg.seed)?,
                    HeadSource::File { path } => load_json::<AnswerHead>(path)?,
                };
                let logits = answer_forward(&visual, &question, &head)?;
                let ce = cross_entropy(&logits, label)?;
                artifact.answer_logits = Some(logits);
                ce
            }
            _ => 0.0,
        };
        let (logits, normalized) = student.to_artifacts();
        artifact.student = Some(MatrixPair { raw: logits, normalized });
        artifact.losses = Some(total_loss(l_vqa, tg, cfg.alpha)?);
    }

    write_json_atomic(&cfg.out, &artifact)?;
    outcome.written.push(cfg.out.clone());
    Ok(outcome)
}

fn run_merge(cfg: &RunConfig) -> Result<Outcome> {
    let inp = &cfg.inputs;
    let (modality, path, target) = match (&inp.video, &inp.question) {
        (Some(p), None) => ("visual", p, cfg.target_v),
        (None, Some(p)) => ("question", p, cfg.target_q),
        _ => return Err(Error::Config("merge takes exactly one of --video or --question".into())),
    };
    let tokens = load_embeddings(path)?;
    cfg.check_players(
        if modality == "visual" { tokens.len() } else { 0 },
        if modality == "question" { tokens.len() } else { 0 },
    )?;
    let kernel = match (modality, &inp.kernel) {
        ("visual", Some(k)) => Some(load_kernel(k)?),
        _ => None,
    };
    let (merged, summary) = merge_one(&tokens, kernel.as_ref(), target, cfg)?;
    let artifact = MergeArtifact {
        dim: merged.dim(),
        tokens: merged.to_rows(),
        config: cfg.clone(),
        modality,
        merge: summary.expect("merge always has a target"),
    };
    write_json_atomic(&cfg.out, &artifact)?;
    Ok(Outcome {
        written: vec![cfg.out.clone()],
        messages: Vec::new(),
    })
}

pub const SYNTH_FILES: [&str; 4] = ["visual.json", "question.json", "answer.json", "g.json"];
pub const SYNTH_MANIFEST: &str = "synth.json";

fn run_synth(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.synth.as_ref().ok_or_else(|| Error::Config("synth needs synthetic settings".into()))?;
    let data = synth_generate(spec)?;
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let [v, q, a, g] = SYNTH_FILES.map(|f| dir.join(f));
    save_embeddings(&v, &data.visual)?;
    save_embeddings(&q, &data.question)?;
    save_answer(&a, &data.answer)?;
    write_json_atomic(&g, data.g.linear())?;
    let manifest = dir.join(SYNTH_MANIFEST);
    write_json_atomic(
        &manifest,
        &SynthManifest {
            config: cfg.clone(),
            files: SYNTH_FILES,
            alignment: data.alignment,
        },
    )?;
    Ok(Outcome {
        written: vec![v, q, a, g, manifest],
        messages: Vec::new(),
    })
}
