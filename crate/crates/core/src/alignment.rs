//! Teacher guidance from the ternary game, the student similarity prediction,
//! the KL distillation loss with its gradient, the answer head, and the
//! combined objective.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{interaction_matrix, Estimator, InteractionMatrix, Method, PlayerUniverse};
use crate::matrix::{Linear, Matrix};
use crate::numeric::sigmoid;
use crate::revenue::{build_characteristic_game, cosine_similarity, ProjectionG, TernaryRevenueConfig};
use crate::tokens::{AnswerEmbedding, TokenSet};

pub const DEFAULT_TEMPERATURE: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.5;

// tolerance for accepting a row as a probability distribution
const STOCHASTIC_TOL: f64 = 1e-6;

fn check_temperature(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::config(format!("temperature must be positive and finite, got {tau}")));
    }
    Ok(())
}

/// Row-wise `softmax(m / tau)` with max-subtraction.
pub fn row_softmax(m: &Matrix, tau: f64) -> Result<Matrix> {
    check_temperature(tau)?;
    if !m.is_finite() {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let mut out = m.clone();
    for i in 0..m.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = ((*x - max) / tau).exp();
            total += *x;
        }
        row.iter_mut().for_each(|x| *x /= total);
    }
    Ok(out)
}

/// Teacher: raw interaction matrix plus its row-softmax at `temperature`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceMatrix {
    pub raw: InteractionMatrix,
    pub normalized: Matrix,
    pub temperature: f64,
}

impl GuidanceMatrix {
    pub fn from_raw(raw: InteractionMatrix, temperature: f64) -> Result<Self> {
        let normalized = row_softmax(&raw.values, temperature)?;
        Ok(Self {
            raw,
            normalized,
            temperature,
        })
    }
}

/// Student: pairwise cosine logits between visual and question tokens plus
/// their row-softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentPrediction {
    pub logits: Matrix,
    pub normalized: Matrix,
    pub temperature: f64,
}

impl StudentPrediction {
    pub fn from_logits(logits: Matrix, temperature: f64) -> Result<Self> {
        let normalized = row_softmax(&logits, temperature)?;
        Ok(Self {
            logits,
            normalized,
            temperature,
        })
    }
}

/// Build the ternary game over `visual x question` and normalize its
/// interaction matrix.
#[allow(clippy::too_many_arguments)]
pub fn teacher_matrix(
    visual: &TokenSet,
    question: &TokenSet,
    answer: &AnswerEmbedding,
    g: &ProjectionG,
    cfg: &TernaryRevenueConfig,
    method: Method,
    estimator: Estimator,
    tau: f64,
) -> Result<GuidanceMatrix> {
    check_temperature(tau)?;
    let universe = PlayerUniverse::new(visual.len(), question.len())?;
    if matches!(estimator, Estimator::Exact) && universe.n_players() > crate::game::MAX_EXACT_PLAYERS {
        return Err(Error::Capacity {
            what: "exact interaction",
            limit: crate::game::MAX_EXACT_PLAYERS,
            got: universe.n_players(),
        });
    }
    let game = build_characteristic_game(visual, question, answer, g, cfg)?;
    let raw = interaction_matrix(&game, &universe, method, estimator)?;
    GuidanceMatrix::from_raw(raw, tau)
}

pub fn student_logits(visual: &TokenSet, question: &TokenSet) -> Result<Matrix> {
    if visual.dim() != question.dim() {
        return Err(Error::shape(format!(
            "visual tokens are {}-dim, question tokens {}-dim",
            visual.dim(),
            question.dim()
        )));
    }
    let mut data = Vec::with_capacity(visual.len() * question.len());
    for v in visual.iter() {
        for q in question.iter() {
            data.push(cosine_similarity(v, q)?);
        }
    }
    Matrix::from_vec(visual.len(), question.len(), data)
}

pub fn student_matrix(visual: &TokenSet, question: &TokenSet, tau: f64) -> Result<StudentPrediction> {
    check_temperature(tau)?;
    StudentPrediction::from_logits(student_logits(visual, question)?, tau)
}

fn check_stochastic(m: &Matrix, what: &str) -> Result<()> {
    for (i, row) in m.iter_rows().enumerate() {
        if row.iter().any(|&x| !(0.0..=1.0 + STOCHASTIC_TOL).contains(&x)) {
            return Err(Error::argument(format!("{what} row {i} has an entry outside [0, 1]")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::argument(format!("{what} row {i} sums to {total}")));
        }
    }
    Ok(())
}

/// Mean over rows of `KL(p_i || q_i)`; zero-probability teacher entries
/// contribute nothing.
pub fn kl_divergence(teacher: &Matrix, student: &Matrix) -> Result<f64> {
    if teacher.shape() != student.shape() {
        return Err(Error::shape(format!(
            "teacher is {:?}, student is {:?}",
            teacher.shape(),
            student.shape()
        )));
    }
    if teacher.rows() == 0 {
        return Err(Error::shape("KL divergence of empty matrices"));
    }
    check_stochastic(teacher, "teacher")?;
    check_stochastic(student, "student")?;
    let mut total = 0.0;
    for (i, (p_row, q_row)) in teacher.iter_rows().zip(student.iter_rows()).enumerate() {
        let mut row_kl = 0.0;
        for (j, (&p, &q)) in p_row.iter().zip(q_row).enumerate() {
            if p == 0.0 {
                continue;
            }
            if q == 0.0 {
                return Err(Error::InfiniteDivergence(format!(
                    "student assigns zero mass to ({i}, {j}) where teacher has {p}"
                )));
            }
            row_kl += p * (p / q).ln();
        }
        total += row_kl;
    }
    // rounding can leave a tiny negative value for identical rows
    Ok((total / teacher.rows() as f64).max(0.0))
}

/// Distillation loss and its gradient with respect to the student logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TgLoss {
    pub value: f64,
    pub grad: Matrix,
}

/// `KL(teacher || student)` averaged over rows, with
/// `d/d logit_ij = (q_ij - p_ij) / (tau * rows)`.
pub fn tg_loss_with_grad(teacher: &GuidanceMatrix, student: &StudentPrediction) -> Result<TgLoss> {
    let value = kl_divergence(&teacher.normalized, &student.normalized)?;
    let p = &teacher.normalized;
    let q = &student.normalized;
    let scale = 1.0 / (student.temperature * p.rows() as f64);
    let grad = Matrix::from_fn(p.rows(), p.cols(), |i, j| (q.get(i, j) - p.get(i, j)) * scale);
    Ok(TgLoss { value, grad })
}

/// Gated pooling of each modality followed by a one-hidden-layer ReLU MLP.
///
/// Each token gets weight `sigmoid(gate . token + b)`; the pooled vector is
/// the weighted sum (or the weighted average when `normalize_weights` is set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerHead {
    pub gate_v: Linear,
    pub gate_q: Linear,
    pub hidden: Linear,
    pub output: Linear,
    #[serde(default)]
    pub normalize_weights: bool,
}

impl AnswerHead {
    pub fn new(gate_v: Linear, gate_q: Linear, hidden: Linear, output: Linear) -> Result<Self> {
        let head = Self {
            gate_v,
            gate_q,
            hidden,
            output,
            normalize_weights: false,
        };
        head.validate()?;
        Ok(head)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gate_v.out_dim() != 1 || self.gate_q.out_dim() != 1 {
            return Err(Error::shape("gates must map a token to a single score"));
        }
        let concat = self.gate_v.in_dim() + self.gate_q.in_dim();
        if self.hidden.in_dim() != concat {
            return Err(Error::shape(format!(
                "MLP input width {} does not match concatenated width {concat}",
                self.hidden.in_dim()
            )));
        }
        if self.output.in_dim() != self.hidden.out_dim() {
            return Err(Error::shape("MLP output layer does not match hidden width"));
        }
        if self.output.out_dim() == 0 {
            return Err(Error::shape("answer head needs at least one class"));
        }
        Ok(())
    }

    /// Gaussian init scaled by `1/sqrt(fan_in)`, zero biases, hidden width
    /// equal to the input width.
    pub fn seeded(dim_v: usize, dim_q: usize, num_answers: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |rows: usize, cols: usize| {
            let scale = 1.0 / (cols as f64).sqrt();
            let w = Matrix::from_fn(rows, cols, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            });
            Linear::without_bias(w)
        };
        let width = dim_v + dim_q;
        Self::new(
            layer(1, dim_v)?,
            layer(1, dim_q)?,
            layer(width, width)?,
            layer(num_answers, width)?,
        )
    }

    pub fn num_answers(&self) -> usize {
        self.output.out_dim()
    }
}

fn gated_pool(tokens: &TokenSet, gate: &Linear, normalize: bool) -> Result<Vec<f64>> {
    if tokens.dim() != gate.in_dim() {
        return Err(Error::shape(format!(
            "gate expects {}-dim tokens, got {}",
            gate.in_dim(),
            tokens.dim()
        )));
    }
    let mut pooled = vec![0.0; tokens.dim()];
    let mut weight_sum = 0.0;
    for t in tokens.iter() {
        let w = sigmoid(gate.apply(t)?[0]);
        weight_sum += w;
        for (p, x) in pooled.iter_mut().zip(t) {
            *p += w * x;
        }
    }
    if normalize {
        pooled.iter_mut().for_each(|p| *p /= weight_sum);
    }
    Ok(pooled)
}

/// Answer logits for one (visual, question) instance.
pub fn answer_forward(visual: &TokenSet, question: &TokenSet, head: &AnswerHead) -> Result<Vec<f64>> {
    head.validate()?;
    let mut concat = gated_pool(visual, &head.gate_v, head.normalize_weights)?;
    concat.extend(gated_pool(question, &head.gate_q, head.normalize_weights)?);
    let hidden: Vec<f64> = head.hidden.apply(&concat)?.into_iter().map(|h| h.max(0.0)).collect();
    head.output.apply(&hidden)
}

/// `-ln softmax(logits)[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::argument(format!(
            "label {label} outside {} answer classes",
            logits.len()
        )));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("answer logits".into()));
    }
    // (max - l_label) + ln(1 + sum over the non-max entries), which stays
    // accurate when the label dominates
    let top = logits
        .iter()
        .enumerate()
        .fold(0, |best, (k, &x)| if x > logits[best] { k } else { best });
    let max = logits[top];
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, &x)| (x - max).exp())
        .sum();
    Ok((max - logits[label]) + rest.ln_1p())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_vqa: f64,
    pub l_tg: f64,
    pub alpha: f64,
    pub total: f64,
    pub grad_student_logits: Matrix,
}

/// `l_vqa + alpha * l_tg`, bundled with the distillation gradient.
pub fn total_loss(l_vqa: f64, tg: TgLoss, alpha: f64) -> Result<LossReport> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("alpha must be non-negative, got {alpha}")));
    }
    if !(l_vqa >= 0.0 && l_vqa.is_finite()) {
        return Err(Error::argument(format!("l_vqa must be a finite non-negative loss, got {l_vqa}")));
    }
    Ok(LossReport {
        l_vqa,
        l_tg: tg.value,
        alpha,
        total: l_vqa + alpha * tg.value,
        grad_student_logits: tg.grad,
    })
}

/// Wire format shared by teacher and student matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixArtifact {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
    pub method: String,
    pub temperature: f64,
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<crate::revenue::Similarity>,
}

impl MatrixArtifact {
    pub fn matrix(&self) -> Result<Matrix> {
        let m = Matrix::from_rows(&self.data)?;
        if m.rows() != self.rows || (self.rows > 0 && m.cols() != self.cols) {
            return Err(Error::shape(format!(
                "artifact declares {}x{}, data is {}x{}",
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }

    fn new(m: &Matrix, method: String, temperature: f64, normalized: bool) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.to_rows(),
            method,
            temperature,
            normalized,
            estimator: None,
            similarity: None,
        }
    }
}

impl GuidanceMatrix {
    /// `(raw, normalized)` artifacts, tagged with the revenue similarity.
    pub fn to_artifacts(&self, similarity: crate::revenue::Similarity) -> (MatrixArtifact, MatrixArtifact) {
        let method = self.raw.method.as_str().to_string();
        let mut raw = MatrixArtifact::new(&self.raw.values, method.clone(), self.temperature, false);
        let mut norm = MatrixArtifact::new(&self.normalized, method, self.temperature, true);
        for a in [&mut raw, &mut norm] {
            a.estimator = Some(self.raw.estimator);
            a.similarity = Some(similarity);
        }
        (raw, norm)
    }
}

impl StudentPrediction {
    pub fn to_artifacts(&self) -> (MatrixArtifact, MatrixArtifact) {
        let mut logits = MatrixArtifact::new(&self.logits, "cosine".into(), self.temperature, false);
        let mut norm = MatrixArtifact::new(&self.normalized, "cosine".into(), self.temperature, true);
        for a in [&mut logits, &mut norm] {
            a.similarity = Some(crate::revenue::Similarity::Cosine);
        }
        (logits, norm)
    }
}
