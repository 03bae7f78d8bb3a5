//! Extract-and-generate mechanics over any [`SequenceModel`]: prefix-tagged
//! extraction and generation tasks, extractive post-processing, the
//! multi-task training loss, answer sampling, distant-supervision labeling,
//! and end-to-end inference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqmodel::{SequenceModel, SEP_TOKEN};
use crate::text::{rouge_n, tokenize, Score, TokenSeq};

/// Reserved leading token selecting the extraction task.
pub const PREFIX_EXTRACT: &str = "summarize:";
/// Reserved leading token selecting the final-summary task.
pub const PREFIX_GENERATE: &str = "generate:";

/// Default extractive post-processing threshold.
pub const DEFAULT_POSTPROCESS_THRESHOLD: f64 = 0.8;

/// One answer: a list of sentences with optional gold relevance labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Answer {
    pub sentences: Vec<String>,
    #[serde(rename = "relevance", skip_serializing_if = "Option::is_none", default)]
    pub gold_relevance: Option<Vec<bool>>,
}

/// One corpus record: a question, its answers, optional cluster summaries,
/// and the reference summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example {
    pub question: String,
    pub answers: Vec<Answer>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cluster_summaries: Option<Vec<String>>,
    pub summary: String,
}

impl Example {
    pub fn validate(&self) -> Result<()> {
        if self.answers.is_empty() {
            return Err(Error::InvalidArgument(
                "example must have at least one answer".into(),
            ));
        }
        for (i, answer) in self.answers.iter().enumerate() {
            if answer.sentences.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "answer {i} has no sentences"
                )));
            }
            if let Some(labels) = &answer.gold_relevance {
                if labels.len() != answer.sentences.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "answer {i}: {} relevance labels for {} sentences",
                        labels.len(),
                        answer.sentences.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has_gold_labels(&self) -> bool {
        self.answers.iter().all(|a| a.gold_relevance.is_some())
    }

    /// Gold relevant sentences across all answers, in document order.
    pub fn gold_relevant_sentences(&self) -> Result<Vec<&str>> {
        let mut out = Vec::new();
        for answer in &self.answers {
            let labels = answer.gold_relevance.as_ref().ok_or_else(|| {
                Error::MissingLabels("gold relevant sentences requested".into())
            })?;
            for (sentence, &relevant) in answer.sentences.iter().zip(labels) {
                if relevant {
                    out.push(sentence.as_str());
                }
            }
        }
        Ok(out)
    }

    /// All sentences across answers, in document order.
    pub fn all_sentences(&self) -> Vec<&str> {
        self.answers
            .iter()
            .flat_map(|a| a.sentences.iter().map(|s| s.as_str()))
            .collect()
    }
}

/// Output of end-to-end inference on one example.
#[derive(Debug, Clone, PartialEq)]
pub struct EaResult {
    /// Free-form extraction output per answer.
    pub raw_extractions: Vec<TokenSeq>,
    /// Per-answer indices of the sentences selected by post-processing.
    pub postprocessed: Vec<Vec<usize>>,
    pub final_summary: TokenSeq,
}

impl EaResult {
    /// The selected sentences, verbatim, across answers in order.
    pub fn basis_sentences<'a>(&self, example: &'a Example) -> Vec<&'a str> {
        self.postprocessed
            .iter()
            .zip(&example.answers)
            .flat_map(|(indices, answer)| indices.iter().map(|&j| answer.sentences[j].as_str()))
            .collect()
    }
}

fn join_tokens(sentences: &[&str]) -> TokenSeq {
    let parts: Vec<TokenSeq> = sentences.iter().map(|s| tokenize(s)).collect();
    let refs: Vec<&TokenSeq> = parts.iter().collect();
    TokenSeq::concat(&refs)
}

/// `prefix question <sep> content`, the input layout for both tasks.
fn task_input(prefix: &str, question: &TokenSeq, content: &TokenSeq) -> TokenSeq {
    let prefix = TokenSeq::from_tokens(vec![prefix.to_string()]);
    let sep = TokenSeq::from_tokens(vec![SEP_TOKEN.to_string()]);
    TokenSeq::concat(&[&prefix, question, &sep, content])
}

/// Input for the extraction task on one answer.
pub fn extract_input(example: &Example, answer_index: usize) -> TokenSeq {
    let question = tokenize(&example.question);
    let sentences: Vec<&str> = example.answers[answer_index]
        .sentences
        .iter()
        .map(|s| s.as_str())
        .collect();
    task_input(PREFIX_EXTRACT, &question, &join_tokens(&sentences))
}

/// Input for the final-summary task over a selected basis.
pub fn generate_input(example: &Example, basis_sentences: &[&str]) -> TokenSeq {
    let question = tokenize(&example.question);
    task_input(PREFIX_GENERATE, &question, &join_tokens(basis_sentences))
}

/// Map a free-form extraction back onto verbatim sentences: sentence `j` is
/// selected when at least `threshold` of its unigrams appear in the
/// extraction (clipped counts, stemmed). This is the ROUGE-1 precision over
/// the sentence side, so an extraction covering several sentences selects
/// each of them. Order is preserved and the comparison is inclusive.
pub fn extractive_postprocess(raw: &TokenSeq, answer: &Answer, threshold: f64) -> Vec<usize> {
    answer
        .sentences
        .iter()
        .enumerate()
        .filter(|(_, sentence)| {
            rouge_n(&tokenize(sentence), raw, 1, true).precision >= threshold
        })
        .map(|(j, _)| j)
        .collect()
}

/// Draw an answer index with probability proportional to its fraction of
/// relevant sentences. All-zero fractions fall back to the uniform
/// distribution.
pub fn sample_answer(example: &Example, rng_seed: u64) -> Result<usize> {
    let mut weights = Vec::with_capacity(example.answers.len());
    for answer in &example.answers {
        let labels = answer
            .gold_relevance
            .as_ref()
            .ok_or_else(|| Error::MissingLabels("answer sampling".into()))?;
        let relevant = labels.iter().filter(|&&r| r).count() as f64;
        weights.push(relevant / answer.sentences.len() as f64);
    }
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    if total == 0.0 {
        return Ok(rng.gen_range(0..example.answers.len()));
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(example.answers.len() - 1)
}

/// The multi-task training loss on one example: negative log-likelihood of
/// the gold summary given the gold relevant basis under the generate prefix,
/// plus negative log-likelihood of the sampled answer's relevant-sentence
/// concatenation under the extract prefix (a single-sample estimate of the
/// per-answer sum).
pub fn multitask_loss(
    model: &dyn SequenceModel,
    example: &Example,
    sampled_answer: usize,
) -> Result<f64> {
    if sampled_answer >= example.answers.len() {
        return Err(Error::InvalidArgument(format!(
            "answer index {sampled_answer} out of range"
        )));
    }
    let relevant = example.gold_relevant_sentences()?;
    let generate_in = generate_input(example, &relevant);
    let summary = tokenize(&example.summary);
    let generation_loss = -model.log_prob(&generate_in, &summary);

    let answer = &example.answers[sampled_answer];
    let labels = answer
        .gold_relevance
        .as_ref()
        .ok_or_else(|| Error::MissingLabels("multitask loss".into()))?;
    let answer_relevant: Vec<&str> = answer
        .sentences
        .iter()
        .zip(labels)
        .filter(|(_, &r)| r)
        .map(|(s, _)| s.as_str())
        .collect();
    let extract_in = extract_input(example, sampled_answer);
    let extraction_loss = -model.log_prob(&extract_in, &join_tokens(&answer_relevant));

    Ok(generation_loss + extraction_loss)
}

/// End-to-end inference with separate extractor and generator models:
/// extract relevant sentences per answer, post-process onto verbatim
/// sentences, then generate the final summary from the selected basis. An
/// empty selection falls back to conditioning on the question alone.
pub fn run_inference_with(
    extractor: &dyn SequenceModel,
    generator: &dyn SequenceModel,
    example: &Example,
    threshold: f64,
    max_len: usize,
) -> EaResult {
    let mut raw_extractions = Vec::with_capacity(example.answers.len());
    let mut postprocessed = Vec::with_capacity(example.answers.len());
    for (i, answer) in example.answers.iter().enumerate() {
        let raw = extractor.generate(&extract_input(example, i), max_len);
        postprocessed.push(extractive_postprocess(&raw, answer, threshold));
        raw_extractions.push(raw);
    }
    let result = EaResult {
        raw_extractions,
        postprocessed,
        final_summary: TokenSeq::default(),
    };
    let basis = result.basis_sentences(example);
    let final_summary = generator.generate(&generate_input(example, &basis), max_len);
    EaResult {
        final_summary,
        ..result
    }
}

/// Single-model inference: the multi-task model plays both roles.
pub fn run_inference(
    model: &dyn SequenceModel,
    example: &Example,
    threshold: f64,
    max_len: usize,
) -> EaResult {
    run_inference_with(model, model, example, threshold, max_len)
}

/// Which side of the ROUGE score distant supervision thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSide {
    Precision,
    Recall,
    F1,
}

impl ScoreSide {
    pub fn pick(&self, score: &Score) -> f64 {
        match self {
            ScoreSide::Precision => score.precision,
            ScoreSide::Recall => score.recall,
            ScoreSide::F1 => score.f1,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "precision" => Ok(ScoreSide::Precision),
            "recall" => Ok(ScoreSide::Recall),
            "f1" => Ok(ScoreSide::F1),
            other => Err(Error::InvalidArgument(format!(
                "unknown score side `{other}`"
            ))),
        }
    }
}

/// Pseudo-label a sentence relevant when its ROUGE-1 score against the gold
/// summary reaches the threshold. Precision of the sentence is the default
/// side: it rewards sentences whose content appears in the summary.
pub fn distant_label(example: &Example, threshold: f64, side: ScoreSide) -> Vec<Vec<bool>> {
    let summary = tokenize(&example.summary);
    example
        .answers
        .iter()
        .map(|answer| {
            answer
                .sentences
                .iter()
                .map(|sentence| {
                    let score = rouge_n(&tokenize(sentence), &summary, 1, true);
                    side.pick(&score) >= threshold
                })
                .collect()
        })
        .collect()
}

/// Confusion counts between gold and distant labels over all sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OverlapReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl OverlapReport {
    pub fn precision(&self) -> f64 {
        let denom = self.true_positives + self.false_positives;
        if denom == 0 {
            0.0
        } else {
            self.true_positives as f64 / denom as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.true_positives + self.false_negatives;
        if denom == 0 {
            0.0
        } else {
            self.true_positives as f64 / denom as f64
        }
    }

    pub fn merge(&mut self, other: &OverlapReport) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.true_negatives += other.true_negatives;
    }
}

pub fn overlap_report(gold: &[Vec<bool>], distant: &[Vec<bool>]) -> Result<OverlapReport> {
    if gold.len() != distant.len()
        || gold
            .iter()
            .zip(distant)
            .any(|(g, d)| g.len() != d.len())
    {
        return Err(Error::ShapeMismatch(
            "gold and distant label shapes differ".into(),
        ));
    }
    let mut report = OverlapReport::default();
    for (g_list, d_list) in gold.iter().zip(distant) {
        for (&g, &d) in g_list.iter().zip(d_list) {
            match (g, d) {
                (true, true) => report.true_positives += 1,
                (false, true) => report.false_positives += 1,
                (true, false) => report.false_negatives += 1,
                (false, false) => report.true_negatives += 1,
            }
        }
    }
    Ok(report)
}
