//! The sequence-model contract shared by every learned component, a smoothed
//! n-gram/copy reference model trainable at desk scale, and faithfulness
//! scoring.
//!
//! The reference model factors each output token as a mixture of an
//! order-(m-1) target-side n-gram distribution and a copy distribution over
//! the input bag, both additively smoothed over the training vocabulary plus
//! an end-of-sequence symbol. Per-step distributions normalize to 1, so the
//! model assigns a proper probability to every finite output sequence.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenSeq;

/// End-of-sequence symbol. Part of every scored sequence.
pub const EOS_TOKEN: &str = "</s>";

/// Context padding symbol; never a real token.
pub const BOS_TOKEN: &str = "<s>";

/// Conditional distribution over output token sequences given an input
/// sequence, plus greedy generation. Implementations must be deterministic:
/// the same (input, output) pair always scores identically.
pub trait SequenceModel {
    /// Sorted output vocabulary, including [`EOS_TOKEN`].
    fn vocab(&self) -> &[String];

    /// ln p(next | input, prefix). `next` may be [`EOS_TOKEN`]; tokens
    /// outside the vocabulary are scored through smoothing, never an error.
    fn step_log_prob(&self, input: &TokenSeq, prefix: &[String], next: &str) -> f64;

    /// ln p(output, EOS | input): the chain over output tokens plus the
    /// terminal EOS step.
    fn log_prob(&self, input: &TokenSeq, output: &TokenSeq) -> f64 {
        let mut total = 0.0;
        for (t, token) in output.tokens.iter().enumerate() {
            total += self.step_log_prob(input, &output.tokens[..t], token);
        }
        total + self.step_log_prob(input, &output.tokens, EOS_TOKEN)
    }

    /// Greedy decoding: the argmax token at each step, ties broken by
    /// lexicographic token order; stops at EOS or `max_len`.
    fn generate(&self, input: &TokenSeq, max_len: usize) -> TokenSeq {
        let mut out: Vec<String> = Vec::new();
        for _ in 0..max_len {
            let mut best: Option<(&str, f64)> = None;
            for token in self.vocab() {
                let lp = self.step_log_prob(input, &out, token);
                // Strictly-greater keeps the lexicographically smallest of a
                // tie because the vocabulary is sorted.
                if best.is_none_or(|(_, b)| lp > b) {
                    best = Some((token, lp));
                }
            }
            match best {
                Some((token, _)) if token != EOS_TOKEN => out.push(token.to_string()),
                _ => break,
            }
        }
        TokenSeq::from_tokens(out)
    }
}

/// Free-function alias for the trait's sequence score.
pub fn log_likelihood(model: &dyn SequenceModel, input: &TokenSeq, output: &TokenSeq) -> f64 {
    model.log_prob(input, output)
}

// ---------------------------------------------------------------------------
// Smoothed n-gram + copy model
// ---------------------------------------------------------------------------

const BOS_ID: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ContextRow {
    counts: BTreeMap<usize, u64>,
    total: u64,
}

/// The desk-scale stand-in for a large pretrained generator.
///
/// p(y_t | history, input) =
///   (1 - copy_weight) * p_ngram(y_t | last order-1 target tokens)
///   + copy_weight * p_copy(y_t | input bag),
///
/// where p_copy is the add-alpha relative frequency of output-vocabulary
/// tokens in the input, and the n-gram context is seeded with the first
/// input token so task prefixes select their own target statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramSeq2Seq {
    order: usize,
    alpha: f64,
    copy_weight: f64,
    vocab: Vec<String>,
    vocab_index: BTreeMap<String, usize>,
    contexts: BTreeMap<Vec<i64>, ContextRow>,
    /// Tokens observed on the output side of training pairs; only these are
    /// copyable from the input.
    output_vocab: BTreeSet<usize>,
    eos_id: usize,
}

/// Train the reference model on (input, output) pairs.
pub fn train_ngram(
    pairs: &[(TokenSeq, TokenSeq)],
    order: usize,
    alpha: f64,
    copy_weight: f64,
) -> Result<NgramSeq2Seq> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "training requires at least one pair".into(),
        ));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    if !(0.0..=1.0).contains(&copy_weight) {
        return Err(Error::InvalidArgument(
            "copy_weight must lie in [0, 1]".into(),
        ));
    }

    let mut vocab_set: BTreeSet<String> = BTreeSet::new();
    for (input, output) in pairs {
        vocab_set.extend(input.tokens.iter().cloned());
        vocab_set.extend(output.tokens.iter().cloned());
    }
    vocab_set.insert(EOS_TOKEN.to_string());
    let vocab: Vec<String> = vocab_set.into_iter().collect();
    let vocab_index: BTreeMap<String, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    let eos_id = vocab_index[EOS_TOKEN];

    let mut model = NgramSeq2Seq {
        order,
        alpha,
        copy_weight,
        vocab,
        vocab_index,
        contexts: BTreeMap::new(),
        output_vocab: BTreeSet::new(),
        eos_id,
    };

    for (input, output) in pairs {
        let mut history = model.seed_history(input);
        for token in output.tokens.iter() {
            let id = model.vocab_index[token];
            model.output_vocab.insert(id);
            model.count(&history, id);
            push_history(&mut history, id as i64, order);
        }
        model.count(&history, eos_id);
    }
    model.output_vocab.insert(eos_id);
    Ok(model)
}

fn push_history(history: &mut Vec<i64>, id: i64, order: usize) {
    if order <= 1 {
        return;
    }
    history.push(id);
    if history.len() > order - 1 {
        history.remove(0);
    }
}

impl NgramSeq2Seq {
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn copy_weight(&self) -> f64 {
        self.copy_weight
    }

    /// Initial n-gram context: BOS padding with the final slot holding the
    /// first input token when there is one, so different leading task
    /// prefixes keep separate first-token statistics.
    fn seed_history(&self, input: &TokenSeq) -> Vec<i64> {
        if self.order <= 1 {
            return Vec::new();
        }
        let mut history = vec![BOS_ID; self.order - 1];
        if let Some(first) = input.tokens.first() {
            if let Some(&id) = self.vocab_index.get(first) {
                *history.last_mut().expect("order >= 2") = id as i64;
            }
        }
        history
    }

    fn count(&mut self, context: &[i64], token: usize) {
        let row = self
            .contexts
            .entry(context.to_vec())
            .or_insert_with(|| ContextRow {
                counts: BTreeMap::new(),
                total: 0,
            });
        *row.counts.entry(token).or_insert(0) += 1;
        row.total += 1;
    }

    fn context_for(&self, input: &TokenSeq, prefix: &[String]) -> Vec<i64> {
        let mut history = self.seed_history(input);
        for token in prefix {
            let id = self
                .vocab_index
                .get(token)
                .map(|&i| i as i64)
                .unwrap_or(BOS_ID);
            push_history(&mut history, id, self.order);
        }
        history
    }

    /// Copy counts restricted to the output vocabulary, plus the bag size.
    fn copy_bag(&self, input: &TokenSeq) -> (BTreeMap<usize, u64>, u64) {
        let mut bag: BTreeMap<usize, u64> = BTreeMap::new();
        let mut size = 0u64;
        for token in &input.tokens {
            if let Some(&id) = self.vocab_index.get(token) {
                if self.output_vocab.contains(&id) {
                    *bag.entry(id).or_insert(0) += 1;
                    size += 1;
                }
            }
        }
        (bag, size)
    }

    fn step_prob_with(
        &self,
        context: &[i64],
        bag: &BTreeMap<usize, u64>,
        bag_size: u64,
        next: &str,
    ) -> f64 {
        let v = self.vocab.len() as f64;
        let id = self.vocab_index.get(next);
        let ngram_count = self
            .contexts
            .get(context)
            .map(|row| {
                let c = id
                    .and_then(|i| row.counts.get(i))
                    .copied()
                    .unwrap_or(0);
                (c, row.total)
            })
            .unwrap_or((0, 0));
        let p_ngram =
            (ngram_count.0 as f64 + self.alpha) / (ngram_count.1 as f64 + self.alpha * v);
        let copy_count = id.and_then(|i| bag.get(i)).copied().unwrap_or(0);
        let p_copy = (copy_count as f64 + self.alpha) / (bag_size as f64 + self.alpha * v);
        (1.0 - self.copy_weight) * p_ngram + self.copy_weight * p_copy
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&ModelFile::from(self))?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<NgramSeq2Seq> {
        let file: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.build()
    }
}

impl SequenceModel for NgramSeq2Seq {
    fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn step_log_prob(&self, input: &TokenSeq, prefix: &[String], next: &str) -> f64 {
        let context = self.context_for(input, prefix);
        let (bag, bag_size) = self.copy_bag(input);
        self.step_prob_with(&context, &bag, bag_size, next).ln()
    }

    fn log_prob(&self, input: &TokenSeq, output: &TokenSeq) -> f64 {
        let (bag, bag_size) = self.copy_bag(input);
        let mut history = self.seed_history(input);
        let mut total = 0.0;
        for token in &output.tokens {
            total += self.step_prob_with(&history, &bag, bag_size, token).ln();
            let id = self
                .vocab_index
                .get(token)
                .map(|&i| i as i64)
                .unwrap_or(BOS_ID);
            push_history(&mut history, id, self.order);
        }
        total + self.step_prob_with(&history, &bag, bag_size, EOS_TOKEN).ln()
    }

    fn generate(&self, input: &TokenSeq, max_len: usize) -> TokenSeq {
        let (bag, bag_size) = self.copy_bag(input);
        let mut history = self.seed_history(input);
        let mut out: Vec<String> = Vec::new();
        for _ in 0..max_len {
            let mut best: Option<(usize, f64)> = None;
            for (id, _) in self.vocab.iter().enumerate() {
                let p = self.step_prob_with(&history, &bag, bag_size, &self.vocab[id]);
                if best.is_none_or(|(_, b)| p > b) {
                    best = Some((id, p));
                }
            }
            let (id, _) = best.expect("vocabulary is never empty");
            if id == self.eos_id {
                break;
            }
            out.push(self.vocab[id].clone());
            push_history(&mut history, id as i64, self.order);
        }
        TokenSeq::from_tokens(out)
    }
}

/// Context plus its sorted (token, count) row.
type ContextDump = (Vec<i64>, Vec<(usize, u64)>);

/// Versioned on-disk dump of the count tables.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    order: usize,
    alpha: f64,
    copy_weight: f64,
    vocab: Vec<String>,
    contexts: Vec<ContextDump>,
    output_vocab: Vec<usize>,
}

impl From<&NgramSeq2Seq> for ModelFile {
    fn from(m: &NgramSeq2Seq) -> Self {
        ModelFile {
            version: 1,
            order: m.order,
            alpha: m.alpha,
            copy_weight: m.copy_weight,
            vocab: m.vocab.clone(),
            contexts: m
                .contexts
                .iter()
                .map(|(ctx, row)| {
                    (
                        ctx.clone(),
                        row.counts.iter().map(|(&t, &c)| (t, c)).collect(),
                    )
                })
                .collect(),
            output_vocab: m.output_vocab.iter().copied().collect(),
        }
    }
}

impl ModelFile {
    fn build(self) -> Result<NgramSeq2Seq> {
        if self.version != 1 {
            return Err(Error::InvalidArgument(format!(
                "unsupported model file version {}",
                self.version
            )));
        }
        let vocab_index: BTreeMap<String, usize> = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let eos_id = *vocab_index
            .get(EOS_TOKEN)
            .ok_or_else(|| Error::InvalidArgument("model file lacks EOS token".into()))?;
        Ok(NgramSeq2Seq {
            order: self.order,
            alpha: self.alpha,
            copy_weight: self.copy_weight,
            vocab: self.vocab,
            vocab_index,
            contexts: self
                .contexts
                .into_iter()
                .map(|(ctx, counts)| {
                    let total = counts.iter().map(|(_, c)| *c).sum();
                    (
                        ctx,
                        ContextRow {
                            counts: counts.into_iter().collect(),
                            total,
                        },
                    )
                })
                .collect(),
            output_vocab: self.output_vocab.into_iter().collect(),
            eos_id,
        })
    }
}

// ---------------------------------------------------------------------------
// Faithfulness
// ---------------------------------------------------------------------------

/// What a summary was actually generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// The whole input document; what a direct model conditions on.
    FullInput,
    /// Relevant sentences predicted by an extractor.
    PredictedRelevant,
    /// Gold-annotated relevant sentences.
    GoldRelevant,
}

/// A scoring basis with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub kind: BasisKind,
    pub tokens: TokenSeq,
}

/// The evaluated system family, which pins the basis its faithfulness score
/// must use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Direct,
    ExtractGenerate,
    OracleBasis,
}

impl SystemKind {
    pub fn required_basis(&self) -> BasisKind {
        match self {
            SystemKind::Direct => BasisKind::FullInput,
            SystemKind::ExtractGenerate => BasisKind::PredictedRelevant,
            SystemKind::OracleBasis => BasisKind::GoldRelevant,
        }
    }
}

/// Separator between the question and the basis in verifier inputs; the same
/// reserved symbol the pipeline uses.
pub const SEP_TOKEN: &str = "<sep>";

/// Input composition shared by verifier training and scoring.
pub fn verifier_input(question: &TokenSeq, basis: &TokenSeq) -> TokenSeq {
    let sep = TokenSeq::from_tokens(vec![SEP_TOKEN.to_string()]);
    TokenSeq::concat(&[question, &sep, basis])
}

/// Faithfulness of a summary: its log-likelihood under a verifier trained on
/// (question + gold relevant sentences -> summary) pairs, evaluated against
/// the basis the summary was actually generated from.
pub fn faithfulness_score(
    verifier: &dyn SequenceModel,
    question: &TokenSeq,
    basis: &TokenSeq,
    summary: &TokenSeq,
) -> f64 {
    verifier.log_prob(&verifier_input(question, basis), summary)
}

/// Typed entry point: rejects a basis whose provenance does not match the
/// evaluated system (an extract-and-generate system must be scored against
/// its predicted relevant sentences, a direct system against the full input).
pub fn faithfulness_score_checked(
    verifier: &dyn SequenceModel,
    question: &TokenSeq,
    basis: &Basis,
    system: SystemKind,
    summary: &TokenSeq,
) -> Result<f64> {
    let required = system.required_basis();
    if basis.kind != required {
        return Err(Error::BasisMismatch(format!(
            "{system:?} must be scored against {required:?}, got {:?}",
            basis.kind
        )));
    }
    Ok(faithfulness_score(verifier, question, &basis.tokens, summary))
}
