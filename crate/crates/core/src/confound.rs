//! Plug-in estimation of the confounding effect from labeled corpora.
//!
//! Two logistic-regression relevance classifiers over hashed n-gram features
//! estimate the conditional entropies of the extracted content: one sees the
//! sentence and question, the other additionally sees the summary. Their
//! held-out log losses are chained per example in document order (each
//! sentence's features include the count of gold-relevant sentences seen so
//! far), so the per-example loss sum is a chain-rule estimate of the
//! selection entropy rather than a sum of marginal binary entropies. The
//! difference of the two estimates is the plug-in confounding effect.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::Example;
use crate::text::{tokenize, TokenSeq};

/// Fixed seed for feature hashing, recorded in saved classifiers.
pub const HASH_SEED: u64 = 0;

/// Position within the example's flattened sentence stream plus the number
/// of gold-relevant sentences seen before it: the autoregressive context
/// that makes summed per-sentence losses a chain-rule entropy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionContext {
    pub position: usize,
    pub prior_relevant: usize,
}

/// Positions and counts larger than this share one bucket.
const CTX_CAP: usize = 32;

fn fnv1a(seed: u64, data: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in data.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Namespaced raw features before hashing.
fn feature_map(
    sentence: &TokenSeq,
    question: &TokenSeq,
    summary: Option<&TokenSeq>,
    ctx: Option<SelectionContext>,
) -> BTreeMap<String, f64> {
    let mut features: BTreeMap<String, f64> = BTreeMap::new();
    let mut add_grams = |prefix: &str, tokens: &[String]| {
        for t in tokens {
            *features.entry(format!("{prefix}={t}")).or_insert(0.0) += 1.0;
        }
        for w in tokens.windows(2) {
            *features
                .entry(format!("{prefix}2={}_{}", w[0], w[1]))
                .or_insert(0.0) += 1.0;
        }
    };
    add_grams("s", &sentence.tokens);
    add_grams("q", &question.tokens);
    if let Some(summary) = summary {
        add_grams("y", &summary.tokens);
        let sent_set: std::collections::BTreeSet<&String> = sentence.tokens.iter().collect();
        if !sent_set.is_empty() {
            let summ_set: std::collections::BTreeSet<&String> = summary.tokens.iter().collect();
            let covered = sent_set.iter().filter(|t| summ_set.contains(**t)).count();
            features.insert("ov".to_string(), covered as f64 / sent_set.len() as f64);
        }
    }
    if let Some(ctx) = ctx {
        let pos = ctx.position.min(CTX_CAP);
        let prev = ctx.prior_relevant.min(CTX_CAP);
        features.insert(format!("c_pos={pos}"), 1.0);
        features.insert(format!("c_prev={prev}"), 1.0);
        features.insert(format!("c_int={pos}_{prev}"), 1.0);
    }
    features
}

/// Hashed, signed, L2-normalized sparse feature vector. `hash_dim` must be a
/// power of two.
pub fn featurize(
    sentence: &TokenSeq,
    question: &TokenSeq,
    summary: Option<&TokenSeq>,
    ctx: Option<SelectionContext>,
    hash_dim: usize,
) -> Result<Vec<(u32, f64)>> {
    if hash_dim == 0 || !hash_dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "hash_dim must be a power of two, got {hash_dim}"
        )));
    }
    let mut buckets: BTreeMap<u32, f64> = BTreeMap::new();
    for (name, value) in feature_map(sentence, question, summary, ctx) {
        let h = fnv1a(HASH_SEED, &name);
        let bucket = (h & (hash_dim as u64 - 1)) as u32;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        *buckets.entry(bucket).or_insert(0.0) += sign * value;
    }
    let norm: f64 = buckets.values().map(|v| v * v).sum::<f64>().sqrt();
    let mut out: Vec<(u32, f64)> = buckets.into_iter().filter(|(_, v)| *v != 0.0).collect();
    if norm > 0.0 {
        for (_, v) in &mut out {
            *v /= norm;
        }
    }
    Ok(out)
}

/// Binary relevance classifier over hashed features.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hash_dim: usize,
    pub hash_seed: u64,
    pub uses_summary: bool,
}

impl RelevanceClassifier {
    fn logit(&self, features: &[(u32, f64)]) -> f64 {
        self.bias
            + features
                .iter()
                .map(|(i, v)| self.weights[*i as usize] * v)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, features: &[(u32, f64)]) -> f64 {
        sigmoid(self.logit(features))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ClassifierFile {
            version: 1,
            hash_dim: self.hash_dim,
            hash_seed: self.hash_seed,
            uses_summary: self.uses_summary,
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RelevanceClassifier> {
        let file: ClassifierFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.version != 1 {
            return Err(Error::InvalidArgument(format!(
                "unsupported classifier file version {}",
                file.version
            )));
        }
        let mut weights = vec![0.0; file.hash_dim];
        for (i, w) in file.weights {
            weights[i as usize] = w;
        }
        Ok(RelevanceClassifier {
            weights,
            bias: file.bias,
            hash_dim: file.hash_dim,
            hash_seed: file.hash_seed,
            uses_summary: file.uses_summary,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierFile {
    version: u32,
    hash_dim: usize,
    hash_seed: u64,
    uses_summary: bool,
    bias: f64,
    weights: Vec<(u32, f64)>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const PROB_FLOOR: f64 = 1e-12;

fn binary_log_loss(p: f64, label: bool) -> f64 {
    let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub hash_dim: usize,
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            hash_dim: 1 << 18,
            l2: 1e-5,
            epochs: 1500,
            lr: 2.0,
            seed: 0,
        }
    }
}

/// One labeled sentence with its feature vector.
struct TrainPoint {
    features: Vec<(u32, f64)>,
    label: bool,
}

/// Walk an example's sentences in document order, handing each to `visit`
/// with its teacher-forced selection context and gold label.
fn visit_labeled_sentences<F>(example: &Example, mut visit: F) -> Result<()>
where
    F: FnMut(&TokenSeq, SelectionContext, bool) -> Result<()>,
{
    let mut position = 0usize;
    let mut prior_relevant = 0usize;
    for answer in &example.answers {
        let labels = answer
            .gold_relevance
            .as_ref()
            .ok_or_else(|| Error::MissingLabels("confounding estimation".into()))?;
        for (sentence, &label) in answer.sentences.iter().zip(labels) {
            let ctx = SelectionContext {
                position,
                prior_relevant,
            };
            visit(&tokenize(sentence), ctx, label)?;
            position += 1;
            if label {
                prior_relevant += 1;
            }
        }
    }
    Ok(())
}

fn collect_points(
    corpus: &[Example],
    uses_summary: bool,
    hash_dim: usize,
) -> Result<Vec<TrainPoint>> {
    let mut points = Vec::new();
    for example in corpus {
        let question = tokenize(&example.question);
        let summary = tokenize(&example.summary);
        let summary_opt = uses_summary.then_some(&summary);
        visit_labeled_sentences(example, |sentence, ctx, label| {
            points.push(TrainPoint {
                features: featurize(sentence, &question, summary_opt, Some(ctx), hash_dim)?,
                label,
            });
            Ok(())
        })?;
    }
    Ok(points)
}

fn loss_and_grad(
    weights: &[f64],
    bias: f64,
    points: &[TrainPoint],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = points.len() as f64;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_bias = 0.0;
    let mut loss = 0.0;
    for point in points {
        let z = bias
            + point
                .features
                .iter()
                .map(|(i, v)| weights[*i as usize] * v)
                .sum::<f64>();
        let p = sigmoid(z);
        loss += binary_log_loss(p, point.label);
        let err = p - if point.label { 1.0 } else { 0.0 };
        for (i, v) in &point.features {
            grad[*i as usize] += err * v;
        }
        grad_bias += err;
    }
    loss /= n;
    grad_bias /= n;
    let mut reg = 0.0;
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
        reg += w * w;
    }
    (loss + 0.5 * l2 * reg, grad, grad_bias)
}

/// Full-batch gradient descent on mean binary log loss with L2 on the
/// weights (not the bias). Deterministic given the seed, which only sets the
/// tiny symmetric-breaking initialization.
pub fn train_classifier(
    corpus: &[Example],
    uses_summary: bool,
    config: &ClassifierConfig,
) -> Result<RelevanceClassifier> {
    let points = collect_points(corpus, uses_summary, config.hash_dim)?;
    if points.is_empty() {
        return Err(Error::MissingLabels(
            "no labeled sentences to train on".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = vec![0.0; config.hash_dim];
    let mut touched: Vec<u32> = points
        .iter()
        .flat_map(|p| p.features.iter().map(|(i, _)| *i))
        .collect();
    touched.sort_unstable();
    touched.dedup();
    for &i in &touched {
        weights[i as usize] = rng.gen_range(-1e-4..1e-4);
    }
    let mut bias = 0.0;
    // Proximal step for the L2 term: the data gradient is applied first and
    // the ridge shrinkage second, which stays stable for any l2 (the plain
    // combined step diverges once lr * l2 > 2). Same stationary point.
    let shrink = 1.0 / (1.0 + config.lr * config.l2);
    for _ in 0..config.epochs {
        let (_, grad, grad_bias) = loss_and_grad(&weights, bias, &points, 0.0);
        for &i in &touched {
            let w = weights[i as usize];
            weights[i as usize] = (w - config.lr * grad[i as usize]) * shrink;
        }
        bias -= config.lr * grad_bias;
    }
    Ok(RelevanceClassifier {
        weights,
        bias,
        hash_dim: config.hash_dim,
        hash_seed: HASH_SEED,
        uses_summary,
    })
}

/// Plug-in confounding estimate.
///
/// `h1` and `h2` are mean per-example sums of teacher-forced sentence log
/// losses (chain-rule estimates of the selection entropies with and without
/// summary access); `ce` is their difference and equals the mean of
/// `per_example` exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeEstimate {
    pub h1: f64,
    pub h2: f64,
    pub ce: f64,
    pub per_example: Vec<f64>,
}

impl CeEstimate {
    /// Standard error of the mean per-example effect.
    pub fn standard_error(&self) -> f64 {
        let n = self.per_example.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let mean = self.ce;
        let var = self
            .per_example
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Evaluate both classifiers on a held-out corpus.
pub fn estimate_ce(
    c1: &RelevanceClassifier,
    c2: &RelevanceClassifier,
    corpus: &[Example],
) -> Result<CeEstimate> {
    if c1.uses_summary {
        return Err(Error::InvalidArgument(
            "c1 must be the summary-blind classifier".into(),
        ));
    }
    if !c2.uses_summary {
        return Err(Error::InvalidArgument(
            "c2 must be the summary-aware classifier".into(),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation corpus".into()));
    }
    let mut per_example = Vec::with_capacity(corpus.len());
    let mut total1 = 0.0;
    let mut total2 = 0.0;
    for example in corpus {
        let question = tokenize(&example.question);
        let summary = tokenize(&example.summary);
        let mut loss1 = 0.0;
        let mut loss2 = 0.0;
        visit_labeled_sentences(example, |sentence, ctx, label| {
            let f1 = featurize(sentence, &question, None, Some(ctx), c1.hash_dim)?;
            let f2 = featurize(sentence, &question, Some(&summary), Some(ctx), c2.hash_dim)?;
            loss1 += binary_log_loss(c1.predict_proba(&f1), label);
            loss2 += binary_log_loss(c2.predict_proba(&f2), label);
            Ok(())
        })?;
        total1 += loss1;
        total2 += loss2;
        per_example.push(loss1 - loss2);
    }
    let n = corpus.len() as f64;
    let h1 = total1 / n;
    let h2 = total2 / n;
    Ok(CeEstimate {
        h1,
        h2,
        ce: h1 - h2,
        per_example,
    })
}

/// Seeded index split for held-out evaluation.
pub fn split_train_eval(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let cut = ((n as f64) * train_fraction).round() as usize;
    let cut = cut.min(n);
    let eval = indices.split_off(cut);
    (indices, eval)
}

// ---------------------------------------------------------------------------
// Welch tests and the top/bottom comparison
// ---------------------------------------------------------------------------

/// Two-sample Welch t-test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchTTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant_at_05: bool,
}

pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchTTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "welch test needs at least two observations per group".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let var = |xs: &[f64], m: f64| {
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        // Degenerate: both groups constant. Equal means give t = 0 by
        // convention; distinct means are an infinitely significant shift.
        return Ok(if ma == mb {
            WelchTTest {
                t: 0.0,
                df: na + nb - 2.0,
                p_value: 1.0,
                significant_at_05: false,
            }
        } else {
            WelchTTest {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df: na + nb - 2.0,
                p_value: 0.0,
                significant_at_05: true,
            }
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidArgument(format!("bad degrees of freedom: {e}")))?;
    let p_value = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchTTest {
        t,
        df,
        p_value,
        significant_at_05: p_value < 0.05,
    })
}

/// Group statistics for one metric in the top/bottom comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupComparison {
    pub top_mean: f64,
    pub top_se: f64,
    pub bottom_mean: f64,
    pub bottom_se: f64,
    pub welch: WelchTTest,
}

fn group_stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Comparison of metric deltas between the k examples with the highest
/// estimated confounding and the k with the lowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopBottomReport {
    pub k: usize,
    /// Log-likelihood deltas (raw nats; display convention scales by 100).
    pub loglik: GroupComparison,
    pub rouge: GroupComparison,
}

pub fn top_bottom_report(
    per_example_ce: &[f64],
    deltas_loglik: &[f64],
    deltas_rouge: &[f64],
    k: usize,
) -> Result<TopBottomReport> {
    let n = per_example_ce.len();
    if deltas_loglik.len() != n || deltas_rouge.len() != n {
        return Err(Error::ShapeMismatch(
            "per-example series have different lengths".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if 2 * k > n {
        return Err(Error::InvalidArgument(format!(
            "need at least 2k = {} examples, have {n}",
            2 * k
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Descending by estimated effect; ties resolved by index for
    // reproducibility.
    order.sort_by(|&i, &j| {
        per_example_ce[j]
            .partial_cmp(&per_example_ce[i])
            .expect("no NaN in per-example effects")
            .then(i.cmp(&j))
    });
    let top: Vec<usize> = order[..k].to_vec();
    let bottom: Vec<usize> = order[n - k..].to_vec();
    let build = |series: &[f64]| -> Result<GroupComparison> {
        let top_vals: Vec<f64> = top.iter().map(|&i| series[i]).collect();
        let bottom_vals: Vec<f64> = bottom.iter().map(|&i| series[i]).collect();
        let (top_mean, top_se) = group_stats(&top_vals);
        let (bottom_mean, bottom_se) = group_stats(&bottom_vals);
        // Singleton groups carry no variance information; report the group
        // means with a vacuous test rather than refusing to run.
        let welch = if k < 2 {
            WelchTTest {
                t: 0.0,
                df: 0.0,
                p_value: 1.0,
                significant_at_05: false,
            }
        } else {
            welch_t(&top_vals, &bottom_vals)?
        };
        Ok(GroupComparison {
            top_mean,
            top_se,
            bottom_mean,
            bottom_se,
            welch,
        })
    };
    Ok(TopBottomReport {
        k,
        loglik: build(deltas_loglik)?,
        rouge: build(deltas_rouge)?,
    })
}
