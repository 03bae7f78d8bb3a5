//! Tokenization, Porter stemming, sentence segmentation, ROUGE-1/2/L, a
//! WordNet-free METEOR, the Perspective coverage score, and Spearman rank
//! correlation.
//!
//! All operations here are pure.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A tokenized text with a parallel list of Porter stems.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub stems: Vec<String>,
}

impl TokenSeq {
    /// Tokenize raw text: lowercase, split on maximal runs of
    /// non-alphanumeric characters, drop empty tokens, stem each token.
    pub fn from_text(text: &str) -> Self {
        Self::from_tokens(tokenize_raw(text))
    }

    /// Wrap pre-made tokens (e.g. reserved task symbols). Stems are computed
    /// per token; tokens containing non-letters pass through unchanged.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let stems = tokens.iter().map(|t| stem(t)).collect();
        Self { tokens, stems }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The token view metrics should compare on.
    pub fn view(&self, use_stems: bool) -> &[String] {
        if use_stems {
            &self.stems
        } else {
            &self.tokens
        }
    }

    /// Concatenation in argument order.
    pub fn concat(parts: &[&TokenSeq]) -> TokenSeq {
        let mut tokens = Vec::new();
        let mut stems = Vec::new();
        for p in parts {
            tokens.extend_from_slice(&p.tokens);
            stems.extend_from_slice(&p.stems);
        }
        TokenSeq { tokens, stems }
    }
}

fn tokenize_raw(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Convenience wrapper over [`TokenSeq::from_text`].
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq::from_text(text)
}

/// Split text into sentences after `.`, `?`, or `!` followed by whitespace.
/// A trailing fragment without a terminator is kept. The rule is deliberately
/// simple; it oversplits abbreviations like "e.g. ", and corpus files that
/// carry pre-split sentences always take precedence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '?' | '!') && chars.peek().is_some_and(|n| n.is_whitespace()) {
            let s = current.trim();
            if !s.is_empty() {
                sentences.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        sentences.push(s.to_string());
    }
    sentences
}

// ---------------------------------------------------------------------------
// Porter stemmer (Porter 1980). Operates on ascii lowercase words; anything
// containing other characters, and words of length <= 2, pass through.
// ---------------------------------------------------------------------------

/// Porter stem of a lowercase token.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut s = PorterState {
        buf: token.as_bytes().to_vec(),
        end: token.len(),
        j: 0,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    String::from_utf8(s.buf[..s.end].to_vec()).expect("ascii input stays ascii")
}

struct PorterState {
    buf: Vec<u8>,
    /// One past the last live byte.
    end: usize,
    /// Start of the candidate suffix set by `ends`.
    j: usize,
}

impl PorterState {
    fn is_consonant(&self, i: usize) -> bool {
        match self.buf[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// Number of consonant-vowel sequences in buf[0..self.j].
    fn measure(&self) -> usize {
        let mut i = 0;
        let mut m = 0;
        while i < self.j && self.is_consonant(i) {
            i += 1;
        }
        loop {
            while i < self.j && !self.is_consonant(i) {
                i += 1;
            }
            if i >= self.j {
                return m;
            }
            m += 1;
            while i < self.j && self.is_consonant(i) {
                i += 1;
            }
            if i >= self.j {
                return m;
            }
        }
    }

    fn has_vowel(&self) -> bool {
        (0..self.j).any(|i| !self.is_consonant(i))
    }

    fn double_consonant(&self, i: usize) -> bool {
        i >= 1 && self.buf[i] == self.buf[i - 1] && self.is_consonant(i)
    }

    /// consonant-vowel-consonant at positions i-2..=i, where the final
    /// consonant is not w, x, or y.
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.is_consonant(i) || self.is_consonant(i - 1) || !self.is_consonant(i - 2) {
            return false;
        }
        !matches!(self.buf[i], b'w' | b'x' | b'y')
    }

    fn ends(&mut self, suffix: &str) -> bool {
        let s = suffix.as_bytes();
        if s.len() > self.end {
            return false;
        }
        if &self.buf[self.end - s.len()..self.end] == s {
            self.j = self.end - s.len();
            true
        } else {
            false
        }
    }

    fn set_to(&mut self, s: &str) {
        let bytes = s.as_bytes();
        self.buf.truncate(self.j);
        self.buf.extend_from_slice(bytes);
        self.end = self.j + bytes.len();
    }

    fn replace_if_measure(&mut self, s: &str) {
        if self.measure() > 0 {
            self.set_to(s);
        }
    }

    fn step1ab(&mut self) {
        if self.buf[self.end - 1] == b's' {
            if self.ends("sses") {
                self.end -= 2;
            } else if self.ends("ies") {
                self.set_to("i");
            } else if self.end >= 2 && self.buf[self.end - 2] != b's' {
                self.end -= 1;
            }
        }
        let mut cleanup = false;
        if self.ends("eed") {
            if self.measure() > 0 {
                self.end -= 1;
            }
        } else if (self.ends("ed") || self.ends("ing")) && self.has_vowel() {
            self.end = self.j;
            cleanup = true;
        }
        if cleanup {
            if self.ends("at") || self.ends("bl") || self.ends("iz") {
                self.buf.truncate(self.end);
                self.buf.push(b'e');
                self.end += 1;
            } else if self.double_consonant(self.end - 1) {
                if !matches!(self.buf[self.end - 1], b'l' | b's' | b'z') {
                    self.end -= 1;
                }
            } else {
                self.j = self.end;
                if self.measure() == 1 && self.cvc(self.end - 1) {
                    self.buf.truncate(self.end);
                    self.buf.push(b'e');
                    self.end += 1;
                }
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.has_vowel() {
            self.buf[self.end - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        let rules: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        for (suffix, replacement) in rules {
            if self.ends(suffix) {
                self.replace_if_measure(replacement);
                return;
            }
        }
    }

    fn step3(&mut self) {
        let rules: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        for (suffix, replacement) in rules {
            if self.ends(suffix) {
                self.replace_if_measure(replacement);
                return;
            }
        }
    }

    fn step4(&mut self) {
        let suffixes: &[&str] = &[
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent",
            "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        ];
        for suffix in suffixes {
            if self.ends(suffix) {
                if *suffix == "ion" && !(self.j >= 1 && matches!(self.buf[self.j - 1], b's' | b't'))
                {
                    // "ion" only strips after s or t; a failed side condition
                    // ends step 4 just like a failed measure test.
                    return;
                }
                if self.measure() > 1 {
                    self.end = self.j;
                }
                return;
            }
        }
    }

    fn step5(&mut self) {
        self.j = self.end;
        if self.buf[self.end - 1] == b'e' {
            self.j = self.end - 1;
            let m = self.measure();
            if m > 1 || (m == 1 && !self.cvc(self.end - 2)) {
                self.end -= 1;
            }
        }
        self.j = self.end;
        if self.buf[self.end - 1] == b'l' && self.double_consonant(self.end - 1) && self.measure() > 1
        {
            self.end -= 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Overlap metrics
// ---------------------------------------------------------------------------

/// Precision / recall / F1 triple in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Score {
        let precision = if candidate_total == 0 {
            0.0
        } else {
            overlap as f64 / candidate_total as f64
        };
        let recall = if reference_total == 0 {
            0.0
        } else {
            overlap as f64 / reference_total as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// ROUGE-N with clipped n-gram counts.
pub fn rouge_n(candidate: &TokenSeq, reference: &TokenSeq, n: usize, use_stems: bool) -> Score {
    assert!(n >= 1, "n-gram order must be at least 1");
    let cand = candidate.view(use_stems);
    let refr = reference.view(use_stems);
    let cand_counts = ngram_counts(cand, n);
    let ref_counts = ngram_counts(refr, n);
    let overlap: usize = cand_counts
        .iter()
        .map(|(gram, c)| (*c).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let cand_total = cand.len().saturating_sub(n - 1);
    let ref_total = refr.len().saturating_sub(n - 1);
    Score::from_counts(overlap, cand_total, ref_total)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L over the whole sequences (summary-level LCS).
pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq, use_stems: bool) -> Score {
    let cand = candidate.view(use_stems);
    let refr = reference.view(use_stems);
    let lcs = lcs_len(cand, refr);
    Score::from_counts(lcs, cand.len(), refr.len())
}

const METEOR_ALPHA: f64 = 0.9;
const METEOR_BETA: f64 = 3.0;
const METEOR_GAMMA: f64 = 0.5;

/// Simplified METEOR: unigram alignment by exact match then stem match,
/// leftmost-greedy with a preference for continuing a contiguous run, scored
/// as F_mean * (1 - gamma * (chunks / matches)^beta) with alpha = 0.9 (recall
/// weighted), beta = 3, gamma = 0.5. No synonym matching.
pub fn meteor_lite(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    let nc = candidate.len();
    let nr = reference.len();
    if nc == 0 || nr == 0 {
        return 0.0;
    }
    // aligned[ci] = reference position, filled in two stages.
    let mut aligned: Vec<Option<usize>> = vec![None; nc];
    let mut used = vec![false; nr];
    for exact in [true, false] {
        for ci in 0..nc {
            if aligned[ci].is_some() {
                continue;
            }
            let matches = |rj: usize| {
                if exact {
                    candidate.tokens[ci] == reference.tokens[rj]
                } else {
                    candidate.stems[ci] == reference.stems[rj]
                }
            };
            // Continue the previous run when possible, else take the
            // leftmost unused match.
            let continuation = ci
                .checked_sub(1)
                .and_then(|p| aligned[p])
                .map(|rj| rj + 1)
                .filter(|&rj| rj < nr && !used[rj] && matches(rj));
            let choice = continuation.or_else(|| (0..nr).find(|&rj| !used[rj] && matches(rj)));
            if let Some(rj) = choice {
                aligned[ci] = Some(rj);
                used[rj] = true;
            }
        }
    }
    let pairs: Vec<(usize, usize)> = aligned
        .iter()
        .enumerate()
        .filter_map(|(ci, rj)| rj.map(|rj| (ci, rj)))
        .collect();
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let mut chunks = 1usize;
    for w in pairs.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }
    let p = m as f64 / nc as f64;
    let r = m as f64 / nr as f64;
    let f_mean = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let penalty = METEOR_GAMMA * (chunks as f64 / m as f64).powf(METEOR_BETA);
    f_mean * (1.0 - penalty)
}

/// Perspective score: mean ROUGE-1 recall of the candidate against each
/// cluster summary. Recall-based, so it is monotone nondecreasing as tokens
/// are appended to the candidate.
pub fn perspective(candidate: &TokenSeq, cluster_summaries: &[TokenSeq], use_stems: bool) -> Result<f64> {
    if cluster_summaries.is_empty() {
        return Err(Error::InvalidArgument(
            "perspective requires at least one cluster summary".into(),
        ));
    }
    let total: f64 = cluster_summaries
        .iter()
        .map(|s| rouge_n(candidate, s, 1, use_stems).recall)
        .sum();
    Ok(total / cluster_summaries.len() as f64)
}

/// Average ranks with mean ranks for ties.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("no NaN in rank data"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // 1-based ranks, ties share the mean rank of the block.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-ranked data.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "spearman inputs have lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman requires at least two observations".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::InvalidArgument(
            "spearman is undefined for a constant input vector".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}
