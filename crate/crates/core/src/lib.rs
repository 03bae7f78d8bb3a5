//! Exact information-theoretic analysis of confounding in extract-and-generate
//! summarization, plus the statistical machinery to estimate the same
//! quantities from text corpora.
//!
//! The crate is organized around a small causal engine and a text-side
//! toolkit:
//!
//! - [`info`]: dense joint distributions over named finite variables with
//!   entropy, conditional entropy, and (conditional) mutual information.
//! - [`sem`]: the four-variable causal model (question, document, extracted
//!   content, summary), interventions, information flow, and the causal
//!   effect of irrelevant sentences computed by two independent routes.
//! - [`text`]: tokenization, Porter stemming, sentence splitting,
//!   ROUGE-1/2/L, a WordNet-free METEOR, the Perspective coverage score, and
//!   Spearman rank correlation.
//! - [`seqmodel`]: the sequence-model contract shared by every learned
//!   component, a smoothed n-gram/copy reference model, and faithfulness
//!   scoring against the basis a system actually used.
//! - [`pipeline`]: extract-and-generate mechanics: prefix-tagged tasks,
//!   extractive post-processing, the multi-task loss, answer sampling,
//!   distant supervision, and end-to-end inference.
//! - [`confound`]: plug-in estimation of the confounding effect from labeled
//!   corpora via paired relevance classifiers, with Welch tests and the
//!   top-k/bottom-k comparison harness.
//! - [`corpus`]: the JSONL corpus schema and deterministic synthesis of text
//!   corpora from a causal model.

pub mod confound;
pub mod corpus;
pub mod error;
pub mod info;
pub mod pipeline;
pub mod sem;
pub mod seqmodel;
pub mod text;

pub use confound::{CeEstimate, RelevanceClassifier, SelectionContext, WelchTTest};
pub use corpus::Verbalizer;
pub use error::{Error, Result};
pub use info::JointDistribution;
pub use pipeline::{Answer, EaResult, Example};
pub use sem::{CausalReport, ExampleKind, Sem, SemSample, SentenceMode};
pub use seqmodel::{Basis, BasisKind, NgramSeq2Seq, SequenceModel, SystemKind};
pub use text::{Score, TokenSeq};
