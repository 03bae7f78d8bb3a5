mod ce;
mod corpus_cmd;
mod eval;
mod verify;

pub use ce::{ce_estimate, ce_exact};
pub use corpus_cmd::{distant_label_cmd, synth_corpus};
pub use eval::{metrics, score_faithfulness, train_eval};
pub use verify::verify_theorems;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use std::path::Path;

use eacl_core::pipeline::Example;
use eacl_core::sem::{example_sem, load_sem, ExampleKind, Sem, SentenceMode};
use eacl_core::seqmodel::SystemKind;

use crate::{ExampleKindArg, ModelSource};

impl ExampleKindArg {
    fn kind(self) -> ExampleKind {
        match self {
            ExampleKindArg::AllRelevant => ExampleKind::AllRelevant,
            ExampleKindArg::FirstOnly => ExampleKind::FirstOnly,
            ExampleKindArg::UniformPick => ExampleKind::UniformPick,
        }
    }
}

/// Build the model a subcommand should operate on.
pub(crate) fn resolve_model(source: &ModelSource) -> Result<(Sem, serde_json::Value)> {
    if let Some(path) = &source.sem {
        let sem = load_sem(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok((sem, serde_json::json!({ "sem": path.display().to_string() })));
    }
    let kind = source
        .example
        .ok_or_else(|| anyhow::anyhow!("either --sem or --example is required"))?
        .kind();
    let vocab = source.vocab.unwrap_or(source.n_sentences);
    let mode = if source.collisions {
        SentenceMode::IidCollisions
    } else {
        SentenceMode::Distinct
    };
    let sem = example_sem(kind, source.n_sentences, vocab, mode)?;
    Ok((
        sem,
        serde_json::json!({
            "example": kind.as_str(),
            "n_sentences": source.n_sentences,
            "vocab": vocab,
            "collisions": source.collisions,
        }),
    ))
}

pub(crate) fn load_corpus_checked(path: &Path) -> Result<Vec<Example>> {
    let corpus = eacl_core::corpus::load_corpus(path)
        .with_context(|| format!("loading {}", path.display()))?;
    anyhow::ensure!(!corpus.is_empty(), "corpus {} is empty", path.display());
    Ok(corpus)
}

/// One prediction record, aligned by line with the corpus it was produced
/// from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PredRecord {
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub system: Option<SystemKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub basis_sentences: Option<Vec<String>>,
}

pub(crate) fn load_predictions(path: &Path) -> Result<Vec<PredRecord>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredRecord = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        records.push(record);
    }
    Ok(records)
}

pub(crate) fn save_predictions(path: &Path, records: &[PredRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Print either the human-readable report or one JSON document carrying the
/// same content plus the resolved configuration.
pub(crate) fn emit(json: bool, human: &str, value: serde_json::Value) {
    if json {
        println!("{}", serde_json::to_string(&value).expect("serializable"));
    } else {
        println!("{human}");
    }
}

/// Two display units for information quantities.
pub(crate) fn in_unit(nats: f64, bits: bool) -> f64 {
    if bits {
        nats / std::f64::consts::LN_2
    } else {
        nats
    }
}

pub(crate) fn unit_name(bits: bool) -> &'static str {
    if bits {
        "bits"
    } else {
        "nats"
    }
}
