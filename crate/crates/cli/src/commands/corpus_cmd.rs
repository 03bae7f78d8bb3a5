use anyhow::Result;

use eacl_core::corpus::{save_corpus, synthesize_corpus, Verbalizer};
use eacl_core::pipeline::{distant_label, overlap_report, OverlapReport, ScoreSide};
use eacl_core::sem::save_sem;

use crate::{DistantArgs, SideArg, SynthArgs};

use super::{emit, load_corpus_checked, resolve_model};

pub fn synth_corpus(args: &SynthArgs, json: bool) -> Result<u8> {
    let (sem, model_desc) = resolve_model(&args.model)?;
    let verbalizer = Verbalizer::default_for(&sem);
    let corpus = synthesize_corpus(&sem, &verbalizer, args.count, args.seed)?;
    save_corpus(&args.out, &corpus)?;
    if let Some(path) = &args.save_sem {
        save_sem(path, &sem)?;
    }
    let human = format!(
        "wrote {} examples to {} (model: {model_desc}, seed {})",
        corpus.len(),
        args.out.display(),
        args.seed
    );
    let value = serde_json::json!({
        "config": { "model": model_desc, "count": args.count, "seed": args.seed },
        "out": args.out.display().to_string(),
        "examples": corpus.len(),
    });
    emit(json, &human, value);
    Ok(0)
}

impl SideArg {
    fn side(self) -> ScoreSide {
        match self {
            SideArg::Precision => ScoreSide::Precision,
            SideArg::Recall => ScoreSide::Recall,
            SideArg::F1 => ScoreSide::F1,
        }
    }
}

pub fn distant_label_cmd(args: &DistantArgs, json: bool) -> Result<u8> {
    let corpus = load_corpus_checked(&args.corpus)?;
    let side = args.side.side();
    let thresholds: Vec<f64> = if args.sweep {
        vec![0.5, 0.6, 0.7, 0.8]
    } else {
        vec![args.threshold]
    };

    let has_gold = corpus.iter().all(|e| e.has_gold_labels());
    let mut rows = Vec::new();
    for &threshold in &thresholds {
        let mut positives = 0usize;
        let mut total = 0usize;
        let mut overlap = OverlapReport::default();
        for example in &corpus {
            let labels = distant_label(example, threshold, side);
            positives += labels.iter().flatten().filter(|&&b| b).count();
            total += labels.iter().map(|l| l.len()).sum::<usize>();
            if has_gold {
                let gold: Vec<Vec<bool>> = example
                    .answers
                    .iter()
                    .map(|a| a.gold_relevance.clone().expect("checked above"))
                    .collect();
                overlap.merge(&overlap_report(&gold, &labels)?);
            }
        }
        rows.push((threshold, positives, total, has_gold.then_some(overlap)));
    }

    if let Some(path) = &args.out {
        let mut out = String::new();
        for example in &corpus {
            let labels = distant_label(example, args.threshold, side);
            out.push_str(&serde_json::to_string(&labels)?);
            out.push('\n');
        }
        std::fs::write(path, out)?;
    }

    let mut human = format!(
        "distant supervision on {} ({} examples, side {:?})\n",
        args.corpus.display(),
        corpus.len(),
        side
    );
    human.push_str("threshold  positives  total");
    if has_gold {
        human.push_str("  tp     fp     fn     tn     precision  recall");
    }
    human.push('\n');
    for (threshold, positives, total, overlap) in &rows {
        human.push_str(&format!("{threshold:<10} {positives:<10} {total:<6}"));
        if let Some(o) = overlap {
            human.push_str(&format!(
                " {:<6} {:<6} {:<6} {:<6} {:<10.4} {:.4}",
                o.true_positives,
                o.false_positives,
                o.false_negatives,
                o.true_negatives,
                o.precision(),
                o.recall()
            ));
        }
        human.push('\n');
    }
    human.pop();

    let value = serde_json::json!({
        "config": {
            "corpus": args.corpus.display().to_string(),
            "threshold": args.threshold,
            "side": format!("{side:?}").to_lowercase(),
            "sweep": args.sweep,
        },
        "rows": rows
            .iter()
            .map(|(threshold, positives, total, overlap)| {
                serde_json::json!({
                    "threshold": threshold,
                    "positives": positives,
                    "total": total,
                    "overlap": overlap.map(|o| serde_json::json!({
                        "tp": o.true_positives,
                        "fp": o.false_positives,
                        "fn": o.false_negatives,
                        "tn": o.true_negatives,
                        "precision": o.precision(),
                        "recall": o.recall(),
                    })),
                })
            })
            .collect::<Vec<_>>(),
    });
    emit(json, &human, value);
    Ok(0)
}
