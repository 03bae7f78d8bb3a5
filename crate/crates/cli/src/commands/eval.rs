use anyhow::{Context, Result};
use rayon::prelude::*;

use eacl_core::confound::{
    estimate_ce, split_train_eval, top_bottom_report, train_classifier, ClassifierConfig,
    GroupComparison,
};
use eacl_core::pipeline::{extract_input, generate_input, run_inference_with, sample_answer, Example};
use eacl_core::sem::derive_fuzz_seed;
use eacl_core::seqmodel::{
    faithfulness_score_checked, train_ngram, verifier_input, Basis, BasisKind, NgramSeq2Seq,
    SequenceModel, SystemKind, SEP_TOKEN,
};
use eacl_core::text::{meteor_lite, perspective, rouge_l, rouge_n, tokenize, TokenSeq};

use crate::{FaithfulnessArgs, MetricsArgs, ModeArg, TrainEvalArgs};

use super::{emit, load_corpus_checked, load_predictions, save_predictions, PredRecord};

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

#[derive(Default)]
struct MetricTotals {
    rouge1: f64,
    rouge2: f64,
    rouge_l: f64,
    meteor: f64,
    perspective_sum: f64,
    perspective_count: usize,
    length: f64,
}

fn accumulate_metrics(
    totals: &mut MetricTotals,
    candidate: &TokenSeq,
    example: &Example,
    use_stems: bool,
) {
    let reference = tokenize(&example.summary);
    totals.rouge1 += rouge_n(candidate, &reference, 1, use_stems).f1;
    totals.rouge2 += rouge_n(candidate, &reference, 2, use_stems).f1;
    totals.rouge_l += rouge_l(candidate, &reference, use_stems).f1;
    totals.meteor += meteor_lite(candidate, &reference);
    totals.length += candidate.len() as f64;
    if let Some(clusters) = &example.cluster_summaries {
        if !clusters.is_empty() {
            let cluster_seqs: Vec<TokenSeq> = clusters.iter().map(|c| tokenize(c)).collect();
            totals.perspective_sum +=
                perspective(candidate, &cluster_seqs, use_stems).expect("nonempty clusters");
            totals.perspective_count += 1;
        }
    }
}

fn metrics_json(totals: &MetricTotals, n: f64) -> serde_json::Value {
    serde_json::json!({
        "rouge1_f1": totals.rouge1 / n,
        "rouge2_f1": totals.rouge2 / n,
        "rouge_l_f1": totals.rouge_l / n,
        "meteor": totals.meteor / n,
        "perspective": if totals.perspective_count > 0 {
            Some(totals.perspective_sum / totals.perspective_count as f64)
        } else {
            None
        },
        "mean_length": totals.length / n,
    })
}

fn metrics_table(totals: &MetricTotals, n: f64) -> String {
    let perspective = if totals.perspective_count > 0 {
        format!("{:.4}", totals.perspective_sum / totals.perspective_count as f64)
    } else {
        "-".to_string()
    };
    format!(
        "rouge-1 f1   : {:.4}\n\
         rouge-2 f1   : {:.4}\n\
         rouge-l f1   : {:.4}\n\
         meteor       : {:.4}\n\
         perspective  : {perspective}\n\
         mean length  : {:.2}",
        totals.rouge1 / n,
        totals.rouge2 / n,
        totals.rouge_l / n,
        totals.meteor / n,
        totals.length / n,
    )
}

pub fn metrics(args: &MetricsArgs, json: bool) -> Result<u8> {
    let corpus = load_corpus_checked(&args.corpus)?;
    let preds = load_predictions(&args.pred)?;
    anyhow::ensure!(
        preds.len() == corpus.len(),
        "{} predictions for {} corpus examples",
        preds.len(),
        corpus.len()
    );
    let use_stems = !args.no_stem;
    let mut totals = MetricTotals::default();
    for (pred, example) in preds.iter().zip(&corpus) {
        accumulate_metrics(&mut totals, &tokenize(&pred.summary), example, use_stems);
    }
    let n = corpus.len() as f64;
    let human = format!(
        "{} predictions vs {}\n{}",
        preds.len(),
        args.corpus.display(),
        metrics_table(&totals, n)
    );
    let value = serde_json::json!({
        "config": {
            "pred": args.pred.display().to_string(),
            "corpus": args.corpus.display().to_string(),
            "stemming": use_stems,
        },
        "examples": corpus.len(),
        "metrics": metrics_json(&totals, n),
    });
    emit(json, &human, value);
    Ok(0)
}

// ---------------------------------------------------------------------------
// train-eval
// ---------------------------------------------------------------------------

fn sep_seq() -> TokenSeq {
    TokenSeq::from_tokens(vec![SEP_TOKEN.to_string()])
}

/// Plain input for non-prefix models: question <sep> content sentences.
fn plain_input(example: &Example, sentences: &[&str]) -> TokenSeq {
    let q = tokenize(&example.question);
    let sep = sep_seq();
    let parts: Vec<TokenSeq> = sentences.iter().map(|s| tokenize(s)).collect();
    let mut refs: Vec<&TokenSeq> = vec![&q, &sep];
    refs.extend(parts.iter());
    TokenSeq::concat(&refs)
}

fn direct_pair(example: &Example) -> (TokenSeq, TokenSeq) {
    (
        plain_input(example, &example.all_sentences()),
        tokenize(&example.summary),
    )
}

fn oracle_pair(example: &Example) -> Result<(TokenSeq, TokenSeq)> {
    let relevant = example.gold_relevant_sentences()?;
    Ok((
        plain_input(example, &relevant),
        tokenize(&example.summary),
    ))
}

/// Multi-task pairs: the generation task over the gold relevant basis plus
/// the extraction task for one sampled answer.
fn sure_pairs(example: &Example, seed: u64) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    let relevant = example.gold_relevant_sentences()?;
    let mut pairs = vec![(
        generate_input(example, &relevant),
        tokenize(&example.summary),
    )];
    let sampled = sample_answer(example, seed)?;
    let answer = &example.answers[sampled];
    let labels = answer.gold_relevance.as_ref().expect("labels checked");
    let target: Vec<&str> = answer
        .sentences
        .iter()
        .zip(labels)
        .filter(|(_, &r)| r)
        .map(|(s, _)| s.as_str())
        .collect();
    let target_parts: Vec<TokenSeq> = target.iter().map(|s| tokenize(s)).collect();
    let target_refs: Vec<&TokenSeq> = target_parts.iter().collect();
    pairs.push((extract_input(example, sampled), TokenSeq::concat(&target_refs)));
    Ok(pairs)
}

fn generate_task_pair(example: &Example) -> Result<(TokenSeq, TokenSeq)> {
    let relevant = example.gold_relevant_sentences()?;
    Ok((
        generate_input(example, &relevant),
        tokenize(&example.summary),
    ))
}

struct ExampleEval {
    log_likelihood: f64,
    summary: TokenSeq,
    basis: Basis,
    rouge1_f1: f64,
}

struct ModeModels {
    /// Extraction-side model, when the mode has one.
    extractor: Option<NgramSeq2Seq>,
    generator: NgramSeq2Seq,
    system: SystemKind,
}

fn train_mode_models(
    mode: ModeArg,
    train: &[&Example],
    args: &TrainEvalArgs,
) -> Result<ModeModels> {
    let labeled = || -> Result<()> {
        anyhow::ensure!(
            train.iter().all(|e| e.has_gold_labels()),
            "mode requires gold relevance labels on every example"
        );
        Ok(())
    };
    match mode {
        ModeArg::Direct => {
            let pairs: Vec<_> = train.iter().map(|e| direct_pair(e)).collect();
            Ok(ModeModels {
                extractor: None,
                generator: train_ngram(&pairs, args.order, args.alpha, args.copy_weight)?,
                system: SystemKind::Direct,
            })
        }
        ModeArg::Oracle => {
            labeled()?;
            let pairs: Vec<_> = train
                .iter()
                .map(|e| oracle_pair(e))
                .collect::<Result<_>>()?;
            Ok(ModeModels {
                extractor: None,
                generator: train_ngram(&pairs, args.order, args.alpha, args.copy_weight)?,
                system: SystemKind::OracleBasis,
            })
        }
        ModeArg::Sure => {
            labeled()?;
            let mut pairs = Vec::new();
            for (i, example) in train.iter().enumerate() {
                pairs.extend(sure_pairs(example, derive_fuzz_seed(args.seed, i as u64))?);
            }
            let model = train_ngram(&pairs, args.order, args.alpha, args.copy_weight)?;
            Ok(ModeModels {
                extractor: Some(model.clone()),
                generator: model,
                system: SystemKind::ExtractGenerate,
            })
        }
        ModeArg::Pipeline => {
            labeled()?;
            let mut ext_pairs = Vec::new();
            for (i, example) in train.iter().enumerate() {
                ext_pairs.extend(sure_pairs(example, derive_fuzz_seed(args.seed, i as u64))?);
            }
            let gen_pairs: Vec<_> = train
                .iter()
                .map(|e| generate_task_pair(e))
                .collect::<Result<_>>()?;
            Ok(ModeModels {
                extractor: Some(train_ngram(&ext_pairs, args.order, args.alpha, args.copy_weight)?),
                generator: train_ngram(&gen_pairs, args.order, args.alpha, args.copy_weight)?,
                system: SystemKind::ExtractGenerate,
            })
        }
    }
}

fn evaluate_example(
    models: &ModeModels,
    example: &Example,
    args: &TrainEvalArgs,
    use_stems: bool,
) -> Result<ExampleEval> {
    let gold = tokenize(&example.summary);
    let (log_likelihood, summary, basis) = match models.system {
        SystemKind::Direct => {
            let (input, target) = direct_pair(example);
            let ll = models.generator.log_prob(&input, &target);
            let summary = models.generator.generate(&input, args.max_len);
            let all = example.all_sentences();
            let basis = Basis {
                kind: BasisKind::FullInput,
                tokens: plain_basis_tokens(&all),
            };
            (ll, summary, basis)
        }
        SystemKind::OracleBasis => {
            let (input, target) = oracle_pair(example)?;
            let ll = models.generator.log_prob(&input, &target);
            let summary = models.generator.generate(&input, args.max_len);
            let relevant = example.gold_relevant_sentences()?;
            let basis = Basis {
                kind: BasisKind::GoldRelevant,
                tokens: plain_basis_tokens(&relevant),
            };
            (ll, summary, basis)
        }
        SystemKind::ExtractGenerate => {
            let extractor = models.extractor.as_ref().expect("extract mode has extractor");
            let result = run_inference_with(
                extractor,
                &models.generator,
                example,
                args.threshold,
                args.max_len,
            );
            let predicted = result.basis_sentences(example);
            let ll = models
                .generator
                .log_prob(&generate_input(example, &predicted), &gold);
            let basis = Basis {
                kind: BasisKind::PredictedRelevant,
                tokens: plain_basis_tokens(&predicted),
            };
            (ll, result.final_summary, basis)
        }
    };
    let rouge1_f1 = rouge_n(&summary, &gold, 1, use_stems).f1;
    Ok(ExampleEval {
        log_likelihood,
        summary,
        basis,
        rouge1_f1,
    })
}

fn plain_basis_tokens(sentences: &[&str]) -> TokenSeq {
    let parts: Vec<TokenSeq> = sentences.iter().map(|s| tokenize(s)).collect();
    let refs: Vec<&TokenSeq> = parts.iter().collect();
    TokenSeq::concat(&refs)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn comparison_json(c: &GroupComparison, scale: f64) -> serde_json::Value {
    serde_json::json!({
        "top_mean": c.top_mean * scale,
        "top_se": c.top_se * scale,
        "bottom_mean": c.bottom_mean * scale,
        "bottom_se": c.bottom_se * scale,
        "t": c.welch.t,
        "df": c.welch.df,
        "p_value": c.welch.p_value,
        "significant_at_05": c.welch.significant_at_05,
    })
}

pub fn train_eval(args: &TrainEvalArgs, json: bool) -> Result<u8> {
    let corpus = load_corpus_checked(&args.corpus)?;
    // --train-frac 1.0 evaluates on the training set itself (memorization
    // smoke tests); anything lower is a held-out split.
    let (train_idx, eval_idx) = if args.train_frac >= 1.0 {
        ((0..corpus.len()).collect(), (0..corpus.len()).collect())
    } else {
        split_train_eval(corpus.len(), args.train_frac, args.split_seed)
    };
    anyhow::ensure!(
        !train_idx.is_empty() && !eval_idx.is_empty(),
        "split left an empty side; adjust --train-frac"
    );
    let train: Vec<&Example> = train_idx.iter().map(|&i| &corpus[i]).collect();
    let eval: Vec<&Example> = eval_idx.iter().map(|&i| &corpus[i]).collect();

    let models = train_mode_models(args.mode, &train, args)?;

    // Oracle-protocol verifier: question <sep> gold relevant -> summary.
    let verifier_pairs: Vec<(TokenSeq, TokenSeq)> = train
        .iter()
        .map(|e| {
            let relevant = e.gold_relevant_sentences().unwrap_or_default();
            (
                verifier_input(&tokenize(&e.question), &plain_basis_tokens(&relevant)),
                tokenize(&e.summary),
            )
        })
        .collect();
    let can_verify = train.iter().all(|e| e.has_gold_labels());
    let verifier = can_verify
        .then(|| train_ngram(&verifier_pairs, args.order, args.alpha, args.copy_weight))
        .transpose()?;

    let evals: Vec<ExampleEval> = eval
        .par_iter()
        .map(|example| evaluate_example(&models, example, args, true))
        .collect::<Result<_>>()?;

    let mut totals = MetricTotals::default();
    for (ev, example) in evals.iter().zip(&eval) {
        accumulate_metrics(&mut totals, &ev.summary, example, true);
    }
    let n = eval.len() as f64;
    let log_liks: Vec<f64> = evals.iter().map(|e| e.log_likelihood).collect();
    let avg_ll = mean(&log_liks);

    let faithfulness = verifier
        .as_ref()
        .map(|verifier| -> Result<(f64, f64)> {
            let scores: Vec<(f64, usize)> = evals
                .par_iter()
                .zip(eval.par_iter())
                .map(|(ev, example)| {
                    let score = faithfulness_score_checked(
                        verifier,
                        &tokenize(&example.question),
                        &ev.basis,
                        models.system,
                        &ev.summary,
                    )?;
                    Ok((score, ev.summary.len() + 1))
                })
                .collect::<Result<_>>()?;
            let raw = scores.iter().map(|(s, _)| s).sum::<f64>() / n;
            let per_token =
                scores.iter().map(|(s, l)| s / *l as f64).sum::<f64>() / n;
            Ok((raw, per_token))
        })
        .transpose()?;

    if let Some(path) = &args.eval_corpus_out {
        let eval_owned: Vec<Example> = eval.iter().map(|&e| e.clone()).collect();
        eacl_core::corpus::save_corpus(path, &eval_owned)?;
    }
    if let Some(path) = &args.pred_out {
        let records: Vec<PredRecord> = evals
            .iter()
            .map(|ev| PredRecord {
                summary: ev.summary.tokens.join(" "),
                system: Some(models.system),
                basis_sentences: Some(
                    // Tokenized basis re-joined; for verbatim sentences use
                    // the corpus side.
                    vec![ev.basis.tokens.tokens.join(" ")],
                ),
            })
            .collect();
        save_predictions(path, &records)?;
    }

    let mode_name = match args.mode {
        ModeArg::Direct => "direct",
        ModeArg::Sure => "sure",
        ModeArg::Oracle => "oracle",
        ModeArg::Pipeline => "pipeline",
    };

    let mut human = format!(
        "mode {mode_name} on {} ({} train / {} eval)\n{}\n\
         avg log-likelihood       : {:.4} nats ({:.2} x100)\n",
        args.corpus.display(),
        train.len(),
        eval.len(),
        metrics_table(&totals, n),
        avg_ll,
        avg_ll * 100.0,
    );
    if let Some((raw, per_token)) = faithfulness {
        human.push_str(&format!(
            "faithfulness             : {:.4} raw ({:.2} x100, {:.4} per token)\n",
            raw,
            raw * 100.0,
            per_token
        ));
    }

    let mut analysis_value = serde_json::Value::Null;
    if args.analyze_ce {
        anyhow::ensure!(
            args.mode == ModeArg::Sure,
            "--analyze-ce compares the multi-task model against the direct baseline; run with --mode sure"
        );
        let direct_models = train_mode_models(ModeArg::Direct, &train, args)?;
        let direct_evals: Vec<ExampleEval> = eval
            .par_iter()
            .map(|example| evaluate_example(&direct_models, example, args, true))
            .collect::<Result<_>>()?;

        let train_owned: Vec<Example> = train.iter().map(|&e| e.clone()).collect();
        let eval_owned: Vec<Example> = eval.iter().map(|&e| e.clone()).collect();
        let config = ClassifierConfig {
            seed: args.seed,
            ..ClassifierConfig::default()
        };
        let c1 = train_classifier(&train_owned, false, &config)?;
        let c2 = train_classifier(&train_owned, true, &config)?;
        let estimate = estimate_ce(&c1, &c2, &eval_owned)?;

        let loglik_deltas: Vec<f64> = evals
            .iter()
            .zip(&direct_evals)
            .map(|(a, b)| a.log_likelihood - b.log_likelihood)
            .collect();
        let rouge_deltas: Vec<f64> = evals
            .iter()
            .zip(&direct_evals)
            .map(|(a, b)| a.rouge1_f1 - b.rouge1_f1)
            .collect();
        let report = top_bottom_report(&estimate.per_example, &loglik_deltas, &rouge_deltas, args.k)?;

        human.push_str(&format!(
            "top/bottom-{} by estimated confounding (vs direct baseline):\n\
             log-likelihood delta x100: top {:.2} +/- {:.2}, bottom {:.2} +/- {:.2}, t = {:.3} ({})\n\
             rouge-1 delta            : top {:.4} +/- {:.4}, bottom {:.4} +/- {:.4}, t = {:.3} ({})\n",
            report.k,
            report.loglik.top_mean * 100.0,
            report.loglik.top_se * 100.0,
            report.loglik.bottom_mean * 100.0,
            report.loglik.bottom_se * 100.0,
            report.loglik.welch.t,
            if report.loglik.welch.significant_at_05 { "significant" } else { "not significant" },
            report.rouge.top_mean,
            report.rouge.top_se,
            report.rouge.bottom_mean,
            report.rouge.bottom_se,
            report.rouge.welch.t,
            if report.rouge.welch.significant_at_05 { "significant" } else { "not significant" },
        ));
        analysis_value = serde_json::json!({
            "k": report.k,
            "loglik_delta_x100": comparison_json(&report.loglik, 100.0),
            "loglik_delta_raw": comparison_json(&report.loglik, 1.0),
            "rouge1_delta": comparison_json(&report.rouge, 1.0),
        });
    }
    human.pop();

    let value = serde_json::json!({
        "config": {
            "corpus": args.corpus.display().to_string(),
            "mode": mode_name,
            "seed": args.seed,
            "split_seed": args.split_seed,
            "train_frac": args.train_frac,
            "order": args.order,
            "alpha": args.alpha,
            "copy_weight": args.copy_weight,
            "threshold": args.threshold,
            "max_len": args.max_len,
        },
        "train_examples": train.len(),
        "eval_examples": eval.len(),
        "metrics": metrics_json(&totals, n),
        "avg_log_likelihood": avg_ll,
        "avg_log_likelihood_x100": avg_ll * 100.0,
        "faithfulness": faithfulness.map(|(raw, per_token)| serde_json::json!({
            "raw": raw,
            "x100": raw * 100.0,
            "per_token": per_token,
        })),
        "analysis": analysis_value,
    });
    emit(json, &human, value);
    Ok(0)
}

// ---------------------------------------------------------------------------
// score-faithfulness
// ---------------------------------------------------------------------------

pub fn score_faithfulness(args: &FaithfulnessArgs, json: bool) -> Result<u8> {
    let corpus = load_corpus_checked(&args.corpus)?;
    let preds = load_predictions(&args.pred)?;
    anyhow::ensure!(
        preds.len() == corpus.len(),
        "{} predictions for {} corpus examples",
        preds.len(),
        corpus.len()
    );
    let verifier_train: Vec<Example> = match &args.train_corpus {
        Some(path) => load_corpus_checked(path)?,
        None => {
            let (train_idx, _) =
                split_train_eval(corpus.len(), args.train_frac, args.split_seed);
            train_idx.iter().map(|&i| corpus[i].clone()).collect()
        }
    };
    anyhow::ensure!(!verifier_train.is_empty(), "empty verifier training corpus");
    let verifier_pairs: Vec<(TokenSeq, TokenSeq)> = verifier_train
        .iter()
        .map(|e| -> Result<(TokenSeq, TokenSeq)> {
            let relevant = e
                .gold_relevant_sentences()
                .context("verifier training needs gold labels")?;
            Ok((
                verifier_input(&tokenize(&e.question), &plain_basis_tokens(&relevant)),
                tokenize(&e.summary),
            ))
        })
        .collect::<Result<_>>()?;
    let verifier = train_ngram(&verifier_pairs, args.order, args.alpha, args.copy_weight)?;

    let scores: Vec<f64> = preds
        .iter()
        .zip(&corpus)
        .enumerate()
        .map(|(i, (pred, example))| -> Result<f64> {
            let system = pred
                .system
                .ok_or_else(|| anyhow::anyhow!("prediction {}: missing `system`", i + 1))?;
            let basis_tokens = match system {
                SystemKind::Direct => {
                    let all = example.all_sentences();
                    plain_basis_tokens(&all)
                }
                SystemKind::OracleBasis => {
                    let relevant = example.gold_relevant_sentences()?;
                    plain_basis_tokens(&relevant)
                }
                SystemKind::ExtractGenerate => {
                    let sentences = pred.basis_sentences.as_ref().ok_or_else(|| {
                        anyhow::anyhow!(
                            "prediction {}: extract-and-generate systems must carry `basis_sentences`",
                            i + 1
                        )
                    })?;
                    let refs: Vec<&str> = sentences.iter().map(|s| s.as_str()).collect();
                    plain_basis_tokens(&refs)
                }
            };
            let basis = Basis {
                kind: system.required_basis(),
                tokens: basis_tokens,
            };
            Ok(faithfulness_score_checked(
                &verifier,
                &tokenize(&example.question),
                &basis,
                system,
                &tokenize(&pred.summary),
            )?)
        })
        .collect::<Result<_>>()?;

    let avg = mean(&scores);
    let human = format!(
        "faithfulness of {} against {} ({} examples)\n\
         mean score: {:.4} raw ({:.2} x100)",
        args.pred.display(),
        args.corpus.display(),
        scores.len(),
        avg,
        avg * 100.0,
    );
    let value = serde_json::json!({
        "config": {
            "corpus": args.corpus.display().to_string(),
            "pred": args.pred.display().to_string(),
            "split_seed": args.split_seed,
            "train_frac": args.train_frac,
            "order": args.order,
            "alpha": args.alpha,
            "copy_weight": args.copy_weight,
        },
        "examples": scores.len(),
        "mean": avg,
        "mean_x100": avg * 100.0,
        "per_example": scores,
    });
    emit(json, &human, value);
    Ok(0)
}
