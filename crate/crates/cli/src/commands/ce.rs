use anyhow::Result;

use eacl_core::confound::{estimate_ce, split_train_eval, train_classifier, ClassifierConfig};
use eacl_core::pipeline::Example;

use crate::{CeEstimateArgs, CeExactArgs};

use super::{emit, in_unit, load_corpus_checked, resolve_model, unit_name};

pub fn ce_exact(args: &CeExactArgs, json: bool) -> Result<u8> {
    let (sem, model_desc) = resolve_model(&args.model)?;
    let report = sem.causal_effect_irrelevant()?;
    let bits = args.bits;
    let unit = unit_name(bits);

    let human = format!(
        "model: {model_desc}\n\
         flow I({{q,x}} -> y)      : {:>12.9} {unit}\n\
         flow I({{q,x_r}} -> y)    : {:>12.9} {unit}\n\
         effect (flow route)      : {:>12.9} {unit}\n\
         effect (entropy route)   : {:>12.9} {unit}\n\
         l(f) = H(y|q,x)          : {:>12.9} {unit}\n\
         l(g) = H(y|q,x_r)        : {:>12.9} {unit}\n\
         identity residuals       : {:.3e} / {:.3e}",
        in_unit(report.flow_full, bits),
        in_unit(report.flow_relevant, bits),
        in_unit(report.ce_flow, bits),
        in_unit(report.ce_entropy, bits),
        in_unit(report.l_f, bits),
        in_unit(report.l_g, bits),
        report.effect_identity_residual(),
        report.risk_identity_residual(),
    );
    let value = serde_json::json!({
        "config": { "model": model_desc, "unit": unit },
        "flow_full": in_unit(report.flow_full, bits),
        "flow_relevant": in_unit(report.flow_relevant, bits),
        "ce_flow": in_unit(report.ce_flow, bits),
        "ce_entropy": in_unit(report.ce_entropy, bits),
        "l_f": in_unit(report.l_f, bits),
        "l_g": in_unit(report.l_g, bits),
        "residuals": {
            "effect_identity": report.effect_identity_residual(),
            "risk_identity": report.risk_identity_residual(),
        },
    });
    emit(json, &human, value);
    Ok(0)
}

pub fn ce_estimate(args: &CeEstimateArgs, json: bool) -> Result<u8> {
    let corpus = load_corpus_checked(&args.corpus)?;
    anyhow::ensure!(
        corpus.iter().all(|e| e.has_gold_labels()),
        "confounding estimation needs gold relevance labels on every example"
    );
    let config = ClassifierConfig {
        hash_dim: 1usize << args.hash_bits,
        l2: args.l2,
        epochs: args.epochs,
        lr: args.lr,
        seed: args.seed,
    };
    let (train_idx, eval_idx) = split_train_eval(corpus.len(), args.train_frac, args.split_seed);
    anyhow::ensure!(
        !train_idx.is_empty() && !eval_idx.is_empty(),
        "split left an empty side; adjust --train-frac"
    );
    let train: Vec<Example> = train_idx.iter().map(|&i| corpus[i].clone()).collect();
    let eval: Vec<Example> = eval_idx.iter().map(|&i| corpus[i].clone()).collect();

    let c1 = train_classifier(&train, false, &config)?;
    let c2 = train_classifier(&train, true, &config)?;
    let estimate = estimate_ce(&c1, &c2, &eval)?;
    let se = estimate.standard_error();

    let bits = args.bits;
    let unit = unit_name(bits);
    let human = format!(
        "corpus: {} ({} train / {} held-out examples)\n\
         H(x_r|x,q) estimate      : {:>10.6} {unit}\n\
         H(x_r|x,q,y) estimate    : {:>10.6} {unit}\n\
         confounding effect       : {:>10.6} {unit}\n\
         standard error           : {:>10.6} {unit}",
        args.corpus.display(),
        train.len(),
        eval.len(),
        in_unit(estimate.h1, bits),
        in_unit(estimate.h2, bits),
        in_unit(estimate.ce, bits),
        in_unit(se, bits),
    );
    let value = serde_json::json!({
        "config": {
            "corpus": args.corpus.display().to_string(),
            "split_seed": args.split_seed,
            "train_frac": args.train_frac,
            "epochs": args.epochs,
            "lr": args.lr,
            "l2": args.l2,
            "hash_bits": args.hash_bits,
            "seed": args.seed,
            "unit": unit,
        },
        "train_examples": train.len(),
        "eval_examples": eval.len(),
        "h1": in_unit(estimate.h1, bits),
        "h2": in_unit(estimate.h2, bits),
        "ce": in_unit(estimate.ce, bits),
        "standard_error": in_unit(se, bits),
    });
    emit(json, &human, value);
    Ok(0)
}
