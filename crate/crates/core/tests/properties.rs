//! Property tests for the crate-wide invariants: information inequalities on
//! random tables, metric symmetries against brute-force oracles, and the
//! post-processing verbatim guarantee on fuzzed inputs.

use proptest::prelude::*;

use eacl_core::info::JointDistribution;
use eacl_core::pipeline::{distant_label, extractive_postprocess, Answer, Example, ScoreSide};
use eacl_core::seqmodel::{train_ngram, SequenceModel};
use eacl_core::text::{meteor_lite, rouge_l, rouge_n, TokenSeq};

fn joint_strategy() -> impl Strategy<Value = JointDistribution> {
    (2usize..=3, 2usize..=3, 2usize..=3)
        .prop_flat_map(|(ca, cb, cc)| {
            let n = ca * cb * cc;
            (
                Just((ca, cb, cc)),
                proptest::collection::vec(1e-3..1.0f64, n),
            )
        })
        .prop_map(|((ca, cb, cc), raw)| {
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            JointDistribution::new(
                vec![
                    ("a".to_string(), ca),
                    ("b".to_string(), cb),
                    ("c".to_string(), cc),
                ],
                probs,
            )
            .unwrap()
        })
}

fn token_seq_strategy(max_len: usize) -> impl Strategy<Value = TokenSeq> {
    proptest::collection::vec(
        proptest::sample::select(vec![
            "alpha", "bravo", "charlie", "delta", "echo", "running", "runs", "cat", "cats",
        ]),
        0..=max_len,
    )
    .prop_map(|tokens| TokenSeq::from_tokens(tokens.into_iter().map(String::from).collect()))
}

/// Quadratic clipped n-gram overlap, independent of the library path.
fn brute_force_rouge_overlap(cand: &[String], refr: &[String], n: usize) -> usize {
    let grams = |toks: &[String]| -> Vec<Vec<String>> {
        if toks.len() < n {
            return Vec::new();
        }
        toks.windows(n).map(|w| w.to_vec()).collect()
    };
    let c = grams(cand);
    let mut r = grams(refr);
    let mut overlap = 0;
    for gram in c {
        if let Some(pos) = r.iter().position(|g| *g == gram) {
            r.remove(pos);
            overlap += 1;
        }
    }
    overlap
}

/// Longest common subsequence by exhaustive subsequence enumeration.
fn brute_force_lcs(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 12, "exhaustive check only for short inputs");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&String> = a
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, t)| t)
            .collect();
        if sub.len() <= best {
            continue;
        }
        let mut it = b.iter();
        if sub.iter().all(|t| it.any(|u| u == *t)) {
            best = sub.len();
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditioning_never_increases_entropy(d in joint_strategy()) {
        let h_a = d.entropy(&["a"]).unwrap();
        let h_a_given = d.conditional_entropy(&["a"], &["b"]).unwrap();
        prop_assert!(h_a_given >= 0.0);
        prop_assert!(h_a_given <= h_a + 1e-10);
    }

    #[test]
    fn mutual_information_nonnegative_and_symmetric(d in joint_strategy()) {
        let ab = d.mutual_information(&["a"], &["b"], None).unwrap();
        let ba = d.mutual_information(&["b"], &["a"], None).unwrap();
        prop_assert!(ab >= -1e-10);
        prop_assert!((ab - ba).abs() <= 1e-10);
        let cond_ab = d.mutual_information(&["a"], &["b"], Some(&["c"])).unwrap();
        let cond_ba = d.mutual_information(&["b"], &["a"], Some(&["c"])).unwrap();
        prop_assert!(cond_ab >= -1e-10);
        prop_assert!((cond_ab - cond_ba).abs() <= 1e-10);
    }

    #[test]
    fn chain_rule_holds(d in joint_strategy()) {
        let lhs = d.mutual_information(&["a"], &["b", "c"], None).unwrap();
        let rhs = d.mutual_information(&["a"], &["b"], None).unwrap()
            + d.mutual_information(&["a"], &["c"], Some(&["b"])).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn marginal_entropy_paths_agree(d in joint_strategy()) {
        let direct = d.entropy(&["a", "c"]).unwrap();
        let via_marginal = d.marginalize(&["a", "c"]).unwrap().entropy(&["a", "c"]).unwrap();
        prop_assert!((direct - via_marginal).abs() <= 1e-12);
    }

    #[test]
    fn rouge_matches_brute_force(
        cand in token_seq_strategy(12),
        refr in token_seq_strategy(12),
        n in 1usize..=2,
    ) {
        let score = rouge_n(&cand, &refr, n, false);
        let overlap = brute_force_rouge_overlap(&cand.tokens, &refr.tokens, n);
        let cand_total = cand.tokens.len().saturating_sub(n - 1);
        let ref_total = refr.tokens.len().saturating_sub(n - 1);
        let p = if cand_total == 0 { 0.0 } else { overlap as f64 / cand_total as f64 };
        let r = if ref_total == 0 { 0.0 } else { overlap as f64 / ref_total as f64 };
        prop_assert!((score.precision - p).abs() < 1e-12);
        prop_assert!((score.recall - r).abs() < 1e-12);
    }

    #[test]
    fn rouge_swap_symmetry(cand in token_seq_strategy(10), refr in token_seq_strategy(10)) {
        let ab = rouge_n(&cand, &refr, 1, true);
        let ba = rouge_n(&refr, &cand, 1, true);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        prop_assert!((ab.recall - ba.precision).abs() < 1e-12);
    }

    #[test]
    fn self_rouge_is_one(cand in token_seq_strategy(10), n in 1usize..=2) {
        prop_assume!(cand.len() >= n);
        let s = rouge_n(&cand, &cand, n, true);
        prop_assert!((s.f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lcs_matches_exhaustive_enumeration(
        cand in token_seq_strategy(9),
        refr in token_seq_strategy(9),
    ) {
        let s = rouge_l(&cand, &refr, false);
        let lcs = brute_force_lcs(&cand.tokens, &refr.tokens);
        prop_assert!(lcs <= cand.len().min(refr.len()));
        let expected_p = if cand.is_empty() { 0.0 } else { lcs as f64 / cand.len() as f64 };
        prop_assert!((s.precision - expected_p).abs() < 1e-12);
    }

    #[test]
    fn meteor_stays_in_unit_interval(
        cand in token_seq_strategy(8),
        refr in token_seq_strategy(8),
    ) {
        let m = meteor_lite(&cand, &refr);
        prop_assert!((0.0..=1.0).contains(&m));
        // Zero exactly when no unigram aligns under exact or stem matching.
        let any_alignment = cand.stems.iter().any(|s| refr.stems.contains(s));
        prop_assert_eq!(m == 0.0, !any_alignment || cand.is_empty() || refr.is_empty());
    }

    #[test]
    fn postprocess_always_selects_verbatim_sentences(
        raw in token_seq_strategy(10),
        sentence_count in 1usize..=5,
        threshold in 0.1f64..=1.0,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pool = ["alpha", "bravo", "charlie", "delta", "echo", "zulu"];
        let sentences: Vec<String> = (0..sentence_count)
            .map(|_| {
                let len = rng.gen_range(1..=4);
                (0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect::<Vec<_>>().join(" ")
            })
            .collect();
        let answer = Answer { sentences: sentences.clone(), gold_relevance: None };
        let selected = extractive_postprocess(&raw, &answer, threshold);
        let mut last = None;
        for j in selected {
            prop_assert!(j < sentences.len());
            prop_assert_eq!(&answer.sentences[j], &sentences[j]);
            if let Some(prev) = last {
                prop_assert!(j > prev, "selection order must be preserved");
            }
            last = Some(j);
        }
    }

    #[test]
    fn distant_label_positives_shrink_with_threshold(
        summary in token_seq_strategy(8),
        sentences in proptest::collection::vec(token_seq_strategy(6), 1..4),
    ) {
        prop_assume!(!summary.is_empty());
        let example = Example {
            question: "q".into(),
            answers: vec![Answer {
                sentences: sentences.iter().map(|s| s.tokens.join(" ")).collect(),
                gold_relevance: None,
            }],
            cluster_summaries: None,
            summary: summary.tokens.join(" "),
        };
        prop_assume!(example.answers[0].sentences.iter().all(|s| !s.is_empty()));
        let mut last = usize::MAX;
        for threshold in [0.25, 0.5, 0.75, 1.0] {
            let count = distant_label(&example, threshold, ScoreSide::Precision)
                .iter().flatten().filter(|&&b| b).count();
            prop_assert!(count <= last);
            last = count;
        }
    }

    #[test]
    fn ngram_step_distributions_normalize(
        outputs in proptest::collection::vec(token_seq_strategy(5), 1..4),
        prefix in token_seq_strategy(3),
        copy_weight in 0.0f64..=1.0,
    ) {
        let pairs: Vec<(TokenSeq, TokenSeq)> = outputs
            .iter()
            .map(|o| (TokenSeq::from_text("the input"), o.clone()))
            .collect();
        let model = train_ngram(&pairs, 2, 0.05, copy_weight).unwrap();
        let input = TokenSeq::from_text("the input");
        let total: f64 = model
            .vocab()
            .iter()
            .map(|t| model.step_log_prob(&input, &prefix.tokens, t).exp())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "step mass {total}");
    }
}
