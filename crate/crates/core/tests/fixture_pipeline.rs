//! End-to-end checks of the shipped fixture corpus against the reference
//! backend: schema validity, full screening agreement, descriptive
//! statistics against an independent tally, and the flat/hierarchical
//! accounting identity.

use std::collections::BTreeMap;
use std::path::PathBuf;

use vigil_core::category::{CrisisCategory, ALL_CATEGORIES};
use vigil_core::classify::{flatten, screen_dataset, screen_dataset_seq, LexiconBackend, Prediction};
use vigil_core::corpus::{describe, load_dataset, validate, Dataset, FileFormat, Label};
use vigil_core::metrics::{
    join_on_id, per_category_one_vs_rest, BootstrapConfig, EvaluationMode, Verdict,
};
use vigil_core::normalize::ExpansionKind;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus.jsonl")
}

fn fixture() -> Dataset {
    load_dataset(&fixture_path(), FileFormat::Jsonl).expect("fixture corpus loads")
}

#[test]
fn fixture_loads_and_validates_clean() {
    let dataset = fixture();
    assert_eq!(dataset.len(), 64);
    assert!(validate(dataset.messages()).is_clean());
    let crisis = dataset.iter().filter(|m| m.label == Label::Crisis).count();
    assert_eq!(crisis, 40);
    assert_eq!(dataset.len() - crisis, 24);
}

#[test]
fn fixture_covers_all_categories_and_mixed_presentations() {
    let dataset = fixture();
    let mut coverage: BTreeMap<CrisisCategory, usize> = BTreeMap::new();
    let mut mixed = 0;
    for message in dataset.iter().filter(|m| m.label == Label::Crisis) {
        if message.categories.len() >= 2 {
            mixed += 1;
        }
        for category in message.categories.iter() {
            *coverage.entry(category).or_insert(0) += 1;
        }
    }
    for category in ALL_CATEGORIES {
        assert!(coverage.get(&category).copied().unwrap_or(0) >= 4, "thin coverage for {category}");
    }
    assert_eq!(mixed, 8);
}

#[test]
fn reference_backend_agrees_with_every_fixture_label() {
    // The fixture is constructed in-lexicon: this exercises the pipeline,
    // not generalization. Stage 1 must agree on all 64 messages and stage 2
    // must reproduce the exact category sets.
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    for message in dataset.iter() {
        let result = backend.screen(&message.text).unwrap();
        let expected_crisis = message.label == Label::Crisis;
        assert_eq!(
            result.crisis, expected_crisis,
            "stage-1 disagreement on {} ({:?})",
            message.id, message.text
        );
        assert_eq!(
            result.categories, message.categories,
            "stage-2 disagreement on {} ({:?}): scores {:?}",
            message.id, message.text, result.scores
        );
    }
}

#[test]
fn parallel_and_sequential_screening_agree() {
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    let par = screen_dataset(&backend, &dataset).unwrap();
    let seq = screen_dataset_seq(&backend, &dataset).unwrap();
    assert_eq!(par, seq);
    assert_eq!(par.len(), 64);
}

#[test]
fn normalization_expansions_are_exactly_the_intended_ones() {
    // textese expansions plus the single transposition repair ("teh");
    // anything else would mean the corrector is rewriting real words
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    let mut spelling_repairs = Vec::new();
    for message in dataset.iter() {
        let normalized = backend.normalizer().normalize(&message.text);
        for expansion in &normalized.expansions {
            if expansion.kind == ExpansionKind::Spelling {
                spelling_repairs.push((message.id.clone(), expansion.original.clone()));
            }
        }
    }
    assert_eq!(spelling_repairs, vec![("msg-002".to_string(), "teh".to_string())]);
}

#[test]
fn descriptives_match_independent_tally() {
    let dataset = fixture();
    let stats = describe(&dataset, 10).unwrap();

    // independent tally frozen from a hand count (python, case-folded
    // whitespace tokens over the 64 fixture messages)
    assert_eq!(stats.n_messages, 64);
    assert_eq!(stats.total_tokens, 686);
    assert_eq!(stats.unique_tokens, 350);
    assert_eq!(stats.characters.min, 21);
    assert_eq!(stats.characters.max, 75);
    assert!((stats.characters.mean - 53.296875).abs() < 1e-9);
    assert!((stats.characters.sd - 10.382647).abs() < 1e-5);
    assert!((stats.words.mean - 10.71875).abs() < 1e-9);
    assert_eq!(stats.words.median, 11.0);
    assert_eq!(stats.sentences.min, 1);

    // brute-force recount through an independent code path
    let mut tally: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for message in dataset.iter() {
        for token in message.text.split_whitespace() {
            *tally.entry(token.to_lowercase()).or_insert(0) += 1;
            total += 1;
        }
    }
    assert_eq!(total, stats.total_tokens);
    assert_eq!(tally.len() as u64, stats.unique_tokens);
    let mut ranked: Vec<(&String, &u64)> = tally.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (expected, got) in ranked.iter().zip(&stats.top_words) {
        assert_eq!(*expected.0, got.word);
        assert_eq!(*expected.1, got.count);
        assert!((got.share - *expected.1 as f64 / total as f64).abs() < 1e-15);
    }
    assert_eq!(stats.top_words[0].word, "i");
    assert_eq!(stats.top_words[0].count, 29);
    assert_eq!(stats.top_words[1].word, "to");
    assert_eq!(stats.top_words[1].count, 28);
    assert_eq!(stats.top_words[2].word, "my");
    assert_eq!(stats.top_words[2].count, 22);

    // exact ratio identity
    assert_eq!(stats.type_token_ratio, 350.0 / 686.0);
}

fn verdicts_from_predictions(predictions: &[Prediction]) -> Vec<Verdict> {
    predictions
        .iter()
        .map(|p| Verdict { id: p.id.clone(), crisis: p.crisis, categories: p.categories })
        .collect()
}

fn verdicts_from_labels(dataset: &Dataset) -> Vec<Verdict> {
    dataset
        .iter()
        .map(|m| Verdict {
            id: m.id.clone(),
            crisis: m.label == Label::Crisis,
            categories: m.categories,
        })
        .collect()
}

#[test]
fn flat_hierarchical_accounting_identity_holds() {
    // degrade the perfect reference predictions by un-flagging three crisis
    // messages (one of them mixed, carrying two categories); for every
    // category: FN_flat = FN_hier + stage-1 misses carrying that category
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    let mut predictions = screen_dataset(&backend, &dataset).unwrap();
    let missed_ids = ["msg-003", "msg-017", "msg-035"];
    for prediction in predictions.iter_mut() {
        if missed_ids.contains(&prediction.id.as_str()) {
            prediction.crisis = false;
            prediction.categories = Default::default();
        }
    }

    let labels = verdicts_from_labels(&dataset);
    let joined = join_on_id(&labels, &verdicts_from_predictions(&predictions)).unwrap();
    let config = BootstrapConfig { seed: 1, resamples: 50 };
    let flat = per_category_one_vs_rest(&joined, EvaluationMode::Flat, 0.95, &config).unwrap();
    let hier =
        per_category_one_vs_rest(&joined, EvaluationMode::Hierarchical, 0.95, &config).unwrap();

    assert_eq!(flat.n_evaluated, 64);
    assert_eq!(hier.n_evaluated, 37); // 40 crisis - 3 un-flagged

    let mut misses_by_category: BTreeMap<CrisisCategory, u64> = BTreeMap::new();
    let mut stage1_false_negatives = 0u64;
    let mut total_missed_labels = 0u64;
    for message in dataset.iter() {
        if message.label == Label::Crisis && missed_ids.contains(&message.id.as_str()) {
            stage1_false_negatives += 1;
            for category in message.categories.iter() {
                *misses_by_category.entry(category).or_insert(0) += 1;
                total_missed_labels += 1;
            }
        }
    }

    let mut delta_sum = 0u64;
    for category in ALL_CATEGORIES {
        let fn_flat = flat.get(category).counts.fneg;
        let fn_hier = hier.get(category).counts.fneg;
        let misses = misses_by_category.get(&category).copied().unwrap_or(0);
        assert_eq!(fn_flat, fn_hier + misses, "identity fails for {category}");
        delta_sum += fn_flat - fn_hier;
    }
    // the per-category deltas sum to the missed label count (a mixed
    // message counts once per category it carries)
    assert_eq!(delta_sum, total_missed_labels);
    assert_eq!(stage1_false_negatives, 3);
    assert_eq!(total_missed_labels, 4);
}

#[test]
fn perfect_predictions_give_perfect_reports_and_zero_misclass() {
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    let predictions = screen_dataset(&backend, &dataset).unwrap();
    let labels = verdicts_from_labels(&dataset);
    let joined = join_on_id(&labels, &verdicts_from_predictions(&predictions)).unwrap();

    let config = BootstrapConfig { seed: 1, resamples: 50 };
    let hier =
        per_category_one_vs_rest(&joined, EvaluationMode::Hierarchical, 0.95, &config).unwrap();
    assert_eq!(hier.n_evaluated, 40);
    for (category, set) in &hier.categories {
        assert_eq!(set.counts.fp, 0, "{category}");
        assert_eq!(set.counts.fneg, 0, "{category}");
    }
    let matrix = vigil_core::metrics::misclassification_matrix(&joined);
    assert!(matrix.is_zero());
    assert_eq!(matrix.n_flagged, 40);
}

#[test]
fn flatten_matches_category_flags_on_fixture() {
    let dataset = fixture();
    let backend = LexiconBackend::reference();
    for message in dataset.iter() {
        let result = backend.screen(&message.text).unwrap();
        let flags = flatten(&result);
        if !result.crisis {
            assert_eq!(flags, [false; 8]);
        } else {
            assert_eq!(flags, result.categories.to_flags());
        }
    }
}

#[test]
fn csv_round_trip_preserves_fixture() {
    let dataset = fixture();
    let mut buffer = Vec::new();
    vigil_core::corpus::write_csv(&dataset, &mut buffer).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixture.csv");
    std::fs::write(&path, &buffer).unwrap();
    let reloaded = load_dataset(&path, FileFormat::Csv).unwrap();
    assert_eq!(reloaded, dataset);
}
