//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them).

mod gen;
mod oracle;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use advner_core::corpus::{
    concat_corpora, extract_spans, parse_conll, serialize_conll, split_corpus, validate_iob2,
    AnnotatedSentence, ColumnLayout, Corpus, ParseOptions, SplitSpec, TagLabel, Token,
};
use advner_core::evaluate::{evaluate, micro_f1, EvalSchema, SchemaCounts};
use advner_core::gazetteer::Gazetteer;
use advner_core::modelclient::{tag_sentences, FileParaphraser, StubMaskFiller, StubTagger};
use advner_core::perturb::{
    gazetteer_replace, mask_context, mask_plus_random, paraphrase_corpus, random_sample,
    DiscardReason, PerturbationConfig, PerturbationMethod,
};
use advner_core::rng::SplitMix64;
use advner_core::stats::{paired_t_test, student_t_two_sided_p, RunSeries};

const PRF_TOL: f64 = 1e-9;

fn report_line(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion}: FAIL — runtime {elapsed:?} exceeds budget {budget:?}"
    );
    println!("criterion {criterion}: PASS in {elapsed:?}");
}

fn sent(id: &str, pairs: &[(&str, &str)]) -> AnnotatedSentence {
    let tokens = pairs.iter().map(|(t, _)| Token::new(*t).unwrap()).collect();
    let tags = pairs
        .iter()
        .map(|(_, g)| TagLabel::parse(g).unwrap())
        .collect();
    AnnotatedSentence::new(id, tokens, tags).unwrap()
}

fn assert_prf(scope: &str, actual: (f64, f64, f64), expected: (f64, f64, f64)) {
    for ((a, e), name) in [
        (actual.0, expected.0),
        (actual.1, expected.1),
        (actual.2, expected.2),
    ]
    .iter()
    .map(|(a, e)| (*a, *e))
    .zip(["precision", "recall", "f1"])
    {
        assert!(
            (a - e).abs() < PRF_TOL,
            "{scope} {name}: got {a}, expected {e}"
        );
    }
}

/// Criterion 1: hand-counted fixture reproduction across all four schemas.
#[test]
fn criterion_1_evaluation_fixture_reproduction() {
    let started = Instant::now();

    let gold = Corpus::from_sentences(
        "fixture-gold",
        vec![
            sent(
                "f:0",
                &[
                    ("John", "B-PER"),
                    ("Smith", "I-PER"),
                    ("visits", "O"),
                    ("Paris", "B-LOC"),
                ],
            ),
            sent(
                "f:1",
                &[
                    ("EU", "B-ORG"),
                    ("rejects", "O"),
                    ("German", "B-MISC"),
                    ("call", "O"),
                ],
            ),
            sent(
                "f:2",
                &[
                    ("Bad", "B-LOC"),
                    ("Homburg", "I-LOC"),
                    ("is", "O"),
                    ("nice", "O"),
                ],
            ),
            sent(
                "f:3",
                &[
                    ("visit", "O"),
                    ("New", "B-LOC"),
                    ("York", "I-LOC"),
                    ("City", "I-LOC"),
                    ("now", "O"),
                ],
            ),
            sent(
                "f:4",
                &[("Obama", "B-PER"), ("spoke", "O"), ("yesterday", "O")],
            ),
            sent("f:5", &[("the", "O"), ("market", "O"), ("rose", "O")]),
            sent("f:6", &[("Alice", "B-PER"), ("met", "O"), ("Bob", "B-PER")]),
            sent(
                "f:7",
                &[
                    ("Reuters", "B-ORG"),
                    ("reported", "O"),
                    ("from", "O"),
                    ("Geneva", "B-LOC"),
                ],
            ),
        ],
    );
    let pred = Corpus::from_sentences(
        "fixture-pred",
        vec![
            sent(
                "f:0",
                &[
                    ("John", "B-PER"),
                    ("Smith", "I-PER"),
                    ("visits", "O"),
                    ("Paris", "B-LOC"),
                ],
            ),
            sent(
                "f:1",
                &[
                    ("EU", "B-ORG"),
                    ("rejects", "O"),
                    ("German", "B-LOC"),
                    ("call", "O"),
                ],
            ),
            sent(
                "f:2",
                &[
                    ("Bad", "B-LOC"),
                    ("Homburg", "O"),
                    ("is", "O"),
                    ("nice", "O"),
                ],
            ),
            sent(
                "f:3",
                &[
                    ("visit", "O"),
                    ("New", "B-ORG"),
                    ("York", "I-ORG"),
                    ("City", "O"),
                    ("now", "O"),
                ],
            ),
            sent("f:4", &[("Obama", "O"), ("spoke", "O"), ("yesterday", "O")]),
            sent("f:5", &[("the", "O"), ("market", "B-MISC"), ("rose", "O")]),
            sent("f:6", &[("Alice", "B-PER"), ("met", "O"), ("Bob", "B-PER")]),
            sent(
                "f:7",
                &[
                    ("Reuters", "B-ORG"),
                    ("reported", "O"),
                    ("from", "O"),
                    ("Geneva", "O"),
                ],
            ),
        ],
    );

    let report = evaluate(&gold, &pred).unwrap();

    // Hand-traced category counts. Gold spans: 11, pred spans: 10.
    // Matched pairs: 6 exact+same-type, 1 exact+wrong-type, 1 overlap+same,
    // 1 overlap+wrong; 2 gold unmatched, 1 pred unmatched.
    let expected_counts: BTreeMap<EvalSchema, SchemaCounts> = [
        (
            EvalSchema::Strict,
            SchemaCounts {
                correct: 6,
                incorrect: 3,
                partial: 0,
                missed: 2,
                spurious: 1,
            },
        ),
        (
            EvalSchema::Exact,
            SchemaCounts {
                correct: 7,
                incorrect: 2,
                partial: 0,
                missed: 2,
                spurious: 1,
            },
        ),
        (
            EvalSchema::Partial,
            SchemaCounts {
                correct: 7,
                incorrect: 0,
                partial: 2,
                missed: 2,
                spurious: 1,
            },
        ),
        (
            EvalSchema::Type,
            SchemaCounts {
                correct: 7,
                incorrect: 2,
                partial: 0,
                missed: 2,
                spurious: 1,
            },
        ),
    ]
    .into();
    for (schema, expected) in &expected_counts {
        let actual = report.overall.schema(*schema);
        assert_eq!(actual.counts, *expected, "overall {schema} counts");
    }

    // Exact PRF values (rational arithmetic by hand).
    assert_prf(
        "overall strict",
        {
            let r = report.overall.strict;
            (r.precision, r.recall, r.f1)
        },
        (6.0 / 10.0, 6.0 / 11.0, 4.0 / 7.0),
    );
    assert_prf(
        "overall exact",
        {
            let r = report.overall.exact;
            (r.precision, r.recall, r.f1)
        },
        (7.0 / 10.0, 7.0 / 11.0, 2.0 / 3.0),
    );
    assert_prf(
        "overall partial",
        {
            let r = report.overall.partial;
            (r.precision, r.recall, r.f1)
        },
        (8.0 / 10.0, 8.0 / 11.0, 16.0 / 21.0),
    );
    assert_prf(
        "overall type",
        {
            let r = report.overall.type_match;
            (r.precision, r.recall, r.f1)
        },
        (7.0 / 10.0, 7.0 / 11.0, 2.0 / 3.0),
    );
    assert_prf(
        "strict micro-F1",
        (
            report.strict_micro_f1.precision,
            report.strict_micro_f1.recall,
            report.strict_micro_f1.f1,
        ),
        (6.0 / 10.0, 6.0 / 11.0, 4.0 / 7.0),
    );

    // Per-type spot checks, hand-counted.
    let per = &report.per_type;
    assert_eq!(
        per["PER"].strict.counts,
        SchemaCounts {
            correct: 3,
            incorrect: 0,
            partial: 0,
            missed: 1,
            spurious: 0
        }
    );
    assert!((per["PER"].strict.f1 - 6.0 / 7.0).abs() < PRF_TOL);
    assert_eq!(
        per["LOC"].strict.counts,
        SchemaCounts {
            correct: 1,
            incorrect: 2,
            partial: 0,
            missed: 1,
            spurious: 0
        }
    );
    assert_eq!(
        per["LOC"].partial.counts,
        SchemaCounts {
            correct: 1,
            incorrect: 0,
            partial: 2,
            missed: 1,
            spurious: 0
        }
    );
    assert!((per["LOC"].partial.f1 - 4.0 / 7.0).abs() < PRF_TOL);
    assert_eq!(
        per["ORG"].strict.counts,
        SchemaCounts {
            correct: 2,
            incorrect: 0,
            partial: 0,
            missed: 0,
            spurious: 0
        }
    );
    assert!((per["ORG"].strict.f1 - 1.0).abs() < PRF_TOL);
    assert_eq!(
        per["MISC"].strict.counts,
        SchemaCounts {
            correct: 0,
            incorrect: 1,
            partial: 0,
            missed: 0,
            spurious: 1
        }
    );
    assert!((per["MISC"].exact.f1 - 2.0 / 3.0).abs() < PRF_TOL);
    assert_eq!(per["MISC"].strict.f1, 0.0);

    report_line(
        "1 (evaluation fixture reproduction)",
        started,
        Duration::from_secs(1),
    );
}

const ORACLE_PAIRS: usize = 1000;
const ORACLE_GEN_SEED: u64 = 0xACCE97;

fn oracle_pairs() -> Vec<(Corpus, Corpus)> {
    let mut rng = SplitMix64::new(ORACLE_GEN_SEED);
    (0..ORACLE_PAIRS)
        .map(|_| {
            let sentences = 1 + rng.next_below(4) as usize;
            gen::random_eval_pair(&mut rng, sentences, 8, 3)
        })
        .collect()
}

/// Criterion 2: oracle equivalence over 1,000 random (gold, pred) pairs.
#[test]
fn criterion_2_oracle_equivalence() {
    let started = Instant::now();
    let mut discrepancies = 0usize;
    for (i, (gold, pred)) in oracle_pairs().iter().enumerate() {
        let report = evaluate(gold, pred).unwrap();
        let expected = oracle::oracle_classify_corpus(gold, pred);
        for schema in EvalSchema::ALL {
            if report.overall.schema(schema).counts != expected[&schema] {
                eprintln!(
                    "pair {i} schema {schema}: {:?} vs oracle {:?}",
                    report.overall.schema(schema).counts,
                    expected[&schema]
                );
                discrepancies += 1;
            }
        }
        let micro = micro_f1(gold, pred).unwrap();
        let (op, or, of) = oracle::oracle_strict_micro_f1(gold, pred);
        if (micro.precision - op).abs() > 1e-12
            || (micro.recall - or).abs() > 1e-12
            || (micro.f1 - of).abs() > 1e-12
        {
            eprintln!("pair {i} micro-F1 mismatch");
            discrepancies += 1;
        }
        // seqeval agreement: the strict micro-F1 must coincide with the PRF
        // derived from the Strict schema counts (Strict never grants
        // partial credit and matching is one-to-one).
        let strict = report.overall.strict;
        if (micro.precision - strict.precision).abs() > 1e-12
            || (micro.recall - strict.recall).abs() > 1e-12
            || (micro.f1 - strict.f1).abs() > 1e-12
        {
            eprintln!("pair {i}: strict micro-F1 disagrees with Strict schema counts");
            discrepancies += 1;
        }
    }
    assert_eq!(
        discrepancies, 0,
        "criterion 2: FAIL — {discrepancies} discrepancies"
    );
    report_line(
        "2 (oracle equivalence, 1000 random pairs)",
        started,
        Duration::from_secs(30),
    );
}

/// Criterion 3: Strict F1 <= Exact F1 <= Partial F1 on every criterion-2 pair.
#[test]
fn criterion_3_schema_ordering() {
    let started = Instant::now();
    for (i, (gold, pred)) in oracle_pairs().iter().enumerate() {
        let report = evaluate(gold, pred).unwrap();
        let strict = report.overall.strict.f1;
        let exact = report.overall.exact.f1;
        let partial = report.overall.partial.f1;
        assert!(
            strict <= exact + 1e-12 && exact <= partial + 1e-12,
            "pair {i}: ordering violated: strict {strict}, exact {exact}, partial {partial}"
        );
    }
    report_line(
        "3 (schema ordering on criterion-2 pairs)",
        started,
        Duration::from_secs(30),
    );
}

fn surface_multiset(corpus: &Corpus) -> BTreeMap<String, BTreeMap<String, usize>> {
    let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for (_, span) in corpus.all_spans() {
        *out.entry(span.entity_type.clone())
            .or_default()
            .entry(span.surface_text())
            .or_insert(0) += 1;
    }
    out
}

fn outside_tokens(sentence: &AnnotatedSentence) -> Vec<String> {
    sentence
        .tags()
        .iter()
        .zip(sentence.tokens())
        .filter(|(tag, _)| tag.is_outside())
        .map(|(_, tok)| tok.as_str().to_string())
        .collect()
}

fn assert_valid_corpus(corpus: &Corpus, context: &str) {
    for sentence in corpus.sentences() {
        assert!(
            validate_iob2(sentence.tags()).is_ok(),
            "{context}: invalid IOB2 in {}",
            sentence.id()
        );
    }
}

/// Criterion 4: perturbation invariants over 500 random corpora per method.
#[test]
fn criterion_4_perturbation_invariants() {
    let started = Instant::now();
    let gazetteer = Gazetteer::builtin();
    let filler_basis = parse_conll(
        "now O\nthen O\nsoon O\nlater O\nagain O\ntoday O\nquietly O\n\n",
        &ParseOptions::new("fill"),
    )
    .unwrap()
    .corpus;
    let filler = StubMaskFiller::from_corpus(&filler_basis);

    let mut rng = SplitMix64::new(0x9E24);
    for round in 0..500u64 {
        let corpus = gen::random_corpus(&mut rng, "rand", 3, 8, 3);

        // RS: per-type global surface multisets and Outside tokens preserved.
        let config = PerturbationConfig::new(PerturbationMethod::RandomSample, round);
        let (rs_out, _) = random_sample(&corpus, &config).unwrap();
        assert_eq!(
            surface_multiset(&corpus),
            surface_multiset(&rs_out),
            "round {round}: RS multiset"
        );
        for (orig, new) in corpus.sentences().iter().zip(rs_out.sentences()) {
            assert_eq!(
                outside_tokens(orig),
                outside_tokens(new),
                "round {round}: RS outside tokens"
            );
        }
        assert_valid_corpus(&rs_out, "RS");

        // Faker: replaced types only carry gazetteer members; span counts per
        // type per sentence preserved.
        let config = PerturbationConfig::new(PerturbationMethod::Faker, round);
        let (faker_out, _) = gazetteer_replace(&corpus, &gazetteer, &config).unwrap();
        for (orig, new) in corpus.sentences().iter().zip(faker_out.sentences()) {
            let orig_spans = extract_spans(orig);
            let new_spans = extract_spans(new);
            assert_eq!(
                orig_spans.len(),
                new_spans.len(),
                "round {round}: Faker span count"
            );
            for (os, ns) in orig_spans.iter().zip(&new_spans) {
                assert_eq!(os.entity_type, ns.entity_type);
                if config.faker_types.contains(&ns.entity_type) {
                    assert!(
                        gazetteer.contains_surface(&ns.entity_type, &ns.surface),
                        "round {round}: `{}` not a gazetteer member",
                        ns.surface_text()
                    );
                } else {
                    assert_eq!(os.surface, ns.surface);
                }
            }
        }
        assert_valid_corpus(&faker_out, "Faker");

        // Mask: tags and entity tokens preserved, at most max_masks changes.
        let config = PerturbationConfig::new(PerturbationMethod::Mask, round);
        let (mask_out, _) = mask_context(&corpus, &filler, &config).unwrap();
        for (orig, new) in corpus.sentences().iter().zip(mask_out.sentences()) {
            assert_eq!(orig.tags(), new.tags(), "round {round}: Mask tags");
            assert_eq!(orig.len(), new.len());
            let mut changed = 0;
            for i in 0..orig.len() {
                if orig.tokens()[i] != new.tokens()[i] {
                    changed += 1;
                    assert!(
                        orig.tags()[i].is_outside(),
                        "round {round}: Mask touched an entity"
                    );
                }
            }
            assert!(
                changed <= config.max_masks,
                "round {round}: Mask changed {changed}"
            );
        }
        assert_valid_corpus(&mask_out, "Mask");

        // M+R equals the composition of its stages under derived sub-seeds.
        let config = PerturbationConfig::new(PerturbationMethod::MaskPlusRandom, round);
        let (mr_out, _) = mask_plus_random(&corpus, &filler, &config).unwrap();
        let mask_stage = PerturbationConfig {
            method: PerturbationMethod::Mask,
            seed: config.stage_seed(0),
            ..config.clone()
        };
        let (staged, _) = mask_context(&corpus, &filler, &mask_stage).unwrap();
        let rs_stage = PerturbationConfig {
            method: PerturbationMethod::RandomSample,
            seed: config.stage_seed(1),
            ..config.clone()
        };
        let (composed, _) = random_sample(&staged, &rs_stage).unwrap();
        assert_eq!(
            mr_out.sentences(),
            composed.sentences(),
            "round {round}: M+R composition"
        );
        assert_eq!(
            surface_multiset(&corpus),
            surface_multiset(&mr_out),
            "round {round}: M+R multiset"
        );
        assert_valid_corpus(&mr_out, "M+R");
    }
    report_line(
        "4 (perturbation invariants, 500 corpora/method)",
        started,
        Duration::from_secs(60),
    );
}

/// Criterion 5: paraphrase remap fixture with the known failure modes.
#[test]
fn criterion_5_paraphrase_remap_fixture() {
    let started = Instant::now();

    // 30 (original, paraphrase) pairs. `None` as paraphrase = no TSV entry.
    // Expected outcome per pair: Ok = kept, or the discard reason.
    enum Want {
        Kept,
        Discard(fn(&DiscardReason) -> bool),
    }
    let not_found = |r: &DiscardReason| matches!(r, DiscardReason::EntityNotFound { .. });
    let count_mismatch = |r: &DiscardReason| matches!(r, DiscardReason::EntityCountMismatch { .. });
    let overlap = |r: &DiscardReason| matches!(r, DiscardReason::EntityOverlap { .. });
    let empty = |r: &DiscardReason| matches!(r, DiscardReason::EmptyParaphrase);
    let missing = |r: &DiscardReason| matches!(r, DiscardReason::NoParaphrase);

    struct Pair {
        original: Vec<(&'static str, &'static str)>,
        paraphrase: Option<&'static str>,
        want: Want,
    }
    let pairs: Vec<Pair> = vec![
        // -- kept: entity preserved verbatim -------------------------------
        Pair {
            original: vec![("Syria", "B-LOC"), ("wins", "O")],
            paraphrase: Some("Syria wins"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("by", "O"), ("Bre-X", "B-ORG"), ("today", "O")],
            paraphrase: Some("Bre-X estimates that the richest parts contain gold"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("Bala", "B-PER"),
                ("Naidoo", "I-PER"),
                ("told", "O"),
                ("Reuters", "B-ORG"),
            ],
            paraphrase: Some("Reuters was told by Bala Naidoo"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("visit", "O"), ("Paris", "B-LOC")],
            paraphrase: Some("you should see Paris soon"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("nothing", "O"), ("here", "O")],
            paraphrase: Some("a totally different sentence"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("New", "B-LOC"),
                ("York", "I-LOC"),
                ("is", "O"),
                ("big", "O"),
            ],
            paraphrase: Some("the city of New York is large"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("EU", "B-ORG"),
                ("rejects", "O"),
                ("German", "B-MISC"),
                ("call", "O"),
            ],
            paraphrase: Some("the call , German in origin , was rejected by EU"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Watford", "B-ORG"), ("beat", "O"), ("Chelsea", "B-ORG")],
            paraphrase: Some("Chelsea lost to Watford"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("München", "B-LOC"), ("ist", "O"), ("schön", "O")],
            paraphrase: Some("schön ist München"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("मुंबई", "B-LOC"), ("बड़ा", "O"), ("है", "O")],
            paraphrase: Some("है बड़ा मुंबई"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Paris", "B-LOC"), ("loves", "O"), ("Paris", "O")],
            paraphrase: Some("they say Paris loves Paris deeply"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("Tasmania", "B-LOC"),
                ("352", "O"),
                ("by", "O"),
                ("three", "O"),
            ],
            paraphrase: Some("by three , Tasmania reached 352"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Roger", "B-PER"), ("Turner", "I-PER"), ("led", "O")],
            paraphrase: Some("the lead came from Roger Turner"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("Indianapolis", "B-LOC"),
                ("closes", "O"),
                ("with", "O"),
                ("games", "O"),
            ],
            paraphrase: Some("games close things out for Indianapolis"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Victoria", "B-ORG"), (".", "O")],
            paraphrase: Some("Victoria ."),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("Kansas", "B-LOC"),
                ("City", "I-LOC"),
                ("and", "O"),
                ("Cincinnati", "B-LOC"),
            ],
            paraphrase: Some("Cincinnati along with Kansas City"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("the", "O"), ("Gauck-Behörde", "B-MISC"), ("?", "O")],
            paraphrase: Some("what about the Gauck-Behörde ?"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Timor-Leste", "B-LOC"), ("leads", "O")],
            paraphrase: Some("the lead belongs to Timor-Leste"),
            want: Want::Kept,
        },
        Pair {
            original: vec![
                ("Shaun", "B-PER"),
                ("Young", "I-PER"),
                ("86", "O"),
                ("not", "O"),
                ("out", "O"),
            ],
            paraphrase: Some("not out on 86 , Shaun Young"),
            want: Want::Kept,
        },
        Pair {
            original: vec![("Stadtmuseum", "B-LOC"), ("zu", "O"), ("realisieren", "O")],
            paraphrase: Some("zu realisieren im Stadtmuseum"),
            want: Want::Kept,
        },
        // -- discarded: entity rewritten by the paraphraser ----------------
        Pair {
            original: vec![("the", "O"), ("United", "B-LOC"), ("States", "I-LOC")],
            paraphrase: Some("the U.S. said so"),
            want: Want::Discard(not_found),
        },
        Pair {
            original: vec![("Bre-X", "B-ORG"), ("estimates", "O")],
            paraphrase: Some("BreX gives an estimate"),
            want: Want::Discard(not_found),
        },
        // -- discarded: entity absent from the paraphrase ------------------
        Pair {
            original: vec![("Obama", "B-PER"), ("spoke", "O")],
            paraphrase: Some("a speech was given"),
            want: Want::Discard(not_found),
        },
        Pair {
            original: vec![("Geneva", "B-LOC"), ("hosted", "O"), ("talks", "O")],
            paraphrase: Some("the talks were hosted elsewhere"),
            want: Want::Discard(not_found),
        },
        // -- discarded: entity duplicated / count changed -------------------
        Pair {
            original: vec![("Paris", "B-LOC"), ("wins", "O")],
            paraphrase: Some("Paris says Paris wins"),
            want: Want::Discard(count_mismatch),
        },
        Pair {
            original: vec![("EU", "B-ORG"), ("confirms", "O")],
            paraphrase: Some("EU confirms what EU said"),
            want: Want::Discard(count_mismatch),
        },
        Pair {
            original: vec![("Rome", "B-LOC"), ("hosts", "O"), ("Rome", "O")],
            paraphrase: Some("Rome hosts it"),
            want: Want::Discard(count_mismatch),
        },
        // -- discarded: mapped ranges overlap --------------------------------
        Pair {
            original: vec![
                ("New", "B-LOC"),
                ("York", "I-LOC"),
                ("York", "B-ORG"),
                ("City", "I-ORG"),
            ],
            paraphrase: Some("New York City"),
            want: Want::Discard(overlap),
        },
        // -- discarded: degenerate / missing paraphrases ---------------------
        Pair {
            original: vec![("empty", "O"), ("case", "O")],
            paraphrase: Some(""),
            want: Want::Discard(empty),
        },
        Pair {
            original: vec![("no", "O"), ("entry", "O")],
            paraphrase: None,
            want: Want::Discard(missing),
        },
    ];
    assert_eq!(pairs.len(), 30);

    let sentences: Vec<AnnotatedSentence> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| sent(&format!("para:{i}"), &p.original))
        .collect();
    let corpus = Corpus::from_sentences("para", sentences);
    let tsv: String = pairs
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.paraphrase.map(|text| format!("para:{i}\t{text}\n")))
        .collect();
    let paraphraser = FileParaphraser::from_tsv(&tsv).unwrap();
    let config = PerturbationConfig::new(PerturbationMethod::Paraphrase, 0);
    let (output, records) = paraphrase_corpus(&corpus, &paraphraser, &config).unwrap();

    let expected_kept = pairs
        .iter()
        .filter(|p| matches!(p.want, Want::Kept))
        .count();
    assert_eq!(output.len(), expected_kept, "retained sentence count");
    assert_eq!(records.len(), 30);
    for (i, (pair, record)) in pairs.iter().zip(&records).enumerate() {
        match (&pair.want, &record.discarded) {
            (Want::Kept, None) => {}
            (Want::Kept, Some(reason)) => panic!("pair {i} unexpectedly discarded: {reason:?}"),
            (Want::Discard(check), Some(reason)) => {
                assert!(check(reason), "pair {i}: wrong reason {reason:?}");
            }
            (Want::Discard(_), None) => panic!("pair {i} unexpectedly kept"),
        }
    }
    // Kept sentences preserve their entity annotations at the new positions.
    for mapped in output.sentences() {
        assert!(validate_iob2(mapped.tags()).is_ok());
        let index: usize = mapped.id().rsplit(':').next().unwrap().parse().unwrap();
        let original = &corpus.sentences()[index];
        let mut original_types: Vec<String> = extract_spans(original)
            .into_iter()
            .map(|s| s.entity_type)
            .collect();
        let mut mapped_types: Vec<String> = extract_spans(mapped)
            .into_iter()
            .map(|s| s.entity_type)
            .collect();
        original_types.sort();
        mapped_types.sort();
        assert_eq!(original_types, mapped_types, "{}", mapped.id());
    }

    report_line(
        "5 (paraphrase remap fixture, 30 pairs)",
        started,
        Duration::from_secs(5),
    );
}

/// Criterion 6: parse/serialize round-trip, 1000-sentence synthetic corpus
/// plus a canonical CoNLL sample.
#[test]
fn criterion_6_round_trip() {
    let started = Instant::now();

    let mut rng = SplitMix64::new(0x6006);
    let corpus = gen::random_corpus(&mut rng, "synthetic", 1000, 12, 3);
    let layout = ColumnLayout::default();
    let text = serialize_conll(&corpus, &layout);
    let reparsed = parse_conll(&text, &ParseOptions::new("synthetic")).unwrap();
    assert_eq!(reparsed.corpus, corpus, "parse(serialize(c)) == c");
    let text_again = serialize_conll(&reparsed.corpus, &layout);
    assert_eq!(text_again, text, "byte-exact re-serialisation");

    // Canonical sample: document markers and extra blank lines are the
    // documented normalizations; token/tag content must survive exactly.
    let sample = "-DOCSTART- O\n\nEU B-ORG\nrejects O\nGerman B-MISC\ncall O\n. O\n\n\nPeter B-PER\nBlackburn I-PER\n\nBRUSSELS B-LOC\n1996-08-22 O\n\n";
    let parsed = parse_conll(sample, &ParseOptions::new("canon")).unwrap();
    assert_eq!(parsed.meta.docstart_markers, 1);
    assert_eq!(parsed.corpus.len(), 3);
    let normalized = serialize_conll(&parsed.corpus, &layout);
    let expected = "EU B-ORG\nrejects O\nGerman B-MISC\ncall O\n. O\n\nPeter B-PER\nBlackburn I-PER\n\nBRUSSELS B-LOC\n1996-08-22 O\n\n";
    assert_eq!(normalized, expected);
    let reparsed = parse_conll(&normalized, &ParseOptions::new("canon")).unwrap();
    assert_eq!(reparsed.corpus, parsed.corpus);
    assert_eq!(serialize_conll(&reparsed.corpus, &layout), normalized);

    report_line(
        "6 (round-trip, 1000 sentences + canonical sample)",
        started,
        Duration::from_secs(10),
    );
}

/// Criterion 7: t-test reference values and invariants on 1000 random pairs.
#[test]
fn criterion_7_statistics() {
    let started = Instant::now();

    // t = 0 -> p = 1.
    let flat = RunSeries::new("flat", (0..5).map(|i| (i, 0.5)).collect::<Vec<_>>()).unwrap();
    let result = paired_t_test(&flat, &flat.clone()).unwrap();
    assert_eq!(result.t_statistic, 0.0);
    assert_eq!(result.p_value, 1.0);

    // df = 9, t = 2.262 -> p = 0.050 +/- 0.001, against the quadrature oracle.
    let ours = student_t_two_sided_p(2.262, 9.0);
    let quad = oracle::quadrature_two_sided_p(2.262, 9.0);
    assert!((ours - 0.050).abs() <= 1e-3, "p = {ours}");
    assert!(
        (ours - quad).abs() <= 1e-8,
        "incomplete beta {ours} vs quadrature {quad}"
    );
    for (t, df) in [(0.5, 3.0), (1.0, 9.0), (3.0, 9.0), (2.0, 40.0)] {
        let ours = student_t_two_sided_p(t, df);
        let quad = oracle::quadrature_two_sided_p(t, df);
        assert!(
            (ours - quad).abs() <= 1e-8,
            "t={t} df={df}: {ours} vs {quad}"
        );
    }

    // Shift invariance and antisymmetry over 1000 random series pairs.
    let mut rng = SplitMix64::new(0x57A7);
    for round in 0..1000 {
        let n = 2 + rng.next_below(9) as usize;
        let draw = |rng: &mut SplitMix64| (rng.next_below(10_000) as f64) / 10_000.0;
        let a_values: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let b_values: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let a = RunSeries::new(
            "a",
            a_values
                .iter()
                .enumerate()
                .map(|(i, v)| (i as u64, *v))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let b = RunSeries::new(
            "b",
            b_values
                .iter()
                .enumerate()
                .map(|(i, v)| (i as u64, *v))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let ab = paired_t_test(&a, &b).unwrap();
        assert!(
            (0.0..=1.0).contains(&ab.p_value),
            "round {round}: p out of range"
        );

        let ba = paired_t_test(&b, &a).unwrap();
        if ab.t_statistic.is_finite() {
            assert!(
                (ab.t_statistic + ba.t_statistic).abs() < 1e-9,
                "round {round}: antisymmetry t"
            );
        }
        assert!(
            (ab.p_value - ba.p_value).abs() < 1e-9,
            "round {round}: antisymmetry p"
        );

        let shift = 0.125;
        let shifted = |s: &RunSeries| {
            RunSeries::new(
                s.condition.clone(),
                s.observations
                    .iter()
                    .map(|(k, v)| (*k, v + shift))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        let moved = paired_t_test(&shifted(&a), &shifted(&b)).unwrap();
        if ab.t_statistic.is_finite() {
            assert!(
                (ab.t_statistic - moved.t_statistic).abs() < 1e-6,
                "round {round}: shift t"
            );
        }
        assert!(
            (ab.p_value - moved.p_value).abs() < 1e-6,
            "round {round}: shift p"
        );
    }

    report_line(
        "7 (statistics references + invariants)",
        started,
        Duration::from_secs(30),
    );
}

// --- criterion 8 fixture ----------------------------------------------------

const E2E_PERS: [&str; 4] = ["Miller", "Nolan", "Harris", "Quinn"];
const E2E_LOCS: [&str; 3] = ["Geneva", "Oslo", "Lagos"];
const E2E_ORGS: [&str; 2] = ["Reuters", "Acme"];

/// Training corpus for the memorisation stub: unambiguous single surfaces
/// plus the multi-token "Miller Group" ORG that collides with PER "Miller"
/// when random sampling moves it in front of a bare "Group" token.
fn e2e_train_corpus() -> Corpus {
    let mut sentences = Vec::new();
    let mut push = |pairs: &[(&str, &str)]| {
        let id = format!("train:{}", sentences.len());
        sentences.push(sent(&id, pairs));
    };
    for per in E2E_PERS {
        push(&[("analyst", "O"), (per, "B-PER"), ("commented", "O")]);
    }
    for loc in E2E_LOCS {
        push(&[
            ("talks", "O"),
            ("in", "O"),
            (loc, "B-LOC"),
            ("continue", "O"),
        ]);
    }
    for org in E2E_ORGS {
        push(&[
            (org, "B-ORG"),
            ("issued", "O"),
            ("a", "O"),
            ("statement", "O"),
        ]);
    }
    push(&[
        ("the", "O"),
        ("Miller", "B-ORG"),
        ("Group", "I-ORG"),
        ("expanded", "O"),
    ]);
    Corpus::from_sentences("train", sentences)
}

/// 200-sentence test corpus. Template 0 is the trap: a single-token PER
/// followed by a bare "Group" token; in the original assignment "Miller"
/// never sits in a trap slot, so the memorising stub scores a perfect 1.0
/// there. Random sampling moves "Miller" around, creating "Miller Group"
/// runs that the stub mis-tags as ORG with wrong boundaries.
fn e2e_test_corpus(n: usize) -> Corpus {
    let safe_pers = ["Nolan", "Harris", "Quinn"];
    let mut sentences = Vec::new();
    for i in 0..n {
        let id = format!("test:{i}");
        let loc = E2E_LOCS[i % E2E_LOCS.len()];
        let org = E2E_ORGS[i % E2E_ORGS.len()];
        let pairs: Vec<(&str, &str)> = match i % 4 {
            0 => vec![
                ("chairman", "O"),
                (safe_pers[i / 4 % safe_pers.len()], "B-PER"),
                ("Group", "O"),
                ("meeting", "O"),
                ("today", "O"),
            ],
            1 => vec![
                ("analyst", "O"),
                ("Miller", "B-PER"),
                ("praised", "O"),
                (loc, "B-LOC"),
            ],
            2 => vec![
                (org, "B-ORG"),
                ("reported", "O"),
                ("from", "O"),
                (loc, "B-LOC"),
            ],
            _ => vec![
                ("the", "O"),
                ("Miller", "B-ORG"),
                ("Group", "I-ORG"),
                ("expanded", "O"),
                ("in", "O"),
                (loc, "B-LOC"),
            ],
        };
        sentences.push(sent(&id, &pairs));
    }
    Corpus::from_sentences("test", sentences)
}

/// Criterion 8: the whole offline pipeline on a 200-sentence corpus, with a
/// strictly positive F1 drop for the memorisation stub on the RS variant.
#[test]
fn criterion_8_end_to_end_offline_pipeline() {
    let started = Instant::now();

    let train = e2e_train_corpus();
    let test = e2e_test_corpus(200);
    let stub = StubTagger::from_corpus(&train);

    // perturb (RS)
    let config = PerturbationConfig::new(PerturbationMethod::RandomSample, 7);
    let (adversarial, records) = random_sample(&test, &config).unwrap();
    assert_eq!(records.len(), 200);

    // tag
    let tokens_of = |c: &Corpus| -> Vec<Vec<Token>> {
        c.sentences().iter().map(|s| s.tokens().to_vec()).collect()
    };
    let pred_orig = tag_sentences(&stub, &tokens_of(&test), "test").unwrap();
    let pred_adv = tag_sentences(&stub, &tokens_of(&adversarial), "test").unwrap();

    // evaluate
    let report_orig = evaluate(&test, &pred_orig).unwrap();
    let report_adv = evaluate(&adversarial, &pred_adv).unwrap();
    let f1_orig = report_orig.strict_micro_f1.f1;
    let f1_adv = report_adv.strict_micro_f1.f1;
    assert!(
        (f1_orig - 1.0).abs() < 1e-12,
        "stub must be perfect on the original set, got {f1_orig}"
    );
    assert!(
        f1_adv < f1_orig,
        "criterion 8: FAIL — no F1 drop on the RS variant ({f1_orig} -> {f1_adv})"
    );

    // compare
    let comparison = advner_core::evaluate::compare_reports(&report_orig, &report_adv).unwrap();
    let overall_strict = comparison
        .f1
        .iter()
        .find(|row| row.scope == "overall" && row.schema == EvalSchema::Strict)
        .unwrap();
    assert!(overall_strict.delta < 0.0, "strict delta must be negative");

    // split 60/40
    let (part60, part40) = split_corpus(
        &adversarial,
        &SplitSpec {
            ratio: 0.6,
            seed: 7,
        },
    )
    .unwrap();
    assert_eq!(part60.len(), 120);
    assert_eq!(part40.len(), 80);

    // augment
    let augmented = concat_corpora(&train, &part60);
    assert_eq!(augmented.len(), train.len() + 120);

    // significance: stub F1 on RS variants across seeds vs the original.
    let seeds: Vec<u64> = (1..=6).collect();
    let mut orig_obs = Vec::new();
    let mut adv_obs = Vec::new();
    for &seed in &seeds {
        let config = PerturbationConfig::new(PerturbationMethod::RandomSample, seed);
        let (variant, _) = random_sample(&test, &config).unwrap();
        let pred = tag_sentences(&stub, &tokens_of(&variant), "test").unwrap();
        let f1 = micro_f1(&variant, &pred).unwrap().f1;
        orig_obs.push((seed, f1_orig));
        adv_obs.push((seed, f1));
    }
    let orig_series = RunSeries::new("orig", orig_obs).unwrap();
    let adv_series = RunSeries::new("adv-rs", adv_obs).unwrap();
    let ttest = paired_t_test(&orig_series, &adv_series).unwrap();
    assert!(
        ttest.mean_difference > 0.0,
        "original must outperform RS on average"
    );
    assert!((0.0..=1.0).contains(&ttest.p_value));

    report_line(
        "8 (end-to-end offline pipeline, 200 sentences)",
        started,
        Duration::from_secs(10),
    );
}
