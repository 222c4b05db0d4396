//! Toolkit for probing the robustness of NER models: generate adversarial
//! variants of BIO-tagged corpora, score predictions with strict micro-F1 and
//! a four-schema fine-grained scheme, and drive augmentation / significance
//! workflows.
//!
//! The crate is organised around five building blocks:
//!
//! * [`corpus`] — CoNLL parsing/serialisation, span extraction, splits.
//! * [`perturb`] — the five adversarial generators (random sampling,
//!   gazetteer replacement, context masking, paraphrase remapping, and
//!   masking + random sampling), all deterministic under a seed.
//! * [`mod@evaluate`] — entity-level evaluation: seqeval-style strict micro-F1
//!   plus strict/exact/partial/type schema counts, overall and per type.
//! * [`stats`] — multi-run aggregation and the paired t-test.
//! * [`modelclient`] — HTTP clients for external tagger / mask-filler /
//!   paraphraser roles, with deterministic in-process stubs so every
//!   pipeline also runs offline.

pub mod corpus;
pub mod evaluate;
pub mod gazetteer;
pub mod modelclient;
pub mod perturb;
pub mod rng;
pub mod stats;

pub use corpus::{
    concat_corpora, extract_spans, parse_conll, replace_span, serialize_conll, split_corpus,
    AnnotatedSentence, ColumnLayout, Corpus, CorpusError, EntitySpan, ParseOptions, SplitSpec,
    TagLabel, Token,
};
pub use evaluate::{
    classify_spans, compare_reports, evaluate, micro_f1, prf_from_counts, ComparisonTable,
    EvalError, EvalReport, EvalSchema, Prf, SchemaCounts,
};
pub use gazetteer::Gazetteer;
pub use gazetteer::GazetteerError;
pub use modelclient::{
    fill_mask, paraphrase_for, tag_sentences, ClientError, FileParaphraser, HttpMaskFiller,
    HttpParaphraser, HttpTagger, IdentityParaphraser, MaskCandidate, ModelEndpoint, ModelRole,
    Paraphraser, StubMaskFiller, StubTagger, Tagger, TokenSuggester,
};
pub use perturb::{
    gazetteer_replace, mask_context, mask_plus_random, paraphrase_corpus, random_sample,
    records_to_jsonl, remap_paraphrase, DiscardReason, PerturbError, PerturbationConfig,
    PerturbationMethod, PerturbationRecord, RemapOutcome, SpanReplacement,
};
pub use stats::{
    paired_t_test, parse_run_series, summarize, RunObservation, RunSeries, StatsError, TTestResult,
};
