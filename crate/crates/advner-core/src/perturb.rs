//! The five adversarial corpus generators, all deterministic under a seed:
//!
//! * `rs` — random sampling: entity occurrences of the same type are
//!   shuffled throughout the test set.
//! * `faker` — gazetteer replacement: selected entity types (PER and LOC by
//!   default) are replaced by surface forms drawn from per-locale lists.
//! * `mask` — context masking: up to `max_masks` non-entity tokens per
//!   sentence are replaced by a mask-filler's top suggestion; entities and
//!   all tags are untouched.
//! * `para` — paraphrase remapping: entity token sequences are located in an
//!   externally produced paraphrase and re-tagged there; sentences whose
//!   entities cannot be mapped unambiguously are discarded.
//! * `m+r` — masking followed by random sampling, each stage consuming a
//!   sub-seed derived from the configured seed via the splitmix64 finalizer.
//!
//! Every sentence's random draws come from a per-sentence stream derived
//! from `(seed, sentence ordinal)`, so results are independent of iteration
//! or scheduling order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    extract_spans, replace_span, AnnotatedSentence, Corpus, CorpusError, TagLabel, Token,
};
use crate::gazetteer::Gazetteer;
use crate::modelclient::{ClientError, Paraphraser, TokenSuggester};
use crate::rng::{derive_seed, label_salt, SplitMix64};

/// Candidates requested per masked position; only the top usable one is
/// applied.
const MASK_TOP_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("config method is `{found}` but `{expected}` was invoked")]
    MethodMismatch {
        expected: PerturbationMethod,
        found: PerturbationMethod,
    },
    #[error("invalid perturbation config: {0}")]
    InvalidConfig(String),
    #[error("gazetteer has no entry for ({entity_type}, {locale})")]
    MissingGazetteerEntry { entity_type: String, locale: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// The five generation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationMethod {
    #[serde(rename = "rs")]
    RandomSample,
    #[serde(rename = "faker")]
    Faker,
    #[serde(rename = "mask")]
    Mask,
    #[serde(rename = "para")]
    Paraphrase,
    #[serde(rename = "m+r")]
    MaskPlusRandom,
}

impl PerturbationMethod {
    pub fn slug(self) -> &'static str {
        match self {
            PerturbationMethod::RandomSample => "rs",
            PerturbationMethod::Faker => "faker",
            PerturbationMethod::Mask => "mask",
            PerturbationMethod::Paraphrase => "para",
            PerturbationMethod::MaskPlusRandom => "m+r",
        }
    }
}

impl fmt::Display for PerturbationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for PerturbationMethod {
    type Err = PerturbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(PerturbationMethod::RandomSample),
            "faker" => Ok(PerturbationMethod::Faker),
            "mask" => Ok(PerturbationMethod::Mask),
            "para" => Ok(PerturbationMethod::Paraphrase),
            "m+r" | "mr" => Ok(PerturbationMethod::MaskPlusRandom),
            other => Err(PerturbError::InvalidConfig(format!(
                "unknown method `{other}` (expected rs, faker, mask, para or m+r)"
            ))),
        }
    }
}

/// Settings shared by the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationConfig {
    pub method: PerturbationMethod,
    pub seed: u64,
    /// Upper bound on masked positions per sentence; the actual count is
    /// drawn uniformly from `1..=max_masks` per sentence.
    pub max_masks: usize,
    /// Locale pool for gazetteer replacement; the locale is drawn per
    /// entity.
    pub locales: Vec<String>,
    /// Entity types subject to gazetteer replacement.
    pub faker_types: BTreeSet<String>,
}

impl PerturbationConfig {
    pub fn new(method: PerturbationMethod, seed: u64) -> Self {
        Self {
            method,
            seed,
            max_masks: 3,
            locales: vec!["en-US".into(), "en-CA".into(), "en-IN".into()],
            faker_types: ["PER".to_string(), "LOC".to_string()].into(),
        }
    }

    /// Sub-seed consumed by stage `stage` of a composite method.
    pub fn stage_seed(&self, stage: u64) -> u64 {
        derive_seed(self.seed, stage)
    }

    fn expecting(&self, expected: PerturbationMethod) -> Result<(), PerturbError> {
        if self.method != expected {
            return Err(PerturbError::MethodMismatch {
                expected,
                found: self.method,
            });
        }
        Ok(())
    }
}

/// One replaced entity occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanReplacement {
    pub old_surface: String,
    pub new_surface: String,
    pub entity_type: String,
}

/// Why a sentence was dropped from a paraphrase test set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DiscardReason {
    /// An entity's token sequence does not occur in the paraphrase (the
    /// paraphraser rewrote or dropped it).
    EntityNotFound { surface: String },
    /// The sequence occurs a different number of times than in the original,
    /// so the mapping is ambiguous.
    EntityCountMismatch {
        surface: String,
        original: usize,
        paraphrase: usize,
    },
    /// Two mapped entity ranges overlap in the paraphrase.
    EntityOverlap { first: String, second: String },
    /// The paraphrase has no tokens.
    EmptyParaphrase,
    /// No paraphrase was available for this sentence id.
    NoParaphrase,
}

/// Per-sentence account of what a generator changed; one record per input
/// sentence. A `discarded` record implies the sentence is absent from the
/// output corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub sentence_id: String,
    pub method: PerturbationMethod,
    pub changed_token_indices: Vec<usize>,
    pub replaced_spans: Vec<SpanReplacement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_positions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discarded: Option<DiscardReason>,
}

impl PerturbationRecord {
    fn untouched(sentence_id: &str, method: PerturbationMethod) -> Self {
        Self {
            sentence_id: sentence_id.to_string(),
            method,
            changed_token_indices: Vec::new(),
            replaced_spans: Vec::new(),
            failed_positions: Vec::new(),
            discarded: None,
        }
    }
}

/// Serialise records as JSON-lines (one record per input sentence).
pub fn records_to_jsonl(records: &[PerturbationRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serialises"));
        out.push('\n');
    }
    out
}

fn perturbed_name(corpus: &Corpus, method: PerturbationMethod) -> String {
    format!("{}-{}", corpus.name(), method.slug())
}

fn rebuild(
    corpus: &Corpus,
    method: PerturbationMethod,
    sentences: Vec<AnnotatedSentence>,
) -> Corpus {
    Corpus::with_tagset(
        perturbed_name(corpus, method),
        sentences,
        corpus.tagset().clone(),
    )
    .expect("perturbation preserves the tag vocabulary")
}

/// Apply `(span ordinal -> new surface)` assignments to one sentence,
/// right-to-left so earlier span indices stay valid while lengths change.
fn apply_surface_assignments(
    sentence: &AnnotatedSentence,
    assignments: &BTreeMap<usize, Vec<Token>>,
) -> Result<(AnnotatedSentence, Vec<SpanReplacement>), PerturbError> {
    let spans = extract_spans(sentence);
    let mut replaced = Vec::new();
    let mut updated = sentence.clone();
    for (ordinal, new_surface) in assignments.iter().rev() {
        let span = &extract_spans(&updated)[*ordinal];
        debug_assert_eq!(span.entity_type, spans[*ordinal].entity_type);
        replaced.push(SpanReplacement {
            old_surface: span.surface_text(),
            new_surface: crate::corpus::detokenize(new_surface),
            entity_type: span.entity_type.clone(),
        });
        updated = replace_span(&updated, span, new_surface)?;
    }
    replaced.reverse();
    Ok((updated, replaced))
}

/// Random Sampling: for each entity type, permute the multiset of entity
/// surface forms across the whole corpus (a seeded shuffle of occurrences
/// within type). Non-entity tokens, sentence order, and span
/// types-by-ordinal are unchanged.
///
/// A type with a single occurrence corpus-wide keeps its surface (the
/// permutation is the identity for it); that assignment is still recorded.
pub fn random_sample(
    corpus: &Corpus,
    config: &PerturbationConfig,
) -> Result<(Corpus, Vec<PerturbationRecord>), PerturbError> {
    config.expecting(PerturbationMethod::RandomSample)?;

    // Occurrence slots and surfaces per type, in corpus order.
    let mut surfaces_by_type: BTreeMap<String, Vec<Vec<Token>>> = BTreeMap::new();
    let mut slots_by_type: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (sentence_idx, sentence) in corpus.sentences().iter().enumerate() {
        for (ordinal, span) in extract_spans(sentence).into_iter().enumerate() {
            surfaces_by_type
                .entry(span.entity_type.clone())
                .or_default()
                .push(span.surface.clone());
            slots_by_type
                .entry(span.entity_type)
                .or_default()
                .push((sentence_idx, ordinal));
        }
    }

    // Shuffle surfaces within each type on an independent per-type stream.
    let mut assignment: BTreeMap<usize, BTreeMap<usize, Vec<Token>>> = BTreeMap::new();
    for (entity_type, mut surfaces) in surfaces_by_type {
        let mut rng = SplitMix64::new(derive_seed(config.seed, label_salt(&entity_type)));
        rng.shuffle(&mut surfaces);
        for ((sentence_idx, ordinal), surface) in slots_by_type[&entity_type].iter().zip(surfaces) {
            assignment
                .entry(*sentence_idx)
                .or_default()
                .insert(*ordinal, surface);
        }
    }

    let mut sentences = Vec::with_capacity(corpus.len());
    let mut records = Vec::with_capacity(corpus.len());
    for (sentence_idx, sentence) in corpus.sentences().iter().enumerate() {
        let mut record = PerturbationRecord::untouched(sentence.id(), config.method);
        match assignment.get(&sentence_idx) {
            None => sentences.push(sentence.clone()),
            Some(assignments) => {
                let (updated, replaced) = apply_surface_assignments(sentence, assignments)?;
                record.replaced_spans = replaced;
                sentences.push(updated);
            }
        }
        records.push(record);
    }
    Ok((rebuild(corpus, config.method, sentences), records))
}

/// Gazetteer replacement: every span whose type is in `config.faker_types`
/// is replaced by a surface form drawn uniformly from the gazetteer, after
/// first drawing a locale uniformly from `config.locales` (per entity).
/// Spans of other types and all non-entity tokens are unchanged.
pub fn gazetteer_replace(
    corpus: &Corpus,
    gazetteer: &Gazetteer,
    config: &PerturbationConfig,
) -> Result<(Corpus, Vec<PerturbationRecord>), PerturbError> {
    config.expecting(PerturbationMethod::Faker)?;
    if !config.faker_types.is_empty() && config.locales.is_empty() {
        return Err(PerturbError::InvalidConfig(
            "gazetteer replacement needs at least one locale".to_string(),
        ));
    }
    // Fail before any mutation if coverage is incomplete.
    for entity_type in &config.faker_types {
        for locale in &config.locales {
            if !gazetteer.has_entry(entity_type, locale) {
                return Err(PerturbError::MissingGazetteerEntry {
                    entity_type: entity_type.clone(),
                    locale: locale.clone(),
                });
            }
        }
    }

    let mut sentences = Vec::with_capacity(corpus.len());
    let mut records = Vec::with_capacity(corpus.len());
    for (sentence_idx, sentence) in corpus.sentences().iter().enumerate() {
        let mut rng = SplitMix64::new(derive_seed(config.seed, sentence_idx as u64));
        let mut assignments: BTreeMap<usize, Vec<Token>> = BTreeMap::new();
        for (ordinal, span) in extract_spans(sentence).into_iter().enumerate() {
            if !config.faker_types.contains(&span.entity_type) {
                continue;
            }
            let locale = rng.choose(&config.locales).clone();
            let forms = gazetteer
                .forms(&span.entity_type, &locale)
                .expect("coverage checked above");
            assignments.insert(ordinal, rng.choose(forms).clone());
        }
        let mut record = PerturbationRecord::untouched(sentence.id(), config.method);
        if assignments.is_empty() {
            sentences.push(sentence.clone());
        } else {
            let (updated, replaced) = apply_surface_assignments(sentence, &assignments)?;
            record.replaced_spans = replaced;
            sentences.push(updated);
        }
        records.push(record);
    }
    Ok((rebuild(corpus, config.method, sentences), records))
}

/// Context masking: per sentence, `k = min(U, |Outside positions|)` tokens
/// (with `U` drawn uniformly from `1..=max_masks`) are selected uniformly
/// without replacement among Outside-tagged positions and replaced by the
/// suggester's top usable suggestion, filled left-to-right with each fill
/// visible to subsequent calls. Entity tokens and all tags are untouched.
///
/// A suggester failure on a position keeps the original token and records
/// the position; a sentence with no Outside tokens passes through unchanged.
pub fn mask_context(
    corpus: &Corpus,
    suggester: &dyn TokenSuggester,
    config: &PerturbationConfig,
) -> Result<(Corpus, Vec<PerturbationRecord>), PerturbError> {
    if config.method != PerturbationMethod::Mask
        && config.method != PerturbationMethod::MaskPlusRandom
    {
        return Err(PerturbError::MethodMismatch {
            expected: PerturbationMethod::Mask,
            found: config.method,
        });
    }
    if config.max_masks == 0 {
        return Err(PerturbError::InvalidConfig(
            "max_masks must be at least 1".to_string(),
        ));
    }

    let mut sentences = Vec::with_capacity(corpus.len());
    let mut records = Vec::with_capacity(corpus.len());
    for (sentence_idx, sentence) in corpus.sentences().iter().enumerate() {
        let mut record = PerturbationRecord::untouched(sentence.id(), config.method);
        let outside = sentence.outside_positions();
        if outside.is_empty() {
            sentences.push(sentence.clone());
            records.push(record);
            continue;
        }
        let mut rng = SplitMix64::new(derive_seed(config.seed, sentence_idx as u64));
        let wanted = rng.range_inclusive(1, config.max_masks as u64) as usize;
        let positions = rng.sample_distinct(&outside, wanted.min(outside.len()));

        let mut updated = sentence.clone();
        for position in positions {
            let original = updated.tokens()[position].as_str().to_string();
            match suggester.suggest(updated.tokens(), position, MASK_TOP_K) {
                Ok(candidates) => {
                    let replacement = candidates
                        .iter()
                        .filter(|c| c.token != original)
                        .find_map(|c| Token::new(&c.token).ok());
                    if let Some(token) = replacement {
                        updated = updated.with_token_at(position, token);
                        record.changed_token_indices.push(position);
                    }
                    // All candidates equal to the original (or unusable as
                    // tokens): a no-op fill, neither changed nor failed.
                }
                Err(_) => record.failed_positions.push(position),
            }
        }
        sentences.push(updated);
        records.push(record);
    }
    Ok((rebuild(corpus, config.method, sentences), records))
}

/// Outcome of re-deriving tags on a paraphrased sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum RemapOutcome {
    Mapped(AnnotatedSentence),
    Discarded(DiscardReason),
}

fn occurrence_starts(needle: &[Token], haystack: &[Token]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| &haystack[i..i + needle.len()] == needle)
        .collect()
}

/// Map the entity annotations of `original` onto an externally produced
/// paraphrase: each entity's exact token sequence is located in the
/// paraphrase (case-sensitively, as a contiguous subsequence), located
/// ranges receive `B-`/`I-` tags of the span's type, and every other token
/// becomes Outside.
///
/// The sentence is discarded when any entity's sequence is not found, is
/// found a different number of times than it occurs in the original, or
/// when located ranges overlap.
pub fn remap_paraphrase(original: &AnnotatedSentence, paraphrase_tokens: &[Token]) -> RemapOutcome {
    if paraphrase_tokens.is_empty() {
        return RemapOutcome::Discarded(DiscardReason::EmptyParaphrase);
    }
    let spans = extract_spans(original);
    let mut tags = vec![TagLabel::Outside; paraphrase_tokens.len()];
    if spans.is_empty() {
        let sentence = AnnotatedSentence::new(original.id(), paraphrase_tokens.to_vec(), tags)
            .expect("all-O tags are valid");
        return RemapOutcome::Mapped(sentence);
    }

    let mut mapped: Vec<(usize, usize, String)> = Vec::new();
    for span in &spans {
        let in_original = occurrence_starts(&span.surface, original.tokens());
        let in_paraphrase = occurrence_starts(&span.surface, paraphrase_tokens);
        if in_paraphrase.is_empty() {
            return RemapOutcome::Discarded(DiscardReason::EntityNotFound {
                surface: span.surface_text(),
            });
        }
        if in_paraphrase.len() != in_original.len() {
            return RemapOutcome::Discarded(DiscardReason::EntityCountMismatch {
                surface: span.surface_text(),
                original: in_original.len(),
                paraphrase: in_paraphrase.len(),
            });
        }
        // The span sits at some occurrence ordinal of its own surface in the
        // original; it maps to the same ordinal in the paraphrase.
        let ordinal = in_original
            .iter()
            .position(|&start| start == span.start)
            .expect("a span starts at one of its surface's occurrences");
        let target = in_paraphrase[ordinal];
        mapped.push((
            target,
            target + span.surface.len(),
            span.entity_type.clone(),
        ));
    }

    let mut by_start = mapped.clone();
    by_start.sort_by_key(|(start, _, _)| *start);
    for pair in by_start.windows(2) {
        if pair[1].0 < pair[0].1 {
            return RemapOutcome::Discarded(DiscardReason::EntityOverlap {
                first: format!("{}..{}", pair[0].0, pair[0].1),
                second: format!("{}..{}", pair[1].0, pair[1].1),
            });
        }
    }

    for (start, end, entity_type) in mapped {
        tags[start] = TagLabel::Begin(entity_type.clone());
        for tag in tags.iter_mut().take(end).skip(start + 1) {
            *tag = TagLabel::Inside(entity_type.clone());
        }
    }
    let sentence = AnnotatedSentence::new(original.id(), paraphrase_tokens.to_vec(), tags)
        .expect("non-overlapping ranges yield valid IOB2");
    RemapOutcome::Mapped(sentence)
}

/// Paraphrase a whole corpus: fetch a paraphrase per sentence, remap the
/// annotations, and drop (with a reason) every sentence whose mapping
/// fails. Mirrors the retention shortfall of paraphrase-based test sets.
pub fn paraphrase_corpus(
    corpus: &Corpus,
    paraphraser: &dyn Paraphraser,
    config: &PerturbationConfig,
) -> Result<(Corpus, Vec<PerturbationRecord>), PerturbError> {
    config.expecting(PerturbationMethod::Paraphrase)?;
    let mut sentences = Vec::new();
    let mut records = Vec::with_capacity(corpus.len());
    for sentence in corpus.sentences() {
        let mut record = PerturbationRecord::untouched(sentence.id(), config.method);
        match crate::modelclient::paraphrase_for(paraphraser, sentence)? {
            None => record.discarded = Some(DiscardReason::NoParaphrase),
            Some(tokens) => match remap_paraphrase(sentence, &tokens) {
                RemapOutcome::Mapped(mapped) => {
                    record.changed_token_indices = mapped
                        .tokens()
                        .iter()
                        .enumerate()
                        .filter(|(i, t)| sentence.tokens().get(*i) != Some(*t))
                        .map(|(i, _)| i)
                        .collect();
                    sentences.push(mapped);
                }
                RemapOutcome::Discarded(reason) => record.discarded = Some(reason),
            },
        }
        records.push(record);
    }
    Ok((rebuild(corpus, config.method, sentences), records))
}

/// Masking + Random Sampling: `mask_context` first, then `random_sample` on
/// the masked corpus, each stage consuming a sub-seed derived
/// deterministically from `config.seed`. Records carry both change sets.
pub fn mask_plus_random(
    corpus: &Corpus,
    suggester: &dyn TokenSuggester,
    config: &PerturbationConfig,
) -> Result<(Corpus, Vec<PerturbationRecord>), PerturbError> {
    config.expecting(PerturbationMethod::MaskPlusRandom)?;
    let mask_config = PerturbationConfig {
        method: PerturbationMethod::Mask,
        seed: config.stage_seed(0),
        ..config.clone()
    };
    let (masked, mask_records) = mask_context(corpus, suggester, &mask_config)?;
    let rs_config = PerturbationConfig {
        method: PerturbationMethod::RandomSample,
        seed: config.stage_seed(1),
        ..config.clone()
    };
    let (shuffled, rs_records) = random_sample(&masked, &rs_config)?;

    let records = mask_records
        .into_iter()
        .zip(rs_records)
        .map(|(mask, rs)| {
            debug_assert_eq!(mask.sentence_id, rs.sentence_id);
            PerturbationRecord {
                sentence_id: mask.sentence_id,
                method: config.method,
                changed_token_indices: mask.changed_token_indices,
                replaced_spans: rs.replaced_spans,
                failed_positions: mask.failed_positions,
                discarded: None,
            }
        })
        .collect();
    let renamed = Corpus::with_tagset(
        perturbed_name(corpus, config.method),
        shuffled.sentences().to_vec(),
        corpus.tagset().clone(),
    )?;
    Ok((renamed, records))
}
