//! BIO-tagged NER corpora: parsing, validation, serialisation, span
//! extraction and re-injection, and seeded splitting.
//!
//! IOB2 is the canonical internal scheme: every span starts with a `B-` tag
//! and `I-` tags only continue a span of the same type. Files using IOB1 or
//! containing dangling `I-` tags can be coerced at parse time (dangling `I-`
//! becomes `B-`); without coercion they are rejected with a line number.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: invalid IOB2 transition for tag `{tag}` (enable tag coercion to repair dangling I- tags)")]
    InvalidTransition { line: usize, tag: String },
    #[error("line {line}: unknown entity type `{label}` (not in the supplied tagset)")]
    UnknownEntityType { line: usize, label: String },
    #[error("invalid token `{0}`: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("invalid tag label `{0}`")]
    InvalidTag(String),
    #[error("sentence `{id}` has {tokens} tokens but {tags} tags")]
    LengthMismatch {
        id: String,
        tokens: usize,
        tags: usize,
    },
    #[error("sentence `{0}` is empty")]
    EmptySentence(String),
    #[error("sentence `{id}`, position {index}: invalid IOB2 tag sequence ({detail})")]
    InvalidIob2 {
        id: String,
        index: usize,
        detail: String,
    },
    #[error("span {start}..{end} does not fit or align with sentence `{id}`: {detail}")]
    SpanMismatch {
        id: String,
        start: usize,
        end: usize,
        detail: String,
    },
    #[error("replacement token list must be non-empty")]
    EmptyReplacement,
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("corpus `{name}` has {n} sentences; at least {min} required")]
    TooFewSentences { name: String, n: usize, min: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single pre-tokenized surface form. Never empty, never contains
/// whitespace (space, tab and newline are column/record delimiters in the
/// CoNLL format).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self, CorpusError> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(surface));
        }
        Ok(Token(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Split a whitespace-separated string into tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|t| Token(t.to_string()))
        .collect()
}

/// Join tokens with single spaces.
pub fn detokenize(tokens: &[Token]) -> String {
    let strs: Vec<&str> = tokens.iter().map(Token::as_str).collect();
    strs.join(" ")
}

/// One IOB2 tag: `O`, `B-<type>` or `I-<type>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TagLabel {
    Outside,
    Begin(String),
    Inside(String),
}

impl TagLabel {
    /// Parse the CoNLL string form. The entity type is everything after the
    /// first dash, so multi-dash types like `CREATIVE-WORK` survive intact.
    pub fn parse(raw: &str) -> Result<Self, CorpusError> {
        if raw == "O" {
            return Ok(TagLabel::Outside);
        }
        match raw.split_once('-') {
            Some(("B", ty)) if !ty.is_empty() => Ok(TagLabel::Begin(ty.to_string())),
            Some(("I", ty)) if !ty.is_empty() => Ok(TagLabel::Inside(ty.to_string())),
            _ => Err(CorpusError::InvalidTag(raw.to_string())),
        }
    }

    pub fn entity_type(&self) -> Option<&str> {
        match self {
            TagLabel::Outside => None,
            TagLabel::Begin(t) | TagLabel::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, TagLabel::Outside)
    }
}

impl fmt::Display for TagLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagLabel::Outside => f.write_str("O"),
            TagLabel::Begin(t) => write!(f, "B-{t}"),
            TagLabel::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

/// Check that a tag sequence is valid IOB2: every `I-t` must directly follow
/// a `B-t` or `I-t` of the same type.
pub fn validate_iob2(tags: &[TagLabel]) -> Result<(), (usize, String)> {
    for (i, tag) in tags.iter().enumerate() {
        if let TagLabel::Inside(ty) = tag {
            let ok = i > 0
                && match &tags[i - 1] {
                    TagLabel::Begin(prev) | TagLabel::Inside(prev) => prev == ty,
                    TagLabel::Outside => false,
                };
            if !ok {
                return Err((i, format!("dangling I-{ty}")));
            }
        }
    }
    Ok(())
}

/// A token sequence with aligned IOB2 tags. The atomic unit of every corpus
/// transformation; immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    id: String,
    tokens: Vec<Token>,
    tags: Vec<TagLabel>,
}

impl AnnotatedSentence {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<Token>,
        tags: Vec<TagLabel>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence(id));
        }
        if tokens.len() != tags.len() {
            return Err(CorpusError::LengthMismatch {
                id,
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        if let Err((index, detail)) = validate_iob2(&tags) {
            return Err(CorpusError::InvalidIob2 { id, index, detail });
        }
        Ok(Self { id, tokens, tags })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[TagLabel] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined sentence text (the form handed to a paraphraser).
    pub fn text(&self) -> String {
        detokenize(&self.tokens)
    }

    /// Copy with the token at `index` swapped out. Tags are untouched, so the
    /// result is valid by construction.
    pub fn with_token_at(&self, index: usize, token: Token) -> Self {
        let mut tokens = self.tokens.clone();
        tokens[index] = token;
        Self {
            id: self.id.clone(),
            tokens,
            tags: self.tags.clone(),
        }
    }

    /// Copy under a new identifier.
    pub fn with_id(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            tokens: self.tokens.clone(),
            tags: self.tags.clone(),
        }
    }

    /// Indices of Outside-tagged tokens.
    pub fn outside_positions(&self) -> Vec<usize> {
        self.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_outside())
            .map(|(i, _)| i)
            .collect()
    }
}

/// A contiguous entity: token range `[start, end)` plus type and covered
/// surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
    pub surface: Vec<Token>,
}

impl EntitySpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn surface_text(&self) -> String {
        detokenize(&self.surface)
    }
}

/// Extract the entity spans of a sentence, sorted by start and
/// non-overlapping. Concatenating Outside runs and spans reconstructs the
/// tag sequence exactly.
pub fn extract_spans(sentence: &AnnotatedSentence) -> Vec<EntitySpan> {
    let tags = sentence.tags();
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            TagLabel::Begin(ty) => {
                if let Some((start, t)) = open.take() {
                    spans.push((start, i, t.to_string()));
                }
                open = Some((i, ty));
            }
            TagLabel::Inside(_) => {
                // Valid IOB2 guarantees this continues the open span.
            }
            TagLabel::Outside => {
                if let Some((start, t)) = open.take() {
                    spans.push((start, i, t.to_string()));
                }
            }
        }
    }
    if let Some((start, t)) = open {
        spans.push((start, tags.len(), t.to_string()));
    }
    spans
        .into_iter()
        .map(|(start, end, entity_type)| EntitySpan {
            start,
            end,
            entity_type,
            surface: sentence.tokens()[start..end].to_vec(),
        })
        .collect()
}

/// Replace one entity span with a new surface form of the same type.
///
/// Tokens outside the span keep their content and relative order; the span
/// becomes `B-type` followed by `I-type` tags for the remaining replacement
/// tokens, so the sentence stays valid IOB2 even when the length changes.
pub fn replace_span(
    sentence: &AnnotatedSentence,
    span: &EntitySpan,
    new_tokens: &[Token],
) -> Result<AnnotatedSentence, CorpusError> {
    if new_tokens.is_empty() {
        return Err(CorpusError::EmptyReplacement);
    }
    let mismatch = |detail: &str| CorpusError::SpanMismatch {
        id: sentence.id().to_string(),
        start: span.start,
        end: span.end,
        detail: detail.to_string(),
    };
    if span.start >= span.end || span.end > sentence.len() {
        return Err(mismatch("out of bounds"));
    }
    match &sentence.tags()[span.start] {
        TagLabel::Begin(t) if *t == span.entity_type => {}
        other => {
            return Err(mismatch(&format!(
                "expected B-{}, found {other}",
                span.entity_type
            )))
        }
    }
    for tag in &sentence.tags()[span.start + 1..span.end] {
        match tag {
            TagLabel::Inside(t) if *t == span.entity_type => {}
            other => {
                return Err(mismatch(&format!(
                    "expected I-{}, found {other}",
                    span.entity_type
                )))
            }
        }
    }
    if sentence.tokens()[span.start..span.end] != span.surface[..] {
        return Err(mismatch("span surface does not match the sentence tokens"));
    }

    let mut tokens = Vec::with_capacity(sentence.len() + new_tokens.len() - span.len());
    tokens.extend_from_slice(&sentence.tokens()[..span.start]);
    tokens.extend_from_slice(new_tokens);
    tokens.extend_from_slice(&sentence.tokens()[span.end..]);

    let mut tags = Vec::with_capacity(tokens.len());
    tags.extend_from_slice(&sentence.tags()[..span.start]);
    tags.push(TagLabel::Begin(span.entity_type.clone()));
    for _ in 1..new_tokens.len() {
        tags.push(TagLabel::Inside(span.entity_type.clone()));
    }
    tags.extend_from_slice(&sentence.tags()[span.end..]);

    AnnotatedSentence::new(sentence.id().to_string(), tokens, tags)
}

/// An ordered collection of annotated sentences sharing one tag vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    sentences: Vec<AnnotatedSentence>,
    tagset: BTreeSet<String>,
}

impl Corpus {
    /// Build a corpus, collecting the tagset from the data.
    pub fn from_sentences(name: impl Into<String>, sentences: Vec<AnnotatedSentence>) -> Self {
        let tagset = sentences
            .iter()
            .flat_map(|s| s.tags().iter().filter_map(TagLabel::entity_type))
            .map(str::to_string)
            .collect();
        Self {
            name: name.into(),
            sentences,
            tagset,
        }
    }

    /// Build a corpus with an explicit tagset; every tag in the data must be
    /// a member.
    pub fn with_tagset(
        name: impl Into<String>,
        sentences: Vec<AnnotatedSentence>,
        tagset: BTreeSet<String>,
    ) -> Result<Self, CorpusError> {
        for sentence in &sentences {
            for tag in sentence.tags() {
                if let Some(ty) = tag.entity_type() {
                    if !tagset.contains(ty) {
                        return Err(CorpusError::UnknownEntityType {
                            line: 0,
                            label: ty.to_string(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            sentences,
            tagset,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sentences(&self) -> &[AnnotatedSentence] {
        &self.sentences
    }

    pub fn tagset(&self) -> &BTreeSet<String> {
        &self.tagset
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// All spans of all sentences, as `(sentence index, span)` pairs.
    pub fn all_spans(&self) -> Vec<(usize, EntitySpan)> {
        self.sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| extract_spans(s).into_iter().map(move |sp| (i, sp)))
            .collect()
    }
}

/// Options controlling [`parse_conll`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Name assigned to the corpus; sentence ids are `"<name>:<ordinal>"`.
    pub corpus_name: String,
    /// Zero-based index of the tag column. `None` selects the last column of
    /// each record (conll03 files carry POS/chunk columns before the NER
    /// column).
    pub tag_column: Option<usize>,
    /// When supplied, entity types outside this set are rejected.
    pub tagset: Option<BTreeSet<String>>,
    /// Repair IOB1 input / dangling `I-` tags by rewriting them to `B-`.
    pub coerce_tags: bool,
}

impl ParseOptions {
    pub fn new(corpus_name: impl Into<String>) -> Self {
        Self {
            corpus_name: corpus_name.into(),
            tag_column: None,
            tagset: None,
            coerce_tags: false,
        }
    }

    pub fn tag_column(mut self, column: usize) -> Self {
        self.tag_column = Some(column);
        self
    }

    pub fn tagset(mut self, tagset: BTreeSet<String>) -> Self {
        self.tagset = Some(tagset);
        self
    }

    pub fn coerce_tags(mut self, coerce: bool) -> Self {
        self.coerce_tags = coerce;
        self
    }
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self::new("corpus")
    }
}

/// What [`parse_conll`] produced besides the corpus itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseMeta {
    /// `-DOCSTART-` document markers dropped from the input.
    pub docstart_markers: usize,
    /// Tags rewritten from dangling `I-` to `B-` under coercion.
    pub coerced_tags: usize,
    /// Total input lines read.
    pub lines: usize,
}

/// A parsed corpus plus parse metadata.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    pub meta: ParseMeta,
}

/// Parse CoNLL-style text: one token per line, whitespace-separated columns,
/// blank lines between sentences, `-DOCSTART-` lines dropped (but counted).
///
/// Accepts LF or CRLF input. The token is column 0; the tag column defaults
/// to the last column of each record.
pub fn parse_conll(input: &str, options: &ParseOptions) -> Result<ParsedCorpus, CorpusError> {
    let mut meta = ParseMeta::default();
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut tags: Vec<TagLabel> = Vec::new();
    let mut tag_lines: Vec<usize> = Vec::new();

    let flush = |tokens: &mut Vec<Token>,
                 tags: &mut Vec<TagLabel>,
                 tag_lines: &mut Vec<usize>,
                 sentences: &mut Vec<AnnotatedSentence>,
                 meta: &ParseMeta|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let id = format!("{}:{}", options.corpus_name, sentences.len());
        let _ = meta;
        let sentence = AnnotatedSentence::new(id, std::mem::take(tokens), std::mem::take(tags))?;
        tag_lines.clear();
        sentences.push(sentence);
        Ok(())
    };

    for (lineno, raw_line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        meta.lines += 1;
        let line = raw_line.trim_end_matches('\r');
        let mut columns = line.split_whitespace();
        let Some(first) = columns.next() else {
            // Blank (or whitespace-only) line: sentence boundary.
            flush(
                &mut tokens,
                &mut tags,
                &mut tag_lines,
                &mut sentences,
                &meta,
            )?;
            continue;
        };
        if first == "-DOCSTART-" {
            meta.docstart_markers += 1;
            continue;
        }
        let rest: Vec<&str> = columns.collect();
        let ncols = 1 + rest.len();
        let raw_tag = match options.tag_column {
            None => {
                if rest.is_empty() {
                    return Err(CorpusError::MalformedLine {
                        line: lineno,
                        detail: format!("expected at least 2 columns, found {ncols}"),
                    });
                }
                rest[rest.len() - 1]
            }
            Some(0) => {
                return Err(CorpusError::MalformedLine {
                    line: lineno,
                    detail: "tag column 0 is the token column".to_string(),
                })
            }
            Some(c) => {
                if c >= ncols {
                    return Err(CorpusError::MalformedLine {
                        line: lineno,
                        detail: format!("tag column {c} requested but line has {ncols} column(s)"),
                    });
                }
                rest[c - 1]
            }
        };

        let mut tag = TagLabel::parse(raw_tag).map_err(|_| CorpusError::MalformedLine {
            line: lineno,
            detail: format!("unparseable tag `{raw_tag}`"),
        })?;
        if let Some(ty) = tag.entity_type() {
            if let Some(allowed) = &options.tagset {
                if !allowed.contains(ty) {
                    return Err(CorpusError::UnknownEntityType {
                        line: lineno,
                        label: ty.to_string(),
                    });
                }
            }
        }
        // IOB2 check against the previous tag of the sentence under
        // construction, so the error carries the offending line number.
        if let TagLabel::Inside(ty) = &tag {
            let continues = match tags.last() {
                Some(TagLabel::Begin(prev)) | Some(TagLabel::Inside(prev)) => prev == ty,
                _ => false,
            };
            if !continues {
                if options.coerce_tags {
                    meta.coerced_tags += 1;
                    tag = TagLabel::Begin(ty.clone());
                } else {
                    return Err(CorpusError::InvalidTransition {
                        line: lineno,
                        tag: raw_tag.to_string(),
                    });
                }
            }
        }
        tokens.push(Token::new(first)?);
        tags.push(tag);
        tag_lines.push(lineno);
    }
    flush(
        &mut tokens,
        &mut tags,
        &mut tag_lines,
        &mut sentences,
        &meta,
    )?;

    let corpus = match &options.tagset {
        Some(tagset) => Corpus::with_tagset(&options.corpus_name, sentences, tagset.clone())?,
        None => Corpus::from_sentences(&options.corpus_name, sentences),
    };
    Ok(ParsedCorpus { corpus, meta })
}

/// Column delimiter for CoNLL output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Space,
    Tab,
}

impl Delimiter {
    fn as_str(self) -> &'static str {
        match self {
            Delimiter::Space => " ",
            Delimiter::Tab => "\t",
        }
    }
}

/// Output layout for [`serialize_conll`]: `token [filler...] tag` per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLayout {
    pub delimiter: Delimiter,
    /// Number of filler columns emitted between token and tag, for files
    /// whose consumers expect a fixed column count.
    pub filler_columns: usize,
    pub filler: String,
}

impl Default for ColumnLayout {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Space,
            filler_columns: 0,
            filler: "-X-".to_string(),
        }
    }
}

/// Serialise a corpus to CoNLL text: token/tag lines with one blank line
/// after each sentence, LF newlines. Parsing the output with matching
/// options reproduces the corpus exactly.
pub fn serialize_conll(corpus: &Corpus, layout: &ColumnLayout) -> String {
    let mut out = String::new();
    let delim = layout.delimiter.as_str();
    for sentence in corpus.sentences() {
        for (token, tag) in sentence.tokens().iter().zip(sentence.tags()) {
            out.push_str(token.as_str());
            for _ in 0..layout.filler_columns {
                out.push_str(delim);
                out.push_str(&layout.filler);
            }
            out.push_str(delim);
            out.push_str(&tag.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// How to split a corpus in two: the first part receives `round(ratio * N)`
/// sentences chosen by a seeded uniform shuffle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub ratio: f64,
    pub seed: u64,
}

/// Partition a corpus into two disjoint, jointly exhaustive parts.
///
/// Selection is a seeded uniform shuffle; each part keeps the input sentence
/// order. The first part has `round(ratio * N)` sentences (half-up).
/// Deterministic for a fixed seed.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
    if !(spec.ratio > 0.0 && spec.ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(spec.ratio));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::TooFewSentences {
            name: corpus.name().to_string(),
            n,
            min: 2,
        });
    }
    let k = (spec.ratio * n as f64 + 0.5).floor() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    SplitMix64::new(spec.seed).shuffle(&mut indices);
    let mut first: Vec<usize> = indices[..k].to_vec();
    let mut second: Vec<usize> = indices[k..].to_vec();
    first.sort_unstable();
    second.sort_unstable();

    let pick = |idx: &[usize]| -> Vec<AnnotatedSentence> {
        idx.iter().map(|&i| corpus.sentences()[i].clone()).collect()
    };
    let part = |sentences| Corpus {
        name: corpus.name.clone(),
        sentences,
        tagset: corpus.tagset.clone(),
    };
    Ok((part(pick(&first)), part(pick(&second))))
}

/// Concatenate two corpora: sentences of `a` followed by sentences of `b`,
/// tagsets unioned. Colliding sentence ids are disambiguated by prefixing
/// the corpus name.
pub fn concat_corpora(a: &Corpus, b: &Corpus) -> Corpus {
    let mut seen: HashSet<String> = a.sentences.iter().map(|s| s.id().to_string()).collect();
    let mut sentences = a.sentences.clone();
    for sentence in &b.sentences {
        let mut id = sentence.id().to_string();
        if seen.contains(&id) {
            id = format!("{}:{}", b.name, id);
            let mut n = 2usize;
            while seen.contains(&id) {
                id = format!("{}:{}#{}", b.name, sentence.id(), n);
                n += 1;
            }
        }
        seen.insert(id.clone());
        sentences.push(sentence.with_id(id));
    }
    Corpus {
        name: format!("{}+{}", a.name, b.name),
        sentences,
        tagset: a.tagset.union(&b.tagset).cloned().collect(),
    }
}
