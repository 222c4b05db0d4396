//! Clients for the three external model roles — NER tagger, mask-filler and
//! paraphraser — plus deterministic in-process stubs so that every pipeline
//! also runs offline.
//!
//! The wire protocol is JSON over HTTP, POSTed to the endpoint URL:
//!
//! * tagger: `{"sentences": [[tok, ...], ...]}` → `{"tags": [[label, ...], ...]}`
//! * mask-filler: `{"tokens": [...], "index": i, "top_k": k}` →
//!   `{"candidates": [{"token": ..., "score": ...}, ...]}` (the token at
//!   `index` is replaced by the endpoint's mask sentinel, `[MASK]` by default)
//! * paraphraser: `{"text": ...}` → `{"paraphrase": ...}`
//!
//! Requests are idempotent and retried up to the configured count; batches
//! run concurrently up to `max_in_flight` and results are always joined back
//! into input order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, AnnotatedSentence, Corpus, CorpusError, TagLabel, Token};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(
        "transport failure for batch {batch} against {url} after {attempts} attempt(s): {detail}"
    )]
    Transport {
        url: String,
        batch: usize,
        attempts: u32,
        detail: String,
    },
    #[error("malformed response for batch {batch}: {detail}")]
    MalformedResponse { batch: usize, detail: String },
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
    #[error("mask position {index} out of range for a sentence of {len} tokens")]
    BadMaskIndex { index: usize, len: usize },
    #[error("paraphrase file line {line} is malformed: {detail}")]
    BadParaphraseLine { line: usize, detail: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Which model a [`ModelEndpoint`] speaks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelRole {
    Tagger,
    MaskFill,
    Paraphrase,
}

/// Connection settings for one external model.
#[derive(Debug, Clone)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub role: ModelRole,
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub retries: u32,
    pub bearer_token: Option<String>,
    /// Literal token substituted at the masked index before a fill request.
    pub mask_sentinel: String,
    /// Sentences per tagger request.
    pub batch_size: usize,
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, role: ModelRole) -> Self {
        Self {
            base_url: base_url.into(),
            role,
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
            retries: 2,
            bearer_token: None,
            mask_sentinel: "[MASK]".to_string(),
            batch_size: 32,
        }
    }
}

/// A ranked mask-fill candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCandidate {
    pub token: String,
    pub score: f64,
}

/// Produces one tag per token for each input sentence.
pub trait Tagger: Sync {
    fn tag_batch(&self, sentences: &[Vec<Token>]) -> Result<Vec<Vec<TagLabel>>, ClientError>;
}

/// Produces ranked replacement candidates for one masked position.
pub trait TokenSuggester: Sync {
    fn suggest(
        &self,
        tokens: &[Token],
        index: usize,
        top_k: usize,
    ) -> Result<Vec<MaskCandidate>, ClientError>;
}

/// Produces a paraphrase for a sentence, or `None` when no paraphrase is
/// available for that sentence id (pre-paraphrased file workflows).
pub trait Paraphraser: Sync {
    fn paraphrase(&self, sentence_id: &str, text: &str) -> Result<Option<Vec<Token>>, ClientError>;
}

/// Tag sentences and assemble the predictions into a corpus aligned 1:1 with
/// the input (ids `"<name>:<ordinal>"`).
///
/// Model output is not guaranteed to be valid IOB2; dangling `I-` tags in
/// responses are repaired to `B-` so the prediction corpus always satisfies
/// the corpus invariants.
pub fn tag_sentences(
    tagger: &dyn Tagger,
    sentences: &[Vec<Token>],
    corpus_name: &str,
) -> Result<Corpus, ClientError> {
    for (i, sentence) in sentences.iter().enumerate() {
        if sentence.is_empty() {
            return Err(ClientError::EmptySentence(i));
        }
    }
    let tags = tagger.tag_batch(sentences)?;
    if tags.len() != sentences.len() {
        return Err(ClientError::MalformedResponse {
            batch: 0,
            detail: format!("{} tag rows for {} sentences", tags.len(), sentences.len()),
        });
    }
    let mut out = Vec::with_capacity(sentences.len());
    for (i, (tokens, mut sentence_tags)) in sentences.iter().zip(tags).enumerate() {
        if sentence_tags.len() != tokens.len() {
            return Err(ClientError::MalformedResponse {
                batch: 0,
                detail: format!(
                    "sentence {i}: {} tags for {} tokens",
                    sentence_tags.len(),
                    tokens.len()
                ),
            });
        }
        repair_iob2(&mut sentence_tags);
        out.push(AnnotatedSentence::new(
            format!("{corpus_name}:{i}"),
            tokens.clone(),
            sentence_tags,
        )?);
    }
    Ok(Corpus::from_sentences(corpus_name, out))
}

fn repair_iob2(tags: &mut [TagLabel]) {
    for i in 0..tags.len() {
        if let TagLabel::Inside(ty) = &tags[i] {
            let continues = i > 0
                && match &tags[i - 1] {
                    TagLabel::Begin(prev) | TagLabel::Inside(prev) => prev == ty,
                    TagLabel::Outside => false,
                };
            if !continues {
                tags[i] = TagLabel::Begin(ty.clone());
            }
        }
    }
}

/// Fetch ranked candidates for one maskable position.
pub fn fill_mask(
    suggester: &dyn TokenSuggester,
    tokens: &[Token],
    index: usize,
    top_k: usize,
) -> Result<Vec<MaskCandidate>, ClientError> {
    if index >= tokens.len() {
        return Err(ClientError::BadMaskIndex {
            index,
            len: tokens.len(),
        });
    }
    suggester.suggest(tokens, index, top_k)
}

/// Fetch the paraphrase for a sentence, keyed by its id.
pub fn paraphrase_for(
    paraphraser: &dyn Paraphraser,
    sentence: &AnnotatedSentence,
) -> Result<Option<Vec<Token>>, ClientError> {
    paraphraser.paraphrase(sentence.id(), &sentence.text())
}

// ---------------------------------------------------------------------------
// Stubs
// ---------------------------------------------------------------------------

/// Memorisation tagger: remembers the entity surface forms of a training
/// corpus and tags the longest non-overlapping left-to-right matches,
/// Outside everywhere else. A pure function of the construction corpus, so
/// two stubs built from the same corpus agree on every input.
#[derive(Debug, Clone)]
pub struct StubTagger {
    memory: HashMap<Vec<String>, String>,
    max_surface_len: usize,
}

impl StubTagger {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        // Surfaces seen under several types resolve to the most frequent
        // type, ties to the lexicographically smallest.
        let mut counts: HashMap<Vec<String>, std::collections::BTreeMap<String, usize>> =
            HashMap::new();
        for (_, span) in corpus.all_spans() {
            let key: Vec<String> = span
                .surface
                .iter()
                .map(|t| t.as_str().to_string())
                .collect();
            *counts
                .entry(key)
                .or_default()
                .entry(span.entity_type)
                .or_insert(0) += 1;
        }
        let mut memory = HashMap::new();
        let mut max_surface_len = 1;
        for (surface, by_type) in counts {
            let best = by_type
                .iter()
                .max_by_key(|(_, n)| **n)
                .map(|(ty, _)| ty.clone())
                .expect("non-empty type counts");
            max_surface_len = max_surface_len.max(surface.len());
            memory.insert(surface, best);
        }
        Self {
            memory,
            max_surface_len,
        }
    }

    pub fn memory_size(&self) -> usize {
        self.memory.len()
    }

    fn tag_one(&self, tokens: &[Token]) -> Vec<TagLabel> {
        let n = tokens.len();
        let mut tags = vec![TagLabel::Outside; n];
        let mut i = 0;
        while i < n {
            let longest = (1..=self.max_surface_len.min(n - i)).rev().find_map(|len| {
                let key: Vec<String> = tokens[i..i + len]
                    .iter()
                    .map(|t| t.as_str().to_string())
                    .collect();
                self.memory.get(&key).map(|ty| (len, ty.clone()))
            });
            if let Some((len, ty)) = longest {
                tags[i] = TagLabel::Begin(ty.clone());
                for tag in tags.iter_mut().take(i + len).skip(i + 1) {
                    *tag = TagLabel::Inside(ty.clone());
                }
                i += len;
            } else {
                i += 1;
            }
        }
        tags
    }
}

impl Tagger for StubTagger {
    fn tag_batch(&self, sentences: &[Vec<Token>]) -> Result<Vec<Vec<TagLabel>>, ClientError> {
        Ok(sentences.iter().map(|s| self.tag_one(s)).collect())
    }
}

/// Capitalisation shape classes used by [`StubMaskFiller`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CapClass {
    Punct,
    Digit,
    Title,
    Upper,
    Lower,
    Other,
}

impl CapClass {
    fn of(token: &str) -> Self {
        let chars: Vec<char> = token.chars().collect();
        if chars.iter().all(|c| !c.is_alphanumeric()) {
            return CapClass::Punct;
        }
        if chars.iter().all(|c| c.is_numeric()) {
            return CapClass::Digit;
        }
        let has_alpha = chars.iter().any(|c| c.is_alphabetic());
        if !has_alpha {
            return CapClass::Other;
        }
        let first_upper = chars[0].is_uppercase();
        let rest_no_upper = chars[1..].iter().all(|c| !c.is_uppercase());
        if first_upper && rest_no_upper {
            return CapClass::Title;
        }
        if chars
            .iter()
            .filter(|c| c.is_alphabetic())
            .all(|c| c.is_uppercase())
        {
            return CapClass::Upper;
        }
        if chars
            .iter()
            .filter(|c| c.is_alphabetic())
            .all(|c| c.is_lowercase())
        {
            return CapClass::Lower;
        }
        CapClass::Other
    }
}

/// Frequency-based mask filler: suggests the most frequent corpus tokens of
/// the masked token's capitalisation class, excluding the original token,
/// and falls back to the original when no alternative exists.
#[derive(Debug, Clone)]
pub struct StubMaskFiller {
    by_class: HashMap<CapClass, Vec<(String, usize)>>,
}

impl StubMaskFiller {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut counts: HashMap<CapClass, HashMap<String, usize>> = HashMap::new();
        for sentence in corpus.sentences() {
            for token in sentence.tokens() {
                *counts
                    .entry(CapClass::of(token.as_str()))
                    .or_default()
                    .entry(token.as_str().to_string())
                    .or_insert(0) += 1;
            }
        }
        let by_class = counts
            .into_iter()
            .map(|(class, tokens)| {
                let mut ranked: Vec<(String, usize)> = tokens.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                (class, ranked)
            })
            .collect();
        Self { by_class }
    }
}

impl TokenSuggester for StubMaskFiller {
    fn suggest(
        &self,
        tokens: &[Token],
        index: usize,
        top_k: usize,
    ) -> Result<Vec<MaskCandidate>, ClientError> {
        if index >= tokens.len() {
            return Err(ClientError::BadMaskIndex {
                index,
                len: tokens.len(),
            });
        }
        let original = tokens[index].as_str();
        let ranked = self
            .by_class
            .get(&CapClass::of(original))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let total: usize = ranked.iter().map(|(_, n)| n).sum();
        let candidates: Vec<MaskCandidate> = ranked
            .iter()
            .filter(|(token, _)| token != original)
            .take(top_k.max(1))
            .map(|(token, n)| MaskCandidate {
                token: token.clone(),
                score: *n as f64 / total.max(1) as f64,
            })
            .collect();
        if candidates.is_empty() {
            // No alternative in this shape class: a no-op fill.
            return Ok(vec![MaskCandidate {
                token: original.to_string(),
                score: 1.0,
            }]);
        }
        Ok(candidates)
    }
}

/// Pre-paraphrased sentences loaded from a TSV file:
/// `sentence_id<TAB>paraphrased text`, UTF-8, one per line.
#[derive(Debug, Clone, Default)]
pub struct FileParaphraser {
    by_id: HashMap<String, String>,
}

impl FileParaphraser {
    pub fn from_tsv(text: &str) -> Result<Self, ClientError> {
        let mut by_id = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (id, paraphrase) =
                line.split_once('\t')
                    .ok_or_else(|| ClientError::BadParaphraseLine {
                        line: lineno + 1,
                        detail: "expected sentence_id<TAB>text".to_string(),
                    })?;
            by_id.insert(id.to_string(), paraphrase.to_string());
        }
        Ok(Self { by_id })
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

impl Paraphraser for FileParaphraser {
    fn paraphrase(
        &self,
        sentence_id: &str,
        _text: &str,
    ) -> Result<Option<Vec<Token>>, ClientError> {
        Ok(self.by_id.get(sentence_id).map(|text| tokenize(text)))
    }
}

/// Offline stand-in paraphraser that returns the sentence unchanged; remap
/// then always succeeds with the original tags.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityParaphraser;

impl Paraphraser for IdentityParaphraser {
    fn paraphrase(
        &self,
        _sentence_id: &str,
        text: &str,
    ) -> Result<Option<Vec<Token>>, ClientError> {
        Ok(Some(tokenize(text)))
    }
}

// ---------------------------------------------------------------------------
// HTTP clients
// ---------------------------------------------------------------------------

fn build_agent(endpoint: &ModelEndpoint) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(endpoint.timeout))
        .build()
        .new_agent()
}

fn post_json(
    agent: &ureq::Agent,
    endpoint: &ModelEndpoint,
    batch: usize,
    body: &str,
) -> Result<String, ClientError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut request = agent
            .post(&endpoint.base_url)
            .header("content-type", "application/json");
        if let Some(token) = &endpoint.bearer_token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        match request.send(body) {
            Ok(response) => {
                return response
                    .into_body()
                    .read_to_string()
                    .map_err(|e| ClientError::Transport {
                        url: endpoint.base_url.clone(),
                        batch,
                        attempts,
                        detail: format!("reading response body: {e}"),
                    });
            }
            Err(e) if attempts <= endpoint.retries => {
                std::thread::sleep(Duration::from_millis(25 * u64::from(attempts)));
                let _ = e;
            }
            Err(e) => {
                return Err(ClientError::Transport {
                    url: endpoint.base_url.clone(),
                    batch,
                    attempts,
                    detail: e.to_string(),
                });
            }
        }
    }
}

#[derive(Serialize)]
struct TagRequest<'a> {
    sentences: Vec<Vec<&'a str>>,
}

#[derive(Deserialize)]
struct TagResponse {
    tags: Vec<Vec<String>>,
}

/// HTTP NER tagger speaking the JSON protocol; batches `batch_size`
/// sentences per request and issues up to `max_in_flight` requests
/// concurrently, joining results back into input order.
pub struct HttpTagger {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
}

impl HttpTagger {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let agent = build_agent(&endpoint);
        Self { endpoint, agent }
    }

    fn tag_one_batch(
        &self,
        batch_index: usize,
        batch: &[Vec<Token>],
    ) -> Result<Vec<Vec<TagLabel>>, ClientError> {
        let request = TagRequest {
            sentences: batch
                .iter()
                .map(|s| s.iter().map(Token::as_str).collect())
                .collect(),
        };
        let body = serde_json::to_string(&request).expect("request serialises");
        let text = post_json(&self.agent, &self.endpoint, batch_index, &body)?;
        let response: TagResponse =
            serde_json::from_str(&text).map_err(|e| ClientError::MalformedResponse {
                batch: batch_index,
                detail: e.to_string(),
            })?;
        if response.tags.len() != batch.len() {
            return Err(ClientError::MalformedResponse {
                batch: batch_index,
                detail: format!(
                    "{} tag rows for {} sentences",
                    response.tags.len(),
                    batch.len()
                ),
            });
        }
        let mut out = Vec::with_capacity(batch.len());
        for (sentence, labels) in batch.iter().zip(response.tags) {
            if labels.len() != sentence.len() {
                return Err(ClientError::MalformedResponse {
                    batch: batch_index,
                    detail: format!("{} tags for {} tokens", labels.len(), sentence.len()),
                });
            }
            let parsed: Result<Vec<TagLabel>, _> =
                labels.iter().map(|l| TagLabel::parse(l)).collect();
            out.push(parsed.map_err(|e| ClientError::MalformedResponse {
                batch: batch_index,
                detail: e.to_string(),
            })?);
        }
        Ok(out)
    }
}

type BatchResult = Result<Vec<Vec<TagLabel>>, ClientError>;

impl Tagger for HttpTagger {
    fn tag_batch(&self, sentences: &[Vec<Token>]) -> Result<Vec<Vec<TagLabel>>, ClientError> {
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        let batches: Vec<&[Vec<Token>]> =
            sentences.chunks(self.endpoint.batch_size.max(1)).collect();
        let slots: Mutex<Vec<Option<BatchResult>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.endpoint.max_in_flight.max(1).min(batches.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= batches.len() {
                        break;
                    }
                    let result = self.tag_one_batch(i, batches[i]);
                    slots.lock().expect("result slots poisoned")[i] = Some(result);
                });
            }
        });
        let mut out = Vec::with_capacity(sentences.len());
        for slot in slots.into_inner().expect("result slots poisoned") {
            out.extend(slot.expect("every batch produced a result")?);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct FillRequest<'a> {
    tokens: Vec<&'a str>,
    index: usize,
    top_k: usize,
}

#[derive(Deserialize)]
struct FillResponse {
    candidates: Vec<MaskCandidate>,
}

/// HTTP masked-language-model client; one masked position per request.
pub struct HttpMaskFiller {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
}

impl HttpMaskFiller {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let agent = build_agent(&endpoint);
        Self { endpoint, agent }
    }
}

impl TokenSuggester for HttpMaskFiller {
    fn suggest(
        &self,
        tokens: &[Token],
        index: usize,
        top_k: usize,
    ) -> Result<Vec<MaskCandidate>, ClientError> {
        if index >= tokens.len() {
            return Err(ClientError::BadMaskIndex {
                index,
                len: tokens.len(),
            });
        }
        let masked: Vec<&str> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == index {
                    self.endpoint.mask_sentinel.as_str()
                } else {
                    t.as_str()
                }
            })
            .collect();
        let body = serde_json::to_string(&FillRequest {
            tokens: masked,
            index,
            top_k,
        })
        .expect("request serialises");
        let text = post_json(&self.agent, &self.endpoint, 0, &body)?;
        let response: FillResponse =
            serde_json::from_str(&text).map_err(|e| ClientError::MalformedResponse {
                batch: 0,
                detail: e.to_string(),
            })?;
        if response.candidates.is_empty() {
            return Err(ClientError::MalformedResponse {
                batch: 0,
                detail: "empty candidate list".to_string(),
            });
        }
        Ok(response.candidates)
    }
}

#[derive(Serialize)]
struct ParaphraseRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ParaphraseResponse {
    paraphrase: String,
}

/// HTTP paraphraser client.
pub struct HttpParaphraser {
    endpoint: ModelEndpoint,
    agent: ureq::Agent,
}

impl HttpParaphraser {
    pub fn new(endpoint: ModelEndpoint) -> Self {
        let agent = build_agent(&endpoint);
        Self { endpoint, agent }
    }
}

impl Paraphraser for HttpParaphraser {
    fn paraphrase(
        &self,
        _sentence_id: &str,
        text: &str,
    ) -> Result<Option<Vec<Token>>, ClientError> {
        let body = serde_json::to_string(&ParaphraseRequest { text }).expect("request serialises");
        let response_text = post_json(&self.agent, &self.endpoint, 0, &body)?;
        let response: ParaphraseResponse =
            serde_json::from_str(&response_text).map_err(|e| ClientError::MalformedResponse {
                batch: 0,
                detail: e.to_string(),
            })?;
        Ok(Some(tokenize(&response.paraphrase)))
    }
}
