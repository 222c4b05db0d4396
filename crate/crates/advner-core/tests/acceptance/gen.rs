//! Seeded random corpus generation for the acceptance suite.

use advner_core::corpus::{AnnotatedSentence, Corpus, TagLabel, Token};
use advner_core::rng::SplitMix64;

pub const TYPES: [&str; 4] = ["PER", "LOC", "ORG", "MISC"];

const LOWER_VOCAB: [&str; 14] = [
    "alpha",
    "beta",
    "gamma",
    "delta",
    "visits",
    "the",
    "old",
    "town",
    "says",
    "report",
    "from",
    "near",
    "well-struck",
    ".",
];

const NAME_VOCAB: [&str; 12] = [
    "Bala",
    "Naidoo",
    "Reuters",
    "Watford",
    "Syria",
    "Timor-Leste",
    "Homburg",
    "München",
    "EU",
    "Bre-X",
    "मुंबई",
    "Compagnoni",
];

pub fn random_token(rng: &mut SplitMix64, capitalized: bool) -> Token {
    let word = if capitalized {
        *rng.choose(&NAME_VOCAB)
    } else {
        *rng.choose(&LOWER_VOCAB)
    };
    Token::new(word).unwrap()
}

/// Random IOB2 tag sequence with at most `max_spans` non-overlapping spans.
pub fn random_tags(rng: &mut SplitMix64, len: usize, max_spans: usize) -> Vec<TagLabel> {
    let mut tags = vec![TagLabel::Outside; len];
    let wanted = rng.next_below(max_spans as u64 + 1) as usize;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < wanted && attempts < 24 {
        attempts += 1;
        let start = rng.next_below(len as u64) as usize;
        let longest = (len - start).min(3);
        let span_len = 1 + rng.next_below(longest as u64) as usize;
        if tags[start..start + span_len]
            .iter()
            .all(TagLabel::is_outside)
        {
            let ty = *rng.choose(&TYPES);
            tags[start] = TagLabel::Begin(ty.to_string());
            for tag in tags.iter_mut().take(start + span_len).skip(start + 1) {
                *tag = TagLabel::Inside(ty.to_string());
            }
            placed += 1;
        }
    }
    tags
}

pub fn random_sentence(
    rng: &mut SplitMix64,
    id: String,
    max_tokens: usize,
    max_spans: usize,
) -> AnnotatedSentence {
    let len = 1 + rng.next_below(max_tokens as u64) as usize;
    let tags = random_tags(rng, len, max_spans);
    let tokens = tags
        .iter()
        .map(|tag| random_token(rng, !tag.is_outside()))
        .collect();
    AnnotatedSentence::new(id, tokens, tags).unwrap()
}

pub fn random_corpus(
    rng: &mut SplitMix64,
    name: &str,
    sentences: usize,
    max_tokens: usize,
    max_spans: usize,
) -> Corpus {
    let sentences = (0..sentences)
        .map(|i| random_sentence(rng, format!("{name}:{i}"), max_tokens, max_spans))
        .collect();
    Corpus::from_sentences(name, sentences)
}

/// A (gold, pred) pair sharing tokens but with independent random tags.
pub fn random_eval_pair(
    rng: &mut SplitMix64,
    sentences: usize,
    max_tokens: usize,
    max_spans: usize,
) -> (Corpus, Corpus) {
    let gold = random_corpus(rng, "gold", sentences, max_tokens, max_spans);
    let pred_sentences = gold
        .sentences()
        .iter()
        .map(|s| {
            let tags = random_tags(rng, s.len(), max_spans);
            AnnotatedSentence::new(s.id(), s.tokens().to_vec(), tags).unwrap()
        })
        .collect();
    let pred = Corpus::from_sentences("gold", pred_sentences);
    (gold, pred)
}
