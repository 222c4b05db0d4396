//! Independent brute-force reference implementations used to cross-check
//! the evaluation path. Nothing here shares code with the library beyond
//! the basic corpus data types: spans are re-extracted with a different
//! walk, categories are assigned per schema from first principles, and the
//! strict micro-F1 is a naive exact-match count.

use std::collections::BTreeMap;

use advner_core::corpus::{Corpus, TagLabel};
use advner_core::evaluate::{EvalSchema, SchemaCounts};

/// Span extraction written as an index walk (the library uses an
/// open-span state machine instead).
pub fn oracle_spans(tags: &[TagLabel]) -> Vec<(usize, usize, String)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if let TagLabel::Begin(ty) = &tags[i] {
            let mut j = i + 1;
            while j < tags.len() {
                match &tags[j] {
                    TagLabel::Inside(inner) if inner == ty => j += 1,
                    _ => break,
                }
            }
            spans.push((i, j, ty.clone()));
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

type Span = (usize, usize, String);

fn overlap_tokens(a: &Span, b: &Span) -> usize {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    hi.saturating_sub(lo)
}

/// The documented matching policy, re-stated: walk gold spans by start; a
/// boundary-identical unmatched prediction wins, otherwise the unmatched
/// overlapping prediction with the most shared tokens (ties to the smaller
/// prediction start).
fn pick_match(gold: &Span, preds: &[Span], taken: &[bool]) -> Option<usize> {
    for (pi, p) in preds.iter().enumerate() {
        if !taken[pi] && p.0 == gold.0 && p.1 == gold.1 {
            return Some(pi);
        }
    }
    let mut best: Option<usize> = None;
    for (pi, p) in preds.iter().enumerate() {
        if taken[pi] || overlap_tokens(gold, p) == 0 {
            continue;
        }
        best = match best {
            None => Some(pi),
            Some(current) => {
                let (co, po) = (
                    overlap_tokens(gold, &preds[current]),
                    overlap_tokens(gold, p),
                );
                if po > co || (po == co && p.0 < preds[current].0) {
                    Some(pi)
                } else {
                    Some(current)
                }
            }
        };
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Category {
    Correct,
    Incorrect,
    Partial,
}

/// Category of a matched (gold, pred) pair under one schema, from the
/// schema definitions: strict needs boundary and type; exact needs the
/// boundary irrespective of type; partial grants half credit to boundary
/// overlaps irrespective of type; type needs the type given some overlap.
fn categorize(schema: EvalSchema, gold: &Span, pred: &Span) -> Category {
    let same_boundary = gold.0 == pred.0 && gold.1 == pred.1;
    let same_type = gold.2 == pred.2;
    match schema {
        EvalSchema::Strict => {
            if same_boundary && same_type {
                Category::Correct
            } else {
                Category::Incorrect
            }
        }
        EvalSchema::Exact => {
            if same_boundary {
                Category::Correct
            } else {
                Category::Incorrect
            }
        }
        EvalSchema::Partial => {
            if same_boundary {
                Category::Correct
            } else {
                Category::Partial
            }
        }
        EvalSchema::Type => {
            if same_type {
                Category::Correct
            } else {
                Category::Incorrect
            }
        }
    }
}

/// Classify one sentence pair into all four schemas.
pub fn oracle_classify_sentence(
    gold_tags: &[TagLabel],
    pred_tags: &[TagLabel],
) -> BTreeMap<EvalSchema, SchemaCounts> {
    let golds = oracle_spans(gold_tags);
    let preds = oracle_spans(pred_tags);
    let mut taken = vec![false; preds.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (gi, gold) in golds.iter().enumerate() {
        if let Some(pi) = pick_match(gold, &preds, &taken) {
            taken[pi] = true;
            pairs.push((gi, pi));
        }
    }

    let mut out = BTreeMap::new();
    for schema in EvalSchema::ALL {
        let mut counts = SchemaCounts::default();
        for (gi, pi) in &pairs {
            match categorize(schema, &golds[*gi], &preds[*pi]) {
                Category::Correct => counts.correct += 1,
                Category::Incorrect => counts.incorrect += 1,
                Category::Partial => counts.partial += 1,
            }
        }
        let matched_gold = pairs.len() as u64;
        counts.missed = golds.len() as u64 - matched_gold;
        counts.spurious = preds.len() as u64 - matched_gold;
        out.insert(schema, counts);
    }
    out
}

/// Corpus-level classification: plain sums of the per-sentence counts.
pub fn oracle_classify_corpus(gold: &Corpus, pred: &Corpus) -> BTreeMap<EvalSchema, SchemaCounts> {
    let mut out: BTreeMap<EvalSchema, SchemaCounts> = EvalSchema::ALL
        .into_iter()
        .map(|s| (s, SchemaCounts::default()))
        .collect();
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        for (schema, counts) in oracle_classify_sentence(g.tags(), p.tags()) {
            out.get_mut(&schema).unwrap().add(&counts);
        }
    }
    out
}

/// Naive strict micro-F1: exact (start, end, type) set intersection.
pub fn oracle_strict_micro_f1(gold: &Corpus, pred: &Corpus) -> (f64, f64, f64) {
    let mut tp = 0usize;
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        let golds = oracle_spans(g.tags());
        let preds = oracle_spans(p.tags());
        n_gold += golds.len();
        n_pred += preds.len();
        tp += golds.iter().filter(|span| preds.contains(span)).count();
    }
    let precision = if n_pred == 0 {
        0.0
    } else {
        tp as f64 / n_pred as f64
    };
    let recall = if n_gold == 0 {
        0.0
    } else {
        tp as f64 / n_gold as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Two-sided Student-t tail probability by Simpson quadrature of the
/// density (independent of the library's incomplete-beta path).
///
/// Substituting `x = t/u` maps the infinite tail onto `u in (0, 1]`, so no
/// truncation error enters even for heavy-tailed small df. Requires
/// `df >= 2` (the `u -> 0` limit of the transformed integrand is then 0).
pub fn quadrature_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df >= 2.0, "quadrature oracle supports df >= 2");
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let ln_norm = ln_gamma_stirling((df + 1.0) / 2.0)
        - ln_gamma_stirling(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    // integrand of int_0^1 pdf(t/u) * t/u^2 du
    let g = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let x = t / u;
        (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln() + (t / (u * u)).ln()).exp()
    };
    let n = 200_000;
    let h = 1.0 / n as f64;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * g(i as f64 * h);
    }
    (2.0 * acc * h / 3.0).min(1.0)
}

/// Stirling-series log-gamma, good to ~1e-10 for the arguments used here.
fn ln_gamma_stirling(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 12.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0;
    shift + 0.5 * ((2.0 * std::f64::consts::PI).ln() - x.ln()) + x * (x.ln() - 1.0) + series
}
