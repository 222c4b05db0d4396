//! Entity-level evaluation: seqeval-style strict micro-F1 plus the
//! SemEval-2013 four-schema scheme (strict / exact / partial / type), with
//! five error categories per schema (correct, incorrect, partial, missed,
//! spurious), overall and per entity type.
//!
//! Matching policy: gold and predicted spans are matched one-to-one,
//! greedily in gold-start order, preferring an exact-boundary match, then
//! the largest token overlap, ties broken by the smaller predicted start.
//! Per-type scopes count a predicted span under the gold type for matched
//! pairs and under its own type when spurious.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{extract_spans, Corpus, EntitySpan};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("corpora are misaligned at sentence `{sentence_id}`: {detail}")]
    Misaligned { sentence_id: String, detail: String },
    #[error("gold corpus has {gold} sentences but prediction corpus has {pred}")]
    SentenceCountMismatch { gold: usize, pred: usize },
    #[error("{side} spans are overlapping or unsorted at index {index}")]
    OverlappingSpans { side: &'static str, index: usize },
    #[error("reports cover different tagsets: {a:?} vs {b:?}")]
    TagsetMismatch { a: Vec<String>, b: Vec<String> },
}

/// The four SemEval-2013 evaluation schemas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSchema {
    /// Both entity span and entity type must match.
    Strict,
    /// Entity span must match, irrespective of the type.
    Exact,
    /// Partial span match, irrespective of the type (half credit).
    Partial,
    /// Some overlap between gold and prediction, with matching type.
    Type,
}

impl EvalSchema {
    pub const ALL: [EvalSchema; 4] = [
        EvalSchema::Strict,
        EvalSchema::Exact,
        EvalSchema::Partial,
        EvalSchema::Type,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalSchema::Strict => "strict",
            EvalSchema::Exact => "exact",
            EvalSchema::Partial => "partial",
            EvalSchema::Type => "type",
        }
    }
}

impl fmt::Display for EvalSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tallies of the five error categories for one schema and scope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaCounts {
    pub correct: u64,
    pub incorrect: u64,
    pub partial: u64,
    pub missed: u64,
    pub spurious: u64,
}

impl SchemaCounts {
    /// Gold-side total: correct + incorrect + partial + missed.
    pub fn possible(&self) -> u64 {
        self.correct + self.incorrect + self.partial + self.missed
    }

    /// Prediction-side total: correct + incorrect + partial + spurious.
    pub fn actual(&self) -> u64 {
        self.correct + self.incorrect + self.partial + self.spurious
    }

    pub fn add(&mut self, other: &SchemaCounts) {
        self.correct += other.correct;
        self.incorrect += other.incorrect;
        self.partial += other.partial;
        self.missed += other.missed;
        self.spurious += other.spurious;
    }
}

/// Precision, recall and F1 in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// SemEval-2013 metrics from category counts: partial matches earn half
/// credit; zero denominators yield 0.
pub fn prf_from_counts(counts: &SchemaCounts) -> Prf {
    let hits = counts.correct as f64 + 0.5 * counts.partial as f64;
    let actual = counts.actual();
    let possible = counts.possible();
    let precision = if actual > 0 {
        hits / actual as f64
    } else {
        0.0
    };
    let recall = if possible > 0 {
        hits / possible as f64
    } else {
        0.0
    };
    Prf::new(precision, recall)
}

fn overlap(a: &EntitySpan, b: &EntitySpan) -> usize {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    hi.saturating_sub(lo)
}

fn check_side_sorted(spans: &[EntitySpan], side: &'static str) -> Result<(), EvalError> {
    for i in 1..spans.len() {
        if spans[i].start < spans[i - 1].end {
            return Err(EvalError::OverlappingSpans { side, index: i });
        }
    }
    Ok(())
}

/// One-to-one span matching per the documented policy.
#[derive(Debug, Clone, Default)]
pub(crate) struct Matching {
    /// `(gold index, pred index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gold: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

pub(crate) fn match_spans(gold: &[EntitySpan], pred: &[EntitySpan]) -> Matching {
    let mut used = vec![false; pred.len()];
    let mut pairs = Vec::new();
    for (gi, g) in gold.iter().enumerate() {
        let mut chosen = pred
            .iter()
            .enumerate()
            .find(|(pi, p)| !used[*pi] && p.start == g.start && p.end == g.end)
            .map(|(pi, _)| pi);
        if chosen.is_none() {
            let mut best: Option<(usize, usize)> = None; // (overlap, pred index)
            for (pi, p) in pred.iter().enumerate() {
                if used[pi] {
                    continue;
                }
                let ov = overlap(g, p);
                if ov == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((best_ov, best_pi)) => {
                        ov > best_ov || (ov == best_ov && p.start < pred[best_pi].start)
                    }
                };
                if better {
                    best = Some((ov, pi));
                }
            }
            chosen = best.map(|(_, pi)| pi);
        }
        if let Some(pi) = chosen {
            used[pi] = true;
            pairs.push((gi, pi));
        }
    }
    let matched_gold: Vec<bool> = {
        let mut v = vec![false; gold.len()];
        for (gi, _) in &pairs {
            v[*gi] = true;
        }
        v
    };
    Matching {
        pairs,
        unmatched_gold: (0..gold.len()).filter(|i| !matched_gold[*i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|i| !used[*i]).collect(),
    }
}

fn classify_pair(g: &EntitySpan, p: &EntitySpan, grid: &mut BTreeMap<EvalSchema, SchemaCounts>) {
    let exact_boundary = g.start == p.start && g.end == p.end;
    let same_type = g.entity_type == p.entity_type;
    let bump = |grid: &mut BTreeMap<EvalSchema, SchemaCounts>,
                schema: EvalSchema,
                field: fn(&mut SchemaCounts) -> &mut u64| {
        *field(grid.entry(schema).or_default()) += 1;
    };
    match (exact_boundary, same_type) {
        (true, true) => {
            for schema in EvalSchema::ALL {
                bump(grid, schema, |c| &mut c.correct);
            }
        }
        (true, false) => {
            bump(grid, EvalSchema::Strict, |c| &mut c.incorrect);
            bump(grid, EvalSchema::Exact, |c| &mut c.correct);
            bump(grid, EvalSchema::Partial, |c| &mut c.correct);
            bump(grid, EvalSchema::Type, |c| &mut c.incorrect);
        }
        (false, true) => {
            bump(grid, EvalSchema::Strict, |c| &mut c.incorrect);
            bump(grid, EvalSchema::Exact, |c| &mut c.incorrect);
            bump(grid, EvalSchema::Partial, |c| &mut c.partial);
            bump(grid, EvalSchema::Type, |c| &mut c.correct);
        }
        (false, false) => {
            bump(grid, EvalSchema::Strict, |c| &mut c.incorrect);
            bump(grid, EvalSchema::Exact, |c| &mut c.incorrect);
            bump(grid, EvalSchema::Partial, |c| &mut c.partial);
            bump(grid, EvalSchema::Type, |c| &mut c.incorrect);
        }
    }
}

/// Classify one aligned sentence's gold and predicted spans into the five
/// error categories of all four schemas.
pub fn classify_spans(
    gold: &[EntitySpan],
    pred: &[EntitySpan],
) -> Result<BTreeMap<EvalSchema, SchemaCounts>, EvalError> {
    check_side_sorted(gold, "gold")?;
    check_side_sorted(pred, "pred")?;
    let matching = match_spans(gold, pred);
    let mut grid: BTreeMap<EvalSchema, SchemaCounts> = EvalSchema::ALL
        .into_iter()
        .map(|s| (s, SchemaCounts::default()))
        .collect();
    for (gi, pi) in &matching.pairs {
        classify_pair(&gold[*gi], &pred[*pi], &mut grid);
    }
    for _ in &matching.unmatched_gold {
        for schema in EvalSchema::ALL {
            grid.entry(schema).or_default().missed += 1;
        }
    }
    for _ in &matching.unmatched_pred {
        for schema in EvalSchema::ALL {
            grid.entry(schema).or_default().spurious += 1;
        }
    }
    Ok(grid)
}

fn check_alignment(gold: &Corpus, pred: &Corpus) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        if g.id() != p.id() {
            return Err(EvalError::Misaligned {
                sentence_id: g.id().to_string(),
                detail: format!("prediction carries id `{}`", p.id()),
            });
        }
        if g.len() != p.len() {
            return Err(EvalError::Misaligned {
                sentence_id: g.id().to_string(),
                detail: format!("{} tokens vs {} in prediction", g.len(), p.len()),
            });
        }
        if let Some(i) = (0..g.len()).find(|&i| g.tokens()[i] != p.tokens()[i]) {
            return Err(EvalError::Misaligned {
                sentence_id: g.id().to_string(),
                detail: format!(
                    "token {i} differs: `{}` vs `{}`",
                    g.tokens()[i],
                    p.tokens()[i]
                ),
            });
        }
    }
    Ok(())
}

/// seqeval-style strict micro-F1: exact (span, type) matches over the whole
/// corpus. Zero denominators yield 0.
pub fn micro_f1(gold: &Corpus, pred: &Corpus) -> Result<Prf, EvalError> {
    check_alignment(gold, pred)?;
    let mut tp = 0usize;
    let mut gold_total = 0usize;
    let mut pred_total = 0usize;
    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        let gold_spans = extract_spans(g);
        let pred_spans = extract_spans(p);
        gold_total += gold_spans.len();
        pred_total += pred_spans.len();
        for gs in &gold_spans {
            if pred_spans.iter().any(|ps| {
                ps.start == gs.start && ps.end == gs.end && ps.entity_type == gs.entity_type
            }) {
                tp += 1;
            }
        }
    }
    let precision = if pred_total > 0 {
        tp as f64 / pred_total as f64
    } else {
        0.0
    };
    let recall = if gold_total > 0 {
        tp as f64 / gold_total as f64
    } else {
        0.0
    };
    Ok(Prf::new(precision, recall))
}

/// Counts and derived metrics for one schema and scope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemaResult {
    pub counts: SchemaCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<SchemaCounts> for SchemaResult {
    fn from(counts: SchemaCounts) -> Self {
        let prf = prf_from_counts(&counts);
        Self {
            counts,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
        }
    }
}

/// Results for all four schemas of one scope, in fixed field order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemaGrid {
    pub strict: SchemaResult,
    pub exact: SchemaResult,
    pub partial: SchemaResult,
    #[serde(rename = "type")]
    pub type_match: SchemaResult,
}

impl SchemaGrid {
    fn from_counts(counts: &BTreeMap<EvalSchema, SchemaCounts>) -> Self {
        let get = |s: EvalSchema| SchemaResult::from(counts.get(&s).copied().unwrap_or_default());
        Self {
            strict: get(EvalSchema::Strict),
            exact: get(EvalSchema::Exact),
            partial: get(EvalSchema::Partial),
            type_match: get(EvalSchema::Type),
        }
    }

    pub fn schema(&self, schema: EvalSchema) -> &SchemaResult {
        match schema {
            EvalSchema::Strict => &self.strict,
            EvalSchema::Exact => &self.exact,
            EvalSchema::Partial => &self.partial,
            EvalSchema::Type => &self.type_match,
        }
    }
}

/// Full evaluation report: overall and per-type counts for all schemas,
/// plus the strict seqeval micro-F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub gold_corpus: String,
    pub pred_corpus: String,
    pub strict_micro_f1: Prf,
    pub overall: SchemaGrid,
    pub per_type: BTreeMap<String, SchemaGrid>,
}

pub const REPORT_VERSION: u32 = 1;

/// Evaluate a prediction corpus against its gold corpus.
pub fn evaluate(gold: &Corpus, pred: &Corpus) -> Result<EvalReport, EvalError> {
    check_alignment(gold, pred)?;
    let mut overall: BTreeMap<EvalSchema, SchemaCounts> = EvalSchema::ALL
        .into_iter()
        .map(|s| (s, SchemaCounts::default()))
        .collect();
    let mut per_type: BTreeMap<String, BTreeMap<EvalSchema, SchemaCounts>> = gold
        .tagset()
        .union(pred.tagset())
        .map(|t| {
            (
                t.clone(),
                EvalSchema::ALL
                    .into_iter()
                    .map(|s| (s, SchemaCounts::default()))
                    .collect(),
            )
        })
        .collect();

    for (g, p) in gold.sentences().iter().zip(pred.sentences()) {
        let gold_spans = extract_spans(g);
        let pred_spans = extract_spans(p);
        let matching = match_spans(&gold_spans, &pred_spans);
        for (gi, pi) in &matching.pairs {
            classify_pair(&gold_spans[*gi], &pred_spans[*pi], &mut overall);
            let scope = per_type
                .entry(gold_spans[*gi].entity_type.clone())
                .or_default();
            classify_pair(&gold_spans[*gi], &pred_spans[*pi], scope);
        }
        for gi in &matching.unmatched_gold {
            let scope = per_type
                .entry(gold_spans[*gi].entity_type.clone())
                .or_default();
            for schema in EvalSchema::ALL {
                overall.entry(schema).or_default().missed += 1;
                scope.entry(schema).or_default().missed += 1;
            }
        }
        for pi in &matching.unmatched_pred {
            let scope = per_type
                .entry(pred_spans[*pi].entity_type.clone())
                .or_default();
            for schema in EvalSchema::ALL {
                overall.entry(schema).or_default().spurious += 1;
                scope.entry(schema).or_default().spurious += 1;
            }
        }
    }

    Ok(EvalReport {
        report_version: REPORT_VERSION,
        gold_corpus: gold.name().to_string(),
        pred_corpus: pred.name().to_string(),
        strict_micro_f1: micro_f1(gold, pred)?,
        overall: SchemaGrid::from_counts(&overall),
        per_type: per_type
            .into_iter()
            .map(|(t, counts)| (t, SchemaGrid::from_counts(&counts)))
            .collect(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Human-readable aligned-column rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "gold: {}  pred: {}\n",
            self.gold_corpus, self.pred_corpus
        ));
        out.push_str(&format!(
            "strict micro-F1 (seqeval): P {:.4}  R {:.4}  F1 {:.4}\n",
            self.strict_micro_f1.precision, self.strict_micro_f1.recall, self.strict_micro_f1.f1
        ));
        for schema in EvalSchema::ALL {
            out.push_str(&format!("\n== {schema} ==\n"));
            out.push_str(&format!(
                "{:<12} {:>9} {:>9} {:>9} {:>8} {:>9} {:>8} {:>7} {:>9}\n",
                "scope",
                "precision",
                "recall",
                "f1",
                "correct",
                "incorrect",
                "partial",
                "missed",
                "spurious"
            ));
            let mut row = |scope: &str, r: &SchemaResult| {
                out.push_str(&format!(
                    "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8} {:>9} {:>8} {:>7} {:>9}\n",
                    scope,
                    r.precision,
                    r.recall,
                    r.f1,
                    r.counts.correct,
                    r.counts.incorrect,
                    r.counts.partial,
                    r.counts.missed,
                    r.counts.spurious
                ));
            };
            row("overall", self.overall.schema(schema));
            for (ty, grid) in &self.per_type {
                row(ty, grid.schema(schema));
            }
        }
        out
    }
}

/// One F1 comparison row of a [`ComparisonTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Delta {
    pub scope: String,
    pub schema: EvalSchema,
    pub f1_a: f64,
    pub f1_b: f64,
    /// `f1_b - f1_a`.
    pub delta: f64,
}

/// One error-category comparison row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub scope: String,
    pub schema: EvalSchema,
    pub category: String,
    pub count_a: u64,
    pub count_b: u64,
    /// `count_b - count_a`.
    pub delta: i64,
}

/// Side-by-side report comparison: per-schema/per-scope F1 deltas plus
/// error-category deltas (e.g. missed growth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub report_a: String,
    pub report_b: String,
    pub f1: Vec<F1Delta>,
    pub categories: Vec<CategoryDelta>,
}

type CategoryGetter = fn(&SchemaCounts) -> u64;

const CATEGORIES: [(&str, CategoryGetter); 5] = [
    ("correct", |c| c.correct),
    ("incorrect", |c| c.incorrect),
    ("partial", |c| c.partial),
    ("missed", |c| c.missed),
    ("spurious", |c| c.spurious),
];

/// Compare two reports over the same tagset.
pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> Result<ComparisonTable, EvalError> {
    let types_a: Vec<String> = a.per_type.keys().cloned().collect();
    let types_b: Vec<String> = b.per_type.keys().cloned().collect();
    if types_a != types_b {
        return Err(EvalError::TagsetMismatch {
            a: types_a,
            b: types_b,
        });
    }

    type ScopeRow<'a> = (String, &'a SchemaGrid, &'a SchemaGrid);
    let mut f1 = Vec::new();
    let mut categories = Vec::new();
    let scopes: Vec<ScopeRow<'_>> =
        std::iter::once(("overall".to_string(), &a.overall, &b.overall))
            .chain(
                types_a
                    .iter()
                    .map(|t| (t.clone(), &a.per_type[t], &b.per_type[t])),
            )
            .collect();
    for (scope, grid_a, grid_b) in scopes {
        for schema in EvalSchema::ALL {
            let ra = grid_a.schema(schema);
            let rb = grid_b.schema(schema);
            f1.push(F1Delta {
                scope: scope.clone(),
                schema,
                f1_a: ra.f1,
                f1_b: rb.f1,
                delta: rb.f1 - ra.f1,
            });
            for (name, get) in CATEGORIES {
                categories.push(CategoryDelta {
                    scope: scope.clone(),
                    schema,
                    category: name.to_string(),
                    count_a: get(&ra.counts),
                    count_b: get(&rb.counts),
                    delta: get(&rb.counts) as i64 - get(&ra.counts) as i64,
                });
            }
        }
    }
    Ok(ComparisonTable {
        report_a: format!("{} vs {}", a.gold_corpus, a.pred_corpus),
        report_b: format!("{} vs {}", b.gold_corpus, b.pred_corpus),
        f1,
        categories,
    })
}

impl ComparisonTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serialisation cannot fail")
    }

    /// Tab-separated rendering: one row per (scope, schema) F1 delta, then
    /// one row per (scope, schema, category) count delta.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\tscope\tschema\tcategory\ta\tb\tdelta\n");
        for row in &self.f1 {
            out.push_str(&format!(
                "f1\t{}\t{}\t-\t{:.6}\t{:.6}\t{:.6}\n",
                row.scope, row.schema, row.f1_a, row.f1_b, row.delta
            ));
        }
        for row in &self.categories {
            out.push_str(&format!(
                "count\t{}\t{}\t{}\t{}\t{}\t{}\n",
                row.scope, row.schema, row.category, row.count_a, row.count_b, row.delta
            ));
        }
        out
    }
}
