//! Python bindings: corpora, the five perturbation methods (offline stubs
//! for the model roles), the four-schema evaluation, and the paired t-test.
//!
//! Structured results (evaluation reports, perturbation records, t-test
//! results) cross the boundary as plain Python dicts/lists.

use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use advner_core::corpus::{
    concat_corpora, parse_conll, serialize_conll, split_corpus, AnnotatedSentence, ColumnLayout,
    Corpus, ParseOptions, SplitSpec, TagLabel, Token,
};
use advner_core::evaluate::{compare_reports, evaluate, micro_f1, EvalReport};
use advner_core::gazetteer::Gazetteer;
use advner_core::modelclient::{
    tag_sentences, FileParaphraser, IdentityParaphraser, Paraphraser, StubMaskFiller, StubTagger,
};
use advner_core::perturb::{
    gazetteer_replace, mask_context, mask_plus_random, paraphrase_corpus, random_sample,
    PerturbationConfig, PerturbationMethod,
};
use advner_core::stats::{paired_t_test, summarize, RunSeries};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parse any serde-serialisable value into Python objects via `json.loads`.
fn to_py_json<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    let loads = py.import("json")?.getattr("loads")?;
    Ok(loads.call1((text,))?.unbind())
}

/// A BIO-tagged corpus.
#[pyclass(name = "Corpus", from_py_object)]
#[derive(Clone)]
struct PyCorpus {
    inner: Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Parse CoNLL text (one token per line, blank lines between sentences).
    #[staticmethod]
    #[pyo3(signature = (text, name="corpus", tag_column=None, coerce_tags=false, tagset=None))]
    fn from_conll(
        text: &str,
        name: &str,
        tag_column: Option<usize>,
        coerce_tags: bool,
        tagset: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let mut options = ParseOptions::new(name).coerce_tags(coerce_tags);
        options.tag_column = tag_column;
        if let Some(tagset) = tagset {
            options.tagset = Some(tagset.into_iter().collect::<BTreeSet<_>>());
        }
        let parsed = parse_conll(text, &options).map_err(value_error)?;
        Ok(Self {
            inner: parsed.corpus,
        })
    }

    /// Build a corpus from `[(tokens, tags), ...]` pairs.
    #[staticmethod]
    fn from_sentences(name: &str, sentences: Vec<(Vec<String>, Vec<String>)>) -> PyResult<Self> {
        let mut built = Vec::with_capacity(sentences.len());
        for (i, (tokens, tags)) in sentences.into_iter().enumerate() {
            let tokens: Result<Vec<Token>, _> = tokens.into_iter().map(Token::new).collect();
            let tags: Result<Vec<TagLabel>, _> = tags.iter().map(|t| TagLabel::parse(t)).collect();
            let sentence = AnnotatedSentence::new(
                format!("{name}:{i}"),
                tokens.map_err(value_error)?,
                tags.map_err(value_error)?,
            )
            .map_err(value_error)?;
            built.push(sentence);
        }
        Ok(Self {
            inner: Corpus::from_sentences(name, built),
        })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn tagset(&self) -> Vec<String> {
        self.inner.tagset().iter().cloned().collect()
    }

    fn sentence_ids(&self) -> Vec<String> {
        self.inner
            .sentences()
            .iter()
            .map(|s| s.id().to_string())
            .collect()
    }

    /// `(tokens, tags, sentence_id)` for sentence `index`.
    fn sentence(&self, index: usize) -> PyResult<(Vec<String>, Vec<String>, String)> {
        let sentence = self
            .inner
            .sentences()
            .get(index)
            .ok_or_else(|| value_error(format!("sentence index {index} out of range")))?;
        Ok((
            sentence
                .tokens()
                .iter()
                .map(|t| t.as_str().to_string())
                .collect(),
            sentence.tags().iter().map(|t| t.to_string()).collect(),
            sentence.id().to_string(),
        ))
    }

    fn to_conll(&self) -> String {
        serialize_conll(&self.inner, &ColumnLayout::default())
    }

    /// Entity spans per sentence: `[(sentence_id, start, end, type, surface)]`.
    fn spans(&self) -> Vec<(String, usize, usize, String, String)> {
        self.inner
            .sentences()
            .iter()
            .flat_map(|s| {
                advner_core::corpus::extract_spans(s)
                    .into_iter()
                    .map(move |span| {
                        (
                            s.id().to_string(),
                            span.start,
                            span.end,
                            span.entity_type.clone(),
                            span.surface_text(),
                        )
                    })
            })
            .collect()
    }

    /// Seeded split into two disjoint parts; the first receives
    /// `round(ratio * len)` sentences.
    fn split(&self, ratio: f64, seed: u64) -> PyResult<(PyCorpus, PyCorpus)> {
        let (a, b) = split_corpus(&self.inner, &SplitSpec { ratio, seed }).map_err(value_error)?;
        Ok((PyCorpus { inner: a }, PyCorpus { inner: b }))
    }

    /// This corpus followed by `other` (tagsets unioned, ids disambiguated).
    fn concat(&self, other: &PyCorpus) -> PyCorpus {
        PyCorpus {
            inner: concat_corpora(&self.inner, &other.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus(name={:?}, sentences={}, tagset={:?})",
            self.inner.name(),
            self.inner.len(),
            self.tagset()
        )
    }
}

/// Per-type, per-locale replacement surface forms.
#[pyclass(name = "Gazetteer", from_py_object)]
#[derive(Clone)]
struct PyGazetteer {
    inner: Gazetteer,
}

#[pymethods]
impl PyGazetteer {
    /// The sample gazetteer bundled with the toolkit (PER and LOC for
    /// en-US/en-CA/en-IN, de-DE/de-AT/de-CH, hi-IN).
    #[staticmethod]
    fn builtin() -> Self {
        Self {
            inner: Gazetteer::builtin(),
        }
    }

    /// Load from JSON: `{locale: {entity_type: [surface, ...]}}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Gazetteer::from_json_str(text).map_err(value_error)?,
        })
    }

    fn locales(&self) -> Vec<String> {
        self.inner.locales().to_vec()
    }
}

/// Memorisation tagger built from a training corpus; tags longest
/// left-to-right surface matches.
#[pyclass(name = "StubTagger")]
struct PyStubTagger {
    inner: StubTagger,
}

#[pymethods]
impl PyStubTagger {
    #[new]
    fn new(train: &PyCorpus) -> Self {
        Self {
            inner: StubTagger::from_corpus(&train.inner),
        }
    }

    fn memory_size(&self) -> usize {
        self.inner.memory_size()
    }

    /// Tag every sentence of `corpus`, returning a prediction corpus whose
    /// sentences carry the input's ids (so `evaluate` aligns directly).
    fn tag(&self, corpus: &PyCorpus) -> PyResult<PyCorpus> {
        let sentences: Vec<Vec<Token>> = corpus
            .inner
            .sentences()
            .iter()
            .map(|s| s.tokens().to_vec())
            .collect();
        let predictions =
            tag_sentences(&self.inner, &sentences, corpus.inner.name()).map_err(value_error)?;
        let realigned = predictions
            .sentences()
            .iter()
            .zip(corpus.inner.sentences())
            .map(|(p, input)| p.with_id(input.id()))
            .collect();
        Ok(PyCorpus {
            inner: Corpus::from_sentences(corpus.inner.name(), realigned),
        })
    }
}

fn build_config(
    method: PerturbationMethod,
    seed: u64,
    max_masks: usize,
    locales: Option<Vec<String>>,
    faker_types: Option<Vec<String>>,
) -> PerturbationConfig {
    let mut config = PerturbationConfig::new(method, seed);
    config.max_masks = max_masks;
    if let Some(locales) = locales {
        config.locales = locales;
    }
    if let Some(types) = faker_types {
        config.faker_types = types.into_iter().collect();
    }
    config
}

/// Generate an adversarial variant of `corpus`.
///
/// `method`: "rs", "faker", "mask", "para" or "m+r". Model roles run as
/// deterministic offline stubs: masking draws suggestions from `train` (or
/// the corpus itself), paraphrasing reads the `paraphrases` dict
/// (sentence_id -> text; missing ids are discarded) or echoes the sentence
/// when no dict is given. Returns `(variant, records)` where `records` is
/// one dict per input sentence.
#[pyfunction]
#[pyo3(signature = (
    corpus, method, seed,
    max_masks=3, locales=None, faker_types=None, gazetteer=None, train=None, paraphrases=None
))]
#[allow(clippy::too_many_arguments)]
fn perturb(
    py: Python<'_>,
    corpus: &PyCorpus,
    method: &str,
    seed: u64,
    max_masks: usize,
    locales: Option<Vec<String>>,
    faker_types: Option<Vec<String>>,
    gazetteer: Option<PyGazetteer>,
    train: Option<PyCorpus>,
    paraphrases: Option<std::collections::HashMap<String, String>>,
) -> PyResult<(PyCorpus, Py<PyAny>)> {
    let method: PerturbationMethod = method.parse().map_err(value_error)?;
    let config = build_config(method, seed, max_masks, locales, faker_types);
    let input = &corpus.inner;

    let (variant, records) = match method {
        PerturbationMethod::RandomSample => random_sample(input, &config).map_err(value_error)?,
        PerturbationMethod::Faker => {
            let gazetteer = gazetteer
                .map(|g| g.inner)
                .unwrap_or_else(Gazetteer::builtin);
            gazetteer_replace(input, &gazetteer, &config).map_err(value_error)?
        }
        PerturbationMethod::Mask | PerturbationMethod::MaskPlusRandom => {
            let basis = train.as_ref().map(|t| &t.inner).unwrap_or(input);
            let suggester = StubMaskFiller::from_corpus(basis);
            match method {
                PerturbationMethod::Mask => {
                    mask_context(input, &suggester, &config).map_err(value_error)?
                }
                _ => mask_plus_random(input, &suggester, &config).map_err(value_error)?,
            }
        }
        PerturbationMethod::Paraphrase => {
            let provider: Box<dyn Paraphraser> = match paraphrases {
                Some(map) => {
                    let tsv: String = map
                        .iter()
                        .map(|(id, text)| format!("{id}\t{text}\n"))
                        .collect();
                    Box::new(FileParaphraser::from_tsv(&tsv).map_err(value_error)?)
                }
                None => Box::new(IdentityParaphraser),
            };
            paraphrase_corpus(input, provider.as_ref(), &config).map_err(value_error)?
        }
    };
    Ok((PyCorpus { inner: variant }, to_py_json(py, &records)?))
}

/// `(tokens, tags, discard_reason)`: exactly one side is populated.
type RemapResult = (Option<Vec<String>>, Option<Vec<String>>, Option<Py<PyAny>>);

/// Map the entity annotations of one sentence onto a paraphrase.
/// Returns `(tokens, tags, None)` when mapped, or `(None, None, reason)`
/// when discarded.
#[pyfunction]
fn remap_paraphrase(
    py: Python<'_>,
    corpus: &PyCorpus,
    sentence_index: usize,
    paraphrase: &str,
) -> PyResult<RemapResult> {
    let sentence = corpus
        .inner
        .sentences()
        .get(sentence_index)
        .ok_or_else(|| value_error(format!("sentence index {sentence_index} out of range")))?;
    let tokens = advner_core::corpus::tokenize(paraphrase);
    match advner_core::perturb::remap_paraphrase(sentence, &tokens) {
        advner_core::perturb::RemapOutcome::Mapped(mapped) => Ok((
            Some(
                mapped
                    .tokens()
                    .iter()
                    .map(|t| t.as_str().to_string())
                    .collect(),
            ),
            Some(mapped.tags().iter().map(|t| t.to_string()).collect()),
            None,
        )),
        advner_core::perturb::RemapOutcome::Discarded(reason) => {
            Ok((None, None, Some(to_py_json(py, &reason)?)))
        }
    }
}

/// Full evaluation report (strict micro-F1 plus all four schemas, overall
/// and per type) as a dict.
#[pyfunction(name = "evaluate")]
fn evaluate_py(py: Python<'_>, gold: &PyCorpus, pred: &PyCorpus) -> PyResult<Py<PyAny>> {
    let report = evaluate(&gold.inner, &pred.inner).map_err(value_error)?;
    to_py_json(py, &report)
}

/// seqeval-style strict micro-F1 as `(precision, recall, f1)`.
#[pyfunction(name = "micro_f1")]
fn micro_f1_py(gold: &PyCorpus, pred: &PyCorpus) -> PyResult<(f64, f64, f64)> {
    let prf = micro_f1(&gold.inner, &pred.inner).map_err(value_error)?;
    Ok((prf.precision, prf.recall, prf.f1))
}

/// Compare two report dicts (as produced by `evaluate`); returns F1 and
/// error-category deltas.
#[pyfunction]
fn compare(
    py: Python<'_>,
    report_a: &Bound<'_, PyAny>,
    report_b: &Bound<'_, PyAny>,
) -> PyResult<Py<PyAny>> {
    let dumps = py.import("json")?.getattr("dumps")?;
    let parse = |obj: &Bound<'_, PyAny>| -> PyResult<EvalReport> {
        let text: String = dumps.call1((obj,))?.extract()?;
        EvalReport::from_json(&text).map_err(value_error)
    };
    let table = compare_reports(&parse(report_a)?, &parse(report_b)?).map_err(value_error)?;
    to_py_json(py, &table)
}

/// Mean and sample standard deviation of a value list.
#[pyfunction(name = "summarize")]
fn summarize_py(values: Vec<f64>) -> PyResult<(f64, f64)> {
    let series = RunSeries::new(
        "series",
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (i as u64, *v))
            .collect(),
    )
    .map_err(value_error)?;
    summarize(&series).map_err(value_error)
}

/// Two-sided paired t-test over seed-matched `(seed, f1)` observations.
/// Returns a dict with t, df, p, mean_diff and the degenerate flag.
#[pyfunction(name = "paired_t_test")]
#[pyo3(signature = (a, b, condition_a="a", condition_b="b"))]
fn paired_t_test_py(
    py: Python<'_>,
    a: Vec<(u64, f64)>,
    b: Vec<(u64, f64)>,
    condition_a: &str,
    condition_b: &str,
) -> PyResult<Py<PyAny>> {
    let a = RunSeries::new(condition_a, a).map_err(value_error)?;
    let b = RunSeries::new(condition_b, b).map_err(value_error)?;
    let result = paired_t_test(&a, &b).map_err(value_error)?;
    to_py_json(py, &result)
}

#[pymodule]
fn advner(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyGazetteer>()?;
    m.add_class::<PyStubTagger>()?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(remap_paraphrase, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_py, m)?)?;
    m.add_function(wrap_pyfunction!(micro_f1_py, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_py, m)?)?;
    m.add_function(wrap_pyfunction!(paired_t_test_py, m)?)?;
    Ok(())
}
