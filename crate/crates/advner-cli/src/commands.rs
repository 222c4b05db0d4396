//! Command implementations. Every run is reproducible from its resolved
//! configuration plus the input files; the resolved config and input
//! digests are written to a `.meta.json` sidecar next to each output.

use std::fmt;
use std::path::{Path, PathBuf};

use advner_core::corpus::{
    concat_corpora, parse_conll, serialize_conll, split_corpus, ColumnLayout, Corpus, CorpusError,
    ParseOptions, SplitSpec,
};
use advner_core::evaluate::{
    compare_reports, evaluate, EvalError, EvalReport, EvalSchema, SchemaResult,
};
use advner_core::gazetteer::{Gazetteer, GazetteerError};
use advner_core::modelclient::{
    tag_sentences, ClientError, FileParaphraser, HttpMaskFiller, HttpParaphraser, HttpTagger,
    IdentityParaphraser, ModelEndpoint, ModelRole, Paraphraser, StubMaskFiller, StubTagger, Tagger,
    TokenSuggester,
};
use advner_core::perturb::{
    gazetteer_replace, mask_context, mask_plus_random, paraphrase_corpus, random_sample,
    records_to_jsonl, PerturbError, PerturbationConfig, PerturbationMethod,
};
use advner_core::stats::{paired_t_test, parse_run_series, RunSeries, StatsError};

use crate::args::{Cli, Command, EndpointArgs, ParseArgs};
use crate::meta::Meta;

/// Errors carrying the documented exit codes: 1 usage, 2 data, 3 transport.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Data(msg) => write!(f, "data: {msg}"),
            CliError::Transport(msg) => write!(f, "transport: {msg}"),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GazetteerError> for CliError {
    fn from(e: GazetteerError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::Transport(e.to_string())
    }
}

impl From<PerturbError> for CliError {
    fn from(e: PerturbError) -> Self {
        match e {
            PerturbError::Client(inner) => CliError::Transport(inner.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Values loaded from the optional JSON config file; flags win over these,
/// these win over defaults.
#[derive(Debug, Default)]
struct FileConfig(serde_json::Map<String, serde_json::Value>);

impl FileConfig {
    fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            CliError::Usage(format!("config {} is not valid JSON: {e}", path.display()))
        })?;
        match value {
            serde_json::Value::Object(map) => Ok(Self(map)),
            _ => Err(CliError::Usage(format!(
                "config {} must be a JSON object",
                path.display()
            ))),
        }
    }

    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(serde_json::Value::as_u64)
    }

    fn usize(&self, key: &str) -> Option<usize> {
        self.u64(key).map(|v| v as usize)
    }

    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(serde_json::Value::as_f64)
    }

    fn bool(&self, key: &str) -> Option<bool> {
        self.0.get(key).and_then(serde_json::Value::as_bool)
    }

    fn string(&self, key: &str) -> Option<String> {
        self.0
            .get(key)
            .and_then(serde_json::Value::as_str)
            .map(str::to_string)
    }

    fn string_list(&self, key: &str) -> Option<Vec<String>> {
        self.0.get(key).and_then(|v| {
            v.as_array().map(|items| {
                items
                    .iter()
                    .filter_map(serde_json::Value::as_str)
                    .map(str::to_string)
                    .collect()
            })
        })
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}

struct LoadedCorpus {
    corpus: Corpus,
    bytes: Vec<u8>,
    path: PathBuf,
}

fn resolve_parse_options(name: &str, args: &ParseArgs, config: &FileConfig) -> ParseOptions {
    let mut options = ParseOptions::new(name);
    options.tag_column = args.tag_column.or_else(|| config.usize("tag_column"));
    options.coerce_tags = args.coerce_tags || config.bool("coerce_tags").unwrap_or(false);
    if !args.tagset.is_empty() {
        options.tagset = Some(args.tagset.iter().cloned().collect());
    } else if let Some(list) = config.string_list("tagset") {
        options.tagset = Some(list.into_iter().collect());
    }
    options
}

fn read_corpus(
    path: &Path,
    name: &str,
    args: &ParseArgs,
    config: &FileConfig,
) -> Result<LoadedCorpus, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Data(format!("{} is not UTF-8", path.display())))?;
    let options = resolve_parse_options(name, args, config);
    let parsed = parse_conll(&text, &options)?;
    Ok(LoadedCorpus {
        corpus: parsed.corpus,
        bytes,
        path: path.to_path_buf(),
    })
}

fn write_with_meta(path: &Path, content: &str, meta: &Meta) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    meta.write_for(path)?;
    Ok(())
}

fn write_corpus(path: &Path, corpus: &Corpus, meta: &Meta) -> Result<(), CliError> {
    write_with_meta(
        path,
        &serialize_conll(corpus, &ColumnLayout::default()),
        meta,
    )
}

fn parse_schema(raw: &str) -> Result<EvalSchema, CliError> {
    match raw.to_ascii_lowercase().as_str() {
        "strict" => Ok(EvalSchema::Strict),
        "exact" => Ok(EvalSchema::Exact),
        "partial" => Ok(EvalSchema::Partial),
        "type" => Ok(EvalSchema::Type),
        other => Err(CliError::Usage(format!(
            "unknown schema `{other}` (expected strict, exact, partial or type)"
        ))),
    }
}

fn build_endpoint(
    role: ModelRole,
    url: &str,
    args: &EndpointArgs,
    config: &FileConfig,
    jobs: Option<usize>,
) -> ModelEndpoint {
    let mut endpoint = ModelEndpoint::new(url, role);
    if let Some(secs) = args.timeout_secs.or_else(|| config.u64("timeout_secs")) {
        endpoint.timeout = std::time::Duration::from_secs(secs);
    }
    if let Some(retries) = args
        .retries
        .or_else(|| config.u64("retries").map(|v| v as u32))
    {
        endpoint.retries = retries;
    }
    if let Some(batch) = args.batch_size.or_else(|| config.usize("batch_size")) {
        endpoint.batch_size = batch;
    }
    if let Some(jobs) = jobs.or_else(|| config.usize("jobs")) {
        endpoint.max_in_flight = jobs.max(1);
    }
    if let Some(token) = args
        .bearer_token
        .clone()
        .or_else(|| config.string("bearer_token"))
    {
        endpoint.bearer_token = Some(token);
    }
    if let Some(sentinel) = args
        .mask_sentinel
        .clone()
        .or_else(|| config.string("mask_sentinel"))
    {
        endpoint.mask_sentinel = sentinel;
    }
    endpoint
}

/// Schema sections and scope rows of a report, restricted per the flags.
fn render_restricted(report: &EvalReport, schema: Option<EvalSchema>, per_type: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "strict micro-F1 (seqeval): P {:.4}  R {:.4}  F1 {:.4}\n",
        report.strict_micro_f1.precision, report.strict_micro_f1.recall, report.strict_micro_f1.f1
    ));
    let schemas: Vec<EvalSchema> = match schema {
        Some(s) => vec![s],
        None => EvalSchema::ALL.to_vec(),
    };
    for schema in schemas {
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
        row("overall", report.overall.schema(schema));
        if per_type {
            for (ty, grid) in &report.per_type {
                row(ty, grid.schema(schema));
            }
        }
    }
    out
}

fn report_tsv(report: &EvalReport, schema: Option<EvalSchema>, per_type: bool) -> String {
    let mut out = String::from(
        "scope\tschema\tprecision\trecall\tf1\tcorrect\tincorrect\tpartial\tmissed\tspurious\n",
    );
    let schemas: Vec<EvalSchema> = match schema {
        Some(s) => vec![s],
        None => EvalSchema::ALL.to_vec(),
    };
    let mut rows: Vec<(String, &advner_core::evaluate::SchemaGrid)> =
        vec![("overall".to_string(), &report.overall)];
    if per_type {
        for (ty, grid) in &report.per_type {
            rows.push((ty.clone(), grid));
        }
    }
    for (scope, grid) in rows {
        for schema in &schemas {
            let r = grid.schema(*schema);
            out.push_str(&format!(
                "{scope}\t{schema}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{}\n",
                r.precision,
                r.recall,
                r.f1,
                r.counts.correct,
                r.counts.incorrect,
                r.counts.partial,
                r.counts.missed,
                r.counts.spurious
            ));
        }
    }
    out
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = FileConfig::load(cli.config.as_ref())?;
    let offline = cli.offline || config.bool("offline").unwrap_or(false);
    let jobs = cli.jobs;

    match cli.command {
        Command::Perturb {
            method,
            seed,
            max_masks,
            locales,
            faker_types,
            gazetteer,
            paraphrase_file,
            train,
            parse,
            endpoint,
            input,
            output,
        } => cmd_perturb(CmdPerturb {
            method,
            seed,
            max_masks,
            locales,
            faker_types,
            gazetteer,
            paraphrase_file,
            train,
            parse,
            endpoint,
            input,
            output,
            offline,
            jobs,
            config,
        }),
        Command::Tag {
            train,
            parse,
            endpoint,
            input,
            output,
        } => cmd_tag(
            train, parse, endpoint, input, output, offline, jobs, &config,
        ),
        Command::Evaluate {
            out,
            schema,
            per_type,
            parse,
            gold,
            pred,
        } => cmd_evaluate(out, schema, per_type, parse, gold, pred, &config),
        Command::Compare {
            format,
            out,
            report_a,
            report_b,
        } => cmd_compare(format, out, report_a, report_b, &config),
        Command::Split {
            ratio,
            seed,
            parse,
            input,
            out_first,
            out_second,
        } => cmd_split(ratio, seed, parse, input, out_first, out_second, &config),
        Command::Augment {
            train,
            adv,
            ratio,
            seed,
            out_retrain,
            out_finetune,
            out_holdout,
            parse,
        } => cmd_augment(
            train,
            adv,
            ratio,
            seed,
            out_retrain,
            out_finetune,
            out_holdout,
            parse,
            &config,
        ),
        Command::Significance {
            condition_a,
            condition_b,
            threshold,
            out,
            series_a,
            series_b,
        } => cmd_significance(
            condition_a,
            condition_b,
            threshold,
            out,
            series_a,
            series_b,
            &config,
        ),
        Command::Report {
            format,
            schema,
            per_type,
            report,
        } => cmd_report(format, schema, per_type, report),
    }
}

struct CmdPerturb {
    method: String,
    seed: Option<u64>,
    max_masks: Option<usize>,
    locales: Vec<String>,
    faker_types: Vec<String>,
    gazetteer: Option<String>,
    paraphrase_file: Option<PathBuf>,
    train: Option<PathBuf>,
    parse: ParseArgs,
    endpoint: EndpointArgs,
    input: PathBuf,
    output: PathBuf,
    offline: bool,
    jobs: Option<usize>,
    config: FileConfig,
}

fn cmd_perturb(cmd: CmdPerturb) -> Result<(), CliError> {
    let method: PerturbationMethod = cmd
        .method
        .parse()
        .map_err(|e: PerturbError| CliError::Usage(e.to_string()))?;
    let seed = cmd.seed.or_else(|| cmd.config.u64("seed")).unwrap_or(0);

    let mut perturbation = PerturbationConfig::new(method, seed);
    if let Some(max_masks) = cmd.max_masks.or_else(|| cmd.config.usize("max_masks")) {
        perturbation.max_masks = max_masks;
    }
    if !cmd.locales.is_empty() {
        perturbation.locales = cmd.locales.clone();
    } else if let Some(locales) = cmd.config.string_list("locales") {
        perturbation.locales = locales;
    }
    if !cmd.faker_types.is_empty() {
        perturbation.faker_types = cmd.faker_types.iter().cloned().collect();
    } else if let Some(types) = cmd.config.string_list("faker_types") {
        perturbation.faker_types = types.into_iter().collect();
    }

    let loaded = read_corpus(&cmd.input, &stem(&cmd.input), &cmd.parse, &cmd.config)?;
    let endpoint_url = cmd
        .endpoint
        .endpoint
        .clone()
        .or_else(|| cmd.config.string("endpoint"));

    let gazetteer_source = cmd
        .gazetteer
        .clone()
        .or_else(|| cmd.config.string("gazetteer"))
        .unwrap_or_else(|| "builtin".to_string());

    let (variant, records) = match method {
        PerturbationMethod::RandomSample => random_sample(&loaded.corpus, &perturbation)?,
        PerturbationMethod::Faker => {
            let gazetteer = if gazetteer_source == "builtin" {
                Gazetteer::builtin()
            } else {
                let text = std::fs::read_to_string(&gazetteer_source).map_err(|e| {
                    CliError::Data(format!("cannot read gazetteer {gazetteer_source}: {e}"))
                })?;
                Gazetteer::from_json_str(&text)?
            };
            gazetteer_replace(&loaded.corpus, &gazetteer, &perturbation)?
        }
        PerturbationMethod::Mask | PerturbationMethod::MaskPlusRandom => {
            let stub_basis = match &cmd.train {
                Some(path) => read_corpus(path, &stem(path), &cmd.parse, &cmd.config)?.corpus,
                None => loaded.corpus.clone(),
            };
            let suggester: Box<dyn TokenSuggester> = match (&endpoint_url, cmd.offline) {
                (Some(url), false) => Box::new(HttpMaskFiller::new(build_endpoint(
                    ModelRole::MaskFill,
                    url,
                    &cmd.endpoint,
                    &cmd.config,
                    cmd.jobs,
                ))),
                _ => Box::new(StubMaskFiller::from_corpus(&stub_basis)),
            };
            match method {
                PerturbationMethod::Mask => {
                    mask_context(&loaded.corpus, suggester.as_ref(), &perturbation)?
                }
                _ => mask_plus_random(&loaded.corpus, suggester.as_ref(), &perturbation)?,
            }
        }
        PerturbationMethod::Paraphrase => {
            let provider: Box<dyn Paraphraser> =
                match (&cmd.paraphrase_file, &endpoint_url, cmd.offline) {
                    (Some(path), _, _) => {
                        let text = std::fs::read_to_string(path).map_err(|e| {
                            CliError::Data(format!("cannot read {}: {e}", path.display()))
                        })?;
                        Box::new(FileParaphraser::from_tsv(&text)?)
                    }
                    (None, _, true) => Box::new(IdentityParaphraser),
                    (None, Some(url), false) => Box::new(HttpParaphraser::new(build_endpoint(
                        ModelRole::Paraphrase,
                        url,
                        &cmd.endpoint,
                        &cmd.config,
                        cmd.jobs,
                    ))),
                    (None, None, false) => {
                        return Err(CliError::Usage(
                            "para needs --paraphrase-file, --endpoint, or --offline".to_string(),
                        ))
                    }
                };
            paraphrase_corpus(&loaded.corpus, provider.as_ref(), &perturbation)?
        }
    };

    let resolved = serde_json::json!({
        "method": method.slug(),
        "seed": seed,
        "max_masks": perturbation.max_masks,
        "locales": perturbation.locales,
        "faker_types": perturbation.faker_types.iter().collect::<Vec<_>>(),
        "gazetteer": gazetteer_source,
        "offline": cmd.offline,
        "endpoint": endpoint_url,
        "coerce_tags": cmd.parse.coerce_tags,
        "tag_column": cmd.parse.tag_column,
    });
    let mut meta = Meta::new("perturb", resolved);
    meta.record_input(&loaded.path, &loaded.bytes);
    write_corpus(&cmd.output, &variant, &meta)?;
    let mut records_path = cmd.output.as_os_str().to_owned();
    records_path.push(".records.jsonl");
    let records_path = PathBuf::from(records_path);
    write_with_meta(&records_path, &records_to_jsonl(&records), &meta)?;

    let discarded = records.iter().filter(|r| r.discarded.is_some()).count();
    eprintln!(
        "perturb {}: {} sentences in, {} out, {} discarded -> {}",
        method.slug(),
        loaded.corpus.len(),
        variant.len(),
        discarded,
        cmd.output.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tag(
    train: Option<PathBuf>,
    parse: ParseArgs,
    endpoint_args: EndpointArgs,
    input: PathBuf,
    output: PathBuf,
    offline: bool,
    jobs: Option<usize>,
    config: &FileConfig,
) -> Result<(), CliError> {
    let loaded = read_corpus(&input, &stem(&input), &parse, config)?;
    let endpoint_url = endpoint_args
        .endpoint
        .clone()
        .or_else(|| config.string("endpoint"));
    let train = train.or_else(|| config.string("train").map(PathBuf::from));

    let mut train_digest: Option<(PathBuf, Vec<u8>)> = None;
    let tagger: Box<dyn Tagger> = if offline || endpoint_url.is_none() {
        let Some(train_path) = train else {
            return Err(CliError::Usage(
                "offline tagging needs --train <corpus> to build the stub".to_string(),
            ));
        };
        let train_corpus = read_corpus(&train_path, &stem(&train_path), &parse, config)?;
        train_digest = Some((train_corpus.path.clone(), train_corpus.bytes.clone()));
        Box::new(StubTagger::from_corpus(&train_corpus.corpus))
    } else {
        Box::new(HttpTagger::new(build_endpoint(
            ModelRole::Tagger,
            endpoint_url.as_deref().expect("checked above"),
            &endpoint_args,
            config,
            jobs,
        )))
    };

    let sentences: Vec<_> = loaded
        .corpus
        .sentences()
        .iter()
        .map(|s| s.tokens().to_vec())
        .collect();
    let predictions = tag_sentences(tagger.as_ref(), &sentences, loaded.corpus.name())?;

    let resolved = serde_json::json!({
        "offline": offline,
        "endpoint": endpoint_url,
        "train": train_digest.as_ref().map(|(p, _)| p.display().to_string()),
        "coerce_tags": parse.coerce_tags,
        "tag_column": parse.tag_column,
    });
    let mut meta = Meta::new("tag", resolved);
    meta.record_input(&loaded.path, &loaded.bytes);
    if let Some((path, bytes)) = &train_digest {
        meta.record_input(path, bytes);
    }
    write_corpus(&output, &predictions, &meta)?;
    eprintln!(
        "tag: {} sentences -> {}",
        predictions.len(),
        output.display()
    );
    Ok(())
}

fn cmd_evaluate(
    out: Option<PathBuf>,
    schema: Option<String>,
    per_type: bool,
    parse: ParseArgs,
    gold_path: PathBuf,
    pred_path: PathBuf,
    config: &FileConfig,
) -> Result<(), CliError> {
    // Both files parse under the gold corpus name so sentence ids align by
    // ordinal.
    let name = stem(&gold_path);
    let gold = read_corpus(&gold_path, &name, &parse, config)?;
    let pred = read_corpus(&pred_path, &name, &parse, config)?;
    let schema = schema.as_deref().map(parse_schema).transpose()?;

    let mut report = evaluate(&gold.corpus, &pred.corpus)?;
    report.gold_corpus = stem(&gold_path);
    report.pred_corpus = stem(&pred_path);
    print!("{}", render_restricted(&report, schema, per_type));

    if let Some(out) = out {
        let resolved = serde_json::json!({
            "schema": schema.map(|s| s.as_str()),
            "per_type": per_type,
            "coerce_tags": parse.coerce_tags,
            "tag_column": parse.tag_column,
        });
        let mut meta = Meta::new("evaluate", resolved);
        meta.record_input(&gold.path, &gold.bytes);
        meta.record_input(&pred.path, &pred.bytes);
        write_with_meta(&out, &report.to_json(), &meta)?;
        eprintln!("evaluate: report -> {}", out.display());
    }
    Ok(())
}

fn cmd_compare(
    format: Option<String>,
    out: Option<PathBuf>,
    report_a: PathBuf,
    report_b: PathBuf,
    config: &FileConfig,
) -> Result<(), CliError> {
    let format = format
        .or_else(|| config.string("format"))
        .unwrap_or_else(|| "tsv".to_string());
    let bytes_a = std::fs::read(&report_a)?;
    let bytes_b = std::fs::read(&report_b)?;
    let a = EvalReport::from_json(
        std::str::from_utf8(&bytes_a)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", report_a.display())))?,
    )
    .map_err(|e| CliError::Data(format!("{}: {e}", report_a.display())))?;
    let b = EvalReport::from_json(
        std::str::from_utf8(&bytes_b)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", report_b.display())))?,
    )
    .map_err(|e| CliError::Data(format!("{}: {e}", report_b.display())))?;

    let table = compare_reports(&a, &b)?;
    let rendered = match format.as_str() {
        "tsv" => table.to_tsv(),
        "json" => table.to_json(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown format `{other}` (expected tsv or json)"
            )))
        }
    };
    print!("{rendered}");
    if let Some(out) = out {
        let mut meta = Meta::new("compare", serde_json::json!({ "format": format }));
        meta.record_input(&report_a, &bytes_a);
        meta.record_input(&report_b, &bytes_b);
        write_with_meta(&out, &rendered, &meta)?;
    }
    Ok(())
}

fn cmd_split(
    ratio: Option<f64>,
    seed: Option<u64>,
    parse: ParseArgs,
    input: PathBuf,
    out_first: PathBuf,
    out_second: PathBuf,
    config: &FileConfig,
) -> Result<(), CliError> {
    let ratio = ratio.or_else(|| config.f64("ratio")).unwrap_or(0.6);
    let seed = seed.or_else(|| config.u64("seed")).unwrap_or(0);
    let loaded = read_corpus(&input, &stem(&input), &parse, config)?;
    let (first, second) = split_corpus(&loaded.corpus, &SplitSpec { ratio, seed })?;

    let resolved = serde_json::json!({
        "ratio": ratio,
        "seed": seed,
        "coerce_tags": parse.coerce_tags,
        "tag_column": parse.tag_column,
    });
    let mut meta = Meta::new("split", resolved);
    meta.record_input(&loaded.path, &loaded.bytes);
    write_corpus(&out_first, &first, &meta)?;
    write_corpus(&out_second, &second, &meta)?;
    eprintln!(
        "split: {} -> {} + {}",
        loaded.corpus.len(),
        first.len(),
        second.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_augment(
    train_path: PathBuf,
    adv_path: PathBuf,
    ratio: Option<f64>,
    seed: Option<u64>,
    out_retrain: PathBuf,
    out_finetune: PathBuf,
    out_holdout: Option<PathBuf>,
    parse: ParseArgs,
    config: &FileConfig,
) -> Result<(), CliError> {
    let ratio = ratio.or_else(|| config.f64("ratio")).unwrap_or(0.6);
    let seed = seed.or_else(|| config.u64("seed")).unwrap_or(0);
    let train = read_corpus(&train_path, &stem(&train_path), &parse, config)?;
    let adv = read_corpus(&adv_path, &stem(&adv_path), &parse, config)?;

    let (tune_part, holdout) = split_corpus(&adv.corpus, &SplitSpec { ratio, seed })?;
    let retrain = concat_corpora(&train.corpus, &tune_part);

    let resolved = serde_json::json!({
        "ratio": ratio,
        "seed": seed,
        "coerce_tags": parse.coerce_tags,
        "tag_column": parse.tag_column,
    });
    let mut meta = Meta::new("augment", resolved);
    meta.record_input(&train.path, &train.bytes);
    meta.record_input(&adv.path, &adv.bytes);
    write_corpus(&out_retrain, &retrain, &meta)?;
    write_corpus(&out_finetune, &tune_part, &meta)?;
    if let Some(out_holdout) = &out_holdout {
        write_corpus(out_holdout, &holdout, &meta)?;
    }
    eprintln!(
        "augment: retrain {} sentences, finetune {}, holdout {}",
        retrain.len(),
        tune_part.len(),
        holdout.len()
    );
    Ok(())
}

fn select_series(path: &Path, wanted: Option<&str>, text: &str) -> Result<RunSeries, CliError> {
    let mut series = parse_run_series(text)?;
    match wanted {
        Some(name) => series
            .into_iter()
            .find(|s| s.condition == name)
            .ok_or_else(|| CliError::Data(format!("{}: no series named `{name}`", path.display()))),
        None => {
            if series.len() == 1 {
                Ok(series.remove(0))
            } else {
                Err(CliError::Usage(format!(
                    "{} holds {} conditions; pick one with --condition-a/--condition-b",
                    path.display(),
                    series.len()
                )))
            }
        }
    }
}

fn cmd_significance(
    condition_a: Option<String>,
    condition_b: Option<String>,
    threshold: Option<f64>,
    out: Option<PathBuf>,
    series_a: PathBuf,
    series_b: PathBuf,
    config: &FileConfig,
) -> Result<(), CliError> {
    let threshold = threshold
        .or_else(|| config.f64("threshold"))
        .unwrap_or(0.001);
    let bytes_a = std::fs::read(&series_a)?;
    let bytes_b = std::fs::read(&series_b)?;
    let a = select_series(
        &series_a,
        condition_a.as_deref(),
        std::str::from_utf8(&bytes_a)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", series_a.display())))?,
    )?;
    let b = select_series(
        &series_b,
        condition_b.as_deref(),
        std::str::from_utf8(&bytes_b)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", series_b.display())))?,
    )?;

    let result = paired_t_test(&a, &b)?;
    // Non-finite t (degenerate-certain case) serialises as null.
    let rendered = serde_json::to_string_pretty(&serde_json::json!({
        "t": result.t_statistic,
        "df": result.degrees_of_freedom,
        "p": result.p_value,
        "mean_diff": result.mean_difference,
        "significant": result.significant_at(threshold),
        "degenerate": result.degenerate,
    }))
    .expect("result serialises");
    println!("{rendered}");

    if let Some(out) = out {
        let resolved = serde_json::json!({
            "threshold": threshold,
            "condition_a": a.condition,
            "condition_b": b.condition,
        });
        let mut meta = Meta::new("significance", resolved);
        meta.record_input(&series_a, &bytes_a);
        meta.record_input(&series_b, &bytes_b);
        write_with_meta(&out, &rendered, &meta)?;
    }
    Ok(())
}

fn cmd_report(
    format: Option<String>,
    schema: Option<String>,
    per_type: bool,
    report_path: PathBuf,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&report_path)?;
    let report = EvalReport::from_json(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", report_path.display())))?;
    let schema = schema.as_deref().map(parse_schema).transpose()?;
    match format.as_deref().unwrap_or("text") {
        "text" => print!("{}", render_restricted(&report, schema, per_type)),
        "tsv" => print!("{}", report_tsv(&report, schema, per_type)),
        other => {
            return Err(CliError::Usage(format!(
                "unknown format `{other}` (expected text or tsv)"
            )))
        }
    }
    Ok(())
}
