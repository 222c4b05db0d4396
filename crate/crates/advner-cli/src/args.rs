//! Command-line surface. Most options are `Option<T>` so that values can be
//! merged with an optional JSON config file; precedence is flags > config
//! file > defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "advner",
    version,
    about = "Adversarial test sets, fine-grained evaluation and augmentation plumbing for BIO-tagged NER corpora"
)]
pub struct Cli {
    /// JSON config file supplying defaults for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Force deterministic in-process stubs for every model role.
    #[arg(long, global = true)]
    pub offline: bool,

    /// Cap on concurrent model requests.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct ParseArgs {
    /// Zero-based tag column (default: last column of each record).
    #[arg(long)]
    pub tag_column: Option<usize>,

    /// Repair IOB1 input / dangling I- tags instead of rejecting them.
    #[arg(long)]
    pub coerce_tags: bool,

    /// Comma-separated entity-type whitelist.
    #[arg(long, value_delimiter = ',')]
    pub tagset: Vec<String>,
}

#[derive(Debug, Args, Clone)]
pub struct EndpointArgs {
    /// Model server URL (JSON-over-HTTP protocol).
    #[arg(long)]
    pub endpoint: Option<String>,

    /// Request timeout in seconds.
    #[arg(long)]
    pub timeout_secs: Option<u64>,

    /// Re-attempts per failed request.
    #[arg(long)]
    pub retries: Option<u32>,

    /// Sentences per tagger request.
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Bearer token sent in the Authorization header.
    #[arg(long)]
    pub bearer_token: Option<String>,

    /// Mask sentinel token (default `[MASK]`).
    #[arg(long)]
    pub mask_sentinel: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an adversarial variant of a corpus.
    Perturb {
        /// rs | faker | mask | para | m+r
        #[arg(long)]
        method: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Maximum masked positions per sentence.
        #[arg(long)]
        max_masks: Option<usize>,
        /// Comma-separated locale pool for gazetteer replacement.
        #[arg(long, value_delimiter = ',')]
        locales: Vec<String>,
        /// Entity types subject to gazetteer replacement.
        #[arg(long, value_delimiter = ',')]
        faker_types: Vec<String>,
        /// Gazetteer JSON file; "builtin" (default) for the bundled sample.
        #[arg(long)]
        gazetteer: Option<String>,
        /// Pre-paraphrased TSV file (`sentence_id<TAB>text`).
        #[arg(long)]
        paraphrase_file: Option<PathBuf>,
        /// Corpus used to build the offline mask-filler stub
        /// (defaults to the input corpus itself).
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        parse: ParseArgs,
        #[command(flatten)]
        endpoint: EndpointArgs,
        input: PathBuf,
        output: PathBuf,
    },

    /// Tag a corpus with an NER model (or the offline memorisation stub).
    Tag {
        /// Training corpus for the offline stub tagger.
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        parse: ParseArgs,
        #[command(flatten)]
        endpoint: EndpointArgs,
        input: PathBuf,
        output: PathBuf,
    },

    /// Evaluate predictions against gold: strict micro-F1 plus the
    /// strict/exact/partial/type schema grid.
    Evaluate {
        /// Write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict the text rendering to one schema.
        #[arg(long)]
        schema: Option<String>,
        /// Include per-type rows in the text rendering.
        #[arg(long)]
        per_type: bool,
        #[command(flatten)]
        parse: ParseArgs,
        gold: PathBuf,
        pred: PathBuf,
    },

    /// Compare two evaluation reports (F1 and error-category deltas).
    Compare {
        /// tsv | json
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        report_a: PathBuf,
        report_b: PathBuf,
    },

    /// Split a corpus into two seeded parts (default 60/40).
    Split {
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        parse: ParseArgs,
        input: PathBuf,
        out_first: PathBuf,
        out_second: PathBuf,
    },

    /// Build augmentation outputs: train + adversarial part for
    /// re-training, the adversarial part alone for fine-tuning, and
    /// optionally the held-out remainder.
    Augment {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        adv: PathBuf,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_retrain: PathBuf,
        #[arg(long)]
        out_finetune: PathBuf,
        #[arg(long)]
        out_holdout: Option<PathBuf>,
        #[command(flatten)]
        parse: ParseArgs,
    },

    /// Paired t-test between two run-series files (JSON-lines of
    /// {condition, seed, f1}).
    Significance {
        /// Condition name to select from the first file.
        #[arg(long)]
        condition_a: Option<String>,
        /// Condition name to select from the second file.
        #[arg(long)]
        condition_b: Option<String>,
        /// Significance threshold on the p-value.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        series_a: PathBuf,
        series_b: PathBuf,
    },

    /// Render a saved evaluation report as text or TSV.
    Report {
        /// text | tsv
        #[arg(long)]
        format: Option<String>,
        /// Restrict to one schema.
        #[arg(long)]
        schema: Option<String>,
        /// Include per-type rows.
        #[arg(long)]
        per_type: bool,
        report: PathBuf,
    },
}
