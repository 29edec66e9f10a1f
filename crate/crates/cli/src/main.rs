use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mtprep::bleu::{corpus_bleu, BleuConfig, Smoothing};
use mtprep::corpus::{read_bitext, BitextLocation, BitextWriter, SentencePair};
use mtprep::dedup::DedupMode;
use mtprep::dialect::{distribution_report, train_dialect_classifier, DialectModel, Variety, REFERENCE_DISTRIBUTIONS};
use mtprep::normalize::{tokenize, Normalizer};
use mtprep::pipeline::{
    build_mix, run_pipeline, FunnelReport, InputSpec, MixPreset, MixSource, PipelineConfig, StageConfig, CHUNK_SIZE,
};
use mtprep::qa::{containment_ratios, containment_sweep, default_sweep_thresholds, BandConfig, ContainmentConfig, ScorerSpec};
use mtprep::registry::Registry;
use mtprep::split::MSA_DEV_SIZE;
use mtprep::subword::{learn_bpe, BpeModel, DEFAULT_MERGES};
use mtprep::truecase::{apply_truecase, train_truecaser, TruecaseModel};

#[derive(Parser)]
#[command(name = "mtprep", version, about = "Arabic-English parallel corpus preparation and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity band and n-gram containment filters.
    Qa(QaArgs),
    /// Exact deduplication.
    Dedup(DedupArgs),
    /// Hold out a seeded random dev set.
    Split(SplitArgs),
    /// Learn BPE merges from a bitext (both sides, jointly).
    BpeLearn(BpeLearnArgs),
    /// Segment a bitext with a learned BPE model.
    BpeApply(BpeApplyArgs),
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu(BleuArgs),
    /// Learn a truecasing model from cased text, one sentence per line.
    TruecaseTrain(TextModelArgs),
    /// Restore casing of lowercased text.
    Truecase(ApplyModelArgs),
    /// Train the MSA/dialect classifier from `label<TAB>text` lines.
    DialectTrain(TextModelArgs),
    /// MSA/dialect distribution of a text file.
    DialectReport(DialectReportArgs),
    /// Run a full preparation pipeline from a TOML config.
    Pipeline(PipelineArgs),
    /// Concatenate bitexts into training mixes.
    Mix(MixArgs),
    /// List the dataset registry.
    Datasets {
        /// Alternative registry manifest (CSV).
        #[arg(long)]
        registry: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Tab-separated bitext.
    #[arg(long, conflicts_with_all = ["src", "tgt"], required_unless_present = "src")]
    input: Option<PathBuf>,
    /// Source side, one sentence per line.
    #[arg(long, requires = "tgt")]
    src: Option<PathBuf>,
    /// Target side, one sentence per line.
    #[arg(long, requires = "src")]
    tgt: Option<PathBuf>,
}

impl InputArgs {
    fn spec(&self) -> InputSpec {
        InputSpec {
            tsv: self.input.clone(),
            src: self.src.clone(),
            tgt: self.tgt.clone(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write removed pairs with their reason to removed.tsv.
    #[arg(long)]
    audit: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    Lexical,
    Sidecar,
}

#[derive(Args)]
struct QaArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, required_unless_present = "sweep")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    audit: bool,
    #[arg(long, value_enum, default_value = "lexical")]
    scorer: ScorerKind,
    /// Source sentence vectors, one row per pair.
    #[arg(long, required_if_eq("scorer", "sidecar"))]
    src_vectors: Option<PathBuf>,
    /// Target sentence vectors, one row per pair.
    #[arg(long, required_if_eq("scorer", "sidecar"))]
    tgt_vectors: Option<PathBuf>,
    #[arg(long, default_value_t = BandConfig::DEFAULT_LO)]
    lo: f64,
    #[arg(long, default_value_t = BandConfig::DEFAULT_HI)]
    hi: f64,
    #[arg(long, default_value_t = ContainmentConfig::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = ContainmentConfig::DEFAULT_ORDER)]
    order: usize,
    #[arg(long)]
    no_band: bool,
    #[arg(long)]
    no_containment: bool,
    /// Print how many pairs each containment threshold would remove instead
    /// of filtering.
    #[arg(long)]
    sweep: bool,
}

#[derive(Args)]
struct DedupArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Key: pair, src-only or tgt-only.
    #[arg(long, default_value = "pair")]
    mode: DedupMode,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = MSA_DEV_SIZE)]
    n_dev: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BpeLearnArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_MERGES)]
    merges: usize,
    /// Model file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct BpeApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Segmented bitext (tab-separated).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BleuArgs {
    /// System output, one tokenized sentence per line.
    #[arg(long)]
    hyp: PathBuf,
    /// Reference, aligned line by line with the hypotheses.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    lowercase: bool,
    /// Add-one smoothing of the 2- to 4-gram precisions.
    #[arg(long)]
    smooth: bool,
    /// Restore hypothesis casing with this model before scoring.
    #[arg(long)]
    truecase_model: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TextModelArgs {
    #[arg(long)]
    input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ApplyModelArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct DialectReportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Text to classify, one sentence per line.
    #[arg(long)]
    input: PathBuf,
    /// Also print the published distribution rows for comparison.
    #[arg(long)]
    reference: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the worker count in the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    preset: MixPreset,
    /// MSA source as `name=path.tsv`; repeat in concatenation order.
    #[arg(long, required = true)]
    msa: Vec<String>,
    /// Dialectal source as `name=path.tsv`.
    #[arg(long)]
    da: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    registry: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Qa(args) => qa(args),
        Command::Dedup(args) => run_stages(
            args.input.spec(),
            &args.run,
            vec![StageConfig::Dedup { mode: args.mode }],
        ),
        Command::Split(args) => run_stages(
            args.input.spec(),
            &args.run,
            vec![StageConfig::Split {
                n_dev: args.n_dev,
                seed: Some(args.seed),
            }],
        ),
        Command::BpeLearn(args) => bpe_learn(args),
        Command::BpeApply(args) => bpe_apply(args),
        Command::Bleu(args) => bleu(args),
        Command::TruecaseTrain(args) => truecase_train(args),
        Command::Truecase(args) => truecase(args),
        Command::DialectTrain(args) => dialect_train(args),
        Command::DialectReport(args) => dialect_report(args),
        Command::Pipeline(args) => pipeline(args),
        Command::Mix(args) => mix(args),
        Command::Datasets { registry } => {
            let registry = load_registry(registry.as_deref())?;
            println!("name\tsrc\ttgt\tsize\tregion");
            for e in registry.entries() {
                println!("{}\t{}\t{}\t{}\t{}", e.name, e.src_lang, e.tgt_lang, e.declared_size, e.region);
            }
            Ok(())
        }
    }
}

fn run_config(config: &PipelineConfig) -> Result<FunnelReport> {
    let report = run_pipeline(config)?;
    print!("{}", report.to_text());
    Ok(report)
}

fn run_stages(input: InputSpec, run: &RunArgs, stages: Vec<StageConfig>) -> Result<()> {
    let mut config = PipelineConfig::new(input, &run.out);
    config.workers = run.workers;
    config.audit = run.audit;
    config.stages = stages;
    run_config(&config).map(drop)
}

fn qa(args: QaArgs) -> Result<()> {
    if args.sweep {
        let location = args.input.spec().location()?;
        let normalizer = Normalizer::default();
        let thresholds = default_sweep_thresholds();
        let mut removed = vec![0u64; thresholds.len()];
        let mut reader = read_bitext(&location)?;
        let mut total = 0u64;
        loop {
            let chunk: Vec<SentencePair> = reader.by_ref().take(CHUNK_SIZE).collect::<Result<_, _>>()?;
            if chunk.is_empty() {
                break;
            }
            total += chunk.len() as u64;
            let ratios = containment_ratios(&chunk, args.order, &normalizer);
            for (acc, point) in removed.iter_mut().zip(containment_sweep(&ratios, &thresholds)) {
                *acc += point.removed;
            }
        }
        println!("threshold\tremoved\tof {total}");
        for (t, n) in thresholds.iter().zip(removed) {
            println!("{t:.2}\t{n}");
        }
        return Ok(());
    }

    let mut stages = Vec::new();
    if !args.no_band {
        stages.push(StageConfig::Band { lo: args.lo, hi: args.hi });
    }
    if !args.no_containment {
        stages.push(StageConfig::Containment {
            threshold: args.threshold,
            order: args.order,
        });
    }
    if stages.is_empty() {
        bail!("both filters disabled; nothing to do");
    }
    let mut config = PipelineConfig::new(args.input.spec(), args.out.expect("required without --sweep"));
    config.workers = args.workers;
    config.audit = args.audit;
    config.stages = stages;
    if let ScorerKind::Sidecar = args.scorer {
        config.scorer = ScorerSpec::SidecarEmbedding {
            src_vectors: args.src_vectors.expect("required for sidecar"),
            tgt_vectors: args.tgt_vectors.expect("required for sidecar"),
        };
    }
    run_config(&config).map(drop)
}

fn bpe_learn(args: BpeLearnArgs) -> Result<()> {
    let location = args.input.spec().location()?;
    let pool = rayon_pool(args.workers)?;
    let table = pool.install(|| mtprep::pipeline::joint_frequencies(&location))?;
    let mut model = learn_bpe(&table, args.merges);
    model
        .attributes
        .insert("tokenizer".into(), mtprep::normalize::TOKENIZER_VERSION.into());
    std::fs::write(&args.output, model.to_file_string())
        .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!("learned {} merges from {} word types", model.num_merges(), table.len());
    Ok(())
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        bail!("workers must be at least 1");
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn bpe_apply(args: BpeApplyArgs) -> Result<()> {
    let model = BpeModel::parse(&read_text(&args.model)?).with_context(|| args.model.display().to_string())?;
    let mut segmenter = model.segmenter();
    let mut writer = BitextWriter::create(&BitextLocation::Tsv(args.output))?;
    for pair in read_bitext(&args.input.spec().location()?)? {
        let pair = pair?;
        let src = segmenter.apply(&tokenize(&pair.src)).join(" ");
        let tgt = segmenter.apply(&tokenize(&pair.tgt)).join(" ");
        writer.write(&SentencePair::new(pair.index, src, tgt))?;
    }
    writer.finish()?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map(|l| mtprep::corpus::nfc(&l)))
        .collect::<Result<_, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

fn tokenized(lines: &[String]) -> Vec<Vec<String>> {
    lines.iter().map(|l| tokenize(l)).collect()
}

fn bleu(args: BleuArgs) -> Result<()> {
    let mut hyps = tokenized(&read_lines(&args.hyp)?);
    let refs = tokenized(&read_lines(&args.reference)?);
    if let Some(path) = &args.truecase_model {
        let model = TruecaseModel::parse(&read_text(path)?).with_context(|| path.display().to_string())?;
        hyps = hyps.iter().map(|h| apply_truecase(&model, h)).collect();
    }
    let config = BleuConfig {
        lowercase: args.lowercase,
        smoothing: if args.smooth { Smoothing::AddOne } else { Smoothing::None },
        ..BleuConfig::default()
    };
    let report = corpus_bleu(&hyps, &refs, &config)?;
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    if let Some(diagnostic) = &report.diagnostic {
        eprintln!("warning: {diagnostic}");
    }
    Ok(())
}

fn truecase_train(args: TextModelArgs) -> Result<()> {
    let model = train_truecaser(tokenized(&read_lines(&args.input)?))?;
    std::fs::write(&args.output, model.to_file_string())
        .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!("{} word types", model.len());
    Ok(())
}

fn truecase(args: ApplyModelArgs) -> Result<()> {
    let model = TruecaseModel::parse(&read_text(&args.model)?).with_context(|| args.model.display().to_string())?;
    let mut out = BufWriter::new(
        File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?,
    );
    for line in read_lines(&args.input)? {
        writeln!(out, "{}", apply_truecase(&model, &tokenize(&line)).join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn dialect_train(args: TextModelArgs) -> Result<()> {
    let mut labeled = Vec::new();
    for (i, line) in read_lines(&args.input)?.into_iter().enumerate() {
        let Some((label, text)) = line.split_once('\t') else {
            bail!("{}: line {i}: expected `label<TAB>text`", args.input.display());
        };
        let label: Variety = label
            .parse()
            .with_context(|| format!("{}: line {i}", args.input.display()))?;
        labeled.push((text.to_string(), label));
    }
    let model = train_dialect_classifier(labeled)?;
    std::fs::write(&args.output, model.to_file_string())
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

fn dialect_report(args: DialectReportArgs) -> Result<()> {
    let model = DialectModel::parse(&read_text(&args.model)?).with_context(|| args.model.display().to_string())?;
    let report = distribution_report(&model, read_lines(&args.input)?)?;
    print!("{}", report.to_text());
    if args.reference {
        println!("# published rows");
        for r in REFERENCE_DISTRIBUTIONS {
            println!("{}\t{}\t{:.2}%\t{:.2}%", r.dataset, r.size, r.msa_percent, r.da_percent);
        }
    }
    Ok(())
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let mut config = PipelineConfig::load(&args.config)?;
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    run_config(&config).map(drop)
}

fn load_registry(path: Option<&Path>) -> Result<Registry> {
    Ok(match path {
        Some(path) => Registry::load(path)?,
        None => Registry::bundled(),
    })
}

fn parse_sources(specs: &[String]) -> Result<Vec<MixSource>> {
    specs
        .iter()
        .map(|spec| {
            let Some((name, path)) = spec.split_once('=') else {
                bail!("source `{spec}` is not of the form name=path");
            };
            Ok(MixSource {
                name: name.to_string(),
                location: BitextLocation::Tsv(path.into()),
            })
        })
        .collect()
}

fn mix(args: MixArgs) -> Result<()> {
    let registry = load_registry(args.registry.as_deref())?;
    let manifest = build_mix(
        args.preset,
        &parse_sources(&args.msa)?,
        &parse_sources(&args.da)?,
        &args.out,
        &registry,
    )?;
    for file in &manifest.files {
        println!("{}\t{}", file.file, file.pairs);
    }
    Ok(())
}
