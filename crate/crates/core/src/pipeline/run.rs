use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{PipelineConfig, Stage};
use super::report::{FunnelReport, StageReport, FUNNEL_JSON, FUNNEL_TEXT, FUNNEL_TIMINGS};
use crate::corpus::{read_bitext, BitextLocation, BitextWriter, SentencePair};
use crate::dedup::Deduplicator;
use crate::error::{Error, Result};
use crate::normalize::{tokenize, Normalizer, TOKENIZER_VERSION};
use crate::qa::{containment_ratios, BandConfig, BandVerdict, ContainmentConfig, Scorer};
use crate::split::{split_file, SplitManifest};
use crate::subword::{count_tokens, learn_bpe, BpeModel, FrequencyTable, Segmenter};

/// Pairs processed per batch. Fixed so that batch boundaries, and with them
/// every stage decision, do not depend on the worker count.
pub const CHUNK_SIZE: usize = 8192;

pub const CLEAN_FILE: &str = "clean.tsv";
pub const TRAIN_FILE: &str = "train.tsv";
pub const DEV_FILE: &str = "dev.tsv";
pub const SPLIT_MANIFEST: &str = "split.json";
pub const BPE_MODEL: &str = "bpe.model";
pub const AUDIT_FILE: &str = "removed.tsv";

pub fn bpe_file_name(name: &str) -> String {
    match name.strip_suffix(".tsv") {
        Some(stem) => format!("{stem}.bpe.tsv"),
        None => format!("{name}.bpe"),
    }
}

/// Output files are written under temporary names and renamed into place
/// only once every stage has succeeded.
struct Staging {
    dir: PathBuf,
    files: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl Staging {
    fn new(dir: &Path) -> Self {
        Staging {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            committed: false,
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let tmp = self.dir.join(format!(".{name}.partial"));
        self.files.push((tmp.clone(), self.dir.join(name)));
        tmp
    }

    fn commit(mut self) -> Result<()> {
        for (tmp, dest) in &self.files {
            std::fs::rename(tmp, dest).map_err(|e| Error::io(dest, e))?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.files {
                let _ = std::fs::remove_file(tmp);
            }
        }
    }
}

enum Runner {
    Normalize(Normalizer),
    Band { scorer: Scorer, band: BandConfig },
    Containment { config: ContainmentConfig, normalizer: Normalizer },
    Dedup(Deduplicator),
}

impl Runner {
    fn open(stage: &Stage, config: &PipelineConfig, normalizer: &Normalizer) -> Result<Option<Self>> {
        Ok(Some(match stage {
            Stage::Normalize => Runner::Normalize(normalizer.clone()),
            Stage::Band(band) => Runner::Band {
                scorer: Scorer::open(&config.scorer, normalizer)?,
                band: *band,
            },
            Stage::Containment(c) => Runner::Containment {
                config: *c,
                normalizer: normalizer.clone(),
            },
            Stage::Dedup(mode) => Runner::Dedup(Deduplicator::with_shards(*mode, config.workers)),
            Stage::Split(_) | Stage::Bpe { .. } => return Ok(None),
        }))
    }

    /// Returns survivors in input order and appends removals to `removed`.
    fn run(
        &mut self,
        chunk: Vec<SentencePair>,
        removed: &mut Vec<(SentencePair, &'static str)>,
    ) -> Result<Vec<SentencePair>> {
        let verdicts: Vec<Option<&'static str>> = match self {
            Runner::Normalize(norm) => {
                let norm = &*norm;
                return Ok(chunk
                    .into_par_iter()
                    .map(|mut p| {
                        p.src = norm.normalize(&p.src);
                        p.tgt = norm.normalize(&p.tgt);
                        p
                    })
                    .collect());
            }
            Runner::Band { scorer, band } => scorer
                .score_batch(&chunk)?
                .into_iter()
                .map(|s| match band.classify(s) {
                    BandVerdict::Kept => None,
                    BandVerdict::Low => Some("similarity-low"),
                    BandVerdict::High => Some("similarity-high"),
                })
                .collect(),
            Runner::Containment { config, normalizer } => {
                containment_ratios(&chunk, config.order(), normalizer)
                    .iter()
                    .map(|r| config.is_overlapping(r).then_some("ngram-containment"))
                    .collect()
            }
            Runner::Dedup(dedup) => dedup
                .admit_batch(&chunk)
                .into_iter()
                .map(|fresh| (!fresh).then_some("duplicate"))
                .collect(),
        };
        let mut kept = Vec::with_capacity(chunk.len());
        for (pair, verdict) in chunk.into_iter().zip(verdicts) {
            match verdict {
                None => kept.push(pair),
                Some(reason) => removed.push((pair, reason)),
            }
        }
        Ok(kept)
    }
}

fn audit_field(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Runs the configured stages over the input and writes every output into
/// the output directory. Nothing is written unless all stages succeed.
pub fn run_pipeline(config: &PipelineConfig) -> Result<FunnelReport> {
    let stages = config.validate()?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute(config, &stages))
}

fn execute(config: &PipelineConfig, stages: &[Stage]) -> Result<FunnelReport> {
    let mut staging = Staging::new(&config.output_dir);
    let normalizer = Normalizer::default();
    let location = config.input.location()?;

    let mut runners = Vec::new();
    let mut reports = Vec::new();
    for stage in stages {
        if let Some(runner) = Runner::open(stage, config, &normalizer).map_err(|e| e.in_stage(stage.name()))? {
            runners.push((stage.name(), runner));
            reports.push(StageReport::new(stage.name()));
        }
    }

    let clean_path = staging.path(CLEAN_FILE);
    let clean_loc = BitextLocation::Tsv(clean_path.clone());
    let output_err = |e: Error| e.in_stage("output");
    let mut writer = BitextWriter::create(&clean_loc).map_err(output_err)?;
    let mut audit = match config.audit {
        true => {
            let path = staging.path(AUDIT_FILE);
            let file = File::create(&path).map_err(|e| Error::io(&path, e).in_stage("output"))?;
            Some(BufWriter::new(file))
        }
        false => None,
    };

    let mut reader = read_bitext(&location).map_err(|e| e.in_stage("input"))?;
    let mut input_total = 0u64;
    let mut removed = Vec::new();
    loop {
        let chunk: Vec<SentencePair> = reader
            .by_ref()
            .take(CHUNK_SIZE)
            .collect::<Result<_>>()
            .map_err(|e| e.in_stage("input"))?;
        if chunk.is_empty() {
            break;
        }
        input_total += chunk.len() as u64;
        let mut current = chunk;
        for ((name, runner), report) in runners.iter_mut().zip(reports.iter_mut()) {
            let start = Instant::now();
            report.input += current.len() as u64;
            current = runner.run(current, &mut removed).map_err(|e| e.in_stage(name))?;
            report.kept += current.len() as u64;
            for (pair, reason) in removed.drain(..) {
                report.record_removal(reason);
                if let Some(audit) = audit.as_mut() {
                    writeln!(
                        audit,
                        "{}\t{name}:{reason}\t{}\t{}",
                        pair.index,
                        audit_field(&pair.src),
                        audit_field(&pair.tgt)
                    )
                    .map_err(|e| Error::from(e).in_stage("output"))?;
                }
            }
            report.wall_us += start.elapsed().as_micros() as u64;
        }
        for pair in &current {
            writer.write(pair).map_err(output_err)?;
        }
    }
    let mut stream_kept = writer.finish().map_err(output_err)?;
    if let Some(audit) = audit {
        audit
            .into_inner()
            .map_err(|e| Error::from(e.into_error()).in_stage("output"))?
            .sync_all()
            .map_err(|e| Error::from(e).in_stage("output"))?;
    }

    // the training stream; replaced by the train file once a split has run
    let mut training = clean_loc.clone();
    let mut to_segment = vec![(CLEAN_FILE, clean_loc)];
    for stage in stages {
        let start = Instant::now();
        let mut report = StageReport::new(stage.name());
        report.input = stream_kept;
        match stage {
            Stage::Split(spec) => {
                let train = BitextLocation::Tsv(staging.path(TRAIN_FILE));
                let dev = BitextLocation::Tsv(staging.path(DEV_FILE));
                let mut manifest = split_file(&training, spec, &train, &dev).map_err(|e| e.in_stage("split"))?;
                manifest.sources = vec![input_label(&location)];
                write_split_manifest(&manifest, &staging.path(SPLIT_MANIFEST)).map_err(|e| e.in_stage("split"))?;
                for _ in 0..manifest.n_dev {
                    report.record_removal("dev-holdout");
                }
                report.kept = manifest.n_train;
                training = train.clone();
                to_segment = vec![(TRAIN_FILE, train), (DEV_FILE, dev)];
            }
            Stage::Bpe { merges } => {
                let normalized = stages.iter().any(|s| matches!(s, Stage::Normalize));
                let model = learn_on(&training, *merges, normalized).map_err(|e| e.in_stage("bpe"))?;
                let path = staging.path(BPE_MODEL);
                std::fs::write(&path, model.to_file_string()).map_err(|e| Error::io(&path, e).in_stage("bpe"))?;
                let segmenter = model.segmenter();
                for (name, loc) in &to_segment {
                    let out = BitextLocation::Tsv(staging.path(&bpe_file_name(name)));
                    segment_file(&segmenter, loc, &out).map_err(|e| e.in_stage("bpe"))?;
                }
                report.kept = report.input;
            }
            _ => continue,
        }
        report.wall_us = start.elapsed().as_micros() as u64;
        stream_kept = report.kept;
        reports.push(report);
    }

    let report = FunnelReport {
        input_total,
        stages: reports,
        final_kept: stream_kept,
    };
    report.validate()?;
    for (name, body) in [
        (FUNNEL_TEXT, report.to_text()),
        (FUNNEL_JSON, report.to_json()),
        (FUNNEL_TIMINGS, report.timings_tsv()),
    ] {
        let path = staging.path(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e).in_stage("output"))?;
    }
    staging.commit()?;
    Ok(report)
}

fn input_label(location: &BitextLocation) -> String {
    location.paths()[0]
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn write_split_manifest(manifest: &SplitManifest, path: &Path) -> Result<()> {
    std::fs::write(path, manifest.to_json()).map_err(|e| Error::io(path, e))
}

/// Token frequencies over both sides of a bitext, counted in parallel per
/// chunk.
pub fn joint_frequencies(location: &BitextLocation) -> Result<FrequencyTable> {
    let mut table = FrequencyTable::new();
    let mut reader = read_bitext(location)?;
    loop {
        let chunk: Vec<SentencePair> = reader.by_ref().take(CHUNK_SIZE).collect::<Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let partial = chunk
            .par_iter()
            .fold(FrequencyTable::new, |mut t, p| {
                count_tokens(&mut t, tokenize(&p.src));
                count_tokens(&mut t, tokenize(&p.tgt));
                t
            })
            .reduce(FrequencyTable::new, merge_tables);
        table = merge_tables(table, partial);
    }
    Ok(table)
}

fn merge_tables(mut a: FrequencyTable, mut b: FrequencyTable) -> FrequencyTable {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (word, n) in b {
        *a.entry(word).or_default() += n;
    }
    a
}

fn learn_on(training: &BitextLocation, merges: usize, normalized: bool) -> Result<BpeModel> {
    let table = joint_frequencies(training)?;
    let mut model = learn_bpe(&table, merges);
    model
        .attributes
        .insert("text".into(), if normalized { "normalized" } else { "raw" }.into());
    model.attributes.insert("tokenizer".into(), TOKENIZER_VERSION.into());
    Ok(model)
}

/// Writes `input` tokenized and segmented, symbols separated by spaces.
fn segment_file(segmenter: &Segmenter, input: &BitextLocation, output: &BitextLocation) -> Result<u64> {
    let mut writer = BitextWriter::create(output)?;
    let mut reader = read_bitext(input)?;
    loop {
        let chunk: Vec<SentencePair> = reader.by_ref().take(CHUNK_SIZE).collect::<Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let mut words: Vec<&str> = Vec::new();
        let tokenized: Vec<(Vec<String>, Vec<String>)> = chunk.iter().map(|p| (tokenize(&p.src), tokenize(&p.tgt))).collect();
        for (s, t) in &tokenized {
            words.extend(s.iter().chain(t).map(String::as_str));
        }
        words.sort_unstable();
        words.dedup();
        let segmented: HashMap<&str, String> = words
            .par_iter()
            .map(|w| (*w, segmenter.segment_word(w).join(" ")))
            .collect();
        let join = |tokens: &[String]| -> String {
            tokens.iter().map(|t| segmented[t.as_str()].as_str()).collect::<Vec<_>>().join(" ")
        };
        for (pair, (s, t)) in chunk.iter().zip(&tokenized) {
            writer.write(&SentencePair::new(pair.index, join(s), join(t)))?;
        }
    }
    writer.finish()
}
