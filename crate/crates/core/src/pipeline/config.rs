use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::BitextLocation;
use crate::dedup::DedupMode;
use crate::error::{Error, Result};
use crate::qa::{BandConfig, ContainmentConfig, ScorerSpec};
use crate::split::{SplitSpec, MSA_DEV_SIZE};
use crate::subword::DEFAULT_MERGES;

/// Pipeline configuration, stored as TOML:
///
/// ```toml
/// output_dir = "out"
/// seed = 13
/// workers = 4
/// audit = true
///
/// [input]
/// tsv = "corpus.tsv"          # or: src = "a.ar", tgt = "a.en"
///
/// [scorer]
/// kind = "lexical-overlap"    # or "sidecar-embedding" with src_vectors/tgt_vectors
///
/// [[stage]]
/// kind = "band"
/// lo = 0.3
/// hi = 0.99
/// ```
///
/// Stages run in the order listed. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Spill removed pairs to `removed.tsv`.
    #[serde(default)]
    pub audit: bool,
    pub input: InputSpec,
    #[serde(default)]
    pub scorer: ScorerSpec,
    #[serde(default = "default_stages", rename = "stage")]
    pub stages: Vec<StageConfig>,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tsv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt: Option<PathBuf>,
}

impl InputSpec {
    pub fn tsv(path: impl Into<PathBuf>) -> Self {
        InputSpec {
            tsv: Some(path.into()),
            ..Default::default()
        }
    }

    pub fn location(&self) -> Result<BitextLocation> {
        match (&self.tsv, &self.src, &self.tgt) {
            (Some(tsv), None, None) => Ok(BitextLocation::Tsv(tsv.clone())),
            (None, Some(src), Some(tgt)) => Ok(BitextLocation::Split {
                src: src.clone(),
                tgt: tgt.clone(),
            }),
            _ => Err(Error::Config("input needs either `tsv` or both `src` and `tgt`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StageConfig {
    /// Strip diacritics and mask URLs/mentions/hashtags on both sides.
    Normalize,
    Band {
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    Containment {
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_order")]
        order: usize,
    },
    Dedup {
        #[serde(default)]
        mode: DedupMode,
    },
    Split {
        #[serde(default = "default_n_dev")]
        n_dev: u64,
        /// Falls back to the top-level seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Bpe {
        #[serde(default = "default_merges")]
        merges: usize,
    },
}

fn default_lo() -> f64 {
    BandConfig::DEFAULT_LO
}
fn default_hi() -> f64 {
    BandConfig::DEFAULT_HI
}
fn default_threshold() -> f64 {
    ContainmentConfig::DEFAULT_THRESHOLD
}
fn default_order() -> usize {
    ContainmentConfig::DEFAULT_ORDER
}
fn default_n_dev() -> u64 {
    MSA_DEV_SIZE
}
fn default_merges() -> usize {
    DEFAULT_MERGES
}

impl StageConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StageConfig::Normalize => "normalize",
            StageConfig::Band { .. } => "band",
            StageConfig::Containment { .. } => "containment",
            StageConfig::Dedup { .. } => "dedup",
            StageConfig::Split { .. } => "split",
            StageConfig::Bpe { .. } => "bpe",
        }
    }

    fn is_streaming(&self) -> bool {
        !matches!(self, StageConfig::Split { .. } | StageConfig::Bpe { .. })
    }
}

/// The default funnel: normalize, similarity band, n-gram containment,
/// exact dedup, dev split, BPE.
pub fn default_stages() -> Vec<StageConfig> {
    vec![
        StageConfig::Normalize,
        StageConfig::Band {
            lo: default_lo(),
            hi: default_hi(),
        },
        StageConfig::Containment {
            threshold: default_threshold(),
            order: default_order(),
        },
        StageConfig::Dedup {
            mode: DedupMode::Pair,
        },
        StageConfig::Split {
            n_dev: default_n_dev(),
            seed: None,
        },
        StageConfig::Bpe {
            merges: default_merges(),
        },
    ]
}

/// A stage with its parameters checked.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    Normalize,
    Band(BandConfig),
    Containment(ContainmentConfig),
    Dedup(DedupMode),
    Split(SplitSpec),
    Bpe { merges: usize },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::Band(_) => "band",
            Stage::Containment(_) => "containment",
            Stage::Dedup(_) => "dedup",
            Stage::Split(_) => "split",
            Stage::Bpe { .. } => "bpe",
        }
    }
}

impl PipelineConfig {
    pub fn new(input: InputSpec, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            output_dir: output_dir.into(),
            seed: 0,
            workers: default_workers(),
            audit: false,
            input,
            scorer: ScorerSpec::default(),
            stages: default_stages(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.output_dir);
        for p in [&mut config.input.tsv, &mut config.input.src, &mut config.input.tgt]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        if let ScorerSpec::SidecarEmbedding {
            src_vectors,
            tgt_vectors,
        } = &mut config.scorer
        {
            resolve(src_vectors);
            resolve(tgt_vectors);
        }
        Ok(config)
    }

    /// Checks every parameter and referenced file, returning the typed
    /// stage list. Nothing is read or written.
    pub fn validate(&self) -> Result<Vec<Stage>> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let location = self.input.location()?;
        for path in location.paths() {
            if !path.is_file() {
                return Err(Error::Config(format!("input {} does not exist", path.display())));
            }
        }
        let mut stages = Vec::with_capacity(self.stages.len());
        let mut seen_split = false;
        for (i, stage) in self.stages.iter().enumerate() {
            let qualify = |e: Error| e.in_stage(stage.name());
            if seen_split && stage.is_streaming() {
                return Err(Error::Config(format!(
                    "stage `{}` cannot run after `split`",
                    stage.name()
                )));
            }
            if matches!(stage, StageConfig::Bpe { .. }) && i + 1 != self.stages.len() {
                return Err(Error::Config("`bpe` must be the last stage".into()));
            }
            let typed = match stage {
                StageConfig::Normalize => Stage::Normalize,
                StageConfig::Band { lo, hi } => {
                    if let ScorerSpec::SidecarEmbedding {
                        src_vectors,
                        tgt_vectors,
                    } = &self.scorer
                    {
                        for p in [src_vectors, tgt_vectors] {
                            if !p.is_file() {
                                return Err(qualify(Error::Config(format!(
                                    "sidecar vectors {} do not exist",
                                    p.display()
                                ))));
                            }
                        }
                    }
                    Stage::Band(BandConfig::new(*lo, *hi).map_err(qualify)?)
                }
                StageConfig::Containment { threshold, order } => {
                    Stage::Containment(ContainmentConfig::new(*threshold, *order).map_err(qualify)?)
                }
                StageConfig::Dedup { mode } => Stage::Dedup(*mode),
                StageConfig::Split { n_dev, seed } => {
                    if seen_split {
                        return Err(Error::Config("only one `split` stage is allowed".into()));
                    }
                    seen_split = true;
                    Stage::Split(SplitSpec::new(*n_dev, seed.unwrap_or(self.seed)))
                }
                StageConfig::Bpe { merges } => Stage::Bpe { merges: *merges },
            };
            stages.push(typed);
        }
        Ok(stages)
    }
}
