//! Training mixes: concatenations of several bitexts with a manifest that
//! records where each block of lines came from.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_bitext, BitextLocation, BitextWriter};
use crate::error::{Error, Result};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixPreset {
    /// All MSA sources in one training file.
    MsaOnly,
    /// The MSA training file plus a separate dialectal file for fine-tuning.
    MsaPlusDa,
}

impl FromStr for MixPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "msa-only" => Ok(MixPreset::MsaOnly),
            "msa-plus-da" => Ok(MixPreset::MsaPlusDa),
            _ => Err(Error::InvalidParameter(format!("unknown mix preset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixSource {
    /// Registry key when the source is a known dataset, otherwise a label.
    pub name: String,
    pub location: BitextLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixBlock {
    pub name: String,
    /// First line of the block in the mix file, 0-based.
    pub first_line: u64,
    pub pairs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared_size: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixFile {
    pub file: String,
    pub pairs: u64,
    pub blocks: Vec<MixBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixManifest {
    pub preset: MixPreset,
    pub files: Vec<MixFile>,
}

pub const MSA_MIX_FILE: &str = "msa-train.tsv";
pub const DA_MIX_FILE: &str = "da-train.tsv";
pub const MIX_MANIFEST: &str = "mix.json";

fn concatenate(sources: &[MixSource], out: &Path, registry: &Registry) -> Result<MixFile> {
    let mut writer = BitextWriter::create(&BitextLocation::Tsv(out.to_path_buf()))?;
    let mut blocks = Vec::with_capacity(sources.len());
    for source in sources {
        let first_line = writer.count();
        for pair in read_bitext(&source.location)? {
            writer.write(&pair?)?;
        }
        blocks.push(MixBlock {
            name: source.name.clone(),
            first_line,
            pairs: writer.count() - first_line,
            declared_size: registry.lookup(&source.name).ok().map(|e| e.declared_size),
        });
    }
    let pairs = writer.finish()?;
    Ok(MixFile {
        file: out.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        pairs,
        blocks,
    })
}

/// Builds the preset's training files in `out_dir` and writes `mix.json`.
pub fn build_mix(
    preset: MixPreset,
    msa: &[MixSource],
    da: &[MixSource],
    out_dir: &Path,
    registry: &Registry,
) -> Result<MixManifest> {
    if msa.is_empty() {
        return Err(Error::EmptyCorpus("MSA mix"));
    }
    let mut plan: Vec<(&[MixSource], &str)> = vec![(msa, MSA_MIX_FILE)];
    match preset {
        MixPreset::MsaOnly if !da.is_empty() => {
            return Err(Error::InvalidParameter("the msa-only preset takes no dialectal sources".into()))
        }
        MixPreset::MsaOnly => {}
        MixPreset::MsaPlusDa if da.is_empty() => return Err(Error::EmptyCorpus("dialectal mix")),
        MixPreset::MsaPlusDa => plan.push((da, DA_MIX_FILE)),
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for (sources, name) in plan {
        let path: PathBuf = out_dir.join(name);
        files.push(concatenate(sources, &path, registry)?);
    }
    let manifest = MixManifest { preset, files };
    let path = out_dir.join(MIX_MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
