//! Dataset registry: metadata about the corpora a training mix draws from.
//!
//! The bundled manifest lists the OPUS sub-corpora of the MSA-English
//! collection and the dialectal Arabic-English datasets. Declared sizes are
//! documentation only; nothing compares them against actual files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const BUNDLED_MANIFEST: &str = include_str!("../data/datasets.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DialectRegion {
    Msa,
    Egyptian,
    Levantine,
    Gulf,
    Other,
}

impl FromStr for DialectRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "msa" => Ok(DialectRegion::Msa),
            "egyptian" => Ok(DialectRegion::Egyptian),
            "levantine" => Ok(DialectRegion::Levantine),
            "gulf" => Ok(DialectRegion::Gulf),
            "other" => Ok(DialectRegion::Other),
            _ => Err(Error::Registry(format!("unknown region `{s}`"))),
        }
    }
}

impl fmt::Display for DialectRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DialectRegion::Msa => "MSA",
            DialectRegion::Egyptian => "Egyptian",
            DialectRegion::Levantine => "Levantine",
            DialectRegion::Gulf => "Gulf",
            DialectRegion::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub declared_size: u64,
    pub region: DialectRegion,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, DatasetEntry>,
}

impl Registry {
    /// The manifest shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_MANIFEST).expect("bundled manifest is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses a `name, src_lang, tgt_lang, size, region` table. Lines
    /// starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Registry(e.to_string()))?;
            if record.len() != 5 {
                return Err(Error::Registry(format!("expected 5 columns, found {}", record.len())));
            }
            let declared_size = record[3]
                .parse()
                .map_err(|_| Error::Registry(format!("bad size `{}` for `{}`", &record[3], &record[0])))?;
            let entry = DatasetEntry {
                name: record[0].to_string(),
                src_lang: record[1].to_string(),
                tgt_lang: record[2].to_string(),
                declared_size,
                region: record[4].parse()?,
            };
            if entries.insert(entry.name.clone(), entry.clone()).is_some() {
                return Err(Error::Registry(format!("duplicate dataset `{}`", entry.name)));
            }
        }
        Ok(Registry { entries })
    }

    pub fn lookup(&self, name: &str) -> Result<&DatasetEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.values()
    }

    pub fn total_for(&self, region: DialectRegion) -> u64 {
        self.entries
            .values()
            .filter(|e| e.region == region)
            .map(|e| e.declared_size)
            .sum()
    }
}
