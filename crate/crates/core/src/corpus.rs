//! Bitext data model and streaming readers/writers.
//!
//! Two on-disk layouts are supported: a single tab-separated file with one
//! `src<TAB>tgt` pair per line, and two line-aligned files. Text is NFC
//! normalized on ingest so that later comparisons are not fooled by
//! composed/decomposed variants of the same string.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::error::{Error, Result};

/// One aligned source/target sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub src: String,
    pub tgt: String,
    /// 0-based ordinal within the stream the pair was read from.
    pub index: u64,
    /// Registry key or file label the pair came from.
    pub provenance: Arc<str>,
    pub meta: BTreeMap<String, String>,
}

impl SentencePair {
    pub fn new(index: u64, src: impl Into<String>, tgt: impl Into<String>) -> Self {
        SentencePair {
            src: src.into(),
            tgt: tgt.into(),
            index,
            provenance: Arc::from(""),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_provenance(mut self, provenance: Arc<str>) -> Self {
        self.provenance = provenance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitextFormat {
    /// `src<TAB>tgt` per line.
    Tsv,
    /// Two line-aligned files.
    SplitFiles,
}

/// Where a bitext lives; the variant fixes the format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BitextLocation {
    Tsv(PathBuf),
    Split { src: PathBuf, tgt: PathBuf },
}

impl BitextLocation {
    pub fn format(&self) -> BitextFormat {
        match self {
            BitextLocation::Tsv(_) => BitextFormat::Tsv,
            BitextLocation::Split { .. } => BitextFormat::SplitFiles,
        }
    }

    pub fn paths(&self) -> Vec<&Path> {
        match self {
            BitextLocation::Tsv(p) => vec![p.as_path()],
            BitextLocation::Split { src, tgt } => vec![src.as_path(), tgt.as_path()],
        }
    }

    /// Default provenance label: the stem of the (first) file.
    fn label(&self) -> Arc<str> {
        let path = self.paths()[0];
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Arc::from(stem)
    }
}

/// Returns `text` in Unicode NFC form.
pub fn nfc(text: &str) -> String {
    match is_nfc_quick(text.chars()) {
        IsNormalized::Yes => text.to_string(),
        _ => text.nfc().collect(),
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::with_capacity(1 << 16, file))
}

/// Opens `location` as a stream of pairs.
pub fn read_bitext(location: &BitextLocation) -> Result<BitextReader<Box<dyn BufRead + Send>>> {
    let reader = match location {
        BitextLocation::Tsv(path) => BitextReader::tsv(open(path)?),
        BitextLocation::Split { src, tgt } => BitextReader::split(open(src)?, open(tgt)?),
    };
    Ok(reader.with_provenance(location.label()))
}

enum Source<R> {
    Tsv(R),
    Split(R, R),
}

/// Streaming pair reader. Holds one line buffer per input regardless of
/// file size. Stops after the first error.
pub struct BitextReader<R> {
    source: Source<R>,
    line: u64,
    provenance: Arc<str>,
    buf: Vec<u8>,
    buf2: Vec<u8>,
    done: bool,
}

impl<R: BufRead> BitextReader<R> {
    pub fn tsv(reader: R) -> Self {
        Self::from_source(Source::Tsv(reader))
    }

    pub fn split(src: R, tgt: R) -> Self {
        Self::from_source(Source::Split(src, tgt))
    }

    fn from_source(source: Source<R>) -> Self {
        BitextReader {
            source,
            line: 0,
            provenance: Arc::from(""),
            buf: Vec::new(),
            buf2: Vec::new(),
            done: false,
        }
    }

    pub fn with_provenance(mut self, provenance: Arc<str>) -> Self {
        self.provenance = provenance;
        self
    }

    fn next_pair(&mut self) -> Result<Option<SentencePair>> {
        let line = self.line;
        let (src, tgt) = match &mut self.source {
            Source::Tsv(reader) => {
                let Some(text) = read_line(reader, &mut self.buf, line)? else {
                    return Ok(None);
                };
                let tabs = text.matches('\t').count();
                if tabs != 1 {
                    return Err(Error::TabCount { line, tabs });
                }
                let (src, tgt) = text.split_once('\t').expect("one tab");
                (nfc(src), nfc(tgt))
            }
            Source::Split(src_reader, tgt_reader) => {
                let src = read_line(src_reader, &mut self.buf, line)?;
                let tgt = read_line(tgt_reader, &mut self.buf2, line)?;
                match (src, tgt) {
                    (None, None) => return Ok(None),
                    (Some(src), Some(tgt)) => (nfc(src), nfc(tgt)),
                    _ => return Err(Error::LineCountMismatch { line }),
                }
            }
        };
        self.line += 1;
        Ok(Some(SentencePair {
            src,
            tgt,
            index: line,
            provenance: self.provenance.clone(),
            meta: BTreeMap::new(),
        }))
    }
}

fn read_line<'a, R: BufRead>(reader: &mut R, buf: &'a mut Vec<u8>, line: u64) -> Result<Option<&'a str>> {
    buf.clear();
    if reader.read_until(b'\n', buf)? == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    std::str::from_utf8(buf)
        .map(Some)
        .map_err(|_| Error::InvalidUtf8 { line })
}

impl<R: BufRead> Iterator for BitextReader<R> {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_pair() {
            Ok(Some(pair)) => Some(Ok(pair)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

enum Sink<W> {
    Tsv(W),
    Split(W, W),
}

/// Streaming pair writer. Rejects texts that would not survive a re-read
/// instead of mangling them.
pub struct BitextWriter<W: Write> {
    sink: Sink<W>,
    count: u64,
}

impl BitextWriter<BufWriter<File>> {
    pub fn create(location: &BitextLocation) -> Result<Self> {
        Ok(match location {
            BitextLocation::Tsv(path) => BitextWriter::tsv(create(path)?),
            BitextLocation::Split { src, tgt } => BitextWriter::split(create(src)?, create(tgt)?),
        })
    }
}

impl<W: Write> BitextWriter<W> {
    pub fn tsv(writer: W) -> Self {
        BitextWriter {
            sink: Sink::Tsv(writer),
            count: 0,
        }
    }

    pub fn split(src: W, tgt: W) -> Self {
        BitextWriter {
            sink: Sink::Split(src, tgt),
            count: 0,
        }
    }

    pub fn write(&mut self, pair: &SentencePair) -> Result<()> {
        let tsv = matches!(self.sink, Sink::Tsv(_));
        check_writable(pair.index, "source", &pair.src, tsv)?;
        check_writable(pair.index, "target", &pair.tgt, tsv)?;
        match &mut self.sink {
            Sink::Tsv(w) => {
                w.write_all(pair.src.as_bytes())?;
                w.write_all(b"\t")?;
                w.write_all(pair.tgt.as_bytes())?;
                w.write_all(b"\n")?;
            }
            Sink::Split(s, t) => {
                s.write_all(pair.src.as_bytes())?;
                s.write_all(b"\n")?;
                t.write_all(pair.tgt.as_bytes())?;
                t.write_all(b"\n")?;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Flushes and returns the number of pairs written.
    pub fn finish(mut self) -> Result<u64> {
        match &mut self.sink {
            Sink::Tsv(w) => w.flush()?,
            Sink::Split(s, t) => {
                s.flush()?;
                t.flush()?;
            }
        }
        Ok(self.count)
    }
}

fn check_writable(index: u64, side: &'static str, text: &str, tsv: bool) -> Result<()> {
    if text.contains(['\n', '\r']) {
        return Err(Error::Unwritable {
            index,
            side,
            what: "line break",
        });
    }
    if tsv && text.contains('\t') {
        return Err(Error::Unwritable {
            index,
            side,
            what: "tab",
        });
    }
    Ok(())
}

/// Writes every pair to `location`, returning the count written.
pub fn write_bitext<I>(pairs: I, location: &BitextLocation) -> Result<u64>
where
    I: IntoIterator<Item = SentencePair>,
{
    let mut writer = BitextWriter::create(location)?;
    for pair in pairs {
        writer.write(&pair)?;
    }
    writer.finish()
}
