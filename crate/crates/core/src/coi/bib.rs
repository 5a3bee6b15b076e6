//! Ingestion of a DBLP-style XML bibliography dump.
//!
//! Only `<article>` and `<inproceedings>` records are read; each needs a
//! `key` attribute, at least one `<author>` and a positive `<year>`. Other
//! record types are ignored. Records without a year or authors are skipped
//! and counted; a repeated key replaces the earlier record.

use std::collections::HashMap;

use log::warn;
use quick_xml::events::{BytesText, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::names::NameKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibRecord {
    pub key: String,
    pub title: String,
    pub year: i32,
    pub authors: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BibError {
    #[error("malformed bibliography XML: {0}")]
    MalformedXml(String),
}

impl BibError {
    pub fn name(&self) -> &'static str {
        "MalformedXml"
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "CorpusRepr", into = "CorpusRepr")]
pub struct BibCorpus {
    records: Vec<BibRecord>,
    skipped: usize,
    duplicates: usize,
    by_name: HashMap<NameKey, Vec<usize>>,
    by_key: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CorpusRepr {
    records: Vec<BibRecord>,
    #[serde(default)]
    skipped: usize,
    #[serde(default)]
    duplicates: usize,
}

impl From<CorpusRepr> for BibCorpus {
    fn from(r: CorpusRepr) -> Self {
        let mut c = BibCorpus::from_records(r.records);
        c.skipped = r.skipped;
        c.duplicates = r.duplicates;
        c
    }
}

impl From<BibCorpus> for CorpusRepr {
    fn from(c: BibCorpus) -> Self {
        CorpusRepr {
            records: c.records,
            skipped: c.skipped,
            duplicates: c.duplicates,
        }
    }
}

impl BibCorpus {
    /// Builds a corpus with its name index; later duplicates of a key replace earlier ones.
    pub fn from_records(records: Vec<BibRecord>) -> Self {
        let mut corpus = BibCorpus::default();
        for r in records {
            corpus.insert(r);
        }
        corpus
    }

    fn insert(&mut self, record: BibRecord) {
        if let Some(&pos) = self.by_key.get(&record.key) {
            warn!("duplicate bibliography key `{}`; keeping the last record", record.key);
            self.duplicates += 1;
            self.records[pos] = record;
            self.reindex();
        } else {
            let idx = self.records.len();
            for key in record.authors.iter().filter_map(|a| NameKey::of(a)) {
                let slot = self.by_name.entry(key).or_default();
                if slot.last() != Some(&idx) {
                    slot.push(idx);
                }
            }
            self.by_key.insert(record.key.clone(), idx);
            self.records.push(record);
        }
    }

    fn reindex(&mut self) {
        self.by_name.clear();
        self.by_key.clear();
        for (idx, r) in self.records.iter().enumerate() {
            self.by_key.insert(r.key.clone(), idx);
            for key in r.authors.iter().filter_map(|a| NameKey::of(a)) {
                let slot = self.by_name.entry(key).or_default();
                if slot.last() != Some(&idx) {
                    slot.push(idx);
                }
            }
        }
    }

    pub fn records(&self) -> &[BibRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records skipped for a missing year or missing authors.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Indices of records with an author matching `key`.
    pub fn records_with(&self, key: &NameKey) -> &[usize] {
        self.by_name.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn record(&self, idx: usize) -> &BibRecord {
        &self.records[idx]
    }

    /// Keeps only records in which at least two author slots match `names`.
    /// Co-authorship between two listed people can only come from such records.
    pub fn retain_relevant(&mut self, names: &[NameKey]) {
        let wanted: std::collections::HashSet<&NameKey> = names.iter().collect();
        self.records.retain(|r| {
            r.authors
                .iter()
                .filter_map(|a| NameKey::of(a))
                .filter(|k| wanted.contains(k))
                .count()
                >= 2
        });
        self.reindex();
    }
}

#[derive(Default)]
struct Pending {
    key: String,
    title: String,
    year: Option<String>,
    authors: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Author,
    Title,
    Year,
    Other,
}

pub fn ingest_bibliography(document: &[u8]) -> Result<BibCorpus, BibError> {
    let text =
        std::str::from_utf8(document).map_err(|e| BibError::MalformedXml(e.to_string()))?;
    let mut reader = Reader::from_str(text);
    let mut corpus = BibCorpus::default();
    let mut seen_root = false;
    let mut depth = 0usize;
    let mut record: Option<Pending> = None;
    let mut field: Option<(Field, String)> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| BibError::MalformedXml(format!("at byte {}: {e}", reader.error_position())))?;
        match event {
            Event::Start(e) => {
                depth += 1;
                let name = e.name();
                let name = name.as_ref();
                match depth {
                    1 => {
                        if name != b"dblp" {
                            return Err(BibError::MalformedXml("root element must be <dblp>".into()));
                        }
                        seen_root = true;
                    }
                    2 if name == b"article" || name == b"inproceedings" => {
                        let mut key = String::new();
                        for attr in e.attributes() {
                            let attr = attr.map_err(|e| BibError::MalformedXml(e.to_string()))?;
                            if attr.key.as_ref() == b"key" {
                                key = attr
                                    .decode_and_unescape_value_with(reader.decoder(), resolve_entity)
                                    .map_err(|e| BibError::MalformedXml(e.to_string()))?
                                    .into_owned();
                            }
                        }
                        record = Some(Pending {
                            key,
                            ..Pending::default()
                        });
                    }
                    3 if record.is_some() => {
                        let f = match name {
                            b"author" => Field::Author,
                            b"title" => Field::Title,
                            b"year" => Field::Year,
                            _ => Field::Other,
                        };
                        field = Some((f, String::new()));
                    }
                    _ => {}
                }
            }
            Event::Empty(e) => {
                if depth == 0 {
                    if e.name().as_ref() != b"dblp" {
                        return Err(BibError::MalformedXml("root element must be <dblp>".into()));
                    }
                    seen_root = true;
                } else if depth == 1 && matches!(e.name().as_ref(), b"article" | b"inproceedings") {
                    corpus.skipped += 1;
                }
            }
            Event::Text(t) => {
                if let Some((_, buf)) = field.as_mut() {
                    buf.push_str(&unescape(&t)?);
                }
            }
            Event::CData(t) => {
                if let Some((_, buf)) = field.as_mut() {
                    buf.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(_) => {
                match depth {
                    3 => {
                        if let (Some(rec), Some((f, buf))) = (record.as_mut(), field.take()) {
                            let value = buf.split_whitespace().collect::<Vec<_>>().join(" ");
                            match f {
                                Field::Author if !value.is_empty() => rec.authors.push(value),
                                Field::Title => rec.title = value,
                                Field::Year => rec.year = Some(value),
                                _ => {}
                            }
                        }
                    }
                    2 => {
                        if let Some(rec) = record.take() {
                            finish(&mut corpus, rec);
                        }
                    }
                    _ => {}
                }
                depth = depth.saturating_sub(1);
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(BibError::MalformedXml("unexpected end of document".into()));
                }
                break;
            }
            _ => {}
        }
    }
    if !seen_root {
        return Err(BibError::MalformedXml("missing <dblp> root element".into()));
    }
    if corpus.skipped > 0 {
        warn!("skipped {} bibliography records without year or authors", corpus.skipped);
    }
    Ok(corpus)
}

fn finish(corpus: &mut BibCorpus, rec: Pending) {
    let year = rec.year.as_deref().and_then(|y| y.trim().parse::<i32>().ok());
    match year {
        Some(year) if year > 0 && !rec.authors.is_empty() && !rec.key.is_empty() => {
            corpus.insert(BibRecord {
                key: rec.key,
                title: rec.title,
                year,
                authors: rec.authors,
            });
        }
        _ => corpus.skipped += 1,
    }
}

fn unescape(t: &BytesText<'_>) -> Result<String, BibError> {
    t.unescape_with(resolve_entity)
        .map(|s| s.into_owned())
        .map_err(|e| BibError::MalformedXml(e.to_string()))
}

/// Latin-1 named entities declared by the DBLP DTD.
fn resolve_entity(name: &str) -> Option<&'static str> {
    Some(match name {
        "Agrave" => "À", "Aacute" => "Á", "Acirc" => "Â", "Atilde" => "Ã", "Auml" => "Ä",
        "Aring" => "Å", "AElig" => "Æ", "Ccedil" => "Ç", "Egrave" => "È", "Eacute" => "É",
        "Ecirc" => "Ê", "Euml" => "Ë", "Igrave" => "Ì", "Iacute" => "Í", "Icirc" => "Î",
        "Iuml" => "Ï", "ETH" => "Ð", "Ntilde" => "Ñ", "Ograve" => "Ò", "Oacute" => "Ó",
        "Ocirc" => "Ô", "Otilde" => "Õ", "Ouml" => "Ö", "Oslash" => "Ø", "Ugrave" => "Ù",
        "Uacute" => "Ú", "Ucirc" => "Û", "Uuml" => "Ü", "Yacute" => "Ý", "THORN" => "Þ",
        "szlig" => "ß", "agrave" => "à", "aacute" => "á", "acirc" => "â", "atilde" => "ã",
        "auml" => "ä", "aring" => "å", "aelig" => "æ", "ccedil" => "ç", "egrave" => "è",
        "eacute" => "é", "ecirc" => "ê", "euml" => "ë", "igrave" => "ì", "iacute" => "í",
        "icirc" => "î", "iuml" => "ï", "eth" => "ð", "ntilde" => "ñ", "ograve" => "ò",
        "oacute" => "ó", "ocirc" => "ô", "otilde" => "õ", "ouml" => "ö", "oslash" => "ø",
        "ugrave" => "ù", "uacute" => "ú", "ucirc" => "û", "uuml" => "ü", "yacute" => "ý",
        "thorn" => "þ", "yuml" => "ÿ", "nbsp" => " ", "reg" => "®", "micro" => "µ",
        "times" => "×",
        _ => return None,
    })
}
