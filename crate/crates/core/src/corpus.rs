//! Gold-annotated corpora: XML ingestion driven by per-dataset profiles, the
//! normalized JSONL interchange format, and the misaligned-toponym filter.
//!
//! The annotated news/tweet corpora in this space share one XML schema family
//! (repeated article elements holding toponym records with a surface form,
//! character span, coordinates, and an optional GeoNames id) with small
//! naming drifts between datasets. Rather than one parser per dataset, a
//! small [`XmlProfile`] maps tag names per dataset; profiles for the common
//! corpora ship in the repository's `profiles/` directory.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::GeoPoint;

/// Coarse-grained coordinate mismatches between gazetteers make these
/// frequent surface forms unscoreable; they are removed before evaluation.
/// Matching is case-insensitive after trimming.
pub const MISALIGNED_TOPONYMS: [&str; 29] = [
    "China",
    "Chinese",
    "Russia",
    "Russian",
    "Russians",
    "Australia",
    "Canada",
    "Canadians",
    "Canadian",
    "United States",
    "American",
    "USA",
    "America",
    "U.S.",
    "U.S",
    "United States of America",
    "Americans",
    "North America",
    "South America",
    "India",
    "Algeria",
    "Europe",
    "European",
    "Western Europe",
    "Asia",
    "Africa",
    "West Africa",
    "North Africa",
    "Middle East",
];

/// A gold-annotated toponym occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub surface: String,
    /// Character span into the document text, in Unicode code points.
    pub span: (usize, usize),
    pub gold: GeoPoint,
    pub gazetteer_id: Option<u64>,
    pub context: Option<String>,
}

/// A named dataset of mentions, with document texts when the source provides
/// them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    pub mentions: Vec<Mention>,
    pub documents: BTreeMap<String, String>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate mention ids.
    pub fn new(
        name: impl Into<String>,
        mentions: Vec<Mention>,
        documents: BTreeMap<String, String>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for m in &mentions {
            if !seen.insert(m.mention_id.as_str()) {
                return Err(CorpusError::DuplicateMentionId {
                    mention_id: m.mention_id.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            mentions,
            documents,
        })
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }
}

/// Removes every mention whose trimmed surface form equals one of the
/// [`MISALIGNED_TOPONYMS`] case-insensitively. Returns the filtered corpus
/// and the number of removed mentions.
pub fn filter_misaligned(corpus: &Corpus) -> (Corpus, usize) {
    let excluded: HashSet<String> = MISALIGNED_TOPONYMS
        .iter()
        .map(|s| s.to_lowercase())
        .collect();
    let mut kept = Vec::with_capacity(corpus.mentions.len());
    let mut removed = 0;
    for m in &corpus.mentions {
        if excluded.contains(&m.surface.trim().to_lowercase()) {
            removed += 1;
        } else {
            kept.push(m.clone());
        }
    }
    (
        Corpus {
            name: corpus.name.clone(),
            mentions: kept,
            documents: corpus.documents.clone(),
        },
        removed,
    )
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("XML parse error at line {line}: {message}")]
    Xml { line: u32, message: String },
    #[error("line {line}: invalid mention record: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    InvalidMention { line: usize, message: String },
    #[error("duplicate mention id {mention_id:?}")]
    DuplicateMentionId { mention_id: String },
    #[error("invalid profile {path}: {message}")]
    Profile { path: String, message: String },
}

/// Counters and messages accumulated while parsing one annotated file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseStats {
    /// Toponym records encountered, parsed or not.
    pub records_seen: usize,
    /// Records dropped for missing or unusable fields.
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Unit of the character offsets stored in an annotated XML file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetUnit {
    #[default]
    CodePoints,
    Bytes,
}

/// Tag-name map for one dataset of the shared annotated-XML schema family.
///
/// Coordinate and surface tags are matched anywhere below a toponym element,
/// so nesting differences between datasets (for example a gazetteer sub-record
/// holding the coordinates) need no special handling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XmlProfile {
    pub name: String,
    pub article_tag: String,
    #[serde(default)]
    pub doc_id_attr: Option<String>,
    #[serde(default)]
    pub text_tag: Option<String>,
    pub toponym_tag: String,
    pub surface_tag: String,
    pub start_tag: String,
    pub end_tag: String,
    pub lat_tag: String,
    pub lon_tag: String,
    /// Element holding the GeoNames id, read from `geonames_id_attr` when set
    /// and from the element text otherwise.
    #[serde(default)]
    pub geonames_id_tag: Option<String>,
    #[serde(default)]
    pub geonames_id_attr: Option<String>,
    #[serde(default)]
    pub offsets: OffsetUnit,
}

pub fn load_profile(path: &Path) -> Result<XmlProfile, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Profile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses an annotated XML corpus file using the given profile. The dataset
/// name is taken from the file stem.
pub fn parse_annotated_xml(
    path: &Path,
    profile: &XmlProfile,
) -> Result<(Corpus, ParseStats), CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    parse_annotated_xml_str(&text, &name, profile)
}

pub fn parse_annotated_xml_str(
    xml: &str,
    name: &str,
    profile: &XmlProfile,
) -> Result<(Corpus, ParseStats), CorpusError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| CorpusError::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;

    let mut stats = ParseStats::default();
    let mut mentions = Vec::new();
    let mut documents = BTreeMap::new();
    let mut used_ids: HashSet<String> = HashSet::new();

    let articles = doc
        .descendants()
        .filter(|n| n.has_tag_name(profile.article_tag.as_str()));
    for (article_idx, article) in articles.enumerate() {
        let doc_id = profile
            .doc_id_attr
            .as_deref()
            .and_then(|attr| article.attribute(attr))
            .map(str::to_string)
            .unwrap_or_else(|| format!("d{article_idx}"));
        let doc_text: Option<String> = profile.text_tag.as_deref().and_then(|tag| {
            article
                .descendants()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.text())
                .map(str::to_string)
        });
        if let Some(t) = &doc_text {
            documents.entry(doc_id.clone()).or_insert_with(|| t.clone());
        }

        let find_text = |top: roxmltree::Node, tag: &str| -> Option<String> {
            top.descendants()
                .find(|n| n.has_tag_name(tag))
                .and_then(|n| n.text())
                .map(|t| t.trim().to_string())
        };

        for (local_idx, toponym) in article
            .descendants()
            .filter(|n| n.has_tag_name(profile.toponym_tag.as_str()))
            .enumerate()
        {
            stats.records_seen += 1;
            let record_name = format!("{doc_id}:{local_idx}");

            let Some(surface) = find_text(toponym, &profile.surface_tag).filter(|s| !s.is_empty())
            else {
                stats.skipped += 1;
                stats
                    .warnings
                    .push(format!("{record_name}: missing surface form"));
                continue;
            };
            let coords = find_text(toponym, &profile.lat_tag)
                .and_then(|s| s.parse::<f64>().ok())
                .zip(find_text(toponym, &profile.lon_tag).and_then(|s| s.parse::<f64>().ok()));
            let Some((lat, lon)) = coords else {
                stats.skipped += 1;
                stats
                    .warnings
                    .push(format!("{record_name}: missing or unparseable coordinates"));
                continue;
            };
            let gold = match GeoPoint::new(lat, lon) {
                Ok(p) => p,
                Err(e) => {
                    stats.skipped += 1;
                    stats
                        .warnings
                        .push(format!("{record_name}: coordinate out of range: {e}"));
                    continue;
                }
            };
            let span = find_text(toponym, &profile.start_tag)
                .and_then(|s| s.parse::<usize>().ok())
                .zip(find_text(toponym, &profile.end_tag).and_then(|s| s.parse::<usize>().ok()));
            let Some(raw_span) = span else {
                stats.skipped += 1;
                stats
                    .warnings
                    .push(format!("{record_name}: missing or unparseable span"));
                continue;
            };
            let span = match convert_span(raw_span, profile.offsets, doc_text.as_deref()) {
                Ok(s) => s,
                Err(msg) => {
                    stats.skipped += 1;
                    stats.warnings.push(format!("{record_name}: {msg}"));
                    continue;
                }
            };
            if span.0 >= span.1 {
                stats.skipped += 1;
                stats
                    .warnings
                    .push(format!("{record_name}: empty or inverted span"));
                continue;
            }
            if let Some(text) = &doc_text {
                let extracted: String =
                    text.chars().skip(span.0).take(span.1 - span.0).collect();
                if extracted != surface {
                    stats.warnings.push(format!(
                        "{record_name}: span text {extracted:?} differs from surface {surface:?}"
                    ));
                }
            }

            let gazetteer_id = read_geonames_id(toponym, profile);

            let mut mention_id = record_name.clone();
            while !used_ids.insert(mention_id.clone()) {
                mention_id = format!("{mention_id}+");
            }
            mentions.push(Mention {
                mention_id,
                doc_id: doc_id.clone(),
                surface,
                span,
                gold,
                gazetteer_id,
                context: None,
            });
        }
    }

    Ok((
        Corpus {
            name: name.to_string(),
            mentions,
            documents,
        },
        stats,
    ))
}

fn read_geonames_id(toponym: roxmltree::Node, profile: &XmlProfile) -> Option<u64> {
    if let Some(attr) = profile.geonames_id_attr.as_deref() {
        let holder = match profile.geonames_id_tag.as_deref() {
            Some(tag) => toponym.descendants().find(|n| n.has_tag_name(tag))?,
            None => toponym,
        };
        return holder.attribute(attr).and_then(|v| v.trim().parse().ok());
    }
    if let Some(tag) = profile.geonames_id_tag.as_deref() {
        return toponym
            .descendants()
            .find(|n| n.has_tag_name(tag))
            .and_then(|n| n.text())
            .and_then(|v| v.trim().parse().ok());
    }
    None
}

/// Converts a raw span into code-point offsets when the profile stores bytes.
fn convert_span(
    span: (usize, usize),
    unit: OffsetUnit,
    doc_text: Option<&str>,
) -> Result<(usize, usize), String> {
    match unit {
        OffsetUnit::CodePoints => Ok(span),
        OffsetUnit::Bytes => {
            let Some(text) = doc_text else {
                return Err("byte offsets given but no document text to convert against".into());
            };
            let to_chars = |byte: usize| -> Result<usize, String> {
                if byte > text.len() || !text.is_char_boundary(byte) {
                    return Err(format!("byte offset {byte} is not a character boundary"));
                }
                Ok(text[..byte].chars().count())
            };
            Ok((to_chars(span.0)?, to_chars(span.1)?))
        }
    }
}

/// Wire record of the normalized mention interchange format: one JSON object
/// per line, offsets in Unicode code points.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MentionRecord {
    mention_id: String,
    doc_id: String,
    surface: String,
    start: usize,
    end: usize,
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geonames_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<String>,
}

pub fn parse_mentions_jsonl(path: &Path) -> Result<Corpus, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    read_mentions_jsonl(file, &name)
}

pub fn read_mentions_jsonl<R: Read>(reader: R, name: &str) -> Result<Corpus, CorpusError> {
    let mut mentions = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: "<stream>".to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: MentionRecord = serde_json::from_str(trimmed)
            .map_err(|source| CorpusError::Json { line: line_no, source })?;
        if record.start >= record.end {
            return Err(CorpusError::InvalidMention {
                line: line_no,
                message: format!("span start {} must precede end {}", record.start, record.end),
            });
        }
        let gold = GeoPoint::new(record.lat, record.lon).map_err(|e| {
            CorpusError::InvalidMention {
                line: line_no,
                message: e.to_string(),
            }
        })?;
        if !seen.insert(record.mention_id.clone()) {
            return Err(CorpusError::DuplicateMentionId {
                mention_id: record.mention_id,
            });
        }
        mentions.push(Mention {
            mention_id: record.mention_id,
            doc_id: record.doc_id,
            surface: record.surface,
            span: (record.start, record.end),
            gold,
            gazetteer_id: record.geonames_id,
            context: record.context,
        });
    }
    Ok(Corpus {
        name: name.to_string(),
        mentions,
        documents: BTreeMap::new(),
    })
}

/// Writes the corpus in the interchange format, one mention per line in
/// corpus order.
pub fn write_mentions_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> std::io::Result<()> {
    for m in &corpus.mentions {
        let record = MentionRecord {
            mention_id: m.mention_id.clone(),
            doc_id: m.doc_id.clone(),
            surface: m.surface.clone(),
            start: m.span.0,
            end: m.span.1,
            lat: m.gold.lat(),
            lon: m.gold.lon(),
            geonames_id: m.gazetteer_id,
            context: m.context.clone(),
        };
        let json = serde_json::to_string(&record).expect("record serialization cannot fail");
        writeln!(writer, "{json}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lgl_like_profile() -> XmlProfile {
        XmlProfile {
            name: "test".into(),
            article_tag: "article".into(),
            doc_id_attr: Some("docid".into()),
            text_tag: Some("text".into()),
            toponym_tag: "toponym".into(),
            surface_tag: "phrase".into(),
            start_tag: "start".into(),
            end_tag: "end".into(),
            lat_tag: "lat".into(),
            lon_tag: "lon".into(),
            geonames_id_tag: Some("gaztag".into()),
            geonames_id_attr: Some("geonameid".into()),
            offsets: OffsetUnit::CodePoints,
        }
    }

    const MINIMAL_XML: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<articles>
  <article docid="a1">
    <text>Trip from Paris to the coast.</text>
    <toponyms>
      <toponym>
        <start>10</start>
        <end>15</end>
        <phrase>Paris</phrase>
        <gaztag geonameid="2988507">
          <lat>48.85</lat>
          <lon>2.35</lon>
        </gaztag>
      </toponym>
    </toponyms>
  </article>
</articles>
"#;

    #[test]
    fn parses_minimal_fixture() {
        let (corpus, stats) = parse_annotated_xml_str(MINIMAL_XML, "mini", &lgl_like_profile()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(stats.records_seen, 1);
        assert_eq!(stats.skipped, 0);
        let m = &corpus.mentions[0];
        assert_eq!(m.surface, "Paris");
        assert_eq!(m.span, (10, 15));
        assert_eq!(m.gazetteer_id, Some(2988507));
        assert_eq!(m.doc_id, "a1");
        assert!((m.gold.lat() - 48.85).abs() < 1e-12);
        assert!(stats.warnings.is_empty(), "{:?}", stats.warnings);
        assert_eq!(corpus.documents["a1"], "Trip from Paris to the coast.");
    }

    #[test]
    fn unparseable_coordinates_are_skipped_and_counted() {
        let xml = MINIMAL_XML.replace("<lat>48.85</lat>", "<lat>north</lat>");
        let (corpus, stats) = parse_annotated_xml_str(&xml, "mini", &lgl_like_profile()).unwrap();
        assert_eq!(corpus.len(), 0);
        assert_eq!(stats.records_seen, 1);
        assert_eq!(stats.skipped, 1);
        assert_eq!(corpus.len() + stats.skipped, stats.records_seen);
    }

    #[test]
    fn out_of_range_coordinate_skipped_with_warning() {
        let xml = MINIMAL_XML.replace("<lat>48.85</lat>", "<lat>98.85</lat>");
        let (corpus, stats) = parse_annotated_xml_str(&xml, "mini", &lgl_like_profile()).unwrap();
        assert_eq!(corpus.len(), 0);
        assert_eq!(stats.skipped, 1);
        assert!(stats.warnings[0].contains("out of range"));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<articles>\n<article>\n</articles>";
        match parse_annotated_xml_str(xml, "bad", &lgl_like_profile()) {
            Err(CorpusError::Xml { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected xml error, got {other:?}"),
        }
    }

    #[test]
    fn span_mismatch_produces_warning_not_skip() {
        let xml = MINIMAL_XML.replace("<start>10</start>", "<start>11</start>")
            .replace("<end>15</end>", "<end>16</end>");
        let (corpus, stats) = parse_annotated_xml_str(&xml, "mini", &lgl_like_profile()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(stats.warnings.iter().any(|w| w.contains("differs from surface")));
    }

    #[test]
    fn byte_offsets_converted_to_code_points() {
        let xml = r#"<articles><article docid="a1">
<text>Öl in Wien fließt.</text>
<toponyms><toponym><start>7</start><end>11</end><phrase>Wien</phrase>
<gaztag geonameid="2761369"><lat>48.2</lat><lon>16.37</lon></gaztag>
</toponym></toponyms></article></articles>"#;
        let mut profile = lgl_like_profile();
        profile.offsets = OffsetUnit::Bytes;
        // "Öl in " is 7 bytes but 6 code points.
        let (corpus, stats) = parse_annotated_xml_str(xml, "mini", &profile).unwrap();
        assert_eq!(corpus.len(), 1, "{:?}", stats.warnings);
        assert_eq!(corpus.mentions[0].span, (6, 10));
        assert!(stats.warnings.is_empty(), "{:?}", stats.warnings);
    }

    #[test]
    fn empty_jsonl_is_empty_corpus() {
        let corpus = read_mentions_jsonl("".as_bytes(), "empty").unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.name, "empty");
    }

    #[test]
    fn jsonl_preserves_input_order() {
        let data = r#"{"mention_id":"m1","doc_id":"d1","surface":"Berlin","start":0,"end":6,"lat":52.52,"lon":13.4}
{"mention_id":"m2","doc_id":"d1","surface":"Pankow","start":10,"end":16,"lat":52.57,"lon":13.4}
{"mention_id":"m3","doc_id":"d2","surface":"Spandau","start":4,"end":11,"lat":52.55,"lon":13.2,"geonames_id":2831580}
"#;
        let corpus = read_mentions_jsonl(data.as_bytes(), "three").unwrap();
        assert_eq!(corpus.len(), 3);
        let ids: Vec<_> = corpus.mentions.iter().map(|m| m.mention_id.as_str()).collect();
        assert_eq!(ids, vec!["m1", "m2", "m3"]);
        assert_eq!(corpus.mentions[2].gazetteer_id, Some(2831580));
    }

    #[test]
    fn missing_field_error_names_line_and_field() {
        let data = r#"{"mention_id":"m1","doc_id":"d1","surface":"Berlin","start":0,"end":6,"lon":13.4}"#;
        match read_mentions_jsonl(data.as_bytes(), "bad") {
            Err(CorpusError::Json { line, source }) => {
                assert_eq!(line, 1);
                assert!(source.to_string().contains("lat"), "{source}");
            }
            other => panic!("expected json error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_mention_id_rejected() {
        let data = r#"{"mention_id":"m1","doc_id":"d1","surface":"A","start":0,"end":1,"lat":1.0,"lon":1.0}
{"mention_id":"m1","doc_id":"d1","surface":"B","start":2,"end":3,"lat":1.0,"lon":1.0}
"#;
        assert!(matches!(
            read_mentions_jsonl(data.as_bytes(), "dup"),
            Err(CorpusError::DuplicateMentionId { .. })
        ));
    }

    #[test]
    fn exclusion_list_has_29_entries() {
        assert_eq!(MISALIGNED_TOPONYMS.len(), 29);
        let unique: HashSet<String> = MISALIGNED_TOPONYMS.iter().map(|s| s.to_lowercase()).collect();
        assert_eq!(unique.len(), 29);
    }

    fn mention(id: &str, surface: &str) -> Mention {
        Mention {
            mention_id: id.to_string(),
            doc_id: "d1".to_string(),
            surface: surface.to_string(),
            span: (0, surface.chars().count().max(1)),
            gold: GeoPoint::new(10.0, 10.0).unwrap(),
            gazetteer_id: None,
            context: None,
        }
    }

    #[test]
    fn filter_removes_listed_forms() {
        let corpus = Corpus {
            name: "t".into(),
            mentions: vec![
                mention("m1", "Berlin"),
                mention("m2", "China"),
                mention("m3", "U.S."),
            ],
            documents: BTreeMap::new(),
        };
        let (filtered, removed) = filter_misaligned(&corpus);
        assert_eq!(removed, 2);
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered.mentions[0].surface, "Berlin");
    }

    #[test]
    fn filter_is_case_insensitive_and_trims() {
        let corpus = Corpus {
            name: "t".into(),
            mentions: vec![mention("m1", "  china "), mention("m2", "RUSSIA")],
            documents: BTreeMap::new(),
        };
        let (filtered, removed) = filter_misaligned(&corpus);
        assert_eq!(removed, 2);
        assert!(filtered.is_empty());
    }

    #[test]
    fn filter_leaves_unlisted_corpus_unchanged() {
        let corpus = Corpus {
            name: "t".into(),
            mentions: vec![mention("m1", "Berlin"), mention("m2", "Zurich")],
            documents: BTreeMap::new(),
        };
        let (filtered, removed) = filter_misaligned(&corpus);
        assert_eq!(removed, 0);
        assert_eq!(filtered, corpus);
    }

    #[test]
    fn filter_is_idempotent() {
        let corpus = Corpus {
            name: "t".into(),
            mentions: vec![
                mention("m1", "Berlin"),
                mention("m2", "Asia"),
                mention("m3", "Middle East"),
            ],
            documents: BTreeMap::new(),
        };
        let (once, removed_once) = filter_misaligned(&corpus);
        let (twice, removed_twice) = filter_misaligned(&once);
        assert_eq!(removed_once, 2);
        assert_eq!(removed_twice, 0);
        assert_eq!(once, twice);
    }

    prop_compose! {
        fn arb_mention(idx: usize)(
            surface in "[A-Za-z][A-Za-z ]{0,12}",
            lat in -90.0..=90.0f64,
            lon in -180.0..180.0f64,
            len in 1usize..20,
            start in 0usize..100,
            geonames in proptest::option::of(1u64..10_000_000),
            context in proptest::option::of("[a-z ]{0,20}"),
        ) -> Mention {
            Mention {
                mention_id: format!("m{idx}"),
                doc_id: format!("d{}", idx % 7),
                surface,
                span: (start, start + len),
                gold: GeoPoint::new(lat, lon).unwrap(),
                gazetteer_id: geonames,
                context,
            }
        }
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        (0usize..20)
            .prop_flat_map(|n| {
                let mentions: Vec<_> = (0..n).map(arb_mention).collect();
                mentions
            })
            .prop_map(|mentions| Corpus {
                name: "generated".into(),
                mentions,
                documents: BTreeMap::new(),
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(corpus in arb_corpus()) {
            let mut buf = Vec::new();
            write_mentions_jsonl(&corpus, &mut buf).unwrap();
            let parsed = read_mentions_jsonl(buf.as_slice(), "generated").unwrap();
            prop_assert_eq!(parsed, corpus);
        }

        #[test]
        fn filter_count_is_consistent(corpus in arb_corpus()) {
            let (filtered, removed) = filter_misaligned(&corpus);
            prop_assert_eq!(filtered.len() + removed, corpus.len());
        }
    }
}
