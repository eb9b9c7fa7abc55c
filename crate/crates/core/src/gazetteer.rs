//! GeoNames gazetteer: TSV ingestion, exact-match candidate lookup, the
//! largest-population baseline resolver, and place categorization.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Mention;
use crate::geodesy::GeoPoint;
use crate::predictions::Prediction;

/// One row of the GeoNames main export.
#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerEntry {
    pub geonames_id: u64,
    pub name: String,
    pub ascii_name: String,
    pub alternate_names: Vec<String>,
    pub point: GeoPoint,
    pub feature_class: Option<char>,
    pub feature_code: String,
    pub population: u64,
}

/// Coarse place category derived from GeoNames feature classes, with keyword
/// fallbacks for mentions that carry no gazetteer id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PlaceCategory {
    AdminUnit,
    Poi,
    NaturalFeature,
    TrafficWay,
    Unknown,
}

impl PlaceCategory {
    pub const ALL: [PlaceCategory; 5] = [
        PlaceCategory::AdminUnit,
        PlaceCategory::Poi,
        PlaceCategory::NaturalFeature,
        PlaceCategory::TrafficWay,
        PlaceCategory::Unknown,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PlaceCategory::AdminUnit => "admin_unit",
            PlaceCategory::Poi => "poi",
            PlaceCategory::NaturalFeature => "natural_feature",
            PlaceCategory::TrafficWay => "traffic_way",
            PlaceCategory::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for PlaceCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

const POI_KEYWORDS: [&str; 5] = ["church", "hospital", "school", "university", "park"];
const NATURAL_KEYWORDS: [&str; 2] = ["river", "creek"];
const TRAFFIC_KEYWORDS: [&str; 10] = [
    "street", "road", "roads", "railroad", "highway", "way", "drive", "hwy", "bridge", "trail",
];

/// Maps a GeoNames feature class onto a place category: `A` and `P` are admin
/// units, `L` and `S` are POIs, `H`/`T`/`U`/`V` are natural features, `R` is a
/// traffic way.
pub fn categorize_entry(entry: &GazetteerEntry) -> PlaceCategory {
    match entry.feature_class {
        Some('A') | Some('P') => PlaceCategory::AdminUnit,
        Some('L') | Some('S') => PlaceCategory::Poi,
        Some('H') | Some('T') | Some('U') | Some('V') => PlaceCategory::NaturalFeature,
        Some('R') => PlaceCategory::TrafficWay,
        _ => PlaceCategory::Unknown,
    }
}

/// Keyword classification of a surface form. Tokens are whitespace-split and
/// case-folded, and must match a keyword as a whole token ("Broadway" is not
/// a traffic way, a standalone "way" is). Precedence for multi-hit names is
/// traffic way, then natural feature, then POI.
pub fn categorize_surface(surface: &str) -> PlaceCategory {
    let tokens: Vec<String> = surface
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect();
    let has = |keywords: &[&str]| tokens.iter().any(|t| keywords.contains(&t.as_str()));
    if has(&TRAFFIC_KEYWORDS) {
        PlaceCategory::TrafficWay
    } else if has(&NATURAL_KEYWORDS) {
        PlaceCategory::NaturalFeature
    } else if has(&POI_KEYWORDS) {
        PlaceCategory::Poi
    } else {
        PlaceCategory::Unknown
    }
}

/// Categorizes a mention: through its GeoNames entry when the id resolves,
/// otherwise by surface keywords.
pub fn categorize_mention(mention: &Mention, gazetteer: Option<&Gazetteer>) -> PlaceCategory {
    if let (Some(id), Some(gaz)) = (mention.gazetteer_id, gazetteer) {
        if let Some(entry) = gaz.by_id(id) {
            return categorize_entry(entry);
        }
    }
    categorize_surface(&mention.surface)
}

/// In-memory gazetteer with a case-folded name index over primary, ASCII, and
/// alternate names. Immutable after load; lookups are re-entrant.
#[derive(Debug, Default)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_name: HashMap<String, Vec<usize>>,
    by_id: HashMap<u64, usize>,
}

impl Gazetteer {
    pub fn from_entries(entries: Vec<GazetteerEntry>) -> Self {
        let mut gaz = Gazetteer::default();
        for entry in entries {
            gaz.insert(entry);
        }
        gaz
    }

    /// Inserts an entry; an existing entry with the same id is replaced
    /// (last wins). Returns true when it replaced one.
    fn insert(&mut self, entry: GazetteerEntry) -> bool {
        if let Some(&idx) = self.by_id.get(&entry.geonames_id) {
            self.entries[idx] = entry;
            self.rebuild_name_index();
            return true;
        }
        let idx = self.entries.len();
        self.by_id.insert(entry.geonames_id, idx);
        self.entries.push(entry);
        self.index_entry(idx);
        false
    }

    fn index_entry(&mut self, idx: usize) {
        let entry = &self.entries[idx];
        let mut keys: Vec<String> = Vec::with_capacity(2 + entry.alternate_names.len());
        keys.push(entry.name.trim().to_lowercase());
        keys.push(entry.ascii_name.trim().to_lowercase());
        keys.extend(entry.alternate_names.iter().map(|n| n.trim().to_lowercase()));
        keys.retain(|k| !k.is_empty());
        keys.sort();
        keys.dedup();
        for key in keys {
            self.by_name.entry(key).or_default().push(idx);
        }
    }

    fn rebuild_name_index(&mut self) {
        self.by_name.clear();
        for idx in 0..self.entries.len() {
            self.index_entry(idx);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn by_id(&self, geonames_id: u64) -> Option<&GazetteerEntry> {
        self.by_id.get(&geonames_id).map(|&idx| &self.entries[idx])
    }

    /// All entries whose case-folded primary, ASCII, or alternate name equals
    /// the case-folded, trimmed surface, ordered by descending population and
    /// ascending GeoNames id.
    pub fn lookup_candidates(&self, surface: &str) -> Vec<&GazetteerEntry> {
        let key = surface.trim().to_lowercase();
        let mut hits: Vec<&GazetteerEntry> = self
            .by_name
            .get(&key)
            .map(|indices| indices.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default();
        hits.sort_by(|a, b| {
            b.population
                .cmp(&a.population)
                .then(a.geonames_id.cmp(&b.geonames_id))
        });
        hits.dedup_by_key(|e| e.geonames_id);
        hits
    }

    /// Largest-population baseline: the coordinates of the most populous
    /// candidate, ties broken by the lowest GeoNames id; invalid when the
    /// surface matches nothing.
    pub fn population_resolve(&self, surface: &str) -> Prediction {
        match self.lookup_candidates(surface).first() {
            Some(entry) => Prediction::from_latlon(entry.point.lat(), entry.point.lon()),
            None => Prediction::Invalid,
        }
    }
}

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Counters from one TSV load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadStats {
    pub rows_seen: usize,
    pub skipped: usize,
    pub replaced: usize,
    pub warnings: Vec<String>,
}

/// Loads a gazetteer from the GeoNames main-export layout: tab-separated,
/// no header; columns 0 geonameid, 1 name, 2 asciiname, 3 alternatenames
/// (comma-separated), 4 latitude, 5 longitude, 6 feature class, 7 feature
/// code, 14 population. Malformed rows are skipped with a warning; an empty
/// or unparseable population defaults to 0; duplicate ids keep the last row.
pub fn load_geonames_tsv(path: &Path) -> Result<(Gazetteer, LoadStats), GazetteerError> {
    let file = File::open(path).map_err(|source| GazetteerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_geonames_tsv(file)
}

pub fn read_geonames_tsv<R: Read>(reader: R) -> Result<(Gazetteer, LoadStats), GazetteerError> {
    let mut gaz = Gazetteer::default();
    let mut stats = LoadStats::default();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| GazetteerError::Io {
            path: "<stream>".to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        stats.rows_seen += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            stats.skipped += 1;
            stats
                .warnings
                .push(format!("row {line_no}: only {} columns", fields.len()));
            continue;
        }
        let entry = match parse_row(&fields) {
            Ok(entry) => entry,
            Err(msg) => {
                stats.skipped += 1;
                stats.warnings.push(format!("row {line_no}: {msg}"));
                continue;
            }
        };
        if gaz.insert(entry) {
            stats.replaced += 1;
            stats
                .warnings
                .push(format!("row {line_no}: duplicate geonames id, last row wins"));
        }
    }
    Ok((gaz, stats))
}

fn parse_row(fields: &[&str]) -> Result<GazetteerEntry, String> {
    let geonames_id: u64 = fields[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad geonameid {:?}", fields[0]))?;
    let lat: f64 = fields[4]
        .trim()
        .parse()
        .map_err(|_| format!("bad latitude {:?}", fields[4]))?;
    let lon: f64 = fields[5]
        .trim()
        .parse()
        .map_err(|_| format!("bad longitude {:?}", fields[5]))?;
    let point = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;
    let alternate_names = if fields[3].is_empty() {
        Vec::new()
    } else {
        fields[3]
            .split(',')
            .map(str::to_string)
            .filter(|s| !s.is_empty())
            .collect()
    };
    let population = fields
        .get(14)
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0);
    Ok(GazetteerEntry {
        geonames_id,
        name: fields[1].to_string(),
        ascii_name: fields[2].to_string(),
        alternate_names,
        point,
        feature_class: fields[6].trim().chars().next(),
        feature_code: fields[7].trim().to_string(),
        population,
    })
}
