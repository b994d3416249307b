//! Corpus construction: streaming JSONL/TSV ingestion, the label-agreement
//! filter, and balanced train/valid/test split building.
//!
//! The input is streamed twice (count, then sample), so only the selected
//! records are ever held in memory.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// One raw ingested record before filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    /// Platform-detected language code (lowercased, region subtag stripped).
    pub detected_lang: String,
    /// Author-declared language code (same normalization).
    pub declared_lang: String,
}

/// One filtered, labeled corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub label: String,
}

impl LabeledText {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        LabeledText { text: text.into(), label: label.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl InputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(Error::Usage(format!("unknown format '{other}' (jsonl|tsv)"))),
        }
    }
}

/// Dot-separated JSON field paths for the three relevant attributes.
#[derive(Debug, Clone)]
pub struct JsonFields {
    pub id: String,
    pub text: String,
    pub detected: String,
    pub declared: String,
}

impl Default for JsonFields {
    /// Tweet-style defaults: `id`, `text`, `lang`, `user.lang`.
    fn default() -> Self {
        JsonFields {
            id: "id".into(),
            text: "text".into(),
            detected: "lang".into(),
            declared: "user.lang".into(),
        }
    }
}

/// Lowercase, trim, and strip a region subtag: "en-GB " -> "en".
pub fn normalize_lang(code: &str) -> String {
    let code = code.trim().to_lowercase();
    match code.split_once(['-', '_']) {
        Some((base, _)) => base.to_string(),
        None => code,
    }
}

fn json_path<'a>(v: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    let mut cur = v;
    for part in path.split('.') {
        cur = cur.get(part)?;
    }
    Some(cur)
}

/// Streaming record reader. Malformed lines are counted and skipped; the
/// stream itself never aborts on them.
pub struct RecordStream {
    reader: BufReader<File>,
    format: InputFormat,
    fields: JsonFields,
    line_buf: String,
    pub lines: u64,
    pub malformed: u64,
    pub yielded: u64,
}

impl RecordStream {
    fn parse_line(&self, line: &str) -> Option<RawRecord> {
        let rec = match self.format {
            InputFormat::Jsonl => {
                let v: serde_json::Value = serde_json::from_str(line).ok()?;
                let scalar = |p: &str| -> Option<String> {
                    let f = json_path(&v, p)?;
                    match f {
                        serde_json::Value::String(s) => Some(s.clone()),
                        serde_json::Value::Number(n) => Some(n.to_string()),
                        _ => None,
                    }
                };
                RawRecord {
                    id: scalar(&self.fields.id)?,
                    text: scalar(&self.fields.text)?,
                    detected_lang: normalize_lang(&scalar(&self.fields.detected)?),
                    declared_lang: normalize_lang(&scalar(&self.fields.declared)?),
                }
            }
            InputFormat::Tsv => {
                // columns: id, detected_lang, declared_lang, text
                let mut parts = line.splitn(4, '\t');
                let id = parts.next()?.to_string();
                let detected = parts.next()?;
                let declared = parts.next()?;
                let text = parts.next()?.to_string();
                RawRecord {
                    id,
                    text,
                    detected_lang: normalize_lang(detected),
                    declared_lang: normalize_lang(declared),
                }
            }
        };
        if rec.text.is_empty() || rec.detected_lang.is_empty() || rec.declared_lang.is_empty() {
            return None;
        }
        Some(rec)
    }

    /// Fails when more than half of all lines were malformed, which almost
    /// always means the wrong `--format` was chosen.
    pub fn check_malformed(&self) -> Result<()> {
        if self.lines > 0 && self.malformed * 2 > self.lines {
            return Err(Error::Data(format!(
                "{} of {} lines were malformed; wrong input format?",
                self.malformed, self.lines
            )));
        }
        Ok(())
    }
}

impl Iterator for RecordStream {
    type Item = RawRecord;

    fn next(&mut self) -> Option<RawRecord> {
        loop {
            self.line_buf.clear();
            match self.reader.read_line(&mut self.line_buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(_) => return None,
            }
            let line = self.line_buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }
            self.lines += 1;
            match self.parse_line(line) {
                Some(rec) => {
                    self.yielded += 1;
                    return Some(rec);
                }
                None => self.malformed += 1,
            }
        }
    }
}

/// Open a JSONL or TSV file as a stream of [`RawRecord`]s.
pub fn ingest_records(
    path: &Path,
    format: InputFormat,
    fields: JsonFields,
) -> Result<RecordStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(RecordStream {
        reader: BufReader::new(file),
        format,
        fields,
        line_buf: String::new(),
        lines: 0,
        malformed: 0,
        yielded: 0,
    })
}

/// Keep only records whose detected and declared languages agree; that
/// language becomes the label. Order is preserved.
pub fn agreement_filter(
    records: impl Iterator<Item = RawRecord>,
) -> impl Iterator<Item = LabeledText> {
    records.filter_map(|r| {
        if r.detected_lang == r.declared_lang {
            Some(LabeledText { text: r.text, label: r.detected_lang })
        } else {
            None
        }
    })
}

/// Balanced split construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Ordered language codes; also fixes the label order downstream.
    pub languages: Vec<String>,
    pub per_lang_train: usize,
    pub per_lang_valid: usize,
    pub per_lang_test: usize,
    pub seed: u64,
    /// Records shorter than this many characters are dropped before counting.
    pub min_chars: usize,
    /// Basename prefix for the split files.
    pub name: String,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::Usage("at least one language is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.languages {
            if !seen.insert(l) {
                return Err(Error::Usage(format!("duplicate language '{l}'")));
            }
        }
        if self.per_lang_train == 0 || self.per_lang_valid == 0 || self.per_lang_test == 0 {
            return Err(Error::Usage("per-language split counts must be > 0".into()));
        }
        Ok(())
    }

    pub fn per_lang_total(&self) -> usize {
        self.per_lang_train + self.per_lang_valid + self.per_lang_test
    }
}

/// What `build_balanced_splits` wrote: file per split plus bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub splits: HashMap<String, PathBuf>,
    /// split -> language -> record count
    pub counts: HashMap<String, HashMap<String, usize>>,
    pub seed: u64,
    pub languages: Vec<String>,
    pub per_lang_train: usize,
    pub per_lang_valid: usize,
    pub per_lang_test: usize,
    pub min_chars: usize,
}

const SPLIT_NAMES: [&str; 3] = ["train", "valid", "test"];

fn sanitize_text(text: &str) -> String {
    // split files are TAB-separated, one record per line
    text.replace(['\t', '\n', '\r'], " ")
}

/// Write one split file: `label TAB text`, one record per line.
fn write_split(path: &Path, records: &[LabeledText]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}\t{}", r.label, sanitize_text(&r.text)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a split file back into memory.
pub fn read_split(path: &Path) -> Result<Vec<LabeledText>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| {
            Error::Data(format!("{}:{}: expected 'label<TAB>text'", path.display(), no + 1))
        })?;
        out.push(LabeledText::new(text, label));
    }
    Ok(out)
}

/// Build balanced, disjoint, seeded train/valid/test splits.
///
/// `make_stream` must produce the same filtered record stream on each call;
/// it is invoked twice (count pass, then collection pass).
pub fn build_balanced_splits<I, S>(
    make_stream: S,
    spec: &SplitSpec,
    out_dir: &Path,
) -> Result<DatasetManifest>
where
    I: Iterator<Item = LabeledText>,
    S: Fn() -> Result<I>,
{
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let lang_idx: HashMap<&str, usize> =
        spec.languages.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let wanted = |r: &LabeledText| r.text.chars().count() >= spec.min_chars.max(1);

    // pass 1: count available records per language
    let mut avail = vec![0usize; spec.languages.len()];
    for rec in make_stream()? {
        if let Some(&i) = lang_idx.get(rec.label.as_str()) {
            if wanted(&rec) {
                avail[i] += 1;
            }
        }
    }
    let need = spec.per_lang_total();
    let deficient: Vec<String> = spec
        .languages
        .iter()
        .zip(&avail)
        .filter(|(_, &n)| n < need)
        .map(|(l, &n)| format!("{l} ({n} available, {need} needed)"))
        .collect();
    if !deficient.is_empty() {
        return Err(Error::Data(format!(
            "insufficient records for: {}",
            deficient.join(", ")
        )));
    }

    // seeded selection: for each language, choose `need` of the `avail` record
    // positions without replacement, then deal them out to the three splits
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut selected: Vec<HashMap<usize, usize>> = Vec::with_capacity(spec.languages.len());
    for &n in &avail {
        let mut pos: Vec<usize> = (0..n).collect();
        pos.shuffle(&mut rng);
        let map = pos
            .into_iter()
            .take(need)
            .enumerate()
            .map(|(slot, p)| (p, slot))
            .collect();
        selected.push(map);
    }

    // pass 2: collect the selected records
    let mut picked: Vec<Vec<Option<LabeledText>>> =
        avail.iter().map(|_| vec![None; need]).collect();
    let mut seen = vec![0usize; spec.languages.len()];
    for rec in make_stream()? {
        if let Some(&i) = lang_idx.get(rec.label.as_str()) {
            if !wanted(&rec) {
                continue;
            }
            if let Some(&slot) = selected[i].get(&seen[i]) {
                picked[i][slot] = Some(rec);
            }
            seen[i] += 1;
        }
    }

    // slots [0, train) -> train, [train, train+valid) -> valid, rest -> test
    let mut splits: [Vec<LabeledText>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let bounds = [
        0,
        spec.per_lang_train,
        spec.per_lang_train + spec.per_lang_valid,
        need,
    ];
    for lang_slots in picked {
        for (slot, rec) in lang_slots.into_iter().enumerate() {
            let rec = rec.ok_or_else(|| {
                Error::Data("input changed between the two streaming passes".into())
            })?;
            let split = bounds[1..].iter().position(|&b| slot < b).unwrap();
            splits[split].push(rec);
        }
    }

    let mut manifest = DatasetManifest {
        splits: HashMap::new(),
        counts: HashMap::new(),
        seed: spec.seed,
        languages: spec.languages.clone(),
        per_lang_train: spec.per_lang_train,
        per_lang_valid: spec.per_lang_valid,
        per_lang_test: spec.per_lang_test,
        min_chars: spec.min_chars,
    };
    for (records, name) in splits.iter_mut().zip(SPLIT_NAMES) {
        records.shuffle(&mut rng);
        let path = out_dir.join(format!("{}.{}.tsv", spec.name, name));
        write_split(&path, records)?;
        let mut counts: HashMap<String, usize> = HashMap::new();
        for r in records.iter() {
            *counts.entry(r.label.clone()).or_insert(0) += 1;
        }
        manifest.splits.insert(name.to_string(), path);
        manifest.counts.insert(name.to_string(), counts);
    }
    let manifest_path = out_dir.join(format!("{}.manifest.json", spec.name));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}
