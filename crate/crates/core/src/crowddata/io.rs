//! Dataset directory format:
//!
//! - `meta.json`: sizes, preset name, seed, format version and which
//!   features file is authoritative.
//! - `features.csv` (`id,f0,...`) or `features.bin` (`CCCD`, u32 version,
//!   u32 N, u32 D, then N*D little-endian f64 row-major).
//! - `annotations.csv` (`instance,annotator,label`).
//! - `truth.csv` (`instance,label`), optional.
//! - `test_features.{csv,bin}` + `test_truth.csv`, optional held-out split.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Annotation, CrowdDataset, LabeledSplit};
use crate::error::{Error, Result};
use crate::mathcore::Matrix;

pub const FORMAT_VERSION: u32 = 1;
const FEATURES_MAGIC: &[u8; 4] = b"CCCD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeaturesFormat {
    Csv,
    Bin,
}

impl FeaturesFormat {
    fn file_name(self, stem: &str) -> String {
        match self {
            FeaturesFormat::Csv => format!("{stem}.csv"),
            FeaturesFormat::Bin => format!("{stem}.bin"),
        }
    }
}

impl std::str::FromStr for FeaturesFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(FeaturesFormat::Csv),
            "bin" => Ok(FeaturesFormat::Bin),
            other => Err(format!("unknown features format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaJson {
    pub n: usize,
    pub d: usize,
    pub c: usize,
    pub r: usize,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub format_version: u32,
    pub features_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_n: Option<usize>,
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn range_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Range {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `ds` into `dir` (created if needed).
pub fn save_dataset(ds: &CrowdDataset, dir: &Path, format: FeaturesFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = MetaJson {
        n: ds.len(),
        d: ds.dim(),
        c: ds.class_count(),
        r: ds.annotator_count(),
        preset: ds.preset.clone(),
        seed: ds.seed,
        format_version: FORMAT_VERSION,
        features_file: format.file_name("features"),
        test_n: ds.test.as_ref().map(|t| t.labels.len()),
    };
    let meta_path = dir.join("meta.json");
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;

    write_features(ds.features(), &dir.join(format.file_name("features")), format)?;

    let path = dir.join("annotations.csv");
    let mut w = create(&path)?;
    let mut body = String::from("instance,annotator,label\n");
    for a in ds.annotations() {
        body.push_str(&format!("{},{},{}\n", a.instance, a.annotator, a.label));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;

    if let Some(truth) = ds.truth() {
        write_labels(truth, &dir.join("truth.csv"))?;
    }
    if let Some(test) = &ds.test {
        write_features(
            &test.features,
            &dir.join(format.file_name("test_features")),
            format,
        )?;
        write_labels(&test.labels, &dir.join("test_truth.csv"))?;
    }
    Ok(())
}

fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut body = String::from("instance,label\n");
    for (i, y) in labels.iter().enumerate() {
        body.push_str(&format!("{i},{y}\n"));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes `features` as `id,f0,...` CSV and `labels` as a trailing `label`
/// column; the layout `ccc eval` reads.
pub fn write_labeled_csv(features: &Matrix, labels: &[usize], path: &Path) -> Result<()> {
    let mut body = String::from("id");
    for k in 0..features.cols() {
        body.push_str(&format!(",f{k}"));
    }
    body.push_str(",label\n");
    for (i, y) in labels.iter().enumerate() {
        body.push_str(&i.to_string());
        for v in features.row(i) {
            body.push_str(&format!(",{v}"));
        }
        body.push_str(&format!(",{y}\n"));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Reads the layout written by [`write_labeled_csv`]; the feature count
/// comes from the header.
pub fn read_labeled_csv(path: &Path) -> Result<(Matrix, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(open(path)?);
    let header: Vec<String> = match reader.records().next() {
        Some(rec) => rec
            .map_err(|e| format_err(path, 1, e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect(),
        None => return Err(format_err(path, 1, "missing header")),
    };
    let d = header.len().saturating_sub(2);
    let mut expected = vec!["id".to_string()];
    expected.extend((0..d).map(|k| format!("f{k}")));
    expected.push("label".into());
    if d == 0 || header != expected {
        return Err(format_err(path, 1, "expected header `id,f0,...,label`"));
    }
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    let rows = read_csv(path, &expected)?;
    let mut data = Vec::with_capacity(rows.len() * d);
    let mut labels = Vec::with_capacity(rows.len());
    for (i, (line, fields)) in rows.iter().enumerate() {
        let id = parse_usize(path, *line, &fields[0], "id")?;
        if id != i {
            return Err(format_err(path, *line, format!("expected id {i}, found {id}")));
        }
        for f in &fields[1..=d] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| format_err(path, *line, format!("invalid number `{f}`")))?;
            if !v.is_finite() {
                return Err(format_err(path, *line, "non-finite feature"));
            }
            data.push(v);
        }
        labels.push(parse_usize(path, *line, &fields[d + 1], "label")?);
    }
    if labels.is_empty() {
        return Err(format_err(path, 2, "no rows"));
    }
    Ok((Matrix::from_vec(labels.len(), d, data)?, labels))
}

fn write_features(features: &Matrix, path: &Path, format: FeaturesFormat) -> Result<()> {
    let mut w = create(path)?;
    let res = match format {
        FeaturesFormat::Csv => {
            let mut body = String::from("id");
            for k in 0..features.cols() {
                body.push_str(&format!(",f{k}"));
            }
            body.push('\n');
            for i in 0..features.rows() {
                body.push_str(&i.to_string());
                for v in features.row(i) {
                    // `Display` for f64 is the shortest exact round-trip form
                    body.push_str(&format!(",{v}"));
                }
                body.push('\n');
            }
            w.write_all(body.as_bytes())
        }
        FeaturesFormat::Bin => (|| {
            w.write_all(FEATURES_MAGIC)?;
            w.write_all(&FORMAT_VERSION.to_le_bytes())?;
            w.write_all(&(features.rows() as u32).to_le_bytes())?;
            w.write_all(&(features.cols() as u32).to_le_bytes())?;
            for v in features.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        })(),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Reads a CSV with the exact `header`, yielding `(line, fields)` per row.
fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(open(path)?);
    let mut rows = Vec::new();
    let mut first = true;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            format_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = rec.iter().map(str::to_owned).collect();
        if first {
            first = false;
            if fields != header {
                return Err(format_err(
                    path,
                    line,
                    format!("expected header `{}`", header.join(",")),
                ));
            }
            continue;
        }
        rows.push((line, fields));
    }
    if first {
        return Err(format_err(path, 1, "missing header"));
    }
    Ok(rows)
}

fn parse_usize(path: &Path, line: usize, field: &str, what: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| format_err(path, line, format!("invalid {what} `{field}`")))
}

fn read_features_csv(path: &Path, n: usize, d: usize) -> Result<Matrix> {
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|k| format!("f{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_csv(path, &header)?;
    if rows.len() != n {
        return Err(format_err(
            path,
            0,
            format!("expected {n} feature rows, found {}", rows.len()),
        ));
    }
    let mut data = Vec::with_capacity(n * d);
    for (expected, (line, fields)) in rows.iter().enumerate() {
        let id = parse_usize(path, *line, &fields[0], "id")?;
        if id != expected {
            return Err(format_err(path, *line, format!("expected id {expected}, found {id}")));
        }
        for f in &fields[1..] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| format_err(path, *line, format!("invalid number `{f}`")))?;
            if !v.is_finite() {
                return Err(format_err(path, *line, "non-finite feature"));
            }
            data.push(v);
        }
    }
    Matrix::from_vec(n, d, data)
}

fn read_features_bin(path: &Path, n: usize, d: usize) -> Result<Matrix> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != FEATURES_MAGIC {
        return Err(format_err(path, 0, "bad magic, expected CCCD"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    if u32_at(4) != FORMAT_VERSION as usize {
        return Err(format_err(path, 0, format!("unsupported version {}", u32_at(4))));
    }
    if u32_at(8) != n || u32_at(12) != d {
        return Err(format_err(
            path,
            0,
            format!("header says {}x{}, meta.json says {n}x{d}", u32_at(8), u32_at(12)),
        ));
    }
    let body = &bytes[16..];
    if body.len() != n * d * 8 {
        return Err(format_err(path, 0, format!("expected {} payload bytes, found {}", n * d * 8, body.len())));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(format_err(path, 0, "non-finite feature"));
    }
    Matrix::from_vec(n, d, data)
}

fn read_features(dir: &Path, file: &str, n: usize, d: usize) -> Result<Matrix> {
    let path = dir.join(file);
    if file.ends_with(".csv") {
        read_features_csv(&path, n, d)
    } else if file.ends_with(".bin") {
        read_features_bin(&path, n, d)
    } else {
        Err(format_err(
            &dir.join("meta.json"),
            0,
            format!("unsupported features_file `{file}`"),
        ))
    }
}

fn read_labels(path: &Path, n: usize, c: usize) -> Result<Vec<usize>> {
    let rows = read_csv(path, &["instance", "label"])?;
    let mut labels = vec![None; n];
    for (line, f) in rows {
        let i = parse_usize(path, line, &f[0], "instance")?;
        let y = parse_usize(path, line, &f[1], "label")?;
        if i >= n {
            return Err(range_err(path, line, format!("instance {i} >= n = {n}")));
        }
        if y >= c {
            return Err(range_err(path, line, format!("label {y} >= c = {c}")));
        }
        if labels[i].replace(y).is_some() {
            return Err(format_err(path, line, format!("instance {i} listed twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, y)| y.ok_or_else(|| format_err(path, 0, format!("instance {i} missing"))))
        .collect()
}

/// Loads and validates a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<CrowdDataset> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MetaJson = serde_json::from_str(&text)
        .map_err(|e| format_err(&meta_path, e.line(), e.to_string()))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(format_err(
            &meta_path,
            0,
            format!("unsupported format_version {}", meta.format_version),
        ));
    }
    let features = read_features(dir, &meta.features_file, meta.n, meta.d)?;

    let path = dir.join("annotations.csv");
    let rows = read_csv(&path, &["instance", "annotator", "label"])?;
    let mut seen = std::collections::HashSet::new();
    let mut annotations = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        let instance = parse_usize(&path, line, &f[0], "instance")?;
        let annotator = parse_usize(&path, line, &f[1], "annotator")?;
        let label = parse_usize(&path, line, &f[2], "label")?;
        if instance >= meta.n {
            return Err(range_err(&path, line, format!("instance {instance} >= n = {}", meta.n)));
        }
        if annotator >= meta.r {
            return Err(range_err(&path, line, format!("annotator {annotator} >= r = {}", meta.r)));
        }
        if label >= meta.c {
            return Err(range_err(&path, line, format!("label {label} >= c = {}", meta.c)));
        }
        if !seen.insert((instance, annotator)) {
            return Err(Error::Duplicate {
                path: path.clone(),
                line,
                instance,
                annotator,
            });
        }
        annotations.push(Annotation {
            instance,
            annotator,
            label,
        });
    }

    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() {
        Some(read_labels(&truth_path, meta.n, meta.c)?)
    } else {
        None
    };
    let mut ds = CrowdDataset::new(features, meta.c, meta.r, annotations, truth)?;
    if let Err(Error::Contract(msg)) = ds.require_annotated() {
        return Err(format_err(&path, 0, msg));
    }
    ds.preset = meta.preset;
    ds.seed = meta.seed;
    if let Some(test_n) = meta.test_n {
        let ext = if meta.features_file.ends_with(".bin") { "bin" } else { "csv" };
        let test_features = read_features(dir, &format!("test_features.{ext}"), test_n, meta.d)?;
        let labels = read_labels(&dir.join("test_truth.csv"), test_n, meta.c)?;
        ds = ds.with_test(LabeledSplit {
            features: test_features,
            labels,
        })?;
    }
    Ok(ds)
}

