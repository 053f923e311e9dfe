//! Embedding storage: loading, validation, normalization and template pooling.
//!
//! On disk vectors are `f32`; in memory everything is `f64`.
//!
//! Binary layout (`EMB1`): the magic bytes, `u32` LE row count, `u32` LE
//! dimension, then `rows * dim` LE `f32` values in row-major order. Optional
//! sidecars sit next to the main file with an extra suffix: `<name>.ids`
//! (one UTF-8 id per line), `<name>.labels` and `<name>.media` (one integer
//! per line).
//!
//! CSV layout: one sample per line, comma-separated floats, with an optional
//! leading id column detected by the first field of the first row failing
//! to parse as a number.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"EMB1";

/// Rows already this close to unit norm are left untouched by [`EmbeddingSet::normalize`].
const UNIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Binary,
    Csv,
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(FileFormat::Binary),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// `n` feature vectors of dimension `d` plus optional per-sample metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
    ids: Option<Vec<String>>,
    labels: Option<Vec<i64>>,
    media_ids: Option<Vec<i64>>,
}

impl EmbeddingSet {
    /// Builds a set from row-major `data`. Rejects empty shapes and
    /// non-finite entries.
    pub fn new(data: Vec<f64>, rows: usize, dim: usize) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "embedding set must be non-empty (got {rows} x {dim})"
            )));
        }
        if data.len() != rows * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {rows} x {dim}, got {}",
                rows * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            data,
            rows,
            dim,
            ids: None,
            labels: None,
            media_ids: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(data, rows.len(), dim)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        self.check_len("ids", ids.len())?;
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        self.check_len("labels", labels.len())?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_media_ids(mut self, media_ids: Vec<i64>) -> Result<Self> {
        self.check_len("media ids", media_ids.len())?;
        self.media_ids = Some(media_ids);
        Ok(self)
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.rows {
            return Err(Error::InvalidInput(format!(
                "{what} has {len} entries but the set has {} rows",
                self.rows
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn media_ids(&self) -> Option<&[i64]> {
        self.media_ids.as_deref()
    }

    /// The sample's id, or its index when the set carries no ids.
    pub fn sample_id(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Every row has unit Euclidean norm within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.rows().all(|r| (norm(r) - 1.0).abs() <= tol)
    }

    /// Scales every row to unit Euclidean norm.
    pub fn normalize(&self) -> Result<Self> {
        let mut out = self.clone();
        for (i, row) in out.data.chunks_exact_mut(self.dim).enumerate() {
            let n = norm(row);
            if n == 0.0 {
                return Err(Error::ZeroNorm { row: i });
            }
            if (n - 1.0).abs() > UNIT_SLACK {
                row.iter_mut().for_each(|v| *v /= n);
            }
        }
        Ok(out)
    }

    /// Rows `indices` in the given order, with metadata carried along.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidInput(format!(
                    "index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        let pick = |v: &Vec<_>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let mut out = Self::new(data, indices.len(), self.dim)?;
        out.ids = self
            .ids
            .as_ref()
            .map(|v| indices.iter().map(|&i| v[i].clone()).collect());
        out.labels = self.labels.as_ref().map(pick);
        out.media_ids = self.media_ids.as_ref().map(pick);
        Ok(out)
    }

    /// Collapses each template into one unit vector: members are averaged
    /// within each media group, the media means are averaged, and the result
    /// is renormalized. Output rows follow `templates` order and take the
    /// label of each template's first member.
    pub fn media_pool(&self, templates: &[Vec<usize>]) -> Result<Self> {
        let media = self
            .media_ids
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("media pooling requires media ids".into()))?;
        let mut seen = vec![false; self.rows];
        let mut data = Vec::with_capacity(templates.len() * self.dim);
        for (t, members) in templates.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidInput(format!("template {t} is empty")));
            }
            // media id -> (sum, count), in order of first appearance
            let mut groups: Vec<(Vec<f64>, usize)> = Vec::new();
            let mut slot: HashMap<i64, usize> = HashMap::new();
            let mut scale = 0.0f64;
            for &i in members {
                if i >= self.rows {
                    return Err(Error::InvalidInput(format!(
                        "template {t} references sample {i}, but the set has {} rows",
                        self.rows
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidInput(format!(
                        "sample {i} appears in more than one template"
                    )));
                }
                let g = *slot.entry(media[i]).or_insert_with(|| {
                    groups.push((vec![0.0; self.dim], 0));
                    groups.len() - 1
                });
                let (sum, count) = &mut groups[g];
                for (s, v) in sum.iter_mut().zip(self.row(i)) {
                    *s += v;
                }
                *count += 1;
                scale = scale.max(norm(self.row(i)));
            }
            let mut pooled = vec![0.0; self.dim];
            for (sum, count) in &groups {
                for (p, s) in pooled.iter_mut().zip(sum) {
                    *p += s / *count as f64;
                }
            }
            pooled.iter_mut().for_each(|p| *p /= groups.len() as f64);
            let n = norm(&pooled);
            if n <= 1e-12 * scale || n == 0.0 {
                return Err(Error::ZeroNorm { row: t });
            }
            data.extend(pooled.iter().map(|p| p / n));
        }
        let mut out = Self::new(data, templates.len(), self.dim)?;
        out.labels = self
            .labels
            .as_ref()
            .map(|l| templates.iter().map(|m| l[m[0]]).collect());
        Ok(out)
    }

    /// Reads a set and any sidecar files next to it. Vectors are returned as
    /// stored; call [`normalize`](Self::normalize) before similarity work.
    pub fn load(path: impl AsRef<Path>, format: FileFormat) -> Result<Self> {
        let path = path.as_ref();
        let mut set = match format {
            FileFormat::Binary => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                parse_binary(path, &bytes)?
            }
            FileFormat::Csv => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_csv(path, &text)?
            }
        };
        let ids_path = sidecar(path, "ids");
        if ids_path.exists() {
            let text = fs::read_to_string(&ids_path).map_err(|e| Error::io(&ids_path, e))?;
            let ids: Vec<String> = text.lines().map(str::to_owned).collect();
            set = set.with_ids(ids).map_err(|e| sidecar_err(&ids_path, e))?;
        }
        let labels_path = sidecar(path, "labels");
        if labels_path.exists() {
            let labels = read_integers(&labels_path)?;
            set = set.with_labels(labels).map_err(|e| sidecar_err(&labels_path, e))?;
        }
        let media_path = sidecar(path, "media");
        if media_path.exists() {
            let media = read_integers(&media_path)?;
            set = set.with_media_ids(media).map_err(|e| sidecar_err(&media_path, e))?;
        }
        Ok(set)
    }

    /// Writes the `EMB1` file plus sidecars for whichever metadata is present.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_binary_bytes()).map_err(|e| Error::io(path, e))?;
        self.write_sidecars(path)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for i in 0..self.rows {
            if let Some(ids) = &self.ids {
                out.push_str(&ids[i]);
                out.push(',');
            }
            let fields: Vec<String> = self.row(i).iter().map(|v| (*v as f32).to_string()).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        let mut labels_only = self.clone();
        labels_only.ids = None;
        labels_only.write_sidecars(path)
    }

    fn write_sidecars(&self, path: &Path) -> Result<()> {
        if let Some(ids) = &self.ids {
            write_lines(&sidecar(path, "ids"), ids.iter())?;
        }
        if let Some(labels) = &self.labels {
            write_lines(&sidecar(path, "labels"), labels.iter())?;
        }
        if let Some(media) = &self.media_ids {
            write_lines(&sidecar(path, "media"), media.iter())?;
        }
        Ok(())
    }

    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.data.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }
}

pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn sidecar_err(path: &Path, e: Error) -> Error {
    Error::InvalidInput(format!("{}: {e}", path.display()))
}

fn write_lines<T: std::fmt::Display>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for item in items {
        writeln!(f, "{item}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

/// One integer per line; blank lines are rejected.
pub fn read_integers(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            line.trim().parse::<i64>().map_err(|_| {
                Error::format(
                    path,
                    format!("line {}", n + 1),
                    format!("expected an integer, got {line:?}"),
                )
            })
        })
        .collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<EmbeddingSet> {
    if bytes.len() < 12 {
        return Err(Error::format(path, "byte 0", "file shorter than the 12-byte header"));
    }
    if &bytes[..4] != BINARY_MAGIC {
        return Err(Error::format(path, "byte 0", "missing EMB1 magic"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 || dim == 0 {
        return Err(Error::format(path, "byte 4", format!("empty shape {rows} x {dim}")));
    }
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| Error::format(path, "byte 4", "header shape overflows"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("byte {}", bytes.len().min(expected)),
            format!(
                "header declares {rows} x {dim} ({expected} bytes) but file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(rows * dim);
    for (k, chunk) in bytes[12..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                path,
                format!("byte {}", 12 + 4 * k),
                format!("non-finite value at row {} column {}", k / dim, k % dim),
            ));
        }
        data.push(v as f64);
    }
    EmbeddingSet::new(data, rows, dim)
}

fn parse_csv(path: &Path, text: &str) -> Result<EmbeddingSet> {
    let mut has_id = None;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut dim = 0;
    let mut rows = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let loc = || format!("line {}", n + 1);
        let mut fields = line.split(',').map(str::trim);
        let first = fields.next().unwrap_or_default();
        let with_id = *has_id.get_or_insert_with(|| first.parse::<f64>().is_err());
        let values: Vec<&str> = if with_id {
            ids.push(first.to_owned());
            fields.collect()
        } else {
            std::iter::once(first).chain(fields).collect()
        };
        if rows == 0 {
            dim = values.len();
            if dim == 0 {
                return Err(Error::format(path, loc(), "row has no values"));
            }
        } else if values.len() != dim {
            return Err(Error::format(
                path,
                loc(),
                format!("row has {} values, expected {dim}", values.len()),
            ));
        }
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::format(path, loc(), format!("cannot parse {v:?} as a number")))?;
            if !x.is_finite() {
                return Err(Error::format(path, loc(), format!("non-finite value at row {rows}")));
            }
            data.push(x);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::format(path, "line 1", "no rows"));
    }
    let set = EmbeddingSet::new(data, rows, dim)?;
    if has_id == Some(true) {
        set.with_ids(ids)
    } else {
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn binary_three_by_two() {
        let mut bytes = b"EMB1".to_vec();
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let set = parse_binary(Path::new("x"), &bytes).unwrap();
        assert_eq!((set.len(), set.dim()), (3, 2));
        assert_eq!(set.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn binary_rejects_nan_with_offset() {
        let mut bytes = b"EMB1".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        let err = parse_binary(Path::new("x"), &bytes).unwrap_err().to_string();
        assert!(err.contains("byte 16"), "{err}");
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn binary_rejects_truncated_body() {
        let mut bytes = b"EMB1".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(
            parse_binary(Path::new("x"), &bytes),
            Err(Error::Format { .. })
        ));
        assert!(parse_binary(Path::new("x"), b"EMB0\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn csv_with_id_column() {
        let set = parse_csv(Path::new("x.csv"), "id1,1.0,0.0\nid2,0.0,1.0").unwrap();
        assert_eq!((set.len(), set.dim()), (2, 2));
        assert_eq!(set.ids().unwrap(), &["id1".to_string(), "id2".to_string()]);
        assert_eq!(set.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn csv_without_ids_and_ragged_rows() {
        let set = parse_csv(Path::new("x.csv"), "1,2\n3,4\n").unwrap();
        assert!(set.ids().is_none());
        let err = parse_csv(Path::new("x.csv"), "1,2\n3\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn csv_nan_names_row() {
        let err = parse_csv(Path::new("x.csv"), "a,1,2\nb,NaN,0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn normalize_cases() {
        let set = EmbeddingSet::from_rows(&[[3.0, 4.0], [1.0, 0.0]]).unwrap();
        let n = set.normalize().unwrap();
        assert!(approx(n.row(0), &[0.6, 0.8], 1e-15));
        assert_eq!(n.row(1), &[1.0, 0.0]);
        let zero = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::ZeroNorm { row: 1 })));
    }

    #[test]
    fn rejects_metadata_length_mismatch() {
        let set = EmbeddingSet::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(set.clone().with_labels(vec![1]).is_err());
        assert!(set.with_ids(vec!["a".into(), "b".into()]).is_ok());
        assert!(EmbeddingSet::new(vec![], 0, 3).is_err());
    }

    #[test]
    fn media_pool_two_level_mean() {
        let set = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
            .unwrap()
            .with_media_ids(vec![7, 8, 8])
            .unwrap();
        let pooled = set.media_pool(&[vec![0, 1, 2]]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx(pooled.row(0), &[h, h], 1e-12));

        let single = set.media_pool(&[vec![1]]).unwrap();
        assert_eq!(single.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn media_pool_errors() {
        let set = EmbeddingSet::from_rows(&[[1.0, 0.0], [-1.0, 0.0]])
            .unwrap()
            .with_media_ids(vec![0, 1])
            .unwrap();
        assert!(matches!(set.media_pool(&[vec![0, 1]]), Err(Error::ZeroNorm { row: 0 })));
        assert!(set.media_pool(&[vec![]]).is_err());
        assert!(set.media_pool(&[vec![5]]).is_err());
        assert!(set.media_pool(&[vec![0], vec![0]]).is_err());
        let no_media = EmbeddingSet::from_rows(&[[1.0]]).unwrap();
        assert!(no_media.media_pool(&[vec![0]]).is_err());
    }

    #[test]
    fn file_roundtrip_with_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.emb");
        let set = EmbeddingSet::from_rows(&[[0.25, -1.5], [3.0, 0.125]])
            .unwrap()
            .with_ids(vec!["a".into(), "b".into()])
            .unwrap()
            .with_labels(vec![4, -2])
            .unwrap();
        set.write_binary(&path).unwrap();
        let back = EmbeddingSet::load(&path, FileFormat::Binary).unwrap();
        assert_eq!(back, set);

        let csv = dir.path().join("set.csv");
        set.write_csv(&csv).unwrap();
        let back = EmbeddingSet::load(&csv, FileFormat::Csv).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = EmbeddingSet::load("/nonexistent/x.emb", FileFormat::Binary).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn set_strategy() -> impl Strategy<Value = EmbeddingSet> {
            (1usize..6, 1usize..6).prop_flat_map(|(rows, dim)| {
                proptest::collection::vec(prop_oneof![-100.0f32..-0.01, 0.01f32..100.0], rows * dim)
                    .prop_map(move |v| EmbeddingSet::new(v.into_iter().map(f64::from).collect(), rows, dim).unwrap())
            })
        }

        proptest! {
            #[test]
            fn normalize_is_idempotent(set in set_strategy()) {
                let once = set.normalize().unwrap();
                prop_assert!(once.is_normalized(1e-6));
                prop_assert_eq!(once.normalize().unwrap(), once);
            }

            #[test]
            fn binary_roundtrip_is_bit_exact(set in set_strategy()) {
                let bytes = set.to_binary_bytes();
                let back = parse_binary(Path::new("p"), &bytes).unwrap();
                prop_assert_eq!(back.to_binary_bytes(), bytes);
                prop_assert_eq!(back, set);
            }

            #[test]
            fn pooling_identical_members_returns_member(set in set_strategy(), copies in 1usize..4) {
                let unit = set.normalize().unwrap();
                let row = unit.row(0).to_vec();
                let rows: Vec<Vec<f64>> = (0..copies).map(|_| row.clone()).collect();
                let media: Vec<i64> = (0..copies as i64).map(|m| m % 2).collect();
                let tpl = EmbeddingSet::from_rows(&rows).unwrap().with_media_ids(media).unwrap();
                let pooled = tpl.media_pool(&[(0..copies).collect()]).unwrap();
                prop_assert!(pooled.is_normalized(1e-12));
                prop_assert!(approx(pooled.row(0), &row, 1e-12));
            }
        }
    }
}
