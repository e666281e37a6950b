//! File formats.
//!
//! Tensors use a plain-text coordinate format:
//!
//! ```text
//! TNS3 <n1> <n2> <n3>
//! <i> <j> <k> <value>
//! ...
//! ```
//!
//! Indices are 0-based, unlisted entries are zero and lines starting with `#`
//! are comments. [`write_tns`] emits nonzero entries in `(k, j, i)`
//! lexicographic order with LF line endings, so the bytes depend only on the
//! tensor.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::GroundTruth;
use crate::tensor::{FactorMatrix, Matrix, Tensor3};

pub const TNS_MAGIC: &str = "TNS3";

/// A parsed tensor file.
#[derive(Debug, Clone, PartialEq)]
pub struct TnsFile {
    pub tensor: Tensor3,
    /// Number of coordinates that appeared more than once (last value wins).
    pub duplicates: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_tns(text: &str) -> Result<TnsFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing TNS3 header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != TNS_MAGIC {
        return Err(parse_err(hline, format!("expected `TNS3 <n1> <n2> <n3>`, got `{header}`")));
    }
    let mut dims = [0usize; 3];
    for (d, f) in dims.iter_mut().zip(&fields[1..]) {
        *d = f
            .parse()
            .map_err(|_| parse_err(hline, format!("dimension `{f}` is not a positive integer")))?;
        if *d == 0 {
            return Err(parse_err(hline, "dimensions must be positive"));
        }
    }

    let mut tensor = Tensor3::zeros(dims);
    let mut seen = vec![false; dims[0] * dims[1] * dims[2]];
    let mut duplicates = 0;
    for (lineno, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(lineno, format!("expected `<i> <j> <k> <value>`, got `{line}`")));
        }
        let mut idx = [0usize; 3];
        for a in 0..3 {
            idx[a] = f[a]
                .parse()
                .map_err(|_| parse_err(lineno, format!("index `{}` is not a non-negative integer", f[a])))?;
            if idx[a] >= dims[a] {
                return Err(parse_err(
                    lineno,
                    format!("index {} out of range for mode {} of size {}", idx[a], a + 1, dims[a]),
                ));
            }
        }
        let value: f64 = f[3]
            .parse()
            .map_err(|_| parse_err(lineno, format!("value `{}` is not numeric", f[3])))?;
        if !value.is_finite() {
            return Err(parse_err(lineno, format!("value `{}` is not finite", f[3])));
        }
        let o = tensor.offset(idx[0], idx[1], idx[2]);
        if seen[o] {
            duplicates += 1;
        }
        seen[o] = true;
        tensor.values_mut()[o] = value;
    }
    Ok(TnsFile { tensor, duplicates })
}

pub fn format_tns(t: &Tensor3) -> String {
    let [n1, n2, n3] = t.dims();
    let mut out = format!("{TNS_MAGIC} {n1} {n2} {n3}\n");
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let v = t.get(i, j, k);
                if v != 0.0 {
                    // Display for f64 is the shortest round-tripping decimal
                    writeln!(out, "{i} {j} {k} {v}").expect("writing to a String");
                }
            }
        }
    }
    out
}

pub fn read_tns(path: impl AsRef<Path>) -> Result<TnsFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tns(&text)
}

pub fn write_tns(t: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, format_tns(t).as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: &'static str,
    pub dims: [usize; 3],
    pub provenance: &'static str,
    pub path: Option<PathBuf>,
}

/// The three real multilayer networks this toolkit was built around. The raw
/// files are not distributed; point `path` at a local TNS3 copy.
pub fn dataset_descriptors() -> Vec<DatasetDescriptor> {
    vec![
        DatasetDescriptor {
            name: "malaria",
            dims: [212, 212, 9],
            provenance: "Human malaria parasite var gene network: 212 genes over 9 highly variable regions",
            path: None,
        },
        DatasetDescriptor {
            name: "food-trade",
            dims: [99, 99, 30],
            provenance: "Worldwide food trading network (FAO): 99 countries, 30 food products",
            path: None,
        },
        DatasetDescriptor {
            name: "un-commodity",
            dims: [48, 48, 97],
            provenance: "UN Comtrade 2019: top 48 exporting countries, 97 commodity categories",
            path: None,
        },
    ]
}

pub fn dataset_descriptor(name: &str) -> Result<DatasetDescriptor> {
    dataset_descriptors()
        .into_iter()
        .find(|d| d.name == name)
        .ok_or_else(|| {
            let known: Vec<&str> = dataset_descriptors().iter().map(|d| d.name).collect();
            Error::arg(format!("unknown dataset `{name}`, expected one of {known:?}"))
        })
}

pub fn validate_dataset(name: &str, t: &Tensor3) -> Result<()> {
    let d = dataset_descriptor(name)?;
    if d.dims != t.dims() {
        return Err(Error::Validation(format!(
            "dataset `{name}` expects dims {:?}, found {:?}",
            d.dims,
            t.dims()
        )));
    }
    Ok(())
}

/// Reads a tensor and, when `dataset` names a known dataset, checks its shape.
pub fn load_tensor(path: impl AsRef<Path>, dataset: Option<&str>) -> Result<TnsFile> {
    let file = read_tns(path)?;
    if let Some(name) = dataset {
        validate_dataset(name, &file.tensor)?;
    }
    Ok(file)
}

/// Entries `>= threshold` become 1, everything else 0.
pub fn binarize(t: &Tensor3, threshold: f64) -> Tensor3 {
    t.map(|v| if v >= threshold { 1.0 } else { 0.0 })
}

/// `<stem>.nodes.txt` / `<stem>.layers.txt` next to a tensor file.
pub fn sidecar_path(tensor_path: &Path, suffix: &str) -> PathBuf {
    let stem = tensor_path.with_extension("");
    let mut s = stem.into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn format_labels<T: ToString>(labels: &[T]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

/// One label per line; blank lines are skipped.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Integer labels from column `column` of a whitespace-separated label file.
pub fn read_integer_labels(path: impl AsRef<Path>, column: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line
            .split_whitespace()
            .nth(column)
            .ok_or_else(|| parse_err(i + 1, format!("no column {column}")))?;
        out.push(
            field
                .parse()
                .map_err(|_| parse_err(i + 1, format!("label `{field}` is not a non-negative integer")))?,
        );
    }
    Ok(out)
}

/// Embedding CSV: header `dim0,dim1,...`, one item per row.
pub fn format_embedding_csv(m: &Matrix) -> String {
    let mut out = (0..m.ncols())
        .map(|c| format!("dim{c}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_embedding_csv(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty embedding file"))?;
    let cols = header.split(',').count();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols {
            return Err(parse_err(i + 1, format!("expected {cols} columns, got {}", fields.len())));
        }
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("value `{f}` is not numeric")))?,
            );
        }
        rows += 1;
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

pub fn read_embedding_csv(path: impl AsRef<Path>) -> Result<FactorMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(FactorMatrix::new(parse_embedding_csv(&text)?))
}

/// Labels CSV: header `item,label`.
pub fn format_labels_csv(labels: &[i32]) -> String {
    let mut out = String::from("item,label\n");
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{i},{l}").expect("writing to a String");
    }
    out
}

pub fn parse_labels_csv(text: &str) -> Result<Vec<i32>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let label = line
            .split(',')
            .nth(1)
            .ok_or_else(|| parse_err(i + 1, "expected `item,label`"))?;
        out.push(
            label
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("label `{label}` is not an integer")))?,
        );
    }
    Ok(out)
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<i32>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels_csv(&text)
}

pub fn format_truth_json(truth: &GroundTruth) -> String {
    let mut s = serde_json::to_string_pretty(truth).expect("ground truth serializes");
    s.push('\n');
    s
}

pub fn read_truth_json(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))
}
