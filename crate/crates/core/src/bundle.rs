//! Bundle directory format.
//!
//! A bundle is a directory holding `manifest.json`, four raw array files
//! (row-major little-endian `f64`) and two JSONL text files:
//!
//! ```text
//! manifest.json          {"format_version":1,"d":..,"d_prime":..,"m":..,"n":..,
//!                         "dtype":"f64","files":{..},"source":".."}
//! w_kq.f64               d x d   merged key-query projection
//! w_v.f64                d' x d  value projection
//! demo_embeddings.f64    m x d
//! test_embeddings.f64    n x d
//! demos.jsonl            {"id","problem","solution"} per line
//! tests.jsonl            {"id","problem"} per line
//! ```
//!
//! Demonstration embeddings cover problem and solution text; test embeddings
//! cover the problem only. Loading validates every invariant and reports the
//! offending file and index.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("dimension mismatch in {file}: expected {expected} bytes ({detail}), found {actual}")]
    DimensionMismatch {
        file: PathBuf,
        expected: usize,
        actual: usize,
        detail: String,
    },
    #[error("non-finite value in {file} at {location}")]
    NonFinite { file: PathBuf, location: String },
    #[error("duplicate id {id:?} in {file} at line {line}")]
    DuplicateId { file: PathBuf, id: String, line: usize },
    #[error("{file} has {actual} records, manifest declares {expected}")]
    CountMismatch {
        file: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("malformed record in {file} at line {line}: {message}")]
    Record {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid bundle contents: {0}")]
    Invalid(String),
}

/// Attention projections of one model layer.
///
/// `w_kq` is the merged key-query matrix (`W_K^T W_Q`), `w_v` the value
/// projection. The query projection is never stored separately.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBundle {
    pub d: usize,
    pub d_prime: usize,
    pub w_kq: DMatrix<f64>,
    pub w_v: DMatrix<f64>,
    pub source: String,
    pub format_version: u32,
}

impl ProjectionBundle {
    pub fn new(
        w_kq: DMatrix<f64>,
        w_v: DMatrix<f64>,
        source: impl Into<String>,
    ) -> Result<Self, BundleError> {
        let bundle = Self {
            d: w_kq.nrows(),
            d_prime: w_v.nrows(),
            w_kq,
            w_v,
            source: source.into(),
            format_version: FORMAT_VERSION,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        if self.d == 0 || self.d_prime == 0 {
            return Err(BundleError::Invalid(format!(
                "dimensions must be positive (d={}, d_prime={})",
                self.d, self.d_prime
            )));
        }
        if self.w_kq.shape() != (self.d, self.d) {
            return Err(BundleError::Invalid(format!(
                "w_kq is {:?}, expected ({}, {})",
                self.w_kq.shape(),
                self.d,
                self.d
            )));
        }
        if self.w_v.shape() != (self.d_prime, self.d) {
            return Err(BundleError::Invalid(format!(
                "w_v is {:?}, expected ({}, {})",
                self.w_v.shape(),
                self.d_prime,
                self.d
            )));
        }
        check_matrix_finite(&self.w_kq, Path::new("w_kq"))?;
        check_matrix_finite(&self.w_v, Path::new("w_v"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub id: String,
    pub problem: String,
    pub solution: String,
    pub embedding: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationPool {
    pub d: usize,
    pub items: Vec<Demonstration>,
}

impl DemonstrationPool {
    pub fn new(d: usize, items: Vec<Demonstration>) -> Result<Self, BundleError> {
        let pool = Self { d, items };
        pool.validate()?;
        Ok(pool)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        let mut seen = HashSet::new();
        for (i, item) in self.items.iter().enumerate() {
            if !seen.insert(item.id.as_str()) {
                return Err(BundleError::DuplicateId {
                    file: PathBuf::from("demos"),
                    id: item.id.clone(),
                    line: i + 1,
                });
            }
            check_embedding(&item.embedding, self.d, Path::new("demo_embeddings"), i, &item.id)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestItem {
    pub id: String,
    pub problem: String,
    pub embedding: DVector<f64>,
}

/// Everything a bundle directory holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub projection: ProjectionBundle,
    pub pool: DemonstrationPool,
    pub tests: Vec<TestItem>,
}

impl Bundle {
    pub fn new(
        projection: ProjectionBundle,
        pool: DemonstrationPool,
        tests: Vec<TestItem>,
    ) -> Result<Self, BundleError> {
        let bundle = Self {
            projection,
            pool,
            tests,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        self.projection.validate()?;
        if self.pool.d != self.projection.d {
            return Err(BundleError::Invalid(format!(
                "pool dimension {} does not match projection dimension {}",
                self.pool.d, self.projection.d
            )));
        }
        self.pool.validate()?;
        let mut seen = HashSet::new();
        for (i, t) in self.tests.iter().enumerate() {
            if !seen.insert(t.id.as_str()) {
                return Err(BundleError::DuplicateId {
                    file: PathBuf::from("tests"),
                    id: t.id.clone(),
                    line: i + 1,
                });
            }
            check_embedding(&t.embedding, self.projection.d, Path::new("test_embeddings"), i, &t.id)?;
        }
        Ok(())
    }

    pub fn test(&self, id: &str) -> Option<&TestItem> {
        self.tests.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestFiles {
    pub w_kq: String,
    pub w_v: String,
    pub demo_embeddings: String,
    pub test_embeddings: String,
    pub demos: String,
    pub tests: String,
}

impl Default for ManifestFiles {
    fn default() -> Self {
        Self {
            w_kq: "w_kq.f64".into(),
            w_v: "w_v.f64".into(),
            demo_embeddings: "demo_embeddings.f64".into(),
            test_embeddings: "test_embeddings.f64".into(),
            demos: "demos.jsonl".into(),
            tests: "tests.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub d: usize,
    pub d_prime: usize,
    pub m: usize,
    pub n: usize,
    pub dtype: String,
    pub files: ManifestFiles,
    pub source: String,
}

#[derive(Serialize, Deserialize)]
struct DemoRecord {
    id: String,
    problem: String,
    solution: String,
}

#[derive(Serialize, Deserialize)]
struct TestRecord {
    id: String,
    problem: String,
}

/// Write `bundle` into directory `path`, creating it if needed.
pub fn write_bundle(bundle: &Bundle, path: &Path) -> Result<(), BundleError> {
    bundle.validate()?;
    fs::create_dir_all(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let proj = &bundle.projection;
    let files = ManifestFiles::default();
    let manifest = Manifest {
        format_version: proj.format_version,
        d: proj.d,
        d_prime: proj.d_prime,
        m: bundle.pool.len(),
        n: bundle.tests.len(),
        dtype: "f64".into(),
        files: files.clone(),
        source: proj.source.clone(),
    };

    write_f64(&path.join(&files.w_kq), row_major(&proj.w_kq))?;
    write_f64(&path.join(&files.w_v), row_major(&proj.w_v))?;
    write_f64(
        &path.join(&files.demo_embeddings),
        bundle.pool.items.iter().flat_map(|it| it.embedding.iter().copied()),
    )?;
    write_f64(
        &path.join(&files.test_embeddings),
        bundle.tests.iter().flat_map(|t| t.embedding.iter().copied()),
    )?;

    let demos: Vec<String> = bundle
        .pool
        .items
        .iter()
        .map(|it| {
            serde_json::to_string(&DemoRecord {
                id: it.id.clone(),
                problem: it.problem.clone(),
                solution: it.solution.clone(),
            })
            .expect("demo record serializes")
        })
        .collect();
    write_lines(&path.join(&files.demos), &demos)?;
    let tests: Vec<String> = bundle
        .tests
        .iter()
        .map(|t| {
            serde_json::to_string(&TestRecord {
                id: t.id.clone(),
                problem: t.problem.clone(),
            })
            .expect("test record serializes")
        })
        .collect();
    write_lines(&path.join(&files.tests), &tests)?;

    let manifest_path = path.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|source| BundleError::Io {
        path: manifest_path,
        source,
    })
}

/// Load and fully validate the bundle in directory `path`.
pub fn load_bundle(path: &Path) -> Result<Bundle, BundleError> {
    let manifest_path = path.join(MANIFEST_FILE);
    let text = read_string(&manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| BundleError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(BundleError::Manifest {
            path: manifest_path,
            message: format!("unsupported format_version {}", manifest.format_version),
        });
    }
    if manifest.dtype != "f64" {
        return Err(BundleError::Manifest {
            path: manifest_path,
            message: format!("unsupported dtype {:?}", manifest.dtype),
        });
    }
    if manifest.d == 0 || manifest.d_prime == 0 {
        return Err(BundleError::Manifest {
            path: manifest_path,
            message: format!("dimensions must be positive (d={}, d_prime={})", manifest.d, manifest.d_prime),
        });
    }
    let (d, dp, m, n) = (manifest.d, manifest.d_prime, manifest.m, manifest.n);
    let files = &manifest.files;

    let w_kq_path = path.join(&files.w_kq);
    let w_kq = read_f64(&w_kq_path, d, d, "d x d")?;
    let w_v_path = path.join(&files.w_v);
    let w_v = read_f64(&w_v_path, dp, d, "d_prime x d")?;
    for (p, mat) in [(&w_kq_path, &w_kq), (&w_v_path, &w_v)] {
        check_matrix_finite(mat, p)?;
    }

    let demo_emb_path = path.join(&files.demo_embeddings);
    let demo_emb = read_f64(&demo_emb_path, m, d, "m x d")?;
    let test_emb_path = path.join(&files.test_embeddings);
    let test_emb = read_f64(&test_emb_path, n, d, "n x d")?;

    let demos_path = path.join(&files.demos);
    let demo_records: Vec<DemoRecord> = read_jsonl(&demos_path)?;
    if demo_records.len() != m {
        return Err(BundleError::CountMismatch {
            file: demos_path,
            expected: m,
            actual: demo_records.len(),
        });
    }
    let tests_path = path.join(&files.tests);
    let test_records: Vec<TestRecord> = read_jsonl(&tests_path)?;
    if test_records.len() != n {
        return Err(BundleError::CountMismatch {
            file: tests_path,
            expected: n,
            actual: test_records.len(),
        });
    }

    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(m);
    for (i, rec) in demo_records.into_iter().enumerate() {
        if !seen.insert(rec.id.clone()) {
            return Err(BundleError::DuplicateId {
                file: demos_path,
                id: rec.id,
                line: i + 1,
            });
        }
        let embedding = demo_emb.row(i).transpose();
        check_embedding(&embedding, d, &demo_emb_path, i, &rec.id)?;
        items.push(Demonstration {
            id: rec.id,
            problem: rec.problem,
            solution: rec.solution,
            embedding,
        });
    }

    let mut seen = HashSet::new();
    let mut tests = Vec::with_capacity(n);
    for (i, rec) in test_records.into_iter().enumerate() {
        if !seen.insert(rec.id.clone()) {
            return Err(BundleError::DuplicateId {
                file: tests_path,
                id: rec.id,
                line: i + 1,
            });
        }
        let embedding = test_emb.row(i).transpose();
        check_embedding(&embedding, d, &test_emb_path, i, &rec.id)?;
        tests.push(TestItem {
            id: rec.id,
            problem: rec.problem,
            embedding,
        });
    }

    Ok(Bundle {
        projection: ProjectionBundle {
            d,
            d_prime: dp,
            w_kq,
            w_v,
            source: manifest.source,
            format_version: manifest.format_version,
        },
        pool: DemonstrationPool { d, items },
        tests,
    })
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
}

fn check_matrix_finite(m: &DMatrix<f64>, file: &Path) -> Result<(), BundleError> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !m[(r, c)].is_finite() {
                return Err(BundleError::NonFinite {
                    file: file.to_path_buf(),
                    location: format!("row {r}, column {c} (flat index {})", r * m.ncols() + c),
                });
            }
        }
    }
    Ok(())
}

fn check_embedding(
    v: &DVector<f64>,
    d: usize,
    file: &Path,
    index: usize,
    id: &str,
) -> Result<(), BundleError> {
    if v.len() != d {
        return Err(BundleError::Invalid(format!(
            "embedding of {id:?} (index {index}) has length {}, expected {d}",
            v.len()
        )));
    }
    if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
        return Err(BundleError::NonFinite {
            file: file.to_path_buf(),
            location: format!("item {index} (id {id:?}), position {pos}"),
        });
    }
    Ok(())
}

fn read_string(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| io_or_missing(path, source))
}

fn io_or_missing(path: &Path, source: std::io::Error) -> BundleError {
    if source.kind() == std::io::ErrorKind::NotFound {
        BundleError::MissingFile(path.to_path_buf())
    } else {
        BundleError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn read_f64(path: &Path, rows: usize, cols: usize, shape: &str) -> Result<DMatrix<f64>, BundleError> {
    let bytes = fs::read(path).map_err(|source| io_or_missing(path, source))?;
    let expected = rows * cols * 8;
    if bytes.len() != expected {
        return Err(BundleError::DimensionMismatch {
            file: path.to_path_buf(),
            expected,
            actual: bytes.len(),
            detail: format!("{shape} = {rows} x {cols} f64"),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn write_f64(path: &Path, values: impl Iterator<Item = f64>) -> Result<(), BundleError> {
    let file = fs::File::create(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let io = |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    };
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), BundleError> {
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BundleError> {
    let text = read_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| BundleError::Record {
            file: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
