//! On-disk problem bundles: a JSON manifest next to five Matrix Market
//! files, one per coefficient matrix. Numeric entries are written with 17
//! significant digits so a save/load cycle reproduces every matrix
//! bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nepv_core::linalg::DenseMatrix;
use nepv_core::problem::{NepvProblem, ProblemError};
use nepv_core::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("manifest is not valid JSON: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported manifest schema version {found} (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFiles {
    pub a: String,
    pub b: String,
    pub c: String,
    pub p: String,
    pub q: String,
}

impl Default for MatrixFiles {
    fn default() -> Self {
        MatrixFiles {
            a: "a.mtx".into(),
            b: "b.mtx".into(),
            c: "c.mtx".into(),
            p: "p.mtx".into(),
            q: "q.mtx".into(),
        }
    }
}

/// Problem metadata persisted as `manifest.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// Generator id, e.g. `example2`.
    pub generator: String,
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Generator parameters by name, e.g. `L` or `r`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub files: MatrixFiles,
}

/// A problem instance together with the metadata needed to lay it down on
/// disk and pick it back up.
#[derive(Clone, Debug)]
pub struct ProblemBundle {
    pub manifest: Manifest,
    pub problem: NepvProblem,
}

impl ProblemBundle {
    pub fn new(
        generator: &str,
        seed: Option<u64>,
        params: &[(&str, f64)],
        problem: NepvProblem,
    ) -> Self {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            generator: generator.to_string(),
            order: problem.order(),
            seed,
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            files: MatrixFiles::default(),
        };
        ProblemBundle { manifest, problem }
    }

    pub fn save(&self, dir: &Path) -> Result<(), BundleError> {
        fs::create_dir_all(dir)?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest)?;
        manifest.push('\n');
        fs::write(dir.join(MANIFEST_FILE), manifest)?;
        let f = &self.manifest.files;
        let p = &self.problem;
        write_matrix_market(&dir.join(&f.a), p.a.as_dense(), true)?;
        write_matrix_market(&dir.join(&f.b), p.b.as_dense(), true)?;
        write_matrix_market(&dir.join(&f.c), p.c.as_dense(), true)?;
        write_matrix_market(&dir.join(&f.p), p.p.as_dense(), true)?;
        write_matrix_market(&dir.join(&f.q), p.q.as_dense(), true)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, BundleError> {
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(BundleError::Schema {
                found: manifest.schema_version,
            });
        }
        let f = &manifest.files;
        let a = read_matrix_market(&dir.join(&f.a))?;
        let b = read_matrix_market(&dir.join(&f.b))?;
        let c = read_matrix_market(&dir.join(&f.c))?;
        let p = read_matrix_market(&dir.join(&f.p))?;
        let q = read_matrix_market(&dir.join(&f.q))?;
        let problem = NepvProblem::new(a, b, c, p, q)?;
        Ok(ProblemBundle { manifest, problem })
    }

    /// Paths of every file the bundle owns, for byte-level comparisons.
    pub fn file_paths(&self, dir: &Path) -> Vec<PathBuf> {
        let f = &self.manifest.files;
        [MANIFEST_FILE, &f.a, &f.b, &f.c, &f.p, &f.q]
            .iter()
            .map(|name| dir.join(name))
            .collect()
    }
}

/// Writes `m` in Matrix Market coordinate complex format. With `hermitian`
/// set, only the lower triangle is stored under the `hermitian` symmetry
/// flag; otherwise the full matrix goes out as `general`. Zero entries are
/// skipped regardless of sign; the Hermitian wrapper canonicalizes signed
/// zeros on both save and reload, so round trips stay bit-exact.
pub fn write_matrix_market(path: &Path, m: &DenseMatrix, hermitian: bool) -> io::Result<()> {
    let symmetry = if hermitian { "hermitian" } else { "general" };
    let zero = Complex64::new(0.0, 0.0);
    let mut entries = Vec::new();
    for j in 0..m.cols() {
        let i0 = if hermitian { j } else { 0 };
        for i in i0..m.rows() {
            let z = m[(i, j)];
            if z == zero {
                continue;
            }
            entries.push((i, j, z));
        }
    }
    let mut text = format!("%%MatrixMarket matrix coordinate complex {symmetry}\n");
    text.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), entries.len()));
    for (i, j, z) in entries {
        text.push_str(&format!("{} {} {:.16e} {:.16e}\n", i + 1, j + 1, z.re, z.im));
    }
    fs::write(path, text)
}

pub fn read_matrix_market(path: &Path) -> Result<DenseMatrix, BundleError> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let fail = |line: usize, message: &str| BundleError::Format {
        file: file.clone(),
        line,
        message: message.to_string(),
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5
        || fields[0] != "%%MatrixMarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
        || fields[3] != "complex"
    {
        return Err(fail(1, "expected a coordinate complex MatrixMarket header"));
    }
    let hermitian = match fields[4] {
        "hermitian" => true,
        "general" => false,
        other => return Err(fail(1, &format!("unsupported symmetry `{other}`"))),
    };

    let mut matrix: Option<DenseMatrix> = None;
    let mut remaining = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.starts_with('%') || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let Some(matrix) = matrix.as_mut() else {
            if parts.len() != 3 {
                return Err(fail(lineno, "expected `rows cols nnz`"));
            }
            let rows: usize = parts[0].parse().map_err(|_| fail(lineno, "bad row count"))?;
            let cols: usize = parts[1].parse().map_err(|_| fail(lineno, "bad column count"))?;
            remaining = parts[2].parse().map_err(|_| fail(lineno, "bad entry count"))?;
            if rows == 0 || cols == 0 {
                return Err(fail(lineno, "matrix dimensions must be positive"));
            }
            matrix = Some(DenseMatrix::zeros(rows, cols));
            continue;
        };
        let (rows, cols) = (matrix.rows(), matrix.cols());
        if parts.len() != 4 {
            return Err(fail(lineno, "expected `i j re im`"));
        }
        if remaining == 0 {
            return Err(fail(lineno, "more entries than declared"));
        }
        let i: usize = parts[0].parse().map_err(|_| fail(lineno, "bad row index"))?;
        let j: usize = parts[1].parse().map_err(|_| fail(lineno, "bad column index"))?;
        let re: f64 = parts[2].parse().map_err(|_| fail(lineno, "bad real part"))?;
        let im: f64 = parts[3].parse().map_err(|_| fail(lineno, "bad imaginary part"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(fail(lineno, "index out of range"));
        }
        if hermitian && i < j {
            return Err(fail(lineno, "upper-triangle entry in a hermitian file"));
        }
        let z = Complex64::new(re, im);
        matrix[(i - 1, j - 1)] = z;
        if hermitian && i != j {
            matrix[(j - 1, i - 1)] = z.conj();
        }
        remaining -= 1;
    }
    let matrix = matrix.ok_or_else(|| fail(1, "missing size line"))?;
    if remaining != 0 {
        return Err(fail(0, "fewer entries than declared"));
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_example1, gen_example2};

    fn bits(m: &DenseMatrix) -> Vec<(u64, u64)> {
        m.data()
            .iter()
            .map(|z| (z.re.to_bits(), z.im.to_bits()))
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact_and_files_are_stable() {
        let dir = tempfile::tempdir().expect("tempdir");
        let bundle = ProblemBundle::new(
            "example1",
            Some(11),
            &[("n", 7.0)],
            gen_example1(7, 11),
        );
        bundle.save(dir.path()).expect("save");
        let reloaded = ProblemBundle::load(dir.path()).expect("load");

        for (orig, back) in [
            (&bundle.problem.a, &reloaded.problem.a),
            (&bundle.problem.b, &reloaded.problem.b),
            (&bundle.problem.c, &reloaded.problem.c),
            (&bundle.problem.p, &reloaded.problem.p),
            (&bundle.problem.q, &reloaded.problem.q),
        ] {
            assert_eq!(bits(orig.as_dense()), bits(back.as_dense()));
        }
        assert_eq!(reloaded.manifest.generator, "example1");
        assert_eq!(reloaded.manifest.seed, Some(11));

        // Saving the reloaded bundle reproduces every file byte for byte.
        let second = tempfile::tempdir().expect("tempdir");
        reloaded.save(second.path()).expect("save again");
        for (left, right) in bundle
            .file_paths(dir.path())
            .iter()
            .zip(reloaded.file_paths(second.path()).iter())
        {
            assert_eq!(
                fs::read(left).expect("read"),
                fs::read(right).expect("read"),
                "{} differs",
                left.display()
            );
        }
    }

    #[test]
    fn banded_instance_stays_sparse_on_disk() {
        let dir = tempfile::tempdir().expect("tempdir");
        let bundle = ProblemBundle::new("example2", None, &[("L", 2.0), ("n", 64.0)], {
            gen_example2(2.0, 64)
        });
        bundle.save(dir.path()).expect("save");
        let b_text = fs::read_to_string(dir.path().join("b.mtx")).expect("read");
        // Identity: header, size line, 64 diagonal entries.
        assert_eq!(b_text.lines().count(), 66);
        let reloaded = ProblemBundle::load(dir.path()).expect("load");
        assert_eq!(bits(bundle.problem.p.as_dense()), bits(reloaded.problem.p.as_dense()));
    }

    #[test]
    fn malformed_files_are_reported_with_position() {
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("bad.mtx");
        fs::write(&path, "%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n1 2 0.0 0.0\n")
            .expect("write");
        let err = read_matrix_market(&path).expect_err("upper triangle entry must fail");
        assert!(err.to_string().contains("hermitian"));

        fs::write(&path, "%%MatrixMarket matrix array real general\n").expect("write");
        assert!(read_matrix_market(&path).is_err());
    }
}
