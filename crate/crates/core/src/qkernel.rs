//! Kernel (Gram) matrices: linear, RBF and fidelity quantum kernels.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qsim::{kernel_overlap, FeatureMapKind, ShotConfig};

/// Floor used when repairing shot-mode Gram matrices.
pub const SHOT_PSD_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    /// `exp(-γ ||x - x'||²)`; `None` means `1 / dimension`.
    Rbf {
        #[serde(default)]
        gamma: Option<f64>,
    },
    Quantum {
        map: FeatureMapKind,
        #[serde(default = "exact")]
        shots: ShotConfig,
    },
}

fn exact() -> ShotConfig {
    ShotConfig::EXACT
}

impl KernelKind {
    pub fn is_quantum(&self) -> bool {
        matches!(self, KernelKind::Quantum { .. })
    }

    pub fn is_shot_based(&self) -> bool {
        matches!(self, KernelKind::Quantum { shots, .. } if !shots.is_exact())
    }
}

/// Row-major real matrix with the sample indices it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
}

impl KernelMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Ok(KernelMatrix {
            rows,
            cols,
            values,
            row_ids: (0..rows).collect(),
            col_ids: (0..cols).collect(),
        })
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let values = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        KernelMatrix::new(m.nrows(), m.ncols(), values).expect("shape from matrix")
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows.min(self.cols) {
            for j in i + 1..self.rows.min(self.cols) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Sub-matrix of the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> KernelMatrix {
        let values = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j)))
            .collect();
        KernelMatrix {
            rows: rows.len(),
            cols: cols.len(),
            values,
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
            col_ids: cols.iter().map(|&j| self.col_ids[j]).collect(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one kernel evaluation, independent of evaluation order.
pub fn pair_seed(seed: u64, domain: u64, i: usize, j: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed ^ domain) ^ i as u64) ^ j as u64)
}

const GRAM_DOMAIN: u64 = 0x6772_616d;
const CROSS_DOMAIN: u64 = 0x6372_6f73;

/// A kernel function with an evaluation counter.
#[derive(Debug)]
pub struct Kernel {
    kind: KernelKind,
    evaluations: AtomicU64,
}

impl Kernel {
    pub fn new(kind: KernelKind) -> Result<Self> {
        if let KernelKind::Rbf { gamma: Some(g) } = kind {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config(format!("rbf gamma must be positive, got {g}")));
            }
        }
        Ok(Kernel {
            kind,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    /// `κ(x, y)`; shot-based kernels sample with `seed`.
    pub fn evaluate(&self, x: &[f64], y: &[f64], seed: u64) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                actual: y.len(),
            });
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        Ok(match self.kind {
            KernelKind::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelKind::Rbf { gamma } => {
                let g = gamma.unwrap_or(1.0 / x.len().max(1) as f64);
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-g * d2).exp()
            }
            KernelKind::Quantum { map, shots } => kernel_overlap(x, y, map, shots.with_seed(seed))?,
        })
    }

    /// Symmetric train matrix. Only the upper triangle is evaluated; the
    /// quantum diagonal is 1 by unitarity and not evaluated at all.
    pub fn gram<V: AsRef<[f64]> + Sync>(&self, train: &[V]) -> Result<KernelMatrix> {
        check_dims(train.iter().map(AsRef::as_ref), None)?;
        let m = train.len();
        let seed = self.base_seed();
        let skip_diag = self.kind.is_quantum();
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (if skip_diag { i + 1 } else { i }..m).map(move |j| (i, j)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| self.evaluate(train[i].as_ref(), train[j].as_ref(), pair_seed(seed, GRAM_DOMAIN, i, j)))
            .collect::<Result<Vec<f64>>>()?;
        let mut out = vec![0.0; m * m];
        if skip_diag {
            for i in 0..m {
                out[i * m + i] = 1.0;
            }
        }
        for (&(i, j), v) in pairs.iter().zip(values) {
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
        KernelMatrix::new(m, m, out)
    }

    /// `p × m` matrix `κ(test_i, train_j)`.
    pub fn cross<V: AsRef<[f64]> + Sync, W: AsRef<[f64]> + Sync>(
        &self,
        test: &[V],
        train: &[W],
    ) -> Result<KernelMatrix> {
        let dim = check_dims(train.iter().map(AsRef::as_ref), None)?;
        check_dims(test.iter().map(AsRef::as_ref), dim)?;
        let (p, m) = (test.len(), train.len());
        let seed = self.base_seed();
        let values = (0..p * m)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / m, k % m);
                self.evaluate(test[i].as_ref(), train[j].as_ref(), pair_seed(seed, CROSS_DOMAIN, i, j))
            })
            .collect::<Result<Vec<f64>>>()?;
        KernelMatrix::new(p, m, values)
    }

    fn base_seed(&self) -> u64 {
        match self.kind {
            KernelKind::Quantum { shots, .. } => shots.seed,
            _ => 0,
        }
    }
}

fn check_dims<'a>(rows: impl Iterator<Item = &'a [f64]>, expected: Option<usize>) -> Result<Option<usize>> {
    let mut dim = expected;
    for r in rows {
        match dim {
            None => dim = Some(r.len()),
            Some(d) if d != r.len() => {
                return Err(Error::Dimension {
                    expected: d,
                    actual: r.len(),
                })
            }
            Some(_) => {}
        }
    }
    Ok(dim)
}

/// Smallest eigenvalue of the symmetrised matrix.
pub fn min_eigenvalue(k: &KernelMatrix) -> Result<f64> {
    let sym = symmetrized(k)?;
    if sym.nrows() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

fn symmetrized(k: &KernelMatrix) -> Result<DMatrix<f64>> {
    if !k.is_square() {
        return Err(Error::Dimension {
            expected: k.rows(),
            actual: k.cols(),
        });
    }
    let m = k.to_dmatrix();
    Ok((&m + m.transpose()) * 0.5)
}

/// Symmetrises and shifts the spectrum so the smallest eigenvalue is at
/// least `floor`: adds `max(0, floor - λ_min) I`.
pub fn psd_repair(k: &KernelMatrix, floor: f64) -> Result<KernelMatrix> {
    let mut sym = symmetrized(k)?;
    if sym.nrows() == 0 {
        return Ok(k.clone());
    }
    let lambda_min = SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let shift = (floor - lambda_min).max(0.0);
    for i in 0..sym.nrows() {
        sym[(i, i)] += shift;
    }
    let mut out = KernelMatrix::from_dmatrix(&sym);
    out.row_ids = k.row_ids.clone();
    out.col_ids = k.col_ids.clone();
    Ok(out)
}

/// Hex SHA-256 over length-prefixed parts.
pub fn fingerprint<I, P>(parts: I) -> String
where
    I: IntoIterator<Item = P>,
    P: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    for p in parts {
        let p = p.as_ref();
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Fingerprint of a feature table, exact to the bit.
pub fn data_fingerprint<V: AsRef<[f64]>>(rows: &[V]) -> String {
    fingerprint(rows.iter().map(|r| {
        r.as_ref()
            .iter()
            .flat_map(|v| v.to_bits().to_le_bytes())
            .collect::<Vec<u8>>()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheFormat {
    Binary,
    Csv,
}

const MAGIC: &[u8; 8] = b"QPPMGRM1";

/// On-disk Gram matrices keyed by a fingerprint of everything that
/// determines them (data, encoder, kernel, seed).
#[derive(Clone, Debug)]
pub struct GramCache {
    dir: PathBuf,
    format: CacheFormat,
}

impl GramCache {
    pub fn new(dir: impl Into<PathBuf>, format: CacheFormat) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(GramCache { dir, format })
    }

    pub fn path(&self, key: &str) -> PathBuf {
        let ext = match self.format {
            CacheFormat::Binary => "bin",
            CacheFormat::Csv => "csv",
        };
        self.dir.join(format!("{key}.{ext}"))
    }

    pub fn load(&self, key: &str) -> Result<Option<KernelMatrix>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path)?;
        let m = match self.format {
            CacheFormat::Binary => decode_binary(&bytes, &path)?,
            CacheFormat::Csv => decode_csv(&bytes)?,
        };
        Ok(Some(m))
    }

    pub fn store(&self, key: &str, m: &KernelMatrix) -> Result<()> {
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            match self.format {
                CacheFormat::Binary => {
                    w.write_all(MAGIC)?;
                    w.write_all(&(m.rows as u64).to_le_bytes())?;
                    w.write_all(&(m.cols as u64).to_le_bytes())?;
                    for v in &m.values {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
                CacheFormat::Csv => {
                    for i in 0..m.rows {
                        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
                        writeln!(w, "{}", line.join(","))?;
                    }
                }
            }
            w.flush()?;
        }
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn get_or_compute<F>(&self, key: &str, compute: F) -> Result<(KernelMatrix, bool)>
    where
        F: FnOnce() -> Result<KernelMatrix>,
    {
        if let Some(m) = self.load(key)? {
            return Ok((m, true));
        }
        let m = compute()?;
        self.store(key, &m)?;
        Ok((m, false))
    }
}

fn decode_binary(bytes: &[u8], path: &Path) -> Result<KernelMatrix> {
    let corrupt = || Error::record(path.display().to_string(), "corrupt Gram cache entry");
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(corrupt());
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes")) as usize;
    let (rows, cols) = (word(8), word(16));
    if bytes.len() != 24 + rows * cols * 8 {
        return Err(corrupt());
    }
    let values = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    KernelMatrix::new(rows, cols, values)
}

fn decode_csv(bytes: &[u8]) -> Result<KernelMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut values = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for rec in reader.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::record(format!("row {}", rows + 1), "ragged Gram cache row"));
        }
        for field in rec.iter() {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::record(format!("row {}", rows + 1), e.to_string()))?,
            );
        }
        rows += 1;
    }
    KernelMatrix::new(rows, cols.unwrap_or(0), values)
}
