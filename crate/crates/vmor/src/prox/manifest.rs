//! JSON manifests that describe an instance through MatrixMarket files.
//! Paths inside a manifest are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lrr::{build_lrr_oriented, GraphOrientation, LrrInstance};
use super::qp::QpInstance;
use super::ProxError;
use crate::linops::mtx::{read_mtx, write_mtx_dense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpBlockFiles {
    pub q: String,
    pub c: String,
    pub a: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Manifest {
    Qp {
        blocks: Vec<QpBlockFiles>,
        b: String,
    },
    Lrr {
        x: String,
        lz: String,
        lg: String,
        lambda: f64,
        mu: f64,
        gamma: f64,
        #[serde(default)]
        orientation: GraphOrientation,
    },
}

pub enum ManifestInstance {
    Qp(QpInstance),
    Lrr(LrrInstance),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ProxError {
    ProxError::Manifest(format!("{}: {e}", path.display()))
}

fn load(dir: &Path, name: &str) -> Result<DMatrix<f64>, ProxError> {
    let p = dir.join(name);
    read_mtx(&p).map_err(|e| io_err(&p, e))
}

fn save(dir: &Path, name: &str, m: &DMatrix<f64>) -> Result<(), ProxError> {
    let p = dir.join(name);
    write_mtx_dense(&p, m).map_err(|e| io_err(&p, e))
}

fn column(m: DMatrix<f64>, what: &str) -> Result<DVector<f64>, ProxError> {
    if m.ncols() != 1 {
        return Err(ProxError::Manifest(format!("{what} must be a single column, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(DVector::from_column_slice(m.as_slice()))
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<(Self, PathBuf), ProxError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    /// Reads the referenced matrices and builds the instance.
    pub fn instantiate(&self, dir: &Path) -> Result<ManifestInstance, ProxError> {
        match self {
            Manifest::Qp { blocks, b } => {
                let (mut q, mut c, mut a) = (vec![], vec![], vec![]);
                for (i, blk) in blocks.iter().enumerate() {
                    q.push(load(dir, &blk.q)?);
                    c.push(column(load(dir, &blk.c)?, &format!("c of block {}", i + 1))?);
                    a.push(load(dir, &blk.a)?);
                }
                let b = column(load(dir, b)?, "b")?;
                Ok(ManifestInstance::Qp(QpInstance::from_parts(q, c, a, b)?))
            }
            Manifest::Lrr { x, lz, lg, lambda, mu, gamma, orientation } => {
                let inst = build_lrr_oriented(load(dir, x)?, load(dir, lz)?, load(dir, lg)?, *lambda, *mu, *gamma, *orientation)?;
                Ok(ManifestInstance::Lrr(inst))
            }
        }
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<ManifestInstance, ProxError> {
    let (m, dir) = Manifest::read(path)?;
    m.instantiate(&dir)
}

fn write_json(dir: &Path, m: &Manifest) -> Result<PathBuf, ProxError> {
    let p = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).map_err(|e| io_err(&p, e))?;
    fs::write(&p, text + "\n").map_err(|e| io_err(&p, e))?;
    Ok(p)
}

/// Writes `manifest.json` and one `.mtx` per matrix into `dir`.
pub fn write_qp_manifest(dir: impl AsRef<Path>, inst: &QpInstance) -> Result<PathBuf, ProxError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut blocks = Vec::new();
    for i in 0..inst.q.len() {
        let f = QpBlockFiles { q: format!("q{}.mtx", i + 1), c: format!("c{}.mtx", i + 1), a: format!("a{}.mtx", i + 1) };
        save(dir, &f.q, &inst.q[i])?;
        save(dir, &f.c, &DMatrix::from_column_slice(inst.c[i].len(), 1, inst.c[i].as_slice()))?;
        save(dir, &f.a, &inst.a[i])?;
        blocks.push(f);
    }
    save(dir, "b.mtx", &DMatrix::from_column_slice(inst.b.len(), 1, inst.b.as_slice()))?;
    write_json(dir, &Manifest::Qp { blocks, b: "b.mtx".into() })
}

pub fn write_lrr_manifest(dir: impl AsRef<Path>, inst: &LrrInstance) -> Result<PathBuf, ProxError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    save(dir, "x.mtx", &inst.x)?;
    save(dir, "lz.mtx", &inst.lz)?;
    save(dir, "lg.mtx", &inst.lg)?;
    let m = Manifest::Lrr {
        x: "x.mtx".into(),
        lz: "lz.mtx".into(),
        lg: "lg.mtx".into(),
        lambda: inst.lambda,
        mu: inst.mu,
        gamma: inst.gamma,
        orientation: inst.orientation,
    };
    write_json(dir, &m)
}
