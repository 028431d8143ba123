use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::reduction::{Method, ReducedSystem};
use crate::sparse::{SymBuilder, SymSparse};
use crate::LinearSystem;

use super::{MnaSystem, NetlistError};

/// Writes `dim nnz` followed by one `i j value` line per stored entry
/// (both triangles, 0-based).
pub fn write_triplets<W: Write>(m: &SymSparse, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {}", m.dim(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{i} {j} {v}")?;
    }
    Ok(())
}

pub fn save_triplets(path: &Path, m: &SymSparse) -> Result<(), NetlistError> {
    let mut buf = Vec::new();
    write_triplets(m, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Raw contents of a coordinate file.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Reads a coordinate file. The header is `dim nnz` (square) or
/// `rows cols nnz`; lines starting with `%` or `#` are comments.
pub fn read_triplets<R: BufRead>(r: R, label: &str) -> Result<TripletFile, NetlistError> {
    let fmt = |line: usize, reason: String| NetlistError::Format {
        path: label.to_string(),
        line,
        reason,
    };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(Path::new(label), e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let Some((rows, cols, _)) = header else {
            let nums: Option<Vec<usize>> = toks.iter().map(|s| s.parse().ok()).collect();
            header = match nums.as_deref() {
                Some(&[dim, nnz]) => Some((dim, dim, nnz)),
                Some(&[rows, cols, nnz]) => Some((rows, cols, nnz)),
                _ => return Err(fmt(line_no, format!("bad header {t:?}"))),
            };
            continue;
        };
        let [i, j, v] = toks[..] else {
            return Err(fmt(line_no, "expected `i j value`".into()));
        };
        let (i, j, v) = match (i.parse::<usize>(), j.parse::<usize>(), v.parse::<f64>()) {
            (Ok(i), Ok(j), Ok(v)) => (i, j, v),
            _ => return Err(fmt(line_no, format!("cannot parse {t:?}"))),
        };
        if i >= rows || j >= cols {
            return Err(fmt(line_no, format!("({i}, {j}) outside {rows}×{cols}")));
        }
        if !v.is_finite() {
            return Err(fmt(line_no, "non-finite value".into()));
        }
        entries.push((i, j, v));
    }
    let (rows, cols, nnz) = header.ok_or_else(|| fmt(0, "missing header".into()))?;
    if entries.len() != nnz {
        return Err(fmt(
            0,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(TripletFile {
        rows,
        cols,
        entries,
    })
}

fn read_triplet_path(path: &Path) -> Result<TripletFile, NetlistError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    read_triplets(BufReader::new(f), &path.display().to_string())
}

fn io_err(path: &Path, source: io::Error) -> NetlistError {
    NetlistError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Builds a symmetric matrix from coordinate entries. Duplicate coordinates
/// are summed; mirrored pairs are averaged, with a warning when they differ
/// by more than `1e-12` relative.
fn symmetric_from_triplets(
    tf: &TripletFile,
    label: &str,
    warnings: &mut Vec<String>,
) -> Result<SymSparse, NetlistError> {
    if tf.rows != tf.cols {
        return Err(NetlistError::Format {
            path: label.to_string(),
            line: 0,
            reason: format!("matrix is {}×{}, not square", tf.rows, tf.cols),
        });
    }
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, v) in &tf.entries {
        *acc.entry((i, j)).or_insert(0.0) += v;
    }
    let mut b = SymBuilder::new(tf.rows);
    for (&(i, j), &v) in &acc {
        if i < j {
            continue;
        }
        let value = match (i != j).then(|| acc.get(&(j, i))).flatten() {
            Some(&u) => {
                let scale = u.abs().max(v.abs());
                if (u - v).abs() > 1e-12 * scale {
                    warnings.push(format!(
                        "{label}: entries ({i}, {j}) = {v} and ({j}, {i}) = {u} differ; using the average"
                    ));
                }
                if u == v {
                    v
                } else {
                    0.5 * (u + v)
                }
            }
            None => v,
        };
        b.add(i, j, value);
    }
    // Upper-only entries.
    for (&(i, j), &v) in &acc {
        if i < j && !acc.contains_key(&(j, i)) {
            b.add(i, j, v);
        }
    }
    Ok(b.build()?)
}

/// Where the port indices of a triplet-defined system come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PortSource {
    /// The first `p` indices are the ports.
    First(usize),
    /// A file with one `index [name]` line per port, in port order.
    File(PathBuf),
}

/// A system read from triplet files, with any symmetrization warnings.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub system: MnaSystem,
    pub warnings: Vec<String>,
}

/// Loads `G` and `C` coordinate files and reorders the ports first.
pub fn load_sparse_triplets(
    g_path: &Path,
    c_path: &Path,
    ports: &PortSource,
) -> Result<LoadedSystem, NetlistError> {
    let mut warnings = Vec::new();
    let g = symmetric_from_triplets(
        &read_triplet_path(g_path)?,
        &g_path.display().to_string(),
        &mut warnings,
    )?;
    let c = symmetric_from_triplets(
        &read_triplet_path(c_path)?,
        &c_path.display().to_string(),
        &mut warnings,
    )?;
    if g.dim() != c.dim() {
        return Err(NetlistError::DimensionMismatch {
            g: g.dim(),
            c: c.dim(),
        });
    }
    let n = g.dim();
    let (port_idx, port_names) = match ports {
        PortSource::First(p) => {
            if *p > n {
                return Err(NetlistError::InvalidSystem(format!(
                    "{p} ports exceed dimension {n}"
                )));
            }
            (
                (0..*p).collect::<Vec<_>>(),
                (0..*p).map(|i| i.to_string()).collect(),
            )
        }
        PortSource::File(path) => read_ports_file(path, n)?,
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    let is_port: HashSet<usize> = port_idx.iter().copied().collect();
    let mut order = port_idx.clone();
    order.extend((0..n).filter(|i| !is_port.contains(i)));
    let mut names = port_names;
    names.extend(order[port_idx.len()..].iter().map(|i| i.to_string()));
    let perm = crate::sparse::Permutation::from_forward(order)?;
    let system = MnaSystem::new(g.permute(&perm)?, c.permute(&perm)?, port_idx.len(), names)?;
    Ok(LoadedSystem { system, warnings })
}

fn read_ports_file(path: &Path, n: usize) -> Result<(Vec<usize>, Vec<String>), NetlistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let fmt = |line: usize, reason: String| NetlistError::Format {
        path: path.display().to_string(),
        line,
        reason,
    };
    let (mut idx, mut names) = (Vec::new(), Vec::new());
    let mut seen = HashSet::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let i: usize = toks
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fmt(k + 1, format!("bad port line {t:?}")))?;
        if i >= n || !seen.insert(i) {
            return Err(fmt(
                k + 1,
                format!("port index {i} out of range or repeated"),
            ));
        }
        idx.push(i);
        names.push(toks.next().map_or_else(|| i.to_string(), str::to_string));
    }
    Ok((idx, names))
}

/// On-disk description of a reduced model; matrices live in sibling files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMetadata {
    pub schema: u32,
    pub method: Method,
    pub blocks: Vec<usize>,
    pub points: Vec<f64>,
    pub ports: Vec<String>,
    pub files: ModelFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFiles {
    #[serde(rename = "G")]
    pub g: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
}

/// Writes `path` (JSON metadata) plus `<stem>.G.mtx`, `<stem>.C.mtx` and,
/// for projection models, `<stem>.B.mtx` next to it.
pub fn save_reduced(sys: &ReducedSystem, path: &Path) -> Result<(), NetlistError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| {
            io_err(
                path,
                io::Error::new(io::ErrorKind::InvalidInput, "empty model path"),
            )
        })?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let files = ModelFiles {
        g: format!("{stem}.G.mtx"),
        c: format!("{stem}.C.mtx"),
        b: sys.input_matrix().map(|_| format!("{stem}.B.mtx")),
    };
    save_triplets(&dir.join(&files.g), sys.g())?;
    save_triplets(&dir.join(&files.c), sys.c())?;
    if let (Some(b), Some(name)) = (sys.input_matrix(), &files.b) {
        let nz: Vec<(usize, usize, f64)> = (0..b.ncols())
            .flat_map(|j| (0..b.nrows()).map(move |i| (i, j, b[(i, j)])))
            .filter(|e| e.2 != 0.0)
            .collect();
        let mut out = format!("{} {} {}\n", b.nrows(), b.ncols(), nz.len());
        for (i, j, v) in nz {
            out.push_str(&format!("{i} {j} {v}\n"));
        }
        let p = dir.join(name);
        fs::write(&p, out).map_err(|e| io_err(&p, e))?;
    }
    let meta = ReducedMetadata {
        schema: 1,
        method: sys.method(),
        blocks: sys.block_sizes().to_vec(),
        points: sys.points().to_vec(),
        ports: sys.port_names().to_vec(),
        files,
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

/// Reads a model written by [`save_reduced`].
pub fn load_reduced(path: &Path) -> Result<ReducedSystem, NetlistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let meta: ReducedMetadata = serde_json::from_str(&text).map_err(|e| NetlistError::Format {
        path: path.display().to_string(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    if meta.schema != 1 {
        return Err(NetlistError::Format {
            path: path.display().to_string(),
            line: 0,
            reason: format!("unsupported schema {}", meta.schema),
        });
    }
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut warnings = Vec::new();
    let load = |name: &str, w: &mut Vec<String>| {
        let p = dir.join(name);
        symmetric_from_triplets(&read_triplet_path(&p)?, &p.display().to_string(), w)
    };
    let g = load(&meta.files.g, &mut warnings)?;
    let c = load(&meta.files.c, &mut warnings)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let b = match &meta.files.b {
        Some(name) => {
            let tf = read_triplet_path(&dir.join(name))?;
            let mut b = DMatrix::zeros(tf.rows, tf.cols);
            for (i, j, v) in tf.entries {
                b[(i, j)] += v;
            }
            Some(b)
        }
        None => None,
    };
    ReducedSystem::new(meta.method, g, c, b, meta.blocks, meta.points, meta.ports)
        .map_err(|e| NetlistError::InvalidSystem(e.to_string()))
}
