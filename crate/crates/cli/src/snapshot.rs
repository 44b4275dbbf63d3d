//! State snapshots in csv or raw little-endian form.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nsk_core::mesh::{GridField, Mesh, State};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Raw,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Malformed {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Sidecar of a raw snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub fields: Vec<String>,
    pub byte_order: String,
    pub dtype: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: State<f64>,
}

pub fn snapshot_stem(index: usize) -> String {
    format!("snap_{index:05}")
}

/// Writes snapshot `index` into `dir` and returns the data file path.
pub fn write_snapshot(
    state: &State<f64>,
    t: f64,
    dir: &Path,
    index: usize,
    format: SnapshotFormat,
) -> Result<PathBuf, IoError> {
    let stem = snapshot_stem(index);
    match format {
        SnapshotFormat::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            write_csv(state, t, &path)?;
            Ok(path)
        }
        SnapshotFormat::Raw => {
            let path = dir.join(format!("{stem}.raw"));
            let mut bytes = Vec::with_capacity(3 * 8 * state.rho.values().len());
            for f in [&state.rho, &state.mx, &state.my] {
                for v in f.values() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            fs::write(&path, bytes).map_err(io_err(&path))?;
            let mesh = state.mesh();
            let sidecar = RawSidecar {
                t,
                m: mesh.m(),
                n: mesh.n(),
                fields: vec!["rho".into(), "mx".into(), "my".into()],
                byte_order: "LE".into(),
                dtype: "f64".into(),
            };
            let side = dir.join(format!("{stem}.json"));
            let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
            fs::write(&side, text).map_err(io_err(&side))?;
            Ok(path)
        }
    }
}

fn write_csv(state: &State<f64>, t: f64, path: &Path) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mesh = state.mesh();
    let (m, n) = (mesh.m(), mesh.n());
    let mut body = format!("# t={t:.16e} M={m} N={n}\ni,j,rho,mx,my\n");
    for j in 0..n {
        for i in 0..m {
            let (r, mx, my) = (state.rho.at(i, j), state.mx.at(i, j), state.my.at(i, j));
            body.push_str(&format!("{i},{j},{r:.16e},{mx:.16e},{my:.16e}\n"));
        }
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Parses the `# t=<t> M=<M> N=<N>` header line.
pub fn parse_csv_header(line: &str) -> Option<(f64, usize, usize)> {
    let mut it = line.strip_prefix("# ")?.split_whitespace();
    let t = it.next()?.strip_prefix("t=")?.parse().ok()?;
    let m = it.next()?.strip_prefix("M=")?.parse().ok()?;
    let n = it.next()?.strip_prefix("N=")?.parse().ok()?;
    it.next().is_none().then_some((t, m, n))
}

/// Reads a snapshot written by [`write_snapshot`]; `path` is the `.csv` or
/// `.raw` file.
pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(path),
        Some("raw") => read_raw(path),
        _ => Err(malformed(path, "expected a .csv or .raw snapshot")),
    }
}

fn build_state(
    path: &Path,
    m: usize,
    n: usize,
    fields: [Vec<f64>; 3],
) -> Result<State<f64>, IoError> {
    let mesh = Mesh::new(m, n).map_err(|e| malformed(path, e.to_string()))?;
    let [rho, mx, my] = fields.map(|v| GridField::new(mesh, v));
    let wrap = |e: nsk_core::NskError| malformed(path, e.to_string());
    State::new(rho.map_err(wrap)?, mx.map_err(wrap)?, my.map_err(wrap)?).map_err(wrap)
}

fn read_csv(path: &Path) -> Result<Snapshot, IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || lines.next().transpose().map_err(io_err(path));
    let header = next()?.ok_or_else(|| malformed(path, "empty file"))?;
    let (t, m, n) = parse_csv_header(&header).ok_or_else(|| malformed(path, "bad header"))?;
    if next()?.as_deref() != Some("i,j,rho,mx,my") {
        return Err(malformed(path, "missing column line"));
    }
    let len = m * n;
    let mut fields = [
        vec![f64::NAN; len],
        vec![f64::NAN; len],
        vec![f64::NAN; len],
    ];
    let mut seen = 0;
    while let Some(line) = next()? {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || malformed(path, format!("bad row `{line}`"));
        if cols.len() != 5 {
            return Err(bad());
        }
        let i: usize = cols[0].parse().map_err(|_| bad())?;
        let j: usize = cols[1].parse().map_err(|_| bad())?;
        if i >= m || j >= n {
            return Err(bad());
        }
        for (f, c) in fields.iter_mut().zip(&cols[2..]) {
            f[i + m * j] = c.parse().map_err(|_| bad())?;
        }
        seen += 1;
    }
    if seen != len {
        return Err(malformed(
            path,
            format!("expected {len} rows, found {seen}"),
        ));
    }
    Ok(Snapshot {
        t,
        state: build_state(path, m, n, fields)?,
    })
}

fn read_raw(path: &Path) -> Result<Snapshot, IoError> {
    let side = path.with_extension("json");
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let sidecar: RawSidecar =
        serde_json::from_str(&text).map_err(|e| malformed(&side, e.to_string()))?;
    if sidecar.byte_order != "LE" || sidecar.dtype != "f64" || sidecar.fields != ["rho", "mx", "my"]
    {
        return Err(malformed(&side, "unsupported layout"));
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let len = sidecar.m * sidecar.n;
    if bytes.len() != 3 * 8 * len {
        return Err(malformed(
            path,
            format!("expected {} bytes, found {}", 24 * len, bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let fields = [
        values[..len].to_vec(),
        values[len..2 * len].to_vec(),
        values[2 * len..].to_vec(),
    ];
    Ok(Snapshot {
        t: sidecar.t,
        state: build_state(path, sidecar.m, sidecar.n, fields)?,
    })
}
