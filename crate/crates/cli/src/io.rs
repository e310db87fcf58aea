//! Output writers: diagnostics table, binary snapshots and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use relfluid::diagnostics::DiagnosticsRecord;
use relfluid::{Grid, ScalarField};
use serde::Serialize;

pub const DIAGNOSTICS_HEADER: &str = "t,H,M,K,E,div_residual,K_source,E_source,max_v_over_c";

fn field(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One CSV row; absent quantities are empty fields.
pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    [
        Some(r.t),
        r.h,
        r.m,
        r.k,
        r.e,
        r.div_residual,
        r.k_source,
        r.e_source,
        r.max_v_over_c,
    ]
    .into_iter()
    .map(field)
    .collect::<Vec<_>>()
    .join(",")
}

pub struct DiagnosticsWriter {
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{DIAGNOSTICS_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        writeln!(self.out, "{}", diagnostics_row(r))?;
        // flushed per row so a failed run still leaves the series on disk
        self.out.flush()
    }
}

/// Parses a diagnostics table back into records.
pub fn read_diagnostics(path: &Path) -> io::Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(DIAGNOSTICS_HEADER) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "unexpected header",
        ));
    }
    let parse = |s: &str| -> io::Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{s}: {e}")))
        }
    };
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 9 {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    "expected 9 columns",
                ));
            }
            Ok(DiagnosticsRecord {
                t: parse(cols[0])?.unwrap_or(f64::NAN),
                h: parse(cols[1])?,
                m: parse(cols[2])?,
                k: parse(cols[3])?,
                e: parse(cols[4])?,
                div_residual: parse(cols[5])?,
                k_source: parse(cols[6])?,
                e_source: parse(cols[7])?,
                max_v_over_c: parse(cols[8])?,
            })
        })
        .collect()
}

/// `# relfluid v1 <field> nx=.. ny=.. [nz=..] lx=.. ly=.. [lz=..] t=..`
pub fn snapshot_header(name: &str, grid: &Grid, t: f64) -> String {
    let [nx, ny, nz] = grid.shape();
    let [lx, ly, lz] = grid.lengths();
    if grid.is_planar() {
        format!("# relfluid v1 {name} nx={nx} ny={ny} lx={lx} ly={ly} t={t}\n")
    } else {
        format!("# relfluid v1 {name} nx={nx} ny={ny} nz={nz} lx={lx} ly={ly} lz={lz} t={t}\n")
    }
}

pub fn write_snapshot(path: &Path, name: &str, field: &ScalarField, t: f64) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(snapshot_header(name, field.grid(), t).as_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

/// A snapshot read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub t: f64,
    pub field: ScalarField,
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_snapshot(path: &Path) -> io::Result<Snapshot> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| invalid("missing header line"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| invalid("header is not ASCII"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("#") || words.next() != Some("relfluid") || words.next() != Some("v1") {
        return Err(invalid("not a relfluid v1 snapshot"));
    }
    let name = words
        .next()
        .ok_or_else(|| invalid("missing field name"))?
        .to_string();
    let (mut n, mut l, mut t) = ([1usize; 3], [1.0f64; 3], None);
    for w in words {
        let (key, value) = w
            .split_once('=')
            .ok_or_else(|| invalid(format!("bad token {w}")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| invalid(format!("bad value {w}")))
        };
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| invalid(format!("bad value {w}")))
        };
        match key {
            "nx" => n[0] = int(value)?,
            "ny" => n[1] = int(value)?,
            "nz" => n[2] = int(value)?,
            "lx" => l[0] = num(value)?,
            "ly" => l[1] = num(value)?,
            "lz" => l[2] = num(value)?,
            "t" => t = Some(num(value)?),
            _ => return Err(invalid(format!("unknown header key {key}"))),
        }
    }
    let grid = if n[2] == 1 {
        Grid::new_2d(n[0], n[1], l[0], l[1])
    } else {
        Grid::new_3d(n[0], n[1], n[2], l[0], l[1], l[2])
    }
    .map_err(|e| invalid(e.to_string()))?;
    let body = &bytes[end + 1..];
    if body.len() != 8 * grid.size() {
        return Err(invalid("payload size does not match the header"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(Snapshot {
        name,
        t: t.ok_or_else(|| invalid("missing t"))?,
        field: ScalarField::from_vec(grid, data).map_err(|e| invalid(e.to_string()))?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub mode: String,
    pub grid: GridInfo,
    pub derivative: String,
    pub jacobian: String,
    pub dealias: bool,
    pub projection: bool,
    pub status: String,
    pub error: Option<String>,
    pub steps: usize,
    pub t_final: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub n: [usize; 3],
    pub lengths: [f64; 3],
}

impl From<&Grid> for GridInfo {
    fn from(g: &Grid) -> Self {
        Self {
            n: g.shape(),
            lengths: g.lengths(),
        }
    }
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> io::Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
    fs::write(dir.join("manifest.json"), text + "\n")
}

/// Output directory layout of a run.
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root.join("snapshots"))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn diagnostics(&self) -> PathBuf {
        self.root.join("diagnostics.csv")
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn snapshot(&self, name: &str, step: usize) -> PathBuf {
        self.root
            .join("snapshots")
            .join(format!("{name}_{step:06}.bin"))
    }
}
