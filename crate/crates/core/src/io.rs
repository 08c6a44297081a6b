//! File formats: binary and CSV grid functions, JSON and binary coefficient fields, binary
//! time-coefficient fields and JSON-lines operator matrices.
//!
//! Binary layouts are little-endian. Every binary file opens with the grid header
//! `magic[4] | version u32 | n u32 | J u32 | complex u8`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OscilletError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::operators::AlmostDiagonalMatrix;
use crate::semigroup::{TimeCoeffField, TimeGrid};
use crate::wavelet::{CoeffField, Family, WaveletIndex};

pub const FORMAT_VERSION: u32 = 1;
const GRID_MAGIC: &[u8; 4] = b"OSLT";
const COEFF_MAGIC: &[u8; 4] = b"OSLC";
const TIME_MAGIC: &[u8; 4] = b"OSLH";

fn bad(msg: impl Into<String>) -> OscilletError {
    OscilletError::Format(msg.into())
}

struct Header {
    n: usize,
    resolution: u32,
    complex: bool,
}

fn write_header(w: &mut impl Write, magic: &[u8; 4], spec: &GridSpec, complex: bool) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    w.write_all(&spec.resolution().to_le_bytes())?;
    w.write_all(&[complex as u8])?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| bad(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact(r)?))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact(r)?))
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<Header> {
    let m: [u8; 4] = read_exact(r)?;
    if &m != magic {
        return Err(bad(format!("expected magic {:?}, found {:?}", String::from_utf8_lossy(magic), String::from_utf8_lossy(&m))));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let n = read_u32(r)? as usize;
    let resolution = read_u32(r)?;
    let [flag] = read_exact::<1>(r)?;
    if flag > 1 {
        return Err(bad(format!("complex flag must be 0 or 1, found {flag}")));
    }
    Ok(Header { n, resolution, complex: flag == 1 })
}

fn write_values(w: &mut impl Write, values: &[Complex64]) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_values(r: &mut impl Read, len: usize, complex: bool) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let v = Complex64::new(read_f64(r)?, read_f64(r)?);
        if !complex && v.im != 0.0 {
            return Err(bad("nonzero imaginary part in a file flagged real"));
        }
        out.push(v);
    }
    Ok(out)
}

fn expect_end(r: &mut impl Read) -> Result<()> {
    let mut rest = [0u8; 1];
    match r.read(&mut rest)? {
        0 => Ok(()),
        _ => Err(bad("trailing bytes after the payload")),
    }
}

fn is_complex(values: &[Complex64]) -> bool {
    values.iter().any(|v| v.im != 0.0)
}

/// Header followed by `(re, im)` pairs in row-major order; `j_min` is not stored and reads as 0.
pub fn write_grid_function(w: &mut impl Write, f: &GridFunction) -> Result<()> {
    write_header(w, GRID_MAGIC, f.spec(), is_complex(f.values()))?;
    write_values(w, f.values())
}

pub fn read_grid_function(r: &mut impl Read) -> Result<GridFunction> {
    let h = read_header(r, GRID_MAGIC)?;
    let spec = GridSpec::new(h.n, h.resolution, 0)?;
    let values = read_values(r, spec.len(), h.complex)?;
    expect_end(r)?;
    GridFunction::new(spec, values)
}

pub fn save_grid_function(path: &Path, f: &GridFunction) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid_function(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid_function(path: &Path) -> Result<GridFunction> {
    read_grid_function(&mut BufReader::new(std::fs::File::open(path)?))
}

/// Columns `i0, …, i{n−1}, re, im`, one row per sample.
pub fn write_grid_csv(w: impl Write, f: &GridFunction) -> Result<()> {
    let spec = f.spec();
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..spec.n()).map(|d| format!("i{d}")).collect();
    header.extend(["re".into(), "im".into()]);
    out.write_record(&header).map_err(|e| bad(e.to_string()))?;
    for (flat, v) in f.values().iter().enumerate() {
        let mut rec: Vec<String> = spec.unflatten(flat).iter().map(|i| i.to_string()).collect();
        rec.push(v.re.to_string());
        rec.push(v.im.to_string());
        out.write_record(&rec).map_err(|e| bad(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_grid_csv`]; rows may come in any order but must cover the grid once.
pub fn read_grid_csv(r: impl Read) -> Result<GridFunction> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let cols = header.len();
    if cols < 3 || header.get(cols - 2) != Some("re") || header.get(cols - 1) != Some("im") {
        return Err(bad("CSV header must be i0, …, re, im"));
    }
    let n = cols - 2;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse_err = |e: &dyn std::fmt::Display| bad(format!("CSV field: {e}"));
        let idx: Vec<usize> = (0..n).map(|d| rec[d].trim().parse::<usize>().map_err(|e| parse_err(&e))).collect::<Result<_>>()?;
        let re = rec[n].trim().parse::<f64>().map_err(|e| parse_err(&e))?;
        let im = rec[n + 1].trim().parse::<f64>().map_err(|e| parse_err(&e))?;
        rows.push((idx, Complex64::new(re, im)));
    }
    let side = (rows.len() as f64).powf(1.0 / n as f64).round() as usize;
    if side < 2 || !side.is_power_of_two() || side.pow(n as u32) != rows.len() {
        return Err(bad(format!("{} rows do not form a dyadic grid in dimension {n}", rows.len())));
    }
    let spec = GridSpec::new(n, side.trailing_zeros(), 0)?;
    let mut values = vec![None; spec.len()];
    for (idx, v) in rows {
        if idx.iter().any(|&i| i >= side) {
            return Err(bad(format!("index {idx:?} outside the grid")));
        }
        let slot = &mut values[spec.flatten(&idx)];
        if slot.replace(v).is_some() {
            return Err(bad(format!("duplicate row for index {idx:?}")));
        }
    }
    GridFunction::new(spec, values.into_iter().map(|v| v.expect("every row counted once")).collect())
}

/// One coefficient of the JSON coefficient format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub eps: Vec<u8>,
    pub j: u32,
    pub k: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffFile {
    pub n: usize,
    #[serde(rename = "J")]
    pub resolution: u32,
    pub j_min: u32,
    pub family: Family,
    pub coefficients: Vec<CoeffRecord>,
}

fn eps_from_bits(bits: &[u8]) -> Result<u8> {
    bits.iter().enumerate().try_fold(0u8, |acc, (d, &b)| match b {
        0 | 1 => Ok(acc | b << d),
        _ => Err(bad(format!("ε bits must be 0 or 1, found {b}"))),
    })
}

impl CoeffFile {
    pub fn from_field(c: &CoeffField) -> Self {
        let spec = c.spec();
        CoeffFile {
            n: spec.n(),
            resolution: spec.resolution(),
            j_min: spec.j_min(),
            family: c.family(),
            coefficients: c
                .iter()
                .map(|(idx, v)| CoeffRecord { eps: idx.eps_bits(), j: idx.level, k: idx.position.clone(), re: v.re, im: v.im })
                .collect(),
        }
    }

    /// Missing records read as zero.
    pub fn to_field(&self) -> Result<CoeffField> {
        let spec = GridSpec::new(self.n, self.resolution, self.j_min)?;
        let mut c = CoeffField::zeros(spec, self.family);
        for r in &self.coefficients {
            if r.eps.len() != self.n || r.k.len() != self.n {
                return Err(bad(format!("record at j={} has {} ε bits and {} positions for n={}", r.j, r.eps.len(), r.k.len(), self.n)));
            }
            c.set(&WaveletIndex::new(eps_from_bits(&r.eps)?, r.j, r.k.clone()), Complex64::new(r.re, r.im))?;
        }
        Ok(c)
    }
}

pub fn save_coeff_json(path: &Path, c: &CoeffField) -> Result<()> {
    std::fs::write(path, serde_json::to_string(&CoeffFile::from_field(c))?)?;
    Ok(())
}

pub fn load_coeff_json(path: &Path) -> Result<CoeffField> {
    let file: CoeffFile = serde_json::from_reader(BufReader::new(std::fs::File::open(path)?))?;
    file.to_field()
}

fn write_family(w: &mut impl Write, spec: &GridSpec, family: Family) -> Result<()> {
    w.write_all(&spec.j_min().to_le_bytes())?;
    let text = serde_json::to_vec(&family)?;
    w.write_all(&(text.len() as u32).to_le_bytes())?;
    w.write_all(&text)?;
    Ok(())
}

fn read_family(r: &mut impl Read) -> Result<(u32, Family)> {
    let j_min = read_u32(r)?;
    let len = read_u32(r)? as usize;
    if len > 4096 {
        return Err(bad("family descriptor too long"));
    }
    let mut text = vec![0u8; len];
    r.read_exact(&mut text).map_err(|e| bad(format!("truncated file: {e}")))?;
    Ok((j_min, serde_json::from_slice(&text)?))
}

/// Index table: count `u64`, then `ε u8 | j u32 | k (n × u32)` per coefficient in layout order.
fn write_index_table(w: &mut impl Write, c: &CoeffField) -> Result<()> {
    let layout = c.layout();
    w.write_all(&(layout.total() as u64).to_le_bytes())?;
    for flat in 0..layout.total() {
        let idx = layout.decode(flat);
        w.write_all(&[idx.eps])?;
        w.write_all(&idx.level.to_le_bytes())?;
        for &p in &idx.position {
            w.write_all(&(p as u32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads an index table and returns the flat layout slot of each entry.
fn read_index_table(r: &mut impl Read, template: &CoeffField) -> Result<Vec<usize>> {
    let layout = template.layout();
    let count = read_u64(r)? as usize;
    if count != layout.total() {
        return Err(bad(format!("index table lists {count} coefficients, the grid has {}", layout.total())));
    }
    let n = template.spec().n();
    let mut seen = vec![false; count];
    (0..count)
        .map(|_| {
            let [eps] = read_exact::<1>(r)?;
            let level = read_u32(r)?;
            let position = (0..n).map(|_| read_u32(r).map(|p| p as usize)).collect::<Result<Vec<_>>>()?;
            let slot = layout.encode(&WaveletIndex::new(eps, level, position))?;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(bad("duplicate index in table"));
            }
            Ok(slot)
        })
        .collect()
}

/// Grid header, `j_min u32`, family descriptor, index table, then one value per index.
pub fn write_coeff_binary(w: &mut impl Write, c: &CoeffField) -> Result<()> {
    write_header(w, COEFF_MAGIC, c.spec(), is_complex(c.data()))?;
    write_family(w, c.spec(), c.family())?;
    write_index_table(w, c)?;
    write_values(w, c.data())
}

pub fn read_coeff_binary(r: &mut impl Read) -> Result<CoeffField> {
    let h = read_header(r, COEFF_MAGIC)?;
    let (j_min, family) = read_family(r)?;
    let mut c = CoeffField::zeros(GridSpec::new(h.n, h.resolution, j_min)?, family);
    let slots = read_index_table(r, &c)?;
    let values = read_values(r, slots.len(), h.complex)?;
    for (slot, v) in slots.into_iter().zip(values) {
        c.data_mut()[slot] = v;
    }
    expect_end(r)?;
    Ok(c)
}

/// Grid header, family descriptor, time block `β f64 | t_min f64 | t_max f64 | L u32`,
/// index table, then the `L` values of each index in table order.
pub fn write_time_field(w: &mut impl Write, tcf: &TimeCoeffField) -> Result<()> {
    let first = tcf.slice(0);
    let complex = tcf.slices().iter().any(|s| is_complex(s.data()));
    write_header(w, TIME_MAGIC, tcf.spec(), complex)?;
    write_family(w, tcf.spec(), tcf.family())?;
    for v in [tcf.beta, tcf.grid.t_min, tcf.grid.t_max] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(tcf.grid.len as u32).to_le_bytes())?;
    write_index_table(w, first)?;
    for flat in 0..first.data().len() {
        let series: Vec<Complex64> = tcf.slices().iter().map(|s| s.data()[flat]).collect();
        write_values(w, &series)?;
    }
    Ok(())
}

pub fn read_time_field(r: &mut impl Read) -> Result<TimeCoeffField> {
    let h = read_header(r, TIME_MAGIC)?;
    let (j_min, family) = read_family(r)?;
    let beta = read_f64(r)?;
    let (t_min, t_max) = (read_f64(r)?, read_f64(r)?);
    let len = read_u32(r)? as usize;
    let grid = TimeGrid::new(t_min, t_max, len)?;
    let template = CoeffField::zeros(GridSpec::new(h.n, h.resolution, j_min)?, family);
    let slots = read_index_table(r, &template)?;
    let mut slices = vec![template; len];
    for slot in slots {
        for (s, v) in slices.iter_mut().zip(read_values(r, len, h.complex)?) {
            s.data_mut()[slot] = v;
        }
    }
    expect_end(r)?;
    TimeCoeffField::new(beta, grid, slices)
}

pub fn save_time_field(path: &Path, tcf: &TimeCoeffField) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_time_field(&mut w, tcf)?;
    w.flush()?;
    Ok(())
}

pub fn load_time_field(path: &Path) -> Result<TimeCoeffField> {
    read_time_field(&mut BufReader::new(std::fs::File::open(path)?))
}

/// First line of a matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub n: usize,
    #[serde(rename = "J")]
    pub resolution: u32,
    pub j_min: u32,
    pub family: Family,
    pub n0: f64,
    pub c: f64,
    pub band: Option<u32>,
}

/// One stored entry with its envelope and slack `C·envelope − |a|` (negative when violated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub row: WaveletIndex,
    pub col: WaveletIndex,
    pub re: f64,
    pub im: f64,
    pub envelope: f64,
    pub slack: f64,
}

pub fn write_matrix_jsonl(w: &mut impl Write, m: &AlmostDiagonalMatrix) -> Result<()> {
    let header = MatrixHeader {
        n: m.spec.n(),
        resolution: m.spec.resolution(),
        j_min: m.spec.j_min(),
        family: m.family,
        n0: m.n0,
        c: m.c,
        band: m.band,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    let layout = m.layout();
    for (i, j, v) in m.entries() {
        let envelope = m.unit_envelope(i, j);
        let entry = MatrixEntry { row: layout.decode(i), col: layout.decode(j), re: v.re, im: v.im, envelope, slack: m.c * envelope - v.norm() };
        writeln!(w, "{}", serde_json::to_string(&entry)?)?;
    }
    Ok(())
}

pub fn read_matrix_jsonl(r: impl Read) -> Result<AlmostDiagonalMatrix> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or_else(|| bad("empty matrix file"))??;
    let h: MatrixHeader = serde_json::from_str(&first)?;
    let spec = GridSpec::new(h.n, h.resolution, h.j_min)?;
    let mut m = AlmostDiagonalMatrix::new(spec, h.family, h.n0, h.c, h.band)?;
    let layout = m.layout();
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); m.dim()];
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: MatrixEntry = serde_json::from_str(&line)?;
        rows[layout.encode(&e.row)?].push((layout.encode(&e.col)?, Complex64::new(e.re, e.im)));
    }
    for (i, r) in rows.into_iter().enumerate() {
        if !r.is_empty() {
            m.set_row(i, r)?;
        }
    }
    Ok(m)
}

pub fn save_matrix(path: &Path, m: &AlmostDiagonalMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix_jsonl(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<AlmostDiagonalMatrix> {
    read_matrix_jsonl(std::fs::File::open(path)?)
}
