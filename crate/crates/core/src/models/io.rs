//! Dataset and frame files.
//!
//! Text datasets start with
//! `SMIM v1; d=<d>; n=<n>; label_arity=<k>; link=<hex>; seed=<u64>` followed by
//! one `y_1,..,y_k,z_1,..,z_d` row per sample. Values use the shortest decimal
//! form that round-trips exactly. The binary variant is
//! `"SMIM" | u32 version | u64 d, n, k, link, seed | f64 rows`, little endian.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::tensor_core::Frame;

const MAGIC: &[u8; 4] = b"SMIM";
const VERSION: u32 = 1;

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn dataset_to_text(data: &Dataset) -> String {
    let mut out = String::new();
    let p = data.provenance;
    out.push_str(&format!(
        "SMIM v1; d={}; n={}; label_arity={}; link={:016x}; seed={}\n",
        data.dim(),
        data.len(),
        data.label_arity(),
        p.link_hash,
        p.seed
    ));
    for i in 0..data.len() {
        let row: Vec<String> = data.label(i).iter().chain(data.input(i)).map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn header_field<'a>(fields: &'a [(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| fmt_err(format!("header is missing `{key}`")))
}

pub fn dataset_from_text<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| fmt_err("empty dataset file"))??;
    let mut parts = header.split(';').map(str::trim);
    if parts.next() != Some("SMIM v1") {
        return Err(fmt_err("missing `SMIM v1` header"));
    }
    let fields: Vec<(&str, &str)> = parts.filter_map(|p| p.split_once('=')).collect();
    let num = |k: &str| -> Result<u64> {
        header_field(&fields, k)?.parse().map_err(|_| fmt_err(format!("bad `{k}` in header")))
    };
    let d = num("d")? as usize;
    let n = num("n")? as usize;
    let k = num("label_arity")? as usize;
    let seed = num("seed")?;
    let link_hash = u64::from_str_radix(header_field(&fields, "link")?, 16).map_err(|_| fmt_err("bad `link` hash"))?;
    let mut labels = Vec::with_capacity(n * k);
    let mut inputs = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| fmt_err(format!("line {}: not a number", lineno + 2)))?;
        if vals.len() != k + d {
            return Err(fmt_err(format!("line {}: expected {} values, got {}", lineno + 2, k + d, vals.len())));
        }
        labels.extend_from_slice(&vals[..k]);
        inputs.extend_from_slice(&vals[k..]);
        rows += 1;
    }
    if rows != n {
        return Err(fmt_err(format!("header says n={n} but file has {rows} rows")));
    }
    Dataset::new(d, k, labels, inputs, Provenance { link_hash, frame_hash: 0, seed })
}

pub fn dataset_to_binary(data: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + 8 * (data.labels().len() + data.inputs().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [data.dim() as u64, data.len() as u64, data.label_arity() as u64, data.provenance.link_hash, data.provenance.seed] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..data.len() {
        for v in data.label(i).iter().chain(data.input(i)) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn dataset_from_binary(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 48 || &bytes[..4] != MAGIC {
        return Err(fmt_err("missing SMIM magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fmt_err(format!("unsupported binary version {version}")));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
    let (d, n, k, link_hash, seed) = (word(0) as usize, word(1) as usize, word(2) as usize, word(3), word(4));
    let body = &bytes[48..];
    if body.len() != 8 * n * (k + d) {
        return Err(fmt_err("binary body length does not match header"));
    }
    let mut labels = Vec::with_capacity(n * k);
    let mut inputs = Vec::with_capacity(n * d);
    for (idx, c) in body.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(c.try_into().unwrap());
        if idx % (k + d) < k {
            labels.push(v);
        } else {
            inputs.push(v);
        }
    }
    Dataset::new(d, k, labels, inputs, Provenance { link_hash, frame_hash: 0, seed })
}

pub fn write_dataset(path: &Path, data: &Dataset, binary: bool) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    if binary {
        f.write_all(&dataset_to_binary(data))?;
    } else {
        f.write_all(dataset_to_text(data).as_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Read a dataset, detecting the text or binary variant from the first bytes.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(b"SMIM v1") {
        dataset_from_text(BufReader::new(&bytes[..]))
    } else {
        dataset_from_binary(&bytes)
    }
}

/// Sidecar path holding the planted frame of a generated dataset.
pub fn sidecar_path(dataset: &Path) -> std::path::PathBuf {
    let mut s = dataset.as_os_str().to_owned();
    s.push(".frame");
    s.into()
}

pub fn frame_to_text(w: &Frame, note: &str) -> String {
    let mut out = format!("SMIM-FRAME v1; d={}; s={}; hash={:016x}; {}\n", w.dim(), w.rank(), w.hash(), note);
    let m = w.matrix();
    for i in 0..w.dim() {
        let row: Vec<String> = (0..w.rank()).map(|k| format!("{}", m[(i, k)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn frame_from_text(text: &str) -> Result<Frame> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| fmt_err("empty frame file"))?;
    let mut parts = header.split(';').map(str::trim);
    if parts.next() != Some("SMIM-FRAME v1") {
        return Err(fmt_err("missing `SMIM-FRAME v1` header"));
    }
    let fields: Vec<(&str, &str)> = parts.filter_map(|p| p.split_once('=')).collect();
    let d: usize = header_field(&fields, "d")?.parse().map_err(|_| fmt_err("bad d"))?;
    let s: usize = header_field(&fields, "s")?.parse().map_err(|_| fmt_err("bad s"))?;
    let mut m = DMatrix::zeros(d, s);
    let mut rows = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        if rows >= d {
            return Err(fmt_err("too many frame rows"));
        }
        let vals: std::result::Result<Vec<f64>, _> = if s == 0 { Ok(vec![]) } else { line.split(',').map(|v| v.trim().parse()).collect() };
        let vals = vals.map_err(|_| fmt_err("bad frame entry"))?;
        if vals.len() != s {
            return Err(fmt_err("frame row has the wrong length"));
        }
        for (k, v) in vals.into_iter().enumerate() {
            m[(rows, k)] = v;
        }
        rows += 1;
    }
    if rows != d && s > 0 {
        return Err(fmt_err("frame file has the wrong number of rows"));
    }
    Frame::new(m)
}

pub fn write_frame(path: &Path, w: &Frame, note: &str) -> Result<()> {
    fs::write(path, frame_to_text(w, note))?;
    Ok(())
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    frame_from_text(&fs::read_to_string(path)?)
}
