//! On-disk formats: a small binary matrix container, CSV embeddings, label
//! files, JSON-lines reports and checkpoint directories.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::encoder::{AdamState, EncoderParams, EncoderSpec, InputShape, MomentBlock};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::membank::FeatureAgentBank;

use super::{EpochReport, TrainState};

/// Leading bytes of the binary matrix container.
pub const MATRIX_MAGIC: [u8; 4] = *b"UFCL";
/// Current container version.
pub const MATRIX_VERSION: u32 = 1;

/// Serializes a matrix: magic, version, rows, cols (little-endian u32),
/// then row-major f64 little-endian payload.
pub fn matrix_to_bytes(m: &Matrix) -> Result<Vec<u8>> {
    if m.rows() > u32::MAX as usize || m.cols() > u32::MAX as usize {
        return Err(Error::invalid("matrix too large for the container format"));
    }
    let mut out = Vec::with_capacity(16 + m.data().len() * 8);
    out.extend_from_slice(&MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses the binary container; `origin` names the source in errors.
pub fn matrix_from_bytes(bytes: &[u8], origin: &str) -> Result<Matrix> {
    if bytes.len() < 16 {
        return Err(Error::format(format!(
            "{origin}: {} bytes is too short for a matrix header",
            bytes.len()
        )));
    }
    if bytes[0..4] != MATRIX_MAGIC {
        return Err(Error::format(format!("{origin}: bad magic at offset 0")));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != MATRIX_VERSION {
        return Err(Error::format(format!(
            "{origin}: unsupported version {version} at offset 4"
        )));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = 16 + rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(
        || Error::format(format!("{origin}: {rows}x{cols} payload overflows")),
    )?;
    if bytes.len() != expected {
        return Err(Error::format(format!(
            "{origin}: expected {expected} bytes for a {rows}x{cols} matrix, got {}",
            bytes.len()
        )));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_bytes(m)?).map_err(|e| Error::io_at(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    matrix_from_bytes(&bytes, &path.display().to_string())
}

/// Parses comma-separated float rows; `origin` names the source in errors.
pub fn matrix_from_csv(text: &str, origin: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(format!(
                    "{origin}: line {}: not a number: {:?}",
                    lineno + 1,
                    field.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::format(format!(
                    "{origin}: line {}: non-finite value {v}",
                    lineno + 1
                )));
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::format(format!(
                    "{origin}: line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(format!("{origin}: no rows")));
    }
    Matrix::from_rows(&rows)
}

/// Loads embeddings from either container format: binary when the magic
/// matches, CSV otherwise. All values must be finite.
pub fn load_embeddings(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    let origin = path.display().to_string();
    let m = if bytes.len() >= 4 && bytes[0..4] == MATRIX_MAGIC {
        matrix_from_bytes(&bytes, &origin)?
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::format(format!("{origin}: neither binary matrix nor UTF-8 CSV")))?;
        matrix_from_csv(text, &origin)?
    };
    if !m.is_finite() {
        return Err(Error::format(format!("{origin}: embeddings contain non-finite values")));
    }
    Ok(m)
}

/// Writes one decimal label per line; -1 marks outliers.
pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut text = String::new();
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io_at(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse::<i64>().map_err(|_| {
            Error::format(format!(
                "{}: line {}: not an integer label: {line:?}",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    Ok(labels)
}

/// Labels that must be non-negative class ids (ground truth).
pub fn read_class_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(path)?
        .into_iter()
        .map(|l| {
            usize::try_from(l).map_err(|_| {
                Error::format(format!("{}: negative class label {l}", path.display()))
            })
        })
        .collect()
}

/// Appends one report as a JSON line and flushes, so partial histories
/// survive interrupted runs.
pub fn append_report(path: &Path, report: &EpochReport) -> Result<()> {
    let line = serde_json::to_string(report)
        .map_err(|e| Error::format(format!("cannot serialize report: {e}")))?;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io_at(path, e))?;
    file.write_all(line.as_bytes()).map_err(|e| Error::io_at(path, e))?;
    file.write_all(b"\n").map_err(|e| Error::io_at(path, e))?;
    file.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

pub fn read_reports(path: &Path) -> Result<Vec<EpochReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let mut reports = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        reports.push(serde_json::from_str(line).map_err(|e| {
            Error::format(format!("{}: line {}: {e}", path.display(), lineno + 1))
        })?);
    }
    Ok(reports)
}

fn input_shape_str(input: InputShape) -> String {
    match input {
        InputShape::Vector { dim } => format!("vector:{dim}"),
        InputShape::Map { width, height, channels } => format!("map:{width}x{height}x{channels}"),
    }
}

fn parse_input_shape(s: &str, origin: &str) -> Result<InputShape> {
    let bad = || Error::format(format!("{origin}: bad input shape {s:?}"));
    if let Some(dim) = s.strip_prefix("vector:") {
        return Ok(InputShape::Vector { dim: dim.parse().map_err(|_| bad())? });
    }
    if let Some(dims) = s.strip_prefix("map:") {
        let parts: Vec<&str> = dims.split('x').collect();
        if parts.len() == 3 {
            let mut vals = [0usize; 3];
            for (v, p) in vals.iter_mut().zip(&parts) {
                *v = p.parse().map_err(|_| bad())?;
            }
            return Ok(InputShape::Map { width: vals[0], height: vals[1], channels: vals[2] });
        }
    }
    Err(bad())
}

fn moments_to_matrix(block: &MomentBlock) -> Result<Matrix> {
    let mut data = block.m.clone();
    data.extend_from_slice(&block.v);
    Matrix::from_vec(2, block.m.len(), data)
}

fn matrix_to_moments(m: &Matrix, origin: &str) -> Result<MomentBlock> {
    if m.rows() != 2 {
        return Err(Error::format(format!("{origin}: moment matrix must have 2 rows")));
    }
    Ok(MomentBlock { m: m.row(0).to_vec(), v: m.row(1).to_vec() })
}

fn row_matrix(v: &[f64]) -> Result<Matrix> {
    Matrix::from_vec(1, v.len(), v.to_vec())
}

/// Writes encoder parameters, optimizer state and the current agent bank
/// into `dir` (created if missing).
pub fn save_checkpoint(dir: &Path, state: &TrainState) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))?;
    let spec = state.params.spec();
    let (step, gem, w_hidden, w_out) = state.adam.parts();

    let mut lines = String::new();
    let mut push = |k: &str, v: String| {
        lines.push_str(k);
        lines.push('=');
        lines.push_str(&v);
        lines.push('\n');
    };
    push("version", MATRIX_VERSION.to_string());
    push("next_epoch", state.next_epoch.to_string());
    push("adam_step", step.to_string());
    push("input", input_shape_str(spec.input));
    push("hidden_dim", spec.hidden_dim.unwrap_or(0).to_string());
    push("out_dim", spec.out_dim.to_string());
    match &state.bank {
        Some(bank) => {
            push("bank_momentum", bank.momentum().to_string());
            push("bank_temperature", bank.temperature().to_string());
        }
        None => push("bank", "none".to_string()),
    }
    fs::write(dir.join("state.txt"), lines).map_err(|e| Error::io_at(dir, e))?;

    write_matrix(&dir.join("w_out.mat"), &state.params.w_out)?;
    write_matrix(&dir.join("adam_w_out.mat"), &moments_to_matrix(w_out)?)?;
    if let Some(w) = &state.params.w_hidden {
        write_matrix(&dir.join("w_hidden.mat"), w)?;
        let block = w_hidden.ok_or_else(|| Error::shape("missing hidden moments"))?;
        write_matrix(&dir.join("adam_w_hidden.mat"), &moments_to_matrix(block)?)?;
    }
    if !state.params.gem_exponents.is_empty() {
        write_matrix(&dir.join("gem_exponents.mat"), &row_matrix(&state.params.gem_exponents)?)?;
    }
    write_matrix(&dir.join("adam_gem.mat"), &moments_to_matrix(gem)?)?;
    if let Some(bank) = &state.bank {
        let rows: Vec<Vec<f64>> = bank.agents().to_vec();
        write_matrix(&dir.join("agents.mat"), &Matrix::from_rows(&rows)?)?;
    }
    Ok(())
}

/// Restores a [`TrainState`] written by [`save_checkpoint`].
pub fn load_checkpoint(dir: &Path) -> Result<TrainState> {
    let state_path = dir.join("state.txt");
    let origin = state_path.display().to_string();
    let text = fs::read_to_string(&state_path).map_err(|e| Error::io_at(&state_path, e))?;
    let mut kv = std::collections::BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::format(format!("{origin}: line {}: expected key=value", lineno + 1))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        kv.get(key).ok_or_else(|| Error::format(format!("{origin}: missing key {key:?}")))
    };
    let parse_num = |key: &str| -> Result<u64> {
        get(key)?
            .parse()
            .map_err(|_| Error::format(format!("{origin}: bad number for {key:?}")))
    };
    let version = parse_num("version")?;
    if version != MATRIX_VERSION as u64 {
        return Err(Error::format(format!("{origin}: unsupported checkpoint version {version}")));
    }
    let next_epoch = parse_num("next_epoch")? as usize;
    let adam_step = parse_num("adam_step")?;
    let input = parse_input_shape(get("input")?, &origin)?;
    let hidden_dim = parse_num("hidden_dim")? as usize;
    let out_dim = parse_num("out_dim")? as usize;
    let spec = EncoderSpec {
        input,
        hidden_dim: if hidden_dim == 0 { None } else { Some(hidden_dim) },
        out_dim,
    };

    let w_out = read_matrix(&dir.join("w_out.mat"))?;
    let adam_w_out = matrix_to_moments(&read_matrix(&dir.join("adam_w_out.mat"))?, &origin)?;
    let (w_hidden, adam_w_hidden) = if spec.hidden_dim.is_some() {
        (
            Some(read_matrix(&dir.join("w_hidden.mat"))?),
            Some(matrix_to_moments(&read_matrix(&dir.join("adam_w_hidden.mat"))?, &origin)?),
        )
    } else {
        (None, None)
    };
    let gem_exponents = match input {
        InputShape::Map { .. } => read_matrix(&dir.join("gem_exponents.mat"))?.row(0).to_vec(),
        InputShape::Vector { .. } => Vec::new(),
    };
    let adam_gem = matrix_to_moments(&read_matrix(&dir.join("adam_gem.mat"))?, &origin)?;

    let params = EncoderParams::from_parts(spec, gem_exponents, w_hidden, w_out)?;
    let adam = AdamState::from_parts(adam_step, adam_gem, adam_w_hidden, adam_w_out);

    let bank = if kv.contains_key("bank_momentum") {
        let momentum: f64 = get("bank_momentum")?
            .parse()
            .map_err(|_| Error::format(format!("{origin}: bad bank_momentum")))?;
        let temperature: f64 = get("bank_temperature")?
            .parse()
            .map_err(|_| Error::format(format!("{origin}: bad bank_temperature")))?;
        let agents = read_matrix(&dir.join("agents.mat"))?;
        let rows: Vec<Vec<f64>> = (0..agents.rows()).map(|i| agents.row(i).to_vec()).collect();
        Some(FeatureAgentBank::from_agents(rows, momentum, temperature)?)
    } else {
        None
    };

    Ok(TrainState { params, adam, next_epoch, bank })
}
