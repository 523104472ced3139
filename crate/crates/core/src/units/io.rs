use std::io::{BufRead, Read, Write};

use super::{Codebook, Result, UnitsError};

pub const CODEBOOK_MAGIC: [u8; 4] = *b"PQCB";
pub const CODEBOOK_VERSION: u32 = 1;

/// Header (magic, version, k, dim, seed; little-endian) then row-major f32 centroids.
pub fn write_codebook(codebook: &Codebook, mut out: impl Write) -> Result<()> {
    out.write_all(&CODEBOOK_MAGIC)?;
    out.write_all(&CODEBOOK_VERSION.to_le_bytes())?;
    out.write_all(&(codebook.k as u32).to_le_bytes())?;
    out.write_all(&(codebook.dim as u32).to_le_bytes())?;
    out.write_all(&codebook.seed.to_le_bytes())?;
    for &v in codebook.centroids() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_codebook(mut input: impl Read) -> Result<Codebook> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 24 {
        return Err(UnitsError::BadCodebook(format!("{} byte header", bytes.len())));
    }
    if bytes[..4] != CODEBOOK_MAGIC {
        return Err(UnitsError::BadCodebook("bad magic".into()));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CODEBOOK_VERSION {
        return Err(UnitsError::BadCodebook(format!("unsupported version {version}")));
    }
    let k = u32_at(8) as usize;
    let dim = u32_at(12) as usize;
    let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let body = &bytes[24..];
    if body.len() != k * dim * 4 {
        return Err(UnitsError::BadCodebook(format!(
            "expected {} centroid bytes, found {}",
            k * dim * 4,
            body.len()
        )));
    }
    let centroids = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Codebook::new(k, dim, seed, centroids, None)
}

/// One line per utterance: `id<TAB>u u u ...`.
pub fn write_unit_lines<'a>(
    lines: impl IntoIterator<Item = (&'a str, &'a [u32])>,
    mut out: impl Write,
) -> Result<()> {
    for (id, units) in lines {
        let joined: Vec<String> = units.iter().map(u32::to_string).collect();
        writeln!(out, "{id}\t{}", joined.join(" "))?;
    }
    Ok(())
}

pub fn read_unit_lines(input: impl BufRead) -> Result<Vec<(String, Vec<u32>)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| UnitsError::Parse { line: i + 1, message };
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("missing tab after id".into()))?;
        let units = rest
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push((id.to_string(), units));
    }
    Ok(out)
}
