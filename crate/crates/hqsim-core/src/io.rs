//! Artifact readers and writers: numeric CSV tables, gridded potential
//! files, JSON summaries, and a packed binary trace format.
//!
//! Floats are written with the shortest representation that parses
//! back to the identical bits, so re-reading an artifact loses nothing
//! and identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fci::PotentialGrid;
use crate::readout::SyntheticTrace;

/// Serialize a summary as pretty-printed JSON.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Write a numeric table as CSV under the given column header.
pub fn write_table_csv<P, I>(path: P, columns: &[&str], rows: I) -> Result<()>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Invalid(format!(
                "table row has {} fields under a {}-column header",
                row.len(),
                columns.len()
            )));
        }
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Write a potential grid: header `# nx,ny,hx_nm,hy_nm`, then ny rows
/// of nx comma-separated meV values.
pub fn write_potential_csv(path: impl AsRef<Path>, grid: &PotentialGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {},{},{},{}", grid.nx, grid.ny, grid.hx_nm, grid.hy_nm)?;
    let values = grid.values();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            if ix > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{}", values[grid.index(ix, iy)])?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a potential file in the format written by
/// [`write_potential_csv`]. Returns `(nx, ny, hx_nm, hy_nm, values)`
/// with `values` row-major (`ix + nx·iy`).
pub fn read_potential_csv(path: impl AsRef<Path>) -> Result<(usize, usize, f64, f64, Vec<f64>)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid("empty potential file".into()))??;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Invalid("potential file must start with \"# nx,ny,hx_nm,hy_nm\"".into()))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(Error::Invalid(format!(
            "potential header needs nx,ny,hx_nm,hy_nm, got {} fields",
            fields.len()
        )));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| Error::Invalid(format!("bad nx {:?} in potential header", fields[0])))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| Error::Invalid(format!("bad ny {:?} in potential header", fields[1])))?;
    let hx: f64 = fields[2]
        .parse()
        .map_err(|_| Error::Invalid(format!("bad hx_nm {:?} in potential header", fields[2])))?;
    let hy: f64 = fields[3]
        .parse()
        .map_err(|_| Error::Invalid(format!("bad hy_nm {:?} in potential header", fields[3])))?;
    let mut values = Vec::with_capacity(nx.saturating_mul(ny));
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        for tok in t.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad potential value {:?}", tok.trim())))?;
            values.push(v);
        }
    }
    if values.len() != nx * ny {
        return Err(Error::Invalid(format!(
            "potential file declares {nx}×{ny} = {} values but contains {}",
            nx * ny,
            values.len()
        )));
    }
    Ok((nx, ny, hx, hy, values))
}

/// Magic bytes of the packed trace format.
pub const TRACE_MAGIC: &[u8; 4] = b"HQTR";
/// Current trace-format version.
pub const TRACE_VERSION: u32 = 1;

/// A batch of traces read back from disk.
#[derive(Debug, Clone)]
pub struct TraceFile {
    /// Detector sample spacing, μs.
    pub dt_us: f64,
    pub traces: Vec<SyntheticTrace>,
}

/// Write a trace batch in the packed little-endian format: magic,
/// version, counts, sample spacing, then per trace the label, blip
/// flag, the two event times (NaN when absent) and f32 samples.
pub fn write_traces(path: impl AsRef<Path>, dt_us: f64, traces: &[SyntheticTrace]) -> Result<()> {
    let spt = traces.first().map_or(0, |t| t.samples.len());
    for (i, t) in traces.iter().enumerate() {
        if t.samples.len() != spt {
            return Err(Error::Invalid(format!(
                "trace {i} has {} samples, expected {spt}",
                t.samples.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&(traces.len() as u32).to_le_bytes())?;
    w.write_all(&(spt as u32).to_le_bytes())?;
    w.write_all(&dt_us.to_le_bytes())?;
    for t in traces {
        w.write_all(&[t.label, u8::from(t.had_blip)])?;
        w.write_all(&t.t_out_us.unwrap_or(f64::NAN).to_le_bytes())?;
        w.write_all(&t.t_back_us.unwrap_or(f64::NAN).to_le_bytes())?;
        for &s in &t.samples {
            w.write_all(&(s as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a file written by [`write_traces`].
pub fn read_traces(path: impl AsRef<Path>) -> Result<TraceFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TRACE_MAGIC {
        return Err(Error::Invalid("not a trace file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != TRACE_VERSION {
        return Err(Error::Invalid(format!(
            "trace format version {version} is not supported (expected {TRACE_VERSION})"
        )));
    }
    let n = read_u32(&mut r)? as usize;
    let spt = read_u32(&mut r)? as usize;
    let dt_us = read_f64(&mut r)?;
    let mut traces = Vec::with_capacity(n);
    let mut buf = vec![0u8; 4 * spt];
    for _ in 0..n {
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let t_out = read_f64(&mut r)?;
        let t_back = read_f64(&mut r)?;
        r.read_exact(&mut buf)?;
        let samples = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        traces.push(SyntheticTrace {
            label: head[0],
            had_blip: head[1] != 0,
            t_out_us: if t_out.is_nan() { None } else { Some(t_out) },
            t_back_us: if t_back.is_nan() { None } else { Some(t_back) },
            samples,
        });
    }
    Ok(TraceFile { dt_us, traces })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
