//! PGM (P2/P5, 8-bit) and one-value-per-line CSV.
//!
//! PGM samples map linearly between `[0, maxval]` and `[0, 1]`; values outside
//! `[0, 1]` are clamped on write. CSV values use 17 significant digits so
//! doubles survive a round trip unchanged.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{Domain, Shape, Signal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(signal: &Signal, format: PgmFormat) -> Vec<u8> {
    let (rows, cols) = signal.shape().grid();
    let magic = match format {
        PgmFormat::Ascii => "P2",
        PgmFormat::Binary => "P5",
    };
    let mut out = format!("{magic}\n{cols} {rows}\n255\n").into_bytes();
    let samples = signal.as_slice().iter().map(|&v| quantize(v));
    match format {
        PgmFormat::Binary => out.extend(samples),
        PgmFormat::Ascii => {
            for (i, q) in samples.enumerate() {
                let sep = if (i + 1) % cols == 0 { "\n" } else { " " };
                out.extend_from_slice(format!("{q}{sep}").as_bytes());
            }
        }
    }
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("unexpected end of PGM data".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Format("PGM header is not ASCII".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse()
            .map_err(|_| Error::Format(format!("bad PGM number `{t}`")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Signal> {
    let mut r = HeaderReader { bytes, pos: 0 };
    let format = match r.token()? {
        "P2" => PgmFormat::Ascii,
        "P5" => PgmFormat::Binary,
        other => return Err(Error::Format(format!("unsupported PGM magic `{other}`"))),
    };
    let cols = r.number()?;
    let rows = r.number()?;
    let maxval = r.number()?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let n = rows * cols;
    let scale = maxval as f64;
    let data: Vec<f64> = match format {
        PgmFormat::Binary => {
            // exactly one whitespace byte separates the header from the raster
            let start = r.pos + 1;
            let raster = bytes
                .get(start..start + n)
                .ok_or_else(|| Error::Format("truncated P5 raster".into()))?;
            raster.iter().map(|&b| b as f64 / scale).collect()
        }
        PgmFormat::Ascii => (0..n)
            .map(|_| r.number().map(|v| v.min(maxval) as f64 / scale))
            .collect::<Result<_>>()?,
    };
    Ok(Signal::new(data, Shape::D2 { rows, cols })?.with_domain(Domain::Unit))
}

pub fn encode_csv(signal: &Signal) -> String {
    let mut s = String::with_capacity(signal.len() * 24);
    for v in signal.as_slice() {
        s.push_str(&format!("{v:.16e}\n"));
    }
    s
}

pub fn decode_csv(text: &str) -> Result<Signal> {
    let data = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad CSV value `{l}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Signal::from_vec(data)
}

/// Writes via a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid("path", format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a signal, choosing the format from the extension (`.pgm` or `.csv`).
pub fn read_signal(path: &Path) -> Result<Signal> {
    match extension(path).as_deref() {
        Some("pgm") => decode_pgm(&fs::read(path)?),
        Some("csv") => decode_csv(&fs::read_to_string(path)?),
        _ => Err(Error::invalid(
            "path",
            format!("{}: expected .pgm or .csv", path.display()),
        )),
    }
}

/// Writes a signal as binary PGM or CSV depending on the extension.
pub fn write_signal(path: &Path, signal: &Signal) -> Result<()> {
    match extension(path).as_deref() {
        Some("pgm") => write_atomic(path, &encode_pgm(signal, PgmFormat::Binary)),
        Some("csv") => write_atomic(path, encode_csv(signal).as_bytes()),
        _ => Err(Error::invalid(
            "path",
            format!("{}: expected .pgm or .csv", path.display()),
        )),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
}
