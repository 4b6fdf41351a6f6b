//! Radiance RGBE (`.hdr`) reader and writer, `-Y h +X w` orientation only.

use std::path::Path;

use thiserror::Error;

use super::envmap::{EnvError, EnvMap};
use crate::math::Vec3;

#[derive(Debug, Error)]
pub enum HdrError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a Radiance HDR file (bad magic)")]
    BadMagic,
    #[error("unsupported pixel format `{0}`")]
    UnsupportedFormat(String),
    #[error("unsupported image layout `{0}` (only `-Y h +X w`)")]
    UnsupportedLayout(String),
    #[error("header ended before the resolution line")]
    TruncatedHeader,
    #[error("scanline {0} is truncated")]
    TruncatedScanline(usize),
    #[error("scanline {0} has a corrupt run-length encoding")]
    CorruptScanline(usize),
    #[error(transparent)]
    Map(#[from] EnvError),
}

fn to_rgbe(c: Vec3) -> [u8; 4] {
    let m = c.max_component();
    if m.is_nan() || m <= 1e-32 {
        return [0, 0, 0, 0];
    }
    // frexp: m = f · 2^e with f in [0.5, 1).
    let e = m.log2().floor() as i32 + 1;
    let scale = 256.0 / 2f64.powi(e);
    let q = |v: f64| ((v.max(0.0) * scale) as i64).clamp(0, 255) as u8;
    [q(c.x), q(c.y), q(c.z), (e + 128).clamp(0, 255) as u8]
}

fn from_rgbe(p: [u8; 4]) -> Vec3 {
    if p[3] == 0 {
        return Vec3::ZERO;
    }
    let f = 2f64.powi(p[3] as i32 - 136);
    Vec3::new((p[0] as f64 + 0.5) * f, (p[1] as f64 + 0.5) * f, (p[2] as f64 + 0.5) * f)
}

fn rle_channel(out: &mut Vec<u8>, data: &[u8]) {
    let n = data.len();
    let mut i = 0;
    while i < n {
        // Find the next run of at least 3 equal bytes.
        let mut run_start = i;
        let mut run_len = 0;
        while run_start < n {
            run_len = 1;
            while run_start + run_len < n && run_len < 127 && data[run_start + run_len] == data[run_start] {
                run_len += 1;
            }
            if run_len >= 3 {
                break;
            }
            run_start += run_len;
        }
        if run_start >= n {
            run_len = 0;
        }
        // Literal bytes before the run.
        while i < run_start {
            let count = (run_start - i).min(128);
            out.push(count as u8);
            out.extend_from_slice(&data[i..i + count]);
            i += count;
        }
        if run_len >= 3 {
            out.push(128 + run_len as u8);
            out.push(data[run_start]);
            i = run_start + run_len;
        }
    }
}

/// Encodes a map as a run-length-compressed Radiance file.
pub fn encode_hdr(map: &EnvMap) -> Vec<u8> {
    let (w, h) = (map.width, map.height);
    let mut out = Vec::with_capacity(w * h * 4 + 128);
    out.extend_from_slice(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n");
    out.extend_from_slice(format!("-Y {h} +X {w}\n").as_bytes());
    let use_rle = (8..32768).contains(&w);
    let mut channels = vec![vec![0u8; w]; 4];
    for row in 0..h {
        let pixels: Vec<[u8; 4]> = (0..w).map(|c| to_rgbe(map.texel(c, row))).collect();
        if !use_rle {
            for p in pixels {
                out.extend_from_slice(&p);
            }
            continue;
        }
        out.extend_from_slice(&[2, 2, (w >> 8) as u8, (w & 0xFF) as u8]);
        for (ch, buf) in channels.iter_mut().enumerate() {
            for (b, p) in buf.iter_mut().zip(&pixels) {
                *b = p[ch];
            }
            rle_channel(&mut out, buf);
        }
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Option<&'a str> {
        if self.pos >= self.data.len() {
            return None;
        }
        let rest = &self.data[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
        self.pos += (end + 1).min(rest.len());
        std::str::from_utf8(&rest[..end]).ok().map(|s| s.trim_end_matches('\r'))
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return None;
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }
}

fn read_scanline(cur: &mut Cursor, w: usize, row: usize) -> Result<Vec<[u8; 4]>, HdrError> {
    let trunc = || HdrError::TruncatedScanline(row);
    let head = cur.data.get(cur.pos..cur.pos + 4).ok_or_else(trunc)?;
    let new_rle = (8..32768).contains(&w) && head[0] == 2 && head[1] == 2 && head[2] & 0x80 == 0;
    if !new_rle {
        let raw = cur.take(4 * w).ok_or_else(trunc)?;
        return Ok(raw.chunks_exact(4).map(|p| [p[0], p[1], p[2], p[3]]).collect());
    }
    let len = ((head[2] as usize) << 8) | head[3] as usize;
    if len != w {
        return Err(HdrError::CorruptScanline(row));
    }
    cur.pos += 4;
    let mut px = vec![[0u8; 4]; w];
    for ch in 0..4 {
        let mut x = 0;
        while x < w {
            let count = cur.take(1).ok_or_else(trunc)?[0] as usize;
            if count > 128 {
                let n = count - 128;
                if x + n > w {
                    return Err(HdrError::CorruptScanline(row));
                }
                let v = cur.take(1).ok_or_else(trunc)?[0];
                for p in &mut px[x..x + n] {
                    p[ch] = v;
                }
                x += n;
            } else {
                if count == 0 || x + count > w {
                    return Err(HdrError::CorruptScanline(row));
                }
                let vals = cur.take(count).ok_or_else(trunc)?;
                for (p, &v) in px[x..x + count].iter_mut().zip(vals) {
                    p[ch] = v;
                }
                x += count;
            }
        }
    }
    Ok(px)
}

/// Decodes Radiance HDR bytes into an equirectangular map.
pub fn decode_hdr(bytes: &[u8], name: &str) -> Result<EnvMap, HdrError> {
    let mut cur = Cursor { data: bytes, pos: 0 };
    match cur.line() {
        Some(l) if l.starts_with("#?RADIANCE") || l.starts_with("#?RGBE") => {}
        _ => return Err(HdrError::BadMagic),
    }
    loop {
        let line = cur.line().ok_or(HdrError::TruncatedHeader)?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt != "32-bit_rle_rgbe" {
                return Err(HdrError::UnsupportedFormat(fmt.to_string()));
            }
        }
    }
    let res = cur.line().ok_or(HdrError::TruncatedHeader)?;
    let parts: Vec<&str> = res.split_whitespace().collect();
    let (h, w) = match parts.as_slice() {
        ["-Y", h, "+X", w] => match (h.parse::<usize>(), w.parse::<usize>()) {
            (Ok(h), Ok(w)) if h > 0 && w > 0 => (h, w),
            _ => return Err(HdrError::UnsupportedLayout(res.to_string())),
        },
        _ => return Err(HdrError::UnsupportedLayout(res.to_string())),
    };
    let mut radiance = Vec::with_capacity(w * h);
    for row in 0..h {
        radiance.extend(read_scanline(&mut cur, w, row)?.into_iter().map(from_rgbe));
    }
    Ok(EnvMap::new(w, h, radiance, name)?)
}

pub fn load_hdr(path: impl AsRef<Path>) -> Result<EnvMap, HdrError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| HdrError::Io { path: path.display().to_string(), source })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("hdr");
    decode_hdr(&bytes, name)
}

pub fn save_hdr(map: &EnvMap, path: impl AsRef<Path>) -> Result<(), HdrError> {
    let path = path.as_ref();
    std::fs::write(path, encode_hdr(map)).map_err(|source| HdrError::Io { path: path.display().to_string(), source })
}
