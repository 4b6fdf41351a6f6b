//! 8-bit RGB images, PNG I/O and PFM float output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {message}")]
    Decode { path: String, message: String },
    #[error("cannot encode PNG: {0}")]
    Encode(String),
    #[error("pixel buffer has {got} bytes, expected {expected}")]
    Size { got: usize, expected: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImageError + '_ {
    move |source| ImageError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, 3 bytes per pixel, top row first.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<RgbImage, ImageError> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(ImageError::Size { got: data.len(), expected });
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> RgbImage {
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        RgbImage { width, height, data }
    }

    pub fn mean_byte(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&b| b as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| ImageError::Encode(e.to_string()))?;
            w.write_image_data(&self.data).map_err(|e| ImageError::Encode(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(io_err(path))
    }

    /// Reads an 8-bit PNG as RGB; gray and alpha channels are expanded or
    /// dropped.
    pub fn read_png(path: impl AsRef<Path>) -> Result<RgbImage, ImageError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let decode_err = |message: String| ImageError::Decode { path: path.display().to_string(), message };
        let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
        dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = dec.read_info().map_err(|e| decode_err(e.to_string()))?;
        let size = reader.output_buffer_size().ok_or_else(|| decode_err("image too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(|e| decode_err(e.to_string()))?;
        let px = info.width as usize * info.height as usize;
        let data = match info.color_type {
            png::ColorType::Rgb => buf[..px * 3].to_vec(),
            png::ColorType::Rgba => buf[..px * 4].chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
            png::ColorType::Grayscale => buf[..px].iter().flat_map(|&g| [g, g, g]).collect(),
            png::ColorType::GrayscaleAlpha => buf[..px * 2].chunks_exact(2).flat_map(|p| [p[0], p[0], p[0]]).collect(),
            png::ColorType::Indexed => return Err(decode_err("unexpanded palette image".into())),
        };
        Ok(RgbImage { width: info.width, height: info.height, data })
    }
}

/// Little-endian `PF` float image, rows stored bottom to top.
pub fn encode_pfm(width: u32, height: u32, linear: &[Vec3]) -> Vec<u8> {
    let mut out = format!("PF\n{width} {height}\n-1.0\n").into_bytes();
    for row in (0..height as usize).rev() {
        for c in &linear[row * width as usize..(row + 1) * width as usize] {
            for k in 0..3 {
                out.extend_from_slice(&(c[k] as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn write_pfm(path: impl AsRef<Path>, width: u32, height: u32, linear: &[Vec3]) -> Result<(), ImageError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_pfm(width, height, linear)).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
