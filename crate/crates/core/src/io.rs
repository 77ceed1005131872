//! 8-bit image file I/O: PNG plus binary PPM/PGM.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use crate::error::{Error, Result};
use crate::image::Image;

fn codec_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::ImageCodec {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Read an 8-bit PNG/PPM/PGM file into a planar `[0,1]` image.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path).map_err(|e| io_err(path, e))?;
    let decoded = reader.decode().map_err(|e| codec_err(path, e))?;
    let (channels, h, w, bytes): (usize, u32, u32, Vec<u8>) = match decoded {
        DynamicImage::ImageLuma8(buf) => (1, buf.height(), buf.width(), buf.into_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            let g = DynamicImage::ImageLumaA8(buf).to_luma8();
            (1, g.height(), g.width(), g.into_raw())
        }
        DynamicImage::ImageRgb8(buf) => (3, buf.height(), buf.width(), buf.into_raw()),
        DynamicImage::ImageRgba8(buf) => {
            let rgb = DynamicImage::ImageRgba8(buf).to_rgb8();
            (3, rgb.height(), rgb.width(), rgb.into_raw())
        }
        other => {
            return Err(codec_err(
                path,
                format!(
                    "unsupported pixel format {:?} (8-bit gray or RGB only)",
                    other.color()
                ),
            ))
        }
    };
    let (h, w) = (h as usize, w as usize);
    // interleaved u8 -> planar f64 in [0,1]
    let mut data = vec![0.0f64; channels * h * w];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                data[(c * h + y) * w + x] = bytes[(y * w + x) * channels + c] as f64 / 255.0;
            }
        }
    }
    Image::from_data(channels, h, w, data)
}

fn to_bytes(img: &Image) -> Vec<u8> {
    let (c, h, w) = (img.channels(), img.height(), img.width());
    let mut bytes = vec![0u8; c * h * w];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = img.get(ch, y, x).clamp(0.0, 1.0);
                bytes[(y * w + x) * c + ch] = (v * 255.0).round() as u8;
            }
        }
    }
    bytes
}

/// Write an image as 8-bit PNG, binary PPM (3 channel) or binary PGM
/// (1 channel), chosen by the file extension.
pub fn write_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let bytes = to_bytes(img);
    let (w, h) = (img.width() as u32, img.height() as u32);
    let color = if img.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    match ext.as_str() {
        "png" => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            image::codecs::png::PngEncoder::new(BufWriter::new(file))
                .write_image(&bytes, w, h, color)
                .map_err(|e| codec_err(path, e))
        }
        "ppm" | "pgm" => {
            let subtype = match (ext.as_str(), img.channels()) {
                ("ppm", 3) => PnmSubtype::Pixmap(SampleEncoding::Binary),
                ("pgm", 1) => PnmSubtype::Graymap(SampleEncoding::Binary),
                (e, c) => {
                    return Err(Error::invalid(format!(
                        "cannot write a {c}-channel image as .{e}"
                    )))
                }
            };
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            PnmEncoder::new(BufWriter::new(file))
                .with_subtype(subtype)
                .write_image(&bytes, w, h, color)
                .map_err(|e| codec_err(path, e))
        }
        other => Err(Error::invalid(format!(
            "unsupported output extension '.{other}' (png, ppm, pgm)"
        ))),
    }
}
