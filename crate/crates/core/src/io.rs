//! On-disk formats: raw little-endian f64 arrays with a one-line text
//! sidecar, and 16-bit PGM for visualization.
//!
//! An array `foo.f64` holds row-major doubles; `foo.meta` holds one line
//! with two integers. For images that line is `<width> <height>`; for
//! sinograms it is `<n_angles> <n_detectors>`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

fn meta_path(f64_path: &Path) -> PathBuf {
    f64_path.with_extension("meta")
}

/// Write a row-major f64 matrix and its `<dim0> <dim1>` sidecar.
pub fn write_f64_matrix(path: &Path, dim0: usize, dim1: usize, data: &[f64]) -> Result<()> {
    if data.len() != dim0 * dim1 {
        return Err(Error::shape(format!(
            "matrix {dim0} x {dim1} needs {} values, got {}",
            dim0 * dim1,
            data.len()
        )));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = meta_path(path);
    fs::write(&meta, format!("{dim0} {dim1}\n")).map_err(|e| Error::io(&meta, e))?;
    Ok(())
}

/// Read a matrix written by [`write_f64_matrix`]; returns (dim0, dim1, data).
pub fn read_f64_matrix(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let meta = meta_path(path);
    let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
    let mut it = text.split_whitespace();
    let parse = |s: Option<&str>| -> Result<usize> {
        s.and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::state(format!("malformed sidecar {}", meta.display())))
    };
    let dim0 = parse(it.next())?;
    let dim1 = parse(it.next())?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != dim0 * dim1 * 8 {
        return Err(Error::shape(format!(
            "{}: {} bytes do not match sidecar dims {dim0} x {dim1}",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim0, dim1, data))
}

/// Write a square image (sidecar `<width> <height>`).
pub fn write_image(path: &Path, image: &ImageGrid) -> Result<()> {
    write_f64_matrix(path, image.side(), image.side(), image.values())
}

/// Read a square image back.
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let (w, h, data) = read_f64_matrix(path)?;
    if w != h {
        return Err(Error::shape(format!("{}: {w} x {h} is not a square image", path.display())));
    }
    ImageGrid::new(w, data)
}

/// 16-bit binary PGM (P5), min-max scaled; big-endian samples per the
/// format. A constant array maps to all zeros.
pub fn write_pgm16(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::shape(format!(
            "pgm {width} x {height} needs {} values, got {}",
            width * height,
            data.len()
        )));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut bytes = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in data {
        let scaled = if span > 0.0 {
            (((v - lo) / span) * 65535.0).round() as u16
        } else {
            0
        };
        bytes.extend_from_slice(&scaled.to_be_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let dir = std::env::temp_dir().join(format!("gibbs_bps_io_{}", std::process::id()));
        let path = dir.join("sino.f64");
        let data = vec![1.5, -2.25, 0.0, f64::MIN_POSITIVE, 1e300, -0.125];
        write_f64_matrix(&path, 2, 3, &data).unwrap();
        let (d0, d1, back) = read_f64_matrix(&path).unwrap();
        assert_eq!((d0, d1), (2, 3));
        assert_eq!(back, data);
        // Bytes round-trip exactly.
        let raw = fs::read(&path).unwrap();
        write_f64_matrix(&path, 2, 3, &back).unwrap();
        assert_eq!(raw, fs::read(&path).unwrap());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn image_round_trip_and_shape_guard() {
        let dir = std::env::temp_dir().join(format!("gibbs_bps_io_img_{}", std::process::id()));
        let path = dir.join("img.f64");
        let img = ImageGrid::new(2, vec![0.0, 0.5, 1.0, -1.0]).unwrap();
        write_image(&path, &img).unwrap();
        assert_eq!(read_image(&path).unwrap(), img);

        write_f64_matrix(&path, 2, 3, &[0.0; 6]).unwrap();
        assert!(read_image(&path).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn pgm_header_and_scaling() {
        let dir = std::env::temp_dir().join(format!("gibbs_bps_io_pgm_{}", std::process::id()));
        let path = dir.join("img.pgm");
        write_pgm16(&path, 2, 2, &[0.0, 0.5, 1.0, 0.25]).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n65535\n"));
        let pixels = &bytes[bytes.len() - 8..];
        assert_eq!(u16::from_be_bytes([pixels[0], pixels[1]]), 0);
        assert_eq!(u16::from_be_bytes([pixels[4], pixels[5]]), 65535);
        fs::remove_dir_all(&dir).unwrap();
    }
}
