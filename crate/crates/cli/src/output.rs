use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sandstone::lattice::write_pgm;

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

pub fn is_png(path: &Path) -> bool {
    has_ext(path, "png")
}

pub fn is_csv(path: &Path) -> bool {
    has_ext(path, "csv")
}

pub fn is_json(path: &Path) -> bool {
    has_ext(path, "json")
}

/// 8-bit grayscale, PNG for a .png path and binary P5 otherwise.
pub fn write_gray(path: &Path, width: usize, height: usize, data: &[u8]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if is_png(path) {
        let mut enc = png::Encoder::new(&mut w, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(io::Error::other)?;
        writer.write_image_data(data).map_err(io::Error::other)?;
        writer.finish().map_err(io::Error::other)?;
    } else {
        write_pgm(&mut w, width, height, data)?;
    }
    w.flush()
}
