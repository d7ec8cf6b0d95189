//! Binary PNM codec: P5 (PGM) and P6 (PPM), maxval up to 255.

use super::ImageU8;
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn next(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some(&self.bytes[start..self.pos])
    }

    fn next_usize(&mut self) -> Option<usize> {
        std::str::from_utf8(self.next()?).ok()?.parse().ok()
    }
}

/// Decode a P5/P6 image from raw bytes.
pub fn read_pnm_bytes(bytes: &[u8], origin: &Path) -> Result<ImageU8> {
    let mut toks = Tokens::new(bytes);
    let magic = toks
        .next()
        .ok_or_else(|| Error::malformed(origin, "empty file"))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => {
            return Err(Error::malformed(
                origin,
                "not a binary PGM (P5) or PPM (P6) header",
            ))
        }
    };
    let width = toks
        .next_usize()
        .ok_or_else(|| Error::malformed(origin, "missing width"))?;
    let height = toks
        .next_usize()
        .ok_or_else(|| Error::malformed(origin, "missing height"))?;
    let maxval = toks
        .next_usize()
        .ok_or_else(|| Error::malformed(origin, "missing maxval"))?;
    if width == 0 || height == 0 {
        return Err(Error::malformed(origin, "zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::malformed(origin, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let raster_start = toks.pos + 1;
    let need = width * height * channels;
    if bytes.len() < raster_start + need {
        return Err(Error::malformed(origin, "truncated raster data"));
    }
    let mut data = bytes[raster_start..raster_start + need].to_vec();
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as usize * 255 + maxval / 2) / maxval).min(255) as u8;
        }
    }
    ImageU8::new(width, height, channels, data)
}

pub fn read_pnm(path: &Path) -> Result<ImageU8> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_pnm_bytes(&bytes, path)
}

fn write_pnm(path: &Path, img: &ImageU8, magic: &str) -> Result<()> {
    let mut out = Vec::with_capacity(img.data.len() + 32);
    write!(out, "{magic}\n{} {}\n255\n", img.width, img.height)
        .expect("write to vec cannot fail");
    out.extend_from_slice(&img.data);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a single-channel image as binary PGM.
pub fn write_pgm(path: &Path, img: &ImageU8) -> Result<()> {
    if img.channels != 1 {
        return Err(Error::UnsupportedImage("PGM output requires 1 channel".into()));
    }
    write_pnm(path, img, "P5")
}

/// Write a 3-channel image as binary PPM.
pub fn write_ppm(path: &Path, img: &ImageU8) -> Result<()> {
    if img.channels != 3 {
        return Err(Error::UnsupportedImage("PPM output requires 3 channels".into()));
    }
    write_pnm(path, img, "P6")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_known_ppm_bytes() {
        // 2x2 all-red PPM.
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 255, 0, 0, 255, 0, 0, 255, 0, 0]);
        let img = read_pnm_bytes(&bytes, Path::new("test.ppm")).unwrap();
        assert_eq!((img.width, img.height, img.channels), (2, 2, 3));
        assert_eq!(&img.data[..3], &[255, 0, 0]);
    }

    #[test]
    fn truncated_file_is_malformed() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0]); // 9 bytes short
        let err = read_pnm_bytes(&bytes, Path::new("test.ppm")).unwrap_err();
        assert!(err.to_string().contains("malformed"), "{err}");
    }

    #[test]
    fn comments_and_odd_whitespace_parse() {
        let mut bytes = b"P5 # magic\n# a comment line\n 3\t1 # dims\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 8, 9]);
        let img = read_pnm_bytes(&bytes, Path::new("t.pgm")).unwrap();
        assert_eq!((img.width, img.height, img.channels), (3, 1, 1));
        assert_eq!(img.data, vec![7, 8, 9]);
    }

    #[test]
    fn roundtrip_640x480() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.ppm");
        let img = ImageU8::filled(640, 480, 3, 40);
        write_ppm(&path, &img).unwrap();
        let back = read_pnm(&path).unwrap();
        assert_eq!((back.width, back.height), (640, 480));
        assert_eq!(back, img);
    }

    #[test]
    fn maxval_rescale() {
        let mut bytes = b"P5\n2 1\n3\n".to_vec();
        bytes.extend_from_slice(&[0, 3]);
        let img = read_pnm_bytes(&bytes, Path::new("t.pgm")).unwrap();
        assert_eq!(img.data, vec![0, 255]);
    }
}
