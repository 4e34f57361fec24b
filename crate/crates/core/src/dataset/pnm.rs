//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::fs;
use std::path::Path;

use super::DatasetError;
use crate::raster::{AnyImage, GrayImage, RgbImage};

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    body: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, DatasetError> {
    if bytes.len() < 2 {
        return Err(DatasetError::Truncated);
    }
    let magic = [bytes[0], bytes[1]];
    if !matches!(&magic, b"P5" | b"P6") {
        return Err(DatasetError::UnsupportedFormat(format!(
            "magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and comments before each header number.
        loop {
            match bytes.get(pos) {
                None => return Err(DatasetError::Truncated),
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(DatasetError::UnsupportedFormat("malformed header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DatasetError::UnsupportedFormat("header number out of range".into()))?;
    }
    if fields[2] != 255 {
        return Err(DatasetError::UnsupportedFormat(format!(
            "maxval {}",
            fields[2]
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        Some(_) => return Err(DatasetError::UnsupportedFormat("malformed header".into())),
        None => return Err(DatasetError::Truncated),
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        body: pos,
    })
}

fn body(bytes: &[u8], header: &Header, channels: usize) -> Result<Vec<u8>, DatasetError> {
    let need = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| DatasetError::UnsupportedFormat("dimensions overflow".into()))?;
    let data = &bytes[header.body..];
    if data.len() < need {
        return Err(DatasetError::Truncated);
    }
    Ok(data[..need].to_vec())
}

/// Decodes P5 or P6 bytes.
pub fn decode_pnm(bytes: &[u8]) -> Result<AnyImage, DatasetError> {
    let header = parse_header(bytes)?;
    Ok(match &header.magic {
        b"P5" => AnyImage::Gray(GrayImage::new(
            header.width,
            header.height,
            body(bytes, &header, 1)?,
        )?),
        _ => AnyImage::Rgb(RgbImage::new(
            header.width,
            header.height,
            body(bytes, &header, 3)?,
        )?),
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, DatasetError> {
    match decode_pnm(bytes)? {
        AnyImage::Gray(g) => Ok(g),
        AnyImage::Rgb(_) => Err(DatasetError::UnsupportedFormat(
            "expected P5, found P6".into(),
        )),
    }
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, encode_pgm(img)).map_err(|e| DatasetError::io(path, e))
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, encode_ppm(img)).map_err(|e| DatasetError::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, DatasetError> {
    decode_pgm(&fs::read(path).map_err(|e| DatasetError::io(path, e))?)
}

/// Reads a P5 or P6 file.
pub fn read_image(path: &Path) -> Result<AnyImage, DatasetError> {
    decode_pnm(&fs::read(path).map_err(|e| DatasetError::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn body_bytes_follow_header() {
        let img = GrayImage::new(2, 2, vec![0, 128, 200, 255]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0x00, 0x80, 0xC8, 0xFF]);
    }

    #[test]
    fn rejects_ascii_and_deep_formats() {
        assert!(matches!(
            decode_pgm(b"P2\n2 2\n255\n0 0 0 0"),
            Err(DatasetError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(DatasetError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x01\x02"),
            Err(DatasetError::Truncated)
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2"),
            Err(DatasetError::Truncated)
        ));
        assert!(matches!(
            decode_pgm(b"P6\n1 1\n255\n\x01\x02\x03"),
            Err(DatasetError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn reads_comments_and_color() {
        let g = decode_pgm(b"P5 # made by hand\n3 1 # size\n255\n\x05\x06\x07").unwrap();
        assert_eq!(g.data(), &[5, 6, 7]);
        let c = decode_pnm(b"P6\n1 1\n255\n\x01\x02\x03").unwrap();
        assert_eq!(
            c,
            AnyImage::Rgb(RgbImage::new(1, 1, vec![1, 2, 3]).unwrap())
        );
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8).unwrap();
        write_pgm(&img, &path).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
        assert!(matches!(
            read_pgm(&dir.path().join("missing.pgm")),
            Err(DatasetError::FileNotFound(_))
        ));
    }

    proptest! {
        #[test]
        fn pgm_round_trip((w, h, data) in (1usize..40, 1usize..40).prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h)))) {
            let img = GrayImage::new(w, h, data).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
