//! PGM (netpbm grayscale) codec: P2 and P5 in, canonical P5 out.

use super::{FormatError, Image};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn header_err(&self, reason: impl Into<String>) -> FormatError {
        FormatError::Header {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    /// Skips whitespace and `#` comments (a comment runs to end of line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u32, FormatError> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u32::from(b - b'0')))
                .ok_or_else(|| self.header_err(format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                self.header_err(format!("unexpected end of data reading {what}"))
            } else {
                self.header_err(format!("expected decimal {what}"))
            });
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !(b.is_ascii_whitespace() || b == b'#') {
                return Err(self.header_err(format!("unexpected byte 0x{b:02x} after {what}")));
            }
        }
        Ok(value)
    }
}

/// Decodes a P2 (ASCII) or P5 (binary) PGM file.
pub fn decode_image(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(cur.header_err("expected magic P2 or P5")),
    };
    cur.pos = 2;
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(cur.header_err("magic must be followed by whitespace")),
    }

    let width = cur.read_uint("width")? as usize;
    let height = cur.read_uint("height")? as usize;
    let maxval_offset = cur.pos;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::Header {
            offset: maxval_offset,
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::Header {
            offset: maxval_offset,
            reason: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    let max_value = maxval as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.header_err("dimensions overflow"))?;

    let data = if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(cur.header_err("maxval must be followed by a single whitespace byte")),
        }
        let bpp = if maxval <= 255 { 1 } else { 2 };
        let payload = &bytes[cur.pos..];
        let expected = count
            .checked_mul(bpp)
            .ok_or_else(|| cur.header_err("dimensions overflow"))?;
        if payload.len() < expected {
            return Err(FormatError::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(FormatError::Trailing(payload.len() - expected));
        }
        let raw: Vec<u32> = if bpp == 1 {
            payload.iter().map(|&b| u32::from(b)).collect()
        } else {
            payload
                .chunks_exact(2)
                .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        };
        for (i, &v) in raw.iter().enumerate() {
            if v > maxval {
                return Err(FormatError::Header {
                    offset: cur.pos + i * bpp,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
        }
        raw.into_iter().map(f64::from).collect()
    } else {
        let mut data = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let offset = cur.pos;
            let v = match cur.read_uint("sample") {
                Ok(v) => v,
                Err(FormatError::Header { reason, .. }) if reason.starts_with("unexpected end") => {
                    return Err(FormatError::Truncated {
                        expected: count,
                        found: data.len(),
                    });
                }
                Err(e) => return Err(e),
            };
            if v > maxval {
                return Err(FormatError::Header {
                    offset,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            data.push(f64::from(v));
        }
        cur.skip_separators();
        if cur.pos < bytes.len() {
            return Err(FormatError::Trailing(bytes.len() - cur.pos));
        }
        data
    };
    Ok(Image::new(width, height, max_value, data)?)
}

/// Encodes canonical P5; samples are rounded half-up.
pub fn encode_image(img: &Image) -> Vec<u8> {
    let header = format!(
        "P5\n{} {}\n{}\n",
        img.width(),
        img.height(),
        img.max_value()
    );
    let max = f64::from(img.max_value());
    let wide = img.max_value() > 255;
    let mut out = Vec::with_capacity(header.len() + img.data().len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    for &v in img.data() {
        let q = (v + 0.5).floor().clamp(0.0, max) as u16;
        if wide {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_ascii() {
        let img = decode_image(b"P2 2 2 255 0 128 255 64").unwrap();
        assert_eq!(img.dims(), (2, 2));
        assert_eq!(img.max_value(), 255);
        assert_eq!(img.data(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn ascii_with_comments() {
        let img = decode_image(b"P2\n# made by hand\n2 1\n# max\n10\n3 # first\n 7\n").unwrap();
        assert_eq!(img.data(), &[3.0, 7.0]);
    }

    #[test]
    fn smallest_image_encoding() {
        let img = Image::new(1, 1, 255, vec![0.0]).unwrap();
        assert_eq!(encode_image(&img), b"P5\n1 1\n255\n\x00");
    }

    #[test]
    fn extremes_encoding() {
        let img = Image::new(2, 1, 255, vec![255.0, 0.0]).unwrap();
        assert_eq!(&encode_image(&img)[11..], &[0xFF, 0x00]);
    }

    #[test]
    fn half_up_rounding() {
        let img = Image::new(3, 1, 255, vec![0.5, 1.49, 254.5]).unwrap();
        assert_eq!(&encode_image(&img)[11..], &[1, 1, 255]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let img = Image::new(1, 1, 1000, vec![258.0]).unwrap();
        let bytes = encode_image(&img);
        assert_eq!(&bytes[bytes.len() - 2..], &[0x01, 0x02]);
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(
            decode_image(b"P7\n1 1\n255\n\x00"),
            Err(FormatError::Header { offset: 0, .. })
        ));
        assert!(decode_image(b"").is_err());
    }

    #[test]
    fn truncated_payloads() {
        assert_eq!(
            decode_image(b"P5\n2 2\n255\n\x00\x01\x02"),
            Err(FormatError::Truncated {
                expected: 4,
                found: 3
            })
        );
        assert!(matches!(
            decode_image(b"P2 2 2 255 1 2 3"),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn sample_above_maxval() {
        assert!(decode_image(b"P5\n1 1\n100\n\xC8").is_err());
        assert!(decode_image(b"P2 1 1 100 101").is_err());
    }

    #[test]
    fn maxval_limits() {
        assert!(decode_image(b"P2 1 1 0 0").is_err());
        assert!(decode_image(b"P2 1 1 65536 0").is_err());
    }

    fn arb_image() -> impl Strategy<Value = Image> {
        (
            1usize..9,
            1usize..9,
            prop_oneof![Just(255u16), Just(65535u16), 1u16..2000],
        )
            .prop_flat_map(|(w, h, max)| {
                proptest::collection::vec(0..=max, w * h).prop_map(move |v| {
                    Image::new(w, h, max, v.into_iter().map(f64::from).collect()).unwrap()
                })
            })
    }

    proptest! {
        #[test]
        fn p5_round_trip(img in arb_image()) {
            let bytes = encode_image(&img);
            let back = decode_image(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(encode_image(&back), bytes);
        }

        #[test]
        fn real_samples_round_half_up(w in 1usize..6, h in 1usize..6, seed in proptest::collection::vec(0.0f64..=255.0, 36)) {
            let data: Vec<f64> = seed[..w * h].to_vec();
            let img = Image::new(w, h, 255, data.clone()).unwrap();
            let back = decode_image(&encode_image(&img)).unwrap();
            for (a, b) in data.iter().zip(back.data()) {
                prop_assert_eq!((a + 0.5).floor(), *b);
            }
        }

        // With every sample at maxval, any header corruption is either
        // rejected or is a whitespace-for-whitespace swap that reads the
        // same image.
        #[test]
        fn header_corruption_is_detected(w in 1usize..12, h in 1usize..12, pos in 0usize..64, byte in any::<u8>()) {
            let img = Image::filled(w, h, 255, 255.0).unwrap();
            let mut bytes = encode_image(&img);
            let header_len = bytes.len() - w * h;
            let pos = pos % header_len;
            prop_assume!(bytes[pos] != byte);
            let original = bytes[pos];
            bytes[pos] = byte;
            match decode_image(&bytes) {
                Err(_) => {}
                Ok(read) => {
                    prop_assert!(original.is_ascii_whitespace() && byte.is_ascii_whitespace());
                    prop_assert_eq!(read, img);
                }
            }
        }
    }
}
