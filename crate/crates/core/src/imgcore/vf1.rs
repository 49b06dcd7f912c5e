//! VF1 field container.
//!
//! Layout: the ASCII line `VF1 <width> <height> <channels>\n` followed by
//! `width * height * channels` little-endian IEEE-754 `f32` values, row-major
//! with channels interleaved per pixel. Vector fields use 2 or 3 channels;
//! scalar fields are stored in the same container with 1 channel.

use super::{FormatError, ImageError, ScalarField, VectorField};

const MAX_HEADER: usize = 64;

struct Header {
    width: usize,
    height: usize,
    channels: usize,
    payload_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, FormatError> {
    if !bytes.starts_with(b"VF1 ") {
        return Err(FormatError::Header {
            offset: 0,
            reason: "expected magic \"VF1 \"".into(),
        });
    }
    let newline = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::Header {
            offset: bytes.len().min(MAX_HEADER),
            reason: "header line not terminated".into(),
        })?;

    let mut fields = [0usize; 3];
    let mut offset = 4;
    let line = &bytes[4..newline];
    let mut parts = line.split(|&b| b == b' ');
    for (i, name) in ["width", "height", "channels"].iter().enumerate() {
        let part = parts.next().ok_or_else(|| FormatError::Header {
            offset,
            reason: format!("missing {name}"),
        })?;
        if part.is_empty() || part.len() > 9 || !part.iter().all(u8::is_ascii_digit) {
            return Err(FormatError::Header {
                offset,
                reason: format!("{name} is not a decimal integer"),
            });
        }
        // Digits only, at most 9 of them: cannot fail or overflow.
        fields[i] = std::str::from_utf8(part).unwrap().parse().unwrap();
        offset += part.len() + 1;
    }
    if parts.next().is_some() {
        return Err(FormatError::Header {
            offset,
            reason: "unexpected extra header field".into(),
        });
    }
    let [width, height, channels] = fields;
    if width == 0 || height == 0 {
        return Err(FormatError::Header {
            offset: 4,
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    Ok(Header {
        width,
        height,
        channels,
        payload_start: newline + 1,
    })
}

fn read_payload(bytes: &[u8], header: &Header) -> Result<Vec<f64>, FormatError> {
    let payload = &bytes[header.payload_start..];
    let expected = header.width * header.height * header.channels * 4;
    if payload.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(FormatError::Trailing(payload.len() - expected));
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect())
}

fn write(width: usize, height: usize, channels: usize, data: &[f64]) -> Vec<u8> {
    let header = format!("VF1 {width} {height} {channels}\n");
    let mut out = Vec::with_capacity(header.len() + data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for &v in data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<VectorField, FormatError> {
    let header = parse_header(bytes)?;
    if header.channels != 2 && header.channels != 3 {
        return Err(ImageError::BadChannels(header.channels).into());
    }
    let data = read_payload(bytes, &header)?;
    Ok(VectorField::new(
        header.width,
        header.height,
        header.channels,
        data,
    )?)
}

/// Components are narrowed to `f32`; decoded fields re-encode bit-exactly.
pub fn encode_field(field: &VectorField) -> Vec<u8> {
    write(
        field.width(),
        field.height(),
        field.channels(),
        field.data(),
    )
}

pub fn decode_scalar_field(bytes: &[u8]) -> Result<ScalarField, FormatError> {
    let header = parse_header(bytes)?;
    if header.channels != 1 {
        return Err(FormatError::Header {
            offset: 4,
            reason: format!("scalar field needs 1 channel, got {}", header.channels),
        });
    }
    let data = read_payload(bytes, &header)?;
    Ok(ScalarField::new(header.width, header.height, data)?)
}

pub fn encode_scalar_field(field: &ScalarField) -> Vec<u8> {
    write(field.width(), field.height(), 1, field.data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vf1(header: &str, values: &[f32]) -> Vec<u8> {
        let mut b = header.as_bytes().to_vec();
        for v in values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn decodes_direct_transcription() {
        let f = decode_field(&vf1("VF1 2 1 2\n", &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(f.dims(), (2, 1));
        assert_eq!(f.channels(), 2);
        assert_eq!(f.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn truncated_payload() {
        assert_eq!(
            decode_field(&vf1("VF1 2 2 2\n", &[0.0; 3])),
            Err(FormatError::Truncated {
                expected: 32,
                found: 12
            })
        );
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(
            decode_field(&vf1("VF2 1 1 2\n", &[0.0; 2])),
            Err(FormatError::Header { .. })
        ));
        assert!(matches!(
            decode_field(&vf1("VF1 1 1 4\n", &[0.0; 4])),
            Err(FormatError::Invalid(ImageError::BadChannels(4)))
        ));
        assert!(decode_field(&vf1("VF1 1 1\n", &[0.0; 2])).is_err());
        assert!(decode_field(&vf1("VF1 1  1 2\n", &[0.0; 2])).is_err());
        assert!(decode_field(&vf1("VF1 1 1 2 \n", &[0.0; 2])).is_err());
        assert!(decode_field(&vf1("VF1 1 1 2\n", &[0.0, f32::NAN])).is_err());
        assert!(decode_field(&vf1("VF1 1 1 2\n", &[0.0; 3])).is_err());
    }

    #[test]
    fn scalar_variant() {
        let s = ScalarField::new(2, 1, vec![1.5, -2.0]).unwrap();
        let bytes = encode_scalar_field(&s);
        assert!(bytes.starts_with(b"VF1 2 1 1\n"));
        assert_eq!(decode_scalar_field(&bytes).unwrap(), s);
        assert!(decode_field(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(w in 1usize..6, h in 1usize..6, c in 2usize..4, bits in proptest::collection::vec(any::<u32>(), 75)) {
            let values: Vec<f32> = bits[..w * h * c]
                .iter()
                .map(|&b| f32::from_bits(b))
                .map(|v| if v.is_finite() { v } else { 0.5 })
                .collect();
            let bytes = vf1(&format!("VF1 {w} {h} {c}\n"), &values);
            let field = decode_field(&bytes).unwrap();
            prop_assert_eq!(encode_field(&field), bytes);
            prop_assert_eq!(decode_field(&encode_field(&field)).unwrap(), field);
        }

        #[test]
        fn header_corruption_never_misreads(pos in 0usize..10, byte in any::<u8>()) {
            let bytes = vf1("VF1 2 2 2\n", &[1.0; 8]);
            let mut bad = bytes.clone();
            prop_assume!(bad[pos] != byte);
            bad[pos] = byte;
            prop_assert!(decode_field(&bad).is_err());
        }
    }
}
