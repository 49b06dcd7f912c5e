//! Raster and field containers shared by every other module, plus the PGM
//! and VF1 codecs.
//!
//! All containers are row-major and immutable once built. Constructors
//! validate the invariants so downstream code never has to re-check them.

mod pgm;
mod vf1;

pub use pgm::{decode_image, encode_image};
pub use vf1::{decode_field, decode_scalar_field, encode_field, encode_scalar_field};

use thiserror::Error;

/// Default intensity ceiling for 8-bit images.
pub const DEFAULT_MAX_VALUE: u16 = 255;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("max_value must be at least 1")]
    ZeroMaxValue,
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample {index} = {value} is outside [0, {max_value}]")]
    OutOfRange {
        index: usize,
        value: f64,
        max_value: u16,
    },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("channel count {0} not supported (expected 2 or 3)")]
    BadChannels(usize),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: usize, reason: String },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing data: {0} unexpected bytes after payload")]
    Trailing(usize),
    #[error(transparent)]
    Invalid(#[from] ImageError),
}

/// A 2-D grayscale image with real-valued intensities in `[0, max_value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    max_value: u16,
    data: Vec<f64>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        max_value: u16,
        data: Vec<f64>,
    ) -> Result<Self, ImageError> {
        check_dims(width, height)?;
        if max_value == 0 {
            return Err(ImageError::ZeroMaxValue);
        }
        check_len(width * height, data.len())?;
        let max = f64::from(max_value);
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(ImageError::NonFinite { index });
            }
            if !(0.0..=max).contains(&value) {
                return Err(ImageError::OutOfRange {
                    index,
                    value,
                    max_value,
                });
            }
        }
        Ok(Self {
            width,
            height,
            max_value,
            data,
        })
    }

    /// Builds an image from arbitrary finite samples, clamping into range.
    pub fn from_clamped(
        width: usize,
        height: usize,
        max_value: u16,
        mut data: Vec<f64>,
    ) -> Result<Self, ImageError> {
        let max = f64::from(max_value);
        for v in data.iter_mut() {
            if v.is_finite() {
                *v = v.clamp(0.0, max);
            }
        }
        Self::new(width, height, max_value, data)
    }

    pub fn filled(
        width: usize,
        height: usize,
        max_value: u16,
        value: f64,
    ) -> Result<Self, ImageError> {
        Self::new(width, height, max_value, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn max_value(&self) -> u16 {
        self.max_value
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Dense per-pixel displacement field in pixel units.
///
/// Components are interleaved per pixel: `(u_x, u_y)` or `(u_x, u_y, u_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ImageError> {
        check_dims(width, height)?;
        if channels != 2 && channels != 3 {
            return Err(ImageError::BadChannels(channels));
        }
        check_len(width * height * channels, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            channels,
            vec![0.0; width * height * channels],
        )
    }

    /// Samples `f(x, y)` at every pixel.
    pub fn from_fn<F>(width: usize, height: usize, f: F) -> Result<Self, ImageError>
    where
        F: Fn(f64, f64) -> [f64; 2],
    {
        let mut data = Vec::with_capacity(width * height * 2);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x as f64, y as f64));
            }
        }
        Self::new(width, height, 2, data)
    }

    /// Splits two separate component planes into an interleaved 2-channel field.
    pub fn from_planes(
        width: usize,
        height: usize,
        ux: &[f64],
        uy: &[f64],
    ) -> Result<Self, ImageError> {
        check_len(width * height, ux.len())?;
        check_len(width * height, uy.len())?;
        let data = ux.iter().zip(uy).flat_map(|(&a, &b)| [a, b]).collect();
        Self::new(width, height, 2, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Copies out one component as a plane.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Dense per-pixel scalar map (Jacobian determinants, planar curl, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        check_dims(width, height)?;
        check_len(width * height, data.len())?;
        check_finite(&data)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

fn check_dims(width: usize, height: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions { width, height });
    }
    Ok(())
}

fn check_len(expected: usize, actual: usize) -> Result<(), ImageError> {
    if expected != actual {
        return Err(ImageError::LengthMismatch { expected, actual });
    }
    Ok(())
}

fn check_finite(data: &[f64]) -> Result<(), ImageError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(ImageError::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_same_dims(
    left: (usize, usize),
    right: (usize, usize),
) -> Result<(), ImageError> {
    if left != right {
        return Err(ImageError::DimensionMismatch { left, right });
    }
    Ok(())
}
