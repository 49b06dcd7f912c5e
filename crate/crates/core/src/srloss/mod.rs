//! Super-resolution loss terms evaluated on fixed inputs: the adversarial
//! min-max objective, the feature-space reconstruction loss, the curl-map
//! loss, and the 4x block-mean degradation used to make low-resolution
//! inputs.

mod features;

pub use features::{ConvLayer, ConvStack, FeatureExtractor, FeatureMap, IdentityExtractor};

use thiserror::Error;

use crate::geometry::{curl, Curl, GeometryError};
use crate::imgcore::{ensure_same_dims, Image, ImageError};
use crate::registration::{register, RegParams, RegistrationError};

/// Lower clamp applied inside the logarithms of the adversarial objective.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SrLossError {
    #[error("dimensions {width}x{height} are not divisible by 4")]
    NotDivisible { width: usize, height: usize },
    #[error("{0} probability list is empty")]
    Empty(&'static str),
    #[error("{list}[{index}] = {value} is outside [0, 1]")]
    Probability {
        list: &'static str,
        index: usize,
        value: f64,
    },
    #[error("feature maps differ in shape: {0:?} vs {1:?}")]
    FeatureShape((usize, usize), (usize, usize)),
    #[error("convolution stack needs depth >= 1")]
    Depth,
    #[error("a {width}x{height} image is too small for {depth} valid 3x3 convolutions")]
    TooSmall {
        depth: usize,
        width: usize,
        height: usize,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Mean of each 4x4 block.
pub fn downsample4x(img: &Image) -> Result<Image, SrLossError> {
    let (w, h) = img.dims();
    if w % 4 != 0 || h % 4 != 0 {
        return Err(SrLossError::NotDivisible {
            width: w,
            height: h,
        });
    }
    let (ow, oh) = (w / 4, h / 4);
    let mut data = Vec::with_capacity(ow * oh);
    for by in 0..oh {
        for bx in 0..ow {
            let mut sum = 0.0;
            for y in 4 * by..4 * by + 4 {
                for x in 4 * bx..4 * bx + 4 {
                    sum += img.get(x, y);
                }
            }
            data.push(sum / 16.0);
        }
    }
    Ok(Image::new(ow, oh, img.max_value(), data)?)
}

fn check_probabilities(list: &'static str, values: &[f64]) -> Result<(), SrLossError> {
    if values.is_empty() {
        return Err(SrLossError::Empty(list));
    }
    match values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(SrLossError::Probability {
            list,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// `mean(ln D(real)) + mean(ln(1 - D(fake)))`, natural log, with both
/// arguments clamped below at [`LOG_EPSILON`]. The discriminator maximizes
/// this and the generator minimizes it.
pub fn adversarial_objective(d_real: &[f64], d_fake: &[f64]) -> Result<f64, SrLossError> {
    check_probabilities("d_real", d_real)?;
    check_probabilities("d_fake", d_fake)?;
    let log = |v: f64| v.clamp(LOG_EPSILON, 1.0).ln();
    let real = d_real.iter().map(|&d| log(d)).sum::<f64>() / d_real.len() as f64;
    let fake = d_fake.iter().map(|&d| log(1.0 - d)).sum::<f64>() / d_fake.len() as f64;
    Ok(real + fake)
}

/// Mean squared difference between two feature maps of equal shape.
pub fn feature_map_mse(a: &FeatureMap, b: &FeatureMap) -> Result<f64, SrLossError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(SrLossError::FeatureShape(
            (a.width, a.height),
            (b.width, b.height),
        ));
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    Ok(sum / (a.width * a.height) as f64)
}

/// Feature-space reconstruction loss between a reference and a
/// reconstruction. With [`IdentityExtractor`] this is the pixel MSE.
pub fn feature_loss(
    hr: &Image,
    sr: &Image,
    phi: &dyn FeatureExtractor,
) -> Result<f64, SrLossError> {
    ensure_same_dims(hr.dims(), sr.dims())?;
    feature_map_mse(&phi.extract(hr)?, &phi.extract(sr)?)
}

/// Curl map of an image: the planar curl of the displacement field that
/// registers `img` onto `reference`.
pub fn curl_map(img: &Image, reference: &Image, p: &RegParams) -> Result<FeatureMap, SrLossError> {
    let field = register(reference, img, p)?;
    match curl(&field)? {
        Curl::Scalar(s) => Ok(FeatureMap {
            width: s.width(),
            height: s.height(),
            data: s.data().to_vec(),
        }),
        Curl::Vector(_) => unreachable!("registration fields are planar"),
    }
}

/// Mean squared difference of the curl maps of `hr` and `sr`, both taken
/// against the same `reference`.
pub fn cv_loss(
    hr: &Image,
    sr: &Image,
    reference: &Image,
    p: &RegParams,
) -> Result<f64, SrLossError> {
    ensure_same_dims(hr.dims(), sr.dims())?;
    ensure_same_dims(hr.dims(), reference.dims())?;
    feature_map_mse(&curl_map(hr, reference, p)?, &curl_map(sr, reference, p)?)
}
