use crate::imgcore::{ensure_same_dims, Image};

use super::{register, warp, RegParams, RegistrationError};

/// Iterative template construction: start from the pixelwise mean, then
/// repeatedly register every image to the current template, warp it, and
/// average the warped images.
pub fn build_atlas(
    images: &[Image],
    p: &RegParams,
    rounds: usize,
) -> Result<Image, RegistrationError> {
    let first = images.first().ok_or(RegistrationError::NoImages)?;
    if rounds < 1 {
        return Err(RegistrationError::InvalidParams("rounds must be >= 1"));
    }
    p.validate()?;
    for img in &images[1..] {
        ensure_same_dims(first.dims(), img.dims())?;
    }
    let mut template = mean_image(images.iter(), first)?;
    for _ in 0..rounds {
        let warped = images
            .iter()
            .map(|img| register(&template, img, p).and_then(|u| warp(img, &u)))
            .collect::<Result<Vec<_>, _>>()?;
        template = mean_image(warped.iter(), first)?;
    }
    Ok(template)
}

fn mean_image<'a>(
    images: impl ExactSizeIterator<Item = &'a Image>,
    like: &Image,
) -> Result<Image, RegistrationError> {
    let n = images.len() as f64;
    let mut sum = vec![0.0; like.data().len()];
    for img in images {
        for (s, v) in sum.iter_mut().zip(img.data()) {
            *s += v;
        }
    }
    let data = sum.into_iter().map(|s| s / n).collect();
    Ok(Image::from_clamped(
        like.width(),
        like.height(),
        like.max_value(),
        data,
    )?)
}
