use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgcore::Image;

use super::SrLossError;

/// Dense single-channel feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Deterministic image -> feature map transform.
pub trait FeatureExtractor {
    fn extract(&self, img: &Image) -> Result<FeatureMap, SrLossError>;
}

/// Pixels as features.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityExtractor;

impl FeatureExtractor for IdentityExtractor {
    fn extract(&self, img: &Image) -> Result<FeatureMap, SrLossError> {
        Ok(FeatureMap {
            width: img.width(),
            height: img.height(),
            data: img.data().to_vec(),
        })
    }
}

/// One 3x3 kernel (row-major, correlation order) plus bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvLayer {
    pub kernel: [f64; 9],
    pub bias: f64,
}

/// Stack of valid 3x3 convolutions, each followed by ReLU. Each layer
/// shrinks the map by 2 in both dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStack {
    layers: Vec<ConvLayer>,
}

impl ConvStack {
    /// Weights and biases drawn uniformly from `[-0.5, 0.5)` by a ChaCha8
    /// stream seeded with `seed`: for each layer, nine kernel weights then
    /// the bias.
    pub fn seeded(seed: u64, depth: usize) -> Result<Self, SrLossError> {
        if depth == 0 {
            return Err(SrLossError::Depth);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5;
        let layers = (0..depth)
            .map(|_| {
                let mut kernel = [0.0; 9];
                kernel.iter_mut().for_each(|k| *k = draw());
                ConvLayer {
                    kernel,
                    bias: draw(),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<ConvLayer>) -> Result<Self, SrLossError> {
        if layers.is_empty() {
            return Err(SrLossError::Depth);
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }
}

impl FeatureExtractor for ConvStack {
    fn extract(&self, img: &Image) -> Result<FeatureMap, SrLossError> {
        let mut map = IdentityExtractor.extract(img)?;
        for layer in &self.layers {
            if map.width < 3 || map.height < 3 {
                return Err(SrLossError::TooSmall {
                    depth: self.layers.len(),
                    width: img.width(),
                    height: img.height(),
                });
            }
            let (w, h) = (map.width - 2, map.height - 2);
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let mut acc = layer.bias;
                    for ky in 0..3 {
                        for kx in 0..3 {
                            acc +=
                                layer.kernel[ky * 3 + kx] * map.data[(y + ky) * map.width + x + kx];
                        }
                    }
                    out.push(acc.max(0.0));
                }
            }
            map = FeatureMap {
                width: w,
                height: h,
                data: out,
            };
        }
        Ok(map)
    }
}
