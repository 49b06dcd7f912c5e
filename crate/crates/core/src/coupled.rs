//! Generate, evaluate, penalize: candidates are produced, scored against a
//! reference by PSNR and SSIM, and the producer's adjustable parameter is
//! scaled down after every rejection.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::imgcore::{ensure_same_dims, Image, ImageError};
use crate::metrics::{image_quality, MetricsError};
use crate::report::{RunReport, Status};

#[derive(Debug, Error)]
pub enum CoupledError {
    #[error("invalid config: {0}")]
    Config(&'static str),
    #[error("producer failed at iteration {iteration}: {source}")]
    Producer {
        iteration: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("candidate at iteration {iteration} does not match the reference: {source}")]
    Metrics {
        iteration: usize,
        source: MetricsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledConfig {
    pub max_iters: usize,
    pub psnr_min: f64,
    pub ssim_min: f64,
    /// Factor applied to the producer parameter after each rejection.
    pub penalty_scale: f64,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        Self {
            max_iters: 5,
            psnr_min: 30.0,
            ssim_min: 0.9,
            penalty_scale: 0.5,
        }
    }
}

impl CoupledConfig {
    pub fn validate(&self) -> Result<(), CoupledError> {
        if self.max_iters < 1 {
            return Err(CoupledError::Config("max_iters must be >= 1"));
        }
        if !(self.penalty_scale > 0.0 && self.penalty_scale <= 1.0) {
            return Err(CoupledError::Config("penalty_scale must be in (0, 1]"));
        }
        Ok(())
    }
}

/// An image-to-image map with one tunable scalar.
pub trait AdjustableProducer {
    fn parameter(&self) -> f64;
    fn set_parameter(&mut self, value: f64);
    fn produce(&self, input: &Image) -> Result<Image, Box<dyn std::error::Error + Send + Sync>>;
}

/// Returns the input unchanged; the parameter is ignored.
#[derive(Debug, Clone, Default)]
pub struct IdentityProducer {
    parameter: f64,
}

impl AdjustableProducer for IdentityProducer {
    fn parameter(&self) -> f64 {
        self.parameter
    }

    fn set_parameter(&mut self, value: f64) {
        self.parameter = value;
    }

    fn produce(&self, input: &Image) -> Result<Image, Box<dyn std::error::Error + Send + Sync>> {
        Ok(input.clone())
    }
}

/// Adds `amplitude * s` to every pixel, where `s` is a fixed +-1 pattern
/// drawn from a seeded ChaCha8 stream, then clamps into range. Without
/// clamping the MSE against the input is exactly `amplitude^2`.
#[derive(Debug, Clone)]
pub struct NoiseProducer {
    pub amplitude: f64,
    pub seed: u64,
}

impl NoiseProducer {
    pub fn signs(&self, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 })
            .collect()
    }
}

impl AdjustableProducer for NoiseProducer {
    fn parameter(&self) -> f64 {
        self.amplitude
    }

    fn set_parameter(&mut self, value: f64) {
        self.amplitude = value;
    }

    fn produce(&self, input: &Image) -> Result<Image, Box<dyn std::error::Error + Send + Sync>> {
        let data = input
            .data()
            .iter()
            .zip(self.signs(input.data().len()))
            .map(|(v, s)| v + self.amplitude * s)
            .collect();
        let out: Result<Image, ImageError> =
            Image::from_clamped(input.width(), input.height(), input.max_value(), data);
        Ok(out?)
    }
}

/// Runs the loop for at most `cfg.max_iters` producer calls. The report's
/// metrics describe the last candidate evaluated.
pub fn coupled_run(
    input: &Image,
    producer: &mut dyn AdjustableProducer,
    reference: &Image,
    cfg: &CoupledConfig,
) -> Result<RunReport, CoupledError> {
    cfg.validate()?;
    let mut report = RunReport::new("coupled");
    report.status = Status::Rejected;
    for iteration in 1..=cfg.max_iters {
        let parameter = producer.parameter();
        let candidate = producer
            .produce(input)
            .map_err(|source| CoupledError::Producer { iteration, source })?;
        ensure_same_dims(candidate.dims(), reference.dims()).map_err(|e| {
            CoupledError::Metrics {
                iteration,
                source: e.into(),
            }
        })?;
        let q = image_quality(&candidate, reference)
            .map_err(|source| CoupledError::Metrics { iteration, source })?;
        report.iterations = iteration;
        report
            .number("mse", q.mse)
            .number("psnr", q.psnr)
            .number("ssim", q.ssim)
            .number("parameter", parameter);
        if q.psnr >= cfg.psnr_min && q.ssim >= cfg.ssim_min {
            report.status = Status::Accepted;
            break;
        }
        if iteration < cfg.max_iters {
            producer.set_parameter(parameter * cfg.penalty_scale);
        }
    }
    Ok(report)
}
