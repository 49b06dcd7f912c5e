//! Geometric analysis of medical images through displacement fields, plus
//! the quality, detection and loss metrics used to evaluate imaging models.
//!
//! * [`imgcore`]: image/field containers and the PGM and VF1 codecs.
//! * [`registration`]: variational registration, warping and atlases.
//! * [`geometry`]: Jacobian determinant, curl and their renderings.
//! * [`metrics`]: MSE/PSNR/SSIM, classification rates, mAP, RTP, parsers.
//! * [`srloss`]: adversarial, feature-space and curl-map losses.
//! * [`quality`]: meta-task gradients, task selection and joint fitting.
//! * [`coupled`]: the generate/evaluate/penalize acceptance loop.

pub mod coupled;
pub mod geometry;
pub mod imgcore;
pub mod metrics;
pub mod quality;
pub mod registration;
pub mod report;
pub mod srloss;
