//! Image-quality, classification, detection and workload metrics, plus the
//! annotation and detection file parsers that feed them.

mod annotations;
mod classification;
mod detection;
mod image;
mod manifest;
mod rtp;

pub use annotations::{parse_detections_csv, parse_predictions_csv, parse_voc_xml, ParseError};
pub use classification::{classification_rates, ConfusionCounts, Rates};
pub use detection::{
    evaluate_detections, iou, BoundingBox, ClassEvaluation, ClassWarning, Detection,
    DetectionEvaluation, GroundTruth,
};
pub use image::{image_quality, QualityReport};
pub use manifest::{DatasetManifest, SplitCounts};
pub use rtp::{rtp, Predictions};

use thiserror::Error;

use crate::imgcore::ImageError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("max_value mismatch: {0} vs {1}")]
    MaxValueMismatch(u16, u16),
    #[error("invalid box ({xmin}, {ymin}, {xmax}, {ymax}): need xmin < xmax and ymin < ymax")]
    InvalidBox {
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    },
    #[error("score {0} outside [0, 1]")]
    Score(f64),
    #[error("IoU threshold {0} outside (0, 1)")]
    IouThreshold(f64),
    #[error("RTP needs at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("model {model} covers a different image set than model 0")]
    ImageSetMismatch { model: usize },
    #[error("RTP is undefined for an empty image set")]
    NoImages,
}
