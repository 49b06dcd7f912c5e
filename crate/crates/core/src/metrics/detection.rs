//! Pascal-VOC style detection evaluation: greedy IoU matching and
//! all-point interpolated average precision.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::MetricsError;

/// Axis-aligned box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

impl BoundingBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, MetricsError> {
        let finite = [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite());
        if !finite || xmin >= xmax || ymin >= ymax {
            return Err(MetricsError::InvalidBox {
                xmin,
                ymin,
                xmax,
                ymax,
            });
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub label: String,
    score: f64,
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        label: impl Into<String>,
        score: f64,
        bbox: BoundingBox,
    ) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(MetricsError::Score(score));
        }
        Ok(Self {
            image_id: image_id.into(),
            label: label.into(),
            score,
            bbox,
        })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub label: String,
    pub bbox: BoundingBox,
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let ih = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = iw * ih;
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWarning {
    /// Detections were emitted for a class that has no ground truth.
    NoGroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEvaluation {
    pub ap: f64,
    /// `(recall, precision)` after each detection in ranked order.
    pub pr_points: Vec<(f64, f64)>,
    pub ground_truths: usize,
    pub detections: usize,
    pub true_positives: usize,
    pub warning: Option<ClassWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvaluation {
    /// Keyed by class name, in sorted order.
    pub classes: BTreeMap<String, ClassEvaluation>,
    /// Unweighted mean of per-class AP; `None` when there are no classes.
    pub mean_ap: Option<f64>,
}

/// Ranking order: score descending, then image id, then box coordinates.
fn rank(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| {
            a.bbox
                .coords()
                .iter()
                .zip(b.bbox.coords().iter())
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Per-class AP and mAP over the union of labels in `dets` and `gts`.
pub fn evaluate_detections(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
) -> Result<DetectionEvaluation, MetricsError> {
    if !(iou_thresh > 0.0 && iou_thresh < 1.0) {
        return Err(MetricsError::IouThreshold(iou_thresh));
    }
    let labels: BTreeSet<&str> = dets
        .iter()
        .map(|d| d.label.as_str())
        .chain(gts.iter().map(|g| g.label.as_str()))
        .collect();

    let mut classes = BTreeMap::new();
    for label in labels {
        let class_gts: Vec<&GroundTruth> = gts.iter().filter(|g| g.label == label).collect();
        let mut class_dets: Vec<&Detection> = dets.iter().filter(|d| d.label == label).collect();
        class_dets.sort_by(|a, b| rank(a, b));
        classes.insert(
            label.to_string(),
            evaluate_class(&class_dets, &class_gts, iou_thresh),
        );
    }
    let mean_ap = (!classes.is_empty())
        .then(|| classes.values().map(|c| c.ap).sum::<f64>() / classes.len() as f64);
    Ok(DetectionEvaluation { classes, mean_ap })
}

fn evaluate_class(ranked: &[&Detection], gts: &[&GroundTruth], iou_thresh: f64) -> ClassEvaluation {
    let npos = gts.len();
    let mut matched = vec![false; npos];
    let mut tp = 0usize;
    let mut pr_points = Vec::with_capacity(ranked.len());
    for (k, det) in ranked.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, gt) in gts.iter().enumerate() {
            if matched[j] || gt.image_id != det.image_id {
                continue;
            }
            let o = iou(&det.bbox, &gt.bbox);
            if best.is_none_or(|(_, b)| o > b) {
                best = Some((j, o));
            }
        }
        if let Some((j, o)) = best {
            if o >= iou_thresh {
                matched[j] = true;
                tp += 1;
            }
        }
        if npos > 0 {
            pr_points.push((tp as f64 / npos as f64, tp as f64 / (k + 1) as f64));
        }
    }

    let warning = (npos == 0 && !ranked.is_empty()).then_some(ClassWarning::NoGroundTruth);
    let ap = if npos == 0 {
        0.0
    } else {
        all_point_ap(&pr_points)
    };
    ClassEvaluation {
        ap,
        pr_points,
        ground_truths: npos,
        detections: ranked.len(),
        true_positives: tp,
        warning,
    }
}

/// Area under the monotone precision envelope.
fn all_point_ap(points: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = points.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (&(recall, _), &p) in points.iter().zip(&envelope) {
        ap += (recall - prev_recall) * p;
        prev_recall = recall;
    }
    ap
}
