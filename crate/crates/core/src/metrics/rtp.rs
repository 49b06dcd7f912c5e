use std::collections::BTreeMap;

use super::MetricsError;

/// One model's per-image label, keyed by image id.
pub type Predictions = BTreeMap<String, String>;

/// Reduced task proportion: the fraction of images on which every model
/// emits the same label. Those images are handled without a clinician.
pub fn rtp(models: &[Predictions]) -> Result<f64, MetricsError> {
    if models.len() < 2 {
        return Err(MetricsError::TooFewModels(models.len()));
    }
    let reference = &models[0];
    for (model, other) in models.iter().enumerate().skip(1) {
        if other.len() != reference.len() || !other.keys().eq(reference.keys()) {
            return Err(MetricsError::ImageSetMismatch { model });
        }
    }
    if reference.is_empty() {
        return Err(MetricsError::NoImages);
    }
    let unanimous = reference
        .iter()
        .filter(|(image, label)| models[1..].iter().all(|m| m[*image] == **label))
        .count();
    Ok(unanimous as f64 / reference.len() as f64)
}
