//! Greedy matching of detections against ground truth.
//!
//! Detections of one image are visited in descending confidence order;
//! each claims the unclaimed same-category ground-truth box of highest
//! IoU, provided that IoU reaches the threshold. Every ground-truth box
//! is claimed at most once, so duplicate detections over one object
//! yield exactly one true positive — the mechanism by which box
//! suppression changes observed precision.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::types::{Detection, GroundTruthObject, ImageCatalog, ImageId};

/// Matching parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchConfig {
    /// Minimum IoU for a detection to count as a true positive.
    pub iou_threshold: f64,
    /// When set, crowd regions neither match nor penalize detections.
    pub exclude_crowd: bool,
}

impl MatchConfig {
    pub fn new(iou_threshold: f64, exclude_crowd: bool) -> Result<Self, MatchError> {
        if !(iou_threshold.is_finite() && iou_threshold > 0.0 && iou_threshold < 1.0) {
            return Err(MatchError::InvalidThreshold(iou_threshold));
        }
        Ok(Self { iou_threshold, exclude_crowd })
    }
}

/// One detection turned into a calibration sample: confidence, box
/// features relative to the image frame, and the match flag.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchedSample {
    pub confidence: f64,
    pub rel_cx: f64,
    pub rel_cy: f64,
    pub rel_w: f64,
    pub rel_h: f64,
    pub matched: bool,
    pub image_id: ImageId,
}

impl MatchedSample {
    /// The match flag as the 0/1 value averaged into per-bin precision.
    pub fn hit(&self) -> f64 {
        if self.matched {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchError {
    InvalidThreshold(f64),
    /// A detection references an image with no known dimensions.
    MissingImageInfo(ImageId),
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchError::InvalidThreshold(t) => write!(f, "IoU threshold {t} outside (0, 1)"),
            MatchError::MissingImageInfo(id) => {
                write!(f, "no image dimensions for image id {id}")
            }
        }
    }
}

impl core::error::Error for MatchError {}

/// Match detections against ground truth, one sample per detection.
///
/// Samples are returned in input detection order. Matching itself runs
/// per image in descending confidence order (ties by input index), so
/// the highest-confidence of several overlapping detections claims the
/// ground-truth box.
pub fn match_detections(
    detections: &[Detection],
    ground_truths: &[GroundTruthObject],
    images: &ImageCatalog,
    config: &MatchConfig,
) -> Result<Vec<MatchedSample>, MatchError> {
    let mut gt_by_image: BTreeMap<ImageId, Vec<&GroundTruthObject>> = BTreeMap::new();
    for gt in ground_truths {
        if config.exclude_crowd && gt.crowd {
            continue;
        }
        gt_by_image.entry(gt.image_id).or_default().push(gt);
    }

    let mut det_by_image: BTreeMap<ImageId, Vec<usize>> = BTreeMap::new();
    for (i, det) in detections.iter().enumerate() {
        det_by_image.entry(det.image_id).or_default().push(i);
    }

    let mut matched = alloc::vec![false; detections.len()];
    for (image_id, det_indices) in &det_by_image {
        let gts = gt_by_image.get(image_id).map(Vec::as_slice).unwrap_or(&[]);
        let mut claimed = alloc::vec![false; gts.len()];

        let mut order = det_indices.clone();
        order.sort_by(|&a, &b| {
            detections[b].confidence
                .total_cmp(&detections[a].confidence)
                .then(a.cmp(&b))
        });

        for &di in &order {
            let det = &detections[di];
            let mut best: Option<(usize, f64)> = None;
            for (gi, gt) in gts.iter().enumerate() {
                if claimed[gi] || gt.category != det.category {
                    continue;
                }
                let overlap = det.bbox.iou(&gt.bbox);
                if best.map(|(_, b)| overlap > b).unwrap_or(true) {
                    best = Some((gi, overlap));
                }
            }
            if let Some((gi, overlap)) = best {
                if overlap >= config.iou_threshold {
                    claimed[gi] = true;
                    matched[di] = true;
                }
            }
        }
    }

    let mut samples = Vec::with_capacity(detections.len());
    for (i, det) in detections.iter().enumerate() {
        let info = images
            .get(det.image_id)
            .ok_or(MatchError::MissingImageInfo(det.image_id))?;
        let rel = det
            .bbox
            .normalize(info.width as f64, info.height as f64)
            .expect("catalog dimensions are validated positive");
        samples.push(MatchedSample {
            confidence: det.confidence,
            rel_cx: rel.cx(),
            rel_cy: rel.cy(),
            rel_w: rel.width(),
            rel_h: rel.height(),
            matched: matched[i],
            image_id: det.image_id,
        });
    }
    Ok(samples)
}
