//! Detection post-processing: greedy NMS, top-k selection and
//! confidence thresholding, composable into a per-image pipeline.
//!
//! The pipeline distinguishes the two measurement regimes for
//! calibration: an empty stage list leaves raw detector output
//! untouched (white-box), while a stage list containing [`Stage::Nms`]
//! reproduces the usual deployed output (black-box).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::types::Detection;

/// One post-processing stage.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Stage {
    /// Keep only the `k` highest-confidence detections per image.
    TopK(usize),
    /// Greedy class-wise suppression at the given IoU threshold.
    Nms(f64),
    /// Drop detections with confidence below the threshold.
    ConfidenceThreshold(f64),
}

impl Stage {
    fn kind(&self) -> u8 {
        match self {
            Stage::TopK(_) => 0,
            Stage::Nms(_) => 1,
            Stage::ConfidenceThreshold(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PipelineError {
    /// `k` must be at least 1.
    InvalidTopK,
    /// NMS threshold must lie in `(0, 1]`.
    InvalidNmsThreshold(f64),
    /// Confidence threshold must lie in `[0, 1)`.
    InvalidConfidenceThreshold(f64),
    /// Each stage type may appear at most once.
    DuplicateStage,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::InvalidTopK => write!(f, "top-k requires k >= 1"),
            PipelineError::InvalidNmsThreshold(t) => {
                write!(f, "NMS threshold {t} outside (0, 1]")
            }
            PipelineError::InvalidConfidenceThreshold(t) => {
                write!(f, "confidence threshold {t} outside [0, 1)")
            }
            PipelineError::DuplicateStage => write!(f, "stage type appears more than once"),
        }
    }
}

impl core::error::Error for PipelineError {}

/// An ordered list of stages, validated once at construction.
///
/// The empty list is the raw white-box passthrough.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    stages: Vec<Stage>,
}

impl PipelineConfig {
    pub fn new(stages: Vec<Stage>) -> Result<Self, PipelineError> {
        let mut seen = [false; 3];
        for stage in &stages {
            match *stage {
                Stage::TopK(k) if k == 0 => return Err(PipelineError::InvalidTopK),
                Stage::Nms(t) if !(t.is_finite() && t > 0.0 && t <= 1.0) => {
                    return Err(PipelineError::InvalidNmsThreshold(t))
                }
                Stage::ConfidenceThreshold(t) if !(t.is_finite() && (0.0..1.0).contains(&t)) => {
                    return Err(PipelineError::InvalidConfidenceThreshold(t))
                }
                _ => {}
            }
            let kind = stage.kind() as usize;
            if seen[kind] {
                return Err(PipelineError::DuplicateStage);
            }
            seen[kind] = true;
        }
        Ok(Self { stages })
    }

    /// Raw passthrough: no stages at all.
    pub fn whitebox_raw() -> Self {
        Self::default()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn has_nms(&self) -> bool {
        self.stages.iter().any(|s| matches!(s, Stage::Nms(_)))
    }
}

/// Deterministic ordering: confidence descending, input index ascending.
fn rank_by_confidence(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].confidence
            .total_cmp(&dets[a].confidence)
            .then(a.cmp(&b))
    });
    order
}

/// Greedy non-maximum suppression over the detections of one image.
///
/// Detections are visited in descending confidence order (ties broken
/// by input index); each kept box suppresses every remaining
/// same-category box whose IoU with it is strictly greater than
/// `iou_threshold`. Survivors are returned in kept order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let order = rank_by_confidence(dets);
    let mut suppressed = alloc::vec![false; dets.len()];
    let mut kept = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(dets[i].clone());
        for &j in &order[pos + 1..] {
            if suppressed[j] || dets[j].category != dets[i].category {
                continue;
            }
            if dets[i].bbox.iou(&dets[j].bbox) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}

/// Keep the `k` highest-confidence detections of one image.
///
/// Boundary ties are broken by input index ascending; the output is
/// sorted by confidence descending.
pub fn top_k(dets: &[Detection], k: usize) -> Vec<Detection> {
    let order = rank_by_confidence(dets);
    order.iter().take(k).map(|&i| dets[i].clone()).collect()
}

/// Keep detections with confidence `>= theta`, preserving order.
pub fn confidence_threshold(dets: &[Detection], theta: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.confidence >= theta).cloned().collect()
}

/// Apply the configured stages per image.
///
/// An empty stage list returns the input unchanged. Otherwise output is
/// grouped by ascending image id, each group in its final stage order.
pub fn run_pipeline(dets: &[Detection], config: &PipelineConfig) -> Vec<Detection> {
    if config.stages.is_empty() {
        return dets.to_vec();
    }
    let mut per_image: BTreeMap<_, Vec<Detection>> = BTreeMap::new();
    for det in dets {
        per_image.entry(det.image_id).or_default().push(det.clone());
    }
    let mut out = Vec::with_capacity(dets.len());
    for (_, mut group) in per_image {
        for stage in &config.stages {
            group = match *stage {
                Stage::TopK(k) => top_k(&group, k),
                Stage::Nms(t) => nms(&group, t),
                Stage::ConfidenceThreshold(t) => confidence_threshold(&group, t),
            };
        }
        out.extend(group);
    }
    out
}

/// Repeated-argmax greedy NMS without the sorted pass. Quadratic and
/// deliberately naive; kept as an independent check of [`nms`].
pub fn nms_reference(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut alive: Vec<usize> = (0..dets.len()).collect();
    let mut kept = Vec::new();
    while !alive.is_empty() {
        let mut best = alive[0];
        for &i in &alive {
            let better = match dets[i].confidence.total_cmp(&dets[best].confidence) {
                Ordering::Greater => true,
                Ordering::Equal => i < best,
                Ordering::Less => false,
            };
            if better {
                best = i;
            }
        }
        kept.push(dets[best].clone());
        alive.retain(|&i| {
            i != best
                && !(dets[i].category == dets[best].category
                    && dets[best].bbox.iou(&dets[i].bbox) > iou_threshold)
        });
    }
    kept
}
