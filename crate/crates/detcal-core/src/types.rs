//! Domain types shared across the pipeline: detections, ground truth
//! and the image catalog they both reference.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::bbox::BoundingBox;

/// Opaque identifier tying detections and annotations to an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ImageId(pub u64);

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Class label of a detection or annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct CategoryId(pub u32);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pixel dimensions of one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageInfo {
    pub id: ImageId,
    pub width: u32,
    pub height: u32,
}

impl ImageInfo {
    pub fn new(id: ImageId, width: u32, height: u32) -> Result<Self, TypesError> {
        if width == 0 || height == 0 {
            return Err(TypesError::InvalidImageDims(id));
        }
        Ok(Self { id, width, height })
    }
}

/// One predicted box with class label and confidence score.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub image_id: ImageId,
    pub category: CategoryId,
    /// Confidence score in `[0, 1]`.
    pub confidence: f64,
    /// Box in the pixel frame.
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn new(
        image_id: ImageId,
        category: CategoryId,
        confidence: f64,
        bbox: BoundingBox,
    ) -> Result<Self, TypesError> {
        if !(confidence.is_finite() && (0.0..=1.0).contains(&confidence)) {
            return Err(TypesError::ConfidenceOutOfRange(confidence));
        }
        Ok(Self { image_id, category, confidence, bbox })
    }
}

/// One annotated ground-truth box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruthObject {
    pub image_id: ImageId,
    pub category: CategoryId,
    /// Box in the pixel frame.
    pub bbox: BoundingBox,
    /// Crowd regions can be excluded from matching.
    pub crowd: bool,
}

/// Image dimensions indexed by id, built once after loading.
#[derive(Debug, Clone, Default)]
pub struct ImageCatalog {
    images: BTreeMap<ImageId, ImageInfo>,
}

impl ImageCatalog {
    /// Index a list of images, rejecting duplicate ids.
    pub fn new(images: &[ImageInfo]) -> Result<Self, TypesError> {
        let mut map = BTreeMap::new();
        for info in images {
            if map.insert(info.id, *info).is_some() {
                return Err(TypesError::DuplicateImage(info.id));
            }
        }
        Ok(Self { images: map })
    }

    pub fn get(&self, id: ImageId) -> Option<&ImageInfo> {
        self.images.get(&id)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ImageInfo> {
        self.images.values()
    }

    /// Check that every detection references a cataloged image.
    pub fn check_references(&self, detections: &[Detection]) -> Result<(), TypesError> {
        for det in detections {
            if !self.images.contains_key(&det.image_id) {
                return Err(TypesError::UnknownImage(det.image_id));
            }
        }
        Ok(())
    }
}

/// Keep only records of one category, preserving input order.
pub fn filter_category(
    detections: &[Detection],
    ground_truths: &[GroundTruthObject],
    category: CategoryId,
) -> (Vec<Detection>, Vec<GroundTruthObject>) {
    let dets = detections.iter().filter(|d| d.category == category).cloned().collect();
    let gts = ground_truths.iter().filter(|g| g.category == category).cloned().collect();
    (dets, gts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TypesError {
    ConfidenceOutOfRange(f64),
    InvalidImageDims(ImageId),
    DuplicateImage(ImageId),
    UnknownImage(ImageId),
}

impl fmt::Display for TypesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypesError::ConfidenceOutOfRange(c) => {
                write!(f, "confidence {c} outside [0, 1]")
            }
            TypesError::InvalidImageDims(id) => {
                write!(f, "image {id} has zero width or height")
            }
            TypesError::DuplicateImage(id) => write!(f, "duplicate image id {id}"),
            TypesError::UnknownImage(id) => write!(f, "unknown image id {id}"),
        }
    }
}

impl core::error::Error for TypesError {}
