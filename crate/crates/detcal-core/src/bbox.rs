//! Axis-aligned bounding boxes in center/size encoding and IoU.
//!
//! The canonical encoding is `(cx, cy, w, h)`: center position plus
//! width and height. Corner-encoded input (`x_min, y_min, w, h`) is
//! converted once at ingestion via [`BoundingBox::from_corner`].

use core::fmt;

/// Errors from box construction and normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    /// Width or height is zero, negative, or non-finite.
    NonPositiveExtent,
    /// Center coordinate is negative or non-finite.
    InvalidCenter,
    /// Image dimension is zero, negative, or non-finite.
    InvalidImageDims,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NonPositiveExtent => write!(f, "box width and height must be positive"),
            GeometryError::InvalidCenter => write!(f, "box center must be non-negative and finite"),
            GeometryError::InvalidImageDims => write!(f, "image dimensions must be positive"),
        }
    }
}

impl core::error::Error for GeometryError {}

/// An axis-aligned box with strictly positive extent.
///
/// Coordinates are either pixels or relative (divided by the image
/// dimensions); both sides of an operation must use the same frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

impl BoundingBox {
    /// Build a box from center and size, rejecting degenerate geometry.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(GeometryError::NonPositiveExtent);
        }
        if !(cx.is_finite() && cy.is_finite() && cx >= 0.0 && cy >= 0.0) {
            return Err(GeometryError::InvalidCenter);
        }
        Ok(Self { cx, cy, w, h })
    }

    /// Build a box from the `(x_min, y_min, w, h)` corner convention.
    pub fn from_corner(x_min: f64, y_min: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        Self::new(x_min + w / 2.0, y_min + h / 2.0, w, h)
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn x_min(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn x_max(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y_min(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn y_max(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    /// Intersection over union with another box in the same frame.
    ///
    /// Returns a ratio in `[0, 1]`; `0.0` for disjoint boxes.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let ix = (self.x_max().min(other.x_max()) - self.x_min().max(other.x_min())).max(0.0);
        let iy = (self.y_max().min(other.y_max()) - self.y_min().max(other.y_min())).max(0.0);
        let intersection = ix * iy;
        if intersection <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - intersection;
        intersection / union
    }

    /// Divide all four fields by the image dimensions, clamping into the
    /// unit square. Detectors routinely emit boxes marginally outside
    /// the frame, so overshoot clamps instead of erroring.
    pub fn normalize(&self, image_w: f64, image_h: f64) -> Result<BoundingBox, GeometryError> {
        if !(image_w.is_finite() && image_h.is_finite() && image_w > 0.0 && image_h > 0.0) {
            return Err(GeometryError::InvalidImageDims);
        }
        Ok(BoundingBox {
            cx: (self.cx / image_w).clamp(0.0, 1.0),
            cy: (self.cy / image_h).clamp(0.0, 1.0),
            w: (self.w / image_w).min(1.0),
            h: (self.h / image_h).min(1.0),
        })
    }
}

/// Convenience wrapper around [`BoundingBox::iou`].
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}
