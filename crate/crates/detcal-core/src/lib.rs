//! Confidence calibration for object detection.
//!
//! Everything needed to measure and correct the calibration of a box
//! detector, given its raw detections and ground-truth annotations:
//!
//! * [`bbox`] — center/size bounding boxes and IoU.
//! * [`postprocess`] — NMS, top-k selection and confidence thresholding,
//!   composed into configurable pipelines.
//! * [`matching`] — greedy confidence-ordered matching of detections
//!   against ground truth, producing calibration samples.
//! * [`binning`] / [`metrics`] — multidimensional equal-width binning,
//!   the detection expected calibration error (D-ECE), reliability
//!   diagram data and position-dependent miscalibration grids.
//! * [`calibrate`] — multivariate histogram-binning calibration.
//! * [`synthetic`] — deterministic generators with analytically known
//!   calibration properties.
//! * [`experiment`] — seeded splits, repeated trials and report
//!   aggregation, including the calibrate-then-suppress experiment.
//!
//! The crate is `no_std` (with `alloc`); all routines are pure functions
//! over immutable values and deterministic given their seeds.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bbox;
pub mod binning;
pub mod calibrate;
pub mod experiment;
pub mod matching;
pub mod metrics;
pub mod postprocess;
pub mod sampling;
pub mod synthetic;
pub mod types;

pub use bbox::{BoundingBox, GeometryError};
pub use binning::{BinningScheme, FeatureSubset};
pub use calibrate::{FallbackPolicy, HistogramCalibrator};
pub use matching::{MatchConfig, MatchedSample};
pub use metrics::{DEceReport, PositionHeatmap, ReliabilityBin};
pub use postprocess::{PipelineConfig, Stage};
pub use types::{CategoryId, Detection, GroundTruthObject, ImageCatalog, ImageId, ImageInfo};
