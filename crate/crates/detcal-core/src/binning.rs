//! Multidimensional equal-width binning over sample features.
//!
//! A [`BinningScheme`] partitions each selected feature dimension into
//! `N_k` equally spaced bins; a sample maps to one flat index out of
//! `N_total = prod(N_k)`. Intervals are left-closed/right-open, with the
//! final interval closed so the upper range bound is representable.

use alloc::vec::Vec;
use core::fmt;

use crate::matching::MatchedSample;

/// Which sample features span the binning space.
///
/// The confidence dimension is always present; box features come from
/// the relative center position and the relative scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureSubset {
    /// `(conf)`
    ConfOnly,
    /// `(conf, cx, cy)`
    ConfCenter,
    /// `(conf, h, w)`
    ConfScale,
    /// `(conf, cx, cy, h, w)`
    Full,
}

impl FeatureSubset {
    pub const ALL: [FeatureSubset; 4] = [
        FeatureSubset::ConfOnly,
        FeatureSubset::ConfCenter,
        FeatureSubset::ConfScale,
        FeatureSubset::Full,
    ];

    pub fn dims(self) -> usize {
        match self {
            FeatureSubset::ConfOnly => 1,
            FeatureSubset::ConfCenter | FeatureSubset::ConfScale => 3,
            FeatureSubset::Full => 5,
        }
    }

    /// Value of the `dim`-th feature of a sample under this subset.
    pub fn feature(self, sample: &MatchedSample, dim: usize) -> f64 {
        match (self, dim) {
            (_, 0) => sample.confidence,
            (FeatureSubset::ConfCenter, 1) | (FeatureSubset::Full, 1) => sample.rel_cx,
            (FeatureSubset::ConfCenter, 2) | (FeatureSubset::Full, 2) => sample.rel_cy,
            (FeatureSubset::ConfScale, 1) | (FeatureSubset::Full, 3) => sample.rel_h,
            (FeatureSubset::ConfScale, 2) | (FeatureSubset::Full, 4) => sample.rel_w,
            _ => panic!("feature dimension out of range for subset"),
        }
    }

    pub fn dim_label(self, dim: usize) -> &'static str {
        match (self, dim) {
            (_, 0) => "conf",
            (FeatureSubset::ConfCenter, 1) | (FeatureSubset::Full, 1) => "cx",
            (FeatureSubset::ConfCenter, 2) | (FeatureSubset::Full, 2) => "cy",
            (FeatureSubset::ConfScale, 1) | (FeatureSubset::Full, 3) => "h",
            (FeatureSubset::ConfScale, 2) | (FeatureSubset::Full, 4) => "w",
            _ => panic!("feature dimension out of range for subset"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSubset::ConfOnly => "conf_only",
            FeatureSubset::ConfCenter => "conf_center",
            FeatureSubset::ConfScale => "conf_scale",
            FeatureSubset::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinningError {
    /// bins_per_dim / ranges length must equal the subset dimensionality.
    DimensionMismatch { expected: usize, got: usize },
    /// Every N_k must be at least 1.
    ZeroBins,
    /// Each range must satisfy lo < hi with finite bounds.
    InvalidRange(f64, f64),
}

impl fmt::Display for BinningError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinningError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} per-dimension entries, got {got}")
            }
            BinningError::ZeroBins => write!(f, "bin count per dimension must be >= 1"),
            BinningError::InvalidRange(lo, hi) => write!(f, "invalid bin range [{lo}, {hi}]"),
        }
    }
}

impl core::error::Error for BinningError {}

/// Equal-width partition of the selected feature space.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinningScheme {
    subset: FeatureSubset,
    bins_per_dim: Vec<usize>,
    ranges: Vec<(f64, f64)>,
}

impl BinningScheme {
    pub fn new(
        subset: FeatureSubset,
        bins_per_dim: Vec<usize>,
        ranges: Vec<(f64, f64)>,
    ) -> Result<Self, BinningError> {
        let dims = subset.dims();
        if bins_per_dim.len() != dims {
            return Err(BinningError::DimensionMismatch { expected: dims, got: bins_per_dim.len() });
        }
        if ranges.len() != dims {
            return Err(BinningError::DimensionMismatch { expected: dims, got: ranges.len() });
        }
        if bins_per_dim.iter().any(|&n| n == 0) {
            return Err(BinningError::ZeroBins);
        }
        for &(lo, hi) in &ranges {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(BinningError::InvalidRange(lo, hi));
            }
        }
        Ok(Self { subset, bins_per_dim, ranges })
    }

    /// Same bin count in every dimension, unit ranges.
    pub fn uniform(subset: FeatureSubset, bins_per_dim: usize) -> Result<Self, BinningError> {
        let dims = subset.dims();
        Self::new(
            subset,
            alloc::vec![bins_per_dim; dims],
            alloc::vec![(0.0, 1.0); dims],
        )
    }

    /// Default bin counts for miscalibration measurement:
    /// 20 for confidence only, 8 per dimension with one box pair,
    /// 5 per dimension with all features.
    pub fn evaluation_default(subset: FeatureSubset) -> Self {
        let n = match subset {
            FeatureSubset::ConfOnly => 20,
            FeatureSubset::ConfCenter | FeatureSubset::ConfScale => 8,
            FeatureSubset::Full => 5,
        };
        Self::uniform(subset, n).expect("static defaults are valid")
    }

    /// Default bin counts for fitting the histogram calibrator:
    /// 15 for confidence only, 5 per dimension with one box pair,
    /// 3 per dimension with all features.
    pub fn calibration_default(subset: FeatureSubset) -> Self {
        let n = match subset {
            FeatureSubset::ConfOnly => 15,
            FeatureSubset::ConfCenter | FeatureSubset::ConfScale => 5,
            FeatureSubset::Full => 3,
        };
        Self::uniform(subset, n).expect("static defaults are valid")
    }

    pub fn subset(&self) -> FeatureSubset {
        self.subset
    }

    pub fn dims(&self) -> usize {
        self.bins_per_dim.len()
    }

    pub fn bins_per_dim(&self) -> &[usize] {
        &self.bins_per_dim
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    /// Total number of bins across all dimensions.
    pub fn n_total(&self) -> usize {
        self.bins_per_dim.iter().product()
    }

    /// Index along one dimension: `floor((x - lo) * n / (hi - lo))`,
    /// with values clamped into the range and `x == hi` mapped to the
    /// last bin.
    pub fn dim_index(&self, dim: usize, value: f64) -> usize {
        let (lo, hi) = self.ranges[dim];
        let n = self.bins_per_dim[dim];
        let x = value.clamp(lo, hi);
        let raw = ((x - lo) * n as f64 / (hi - lo)) as usize;
        raw.min(n - 1)
    }

    /// Flat bin index of a sample, row-major with dimension 0 slowest.
    pub fn assign_bin(&self, sample: &MatchedSample) -> usize {
        let mut flat = 0;
        for dim in 0..self.dims() {
            let idx = self.dim_index(dim, self.subset.feature(sample, dim));
            flat = flat * self.bins_per_dim[dim] + idx;
        }
        flat
    }

    /// Per-dimension indices of a flat bin index.
    pub fn decode(&self, mut flat: usize) -> Vec<usize> {
        let mut out = alloc::vec![0usize; self.dims()];
        for dim in (0..self.dims()).rev() {
            out[dim] = flat % self.bins_per_dim[dim];
            flat /= self.bins_per_dim[dim];
        }
        out
    }

    /// Interval `[lo, hi)` covered by one bin along one dimension.
    pub fn dim_interval(&self, dim: usize, index: usize) -> (f64, f64) {
        let (lo, hi) = self.ranges[dim];
        let n = self.bins_per_dim[dim] as f64;
        let width = (hi - lo) / n;
        (lo + index as f64 * width, lo + (index + 1) as f64 * width)
    }
}
