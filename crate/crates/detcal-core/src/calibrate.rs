//! Multivariate histogram-binning calibration.
//!
//! Fitting computes the training precision of every occupied bin of a
//! [`BinningScheme`]; applying a fitted calibrator replaces a sample's
//! confidence with its bin's precision. Bins never seen in training
//! fall back to a configurable policy.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::binning::BinningScheme;
use crate::matching::MatchedSample;

/// What to return for a sample whose bin was empty during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FallbackPolicy {
    /// Return the raw confidence unchanged.
    #[default]
    RawConfidence,
    /// Return the precision over the whole training set.
    GlobalPrecision,
    /// Return the value of the occupied bin with the smallest L1
    /// distance in per-dimension indices (ties to the lowest index).
    NearestBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationError {
    EmptyTrainingSet,
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::EmptyTrainingSet => write!(f, "cannot fit on an empty training set"),
        }
    }
}

impl core::error::Error for CalibrationError {}

/// A fitted per-bin precision lookup. Immutable after [`fit`].
///
/// [`fit`]: HistogramCalibrator::fit
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCalibrator {
    scheme: BinningScheme,
    table: BTreeMap<usize, f64>,
    global_precision: f64,
    fallback: FallbackPolicy,
}

impl HistogramCalibrator {
    /// Fit on a training set: every occupied bin's entry is the mean of
    /// the match flag over its training samples.
    pub fn fit(
        train: &[MatchedSample],
        scheme: BinningScheme,
    ) -> Result<Self, CalibrationError> {
        if train.is_empty() {
            return Err(CalibrationError::EmptyTrainingSet);
        }
        let mut counts: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        let mut hits = 0.0;
        for sample in train {
            let entry = counts.entry(scheme.assign_bin(sample)).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += sample.hit();
            hits += sample.hit();
        }
        let table = counts
            .into_iter()
            .map(|(idx, (count, sum_hit))| (idx, sum_hit / count as f64))
            .collect();
        Ok(Self {
            scheme,
            table,
            global_precision: hits / train.len() as f64,
            fallback: FallbackPolicy::default(),
        })
    }

    pub fn with_fallback(mut self, fallback: FallbackPolicy) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn scheme(&self) -> &BinningScheme {
        &self.scheme
    }

    pub fn table(&self) -> &BTreeMap<usize, f64> {
        &self.table
    }

    pub fn global_precision(&self) -> f64 {
        self.global_precision
    }

    pub fn fallback(&self) -> FallbackPolicy {
        self.fallback
    }

    /// Rebuild a calibrator from its serialized parts.
    pub fn from_parts(
        scheme: BinningScheme,
        table: BTreeMap<usize, f64>,
        global_precision: f64,
        fallback: FallbackPolicy,
    ) -> Self {
        Self { scheme, table, global_precision, fallback }
    }

    /// Calibrated confidence of one sample: its bin's training
    /// precision, or the fallback for bins unseen in training.
    pub fn apply(&self, sample: &MatchedSample) -> f64 {
        let bin = self.scheme.assign_bin(sample);
        if let Some(&value) = self.table.get(&bin) {
            return value;
        }
        match self.fallback {
            FallbackPolicy::RawConfidence => sample.confidence,
            FallbackPolicy::GlobalPrecision => self.global_precision,
            FallbackPolicy::NearestBin => self.nearest_bin_value(bin),
        }
    }

    fn nearest_bin_value(&self, bin: usize) -> f64 {
        let target = self.scheme.decode(bin);
        let mut best: Option<(usize, usize, f64)> = None;
        for (&idx, &value) in &self.table {
            let decoded = self.scheme.decode(idx);
            let dist: usize = decoded
                .iter()
                .zip(&target)
                .map(|(&a, &b)| a.abs_diff(b))
                .sum();
            let closer = match best {
                None => true,
                Some((bd, bi, _)) => dist < bd || (dist == bd && idx < bi),
            };
            if closer {
                best = Some((dist, idx, value));
            }
        }
        best.map(|(_, _, v)| v).expect("fit guarantees a nonempty table")
    }

    /// Element-wise [`apply`](Self::apply): confidences replaced,
    /// match flags and geometry untouched.
    pub fn apply_all(&self, samples: &[MatchedSample]) -> Vec<MatchedSample> {
        samples
            .iter()
            .map(|s| {
                let mut out = s.clone();
                out.confidence = self.apply(s);
                out
            })
            .collect()
    }
}
