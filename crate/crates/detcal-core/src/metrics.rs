//! Miscalibration measurement: D-ECE over a multidimensional binning,
//! reliability-diagram data, and position-dependent miscalibration.
//!
//! The detection expected calibration error weights each retained bin
//! by its share of retained samples and accumulates the absolute gap
//! between mean confidence and precision. Bins holding fewer than
//! `min_bin_count` samples are neglected to keep the estimate robust;
//! the report carries the full bin accounting so neglected, retained
//! and empty bins always sum to the total bin count.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::binning::BinningScheme;
use crate::matching::MatchedSample;

/// How bin weights are normalized in the D-ECE sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightNormalization {
    /// Weights are bin count over retained sample count; they sum to 1.
    #[default]
    RetainedSamples,
    /// Weights are bin count over the full sample count, including
    /// samples inside neglected bins. For sensitivity checks.
    AllSamples,
}

/// Aggregates of one occupied bin.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinStats {
    /// Flat bin index under the report's scheme.
    pub index: usize,
    pub count: usize,
    /// Mean confidence of the samples in the bin.
    pub mean_confidence: f64,
    /// Fraction of matched samples in the bin.
    pub precision: f64,
    /// Whether the bin survived the minimum-count rule.
    pub retained: bool,
}

impl BinStats {
    pub fn gap(&self) -> f64 {
        (self.precision - self.mean_confidence).abs()
    }
}

/// D-ECE value plus the per-bin statistics it was computed from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DEceReport {
    pub d_ece: f64,
    pub total_sample_count: usize,
    pub retained_sample_count: usize,
    pub retained_bin_count: usize,
    /// Occupied bins dropped by the minimum-count rule.
    pub neglected_bin_count: usize,
    pub empty_bin_count: usize,
    pub n_total_bins: usize,
    /// All occupied bins, retained or not, ascending by index.
    pub bins: Vec<BinStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    /// Every occupied bin fell below the minimum count (or there were
    /// no samples at all), leaving nothing to measure.
    NoRetainedSamples,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::NoRetainedSamples => {
                write!(f, "no retained samples after bin neglect")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

#[derive(Default, Clone, Copy)]
struct BinAcc {
    count: usize,
    sum_conf: f64,
    sum_hit: f64,
}

fn accumulate(samples: &[MatchedSample], scheme: &BinningScheme) -> BTreeMap<usize, BinAcc> {
    let mut bins: BTreeMap<usize, BinAcc> = BTreeMap::new();
    for sample in samples {
        let acc = bins.entry(scheme.assign_bin(sample)).or_default();
        acc.count += 1;
        acc.sum_conf += sample.confidence;
        acc.sum_hit += sample.hit();
    }
    bins
}

/// D-ECE with the default retained-sample weight normalization.
pub fn compute_d_ece(
    samples: &[MatchedSample],
    scheme: &BinningScheme,
    min_bin_count: usize,
) -> Result<DEceReport, MetricsError> {
    compute_d_ece_with(samples, scheme, min_bin_count, WeightNormalization::default())
}

/// D-ECE over the scheme's binning, neglecting bins with fewer than
/// `min_bin_count` samples.
pub fn compute_d_ece_with(
    samples: &[MatchedSample],
    scheme: &BinningScheme,
    min_bin_count: usize,
    normalization: WeightNormalization,
) -> Result<DEceReport, MetricsError> {
    let occupied = accumulate(samples, scheme);

    let mut bins = Vec::with_capacity(occupied.len());
    let mut retained_samples = 0usize;
    let mut retained_bins = 0usize;
    for (&index, acc) in &occupied {
        let retained = acc.count >= min_bin_count;
        if retained {
            retained_samples += acc.count;
            retained_bins += 1;
        }
        bins.push(BinStats {
            index,
            count: acc.count,
            mean_confidence: acc.sum_conf / acc.count as f64,
            precision: acc.sum_hit / acc.count as f64,
            retained,
        });
    }

    if retained_samples == 0 {
        return Err(MetricsError::NoRetainedSamples);
    }

    let denominator = match normalization {
        WeightNormalization::RetainedSamples => retained_samples,
        WeightNormalization::AllSamples => samples.len(),
    } as f64;
    let d_ece = bins
        .iter()
        .filter(|b| b.retained)
        .map(|b| b.count as f64 / denominator * b.gap())
        .sum();

    Ok(DEceReport {
        d_ece,
        total_sample_count: samples.len(),
        retained_sample_count: retained_samples,
        retained_bin_count: retained_bins,
        neglected_bin_count: occupied.len() - retained_bins,
        empty_bin_count: scheme.n_total() - occupied.len(),
        n_total_bins: scheme.n_total(),
        bins,
    })
}

/// One confidence bin of a reliability diagram.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` marks an empty bin with no defined gap.
    pub mean_confidence: Option<f64>,
    pub precision: Option<f64>,
}

/// Per-confidence-bin data backing a confidence histogram and a
/// reliability diagram. All `n_conf_bins` bins are emitted, empty ones
/// with count 0 and no statistics.
pub fn reliability_data(samples: &[MatchedSample], n_conf_bins: usize) -> Vec<ReliabilityBin> {
    assert!(n_conf_bins >= 1, "need at least one confidence bin");
    let scheme = BinningScheme::uniform(crate::binning::FeatureSubset::ConfOnly, n_conf_bins)
        .expect("unit-range confidence scheme is valid");
    let occupied = accumulate(samples, &scheme);
    (0..n_conf_bins)
        .map(|i| {
            let (lo, hi) = scheme.dim_interval(0, i);
            match occupied.get(&i) {
                Some(acc) => ReliabilityBin {
                    lo,
                    hi,
                    count: acc.count,
                    mean_confidence: Some(acc.sum_conf / acc.count as f64),
                    precision: Some(acc.sum_hit / acc.count as f64),
                },
                None => ReliabilityBin { lo, hi, count: 0, mean_confidence: None, precision: None },
            }
        })
        .collect()
}

/// One cell of the position grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatmapCell {
    pub sample_count: usize,
    /// Confidence-only ECE of the samples in the cell; `None` when the
    /// cell retained no samples under the neglect rule.
    pub ece: Option<f64>,
}

/// Miscalibration over an equal grid of relative box-center positions.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositionHeatmap {
    pub grid_n: usize,
    /// Row-major, index `iy * grid_n + ix`, `ix` from `rel_cx` and `iy`
    /// from `rel_cy`.
    pub cells: Vec<HeatmapCell>,
}

impl PositionHeatmap {
    pub fn cell(&self, ix: usize, iy: usize) -> &HeatmapCell {
        &self.cells[iy * self.grid_n + ix]
    }

    /// Largest defined cell value, if any cell is defined.
    pub fn max_value(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter_map(|c| c.ece)
            .max_by(|a, b| a.total_cmp(b))
    }
}

/// Confidence-only ECE per cell of a `grid_n x grid_n` partition of the
/// relative box-center space, with the same neglect rule as the D-ECE.
pub fn position_heatmap(
    samples: &[MatchedSample],
    grid_n: usize,
    n_conf_bins: usize,
    min_bin_count: usize,
) -> PositionHeatmap {
    assert!(grid_n >= 1, "need at least one grid cell");
    let axis = BinningScheme::new(
        crate::binning::FeatureSubset::ConfOnly,
        alloc::vec![grid_n],
        alloc::vec![(0.0, 1.0)],
    )
    .expect("unit-range axis scheme is valid");
    let conf_scheme = BinningScheme::uniform(crate::binning::FeatureSubset::ConfOnly, n_conf_bins)
        .expect("unit-range confidence scheme is valid");

    let mut per_cell: Vec<Vec<MatchedSample>> = alloc::vec![Vec::new(); grid_n * grid_n];
    for sample in samples {
        let ix = axis.dim_index(0, sample.rel_cx);
        let iy = axis.dim_index(0, sample.rel_cy);
        per_cell[iy * grid_n + ix].push(sample.clone());
    }

    let cells = per_cell
        .into_iter()
        .map(|cell_samples| HeatmapCell {
            sample_count: cell_samples.len(),
            ece: compute_d_ece(&cell_samples, &conf_scheme, min_bin_count)
                .ok()
                .map(|r| r.d_ece),
        })
        .collect();
    PositionHeatmap { grid_n, cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::FeatureSubset;
    use crate::types::ImageId;
    use proptest::prelude::*;

    fn sample(conf: f64, matched: bool) -> MatchedSample {
        MatchedSample {
            confidence: conf,
            rel_cx: 0.5,
            rel_cy: 0.5,
            rel_w: 0.1,
            rel_h: 0.1,
            matched,
            image_id: ImageId(1),
        }
    }

    fn positioned(conf: f64, matched: bool, cx: f64, cy: f64) -> MatchedSample {
        let mut s = sample(conf, matched);
        s.rel_cx = cx;
        s.rel_cy = cy;
        s
    }

    #[test]
    fn two_bin_hand_computation() {
        let samples = [
            sample(0.4, false),
            sample(0.4, true),
            sample(0.9, true),
            sample(0.9, true),
        ];
        let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 2).unwrap();
        let report = compute_d_ece(&samples, &scheme, 1).unwrap();
        // both bins gap 0.1, weights 0.5/0.5
        assert!((report.d_ece - 0.1).abs() < 1e-15);
        assert_eq!(report.retained_sample_count, 4);
        assert_eq!(report.retained_bin_count, 2);
        assert_eq!(report.neglected_bin_count, 0);
        assert_eq!(report.empty_bin_count, 0);
    }

    #[test]
    fn single_bin_reduces_to_global_gap() {
        let samples = [sample(0.6, true), sample(0.8, false), sample(0.7, true)];
        let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 1).unwrap();
        let report = compute_d_ece(&samples, &scheme, 1).unwrap();
        let mean_conf = (0.6 + 0.8 + 0.7) / 3.0;
        let precision = 2.0 / 3.0;
        assert!((report.d_ece - (precision - mean_conf).abs()).abs() < 1e-15);
    }

    #[test]
    fn neglect_boundary_is_strictly_less_than() {
        // 7 samples in the low bin, 8 in the high bin
        let mut samples = Vec::new();
        for _ in 0..7 {
            samples.push(sample(0.2, false));
        }
        for _ in 0..8 {
            samples.push(sample(0.8, true));
        }
        let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 2).unwrap();
        let report = compute_d_ece(&samples, &scheme, 8).unwrap();
        assert_eq!(report.neglected_bin_count, 1);
        assert_eq!(report.retained_bin_count, 1);
        assert_eq!(report.retained_sample_count, 8);
        // accounting identity over all bins
        assert_eq!(
            report.neglected_bin_count + report.retained_bin_count + report.empty_bin_count,
            report.n_total_bins
        );
        // retained bin: conf 0.8 vs precision 1.0
        assert!((report.d_ece - 0.2).abs() < 1e-12);

        // one more sample in the low bin flips it to retained
        samples.push(sample(0.2, false));
        let report = compute_d_ece(&samples, &scheme, 8).unwrap();
        assert_eq!(report.neglected_bin_count, 0);
        assert_eq!(report.retained_bin_count, 2);
    }

    #[test]
    fn all_bins_neglected_is_an_error() {
        let samples = [sample(0.5, true)];
        let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 2).unwrap();
        assert_eq!(
            compute_d_ece(&samples, &scheme, 8).unwrap_err(),
            MetricsError::NoRetainedSamples
        );
        assert_eq!(
            compute_d_ece(&[], &scheme, 1).unwrap_err(),
            MetricsError::NoRetainedSamples
        );
    }

    #[test]
    fn all_samples_normalization_shrinks_the_value() {
        let mut samples = alloc::vec![sample(0.1, true); 3];
        for _ in 0..8 {
            samples.push(sample(0.8, true));
        }
        let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 2).unwrap();
        let retained =
            compute_d_ece_with(&samples, &scheme, 8, WeightNormalization::RetainedSamples)
                .unwrap();
        let all =
            compute_d_ece_with(&samples, &scheme, 8, WeightNormalization::AllSamples).unwrap();
        assert!((retained.d_ece - 0.2).abs() < 1e-12);
        assert!((all.d_ece - 0.2 * 8.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn reliability_marks_empty_bins() {
        let samples = [sample(0.5, true), sample(0.5, true)];
        let bins = reliability_data(&samples, 10);
        assert_eq!(bins.len(), 10);
        let occupied: Vec<usize> =
            bins.iter().enumerate().filter(|(_, b)| b.count > 0).map(|(i, _)| i).collect();
        assert_eq!(occupied, [5]);
        assert_eq!(bins[5].precision, Some(1.0));
        assert_eq!(bins[5].mean_confidence, Some(0.5));
        assert_eq!(bins[0].precision, None);
        assert_eq!(bins[0].count, 0);
    }

    #[test]
    fn reliability_perfectly_calibrated_construction_has_zero_gaps() {
        // bin (0.2, 0.3): conf 0.25, 1 of 4 matched; bin (0.7, 0.8): conf 0.75, 3 of 4
        let mut samples = Vec::new();
        for i in 0..4 {
            samples.push(sample(0.25, i == 0));
            samples.push(sample(0.75, i != 0));
        }
        for bin in reliability_data(&samples, 10) {
            if bin.count > 0 {
                let gap =
                    (bin.precision.unwrap() - bin.mean_confidence.unwrap()).abs();
                assert!(gap < 1e-15);
            }
        }
    }

    #[test]
    fn heatmap_locality_and_reduction() {
        let samples = [
            positioned(0.6, true, 0.1, 0.1),
            positioned(0.8, false, 0.1, 0.1),
            positioned(0.7, true, 0.11, 0.12),
        ];
        // all samples in one cell of a 4x4 grid
        let grid = position_heatmap(&samples, 4, 10, 1);
        let full = compute_d_ece(
            &samples,
            &BinningScheme::uniform(FeatureSubset::ConfOnly, 10).unwrap(),
            1,
        )
        .unwrap();
        assert_eq!(grid.cell(0, 0).ece, Some(full.d_ece));
        assert_eq!(grid.cell(0, 0).sample_count, 3);
        let empty = grid.cells.iter().filter(|c| c.ece.is_none()).count();
        assert_eq!(empty, 15);

        // grid_n = 1 reduces to the global confidence-only value
        let single = position_heatmap(&samples, 1, 10, 1);
        assert_eq!(single.cell(0, 0).ece, Some(full.d_ece));
    }

    #[test]
    fn heatmap_perfect_cells_are_zero() {
        let mut samples = Vec::new();
        for (cx, cy) in [(0.2, 0.2), (0.7, 0.2), (0.2, 0.7), (0.7, 0.7)] {
            for i in 0..4 {
                samples.push(positioned(0.25, i == 0, cx, cy));
            }
        }
        let grid = position_heatmap(&samples, 2, 4, 1);
        for cell in &grid.cells {
            assert_eq!(cell.sample_count, 4);
            assert!(cell.ece.unwrap() < 1e-15);
        }
    }

    /// Naive reference: enumerate every bin of the scheme by linear
    /// scan, recomputing per-dimension indices inline.
    fn d_ece_reference(
        samples: &[MatchedSample],
        scheme: &BinningScheme,
        min_bin_count: usize,
    ) -> Option<(f64, usize)> {
        let dims = scheme.dims();
        let mut per_bin: Vec<(usize, f64, f64)> = Vec::new();
        for flat in 0..scheme.n_total() {
            let decoded = scheme.decode(flat);
            let mut count = 0usize;
            let mut sum_conf = 0.0;
            let mut sum_hit = 0.0;
            'next: for s in samples {
                for d in 0..dims {
                    let (lo, hi) = scheme.ranges()[d];
                    let n = scheme.bins_per_dim()[d];
                    let x = scheme.subset().feature(s, d).clamp(lo, hi);
                    let idx = (((x - lo) * n as f64 / (hi - lo)) as usize).min(n - 1);
                    if idx != decoded[d] {
                        continue 'next;
                    }
                }
                count += 1;
                sum_conf += s.confidence;
                sum_hit += s.hit();
            }
            if count > 0 {
                per_bin.push((count, sum_conf, sum_hit));
            }
        }
        let retained: Vec<_> = per_bin.iter().filter(|(c, _, _)| *c >= min_bin_count).collect();
        let total: usize = retained.iter().map(|(c, _, _)| c).sum();
        if total == 0 {
            return None;
        }
        let mut acc = 0.0;
        for (c, sum_conf, sum_hit) in &retained {
            let conf = sum_conf / *c as f64;
            let prec = sum_hit / *c as f64;
            acc += *c as f64 / total as f64 * (prec - conf).abs();
        }
        Some((acc, total))
    }

    fn arb_samples(max_len: usize) -> impl Strategy<Value = Vec<MatchedSample>> {
        proptest::collection::vec(
            (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.001..=1.0f64, 0.001..=1.0f64, any::<bool>()),
            1..max_len,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|(conf, cx, cy, w, h, m)| MatchedSample {
                    confidence: conf,
                    rel_cx: cx,
                    rel_cy: cy,
                    rel_w: w,
                    rel_h: h,
                    matched: m,
                    image_id: ImageId(1),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_naive_reference(
            samples in arb_samples(200),
            subset_pick in 0usize..4,
            bins in 2usize..5,
            min_count in 1usize..4,
        ) {
            let subset = FeatureSubset::ALL[subset_pick];
            let scheme = BinningScheme::uniform(subset, bins).unwrap();
            let ours = compute_d_ece(&samples, &scheme, min_count);
            let reference = d_ece_reference(&samples, &scheme, min_count);
            match (ours, reference) {
                (Ok(r), Some((v, total))) => {
                    prop_assert!((r.d_ece - v).abs() <= 1e-12);
                    prop_assert_eq!(r.retained_sample_count, total);
                }
                (Err(MetricsError::NoRetainedSamples), None) => {}
                other => prop_assert!(false, "disagreement: {:?}", other.0.map(|r| r.d_ece)),
            }
        }

        #[test]
        fn d_ece_is_in_unit_interval_and_order_free(samples in arb_samples(120)) {
            let scheme = BinningScheme::uniform(FeatureSubset::ConfCenter, 3).unwrap();
            if let Ok(report) = compute_d_ece(&samples, &scheme, 1) {
                prop_assert!((0.0..=1.0).contains(&report.d_ece));
                let mut reversed = samples.clone();
                reversed.reverse();
                let again = compute_d_ece(&reversed, &scheme, 1).unwrap();
                prop_assert!((report.d_ece - again.d_ece).abs() < 1e-12);
                prop_assert_eq!(report.retained_sample_count, again.retained_sample_count);
                prop_assert_eq!(report.neglected_bin_count, again.neglected_bin_count);
            }
        }

        #[test]
        fn zero_gap_iff_every_retained_bin_calibrated(samples in arb_samples(120)) {
            let scheme = BinningScheme::uniform(FeatureSubset::ConfOnly, 5).unwrap();
            if let Ok(report) = compute_d_ece(&samples, &scheme, 1) {
                let all_zero = report
                    .bins
                    .iter()
                    .filter(|b| b.retained)
                    .all(|b| b.gap() == 0.0);
                prop_assert_eq!(report.d_ece == 0.0, all_zero);
            }
        }
    }
}
