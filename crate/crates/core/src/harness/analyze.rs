use super::run::{RegionInfo, RootRecord};
use crate::dynamics::Phase;
use crate::error::{Error, Result};

/// Root-selection statistics of a trace against its region set.
#[derive(Clone, Debug, PartialEq)]
pub struct HotRegionStats {
    /// Randomisation-phase roots counted per region.
    pub counts: Vec<u64>,
    pub total: u64,
    /// Indices of the max-weight regions.
    pub hot_regions: Vec<usize>,
    /// Fraction of counted roots landing in the hot regions.
    pub hot_share: f64,
    /// Fraction of the database covered by the hot regions.
    pub hot_size: f64,
    /// Share the hot regions should receive: their weight over the total
    /// weight of non-empty regions.
    pub expected_share: f64,
    /// Selection probability of each region under the starting weights.
    pub expected: Vec<f64>,
}

impl HotRegionStats {
    /// True when the hot size is within 10% of `hr_size` and the hot share
    /// is within `share_tol` of its expected value.
    pub fn passes(&self, hr_size: f64, share_tol: f64) -> bool {
        (self.hot_size - hr_size).abs() <= 0.1 * hr_size
            && (self.hot_share - self.expected_share).abs() <= share_tol
    }

    /// Pearson chi-square statistic of the counts against the expected
    /// probabilities, over regions with nonzero probability.
    pub fn chi_square(&self) -> f64 {
        let n = self.total as f64;
        self.counts
            .iter()
            .zip(&self.expected)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&c, &p)| {
                let e = n * p;
                (c as f64 - e).powi(2) / e
            })
            .sum()
    }

    /// Degrees of freedom for [`chi_square`](Self::chi_square).
    pub fn degrees_of_freedom(&self) -> usize {
        self.expected
            .iter()
            .filter(|&&p| p > 0.0)
            .count()
            .saturating_sub(1)
    }
}

/// Counts randomisation-phase roots (fallbacks included) per region.
/// Dependency-phase roots are drawn from other region sets and are skipped.
pub fn analyze_trace(records: &[RootRecord], regions: &[RegionInfo]) -> Result<HotRegionStats> {
    if regions.is_empty() {
        return Err(Error::Analysis("no regions given".into()));
    }
    let mut counts = vec![0u64; regions.len()];
    for r in records.iter().filter(|r| r.phase == Phase::Randomisation) {
        let idx = r.region.ok_or_else(|| {
            Error::Analysis(format!("transaction {} has no region annotation", r.txn_id))
        })?;
        let slot = counts.get_mut(idx).ok_or_else(|| {
            Error::Analysis(format!(
                "transaction {} names region {idx}, only {} exist",
                r.txn_id,
                regions.len()
            ))
        })?;
        *slot += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Analysis("trace has no annotated roots".into()));
    }

    let live_weight = |r: &RegionInfo| if r.size > 0 { r.weight.max(0.0) } else { 0.0 };
    let sum_w: f64 = regions.iter().map(live_weight).sum();
    if sum_w <= 0.0 {
        return Err(Error::Analysis("region weights sum to zero".into()));
    }
    let max_w = regions.iter().map(live_weight).fold(f64::MIN, f64::max);
    let hot_regions: Vec<usize> = (0..regions.len())
        .filter(|&i| regions[i].size > 0 && regions[i].weight == max_w)
        .collect();
    let num_objects: usize = regions.iter().map(|r| r.size).sum();
    let hot_count: u64 = hot_regions.iter().map(|&i| counts[i]).sum();
    let hot_objects: usize = hot_regions.iter().map(|&i| regions[i].size).sum();

    Ok(HotRegionStats {
        total,
        hot_share: hot_count as f64 / total as f64,
        hot_size: hot_objects as f64 / num_objects as f64,
        expected_share: hot_regions.len() as f64 * max_w / sum_w,
        expected: regions.iter().map(|r| live_weight(r) / sum_w).collect(),
        hot_regions,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(txn_id: u64, region: Option<usize>) -> RootRecord {
        RootRecord {
            txn_id,
            root: 0,
            phase: Phase::Randomisation,
            fallback: false,
            region,
        }
    }

    #[test]
    fn missing_annotation_is_an_error() {
        let regions = [RegionInfo {
            size: 1,
            weight: 1.0,
        }];
        let err = analyze_trace(&[rec(0, Some(0)), rec(1, None)], &regions).unwrap_err();
        assert!(matches!(err, Error::Analysis(_)));
        assert!(analyze_trace(&[], &regions).is_err());
    }

    #[test]
    fn hand_counted_shares() {
        let regions = [
            RegionInfo {
                size: 10,
                weight: 3.0,
            },
            RegionInfo {
                size: 30,
                weight: 1.0,
            },
        ];
        let recs: Vec<_> = (0..8).map(|i| rec(i, Some(usize::from(i >= 6)))).collect();
        let s = analyze_trace(&recs, &regions).unwrap();
        assert_eq!(s.counts, vec![6, 2]);
        assert_eq!(s.hot_regions, vec![0]);
        assert_eq!(s.hot_share, 0.75);
        assert_eq!(s.hot_size, 0.25);
        assert_eq!(s.expected_share, 0.75);
        assert_eq!(s.chi_square(), 0.0);
        assert!(s.passes(0.25, 0.01));
        assert!(!s.passes(0.5, 0.01));
    }

    #[test]
    fn dependency_roots_ignored() {
        let regions = [RegionInfo {
            size: 5,
            weight: 1.0,
        }];
        let mut d = rec(1, None);
        d.phase = Phase::Dependency;
        let s = analyze_trace(&[rec(0, Some(0)), d], &regions).unwrap();
        assert_eq!(s.total, 1);
    }
}
