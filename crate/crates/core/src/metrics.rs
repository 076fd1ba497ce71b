//! Tolerance-aware spike matching and F1 scoring.
//!
//! A predicted spike counts as a true positive when it can be paired
//! one-to-one with a label spike on the same crystal within a time
//! tolerance. Matching is per crystal and chronological: the earliest label
//! takes the earliest prediction still available to it. For interval
//! constraints of the form |s - y| <= tolerance this greedy pairing attains
//! the maximum matching; [`match_spikes_reference`] certifies that with an
//! exhaustive augmenting-path matcher.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{CoincidencePair, Sample, SpikeTrain};

/// Default matching tolerance, in time steps.
pub const DEFAULT_TOLERANCE: u32 = 40;

/// Spike-count limit per crystal accepted by [`match_spikes_reference`].
pub const REFERENCE_SPIKE_LIMIT: usize = 10;

/// Counts and derived ratios of one matching pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchReport {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchReport {
    /// Derives the ratios from raw counts. Ratios with a zero denominator
    /// are reported as 0.
    pub fn from_counts(true_positives: u64, false_positives: u64, false_negatives: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(true_positives, true_positives + false_positives);
        let recall = ratio(true_positives, true_positives + false_negatives);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            true_positives,
            false_positives,
            false_negatives,
            precision,
            recall,
            f1,
        }
    }

    /// Machine-readable record: "tp fp fn precision recall f1".
    pub fn record_line(&self) -> String {
        format!(
            "{} {} {} {:.6} {:.6} {:.6}",
            self.true_positives,
            self.false_positives,
            self.false_negatives,
            self.precision,
            self.recall,
            self.f1
        )
    }
}

/// Sums counts over per-sample reports and rederives the ratios
/// (micro-averaging).
pub fn aggregate_reports<'a>(reports: impl IntoIterator<Item = &'a MatchReport>) -> MatchReport {
    let (mut tp, mut fp, mut fn_count) = (0, 0, 0);
    for r in reports {
        tp += r.true_positives;
        fp += r.false_positives;
        fn_count += r.false_negatives;
    }
    MatchReport::from_counts(tp, fp, fn_count)
}

fn check_configs(pred: &SpikeTrain, label: &SpikeTrain) -> Result<()> {
    if pred.config() != label.config() {
        return Err(Error::ConfigMismatch(format!(
            "prediction is {}x{}, label is {}x{}",
            pred.config().num_crystals(),
            pred.config().num_timesteps(),
            label.config().num_crystals(),
            label.config().num_timesteps()
        )));
    }
    Ok(())
}

/// Greedy chronological matching of one crystal's spike times.
///
/// Both lists are ascending. Returns (pred index, label index) pairs.
fn match_crystal(preds: &[u32], labels: &[u32], tolerance: u32) -> Vec<(usize, usize)> {
    let tol = i64::from(tolerance);
    let mut pairs = Vec::new();
    let mut p = 0;
    for (l, &y) in labels.iter().enumerate() {
        let y = i64::from(y);
        // Predictions before y - tol can never match this or any later label.
        while p < preds.len() && i64::from(preds[p]) < y - tol {
            p += 1;
        }
        if p < preds.len() && i64::from(preds[p]) <= y + tol {
            pairs.push((p, l));
            p += 1;
        }
    }
    pairs
}

/// Matches `pred` against `label` within `tolerance` time steps.
pub fn match_spikes(pred: &SpikeTrain, label: &SpikeTrain, tolerance: u32) -> Result<MatchReport> {
    check_configs(pred, label)?;
    let pred_times = pred.times_by_crystal();
    let label_times = label.times_by_crystal();
    let mut tp = 0u64;
    for (p, l) in pred_times.iter().zip(&label_times) {
        tp += match_crystal(p, l, tolerance).len() as u64;
    }
    Ok(MatchReport::from_counts(
        tp,
        pred.len() as u64 - tp,
        label.len() as u64 - tp,
    ))
}

/// Matched (pred time, label time) pairs, one list per crystal.
pub type MatchedPairs = Vec<Vec<(u32, u32)>>;

/// Like [`match_spikes`], also returning the matched (pred time, label time)
/// pairs per crystal.
pub fn match_spikes_detailed(
    pred: &SpikeTrain,
    label: &SpikeTrain,
    tolerance: u32,
) -> Result<(MatchReport, MatchedPairs)> {
    check_configs(pred, label)?;
    let pred_times = pred.times_by_crystal();
    let label_times = label.times_by_crystal();
    let mut tp = 0u64;
    let mut matched = Vec::with_capacity(pred_times.len());
    for (p, l) in pred_times.iter().zip(&label_times) {
        let pairs = match_crystal(p, l, tolerance);
        tp += pairs.len() as u64;
        matched.push(pairs.into_iter().map(|(i, j)| (p[i], l[j])).collect());
    }
    let report =
        MatchReport::from_counts(tp, pred.len() as u64 - tp, label.len() as u64 - tp);
    Ok((report, matched))
}

/// Exhaustive maximum-matching oracle for [`match_spikes`].
///
/// Runs augmenting-path bipartite matching per crystal. Guarded to small
/// instances; this exists to certify the greedy matcher in tests, not for
/// production evaluation.
pub fn match_spikes_reference(
    pred: &SpikeTrain,
    label: &SpikeTrain,
    tolerance: u32,
) -> Result<MatchReport> {
    check_configs(pred, label)?;
    let pred_times = pred.times_by_crystal();
    let label_times = label.times_by_crystal();

    let mut tp = 0u64;
    for (preds, labels) in pred_times.iter().zip(&label_times) {
        for times in [preds, labels] {
            if times.len() > REFERENCE_SPIKE_LIMIT {
                return Err(Error::MatcherSizeGuard {
                    spikes: times.len(),
                    limit: REFERENCE_SPIKE_LIMIT,
                });
            }
        }
        tp += maximum_matching(preds, labels, tolerance);
    }
    Ok(MatchReport::from_counts(
        tp,
        pred.len() as u64 - tp,
        label.len() as u64 - tp,
    ))
}

fn maximum_matching(preds: &[u32], labels: &[u32], tolerance: u32) -> u64 {
    let tol = i64::from(tolerance);
    let edge = |p: usize, l: usize| (i64::from(preds[p]) - i64::from(labels[l])).abs() <= tol;

    // owner[l] = prediction currently matched to label l.
    let mut owner: Vec<Option<usize>> = vec![None; labels.len()];

    fn try_assign(
        p: usize,
        edge: &impl Fn(usize, usize) -> bool,
        owner: &mut Vec<Option<usize>>,
        visited: &mut Vec<bool>,
    ) -> bool {
        for l in 0..owner.len() {
            if !edge(p, l) || visited[l] {
                continue;
            }
            visited[l] = true;
            if owner[l].is_none()
                || try_assign(owner[l].unwrap(), edge, owner, visited)
            {
                owner[l] = Some(p);
                return true;
            }
        }
        false
    }

    let mut matched = 0u64;
    for p in 0..preds.len() {
        let mut visited = vec![false; labels.len()];
        if try_assign(p, &edge, &mut owner, &mut visited) {
            matched += 1;
        }
    }
    matched
}

/// Scores predictions against the labels of `samples`, micro-averaging the
/// counts across samples.
///
/// Returns the aggregate report and the per-sample reports in input order.
pub fn evaluate_dataset(
    predictions: &[SpikeTrain],
    samples: &[Sample],
    tolerance: u32,
) -> Result<(MatchReport, Vec<MatchReport>)> {
    if predictions.len() != samples.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: samples.len(),
        });
    }
    let per_sample: Vec<MatchReport> = predictions
        .par_iter()
        .zip(samples)
        .map(|(pred, sample)| match_spikes(pred, sample.label(), tolerance))
        .collect::<Result<_>>()?;
    Ok((aggregate_reports(&per_sample), per_sample))
}

/// Line-of-response level diagnostic: a predicted pair counts as a true
/// positive only when both of its crystals, taken at the pair's time stamp,
/// match label spikes at one shared label time.
///
/// This is stricter than spike-level scoring and not comparable to it.
/// Label pairs are estimated as half the label spike count, which is exact
/// for simulator labels up to event collisions.
pub fn match_pairs(
    pairs: &[CoincidencePair],
    label: &SpikeTrain,
    tolerance: u32,
) -> Result<MatchReport> {
    let mut events = std::collections::BTreeSet::new();
    for pair in pairs {
        events.insert(crate::types::SpikeEvent::new(pair.crystal_a, pair.time));
        events.insert(crate::types::SpikeEvent::new(pair.crystal_b, pair.time));
    }
    let pred = SpikeTrain::new(label.config(), events.into_iter().collect())?;
    let (_, matched) = match_spikes_detailed(&pred, label, tolerance)?;
    let label_time_of = |crystal: u32, time: u32| -> Option<u32> {
        matched[crystal as usize]
            .iter()
            .find(|&&(p, _)| p == time)
            .map(|&(_, l)| l)
    };

    let mut tp = 0u64;
    for pair in pairs {
        let a = label_time_of(pair.crystal_a, pair.time);
        let b = label_time_of(pair.crystal_b, pair.time);
        if let (Some(a), Some(b)) = (a, b) {
            if a == b {
                tp += 1;
            }
        }
    }
    let label_pairs = label.len() as u64 / 2;
    Ok(MatchReport::from_counts(
        tp,
        pairs.len() as u64 - tp,
        label_pairs.saturating_sub(tp),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DetectorConfig, SpikeEvent};
    use proptest::prelude::*;

    fn detector() -> DetectorConfig {
        DetectorConfig::new(8, 1000).unwrap()
    }

    fn train(events: &[(u32, u32)]) -> SpikeTrain {
        let events = events
            .iter()
            .map(|&(c, t)| SpikeEvent::new(c, t))
            .collect();
        SpikeTrain::new(detector(), events).unwrap()
    }

    #[test]
    fn match_at_exact_tolerance_counts() {
        let report = match_spikes(&train(&[(3, 100)]), &train(&[(3, 130)]), 40).unwrap();
        assert_eq!(report.true_positives, 1);
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.false_negatives, 0);
        assert_eq!(report.f1, 1.0);

        let report = match_spikes(&train(&[(3, 100)]), &train(&[(3, 140)]), 40).unwrap();
        assert_eq!(report.true_positives, 1);
    }

    #[test]
    fn match_beyond_tolerance_does_not_count() {
        let report = match_spikes(&train(&[(3, 150)]), &train(&[(3, 100)]), 40).unwrap();
        assert_eq!(report.true_positives, 0);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.false_negatives, 1);
        assert_eq!(report.f1, 0.0);
    }

    #[test]
    fn identical_trains_score_perfectly() {
        let t = train(&[(0, 5), (3, 100), (3, 200), (7, 999)]);
        let report = match_spikes(&t, &t, 0).unwrap();
        assert_eq!(report.true_positives, 4);
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.false_negatives, 0);
        assert_eq!((report.precision, report.recall, report.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn matching_is_crystal_local() {
        // Same times, different crystals: no match.
        let report = match_spikes(&train(&[(2, 100)]), &train(&[(3, 100)]), 40).unwrap();
        assert_eq!(report.true_positives, 0);
    }

    #[test]
    fn empty_cases_use_the_zero_denominator_rule() {
        let empty = SpikeTrain::empty(detector());
        let some = train(&[(1, 10), (2, 20)]);

        let report = match_spikes(&empty, &some, 40).unwrap();
        assert_eq!(report.true_positives, 0);
        assert_eq!(report.false_negatives, 2);
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));

        let report = match_spikes(&some, &empty, 40).unwrap();
        assert_eq!(report.false_positives, 2);
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));

        let report = match_spikes(&empty, &empty, 40).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn one_prediction_cannot_match_two_labels() {
        let report = match_spikes(&train(&[(0, 100)]), &train(&[(0, 90), (0, 110)]), 40).unwrap();
        assert_eq!(report.true_positives, 1);
        assert_eq!(report.false_negatives, 1);
    }

    #[test]
    fn greedy_takes_the_earliest_available_prediction() {
        // Labels at 10 and 12; predictions at 11 and 50. Pairing 10<-11
        // leaves 12 for 50 (within tolerance 40): both labels match.
        let report = match_spikes(&train(&[(0, 11), (0, 50)]), &train(&[(0, 10), (0, 12)]), 40)
            .unwrap();
        assert_eq!(report.true_positives, 2);
    }

    #[test]
    fn config_mismatch_is_an_error() {
        let other = SpikeTrain::empty(DetectorConfig::new(16, 1000).unwrap());
        assert!(match_spikes(&other, &train(&[]), 40).is_err());
    }

    #[test]
    fn reference_guard_rejects_big_crystals() {
        let times: Vec<(u32, u32)> = (0..11).map(|i| (0, i * 50)).collect();
        let big = train(&times);
        match match_spikes_reference(&big, &train(&[]), 40) {
            Err(Error::MatcherSizeGuard { spikes, limit }) => {
                assert_eq!(spikes, 11);
                assert_eq!(limit, 10);
            }
            other => panic!("expected MatcherSizeGuard, got {other:?}"),
        }
    }

    #[test]
    fn record_line_format() {
        let report = MatchReport::from_counts(2, 1, 1);
        assert_eq!(report.record_line(), "2 1 1 0.666667 0.666667 0.666667");
    }

    #[test]
    fn evaluate_dataset_micro_averages() {
        let mk_sample = |input: &[(u32, u32)], label: &[(u32, u32)]| {
            Sample::new(train(input), train(label)).unwrap()
        };
        // Sample 1: TP=1, FP=0, FN=1. Sample 2: TP=1, FP=1, FN=0.
        let samples = vec![
            mk_sample(&[(0, 10), (0, 500)], &[(0, 10), (0, 500)]),
            mk_sample(&[(1, 10), (2, 700)], &[(1, 10)]),
        ];
        let predictions = vec![train(&[(0, 10)]), train(&[(1, 10), (2, 700)])];
        let (total, per_sample) = evaluate_dataset(&predictions, &samples, 40).unwrap();
        assert_eq!(per_sample.len(), 2);
        assert_eq!(total.true_positives, 2);
        assert_eq!(total.false_positives, 1);
        assert_eq!(total.false_negatives, 1);
        assert!((total.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((total.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((total.f1 - 2.0 / 3.0).abs() < 1e-12);

        assert!(evaluate_dataset(&predictions[..1], &samples, 40).is_err());
    }

    #[test]
    fn pair_level_scoring_requires_a_shared_label_time() {
        let label = train(&[(1, 100), (5, 100), (2, 300), (7, 500)]);
        let pairs = vec![
            CoincidencePair::new(90, 1, 5).unwrap(),
            CoincidencePair::new(300, 2, 6).unwrap(),
        ];
        // Pair (1,5) at t=90: both crystals match label time 100 -> TP.
        // Pair (2,6): crystal 6 has no label spike at all -> FP.
        let report = match_pairs(&pairs, &label, 40).unwrap();
        assert_eq!(report.true_positives, 1);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.false_negatives, 1);
    }

    #[test]
    fn pair_level_scoring_rejects_split_label_events() {
        // Both crystals match individually, but to label spikes from two
        // different times: not one coincidence, so not a pair TP.
        let label = train(&[(0, 180), (4, 240)]);
        let pairs = vec![CoincidencePair::new(200, 0, 4).unwrap()];
        let report = match_pairs(&pairs, &label, 40).unwrap();
        assert_eq!(report.true_positives, 0);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.false_negatives, 1);
    }

    fn arb_times(max_len: usize) -> impl Strategy<Value = Vec<(u32, u32)>> {
        proptest::collection::btree_set((0u32..8, 0u32..200), 0..max_len)
            .prop_map(|set| set.into_iter().collect())
    }

    proptest! {
        #[test]
        fn greedy_equals_exhaustive_maximum(
            pred in arb_times(20),
            label in arb_times(20),
            tolerance in 0u32..60,
        ) {
            let pred = train(&pred);
            let label = train(&label);
            prop_assume!(pred.times_by_crystal().iter().all(|t| t.len() <= 10));
            prop_assume!(label.times_by_crystal().iter().all(|t| t.len() <= 10));
            let greedy = match_spikes(&pred, &label, tolerance).unwrap();
            let exact = match_spikes_reference(&pred, &label, tolerance).unwrap();
            prop_assert_eq!(greedy, exact);
        }

        #[test]
        fn swapping_sides_swaps_fp_and_fn(
            a in arb_times(20),
            b in arb_times(20),
            tolerance in 0u32..60,
        ) {
            let a = train(&a);
            let b = train(&b);
            let fwd = match_spikes(&a, &b, tolerance).unwrap();
            let rev = match_spikes(&b, &a, tolerance).unwrap();
            prop_assert_eq!(fwd.true_positives, rev.true_positives);
            prop_assert_eq!(fwd.false_positives, rev.false_negatives);
            prop_assert_eq!(fwd.false_negatives, rev.false_positives);
        }

        #[test]
        fn wider_tolerance_never_loses_matches(
            pred in arb_times(20),
            label in arb_times(20),
            tolerance in 0u32..60,
        ) {
            let pred = train(&pred);
            let label = train(&label);
            let narrow = match_spikes(&pred, &label, tolerance).unwrap();
            let wide = match_spikes(&pred, &label, tolerance + 7).unwrap();
            prop_assert!(wide.true_positives >= narrow.true_positives);
            prop_assert!(narrow.true_positives <= pred.len().min(label.len()) as u64);
        }
    }
}
