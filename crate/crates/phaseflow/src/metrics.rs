//! Frame accuracy and margin-tolerant per-class Jaccard scores.
//!
//! The Jaccard variant used here forgives boundary jitter: a predicted
//! frame of class `c` counts as a true positive when the ground truth
//! contains `c` anywhere within a symmetric margin around it. The margin is
//! given in seconds and converted to frames with the sequences' own rate.
//! Only the true-positive count is relaxed; the denominator stays the exact
//! union `|pred^-1(c) ∪ gt^-1(c)|`, so scores are bounded by 100 and a zero
//! margin degrades to the classic Jaccard index.

use crate::error::{Error, Result};
use crate::sequence::LabelSequence;

use serde::Serialize;

/// Evaluation summary for one prediction/ground-truth pair.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    /// Exact per-frame accuracy, percent.
    pub accuracy: f64,
    /// Margin-tolerant Jaccard per class, percent; `None` when the class
    /// occurs in neither sequence.
    pub per_class_jaccard: Vec<Option<f64>>,
    /// Mean over the defined per-class scores.
    pub jaccard_mean: f64,
    /// Population standard deviation over the defined per-class scores.
    pub jaccard_std: f64,
    /// Margin the Jaccard scores were computed with.
    pub margin_seconds: f64,
}

/// Per-frame dump row pairing a prediction with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame: usize,
    /// Frame timestamp in seconds.
    pub time_s: f64,
    pub pred: usize,
    pub gt: usize,
    /// Exact agreement at this frame.
    pub matches: bool,
}

/// Percentage of frames where prediction equals ground truth, exactly.
pub fn accuracy(pred: &LabelSequence, gt: &LabelSequence) -> Result<f64> {
    check_pair(pred, gt)?;
    if pred.is_empty() {
        return Err(Error::EmptySequences);
    }
    let hits = pred
        .labels()
        .iter()
        .zip(gt.labels())
        .filter(|(p, g)| p == g)
        .count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

/// Margin-tolerant Jaccard score per class, percent.
///
/// With margin `m` frames (`round(margin_seconds * fps)`), a predicted
/// frame `t` of class `c` is a true positive when some ground-truth frame
/// in `t - m ..= t + m` has class `c`. The score is
/// `100 * TP_c / |pred^-1(c) ∪ gt^-1(c)|`; classes absent from both
/// sequences get `None`.
pub fn jaccard_per_class(
    pred: &LabelSequence,
    gt: &LabelSequence,
    classes: usize,
    margin_seconds: f64,
) -> Result<Vec<Option<f64>>> {
    check_pair(pred, gt)?;
    if pred.is_empty() {
        return Err(Error::EmptySequences);
    }
    if classes == 0 {
        return Err(Error::InvalidParameter(
            "number of classes must be at least 1".into(),
        ));
    }
    if !(margin_seconds.is_finite() && margin_seconds >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "margin must be finite and non-negative, got {margin_seconds}"
        )));
    }
    pred.check_range(classes)?;
    gt.check_range(classes)?;

    let t = pred.len();
    let margin = (margin_seconds * pred.fps()).round() as usize;

    // counts[t + 1][c] = occurrences of class c in gt[..t]; prefix sums make
    // each window query O(1).
    let mut counts = vec![0u32; (t + 1) * classes];
    for (u, &g) in gt.labels().iter().enumerate() {
        let (prev, cur) = counts.split_at_mut((u + 1) * classes);
        cur[..classes].copy_from_slice(&prev[u * classes..]);
        cur[g] += 1;
    }
    let window_has = |c: usize, lo: usize, hi: usize| {
        // Occurrences of c in gt[lo..=hi].
        counts[(hi + 1) * classes + c] > counts[lo * classes + c]
    };

    let mut pred_count = vec![0u64; classes];
    let mut gt_count = vec![0u64; classes];
    let mut exact_inter = vec![0u64; classes];
    let mut tp = vec![0u64; classes];
    for (u, (&p, &g)) in pred.labels().iter().zip(gt.labels()).enumerate() {
        pred_count[p] += 1;
        gt_count[g] += 1;
        if p == g {
            exact_inter[p] += 1;
        }
        let lo = u.saturating_sub(margin);
        let hi = (u + margin).min(t - 1);
        if window_has(p, lo, hi) {
            tp[p] += 1;
        }
    }

    Ok((0..classes)
        .map(|c| {
            let union = pred_count[c] + gt_count[c] - exact_inter[c];
            if union == 0 {
                None
            } else {
                Some(100.0 * tp[c] as f64 / union as f64)
            }
        })
        .collect())
}

/// Computes accuracy and the Jaccard family in one report.
pub fn summarize(
    pred: &LabelSequence,
    gt: &LabelSequence,
    classes: usize,
    margin_seconds: f64,
) -> Result<EvalReport> {
    let accuracy = accuracy(pred, gt)?;
    let per_class_jaccard = jaccard_per_class(pred, gt, classes, margin_seconds)?;
    let defined: Vec<f64> = per_class_jaccard.iter().filter_map(|&j| j).collect();
    let (jaccard_mean, jaccard_std) = if defined.is_empty() {
        (0.0, 0.0)
    } else {
        let n = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let var = defined.iter().map(|j| (j - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    Ok(EvalReport {
        accuracy,
        per_class_jaccard,
        jaccard_mean,
        jaccard_std,
        margin_seconds,
    })
}

/// One record per frame for CSV export or inspection.
pub fn dump_frames(pred: &LabelSequence, gt: &LabelSequence) -> Result<Vec<FrameRecord>> {
    check_pair(pred, gt)?;
    Ok(pred
        .labels()
        .iter()
        .zip(gt.labels())
        .enumerate()
        .map(|(frame, (&p, &g))| FrameRecord {
            frame,
            time_s: frame as f64 / pred.fps(),
            pred: p,
            gt: g,
            matches: p == g,
        })
        .collect())
}

fn check_pair(pred: &LabelSequence, gt: &LabelSequence) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    if pred.fps() != gt.fps() {
        return Err(Error::FpsMismatch {
            left: pred.fps(),
            right: gt.fps(),
        });
    }
    Ok(())
}
