//! Validation schemes and metrics: stratified 70-30 split, stratified
//! k-fold cross-validation, confusion matrix, the usual rate metrics, ROC
//! curve and trapezoid AUC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, truth: i8, predicted: i8) {
        match (truth > 0, predicted > 0) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Rate metrics of a confusion matrix. Degenerate 0/0 ratios are reported
/// as 0 and named in `warnings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub fpr: f64,
    pub warnings: Vec<String>,
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let mut warnings = Vec::new();
    let mut ratio = |name: &str, num: u64, den: u64| -> f64 {
        if den == 0 {
            warnings.push(format!("{name}: 0/0 denominator"));
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio("accuracy", cm.tp + cm.tn, cm.total());
    let precision = ratio("precision", cm.tp, cm.tp + cm.fp);
    let recall = ratio("recall", cm.tp, cm.tp + cm.fn_);
    let specificity = ratio("specificity", cm.tn, cm.tn + cm.fp);
    let fpr = ratio("fpr", cm.fp, cm.fp + cm.tn);
    Metrics {
        accuracy,
        precision,
        recall,
        specificity,
        sensitivity: recall,
        fpr,
        warnings,
    }
}

fn class_indices(labels: &[i8]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y > 0 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (pos, neg)
}

/// Stratified 70-30 split: per class, floor(0.7 n) samples go to the train
/// set after a seeded in-class shuffle. Returns (train, test) index sets.
pub fn split_70_30(labels: &[i8], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let (pos, neg) = class_indices(labels);
    for (label, class) in [(1i8, &pos), (-1i8, &neg)] {
        if class.len() < 2 {
            return Err(Error::ClassTooSmall { label, min: 2, got: class.len() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [pos, neg] {
        let mut idx = class;
        idx.shuffle(&mut rng);
        let n_train = idx.len() * 7 / 10;
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified k-fold: seeded per-class shuffle, then round-robin assignment
/// to folds. Returns (train, test) index sets per fold.
pub fn kfold(labels: &[i8], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 || k > labels.len() {
        return Err(Error::FoldCount { k, n: labels.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let (pos, neg) = class_indices(labels);
    let mut next_fold = 0usize;
    for class in [pos, neg] {
        let mut idx = class;
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next_fold % k;
            next_fold += 1;
        }
    }
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        folds.push((train, test));
    }
    Ok(folds)
}

/// ROC curve by threshold sweep over distinct scores (descending), plus
/// trapezoid AUC. Points run from (0,0) to (1,1); tied scores advance as a
/// single threshold step.
pub fn roc_curve(scores: &[(f64, i8)]) -> Result<(Vec<(f64, f64)>, f64)> {
    let n_pos = scores.iter().filter(|(_, y)| *y > 0).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut sorted: Vec<(f64, i8)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores must be finite"));

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 > 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok((points, auc))
}

/// One evaluation outcome: confusion matrix, its metrics and (when both
/// classes are present among the scored samples) the ROC curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Builds a report from decision values and true labels. Prediction uses
/// sign with ties to +1.
pub fn report_from_scores(scores: &[(f64, i8)]) -> EvalReport {
    let mut cm = ConfusionMatrix::default();
    for &(score, truth) in scores {
        cm.record(truth, if score >= 0.0 { 1 } else { -1 });
    }
    let mut m = metrics(&cm);
    let (roc, auc) = match roc_curve(scores) {
        Ok(r) => r,
        Err(_) => {
            m.warnings.push("roc: single-class sample, curve skipped".into());
            (Vec::new(), 0.0)
        }
    };
    EvalReport { confusion: cm, metrics: m, roc, auc }
}

/// Evaluates a trained model on a labeled sample set.
pub fn evaluate_model(
    model: &crate::svm::SvmModel,
    features: &[Vec<f64>],
    labels: &[i8],
) -> Result<EvalReport> {
    let mut scores = Vec::with_capacity(features.len());
    for (x, &y) in features.iter().zip(labels) {
        scores.push((model.decision_value(x)?, y));
    }
    Ok(report_from_scores(&scores))
}

/// Cross-validation outcome: unweighted mean metrics over folds plus the
/// per-fold reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean: Metrics,
    pub mean_auc: f64,
    pub folds: Vec<EvalReport>,
}

/// Stratified k-fold cross-validation. The scaler is fitted inside each
/// fold's training call, so test folds never leak into standardization.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[i8],
    k: usize,
    cfg: &crate::svm::TrainConfig,
    seed: u64,
) -> Result<CvReport> {
    let folds = kfold(labels, k, seed)?;
    let mut reports = Vec::with_capacity(k);
    for (train_idx, test_idx) in folds {
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
        let train_y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
        let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| features[i].clone()).collect();
        let test_y: Vec<i8> = test_idx.iter().map(|&i| labels[i]).collect();
        let model = crate::svm::train_model(&train_x, &train_y, cfg)?;
        reports.push(evaluate_model(&model, &test_x, &test_y)?);
    }

    let n = reports.len() as f64;
    let mean_of = |f: fn(&Metrics) -> f64| reports.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
    let mut warnings = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        for w in &r.metrics.warnings {
            warnings.push(format!("fold {i}: {w}"));
        }
    }
    let recall = mean_of(|m| m.recall);
    let mean = Metrics {
        accuracy: mean_of(|m| m.accuracy),
        precision: mean_of(|m| m.precision),
        recall,
        specificity: mean_of(|m| m.specificity),
        sensitivity: recall,
        fpr: mean_of(|m| m.fpr),
        warnings,
    };
    let mean_auc = reports.iter().map(|r| r.auc).sum::<f64>() / n;
    Ok(CvReport { mean, mean_auc, folds: reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{KernelSpec, TrainConfig};
    use proptest::prelude::*;

    #[test]
    fn metrics_worked_example() {
        let m = metrics(&ConfusionMatrix { tp: 9, fn_: 2, fp: 1, tn: 8 });
        assert!((m.accuracy - 0.85).abs() < 1e-12);
        assert!((m.precision - 0.9).abs() < 1e-12);
        assert!((m.recall - 0.8182).abs() < 1e-4);
        assert!((m.specificity - 0.8889).abs() < 1e-4);
        assert!((m.fpr - 0.1111).abs() < 1e-4);
        assert_eq!(m.recall, m.sensitivity);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn metrics_single_class_degenerate() {
        let m = metrics(&ConfusionMatrix { tp: 5, fp: 0, tn: 0, fn_: 0 });
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.specificity, 0.0);
        assert!(m.warnings.iter().any(|w| w.starts_with("specificity")));
    }

    #[test]
    fn metrics_empty_matrix() {
        let m = metrics(&ConfusionMatrix::default());
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.warnings.len(), 5);
    }

    #[test]
    fn split_stratified_counts() {
        let labels = [vec![1i8; 10], vec![-1i8; 10]].concat();
        let (train, test) = split_70_30(&labels, 0).unwrap();
        assert_eq!(train.iter().filter(|&&i| labels[i] > 0).count(), 7);
        assert_eq!(train.iter().filter(|&&i| labels[i] < 0).count(), 7);
        assert_eq!(test.len(), 6);
        let mut all = [train, test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn split_floor_rule() {
        let labels = [1i8, 1, 1, -1, -1, -1];
        let (train, test) = split_70_30(&labels, 1).unwrap();
        assert_eq!(train.len(), 4); // floor(0.7*3) = 2 per class
        assert_eq!(test.len(), 2);
    }

    #[test]
    fn split_deterministic() {
        let labels = [vec![1i8; 9], vec![-1i8; 11]].concat();
        assert_eq!(split_70_30(&labels, 7).unwrap(), split_70_30(&labels, 7).unwrap());
    }

    #[test]
    fn split_rejects_tiny_class() {
        assert!(split_70_30(&[1, -1, -1], 0).is_err());
    }

    #[test]
    fn kfold_even_division() {
        let labels = [vec![1i8; 5], vec![-1i8; 5]].concat();
        let folds = kfold(&labels, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        for (train, test) in &folds {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
        }
    }

    #[test]
    fn kfold_remainder_sizes() {
        let labels = [vec![1i8; 6], vec![-1i8; 5]].concat();
        let folds = kfold(&labels, 5, 3).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(|(_, t)| t.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn kfold_rejects_k_above_n() {
        assert!(kfold(&[1, -1, 1], 4, 0).is_err());
    }

    #[test]
    fn roc_perfect_ordering() {
        let scores = [(2.0, 1), (1.5, 1), (0.5, -1), (0.1, -1)];
        let (points, auc) = roc_curve(&scores).unwrap();
        assert_eq!(auc, 1.0);
        assert_eq!(points.first(), Some(&(0.0, 0.0)));
        assert_eq!(points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn roc_inverted_ordering() {
        let scores = [(2.0, -1), (1.5, -1), (0.5, 1), (0.1, 1)];
        let (_, auc) = roc_curve(&scores).unwrap();
        assert_eq!(auc, 0.0);
    }

    #[test]
    fn roc_interleaved() {
        let scores = [(0.9, 1), (0.8, -1), (0.7, 1), (0.6, -1)];
        let (_, auc) = roc_curve(&scores).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn roc_rejects_single_class() {
        assert!(roc_curve(&[(0.5, 1), (0.2, 1)]).is_err());
    }

    /// Pair-ordering statistic: fraction of (positive, negative) pairs with
    /// the positive scored higher, ties counted half.
    pub(crate) fn pair_ordering_auc(scores: &[(f64, i8)]) -> f64 {
        let pos: Vec<f64> = scores.iter().filter(|(_, y)| *y > 0).map(|(s, _)| *s).collect();
        let neg: Vec<f64> = scores.iter().filter(|(_, y)| *y <= 0).map(|(s, _)| *s).collect();
        let mut sum = 0.0;
        for &p in &pos {
            for &q in &neg {
                sum += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        sum / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn cross_validate_separable() {
        // wide-gap blobs so every fold's model classifies its test points
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..25 {
            x.push(vec![1.0 + rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0)]);
            y.push(1);
            x.push(vec![-1.0 - rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0)]);
            y.push(-1);
        }
        let mut cfg = TrainConfig::new(KernelSpec::linear(), 12);
        cfg.c = 10.0;
        let report = cross_validate(&x, &y, 5, &cfg, 12).unwrap();
        assert_eq!(report.mean.accuracy, 1.0);
        assert_eq!(report.folds.len(), 5);
    }

    #[test]
    fn cross_validate_deterministic() {
        let (x, y) = crate::svm::test_util::separable_blobs(10, 3);
        let cfg = TrainConfig::new(KernelSpec::gaussian(0.5), 3);
        let a = cross_validate(&x, &y, 4, &cfg, 3).unwrap();
        let b = cross_validate(&x, &y, 4, &cfg, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cross_validate_label_shuffle_near_chance() {
        // permutation-null sanity band: features carry no label signal
        use rand::Rng;
        use rand::SeedableRng;
        let mut accs = Vec::new();
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Vec<f64>> = (0..40)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let y: Vec<i8> = (0..40).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
            let cfg = TrainConfig::new(KernelSpec::linear(), seed);
            accs.push(cross_validate(&x, &y, 5, &cfg, seed).unwrap().mean.accuracy);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((0.3..=0.7).contains(&mean), "null accuracy {mean} outside band");
    }

    proptest! {
        #[test]
        fn auc_matches_pair_ordering(
            pos in proptest::collection::vec(0u8..32, 1..40),
            neg in proptest::collection::vec(0u8..32, 1..40),
        ) {
            // coarse score grid forces plenty of ties
            let scores: Vec<(f64, i8)> = pos
                .iter()
                .map(|&v| (v as f64 / 8.0, 1i8))
                .chain(neg.iter().map(|&v| (v as f64 / 8.0, -1i8)))
                .collect();
            let (_, auc) = roc_curve(&scores).unwrap();
            prop_assert!((auc - pair_ordering_auc(&scores)).abs() < 1e-9);
        }

        #[test]
        fn roc_points_monotone(
            pos in proptest::collection::vec(any::<i8>(), 1..30),
            neg in proptest::collection::vec(any::<i8>(), 1..30),
        ) {
            let scores: Vec<(f64, i8)> = pos
                .iter()
                .map(|&v| (v as f64, 1i8))
                .chain(neg.iter().map(|&v| (v as f64, -1i8)))
                .collect();
            let (points, _) = roc_curve(&scores).unwrap();
            prop_assert!(points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        }

        #[test]
        fn metrics_scale_invariant(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50, m in 1u64..5) {
            let a = metrics(&ConfusionMatrix { tp, fp, tn, fn_ });
            let b = metrics(&ConfusionMatrix { tp: tp * m, fp: fp * m, tn: tn * m, fn_: fn_ * m });
            prop_assert_eq!(a, b);
        }

        #[test]
        fn kfold_partitions_samples(n_pos in 1usize..20, n_neg in 1usize..20, k in 2usize..6, seed in 0u64..4) {
            let labels = [vec![1i8; n_pos], vec![-1i8; n_neg]].concat();
            prop_assume!(k <= labels.len());
            let folds = kfold(&labels, k, seed).unwrap();
            let mut seen = vec![0usize; labels.len()];
            for (train, test) in &folds {
                for &i in test { seen[i] += 1; }
                let mut union: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
                union.sort_unstable();
                prop_assert_eq!(union, (0..labels.len()).collect::<Vec<_>>());
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            // per-class fold sizes differ by at most one
            for class in [1i8, -1i8] {
                let sizes: Vec<usize> = folds
                    .iter()
                    .map(|(_, t)| t.iter().filter(|&&i| labels[i] == class).count())
                    .collect();
                let lo = sizes.iter().min().unwrap();
                let hi = sizes.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
