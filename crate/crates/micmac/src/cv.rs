//! Subject-based nested cross-validation: fold planning, per-fold selection
//! runs, frequency re-ranking, majority-vote subject classification and
//! top-k curve evaluation.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, LearnerConfig};
use crate::selectors::{self, SelectionTrace, SelectorConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerFold {
    pub train_subjects: Vec<String>,
    pub val_subjects: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterFold {
    pub train_val_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub inner: Vec<InnerFold>,
}

/// Subject-partitioned outer/inner fold assignments. Folds never split a
/// subject's samples across train and test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub outer: Vec<OuterFold>,
    pub seed: u64,
}

fn slices(n: usize, n_folds: usize) -> Vec<(usize, usize)> {
    // nearly-equal fold sizes; the first n % n_folds folds take one extra
    let base = n / n_folds;
    let extra = n % n_folds;
    let mut out = Vec::with_capacity(n_folds);
    let mut start = 0;
    for i in 0..n_folds {
        let len = base + usize::from(i < extra);
        out.push((start, start + len));
        start += len;
    }
    out
}

/// Builds the nested fold plan from a seeded subject permutation.
pub fn make_fold_plan(
    subjects: &[String],
    labels: &[u8],
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if subjects.len() < n_outer {
        return Err(Error::InvalidConfig(format!(
            "{} subjects cannot form {n_outer} outer folds",
            subjects.len()
        )));
    }
    if n_outer < 2 || n_inner < 2 {
        return Err(Error::InvalidConfig("need ≥ 2 outer and inner folds".into()));
    }
    let label_of: HashMap<&String, u8> = subjects.iter().zip(labels.iter().copied()).collect();
    let mut order: Vec<String> = subjects.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let both_classes = |set: &[String]| -> bool {
        set.iter().any(|s| label_of[s] == 0) && set.iter().any(|s| label_of[s] == 1)
    };

    let mut outer = Vec::with_capacity(n_outer);
    for (start, end) in slices(order.len(), n_outer) {
        let test_subjects: Vec<String> = order[start..end].to_vec();
        let train_val_subjects: Vec<String> = order[..start]
            .iter()
            .chain(&order[end..])
            .cloned()
            .collect();
        if train_val_subjects.len() < n_inner {
            return Err(Error::InvalidConfig(format!(
                "{} train/val subjects cannot form {n_inner} inner folds",
                train_val_subjects.len()
            )));
        }
        let mut inner = Vec::with_capacity(n_inner);
        for (s, e) in slices(train_val_subjects.len(), n_inner) {
            let val_subjects: Vec<String> = train_val_subjects[s..e].to_vec();
            let train_subjects: Vec<String> = train_val_subjects[..s]
                .iter()
                .chain(&train_val_subjects[e..])
                .cloned()
                .collect();
            if !both_classes(&train_subjects) {
                return Err(Error::InvalidConfig(
                    "an inner training set lost one of the classes".into(),
                ));
            }
            inner.push(InnerFold { train_subjects, val_subjects });
        }
        if !both_classes(&train_val_subjects) {
            return Err(Error::InvalidConfig(
                "an outer training set lost one of the classes".into(),
            ));
        }
        outer.push(OuterFold { train_val_subjects, test_subjects, inner });
    }
    Ok(FoldPlan { outer, seed })
}

impl FoldPlan {
    /// Checks the partition and disjointness invariants against a subject set.
    pub fn validate(&self, subjects: &[String]) -> Result<()> {
        let all: HashSet<&String> = subjects.iter().collect();
        let mut covered: HashSet<&String> = HashSet::new();
        for of in &self.outer {
            for s in &of.test_subjects {
                if !covered.insert(s) {
                    return Err(Error::SubjectLeakage(format!(
                        "subject {s} tested in two outer folds"
                    )));
                }
            }
            let tv: HashSet<&String> = of.train_val_subjects.iter().collect();
            if of.test_subjects.iter().any(|s| tv.contains(s)) {
                return Err(Error::SubjectLeakage(
                    "outer train/test subject overlap".into(),
                ));
            }
            let mut inner_covered: HashSet<&String> = HashSet::new();
            for inf in &of.inner {
                let tr: HashSet<&String> = inf.train_subjects.iter().collect();
                for v in &inf.val_subjects {
                    if tr.contains(v) {
                        return Err(Error::SubjectLeakage(
                            "inner train/validation subject overlap".into(),
                        ));
                    }
                    if !inner_covered.insert(v) {
                        return Err(Error::SubjectLeakage(format!(
                            "subject {v} validated in two inner folds"
                        )));
                    }
                    if !tv.contains(v) {
                        return Err(Error::SubjectLeakage(
                            "inner fold uses a subject outside its outer fold".into(),
                        ));
                    }
                }
            }
            if inner_covered.len() != of.train_val_subjects.len() {
                return Err(Error::SubjectLeakage(
                    "inner validation sets do not partition the outer subjects".into(),
                ));
            }
        }
        if covered.len() != all.len() || !covered.iter().all(|s| all.contains(*s)) {
            return Err(Error::SubjectLeakage(
                "outer test sets do not partition the subjects".into(),
            ));
        }
        Ok(())
    }
}

/// Per-outer-fold selection output: the preselected feature pool and one
/// trace per inner fold.
#[derive(Debug, Clone)]
pub struct OuterSelection {
    pub f0: Vec<usize>,
    pub traces: Vec<SelectionTrace>,
}

/// Runs preselection once per outer fold, then the wrapper selection once
/// per inner fold. Refuses to run if any fold leaks subjects.
pub fn run_selection_over_folds(
    d: &Dataset,
    plan: &FoldPlan,
    cfg: &SelectorConfig,
) -> Result<Vec<OuterSelection>> {
    plan.validate(d.subjects())?;
    let mut out = Vec::with_capacity(plan.outer.len());
    for of in &plan.outer {
        let tv_rows = d.rows_of_subjects(&of.train_val_subjects);
        let test_set: HashSet<&String> = of.test_subjects.iter().collect();
        if tv_rows
            .iter()
            .any(|&r| test_set.contains(&d.subject_ids()[r]))
        {
            return Err(Error::SubjectLeakage(
                "test subject rows reached preselection".into(),
            ));
        }
        let f0 = selectors::preselect_rf(d, &tv_rows, cfg)?;
        let mut traces = Vec::with_capacity(of.inner.len());
        for inf in &of.inner {
            let train_rows = d.rows_of_subjects(&inf.train_subjects);
            let val_rows = d.rows_of_subjects(&inf.val_subjects);
            let trace = selectors::micmac_select(d, &train_rows, &val_rows, &f0, cfg)?;
            debug_assert!(trace.selected.iter().all(|c| f0.contains(c)));
            traces.push(trace);
        }
        out.push(OuterSelection { f0, traces });
    }
    Ok(out)
}

/// Re-ranks features by how often the traces selected them (descending),
/// ties by mean merit (descending), then by feature name. The seeded first
/// feature has no merit; it ranks above merited features at equal counts.
pub fn rank_by_frequency(d: &Dataset, traces: &[SelectionTrace]) -> Result<Vec<usize>> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("selection traces".into()));
    }
    let mut count: HashMap<usize, usize> = HashMap::new();
    let mut merit_sum: HashMap<usize, (f64, usize)> = HashMap::new();
    for t in traces {
        for (i, &col) in t.selected.iter().enumerate() {
            *count.entry(col).or_insert(0) += 1;
            if let Some(m) = t.merits[i] {
                let e = merit_sum.entry(col).or_insert((0.0, 0));
                e.0 += m;
                e.1 += 1;
            }
        }
    }
    let mean_merit = |col: usize| -> f64 {
        match merit_sum.get(&col) {
            Some(&(s, n)) if n > 0 => s / n as f64,
            _ => f64::INFINITY,
        }
    };
    let mut features: Vec<usize> = count.keys().copied().collect();
    features.sort_by(|&a, &b| {
        count[&b]
            .cmp(&count[&a])
            .then_with(|| mean_merit(b).partial_cmp(&mean_merit(a)).unwrap())
            .then_with(|| d.feature_names()[a].cmp(&d.feature_names()[b]))
    });
    Ok(features)
}

/// Most frequent predicted label per subject, grouped in first-appearance
/// order. Even-count ties break toward label 1 (unreachable with an odd
/// sample count per subject).
pub fn majority_vote(subject_ids: &[String], predictions: &[u8]) -> Result<Vec<(String, u8)>> {
    if subject_ids.is_empty() || subject_ids.len() != predictions.len() {
        return Err(Error::EmptyInput("sample predictions".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut votes: HashMap<&String, (usize, usize)> = HashMap::new();
    for (s, &p) in subject_ids.iter().zip(predictions) {
        if !votes.contains_key(s) {
            order.push(s.clone());
        }
        let e = votes.entry(s).or_insert((0, 0));
        if p == 1 {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    Ok(order
        .into_iter()
        .map(|s| {
            let (n0, n1) = votes[&s];
            (s, u8::from(n1 >= n0))
        })
        .collect())
}

/// Subject-level confusion counts (label 1 = positive).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 0) => self.tn += 1,
            (0, 1) => self.fp += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone)]
pub struct TopkCurve {
    pub points: Vec<CurvePoint>,
    /// per_fold[k_index][fold] subject-level accuracy
    pub per_fold: Vec<Vec<f64>>,
    /// aggregated confusion per k over outer folds
    pub confusion: Vec<Confusion>,
    /// true when the requested k range exceeded the available rankings
    pub truncated: bool,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// For each k and outer fold: trains the classifier on the fold's train/val
/// rows restricted to the top-k ranked features, predicts the test rows,
/// majority-votes per subject and records subject-level accuracy.
pub fn evaluate_topk_curve(
    d: &Dataset,
    plan: &FoldPlan,
    rankings: &[Vec<usize>],
    classifier: &LearnerConfig,
    k_range: std::ops::RangeInclusive<usize>,
) -> Result<TopkCurve> {
    if rankings.len() != plan.outer.len() {
        return Err(Error::InvalidConfig(
            "one ranking per outer fold required".into(),
        ));
    }
    let max_available = rankings.iter().map(|r| r.len()).min().unwrap_or(0);
    if max_available == 0 {
        return Err(Error::EmptyInput("rankings".into()));
    }
    let requested_max = *k_range.end();
    let k_max = requested_max.min(max_available);
    let truncated = k_max < requested_max;
    if truncated {
        log::warn!(
            "top-k range truncated to {k_max} (shortest ranking has {max_available} features)"
        );
    }
    let k_min = *k_range.start().max(&1);

    let mut per_fold: Vec<Vec<f64>> = Vec::new();
    let mut confusion: Vec<Confusion> = Vec::new();
    for k in k_min..=k_max {
        let mut accs = Vec::with_capacity(plan.outer.len());
        let mut conf = Confusion::default();
        for (fi, of) in plan.outer.iter().enumerate() {
            let tv_rows = d.rows_of_subjects(&of.train_val_subjects);
            let test_rows = d.rows_of_subjects(&of.test_subjects);
            let cols = &rankings[fi][..k];
            let view = selectors::standardized_view(d, &tv_rows, &test_rows, cols);
            let model = learners::train(classifier, &view.train, &view.y_train)?;
            let preds = learners::predict(&model, &view.val)?;
            let test_subject_ids: Vec<String> = test_rows
                .iter()
                .map(|&r| d.subject_ids()[r].clone())
                .collect();
            let voted = majority_vote(&test_subject_ids, &preds)?;
            let mut correct = 0usize;
            for (s, pred) in &voted {
                let truth = d.subject_label(s).unwrap();
                conf.add(truth, *pred);
                if truth == *pred {
                    correct += 1;
                }
            }
            accs.push(correct as f64 / voted.len() as f64);
        }
        per_fold.push(accs);
        confusion.push(conf);
    }
    let points = per_fold
        .iter()
        .enumerate()
        .map(|(i, accs)| {
            let (mean, std) = mean_std(accs);
            CurvePoint { k: k_min + i, mean, std }
        })
        .collect();
    Ok(TopkCurve { points, per_fold, confusion, truncated })
}
