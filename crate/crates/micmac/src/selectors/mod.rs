//! Preselection and the selection algorithms: the merit-score greedy wrapper
//! search, plus mRMR and an MDRMR-style variant as baselines.

mod mrmr;

pub use mrmr::{discretize_3bins, mdrmr_select, mrmr_select, mutual_information};

use std::collections::HashSet;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{cosine_redundancy, Dataset};
use crate::error::{Error, Result};
use crate::learners::{self, knn_vote, LearnerConfig, LearnerKind};
use crate::matrix::Matrix;
use crate::parallel;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Wrapper learner scoring candidate subsets.
    pub wrapper: LearnerConfig,
    /// Merit threshold T; selection stops when the best merit is ≤ T.
    pub threshold: f64,
    pub max_selected: usize,
    /// Floor for the summed-redundancy denominator.
    pub epsilon: f64,
    pub preselect_n: usize,
    /// Random-forest configuration for importance preselection.
    pub rf: LearnerConfig,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            wrapper: LearnerConfig::knn(),
            threshold: 0.0,
            max_selected: 100,
            epsilon: 1e-6,
            preselect_n: 100,
            rf: LearnerConfig::rf(),
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        if self.max_selected == 0 {
            return Err(Error::InvalidConfig("max_selected must be ≥ 1".into()));
        }
        self.wrapper.validate()?;
        self.rf.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Threshold,
    Cap,
    Exhausted,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Threshold => "threshold",
            Termination::Cap => "cap",
            Termination::Exhausted => "exhausted",
        }
    }
}

/// Ordered selected feature ids with per-step merit and validation accuracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionTrace {
    /// Column ids into the source dataset, in selection order.
    pub selected: Vec<usize>,
    /// Merit per step; `None` for the seeded first feature.
    pub merits: Vec<Option<f64>>,
    /// Validation accuracy after each addition.
    pub phi_after: Vec<f64>,
    pub termination: Termination,
    pub threshold: f64,
}

impl SelectionTrace {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P, feature_names: &[String]) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "step,feature_name,merit,phi_after,reason")?;
        for (i, &col) in self.selected.iter().enumerate() {
            let merit = match self.merits[i] {
                Some(m) => format!("{m}"),
                None => String::new(),
            };
            let reason = if i + 1 == self.selected.len() {
                self.termination.as_str()
            } else {
                ""
            };
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                feature_names[col],
                merit,
                self.phi_after[i],
                reason
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_subject_disjoint(d: &Dataset, train_rows: &[usize], val_rows: &[usize]) -> Result<()> {
    let train_subjects: HashSet<&str> = train_rows
        .iter()
        .map(|&r| d.subject_ids()[r].as_str())
        .collect();
    for &r in val_rows {
        if train_subjects.contains(d.subject_ids()[r].as_str()) {
            return Err(Error::SubjectLeakage(format!(
                "subject {} appears in both train and validation rows",
                d.subject_ids()[r]
            )));
        }
    }
    Ok(())
}

/// Ranks features by random-forest importance (descending, ties by feature
/// name) and returns the top `preselect_n` column ids. Fewer features than
/// the cap returns everything, ranked.
pub fn preselect_rf(d: &Dataset, rows: &[usize], cfg: &SelectorConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let all: Vec<usize> = (0..d.n_features()).collect();
    let (data, labels) = d.submatrix(rows, &all);
    let x = Matrix::new(data, rows.len(), d.n_features());
    let model = learners::train(&cfg.rf, &x, &labels)?;
    let importance = learners::rf_importance(&model)?;
    let mut order: Vec<usize> = all;
    order.sort_by(|&a, &b| {
        importance[b]
            .partial_cmp(&importance[a])
            .unwrap()
            .then_with(|| d.feature_names()[a].cmp(&d.feature_names()[b]))
    });
    order.truncate(cfg.preselect_n);
    Ok(order)
}

/// Standardized train/validation column matrices over a feature subset.
/// Means/stds come from the training rows only.
pub(crate) struct FoldView {
    pub(crate) train: Matrix,
    pub(crate) val: Matrix,
    pub(crate) y_train: Vec<u8>,
    pub(crate) y_val: Vec<u8>,
}

pub(crate) fn standardized_view(
    d: &Dataset,
    train_rows: &[usize],
    val_rows: &[usize],
    cols: &[usize],
) -> FoldView {
    let n = train_rows.len() as f64;
    let mut means = vec![0.0; cols.len()];
    let mut stds = vec![0.0; cols.len()];
    for (j, &c) in cols.iter().enumerate() {
        let mut m = 0.0;
        for &r in train_rows {
            m += d.value(r, c);
        }
        m /= n;
        let mut v = 0.0;
        for &r in train_rows {
            let dev = d.value(r, c) - m;
            v += dev * dev;
        }
        means[j] = m;
        stds[j] = (v / n).sqrt();
    }
    let build = |rows: &[usize]| {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for (j, &c) in cols.iter().enumerate() {
                if stds[j] > 0.0 {
                    data.push((d.value(r, c) - means[j]) / stds[j]);
                } else {
                    data.push(0.0);
                }
            }
        }
        Matrix::new(data, rows.len(), cols.len())
    };
    FoldView {
        train: build(train_rows),
        val: build(val_rows),
        y_train: train_rows.iter().map(|&r| d.labels()[r]).collect(),
        y_val: val_rows.iter().map(|&r| d.labels()[r]).collect(),
    }
}

/// Validation-accuracy evaluator for a growing feature subset. The generic
/// path retrains the wrapper per call; the KNN path keeps a running squared
/// distance matrix over the selected columns so a candidate costs one column
/// of incremental work instead of a full retrain.
enum PhiEval<'a> {
    Generic {
        view: &'a FoldView,
        wrapper: &'a LearnerConfig,
        selected: Vec<usize>,
    },
    Knn {
        view: &'a FoldView,
        k: usize,
        /// d2[v * n_train + t] over the selected columns
        d2: Vec<f64>,
    },
}

impl<'a> PhiEval<'a> {
    fn new(view: &'a FoldView, wrapper: &'a LearnerConfig, seed_col: usize) -> Result<Self> {
        if wrapper.kind == LearnerKind::Knn {
            let n_train = view.train.n_rows();
            let n_val = view.val.n_rows();
            let mut d2 = vec![0.0; n_val * n_train];
            for v in 0..n_val {
                let qv = view.val.get(v, seed_col);
                for t in 0..n_train {
                    let diff = qv - view.train.get(t, seed_col);
                    d2[v * n_train + t] = diff * diff;
                }
            }
            Ok(PhiEval::Knn { view, k: wrapper.knn_k, d2 })
        } else {
            Ok(PhiEval::Generic { view, wrapper, selected: vec![seed_col] })
        }
    }

    fn knn_phi(view: &FoldView, k: usize, d2: &[f64], extra: Option<usize>) -> f64 {
        let n_train = view.train.n_rows();
        let n_val = view.val.n_rows();
        let mut dists = vec![0.0; n_train];
        let mut correct = 0usize;
        for v in 0..n_val {
            let base = &d2[v * n_train..(v + 1) * n_train];
            match extra {
                Some(c) => {
                    let qv = view.val.get(v, c);
                    for t in 0..n_train {
                        let diff = qv - view.train.get(t, c);
                        dists[t] = base[t] + diff * diff;
                    }
                }
                None => dists.copy_from_slice(base),
            }
            if knn_vote(&dists, &view.y_train, k) == view.y_val[v] {
                correct += 1;
            }
        }
        correct as f64 / n_val as f64
    }

    fn phi_selected(&self) -> Result<f64> {
        match self {
            PhiEval::Knn { view, k, d2 } => Ok(Self::knn_phi(view, *k, d2, None)),
            PhiEval::Generic { view, wrapper, selected } => {
                phi_generic(view, wrapper, selected)
            }
        }
    }

    fn phi_with_candidate(&self, cand: usize) -> Result<f64> {
        match self {
            PhiEval::Knn { view, k, d2 } => Ok(Self::knn_phi(view, *k, d2, Some(cand))),
            PhiEval::Generic { view, wrapper, selected } => {
                let mut cols = selected.clone();
                cols.push(cand);
                phi_generic(view, wrapper, &cols)
            }
        }
    }

    fn accept(&mut self, cand: usize) {
        match self {
            PhiEval::Knn { view, d2, .. } => {
                let n_train = view.train.n_rows();
                for v in 0..view.val.n_rows() {
                    let qv = view.val.get(v, cand);
                    for t in 0..n_train {
                        let diff = qv - view.train.get(t, cand);
                        d2[v * n_train + t] += diff * diff;
                    }
                }
            }
            PhiEval::Generic { selected, .. } => selected.push(cand),
        }
    }
}

fn phi_generic(view: &FoldView, wrapper: &LearnerConfig, cols: &[usize]) -> Result<f64> {
    let x = view.train.select_columns(cols);
    let model = learners::train(wrapper, &x, &view.y_train)?;
    learners::accuracy(&model, &view.val.select_columns(cols), &view.y_val)
}

/// Merit of a single candidate against an already-selected set: accuracy
/// gain over summed absolute cosine redundancy (floored at epsilon).
/// Cosines are computed on the standardized training-fold columns.
pub fn merit(
    d: &Dataset,
    train_rows: &[usize],
    val_rows: &[usize],
    selected: &[usize],
    candidate: usize,
    cfg: &SelectorConfig,
) -> Result<f64> {
    cfg.validate()?;
    if selected.contains(&candidate) {
        return Err(Error::AlreadySelected);
    }
    if selected.is_empty() {
        return Err(Error::EmptyInput("selected feature set".into()));
    }
    check_subject_disjoint(d, train_rows, val_rows)?;
    let mut cols: Vec<usize> = selected.to_vec();
    cols.push(candidate);
    let view = standardized_view(d, train_rows, val_rows, &cols);
    let sel_local: Vec<usize> = (0..selected.len()).collect();
    let cand_local = selected.len();
    let phi_sel = phi_generic(&view, &cfg.wrapper, &sel_local)?;
    let all_local: Vec<usize> = (0..cols.len()).collect();
    let phi_with = phi_generic(&view, &cfg.wrapper, &all_local)?;
    let cand_col = view.train.column(cand_local);
    let mut redundancy = 0.0;
    for &s in &sel_local {
        redundancy += cosine_redundancy(&cand_col, &view.train.column(s))?;
    }
    Ok((phi_with - phi_sel) / redundancy.max(cfg.epsilon))
}

/// Greedy merit-score selection: seeded with the first (most important)
/// feature of `f0`, each step adds the argmax-merit candidate while its
/// merit exceeds the threshold, up to `max_selected` features. Ties go to
/// the higher raw accuracy gain, then to the earlier `f0` rank.
pub fn micmac_select(
    d: &Dataset,
    train_rows: &[usize],
    val_rows: &[usize],
    f0: &[usize],
    cfg: &SelectorConfig,
) -> Result<SelectionTrace> {
    cfg.validate()?;
    if f0.len() < 2 {
        return Err(Error::InvalidConfig("initial feature set needs ≥ 2 features".into()));
    }
    check_subject_disjoint(d, train_rows, val_rows)?;

    let view = standardized_view(d, train_rows, val_rows, f0);
    let mut eval = PhiEval::new(&view, &cfg.wrapper, 0)?;
    let mut phi_sel = eval.phi_selected()?;

    // running Σ |cos(candidate, selected)| per f0-local candidate
    let norms: Vec<f64> = (0..f0.len())
        .map(|j| view.train.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut red_sum = vec![0.0; f0.len()];
    let add_redundancy = |red: &mut Vec<f64>, sel: usize, selected: &[usize]| {
        let sel_col = view.train.column(sel);
        for j in 0..f0.len() {
            if j == sel || selected.contains(&j) {
                continue;
            }
            if norms[j] == 0.0 || norms[sel] == 0.0 {
                continue;
            }
            let dot: f64 = view
                .train
                .column(j)
                .iter()
                .zip(&sel_col)
                .map(|(a, b)| a * b)
                .sum();
            red[j] += (dot.abs() / (norms[j] * norms[sel])).min(1.0);
        }
    };

    let mut selected_local: Vec<usize> = vec![0];
    let mut merits: Vec<Option<f64>> = vec![None];
    let mut phis = vec![phi_sel];
    add_redundancy(&mut red_sum, 0, &selected_local);

    let termination = loop {
        if selected_local.len() >= cfg.max_selected {
            break Termination::Cap;
        }
        let candidates: Vec<usize> = (0..f0.len())
            .filter(|j| !selected_local.contains(j))
            .collect();
        if candidates.is_empty() {
            break Termination::Exhausted;
        }
        let scored: Vec<Result<(f64, f64, f64)>> = parallel::map_slice(&candidates, |&j| {
            let phi_with = eval.phi_with_candidate(j)?;
            let gain = phi_with - phi_sel;
            let mu = gain / red_sum[j].max(cfg.epsilon);
            Ok((mu, gain, phi_with))
        });
        let mut best: Option<(usize, f64, f64, f64)> = None; // (cand idx, mu, gain, phi)
        for (ci, s) in scored.into_iter().enumerate() {
            let (mu, gain, phi_with) = s?;
            let better = match best {
                None => true,
                // ties by higher raw gain, then earlier f0 rank (candidates
                // iterate in f0 order, so strict inequality keeps the first)
                Some((_, bmu, bgain, _)) => mu > bmu || (mu == bmu && gain > bgain),
            };
            if better {
                best = Some((candidates[ci], mu, gain, phi_with));
            }
        }
        let (cand, mu, _gain, phi_with) = best.unwrap();
        if mu <= cfg.threshold {
            break Termination::Threshold;
        }
        eval.accept(cand);
        add_redundancy(&mut red_sum, cand, &selected_local);
        selected_local.push(cand);
        merits.push(Some(mu));
        phis.push(phi_with);
        phi_sel = phi_with;
    };

    Ok(SelectionTrace {
        selected: selected_local.iter().map(|&j| f0[j]).collect(),
        merits,
        phi_after: phis,
        termination,
        threshold: cfg.threshold,
    })
}
