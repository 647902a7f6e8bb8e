//! Repeated shuffled experiments over scheme matrices: selection, per-fold
//! re-ranking, top-k curve evaluation and aggregation into a report.

use serde::{Deserialize, Serialize};

use crate::cv::{self, Confusion, CurvePoint, FoldPlan};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::LearnerConfig;
use crate::selectors::{self, SelectorConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SelectorKind {
    Micmac { wrapper: LearnerConfig },
    Mrmr,
    Mdrmr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scheme {
    pub selector: SelectorKind,
    pub classifier: LearnerConfig,
}

impl Scheme {
    /// Table-style scheme label, e.g. `MICMAC-knnW-knnC` or `mRMR-svmC`.
    pub fn name(&self) -> String {
        let classifier = format!("{}C", self.classifier.kind.short());
        match &self.selector {
            SelectorKind::Micmac { wrapper } => {
                format!("MICMAC-{}W-{}", wrapper.kind.short(), classifier)
            }
            SelectorKind::Mrmr => format!("mRMR-{classifier}"),
            SelectorKind::Mdrmr => format!("MDRMR-{classifier}"),
        }
    }

    /// MDRMR is a documented approximation of its cited criterion.
    pub fn approximate(&self) -> bool {
        matches!(self.selector, SelectorKind::Mdrmr)
    }

    /// Parses `micmac:<wrapper>:<classifier>` or `<mrmr|mdrmr>:<classifier>`
    /// with learner short names `knn` / `svm`.
    pub fn parse(s: &str) -> Result<Scheme> {
        let invalid = || {
            Error::InvalidConfig(format!(
                "unknown scheme {s:?}; valid schemes: micmac:<knn|svm>:<knn|svm>, \
                 mrmr:<knn|svm>, mdrmr:<knn|svm>"
            ))
        };
        let learner = |name: &str| -> Result<LearnerConfig> {
            match name {
                "knn" => Ok(LearnerConfig::knn()),
                "svm" => Ok(LearnerConfig::svm()),
                _ => Err(invalid()),
            }
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["micmac", w, c] => Ok(Scheme {
                selector: SelectorKind::Micmac { wrapper: learner(w)? },
                classifier: learner(c)?,
            }),
            ["mrmr", c] => Ok(Scheme { selector: SelectorKind::Mrmr, classifier: learner(c)? }),
            ["mdrmr", c] => Ok(Scheme { selector: SelectorKind::Mdrmr, classifier: learner(c)? }),
            _ => Err(invalid()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub n_repeats: usize,
    pub base_seed: u64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub selector: SelectorConfig,
    /// Upper end of the evaluated k range (defaults to the preselection size).
    pub k_max: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        let selector = SelectorConfig::default();
        RunParams {
            n_repeats: 10,
            base_seed: 0,
            n_outer: 10,
            n_inner: 9,
            k_max: selector.preselect_n,
            selector,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeResult {
    pub name: String,
    pub approximate: bool,
    /// Accuracy-vs-k curve: mean ± std over experiment repeats.
    pub curve: Vec<CurvePoint>,
    pub best_k: usize,
    pub best_acc: f64,
    pub best_std: f64,
    pub top12_k: usize,
    pub top12_acc: f64,
    pub top12_std: f64,
    /// Per-repeat accuracy at best_k, for significance testing.
    pub per_experiment_best: Vec<f64>,
    /// Per-repeat accuracy at the top-12 point.
    pub per_experiment_top12: Vec<f64>,
    /// Ranked feature names per outer fold, from the first repeat.
    pub rankings: Vec<Vec<String>>,
    /// Subject-level confusion at best_k, aggregated over folds and repeats.
    pub confusion: Confusion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schemes: Vec<SchemeResult>,
    pub n_repeats: usize,
    pub base_seed: u64,
    /// Wall-clock runtime; excluded from serialization so identical runs
    /// produce identical report files.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn scheme(&self, name: &str) -> Option<&SchemeResult> {
        self.schemes.iter().find(|s| s.name == name)
    }
}

fn rankings_for_scheme(
    d: &Dataset,
    plan: &FoldPlan,
    scheme: &Scheme,
    sel_cfg: &SelectorConfig,
    k_max: usize,
) -> Result<Vec<Vec<usize>>> {
    match &scheme.selector {
        SelectorKind::Micmac { wrapper } => {
            let mut cfg = sel_cfg.clone();
            cfg.wrapper = wrapper.clone();
            let outer = cv::run_selection_over_folds(d, plan, &cfg)?;
            outer
                .iter()
                .map(|os| cv::rank_by_frequency(d, &os.traces))
                .collect()
        }
        SelectorKind::Mrmr | SelectorKind::Mdrmr => {
            let mut out = Vec::with_capacity(plan.outer.len());
            for of in &plan.outer {
                let tv_rows = d.rows_of_subjects(&of.train_val_subjects);
                let f0 = selectors::preselect_rf(d, &tv_rows, sel_cfg)?;
                let k = k_max.min(f0.len());
                let ranked = match scheme.selector {
                    SelectorKind::Mrmr => selectors::mrmr_select(d, &tv_rows, &f0, k)?,
                    _ => selectors::mdrmr_select(d, &tv_rows, &f0, k)?,
                };
                out.push(ranked);
            }
            Ok(out)
        }
    }
}

/// Runs `n_repeats` full pipeline passes per scheme, reshuffling the fold
/// plan each repeat (seeds base_seed .. base_seed + n_repeats - 1), and
/// aggregates the per-k curves over repeats.
pub fn run_experiments(d: &Dataset, schemes: &[Scheme], params: &RunParams) -> Result<ExperimentReport> {
    if schemes.is_empty() {
        return Err(Error::InvalidConfig("no schemes requested".into()));
    }
    params.selector.validate()?;
    let started = std::time::Instant::now();
    let subjects = d.subjects().to_vec();
    let subject_labels: Vec<u8> = subjects
        .iter()
        .map(|s| d.subject_label(s).unwrap())
        .collect();

    let mut results = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let mut repeat_curves: Vec<Vec<f64>> = Vec::new(); // per repeat: mean acc per k
        let mut repeat_confusions: Vec<Vec<Confusion>> = Vec::new();
        let mut first_rankings: Vec<Vec<String>> = Vec::new();
        for repeat in 0..params.n_repeats {
            let seed = params.base_seed + repeat as u64;
            let plan = cv::make_fold_plan(
                &subjects,
                &subject_labels,
                params.n_outer,
                params.n_inner,
                seed,
            )?;
            let mut sel_cfg = params.selector.clone();
            sel_cfg.rf.seed = crate::derive_seed(params.base_seed, &[repeat as u64, 0xf0]);
            sel_cfg.wrapper.seed = crate::derive_seed(params.base_seed, &[repeat as u64, 0x17]);
            let rankings = rankings_for_scheme(d, &plan, scheme, &sel_cfg, params.k_max)?;
            if repeat == 0 {
                first_rankings = rankings
                    .iter()
                    .map(|r| r.iter().map(|&c| d.feature_names()[c].clone()).collect())
                    .collect();
            }
            let curve =
                cv::evaluate_topk_curve(d, &plan, &rankings, &scheme.classifier, 1..=params.k_max)?;
            repeat_curves.push(curve.points.iter().map(|p| p.mean).collect());
            repeat_confusions.push(curve.confusion);
        }

        // aggregate over the k range common to every repeat
        let k_common = repeat_curves.iter().map(|c| c.len()).min().unwrap();
        if k_common == 0 {
            return Err(Error::NoResults);
        }
        let mut curve = Vec::with_capacity(k_common);
        for ki in 0..k_common {
            let vals: Vec<f64> = repeat_curves.iter().map(|c| c[ki]).collect();
            let (mean, std) = cv::mean_std(&vals);
            curve.push(CurvePoint { k: ki + 1, mean, std });
        }
        let best_idx = curve
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1.mean
                    .partial_cmp(&b.1.mean)
                    .unwrap()
                    .then(b.0.cmp(&a.0)) // smallest k wins ties
            })
            .unwrap()
            .0;
        let top12_idx = 12.min(k_common) - 1;
        let per_experiment_best: Vec<f64> =
            repeat_curves.iter().map(|c| c[best_idx]).collect();
        let per_experiment_top12: Vec<f64> =
            repeat_curves.iter().map(|c| c[top12_idx]).collect();
        let mut confusion = Confusion::default();
        for rc in &repeat_confusions {
            confusion.merge(&rc[best_idx]);
        }
        results.push(SchemeResult {
            name: scheme.name(),
            approximate: scheme.approximate(),
            best_k: best_idx + 1,
            best_acc: curve[best_idx].mean,
            best_std: curve[best_idx].std,
            top12_k: top12_idx + 1,
            top12_acc: curve[top12_idx].mean,
            top12_std: curve[top12_idx].std,
            curve,
            per_experiment_best,
            per_experiment_top12,
            rankings: first_rankings,
            confusion,
        });
    }
    Ok(ExperimentReport {
        schemes: results,
        n_repeats: params.n_repeats,
        base_seed: params.base_seed,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}
