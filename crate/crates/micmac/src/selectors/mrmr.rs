//! mRMR (difference form) and an MDRMR-style variant, with plug-in mutual
//! information on 3-bin discretized features.

use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Discretizes a continuous column into 3 bins split at mean ± std
/// (population std over the given values).
pub fn discretize_3bins(values: &[f64]) -> Vec<u32> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    values
        .iter()
        .map(|&v| {
            if v <= mean - std {
                0
            } else if v >= mean + std {
                2
            } else {
                1
            }
        })
        .collect()
}

/// Plug-in mutual information Σ p(a,b) ln(p(a,b) / (p(a) p(b))) over observed
/// cells, natural-log base.
pub fn mutual_information(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("mutual_information vectors".into()));
    }
    // BTreeMaps keep the summation order (and thus rounding) deterministic,
    // so identical columns always get bit-identical MI values.
    let n = a.len() as f64;
    let mut joint: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut pa: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pb: BTreeMap<u32, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        *pa.entry(x).or_insert(0.0) += 1.0;
        *pb.entry(y).or_insert(0.0) += 1.0;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c / n;
        let px = pa[&x] / n;
        let py = pb[&y] / n;
        mi += pxy * (pxy / (px * py)).ln();
    }
    Ok(mi.max(0.0))
}

fn discretized_candidates(
    d: &Dataset,
    rows: &[usize],
    candidates: &[usize],
) -> (Vec<Vec<u32>>, Vec<u32>) {
    let cols: Vec<Vec<u32>> = candidates
        .iter()
        .map(|&c| discretize_3bins(&d.column_over_rows(c, rows)))
        .collect();
    let y: Vec<u32> = rows.iter().map(|&r| d.labels()[r] as u32).collect();
    (cols, y)
}

fn greedy_mi_select<F>(
    d: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    k: usize,
    score: F,
) -> Result<Vec<usize>>
where
    F: Fn(f64, &[f64]) -> f64, // (relevance, redundancies with selected)
{
    if k == 0 {
        return Err(Error::InvalidConfig("k must be ≥ 1".into()));
    }
    if k > candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} exceeds {} candidate features",
            candidates.len()
        )));
    }
    let (cols, y) = discretized_candidates(d, rows, candidates);
    let relevance: Vec<f64> = cols
        .iter()
        .map(|c| mutual_information(c, &y))
        .collect::<Result<_>>()?;

    let mut selected: Vec<usize> = Vec::with_capacity(k); // local indices
    // pairwise MI with already-selected features, per candidate
    let mut redundancies: Vec<Vec<f64>> = vec![Vec::new(); candidates.len()];
    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..candidates.len() {
            if selected.contains(&j) {
                continue;
            }
            let s = score(relevance[j], &redundancies[j]);
            let better = match best {
                None => true,
                Some((bj, bs)) => {
                    s > bs
                        || (s == bs
                            && d.feature_names()[candidates[j]]
                                < d.feature_names()[candidates[bj]])
                }
            };
            if better {
                best = Some((j, s));
            }
        }
        let (j, _) = best.unwrap();
        for (other, reds) in redundancies.iter_mut().enumerate() {
            if other != j && !selected.contains(&other) {
                reds.push(mutual_information(&cols[other], &cols[j])?);
            }
        }
        selected.push(j);
    }
    Ok(selected.into_iter().map(|j| candidates[j]).collect())
}

/// Greedy forward mRMR with the MID (difference) criterion:
/// I(f; y) − (1/|S|) Σ I(f; s). Ties by feature name.
pub fn mrmr_select(d: &Dataset, rows: &[usize], candidates: &[usize], k: usize) -> Result<Vec<usize>> {
    greedy_mi_select(d, rows, candidates, k, |rel, reds| {
        if reds.is_empty() {
            rel
        } else {
            rel - reds.iter().sum::<f64>() / reds.len() as f64
        }
    })
}

/// MDRMR-style variant: the relevance term is re-weighted each step by
/// (1 + |S|) / (1 + Σ redundancy). The cited criterion is not fully
/// specified, so this is a documented approximation; reports built on it
/// carry an `approximate` flag.
pub fn mdrmr_select(d: &Dataset, rows: &[usize], candidates: &[usize], k: usize) -> Result<Vec<usize>> {
    greedy_mi_select(d, rows, candidates, k, |rel, reds| {
        rel * (1.0 + reds.len() as f64) / (1.0 + reds.iter().sum::<f64>())
    })
}
