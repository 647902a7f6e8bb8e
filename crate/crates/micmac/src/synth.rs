//! Synthetic datasets with planted discriminative features, subject-level
//! random effects and correlated duplicate blocks. The planted features are
//! the ground truth that selection-recovery metrics are scored against.

use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub samples_per_subject: usize,
    pub n_features: usize,
    pub n_informative: usize,
    /// Class mean separation in units of the unit noise std.
    pub effect_size: f64,
    /// Std of the per-subject random offset shared by a subject's samples.
    pub subject_effect_std: f64,
    /// Near-duplicates generated per informative feature.
    pub n_redundant_copies: usize,
    /// Correlation between a duplicate and its source, in [0, 1).
    pub rho: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 60,
            samples_per_subject: 9,
            n_features: 300,
            n_informative: 12,
            effect_size: 1.5,
            subject_effect_std: 1.0,
            n_redundant_copies: 0,
            rho: 0.8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.n_subjects % 2 != 0 {
            return Err(Error::InvalidConfig(
                "n_subjects must be a positive even count".into(),
            ));
        }
        if self.samples_per_subject == 0 {
            return Err(Error::InvalidConfig("samples_per_subject must be ≥ 1".into()));
        }
        if self.n_informative + self.n_informative * self.n_redundant_copies > self.n_features {
            return Err(Error::InvalidConfig(
                "informative + redundant features exceed n_features".into(),
            ));
        }
        if self.effect_size < 0.0 {
            return Err(Error::InvalidConfig("effect_size must be ≥ 0".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig("rho must be in [0, 1)".into()));
        }
        if self.subject_effect_std < 0.0 {
            return Err(Error::InvalidConfig("subject_effect_std must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureRole {
    Informative,
    RedundantOf(String),
    Noise,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Role per feature, aligned with the dataset's feature order.
    pub roles: Vec<(String, FeatureRole)>,
}

impl GroundTruth {
    pub fn informative(&self) -> Vec<String> {
        self.roles
            .iter()
            .filter(|(_, r)| *r == FeatureRole::Informative)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// duplicate name -> source name
    pub fn duplicate_map(&self) -> HashMap<String, String> {
        self.roles
            .iter()
            .filter_map(|(n, r)| match r {
                FeatureRole::RedundantOf(src) => Some((n.clone(), src.clone())),
                _ => None,
            })
            .collect()
    }

    /// Maps a feature to the planted source it stands for: itself when
    /// informative, its source when a duplicate, None for noise.
    pub fn resolve(&self, name: &str) -> Option<String> {
        self.roles.iter().find(|(n, _)| n == name).and_then(|(n, r)| match r {
            FeatureRole::Informative => Some(n.clone()),
            FeatureRole::RedundantOf(src) => Some(src.clone()),
            FeatureRole::Noise => None,
        })
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "feature_name,role")?;
        for (name, role) in &self.roles {
            let role = match role {
                FeatureRole::Informative => "informative".to_string(),
                FeatureRole::RedundantOf(src) => format!("redundant_of:{src}"),
                FeatureRole::Noise => "noise".to_string(),
            };
            writeln!(w, "{name},{role}")?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_ground_truth<P: AsRef<Path>>(path: P) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    let mut roles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "feature_name,role" {
                return Err(Error::CsvFormat {
                    row: 0,
                    col: 0,
                    msg: "expected header feature_name,role".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (name, role) = line.split_once(',').ok_or(Error::CsvFormat {
            row: i,
            col: 0,
            msg: "expected two fields".into(),
        })?;
        let role = if role == "informative" {
            FeatureRole::Informative
        } else if role == "noise" {
            FeatureRole::Noise
        } else if let Some(src) = role.strip_prefix("redundant_of:") {
            FeatureRole::RedundantOf(src.to_string())
        } else {
            return Err(Error::CsvFormat {
                row: i,
                col: 1,
                msg: format!("unknown role {role:?}"),
            });
        };
        roles.push((name.to_string(), role));
    }
    Ok(GroundTruth { roles })
}

/// Generates a dataset with planted informative features. Deterministic in
/// the config seed.
pub fn generate(cfg: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let n_subjects = cfg.n_subjects;
    let spp = cfg.samples_per_subject;
    let n_samples = n_subjects * spp;
    let p = cfg.n_features;
    let n_dup = cfg.n_informative * cfg.n_redundant_copies;

    // Column position assignment: informative, duplicates and noise are
    // scattered across the feature axis by a seeded shuffle.
    let mut positions: Vec<usize> = (0..p).collect();
    positions.shuffle(&mut rng);
    let informative_pos = &positions[..cfg.n_informative];
    let duplicate_pos = &positions[cfg.n_informative..cfg.n_informative + n_dup];

    let feature_names: Vec<String> = (0..p).map(|i| format!("f{i:04}")).collect();

    let subject_ids: Vec<String> = (0..n_subjects)
        .flat_map(|s| std::iter::repeat(format!("subj{s:03}")).take(spp))
        .collect();
    let time_points: Vec<u32> = (0..n_samples).map(|i| (i % spp) as u32 + 1).collect();
    // First half of the subjects is class 0, second half class 1.
    let labels: Vec<u8> = (0..n_samples)
        .map(|i| if i / spp < n_subjects / 2 { 0 } else { 1 })
        .collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];

    // Informative columns: class mean ± effect/2, a per-(subject, feature)
    // offset shared across the subject's samples, unit noise.
    for (i, &col) in informative_pos.iter().enumerate() {
        let _ = i;
        let offsets: Vec<f64> = (0..n_subjects)
            .map(|_| cfg.subject_effect_std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut v = Vec::with_capacity(n_samples);
        for s in 0..n_subjects {
            let class_mean = if s < n_subjects / 2 {
                -cfg.effect_size / 2.0
            } else {
                cfg.effect_size / 2.0
            };
            for _ in 0..spp {
                v.push(class_mean + offsets[s] + rng.sample::<f64, _>(StandardNormal));
            }
        }
        columns[col] = v;
    }

    // Duplicates: rho * source + sqrt(1 - rho^2) * sigma_source * noise, so
    // the theoretical duplicate/source correlation equals rho.
    let sigma_source = (cfg.effect_size * cfg.effect_size / 4.0
        + cfg.subject_effect_std * cfg.subject_effect_std
        + 1.0)
        .sqrt();
    let noise_scale = (1.0 - cfg.rho * cfg.rho).sqrt() * sigma_source;
    let mut duplicate_roles: Vec<(usize, usize)> = Vec::new(); // (dup col, src col)
    for (d, &col) in duplicate_pos.iter().enumerate() {
        let src = informative_pos[d % cfg.n_informative];
        let v: Vec<f64> = columns[src]
            .iter()
            .map(|&x| cfg.rho * x + noise_scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        columns[col] = v;
        duplicate_roles.push((col, src));
    }

    // Remaining columns: pure unit noise.
    for col in 0..p {
        if columns[col].is_empty() {
            columns[col] = (0..n_samples)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
        }
    }

    let mut values = Vec::with_capacity(n_samples * p);
    for r in 0..n_samples {
        for col in columns.iter() {
            values.push(col[r]);
        }
    }

    let mut roles: Vec<(String, FeatureRole)> = feature_names
        .iter()
        .map(|n| (n.clone(), FeatureRole::Noise))
        .collect();
    for &col in informative_pos {
        roles[col].1 = FeatureRole::Informative;
    }
    for &(dup, src) in &duplicate_roles {
        roles[dup].1 = FeatureRole::RedundantOf(feature_names[src].clone());
    }

    let d = Dataset::new(values, subject_ids, time_points, labels, feature_names)?;
    Ok((d, GroundTruth { roles }))
}
