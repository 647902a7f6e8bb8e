//! Tukey HSD comparison of scheme accuracies and the studentized range
//! distribution it needs, computed by nested adaptive quadrature.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.5066282746310002;

#[inline]
fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

#[inline]
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Adaptive Simpson quadrature with absolute tolerance.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = (a + b) / 2.0;
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// CDF of the range of `k` iid standard normals at `r`.
fn normal_range_cdf(r: f64, k: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let integrand = |z: f64| {
        let span = normal_cdf(z) - normal_cdf(z - r);
        k as f64 * normal_pdf(z) * span.powi(k as i32 - 1)
    };
    adaptive_simpson(&integrand, -9.0, 9.0 + r.min(30.0), 1e-9).clamp(0.0, 1.0)
}

/// Studentized range CDF P(Q ≤ q) for `k` groups and `df` error degrees of
/// freedom, by integrating the range CDF against the scale density of
/// chi_df / sqrt(df). Absolute error target 1e-6.
pub fn studentized_range_cdf(q: f64, k: usize, df: usize) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::InvalidConfig("q must be finite".into()));
    }
    if k < 2 || df < 1 {
        return Err(Error::InvalidConfig("need k ≥ 2 and df ≥ 1".into()));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    let nu = df as f64;
    // density of s = chi_nu / sqrt(nu):
    // f(s) = nu^(nu/2) s^(nu-1) exp(-nu s^2 / 2) / (2^(nu/2 - 1) Gamma(nu/2))
    let ln_coeff = 0.5 * nu * nu.ln() - (0.5 * nu - 1.0) * std::f64::consts::LN_2
        - ln_gamma(0.5 * nu);
    let scale_pdf = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        (ln_coeff + (nu - 1.0) * s.ln() - 0.5 * nu * s * s).exp()
    };
    let spread = 12.0 / (2.0 * nu).sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread.max(1.0);
    let integrand = |s: f64| scale_pdf(s) * normal_range_cdf(q * s, k);
    Ok(adaptive_simpson(&integrand, lo, hi, 1e-7).clamp(0.0, 1.0))
}

/// Named groups of per-experiment accuracy values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSamples {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl GroupSamples {
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != values.len() || names.len() < 2 {
            return Err(Error::InvalidConfig("need ≥ 2 groups".into()));
        }
        if values.iter().any(|g| g.len() < 2) {
            return Err(Error::InvalidConfig("every group needs ≥ 2 values".into()));
        }
        Ok(GroupSamples { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TukeyPair {
    pub group_a: String,
    pub group_b: String,
    pub q: f64,
    pub p: f64,
}

/// Tukey HSD over all group pairs. Unequal group sizes use the Tukey-Kramer
/// harmonic-mean adjustment. When every group has zero within-group variance
/// the p-value degenerates to 0 for unequal means and 1 for equal means.
pub fn tukey_hsd(groups: &GroupSamples) -> Result<Vec<TukeyPair>> {
    let k = groups.values.len();
    let means: Vec<f64> = groups
        .values
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let n_total: usize = groups.values.iter().map(|g| g.len()).sum();
    let df = n_total - k;
    let sse: f64 = groups
        .values
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let mse = sse / df as f64;

    let mut out = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = (means[i] - means[j]).abs();
            let (q, p) = if mse <= 0.0 {
                if diff == 0.0 {
                    (0.0, 1.0)
                } else {
                    (f64::INFINITY, 0.0)
                }
            } else {
                let n_i = groups.values[i].len() as f64;
                let n_j = groups.values[j].len() as f64;
                let n_tilde = 2.0 / (1.0 / n_i + 1.0 / n_j);
                let q = diff / (mse / n_tilde).sqrt();
                let p = (1.0 - studentized_range_cdf(q, k, df)?).clamp(0.0, 1.0);
                (q, p)
            };
            out.push(TukeyPair {
                group_a: groups.names[i].clone(),
                group_b: groups.names[j].clone(),
                q,
                p,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_limits() {
        assert_eq!(studentized_range_cdf(0.0, 3, 10).unwrap(), 0.0);
        assert!(studentized_range_cdf(100.0, 3, 20).unwrap() >= 0.999999);
        assert!(studentized_range_cdf(f64::NAN, 3, 10).is_err());
        assert!(studentized_range_cdf(1.0, 1, 10).is_err());
    }

    #[test]
    fn cdf_hits_tabulated_95th_percentile() {
        // q_0.95(k=3, df=10) ≈ 3.88
        let p = studentized_range_cdf(3.88, 3, 10).unwrap();
        assert!((p - 0.95).abs() < 0.005, "got {p}");
    }

    #[test]
    fn identical_groups_give_p_one() {
        let g = GroupSamples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.6, 0.7], vec![0.5, 0.6, 0.7]],
        )
        .unwrap();
        let pairs = tukey_hsd(&g).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].q, 0.0);
        assert!((pairs[0].p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separated_groups_give_small_p() {
        // N(0,1) vs N(5,1), n = 10 each
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n01 = Normal::new(0.0, 1.0).unwrap();
        let n51 = Normal::new(5.0, 1.0).unwrap();
        let a: Vec<f64> = (0..10).map(|_| n01.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10).map(|_| n51.sample(&mut rng)).collect();
        let g = GroupSamples::new(vec!["a".into(), "b".into()], vec![a, b]).unwrap();
        let pairs = tukey_hsd(&g).unwrap();
        assert!(pairs[0].p < 0.001, "p = {}", pairs[0].p);
    }

    #[test]
    fn swapping_group_order_is_symmetric() {
        let g1 = GroupSamples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.9]],
        )
        .unwrap();
        let g2 = GroupSamples::new(
            vec!["b".into(), "a".into()],
            vec![vec![0.4, 0.5, 0.9], vec![0.1, 0.2, 0.3]],
        )
        .unwrap();
        let p1 = tukey_hsd(&g1).unwrap()[0].p;
        let p2 = tukey_hsd(&g2).unwrap()[0].p;
        assert!((p1 - p2).abs() < 1e-12);
    }

    #[test]
    fn location_invariance() {
        let base = vec![vec![0.1, 0.25, 0.3, 0.22], vec![0.4, 0.55, 0.45, 0.5]];
        let shifted: Vec<Vec<f64>> = base
            .iter()
            .map(|g| g.iter().map(|v| v + 0.17).collect())
            .collect();
        let names = vec!["a".to_string(), "b".to_string()];
        let p1 = tukey_hsd(&GroupSamples::new(names.clone(), base).unwrap()).unwrap();
        let p2 = tukey_hsd(&GroupSamples::new(names, shifted).unwrap()).unwrap();
        assert!((p1[0].q - p2[0].q).abs() < 1e-9);
        assert!((p1[0].p - p2[0].p).abs() < 1e-9);
    }

    #[test]
    fn degenerate_zero_variance() {
        let g = GroupSamples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![0.7, 0.7]],
        )
        .unwrap();
        let pairs = tukey_hsd(&g).unwrap();
        assert_eq!(pairs[0].p, 0.0);
        let g = GroupSamples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        assert_eq!(tukey_hsd(&g).unwrap()[0].p, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn cdf_monotone_in_q(
            q1 in 0.01f64..8.0,
            dq in 0.01f64..4.0,
            k in 2usize..6,
            df in 2usize..40,
        ) {
            let lo = studentized_range_cdf(q1, k, df).unwrap();
            let hi = studentized_range_cdf(q1 + dq, k, df).unwrap();
            prop_assert!(hi >= lo - 1e-9);
        }
    }
}
