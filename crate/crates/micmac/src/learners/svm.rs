use crate::matrix::{sq_dist, Matrix};

const MAX_SWEEPS: usize = 10_000;

/// RBF-kernel SVM trained by sequential pairwise dual optimization
/// (working set of two) until KKT violations fall below the tolerance.
#[derive(Debug, Clone)]
pub struct SvmModel {
    x: Matrix,
    /// labels mapped to ±1
    y: Vec<f64>,
    alpha: Vec<f64>,
    b: f64,
    gamma: f64,
    c: f64,
    tol: f64,
}

pub fn rbf_kernel_matrix(x: &Matrix, gamma: f64) -> Matrix {
    let n = x.n_rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (-gamma * sq_dist(x.row(i), x.row(j))).exp();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// The "scale" heuristic: 1 / (n_features * mean feature variance).
fn gamma_scale(x: &Matrix) -> f64 {
    let n = x.n_rows() as f64;
    let p = x.n_cols();
    let mut total_var = 0.0;
    for j in 0..p {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        total_var += col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    }
    let mean_var = total_var / p as f64;
    if mean_var > 0.0 {
        1.0 / (p as f64 * mean_var)
    } else {
        1.0
    }
}

struct Smo<'a> {
    k: &'a Matrix,
    y: &'a [f64],
    alpha: Vec<f64>,
    errors: Vec<f64>,
    b: f64,
    c: f64,
    tol: f64,
    scan_pos: usize,
}

impl<'a> Smo<'a> {
    fn new(k: &'a Matrix, y: &'a [f64], c: f64, tol: f64) -> Self {
        let n = y.len();
        Smo {
            k,
            y,
            alpha: vec![0.0; n],
            errors: y.iter().map(|&yi| -yi).collect(),
            b: 0.0,
            c,
            tol,
            scan_pos: 0,
        }
    }

    fn dual_objective(&self) -> f64 {
        let n = self.y.len();
        let mut obj = self.alpha.iter().sum::<f64>();
        for i in 0..n {
            if self.alpha[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if self.alpha[j] == 0.0 {
                    continue;
                }
                obj -= 0.5 * self.alpha[i] * self.alpha[j] * self.y[i] * self.y[j]
                    * self.k.get(i, j);
            }
        }
        obj
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s > 0.0 {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        } else {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let k11 = self.k.get(i1, i1);
        let k12 = self.k.get(i1, i2);
        let k22 = self.k.get(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        if eta <= 1e-12 {
            return false;
        }
        let mut a2_new = a2 + y2 * (e1 - e2) / eta;
        a2_new = a2_new.clamp(lo, hi);
        if (a2_new - a2).abs() < 1e-10 * (a2_new + a2 + 1e-10) {
            return false;
        }
        let a1_new = a1 + s * (a2 - a2_new);

        let b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + self.b;
        let b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + self.b;
        let b_new = if a1_new > 0.0 && a1_new < self.c {
            b1
        } else if a2_new > 0.0 && a2_new < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = b_new - self.b;

        for j in 0..self.y.len() {
            self.errors[j] += y1 * (a1_new - a1) * self.k.get(i1, j)
                + y2 * (a2_new - a2) * self.k.get(i2, j)
                - db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.b = b_new;
        true
    }

    fn non_bound(&self) -> Vec<usize> {
        (0..self.y.len())
            .filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < self.c)
            .collect()
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let nb = self.non_bound();
        if nb.len() > 1 {
            // second-choice heuristic: maximize |E1 - E2|
            let i1 = *nb
                .iter()
                .max_by(|&&a, &&b| {
                    let da = (self.errors[a] - e2).abs();
                    let db = (self.errors[b] - e2).abs();
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // scan non-bound, then all, from a rotating deterministic offset
        let n = self.y.len();
        self.scan_pos = (self.scan_pos + 1) % n;
        for off in 0..nb.len() {
            let i1 = nb[(self.scan_pos + off) % nb.len()];
            if self.take_step(i1, i2) {
                return true;
            }
        }
        for off in 0..n {
            let i1 = (self.scan_pos + off) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn solve(&mut self) {
        let n = self.y.len();
        let mut examine_all = true;
        let mut num_changed = 1;
        let mut sweeps = 0;
        #[cfg(debug_assertions)]
        let mut last_obj = self.dual_objective();
        while (num_changed > 0 || examine_all) && sweeps < MAX_SWEEPS {
            num_changed = 0;
            if examine_all {
                for i in 0..n {
                    num_changed += self.examine(i) as usize;
                }
            } else {
                for i in self.non_bound() {
                    num_changed += self.examine(i) as usize;
                }
            }
            if examine_all {
                examine_all = false;
            } else if num_changed == 0 {
                examine_all = true;
            }
            sweeps += 1;
            #[cfg(debug_assertions)]
            {
                let obj = self.dual_objective();
                debug_assert!(
                    obj >= last_obj - 1e-9,
                    "dual objective decreased: {last_obj} -> {obj}"
                );
                last_obj = obj;
            }
        }
    }
}

impl SvmModel {
    pub(super) fn fit(cfg: &super::LearnerConfig, x: &Matrix, labels: &[u8]) -> Self {
        let gamma = cfg.svm_gamma.unwrap_or_else(|| gamma_scale(x));
        let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let k = rbf_kernel_matrix(x, gamma);
        let mut smo = Smo::new(&k, &y, cfg.svm_c, cfg.svm_tol);
        smo.solve();
        let (alpha, b) = (smo.alpha, smo.b);
        SvmModel {
            x: x.clone(),
            y,
            alpha,
            b,
            gamma,
            c: cfg.svm_c,
            tol: cfg.svm_tol,
        }
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn regularization(&self) -> f64 {
        self.c
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut f = -self.b;
        for i in 0..self.y.len() {
            if self.alpha[i] > 0.0 {
                f += self.alpha[i]
                    * self.y[i]
                    * (-self.gamma * sq_dist(self.x.row(i), row)).exp();
            }
        }
        f
    }

    pub fn predict(&self, queries: &Matrix) -> Vec<u8> {
        crate::parallel::map_indexed(queries.n_rows(), |q| {
            if self.decision(queries.row(q)) >= 0.0 {
                1
            } else {
                0
            }
        })
    }

    pub fn dual_objective(&self) -> f64 {
        let n = self.y.len();
        let mut obj = self.alpha.iter().sum::<f64>();
        for i in 0..n {
            for j in 0..n {
                if self.alpha[i] == 0.0 || self.alpha[j] == 0.0 {
                    continue;
                }
                obj -= 0.5
                    * self.alpha[i]
                    * self.alpha[j]
                    * self.y[i]
                    * self.y[j]
                    * (-self.gamma * sq_dist(self.x.row(i), self.x.row(j))).exp();
            }
        }
        obj
    }

    /// Largest KKT violation over the training points.
    pub fn kkt_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.y.len() {
            let yf = self.y[i] * (self.decision(self.x.row(i)));
            let v = if self.alpha[i] < 1e-9 {
                (1.0 - yf).max(0.0)
            } else if self.alpha[i] > self.c - 1e-9 {
                (yf - 1.0).max(0.0)
            } else {
                (yf - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Σ α_i y_i, zero at a feasible dual point.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }
}

// Note: decision() subtracts b because the error-cache convention above keeps
// f(x) = Σ α y K − b consistent with the b1/b2 update signs.
