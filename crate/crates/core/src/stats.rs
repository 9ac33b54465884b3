//! Sample summaries and standard errors for Monte Carlo estimators.

use serde::{Deserialize, Serialize};

/// Value, standard error and sample size of an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemigroupEstimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

/// Per-path sample vectors, `n` rows of `k` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub k: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn from_rows(k: usize, rows: Vec<Vec<f64>>) -> Self {
        let mut data = Vec::with_capacity(rows.len() * k);
        for r in rows {
            debug_assert_eq!(r.len(), k);
            data.extend(r);
        }
        Self { k, data }
    }

    pub fn n(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.data.len() / self.k
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; self.k];
        for i in 0..n {
            for (a, v) in m.iter_mut().zip(self.row(i)) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= n as f64);
        m
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.linear(&unit(self.k, j)).0
    }

    pub fn se(&self, j: usize) -> f64 {
        self.linear(&unit(self.k, j)).1
    }

    /// Mean and standard error of `sum_j c_j X_j`. With `c` the gradient of a
    /// smooth function of the column means, the standard error is the delta
    /// method one.
    pub fn linear(&self, c: &[f64]) -> (f64, f64) {
        let n = self.n();
        let vals: Vec<f64> = (0..n)
            .map(|i| self.row(i).iter().zip(c).map(|(x, w)| x * w).sum())
            .collect();
        mean_se(&vals)
    }
}

impl Samples {
    /// Mean and standard error of `sum_i c_i X_{cols[i]}`.
    pub fn linear_cols(&self, cols: &[usize], c: &[f64]) -> (f64, f64) {
        let vals: Vec<f64> = (0..self.n())
            .map(|i| {
                let r = self.row(i);
                cols.iter().zip(c).map(|(j, w)| r[*j] * w).sum()
            })
            .collect();
        mean_se(&vals)
    }

    /// `g` of the column means of `cols`, with its delta-method standard
    /// error (gradient of `g` by central differences).
    pub fn delta(&self, cols: &[usize], g: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let n = self.n() as f64;
        let m: Vec<f64> = cols
            .iter()
            .map(|j| (0..self.n()).map(|i| self.row(i)[*j]).sum::<f64>() / n)
            .collect();
        let value = g(&m);
        let mut w = m.clone();
        let c: Vec<f64> = (0..cols.len())
            .map(|i| {
                let h = 1e-6 * m[i].abs().max(1e-3);
                w[i] = m[i] + h;
                let up = g(&w);
                w[i] = m[i] - h;
                let dn = g(&w);
                w[i] = m[i];
                (up - dn) / (2.0 * h)
            })
            .collect();
        (value, self.linear_cols(cols, &c).1)
    }
}

fn unit(k: usize, j: usize) -> Vec<f64> {
    let mut c = vec![0.0; k];
    c[j] = 1.0;
    c
}

/// Sample mean and `sd / sqrt(n)` (two-pass).
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (m, (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_se(&[2.0, 2.0, 2.0]).1, 0.0);
    }

    #[test]
    fn delta_method_matches_linear_combination() {
        let s = Samples::from_rows(2, vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![4.0, 1.0]]);
        let (m, _) = s.linear(&[1.0, -2.0]);
        let mm = s.means();
        assert!((m - (mm[0] - 2.0 * mm[1])).abs() < 1e-15);
        assert_eq!(s.n(), 3);
        assert!((s.mean(0) - 7.0 / 3.0).abs() < 1e-15);
        let (v, se) = s.delta(&[0, 1], |m| m[0] - 2.0 * m[1]);
        let (v2, se2) = s.linear(&[1.0, -2.0]);
        assert!((v - v2).abs() < 1e-12 && (se - se2).abs() < 1e-8);
    }
}
