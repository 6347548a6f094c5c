//! Small numeric utilities: compensated summation, sample moments, checked
//! binomial coefficients, a two-sample Kolmogorov-Smirnov statistic, and just
//! enough dense linear algebra (Cholesky) for KL divergences between
//! low-dimensional Gaussians.

use serde::Serialize;
use thiserror::Error;

/// Errors from the dense linear-algebra helpers.
#[derive(Debug, Error)]
pub enum NumericError {
    #[error("matrix rows do not form a square matrix")]
    NotSquare,
    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
}

/// Kahan compensated accumulator for `f64` sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }

    /// Folds another compensated sum into this one without losing either
    /// accumulator's correction term (the represented total is `sum - comp`).
    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(-other.comp);
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Streaming first/second-moment accumulator with compensated sums.
///
/// Accumulators can be merged; pushing values in a fixed order and merging in
/// a fixed order keeps results bit-for-bit reproducible, which is how the
/// parallel Monte Carlo drivers stay deterministic at any thread count.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    count: u64,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    /// Folds `other` into `self`.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.sum.value() / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.mean();
        ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the sample mean.
    pub fn stderr_of_mean(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// A Monte Carlo estimate: sample mean with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl McEstimate {
    pub fn from_accumulator(acc: &MomentAccumulator) -> Self {
        Self {
            mean: acc.mean(),
            stderr: acc.stderr_of_mean(),
            trials: acc.count(),
        }
    }

    /// Normalized deviation of the estimate from a reference value.
    pub fn z_against(&self, reference: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference) / self.stderr
        }
    }
}

/// Two-pass compensated sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    assert!(xs.len() >= 2, "need at least two samples");
    let n = xs.len() as f64;
    let mean = kahan_sum(xs) / n;
    let mut dev = KahanSum::new();
    for &x in xs {
        let d = x - mean;
        dev.add(d * d);
    }
    (mean, dev.value() / (n - 1.0))
}

/// Exact binomial coefficient in `u128`; panics on overflow.
pub fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r
            .checked_mul((n - k + i) as u128)
            .expect("binomial coefficient overflows u128");
        r /= i as u128; // exact: C(n-k+i, i) is an integer
    }
    r
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
///
/// `c(alpha) * sqrt((n + m) / (n m))` with `c(alpha) = sqrt(-ln(alpha/2)/2)`;
/// at `alpha = 0.01`, `c = 1.6276...`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    assert!(n > 0 && m > 0 && alpha > 0.0 && alpha < 1.0);
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * (((n + m) as f64) / ((n as f64) * (m as f64))).sqrt()
}

/// Dense symmetric matrix in row-major full storage.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    k: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    /// Builds from rows, checking squareness and symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(NumericError::NotSquare);
        }
        let mut a = vec![0.0; k * k];
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                a[i * k + j] = x;
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let (x, y) = (a[i * k + j], a[j * k + i]);
                if (x - y).abs() > 1e-9 * x.abs().max(y.abs()).max(1.0) {
                    return Err(NumericError::NotSymmetric(i, j));
                }
            }
        }
        Ok(Self { k, a })
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self {
            k,
            a: vec![0.0; k * k],
        };
        for i in 0..k {
            m.a[i * k + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(k: usize, s: f64) -> Self {
        let mut m = Self::identity(k);
        for i in 0..k {
            m.a[i * k + i] = s;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.k + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, x: f64) {
        self.a[i * self.k + j] = x;
        self.a[j * self.k + i] = x;
    }

    /// Cholesky factorization `A = L L^T`; `None` if not positive definite.
    pub fn cholesky(&self) -> Option<CholeskyFactor> {
        let k = self.k;
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = KahanSum::new();
                for t in 0..j {
                    s.add(l[i * k + t] * l[j * k + t]);
                }
                let x = self.a[i * k + j] - s.value();
                if i == j {
                    if !x.is_finite() || x <= 0.0 {
                        return None;
                    }
                    l[i * k + i] = x.sqrt();
                } else {
                    l[i * k + j] = x / l[j * k + j];
                }
            }
        }
        Some(CholeskyFactor { k, l })
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    k: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    /// `ln det A = 2 * sum ln L_ii`.
    pub fn log_det(&self) -> f64 {
        let mut s = KahanSum::new();
        for i in 0..self.k {
            s.add(self.l[i * self.k + i].ln());
        }
        2.0 * s.value()
    }

    /// Solves `A x = b` in place via the factor.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let k = self.k;
        assert_eq!(b.len(), k);
        for i in 0..k {
            let mut s = b[i];
            for t in 0..i {
                s -= self.l[i * k + t] * b[t];
            }
            b[i] = s / self.l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = b[i];
            for t in (i + 1)..k {
                s -= self.l[t * k + i] * b[t];
            }
            b[i] = s / self.l[i * k + i];
        }
    }

    /// `Tr(A^{-1} B)` for symmetric `B` of matching dimension.
    pub fn trace_solve(&self, b: &SymMatrix) -> Result<f64, NumericError> {
        if b.dim() != self.k {
            return Err(NumericError::DimensionMismatch(self.k, b.dim()));
        }
        let mut tr = KahanSum::new();
        let mut col = vec![0.0; self.k];
        for j in 0..self.k {
            for i in 0..self.k {
                col[i] = b.get(i, j);
            }
            self.solve_in_place(&mut col);
            tr.add(col[j]);
        }
        Ok(tr.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn binom_small_values() {
        assert_eq!(binom(0, 0), 1);
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(10, 3), 120);
        assert_eq!(binom(4, 7), 0);
        assert_eq!(binom(100, 50), 100891344545564193334812497256);
    }

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        let xs: Vec<f64> = std::iter::once(1e16)
            .chain(std::iter::repeat_n(1.0, 10_000))
            .chain(std::iter::once(-1e16))
            .collect();
        assert_eq!(kahan_sum(&xs), 10_000.0);
    }

    #[test]
    fn mean_var_matches_hand_computation() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(v, 5.0 / 3.0);
    }

    #[test]
    fn accumulator_agrees_with_two_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut acc = MomentAccumulator::new();
        for &x in &xs {
            acc.push(x);
        }
        let (m, v) = mean_var(&xs);
        assert_relative_eq!(acc.mean(), m, epsilon = 1e-12);
        assert_relative_eq!(acc.variance(), v, epsilon = 1e-12);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 + 5) % 101) as f64).collect();
        let mut whole = MomentAccumulator::new();
        for &x in &xs {
            whole.push(x);
        }
        let mut merged = MomentAccumulator::new();
        for chunk in xs.chunks(64) {
            let mut part = MomentAccumulator::new();
            for &x in chunk {
                part.push(x);
            }
            merged.merge(&part);
        }
        assert_relative_eq!(whole.mean(), merged.mean(), epsilon = 1e-12);
        assert_relative_eq!(whole.variance(), merged.variance(), epsilon = 1e-10);
    }

    #[test]
    fn ks_statistic_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
    }

    #[test]
    fn ks_statistic_disjoint_samples_is_one() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[10.0, 11.0]), 1.0);
    }

    #[test]
    fn ks_statistic_hand_example() {
        // F_a jumps at 1,3: F_b jumps at 2,4. Max gap 0.5 at x in [1,2).
        assert_relative_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
    }

    #[test]
    fn ks_critical_one_percent() {
        // c(0.01) = sqrt(-ln(0.005)/2) = 1.62762..., times sqrt(2/10^4).
        let d = ks_critical_value(10_000, 10_000, 0.01);
        assert_relative_eq!(d, 0.0230182, max_relative = 1e-5);
    }

    #[test]
    fn cholesky_of_known_spd_matrix() {
        // A = [[4,2],[2,3]] => L = [[2,0],[1,sqrt(2)]], det = 8.
        let a = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = a.cholesky().unwrap();
        assert_relative_eq!(f.log_det(), 8.0f64.ln(), epsilon = 1e-12);
        let mut b = vec![6.0, 5.0];
        // Solve [[4,2],[2,3]] x = [6,5] => x = [1,1].
        f.solve_in_place(&mut b);
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn trace_solve_identity_gives_trace() {
        let a = SymMatrix::identity(3);
        let f = a.cholesky().unwrap();
        let b = SymMatrix::from_rows(&[
            vec![1.0, 0.5, 0.0],
            vec![0.5, 2.0, 0.1],
            vec![0.0, 0.1, 3.0],
        ])
        .unwrap();
        assert_relative_eq!(f.trace_solve(&b).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn from_rows_rejects_asymmetric() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).is_err());
    }
}
