//! The two masked ensembles and the factorizations used to analyze them.
//!
//! Masked Wishart `W(G, d)`: draw latent vectors `X_1, ..., X_n` i.i.d.
//! standard Gaussian in `R^d` (one per vertex) and reveal
//! `<X_u, X_v> / sqrt(d)` on every edge of `G`. Masked GOE `M(G)`: reveal an
//! independent standard Gaussian on every edge. Distinguishing the two from
//! one sample is the whole game; every entry is `N(0, 1)`-ish in both, and
//! only correlations along the subgraph structure of `G` separate them.
//!
//! Sampling orders are fixed and documented so results are reproducible from
//! a seed: latent vectors fill column-major (vertex by vertex, coordinate by
//! coordinate), GOE values fill in edge-list order, and the Bartlett sampler
//! fills its triangular factor row by row (off-diagonals first, then the
//! diagonal).

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use thiserror::Error;

use crate::graphs::Graph;
use crate::numeric::{KahanSum, SymMatrix};

/// Errors from sampling and factorization.
#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("dimensions must be positive (d = {d}, n = {n})")]
    BadDimensions { d: usize, n: usize },
    #[error("latent dimension d = {d} must be at least the number of columns k = {k}")]
    TooFewDimensions { d: usize, k: usize },
    #[error("column {0} is numerically degenerate during orthogonalization")]
    Degenerate(usize),
    #[error("covariance matrices differ in dimension: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
}

/// A `d x n` matrix of latent Gaussian column vectors, one per vertex.
#[derive(Debug, Clone)]
pub struct LatentMatrix {
    d: usize,
    n: usize,
    /// Column-major storage: column `v` occupies `data[v*d .. (v+1)*d]`.
    data: Vec<f64>,
}

impl LatentMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn col(&self, v: usize) -> &[f64] {
        &self.data[v * self.d..(v + 1) * self.d]
    }
}

/// Draws a `d x n` latent matrix with i.i.d. `N(0, 1)` entries, filled
/// column by column.
pub fn sample_latent(
    d: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<LatentMatrix, EnsembleError> {
    if d == 0 || n == 0 {
        return Err(EnsembleError::BadDimensions { d, n });
    }
    let mut data = Vec::with_capacity(d * n);
    for _ in 0..d * n {
        data.push(StandardNormal.sample(rng));
    }
    Ok(LatentMatrix { d, n, data })
}

/// A symmetric random matrix observed only on the edges of a mask graph.
#[derive(Debug, Clone)]
pub struct MaskedMatrix<'g> {
    graph: &'g Graph,
    /// One value per edge, aligned with `graph.edges()`.
    values: Vec<f64>,
}

impl<'g> MaskedMatrix<'g> {
    /// Wraps precomputed edge values (used by tests and custom samplers).
    pub fn from_values(graph: &'g Graph, values: Vec<f64>) -> Result<Self, EnsembleError> {
        if values.len() != graph.n_edges() {
            return Err(EnsembleError::DimensionMismatch(
                values.len(),
                graph.n_edges(),
            ));
        }
        Ok(Self { graph, values })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Edge values in `graph.edges()` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The observed entry for edge `{u, v}`, if that edge exists.
    pub fn value(&self, u: u32, v: u32) -> Option<f64> {
        self.graph.edge_index(u, v).map(|i| self.values[i])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

/// Samples the masked Wishart ensemble `W(G, d)` through its defining latent
/// product: entry `uv` is `<X_u, X_v> / sqrt(d)`. Only edge inner products
/// are materialized, never the full Gram matrix.
pub fn masked_wishart<'g>(
    g: &'g Graph,
    d: usize,
    rng: &mut impl Rng,
) -> Result<MaskedMatrix<'g>, EnsembleError> {
    if d == 0 || g.n_vertices() == 0 {
        return Err(EnsembleError::BadDimensions {
            d,
            n: g.n_vertices(),
        });
    }
    let latent = sample_latent(d, g.n_vertices(), rng)?;
    let scale = 1.0 / (d as f64).sqrt();
    let values = g
        .edges()
        .iter()
        .map(|&(u, v)| scale * dot(latent.col(u as usize), latent.col(v as usize)))
        .collect();
    Ok(MaskedMatrix { graph: g, values })
}

/// Samples `W(G, d)` through the Bartlett factorization of the latent Gram
/// matrix instead of the latent vectors themselves; requires `d >= n`.
///
/// The Gram matrix of `n` i.i.d. `N(0, I_d)` vectors equals `L L^T` in
/// distribution, where `L` is lower triangular with independent entries:
/// `L[r][c] ~ N(0, 1)` below the diagonal and `L[r][r]^2 ~ chi^2(d - r)`.
/// Edge values are `<row_u, row_v> / sqrt(d)`, exactly matching
/// [`masked_wishart`] in distribution at `O(n^2)` sampling cost independent
/// of `d` — the fast path for huge-`d` experiments.
pub fn masked_wishart_bartlett<'g>(
    g: &'g Graph,
    d: usize,
    rng: &mut impl Rng,
) -> Result<MaskedMatrix<'g>, EnsembleError> {
    let n = g.n_vertices();
    if d == 0 || n == 0 {
        return Err(EnsembleError::BadDimensions { d, n });
    }
    if d < n {
        return Err(EnsembleError::TooFewDimensions { d, k: n });
    }
    // Row-major lower triangle; row r holds r off-diagonals plus a diagonal.
    let mut l = vec![0.0f64; n * n];
    for r in 0..n {
        for c in 0..r {
            l[r * n + c] = StandardNormal.sample(rng);
        }
        let chi = ChiSquared::new((d - r) as f64).expect("positive dof");
        l[r * n + r] = chi.sample(rng).sqrt();
    }
    let scale = 1.0 / (d as f64).sqrt();
    let values = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (u as usize, v as usize);
            let upto = u.min(v) + 1;
            let mut s = KahanSum::new();
            for t in 0..upto {
                s.add(l[u * n + t] * l[v * n + t]);
            }
            scale * s.value()
        })
        .collect();
    Ok(MaskedMatrix { graph: g, values })
}

/// Samples the masked GOE `M(G)`: independent `N(0, 1)` per edge, in
/// edge-list order.
pub fn masked_goe<'g>(g: &'g Graph, rng: &mut impl Rng) -> MaskedMatrix<'g> {
    let values = (0..g.n_edges())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    MaskedMatrix { graph: g, values }
}

/// Gram-Schmidt/Bartlett decomposition `X = U W^T` of a latent matrix.
#[derive(Debug, Clone)]
pub struct BartlettDecomposition {
    d: usize,
    k: usize,
    /// Lower-triangular `k x k`, row-major.
    w: Vec<f64>,
    /// Orthonormal `d x k`, column-major.
    u: Vec<f64>,
}

impl BartlettDecomposition {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Entry `W[i][j]`; zero above the diagonal.
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.k + j]
    }

    /// Orthonormal column `j`.
    pub fn u_col(&self, j: usize) -> &[f64] {
        &self.u[j * self.d..(j + 1) * self.d]
    }
}

/// Orthogonalizes the columns of `X` by modified Gram-Schmidt, recording the
/// triangular coefficients.
///
/// Under the Wishart latent distribution the entries of `W` are independent:
/// `W[i][j] ~ N(0, 1)` for `j < i` and `W[i][i]^2 ~ chi^2(d - i)` — the
/// Bartlett law checked by the verification suite. When `k/d > 1/2` a
/// re-orthogonalization pass keeps `U` numerically orthonormal.
pub fn bartlett_decompose(x: &LatentMatrix) -> Result<BartlettDecomposition, EnsembleError> {
    let (d, k) = (x.d(), x.n());
    if k > d {
        return Err(EnsembleError::TooFewDimensions { d, k });
    }
    let mut w = vec![0.0f64; k * k];
    let mut u = vec![0.0f64; d * k];
    let reorthogonalize = 2 * k > d;
    for i in 0..k {
        let col = x.col(i);
        let norm_in = dot(col, col).sqrt();
        let mut v = col.to_vec();
        for j in 0..i {
            let uj = &u[j * d..(j + 1) * d];
            let c = dot(&v, uj);
            for (vt, ut) in v.iter_mut().zip(uj) {
                *vt -= c * ut;
            }
            w[i * k + j] = c;
        }
        if reorthogonalize {
            for j in 0..i {
                let uj = &u[j * d..(j + 1) * d];
                let c = dot(&v, uj);
                for (vt, ut) in v.iter_mut().zip(uj) {
                    *vt -= c * ut;
                }
                w[i * k + j] += c;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm.is_nan() || norm <= 1e-12 * norm_in.max(1.0) {
            return Err(EnsembleError::Degenerate(i));
        }
        w[i * k + i] = norm;
        for (t, vt) in v.iter().enumerate() {
            u[i * d + t] = vt / norm;
        }
    }
    Ok(BartlettDecomposition { d, k, w, u })
}

/// KL divergence between centered Gaussians with covariances `sigma1` and
/// `sigma2`:
/// `KL = (ln det S2 - ln det S1 + Tr(S2^{-1} S1) - k) / 2`.
pub fn gaussian_kl(sigma1: &SymMatrix, sigma2: &SymMatrix) -> Result<f64, EnsembleError> {
    let k = sigma1.dim();
    if sigma2.dim() != k {
        return Err(EnsembleError::DimensionMismatch(k, sigma2.dim()));
    }
    let f1 = sigma1
        .cholesky()
        .ok_or(EnsembleError::NotPositiveDefinite)?;
    let f2 = sigma2
        .cholesky()
        .ok_or(EnsembleError::NotPositiveDefinite)?;
    let trace = f2
        .trace_solve(sigma1)
        .expect("dimensions already checked");
    Ok(0.5 * (f2.log_det() - f1.log_det() + trace - k as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Graph;
    use crate::numeric::MomentAccumulator;
    use crate::seeding;
    use approx::assert_relative_eq;

    #[test]
    fn latent_is_column_major_and_reproducible() {
        let mut rng = seeding::trial_rng(1, 0, 0);
        let x = sample_latent(3, 2, &mut rng).unwrap();
        let mut rng = seeding::trial_rng(1, 0, 0);
        let draws: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_eq!(x.col(0), &draws[0..3]);
        assert_eq!(x.col(1), &draws[3..6]);
        assert!(matches!(
            sample_latent(0, 2, &mut rng),
            Err(EnsembleError::BadDimensions { .. })
        ));
    }

    #[test]
    fn wishart_matches_manual_latent_product() {
        let g = Graph::complete(4);
        let d = 7;
        let mut rng = seeding::trial_rng(2, 0, 0);
        let m = masked_wishart(&g, d, &mut rng).unwrap();
        let mut rng = seeding::trial_rng(2, 0, 0);
        let x = sample_latent(d, 4, &mut rng).unwrap();
        for (idx, &(u, v)) in g.edges().iter().enumerate() {
            let expected =
                dot(x.col(u as usize), x.col(v as usize)) / (d as f64).sqrt();
            assert_relative_eq!(m.values()[idx], expected, epsilon = 1e-12);
            assert_relative_eq!(m.value(u, v).unwrap(), expected, epsilon = 1e-12);
        }
        assert!(m.value(0, 0).is_none());
    }

    #[test]
    fn goe_is_edge_ordered_iid() {
        let g = Graph::complete_bipartite(2, 3);
        let mut rng = seeding::trial_rng(3, 0, 0);
        let m = masked_goe(&g, &mut rng);
        let mut rng = seeding::trial_rng(3, 0, 0);
        let draws: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_eq!(m.values(), &draws[..]);
    }

    #[test]
    fn from_values_checks_length() {
        let g = Graph::complete(3);
        assert!(MaskedMatrix::from_values(&g, vec![1.0; 3]).is_ok());
        assert!(MaskedMatrix::from_values(&g, vec![1.0; 2]).is_err());
    }

    #[test]
    fn bartlett_sampler_matches_wishart_moments() {
        // Single-edge mask: E[M^2] = 1 and E[M^4] = 3 + 6/d for both paths.
        let g = Graph::from_parts(2, vec![(0, 1)]).unwrap();
        let d = 16;
        let mut acc2 = MomentAccumulator::new();
        let mut acc4 = MomentAccumulator::new();
        for trial in 0..20_000u32 {
            let mut rng = seeding::trial_rng(50, 0, trial);
            let m = masked_wishart_bartlett(&g, d, &mut rng).unwrap();
            let x = m.values()[0];
            acc2.push(x * x);
            acc4.push(x * x * x * x);
        }
        let z2 = (acc2.mean() - 1.0) / acc2.stderr_of_mean();
        let m4 = 3.0 + 6.0 / d as f64;
        let z4 = (acc4.mean() - m4) / acc4.stderr_of_mean();
        assert!(z2.abs() < 5.0, "second moment z = {z2}");
        assert!(z4.abs() < 5.0, "fourth moment z = {z4}");
    }

    #[test]
    fn bartlett_sampler_requires_d_at_least_n() {
        let g = Graph::complete(5);
        let mut rng = seeding::trial_rng(4, 0, 0);
        assert!(matches!(
            masked_wishart_bartlett(&g, 3, &mut rng),
            Err(EnsembleError::TooFewDimensions { d: 3, k: 5 })
        ));
    }

    #[test]
    fn decomposition_reconstructs_and_is_orthonormal() {
        let mut rng = seeding::trial_rng(5, 0, 0);
        let x = sample_latent(12, 5, &mut rng).unwrap();
        let b = bartlett_decompose(&x).unwrap();
        // X_i = sum_{j <= i} W[i][j] U_j.
        for i in 0..5 {
            for t in 0..12 {
                let mut rec = 0.0;
                for j in 0..=i {
                    rec += b.w(i, j) * b.u_col(j)[t];
                }
                assert_relative_eq!(rec, x.col(i)[t], epsilon = 1e-9);
            }
        }
        for i in 0..5 {
            assert!(b.w(i, i) > 0.0);
            for j in (i + 1)..5 {
                assert_eq!(b.w(i, j), 0.0);
            }
            for j in 0..=i {
                let expected = f64::from(i == j);
                assert_relative_eq!(
                    dot(b.u_col(i), b.u_col(j)),
                    expected,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn decomposition_gram_identity() {
        // X^T X = W W^T since U has orthonormal columns.
        let mut rng = seeding::trial_rng(6, 0, 0);
        let x = sample_latent(9, 4, &mut rng).unwrap();
        let b = bartlett_decompose(&x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let gram = dot(x.col(i), x.col(j));
                let mut ww = 0.0;
                for t in 0..4 {
                    ww += b.w(i, t) * b.w(j, t);
                }
                assert_relative_eq!(gram, ww, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn decomposition_rejects_degenerate_and_fat_inputs() {
        let dup = LatentMatrix {
            d: 3,
            n: 2,
            data: vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0],
        };
        assert!(matches!(
            bartlett_decompose(&dup),
            Err(EnsembleError::Degenerate(1))
        ));
        let mut rng = seeding::trial_rng(7, 0, 0);
        let fat = sample_latent(3, 5, &mut rng).unwrap();
        assert!(matches!(
            bartlett_decompose(&fat),
            Err(EnsembleError::TooFewDimensions { d: 3, k: 5 })
        ));
    }

    #[test]
    fn kl_zero_on_equal_and_known_value() {
        let id2 = SymMatrix::identity(2);
        assert_relative_eq!(gaussian_kl(&id2, &id2).unwrap(), 0.0);
        let double = SymMatrix::scaled_identity(2, 2.0);
        // (ln det 2I + Tr((2I)^{-1}) - 2) / 2 = ln 2 - 1/2.
        assert_relative_eq!(
            gaussian_kl(&id2, &double).unwrap(),
            2f64.ln() - 0.5,
            epsilon = 1e-12
        );
        let indefinite = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            gaussian_kl(&id2, &indefinite),
            Err(EnsembleError::NotPositiveDefinite)
        ));
        assert!(matches!(
            gaussian_kl(&id2, &SymMatrix::identity(3)),
            Err(EnsembleError::DimensionMismatch(2, 3))
        ));
    }
}
