//! Distinguishing statistics and their predicted moments.
//!
//! Three statistics separate masked Wishart from masked GOE at different
//! mask densities:
//!
//! * `kappa3`: the sum over triangles `i < j < k` of `M_ij M_jk M_ki`;
//! * `kappa4`: a degree-4 polynomial with one term per 4-cycle
//!   (`M_ij M_jk M_kl M_li` over cycles indexed with the smallest vertex
//!   first and its smaller neighbor second), one per wedge
//!   (`(M_ij^2 - 1)(M_jk^2 - 1)` over centers `j` with outer `i < k`), and
//!   one per edge (`M_e^4 - 6 M_e^2 + 3`);
//! * `kappa_r`: the mean squared entry along the edges at a maximum-degree
//!   vertex (smallest label on ties).
//!
//! Under the GOE all three are centered (resp. centered at 1); under the
//! Wishart each picks up a mean proportional to a subgraph count. The
//! closed-form means, variances, and variance upper bounds implemented here
//! are exercised against Monte Carlo in the verification suites.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::census::{self, PlainPattern};
use crate::ensembles::{sample_latent, MaskedMatrix};
use crate::graphs::Graph;
use crate::numeric::{KahanSum, McEstimate, MomentAccumulator};
use crate::seeding::{self, streams};

/// Errors from statistic evaluation and prediction.
#[derive(Debug, Error)]
pub enum StatError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("maximum degree is zero; kappa_r is undefined")]
    MaxDegreeZero,
    #[error("unknown pair shape id {0}; valid ids are 1..=20")]
    BadShape(u8),
    #[error("d must be positive")]
    BadD,
    #[error("k must be positive")]
    BadK,
    #[error("trial count must be positive and fit in 32 bits")]
    BadTrials,
}

/// Which ensemble a prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Goe,
    Wishart { d: u64 },
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ensemble::Goe => write!(f, "goe"),
            Ensemble::Wishart { d } => write!(f, "wishart(d={d})"),
        }
    }
}

/// Statistics with closed-form moment predictions: the full `kappa3` and
/// `kappa4`, plus the three additive parts of `kappa4`. (`kappa_r` has a
/// full reference law instead; see [`kappa_r_law`].)
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Kappa3,
    Kappa4,
    Kappa4C4,
    Kappa4P2,
    Kappa4E,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::Kappa3,
        Statistic::Kappa4,
        Statistic::Kappa4C4,
        Statistic::Kappa4P2,
        Statistic::Kappa4E,
    ];
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Statistic::Kappa3 => write!(f, "kappa3"),
            Statistic::Kappa4 => write!(f, "kappa4"),
            Statistic::Kappa4C4 => write!(f, "kappa4_c4"),
            Statistic::Kappa4P2 => write!(f, "kappa4_p2"),
            Statistic::Kappa4E => write!(f, "kappa4_e"),
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kappa3" => Ok(Statistic::Kappa3),
            "kappa4" => Ok(Statistic::Kappa4),
            "kappa4_c4" => Ok(Statistic::Kappa4C4),
            "kappa4_p2" => Ok(Statistic::Kappa4P2),
            "kappa4_e" => Ok(Statistic::Kappa4E),
            other => Err(format!(
                "unknown statistic `{other}`; expected one of kappa3, kappa4, kappa4_c4, kappa4_p2, kappa4_e"
            )),
        }
    }
}

/// Whether a predicted mean is exact or only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Exact,
    LowerBound,
}

/// Whether a predicted variance is exact or an upper bound (stated up to an
/// absolute constant, reported here with constant 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    Exact,
    UpperBound,
}

/// A closed-form mean/variance prediction for one statistic and ensemble.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentPrediction {
    pub statistic: Statistic,
    pub ensemble: Ensemble,
    pub mean: f64,
    pub mean_kind: MeanKind,
    pub variance: f64,
    pub variance_kind: VarianceKind,
}

/// The three additive pieces of `kappa4`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Kappa4Breakdown {
    /// Sum over 4-cycles of the cyclic entry product.
    pub c4_part: f64,
    /// Sum over wedges of `(M^2 - 1)(M^2 - 1)`.
    pub p2_part: f64,
    /// Sum over edges of `M^4 - 6 M^2 + 3`.
    pub e_part: f64,
    /// Compensated sum of the three parts.
    pub total: f64,
}

/// Precomputed index lists for evaluating the statistics on many samples of
/// the same mask: each term is a tuple of edge indices into
/// `MaskedMatrix::values()`.
#[derive(Debug, Clone)]
pub struct KappaPlan {
    triangles: Vec<[u32; 3]>,
    cycles: Vec<[u32; 4]>,
    wedges: Vec<[u32; 2]>,
    /// Edge indices at the maximum-degree vertex (empty iff max degree 0).
    vstar_edges: Vec<u32>,
    n_edges: usize,
}

impl KappaPlan {
    pub fn new(g: &Graph) -> Self {
        let nbrs = |v: u32| g.neighbors(v).expect("valid label");

        let mut triangles = Vec::new();
        for (idx, &(i, j)) in g.edges().iter().enumerate() {
            for &w in nbrs(i) {
                if w > j && g.adjacent(j, w) {
                    let e_jw = g.edge_index(j, w).expect("adjacent") as u32;
                    let e_iw = g.edge_index(i, w).expect("adjacent") as u32;
                    triangles.push([idx as u32, e_jw, e_iw]);
                }
            }
        }

        // 4-cycles i-j-k-l with i smallest and j < l: i and k are one
        // diagonal, {j, l} common neighbors of both exceeding i.
        let mut cycles = Vec::new();
        let n = g.n_vertices() as u32;
        for i in 0..n {
            for k in (i + 1)..n {
                let mut commons: Vec<u32> = Vec::new();
                let (a, b) = (nbrs(i), nbrs(k));
                let (mut x, mut y) = (0usize, 0usize);
                while x < a.len() && y < b.len() {
                    match a[x].cmp(&b[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            if a[x] > i {
                                commons.push(a[x]);
                            }
                            x += 1;
                            y += 1;
                        }
                    }
                }
                for (s, &j) in commons.iter().enumerate() {
                    for &l in &commons[s + 1..] {
                        cycles.push([
                            g.edge_index(i, j).expect("adjacent") as u32,
                            g.edge_index(j, k).expect("adjacent") as u32,
                            g.edge_index(k, l).expect("adjacent") as u32,
                            g.edge_index(l, i).expect("adjacent") as u32,
                        ]);
                    }
                }
            }
        }

        let mut wedges = Vec::new();
        for j in 0..n {
            let nb = nbrs(j);
            for (s, &i) in nb.iter().enumerate() {
                for &k in &nb[s + 1..] {
                    wedges.push([
                        g.edge_index(i, j).expect("adjacent") as u32,
                        g.edge_index(j, k).expect("adjacent") as u32,
                    ]);
                }
            }
        }

        let vstar_edges = match g.max_degree_vertex() {
            Ok((v, _)) => nbrs(v)
                .iter()
                .map(|&w| g.edge_index(v, w).expect("adjacent") as u32)
                .collect(),
            Err(_) => Vec::new(),
        };

        Self {
            triangles,
            cycles,
            wedges,
            vstar_edges,
            n_edges: g.n_edges(),
        }
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_cycles(&self) -> usize {
        self.cycles.len()
    }

    pub fn n_wedges(&self) -> usize {
        self.wedges.len()
    }

    /// Evaluates `kappa3` on edge values aligned with the plan's graph.
    pub fn kappa3(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_edges, "edge values mismatch plan");
        let mut s = KahanSum::new();
        for t in &self.triangles {
            s.add(values[t[0] as usize] * values[t[1] as usize] * values[t[2] as usize]);
        }
        s.value()
    }

    /// Evaluates the three parts of `kappa4`.
    pub fn kappa4(&self, values: &[f64]) -> Kappa4Breakdown {
        assert_eq!(values.len(), self.n_edges, "edge values mismatch plan");
        let mut c4 = KahanSum::new();
        for c in &self.cycles {
            c4.add(
                values[c[0] as usize]
                    * values[c[1] as usize]
                    * values[c[2] as usize]
                    * values[c[3] as usize],
            );
        }
        let mut p2 = KahanSum::new();
        for w in &self.wedges {
            let a = values[w[0] as usize];
            let b = values[w[1] as usize];
            p2.add((a * a - 1.0) * (b * b - 1.0));
        }
        let mut e = KahanSum::new();
        for &x in values {
            let x2 = x * x;
            e.add(x2 * x2 - 6.0 * x2 + 3.0);
        }
        let (c4_part, p2_part, e_part) = (c4.value(), p2.value(), e.value());
        let mut total = KahanSum::new();
        total.add(c4_part);
        total.add(p2_part);
        total.add(e_part);
        Kappa4Breakdown {
            c4_part,
            p2_part,
            e_part,
            total: total.value(),
        }
    }

    /// Evaluates `kappa_r`: the mean squared entry at the max-degree vertex.
    pub fn kappa_r(&self, values: &[f64]) -> Result<f64, StatError> {
        assert_eq!(values.len(), self.n_edges, "edge values mismatch plan");
        if self.vstar_edges.is_empty() {
            return Err(StatError::MaxDegreeZero);
        }
        let mut s = KahanSum::new();
        for &e in &self.vstar_edges {
            let x = values[e as usize];
            s.add(x * x);
        }
        Ok(s.value() / self.vstar_edges.len() as f64)
    }
}

/// `kappa3` of a single sample (builds a one-shot plan).
pub fn kappa3(m: &MaskedMatrix) -> f64 {
    KappaPlan::new(m.graph()).kappa3(m.values())
}

/// `kappa4` of a single sample (builds a one-shot plan).
pub fn kappa4(m: &MaskedMatrix) -> Kappa4Breakdown {
    KappaPlan::new(m.graph()).kappa4(m.values())
}

/// `kappa_r` of a single sample.
pub fn kappa_r(m: &MaskedMatrix) -> Result<f64, StatError> {
    KappaPlan::new(m.graph()).kappa_r(m.values())
}

fn c(x: u128) -> f64 {
    x as f64
}

/// Closed-form moment predictions for a statistic under an ensemble.
///
/// GOE: all five statistics are centered, with exact variances
/// `num(C3)` for `kappa3` and `num(C4) + 4 num(P2) + 24 num(E)` for
/// `kappa4` (componentwise `num(C4)`, `4 num(P2)`, `24 num(E)`).
///
/// Wishart: exact means `num(C3)/sqrt(d)` for `kappa3` and
/// `(num(C4) + 2 num(P2) + 6 num(E))/d` for `kappa4` (componentwise
/// `num(C4)/d`, `2 num(P2)/d`, `6 num(E)/d`). Wishart variances are upper
/// bounds that hold up to an absolute constant; they are reported with
/// coefficient 1 on every census term and flagged `UpperBound`, so callers
/// must never read them as exact.
pub fn predicted_moments(
    g: &Graph,
    ensemble: Ensemble,
    statistic: Statistic,
) -> Result<MomentPrediction, StatError> {
    if g.n_vertices() == 0 {
        return Err(StatError::EmptyGraph);
    }
    if let Ensemble::Wishart { d: 0 } = ensemble {
        return Err(StatError::BadD);
    }
    let cnt = |p: PlainPattern| -> f64 { c(census::count(g, p).expect("valid pattern")) };
    use PlainPattern::*;
    let (mean, variance, variance_kind) = match (statistic, ensemble) {
        (Statistic::Kappa3, Ensemble::Goe) => (0.0, cnt(C3), VarianceKind::Exact),
        (Statistic::Kappa3, Ensemble::Wishart { d }) => {
            let x = 1.0 / d as f64;
            let bound = cnt(C3) + x * cnt(C3TwoE) + x * x * cnt(C3TwoV);
            (cnt(C3) * x.sqrt(), bound, VarianceKind::UpperBound)
        }
        (Statistic::Kappa4, Ensemble::Goe) => {
            let var = cnt(C4) + 4.0 * cnt(P2) + GOE_EDGE_TERM_VARIANCE * cnt(Edge);
            (0.0, var, VarianceKind::Exact)
        }
        (Statistic::Kappa4, Ensemble::Wishart { d }) => {
            let x = 1.0 / d as f64;
            let mean = (cnt(C4) + 2.0 * cnt(P2) + 6.0 * cnt(Edge)) * x;
            let bound = (cnt(C4) + cnt(P2) + cnt(Edge))
                + x * (cnt(C4) + cnt(P2)).powf(1.5)
                + x * x * (cnt(Star(4)) + cnt(K24) + cnt(C4TwoE))
                + x * x * x * cnt(C4TwoV);
            (mean, bound, VarianceKind::UpperBound)
        }
        (Statistic::Kappa4C4, Ensemble::Goe) => (0.0, cnt(C4), VarianceKind::Exact),
        (Statistic::Kappa4C4, Ensemble::Wishart { d }) => {
            // Pairs of 4-cycles sharing an edge plus an opposite vertex have
            // covariance of order 1/d (their product reduces to the squared
            // triangle), so C4^{2,ev} sits in the 1/d bracket with K23.
            let x = 1.0 / d as f64;
            let bound = cnt(C4)
                + x * (cnt(K23) + cnt(C4TwoEv))
                + x * x * (cnt(K24) + cnt(C4TwoE))
                + x * x * x * cnt(C4TwoV);
            (cnt(C4) * x, bound, VarianceKind::UpperBound)
        }
        (Statistic::Kappa4P2, Ensemble::Goe) => (0.0, 4.0 * cnt(P2), VarianceKind::Exact),
        (Statistic::Kappa4P2, Ensemble::Wishart { d }) => {
            let x = 1.0 / d as f64;
            let bound = cnt(P2)
                + x * (cnt(Star(3)) + cnt(C3))
                + x * x * (cnt(Star(4)) + cnt(C4) + cnt(C3Plus) + cnt(P3))
                + x * x * x * (cnt(K13Plus) + cnt(P4));
            (2.0 * cnt(P2) * x, bound, VarianceKind::UpperBound)
        }
        (Statistic::Kappa4E, Ensemble::Goe) => {
            (0.0, GOE_EDGE_TERM_VARIANCE * cnt(Edge), VarianceKind::Exact)
        }
        (Statistic::Kappa4E, Ensemble::Wishart { d }) => {
            let x = 1.0 / d as f64;
            let bound = cnt(Edge) + x * x * cnt(P2);
            (6.0 * cnt(Edge) * x, bound, VarianceKind::UpperBound)
        }
    };
    Ok(MomentPrediction {
        statistic,
        ensemble,
        mean,
        mean_kind: MeanKind::Exact,
        variance,
        variance_kind,
    })
}

/// Per-edge variance of the edge term `M^4 - 6M^2 + 3` under `N(0, 1)`:
/// the squared Hermite norm `E[He4(g)^2] = 4! = 24`. (A value of 6 appears
/// in some derivations of the total; the Monte Carlo oracle confirms 24.)
pub const GOE_EDGE_TERM_VARIANCE: f64 = 24.0;

/// The exact sampling law of `kappa_r`.
///
/// Let `D` be the maximum degree. Under the GOE, `kappa_r ~ chi2(D)/D`.
/// Under `W(G, d)`, conditioning on the hub's latent vector makes the edge
/// entries i.i.d. `N(0, |X|^2/d)`, so `kappa_r ~ (chi2(D)/D) * (chi2(d)/d)`
/// with independent factors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaRLaw {
    /// The maximum degree `D`.
    pub hub_degree: u64,
    /// Present for the Wishart law; `None` for the GOE law.
    pub wishart_d: Option<u64>,
}

impl KappaRLaw {
    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn variance(&self) -> f64 {
        let dd = self.hub_degree as f64;
        match self.wishart_d {
            None => 2.0 / dd,
            Some(d) => {
                let df = d as f64;
                2.0 / dd + 2.0 / df + 4.0 / (dd * df)
            }
        }
    }

    /// Draws one value from the law.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let chi_over_dof = |dof: u64, rng: &mut dyn rand::RngCore| -> f64 {
            let chi = rand_distr::ChiSquared::new(dof as f64).expect("positive dof");
            rand_distr::Distribution::sample(&chi, rng) / dof as f64
        };
        let base = chi_over_dof(self.hub_degree, rng);
        match self.wishart_d {
            None => base,
            Some(d) => base * chi_over_dof(d, rng),
        }
    }
}

/// The reference law of `kappa_r` on `G` under the given ensemble.
pub fn kappa_r_law(g: &Graph, ensemble: Ensemble) -> Result<KappaRLaw, StatError> {
    let (_, dmax) = g.max_degree_vertex().map_err(|_| StatError::EmptyGraph)?;
    if dmax == 0 {
        return Err(StatError::MaxDegreeZero);
    }
    let wishart_d = match ensemble {
        Ensemble::Goe => None,
        Ensemble::Wishart { d } => {
            if d == 0 {
                return Err(StatError::BadD);
            }
            Some(d)
        }
    };
    Ok(KappaRLaw {
        hub_degree: dmax as u64,
        wishart_d,
    })
}

/// How a single edge value enters a pair-term product.
#[derive(Debug, Clone, Copy)]
enum Term {
    /// `M`
    M,
    /// `M^2`
    M2,
    /// `M^2 - 1`
    Centered,
    /// `(M^2 - 1)^2`
    CenteredSq,
    /// `M^4 - 6M^2 + 3`
    He4,
    /// `(M^4 - 6M^2 + 3)^2`
    He4Sq,
}

impl Term {
    fn apply(self, x: f64) -> f64 {
        let x2 = x * x;
        match self {
            Term::M => x,
            Term::M2 => x2,
            Term::Centered => x2 - 1.0,
            Term::CenteredSq => (x2 - 1.0) * (x2 - 1.0),
            Term::He4 => x2 * x2 - 6.0 * x2 + 3.0,
            Term::He4Sq => {
                let h = x2 * x2 - 6.0 * x2 + 3.0;
                h * h
            }
        }
    }
}

/// One row of the pair-term table: a configuration of two overlapping
/// statistic terms, its defining product over a small latent graph, and the
/// exact Wishart expectation as a cubic polynomial in `1/d`.
pub struct PairShapeInfo {
    pub id: u8,
    /// The union shape of the two terms' supports.
    pub name: &'static str,
    /// Which statistic's second moment the shape enters.
    pub statistic: &'static str,
    /// Coefficients `[c0, c1, c2, c3]` of `c0 + c1/d + c2/d^2 + c3/d^3`.
    pub coeffs: [f64; 4],
    /// Latent vertex count of the defining product.
    vertices: u8,
    /// Factors `(u, v, transform)` over latent vertices numbered from 0.
    factors: &'static [(u8, u8, Term)],
}

static PAIR_SHAPES: [PairShapeInfo; 20] = [
    PairShapeInfo {
        id: 1,
        name: "triangle (squared term)",
        statistic: "kappa3",
        coeffs: [1.0, 10.0, 16.0, 0.0],
        vertices: 3,
        factors: &[(0, 1, Term::M2), (1, 2, Term::M2), (2, 0, Term::M2)],
    },
    PairShapeInfo {
        id: 2,
        name: "two triangles sharing an edge",
        statistic: "kappa3",
        coeffs: [0.0, 3.0, 6.0, 0.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::M2),
            (1, 2, Term::M),
            (2, 0, Term::M),
            (1, 3, Term::M),
            (3, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 3,
        name: "two triangles sharing a vertex",
        statistic: "kappa3",
        coeffs: [0.0, 1.0, 2.0, 0.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::M),
            (1, 2, Term::M),
            (2, 0, Term::M),
            (0, 3, Term::M),
            (3, 4, Term::M),
            (4, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 4,
        name: "4-cycle (squared term)",
        statistic: "kappa4 cycle part",
        coeffs: [1.0, 8.0, 32.0, 40.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::M2),
            (1, 2, Term::M2),
            (2, 3, Term::M2),
            (3, 0, Term::M2),
        ],
    },
    PairShapeInfo {
        id: 5,
        name: "two 4-cycles sharing a path (K23 union)",
        statistic: "kappa4 cycle part",
        coeffs: [0.0, 1.0, 10.0, 16.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::M2),
            (1, 2, Term::M2),
            (2, 3, Term::M),
            (3, 0, Term::M),
            (2, 4, Term::M),
            (4, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 6,
        name: "two 4-cycles sharing a diagonal pair (K24 union)",
        statistic: "kappa4 cycle part",
        coeffs: [0.0, 0.0, 3.0, 6.0],
        vertices: 6,
        factors: &[
            (0, 1, Term::M),
            (1, 2, Term::M),
            (2, 3, Term::M),
            (3, 0, Term::M),
            (0, 4, Term::M),
            (4, 2, Term::M),
            (2, 5, Term::M),
            (5, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 7,
        name: "two 4-cycles sharing an edge",
        statistic: "kappa4 cycle part",
        coeffs: [0.0, 0.0, 3.0, 6.0],
        vertices: 6,
        factors: &[
            (0, 1, Term::M2),
            (1, 2, Term::M),
            (2, 3, Term::M),
            (3, 0, Term::M),
            (1, 4, Term::M),
            (4, 5, Term::M),
            (5, 0, Term::M),
        ],
    },
    // Integrating out the two leaf vertices collapses this product to the
    // squared-triangle shape divided by d, so its expectation is
    // d^{-1}(1 + 10/d + 16/d^2) — first order 1/d, like the K23 union, not
    // 1/d^2 as a quick overlap count would suggest.
    PairShapeInfo {
        id: 8,
        name: "two 4-cycles sharing an edge and an opposite vertex",
        statistic: "kappa4 cycle part",
        coeffs: [0.0, 1.0, 10.0, 16.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::M2),
            (1, 2, Term::M),
            (2, 3, Term::M),
            (3, 0, Term::M),
            (1, 4, Term::M),
            (4, 2, Term::M),
            (2, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 9,
        name: "two 4-cycles sharing a vertex",
        statistic: "kappa4 cycle part",
        coeffs: [0.0, 0.0, 1.0, 2.0],
        vertices: 7,
        factors: &[
            (0, 1, Term::M),
            (1, 2, Term::M),
            (2, 3, Term::M),
            (3, 0, Term::M),
            (0, 4, Term::M),
            (4, 5, Term::M),
            (5, 6, Term::M),
            (6, 0, Term::M),
        ],
    },
    PairShapeInfo {
        id: 10,
        name: "wedge (squared term)",
        statistic: "kappa4 wedge part",
        coeffs: [4.0, 56.0, 300.0, 432.0],
        vertices: 3,
        factors: &[(0, 1, Term::CenteredSq), (1, 2, Term::CenteredSq)],
    },
    PairShapeInfo {
        id: 11,
        name: "two wedges sharing a center edge (K13 union)",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 4.0, 68.0, 144.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::CenteredSq),
            (1, 2, Term::Centered),
            (1, 3, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 12,
        name: "two wedges sharing an edge (triangle union)",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 20.0, 196.0, 336.0],
        vertices: 3,
        factors: &[
            (0, 1, Term::CenteredSq),
            (1, 2, Term::Centered),
            (0, 2, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 13,
        name: "two wedges sharing a center (K14 union)",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 12.0, 48.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::Centered),
            (1, 3, Term::Centered),
            (1, 4, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 14,
        name: "two wedges closing a 4-cycle",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 16.0, 40.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::Centered),
            (0, 3, Term::Centered),
            (3, 2, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 15,
        name: "wedge pair on a triangle with a pendant edge",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 24.0, 64.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::Centered),
            (0, 2, Term::Centered),
            (2, 3, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 16,
        name: "two wedges sharing one outer edge (3-path union)",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 40.0, 96.0],
        vertices: 4,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::CenteredSq),
            (2, 3, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 17,
        name: "wedge pair on a claw with a pendant edge",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 4.0, 16.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::Centered),
            (2, 3, Term::Centered),
            (2, 4, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 18,
        name: "two disjoint-center wedges (4-path union)",
        statistic: "kappa4 wedge part",
        coeffs: [0.0, 0.0, 4.0, 8.0],
        vertices: 5,
        factors: &[
            (0, 1, Term::Centered),
            (1, 2, Term::Centered),
            (2, 3, Term::Centered),
            (3, 4, Term::Centered),
        ],
    },
    PairShapeInfo {
        id: 19,
        name: "edge (squared term)",
        statistic: "kappa4 edge part",
        coeffs: [24.0, 432.0, 3180.0, 5040.0],
        vertices: 2,
        factors: &[(0, 1, Term::He4Sq)],
    },
    PairShapeInfo {
        id: 20,
        name: "two edge terms sharing a vertex",
        statistic: "kappa4 edge part",
        coeffs: [0.0, 0.0, 108.0, 432.0],
        vertices: 3,
        factors: &[(0, 1, Term::He4), (1, 2, Term::He4)],
    },
];

/// The full pair-term table.
pub fn pair_shapes() -> &'static [PairShapeInfo; 20] {
    &PAIR_SHAPES
}

fn shape_by_id(id: u8) -> Result<&'static PairShapeInfo, StatError> {
    PAIR_SHAPES
        .get(id.wrapping_sub(1) as usize)
        .ok_or(StatError::BadShape(id))
}

/// Exact Wishart expectation of pair shape `id` at latent dimension `d`.
pub fn pair_term_expectation(id: u8, d: u64) -> Result<f64, StatError> {
    if d == 0 {
        return Err(StatError::BadD);
    }
    let shape = shape_by_id(id)?;
    let x = 1.0 / d as f64;
    let [c0, c1, c2, c3] = shape.coeffs;
    Ok(c0 + x * (c1 + x * (c2 + x * c3)))
}

/// Monte Carlo estimate of pair shape `id`'s defining expectation: samples
/// the latent configuration directly and averages the product.
///
/// Deterministic at any thread count: trial `t` always uses the RNG stream
/// derived from `(base_seed, t)`, and partial sums merge in index order.
pub fn pair_term_monte_carlo(
    id: u8,
    d: u64,
    trials: u64,
    base_seed: u64,
) -> Result<McEstimate, StatError> {
    if d == 0 {
        return Err(StatError::BadD);
    }
    let shape = shape_by_id(id)?;
    if trials == 0 || trials > u32::MAX as u64 {
        return Err(StatError::BadTrials);
    }
    let k = shape.vertices as usize;
    let d_us = usize::try_from(d).expect("d fits usize");
    let scale = 1.0 / (d as f64).sqrt();

    let acc = chunked_mc(trials, |t| {
        let mut rng = seeding::trial_rng(base_seed, streams::PAIR, t);
        let x = sample_latent(d_us, k, &mut rng).expect("positive dims");
        let mut prod = 1.0;
        for &(u, v, term) in shape.factors {
            let mut dot = KahanSum::new();
            for (a, b) in x.col(u as usize).iter().zip(x.col(v as usize)) {
                dot.add(a * b);
            }
            prod *= term.apply(scale * dot.value());
        }
        prod
    });
    Ok(McEstimate::from_accumulator(&acc))
}

/// Runs `trials` evaluations of `f` (indexed by trial number) in fixed-size
/// chunks, parallel across chunks, merging chunk accumulators in index
/// order so the result is independent of thread count.
pub(crate) fn chunked_mc(trials: u64, f: impl Fn(u32) -> f64 + Sync) -> MomentAccumulator {
    const CHUNK: u64 = 4096;
    let n_chunks = trials.div_ceil(CHUNK);
    let partials: Vec<MomentAccumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let mut acc = MomentAccumulator::new();
            for t in lo..hi {
                acc.push(f(t as u32));
            }
            acc
        })
        .collect();
    let mut total = MomentAccumulator::new();
    for p in &partials {
        total.merge(p);
    }
    total
}

/// Closed-form first- and second-order trace/determinant moments of the
/// normalized Gram matrix `d^{-1} M`, `M = X^T X`, `X` a `d x k` standard
/// Gaussian matrix. Exact fields always hold; bound fields are `None` when
/// their precondition on `(k, d)` fails.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceMomentReport {
    pub k: u64,
    pub d: u64,
    /// `E[(Tr(d^{-1}M - I))^2] = 2k/d` (exact).
    pub e_tr_sq_centered: f64,
    /// `E[(Tr(d^{-1}M))^2] = k^2 + 2k/d` (exact).
    pub e_tr_sq: f64,
    /// `E[Tr((d^{-1}M - I)^2)] = (k^2 + k)/d` (exact).
    pub e_tr_delta_sq: f64,
    /// `Var[Tr((d^{-1}M - I)^2)] <= 56 k^2/d^2`; requires `d >= k`.
    pub var_tr_delta_sq_bound: Option<f64>,
    /// `E[det(d^{-1}M)^{-1}] <= e^k`; requires `d >= 2k + 2`.
    pub e_inv_det_bound: Option<f64>,
    /// `E[log^2 det(d^{-1}M)] <= 3k`; requires `d >= 2k + 2`.
    pub e_log2_det_bound: Option<f64>,
}

/// Predicted trace moments of `d^{-1} M` for `k` latent columns in
/// dimension `d`; see [`TraceMomentReport`] for the six quantities.
pub fn wishart_trace_moments(k: u64, d: u64) -> Result<TraceMomentReport, StatError> {
    if k == 0 {
        return Err(StatError::BadK);
    }
    if d == 0 {
        return Err(StatError::BadD);
    }
    let kf = k as f64;
    let df = d as f64;
    Ok(TraceMomentReport {
        k,
        d,
        e_tr_sq_centered: 2.0 * kf / df,
        e_tr_sq: kf * kf + 2.0 * kf / df,
        e_tr_delta_sq: (kf * kf + kf) / df,
        var_tr_delta_sq_bound: (d >= k).then_some(56.0 * kf * kf / (df * df)),
        e_inv_det_bound: (d >= 2 * k + 2).then(|| kf.exp()),
        e_log2_det_bound: (d >= 2 * k + 2).then_some(3.0 * kf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{masked_goe, masked_wishart};
    use crate::graphs::Graph;
    use crate::seeding;
    use approx::assert_relative_eq;

    fn square() -> Graph {
        Graph::from_parts(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()
    }

    #[test]
    fn plan_term_counts_match_census() {
        for g in [
            Graph::complete(6),
            Graph::complete_bipartite(3, 4),
            square(),
        ] {
            let plan = KappaPlan::new(&g);
            let c = census::census(&g);
            assert_eq!(plan.n_triangles() as u128, c.num_c3);
            assert_eq!(plan.n_cycles() as u128, c.num_c4);
            assert_eq!(plan.n_wedges() as u128, c.num_p2);
        }
    }

    #[test]
    fn kappa3_on_k3_is_entry_product() {
        let g = Graph::complete(3);
        let m = MaskedMatrix::from_values(&g, vec![2.0, 3.0, 5.0]).unwrap();
        assert_relative_eq!(kappa3(&m), 30.0);
    }

    #[test]
    fn kappa4_all_ones_hits_cycle_count() {
        // With every entry 1 the wedge part vanishes and each edge term is
        // 1 - 6 + 3 = -2.
        let g = Graph::complete(5);
        let c = census::census(&g);
        let m = MaskedMatrix::from_values(&g, vec![1.0; g.n_edges()]).unwrap();
        let k4 = kappa4(&m);
        assert_relative_eq!(k4.c4_part, c.num_c4 as f64);
        assert_relative_eq!(k4.p2_part, 0.0);
        assert_relative_eq!(k4.e_part, -2.0 * c.num_e as f64);
        assert_relative_eq!(k4.total, k4.c4_part + k4.p2_part + k4.e_part);
    }

    #[test]
    fn kappa4_all_zeros_on_square() {
        // Zero entries: cycle products vanish, each wedge gives 1, each edge
        // term gives 3.
        let g = square();
        let m = MaskedMatrix::from_values(&g, vec![0.0; 4]).unwrap();
        let k4 = kappa4(&m);
        assert_relative_eq!(k4.c4_part, 0.0);
        assert_relative_eq!(k4.p2_part, 4.0);
        assert_relative_eq!(k4.e_part, 12.0);
        assert_relative_eq!(k4.total, 16.0);
    }

    #[test]
    fn kappa_r_uses_smallest_max_degree_vertex() {
        // Star centered at 2 with an extra edge: max degree vertex is 2.
        let g = Graph::from_parts(4, vec![(0, 2), (1, 2), (2, 3), (0, 1)]).unwrap();
        let mut values = vec![0.0; g.n_edges()];
        values[g.edge_index(0, 2).unwrap()] = 2.0;
        values[g.edge_index(1, 2).unwrap()] = 1.0;
        values[g.edge_index(2, 3).unwrap()] = 3.0;
        values[g.edge_index(0, 1).unwrap()] = 100.0; // not at the hub
        let m = MaskedMatrix::from_values(&g, values).unwrap();
        assert_relative_eq!(kappa_r(&m).unwrap(), (4.0 + 1.0 + 9.0) / 3.0);
    }

    #[test]
    fn kappa_r_errors_without_edges() {
        let g = Graph::from_parts(3, vec![]).unwrap();
        let m = MaskedMatrix::from_values(&g, vec![]).unwrap();
        assert!(matches!(kappa_r(&m), Err(StatError::MaxDegreeZero)));
    }

    #[test]
    fn predictions_on_complete_graph() {
        let g = Graph::complete(5);
        let c = census::census(&g);
        let p = predicted_moments(&g, Ensemble::Goe, Statistic::Kappa3).unwrap();
        assert_eq!(p.mean, 0.0);
        assert_eq!(p.variance, c.num_c3 as f64);
        assert_eq!(p.variance_kind, VarianceKind::Exact);

        let p = predicted_moments(&g, Ensemble::Wishart { d: 4 }, Statistic::Kappa3).unwrap();
        assert_relative_eq!(p.mean, c.num_c3 as f64 / 2.0);
        assert_eq!(p.variance_kind, VarianceKind::UpperBound);
        assert_relative_eq!(
            p.variance,
            c.num_c3 as f64 + c.num_c3_2e as f64 / 4.0 + c.num_c3_2v as f64 / 16.0
        );

        let p = predicted_moments(&g, Ensemble::Goe, Statistic::Kappa4).unwrap();
        assert_relative_eq!(
            p.variance,
            c.num_c4 as f64 + 4.0 * c.num_p2 as f64 + 24.0 * c.num_e as f64
        );

        let p = predicted_moments(&g, Ensemble::Wishart { d: 10 }, Statistic::Kappa4).unwrap();
        assert_relative_eq!(
            p.mean,
            (c.num_c4 as f64 + 2.0 * c.num_p2 as f64 + 6.0 * c.num_e as f64) / 10.0
        );
    }

    #[test]
    fn component_predictions_sum_to_kappa4_mean() {
        let g = Graph::complete_bipartite(3, 5);
        let ens = Ensemble::Wishart { d: 7 };
        let parts = [Statistic::Kappa4C4, Statistic::Kappa4P2, Statistic::Kappa4E]
            .map(|s| predicted_moments(&g, ens, s).unwrap().mean);
        let total = predicted_moments(&g, ens, Statistic::Kappa4).unwrap().mean;
        assert_relative_eq!(parts.iter().sum::<f64>(), total, max_relative = 1e-12);
        // GOE component variances are exact and sum to the kappa4 variance
        // because distinct-part terms are uncorrelated.
        let gvars = [Statistic::Kappa4C4, Statistic::Kappa4P2, Statistic::Kappa4E]
            .map(|s| predicted_moments(&g, Ensemble::Goe, s).unwrap().variance);
        let gtotal = predicted_moments(&g, Ensemble::Goe, Statistic::Kappa4)
            .unwrap()
            .variance;
        assert_relative_eq!(gvars.iter().sum::<f64>(), gtotal, max_relative = 1e-12);
    }

    #[test]
    fn latent_entry_covariance_identity() {
        // For Delta = d^{-1} X^T X - I: E[Delta_ii^2] = 2/d,
        // E[Delta_ij^2] = 1/d (i != j), and distinct entry pairs are
        // uncorrelated.
        let d = 10usize;
        let mut acc = [(); 5].map(|_| MomentAccumulator::new());
        for t in 0..50_000u32 {
            let mut rng = seeding::trial_rng(77, streams::TRACE, t);
            let x = sample_latent(d, 3, &mut rng).unwrap();
            let dot = |a: usize, b: usize| -> f64 {
                x.col(a).iter().zip(x.col(b)).map(|(p, q)| p * q).sum::<f64>() / d as f64
            };
            let d11 = dot(0, 0) - 1.0;
            let d22 = dot(1, 1) - 1.0;
            let d12 = dot(0, 1);
            let d13 = dot(0, 2);
            acc[0].push(d11 * d11);
            acc[1].push(d12 * d12);
            acc[2].push(d11 * d22);
            acc[3].push(d12 * d13);
            acc[4].push(d11 * d12);
        }
        let refs = [2.0 / d as f64, 1.0 / d as f64, 0.0, 0.0, 0.0];
        for (a, r) in acc.iter().zip(refs) {
            let z = (a.mean() - r) / a.stderr_of_mean();
            assert!(z.abs() < 4.0, "covariance entry z = {z} vs reference {r}");
        }
    }

    #[test]
    fn kappa_r_star_variances_match_laws() {
        // Star with 200 leaves: GOE sample variance within 5% of 2/200;
        // Wishart at d=20 within 5% of 2/D + 2/d + 4/(Dd).
        let g = Graph::complete_bipartite(1, 200);
        let plan = KappaPlan::new(&g);
        let mut goe_acc = MomentAccumulator::new();
        for t in 0..20_000u32 {
            let mut rng = seeding::trial_rng(903, streams::GOE, t);
            let m = masked_goe(&g, &mut rng);
            goe_acc.push(plan.kappa_r(m.values()).unwrap());
        }
        let goe_ref = 2.0 / 200.0;
        assert!(
            (goe_acc.variance() / goe_ref - 1.0).abs() < 0.05,
            "goe variance ratio {}",
            goe_acc.variance() / goe_ref
        );
        let mut w_acc = MomentAccumulator::new();
        for t in 0..20_000u32 {
            let mut rng = seeding::trial_rng(903, streams::WISHART, t);
            let m = masked_wishart(&g, 20, &mut rng).unwrap();
            w_acc.push(plan.kappa_r(m.values()).unwrap());
        }
        let w_ref = 2.0 / 200.0 + 2.0 / 20.0 + 4.0 / (200.0 * 20.0);
        assert!(
            (w_acc.variance() / w_ref - 1.0).abs() < 0.05,
            "wishart variance ratio {}",
            w_acc.variance() / w_ref
        );
    }

    #[test]
    fn goe_kappa3_moments_match_monte_carlo() {
        let g = Graph::complete(5);
        let plan = KappaPlan::new(&g);
        let c = census::census(&g);
        let mut acc = MomentAccumulator::new();
        for t in 0..20_000u32 {
            let mut rng = seeding::trial_rng(900, streams::GOE, t);
            let m = masked_goe(&g, &mut rng);
            acc.push(plan.kappa3(m.values()));
        }
        let z_mean = acc.mean() / acc.stderr_of_mean();
        assert!(z_mean.abs() < 5.0, "mean z = {z_mean}");
        let var_ratio = acc.variance() / c.num_c3 as f64;
        assert!((var_ratio - 1.0).abs() < 0.1, "variance ratio {var_ratio}");
    }

    #[test]
    fn wishart_kappa3_mean_matches_monte_carlo() {
        let g = Graph::complete(5);
        let plan = KappaPlan::new(&g);
        let d = 9;
        let pred = predicted_moments(&g, Ensemble::Wishart { d }, Statistic::Kappa3).unwrap();
        let mut acc = MomentAccumulator::new();
        for t in 0..20_000u32 {
            let mut rng = seeding::trial_rng(901, streams::WISHART, t);
            let m = masked_wishart(&g, d as usize, &mut rng).unwrap();
            acc.push(plan.kappa3(m.values()));
        }
        let z = (acc.mean() - pred.mean) / acc.stderr_of_mean();
        assert!(z.abs() < 5.0, "mean z = {z}");
        // The bound (with constant 1) should dominate the observed variance
        // on this small dense mask.
        assert!(acc.variance() < 8.0 * pred.variance);
    }

    #[test]
    fn pair_term_polynomials_evaluate() {
        // Shape 3 at d: 1/d + 2/d^2.
        assert_relative_eq!(pair_term_expectation(3, 2).unwrap(), 1.0);
        // Shape 19 at d -> infinity tends to 24 = E[He4(g)^2].
        assert_relative_eq!(pair_term_expectation(19, 1_000_000_000).unwrap(), 24.0, epsilon = 1e-5);
        assert!(matches!(pair_term_expectation(0, 4), Err(StatError::BadShape(0))));
        assert!(matches!(pair_term_expectation(21, 4), Err(StatError::BadShape(21))));
        assert!(matches!(pair_term_expectation(3, 0), Err(StatError::BadD)));
    }

    #[test]
    fn pair_term_monte_carlo_matches_table_on_fast_shapes() {
        // Small-variance shapes at modest d and trials; |z| < 5 each.
        for (id, d, trials) in [(3u8, 8u64, 40_000u64), (12, 8, 40_000), (20, 8, 40_000)] {
            let mc = pair_term_monte_carlo(id, d, trials, 4242).unwrap();
            let exact = pair_term_expectation(id, d).unwrap();
            let z = mc.z_against(exact);
            assert!(z.abs() < 5.0, "shape {id}: mc {} vs exact {exact}, z = {z}", mc.mean);
        }
    }

    #[test]
    #[ignore = "heavy full-table oracle scan; run explicitly"]
    fn pair_term_table_full_oracle() {
        // Every table row, two dimensions, 4M trials each: the polynomial
        // must match the sampled latent configuration within 6 standard
        // errors. This is the ground-truth check for the whole table.
        for shape in pair_shapes() {
            for d in [6u64, 24] {
                let mc = pair_term_monte_carlo(shape.id, d, 4_000_000, 31_337).unwrap();
                let exact = pair_term_expectation(shape.id, d).unwrap();
                let z = mc.z_against(exact);
                assert!(
                    z.abs() < 6.0,
                    "shape {} ({}) at d={d}: mc {} +- {} vs exact {exact}, z = {z}",
                    shape.id,
                    shape.name,
                    mc.mean,
                    mc.stderr
                );
            }
        }
    }

    #[test]
    fn pair_term_monte_carlo_is_thread_count_independent() {
        let a = pair_term_monte_carlo(12, 4, 10_000, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| pair_term_monte_carlo(12, 4, 10_000, 7).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn kappa_r_law_variances() {
        let g = Graph::complete_bipartite(1, 6);
        let law = kappa_r_law(&g, Ensemble::Goe).unwrap();
        assert_eq!(law.hub_degree, 6);
        assert_relative_eq!(law.variance(), 2.0 / 6.0);
        let law = kappa_r_law(&g, Ensemble::Wishart { d: 12 }).unwrap();
        assert_relative_eq!(law.variance(), 2.0 / 6.0 + 2.0 / 12.0 + 4.0 / 72.0);
        let empty = Graph::from_parts(2, vec![]).unwrap();
        assert!(matches!(
            kappa_r_law(&empty, Ensemble::Goe),
            Err(StatError::MaxDegreeZero)
        ));
    }

    #[test]
    fn kappa_r_law_samples_match_stat_distribution() {
        // Compare sampled kappa_r on a star mask against the closed-form law
        // with a moment check (full KS runs in the verification suite).
        let g = Graph::complete_bipartite(1, 8);
        let plan = KappaPlan::new(&g);
        let d = 6usize;
        let mut stat_acc = MomentAccumulator::new();
        let mut law_acc = MomentAccumulator::new();
        let law = kappa_r_law(&g, Ensemble::Wishart { d: d as u64 }).unwrap();
        for t in 0..30_000u32 {
            let mut rng = seeding::trial_rng(902, streams::WISHART, t);
            let m = masked_wishart(&g, d, &mut rng).unwrap();
            stat_acc.push(plan.kappa_r(m.values()).unwrap());
            let mut rng = seeding::trial_rng(902, streams::LAW, t);
            law_acc.push(law.sample(&mut rng));
        }
        let z_mean = (stat_acc.mean() - 1.0) / stat_acc.stderr_of_mean();
        assert!(z_mean.abs() < 5.0);
        let z_law = (law_acc.mean() - 1.0) / law_acc.stderr_of_mean();
        assert!(z_law.abs() < 5.0);
        let vr = stat_acc.variance() / law.variance();
        assert!((vr - 1.0).abs() < 0.1, "variance ratio {vr}");
        let vl = law_acc.variance() / law.variance();
        assert!((vl - 1.0).abs() < 0.1, "law variance ratio {vl}");
    }

    #[test]
    fn trace_moment_report_values() {
        let r = wishart_trace_moments(3, 30).unwrap();
        assert_relative_eq!(r.e_tr_sq_centered, 0.2);
        assert_relative_eq!(r.e_tr_sq, 9.2);
        assert_relative_eq!(r.e_tr_delta_sq, 12.0 / 30.0);
        assert_relative_eq!(r.var_tr_delta_sq_bound.unwrap(), 56.0 * 9.0 / 900.0);
        assert_relative_eq!(r.e_inv_det_bound.unwrap(), 3.0f64.exp());
        assert_relative_eq!(r.e_log2_det_bound.unwrap(), 9.0);
        // (k=1, d=1): E[(Tr(M/d - I))^2] = 2.
        assert_relative_eq!(wishart_trace_moments(1, 1).unwrap().e_tr_sq_centered, 2.0);
        // d < 2k+2 leaves the determinant bounds absent; d < k drops the
        // variance bound too.
        let tight = wishart_trace_moments(3, 7).unwrap();
        assert!(tight.e_inv_det_bound.is_none());
        assert!(tight.e_log2_det_bound.is_none());
        assert!(tight.var_tr_delta_sq_bound.is_some());
        assert!(wishart_trace_moments(5, 4).unwrap().var_tr_delta_sq_bound.is_none());
        assert!(matches!(wishart_trace_moments(0, 5), Err(StatError::BadK)));
    }
}
