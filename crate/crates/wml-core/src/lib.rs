//! Sampling and analysis of masked Wishart and masked GOE random matrices.
//!
//! A mask graph `G` selects which entries of a random symmetric matrix are
//! observed. The masked Wishart ensemble `W(G, d)` reveals the off-diagonal
//! entries of a normalized sample covariance of `d`-dimensional Gaussian
//! data along the edges of `G`; the masked GOE `M(G)` reveals independent
//! standard Gaussians in the same positions. This crate samples both
//! ensembles, counts the small subgraphs of `G` that govern how
//! distinguishable they are, evaluates polynomial distinguishing statistics
//! and their decision tests, and runs the Monte Carlo experiments that check
//! the closed-form moment identities and locate the phase transition.

pub mod census;
pub mod ensembles;
pub mod experiments;
pub mod graphs;
pub mod numeric;
pub mod seeding;
pub mod statistics;

pub use census::{
    brute_force_count, census, count, oriented_count, OrientedPattern, Pattern, PlainPattern,
    SubgraphCensus,
};
pub use ensembles::{
    bartlett_decompose, gaussian_kl, masked_goe, masked_wishart, masked_wishart_bartlett,
    sample_latent, BartlettDecomposition, EnsembleError, LatentMatrix, MaskedMatrix,
};
pub use experiments::{
    bartlett_path, bip_threshold, convergence_report, deg3_test, deg4_test, er_threshold,
    estimate_test_error, maxdeg_test, phase_sweep, sample_wishart_auto, ErrorEstimate,
    ExperimentError, HypothesisRatio, HypothesisReport, SweepConfig, SweepFamily, SweepRow,
    TestKind, TestVerdict, Verdict,
};
pub use graphs::{Graph, GraphError, GraphSpec, Orientation};
pub use numeric::{
    ks_critical_value, ks_statistic, KahanSum, McEstimate, MomentAccumulator, NumericError,
    SymMatrix,
};
pub use statistics::{
    kappa3, kappa4, kappa_r, kappa_r_law, pair_shapes, pair_term_expectation,
    pair_term_monte_carlo, predicted_moments, wishart_trace_moments, Ensemble, Kappa4Breakdown,
    KappaPlan, KappaRLaw, MeanKind, MomentPrediction, PairShapeInfo, StatError, Statistic,
    TraceMomentReport, VarianceKind, GOE_EDGE_TERM_VARIANCE,
};
