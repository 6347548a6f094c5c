//! Bundled verification suites: the pair-term expectation tables, the
//! Wishart trace-moment identities and bounds, the Bartlett coefficient
//! laws, and the kappa_r sampling laws.
//!
//! Exact identities pass when |z| <= 5; bounds pass when the empirical
//! value does not exceed the bound by more than 5 standard errors.

use rayon::prelude::*;
use serde::Serialize;
use wml_core::ensembles::{bartlett_decompose, sample_latent};
use wml_core::numeric::{ks_critical_value, ks_statistic, KahanSum, MomentAccumulator, SymMatrix};
use wml_core::seeding::{self, streams};
use wml_core::{
    kappa_r_law, masked_goe, pair_term_expectation, pair_term_monte_carlo, sample_wishart_auto,
    Ensemble, Graph, KappaPlan,
};

use crate::{usage, AppError};

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Exact,
    Bound,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub kind: RowKind,
    pub predicted: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub z: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<VerifyRow>,
    pub all_pass: bool,
    pub notes: Vec<String>,
}

pub fn run_suite(name: &str, trials: u64, seed: u64) -> Result<VerifyReport, AppError> {
    let (rows, notes) = match name {
        "tables" => (
            suite_tables(trials, seed),
            vec![
                "shape 19's leading coefficient 24 = E[He4(g)^2] fixes the kappa4 edge-term \
                 variance constant; a value of 6 appears in some derivations and is superseded \
                 by this check"
                    .to_string(),
            ],
        ),
        "appendixA" => (suite_appendix_a(trials, seed), vec![]),
        "bartlett" => (suite_bartlett(trials, seed), vec![]),
        "kappa_laws" => (suite_kappa_laws(trials, seed), vec![]),
        other => {
            return Err(usage(format!(
                "unknown suite `{other}`; expected one of tables, appendixA, bartlett, kappa_laws"
            )))
        }
    };
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        suite: name.to_string(),
        trials,
        seed,
        rows,
        all_pass,
        notes,
    })
}

fn exact_row(name: impl Into<String>, predicted: f64, empirical: f64, stderr: f64) -> VerifyRow {
    let z = if stderr > 0.0 {
        (empirical - predicted) / stderr
    } else if empirical == predicted {
        0.0
    } else {
        f64::INFINITY
    };
    VerifyRow {
        name: name.into(),
        kind: RowKind::Exact,
        predicted,
        empirical,
        stderr,
        z: Some(z),
        pass: z.abs() <= 5.0,
    }
}

fn bound_row(name: impl Into<String>, bound: f64, empirical: f64, stderr: f64) -> VerifyRow {
    VerifyRow {
        name: name.into(),
        kind: RowKind::Bound,
        predicted: bound,
        empirical,
        stderr,
        z: None,
        pass: empirical <= bound + 5.0 * stderr,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

/// Mean, unbiased variance, and 4th central moment of a sample.
fn mean_var_m4(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mut sum = KahanSum::new();
    for &x in xs {
        sum.add(x);
    }
    let mean = sum.value() / n;
    let mut m2 = KahanSum::new();
    let mut m4 = KahanSum::new();
    for &x in xs {
        let d2 = (x - mean) * (x - mean);
        m2.add(d2);
        m4.add(d2 * d2);
    }
    (mean, m2.value() / (n - 1.0), m4.value() / n)
}

/// Asymptotic standard error of a sample variance.
fn variance_stderr(var: f64, m4: f64, n: usize) -> f64 {
    ((m4 - var * var).max(0.0) / n as f64).sqrt()
}

/// All 20 pairwise-product expectations at d = 20 against their closed
/// forms, each by direct latent Monte Carlo.
fn suite_tables(trials: u64, seed: u64) -> Vec<VerifyRow> {
    const D: u64 = 20;
    (1u8..=20)
        .map(|id| {
            let shape_seed = seeding::derive(seed, streams::VERIFY, id as u32);
            let mc = pair_term_monte_carlo(id, D, trials, shape_seed).expect("valid shape id");
            let predicted = pair_term_expectation(id, D).expect("valid shape id");
            exact_row(format!("shape_{id:02}_d{D}"), predicted, mc.mean, mc.stderr)
        })
        .collect()
}

/// Trace moments of the unmasked k-column Wishart matrix M = X^T X:
/// exact identities (a)-(c) and absolute bounds (d)-(f), at
/// (k, d) = (3, 30) and (6, 60).
fn suite_appendix_a(trials: u64, seed: u64) -> Vec<VerifyRow> {
    let mut rows = Vec::new();
    for (cfg, &(k, d)) in [(3usize, 30usize), (6, 60)].iter().enumerate() {
        let mut rng = seeding::trial_rng(seed, streams::VERIFY, 100 + cfg as u32);
        let df = d as f64;
        let kf = k as f64;
        let mut acc_t1_sq = MomentAccumulator::new();
        let mut acc_t2_sq = MomentAccumulator::new();
        let mut acc_inv_det = MomentAccumulator::new();
        let mut acc_log2_det = MomentAccumulator::new();
        let mut t3_samples = Vec::with_capacity(trials as usize);
        for _ in 0..trials {
            let x = sample_latent(d, k, &mut rng).expect("valid dimensions");
            let mut gram = vec![vec![0.0f64; k]; k];
            for i in 0..k {
                for j in i..k {
                    let v = dot(x.col(i), x.col(j)) / df;
                    gram[i][j] = v;
                    gram[j][i] = v;
                }
            }
            let mut t1 = KahanSum::new();
            let mut t2 = KahanSum::new();
            let mut t3 = KahanSum::new();
            for i in 0..k {
                t1.add(gram[i][i] - 1.0);
                t2.add(gram[i][i]);
                for j in 0..k {
                    let delta = gram[i][j] - if i == j { 1.0 } else { 0.0 };
                    t3.add(delta * delta);
                }
            }
            acc_t1_sq.push(t1.value() * t1.value());
            acc_t2_sq.push(t2.value() * t2.value());
            t3_samples.push(t3.value());
            let sym = SymMatrix::from_rows(&gram).expect("symmetric by construction");
            let log_det = sym
                .cholesky()
                .expect("Wishart Gram matrix is positive definite")
                .log_det();
            acc_inv_det.push((-log_det).exp());
            acc_log2_det.push(log_det * log_det);
        }
        let tag = format!("k{k}_d{d}");
        rows.push(exact_row(
            format!("a_tr_dev_sq_{tag}"),
            2.0 * kf / df,
            acc_t1_sq.mean(),
            acc_t1_sq.stderr_of_mean(),
        ));
        rows.push(exact_row(
            format!("b_tr_sq_{tag}"),
            kf * kf + 2.0 * kf / df,
            acc_t2_sq.mean(),
            acc_t2_sq.stderr_of_mean(),
        ));
        let (t3_mean, t3_var, t3_m4) = mean_var_m4(&t3_samples);
        let t3_se = (t3_var / trials as f64).sqrt();
        rows.push(exact_row(
            format!("c_frobenius_sq_{tag}"),
            (kf * kf + kf) / df,
            t3_mean,
            t3_se,
        ));
        rows.push(bound_row(
            format!("d_var_frobenius_sq_{tag}"),
            56.0 * kf * kf / (df * df),
            t3_var,
            variance_stderr(t3_var, t3_m4, t3_samples.len()),
        ));
        rows.push(bound_row(
            format!("e_mean_inv_det_{tag}"),
            kf.exp(),
            acc_inv_det.mean(),
            acc_inv_det.stderr_of_mean(),
        ));
        rows.push(bound_row(
            format!("f_mean_log2_det_{tag}"),
            3.0 * kf,
            acc_log2_det.mean(),
            acc_log2_det.stderr_of_mean(),
        ));
    }
    rows
}

/// Bartlett coefficient laws at d = 30, k = 5: diagonal squares are
/// chi-squared with d - i degrees of freedom (0-based row i), off-diagonals
/// are standard normal, and X reconstructs from U W^T on every draw.
fn suite_bartlett(trials: u64, seed: u64) -> Vec<VerifyRow> {
    const D: usize = 30;
    const K: usize = 5;
    let mut rng = seeding::trial_rng(seed, streams::VERIFY, 200);
    let mut diag_acc = [MomentAccumulator::new(); K];
    let mut offdiag = Vec::with_capacity(trials as usize * K * (K - 1) / 2);
    let mut max_rel_err = 0.0f64;
    for _ in 0..trials {
        let x = sample_latent(D, K, &mut rng).expect("valid dimensions");
        let b = bartlett_decompose(&x).expect("full-rank latent matrix");
        for i in 0..K {
            diag_acc[i].push(b.w(i, i) * b.w(i, i));
            for j in 0..i {
                offdiag.push(b.w(i, j));
            }
        }
        let mut err_sq = KahanSum::new();
        let mut norm_sq = KahanSum::new();
        for c in 0..K {
            let col = x.col(c);
            for t in 0..D {
                let mut rebuilt = KahanSum::new();
                for j in 0..=c {
                    rebuilt.add(b.u_col(j)[t] * b.w(c, j));
                }
                let e = col[t] - rebuilt.value();
                err_sq.add(e * e);
                norm_sq.add(col[t] * col[t]);
            }
        }
        max_rel_err = max_rel_err.max((err_sq.value() / norm_sq.value()).sqrt());
    }
    let mut rows = Vec::new();
    for (i, acc) in diag_acc.iter().enumerate() {
        rows.push(exact_row(
            format!("w_{r}{r}_sq_mean", r = i + 1),
            (D - i) as f64,
            acc.mean(),
            acc.stderr_of_mean(),
        ));
    }
    let (od_mean, od_var, od_m4) = mean_var_m4(&offdiag);
    rows.push(exact_row(
        "w_offdiag_mean",
        0.0,
        od_mean,
        (od_var / offdiag.len() as f64).sqrt(),
    ));
    rows.push(exact_row(
        "w_offdiag_var",
        1.0,
        od_var,
        variance_stderr(od_var, od_m4, offdiag.len()),
    ));
    rows.push(bound_row(
        "reconstruction_rel_error_max",
        1e-8,
        max_rel_err,
        0.0,
    ));
    rows
}

/// kappa_r on the star K_{1,100} at d = 30 against its closed-form law for
/// both ensembles: two-sample KS below the 1% critical value, plus mean and
/// variance checks.
fn suite_kappa_laws(trials: u64, seed: u64) -> Vec<VerifyRow> {
    const D: u64 = 30;
    let g = Graph::complete_bipartite(1, 100);
    let plan = KappaPlan::new(&g);
    let mut rows = Vec::new();
    for (idx, (label, ens)) in [("goe", Ensemble::Goe), ("wishart", Ensemble::Wishart { d: D })]
        .into_iter()
        .enumerate()
    {
        let stream = match ens {
            Ensemble::Goe => streams::GOE,
            Ensemble::Wishart { .. } => streams::WISHART,
        };
        let ens_draws: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeding::trial_rng(seed, stream, t as u32);
                let m = match ens {
                    Ensemble::Goe => masked_goe(&g, &mut rng),
                    Ensemble::Wishart { d } => sample_wishart_auto(&g, d, &mut rng),
                };
                plan.kappa_r(m.values()).expect("star has positive degree")
            })
            .collect();
        let law = kappa_r_law(&g, ens).expect("star has positive degree");
        let law_base = seeding::derive(seed, streams::LAW, idx as u32);
        let law_draws: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeding::trial_rng(law_base, streams::LAW, t as u32);
                law.sample(&mut rng)
            })
            .collect();
        let ks = ks_statistic(&ens_draws, &law_draws);
        let critical = ks_critical_value(trials as usize, trials as usize, 0.01);
        rows.push(VerifyRow {
            name: format!("{label}_ks_vs_law"),
            kind: RowKind::Bound,
            predicted: critical,
            empirical: ks,
            stderr: 0.0,
            z: None,
            pass: ks < critical,
        });
        let (mean, var, m4) = mean_var_m4(&ens_draws);
        rows.push(exact_row(
            format!("{label}_kappa_r_mean"),
            law.mean(),
            mean,
            (var / trials as f64).sqrt(),
        ));
        rows.push(exact_row(
            format!("{label}_kappa_r_var"),
            law.variance(),
            var,
            variance_stderr(var, m4, ens_draws.len()),
        ));
    }
    rows
}
