//! `wml`: mask-graph census, kappa statistics, Monte Carlo moment checks,
//! bundled verification suites, and phase-diagram sweeps from one binary.
//!
//! Exit codes: 0 success, 1 verification/runtime failure, 2 usage error.
//! Identical command lines (including the seed) produce byte-identical
//! output files at any `--threads` setting.

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use wml_core::seeding::{self, streams};
use wml_core::{
    census, kappa_r, masked_goe, phase_sweep, predicted_moments, sample_wishart_auto, Ensemble,
    ExperimentError, Graph, GraphSpec, KappaPlan, MeanKind, MomentAccumulator, Statistic,
    SweepConfig, SweepFamily, SweepRow, TestKind, VarianceKind,
};

/// CLI failure: usage errors exit 2, runtime/verification failures exit 1.
pub enum AppError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Run(e)
    }
}

pub fn usage(msg: impl std::fmt::Display) -> AppError {
    AppError::Usage(msg.to_string())
}

#[derive(Parser)]
#[command(
    name = "wml",
    version,
    about = "Masked Wishart vs masked GOE: subgraph census, kappa statistics, moment checks, verification suites, and phase sweeps"
)]
struct Cli {
    /// Mask graph spec: complete:n=8 | kbip:n=4,m=6 | er:n=50,p=0.3 | biper:n=12,m=12,p=0.5.
    #[arg(long, global = true)]
    graph: Option<String>,
    /// Matrix ensemble to sample.
    #[arg(long, global = true, value_enum)]
    ensemble: Option<EnsembleArg>,
    /// Latent dimension of the Wishart ensemble.
    #[arg(long, global = true)]
    d: Option<u64>,
    /// Monte Carlo trials (per hypothesis where applicable).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Base RNG seed; falls back to the WML_SEED env var, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; csv applies to sweep only.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (default: all cores). Execution-only: excluded from the
    /// metadata echo so identical runs are byte-identical at any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Goe,
    Wishart,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Count the distinguishing subgraphs of a mask graph.
    Census,
    /// Evaluate kappa3, kappa4, and kappa_r on one sampled matrix.
    Kappa,
    /// Monte Carlo moments of the kappa statistics against closed-form predictions.
    Moments {
        /// Restrict the report to one statistic
        /// (kappa3 | kappa4 | kappa4_c4 | kappa4_p2 | kappa4_e).
        #[arg(long)]
        statistic: Option<String>,
    },
    /// Run a bundled verification suite; exits 1 if any check fails.
    Verify {
        /// One of: tables, appendixA, bartlett, kappa_laws.
        #[arg(long)]
        suite: String,
    },
    /// Estimate test error over a (p, d) grid and emit phase-diagram CSV rows.
    Sweep {
        /// Mask family: er | biper | kbip | complete.
        #[arg(long)]
        family: String,
        /// Vertices (left side for bipartite families).
        #[arg(long)]
        n: u32,
        /// Right side size; required for bipartite families.
        #[arg(long)]
        m: Option<u32>,
        /// Comma-separated edge probabilities; required for er/biper.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        /// Comma-separated latent dimensions.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        d_grid: Vec<u64>,
        /// Distinguishing test: deg3 | deg4 | maxdeg.
        #[arg(long)]
        test: String,
        /// Also write a companion gnuplot script next to --out.
        #[arg(long)]
        emit_gnuplot: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let seed = effective_seed(cli.seed)?;

    match &cli.command {
        Command::Census => {
            require_json(cli.format)?;
            let spec = parse_graph(&cli.graph)?;
            let g = build_graph(&spec, seed)?;
            let payload = json!({
                "meta": meta_value(seed),
                "graph": spec.to_string(),
                "census": census(&g).to_json(),
            });
            emit(&cli.out, &to_pretty(&payload))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Kappa => {
            require_json(cli.format)?;
            let spec = parse_graph(&cli.graph)?;
            let g = build_graph(&spec, seed)?;
            let ens = ensemble_from_args(cli.ensemble, cli.d)?;
            let mut rng = seeding::trial_rng(seed, ensemble_stream(ens), 0);
            let m = match ens {
                Ensemble::Goe => masked_goe(&g, &mut rng),
                Ensemble::Wishart { d } => sample_wishart_auto(&g, d, &mut rng),
            };
            let breakdown = wml_core::kappa4(&m);
            let payload = json!({
                "meta": meta_value(seed),
                "graph": spec.to_string(),
                "ensemble": ens.to_string(),
                "kappa3": wml_core::kappa3(&m),
                "kappa4": breakdown,
                "kappa_r": kappa_r(&m).ok(),
            });
            emit(&cli.out, &to_pretty(&payload))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Moments { statistic } => {
            require_json(cli.format)?;
            let spec = parse_graph(&cli.graph)?;
            let g = build_graph(&spec, seed)?;
            let ens = ensemble_from_args(cli.ensemble, cli.d)?;
            let trials = checked_trials(cli.trials.unwrap_or(10_000))?;
            let stats: Vec<Statistic> = match statistic {
                Some(s) => vec![Statistic::from_str(s).map_err(usage)?],
                None => Statistic::ALL.to_vec(),
            };
            let plan = KappaPlan::new(&g);
            let accs = kappa_moment_accumulators(&g, &plan, ens, trials, seed);
            let mut entries = Vec::with_capacity(stats.len());
            for st in stats {
                entries.push(moment_entry(&g, ens, st, &accs)?);
            }
            let notes: Vec<&str> = match ens {
                Ensemble::Goe => vec![EDGE_TERM_NOTE],
                Ensemble::Wishart { .. } => vec![],
            };
            let payload = json!({
                "meta": meta_value(seed),
                "graph": spec.to_string(),
                "ensemble": ens.to_string(),
                "moments": entries,
                "notes": notes,
            });
            emit(&cli.out, &to_pretty(&payload))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            require_json(cli.format)?;
            let trials = cli.trials.unwrap_or(100_000);
            if trials < 1000 {
                return Err(usage("verify requires --trials >= 1000"));
            }
            let trials = checked_trials(trials)?;
            let report = verify::run_suite(suite, trials, seed)?;
            let payload = json!({ "meta": meta_value(seed), "report": report });
            emit(&cli.out, &to_pretty(&payload))?;
            Ok(if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Sweep {
            family,
            n,
            m,
            p_grid,
            d_grid,
            test,
            emit_gnuplot,
        } => {
            if cli.format == Some(FormatArg::Json) {
                return Err(usage("sweep emits csv; --format json is not supported here"));
            }
            let family = SweepFamily::from_str(family).map_err(usage)?;
            let test = TestKind::from_str(test).map_err(usage)?;
            let trials = checked_trials(cli.trials.unwrap_or(200))?;
            let p_grid = match p_grid {
                Some(v) if !v.is_empty() => v.clone(),
                Some(_) => return Err(usage("--p-grid is empty")),
                None => match family {
                    SweepFamily::Kbip | SweepFamily::Complete => vec![1.0],
                    SweepFamily::Er | SweepFamily::Biper => {
                        return Err(usage(format!("--p-grid is required for family {family}")))
                    }
                },
            };
            let config = SweepConfig {
                family,
                n: *n,
                m: *m,
                p_grid,
                d_grid: d_grid.clone(),
                test,
                trials,
                base_seed: seed,
            };
            let rows = phase_sweep(&config).map_err(|e| match e {
                ExperimentError::Stat(_) => AppError::Run(anyhow::anyhow!(e)),
                other => usage(other),
            })?;
            let csv = sweep_csv(&rows, seed);
            if *emit_gnuplot {
                let out = cli.out.as_ref().ok_or_else(|| {
                    usage("--emit-gnuplot needs --out so the script can reference the csv file")
                })?;
                let gp_path = out.with_extension("gp");
                let csv_name = out
                    .file_name()
                    .ok_or_else(|| usage("--out must name a file"))?
                    .to_string_lossy()
                    .into_owned();
                std::fs::write(&gp_path, gnuplot_script(&csv_name, &rows))
                    .with_context(|| format!("writing {}", gp_path.display()))?;
            }
            emit(&cli.out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Seed precedence: `--seed`, then `WML_SEED`, then 0.
fn effective_seed(flag: Option<u64>) -> Result<u64, AppError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("WML_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("WML_SEED must be an unsigned 64-bit integer, got `{v}`"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(usage("WML_SEED must be valid unicode"))
        }
    }
}

fn parse_graph(flag: &Option<String>) -> Result<GraphSpec, AppError> {
    let s = flag
        .as_deref()
        .ok_or_else(|| usage("--graph is required for this subcommand"))?;
    GraphSpec::from_str(s).map_err(usage)
}

fn build_graph(spec: &GraphSpec, seed: u64) -> Result<Graph, AppError> {
    spec.build(seed).map_err(usage)
}

fn ensemble_from_args(arg: Option<EnsembleArg>, d: Option<u64>) -> Result<Ensemble, AppError> {
    match arg {
        None => Err(usage("--ensemble is required for this subcommand")),
        Some(EnsembleArg::Goe) => {
            if d.is_some() {
                return Err(usage("--d applies to the wishart ensemble only"));
            }
            Ok(Ensemble::Goe)
        }
        Some(EnsembleArg::Wishart) => {
            let d = d.ok_or_else(|| usage("the wishart ensemble requires --d"))?;
            if d == 0 {
                return Err(usage("--d must be at least 1"));
            }
            Ok(Ensemble::Wishart { d })
        }
    }
}

fn ensemble_stream(ens: Ensemble) -> u32 {
    match ens {
        Ensemble::Goe => streams::GOE,
        Ensemble::Wishart { .. } => streams::WISHART,
    }
}

fn checked_trials(trials: u64) -> Result<u64, AppError> {
    if trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    if trials > u32::MAX as u64 {
        return Err(usage("--trials must fit in 32 bits"));
    }
    Ok(trials)
}

fn require_json(format: Option<FormatArg>) -> Result<(), AppError> {
    if format == Some(FormatArg::Csv) {
        return Err(usage("--format csv applies to sweep only; this subcommand emits json"));
    }
    Ok(())
}

/// The arguments echoed into every report; `--threads` is execution-only and
/// excluded so reruns at other thread counts stay byte-identical.
fn echo_args() -> Vec<String> {
    let mut out = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--threads" {
            args.next();
            continue;
        }
        if a.starts_with("--threads=") {
            continue;
        }
        out.push(a);
    }
    out
}

fn meta_value(seed: u64) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "args": echo_args(),
        "seed": seed,
    })
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json report serializes");
    s.push('\n');
    s
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

const EDGE_TERM_NOTE: &str = "kappa4 edge-term variance constant is 24 = E[He4(g)^2], fixed by \
     the single-edge Monte Carlo oracle; a value of 6 appears in some derivations and is \
     recorded here for comparison";

/// Accumulates the five kappa statistics over seeded trials; chunked so the
/// merge order (and hence every bit) is independent of thread count.
fn kappa_moment_accumulators(
    g: &Graph,
    plan: &KappaPlan,
    ens: Ensemble,
    trials: u64,
    seed: u64,
) -> [MomentAccumulator; 5] {
    const CHUNK: u64 = 512;
    let stream = ensemble_stream(ens);
    let n_chunks = trials.div_ceil(CHUNK);
    let partials: Vec<[MomentAccumulator; 5]> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let mut accs = [MomentAccumulator::new(); 5];
            for t in lo..hi {
                let mut rng = seeding::trial_rng(seed, stream, t as u32);
                let m = match ens {
                    Ensemble::Goe => masked_goe(g, &mut rng),
                    Ensemble::Wishart { d } => sample_wishart_auto(g, d, &mut rng),
                };
                let v = m.values();
                accs[0].push(plan.kappa3(v));
                let b = plan.kappa4(v);
                accs[1].push(b.total);
                accs[2].push(b.c4_part);
                accs[3].push(b.p2_part);
                accs[4].push(b.e_part);
            }
            accs
        })
        .collect();
    let mut accs = [MomentAccumulator::new(); 5];
    for part in &partials {
        for (acc, p) in accs.iter_mut().zip(part) {
            acc.merge(p);
        }
    }
    accs
}

fn stat_index(s: Statistic) -> usize {
    match s {
        Statistic::Kappa3 => 0,
        Statistic::Kappa4 => 1,
        Statistic::Kappa4C4 => 2,
        Statistic::Kappa4P2 => 3,
        Statistic::Kappa4E => 4,
    }
}

fn moment_entry(
    g: &Graph,
    ens: Ensemble,
    st: Statistic,
    accs: &[MomentAccumulator; 5],
) -> Result<Value, AppError> {
    let pred = predicted_moments(g, ens, st).map_err(|e| AppError::Run(anyhow::anyhow!(e)))?;
    let acc = &accs[stat_index(st)];
    let (emp_mean, emp_var, emp_se) = (acc.mean(), acc.variance(), acc.stderr_of_mean());
    let z_mean = if emp_se > 0.0 {
        (emp_mean - pred.mean) / emp_se
    } else if emp_mean == pred.mean {
        0.0
    } else {
        f64::INFINITY
    };
    let var_ratio = (pred.variance > 0.0).then(|| emp_var / pred.variance);
    let mean_kind = match pred.mean_kind {
        MeanKind::Exact => "exact",
        MeanKind::LowerBound => "lower_bound",
    };
    let var_kind = match pred.variance_kind {
        VarianceKind::Exact => "exact",
        VarianceKind::UpperBound => "upper_bound",
    };
    Ok(json!({
        "statistic": st.to_string(),
        "ensemble": ens.to_string(),
        "predicted": {
            "mean": pred.mean,
            "var": pred.variance,
            "kinds": { "mean": mean_kind, "var": var_kind },
        },
        "empirical": { "mean": emp_mean, "var": emp_var, "stderr": emp_se },
        "n_trials": acc.count(),
        "z_scores": { "mean": z_mean },
        "var_ratio": var_ratio,
    }))
}

/// Six significant digits; NaN prints as `nan` (inapplicable sweep cells).
fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.5e}")
    }
}

fn sweep_csv(rows: &[SweepRow], seed: u64) -> String {
    let mut out = String::new();
    out.push_str(&format!("# wml v{}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# args: {}\n", echo_args().join(" ")));
    out.push_str(&format!("# seed: {seed}\n"));
    out.push_str(
        "family,n,m,p,d,test,type1,type2,tv_lower,stderr1,stderr2,trials,seed,theory_threshold\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.n,
            r.m.map(|v| v.to_string()).unwrap_or_default(),
            fmt_sig(r.p),
            r.d,
            r.test,
            fmt_sig(r.type1),
            fmt_sig(r.type2),
            fmt_sig(r.tv_lower),
            fmt_sig(r.stderr1),
            fmt_sig(r.stderr2),
            r.trials,
            r.seed,
            fmt_sig(r.theory_threshold),
        ));
    }
    out
}

/// One tv_lower-vs-d series per p value; series are selected by comparing
/// column 4 against the same literal the CSV printed, so they match exactly.
fn gnuplot_script(csv_name: &str, rows: &[SweepRow]) -> String {
    let mut ps: Vec<f64> = Vec::new();
    for r in rows {
        if !ps.iter().any(|&q| q.to_bits() == r.p.to_bits()) {
            ps.push(r.p);
        }
    }
    let mut s = String::new();
    s.push_str(&format!("# companion plot for {csv_name}\n"));
    s.push_str(&format!("# generated by wml v{}\n", env!("CARGO_PKG_VERSION")));
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside right\n");
    s.push_str("set logscale x\n");
    s.push_str("set xlabel 'latent dimension d'\n");
    s.push_str("set ylabel 'total variation lower bound'\n");
    s.push_str("set yrange [-0.05:1.05]\n");
    s.push_str("plot \\\n");
    for (i, &p) in ps.iter().enumerate() {
        let lit = fmt_sig(p);
        let tail = if i + 1 == ps.len() { "\n" } else { ", \\\n" };
        s.push_str(&format!(
            "  '{csv_name}' skip 1 using 5:($4 == {lit} ? $9 : 1/0) with linespoints title 'p = {lit}'{tail}"
        ));
    }
    s
}
