//! Experiment orchestration and report emission.
//!
//! Every replicate draws from its own [`RngStream`] keyed by `(seed, cell,
//! replicate)` and results are aggregated in replicate order, so a report
//! depends only on its configuration, never on the thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::combin::binomial;
use crate::couplings::{
    counterexample_coupling, counterexample_r, couple_er_monotone, coupon_extend_coupling,
    star_split_sample, union_er_coupling, CouponModel, Precedes,
};
use crate::error::{Error, Result};
use crate::graph::{is_subgraph, pair_count, Graph};
use crate::oracle::{count_vector_pmfs, er_exact_pmf, rig_exact_pmf, tv_exact};
use crate::properties::{count_triangles, evaluate_property, GraphStatistic, PropertySpec};
use crate::samplers::{
    sample_er, sample_iid_hypergraph, sample_rig_naive, sample_rig_stratified, RngStream,
};
use crate::stats::{
    binomial_lower_tail, binomial_pmf, binomial_upper_tail, chernoff_tail_bound, chi_square_gof,
    dominance_check, poisson_gof, wilson_ci, Side, TailDist,
};
use crate::thresholds::{
    coupling_amplifier_a, edge_prob_hat, p_bounds, star_constant_c, Mode, ModelParams,
    LEMMA9_CONSTANTS,
};
use crate::Project;

/// Default work budget, in expected edge operations.
pub const DEFAULT_BUDGET: f64 = 1e9;
/// Family-wise confidence level for interval-based verdicts.
pub const FAMILY_LEVEL: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TvConvergence,
    Squeeze,
    TrianglePoisson,
    CouplingChain,
    Counterexample,
    Lemma8,
    ChernoffAudit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TvConvergence => "tv_convergence",
            ExperimentKind::Squeeze => "squeeze",
            ExperimentKind::TrianglePoisson => "triangle_poisson",
            ExperimentKind::CouplingChain => "coupling_chain",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Lemma8 => "lemma8",
            ExperimentKind::ChernoffAudit => "chernoff_audit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// One experiment. Fields a kind does not use are ignored; missing ones fall
/// back to per-kind defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<Vec<f64>>,
    /// Kind-specific scale: `p` coefficient, triangle constant or fixed `m p²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<PropertySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n: None,
            m: None,
            alpha: None,
            p: None,
            p_grid: None,
            m_grid: None,
            n_grid: None,
            q: None,
            q_grid: None,
            c: None,
            k: None,
            reps: None,
            seed: 0,
            mode: None,
            property: None,
            budget: None,
            threads: None,
            format: None,
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Overlays the keys present in a TOML document onto `self`.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let overrides: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in overrides {
            base.insert(k, v);
        }
        base.try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// The configuration as echoed in reports: execution-only settings removed.
    pub fn echo(&self) -> Self {
        ExperimentConfig {
            threads: None,
            format: None,
            out: None,
            ..self.clone()
        }
    }

    fn reps_or(&self, default: u64) -> Result<u64> {
        let reps = self.reps.unwrap_or(default);
        if reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        Ok(reps)
    }

    fn require<T: Clone>(&self, value: &Option<T>, name: &str) -> Result<T> {
        value
            .clone()
            .ok_or_else(|| Error::Config(format!("{} needs `{name}`", self.kind)))
    }
}

fn non_empty<T>(grid: &[T], name: &str) -> Result<()> {
    if grid.is_empty() {
        Err(Error::Config(format!("`{name}` must not be empty")))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub rule: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(rule: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            rule: rule.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl Report {
    fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            kind: config.kind,
            config: config.echo(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            wall_clock: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, rule: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.rule == rule)
    }

    /// Value of `column` in every row.
    pub fn column(&self, column: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    fn warn_all(&mut self, ws: &[String]) {
        for w in ws {
            self.warn(w.clone());
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders a report. CSV carries the configuration and verdicts as leading
/// `#` lines, then one row per grid cell.
pub fn render_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# kind: {}\n", report.kind));
            out.push_str(&format!(
                "# config: {}\n",
                serde_json::to_string(&report.config)?
            ));
            out.push_str(&format!("# seed: {}\n", report.config.seed));
            for v in &report.verdicts {
                out.push_str(&format!(
                    "# verdict: {} {} ({})\n",
                    v.rule,
                    if v.passed { "PASS" } else { "FAIL" },
                    v.detail
                ));
            }
            for w in &report.warnings {
                out.push_str(&format!("# warning: {w}\n"));
            }
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(&report.columns)?;
            for row in &report.rows {
                wtr.write_record(row.iter().map(cell_text))?;
            }
            let body = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
            Ok(out)
        }
    }
}

pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    fs::write(path, render_report(report, format)?)?;
    Ok(())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs `f(rep, rng)` for every replicate of grid cell `cell`, in parallel,
/// returning results in replicate order.
fn replicates<T, F>(
    pool: &rayon::ThreadPool,
    seed: u64,
    cell: u32,
    reps: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| f(&mut RngStream::for_replicate(seed, cell, rep as u32).rng()))
            .collect()
    })
}

fn check_budget(projected: f64, cfg: &ExperimentConfig) -> Result<()> {
    let budget = cfg.budget.unwrap_or(DEFAULT_BUDGET);
    if projected > budget {
        Err(Error::GuardExceeded { projected, budget })
    } else {
        Ok(())
    }
}

/// Expected work of one `G(n, p)` draw.
fn er_cost(n: u64, p: f64) -> f64 {
    let pairs = pair_count(n as usize) as f64;
    if p < 0.25 {
        pairs * p + 1.0
    } else {
        pairs
    }
}

/// Expected work of one stratified `G(n, m, p)` draw and its projection.
fn rig_cost(n: u64, m: u64, p: f64) -> f64 {
    m as f64 * pair_count(n as usize) as f64 * p * p + n as f64
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let start = Instant::now();
    let pool = pool(cfg.threads)?;
    let mut report = match cfg.kind {
        ExperimentKind::TvConvergence => run_tv_convergence(cfg)?,
        ExperimentKind::Squeeze => run_squeeze(cfg, &pool)?,
        ExperimentKind::TrianglePoisson => run_triangle_poisson(cfg, &pool)?,
        ExperimentKind::CouplingChain => run_coupling_chain(cfg, &pool)?,
        ExperimentKind::Counterexample => run_counterexample(cfg, &pool)?,
        ExperimentKind::Lemma8 => run_lemma8(cfg)?,
        ExperimentKind::ChernoffAudit => run_chernoff_audit(cfg)?,
    };
    report.wall_clock = start.elapsed();
    Ok(report)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:.6e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn run_tv_convergence(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.n.unwrap_or(4);
    let mode = cfg.mode.unwrap_or(Mode::Lemma9);
    let grid = match (&cfg.m_grid, cfg.m) {
        (Some(g), _) => g.clone(),
        (None, Some(m)) => vec![m],
        (None, None) => vec![100, 1000, 10_000],
    };
    non_empty(&grid, "m_grid")?;
    let coef = cfg.c.unwrap_or(0.1);
    let mut report = Report::new(cfg, &["m", "p", "p_hat", "tv", "p_minus", "p_plus"]);
    let mut tvs = Vec::new();
    for &m in &grid {
        let p = cfg.p.unwrap_or(coef / (n as f64 * (m as f64).cbrt()));
        let params = ModelParams::checked(n, m, p, None)?;
        let thr = p_bounds(&params, mode)?;
        let rig = rig_exact_pmf(n as usize, m, p)?;
        let er = er_exact_pmf(n as usize, thr.p_hat)?;
        let tv = tv_exact(&rig, &er)?;
        tvs.push(tv);
        report.warn_all(&thr.warnings);
        report.push(vec![
            json!(m),
            json!(p),
            json!(thr.p_hat),
            json!(tv),
            json!(thr.p_minus),
            json!(thr.p_plus),
        ]);
    }
    if tvs.len() > 1 {
        report.verdicts.push(Verdict::new(
            "tv_strictly_decreasing",
            strictly_decreasing(&tvs),
            format!("tv = [{}]", fmt_list(&tvs)),
        ));
        let last = *tvs.last().expect("non-empty");
        report.verdicts.push(Verdict::new(
            "tv_below_0.05_at_largest_m",
            last < 0.05,
            format!("tv = {last:.6e}"),
        ));
    }
    Ok(report)
}

/// `p_c = sqrt((ln n + c) / (n m))` for `c = -3..=3`: `m p²` sweeps the
/// connectivity window of `G(n, p̂)`.
pub fn squeeze_grid(n: u64, m: u64) -> Vec<f64> {
    let ln_n = (n as f64).ln();
    (-3..=3)
        .map(|c| ((ln_n + c as f64) / (n as f64 * m as f64)).sqrt())
        .collect()
}

fn run_squeeze(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Report> {
    let n = cfg.require(&cfg.n, "n")?;
    let reps = cfg.reps_or(2000)?;
    let mode = cfg.mode.unwrap_or(Mode::Thm4);
    let property = cfg.property.clone().unwrap_or(PropertySpec::Connected);
    property.validate()?;
    let base = match (cfg.m, cfg.alpha) {
        (Some(m), alpha) => ModelParams::checked(n, m, 0.0, alpha)?,
        (None, Some(alpha)) => ModelParams::with_alpha(n, alpha, 0.0)?,
        (None, None) => return Err(Error::Config("squeeze needs `m` or `alpha`".into())),
    };
    let grid = match (&cfg.p_grid, cfg.p) {
        (Some(g), _) => g.clone(),
        (None, Some(p)) => vec![p],
        (None, None) => squeeze_grid(n, base.m()),
    };
    non_empty(&grid, "p_grid")?;

    let cells: Vec<_> = grid
        .iter()
        .map(|&p| p_bounds(&base.with_p(p)?, mode))
        .collect::<Result<_>>()?;
    let projected: f64 = cells
        .iter()
        .map(|t| {
            reps as f64
                * (rig_cost(n, base.m(), t.params.p())
                    + er_cost(n, t.p_minus)
                    + er_cost(n, t.p_plus))
        })
        .sum();
    check_budget(projected, cfg)?;

    let level = 1.0 - (1.0 - FAMILY_LEVEL) / (4 * cells.len()) as f64;
    let mut report = Report::new(
        cfg,
        &[
            "cell",
            "p",
            "p_hat",
            "p_minus",
            "p_plus",
            "prob_lo",
            "prob_lo_ci_lo",
            "prob_lo_ci_hi",
            "prob_mid",
            "prob_mid_ci_lo",
            "prob_mid_ci_hi",
            "prob_hi",
            "prob_hi_ci_lo",
            "prob_hi_ci_hi",
            "lower_ok",
            "upper_ok",
        ],
    );
    let (mut lower_all, mut upper_all) = (true, true);
    for (i, thr) in cells.iter().enumerate() {
        report.warn_all(&thr.warnings);
        let p = thr.params.p();
        let hits = replicates(pool, cfg.seed, i as u32, reps, |rng| {
            let lo = sample_er(n as usize, thr.p_minus, rng)?;
            let mid = sample_rig_stratified(n as usize, base.m(), p, rng, None)?.project();
            let hi = sample_er(n as usize, thr.p_plus, rng)?;
            Ok([
                evaluate_property(&lo, &property)?,
                evaluate_property(&mid, &property)?,
                evaluate_property(&hi, &property)?,
            ])
        })?;
        let mut counts = [0u64; 3];
        for h in &hits {
            for j in 0..3 {
                counts[j] += u64::from(h[j]);
            }
        }
        let cis: Vec<(f64, f64)> = counts
            .iter()
            .map(|&c| wilson_ci(c, reps, level))
            .collect::<Result<_>>()?;
        let lower_ok = cis[0].0 <= cis[1].1;
        let upper_ok = cis[1].0 <= cis[2].1;
        lower_all &= lower_ok;
        upper_all &= upper_ok;
        let est = |j: usize| counts[j] as f64 / reps as f64;
        report.push(vec![
            json!(i),
            json!(p),
            json!(thr.p_hat),
            json!(thr.p_minus),
            json!(thr.p_plus),
            json!(est(0)),
            json!(cis[0].0),
            json!(cis[0].1),
            json!(est(1)),
            json!(cis[1].0),
            json!(cis[1].1),
            json!(est(2)),
            json!(cis[2].0),
            json!(cis[2].1),
            json!(lower_ok),
            json!(upper_ok),
        ]);
    }
    report.verdicts.push(Verdict::new(
        "squeeze_lower",
        lower_all,
        format!("P(G(p_minus) in A) <= P(RIG in A) up to Wilson slack at level {level:.6}"),
    ));
    report.verdicts.push(Verdict::new(
        "squeeze_upper",
        upper_all,
        format!("P(RIG in A) <= P(G(p_plus) in A) up to Wilson slack at level {level:.6}"),
    ));
    Ok(report)
}

fn histogram(values: &[u64]) -> Vec<u64> {
    let top = values.iter().copied().max().unwrap_or(0) as usize;
    let mut h = vec![0u64; top + 1];
    for &v in values {
        h[v as usize] += 1;
    }
    h
}

fn mean(values: &[u64]) -> f64 {
    values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64
}

fn run_triangle_poisson(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Report> {
    let n = cfg.n.unwrap_or(200);
    let c = cfg.c.unwrap_or(1.0);
    let reps = cfg.reps_or(10_000)?;
    let mode = cfg.mode.unwrap_or(Mode::Lemma9);
    let m = n
        .checked_pow(3)
        .ok_or_else(|| Error::Config("n^3 overflows".into()))?;
    let p = c / (n as f64 * n as f64);
    let params = ModelParams::checked(n, m, p, Some(3.0))?;
    let thr = p_bounds(&params, mode)?;
    let p_hat = thr.p_hat;
    check_budget(reps as f64 * (rig_cost(n, m, p) + er_cost(n, p_hat)), cfg)?;

    let counts = replicates(pool, cfg.seed, 0, reps, |rng| {
        let rig = sample_rig_stratified(n as usize, m, p, rng, None)?.project();
        let er = sample_er(n as usize, p_hat, rng)?;
        Ok((count_triangles(&rig), count_triangles(&er)))
    })?;
    let rig: Vec<u64> = counts.iter().map(|c| c.0).collect();
    let er: Vec<u64> = counts.iter().map(|c| c.1).collect();

    // the triangle indicator of a fixed triple depends only on its own memberships
    let triples = binomial(n, 3).unwrap_or(u64::MAX) as f64;
    let rig_exact = triples * rig_exact_pmf(3, m, p)?.mass(&0b111);
    let er_exact = triples * p_hat.powi(3);

    let mut report = Report::new(
        cfg,
        &[
            "model",
            "target_mean",
            "exact_mean",
            "relative_bias",
            "sample_mean",
            "std_error",
            "z",
            "gof_p_value",
        ],
    );
    report.warn_all(&thr.warnings);
    let targets = [
        ("rig", (c.powi(3) + c.powi(6)) / 6.0, rig_exact, &rig),
        ("er", c.powi(6) / 6.0, er_exact, &er),
    ];
    for (name, target, exact, sample) in targets {
        let sm = mean(sample);
        let se = (target / reps as f64).sqrt();
        let z = (sm - target) / se;
        let gof = poisson_gof(&histogram(sample), target)?;
        report.push(vec![
            json!(name),
            json!(target),
            json!(exact),
            json!((exact - target) / target),
            json!(sm),
            json!(se),
            json!(z),
            json!(gof),
        ]);
        report.verdicts.push(Verdict::new(
            format!("{name}_poisson_fit"),
            gof > 0.01,
            format!("chi-square p = {gof:.4}"),
        ));
        report.verdicts.push(Verdict::new(
            format!("{name}_mean_within_3_sigma"),
            z.abs() <= 3.0,
            format!("mean {sm:.5} vs target {target:.5} (z = {z:.3})"),
        ));
    }
    Ok(report)
}

fn run_coupling_chain(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Report> {
    let n = cfg.n.unwrap_or(30);
    let reps = cfg.reps_or(100_000)?;
    let q_grid = cfg
        .q_grid
        .clone()
        .or(cfg.q.map(|q| vec![q]))
        .unwrap_or_else(|| vec![0.02, 0.05]);
    non_empty(&q_grid, "q_grid")?;
    for &q in &q_grid {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!("q = {q} must lie in (0, 1)")));
        }
    }
    let nu = n as usize;
    let pairs = pair_count(nu) as f64;
    check_budget(
        reps as f64 * q_grid.len() as f64 * (10.0 * pairs + 2.0 * n as f64),
        cfg,
    )?;

    let mut report = Report::new(
        cfg,
        &[
            "check",
            "q",
            "statistic",
            "reps",
            "violations",
            "thresholds",
            "detail",
        ],
    );
    let mut cell = 0u32;
    for &q in &q_grid {
        let amp = coupling_amplifier_a(n, q)?;
        let big = (amp * q).min(1.0);

        // construction-forced containments
        let monotone = [q * q * q, q, big];
        let union_list = [q, q * q, q * q * q];
        let n2 = binomial(n, 2).unwrap_or(u64::MAX);
        let n3 = binomial(n, 3).unwrap_or(u64::MAX);
        let coupon = CouponModel::new(vec![n2, n3], vec![0.5 / n2 as f64, 0.25 / n3 as f64])?;
        let draws = ((n2 as f64 * q).round() as u64).max(1);

        type Check<'a> = (
            &'a str,
            Box<dyn Fn(&mut ChaCha8Rng) -> Result<bool> + Sync + 'a>,
        );
        let checks: Vec<Check> = vec![
            (
                "er_monotone",
                Box::new(|rng| {
                    let gs = couple_er_monotone(nu, &monotone, rng)?;
                    Ok(gs
                        .windows(2)
                        .all(|w| is_subgraph(&w[0], &w[1]).unwrap_or(false)))
                }),
            ),
            (
                "union_er",
                Box::new(|rng| {
                    let (u, b) = union_er_coupling(nu, &union_list, rng)?;
                    is_subgraph(&u, &b)
                }),
            ),
            (
                "coupon_extend",
                Box::new(|rng| {
                    let (x, y) = coupon_extend_coupling(&coupon, draws, 2 * draws, rng)?;
                    Ok(x.precedes(&y))
                }),
            ),
            (
                "counterexample",
                Box::new(|rng| {
                    let s = counterexample_coupling(nu, q, rng)?;
                    is_subgraph(&s.g3, &s.h3.project())
                }),
            ),
        ];
        for (name, check) in &checks {
            let ok = replicates(pool, cfg.seed, cell, reps, |rng| check(rng))?;
            cell += 1;
            let violations = ok.iter().filter(|&&b| !b).count();
            report.push(vec![
                json!(name),
                json!(q),
                json!("containment"),
                json!(reps),
                json!(violations),
                Value::Null,
                json!(""),
            ]);
            report.verdicts.push(Verdict::new(
                format!("containment:{name}:q={q}"),
                violations == 0,
                format!("{violations} of {reps} replicates violate containment"),
            ));
        }

        // domination of monotone statistics
        let c_star = star_constant_c(n, q)?;
        let stats = [GraphStatistic::EdgeCount, GraphStatistic::MaxDegree];
        if c_star * q <= 1.0 {
            let pairs_hs = replicates(pool, cfg.seed, cell, reps, |rng| {
                star_split_sample(nu, q, c_star, rng)
            })?;
            cell += 1;
            let (hs, ts): (Vec<Graph>, Vec<Graph>) = pairs_hs.into_iter().unzip();
            dominance_rows(
                &mut report,
                "star",
                q,
                reps,
                &hs,
                &ts,
                &stats,
                format!("C = {c_star}"),
            )?;
        } else {
            report.warn(format!(
                "star check skipped at q = {q}: C q = {} > 1",
                c_star * q
            ));
        }
        let q3 = q * q * q;
        let cq = LEMMA9_CONSTANTS[0] * q;
        let lemma_p = if cq < 1.0 {
            (coupling_amplifier_a(n, cq)? * cq).min(1.0)
        } else {
            1.0
        };
        let pairs_gh = replicates(pool, cfg.seed, cell, reps, |rng| {
            Ok((
                sample_iid_hypergraph(nu, 3, q3, rng)?.project(),
                sample_er(nu, lemma_p, rng)?,
            ))
        })?;
        cell += 1;
        let (gh, er): (Vec<Graph>, Vec<Graph>) = pairs_gh.into_iter().unzip();
        dominance_rows(
            &mut report,
            "projection_k3",
            q,
            reps,
            &gh,
            &er,
            &stats,
            format!("p_er = {lemma_p}"),
        )?;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn dominance_rows(
    report: &mut Report,
    name: &str,
    q: f64,
    reps: u64,
    a: &[Graph],
    b: &[Graph],
    stats: &[GraphStatistic],
    detail: String,
) -> Result<()> {
    for &s in stats {
        let d = dominance_check(a, b, |g| s.eval(g), FAMILY_LEVEL)?;
        report.push(vec![
            json!(name),
            json!(q),
            json!(s.name()),
            json!(reps),
            json!(d.violations.len()),
            json!(d.thresholds),
            json!(detail),
        ]);
        report.verdicts.push(Verdict::new(
            format!("dominance:{name}:{}:q={q}", s.name()),
            d.passed(),
            format!(
                "{} violations over {} thresholds",
                d.violations.len(),
                d.thresholds
            ),
        ));
    }
    Ok(())
}

fn run_counterexample(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<Report> {
    let q = cfg.q.unwrap_or(0.1);
    let reps = cfg.reps_or(10_000)?;
    let n_grid = cfg
        .n_grid
        .clone()
        .or(cfg.n.map(|n| vec![n]))
        .unwrap_or_else(|| vec![50, 100, 200]);
    non_empty(&n_grid, "n_grid")?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!("q = {q} must lie in (0, 1)")));
    }
    let projected: f64 = n_grid
        .iter()
        .map(|&n| {
            reps as f64 * (binomial(n, 3).unwrap_or(u64::MAX) as f64 * q.powi(3) * 4.0 + 10.0)
        })
        .sum();
    check_budget(projected, cfg)?;

    let r = counterexample_r(q);
    let mut report = Report::new(
        cfg,
        &[
            "n",
            "q",
            "r",
            "r_prime",
            "r_prime_over_q",
            "n_q2_over_3",
            "ratio",
            "mean_edges",
            "expected_edges",
            "std_error",
            "gof_p_value",
            "containment_violations",
        ],
    );
    let (mut contain_all, mut fit_all, mut ratio_all) = (true, true, true);
    for (i, &n) in n_grid.iter().enumerate() {
        if n < 3 {
            return Err(Error::Config("counterexample needs n >= 3".into()));
        }
        let outs = replicates(pool, cfg.seed, i as u32, reps, |rng| {
            let s = counterexample_coupling(n as usize, q, rng)?;
            Ok((
                s.g3.edge_count() as u64,
                is_subgraph(&s.g3, &s.h3.project())?,
                s.r_prime,
            ))
        })?;
        let r_prime = outs[0].2;
        let edges: Vec<u64> = outs.iter().map(|o| o.0).collect();
        let violations = outs.iter().filter(|o| !o.1).count();
        let pairs = pair_count(n as usize) as u64;
        let probs: Vec<f64> = (0..=pairs)
            .map(|k| binomial_pmf(pairs, r_prime, k))
            .collect();
        let mut hist = histogram(&edges);
        hist.resize(probs.len(), 0);
        let gof = chi_square_gof(&hist, &probs)?;
        let expected = pairs as f64 * r_prime;
        let se = (expected * (1.0 - r_prime) / reps as f64).sqrt();
        let scale = n as f64 * q * q / 3.0;
        let ratio = (r_prime / q) / scale;
        contain_all &= violations == 0;
        fit_all &= gof > 0.01;
        ratio_all &= (ratio - 1.0).abs() <= 0.1;
        report.push(vec![
            json!(n),
            json!(q),
            json!(r),
            json!(r_prime),
            json!(r_prime / q),
            json!(scale),
            json!(ratio),
            json!(mean(&edges)),
            json!(expected),
            json!(se),
            json!(gof),
            json!(violations),
        ]);
    }
    report.verdicts.push(Verdict::new(
        "containment",
        contain_all,
        "G3 is a subgraph of the projection of H3",
    ));
    report.verdicts.push(Verdict::new(
        "g3_edges_binomial",
        fit_all,
        "edge count of G3 fits Bin(C(n,2), r') with chi-square p > 0.01",
    ));
    report.verdicts.push(Verdict::new(
        "r_prime_over_q_tracks_nq2",
        ratio_all,
        "r'/q within 10% of n q^2 / 3",
    ));
    Ok(report)
}

fn run_lemma8(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.n.unwrap_or(4);
    let k = cfg.k.unwrap_or(3);
    let mp2 = cfg.c.unwrap_or(1.0);
    let grid = cfg
        .m_grid
        .clone()
        .unwrap_or_else(|| vec![10_000, 100_000, 1_000_000, 10_000_000]);
    non_empty(&grid, "m_grid")?;
    let mut report = Report::new(cfg, &["m", "p", "n_p", "tv"]);
    let mut tvs = Vec::new();
    for &m in &grid {
        let p = (mp2 / m as f64).sqrt();
        if p > 1.0 {
            return Err(Error::Config(format!(
                "m p^2 = {mp2} forces p > 1 at m = {m}"
            )));
        }
        if n as f64 * p >= 0.1 {
            report.warn(format!("m = {m}: n p = {:.4} is not small", n as f64 * p));
        }
        let pmfs = count_vector_pmfs(n as usize, m, p, k)?;
        let tv = tv_exact(&pmfs.rig, &pmfs.independent)?;
        tvs.push(tv);
        report.push(vec![json!(m), json!(p), json!(n as f64 * p), json!(tv)]);
    }
    if tvs.len() > 1 {
        report.verdicts.push(Verdict::new(
            "count_vector_tv_strictly_decreasing",
            strictly_decreasing(&tvs),
            format!("tv = [{}]", fmt_list(&tvs)),
        ));
    }
    Ok(report)
}

/// Means `0.5 · 1000^(i/19)` and shifts `t = (j/19) · (μ + 6√μ)`, 20 of each,
/// on `Bin(max(1000, ⌈20μ⌉), μ/trials)`.
pub fn chernoff_grid() -> Vec<(f64, f64, u64)> {
    let mut out = Vec::with_capacity(400);
    for i in 0..20 {
        let mu = 0.5 * 1000f64.powf(i as f64 / 19.0);
        let trials = ((20.0 * mu).ceil() as u64).max(1000);
        for j in 0..20 {
            let t = j as f64 / 19.0 * (mu + 6.0 * mu.sqrt());
            out.push((mu, t, trials));
        }
    }
    out
}

fn run_chernoff_audit(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::new(
        cfg,
        &[
            "mean",
            "t",
            "side",
            "trials",
            "exact_tail",
            "bound",
            "holds",
        ],
    );
    let mut failures = 0usize;
    let mut checked = 0usize;
    for (mu, t, trials) in chernoff_grid() {
        let p = mu / trials as f64;
        for side in [Side::Lower, Side::Upper] {
            let bound = chernoff_tail_bound(TailDist::Binomial, mu, t, side)?.bound;
            let exact = match side {
                Side::Lower => {
                    let x = mu - t;
                    if x < 0.0 {
                        0.0
                    } else {
                        binomial_lower_tail(trials, p, x.floor() as u64)
                    }
                }
                Side::Upper => binomial_upper_tail(trials, p, (mu + t).ceil() as u64),
            };
            let holds = exact <= bound * (1.0 + 1e-12);
            checked += 1;
            failures += usize::from(!holds);
            report.push(vec![
                json!(mu),
                json!(t),
                json!(if side == Side::Lower {
                    "lower"
                } else {
                    "upper"
                }),
                json!(trials),
                json!(exact),
                json!(bound),
                json!(holds),
            ]);
        }
    }
    report.verdicts.push(Verdict::new(
        "chernoff_bounds_dominate_exact_tails",
        failures == 0,
        format!("{failures} of {checked} grid points exceed their bound"),
    ));
    Ok(report)
}

/// Models accepted by [`sample_text`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleModel {
    Er,
    Rig,
    RigNaive,
    Hypergraph,
}

impl FromStr for SampleModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "er" => Ok(SampleModel::Er),
            "rig" => Ok(SampleModel::Rig),
            "rig-naive" => Ok(SampleModel::RigNaive),
            "hypergraph" => Ok(SampleModel::Hypergraph),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Draws one graph and renders it in the canonical text form behind a
/// `#` provenance header. Hypergraphs are emitted as their projection.
pub fn sample_text(model: SampleModel, cfg: &ExperimentConfig, stream: u64) -> Result<String> {
    let n = cfg.require(&cfg.n, "n")?;
    let mut rng = RngStream::new(cfg.seed, stream).rng();
    let (header, g) = match model {
        SampleModel::Er => {
            let p = cfg.require(&cfg.p, "p")?;
            (
                format!("model=er n={n} p={p}"),
                sample_er(n as usize, p, &mut rng)?,
            )
        }
        SampleModel::Rig | SampleModel::RigNaive => {
            let p = cfg.require(&cfg.p, "p")?;
            let params = match (cfg.m, cfg.alpha) {
                (Some(m), alpha) => ModelParams::checked(n, m, p, alpha)?,
                (None, Some(alpha)) => ModelParams::with_alpha(n, alpha, p)?,
                (None, None) => {
                    return Err(Error::Config(
                        "sampling G(n, m, p) needs `m` or `alpha`".into(),
                    ))
                }
            };
            let m = params.m();
            let g = if model == SampleModel::Rig {
                sample_rig_stratified(n as usize, m, p, &mut rng, None)?.project()
            } else {
                sample_rig_naive(n as usize, m, p, &mut rng)?.project()
            };
            let name = if model == SampleModel::Rig {
                "rig"
            } else {
                "rig-naive"
            };
            (
                format!(
                    "model={name} n={n} m={m} p={p} p_hat={}",
                    edge_prob_hat(&params)
                ),
                g,
            )
        }
        SampleModel::Hypergraph => {
            let q = cfg.require(&cfg.q, "q")?;
            let k = cfg.k.unwrap_or(3);
            (
                format!("model=hypergraph n={n} k={k} q={q}"),
                sample_iid_hypergraph(n as usize, k, q, &mut rng)?.project(),
            )
        }
    };
    Ok(format!(
        "# {header} seed={} stream={stream}\n{}",
        cfg.seed,
        g.to_text()
    ))
}

/// Exact `d_TV(G(n, m, p), G(n, p̂))` with the derived thresholds, as a flat record.
pub fn tv_exact_record(
    n: u64,
    m: u64,
    p: f64,
    mode: Mode,
) -> Result<serde_json::Map<String, Value>> {
    let params = ModelParams::checked(n, m, p, None)?;
    let thr = p_bounds(&params, mode)?;
    let tv = tv_exact(
        &rig_exact_pmf(n as usize, m, p)?,
        &er_exact_pmf(n as usize, thr.p_hat)?,
    )?;
    let mut rec = thr.to_record();
    rec.insert("tv".into(), json!(tv));
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            reps: Some(200),
            seed: 7,
            ..ExperimentConfig::new(kind)
        }
    }

    #[test]
    fn squeeze_at_p_zero() {
        let cfg = ExperimentConfig {
            n: Some(20),
            m: Some(1000),
            p_grid: Some(vec![0.0]),
            reps: Some(1),
            ..ExperimentConfig::new(ExperimentKind::Squeeze)
        };
        let r = run_experiment(&cfg).unwrap();
        for col in ["prob_lo", "prob_mid", "prob_hi"] {
            assert_eq!(r.column(col).unwrap()[0], &json!(0.0));
        }
        assert!(r.passed());
    }

    #[test]
    fn squeeze_schema() {
        let cfg = ExperimentConfig {
            n: Some(60),
            alpha: Some(3.5),
            ..small(ExperimentKind::Squeeze)
        };
        let r = run_experiment(&cfg).unwrap();
        for col in [
            "p",
            "p_minus",
            "p_plus",
            "prob_lo",
            "prob_mid",
            "prob_hi",
            "prob_mid_ci_lo",
            "prob_hi_ci_hi",
        ] {
            assert!(r.columns.iter().any(|c| c == col), "{col}");
        }
        assert_eq!(r.rows.len(), 7);
    }

    #[test]
    fn triangle_targets() {
        let cfg = ExperimentConfig {
            n: Some(200),
            ..small(ExperimentKind::TrianglePoisson)
        };
        let r = run_experiment(&cfg).unwrap();
        let targets = r.column("target_mean").unwrap();
        assert!((targets[0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((targets[1].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_is_a_config_error() {
        let cfg = ExperimentConfig {
            m_grid: Some(vec![]),
            ..small(ExperimentKind::Lemma8)
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        let cfg = small(ExperimentKind::Squeeze);
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_report_renders_header_only() {
        let cfg = ExperimentConfig::new(ExperimentKind::Lemma8);
        let r = Report::new(&cfg, &["m", "p", "n_p", "tv"]);
        let text = render_report(&r, Format::Csv).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["m,p,n_p,tv"]);
    }

    #[test]
    fn guard_refuses_oversized_runs() {
        let cfg = ExperimentConfig {
            n: Some(2000),
            alpha: Some(4.0),
            reps: Some(1_000_000),
            ..ExperimentConfig::new(ExperimentKind::Squeeze)
        };
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn toml_overlay_wins() {
        let base = ExperimentConfig {
            n: Some(10),
            seed: 1,
            ..ExperimentConfig::new(ExperimentKind::Counterexample)
        };
        let merged = base.overlay_toml("n = 12\nq = 0.2\n").unwrap();
        assert_eq!(merged.n, Some(12));
        assert_eq!(merged.q, Some(0.2));
        assert_eq!(merged.seed, 1);
        assert!(base.overlay_toml("bogus = 1").is_err());
        let parsed =
            ExperimentConfig::from_toml("kind = \"lemma8\"\nm_grid = [10, 20]\nmode = \"thm4\"\n")
                .unwrap();
        assert_eq!(parsed.kind, ExperimentKind::Lemma8);
        assert_eq!(parsed.mode, Some(Mode::Thm4));
    }

    #[test]
    fn sample_text_has_provenance() {
        let cfg = ExperimentConfig {
            n: Some(8),
            m: Some(20),
            p: Some(0.2),
            seed: 3,
            ..ExperimentConfig::new(ExperimentKind::Squeeze)
        };
        let t = sample_text(SampleModel::Rig, &cfg, 0).unwrap();
        assert!(t.starts_with("# model=rig n=8 m=20 p=0.2"));
        let g = Graph::from_text(&t).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(t, sample_text(SampleModel::Rig, &cfg, 0).unwrap());
    }

    #[test]
    fn tv_record_fields() {
        let rec = tv_exact_record(4, 100, 0.01, Mode::Lemma9).unwrap();
        assert!(rec["tv"].as_f64().unwrap() >= 0.0);
        assert!(rec.contains_key("p_hat") && rec.contains_key("warnings"));
    }
}
