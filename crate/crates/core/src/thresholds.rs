//! Closed-form quantities relating `G(n, m, p)` to graphs with independent edges.
//!
//! Everything is evaluated in log space: `m` may be as large as `~10^14` while
//! `p` is tiny, so `m p^k (1-p)^(n-k)` is formed as `exp(ln m + k ln p + (n-k) ln(1-p))`
//! and `1 - exp(-x)` as `-expm1(-x)`.
//!
//! The amplifier `a_n(q)` and the star constant `C(q)` are defined by asymptotic
//! case tables. At finite `n` the cases are replaced by a max-envelope over all
//! branches, each branch evaluated on a fixed numeric version of its regime (see
//! [`coupling_amplifier_a`]). The envelope is always at least as large as the
//! branch that the asymptotic table would select, and the couplings that use it
//! only need it to be large enough.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::combin::ln_binomial;
use crate::error::{Error, Result};

/// Multipliers `c_3, c_4, c_5` used by the `lemma9` bound.
pub const LEMMA9_CONSTANTS: [f64; 3] = [3.5, 18.0, 44.0];

/// `(c_3, c_4, c_5)` lower limits: `6 / 6^(1/3)`, `15^(1/3) * 12 / 24^(1/6)`,
/// `(2^2 * 3 * 5^3)^(1/6) * 20 / 120^(1/10)`.
pub fn lemma9_constant_lower_bounds() -> [f64; 3] {
    [
        6.0 / 6f64.cbrt(),
        15f64.cbrt() * 12.0 / 24f64.powf(1.0 / 6.0),
        1500f64.powf(1.0 / 6.0) * 20.0 / 120f64.powf(0.1),
    ]
}

const THM4_COEFF: f64 = 10.0;
const THM313_C3: f64 = 30.0;
const THM313_C4: f64 = 157.0;

/// `n` vertices, `m` features, membership probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u64,
    m: u64,
    p: f64,
    alpha: Option<f64>,
}

impl ModelParams {
    pub fn new(n: u64, m: u64, p: f64) -> Result<Self> {
        Self::checked(n, m, p, None)
    }

    /// `m = round(n^alpha)`.
    pub fn with_alpha(n: u64, alpha: f64, p: f64) -> Result<Self> {
        let m = (n as f64).powf(alpha).round();
        if !(1.0..=(1u64 << 63) as f64).contains(&m) {
            return Err(Error::out_of_range("n^alpha", m, "1..=2^63"));
        }
        Self::checked(n, m as u64, p, Some(alpha))
    }

    pub fn checked(n: u64, m: u64, p: f64, alpha: Option<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::out_of_range("n", n, ">= 2"));
        }
        if m < 1 {
            return Err(Error::out_of_range("m", m, ">= 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::out_of_range("p", p, "[0, 1]"));
        }
        if let Some(a) = alpha {
            let target = (n as f64).powf(a);
            if !target.is_finite() || (m as f64 - target).abs() / target > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "m = {m} is not n^alpha = {target:e} within 1e-6"
                )));
            }
        }
        Ok(ModelParams { n, m, p, alpha })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The given exponent, or `ln m / ln n`.
    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| (self.m as f64).ln() / (self.n as f64).ln())
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::checked(self.n, self.m, p, self.alpha)
    }
}

/// `ln(p^k (1-p)^(n-k))`, with the `0^0 = 1` convention.
fn ln_subset_prob(n: u64, p: f64, k: u64) -> f64 {
    let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let b = if n == k {
        0.0
    } else {
        (n - k) as f64 * (-p).ln_1p()
    };
    a + b
}

/// `m p^k (1-p)^(n-k)`: expected number of features whose vertex set is one fixed `k`-set.
pub fn expected_hits_per_set(params: &ModelParams, k: u64) -> f64 {
    if k > params.n {
        return 0.0;
    }
    ((params.m as f64).ln() + ln_subset_prob(params.n, params.p, k)).exp()
}

/// `p̂ = 1 - exp(-m p^2 (1-p)^(n-2))`.
pub fn edge_prob_hat(params: &ModelParams) -> f64 {
    -(-expected_hits_per_set(params, 2)).exp_m1()
}

/// `(p_k, π_k)`: the probability that a feature picks exactly one fixed `k`-set,
/// and the probability that its vertex set has size `k` at all.
pub fn feature_size_prob(n: u64, p: f64, k: u64) -> Result<(f64, f64)> {
    if k > n {
        return Err(Error::out_of_range("k", k, "0..=n"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::out_of_range("p", p, "[0, 1]"));
    }
    let ln_pk = ln_subset_prob(n, p, k);
    Ok((ln_pk.exp(), (ln_binomial(n, k) + ln_pk).exp()))
}

/// `π_0, ..., π_n`, the law of a feature's vertex-set size (`Bin(n, p)`).
pub fn size_distribution(n: u64, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|k| feature_size_prob(n, p, k).map(|x| x.1).unwrap_or(0.0))
        .collect()
}

/// `q_k = (1 - exp(-m p_k))^(1 / C(k, 2))`; `q_2` is exactly [`edge_prob_hat`].
pub fn q_k(params: &ModelParams, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::out_of_range("k", k, ">= 2"));
    }
    let hit = -(-expected_hits_per_set(params, k)).exp_m1();
    if k == 2 {
        return Ok(hit);
    }
    let pairs = (k * (k - 1) / 2) as f64;
    Ok(hit.powf(1.0 / pairs))
}

/// Which case of the amplifier table produced the envelope value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplifierBranch {
    /// `6`
    Constant,
    /// `3 ln n / (ln ln n - ln nq^2)`, `nq^2 <= 1`
    Sparse,
    /// `3 ln n / ln ln n`, `nq^2 = Θ(1)`
    Critical,
    /// `3 ln n / (ln ln n - 3 ln nq^2)`, `(nq^2)^3 = o(ln n)`
    Intermediate,
    /// `ω(n) n^3 q^6` with `ω = ln ln n`, `(nq^2)^3 = Θ(ln n)`
    Omega,
    /// `1.1 n^3 q^6`
    Dense,
}

impl fmt::Display for AmplifierBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AmplifierBranch::Constant => "constant",
            AmplifierBranch::Sparse => "sparse",
            AmplifierBranch::Critical => "critical",
            AmplifierBranch::Intermediate => "intermediate",
            AmplifierBranch::Omega => "omega(lnln n)",
            AmplifierBranch::Dense => "dense",
        };
        f.write_str(s)
    }
}

/// Bounds of `y = (nq^2)^3 / ln n` separating the intermediate, omega and dense cases.
const Y_INTERMEDIATE_END: f64 = 1.0 / std::f64::consts::E;
const Y_OMEGA_END: f64 = std::f64::consts::E;

/// The amplifier `a_n(q)` as a max-envelope of its case table.
///
/// With `x = nq^2` and `y = x^3 / ln n`, the candidates are
///
/// * `6`, always;
/// * `3 ln n / (ln ln n - ln x)` for `x <= 1`;
/// * `3 ln n / ln ln n` for `x >= 1`;
/// * `3 ln n / (ln ln n - 3 ln x)` evaluated at `min(y, 1/e)` for `x > 1`;
/// * `ln ln n * x^3` evaluated at `min(y, e)` once `y >= 1/e`;
/// * `1.1 x^3` for `x > 1`.
///
/// Clamping a case at the end of its regime keeps its largest value as a floor
/// for larger `q`, so the envelope is nondecreasing in `q`.
pub fn coupling_amplifier_a(n: u64, q: f64) -> Result<f64> {
    amplifier_with_branch(n, q).map(|(a, _)| a)
}

pub fn amplifier_with_branch(n: u64, q: f64) -> Result<(f64, AmplifierBranch)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::out_of_range("q", q, "(0, 1)"));
    }
    if n < 3 {
        return Err(Error::out_of_range("n", n, ">= 3 (ln ln n)"));
    }
    let ln_n = (n as f64).ln();
    let lnln = ln_n.ln();
    let x = n as f64 * q * q;
    let mut best = (6.0, AmplifierBranch::Constant);
    let mut offer = |value: f64, branch: AmplifierBranch| {
        if value.is_finite() && value > best.0 {
            best = (value, branch);
        }
    };
    if x <= 1.0 {
        offer(3.0 * ln_n / (lnln - x.ln()), AmplifierBranch::Sparse);
    } else {
        offer(3.0 * ln_n / lnln, AmplifierBranch::Critical);
        let y = x.powi(3) / ln_n;
        if 1.0 / ln_n <= Y_INTERMEDIATE_END {
            let yc = y.min(Y_INTERMEDIATE_END);
            offer(3.0 * ln_n / -yc.ln(), AmplifierBranch::Intermediate);
        }
        if y >= Y_INTERMEDIATE_END {
            offer(lnln * y.min(Y_OMEGA_END) * ln_n, AmplifierBranch::Omega);
        }
        offer(1.1 * x.powi(3), AmplifierBranch::Dense);
    }
    Ok(best)
}

/// The star constant `C(q) = max{5.5, 1.1 nq^2, ln ln n · 1[0.1 <= nq^2 <= 10]}`.
pub fn star_constant_c(n: u64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::out_of_range("q", q, "(0, 1)"));
    }
    let x = n as f64 * q * q;
    let mut c = 5.5f64.max(1.1 * x);
    if n >= 3 && (0.1..=10.0).contains(&x) {
        c = c.max((n as f64).ln().ln());
    }
    Ok(c)
}

/// Which sandwich bound to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lemma9,
    Thm4,
    Thm313,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma9" => Ok(Mode::Lemma9),
            "thm4" => Ok(Mode::Thm4),
            "thm313" => Ok(Mode::Thm313),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lemma9 => "lemma9",
            Mode::Thm4 => "thm4",
            Mode::Thm313 => "thm313",
        })
    }
}

/// Everything [`p_bounds`] derives for one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedThresholds {
    pub mode: Mode,
    pub params: ModelParams,
    pub p_hat: f64,
    /// `(k, p_k)` for `k = 2..=5`.
    pub p_k: Vec<(u64, f64)>,
    /// `(k, q_k)` for `k = 2..=5`.
    pub q_k: Vec<(u64, f64)>,
    /// `(k, a_n(c_k q_k))` for the terms summed by the `lemma9` bound.
    pub amplifier: Vec<(u64, f64)>,
    /// `C(q_3)` when `0 < q_3 < 1`.
    pub star_constant: Option<f64>,
    pub p_minus: f64,
    pub p_plus: f64,
    pub regime: String,
    pub warnings: Vec<String>,
}

impl DerivedThresholds {
    /// Flat key/value record: scalars only, plus the warnings list.
    pub fn to_record(&self) -> Map<String, Value> {
        let mut rec = Map::new();
        rec.insert("mode".into(), json!(self.mode.to_string()));
        rec.insert("n".into(), json!(self.params.n));
        rec.insert("m".into(), json!(self.params.m));
        rec.insert("p".into(), json!(self.params.p));
        rec.insert("alpha".into(), json!(self.params.alpha()));
        rec.insert("p_hat".into(), json!(self.p_hat));
        for &(k, v) in &self.p_k {
            rec.insert(format!("p_{k}"), json!(v));
        }
        for &(k, v) in &self.q_k {
            rec.insert(format!("q_{k}"), json!(v));
        }
        for &(k, v) in &self.amplifier {
            rec.insert(format!("a_{k}"), json!(v));
        }
        rec.insert("C".into(), json!(self.star_constant));
        rec.insert("p_minus".into(), json!(self.p_minus));
        rec.insert("p_plus".into(), json!(self.p_plus));
        rec.insert("regime".into(), json!(self.regime));
        rec.insert("warnings".into(), json!(self.warnings));
        rec
    }
}

/// `p_−` and `p_+` for `mode`, with hypothesis violations reported as warnings.
pub fn p_bounds(params: &ModelParams, mode: Mode) -> Result<DerivedThresholds> {
    let n = params.n as f64;
    let m = params.m as f64;
    let p = params.p;
    let alpha = params.alpha();
    let p_hat = edge_prob_hat(params);
    let mut warnings = Vec::new();

    let p_k = (2..=5)
        .map(|k| {
            let v = if k <= params.n {
                feature_size_prob(params.n, p, k)?.0
            } else {
                0.0
            };
            Ok((k, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let q_k = (2..=5)
        .map(|k| Ok((k, if k <= params.n { q_k(params, k)? } else { 0.0 })))
        .collect::<Result<Vec<_>>>()?;
    let q_of = |k: u64| q_k[(k - 2) as usize].1;

    // ratio p / (n^-1 m^-1/j)
    let ratio = |j: f64| p * n * m.powf(1.0 / j);

    if p > 0.0 {
        if ratio(3.0) < 0.1 {
            warnings.push(format!(
                "p = {p:e} is below the Ω(1/(n·m^(1/3))) range (p·n·m^(1/3) = {:.3e})",
                ratio(3.0)
            ));
        }
        let upper = 10.0 * (n.ln() / m).sqrt();
        if p > upper {
            warnings.push(format!(
                "p = {p:e} exceeds the O(sqrt(ln n / m)) range (10·sqrt(ln n/m) = {upper:e})"
            ));
        }
        if alpha <= 3.0 + 1e-9 && (0.1..=10.0).contains(&ratio(3.0)) {
            warnings.push(format!(
                "triangle threshold: alpha = {alpha:.3} and p = Θ(1/(n·m^(1/3))) (p·n·m^(1/3) = {:.3})",
                ratio(3.0)
            ));
        }
        if (0.1..=10.0).contains(&ratio(2.0)) {
            warnings.push(format!(
                "p = Θ(1/(n·sqrt m)) (p·n·sqrt m = {:.3}), excluded by the equivalence theorem",
                ratio(2.0)
            ));
        }
    }

    let (p_plus, regime, amplifier) = match mode {
        Mode::Thm4 => {
            if alpha <= 4.0 {
                warnings.push(format!("thm4 requires alpha > 4, got {alpha:.4}"));
            }
            let plus = p_hat + THM4_COEFF * (m * p.powi(3)).cbrt();
            (plus, "thm4".to_string(), Vec::new())
        }
        Mode::Thm313 => {
            if alpha <= 10.0 / 3.0 {
                warnings.push(format!("thm313 requires alpha > 10/3, got {alpha:.4}"));
            }
            let mut plus = p_hat + THM313_C3 * (m * p.powi(3)).cbrt();
            let regime = if p > 0.0 && ratio(4.0) >= 1.0 {
                plus += THM313_C4 * (m * p.powi(4)).powf(1.0 / 6.0);
                "thm313:c3+c4"
            } else {
                "thm313:c3"
            };
            (plus, regime.to_string(), Vec::new())
        }
        Mode::Lemma9 => {
            let k_max = lemma9_classify(p, n, m, &mut warnings);
            let mut plus = p_hat;
            let mut amps = Vec::new();
            let mut branches = Vec::new();
            for k in 3..=k_max {
                let c = LEMMA9_CONSTANTS[(k - 3) as usize];
                let cq = c * q_of(k);
                if cq == 0.0 {
                    continue;
                }
                if cq >= 1.0 || params.n < 3 {
                    warnings.push(format!(
                        "c_{k}·q_{k} = {cq:.3e} is outside (0, 1); p_plus saturates at 1"
                    ));
                    plus = f64::INFINITY;
                    continue;
                }
                let (a, branch) = amplifier_with_branch(params.n, cq)?;
                amps.push((k, a));
                branches.push(format!("a_{k}:{branch}"));
                plus += a * cq;
            }
            let mut regime = format!("lemma9:K={k_max}");
            for b in branches {
                regime.push(';');
                regime.push_str(&b);
            }
            (plus, regime, amps)
        }
    };

    let q3 = q_of(3);
    let star_constant = if q3 > 0.0 && q3 < 1.0 {
        Some(star_constant_c(params.n, q3)?)
    } else {
        None
    };

    Ok(DerivedThresholds {
        mode,
        params: *params,
        p_hat,
        p_k,
        q_k,
        amplifier,
        star_constant,
        p_minus: p_hat.clamp(0.0, 1.0),
        p_plus: p_plus.clamp(0.0, 1.0),
        regime,
        warnings,
    })
}

/// Picks `K ∈ {3, 4, 5}` for the `lemma9` bound: the smallest case whose numeric
/// regime contains `p`. Case `K` needs `p·n·m^(1/(K+1)) < 1` and, for `K > 3`,
/// `p·n·m^(1/K) >= 0.1`.
fn lemma9_classify(p: f64, n: f64, m: f64, warnings: &mut Vec<String>) -> u64 {
    if p == 0.0 {
        return 3;
    }
    let r = |j: f64| p * n * m.powf(1.0 / j);
    let valid: Vec<u64> = (3..=5u64)
        .filter(|&k| {
            let upper_ok = r(k as f64 + 1.0) < 1.0;
            let lower_ok = k == 3 || r(k as f64) >= 0.1;
            upper_ok && lower_ok
        })
        .collect();
    let k = match valid.first() {
        Some(&k) => {
            if valid.len() > 1 {
                warnings.push(format!(
                    "lemma9 regime ambiguous: K ∈ {valid:?} all admissible, using K={k}"
                ));
            }
            k
        }
        None => {
            warnings.push(format!(
                "lemma9: p·n·m^(1/6) = {:.3} >= 1, outside every K-case; using K=5",
                r(6.0)
            ));
            5
        }
    };
    // side conditions shared by the cases
    let side = [
        (
            3u64,
            n.powf(-3.0 / 7.0) * m.powf(-1.0 / 3.0),
            "n^(-3/7) m^(-1/3)",
        ),
        (4, n.powf(-9.0 / 14.0) * m.powf(-0.25), "n^(-9/14) m^(-1/4)"),
        (5, n.powf(-6.0 / 7.0) * m.powf(-0.2), "n^(-6/7) m^(-1/5)"),
    ];
    for (from_k, bound, label) in side {
        if k >= from_k && p >= bound {
            warnings.push(format!(
                "lemma9 K={k}: p = {p:e} is not o({label}) = {bound:e}"
            ));
        }
    }
    k
}
