//! Monte Carlo harness for the mixed large-deviation theorem: empirical
//! cumulants `C_n(t)` and checks of its five items.
//!
//! Trial `i` draws from a ChaCha8 stream selected by `(seed, i)`, so serial
//! and parallel runs produce identical samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::gauge::{Rung, ScaleLadder, Verdict};
use crate::measure::{GridMeasure, VectorMeasure};
use crate::numeric::log_sum_exp;
use crate::{Error, Result};

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub enum Generator {
    /// `W_n = c·n`.
    Deterministic { c: Vec<f64> },
    /// Component `j` is a sum of `n` Bernoulli(`p_j`) variables.
    Bernoulli { p: Vec<f64> },
    /// Component `j` is a sum of `n` Normal(`mean_j`, `std_j²`) variables.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// `W_n = (ln μ_j(cell_n(x)))_j` with `x` drawn from `sampler` and
    /// `a_n = −φ(r_n)` over the ladder rungs.
    Measure { v: VectorMeasure, cdf: Vec<f64>, rungs: Vec<Rung> },
}

impl Generator {
    pub fn measure_driven(v: &VectorMeasure, sampler: &GridMeasure, ladder: &ScaleLadder) -> Result<Self> {
        if sampler.base() != v.base() || sampler.depth() != v.depth() {
            return Err(Error::InvalidMeasure("the sampling measure must share the grid".into()));
        }
        let rungs: Vec<Rung> = ladder.rungs.iter().copied().filter(|r| r.depth <= v.depth()).collect();
        if rungs.is_empty() {
            return Err(Error::EmptyRungSet);
        }
        let mut acc = 0.0;
        let cdf = sampler
            .leaves()
            .iter()
            .map(|&w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Generator::Measure { v: v.clone(), cdf, rungs })
    }

    pub fn k(&self) -> usize {
        match self {
            Generator::Deterministic { c } => c.len(),
            Generator::Bernoulli { p } => p.len(),
            Generator::Gaussian { mean, .. } => mean.len(),
            Generator::Measure { v, .. } => v.k(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::Deterministic { .. } => "deterministic",
            Generator::Bernoulli { .. } => "bernoulli",
            Generator::Gaussian { .. } => "gaussian",
            Generator::Measure { .. } => "measure",
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k() == 0 {
            return Err(Error::Domain("generator needs k ≥ 1".into()));
        }
        match self {
            Generator::Deterministic { c } if c.iter().any(|x| !x.is_finite()) => {
                Err(Error::Domain("deterministic slopes must be finite".into()))
            }
            Generator::Bernoulli { p } if p.iter().any(|x| !(0.0..=1.0).contains(x)) => {
                Err(Error::Domain("Bernoulli parameters must lie in [0, 1]".into()))
            }
            Generator::Gaussian { mean, std } if mean.len() != std.len() || std.iter().any(|s| !(*s >= 0.0)) => {
                Err(Error::Domain("Gaussian needs matching mean/std with std ≥ 0".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdpExperiment {
    pub generator: Generator,
    pub trials: usize,
    /// Largest `n`; ignored by the measure-driven generator.
    pub horizon: usize,
    /// Values of `n` at which `W_n` is kept; empty selects the default.
    pub checkpoints: Vec<usize>,
    /// Scalar `t` values; for `k > 1` they are laid out along each axis.
    pub t_values: Vec<f64>,
    pub seed: u64,
}

impl LdpExperiment {
    /// `horizon·2^-i` for `i = 0..10`, ascending, or the ladder depths.
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        if let Generator::Measure { rungs, .. } = &self.generator {
            return rungs.iter().map(|r| r.depth).collect();
        }
        let mut cps = if self.checkpoints.is_empty() {
            (0..10).map(|i| self.horizon >> i).filter(|&n| n > 0).collect()
        } else {
            self.checkpoints.iter().copied().filter(|&n| n > 0 && n <= self.horizon).collect::<Vec<_>>()
        };
        cps.sort_unstable();
        cps.dedup();
        cps
    }

    /// `t`-grid: every `t_values` entry along each axis, `0` included once.
    pub fn t_grid(&self) -> Vec<Vec<f64>> {
        let k = self.generator.k();
        let mut out = vec![vec![0.0; k]];
        for j in 0..k {
            for &s in &self.t_values {
                if s != 0.0 {
                    let mut t = vec![0.0; k];
                    t[j] = s;
                    out.push(t);
                }
            }
        }
        out
    }

    fn a_n(&self, n: usize) -> f64 {
        match &self.generator {
            Generator::Measure { rungs, .. } => rungs.iter().find(|r| r.depth == n).map_or(f64::NAN, |r| r.denom),
            _ => n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpSamples {
    pub checkpoints: Vec<usize>,
    pub a: Vec<f64>,
    /// `w[c][i]`: `W_n` of trial `i` at checkpoint `c`.
    pub w: Vec<Vec<Vec<f64>>>,
    pub deterministic: bool,
}

impl LdpSamples {
    pub fn horizon_index(&self) -> usize {
        self.checkpoints.len() - 1
    }
}

fn trial_path(exp: &LdpExperiment, cps: &[usize], trial: usize) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    rng.set_stream(trial as u64);
    let k = exp.generator.k();
    let mut out = Vec::with_capacity(cps.len());
    match &exp.generator {
        Generator::Deterministic { c } => {
            for &n in cps {
                out.push(c.iter().map(|x| x * n as f64).collect());
            }
        }
        Generator::Bernoulli { p } => {
            let mut acc = vec![0.0; k];
            let mut prev = 0;
            for &n in cps {
                for (a, &pj) in acc.iter_mut().zip(p) {
                    let d = Binomial::new((n - prev) as u64, pj).map_err(|e| Error::Domain(e.to_string()))?;
                    *a += d.sample(&mut rng) as f64;
                }
                prev = n;
                out.push(acc.clone());
            }
        }
        Generator::Gaussian { mean, std } => {
            let mut acc = vec![0.0; k];
            let mut prev = 0;
            for &n in cps {
                let m = (n - prev) as f64;
                for ((a, &mu), &s) in acc.iter_mut().zip(mean).zip(std) {
                    let d = Normal::new(mu * m, s * m.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
                    *a += d.sample(&mut rng);
                }
                prev = n;
                out.push(acc.clone());
            }
        }
        Generator::Measure { v, cdf, .. } => {
            let u: f64 = rng.random::<f64>() * cdf.last().unwrap();
            // inverse CDF; a zero-mass leaf has an empty interval and is never hit
            let leaf = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let depth = v.depth();
            for &n in cps {
                let cell = leaf / v.base().pow((depth - n) as u32);
                out.push(v.components().iter().map(|g| g.cell_mass(n, cell).ln()).collect());
            }
        }
    }
    Ok(out)
}

/// Draws every trial's path at the checkpoints.
pub fn sample(exp: &LdpExperiment) -> Result<LdpSamples> {
    exp.generator.validate()?;
    if exp.trials == 0 {
        return Err(Error::Domain("at least one trial is needed".into()));
    }
    let cps = exp.resolved_checkpoints();
    if cps.is_empty() {
        return Err(Error::Domain("no checkpoints inside the horizon".into()));
    }
    let a: Vec<f64> = cps.iter().map(|&n| exp.a_n(n)).collect();
    if a.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("a_n must be positive".into()));
    }
    if a.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("a_n must grow along the checkpoints".into()));
    }
    let paths: Vec<Vec<Vec<f64>>> = (0..exp.trials)
        .into_par_iter()
        .map(|i| trial_path(exp, &cps, i))
        .collect::<Result<_>>()?;
    let w = (0..cps.len()).map(|c| paths.iter().map(|p| p[c].clone()).collect()).collect();
    let deterministic = matches!(exp.generator, Generator::Deterministic { .. });
    Ok(LdpSamples { checkpoints: cps, a, w, deterministic })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulantEstimate {
    pub value: f64,
    /// Delta-method standard error.
    pub se: f64,
}

/// `(1/a_n)·ln((1/N) Σ_i e^{⟨t, W_n^{(i)}⟩})`.
pub fn empirical_cumulant(w: &[Vec<f64>], t: &[f64], a_n: f64) -> Result<CumulantEstimate> {
    if w.len() < MIN_SAMPLES {
        return Err(Error::TooFewPoints { needed: MIN_SAMPLES, got: w.len() });
    }
    let x: Vec<f64> = w.iter().map(|wi| wi.iter().zip(t).map(|(a, b)| a * b).sum()).collect();
    let ln_n = (w.len() as f64).ln();
    let m1 = log_sum_exp(&x) - ln_n;
    if m1 == f64::NEG_INFINITY {
        return Err(Error::ZeroIntegral("every sample of e^{⟨t,W⟩} vanishes".into()));
    }
    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let m2 = log_sum_exp(&x2) - ln_n;
    let rel_var = ((m2 - 2.0 * m1).exp() - 1.0).max(0.0);
    let se = (rel_var / w.len() as f64).sqrt() / a_n;
    Ok(CumulantEstimate { value: m1 / a_n, se })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayVerdict {
    NegativeLimit,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCheck {
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    /// The gradient condition on `Ĉ` at `t`.
    pub precondition: bool,
    /// `(n, D_n)`, `D_n = (1/a_n)·ln(e^{−a_n Ĉ_n(t)} Ê[e^{⟨t,W⟩}; event])`.
    pub rates: Vec<(usize, f64)>,
    pub verdict: DecayVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpConfig {
    /// Slack added to the almost-sure bounds.
    pub slack: f64,
    /// Largest violating-trial fraction still read as consistent.
    pub max_violation_fraction: f64,
    pub decay_margin: f64,
    /// `(t, α)` for the upper decay item; `None` uses `t = 0`, `α = ∇₊Ĉ(0) + slack`.
    pub upper_decay: Option<(Vec<f64>, Vec<f64>)>,
    /// `(t, α)` for the lower decay item; `None` uses `t = 0`, `α = ∇₋Ĉ(0) − slack`.
    pub lower_decay: Option<(Vec<f64>, Vec<f64>)>,
    pub summability_eps: Vec<f64>,
    pub summability_tol: f64,
}

impl Default for LdpConfig {
    fn default() -> Self {
        LdpConfig {
            slack: 0.05,
            max_violation_fraction: 0.01,
            decay_margin: 0.0,
            upper_decay: None,
            lower_decay: None,
            summability_eps: vec![0.5, 1.0, 2.0],
            summability_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantRow {
    pub t: Vec<f64>,
    pub c: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdpReport {
    pub generator: String,
    pub trials: usize,
    pub horizon: usize,
    /// `Ĉ` at the horizon over the `t`-grid.
    pub c_grid: Vec<CumulantRow>,
    /// Largest negative second difference of `Ĉ` along any axis (0 if none).
    pub convexity_max_violation: f64,
    /// Every violation is within three standard errors.
    pub convexity_within_3se: bool,
    pub grad_minus: Vec<f64>,
    pub grad_plus: Vec<f64>,
    pub bound_violation_fraction_upper: f64,
    pub bound_violation_fraction_lower: f64,
    pub upper_bound: Verdict,
    pub lower_bound: Verdict,
    pub upper_decay: DecayCheck,
    pub lower_decay: DecayCheck,
    pub summability_ok: bool,
}

fn summable(a: &[f64], eps: f64, tol: f64) -> bool {
    let terms: Vec<f64> = a.iter().map(|x| (-eps * x).exp()).collect();
    let partial: f64 = terms.iter().sum();
    if terms.last().is_some_and(|&t| t <= 1e-300 * partial) {
        return true;
    }
    crate::numeric::geometric_tail_ok(&terms, tol)
}

fn axis_t(k: usize, j: usize, s: f64) -> Vec<f64> {
    let mut t = vec![0.0; k];
    t[j] = s;
    t
}

fn one_sided_gradients(w: &[Vec<f64>], t: &[f64], a_n: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let c0 = empirical_cumulant(w, t, a_n)?.value;
    let mut minus = Vec::with_capacity(t.len());
    let mut plus = Vec::with_capacity(t.len());
    for j in 0..t.len() {
        let mut tp = t.to_vec();
        tp[j] += h;
        let mut tm = t.to_vec();
        tm[j] -= h;
        plus.push((empirical_cumulant(w, &tp, a_n)?.value - c0) / h);
        minus.push((c0 - empirical_cumulant(w, &tm, a_n)?.value) / h);
    }
    Ok((minus, plus))
}

fn decay_check(
    s: &LdpSamples,
    t: &[f64],
    alpha: &[f64],
    upper: bool,
    h: f64,
    margin: f64,
) -> Result<DecayCheck> {
    let hi = s.horizon_index();
    let (gm, gp) = one_sided_gradients(&s.w[hi], t, s.a[hi], h)?;
    let precondition = if upper {
        gp.iter().zip(alpha).all(|(g, a)| g < a) && gm.iter().zip(&gp).all(|(m, p)| m <= &(p + 1e-12))
    } else {
        gm.iter().zip(alpha).all(|(g, a)| a < g) && gm.iter().zip(&gp).all(|(m, p)| m <= &(p + 1e-12))
    };
    let mut rates = Vec::with_capacity(s.checkpoints.len());
    for (c, &n) in s.checkpoints.iter().enumerate() {
        let a_n = s.a[c];
        let x: Vec<f64> = s.w[c].iter().map(|wi| wi.iter().zip(t).map(|(a, b)| a * b).sum()).collect();
        let inside: Vec<f64> = s.w[c]
            .iter()
            .zip(&x)
            .filter(|(wi, _)| {
                wi.iter().zip(alpha).all(|(w, a)| if upper { w / a_n >= *a } else { w / a_n <= *a })
            })
            .map(|(_, &xi)| xi)
            .collect();
        rates.push((n, (log_sum_exp(&inside) - log_sum_exp(&x)) / a_n));
    }
    let last_finite = rates.iter().rev().find(|(_, d)| d.is_finite()).map(|&(_, d)| d);
    let verdict = match last_finite {
        _ if !precondition => DecayVerdict::Inconclusive,
        Some(d) if d < -margin => DecayVerdict::NegativeLimit,
        None if s.deterministic => DecayVerdict::NegativeLimit,
        _ => DecayVerdict::Inconclusive,
    };
    Ok(DecayCheck { t: t.to_vec(), alpha: alpha.to_vec(), precondition, rates, verdict })
}

/// Evaluates items i–v of the theorem on the samples of `exp`.
pub fn ldp_checks(exp: &LdpExperiment, s: &LdpSamples, cfg: &LdpConfig) -> Result<LdpReport> {
    let k = exp.generator.k();
    let hi = s.horizon_index();
    let (w, a_n) = (&s.w[hi], s.a[hi]);

    let mut ts: Vec<f64> = exp.t_values.clone();
    ts.push(0.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if !(ts[0] < 0.0 && *ts.last().unwrap() > 0.0) {
        return Err(Error::Domain("the t-grid must straddle 0".into()));
    }
    let mut c_grid = Vec::new();
    let mut convexity_max_violation: f64 = 0.0;
    let mut convexity_within_3se = true;
    for j in 0..k {
        let row: Vec<(f64, CumulantEstimate)> = ts
            .iter()
            .map(|&x| empirical_cumulant(w, &axis_t(k, j, x), a_n).map(|c| (x, c)))
            .collect::<Result<_>>()?;
        for win in row.windows(3) {
            let ((t0, c0), (t1, c1), (t2, c2)) = (win[0], win[1], win[2]);
            let chord = c0.value + (c2.value - c0.value) * (t1 - t0) / (t2 - t0);
            let violation = c1.value - chord;
            if violation > 0.0 {
                convexity_max_violation = convexity_max_violation.max(violation);
                let se = (c0.se * c0.se + c1.se * c1.se + c2.se * c2.se).sqrt();
                if violation > 3.0 * se + 1e-12 {
                    convexity_within_3se = false;
                }
            }
        }
        for (x, c) in row {
            if j == 0 || x != 0.0 {
                c_grid.push(CumulantRow { t: axis_t(k, j, x), c: c.value, se: c.se });
            }
        }
    }

    let h = ts.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min);
    let zero = vec![0.0; k];
    let (grad_minus, grad_plus) = one_sided_gradients(w, &zero, a_n, h)?;
    let frac = |pred: &dyn Fn(&Vec<f64>) -> bool| w.iter().filter(|wi| pred(wi)).count() as f64 / w.len() as f64;
    let bound_violation_fraction_upper =
        frac(&|wi| wi.iter().zip(&grad_plus).any(|(x, g)| x / a_n > g + cfg.slack));
    let bound_violation_fraction_lower =
        frac(&|wi| wi.iter().zip(&grad_minus).any(|(x, g)| x / a_n < g - cfg.slack));
    let as_verdict = |f: f64| if f <= cfg.max_violation_fraction { Verdict::Pass } else { Verdict::Inconclusive };

    let (ut, ua) = cfg.upper_decay.clone().unwrap_or_else(|| {
        (zero.clone(), grad_plus.iter().map(|g| g + cfg.slack).collect())
    });
    let (lt, la) = cfg.lower_decay.clone().unwrap_or_else(|| {
        (zero.clone(), grad_minus.iter().map(|g| g - cfg.slack).collect())
    });
    let upper_decay = decay_check(s, &ut, &ua, true, h, cfg.decay_margin)?;
    let lower_decay = decay_check(s, &lt, &la, false, h, cfg.decay_margin)?;

    let a_all: Vec<f64> = match &exp.generator {
        Generator::Measure { rungs, .. } => rungs.iter().map(|r| r.denom).collect(),
        _ => (1..=exp.horizon).map(|n| n as f64).collect(),
    };
    let summability_ok = cfg.summability_eps.iter().all(|&e| summable(&a_all, e, cfg.summability_tol));

    Ok(LdpReport {
        generator: exp.generator.name().to_string(),
        trials: exp.trials,
        horizon: s.checkpoints[hi],
        c_grid,
        convexity_max_violation,
        convexity_within_3se,
        grad_minus,
        grad_plus,
        bound_violation_fraction_upper,
        bound_violation_fraction_lower,
        upper_bound: as_verdict(bound_violation_fraction_upper),
        lower_bound: as_verdict(bound_violation_fraction_lower),
        upper_decay,
        lower_decay,
        summability_ok,
    })
}

/// Samples and checks in one call.
pub fn run_ldp(exp: &LdpExperiment, cfg: &LdpConfig) -> Result<LdpReport> {
    let s = sample(exp)?;
    ldp_checks(exp, &s, cfg)
}
