//! Gauge functions `φ` and the scale ladders they are sampled on.
//!
//! Downstream estimators only ever read `φ` at ladder rungs; the continuous
//! [`GaugeFn::eval`] is used to build ladders and to validate.

use std::fmt;
use std::path::Path;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::Serialize;

use crate::numeric::geometric_tail_ok;
use crate::{Error, Result};

#[derive(Clone)]
pub enum GaugeKind {
    Logarithmic,
    /// `(r, φ(r))` pairs with strictly decreasing `r`.
    Table(Vec<(f64, f64)>),
    /// Expression in the variable `r`, e.g. `-1/r` or `math::ln(r)`.
    Expression { source: String, tree: Node<DefaultNumericTypes> },
}

#[derive(Clone)]
pub struct GaugeFn {
    kind: GaugeKind,
}

impl fmt::Debug for GaugeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GaugeKind::Logarithmic => write!(f, "GaugeFn(log)"),
            GaugeKind::Table(t) => write!(f, "GaugeFn(table, {} rows)", t.len()),
            GaugeKind::Expression { source, .. } => write!(f, "GaugeFn(expr {source:?})"),
        }
    }
}

impl GaugeFn {
    pub fn logarithmic() -> Self {
        GaugeFn { kind: GaugeKind::Logarithmic }
    }

    pub fn table(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidGauge("empty gauge table".into()));
        }
        for w in rows.windows(2) {
            if !(w[1].0 < w[0].0) {
                return Err(Error::InvalidGauge(format!(
                    "table radii must strictly decrease ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if rows.iter().any(|(r, p)| !(r.is_finite() && p.is_finite()) || *r <= 0.0) {
            return Err(Error::InvalidGauge("table entries must be finite with r > 0".into()));
        }
        Ok(GaugeFn { kind: GaugeKind::Table(rows) })
    }

    /// Two-column CSV `r,phi`, optional header line.
    pub fn table_from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let (a, b) = (it.next(), it.next());
            let parsed = match (a, b) {
                (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some(row) => rows.push(row),
                None if lineno == 0 && rows.is_empty() => continue,
                None => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected `r,phi`",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::table(rows)
    }

    pub fn expression(source: &str) -> Result<Self> {
        let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| Error::InvalidGauge(format!("{source:?}: {e}")))?;
        let g = GaugeFn { kind: GaugeKind::Expression { source: source.to_string(), tree } };
        g.eval(0.5)?;
        Ok(g)
    }

    pub fn kind(&self) -> &GaugeKind {
        &self.kind
    }

    /// `φ(r)` for `r ∈ (0, 1]`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("gauge radius {r} outside (0, 1]")));
        }
        match &self.kind {
            GaugeKind::Logarithmic => Ok(r.ln()),
            GaugeKind::Table(rows) => table_lookup(rows, r),
            GaugeKind::Expression { source, tree } => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                ctx.set_value("r".into(), Value::from_float(r))
                    .map_err(|e| Error::InvalidGauge(e.to_string()))?;
                let v = tree
                    .eval_number_with_context(&ctx)
                    .map_err(|e| Error::InvalidGauge(format!("{source:?} at r = {r}: {e}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain(format!("{source:?} is not finite at r = {r}")))
                }
            }
        }
    }
}

// Exact hits return the tabulated value; between rows, linear in ln r.
fn table_lookup(rows: &[(f64, f64)], r: f64) -> Result<f64> {
    if let Some(&(_, p)) = rows.iter().find(|(x, _)| *x == r) {
        return Ok(p);
    }
    let first = rows[0].0;
    let last = rows[rows.len() - 1].0;
    if r > first || r < last {
        return Err(Error::Domain(format!("radius {r} outside gauge table [{last}, {first}]")));
    }
    let i = rows.iter().position(|(x, _)| *x < r).expect("bracketed");
    let (r_hi, p_hi) = rows[i - 1];
    let (r_lo, p_lo) = rows[i];
    let w = (r.ln() - r_lo.ln()) / (r_hi.ln() - r_lo.ln());
    Ok(p_lo + w * (p_hi - p_lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// How the small-scale condition `φ(r) = o(log r)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallnessReading {
    /// `φ(r)/log r → 0`.
    Strict,
    /// `φ(r)/log r` stays bounded.
    Relaxed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationConfig {
    pub min_rungs: usize,
    pub ratio_tol: f64,
    pub summability_eps: Vec<f64>,
    pub summability_tol: f64,
    pub smallness: SmallnessReading,
    pub strict_tol: f64,
    pub relaxed_bound: f64,
    /// Extra log-spaced radii used for the monotonicity check.
    pub dense_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            min_rungs: 8,
            ratio_tol: 0.1,
            summability_eps: vec![0.5, 1.0, 2.0],
            summability_tol: 0.1,
            smallness: SmallnessReading::Strict,
            strict_tol: 0.1,
            relaxed_bound: 10.0,
            dense_samples: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeReport {
    pub insufficient_rungs: bool,
    pub monotone: Verdict,
    pub eventually_negative: Verdict,
    /// Largest sampled radius below which every sampled `φ` is negative.
    pub negativity_threshold: Option<f64>,
    pub ratio: Verdict,
    pub last_ratio: f64,
    pub summability: Verdict,
    /// Informational only; never part of [`GaugeReport::admissible`].
    pub smallness: Verdict,
    pub smallness_reading: SmallnessReading,
    pub last_log_ratio: f64,
}

impl GaugeReport {
    pub fn admissible(&self) -> bool {
        !self.insufficient_rungs
            && self.monotone.passed()
            && self.eventually_negative.passed()
            && self.ratio.passed()
            && self.summability.passed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rung {
    /// Grid depth `n`; the rung radius is `b^-n`.
    pub depth: usize,
    pub radius: f64,
    pub phi: f64,
    /// `a_n = -φ(r_n)`, positive for retained rungs.
    pub denom: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleLadder {
    pub base: usize,
    pub rungs: Vec<Rung>,
    /// Depths dropped because `φ(b^-n) ≥ 0` (or not evaluable).
    pub dropped: Vec<usize>,
    pub report: GaugeReport,
}

impl ScaleLadder {
    pub fn depths(&self) -> Vec<usize> {
        self.rungs.iter().map(|r| r.depth).collect()
    }

    pub fn max_depth(&self) -> usize {
        self.rungs.last().map_or(0, |r| r.depth)
    }

    pub fn rung(&self, depth: usize) -> Option<&Rung> {
        self.rungs.iter().find(|r| r.depth == depth)
    }

    /// The last `⌈len/2⌉` rungs.
    pub fn tail(&self) -> &[Rung] {
        let n = self.rungs.len();
        &self.rungs[n - n.div_ceil(2)..]
    }

    pub fn len(&self) -> usize {
        self.rungs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rungs.is_empty()
    }
}

/// Checks a gauge against the conditions the dimension and spectrum
/// machinery relies on, sampled on the ladder radii.
pub fn validate_gauge(g: &GaugeFn, radii: &[f64], cfg: &ValidationConfig) -> GaugeReport {
    let insufficient_rungs = radii.len() < cfg.min_rungs;
    let phis: Vec<Option<f64>> = radii.iter().map(|&r| g.eval(r).ok()).collect();

    // monotonicity on rungs plus a dense log grid down to the smallest rung
    let r_min = radii.iter().cloned().fold(1.0f64, f64::min);
    let mut grid: Vec<f64> = radii.to_vec();
    if cfg.dense_samples > 1 && r_min < 1.0 {
        let lmin = r_min.ln();
        for i in 0..cfg.dense_samples {
            let u = i as f64 / (cfg.dense_samples - 1) as f64;
            grid.push((lmin * (1.0 - u)).exp().min(1.0));
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let sampled: Vec<(f64, Option<f64>)> = grid.iter().map(|&r| (r, g.eval(r).ok())).collect();
    let evaluable = sampled.iter().all(|(_, p)| p.is_some());
    let monotone = evaluable
        && sampled.windows(2).all(|w| w[0].1.unwrap() <= w[1].1.unwrap());
    let monotone = if evaluable { Verdict::from_bool(monotone) } else { Verdict::Inconclusive };

    let mut negativity_threshold = None;
    for (r, p) in &sampled {
        match p {
            Some(v) if *v < 0.0 => negativity_threshold = Some(*r),
            _ => break,
        }
    }
    let eventually_negative = Verdict::from_bool(negativity_threshold.is_some());

    let tail_phis: Vec<f64> = phis.iter().flatten().cloned().collect();
    let (ratio, last_ratio) = if tail_phis.len() >= 2 {
        let n = tail_phis.len();
        let q = tail_phis[n - 1] / tail_phis[n - 2];
        (Verdict::from_bool(q.is_finite() && (q - 1.0).abs() <= cfg.ratio_tol), q)
    } else {
        (Verdict::Inconclusive, f64::NAN)
    };

    let summability = if tail_phis.len() >= 2 {
        Verdict::from_bool(cfg.summability_eps.iter().all(|&eps| {
            let terms: Vec<f64> = tail_phis.iter().map(|p| (eps * p).exp()).collect();
            geometric_tail_ok(&terms, cfg.summability_tol)
        }))
    } else {
        Verdict::Inconclusive
    };

    let log_ratios: Vec<f64> = radii
        .iter()
        .zip(&phis)
        .filter_map(|(r, p)| p.map(|p| p / r.ln()))
        .filter(|v| v.is_finite())
        .collect();
    let last_log_ratio = log_ratios.last().cloned().unwrap_or(f64::NAN);
    let smallness = if log_ratios.len() < 2 {
        Verdict::Inconclusive
    } else {
        let mid = log_ratios[log_ratios.len() / 2];
        match cfg.smallness {
            SmallnessReading::Strict => Verdict::from_bool(
                last_log_ratio.abs() <= cfg.strict_tol && last_log_ratio.abs() <= mid.abs(),
            ),
            SmallnessReading::Relaxed => {
                Verdict::from_bool(last_log_ratio.abs() <= cfg.relaxed_bound)
            }
        }
    };

    GaugeReport {
        insufficient_rungs,
        monotone,
        eventually_negative,
        negativity_threshold,
        ratio,
        last_ratio,
        summability,
        smallness,
        smallness_reading: cfg.smallness,
        last_log_ratio,
    }
}

/// Radii `b^-n` for `n = 1..=n_max`; rungs with `φ ≥ 0` are dropped.
pub fn make_scale_ladder(
    g: &GaugeFn,
    base: usize,
    n_max: usize,
    cfg: &ValidationConfig,
) -> Result<ScaleLadder> {
    if base < 2 {
        return Err(Error::Domain(format!("ladder base {base} < 2")));
    }
    if n_max < 1 {
        return Err(Error::Domain("ladder needs at least one rung".into()));
    }
    let mut rungs = Vec::with_capacity(n_max);
    let mut dropped = Vec::new();
    for depth in 1..=n_max {
        let radius = (base as f64).powi(-(depth as i32));
        match g.eval(radius) {
            Ok(phi) if phi < 0.0 => rungs.push(Rung { depth, radius, phi, denom: -phi }),
            _ => dropped.push(depth),
        }
    }
    let radii: Vec<f64> = rungs.iter().map(|r| r.radius).collect();
    let report = validate_gauge(g, &radii, cfg);
    Ok(ScaleLadder { base, rungs, dropped, report })
}
