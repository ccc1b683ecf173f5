//! Local φ-exponents, coarse level-set spectra, Legendre transforms of a
//! dimension sweep and the numerical multifractal formalism check.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::{
    estimate_box_dimension, estimate_cutoff_dimension, CutoffConfig, DimensionEstimate, DimensionKind,
};
use crate::gauge::{Rung, ScaleLadder};
use crate::measure::{GridMeasure, VectorMeasure};
use crate::partition::{moment_function, BallScheme};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentSample {
    pub x: f64,
    /// `α̲_j`, the tail minimum of the rung exponents.
    pub lower: Vec<f64>,
    /// `ᾱ_j`, the tail maximum of the rung exponents.
    pub upper: Vec<f64>,
    /// `(depth, per-component exponent)` for every usable rung.
    pub per_rung: Vec<(usize, Vec<f64>)>,
    /// The smallest ball had zero mass for some component.
    pub infinite: bool,
}

fn rungs_within(v: &VectorMeasure, ladder: &ScaleLadder) -> Vec<Rung> {
    ladder.rungs.iter().copied().filter(|r| r.depth <= v.depth()).collect()
}

/// `ln μ_j(B(x, r_n/2)) / φ(r_n)` per rung; grid balls are the cells of `x`.
pub fn local_exponent(v: &VectorMeasure, x: f64, ladder: &ScaleLadder, scheme: BallScheme) -> Result<ExponentSample> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("point {x} outside [0, 1]")));
    }
    let rungs = rungs_within(v, ladder);
    if rungs.is_empty() {
        return Err(Error::EmptyRungSet);
    }
    let mut per_rung = Vec::with_capacity(rungs.len());
    for r in &rungs {
        let mut row = Vec::with_capacity(v.k());
        for g in v.components() {
            let mass = match scheme {
                BallScheme::Grid => g.cell_mass(r.depth, g.cell_of(r.depth, x)),
                BallScheme::Free => g.ball_mass(x, r.radius / 2.0)?,
            };
            row.push(if mass > 0.0 { mass.ln() / r.phi } else { f64::INFINITY });
        }
        per_rung.push((r.depth, row));
    }
    let tail = &per_rung[per_rung.len() - per_rung.len().div_ceil(2)..];
    let k = v.k();
    let lower = (0..k).map(|j| tail.iter().map(|(_, e)| e[j]).fold(f64::INFINITY, f64::min)).collect();
    let upper = (0..k).map(|j| tail.iter().map(|(_, e)| e[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let infinite = per_rung.last().unwrap().1.iter().any(|e| e.is_infinite());
    Ok(ExponentSample { x, lower, upper, per_rung, infinite })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Legendre,
    Histogram,
}

impl SpectrumMethod {
    pub fn label(self) -> &'static str {
        match self {
            SpectrumMethod::Legendre => "legendre",
            SpectrumMethod::Histogram => "histogram",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub alpha: Vec<f64>,
    pub f: f64,
    /// Histogram counts per usable rung, coarse to fine.
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub method: SpectrumMethod,
    pub source: String,
    pub points: Vec<SpectrumPoint>,
}

/// Coarse spectrum: at each rung, count the support cells whose exponents
/// `ln μ_j(cell)/φ(r_n)` are within `η` of `α` in every coordinate. The
/// estimate is `ln N_n / a_n` at the deepest rung, `-∞` when that count
/// is zero.
pub fn coarse_spectrum(v: &VectorMeasure, ladder: &ScaleLadder, alphas: &[Vec<f64>], eta: f64) -> Result<SpectrumCurve> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("window η = {eta} must be positive")));
    }
    if let Some(a) = alphas.iter().find(|a| a.len() != v.k()) {
        return Err(Error::Domain(format!("α has length {}, measure has k = {}", a.len(), v.k())));
    }
    let rungs = rungs_within(v, ladder);
    if rungs.is_empty() {
        return Err(Error::EmptyRungSet);
    }
    let exps: Vec<Vec<Vec<f64>>> = rungs
        .iter()
        .map(|r| {
            v.support_cells(r.depth)
                .par_iter()
                .map(|&c| v.components().iter().map(|g| g.cell_mass(r.depth, c).ln() / r.phi).collect())
                .collect()
        })
        .collect();
    let points = alphas
        .par_iter()
        .map(|alpha| {
            let counts: Vec<usize> = exps
                .iter()
                .map(|cells| {
                    cells.iter().filter(|e| e.iter().zip(alpha).all(|(x, a)| (x - a).abs() <= eta)).count()
                })
                .collect();
            let last = *counts.last().unwrap();
            let f = if last == 0 {
                f64::NEG_INFINITY
            } else {
                (last as f64).ln() / rungs.last().unwrap().denom
            };
            SpectrumPoint { alpha: alpha.clone(), f, counts: Some(counts) }
        })
        .collect();
    Ok(SpectrumCurve { method: SpectrumMethod::Histogram, source: format!("cells, eta={eta}"), points })
}

/// A dimension function sampled on a full tensor grid of `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub kind: DimensionKind,
    /// Sorted distinct values per coordinate.
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `axes`, last coordinate fastest.
    pub values: Vec<f64>,
}

const GRID_SNAP: f64 = 1e-9;

impl Sweep {
    pub fn new(kind: DimensionKind, samples: &[(Vec<f64>, f64)]) -> Result<Self> {
        let k = samples.first().map(|s| s.0.len()).ok_or_else(|| Error::SparseGrid("empty sweep".into()))?;
        let mut axes: Vec<Vec<f64>> = vec![Vec::new(); k];
        for (q, _) in samples {
            if q.len() != k {
                return Err(Error::SparseGrid("mixed q dimensions".into()));
            }
            for (axis, &x) in axes.iter_mut().zip(q) {
                if !axis.iter().any(|&y| (y - x).abs() <= GRID_SNAP) {
                    axis.push(x);
                }
            }
        }
        for (j, axis) in axes.iter_mut().enumerate() {
            axis.sort_by(f64::total_cmp);
            if axis.len() < 5 {
                return Err(Error::SparseGrid(format!("axis {j} has {} values, need at least 5", axis.len())));
            }
        }
        let total: usize = axes.iter().map(Vec::len).product();
        let mut values = vec![f64::NAN; total];
        let mut s = Sweep { kind, axes, values: Vec::new() };
        for (q, val) in samples {
            let idx = s.index_of(q).ok_or_else(|| Error::SparseGrid(format!("q = {q:?} off the grid")))?;
            values[idx] = *val;
        }
        if values.iter().any(|x| x.is_nan()) {
            return Err(Error::SparseGrid("the q-grid is not a full tensor grid".into()));
        }
        s.values = values;
        Ok(s)
    }

    pub fn from_estimates(estimates: &[DimensionEstimate], kind: DimensionKind) -> Result<Self> {
        let samples: Vec<(Vec<f64>, f64)> =
            estimates.iter().filter(|e| e.kind == kind).map(|e| (e.q.clone(), e.value)).collect();
        Self::new(kind, &samples)
    }

    pub fn k(&self) -> usize {
        self.axes.len()
    }

    fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    fn multi(&self, mut flat: usize) -> Vec<usize> {
        let mut m = vec![0; self.k()];
        for j in (0..self.k()).rev() {
            m[j] = flat % self.axes[j].len();
            flat /= self.axes[j].len();
        }
        m
    }

    fn index_of(&self, q: &[f64]) -> Option<usize> {
        let m: Option<Vec<usize>> = q
            .iter()
            .zip(&self.axes)
            .map(|(&x, a)| a.iter().position(|&y| (y - x).abs() <= GRID_SNAP))
            .collect();
        m.map(|m| self.flat(&m))
    }

    pub fn q_at(&self, flat: usize) -> Vec<f64> {
        self.multi(flat).iter().zip(&self.axes).map(|(&i, a)| a[i]).collect()
    }

    pub fn value_at(&self, q: &[f64]) -> Option<f64> {
        self.index_of(q).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `−∇` by central differences at an interior grid point.
    pub fn neg_gradient(&self, q: &[f64]) -> Option<Vec<f64>> {
        let m = self.multi(self.index_of(q)?);
        let mut g = Vec::with_capacity(self.k());
        for j in 0..self.k() {
            if m[j] == 0 || m[j] + 1 == self.axes[j].len() {
                return None;
            }
            let (mut lo, mut hi) = (m.clone(), m.clone());
            lo[j] -= 1;
            hi[j] += 1;
            let dq = self.axes[j][hi[j]] - self.axes[j][lo[j]];
            g.push(-(self.values[self.flat(&hi)] - self.values[self.flat(&lo)]) / dq);
        }
        Some(g)
    }
}

/// `min over grid q of ⟨α, q⟩ + value(q)`.
pub fn legendre_value(sweep: &Sweep, alpha: &[f64]) -> f64 {
    (0..sweep.len())
        .map(|i| {
            let q = sweep.q_at(i);
            q.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>() + sweep.values[i]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Legendre transform at the `α = −∇value(q)` of every interior grid point,
/// sorted by `α` with duplicates removed.
pub fn legendre_transform(sweep: &Sweep) -> Result<SpectrumCurve> {
    let mut alphas: Vec<Vec<f64>> = (0..sweep.len()).filter_map(|i| sweep.neg_gradient(&sweep.q_at(i))).collect();
    if alphas.is_empty() {
        return Err(Error::SparseGrid("no interior grid points".into()));
    }
    alphas.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    alphas.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= 1e-12));
    let points = alphas
        .into_iter()
        .map(|alpha| {
            let f = legendre_value(sweep, &alpha);
            SpectrumPoint { alpha, f, counts: None }
        })
        .collect();
    Ok(SpectrumCurve { method: SpectrumMethod::Legendre, source: sweep.kind.label().to_string(), points })
}

/// Rows `method,alpha1..alphak,f`.
pub fn write_spectrum_csv<W: Write>(curves: &[SpectrumCurve], mut out: W) -> Result<()> {
    let k = curves.iter().flat_map(|c| c.points.first()).map(|p| p.alpha.len()).next().unwrap_or(1);
    let cols: Vec<String> = (1..=k).map(|j| format!("alpha{j}")).collect();
    writeln!(out, "method,{},f", cols.join(","))?;
    for c in curves {
        for p in &c.points {
            let a: Vec<String> = p.alpha.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{},{}", c.method.label(), a.join(","), p.f)?;
        }
    }
    Ok(())
}

/// `ν_q(leaf) ∝ Π_j μ_j(leaf)^{q_j}` on the support.
pub fn surrogate_nu(v: &VectorMeasure, q: &[f64]) -> Result<GridMeasure> {
    v.check_exponents(q)?;
    let n = v.depth();
    let logs: Vec<f64> = (0..v.n_leaves())
        .map(|i| if v.in_support(n, i) { v.log_cell_term(n, i, q) } else { f64::NEG_INFINITY })
        .collect();
    let total = crate::numeric::log_sum_exp(&logs);
    if !total.is_finite() {
        return Err(Error::ZeroIntegral("surrogate weights vanish".into()));
    }
    let leaves = logs.iter().map(|l| (l - total).exp()).collect();
    GridMeasure::new(v.base(), n, leaves)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormalismConfig {
    /// Symmetric `p` values are `±step·i` for `i = 0..=p_count`, per axis.
    pub p_step: f64,
    pub p_count: usize,
    pub eta: f64,
    pub cutoff: CutoffConfig,
}

impl Default for FormalismConfig {
    fn default() -> Self {
        FormalismConfig { p_step: 0.1, p_count: 10, eta: 0.1, cutoff: CutoffConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormalismReport {
    pub q0: Vec<f64>,
    /// `t̂_q`, the `Λ` estimate at `q0`.
    pub t_q: f64,
    #[serde(rename = "K_low")]
    pub k_low: f64,
    #[serde(rename = "K_high")]
    pub k_high: f64,
    /// Rows `(axis, p, C_n(p) per usable rung)`.
    pub c_table: Vec<(usize, f64, Vec<f64>)>,
    /// `−∇C(0)` by central differences at the deepest rung.
    pub alpha0: Vec<f64>,
    pub grad_minus: Vec<f64>,
    pub grad_plus: Vec<f64>,
    pub f_legendre: f64,
    pub f_histogram: f64,
    /// Histogram value at `α0` with window `η/2` and `2η`.
    pub f_histogram_sensitivity: (f64, f64),
    pub eq1_residual_max: f64,
}

/// Numerical check of `f(−∇C(0)) = Λ*(−∇C(0))` with auxiliary measure `ν`.
pub fn formalism_check(
    v: &VectorMeasure,
    nu: &GridMeasure,
    q0: &[f64],
    ladder: &ScaleLadder,
    sweep: &Sweep,
    cfg: &FormalismConfig,
) -> Result<FormalismReport> {
    v.check_exponents(q0)?;
    if nu.leaves().iter().all(|&w| w <= 0.0) {
        return Err(Error::ZeroIntegral("ν has no mass".into()));
    }
    let rungs = rungs_within(v, ladder);
    if rungs.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: rungs.len() });
    }
    let deepest = *rungs.last().unwrap();
    let t_q = estimate_cutoff_dimension(v, q0, DimensionKind::Lambda, ladder, &cfg.cutoff)?.value;

    let tail = &rungs[rungs.len() - rungs.len().div_ceil(2)..];
    let (mut k_low, mut k_high) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in tail {
        let span = v.base().pow((v.depth() - r.depth) as u32);
        for c in v.support_cells(r.depth) {
            let nu_mass: f64 = nu.leaves()[c * span..(c + 1) * span].iter().sum();
            let log_ratio = nu_mass.ln() - v.log_cell_term(r.depth, c, q0) - t_q * r.phi;
            k_low = k_low.min(log_ratio.exp());
            k_high = k_high.max(log_ratio.exp());
        }
    }

    let k = v.k();
    let h = cfg.p_step;
    let axis_p = |j: usize, s: f64| -> Vec<f64> {
        let mut p = vec![0.0; k];
        p[j] = s;
        p
    };
    let mut c_table = Vec::new();
    for j in 0..k {
        for i in -(cfg.p_count as i64)..=(cfg.p_count as i64) {
            let s = i as f64 * h;
            let row = rungs
                .iter()
                .map(|r| moment_function(v, nu, &axis_p(j, s), r, BallScheme::Grid))
                .collect::<Result<Vec<f64>>>()?;
            c_table.push((j, s, row));
        }
    }
    let c_deep = |p: &[f64]| moment_function(v, nu, p, &deepest, BallScheme::Grid);
    let c0 = c_deep(&vec![0.0; k])?;
    let mut alpha0 = Vec::with_capacity(k);
    let mut grad_minus = Vec::with_capacity(k);
    let mut grad_plus = Vec::with_capacity(k);
    for j in 0..k {
        let cp = c_deep(&axis_p(j, h))?;
        let cm = c_deep(&axis_p(j, -h))?;
        alpha0.push(-(cp - cm) / (2.0 * h));
        grad_minus.push((c0 - cm) / h);
        grad_plus.push((cp - c0) / h);
    }

    let f_legendre = legendre_value(sweep, &alpha0);
    let hist = |eta: f64| -> Result<f64> { Ok(coarse_spectrum(v, ladder, &[alpha0.clone()], eta)?.points[0].f) };
    let f_histogram = hist(cfg.eta)?;
    let f_histogram_sensitivity = (hist(cfg.eta / 2.0)?, hist(2.0 * cfg.eta)?);

    let mut eq1_residual_max: f64 = 0.0;
    for (j, s, row) in &c_table {
        let p = axis_p(*j, *s);
        let shifted: Vec<f64> = p.iter().zip(q0).map(|(a, b)| a + b - 1.0).collect();
        let renyi = estimate_box_dimension(v, &shifted, DimensionKind::Renyi, ladder, BallScheme::Grid)?.value;
        let c = *row.last().unwrap();
        eq1_residual_max = eq1_residual_max.max((renyi - (c + t_q)).abs());
    }

    Ok(FormalismReport {
        q0: q0.to_vec(),
        t_q,
        k_low,
        k_high,
        c_table,
        alpha0,
        grad_minus,
        grad_plus,
        f_legendre,
        f_histogram,
        f_histogram_sensitivity,
        eq1_residual_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub alpha: Vec<f64>,
    pub legendre_value: f64,
    pub predicted_empty: bool,
    pub deepest_count: usize,
    /// A predicted-empty level set has no cells at the deepest rung.
    pub consistent: bool,
}

/// Compares a negative Legendre value at `α` with the histogram count.
pub fn level_set_empty_check(
    v: &VectorMeasure,
    ladder: &ScaleLadder,
    sweep: &Sweep,
    alpha: &[f64],
    eta: f64,
    tol: f64,
) -> Result<LevelSetReport> {
    let legendre = legendre_value(sweep, alpha);
    let curve = coarse_spectrum(v, ladder, &[alpha.to_vec()], eta)?;
    let deepest_count = *curve.points[0].counts.as_ref().unwrap().last().unwrap();
    let predicted_empty = legendre < -tol;
    Ok(LevelSetReport {
        alpha: alpha.to_vec(),
        legendre_value: legendre,
        predicted_empty,
        deepest_count,
        consistent: !predicted_empty || deepest_count == 0,
    })
}

/// `ν_q`-weighted mean of the deepest-rung cell exponents, per component.
pub fn mean_local_exponent(v: &VectorMeasure, q: &[f64], ladder: &ScaleLadder) -> Result<Vec<f64>> {
    let nu = surrogate_nu(v, q)?;
    let deepest = *rungs_within(v, ladder).last().ok_or(Error::EmptyRungSet)?;
    let span = v.base().pow((v.depth() - deepest.depth) as u32);
    let cells = v.support_cells(deepest.depth);
    Ok(v
        .components()
        .iter()
        .map(|g| {
            let terms: Vec<f64> = cells
                .iter()
                .map(|&c| {
                    let w: f64 = nu.leaves()[c * span..(c + 1) * span].iter().sum();
                    w * g.cell_mass(deepest.depth, c).ln() / deepest.phi
                })
                .collect();
            crate::numeric::compensated_sum(&terms)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_scale_ladder, GaugeFn, ValidationConfig};
    use crate::measure::multinomial_cascade;
    use crate::oracle::MultinomialOracle;

    fn ladder(n: usize) -> ScaleLadder {
        make_scale_ladder(&GaugeFn::logarithmic(), 2, n, &ValidationConfig::default()).unwrap()
    }

    fn binomial(p: f64, n: usize) -> VectorMeasure {
        multinomial_cascade(2, n, &[vec![p, 1.0 - p]]).unwrap()
    }

    fn oracle_sweep(w: &[f64], qs: &[f64]) -> Sweep {
        let o = MultinomialOracle::new(w.len(), vec![w.to_vec()]).unwrap();
        let s: Vec<(Vec<f64>, f64)> = qs.iter().map(|&q| (vec![q], o.lambda(&[q]).unwrap())).collect();
        Sweep::new(DimensionKind::Lambda, &s).unwrap()
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as i64;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn local_exponent_examples() {
        let u = VectorMeasure::single(GridMeasure::uniform(2, 12).unwrap());
        for scheme in [BallScheme::Grid, BallScheme::Free] {
            let e = local_exponent(&u, 1.0 / 3.0, &ladder(12), scheme).unwrap();
            assert!((e.lower[0] - 1.0).abs() < 0.01 && (e.upper[0] - 1.0).abs() < 0.01, "{scheme:?}");
        }
        let b = binomial(0.25, 12);
        let e = local_exponent(&b, 0.0, &ladder(12), BallScheme::Grid).unwrap();
        assert!((e.lower[0] - 2.0).abs() < 1e-12 && (e.upper[0] - 2.0).abs() < 1e-12);
        let e = local_exponent(&b, 1.0, &ladder(12), BallScheme::Grid).unwrap();
        assert!((e.lower[0] + 0.75f64.log2()).abs() < 1e-12);
        assert!(e.lower[0] <= e.upper[0]);
        let mut leaves = vec![0.0; 16];
        leaves[0] = 1.0;
        let atom = VectorMeasure::single(GridMeasure::new(2, 4, leaves).unwrap());
        assert!(local_exponent(&atom, 0.9, &ladder(4), BallScheme::Grid).unwrap().infinite);
    }

    #[test]
    fn coarse_examples() {
        let u = VectorMeasure::single(GridMeasure::uniform(2, 12).unwrap());
        let c = coarse_spectrum(&u, &ladder(12), &[vec![1.0]], 0.1).unwrap();
        assert!((c.points[0].f - 1.0).abs() < 0.05);
        let b = binomial(0.25, 14);
        let c = coarse_spectrum(&b, &ladder(14), &[vec![1.98]], 0.05).unwrap();
        assert!(c.points[0].f.abs() < 1e-12);
        assert_eq!(*c.points[0].counts.as_ref().unwrap().last().unwrap(), 1);
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        let c = coarse_spectrum(&b, &ladder(14), &[vec![h]], 0.1).unwrap();
        assert!((c.points[0].f - h).abs() < 0.1, "{}", c.points[0].f);
        let none = coarse_spectrum(&b, &ladder(14), &[vec![3.0]], 0.1).unwrap();
        assert_eq!(none.points[0].f, f64::NEG_INFINITY);
    }

    #[test]
    fn legendre_examples() {
        let qs = grid(-3.0, 3.0, 0.5);
        let u = oracle_sweep(&[0.5, 0.5], &qs);
        let curve = legendre_transform(&u).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert!((curve.points[0].alpha[0] - 1.0).abs() < 1e-12 && (curve.points[0].f - 1.0).abs() < 1e-12);
        assert!((legendre_value(&u, &[1.2]) - (1.0 - 3.0 * 0.2)).abs() < 1e-12);
        let b = oracle_sweep(&[0.25, 0.75], &grid(-4.0, 4.0, 0.01));
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((h - 0.81128).abs() < 1e-5);
        assert!((legendre_value(&b, &[h]) - h).abs() < 1e-4);
        let o = MultinomialOracle::new(2, vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let axis = grid(-2.0, 2.0, 0.5);
        let samples: Vec<(Vec<f64>, f64)> = axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&c| vec![a, c]))
            .map(|q| {
                let l = o.lambda(&q).unwrap();
                (q, l)
            })
            .collect();
        let s = Sweep::new(DimensionKind::Lambda, &samples).unwrap();
        let a0 = s.neg_gradient(&[0.0, 0.0]).unwrap();
        assert!((legendre_value(&s, &a0) - 1.0).abs() < 1e-6);
        assert!(matches!(
            Sweep::new(DimensionKind::Lambda, &samples[..4]),
            Err(Error::SparseGrid(_))
        ));
    }

    #[test]
    fn legendre_is_concave_and_below_affine_bounds() {
        let qs = grid(-5.0, 5.0, 0.25);
        let s = oracle_sweep(&[0.3, 0.7], &qs);
        let c = legendre_transform(&s).unwrap();
        for w in c.points.windows(3) {
            let (a0, a1, a2) = (w[0].alpha[0], w[1].alpha[0], w[2].alpha[0]);
            let chord = w[0].f + (w[2].f - w[0].f) * (a1 - a0) / (a2 - a0);
            assert!(w[1].f >= chord - 1e-9);
        }
        for p in &c.points {
            for (i, &q) in qs.iter().enumerate() {
                assert!(p.f <= p.alpha[0] * q + s.values[i] + 1e-12);
            }
        }
        let mut buf = Vec::new();
        write_spectrum_csv(&[c], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("method,alpha1,f\nlegendre,"));
    }

    #[test]
    fn formalism_examples() {
        let qs = grid(-3.0, 3.0, 0.5);
        let b = binomial(0.3, 14);
        let l = ladder(14);
        let s = oracle_sweep(&[0.3, 0.7], &qs);
        let r = formalism_check(&b, b.component(0), &[1.0], &l, &s, &FormalismConfig::default()).unwrap();
        let h = 0.881290899;
        assert!((r.alpha0[0] - h).abs() < 0.01);
        assert!((r.f_legendre - h).abs() < 0.05);
        assert!((r.k_low - 1.0).abs() < 0.01 && (r.k_high - 1.0).abs() < 0.01);
        assert!(r.eq1_residual_max < 0.01, "{}", r.eq1_residual_max);
        assert!(r.grad_minus[0] <= r.grad_plus[0] + 1e-12);

        let u = VectorMeasure::single(GridMeasure::uniform(2, 10).unwrap());
        let su = oracle_sweep(&[0.5, 0.5], &qs);
        let r = formalism_check(&u, u.component(0), &[0.0], &ladder(10), &su, &FormalismConfig::default()).unwrap();
        assert!((r.alpha0[0] - 1.0).abs() < 1e-9 && (r.f_legendre - 1.0).abs() < 1e-9);

        let q = binomial(0.25, 12);
        let nu = surrogate_nu(&q, &[2.0]).unwrap();
        let sq = oracle_sweep(&[0.25, 0.75], &qs);
        let r = formalism_check(&q, &nu, &[2.0], &ladder(12), &sq, &FormalismConfig::default()).unwrap();
        assert!((r.alpha0[0] - 0.57354).abs() < 0.01);
        assert!((r.k_low - 1.0).abs() < 0.01 && (r.k_high - 1.0).abs() < 0.01);
    }

    #[test]
    fn level_sets() {
        let qs = grid(-5.0, 5.0, 0.5);
        let b = binomial(0.25, 14);
        let s = oracle_sweep(&[0.25, 0.75], &qs);
        let r = level_set_empty_check(&b, &ladder(14), &s, &[3.0], 0.1, 1e-9).unwrap();
        assert!(r.predicted_empty && r.deepest_count == 0 && r.consistent);
        let r = level_set_empty_check(&b, &ladder(14), &s, &[1.0], 0.1, 1e-9).unwrap();
        assert!(!r.predicted_empty && r.legendre_value > 0.0);
        let u = VectorMeasure::single(GridMeasure::uniform(2, 10).unwrap());
        let su = oracle_sweep(&[0.5, 0.5], &qs);
        let r = level_set_empty_check(&u, &ladder(10), &su, &[1.0], 0.1, 1e-9).unwrap();
        assert!(!r.predicted_empty && (r.legendre_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_exponent_matches_gradient() {
        let v = multinomial_cascade(2, 12, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let o = MultinomialOracle::new(2, vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        for q in [[0.0, 0.0], [1.5, -1.0], [-2.0, 0.5]] {
            let m = mean_local_exponent(&v, &q, &ladder(12)).unwrap();
            let (a, _) = o.spectrum_point(&q).unwrap();
            for j in 0..2 {
                assert!((m[j] - a[j]).abs() < 1e-9);
            }
        }
    }
}
