//! Dimension functions estimated from partition sums along the scale
//! ladder: the box kinds `L`, `C` and the Rényi kind by regression, the
//! cut-off kinds `b`, `B`, `Λ` by bisection in `t`, and the doubling
//! diagnostic `T_a`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::besicovitch_families;
use crate::gauge::{Rung, ScaleLadder};
use crate::measure::VectorMeasure;
use crate::numeric::least_squares;
use crate::partition::{
    covering_sum, log_renyi_integral, packing_sum, premeasure_dp, BallScheme, CellTerms, PremeasureKind,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRegression {
    /// `(a_n, ln V_n)` pairs, `a_n = −φ(r_n)`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Largest two-point slope over the last half of the points.
    pub upper_slope: f64,
    /// Smallest two-point slope over the last half of the points.
    pub lower_slope: f64,
}

/// Least-squares slope of `ln V_n` against `a_n`, with tail two-point
/// slopes as limsup/liminf proxies. Non-finite points are skipped.
pub fn scaling_regression(points: &[(f64, f64)]) -> Result<ScalingRegression> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(a, y)| a.is_finite() && y.is_finite()).collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: pts.len() });
    }
    let (slope, intercept, r2) = least_squares(&pts);
    let tail = &pts[pts.len() - pts.len().div_ceil(2)..];
    let two_point = tail.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0));
    let (lo, hi) = two_point.fold((slope, slope), |(lo, hi), s| (lo.min(s), hi.max(s)));
    Ok(ScalingRegression { points: pts, slope, intercept, r2, upper_slope: hi, lower_slope: lo })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DimensionKind {
    /// `b(q)`, from Hausdorff pre-measures.
    #[serde(rename = "b")]
    Hausdorff,
    /// `B(q)`, from packing pre-measures with the Besicovitch correction.
    #[serde(rename = "B")]
    Packing,
    /// `Λ(q)`, from packing pre-measures.
    #[serde(rename = "Lambda")]
    Lambda,
    /// `L(q)`, from covering sums.
    #[serde(rename = "L")]
    Covering,
    /// `C(q)`, from packing sums.
    #[serde(rename = "C")]
    PackingBox,
    /// Rényi dimension from `I^q`; pairs with `C` at `q + 𝕀`.
    #[serde(rename = "Irenyi")]
    Renyi,
}

impl DimensionKind {
    pub const ALL: [DimensionKind; 6] = [
        DimensionKind::Hausdorff,
        DimensionKind::Packing,
        DimensionKind::Lambda,
        DimensionKind::Covering,
        DimensionKind::PackingBox,
        DimensionKind::Renyi,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DimensionKind::Hausdorff => "b",
            DimensionKind::Packing => "B",
            DimensionKind::Lambda => "Lambda",
            DimensionKind::Covering => "L",
            DimensionKind::PackingBox => "C",
            DimensionKind::Renyi => "Irenyi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown dimension kind `{s}`")))
    }

    pub fn is_cutoff(self) -> bool {
        matches!(self, DimensionKind::Hausdorff | DimensionKind::Packing | DimensionKind::Lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionTrace {
    /// `(t, slope)` at every evaluated `t`, endpoints first.
    pub steps: Vec<(f64, f64)>,
    pub converged: bool,
    /// Regression of the log pre-measures at the returned `t`.
    pub regression: ScalingRegression,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Diagnostics {
    Regression(ScalingRegression),
    Bisection(BisectionTrace),
}

impl Diagnostics {
    pub fn regression(&self) -> &ScalingRegression {
        match self {
            Diagnostics::Regression(r) => r,
            Diagnostics::Bisection(b) => &b.regression,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub q: Vec<f64>,
    pub kind: DimensionKind,
    pub value: f64,
    pub bracket: (f64, f64),
    pub diagnostics: Diagnostics,
}

fn usable_rungs(v: &VectorMeasure, ladder: &ScaleLadder) -> Vec<Rung> {
    ladder.rungs.iter().copied().filter(|r| r.depth <= v.depth()).collect()
}

/// `L`, `C` or Rényi dimension at `q` as the regression slope over the
/// ladder; the bracket is the tail slope range.
pub fn estimate_box_dimension(
    v: &VectorMeasure,
    q: &[f64],
    kind: DimensionKind,
    ladder: &ScaleLadder,
    scheme: BallScheme,
) -> Result<DimensionEstimate> {
    v.check_exponents(q)?;
    let rungs = usable_rungs(v, ladder);
    let logs: Vec<Result<f64>> = rungs
        .par_iter()
        .map(|r| match kind {
            DimensionKind::Covering => covering_sum(v, q, r.radius, scheme).map(|x| x.log_value),
            DimensionKind::PackingBox => packing_sum(v, q, r.radius, scheme).map(|x| x.log_value),
            DimensionKind::Renyi => log_renyi_integral(v, q, r.radius, scheme),
            other => Err(Error::Domain(format!("{} is not a box kind", other.label()))),
        })
        .collect();
    let mut points = Vec::with_capacity(rungs.len());
    for (r, l) in rungs.iter().zip(logs) {
        points.push((r.denom, l?));
    }
    let reg = scaling_regression(&points)?;
    Ok(DimensionEstimate {
        q: q.to_vec(),
        kind,
        value: reg.slope,
        bracket: (reg.lower_slope, reg.upper_slope),
        diagnostics: Diagnostics::Regression(reg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffConfig {
    /// Each pre-measure uses rungs `n..=n+window`.
    pub window: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { window: 2, t_lo: -64.0, t_hi: 64.0, tol: 1e-3, max_iter: 40 }
    }
}

struct Window {
    denom: f64,
    depths: Vec<usize>,
    phis: Vec<f64>,
    log_xi: f64,
}

/// Log pre-measures of one `q` for every window, for any `t`.
struct CutoffContext {
    terms: CellTerms,
    windows: Vec<Window>,
    kind: DimensionKind,
}

impl CutoffContext {
    fn new(v: &VectorMeasure, q: &[f64], kind: DimensionKind, ladder: &ScaleLadder, window: usize) -> Result<Self> {
        let rungs = usable_rungs(v, ladder);
        if rungs.len() < window + 3 {
            return Err(Error::TooFewPoints { needed: window + 3, got: rungs.len() });
        }
        let windows = rungs
            .windows(window + 1)
            .map(|w| {
                let log_xi = if kind == DimensionKind::Packing {
                    let finest = w[window];
                    let width = (v.base() as f64).powi(-(finest.depth as i32));
                    let centers: Vec<f64> =
                        v.support_cells(finest.depth).iter().map(|&c| (c as f64 + 0.5) * width).collect();
                    (besicovitch_families(&centers, finest.radius / 2.0).count().max(1) as f64).ln()
                } else {
                    0.0
                };
                Window {
                    denom: w[0].denom,
                    depths: w.iter().map(|r| r.depth).collect(),
                    phis: w.iter().map(|r| r.phi).collect(),
                    log_xi,
                }
            })
            .collect();
        Ok(CutoffContext { terms: CellTerms::new(v, q)?, windows, kind })
    }

    fn regression(&self, t: f64) -> Result<ScalingRegression> {
        let pk = match self.kind {
            DimensionKind::Hausdorff => PremeasureKind::Hausdorff,
            _ => PremeasureKind::Packing,
        };
        let points: Vec<(f64, f64)> = self
            .windows
            .par_iter()
            .map(|w| {
                let (lv, _) = premeasure_dp(&self.terms, &w.depths, &w.phis, t, pk, false);
                (w.denom, lv - w.log_xi)
            })
            .collect();
        scaling_regression(&points)
    }
}

/// Cut-off dimension `b`, `B` or `Λ`: the `t` at which the scaling slope of
/// the log pre-measure changes sign.
pub fn estimate_cutoff_dimension(
    v: &VectorMeasure,
    q: &[f64],
    kind: DimensionKind,
    ladder: &ScaleLadder,
    cfg: &CutoffConfig,
) -> Result<DimensionEstimate> {
    if !kind.is_cutoff() {
        return Err(Error::Domain(format!("{} is not a cut-off kind", kind.label())));
    }
    let ctx = CutoffContext::new(v, q, kind, ladder, cfg.window)?;
    let (mut lo, mut hi) = (cfg.t_lo, cfg.t_hi);
    let mut s_lo = ctx.regression(lo)?.slope;
    let mut s_hi = ctx.regression(hi)?.slope;
    if !(s_lo > 0.0 && s_hi < 0.0) {
        return Err(Error::NoSignChange { lo, hi, slope_lo: s_lo, slope_hi: s_hi });
    }
    let mut steps = vec![(lo, s_lo), (hi, s_hi)];
    let mut exact = None;
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = ctx.regression(mid)?.slope;
        steps.push((mid, s));
        if s > 0.0 {
            (lo, s_lo) = (mid, s);
        } else if s < 0.0 {
            (hi, s_hi) = (mid, s);
        } else {
            exact = Some(mid);
            break;
        }
    }
    let converged = exact.is_some() || hi - lo <= cfg.tol;
    // secant root of the final bracket
    let t = exact.unwrap_or_else(|| (lo + s_lo * (hi - lo) / (s_lo - s_hi)).clamp(lo, hi));
    let regression = ctx.regression(t)?;
    Ok(DimensionEstimate {
        q: q.to_vec(),
        kind,
        value: t,
        bracket: if exact.is_some() { (t, t) } else { (lo, hi) },
        diagnostics: Diagnostics::Bisection(BisectionTrace { steps, converged, regression }),
    })
}

/// Dispatches on the kind; box kinds use `scheme`, cut-off kinds the grid.
pub fn estimate_dimension(
    v: &VectorMeasure,
    q: &[f64],
    kind: DimensionKind,
    ladder: &ScaleLadder,
    scheme: BallScheme,
    cfg: &CutoffConfig,
) -> Result<DimensionEstimate> {
    if kind.is_cutoff() {
        estimate_cutoff_dimension(v, q, kind, ladder, cfg)
    } else {
        estimate_box_dimension(v, q, kind, ladder, scheme)
    }
}

/// One cell of a sweep; failures are kept as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: Vec<f64>,
    pub kind: DimensionKind,
    pub outcome: Result<DimensionEstimate>,
}

/// Every kind at every `q`, ordered by `q` then by kind.
pub fn dimension_sweep(
    v: &VectorMeasure,
    qs: &[Vec<f64>],
    kinds: &[DimensionKind],
    ladder: &ScaleLadder,
    scheme: BallScheme,
    cfg: &CutoffConfig,
) -> Vec<SweepRow> {
    let jobs: Vec<(&Vec<f64>, DimensionKind)> = qs.iter().flat_map(|q| kinds.iter().map(move |&k| (q, k))).collect();
    jobs.par_iter()
        .map(|(q, k)| SweepRow {
            q: q.to_vec(),
            kind: *k,
            outcome: estimate_dimension(v, q, *k, ladder, scheme, cfg),
        })
        .collect()
}

/// Rows `q1..qk,kind,value,bracket_low,bracket_high,r2,status`; failed
/// rows leave the numeric columns empty and carry the error as status.
pub fn write_dimension_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    let k = rows.first().map_or(1, |r| r.q.len());
    let qcols: Vec<String> = (1..=k).map(|j| format!("q{j}")).collect();
    writeln!(out, "{},kind,value,bracket_low,bracket_high,r2,status", qcols.join(","))?;
    for row in rows {
        let q: Vec<String> = row.q.iter().map(|x| x.to_string()).collect();
        match &row.outcome {
            Ok(e) => writeln!(
                out,
                "{},{},{},{},{},{},ok",
                q.join(","),
                row.kind.label(),
                e.value,
                e.bracket.0,
                e.bracket.1,
                e.diagnostics.regression().r2
            )?,
            Err(err) => {
                let msg = err.to_string().replace([',', '\n'], ";");
                writeln!(out, "{},{},,,,,error: {msg}", q.join(","), row.kind.label())?
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub a: f64,
    /// `T̂_a^j`, the max over tail rungs, per component.
    pub values: Vec<f64>,
    /// `(depth, per-component max ratio)` for each tail rung.
    pub per_rung: Vec<(usize, Vec<f64>)>,
    /// A support center had an empty inner ball.
    pub infinite: bool,
}

/// `max_x μ_j(B(x, a·r_n/2)) / μ_j(B(x, r_n/2))` over support leaf centers,
/// maximised over the tail rungs.
///
/// With grid balls the inner ball is the depth-`n` cell of `x` and the
/// outer one its ancestor `⌈log_b a⌉` levels up.
pub fn doubling_diagnostic(
    v: &VectorMeasure,
    a: f64,
    ladder: &ScaleLadder,
    scheme: BallScheme,
) -> Result<DoublingReport> {
    if !(a > 1.0) {
        return Err(Error::Domain(format!("doubling factor a = {a} must exceed 1")));
    }
    let rungs = usable_rungs(v, ladder);
    if rungs.is_empty() {
        return Err(Error::EmptyRungSet);
    }
    let tail = &rungs[rungs.len() - rungs.len().div_ceil(2)..];
    let centers = v.support_leaf_centers();
    if centers.is_empty() {
        return Err(Error::EmptySupport);
    }
    let b = v.base();
    let up = (a.ln() / (b as f64).ln() - 1e-12).ceil().max(1.0) as usize;
    let mut per_rung = Vec::with_capacity(tail.len());
    for r in tail {
        let mut row = Vec::with_capacity(v.k());
        for g in v.components() {
            let ratio = |inner: f64, outer: f64| if inner > 0.0 { outer / inner } else { f64::INFINITY };
            let worst = match scheme {
                BallScheme::Grid => {
                    let outer_depth = r.depth.saturating_sub(up);
                    let span = b.pow((r.depth - outer_depth) as u32);
                    v.support_cells(r.depth)
                        .into_iter()
                        .map(|c| ratio(g.cell_mass(r.depth, c), g.cell_mass(outer_depth, c / span)))
                        .fold(0.0, f64::max)
                }
                BallScheme::Free => {
                    let ratios: Vec<f64> = centers
                        .par_iter()
                        .map(|&x| -> Result<f64> {
                            Ok(ratio(g.ball_mass(x, r.radius / 2.0)?, g.ball_mass(x, a * r.radius / 2.0)?))
                        })
                        .collect::<Result<_>>()?;
                    ratios.into_iter().fold(0.0, f64::max)
                }
            };
            row.push(worst);
        }
        per_rung.push((r.depth, row));
    }
    let values: Vec<f64> =
        (0..v.k()).map(|j| per_rung.iter().map(|(_, row)| row[j]).fold(0.0, f64::max)).collect();
    let infinite = values.iter().any(|x| x.is_infinite());
    Ok(DoublingReport { a, values, per_rung, infinite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_scale_ladder, GaugeFn, ValidationConfig};
    use crate::measure::{multinomial_cascade, GridMeasure};
    use proptest::prelude::*;

    fn ladder(n: usize) -> ScaleLadder {
        make_scale_ladder(&GaugeFn::logarithmic(), 2, n, &ValidationConfig::default()).unwrap()
    }

    fn binomial(p: f64, n: usize) -> VectorMeasure {
        multinomial_cascade(2, n, &[vec![p, 1.0 - p]]).unwrap()
    }

    fn pair(n: usize) -> VectorMeasure {
        multinomial_cascade(2, n, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap()
    }

    #[test]
    fn regression_examples() {
        let ln2 = 2f64.ln();
        let line: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64 * ln2, n as f64 * ln2)).collect();
        let r = scaling_regression(&line).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12 && (r.r2 - 1.0).abs() < 1e-12);
        let geo: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64 * ln2, n as f64 * 0.46f64.ln() + 3.7)).collect();
        assert!((scaling_regression(&geo).unwrap().slope + 1.120294).abs() < 1e-6);
        let osc: Vec<(f64, f64)> =
            (1..=12).map(|n| (n as f64 * ln2, n as f64 * ln2 + (n % 2) as f64)).collect();
        let r = scaling_regression(&osc).unwrap();
        assert!((r.slope - 1.0).abs() < 0.05);
        assert!(r.upper_slope > r.lower_slope + 1.0);
        assert!(r.lower_slope <= r.slope && r.slope <= r.upper_slope);
        assert!(matches!(scaling_regression(&line[..2]), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn box_examples() {
        let u = VectorMeasure::single(GridMeasure::uniform(2, 12).unwrap());
        let e = estimate_box_dimension(&u, &[0.0], DimensionKind::Covering, &ladder(12), BallScheme::Grid).unwrap();
        assert!((e.value - 1.0).abs() < 0.01);
        // closed balls on leaf centers reach one extra leaf, which shows near the leaf scale
        let e = estimate_box_dimension(&u, &[0.0], DimensionKind::Covering, &ladder(12), BallScheme::Free).unwrap();
        assert!((e.value - 1.0).abs() < 0.05);
        let b = binomial(0.25, 14);
        let e = estimate_box_dimension(&b, &[2.0], DimensionKind::Covering, &ladder(14), BallScheme::Grid).unwrap();
        assert!((e.value + 0.67807).abs() < 1e-4);
        let e =
            estimate_box_dimension(&pair(12), &[1.0, 1.0], DimensionKind::PackingBox, &ladder(12), BallScheme::Grid)
                .unwrap();
        assert!((e.value + 1.12029).abs() < 1e-4);
        assert!(e.bracket.0 <= e.value && e.value <= e.bracket.1);
    }

    #[test]
    fn cutoff_examples() {
        let cfg = CutoffConfig::default();
        let u = VectorMeasure::single(GridMeasure::uniform(2, 10).unwrap());
        let e = estimate_cutoff_dimension(&u, &[0.0], DimensionKind::Lambda, &ladder(10), &cfg).unwrap();
        assert!((e.value - 1.0).abs() <= 1e-3);
        assert!((e.value - 1.0).abs() <= 1e-9, "secant root {}", e.value);
        let b = binomial(0.3, 12);
        for kind in [DimensionKind::Hausdorff, DimensionKind::Packing, DimensionKind::Lambda] {
            let e = estimate_cutoff_dimension(&b, &[1.0], kind, &ladder(12), &cfg).unwrap();
            assert!(e.value.abs() < 0.02, "{kind:?}: {}", e.value);
        }
        let q = binomial(0.25, 14);
        let e = estimate_cutoff_dimension(&q, &[2.0], DimensionKind::Lambda, &ladder(14), &cfg).unwrap();
        assert!((e.value + 0.67807).abs() < 0.01);
        assert!(e.bracket.0 <= e.value && e.value <= e.bracket.1);
        let narrow = CutoffConfig { t_lo: 2.0, t_hi: 3.0, ..cfg };
        assert!(matches!(
            estimate_cutoff_dimension(&u, &[0.0], DimensionKind::Lambda, &ladder(10), &narrow),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn doubling_examples() {
        let u = VectorMeasure::single(GridMeasure::uniform(2, 10).unwrap());
        for scheme in [BallScheme::Grid, BallScheme::Free] {
            let d = doubling_diagnostic(&u, 2.0, &ladder(10), scheme).unwrap();
            assert!((d.values[0] - 2.0).abs() < 1e-9, "{scheme:?}");
        }
        let b = binomial(0.3, 12);
        let d = doubling_diagnostic(&b, 2.0, &ladder(12), BallScheme::Grid).unwrap();
        assert!(d.values[0].is_finite() && d.values[0] <= (1.0 / 0.3f64).powi(2));
        assert!((d.values[0] - 1.0 / 0.3).abs() < 1e-9);
        // free balls straddle the cell at 1/2, where neighbouring masses differ by (0.7/0.3)^n
        let f = doubling_diagnostic(&b, 2.0, &ladder(12), BallScheme::Free).unwrap();
        assert!(f.per_rung.windows(2).all(|w| w[1].1[0] > w[0].1[0]));
        let mut leaves = vec![0.0; 1 << 8];
        leaves[77] = 1.0;
        let atom = VectorMeasure::single(GridMeasure::new(2, 8, leaves).unwrap());
        for scheme in [BallScheme::Grid, BallScheme::Free] {
            let d = doubling_diagnostic(&atom, 2.0, &ladder(8), scheme).unwrap();
            assert!((d.values[0] - 1.0).abs() < 1e-12, "{scheme:?}");
        }
        assert!(doubling_diagnostic(&u, 1.0, &ladder(10), BallScheme::Grid).is_err());
    }

    #[test]
    fn sweep_csv() {
        let v = pair(8);
        let qs = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let kinds = [DimensionKind::Covering, DimensionKind::Lambda];
        let rows = dimension_sweep(&v, &qs, &kinds, &ladder(8), BallScheme::Grid, &CutoffConfig::default());
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.outcome.is_ok()));
        let mut buf = Vec::new();
        write_dimension_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("q1,q2,kind,value,bracket_low,bracket_high,r2,status\n0,0,L,"));
        let bad = dimension_sweep(&v, &qs[..1], &[DimensionKind::Lambda], &ladder(3), BallScheme::Grid, &CutoffConfig::default());
        let mut buf = Vec::new();
        write_dimension_csv(&bad, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().contains(",,,,,error: "));
        assert_eq!(DimensionKind::parse("Lambda").unwrap(), DimensionKind::Lambda);
        assert!(DimensionKind::parse("X").is_err());
    }

    #[test]
    fn renyi_pairs_with_packing_box() {
        let v = binomial(0.3, 10);
        let l = ladder(10);
        for q in [-3.0, -0.5, 0.5, 2.0] {
            let i = estimate_box_dimension(&v, &[q], DimensionKind::Renyi, &l, BallScheme::Grid).unwrap();
            let c = estimate_box_dimension(&v, &[q + 1.0], DimensionKind::PackingBox, &l, BallScheme::Grid).unwrap();
            assert!((i.value - c.value).abs() < 0.05);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lambda_convex_and_monotone(w0 in 0.1f64..0.9, w1 in 0.1f64..0.9, q0 in -2.0f64..2.0, q1 in -2.0f64..2.0) {
            let v = multinomial_cascade(2, 10, &[vec![w0, 1.0 - w0], vec![w1, 1.0 - w1]]).unwrap();
            let l = ladder(10);
            let cfg = CutoffConfig { tol: 1e-6, ..CutoffConfig::default() };
            let h = 0.5;
            let lam = |s: f64| estimate_cutoff_dimension(&v, &[q0 + s, q1 + 0.5 * s], DimensionKind::Lambda, &l, &cfg).unwrap().value;
            let (a, b, c) = (lam(-h), lam(0.0), lam(h));
            prop_assert!(a - 2.0 * b + c >= -1e-4);
            prop_assert!(b <= a + 1e-4 && c <= b + 1e-4);
        }

        #[test]
        fn ordering_and_chain(w0 in 0.1f64..0.9, w1 in 0.1f64..0.9, q0 in -2.0f64..3.0, q1 in -2.0f64..3.0) {
            let v = multinomial_cascade(2, 10, &[vec![w0, 1.0 - w0], vec![w1, 1.0 - w1]]).unwrap();
            let l = ladder(10);
            let cfg = CutoffConfig::default();
            let q = [q0, q1];
            let tol = 0.05;
            let cut = |k| estimate_cutoff_dimension(&v, &q, k, &l, &cfg).unwrap().value;
            let (b, bb, lam) = (cut(DimensionKind::Hausdorff), cut(DimensionKind::Packing), cut(DimensionKind::Lambda));
            prop_assert!(b <= bb + tol && bb <= lam + 2.0 * tol);
            if q0 > 1.0 && q1 > 1.0 {
                prop_assert!(lam <= tol);
            }
            let boxd = |k| estimate_box_dimension(&v, &q, k, &l, BallScheme::Grid).unwrap();
            let (lc, cc) = (boxd(DimensionKind::Covering), boxd(DimensionKind::PackingBox));
            prop_assert!(lc.bracket.0 <= cc.bracket.0 + tol && lc.bracket.1 <= cc.bracket.1 + tol);
            prop_assert!(b <= lc.bracket.1 + tol);
        }

        #[test]
        fn scalar_lower_bound_below_one(w in 0.1f64..0.9, q in -2.0f64..1.0) {
            let v = multinomial_cascade(2, 10, &[vec![w, 1.0 - w]]).unwrap();
            let b = estimate_cutoff_dimension(&v, &[q], DimensionKind::Hausdorff, &ladder(10), &CutoffConfig::default())
                .unwrap()
                .value;
            prop_assert!(b >= -0.05);
        }
    }

    #[test]
    fn mixed_lower_bound_below_one_can_fail() {
        // Λ(1/2, 1/2) = log2(√0.18 + √0.28) < 0 although both q_j < 1
        let v = multinomial_cascade(2, 10, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let b = estimate_cutoff_dimension(&v, &[0.5, 0.5], DimensionKind::Hausdorff, &ladder(10), &CutoffConfig::default())
            .unwrap()
            .value;
        let exact = (0.18f64.sqrt() + 0.28f64.sqrt()).log2();
        assert!((b - exact).abs() < 1e-6);
        assert!(b < -0.05);
    }
}
