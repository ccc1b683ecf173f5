//! Partition sums: covering sums `T`, packing sums `S`, Rényi integrals,
//! the `(q, t)` pre-measure sums and the moment function `C_n(p)`.
//!
//! Scales are ball *diameters*: a sum "at δ" uses balls `B(x, δ/2)`, so at
//! `δ = b^-n` the grid-aligned balls are exactly the depth-`n` cells and
//! `φ` is read at the cell width, matching the ladder rungs.
//!
//! The paper-style inf over coverings and sup over packings are replaced by
//! concrete families; every [`PartitionRecord`] carries the direction of
//! the resulting bias.

use std::io::Write;

use serde::Serialize;

use crate::covering::{besicovitch_families, centered_covering, centered_packing, BallFamily};
use crate::gauge::{Rung, ScaleLadder};
use crate::measure::{GridMeasure, VectorMeasure};
use crate::numeric::{log_add, log_sum_exp, log_sum_exp_map};
use crate::{Error, Result};

/// How balls are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BallScheme {
    /// Balls are b-adic cells; the scale must be a power of `1/b`.
    #[default]
    Grid,
    /// Balls of radius `δ/2` centered on support leaf centers, with
    /// prorated masses; coverings and packings come from greedy sweeps.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumKind {
    Covering,
    Packing,
    Hausdorff,
    PrePacking,
}

impl SumKind {
    pub fn bias(self) -> Bias {
        match self {
            SumKind::Covering | SumKind::Hausdorff => Bias::Upper,
            SumKind::Packing | SumKind::PrePacking => Bias::Lower,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SumKind::Covering => "covering",
            SumKind::Packing => "packing",
            SumKind::Hausdorff => "hausdorff",
            SumKind::PrePacking => "prepacking",
        }
    }
}

/// Side on which a concrete family sits relative to the exact inf/sup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bias {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scale {
    Rung(usize),
    Diameter(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    /// Grid cells of one depth.
    Cells { depth: usize, count: usize },
    /// Grid cells of several depths, `(depth, count)` per chosen rung.
    MixedCells(Vec<(usize, usize)>),
    Balls(BallFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionRecord {
    pub kind: SumKind,
    pub q: Vec<f64>,
    pub t: Option<f64>,
    pub scale: Scale,
    /// Natural log of the sum; `±∞` allowed.
    pub log_value: f64,
    pub bias: Bias,
    pub family: Provenance,
}

impl PartitionRecord {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn is_finite(&self) -> bool {
        self.log_value.is_finite()
    }
}

/// `n` with `δ = b^-n`, or 0 when `δ ≥ 1`.
pub fn grid_depth(v: &VectorMeasure, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("scale {delta} must be positive")));
    }
    if delta >= 1.0 {
        return Ok(0);
    }
    let b = v.base() as f64;
    let n = (-delta.ln() / b.ln()).round();
    if n < 0.0 || n as usize > v.depth() {
        return Err(Error::NotGridScale(delta));
    }
    let back = b.powi(-(n as i32));
    if ((back - delta) / delta).abs() > 1e-9 {
        return Err(Error::NotGridScale(delta));
    }
    Ok(n as usize)
}

fn grid_record(v: &VectorMeasure, q: &[f64], depth: usize, kind: SumKind, scale: Scale) -> PartitionRecord {
    let cells = v.support_cells(depth);
    let log_value = log_sum_exp_map(cells.len(), &|i| v.log_cell_term(depth, cells[i], q));
    PartitionRecord {
        kind,
        q: q.to_vec(),
        t: None,
        scale,
        log_value,
        bias: kind.bias(),
        family: Provenance::Cells { depth, count: cells.len() },
    }
}

// Log of the sum over a ball family; zero-mass balls under negative
// exponents are excluded.
fn family_log_sum(v: &VectorMeasure, fam: &BallFamily, q: &[f64]) -> Result<(f64, BallFamily)> {
    let mut kept = Vec::with_capacity(fam.len());
    let mut terms = Vec::with_capacity(fam.len());
    for &c in &fam.centers {
        match v.log_vector_ball_mass(c, fam.radius, q) {
            Ok(t) => {
                kept.push(c);
                terms.push(t);
            }
            Err(Error::EmptyBall { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok((log_sum_exp(&terms), BallFamily { centers: kept, radius: fam.radius, kind: fam.kind }))
}

fn support_targets(v: &VectorMeasure) -> Result<Vec<f64>> {
    let t = v.support_leaf_centers();
    if t.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(t)
}

/// `Σ_i Π_j μ_j(B(x_i, δ/2))^{q_j}` over a centered covering of the
/// support. An upper bound for the infimum over all centered coverings.
pub fn covering_sum(v: &VectorMeasure, q: &[f64], delta: f64, scheme: BallScheme) -> Result<PartitionRecord> {
    v.check_exponents(q)?;
    match scheme {
        BallScheme::Grid => {
            let n = grid_depth(v, delta)?;
            Ok(grid_record(v, q, n, SumKind::Covering, Scale::Diameter(delta)))
        }
        BallScheme::Free => {
            let targets = support_targets(v)?;
            let fam = centered_covering(&targets, delta / 2.0);
            let (log_value, fam) = family_log_sum(v, &fam, q)?;
            Ok(PartitionRecord {
                kind: SumKind::Covering,
                q: q.to_vec(),
                t: None,
                scale: Scale::Diameter(delta),
                log_value,
                bias: Bias::Upper,
                family: Provenance::Balls(fam),
            })
        }
    }
}

/// Packing counterpart of [`covering_sum`]; a lower bound for the supremum.
///
/// With free balls the best of the greedy packing and the disjoint
/// families of the covering decomposition is kept.
pub fn packing_sum(v: &VectorMeasure, q: &[f64], delta: f64, scheme: BallScheme) -> Result<PartitionRecord> {
    v.check_exponents(q)?;
    match scheme {
        BallScheme::Grid => {
            let n = grid_depth(v, delta)?;
            Ok(grid_record(v, q, n, SumKind::Packing, Scale::Diameter(delta)))
        }
        BallScheme::Free => {
            let targets = support_targets(v)?;
            let radius = delta / 2.0;
            let mut candidates = vec![centered_packing(&targets, radius)];
            candidates.extend(besicovitch_families(&targets, radius).families);
            let mut best: Option<(f64, BallFamily)> = None;
            for fam in &candidates {
                let (lv, fam) = match family_log_sum(v, fam, q) {
                    Ok(x) => x,
                    Err(Error::EmptySupport) => continue,
                    Err(e) => return Err(e),
                };
                if best.as_ref().is_none_or(|(b, _)| lv > *b) {
                    best = Some((lv, fam));
                }
            }
            let (log_value, fam) = best.ok_or(Error::EmptySupport)?;
            Ok(PartitionRecord {
                kind: SumKind::Packing,
                q: q.to_vec(),
                t: None,
                scale: Scale::Diameter(delta),
                log_value,
                bias: Bias::Lower,
                family: Provenance::Balls(fam),
            })
        }
    }
}

/// `ln I^q_δ` with `I^q_δ = Π_j Σ_c μ_j(c) · μ_j(B(center(c), δ/2))^{q_j}`,
/// the product-measure integral in factorized form over leaves `c`.
pub fn log_renyi_integral(v: &VectorMeasure, q: &[f64], delta: f64, scheme: BallScheme) -> Result<f64> {
    v.check_exponents(q)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("scale {delta} must be positive")));
    }
    let grid_n = match scheme {
        BallScheme::Grid => Some(grid_depth(v, delta)?),
        BallScheme::Free => None,
    };
    let mut total = 0.0;
    for (g, &qj) in v.components().iter().zip(q) {
        let leaves = g.leaves();
        let depth = g.depth();
        let b = g.base();
        let mut terms = Vec::with_capacity(leaves.len());
        for (i, &m) in leaves.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let ball = match grid_n {
                Some(n) => g.cell_mass(n, i / b.pow((depth - n) as u32)),
                None => g.ball_mass(g.leaf_center(i), delta / 2.0)?,
            };
            let t = if qj == 0.0 {
                m.ln()
            } else if ball > 0.0 {
                m.ln() + qj * ball.ln()
            } else if qj < 0.0 {
                return Err(Error::ZeroMassLeaf { leaf: i });
            } else {
                f64::NEG_INFINITY
            };
            terms.push(t);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

pub fn renyi_integral(v: &VectorMeasure, q: &[f64], delta: f64, scheme: BallScheme) -> Result<f64> {
    log_renyi_integral(v, q, delta, scheme).map(f64::exp)
}

/// Which extremum a pre-measure sum approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PremeasureKind {
    /// Infimum over coverings: `H̄^{q,t}`.
    Hausdorff,
    /// Supremum over packings: `P̄^{q,t}`.
    Packing,
}

/// Per-depth `ln Π_j μ_j(cell)^{q_j}` for support cells, `-∞` elsewhere.
///
/// Built once per `q` and reused across every `t` of a bisection.
#[derive(Debug, Clone)]
pub struct CellTerms {
    pub base: usize,
    pub levels: Vec<Vec<f64>>,
}

impl CellTerms {
    pub fn new(v: &VectorMeasure, q: &[f64]) -> Result<Self> {
        v.check_exponents(q)?;
        let levels = (0..=v.depth())
            .map(|m| {
                (0..v.base().pow(m as u32))
                    .map(|c| if v.in_support(m, c) { v.log_cell_term(m, c, q) } else { f64::NEG_INFINITY })
                    .collect()
            })
            .collect();
        Ok(CellTerms { base: v.base(), levels })
    }
}

/// Grid pre-measure over the sorted rung depths `rungs` with `φ` values
/// `phis`, by dynamic programming over the cell tree: each cell of a rung
/// either takes its own ball or defers to its children, whichever is
/// smaller (Hausdorff) or larger (packing).
///
/// Returns the log sum and, if requested, per-depth counts of chosen cells.
pub fn premeasure_dp(
    terms: &CellTerms,
    rungs: &[usize],
    phis: &[f64],
    t: f64,
    kind: PremeasureKind,
    record_choice: bool,
) -> (f64, Vec<(usize, usize)>) {
    let dmin = rungs[0];
    let dmax = *rungs.last().unwrap();
    let b = terms.base;
    let tphi = |d: usize| -> Option<f64> { rungs.iter().position(|&r| r == d).map(|i| t * phis[i]) };
    let own = |d: usize, c: usize, shift: f64| -> f64 {
        let x = terms.levels[d][c];
        if x == f64::NEG_INFINITY {
            x
        } else {
            x + shift
        }
    };
    let mut best: Vec<f64> = {
        let s = tphi(dmax).unwrap();
        (0..terms.levels[dmax].len()).map(|c| own(dmax, c, s)).collect()
    };
    let mut chose_own: Vec<Vec<bool>> = vec![Vec::new(); dmax + 1];
    if record_choice {
        chose_own[dmax] = vec![true; best.len()];
    }
    for d in (dmin..dmax).rev() {
        let shift = tphi(d);
        let n_cells = terms.levels[d].len();
        let mut next = Vec::with_capacity(n_cells);
        let mut choice = Vec::new();
        for c in 0..n_cells {
            let agg = best[c * b..(c + 1) * b].iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x));
            let (val, took_own) = match shift {
                Some(s) if terms.levels[d][c] != f64::NEG_INFINITY => {
                    let mine = own(d, c, s);
                    let take = match kind {
                        PremeasureKind::Hausdorff => mine <= agg,
                        PremeasureKind::Packing => mine >= agg,
                    };
                    (if take { mine } else { agg }, take)
                }
                _ => (agg, false),
            };
            next.push(val);
            if record_choice {
                choice.push(took_own);
            }
        }
        best = next;
        if record_choice {
            chose_own[d] = choice;
        }
    }
    let log_value = best.iter().fold(f64::NEG_INFINITY, |a, &x| log_add(a, x));
    let mut counts = Vec::new();
    if record_choice {
        let mut tally = vec![0usize; dmax + 1];
        let mut stack: Vec<(usize, usize)> = (0..terms.levels[dmin].len()).map(|c| (dmin, c)).collect();
        while let Some((d, c)) = stack.pop() {
            if terms.levels[d][c] == f64::NEG_INFINITY {
                continue;
            }
            if chose_own[d][c] {
                tally[d] += 1;
            } else {
                stack.extend((0..b).map(|k| (d + 1, c * b + k)));
            }
        }
        counts = rungs.iter().map(|&d| (d, tally[d])).filter(|&(_, n)| n > 0).collect();
    }
    (log_value, counts)
}

/// `H̄^{q,t}_ε` / `P̄^{q,t}_ε` restricted to grid-aligned balls whose
/// diameters are the rung radii `rung_depths` (all `≤ ε`).
pub fn premeasure_sum(
    v: &VectorMeasure,
    q: &[f64],
    t: f64,
    kind: PremeasureKind,
    ladder: &ScaleLadder,
    rung_depths: &[usize],
    eps: f64,
) -> Result<PartitionRecord> {
    if rung_depths.is_empty() {
        return Err(Error::EmptyRungSet);
    }
    let mut rungs: Vec<Rung> = rung_depths
        .iter()
        .map(|&d| {
            ladder
                .rung(d)
                .copied()
                .ok_or_else(|| Error::Domain(format!("depth {d} is not a ladder rung")))
        })
        .collect::<Result<_>>()?;
    rungs.sort_by_key(|r| r.depth);
    rungs.dedup_by_key(|r| r.depth);
    if let Some(r) = rungs.iter().find(|r| r.radius > eps * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("rung radius {} exceeds ε = {eps}", r.radius)));
    }
    if rungs.last().unwrap().depth > v.depth() {
        return Err(Error::Domain(format!(
            "rung depth {} is finer than the measure depth {}",
            rungs.last().unwrap().depth,
            v.depth()
        )));
    }
    let terms = CellTerms::new(v, q)?;
    let depths: Vec<usize> = rungs.iter().map(|r| r.depth).collect();
    let phis: Vec<f64> = rungs.iter().map(|r| r.phi).collect();
    let (log_value, counts) = premeasure_dp(&terms, &depths, &phis, t, kind, true);
    let sum_kind = match kind {
        PremeasureKind::Hausdorff => SumKind::Hausdorff,
        PremeasureKind::Packing => SumKind::PrePacking,
    };
    Ok(PartitionRecord {
        kind: sum_kind,
        q: q.to_vec(),
        t: Some(t),
        scale: Scale::Rung(depths[0]),
        log_value,
        bias: sum_kind.bias(),
        family: Provenance::MixedCells(counts),
    })
}

/// `C_n(p) = -(1/φ(r_n)) · ln Σ_leaves ν(leaf) · Π_j μ_j(B(leaf, r_n))^{p_j}`.
pub fn moment_function(
    v: &VectorMeasure,
    nu: &GridMeasure,
    p: &[f64],
    rung: &Rung,
    scheme: BallScheme,
) -> Result<f64> {
    Ok(-log_moment_integral(v, nu, p, rung, scheme)? / rung.phi)
}

/// The log of the integral inside [`moment_function`].
pub fn log_moment_integral(
    v: &VectorMeasure,
    nu: &GridMeasure,
    p: &[f64],
    rung: &Rung,
    scheme: BallScheme,
) -> Result<f64> {
    v.check_exponents(p)?;
    if nu.base() != v.base() || nu.depth() != v.depth() {
        return Err(Error::InvalidMeasure("ν must share the grid of the vector measure".into()));
    }
    if rung.depth > v.depth() {
        return Err(Error::Domain(format!("rung depth {} finer than the measure", rung.depth)));
    }
    let depth = v.depth();
    let span = v.base().pow((depth - rung.depth) as u32);
    let leaves = nu.leaves();
    if let Some(i) = (0..leaves.len()).find(|&i| leaves[i] > 0.0 && !v.in_support(depth, i)) {
        return Err(Error::Domain(format!("ν charges leaf {i} outside supp(μ)")));
    }
    let mut terms = Vec::with_capacity(leaves.len());
    for (i, &w) in leaves.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let t = match scheme {
            BallScheme::Grid => v.log_cell_term(rung.depth, i / span, p),
            BallScheme::Free => v.log_vector_ball_mass(nu.leaf_center(i), rung.radius / 2.0, p)?,
        };
        if t == f64::INFINITY {
            return Err(Error::EmptyBall { x: nu.leaf_center(i), r: rung.radius / 2.0 });
        }
        terms.push(w.ln() + t);
    }
    let log_int = log_sum_exp(&terms);
    if log_int == f64::NEG_INFINITY {
        return Err(Error::ZeroIntegral(format!("moment integral at p = {p:?} vanishes")));
    }
    Ok(log_int)
}

/// Rows `kind,scale,q,t,log_value`; `q` is semicolon-joined and `scale` is
/// `n:<depth>` or `delta:<diameter>`.
pub fn write_records_csv<W: Write>(records: &[PartitionRecord], mut out: W) -> Result<()> {
    writeln!(out, "kind,scale,q,t,log_value")?;
    for r in records {
        let scale = match r.scale {
            Scale::Rung(n) => format!("n:{n}"),
            Scale::Diameter(d) => format!("delta:{d}"),
        };
        let q: Vec<String> = r.q.iter().map(|x| x.to_string()).collect();
        let t = r.t.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.kind.label(), scale, q.join(";"), t, r.log_value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_scale_ladder, GaugeFn, ValidationConfig};
    use crate::measure::multinomial_cascade;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn uniform(n: usize) -> VectorMeasure {
        VectorMeasure::single(GridMeasure::uniform(2, n).unwrap())
    }

    fn pair(n: usize) -> VectorMeasure {
        multinomial_cascade(2, n, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap()
    }

    fn log_ladder(n: usize) -> ScaleLadder {
        make_scale_ladder(&GaugeFn::logarithmic(), 2, n, &ValidationConfig::default()).unwrap()
    }

    #[test]
    fn covering_sum_examples() {
        let r = covering_sum(&uniform(3), &[0.0], 0.125, BallScheme::Grid).unwrap();
        assert!(close(r.value(), 8.0, 1e-14));
        assert_eq!(r.bias, Bias::Upper);
        let b = multinomial_cascade(2, 2, &[vec![0.25, 0.75]]).unwrap();
        let r = covering_sum(&b, &[2.0], 0.25, BallScheme::Grid).unwrap();
        assert!(close(r.value(), 0.390625, 1e-14));
        let r = covering_sum(&pair(1), &[1.0, 1.0], 0.5, BallScheme::Grid).unwrap();
        assert!(close(r.value(), 0.46, 1e-14));
        assert!(matches!(
            covering_sum(&uniform(3), &[0.0], 0.3, BallScheme::Grid),
            Err(Error::NotGridScale(_))
        ));
    }

    #[test]
    fn free_covering_counts_balls() {
        let r = covering_sum(&uniform(3), &[0.0], 0.125, BallScheme::Free).unwrap();
        assert!(close(r.value(), 8.0, 1e-14));
        match &r.family {
            Provenance::Balls(f) => assert_eq!(f.len(), 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn packing_sum_examples() {
        for scheme in [BallScheme::Grid, BallScheme::Free] {
            let r = packing_sum(&uniform(3), &[0.0], 0.125, scheme).unwrap();
            assert!(close(r.value(), 8.0, 1e-14), "{scheme:?}");
            assert_eq!(r.bias, Bias::Lower);
        }
        let r = packing_sum(&pair(4), &[1.5, -0.5], 1.0, BallScheme::Grid).unwrap();
        assert!(close(r.value(), 1.0, 1e-14));
        let b = multinomial_cascade(2, 2, &[vec![0.25, 0.75]]).unwrap();
        let c = covering_sum(&b, &[2.0], 0.25, BallScheme::Free).unwrap();
        let p = packing_sum(&b, &[2.0], 0.25, BallScheme::Free).unwrap();
        assert!(close(p.value(), 0.390625, 1e-14));
        assert!(close(c.value(), p.value(), 1e-14));
    }

    #[test]
    fn renyi_examples() {
        for n in 1..=6 {
            let u = uniform(n);
            let w = 2f64.powi(-(n as i32));
            for q in [-2.0, 0.5, 3.0] {
                let i = renyi_integral(&u, &[q], w, BallScheme::Free).unwrap();
                assert!(close(i, 2f64.powf(-(n as f64) * q), 1e-12), "n={n} q={q}");
            }
        }
        let v = pair(5);
        assert!(close(renyi_integral(&v, &[0.0, 0.0], 0.1, BallScheme::Free).unwrap(), 1.0, 1e-14));
        let b = multinomial_cascade(2, 1, &[vec![0.3, 0.7]]).unwrap();
        assert!(close(renyi_integral(&b, &[1.0], 0.5, BallScheme::Free).unwrap(), 0.58, 1e-14));
    }

    // direct enumeration over pairs of leaves of the product space
    fn brute_renyi(v: &VectorMeasure, q: &[f64], delta: f64) -> f64 {
        let (a, b) = (v.component(0), v.component(1));
        let mut s = 0.0;
        for i in 0..a.n_leaves() {
            for j in 0..b.n_leaves() {
                let (mi, mj) = (a.leaves()[i], b.leaves()[j]);
                if mi == 0.0 || mj == 0.0 {
                    continue;
                }
                let bi = a.ball_mass(a.leaf_center(i), delta / 2.0).unwrap();
                let bj = b.ball_mass(b.leaf_center(j), delta / 2.0).unwrap();
                s += mi * mj * bi.powf(q[0]) * bj.powf(q[1]);
            }
        }
        s
    }

    #[test]
    fn renyi_factorization_matches_product_space() {
        for n in 1..=6 {
            let v = pair(n);
            for (q, delta) in [([1.0, 1.0], 0.3), ([-1.5, 2.0], 0.05), ([0.5, -0.5], 0.011)] {
                let f = renyi_integral(&v, &q, delta, BallScheme::Free).unwrap();
                let brute = brute_renyi(&v, &q, delta);
                assert!((f - brute).abs() <= 1e-12 * brute.max(1.0), "n={n}: {f} vs {brute}");
            }
        }
    }

    #[test]
    fn premeasure_examples() {
        for n in 1..=10 {
            let u = uniform(10);
            let l = log_ladder(10);
            let r = l.rung(n).unwrap().radius;
            for kind in [PremeasureKind::Hausdorff, PremeasureKind::Packing] {
                let one = premeasure_sum(&u, &[0.0], 1.0, kind, &l, &[n], r).unwrap();
                assert!(close(one.value(), 1.0, 1e-12));
                let two = premeasure_sum(&u, &[0.0], 2.0, kind, &l, &[n], r).unwrap();
                assert!(close(two.value(), 2f64.powi(-(n as i32)), 1e-12));
            }
        }
        let v = pair(8);
        let l = log_ladder(8);
        for n in [2usize, 5] {
            let delta = l.rung(n).unwrap().radius;
            let h = premeasure_sum(&v, &[2.0, -1.0], 0.0, PremeasureKind::Hausdorff, &l, &[n], delta).unwrap();
            let c = covering_sum(&v, &[2.0, -1.0], delta, BallScheme::Grid).unwrap();
            assert!(close(h.log_value, c.log_value, 1e-12));
            let p = premeasure_sum(&v, &[2.0, -1.0], 0.0, PremeasureKind::Packing, &l, &[n], delta).unwrap();
            let s = packing_sum(&v, &[2.0, -1.0], delta, BallScheme::Grid).unwrap();
            assert!(close(p.log_value, s.log_value, 1e-12));
        }
        assert!(matches!(
            premeasure_sum(&v, &[1.0, 1.0], 0.0, PremeasureKind::Hausdorff, &l, &[], 1.0),
            Err(Error::EmptyRungSet)
        ));
        assert!(premeasure_sum(&v, &[1.0, 1.0], 0.0, PremeasureKind::Hausdorff, &l, &[2], 0.1).is_err());
    }

    #[test]
    fn premeasure_picks_extreme_rungs() {
        // Λ(0) = 1 for the uniform measure: t < 1 favours fine cells in the
        // packing sum and coarse cells in the Hausdorff sum
        let u = uniform(8);
        let l = log_ladder(8);
        let p = premeasure_sum(&u, &[0.0], 0.5, PremeasureKind::Packing, &l, &[3, 4, 5], 1.0).unwrap();
        assert_eq!(p.family, Provenance::MixedCells(vec![(5, 32)]));
        let h = premeasure_sum(&u, &[0.0], 0.5, PremeasureKind::Hausdorff, &l, &[3, 4, 5], 1.0).unwrap();
        assert_eq!(h.family, Provenance::MixedCells(vec![(3, 8)]));
        assert!(h.log_value <= p.log_value);
    }

    #[test]
    fn moment_examples() {
        let l = log_ladder(6);
        for (w0, p) in [(0.3, 0.0), (0.3, 1.5), (0.25, -2.0)] {
            let v = multinomial_cascade(2, 6, &[vec![w0, 1.0 - w0]]).unwrap();
            let expect = (w0.powf(p + 1.0) + (1.0 - w0).powf(p + 1.0)).log2();
            for rung in &l.rungs {
                let c = moment_function(&v, v.component(0), &[p], rung, BallScheme::Grid).unwrap();
                assert!((c - expect).abs() < 1e-12, "p={p} n={}", rung.depth);
            }
        }
        let u = uniform(6);
        for rung in &l.rungs {
            let c = moment_function(&u, u.component(0), &[1.0], rung, BallScheme::Grid).unwrap();
            assert!((c + 1.0).abs() < 1e-12);
        }
        let off = GridMeasure::new(2, 6, {
            let mut x = vec![0.0; 64];
            x[3] = 1.0;
            x
        })
        .unwrap();
        let narrow = VectorMeasure::single(off.clone());
        assert!(moment_function(&narrow, u.component(0), &[1.0], &l.rungs[0], BallScheme::Grid).is_err());
        assert!(moment_function(&u, &off, &[0.0], &l.rungs[2], BallScheme::Grid).unwrap().abs() < 1e-15);
    }

    #[test]
    fn grid_sums_match_closed_form() {
        let w: [[f64; 2]; 2] = [[0.3, 0.7], [0.6, 0.4]];
        for n in 1..=6 {
            let v = pair(n);
            for q in [[1.0, 1.0], [-2.0, 0.5], [3.0, -1.0]] {
                let z: f64 = (0..2).map(|i| w[0][i].powf(q[0]) * w[1][i].powf(q[1])).sum();
                let c = covering_sum(&v, &q, 2f64.powi(-(n as i32)), BallScheme::Grid).unwrap();
                assert!(close(c.value(), z.powi(n as i32), 1e-12));
            }
        }
    }

    #[test]
    fn records_csv() {
        let r = covering_sum(&pair(3), &[1.0, 2.0], 0.25, BallScheme::Grid).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.lines().nth(1).unwrap().starts_with("covering,delta:0.25,1;2,,"));
    }

    proptest! {
        #[test]
        fn sandwich_and_holder(
            w0 in 0.05f64..0.95, w1 in 0.05f64..0.95,
            q0 in 0.0f64..3.0, q1 in 0.0f64..3.0,
            delta in 0.004f64..0.6,
        ) {
            let v = multinomial_cascade(2, 6, &[vec![w0, 1.0 - w0], vec![w1, 1.0 - w1]]).unwrap();
            let q = [q0, q1];
            let c = covering_sum(&v, &q, delta, BallScheme::Free).unwrap();
            let p = packing_sum(&v, &q, delta, BallScheme::Free).unwrap();
            let xi = besicovitch_families(&v.support_leaf_centers(), delta / 2.0).count() as f64;
            prop_assert!(c.log_value <= xi.ln() + p.log_value + 1e-12);
        }

        #[test]
        fn holder_mixing_on_fixed_family(
            q in proptest::collection::vec(-3.0f64..3.0, 2),
            p in proptest::collection::vec(-3.0f64..3.0, 2),
            t in -2.0f64..2.0, s in -2.0f64..2.0, lam in 0.01f64..0.99,
        ) {
            let v = pair(7);
            let l = log_ladder(7);
            let depth = 5;
            let terms_q = CellTerms::new(&v, &q).unwrap();
            let terms_p = CellTerms::new(&v, &p).unwrap();
            let mixed: Vec<f64> = q.iter().zip(&p).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
            let terms_m = CellTerms::new(&v, &mixed).unwrap();
            let phi = l.rung(depth).unwrap().phi;
            let f = |terms: &CellTerms, tt: f64| premeasure_dp(terms, &[depth], &[phi], tt, PremeasureKind::Packing, false).0;
            let lhs = f(&terms_m, lam * t + (1.0 - lam) * s);
            let rhs = lam * f(&terms_q, t) + (1.0 - lam) * f(&terms_p, s);
            prop_assert!(lhs <= rhs + 1e-10);
        }

        #[test]
        fn covering_sum_nonincreasing_in_q(q in -3.0f64..3.0, dq in 0.0f64..2.0, delta in 0.01f64..0.5) {
            let v = pair(6);
            // on a fixed family every mass is ≤ 1
            let fam = match covering_sum(&v, &[q, 0.5], delta, BallScheme::Free).unwrap().family {
                Provenance::Balls(f) => f,
                _ => unreachable!(),
            };
            let (a, _) = family_log_sum(&v, &fam, &[q, 0.5]).unwrap();
            let (b, _) = family_log_sum(&v, &fam, &[q + dq, 0.5]).unwrap();
            prop_assert!(b <= a + 1e-12);
        }
    }
}
