//! b-adic grid measures on `[0, 1]` and k-tuples of them on a shared grid.
//!
//! A [`GridMeasure`] of base `b` and depth `n` stores the masses of its
//! `b^n` leaf cells together with every coarser aggregation level. Below
//! leaf resolution mass is spread uniformly, so ball queries are exact for
//! the piecewise-uniform approximant.

use std::io::{BufRead, Write};

use crate::numeric::compensated_sum;
use crate::{Error, Result};

/// Hard ceiling on the number of leaves any constructor will allocate.
pub const MAX_LEAVES: usize = 1 << 26;

const MASS_TOL: f64 = 1e-12;
// positions this close to a cell edge are snapped onto it
const SNAP: f64 = 1e-9;

pub fn leaf_count(base: usize, depth: usize) -> Result<usize> {
    if base < 2 {
        return Err(Error::InvalidMeasure(format!("base {base} < 2")));
    }
    if depth < 1 {
        return Err(Error::InvalidMeasure("depth must be at least 1".into()));
    }
    base.checked_pow(depth as u32)
        .filter(|&n| n <= MAX_LEAVES)
        .ok_or_else(|| {
            Error::InvalidMeasure(format!("{base}^{depth} leaves exceeds the limit of {MAX_LEAVES}"))
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    base: usize,
    depth: usize,
    /// `levels[m][c]` is the mass of depth-`m` cell `c`; `levels[depth]`
    /// holds the leaves.
    levels: Vec<Vec<f64>>,
}

impl GridMeasure {
    pub fn new(base: usize, depth: usize, leaves: Vec<f64>) -> Result<Self> {
        let n = leaf_count(base, depth)?;
        if leaves.len() != n {
            return Err(Error::InvalidMeasure(format!(
                "expected {n} leaf masses, got {}",
                leaves.len()
            )));
        }
        if let Some(i) = leaves.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidMeasure(format!("leaf {i} has mass {}", leaves[i])));
        }
        let total = compensated_sum(&leaves);
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("leaf masses sum to {total:.17}, not 1")));
        }
        Ok(Self::from_leaves_unchecked(base, depth, leaves))
    }

    fn from_leaves_unchecked(base: usize, depth: usize, leaves: Vec<f64>) -> Self {
        let mut levels = vec![Vec::new(); depth + 1];
        levels[depth] = leaves;
        for m in (0..depth).rev() {
            let parent: Vec<f64> = levels[m + 1]
                .chunks_exact(base)
                .map(|ch| ch.iter().fold(0.0, |acc, x| acc + x))
                .collect();
            levels[m] = parent;
        }
        GridMeasure { base, depth, levels }
    }

    pub fn uniform(base: usize, depth: usize) -> Result<Self> {
        let n = leaf_count(base, depth)?;
        Self::new(base, depth, vec![1.0 / n as f64; n])
    }

    /// Empirical measure of a finite multiset of points in `[0, 1]`.
    ///
    /// A point on a cell boundary belongs to the cell on its right; `1.0`
    /// belongs to the last cell.
    pub fn from_samples(points: &[f64], base: usize, depth: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no sample points".into()));
        }
        let n = leaf_count(base, depth)?;
        let mut counts = vec![0usize; n];
        for &x in points {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("sample {x} outside [0, 1]")));
            }
            counts[leaf_index_of(x, n)] += 1;
        }
        let total = points.len() as f64;
        let leaves = counts.into_iter().map(|c| c as f64 / total).collect();
        Self::new(base, depth, leaves)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaves(&self) -> &[f64] {
        &self.levels[self.depth]
    }

    pub fn n_leaves(&self) -> usize {
        self.levels[self.depth].len()
    }

    /// Masses of all depth-`m` cells.
    pub fn level(&self, m: usize) -> &[f64] {
        &self.levels[m]
    }

    pub fn cell_mass(&self, m: usize, cell: usize) -> f64 {
        self.levels[m][cell]
    }

    pub fn leaf_width(&self) -> f64 {
        1.0 / self.n_leaves() as f64
    }

    pub fn leaf_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_leaves() as f64
    }

    /// Depth-`m` cell containing `x`, with the rightward boundary rule.
    pub fn cell_of(&self, m: usize, x: f64) -> usize {
        leaf_index_of(x, self.levels[m].len())
    }

    /// Mass of leaves `lo..hi`, assembled from the coarsest cells that fit.
    pub fn range_mass(&self, lo: usize, hi: usize) -> f64 {
        fn rec(g: &GridMeasure, m: usize, cell: usize, lo: usize, hi: usize) -> f64 {
            let span = g.base.pow((g.depth - m) as u32);
            let (a, b) = (cell * span, (cell + 1) * span);
            if hi <= a || b <= lo {
                return 0.0;
            }
            if lo <= a && b <= hi {
                return g.levels[m][cell];
            }
            (0..g.base).map(|d| rec(g, m + 1, cell * g.base + d, lo, hi)).fold(0.0, |s, x| s + x)
        }
        if lo >= hi {
            return 0.0;
        }
        rec(self, 0, 0, lo, hi.min(self.n_leaves()))
    }

    /// `μ([max(0, x−r), min(1, x+r)])`, partial leaves prorated by overlap.
    pub fn ball_mass(&self, x: f64, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("ball center {x} outside [0, 1]")));
        }
        if !(r > 0.0) {
            return Err(Error::Domain(format!("ball radius {r} must be positive")));
        }
        Ok(self.interval_mass((x - r).max(0.0), (x + r).min(1.0)))
    }

    pub(crate) fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        let n = self.n_leaves();
        let leaves = self.leaves();
        let lp = snap(lo * n as f64);
        let hp = snap(hi * n as f64);
        if hp <= lp {
            return 0.0;
        }
        let il = (lp.floor() as usize).min(n - 1);
        let ih = hp.floor() as usize;
        if ih == il {
            return leaves[il] * (hp - lp);
        }
        let mut mass = leaves[il] * (il as f64 + 1.0 - lp);
        mass += self.range_mass(il + 1, ih);
        if ih < n {
            mass += leaves[ih] * (hp - ih as f64);
        }
        mass
    }
}

fn snap(p: f64) -> f64 {
    let r = p.round();
    if (p - r).abs() < SNAP {
        r
    } else {
        p
    }
}

fn leaf_index_of(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}

/// `k ≥ 1` grid measures with identical base and depth.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMeasure {
    components: Vec<GridMeasure>,
    /// `support[m][c]`: cell contains a leaf where every component is positive.
    support: Vec<Vec<bool>>,
}

impl VectorMeasure {
    pub fn new(components: Vec<GridMeasure>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidMeasure("vector measure needs k ≥ 1 components".into()))?;
        let (b, n) = (first.base, first.depth);
        if let Some(j) = components.iter().position(|c| c.base != b || c.depth != n) {
            return Err(Error::InvalidMeasure(format!(
                "component {j} has grid ({}, {}) but component 0 has ({b}, {n})",
                components[j].base, components[j].depth
            )));
        }
        let leaf_mask: Vec<bool> = (0..first.n_leaves())
            .map(|i| components.iter().all(|c| c.leaves()[i] > 0.0))
            .collect();
        let mut support = vec![Vec::new(); n + 1];
        support[n] = leaf_mask;
        for m in (0..n).rev() {
            support[m] = support[m + 1].chunks_exact(b).map(|ch| ch.iter().any(|&s| s)).collect();
        }
        Ok(VectorMeasure { components, support })
    }

    pub fn single(m: GridMeasure) -> Self {
        Self::new(vec![m]).expect("one component is always consistent")
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn base(&self) -> usize {
        self.components[0].base
    }

    pub fn depth(&self) -> usize {
        self.components[0].depth
    }

    pub fn n_leaves(&self) -> usize {
        self.components[0].n_leaves()
    }

    pub fn components(&self) -> &[GridMeasure] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &GridMeasure {
        &self.components[j]
    }

    pub fn in_support(&self, m: usize, cell: usize) -> bool {
        self.support[m][cell]
    }

    /// Depth-`m` cells meeting the support.
    pub fn support_cells(&self, m: usize) -> Vec<usize> {
        (0..self.support[m].len()).filter(|&c| self.support[m][c]).collect()
    }

    /// Centers of leaves where every component is positive.
    pub fn support_leaf_centers(&self) -> Vec<f64> {
        let g = &self.components[0];
        self.support_cells(self.depth()).into_iter().map(|i| g.leaf_center(i)).collect()
    }

    pub fn check_exponents(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.k() {
            return Err(Error::Domain(format!(
                "exponent vector has length {} but the measure has k = {}",
                q.len(),
                self.k()
            )));
        }
        Ok(())
    }

    /// `ln Π_j μ_j(cell)^{q_j}` for a depth-`m` cell; `q_j = 0` contributes 0.
    pub fn log_cell_term(&self, m: usize, cell: usize, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, &qj) in self.components.iter().zip(q) {
            if qj != 0.0 {
                let mass = c.levels[m][cell];
                acc += if mass > 0.0 {
                    qj * mass.ln()
                } else if qj > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                };
            }
        }
        acc
    }

    /// `ln Π_j μ_j(B(x, r))^{q_j}`.
    pub fn log_vector_ball_mass(&self, x: f64, r: f64, q: &[f64]) -> Result<f64> {
        self.check_exponents(q)?;
        let mut acc = 0.0;
        for (c, &qj) in self.components.iter().zip(q) {
            if qj == 0.0 {
                continue;
            }
            let m = c.ball_mass(x, r)?;
            if m > 0.0 {
                acc += qj * m.ln();
            } else if qj < 0.0 {
                return Err(Error::EmptyBall { x, r });
            } else {
                return Ok(f64::NEG_INFINITY);
            }
        }
        Ok(acc)
    }

    /// `Π_j μ_j(B(x, r))^{q_j}`.
    pub fn vector_ball_mass(&self, x: f64, r: f64, q: &[f64]) -> Result<f64> {
        self.log_vector_ball_mass(x, r, q).map(f64::exp)
    }
}

/// Cascade with `μ_j(leaf) = Π_digits weights[j][digit]`.
pub fn multinomial_cascade(base: usize, depth: usize, weights: &[Vec<f64>]) -> Result<VectorMeasure> {
    let n = leaf_count(base, depth)?;
    if weights.is_empty() {
        return Err(Error::InvalidMeasure("no weight rows".into()));
    }
    check_weight_rows(base, weights)?;
    let components = weights
        .iter()
        .map(|row| {
            let mut cells = vec![1.0f64];
            for _ in 0..depth {
                let mut next = Vec::with_capacity(cells.len() * base);
                for &m in &cells {
                    next.extend(row.iter().map(|w| m * w));
                }
                cells = next;
            }
            debug_assert_eq!(cells.len(), n);
            GridMeasure::new(base, depth, cells)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorMeasure::new(components)
}

pub fn check_weight_rows(base: usize, weights: &[Vec<f64>]) -> Result<()> {
    for (j, row) in weights.iter().enumerate() {
        if row.len() != base {
            return Err(Error::InvalidMeasure(format!(
                "weight row {j} has {} entries, base is {base}",
                row.len()
            )));
        }
        if let Some(w) = row.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight row {j} has negative entry {w}")));
        }
        let s = compensated_sum(row);
        if (s - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("weight row {j} sums to {s}, not 1")));
        }
    }
    Ok(())
}

/// Header `b n k`, then `b^n` rows of `k` comma-separated leaf masses with
/// 17 significant digits.
pub fn write_measure<W: Write>(v: &VectorMeasure, mut out: W) -> Result<()> {
    writeln!(out, "{} {} {}", v.base(), v.depth(), v.k())?;
    let mut line = String::new();
    for i in 0..v.n_leaves() {
        line.clear();
        for (j, c) in v.components().iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", c.leaves()[i]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_measure<R: BufRead>(input: R) -> Result<VectorMeasure> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty measure file".into()))?;
    let header = header?;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad header {header:?}, expected `b n k`")))?;
    let [b, n, k] = fields[..] else {
        return Err(Error::Parse(format!("bad header {header:?}, expected `b n k`")));
    };
    if k == 0 {
        return Err(Error::Parse("header declares k = 0".into()));
    }
    let count = leaf_count(b, n).map_err(|e| Error::Parse(e.to_string()))?;
    let mut cols = vec![Vec::with_capacity(count); k];
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("line {}: bad number in {line:?}", lineno + 1)))?;
        if vals.len() != k {
            return Err(Error::Parse(format!(
                "line {}: expected {k} columns, got {}",
                lineno + 1,
                vals.len()
            )));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    if cols[0].len() != count {
        return Err(Error::Parse(format!("expected {count} leaf rows, got {}", cols[0].len())));
    }
    let comps = cols
        .into_iter()
        .map(|leaves| GridMeasure::new(b, n, leaves))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Parse(e.to_string()))?;
    VectorMeasure::new(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cascade_leaves() {
        let v = multinomial_cascade(2, 1, &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(v.component(0).leaves(), &[0.3, 0.7]);
        let v = multinomial_cascade(2, 2, &[vec![0.3, 0.7]]).unwrap();
        let expect = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in v.component(0).leaves().iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
        let v = multinomial_cascade(2, 1, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert_eq!(v.k(), 2);
        assert_eq!(v.component(1).leaves(), &[0.6, 0.4]);
    }

    #[test]
    fn cascade_rejects_bad_rows() {
        assert!(multinomial_cascade(2, 3, &[vec![0.5, 0.4]]).is_err());
        assert!(multinomial_cascade(2, 3, &[vec![1.2, -0.2]]).is_err());
        let e = multinomial_cascade(2, 3, &[vec![0.5, 0.5], vec![0.5, 0.4]]).unwrap_err();
        assert!(e.to_string().contains("row 1"), "{e}");
    }

    #[test]
    fn cascade_cells_match_digit_products() {
        let w = [0.2, 0.5, 0.3];
        let v = multinomial_cascade(3, 8, &[w.to_vec()]).unwrap();
        let g = v.component(0);
        for m in 0..=8usize {
            for cell in (0..3usize.pow(m as u32)).step_by(37) {
                let mut prod = 1.0;
                let mut c = cell;
                for _ in 0..m {
                    prod *= w[c % 3];
                    c /= 3;
                }
                assert!(close(g.cell_mass(m, cell), prod, 1e-12), "m={m} cell={cell}");
            }
        }
    }

    #[test]
    fn samples() {
        let g = GridMeasure::from_samples(&[0.1, 0.9], 2, 1).unwrap();
        assert_eq!(g.leaves(), &[0.5, 0.5]);
        let g = GridMeasure::from_samples(&[0.5], 2, 1).unwrap();
        assert_eq!(g.leaves(), &[0.0, 1.0]);
        let g = GridMeasure::from_samples(&[0.2, 0.2, 0.8, 0.9], 2, 2).unwrap();
        assert_eq!(g.leaves(), &[0.5, 0.0, 0.0, 0.5]);
        let g = GridMeasure::from_samples(&[1.0, 0.0], 2, 2).unwrap();
        assert_eq!(g.leaves(), &[0.5, 0.0, 0.0, 0.5]);
        assert!(GridMeasure::from_samples(&[], 2, 2).is_err());
        assert!(GridMeasure::from_samples(&[1.5], 2, 2).is_err());
    }

    #[test]
    fn ball_masses() {
        let u = GridMeasure::uniform(2, 3).unwrap();
        assert!(close(u.ball_mass(0.5, 0.25).unwrap(), 0.5, 1e-15));
        let b = multinomial_cascade(2, 1, &[vec![0.3, 0.7]]).unwrap();
        let g = b.component(0);
        assert!(close(g.ball_mass(0.25, 0.25).unwrap(), 0.3, 1e-15));
        assert!(close(g.ball_mass(0.5, 0.25).unwrap(), 0.5, 1e-15));
        assert!(close(g.ball_mass(0.0, 10.0).unwrap(), 1.0, 1e-15));
        assert!(g.ball_mass(0.5, 0.0).is_err());
        assert!(g.ball_mass(-0.1, 0.1).is_err());
    }

    #[test]
    fn vector_ball_masses() {
        let v = multinomial_cascade(2, 1, &[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert_eq!(v.vector_ball_mass(0.3, 0.1, &[0.0, 0.0]).unwrap(), 1.0);
        assert!(close(v.vector_ball_mass(0.25, 0.25, &[1.0, 1.0]).unwrap(), 0.18, 1e-15));
        assert!(close(v.vector_ball_mass(0.25, 0.25, &[2.0, -1.0]).unwrap(), 0.15, 1e-15));
        assert!(v.vector_ball_mass(0.25, 0.25, &[1.0]).is_err());

        let atom = GridMeasure::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let v = VectorMeasure::single(atom);
        assert_eq!(v.vector_ball_mass(0.875, 0.1, &[1.0]).unwrap(), 0.0);
        assert!(matches!(v.vector_ball_mass(0.875, 0.1, &[-1.0]), Err(Error::EmptyBall { .. })));
    }

    #[test]
    fn support_is_intersection() {
        let a = GridMeasure::new(2, 2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let b = GridMeasure::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let v = VectorMeasure::new(vec![a, b]).unwrap();
        assert_eq!(v.support_cells(2), vec![1]);
        assert_eq!(v.support_cells(1), vec![0]);
        assert_eq!(v.support_leaf_centers(), vec![0.375]);
        let c = GridMeasure::uniform(2, 3).unwrap();
        let d = GridMeasure::uniform(3, 2).unwrap();
        assert!(VectorMeasure::new(vec![c, d]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let v = multinomial_cascade(3, 3, &[vec![0.2, 0.5, 0.3], vec![0.1, 0.1, 0.8]]).unwrap();
        let mut buf = Vec::new();
        write_measure(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 3 2\n"));
        assert_eq!(text.lines().count(), 28);
        let back = read_measure(&buf[..]).unwrap();
        assert_eq!(back, v);
        assert!(read_measure(&b"2 1 1\n0.5\n"[..]).is_err());
        assert!(read_measure(&b"2 1\n0.5\n0.5\n"[..]).is_err());
        assert!(read_measure(&b"2 1 1\n0.5\nabc\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn leaf_balls_conserve_mass(w0 in 0.01f64..0.99, depth in 1usize..9) {
            let v = multinomial_cascade(2, depth, &[vec![w0, 1.0 - w0]]).unwrap();
            let g = v.component(0);
            let half = g.leaf_width() / 2.0;
            let masses: Vec<f64> =
                (0..g.n_leaves()).map(|i| g.ball_mass(g.leaf_center(i), half).unwrap()).collect();
            prop_assert!((compensated_sum(&masses) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn ball_mass_monotone_in_radius(x in 0.0f64..1.0, r1 in 1e-4f64..0.6, dr in 0.0f64..0.4) {
            let v = multinomial_cascade(3, 5, &[vec![0.2, 0.5, 0.3]]).unwrap();
            let g = v.component(0);
            prop_assert!(g.ball_mass(x, r1).unwrap() <= g.ball_mass(x, r1 + dr).unwrap() + 1e-15);
        }

        #[test]
        fn prefix_levels_sum_children(ws in proptest::collection::vec(0.0f64..1.0, 8)) {
            let s: f64 = ws.iter().sum::<f64>() + 1e-9;
            let mut leaves: Vec<f64> = ws.iter().map(|w| (w + 1e-9 / 8.0) / s).collect();
            let total: f64 = leaves.iter().sum();
            leaves.iter_mut().for_each(|x| *x /= total);
            if let Ok(g) = GridMeasure::new(2, 3, leaves) {
                for m in 0..3 {
                    for c in 0..g.level(m).len() {
                        prop_assert_eq!(g.cell_mass(m, c), g.cell_mass(m + 1, 2 * c) + g.cell_mass(m + 1, 2 * c + 1));
                    }
                }
            }
        }
    }
}
