//! Centered equal-radius coverings, packings and Besicovitch-style
//! decompositions on the line.

use std::io::Write;

use serde::Serialize;

use crate::Result;

/// Tangency slack for center comparisons on `[0, 1]`.
pub const TOUCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Covering,
    Packing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallFamily {
    pub centers: Vec<f64>,
    pub radius: f64,
    pub kind: FamilyKind,
}

impl BallFamily {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Every target lies within the radius of some center.
    pub fn covers(&self, targets: &[f64]) -> bool {
        let mut cs = self.centers.clone();
        cs.sort_by(f64::total_cmp);
        targets.iter().all(|&p| {
            let i = cs.partition_point(|&c| c < p);
            let near = [i.checked_sub(1), Some(i)]
                .into_iter()
                .flatten()
                .filter_map(|j| cs.get(j))
                .any(|&c| (p - c).abs() <= self.radius + TOUCH_EPS);
            near
        })
    }

    /// Pairwise center distances are at least twice the radius.
    pub fn is_disjoint(&self) -> bool {
        let mut cs = self.centers.clone();
        cs.sort_by(f64::total_cmp);
        cs.windows(2).all(|w| disjoint(w[0], w[1], self.radius))
    }

    /// Every center is one of the targets.
    pub fn centered_on(&self, targets: &[f64]) -> bool {
        self.centers.iter().all(|c| targets.contains(c))
    }
}

#[inline]
fn disjoint(a: f64, b: f64, radius: f64) -> bool {
    (b - a).abs() >= 2.0 * radius - TOUCH_EPS
}

fn sorted(targets: &[f64]) -> Vec<f64> {
    let mut t = targets.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Minimum-cardinality centered covering.
///
/// Sweeping left to right, the leftmost uncovered target `p` is covered by
/// the ball on the rightmost target within `radius` of `p`.
pub fn centered_covering(targets: &[f64], radius: f64) -> BallFamily {
    let t = sorted(targets);
    let mut centers = Vec::new();
    let mut i = 0;
    while i < t.len() {
        let p = t[i];
        let mut j = i;
        while j + 1 < t.len() && t[j + 1] <= p + radius + TOUCH_EPS {
            j += 1;
        }
        let c = t[j];
        centers.push(c);
        i = j + 1;
        while i < t.len() && t[i] <= c + radius + TOUCH_EPS {
            i += 1;
        }
    }
    BallFamily { centers, radius, kind: FamilyKind::Covering }
}

/// Maximum-cardinality centered packing (tangent balls allowed).
pub fn centered_packing(targets: &[f64], radius: f64) -> BallFamily {
    let t = sorted(targets);
    let mut centers: Vec<f64> = Vec::new();
    for &p in &t {
        if centers.last().is_none_or(|&c| disjoint(c, p, radius)) {
            centers.push(p);
        }
    }
    BallFamily { centers, radius, kind: FamilyKind::Packing }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesicovitchDecomposition {
    pub families: Vec<BallFamily>,
}

impl BesicovitchDecomposition {
    /// Number of families, the empirical Besicovitch constant.
    pub fn count(&self) -> usize {
        self.families.len()
    }

    pub fn union(&self) -> Vec<f64> {
        self.families.iter().flat_map(|f| f.centers.iter().cloned()).collect()
    }

    /// One row `center,radius,family` per ball.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "center,radius,family")?;
        for (id, fam) in self.families.iter().enumerate() {
            for c in &fam.centers {
                writeln!(out, "{c},{},{id}", fam.radius)?;
            }
        }
        Ok(())
    }
}

/// Extracts a covering subfamily of the balls `B(c, radius)` and splits it
/// into pairwise-disjoint families by first-fit coloring in left-to-right
/// order.
pub fn besicovitch_families(centers: &[f64], radius: f64) -> BesicovitchDecomposition {
    let cover = centered_covering(centers, radius);
    let mut families: Vec<BallFamily> = Vec::new();
    for &c in &cover.centers {
        // balls arrive sorted, so only the last ball of each family can clash
        match families.iter_mut().find(|f| disjoint(*f.centers.last().unwrap(), c, radius)) {
            Some(f) => f.centers.push(c),
            None => families.push(BallFamily { centers: vec![c], radius, kind: FamilyKind::Packing }),
        }
    }
    BesicovitchDecomposition { families }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // brute force over subsets, for small target sets
    fn min_cover_size(t: &[f64], r: f64) -> usize {
        let n = t.len();
        (1u32..(1 << n))
            .filter(|mask| {
                let cs: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| t[i]).collect();
                BallFamily { centers: cs, radius: r, kind: FamilyKind::Covering }.covers(t)
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    fn max_pack_size(t: &[f64], r: f64) -> usize {
        let n = t.len();
        (1u32..(1 << n))
            .filter(|mask| {
                let cs: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| t[i]).collect();
                BallFamily { centers: cs, radius: r, kind: FamilyKind::Packing }.is_disjoint()
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn covering_examples() {
        let c = centered_covering(&[0.1, 0.2, 0.9], 0.15);
        assert_eq!(c.len(), 2);
        assert_eq!(min_cover_size(&[0.1, 0.2, 0.9], 0.15), 2);
        assert!(c.covers(&[0.1, 0.2, 0.9]));
        assert_eq!(centered_covering(&[0.5], 3.0).centers, vec![0.5]);
        let leaves: Vec<f64> = (0..8).map(|k| k as f64 / 8.0 + 1.0 / 16.0).collect();
        assert_eq!(centered_covering(&leaves, 1.0 / 16.0).centers, leaves);
    }

    #[test]
    fn packing_examples() {
        assert_eq!(centered_packing(&[0.0, 0.5, 1.0], 0.25).centers, vec![0.0, 0.5, 1.0]);
        let p = centered_packing(&[0.0, 0.1, 0.2], 0.15);
        assert_eq!(p.centers, vec![0.0]);
        assert_eq!(max_pack_size(&[0.0, 0.1, 0.2], 0.15), 1);
        assert_eq!(centered_packing(&[0.5], 10.0).centers, vec![0.5]);
    }

    #[test]
    fn besicovitch_examples() {
        let d = besicovitch_families(&[0.0, 0.5, 1.0], 0.25);
        assert_eq!(d.count(), 1);
        let d = besicovitch_families(&[0.0, 0.2, 0.4], 0.15);
        assert_eq!(d.count(), 2);
        assert_eq!(d.families[0].centers, vec![0.0, 0.4]);
        assert_eq!(d.families[1].centers, vec![0.2]);
        assert_eq!(besicovitch_families(&[0.3], 0.5).count(), 1);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    proptest! {
        #[test]
        fn greedy_is_optimal(t in proptest::collection::vec(0.0f64..1.0, 1..10), r in 0.01f64..0.4) {
            let c = centered_covering(&t, r);
            prop_assert!(c.covers(&t));
            prop_assert!(c.centered_on(&t));
            prop_assert_eq!(c.len(), min_cover_size(&sorted(&t), r));
            let p = centered_packing(&t, r);
            prop_assert!(p.is_disjoint());
            prop_assert_eq!(p.len(), max_pack_size(&sorted(&t), r));
        }

        #[test]
        fn two_families_suffice(t in proptest::collection::vec(0.0f64..1.0, 1..80), r in 1e-3f64..0.5) {
            let d = besicovitch_families(&t, r);
            prop_assert!(d.count() <= 2);
            prop_assert!(d.families.iter().all(|f| f.is_disjoint() && f.centered_on(&t)));
            let u = BallFamily { centers: d.union(), radius: r, kind: FamilyKind::Covering };
            prop_assert!(u.covers(&t));
        }
    }
}
