//! Deterministic reductions.
//!
//! Every reduction here splits its input along a tree whose shape depends
//! only on the input length, so the result is bit-identical whatever the
//! size of the rayon pool.

/// Slices at or below this length are reduced sequentially.
pub const LEAF_CHUNK: usize = 2048;

/// Neumaier-compensated sum in index order.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn log_sum_exp_chunk(xs: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() {
            return f64::NAN;
        }
        if x > max {
            max = x;
        }
    }
    if max.is_infinite() {
        return max;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let e = (x - max).exp();
        let t = sum + e;
        if sum >= e {
            comp += (sum - t) + e;
        } else {
            comp += (e - t) + sum;
        }
        sum = t;
    }
    max + (sum + comp).ln()
}

/// `ln Σ exp(x_i)`, reduced over a fixed pairwise tree.
///
/// Returns `-∞` for an empty slice or when every entry is `-∞`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF_CHUNK {
        return log_sum_exp_chunk(xs);
    }
    let mid = split_point(xs.len());
    let (l, r) = xs.split_at(mid);
    let (a, b) = rayon::join(|| log_sum_exp(l), || log_sum_exp(r));
    log_add(a, b)
}

/// Map then log-sum-exp over `0..n`, with the same fixed tree as
/// [`log_sum_exp`].
pub fn log_sum_exp_map<F>(n: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
        let len = hi - lo;
        if len <= LEAF_CHUNK {
            let buf: Vec<f64> = (lo..hi).map(f).collect();
            return log_sum_exp_chunk(&buf);
        }
        let mid = lo + split_point(len);
        let (a, b) = rayon::join(|| rec(lo, mid, f), || rec(mid, hi, f));
        log_add(a, b)
    }
    rec(0, n, f)
}

/// Max over `0..n` of a fallible map, parallel over a fixed tree.
pub fn max_map<F>(n: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= LEAF_CHUNK {
            return (lo..hi).map(f).fold(f64::NEG_INFINITY, f64::max);
        }
        let mid = lo + split_point(hi - lo);
        let (a, b) = rayon::join(|| rec(lo, mid, f), || rec(mid, hi, f));
        a.max(b)
    }
    rec(0, n, f)
}

// Largest multiple of LEAF_CHUNK not exceeding half, so leaves stay full.
fn split_point(len: usize) -> usize {
    let half = len / 2;
    let aligned = (half / LEAF_CHUNK) * LEAF_CHUNK;
    if aligned == 0 {
        half
    } else {
        aligned
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
///
/// Returns `(slope, intercept, r²)`; `r²` is 1 when `y` is constant.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mx = compensated_sum(&xs) / n;
    let my = compensated_sum(&ys) / n;
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let sxy: Vec<f64> = points.iter().map(|(x, y)| (x - mx) * (y - my)).collect();
    let syy: Vec<f64> = ys.iter().map(|y| (y - my) * (y - my)).collect();
    let sxx = compensated_sum(&sxx);
    let sxy = compensated_sum(&sxy);
    let syy = compensated_sum(&syy);
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= 1e-300 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Numerical tail-summability test for a positive series given by its
/// first terms.
///
/// The last two terms give a ratio `ρ`; the tail is bounded by the
/// geometric remainder `term·ρ/(1−ρ)`, which must be within `rel_tol` of
/// the partial sum. `ρ ≥ 1` fails.
pub fn geometric_tail_ok(terms: &[f64], rel_tol: f64) -> bool {
    if terms.len() < 2 {
        return false;
    }
    let last = terms[terms.len() - 1];
    let prev = terms[terms.len() - 2];
    if !(last.is_finite() && prev.is_finite()) || prev <= 0.0 {
        return false;
    }
    let ratio = last / prev;
    if ratio >= 1.0 {
        return false;
    }
    let tail = last * ratio / (1.0 - ratio);
    let partial = compensated_sum(terms);
    tail <= rel_tol * partial
}
