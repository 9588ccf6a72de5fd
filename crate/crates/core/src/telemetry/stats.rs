//! Correlation, association and sign tests.

use alloc::vec::Vec;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("correlation undefined: a sample has zero variance")]
    ZeroVariance,
    #[error("table is degenerate: a row or column sums to zero")]
    DegenerateTable,
    #[error("table rows differ in length")]
    RaggedTable,
    #[error("{k} successes out of {n} trials")]
    BadCounts { k: u64, n: u64 },
    #[error("a sample is constant; tau undefined")]
    AllTied,
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    Ok(())
}

/// Sample (Pearson) correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub chi2: f64,
    pub df: u64,
    pub cramers_v: f64,
}

/// Pearson's χ² test of independence on an r×c table of counts, with
/// Cramér's V as effect size.
pub fn chi_square_cramers_v(table: &[Vec<u64>]) -> Result<ChiSquare, StatsError> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if table.iter().any(|row| row.len() != c) {
        return Err(StatsError::RaggedTable);
    }
    if r < 2 || c < 2 {
        return Err(StatsError::DegenerateTable);
    }
    let rows: Vec<f64> = table.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum::<u64>() as f64).collect();
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return Err(StatsError::DegenerateTable);
    }
    let n: f64 = rows.iter().sum();
    let mut chi2 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            let d = o as f64 - e;
            chi2 += d * d / e;
        }
    }
    let k = (r.min(c) - 1) as f64;
    Ok(ChiSquare { chi2, df: ((r - 1) * (c - 1)) as u64, cramers_v: libm::sqrt(chi2 / (n * k)) })
}

/// P(X ≥ m) for X ~ Binomial(n, 1/2).
fn binomial_upper_tail(m: u64, n: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > n {
        return 0.0;
    }
    let ln2 = core::f64::consts::LN_2;
    let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
    let ln_pmf = |i: u64| lg(n) - lg(i) - lg(n - i) - n as f64 * ln2;
    if n <= 1000 {
        // Walk down from the largest term with exact ratios.
        let mut term = libm::exp(ln_pmf(m));
        let mut sum = 0.0;
        let mut terms = Vec::with_capacity((n - m + 1) as usize);
        for i in m..=n {
            terms.push(term);
            term *= (n - i) as f64 / (i + 1) as f64;
        }
        for t in terms.iter().rev() {
            sum += t;
        }
        sum
    } else {
        let mut sum = 0.0;
        for i in (m..=n).rev() {
            sum += libm::exp(ln_pmf(i));
        }
        sum
    }
}

/// Two-sided exact sign test: p = min(1, 2·P(X ≥ max(k, n−k))).
pub fn sign_test(k: u64, n: u64) -> Result<f64, StatsError> {
    if n == 0 || k > n {
        return Err(StatsError::BadCounts { k, n });
    }
    let m = k.max(n - k);
    Ok((2.0 * binomial_upper_tail(m, n)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KendallTau {
    pub tau: f64,
    pub p: f64,
    pub exact: bool,
}

fn sign(a: f64, b: f64) -> i64 {
    match a.partial_cmp(&b) {
        Some(core::cmp::Ordering::Less) => -1,
        Some(core::cmp::Ordering::Greater) => 1,
        _ => 0,
    }
}

/// S = concordant − discordant, and the tied-pair counts of x and y.
fn pair_counts(xs: &[f64], ys: &[f64]) -> (i64, u64, u64) {
    let (mut s, mut tx, mut ty) = (0i64, 0u64, 0u64);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let (a, b) = (sign(xs[i], xs[j]), sign(ys[i], ys[j]));
            s += a * b;
            tx += u64::from(a == 0);
            ty += u64::from(b == 0);
        }
    }
    (s, tx, ty)
}

fn tie_groups(v: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            groups.push((j - i) as f64);
        }
        i = j;
    }
    groups
}

/// Exact null distribution of S without ties: the number of permutations
/// of n items with each count of inversions.
fn inversion_counts(n: usize) -> Vec<f64> {
    let mut dist = alloc::vec![1.0f64];
    for k in 2..=n {
        let mut next = alloc::vec![0.0; dist.len() + k - 1];
        for (i, &d) in dist.iter().enumerate() {
            for slot in &mut next[i..i + k] {
                *slot += d;
            }
        }
        dist = next;
    }
    dist
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else { return false };
    let j = p.iter().rposition(|&x| x > p[i]).expect("a larger element exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Kendall's τ-b with tie correction. The two-sided p is exact (by
/// permutation) for n ≤ 10 and from the normal approximation above.
pub fn kendall_tau(xs: &[f64], ys: &[f64]) -> Result<KendallTau, StatsError> {
    check_pair(xs, ys)?;
    let n = xs.len();
    let pairs = (n * (n - 1) / 2) as f64;
    let (s, tx, ty) = pair_counts(xs, ys);
    let denom = libm::sqrt((pairs - tx as f64) * (pairs - ty as f64));
    if denom == 0.0 {
        return Err(StatsError::AllTied);
    }
    let tau = (s as f64 / denom).clamp(-1.0, 1.0);
    let abs_s = s.unsigned_abs();

    if n <= 10 {
        let p = if tx == 0 && ty == 0 {
            // Each inversion count d gives S = pairs − 2d.
            let dist = inversion_counts(n);
            let total: f64 = dist.iter().sum();
            let hits: f64 = dist
                .iter()
                .enumerate()
                .filter(|(d, _)| (pairs as i64 - 2 * *d as i64).unsigned_abs() >= abs_s)
                .map(|(_, c)| c)
                .sum();
            hits / total
        } else {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut permuted = alloc::vec![0.0; n];
            let (mut hits, mut total) = (0u64, 0u64);
            loop {
                for (slot, &i) in permuted.iter_mut().zip(&perm) {
                    *slot = ys[i];
                }
                if pair_counts(xs, &permuted).0.unsigned_abs() >= abs_s {
                    hits += 1;
                }
                total += 1;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            hits as f64 / total as f64
        };
        return Ok(KendallTau { tau, p: p.min(1.0), exact: true });
    }

    let nf = n as f64;
    let gx = tie_groups(xs);
    let gy = tie_groups(ys);
    let v = |g: &[f64]| g.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum::<f64>();
    let t1 = |g: &[f64]| g.iter().map(|t| t * (t - 1.0)).sum::<f64>();
    let t2 = |g: &[f64]| g.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum::<f64>();
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - v(&gx) - v(&gy)) / 18.0
        + t2(&gx) * t2(&gy) / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
        + t1(&gx) * t1(&gy) / (2.0 * nf * (nf - 1.0));
    let z = s as f64 / libm::sqrt(var);
    let p = libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2);
    Ok(KendallTau { tau, p: p.min(1.0), exact: false })
}
