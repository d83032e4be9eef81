//! Small numeric helpers shared by the fitness, pipeline and evaluation code.

use libm::{exp, lgamma, sqrt};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    sqrt(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64)
}

/// Root mean square, the second moment about zero.
pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    sqrt(xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64)
}

/// Pearson correlation; 0 when either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let (ma, mb) = (mean(&a[..n]), mean(&b[..n]));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / sqrt(saa * sbb)).clamp(-1.0, 1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// P(X = k) for X ~ Binomial(n, 1/2).
pub fn binomial_half_pmf(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    exp(ln_choose(n, k) - n as f64 * core::f64::consts::LN_2)
}

/// P(X >= k) for X ~ Binomial(n, 1/2), summed exactly over the upper tail.
pub fn binomial_half_tail_ge(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // Sum from the far end so small terms accumulate first.
    let mut total = 0.0;
    for i in (k..=n).rev() {
        total += binomial_half_pmf(n, i);
    }
    total.min(1.0)
}

/// P(X <= k) for X ~ Binomial(n, 1/2).
pub fn binomial_half_cdf(n: u64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    // Symmetry: P(X <= k) = P(X >= n - k).
    binomial_half_tail_ge(n, n - k)
}
