//! Small goodness-of-fit helpers used by the statistical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// 95% normal-approximation half-width of a Bernoulli mean.
pub fn binomial_ci_halfwidth(p_hat: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
}

/// Asymptotic Kolmogorov survival function `Q(lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    KsResult { statistic: d, p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d) }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    KsResult { statistic: d, p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d) }
}

/// Pearson chi-square test of observed counts against expected counts.
/// Returns `(statistic, p_value)` with `dof = bins - 1 - fitted`.
pub fn chi_square(observed: &[u64], expected: &[f64], fitted: usize) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1 - fitted) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat);
    (stat, p)
}

/// Chi-square test of counts against `Poisson(mean)`. Bins run over
/// `0, 1, ...` and are merged until every expected count is at least 5; the
/// last bin collects the upper tail.
pub fn poisson_chi_square(counts: &[u64], mean: f64) -> (f64, f64) {
    let total = counts.len() as f64;
    // [lo, hi) value ranges
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut expected = Vec::new();
    let mut pmf = (-mean).exp();
    let mut cdf = 0.0;
    let (mut lo, mut acc) = (0u64, 0.0);
    let mut v = 0u64;
    loop {
        acc += pmf;
        cdf += pmf;
        v += 1;
        pmf *= mean / v as f64;
        let tail = 1.0 - cdf;
        if acc * total >= 5.0 && tail * total >= 5.0 {
            bins.push((lo, v));
            expected.push(acc * total);
            lo = v;
            acc = 0.0;
        } else if tail * total < 5.0 {
            bins.push((lo, u64::MAX));
            expected.push((acc + tail) * total);
            break;
        }
    }
    let observed: Vec<u64> = bins.iter().map(|&(a, b)| counts.iter().filter(|&&c| c >= a && c < b).count() as u64).collect();
    chi_square(&observed, &expected, 0)
}

/// Sample mean and the 95% half-width of the mean.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}
