//! Statistical comparators: Pearson chi-square (goodness of fit, homogeneity,
//! independence) and Kolmogorov–Smirnov (one- and two-sample).

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_CELL: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Pooled cells as `(first outcome, observed, expected)`; the last cell
    /// absorbs the upper tail.
    pub cells: Vec<(usize, f64, f64)>,
}

fn chi_square_sf(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Statistics(e.to_string()))?;
    Ok(dist.sf(statistic))
}

/// Group consecutive outcomes so every group's expected count reaches
/// `min_cell`; a short final group joins its predecessor.
fn pool(expected: &[f64], min_cell: f64) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut mass = 0.0;
    for (k, &e) in expected.iter().enumerate() {
        mass += e;
        if mass >= min_cell {
            groups.push((start, k + 1));
            start = k + 1;
            mass = 0.0;
        }
    }
    if start < expected.len() {
        match groups.last_mut() {
            Some(last) => last.1 = expected.len(),
            None => groups.push((start, expected.len())),
        }
    }
    groups
}

/// Pearson goodness of fit of integer counts `observed[k]` against `pmf`.
/// Outcomes past the histogram are represented by a tail cell with
/// probability `1 − Σ_{k<K} pmf(k)`.
pub fn chi_square_gof<F>(observed: &[u64], pmf: F, min_cell: f64) -> Result<ChiSquareReport>
where
    F: Fn(usize) -> Result<f64>,
{
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Statistics("empty histogram".into()));
    }
    let n = total as f64;
    let mut probs = Vec::with_capacity(observed.len() + 1);
    for k in 0..observed.len() {
        probs.push(pmf(k)?);
    }
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    probs.push(tail);
    let mut obs: Vec<f64> = observed.iter().map(|&c| c as f64).collect();
    obs.push(0.0);
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    chi_square_cells(&obs, &expected, min_cell, 1)
}

/// Pearson statistic over pooled cells; `constraints` is subtracted from the
/// cell count to get the degrees of freedom.
pub fn chi_square_cells(
    observed: &[f64],
    expected: &[f64],
    min_cell: f64,
    constraints: usize,
) -> Result<ChiSquareReport> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let groups = pool(expected, min_cell);
    if groups.len() < 2 {
        return Err(Error::Statistics(format!(
            "only {} cell(s) left after pooling to expected count {min_cell}",
            groups.len()
        )));
    }
    let mut statistic = 0.0;
    let mut cells = Vec::with_capacity(groups.len());
    for &(a, b) in &groups {
        let o: f64 = observed[a..b].iter().sum();
        let e: f64 = expected[a..b].iter().sum();
        if e <= 0.0 {
            if o > 0.0 {
                statistic = f64::INFINITY;
            }
        } else {
            statistic += (o - e) * (o - e) / e;
        }
        cells.push((a, o, e));
    }
    let dof = groups.len().saturating_sub(constraints).max(1);
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
        cells,
    })
}

/// Two-sample chi-square homogeneity test of two count histograms.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_cell: f64) -> Result<ChiSquareReport> {
    let len = a.len().max(b.len());
    let get = |v: &[u64], k: usize| v.get(k).copied().unwrap_or(0) as f64;
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Statistics("empty histogram".into()));
    }
    let pooled: Vec<f64> = (0..len).map(|k| get(a, k) + get(b, k)).collect();
    let total = na + nb;
    // Pool on the smaller sample's expected counts so both rows qualify.
    let smaller = na.min(nb);
    let groups = pool(
        &pooled
            .iter()
            .map(|c| c * smaller / total)
            .collect::<Vec<_>>(),
        min_cell,
    );
    if groups.len() < 2 {
        return Err(Error::Statistics(
            "fewer than two cells after pooling".into(),
        ));
    }
    let mut statistic = 0.0;
    let mut cells = Vec::new();
    for &(lo, hi) in &groups {
        let oa: f64 = (lo..hi).map(|k| get(a, k)).sum();
        let ob: f64 = (lo..hi).map(|k| get(b, k)).sum();
        let col = oa + ob;
        let ea = col * na / total;
        let eb = col * nb / total;
        statistic += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
        cells.push((lo, oa, ea));
    }
    let dof = groups.len() - 1;
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
        cells,
    })
}

/// Chi-square test of independence on a contingency table (rows × columns).
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<ChiSquareReport> {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::Statistics(
            "contingency table must be at least 2×2 and rectangular".into(),
        ));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j] as f64).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();
    if row_sums.iter().chain(&col_sums).any(|&s| s == 0.0) {
        return Err(Error::Statistics(
            "contingency table has an empty row or column".into(),
        ));
    }
    let mut statistic = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / total;
            statistic += (o as f64 - e).powi(2) / e;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof)?,
        cells: Vec::new(),
    })
}

/// Bin edges splitting a sample into at most `max_bins` groups of roughly
/// equal mass, never leaving a bin with less than `min_frac` of the sample.
/// Works for discrete samples: ties stay in one bin. Returns the upper
/// bounds (exclusive) of all bins but the last.
pub fn quantile_edges(sample: &[f64], max_bins: usize, min_frac: f64) -> Vec<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let min_count = ((n as f64) * min_frac).ceil().max(1.0) as usize;
    let target = (n / max_bins.max(1)).max(min_count);
    let mut edges = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = (start + target).min(n);
        // Keep ties together.
        while end < n && sorted[end] == sorted[end - 1] {
            end += 1;
        }
        if n - end < min_count {
            break;
        }
        edges.push(sorted[end]);
        start = end;
    }
    edges
}

/// Index of the bin containing `x` under `edges` from [`quantile_edges`].
pub fn bin_of(x: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e <= x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// Two-sample KS: exact statistic, asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    const MIN: usize = 100;
    if a.len() < MIN || b.len() < MIN {
        return Err(Error::Statistics(format!(
            "two-sample KS needs at least {MIN} points per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Statistics("sample contains NaN".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(KsReport {
        statistic: d,
        p_value: ks_p(d, n_eff),
    })
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsReport> {
    if sample.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsReport {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
