//! Empirical dependence statistics on finite samples.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::unit_grid;
use crate::io::fmt17;

/// Above this size [`kdd_emp`] evaluates the empirical copula on a quantile
/// grid plus the sample points instead of the full rank lattice.
pub const KDD_FULL_LATTICE_MAX_N: usize = 2000;

/// Quantile levels per axis of the restricted KDD lattice.
pub const KDD_QUANTILE_GRID: usize = 201;

fn check_pair(a: &[f64], b: &[f64], min_n: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "columns differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min_n {
        return Err(Error::UndefinedStatistic("too few observations"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Input("columns contain NaN".into()));
    }
    Ok(())
}

/// Twice the average rank (1-based) of each entry, so ties stay integral.
fn doubled_ranks(a: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let mut out = vec![0; a.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && a[idx[end + 1]] == a[idx[start]] {
            end += 1;
        }
        for &i in &idx[start..=end] {
            out[i] = (start + end + 2) as u64;
        }
        start = end + 1;
    }
    out
}

/// Average ranks, 1-based.
pub fn ranks(a: &[f64]) -> Vec<f64> {
    doubled_ranks(a)
        .into_iter()
        .map(|r| r as f64 / 2.0)
        .collect()
}

/// Pearson's correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedStatistic("zero variance"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_emp(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 3)?;
    pearson(&ranks(a), &ranks(b))
}

/// Kendall's tau-b in `O(n log n)` by counting merge-sort inversions.
pub fn kendall_emp(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let n = a.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[i].total_cmp(&a[j]).then(b[i].total_cmp(&b[j])));

    let tie_pairs = |eq: &dyn Fn(usize, usize) -> bool| -> u64 {
        let (mut total, mut run) = (0u64, 1u64);
        for k in 1..n {
            if eq(idx[k - 1], idx[k]) {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let ties_a = tie_pairs(&|i, j| a[i] == a[j]);
    let ties_ab = tie_pairs(&|i, j| a[i] == a[j] && b[i] == b[j]);

    let mut bs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let mut buf = bs.clone();
    let swaps = merge_count(&mut bs, &mut buf);
    let (mut ties_b, mut run) = (0u64, 1u64);
    for k in 1..n {
        if bs[k - 1] == bs[k] {
            run += 1;
        } else {
            ties_b += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties_b += run * (run - 1) / 2;

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let s = n0 as i64 - ties_a as i64 - ties_b as i64 + ties_ab as i64 - 2 * swaps as i64;
    tau_b(s, n0, ties_a, ties_b)
}

fn tau_b(s: i64, n0: u64, ties_a: u64, ties_b: u64) -> Result<f64> {
    let (pa, pb) = (n0 - ties_a, n0 - ties_b);
    if pa == 0 || pb == 0 {
        return Err(Error::UndefinedStatistic("zero variance"));
    }
    Ok(s as f64 / ((pa as f64) * (pb as f64)).sqrt())
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k = k + mid - i;
    buf[k..n].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// All-pairs tau-b, the reference for [`kendall_emp`].
pub fn kendall_brute(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let n = a.len();
    let (mut s, mut ties_a, mut ties_b) = (0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i].partial_cmp(&a[j]).expect("no NaN") as i64;
            let db = b[i].partial_cmp(&b[j]).expect("no NaN") as i64;
            s += da * db;
            ties_a += (da == 0) as u64;
            ties_b += (db == 0) as u64;
        }
    }
    tau_b(s, (n as u64) * (n as u64 - 1) / 2, ties_a, ties_b)
}

/// KDD of the empirical copula, `4 max |C_n(u, v) − uv|`, with pseudo-ranks
/// `r/(n + 1)`.
///
/// For `n ≤ 2000` the maximum runs over every pair of pseudo-rank values.
/// Larger samples use a [`KDD_QUANTILE_GRID`]² lattice of pseudo-rank
/// quantiles together with the sample points themselves.
pub fn kdd_emp(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 3)?;
    let (ra, rb) = (doubled_ranks(a), doubled_ranks(b));
    let n = a.len();
    if n <= KDD_FULL_LATTICE_MAX_N {
        Ok(kdd_full_lattice(&ra, &rb))
    } else {
        Ok(kdd_restricted(&ra, &rb))
    }
}

/// `|C_n − uv|` at doubled-rank thresholds `(qa, qb)` holding `count` points.
fn deviation(count: usize, qa: u64, qb: u64, n: usize) -> f64 {
    let denom = 2.0 * (n + 1) as f64;
    let u = qa as f64 / denom;
    let v = qb as f64 / denom;
    (count as f64 / n as f64 - u * v).abs()
}

fn sorted_distinct(r: &[u64]) -> Vec<u64> {
    let mut d = r.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

fn kdd_full_lattice(ra: &[u64], rb: &[u64]) -> f64 {
    let n = ra.len();
    let (da, db) = (sorted_distinct(ra), sorted_distinct(rb));
    let pos_b = |r: u64| db.binary_search(&r).expect("rank present");
    let mut by_a: Vec<(usize, usize)> = ra
        .iter()
        .zip(rb)
        .map(|(&x, &y)| (da.binary_search(&x).expect("rank present"), pos_b(y)))
        .collect();
    by_a.sort_unstable();

    let mut hist = vec![0usize; db.len()];
    let mut next = 0;
    let mut best: f64 = 0.0;
    for (ia, &qa) in da.iter().enumerate() {
        while next < n && by_a[next].0 == ia {
            hist[by_a[next].1] += 1;
            next += 1;
        }
        let mut count = 0;
        for (jb, &qb) in db.iter().enumerate() {
            count += hist[jb];
            best = best.max(deviation(count, qa, qb, n));
        }
    }
    (4.0 * best).min(1.0)
}

/// Fenwick tree over `1..=len`.
struct Fenwick(Vec<usize>);

impl Fenwick {
    fn new(len: usize) -> Self {
        Fenwick(vec![0; len + 1])
    }

    fn add(&mut self, mut i: usize) {
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, mut i: usize) -> usize {
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Counts `#{k : ra[k] ≤ qa, rb[k] ≤ qb}` for each query.
fn dominance_counts(ra: &[u64], rb: &[u64], queries: &[(u64, u64)]) -> Vec<usize> {
    let n = ra.len();
    let mut points: Vec<(u64, u64)> = ra.iter().copied().zip(rb.iter().copied()).collect();
    points.sort_unstable();
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_unstable_by_key(|&q| queries[q].0);
    // Doubled ranks lie in 2..=2n.
    let mut tree = Fenwick::new(2 * n);
    let mut out = vec![0; queries.len()];
    let mut next = 0;
    for q in order {
        let (qa, qb) = queries[q];
        while next < n && points[next].0 <= qa {
            tree.add(points[next].1 as usize);
            next += 1;
        }
        out[q] = tree.prefix((qb as usize).min(2 * n));
    }
    out
}

fn kdd_restricted(ra: &[u64], rb: &[u64]) -> f64 {
    let n = ra.len();
    let quantiles = |r: &[u64]| -> Vec<u64> {
        let d = sorted_distinct(r);
        let last = (d.len() - 1) as f64;
        let mut q: Vec<u64> = unit_grid(KDD_QUANTILE_GRID)
            .into_iter()
            .map(|p| d[(p * last).round() as usize])
            .collect();
        q.dedup();
        q
    };
    let (qa, qb) = (quantiles(ra), quantiles(rb));
    let mut queries: Vec<(u64, u64)> = qa
        .iter()
        .flat_map(|&x| qb.iter().map(move |&y| (x, y)))
        .collect();
    queries.extend(ra.iter().copied().zip(rb.iter().copied()));
    let counts = dominance_counts(ra, rb, &queries);
    let best = queries
        .par_iter()
        .zip(&counts)
        .map(|(&(x, y), &c)| deviation(c, x, y, n))
        .reduce(|| 0.0, f64::max);
    (4.0 * best).min(1.0)
}

/// Empirical KDD over the full `n²` pseudo-rank lattice by direct counting,
/// the reference for [`kdd_emp`] at small `n`.
pub fn kdd_emp_brute(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 3)?;
    let (ra, rb) = (doubled_ranks(a), doubled_ranks(b));
    let n = a.len();
    let mut best: f64 = 0.0;
    for &qa in &ra {
        for &qb in &rb {
            let count = ra
                .iter()
                .zip(&rb)
                .filter(|(&x, &y)| x <= qa && y <= qb)
                .count();
            best = best.max(deviation(count, qa, qb, n));
        }
    }
    Ok((4.0 * best).min(1.0))
}

fn ols_residuals(t: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len() as f64;
    let mz = z.iter().sum::<f64>() / n;
    let mt = t.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|v| (v - mz) * (v - mz)).sum();
    if szz == 0.0 {
        return Err(Error::UndefinedStatistic(
            "conditioning variable has zero variance",
        ));
    }
    let szt: f64 = z.iter().zip(t).map(|(v, w)| (v - mz) * (w - mt)).sum();
    let slope = szt / szz;
    let intercept = mt - slope * mz;
    Ok(t.iter()
        .zip(z)
        .map(|(w, v)| w - intercept - slope * v)
        .collect())
}

/// Correlation of the residuals of the least-squares fits of `x` and `y` on
/// `(1, z)`.
pub fn partial_correlation(x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    check_pair(x, y, 4)?;
    check_pair(x, z, 4)?;
    let ex = ols_residuals(x, z)?;
    let ey = ols_residuals(y, z)?;
    pearson(&ex, &ey).map_err(|_| Error::UndefinedStatistic("zero residual variance"))
}

/// Rank statistics and KDD for one pair of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceSummary {
    pub label: String,
    pub spearman: f64,
    pub kendall: f64,
    pub kdd: f64,
    pub n: usize,
}

impl DependenceSummary {
    pub const CSV_HEADER: [&'static str; 5] = ["pair", "spearman", "kendall", "kdd", "n"];

    pub fn compute(label: &str, a: &[f64], b: &[f64]) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            spearman: spearman_emp(a, b)?,
            kendall: kendall_emp(a, b)?,
            kdd: kdd_emp(a, b)?,
            n: a.len(),
        })
    }

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.label.clone(),
            fmt17(self.spearman),
            fmt17(self.kendall),
            fmt17(self.kdd),
            self.n.to_string(),
        ]
    }
}
