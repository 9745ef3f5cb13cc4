//! Group summaries and significance tests.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::batch::group_rows;
use super::{FailReason, Scheme, TrialRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub scheme: Scheme,
    pub world: String,
    pub n: usize,
    pub mean_sc: f64,
    pub mean_st: f64,
    pub mean_sq: f64,
    pub median_sq: f64,
    pub fail_time_pct: f64,
    pub fail_collision_pct: f64,
    pub fail_total_pct: f64,
    pub mean_idio_rate: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per (scheme, world) means and failure percentages, ordered by world then
/// scheme.
pub fn summarize(rows: &[TrialRecord]) -> Vec<GroupSummary> {
    let mut out: Vec<GroupSummary> = group_rows(rows)
        .into_iter()
        .map(|((scheme, world), g)| {
            let n = g.len();
            let col =
                |f: &dyn Fn(&TrialRecord) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let pct = |reason: FailReason| {
                100.0 * g.iter().filter(|r| r.fail_reason == reason).count() as f64 / n as f64
            };
            let sq = col(&|r| r.sq);
            GroupSummary {
                scheme,
                world,
                n,
                mean_sc: mean(&col(&|r| f64::from(r.sc))),
                mean_st: mean(&col(&|r| r.st)),
                mean_sq: mean(&sq),
                median_sq: median(&sq),
                fail_time_pct: pct(FailReason::Time),
                fail_collision_pct: pct(FailReason::Collisions),
                fail_total_pct: 100.0 * g.iter().filter(|r| !r.success).count() as f64 / n as f64,
                mean_idio_rate: mean(&col(&|r| r.idio_rate)),
            }
        })
        .collect();
    out.sort_by(|a, b| (&a.world, a.scheme).cmp(&(&b.world, b.scheme)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Unequal-variance two-sample t-test.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSamples(
            "each sample needs at least two values".into(),
        ));
    }
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se2 = va + vb;
    if !(se2 > 0.0) {
        return Err(Error::DegenerateSamples(
            "both samples have zero variance".into(),
        ));
    }
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateSamples(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchResult { t, df, p })
}

/// Mid-ranks of the pooled values, 1-based.
fn ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut r = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && values[idx[e + 1]] == values[idx[k]] {
            e += 1;
        }
        let mid = (k + e) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=e] {
            r[i] = mid;
        }
        ties.push(e - k + 1);
        k = e + 1;
    }
    (r, ties)
}

fn normal_sf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").sf(z)
}

/// One-sided rank-sum test that `a` tends to be smaller than `b`. Normal
/// approximation with tie correction; returns the p-value.
pub fn mann_whitney_less(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DegenerateSamples(
            "rank test needs two non-empty samples".into(),
        ));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (r, ties) = ranks(&pooled);
    let r1: f64 = r[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return Ok(0.5);
    }
    // Small U means `a` ranks low.
    let z = (n1 * n2 / 2.0 - u1) / var.sqrt();
    Ok(normal_sf(z))
}

/// Two-sided signed-rank test on paired differences (zeros dropped), normal
/// approximation with tie correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DegenerateSamples(
            "paired test needs equal, non-empty samples".into(),
        ));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if d.is_empty() {
        return Ok(1.0);
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let (r, ties) = ranks(&abs);
    let w_plus: f64 = r
        .iter()
        .zip(&d)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let n = d.len() as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if !(var > 0.0) {
        return Ok(1.0);
    }
    let z = (w_plus - n * (n + 1.0) / 4.0) / var.sqrt();
    Ok((2.0 * normal_sf(z.abs())).min(1.0))
}
