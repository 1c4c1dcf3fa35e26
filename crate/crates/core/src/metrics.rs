//! Evaluation metrics: two-objective hypervolume, median-reward
//! aggregation and the Wilcoxon rank-sum test.

use std::collections::BTreeMap;

use num_traits::{Float, Num};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-objective mean episodic return of one policy.
pub type PolicyPoint<T> = [T; 2];

/// Points plus reference; points that fall below the reference in any
/// objective are dropped at construction and counted in `dropped`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypervolumeInput<T> {
    points: Vec<PolicyPoint<T>>,
    reference: PolicyPoint<T>,
    dropped: usize,
}

impl<T: Copy + PartialOrd> HypervolumeInput<T> {
    pub fn new(points: &[PolicyPoint<T>], reference: PolicyPoint<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::UndefinedInput("hypervolume of an empty point set".into()));
        }
        let kept: Vec<_> = points
            .iter()
            .copied()
            .filter(|p| p[0] >= reference[0] && p[1] >= reference[1])
            .collect();
        Ok(Self {
            dropped: points.len() - kept.len(),
            points: kept,
            reference,
        })
    }

    pub fn points(&self) -> &[PolicyPoint<T>] {
        &self.points
    }

    pub fn reference(&self) -> PolicyPoint<T> {
        self.reference
    }

    /// Number of input points discarded for lying below the reference.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

/// Exact area dominated by the points and bounded by the reference.
///
/// Sweeps the points by the first objective (descending) and adds the
/// strip each point contributes above the running second-objective front.
/// Works for any ordered field, including exact rationals.
pub fn hypervolume<T>(input: &HypervolumeInput<T>) -> T
where
    T: Num + Copy + PartialOrd,
{
    let mut pts = input.points.clone();
    pts.sort_by(|a, b| {
        b[0].partial_cmp(&a[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b[1].partial_cmp(&a[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
    let [rx, ry] = input.reference;
    let mut front = ry;
    let mut area = T::zero();
    for [x, y] in pts {
        if y > front {
            area = area + (x - rx) * (y - front);
            front = y;
        }
    }
    area
}

/// Monte-Carlo estimate of [`hypervolume`] over the box spanned by the
/// reference and the coordinate-wise maximum of the points.
pub fn hypervolume_oracle<R: Rng + ?Sized>(input: &HypervolumeInput<f64>, samples: usize, rng: &mut R) -> f64 {
    if input.points.is_empty() || samples == 0 {
        return 0.0;
    }
    let [rx, ry] = input.reference;
    let hx = input.points.iter().map(|p| p[0]).fold(rx, f64::max);
    let hy = input.points.iter().map(|p| p[1]).fold(ry, f64::max);
    let area = (hx - rx) * (hy - ry);
    if area <= 0.0 {
        return 0.0;
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let sx = rx + rng.random::<f64>() * (hx - rx);
        let sy = ry + rng.random::<f64>() * (hy - ry);
        if input.points.iter().any(|p| p[0] >= sx && p[1] >= sy) {
            hits += 1;
        }
    }
    area * hits as f64 / samples as f64
}

/// Hypervolume divided by the area of the reference–ideal box.
pub fn normalized_hypervolume<T: Float>(input: &HypervolumeInput<T>, ideal: PolicyPoint<T>) -> Result<T> {
    let [rx, ry] = input.reference;
    if !(ideal[0] > rx && ideal[1] > ry) {
        return Err(Error::UndefinedInput(
            "ideal point must strictly dominate the reference".into(),
        ));
    }
    Ok(hypervolume(input) / ((ideal[0] - rx) * (ideal[1] - ry)))
}

/// Median; even-length lists average the middle two.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::UndefinedInput("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two values.
pub fn sample_stdev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Scalarized episode returns keyed by `(run, preference index)`.
pub type GroupedReturns = BTreeMap<(usize, usize), Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianSummary {
    /// `medians[run][preference]`
    pub medians: BTreeMap<usize, BTreeMap<usize, f64>>,
    /// Sum of the per-preference medians of each run.
    pub run_sums: BTreeMap<usize, f64>,
    pub mean: f64,
    pub stdev: f64,
    /// Cross-run mean and stdev of each preference's median.
    pub per_preference: BTreeMap<usize, (f64, f64)>,
}

/// Median per (run, preference), summed per run, then averaged over runs.
pub fn median_reward_summary(groups: &GroupedReturns) -> Result<MedianSummary> {
    if groups.is_empty() {
        return Err(Error::UndefinedInput("no return groups".into()));
    }
    let mut medians: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for (&(run, pref), returns) in groups {
        let m = median(returns).map_err(|_| {
            Error::UndefinedInput(format!("empty return group for run {run}, preference {pref}"))
        })?;
        medians.entry(run).or_default().insert(pref, m);
    }
    let run_sums: BTreeMap<usize, f64> = medians
        .iter()
        .map(|(&run, per)| (run, per.values().sum()))
        .collect();
    let sums: Vec<f64> = run_sums.values().copied().collect();
    let mut by_pref: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for per in medians.values() {
        for (&p, &m) in per {
            by_pref.entry(p).or_default().push(m);
        }
    }
    let per_preference = by_pref
        .into_iter()
        .map(|(p, v)| (p, (mean(&v), sample_stdev(&v))))
        .collect();
    Ok(MedianSummary {
        medians,
        run_sums,
        mean: mean(&sums),
        stdev: sample_stdev(&sums),
        per_preference,
    })
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney U) p-value using the normal
/// approximation with tie and continuity corrections.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::UndefinedInput("rank-sum test needs two nonempty samples".into()));
    }
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += avg_rank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(statrs::function::erf::erfc(z / std::f64::consts::SQRT_2).min(1.0))
}
