//! Preferences, linear scalarization, fuzzy preference regions and robust
//! fuzzy policy bootstrapping over a coverage set of steppingstone policies.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mean, sample_stdev};

/// Number of objectives every scenario exposes.
pub const OBJECTIVES: usize = 2;

/// Tolerance on the sum-to-one constraint.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Nonnegative objective weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference<T = f64> {
    weights: [T; OBJECTIVES],
}

impl<T: Float> Preference<T> {
    /// Accepts `raw` iff it has two nonnegative components summing to one.
    pub fn new(raw: &[T]) -> Result<Self> {
        if raw.len() != OBJECTIVES {
            return Err(Error::Validation {
                constraint: "length",
                detail: format!("expected {OBJECTIVES} weights, got {}", raw.len()),
            });
        }
        if raw.iter().any(|w| !w.is_finite()) {
            return Err(Error::Validation {
                constraint: "finite",
                detail: "weights must be finite".into(),
            });
        }
        if raw.iter().any(|&w| w < T::zero()) {
            return Err(Error::Validation {
                constraint: "nonnegative",
                detail: "weights must be nonnegative".into(),
            });
        }
        let sum = raw.iter().fold(T::zero(), |a, &b| a + b);
        let tol = T::from(SUM_TOLERANCE).unwrap();
        if (sum - T::one()).abs() > tol {
            return Err(Error::Validation {
                constraint: "sum",
                detail: format!("weights sum to {}", sum.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(Self {
            weights: [raw[0], raw[1]],
        })
    }

    /// Preference `[w, 1 − w]`.
    pub fn from_first(w: T) -> Result<Self> {
        Self::new(&[w, T::one() - w])
    }

    pub fn weights(&self) -> [T; OBJECTIVES] {
        self.weights
    }

    /// Linear scalarization `P · r`.
    pub fn scalarize(&self, rewards: &[T]) -> Result<T> {
        scalarize(rewards, self)
    }
}

impl Serialize for Preference<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.weights.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Preference<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        Preference::new(&raw).map_err(serde::de::Error::custom)
    }
}

/// Validates a raw weight vector into a [`Preference`].
pub fn validate_preference<T: Float>(raw: &[T]) -> Result<Preference<T>> {
    Preference::new(raw)
}

/// Dot product of a reward vector with a preference.
pub fn scalarize<T: Float>(rewards: &[T], preference: &Preference<T>) -> Result<T> {
    if rewards.len() != OBJECTIVES {
        return Err(Error::dim("reward vector", OBJECTIVES, rewards.len()));
    }
    Ok(rewards
        .iter()
        .zip(preference.weights)
        .fold(T::zero(), |acc, (&r, w)| acc + r * w))
}

/// The user preferences tested in every phase-2 experiment, in order.
pub const TEST_PREFERENCES: [[f64; 2]; 10] = [
    [0.66, 0.34],
    [0.33, 0.67],
    [0.28, 0.72],
    [0.54, 0.46],
    [0.68, 0.32],
    [0.44, 0.56],
    [0.88, 0.12],
    [0.65, 0.35],
    [0.48, 0.52],
    [0.71, 0.29],
];

pub fn test_preferences() -> Vec<Preference<f64>> {
    TEST_PREFERENCES
        .iter()
        .map(|w| Preference::new(w).expect("table weights are valid"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FuzzyLabel {
    Low,
    Medium,
    High,
}

impl FuzzyLabel {
    pub const ALL: [FuzzyLabel; 3] = [FuzzyLabel::Low, FuzzyLabel::Medium, FuzzyLabel::High];

    /// Triangular membership of a weight in `[0, 1]`: low peaks at 0,
    /// medium at 0.5, high at 1, each reaching zero at the next peak.
    pub fn membership<T: Float>(self, w: T) -> T {
        let two = T::one() + T::one();
        let v = match self {
            FuzzyLabel::Low => T::one() - two * w,
            FuzzyLabel::Medium => T::one() - (two * w - T::one()).abs(),
            FuzzyLabel::High => two * w - T::one(),
        };
        v.max(T::zero()).min(T::one())
    }

    /// Label with the largest membership; ties resolve to the lower label.
    pub fn of<T: Float>(w: T) -> Self {
        let mut best = FuzzyLabel::Low;
        let mut best_m = best.membership(w);
        for label in [FuzzyLabel::Medium, FuzzyLabel::High] {
            let m = label.membership(w);
            if m > best_m {
                best = label;
                best_m = m;
            }
        }
        best
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FuzzyLabel::Low => "low",
            FuzzyLabel::Medium => "medium",
            FuzzyLabel::High => "high",
        }
    }
}

/// Tuple of per-objective fuzzy labels identifying a cell of the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuzzyRegion {
    pub labels: [FuzzyLabel; OBJECTIVES],
}

/// Regions reachable on the two-objective simplex, ordered by the first
/// weight. Neighbours in this chain are the adjacent regions used for
/// bootstrapping.
pub const REGION_CHAIN: [FuzzyRegion; 5] = [
    FuzzyRegion::new(FuzzyLabel::Low, FuzzyLabel::High),
    FuzzyRegion::new(FuzzyLabel::Low, FuzzyLabel::Medium),
    FuzzyRegion::new(FuzzyLabel::Medium, FuzzyLabel::Medium),
    FuzzyRegion::new(FuzzyLabel::Medium, FuzzyLabel::Low),
    FuzzyRegion::new(FuzzyLabel::High, FuzzyLabel::Low),
];

impl FuzzyRegion {
    pub const fn new(first: FuzzyLabel, second: FuzzyLabel) -> Self {
        Self {
            labels: [first, second],
        }
    }

    /// Ordinal position in [`REGION_CHAIN`].
    pub fn index(&self) -> usize {
        REGION_CHAIN
            .iter()
            .position(|r| r == self)
            .expect("region is on the two-objective chain")
    }

    pub fn from_index(index: usize) -> Option<Self> {
        REGION_CHAIN.get(index).copied()
    }

    /// Regions immediately below and above this one on the chain.
    pub fn neighbors(&self) -> (Option<FuzzyRegion>, Option<FuzzyRegion>) {
        let i = self.index();
        let lower = i.checked_sub(1).and_then(Self::from_index);
        (lower, Self::from_index(i + 1))
    }

    /// `"medium-low"` style name used in manifests.
    pub fn label(&self) -> String {
        format!("{}-{}", self.labels[0].as_str(), self.labels[1].as_str())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let parse_one = |t: &str| match t {
            "low" => Ok(FuzzyLabel::Low),
            "medium" => Ok(FuzzyLabel::Medium),
            "high" => Ok(FuzzyLabel::High),
            _ => Err(Error::Format(format!("unknown fuzzy label {t:?}"))),
        };
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::Format(format!("bad region label {s:?}")))?;
        let region = FuzzyRegion::new(parse_one(a)?, parse_one(b)?);
        if !REGION_CHAIN.contains(&region) {
            return Err(Error::Format(format!("region {s:?} is not reachable")));
        }
        Ok(region)
    }
}

impl fmt::Display for FuzzyRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl PartialOrd for FuzzyRegion {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FuzzyRegion {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.index().cmp(&other.index())
    }
}

/// Fuzzy region of a preference: per-objective argmax label.
pub fn fuzzy_membership<T: Float>(preference: &Preference<T>) -> FuzzyRegion {
    let [a, b] = preference.weights;
    FuzzyRegion::new(FuzzyLabel::of(a), FuzzyLabel::of(b))
}

/// Weight of the stdev penalty in the robustness score.
pub const DEFAULT_ROBUSTNESS_LAMBDA: f64 = 1.0;

/// `mean − λ·stdev` of a list of returns (sample stdev).
pub fn robustness_of(returns: &[f64], lambda: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::UndefinedInput("robustness of an empty evaluation history".into()));
    }
    Ok(mean(returns) - lambda * sample_stdev(returns))
}

/// A policy stored per fuzzy region, carrying its evaluation history.
///
/// `P` is the parameter bundle (actor and critic for the hierarchical
/// learner); the bootstrapping logic only ever clones it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteppingstonePolicy<P> {
    pub params: P,
    pub region: FuzzyRegion,
    pub eval_history: Vec<(Preference<f64>, f64)>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    DEFAULT_ROBUSTNESS_LAMBDA
}

impl<P> SteppingstonePolicy<P> {
    pub fn new(params: P, region: FuzzyRegion) -> Self {
        Self {
            params,
            region,
            eval_history: Vec::new(),
            lambda: DEFAULT_ROBUSTNESS_LAMBDA,
        }
    }

    pub fn record(&mut self, preference: Preference<f64>, mean_return: f64) {
        self.eval_history.push((preference, mean_return));
    }

    /// Robustness score β over the evaluation history.
    pub fn beta(&self) -> Result<f64> {
        let returns: Vec<f64> = self.eval_history.iter().map(|e| e.1).collect();
        robustness_of(&returns, self.lambda)
    }
}

/// β of a steppingstone policy.
pub fn robustness<P>(policy: &SteppingstonePolicy<P>) -> Result<f64> {
    policy.beta()
}

/// The coverage set: at most one steppingstone policy per region.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSet<P> {
    by_region: BTreeMap<FuzzyRegion, SteppingstonePolicy<P>>,
}

impl<P> Default for CoverageSet<P> {
    fn default() -> Self {
        Self {
            by_region: BTreeMap::new(),
        }
    }
}

impl<P> CoverageSet<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, region: &FuzzyRegion) -> Option<&SteppingstonePolicy<P>> {
        self.by_region.get(region)
    }

    pub fn len(&self) -> usize {
        self.by_region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_region.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FuzzyRegion, &SteppingstonePolicy<P>)> {
        self.by_region.iter()
    }

    pub fn regions(&self) -> Vec<FuzzyRegion> {
        self.by_region.keys().copied().collect()
    }

    /// Inserts a policy under its own region, replacing any occupant.
    pub fn insert(&mut self, policy: SteppingstonePolicy<P>) -> Result<()> {
        if policy.eval_history.is_empty() {
            return Err(Error::Precondition(
                "steppingstone policies need an evaluation before storage".into(),
            ));
        }
        self.by_region.insert(policy.region, policy);
        Ok(())
    }
}

/// Files `policy` under its region unless the occupant has at least its β.
/// Returns the β now stored and whether `policy` was kept.
pub fn store_if_more_robust<P>(policy: SteppingstonePolicy<P>, coverage: &mut CoverageSet<P>) -> Result<(f64, bool)> {
    let beta = policy.beta()?;
    if let Some(stored) = coverage.get(&policy.region) {
        let stored_beta = stored.beta()?;
        if beta <= stored_beta {
            return Ok((stored_beta, false));
        }
    }
    coverage.insert(policy)?;
    Ok((beta, true))
}

/// Where the initial parameters for the next optimisation come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "region")]
pub enum ThetaSource {
    /// No stored policy in the region or its neighbours.
    Fresh,
    /// The new preference's own region.
    Region(FuzzyRegion),
    /// An adjacent region's policy.
    Neighbor(FuzzyRegion),
}

/// Outcome of one bootstrapping transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<P> {
    /// Initial parameters θ′, or `None` for a fresh initialisation.
    pub init: Option<P>,
    pub source: ThetaSource,
    /// Region of the new preference.
    pub new_region: FuzzyRegion,
    /// Region of the previous preference, now holding the winner.
    pub old_region: FuzzyRegion,
    /// β now stored for `old_region`.
    pub stored_beta: f64,
    /// Whether `current` replaced (or filled) the old region's entry.
    pub stored_current: bool,
}

/// Robust fuzzy policy bootstrapping on a preference change.
///
/// Chooses θ′ for `next` from the coverage set as it stands (own region,
/// else the better of two occupied neighbours by β, else the single
/// occupied neighbour, else fresh), then files `current`, which was trained
/// under `previous`, into the previous preference's region keeping the
/// higher-β policy.
pub fn rfpb_transition<P: Clone>(
    next: &Preference<f64>,
    previous: &Preference<f64>,
    mut current: SteppingstonePolicy<P>,
    coverage: &mut CoverageSet<P>,
) -> Result<Transition<P>> {
    let new_region = fuzzy_membership(next);
    let (chosen, source) = if let Some(p) = coverage.get(&new_region) {
        (Some(p), ThetaSource::Region(new_region))
    } else {
        let (lo, hi) = new_region.neighbors();
        let lo = lo.and_then(|r| coverage.get(&r));
        let hi = hi.and_then(|r| coverage.get(&r));
        match (lo, hi) {
            (Some(a), Some(b)) => {
                let pick = if b.beta()? > a.beta()? { b } else { a };
                (Some(pick), ThetaSource::Neighbor(pick.region))
            }
            (Some(a), None) | (None, Some(a)) => (Some(a), ThetaSource::Neighbor(a.region)),
            (None, None) => (None, ThetaSource::Fresh),
        }
    };
    let init = chosen.map(|p| p.params.clone());

    let old_region = fuzzy_membership(previous);
    current.region = old_region;
    let (stored_beta, stored_current) = store_if_more_robust(current, coverage)?;

    Ok(Transition {
        init,
        source,
        new_region,
        old_region,
        stored_beta,
        stored_current,
    })
}
