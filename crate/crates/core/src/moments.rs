//! Domain types for the identified population quantities and the parameters
//! `(m, gamma)` of the long-term effect functional.
//!
//! Every outcome mean lives on the normalized `[0, 1]` scale. Support points
//! are zero-based indices `0..k`; arms are `Arm::Control` (d = 0) and
//! `Arm::Treated` (d = 1).

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking population moments.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Control,
    Treated,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Treated];

    pub fn index(self) -> usize {
        match self {
            Arm::Control => 0,
            Arm::Treated => 1,
        }
    }

    pub fn from_index(d: usize) -> Option<Arm> {
        match d {
            0 => Some(Arm::Control),
            1 => Some(Arm::Treated),
            _ => None,
        }
    }

    /// Sign of the arm in the effect functional: +1 for treated, -1 for control.
    pub fn sign(self) -> f64 {
        match self {
            Arm::Control => -1.0,
            Arm::Treated => 1.0,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Control => Arm::Treated,
            Arm::Treated => Arm::Control,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={}", self.index())
    }
}

/// A pair of values, one per treatment arm.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerArm<T> {
    pub control: T,
    pub treated: T,
}

impl<T> PerArm<T> {
    pub fn new(control: T, treated: T) -> Self {
        PerArm { control, treated }
    }

    pub fn from_fn(mut f: impl FnMut(Arm) -> T) -> Self {
        PerArm { control: f(Arm::Control), treated: f(Arm::Treated) }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Arm, &T) -> U) -> PerArm<U> {
        PerArm { control: f(Arm::Control, &self.control), treated: f(Arm::Treated, &self.treated) }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Arm, &T)> {
        [(Arm::Control, &self.control), (Arm::Treated, &self.treated)].into_iter()
    }
}

impl<T> Index<Arm> for PerArm<T> {
    type Output = T;
    fn index(&self, d: Arm) -> &T {
        match d {
            Arm::Control => &self.control,
            Arm::Treated => &self.treated,
        }
    }
}

impl<T> IndexMut<Arm> for PerArm<T> {
    fn index_mut(&mut self, d: Arm) -> &mut T {
        match d {
            Arm::Control => &mut self.control,
            Arm::Treated => &mut self.treated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportSpec {
    pub k: usize,
    pub z_count: usize,
    pub y_low: f64,
    pub y_high: f64,
}

impl SupportSpec {
    pub fn new(k: usize, z_count: usize, y_low: f64, y_high: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("support must have at least one point".into()));
        }
        if z_count == 0 {
            return Err(Error::Invalid("instrument must take at least one value".into()));
        }
        if !(y_low < y_high) || !y_low.is_finite() || !y_high.is_finite() {
            return Err(Error::Invalid(format!("need y_low < y_high, got [{y_low}, {y_high}]")));
        }
        Ok(SupportSpec { k, z_count, y_low, y_high })
    }

    /// Unit-scale version used when inputs are already normalized.
    pub fn unit(k: usize, z_count: usize) -> Self {
        SupportSpec { k, z_count, y_low: 0.0, y_high: 1.0 }
    }

    pub fn y_range(&self) -> f64 {
        self.y_high - self.y_low
    }

    pub fn normalize_y(&self, y: f64) -> f64 {
        (y - self.y_low) / self.y_range()
    }
}

/// `mass[d][s] = P_O(S=s, D=d)`, `mean[d][s] = E_O[Y | S=s, D=d]`.
///
/// A cell with zero mass carries mean 0; every formula multiplies the mean by
/// the mass so the sentinel is never observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationalMoments {
    pub mass: PerArm<Vec<f64>>,
    pub mean: PerArm<Vec<f64>>,
}

impl ObservationalMoments {
    pub fn k(&self) -> usize {
        self.mass.control.len()
    }

    /// `P_O(D = d)`.
    pub fn arm_mass(&self, d: Arm) -> f64 {
        self.mass[d].iter().sum()
    }

    /// `E_O[Y 1{D = d}]`.
    pub fn arm_outcome_mass(&self, d: Arm) -> f64 {
        self.mass[d].iter().zip(&self.mean[d]).map(|(p, mu)| p * mu).sum()
    }
}

/// `mass[z][d][s] = P_E(S=s, D=d | Z=z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalMoments {
    pub mass: Vec<PerArm<Vec<f64>>>,
}

impl ExperimentalMoments {
    pub fn z_count(&self) -> usize {
        self.mass.len()
    }

    /// `max_z P_E(S=s, D=d | Z=z)`.
    pub fn max_over_z(&self, d: Arm, s: usize) -> f64 {
        self.mass.iter().map(|m| m[d][s]).fold(0.0, f64::max)
    }
}

/// Uniform relaxation applied when the sample-analog constraint set is empty.
///
/// `gamma` is subtracted from the experimental term of every lower bound on
/// `gamma_d(s)`; `fiber` widens every data-implied box on `m_d(s)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub gamma: f64,
    pub fiber: f64,
}

impl Slack {
    pub fn is_zero(&self) -> bool {
        self.gamma == 0.0 && self.fiber == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMoments {
    pub support: SupportSpec,
    pub obs: ObservationalMoments,
    pub exp: Option<ExperimentalMoments>,
    #[serde(default)]
    pub slack: Slack,
}

impl ProblemMoments {
    pub fn new(
        support: SupportSpec,
        obs: ObservationalMoments,
        exp: Option<ExperimentalMoments>,
    ) -> Result<Self> {
        let k = support.k;
        for d in Arm::BOTH {
            if obs.mass[d].len() != k || obs.mean[d].len() != k {
                return Err(Error::Invalid(format!(
                    "observational cells for {d} must have length k={k}"
                )));
            }
        }
        if let Some(exp) = &exp {
            if exp.mass.is_empty() {
                return Err(Error::Invalid("experimental moments have no instrument values".into()));
            }
            for (z, cell) in exp.mass.iter().enumerate() {
                for d in Arm::BOTH {
                    if cell[d].len() != k {
                        return Err(Error::Invalid(format!(
                            "experimental cells for z={z}, {d} must have length k={k}"
                        )));
                    }
                }
            }
        }
        Ok(ProblemMoments { support, obs, exp, slack: Slack::default() })
    }

    pub fn k(&self) -> usize {
        self.support.k
    }

    /// The same problem with the experimental sample discarded.
    pub fn observational_only(&self) -> ProblemMoments {
        ProblemMoments { exp: None, ..self.clone() }
    }

    pub fn with_slack(&self, slack: Slack) -> ProblemMoments {
        ProblemMoments { slack, ..self.clone() }
    }

    pub fn p_obs(&self, d: Arm, s: usize) -> f64 {
        self.obs.mass[d][s]
    }

    pub fn mean(&self, d: Arm, s: usize) -> f64 {
        self.obs.mean[d][s]
    }
}

/// Law of the short-term potential outcome: `gamma[d][s] = P(S(d) = s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortTermLaw {
    pub gamma: PerArm<Vec<f64>>,
}

impl ShortTermLaw {
    pub fn new(control: Vec<f64>, treated: Vec<f64>) -> Self {
        ShortTermLaw { gamma: PerArm::new(control, treated) }
    }

    pub fn k(&self) -> usize {
        self.gamma.control.len()
    }

    pub fn is_distribution(&self, tol: f64) -> bool {
        self.gamma.iter().all(|(_, g)| {
            g.iter().all(|&x| x >= -tol) && (g.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Convex combination `a * self + (1 - a) * other`.
    pub fn mix(&self, other: &ShortTermLaw, a: f64) -> ShortTermLaw {
        ShortTermLaw {
            gamma: PerArm::from_fn(|d| {
                self.gamma[d].iter().zip(&other.gamma[d]).map(|(x, y)| a * x + (1.0 - a) * y).collect()
            }),
        }
    }
}

/// Temporal link functions: `m[d][s] = E[Y(d) | S(d) = s]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalLink {
    pub m: PerArm<Vec<f64>>,
}

impl TemporalLink {
    pub fn new(control: Vec<f64>, treated: Vec<f64>) -> Self {
        TemporalLink { m: PerArm::new(control, treated) }
    }

    /// Stacked `(m_0, m_1)` of length `2k`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.m.control.iter().chain(&self.m.treated).copied().collect()
    }

    pub fn from_vec(v: &[f64]) -> TemporalLink {
        let k = v.len() / 2;
        TemporalLink::new(v[..k].to_vec(), v[k..].to_vec())
    }

    pub fn mix(&self, other: &TemporalLink, a: f64) -> TemporalLink {
        TemporalLink::from_vec(
            &self.to_vec().iter().zip(other.to_vec()).map(|(x, y)| a * x + (1.0 - a) * y).collect::<Vec<_>>(),
        )
    }
}

/// Closed interval `[lo, hi]`; `lo > hi` encodes the empty set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn empty() -> Self {
        Interval { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        !self.is_empty() && x >= self.lo - tol && x <= self.hi + tol
    }

    /// `self ⊆ other` with both endpoints allowed to overshoot by `tol`.
    pub fn is_subset_of(&self, other: &Interval, tol: f64) -> bool {
        if self.is_empty() {
            return true;
        }
        !other.is_empty() && self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn scale(&self, factor: f64) -> Interval {
        if self.is_empty() {
            return *self;
        }
        Interval::new(self.lo * factor, self.hi * factor)
    }

    /// Hausdorff distance between two nonempty intervals.
    pub fn hausdorff(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "[{:.6}, {:.6}]", self.lo, self.hi)
        }
    }
}
