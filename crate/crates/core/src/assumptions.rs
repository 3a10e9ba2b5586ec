//! Modeling assumptions on the temporal link functions and, for each, the
//! fiber of links compatible with the data at a fixed short-term law.
//!
//! Links are stacked as the `2k`-vector `(m_0, m_1)` whenever an assumption
//! is expressed as a linear system.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identified::m_data_bounds;
use crate::lp::{LinearProgram, LpSolution, Relation, Sense};
use crate::moments::{Arm, PerArm, ProblemMoments, ShortTermLaw, TemporalLink};

/// Tolerance on `box_hi - box_lo` below which a fiber counts as empty.
pub const FIBER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

/// Linear restrictions `A_ineq x >= b_ineq`, `A_eq x = b_eq` on `x = (m_0, m_1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub n: usize,
    pub ineq: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl LinearSystem {
    pub fn empty(n: usize) -> Self {
        LinearSystem { n, ineq: Vec::new(), eq: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.ineq.is_empty() && self.eq.is_empty()
    }

    pub fn extend(&mut self, other: LinearSystem) {
        debug_assert_eq!(self.n, other.n);
        self.ineq.extend(other.ineq);
        self.eq.extend(other.eq);
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
        self.ineq.iter().all(|(a, b)| dot(a) >= b - tol) && self.eq.iter().all(|(a, b)| (dot(a) - b).abs() <= tol)
    }

    /// Rank of the equality block, by Gaussian elimination with partial pivoting.
    pub fn eq_rank(&self) -> usize {
        let mut rows: Vec<Vec<f64>> = self.eq.iter().map(|(a, _)| a.clone()).collect();
        let mut rank = 0;
        for col in 0..self.n {
            let Some(p) = (rank..rows.len()).max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()))
            else {
                break;
            };
            if rows[p][col].abs() < 1e-10 {
                continue;
            }
            rows.swap(rank, p);
            for i in 0..rows.len() {
                if i != rank {
                    let f = rows[i][col] / rows[rank][col];
                    for c in 0..self.n {
                        rows[i][c] -= f * rows[rank][c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Machine representation of the maintained modeling assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AssumptionSpec {
    /// Only data consistency, random assignment and external validity.
    WorstCase,
    /// Each `m_d` monotone in the short-term outcome.
    Liv { direction: Direction },
    /// `m_1 = m_0`.
    Ti,
    LivAndTi { direction: Direction },
    /// `m_d(s) = E_O[Y | S=s, D=d]`.
    Luc,
    CustomLinear { system: LinearSystem },
}

impl AssumptionSpec {
    pub fn liv() -> Self {
        AssumptionSpec::Liv { direction: Direction::Increasing }
    }

    pub fn liv_and_ti() -> Self {
        AssumptionSpec::LivAndTi { direction: Direction::Increasing }
    }

    /// Validated custom system over `2k` columns with full-row-rank equalities.
    pub fn custom(k: usize, system: LinearSystem) -> Result<Self> {
        let n = 2 * k;
        if system.n != n {
            return Err(Error::Invalid(format!("custom system must have {n} columns, has {}", system.n)));
        }
        for (a, _) in system.ineq.iter().chain(&system.eq) {
            if a.len() != n {
                return Err(Error::Invalid(format!("custom row has {} entries, expected {n}", a.len())));
            }
        }
        if system.eq_rank() != system.eq.len() {
            return Err(Error::Invalid("custom equality block must have full row rank".into()));
        }
        Ok(AssumptionSpec::CustomLinear { system })
    }

    pub fn name(&self) -> String {
        match self {
            AssumptionSpec::WorstCase => "worst-case".into(),
            AssumptionSpec::Liv { direction: Direction::Increasing } => "liv".into(),
            AssumptionSpec::Liv { direction: Direction::Decreasing } => "liv-decreasing".into(),
            AssumptionSpec::Ti => "ti".into(),
            AssumptionSpec::LivAndTi { direction: Direction::Increasing } => "liv-ti".into(),
            AssumptionSpec::LivAndTi { direction: Direction::Decreasing } => "liv-ti-decreasing".into(),
            AssumptionSpec::Luc => "luc".into(),
            AssumptionSpec::CustomLinear { .. } => "custom".into(),
        }
    }

    /// Whether minimal and maximal selectors are available in closed form.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, AssumptionSpec::LivAndTi { .. } | AssumptionSpec::CustomLinear { .. })
    }

    /// Whether the fiber factors into independent per-arm pieces.
    pub fn is_arm_separable(&self) -> bool {
        matches!(self, AssumptionSpec::WorstCase | AssumptionSpec::Liv { .. } | AssumptionSpec::Luc)
    }

    /// Whether some short-term law can have an empty fiber.
    pub fn fiber_can_be_empty(&self) -> bool {
        !matches!(self, AssumptionSpec::WorstCase | AssumptionSpec::Luc)
    }

    /// The set `M^A` as linear restrictions on `(m_0, m_1)`.
    pub fn linear_system(&self, pm: &ProblemMoments) -> LinearSystem {
        let k = pm.k();
        match self {
            AssumptionSpec::WorstCase => LinearSystem::empty(2 * k),
            AssumptionSpec::Liv { direction } => monotone_rows(k, *direction),
            AssumptionSpec::Ti => tie_rows(k),
            AssumptionSpec::LivAndTi { direction } => {
                let mut sys = monotone_rows(k, *direction);
                sys.extend(tie_rows(k));
                sys
            }
            AssumptionSpec::Luc => {
                let mut sys = LinearSystem::empty(2 * k);
                for d in Arm::BOTH {
                    for s in 0..k {
                        if pm.p_obs(d, s) > 0.0 {
                            let mut a = vec![0.0; 2 * k];
                            a[var(k, d, s)] = 1.0;
                            sys.eq.push((a, pm.mean(d, s)));
                        }
                    }
                }
                sys
            }
            AssumptionSpec::CustomLinear { system } => system.clone(),
        }
    }
}

impl fmt::Display for AssumptionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Position of `m_d(s)` in the stacked vector.
pub fn var(k: usize, d: Arm, s: usize) -> usize {
    d.index() * k + s
}

fn monotone_rows(k: usize, direction: Direction) -> LinearSystem {
    let mut sys = LinearSystem::empty(2 * k);
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    for d in Arm::BOTH {
        for s in 1..k {
            let mut a = vec![0.0; 2 * k];
            a[var(k, d, s)] = sign;
            a[var(k, d, s - 1)] = -sign;
            sys.ineq.push((a, 0.0));
        }
    }
    sys
}

fn tie_rows(k: usize) -> LinearSystem {
    let mut sys = LinearSystem::empty(2 * k);
    for s in 0..k {
        let mut a = vec![0.0; 2 * k];
        a[var(k, Arm::Treated, s)] = 1.0;
        a[var(k, Arm::Control, s)] = -1.0;
        sys.eq.push((a, 0.0));
    }
    sys
}

/// Links compatible with data and assumption at a fixed short-term law.
///
/// `box_lo`/`box_hi` are the tight coordinatewise bounds; `extra_linear`
/// holds the restrictions the box does not capture (monotonicity for the
/// LIV variants, ties for LIV with TI, the user rows for custom systems).
/// Under TI the two arms share one box and `ties_m0_m1` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberDescription {
    pub box_lo: PerArm<Vec<f64>>,
    pub box_hi: PerArm<Vec<f64>>,
    pub extra_linear: LinearSystem,
    pub feasible: bool,
    pub ties_m0_m1: bool,
    /// Zero when feasible; otherwise a positive measure of how far the
    /// fiber is from nonempty.
    pub violation: f64,
}

pub fn fiber_bounds(a: &AssumptionSpec, pm: &ProblemMoments, gamma: &ShortTermLaw) -> Result<FiberDescription> {
    let k = pm.k();
    let data = PerArm::from_fn(|d| m_data_bounds(pm, gamma, d));
    let data = PerArm::new(data.control?, data.treated?);
    let mut lo = data.map(|_, b| b.iter().map(|i| i.lo).collect::<Vec<_>>());
    let mut hi = data.map(|_, b| b.iter().map(|i| i.hi).collect::<Vec<_>>());
    let mut ties = false;
    let mut extra = LinearSystem::empty(2 * k);

    match a {
        AssumptionSpec::WorstCase => {}
        AssumptionSpec::Liv { direction } => {
            for d in Arm::BOTH {
                running_extrema(&mut lo[d], &mut hi[d], *direction);
            }
            extra = monotone_rows(k, *direction);
        }
        AssumptionSpec::Ti | AssumptionSpec::LivAndTi { .. } => {
            let shared_lo: Vec<f64> = (0..k).map(|s| lo.control[s].max(lo.treated[s])).collect();
            let shared_hi: Vec<f64> = (0..k).map(|s| hi.control[s].min(hi.treated[s])).collect();
            lo = PerArm::new(shared_lo.clone(), shared_lo);
            hi = PerArm::new(shared_hi.clone(), shared_hi);
            ties = true;
            if let AssumptionSpec::LivAndTi { direction } = a {
                for d in Arm::BOTH {
                    running_extrema(&mut lo[d], &mut hi[d], *direction);
                }
                extra = monotone_rows(k, *direction);
                extra.extend(tie_rows(k));
            }
        }
        AssumptionSpec::Luc => {
            let widen = pm.slack.fiber;
            for d in Arm::BOTH {
                for s in 0..k {
                    if pm.p_obs(d, s) > 0.0 {
                        let mu = pm.mean(d, s);
                        lo[d][s] = (mu - widen).max(lo[d][s]);
                        hi[d][s] = (mu + widen).min(hi[d][s]);
                    }
                }
            }
        }
        AssumptionSpec::CustomLinear { system } => {
            extra = system.clone();
        }
    }

    let arms: &[Arm] = if ties { &[Arm::Treated] } else { &Arm::BOTH };
    let mut violation: f64 = arms
        .iter()
        .flat_map(|&d| (0..k).map(move |s| (d, s)))
        .map(|(d, s)| (lo[d][s] - hi[d][s]).max(0.0))
        .sum();
    if violation <= FIBER_TOL {
        violation = 0.0;
    }
    if violation == 0.0 {
        if let AssumptionSpec::CustomLinear { system } = a {
            violation = custom_violation(system, &lo, &hi);
        }
    }

    Ok(FiberDescription {
        box_lo: lo,
        box_hi: hi,
        extra_linear: extra,
        feasible: violation == 0.0,
        ties_m0_m1: ties,
        violation,
    })
}

/// Running extrema: `lo[s] = max_{s' <= s} lo[s']`, `hi[s] = min_{s' >= s} hi[s']`
/// for the increasing direction, mirrored for the decreasing one.
fn running_extrema(lo: &mut [f64], hi: &mut [f64], direction: Direction) {
    let k = lo.len();
    let order: Vec<usize> = match direction {
        Direction::Increasing => (0..k).collect(),
        Direction::Decreasing => (0..k).rev().collect(),
    };
    for w in 1..k {
        let (prev, cur) = (order[w - 1], order[w]);
        lo[cur] = lo[cur].max(lo[prev]);
    }
    for w in (0..k.saturating_sub(1)).rev() {
        let (cur, next) = (order[w], order[w + 1]);
        hi[cur] = hi[cur].min(hi[next]);
    }
}

fn custom_violation(system: &LinearSystem, lo: &PerArm<Vec<f64>>, hi: &PerArm<Vec<f64>>) -> f64 {
    let lower: Vec<f64> = lo.control.iter().chain(&lo.treated).copied().collect();
    let upper: Vec<f64> = hi.control.iter().chain(&hi.treated).copied().collect();
    let mut lp = LinearProgram::new(vec![0.0; system.n], Sense::Minimize, lower, upper);
    for (a, b) in &system.ineq {
        lp.add_row(a.clone(), Relation::Ge, *b);
    }
    for (a, b) in &system.eq {
        lp.add_row(a.clone(), Relation::Eq, *b);
    }
    match lp.solve() {
        LpSolution::Infeasible { violation } => violation.max(FIBER_TOL * 2.0),
        _ => 0.0,
    }
}

/// Optimizes `T(., gamma)` over the fiber. `None` when no closed form exists.
fn selector(
    a: &AssumptionSpec,
    pm: &ProblemMoments,
    gamma: &ShortTermLaw,
    maximize: bool,
) -> Result<Option<TemporalLink>> {
    if !a.has_closed_form() {
        return Ok(None);
    }
    let fiber = fiber_bounds(a, pm, gamma)?;
    if !fiber.feasible {
        return Err(Error::FiberEmpty);
    }
    Ok(Some(selector_from_fiber(&fiber, gamma, maximize)))
}

/// Closed-form extreme link for a feasible box fiber.
pub(crate) fn selector_from_fiber(fiber: &FiberDescription, gamma: &ShortTermLaw, maximize: bool) -> TemporalLink {
    let k = gamma.k();
    // Fibers that are numerically empty by less than FIBER_TOL are clamped.
    let pick_lo = |d: Arm, s: usize| fiber.box_lo[d][s].min(fiber.box_hi[d][s]);
    let pick_hi = |d: Arm, s: usize| fiber.box_hi[d][s].max(fiber.box_lo[d][s]);
    if fiber.ties_m0_m1 {
        let shared: Vec<f64> = (0..k)
            .map(|s| {
                let treated_heavier = gamma.gamma.treated[s] >= gamma.gamma.control[s];
                if treated_heavier == maximize {
                    pick_hi(Arm::Treated, s)
                } else {
                    pick_lo(Arm::Treated, s)
                }
            })
            .collect();
        TemporalLink::new(shared.clone(), shared)
    } else {
        let m = PerArm::from_fn(|d| {
            let up = (d == Arm::Treated) == maximize;
            (0..k).map(|s| if up { pick_hi(d, s) } else { pick_lo(d, s) }).collect()
        });
        TemporalLink { m }
    }
}

/// Fiber element minimizing `T(., gamma)`.
pub fn minimal_selector(a: &AssumptionSpec, pm: &ProblemMoments, gamma: &ShortTermLaw) -> Result<Option<TemporalLink>> {
    selector(a, pm, gamma, false)
}

/// Fiber element maximizing `T(., gamma)`.
pub fn maximal_selector(a: &AssumptionSpec, pm: &ProblemMoments, gamma: &ShortTermLaw) -> Result<Option<TemporalLink>> {
    selector(a, pm, gamma, true)
}
