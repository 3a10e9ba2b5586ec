//! Alternating heuristic for the bilinear program in `(m, gamma)`.
//!
//! With `gamma` fixed the problem is a linear program over the fiber; with
//! `m` fixed it is linear in `gamma` once the data constraints are rewritten
//! as lower bounds on each `gamma_d(s)`.

use super::linear::linear_gamma_program;
use super::outer::{best_index, pattern_search, starting_points, Score, SearchOutcome};
use super::polytope::GammaPolytope;
use super::SolverConfig;
use crate::assumptions::{fiber_bounds, AssumptionSpec};
use crate::error::{Error, Result};
use crate::identified::{lte_functional, m_data_bounds};
use crate::lp::{LinearProgram, LpSolution, Relation, Sense};
use crate::moments::{Arm, PerArm, ProblemMoments, ShortTermLaw, TemporalLink};

const MAX_ITERATIONS: usize = 500;
const MONOTONE_TOL: f64 = 1e-7;

/// Optimal link over the fiber at a fixed `gamma`, or `None` if the fiber is empty.
pub fn inner_fiber_lp(
    a: &AssumptionSpec,
    pm: &ProblemMoments,
    gamma: &ShortTermLaw,
    sense: Sense,
) -> Option<(TemporalLink, f64)> {
    let k = pm.k();
    let mut lower = Vec::with_capacity(2 * k);
    let mut upper = Vec::with_capacity(2 * k);
    for d in Arm::BOTH {
        for b in m_data_bounds(pm, gamma, d).ok()? {
            lower.push(b.lo);
            upper.push(b.hi.max(b.lo));
        }
    }
    let objective: Vec<f64> = Arm::BOTH
        .iter()
        .flat_map(|&d| gamma.gamma[d].iter().map(move |g| d.sign() * g))
        .collect();
    let mut lp = LinearProgram::new(objective, sense, lower, upper);
    let system = a.linear_system(pm);
    for (row, b) in &system.ineq {
        lp.add_row(row.clone(), Relation::Ge, *b);
    }
    for (row, b) in &system.eq {
        lp.add_row(row.clone(), Relation::Eq, *b);
    }
    match lp.solve() {
        LpSolution::Optimal { x, .. } => {
            let link = TemporalLink::from_vec(&x);
            let value = lte_functional(&link, gamma);
            Some((link, value))
        }
        _ => None,
    }
}

/// Smallest `gamma_d(s)` at which `m_d(s)` stays inside its data box, given
/// that the box only widens as `gamma_d(s)` grows.
fn link_lower_bounds(pm: &ProblemMoments, link: &TemporalLink, base: &PerArm<Vec<f64>>) -> PerArm<Vec<f64>> {
    let widen = pm.slack.fiber;
    PerArm::from_fn(|d| {
        (0..pm.k())
            .map(|s| {
                let p = pm.p_obs(d, s);
                let mut bound = base[d][s];
                if p > 0.0 {
                    let (mu, m) = (pm.mean(d, s), link.m[d][s]);
                    if m + widen > 0.0 {
                        bound = bound.max(mu * p / (m + widen));
                    }
                    if 1.0 - m + widen > 0.0 {
                        bound = bound.max((1.0 - mu) * p / (1.0 - m + widen));
                    }
                }
                bound
            })
            .collect()
    })
}

fn gamma_step(
    pm: &ProblemMoments,
    poly: &GammaPolytope,
    link: &TemporalLink,
    current: &ShortTermLaw,
    sense: Sense,
) -> Result<ShortTermLaw> {
    let needed = link_lower_bounds(pm, link, &poly.lower);
    // Capping at the current law keeps the program feasible under rounding.
    let lower = PerArm::from_fn(|d| needed[d].iter().zip(&current.gamma[d]).map(|(n, c)| n.min(*c)).collect());
    let coef = PerArm::from_fn(|d| link.m[d].iter().map(|m| d.sign() * m).collect());
    linear_gamma_program(&coef, &lower, sense)
}

/// Objective sequence of one alternation run and its final point.
#[derive(Clone, Debug, PartialEq)]
pub struct AlternationRun {
    pub values: Vec<f64>,
    pub gamma: ShortTermLaw,
    pub link: TemporalLink,
}

/// Alternates inner LP and exact `gamma` steps from `start` until the
/// improvement falls below `cfg.tol_obj`. `None` if the start has an empty fiber.
pub fn alternate_from(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    poly: &GammaPolytope,
    start: ShortTermLaw,
    cfg: &SolverConfig,
    sense: Sense,
) -> Result<Option<AlternationRun>> {
    let Some((mut link, mut value)) = inner_fiber_lp(a, pm, &start, sense) else {
        return Ok(None);
    };
    let mut gamma = start;
    let mut values = vec![value];
    let improves = |new: f64, old: f64| match sense {
        Sense::Maximize => new - old,
        Sense::Minimize => old - new,
    };
    for _ in 0..MAX_ITERATIONS {
        let next_gamma = gamma_step(pm, poly, &link, &gamma, sense)?;
        let Some((next_link, next_value)) = inner_fiber_lp(a, pm, &next_gamma, sense) else {
            break;
        };
        let gain = improves(next_value, value);
        debug_assert!(gain >= -MONOTONE_TOL, "alternation lost {gain:e}");
        if gain < -MONOTONE_TOL {
            log::warn!("alternation lost {gain:e}; keeping the previous iterate");
            break;
        }
        if gain <= 0.0 {
            break;
        }
        gamma = next_gamma;
        link = next_link;
        value = next_value;
        values.push(value);
        if gain < cfg.tol_obj {
            break;
        }
    }
    Ok(Some(AlternationRun { values, gamma, link }))
}

/// Looks for a short-term law with a nonempty fiber by minimizing the
/// fiber violation over the polytope.
pub(crate) fn find_feasible_gamma(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    poly: &GammaPolytope,
    cfg: &SolverConfig,
) -> Option<ShortTermLaw> {
    let score = |g: &ShortTermLaw| match fiber_bounds(a, pm, g) {
        Ok(f) => Score { violation: f.violation, value: 0.0 },
        Err(_) => Score { violation: f64::INFINITY, value: 0.0 },
    };
    let results = pattern_search(poly, starting_points(poly, cfg), score, Sense::Minimize, cfg, true);
    let best = best_index(&results, Sense::Minimize)?;
    results[best].1.feasible().then(|| results[best].0.clone())
}

/// Multistart alternating heuristic for assumptions without closed-form selectors.
pub fn alternating_bilinear(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    cfg: &SolverConfig,
    sense: Sense,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let poly = GammaPolytope::of(pm)?;
    let mut starts = starting_points(&poly, cfg);
    let mut runs = Vec::with_capacity(starts.len());
    for s in starts.drain(..) {
        runs.push(alternate_from(pm, a, &poly, s, cfg, sense)?);
    }
    if runs.iter().all(Option::is_none) {
        let Some(g) = find_feasible_gamma(pm, a, &poly, cfg) else {
            return Err(Error::Infeasible(format!("every short-term law has an empty fiber under {a}")));
        };
        runs.push(alternate_from(pm, a, &poly, g, cfg, sense)?);
    }
    let trace: Vec<Option<f64>> = runs.iter().map(|r| r.as_ref().and_then(|r| r.values.last().copied())).collect();
    let mut best: Option<&AlternationRun> = None;
    for run in runs.iter().flatten() {
        let v = *run.values.last().expect("nonempty");
        let wins = best.is_none_or(|b| {
            let bv = *b.values.last().expect("nonempty");
            match sense {
                Sense::Maximize => v > bv,
                Sense::Minimize => v < bv,
            }
        });
        if wins {
            best = Some(run);
        }
    }
    let run = best.ok_or_else(|| Error::Infeasible(format!("every short-term law has an empty fiber under {a}")))?;
    Ok(SearchOutcome {
        value: *run.values.last().expect("nonempty"),
        gamma: run.gamma.clone(),
        link: run.link.clone(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::LinearSystem;
    use crate::fixtures::example3;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inner_lp_matches_closed_form_selector() {
        let pm = example3();
        let g = ShortTermLaw::new(vec![0.7, 0.3], vec![0.3, 0.7]);
        let (_, hi) = inner_fiber_lp(&AssumptionSpec::Ti, &pm, &g, Sense::Maximize).unwrap();
        let (_, lo) = inner_fiber_lp(&AssumptionSpec::Ti, &pm, &g, Sense::Minimize).unwrap();
        assert_abs_diff_eq!(hi, 0.4 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lo, -0.12, epsilon = 1e-9);
    }

    #[test]
    fn worst_case_as_empty_custom_system() {
        let pm = example3();
        let a = AssumptionSpec::custom(2, LinearSystem::empty(4)).unwrap();
        let cfg = SolverConfig::default();
        let hi = alternating_bilinear(&pm, &a, &cfg, Sense::Maximize).unwrap();
        let lo = alternating_bilinear(&pm, &a, &cfg, Sense::Minimize).unwrap();
        assert_abs_diff_eq!(hi.value, 0.65, epsilon = 1e-9);
        assert_abs_diff_eq!(lo.value, -0.35, epsilon = 1e-9);
    }

    #[test]
    fn fixpoint_at_an_exact_optimum() {
        let pm = example3().observational_only();
        let poly = GammaPolytope::of(&pm).unwrap();
        let cfg = SolverConfig::default();
        let a = AssumptionSpec::custom(2, LinearSystem::empty(4)).unwrap();
        let best = alternating_bilinear(&pm, &a, &cfg, Sense::Maximize).unwrap();
        let run = alternate_from(&pm, &a, &poly, best.gamma.clone(), &cfg, Sense::Maximize).unwrap().unwrap();
        assert_eq!(run.values.len(), 1);
        assert_abs_diff_eq!(run.values[0], best.value, epsilon = 1e-12);
    }
}
