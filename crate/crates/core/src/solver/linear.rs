//! Exact solver for objectives that are linear in the short-term law.

use crate::assumptions::AssumptionSpec;
use crate::error::{Error, Result};
use crate::lp::Sense;
use crate::moments::{Arm, PerArm, ProblemMoments, ShortTermLaw, FEAS_TOL};

/// Optimizes `sum_s coef[d][s] * gamma_d(s)` separately for each arm over
/// `{gamma_d >= lower[d], sum_s gamma_d(s) = 1}`.
///
/// Mandatory mass sits at the lower bounds and the free mass goes entirely to
/// the best coefficient; ties go to the smallest index.
pub fn linear_gamma_program(
    coef: &PerArm<Vec<f64>>,
    lower: &PerArm<Vec<f64>>,
    sense: Sense,
) -> Result<ShortTermLaw> {
    let mut gamma = PerArm::new(Vec::new(), Vec::new());
    for d in Arm::BOTH {
        let (c, l) = (&coef[d], &lower[d]);
        if c.len() != l.len() || c.is_empty() {
            return Err(Error::Domain(format!("coefficient and bound lengths differ for {d}")));
        }
        if l.iter().any(|v| !(0.0..=1.0 + FEAS_TOL).contains(v)) {
            return Err(Error::Domain(format!("lower bounds for {d} must lie in [0, 1]")));
        }
        let free = 1.0 - l.iter().sum::<f64>();
        if free < -FEAS_TOL {
            return Err(Error::Domain(format!("lower bounds for {d} sum to {} > 1", 1.0 - free)));
        }
        let mut best = 0;
        for s in 1..c.len() {
            let better = match sense {
                Sense::Maximize => c[s] > c[best],
                Sense::Minimize => c[s] < c[best],
            };
            if better {
                best = s;
            }
        }
        let mut g = l.clone();
        g[best] += free.max(0.0);
        gamma[d] = g;
    }
    Ok(ShortTermLaw { gamma })
}

/// Writes the worst-case and LUC objective `T(selector(gamma), gamma)` as
/// `sum coef * gamma + constant`. Requires zero fiber slack.
pub(crate) fn affine_objective(a: &AssumptionSpec, pm: &ProblemMoments, sense: Sense) -> (PerArm<Vec<f64>>, f64) {
    debug_assert!(matches!(a, AssumptionSpec::WorstCase | AssumptionSpec::Luc));
    let k = pm.k();
    let mut constant = 0.0;
    let coef = PerArm::from_fn(|d| {
        let up = (d == Arm::Treated) == (sense == Sense::Maximize);
        (0..k)
            .map(|s| {
                let p = pm.p_obs(d, s);
                let mu = pm.mean(d, s);
                if matches!(a, AssumptionSpec::Luc) && p > 0.0 {
                    return d.sign() * mu;
                }
                // gamma * lo = mu * P; gamma * hi = mu * P + gamma - P.
                if up {
                    constant += d.sign() * (mu - 1.0) * p;
                    d.sign()
                } else {
                    constant += d.sign() * mu * p;
                    0.0
                }
            })
            .collect()
    });
    (coef, constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(c: Vec<f64>, l: Vec<f64>, sense: Sense) -> Vec<f64> {
        let coef = PerArm::new(c.clone(), c);
        let lower = PerArm::new(l.clone(), l);
        linear_gamma_program(&coef, &lower, sense).unwrap().gamma.treated
    }

    #[test]
    fn free_mass_goes_to_the_best_coefficient() {
        let g = single(vec![0.2, 0.7], vec![0.3, 0.3], Sense::Maximize);
        assert_abs_diff_eq!(g[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 0.7, epsilon = 1e-15);
        let g = single(vec![0.2, 0.7], vec![0.3, 0.3], Sense::Minimize);
        assert_abs_diff_eq!(g[0], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn ties_go_to_the_smallest_index() {
        let g = single(vec![0.5, 0.5, 0.5], vec![0.1, 0.2, 0.3], Sense::Maximize);
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);
        assert_eq!(&g[1..], &[0.2, 0.3]);
    }

    #[test]
    fn ex3_luc_treated_contribution() {
        let c = vec![0.4, 0.7];
        let g = single(c.clone(), vec![0.3, 0.7], Sense::Maximize);
        assert_eq!(g, vec![0.3, 0.7]);
        assert_abs_diff_eq!(c[0] * g[0] + c[1] * g[1], 0.61, epsilon = 1e-12);
    }

    #[test]
    fn overfull_lower_bounds_are_rejected() {
        let coef = PerArm::new(vec![0.0; 2], vec![0.0; 2]);
        let lower = PerArm::new(vec![0.6, 0.6], vec![0.0, 0.0]);
        assert!(matches!(linear_gamma_program(&coef, &lower, Sense::Maximize), Err(Error::Domain(_))));
    }
}
