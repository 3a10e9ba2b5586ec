//! The constraint system characterizing the identified set of `(m, gamma)`
//! on a finite short-term support, and the long-term effect functional.
//!
//! For every arm `d` and support point `s`:
//!
//! * `gamma_d(s) >= max(max_z P_E(S=s, D=d | Z=z), P_O(S=s, D=d))`
//! * `mu_d(s) * pi_d(s) <= m_d(s) <= mu_d(s) * pi_d(s) + 1 - pi_d(s)`
//!
//! where `pi_d(s) = P_O(S=s, D=d) / gamma_d(s)` is the latent propensity score.

use std::fmt;

use crate::assumptions::AssumptionSpec;
use crate::error::{Error, Result};
use crate::moments::{Arm, Interval, PerArm, ProblemMoments, ShortTermLaw, TemporalLink, FEAS_TOL};

#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    NegativeMass { sample: &'static str, detail: String },
    ObservationalMassMismatch { total: f64 },
    ExperimentalMassMismatch { z: usize, total: f64 },
    MeanOutOfRange { arm: Arm, s: usize, value: f64 },
    NullCellMean { arm: Arm, s: usize, value: f64 },
    InstrumentCountMismatch { declared: usize, found: usize },
    GammaInfeasible { arm: Arm, total: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NegativeMass { sample, detail } => write!(f, "negative {sample} mass at {detail}"),
            Issue::ObservationalMassMismatch { total } if *total < 1.0 => {
                write!(f, "observational mass deficit {}", fmt_gap(1.0 - total))
            }
            Issue::ObservationalMassMismatch { total } => {
                write!(f, "observational mass excess {}", fmt_gap(total - 1.0))
            }
            Issue::ExperimentalMassMismatch { z, total } => {
                write!(f, "experimental masses for z={} sum to {}", z + 1, fmt_gap(*total))
            }
            Issue::MeanOutOfRange { arm, s, value } => {
                write!(f, "observational mean {value} outside [0,1] at {arm}, s={}", s + 1)
            }
            Issue::NullCellMean { arm, s, value } => {
                write!(f, "null cell at {arm}, s={} carries nonzero mean {value}", s + 1)
            }
            Issue::InstrumentCountMismatch { declared, found } => {
                write!(f, "declared z_count={declared} but experimental moments have {found} instrument values")
            }
            Issue::GammaInfeasible { arm, total } => {
                write!(f, "γ infeasible for {arm}: lower bounds sum to {}", fmt_gap(*total))
            }
        }
    }
}

fn fmt_gap(x: f64) -> String {
    // Round away float noise so `0.9` reports a deficit of `0.1`.
    let r = (x * 1e9).round() / 1e9;
    format!("{r}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn gamma_infeasible(&self) -> bool {
        self.issues.iter().any(|i| matches!(i, Issue::GammaInfeasible { .. }))
    }

    pub fn messages(&self) -> Vec<String> {
        self.issues.iter().map(|i| i.to_string()).collect()
    }
}

/// Checks every moment invariant and whether the implied lower bounds on
/// `gamma_d` leave room for a probability vector.
pub fn validate_moments(pm: &ProblemMoments, tol: f64) -> ValidationReport {
    let mut issues = Vec::new();
    let k = pm.k();

    let mut total = 0.0;
    for d in Arm::BOTH {
        for s in 0..k {
            let p = pm.obs.mass[d][s];
            let mu = pm.obs.mean[d][s];
            if p < -tol {
                issues.push(Issue::NegativeMass {
                    sample: "observational",
                    detail: format!("{d}, s={}", s + 1),
                });
            }
            if !(-tol..=1.0 + tol).contains(&mu) {
                issues.push(Issue::MeanOutOfRange { arm: d, s, value: mu });
            }
            if p == 0.0 && mu != 0.0 {
                issues.push(Issue::NullCellMean { arm: d, s, value: mu });
            }
            total += p;
        }
    }
    if (total - 1.0).abs() > tol {
        issues.push(Issue::ObservationalMassMismatch { total });
    }

    if let Some(exp) = &pm.exp {
        if exp.z_count() != pm.support.z_count {
            issues.push(Issue::InstrumentCountMismatch {
                declared: pm.support.z_count,
                found: exp.z_count(),
            });
        }
        for (z, cell) in exp.mass.iter().enumerate() {
            let mut total = 0.0;
            for d in Arm::BOTH {
                for s in 0..k {
                    if cell[d][s] < -tol {
                        issues.push(Issue::NegativeMass {
                            sample: "experimental",
                            detail: format!("z={}, {d}, s={}", z + 1, s + 1),
                        });
                    }
                    total += cell[d][s];
                }
            }
            if (total - 1.0).abs() > tol {
                issues.push(Issue::ExperimentalMassMismatch { z, total });
            }
        }
    }

    for d in Arm::BOTH {
        let total: f64 = (0..k).map(|s| gamma_lower_bound(pm, d, s)).sum();
        if total > 1.0 + tol {
            issues.push(Issue::GammaInfeasible { arm: d, total });
        }
    }

    ValidationReport { issues }
}

/// Lower bound on `gamma_d(s)` implied by the two samples.
pub fn gamma_lower_bound(pm: &ProblemMoments, d: Arm, s: usize) -> f64 {
    let obs = pm.p_obs(d, s).max(0.0);
    let exp = pm
        .exp
        .as_ref()
        .map(|e| e.max_over_z(d, s) - pm.slack.gamma)
        .unwrap_or(0.0);
    obs.max(exp).clamp(0.0, 1.0)
}

pub fn gamma_lower_bounds(pm: &ProblemMoments) -> PerArm<Vec<f64>> {
    PerArm::from_fn(|d| (0..pm.k()).map(|s| gamma_lower_bound(pm, d, s)).collect())
}

/// `P_O(S=s, D=d) / gamma_d(s)`, with the null-cell convention `0/0 = 0`.
pub fn latent_propensity(pm: &ProblemMoments, gamma: &ShortTermLaw, d: Arm, s: usize) -> Result<f64> {
    let p = pm.p_obs(d, s).max(0.0);
    let g = gamma.gamma[d][s];
    if g < p - FEAS_TOL {
        return Err(Error::Domain(format!(
            "gamma({d}, s={}) = {g} is below the observed cell mass {p}",
            s + 1
        )));
    }
    if g <= 0.0 {
        return Ok(0.0);
    }
    Ok((p / g).min(1.0))
}

/// Data-implied box `[mu * pi, mu * pi + 1 - pi]` on `m_d(s)` for every `s`,
/// widened by the problem's fiber slack and clipped to `[0, 1]`.
pub fn m_data_bounds(pm: &ProblemMoments, gamma: &ShortTermLaw, d: Arm) -> Result<Vec<Interval>> {
    let widen = pm.slack.fiber;
    (0..pm.k())
        .map(|s| {
            let pi = latent_propensity(pm, gamma, d, s)?;
            let lo = pm.mean(d, s) * pi;
            let hi = lo + (1.0 - pi);
            Ok(Interval::new((lo - widen).max(0.0), (hi + widen).min(1.0)))
        })
        .collect()
}

/// `T(m, gamma) = sum_s m_1(s) gamma_1(s) - sum_s m_0(s) gamma_0(s)`.
pub fn lte_functional(m: &TemporalLink, gamma: &ShortTermLaw) -> f64 {
    Arm::BOTH
        .iter()
        .map(|&d| d.sign() * m.m[d].iter().zip(&gamma.gamma[d]).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Whether `(m, gamma)` belongs to the identified set under assumption `a`.
pub fn membership(
    m: &TemporalLink,
    gamma: &ShortTermLaw,
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    tol: f64,
) -> bool {
    let k = pm.k();
    if gamma.k() != k || m.m.control.len() != k || m.m.treated.len() != k {
        return false;
    }
    if !gamma.is_distribution(tol) {
        return false;
    }
    for d in Arm::BOTH {
        let boxes = match m_data_bounds(pm, gamma, d) {
            Ok(b) => b,
            Err(_) => return false,
        };
        for s in 0..k {
            if gamma.gamma[d][s] < gamma_lower_bound(pm, d, s) - tol {
                return false;
            }
            let v = m.m[d][s];
            if !(-tol..=1.0 + tol).contains(&v) || !boxes[s].contains(v, tol) {
                return false;
            }
        }
    }
    a.linear_system(pm).is_satisfied(&m.to_vec(), tol)
}

/// Number of inequality constraints on `gamma` with and without the
/// singleton core-determining class.
pub fn constraint_count(k: usize, use_cdc: bool) -> u128 {
    assert!(k >= 1, "support must have at least one point");
    if use_cdc {
        2 * (k as u128 - 1)
    } else {
        // 2 * 2^(k-1); saturates past u128 range.
        let exp = k as u32;
        if exp >= 128 {
            u128::MAX
        } else {
            1u128 << exp
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use crate::moments::{ExperimentalMoments, ObservationalMoments, SupportSpec};
    use approx::assert_abs_diff_eq;

    const LOW: usize = 0;
    const HIGH: usize = 1;

    fn truth() -> ShortTermLaw {
        ShortTermLaw::new(vec![0.7, 0.3], vec![0.3, 0.7])
    }

    #[test]
    fn ex3_is_valid() {
        let report = validate_moments(&example3(), FEAS_TOL);
        assert!(report.is_valid(), "{:?}", report.messages());
    }

    #[test]
    fn flags_observational_deficit() {
        let mut pm = example3();
        pm.obs.mass.control[LOW] -= 0.1;
        let report = validate_moments(&pm, FEAS_TOL);
        assert!(report.messages().iter().any(|m| m == "observational mass deficit 0.1"), "{:?}", report.messages());
    }

    #[test]
    fn flags_gamma_infeasibility() {
        let obs = ObservationalMoments {
            mass: PerArm::new(vec![0.35, 0.35], vec![0.3, 0.0]),
            mean: PerArm::new(vec![0.5, 0.5], vec![0.5, 0.0]),
        };
        let exp = ExperimentalMoments {
            mass: vec![
                PerArm::new(vec![0.5, 0.5], vec![0.0, 0.0]),
                PerArm::new(vec![0.1, 0.0], vec![0.0, 0.9]),
            ],
        };
        let pm = ProblemMoments::new(SupportSpec::unit(2, 2), obs, Some(exp)).unwrap();
        assert_abs_diff_eq!(gamma_lower_bound(&pm, Arm::Treated, HIGH), 0.9);
        assert_abs_diff_eq!(gamma_lower_bound(&pm, Arm::Treated, LOW), 0.3);
        let report = validate_moments(&pm, FEAS_TOL);
        assert!(report.gamma_infeasible());
        assert!(report.messages().iter().any(|m| m.starts_with("γ infeasible for d=1")));
    }

    #[test]
    fn gamma_lower_bounds_on_ex3() {
        let pm = example3();
        assert_abs_diff_eq!(gamma_lower_bound(&pm, Arm::Treated, HIGH), 0.7, epsilon = 1e-15);
        let obs_only = pm.observational_only();
        assert_abs_diff_eq!(gamma_lower_bound(&obs_only, Arm::Treated, HIGH), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn lower_bound_is_observed_mass_when_experiment_replicates_it() {
        let pm = example3();
        let exp = ExperimentalMoments { mass: vec![pm.obs.mass.clone()] };
        let pm = ProblemMoments::new(SupportSpec::unit(2, 1), pm.obs.clone(), Some(exp)).unwrap();
        for d in Arm::BOTH {
            for s in 0..2 {
                assert_eq!(gamma_lower_bound(&pm, d, s), pm.p_obs(d, s));
            }
        }
    }

    #[test]
    fn latent_propensity_cases() {
        let pm = example3();
        let pi = latent_propensity(&pm, &truth(), Arm::Treated, HIGH).unwrap();
        assert_abs_diff_eq!(pi, 3.0 / 7.0, epsilon = 1e-12);

        let tight = ShortTermLaw::new(vec![0.3, 0.2], vec![0.2, 0.3]);
        assert_eq!(latent_propensity(&pm, &tight, Arm::Treated, HIGH).unwrap(), 1.0);

        let mut null = example3();
        null.obs.mass.treated[LOW] = 0.0;
        let g = ShortTermLaw::new(vec![0.5, 0.5], vec![0.0, 1.0]);
        assert_eq!(latent_propensity(&null, &g, Arm::Treated, LOW).unwrap(), 0.0);

        let too_small = ShortTermLaw::new(vec![0.7, 0.3], vec![0.9, 0.1]);
        assert!(matches!(
            latent_propensity(&pm, &too_small, Arm::Treated, HIGH),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn data_bounds_on_ex3() {
        let pm = example3();
        let b = m_data_bounds(&pm, &truth(), Arm::Treated).unwrap();
        assert_abs_diff_eq!(b[HIGH].lo, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(b[HIGH].hi, 0.3 + 4.0 / 7.0, epsilon = 1e-12);

        // pi = 1 collapses to the observed mean; pi = 0 is the unit box.
        let tight = ShortTermLaw::new(vec![0.3, 0.2], vec![0.2, 0.3]);
        let b = m_data_bounds(&pm, &tight, Arm::Treated).unwrap();
        assert_abs_diff_eq!(b[HIGH].lo, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(b[HIGH].hi, 0.7, epsilon = 1e-15);
        let mut null = example3();
        null.obs.mass.treated[LOW] = 0.0;
        null.obs.mean.treated[LOW] = 0.0;
        let g = ShortTermLaw::new(vec![0.5, 0.5], vec![0.3, 0.7]);
        let b = m_data_bounds(&null, &g, Arm::Treated).unwrap();
        assert_eq!(b[LOW], Interval::new(0.0, 1.0));
    }

    #[test]
    fn functional_examples() {
        let m = TemporalLink::new(vec![0.2, 0.4], vec![0.4, 0.7]);
        assert_abs_diff_eq!(lte_functional(&m, &truth()), 0.35, epsilon = 1e-12);

        let same = TemporalLink::new(vec![0.3, 0.6], vec![0.3, 0.6]);
        let g = ShortTermLaw::new(vec![0.4, 0.6], vec![0.4, 0.6]);
        assert_eq!(lte_functional(&same, &g), 0.0);

        let extreme = TemporalLink::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_abs_diff_eq!(lte_functional(&extreme, &truth()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn membership_examples() {
        let pm = example3();
        let luc = TemporalLink::new(vec![0.2, 0.4], vec![0.4, 0.7]);
        assert!(membership(&luc, &truth(), &pm, &AssumptionSpec::Luc, 1e-9));

        let bad = ShortTermLaw::new(vec![0.7, 0.3], vec![0.8, 0.2]);
        assert!(!membership(&luc, &bad, &pm, &AssumptionSpec::Luc, 1e-9));

        let g = truth();
        let mid = TemporalLink {
            m: PerArm::from_fn(|d| m_data_bounds(&pm, &g, d).unwrap().iter().map(|b| b.midpoint()).collect()),
        };
        assert!(membership(&mid, &g, &pm, &AssumptionSpec::WorstCase, 1e-9));
    }

    #[test]
    fn table_one_counts() {
        assert_eq!(constraint_count(10, true), 18);
        assert_eq!(constraint_count(10, false), 1024);
        assert_eq!(constraint_count(2, true), 2);
        assert_eq!(constraint_count(1, true), 0);
    }
}
