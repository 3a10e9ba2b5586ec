//! Reports on what each data source and assumption contributes.

use serde::{Deserialize, Serialize};

use crate::assumptions::AssumptionSpec;
use crate::error::{Error, Result};
use crate::moments::{Arm, Interval, ObservationalMoments, ProblemMoments};
use crate::solver::{solve_bounds, BoundsResult, Scope, SolverConfig};

/// Worst-case bounds in closed form from the observational moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaBounds {
    /// `E[YD] - E[Y(1-D)] - P(D=1)` to `E[YD] - E[Y(1-D)] + P(D=0)`.
    pub derived: Interval,
    /// The variant with the two probability terms swapped.
    pub swapped: Interval,
    pub contains_zero: bool,
}

impl FormulaBounds {
    pub fn conventions_agree(&self, tol: f64) -> bool {
        (self.derived.lo - self.swapped.lo).abs() <= tol && (self.derived.hi - self.swapped.hi).abs() <= tol
    }

    pub fn note(&self) -> &'static str {
        "the derived convention matches the solver; the swapped variant exchanges P(D=1) and P(D=0)"
    }
}

pub fn manski_formula_bounds(obs: &ObservationalMoments) -> FormulaBounds {
    let diff = obs.arm_outcome_mass(Arm::Treated) - obs.arm_outcome_mass(Arm::Control);
    let p1 = obs.arm_mass(Arm::Treated);
    let p0 = obs.arm_mass(Arm::Control);
    let derived = Interval::new(diff - p1, diff + p0);
    let contains_zero = derived.contains(0.0, 1e-12);
    debug_assert!(contains_zero, "worst-case interval {derived} excludes zero");
    FormulaBounds { derived, swapped: Interval::new(diff - p0, diff + p1), contains_zero }
}

/// Distance from `tau` to the interval; zero inside it.
pub fn misspecification_distance(interval: &Interval, tau: f64) -> Result<f64> {
    if interval.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok((interval.lo - tau).max(tau - interval.hi).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    pub assumption: String,
    pub worst_observational: BoundsResult,
    pub worst_combined: BoundsResult,
    pub assumed_observational: BoundsResult,
    pub assumed_combined: BoundsResult,
    /// Whether the four intervals nest as the theory requires.
    pub nesting_ok: bool,
    /// Worst-case bounds are the same with and without the experiment.
    pub experiment_neutral_without_assumption: bool,
    /// Combined bounds under the assumption are strictly narrower than
    /// observational-only bounds under it.
    pub amplification: bool,
    /// Width of combined over observational-only bounds under the assumption.
    pub width_ratio: Option<f64>,
}

pub const NESTING_TOL: f64 = 1e-8;
pub const AMPLIFICATION_TOL: f64 = 1e-6;

pub fn amplification_report(pm: &ProblemMoments, a: &AssumptionSpec, cfg: &SolverConfig) -> Result<AmplificationReport> {
    if pm.exp.is_none() {
        return Err(Error::Invalid("amplification needs experimental moments".into()));
    }
    let run = |a: &AssumptionSpec, scope| solve_bounds(pm, a, &cfg.with_scope(scope));
    let wo = run(&AssumptionSpec::WorstCase, Scope::ObservationalOnly)?;
    let wc = run(&AssumptionSpec::WorstCase, Scope::Combined)?;
    let ao = run(a, Scope::ObservationalOnly)?;
    let ac = run(a, Scope::Combined)?;
    let sub = |x: &BoundsResult, y: &BoundsResult| x.interval.is_subset_of(&y.interval, NESTING_TOL);
    let nesting_ok = sub(&wc, &wo) && sub(&ac, &ao) && sub(&ao, &wo) && sub(&ac, &wc);
    let neutral = !wo.is_infeasible()
        && (wo.interval.lo - wc.interval.lo).abs() <= 1e-9
        && (wo.interval.hi - wc.interval.hi).abs() <= 1e-9;
    let amplification = !ac.is_infeasible()
        && sub(&ac, &ao)
        && ao.interval.width() - ac.interval.width() > AMPLIFICATION_TOL;
    let width_ratio = (ao.interval.width() > 0.0 && !ac.is_infeasible())
        .then(|| ac.interval.width() / ao.interval.width());
    Ok(AmplificationReport {
        assumption: a.name(),
        worst_observational: wo,
        worst_combined: wc,
        assumed_observational: ao,
        assumed_combined: ac,
        nesting_ok,
        experiment_neutral_without_assumption: neutral,
        amplification,
        width_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantMeanCheck {
    pub holds: bool,
    /// The point-identified effect when the check holds and both arms are observed.
    pub tau: Option<f64>,
}

/// Whether the observed outcome means are constant in the short-term
/// outcome within each arm, in which case latent unconfoundedness
/// point-identifies the effect without the experiment.
pub fn luc_trivial_mean_check(obs: &ObservationalMoments, tol: f64) -> ConstantMeanCheck {
    let mut common = [None, None];
    let mut holds = true;
    for d in Arm::BOTH {
        let means: Vec<f64> = (0..obs.k()).filter(|&s| obs.mass[d][s] > 0.0).map(|s| obs.mean[d][s]).collect();
        if let (Some(lo), Some(hi)) = (
            means.iter().copied().reduce(f64::min),
            means.iter().copied().reduce(f64::max),
        ) {
            if hi - lo > tol {
                holds = false;
            }
            common[d.index()] = Some(means.iter().sum::<f64>() / means.len() as f64);
        }
    }
    let tau = match (holds, common) {
        (true, [Some(m0), Some(m1)]) => Some(m1 - m0),
        _ => None,
    };
    ConstantMeanCheck { holds, tau }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use crate::moments::PerArm;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ex3_formula_bounds() {
        let f = manski_formula_bounds(&example3().obs);
        assert_abs_diff_eq!(f.derived.lo, -0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(f.derived.hi, 0.65, epsilon = 1e-12);
        assert!(f.conventions_agree(1e-12));
        assert!(f.contains_zero);
    }

    #[test]
    fn one_sided_missingness() {
        let obs = ObservationalMoments {
            mass: PerArm::new(vec![0.0, 0.0], vec![0.4, 0.6]),
            mean: PerArm::new(vec![0.0, 0.0], vec![0.5, 0.25]),
        };
        let f = manski_formula_bounds(&obs);
        let ey = 0.4 * 0.5 + 0.6 * 0.25;
        assert_abs_diff_eq!(f.derived.lo, ey - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.derived.hi, ey, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_when_arm_shares_match() {
        let obs = ObservationalMoments {
            mass: PerArm::new(vec![0.3, 0.2], vec![0.25, 0.25]),
            mean: PerArm::new(vec![0.5, 0.5], vec![0.5, 0.5]),
        };
        let f = manski_formula_bounds(&obs);
        assert_abs_diff_eq!(f.derived.lo + f.derived.hi, 0.0, epsilon = 1e-12);
        let skew = ObservationalMoments {
            mass: PerArm::new(vec![0.5, 0.2], vec![0.15, 0.15]),
            mean: PerArm::new(vec![0.3, 0.0], vec![0.5, 0.5]),
        };
        let f = manski_formula_bounds(&skew);
        assert!((f.derived.lo + f.derived.hi).abs() > 1e-3);
    }

    #[test]
    fn misspecification_distances() {
        assert_eq!(misspecification_distance(&Interval::new(0.15, 0.40), 0.2).unwrap(), 0.0);
        assert_abs_diff_eq!(misspecification_distance(&Interval::point(0.35), 0.2).unwrap(), 0.15, epsilon = 1e-12);
        assert_eq!(misspecification_distance(&Interval::new(-1.0, 2.0), 2.0).unwrap(), 0.0);
        assert_eq!(misspecification_distance(&Interval::empty(), 0.0), Err(Error::EmptySet));
    }

    #[test]
    fn ex3_amplification() {
        let cfg = SolverConfig::default();
        let luc = amplification_report(&example3(), &AssumptionSpec::Luc, &cfg).unwrap();
        assert!(luc.amplification && luc.nesting_ok);
        let wc = amplification_report(&example3(), &AssumptionSpec::WorstCase, &cfg).unwrap();
        assert!(!wc.amplification && wc.experiment_neutral_without_assumption);
    }

    #[test]
    fn constant_means() {
        let obs = ObservationalMoments {
            mass: PerArm::new(vec![0.3, 0.2], vec![0.2, 0.3]),
            mean: PerArm::new(vec![0.3, 0.3], vec![0.5, 0.5]),
        };
        let c = luc_trivial_mean_check(&obs, 1e-12);
        assert!(c.holds);
        assert_abs_diff_eq!(c.tau.unwrap(), 0.2, epsilon = 1e-12);
        assert!(!luc_trivial_mean_check(&example3().obs, 1e-9).holds);
        let single = ObservationalMoments {
            mass: PerArm::new(vec![0.5], vec![0.5]),
            mean: PerArm::new(vec![0.1], vec![0.9]),
        };
        assert!(luc_trivial_mean_check(&single, 0.0).holds);
    }
}
