//! Bounds on the long-term effect: the extremes of `T(m, gamma)` over the
//! identified set, computed as an outer problem in `gamma` around an inner
//! problem over the fiber of links.

mod alternating;
mod linear;
mod outer;
mod polytope;

use serde::{Deserialize, Serialize};

pub use alternating::{alternate_from, alternating_bilinear, inner_fiber_lp, AlternationRun};
pub use linear::linear_gamma_program;
pub use outer::{outer_search, SearchOutcome};
pub use polytope::GammaPolytope;

pub(crate) use alternating::find_feasible_gamma;

use crate::assumptions::{fiber_bounds, selector_from_fiber, AssumptionSpec};
use crate::error::{Error, Result};
use crate::identified::{lte_functional, validate_moments, Issue};
use crate::lp::Sense;
use crate::moments::{Interval, ProblemMoments, ShortTermLaw, TemporalLink, FEAS_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    Combined,
    ObservationalOnly,
}

impl Scope {
    pub fn apply(self, pm: &ProblemMoments) -> ProblemMoments {
        match self {
            Scope::Combined => pm.clone(),
            Scope::ObservationalOnly => pm.observational_only(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub multistarts: usize,
    pub grid_refinements: usize,
    pub step_init: f64,
    pub tol_obj: f64,
    pub seed: u64,
    pub scope: Scope,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            multistarts: 32,
            grid_refinements: 20,
            step_init: 0.25,
            tol_obj: 1e-10,
            seed: 1729,
            scope: Scope::Combined,
        }
    }
}

impl SolverConfig {
    pub fn with_scope(&self, scope: Scope) -> Self {
        SolverConfig { scope, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.multistarts < 1 {
            return Err(Error::Invalid("multistarts must be at least 1".into()));
        }
        if !(self.tol_obj > 0.0) {
            return Err(Error::Invalid("tol_obj must be positive".into()));
        }
        if !(self.step_init > 0.0 && self.step_init <= 1.0) {
            return Err(Error::Invalid("step_init must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Exact,
    LocalSearch,
    Infeasible,
}

/// A point of the identified set attaining one endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Objective on the `[0, 1]` outcome scale.
    pub value: f64,
    pub link: TemporalLink,
    pub gamma: ShortTermLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sense: String,
    pub start: usize,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    /// Bounds on the original outcome scale.
    pub interval: Interval,
    /// Bounds on the `[0, 1]` outcome scale.
    pub normalized: Interval,
    pub lower_witness: Option<Witness>,
    pub upper_witness: Option<Witness>,
    pub status: SolveStatus,
    pub trace: Vec<TraceEntry>,
    pub scale: (f64, f64),
    pub assumption: String,
    pub scope: Scope,
    /// Uniform slack that had to be added to make the constraint set nonempty.
    pub relaxed: Option<f64>,
    pub message: Option<String>,
}

impl BoundsResult {
    fn infeasible(pm: &ProblemMoments, a: &AssumptionSpec, scope: Scope, message: String) -> Self {
        BoundsResult {
            interval: Interval::empty(),
            normalized: Interval::empty(),
            lower_witness: None,
            upper_witness: None,
            status: SolveStatus::Infeasible,
            trace: Vec::new(),
            scale: (pm.support.y_low, pm.support.y_high),
            assumption: a.name(),
            scope,
            relaxed: None,
            message: Some(message),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.status == SolveStatus::Infeasible
    }
}

fn sense_label(sense: Sense) -> &'static str {
    match sense {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    }
}

/// Exact endpoint for objectives linear in `gamma`.
fn exact_endpoint(pm: &ProblemMoments, a: &AssumptionSpec, poly: &GammaPolytope, sense: Sense) -> Result<SearchOutcome> {
    let (coef, constant) = linear::affine_objective(a, pm, sense);
    let gamma = linear_gamma_program(&coef, &poly.lower, sense)?;
    let fiber = fiber_bounds(a, pm, &gamma)?;
    let link = selector_from_fiber(&fiber, &gamma, sense == Sense::Maximize);
    let value = lte_functional(&link, &gamma);
    let affine: f64 = constant
        + coef
            .iter()
            .map(|(d, c)| c.iter().zip(&gamma.gamma[d]).map(|(x, g)| x * g).sum::<f64>())
            .sum::<f64>();
    debug_assert!((value - affine).abs() < 1e-9, "affine form {affine} disagrees with {value}");
    Ok(SearchOutcome { value, gamma, link, trace: vec![Some(value)] })
}

/// Sharp bounds `[min T, max T]` over the identified set under `a`.
///
/// An empty identified set is reported through `SolveStatus::Infeasible`
/// rather than an error; malformed moments are errors.
pub fn solve_bounds(pm: &ProblemMoments, a: &AssumptionSpec, cfg: &SolverConfig) -> Result<BoundsResult> {
    cfg.validate()?;
    let pm = cfg.scope.apply(pm);
    let report = validate_moments(&pm, FEAS_TOL);
    let hard: Vec<String> = report
        .issues
        .iter()
        .filter(|i| !matches!(i, Issue::GammaInfeasible { .. }))
        .map(|i| i.to_string())
        .collect();
    if !hard.is_empty() {
        return Err(Error::Invalid(hard.join("; ")));
    }
    if let AssumptionSpec::CustomLinear { system } = a {
        AssumptionSpec::custom(pm.k(), system.clone())?;
    }
    let poly = match GammaPolytope::of(&pm) {
        Ok(p) => p,
        Err(Error::Infeasible(msg)) => return Ok(BoundsResult::infeasible(&pm, a, cfg.scope, msg)),
        Err(e) => return Err(e),
    };

    let exact = matches!(a, AssumptionSpec::WorstCase | AssumptionSpec::Luc) && pm.slack.fiber == 0.0;
    let mut ends = Vec::with_capacity(2);
    let mut trace = Vec::new();
    for sense in [Sense::Minimize, Sense::Maximize] {
        let outcome = if exact {
            exact_endpoint(&pm, a, &poly, sense)
        } else if a.has_closed_form() {
            outer_search(&pm, a, cfg, sense)
        } else {
            alternating_bilinear(&pm, a, cfg, sense)
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(Error::Infeasible(msg)) => return Ok(BoundsResult::infeasible(&pm, a, cfg.scope, msg)),
            Err(e) => return Err(e),
        };
        trace.extend(outcome.trace.iter().enumerate().map(|(start, v)| TraceEntry {
            sense: sense_label(sense).into(),
            start,
            value: *v,
        }));
        ends.push(Witness { value: outcome.value, link: outcome.link, gamma: outcome.gamma });
    }
    let upper = ends.pop().expect("two endpoints");
    let lower = ends.pop().expect("two endpoints");
    // Local search can leave the endpoints crossed by rounding on point-identified problems.
    let (lo, hi) = if lower.value <= upper.value {
        (lower.value, upper.value)
    } else {
        (upper.value, lower.value)
    };
    let normalized = Interval::new(lo, hi);
    let range = pm.support.y_range();
    Ok(BoundsResult {
        interval: normalized.scale(range),
        normalized,
        lower_witness: Some(lower),
        upper_witness: Some(upper),
        status: if exact { SolveStatus::Exact } else { SolveStatus::LocalSearch },
        trace,
        scale: (pm.support.y_low, pm.support.y_high),
        assumption: a.name(),
        scope: cfg.scope,
        relaxed: None,
        message: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use crate::identified::membership;
    use approx::assert_abs_diff_eq;

    fn bounds(a: AssumptionSpec, scope: Scope) -> BoundsResult {
        solve_bounds(&example3(), &a, &SolverConfig::default().with_scope(scope)).unwrap()
    }

    #[test]
    fn ex3_luc_is_point_identified() {
        let r = bounds(AssumptionSpec::Luc, Scope::Combined);
        assert_eq!(r.status, SolveStatus::Exact);
        assert_abs_diff_eq!(r.interval.lo, 0.35, epsilon = 1e-9);
        assert_abs_diff_eq!(r.interval.hi, 0.35, epsilon = 1e-9);
    }

    #[test]
    fn ex3_luc_observational_only() {
        let r = bounds(AssumptionSpec::Luc, Scope::ObservationalOnly);
        assert_abs_diff_eq!(r.interval.lo, 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(r.interval.hi, 0.40, epsilon = 1e-9);
    }

    #[test]
    fn ex3_worst_case() {
        for scope in [Scope::Combined, Scope::ObservationalOnly] {
            let r = bounds(AssumptionSpec::WorstCase, scope);
            assert_abs_diff_eq!(r.interval.lo, -0.35, epsilon = 1e-9);
            assert_abs_diff_eq!(r.interval.hi, 0.65, epsilon = 1e-9);
        }
    }

    #[test]
    fn witnesses_are_members() {
        let pm = example3();
        for a in [AssumptionSpec::WorstCase, AssumptionSpec::Luc, AssumptionSpec::Ti, AssumptionSpec::liv()] {
            for scope in [Scope::Combined, Scope::ObservationalOnly] {
                let r = solve_bounds(&pm, &a, &SolverConfig::default().with_scope(scope)).unwrap();
                let spm = scope.apply(&pm);
                for w in [r.lower_witness.unwrap(), r.upper_witness.unwrap()] {
                    assert!(membership(&w.link, &w.gamma, &spm, &a, 1e-6), "{a} {scope:?}");
                }
            }
        }
    }

    #[test]
    fn rescaling_outcomes_scales_the_interval() {
        let mut pm = example3();
        pm.support.y_low = 10.0;
        pm.support.y_high = 30.0;
        let r = solve_bounds(&pm, &AssumptionSpec::WorstCase, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.interval.lo, -7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.interval.hi, 13.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.normalized.hi, 0.65, epsilon = 1e-9);
    }

    #[test]
    fn overfull_lower_bounds_are_infeasible() {
        let mut pm = example3();
        if let Some(exp) = pm.exp.as_mut() {
            exp.mass[0].control = vec![0.9, 0.1];
            exp.mass[0].treated = vec![0.0, 0.0];
        }
        // Control lower bounds become (0.9, 0.2).
        let r = solve_bounds(&pm, &AssumptionSpec::WorstCase, &SolverConfig::default()).unwrap();
        assert!(r.is_infeasible());
        assert!(r.interval.is_empty());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SolverConfig { multistarts: 0, ..SolverConfig::default() };
        assert!(solve_bounds(&example3(), &AssumptionSpec::Ti, &cfg).is_err());
    }
}
