//! Plug-in estimation of the bounds from finite samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assumptions::AssumptionSpec;
use crate::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::moments::{Arm, ExperimentalMoments, Interval, ObservationalMoments, PerArm, ProblemMoments, Slack, SupportSpec};
use crate::solver::{find_feasible_gamma, solve_bounds, BoundsResult, GammaPolytope, SolverConfig};

/// One observational record: outcome, 0-based support index, arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationalRecord {
    pub y: f64,
    pub s: usize,
    pub d: Arm,
}

/// One experimental record: 0-based support index, arm, 0-based instrument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentalRecord {
    pub s: usize,
    pub d: Arm,
    pub z: usize,
}

pub type ObservationalSample = Vec<ObservationalRecord>;
pub type ExperimentalSample = Vec<ExperimentalRecord>;

pub const RELAXATION_TOL: f64 = 1e-6;

#[derive(Clone)]
struct ObsTally {
    count: PerArm<Vec<u64>>,
    ysum: PerArm<Vec<f64>>,
}

impl ObsTally {
    fn new(k: usize) -> Self {
        ObsTally { count: PerArm::new(vec![0; k], vec![0; k]), ysum: PerArm::new(vec![0.0; k], vec![0.0; k]) }
    }

    fn merge(mut self, other: ObsTally) -> Self {
        for d in Arm::BOTH {
            for (a, b) in self.count[d].iter_mut().zip(&other.count[d]) {
                *a += b;
            }
            for (a, b) in self.ysum[d].iter_mut().zip(&other.ysum[d]) {
                *a += b;
            }
        }
        self
    }
}

/// Cell frequencies and normalized cell means. Instrument values with no
/// experimental records are dropped with a warning; an empty experimental
/// sample yields observational-only moments.
pub fn empirical_moments(
    obs: &[ObservationalRecord],
    exp: &[ExperimentalRecord],
    spec: &SupportSpec,
    clip: bool,
) -> Result<ProblemMoments> {
    let k = spec.k;
    if obs.is_empty() {
        return Err(Error::Domain("observational sample is empty".into()));
    }
    if let Some(r) = obs.iter().find(|r| r.s >= k) {
        return Err(Error::Domain(format!("support index {} outside 1..={k}", r.s + 1)));
    }
    if !clip {
        if let Some(r) = obs.iter().find(|r| !(spec.y_low..=spec.y_high).contains(&r.y)) {
            return Err(Error::Domain(format!(
                "outcome {} outside [{}, {}]",
                r.y, spec.y_low, spec.y_high
            )));
        }
    }
    let tally = obs
        .par_iter()
        .fold(
            || ObsTally::new(k),
            |mut t, r| {
                let y = r.y.clamp(spec.y_low, spec.y_high);
                t.count[r.d][r.s] += 1;
                t.ysum[r.d][r.s] += spec.normalize_y(y);
                t
            },
        )
        .reduce(|| ObsTally::new(k), ObsTally::merge);
    let n = obs.len() as f64;
    let observational = ObservationalMoments {
        mass: tally.count.map(|_, c| c.iter().map(|&v| v as f64 / n).collect()),
        mean: PerArm::from_fn(|d| {
            (0..k)
                .map(|s| {
                    let c = tally.count[d][s];
                    if c == 0 {
                        0.0
                    } else {
                        tally.ysum[d][s] / c as f64
                    }
                })
                .collect()
        }),
    };

    if let Some(r) = exp.iter().find(|r| r.s >= k || r.z >= spec.z_count) {
        return Err(Error::Domain(format!(
            "experimental record (s={}, z={}) outside the declared support",
            r.s + 1,
            r.z + 1
        )));
    }
    let zc = spec.z_count;
    let mut counts = vec![PerArm::new(vec![0u64; k], vec![0u64; k]); zc];
    for r in exp {
        counts[r.z][r.d][r.s] += 1;
    }
    let mut cells = Vec::new();
    for (z, c) in counts.iter().enumerate() {
        let total: u64 = c.control.iter().chain(&c.treated).sum();
        if total == 0 {
            if !exp.is_empty() {
                log::warn!("instrument value z={} has no experimental records; dropped", z + 1);
            }
            continue;
        }
        cells.push(c.map(|_, v| v.iter().map(|&x| x as f64 / total as f64).collect()));
    }
    let mut support = spec.clone();
    let experimental = if cells.is_empty() {
        None
    } else {
        support.z_count = cells.len();
        Some(ExperimentalMoments { mass: cells })
    };
    ProblemMoments::new(support, observational, experimental)
}

/// Whether the constraint set is nonempty once relaxed by `delta`.
fn nonempty_at(pm: &ProblemMoments, a: &AssumptionSpec, cfg: &SolverConfig, delta: f64) -> bool {
    let fiber = if a.fiber_can_be_empty() { delta } else { 0.0 };
    let relaxed = pm.with_slack(Slack { gamma: delta, fiber });
    let Ok(poly) = GammaPolytope::of(&relaxed) else {
        return false;
    };
    !a.fiber_can_be_empty() || find_feasible_gamma(&relaxed, a, &poly, cfg).is_some()
}

/// Smallest uniform slack, to within `RELAXATION_TOL`, that makes the
/// constraint set nonempty, with the correspondingly relaxed problem.
pub fn feasibility_relaxation(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    cfg: &SolverConfig,
) -> Result<(f64, ProblemMoments)> {
    let relaxed = |delta: f64| {
        let fiber = if a.fiber_can_be_empty() { delta } else { 0.0 };
        pm.with_slack(Slack { gamma: delta, fiber })
    };
    if nonempty_at(pm, a, cfg, 0.0) {
        return Ok((0.0, relaxed(0.0)));
    }
    if !nonempty_at(pm, a, cfg, 1.0) {
        return Err(Error::Infeasible("constraint set stays empty under full relaxation".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > RELAXATION_TOL {
        let mid = 0.5 * (lo + hi);
        if nonempty_at(pm, a, cfg, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, relaxed(hi)))
}

/// Solves on the given moments, falling back to the minimal relaxation when
/// the sample-analog constraint set is empty.
pub fn plug_in_from_moments(pm: &ProblemMoments, a: &AssumptionSpec, cfg: &SolverConfig) -> Result<BoundsResult> {
    let first = solve_bounds(pm, a, cfg)?;
    if !first.is_infeasible() {
        return Ok(first);
    }
    let scoped = cfg.scope.apply(pm);
    let (delta, relaxed) = feasibility_relaxation(&scoped, a, cfg)?;
    log::info!("empty sample-analog set relaxed by {delta:.6}");
    let mut result = solve_bounds(&relaxed, a, cfg)?;
    result.relaxed = Some(delta);
    Ok(result)
}

/// Plug-in bounds from raw samples. Outcomes outside the declared range are an error.
pub fn plug_in_bounds(
    obs: &[ObservationalRecord],
    exp: &[ExperimentalRecord],
    spec: &SupportSpec,
    a: &AssumptionSpec,
    cfg: &SolverConfig,
) -> Result<BoundsResult> {
    let pm = empirical_moments(obs, exp, spec, false)?;
    plug_in_from_moments(&pm, a, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub median_hausdorff: f64,
    pub distances: Vec<f64>,
    pub relaxed_runs: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
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

fn replication_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 24) ^ rep as u64);
    rng
}

/// Monte Carlo Hausdorff distance between plug-in and population bounds,
/// with `n` records in each sample.
pub fn consistency_study(
    dgp: &DgpSpec,
    a: &AssumptionSpec,
    sizes: &[usize],
    reps: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Vec<ConsistencyRow>> {
    dgp.validate()?;
    let truth = solve_bounds(&dgp.population_moments(), a, cfg)?;
    if truth.is_infeasible() {
        return Err(Error::Infeasible(format!("population identified set is empty under {a}")));
    }
    let target: Interval = truth.normalized;
    let spec = dgp.support();
    sizes
        .iter()
        .map(|&n| {
            let runs: Vec<Result<(f64, bool)>> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replication_rng(seed, n, rep);
                    let obs = dgp.sample_observational(n, &mut rng);
                    let exp = dgp.sample_experimental(n, &mut rng);
                    let pm = empirical_moments(&obs, &exp, &spec, true)?;
                    let r = plug_in_from_moments(&pm, a, cfg)?;
                    Ok((r.normalized.hausdorff(&target), r.relaxed.is_some()))
                })
                .collect();
            let runs: Vec<(f64, bool)> = runs.into_iter().collect::<Result<_>>()?;
            let distances: Vec<f64> = runs.iter().map(|r| r.0).collect();
            Ok(ConsistencyRow {
                n,
                median_hausdorff: median(&distances),
                relaxed_runs: runs.iter().filter(|r| r.1).count(),
                distances,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_mass_sample() {
        let obs = vec![ObservationalRecord { y: 1.0, s: 0, d: Arm::Treated }];
        let pm = empirical_moments(&obs, &[], &SupportSpec::unit(2, 1), false).unwrap();
        assert_eq!(pm.obs.mass.treated, vec![1.0, 0.0]);
        assert_eq!(pm.obs.mean.treated, vec![1.0, 0.0]);
        assert_eq!(pm.obs.mass.control, vec![0.0, 0.0]);
        assert!(pm.exp.is_none());
    }

    #[test]
    fn arm_frequency() {
        let obs: Vec<_> = (0..10)
            .map(|i| ObservationalRecord { y: 0.5, s: i % 2, d: if i < 5 { Arm::Treated } else { Arm::Control } })
            .collect();
        let pm = empirical_moments(&obs, &[], &SupportSpec::unit(2, 1), false).unwrap();
        assert_abs_diff_eq!(pm.obs.mass.treated.iter().sum::<f64>(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn out_of_range_outcomes() {
        let obs = vec![ObservationalRecord { y: 2.0, s: 0, d: Arm::Treated }];
        let spec = SupportSpec::unit(1, 1);
        assert!(matches!(empirical_moments(&obs, &[], &spec, false), Err(Error::Domain(_))));
        let pm = empirical_moments(&obs, &[], &spec, true).unwrap();
        assert_eq!(pm.obs.mean.treated, vec![1.0]);
    }

    #[test]
    fn empty_instrument_value_is_dropped() {
        let obs = vec![ObservationalRecord { y: 0.0, s: 0, d: Arm::Control }];
        let exp = vec![ExperimentalRecord { s: 0, d: Arm::Treated, z: 1 }];
        let pm = empirical_moments(&obs, &exp, &SupportSpec::unit(1, 2), false).unwrap();
        assert_eq!(pm.support.z_count, 1);
        assert_eq!(pm.exp.unwrap().mass.len(), 1);
    }

    #[test]
    fn feasible_problem_needs_no_relaxation() {
        let (delta, _) = feasibility_relaxation(&example3(), &AssumptionSpec::Ti, &SolverConfig::default()).unwrap();
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn linear_excess_is_split_across_binding_cells() {
        // Experimental control cells (0.52, 0.52) exceed the unit budget by 0.04.
        let mut pm = example3();
        let exp = pm.exp.as_mut().unwrap();
        exp.mass[0] = PerArm::new(vec![0.52, 0.48], vec![0.0, 0.0]);
        exp.mass[1] = PerArm::new(vec![0.0, 0.52], vec![0.3, 0.18]);
        let (delta, relaxed) = feasibility_relaxation(&pm, &AssumptionSpec::WorstCase, &SolverConfig::default()).unwrap();
        assert!((delta - 0.02).abs() <= RELAXATION_TOL, "{delta}");
        assert!(GammaPolytope::of(&relaxed).is_ok());
    }

    #[test]
    fn tiny_sample_triggers_relaxation() {
        // Control lower bounds from the two instrument values: s=1 from z=1, s=2 from z=2.
        let obs = vec![
            ObservationalRecord { y: 1.0, s: 0, d: Arm::Treated },
            ObservationalRecord { y: 0.0, s: 1, d: Arm::Control },
        ];
        let exp = vec![
            ExperimentalRecord { s: 0, d: Arm::Control, z: 0 },
            ExperimentalRecord { s: 1, d: Arm::Control, z: 1 },
        ];
        let spec = SupportSpec::unit(2, 2);
        let r = plug_in_bounds(&obs, &exp, &spec, &AssumptionSpec::WorstCase, &SolverConfig::default()).unwrap();
        let delta = r.relaxed.expect("relaxation applied");
        assert!((delta - 0.5).abs() <= RELAXATION_TOL, "{delta}");
        assert!(!r.is_infeasible());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
