#![allow(dead_code)]

use ltebounds::assumptions::{fiber_bounds, Direction};
use ltebounds::solver::GammaPolytope;
use ltebounds::{AssumptionSpec, DgpSpec, PerArm, ProblemMoments, ShortTermLaw, TemporalLink};
use rand::Rng;

/// Population moments of a random process satisfying `target`.
pub fn random_instance<R: Rng>(k: usize, target: Option<&AssumptionSpec>, rng: &mut R) -> (DgpSpec, ProblemMoments) {
    let dgp = DgpSpec::random(k, target, rng);
    let pm = dgp.population_moments();
    (dgp, pm)
}

/// A short-term law with a nonempty fiber: random points first, then
/// mixtures with the true law, then the true law itself.
pub fn feasible_gamma<R: Rng>(a: &AssumptionSpec, pm: &ProblemMoments, truth: &ShortTermLaw, rng: &mut R) -> ShortTermLaw {
    let poly = GammaPolytope::of(pm).expect("population polytope is nonempty");
    let ok = |g: &ShortTermLaw| fiber_bounds(a, pm, g).map(|f| f.feasible).unwrap_or(false);
    for _ in 0..20 {
        let g = poly.random(rng);
        if ok(&g) {
            return g;
        }
    }
    for _ in 0..20 {
        let g = truth.mix(&poly.random(rng), rng.random_range(0.5..1.0));
        if ok(&g) {
            return g;
        }
    }
    truth.clone()
}

/// Uniform draw from the box fiber of a closed-form assumption.
pub fn random_fiber_point<R: Rng>(a: &AssumptionSpec, pm: &ProblemMoments, g: &ShortTermLaw, rng: &mut R) -> TemporalLink {
    let f = fiber_bounds(a, pm, g).expect("valid law");
    let k = pm.k();
    let draw = |lo: f64, hi: f64, rng: &mut R| if hi > lo { rng.random_range(lo..=hi) } else { lo.min(hi) };
    match a {
        AssumptionSpec::Ti => {
            let m: Vec<f64> = (0..k).map(|s| draw(f.box_lo.treated[s], f.box_hi.treated[s], rng)).collect();
            TemporalLink::new(m.clone(), m)
        }
        _ => {
            let mut m = PerArm::from_fn(|d| (0..k).map(|s| draw(f.box_lo[d][s], f.box_hi[d][s], rng)).collect::<Vec<_>>());
            if let AssumptionSpec::Liv { direction } = a {
                // Running maxima stay inside a box with monotone endpoints.
                for v in [&mut m.control, &mut m.treated] {
                    let order: Vec<usize> = match direction {
                        Direction::Increasing => (0..k).collect(),
                        Direction::Decreasing => (0..k).rev().collect(),
                    };
                    let mut run = f64::NEG_INFINITY;
                    for s in order {
                        run = run.max(v[s]);
                        v[s] = run;
                    }
                }
            }
            TemporalLink { m }
        }
    }
}

/// LUC written as explicit equalities on the positive-mass cells.
pub fn luc_as_custom(pm: &ProblemMoments) -> AssumptionSpec {
    let system = AssumptionSpec::Luc.linear_system(pm);
    AssumptionSpec::custom(pm.k(), system).expect("unit rows have full rank")
}

pub fn worst_case_as_custom(k: usize) -> AssumptionSpec {
    AssumptionSpec::custom(k, ltebounds::LinearSystem::empty(2 * k)).expect("empty system")
}

/// Moments of the frozen instance on which a crippled search fails.
pub fn negative_control() -> ProblemMoments {
    use ltebounds::{ObservationalMoments, SupportSpec};
    let obs = ObservationalMoments {
        mass: PerArm::new(vec![0.1116, 0.0578, 0.1735], vec![0.3579, 0.2619, 0.0373]),
        mean: PerArm::new(vec![0.3217, 0.0824, 0.2631], vec![0.0628, 0.2199, 0.2686]),
    };
    ProblemMoments::new(SupportSpec::unit(3, 1), obs, None).expect("well formed")
}
