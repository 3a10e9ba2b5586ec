//! Multistart pattern search over the short-term-law polytope.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::polytope::GammaPolytope;
use super::SolverConfig;
use crate::assumptions::{fiber_bounds, selector_from_fiber, AssumptionSpec};
use crate::error::{Error, Result};
use crate::identified::lte_functional;
use crate::lp::Sense;
use crate::moments::{Arm, ProblemMoments, ShortTermLaw, TemporalLink};

const MAX_SWEEPS: usize = 400;
const VERTEX_GRID_MAX_K: usize = 6;

/// Lexicographic score: fiber violation first, objective second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Score {
    pub violation: f64,
    pub value: f64,
}

impl Score {
    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    pub fn better_than(&self, other: &Score, sense: Sense, tol: f64) -> bool {
        if !self.feasible() || !other.feasible() {
            return self.violation < other.violation - 1e-15;
        }
        match sense {
            Sense::Maximize => self.value > other.value + tol,
            Sense::Minimize => self.value < other.value - tol,
        }
    }
}

/// Best point found by one endpoint search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub value: f64,
    pub gamma: ShortTermLaw,
    pub link: TemporalLink,
    /// Final objective of every start; `None` where no feasible point was reached.
    pub trace: Vec<Option<f64>>,
}

/// Center, vertices and `cfg.multistarts` random interior points.
pub(crate) fn starting_points(poly: &GammaPolytope, cfg: &SolverConfig) -> Vec<ShortTermLaw> {
    let k = poly.k();
    let mut starts = vec![poly.center()];
    if poly.is_point() {
        return starts;
    }
    if k <= VERTEX_GRID_MAX_K {
        for s0 in 0..k {
            for s1 in 0..k {
                starts.push(poly.vertex(s0, s1));
            }
        }
    } else {
        starts.extend((0..k).map(|s| poly.vertex(s, s)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    starts.extend((0..cfg.multistarts).map(|_| poly.random(&mut rng)));
    starts
}

fn neighbours(poly: &GammaPolytope, g: &ShortTermLaw, step: f64, joint: bool) -> Vec<ShortTermLaw> {
    let k = poly.k();
    let mut out = Vec::new();
    for d in Arm::BOTH {
        if poly.free[d] <= 0.0 {
            continue;
        }
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let mut c = g.clone();
                    if poly.shift(&mut c, d, i, j, step) > 0.0 {
                        out.push(c);
                    }
                }
            }
        }
    }
    if joint && poly.free.control > 0.0 && poly.free.treated > 0.0 {
        for i in 0..k {
            for j in (i + 1)..k {
                for (f0, t0) in [(i, j), (j, i)] {
                    for (f1, t1) in [(i, j), (j, i)] {
                        let mut c = g.clone();
                        let a = poly.shift(&mut c, Arm::Control, f0, t0, step);
                        let b = poly.shift(&mut c, Arm::Treated, f1, t1, step);
                        if a > 0.0 && b > 0.0 {
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}

fn local_search<F>(
    poly: &GammaPolytope,
    start: ShortTermLaw,
    eval: &F,
    sense: Sense,
    cfg: &SolverConfig,
    joint: bool,
) -> (ShortTermLaw, Score)
where
    F: Fn(&ShortTermLaw) -> Score,
{
    let mut cur = start;
    let mut cur_score = eval(&cur);
    if poly.is_point() {
        return (cur, cur_score);
    }
    let mut step = cfg.step_init;
    for _ in 0..=cfg.grid_refinements {
        for _ in 0..MAX_SWEEPS {
            let mut best: Option<(ShortTermLaw, Score)> = None;
            for cand in neighbours(poly, &cur, step, joint) {
                let s = eval(&cand);
                let incumbent = best.as_ref().map_or(&cur_score, |b| &b.1);
                if s.better_than(incumbent, sense, cfg.tol_obj) {
                    best = Some((cand, s));
                }
            }
            match best {
                Some((g, s)) => {
                    cur = g;
                    cur_score = s;
                }
                None => break,
            }
        }
        step *= 0.5;
    }
    (cur, cur_score)
}

/// Runs the local search from every start; results keep the start order.
pub(crate) fn pattern_search<F>(
    poly: &GammaPolytope,
    starts: Vec<ShortTermLaw>,
    eval: F,
    sense: Sense,
    cfg: &SolverConfig,
    joint: bool,
) -> Vec<(ShortTermLaw, Score)>
where
    F: Fn(&ShortTermLaw) -> Score + Sync,
{
    starts
        .into_par_iter()
        .map(|s| local_search(poly, s, &eval, sense, cfg, joint))
        .collect()
}

/// Index of the best result; earlier starts win ties.
pub(crate) fn best_index(results: &[(ShortTermLaw, Score)], sense: Sense) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (_, s)) in results.iter().enumerate() {
        if best.is_none_or(|b| s.better_than(&results[b].1, sense, 0.0)) {
            best = Some(i);
        }
    }
    best
}

pub(crate) fn selector_score(a: &AssumptionSpec, pm: &ProblemMoments, g: &ShortTermLaw, sense: Sense) -> Score {
    match fiber_bounds(a, pm, g) {
        Ok(f) if f.feasible => {
            let link = selector_from_fiber(&f, g, sense == Sense::Maximize);
            Score { violation: 0.0, value: lte_functional(&link, g) }
        }
        Ok(f) => Score { violation: f.violation, value: 0.0 },
        Err(_) => Score { violation: f64::INFINITY, value: 0.0 },
    }
}

/// Extreme value of `T(selector(gamma), gamma)` over the polytope, by
/// multistart coordinate-pair pattern search.
pub fn outer_search(pm: &ProblemMoments, a: &AssumptionSpec, cfg: &SolverConfig, sense: Sense) -> Result<SearchOutcome> {
    if !a.has_closed_form() {
        return Err(Error::Invalid(format!("assumption {a} has no closed-form selectors")));
    }
    cfg.validate()?;
    let poly = GammaPolytope::of(pm)?;
    let starts = starting_points(&poly, cfg);
    let joint = !a.is_arm_separable();
    let results = pattern_search(&poly, starts, |g| selector_score(a, pm, g, sense), sense, cfg, joint);
    let trace = results.iter().map(|(_, s)| s.feasible().then_some(s.value)).collect();
    let best = best_index(&results, sense).expect("at least one start");
    let (gamma, score) = results[best].clone();
    if !score.feasible() {
        return Err(Error::Infeasible(format!(
            "no short-term law with a nonempty fiber under {a} (smallest violation {:.3e})",
            score.violation
        )));
    }
    let fiber = fiber_bounds(a, pm, &gamma)?;
    let link = selector_from_fiber(&fiber, &gamma, sense == Sense::Maximize);
    Ok(SearchOutcome { value: score.value, gamma, link, trace })
}
