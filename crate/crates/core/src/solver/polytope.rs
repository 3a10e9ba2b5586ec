//! The polytope of admissible short-term laws: per arm, a simplex with
//! coordinatewise lower bounds.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::identified::gamma_lower_bounds;
use crate::moments::{Arm, PerArm, ProblemMoments, ShortTermLaw, FEAS_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct GammaPolytope {
    pub lower: PerArm<Vec<f64>>,
    /// Mass left after every coordinate sits at its lower bound.
    pub free: PerArm<f64>,
}

impl GammaPolytope {
    pub fn from_lower(lower: PerArm<Vec<f64>>) -> Result<Self> {
        let mut free = PerArm::new(0.0, 0.0);
        for d in Arm::BOTH {
            let f = 1.0 - lower[d].iter().sum::<f64>();
            if f < -FEAS_TOL {
                return Err(Error::Infeasible(format!(
                    "lower bounds on gamma for {d} sum to {:.9} > 1",
                    1.0 - f
                )));
            }
            free[d] = f.max(0.0);
        }
        Ok(GammaPolytope { lower, free })
    }

    pub fn of(pm: &ProblemMoments) -> Result<Self> {
        Self::from_lower(gamma_lower_bounds(pm))
    }

    pub fn k(&self) -> usize {
        self.lower.control.len()
    }

    pub fn is_point(&self) -> bool {
        self.free.control <= 0.0 && self.free.treated <= 0.0
    }

    /// Point with the free mass of each arm split according to `weights`.
    pub fn allocate(&self, weights: &PerArm<Vec<f64>>) -> ShortTermLaw {
        ShortTermLaw {
            gamma: PerArm::from_fn(|d| {
                let total: f64 = weights[d].iter().sum();
                self.lower[d]
                    .iter()
                    .zip(&weights[d])
                    .map(|(l, w)| l + self.free[d] * if total > 0.0 { w / total } else { 0.0 })
                    .collect()
            }),
        }
    }

    pub fn center(&self) -> ShortTermLaw {
        let k = self.k();
        self.allocate(&PerArm::new(vec![1.0; k], vec![1.0; k]))
    }

    /// All free mass of the control arm on `s0`, of the treated arm on `s1`.
    pub fn vertex(&self, s0: usize, s1: usize) -> ShortTermLaw {
        let k = self.k();
        let unit = |s: usize| (0..k).map(|i| if i == s { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        self.allocate(&PerArm::new(unit(s0), unit(s1)))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> ShortTermLaw {
        let k = self.k();
        let mut draw = || (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect::<Vec<_>>();
        let w = PerArm::new(draw(), draw());
        self.allocate(&w)
    }

    /// Moves up to `amount` of arm `d`'s mass from `from` to `to`, never
    /// crossing the lower bound of `from`. Returns the mass moved.
    pub fn shift(&self, gamma: &mut ShortTermLaw, d: Arm, from: usize, to: usize, amount: f64) -> f64 {
        let room = gamma.gamma[d][from] - self.lower[d][from];
        let moved = amount.min(room);
        if moved <= 0.0 {
            return 0.0;
        }
        gamma.gamma[d][from] -= moved;
        gamma.gamma[d][to] += moved;
        moved
    }

    pub fn contains(&self, gamma: &ShortTermLaw, tol: f64) -> bool {
        gamma.is_distribution(tol)
            && Arm::BOTH
                .iter()
                .all(|&d| gamma.gamma[d].iter().zip(&self.lower[d]).all(|(g, l)| *g >= l - tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ex3_combined_polytope_is_a_point() {
        let poly = GammaPolytope::of(&example3()).unwrap();
        assert!(poly.free.control.abs() < 1e-12 && poly.free.treated.abs() < 1e-12);
    }

    #[test]
    fn random_points_are_feasible() {
        let poly = GammaPolytope::of(&example3().observational_only()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert!(poly.contains(&poly.random(&mut rng), 1e-12));
        }
        assert!(poly.contains(&poly.vertex(0, 1), 1e-12));
    }

    #[test]
    fn shift_respects_lower_bounds() {
        let poly = GammaPolytope::of(&example3().observational_only()).unwrap();
        let mut g = poly.vertex(0, 0);
        let moved = poly.shift(&mut g, Arm::Treated, 1, 0, 0.25);
        assert_eq!(moved, 0.0);
        let moved = poly.shift(&mut g, Arm::Treated, 0, 1, 1.0);
        assert!((moved - 0.5).abs() < 1e-12);
        assert!(poly.contains(&g, 1e-12));
    }
}
