//! Synthetic data-generating processes with known population moments and a
//! known long-term effect.
//!
//! A process is described cell by cell: the law `gamma_d` of `S(d)`, the
//! temporal link `m_d`, the observational treatment probability `pi_d(s)`
//! given `S(d) = s`, the mean `mu_d(s)` of `Y` among units selected into arm
//! `d`, and the experimental compliance table `P(D = 1 | Z = z)`.
//! Outcomes are binary on the normalized scale and mapped to `y_low`/`y_high`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::assumptions::{AssumptionSpec, Direction};
use crate::error::{Error, Result};
use crate::estimation::{ExperimentalRecord, ObservationalRecord};
use crate::identified::lte_functional;
use crate::moments::{
    Arm, ExperimentalMoments, ObservationalMoments, PerArm, ProblemMoments, ShortTermLaw, SupportSpec,
    TemporalLink,
};

const DGP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub k: usize,
    #[serde(default)]
    pub y_low: f64,
    #[serde(default = "one")]
    pub y_high: f64,
    pub gamma: PerArm<Vec<f64>>,
    pub link: PerArm<Vec<f64>>,
    pub propensity: PerArm<Vec<f64>>,
    pub selected_mean: PerArm<Vec<f64>>,
    /// `P(D = 1 | Z = z)` for each instrument value.
    pub compliance: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if k == 0 {
            return Err(Error::Invalid("dgp needs at least one support point".into()));
        }
        if !(self.y_low < self.y_high) {
            return Err(Error::Invalid("dgp needs y_low < y_high".into()));
        }
        if self.compliance.is_empty() || self.compliance.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Invalid("compliance probabilities must lie in [0, 1]".into()));
        }
        let mut selected = 0.0;
        for d in Arm::BOTH {
            for (name, v) in [
                ("gamma", &self.gamma[d]),
                ("link", &self.link[d]),
                ("propensity", &self.propensity[d]),
                ("selected_mean", &self.selected_mean[d]),
            ] {
                if v.len() != k {
                    return Err(Error::Invalid(format!("{name} for {d} must have length {k}")));
                }
                if v.iter().any(|x| !(-DGP_TOL..=1.0 + DGP_TOL).contains(x)) {
                    return Err(Error::Invalid(format!("{name} for {d} must lie in [0, 1]")));
                }
            }
            let total: f64 = self.gamma[d].iter().sum();
            if (total - 1.0).abs() > DGP_TOL {
                return Err(Error::Invalid(format!("gamma for {d} sums to {total}")));
            }
            for s in 0..k {
                let (pi, mu, m) = (self.propensity[d][s], self.selected_mean[d][s], self.link[d][s]);
                // m = mu * pi + (unselected mean) * (1 - pi) with the unselected mean in [0, 1].
                if m < mu * pi - DGP_TOL || m > mu * pi + 1.0 - pi + DGP_TOL {
                    return Err(Error::Invalid(format!("link for {d}, s={} is incompatible with selection", s + 1)));
                }
                selected += self.gamma[d][s] * pi;
            }
        }
        if (selected - 1.0).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "selection probabilities imply P(D=0) + P(D=1) = {selected}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn support(&self) -> SupportSpec {
        SupportSpec { k: self.k, z_count: self.compliance.len(), y_low: self.y_low, y_high: self.y_high }
    }

    pub fn short_term_law(&self) -> ShortTermLaw {
        ShortTermLaw { gamma: self.gamma.clone() }
    }

    pub fn temporal_link(&self) -> TemporalLink {
        TemporalLink { m: self.link.clone() }
    }

    /// Long-term effect on the `[0, 1]` scale.
    pub fn tau_normalized(&self) -> f64 {
        lte_functional(&self.temporal_link(), &self.short_term_law())
    }

    /// Long-term effect on the original outcome scale.
    pub fn tau(&self) -> f64 {
        self.tau_normalized() * (self.y_high - self.y_low)
    }

    fn arm_share(&self, d: Arm) -> f64 {
        (0..self.k).map(|s| self.gamma[d][s] * self.propensity[d][s]).sum()
    }

    fn arm_probability(&self, z: usize, d: Arm) -> f64 {
        match d {
            Arm::Treated => self.compliance[z],
            Arm::Control => 1.0 - self.compliance[z],
        }
    }

    pub fn population_moments(&self) -> ProblemMoments {
        let obs = ObservationalMoments {
            mass: PerArm::from_fn(|d| (0..self.k).map(|s| self.gamma[d][s] * self.propensity[d][s]).collect()),
            mean: PerArm::from_fn(|d| {
                (0..self.k)
                    .map(|s| if self.gamma[d][s] * self.propensity[d][s] > 0.0 { self.selected_mean[d][s] } else { 0.0 })
                    .collect()
            }),
        };
        let exp = ExperimentalMoments {
            mass: (0..self.compliance.len())
                .map(|z| PerArm::from_fn(|d| self.gamma[d].iter().map(|g| self.arm_probability(z, d) * g).collect()))
                .collect(),
        };
        ProblemMoments::new(self.support(), obs, Some(exp)).expect("dimensions follow from the spec")
    }

    pub fn sample_observational<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<ObservationalRecord> {
        let p1 = self.arm_share(Arm::Treated) / (self.arm_share(Arm::Treated) + self.arm_share(Arm::Control));
        let cells = PerArm::from_fn(|d| {
            let w: Vec<f64> = (0..self.k).map(|s| self.gamma[d][s] * self.propensity[d][s]).collect();
            WeightedIndex::new(&w).ok()
        });
        (0..n)
            .map(|_| {
                let mut d = if rng.random::<f64>() < p1 { Arm::Treated } else { Arm::Control };
                if cells[d].is_none() {
                    d = d.other();
                }
                let s = cells[d].as_ref().expect("some arm has mass").sample(rng);
                let high = rng.random::<f64>() < self.selected_mean[d][s];
                ObservationalRecord { y: if high { self.y_high } else { self.y_low }, s, d }
            })
            .collect()
    }

    pub fn sample_experimental<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<ExperimentalRecord> {
        let laws = PerArm::from_fn(|d| WeightedIndex::new(&self.gamma[d]).expect("gamma is a distribution"));
        let zc = self.compliance.len();
        (0..n)
            .map(|_| {
                let z = rng.random_range(0..zc);
                let d = if rng.random::<f64>() < self.compliance[z] { Arm::Treated } else { Arm::Control };
                ExperimentalRecord { s: laws[d].sample(rng), d, z }
            })
            .collect()
    }

    /// The worked binary example: effect 0.2, point-identified link under
    /// perfect compliance with `z = 0` assigning control.
    pub fn example3() -> DgpSpec {
        DgpSpec {
            k: 2,
            y_low: 0.0,
            y_high: 1.0,
            gamma: PerArm::new(vec![0.7, 0.3], vec![0.3, 0.7]),
            link: PerArm::new(vec![0.3, 0.3], vec![0.5, 0.5]),
            propensity: PerArm::new(vec![3.0 / 7.0, 2.0 / 3.0], vec![2.0 / 3.0, 3.0 / 7.0]),
            selected_mean: PerArm::new(vec![0.2, 0.4], vec![0.4, 0.7]),
            compliance: vec![0.0, 1.0],
        }
    }

    /// Uniform short-term laws, half selection, constant links of 0.5.
    pub fn uniform_example(k: usize) -> DgpSpec {
        let u = vec![1.0 / k as f64; k];
        DgpSpec {
            k,
            y_low: 0.0,
            y_high: 1.0,
            gamma: PerArm::new(u.clone(), u),
            link: PerArm::new(vec![0.5; k], vec![0.5; k]),
            propensity: PerArm::new(vec![0.5; k], vec![0.5; k]),
            selected_mean: PerArm::new(vec![0.5; k], vec![0.5; k]),
            compliance: vec![0.0, 1.0],
        }
    }

    /// A random process whose link satisfies `target` (`None` for no restriction).
    ///
    /// Compliance is imperfect, so the experiment leaves free mass in the
    /// short-term law.
    pub fn random<R: Rng + ?Sized>(k: usize, target: Option<&AssumptionSpec>, rng: &mut R) -> DgpSpec {
        let dirichlet = |rng: &mut R| {
            let w: Vec<f64> = (0..k).map(|_| 0.2 + rng.sample::<f64, _>(Exp1)).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect::<Vec<f64>>()
        };
        let gamma = PerArm::new(dirichlet(rng), dirichlet(rng));

        let uniform_link = |rng: &mut R| (0..k).map(|_| rng.random_range(0.05..0.95)).collect::<Vec<f64>>();
        let sorted = |mut v: Vec<f64>, dir: Direction| {
            v.sort_by(f64::total_cmp);
            if dir == Direction::Decreasing {
                v.reverse();
            }
            v
        };
        let link = match target {
            Some(AssumptionSpec::Liv { direction }) => {
                PerArm::new(sorted(uniform_link(rng), *direction), sorted(uniform_link(rng), *direction))
            }
            Some(AssumptionSpec::Ti) => {
                let m = uniform_link(rng);
                PerArm::new(m.clone(), m)
            }
            Some(AssumptionSpec::LivAndTi { direction }) => {
                let m = sorted(uniform_link(rng), *direction);
                PerArm::new(m.clone(), m)
            }
            _ => PerArm::new(uniform_link(rng), uniform_link(rng)),
        };

        let p1: f64 = rng.random_range(0.3..0.7);
        let propensity = loop {
            let draw = PerArm::from_fn(|_| (0..k).map(|_| rng.random_range(0.2..0.9)).collect::<Vec<f64>>());
            let scaled = PerArm::from_fn(|d| {
                let share = if d == Arm::Treated { p1 } else { 1.0 - p1 };
                let raw: f64 = draw[d].iter().zip(&gamma[d]).map(|(p, g)| p * g).sum();
                draw[d].iter().map(|p| p * share / raw).collect::<Vec<f64>>()
            });
            if Arm::BOTH.iter().all(|&d| scaled[d].iter().all(|p| *p <= 0.98)) {
                break scaled;
            }
        };

        let selected_mean = PerArm::from_fn(|d| {
            (0..k)
                .map(|s| {
                    let (m, pi) = (link[d][s], propensity[d][s]);
                    let lo = ((m - (1.0 - pi)) / pi).max(0.0);
                    let hi = (m / pi).min(1.0);
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect()
        });
        let compliance = vec![rng.random_range(0.0..0.3), rng.random_range(0.7..1.0)];
        let spec = DgpSpec { k, y_low: 0.0, y_high: 1.0, gamma, link, propensity, selected_mean, compliance };
        debug_assert!(spec.validate().is_ok(), "{:?}", spec.validate());
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use crate::identified::membership;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example3_reproduces_the_fixture() {
        let dgp = DgpSpec::example3();
        dgp.validate().unwrap();
        let pm = dgp.population_moments();
        let fx = example3();
        for d in Arm::BOTH {
            for s in 0..2 {
                assert_abs_diff_eq!(pm.obs.mass[d][s], fx.obs.mass[d][s], epsilon = 1e-12);
                assert_abs_diff_eq!(pm.obs.mean[d][s], fx.obs.mean[d][s], epsilon = 1e-12);
            }
        }
        assert_eq!(pm.exp, fx.exp);
        assert_abs_diff_eq!(dgp.tau(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn truth_belongs_to_the_identified_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in [AssumptionSpec::WorstCase, AssumptionSpec::liv(), AssumptionSpec::Ti, AssumptionSpec::liv_and_ti()] {
            for k in 2..=4 {
                let dgp = DgpSpec::random(k, Some(&a), &mut rng);
                dgp.validate().unwrap();
                let pm = dgp.population_moments();
                assert!(membership(&dgp.temporal_link(), &dgp.short_term_law(), &pm, &a, 1e-9), "{a} k={k}");
            }
        }
    }

    #[test]
    fn sampling_frequencies_converge() {
        let dgp = DgpSpec::example3();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let obs = dgp.sample_observational(100_000, &mut rng);
        let treated = obs.iter().filter(|r| r.d == Arm::Treated).count() as f64 / 1e5;
        assert!((treated - 0.5).abs() < 0.01);
        let exp = dgp.sample_experimental(100_000, &mut rng);
        assert!(exp.iter().all(|r| (r.z == 1) == (r.d == Arm::Treated)));
    }

    #[test]
    fn inconsistent_selection_is_rejected() {
        let mut dgp = DgpSpec::example3();
        dgp.propensity.treated[0] = 0.9;
        assert!(dgp.validate().is_err());
    }
}
