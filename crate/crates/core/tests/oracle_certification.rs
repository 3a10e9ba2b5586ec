mod common;

use ltebounds::{grid_identified_set, oracle_compare, AssumptionSpec, Scope, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{negative_control, random_instance};

fn observational(cfg: SolverConfig) -> SolverConfig {
    cfg.with_scope(Scope::ObservationalOnly)
}

#[test]
fn default_search_certifies_the_negative_control() {
    let r = oracle_compare(&negative_control(), &AssumptionSpec::liv(), &observational(SolverConfig::default()), 400)
        .unwrap();
    assert!(r.pass, "gaps {} {}", r.gap_lo, r.gap_hi);
    assert!((r.oracle.interval.lo + 0.653326).abs() < 1e-5);
}

#[test]
fn crippled_search_is_caught() {
    let cfg = SolverConfig { multistarts: 1, step_init: 1e-6, ..SolverConfig::default() };
    let r = oracle_compare(&negative_control(), &AssumptionSpec::liv(), &observational(cfg), 400).unwrap();
    assert_eq!(r.verdict(), "FAIL");
    assert!(r.gap_lo > r.tolerance, "gap {}", r.gap_lo);
}

#[test]
fn oracle_is_an_inner_approximation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for a in [AssumptionSpec::WorstCase, AssumptionSpec::Luc, AssumptionSpec::liv(), AssumptionSpec::liv_and_ti()] {
        let (_, pm) = random_instance(2, Some(&a), &mut rng);
        let r = oracle_compare(&pm, &a, &SolverConfig::default(), 200).unwrap();
        assert!(r.pass, "{a}: gaps {} {}", r.gap_lo, r.gap_hi);
        // Attained oracle values are feasible, so exact endpoints enclose them.
        if matches!(a, AssumptionSpec::WorstCase | AssumptionSpec::Luc) {
            assert!(r.oracle.interval.is_subset_of(&r.solver.normalized, 1e-9));
        }
    }
}

#[test]
fn finer_lattices_do_not_shrink_the_attained_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let (_, pm) = random_instance(2, Some(&AssumptionSpec::Ti), &mut rng);
    let coarse = grid_identified_set(&pm, &AssumptionSpec::Ti, 50).unwrap();
    let fine = grid_identified_set(&pm, &AssumptionSpec::Ti, 100).unwrap();
    assert!(coarse.interval.is_subset_of(&fine.interval, 1e-12));
    assert!(fine.lattice_points > coarse.lattice_points);
}
