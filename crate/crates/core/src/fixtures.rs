//! Named fixtures shared by tests, examples and the CLI documentation.

use crate::moments::{ExperimentalMoments, ObservationalMoments, PerArm, ProblemMoments, SupportSpec};

/// Binary short- and long-term outcomes with index 0 = low (`S = 0`) and
/// index 1 = high (`S = 1`); the experiment has perfect compliance with
/// `z = 0` assigning control and `z = 1` assigning treatment.
pub fn example3() -> ProblemMoments {
    let obs = ObservationalMoments {
        mass: PerArm::new(vec![0.3, 0.2], vec![0.2, 0.3]),
        mean: PerArm::new(vec![0.2, 0.4], vec![0.4, 0.7]),
    };
    let exp = ExperimentalMoments {
        mass: vec![
            PerArm::new(vec![0.7, 0.3], vec![0.0, 0.0]),
            PerArm::new(vec![0.0, 0.0], vec![0.3, 0.7]),
        ],
    };
    ProblemMoments::new(SupportSpec::unit(2, 2), obs, Some(exp)).expect("fixture is well formed")
}
