//! Shared fixtures for unit tests: the simulated two-level design used
//! throughout the test suite, the electronic-components dataset, and a
//! seeded sampler.

use crate::loss::ExperimentData;
use crate::model::{RegressionParams, SsaltModel, StressProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simulated design: x1 = 1 -> x2 = 2 at tau1 = 10, termination at tau2 = 33.
pub(crate) fn sim_profile() -> StressProfile {
    StressProfile::new(1.0, 2.0, 10.0, 33.0, 0.5).unwrap()
}

/// True parameters of the simulated design; lambda1 ~ 12.18, lambda2 ~ 4.48.
pub(crate) fn sim_params() -> RegressionParams {
    RegressionParams::new(3.5, -1.0)
}

/// Electronic-components test design: 100C -> 150C at 900 s, ends at 1096 s,
/// normal operating temperature 25C.
pub(crate) fn components_profile() -> StressProfile {
    StressProfile::new(100.0, 150.0, 900.0, 1096.0, 25.0).unwrap()
}

/// The electronic-components failure times (seconds). Stage-2 values are
/// recorded as offsets from the stress change and stored absolute.
pub(crate) fn components_data() -> ExperimentData {
    let stage1 = vec![
        32.0, 54.0, 59.0, 86.0, 117.0, 123.0, 213.0, 267.0, 268.0, 273.0, 299.0, 311.0, 321.0,
        333.0, 339.0, 386.0, 408.0, 422.0, 435.0, 437.0, 476.0, 518.0, 570.0, 632.0, 666.0,
        697.0, 796.0, 854.0, 858.0, 910.0,
    ];
    let stage2: Vec<f64> = [
        16.0, 19.0, 21.0, 36.0, 37.0, 63.0, 70.0, 75.0, 83.0, 95.0, 100.0, 106.0, 110.0, 113.0,
        116.0, 135.0, 136.0, 149.0, 172.0, 186.0,
    ]
    .iter()
    .map(|v| 900.0 + v)
    .collect();
    ExperimentData::new(stage1, stage2, 100).unwrap()
}

/// Draws one uncontaminated experiment from the simulated design.
pub(crate) fn sample_sim_data(seed: u64, n: usize) -> ExperimentData {
    let profile = sim_profile();
    let model = SsaltModel::new(sim_params(), profile).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for _ in 0..n {
        let t = model.inverse_cdf(rng.gen::<f64>()).unwrap();
        if t < profile.tau1 {
            s1.push(t);
        } else if t < profile.tau2 {
            s2.push(t);
        }
    }
    ExperimentData::new(s1, s2, n).unwrap()
}
