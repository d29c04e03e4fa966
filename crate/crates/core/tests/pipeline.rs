use proptest::prelude::*;

use wva_core::config::ExperimentFile;
use wva_core::hypothesis::{power_nps, power_ps};
use wva_core::montecarlo::{run, Mode, SimulationConfig, SimulationOutcome};
use wva_core::optics::{refraction_shifts, Case};

#[test]
fn bundled_config_to_empirical_power() {
    let file = ExperimentFile::bundled();
    let setup = file.setup().unwrap();
    let rule = file.rule().unwrap();
    let shifts = refraction_shifts(&setup.crystal);
    assert_eq!(Case::matching(setup.alpha, setup.beta), Some(Case::B));

    let config = SimulationConfig {
        setup,
        shifts,
        rule,
        n_emitted: 2_000_000,
        seed: 5,
        mode: Mode::Ps,
    };
    let SimulationOutcome::Detected { power, .. } = run(&config).unwrap() else {
        panic!("expected detections")
    };
    let analytic = power_ps(shifts.g_lambda_minus(), &setup, &rule).unwrap();
    assert!((power.estimate - analytic).abs() < 4.0 * power.std_error.max(1e-3));

    let config = SimulationConfig {
        mode: Mode::Nps,
        n_emitted: 200_000,
        ..config
    };
    let SimulationOutcome::Detected { power, .. } = run(&config).unwrap() else {
        panic!("expected detections")
    };
    let analytic = power_nps(shifts.g_lambda_minus(), setup.beam_waist_um, &rule);
    assert!((power.estimate - analytic).abs() < 4.0 * power.std_error);
}

proptest! {
    #[test]
    fn config_round_trip(waist in 1.0f64..500.0, alpha in -3.0f64..3.0, beta in -3.0f64..3.0, c in 0.01f64..5.0) {
        let mut file = ExperimentFile::bundled();
        file.beam_waist_um = waist;
        file.alpha_rad.0 = alpha;
        file.beta_rad.0 = beta;
        file.rule.critical_point = c;
        let again = ExperimentFile::from_json(&file.to_json()).unwrap();
        prop_assert_eq!(file.setup().unwrap(), again.setup().unwrap());
        prop_assert_eq!(file.rule().unwrap(), again.rule().unwrap());
    }
}
