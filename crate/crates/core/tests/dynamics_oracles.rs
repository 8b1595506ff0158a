//! Whole-model checks: conservation, the closed-form chipped hover, and the spectral
//! predictions of the vibration forces against simulated traces.

#[path = "support/dynamics.rs"]
mod dynamics;

#[test]
fn free_tumble_conserves_momentum() {
    let (linear, angular) = dynamics::momentum_drift();
    assert!(linear < 1e-8, "linear {linear:e}");
    assert!(angular < 1e-8, "angular {angular:e}");
}

#[test]
fn healthy_vehicle_has_no_vibration_forces() {
    let (arm, unbalance) = dynamics::healthy_vibration(1000, 3);
    assert!(arm < 1e-12, "f_as {arm:e}");
    assert_eq!(unbalance, 0.0);
}

#[test]
fn chipped_hover_accelerates_at_the_rotor_pulsation() {
    // The rotating centre of mass shakes the body: |v'| = |f_aa| / m in this free hover,
    // reduced by the coupled rotation of the frame.
    let (amp, expected) = dynamics::free_hover_peak();
    assert!((amp - expected).abs() / expected < 0.02, "{amp} vs {expected}");
}

#[test]
fn closed_loop_chipped_hover_matches_the_closed_form() {
    for d in [1.0, 0.05] {
        let (amp, expected) = dynamics::closed_loop_hover_peak(d);
        assert!((amp - expected).abs() / expected < 0.02, "d = {d}: {amp} vs {expected}");
    }
}

#[test]
fn arm_force_spectrum_follows_from_the_rate_trace() {
    let (err, bins, weak) = dynamics::arm_predictor();
    assert!(bins >= 1);
    assert!(err < 0.01, "relative error {err} over {bins} bins");
    // the weak bins track too, to a fraction of the peak
    assert!(weak < 0.01, "{weak}");
}

#[test]
fn unbalance_force_is_the_rotation_modulated_carrier() {
    let (err, bins) = dynamics::unbalance_modulation();
    assert!(bins >= 2);
    assert!(err < 0.01, "relative error {err} over {bins} bins");
}
