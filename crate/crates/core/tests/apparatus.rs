use approx::assert_abs_diff_eq;
use wva_core::photonic::{
    amplification, amplified_settings, equivalence_grid, readout_closed_form, simulate_apparatus,
    to_instance, ApparatusConfig, TARGET_AMPLIFICATION,
};
use wva_core::run_exact;

#[test]
fn apparatus_matches_abstract_scheme_on_grid() {
    let grid = equivalence_grid();
    assert_eq!(grid.len(), 100);
    for cfg in grid {
        let optics = simulate_apparatus(&cfg).unwrap();
        let abstract_run = run_exact(&to_instance(&cfg).unwrap()).unwrap();
        let closed = readout_closed_form(&cfg).unwrap();
        assert_abs_diff_eq!(
            optics.probability,
            abstract_run.probability,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            optics.sigma_z_expect,
            abstract_run.sigma_z_expect,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            optics.sigma_z_expect,
            closed.sigma_z_expect,
            epsilon = 1e-10
        );
    }
}

#[test]
fn closed_form_at_hand_computed_point() {
    // N = 2, gamma = 1 deg, phi = 50 deg: P = (1 + cos 200 cos 4) / 2.
    let cfg = ApparatusConfig {
        n_interactions: 2,
        gamma: 1.0,
        post_angle: 50.0,
    };
    let r = simulate_apparatus(&cfg).unwrap();
    let (c4phi, c2g) = (200f64.to_radians().cos(), 4f64.to_radians().cos());
    let p = (1.0 + c4phi * c2g) / 2.0;
    let sz = -200f64.to_radians().sin() * 4f64.to_radians().sin() / (1.0 + c4phi * c2g);
    assert_abs_diff_eq!(r.probability, p, epsilon = 1e-13);
    assert_abs_diff_eq!(r.sigma_z_expect, sz, epsilon = 1e-12);
}

#[test]
fn amplified_settings_share_the_amplification() {
    for (n, phi) in amplified_settings() {
        assert!(
            (amplification(n, phi) / TARGET_AMPLIFICATION - 1.0).abs() < 0.02,
            "N = {n}"
        );
    }
}

#[test]
fn orthogonal_post_selection_is_rejected() {
    let cfg = ApparatusConfig {
        n_interactions: 1,
        gamma: 0.0,
        post_angle: 45.0,
    };
    assert!(readout_closed_form(&cfg).is_err());
}
