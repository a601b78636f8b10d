use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

use darkcool::geometry::{multiaxial_ratio, optimal_axis, ratio_at_angle, tilt_angle, BeamGeometry};
use darkcool::{condition_ratio, Error};
use proptest::prelude::*;

#[test]
fn tilt_examples() {
    assert!((tilt_angle(1.0, 1.0).unwrap() - FRAC_PI_3).abs() < 1e-15);
    assert!(tilt_angle(1e9, 1.0).unwrap() < 1e-4);
    assert!(tilt_angle(0.0, 1.0).is_err());
}

#[test]
fn ratio_examples() {
    assert_eq!(ratio_at_angle(0.0).unwrap(), 2.0);
    assert!((ratio_at_angle(FRAC_PI_3).unwrap() - 4.0).abs() < 1e-14);
    assert!((ratio_at_angle(FRAC_PI_4).unwrap() - 2.0 * SQRT_2).abs() < 1e-15);
    assert!(matches!(ratio_at_angle(FRAC_PI_2), Err(Error::InfiniteRatio(_))));
}

#[test]
fn multiaxial_examples() {
    assert!((multiaxial_ratio(FRAC_PI_3, 0.0).unwrap() - 4.0).abs() < 1e-14);
    let tp = optimal_axis(FRAC_PI_4, 1.0, 1.0).unwrap();
    assert!((tp - ((SQRT_2 - 1.0) / SQRT_2).atan()).abs() < 1e-15);
    assert!((tp.to_degrees() - 16.32).abs() < 0.01);
    assert!((multiaxial_ratio(FRAC_PI_4, tp).unwrap() - 4.0).abs() < 1e-3);
    assert!(optimal_axis(FRAC_PI_3, 1.0, 1.0).unwrap().abs() < 1e-15);
}

#[test]
fn tilt_and_ratio_round_trip() {
    for ob in [0.3, 1.0, 2.5] {
        let th = tilt_angle(ob, 1.0).unwrap();
        assert!((ratio_at_angle(th).unwrap() - condition_ratio(1.0, ob).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn axes_never_pass_the_perpendicular() {
    for deg in (10..=80).step_by(10) {
        let th = (deg as f64).to_radians();
        for ob in [0.5, 1.0, 2.0] {
            let tp = optimal_axis(th, ob, 1.0).unwrap();
            assert!(th + tp <= FRAC_PI_2, "{deg} {ob}");
        }
    }
}

#[test]
fn optimal_axis_domain() {
    assert!(optimal_axis(0.0, 1.0, 1.0).is_err());
    assert!(optimal_axis(FRAC_PI_2, 1.0, 1.0).is_err());
    // steep tilt: the axis falls behind the B beam, reported as negative
    assert!(optimal_axis(1.5, 1.0, 1.0).unwrap() < 0.0);
}

#[test]
fn wavelength_ratio_scales_the_geometry() {
    let g = BeamGeometry::new(0.5).unwrap();
    assert!((g.ratio_at_angle(FRAC_PI_3).unwrap() - 8.0).abs() < 1e-13);
    let th = g.tilt_angle(1.0, 1.0).unwrap();
    assert!((g.ratio_at_angle(th).unwrap() - 4.0).abs() < 1e-12);
    let tp = g.optimal_axis(0.3, 1.0, 1.0).unwrap();
    assert!((g.multiaxial_ratio(0.3, tp).unwrap() - 4.0).abs() < 1e-10);
    assert!(BeamGeometry::new(0.0).is_err());
    assert!(BeamGeometry::new(0.2).unwrap().tilt_angle(1.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn multiaxial_round_trip(th in 0.001..(FRAC_PI_2 - 0.001), ob in 0.01..20.0f64) {
        let tp = optimal_axis(th, ob, 1.0).unwrap();
        let r = multiaxial_ratio(th, tp).unwrap();
        let want = condition_ratio(1.0, ob).unwrap();
        prop_assert!((r - want).abs() < 1e-10 * want);
    }

    #[test]
    fn ratio_is_the_primary_axis_restriction(th in 0.0..1.5f64) {
        prop_assert_eq!(ratio_at_angle(th).unwrap(), multiaxial_ratio(th, 0.0).unwrap());
    }
}
