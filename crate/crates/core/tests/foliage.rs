use approx::assert_relative_eq;
use proptest::prelude::*;
use safe_core::ret::{
    intersect_ray, intersect_ray_with_clutter, ret_curve, ret_loss, GroundSample, RetError, RetParameters,
};
use safe_core::synthetic::SceneGrid;
use safe_core::LatLon;

fn slab(from: f64, to: f64, height: f64) -> impl Fn(f64) -> Result<GroundSample, RetError> {
    move |x| {
        Ok(GroundSample {
            terrain_m: 0.0,
            clutter_m: if (from..to).contains(&x) { height } else { 0.0 },
            fallback: false,
        })
    }
}

#[test]
fn depth_converges_as_step_halves() {
    let mut prev = None;
    for step in [8.0, 4.0, 2.0, 1.0, 0.5] {
        let r = intersect_ray(2000.0, 20.0, 5.0, step, slab(1200.0, 1650.0, 30.0)).unwrap();
        if let Some(p) = prev {
            let diff: f64 = r.total_depth - p;
            assert!(diff.abs() < 2.0 * step, "step {step}: {} vs {p}", r.total_depth);
        }
        prev = Some(r.total_depth);
    }
}

#[test]
fn swapping_ends_preserves_depth() {
    let fwd = intersect_ray(1500.0, 12.0, 3.0, 1.0, slab(400.0, 900.0, 18.0)).unwrap();
    let rev = intersect_ray(1500.0, 3.0, 12.0, 1.0, slab(600.0, 1100.0, 18.0)).unwrap();
    assert_relative_eq!(fwd.total_depth, rev.total_depth, epsilon = 2.0);
    assert!(fwd.total_depth > 100.0);
}

#[test]
fn clear_ray_has_no_angle() {
    let r = intersect_ray(1000.0, 50.0, 50.0, 1.0, slab(100.0, 900.0, 10.0)).unwrap();
    assert_eq!(r.total_depth, 0.0);
    assert_eq!(r.theta, None);
    assert!(r.segments.is_empty());
}

#[test]
fn stack_slab_matches_closed_form() {
    // flat terrain, a forest band 300 m wide crossing the path, canopy above both antennas
    let grid = SceneGrid {
        center: LatLon::new(45.3, -76.1),
        half_extent_m: 1000.0,
        resolution_m: 5.0,
    };
    let stack = grid
        .stack(|_, _| 100.0, |e, _| if (-150.0..150.0).contains(&e) { 25.0 } else { 0.0 })
        .unwrap();
    let tx = grid.to_latlon(-800.0, 0.0);
    let rx = grid.to_latlon(800.0, 0.0);
    let r = intersect_ray_with_clutter(&stack, tx, 10.0, rx, 10.0, 1.0).unwrap();
    assert!((r.total_depth - 300.0).abs() < 12.0, "{}", r.total_depth);
    assert!(r.theta.unwrap() < 1.0);
    assert!(!r.used_fallback_terrain);
}

#[test]
fn steeper_entry_is_never_less_lossy() {
    let p = RetParameters::default();
    let shallow = ret_curve(&p, 30.0, 100.0, 1.0).unwrap();
    let steep = ret_curve(&p, 60.0, 100.0, 1.0).unwrap();
    for ((d, a), (_, b)) in shallow.iter().zip(&steep) {
        assert!(b >= a, "depth {d}: {b} < {a}");
    }
}

#[test]
fn dual_slope_fallback_has_two_rates() {
    let p = RetParameters::dual_slope_default();
    let early = ret_loss(&p, 5.0, 30.0).unwrap() / 5.0;
    let late = ret_loss(&p, 100.0, 30.0).unwrap() - ret_loss(&p, 99.0, 30.0).unwrap();
    assert!(early > late);
}

#[test]
fn rejects_bad_inputs() {
    let p = RetParameters::default();
    assert!(matches!(ret_loss(&p, -1.0, 30.0), Err(RetError::NegativeDepth(_))));
    assert!(matches!(ret_loss(&p, 1.0, 95.0), Err(RetError::ThetaOutOfRange(_))));
    assert!(intersect_ray(100.0, 1.0, 1.0, 0.0, slab(0.0, 1.0, 1.0)).is_err());
}

proptest! {
    #[test]
    fn loss_is_monotone_in_depth(d1 in 0.0f64..300.0, d2 in 0.0f64..300.0, theta in 0.0f64..90.0) {
        let p = RetParameters::default();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = ret_loss(&p, lo, theta).unwrap();
        let b = ret_loss(&p, hi, theta).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-9, "{lo} m: {a}, {hi} m: {b}");
    }
}
