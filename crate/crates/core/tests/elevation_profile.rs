use proptest::prelude::*;
use safe_core::elevation::{load_grid, write_grid, GridKind};
use safe_core::geodesy::distance_m;
use safe_core::p1812::{path_loss_modes, path_loss_p1812, LinkParams, ModelEnvironment};
use safe_core::profile::{classify_clutter, extract_profile, strip_clutter, ClutterClass};
use safe_core::synthetic::forest_scene;
use safe_core::LatLon;
use std::sync::OnceLock;

const CENTER: LatLon = LatLon { lat: 45.3, lon: -76.1 };

fn scene() -> &'static (safe_core::synthetic::SceneGrid, safe_core::elevation::ElevationStack) {
    static S: OnceLock<(safe_core::synthetic::SceneGrid, safe_core::elevation::ElevationStack)> = OnceLock::new();
    S.get_or_init(|| forest_scene(CENTER, 1500.0, 10.0).unwrap())
}

#[test]
fn mirrored_extraction_matches_reversed_profile() {
    let (g, stack) = scene();
    let tx = g.to_latlon(-1100.0, -300.0);
    let rx = g.to_latlon(900.0, 1000.0);
    let fwd = extract_profile(stack, tx, rx, 30.0).unwrap();
    let rev = extract_profile(stack, rx, tx, 30.0).unwrap();
    assert_eq!(fwd.terrain_m.len(), rev.terrain_m.len());
    let n = fwd.terrain_m.len();
    for i in 0..n {
        assert!((fwd.terrain_m[i] - rev.terrain_m[n - 1 - i]).abs() < 1e-6, "terrain at {i}");
        assert!((fwd.raw_clutter_m[i] - rev.raw_clutter_m[n - 1 - i]).abs() < 1e-6, "clutter at {i}");
    }
}

#[test]
fn profile_spans_the_geodesic() {
    let (g, stack) = scene();
    let tx = g.to_latlon(-1200.0, 0.0);
    let rx = g.to_latlon(1250.0, 700.0);
    let raw = extract_profile(stack, tx, rx, 30.0).unwrap();
    let len_km = distance_m(tx, rx) / 1000.0;
    assert!((raw.distances_km.last().unwrap() - len_km).abs() < 1e-9);
    assert!(raw.spacing_m <= 30.0);
    assert!(raw.distances_km.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn stripped_profile_equals_clutter_free_prediction() {
    let (g, stack) = scene();
    let tx = g.to_latlon(-1000.0, -1000.0);
    let rx = g.to_latlon(1000.0, 800.0);
    let raw = extract_profile(stack, tx, rx, 30.0).unwrap();
    let prof = classify_clutter(&raw, ClutterClass::UrbanTreesForest, 2.0).unwrap();
    assert!(prof.clutter_m().iter().any(|&c| c > 0.0));
    let link = LinkParams::new(tx, 30.0, rx, 2.5, 2669.0);
    let env = ModelEnvironment::default();
    let modes = path_loss_modes(&prof, &link, &env).unwrap();
    let stripped = path_loss_p1812(&strip_clutter(&prof), &link, &env).unwrap();
    assert_eq!(modes.no_clutter, stripped);
}

#[test]
fn geotiff_roundtrip_preserves_samples() {
    let (g, stack) = scene();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dtm.tif");
    write_grid(&path, stack.dtm()).unwrap();
    let back = load_grid(&path, GridKind::Terrain).unwrap();
    assert_eq!(back.width(), stack.dtm().width());
    for (e, n) in [(0.0, 0.0), (-700.0, 333.0), (1234.0, -987.0)] {
        let p = g.to_latlon(e, n);
        assert_eq!(back.sample_height(p).unwrap(), stack.dtm().sample_height(p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clutter_is_nonnegative_and_shrinks_with_offset(
        e in -1400.0f64..1400.0,
        n in -1400.0f64..1400.0,
        a in 0.0f64..10.0,
        b in 0.0f64..10.0,
    ) {
        let (g, stack) = scene();
        let p = g.to_latlon(e, n);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c_lo = stack.with_tree_growth_offset(lo).unwrap().clutter_height_at(p).unwrap();
        let c_hi = stack.with_tree_growth_offset(hi).unwrap().clutter_height_at(p).unwrap();
        prop_assert!(c_lo >= 0.0 && c_hi >= 0.0);
        prop_assert!(c_hi <= c_lo);
    }
}
