use std::sync::OnceLock;

use safe_core::elevation::ElevationStack;
use safe_core::p1812::LinkParams;
use safe_core::ret::RetLimit;
use safe_core::safe::{predict, predict_grid, BoundingBox, CellStatus, Execution, Mode, SafeConfig, SafeError};
use safe_core::synthetic::{forest_scene, SceneGrid};
use safe_core::LatLon;

const CENTER: LatLon = LatLon { lat: 45.3, lon: -76.1 };

fn scene() -> &'static (SceneGrid, ElevationStack) {
    static S: OnceLock<(SceneGrid, ElevationStack)> = OnceLock::new();
    S.get_or_init(|| forest_scene(CENTER, 2000.0, 10.0).unwrap())
}

fn link(g: &SceneGrid, e: f64, n: f64) -> LinkParams {
    LinkParams::new(g.to_latlon(-1800.0, -1500.0), 30.0, g.to_latlon(e, n), 2.5, 2669.0)
}

fn with_limit(db: f64) -> SafeConfig {
    SafeConfig {
        ret_limit: RetLimit::new(db).unwrap(),
        ..SafeConfig::semi_rural()
    }
}

#[test]
fn unobstructed_link_adds_nothing() {
    let g = SceneGrid {
        center: CENTER,
        half_extent_m: 1500.0,
        resolution_m: 10.0,
    };
    let stack = g.stack(|e, _| 80.0 + e * 0.002, |_, _| 0.0).unwrap();
    let l = LinkParams::new(g.to_latlon(-1200.0, 0.0), 30.0, g.to_latlon(1200.0, 300.0), 2.5, 2669.0);
    let r = predict(&stack, &l, &SafeConfig::heavily_forested()).unwrap();
    assert_eq!(r.foliage_depth, 0.0);
    assert_eq!(r.pl_safe, r.pl_p1812_no_clutter);
}

#[test]
fn combined_loss_is_monotone_in_the_limit() {
    let (g, stack) = scene();
    for (e, n) in [(1500.0, 1200.0), (300.0, -200.0), (1700.0, -1600.0)] {
        let l = link(g, e, n);
        let mut prev = f64::NEG_INFINITY;
        for db in [0.0, 5.0, 10.0, 20.0, 30.0, 60.0] {
            let r = predict(stack, &l, &with_limit(db)).unwrap();
            assert!(r.pl_safe >= prev);
            assert!(r.pl_safe >= r.pl_p1812_no_clutter);
            assert!(r.pl_safe - r.pl_p1812_no_clutter <= db + 1e-9);
            prev = r.pl_safe;
        }
        let zero = predict(stack, &l, &with_limit(0.0)).unwrap();
        assert_eq!(zero.pl_safe, zero.pl_p1812_no_clutter);
    }
}

#[test]
fn modes_report_their_own_loss() {
    let (g, stack) = scene();
    let l = link(g, 1500.0, 1200.0);
    let base = SafeConfig::semi_rural();
    let nc = predict(stack, &l, &SafeConfig { mode: Mode::P1812NoClutter, ..base.clone() }).unwrap();
    let wc = predict(stack, &l, &SafeConfig { mode: Mode::P1812Clutter, ..base.clone() }).unwrap();
    let safe = predict(stack, &l, &base).unwrap();
    assert_eq!(nc.pl_safe, safe.pl_p1812_no_clutter);
    assert_eq!(wc.pl_safe, wc.pl_p1812_with_clutter.unwrap());
    assert!(wc.pl_safe >= nc.pl_safe);
}

#[test]
fn too_short_link_is_out_of_domain() {
    let (g, stack) = scene();
    let l = LinkParams::new(g.to_latlon(0.0, 0.0), 30.0, g.to_latlon(5.0, 0.0), 2.5, 2669.0);
    let err = predict(stack, &l, &SafeConfig::default()).unwrap_err();
    assert!(err.is_out_of_domain(), "{err}");
}

#[test]
fn single_cell_grid_equals_point_prediction() {
    let (g, stack) = scene();
    let c = g.to_latlon(900.0, 700.0);
    let d = 0.0001;
    let region = BoundingBox::new(c.lat - d, c.lon - d, c.lat + d, c.lon + d);
    let template = link(g, 0.0, 0.0);
    let config = SafeConfig::default();
    let grid = predict_grid(stack, &template, &region, 1000.0, &config, Execution::Serial).unwrap();
    assert_eq!((grid.rows, grid.cols), (1, 1));
    let cell = &grid.cells[0];
    let point = predict(stack, &LinkParams { rx: cell.center, ..template }, &config).unwrap();
    assert_eq!(cell.result.as_ref().unwrap(), &point);
}

#[test]
fn grid_is_independent_of_execution_and_marks_edges() {
    let (g, stack) = scene();
    let sw = g.to_latlon(-1900.0, -1900.0);
    let ne = g.to_latlon(2600.0, 1900.0);
    let region = BoundingBox::new(sw.lat, sw.lon, ne.lat, ne.lon);
    let template = link(g, 0.0, 0.0);
    let config = SafeConfig::default();
    let serial = predict_grid(stack, &template, &region, 400.0, &config, Execution::Serial).unwrap();
    let parallel = predict_grid(stack, &template, &region, 400.0, &config, Execution::Parallel).unwrap();
    assert_eq!(serial, parallel);
    assert!(serial.cells.iter().any(|c| c.status == CellStatus::Ok));
    // the region reaches past the rasters' east edge
    assert!(serial.cells.iter().any(|c| c.status == CellStatus::NoCoverage));
}

#[test]
fn flat_bare_grid_equals_clutter_free_model() {
    let g = SceneGrid {
        center: CENTER,
        half_extent_m: 1500.0,
        resolution_m: 10.0,
    };
    let stack = g.stack(|_, _| 50.0, |_, _| 0.0).unwrap();
    let sw = g.to_latlon(-500.0, -500.0);
    let ne = g.to_latlon(1000.0, 1000.0);
    let region = BoundingBox::new(sw.lat, sw.lon, ne.lat, ne.lon);
    let template = LinkParams::new(g.to_latlon(-1400.0, -1400.0), 30.0, CENTER, 2.5, 2669.0);
    let grid = predict_grid(&stack, &template, &region, 500.0, &SafeConfig::default(), Execution::Parallel).unwrap();
    for cell in &grid.cells {
        let r = cell.result.as_ref().unwrap();
        assert_eq!(r.pl_safe, r.pl_p1812_no_clutter);
    }
}

#[test]
fn empty_region_is_rejected() {
    let (g, stack) = scene();
    let region = BoundingBox::new(45.3, -76.1, 45.3, -76.0);
    let err = predict_grid(stack, &link(g, 0.0, 0.0), &region, 100.0, &SafeConfig::default(), Execution::Serial);
    assert!(matches!(err, Err(SafeError::EmptyRegion)));
}
