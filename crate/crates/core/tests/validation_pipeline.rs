use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use safe_core::validation::{
    bin_measurements, decode_geohash, geohash8, read_measurements_from, rmse, BinRules, MeasurementRecord,
    ValidationError, COLUMNS,
};

fn record(lat: f64, lon: f64, pl: f64) -> MeasurementRecord {
    MeasurementRecord {
        lat,
        lon,
        pl_measured: pl,
        frequency_mhz: 2669.0,
        tx_id: "T1".into(),
        tx_eirp_dbm: 60.0,
        noise_floor_dbm: -110.0,
        rx_height_m: 2.5,
    }
}

fn campaign(seed: u64) -> Vec<MeasurementRecord> {
    let mut out = Vec::new();
    for i in 0..40 {
        let lat = 45.3 + 0.001 * i as f64;
        for k in 0..(1 + (i + seed as usize) % 5) {
            out.push(record(lat, -76.1, 110.0 + i as f64 + k as f64 * 0.5));
        }
    }
    out
}

fn predictor(r: &MeasurementRecord) -> f64 {
    r.pl_measured + 3.0 * ((r.lat * 1e4).sin())
}

#[test]
fn rmse_ignores_record_order() {
    let mut records = campaign(3);
    let reference = rmse(&bin_measurements(&records, predictor, BinRules::default()).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        records.shuffle(&mut rng);
        let bins = bin_measurements(&records, predictor, BinRules::default()).unwrap();
        assert!((rmse(&bins).unwrap() - reference).abs() < 1e-12);
    }
}

#[test]
fn bins_partition_the_records() {
    let records = campaign(1);
    let bins = bin_measurements(&records, predictor, BinRules::default()).unwrap();
    assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), records.len());
    let mut keys: Vec<&str> = bins.iter().map(|b| b.geohash.as_str()).collect();
    keys.dedup();
    assert_eq!(keys.len(), bins.len());
    for b in &bins {
        assert_eq!(b.valid, b.count >= 3 && b.median_measured <= b.max_path_loss - 6.0);
    }
}

#[test]
fn near_noise_bins_are_invalid() {
    let records: Vec<_> = (0..4).map(|k| record(45.3, -76.1, 166.0 + k as f64)).collect();
    let bins = bin_measurements(&records, |r| r.pl_measured, BinRules::default()).unwrap();
    assert_eq!(bins.len(), 1);
    assert!(!bins[0].valid);
    assert!(matches!(rmse(&bins), Err(ValidationError::NoValidBins)));
}

#[test]
fn mixed_transmitters_are_rejected() {
    let mut records = campaign(0);
    records[5].tx_id = "T2".into();
    assert!(matches!(
        bin_measurements(&records, predictor, BinRules::default()),
        Err(ValidationError::MixedTransmitters { .. })
    ));
}

#[test]
fn csv_roundtrip() {
    let records = campaign(2);
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &records {
        w.serialize(r).unwrap();
    }
    let bytes = w.into_inner().unwrap();
    let header = String::from_utf8_lossy(&bytes).lines().next().unwrap().to_string();
    assert_eq!(header, COLUMNS.join(","));
    assert_eq!(read_measurements_from(bytes.as_slice()).unwrap(), records);
}

proptest! {
    #[test]
    fn geohash_cell_contains_its_point(lat in -89.99f64..89.99, lon in -179.99f64..179.99) {
        let h = geohash8(lat, lon).unwrap();
        prop_assert_eq!(h.len(), 8);
        let cell = decode_geohash(&h).unwrap();
        prop_assert!(cell.contains(lat, lon));
        let (clat, clon) = cell.center();
        prop_assert_eq!(geohash8(clat, clon).unwrap(), h);
    }
}
