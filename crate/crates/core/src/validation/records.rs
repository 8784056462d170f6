//! Drive-test measurement records and their CSV form.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::geodesy::LatLon;

/// CSV header names, in the canonical column order.
pub const COLUMNS: [&str; 8] = [
    "lat",
    "lon",
    "pl_db",
    "freq_mhz",
    "tx_id",
    "eirp_dbm",
    "noise_floor_dbm",
    "rx_height_m",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub lat: f64,
    pub lon: f64,
    /// Measured path loss, dB.
    #[serde(rename = "pl_db")]
    pub pl_measured: f64,
    #[serde(rename = "freq_mhz")]
    pub frequency_mhz: f64,
    pub tx_id: String,
    #[serde(rename = "eirp_dbm")]
    pub tx_eirp_dbm: f64,
    pub noise_floor_dbm: f64,
    pub rx_height_m: f64,
}

impl MeasurementRecord {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }

    /// Largest path loss the receiver could have measured.
    pub fn max_path_loss(&self) -> f64 {
        self.tx_eirp_dbm - self.noise_floor_dbm
    }

    pub fn check(&self) -> Result<(), String> {
        if ![self.lat, self.lon, self.pl_measured, self.frequency_mhz, self.tx_eirp_dbm, self.noise_floor_dbm, self.rx_height_m]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err("non-finite value".into());
        }
        if !self.position().is_valid() {
            return Err(format!("coordinate ({}, {}) out of range", self.lat, self.lon));
        }
        if !(self.pl_measured > 0.0) {
            return Err(format!("path loss {} dB must be positive", self.pl_measured));
        }
        if !(self.tx_eirp_dbm > self.noise_floor_dbm) {
            return Err(format!(
                "eirp {} dBm must exceed noise floor {} dBm",
                self.tx_eirp_dbm, self.noise_floor_dbm
            ));
        }
        Ok(())
    }
}

pub fn read_measurements_from(reader: impl Read) -> Result<Vec<MeasurementRecord>, ValidationError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ValidationError::Csv(e.to_string()))?.clone();
    let missing: Vec<&str> = COLUMNS
        .iter()
        .copied()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(ValidationError::Csv(format!("missing columns: {}", missing.join(", "))));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<MeasurementRecord>().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = row.map_err(|e| ValidationError::InvalidRecord {
            line,
            reason: e.to_string(),
        })?;
        rec.check()
            .map_err(|reason| ValidationError::InvalidRecord { line, reason })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_measurements(path: &Path) -> Result<Vec<MeasurementRecord>, ValidationError> {
    let file = std::fs::File::open(path).map_err(|e| ValidationError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_measurements_from(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_columns_in_any_order() {
        let text = "tx_id,lat,lon,pl_db,freq_mhz,eirp_dbm,noise_floor_dbm,rx_height_m\n\
                    A,45.3,-76.1,120.5,2669,60,-110,2.5\n";
        let r = read_measurements_from(text.as_bytes()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].pl_measured, 120.5);
        assert_eq!(r[0].max_path_loss(), 170.0);
    }

    #[test]
    fn missing_column_and_bad_rows() {
        let text = "lat,lon,pl_db\n1,2,3\n";
        assert!(matches!(read_measurements_from(text.as_bytes()), Err(ValidationError::Csv(_))));
        let text = "lat,lon,pl_db,freq_mhz,tx_id,eirp_dbm,noise_floor_dbm,rx_height_m\n\
                    45.3,-76.1,-3,2669,A,60,-110,2.5\n";
        assert!(matches!(
            read_measurements_from(text.as_bytes()),
            Err(ValidationError::InvalidRecord { line: 2, .. })
        ));
        let text = "lat,lon,pl_db,freq_mhz,tx_id,eirp_dbm,noise_floor_dbm,rx_height_m\n\
                    45.3,-76.1,100,2669,A,-120,-110,2.5\n";
        assert!(read_measurements_from(text.as_bytes()).is_err());
    }
}
