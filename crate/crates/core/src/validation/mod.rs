//! Comparison of predictions against drive-test measurements.
//!
//! Records are grouped into geohash-8 cells. A cell is valid when it holds
//! enough records and its median measured loss sits clear of the receiver
//! noise floor; the error statistics use valid cells only.

mod geohash;
mod records;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elevation::ElevationStack;
use crate::geodesy::LatLon;
use crate::p1812::{LinkParams, Polarization};
use crate::ret::RetLimit;
use crate::safe::{finish_prediction, link_terms, Execution, LinkTerms, Mode, SafeConfig, SafeError};

pub use geohash::{decode as decode_geohash, encode as encode_geohash, geohash8, GeohashCell};
pub use records::{read_measurements, read_measurements_from, MeasurementRecord, COLUMNS};

pub const DEFAULT_MARGIN_DB: f64 = 6.0;
pub const DEFAULT_MIN_COUNT: usize = 3;
pub const DEFAULT_HISTOGRAM_WIDTH_DB: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("coordinate ({lat}, {lon}) out of range")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("invalid geohash '{0}'")]
    InvalidGeohash(String),
    #[error("no measurement records")]
    EmptyInput,
    #[error("records mix transmitters '{first}' and '{other}'")]
    MixedTransmitters { first: String, other: String },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("no valid bins")]
    NoValidBins,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("measurement csv: {0}")]
    Csv(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Prediction(#[from] SafeError),
}

/// Validity thresholds for a bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRules {
    pub margin_db: f64,
    pub min_count: usize,
}

impl Default for BinRules {
    fn default() -> Self {
        Self {
            margin_db: DEFAULT_MARGIN_DB,
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

impl BinRules {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.margin_db >= 0.0) {
            return Err(ValidationError::InvalidParameter(format!("margin {} dB < 0", self.margin_db)));
        }
        if self.min_count < 1 {
            return Err(ValidationError::InvalidParameter("minimum count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementBin {
    pub geohash: String,
    pub count: usize,
    pub median_measured: f64,
    pub median_predicted: f64,
    /// Smallest EIRP minus noise floor among the bin's records.
    pub max_path_loss: f64,
    pub valid: bool,
}

impl MeasurementBin {
    /// Predicted minus measured; positive means overprediction.
    pub fn error(&self) -> f64 {
        self.median_predicted - self.median_measured
    }
}

pub fn bin_validity(bin: &MeasurementBin, max_path_loss: f64, margin_db: f64, min_count: usize) -> bool {
    bin.count >= min_count && bin.median_measured <= max_path_loss - margin_db
}

/// Median; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn check_records(records: &[MeasurementRecord]) -> Result<(), ValidationError> {
    let first = records.first().ok_or(ValidationError::EmptyInput)?;
    if let Some(other) = records.iter().find(|r| r.tx_id != first.tx_id) {
        return Err(ValidationError::MixedTransmitters {
            first: first.tx_id.clone(),
            other: other.tx_id.clone(),
        });
    }
    Ok(())
}

/// Bins records with one prediction per record (same order). Records whose
/// prediction is `None` are left out. Bins come out sorted by geohash.
pub fn bin_predicted(
    records: &[MeasurementRecord],
    predictions: &[Option<f64>],
    rules: BinRules,
) -> Result<Vec<MeasurementBin>, ValidationError> {
    check_records(records)?;
    rules.validate()?;
    if predictions.len() != records.len() {
        return Err(ValidationError::InvalidParameter(format!(
            "{} predictions for {} records",
            predictions.len(),
            records.len()
        )));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>, f64)> = BTreeMap::new();
    for (r, p) in records.iter().zip(predictions) {
        let Some(p) = p else { continue };
        let entry = groups
            .entry(geohash8(r.lat, r.lon)?)
            .or_insert_with(|| (Vec::new(), Vec::new(), f64::INFINITY));
        entry.0.push(r.pl_measured);
        entry.1.push(*p);
        entry.2 = entry.2.min(r.max_path_loss());
    }
    Ok(groups
        .into_iter()
        .map(|(geohash, (measured, predicted, max_pl))| {
            let mut bin = MeasurementBin {
                geohash,
                count: measured.len(),
                median_measured: median(&measured),
                median_predicted: median(&predicted),
                max_path_loss: max_pl,
                valid: false,
            };
            bin.valid = bin_validity(&bin, max_pl, rules.margin_db, rules.min_count);
            bin
        })
        .collect())
}

/// Bins records, predicting each one with `predictor`.
pub fn bin_measurements(
    records: &[MeasurementRecord],
    predictor: impl Fn(&MeasurementRecord) -> f64,
    rules: BinRules,
) -> Result<Vec<MeasurementBin>, ValidationError> {
    let predictions: Vec<Option<f64>> = records.iter().map(|r| Some(predictor(r))).collect();
    bin_predicted(records, &predictions, rules)
}

fn valid_errors(bins: &[MeasurementBin]) -> Result<Vec<f64>, ValidationError> {
    let errors: Vec<f64> = bins.iter().filter(|b| b.valid).map(MeasurementBin::error).collect();
    if errors.is_empty() {
        Err(ValidationError::NoValidBins)
    } else {
        Ok(errors)
    }
}

/// Root mean square of measured minus predicted medians over valid bins.
pub fn rmse(bins: &[MeasurementBin]) -> Result<f64, ValidationError> {
    let e = valid_errors(bins)?;
    Ok((e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt())
}

/// Mean of predicted minus measured over valid bins.
pub fn mean_error(bins: &[MeasurementBin]) -> Result<f64, ValidationError> {
    let e = valid_errors(bins)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBar {
    /// Centre of the error bin, dB.
    pub center: f64,
    pub count: usize,
}

/// Counts of bin errors (predicted minus measured) in `width`-dB bins
/// centred on multiples of `width`. Only non-empty bars are listed.
pub fn error_histogram(bins: &[MeasurementBin], width: f64) -> Result<Vec<HistogramBar>, ValidationError> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(ValidationError::InvalidParameter(format!("histogram width {width}")));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for e in valid_errors(bins)? {
        *counts.entry((e / width).round() as i64).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, count)| HistogramBar {
            center: k as f64 * width,
            count,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rmse: f64,
    pub mean_error: f64,
    pub bin_count_total: usize,
    pub bin_count_valid: usize,
    pub histogram: Vec<HistogramBar>,
    pub histogram_width: f64,
    pub records_total: usize,
    /// Records closer to the transmitter than the model's minimum distance.
    pub records_out_of_domain: usize,
}

impl ValidationReport {
    pub fn from_bins(bins: &[MeasurementBin], histogram_width: f64) -> Result<Self, ValidationError> {
        let records: usize = bins.iter().map(|b| b.count).sum();
        Ok(Self {
            rmse: rmse(bins)?,
            mean_error: mean_error(bins)?,
            bin_count_total: bins.len(),
            bin_count_valid: bins.iter().filter(|b| b.valid).count(),
            histogram: error_histogram(bins, histogram_width)?,
            histogram_width,
            records_total: records,
            records_out_of_domain: 0,
        })
    }
}

/// Transmitter of a measurement campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmitterSite {
    pub position: LatLon,
    pub height_m: f64,
    #[serde(default)]
    pub polarization: Polarization,
}

impl TransmitterSite {
    pub fn link_to(&self, r: &MeasurementRecord) -> LinkParams {
        LinkParams {
            frequency_mhz: r.frequency_mhz,
            tx_height_m: self.height_m,
            rx_height_m: r.rx_height_m,
            tx: self.position,
            rx: r.position(),
            polarization: self.polarization,
        }
    }
}

/// Limit-independent model terms for every record; `None` where the record
/// lies outside the model's distance domain.
pub fn record_terms(
    records: &[MeasurementRecord],
    stack: &ElevationStack,
    tx: &TransmitterSite,
    config: &SafeConfig,
    exec: Execution,
) -> Result<Vec<Option<LinkTerms>>, ValidationError> {
    check_records(records)?;
    config.validate()?;
    let eval = |r: &MeasurementRecord| match link_terms(stack, &tx.link_to(r), config) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.is_out_of_domain() => Ok(None),
        Err(e) => Err(ValidationError::from(e)),
    };
    match exec {
        Execution::Serial => records.iter().map(eval).collect(),
        Execution::Parallel => records.par_iter().map(eval).collect(),
    }
}

/// Bins and report for precomputed terms under `mode` and `limit`.
pub fn evaluate_terms(
    records: &[MeasurementRecord],
    terms: &[Option<LinkTerms>],
    mode: Mode,
    limit: RetLimit,
    rules: BinRules,
    histogram_width: f64,
) -> Result<(Vec<MeasurementBin>, ValidationReport), ValidationError> {
    let predictions: Vec<Option<f64>> = terms
        .iter()
        .map(|t| t.as_ref().map(|t| finish_prediction(t, mode, limit).pl_safe))
        .collect();
    let bins = bin_predicted(records, &predictions, rules)?;
    let mut report = ValidationReport::from_bins(&bins, histogram_width)?;
    report.records_total = records.len();
    report.records_out_of_domain = predictions.iter().filter(|p| p.is_none()).count();
    Ok((bins, report))
}

/// Full pipeline for one configuration.
pub fn validate(
    records: &[MeasurementRecord],
    stack: &ElevationStack,
    tx: &TransmitterSite,
    config: &SafeConfig,
    rules: BinRules,
    histogram_width: f64,
    exec: Execution,
) -> Result<(Vec<MeasurementBin>, ValidationReport), ValidationError> {
    let terms = record_terms(records, stack, tx, config, exec)?;
    evaluate_terms(records, &terms, config.mode, config.ret_limit, rules, histogram_width)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub limit_db: f64,
    pub rmse_db: f64,
}

/// RMSE of the combined predictor for each foliage limit. Profiles and ray
/// intersections are computed once.
pub fn sweep_ret_limit(
    records: &[MeasurementRecord],
    stack: &ElevationStack,
    tx: &TransmitterSite,
    config: &SafeConfig,
    limits: &[f64],
    rules: BinRules,
    exec: Execution,
) -> Result<Vec<SweepPoint>, ValidationError> {
    if limits.is_empty() {
        return Err(ValidationError::InvalidParameter("no limits to sweep".into()));
    }
    let limits: Vec<RetLimit> = limits
        .iter()
        .map(|&l| RetLimit::new(l).map_err(|e| ValidationError::InvalidParameter(e.to_string())))
        .collect::<Result<_, _>>()?;
    let safe = SafeConfig {
        mode: Mode::Safe,
        ..config.clone()
    };
    let terms = record_terms(records, stack, tx, &safe, exec)?;
    limits
        .into_iter()
        .map(|limit| {
            let (bins, _) = evaluate_terms(records, &terms, Mode::Safe, limit, rules, DEFAULT_HISTOGRAM_WIDTH_DB)?;
            Ok(SweepPoint {
                limit_db: limit.db(),
                rmse_db: rmse(&bins)?,
            })
        })
        .collect()
}
