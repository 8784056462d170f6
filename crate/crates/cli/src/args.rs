use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use safe_core::p1812::Polarization;
use safe_core::profile::ClutterClass;
use safe_core::ret::LeafState;
use safe_core::safe::{BoundingBox, Mode};
use serde::{Deserialize, Serialize};

use crate::config::{FoliageKind, Site};

#[derive(Debug, Parser)]
#[command(name = "safe", version, about = "Path loss prediction through foliage")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    /// Replay the run recorded in a manifest.
    #[arg(long, value_name = "MANIFEST")]
    pub from_manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Settings shared by all subcommands. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = "SAFE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Named profile: semi-rural, heavily-forested or one defined in the config file.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub dtm: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dsm: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fallback_dtm: Option<PathBuf>,
    /// Foliage coefficient table replacing the built-in one.
    #[arg(long, global = true)]
    pub coefficients: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Transmitter as lat,lon,height_m.
    #[arg(long, global = true)]
    pub tx: Option<Site>,
    /// Carrier frequency, MHz.
    #[arg(long, global = true)]
    pub freq: Option<f64>,
    #[arg(long, global = true)]
    pub polarization: Option<Polarization>,
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Foliage loss limit, dB.
    #[arg(long, global = true)]
    pub ret_limit: Option<f64>,
    #[arg(long, global = true)]
    pub clutter_class: Option<ClutterClass>,
    #[arg(long, global = true)]
    pub species: Option<String>,
    #[arg(long, global = true)]
    pub leaf_state: Option<LeafState>,
    /// Frequency used to pick the foliage coefficient set, GHz.
    #[arg(long, global = true)]
    pub ret_frequency: Option<f64>,
    #[arg(long, global = true)]
    pub foliage_model: Option<FoliageKind>,
    /// Maximum profile spacing, m.
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// Clutter detection threshold, m.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Ray-marching step, m.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub time_percentage: Option<f64>,
    #[arg(long, global = true)]
    pub location_percentage: Option<f64>,
    #[arg(long, global = true)]
    pub delta_n: Option<f64>,
    #[arg(long, global = true)]
    pub n0: Option<f64>,
    /// Canopy growth, m/year; applied with --survey-year and --measurement-year.
    #[arg(long, global = true)]
    pub growth_rate: Option<f64>,
    /// Year the elevation data was captured.
    #[arg(long, global = true)]
    pub survey_year: Option<i32>,
    /// Year the measurements were taken.
    #[arg(long, global = true)]
    pub measurement_year: Option<i32>,
    /// Evaluate on one thread.
    #[arg(long, global = true)]
    pub serial: bool,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Path loss for one link, as JSON.
    Predict {
        /// Receiver as lat,lon[,height_m]; height defaults to 2.5 m.
        #[arg(long)]
        rx: Site,
    },
    /// Path loss over a latitude/longitude box, as CSV.
    Coverage {
        /// south,west,north,east in degrees.
        #[arg(long)]
        bbox: BoundingBox,
        /// Cell size, m.
        #[arg(long, default_value_t = 100.0)]
        resolution: f64,
        #[arg(long, default_value_t = 2.5)]
        rx_height: f64,
        /// Also write a GeoTIFF of the combined loss.
        #[arg(long)]
        geotiff: bool,
    },
    /// Terrain and clutter profile between the transmitter and a receiver.
    Profile {
        #[arg(long)]
        rx: Site,
    },
    /// Foliage loss against depth.
    RetCurve {
        /// Incidence angle, degrees.
        #[arg(long, default_value_t = 30.0)]
        theta: f64,
        #[arg(long, default_value_t = 100.0)]
        max_depth: f64,
        #[arg(long, default_value_t = 1.0)]
        depth_step: f64,
    },
    /// Compare predictions with drive-test measurements.
    Validate {
        #[arg(long)]
        measurements: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        binning: BinningArgs,
        /// Histogram bar width, dB.
        #[arg(long, default_value_t = 2.0)]
        histogram_width: f64,
    },
    /// RMSE of the combined predictor for a range of foliage limits.
    SweepRetLimit {
        #[arg(long)]
        measurements: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        binning: BinningArgs,
        /// Comma-separated limits, dB.
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20,25,30,35,40,50,60")]
        limits: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Args, Serialize, Deserialize)]
pub struct BinningArgs {
    /// Required gap between a bin's median loss and the largest measurable loss, dB.
    #[arg(long, default_value_t = 6.0)]
    pub margin: f64,
    /// Fewest records for a valid bin.
    #[arg(long, default_value_t = 3)]
    pub min_count: usize,
}
