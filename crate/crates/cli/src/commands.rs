use std::fs::File;
use std::path::{Path, PathBuf};

use safe_core::elevation::{load_grid, ElevationStack, GridKind};
use safe_core::p1812::LinkParams;
use safe_core::profile::{classify_clutter, extract_profile};
use safe_core::ret::ret_curve;
use safe_core::safe::{predict, predict_grid, CellStatus};
use safe_core::validation::{read_measurements, sweep_ret_limit, validate, BinRules, TransmitterSite};
use serde::Serialize;

use crate::args::{BinningArgs, Command};
use crate::config::{RunConfig, Site, DEFAULT_RX_HEIGHT_M};
use crate::error::CliError;

/// Files a command read and wrote, plus what it prints.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub stdout: Option<String>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e)),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<String, CliError> {
    ensure_parent(path)?;
    let text = serde_json::to_string_pretty(value).expect("result serializes") + "\n";
    std::fs::write(path, &text).map_err(|e| io_err(path, e))?;
    Ok(text)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn load_stack(cfg: &RunConfig, inputs: &mut Vec<PathBuf>) -> Result<ElevationStack, CliError> {
    let missing = |flag: &str| CliError::Usage(format!("{flag} is required for this command"));
    let dtm_path = cfg.dtm.as_ref().ok_or_else(|| missing("--dtm"))?;
    let dsm_path = cfg.dsm.as_ref().ok_or_else(|| missing("--dsm"))?;
    let dtm = load_grid(dtm_path, GridKind::Terrain)?;
    let dsm = load_grid(dsm_path, GridKind::Surface)?;
    inputs.extend([dtm_path.clone(), dsm_path.clone()]);
    let fallback = match &cfg.fallback_dtm {
        Some(p) => {
            inputs.push(p.clone());
            Some(load_grid(p, GridKind::Terrain)?)
        }
        None => None,
    };
    let stack = ElevationStack::new(dtm, dsm, fallback)?;
    Ok(match cfg.tree_growth {
        Some(g) => stack.with_tree_growth_offset(g.offset_m)?,
        None => stack,
    })
}

fn transmitter(cfg: &RunConfig) -> Result<(Site, f64), CliError> {
    let tx = cfg
        .transmitter
        .ok_or_else(|| CliError::Usage("--tx is required for this command".into()))?;
    let h = tx
        .height_m
        .ok_or_else(|| CliError::Usage("--tx needs a height: lat,lon,height_m".into()))?;
    Ok((tx, h))
}

fn link_to(cfg: &RunConfig, rx: Site) -> Result<LinkParams, CliError> {
    let (tx, tx_h) = transmitter(cfg)?;
    let freq = cfg
        .frequency_mhz
        .ok_or_else(|| CliError::Usage("--freq is required for this command".into()))?;
    Ok(LinkParams {
        polarization: cfg.polarization,
        ..LinkParams::new(
            tx.position,
            tx_h,
            rx.position,
            rx.height_m.unwrap_or(DEFAULT_RX_HEIGHT_M),
            freq,
        )
    })
}

fn rules(b: BinningArgs) -> BinRules {
    BinRules {
        margin_db: b.margin,
        min_count: b.min_count,
    }
}

pub fn execute(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    match cmd {
        Command::Predict { rx } => {
            let link = link_to(cfg, *rx)?;
            let stack = load_stack(cfg, &mut out.inputs)?;
            let result = predict(&stack, &link, &cfg.safe)?;
            let path = cfg.out.join("predict.json");
            out.stdout = Some(write_json(&path, &result)?);
            out.outputs.push(path);
        }
        Command::Coverage {
            bbox,
            resolution,
            rx_height,
            geotiff,
        } => {
            // receiver position is replaced per cell
            let (tx, _) = transmitter(cfg)?;
            let template = link_to(
                cfg,
                Site {
                    position: tx.position,
                    height_m: Some(*rx_height),
                },
            )?;
            let stack = load_stack(cfg, &mut out.inputs)?;
            let grid = predict_grid(&stack, &template, bbox, *resolution, &cfg.safe, cfg.execution)?;
            #[derive(Serialize)]
            struct Row {
                lat: f64,
                lon: f64,
                status: &'static str,
                pl_safe_db: Option<f64>,
                foliage_depth_m: Option<f64>,
            }
            let path = cfg.out.join("coverage.csv");
            write_csv(
                &path,
                grid.cells.iter().map(|c| Row {
                    lat: c.center.lat,
                    lon: c.center.lon,
                    status: match c.status {
                        CellStatus::Ok => "ok",
                        CellStatus::OutOfDomain => "out-of-domain",
                        CellStatus::NoCoverage => "no-coverage",
                    },
                    pl_safe_db: c.result.as_ref().map(|r| r.pl_safe),
                    foliage_depth_m: c.result.as_ref().map(|r| r.foliage_depth),
                }),
            )?;
            out.outputs.push(path);
            if *geotiff {
                let tif = cfg.out.join("coverage.tif");
                grid.write_geotiff(&tif)?;
                out.outputs.push(tif);
            }
            let ok = grid.cells.iter().filter(|c| c.status == CellStatus::Ok).count();
            out.stdout = Some(format!("{ok} of {} cells predicted\n", grid.cells.len()));
        }
        Command::Profile { rx } => {
            let tx = cfg
                .transmitter
                .ok_or_else(|| CliError::Usage("--tx is required for this command".into()))?;
            let stack = load_stack(cfg, &mut out.inputs)?;
            let raw = extract_profile(&stack, tx.position, rx.position, cfg.safe.profile_spacing_m)?;
            let classified = classify_clutter(&raw, cfg.safe.clutter_class, cfg.safe.detection_threshold_m)?;
            #[derive(Serialize)]
            struct Row {
                distance_km: f64,
                terrain_m: f64,
                raw_clutter_m: f64,
                representative_clutter_m: f64,
            }
            let path = cfg.out.join("profile.csv");
            write_csv(
                &path,
                (0..raw.distances_km.len()).map(|i| Row {
                    distance_km: raw.distances_km[i],
                    terrain_m: raw.terrain_m[i],
                    raw_clutter_m: raw.raw_clutter_m[i],
                    representative_clutter_m: classified.clutter_m()[i],
                }),
            )?;
            out.outputs.push(path);
        }
        Command::RetCurve {
            theta,
            max_depth,
            depth_step,
        } => {
            let curve = ret_curve(&cfg.safe.ret_params, *theta, *max_depth, *depth_step)?;
            #[derive(Serialize)]
            struct Row {
                depth_m: f64,
                loss_db: f64,
            }
            let path = cfg.out.join("ret_curve.csv");
            write_csv(&path, curve.into_iter().map(|(depth_m, loss_db)| Row { depth_m, loss_db }))?;
            out.outputs.push(path);
        }
        Command::Validate {
            measurements,
            binning,
            histogram_width,
        } => {
            let records = read_measurements(measurements)?;
            out.inputs.push(measurements.clone());
            let (tx, tx_h) = transmitter(cfg)?;
            let stack = load_stack(cfg, &mut out.inputs)?;
            let site = TransmitterSite {
                position: tx.position,
                height_m: tx_h,
                polarization: cfg.polarization,
            };
            let (bins, report) = validate(
                &records,
                &stack,
                &site,
                &cfg.safe,
                rules(*binning),
                *histogram_width,
                cfg.execution,
            )?;
            #[derive(Serialize)]
            struct Report<'a> {
                mode: &'static str,
                ret_limit_db: f64,
                #[serde(flatten)]
                report: &'a safe_core::validation::ValidationReport,
            }
            let report_path = cfg.out.join("validation_report.json");
            out.stdout = Some(write_json(
                &report_path,
                &Report {
                    mode: cfg.safe.mode.name(),
                    ret_limit_db: cfg.safe.ret_limit.db(),
                    report: &report,
                },
            )?);
            #[derive(Serialize)]
            struct BinRow<'a> {
                geohash: &'a str,
                count: usize,
                median_measured_db: f64,
                median_predicted_db: f64,
                error_db: f64,
                max_path_loss_db: f64,
                valid: bool,
            }
            let bins_path = cfg.out.join("validation_bins.csv");
            write_csv(
                &bins_path,
                bins.iter().map(|b| BinRow {
                    geohash: &b.geohash,
                    count: b.count,
                    median_measured_db: b.median_measured,
                    median_predicted_db: b.median_predicted,
                    error_db: b.error(),
                    max_path_loss_db: b.max_path_loss,
                    valid: b.valid,
                }),
            )?;
            #[derive(Serialize)]
            struct BarRow {
                error_center_db: f64,
                count: usize,
            }
            let hist_path = cfg.out.join("validation_histogram.csv");
            write_csv(
                &hist_path,
                report.histogram.iter().map(|h| BarRow {
                    error_center_db: h.center,
                    count: h.count,
                }),
            )?;
            out.outputs.extend([report_path, bins_path, hist_path]);
        }
        Command::SweepRetLimit {
            measurements,
            binning,
            limits,
        } => {
            let records = read_measurements(measurements)?;
            out.inputs.push(measurements.clone());
            let (tx, tx_h) = transmitter(cfg)?;
            let stack = load_stack(cfg, &mut out.inputs)?;
            let site = TransmitterSite {
                position: tx.position,
                height_m: tx_h,
                polarization: cfg.polarization,
            };
            let sweep = sweep_ret_limit(&records, &stack, &site, &cfg.safe, limits, rules(*binning), cfg.execution)?;
            let path = cfg.out.join("ret_limit_sweep.csv");
            write_csv(&path, &sweep)?;
            out.outputs.push(path);
        }
    }
    if let Some(p) = &cfg.coefficients {
        if !out.inputs.contains(p) {
            out.inputs.push(p.clone());
        }
    }
    Ok(out)
}
