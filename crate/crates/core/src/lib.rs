//! Path-loss prediction for foliage-dominated rural links.
//!
//! The predictor combines a terrain-only ITU-R P.1812 evaluation with a
//! radiative-energy-transfer estimate of the loss along the part of the
//! direct ray that runs through vegetation:
//!
//! ```text
//! PL = PL_p1812(no clutter) + min(foliage_loss, foliage_limit)
//! ```
//!
//! Module map:
//!
//! - [`elevation`]: terrain (DTM) and surface (DSM) rasters, clutter heights
//! - [`profile`]: equally spaced path profiles and clutter classification
//! - [`p1812`]: basic transmission loss per Recommendation ITU-R P.1812
//! - [`ret`]: canopy/ray intersection and foliage loss
//! - [`safe`]: the combined point and area predictor
//! - [`validation`]: geohash binning and error statistics against drive tests
//! - [`synthetic`]: generated terrain and forest scenes for tests and demos

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elevation;
pub mod geodesy;
pub mod p1812;
pub mod profile;
pub mod ret;
pub mod safe;
pub mod synthetic;
pub mod validation;

pub use geodesy::LatLon;
