//! Base-32 geohash encoding.

use super::ValidationError;

const ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Bounds of a geohash cell in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeohashCell {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeohashCell {
    /// Half-open containment, closed on the north and east edges of the world.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let lat_ok = lat >= self.lat_min && (lat < self.lat_max || (self.lat_max == 90.0 && lat == 90.0));
        let lon_ok = lon >= self.lon_min && (lon < self.lon_max || (self.lon_max == 180.0 && lon == 180.0));
        lat_ok && lon_ok
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.lat_min + self.lat_max),
            0.5 * (self.lon_min + self.lon_max),
        )
    }
}

pub fn encode(lat: f64, lon: f64, precision: usize) -> Result<String, ValidationError> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(ValidationError::CoordinateOutOfRange { lat, lon });
    }
    let (mut lat_lo, mut lat_hi) = (-90.0, 90.0);
    let (mut lon_lo, mut lon_hi) = (-180.0, 180.0);
    let mut out = String::with_capacity(precision);
    let mut even = true;
    for _ in 0..precision {
        let mut idx = 0usize;
        for _ in 0..5 {
            let (v, lo, hi) = if even {
                (lon, &mut lon_lo, &mut lon_hi)
            } else {
                (lat, &mut lat_lo, &mut lat_hi)
            };
            let mid = 0.5 * (*lo + *hi);
            idx <<= 1;
            if v >= mid {
                idx |= 1;
                *lo = mid;
            } else {
                *hi = mid;
            }
            even = !even;
        }
        out.push(ALPHABET[idx] as char);
    }
    Ok(out)
}

/// Precision-8 geohash (cells of roughly 38 m by 19 m at the equator).
pub fn geohash8(lat: f64, lon: f64) -> Result<String, ValidationError> {
    encode(lat, lon, 8)
}

pub fn decode(hash: &str) -> Result<GeohashCell, ValidationError> {
    let mut cell = GeohashCell {
        lat_min: -90.0,
        lat_max: 90.0,
        lon_min: -180.0,
        lon_max: 180.0,
    };
    let mut even = true;
    for ch in hash.bytes() {
        let idx = ALPHABET
            .iter()
            .position(|&a| a == ch.to_ascii_lowercase())
            .ok_or_else(|| ValidationError::InvalidGeohash(hash.to_string()))?;
        for bit in (0..5).rev() {
            let on = (idx >> bit) & 1 == 1;
            let (lo, hi) = if even {
                (&mut cell.lon_min, &mut cell.lon_max)
            } else {
                (&mut cell.lat_min, &mut cell.lat_max)
            };
            let mid = 0.5 * (*lo + *hi);
            if on {
                *lo = mid;
            } else {
                *hi = mid;
            }
            even = !even;
        }
    }
    if hash.is_empty() {
        return Err(ValidationError::InvalidGeohash(hash.to_string()));
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        assert_eq!(geohash8(57.64911, 10.40744).unwrap(), "u4pruydq");
        assert_eq!(encode(42.6, -5.6, 5).unwrap(), "ezs42");
        assert_eq!(encode(-25.382708, -49.265506, 11).unwrap(), "6gkzwgjzn82");
    }

    #[test]
    fn decode_contains_and_rejects_garbage() {
        let c = decode("u4pruydq").unwrap();
        assert!(c.contains(57.64911, 10.40744));
        assert!(decode("u4pa").is_err());
        assert!(decode("").is_err());
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(geohash8(91.0, 0.0), Err(ValidationError::CoordinateOutOfRange { .. })));
        assert!(geohash8(0.0, -180.5).is_err());
        assert!(decode(&geohash8(90.0, 180.0).unwrap()).unwrap().contains(90.0, 180.0));
    }
}
