//! Coordinates on the WGS-84 sphere, great-circle distance, and weighted
//! spherical centroids.
//!
//! Everything downstream (clustering, voting, metrics) works in terms of
//! [`GeoPoint`] and kilometer distances produced here. All functions are pure
//! and the types are `Copy`, so values can be shared freely across threads.

use thiserror::Error;

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Error distance assigned to an estimation that produced no usable
/// coordinates: half of the Earth's circumference, by convention 20,039 km.
///
/// This is a scoring convention, not a geometric quantity; the spherical
/// antipodal distance with `EARTH_RADIUS_KM` is ≈ 20,015 km.
pub const MAX_ERROR_KM: f64 = 20_039.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoPointError {
    #[error("latitude {0} out of range [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("coordinate is not finite: {0}")]
    NotFinite(f64),
}

/// A latitude/longitude pair in degrees.
///
/// Latitude is validated to `[-90, 90]`; longitude is normalized to
/// `[-180, 180)` on construction so equal locations compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoPointError> {
        if !lat_deg.is_finite() {
            return Err(GeoPointError::NotFinite(lat_deg));
        }
        if !lon_deg.is_finite() {
            return Err(GeoPointError::NotFinite(lon_deg));
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(GeoPointError::LatitudeOutOfRange(lat_deg));
        }
        Ok(Self {
            lat: lat_deg,
            lon: normalize_lon(lon_deg),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Unit vector in Earth-centered coordinates.
    fn to_unit_vector(self) -> [f64; 3] {
        let lat = self.lat.to_radians();
        let lon = self.lon.to_radians();
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    fn from_unit_vector(v: [f64; 3]) -> Self {
        let lat = v[2].atan2((v[0] * v[0] + v[1] * v[1]).sqrt()).to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        Self {
            lat: lat.clamp(-90.0, 90.0),
            lon: normalize_lon(lon),
        }
    }
}

/// Wraps a longitude in degrees into `[-180, 180)`.
fn normalize_lon(lon_deg: f64) -> f64 {
    let mut lon = lon_deg % 360.0;
    if lon < -180.0 {
        lon += 360.0;
    } else if lon >= 180.0 {
        lon -= 360.0;
    }
    // -0.0 would break byte-stable formatting of outputs.
    if lon == 0.0 {
        lon = 0.0;
    }
    lon
}

/// A non-negative great-circle or error distance in kilometers, capped at
/// [`MAX_ERROR_KM`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DistanceKm(f64);

impl DistanceKm {
    /// Wraps a kilometer value, capping it at [`MAX_ERROR_KM`].
    ///
    /// Panics on NaN or negative input; distances only arise from
    /// [`haversine_km`] or the invalid-estimation penalty, so those would be
    /// programming errors.
    pub fn new(km: f64) -> Self {
        assert!(km.is_finite() && km >= 0.0, "invalid distance: {km}");
        Self(km.min(MAX_ERROR_KM))
    }

    pub fn km(self) -> f64 {
        self.0
    }
}

/// Great-circle distance between two points on a sphere of radius
/// [`EARTH_RADIUS_KM`].
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> DistanceKm {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();

    let sin_dlat = (dlat / 2.0).sin();
    let sin_dlon = (dlon / 2.0).sin();
    let h = sin_dlat * sin_dlat + lat_a.cos() * lat_b.cos() * sin_dlon * sin_dlon;
    // atan2 keeps precision near the antipode, where h.sqrt() approaches 1.
    let central = 2.0 * h.sqrt().atan2((1.0 - h.max(0.0)).max(0.0).sqrt());
    DistanceKm::new(EARTH_RADIUS_KM * central)
}

/// Weighted centroid of points on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub point: GeoPoint,
    /// True when the weighted vector sum cancelled out (antipodal inputs);
    /// `point` is then the first input point.
    pub degenerate: bool,
}

/// Weighted mean direction of the given points: each point becomes a 3-D unit
/// vector, the weight-scaled sum is normalized and converted back to degrees.
///
/// Unlike an arithmetic mean of latitudes and longitudes this is correct
/// across the antimeridian. Returns `None` for an empty slice.
pub fn spherical_centroid(points: &[(GeoPoint, u32)]) -> Option<Centroid> {
    let (first, _) = *points.first()?;
    let mut sum = [0.0f64; 3];
    for &(p, w) in points {
        let v = p.to_unit_vector();
        let w = f64::from(w);
        sum[0] += w * v[0];
        sum[1] += w * v[1];
        sum[2] += w * v[2];
    }
    let norm = (sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]).sqrt();
    if norm < 1e-12 {
        return Some(Centroid {
            point: first,
            degenerate: true,
        });
    }
    Some(Centroid {
        point: GeoPoint::from_unit_vector([sum[0] / norm, sum[1] / norm, sum[2] / norm]),
        degenerate: false,
    })
}
