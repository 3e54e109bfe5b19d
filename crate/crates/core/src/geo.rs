//! Solar geometry and great-circle distances.
//!
//! The sun's position follows the NOAA low-accuracy algorithm (Julian
//! century polynomials for declination and the equation of time). Sunrise
//! and sunset are the crossings of the −0.833° altitude that accounts for
//! standard refraction and the solar radius. Solar time used for window
//! bookkeeping is *mean* solar time, i.e. UTC shifted by longitude only.

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EchoRecord;

/// Mean Earth radius (IUGG), metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;
pub const METERS_PER_NM: f64 = 1852.0;
/// Sun altitude at apparent sunrise/sunset, degrees.
pub const SUNRISE_ALTITUDE_DEG: f64 = -0.833;

const MIN_YEAR: i32 = 1950;
const MAX_YEAR: i32 = 2100;

/// A WGS84-ish position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    /// Builds a point; latitude must lie in [-90, 90], longitude is wrapped
    /// into [-180, 180).
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Domain(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() {
            return Err(Error::Domain(format!("longitude {lon} is not finite")));
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360.0 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// A sunrise or sunset instant, or the reason it does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SunEvent {
    At(DateTime<Utc>),
    /// Sun stays above the horizon all day.
    PolarDay,
    /// Sun stays below the horizon all day.
    PolarNight,
}

impl SunEvent {
    pub fn time(&self) -> Option<DateTime<Utc>> {
        match self {
            SunEvent::At(t) => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolarDay {
    pub date: NaiveDate,
    pub sunrise_utc: SunEvent,
    pub sunset_utc: SunEvent,
    pub noon_utc: DateTime<Utc>,
}

/// A timestamp expressed in local mean solar time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SolarTime(pub NaiveDateTime);

impl SolarTime {
    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    /// Fractional hour of the solar day, in [0, 24).
    pub fn hour_of_day(&self) -> f64 {
        let secs = self.0.time().signed_duration_since(NaiveTime::MIN).num_milliseconds();
        secs as f64 / 3_600_000.0
    }
}

/// Sun position terms shared by the elevation and sunrise computations.
struct SunTerms {
    declination_rad: f64,
    /// Equation of time, minutes.
    eq_time_min: f64,
}

fn julian_day(t: DateTime<Utc>) -> f64 {
    t.timestamp_millis() as f64 / 86_400_000.0 + 2_440_587.5
}

fn sun_terms(t: DateTime<Utc>) -> SunTerms {
    let jc = (julian_day(t) - 2_451_545.0) / 36_525.0;
    let mean_long = (280.466_46 + jc * (36_000.769_83 + jc * 0.000_303_2)).rem_euclid(360.0);
    let mean_anom = 357.529_11 + jc * (35_999.050_29 - 0.000_153_7 * jc);
    let ecc = 0.016_708_634 - jc * (0.000_042_037 + 0.000_000_126_7 * jc);
    let m = mean_anom.to_radians();
    let center = m.sin() * (1.914_602 - jc * (0.004_817 + 0.000_014 * jc))
        + (2.0 * m).sin() * (0.019_993 - 0.000_101 * jc)
        + (3.0 * m).sin() * 0.000_289;
    let true_long = mean_long + center;
    let omega = (125.04 - 1_934.136 * jc).to_radians();
    let app_long = true_long - 0.005_69 - 0.004_78 * omega.sin();
    let mean_obliq =
        23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.000_59 - jc * 0.001_813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.002_56 * omega.cos()).to_radians();
    let declination_rad = (obliq.sin() * app_long.to_radians().sin()).asin();

    let y = (obliq / 2.0).tan().powi(2);
    let l0 = mean_long.to_radians();
    let eq = y * (2.0 * l0).sin() - 2.0 * ecc * m.sin()
        + 4.0 * ecc * y * m.sin() * (2.0 * l0).cos()
        - 0.5 * y * y * (4.0 * l0).sin()
        - 1.25 * ecc * ecc * (2.0 * m).sin();
    SunTerms {
        declination_rad,
        eq_time_min: 4.0 * eq.to_degrees(),
    }
}

fn check_year(t: DateTime<Utc>) -> Result<()> {
    if (MIN_YEAR..=MAX_YEAR).contains(&t.year()) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "timestamp {t} outside supported years {MIN_YEAR}-{MAX_YEAR}"
        )))
    }
}

/// Solar elevation angle in degrees (no refraction correction).
pub fn sun_inclination(p: GeoPoint, t: DateTime<Utc>) -> Result<f64> {
    check_year(t)?;
    let terms = sun_terms(t);
    let minutes = t.num_seconds_from_midnight_f64() / 60.0;
    let true_solar = (minutes + terms.eq_time_min + 4.0 * p.lon()).rem_euclid(1440.0);
    let hour_angle = (true_solar / 4.0 - 180.0).to_radians();
    let lat = p.lat().to_radians();
    let decl = terms.declination_rad;
    let cos_zenith = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
    Ok(90.0 - cos_zenith.clamp(-1.0, 1.0).acos().to_degrees())
}

trait SecondsOfDay {
    fn num_seconds_from_midnight_f64(&self) -> f64;
}

impl SecondsOfDay for DateTime<Utc> {
    fn num_seconds_from_midnight_f64(&self) -> f64 {
        let ms = self
            .time()
            .signed_duration_since(NaiveTime::MIN)
            .num_milliseconds();
        ms as f64 / 1000.0
    }
}

fn midnight_utc(date: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&date.and_time(NaiveTime::MIN))
}

fn minutes_after(base: DateTime<Utc>, minutes: f64) -> DateTime<Utc> {
    base + Duration::milliseconds((minutes * 60_000.0).round() as i64)
}

/// Sunrise hour angle in degrees, or the polar marker when the sun never
/// crosses the sunrise altitude.
fn sunrise_hour_angle(lat_deg: f64, decl: f64) -> std::result::Result<f64, SunEvent> {
    let lat = lat_deg.to_radians();
    let arg = SUNRISE_ALTITUDE_DEG.to_radians().sin() / (lat.cos() * decl.cos())
        - lat.tan() * decl.tan();
    if arg > 1.0 {
        Err(SunEvent::PolarNight)
    } else if arg < -1.0 {
        Err(SunEvent::PolarDay)
    } else {
        Ok(arg.acos().to_degrees())
    }
}

/// Sunrise, sunset and solar noon for the solar day `date` at `p`.
///
/// Each event is refined twice by re-evaluating the sun terms at the
/// previous estimate, which keeps errors well below a minute.
pub fn solar_day(p: GeoPoint, date: NaiveDate) -> Result<SolarDay> {
    let base = midnight_utc(date);
    check_year(base)?;
    let lon = p.lon();

    let noon_at = |t: DateTime<Utc>| 720.0 - 4.0 * lon - sun_terms(t).eq_time_min;
    let mut noon_min = noon_at(minutes_after(base, 720.0 - 4.0 * lon));
    noon_min = noon_at(minutes_after(base, noon_min));
    let noon_utc = minutes_after(base, noon_min);

    let event = |sign: f64| -> SunEvent {
        let mut estimate = noon_utc;
        let mut out = SunEvent::PolarDay;
        for _ in 0..3 {
            let terms = sun_terms(estimate);
            match sunrise_hour_angle(p.lat(), terms.declination_rad) {
                Ok(ha) => {
                    let at = 720.0 - 4.0 * lon - terms.eq_time_min + sign * 4.0 * ha;
                    estimate = minutes_after(base, at);
                    out = SunEvent::At(estimate);
                }
                Err(marker) => return marker,
            }
        }
        out
    };

    let (sunrise_utc, sunset_utc) = match (event(-1.0), event(1.0)) {
        (SunEvent::At(r), SunEvent::At(s)) => (SunEvent::At(r), SunEvent::At(s)),
        // near the polar boundary one refinement may cross over; report the
        // day as polar rather than returning a half-defined day
        (SunEvent::At(_), m) | (m, _) => (m, m),
    };
    Ok(SolarDay {
        date,
        sunrise_utc,
        sunset_utc,
        noon_utc,
    })
}

/// Local mean solar time: UTC shifted by `lon / 15` hours.
pub fn to_solar_time(lon: f64, t: DateTime<Utc>) -> SolarTime {
    let offset = Duration::milliseconds((lon * 240_000.0).round() as i64);
    SolarTime(t.naive_utc() + offset)
}

/// Inverse of [`to_solar_time`].
pub fn from_solar_time(lon: f64, t: SolarTime) -> DateTime<Utc> {
    let offset = Duration::milliseconds((lon * 240_000.0).round() as i64);
    Utc.from_utc_datetime(&(t.0 - offset))
}

/// Great-circle distance in nautical miles (haversine, spherical Earth).
pub fn haversine_nm(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat().to_radians(), b.lat().to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon() - a.lon()).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let c = 2.0 * h.sqrt().min(1.0).asin();
    EARTH_RADIUS_M * c / METERS_PER_NM
}

/// Speed in knots between two positions observed at two instants.
pub fn speed_between(
    a: GeoPoint,
    ta: DateTime<Utc>,
    b: GeoPoint,
    tb: DateTime<Utc>,
) -> Result<f64> {
    let elapsed_ms = (tb - ta).num_milliseconds();
    if elapsed_ms <= 0 {
        return Err(Error::Domain(format!(
            "non-positive elapsed time between {ta} and {tb}"
        )));
    }
    Ok(haversine_nm(a, b) / (elapsed_ms as f64 / 3_600_000.0))
}

/// Buoy speed between two consecutive records of the same buoy.
pub fn speed_knots(prev: &EchoRecord, next: &EchoRecord) -> Result<f64> {
    if prev.buoy_id != next.buoy_id {
        return Err(Error::Domain(format!(
            "speed between different buoys {} and {}",
            prev.buoy_id, next.buoy_id
        )));
    }
    speed_between(prev.position, prev.t_utc, next.position, next.t_utc)
}
