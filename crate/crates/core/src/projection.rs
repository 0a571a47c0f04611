//! WGS84 longitude/latitude to UTM, via the sixth-order Krüger series.

use crate::error::{Error, Result};
use crate::geom::Coord;
use crate::graph::{EdgeGeom, Multigraph};

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;
const K0: f64 = 0.9996;
const FALSE_EASTING: f64 = 500_000.0;
const FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;
const BANDS: &[u8] = b"CDEFGHJKLMNPQRSTUVWXX";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UtmZone {
    pub number: u32,
    pub band: char,
}

impl UtmZone {
    pub fn north(self) -> bool {
        self.band >= 'N'
    }

    pub fn central_meridian(self) -> f64 {
        f64::from(self.number) * 6.0 - 183.0
    }

    pub fn tag(self) -> String {
        format!("UTM {}{}", self.number, self.band)
    }
}

fn check_range(lon: f64, lat: f64) -> Result<()> {
    if !(-180.0..=180.0).contains(&lon) || !(-80.0..=84.0).contains(&lat) {
        return Err(Error::CoordinateRange { lon, lat });
    }
    Ok(())
}

/// Zone containing `(lon, lat)`, including the Norway and Svalbard exceptions.
pub fn zone_for(lon: f64, lat: f64) -> Result<UtmZone> {
    check_range(lon, lat)?;
    let mut number = (((lon + 180.0) / 6.0).floor() as u32 + 1).min(60);
    if (56.0..64.0).contains(&lat) && (3.0..12.0).contains(&lon) {
        number = 32;
    }
    if (72.0..=84.0).contains(&lat) && lon >= 0.0 && lon < 42.0 {
        number = match lon {
            l if l < 9.0 => 31,
            l if l < 21.0 => 33,
            l if l < 33.0 => 35,
            _ => 37,
        };
    }
    let band_idx = (((lat + 80.0) / 8.0).floor() as usize).min(BANDS.len() - 1);
    Ok(UtmZone {
        number,
        band: BANDS[band_idx] as char,
    })
}

struct Series {
    rect_a: f64,
    alpha: [f64; 6],
    ecc_term: f64,
}

fn series() -> Series {
    let n = WGS84_F / (2.0 - WGS84_F);
    let (n2, n3) = (n * n, n * n * n);
    let (n4, n5, n6) = (n3 * n, n3 * n2, n3 * n3);
    let rect_a = WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    let alpha = [
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0
            + 7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
            - 1_983_433.0 * n6 / 1_935_360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0
            + 167_603.0 * n6 / 181_440.0,
        49561.0 * n4 / 161_280.0 - 179.0 * n5 / 168.0 + 6_601_661.0 * n6 / 7_257_600.0,
        34729.0 * n5 / 80640.0 - 3_418_889.0 * n6 / 1_995_840.0,
        212_378_941.0 * n6 / 319_334_400.0,
    ];
    Series {
        rect_a,
        alpha,
        ecc_term: 2.0 * n.sqrt() / (1.0 + n),
    }
}

/// Projects one position into the given zone. Returns `(easting, northing)` in metres.
pub fn to_utm(lon: f64, lat: f64, zone: UtmZone) -> Result<Coord> {
    check_range(lon, lat)?;
    let s = series();
    let phi = lat.to_radians();
    let lam = (lon - zone.central_meridian()).to_radians();
    let sin_phi = phi.sin();
    let t = (sin_phi.atanh() - s.ecc_term * (s.ecc_term * sin_phi).atanh()).sinh();
    let xi = t.atan2(lam.cos());
    let eta = (lam.sin() / (1.0 + t * t).sqrt()).atanh();
    let (mut e, mut n) = (eta, xi);
    for (j, a) in s.alpha.iter().enumerate() {
        let k = 2.0 * (j as f64 + 1.0);
        e += a * (k * xi).cos() * (k * eta).sinh();
        n += a * (k * xi).sin() * (k * eta).cosh();
    }
    let easting = FALSE_EASTING + K0 * s.rect_a * e;
    let mut northing = K0 * s.rect_a * n;
    if !zone.north() {
        northing += FALSE_NORTHING_SOUTH;
    }
    Ok(Coord::new(easting, northing))
}

/// Projects a longitude/latitude graph into the UTM zone of its node centroid.
pub fn project_wgs_to_utm(g: &Multigraph) -> Result<Multigraph> {
    if let Some(tag) = &g.crs_tag {
        return Err(Error::AlreadyProjected(tag.clone()));
    }
    let mut out = g.clone();
    if g.nodes.is_empty() {
        return Ok(out);
    }
    let (mut min_zone, mut max_zone) = (u32::MAX, 0);
    let (mut sx, mut sy) = (0.0, 0.0);
    for node in g.nodes.values() {
        let z = zone_for(node.x, node.y)?;
        min_zone = min_zone.min(z.number);
        max_zone = max_zone.max(z.number);
        sx += node.x;
        sy += node.y;
    }
    if max_zone - min_zone > 1 {
        return Err(Error::ZoneSpan { min_zone, max_zone });
    }
    let count = g.nodes.len() as f64;
    let zone = zone_for(sx / count, sy / count)?;
    let project = |c: Coord| to_utm(c.x, c.y, zone);
    for node in out.nodes.values_mut() {
        let p = project(node.coord())?;
        node.x = p.x;
        node.y = p.y;
    }
    for edge in out.edges.values_mut() {
        if let Some(geom) = &edge.geom {
            let points = geom
                .points
                .iter()
                .map(|c| project(*c))
                .collect::<Result<Vec<_>>>()?;
            edge.geom = Some(EdgeGeom::new(points));
        }
    }
    out.crs_tag = Some(zone.tag());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Expected values from an independent implementation of the Snyder (USGS)
    // transverse Mercator series.
    const ORACLE: [((f64, f64), u32, (f64, f64)); 4] = [
        ((-0.1276, 51.5072), 30, (699_330.9840, 5_710_142.0671)),
        ((3.0, 45.0), 31, (500_000.0, 4_982_950.4005)),
        ((151.2093, -33.8688), 56, (334_368.6336, 6_250_948.3453)),
        ((-73.9857, 40.7484), 18, (585_628.4091, 4_511_322.4477)),
    ];

    #[test]
    fn equator_origin() {
        let z = zone_for(0.0, 0.0).unwrap();
        assert_eq!(z.tag(), "UTM 31N");
        let p = to_utm(0.0, 0.0, z).unwrap();
        assert!((p.x - 166_021.44).abs() < 0.01, "{}", p.x);
        assert!(p.y.abs() < 0.01);
    }

    #[test]
    fn matches_snyder_oracle() {
        for ((lon, lat), number, (e, n)) in ORACLE {
            let z = zone_for(lon, lat).unwrap();
            assert_eq!(z.number, number);
            let p = to_utm(lon, lat, z).unwrap();
            assert!((p.x - e).abs() < 0.01, "{lon},{lat}: {} vs {e}", p.x);
            assert!((p.y - n).abs() < 0.01, "{lon},{lat}: {} vs {n}", p.y);
        }
        assert_eq!(zone_for(-0.1276, 51.5072).unwrap().tag(), "UTM 30U");
    }

    #[test]
    fn zone_exceptions() {
        assert_eq!(zone_for(5.0, 60.0).unwrap().number, 32);
        assert_eq!(zone_for(10.0, 78.0).unwrap().number, 33);
        assert_eq!(zone_for(180.0, 0.0).unwrap().number, 60);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut g = Multigraph::new();
        g.add_node("a", 200.0, 10.0);
        assert!(matches!(project_wgs_to_utm(&g), Err(Error::CoordinateRange { .. })));

        let mut g = Multigraph::new();
        g.add_node("a", 0.5, 10.0);
        g.add_node("b", 13.0, 10.0);
        assert!(matches!(project_wgs_to_utm(&g), Err(Error::ZoneSpan { .. })));

        let mut g = Multigraph::new();
        g.add_node("a", 0.5, 10.0);
        let projected = project_wgs_to_utm(&g).unwrap();
        assert!(matches!(
            project_wgs_to_utm(&projected),
            Err(Error::AlreadyProjected(_))
        ));
    }

    #[test]
    fn preserves_counts() {
        let mut g = Multigraph::new();
        g.add_node("a", -0.13, 51.50);
        g.add_node("b", -0.12, 51.51);
        let geom = EdgeGeom::new(vec![
            Coord::new(-0.13, 51.50),
            Coord::new(-0.125, 51.505),
            Coord::new(-0.12, 51.51),
        ]);
        g.add_edge("a", "b", Some(geom));
        let p = project_wgs_to_utm(&g).unwrap();
        assert_eq!(p.node_count(), 2);
        assert_eq!(p.edge_count(), 1);
        assert_eq!(p.edges.values().next().unwrap().geom.as_ref().unwrap().points.len(), 3);
        assert_eq!(p.crs_tag.as_deref(), Some("UTM 30U"));
        assert!(p.validate().is_empty());
    }
}
