mod common;

use geohop_core::geodesy::*;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = GeoCoord> {
    (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(lat, lon)| GeoCoord::new(lat, lon).unwrap())
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in coord(), b in coord()) {
        prop_assert_eq!(great_circle_distance(a, b), great_circle_distance(b, a));
    }

    #[test]
    fn triangle_inequality(a in coord(), b in coord(), c in coord()) {
        let ab = great_circle_distance(a, b).value();
        let bc = great_circle_distance(b, c).value();
        let ac = great_circle_distance(a, c).value();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn destination_round_trip(a in coord(), b in coord()) {
        prop_assume!(great_circle_distance(a, b).value() > 1e-3);
        let Ok(bearing) = initial_bearing(a, b) else { return Ok(()) };
        // Poles have no longitude; compare positions instead of degrees there.
        let back = destination_point(a, bearing, great_circle_distance(a, b));
        let err_deg = great_circle_distance(back, b).value() / EARTH_RADIUS_KM;
        prop_assert!(err_deg.to_degrees() < 1e-6, "{back} vs {b}");
    }

    #[test]
    fn interpolation_divides_distance(a in coord(), b in coord()) {
        let d = great_circle_distance(a, b).value();
        prop_assume!(d < HALF_CIRCUMFERENCE_KM - 1.0);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let p = geodesic_interpolate(a, b, t).unwrap();
            let got = great_circle_distance(a, p).value();
            prop_assert!((got - t * d).abs() <= 1e-9 * d.max(1.0), "t={t}: {got} vs {}", t * d);
        }
    }

    #[test]
    fn cross_track_matches_triple_product(a in coord(), b in coord(), p in coord()) {
        let Ok(side) = cross_track_side(a, b, p) else { return Ok(()) };
        let v = |g: GeoCoord| {
            let (la, lo) = (g.lat().to_radians(), g.lon().to_radians());
            [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
        };
        let (va, vb, vp) = (v(a), v(b), v(p));
        let cross = [
            va[1] * vb[2] - va[2] * vb[1],
            va[2] * vb[0] - va[0] * vb[2],
            va[0] * vb[1] - va[1] * vb[0],
        ];
        let triple = cross[0] * vp[0] + cross[1] * vp[1] + cross[2] * vp[2];
        if triple.abs() > 1e-9 {
            prop_assert_eq!(side as f64, triple.signum());
        }
    }
}

#[test]
fn destination_example_round_trip() {
    let origin = GeoCoord::new(10.0, 10.0).unwrap();
    let d = Kilometers::new(1234.0).unwrap();
    let p = destination_point(origin, Azimuth::new(37.0), d);
    assert!((great_circle_distance(origin, p).value() - 1234.0).abs() < 1e-9);
    assert!((initial_bearing(origin, p).unwrap().degrees() - 37.0).abs() < 1e-9);
}
