use cityforge_core::geometry::{
    aabb_intersection_area, aabb_of, is_simple, polygon_intersection_area, signed_area, triangulate, Aabb,
};
use cityforge_testkit::{self as kit, rect, v, RASTER_CELL};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn is_simple_agrees_with_brute_force() {
    let mut rng = kit::rng(3);
    let mut simple = 0;
    for _ in 0..1000 {
        let poly = kit::random_ngon(&mut rng, 12);
        let expected = kit::brute_force_is_simple(&poly);
        simple += expected as usize;
        assert_eq!(is_simple(&poly), expected, "{poly:?}");
    }
    // Random 12-gons are nearly always tangled; also check simple ones.
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1.0..30.0), rng.random_range(1.0..30.0));
        let poly = kit::random_shape(&mut rng, w, h);
        assert_eq!(is_simple(&poly), kit::brute_force_is_simple(&poly), "{poly:?}");
        simple += 1;
    }
    assert!(simple >= 1000);
}

#[test]
fn bowtie_and_square() {
    assert!(!is_simple(&[v(0.0, 0.0), v(10.0, 10.0), v(10.0, 0.0), v(0.0, 10.0)]));
    assert!(is_simple(&rect(0.0, 0.0, 22.0, 22.0)));
    assert_eq!(signed_area(&rect(0.0, 0.0, 22.0, 22.0)), 484.0);
}

#[test]
fn aabb_examples() {
    let sq = aabb_of(&rect(0.0, 0.0, 22.0, 22.0));
    assert_eq!((sq.x_min, sq.x_max, sq.y_min, sq.y_max), (0.0, 22.0, 0.0, 22.0));
    let l = [v(0.0, 0.0), v(4.0, 0.0), v(4.0, 1.0), v(1.0, 1.0), v(1.0, 3.0), v(0.0, 3.0)];
    let b = aabb_of(&l);
    assert_eq!((b.x_min, b.x_max, b.y_min, b.y_max), (0.0, 4.0, 0.0, 3.0));
    let a = Aabb { x_min: 0.0, x_max: 2.0, y_min: 0.0, y_max: 2.0 };
    let c = Aabb { x_min: 1.0, x_max: 3.0, y_min: 1.0, y_max: 3.0 };
    let exact = aabb_intersection_area(&a, &c);
    assert_eq!(exact, 1.0);
    assert!((kit::raster_aabb_intersection(&a, &c, RASTER_CELL) - exact).abs() <= 0.02 * exact);
    let far = Aabb { x_min: 5.0, x_max: 6.0, y_min: 5.0, y_max: 6.0 };
    assert_eq!(aabb_intersection_area(&a, &far), 0.0);
    assert_eq!(aabb_intersection_area(&a, &a), 4.0);
}

#[test]
fn intersection_area_matches_raster() {
    let mut rng = kit::rng(5);
    for _ in 0..200 {
        let s: [f64; 4] = std::array::from_fn(|_| rng.random_range(4.0..20.0));
        let a = kit::random_shape(&mut rng, s[0], s[1]);
        let (dx, dy) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let b: Vec<_> = kit::random_shape(&mut rng, s[2], s[3])
            .into_iter()
            .map(|p| v(p.x + dx, p.y + dy))
            .collect();
        let exact = polygon_intersection_area(&a, &b);
        let raster = kit::raster_intersection(&a, &b, RASTER_CELL);
        assert!((exact - raster).abs() <= 0.02 * raster.max(1.0), "{exact} vs {raster}");
    }
}

proptest! {
    #[test]
    fn triangulation_covers_polygon(seed in any::<u64>()) {
        let mut rng = kit::rng(seed);
        let poly = kit::random_shape(&mut rng, 17.0, 9.0);
        let tris = triangulate(&poly).unwrap();
        prop_assert_eq!(tris.len(), poly.len() - 2);
        let total: f64 = tris.iter().map(|t| signed_area(&[poly[t[0]], poly[t[1]], poly[t[2]]])).sum();
        prop_assert!((total - signed_area(&poly)).abs() < 1e-9 * signed_area(&poly).max(1.0));
        for t in &tris {
            prop_assert!(signed_area(&[poly[t[0]], poly[t[1]], poly[t[2]]]) > 0.0);
        }
    }

    #[test]
    fn intersection_is_symmetric_and_bounded(seed in any::<u64>(), dx in -15.0..15.0f64, dy in -15.0..15.0f64) {
        let mut rng = kit::rng(seed);
        let a = kit::random_shape(&mut rng, 12.0, 12.0);
        let b: Vec<_> = kit::random_shape(&mut rng, 10.0, 14.0).into_iter().map(|p| v(p.x + dx, p.y + dy)).collect();
        let ab = polygon_intersection_area(&a, &b);
        let ba = polygon_intersection_area(&b, &a);
        prop_assert!((ab - ba).abs() < 1e-6);
        prop_assert!(ab >= 0.0 && ab <= signed_area(&a).min(signed_area(&b)) + 1e-6);
        prop_assert!(ab <= aabb_intersection_area(&aabb_of(&a), &aabb_of(&b)) + 1e-6);
        prop_assert!((polygon_intersection_area(&a, &a) - signed_area(&a)).abs() < 1e-6);
    }
}
