use proptest::prelude::*;

use pqflex::io::{polygon_from_csv, polygon_from_json, polygon_to_csv, polygon_to_json};
use pqflex::lp;
use pqflex::polytope::{
    approx_error, convex_hull, directed_hausdorff, fill_factor, intersect, minkowski_sum, polygon_from_system,
    project_to_plane, LinearSystem, OrderHeuristic, Polygon2D,
};
use pqflex::uncertainty::{quantile_margin, scenario_margin, EmpiricalDistribution};

fn cloud(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(prop::array::uniform2(-10.0f64..10.0), n)
}

/// Convex polygons with a nontrivial area.
fn polygon() -> impl Strategy<Value = Polygon2D> {
    cloud(3..30).prop_filter_map("degenerate hull", |pts| {
        let p = convex_hull(&pts).ok()?;
        (p.area() > 1e-3).then_some(p)
    })
}

fn shrink_towards_centroid(p: &Polygon2D, s: f64) -> Polygon2D {
    let c = p.centroid();
    Polygon2D { vertices: p.vertices.iter().map(|v| [c[0] + s * (v[0] - c[0]), c[1] + s * (v[1] - c[1])]).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn metrics_stay_in_range(a in polygon(), r in polygon()) {
        let phi = fill_factor(&a, &r).unwrap();
        let delta = approx_error(&a, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&phi));
        prop_assert!((0.0..=1.0).contains(&delta));
        prop_assert!((fill_factor(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fill_factor_grows_with_the_region(a in polygon(), r in polygon(), s in 0.05f64..0.95) {
        let inner = shrink_towards_centroid(&a, s);
        prop_assert!(fill_factor(&inner, &r).unwrap() <= fill_factor(&a, &r).unwrap() + 1e-9);
    }

    #[test]
    fn intersection_lies_in_both(a in polygon(), b in polygon()) {
        if let Ok(i) = intersect(&a, &b) {
            prop_assert!(directed_hausdorff(&i, &a) < 1e-7);
            prop_assert!(directed_hausdorff(&i, &b) < 1e-7);
            prop_assert!(i.area() <= a.area().min(b.area()) + 1e-9);
        }
    }

    #[test]
    fn minkowski_sum_matches_the_hull_of_vertex_sums(a in polygon(), b in polygon()) {
        let sum = minkowski_sum(&[a.clone(), b.clone()]).unwrap();
        let pairs: Vec<[f64; 2]> =
            a.vertices.iter().flat_map(|u| b.vertices.iter().map(move |v| [u[0] + v[0], u[1] + v[1]])).collect();
        let hull = convex_hull(&pairs).unwrap();
        prop_assert!((sum.area() - hull.area()).abs() < 1e-7 * hull.area().max(1.0));
        prop_assert!(directed_hausdorff(&sum, &hull) < 1e-7);
    }

    #[test]
    fn halfplanes_rebuild_the_polygon(p in polygon()) {
        let rows = p.halfplanes();
        let sys = LinearSystem::new(
            rows.iter().map(|(n, _)| n.to_vec()).collect(),
            rows.iter().map(|(_, c)| *c).collect(),
            vec!["p".into(), "q".into()],
        ).unwrap();
        let back = polygon_from_system(&sys).unwrap();
        prop_assert!(directed_hausdorff(&back, &p) < 1e-7 && directed_hausdorff(&p, &back) < 1e-7);
    }

    #[test]
    fn polygon_files_round_trip_exactly(pts in cloud(0..40)) {
        let p = Polygon2D { vertices: pts };
        prop_assert_eq!(&polygon_from_csv(&polygon_to_csv(&p)).unwrap(), &p);
        prop_assert_eq!(&polygon_from_json(&polygon_to_json(&p).unwrap()).unwrap(), &p);
    }

    #[test]
    fn quantile_is_monotone_in_epsilon(
        samples in prop::collection::vec(0.0f64..1.0, 1..60),
        e1 in 0.001f64..0.999,
        e2 in 0.001f64..0.999,
    ) {
        let d = EmpiricalDistribution::new("pv", samples, "").unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(quantile_margin(&d, lo, 1.0).unwrap() <= quantile_margin(&d, hi, 1.0).unwrap());
    }

    #[test]
    fn scenario_margin_is_a_sample_and_reproducible(
        samples in prop::collection::vec(0.0f64..1.0, 1..60),
        seed in any::<u64>(),
    ) {
        let d = EmpiricalDistribution::new("pv", samples.clone(), "").unwrap();
        let m = scenario_margin(&d, 0.1, 0.1, seed, 1.0).unwrap();
        prop_assert_eq!(m, scenario_margin(&d, 0.1, 0.1, seed, 1.0).unwrap());
        prop_assert!(samples.contains(&m));
    }
}

/// Bounded system around the origin in `n` variables.
fn system() -> impl Strategy<Value = LinearSystem> {
    (3usize..=5).prop_flat_map(|n| {
        let rows = prop::collection::vec((prop::collection::vec(-1.0f64..1.0, n), 0.2f64..2.0), 2..12);
        (Just(n), rows).prop_map(|(n, extra)| {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for j in 0..n {
                for s in [1.0, -1.0] {
                    let mut r = vec![0.0; n];
                    r[j] = s;
                    a.push(r);
                    b.push(3.0);
                }
            }
            for (r, c) in extra {
                a.push(r);
                b.push(c);
            }
            LinearSystem::new(a, b, (0..n).map(|j| format!("x{j}")).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// Every vertex of the projection lifts to a feasible point, and the
    /// projection of any feasible point lies in the polygon.
    #[test]
    fn projection_is_exact_on_small_systems(sys in system(), probe in prop::array::uniform2(-3.0f64..3.0)) {
        let (plane, _) = project_to_plane(&sys, &["x0", "x1"], &OrderHeuristic::MinProduct).unwrap();
        let poly = polygon_from_system(&plane).unwrap();
        for v in &poly.vertices {
            let lifted = sys.fix("x0", v[0]).unwrap().fix("x1", v[1]).unwrap();
            let flat: Vec<f64> = lifted.a.iter().flatten().copied().collect();
            let relaxed: Vec<f64> = lifted.b.iter().map(|b| b + 1e-7).collect();
            prop_assert!(lp::feasible_point(&flat, &relaxed, lifted.nvars()).is_ok(), "vertex {:?} does not lift", v);
        }
        let fixed = sys.fix("x0", probe[0]).unwrap().fix("x1", probe[1]).unwrap();
        if fixed.feasible_point().is_some() {
            prop_assert!(poly.contains(probe, 1e-7));
        }
    }

    #[test]
    fn elimination_order_does_not_change_the_region(sys in system()) {
        let (a, _) = project_to_plane(&sys, &["x0", "x1"], &OrderHeuristic::MinProduct).unwrap();
        let (b, _) = project_to_plane(&sys, &["x0", "x1"], &OrderHeuristic::AsListed).unwrap();
        let pa = polygon_from_system(&a).unwrap();
        let pb = polygon_from_system(&b).unwrap();
        prop_assert!(directed_hausdorff(&pa, &pb) < 1e-7 && directed_hausdorff(&pb, &pa) < 1e-7);
    }
}
