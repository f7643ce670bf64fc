use horopca::baselines::{bsa_fit, pca_fit, pga_fit, tpca_fit};
use horopca::geometry::{
    busemann, ideal_to_lightlike, minkowski_bilinear, poincare_distance, to_hyperboloid,
    to_poincare, HyperboloidPoint, IdealPoint, LogConvention, MinkowskiVector, PoincarePoint,
};
use horopca::horopca::{fit, project_points, FitConfig};
use horopca::io::{distance_matrix, format_embeddings, parse_embeddings};
use horopca::projections::{busemann_vector, ComponentSet, HoroProjector};
use horopca::stats::{
    center, distance_variance, frechet_mean, frechet_variance, Dataset, FrechetConfig,
};
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Raw coordinates of a point with norm at most `max`.
fn coords(d: usize, max: f64) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0..1.0f64, d), 0.0..max).prop_map(|(v, r)| {
        let n = norm(&v);
        if n < 1e-6 {
            vec![0.0; v.len()]
        } else {
            v.iter().map(|x| x * r / n).collect()
        }
    })
}

fn point(d: usize, max: f64) -> impl Strategy<Value = PoincarePoint> {
    coords(d, max).prop_map(|c| PoincarePoint::new(c).unwrap())
}

fn direction(d: usize) -> impl Strategy<Value = IdealPoint> {
    prop::collection::vec(-1.0..1.0f64, d)
        .prop_filter("nonzero", |v| norm(v) > 1e-3)
        .prop_map(|v| IdealPoint::from_direction(&v).unwrap())
}

fn dataset(d: usize, n: std::ops::Range<usize>, max: f64) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(coords(d, max), n).prop_map(|rows| Dataset::from_rows(rows).unwrap())
}

/// Ideal points, base point and a projector that accepts them.
fn components(d: usize, k: usize) -> impl Strategy<Value = (ComponentSet, HoroProjector)> {
    (prop::collection::vec(direction(d), k), point(d, 0.7)).prop_filter_map(
        "independent",
        |(dirs, base)| {
            let cs = ComponentSet::new(dirs, base).ok()?;
            let p = HoroProjector::new(&cs).ok()?;
            Some((cs, p))
        },
    )
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..7).prop_flat_map(|d| (Just(d), 1..d))
}

fn mink(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

proptest! {
    #[test]
    fn triangle_inequality((x, y, z) in (2usize..7).prop_flat_map(|d| (point(d, 0.95), point(d, 0.95), point(d, 0.95)))) {
        let lhs = poincare_distance(&x, &z);
        prop_assert!(lhs <= poincare_distance(&x, &y) + poincare_distance(&y, &z) + 1e-9);
    }

    #[test]
    fn hyperboloid_distance_agrees((x, y) in (2usize..7).prop_flat_map(|d| (point(d, 0.9), point(d, 0.9)))) {
        let d = poincare_distance(&x, &y);
        // arccosh near 1 amplifies rounding in B; close pairs are covered by unit examples
        prop_assume!(d > 1e-3);
        let b = mink(to_hyperboloid(&x).coords(), to_hyperboloid(&y).coords());
        prop_assert!((d - (-b).acosh()).abs() <= 1e-9, "{d} vs {}", (-b).acosh());
    }

    #[test]
    fn busemann_decreases_at_unit_speed_toward_p(
        (x, p) in (2usize..7).prop_flat_map(|d| (point(d, 0.9), direction(d))),
        t in 0.0..4.0f64,
    ) {
        let xh = to_hyperboloid(&x).into_coords();
        let l = ideal_to_lightlike(&p).coords().to_vec();
        let c = mink(&xh, &l);
        let u: Vec<f64> = l.iter().zip(&xh).map(|(li, xi)| (li + c * xi) / c.abs()).collect();
        let g: Vec<f64> = xh.iter().zip(&u).map(|(xi, ui)| t.cosh() * xi + t.sinh() * ui).collect();
        let y = to_poincare(&HyperboloidPoint::from_timelike(&g).unwrap()).unwrap();
        prop_assert!((busemann(&p, &y) - (busemann(&p, &x) - t)).abs() <= 1e-8);
    }

    #[test]
    fn busemann_is_one_lipschitz(
        (x, y, p) in (2usize..7).prop_flat_map(|d| (point(d, 0.95), point(d, 0.95), direction(d))),
    ) {
        prop_assert!((busemann(&p, &x) - busemann(&p, &y)).abs() <= poincare_distance(&x, &y) + 1e-9);
    }

    #[test]
    fn future_timelike_pairs_have_negative_product(
        (s1, s2) in (1usize..7).prop_flat_map(|d| (prop::collection::vec(-5.0..5.0f64, d), prop::collection::vec(-5.0..5.0f64, d))),
        a in 1e-6..3.0f64,
        b in 1e-6..3.0f64,
    ) {
        let u: Vec<f64> = std::iter::once(norm(&s1) + a).chain(s1).collect();
        let v: Vec<f64> = std::iter::once(norm(&s2) + b).chain(s2).collect();
        let u = MinkowskiVector::new(u).unwrap();
        let v = MinkowskiVector::new(v).unwrap();
        prop_assert!(minkowski_bilinear(&u, &v) < 0.0);
    }

    #[test]
    fn busemann_preserved_and_distances_shrink(
        ((cs, proj), x, y) in dims().prop_flat_map(|(d, k)| (components(d, k), point(d, 0.9), point(d, 0.9))),
    ) {
        let (px, py) = (proj.project(&x).unwrap(), proj.project(&y).unwrap());
        for (a, b) in busemann_vector(&cs, &x).iter().zip(busemann_vector(&cs, &px)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert!(poincare_distance(&px, &py) <= poincare_distance(&x, &y) + 1e-9);
    }

    #[test]
    fn projection_is_constant_on_orbits(
        ((cs, proj), x, v) in dims()
            .prop_filter("room for a mirror", |(d, k)| k + 1 < *d)
            .prop_flat_map(|(d, k)| (components(d, k), point(d, 0.9), prop::collection::vec(-1.0..1.0f64, d))),
    ) {
        // a mirror fixing the base and every ideal point maps x to another point of its orbit
        let mut fixed: Vec<Vec<f64>> = cs.directions().iter().map(|p| p.coords().to_vec()).collect();
        fixed.push(cs.base().coords().to_vec());
        let mut w = v.clone();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for f in &fixed {
            let mut g = f.clone();
            for q in &basis {
                let c: f64 = q.iter().zip(&g).map(|(a, b)| a * b).sum();
                g.iter_mut().zip(q).for_each(|(gi, qi)| *gi -= c * qi);
            }
            let n = norm(&g);
            if n > 1e-9 {
                basis.push(g.iter().map(|x| x / n).collect());
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let n = norm(&w);
        prop_assume!(n > 1e-3);
        let w: Vec<f64> = w.iter().map(|x| x / n).collect();
        let c: f64 = w.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        let mirrored: Vec<f64> = x.coords().iter().zip(&w).map(|(xi, wi)| xi - 2.0 * c * wi).collect();
        let xm = PoincarePoint::new(mirrored).unwrap();
        let (a, b) = (proj.project(&x).unwrap(), proj.project(&xm).unwrap());
        for (u, v) in a.coords().iter().zip(b.coords()) {
            prop_assert!((u - v).abs() <= 1e-8, "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn projected_distances_do_not_depend_on_the_base(
        (dirs, b1, b2, x, y) in dims().prop_flat_map(|(d, k)| (
            prop::collection::vec(direction(d), k), point(d, 0.7), point(d, 0.7), point(d, 0.9), point(d, 0.9),
        )),
    ) {
        let p1 = ComponentSet::new(dirs.clone(), b1).and_then(|c| HoroProjector::new(&c));
        let p2 = ComponentSet::new(dirs, b2).and_then(|c| HoroProjector::new(&c));
        let (Ok(p1), Ok(p2)) = (p1, p2) else { return Ok(()) };
        let d1 = poincare_distance(&p1.project(&x).unwrap(), &p1.project(&y).unwrap());
        let d2 = poincare_distance(&p2.project(&x).unwrap(), &p2.project(&y).unwrap());
        prop_assert!((d1 - d2).abs() <= 1e-8);
    }

    #[test]
    fn embeddings_round_trip_exactly(data in (1usize..6).prop_flat_map(|d| dataset(d, 1..20, 0.999))) {
        let back = parse_embeddings(&format_embeddings(&data, false), false).unwrap();
        prop_assert_eq!(back, data);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn variances_survive_centering(data in (2usize..5).prop_flat_map(|d| dataset(d, 3..15, 0.8))) {
        let (c, _) = center(&data, &FrechetConfig::default()).unwrap();
        prop_assert!((frechet_variance(&c) - frechet_variance(&data)).abs() <= 1e-8);
        prop_assert!((distance_variance(&c) - distance_variance(&data)).abs() <= 1e-8);
        let (a, b) = (distance_matrix(&data), distance_matrix(&c));
        for i in 0..data.len() {
            for j in 0..data.len() {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn frechet_objective_never_increases(data in (2usize..5).prop_flat_map(|d| dataset(d, 2..15, 0.9))) {
        let r = frechet_mean(&data, &FrechetConfig::default());
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-13));
        }
    }

    #[test]
    fn projection_does_not_increase_distance_variance(
        ((cs, _), data) in dims().prop_flat_map(|(d, k)| (components(d, k), dataset(d, 2..15, 0.9))),
    ) {
        let projected = project_points(&cs, &data).unwrap();
        prop_assert!(distance_variance(&projected) <= distance_variance(&data) + 1e-8);
    }
}

fn centered(data: &Dataset) -> Dataset {
    center(data, &FrechetConfig::default()).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn baseline_transforms_contract(data in (3usize..5).prop_flat_map(|d| dataset(d, 6..14, 0.8)), seed in 0u64..100) {
        let data = centered(&data);
        let cfg = FitConfig { seed, restarts: 2, ..FitConfig::with_components(2) };
        let d0 = distance_matrix(&data);
        let models = [
            pca_fit(&data, 2).unwrap(),
            pga_fit(&data, &cfg).unwrap(),
            bsa_fit(&data, &cfg).unwrap(),
        ];
        for m in &models {
            let d1 = distance_matrix(&m.transform(&data).unwrap());
            for i in 0..data.len() {
                for j in 0..data.len() {
                    prop_assert!(d1.get(i, j) <= d0.get(i, j) + 1e-9, "{:?}", m.method);
                }
            }
        }
        for m in &models[1..] {
            let once = m.project(&data).unwrap();
            let twice = m.project(&once).unwrap();
            for (a, b) in once.points().iter().zip(twice.points()) {
                prop_assert!(poincare_distance(a, b) <= 1e-9);
            }
        }
        let t = tpca_fit(&data, 2, LogConvention::Standard).unwrap().transform(&data).unwrap();
        prop_assert!(t.points().iter().all(|p| p.norm() < 1.0));
    }

    #[test]
    fn explained_variance_is_capped(data in (3usize..5).prop_flat_map(|d| dataset(d, 6..14, 0.8)), seed in 0u64..100) {
        let data = centered(&data);
        let cfg = FitConfig { seed, restarts: 2, ..FitConfig::with_components(2) };
        let m = fit(&data, &cfg).unwrap();
        let total = distance_variance(&data);
        for e in &m.explained {
            prop_assert!(*e <= total + 1e-8, "{e} > {total}");
        }
    }
}
