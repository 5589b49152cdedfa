use lcbounds::measure_grid::IndexSpace;
use lcbounds::metric_entropy::{
    covering_number_exact, covering_number_upper, cover_thresholds, entropy_profile, greedy_cover,
    packing_number_lower, EntropyProfile,
};
use proptest::prelude::*;

/// Random point clouds in one to three dimensions with `ρ = ‖t−s‖^α`.
fn space(max_points: usize) -> impl Strategy<Value = IndexSpace> {
    (1usize..=3, 1usize..=max_points, 0.2f64..=1.0).prop_flat_map(|(dim, n, alpha)| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), n)
            .prop_map(move |coords| IndexSpace::from_coords(coords, alpha).unwrap())
    })
}

fn brute_force_radius(s: &IndexSpace) -> f64 {
    (0..s.len())
        .map(|i| (0..s.len()).map(|j| s.raw_distance(i, j)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn semi_distance_axioms(s in space(30)) {
        let n = s.len();
        for i in 0..n {
            prop_assert_eq!(s.distance(i, i), 0.0);
            for j in 0..n {
                prop_assert!(s.distance(i, j) >= 0.0);
                prop_assert_eq!(s.distance(i, j), s.distance(j, i));
            }
        }
        prop_assert!(s.max_distance_from(s.center()) <= 1.0);
    }

    #[test]
    fn one_center_is_optimal(s in space(60)) {
        // all points at distance zero: the radius is stored as 1
        let radius = match brute_force_radius(&s) {
            0.0 => 1.0,
            r => r,
        };
        prop_assert!((s.radius() - radius).abs() <= 1e-12 * radius.max(1.0));
        for t in 0..s.len() {
            prop_assert!(s.max_distance_from(t) >= s.max_distance_from(s.center()) - 1e-15);
        }
    }

    #[test]
    fn renormalizing_is_idempotent(s in space(30)) {
        let again = s.renormalized();
        for (a, b) in s.distances().iter().zip(again.distances()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn sandwich_and_greedy_ratio(s in space(18), eps in 0.01f64..1.1) {
        let exact = covering_number_exact(&s, eps, 24).unwrap();
        let upper = covering_number_upper(&s, eps);
        prop_assert!(packing_number_lower(&s, eps) <= exact);
        prop_assert!(exact <= upper);
        prop_assert!(upper <= s.len());
        let greedy = greedy_cover(&s, eps).len();
        prop_assert!(greedy as f64 <= exact as f64 * (1.0 + (s.len() as f64).ln()));
        if eps >= 1.0 {
            prop_assert_eq!(upper, 1);
        }
    }

    #[test]
    fn upper_cover_is_monotone(s in space(40), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(covering_number_upper(&s, lo) >= covering_number_upper(&s, hi));
    }

    #[test]
    fn greedy_cover_is_deterministic_and_covers(s in space(40), eps in 0.0f64..1.0) {
        let a = greedy_cover(&s, eps);
        prop_assert_eq!(&a, &greedy_cover(&s, eps));
        for t in 0..s.len() {
            prop_assert!(a.iter().any(|c| s.distance(*c, t) <= eps));
        }
    }

    #[test]
    fn profile_invariants(s in space(25)) {
        let profile = EntropyProfile::for_space(&s).unwrap();
        prop_assert_eq!(profile.cover_upper[0], 1.0);
        for w in profile.cover_upper.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        for (lo, up) in profile.pack_lower.iter().zip(&profile.cover_upper) {
            prop_assert!(lo <= up);
        }
        // spot checks against direct evaluation, on and between grid radii
        let step = (profile.eps_grid.len() / 6).max(1);
        for (e, up) in profile.eps_grid.iter().zip(&profile.cover_upper).step_by(step) {
            prop_assert_eq!(*up as usize, covering_number_upper(&s, *e));
        }
        let thresholds = cover_thresholds(&s);
        for e in thresholds.iter().step_by((thresholds.len() / 6).max(1)) {
            let between = e * 1.000_001;
            prop_assert!(profile.covering_at(between) >= covering_number_upper(&s, between) as f64);
        }
    }
}

#[test]
fn five_point_example() {
    let s = IndexSpace::from_coords((0..5).map(|i| vec![i as f64 * 0.25]).collect(), 1.0).unwrap();
    // ε = 0.3 on the raw scale, radius 0.5
    let eps = 0.3 / s.radius();
    assert_eq!(covering_number_upper(&s, eps), 2);
    assert_eq!(covering_number_exact(&s, eps, 24).unwrap(), 2);
    assert_eq!(greedy_cover(&s, eps).len(), 2);
}

#[test]
fn sixteen_point_grid_profile() {
    let s = IndexSpace::from_coords((0..16).map(|i| vec![i as f64 / 15.0]).collect(), 1.0).unwrap();
    let grid = [1.0, 0.5, 0.25, 0.125];
    let profile = entropy_profile(&s, &grid).unwrap();
    for (e, n) in grid.iter().zip(&profile.cover_upper) {
        // a ball of normalized radius ε spans raw length 2ε·radius
        let interval = (1.0 / (2.0 * e * s.radius())).ceil().max(1.0);
        assert!(*n <= 2.0 * interval && *n >= interval / 2.0, "eps {e}: {n} vs {interval}");
    }
}
